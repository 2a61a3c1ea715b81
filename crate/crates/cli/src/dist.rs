use cgwt::OffspringDistribution;
use std::fs;

/// Parses `--dist`: `geometric`, `unary_binary` (with `--p`), `file:<path>`,
/// an inline JSON object in the serde layout of [`OffspringDistribution`], or
/// an inline JSON array of finite weights.
pub fn parse_dist(spec: &str, p: Option<f64>) -> Result<OffspringDistribution, String> {
    match spec {
        "geometric" => Ok(OffspringDistribution::geometric()),
        "unary_binary" => p
            .map(OffspringDistribution::unary_binary)
            .ok_or_else(|| "--dist unary_binary requires --p".to_string()),
        _ => {
            let text = match spec.strip_prefix("file:") {
                Some(path) => fs::read_to_string(path)
                    .map_err(|e| format!("--dist: cannot read {path}: {e}"))?,
                None => spec.to_string(),
            };
            from_json(text.trim()).map_err(|e| format!("--dist: {e}"))
        }
    }
}

fn from_json(text: &str) -> Result<OffspringDistribution, String> {
    if text.starts_with('[') {
        let weights: Vec<f64> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        return Ok(OffspringDistribution::finite(weights));
    }
    if text.starts_with('{') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    Err(format!(
        "expected geometric, unary_binary, file:<path> or inline JSON, got {text:?}"
    ))
}
