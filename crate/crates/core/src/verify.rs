//! Named end-to-end checks with machine-readable reports.
//!
//! Each check exercises one public surface of the crate at a fixed workload
//! and compares a single statistic against a threshold. The statistical
//! checks are seeded; the same seed gives the same report apart from the
//! wall-clock timings in `runtime_linearity`.

use crate::analysis::{
    degree_profile_deviation, ks_statistic, log_log_slope, median, process_closeness,
    rescaled_height,
};
use crate::encodings::{cyclic_shift, OrderedTree};
use crate::llt::llt_sweep;
use crate::offspring::{AlphaShift, OffspringDistribution};
use crate::sampler::{enumerate_exact, stream_rng, TreeSampler};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::time::Instant;

/// Names accepted by [`run_check`], in execution order.
pub const CHECKS: [&str; 11] = [
    "geometric_shift",
    "unary_binary_shift",
    "identity_shift",
    "cycle_lemma",
    "encodings",
    "sampler_exactness",
    "degree_profile",
    "height_universality",
    "closeness_exponent",
    "local_limit",
    "runtime_linearity",
];

const SHIFT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub parameters: Value,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    /// Passing means `statistic < threshold`.
    fn below(check: &str, parameters: Value, statistic: f64, threshold: f64) -> Self {
        CheckReport {
            check: check.to_string(),
            parameters,
            statistic,
            threshold,
            pass: statistic < threshold,
            detail: String::new(),
        }
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn fail(mut self, detail: impl Into<String>) -> Self {
        self.pass = false;
        self.detail = detail.into();
        self
    }
}

/// Runs the named check; `None` for an unknown name.
pub fn run_check(name: &str, seed: u64) -> Option<CheckReport> {
    Some(match name {
        "geometric_shift" => geometric_shift(),
        "unary_binary_shift" => unary_binary_shift(),
        "identity_shift" => identity_shift(),
        "cycle_lemma" => cycle_lemma(7),
        "encodings" => encodings(8, 10_000, 1000, seed),
        "sampler_exactness" => sampler_exactness(1_000_000, seed),
        "degree_profile" => degree_profile(100_000, 50, seed),
        "height_universality" => height_universality(20_000, 2000, seed),
        "closeness_exponent" => closeness_exponent(&[1000, 10_000, 100_000], 200, seed),
        "local_limit" => local_limit(),
        "runtime_linearity" => runtime_linearity(seed),
        _ => return None,
    })
}

fn shift_error(s: &AlphaShift, t_star: f64, c: f64, sigma_sq: f64, w: &[f64]) -> f64 {
    let mut err = (s.t_star - t_star).abs().max((s.c - c).abs()).max((s.sigma_star_sq - sigma_sq).abs());
    for (j, &target) in w.iter().enumerate() {
        err = err.max((s.weight(j) - target).abs());
    }
    err
}

pub fn geometric_shift() -> CheckReport {
    let alphas: [f64; 4] = [0.1, 0.25, 0.5, 0.9];
    let w = OffspringDistribution::geometric();
    let mut worst: f64 = 0.0;
    for &a in &alphas {
        let expected: Vec<f64> = (0..40)
            .map(|j| if j == 0 { a } else { a.powi(j - 1) * (1.0 - a).powi(2) })
            .collect();
        worst = match w.alpha_shift(a) {
            Ok(s) => worst.max(shift_error(
                &s,
                2.0 * a,
                4.0 * (1.0 - a).powi(2),
                2.0 * a / (1.0 - a),
                &expected,
            )),
            Err(_) => f64::INFINITY,
        };
    }
    CheckReport::below("geometric_shift", json!({ "alpha": alphas }), worst, SHIFT_TOLERANCE)
}

pub fn unary_binary_shift() -> CheckReport {
    let ps = [0.1, 0.2, 0.4];
    let alphas = [0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49];
    let rejected = [0.5, 0.6, 0.9];
    let mut worst: f64 = 0.0;
    let mut accepted_bad = Vec::new();
    for &p in &ps {
        let w = OffspringDistribution::unary_binary(p);
        for &a in &alphas {
            let t_star = a * (1.0 - 2.0 * p) / (p * (1.0 - 2.0 * a));
            let c = (1.0 - 2.0 * a) / (1.0 - 2.0 * p);
            worst = match w.alpha_shift(a) {
                Ok(s) => worst.max(shift_error(&s, t_star, c, 2.0 * a, &[a, 1.0 - 2.0 * a, a, 0.0])),
                Err(_) => f64::INFINITY,
            };
        }
        for &a in &rejected {
            if w.alpha_shift(a).is_ok() {
                accepted_bad.push((p, a));
            }
        }
    }
    let params = json!({ "p": ps, "alpha": alphas, "rejected_alpha": rejected });
    let report = CheckReport::below("unary_binary_shift", params, worst, SHIFT_TOLERANCE);
    if accepted_bad.is_empty() {
        report
    } else {
        report.fail(format!("alpha >= 1/2 accepted for (p, alpha) in {accepted_bad:?}"))
    }
}

pub fn identity_shift() -> CheckReport {
    let families = [
        OffspringDistribution::geometric(),
        OffspringDistribution::unary_binary(0.1),
        OffspringDistribution::unary_binary(0.2),
        OffspringDistribution::unary_binary(0.4),
        OffspringDistribution::finite(vec![0.45, 0.3, 0.15, 0.0, 0.1]),
        OffspringDistribution::finite(vec![0.5, 0.0, 0.5]),
    ];
    let mut worst: f64 = 0.0;
    for w in &families {
        let w0 = w.weight(0);
        let weights: Vec<f64> = (0..40).map(|j| w.weight(j)).collect();
        worst = match w.alpha_shift(w0) {
            Ok(s) => worst.max(shift_error(&s, 1.0, 1.0, s.sigma_star_sq, &weights)),
            Err(_) => f64::INFINITY,
        };
    }
    let labels: Vec<String> = families.iter().map(OffspringDistribution::label).collect();
    CheckReport::below("identity_shift", json!({ "families": labels }), worst, SHIFT_TOLERANCE)
}

fn is_degree_sequence(d: &[usize]) -> bool {
    let mut s: i64 = 0;
    for (i, &x) in d.iter().enumerate() {
        s += x as i64 - 1;
        if s < 0 && i + 1 < d.len() {
            return false;
        }
    }
    s == -1
}

fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn go(rest: usize, parts: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() + 1 == parts {
            cur.push(rest);
            f(cur);
            cur.pop();
            return;
        }
        for x in 0..=rest {
            cur.push(x);
            go(rest - x, parts, cur, f);
            cur.pop();
        }
    }
    go(total, parts, &mut Vec::with_capacity(parts), f);
}

/// Counts allocations of `n - 1` into `n` parts, `n <= max_n`, whose number
/// of valid rotations is not one or where `cyclic_shift` picks another.
pub fn cycle_lemma(max_n: usize) -> CheckReport {
    let mut violations = 0usize;
    let mut total = 0usize;
    for n in 1..=max_n {
        for_each_composition(n - 1, n, &mut |x| {
            total += 1;
            let valid: Vec<usize> = (0..n)
                .filter(|&r| {
                    let rotated: Vec<usize> = x[r..].iter().chain(&x[..r]).copied().collect();
                    is_degree_sequence(&rotated)
                })
                .collect();
            let ok = match cyclic_shift(x) {
                Ok((seq, r)) => valid == [r] && is_degree_sequence(&seq),
                Err(_) => false,
            };
            violations += usize::from(!ok);
        });
    }
    CheckReport::below("cycle_lemma", json!({ "max_n": max_n }), violations as f64, 0.5)
        .detail(format!("{total} allocations"))
}

/// Number of identity violations on one tree.
pub fn encoding_violations(tree: &OrderedTree) -> usize {
    let n = tree.len();
    let mut bad = 0;
    let degrees = tree.degree_sequence();
    bad += usize::from(OrderedTree::from_degree_sequence(&degrees[..]).as_ref() != Ok(tree));
    bad += usize::from(OrderedTree::from_parens(&tree.to_parens()).as_ref() != Ok(tree));
    let h = tree.height().values;
    match tree.lukasiewicz().height_from_lukasiewicz() {
        Ok(p) => bad += usize::from(p.values != h),
        Err(_) => bad += 1,
    }
    let c = tree.contour().values;
    let m = tree.m_times();
    for l in 0..n {
        if m[l] as i64 != 2 * l as i64 - h[l] || c[m[l]] != h[l] {
            bad += 1;
        }
        let (end, next_h) = if l + 1 < n { (m[l + 1], h[l + 1]) } else { (c.len(), 0) };
        bad += c[m[l]..end].iter().filter(|&&ck| ck < next_h - 1 || ck > h[l]).count();
    }
    bad
}

/// Encoding identities on every tree with at most `max_n` vertices and on
/// `samples` sampled trees of size `n`.
pub fn encodings(max_n: usize, samples: usize, n: usize, seed: u64) -> CheckReport {
    let w = OffspringDistribution::geometric();
    let mut violations = 0;
    let mut exhaustive = 0;
    for size in 1..=max_n {
        for k in 1..=size {
            if let Ok(trees) = enumerate_exact(&w, k, size) {
                exhaustive += trees.len();
                violations += trees.iter().map(|(t, _)| encoding_violations(t)).sum::<usize>();
            }
        }
    }
    let half = samples / 2;
    let instances = [
        (OffspringDistribution::geometric(), n / 4, half),
        (OffspringDistribution::unary_binary(0.2), 3 * n / 10, samples - half),
    ];
    for (i, (w, k, count)) in instances.iter().enumerate() {
        match TreeSampler::new(w, *k, n) {
            Ok(sampler) => {
                for r in sampler.sample_batch(seed.wrapping_add(i as u64), *count) {
                    violations += r.map_or(1, |s| encoding_violations(&s.tree));
                }
            }
            Err(_) => violations += count,
        }
    }
    let params = json!({ "max_n": max_n, "samples": samples, "n": n, "seed": seed });
    CheckReport::below("encodings", params, violations as f64, 0.5)
        .detail(format!("{exhaustive} enumerated trees"))
}

/// Total variation between empirical and exact laws over tree shapes.
pub fn sampler_exactness(draws: usize, seed: u64) -> CheckReport {
    let instances = [
        (OffspringDistribution::geometric(), 2, 4),
        (OffspringDistribution::geometric(), 3, 6),
        (OffspringDistribution::unary_binary(0.2), 3, 6),
    ];
    let mut worst: f64 = 0.0;
    let mut per_instance = Vec::new();
    for (i, (w, k, n)) in instances.iter().enumerate() {
        let tv = match (enumerate_exact(w, *k, *n), TreeSampler::new(w, *k, *n)) {
            (Ok(exact), Ok(sampler)) => {
                let mut rng = stream_rng(seed, i as u64);
                let mut seen: HashMap<OrderedTree, usize> = HashMap::new();
                for _ in 0..draws {
                    match sampler.sample(&mut rng) {
                        Ok(s) => *seen.entry(s.tree).or_default() += 1,
                        Err(_) => return CheckReport::below("sampler_exactness", json!({}), 1.0, 0.005)
                            .fail("sampler error"),
                    }
                }
                let mut dist = 0.0;
                for (t, p) in &exact {
                    let f = seen.remove(t).unwrap_or(0) as f64 / draws as f64;
                    dist += (f - p).abs();
                }
                dist += seen.values().map(|&c| c as f64 / draws as f64).sum::<f64>();
                dist / 2.0
            }
            _ => 1.0,
        };
        per_instance.push(tv);
        worst = worst.max(tv);
    }
    let params = json!({
        "instances": instances.iter().map(|(w, k, n)| json!({ "dist": w.label(), "k": k, "n": n })).collect::<Vec<_>>(),
        "draws": draws,
        "seed": seed,
    });
    CheckReport::below("sampler_exactness", params, worst, 0.005)
        .detail(format!("tv per instance {per_instance:?}"))
}

pub fn degree_profile(n: usize, trees: usize, seed: u64) -> CheckReport {
    let instances = [
        (OffspringDistribution::unary_binary(0.2), 0.3),
        (OffspringDistribution::geometric(), 0.25),
    ];
    let mut worst: f64 = 0.0;
    for (i, (w, alpha)) in instances.iter().enumerate() {
        let k = (alpha * n as f64).round() as usize;
        let dev = TreeSampler::new(w, k, n).ok().and_then(|sampler| {
            let batch: Result<Vec<OrderedTree>, _> = sampler
                .sample_batch(seed.wrapping_add(i as u64), trees)
                .into_iter()
                .map(|r| r.map(|s| s.tree))
                .collect();
            let shift = sampler.shift()?;
            degree_profile_deviation(&batch.ok()?, shift).ok()
        });
        worst = worst.max(dev.unwrap_or(f64::INFINITY));
    }
    let params = json!({ "n": n, "trees": trees, "seed": seed, "alpha": [0.3, 0.25] });
    CheckReport::below("degree_profile", params, worst, 0.01)
}

fn rescaled_heights(w: &OffspringDistribution, alpha: f64, n: usize, count: usize, seed: u64) -> Option<Vec<f64>> {
    let k = (alpha * n as f64).round() as usize;
    let sampler = TreeSampler::new(w, k, n).ok()?;
    let sigma = sampler.shift()?.sigma_star();
    let mut out = Vec::with_capacity(count);
    for r in sampler.sample_batch(seed, count) {
        out.push(rescaled_height(&r.ok()?.tree, sigma));
    }
    out.sort_by(f64::total_cmp);
    Some(out)
}

pub fn height_universality(n: usize, samples: usize, seed: u64) -> CheckReport {
    let a = rescaled_heights(&OffspringDistribution::geometric(), 0.3, n, samples, seed);
    let b = rescaled_heights(&OffspringDistribution::unary_binary(0.2), 0.3, n, samples, seed.wrapping_add(1));
    let ks = match (a, b) {
        (Some(a), Some(b)) => ks_statistic(&a, &b).unwrap_or(1.0),
        _ => 1.0,
    };
    let params = json!({ "n": n, "samples": samples, "alpha": 0.3, "seed": seed });
    CheckReport::below("height_universality", params, ks, 0.05)
}

pub fn closeness_exponent(sizes: &[usize], trees: usize, seed: u64) -> CheckReport {
    let w = OffspringDistribution::geometric();
    let mut medians = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let m = TreeSampler::new(&w, n / 4, n).ok().and_then(|sampler| {
            let sigma_sq = sampler.shift()?.sigma_star_sq;
            let sups: Option<Vec<f64>> = sampler
                .sample_batch(seed.wrapping_add(i as u64), trees)
                .into_iter()
                .map(|r| r.ok().map(|s| process_closeness(&s.tree, sigma_sq).sup_sh))
                .collect();
            median(&sups?)
        });
        medians.push(m.unwrap_or(f64::NAN));
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&xs, &medians).unwrap_or(f64::INFINITY);
    let params = json!({ "n": sizes, "trees": trees, "alpha": 0.25, "seed": seed });
    let slope = if slope.is_nan() { f64::INFINITY } else { slope };
    CheckReport::below("closeness_exponent", params, slope, 0.45).detail(format!("medians {medians:?}"))
}

pub fn local_limit() -> CheckReport {
    let counts = [100, 400, 1600];
    let base = match OffspringDistribution::geometric().alpha_shift(0.25) {
        Ok(s) => s.hat_shift(),
        Err(e) => return CheckReport::below("local_limit", json!({}), 1.0, 0.02).fail(e.to_string()),
    };
    let params = json!({ "alpha": 0.25, "N": counts });
    match llt_sweep(&base, &counts) {
        Ok(rows) => {
            let errors: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
            let report = CheckReport::below("local_limit", params, errors[2], 0.02)
                .detail(format!("sup errors {errors:?}"));
            if errors.windows(2).all(|p| p[1] < p[0]) {
                report
            } else {
                report.fail(format!("not strictly decreasing: {errors:?}"))
            }
        }
        Err(e) => CheckReport::below("local_limit", params, 1.0, 0.02).fail(e.to_string()),
    }
}

/// Mean wall time of one sample for each sampler. Draws alternate between
/// the samplers so that slow drifts in machine load hit every mean alike;
/// each sampler gets one untimed warm-up draw first.
pub fn mean_sample_seconds(samplers: &[TreeSampler], count: usize, seed: u64) -> Option<Vec<f64>> {
    for s in samplers {
        s.sample(&mut stream_rng(seed, u64::MAX)).ok()?;
    }
    let mut total = vec![0.0; samplers.len()];
    for i in 0..count {
        for (s, acc) in samplers.iter().zip(total.iter_mut()) {
            let mut rng = stream_rng(seed, i as u64);
            let start = Instant::now();
            std::hint::black_box(s.sample(&mut rng).ok()?);
            *acc += start.elapsed().as_secs_f64();
        }
    }
    Some(total.into_iter().map(|t| t / count as f64).collect())
}

/// Ratio of mean sampling time at `n = 5e5` to `n = 1e5` (Geometric, `k = n / 4`),
/// which should sit in `[4, 6]`, and a single `n = 1e6` draw under ten seconds.
/// The statistic is the distance of the ratio from 5.
pub fn runtime_linearity(seed: u64) -> CheckReport {
    let w = OffspringDistribution::geometric();
    let params = json!({ "n": [100_000, 500_000], "samples": 20, "alpha": 0.25, "seed": seed });
    let measured = (|| {
        let pair = [TreeSampler::new(&w, 25_000, 100_000).ok()?, TreeSampler::new(&w, 125_000, 500_000).ok()?];
        let means = mean_sample_seconds(&pair, 20, seed)?;
        let huge = TreeSampler::new(&w, 250_000, 1_000_000).ok()?;
        let start = Instant::now();
        huge.sample(&mut stream_rng(seed, 0)).ok()?;
        Some((means[0], means[1], start.elapsed().as_secs_f64()))
    })();
    match measured {
        Some((a, b, c)) => {
            let ratio = b / a;
            let report = CheckReport::below("runtime_linearity", params, (ratio - 5.0).abs(), 1.0 + 1e-12)
                .detail(format!("ratio {ratio:.3}, mean {a:.4}s vs {b:.4}s, n = 1e6 in {c:.3}s"));
            if c < 10.0 {
                report
            } else {
                report.fail(format!("n = 1e6 took {c:.2}s"))
            }
        }
        None => CheckReport::below("runtime_linearity", params, f64::INFINITY, 1.0).fail("sampler error"),
    }
}
