use cgwt::analysis::{process_closeness, rescaled_height};
use cgwt::llt::llt_sweep;
use cgwt::sampler::{default_max_rejections, RNG_ALGORITHM};
use cgwt::verify::{self, CheckReport, CHECKS};
use cgwt::{OffspringDistribution, OrderedTree, TreeSampler};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

mod dist;

#[derive(Parser, Debug)]
#[command(name = "cgwt", version, about = "Galton-Watson trees conditioned on size and leaf count")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the alpha-shift of an offspring distribution.
    Shift {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Sample trees with n vertices and k leaves.
    Sample {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Shift parameter; defaults to k / n.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_rejections: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Parens)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Paths and degree counts of the trees in a tree file.
    Stats {
        /// Tree file: one tree per line, parenthesis or counts format.
        input: String,
        /// Also report sup |S - (sigma*^2 / 2) H| and the rescaled height.
        #[arg(long)]
        sigma_star_sq: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run named checks and print one JSON report per line.
    Verify {
        /// Check to run; repeatable. Defaults to all checks.
        #[arg(long = "check", value_parser = clap::builder::PossibleValuesParser::new(CHECKS))]
        checks: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Local limit errors of truncated sums of the size-biased shifted law.
    Llt {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Numbers of summands N; the cutoff is ceil(sqrt(N)).
        #[arg(long, value_delimiter = ',', default_values_t = [100, 400, 1600])]
        counts: Vec<usize>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Mean sampling time per tree for each n at k = alpha * n.
    Bench {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [100_000, 500_000])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        batch: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args, Debug)]
struct DistArgs {
    /// geometric, unary_binary, file:<path>, or inline JSON.
    #[arg(long, default_value = "geometric")]
    dist: String,
    /// Parameter of unary_binary.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Parens,
    Counts,
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Domain(String),
    /// Checks ran but at least one failed; reports are already written.
    ChecksFailed,
}

impl Failure {
    fn domain(e: impl std::fmt::Display) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::ChecksFailed) => ExitCode::from(1),
    }
}

fn distribution(args: &DistArgs) -> Result<OffspringDistribution, Failure> {
    dist::parse_dist(&args.dist, args.p).map_err(Failure::Usage)
}

fn emit(out: Option<&str>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Domain(format!("{path}: {e}"))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Domain(e.to_string())),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Shift { dist, alpha, out } => {
            let w = distribution(&dist)?;
            let s = w.alpha_shift(alpha).map_err(Failure::domain)?;
            let mut v = serde_json::to_value(&s).map_err(Failure::domain)?;
            v["sigma_star"] = json!(s.sigma_star());
            emit(out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
        }
        Command::Sample { dist, k, n, alpha, batch, seed, max_rejections, format, out } => {
            let w = distribution(&dist)?;
            let seed = seed.unwrap_or_else(rand::random);
            let mut sampler = TreeSampler::with_alpha(&w, k, n, alpha).map_err(Failure::domain)?;
            let budget = max_rejections.unwrap_or_else(|| default_max_rejections(n));
            sampler = sampler.with_max_rejections(budget);
            let results = sampler.sample_batch(seed, batch);
            let mut trees = Vec::with_capacity(batch);
            for r in results {
                trees.push(r.map_err(Failure::domain)?);
            }
            let shift = sampler.shift();
            let meta = json!({
                "weights": w,
                "k": k,
                "n": n,
                "alpha": shift.map(|s| s.alpha),
                "t_star": shift.map(|s| s.t_star),
                "sigma_star": shift.map(|s| s.sigma_star()),
                "seed": seed,
                "batch": batch,
                "max_rejections": budget,
                "rejections": trees.iter().map(|t| t.rejections).collect::<Vec<_>>(),
                "rng": RNG_ALGORITHM,
                "format": format!("{format:?}").to_lowercase(),
            });
            let mut text = String::new();
            match format {
                Format::Json => {
                    let doc = json!({
                        "meta": meta,
                        "trees": trees.iter().map(|t| t.tree.to_parens()).collect::<Vec<_>>(),
                    });
                    text = serde_json::to_string(&doc).unwrap();
                    text.push('\n');
                }
                Format::Parens | Format::Counts => {
                    writeln!(text, "{meta}").unwrap();
                    for t in &trees {
                        let line = if format == Format::Parens {
                            t.tree.to_parens()
                        } else {
                            t.tree.to_counts_line()
                        };
                        writeln!(text, "{line}").unwrap();
                    }
                }
                Format::Csv => {
                    writeln!(text, "# {meta}").unwrap();
                    writeln!(text, "sample,vertex,degree,height").unwrap();
                    for (i, t) in trees.iter().enumerate() {
                        let h = t.tree.height().values;
                        for (v, d) in t.tree.degree_sequence().iter().enumerate() {
                            writeln!(text, "{i},{v},{d},{}", h[v]).unwrap();
                        }
                    }
                }
            }
            emit(out.as_deref(), &text)
        }
        Command::Stats { input, sigma_star_sq, format, out } => {
            let body = fs::read_to_string(&input)
                .map_err(|e| Failure::Usage(format!("cannot read {input}: {e}")))?;
            let mut trees = Vec::new();
            for (i, line) in body.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('{') || line.starts_with('#') {
                    continue;
                }
                let tree = OrderedTree::parse(line)
                    .map_err(|e| Failure::Domain(format!("{input}:{}: {e}", i + 1)))?;
                trees.push(tree);
            }
            let text = match format {
                Format::Json => {
                    let mut s = String::new();
                    for t in &trees {
                        writeln!(s, "{}", tree_stats(t, sigma_star_sq)).unwrap();
                    }
                    s
                }
                Format::Csv => {
                    let mut s = String::from("tree,path,index,value\n");
                    for (i, t) in trees.iter().enumerate() {
                        for (name, path) in
                            [("lukasiewicz", t.lukasiewicz()), ("height", t.height()), ("contour", t.contour())]
                        {
                            for (j, v) in path.values.iter().enumerate() {
                                writeln!(s, "{i},{name},{j},{v}").unwrap();
                            }
                        }
                    }
                    s
                }
                Format::Parens | Format::Counts => {
                    return Err(Failure::Usage("stats supports --format json or csv".into()))
                }
            };
            emit(out.as_deref(), &text)
        }
        Command::Verify { checks, seed, out } => {
            let seed = seed.unwrap_or_else(rand::random);
            let names: Vec<String> =
                if checks.is_empty() { CHECKS.iter().map(|s| s.to_string()).collect() } else { checks };
            let mut text = String::new();
            let mut all_pass = true;
            for name in &names {
                let report: CheckReport = verify::run_check(name, seed)
                    .ok_or_else(|| Failure::Usage(format!("unknown check {name}")))?;
                eprintln!("{} {}", if report.pass { "PASS" } else { "FAIL" }, report.check);
                all_pass &= report.pass;
                let mut v = serde_json::to_value(&report).unwrap();
                v["seed"] = json!(seed);
                writeln!(text, "{v}").unwrap();
            }
            emit(out.as_deref(), &text)?;
            if all_pass {
                Ok(())
            } else {
                Err(Failure::ChecksFailed)
            }
        }
        Command::Llt { dist, alpha, counts, out } => {
            let w = distribution(&dist)?;
            let base = w.alpha_shift(alpha).map_err(Failure::domain)?.hat_shift();
            let rows = llt_sweep(&base, &counts).map_err(Failure::domain)?;
            let mut text = String::from("N,A_N,sup_error\n");
            for r in rows {
                writeln!(text, "{},{},{:e}", r.count, r.cutoff, r.sup_error).unwrap();
            }
            emit(out.as_deref(), &text)
        }
        Command::Bench { dist, alpha, n, batch, seed, out } => {
            let w = distribution(&dist)?;
            if batch == 0 {
                return Err(Failure::Usage("--batch must be positive".into()));
            }
            let seed = seed.unwrap_or_else(rand::random);
            let mut samplers = Vec::new();
            let mut rows = Vec::new();
            for &size in &n {
                let k = (alpha * size as f64).round() as usize;
                samplers.push(TreeSampler::with_alpha(&w, k, size, Some(alpha)).map_err(Failure::domain)?);
                rows.push(json!({ "n": size, "k": k }));
            }
            let means = verify::mean_sample_seconds(&samplers, batch, seed)
                .ok_or_else(|| Failure::Domain("sampling failed".into()))?;
            for (row, secs) in rows.iter_mut().zip(means) {
                row["mean_seconds"] = json!(secs);
            }
            let ratios: Vec<Value> = rows
                .windows(2)
                .map(|p| json!(p[1]["mean_seconds"].as_f64().unwrap() / p[0]["mean_seconds"].as_f64().unwrap()))
                .collect();
            let doc = json!({
                "weights": w,
                "alpha": alpha,
                "batch": batch,
                "seed": seed,
                "rng": RNG_ALGORITHM,
                "rows": rows,
                "ratios": ratios,
            });
            emit(out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
        }
    }
}

fn tree_stats(t: &OrderedTree, sigma_star_sq: Option<f64>) -> Value {
    let mut v = json!({
        "n": t.len(),
        "leaves": t.leaf_count(),
        "height": t.tree_height(),
        "degree_counts": t.degree_counts(),
        "lukasiewicz": t.lukasiewicz().values,
        "height_process": t.height().values,
        "contour": t.contour().values,
    });
    if let Some(s2) = sigma_star_sq {
        let c = process_closeness(t, s2);
        v["sup_sh"] = json!(c.sup_sh);
        v["sup_sc"] = json!(c.sup_sc);
        v["rescaled_height"] = json!(rescaled_height(t, s2.sqrt()));
    }
    v
}
