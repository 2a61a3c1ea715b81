//! Monte Carlo statistics for batches of sampled trees: degree profiles,
//! rescaled heights, two-sample Kolmogorov-Smirnov distances and the
//! distance between the Lukasiewicz path and the height/contour processes.

use crate::encodings::OrderedTree;
use crate::offspring::{AlphaShift, OffspringDistribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entries of the shifted law smaller than this are ignored by
/// [`degree_profile_deviation`].
pub const PROFILE_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch mixes tree sizes: expected (k, n) = ({k}, {n}), found ({found_k}, {found_n})")]
    MismatchedBatch { k: usize, n: usize, found_k: usize, found_n: usize },
    #[error("need at least two distinct sizes to fit a slope")]
    TooFewPoints,
}

/// Where a batch of samples came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub distribution: OffspringDistribution,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
}

/// Sorted sample of a real statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSummary {
    pub samples: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub meta: Option<SampleMeta>,
}

impl EmpiricalSummary {
    /// Sorts `values`; NaNs are not allowed.
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in empirical sample"));
        let samples = values.len();
        let mean = if samples == 0 { 0.0 } else { values.iter().sum::<f64>() / samples as f64 };
        let variance = if samples < 2 {
            0.0
        } else {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
        };
        EmpiricalSummary { samples, values, mean, variance, meta: None }
    }

    pub fn with_meta(mut self, meta: SampleMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn median(&self) -> Option<f64> {
        median_sorted(&self.values)
    }

    /// Empirical CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.samples.max(1) as f64
    }
}

fn median_sorted(values: &[f64]) -> Option<f64> {
    let n = values.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(values[n / 2]),
        _ => Some(0.5 * (values[n / 2 - 1] + values[n / 2])),
    }
}

/// Median of an unsorted sample.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    median_sorted(&sorted)
}

/// Mean fraction of vertices with `j` children over a batch of equal-size trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub samples: usize,
    pub k: usize,
    pub n: usize,
    /// Summed vertex counts per out-degree over the batch.
    pub histogram: Vec<u64>,
    /// `histogram[j] / (samples * n)`.
    pub mean_fraction: Vec<f64>,
}

pub fn degree_profile(trees: &[OrderedTree]) -> Result<DegreeProfile, AnalysisError> {
    let first = trees.first().ok_or(AnalysisError::EmptyBatch)?;
    let (k, n) = (first.leaf_count(), first.len());
    let mut histogram: Vec<u64> = Vec::new();
    for t in trees {
        let counts = t.degree_counts();
        if t.len() != n || counts[0] != k {
            return Err(AnalysisError::MismatchedBatch {
                k,
                n,
                found_k: counts[0],
                found_n: t.len(),
            });
        }
        if histogram.len() < counts.len() {
            histogram.resize(counts.len(), 0);
        }
        for (h, c) in histogram.iter_mut().zip(counts) {
            *h += c as u64;
        }
    }
    let total = (trees.len() * n) as f64;
    let mean_fraction = histogram.iter().map(|&h| h as f64 / total).collect();
    Ok(DegreeProfile { samples: trees.len(), k, n, histogram, mean_fraction })
}

/// `max_j |mean n_j(T) / n - w*_j|` over the degrees with `w*_j` above
/// [`PROFILE_WEIGHT_FLOOR`].
pub fn degree_profile_deviation(
    trees: &[OrderedTree],
    shift: &AlphaShift,
) -> Result<f64, AnalysisError> {
    let profile = degree_profile(trees)?;
    Ok(profile_deviation(&profile, shift))
}

pub fn profile_deviation(profile: &DegreeProfile, shift: &AlphaShift) -> f64 {
    let span = profile.mean_fraction.len().max(shift.w_star.len());
    (0..span)
        .map(|j| (j, shift.weight(j)))
        .filter(|&(_, target)| target > PROFILE_WEIGHT_FLOOR)
        .map(|(j, target)| {
            let observed = profile.mean_fraction.get(j).copied().unwrap_or(0.0);
            (observed - target).abs()
        })
        .fold(0.0, f64::max)
}

/// `sigma* h(T) / (2 sqrt(n))` with `h` the height of the tree; converges in
/// law to the maximum of a standard Brownian excursion.
pub fn rescaled_height(tree: &OrderedTree, sigma_star: f64) -> f64 {
    sigma_star * tree.tree_height() as f64 / (2.0 * (tree.len() as f64).sqrt())
}

/// `sup_x |F_a(x) - F_b(x)|` for the empirical CDFs of two sorted samples.
pub fn two_sample_ks(a: &EmpiricalSummary, b: &EmpiricalSummary) -> Result<f64, AnalysisError> {
    ks_statistic(&a.values, &b.values)
}

/// Two-sample KS statistic of sorted slices.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyBatch);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        // step past every copy of x in both samples before comparing
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// Uniform distances between the Lukasiewicz path and the rescaled height and
/// contour processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessCloseness {
    /// `max_{0 <= l < n} |S(l) - (sigma*^2 / 2) H(l)|`.
    pub sup_sh: f64,
    /// `max_{0 <= l < n} |S(l) - (sigma*^2 / 2) C(2l)|`.
    pub sup_sc: f64,
}

pub fn process_closeness(tree: &OrderedTree, sigma_star_sq: f64) -> ProcessCloseness {
    let s = tree.lukasiewicz().values;
    let h = tree.height().values;
    let c = tree.contour().values;
    let scale = sigma_star_sq / 2.0;
    let mut closeness = ProcessCloseness { sup_sh: 0.0, sup_sc: 0.0 };
    for l in 0..tree.len() {
        let sl = s[l] as f64;
        closeness.sup_sh = closeness.sup_sh.max((sl - scale * h[l] as f64).abs());
        closeness.sup_sc = closeness.sup_sc.max((sl - scale * c[2 * l] as f64).abs());
    }
    closeness
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    let points: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = points.len() as f64;
    if points.len() < 2 {
        return Err(AnalysisError::TooFewPoints);
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::TooFewPoints);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}
