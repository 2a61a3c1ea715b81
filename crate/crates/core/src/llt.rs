//! Local limit theorem numerics for sums of truncated lattice variables.

use crate::offspring::KahanSum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on `N * A` for [`sum_pmf_exact`].
pub const MAX_CONVOLUTION_SPAN: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LltError {
    #[error("support needs at least two distinct values")]
    DegenerateSupport,
    #[error("no probability mass at or below the cutoff {cutoff}")]
    ZeroMass { cutoff: usize },
    #[error("N * A = {span} exceeds {MAX_CONVOLUTION_SPAN}")]
    TooLarge { span: usize },
    #[error("maximal step is {step}, the local limit theorem needs step 1")]
    LatticeStep { step: u64 },
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Largest `h` such that the support lies in some `a + h Z`: the gcd of the
/// gaps between consecutive support points.
pub fn maximal_step(support: &[u64]) -> Result<u64, LltError> {
    let mut values = support.to_vec();
    values.sort_unstable();
    values.dedup();
    if values.len() < 2 {
        return Err(LltError::DegenerateSupport);
    }
    Ok(values.windows(2).fold(0, |g, pair| gcd(g, pair[1] - pair[0])))
}

/// Mean, variance and third absolute central moment of a pmf on `0, 1, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third_abs: f64,
}

impl Moments {
    pub fn of(pmf: &[f64]) -> Self {
        let mean = pmf.iter().enumerate().map(|(j, p)| j as f64 * p).collect::<KahanSum>().value();
        let centered = |power: i32| {
            pmf.iter()
                .enumerate()
                .map(|(j, p)| (j as f64 - mean).abs().powi(power) * p)
                .collect::<KahanSum>()
                .value()
        };
        Moments { mean, variance: centered(2), third_abs: centered(3) }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// `P(xi = j | xi <= A)` for a base pmf `P(xi = j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedDistribution {
    pub base: Vec<f64>,
    pub cutoff: usize,
    /// Renormalised weights on `0..=min(cutoff, base.len() - 1)`.
    pub weights: Vec<f64>,
}

impl TruncatedDistribution {
    pub fn new(base: &[f64], cutoff: usize) -> Result<Self, LltError> {
        let kept = &base[..base.len().min(cutoff.saturating_add(1))];
        let mass = kept.iter().copied().collect::<KahanSum>().value();
        if mass.is_nan() || mass <= 0.0 {
            return Err(LltError::ZeroMass { cutoff });
        }
        let mut weights: Vec<f64> = kept.iter().map(|p| p / mass).collect();
        while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
            weights.pop();
        }
        Ok(TruncatedDistribution { base: base.to_vec(), cutoff, weights })
    }

    /// Values carrying positive probability.
    pub fn support(&self) -> Vec<u64> {
        self.weights.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(j, _)| j as u64).collect()
    }

    pub fn moments(&self) -> Moments {
        Moments::of(&self.weights)
    }

    pub fn base_moments(&self) -> Moments {
        Moments::of(&self.base)
    }
}

pub fn truncate(base: &[f64], cutoff: usize) -> Result<TruncatedDistribution, LltError> {
    TruncatedDistribution::new(base, cutoff)
}

/// pmf on the integers `offset, offset + 1, ...`; zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePmf {
    pub offset: usize,
    pub probs: Vec<f64>,
}

impl LatticePmf {
    pub fn prob(&self, n: usize) -> f64 {
        n.checked_sub(self.offset).and_then(|i| self.probs.get(i)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<KahanSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + self.offset) as f64 * p)
            .collect::<KahanSum>()
            .value()
    }

    fn trim(&mut self) {
        let end = self.probs.iter().rposition(|&p| p != 0.0).map_or(0, |i| i + 1);
        self.probs.truncate(end);
        let start = self.probs.iter().position(|&p| p != 0.0).unwrap_or(0);
        self.probs.drain(..start);
        self.offset += start;
    }
}

/// Exact law of `xi_1 + ... + xi_N` for i.i.d. `xi_i` with law `d`, by
/// repeated convolution. Entries that underflow to zero are dropped from
/// both ends.
pub fn sum_pmf_exact(d: &TruncatedDistribution, count: usize) -> Result<LatticePmf, LltError> {
    let top = d.weights.len() - 1;
    let span = count.saturating_mul(top);
    if span > MAX_CONVOLUTION_SPAN {
        return Err(LltError::TooLarge { span });
    }
    let mut kernel = LatticePmf { offset: 0, probs: d.weights.clone() };
    kernel.trim();
    let mut acc = LatticePmf { offset: 0, probs: vec![1.0] };
    for _ in 0..count {
        let mut next = vec![0.0; acc.probs.len() + kernel.probs.len() - 1];
        for (i, &p) in acc.probs.iter().enumerate() {
            for (j, &q) in kernel.probs.iter().enumerate() {
                next[i + j] += p * q;
            }
        }
        acc = LatticePmf { offset: acc.offset + kernel.offset, probs: next };
        acc.trim();
    }
    Ok(acc)
}

/// `sup_n |sigma sqrt(N) P(S_N = n) - exp(-(n - aN)^2 / (2 sigma^2 N)) / sqrt(2 pi)|`
/// where `S_N` sums `N` copies of the truncated variable and `a`, `sigma` are
/// the mean and standard deviation of the untruncated base law.
pub fn llt_sup_error(d: &TruncatedDistribution, count: usize) -> Result<f64, LltError> {
    let step = maximal_step(&d.support())?;
    if step != 1 {
        return Err(LltError::LatticeStep { step });
    }
    let pmf = sum_pmf_exact(d, count)?;
    let base = d.base_moments();
    let (a, sigma) = (base.mean, base.std_dev());
    let n_f = count as f64;
    let scale = sigma * n_f.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    // outside the support only the Gaussian term remains; it is largest at
    // the two integers adjacent to the support
    let first = pmf.offset.saturating_sub(1);
    let last = pmf.offset + pmf.probs.len();
    let sup = (first..=last)
        .map(|n| {
            let z = (n as f64 - a * n_f) / scale;
            (scale * pmf.prob(n) - norm * (-0.5 * z * z).exp()).abs()
        })
        .fold(0.0, f64::max);
    Ok(sup)
}

/// One row of an LLT sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LltRow {
    pub count: usize,
    pub cutoff: usize,
    pub sup_error: f64,
}

/// `ceil(sqrt(N))`.
pub fn sqrt_cutoff(count: usize) -> usize {
    (count as f64).sqrt().ceil() as usize
}

/// Sup errors for each `N`, truncating the base at `A_N = ceil(sqrt(N))`.
pub fn llt_sweep(base: &[f64], counts: &[usize]) -> Result<Vec<LltRow>, LltError> {
    counts
        .iter()
        .map(|&count| {
            let cutoff = sqrt_cutoff(count);
            let d = TruncatedDistribution::new(base, cutoff)?;
            Ok(LltRow { count, cutoff, sup_error: llt_sup_error(&d, count)? })
        })
        .collect()
}
