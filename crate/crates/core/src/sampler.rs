//! Exact sampling of Galton-Watson trees conditioned on `n` vertices and `k`
//! leaves.
//!
//! The sampler draws the out-degrees of the `n - k` internal vertices as
//! i.i.d. variables with law `hat w*` conditioned on summing to `n - 1`, mixes
//! them uniformly with `k` zeros, rotates the sequence with the cycle lemma
//! and decodes it as a preorder degree sequence. The tilt `t*` cancels under
//! the conditioning, so the output law is exactly the conditioned
//! Galton-Watson law for the input weights; the alpha-shift only controls how
//! often the sum condition is met.

use crate::encodings::{cyclic_shift_in_place, OrderedTree};
use crate::offspring::{AlphaShift, OffspringDistribution, OffspringError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest `n` accepted by [`enumerate_exact`].
pub const MAX_ENUMERATION_SIZE: usize = 12;

/// Identifies the generator behind every seeded stream.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64(seed), stream = sample index";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("(k = {k}, n = {n}) has probability zero under this offspring distribution")]
    Infeasible { k: usize, n: usize },
    #[error(transparent)]
    Offspring(#[from] OffspringError),
    #[error("no draw met the sum condition after {attempts} attempts")]
    RejectionBudgetExceeded { attempts: usize },
    #[error("exhaustive enumeration is limited to n <= {MAX_ENUMERATION_SIZE}, got n = {n}")]
    TooLarge { n: usize },
    #[error("no tree has n = {n} vertices and k = {k} leaves with positive weight")]
    EmptySet { k: usize, n: usize },
}

/// Seeded generator for one sample of a batch; streams with different
/// indices are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Default rejection budget, `1000 * ceil(sqrt(n))`.
pub fn default_max_rejections(n: usize) -> usize {
    1000 * (n as f64).sqrt().ceil().max(1.0) as usize
}

/// Whether some tree with `n` vertices and `k` leaves has positive weight.
///
/// The internal vertices need `n - k` degrees from the support with total
/// `n - 1`; equivalently `n - k` parts from `{j - 1}` summing to `k - 1`.
pub fn feasible(w: &OffspringDistribution, k: usize, n: usize) -> bool {
    if n == 0 || k == 0 || k > n || w.weight(0) <= 0.0 {
        return false;
    }
    let parts = n - k;
    if parts == 0 {
        return n == 1;
    }
    if let OffspringDistribution::Geometric = w {
        return true;
    }
    let sizes: Vec<usize> = (1..=w.max_degree().unwrap_or(0))
        .filter(|&j| w.weight(j) > 0.0)
        .map(|j| j - 1)
        .collect();
    let Some(&smallest) = sizes.first() else {
        return false;
    };
    let total = k - 1;
    if total < parts * smallest {
        return false;
    }
    // Shift every part down by the smallest size: zero-size parts pad any
    // shortfall, so `parts` parts suffice iff the fewest positive parts do.
    let rest = total - parts * smallest;
    let steps: Vec<usize> = sizes.iter().map(|s| s - smallest).filter(|&s| s > 0).collect();
    let mut fewest = vec![usize::MAX; rest + 1];
    fewest[0] = 0;
    for s in 1..=rest {
        for &step in &steps {
            if step <= s && fewest[s - step] != usize::MAX {
                fewest[s] = fewest[s].min(fewest[s - step] + 1);
            }
        }
    }
    fewest[rest] <= parts
}

/// Result of [`conditioned_multinomial`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultinomialDraw {
    /// `counts[j]` = number of parts equal to `j`.
    pub counts: Vec<usize>,
    /// Draws discarded before the accepted one.
    pub rejections: usize,
}

/// Multinomial(`parts`, `hat_w`) counts conditioned on `sum_j j N_j = target`,
/// by rejection.
///
/// Each attempt draws the counts as successive conditional binomials; the
/// last category takes whatever mass is left of the distribution.
pub fn conditioned_multinomial<R: Rng + ?Sized>(
    hat_w: &[f64],
    parts: usize,
    target: usize,
    rng: &mut R,
    max_rejections: usize,
) -> Result<MultinomialDraw, SamplerError> {
    let plan = BinomialPlan::new(hat_w);
    let mut counts = vec![0; hat_w.len()];
    plan.draw(parts, target, rng, max_rejections, &mut counts)
        .map(|rejections| MultinomialDraw { counts, rejections })
}

/// Conditional probabilities `hat_w[j] / sum_{i >= j} hat_w[i]`.
#[derive(Debug, Clone)]
struct BinomialPlan {
    conditional: Vec<f64>,
}

impl BinomialPlan {
    fn new(hat_w: &[f64]) -> Self {
        let Some(last) = hat_w.iter().rposition(|&p| p > 0.0) else {
            return BinomialPlan { conditional: Vec::new() };
        };
        let mut conditional = vec![0.0; last + 1];
        let mut tail = 0.0;
        for j in (0..=last).rev() {
            tail += hat_w[j];
            conditional[j] = if tail > 0.0 { (hat_w[j] / tail).min(1.0) } else { 0.0 };
        }
        conditional[last] = 1.0;
        BinomialPlan { conditional }
    }

    fn draw<R: Rng + ?Sized>(
        &self,
        parts: usize,
        target: usize,
        rng: &mut R,
        max_rejections: usize,
        counts: &mut Vec<usize>,
    ) -> Result<usize, SamplerError> {
        counts.clear();
        counts.resize(self.conditional.len(), 0);
        for attempt in 0..=max_rejections {
            counts.iter_mut().for_each(|c| *c = 0);
            let mut remaining = parts;
            let mut weighted = 0usize;
            for (j, &p) in self.conditional.iter().enumerate() {
                if remaining == 0 || weighted > target {
                    break;
                }
                let drawn = if p >= 1.0 {
                    remaining
                } else if p <= 0.0 {
                    0
                } else {
                    Binomial::new(remaining as u64, p)
                        .expect("conditional probability lies in (0, 1)")
                        .sample(rng) as usize
                };
                counts[j] = drawn;
                remaining -= drawn;
                weighted += j * drawn;
            }
            if remaining == 0 && weighted == target {
                return Ok(attempt);
            }
        }
        Err(SamplerError::RejectionBudgetExceeded { attempts: max_rejections + 1 })
    }
}

/// Parameters of one sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub distribution: OffspringDistribution,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    /// Defaults to [`default_max_rejections`].
    pub max_rejections: Option<usize>,
    /// Shift parameter; defaults to `k / n`.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledTree {
    pub tree: OrderedTree,
    pub rejections: usize,
    /// Start index chosen by the cycle-lemma rotation.
    pub rotation: usize,
}

/// Prepared sampler for one `(w, k, n)`; the alpha-shift is solved once.
#[derive(Debug, Clone)]
pub struct TreeSampler {
    distribution: OffspringDistribution,
    k: usize,
    n: usize,
    shift: Option<AlphaShift>,
    plan: BinomialPlan,
    max_rejections: usize,
}

impl TreeSampler {
    /// Sampler using the shift at `alpha = k / n`. When `k / n` lies outside
    /// the solvable range but `(k, n)` is feasible (extreme trees such as full
    /// binary ones), the nearest solvable `alpha`, kept `1 / (2n)` of the
    /// range inside its boundary, is used instead; the output law does not
    /// depend on `alpha`.
    pub fn new(w: &OffspringDistribution, k: usize, n: usize) -> Result<Self, SamplerError> {
        TreeSampler::with_alpha(w, k, n, None)
    }

    /// As [`TreeSampler::new`], but an explicit `alpha` is used verbatim.
    pub fn with_alpha(
        w: &OffspringDistribution,
        k: usize,
        n: usize,
        alpha: Option<f64>,
    ) -> Result<Self, SamplerError> {
        w.validate()?;
        if !feasible(w, k, n) {
            return Err(SamplerError::Infeasible { k, n });
        }
        let shift = if n == 1 {
            None
        } else {
            let alpha = match alpha {
                Some(a) => a,
                None => default_alpha(w, k, n),
            };
            Some(w.alpha_shift(alpha)?)
        };
        let plan = match &shift {
            Some(s) => BinomialPlan::new(&s.hat_shift()),
            None => BinomialPlan::new(&[]),
        };
        Ok(TreeSampler {
            distribution: w.clone(),
            k,
            n,
            shift,
            plan,
            max_rejections: default_max_rejections(n),
        })
    }

    pub fn from_config(cfg: &SampleConfig) -> Result<Self, SamplerError> {
        let sampler = TreeSampler::with_alpha(&cfg.distribution, cfg.k, cfg.n, cfg.alpha)?;
        Ok(match cfg.max_rejections {
            Some(m) => sampler.with_max_rejections(m),
            None => sampler,
        })
    }

    pub fn with_max_rejections(mut self, max_rejections: usize) -> Self {
        self.max_rejections = max_rejections;
        self
    }

    pub fn distribution(&self) -> &OffspringDistribution {
        &self.distribution
    }

    pub fn leaves(&self) -> usize {
        self.k
    }

    pub fn vertices(&self) -> usize {
        self.n
    }

    /// The solved shift; `None` only for the single-vertex case.
    pub fn shift(&self) -> Option<&AlphaShift> {
        self.shift.as_ref()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledTree, SamplerError> {
        if self.n == 1 {
            return Ok(SampledTree { tree: OrderedTree::single_vertex(), rejections: 0, rotation: 0 });
        }
        let mut counts = Vec::new();
        let rejections =
            self.plan.draw(self.n - self.k, self.n - 1, rng, self.max_rejections, &mut counts)?;
        let mut degrees = Vec::with_capacity(self.n);
        for (j, &c) in counts.iter().enumerate().skip(1) {
            degrees.extend(std::iter::repeat_n(j, c));
        }
        degrees.resize(self.n, 0);
        degrees.shuffle(rng);
        let rotation = cyclic_shift_in_place(&mut degrees);
        let tree = OrderedTree::from_degree_sequence(&degrees)
            .expect("cycle-lemma rotation is a degree sequence");
        Ok(SampledTree { tree, rejections, rotation })
    }

    /// `count` independent samples, sample `i` drawn from [`stream_rng`]`(seed, i)`.
    /// The result does not depend on the number of worker threads.
    pub fn sample_batch(&self, seed: u64, count: usize) -> Vec<Result<SampledTree, SamplerError>> {
        (0..count)
            .into_par_iter()
            .map(|i| self.sample(&mut stream_rng(seed, i as u64)))
            .collect()
    }
}

/// `k / n` pulled into the open solvable range when it falls outside.
fn default_alpha(w: &OffspringDistribution, k: usize, n: usize) -> f64 {
    let alpha = k as f64 / n as f64;
    let (lower, upper) = w.alpha_range();
    if alpha > lower && alpha < upper {
        return alpha;
    }
    let margin = (upper - lower) / (2.0 * n as f64);
    alpha.clamp(lower + margin, upper - margin)
}

/// Sample one tree with the stream-0 generator of `cfg.seed`.
pub fn sample_tree(cfg: &SampleConfig) -> Result<SampledTree, SamplerError> {
    TreeSampler::from_config(cfg)?.sample(&mut stream_rng(cfg.seed, 0))
}

/// Every tree with `n` vertices and `k` leaves together with its conditional
/// probability, proportional to `prod_v w_{deg v}`.
pub fn enumerate_exact(
    w: &OffspringDistribution,
    k: usize,
    n: usize,
) -> Result<Vec<(OrderedTree, f64)>, SamplerError> {
    if n > MAX_ENUMERATION_SIZE {
        return Err(SamplerError::TooLarge { n });
    }
    if n == 0 || k == 0 || k > n {
        return Err(SamplerError::EmptySet { k, n });
    }
    let weights: Vec<f64> = (0..n).map(|j| w.weight(j)).collect();
    let mut found: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    extend_sequences(&weights, n, k, 0, 1.0, &mut prefix, &mut found);
    let total: f64 = found.iter().map(|(_, p)| p).sum();
    if found.is_empty() || total <= 0.0 {
        return Err(SamplerError::EmptySet { k, n });
    }
    Ok(found
        .into_iter()
        .map(|(d, p)| {
            let tree = OrderedTree::from_degree_sequence(&d).expect("enumerated degree sequence");
            (tree, p / total)
        })
        .collect())
}

/// Depth-first enumeration of Lukasiewicz paths with `k` zero steps.
fn extend_sequences(
    weights: &[f64],
    n: usize,
    k: usize,
    height: i64,
    weight: f64,
    prefix: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    let pos = prefix.len();
    let zeros = prefix.iter().filter(|&&d| d == 0).count();
    if pos == n {
        if height == -1 && zeros == k {
            out.push((prefix.clone(), weight));
        }
        return;
    }
    for (d, &wd) in weights.iter().enumerate() {
        if wd <= 0.0 || (d == 0 && zeros == k) {
            continue;
        }
        let next = height + d as i64 - 1;
        let last = pos + 1 == n;
        // the walk must stay non-negative and still be able to reach -1
        if (!last && next < 0) || next > (n - pos - 1) as i64 - 1 {
            continue;
        }
        prefix.push(d);
        extend_sequences(weights, n, k, next, weight * wd, prefix, out);
        prefix.pop();
    }
}
