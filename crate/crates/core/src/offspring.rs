//! Offspring distributions, their probability generating function, and the
//! alpha-shifted (exponentially tilted) distribution with prescribed leaf mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the probability and unit-mean checks in [`OffspringDistribution::validate`].
pub const VALIDATION_TOLERANCE: f64 = 1e-12;

/// Lower end of the bisection bracket for `t*`.
const BRACKET_LOW: f64 = 1e-12;
/// Distance kept from a finite radius of convergence.
const RADIUS_MARGIN: f64 = 1e-9;
const ROOT_TOLERANCE: f64 = 1e-12;
const BRACKET_WIDTH: f64 = 1e-14;
const MAX_BISECTIONS: usize = 2_000;
/// Analytic families are tabulated until the remaining mass drops below this.
pub const TAIL_MASS: f64 = 1e-15;
const MAX_TABULATED: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OffspringError {
    #[error("not a probability distribution: {0}")]
    NotProbability(String),
    #[error("offspring mean is {0}, expected 1")]
    NotCritical(f64),
    #[error("degenerate offspring distribution: w1 = 1")]
    Degenerate,
    #[error("t = {t} is outside the domain [0, {radius})")]
    OutOfDomain { t: f64, radius: f64 },
    #[error("alpha = {alpha} is outside the solvable range ({lower}, {upper})")]
    AlphaInfeasible { alpha: f64, lower: f64, upper: f64 },
    #[error("root finding failed: {0}")]
    ConvergenceFailure(String),
}

/// Offspring law `w_j = P(L = j)`.
///
/// Finite vectors are evaluated with exact polynomial arithmetic; the two
/// analytic families use closed forms for the generating function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OffspringDistribution {
    /// `weights[j] = w_j`, finite support.
    #[serde(rename = "finite")]
    Finite { weights: Vec<f64> },
    /// `w_j = 2^{-(j+1)}`; conditioned on size it is uniform over ordered trees.
    Geometric,
    /// `w_0 = p, w_1 = 1 - 2p, w_2 = p` with `0 < p < 1/2`.
    UnaryBinary { p: f64 },
}

impl OffspringDistribution {
    pub fn finite(weights: Vec<f64>) -> Self {
        OffspringDistribution::Finite { weights }
    }

    pub fn geometric() -> Self {
        OffspringDistribution::Geometric
    }

    pub fn unary_binary(p: f64) -> Self {
        OffspringDistribution::UnaryBinary { p }
    }

    /// Short human-readable label, used in reports.
    pub fn label(&self) -> String {
        match self {
            OffspringDistribution::Finite { weights } => format!("finite{:?}", weights),
            OffspringDistribution::Geometric => "geometric".to_string(),
            OffspringDistribution::UnaryBinary { p } => format!("unary_binary(p={})", p),
        }
    }

    /// `w_j`.
    pub fn weight(&self, j: usize) -> f64 {
        match self {
            OffspringDistribution::Finite { weights } => weights.get(j).copied().unwrap_or(0.0),
            OffspringDistribution::Geometric => 0.5f64.powi(j.min(1100) as i32 + 1),
            OffspringDistribution::UnaryBinary { p } => match j {
                0 | 2 => *p,
                1 => 1.0 - 2.0 * p,
                _ => 0.0,
            },
        }
    }

    /// Largest `j` with `w_j > 0`, or `None` for infinite support.
    pub fn max_degree(&self) -> Option<usize> {
        match self {
            OffspringDistribution::Finite { weights } => {
                Some(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
            }
            OffspringDistribution::Geometric => None,
            OffspringDistribution::UnaryBinary { .. } => Some(2),
        }
    }

    /// Smallest `j >= 1` with `w_j > 0`.
    pub fn min_positive_degree(&self) -> Option<usize> {
        match self {
            OffspringDistribution::Finite { weights } => {
                weights.iter().skip(1).position(|&w| w > 0.0).map(|i| i + 1)
            }
            OffspringDistribution::Geometric | OffspringDistribution::UnaryBinary { .. } => Some(1),
        }
    }

    /// Radius of convergence of `theta`.
    pub fn radius(&self) -> f64 {
        match self {
            OffspringDistribution::Geometric => 2.0,
            _ => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<(), OffspringError> {
        match self {
            OffspringDistribution::Geometric => Ok(()),
            OffspringDistribution::UnaryBinary { p } => {
                if p.is_finite() && *p > 0.0 && *p < 0.5 {
                    Ok(())
                } else {
                    Err(OffspringError::NotProbability(format!(
                        "unary-binary parameter p = {p} must lie in (0, 1/2)"
                    )))
                }
            }
            OffspringDistribution::Finite { weights } => {
                if weights.is_empty() {
                    return Err(OffspringError::NotProbability("empty weight vector".into()));
                }
                if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
                    return Err(OffspringError::NotProbability(format!("invalid weight {w}")));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > VALIDATION_TOLERANCE {
                    return Err(OffspringError::NotProbability(format!(
                        "weights sum to {total}"
                    )));
                }
                if (self.weight(1) - 1.0).abs() <= VALIDATION_TOLERANCE {
                    return Err(OffspringError::Degenerate);
                }
                let mean: f64 = weights.iter().enumerate().map(|(j, w)| j as f64 * w).sum();
                if (mean - 1.0).abs() > VALIDATION_TOLERANCE {
                    return Err(OffspringError::NotCritical(mean));
                }
                Ok(())
            }
        }
    }

    fn check_domain(&self, t: f64) -> Result<(), OffspringError> {
        let radius = self.radius();
        if !(t >= 0.0 && t < radius) {
            return Err(OffspringError::OutOfDomain { t, radius });
        }
        Ok(())
    }

    /// `theta(t)`, `theta'(t)` or `theta''(t)` for `order` 0, 1 or 2.
    ///
    /// Panics if `order > 2`.
    pub fn theta_derivative(&self, t: f64, order: u8) -> Result<f64, OffspringError> {
        assert!(order <= 2, "only derivatives up to order 2 are supported");
        self.check_domain(t)?;
        let value = match self {
            OffspringDistribution::Geometric => {
                let s = 2.0 - t;
                match order {
                    0 => 1.0 / s,
                    1 => 1.0 / (s * s),
                    _ => 2.0 / (s * s * s),
                }
            }
            OffspringDistribution::UnaryBinary { p } => match order {
                0 => p + (1.0 - 2.0 * p) * t + p * t * t,
                1 => (1.0 - 2.0 * p) + 2.0 * p * t,
                _ => 2.0 * p,
            },
            OffspringDistribution::Finite { weights } => {
                // Horner on the `order`-th derivative's coefficients.
                let mut acc = 0.0;
                for (j, &w) in weights.iter().enumerate().skip(order as usize).rev() {
                    let falling = match order {
                        0 => 1.0,
                        1 => j as f64,
                        _ => (j * (j - 1)) as f64,
                    };
                    acc = acc * t + falling * w;
                }
                acc
            }
        };
        Ok(value)
    }

    pub fn theta(&self, t: f64) -> Result<f64, OffspringError> {
        self.theta_derivative(t, 0)
    }

    /// `psi_hat(t) = t theta'(t) / (theta(t) - w_0)`, evaluated without the
    /// cancellation in `theta(t) - w_0`.
    pub fn psi_hat(&self, t: f64) -> Result<f64, OffspringError> {
        self.check_domain(t)?;
        if t <= 0.0 {
            return Err(OffspringError::OutOfDomain { t, radius: self.radius() });
        }
        let value = match self {
            OffspringDistribution::Geometric => 2.0 / (2.0 - t),
            OffspringDistribution::UnaryBinary { p } => {
                let a = 1.0 - 2.0 * p;
                (a + 2.0 * p * t) / (a + p * t)
            }
            OffspringDistribution::Finite { weights } => {
                let d = self.max_degree().unwrap_or(0);
                let (mut num, mut den) = (0.0, 0.0);
                if t <= 1.0 {
                    // sum_j j w_j t^{j-1} / sum_j w_j t^{j-1}
                    for j in (1..=d).rev() {
                        num = num * t + j as f64 * weights[j];
                        den = den * t + weights[j];
                    }
                } else {
                    // same ratio with numerator and denominator scaled by t^{1-d}
                    let s = 1.0 / t;
                    for j in 1..=d {
                        num = num * s + j as f64 * weights[j];
                        den = den * s + weights[j];
                    }
                }
                num / den
            }
        };
        Ok(value)
    }

    /// Limit of `psi_hat` at `t -> 0+`: the smallest positive degree.
    pub fn psi_hat_at_zero(&self) -> f64 {
        self.min_positive_degree().unwrap_or(1) as f64
    }

    /// `nu_hat = lim_{t -> rho} psi_hat(t)`.
    pub fn nu_hat(&self) -> f64 {
        match self {
            OffspringDistribution::Finite { .. } => self.max_degree().unwrap_or(0) as f64,
            OffspringDistribution::Geometric => f64::INFINITY,
            OffspringDistribution::UnaryBinary { .. } => 2.0,
        }
    }

    /// Open interval of `alpha` for which the shift equations have a solution.
    pub fn alpha_range(&self) -> (f64, f64) {
        (1.0 - 1.0 / self.psi_hat_at_zero(), 1.0 - 1.0 / self.nu_hat())
    }

    /// Solve for the alpha-shifted distribution: `w*_0 = alpha` and
    /// `w*_j = C w_j t*^{j-1}` with unit total mass and unit mean.
    pub fn alpha_shift(&self, alpha: f64) -> Result<AlphaShift, OffspringError> {
        self.validate()?;
        let (lower, upper) = self.alpha_range();
        // a single positive degree d makes psi_hat constant: only alpha = w_0
        // is solvable and every t works, so take t* = 1
        let single_degree = lower == upper && (alpha - lower).abs() <= VALIDATION_TOLERANCE;
        if !single_degree && !(alpha > lower && alpha < upper && alpha < 1.0) {
            return Err(OffspringError::AlphaInfeasible { alpha, lower, upper });
        }
        let t_star = if single_degree { 1.0 } else { self.solve_psi_hat(1.0 / (1.0 - alpha))? };
        let d1 = self.theta_derivative(t_star, 1)?;
        let d2 = self.theta_derivative(t_star, 2)?;
        let c = 1.0 / d1;
        let (w_star, truncated_at) = self.tabulate_shift(alpha, c, t_star);
        Ok(AlphaShift {
            base: self.clone(),
            alpha,
            t_star,
            c,
            sigma_star_sq: t_star * d2 / d1,
            nu_hat: self.nu_hat(),
            w_star,
            truncated_at,
        })
    }

    fn solve_psi_hat(&self, target: f64) -> Result<f64, OffspringError> {
        let radius = self.radius();
        let cap = if radius.is_finite() { radius - RADIUS_MARGIN } else { f64::MAX / 4.0 };
        let mut low = BRACKET_LOW;
        if self.psi_hat(low)? > target {
            return Err(OffspringError::ConvergenceFailure(format!(
                "psi_hat({low}) already exceeds {target}"
            )));
        }
        let mut high = 1.0f64.min(cap);
        while self.psi_hat(high)? < target {
            if high >= cap {
                return Err(OffspringError::ConvergenceFailure(format!(
                    "could not bracket psi_hat = {target} below the radius {radius}"
                )));
            }
            high = (2.0 * high).min(cap);
        }
        let mut mid = 0.5 * (low + high);
        for _ in 0..MAX_BISECTIONS {
            mid = 0.5 * (low + high);
            let gap = self.psi_hat(mid)? - target;
            if gap.abs() < ROOT_TOLERANCE || high - low < BRACKET_WIDTH {
                return Ok(mid);
            }
            if mid <= low || mid >= high {
                // bracket no longer representable
                return Ok(mid);
            }
            if gap < 0.0 {
                low = mid;
            } else {
                high = mid;
            }
        }
        Ok(mid)
    }

    fn tabulate_shift(&self, alpha: f64, c: f64, t_star: f64) -> (Vec<f64>, Option<usize>) {
        match self {
            OffspringDistribution::Finite { weights } => {
                let d = self.max_degree().unwrap_or(0);
                let mut out = Vec::with_capacity(d + 1);
                out.push(alpha);
                let mut power = 1.0;
                for &w in &weights[1..=d] {
                    out.push(c * w * power);
                    power *= t_star;
                }
                (out, None)
            }
            OffspringDistribution::UnaryBinary { p } => {
                (vec![alpha, c * (1.0 - 2.0 * p), c * p * t_star], None)
            }
            OffspringDistribution::Geometric => {
                let ratio = t_star / 2.0;
                let mut out = vec![alpha];
                let mut term = c / 4.0;
                // the untabulated mass after `term` is term * ratio / (1 - ratio)
                while out.len() < MAX_TABULATED && term > 0.0 {
                    out.push(term);
                    if term * ratio / (1.0 - ratio) < TAIL_MASS {
                        break;
                    }
                    term *= ratio;
                }
                let last = out.len() - 1;
                (out, Some(last))
            }
        }
    }
}

/// Solved alpha-shift of an offspring distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaShift {
    pub base: OffspringDistribution,
    pub alpha: f64,
    pub t_star: f64,
    pub c: f64,
    pub sigma_star_sq: f64,
    #[serde(with = "extended_real")]
    pub nu_hat: f64,
    /// `w*_0, w*_1, ...`; for analytic families cut where the remaining mass
    /// is below [`TAIL_MASS`].
    pub w_star: Vec<f64>,
    /// Last tabulated index when `w_star` is a truncation of an infinite law.
    pub truncated_at: Option<usize>,
}

impl AlphaShift {
    pub fn sigma_star(&self) -> f64 {
        self.sigma_star_sq.sqrt()
    }

    /// `w*_j` from the defining formula, valid beyond the tabulated range.
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 {
            return self.alpha;
        }
        match self.base {
            OffspringDistribution::Geometric => {
                self.c * 0.25 * (self.t_star / 2.0).powi(j as i32 - 1)
            }
            _ => self.c * self.base.weight(j) * self.t_star.powi(j as i32 - 1),
        }
    }

    /// `hat w*`: zero at 0 and `w*_j / (1 - alpha)` for `j >= 1`; the law of
    /// the out-degree of an internal vertex.
    pub fn hat_shift(&self) -> Vec<f64> {
        let scale = 1.0 / (1.0 - self.alpha);
        std::iter::once(0.0)
            .chain(self.w_star.iter().skip(1).map(|w| w * scale))
            .collect()
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new(initial: f64) -> Self {
        KahanSum { sum: initial, carry: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// JSON has no infinity; `+inf` is written as the string `"inf"`.
mod extended_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() && *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Text(s) => Err(serde::de::Error::custom(format!("bad extended real {s:?}"))),
        }
    }
}
