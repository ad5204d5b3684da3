//! Product shock distributions with closed-form tails.

use crate::order::{Interval, OrderError, ShockVector, StateSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

use super::ModelError;

/// One independent coordinate of the shock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum Marginal {
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    Discrete { atoms: Vec<f64>, weights: Vec<f64> },
    TruncatedNormal { mean: f64, sd: f64, low: f64, high: f64 },
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_inv(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

impl Marginal {
    pub fn validate(&self) -> Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Marginal::Uniform { low, high } => {
                if !finite(&[*low, *high]) || low >= high {
                    return Err(format!("uniform requires finite low < high, got ({low}, {high})"));
                }
            }
            Marginal::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(format!("exponential rate must be > 0, got {rate}"));
                }
            }
            Marginal::Discrete { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return Err("discrete needs equally many atoms and weights (at least one)".into());
                }
                if !finite(atoms) || !finite(weights) || weights.iter().any(|w| *w < 0.0) {
                    return Err("discrete atoms must be finite and weights nonnegative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(format!("discrete weights must sum to 1, got {total}"));
                }
            }
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                if !finite(&[*mean, *sd, *low, *high]) || *sd <= 0.0 || low >= high {
                    return Err("truncated_normal requires finite mean, sd > 0 and low < high".into());
                }
                if self.trunc_mass() <= 0.0 {
                    return Err("truncated_normal window carries no probability mass".into());
                }
            }
        }
        Ok(())
    }

    fn trunc_bounds(&self) -> (f64, f64) {
        match *self {
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                (std_normal_cdf((low - mean) / sd), std_normal_cdf((high - mean) / sd))
            }
            _ => unreachable!("only truncated normals have a normal window"),
        }
    }

    fn trunc_mass(&self) -> f64 {
        let (a, b) = self.trunc_bounds();
        b - a
    }

    /// Closed support `[lo, hi]` (`hi` may be `+inf`).
    pub fn support(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform { low, high } => (*low, *high),
            Marginal::Exponential { .. } => (0.0, f64::INFINITY),
            Marginal::Discrete { atoms, weights } => {
                let live = atoms.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(a, _)| *a);
                live.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)))
            }
            Marginal::TruncatedNormal { low, high, .. } => (*low, *high),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Uniform { low, high } => 0.5 * (low + high),
            Marginal::Exponential { rate } => 1.0 / rate,
            Marginal::Discrete { atoms, weights } => atoms.iter().zip(weights).map(|(a, w)| a * w).sum(),
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let (a, b) = ((low - mean) / sd, (high - mean) / sd);
                mean + sd * (pdf(a) - pdf(b)) / self.trunc_mass()
            }
        }
    }

    /// `P(V <= v)`
    pub fn cdf(&self, v: f64) -> f64 {
        let p = match self {
            Marginal::Uniform { low, high } => ((v - low) / (high - low)).clamp(0.0, 1.0),
            Marginal::Exponential { rate } => {
                if v <= 0.0 {
                    0.0
                } else {
                    -(-rate * v).exp_m1()
                }
            }
            Marginal::Discrete { atoms, weights } => {
                atoms.iter().zip(weights).filter(|(a, _)| **a <= v).map(|(_, w)| w).sum()
            }
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                if v < *low {
                    0.0
                } else if v >= *high {
                    1.0
                } else {
                    let (a, _) = self.trunc_bounds();
                    (std_normal_cdf((v - mean) / sd) - a) / self.trunc_mass()
                }
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// `P(V < v)`; differs from [`Marginal::cdf`] only at atoms.
    pub fn cdf_strict(&self, v: f64) -> f64 {
        match self {
            Marginal::Discrete { atoms, weights } => {
                let p: f64 = atoms.iter().zip(weights).filter(|(a, _)| **a < v).map(|(_, w)| w).sum();
                p.clamp(0.0, 1.0)
            }
            _ => self.cdf(v),
        }
    }

    /// `P(V >= v)`, closed upper tail.
    pub fn prob_at_least(&self, v: f64) -> f64 {
        match self {
            Marginal::Discrete { atoms, weights } => {
                let p: f64 = atoms.iter().zip(weights).filter(|(a, _)| **a >= v).map(|(_, w)| w).sum();
                p.clamp(0.0, 1.0)
            }
            Marginal::Uniform { low, high } => ((high - v) / (high - low)).clamp(0.0, 1.0),
            Marginal::Exponential { rate } => {
                if v <= 0.0 {
                    1.0
                } else {
                    (-rate * v).exp()
                }
            }
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                if v <= *low {
                    1.0
                } else if v > *high {
                    0.0
                } else {
                    let (_, b) = self.trunc_bounds();
                    ((b - std_normal_cdf((v - mean) / sd)) / self.trunc_mass()).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Smallest `q` in the support with `P(V <= q) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Marginal::Uniform { low, high } => low + (high - low) * p,
            Marginal::Exponential { rate } => -(-p).ln_1p() / rate,
            Marginal::Discrete { atoms, weights } => {
                let mut order: Vec<usize> = (0..atoms.len()).filter(|&i| weights[i] > 0.0).collect();
                order.sort_by(|&i, &j| atoms[i].total_cmp(&atoms[j]));
                let mut acc = 0.0;
                for &i in &order {
                    acc += weights[i];
                    if acc >= p - 1e-12 {
                        return atoms[i];
                    }
                }
                atoms[*order.last().expect("validated discrete has a positive weight")]
            }
            Marginal::TruncatedNormal { mean, sd, low, high } => {
                let (a, _) = self.trunc_bounds();
                let q = mean + sd * std_normal_inv(a + p * self.trunc_mass());
                q.clamp(*low, *high)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            Marginal::Uniform { low, high } => low + (high - low) * u,
            Marginal::Exponential { rate } => -(-u).ln_1p() / rate,
            Marginal::Discrete { atoms, weights } => {
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *a;
                    }
                }
                let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(atoms.len() - 1);
                atoms[last]
            }
            Marginal::TruncatedNormal { .. } => self.quantile(u),
        }
    }
}

/// Independent product of scalar marginals on `R^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShockDistribution {
    marginals: Vec<Marginal>,
}

impl ShockDistribution {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self, ModelError> {
        if marginals.is_empty() {
            return Err(ModelError::invalid("shocks", "at least one marginal required"));
        }
        for (i, m) in marginals.iter().enumerate() {
            m.validate().map_err(|r| ModelError::invalid(&format!("shocks[{i}]"), &r))?;
        }
        Ok(ShockDistribution { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ShockVector {
        let coords = self.marginals.iter().map(|m| m.sample(rng)).collect();
        ShockVector::new(coords).expect("validated marginals produce finite draws")
    }

    fn check_dim(&self, v: &ShockVector) -> Result<(), OrderError> {
        if v.dim() == self.dim() {
            Ok(())
        } else {
            Err(OrderError::DimensionMismatch { left: self.dim(), right: v.dim() })
        }
    }

    /// `P(V >= v)` in the product order.
    pub fn tail_mass_above(&self, v: &ShockVector) -> Result<f64, OrderError> {
        self.check_dim(v)?;
        Ok(self.marginals.iter().zip(v.iter()).map(|(m, &c)| m.prob_at_least(c)).product())
    }

    /// `P(V <= v)` in the product order.
    pub fn tail_mass_below(&self, v: &ShockVector) -> Result<f64, OrderError> {
        self.check_dim(v)?;
        Ok(self.marginals.iter().zip(v.iter()).map(|(m, &c)| m.cdf(c)).product())
    }

    /// `P(V < v coordinatewise)`.
    pub fn tail_mass_strictly_below(&self, v: &ShockVector) -> Result<f64, OrderError> {
        self.check_dim(v)?;
        Ok(self.marginals.iter().zip(v.iter()).map(|(m, &c)| m.cdf_strict(c)).product())
    }

    pub fn quantile_vector(&self, p: f64) -> ShockVector {
        ShockVector::new(self.marginals.iter().map(|m| m.quantile(p)).collect())
            .expect("quantiles of validated marginals are finite")
    }

    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(Marginal::mean).collect()
    }

    /// Smallest closed box containing the support, as a space of shock values.
    pub fn support_space(&self) -> StateSpace {
        let dims = self
            .marginals
            .iter()
            .map(|m| {
                let (lo, hi) = m.support();
                if lo == hi {
                    // point mass: any nondegenerate interval around it
                    Interval::closed(lo - 1.0, hi + 1.0)
                } else if hi.is_finite() {
                    Interval::closed(lo, hi)
                } else {
                    Interval::at_least(lo)
                }
            })
            .collect();
        StateSpace::new(dims).expect("marginal supports are nonempty")
    }
}
