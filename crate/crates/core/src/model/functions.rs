//! Increasing scalar function descriptors that can be checked at construction time.

use serde::{Deserialize, Serialize};

/// Default number of grid points used for construction-time checks.
pub const DEFAULT_GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncreasingFn {
    Identity,
    Linear {
        slope: f64,
    },
    /// Linear interpolation through `knots` (strictly increasing abscissae),
    /// extended beyond the end knots with the end slopes.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
}

impl IncreasingFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            IncreasingFn::Identity => x,
            IncreasingFn::Linear { slope } => slope * x,
            IncreasingFn::PiecewiseLinear { knots } => {
                let seg = match knots.iter().position(|k| x < k[0]) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => knots.len() - 2,
                }
                .min(knots.len() - 2);
                let ([x0, y0], [x1, y1]) = (knots[seg], knots[seg + 1]);
                y0 + (y1 - y0) / (x1 - x0) * (x - x0)
            }
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        match self {
            IncreasingFn::Identity => vec![1.0],
            IncreasingFn::Linear { slope } => vec![*slope],
            IncreasingFn::PiecewiseLinear { knots } => {
                knots.windows(2).map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).collect()
            }
        }
    }

    /// Lipschitz constant (largest slope).
    pub fn lipschitz(&self) -> f64 {
        self.slopes().into_iter().fold(0.0, f64::max)
    }

    /// Structural checks: finite knots, increasing abscissae, nonnegative slopes.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            IncreasingFn::Identity => {}
            IncreasingFn::Linear { slope } => {
                if !slope.is_finite() {
                    return Err("slope must be finite".into());
                }
            }
            IncreasingFn::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err("piecewise_linear needs at least two knots".into());
                }
                if knots.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("knots must be finite".into());
                }
                if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err("knot abscissae must be strictly increasing".into());
                }
            }
        }
        if let Some(s) = self.slopes().into_iter().find(|s| *s < 0.0) {
            return Err(format!("function must be increasing, found slope {s}"));
        }
        Ok(())
    }

    /// Evenly spaced points on `[0, max]`.
    pub fn grid(max: f64, points: usize) -> impl Iterator<Item = f64> {
        let points = points.max(2);
        (0..points).map(move |j| max * j as f64 / (points - 1) as f64)
    }
}

/// `g(x) = alpha * sqrt(x - c + beta) + gamma`, strictly concave and increasing on `x > c - beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcaveSqrt {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
}

impl ConcaveSqrt {
    /// Chooses `gamma` so that `g(c) = target`.
    pub fn matching(alpha: f64, beta: f64, c: f64, target: f64) -> Self {
        ConcaveSqrt { alpha, beta, gamma: target - alpha * beta.sqrt(), c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.alpha * (x - self.c + self.beta).sqrt() + self.gamma
    }
}
