//! Builtin transition families.

use serde::{Deserialize, Serialize};

use super::functions::{ConcaveSqrt, IncreasingFn, DEFAULT_GRID_POINTS};

/// `X' = A X + V` on `R^n`, `A >= 0` entrywise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Params {
    pub a: Vec<Vec<f64>>,
}

impl Ar1Params {
    /// `||A||_inf`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.a.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// `X' = Y f(X) + Z` on `R_+`, shock `(Y, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rca1Params {
    pub f: IncreasingFn,
}

fn default_grid_max() -> f64 {
    100.0
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

/// `X' = max{(1+R1) g1(X) + (1+R2) g2(X) + Z, 0}` on `[0, inf)`, shock `(R1, R2, Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioParams {
    pub g1: IncreasingFn,
    pub g2: IncreasingFn,
    /// Upper end of the validation grid on `[0, grid_max]`.
    #[serde(default = "default_grid_max")]
    pub grid_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

/// `X'_i = sum_j sum_l c[i][j][l] X_l^d[i][j][l] + V_i` on `R^n_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceParams {
    pub c: Vec<Vec<Vec<f64>>>,
    pub d: Vec<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

fn default_search_cap() -> f64 {
    1e12
}

/// `X' = f(X) + V` on `R` with `f = exp(x) + delta` left of `c` and a square-root
/// concave branch right of `c`, joined continuously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseExpParams {
    pub delta: f64,
    pub c: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Upper shock `v'` used to locate `b_c`; defaults to the 0.75-quantile of the shock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_prime: Option<f64>,
    #[serde(default = "default_search_cap")]
    pub search_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Ar1(Ar1Params),
    Rca1(Rca1Params),
    Portfolio(PortfolioParams),
    Resource(ResourceParams),
    PiecewiseExp(PiecewiseExpParams),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Ar1(_) => "ar1",
            Family::Rca1(_) => "rca1",
            Family::Portfolio(_) => "portfolio",
            Family::Resource(_) => "resource",
            Family::PiecewiseExp(_) => "piecewise_exp",
        }
    }
}

/// Evaluation data derived at construction (kept out of the config echo).
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Kernel {
    Ar1 { a: Vec<Vec<f64>> },
    Rca1 { f: IncreasingFn },
    Portfolio { g1: IncreasingFn, g2: IncreasingFn },
    Resource { c: Vec<Vec<Vec<f64>>>, d: Vec<Vec<Vec<f64>>> },
    PiecewiseExp { delta: f64, g: ConcaveSqrt },
}

impl Kernel {
    pub(crate) fn eval(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Kernel::Ar1 { a } => {
                a.iter().zip(v).map(|(row, vi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + vi).collect()
            }
            Kernel::Rca1 { f } => vec![v[0] * f.eval(x[0]) + v[1]],
            Kernel::Portfolio { g1, g2 } => {
                let wealth = (1.0 + v[0]) * g1.eval(x[0]) + (1.0 + v[1]) * g2.eval(x[0]) + v[2];
                vec![wealth.max(0.0)]
            }
            Kernel::Resource { c, d } => c
                .iter()
                .zip(d)
                .zip(v)
                .map(|((ci, di), vi)| {
                    let firms: f64 = ci
                        .iter()
                        .zip(di)
                        .map(|(cij, dij)| cij.iter().zip(dij).zip(x).map(|((c, d), xl)| c * xl.powf(*d)).sum::<f64>())
                        .sum();
                    firms + vi
                })
                .collect(),
            Kernel::PiecewiseExp { delta, g } => vec![piecewise_exp(x[0], *delta, g) + v[0]],
        }
    }
}

pub(crate) fn piecewise_exp(x: f64, delta: f64, g: &ConcaveSqrt) -> f64 {
    if x <= g.c {
        x.exp() + delta
    } else {
        g.eval(x)
    }
}
