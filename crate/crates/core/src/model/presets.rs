//! Reference configurations, one per family.

use super::config::ModelConfig;
use super::families::{Ar1Params, Family, PiecewiseExpParams, PortfolioParams, Rca1Params, ResourceParams};
use super::functions::IncreasingFn;
use super::shocks::Marginal;

fn uniform(low: f64, high: f64) -> Marginal {
    Marginal::Uniform { low, high }
}

/// `X' = 0.5 X + V`, `V ~ U(-1, 1)`.
pub fn ar1() -> ModelConfig {
    ModelConfig::from_parts(Family::Ar1(Ar1Params { a: vec![vec![0.5]] }), vec![uniform(-1.0, 1.0)])
}

/// `X' = Y X + Z` with `Y, Z ~ U(0, 1)` (so `E[Y] = 0.5`).
pub fn rca1() -> ModelConfig {
    ModelConfig::from_parts(
        Family::Rca1(Rca1Params { f: IncreasingFn::Identity }),
        vec![uniform(0.0, 1.0), uniform(0.0, 1.0)],
    )
}

/// `g1 = g2 = 0.25 x`, returns `U(-0.5, 0.3)`, flows `U(-0.5, 1)`.
pub fn portfolio() -> ModelConfig {
    ModelConfig::from_parts(
        Family::Portfolio(PortfolioParams {
            g1: IncreasingFn::Linear { slope: 0.25 },
            g2: IncreasingFn::Linear { slope: 0.25 },
            grid_max: 100.0,
            grid_points: 1000,
        }),
        vec![uniform(-0.5, 0.3), uniform(-0.5, 0.3), uniform(-0.5, 1.0)],
    )
}

/// One resource, one firm: `X' = 0.5 sqrt(X) + V`, `V ~ U(0, 0.5)`.
pub fn resource() -> ModelConfig {
    ModelConfig::from_parts(
        Family::Resource(ResourceParams { c: vec![vec![vec![0.5]]], d: vec![vec![vec![0.5]]] }),
        vec![uniform(0.0, 0.5)],
    )
}

/// `delta = -0.9`, `c = 1`, `g(x) = sqrt(x) + gamma`, `V ~ U(-0.5, 0.5)`.
pub fn piecewise_exp() -> ModelConfig {
    ModelConfig::from_parts(
        Family::PiecewiseExp(PiecewiseExpParams {
            delta: -0.9,
            c: 1.0,
            alpha: 1.0,
            beta: 1.0,
            v_prime: None,
            search_cap: 1e12,
        }),
        vec![uniform(-0.5, 0.5)],
    )
}

pub fn by_name(name: &str) -> Option<ModelConfig> {
    match name {
        "ar1" => Some(ar1()),
        "rca1" => Some(rca1()),
        "portfolio" => Some(portfolio()),
        "resource" => Some(resource()),
        "piecewise_exp" => Some(piecewise_exp()),
        _ => None,
    }
}

pub fn all() -> Vec<ModelConfig> {
    vec![ar1(), rca1(), portfolio(), resource(), piecewise_exp()]
}
