//! Transition maps `X_{k+1} = w(X_k, V_{k+1})` and the builtin model families.

mod config;
mod families;
pub mod functions;
pub mod presets;
pub mod shocks;

use std::collections::BTreeMap;

use serde_json::{json, Value};

pub use config::{ModelConfig, PairSpec, RunSection, FAMILY_NAMES};
pub use families::{Ar1Params, Family, PiecewiseExpParams, PortfolioParams, Rca1Params, ResourceParams};
pub use functions::{ConcaveSqrt, IncreasingFn};
pub use shocks::{Marginal, ShockDistribution};

use crate::order::{Interval, OrderError, ShockVector, StateSpace, StateVector};
use families::Kernel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("{what} {point} lies outside its space")]
    DomainViolation { what: &'static str, point: String },
    #[error("transition produced a non-finite value at x = {x}")]
    NonFiniteOutput { x: String },
    #[error("transition left the state space: w({x}, {v}) = {out}")]
    LeftStateSpace { x: String, v: String, out: String },
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Order(#[from] OrderError),
}

impl ModelError {
    pub(crate) fn invalid(field: &str, reason: &str) -> Self {
        ModelError::InvalidParameter { field: field.to_owned(), reason: reason.to_owned() }
    }
}

fn fmt_coords(c: &[f64]) -> String {
    format!("{c:?}")
}

/// A deterministic increasing map `w : S x E -> S`.
///
/// `evaluate` is the raw map; `apply` adds the domain and range checks.
pub trait TransitionMap: Sync {
    fn state_space(&self) -> &StateSpace;
    fn shock_space(&self) -> &StateSpace;
    fn evaluate(&self, x: &[f64], v: &[f64]) -> Vec<f64>;

    fn state_dim(&self) -> usize {
        self.state_space().dim()
    }

    fn shock_dim(&self) -> usize {
        self.shock_space().dim()
    }

    fn apply(&self, x: &StateVector, v: &ShockVector) -> Result<StateVector, ModelError> {
        self.apply_raw(x, v)
    }

    /// Checked evaluation on plain slices.
    fn apply_raw(&self, x: &[f64], v: &[f64]) -> Result<StateVector, ModelError> {
        if !self.state_space().contains(x) {
            return Err(ModelError::DomainViolation { what: "state", point: fmt_coords(x) });
        }
        if !self.shock_space().contains(v) {
            return Err(ModelError::DomainViolation { what: "shock", point: fmt_coords(v) });
        }
        let out = self.evaluate(x, v);
        if out.iter().any(|c| !c.is_finite()) {
            return Err(ModelError::NonFiniteOutput { x: fmt_coords(x) });
        }
        if !self.state_space().contains(&out) {
            return Err(ModelError::LeftStateSpace { x: fmt_coords(x), v: fmt_coords(v), out: fmt_coords(&out) });
        }
        Ok(StateVector::new(out)?)
    }
}

/// A validated builtin model: the map, its shock law and derived metadata.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    family: Family,
    kernel: Kernel,
    state_space: StateSpace,
    shock_space: StateSpace,
    shocks: ShockDistribution,
    metadata: BTreeMap<String, Value>,
    warnings: Vec<String>,
    default_pair: (ShockVector, ShockVector),
}

impl TransitionMap for TransitionModel {
    fn state_space(&self) -> &StateSpace {
        &self.state_space
    }

    fn shock_space(&self) -> &StateSpace {
        &self.shock_space
    }

    fn evaluate(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.kernel.eval(x, v)
    }
}

fn check_shock_dim(shocks: &ShockDistribution, want: usize, family: &str) -> Result<(), ModelError> {
    if shocks.dim() != want {
        return Err(ModelError::invalid(
            "shocks",
            &format!("{family} needs {want} shock marginals, got {}", shocks.dim()),
        ));
    }
    Ok(())
}

fn check_support_within(shocks: &ShockDistribution, space: &StateSpace, what: &str) -> Result<(), ModelError> {
    for (i, (m, iv)) in shocks.marginals().iter().zip(space.intervals()).enumerate() {
        let (lo, hi) = m.support();
        let hi_ok = if hi.is_finite() { iv.contains(hi) } else { iv.upper == crate::order::Endpoint::Unbounded };
        let ok = iv.contains(lo) && hi_ok;
        if !ok {
            return Err(ModelError::invalid(
                &format!("shocks[{i}]"),
                &format!("support [{lo}, {hi}] must lie in {what}"),
            ));
        }
    }
    Ok(())
}

fn quantile_pair(shocks: &ShockDistribution) -> (ShockVector, ShockVector) {
    (shocks.quantile_vector(0.75), shocks.quantile_vector(0.25))
}

impl TransitionModel {
    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    pub fn shock_distribution(&self) -> &ShockDistribution {
        &self.shocks
    }

    pub fn metadata(&self) -> &BTreeMap<String, Value> {
        &self.metadata
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Heuristic ordered pair `(v', v'')` shipped with the model: interior quantiles,
    /// or `(v', 0)` for the piecewise exponential family.
    pub fn default_pair(&self) -> &(ShockVector, ShockVector) {
        &self.default_pair
    }

    /// Draw one shock from the model's distribution.
    pub fn sample_shock<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> ShockVector {
        self.shocks.sample(rng)
    }

    /// Config echo (family, params, shocks) used in reports.
    pub fn config(&self) -> ModelConfig {
        ModelConfig::from_parts(self.family.clone(), self.shocks.marginals().to_vec())
    }

    /// An analytic max-norm Lipschitz constant of `w(., v)` when the family provides one.
    pub fn analytic_lipschitz(&self, v: &ShockVector) -> Option<f64> {
        match &self.family {
            Family::Ar1(p) => Some(p.norm_inf()),
            Family::Rca1(p) => Some(v[0].max(0.0) * p.f.lipschitz()),
            Family::Portfolio(p) => {
                Some((1.0 + v[0]).max(0.0) * p.g1.lipschitz() + (1.0 + v[1]).max(0.0) * p.g2.lipschitz())
            }
            Family::Resource(_) | Family::PiecewiseExp(_) => None,
        }
    }

    /// Two test points: `-1` and `+1` in every coordinate, clamped into `S`.
    pub fn default_test_points(&self) -> Vec<StateVector> {
        let n = self.state_space.dim();
        [-1.0, 1.0].iter().filter_map(|&c| self.state_space.clamp(&vec![c; n])).collect()
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self, ModelError> {
        let shocks = ShockDistribution::new(cfg.shocks.clone())?;
        match &cfg.family {
            Family::Ar1(p) => make_ar1(p.a.clone(), shocks),
            Family::Rca1(p) => make_rca1(p.f.clone(), shocks),
            Family::Portfolio(p) => make_portfolio(p.clone(), shocks),
            Family::Resource(p) => make_resource(p.c.clone(), p.d.clone(), shocks),
            Family::PiecewiseExp(p) => make_piecewise_exp(p.clone(), shocks),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        Self::from_config(&ModelConfig::from_json_str(text)?)
    }
}

/// Vector AR(1) `X' = A X + V` on `R^n`.
pub fn make_ar1(a: Vec<Vec<f64>>, shocks: ShockDistribution) -> Result<TransitionModel, ModelError> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(ModelError::invalid("params.a", "A must be a nonempty square matrix"));
    }
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(ModelError::invalid(
                    &format!("params.a[{i}][{j}]"),
                    &format!("entries must be finite and nonnegative (monotonicity), got {v}"),
                ));
            }
        }
    }
    check_shock_dim(&shocks, n, "ar1")?;
    let params = Ar1Params { a: a.clone() };
    let norm = params.norm_inf();
    let contraction_ok = norm < 1.0;
    let mut warnings = Vec::new();
    if !contraction_ok {
        warnings.push(format!("||A||_inf = {norm} >= 1: w(., v) is not a max-norm contraction"));
    }
    let metadata =
        BTreeMap::from([("norm_inf".to_owned(), json!(norm)), ("contraction_ok".to_owned(), json!(contraction_ok))]);
    let default_pair = quantile_pair(&shocks);
    Ok(TransitionModel {
        family: Family::Ar1(params),
        kernel: Kernel::Ar1 { a },
        state_space: StateSpace::real(n)?,
        shock_space: StateSpace::real(n)?,
        shocks,
        metadata,
        warnings,
        default_pair,
    })
}

/// Random-coefficient AR(1) `X' = Y f(X) + Z` on `R_+`.
pub fn make_rca1(f: IncreasingFn, shocks: ShockDistribution) -> Result<TransitionModel, ModelError> {
    f.validate().map_err(|r| ModelError::invalid("params.f", &r))?;
    if let Some(s) = f.slopes().into_iter().find(|s| *s > 1.0) {
        return Err(ModelError::invalid("params.f", &format!("slope {s} exceeds 1 (Lipschitz-1 required)")));
    }
    if f.eval(0.0) < 0.0 {
        return Err(ModelError::invalid("params.f", "f must map R_+ into R_+ (f(0) >= 0)"));
    }
    check_shock_dim(&shocks, 2, "rca1")?;
    let shock_space = StateSpace::nonnegative(2)?;
    check_support_within(&shocks, &shock_space, "[0, inf)")?;
    let mean_y = shocks.marginals()[0].mean();
    let tightness_heuristic = mean_y < 1.0;
    let mut warnings = Vec::new();
    if !tightness_heuristic {
        warnings.push(format!("E[Y] = {mean_y} >= 1: tightness heuristic does not hold"));
    }
    let metadata = BTreeMap::from([
        ("mean_y".to_owned(), json!(mean_y)),
        ("tightness_heuristic".to_owned(), json!(tightness_heuristic)),
        ("lipschitz_f".to_owned(), json!(f.lipschitz())),
    ]);
    let default_pair = quantile_pair(&shocks);
    Ok(TransitionModel {
        family: Family::Rca1(Rca1Params { f: f.clone() }),
        kernel: Kernel::Rca1 { f },
        state_space: StateSpace::nonnegative(1)?,
        shock_space,
        shocks,
        metadata,
        warnings,
        default_pair,
    })
}

/// Two-asset portfolio wealth dynamics on `[0, inf)`.
pub fn make_portfolio(p: PortfolioParams, shocks: ShockDistribution) -> Result<TransitionModel, ModelError> {
    p.g1.validate().map_err(|r| ModelError::invalid("params.g1", &r))?;
    p.g2.validate().map_err(|r| ModelError::invalid("params.g2", &r))?;
    if !(p.grid_max.is_finite() && p.grid_max > 0.0) || p.grid_points < 2 {
        return Err(ModelError::invalid(
            "params.grid_max",
            "grid must be [0, grid_max] with grid_max > 0 and >= 2 points",
        ));
    }
    for x in IncreasingFn::grid(p.grid_max, p.grid_points) {
        let (a, b) = (p.g1.eval(x), p.g2.eval(x));
        if a < 0.0 || b < 0.0 {
            return Err(ModelError::invalid(
                "params",
                &format!("g1, g2 must be nonnegative; g1({x}) = {a}, g2({x}) = {b}"),
            ));
        }
        if a + b > x {
            return Err(ModelError::invalid("params", &format!("budget violated at x = {x}: g1 + g2 = {}", a + b)));
        }
    }
    check_shock_dim(&shocks, 3, "portfolio")?;
    let shock_space = StateSpace::new(vec![Interval::above(-1.0), Interval::above(-1.0), Interval::real_line()])?;
    check_support_within(&shocks, &shock_space, "the shock space (-1, inf)^2 x R")?;
    let metadata =
        BTreeMap::from([("grid_max".to_owned(), json!(p.grid_max)), ("grid_points".to_owned(), json!(p.grid_points))]);
    let default_pair = quantile_pair(&shocks);
    Ok(TransitionModel {
        kernel: Kernel::Portfolio { g1: p.g1.clone(), g2: p.g2.clone() },
        family: Family::Portfolio(p),
        state_space: StateSpace::nonnegative(1)?,
        shock_space,
        shocks,
        metadata,
        warnings: Vec::new(),
        default_pair,
    })
}

/// Resource allocation dynamics with `k` firms and `n` resources on `R^n_+`.
///
/// `c` and `d` are indexed `[resource i][firm j][input l]`.
pub fn make_resource(
    c: Vec<Vec<Vec<f64>>>,
    d: Vec<Vec<Vec<f64>>>,
    shocks: ShockDistribution,
) -> Result<TransitionModel, ModelError> {
    let n = c.len();
    let k = c.first().map_or(0, Vec::len);
    if n == 0 || k == 0 {
        return Err(ModelError::invalid("params.c", "need at least one resource and one firm"));
    }
    for (name, t) in [("c", &c), ("d", &d)] {
        if t.len() != n || t.iter().any(|ci| ci.len() != k || ci.iter().any(|cij| cij.len() != n)) {
            return Err(ModelError::invalid(&format!("params.{name}"), &format!("expected shape {n} x {k} x {n}")));
        }
        for (i, ci) in t.iter().enumerate() {
            for (j, cij) in ci.iter().enumerate() {
                for (l, v) in cij.iter().enumerate() {
                    if !(*v > 0.0 && *v < 1.0) {
                        return Err(ModelError::invalid(
                            &format!("params.{name}[{i}][{j}][{l}]"),
                            &format!("must lie in the open interval (0, 1), got {v}"),
                        ));
                    }
                }
            }
        }
    }
    check_shock_dim(&shocks, n, "resource")?;
    let shock_space = StateSpace::nonnegative(n)?;
    check_support_within(&shocks, &shock_space, "[0, inf)")?;
    let metadata = BTreeMap::from([("resources".to_owned(), json!(n)), ("firms".to_owned(), json!(k))]);
    let default_pair = quantile_pair(&shocks);
    Ok(TransitionModel {
        family: Family::Resource(ResourceParams { c: c.clone(), d: d.clone() }),
        kernel: Kernel::Resource { c, d },
        state_space: StateSpace::nonnegative(n)?,
        shock_space,
        shocks,
        metadata,
        warnings: Vec::new(),
        default_pair,
    })
}

/// `w(x, v) = f(x) + v` with the exponential/concave piecewise `f` on `R`.
pub fn make_piecewise_exp(p: PiecewiseExpParams, shocks: ShockDistribution) -> Result<TransitionModel, ModelError> {
    if !(p.delta.is_finite() && p.delta > -1.0) {
        return Err(ModelError::invalid("params.delta", "delta must exceed -1"));
    }
    if !(p.c.is_finite() && p.c > 0.0) {
        return Err(ModelError::invalid("params.c", "c must be positive"));
    }
    if !(p.alpha.is_finite() && p.alpha > 0.0 && p.beta.is_finite() && p.beta > 0.0) {
        return Err(ModelError::invalid("params", "alpha and beta must be positive"));
    }
    check_shock_dim(&shocks, 1, "piecewise_exp")?;
    let (lo, hi) = shocks.marginals()[0].support();
    if !(lo < 0.0 && hi > 0.0 && hi.is_finite()) {
        return Err(ModelError::invalid(
            "shocks[0]",
            &format!("support must be [a, b] with a < 0 < b, got [{lo}, {hi}]"),
        ));
    }
    let v_prime = p.v_prime.unwrap_or_else(|| shocks.marginals()[0].quantile(0.75));
    if !(v_prime > 0.0 && v_prime < hi) {
        return Err(ModelError::invalid("params.v_prime", &format!("v' must lie in (0, {hi}), got {v_prime}")));
    }
    let left = p.c.exp() + p.delta;
    let g = ConcaveSqrt::matching(p.alpha, p.beta, p.c, left);
    let gap = (left - g.eval(p.c)).abs();
    if gap > 1e-9 {
        return Err(ModelError::invalid("params", &format!("f is discontinuous at c (gap {gap})")));
    }
    // b_c > c with g(b_c) <= b_c - v'
    let mut step = 1.0;
    let b_c = loop {
        let b = p.c + step;
        if g.eval(b) <= b - v_prime {
            break b;
        }
        step *= 2.0;
        if !(p.c + step <= p.search_cap) {
            return Err(ModelError::invalid(
                "params",
                &format!("no b_c with g(b_c) <= b_c - v' below the search cap {}", p.search_cap),
            ));
        }
    };
    let metadata = BTreeMap::from([
        ("gamma".to_owned(), json!(g.gamma)),
        ("b_c".to_owned(), json!(b_c)),
        ("v_prime".to_owned(), json!(v_prime)),
        ("continuity_gap".to_owned(), json!(gap)),
    ]);
    let default_pair = (ShockVector::new(vec![v_prime])?, ShockVector::new(vec![0.0])?);
    Ok(TransitionModel {
        kernel: Kernel::PiecewiseExp { delta: p.delta, g },
        family: Family::PiecewiseExp(p),
        state_space: StateSpace::real(1)?,
        shock_space: StateSpace::real(1)?,
        shocks,
        metadata,
        warnings: Vec::new(),
        default_pair,
    })
}

#[cfg(test)]
mod tests;
