//! Stability certificates.
//!
//! A certificate needs an ordered normal pair `(v', v'')`, a unique fixed point of
//! `w(., v'')` or `w(., v')` (condition (i)), bounding points around every tested
//! state (condition (ii)) and the splitting data: the limits `C` of the increasing
//! chain under `v'` and `C*` of the decreasing chain under `v''`, the midpoint
//! `x* = (C + C*) / 2`, the number `m` of transitions after which both chains have
//! crossed `x*`, and the bound `(p_up p_down)^m` on the crossing probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_concavity, estimate_contraction, iterate_map, probe_unique_fixed_point, AnalysisError, Concavity,
    ConcavityVerdict, ContractionEstimate, IterateOptions, UniquenessVerdict, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::model::{ModelError, TransitionMap, TransitionModel};
use crate::montecarlo::{tightness_diagnostic, TightnessReport, DEFAULT_RADII};
use crate::order::{leq, lt_all, lt_strict, pointwise_max, pointwise_min, OrderInterval, ShockVector, StateVector};
use crate::report::{ModelEcho, ToolInfo};
use crate::rng::Streams;

pub const DEFAULT_SEARCH_CAP: u32 = 64;
pub const DEFAULT_SAMPLING_RADIUS: f64 = 100.0;
/// `C - C*` must exceed this multiple of `tol` in every coordinate.
pub const SEPARATION_FACTOR: f64 = 100.0;
pub const CERTIFIED: &str = "certified-modulo-numerics";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CertificateError {
    #[error("shocks are not strictly ordered: v_lo = {v_lo} is not < v_hi = {v_hi}")]
    NotOrdered { v_hi: String, v_lo: String },
    #[error("zero tail mass: P(V >= v_hi) = {p_up}, P(V <= v_lo) = {p_down}")]
    ZeroTailMass { p_up: f64, p_down: f64 },
    #[error("dominance fails at x = {x}: w(x, v_hi) = {w_hi}, w(x, v_lo) = {w_lo}")]
    DominanceViolation { x: StateVector, w_hi: StateVector, w_lo: StateVector },
    #[error("shock {0} lies outside the shock space")]
    ShockOutside(String),
    #[error("no {side} bounding point within {cap} doublings")]
    SearchCapExceeded { side: &'static str, cap: u32 },
    #[error("fixed points not separated: C = {c}, C* = {c_star}, need C - C* > {required:e}")]
    FixedPointsNotSeparated { c: StateVector, c_star: StateVector, required: f64 },
    #[error("iterates did not cross the split point within {steps} transitions")]
    SplitNotReached { steps: usize },
    #[error("{side} iteration failed: {source}")]
    Iteration { side: &'static str, source: AnalysisError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedNormalPair {
    pub v_hi: ShockVector,
    pub v_lo: ShockVector,
    /// `P(V >= v_hi)`, closed tail.
    pub p_up: f64,
    /// `P(V <= v_lo)`, closed tail.
    pub p_down: f64,
    pub dominance_samples: usize,
}

fn check_shock(model: &TransitionModel, v: &ShockVector) -> Result<(), CertificateError> {
    if v.dim() != model.shock_dim() || !model.shock_space().contains(v) {
        return Err(CertificateError::ShockOutside(v.to_string()));
    }
    Ok(())
}

fn check_state<M: TransitionMap + ?Sized>(map: &M, x: &StateVector, what: &str) -> Result<(), CertificateError> {
    if x.dim() != map.state_dim() || !map.state_space().contains(x) {
        return Err(CertificateError::InvalidInput(format!("{what} {x} is not in the state space")));
    }
    Ok(())
}

/// Verify `(v_hi, v_lo)` is an ordered normal pair: strict order, positive tails and
/// `w(x, v_hi) > w(x, v_lo)` on `n_x_samples` random states of the sampling box
/// plus the box corners and the model's test points.
pub fn verify_normal_pair<R: Rng + ?Sized>(
    model: &TransitionModel,
    v_hi: &ShockVector,
    v_lo: &ShockVector,
    n_x_samples: usize,
    rng: &mut R,
) -> Result<OrderedNormalPair, CertificateError> {
    verify_normal_pair_with(model, v_hi, v_lo, n_x_samples, DEFAULT_SAMPLING_RADIUS, &[], rng)
}

/// [`verify_normal_pair`] with an explicit sampling radius and extra states.
pub fn verify_normal_pair_with<R: Rng + ?Sized>(
    model: &TransitionModel,
    v_hi: &ShockVector,
    v_lo: &ShockVector,
    n_x_samples: usize,
    radius: f64,
    extra_points: &[StateVector],
    rng: &mut R,
) -> Result<OrderedNormalPair, CertificateError> {
    check_shock(model, v_hi)?;
    check_shock(model, v_lo)?;
    if !lt_strict(v_lo, v_hi).unwrap_or(false) {
        return Err(CertificateError::NotOrdered { v_hi: v_hi.to_string(), v_lo: v_lo.to_string() });
    }
    let shocks = model.shock_distribution();
    let p_up = shocks.tail_mass_above(v_hi).map_err(ModelError::from)?;
    let p_down = shocks.tail_mass_below(v_lo).map_err(ModelError::from)?;
    if !(p_up > 0.0 && p_down > 0.0) {
        return Err(CertificateError::ZeroTailMass { p_up, p_down });
    }
    let region = model.state_space().sampling_box(radius);
    let mut points = region.corners(10);
    points.extend(model.default_test_points());
    points.extend(extra_points.iter().cloned());
    for _ in 0..n_x_samples {
        let x: Vec<f64> =
            region.low().iter().zip(region.high().iter()).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect();
        points.push(StateVector::new(x).expect("finite box"));
    }
    for x in &points {
        let w_hi = model.apply(x, v_hi)?;
        let w_lo = model.apply(x, v_lo)?;
        if !lt_strict(&w_lo, &w_hi).unwrap_or(false) {
            return Err(CertificateError::DominanceViolation { x: x.clone(), w_hi, w_lo });
        }
    }
    Ok(OrderedNormalPair { v_hi: v_hi.clone(), v_lo: v_lo.clone(), p_up, p_down, dominance_samples: points.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingPair {
    pub x: StateVector,
    pub y_lo: StateVector,
    pub y_hi: StateVector,
    /// Both ends are the least and greatest elements of `S`; no search ran.
    pub fast_path: bool,
    pub search_steps: [u32; 2],
    /// `min_i (y_hi - w(y_hi, v'))_i`, nonnegative when verified.
    pub hi_slack: f64,
    /// `min_i (w(y_lo, v'') - y_lo)_i`, nonnegative when verified.
    pub lo_slack: f64,
}

fn upper_holds<M: TransitionMap + ?Sized>(map: &M, v: &ShockVector, x: &StateVector, y: &StateVector) -> Option<f64> {
    let w = map.apply(y, v).ok()?;
    (leq(x, y).ok()? && leq(&w, y).ok()?)
        .then(|| y.iter().zip(w.iter()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min))
}

fn lower_holds<M: TransitionMap + ?Sized>(map: &M, v: &ShockVector, x: &StateVector, y: &StateVector) -> Option<f64> {
    let w = map.apply(y, v).ok()?;
    (leq(y, x).ok()? && leq(y, &w).ok()?)
        .then(|| w.iter().zip(y.iter()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min))
}

/// Constant vectors `x_bar + u t` for `t = 0, 1, 2, 4, ...` clamped into `S`.
fn candidates<M: TransitionMap + ?Sized>(
    map: &M,
    base: f64,
    sign: f64,
    cap: u32,
) -> impl Iterator<Item = (u32, StateVector)> + '_ {
    let u = base.abs().max(1.0);
    let n = map.state_dim();
    (0..=cap + 1).filter_map(move |k| {
        let t = if k == 0 { 0.0 } else { 2f64.powi(k as i32 - 1) };
        let c = base + sign * u * t;
        c.is_finite().then(|| map.state_space().clamp(&vec![c; n])).flatten().map(|y| (k, y))
    })
}

fn search_upper<M: TransitionMap + ?Sized>(
    map: &M,
    v: &ShockVector,
    x: &StateVector,
    cap: u32,
) -> Result<(StateVector, bool, u32), CertificateError> {
    if let Some(g) = map.state_space().greatest_element() {
        if upper_holds(map, v, x, &g).is_some() {
            return Ok((g, true, 0));
        }
    }
    let x_bar = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    candidates(map, x_bar, 1.0, cap)
        .find(|(_, y)| upper_holds(map, v, x, y).is_some())
        .map(|(k, y)| (y, false, k))
        .ok_or(CertificateError::SearchCapExceeded { side: "upper", cap })
}

fn search_lower<M: TransitionMap + ?Sized>(
    map: &M,
    v: &ShockVector,
    x: &StateVector,
    cap: u32,
) -> Result<(StateVector, bool, u32), CertificateError> {
    if let Some(l) = map.state_space().least_element() {
        if lower_holds(map, v, x, &l).is_some() {
            return Ok((l, true, 0));
        }
    }
    let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
    candidates(map, x_min, -1.0, cap)
        .find(|(_, y)| lower_holds(map, v, x, y).is_some())
        .map(|(k, y)| (y, false, k))
        .ok_or(CertificateError::SearchCapExceeded { side: "lower", cap })
}

/// Points `y'' <= x <= y'` with `w(y', v') <= y'` and `w(y'', v'') >= y''`.
///
/// Uses the greatest and least elements of `S` when they exist; otherwise doubles
/// the offset of a constant vector from `max_i x_i` (resp. `min_i x_i`) until the
/// inequality holds or `search_cap` doublings are spent.
pub fn find_bounding_pair<M: TransitionMap + ?Sized>(
    map: &M,
    pair: &OrderedNormalPair,
    x: &StateVector,
    search_cap: u32,
) -> Result<BoundingPair, CertificateError> {
    check_state(map, x, "test point")?;
    let (y_hi, fast_hi, steps_hi) = search_upper(map, &pair.v_hi, x, search_cap)?;
    let (y_lo, fast_lo, steps_lo) = search_lower(map, &pair.v_lo, x, search_cap)?;
    let hi_slack = upper_holds(map, &pair.v_hi, x, &y_hi)
        .ok_or(CertificateError::SearchCapExceeded { side: "upper", cap: search_cap })?;
    let lo_slack = lower_holds(map, &pair.v_lo, x, &y_lo)
        .ok_or(CertificateError::SearchCapExceeded { side: "lower", cap: search_cap })?;
    Ok(BoundingPair {
        x: x.clone(),
        y_lo,
        y_hi,
        fast_path: fast_hi && fast_lo,
        search_steps: [steps_lo, steps_hi],
        hi_slack,
        lo_slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingCertificate {
    pub pair: OrderedNormalPair,
    /// Start of the increasing chain under `v_hi`.
    pub x_low: StateVector,
    /// Start of the decreasing chain under `v_lo`.
    pub x_high: StateVector,
    /// `[low, high]`: whether the tested point was replaced by a bounding point.
    pub substituted: [bool; 2],
    #[serde(rename = "C")]
    pub c: StateVector,
    #[serde(rename = "C_star")]
    pub c_star: StateVector,
    pub x_split: StateVector,
    /// Number of applications of `w` (transitions), at least 1.
    pub m: usize,
    pub prob_bound: f64,
    pub residual_z: f64,
    pub residual_y: f64,
    /// `trace_z[k]`: state after `k` transitions from `x_low` under `v_hi`.
    pub trace_z: Vec<StateVector>,
    /// `trace_y[k]`: state after `k` transitions from `x_high` under `v_lo`.
    pub trace_y: Vec<StateVector>,
}

fn extend_trace<M: TransitionMap + ?Sized>(
    map: &M,
    v: &ShockVector,
    trace: &mut Vec<StateVector>,
    upto: usize,
    side: &'static str,
) -> Result<(), CertificateError> {
    while trace.len() <= upto {
        let next = map.apply(trace.last().expect("trace holds the start"), v).map_err(|e| {
            CertificateError::Iteration { side, source: AnalysisError::Escaped { iteration: trace.len(), source: e } }
        })?;
        trace.push(next);
    }
    Ok(())
}

/// Run the two monotone chains, check `C* < C` and find the crossing step `m`.
///
/// A start that does not begin a monotone chain (`x_low > w(x_low, v')` somewhere,
/// or `x_high < w(x_high, v'')`) is replaced by the bounding point on that side.
pub fn build_splitting_certificate<M: TransitionMap + ?Sized>(
    map: &M,
    pair: &OrderedNormalPair,
    x_low: &StateVector,
    x_high: &StateVector,
    opts: IterateOptions,
    search_cap: u32,
) -> Result<SplittingCertificate, CertificateError> {
    check_state(map, x_low, "x_low")?;
    check_state(map, x_high, "x_high")?;
    if !leq(x_low, x_high).unwrap_or(false) {
        return Err(CertificateError::InvalidInput(format!("x_low {x_low} is not <= x_high {x_high}")));
    }
    let low_ok = map.apply(x_low, &pair.v_hi).map(|w| leq(x_low, &w).unwrap_or(false))?;
    let start_z = if low_ok { x_low.clone() } else { search_lower(map, &pair.v_lo, x_low, search_cap)?.0 };
    let high_ok = map.apply(x_high, &pair.v_lo).map(|w| leq(&w, x_high).unwrap_or(false))?;
    let start_y = if high_ok { x_high.clone() } else { search_upper(map, &pair.v_hi, x_high, search_cap)?.0 };

    let opts = opts.with_trace();
    let z = iterate_map(map, &pair.v_hi, &start_z, opts)
        .map_err(|source| CertificateError::Iteration { side: "upper-limit", source })?;
    let y = iterate_map(map, &pair.v_lo, &start_y, opts)
        .map_err(|source| CertificateError::Iteration { side: "lower-limit", source })?;
    let (c, c_star) = (z.point, y.point);
    let required = SEPARATION_FACTOR * opts.tol;
    if !c.iter().zip(c_star.iter()).all(|(a, b)| a - b > required) {
        return Err(CertificateError::FixedPointsNotSeparated { c, c_star, required });
    }
    let x_split =
        StateVector::new(c.iter().zip(c_star.iter()).map(|(a, b)| (a + b) / 2.0).collect()).expect("finite midpoint");
    let mut trace_z = z.trace.expect("trace requested");
    let mut trace_y = y.trace.expect("trace requested");
    let limit = trace_z.len().max(trace_y.len()) + opts.max_iter;
    let mut m = 1;
    loop {
        if m > limit {
            return Err(CertificateError::SplitNotReached { steps: limit });
        }
        extend_trace(map, &pair.v_hi, &mut trace_z, m, "upper-limit")?;
        extend_trace(map, &pair.v_lo, &mut trace_y, m, "lower-limit")?;
        if lt_all(&x_split, &trace_z[m]).unwrap_or(false) && lt_all(&trace_y[m], &x_split).unwrap_or(false) {
            break;
        }
        m += 1;
    }
    let prob_bound = (pair.p_up * pair.p_down).powi(m as i32);
    Ok(SplittingCertificate {
        pair: pair.clone(),
        x_low: start_z,
        x_high: start_y,
        substituted: [!low_ok, !high_ok],
        c,
        c_star,
        x_split,
        m,
        prob_bound,
        residual_z: z.residual,
        residual_y: y.residual,
        trace_z,
        trace_y,
    })
}

impl SplittingCertificate {
    /// Re-check the stored certificate against `map` without re-running the search.
    /// Returns the list of violated invariants (empty when consistent).
    pub fn recheck<M: TransitionMap + ?Sized>(&self, map: &M, tol: f64) -> Vec<String> {
        let mut problems = Vec::new();
        for (name, trace, v) in
            [("trace_z", &self.trace_z, &self.pair.v_hi), ("trace_y", &self.trace_y, &self.pair.v_lo)]
        {
            for k in 1..trace.len() {
                match map.apply(&trace[k - 1], v) {
                    Ok(next) if next == trace[k] => {}
                    _ => problems.push(format!("{name}[{k}] does not replay")),
                }
            }
        }
        if !self.trace_z.windows(2).all(|w| leq(&w[0], &w[1]).unwrap_or(false)) {
            problems.push("trace_z is not increasing".into());
        }
        if !self.trace_y.windows(2).all(|w| leq(&w[1], &w[0]).unwrap_or(false)) {
            problems.push("trace_y is not decreasing".into());
        }
        if !(self.residual_z <= tol && self.residual_y <= tol) {
            problems.push("final residual exceeds tol".into());
        }
        if !lt_all(&self.c_star, &self.c).unwrap_or(false) {
            problems.push("C* < C fails".into());
        }
        if !(lt_all(&self.c_star, &self.x_split).unwrap_or(false) && lt_all(&self.x_split, &self.c).unwrap_or(false)) {
            problems.push("x_split is not strictly between C* and C".into());
        }
        let m = self.m;
        if m == 0 || m >= self.trace_z.len() || m >= self.trace_y.len() {
            problems.push("m is outside the stored traces".into());
        } else {
            if !self.trace_z[m..].iter().all(|z| lt_all(&self.x_split, z).unwrap_or(false)) {
                problems.push("trace_z is not above x_split from step m on".into());
            }
            if !self.trace_y[m..].iter().all(|y| lt_all(y, &self.x_split).unwrap_or(false)) {
                problems.push("trace_y is not below x_split from step m on".into());
            }
            let crossed_early = lt_all(&self.x_split, &self.trace_z[m - 1]).unwrap_or(false)
                && lt_all(&self.trace_y[m - 1], &self.x_split).unwrap_or(false);
            if m > 1 && crossed_early {
                problems.push("m is not the first crossing".into());
            }
        }
        let expected = (self.pair.p_up * self.pair.p_down).powi(m as i32);
        if (self.prob_bound - expected).abs() > f64::EPSILON * expected {
            problems.push("prob_bound does not equal (p_up p_down)^m".into());
        }
        if !(self.prob_bound > 0.0 && self.prob_bound <= 1.0) {
            problems.push("prob_bound outside (0, 1]".into());
        }
        problems
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Route {
    Direct,
    Contraction,
    /// Bracketing points `a < b` with `w(a, .) > a` and `w(b, .) < b`.
    Concave {
        a: StateVector,
        b: StateVector,
    },
    Compact,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Contraction => "contraction",
            Route::Concave { .. } => "concave",
            Route::Compact => "compact",
        }
    }

    /// Evidence class recorded for condition (i).
    pub fn evidence(&self) -> &'static str {
        match self {
            Route::Direct => "direct-unique-fp",
            Route::Contraction => "contraction",
            Route::Concave { .. } => "concave-bracket",
            Route::Compact => "compact-space",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub dominance_samples: usize,
    pub contraction_pairs: usize,
    pub concavity_triples: usize,
    /// Half-width of the sampling box on unbounded coordinates.
    pub sampling_radius: f64,
    pub search_cap: u32,
    pub tightness_reps: usize,
    pub tightness_horizon: usize,
    pub radii: Vec<f64>,
    /// Worker threads for the tightness simulation; never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            dominance_samples: 1000,
            contraction_pairs: 2000,
            concavity_triples: 2000,
            sampling_radius: DEFAULT_SAMPLING_RADIUS,
            search_cap: DEFAULT_SEARCH_CAP,
            tightness_reps: 2000,
            tightness_horizon: 200,
            radii: DEFAULT_RADII.to_vec(),
            workers: None,
        }
    }
}

impl CertifyOptions {
    fn iterate(&self) -> IterateOptions {
        IterateOptions { tol: self.tol, max_iter: self.max_iter, keep_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSection {
    pub v_hi: ShockVector,
    pub v_lo: ShockVector,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_up: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_down: Option<f64>,
    pub dominance_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub shock: &'static str,
    pub starts: usize,
    pub verdict: UniquenessVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionRecord {
    pub shock: &'static str,
    pub sampled: ContractionEstimate,
    /// Family-provided Lipschitz constant, when known.
    pub analytic: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityRecord {
    pub shock: &'static str,
    pub overall: Concavity,
    pub verdict: ConcavityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketCheck {
    pub a: StateVector,
    pub b: StateVector,
    pub w_a: [StateVector; 2],
    pub w_b: [StateVector; 2],
    pub a_pushed_up: bool,
    pub b_pushed_down: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionIDetails {
    Direct { probes: Vec<ProbeRecord>, shock_used: Option<&'static str> },
    Contraction { region: OrderInterval, records: Vec<ContractionRecord>, k_bound: f64 },
    Concave { region: Option<OrderInterval>, records: Vec<ConcavityRecord>, bracket: Option<BracketCheck> },
    Compact { least: Option<StateVector>, greatest: Option<StateVector> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionI {
    pub evidence: &'static str,
    pub established: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub details: ConditionIDetails,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BoundingOutcome {
    Found(BoundingPair),
    Failed { x: StateVector, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionII {
    pub established: bool,
    pub points: Vec<BoundingOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacentSplitting {
    pub x_low: StateVector,
    pub x_high: StateVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prob_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessSection {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<TightnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overall {
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    pub separation: f64,
    pub concavity_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub tool: ToolInfo,
    pub model: ModelEcho,
    pub pair: PairSection,
    pub route: Route,
    pub test_points: Vec<StateVector>,
    pub condition_i: Option<ConditionI>,
    pub condition_ii: Option<ConditionII>,
    /// Certificate for the envelope `[min test points, max test points]`.
    pub splitting: Option<SplittingCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting_error: Option<String>,
    /// Certificates for consecutive test points, summarized.
    pub splitting_adjacent: Vec<AdjacentSplitting>,
    pub tightness: TightnessSection,
    pub overall: Overall,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub budgets: CertifyOptions,
}

impl StabilityReport {
    pub fn certified(&self) -> bool {
        self.overall.status == CERTIFIED
    }
}

fn condition_direct(
    model: &TransitionModel,
    pair: &OrderedNormalPair,
    starts: &[StateVector],
    opts: &CertifyOptions,
) -> ConditionI {
    let mut probes = Vec::new();
    let mut shock_used = None;
    for (name, v) in [("v_lo", &pair.v_lo), ("v_hi", &pair.v_hi)] {
        let verdict = probe_unique_fixed_point(model, v, starts, opts.iterate());
        let ok = verdict.is_supported();
        probes.push(ProbeRecord { shock: name, starts: starts.len(), verdict });
        if ok {
            shock_used = Some(name);
            break;
        }
    }
    ConditionI {
        evidence: Route::Direct.evidence(),
        established: shock_used.is_some(),
        reason: shock_used.is_none().then(|| "uniqueness not supported under v_lo or v_hi".to_owned()),
        details: ConditionIDetails::Direct { probes, shock_used },
    }
}

fn condition_contraction(
    model: &TransitionModel,
    pair: &OrderedNormalPair,
    streams: &Streams,
    opts: &CertifyOptions,
) -> ConditionI {
    let region = model.state_space().sampling_box(opts.sampling_radius);
    let mut records = Vec::new();
    for (k, (name, v)) in [("v_hi", &pair.v_hi), ("v_lo", &pair.v_lo)].into_iter().enumerate() {
        let mut rng = streams.stream("contraction", k as u64);
        let sampled = estimate_contraction(model, v, &region, opts.contraction_pairs, &mut rng);
        let analytic = model.analytic_lipschitz(v);
        let ok = sampled.is_contraction_evidence && analytic.is_none_or(|a| a < 1.0);
        records.push(ContractionRecord { shock: name, sampled, analytic, ok });
    }
    let k_bound = records.iter().map(|r| r.analytic.unwrap_or(r.sampled.constant_lower_bound)).fold(0.0, f64::max);
    let established = records.iter().all(|r| r.ok);
    let reason = if !established {
        Some(format!("Lipschitz bound {k_bound} is not below 1"))
    } else if records.iter().any(|r| r.analytic.is_none()) {
        Some("sampled evidence only: no analytic constant for this family".to_owned())
    } else {
        None
    };
    ConditionI {
        evidence: Route::Contraction.evidence(),
        established,
        reason,
        details: ConditionIDetails::Contraction { region, records, k_bound },
    }
}

fn condition_concave(
    model: &TransitionModel,
    pair: &OrderedNormalPair,
    a: &StateVector,
    b: &StateVector,
    streams: &Streams,
    opts: &CertifyOptions,
) -> Result<ConditionI, CertificateError> {
    check_state(model, a, "bracket point a")?;
    check_state(model, b, "bracket point b")?;
    let fail = |reason: String, details| ConditionI {
        evidence: "concave-bracket",
        established: false,
        reason: Some(reason),
        details,
    };
    let empty = ConditionIDetails::Concave { region: None, records: Vec::new(), bracket: None };
    if !model.state_space().is_nonnegative_orthant() {
        return Ok(fail("the concave route needs the state space [0, inf)^n".into(), empty));
    }
    if !lt_strict(a, b).unwrap_or(false) {
        return Ok(fail(format!("bracket needs a < b, got a = {a}, b = {b}"), empty));
    }
    let zero = model.state_space().least_element().expect("orthant has a least element");
    let region = OrderInterval::new(zero, b.clone()).map_err(ModelError::from)?;
    let w_a = [model.apply(a, &pair.v_lo)?, model.apply(a, &pair.v_hi)?];
    let w_b = [model.apply(b, &pair.v_lo)?, model.apply(b, &pair.v_hi)?];
    let a_pushed_up = w_a.iter().all(|w| lt_all(a, w).unwrap_or(false));
    let b_pushed_down = w_b.iter().all(|w| lt_all(w, b).unwrap_or(false));
    let bracket = BracketCheck { a: a.clone(), b: b.clone(), w_a, w_b, a_pushed_up, b_pushed_down };
    let mut records = Vec::new();
    if region.is_nondegenerate() {
        for (k, (name, v)) in [("v_hi", &pair.v_hi), ("v_lo", &pair.v_lo)].into_iter().enumerate() {
            let mut rng = streams.stream("concavity", k as u64);
            let verdict = check_concavity(model, v, &region, opts.concavity_triples, DEFAULT_TOL, &mut rng);
            records.push(ConcavityRecord { shock: name, overall: verdict.overall(), verdict });
        }
    }
    let strict = !records.is_empty() && records.iter().all(|r| r.overall == Concavity::StrictlyConcaveEvidence);
    let reason = if !region.is_nondegenerate() {
        Some("b must be positive in every coordinate".to_owned())
    } else if !strict {
        Some("strict concavity not supported on [0, b]".to_owned())
    } else if !(a_pushed_up && b_pushed_down) {
        Some("bracket inequalities w(a, .) > a, w(b, .) < b fail".to_owned())
    } else {
        None
    };
    Ok(ConditionI {
        evidence: "concave-bracket",
        established: reason.is_none(),
        reason,
        details: ConditionIDetails::Concave { region: Some(region), records, bracket: Some(bracket) },
    })
}

fn condition_compact(model: &TransitionModel) -> ConditionI {
    let least = model.state_space().least_element();
    let greatest = model.state_space().greatest_element();
    let ok = least.is_some() && greatest.is_some();
    ConditionI {
        evidence: Route::Compact.evidence(),
        established: ok,
        reason: (!ok).then(|| "the state space lacks a least or greatest element".to_owned()),
        details: ConditionIDetails::Compact { least, greatest },
    }
}

fn envelope(points: &[StateVector]) -> (StateVector, StateVector) {
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in &points[1..] {
        lo = pointwise_min(&lo, p).expect("checked dims");
        hi = pointwise_max(&hi, p).expect("checked dims");
    }
    (lo, hi)
}

/// Check every hypothesis of the stability theorem for `model` with the shock pair
/// `(v_hi, v_lo)` along `route`, and assemble the report.
///
/// Verdict failures are recorded in the report; `Err` is returned only for
/// malformed inputs (wrong dimensions, points outside `S`).
pub fn certify(
    model: &TransitionModel,
    v_hi: &ShockVector,
    v_lo: &ShockVector,
    route: &Route,
    test_points: &[StateVector],
    seed: u64,
    opts: &CertifyOptions,
) -> Result<StabilityReport, CertificateError> {
    let test_points: Vec<StateVector> =
        if test_points.is_empty() { model.default_test_points() } else { test_points.to_vec() };
    for x in &test_points {
        check_state(model, x, "test point")?;
    }
    for v in [v_hi, v_lo] {
        if v.dim() != model.shock_dim() {
            return Err(CertificateError::InvalidInput(format!(
                "shock {v} has dimension {}, expected {}",
                v.dim(),
                model.shock_dim()
            )));
        }
    }
    let streams = Streams::new(seed);
    let mut rng = streams.stream("dominance", 0);
    let pair = verify_normal_pair_with(
        model,
        v_hi,
        v_lo,
        opts.dominance_samples,
        opts.sampling_radius,
        &test_points,
        &mut rng,
    );
    let pair_section = match &pair {
        Ok(p) => PairSection {
            v_hi: v_hi.clone(),
            v_lo: v_lo.clone(),
            valid: true,
            p_up: Some(p.p_up),
            p_down: Some(p.p_down),
            dominance_samples: p.dominance_samples,
            error: None,
        },
        Err(e) => PairSection {
            v_hi: v_hi.clone(),
            v_lo: v_lo.clone(),
            valid: false,
            p_up: model.shock_distribution().tail_mass_above(v_hi).ok(),
            p_down: model.shock_distribution().tail_mass_below(v_lo).ok(),
            dominance_samples: 0,
            error: Some(e.to_string()),
        },
    };

    let mut condition_i = None;
    let mut condition_ii = None;
    let mut splitting = None;
    let mut splitting_error = None;
    let mut splitting_adjacent = Vec::new();
    if let Ok(pair) = &pair {
        let points: Vec<BoundingOutcome> = test_points
            .iter()
            .map(|x| match find_bounding_pair(model, pair, x, opts.search_cap) {
                Ok(b) => BoundingOutcome::Found(b),
                Err(e) => BoundingOutcome::Failed { x: x.clone(), error: e.to_string() },
            })
            .collect();
        let established = points.iter().all(|p| matches!(p, BoundingOutcome::Found(_)));
        let mut starts = test_points.clone();
        for p in &points {
            if let BoundingOutcome::Found(b) = p {
                for y in [&b.y_lo, &b.y_hi] {
                    if !starts.contains(y) {
                        starts.push(y.clone());
                    }
                }
            }
        }
        condition_ii = Some(ConditionII { established, points });

        condition_i = Some(match route {
            Route::Direct => condition_direct(model, pair, &starts, opts),
            Route::Contraction => condition_contraction(model, pair, &streams, opts),
            Route::Concave { a, b } => condition_concave(model, pair, a, b, &streams, opts)?,
            Route::Compact => condition_compact(model),
        });

        let (lo, hi) = envelope(&test_points);
        match build_splitting_certificate(model, pair, &lo, &hi, opts.iterate(), opts.search_cap) {
            Ok(c) => splitting = Some(c),
            Err(e) => splitting_error = Some(e.to_string()),
        }
        for w in test_points.windows(2) {
            let lo = pointwise_min(&w[0], &w[1]).expect("checked dims");
            let hi = pointwise_max(&w[0], &w[1]).expect("checked dims");
            let entry = match build_splitting_certificate(model, pair, &lo, &hi, opts.iterate(), opts.search_cap) {
                Ok(c) => AdjacentSplitting {
                    x_low: lo,
                    x_high: hi,
                    m: Some(c.m),
                    prob_bound: Some(c.prob_bound),
                    error: None,
                },
                Err(e) => {
                    AdjacentSplitting { x_low: lo, x_high: hi, m: None, prob_bound: None, error: Some(e.to_string()) }
                }
            };
            splitting_adjacent.push(entry);
        }
    }

    let tightness = match tightness_diagnostic(
        model,
        &test_points,
        opts.tightness_horizon,
        opts.tightness_reps,
        &opts.radii,
        &streams,
        opts.workers,
    ) {
        Ok(r) => TightnessSection { passed: r.passed, report: Some(r), error: None },
        Err(e) => TightnessSection { passed: false, report: None, error: Some(e.to_string()) },
    };

    let reason = if pair.is_err() {
        Some("normal-pair-invalid")
    } else if !condition_i.as_ref().is_some_and(|c| c.established) {
        Some("condition-i-unestablished")
    } else if !condition_ii.as_ref().is_some_and(|c| c.established) {
        Some("condition-ii-unestablished")
    } else if splitting.is_none() || splitting_adjacent.iter().any(|s| s.error.is_some()) {
        Some("splitting-failed")
    } else if !tightness.passed {
        Some("tightness-diagnostic-failed")
    } else {
        None
    };
    Ok(StabilityReport {
        tool: ToolInfo::current(),
        model: ModelEcho::new(model.config()),
        pair: pair_section,
        route: route.clone(),
        test_points,
        condition_i,
        condition_ii,
        splitting,
        splitting_error,
        splitting_adjacent,
        tightness,
        overall: Overall { status: if reason.is_none() { CERTIFIED } else { "failed" }, reason },
        seed,
        tolerances: Tolerances {
            tol: opts.tol,
            max_iter: opts.max_iter,
            separation: SEPARATION_FACTOR * opts.tol,
            concavity_tol: DEFAULT_TOL,
        },
        budgets: opts.clone(),
    })
}

#[cfg(test)]
mod tests;
