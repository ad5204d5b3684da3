//! Numerical checks on a single map `w(., v)`: fixed-point iteration, uniqueness
//! probing, max-norm Lipschitz estimation and strict-concavity testing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, TransitionMap};
use crate::order::{dist_inf, leq, OrderInterval, ShockVector, StateVector};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Comparable pairs closer than this (max norm) carry no strictness evidence.
pub const CONCAVITY_MIN_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("no fixed point within {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("iterate {iteration} escaped the state space: {source}")]
    Escaped { iteration: usize, source: ModelError },
    #[error("iterate {iteration} is not finite: {source}")]
    NonFinite { iteration: usize, source: ModelError },
    #[error("monotone iteration broke its chain at iterate {iteration}")]
    ChainBroken { iteration: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    IncreasingFromBelow,
    DecreasingFromAbove,
    NonMonotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub keep_trace: bool,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, keep_trace: false }
    }
}

impl IterateOptions {
    pub fn with_trace(mut self) -> Self {
        self.keep_trace = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub point: StateVector,
    /// Number of applications `x <- w(x, v)` performed.
    pub iterations: usize,
    /// `||w(point, v) - point||_inf`
    pub residual: f64,
    pub direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<StateVector>>,
}

fn step<M: TransitionMap + ?Sized>(
    map: &M,
    x: &StateVector,
    v: &ShockVector,
    iteration: usize,
) -> Result<StateVector, AnalysisError> {
    map.apply(x, v).map_err(|source| match source {
        ModelError::NonFiniteOutput { .. } => AnalysisError::NonFinite { iteration, source },
        _ => AnalysisError::Escaped { iteration, source },
    })
}

/// Iterate `x_{k+1} = w(x_k, v)` from `x0` until `||w(x, v) - x||_inf <= tol`.
///
/// Starts with `x0 <= w(x0, v)` produce an increasing chain and starts with
/// `x0 >= w(x0, v)` a decreasing one; the chain is checked exactly at every step.
pub fn iterate_map<M: TransitionMap + ?Sized>(
    map: &M,
    v: &ShockVector,
    x0: &StateVector,
    opts: IterateOptions,
) -> Result<FixedPointResult, AnalysisError> {
    if !(opts.tol > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("tol must be positive, got {}", opts.tol)));
    }
    let mut x = x0.clone();
    let mut fx = step(map, &x, v, 0)?;
    let direction = if leq(&x, &fx).expect("map preserves dimension") {
        Direction::IncreasingFromBelow
    } else if leq(&fx, &x).expect("map preserves dimension") {
        Direction::DecreasingFromAbove
    } else {
        Direction::NonMonotone
    };
    let mut trace = opts.keep_trace.then(|| vec![x.clone()]);
    for iteration in 0..=opts.max_iter {
        let residual = dist_inf(&fx, &x);
        if residual <= opts.tol {
            // keep the later iterate when its residual is no larger
            if let Ok(ffx) = map.apply(&fx, v) {
                let next = dist_inf(&ffx, &fx);
                if next <= residual {
                    if let Some(t) = trace.as_mut() {
                        t.push(fx.clone());
                    }
                    return Ok(FixedPointResult {
                        point: fx,
                        iterations: iteration + 1,
                        residual: next,
                        direction,
                        trace,
                    });
                }
            }
            return Ok(FixedPointResult { point: x, iterations: iteration, residual, direction, trace });
        }
        if iteration == opts.max_iter {
            return Err(AnalysisError::MaxIterExceeded { iterations: iteration, residual });
        }
        let ordered = match direction {
            Direction::IncreasingFromBelow => leq(&x, &fx).unwrap_or(false),
            Direction::DecreasingFromAbove => leq(&fx, &x).unwrap_or(false),
            Direction::NonMonotone => true,
        };
        if !ordered {
            return Err(AnalysisError::ChainBroken { iteration: iteration + 1 });
        }
        x = fx;
        if let Some(t) = trace.as_mut() {
            t.push(x.clone());
        }
        fx = step(map, &x, v, iteration + 1)?;
    }
    unreachable!("loop returns at iteration == max_iter")
}

/// Outcome of a multi-start uniqueness probe. Uniqueness can be supported by
/// numerics, never proven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum UniquenessVerdict {
    Supported { point: StateVector, starts: usize },
    Refuted { witnesses: [StateVector; 2], distance: f64 },
    Inconclusive { reasons: Vec<String> },
}

impl UniquenessVerdict {
    pub fn is_supported(&self) -> bool {
        matches!(self, UniquenessVerdict::Supported { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            UniquenessVerdict::Supported { .. } => "supported",
            UniquenessVerdict::Refuted { .. } => "refuted",
            UniquenessVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Run [`iterate_map`] from every start and compare the limits.
///
/// Two converged limits more than `10 tol` apart refute uniqueness (even if other
/// starts failed); agreement of all starts supports it; any failed start without a
/// refutation is inconclusive.
pub fn probe_unique_fixed_point<M: TransitionMap + ?Sized>(
    map: &M,
    v: &ShockVector,
    starts: &[StateVector],
    opts: IterateOptions,
) -> UniquenessVerdict {
    if starts.len() < 2 {
        return UniquenessVerdict::Inconclusive { reasons: vec!["at least two starts are required".into()] };
    }
    let opts = IterateOptions { keep_trace: false, ..opts };
    let mut points = Vec::new();
    let mut reasons = Vec::new();
    for s in starts {
        match iterate_map(map, v, s, opts) {
            Ok(r) => points.push(r.point),
            Err(e) => reasons.push(format!("start {s}: {e}")),
        }
    }
    let limit = 10.0 * opts.tol;
    let mut widest: Option<(usize, usize, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist_inf(&points[i], &points[j]);
            if d > limit && widest.is_none_or(|w| d > w.2) {
                widest = Some((i, j, d));
            }
        }
    }
    if let Some((i, j, distance)) = widest {
        return UniquenessVerdict::Refuted { witnesses: [points[i].clone(), points[j].clone()], distance };
    }
    if !reasons.is_empty() {
        return UniquenessVerdict::Inconclusive { reasons };
    }
    UniquenessVerdict::Supported { point: points.swap_remove(0), starts: starts.len() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    /// Largest observed `||w(x,v) - w(y,v)||_inf / ||x - y||_inf`; a lower bound on
    /// the Lipschitz constant, never an upper bound.
    pub constant_lower_bound: f64,
    pub sample_count: usize,
    pub is_contraction_evidence: bool,
    pub lower_bound_only: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<[StateVector; 2]>,
}

/// Power-of-two lattice spacing about 2^-20 of `width`. Points on this lattice keep
/// affine maps with dyadic coefficients exact.
fn lattice_step(width: f64) -> f64 {
    2f64.powi(width.log2().floor() as i32 - 20)
}

fn lattice_draw<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    let h = lattice_step(hi - lo);
    let k_max = ((hi - lo) / h).floor();
    let k = (rng.random::<f64>() * (k_max + 1.0)).floor().min(k_max);
    (lo + k * h).min(hi)
}

fn region_draw<R: Rng + ?Sized>(region: &OrderInterval, rng: &mut R) -> Vec<f64> {
    region.low().iter().zip(region.high().iter()).map(|(&a, &b)| lattice_draw(a, b, rng)).collect()
}

/// Sampled max-norm Lipschitz constant of `w(., v)` on `region`: `n_pairs` random
/// lattice pairs plus axis perturbations of every corner at three scales.
pub fn estimate_contraction<M: TransitionMap + ?Sized, R: Rng + ?Sized>(
    map: &M,
    v: &ShockVector,
    region: &OrderInterval,
    n_pairs: usize,
    rng: &mut R,
) -> ContractionEstimate {
    let mut best = 0.0f64;
    let mut witness = None;
    let mut count = 0usize;
    let mut consider = |x: Vec<f64>, y: Vec<f64>| {
        let gap = dist_inf(&x, &y);
        if gap == 0.0 {
            return;
        }
        let (Ok(wx), Ok(wy)) = (map.apply_raw(&x, v), map.apply_raw(&y, v)) else {
            return;
        };
        count += 1;
        let ratio = dist_inf(&wx, &wy) / gap;
        if ratio > best {
            best = ratio;
            witness = Some([StateVector::new(x).expect("finite"), StateVector::new(y).expect("finite")]);
        }
    };
    for corner in region.corners(8) {
        for i in 0..region.dim() {
            let (lo, hi) = (region.low()[i], region.high()[i]);
            if hi <= lo {
                continue;
            }
            for shift in [4, 12, 24] {
                let h = 2f64.powi((hi - lo).log2().floor() as i32 - shift);
                let mut y = corner.to_vec();
                y[i] = if corner[i] == lo { lo + h } else { hi - h };
                consider(corner.to_vec(), y);
            }
        }
    }
    for _ in 0..n_pairs {
        let x = region_draw(region, rng);
        let y = region_draw(region, rng);
        consider(x, y);
    }
    ContractionEstimate {
        constant_lower_bound: best,
        sample_count: count,
        is_contraction_evidence: best < 1.0,
        lower_bound_only: true,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Concavity {
    StrictlyConcaveEvidence,
    ConcaveNotStrict,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityWitness {
    pub x: StateVector,
    pub y: StateVector,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateConcavity {
    pub coordinate: usize,
    pub verdict: Concavity,
    /// `max(0, -min gap)` over all tested combinations.
    pub worst_violation: f64,
    /// Smallest midpoint gap over comparable pairs at least `1e-3` apart.
    pub min_strict_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ConcavityWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityVerdict {
    pub coordinates: Vec<CoordinateConcavity>,
    pub triples: usize,
    pub tol: f64,
}

impl ConcavityVerdict {
    pub fn overall(&self) -> Concavity {
        let v = |c: Concavity| self.coordinates.iter().any(|k| k.verdict == c);
        if v(Concavity::Violated) {
            Concavity::Violated
        } else if v(Concavity::ConcaveNotStrict) {
            Concavity::ConcaveNotStrict
        } else {
            Concavity::StrictlyConcaveEvidence
        }
    }
}

/// Test `w_i(l x + (1-l) y) >= l w_i(x) + (1-l) w_i(y)` per coordinate on random
/// comparable pairs of `region`, at the midpoint and at one random `l`.
pub fn check_concavity<M: TransitionMap + ?Sized, R: Rng + ?Sized>(
    map: &M,
    v: &ShockVector,
    region: &OrderInterval,
    n_triples: usize,
    tol: f64,
    rng: &mut R,
) -> ConcavityVerdict {
    let n = map.state_dim();
    let mut worst = vec![0.0f64; n];
    let mut witness: Vec<Option<ConcavityWitness>> = vec![None; n];
    let mut min_gap: Vec<Option<f64>> = vec![None; n];
    let mut used = 0;
    for _ in 0..n_triples {
        let p: Vec<f64> =
            region.low().iter().zip(region.high().iter()).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect();
        let q: Vec<f64> =
            region.low().iter().zip(region.high().iter()).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect();
        let lambda: f64 = rng.random();
        let lo: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a.max(*b)).collect();
        let mix = |l: f64| -> Vec<f64> { lo.iter().zip(&hi).map(|(a, b)| l * a + (1.0 - l) * b).collect() };
        let (Ok(wl), Ok(wh), Ok(wm), Ok(wz)) =
            (map.apply_raw(&lo, v), map.apply_raw(&hi, v), map.apply_raw(&mix(0.5), v), map.apply_raw(&mix(lambda), v))
        else {
            continue;
        };
        used += 1;
        let separated = dist_inf(&lo, &hi) >= CONCAVITY_MIN_SEPARATION;
        for i in 0..n {
            let mid_gap = wm[i] - (0.5 * wl[i] + 0.5 * wh[i]);
            let rand_gap = wz[i] - (lambda * wl[i] + (1.0 - lambda) * wh[i]);
            for (gap, l) in [(mid_gap, 0.5), (rand_gap, lambda)] {
                if -gap > worst[i] {
                    worst[i] = -gap;
                    witness[i] = Some(ConcavityWitness {
                        x: StateVector::new(lo.clone()).expect("finite"),
                        y: StateVector::new(hi.clone()).expect("finite"),
                        lambda: l,
                    });
                }
            }
            if separated {
                min_gap[i] = Some(min_gap[i].map_or(mid_gap, |g: f64| g.min(mid_gap)));
            }
        }
    }
    let coordinates = (0..n)
        .map(|i| {
            let verdict = if worst[i] > tol {
                Concavity::Violated
            } else if min_gap[i].is_some_and(|g| g > tol) {
                Concavity::StrictlyConcaveEvidence
            } else {
                Concavity::ConcaveNotStrict
            };
            CoordinateConcavity {
                coordinate: i,
                verdict,
                worst_violation: worst[i],
                min_strict_gap: min_gap[i],
                witness: if verdict == Concavity::Violated { witness[i].take() } else { None },
            }
        })
        .collect();
    ConcavityVerdict { coordinates, triples: used, tol }
}
