//! Simulation-based checks: trajectories, shared-shock coupling, independent-chain
//! crossing probabilities, stationary sampling, marginal distances and tightness.
//!
//! Every replication draws from its own keyed stream and all reductions are integer
//! counts or ordered collections, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ModelError, TransitionMap, TransitionModel};
use crate::order::{leq, StateVector};
use crate::rng::{StreamKey, StreamRng, Streams};

pub const DEFAULT_CROSSING_REPS: usize = 100_000;
pub const DEFAULT_STATIONARY_SAMPLES: usize = 100_000;
pub const DEFAULT_BURN_IN: usize = 1_000;
pub const DEFAULT_RADII: [f64; 11] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4, 1e5, 1e6];
/// Tightness passes when each of these masses is bounded by some radius.
pub const TIGHTNESS_EPSILONS: [f64; 2] = [0.1, 0.01];
const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonteCarloError {
    #[error("start {0} lies outside the state space")]
    StartOutside(String),
    #[error("replication {rep}, step {step}: {source}")]
    Step { rep: u64, step: usize, source: ModelError },
    #[error("empty sample set")]
    Empty,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Run `f` on a pool of `workers` threads, or on the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool").install(f),
        _ => f(),
    }
}

fn check_start(model: &TransitionModel, x: &StateVector) -> Result<(), MonteCarloError> {
    if x.dim() != model.state_dim() {
        return Err(MonteCarloError::DimensionMismatch(x.dim(), model.state_dim()));
    }
    if !model.state_space().contains(x) {
        return Err(MonteCarloError::StartOutside(x.to_string()));
    }
    Ok(())
}

fn advance(
    model: &TransitionModel,
    x: &StateVector,
    rng: &mut StreamRng,
    rep: u64,
    step: usize,
) -> Result<StateVector, MonteCarloError> {
    let v = model.sample_shock(rng);
    model.apply(x, &v).map_err(|source| MonteCarloError::Step { rep, step, source })
}

fn first_error<T>(results: Vec<Result<T, MonteCarloError>>) -> Result<Vec<T>, MonteCarloError> {
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: StateVector,
    /// `states[0] == start`; `states.len() == horizon + 1`.
    pub states: Vec<StateVector>,
    pub stream: StreamKey,
}

/// One path of `horizon` transitions from `x0` using the shocks of `stream`.
pub fn simulate(
    model: &TransitionModel,
    x0: &StateVector,
    horizon: usize,
    stream: &StreamKey,
) -> Result<Trajectory, MonteCarloError> {
    if horizon == 0 {
        return Err(MonteCarloError::InvalidArgument("horizon must be at least 1".into()));
    }
    check_start(model, x0)?;
    let mut rng = stream.rng();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    for step in 1..=horizon {
        let next = advance(model, &states[step - 1], &mut rng, stream.index, step)?;
        states.push(next);
    }
    Ok(Trajectory { start: x0.clone(), states, stream: stream.clone() })
}

/// `n_reps` trajectories from `x0`, replication `r` on stream `(purpose, r)`.
pub fn simulate_many(
    model: &TransitionModel,
    x0: &StateVector,
    horizon: usize,
    n_reps: usize,
    streams: &Streams,
    workers: Option<usize>,
) -> Result<Vec<Trajectory>, MonteCarloError> {
    let results = with_workers(workers, || {
        (0..n_reps as u64)
            .into_par_iter()
            .map(|r| simulate(model, x0, horizon, &streams.key("simulate", r)))
            .collect::<Vec<_>>()
    });
    first_error(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingWitness {
    pub rep: u64,
    pub step: usize,
    pub low: StateVector,
    pub high: StateVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub mode: &'static str,
    pub reps: usize,
    pub horizon: usize,
    pub violations: u64,
    /// First violations in replication order.
    pub witnesses: Vec<CouplingWitness>,
    /// Smallest `min_i (high_i - low_i)` seen at the final step.
    pub min_final_gap: f64,
}

impl CouplingReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Run chains from `x_low <= x_high` on identical shock sequences and count steps
/// where `X_low,k <= X_high,k` fails.
pub fn coupling_test(
    model: &TransitionModel,
    x_low: &StateVector,
    x_high: &StateVector,
    horizon: usize,
    n_reps: usize,
    streams: &Streams,
    workers: Option<usize>,
) -> Result<CouplingReport, MonteCarloError> {
    check_start(model, x_low)?;
    check_start(model, x_high)?;
    if !leq(x_low, x_high).unwrap_or(false) {
        return Err(MonteCarloError::InvalidArgument(format!("x_low {x_low} is not <= x_high {x_high}")));
    }
    let run = |r: u64| -> Result<(Vec<CouplingWitness>, u64, f64), MonteCarloError> {
        let mut rng = streams.stream("coupling", r);
        let (mut lo, mut hi) = (x_low.clone(), x_high.clone());
        let mut found = Vec::new();
        let mut count = 0;
        for step in 1..=horizon {
            let v = model.sample_shock(&mut rng);
            lo = model.apply(&lo, &v).map_err(|source| MonteCarloError::Step { rep: r, step, source })?;
            hi = model.apply(&hi, &v).map_err(|source| MonteCarloError::Step { rep: r, step, source })?;
            if !leq(&lo, &hi).unwrap_or(false) {
                count += 1;
                if found.len() < MAX_WITNESSES {
                    found.push(CouplingWitness { rep: r, step, low: lo.clone(), high: hi.clone() });
                }
            }
        }
        let gap = lo.iter().zip(hi.iter()).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
        Ok((found, count, gap))
    };
    let results = with_workers(workers, || (0..n_reps as u64).into_par_iter().map(run).collect::<Vec<_>>());
    let mut witnesses = Vec::new();
    let mut violations = 0;
    let mut min_final_gap = f64::INFINITY;
    for (w, c, g) in first_error(results)? {
        violations += c;
        min_final_gap = min_final_gap.min(g);
        let room = MAX_WITNESSES - witnesses.len();
        witnesses.extend(w.into_iter().take(room));
    }
    Ok(CouplingReport { mode: "shared-shock", reps: n_reps, horizon, violations, witnesses, min_final_gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub mode: &'static str,
    pub m: usize,
    pub reps: usize,
    pub hits: u64,
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_method: &'static str,
}

fn z_95() -> f64 {
    std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(0.95)
}

/// Fraction of independent-chain replications with `X'_m <= X''_m`, where `X'`
/// starts at `x_high` and `X''` at `x_low`.
///
/// The interval is the 95% normal approximation, replaced by the rule of three
/// (`[0, 3/n]` or `[1 - 3/n, 1]`) when every or no replication hits.
pub fn crossing_probability(
    model: &TransitionModel,
    x_high: &StateVector,
    x_low: &StateVector,
    m: usize,
    n_reps: usize,
    streams: &Streams,
    workers: Option<usize>,
) -> Result<CrossingEstimate, MonteCarloError> {
    if m == 0 || n_reps == 0 {
        return Err(MonteCarloError::InvalidArgument("m and n_reps must be at least 1".into()));
    }
    check_start(model, x_high)?;
    check_start(model, x_low)?;
    let run = |r: u64| -> Result<bool, MonteCarloError> {
        let mut up = streams.stream("crossing/high", r);
        let mut down = streams.stream("crossing/low", r);
        let (mut a, mut b) = (x_high.clone(), x_low.clone());
        for step in 1..=m {
            a = advance(model, &a, &mut up, r, step)?;
            b = advance(model, &b, &mut down, r, step)?;
        }
        Ok(leq(&a, &b).unwrap_or(false))
    };
    let results = with_workers(workers, || (0..n_reps as u64).into_par_iter().map(run).collect::<Vec<_>>());
    let hits = first_error(results)?.into_iter().filter(|h| *h).count() as u64;
    let n = n_reps as f64;
    let p = hits as f64 / n;
    let std_error = (p * (1.0 - p) / n).sqrt();
    let (ci_low, ci_high, ci_method) = if hits == 0 {
        (0.0, (3.0 / n).min(1.0), "rule-of-three")
    } else if hits == n_reps as u64 {
        ((1.0 - 3.0 / n).max(0.0), 1.0, "rule-of-three")
    } else {
        let h = z_95() * std_error;
        ((p - h).max(0.0), (p + h).min(1.0), "normal")
    };
    Ok(CrossingEstimate {
        mode: "independent",
        m,
        reps: n_reps,
        hits,
        estimate: p,
        std_error,
        ci_low,
        ci_high,
        ci_method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub start: StateVector,
    pub burn_in: usize,
    pub thinning: usize,
    pub stream: Option<StreamKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<StateVector>,
    provenance: Option<Provenance>,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<StateVector>) -> Result<Self, MonteCarloError> {
        let Some(first) = samples.first() else {
            return Err(MonteCarloError::Empty);
        };
        let n = first.dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != n) {
            return Err(MonteCarloError::DimensionMismatch(bad.dim(), n));
        }
        Ok(EmpiricalDistribution { samples, provenance: None })
    }

    pub fn samples(&self) -> &[StateVector] {
        &self.samples
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].dim()
    }

    /// The first `k` samples.
    pub fn prefix(&self, k: usize) -> EmpiricalDistribution {
        EmpiricalDistribution {
            samples: self.samples[..k.clamp(1, self.len())].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    fn sorted_coord(&self, i: usize) -> Vec<f64> {
        let mut c: Vec<f64> = self.samples.iter().map(|s| s[i]).collect();
        c.sort_by(f64::total_cmp);
        c
    }
}

/// Sample `k` (from 0) is `X_{burn_in + (k + 1) thinning}` of one long chain.
pub fn stationary_samples(
    model: &TransitionModel,
    x0: &StateVector,
    burn_in: usize,
    n_samples: usize,
    thinning: usize,
    stream: &StreamKey,
) -> Result<EmpiricalDistribution, MonteCarloError> {
    if n_samples == 0 || thinning == 0 {
        return Err(MonteCarloError::InvalidArgument("n_samples and thinning must be at least 1".into()));
    }
    check_start(model, x0)?;
    let mut rng = stream.rng();
    let mut x = x0.clone();
    let mut step = 0;
    for _ in 0..burn_in {
        step += 1;
        x = advance(model, &x, &mut rng, stream.index, step)?;
    }
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for _ in 0..thinning {
            step += 1;
            x = advance(model, &x, &mut rng, stream.index, step)?;
        }
        samples.push(x.clone());
    }
    Ok(EmpiricalDistribution {
        samples,
        provenance: Some(Provenance { start: x0.clone(), burn_in, thinning, stream: Some(stream.clone()) }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Kolmogorov,
    Wasserstein1,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kolmogorov" | "ks" => Ok(Metric::Kolmogorov),
            "wasserstein1" | "w1" => Ok(Metric::Wasserstein1),
            other => Err(format!("unknown metric `{other}` (expected kolmogorov or wasserstein1)")),
        }
    }
}

/// `sup_t |F_a(t) - F_b(t)|` for sorted samples.
fn kolmogorov_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `int_0^1 |F_a^-1(u) - F_b^-1(u)| du` for sorted samples, exact for any sizes.
fn wasserstein1_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as u128, b.len() as u128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0u128;
    let mut total = 0.0;
    // breakpoints on the common grid u = k / (na nb)
    while i < a.len() && j < b.len() {
        let next_a = (i as u128 + 1) * nb;
        let next_b = (j as u128 + 1) * na;
        let pos = next_a.min(next_b);
        total += (pos - prev) as f64 * (a[i] - b[j]).abs();
        if next_a == pos {
            i += 1;
        }
        if next_b == pos {
            j += 1;
        }
        prev = pos;
    }
    total / (na * nb) as f64
}

/// Per-coordinate distance between two empirical marginals.
pub fn marginal_distance(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
    metric: Metric,
) -> Result<Vec<f64>, MonteCarloError> {
    if a.is_empty() || b.is_empty() {
        return Err(MonteCarloError::Empty);
    }
    if a.dim() != b.dim() {
        return Err(MonteCarloError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok((0..a.dim())
        .map(|i| {
            let (sa, sb) = (a.sorted_coord(i), b.sorted_coord(i));
            match metric {
                Metric::Kolmogorov => kolmogorov_sorted(&sa, &sb),
                Metric::Wasserstein1 => wasserstein1_sorted(&sa, &sb),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRadius {
    pub epsilon: f64,
    /// Smallest radius whose outside mass stays below `epsilon` at every checkpoint.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub starts: Vec<StateVector>,
    pub horizon: usize,
    pub reps_per_start: usize,
    pub radii: Vec<f64>,
    pub checkpoints: Vec<usize>,
    /// `mass_outside[c][r]`: fraction of replications with `||X_k||_inf > radii[r]`
    /// at `k = checkpoints[c]`.
    pub mass_outside: Vec<Vec<f64>>,
    /// Replications whose state overflowed; counted outside every radius from then on.
    pub diverged: u64,
    pub epsilon_radii: Vec<EpsilonRadius>,
    pub passed: bool,
}

/// `1, 2, 4, ...` below `horizon`, then `horizon`.
pub fn geometric_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 1;
    while k < horizon {
        out.push(k);
        k *= 2;
    }
    out.push(horizon);
    out
}

/// Outside-radius mass over time, pooled over `n_reps` replications per start.
pub fn tightness_diagnostic(
    model: &TransitionModel,
    starts: &[StateVector],
    horizon: usize,
    n_reps: usize,
    radii: &[f64],
    streams: &Streams,
    workers: Option<usize>,
) -> Result<TightnessReport, MonteCarloError> {
    if starts.is_empty() || horizon == 0 || n_reps == 0 {
        return Err(MonteCarloError::InvalidArgument("need starts, horizon >= 1 and n_reps >= 1".into()));
    }
    if radii.is_empty() || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MonteCarloError::InvalidArgument("radii must be a nonempty increasing list".into()));
    }
    for s in starts {
        check_start(model, s)?;
    }
    let checkpoints = geometric_checkpoints(horizon);
    let total = starts.len() * n_reps;
    let run = |job: usize| -> Result<(Vec<Vec<u64>>, bool), MonteCarloError> {
        let (s, r) = (job / n_reps, (job % n_reps) as u64);
        let mut rng = streams.stream(&format!("tightness/{s}"), r);
        let mut x = starts[s].clone();
        let mut counts = vec![vec![0u64; radii.len()]; checkpoints.len()];
        let mut diverged = false;
        let mut c = 0;
        for step in 1..=horizon {
            if !diverged {
                let v = model.sample_shock(&mut rng);
                match model.apply(&x, &v) {
                    Ok(next) => x = next,
                    Err(ModelError::NonFiniteOutput { .. }) => diverged = true,
                    Err(source) => return Err(MonteCarloError::Step { rep: r, step, source }),
                }
            }
            if checkpoints[c] == step {
                let norm = if diverged { f64::INFINITY } else { x.norm_inf() };
                for (k, rad) in radii.iter().enumerate() {
                    counts[c][k] += u64::from(norm > *rad);
                }
                c += 1;
            }
        }
        Ok((counts, diverged))
    };
    let results = with_workers(workers, || (0..total).into_par_iter().map(run).collect::<Vec<_>>());
    let mut counts = vec![vec![0u64; radii.len()]; checkpoints.len()];
    let mut diverged = 0;
    for (cnt, d) in first_error(results)? {
        diverged += u64::from(d);
        for (row, add) in counts.iter_mut().zip(cnt) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    let mass_outside: Vec<Vec<f64>> =
        counts.iter().map(|row| row.iter().map(|&c| c as f64 / total as f64).collect()).collect();
    let epsilon_radii: Vec<EpsilonRadius> = TIGHTNESS_EPSILONS
        .iter()
        .map(|&epsilon| EpsilonRadius {
            epsilon,
            radius: (0..radii.len()).find(|&k| mass_outside.iter().all(|row| row[k] < epsilon)).map(|k| radii[k]),
        })
        .collect();
    let passed = epsilon_radii.iter().all(|e| e.radius.is_some());
    Ok(TightnessReport {
        starts: starts.to_vec(),
        horizon,
        reps_per_start: n_reps,
        radii: radii.to_vec(),
        checkpoints,
        mass_outside,
        diverged,
        epsilon_radii,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub start_a: usize,
    pub start_b: usize,
    /// `curve[c][i]`: distance of coordinate `i` using the first `sample_checkpoints[c]` samples.
    pub curve: Vec<Vec<f64>>,
    pub final_distance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub note: &'static str,
    pub metric: Metric,
    pub threshold: f64,
    pub starts: Vec<StateVector>,
    pub burn_in: usize,
    pub samples: usize,
    pub thinning: usize,
    pub sample_checkpoints: Vec<usize>,
    pub pairs: Vec<PairDistance>,
    pub max_final_distance: f64,
    pub passed: bool,
}

fn sample_checkpoints(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> =
        std::iter::successors(Some(100usize), |k| k.checked_mul(10)).take_while(|&k| k < n).collect();
    out.push(n);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceOptions {
    pub burn_in: usize,
    pub n_samples: usize,
    pub thinning: usize,
    pub metric: Metric,
    pub threshold: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            burn_in: DEFAULT_BURN_IN,
            n_samples: DEFAULT_STATIONARY_SAMPLES,
            thinning: 1,
            metric: Metric::Kolmogorov,
            threshold: 0.05,
        }
    }
}

/// Pairwise marginal distances between stationary samples drawn from each start;
/// passes iff every final distance is below the threshold.
pub fn convergence_report(
    model: &TransitionModel,
    starts: &[StateVector],
    opts: ConvergenceOptions,
    streams: &Streams,
    workers: Option<usize>,
) -> Result<ConvergenceReport, MonteCarloError> {
    if starts.len() < 2 {
        return Err(MonteCarloError::InvalidArgument("at least two starts are required".into()));
    }
    if !(opts.threshold > 0.0) {
        return Err(MonteCarloError::InvalidArgument("threshold must be positive".into()));
    }
    let results = with_workers(workers, || {
        (0..starts.len())
            .into_par_iter()
            .map(|s| {
                stationary_samples(
                    model,
                    &starts[s],
                    opts.burn_in,
                    opts.n_samples,
                    opts.thinning,
                    &streams.key("stationary", s as u64),
                )
            })
            .collect::<Vec<_>>()
    });
    let dists = first_error(results)?;
    let checkpoints = sample_checkpoints(opts.n_samples);
    let mut pairs = Vec::new();
    for a in 0..dists.len() {
        for b in a + 1..dists.len() {
            let curve = checkpoints
                .iter()
                .map(|&k| marginal_distance(&dists[a].prefix(k), &dists[b].prefix(k), opts.metric))
                .collect::<Result<Vec<_>, _>>()?;
            let final_distance = curve.last().cloned().expect("at least one checkpoint");
            pairs.push(PairDistance { start_a: a, start_b: b, curve, final_distance });
        }
    }
    let max_final_distance = pairs.iter().flat_map(|p| p.final_distance.iter().copied()).fold(0.0, f64::max);
    Ok(ConvergenceReport {
        note: "per-coordinate marginal distances; a weaker check than weak convergence of the joint law",
        metric: opts.metric,
        threshold: opts.threshold,
        starts: starts.to_vec(),
        burn_in: opts.burn_in,
        samples: opts.n_samples,
        thinning: opts.thinning,
        sample_checkpoints: checkpoints,
        pairs,
        max_final_distance,
        passed: max_final_distance < opts.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_ar1, make_resource, Marginal, ShockDistribution};

    fn sv(c: &[f64]) -> StateVector {
        StateVector::new(c.to_vec()).unwrap()
    }

    fn ar1(a: f64, shock: Marginal) -> TransitionModel {
        make_ar1(vec![vec![a]], ShockDistribution::new(vec![shock]).unwrap()).unwrap()
    }

    fn point(v: f64) -> Marginal {
        Marginal::Discrete { atoms: vec![v], weights: vec![1.0] }
    }

    fn uniform(low: f64, high: f64) -> Marginal {
        Marginal::Uniform { low, high }
    }

    fn dist(values: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(values.iter().map(|&v| sv(&[v])).collect()).unwrap()
    }

    #[test]
    fn deterministic_recursion() {
        let m = ar1(0.5, point(1.0));
        let t = simulate(&m, &sv(&[0.0]), 3, &Streams::new(0).key("s", 0)).unwrap();
        let xs: Vec<f64> = t.states.iter().map(|s| s[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, 1.5, 1.75]);
    }

    #[test]
    fn horizon_one_and_replay() {
        let m = ar1(0.5, uniform(-1.0, 1.0));
        let key = Streams::new(9).key("s", 4);
        let t = simulate(&m, &sv(&[0.3]), 1, &key).unwrap();
        let v = m.sample_shock(&mut key.rng());
        assert_eq!(t.states, vec![sv(&[0.3]), m.apply(&sv(&[0.3]), &v).unwrap()]);
        assert_eq!(simulate(&m, &sv(&[0.3]), 50, &key).unwrap(), simulate(&m, &sv(&[0.3]), 50, &key).unwrap());
        assert!(simulate(&m, &sv(&[0.3]), 0, &key).is_err());
    }

    #[test]
    fn coupling_gap_halves_exactly() {
        let m = ar1(0.5, uniform(-1.0, 1.0));
        let streams = Streams::new(3);
        let rep = coupling_test(&m, &sv(&[-1.0]), &sv(&[1.0]), 20, 50, &streams, None).unwrap();
        assert_eq!(rep.violations, 0);
        // replay one replication with the shared stream
        let mut rng = streams.stream("coupling", 7);
        let (mut lo, mut hi) = (sv(&[-1.0]), sv(&[1.0]));
        for k in 1..=20 {
            let v = m.sample_shock(&mut rng);
            lo = m.apply(&lo, &v).unwrap();
            hi = m.apply(&hi, &v).unwrap();
            assert!(((hi[0] - lo[0]) - 2.0 * 0.5f64.powi(k)).abs() < 1e-12);
        }
        let same = coupling_test(&m, &sv(&[0.2]), &sv(&[0.2]), 20, 20, &streams, None).unwrap();
        assert_eq!(same.violations, 0);
        assert_eq!(same.min_final_gap, 0.0);
    }

    #[test]
    fn resource_coupling_has_no_violations() {
        let m = make_resource(
            vec![vec![vec![0.5]]],
            vec![vec![vec![0.5]]],
            ShockDistribution::new(vec![uniform(0.0, 0.5)]).unwrap(),
        )
        .unwrap();
        let rep = coupling_test(&m, &sv(&[0.0]), &sv(&[10.0]), 100, 1000, &Streams::new(5), None).unwrap();
        assert!(rep.passed(), "{:?}", rep.witnesses);
    }

    #[test]
    fn crossing_edge_cases() {
        let frozen = ar1(0.5, point(0.5));
        let est = crossing_probability(&frozen, &sv(&[1.0]), &sv(&[1.0]), 3, 100, &Streams::new(1), None).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.ci_method, "rule-of-three");
        let m = ar1(0.5, uniform(-1.0, 1.0));
        let n = 1000;
        let est = crossing_probability(&m, &sv(&[10.0]), &sv(&[-10.0]), 1, n, &Streams::new(1), None).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!((est.ci_low, est.ci_high), (0.0, 3.0 / n as f64));
    }

    #[test]
    fn stationary_bookkeeping() {
        let m = ar1(0.5, point(0.5));
        let key = Streams::new(0).key("st", 0);
        let d = stationary_samples(&m, &sv(&[100.0]), 60, 10, 1, &key).unwrap();
        // 99 * 0.5^60 is far below 1e-9
        assert!(d.samples().iter().all(|s| (s[0] - 1.0).abs() < 1e-9));
        let one = stationary_samples(&m, &sv(&[0.0]), 0, 1, 1, &key).unwrap();
        assert_eq!(one.samples(), &[sv(&[0.5])]);
        let thin = stationary_samples(&ar1(0.5, uniform(-1.0, 1.0)), &sv(&[0.0]), 0, 100, 10, &key).unwrap();
        assert_eq!(thin.len(), 100);
        let long = simulate(&ar1(0.5, uniform(-1.0, 1.0)), &sv(&[0.0]), 1000, &key).unwrap();
        assert_eq!(thin.samples()[99], long.states[1000]);
        assert_eq!(thin.samples()[0], long.states[10]);
    }

    #[test]
    fn distance_examples() {
        let a = dist(&[0.1, 0.5, 0.2, 0.9]);
        for metric in [Metric::Kolmogorov, Metric::Wasserstein1] {
            assert_eq!(marginal_distance(&a, &a, metric).unwrap(), vec![0.0]);
        }
        let zeros = dist(&[0.0; 50]);
        let ones = dist(&[1.0; 50]);
        assert_eq!(marginal_distance(&zeros, &ones, Metric::Kolmogorov).unwrap(), vec![1.0]);
        assert_eq!(marginal_distance(&zeros, &ones, Metric::Wasserstein1).unwrap(), vec![1.0]);
    }

    #[test]
    fn uniform_samples_are_close_in_ks() {
        use rand::Rng;
        let streams = Streams::new(11);
        let draw = |i| {
            let mut r = streams.stream("u", i);
            dist(&(0..100_000).map(|_| r.random::<f64>()).collect::<Vec<_>>())
        };
        let d = marginal_distance(&draw(0), &draw(1), Metric::Kolmogorov).unwrap()[0];
        // two-sample KS: P(D > 0.01) at n = m = 1e5 is about 2 exp(-2 * 5e4 * 1e-4) = 2.7e-4
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn wasserstein_unequal_sizes_matches_cdf_integral() {
        let a = [0.0, 1.0, 3.0];
        let b = [0.5, 2.0];
        // oracle: integral of |F_a - F_b| on a fine grid
        let cdf = |s: &[f64], t: f64| s.iter().filter(|&&x| x <= t).count() as f64 / s.len() as f64;
        let n = 400_000;
        let h = 4.0 / n as f64;
        let oracle: f64 =
            (0..n).map(|k| -1.0 + (k as f64 + 0.5) * h).map(|t| (cdf(&a, t) - cdf(&b, t)).abs() * h).sum();
        let w = marginal_distance(&dist(&a), &dist(&b), Metric::Wasserstein1).unwrap()[0];
        assert!((w - oracle).abs() < 1e-4, "{w} vs {oracle}");
    }

    #[test]
    fn tightness_examples() {
        let m = ar1(0.5, uniform(-1.0, 1.0));
        let starts = [sv(&[-1.0]), sv(&[0.3]), sv(&[1.0])];
        let rep = tightness_diagnostic(&m, &starts, 64, 200, &[3.0], &Streams::new(2), None).unwrap();
        assert!(rep.mass_outside.iter().all(|row| row[0] == 0.0));
        assert!(rep.passed);

        let unstable = ar1(1.5, point(0.0));
        let rep =
            tightness_diagnostic(&unstable, &[sv(&[1.0])], 200, 10, &DEFAULT_RADII, &Streams::new(2), None).unwrap();
        assert!(rep.mass_outside.last().unwrap().iter().all(|&p| p == 1.0));
        assert!(!rep.passed);
        assert!(tightness_diagnostic(&m, &starts, 10, 10, &[2.0, 1.0], &Streams::new(2), None).is_err());
    }

    #[test]
    fn frozen_identity_never_converges() {
        let m = ar1(1.0, point(0.0));
        let opts = ConvergenceOptions { burn_in: 10, n_samples: 1000, ..Default::default() };
        let rep = convergence_report(&m, &[sv(&[0.0]), sv(&[1.0])], opts, &Streams::new(0), None).unwrap();
        assert_eq!(rep.max_final_distance, 1.0);
        assert!(!rep.passed);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = ar1(0.5, uniform(-1.0, 1.0));
        let s = Streams::new(77);
        let run = |w| {
            (
                crossing_probability(&m, &sv(&[1.0]), &sv(&[-1.0]), 2, 5000, &s, Some(w)).unwrap(),
                coupling_test(&m, &sv(&[-1.0]), &sv(&[1.0]), 30, 200, &s, Some(w)).unwrap(),
                tightness_diagnostic(&m, &[sv(&[-5.0]), sv(&[5.0])], 40, 100, &DEFAULT_RADII, &s, Some(w)).unwrap(),
            )
        };
        assert_eq!(run(1), run(8));
    }

    proptest::proptest! {
        #[test]
        fn distance_sanity(xs in proptest::collection::vec(-5.0..5.0f64, 1..40), ys in proptest::collection::vec(-5.0..5.0f64, 1..40)) {
            let (a, b) = (dist(&xs), dist(&ys));
            for metric in [Metric::Kolmogorov, Metric::Wasserstein1] {
                let ab = marginal_distance(&a, &b, metric).unwrap()[0];
                let ba = marginal_distance(&b, &a, metric).unwrap()[0];
                proptest::prop_assert!((ab - ba).abs() < 1e-12);
                proptest::prop_assert!(ab >= 0.0);
                proptest::prop_assert_eq!(marginal_distance(&a, &a, metric).unwrap()[0], 0.0);
            }
            proptest::prop_assert!(marginal_distance(&a, &b, Metric::Kolmogorov).unwrap()[0] <= 1.0);
        }
    }
}
