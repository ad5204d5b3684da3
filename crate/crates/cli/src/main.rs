//! `monostab`: certify global stability of monotone Markov chains and run the
//! matching simulations.
//!
//! Exit codes: 0 when the verdict passes, 1 on usage or config errors, 2 when a
//! certificate or property check fails.

mod describe;
mod output;
mod points;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use monostab_core::certificate::{certify, CertifyOptions, Route};
use monostab_core::model::{presets, ModelConfig, RunSection};
use monostab_core::montecarlo::{
    convergence_report, coupling_test, crossing_probability, simulate_many, tightness_diagnostic, ConvergenceOptions,
    Metric, DEFAULT_BURN_IN, DEFAULT_CROSSING_REPS, DEFAULT_RADII, DEFAULT_STATIONARY_SAMPLES,
};
use monostab_core::report::{to_json, trajectories_csv, CsvSidecar, RunDocument};
use monostab_core::{ShockVector, StateVector, Streams, TransitionMap, TransitionModel};

const DEFAULT_SEED: u64 = 42;
const SEED_ENV: &str = "MONOSTAB_SEED";

#[derive(Parser)]
#[command(name = "monostab", version, about = "Stability certificates and simulations for monotone Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the stability hypotheses and write a certificate.
    Certify(CertifyArgs),
    /// Simulate trajectories and write them as CSV.
    Simulate(SimulateArgs),
    /// Shared-shock coupling from two ordered starts.
    Couple(CoupleArgs),
    /// Independent-chain crossing probability at step m.
    Crossing(CrossingArgs),
    /// Compare stationary marginals reached from several starts.
    Converge(ConvergeArgs),
    /// Mass outside growing radii over time.
    Tightness(TightnessArgs),
    /// List or describe the builtin model families.
    Models {
        #[command(subcommand)]
        action: ModelsAction,
    },
}

#[derive(Subcommand)]
enum ModelsAction {
    List,
    Describe { family: String },
}

#[derive(Args)]
struct Common {
    /// Model config file (JSON), or `builtin:<family>` for a reference model.
    #[arg(long)]
    model: String,
    /// Master seed; defaults to the config `run.seed`, then $MONOSTAB_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism). Never changes results.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file (default: stdout), written atomically.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    /// Ordered shock pair V_HI V_LO (comma lists for vector shocks).
    #[arg(long, num_args = 2, value_names = ["V_HI", "V_LO"], allow_hyphen_values = true)]
    pair: Option<Vec<String>>,
    /// How condition (i) is established.
    #[arg(long, value_parser = ["direct", "contraction", "concave", "compact"])]
    route: Option<String>,
    /// Lower bracket point for the concave route.
    #[arg(long, allow_hyphen_values = true)]
    bracket_a: Option<String>,
    /// Upper bracket point for the concave route.
    #[arg(long, allow_hyphen_values = true)]
    bracket_b: Option<String>,
    /// Test points (`;` between points, `,` between coordinates).
    #[arg(long, allow_hyphen_values = true)]
    test_points: Option<String>,
    /// Fixed-point residual tolerance (default 1e-9)
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap per fixed-point run (default 10000)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Replications per start for the tightness diagnostic.
    #[arg(long)]
    reps: Option<usize>,
    /// Horizon of the tightness diagnostic.
    #[arg(long)]
    horizon: Option<usize>,
    /// Increasing radii for the tightness diagnostic (comma list).
    #[arg(long)]
    radii: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Start state.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args)]
struct CoupleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    x_low: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x_high: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args)]
struct CrossingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    x_high: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x_low: Option<String>,
    /// Number of transitions.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    reps: Option<usize>,
    /// Certified bound; the check fails when the estimate is below it by more than 3 standard errors.
    #[arg(long)]
    bound: Option<f64>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// At least two starts (`;` between points, `,` between coordinates).
    #[arg(long, allow_hyphen_values = true)]
    starts: Option<String>,
    /// Steps discarded before sampling (default 1000)
    #[arg(long)]
    burn_in: Option<usize>,
    /// Samples per start (default 100000)
    #[arg(long)]
    samples: Option<usize>,
    /// Steps between kept samples (default 1)
    #[arg(long)]
    thinning: Option<usize>,
    /// kolmogorov or wasserstein1.
    #[arg(long)]
    metric: Option<String>,
    /// Largest allowed final distance between starts (default 0.05)
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct TightnessArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    starts: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    radii: Option<String>,
}

/// `Ok(true)`: pass, `Ok(false)`: verdict failure, `Err`: usage or config error.
type Outcome = Result<bool, String>;

struct Loaded {
    model: TransitionModel,
    run: RunSection,
    seed: u64,
}

impl Loaded {
    fn dim(&self) -> usize {
        self.model.state_dim()
    }

    fn state(&self, text: &str, what: &str) -> Result<StateVector, String> {
        let v = points::parse_vector(text, self.dim(), what)?;
        StateVector::new(v).map_err(|e| format!("{what}: {e}"))
    }

    fn state_from(
        &self,
        flag: Option<&str>,
        run: Option<&Vec<f64>>,
        what: &str,
    ) -> Result<Option<StateVector>, String> {
        match (flag, run) {
            (Some(t), _) => self.state(t, what).map(Some),
            (None, Some(v)) => StateVector::new(v.clone()).map(Some).map_err(|e| format!("run.{what}: {e}")),
            (None, None) => Ok(None),
        }
    }

    fn points(&self, flag: Option<&str>, run: Option<&Vec<Vec<f64>>>, what: &str) -> Result<Vec<StateVector>, String> {
        let raw = match (flag, run) {
            (Some(t), _) => points::parse_points(t, self.dim(), what)?,
            (None, Some(v)) => v.clone(),
            (None, None) => return Ok(self.model.default_test_points()),
        };
        raw.into_iter().map(|p| StateVector::new(p).map_err(|e| format!("{what}: {e}"))).collect()
    }

    fn document<T: serde::Serialize>(
        &self,
        kind: &'static str,
        parameters: serde_json::Value,
        passed: bool,
        result: T,
    ) -> String {
        to_json(&RunDocument::new(kind, self.model.config(), self.seed, parameters, passed, result))
    }
}

fn load(common: &Common) -> Result<Loaded, String> {
    let config = match common.model.strip_prefix("builtin:") {
        Some(name) => presets::by_name(name).ok_or_else(|| format!("unknown builtin model `{name}`"))?,
        None => {
            let text = std::fs::read_to_string(&common.model)
                .map_err(|e| format!("cannot read model file {}: {e}", common.model))?;
            ModelConfig::from_json_str(&text).map_err(|e| e.to_string())?
        }
    };
    let model = TransitionModel::from_config(&config).map_err(|e| e.to_string())?;
    let run = config.run.clone().unwrap_or_default();
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(s) => Some(s.trim().parse::<u64>().map_err(|e| format!("{SEED_ENV}={s}: {e}"))?),
        Err(_) => None,
    };
    let seed = common.seed.or(run.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
    for w in model.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(Loaded { model, run, seed })
}

fn parse_radii(flag: Option<&str>, run: Option<&Vec<f64>>) -> Result<Vec<f64>, String> {
    match (flag, run) {
        (Some(t), _) => {
            t.split(',').map(|r| r.trim().parse::<f64>().map_err(|e| format!("radii: `{r}`: {e}"))).collect()
        }
        (None, Some(r)) => Ok(r.clone()),
        (None, None) => Ok(DEFAULT_RADII.to_vec()),
    }
}

fn write(path: Option<&Path>, text: &str) -> Result<(), String> {
    output::emit(path, text).map_err(|e| format!("cannot write output: {e}"))
}

fn shock(model: &TransitionModel, values: Vec<f64>, what: &str) -> Result<ShockVector, String> {
    let n = model.shock_dim();
    let values = match values.len() {
        k if k == n => values,
        1 => vec![values[0]; n],
        k => return Err(format!("{what}: expected {n} coordinates, got {k}")),
    };
    ShockVector::new(values).map_err(|e| format!("{what}: {e}"))
}

fn cmd_certify(a: &CertifyArgs) -> Outcome {
    let l = load(&a.common)?;
    let (v_hi, v_lo) = match (&a.pair, &l.run.pair) {
        (Some(p), _) => (
            shock(&l.model, points::parse_vector(&p[0], l.model.shock_dim(), "pair v_hi")?, "pair v_hi")?,
            shock(&l.model, points::parse_vector(&p[1], l.model.shock_dim(), "pair v_lo")?, "pair v_lo")?,
        ),
        (None, Some(p)) => {
            (shock(&l.model, p.v_hi.clone(), "run.pair.v_hi")?, shock(&l.model, p.v_lo.clone(), "run.pair.v_lo")?)
        }
        (None, None) => l.model.default_pair().clone(),
    };
    let route_name = a.route.clone().or(l.run.route.clone()).unwrap_or_else(|| "direct".into());
    let route = match route_name.as_str() {
        "direct" => Route::Direct,
        "contraction" => Route::Contraction,
        "compact" => Route::Compact,
        "concave" => {
            let pa = l.state_from(a.bracket_a.as_deref(), l.run.bracket_a.as_ref(), "bracket_a")?;
            let pb = l.state_from(a.bracket_b.as_deref(), l.run.bracket_b.as_ref(), "bracket_b")?;
            match (pa, pb) {
                (Some(a), Some(b)) => Route::Concave { a, b },
                _ => return Err("the concave route needs --bracket-a and --bracket-b".into()),
            }
        }
        other => return Err(format!("unknown route `{other}`")),
    };
    let test_points = l.points(a.test_points.as_deref(), l.run.test_points.as_ref(), "test_points")?;
    let defaults = CertifyOptions::default();
    let opts = CertifyOptions {
        tol: a.tol.or(l.run.tol).unwrap_or(defaults.tol),
        max_iter: a.max_iter.or(l.run.max_iter).unwrap_or(defaults.max_iter),
        tightness_reps: a.reps.or(l.run.reps).unwrap_or(defaults.tightness_reps),
        tightness_horizon: a.horizon.or(l.run.horizon).unwrap_or(defaults.tightness_horizon),
        radii: parse_radii(a.radii.as_deref(), l.run.radii.as_ref())?,
        workers: a.common.workers.or(l.run.workers),
        ..defaults
    };
    let report = certify(&l.model, &v_hi, &v_lo, &route, &test_points, l.seed, &opts).map_err(|e| e.to_string())?;
    write(a.common.out.as_deref(), &to_json(&report))?;
    match (&report.splitting, report.overall.reason) {
        (Some(s), None) => eprintln!("certified-modulo-numerics: m = {}, prob_bound = {:e}", s.m, s.prob_bound),
        (_, reason) => eprintln!("failed: {}", reason.unwrap_or("unknown")),
    }
    Ok(report.certified())
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let l = load(&a.common)?;
    let x0 = match l.state_from(a.x0.as_deref(), l.run.starts.as_ref().and_then(|s| s.first()), "x0")? {
        Some(x) => x,
        None => return Err("simulate needs --x0".into()),
    };
    let horizon = a.horizon.or(l.run.horizon).unwrap_or(100);
    let reps = a.reps.or(l.run.reps).unwrap_or(1);
    let workers = a.common.workers.or(l.run.workers);
    let trajectories =
        simulate_many(&l.model, &x0, horizon, reps, &Streams::new(l.seed), workers).map_err(|e| e.to_string())?;
    let csv = trajectories_csv(&trajectories);
    write(a.common.out.as_deref(), &csv)?;
    if let Some(out) = &a.common.out {
        let params = json!({ "x0": x0, "horizon": horizon, "reps": reps });
        let meta = CsvSidecar::new("simulate", l.model.config(), l.seed, params, l.dim());
        write(Some(&output::sidecar_path(out)), &to_json(&meta))?;
    }
    Ok(true)
}

fn ordered_pair(l: &Loaded, low: Option<&str>, high: Option<&str>) -> Result<(StateVector, StateVector), String> {
    let defaults = l.model.default_test_points();
    let x_low = l.state_from(low, l.run.x_low.as_ref(), "x_low")?.unwrap_or_else(|| defaults[0].clone());
    let x_high =
        l.state_from(high, l.run.x_high.as_ref(), "x_high")?.unwrap_or_else(|| defaults[defaults.len() - 1].clone());
    Ok((x_low, x_high))
}

fn cmd_couple(a: &CoupleArgs) -> Outcome {
    let l = load(&a.common)?;
    let (x_low, x_high) = ordered_pair(&l, a.x_low.as_deref(), a.x_high.as_deref())?;
    let horizon = a.horizon.or(l.run.horizon).unwrap_or(100);
    let reps = a.reps.or(l.run.reps).unwrap_or(1000);
    let rep = coupling_test(
        &l.model,
        &x_low,
        &x_high,
        horizon,
        reps,
        &Streams::new(l.seed),
        a.common.workers.or(l.run.workers),
    )
    .map_err(|e| e.to_string())?;
    let passed = rep.passed();
    if let Some(w) = rep.witnesses.first() {
        eprintln!("order violation: replication {}, step {}: low {} high {}", w.rep, w.step, w.low, w.high);
    }
    eprintln!("{} violations over {} replications x {} steps", rep.violations, reps, horizon);
    let params = json!({ "x_low": x_low, "x_high": x_high, "horizon": horizon, "reps": reps });
    write(a.common.out.as_deref(), &l.document("coupling", params, passed, rep))?;
    Ok(passed)
}

fn cmd_crossing(a: &CrossingArgs) -> Outcome {
    let l = load(&a.common)?;
    let (x_low, x_high) = ordered_pair(&l, a.x_low.as_deref(), a.x_high.as_deref())?;
    let reps = a.reps.or(l.run.reps).unwrap_or(DEFAULT_CROSSING_REPS);
    let est = crossing_probability(
        &l.model,
        &x_high,
        &x_low,
        a.m,
        reps,
        &Streams::new(l.seed),
        a.common.workers.or(l.run.workers),
    )
    .map_err(|e| e.to_string())?;
    let passed = a.bound.is_none_or(|b| est.estimate >= b - 3.0 * est.std_error);
    eprintln!("crossing estimate {} (95% CI [{}, {}])", est.estimate, est.ci_low, est.ci_high);
    let params = json!({ "x_high": x_high, "x_low": x_low, "m": a.m, "reps": reps, "bound": a.bound });
    write(a.common.out.as_deref(), &l.document("crossing", params, passed, est))?;
    Ok(passed)
}

fn cmd_converge(a: &ConvergeArgs) -> Outcome {
    let l = load(&a.common)?;
    let starts = l.points(a.starts.as_deref(), l.run.starts.as_ref(), "starts")?;
    let metric: Metric = match a.metric.as_deref().or(l.run.metric.as_deref()) {
        Some(m) => m.parse()?,
        None => Metric::Kolmogorov,
    };
    let opts = ConvergenceOptions {
        burn_in: a.burn_in.or(l.run.burn_in).unwrap_or(DEFAULT_BURN_IN),
        n_samples: a.samples.or(l.run.samples).unwrap_or(DEFAULT_STATIONARY_SAMPLES),
        thinning: a.thinning.or(l.run.thinning).unwrap_or(1),
        metric,
        threshold: a.threshold.or(l.run.threshold).unwrap_or(0.05),
    };
    let rep = convergence_report(&l.model, &starts, opts, &Streams::new(l.seed), a.common.workers.or(l.run.workers))
        .map_err(|e| e.to_string())?;
    let passed = rep.passed;
    eprintln!("max final distance {} (threshold {})", rep.max_final_distance, rep.threshold);
    write(a.common.out.as_deref(), &l.document("convergence", json!({}), passed, rep))?;
    Ok(passed)
}

fn cmd_tightness(a: &TightnessArgs) -> Outcome {
    let l = load(&a.common)?;
    let starts = l.points(a.starts.as_deref(), l.run.starts.as_ref(), "starts")?;
    let horizon = a.horizon.or(l.run.horizon).unwrap_or(200);
    let reps = a.reps.or(l.run.reps).unwrap_or(2000);
    let radii = parse_radii(a.radii.as_deref(), l.run.radii.as_ref())?;
    let rep = tightness_diagnostic(
        &l.model,
        &starts,
        horizon,
        reps,
        &radii,
        &Streams::new(l.seed),
        a.common.workers.or(l.run.workers),
    )
    .map_err(|e| e.to_string())?;
    let passed = rep.passed;
    for e in &rep.epsilon_radii {
        match e.radius {
            Some(r) => eprintln!("mass outside radius {r} stays below {}", e.epsilon),
            None => eprintln!("no radius keeps the outside mass below {}", e.epsilon),
        }
    }
    write(a.common.out.as_deref(), &l.document("tightness", json!({}), passed, rep))?;
    Ok(passed)
}

fn cmd_models(action: &ModelsAction) -> Outcome {
    match action {
        ModelsAction::List => {
            for f in &describe::FAMILIES {
                println!("{:<14} {}", f.name, f.summary);
            }
        }
        ModelsAction::Describe { family } => {
            let info = describe::find(family).ok_or_else(|| {
                let names: Vec<&str> = describe::FAMILIES.iter().map(|f| f.name).collect();
                format!("unknown family `{family}` (expected one of {})", names.join(", "))
            })?;
            let example = presets::by_name(info.name).expect("every family has a preset");
            println!(
                "{}: {}\n{}\nexample config:\n{}",
                info.name,
                info.summary,
                info.text,
                to_json(&example).trim_end()
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Couple(a) => cmd_couple(a),
        Command::Crossing(a) => cmd_crossing(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Tightness(a) => cmd_tightness(a),
        Command::Models { action } => cmd_models(action),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
