use super::*;
use crate::order::leq;
use crate::rng::Streams;
use rand::Rng;

fn uniform(low: f64, high: f64) -> Marginal {
    Marginal::Uniform { low, high }
}

fn point(v: f64) -> Marginal {
    Marginal::Discrete { atoms: vec![v], weights: vec![1.0] }
}

fn dist(ms: Vec<Marginal>) -> ShockDistribution {
    ShockDistribution::new(ms).unwrap()
}

fn x(c: &[f64]) -> StateVector {
    StateVector::new(c.to_vec()).unwrap()
}

fn v(c: &[f64]) -> ShockVector {
    ShockVector::new(c.to_vec()).unwrap()
}

#[test]
fn ar1_apply_and_metadata() {
    let m = make_ar1(vec![vec![0.5]], dist(vec![uniform(-1.0, 1.0)])).unwrap();
    assert_eq!(m.apply(&x(&[2.0]), &v(&[1.0])).unwrap(), x(&[2.0]));
    assert_eq!(m.metadata()["norm_inf"], json!(0.5));
    assert_eq!(m.metadata()["contraction_ok"], json!(true));
    assert!(m.warnings().is_empty());
    assert_eq!(m.default_pair().0, v(&[0.5]));
    assert_eq!(m.default_pair().1, v(&[-0.5]));
}

#[test]
fn ar1_row_sum_norm_and_warning() {
    let a = vec![vec![0.6, 0.5], vec![0.0, 0.4]];
    let m = make_ar1(a, dist(vec![uniform(-1.0, 1.0); 2])).unwrap();
    assert!((m.metadata()["norm_inf"].as_f64().unwrap() - 1.1).abs() < 1e-15);
    assert_eq!(m.metadata()["contraction_ok"], json!(false));
    assert_eq!(m.warnings().len(), 1);
}

#[test]
fn ar1_negative_entry_rejected() {
    let err = make_ar1(vec![vec![-0.1]], dist(vec![uniform(-1.0, 1.0)])).unwrap_err();
    assert!(matches!(err, ModelError::InvalidParameter { .. }));
    assert!(make_ar1(vec![vec![0.5, 0.1]], dist(vec![uniform(-1.0, 1.0)])).is_err());
    assert!(make_ar1(vec![vec![0.5]], dist(vec![uniform(-1.0, 1.0); 2])).is_err());
}

#[test]
fn rca1_identity() {
    let m = make_rca1(IncreasingFn::Identity, dist(vec![point(0.5), uniform(0.0, 1.0)])).unwrap();
    assert_eq!(m.apply(&x(&[3.0]), &v(&[0.5, 1.0])).unwrap(), x(&[2.5]));
    assert_eq!(m.metadata()["mean_y"], json!(0.5));
    assert_eq!(m.metadata()["tightness_heuristic"], json!(true));
}

#[test]
fn rca1_slope_and_support_checks() {
    let pl = IncreasingFn::PiecewiseLinear { knots: vec![[0.0, 0.0], [1.0, 1.0], [3.0, 2.0]] };
    assert!(make_rca1(pl, dist(vec![point(0.5), uniform(0.0, 1.0)])).is_ok());
    let steep = IncreasingFn::Linear { slope: 1.5 };
    assert!(make_rca1(steep, dist(vec![point(0.5), uniform(0.0, 1.0)])).is_err());
    let neg = IncreasingFn::Linear { slope: -0.5 };
    assert!(make_rca1(neg, dist(vec![point(0.5), uniform(0.0, 1.0)])).is_err());
    let signed = make_rca1(IncreasingFn::Identity, dist(vec![point(0.5), uniform(-1.0, 1.0)]));
    assert!(signed.is_err());
    let heavy = make_rca1(IncreasingFn::Identity, dist(vec![uniform(0.0, 3.0), uniform(0.0, 1.0)])).unwrap();
    assert_eq!(heavy.metadata()["mean_y"], json!(1.5));
    assert_eq!(heavy.metadata()["tightness_heuristic"], json!(false));
    assert_eq!(heavy.warnings().len(), 1);
}

fn portfolio_params(s1: f64, s2: f64) -> PortfolioParams {
    PortfolioParams {
        g1: IncreasingFn::Linear { slope: s1 },
        g2: IncreasingFn::Linear { slope: s2 },
        grid_max: 10.0,
        grid_points: 1000,
    }
}

#[test]
fn portfolio_apply_and_clamp() {
    let m = make_portfolio(
        portfolio_params(0.25, 0.25),
        dist(vec![uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-20.0, 1.0)]),
    )
    .unwrap();
    assert_eq!(m.apply(&x(&[4.0]), &v(&[-0.25, -0.25, 0.0])).unwrap(), x(&[1.5]));
    assert_eq!(m.apply(&x(&[1.0]), &v(&[-0.5, -0.5, -10.0])).unwrap(), x(&[0.0]));
    // z <= -(1 + r_max) x always clamps
    for &xv in &[0.0, 0.5, 3.0, 7.0] {
        let z = -(1.0 + 0.5) * xv - 1e-9;
        assert_eq!(m.apply(&x(&[xv]), &v(&[0.5, 0.5, z])).unwrap(), x(&[0.0]));
    }
    assert!(m.apply(&x(&[1.0]), &v(&[-1.0, 0.0, 0.0])).is_err());
}

#[test]
fn portfolio_budget_violation() {
    let err = make_portfolio(
        portfolio_params(0.505, 0.505),
        dist(vec![uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-1.0, 1.0)]),
    )
    .unwrap_err();
    assert!(err.to_string().contains("budget"), "{err}");
    let bad_returns = make_portfolio(
        portfolio_params(0.25, 0.25),
        dist(vec![uniform(-1.5, 0.5), uniform(-0.5, 0.5), uniform(-1.0, 1.0)]),
    );
    assert!(bad_returns.is_err());
}

#[test]
fn resource_apply() {
    let m = make_resource(vec![vec![vec![0.5]]], vec![vec![vec![0.5]]], dist(vec![point(0.25)])).unwrap();
    assert_eq!(m.apply(&x(&[1.0]), &v(&[0.25])).unwrap(), x(&[0.75]));
    assert_eq!(m.apply(&x(&[0.0]), &v(&[0.25])).unwrap(), x(&[0.25]));
    assert!(make_resource(vec![vec![vec![1.0]]], vec![vec![vec![0.5]]], dist(vec![point(0.25)])).is_err());
    assert!(make_resource(vec![vec![vec![0.5]]], vec![vec![vec![0.0]]], dist(vec![point(0.25)])).is_err());
    assert!(make_resource(vec![vec![vec![0.5]]], vec![vec![vec![0.5]]], dist(vec![uniform(-1.0, 1.0)])).is_err());
}

#[test]
fn resource_two_by_two() {
    let c = vec![vec![vec![0.2, 0.3], vec![0.1, 0.1]], vec![vec![0.4, 0.1], vec![0.2, 0.3]]];
    let d = vec![vec![vec![0.5, 0.5], vec![0.3, 0.7]], vec![vec![0.9, 0.2], vec![0.5, 0.5]]];
    let m = make_resource(c, d, dist(vec![uniform(0.0, 1.0); 2])).unwrap();
    let out = m.apply(&x(&[1.0, 1.0]), &v(&[0.0, 0.0])).unwrap();
    assert!((out[0] - 0.7).abs() < 1e-15);
    assert!((out[1] - 1.0).abs() < 1e-15);
}

fn piecewise_params() -> PiecewiseExpParams {
    PiecewiseExpParams { delta: -0.9, c: 1.0, alpha: 1.0, beta: 1.0, v_prime: None, search_cap: 1e12 }
}

#[test]
fn piecewise_exp_values_and_continuity() {
    let m = make_piecewise_exp(piecewise_params(), dist(vec![uniform(-0.5, 0.5)])).unwrap();
    assert!((m.apply(&x(&[0.0]), &v(&[0.0])).unwrap()[0] - 0.1).abs() < 1e-15);
    let gap = m.metadata()["continuity_gap"].as_f64().unwrap();
    assert!(gap <= 1e-9);
    let left = m.evaluate(&[1.0], &[0.0])[0];
    let right = m.evaluate(&[1.0f64.next_up()], &[0.0])[0];
    assert!((left - right).abs() <= 1e-9);
    assert_eq!(m.default_pair().1, v(&[0.0]));
    assert_eq!(m.default_pair().0, v(&[0.25]));
    let b_c = m.metadata()["b_c"].as_f64().unwrap();
    assert!(b_c > 1.0);
    assert!(m.evaluate(&[b_c], &[0.0])[0] <= b_c - 0.25);
}

#[test]
fn piecewise_exp_strictly_increasing_on_dense_grid() {
    let m = make_piecewise_exp(piecewise_params(), dist(vec![uniform(-0.5, 0.5)])).unwrap();
    let grid: Vec<f64> = (0..20_001).map(|i| -10.0 + i as f64 * 1e-3).collect();
    for w in grid.windows(2) {
        let (a, b) = (m.evaluate(&[w[0]], &[0.0])[0], m.evaluate(&[w[1]], &[0.0])[0]);
        assert!(b > a, "f({}) = {b} <= f({}) = {a}", w[1], w[0]);
    }
}

#[test]
fn piecewise_exp_rejects_bad_inputs() {
    let d = || dist(vec![uniform(-0.5, 0.5)]);
    assert!(make_piecewise_exp(PiecewiseExpParams { delta: -1.0, ..piecewise_params() }, d()).is_err());
    assert!(make_piecewise_exp(PiecewiseExpParams { c: 0.0, ..piecewise_params() }, d()).is_err());
    assert!(make_piecewise_exp(piecewise_params(), dist(vec![uniform(0.1, 0.5)])).is_err());
    assert!(make_piecewise_exp(piecewise_params(), dist(vec![Marginal::Exponential { rate: 1.0 }])).is_err());
    // a huge v' cannot be beaten below a tiny cap
    let capped = PiecewiseExpParams { v_prime: Some(0.49), search_cap: 1.5, alpha: 5.0, ..piecewise_params() };
    assert!(make_piecewise_exp(capped, d()).is_err());
}

#[test]
fn domain_violations_surface() {
    let m = make_resource(vec![vec![vec![0.5]]], vec![vec![vec![0.5]]], dist(vec![point(0.25)])).unwrap();
    assert!(matches!(m.apply(&x(&[-1.0]), &v(&[0.25])), Err(ModelError::DomainViolation { .. })));
    assert!(matches!(m.apply(&x(&[1.0]), &v(&[-0.25])), Err(ModelError::DomainViolation { .. })));
    let e = make_ar1(vec![vec![0.5]], dist(vec![uniform(-1.0, 1.0)])).unwrap();
    assert!(matches!(e.apply(&x(&[f64::MAX]), &v(&[f64::MAX])), Err(ModelError::NonFiniteOutput { .. })));
}

#[test]
fn presets_build_and_roundtrip() {
    for cfg in presets::all() {
        let m = TransitionModel::from_config(&cfg).unwrap();
        let again = TransitionModel::from_json_str(&m.config().to_json()).unwrap();
        assert_eq!(again.family(), m.family());
        assert_eq!(m.default_test_points().len(), 2);
    }
}

/// Draw `(x'', v'') <= (x', v')` inside a box of `S x E`.
fn ordered_draw<R: Rng>(m: &TransitionModel, rng: &mut R) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let sbox = m.state_space().sampling_box(20.0);
    let ebox = m.shock_distribution().support_space().sampling_box(5.0);
    let mut pick = |lo: &[f64], hi: &[f64]| -> (Vec<f64>, Vec<f64>) {
        lo.iter()
            .zip(hi)
            .map(|(a, b)| {
                let p = a + (b - a) * rng.random::<f64>();
                let q = a + (b - a) * rng.random::<f64>();
                (p.min(q), p.max(q))
            })
            .unzip()
    };
    let (x_lo, x_hi) = pick(sbox.low(), sbox.high());
    let (v_lo, v_hi) = pick(ebox.low(), ebox.high());
    (x_lo, x_hi, v_lo, v_hi)
}

#[test]
fn every_preset_is_monotone_and_closed() {
    let streams = Streams::new(2024);
    for (k, cfg) in presets::all().into_iter().enumerate() {
        let m = TransitionModel::from_config(&cfg).unwrap();
        let mut rng = streams.stream("monotone", k as u64);
        let mut violations = 0;
        for _ in 0..10_000 {
            let (x_lo, x_hi, v_lo, v_hi) = ordered_draw(&m, &mut rng);
            let lo = m.apply_raw(&x_lo, &v_lo).unwrap();
            let hi = m.apply_raw(&x_hi, &v_hi).unwrap();
            if !leq(&lo, &hi).unwrap() {
                violations += 1;
                eprintln!("{}: w({x_lo:?},{v_lo:?}) = {lo} > w({x_hi:?},{v_hi:?}) = {hi}", m.family_name());
            }
            assert!(m.state_space().contains(&lo) && m.state_space().contains(&hi));
        }
        assert_eq!(violations, 0, "{}", m.family_name());
    }
}

#[test]
fn trajectories_are_deterministic_per_stream() {
    let m = TransitionModel::from_config(&presets::rca1()).unwrap();
    let s = Streams::new(9);
    let run = || {
        let mut rng = s.stream("traj", 0);
        let mut state = x(&[1.0]);
        (0..50)
            .map(|_| {
                let shock = m.sample_shock(&mut rng);
                state = m.apply(&state, &shock).unwrap();
                state[0]
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
