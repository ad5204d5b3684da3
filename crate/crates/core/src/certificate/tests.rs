use super::*;
use crate::model::{make_ar1, make_resource, presets, Marginal, ShockDistribution};
use crate::order::{Interval, StateSpace};

fn sv(c: &[f64]) -> StateVector {
    StateVector::new(c.to_vec()).unwrap()
}

fn sh(c: &[f64]) -> ShockVector {
    ShockVector::new(c.to_vec()).unwrap()
}

fn ar1(a: f64) -> TransitionModel {
    let d = ShockDistribution::new(vec![Marginal::Uniform { low: -1.0, high: 1.0 }]).unwrap();
    make_ar1(vec![vec![a]], d).unwrap()
}

fn ar1_pair() -> OrderedNormalPair {
    let mut rng = Streams::new(0).stream("t", 0);
    verify_normal_pair(&ar1(0.5), &sh(&[0.5]), &sh(&[-0.5]), 200, &mut rng).unwrap()
}

/// `w(x, v) = clamp(0.5 x + v, 0, 10)` on `[0, 10]^n`.
struct Boxed(StateSpace, StateSpace);

impl Boxed {
    fn new(n: usize) -> Self {
        Boxed(StateSpace::new(vec![Interval::closed(0.0, 10.0); n]).unwrap(), StateSpace::real(n).unwrap())
    }
}

impl TransitionMap for Boxed {
    fn state_space(&self) -> &StateSpace {
        &self.0
    }
    fn shock_space(&self) -> &StateSpace {
        &self.1
    }
    fn evaluate(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        x.iter().zip(v).map(|(a, b)| (0.5 * a + b).clamp(0.0, 10.0)).collect()
    }
}

#[test]
fn normal_pair_examples() {
    let p = ar1_pair();
    assert_eq!((p.p_up, p.p_down), (0.25, 0.25));
    assert!(p.dominance_samples >= 200);
    let mut rng = Streams::new(0).stream("t", 1);
    let m = ar1(0.5);
    assert!(matches!(
        verify_normal_pair(&m, &sh(&[1.0]), &sh(&[-0.5]), 10, &mut rng),
        Err(CertificateError::ZeroTailMass { p_up, .. }) if p_up == 0.0
    ));
    assert!(matches!(
        verify_normal_pair(&m, &sh(&[-0.5]), &sh(&[0.5]), 10, &mut rng),
        Err(CertificateError::NotOrdered { .. })
    ));
    assert!(matches!(
        verify_normal_pair(&m, &sh(&[0.5]), &sh(&[0.5]), 10, &mut rng),
        Err(CertificateError::NotOrdered { .. })
    ));
}

#[test]
fn dominance_violation_has_witness() {
    // X' = Y X + Z with v_hi raising Y but lowering Z: at x = 0 the order flips
    let m = TransitionModel::from_config(&presets::rca1()).unwrap();
    let mut rng = Streams::new(0).stream("t", 2);
    let err = verify_normal_pair(&m, &sh(&[0.9, 0.2]), &sh(&[0.1, 0.2]), 10, &mut rng).unwrap_err();
    match err {
        CertificateError::DominanceViolation { x, w_hi, w_lo } => {
            assert_eq!(x[0], 0.0);
            assert_eq!(w_hi, w_lo);
        }
        e => panic!("{e}"),
    }
}

#[test]
fn bounding_pair_on_the_line() {
    let b = find_bounding_pair(&ar1(0.5), &ar1_pair(), &sv(&[0.0]), DEFAULT_SEARCH_CAP).unwrap();
    assert_eq!(b.y_hi, sv(&[1.0]));
    assert!(b.y_lo[0] <= -1.0);
    assert!(!b.fast_path);
    assert!(b.hi_slack >= 0.0 && b.lo_slack >= 0.0);
}

#[test]
fn bounding_pair_search_cap() {
    let expanding = ar1(1.2);
    let mut rng = Streams::new(0).stream("t", 3);
    let pair = verify_normal_pair(&expanding, &sh(&[0.5]), &sh(&[-0.5]), 10, &mut rng).unwrap();
    // 1.2 y + 0.5 <= y has no solution with y >= 0
    assert!(matches!(
        find_bounding_pair(&expanding, &pair, &sv(&[0.0]), 8),
        Err(CertificateError::SearchCapExceeded { side: "upper", cap: 8 })
    ));
}

#[test]
fn bounded_space_fast_path() {
    for n in 1..=3 {
        let map = Boxed::new(n);
        let pair = OrderedNormalPair {
            v_hi: ShockVector::splat(1.0, n).unwrap(),
            v_lo: ShockVector::splat(-1.0, n).unwrap(),
            p_up: 0.5,
            p_down: 0.5,
            dominance_samples: 0,
        };
        let b = find_bounding_pair(&map, &pair, &StateVector::splat(3.0, n).unwrap(), 0).unwrap();
        assert!(b.fast_path);
        assert_eq!(b.search_steps, [0, 0]);
        assert_eq!(b.y_lo, StateVector::splat(0.0, n).unwrap());
        assert_eq!(b.y_hi, StateVector::splat(10.0, n).unwrap());
    }
}

#[test]
fn ar1_splitting_matches_hand_iteration() {
    let m = ar1(0.5);
    let c =
        build_splitting_certificate(&m, &ar1_pair(), &sv(&[-1.0]), &sv(&[1.0]), IterateOptions::default(), 64).unwrap();
    // hand iteration: z: -1 -> 0 -> 0.5 -> ..., y: 1 -> 0 -> -0.5 -> ...
    // z_1 = 0 is not above x* = 0, z_2 = 0.5 is
    assert_eq!(c.trace_z[1], sv(&[0.0]));
    assert_eq!(c.trace_z[2], sv(&[0.5]));
    assert_eq!(c.trace_y[1], sv(&[0.0]));
    assert_eq!(c.trace_y[2], sv(&[-0.5]));
    assert!((c.c[0] - 1.0).abs() <= 1e-9);
    assert!((c.c_star[0] + 1.0).abs() <= 1e-9);
    assert!(c.x_split[0].abs() <= 1e-9);
    assert_eq!(c.m, 2);
    assert_eq!(c.prob_bound, 1.0 / 256.0);
    assert_eq!(c.substituted, [false, false]);
    assert!(c.recheck(&m, 1e-9).is_empty(), "{:?}", c.recheck(&m, 1e-9));
}

#[test]
fn coincident_starts_give_same_limits() {
    let m = ar1(0.5);
    let pair = ar1_pair();
    let base =
        build_splitting_certificate(&m, &pair, &sv(&[-1.0]), &sv(&[1.0]), IterateOptions::default(), 64).unwrap();
    let c = build_splitting_certificate(&m, &pair, &sv(&[0.0]), &sv(&[0.0]), IterateOptions::default(), 64).unwrap();
    assert!((c.c[0] - base.c[0]).abs() <= 1e-9);
    assert!((c.c_star[0] - base.c_star[0]).abs() <= 1e-9);
    assert!((c.x_split[0] - base.x_split[0]).abs() <= 1e-9);
    // 0 already starts both monotone chains: 0 -> 0.5 and 0 -> -0.5
    assert_eq!(c.m, 1);
    assert!(c.recheck(&m, 1e-9).is_empty());
}

#[test]
fn non_monotone_start_is_substituted() {
    let m = ar1(0.5);
    let c =
        build_splitting_certificate(&m, &ar1_pair(), &sv(&[5.0]), &sv(&[5.0]), IterateOptions::default(), 64).unwrap();
    assert_eq!(c.substituted, [true, false]);
    assert!(c.x_low[0] <= -1.0);
    assert!(c.recheck(&m, 1e-9).is_empty());
}

#[test]
fn tampered_certificate_is_detected() {
    let m = ar1(0.5);
    let mut c =
        build_splitting_certificate(&m, &ar1_pair(), &sv(&[-1.0]), &sv(&[1.0]), IterateOptions::default(), 64).unwrap();
    c.m = 3;
    assert!(!c.recheck(&m, 1e-9).is_empty());
    c.m = 2;
    c.trace_z[1] = sv(&[0.1]);
    assert!(!c.recheck(&m, 1e-9).is_empty());
}

#[test]
fn unseparated_limits_are_rejected() {
    let m = ar1(0.5);
    let pair = OrderedNormalPair { v_hi: sh(&[1e-12]), v_lo: sh(&[0.0]), p_up: 0.5, p_down: 0.5, dominance_samples: 0 };
    assert!(matches!(
        build_splitting_certificate(&m, &pair, &sv(&[-1.0]), &sv(&[1.0]), IterateOptions::default(), 64),
        Err(CertificateError::FixedPointsNotSeparated { .. })
    ));
}

fn quick() -> CertifyOptions {
    CertifyOptions {
        tightness_reps: 200,
        dominance_samples: 200,
        contraction_pairs: 500,
        concavity_triples: 500,
        ..Default::default()
    }
}

#[test]
fn ar1_contraction_route_certifies() {
    let m = ar1(0.5);
    let r =
        certify(&m, &sh(&[0.5]), &sh(&[-0.5]), &Route::Contraction, &[sv(&[-1.0]), sv(&[1.0])], 7, &quick()).unwrap();
    assert!(r.certified(), "{:?}", r.overall);
    match &r.condition_i.as_ref().unwrap().details {
        ConditionIDetails::Contraction { k_bound, .. } => assert_eq!(*k_bound, 0.5),
        d => panic!("{d:?}"),
    }
    let s = r.splitting.as_ref().unwrap();
    assert_eq!((s.m, s.prob_bound), (2, 1.0 / 256.0));
}

#[test]
fn expanding_ar1_fails_condition_i() {
    let r = certify(&ar1(1.2), &sh(&[0.5]), &sh(&[-0.5]), &Route::Contraction, &[], 7, &quick()).unwrap();
    assert_eq!(r.overall.reason, Some("condition-i-unestablished"));
    match &r.condition_i.as_ref().unwrap().details {
        ConditionIDetails::Contraction { k_bound, .. } => assert!(*k_bound >= 1.2),
        d => panic!("{d:?}"),
    }
}

#[test]
fn invalid_pair_is_reported_not_raised() {
    let r = certify(&ar1(0.5), &sh(&[1.0]), &sh(&[-0.5]), &Route::Contraction, &[], 7, &quick()).unwrap();
    assert_eq!(r.overall.reason, Some("normal-pair-invalid"));
    assert!(!r.pair.valid);
    assert!(r.condition_i.is_none());
}

#[test]
fn resource_concave_route_certifies() {
    let m = make_resource(
        vec![vec![vec![0.5]]],
        vec![vec![vec![0.5]]],
        ShockDistribution::new(vec![Marginal::Uniform { low: 0.0, high: 0.5 }]).unwrap(),
    )
    .unwrap();
    let (a, b) = (0.01, 4.0);
    let (v_hi, v_lo) = m.default_pair().clone();
    // oracle: direct evaluation of the bracket inequalities
    for v in [v_hi[0], v_lo[0]] {
        assert!(0.5 * f64::sqrt(a) + v > a);
        assert!(0.5 * f64::sqrt(b) + v < b);
    }
    let route = Route::Concave { a: sv(&[a]), b: sv(&[b]) };
    let r = certify(&m, &v_hi, &v_lo, &route, &[sv(&[0.0]), sv(&[5.0])], 3, &quick()).unwrap();
    assert!(r.certified(), "{:?} {:?}", r.overall, r.condition_i);
    // y_lo is the zero vector
    match &r.condition_ii.as_ref().unwrap().points[0] {
        BoundingOutcome::Found(bp) => assert_eq!(bp.y_lo, sv(&[0.0])),
        f => panic!("{f:?}"),
    }
}

#[test]
fn concave_route_rejects_linear_maps() {
    let m = TransitionModel::from_config(&presets::rca1()).unwrap();
    let (v_hi, v_lo) = m.default_pair().clone();
    let route = Route::Concave { a: sv(&[0.01]), b: sv(&[100.0]) };
    let r = certify(&m, &v_hi, &v_lo, &route, &[], 3, &quick()).unwrap();
    assert_eq!(r.overall.reason, Some("condition-i-unestablished"));
}

#[test]
fn piecewise_exp_direct_route_certifies() {
    let m = TransitionModel::from_config(&presets::piecewise_exp()).unwrap();
    let (v_hi, v_lo) = m.default_pair().clone();
    let r = certify(&m, &v_hi, &v_lo, &Route::Direct, &[], 1, &quick()).unwrap();
    assert!(r.certified(), "{:?} {:?}", r.overall, r.splitting_error);
    match &r.condition_i.as_ref().unwrap().details {
        ConditionIDetails::Direct { shock_used, .. } => assert_eq!(*shock_used, Some("v_lo")),
        d => panic!("{d:?}"),
    }
}

#[test]
fn compact_route_fails_on_unbounded_space() {
    let r = certify(&ar1(0.5), &sh(&[0.5]), &sh(&[-0.5]), &Route::Compact, &[], 1, &quick()).unwrap();
    assert_eq!(r.overall.reason, Some("condition-i-unestablished"));
}

#[test]
fn report_is_deterministic_across_workers() {
    let m = ar1(0.5);
    let run = |w| {
        let opts = CertifyOptions { workers: Some(w), ..quick() };
        let r = certify(&m, &sh(&[0.5]), &sh(&[-0.5]), &Route::Direct, &[], 11, &opts).unwrap();
        crate::report::to_json(&r)
    };
    assert_eq!(run(1), run(8));
}

proptest::proptest! {
    #[test]
    fn bounded_spaces_always_bound(n in 1usize..4, x in 0.0..=10.0f64, hi in 0.1..3.0f64) {
        let map = Boxed::new(n);
        let pair = OrderedNormalPair {
            v_hi: ShockVector::splat(hi, n).unwrap(),
            v_lo: ShockVector::splat(-hi, n).unwrap(),
            p_up: 0.5,
            p_down: 0.5,
            dominance_samples: 0,
        };
        let b = find_bounding_pair(&map, &pair, &StateVector::splat(x, n).unwrap(), 0).unwrap();
        proptest::prop_assert!(b.fast_path);
        proptest::prop_assert_eq!(b.y_hi, StateVector::splat(10.0, n).unwrap());
    }
}
