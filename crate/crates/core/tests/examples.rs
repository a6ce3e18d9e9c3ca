//! Worked examples exercised end to end through the public API.

use num_complex::Complex64;
use wittenlab::linalg::SymMatrix;
use wittenlab::model::{build_path, discretize, essential_spectrum_strips, fredholm_check, OperatorPath, Profile};
use wittenlab::ssf::ssf_pair;
use wittenlab::transforms::{trace_relation_check, TransformSettings};
use wittenlab::witten::{full_report, witten_resolvent, witten_semigroup, ExtrapolationSettings, WittenConfig};
use wittenlab::HalfInt;

fn path(am: &[f64], bp: &[f64], p: Profile) -> OperatorPath {
    build_path(SymMatrix::from_diag(am), SymMatrix::from_diag(bp), p).unwrap()
}

#[test]
fn trace_relation_for_resolvent_and_exponential() {
    let p = path(&[-1.0], &[2.0], Profile::Logistic);
    let m = discretize(&p, 40.0, 2001).unwrap();
    let st = TransformSettings::default();
    let r = trace_relation_check(&|x: f64| 1.0 / (x + 1.0), &p, &m, &st).unwrap();
    assert!((r.rhs + 1.0 / 2f64.sqrt()).abs() < 1e-10);
    assert!((r.lhs - r.rhs).abs() < 2e-2, "{r:?}");
    assert!((r.mid - r.lhs).abs() < 1e-9, "{r:?}");
    let e = trace_relation_check(&|x: f64| (-x).exp(), &p, &m, &st).unwrap();
    assert!((e.rhs + 0.842_700_792_949_714_9).abs() < 1e-10);
    assert!((e.lhs - e.rhs).abs() < 2e-2, "{e:?}");
}

#[test]
fn regularized_indices_vanish_at_the_ends() {
    let p = path(&[-1.0], &[2.0], Profile::Logistic);
    let m = discretize(&p, 40.0, 2001).unwrap();
    assert!(m.delta_r(-1e9).unwrap().abs() < 1e-3);
    assert!(m.delta_s(1e-9).unwrap().abs() < 1e-3);
    assert!(m.delta_r(0.0).is_err());
    assert!(m.delta_s(0.0).is_err());
}

#[test]
fn free_path_has_no_kernel_and_no_shift() {
    let p = path(&[0.0], &[0.0], Profile::Logistic);
    let l = 20.0;
    let m = discretize(&p, l, 401).unwrap();
    let gap = (std::f64::consts::PI / (2.0 * l)).powi(2);
    assert_eq!(m.kernel_dims(0.5 * gap), (0, 0));
    let grid: Vec<f64> = (1..50).map(|k| 0.02 * k as f64).collect();
    assert!(m.ssf_h_discrete(&grid).unwrap().ordinates.iter().all(|&v| v == 0.0));
    assert_eq!(m.delta_r(-0.3).unwrap(), 0.0);
}

#[test]
fn fredholm_and_strips() {
    let tanh = path(&[-1.0], &[2.0], Profile::Logistic);
    assert_eq!(essential_spectrum_strips(&tanh).unwrap(), vec![-1.0, 1.0]);
    let half = path(&[0.0], &[1.0], Profile::TanhRescaled);
    assert_eq!(essential_spectrum_strips(&half).unwrap(), vec![0.0, 1.0]);
    assert!(!fredholm_check(&half, 1e-6).unwrap().fredholm);
    let edge = path(&[-1.0], &[1.0], Profile::Logistic);
    let d = fredholm_check(&edge, 1e-6).unwrap();
    assert!(!d.fredholm && d.gap_plus == 0.0 && d.gap_minus == 1.0);
}

#[test]
fn routes_for_the_canonical_models() {
    let s = ExtrapolationSettings::default();
    let res = [(20.0, 1001), (40.0, 2001)];
    let tanh = path(&[-1.0], &[2.0], Profile::Logistic);
    let r = witten_resolvent(&tanh, &res, None, &s).unwrap();
    assert!((r.estimate - 1.0).abs() <= 0.05 && r.converged);
    let t = witten_semigroup(&tanh, &res, None, &s).unwrap();
    assert!((t.estimate - 1.0).abs() <= 0.05 && t.converged);
    let half = path(&[0.0], &[1.0], Profile::TanhRescaled);
    let r = witten_resolvent(&half, &res, None, &s).unwrap();
    assert!((r.estimate - 0.5).abs() <= 0.1);
    assert!(r.table.windows(2).all(|w| (w[0].l, w[0].param) < (w[1].l, w[1].param)));
}

#[test]
fn profile_choice_does_not_move_the_estimate() {
    let s = ExtrapolationSettings::default();
    let res = [(20.0, 1001), (40.0, 2001)];
    let a = witten_resolvent(&path(&[-1.0], &[2.0], Profile::Logistic), &res, None, &s).unwrap();
    let b = witten_resolvent(&path(&[-1.0], &[2.0], Profile::TanhRescaled), &res, None, &s).unwrap();
    assert!((a.estimate - b.estimate).abs() <= a.uncertainty + b.uncertainty, "{} vs {}", a.estimate, b.estimate);
}

#[test]
fn fredholm_regime_ties_the_indices_together() {
    for (am, bp) in [(-1.0, 2.0), (1.0, -2.0), (0.5, 1.0), (-0.7, 0.2)] {
        let p = path(&[am], &[bp], Profile::Logistic);
        let r = full_report(&p, &WittenConfig::for_dim(1)).unwrap();
        assert!(r.fredholm.fredholm);
        assert_eq!(r.w_xi.as_integer(), r.kernel_index, "A₋={am}, B₊={bp}");
        assert_eq!(r.w_xi, r.w_xi_counting);
    }
}

#[test]
fn zero_perturbation_report() {
    let p = path(&[0.7], &[0.0], Profile::Logistic);
    let r = full_report(&p, &WittenConfig::for_dim(1)).unwrap();
    assert_eq!(r.w_xi, HalfInt::ZERO);
    assert_eq!(r.w_r.as_ref().unwrap().estimate, 0.0);
    assert_eq!(r.w_s.as_ref().unwrap().estimate, 0.0);
    assert!(r.fredholm.fredholm);
    assert!(ssf_pair(p.a_plus(), p.a_minus()).unwrap().values().iter().all(|&v| v == 0.0));
    let z = discretize(&p, 20.0, 401).unwrap().resolvent_trace_check(Complex64::new(-1.0, 0.0)).unwrap();
    assert!(z.lhs.re.abs() < 1e-9 && z.rhs.re == 0.0);
}
