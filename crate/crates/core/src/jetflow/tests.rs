use super::*;
use crate::dynamics::{DynamicsModel, ModelConfig};

fn decay() -> ClosedLoop {
    let m = DynamicsModel::new(ModelConfig::Decay { rate: 1.0 }).unwrap();
    ClosedLoop::new(m, None, &[]).unwrap()
}

fn linear(a: Vec<Vec<f64>>) -> ClosedLoop {
    let n = a.len();
    let m = DynamicsModel::new(ModelConfig::Linear { a, b: vec![0.0; n] }).unwrap();
    ClosedLoop::new(m, None, &[]).unwrap()
}

#[test]
fn decay_halves_in_ln2() {
    let traj = integrate(&decay(), &[2.0], 0.0, Stop::Time(2f64.ln()), &Tolerances::default()).unwrap();
    assert!((traj.final_state()[0] - 1.0).abs() < 1e-12);
    assert_eq!(traj.final_time(), 2f64.ln());
    assert!(traj.times().windows(2).all(|w| w[1] > w[0]));
    let s = traj.stats();
    assert!(s.accepted > 0 && s.evaluations > 12 * s.accepted);
}

#[test]
fn backward_integration() {
    let traj = integrate(&decay(), &[1.0], 0.0, Stop::Time(-2f64.ln()), &Tolerances::default()).unwrap();
    assert!((traj.final_state()[0] - 2.0).abs() < 1e-12);
}

#[test]
fn error_shrinks_with_tolerance() {
    // eighth-order method: error should fall roughly in step with tolerance
    let mut errs = Vec::new();
    for rtol in [1e-6, 1e-8, 1e-10] {
        let tol = Tolerances::with_rtol(rtol);
        let traj = integrate(&decay(), &[2.0], 0.0, Stop::Time(5.0), &tol).unwrap();
        errs.push((traj.final_state()[0] - 2.0 * (-5f64).exp()).abs());
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 1e-10);
}

#[test]
fn dense_output_matches_solution() {
    let traj = integrate(&decay(), &[2.0], 0.0, Stop::Time(3.0), &Tolerances::default()).unwrap();
    for t in [0.0, 0.37, 1.5, 2.9999, 3.0] {
        let y = traj.dense(t).unwrap();
        assert!((y[0] - 2.0 * (-t).exp()).abs() < 1e-12, "t = {t}");
    }
    assert!(traj.dense(3.5).is_err());
}

#[test]
fn csv_has_header_and_rows() {
    let traj = integrate(&decay(), &[2.0], 0.0, Stop::Time(1.0), &Tolerances::default()).unwrap();
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x"));
    assert_eq!(lines.count(), traj.times().len());
}

#[test]
fn rejects_bad_inputs() {
    let sys = decay();
    assert!(integrate(&sys, &[f64::NAN], 0.0, Stop::Time(1.0), &Tolerances::default()).is_err());
    assert!(integrate(&sys, &[1.0, 2.0], 0.0, Stop::Time(1.0), &Tolerances::default()).is_err());
    let bad = Tolerances {
        rtol: 0.0,
        ..Tolerances::default()
    };
    assert!(integrate(&sys, &[1.0], 0.0, Stop::Time(1.0), &bad).is_err());
    let tiny = Tolerances {
        max_steps: 3,
        ..Tolerances::default()
    };
    assert!(matches!(
        integrate(&sys, &[1.0], 0.0, Stop::Time(50.0), &tiny),
        Err(JetError::StepBudget { .. })
    ));
}

#[test]
fn linear_flow_is_exponential() {
    let a = -0.7;
    let t = 1.3;
    let fe = expand_flow(&linear(vec![vec![a]]), &[0.4], &[0], 6, t, &Tolerances::default()).unwrap();
    let p = fe.map.component(0);
    assert!((p.constant_term() - 0.4 * (a * t).exp()).abs() < 1e-13);
    assert!((p.coeff(&[1]) - (a * t).exp()).abs() < 1e-13);
    for k in 2..=6u32 {
        assert!(p.coeff(&[k]).abs() < 1e-15);
    }
}

#[test]
fn linear_stm_matches_rotation() {
    // ẋ = y, ẏ = −x
    let sys = linear(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
    let t = 0.9;
    let fe = expand_flow(&sys, &[1.0, 0.0], &[0, 1], 3, t, &Tolerances::default()).unwrap();
    let (c, s) = (t.cos(), t.sin());
    let m = &fe.map;
    let want = [[c, s], [-s, c]];
    for i in 0..2 {
        let e0 = (m.component(i).coeff(&[1, 0]) - want[i][0]).abs();
        let e1 = (m.component(i).coeff(&[0, 1]) - want[i][1]).abs();
        assert!(e0.max(e1) < 1e-12, "{e0:e} {e1:e}");
    }
    assert_eq!(m.var_labels()[0].name, "dx0");
}

#[test]
fn time_expanded_decay() {
    // (2 + δ)·exp(−ln 2 − δt) = (1 + δ/2)(1 − δt + δt²/2 − …)
    let fe =
        expand_flow_with_time(&decay(), &[2.0], &[0], 5, 2f64.ln(), &Tolerances::default()).unwrap();
    let p = fe.map.component(0);
    assert_eq!(p.nvars(), 2);
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    for i in 0..=1u32 {
        for j in 0..=(5 - i) {
            let want = 0.5f64.powi(i as i32) * (-1f64).powi(j as i32) / fact(j);
            assert!((p.coeff(&[i, j]) - want).abs() < 1e-12, "{i},{j}");
        }
    }
    assert!((p.coeff(&[1, 1]) + 0.5).abs() < 1e-12);
    assert!((p.coeff(&[0, 1]) + 1.0).abs() < 1e-12);
    for i in 2..=5u32 {
        assert!(p.coeff(&[i, 0]).abs() < 1e-14);
    }
    assert_eq!(fe.map.var_labels()[1].name, "dt");
}

#[test]
fn expansion_requests_validated() {
    let sys = decay();
    let tol = Tolerances::default();
    assert!(expand_flow(&sys, &[1.0], &[], 3, 1.0, &tol).is_err());
    assert!(expand_flow(&sys, &[1.0], &[1], 3, 1.0, &tol).is_err());
    assert!(expand_flow(&sys, &[1.0], &[0], 0, 1.0, &tol).is_err());
}
