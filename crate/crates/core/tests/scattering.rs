use proptest::prelude::*;
use tdho::propagator::{dressing_apply, evolve_full};
use tdho::scattering::{
    check_admissible, compose_full_wave_operator, cook_tail, full_wave_operator_direct, low_momentum_mass,
    range_membership, wave_operator_forward, wave_operator_inverse, RangeCutoffs,
};
use tdho::states::make_gaussian;
use tdho::{Complex64, Error, Grid, OscillatorModel, PotentialSpec, StepPolicy, WaveFunction};

fn model() -> OscillatorModel {
    OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.0).unwrap()
}

fn moving_state() -> WaveFunction {
    make_gaussian(Grid::new(1, 2048, 256.0).unwrap(), &[3.0], &[1.5], 4.0).unwrap()
}

fn eps0() -> f64 {
    RangeCutoffs::default().eps0()
}

#[test]
fn free_wave_operator_is_the_identity() {
    let psi = moving_state();
    let r = wave_operator_forward(&model(), None, &psi, 1e-10, 4, &StepPolicy::default(), eps0()).unwrap();
    assert!(r.converged);
    assert_eq!(r.cauchy_gaps.len(), 1);
    assert!(r.result.distance(&psi) < 1e-12);
}

#[test]
fn wave_operator_is_isometric() {
    let m = model();
    let v = PotentialSpec::static_bump(1.0, 3.0, m.lambda()).unwrap();
    let psi = moving_state();
    let r = wave_operator_forward(&m, Some(&v), &psi, 1e-3, 8, &StepPolicy::fixed(0.02, 0.01), eps0()).unwrap();
    assert!(r.norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
    assert!(r.last_gap() <= 1e-3);
}

#[test]
fn unconverged_runs_keep_their_report() {
    let m = model();
    let v = PotentialSpec::static_bump(1.0, 3.0, m.lambda()).unwrap();
    match wave_operator_forward(&m, Some(&v), &moving_state(), 1e-8, 2, &StepPolicy::fixed(0.02, 0.01), eps0()) {
        Err(Error::Unconverged { last_gap, tol, report }) => {
            assert_eq!(tol, 1e-8);
            assert_eq!(report.cauchy_gaps.len(), 2);
            assert_eq!(last_gap, report.last_gap());
            assert!(!report.converged);
        }
        other => panic!("expected Unconverged, got {other:?}"),
    }
}

#[test]
fn slow_states_are_not_admissible() {
    let resting = make_gaussian(Grid::new(1, 1024, 100.0).unwrap(), &[0.0], &[0.0], 4.0).unwrap();
    assert!(low_momentum_mass(&resting, 0.025) > 1e-3);
    assert!(matches!(check_admissible(&resting, 0.025), Err(Error::Precondition(_))));
    let r = wave_operator_forward(&model(), None, &resting, 1e-4, 4, &StepPolicy::default(), 0.025);
    assert!(matches!(r, Err(Error::Precondition(_))));
    assert!(low_momentum_mass(&moving_state(), 0.025) < 1e-10);
}

#[test]
fn cook_tail_vanishes_without_potential_and_shrinks_later() {
    let m = model();
    let psi = moving_state();
    assert_eq!(cook_tail(&m, None, &psi, 4.0, 8.0, 8).unwrap(), 0.0);
    let v = PotentialSpec::static_bump(1.0, 3.0, m.lambda()).unwrap();
    let early = cook_tail(&m, Some(&v), &psi, 8.0, 16.0, 16).unwrap();
    let late = cook_tail(&m, Some(&v), &psi, 128.0, 256.0, 16).unwrap();
    assert!(late < early / 10.0, "{early} {late}");
    assert!(cook_tail(&m, Some(&v), &psi, 0.5, 2.0, 8).is_err());
}

#[test]
fn inverse_undoes_forward() {
    let m = model();
    let v = PotentialSpec::static_bump(1.0, 3.0, m.lambda()).unwrap();
    let psi = moving_state();
    let policy = StepPolicy::fixed(0.02, 0.01);
    let fwd = wave_operator_forward(&m, Some(&v), &psi, 1e-4, 8, &policy, eps0()).unwrap();
    let inv =
        wave_operator_inverse(&m, Some(&v), &fwd.result, 1e-4, 8, &policy, &RangeCutoffs::default(), 1e-3).unwrap();
    assert!(inv.result.distance(&psi) < 1e-3);
    assert!(inv.membership.as_ref().unwrap().member);
}

#[test]
fn resting_state_fails_membership() {
    let m = model();
    let psi = make_gaussian(Grid::new(1, 2048, 256.0).unwrap(), &[0.0], &[0.0], 4.0).unwrap();
    let r = range_membership(
        &m,
        None,
        &psi,
        &RangeCutoffs::default(),
        &[2.0, 4.0, 8.0, 16.0],
        1e-3,
        &StepPolicy::default(),
    )
    .unwrap();
    assert!(!r.member);
    assert!(r.w1_defect.iter().all(|d| *d > 0.1));
}

#[test]
fn composed_and_direct_full_frame_operators_agree() {
    let m = model();
    let v = PotentialSpec::static_bump(1.0, 3.0, m.lambda()).unwrap();
    let grid = Grid::new(1, 8192, 512.0).unwrap();
    let policy = StepPolicy::fixed(0.02, 0.01);
    // a full-frame state whose r0-image in the scaled frame is the moving Gaussian
    let chi = make_gaussian(grid, &[3.0], &[1.5], 4.0).unwrap();
    let psi = evolve_full(&m, None, &dressing_apply(&m, &chi, 1.0, false).unwrap(), 1.0, 0.0, &policy).unwrap();
    let composed = compose_full_wave_operator(&m, Some(&v), &psi, 1e-4, 6, &policy, eps0());
    let composed = match composed {
        Ok(w) => w,
        Err(Error::Unconverged { report, .. }) => {
            let dressed = dressing_apply(&m, &report.result, 1.0, false).unwrap();
            evolve_full(&m, Some(&v), &dressed, 1.0, 0.0, &policy).unwrap()
        }
        Err(e) => panic!("{e}"),
    };
    let direct = full_wave_operator_direct(&m, Some(&v), &psi, 64.0, &policy).unwrap();
    assert!(composed.distance(&direct) < 1e-3, "{}", composed.distance(&direct));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn membership_defects_are_phase_invariant_and_linear(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        prop_assume!(re.hypot(im) > 0.1);
        let m = model();
        let psi = make_gaussian(Grid::new(1, 1024, 128.0).unwrap(), &[2.0], &[1.2], 3.0).unwrap();
        let c = Complex64::new(re, im);
        let horizons = [2.0, 4.0, 8.0];
        let cut = RangeCutoffs::default();
        let policy = StepPolicy::default();
        let a = range_membership(&m, None, &psi, &cut, &horizons, 1e-3, &policy).unwrap();
        let b = range_membership(&m, None, &psi.clone().scaled(c), &cut, &horizons, 1e-3, &policy).unwrap();
        let unit = range_membership(&m, None, &psi.clone().scaled(c / c.norm()), &cut, &horizons, 1e-3, &policy).unwrap();
        for i in 0..horizons.len() {
            prop_assert!((unit.w1_defect[i] - a.w1_defect[i]).abs() <= 1e-12);
            prop_assert!((unit.w2_defect[i] - a.w2_defect[i]).abs() <= 1e-12);
            prop_assert!((b.w1_defect[i] - c.norm() * a.w1_defect[i]).abs() <= 1e-12 * (1.0 + c.norm()));
            prop_assert!((b.w2_defect[i] - c.norm() * a.w2_defect[i]).abs() <= 1e-12 * (1.0 + c.norm()));
        }
    }
}
