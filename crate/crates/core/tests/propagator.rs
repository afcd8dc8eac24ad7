use proptest::prelude::*;
use tdho::gaussian::{evolve_gaussian_exact, GaussianParams};
use tdho::oscillator::solve_fundamental;
use tdho::propagator::{dressing_apply, evolve_free_s, evolve_full, evolve_s, factorization_residual};
use tdho::states::make_gaussian;
use tdho::{Error, Grid, OscillatorModel, PotentialSpec, StepPolicy};

fn model() -> OscillatorModel {
    OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.5).unwrap()
}

#[test]
fn two_dimensional_gaussian_oracle() {
    let m = model();
    let grid = Grid::new(2, 128, 16.0).unwrap();
    let psi = make_gaussian(grid, &[1.0, -0.5], &[0.4, 0.2], 1.0).unwrap();
    let stepped = evolve_full(&m, None, &psi, 0.0, 3.0, &StepPolicy::fixed(0.005, 0.002)).unwrap();
    let fs = solve_fundamental(&m, 4.0, 1e-12).unwrap();
    let g = GaussianParams::from_state(&[1.0, -0.5], &[0.4, 0.2], 1.0, 0.0).unwrap();
    let exact = evolve_gaussian_exact(&fs, 1.0, &g, 3.0).unwrap().to_wavefunction(grid).unwrap();
    assert!(stepped.distance(&exact) < 1e-5, "{}", stepped.distance(&exact));
}

#[test]
fn backward_legs_retrace_forward_legs() {
    let m = model();
    let grid = Grid::new(1, 1024, 40.0).unwrap();
    let psi = make_gaussian(grid, &[1.0], &[0.5], 1.0).unwrap();
    let v = PotentialSpec::gaussian_bump(0.8, 1.0, 2.0, m.lambda()).unwrap();
    let policy = StepPolicy::fixed(0.05, 0.02);
    let there = evolve_full(&m, Some(&v), &psi, -0.5, 6.0, &policy).unwrap();
    let back = evolve_full(&m, Some(&v), &there, 6.0, -0.5, &policy).unwrap();
    assert!(back.distance(&psi) < 1e-10, "{}", back.distance(&psi));
    let s_there = evolve_s(&m, Some(&v), &psi, 1.0, 9.0, &policy).unwrap();
    let s_back = evolve_s(&m, Some(&v), &s_there, 9.0, 1.0, &policy).unwrap();
    assert!(s_back.distance(&psi) < 1e-10);
}

#[test]
fn adaptive_policy_meets_its_target() {
    let m = model();
    let grid = Grid::new(1, 1024, 40.0).unwrap();
    let psi = make_gaussian(grid, &[1.0], &[0.5], 1.0).unwrap();
    let fs = solve_fundamental(&m, 5.0, 1e-12).unwrap();
    let g = GaussianParams::from_state(&[1.0], &[0.5], 1.0, 0.0).unwrap();
    let exact = evolve_gaussian_exact(&fs, 1.0, &g, 4.0).unwrap().to_wavefunction(grid).unwrap();
    let coarse = evolve_full(&m, None, &psi, 0.0, 4.0, &StepPolicy::fixed(0.2, 0.1)).unwrap();
    let adaptive = evolve_full(&m, None, &psi, 0.0, 4.0, &StepPolicy::adaptive(0.2, 0.1, 1e-6, 8)).unwrap();
    let (e_coarse, e_adaptive) = (coarse.distance(&exact), adaptive.distance(&exact));
    assert!(e_adaptive < 1e-5 && e_adaptive < e_coarse / 10.0, "{e_coarse:e} -> {e_adaptive:e}");
}

#[test]
fn factorization_is_trivial_at_r0_and_small_later() {
    let m = model();
    let grid = Grid::new(1, 1024, 40.0).unwrap();
    let psi = make_gaussian(grid, &[0.5], &[0.3], 1.0).unwrap();
    let policy = StepPolicy::fixed(0.01, 0.005);
    assert!(factorization_residual(&m, None, &psi, 1.0, &policy).unwrap() < 1e-10);
    assert!(factorization_residual(&m, None, &psi, 3.0, &policy).unwrap() < 1e-5);
    assert!(factorization_residual(&m, None, &psi, 0.5, &policy).is_err());
}

#[test]
fn scaled_frame_rejects_the_core() {
    let m = model();
    let grid = Grid::new(1, 256, 20.0).unwrap();
    let psi = make_gaussian(grid, &[0.0], &[0.0], 1.0).unwrap();
    let policy = StepPolicy::default();
    assert!(matches!(evolve_s(&m, None, &psi, 0.5, 2.0, &policy), Err(Error::Domain(_))));
    assert!(matches!(evolve_s(&m, None, &psi, -2.0, 2.0, &policy), Err(Error::Domain(_))));
    assert!(matches!(dressing_apply(&m, &psi, 0.9, false), Err(Error::Domain(_))));
    assert!(evolve_free_s(&m, &psi, -4.0, -2.0).is_ok());
}

#[test]
fn invalid_policies_are_rejected() {
    let grid = Grid::new(1, 256, 20.0).unwrap();
    let psi = make_gaussian(grid, &[0.0], &[0.0], 1.0).unwrap();
    for bad in [StepPolicy::fixed(0.0, 0.1), StepPolicy::fixed(0.1, 1.5), StepPolicy::adaptive(0.1, 0.1, -1.0, 3)] {
        assert!(evolve_full(&model(), None, &psi, 0.0, 1.0, &bad).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_unitary(g in -2.0f64..2.0, t1 in -4.0f64..4.0, x0 in -2.0f64..2.0) {
        let m = model();
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let psi = make_gaussian(grid, &[x0], &[0.3], 1.0).unwrap();
        let v = PotentialSpec::static_bump(g, 2.0, m.lambda()).unwrap();
        let out = evolve_full(&m, Some(&v), &psi, 0.0, t1, &StepPolicy::fixed(0.05, 0.02)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dressing_is_unitary(t in 1.0f64..200.0, x0 in -2.0f64..2.0) {
        let grid = Grid::new(1, 1024, 60.0).unwrap();
        let psi = make_gaussian(grid, &[x0], &[0.2], 1.5).unwrap();
        let d = dressing_apply(&model(), &psi, t, false).unwrap();
        prop_assert!((d.norm() - 1.0).abs() < 1e-10);
        prop_assert!(dressing_apply(&model(), &d, t, true).unwrap().distance(&psi) < 1e-9);
    }
}
