//! Shared fixtures for the criterion benchmarks.

use tdho::states::make_gaussian;
use tdho::{Grid, OscillatorModel, PotentialSpec, StepPolicy, WaveFunction};

/// `m = 1`, `k = 3/16` (`lambda = 1/4`), `r0 = 1`, `k0 = 0`.
pub fn reference_model() -> OscillatorModel {
    OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.0).expect("reference model is valid")
}

pub fn reference_potential(model: &OscillatorModel) -> PotentialSpec {
    PotentialSpec::static_bump(1.0, 3.0, model.lambda()).expect("reference potential is valid")
}

/// Moving Gaussian on a 1D grid with `n` points over `[-l, l)`.
pub fn moving_state(n: usize, l: f64) -> WaveFunction {
    make_gaussian(Grid::new(1, n, l).expect("valid grid"), &[3.0], &[1.5], 4.0).expect("state fits")
}

/// Off-center Gaussian on an `n x n` grid over `[-l, l)^2`.
pub fn planar_state(n: usize, l: f64) -> WaveFunction {
    make_gaussian(Grid::new(2, n, l).expect("valid grid"), &[1.0, 0.5], &[0.5, 0.0], 0.7).expect("state fits")
}

pub fn policy() -> StepPolicy {
    StepPolicy::fixed(0.02, 0.01)
}
