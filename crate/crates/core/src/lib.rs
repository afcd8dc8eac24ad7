//! Numerical laboratory for quantum scattering with time-decaying harmonic oscillators
//! `H(t) = p^2/(2m) + k(t) x^2/2 + V(t, x)`, `k(t) = k t^-2` for `|t| > r0`.
//!
//! The crate is organized bottom-up: classical fundamental solutions ([`oscillator`]),
//! spectral grids and unitaries ([`grid`], [`dilation`], [`cutoff`]), split-step
//! propagators ([`propagator`], [`gaussian`]), wave operators ([`scattering`]), propagation
//! estimates ([`estimates`]) and the magnetic-field reduction ([`magnetic`]).

// `!(x > 0.0)` is used on purpose so NaN fails validation; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cutoff;
pub mod dilation;
pub mod error;
pub mod estimates;
pub mod fit;
pub mod gaussian;
pub mod grid;
pub mod magnetic;
pub mod observables;
mod ode;
pub mod oscillator;
pub mod potential;
pub mod propagator;
pub mod scattering;
pub mod snapshot;
pub mod states;

pub use error::{Error, Result};
pub use grid::{Grid, WaveFunction};
pub use num_complex::Complex64;
pub use oscillator::{ClassicalState, FundamentalSolution, InnerProfile, OscillatorModel};
pub use potential::{PotentialSpec, TimeFactor};
pub use propagator::StepPolicy;
