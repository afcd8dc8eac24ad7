//! Unbounded observables built from the multipliers: momentum components and the
//! radial velocity deviation `Theta(t)`.

use num_complex::Complex64;

use crate::grid::{apply_fourier_multiplier, apply_position_multiplier, WaveFunction};
use crate::oscillator::OscillatorModel;

/// `p_axis psi`.
pub fn apply_momentum(psi: &WaveFunction, axis: usize) -> WaveFunction {
    apply_fourier_multiplier(psi, |p| Complex64::new(p[axis], 0.0))
}

/// `(p_axis - c x_axis) psi`.
pub fn apply_velocity_deviation(psi: &WaveFunction, axis: usize, c: f64) -> WaveFunction {
    let px = apply_momentum(psi, axis);
    let xx = apply_position_multiplier(psi, |x| Complex64::new(x[axis], 0.0));
    px.add_scaled(Complex64::new(-c, 0.0), &xx)
}

/// `Theta(t) psi` with `Theta = u.(p - m(1-2 lambda) t^-(1-2 lambda) x)`, `u = x / max(|x|, guard)`,
/// ordered symmetrically as `(u.v + v.u)/2`.
///
/// Only the `p` part fails to commute with `u`; the `x` part reduces to `|x|^2 / max(|x|, guard)`.
pub fn theta_apply(psi: &WaveFunction, model: &OscillatorModel, t: f64, origin_guard: f64) -> WaveFunction {
    let dim = psi.grid().dim();
    let gap = 1.0 - 2.0 * model.lambda();
    let c = model.mass() * gap * t.powf(-gap);
    let unit = |x: &[f64], a: usize| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x[a] / r.max(origin_guard)
    };
    let mut out = apply_position_multiplier(psi, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new(-c * r2 / r2.sqrt().max(origin_guard), 0.0)
    });
    for a in 0..dim {
        let u_psi = apply_position_multiplier(psi, |x| Complex64::new(unit(x, a), 0.0));
        let p_u_psi = apply_momentum(&u_psi, a);
        let p_psi = apply_momentum(psi, a);
        let u_p_psi = apply_position_multiplier(&p_psi, |x| Complex64::new(unit(x, a), 0.0));
        out = out.add_scaled(Complex64::new(0.5, 0.0), &p_u_psi).add_scaled(Complex64::new(0.5, 0.0), &u_p_psi);
    }
    out
}
