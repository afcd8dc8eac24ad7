//! Test-state factories.

use num_complex::Complex64;

use crate::cutoff::smooth_step;
use crate::error::{domain, Result};
use crate::grid::{Grid, WaveFunction};

/// Normalized `exp(-|x - x0|^2 / (2 sigma^2) + i p0.x)`.
///
/// The center must sit at least `6 sigma` inside every boundary.
pub fn make_gaussian(grid: Grid, center: &[f64], momentum: &[f64], width: f64) -> Result<WaveFunction> {
    let dim = grid.dim();
    if center.len() != dim || momentum.len() != dim {
        return Err(domain(format!("center/momentum must have {dim} components")));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(domain(format!("width must be positive, got {width}")));
    }
    let l = grid.half_width();
    if center.iter().any(|c| c.abs() + 6.0 * width > l) {
        return Err(domain(format!(
            "Gaussian at {center:?} with width {width} violates the 6-width margin on [-{l}, {l})"
        )));
    }
    // momentum width 1/sigma; keep 6 of them inside the band as well
    if momentum.iter().any(|p| p.abs() + 6.0 / width > grid.p_max()) {
        return Err(domain(format!("Gaussian momentum {momentum:?} too close to the band edge {}", grid.p_max())));
    }
    let s2 = 2.0 * width * width;
    let psi = WaveFunction::from_fn(grid, |x| {
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..dim {
            r2 += (x[a] - center[a]).powi(2);
            phase += momentum[a] * x[a];
        }
        Complex64::from_polar((-r2 / s2).exp(), phase)
    });
    Ok(psi.normalized())
}

/// Normalized state whose momentum amplitude is the product of C-infinity bumps
/// `exp(-1/(1 - u^2))`, `u = (p_a - p0_a)/w`, translated to `x0`.
///
/// The momentum support is exactly `[p0 - w, p0 + w]` per axis.
pub fn momentum_bump(grid: Grid, center_p: &[f64], half_width: f64, center_x: &[f64]) -> Result<WaveFunction> {
    let dim = grid.dim();
    if center_p.len() != dim || center_x.len() != dim {
        return Err(domain(format!("bump centers must have {dim} components")));
    }
    if !(half_width >= 4.0 * grid.dp()) {
        return Err(domain(format!(
            "bump half width {half_width} must span at least 4 momentum cells ({})",
            grid.dp()
        )));
    }
    if center_p.iter().any(|p| p.abs() + half_width >= grid.p_max()) {
        return Err(domain("momentum bump leaves the momentum band"));
    }
    let profile = |u: f64| if u.abs() >= 1.0 { 0.0 } else { (-1.0 / (1.0 - u * u)).exp() };
    let coeffs = grid.map_momenta(|p| {
        let mut amp = 1.0;
        let mut phase = 0.0;
        for a in 0..dim {
            amp *= profile((p[a] - center_p[a]) / half_width);
            phase -= p[a] * (center_x[a] + grid.half_width());
        }
        Complex64::from_polar(amp, phase)
    });
    Ok(WaveFunction::from_momentum(grid, coeffs, 0.0)?.normalized())
}

/// Radial momentum shell: amplitude `S((|p| - a)/w) (1 - S((|p| - b + w)/w))`, real and
/// rotation invariant, centered at `x0`. Used for states with `|p|` bounded away from 0.
pub fn momentum_shell(grid: Grid, inner: f64, outer: f64, ramp: f64, center_x: &[f64]) -> Result<WaveFunction> {
    if !(inner >= 0.0 && ramp > 0.0 && inner + 2.0 * ramp <= outer && outer < grid.p_max()) {
        return Err(domain("momentum shell needs 0 <= inner, inner + 2 ramp <= outer < p_max"));
    }
    let dim = grid.dim();
    let coeffs = grid.map_momenta(|p| {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let amp = smooth_step((r - inner) / ramp) * (1.0 - smooth_step((r - outer + ramp) / ramp));
        let phase: f64 = (0..dim).map(|a| -p[a] * (center_x[a] + grid.half_width())).sum();
        Complex64::from_polar(amp, phase)
    });
    Ok(WaveFunction::from_momentum(grid, coeffs, 0.0)?.normalized())
}
