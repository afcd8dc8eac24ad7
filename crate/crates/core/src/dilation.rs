//! Dilation unitaries `(e^{-i beta A} psi)(x) = e^{-n beta} psi(e^{-2 beta} x)`, `A = x.p + p.x`.
//!
//! The trigonometric interpolant of each grid row is evaluated exactly on the
//! rescaled lattice with a chirp-z transform (Bluestein), so the resampling error
//! is the band-limit truncation of the state only.
//!
//! Sign bookkeeping: with this convention `e^{-i beta A} x^2 e^{i beta A} = e^{-4 beta} x^2`
//! and `e^{-i beta A} p^2 e^{i beta A} = e^{4 beta} p^2`. Since
//! `<dilate(psi, -beta), x^2 dilate(psi, -beta)> = <psi, e^{-i beta A} x^2 e^{i beta A} psi>`,
//! the conjugation scalings show up on `dilate(psi, -beta)`.

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::grid::{momentum_mass_outside, plan, position_mass_outside, transpose, WaveFunction};

/// Largest admissible scale factor `e^{2|beta|}`.
pub const MAX_SCALE: f64 = 64.0;

/// Relative weight allowed to leave the grid (position side) or the band (momentum side).
pub const LEAK_TOL: f64 = 1e-16;

struct Resampler {
    n: usize,
    scale: f64,
    amp: f64,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    nyquist: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
}

impl Resampler {
    fn new(n: usize, scale: f64, amp: f64) -> Self {
        let half = (n / 2) as i64;
        let chirp = |k: i64| {
            let k2 = (k * k) as f64;
            Complex64::from_polar(1.0, std::f64::consts::PI * scale * k2 / n as f64)
        };
        let pre = (-half..half)
            .map(|k| {
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let weight = if k == -half { 0.5 } else { 1.0 };
                chirp(k) * sign * weight
            })
            .collect();
        let post = (-half..half).map(chirp).collect();
        // the other half of the split Nyquist coefficient, k = +N/2
        let nyq_sign = if half % 2 == 0 { 1.0 } else { -1.0 };
        let nyquist = (-half..half)
            .map(|m| {
                let phase = std::f64::consts::PI * scale * (half * m) as f64 * 2.0 / n as f64;
                Complex64::from_polar(0.5 * nyq_sign, phase)
            })
            .collect();
        let len = 2 * n;
        let mut kernel = vec![Complex64::default(); len];
        for j in -(n as i64 - 1)..(n as i64) {
            kernel[j.rem_euclid(len as i64) as usize] = chirp(j).conj();
        }
        plan(len, false).process(&mut kernel);
        Self { n, scale, amp, pre, post, nyquist, kernel_hat: kernel }
    }

    fn apply_rows(&self, data: &mut [Complex64]) {
        let n = self.n;
        let len = 2 * n;
        let half = n / 2;
        let fwd_n = plan(n, false);
        let fwd = plan(len, false);
        let inv = plan(len, true);
        let mut buf = vec![Complex64::default(); len];
        let norm = 1.0 / (n as f64 * len as f64);
        for row in data.chunks_mut(n) {
            fwd_n.process(row);
            // A[i] = c_k (-1)^k w^{k^2/2}, k = i - N/2
            for i in 0..n {
                let k = (i + n - half) % n;
                buf[i] = row[k] * self.pre[i];
            }
            buf[n..].iter_mut().for_each(|b| *b = Complex64::default());
            fwd.process(&mut buf);
            buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
            inv.process(&mut buf);
            let c_nyq = row[half] / n as f64;
            for (j, out) in row.iter_mut().enumerate() {
                let m = j as f64 - half as f64;
                *out = if self.scale * m.abs() >= half as f64 {
                    Complex64::default()
                } else {
                    (self.post[j] * buf[j] * norm + c_nyq * self.nyquist[j]) * self.amp
                };
            }
        }
    }
}

/// Apply `e^{-i beta A}`.
///
/// Fails with a domain error when `e^{2|beta|}` exceeds [`MAX_SCALE`] or when more
/// than [`LEAK_TOL`] of the weight would leave the grid (spreading) or the
/// momentum band (compression).
pub fn dilate(psi: &WaveFunction, beta: f64) -> Result<WaveFunction> {
    if !beta.is_finite() {
        return Err(domain("dilation parameter must be finite"));
    }
    if beta == 0.0 {
        return Ok(psi.clone());
    }
    let grid = *psi.grid();
    let scale = (-2.0 * beta).exp();
    if !(1.0 / MAX_SCALE..=MAX_SCALE).contains(&scale) {
        return Err(domain(format!("dilation scale {scale} outside [1/{MAX_SCALE}, {MAX_SCALE}]")));
    }
    if scale < 1.0 {
        let leak = position_mass_outside(psi, scale * grid.half_width());
        if leak > LEAK_TOL {
            return Err(domain(format!("dilated state leaves the grid (relative weight {leak:e})")));
        }
    } else {
        let leak = momentum_mass_outside(psi, grid.p_max() / scale);
        if leak > LEAK_TOL {
            return Err(domain(format!("dilated state leaves the momentum band (relative weight {leak:e})")));
        }
    }
    let n = grid.points_per_axis();
    let resampler = Resampler::new(n, scale, (-beta).exp());
    let mut amps = psi.amplitudes().to_vec();
    resampler.apply_rows(&mut amps);
    if grid.dim() == 2 {
        let mut t = vec![Complex64::default(); amps.len()];
        transpose(&amps, &mut t, n);
        resampler.apply_rows(&mut t);
        transpose(&t, &mut amps, n);
    }
    WaveFunction::new(grid, amps, psi.time_tag())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn gaussian(grid: Grid, sigma: f64, x0: f64, p0: f64) -> WaveFunction {
        WaveFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| (v - x0) * (v - x0)).sum();
            Complex64::from_polar((-r2 / (2.0 * sigma * sigma)).exp(), p0 * x[0])
        })
    }

    #[test]
    fn matches_direct_rescaling() {
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let psi = gaussian(grid, 1.3, 0.4, 0.9);
        for beta in [-0.4, -0.1, 0.2, 0.5] {
            let s = (-2.0f64 * beta).exp();
            let exact = gaussian(grid, 1.3 / s, 0.4 / s, 0.9 * s).scaled(Complex64::new((-beta).exp(), 0.0));
            let out = dilate(&psi, beta).unwrap();
            assert!(out.distance(&exact) < 1e-10, "beta {beta}: {}", out.distance(&exact));
        }
    }

    #[test]
    fn two_dimensional_rescaling() {
        let grid = Grid::new(2, 128, 16.0).unwrap();
        let psi = gaussian(grid, 1.2, 0.3, 0.5);
        let beta = 0.25;
        let s = (-2.0f64 * beta).exp();
        let exact = gaussian(grid, 1.2 / s, 0.3 / s, 0.5 * s).scaled(Complex64::new((-2.0 * beta).exp(), 0.0));
        assert!(dilate(&psi, beta).unwrap().distance(&exact) < 1e-9);
    }

    #[test]
    fn unitary_and_invertible() {
        let grid = Grid::new(1, 512, 30.0).unwrap();
        let psi = gaussian(grid, 1.0, -1.0, 2.0);
        let out = dilate(&psi, 0.6).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-12);
        let back = dilate(&out, -0.6).unwrap();
        assert!(back.distance(&psi) < 1e-10);
    }

    #[test]
    fn guards() {
        let grid = Grid::new(1, 128, 10.0).unwrap();
        let psi = gaussian(grid, 1.0, 0.0, 0.0);
        assert!(dilate(&psi, 2.5).is_err());
        assert!(dilate(&psi, -1.0).is_err());
        let wide = gaussian(grid, 2.0, 0.0, 0.0);
        assert!(dilate(&wide, 0.8).is_err());
    }
}
