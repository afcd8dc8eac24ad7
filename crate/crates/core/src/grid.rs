//! Uniform periodic grids, wave functions on them, and Fourier/position multipliers.
//!
//! Amplitudes are stored row-major with axis 0 (x1) slowest. Position samples are
//! `x_j = -L + j dx`; momentum coefficients are in FFT order, `p_k = dp * k_signed`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{domain, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

pub(crate) fn transpose(data: &[Complex64], out: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    out[j * n + i] = data[i * n + j];
                }
            }
        }
    }
}

/// Unnormalized DFT along every axis.
pub(crate) fn fft_axes(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if dim == 2 {
        let mut t = vec![Complex64::default(); data.len()];
        transpose(data, &mut t, n);
        fft.process_with_scratch(&mut t, &mut scratch);
        transpose(&t, data, n);
    }
}

/// `[-L, L)^dim` sampled with `N` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(domain(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(domain(format!("points per axis must be a power of two >= 4, got {points_per_axis}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(domain(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self { dim, n: points_per_axis, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dp(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Magnitude of the most negative lattice momentum, `pi N / (2L)`.
    pub fn p_max(&self) -> f64 {
        self.dp() * (self.n / 2) as f64
    }

    /// Volume element `dx^dim`.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn p(&self, k: usize) -> f64 {
        let signed = if k < self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
        signed * self.dp()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Momentum lattice in FFT order.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.p(k)).collect()
    }

    /// Multi-index of flat index `i` (axis 0 first).
    pub(crate) fn split(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i / self.n, i % self.n]
        }
    }

    /// Evaluate `f` at every position sample; the slice has length `dim`.
    pub fn map_positions<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let xs = self.positions();
        let mut out = Vec::with_capacity(self.len());
        let mut point = [0.0; 2];
        for i in 0..self.len() {
            let idx = self.split(i);
            for a in 0..self.dim {
                point[a] = xs[idx[a]];
            }
            out.push(f(&point[..self.dim]));
        }
        out
    }

    /// Evaluate `f` at every lattice momentum (FFT order).
    pub fn map_momenta<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let ps = self.momenta();
        let mut out = Vec::with_capacity(self.len());
        let mut point = [0.0; 2];
        for i in 0..self.len() {
            let idx = self.split(i);
            for a in 0..self.dim {
                point[a] = ps[idx[a]];
            }
            out.push(f(&point[..self.dim]));
        }
        out
    }
}

/// Complex amplitudes on a [`Grid`] with the time the state is attached to.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    amps: Vec<Complex64>,
    time_tag: f64,
}

impl WaveFunction {
    pub fn new(grid: Grid, amps: Vec<Complex64>, time_tag: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Validation(format!("expected {} amplitudes, got {}", grid.len(), amps.len())));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Validation("amplitudes must be finite".into()));
        }
        Ok(Self { grid, amps, time_tag })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, amps: vec![Complex64::default(); grid.len()], time_tag: 0.0 }
    }

    pub fn from_fn(grid: Grid, f: impl FnMut(&[f64]) -> Complex64) -> Self {
        Self { grid, amps: grid.map_positions(f), time_tag: 0.0 }
    }

    /// Build from DFT coefficients in FFT order (inverse of [`Self::to_momentum`]).
    pub fn from_momentum(grid: Grid, mut coeffs: Vec<Complex64>, time_tag: f64) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Validation("coefficient count does not match grid".into()));
        }
        fft_axes(&mut coeffs, grid.n, grid.dim, true);
        let scale = 1.0 / grid.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(Self { grid, amps: coeffs, time_tag })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn time_tag(&self) -> f64 {
        self.time_tag
    }

    pub fn set_time_tag(&mut self, t: f64) {
        self.time_tag = t;
    }

    pub fn with_time_tag(mut self, t: f64) -> Self {
        self.time_tag = t;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.cell()
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &WaveFunction) -> f64 {
        let s: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        (s * self.grid.cell()).sqrt()
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= c);
        self
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self.scaled(Complex64::new(1.0 / n, 0.0))
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(mut self, c: Complex64, other: &WaveFunction) -> Self {
        self.amps.iter_mut().zip(&other.amps).for_each(|(a, b)| *a += c * b);
        self
    }

    /// DFT coefficients in FFT order (unnormalized; see [`Self::momentum_norm_sqr`]).
    pub fn to_momentum(&self) -> Vec<Complex64> {
        let mut c = self.amps.clone();
        fft_axes(&mut c, self.grid.n, self.grid.dim, false);
        c
    }

    /// `||psi||^2` computed on the momentum side.
    pub fn momentum_norm_sqr(&self) -> f64 {
        let c = self.to_momentum();
        c.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell() / self.grid.len() as f64
    }

    /// Momentum probability weights (sum to `||psi||^2`), FFT order.
    pub fn momentum_density(&self) -> Vec<f64> {
        let scale = self.grid.cell() / self.grid.len() as f64;
        self.to_momentum().iter().map(|a| a.norm_sqr() * scale).collect()
    }

    /// Position probability weights (sum to `||psi||^2`).
    pub fn position_density(&self) -> Vec<f64> {
        let cell = self.grid.cell();
        self.amps.iter().map(|a| a.norm_sqr() * cell).collect()
    }

    fn axis_moment(&self, weights: &[f64], axis_values: &[f64], axis: usize, power: i32) -> f64 {
        weights.iter().enumerate().map(|(i, w)| w * axis_values[self.grid.split(i)[axis]].powi(power)).sum()
    }

    /// Normalized `<x_axis>`.
    pub fn mean_x(&self, axis: usize) -> f64 {
        let w = self.position_density();
        self.axis_moment(&w, &self.grid.positions(), axis, 1) / w.iter().sum::<f64>()
    }

    /// Normalized `<p_axis>`.
    pub fn mean_p(&self, axis: usize) -> f64 {
        let w = self.momentum_density();
        self.axis_moment(&w, &self.grid.momenta(), axis, 1) / w.iter().sum::<f64>()
    }

    pub fn var_x(&self, axis: usize) -> f64 {
        let w = self.position_density();
        let total: f64 = w.iter().sum();
        let xs = self.grid.positions();
        let mean = self.axis_moment(&w, &xs, axis, 1) / total;
        self.axis_moment(&w, &xs, axis, 2) / total - mean * mean
    }

    pub fn var_p(&self, axis: usize) -> f64 {
        let w = self.momentum_density();
        let total: f64 = w.iter().sum();
        let ps = self.grid.momenta();
        let mean = self.axis_moment(&w, &ps, axis, 1) / total;
        self.axis_moment(&w, &ps, axis, 2) / total - mean * mean
    }

    /// Quadratic form `<psi, |x|^2 psi>`.
    pub fn x2_form(&self) -> f64 {
        let w = self.position_density();
        let xs = self.grid.positions();
        (0..self.grid.dim).map(|a| self.axis_moment(&w, &xs, a, 2)).sum()
    }

    /// Quadratic form `<psi, |p|^2 psi>`.
    pub fn p2_form(&self) -> f64 {
        let w = self.momentum_density();
        let ps = self.grid.momenta();
        (0..self.grid.dim).map(|a| self.axis_moment(&w, &ps, a, 2)).sum()
    }

    /// Multiply by `prod_a table[j_a]` (a separable position factor).
    pub(crate) fn mul_separable(&mut self, table: &[Complex64]) {
        match self.grid.dim {
            1 => self.amps.iter_mut().zip(table).for_each(|(a, f)| *a *= f),
            _ => {
                let n = self.grid.n;
                for (row, f0) in self.amps.chunks_mut(n).zip(table) {
                    row.iter_mut().zip(table).for_each(|(a, f1)| *a *= f0 * f1);
                }
            }
        }
    }

    pub(crate) fn mul_array(&mut self, factors: &[Complex64]) {
        self.amps.iter_mut().zip(factors).for_each(|(a, f)| *a *= f);
    }

    /// Multiply the momentum representation by `prod_a table[k_a]` (FFT order).
    pub(crate) fn mul_separable_momentum(&mut self, table: &[Complex64]) {
        let (n, dim) = (self.grid.n, self.grid.dim);
        fft_axes(&mut self.amps, n, dim, false);
        let scale = Complex64::new(1.0 / self.grid.len() as f64, 0.0);
        self.mul_separable(table);
        self.amps.iter_mut().for_each(|a| *a *= scale);
        fft_axes(&mut self.amps, n, dim, true);
    }

    pub(crate) fn mul_momentum_array(&mut self, factors: &[Complex64]) {
        let (n, dim) = (self.grid.n, self.grid.dim);
        fft_axes(&mut self.amps, n, dim, false);
        let scale = 1.0 / self.grid.len() as f64;
        self.amps.iter_mut().zip(factors).for_each(|(a, f)| *a *= f * scale);
        fft_axes(&mut self.amps, n, dim, true);
    }

    /// `exp(-i alpha |p|^2)` applied exactly on the Fourier side.
    pub(crate) fn kinetic_phase(&mut self, alpha: f64) {
        let table: Vec<Complex64> =
            self.grid.momenta().iter().map(|p| Complex64::from_polar(1.0, -alpha * p * p)).collect();
        self.mul_separable_momentum(&table);
    }

    /// `exp(-i alpha |x|^2)` pointwise.
    pub(crate) fn quadratic_phase(&mut self, alpha: f64) {
        let table: Vec<Complex64> =
            self.grid.positions().iter().map(|x| Complex64::from_polar(1.0, -alpha * x * x)).collect();
        self.mul_separable(&table);
    }
}

/// `F^-1 f(p) F psi`; `f` sees the lattice momentum vector.
pub fn apply_fourier_multiplier(psi: &WaveFunction, f: impl FnMut(&[f64]) -> Complex64) -> WaveFunction {
    let factors = psi.grid.map_momenta(f);
    let mut out = psi.clone();
    out.mul_momentum_array(&factors);
    out
}

/// Pointwise product `g(x) psi(x)`.
pub fn apply_position_multiplier(psi: &WaveFunction, g: impl FnMut(&[f64]) -> Complex64) -> WaveFunction {
    let factors = psi.grid.map_positions(g);
    let mut out = psi.clone();
    out.mul_array(&factors);
    out
}

/// Real-valued Fourier multiplier of `|p|^2` (cutoffs such as `phi_1(p^2)`).
pub fn apply_p2_function(psi: &WaveFunction, f: impl Fn(f64) -> f64) -> WaveFunction {
    apply_fourier_multiplier(psi, |p| Complex64::new(f(p.iter().map(|v| v * v).sum()), 0.0))
}

/// Real-valued position multiplier of `|x|`.
pub fn apply_radial_function(psi: &WaveFunction, f: impl Fn(f64) -> f64) -> WaveFunction {
    apply_position_multiplier(psi, |x| Complex64::new(f(x.iter().map(|v| v * v).sum::<f64>().sqrt()), 0.0))
}

/// Relative weight of `psi` outside the box `|x_a| < r` for all axes.
pub(crate) fn position_mass_outside(psi: &WaveFunction, r: f64) -> f64 {
    let total = psi.norm_sqr();
    if total == 0.0 {
        return 0.0;
    }
    let xs = psi.grid.positions();
    let w = psi.position_density();
    let out: f64 = w
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = psi.grid.split(*i);
            (0..psi.grid.dim).any(|a| xs[idx[a]].abs() >= r)
        })
        .map(|(_, w)| w)
        .sum();
    out / total
}

/// Relative weight of `psi` outside the momentum box `|p_a| < r`.
pub(crate) fn momentum_mass_outside(psi: &WaveFunction, r: f64) -> f64 {
    let w = psi.momentum_density();
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let ps = psi.grid.momenta();
    let out: f64 = w
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = psi.grid.split(*i);
            (0..psi.grid.dim).any(|a| ps[idx[a]].abs() >= r)
        })
        .map(|(_, w)| w)
        .sum();
    out / total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(grid: Grid) -> WaveFunction {
        WaveFunction::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
            Complex64::from_polar((-r2 / 2.0).exp(), 0.7 * x[0])
        })
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 100, 1.0).is_err());
        assert!(Grid::new(1, 64, 0.0).is_err());
        let g = Grid::new(1, 8, 4.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.p(4), -g.p_max());
        assert_eq!(g.x(0), -4.0);
    }

    #[test]
    fn parseval_1d_and_2d() {
        for dim in [1, 2] {
            let psi = bump(Grid::new(dim, 64, 8.0).unwrap());
            let (a, b) = (psi.norm_sqr(), psi.momentum_norm_sqr());
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn fourier_roundtrip() {
        let psi = bump(Grid::new(2, 32, 6.0).unwrap());
        let back = WaveFunction::from_momentum(*psi.grid(), psi.to_momentum(), 0.0).unwrap();
        assert!(psi.distance(&back) < 1e-13);
    }

    #[test]
    fn identity_multiplier() {
        let psi = bump(Grid::new(1, 128, 10.0).unwrap());
        let out = apply_fourier_multiplier(&psi, |_| Complex64::new(1.0, 0.0));
        assert!(psi.distance(&out) < 1e-13);
        let zero = apply_position_multiplier(&psi, |_| Complex64::default());
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn momentum_derivative_matches_mean() {
        let psi = bump(Grid::new(1, 256, 12.0).unwrap()).normalized();
        assert!((psi.mean_p(0) - 0.7).abs() < 1e-10);
        assert!((psi.mean_x(0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn separable_kinetic_matches_generic() {
        let psi = bump(Grid::new(2, 32, 6.0).unwrap());
        let mut a = psi.clone();
        a.kinetic_phase(0.3);
        let b = apply_fourier_multiplier(&psi, |p| Complex64::from_polar(1.0, -0.3 * (p[0] * p[0] + p[1] * p[1])));
        assert!(a.distance(&b) < 1e-12);
    }
}
