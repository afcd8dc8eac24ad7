//! Planar motion in a time-decaying magnetic field `B(t)` (symmetric gauge):
//!
//! ```text
//! H_B(t) = p^2/(2m) + q^2 B(t)^2 |x|^2/(8m) - (q B(t)/(2m)) L + V(t, x),   L = x1 p2 - x2 p1.
//! ```
//!
//! The `L` term commutes with the rest of the free part, which gives the reduction
//! `U_B(t, 0) = e^{i Omega(t) L/2} U_OS(t, 0)` with `Omega(t) = int_0^t q B / m` and
//! `H_OS` an oscillator with `k(t) = q^2 B(t)^2/(4m)`.
//!
//! Rotations use the convention `(e^{i theta L} psi)(x) = psi(R(theta) x)`, `R` the
//! counterclockwise rotation, so `e^{i theta L}` turns `<x>` clockwise by `theta`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::grid::{plan, transpose, WaveFunction};
use crate::oscillator::OscillatorModel;
use crate::potential::PotentialSpec;
use crate::propagator::{euclidean_radii, evolve_full, evolve_full_rotating, StepPolicy, ENVELOPE_TOL};

/// `B(t) = B0` for `|t| <= r0`, `B_bar / |t|` beyond.
#[derive(Clone, Debug)]
pub struct MagneticModel {
    q: f64,
    m: f64,
    b0: f64,
    b_bar: f64,
    r0: f64,
    oscillator: OscillatorModel,
}

impl MagneticModel {
    pub fn new(q: f64, m: f64, b0: f64, b_bar: f64, r0: f64) -> Result<Self> {
        if !(q != 0.0 && q.is_finite()) {
            return Err(domain(format!("charge must be nonzero, got {q}")));
        }
        if !(m > 0.0 && m.is_finite() && b0.is_finite() && b_bar.is_finite()) {
            return Err(domain("mass must be positive and fields finite"));
        }
        if !(q * q * b_bar * b_bar < m * m) {
            return Err(domain(format!(
                "q^2 B_bar^2/(4m) = {} must stay below m/4 = {}",
                q * q * b_bar * b_bar / (4.0 * m),
                m / 4.0
            )));
        }
        let k = q * q * b_bar * b_bar / (4.0 * m);
        let k0 = q * q * b0 * b0 / (4.0 * m);
        let oscillator = OscillatorModel::constant_core(m, k, r0, k0)?;
        Ok(Self { q, m, b0, b_bar, r0, oscillator })
    }

    pub fn charge(&self) -> f64 {
        self.q
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn field(&self, t: f64) -> f64 {
        if t.abs() <= self.r0 {
            self.b0
        } else {
            self.b_bar / t.abs()
        }
    }

    /// The oscillator with `k(t) = q^2 B(t)^2 / (4m)`.
    pub fn oscillator(&self) -> &OscillatorModel {
        &self.oscillator
    }

    /// `Omega(t) = int_0^t q B(s)/m ds`, exact and odd in `t`.
    pub fn omega(&self, t: f64) -> f64 {
        let u = t.abs();
        let w = if u <= self.r0 {
            self.q * self.b0 * u / self.m
        } else {
            self.q * self.b0 * self.r0 / self.m + self.q * self.b_bar / self.m * (u / self.r0).ln()
        };
        w.copysign(t)
    }
}

pub fn omega_phase(mm: &MagneticModel, t: f64) -> f64 {
    mm.omega(t)
}

fn require_2d(psi: &WaveFunction) -> Result<()> {
    if psi.grid().dim() != 2 {
        return Err(domain(format!("magnetic evolution needs a 2D grid, got dim {}", psi.grid().dim())));
    }
    Ok(())
}

/// Row-wise shift `row_r(x) -> row_r(x + c y_r)` on contiguous rows of length `n`.
fn shear_rows(data: &mut [Complex64], coords: &[f64], momenta: &[f64], c: f64) {
    let n = coords.len();
    let fwd = plan(n, false);
    let inv = plan(n, true);
    let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
    let scale = 1.0 / n as f64;
    for (row, y) in data.chunks_mut(n).zip(coords) {
        let s = c * y;
        if s == 0.0 {
            continue;
        }
        fwd.process_with_scratch(row, &mut scratch);
        for (a, p) in row.iter_mut().zip(momenta) {
            *a *= Complex64::from_polar(scale, p * s);
        }
        inv.process_with_scratch(row, &mut scratch);
    }
}

/// `psi(R(k pi/2) x)` by index permutation; `x_j -> -x_j` is `j -> (N - j) mod N` on the grid.
fn quarter_turns(psi: &mut WaveFunction, k: i64) {
    let n = psi.grid().points_per_axis();
    let neg = |j: usize| (n - j) % n;
    let src = psi.amplitudes().to_vec();
    let out = psi.amplitudes_mut();
    for i in 0..n {
        for j in 0..n {
            // R(pi/2)(x1, x2) = (-x2, x1)
            out[i * n + j] = match k.rem_euclid(4) {
                0 => src[i * n + j],
                1 => src[neg(j) * n + i],
                2 => src[neg(i) * n + neg(j)],
                _ => src[j * n + neg(i)],
            };
        }
    }
}

/// `e^{i angle L}` without margin checks: quarter turns plus three shears
/// `R(theta) = S1(a) S2(b) S1(a)`, `a = -tan(theta/2)`, `b = sin(theta)`.
pub(crate) fn rotate_in_place(psi: &mut WaveFunction, angle: f64) {
    let k = (angle / FRAC_PI_2).round() as i64;
    let theta = angle - k as f64 * FRAC_PI_2;
    if k != 0 {
        quarter_turns(psi, k);
    }
    if theta == 0.0 {
        return;
    }
    let g = *psi.grid();
    let n = g.points_per_axis();
    let (xs, ps) = (g.positions(), g.momenta());
    let a = -(theta / 2.0).tan();
    let b = theta.sin();
    let mut t = vec![Complex64::default(); g.len()];
    // S1(a): psi(x1 + a x2, x2) acts along axis 0, so work on the transpose
    let shear_axis0 = |amps: &mut [Complex64], t: &mut [Complex64]| {
        transpose(amps, t, n);
        shear_rows(t, &xs, &ps, a);
        transpose(t, amps, n);
    };
    let amps = psi.amplitudes_mut();
    shear_axis0(amps, &mut t);
    // S2(b): psi(x1, x2 + b x1) acts along axis 1 (contiguous rows indexed by x1)
    shear_rows(amps, &xs, &ps, b);
    shear_axis0(amps, &mut t);
}

/// Largest growth of the sup-norm extent over the intermediate shear stages
/// (`sqrt(1 + tan^2(pi/8))`).
const SHEAR_GROWTH: f64 = 1.082_392_200_292_393_9;

/// `e^{i angle L} psi` on a 2D grid.
pub fn rotate_state(psi: &WaveFunction, angle: f64) -> Result<WaveFunction> {
    require_2d(psi)?;
    if !angle.is_finite() {
        return Err(domain("rotation angle must be finite"));
    }
    let g = *psi.grid();
    let (ex, ep) = euclidean_radii(psi, ENVELOPE_TOL);
    if ex * SHEAR_GROWTH > g.half_width() || ep * SHEAR_GROWTH > g.p_max() {
        return Err(domain(format!(
            "rotation needs the state inside a disc of radius {:.3} (position) / {:.3} (momentum); support reaches {ex:.3} / {ep:.3}",
            g.half_width() / SHEAR_GROWTH,
            g.p_max() / SHEAR_GROWTH
        )));
    }
    let mut out = psi.clone();
    rotate_in_place(&mut out, angle);
    Ok(out)
}

/// `U_B(t1, t0) psi`: Strang splitting with the `L` term applied as the exact rotation by
/// `(Omega(b) - Omega(a)) / 2` on each step `[a, b]`.
pub fn evolve_magnetic(
    mm: &MagneticModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    require_2d(psi)?;
    let angle = |a: f64, b: f64| (mm.omega(b) - mm.omega(a)) / 2.0;
    evolve_full_rotating(mm.oscillator(), v, psi, t0, t1, policy, &angle)
}

/// `V(t, x_hat(t))` with `x_hat(t) = R(-Omega(t)/2) x`; radial potentials are returned as is.
pub fn rotated_potential(mm: &MagneticModel, v: &PotentialSpec) -> Result<PotentialSpec> {
    if v.is_radial() {
        return Ok(v.clone());
    }
    let inner = v.clone();
    let mm = mm.clone();
    let (c0, c1) = v.bounds();
    let f = move |t: f64, x: &[f64]| {
        let (s, c) = (-mm.omega(t) / 2.0).sin_cos();
        inner.value(t, &[c * x[0] - s * x[1], s * x[0] + c * x[1]])
    };
    // `value` already carries the time factor
    PotentialSpec::custom(f, v.rho(), c0, c1, v.lambda())
}

/// `U_OS(t1, t0) psi` for `p^2/(2m) + k(t)|x|^2/2 + V(t, x_hat(t))`.
pub fn evolve_os(
    mm: &MagneticModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    require_2d(psi)?;
    match v {
        Some(v) => {
            let rotated = rotated_potential(mm, v)?;
            evolve_full(mm.oscillator(), Some(&rotated), psi, t0, t1, policy)
        }
        None => evolve_full(mm.oscillator(), None, psi, t0, t1, policy),
    }
}

/// `|| U_B(t, 0) psi - e^{i Omega(t) L/2} U_OS(t, 0) psi ||`.
pub fn reduction_residual(
    mm: &MagneticModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t: f64,
    policy: &StepPolicy,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!("reduction residual needs t >= 0, got {t}")));
    }
    let direct = evolve_magnetic(mm, v, psi, 0.0, t, policy)?;
    let reduced = evolve_os(mm, v, psi, 0.0, t, policy)?;
    let rotated = rotate_state(&reduced, mm.omega(t) / 2.0)?;
    Ok(direct.distance(&rotated))
}
