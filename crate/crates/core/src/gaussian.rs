//! Exact Gaussian transport under the quadratic Hamiltonian `p^2/(2m) + k(t) x^2/2`.
//!
//! A state `exp(sum_a [i alpha_a (x_a - q_a)^2 + i p_a (x_a - q_a)] + gamma)` stays Gaussian.
//! With the transfer matrix `[[a, b], [c, d]]` of the classical flow, `Z = a + 2 alpha0 b`
//! and
//!
//! ```text
//! alpha(t) = (c + 2 alpha0 d) / (2 Z),   gamma(t) = gamma0 + i S - log(Z)/2,
//! ```
//!
//! where `S = (p q - p0 q0)/2` is the classical action. `arg Z` is monotone (its rate is
//! `Im alpha0` times the Wronskian), so `log Z` is continued along sampled times.

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::grid::{Grid, WaveFunction};
use crate::oscillator::FundamentalSolution;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams {
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    /// `alpha_a`; a width-`sigma` Gaussian has `alpha = i / (2 sigma^2)`.
    pub alpha: Vec<Complex64>,
    /// Complex log-amplitude.
    pub gamma: Complex64,
    /// Time the parameters refer to.
    pub time: f64,
}

impl GaussianParams {
    /// Parameters of [`crate::states::make_gaussian`]'s state at time `t`: the same
    /// normalization and the `exp(i p0.x)` phase convention.
    pub fn from_state(center: &[f64], momentum: &[f64], width: f64, t: f64) -> Result<Self> {
        if center.len() != momentum.len() || center.is_empty() {
            return Err(domain("center and momentum must have equal, nonzero length"));
        }
        if !(width > 0.0) {
            return Err(domain("width must be positive"));
        }
        let n = center.len() as f64;
        let log_norm = -n / 4.0 * (std::f64::consts::PI * width * width).ln();
        let phase: f64 = center.iter().zip(momentum).map(|(q, p)| q * p).sum();
        Ok(Self {
            center: center.to_vec(),
            momentum: momentum.to_vec(),
            alpha: vec![Complex64::new(0.0, 0.5 / (width * width)); center.len()],
            gamma: Complex64::new(log_norm, phase),
            time: t,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().any(|a| !(a.im > 0.0)) {
            return Err(domain("Gaussian width parameter must have positive imaginary part"));
        }
        Ok(())
    }

    /// `Var(x_a) = 1 / (4 Im alpha_a)` for a normalized state.
    pub fn position_variance(&self, axis: usize) -> f64 {
        0.25 / self.alpha[axis].im
    }

    /// `Var(p_a) = |alpha_a|^2 / Im alpha_a`.
    pub fn momentum_variance(&self, axis: usize) -> f64 {
        self.alpha[axis].norm_sqr() / self.alpha[axis].im
    }

    pub fn to_wavefunction(&self, grid: Grid) -> Result<WaveFunction> {
        if grid.dim() != self.center.len() {
            return Err(domain("grid dimension does not match Gaussian"));
        }
        let psi = WaveFunction::from_fn(grid, |x| {
            let mut e = self.gamma;
            for a in 0..x.len() {
                let d = x[a] - self.center[a];
                e += Complex64::i() * (self.alpha[a] * d * d + self.momentum[a] * d);
            }
            e.exp()
        });
        Ok(psi.with_time_tag(self.time))
    }
}

/// Transport `g` from `g.time` to `t` exactly.
pub fn evolve_gaussian_exact(fs: &FundamentalSolution, m: f64, g: &GaussianParams, t: f64) -> Result<GaussianParams> {
    g.validate()?;
    if (m - fs.mass()).abs() > 1e-12 * m {
        return Err(domain(format!("mass {m} does not match the fundamental solution's {}", fs.mass())));
    }
    let t0 = g.time;
    if t0.abs() > fs.t_max() || t.abs() > fs.t_max() {
        return Err(domain(format!("times outside solution range +-{}", fs.t_max())));
    }
    if t == t0 {
        return Ok(g.clone());
    }
    let tm = fs.transfer_matrix(t0, t);
    let mut out = g.clone();
    out.time = t;
    // continue log Z along samples; the per-sample change must stay below pi
    let samples = sample_times(fs, t0, t);
    for a in 0..g.center.len() {
        let (q0, p0, a0) = (g.center[a], g.momentum[a], g.alpha[a]);
        let z_at = |s: f64| {
            let m_s = fs.transfer_matrix(t0, s);
            Complex64::new(m_s[0][0], 0.0) + 2.0 * a0 * m_s[0][1]
        };
        let mut arg = 0.0;
        let mut prev = Complex64::new(1.0, 0.0);
        for &s in &samples {
            let z = z_at(s);
            arg += (z / prev).arg();
            prev = z;
        }
        let z = z_at(t);
        let log_z = Complex64::new(z.norm().ln(), arg);
        let q = tm[0][0] * q0 + tm[0][1] * p0;
        let p = tm[1][0] * q0 + tm[1][1] * p0;
        // the initial Lagrangian line p = 2 alpha0 x is carried to P/X = 2 alpha
        out.alpha[a] = (tm[1][0] + 2.0 * a0 * tm[1][1]) / (2.0 * z);
        out.center[a] = q;
        out.momentum[a] = p;
        out.gamma += Complex64::new(0.0, 0.5 * (p * q - p0 * q0)) - 0.5 * log_z;
    }
    Ok(out)
}

fn sample_times(fs: &FundamentalSolution, t0: f64, t1: f64) -> Vec<f64> {
    // dense in the core (oscillatory), geometric in the tails (monotone power laws)
    let r0 = fs.r0();
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let mut pts = Vec::new();
    let (core_lo, core_hi) = (lo.max(-r0), hi.min(r0));
    if core_lo < core_hi {
        let n = 4000;
        pts.extend((0..=n).map(|i| core_lo + (core_hi - core_lo) * i as f64 / n as f64));
    }
    let mut tail = |a: f64, b: f64, sign: f64| {
        let n = ((b / a).ln() * 400.0).ceil() as usize + 2;
        pts.extend((0..=n).map(|i| sign * a * (b / a).powf(i as f64 / n as f64)));
    };
    if hi > r0 {
        tail(lo.max(r0), hi, 1.0);
    }
    if lo < -r0 {
        tail((-hi).max(r0), -lo, -1.0);
    }
    pts.sort_by(f64::total_cmp);
    if t1 < t0 {
        pts.reverse();
    }
    pts
}
