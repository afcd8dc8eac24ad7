//! Propagation estimates along `U_S(t, r0) psi`: large-, middle- and minimal-velocity
//! integrals against `dt/t`, the minimal-velocity defect profile, free minimal-velocity
//! decay, and the commutator decay probe.
//!
//! Velocities are measured as `s = |x| / t^(1-2 lambda)`; a free packet with momentum `p`
//! sits at `s = |p| / (m (1 - 2 lambda))`.

use num_complex::Complex64;

use crate::cutoff::{f_le, f_window, Cutoff};
use crate::error::{domain, Error, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::grid::{apply_p2_function, apply_radial_function, WaveFunction};
use crate::observables::apply_velocity_deviation;
use crate::oscillator::OscillatorModel;
use crate::potential::{potential_eval, PotentialSpec};
use crate::propagator::{evolve_free_s, StepPolicy};
use crate::scattering::{low_momentum_mass, step_s, RangeCutoffs, RangeReport, RangeTracker, ADMISSIBLE_MASS};

/// Cutoff numbers and the time grid of the estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateConfig {
    pub kappa1: f64,
    pub r1: f64,
    pub kappa2: f64,
    /// Transition width of the `F_eps` cutoffs.
    pub eps: f64,
    pub eta0: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps5: f64,
    /// Samples run over `r0 2^(i / samples_per_doubling)` up to `r0 2^doublings`.
    pub doublings: u32,
    pub samples_per_doubling: u32,
}

impl Default for EstimateConfig {
    /// Satisfies every ordering constraint for `m = 1`, `lambda = 1/4`; `eps5` is the midpoint
    /// of its admissible interval there.
    fn default() -> Self {
        Self {
            kappa1: 0.05,
            r1: 16.0,
            kappa2: 0.05,
            eps: 0.004,
            eta0: 1.0,
            eps2: 0.008,
            eps3: 0.03,
            eps5: 0.0225,
            doublings: 10,
            samples_per_doubling: 8,
        }
    }
}

impl EstimateConfig {
    /// `theta = 2 sqrt(R1) / (m (1 - 2 lambda))`.
    pub fn theta(&self, model: &OscillatorModel) -> f64 {
        2.0 * self.r1.sqrt() / (model.mass() * (1.0 - 2.0 * model.lambda()))
    }

    pub fn eps4(&self) -> f64 {
        self.eps3 + self.eps
    }

    /// Open interval `(3 eps + eps2, kappa1 / (m (1 - 2 lambda) sqrt(R1)))` for `eps5`.
    pub fn eps5_bounds(&self, model: &OscillatorModel) -> (f64, f64) {
        let hi = self.kappa1 / (model.mass() * (1.0 - 2.0 * model.lambda()) * self.r1.sqrt());
        (3.0 * self.eps + self.eps2, hi)
    }

    pub fn with_midpoint_eps5(mut self, model: &OscillatorModel) -> Self {
        let (lo, hi) = self.eps5_bounds(model);
        self.eps5 = 0.5 * (lo + hi);
        self
    }

    pub fn cutoffs(&self) -> RangeCutoffs {
        RangeCutoffs { kappa1: self.kappa1, r1: self.r1, kappa2: self.kappa2 }
    }

    pub fn validate(&self, model: &OscillatorModel) -> Result<()> {
        self.cutoffs().validate()?;
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.eps > 0.0 && self.eta0 > 0.0) {
            return bad("eps and eta0 must be positive".into());
        }
        if !(self.eps2 > self.eps) {
            return bad(format!("eps2 = {} must exceed eps = {}", self.eps2, self.eps));
        }
        if !(self.eps3 > 2.0 * self.eps) {
            return bad(format!("eps3 = {} must exceed 2 eps = {}", self.eps3, 2.0 * self.eps));
        }
        let (lo, hi) = self.eps5_bounds(model);
        if !(lo < self.eps5 && self.eps5 < hi) {
            return bad(format!("eps5 = {} must lie in ({lo}, {hi})", self.eps5));
        }
        if self.doublings == 0 || self.samples_per_doubling == 0 {
            return bad("the time grid needs at least one doubling and one sample per doubling".into());
        }
        Ok(())
    }

    pub fn times(&self, model: &OscillatorModel) -> Vec<f64> {
        let n = self.doublings * self.samples_per_doubling;
        (0..=n).map(|i| model.r0() * 2f64.powf(i as f64 / self.samples_per_doubling as f64)).collect()
    }
}

/// Sampled integrand with its running integral against `dt/t` (trapezoid in `log t`).
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSeries {
    pub times: Vec<f64>,
    pub integrand: Vec<f64>,
    pub partial: Vec<f64>,
    /// Final partial integral.
    pub bound_estimate: f64,
}

impl IntegralSeries {
    pub fn new(times: Vec<f64>, integrand: Vec<f64>) -> Result<Self> {
        if times.len() != integrand.len() || times.is_empty() {
            return Err(domain("integral series needs equal, non-empty times and values"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] <= 0.0 {
            return Err(domain("integral series times must be positive and increasing"));
        }
        let mut partial = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        partial.push(0.0);
        for i in 1..times.len() {
            acc += 0.5 * (integrand[i - 1] + integrand[i]) * (times[i] / times[i - 1]).ln();
            partial.push(acc);
        }
        Ok(Self { times, integrand, partial, bound_estimate: acc })
    }

    /// Partial integral up to the last sample `<= t`.
    pub fn partial_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&s| s <= t * (1.0 + 1e-12));
        if idx == 0 {
            0.0
        } else {
            self.partial[idx - 1]
        }
    }

    /// `|I(t_full) - I(t_half)| / I(t_full)` (0 when both vanish).
    pub fn relative_change(&self, t_half: f64, t_full: f64) -> f64 {
        let (a, b) = (self.partial_at(t_half), self.partial_at(t_full));
        if b == 0.0 {
            if a == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (b - a).abs() / b
        }
    }
}

/// Evaluate `f(t, U_S(t, r0) psi)` on increasing `times >= r0`, evolving incrementally.
fn along_trajectory(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    times: &[f64],
    policy: &StepPolicy,
    mut f: impl FnMut(f64, &WaveFunction),
) -> Result<()> {
    let r0 = model.r0();
    if times.iter().any(|&t| t < r0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("sample times must be increasing and >= r0"));
    }
    let mut chi = psi.clone();
    let mut t_prev = r0;
    for &t in times {
        chi = step_s(model, spec, &chi, t_prev, t, policy)?;
        t_prev = t;
        f(t, &chi);
    }
    Ok(())
}

fn velocity_scale(model: &OscillatorModel, t: f64) -> f64 {
    t.powf(1.0 - 2.0 * model.lambda())
}

fn integral(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cfg: &EstimateConfig,
    policy: &StepPolicy,
    integrand: impl Fn(f64, &WaveFunction) -> f64,
) -> Result<IntegralSeries> {
    cfg.validate(model)?;
    let times = cfg.times(model);
    let mut values = Vec::with_capacity(times.len());
    along_trajectory(model, spec, psi, &times, policy, |t, chi| values.push(integrand(t, chi)))?;
    IntegralSeries::new(times, values)
}

/// `|| F_eps(theta <= |x|/t^(1-2 lambda) <= theta + eta0) phi_1(p^2) U_S(t, r0) psi ||^2`.
pub fn large_velocity_integral(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cfg: &EstimateConfig,
    policy: &StepPolicy,
) -> Result<IntegralSeries> {
    let phi1 = cfg.cutoffs().phi1();
    let theta = cfg.theta(model);
    integral(model, spec, psi, cfg, policy, |t, chi| {
        let scale = velocity_scale(model, t);
        let inner = apply_p2_function(chi, |p2| phi1.eval(p2));
        apply_radial_function(&inner, |r| f_window(r / scale, theta, theta + cfg.eta0, cfg.eps)).norm_sqr()
    })
}

/// `|| (p - m(1-2 lambda) x / t^(1-2 lambda)) F_eps(eps2 <= |x|/t^(1-2 lambda) <= theta + eps3)
/// phi_1(p^2) U_S(t, r0) psi ||^2`, summed over components.
pub fn middle_velocity_integral(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cfg: &EstimateConfig,
    policy: &StepPolicy,
) -> Result<IntegralSeries> {
    let phi1 = cfg.cutoffs().phi1();
    let theta = cfg.theta(model);
    let gap = 1.0 - 2.0 * model.lambda();
    integral(model, spec, psi, cfg, policy, |t, chi| {
        let scale = velocity_scale(model, t);
        let inner = apply_p2_function(chi, |p2| phi1.eval(p2));
        let w = apply_radial_function(&inner, |r| f_window(r / scale, cfg.eps2, theta + cfg.eps3, cfg.eps));
        let c = model.mass() * gap / scale;
        (0..chi.grid().dim()).map(|a| apply_velocity_deviation(&w, a, c).norm_sqr()).sum()
    })
}

/// `|| F_eps(|x|/t^(1-2 lambda) <= eps5) phi_2(x^2/t^(2 rho_lambda)) phi_1(p^2) U_S(t, r0) psi ||^2`.
pub fn minimal_velocity_integral(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cfg: &EstimateConfig,
    policy: &StepPolicy,
) -> Result<IntegralSeries> {
    let cut = cfg.cutoffs();
    let (phi1, phi2) = (cut.phi1(), cut.phi2());
    let rho_l = model.rho_lambda();
    integral(model, spec, psi, cfg, policy, |t, chi| {
        let scale = velocity_scale(model, t);
        let inner = apply_p2_function(chi, |p2| phi1.eval(p2));
        let zone = t.powf(2.0 * rho_l);
        apply_radial_function(&inner, |r| f_le(r / scale, cfg.eps5, cfg.eps) * phi2.eval(r * r / zone)).norm_sqr()
    })
}

/// Defects `|| F_eps(|x|/t^(1-2 lambda) <= eps5) U_S(t, r0) psi ||` with membership evidence.
#[derive(Clone, Debug)]
pub struct MinimalVelocityProfile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Last three samples strictly decreasing and the final one `<= tol`.
    pub decaying: bool,
    pub membership: RangeReport,
}

pub fn minimal_velocity_profile(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cfg: &EstimateConfig,
    policy: &StepPolicy,
    tol: f64,
) -> Result<MinimalVelocityProfile> {
    cfg.validate(model)?;
    let times = cfg.times(model);
    let mut tracker = RangeTracker::new(model, &cfg.cutoffs(), tol);
    let mut values = Vec::with_capacity(times.len());
    along_trajectory(model, spec, psi, &times, policy, |t, chi| {
        let scale = velocity_scale(model, t);
        values.push(apply_radial_function(chi, |r| f_le(r / scale, cfg.eps5, cfg.eps)).norm());
        tracker.record(chi, t);
    })?;
    let membership = tracker.finish(psi.norm());
    if !membership.member {
        log::warn!("minimal-velocity profile of a state without range-membership evidence");
    }
    let tail = &values[values.len().saturating_sub(3)..];
    let decaying = tail.windows(2).all(|w| w[1] < w[0]) && values.last().is_some_and(|&v| v <= tol);
    Ok(MinimalVelocityProfile { times, values, decaying, membership })
}

/// Sampled decay with its power-law fit (`None` when every value is exactly zero).
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: Option<PowerFit>,
}

impl DecayReport {
    fn fitted(times: Vec<f64>, values: Vec<f64>, floor: f64) -> Result<Self> {
        let fit = if values.iter().all(|&v| v == 0.0) { None } else { Some(fit_power_law(&times, &values, floor)?) };
        Ok(Self { times, values, fit })
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.slope)
    }
}

/// Values below this multiple of `||psi||` are treated as engine noise in the fits.
pub const FIT_FLOOR: f64 = 1e-13;

/// Ramp of the smooth stand-in for `chi(s <= a)`: 1 on `s <= a`, 0 on `s >= (1 + RAMP) a`.
pub const FREE_DECAY_RAMP: f64 = 0.25;

/// `|| F(|x|/t^(1-2 lambda) <= eps0/(m(1-2 lambda))) U_S0(t, r0) psi ||` over `times`, with the
/// log-log slope.
pub fn free_min_velocity_decay(
    model: &OscillatorModel,
    psi: &WaveFunction,
    eps0: f64,
    times: &[f64],
) -> Result<DecayReport> {
    if !(eps0 > 0.0) {
        return Err(domain(format!("eps0 must be positive, got {eps0}")));
    }
    let low = low_momentum_mass(psi, 2.0 * eps0);
    if low > ADMISSIBLE_MASS {
        log::warn!("relative momentum weight {low:e} below |p| = 2 eps0 = {}: no decay is expected", 2.0 * eps0);
    }
    let a = eps0 / (model.mass() * (1.0 - 2.0 * model.lambda()));
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        let free = evolve_free_s(model, psi, model.r0(), t)?;
        let scale = velocity_scale(model, t);
        values.push(
            apply_radial_function(&free, |r| f_le(r / scale, a * (1.0 + FREE_DECAY_RAMP), a * FREE_DECAY_RAMP)).norm(),
        );
    }
    DecayReport::fitted(times.to_vec(), values, FIT_FLOOR * psi.norm())
}

/// What the commutator probe measures.
#[derive(Clone, Copy, Debug)]
pub enum CommutatorProbe<'a> {
    /// `h(|x|/t^rho) [V(t, t^lambda x), phi_1(p^2)] psi`; `None` is `V = 0`.
    Potential(Option<&'a PotentialSpec>),
    /// `[h(|x|/t^rho), phi_1(p^2)] psi`.
    Cutoff,
}

/// Norms of the commutator probe at `times` for a fixed `psi`, with the fitted exponent.
pub fn commutator_decay_probe(
    model: &OscillatorModel,
    probe: CommutatorProbe<'_>,
    h: &Cutoff,
    rho_probe: f64,
    phi1: &Cutoff,
    psi: &WaveFunction,
    times: &[f64],
) -> Result<DecayReport> {
    h.validate()?;
    phi1.validate()?;
    if !(rho_probe > 0.0) {
        return Err(domain(format!("probe exponent must be positive, got {rho_probe}")));
    }
    if let CommutatorProbe::Potential(Some(spec)) = probe {
        if (spec.lambda() - model.lambda()).abs() > 1e-12 {
            return Err(domain("potential was built for a different lambda than the model"));
        }
    }
    if h.eval(0.0) != 0.0 {
        return Err(domain("the probe cutoff must vanish near the origin"));
    }
    let mut values = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0) {
            return Err(domain("probe times must be positive"));
        }
        let zone = t.powf(rho_probe);
        let cut = |w: &WaveFunction| apply_radial_function(w, |r| h.eval(r / zone));
        let smooth = |w: &WaveFunction| apply_p2_function(w, |p2| phi1.eval(p2));
        let value = match probe {
            CommutatorProbe::Potential(None) => 0.0,
            CommutatorProbe::Potential(Some(spec)) => {
                let v: Vec<Complex64> =
                    potential_eval(spec, t, psi.grid(), true).into_iter().map(Complex64::from).collect();
                let mul = |w: &WaveFunction| {
                    let mut out = w.clone();
                    out.mul_array(&v);
                    out
                };
                let comm = mul(&smooth(psi)).add_scaled((-1.0).into(), &smooth(&mul(psi)));
                cut(&comm).norm()
            }
            CommutatorProbe::Cutoff => cut(&smooth(psi)).add_scaled((-1.0).into(), &smooth(&cut(psi))).norm(),
        };
        values.push(value);
    }
    DecayReport::fitted(times.to_vec(), values, FIT_FLOOR * psi.norm())
}
