//! Wave operators in the rescaled frame, realized as horizon-doubling Cauchy sequences,
//! plus the Cook integrand, range membership and completeness round trips.
//!
//! Horizons are `T_k = r0 2^k`. Forward approximants are `U_S(T, r0)^* U_S0(T, r0) psi`,
//! inverse approximants `U_S0(T, r0)^* U_S(T, r0) phi`.

use crate::cutoff::Cutoff;
use crate::error::{domain, Error, Result};
use crate::grid::{apply_p2_function, apply_radial_function, WaveFunction};
use crate::oscillator::OscillatorModel;
use crate::potential::PotentialSpec;
use crate::propagator::{dressing_apply, evolve_free_s, evolve_full, evolve_s, StepPolicy};

/// Horizon-doubling record of a strong-limit approximation.
#[derive(Clone, Debug)]
pub struct WaveOpReport {
    pub horizons: Vec<f64>,
    /// `||psi_{T_k} - psi_{T_{k-1}}||` for `k >= 1`, with `psi_{T_0} = psi`.
    pub cauchy_gaps: Vec<f64>,
    /// Norm of every approximant, aligned with `horizons`.
    pub norms: Vec<f64>,
    pub result: WaveFunction,
    pub converged: bool,
    pub tol: f64,
    /// Membership evidence gathered on the way (inverse runs only).
    pub membership: Option<RangeReport>,
}

impl WaveOpReport {
    pub fn last_gap(&self) -> f64 {
        self.cauchy_gaps.last().copied().unwrap_or(0.0)
    }
}

/// Cutoff parameters of the range sets: `phi_1(p^2)` with `(kappa1, R1)`, `phi_2` with `kappa2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeCutoffs {
    pub kappa1: f64,
    pub r1: f64,
    pub kappa2: f64,
}

impl Default for RangeCutoffs {
    fn default() -> Self {
        Self { kappa1: 0.05, r1: 16.0, kappa2: 0.05 }
    }
}

impl RangeCutoffs {
    pub fn validate(&self) -> Result<()> {
        self.phi1().validate()?;
        self.phi2().validate()
    }

    pub fn phi1(&self) -> Cutoff {
        Cutoff::Phi1 { kappa1: self.kappa1, r1: self.r1 }
    }

    pub fn phi2(&self) -> Cutoff {
        Cutoff::Phi2 { kappa2: self.kappa2 }
    }

    /// Default admissibility radius `eps0 = kappa1 / 2`.
    pub fn eps0(&self) -> f64 {
        self.kappa1 / 2.0
    }
}

/// Membership defects along `U_S(t, r0) psi`.
#[derive(Clone, Debug)]
pub struct RangeReport {
    pub times: Vec<f64>,
    /// `||(1 - phi_1(p^2)) U_S(t, r0) psi||`.
    pub w1_defect: Vec<f64>,
    /// `||(1 - phi_2(x^2 / t^(2 rho_lambda))) U_S(t, r0) psi||`.
    pub w2_defect: Vec<f64>,
    pub tol: f64,
    pub member: bool,
}

/// Relative momentum weight below `|p| = eps0`.
pub fn low_momentum_mass(psi: &WaveFunction, eps0: f64) -> f64 {
    let dens = psi.momentum_density();
    let total: f64 = dens.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let g = psi.grid();
    let ps = g.momenta();
    let low: f64 = dens
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let idx = g.split(*i);
            let p2: f64 = (0..g.dim()).map(|a| ps[idx[a]] * ps[idx[a]]).sum();
            p2 < eps0 * eps0
        })
        .map(|(_, w)| w)
        .sum();
    low / total
}

/// Largest admissible low-momentum weight.
pub const ADMISSIBLE_MASS: f64 = 1e-10;

pub fn check_admissible(psi: &WaveFunction, eps0: f64) -> Result<()> {
    let mass = low_momentum_mass(psi, eps0);
    if mass > ADMISSIBLE_MASS {
        return Err(Error::Precondition(format!(
            "relative momentum weight {mass:e} below |p| = {eps0} exceeds {ADMISSIBLE_MASS:e}"
        )));
    }
    Ok(())
}

/// `|| V(t, t^lambda x) U_S0(t, r0) psi ||`.
pub fn cook_integrand(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t: f64,
    eps0: f64,
) -> Result<f64> {
    check_admissible(psi, eps0)?;
    cook_value(model, spec, psi, t)
}

fn cook_value(model: &OscillatorModel, spec: Option<&PotentialSpec>, psi: &WaveFunction, t: f64) -> Result<f64> {
    let Some(spec) = spec else {
        return Ok(0.0);
    };
    let free = evolve_free_s(model, psi, model.r0(), t)?;
    let v = crate::potential::potential_eval(spec, t, psi.grid(), true);
    let weighted: f64 = free.amplitudes().iter().zip(&v).map(|(a, v)| a.norm_sqr() * v * v).sum();
    Ok((weighted * psi.grid().cell()).sqrt())
}

/// `int_a^b cook(t) dt` by composite Simpson in `log t` with `panels` (even) panels.
pub fn cook_tail(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64> {
    if !(a >= model.r0() && b > a) {
        return Err(domain(format!("Cook tail needs r0 <= a < b, got [{a}, {b}]")));
    }
    let n = panels.max(2) + panels % 2;
    let h = (b / a).ln() / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let t = a * (h * i as f64).exp();
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * cook_value(model, spec, psi, t)? * t;
    }
    Ok(sum * h / 3.0)
}

pub(crate) fn step_s(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    match spec {
        Some(v) => evolve_s(model, Some(v), psi, t0, t1, policy),
        None => evolve_free_s(model, psi, t0, t1),
    }
}

fn finish(report: WaveOpReport) -> Result<WaveOpReport> {
    if report.converged {
        Ok(report)
    } else {
        Err(Error::Unconverged { last_gap: report.last_gap(), tol: report.tol, report: Box::new(report) })
    }
}

/// Default number of doublings.
pub const K_MAX: u32 = 10;

/// Approximants `U_S(T_k, r0)^* U_S0(T_k, r0) psi`, `k = 1..=k_max`, until a gap is `<= tol`.
pub fn wave_operator_forward(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    tol: f64,
    k_max: u32,
    policy: &StepPolicy,
    eps0: f64,
) -> Result<WaveOpReport> {
    check_admissible(psi, eps0)?;
    let r0 = model.r0();
    let mut report = WaveOpReport {
        horizons: vec![r0],
        cauchy_gaps: Vec::new(),
        norms: vec![psi.norm()],
        result: psi.clone().with_time_tag(r0),
        converged: false,
        tol,
        membership: None,
    };
    for k in 1..=k_max {
        let t = r0 * 2f64.powi(k as i32);
        let free = evolve_free_s(model, psi, r0, t)?;
        let approx = step_s(model, spec, &free, t, r0, policy)?;
        let gap = approx.distance(&report.result);
        log::debug!("forward horizon {t}: gap {gap:e}");
        report.horizons.push(t);
        report.cauchy_gaps.push(gap);
        report.norms.push(approx.norm());
        report.result = approx;
        if gap <= tol {
            report.converged = true;
            break;
        }
    }
    finish(report)
}

/// Approximants `U_S0(T_k, r0)^* U_S(T_k, r0) phi`; the interacting evolution is extended
/// leg by leg and membership defects of `U_S(T_k, r0) phi` are recorded on the way.
#[allow(clippy::too_many_arguments)]
pub fn wave_operator_inverse(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    phi: &WaveFunction,
    tol: f64,
    k_max: u32,
    policy: &StepPolicy,
    cutoffs: &RangeCutoffs,
    membership_tol: f64,
) -> Result<WaveOpReport> {
    let r0 = model.r0();
    let mut report = WaveOpReport {
        horizons: vec![r0],
        cauchy_gaps: Vec::new(),
        norms: vec![phi.norm()],
        result: phi.clone().with_time_tag(r0),
        converged: false,
        tol,
        membership: None,
    };
    let mut range = RangeTracker::new(model, cutoffs, membership_tol);
    let mut chi = phi.clone();
    let mut t_prev = r0;
    for k in 1..=k_max {
        let t = r0 * 2f64.powi(k as i32);
        chi = step_s(model, spec, &chi, t_prev, t, policy)?;
        t_prev = t;
        range.record(&chi, t);
        let approx = evolve_free_s(model, &chi, t, r0)?;
        let gap = approx.distance(&report.result);
        log::debug!("inverse horizon {t}: gap {gap:e}");
        report.horizons.push(t);
        report.cauchy_gaps.push(gap);
        report.norms.push(approx.norm());
        report.result = approx;
        if gap <= tol {
            report.converged = true;
            break;
        }
    }
    let membership = range.finish(phi.norm());
    if !membership.member {
        log::warn!("inverse wave operator applied to a state without range-membership evidence");
    }
    report.membership = Some(membership);
    finish(report)
}

pub(crate) struct RangeTracker {
    phi1: Cutoff,
    phi2: Cutoff,
    rho_lambda: f64,
    tol: f64,
    times: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl RangeTracker {
    pub(crate) fn new(model: &OscillatorModel, cutoffs: &RangeCutoffs, tol: f64) -> Self {
        Self {
            phi1: cutoffs.phi1(),
            phi2: cutoffs.phi2(),
            rho_lambda: model.rho_lambda(),
            tol,
            times: Vec::new(),
            w1: Vec::new(),
            w2: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, chi: &WaveFunction, t: f64) {
        let phi1 = self.phi1;
        let phi2 = self.phi2;
        let w1 = apply_p2_function(chi, |p2| 1.0 - phi1.eval(p2)).norm();
        let scale = t.powf(2.0 * self.rho_lambda);
        let w2 = apply_radial_function(chi, |r| 1.0 - phi2.eval(r * r / scale)).norm();
        self.times.push(t);
        self.w1.push(w1);
        self.w2.push(w2);
    }

    pub(crate) fn finish(self, norm: f64) -> RangeReport {
        let member = membership_verdict(&self.w1, self.tol, norm) && membership_verdict(&self.w2, self.tol, norm);
        RangeReport { times: self.times, w1_defect: self.w1, w2_defect: self.w2, tol: self.tol, member }
    }
}

/// Final value `<= tol` and the last three samples nonincreasing (within `1e-10 ||psi||`).
pub fn membership_verdict(defects: &[f64], tol: f64, norm: f64) -> bool {
    let Some(&last) = defects.last() else {
        return false;
    };
    let slack = 1e-10 * norm;
    let tail = &defects[defects.len().saturating_sub(3)..];
    last <= tol && tail.windows(2).all(|w| w[1] <= w[0] + slack)
}

/// Range-membership evidence for `psi` at the given horizons (`>= r0`, increasing).
pub fn range_membership(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    cutoffs: &RangeCutoffs,
    horizons: &[f64],
    tol: f64,
    policy: &StepPolicy,
) -> Result<RangeReport> {
    cutoffs.validate()?;
    let r0 = model.r0();
    if horizons.iter().any(|&t| t < r0) || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("membership horizons must be increasing and >= r0"));
    }
    let mut tracker = RangeTracker::new(model, cutoffs, tol);
    let mut chi = psi.clone();
    let mut t_prev = r0;
    for &t in horizons {
        chi = step_s(model, spec, &chi, t_prev, t, policy)?;
        t_prev = t;
        tracker.record(&chi, t);
    }
    Ok(tracker.finish(psi.norm()))
}

/// Result of a completeness round trip.
#[derive(Clone, Debug)]
pub struct CompletenessReport {
    pub forward: WaveOpReport,
    pub inverse: WaveOpReport,
    /// Membership of `W_S psi`.
    pub membership: RangeReport,
    /// `|| W_S,In W_S psi - psi ||`.
    pub roundtrip_error: f64,
}

/// `phi = W_S psi`, membership of `phi`, and `|| W_S,In phi - psi ||`.
#[allow(clippy::too_many_arguments)]
pub fn completeness_roundtrip(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    tol: f64,
    k_max: u32,
    policy: &StepPolicy,
    cutoffs: &RangeCutoffs,
    membership_tol: f64,
) -> Result<CompletenessReport> {
    let forward = wave_operator_forward(model, spec, psi, tol, k_max, policy, cutoffs.eps0())?;
    let inverse = wave_operator_inverse(model, spec, &forward.result, tol, k_max, policy, cutoffs, membership_tol)?;
    let membership = inverse.membership.clone().unwrap_or_else(|| RangeReport {
        times: Vec::new(),
        w1_defect: Vec::new(),
        w2_defect: Vec::new(),
        tol: membership_tol,
        member: false,
    });
    let roundtrip_error = inverse.result.distance(psi);
    Ok(CompletenessReport { forward, inverse, membership, roundtrip_error })
}

/// `U(r0, 0)^* M(r0) W_S M(r0)^-1 U_0(r0, 0) psi`.
pub fn compose_full_wave_operator(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    tol: f64,
    k_max: u32,
    policy: &StepPolicy,
    eps0: f64,
) -> Result<WaveFunction> {
    let r0 = model.r0();
    let free = evolve_full(model, None, psi, 0.0, r0, policy)?;
    let chi = dressing_apply(model, &free, r0, true)?;
    let ws = wave_operator_forward(model, spec, &chi, tol, k_max, policy, eps0)?;
    let dressed = dressing_apply(model, &ws.result, r0, false)?;
    evolve_full(model, spec, &dressed, r0, 0.0, policy)
}

/// Direct approximant `U(T, 0)^* U_0(T, 0) psi` of the full-frame wave operator.
pub fn full_wave_operator_direct(
    model: &OscillatorModel,
    spec: Option<&PotentialSpec>,
    psi: &WaveFunction,
    horizon: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    let free = evolve_full(model, None, psi, 0.0, horizon, policy)?;
    evolve_full(model, spec, &free, horizon, 0.0, policy)
}
