use std::f64::consts::PI;

use anyhow::{bail, Result};
use tdho::estimates::{
    free_min_velocity_decay, large_velocity_integral, middle_velocity_integral, minimal_velocity_integral,
    IntegralSeries,
};
use tdho::magnetic::{evolve_magnetic, reduction_residual};
use tdho::oscillator::{asymptotic_coefficients, integrate_fundamental, solve_fundamental};
use tdho::propagator::factorization_residual;
use tdho::scattering::{completeness_roundtrip, cook_tail, wave_operator_forward, WaveOpReport};
use tdho::states::{make_gaussian, momentum_bump};
use tdho::{Error, InnerProfile, OscillatorModel, StepPolicy, WaveFunction};

use crate::config::{RunConfig, Setup};
use crate::report::{num, Output, ReportRow, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Fundamental,
    Factorization,
    Waveop,
    Complete,
    Estimates,
    Magnetic,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fundamental => "fundamental",
            Self::Factorization => "factorization",
            Self::Waveop => "waveop",
            Self::Complete => "complete",
            Self::Estimates => "estimates",
            Self::Magnetic => "magnetic",
        }
    }
}

/// Final states kept for `--snapshot`.
pub type Snapshots = Vec<(&'static str, WaveFunction)>;

pub fn run(cmd: Subcommand, cfg: &RunConfig, setup: &Setup) -> Result<(Output, Snapshots)> {
    match cmd {
        Subcommand::Fundamental => cmd_fundamental(cfg, setup).map(|o| (o, Vec::new())),
        Subcommand::Factorization => cmd_factorization(cfg, setup).map(|o| (o, Vec::new())),
        Subcommand::Waveop => cmd_waveop(cfg, setup),
        Subcommand::Complete => cmd_complete(cfg, setup),
        Subcommand::Estimates => cmd_estimates(cfg, setup).map(|o| (o, Vec::new())),
        Subcommand::Magnetic => cmd_magnetic(cfg, setup),
    }
}

/// Tail coefficients `(a, b)` of `a t^(1-l) + b t^l` through value `v` and slope `d` at `t = r0`.
fn tail_through(v: f64, d: f64, r0: f64, l: f64) -> (f64, f64) {
    let (p, q) = (r0.powf(1.0 - l), r0.powf(l));
    let (dp, dq) = ((1.0 - l) * p / r0, l * q / r0);
    let det = p * dq - q * dp;
    ((v * dq - q * d) / det, (p * d - dp * v) / det)
}

fn cmd_fundamental(cfg: &RunConfig, s: &Setup) -> Result<Output> {
    let model = &s.model;
    let t_max = cfg.schedule.fundamental_t_max;
    let fs = solve_fundamental(model, t_max, 1e-12)?;
    let n = 2000;
    let times: Vec<f64> = (0..=n).map(|i| -t_max + 2.0 * t_max * i as f64 / n as f64).collect();
    let ode = integrate_fundamental(model, &times, 1e-12)?;
    let mut table = Table::new("zeta", &["t", "zeta1", "dzeta1", "zeta2", "dzeta2", "wronskian"]);
    let (mut w_err, mut ode_err) = (0.0f64, 0.0f64);
    for (t, z) in times.iter().zip(&ode) {
        let v = fs.eval(*t);
        let w = fs.wronskian(*t);
        w_err = w_err.max((w - 1.0).abs());
        ode_err = ode_err.max((v[0] - z[0]).abs()).max((v[2] - z[2]).abs());
        table.push_nums(&[*t, v[0], v[1], v[2], v[3], w]);
    }
    let mut out = Output::default();
    out.rows.push(ReportRow::within("wronskian_max_error", w_err, cfg.schedule.wronskian_tol));
    out.rows.push(ReportRow::within("zeta_ode_max_error", ode_err, 1e-8));
    // matching coefficients against the ODE values at r0
    let r0 = model.r0();
    let at_r0 = integrate_fundamental(model, &[r0], 1e-13)?[0];
    let (c1, c2) = tail_through(at_r0[0], at_r0[1], r0, model.lambda());
    let (c3, c4) = tail_through(at_r0[2], at_r0[3], r0, model.lambda());
    let coeff_tol = if matches!(model.inner(), InnerProfile::ConstantK0 { .. }) { 1e-10 } else { 1e-8 };
    for (j, (c, reference)) in fs.tail_coefficients().iter().zip([c1, c2, c3, c4]).enumerate() {
        out.rows.push(ReportRow::info(format!("c{}", j + 1), *c));
        out.rows.push(ReportRow::within(format!("c{}_matching_error", j + 1), (c - reference).abs(), coeff_tol));
    }
    let long = solve_fundamental(model, 1e4 * r0, 1e-12)?;
    match asymptotic_coefficients(&long, 1e-6) {
        Ok(a) => {
            out.rows.push(ReportRow::info("c_tilde_1", a.c1));
            out.rows.push(ReportRow::info("c_tilde_2", a.c2));
            out.rows.push(ReportRow::within("c_tilde_extrapolation_error", a.error[0].max(a.error[1]), 1e-6));
        }
        Err(Error::Convergence(msg)) => {
            log::warn!("{msg}");
            out.rows.push(ReportRow::verdict("c_tilde_settled", false));
        }
        Err(e) => return Err(e.into()),
    }
    out.tables.push(table);
    Ok(out)
}

fn cmd_factorization(cfg: &RunConfig, s: &Setup) -> Result<Output> {
    let policy = s.policy.refined(cfg.schedule.refine);
    let mut table = Table::new("residuals", &["t", "residual_free", "residual_potential"]);
    let mut out = Output::default();
    for &tr in &cfg.schedule.times_r0 {
        let t = tr * s.model.r0();
        let free = factorization_residual(&s.model, None, &s.state, t, &policy)?;
        out.rows.push(ReportRow::within(format!("residual_free_t={}", num(t)), free, cfg.schedule.residual_tol));
        let with_v = match &s.potential {
            Some(v) => {
                let r = factorization_residual(&s.model, Some(v), &s.state, t, &policy)?;
                out.rows.push(ReportRow::within(
                    format!("residual_potential_t={}", num(t)),
                    r,
                    cfg.schedule.potential_residual_tol,
                ));
                num(r)
            }
            None => String::new(),
        };
        table.push(vec![num(t), num(free), with_v]);
    }
    out.tables.push(table);
    Ok(out)
}

fn gap_rows(out: &mut Output, prefix: &str, r: &WaveOpReport, reference_norm: f64) {
    out.rows.push(ReportRow::verdict(format!("{prefix}converged"), r.converged));
    out.rows.push(ReportRow::within(format!("{prefix}final_gap"), r.last_gap(), r.tol));
    let drift = r.norms.iter().map(|n| (n - reference_norm).abs()).fold(0.0, f64::max);
    out.rows.push(ReportRow::within(format!("{prefix}isometry"), drift, 1e-6));
}

fn unconverged(e: Error) -> Result<WaveOpReport> {
    match e {
        Error::Unconverged { report, .. } => Ok(*report),
        e => Err(e.into()),
    }
}

fn cmd_waveop(cfg: &RunConfig, s: &Setup) -> Result<(Output, Snapshots)> {
    let v = s.potential.as_ref();
    let sch = &cfg.schedule;
    let report = wave_operator_forward(&s.model, v, &s.state, sch.tol, sch.k_max, &s.policy, s.cutoffs.eps0())
        .or_else(unconverged)?;
    let mut table = Table::new("gaps", &["k", "horizon", "gap", "norm", "cook_tail"]);
    let mut out = Output::default();
    let (mut ratio, mut rises) = (0.0f64, 0usize);
    for (k, gap) in report.cauchy_gaps.iter().enumerate() {
        let (a, b) = (report.horizons[k], report.horizons[k + 1]);
        let tail = match v {
            Some(_) => {
                let tail = cook_tail(&s.model, v, &s.state, a, b, 32)?;
                ratio = ratio.max(gap / tail);
                num(tail)
            }
            None => String::new(),
        };
        if k >= 2 && *gap >= report.cauchy_gaps[k - 1] {
            rises += 1;
        }
        table.push(vec![(k + 1).to_string(), num(b), num(*gap), num(report.norms[k + 1]), tail]);
    }
    gap_rows(&mut out, "", &report, s.state.norm());
    out.rows.push(ReportRow::within("gap_increases_after_first_doubling", rises as f64, 0.0));
    if v.is_some() {
        out.rows.push(ReportRow::within("max_gap_over_cook_tail", ratio, 1.0));
    }
    out.tables.push(table);
    Ok((out, vec![("result", report.result)]))
}

fn cmd_complete(cfg: &RunConfig, s: &Setup) -> Result<(Output, Snapshots)> {
    let sch = &cfg.schedule;
    let v = s.potential.as_ref();
    let mut out = Output::default();
    let r = match completeness_roundtrip(
        &s.model,
        v,
        &s.state,
        sch.tol,
        sch.k_max,
        &s.policy,
        &s.cutoffs,
        sch.membership_tol,
    ) {
        Ok(r) => r,
        Err(e) => {
            let report = unconverged(e)?;
            out.rows.push(ReportRow::verdict("converged", false));
            out.rows.push(ReportRow::within("final_gap", report.last_gap(), report.tol));
            return Ok((out, Vec::new()));
        }
    };
    let mut gaps = Table::new("gaps", &["direction", "k", "horizon", "gap"]);
    for (name, rep) in [("forward", &r.forward), ("inverse", &r.inverse)] {
        for (k, gap) in rep.cauchy_gaps.iter().enumerate() {
            gaps.push(vec![name.to_string(), (k + 1).to_string(), num(rep.horizons[k + 1]), num(*gap)]);
        }
    }
    let m = &r.membership;
    let mut defects = Table::new("membership", &["t", "w1_defect", "w2_defect"]);
    for i in 0..m.times.len() {
        defects.push_nums(&[m.times[i], m.w1_defect[i], m.w2_defect[i]]);
    }
    gap_rows(&mut out, "forward_", &r.forward, s.state.norm());
    gap_rows(&mut out, "inverse_", &r.inverse, s.state.norm());
    out.rows.push(ReportRow::within("roundtrip_error", r.roundtrip_error, sch.roundtrip_tol));
    let last = |d: &[f64]| d.last().copied().unwrap_or(f64::INFINITY);
    out.rows.push(ReportRow::within("w1_defect_final", last(&m.w1_defect), sch.membership_tol));
    out.rows.push(ReportRow::within("w2_defect_final", last(&m.w2_defect), sch.membership_tol));
    out.rows.push(ReportRow::verdict("range_member", m.member));
    out.tables.push(gaps);
    out.tables.push(defects);
    Ok((out, vec![("roundtrip", r.inverse.result)]))
}

fn series_table(name: &'static str, s: &IntegralSeries) -> Table {
    let mut t = Table::new(name, &["t", "integrand", "partial_integral"]);
    for i in 0..s.times.len() {
        t.push_nums(&[s.times[i], s.integrand[i], s.partial[i]]);
    }
    t
}

fn series_rows(out: &mut Output, name: &str, s: &IntegralSeries, t_max: f64, stability_tol: Option<f64>) {
    let drops = s.partial.windows(2).filter(|w| w[1] < w[0]).count();
    out.rows.push(ReportRow::within(format!("{name}_partial_decreases"), drops as f64, 0.0));
    out.rows.push(ReportRow::info(format!("{name}_bound"), s.bound_estimate));
    let change = s.relative_change(t_max / 2.0, t_max);
    out.rows.push(match stability_tol {
        Some(tol) => ReportRow::within(format!("{name}_stability"), change, tol),
        None => ReportRow::info(format!("{name}_stability"), change),
    });
}

fn decay_times(model: &OscillatorModel, cfg: &RunConfig) -> Vec<f64> {
    let d = &cfg.decay;
    let steps = ((d.t_max_r0 / d.t_min_r0).log2() * d.samples_per_doubling as f64).round() as u32;
    (0..=steps).map(|i| model.r0() * d.t_min_r0 * 2f64.powf(i as f64 / d.samples_per_doubling as f64)).collect()
}

fn cmd_estimates(cfg: &RunConfig, s: &Setup) -> Result<Output> {
    let (model, v, psi, est, policy) = (&s.model, s.potential.as_ref(), &s.state, &s.estimates, &s.policy);
    let (large, (middle, minimal)) = rayon::join(
        || large_velocity_integral(model, v, psi, est, policy),
        || {
            rayon::join(
                || middle_velocity_integral(model, v, psi, est, policy),
                || minimal_velocity_integral(model, v, psi, est, policy),
            )
        },
    );
    let (large, middle, minimal) = (large?, middle?, minimal?);
    let t_max = *large.times.last().unwrap();
    let tol = cfg.schedule.stability_tol;
    let mut out = Output::default();
    series_rows(&mut out, "large_velocity", &large, t_max, Some(tol));
    series_rows(&mut out, "middle_velocity", &middle, t_max, Some(tol));
    // the minimal-velocity integrand sits at the engine noise floor
    series_rows(&mut out, "minimal_velocity", &minimal, t_max, None);
    out.tables.push(series_table("large_velocity", &large));
    out.tables.push(series_table("middle_velocity", &middle));
    out.tables.push(series_table("minimal_velocity", &minimal));

    let d = &cfg.decay;
    let dim = s.grid.dim();
    let mut p0 = vec![0.0; dim];
    p0[0] = d.p0;
    let bump = momentum_bump(s.grid, &p0, d.half_width, &vec![0.0; dim])?;
    let decay = free_min_velocity_decay(model, &bump, d.eps0, &decay_times(model, cfg))?;
    let mut table = Table::new("free_decay", &["t", "norm"]);
    for (t, n) in decay.times.iter().zip(&decay.values) {
        table.push_nums(&[*t, *n]);
    }
    out.tables.push(table);
    let limit = -(1.0 - 2.0 * model.lambda());
    match decay.slope() {
        Some(slope) => out.rows.push(ReportRow::within("free_decay_slope", slope, limit)),
        None => out.rows.push(ReportRow::verdict("free_decay_slope_fitted", false)),
    }
    Ok(out)
}

fn cmd_magnetic(cfg: &RunConfig, s: &Setup) -> Result<(Output, Snapshots)> {
    if s.grid.dim() != 2 {
        bail!("magnetic runs need a 2D grid, config has dim = {}", s.grid.dim());
    }
    let mm = cfg.magnetic_model()?;
    let b = &cfg.magnetic;
    let r0 = mm.r0();
    let mut out = Output::default();
    let mut omega = Table::new("omega", &["t", "field", "omega"]);
    for i in -40..=40 {
        let t = 3.0 * r0 * i as f64 / 40.0;
        omega.push_nums(&[t, mm.field(t), mm.omega(t)]);
    }
    out.tables.push(omega);
    out.rows.push(ReportRow::within("omega_at_zero", mm.omega(0.0).abs(), 0.0));

    let mut snaps = Vec::new();
    let period = 2.0 * PI * mm.mass() / (b.q * b.b0).abs();
    if period <= r0 {
        // circular orbit about the origin inside the constant-field core
        let c = &cfg.state.center;
        let qb = b.q * b.b0;
        let mut psi = make_gaussian(s.grid, c, &[qb * c[1] / 2.0, -qb * c[0] / 2.0], cfg.state.width)?;
        let policy = StepPolicy::fixed(b.cyclotron_dt, b.cyclotron_dt / 2.0);
        let chunks = 20;
        let (mut angle, mut last) = (0.0f64, psi.mean_x(1).atan2(psi.mean_x(0)));
        for i in 0..chunks {
            let (t0, t1) = (period * i as f64 / chunks as f64, period * (i + 1) as f64 / chunks as f64);
            psi = evolve_magnetic(&mm, None, &psi, t0, t1, &policy)?;
            let a = psi.mean_x(1).atan2(psi.mean_x(0));
            angle += (a - last + PI).rem_euclid(2.0 * PI) - PI;
            last = a;
        }
        let err = (angle.abs() - 2.0 * PI).abs() / (2.0 * PI);
        out.rows.push(ReportRow::within("cyclotron_period_error", err, b.period_tol));
        snaps.push(("cyclotron", psi));
    } else {
        log::warn!("cyclotron period {period} exceeds r0 = {r0}; skipping the constant-field check");
    }

    // the potential's lambda follows the tail field, not the model block's k
    let v = cfg.potential(mm.oscillator().lambda())?;
    let mut table = Table::new("residuals", &["t", "residual_free", "residual_potential"]);
    for &tr in &b.times_r0 {
        let t = tr * r0;
        let free = reduction_residual(&mm, None, &s.state, t, &s.policy)?;
        out.rows.push(ReportRow::within(format!("reduction_free_t={}", num(t)), free, b.residual_tol));
        let with_v = match &v {
            Some(v) => {
                let r = reduction_residual(&mm, Some(v), &s.state, t, &s.policy)?;
                out.rows.push(ReportRow::within(format!("reduction_potential_t={}", num(t)), r, b.residual_tol));
                num(r)
            }
            None => String::new(),
        };
        table.push(vec![num(t), num(free), with_v]);
    }
    out.tables.push(table);
    Ok((out, snaps))
}
