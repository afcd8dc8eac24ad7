//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p tdho-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use tdho::cutoff::Cutoff;
use tdho::dilation::dilate;
use tdho::estimates::{
    commutator_decay_probe, free_min_velocity_decay, large_velocity_integral, middle_velocity_integral,
    CommutatorProbe, EstimateConfig,
};
use tdho::gaussian::{evolve_gaussian_exact, GaussianParams};
use tdho::magnetic::{evolve_magnetic, reduction_residual, MagneticModel};
use tdho::oscillator::{integrate_fundamental, matching_coefficients, solve_fundamental};
use tdho::propagator::{evolve_full, factorization_residual};
use tdho::scattering::{completeness_roundtrip, cook_tail, wave_operator_forward, RangeCutoffs};
use tdho::states::{make_gaussian, momentum_bump};
use tdho::{Complex64, Grid, InnerProfile, OscillatorModel, PotentialSpec, StepPolicy, WaveFunction};

type Outcome = Result<(bool, String), tdho::Error>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn appendix_model() -> OscillatorModel {
    OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.0).unwrap()
}

/// Tail of the `k0 = 0`, `r0 = 1` model: `zeta = a t^(1-l) + b t^l` with `(a, b)` from the
/// 2x2 matching system at `t = 1` (value and derivative of `1` and `t`).
fn tail_oracle(lambda: f64) -> [f64; 4] {
    // [1, 1; 1-l, l] (a, b) = (v, d)
    let solve = |v: f64, d: f64| {
        let det = lambda - (1.0 - lambda);
        ((v * lambda - d) / det, (d - (1.0 - lambda) * v) / det)
    };
    let (c1, c2) = solve(1.0, 0.0);
    let (c3, c4) = solve(1.0, 1.0);
    [c1, c2, c3, c4]
}

fn closed_form(lambda: f64, t: f64) -> (f64, f64) {
    if t <= 1.0 {
        return (1.0, t);
    }
    let c = tail_oracle(lambda);
    let (hi, lo) = (t.powf(1.0 - lambda), t.powf(lambda));
    (c[0] * hi + c[1] * lo, c[2] * hi + c[3] * lo)
}

fn fundamental_oracle() -> Outcome {
    let model = appendix_model();
    let times: Vec<f64> = (0..=2000).map(|i| 0.5 * i as f64).collect();
    let ode = integrate_fundamental(&model, &times, 1e-12)?;
    let mut worst = 0.0f64;
    for (t, z) in times.iter().zip(&ode) {
        let (z1, z2) = closed_form(0.25, *t);
        worst = worst.max((z[0] - z1).abs()).max((z[2] - z2).abs());
    }
    let c = matching_coefficients(&model)?;
    let oracle = tail_oracle(0.25);
    let coeff_err = c.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let named = (c[2] - 1.5).abs().max((c[3] + 0.5).abs());
    Ok((
        worst <= 1e-8 && coeff_err <= 1e-10 && named <= 1e-10,
        format!("max |zeta_ode - closed| {worst:.2e}, c3 {:.12}, c4 {:.12}", c[2], c[3]),
    ))
}

fn wronskian_models() -> Vec<(&'static str, OscillatorModel)> {
    vec![
        ("constant k0=0", appendix_model()),
        ("constant k0=0.5", OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.5).unwrap()),
        ("constant m=2 k=0.3 r0=2", OscillatorModel::constant_core(2.0, 0.3, 2.0, 1.0).unwrap()),
        (
            "tabulated bump",
            OscillatorModel::new(1.0, 0.2, 1.0, InnerProfile::tabulated(|t| 0.2 + 0.5 * (PI * t).cos().powi(2)))
                .unwrap(),
        ),
        (
            "piecewise linear",
            OscillatorModel::new(
                1.0,
                3.0 / 16.0,
                1.5,
                InnerProfile::piecewise_linear(vec![-1.5, 0.0, 1.5], vec![0.0833, 1.0, 0.0833]).unwrap(),
            )
            .unwrap(),
        ),
        ("magnetic", MagneticModel::new(1.0, 1.0, 2.0 * PI, 0.5, 2.0).unwrap().oscillator().clone()),
    ]
}

fn wronskian() -> Outcome {
    let mut worst = 0.0f64;
    let mut who = "";
    for (name, model) in wronskian_models() {
        let fs = solve_fundamental(&model, 1000.0, 1e-12)?;
        for i in -4000..=4000 {
            let t = 0.25 * i as f64;
            let e = (fs.wronskian(t) - 1.0).abs();
            if e > worst {
                worst = e;
                who = name;
            }
        }
    }
    Ok((worst <= 1e-8, format!("max |W - 1| {worst:.2e} ({who})")))
}

fn dilation_identities() -> Outcome {
    let grid = Grid::new(1, 1024, 40.0)?;
    let psi = make_gaussian(grid, &[1.5], &[0.8], 1.3)?;
    let x2 = |f: &WaveFunction| f.var_x(0) + f.mean_x(0).powi(2);
    let p2 = |f: &WaveFunction| f.var_p(0) + f.mean_p(0).powi(2);
    let mut worst = 0.0f64;
    for beta in [0.1, -0.1, 0.5, -0.5] {
        let d = dilate(&psi, -beta)?;
        let ex = (x2(&d) / x2(&psi) - (-4.0 * beta).exp()).abs() / (-4.0 * beta).exp();
        let ep = (p2(&d) / p2(&psi) - (4.0 * beta).exp()).abs() / (4.0 * beta).exp();
        worst = worst.max(ex).max(ep);
    }
    Ok((worst <= 1e-6, format!("max relative deviation {worst:.2e}")))
}

fn factorization() -> Outcome {
    let model = appendix_model();
    let grid = Grid::new(1, 2048, 60.0)?;
    let psi = make_gaussian(grid, &[1.0], &[0.5], 1.0)?;
    let bump = PotentialSpec::gaussian_bump(1.0, 1.0, 2.0, model.lambda())?;
    let policy = StepPolicy::fixed(0.02, 0.01).refined(3);
    let mut ok = true;
    let mut worst = [0.0f64; 2];
    for t in [2.0, 4.0, 8.0] {
        let free = factorization_residual(&model, None, &psi, t, &policy)?;
        let with_v = factorization_residual(&model, Some(&bump), &psi, t, &policy)?;
        worst[0] = worst[0].max(free);
        worst[1] = worst[1].max(with_v);
        ok &= free <= 1e-6 && with_v <= 1e-5;
    }
    // halving study at t = 8r0: ratios near 4 until the residual reaches the floor
    let coarse = StepPolicy::fixed(0.08, 0.04);
    let res: Vec<f64> = (0..5)
        .map(|l| factorization_residual(&model, Some(&bump), &psi, 8.0, &coarse.refined(l)))
        .collect::<Result<_, _>>()?;
    let ratios: Vec<f64> = res.windows(2).map(|w| w[0] / w[1]).collect();
    let floor = 1e-9;
    let mut studied = 0;
    for (r, w) in ratios.iter().zip(res.windows(2)) {
        if w[1] > floor {
            studied += 1;
            ok &= (3.0..=5.0).contains(r);
        }
    }
    ok &= studied >= 2;
    let ratios: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Ok((ok, format!("V=0 {:.2e}, bump {:.2e}, halving ratios [{}]", worst[0], worst[1], ratios.join(", "))))
}

fn gaussian_oracle() -> Outcome {
    let model = appendix_model();
    let grid = Grid::new(1, 2048, 60.0)?;
    let (x0, p0, sigma) = (1.0, 0.5, 1.0);
    let psi = make_gaussian(grid, &[x0], &[p0], sigma)?;
    let t = 8.0;
    let stepped = evolve_full(&model, None, &psi, 0.0, t, &StepPolicy::fixed(0.02, 0.01).refined(3))?;
    let fs = solve_fundamental(&model, 16.0, 1e-12)?;
    let exact = evolve_gaussian_exact(&fs, 1.0, &GaussianParams::from_state(&[x0], &[p0], sigma, 0.0)?, t)?;
    let dist = stepped.distance(&exact.to_wavefunction(grid)?);
    // variance law from the independent ODE route
    let z = integrate_fundamental(&model, &[t], 1e-12)?[0];
    let (vx0, vp0) = (psi.var_x(0), psi.var_p(0));
    let law = z[0] * z[0] * vx0 + z[2] * z[2] * vp0;
    let rel = (stepped.var_x(0) - law).abs() / law;
    Ok((dist <= 1e-6 && rel <= 1e-6, format!("L2 distance {dist:.2e}, variance law relative error {rel:.2e}")))
}

fn scattering_setup() -> Result<(OscillatorModel, PotentialSpec, WaveFunction, StepPolicy), tdho::Error> {
    let model = appendix_model();
    let v = PotentialSpec::static_bump(1.0, 3.0, model.lambda())?;
    let psi = make_gaussian(Grid::new(1, 2048, 256.0)?, &[3.0], &[1.5], 4.0)?;
    Ok((model, v, psi, StepPolicy::fixed(0.02, 0.01)))
}

fn wave_operator_existence() -> Outcome {
    let (model, v, psi, policy) = scattering_setup()?;
    let eps0 = RangeCutoffs::default().eps0();
    let report = wave_operator_forward(&model, Some(&v), &psi, 1e-4, 8, &policy, eps0)?;
    let gaps = &report.cauchy_gaps;
    let monotone = gaps[1..].windows(2).all(|w| w[1] < w[0]);
    let mut bounded = true;
    let mut tightest = f64::INFINITY;
    for (k, gap) in gaps.iter().enumerate() {
        let (a, b) = (report.horizons[k], report.horizons[k + 1]);
        let tail = cook_tail(&model, Some(&v), &psi, a, b, 32)?;
        bounded &= *gap <= tail;
        tightest = tightest.min(tail / gap);
    }
    let at_256 = *report.horizons.last().unwrap() == 256.0;
    let last = report.last_gap();
    Ok((
        monotone && bounded && at_256 && last <= 1e-4,
        format!(
            "{} gaps, last {last:.2e} at T={}, monotone {monotone}, Cook-bounded {bounded} (min tail/gap {tightest:.3})",
            gaps.len(),
            report.horizons.last().unwrap()
        ),
    ))
}

fn free_decay() -> Outcome {
    let model = appendix_model();
    let grid = Grid::new(1, 2048, 256.0)?;
    let times: Vec<f64> = (4..=18).map(|i| 2f64.powf(i as f64 / 2.0)).collect();
    let bump = momentum_bump(grid, &[1.0], 0.5, &[0.0])?;
    let slope = free_min_velocity_decay(&model, &bump, 0.2, &times)?.slope().unwrap_or(f64::NEG_INFINITY);
    let control = momentum_bump(grid, &[0.0], 0.5, &[0.0])?;
    let ctrl = free_min_velocity_decay(&model, &control, 1.0, &times)?.slope().unwrap_or(f64::NAN);
    let limit = -(1.0 - 2.0 * model.lambda());
    Ok((slope <= limit && ctrl.abs() <= 0.05, format!("slope {slope:.4} (limit {limit}), control slope {ctrl:.4}")))
}

fn propagation_estimates() -> Outcome {
    let model = appendix_model();
    let v = PotentialSpec::static_bump(1.0, 3.0, model.lambda())?;
    let psi = make_gaussian(Grid::new(1, 16384, 1024.0)?, &[3.0], &[1.5], 4.0)?;
    let cfg = EstimateConfig::default();
    let policy = StepPolicy::fixed(0.02, 0.01);
    let large = large_velocity_integral(&model, Some(&v), &psi, &cfg, &policy)?;
    let middle = middle_velocity_integral(&model, Some(&v), &psi, &cfg, &policy)?;
    let dl = large.relative_change(512.0, 1024.0);
    let dm = middle.relative_change(512.0, 1024.0);
    Ok((
        dl <= 0.05 && dm <= 0.05,
        format!(
            "large-velocity {:.3e} (change {dl:.1e}), middle-velocity {:.3e} (change {dm:.1e})",
            large.bound_estimate, middle.bound_estimate
        ),
    ))
}

fn completeness() -> Outcome {
    let (model, v, psi, policy) = scattering_setup()?;
    let r = completeness_roundtrip(&model, Some(&v), &psi, 1e-4, 8, &policy, &RangeCutoffs::default(), 1e-3)?;
    let m = &r.membership;
    let (w1, w2) = (*m.w1_defect.last().unwrap(), *m.w2_defect.last().unwrap());
    let horizon = *r.forward.horizons.last().unwrap();
    Ok((
        r.roundtrip_error <= 1e-3 && m.member && w1 <= 1e-3 && w2 <= 1e-3 && horizon <= 256.0,
        format!(
            "round trip {:.2e} at T={horizon}, defects {w1:.1e} / {w2:.1e}, member {}",
            r.roundtrip_error, m.member
        ),
    ))
}

fn magnetic_reduction() -> Outcome {
    let mm = MagneticModel::new(1.0, 1.0, 2.0 * PI, 0.5, 2.0)?;
    let grid = Grid::new(2, 512, 20.0)?;
    // constant field for |t| <= r0: one cyclotron period 2 pi m/(q B0) = 1
    let qb = 2.0 * PI;
    let mut psi = make_gaussian(grid, &[3.0, 0.0], &[0.0, -qb * 3.0 / 2.0], 0.5)?;
    let policy = StepPolicy::fixed(0.002, 0.001);
    let (mut angle, mut last) = (0.0f64, 0.0f64);
    for i in 1..=20 {
        psi = evolve_magnetic(&mm, None, &psi, 0.05 * (i - 1) as f64, 0.05 * i as f64, &policy)?;
        let a = psi.mean_x(1).atan2(psi.mean_x(0));
        angle += (a - last + PI).rem_euclid(2.0 * PI) - PI;
        last = a;
    }
    let period_err = (angle.abs() - 2.0 * PI).abs() / (2.0 * PI);
    let start = make_gaussian(grid, &[1.0, 0.5], &[0.5, 0.0], 0.7)?;
    let policy = StepPolicy::fixed(0.01, 0.005);
    let free = reduction_residual(&mm, None, &start, mm.r0(), &policy)?;
    let radial = PotentialSpec::gaussian_bump(1.0, 1.0, 2.0, mm.oscillator().lambda())?;
    let with_v = reduction_residual(&mm, Some(&radial), &start, 2.0 * mm.r0(), &policy)?;
    Ok((
        period_err <= 1e-3 && free <= 1e-6 && with_v <= 1e-6,
        format!("period error {period_err:.2e}, residual V=0 {free:.2e}, radial V {with_v:.2e}"),
    ))
}

fn commutator_decay() -> Outcome {
    let model = appendix_model();
    let grid = Grid::new(1, 32768, 4096.0)?;
    // momentum inside the transition of phi1 so the commutator does not vanish identically
    let p0 = (1.5f64 * 0.05).sqrt();
    let psi = WaveFunction::from_fn(grid, |x| Complex64::from_polar(1.0 / (1.0 + x[0] * x[0]), p0 * x[0])).normalized();
    let h = Cutoff::Window { lo: 1.0, hi: 2.0, eps: 0.5 };
    let phi1 = RangeCutoffs::default().phi1();
    let mut ok = true;
    let mut parts = Vec::new();
    for rho in [0.5, 0.75] {
        let times: Vec<f64> = (12..=20).map(|i| 2f64.powf(i as f64 / (2.0 * rho))).collect();
        let r = commutator_decay_probe(&model, CommutatorProbe::Cutoff, &h, rho, &phi1, &psi, &times)?;
        let slope = r.slope().unwrap_or(f64::INFINITY);
        ok &= slope <= -rho + 0.1;
        parts.push(format!("rho {rho}: exponent {slope:.3}"));
    }
    Ok((ok, parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "fundamental-solution oracle", budget: secs(1), run: fundamental_oracle },
        Criterion { name: "Wronskian", budget: secs(1), run: wronskian },
        Criterion { name: "dilation identities", budget: secs(5), run: dilation_identities },
        Criterion { name: "factorization", budget: secs(120), run: factorization },
        Criterion { name: "Gaussian oracle", budget: secs(60), run: gaussian_oracle },
        Criterion { name: "wave-operator existence", budget: secs(300), run: wave_operator_existence },
        Criterion { name: "free decay", budget: secs(120), run: free_decay },
        Criterion { name: "propagation estimates", budget: secs(300), run: propagation_estimates },
        Criterion { name: "completeness round trip", budget: secs(300), run: completeness },
        Criterion { name: "magnetic reduction", budget: secs(180), run: magnetic_reduction },
        Criterion { name: "commutator decay", budget: secs(120), run: commutator_decay },
    ];
    let mut failures = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= c.budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {}: {detail} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
