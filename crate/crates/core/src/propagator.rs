//! Split-step propagators for `H(t) = p^2/(2m) + k(t) x^2/2 + V(t, x)` and for the
//! rescaled `H_S(t) = p^2/(2m |t|^(2 lambda)) + V(t, |t|^lambda x)`, the exact free
//! `U_S0`, the dressing `M(t)` that links the two frames, and the factorization residual.
//!
//! Steps are placed on a global clock `sigma(t)` which is linear (`t / dt_max`) for
//! `|t| <= t_c = dt_max / rel_step` and logarithmic (`log(t)/rel_step`) beyond, so that the
//! step size is `min(dt_max, rel_step |t|)`. Level `l` uses the integer points of
//! `2^l sigma`; meshes are therefore nested under halving and independent of where a
//! leg starts, and a backward leg uses the forward mesh reversed.

use num_complex::Complex64;

use crate::dilation::dilate;
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, WaveFunction};
use crate::oscillator::{solve_fundamental, OscillatorModel};
use crate::potential::PotentialSpec;

/// Step control for the split-step engines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPolicy {
    /// Largest step.
    pub dt_max: f64,
    /// Relative step `dt / |t|` used once `rel_step |t| > dt_max`.
    pub rel_step: f64,
    /// Absolute error target per leg for Richardson refinement; `None` runs the mesh as is.
    pub error_target: Option<f64>,
    /// Halvings allowed before giving up on `error_target`.
    pub max_halvings: u32,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { dt_max: 0.01, rel_step: 0.005, error_target: None, max_halvings: 6 }
    }
}

impl StepPolicy {
    pub fn fixed(dt_max: f64, rel_step: f64) -> Self {
        Self { dt_max, rel_step, error_target: None, max_halvings: 0 }
    }

    pub fn adaptive(dt_max: f64, rel_step: f64, error_target: f64, max_halvings: u32) -> Self {
        Self { dt_max, rel_step, error_target: Some(error_target), max_halvings }
    }

    /// The same clock refined `levels` times.
    pub fn refined(&self, levels: u32) -> Self {
        let f = 2f64.powi(levels as i32);
        Self { dt_max: self.dt_max / f, rel_step: self.rel_step / f, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(domain(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.rel_step > 0.0 && self.rel_step < 1.0) {
            return Err(domain(format!("rel_step must lie in (0, 1), got {}", self.rel_step)));
        }
        if let Some(e) = self.error_target {
            if !(e > 0.0) {
                return Err(domain(format!("error target must be positive, got {e}")));
            }
        }
        Ok(())
    }

    fn t_c(&self) -> f64 {
        self.dt_max / self.rel_step
    }

    fn clock(&self, t: f64) -> f64 {
        let tc = self.t_c();
        let u = t.abs();
        let s = if u <= tc { u / self.dt_max } else { tc / self.dt_max + (u / tc).ln() / self.rel_step };
        s.copysign(t)
    }

    fn clock_inv(&self, s: f64) -> f64 {
        let tc = self.t_c();
        let edge = tc / self.dt_max;
        let u = s.abs();
        let t = if u <= edge { u * self.dt_max } else { tc * ((u - edge) * self.rel_step).exp() };
        t.copysign(s)
    }

    /// Step points from `a` to `b` at refinement `level`, including `breaks` inside `(a, b)`.
    pub fn mesh(&self, a: f64, b: f64, level: u32, breaks: &[f64]) -> Vec<f64> {
        if a > b {
            let mut m = self.mesh(b, a, level, breaks);
            m.reverse();
            return m;
        }
        let scale = 2f64.powi(level as i32);
        let (sa, sb) = (self.clock(a) * scale, self.clock(b) * scale);
        let mut pts = vec![a];
        let first = sa.floor() as i64 + 1;
        let last = sb.ceil() as i64 - 1;
        for k in first..=last {
            pts.push(self.clock_inv(k as f64 / scale));
        }
        pts.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.retain(|&t| t >= a && t <= b);
        pts
    }
}

#[derive(Clone, Copy)]
enum Frame {
    Full,
    Scaled,
}

/// Antiderivative of `|t|^(-2 lambda)`.
fn kinetic_clock(t: f64, lambda: f64) -> f64 {
    let gap = 1.0 - 2.0 * lambda;
    t.abs().powf(gap).copysign(t) / gap
}

struct Stepper<'a> {
    frame: Frame,
    model: &'a OscillatorModel,
    v: Option<&'a PotentialSpec>,
    grid: Grid,
    x2: Vec<f64>,
    v_buf: Vec<f64>,
    v_static: Option<Vec<f64>>,
    factors: Vec<Complex64>,
    /// Rotation angle `e^{i angle L}` per step `[a, b]` (2D magnetic evolution).
    rotation: Option<&'a dyn Fn(f64, f64) -> f64>,
}

impl<'a> Stepper<'a> {
    fn new(frame: Frame, model: &'a OscillatorModel, v: Option<&'a PotentialSpec>, grid: Grid) -> Self {
        let x2 = grid.map_positions(|x| x.iter().map(|a| a * a).sum());
        let v_static = match (frame, v) {
            (Frame::Full, Some(spec)) if spec.is_static() => {
                let mut buf = Vec::new();
                spec.fill(0.0, &grid, 1.0, &mut buf);
                Some(buf)
            }
            _ => None,
        };
        Self { frame, model, v, grid, x2, v_buf: Vec::new(), v_static, factors: Vec::new(), rotation: None }
    }

    /// `exp(-i h X(t))` with `X` the multiplication part of the frame at time `t`.
    fn potential_phase(&mut self, psi: &mut WaveFunction, t: f64, h: f64) {
        let spring = match self.frame {
            Frame::Full => self.model.coefficient(t) / 2.0,
            Frame::Scaled => 0.0,
        };
        let Some(spec) = self.v else {
            if spring != 0.0 {
                psi.quadratic_phase(h * spring);
            }
            return;
        };
        let values: &[f64] = match (&self.v_static, self.frame) {
            (Some(v), _) => v,
            (None, Frame::Full) => {
                spec.fill(t, &self.grid, 1.0, &mut self.v_buf);
                &self.v_buf
            }
            (None, Frame::Scaled) => {
                spec.fill(t, &self.grid, t.abs().powf(self.model.lambda()), &mut self.v_buf);
                &self.v_buf
            }
        };
        self.factors.clear();
        self.factors
            .extend(values.iter().zip(&self.x2).map(|(v, x2)| Complex64::from_polar(1.0, -h * (spring * x2 + v))));
        psi.mul_array(&self.factors);
    }

    fn kinetic(&self, psi: &mut WaveFunction, a: f64, b: f64) {
        let m = self.model.mass();
        let alpha = match self.frame {
            Frame::Full => (b - a) / (2.0 * m),
            Frame::Scaled => {
                let l = self.model.lambda();
                (kinetic_clock(b, l) - kinetic_clock(a, l)) / (2.0 * m)
            }
        };
        psi.kinetic_phase(alpha);
    }

    fn run(&mut self, psi: &WaveFunction, mesh: &[f64]) -> WaveFunction {
        let mut out = psi.clone();
        for w in mesh.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let h = b - a;
            self.potential_phase(&mut out, mid, h / 2.0);
            self.kinetic(&mut out, a, b);
            if let Some(angle) = self.rotation {
                crate::magnetic::rotate_in_place(&mut out, angle(a, b));
            }
            self.potential_phase(&mut out, mid, h / 2.0);
        }
        out.set_time_tag(*mesh.last().unwrap_or(&psi.time_tag()));
        out
    }
}

fn evolve_frame(
    frame: Frame,
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    evolve_frame_rotating(frame, model, v, psi, t0, t1, policy, None)
}

#[allow(clippy::too_many_arguments)]
fn evolve_frame_rotating(
    frame: Frame,
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
    rotation: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<WaveFunction> {
    policy.validate()?;
    if t0 == t1 {
        return Ok(psi.clone().with_time_tag(t1));
    }
    let r0 = model.r0();
    let breaks = [-r0, 0.0, r0];
    let mut stepper = Stepper::new(frame, model, v, *psi.grid());
    stepper.rotation = rotation;
    let Some(target) = policy.error_target else {
        return Ok(stepper.run(psi, &policy.mesh(t0, t1, 0, &breaks)));
    };
    let mut coarse = stepper.run(psi, &policy.mesh(t0, t1, 0, &breaks));
    let mut last = f64::INFINITY;
    for level in 1..=policy.max_halvings {
        let fine = stepper.run(psi, &policy.mesh(t0, t1, level, &breaks));
        last = fine.distance(&coarse) / 3.0;
        log::trace!("level {level}: Richardson error {last:e}");
        if last <= target {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Convergence(format!(
        "splitting error {last:e} above target {target:e} after {} halvings on [{t0}, {t1}]",
        policy.max_halvings
    )))
}

fn weighted_radius(weights: &[f64], r: impl Fn(usize) -> f64, tol: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut order: Vec<(f64, f64)> = weights.iter().enumerate().map(|(i, w)| (r(i), *w)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut acc = 0.0;
    for (r, w) in order {
        acc += w;
        if acc > tol * total {
            return r;
        }
    }
    0.0
}

fn radii_by(psi: &WaveFunction, tol: f64, norm: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> (f64, f64) {
    let g = *psi.grid();
    let (xs, ps) = (g.positions(), g.momenta());
    let at = |vals: &[f64], i: usize| {
        let idx = g.split(i);
        norm(&mut (0..g.dim()).map(|a| vals[idx[a]]))
    };
    let rx = weighted_radius(&psi.position_density(), |i| at(&xs, i), tol);
    let rp = weighted_radius(&psi.momentum_density(), |i| at(&ps, i), tol);
    (rx, rp)
}

/// Position and momentum radii (max-norm about the origin) outside which at most
/// `tol` of the weight lives.
pub fn support_radii(psi: &WaveFunction, tol: f64) -> (f64, f64) {
    radii_by(psi, tol, |it| it.fold(0.0, |m, v| m.max(v.abs())))
}

/// As [`support_radii`] with Euclidean norms.
pub fn euclidean_radii(psi: &WaveFunction, tol: f64) -> (f64, f64) {
    radii_by(psi, tol, |it| it.map(|v| v * v).sum::<f64>().sqrt())
}

/// Relative weight used to size the phase-space envelope.
pub const ENVELOPE_TOL: f64 = 1e-10;

/// Phase-space box of a state, plus a sheared box `|x| <= rx`, `|p - 2 kappa x| <= rp_chirp`
/// fitted to its mean chirp. Spread states are strongly correlated in `(x, p)`, and the
/// sheared box is then far tighter than the plain one.
struct Envelope {
    rx: f64,
    rp: f64,
    kappa: f64,
    rp_chirp: f64,
}

impl Envelope {
    fn of(psi: &WaveFunction) -> Self {
        let (rx, rp) = support_radii(psi, ENVELOPE_TOL);
        let kappa = chirp_rate(psi);
        let mut flat = psi.clone();
        flat.quadratic_phase(kappa);
        let (_, rp_chirp) = support_radii(&flat, ENVELOPE_TOL);
        Self { rx, rp, kappa, rp_chirp }
    }

    /// Bounds on `|x|` and `|p|` after the linear flow `m`.
    fn image(&self, m: [[f64; 2]; 2]) -> (f64, f64) {
        let boxed = |r: [f64; 2]| r[0].abs() * self.rx + r[1].abs() * self.rp;
        let sheared = |r: [f64; 2]| (r[0] + 2.0 * self.kappa * r[1]).abs() * self.rx + r[1].abs() * self.rp_chirp;
        (boxed(m[0]).min(sheared(m[0])), boxed(m[1]).min(sheared(m[1])))
    }
}

/// Least-squares chirp `kappa` with `p ~ 2 kappa x`: `Cov(x, p) / (2 Var x)` summed over axes.
fn chirp_rate(psi: &WaveFunction) -> f64 {
    let n2 = psi.norm_sqr();
    if n2 == 0.0 {
        return 0.0;
    }
    let (mut cov, mut var) = (0.0, 0.0);
    for a in 0..psi.grid().dim() {
        let xpsi = crate::grid::apply_position_multiplier(psi, |x| x[a].into());
        let ppsi = crate::observables::apply_momentum(psi, a);
        cov += xpsi.inner(&ppsi).re / n2 - psi.mean_x(a) * psi.mean_p(a);
        var += psi.var_x(a);
    }
    if var > 0.0 {
        cov / (2.0 * var)
    } else {
        0.0
    }
}

fn check_envelope(grid: &Grid, env: &Envelope, transfers: impl Iterator<Item = (f64, [[f64; 2]; 2])>) -> Result<()> {
    for (t, m) in transfers {
        let (x, p) = env.image(m);
        if x > grid.half_width() {
            return Err(domain(format!(
                "classical envelope reaches |x| = {x:.3} > L = {} at t = {t}",
                grid.half_width()
            )));
        }
        if p > grid.p_max() {
            return Err(domain(format!(
                "classical envelope reaches |p| = {p:.3} > p_max = {} at t = {t}",
                grid.p_max()
            )));
        }
    }
    Ok(())
}

/// `U(t1, t0) psi` for `H(t)` with optional potential.
pub fn evolve_full(
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(domain("times must be finite"));
    }
    let reach = t0.abs().max(t1.abs()).max(model.r0()) * 1.01 + 1.0;
    let fs = solve_fundamental(model, reach, 1e-10)?;
    let env = Envelope::of(psi);
    let mesh = policy.mesh(t0, t1, 0, &[-model.r0(), model.r0()]);
    check_envelope(psi.grid(), &env, mesh.iter().map(|&t| (t, fs.transfer_matrix(t0, t))))?;
    evolve_frame(Frame::Full, model, v, psi, t0, t1, policy)
}

/// `evolve_full` in 2D with an extra rotation `e^{i angle(a, b) L}` after each kinetic step.
/// The envelope is checked on discs, which rotations preserve.
pub(crate) fn evolve_full_rotating(
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
    rotation: &dyn Fn(f64, f64) -> f64,
) -> Result<WaveFunction> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(domain("times must be finite"));
    }
    let reach = t0.abs().max(t1.abs()).max(model.r0()) * 1.01 + 1.0;
    let fs = solve_fundamental(model, reach, 1e-10)?;
    let (rx, rp) = euclidean_radii(psi, ENVELOPE_TOL);
    let env = Envelope { rx, rp, kappa: 0.0, rp_chirp: rp };
    let mesh = policy.mesh(t0, t1, 0, &[-model.r0(), model.r0()]);
    check_envelope(psi.grid(), &env, mesh.iter().map(|&t| (t, fs.transfer_matrix(t0, t))))?;
    evolve_frame_rotating(Frame::Full, model, v, psi, t0, t1, policy, Some(rotation))
}

fn check_scaled_times(model: &OscillatorModel, t0: f64, t1: f64) -> Result<()> {
    let r0 = model.r0();
    let ok = (t0 >= r0 && t1 >= r0) || (t0 <= -r0 && t1 <= -r0);
    if ok && t0.is_finite() && t1.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("rescaled frame needs both times on one side beyond r0 = {r0}, got [{t0}, {t1}]")))
    }
}

/// `U_S(t1, t0) psi`; both times must be `>= r0` (or both `<= -r0`).
pub fn evolve_s(
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t0: f64,
    t1: f64,
    policy: &StepPolicy,
) -> Result<WaveFunction> {
    check_scaled_times(model, t0, t1)?;
    let env = Envelope::of(psi);
    let m = model.mass();
    let l = model.lambda();
    let mesh = policy.mesh(t0, t1, 0, &[]);
    let flow = mesh.iter().map(|&t| (t, [[1.0, (kinetic_clock(t, l) - kinetic_clock(t0, l)) / m], [0.0, 1.0]]));
    check_envelope(psi.grid(), &env, flow)?;
    evolve_frame(Frame::Scaled, model, v, psi, t0, t1, policy)
}

/// Exact `U_S0(t1, t0) = exp(-i (F(t1) - F(t0)) p^2 / (2m))`, `F(t) = t^(1-2 lambda)/(1-2 lambda)`.
pub fn evolve_free_s(model: &OscillatorModel, psi: &WaveFunction, t0: f64, t1: f64) -> Result<WaveFunction> {
    check_scaled_times(model, t0, t1)?;
    let l = model.lambda();
    let mut out = psi.clone();
    if t0 != t1 {
        out.kinetic_phase((kinetic_clock(t1, l) - kinetic_clock(t0, l)) / (2.0 * model.mass()));
    }
    Ok(out.with_time_tag(t1))
}

/// Free evolution `exp(-i (t1 - t0) p^2/(2m))` (no oscillator term).
pub fn evolve_free(m: f64, psi: &WaveFunction, t0: f64, t1: f64) -> WaveFunction {
    let mut out = psi.clone();
    out.kinetic_phase((t1 - t0) / (2.0 * m));
    out.with_time_tag(t1)
}

/// Dressing `M(t) = exp(i m lambda x^2/(2t)) exp(-i lambda log|t| A / 2)` or its inverse.
pub fn dressing_apply(model: &OscillatorModel, psi: &WaveFunction, t: f64, inverse: bool) -> Result<WaveFunction> {
    if !(t.abs() >= model.r0()) {
        return Err(domain(format!("dressing needs |t| >= r0 = {}, got {t}", model.r0())));
    }
    let beta = model.lambda() * t.abs().ln() / 2.0;
    // exp(i c x^2) is quadratic_phase(-c)
    let c = model.mass() * model.lambda() / (2.0 * t);
    if inverse {
        let mut phased = psi.clone();
        phased.quadratic_phase(c);
        dilate(&phased, -beta)
    } else {
        let mut out = dilate(psi, beta)?;
        out.quadratic_phase(-c);
        Ok(out)
    }
}

/// `|| U(t, r0) psi - M(t) U_S(t, r0) M(r0)^-1 psi ||`.
pub fn factorization_residual(
    model: &OscillatorModel,
    v: Option<&PotentialSpec>,
    psi: &WaveFunction,
    t: f64,
    policy: &StepPolicy,
) -> Result<f64> {
    let r0 = model.r0();
    if !(t >= r0) {
        return Err(domain(format!("factorization residual needs t >= r0 = {r0}, got {t}")));
    }
    let direct = evolve_full(model, v, psi, r0, t, policy)?;
    let undressed = dressing_apply(model, psi, r0, true)?;
    let s = evolve_s(model, v, &undressed, r0, t, policy)?;
    let dressed = dressing_apply(model, &s, t, false)?;
    Ok(direct.distance(&dressed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::make_gaussian;

    fn model() -> OscillatorModel {
        OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn mesh_is_nested_and_reversible() {
        let p = StepPolicy::fixed(0.1, 0.05);
        let coarse = p.mesh(0.33, 7.0, 0, &[1.0]);
        let fine = p.mesh(0.33, 7.0, 1, &[1.0]);
        assert!(coarse.iter().all(|t| fine.iter().any(|s| (s - t).abs() < 1e-12)));
        assert!(coarse.contains(&1.0));
        let mut back = p.mesh(7.0, 0.33, 0, &[1.0]);
        back.reverse();
        assert_eq!(back, coarse);
        let max_step = coarse.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_step <= 0.05 * 7.0 + 1e-12);
    }

    #[test]
    fn clock_inverse() {
        let p = StepPolicy::fixed(0.01, 0.002);
        for t in [-100.0, -3.0, 0.0, 1.0, 4.9, 5.1, 1e4] {
            assert!((p.clock_inv(p.clock(t)) - t).abs() < 1e-9 * t.abs().max(1.0));
        }
    }

    #[test]
    fn free_scaled_composes() {
        let grid = Grid::new(1, 256, 30.0).unwrap();
        let psi = make_gaussian(grid, &[1.0], &[0.5], 1.0).unwrap();
        let m = model();
        let a = evolve_free_s(&m, &evolve_free_s(&m, &psi, 1.0, 3.0).unwrap(), 3.0, 7.0).unwrap();
        let b = evolve_free_s(&m, &psi, 1.0, 7.0).unwrap();
        assert!(a.distance(&b) < 1e-13);
        assert!(evolve_free_s(&m, &psi, 0.5, 2.0).is_err());
    }

    #[test]
    fn scaled_engine_without_potential_is_exact() {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let psi = make_gaussian(grid, &[1.0], &[0.5], 1.0).unwrap();
        let m = model();
        let a = evolve_s(&m, None, &psi, 1.0, 9.0, &StepPolicy::fixed(0.5, 0.1)).unwrap();
        let b = evolve_free_s(&m, &psi, 1.0, 9.0).unwrap();
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn dressing_roundtrip() {
        let grid = Grid::new(1, 512, 40.0).unwrap();
        let psi = make_gaussian(grid, &[2.0], &[0.3], 1.5).unwrap();
        let m = model();
        let out = dressing_apply(&m, &psi, 8.0, false).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-10);
        let back = dressing_apply(&m, &out, 8.0, true).unwrap();
        assert!(back.distance(&psi) < 1e-9);
    }

    #[test]
    fn envelope_rejects_escaping_state() {
        let grid = Grid::new(1, 256, 20.0).unwrap();
        let psi = make_gaussian(grid, &[0.0], &[2.0], 1.0).unwrap();
        let r = evolve_full(&model(), None, &psi, 0.0, 30.0, &StepPolicy::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn richardson_reports_failure() {
        let grid = Grid::new(1, 256, 30.0).unwrap();
        let psi = make_gaussian(grid, &[0.0], &[0.0], 1.0).unwrap();
        let m = OscillatorModel::constant_core(1.0, 3.0 / 16.0, 1.0, 4.0).unwrap();
        let policy = StepPolicy::adaptive(0.5, 0.2, 1e-14, 1);
        assert!(matches!(evolve_full(&m, None, &psi, 0.0, 2.0, &policy), Err(Error::Convergence(_))));
    }
}
