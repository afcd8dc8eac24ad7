//! Classical layer: the coefficient profile `k(t)`, the decay exponent
//! `lambda`, the fundamental solutions `zeta_1`, `zeta_2` of
//! `zeta'' + (k(t)/m) zeta = 0` and the classical flow they generate.
//!
//! Outside `[-r0, r0]` the profile is `k / t^2`, where `|t|^lambda` and
//! `|t|^(1 - lambda)` solve the equation exactly, so tails are always evaluated
//! in closed form from the C1-matching coefficients at `+-r0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::ode::Dopri5;

/// Smaller root of `lambda (lambda - 1) + k/m = 0`.
pub fn lambda_exponent(m: f64, k: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(domain(format!("mass must be positive, got {m}")));
    }
    if !(k > 0.0 && k < m / 4.0) {
        return Err(domain(format!("tail coefficient must satisfy 0 < k < m/4 = {}, got {k}", m / 4.0)));
    }
    let ratio = k / m;
    // same root as (1 - sqrt(1 - 4k/m)) / 2 without the cancellation for small k/m
    Ok(2.0 * ratio / (1.0 + (1.0 - 4.0 * ratio).sqrt()))
}

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coefficient profile on `[-r0, r0]`.
#[derive(Clone)]
pub enum InnerProfile {
    /// Constant `k0 = m omega0^2 >= 0`; the fundamental solutions are `cos`/`sin` inside.
    ConstantK0 { k0: f64 },
    /// Any bounded profile `k_C(t)`; solved by adaptive integration.
    Tabulated(ProfileFn),
}

impl InnerProfile {
    pub fn tabulated(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Tabulated(Arc::new(f))
    }

    /// Piecewise-linear interpolation of samples; constant extrapolation past the ends.
    pub fn piecewise_linear(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Validation("tabulated profile needs equal, non-empty times/values".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("tabulated profile times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("tabulated profile values must be finite".into()));
        }
        Ok(Self::tabulated(move |t| {
            let n = times.len();
            if t <= times[0] {
                return values[0];
            }
            if t >= times[n - 1] {
                return values[n - 1];
            }
            let i = times.partition_point(|&s| s <= t) - 1;
            let w = (t - times[i]) / (times[i + 1] - times[i]);
            values[i] * (1.0 - w) + values[i + 1] * w
        }))
    }
}

impl fmt::Debug for InnerProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConstantK0 { k0 } => f.debug_struct("ConstantK0").field("k0", k0).finish(),
            Self::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

/// Masses, coefficient profile and the derived exponent. Units have `hbar = 1`.
#[derive(Clone, Debug)]
pub struct OscillatorModel {
    m: f64,
    k: f64,
    r0: f64,
    inner: InnerProfile,
    lambda: f64,
}

impl OscillatorModel {
    pub fn new(m: f64, k: f64, r0: f64, inner: InnerProfile) -> Result<Self> {
        let lambda = lambda_exponent(m, k)?;
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(domain(format!("matching time r0 must be positive, got {r0}")));
        }
        if let InnerProfile::ConstantK0 { k0 } = inner {
            if !(k0 >= 0.0 && k0.is_finite()) {
                return Err(domain(format!("k0 must be finite and >= 0, got {k0}")));
            }
        }
        let residual = (m * lambda * (1.0 - lambda) - k).abs() / k;
        if residual > 1e-12 {
            return Err(domain(format!("lambda quadratic residual {residual:e} too large")));
        }
        Ok(Self { m, k, r0, inner, lambda })
    }

    /// Constant coefficient `k0` inside `[-r0, r0]`, `k t^-2` outside.
    pub fn constant_core(m: f64, k: f64, r0: f64, k0: f64) -> Result<Self> {
        Self::new(m, k, r0, InnerProfile::ConstantK0 { k0 })
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn tail_coefficient(&self) -> f64 {
        self.k
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inner(&self) -> &InnerProfile {
        &self.inner
    }

    /// `rho_lambda = lambda (1 - 2 lambda)`, the growth exponent of the `phi_2` window.
    pub fn rho_lambda(&self) -> f64 {
        self.lambda * (1.0 - 2.0 * self.lambda)
    }

    /// `omega0 = sqrt(k0 / m)` for a constant core.
    pub fn omega0(&self) -> Option<f64> {
        match self.inner {
            InnerProfile::ConstantK0 { k0 } => Some((k0 / self.m).sqrt()),
            InnerProfile::Tabulated(_) => None,
        }
    }

    /// `k(t)`; exactly `k t^-2` for `|t| > r0`.
    pub fn coefficient(&self, t: f64) -> f64 {
        if t.abs() > self.r0 {
            self.k / (t * t)
        } else {
            self.inner_coefficient(t)
        }
    }

    fn inner_coefficient(&self, t: f64) -> f64 {
        match &self.inner {
            InnerProfile::ConstantK0 { k0 } => *k0,
            InnerProfile::Tabulated(f) => f(t),
        }
    }
}

/// `(zeta_1, zeta_1', zeta_2, zeta_2')` at one time.
pub type ZetaValues = [f64; 4];

#[derive(Clone, Debug)]
enum InnerSolution {
    Harmonic { omega0: f64 },
    Numeric(Arc<NumericInner>),
}

#[derive(Debug)]
struct NumericInner {
    model: OscillatorModel,
    tol: f64,
    // accepted nodes on [0, r0] and [0, -r0], ordered by |t|
    pos: Vec<(f64, ZetaValues)>,
    neg: Vec<(f64, ZetaValues)>,
}

impl NumericInner {
    fn eval(&self, t: f64) -> ZetaValues {
        let nodes = if t >= 0.0 { &self.pos } else { &self.neg };
        let i = nodes.partition_point(|(s, _)| s.abs() <= t.abs()).max(1) - 1;
        let (s, y) = nodes[i];
        if s == t {
            return y;
        }
        let model = &self.model;
        let rhs = |tt: f64, y: &ZetaValues| inner_rhs(model, tt, y);
        // Nodes were produced at this tolerance, so the short hop to t cannot fail
        // unless the profile is not bounded; fall back to the node value in that case.
        Dopri5::new(rhs, self.tol).integrate(s, y, t, |_, _| {}).unwrap_or(y)
    }
}

fn inner_rhs(model: &OscillatorModel, t: f64, y: &ZetaValues) -> ZetaValues {
    let w = model.inner_coefficient(t) / model.m;
    [y[1], -w * y[0], y[3], -w * y[2]]
}

fn tail_rhs(model: &OscillatorModel, t: f64, y: &ZetaValues) -> ZetaValues {
    let w = model.k / (t * t * model.m);
    [y[1], -w * y[0], y[3], -w * y[2]]
}

/// Fundamental solutions with C1 tails. Tail coefficients are stored as
/// `zeta = a |t|^(1-lambda) + b |t|^lambda` per side.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    m: f64,
    lambda: f64,
    r0: f64,
    t_max: f64,
    tail_pos: [f64; 4],
    tail_neg: [f64; 4],
    inner: InnerSolution,
}

fn tail_eval(coeffs: &[f64; 4], lambda: f64, t: f64) -> ZetaValues {
    let u = t.abs();
    let s = t.signum();
    let hi = u.powf(1.0 - lambda);
    let lo = u.powf(lambda);
    let dhi = (1.0 - lambda) * hi / u;
    let dlo = lambda * lo / u;
    [
        coeffs[0] * hi + coeffs[1] * lo,
        s * (coeffs[0] * dhi + coeffs[1] * dlo),
        coeffs[2] * hi + coeffs[3] * lo,
        s * (coeffs[2] * dhi + coeffs[3] * dlo),
    ]
}

/// Solve the 2x2 C1 matching system at `t = +-r0` for `(a, b)` in the `|t|` power basis.
fn match_tail(value: f64, deriv_t: f64, side: f64, r0: f64, lambda: f64) -> (f64, f64) {
    // d/d|t| = side * d/dt
    let d = side * deriv_t;
    let hi = r0.powf(1.0 - lambda);
    let lo = r0.powf(lambda);
    let dhi = (1.0 - lambda) * hi / r0;
    let dlo = lambda * lo / r0;
    let det = hi * dlo - lo * dhi;
    ((value * dlo - lo * d) / det, (hi * d - dhi * value) / det)
}

impl FundamentalSolution {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Tail coefficients `(c1, c2, c3, c4)` for `t > r0`.
    pub fn tail_coefficients(&self) -> [f64; 4] {
        self.tail_pos
    }

    /// Tail coefficients for `t < -r0` in the `|t|` basis.
    pub fn negative_tail_coefficients(&self) -> [f64; 4] {
        self.tail_neg
    }

    /// `(zeta_1, zeta_1', zeta_2, zeta_2')` at `t`.
    pub fn eval(&self, t: f64) -> ZetaValues {
        if t > self.r0 {
            return tail_eval(&self.tail_pos, self.lambda, t);
        }
        if t < -self.r0 {
            return tail_eval(&self.tail_neg, self.lambda, t);
        }
        match &self.inner {
            InnerSolution::Harmonic { omega0 } => harmonic_eval(*omega0, t),
            InnerSolution::Numeric(n) => n.eval(t),
        }
    }

    pub fn zeta1(&self, t: f64) -> (f64, f64) {
        let v = self.eval(t);
        (v[0], v[1])
    }

    pub fn zeta2(&self, t: f64) -> (f64, f64) {
        let v = self.eval(t);
        (v[2], v[3])
    }

    pub fn wronskian(&self, t: f64) -> f64 {
        let v = self.eval(t);
        v[0] * v[3] - v[1] * v[2]
    }

    /// Phase-space flow matrix `[[zeta1, zeta2/m], [m zeta1', zeta2']]` mapping `(x, p)` at 0 to `t`.
    pub fn flow_matrix(&self, t: f64) -> [[f64; 2]; 2] {
        let v = self.eval(t);
        [[v[0], v[2] / self.m], [self.m * v[1], v[3]]]
    }

    /// Flow from `t0` to `t1`, `Phi(t1) Phi(t0)^-1` (the flow matrix has unit determinant).
    pub fn transfer_matrix(&self, t0: f64, t1: f64) -> [[f64; 2]; 2] {
        let a = self.flow_matrix(t1);
        let b = self.flow_matrix(t0);
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let inv = [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]];
        [
            [a[0][0] * inv[0][0] + a[0][1] * inv[1][0], a[0][0] * inv[0][1] + a[0][1] * inv[1][1]],
            [a[1][0] * inv[0][0] + a[1][1] * inv[1][0], a[1][0] * inv[0][1] + a[1][1] * inv[1][1]],
        ]
    }
}

fn harmonic_eval(omega0: f64, t: f64) -> ZetaValues {
    if omega0 == 0.0 {
        return [1.0, 0.0, t, 1.0];
    }
    let (s, c) = (omega0 * t).sin_cos();
    [c, -omega0 * s, s / omega0, c]
}

/// Fundamental solutions on `[-t_max, t_max]`.
///
/// Constant cores use the closed forms; tabulated cores are integrated with
/// the adaptive Dormand–Prince pair at absolute and relative tolerance `tol`.
pub fn solve_fundamental(model: &OscillatorModel, t_max: f64, tol: f64) -> Result<FundamentalSolution> {
    if !(t_max > model.r0) {
        return Err(domain(format!("t_max = {t_max} must exceed r0 = {}", model.r0)));
    }
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let lambda = model.lambda;
    let r0 = model.r0;
    let (inner, at_pos, at_neg) = match &model.inner {
        InnerProfile::ConstantK0 { .. } => {
            let omega0 = model.omega0().unwrap_or(0.0);
            (InnerSolution::Harmonic { omega0 }, harmonic_eval(omega0, r0), harmonic_eval(omega0, -r0))
        }
        InnerProfile::Tabulated(_) => {
            let numeric = integrate_inner(model, tol)?;
            let p = numeric.pos.last().map(|n| n.1).unwrap_or([1.0, 0.0, 0.0, 1.0]);
            let n = numeric.neg.last().map(|n| n.1).unwrap_or([1.0, 0.0, 0.0, 1.0]);
            (InnerSolution::Numeric(Arc::new(numeric)), p, n)
        }
    };
    let tail = |v: ZetaValues, side: f64| {
        let (c1, c2) = match_tail(v[0], v[1], side, r0, lambda);
        let (c3, c4) = match_tail(v[2], v[3], side, r0, lambda);
        [c1, c2, c3, c4]
    };
    let mut tail_pos = tail(at_pos, 1.0);
    let mut tail_neg = tail(at_neg, -1.0);
    if let InnerProfile::ConstantK0 { .. } = model.inner {
        // exact closed forms, and the parity of zeta_1 (even) / zeta_2 (odd)
        tail_pos = matching_coefficients(model)?;
        tail_neg = [tail_pos[0], tail_pos[1], -tail_pos[2], -tail_pos[3]];
    }
    Ok(FundamentalSolution { m: model.m, lambda, r0, t_max, tail_pos, tail_neg, inner })
}

fn integrate_inner(model: &OscillatorModel, tol: f64) -> Result<NumericInner> {
    let rhs = |t: f64, y: &ZetaValues| inner_rhs(model, t, y);
    let solver = Dopri5::new(rhs, tol);
    let y0 = [1.0, 0.0, 0.0, 1.0];
    let mut pos = vec![(0.0, y0)];
    solver.integrate(0.0, y0, model.r0, |t, y| pos.push((t, *y)))?;
    let mut neg = vec![(0.0, y0)];
    solver.integrate(0.0, y0, -model.r0, |t, y| neg.push((t, *y)))?;
    Ok(NumericInner { model: model.clone(), tol, pos, neg })
}

/// Integrate the fundamental-solution ODE directly from `t = 0` to each of `times`
/// (through the coefficient jump at `+-r0`, tails included). This route never uses
/// the closed forms and serves as the independent check on [`solve_fundamental`].
pub fn integrate_fundamental(model: &OscillatorModel, times: &[f64], tol: f64) -> Result<Vec<ZetaValues>> {
    let mut out = vec![[0.0; 4]; times.len()];
    for side in [1.0f64, -1.0] {
        let mut idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] * side >= 0.0).collect();
        if side < 0.0 {
            idx.retain(|&i| times[i] != 0.0);
        }
        idx.sort_by(|&a, &b| times[a].abs().total_cmp(&times[b].abs()));
        let inner = Dopri5::new(|t: f64, y: &ZetaValues| inner_rhs(model, t, y), tol);
        let outer = Dopri5::new(|t: f64, y: &ZetaValues| tail_rhs(model, t, y), tol);
        let edge = side * model.r0;
        let mut t = 0.0f64;
        let mut y = [1.0, 0.0, 0.0, 1.0];
        for i in idx {
            let target = times[i];
            if target.abs() > model.r0 && t.abs() < model.r0 {
                y = inner.integrate(t, y, edge, |_, _| {})?;
                t = edge;
            }
            y = if target.abs() <= model.r0 {
                inner.integrate(t, y, target, |_, _| {})?
            } else {
                outer.integrate(t, y, target, |_, _| {})?
            };
            t = target;
            out[i] = y;
        }
    }
    Ok(out)
}

/// Closed-form C1-matching coefficients `(c1, c2, c3, c4)` of a constant core.
pub fn matching_coefficients(model: &OscillatorModel) -> Result<[f64; 4]> {
    let InnerProfile::ConstantK0 { k0 } = model.inner else {
        return Err(Error::Validation("closed-form matching needs a constant core".into()));
    };
    let lambda = model.lambda;
    let r0 = model.r0;
    let omega0 = (k0 / model.m).sqrt();
    let (sin, cos) = (omega0 * r0).sin_cos();
    // omega0 sin(omega0 r0) and sin(omega0 r0)/omega0, continuous at omega0 = 0
    let w_sin = omega0 * sin;
    let sinc = if omega0 == 0.0 { r0 } else { sin / omega0 };
    let gap = 1.0 - 2.0 * lambda;
    let hi = r0.powf(1.0 - lambda);
    let lo = r0.powf(lambda);
    Ok([
        (-lambda * cos - r0 * w_sin) / (hi * gap),
        ((1.0 - lambda) * cos + r0 * w_sin) / (lo * gap),
        (r0 * cos - lambda * sinc) / (hi * gap),
        (-r0 * cos + (1.0 - lambda) * sinc) / (lo * gap),
    ])
}

/// A classical phase-space point.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl ClassicalState {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if x.len() != p.len() {
            return Err(domain("position and momentum dimensions differ"));
        }
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(domain("classical state entries must be finite"));
        }
        Ok(Self { x, p })
    }
}

/// `(zeta1 x + zeta2 p/m, m zeta1' x + zeta2' p)`.
pub fn classical_flow(fs: &FundamentalSolution, m: f64, s: &ClassicalState, t: f64) -> Result<ClassicalState> {
    if t.abs() > fs.t_max {
        return Err(domain(format!("t = {t} outside solution range +-{}", fs.t_max)));
    }
    let [z1, dz1, z2, dz2] = fs.eval(t);
    let x = s.x.iter().zip(&s.p).map(|(x, p)| z1 * x + z2 * p / m).collect();
    let p = s.x.iter().zip(&s.p).map(|(x, p)| m * dz1 * x + dz2 * p).collect();
    Ok(ClassicalState { x, p })
}

/// Limits `c~_j = lim zeta_j(t) / t^(1-lambda)`.
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticCoefficients {
    pub c1: f64,
    pub c2: f64,
    /// Raw ratios `zeta_j(t_max) / t_max^(1-lambda)`.
    pub raw: [f64; 2],
    /// Difference between the extrapolations from `(t_max/4, t_max/2)` and `(t_max/2, t_max)`.
    pub error: [f64; 2],
}

/// Richardson-extrapolated limits of `zeta_j(t) / t^(1-lambda)`.
///
/// The correction decays like `t^-(1-2 lambda)`, so two ratios at `T/2` and `T`
/// eliminate it; a second pair one doubling earlier supplies the error estimate.
pub fn asymptotic_coefficients(fs: &FundamentalSolution, tol: f64) -> Result<AsymptoticCoefficients> {
    let t_max = fs.t_max;
    if t_max < 1e3 * fs.r0 {
        return Err(domain(format!("asymptotic fit needs t_max >= 1e3 r0, have {t_max}")));
    }
    let lambda = fs.lambda;
    let ratio = |t: f64| {
        let v = fs.eval(t);
        let s = t.powf(1.0 - lambda);
        [v[0] / s, v[2] / s]
    };
    let q = 2f64.powf(1.0 - 2.0 * lambda);
    let extrapolate = |t: f64| {
        let (a, b) = (ratio(t / 2.0), ratio(t));
        [(q * b[0] - a[0]) / (q - 1.0), (q * b[1] - a[1]) / (q - 1.0)]
    };
    let fine = extrapolate(t_max);
    let coarse = extrapolate(t_max / 2.0);
    let error = [(fine[0] - coarse[0]).abs(), (fine[1] - coarse[1]).abs()];
    if error[0] > tol || error[1] > tol {
        return Err(Error::Convergence(format!(
            "asymptotic coefficients unsettled: errors {:e}, {:e} > {tol:e}",
            error[0], error[1]
        )));
    }
    Ok(AsymptoticCoefficients { c1: fine[0], c2: fine[1], raw: ratio(t_max), error })
}
