//! Short-range potentials `V(t, x) = b(t) v(x)` with power-law decay bounds
//! `|V| <= C0 <x>^-rho`, `|grad V| <= C1 <x>^-(rho+1)`, `rho > 1/(1 - lambda)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type PotentialFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Shape {
    /// `g (1 + |x|^2)^(-rho/2)`.
    StaticBump,
    /// `g exp(-|x|^2 / (2 w^2))`.
    GaussianBump { width: f64 },
    /// Arbitrary `V(t, x)`; the bound constants must be supplied and are spot-checked.
    Custom(PotentialFn),
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StaticBump => f.write_str("StaticBump"),
            Self::GaussianBump { width } => f.debug_struct("GaussianBump").field("width", width).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Bounded time modulation `b(t)` with `|b|, |b'| <= 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeFactor {
    Constant,
    /// `cos(omega t)`, `|omega| <= 1`.
    Cosine {
        omega: f64,
    },
}

impl TimeFactor {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Cosine { omega } => (omega * t).cos(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PotentialSpec {
    shape: Shape,
    g: f64,
    rho: f64,
    c_s0: f64,
    c_s1: f64,
    lambda: f64,
    time_factor: TimeFactor,
}

fn sup_on_rays(f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
    let n = 20_000;
    (0..=n).map(|i| f(r_max * i as f64 / n as f64)).fold(0.0, f64::max)
}

impl PotentialSpec {
    /// `g (1 + |x|^2)^(-rho/2)`; `C0 = |g|`, `C1 = |g| rho`.
    pub fn static_bump(g: f64, rho: f64, lambda: f64) -> Result<Self> {
        let spec = Self {
            shape: Shape::StaticBump,
            g,
            rho,
            c_s0: g.abs(),
            c_s1: g.abs() * rho,
            lambda,
            time_factor: TimeFactor::Constant,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `g exp(-|x|^2/(2 w^2))` declared with decay exponent `rho`; the constants are the
    /// sampled suprema of `|V| <x>^rho` and `|grad V| <x>^(rho+1)` with 1% headroom.
    pub fn gaussian_bump(g: f64, width: f64, rho: f64, lambda: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Validation(format!("bump width must be positive, got {width}")));
        }
        let r_max = 40.0 * width.max(1.0) * (1.0 + rho);
        let c_s0 = 1.01
            * g.abs()
            * sup_on_rays(|r| (-r * r / (2.0 * width * width)).exp() * (1.0 + r * r).powf(rho / 2.0), r_max);
        let c_s1 = 1.01
            * g.abs()
            * sup_on_rays(
                |r| {
                    r / (width * width) * (-r * r / (2.0 * width * width)).exp() * (1.0 + r * r).powf((rho + 1.0) / 2.0)
                },
                r_max,
            );
        let spec = Self {
            shape: Shape::GaussianBump { width },
            g,
            rho,
            c_s0,
            c_s1,
            lambda,
            time_factor: TimeFactor::Constant,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn custom(
        v: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        rho: f64,
        c_s0: f64,
        c_s1: f64,
        lambda: f64,
    ) -> Result<Self> {
        let spec = Self {
            shape: Shape::Custom(Arc::new(v)),
            g: 1.0,
            rho,
            c_s0,
            c_s1,
            lambda,
            time_factor: TimeFactor::Constant,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_time_factor(mut self, b: TimeFactor) -> Result<Self> {
        if let TimeFactor::Cosine { omega } = b {
            if !(omega.abs() <= 1.0) {
                return Err(Error::Validation(format!("time factor frequency must satisfy |omega| <= 1, got {omega}")));
            }
        }
        self.time_factor = b;
        Ok(self)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.c_s0, self.c_s1)
    }

    pub fn time_factor(&self) -> TimeFactor {
        self.time_factor
    }

    /// True when `V(t, .)` is rotation invariant.
    pub fn is_radial(&self) -> bool {
        !matches!(self.shape, Shape::Custom(_))
    }

    /// True when `V` does not depend on `t`.
    pub fn is_static(&self) -> bool {
        self.time_factor == TimeFactor::Constant && !matches!(self.shape, Shape::Custom(_))
    }

    fn radial(&self, r2: f64) -> f64 {
        match self.shape {
            Shape::StaticBump => self.g * (1.0 + r2).powf(-self.rho / 2.0),
            Shape::GaussianBump { width } => self.g * (-r2 / (2.0 * width * width)).exp(),
            Shape::Custom(_) => unreachable!("custom potentials are not radial"),
        }
    }

    /// `V(t, x)`.
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Custom(f) => f(t, x) * self.time_factor.eval(t),
            _ => self.radial(x.iter().map(|v| v * v).sum()) * self.time_factor.eval(t),
        }
    }

    /// `V(t, scale x)` on every lattice point.
    pub(crate) fn fill(&self, t: f64, grid: &Grid, scale: f64, out: &mut Vec<f64>) {
        out.clear();
        let b = self.time_factor.eval(t);
        match &self.shape {
            Shape::Custom(f) => {
                let mut y = [0.0; 2];
                out.extend(grid.map_positions(|x| {
                    for (yi, xi) in y.iter_mut().zip(x) {
                        *yi = scale * xi;
                    }
                    f(t, &y[..x.len()]) * b
                }));
            }
            _ => {
                // radial: separable |x|^2 table, one shape evaluation per point
                let sq: Vec<f64> = grid.positions().iter().map(|x| scale * scale * x * x).collect();
                if grid.dim() == 1 {
                    out.extend(sq.iter().map(|&r2| self.radial(r2) * b));
                } else {
                    for &a in &sq {
                        out.extend(sq.iter().map(|&c| self.radial(a + c) * b));
                    }
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::Validation(format!("lambda must lie in (0, 1/2), got {}", self.lambda)));
        }
        let threshold = 1.0 / (1.0 - self.lambda);
        if !(self.rho > threshold) {
            return Err(Error::Validation(format!(
                "decay exponent rho = {} must exceed 1/(1 - lambda) = {threshold}",
                self.rho
            )));
        }
        if !(self.g.is_finite() && self.c_s0 >= 0.0 && self.c_s1 >= 0.0) {
            return Err(Error::Validation("coupling and bound constants must be finite and nonnegative".into()));
        }
        self.spot_check()
    }

    /// Check the decay bounds on a sample lattice of radii and directions, the gradient by
    /// central differences.
    fn spot_check(&self) -> Result<()> {
        let h = 1e-5;
        for i in 0..=400 {
            let r = 0.05 * i as f64 * (1.0 + i as f64 / 40.0);
            for dir in 0..8 {
                let a = std::f64::consts::PI * dir as f64 / 4.0;
                for t in [0.0, 1.0, 10.0] {
                    let (c, s) = (a.cos(), a.sin());
                    let x = [r * c, r * s];
                    let jx = 1.0 + r * r;
                    let v = self.value(t, &x);
                    let gx = (self.value(t, &[x[0] + h, x[1]]) - self.value(t, &[x[0] - h, x[1]])) / (2.0 * h);
                    let gy = (self.value(t, &[x[0], x[1] + h]) - self.value(t, &[x[0], x[1] - h])) / (2.0 * h);
                    let grad = gx.hypot(gy);
                    let slack = 1.0 + 1e-6;
                    if v.abs() > slack * self.c_s0 * jx.powf(-self.rho / 2.0) + 1e-14 {
                        return Err(Error::Validation(format!("|V| bound violated at r = {r}")));
                    }
                    if grad > slack * self.c_s1 * jx.powf(-(self.rho + 1.0) / 2.0) + 1e-8 {
                        return Err(Error::Validation(format!("|grad V| bound violated at r = {r}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `V(t, x)` (or `V(t, t^lambda x)` when `scaled`) on the lattice.
pub fn potential_eval(spec: &PotentialSpec, t: f64, grid: &Grid, scaled: bool) -> Vec<f64> {
    let scale = if scaled { t.abs().powf(spec.lambda) } else { 1.0 };
    let mut out = Vec::new();
    spec.fill(t, grid, scale, &mut out);
    out
}
