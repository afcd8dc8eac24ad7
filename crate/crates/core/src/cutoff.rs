//! Smooth cutoffs: one-sided steps `F_eps(s <= theta)`, `F_eps(s >= theta)`, windows, and
//! the momentum/position cutoffs `phi_1`, `phi_2`.
//!
//! Every transition is the normalized primitive of `b(u) = exp(-1/(u(1-u)))` on `(0, 1)`,
//! rescaled onto the transition band. The profile is C-infinity, monotone and exactly
//! 0 or 1 off the band.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const CELLS: usize = 4096;

// 8-point Gauss–Legendre nodes and weights on [-1, 1]
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

fn gauss(a: f64, b: f64) -> f64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    GL_X.iter().zip(&GL_W).map(|(x, w)| w * bump(mid + half * x)).sum::<f64>() * half
}

fn cumulative() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / CELLS as f64;
        let mut acc = vec![0.0; CELLS + 1];
        for i in 0..CELLS {
            acc[i + 1] = acc[i] + gauss(i as f64 * h, (i + 1) as f64 * h);
        }
        acc
    })
}

/// Normalized primitive of the mollifier: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let table = cumulative();
    let pos = u * CELLS as f64;
    let i = (pos as usize).min(CELLS - 1);
    let lo = i as f64 / CELLS as f64;
    let partial = table[i] + gauss(lo, u);
    (partial / table[CELLS]).clamp(0.0, 1.0)
}

/// `F_eps(s <= theta)`: 1 for `s <= theta - eps`, 0 for `s >= theta`.
pub fn f_le(s: f64, theta: f64, eps: f64) -> f64 {
    1.0 - smooth_step((s - theta + eps) / eps)
}

/// `F_eps(s >= theta)`: 0 for `s <= theta`, 1 for `s >= theta + eps`.
pub fn f_ge(s: f64, theta: f64, eps: f64) -> f64 {
    smooth_step((s - theta) / eps)
}

/// `F_eps(lo <= s <= hi) = F_eps(s >= lo) F_eps(s <= hi)`.
pub fn f_window(s: f64, lo: f64, hi: f64, eps: f64) -> f64 {
    f_ge(s, lo, eps) * f_le(s, hi, eps)
}

/// Kinds of cutoff evaluated by [`cutoff_eval`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cutoff {
    Le {
        theta: f64,
        eps: f64,
    },
    Ge {
        theta: f64,
        eps: f64,
    },
    Window {
        lo: f64,
        hi: f64,
        eps: f64,
    },
    /// Momentum-shell cutoff of `tau = p^2`: 1 on `(2 kappa1, R1/2)`, 0 outside `(kappa1, R1)`.
    Phi1 {
        kappa1: f64,
        r1: f64,
    },
    /// 0 on `[0, kappa2]`, 1 on `(2 kappa2, inf)`, nondecreasing.
    Phi2 {
        kappa2: f64,
    },
}

impl Cutoff {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Le { theta, eps } | Self::Ge { theta, eps } => eps > 0.0 && theta.is_finite(),
            Self::Window { lo, hi, eps } => eps > 0.0 && lo.is_finite() && hi.is_finite() && lo + eps <= hi - eps,
            Self::Phi1 { kappa1, r1 } => kappa1 > 0.0 && 2.0 * kappa1 < r1 / 2.0,
            Self::Phi2 { kappa2 } => kappa2 > 0.0 && kappa2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid cutoff {self:?}")))
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        cutoff_eval(self, s)
    }
}

pub fn cutoff_eval(spec: &Cutoff, s: f64) -> f64 {
    match *spec {
        Cutoff::Le { theta, eps } => f_le(s, theta, eps),
        Cutoff::Ge { theta, eps } => f_ge(s, theta, eps),
        Cutoff::Window { lo, hi, eps } => f_window(s, lo, hi, eps),
        Cutoff::Phi1 { kappa1, r1 } => {
            smooth_step((s - kappa1) / kappa1) * (1.0 - smooth_step((s - r1 / 2.0) / (r1 / 2.0)))
        }
        Cutoff::Phi2 { kappa2 } => smooth_step((s - kappa2) / kappa2),
    }
}
