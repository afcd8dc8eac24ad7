//! Embedded Dormand–Prince 5(4) integrator for small fixed-size systems.

use std::marker::PhantomData;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const MAX_STEPS: usize = 2_000_000;

/// Adaptive integrator with mixed absolute/relative error control, both set to `tol`.
pub(crate) struct Dopri5<F, const D: usize> {
    rhs: F,
    tol: f64,
    dim: PhantomData<[f64; D]>,
}

impl<F, const D: usize> Dopri5<F, D>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    pub(crate) fn new(rhs: F, tol: f64) -> Self {
        Self { rhs, tol, dim: PhantomData }
    }

    /// Integrate from `t0` to `t1` (either direction). `on_step` sees every accepted node.
    pub(crate) fn integrate(
        &self,
        t0: f64,
        y0: [f64; D],
        t1: f64,
        mut on_step: impl FnMut(f64, &[f64; D]),
    ) -> Result<[f64; D]> {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = dir * (span.abs() * 1e-3).min(self.tol.powf(0.2) * 0.1).max(1e-6 * span.abs());
        let mut k = [[0.0; D]; 7];
        k[0] = (self.rhs)(t, &y);
        let mut steps = 0usize;
        while (t1 - t) * dir > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..D {
                            ys[i] += h * a * kj[i];
                        }
                    }
                }
                k[s] = (self.rhs)(t + C[s] * h, &ys);
            }
            let mut y_new = y;
            for (s, ks) in k.iter().enumerate().take(6) {
                let b = A[6][s];
                for i in 0..D {
                    y_new[i] += h * b * ks[i];
                }
            }
            let mut err = 0.0;
            for i in 0..D {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                let scale = self.tol + self.tol * y[i].abs().max(y_new[i].abs());
                err += (h * e / scale).powi(2);
            }
            let err = (err / D as f64).sqrt();
            if err <= 1.0 {
                t = if (t1 - (t + h)) * dir <= 0.0 { t1 } else { t + h };
                y = y_new;
                // FSAL: last stage is the derivative at the new point
                k[0] = k[6];
                on_step(t, &y);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration(format!("step size underflow at t = {t} (tol = {:e})", self.tol)));
            }
        }
        Ok(y)
    }
}
