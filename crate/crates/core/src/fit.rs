//! Least-squares power-law fits `y ~ C t^s` in log-log coordinates.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for two points).
    pub slope_stderr: f64,
    /// Number of samples above the floor that entered the fit.
    pub used: usize,
}

/// Fit `log y = intercept + slope log t` on samples with `y > floor`.
///
/// Fails when fewer than three samples survive the floor or the surviving times span
/// less than a factor of 2.
pub fn fit_power_law(times: &[f64], values: &[f64], floor: f64) -> Result<PowerFit> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t > 0.0 && **y > floor && y.is_finite())
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("only {} samples above the floor {floor:e}", pts.len())));
    }
    let span = pts.last().unwrap().0 - pts[0].0;
    if span.abs() < std::f64::consts::LN_2 {
        return Err(Error::Fit("samples span less than one doubling".into()));
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if pts.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(PowerFit { slope, intercept, slope_stderr, used: pts.len() })
}
