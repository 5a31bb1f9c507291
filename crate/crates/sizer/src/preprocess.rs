//! Deseasonalization and linear detrending for raw monthly-style series.

use crate::error::{Result, SizerError};
use crate::series::TimeSeries;

/// Subtract the per-phase mean (phase = index mod period). The output has
/// zero mean within every phase.
pub fn deseasonalize(series: &TimeSeries, period: usize) -> Result<TimeSeries> {
    let n = series.len();
    if period < 2 {
        return Err(SizerError::InvalidParameter(format!(
            "seasonal period must be at least 2, got {period}"
        )));
    }
    if n < 2 * period {
        return Err(SizerError::SeriesTooShort { n, min: 2 * period });
    }
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for (i, v) in series.values().iter().enumerate() {
        sums[i % period] += v;
        counts[i % period] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| s / *c as f64)
        .collect();
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v - means[i % period])
        .collect();
    TimeSeries::new(values)
}

fn ols_line(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let t_mean = (n + 1.0) / 2.0;
    let y_mean = values.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, y) in values.iter().enumerate() {
        let dt = (i + 1) as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    (y_mean - slope * t_mean, slope)
}

/// Subtract the global ordinary least-squares line. The output has zero mean
/// and zero OLS slope.
pub fn linear_detrend(series: &TimeSeries) -> Result<TimeSeries> {
    let (intercept, slope) = ols_line(series.values());
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, y)| y - (intercept + slope * (i + 1) as f64))
        .collect();
    TimeSeries::new(values)
}

/// Remove phase means and the linear trend in one joint least-squares fit
/// (one indicator per phase plus a centered time column). Unlike the
/// sequential composition, the joint fit is a projection, so applying it
/// again changes nothing, and the output has zero phase means and zero OLS
/// slope at the same time.
pub fn deseasonalize_detrend(series: &TimeSeries, period: usize) -> Result<TimeSeries> {
    let n = series.len();
    if period < 2 {
        return Err(SizerError::InvalidParameter(format!(
            "seasonal period must be at least 2, got {period}"
        )));
    }
    if n < 2 * period {
        return Err(SizerError::SeriesTooShort { n, min: 2 * period });
    }
    let y = series.values();
    let t_mean = (n as f64 + 1.0) / 2.0;
    let tc: Vec<f64> = (1..=n).map(|i| i as f64 - t_mean).collect();

    // Model y_i = a_{phase(i)} + b * tc_i. The indicator block of the normal
    // equations is diagonal, so eliminate the a's first:
    //   a_phi = (Y_phi - b * S_phi) / m_phi
    //   b * (sum tc^2 - sum S_phi^2 / m_phi) = sum tc*y - sum S_phi Y_phi / m_phi
    let mut m = vec![0.0f64; period];
    let mut s = vec![0.0f64; period];
    let mut yp = vec![0.0f64; period];
    let mut t2 = 0.0;
    let mut ty = 0.0;
    for i in 0..n {
        let phase = i % period;
        m[phase] += 1.0;
        s[phase] += tc[i];
        yp[phase] += y[i];
        t2 += tc[i] * tc[i];
        ty += tc[i] * y[i];
    }
    let mut denom = t2;
    let mut numer = ty;
    for phase in 0..period {
        denom -= s[phase] * s[phase] / m[phase];
        numer -= s[phase] * yp[phase] / m[phase];
    }
    if denom <= 0.0 {
        return Err(SizerError::Internal(
            "degenerate joint deseasonalize/detrend design".into(),
        ));
    }
    let b = numer / denom;
    let a: Vec<f64> = (0..period)
        .map(|phase| (yp[phase] - b * s[phase]) / m[phase])
        .collect();
    let values = (0..n)
        .map(|i| y[i] - a[i % period] - b * tc[i])
        .collect();
    TimeSeries::new(values)
}
