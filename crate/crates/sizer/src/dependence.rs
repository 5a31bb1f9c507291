//! The error process: pilot residuals, sample autocovariance, the
//! kernel-weighted sandwich variance of the local slope, and the
//! information-adjusted sample size n*.
//!
//! The slope variance under correlated errors is the sandwich
//! `(X'WX)^-1 (X'SX) (X'WX)^-1` where `S` has entries
//! `gamma(|i-j|) K_h(i-i0) K_h(j-i0)`. The autocovariance `gamma` is taken in
//! observation units (it absorbs the noise scale) and is estimated from the
//! residuals of a pilot smooth at bandwidth `h_p`; a small pilot treats
//! structure as trend, a large one treats it as dependence, and that
//! trade-off is exactly what the pilot index exposes.

use crate::error::{Result, SizerError};
use crate::kernel::Kernel;
use crate::scale_space::fit_row;
use crate::series::TimeSeries;

/// Residuals of a pilot smooth, together with their sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    residuals: Vec<f64>,
    pilot_bandwidth: f64,
    ss: f64,
}

impl ResidualSeries {
    /// Wrap an externally produced residual vector (used by tests and by
    /// callers that already hold a smooth).
    pub fn from_parts(residuals: Vec<f64>, pilot_bandwidth: f64) -> Self {
        let ss = residuals.iter().map(|e| e * e).sum();
        Self {
            residuals,
            pilot_bandwidth,
            ss,
        }
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn pilot_bandwidth(&self) -> f64 {
        self.pilot_bandwidth
    }

    /// Sum of squared residuals, the numerator of the trade-off statistic.
    pub fn ss(&self) -> f64 {
        self.ss
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Residuals `e_i = y_i - m_hat_{h_p}(i)` from the pilot smooth at `h_p`.
pub fn pilot_residuals(series: &TimeSeries, h_p: f64, kernel: &Kernel) -> Result<ResidualSeries> {
    let fits = fit_row(series, h_p, kernel)?;
    let residuals: Vec<f64> = series
        .values()
        .iter()
        .zip(&fits)
        .map(|(y, fit)| y - fit.level)
        .collect();
    Ok(ResidualSeries::from_parts(residuals, h_p))
}

/// Sample autocovariance function, lags 0..n-1, in squared observation units.
///
/// The biased 1/n divisor makes the sequence positive semidefinite, which in
/// turn keeps every sandwich variance nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovFn {
    gamma: Vec<f64>,
}

impl AutocovFn {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(SizerError::InvalidParameter(
                "autocovariance needs at least lag 0".into(),
            ));
        }
        if gamma[0] < 0.0 {
            return Err(SizerError::InvalidParameter(format!(
                "autocovariance at lag 0 must be nonnegative, got {}",
                gamma[0]
            )));
        }
        Ok(Self { gamma })
    }

    /// White-noise autocovariance: `gamma(0)` only.
    pub fn white(gamma0: f64, n: usize) -> Result<Self> {
        let mut gamma = vec![0.0; n];
        gamma[0] = gamma0;
        Self::new(gamma)
    }

    /// gamma(k); zero beyond the stored lags.
    pub fn gamma(&self, lag: usize) -> f64 {
        self.gamma.get(lag).copied().unwrap_or(0.0)
    }

    pub fn lags(&self) -> &[f64] {
        &self.gamma
    }
}

/// Mean-centered sample autocovariance with the biased 1/n divisor:
/// `gamma_hat(k) = (1/n) sum_{i} (e_i - mean)(e_{i+k} - mean)`.
/// Lags beyond `max_lag` are zero.
pub fn sample_autocov(res: &ResidualSeries, max_lag: Option<usize>) -> Result<AutocovFn> {
    let e = res.residuals();
    let n = e.len();
    if n < 2 {
        return Err(SizerError::SeriesTooShort { n, min: 2 });
    }
    let max_lag = max_lag.unwrap_or(n - 1).min(n - 1);
    let mean = e.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = e.iter().map(|v| v - mean).collect();
    let mut gamma = vec![0.0; max_lag + 1];
    for (k, g) in gamma.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..n - k {
            acc += centered[i] * centered[i + k];
        }
        *g = acc / n as f64;
    }
    AutocovFn::new(gamma)
}

/// Kernel window geometry at one pixel: offsets, weights, and the weighted
/// design moments.
pub(crate) struct WindowGeometry {
    pub offsets: Vec<f64>,
    pub weights: Vec<f64>,
    pub s0: f64,
    pub s1: f64,
    pub det: f64,
}

pub(crate) fn window_geometry(
    n: usize,
    i0: usize,
    h: f64,
    kernel: &Kernel,
) -> Result<WindowGeometry> {
    if i0 >= n {
        return Err(SizerError::InvalidParameter(format!(
            "location {i0} out of range for length {n}"
        )));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(SizerError::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {h}"
        )));
    }
    let (lo, hi) = kernel.window(i0, h, n);
    let mut offsets = Vec::with_capacity(hi - lo + 1);
    let mut weights = Vec::with_capacity(hi - lo + 1);
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for i in lo..=hi {
        let d = i as f64 - i0 as f64;
        let w = kernel.weight_at(d, h);
        offsets.push(d);
        weights.push(w);
        let wd = w * d;
        s0 += w;
        s1 += wd;
        s2 += wd * d;
    }
    if crate::scale_space::moments_degenerate(s0, s1, s2) {
        return Err(SizerError::DegenerateFit { i0, h });
    }
    Ok(WindowGeometry {
        offsets,
        weights,
        s0,
        s1,
        det: s0 * s2 - s1 * s1,
    })
}

/// Cross-products of the weight vector with itself at every lag, split by
/// design-offset powers. For lag k:
///   c00[k] = sum_t w_t w_{t+k}
///   c01[k] = sum_t w_t w_{t+k} (d_t + d_{t+k})
///   c11[k] = sum_t w_t w_{t+k} d_t d_{t+k}
/// These depend only on (i0, h), so one computation serves every pilot's
/// autocovariance.
pub(crate) struct LagProducts {
    pub c00: Vec<f64>,
    pub c01: Vec<f64>,
    pub c11: Vec<f64>,
}

pub(crate) fn lag_products(geom: &WindowGeometry) -> LagProducts {
    let width = geom.weights.len();
    let w = &geom.weights;
    let d = &geom.offsets;
    let mut c00 = vec![0.0; width];
    let mut c01 = vec![0.0; width];
    let mut c11 = vec![0.0; width];
    for k in 0..width {
        let mut a00 = 0.0;
        let mut a01 = 0.0;
        let mut a11 = 0.0;
        for t in 0..width - k {
            let u = w[t] * w[t + k];
            a00 += u;
            a01 += u * (d[t] + d[t + k]);
            a11 += u * (d[t] * d[t + k]);
        }
        c00[k] = a00;
        c01[k] = a01;
        c11[k] = a11;
    }
    LagProducts { c00, c01, c11 }
}

/// Assemble the slope entry of the sandwich from precomputed lag products
/// and an autocovariance. Off-diagonal lags enter twice except the c01 sums,
/// which already count both orientations of each pair.
pub(crate) fn slope_variance_from_lags(
    geom: &WindowGeometry,
    lags: &LagProducts,
    autocov: &AutocovFn,
) -> Result<f64> {
    let width = lags.c00.len();
    let max_lag = autocov.lags().len().min(width);
    let mut b00 = 0.0;
    let mut b01 = 0.0;
    let mut b11 = 0.0;
    for k in 0..max_lag {
        let g = autocov.gamma(k);
        if g == 0.0 {
            continue;
        }
        if k == 0 {
            b00 += g * lags.c00[0];
            b01 += 0.5 * g * lags.c01[0];
            b11 += g * lags.c11[0];
        } else {
            b00 += 2.0 * g * lags.c00[k];
            b01 += g * lags.c01[k];
            b11 += 2.0 * g * lags.c11[k];
        }
    }
    let det2 = geom.det * geom.det;
    let s0 = geom.s0;
    let s1 = geom.s1;
    let v = (s1 * s1 * b00 - 2.0 * s0 * s1 * b01 + s0 * s0 * b11) / det2;
    if v < 0.0 {
        // A positive semidefinite autocovariance cannot produce a negative
        // variance beyond rounding noise.
        let scale = (s1 * s1 * b00.abs()
            + 2.0 * (s0 * s1 * b01).abs()
            + s0 * s0 * b11.abs())
            / det2;
        if v < -1e-12 * scale.max(1.0) {
            return Err(SizerError::Internal(format!(
                "sandwich variance {v} is negative beyond rounding tolerance"
            )));
        }
        return Ok(0.0);
    }
    Ok(v)
}

/// Slope entry of `(X'WX)^-1 (X'SX) (X'WX)^-1` with
/// `S_ij = gamma(|i-j|) K_h(i-i0) K_h(j-i0)`, restricted to the truncated
/// kernel window.
pub fn sandwich_slope_variance(
    n: usize,
    i0: usize,
    h: f64,
    kernel: &Kernel,
    autocov: &AutocovFn,
) -> Result<f64> {
    let geom = window_geometry(n, i0, h, kernel)?;
    let lags = lag_products(&geom);
    slope_variance_from_lags(&geom, &lags, autocov)
}

/// Variance of the sample mean estimated from `p` consecutive groups:
/// `(1/p) (1/(p-1)) sum_j (mean_j - grand_mean)^2`, where groups have size
/// floor(n/p) and the remainder joins the last group.
pub fn grouped_mean_variance(x: &[f64], p: usize) -> Result<f64> {
    let n = x.len();
    if p < 2 {
        return Err(SizerError::InvalidParameter(format!(
            "group count must be at least 2, got {p}"
        )));
    }
    if n < 2 * p {
        return Err(SizerError::SeriesTooShort { n, min: 2 * p });
    }
    let g = n / p;
    let mut means = Vec::with_capacity(p);
    for j in 0..p {
        let start = j * g;
        let end = if j == p - 1 { n } else { start + g };
        let m = x[start..end].iter().sum::<f64>() / (end - start) as f64;
        means.push(m);
    }
    let grand = means.iter().sum::<f64>() / p as f64;
    let ssq: f64 = means.iter().map(|m| (m - grand) * (m - grand)).sum();
    Ok(ssq / (p as f64 * (p - 1) as f64))
}

/// Information-equivalent sample size estimated from pilot residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStarEstimate {
    /// `gamma_hat(0) / grouped_mean_variance`, clamped to [1, 10n].
    pub value: f64,
    /// Set when the grouped variance was zero (constant residuals) and the
    /// clamp ceiling was returned instead of a ratio.
    pub degenerate: bool,
}

/// Estimate `n* = sigma^2 / Var(mean)` from residuals: the numerator is the
/// lag-0 sample autocovariance, the denominator the grouped-means estimator
/// with p = floor(sqrt(n)) groups.
pub fn estimate_n_star(res: &ResidualSeries) -> Result<NStarEstimate> {
    let e = res.residuals();
    let n = e.len();
    if n < 16 {
        return Err(SizerError::SeriesTooShort { n, min: 16 });
    }
    let ceiling = 10.0 * n as f64;
    let mean = e.iter().sum::<f64>() / n as f64;
    let gamma0 = e.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let p = (n as f64).sqrt().floor() as usize;
    let var_mean = grouped_mean_variance(e, p)?;
    if var_mean == 0.0 || gamma0 == 0.0 {
        return Ok(NStarEstimate {
            value: ceiling,
            degenerate: true,
        });
    }
    let ratio = gamma0 / var_mean;
    if !ratio.is_finite() {
        return Ok(NStarEstimate {
            value: ceiling,
            degenerate: true,
        });
    }
    Ok(NStarEstimate {
        value: ratio.clamp(1.0, ceiling),
        degenerate: false,
    })
}

/// The estimated error structure for one pilot bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceEstimate {
    pub autocov: AutocovFn,
    pub n_star: f64,
    /// Carried over from [`NStarEstimate::degenerate`].
    pub n_star_degenerate: bool,
}

impl DependenceEstimate {
    pub fn new(autocov: AutocovFn, n_star: f64) -> Result<Self> {
        if !(n_star > 0.0 && n_star.is_finite()) {
            return Err(SizerError::InvalidParameter(format!(
                "n_star must be positive and finite, got {n_star}"
            )));
        }
        Ok(Self {
            autocov,
            n_star,
            n_star_degenerate: false,
        })
    }

    /// Full estimate from pilot residuals: sample autocovariance at all lags
    /// plus the grouped-means n*.
    pub fn from_residuals(res: &ResidualSeries) -> Result<Self> {
        let autocov = sample_autocov(res, None)?;
        let n_star = estimate_n_star(res)?;
        Ok(Self {
            autocov,
            n_star: n_star.value,
            n_star_degenerate: n_star.degenerate,
        })
    }
}

/// Correlation-adjusted effective sample size: `(n*/n) * ESS(i0, h)`.
pub fn ess_star(i0: usize, h: f64, n: usize, n_star: f64, kernel: &Kernel) -> Result<f64> {
    Ok(n_star / n as f64 * crate::scale_space::ess(i0, h, n, kernel)?)
}
