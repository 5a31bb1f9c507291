//! Bandwidth grids and the local linear estimator of level and derivative.
//!
//! Smoothing a series at every bandwidth of a wide log-spaced grid gives the
//! family of smooths; the slope estimate at each (location, bandwidth) pixel
//! is what the significance map classifies. The local linear fit at `i0`
//! minimizes the kernel-weighted squared error of `b0 + b1 * (i - i0)`, so
//! `b0` estimates the smoothed level and `b1` the smoothed derivative.

use crate::error::{Result, SizerError};
use crate::kernel::Kernel;
use crate::series::TimeSeries;

/// Relative tolerance on equal log-spacing of the bandwidth grid.
const LOG_SPACING_RTOL: f64 = 1e-9;

/// Determinant threshold, relative to the scale of the weighted moments,
/// below which the 2x2 normal equations are treated as singular.
const DEGENERATE_RTOL: f64 = 1e-12;

/// A strictly increasing, geometrically spaced set of bandwidths.
///
/// An odd count keeps a visual middle curve in the family plot; 11 is the
/// conventional number of resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    bandwidths: Vec<f64>,
}

impl BandwidthGrid {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        let count = bandwidths.len();
        if count < 3 || count.is_multiple_of(2) {
            return Err(SizerError::InvalidParameter(format!(
                "bandwidth count must be odd and at least 3, got {count}"
            )));
        }
        for h in &bandwidths {
            if !h.is_finite() || *h <= 0.0 {
                return Err(SizerError::InvalidParameter(format!(
                    "bandwidths must be positive and finite, got {h}"
                )));
            }
        }
        for w in bandwidths.windows(2) {
            if w[1] <= w[0] {
                return Err(SizerError::InvalidParameter(
                    "bandwidths must be strictly increasing".into(),
                ));
            }
        }
        let ratio = bandwidths[1] / bandwidths[0];
        for w in bandwidths.windows(2) {
            let r = w[1] / w[0];
            if (r - ratio).abs() > LOG_SPACING_RTOL * ratio {
                return Err(SizerError::InvalidParameter(
                    "bandwidths must be equally spaced on the log scale".into(),
                ));
            }
        }
        Ok(Self { bandwidths })
    }

    pub fn len(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bandwidths.is_empty()
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn get(&self, row: usize) -> f64 {
        self.bandwidths[row]
    }
}

/// Geometric progression of `count` bandwidths from `h_min` to `h_max`
/// inclusive. `count` must be odd and at least 3.
pub fn make_bandwidth_grid(count: usize, h_min: f64, h_max: f64) -> Result<BandwidthGrid> {
    if count < 3 || count.is_multiple_of(2) {
        return Err(SizerError::InvalidParameter(format!(
            "bandwidth count must be odd and at least 3, got {count}"
        )));
    }
    if !(h_min.is_finite() && h_max.is_finite()) || h_min <= 0.0 || h_min >= h_max {
        return Err(SizerError::InvalidParameter(format!(
            "bandwidth range must satisfy 0 < h_min < h_max, got [{h_min}, {h_max}]"
        )));
    }
    let steps = (count - 1) as f64;
    let ratio = h_max / h_min;
    let mut bandwidths: Vec<f64> = (0..count)
        .map(|j| h_min * ratio.powf(j as f64 / steps))
        .collect();
    // Pin the endpoints so the grid hits them exactly.
    bandwidths[0] = h_min;
    bandwidths[count - 1] = h_max;
    BandwidthGrid::new(bandwidths)
}

/// The conventional 11-curve grid spanning near-interpolation (h = 2) to a
/// near-global line (h = n/2).
pub fn default_grid(n: usize) -> Result<BandwidthGrid> {
    make_bandwidth_grid(11, 2.0, n as f64 / 2.0)
}

/// Local linear level and slope at one (location, bandwidth) pixel, in
/// observation units and observation units per index step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFit {
    pub level: f64,
    pub slope: f64,
}

/// Kernel-weighted design moments of the local fit at `i0`:
/// `s_k = sum w_i * d_i^k` and `t_k = sum w_i * d_i^k * y_i` with
/// `d_i = i - i0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FitMoments {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    t0: f64,
    t1: f64,
}

impl FitMoments {
    pub(crate) fn accumulate(
        values: &[f64],
        i0: usize,
        h: f64,
        kernel: &Kernel,
    ) -> Self {
        let n = values.len();
        let (lo, hi) = kernel.window(i0, h, n);
        let mut m = Self {
            s0: 0.0,
            s1: 0.0,
            s2: 0.0,
            t0: 0.0,
            t1: 0.0,
        };
        for (i, y) in values.iter().enumerate().take(hi + 1).skip(lo) {
            let d = i as f64 - i0 as f64;
            let w = kernel.weight_at(d, h);
            if w == 0.0 {
                continue;
            }
            let wd = w * d;
            m.s0 += w;
            m.s1 += wd;
            m.s2 += wd * d;
            m.t0 += w * y;
            m.t1 += wd * y;
        }
        m
    }

    pub(crate) fn determinant(&self) -> f64 {
        self.s0 * self.s2 - self.s1 * self.s1
    }

    pub(crate) fn is_degenerate(&self) -> bool {
        moments_degenerate(self.s0, self.s1, self.s2)
    }

    fn solve(&self) -> LocalFit {
        let det = self.determinant();
        LocalFit {
            level: (self.s2 * self.t0 - self.s1 * self.t1) / det,
            slope: (self.s0 * self.t1 - self.s1 * self.t0) / det,
        }
    }
}

/// Whether weighted design moments describe a singular 2x2 system.
pub(crate) fn moments_degenerate(s0: f64, s1: f64, s2: f64) -> bool {
    s0 * s2 - s1 * s1 <= DEGENERATE_RTOL * s0 * s2
}

fn validate_pixel(n: usize, i0: usize, h: f64) -> Result<()> {
    if i0 >= n {
        return Err(SizerError::InvalidParameter(format!(
            "location {i0} out of range for series of length {n}"
        )));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(SizerError::InvalidParameter(format!(
            "bandwidth must be positive and finite, got {h}"
        )));
    }
    Ok(())
}

/// Local linear fit at `i0` (0-based) with bandwidth `h`, solving the 2x2
/// weighted normal equations in closed form.
pub fn local_linear_fit(
    series: &TimeSeries,
    i0: usize,
    h: f64,
    kernel: &Kernel,
) -> Result<LocalFit> {
    validate_pixel(series.len(), i0, h)?;
    let m = FitMoments::accumulate(series.values(), i0, h, kernel);
    if m.is_degenerate() {
        return Err(SizerError::DegenerateFit { i0, h });
    }
    Ok(m.solve())
}

/// One row of scale space: the local linear fit at every location for a
/// fixed bandwidth.
pub fn fit_row(series: &TimeSeries, h: f64, kernel: &Kernel) -> Result<Vec<LocalFit>> {
    (0..series.len())
        .map(|i0| local_linear_fit(series, i0, h, kernel))
        .collect()
}

/// Effective sample size at a pixel: the kernel mass in the window relative
/// to the weight at the center, `sum K((i - i0)/h) / K(0)`. For the uniform
/// kernel this is exactly the number of design points in the window.
pub fn ess(i0: usize, h: f64, n: usize, kernel: &Kernel) -> Result<f64> {
    validate_pixel(n, i0, h)?;
    let (lo, hi) = kernel.window(i0, h, n);
    let mut sum = 0.0;
    for i in lo..=hi {
        sum += kernel.weight_at(i as f64 - i0 as f64, h);
    }
    Ok(sum / kernel.weight(0.0))
}
