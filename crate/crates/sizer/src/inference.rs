//! Simultaneous-inference quantiles and assembly of the significance map.
//!
//! At each pixel the confidence interval for the smoothed derivative is
//! `slope +- q * sd`, where `sd` comes from the sandwich variance and `q` is
//! a Gaussian quantile widened for simultaneity: the row is treated as
//! `l = n / ESS*` independent interval problems, giving
//! `q = Phi^-1((1 + (1 - alpha)^(1/l)) / 2)`. Pixels whose adjusted
//! effective sample size falls below 5 are classified as too sparse to test.

use rayon::prelude::*;

use crate::dependence::{lag_products, slope_variance_from_lags, window_geometry, DependenceEstimate};
use crate::error::{Result, SizerError};
use crate::kernel::Kernel;
use crate::scale_space::{ess, fit_row, BandwidthGrid};
use crate::series::TimeSeries;

pub use crate::normal::{normal_cdf, normal_pdf, normal_quantile};

/// Effective-sample-size floor below which no conclusion is drawn.
pub const SPARSITY_THRESHOLD: f64 = 5.0;

/// Verdict at one (location, bandwidth) pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelClass {
    /// Confidence interval entirely above zero: significantly increasing.
    Up,
    /// Confidence interval entirely below zero: significantly decreasing.
    Down,
    /// Interval straddles zero.
    Flat,
    /// Too little adjusted information to test.
    Sparse,
}

impl PixelClass {
    /// Stable integer encoding used by the report files.
    pub fn code(self) -> u8 {
        match self {
            PixelClass::Up => 0,
            PixelClass::Down => 1,
            PixelClass::Flat => 2,
            PixelClass::Sparse => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PixelClass::Up),
            1 => Some(PixelClass::Down),
            2 => Some(PixelClass::Flat),
            3 => Some(PixelClass::Sparse),
            _ => None,
        }
    }
}

/// One pixel of the map with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCell {
    pub class: PixelClass,
    pub slope: f64,
    pub sd: f64,
    pub q: f64,
    pub ess_star: f64,
}

/// The significance map: `bandwidth count x n` cells in row-major order,
/// rows running from the finest bandwidth (row 0) to the coarsest.
#[derive(Debug, Clone, PartialEq)]
pub struct SiZerMap {
    bandwidths: BandwidthGrid,
    n: usize,
    cells: Vec<PixelCell>,
}

impl SiZerMap {
    #[cfg(test)]
    pub(crate) fn from_parts(bandwidths: BandwidthGrid, n: usize, cells: Vec<PixelCell>) -> Self {
        assert_eq!(cells.len(), bandwidths.len() * n);
        Self {
            bandwidths,
            n,
            cells,
        }
    }

    pub fn bandwidths(&self) -> &BandwidthGrid {
        &self.bandwidths
    }

    pub fn rows(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell(&self, row: usize, col: usize) -> &PixelCell {
        &self.cells[row * self.n + col]
    }

    pub fn class(&self, row: usize, col: usize) -> PixelClass {
        self.cell(row, col).class
    }

    pub fn cells(&self) -> &[PixelCell] {
        &self.cells
    }

    /// Row slice at one bandwidth.
    pub fn row(&self, row: usize) -> &[PixelCell] {
        &self.cells[row * self.n..(row + 1) * self.n]
    }
}

/// Number of independent confidence-interval problems a row is treated as.
pub fn independent_blocks(n: usize, ess: f64) -> f64 {
    n as f64 / ess
}

/// Simultaneous quantile `Phi^-1((1 + (1 - alpha)^(1/l)) / 2)`.
///
/// `l` may drop below 1 for negatively correlated data (ESS* above n); the
/// formula stays valid and simply tightens the interval below the pointwise
/// quantile.
pub fn quantile_q(l: f64, alpha: f64) -> Result<f64> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(SizerError::InvalidParameter(format!(
            "block count must be positive and finite, got {l}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SizerError::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let p = 0.5 * (1.0 + (1.0 - alpha).powf(1.0 / l));
    normal_quantile(p)
}

/// Four-way classification of one pixel.
pub fn classify_pixel(slope: f64, sd: f64, q: f64, ess_star: f64) -> PixelClass {
    if ess_star < SPARSITY_THRESHOLD {
        PixelClass::Sparse
    } else if slope - q * sd > 0.0 {
        PixelClass::Up
    } else if slope + q * sd < 0.0 {
        PixelClass::Down
    } else {
        PixelClass::Flat
    }
}

/// Where the simultaneous quantile takes its effective sample size from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantileMode {
    /// ESS* of each pixel individually (handles boundaries gracefully).
    #[default]
    PerPixel,
    /// ESS* at the interior midpoint, one quantile per row.
    RowSummary,
}

/// Map construction options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    pub alpha: f64,
    pub quantile_mode: QuantileMode,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            quantile_mode: QuantileMode::PerPixel,
        }
    }
}

/// Builds maps for one series over one grid. The kernel cross-products at
/// each pixel depend only on (location, bandwidth), so building the eleven
/// pilot maps shares that work and each extra map costs only a weighted sum
/// per pixel.
pub struct MapBuilder<'a> {
    series: &'a TimeSeries,
    grid: &'a BandwidthGrid,
    kernel: Kernel,
    options: MapOptions,
}

impl<'a> MapBuilder<'a> {
    pub fn new(series: &'a TimeSeries, grid: &'a BandwidthGrid, kernel: Kernel) -> Self {
        Self {
            series,
            grid,
            kernel,
            options: MapOptions::default(),
        }
    }

    pub fn options(mut self, options: MapOptions) -> Self {
        self.options = options;
        self
    }

    pub fn build(&self, dep: &DependenceEstimate) -> Result<SiZerMap> {
        let mut maps = self.build_many(std::slice::from_ref(dep))?;
        Ok(maps.pop().expect("one dependence estimate, one map"))
    }

    /// Build one map per dependence estimate, sharing the per-pixel kernel
    /// geometry across all of them.
    pub fn build_many(&self, deps: &[DependenceEstimate]) -> Result<Vec<SiZerMap>> {
        let n = self.series.len();
        let n_f = n as f64;
        let rows = self.grid.len();
        let mut per_map_cells: Vec<Vec<PixelCell>> =
            vec![Vec::with_capacity(rows * n); deps.len()];

        for row in 0..rows {
            let h = self.grid.get(row);
            let fits = fit_row(self.series, h, &self.kernel)?;

            // Row-summary quantiles, if requested, use the interior midpoint.
            let row_q: Option<Vec<f64>> = match self.options.quantile_mode {
                QuantileMode::PerPixel => None,
                QuantileMode::RowSummary => {
                    let mid_ess = ess(n / 2, h, n, &self.kernel)?;
                    let qs = deps
                        .iter()
                        .map(|dep| {
                            let es = dep.n_star / n_f * mid_ess;
                            quantile_q(independent_blocks(n, es), self.options.alpha)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    Some(qs)
                }
            };

            let row_cells: Vec<Vec<PixelCell>> = (0..n)
                .into_par_iter()
                .map(|i0| -> Result<Vec<PixelCell>> {
                    let geom = window_geometry(n, i0, h, &self.kernel)?;
                    let lags = lag_products(&geom);
                    let pixel_ess = ess(i0, h, n, &self.kernel)?;
                    let slope = fits[i0].slope;
                    deps.iter()
                        .enumerate()
                        .map(|(di, dep)| {
                            let variance =
                                slope_variance_from_lags(&geom, &lags, &dep.autocov)?;
                            let sd = variance.sqrt();
                            let es = dep.n_star / n_f * pixel_ess;
                            let q = match &row_q {
                                Some(qs) => qs[di],
                                None => {
                                    quantile_q(independent_blocks(n, es), self.options.alpha)?
                                }
                            };
                            Ok(PixelCell {
                                class: classify_pixel(slope, sd, q, es),
                                slope,
                                sd,
                                q,
                                ess_star: es,
                            })
                        })
                        .collect()
                })
                .collect::<Result<Vec<_>>>()?;

            for cells in &row_cells {
                for (di, cell) in cells.iter().enumerate() {
                    per_map_cells[di].push(*cell);
                }
            }
        }

        Ok(per_map_cells
            .into_iter()
            .map(|cells| SiZerMap {
                bandwidths: self.grid.clone(),
                n,
                cells,
            })
            .collect())
    }
}

/// Assemble the significance map for one (series, dependence estimate) pair.
pub fn build_map(
    series: &TimeSeries,
    dep: &DependenceEstimate,
    grid: &BandwidthGrid,
    alpha: f64,
    kernel: &Kernel,
) -> Result<SiZerMap> {
    MapBuilder::new(series, grid, *kernel)
        .options(MapOptions {
            alpha,
            quantile_mode: QuantileMode::PerPixel,
        })
        .build(dep)
}
