//! End-to-end analysis: family of smooths, one map per pilot bandwidth,
//! trade-off statistic, and pilot selection, assembled for rendering and
//! serialization.

use crate::dependence::{DependenceEstimate, ResidualSeries};
use crate::error::{Result, SizerError};
use crate::inference::{MapBuilder, MapOptions, QuantileMode};
use crate::kernel::Kernel;
use crate::scale_space::{fit_row, make_bandwidth_grid, BandwidthGrid, LocalFit};
use crate::selection::{compute_ir, select_pilots, PilotAnalysis, SelectionMode, SelectionResult};
use crate::series::TimeSeries;

/// Pipeline configuration. `h_max` defaults to n/2 at run time.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub count: usize,
    pub h_min: f64,
    pub h_max: Option<f64>,
    pub alpha: f64,
    pub mode: SelectionMode,
    pub kernel: Kernel,
    pub quantile_mode: QuantileMode,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            count: 11,
            h_min: 2.0,
            h_max: None,
            alpha: 0.05,
            mode: SelectionMode::default(),
            kernel: Kernel::gaussian(),
            quantile_mode: QuantileMode::PerPixel,
        }
    }
}

/// Where the data came from and what was done to it before analysis.
#[derive(Debug, Clone, Default)]
pub struct ReportMeta {
    pub source: String,
    pub preprocessing: Vec<String>,
    /// Known noiseless trend, drawn over the data panel when present.
    pub trend_overlay: Option<Vec<f64>>,
}

/// Everything the renderer and the exporter need.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub meta: ReportMeta,
    pub series: TimeSeries,
    pub grid: BandwidthGrid,
    /// Family of smooths, one row of local fits per bandwidth.
    pub family: Vec<Vec<LocalFit>>,
    /// One full analysis per pilot bandwidth, in grid order.
    pub pilots: Vec<PilotAnalysis>,
    pub selection: SelectionResult,
    pub alpha: f64,
}

impl AnalysisReport {
    /// The pilot with 1-based number `number`.
    pub fn pilot(&self, number: usize) -> &PilotAnalysis {
        &self.pilots[number - 1]
    }
}

/// Minimum length for the full pipeline (the grouped n* estimator needs 16).
pub const MIN_ANALYSIS_LEN: usize = 16;

/// Run the full pipeline on a (possibly preprocessed) series.
pub fn analyze(series: TimeSeries, meta: ReportMeta, opts: &AnalysisOptions) -> Result<AnalysisReport> {
    let n = series.len();
    if n < MIN_ANALYSIS_LEN {
        return Err(SizerError::SeriesTooShort {
            n,
            min: MIN_ANALYSIS_LEN,
        });
    }
    let h_max = opts.h_max.unwrap_or(n as f64 / 2.0);
    let grid = make_bandwidth_grid(opts.count, opts.h_min, h_max)?;

    let family: Vec<Vec<LocalFit>> = grid
        .bandwidths()
        .iter()
        .map(|&h| fit_row(&series, h, &opts.kernel))
        .collect::<Result<_>>()?;

    // Pilot residuals reuse the family levels.
    let residuals: Vec<ResidualSeries> = family
        .iter()
        .zip(grid.bandwidths())
        .map(|(fits, &h)| {
            let e: Vec<f64> = series
                .values()
                .iter()
                .zip(fits)
                .map(|(y, fit)| y - fit.level)
                .collect();
            ResidualSeries::from_parts(e, h)
        })
        .collect();

    let ss: Vec<f64> = residuals.iter().map(|r| r.ss()).collect();
    let ir = compute_ir(&ss)?;
    let selection = select_pilots(&ir, opts.mode)?;

    let deps: Vec<DependenceEstimate> = residuals
        .iter()
        .map(DependenceEstimate::from_residuals)
        .collect::<Result<_>>()?;

    let maps = MapBuilder::new(&series, &grid, opts.kernel)
        .options(MapOptions {
            alpha: opts.alpha,
            quantile_mode: opts.quantile_mode,
        })
        .build_many(&deps)?;

    let mut pilots = Vec::with_capacity(grid.len());
    for (index, ((residuals, dep), map)) in residuals
        .into_iter()
        .zip(deps)
        .zip(maps)
        .enumerate()
    {
        pilots.push(PilotAnalysis {
            number: index + 1,
            h_p: grid.get(index),
            residuals,
            dep,
            map,
            ir: ir[index],
        });
    }

    Ok(AnalysisReport {
        meta,
        series,
        grid,
        family,
        pilots,
        selection,
        alpha: opts.alpha,
    })
}
