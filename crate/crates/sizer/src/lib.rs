//! Scale-space significance maps for trends in time series.
//!
//! Given an equally spaced series, this crate smooths it over a wide
//! log-spaced grid of bandwidths, adjusts the slope inference for serially
//! correlated errors through a pilot-residual covariance estimate, and
//! classifies every (location, bandwidth) pixel as significantly increasing,
//! significantly decreasing, indeterminate, or too sparse to decide. Because
//! one series cannot distinguish trend from dependence, the analysis is run
//! once per pilot bandwidth and a residual trade-off statistic picks four
//! representative maps to display.
//!
//! ```
//! use sizer::{analyze, AnalysisOptions, ReportMeta, TimeSeries};
//!
//! // A rising line with a seasonal wiggle and a little noise.
//! let values: Vec<f64> = (1..=120)
//!     .map(|i| {
//!         let t = i as f64;
//!         0.3 * t + 4.0 * (t / 10.0).sin() + 0.5 * (t * 12.9898).sin().fract()
//!     })
//!     .collect();
//! let series = TimeSeries::new(values)?;
//! let report = analyze(series, ReportMeta::default(), &AnalysisOptions::default())?;
//!
//! assert_eq!(report.pilots.len(), 11);
//! assert_eq!(report.selection.chosen.len(), 4);
//! for number in &report.selection.chosen {
//!     let map = &report.pilot(*number).map;
//!     println!("pilot {number}: {} x {} map", map.rows(), map.n());
//! }
//! # Ok::<(), sizer::SizerError>(())
//! ```

pub mod cli;
pub mod dependence;
pub mod error;
mod fft;
pub mod inference;
pub mod io;
pub mod kernel;
mod normal;
pub mod preprocess;
pub mod render;
pub mod report;
pub mod scale_space;
pub mod selection;
pub mod series;
pub mod sim;

pub use dependence::{
    ess_star, estimate_n_star, grouped_mean_variance, pilot_residuals, sample_autocov,
    sandwich_slope_variance, AutocovFn, DependenceEstimate, NStarEstimate, ResidualSeries,
};
pub use error::{Result, SizerError};
pub use inference::{
    build_map, classify_pixel, independent_blocks, normal_cdf, normal_quantile, quantile_q,
    MapBuilder, MapOptions, PixelCell, PixelClass, QuantileMode, SiZerMap, SPARSITY_THRESHOLD,
};
pub use io::{load_csv, ColumnSelector, HeaderMode, ReportDoc};
pub use kernel::{Kernel, KernelShape};
pub use preprocess::{deseasonalize, deseasonalize_detrend, linear_detrend};
pub use render::{ascii_map, render_panel};
pub use report::{analyze, AnalysisOptions, AnalysisReport, ReportMeta};
pub use scale_space::{
    default_grid, ess, fit_row, local_linear_fit, make_bandwidth_grid, BandwidthGrid, LocalFit,
};
pub use selection::{compute_ir, select_pilots, PilotAnalysis, SelectionMode, SelectionResult};
pub use series::TimeSeries;
pub use sim::{
    ar2_from_lag1, compare_maps, derive_rep_seed, gen_noise, gen_trend, run_study,
    true_derivative_map, EvalResult, NoiseKind, NoiseSpec, StudyConfig, StudySummary, TrendClass,
    TrendSpec, TrueMap,
};
