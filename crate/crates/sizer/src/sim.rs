//! Trend and noise generators for the coverage study, the true-derivative
//! map, and pixelwise type I error / power scoring.
//!
//! All generators are deterministic functions of their seed. Study
//! replications derive per-replication seeds through [`derive_rep_seed`], so
//! parallel and serial runs produce identical summaries.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dependence::{pilot_residuals, DependenceEstimate, ResidualSeries};
use crate::error::{Result, SizerError};
use crate::fft::fft;
use crate::inference::{MapBuilder, MapOptions, PixelClass, QuantileMode, SiZerMap};
use crate::kernel::Kernel;
use crate::scale_space::{default_grid, fit_row, BandwidthGrid};
use crate::selection::{compute_ir, select_pilots, SelectionMode};
use crate::series::TimeSeries;

/// Deterministic trend evaluated at time points 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub enum TrendSpec {
    /// `m(i) = i + 10 sin(2 pi i / 40)`: a rising ramp with a period-40
    /// oscillation (the `eq7` preset of the CLI).
    LinearPlusSine,
    /// `m(i) = sin(6 pi i / n) - i / n`: three sine cycles over a gentle
    /// decline (the `eq9` preset of the CLI).
    SineMinusRamp,
    /// Caller-provided trend samples; the length must equal n.
    Custom(Vec<f64>),
}

/// Stationary noise models.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// i.i.d. normal with standard deviation `sigma`.
    White { sigma: f64 },
    /// Second-order autoregression scaled so the marginal standard
    /// deviation equals `sigma`.
    Ar2 { phi1: f64, phi2: f64, sigma: f64 },
    /// First-order moving average scaled so the marginal standard deviation
    /// equals `sigma`.
    Ma1 { theta: f64, sigma: f64 },
    /// Fractional Gaussian noise with Hurst exponent `hurst` and marginal
    /// standard deviation `sigma`, via exact circulant embedding.
    Fgn { hurst: f64, sigma: f64 },
}

/// A noise model plus the seed that makes its sample path reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

/// Evaluate a trend at i = 1..=n.
pub fn gen_trend(spec: &TrendSpec, n: usize) -> Result<Vec<f64>> {
    if n < TimeSeries::MIN_LEN {
        return Err(SizerError::SeriesTooShort {
            n,
            min: TimeSeries::MIN_LEN,
        });
    }
    match spec {
        TrendSpec::LinearPlusSine => Ok((1..=n)
            .map(|i| {
                let t = i as f64;
                t + 10.0 * (t / 40.0 * 2.0 * std::f64::consts::PI).sin()
            })
            .collect()),
        TrendSpec::SineMinusRamp => Ok((1..=n)
            .map(|i| {
                let t = i as f64;
                (6.0 * std::f64::consts::PI * t / n as f64).sin() - t / n as f64
            })
            .collect()),
        TrendSpec::Custom(values) => {
            if values.len() != n {
                return Err(SizerError::InvalidParameter(format!(
                    "custom trend has {} samples, expected {n}",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
    }
}

fn ar2_is_stationary(phi1: f64, phi2: f64) -> bool {
    phi2 > -1.0 && phi2 < 1.0 && phi1 + phi2 < 1.0 && phi2 - phi1 < 1.0
}

/// AR(2) coefficients hitting a target lag-1 autocorrelation, via the
/// Yule-Walker relation `rho1 = phi1 / (1 - phi2)` with `phi2` supplied by
/// the caller.
pub fn ar2_from_lag1(rho1: f64, phi2: f64) -> Result<(f64, f64)> {
    let phi1 = rho1 * (1.0 - phi2);
    if !ar2_is_stationary(phi1, phi2) {
        return Err(SizerError::InvalidParameter(format!(
            "AR(2) with rho1 = {rho1}, phi2 = {phi2} is not stationary (phi1 = {phi1})"
        )));
    }
    Ok((phi1, phi2))
}

/// Fractional Gaussian noise autocovariance
/// `gamma(k) = (sigma^2/2)(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})`.
pub fn fgn_autocov(k: usize, hurst: f64, sigma: f64) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    0.5 * sigma * sigma * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

const AR_BURN_IN: usize = 1000;

fn gen_white(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn gen_ar2(rng: &mut ChaCha8Rng, n: usize, phi1: f64, phi2: f64, sigma: f64) -> Result<Vec<f64>> {
    if !ar2_is_stationary(phi1, phi2) {
        return Err(SizerError::InvalidParameter(format!(
            "AR(2) coefficients ({phi1}, {phi2}) are not stationary"
        )));
    }
    // Innovation scale that makes the marginal variance sigma^2.
    let num = (1.0 + phi2) * ((1.0 - phi2) * (1.0 - phi2) - phi1 * phi1);
    let sigma_z = sigma * (num / (1.0 - phi2)).sqrt();
    let mut prev2 = 0.0;
    let mut prev1 = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..n + AR_BURN_IN {
        let z: f64 = rng.sample(StandardNormal);
        let x = phi1 * prev1 + phi2 * prev2 + sigma_z * z;
        prev2 = prev1;
        prev1 = x;
        if t >= AR_BURN_IN {
            out.push(x);
        }
    }
    Ok(out)
}

fn gen_ma1(rng: &mut ChaCha8Rng, n: usize, theta: f64, sigma: f64) -> Vec<f64> {
    let scale = sigma / (1.0 + theta * theta).sqrt();
    let mut prev: f64 = rng.sample(StandardNormal);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        out.push(scale * (z + theta * prev));
        prev = z;
    }
    out
}

/// Exact synthesis by circulant embedding: the covariance of the first n
/// outputs matches `fgn_autocov` exactly. The circulant size is the smallest
/// power of two at least 2n, which embeds the Toeplitz block unchanged.
fn gen_fgn(rng: &mut ChaCha8Rng, n: usize, hurst: f64, sigma: f64) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(SizerError::InvalidParameter(format!(
            "Hurst exponent must lie in (0, 1), got {hurst}"
        )));
    }
    let m = (2 * n).next_power_of_two();
    let half = m / 2;
    let row: Vec<f64> = (0..m)
        .map(|k| fgn_autocov(k.min(m - k), hurst, sigma))
        .collect();

    let mut eig_re = row;
    let mut eig_im = vec![0.0; m];
    fft(&mut eig_re, &mut eig_im, false);
    let max_eig = eig_re.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-9 * max_eig.max(1e-300);
    let mut eigen = Vec::with_capacity(m);
    for lambda in &eig_re {
        if *lambda < -tol {
            return Err(SizerError::Internal(format!(
                "circulant embedding produced negative eigenvalue {lambda}"
            )));
        }
        eigen.push(lambda.max(0.0));
    }

    // Spectral draw: one real normal at frequencies 0 and m/2, a complex
    // pair at each remaining frequency, conjugate-mirrored. The draw order
    // below is part of the determinism contract.
    let mut a_re = vec![0.0; m];
    let mut a_im = vec![0.0; m];
    let m_f = m as f64;
    let z0: f64 = rng.sample(StandardNormal);
    a_re[0] = (eigen[0] / m_f).sqrt() * z0;
    for k in 1..half {
        let u: f64 = rng.sample(StandardNormal);
        let v: f64 = rng.sample(StandardNormal);
        let amp = (eigen[k] / (2.0 * m_f)).sqrt();
        a_re[k] = amp * u;
        a_im[k] = amp * v;
        a_re[m - k] = a_re[k];
        a_im[m - k] = -a_im[k];
    }
    let z_half: f64 = rng.sample(StandardNormal);
    a_re[half] = (eigen[half] / m_f).sqrt() * z_half;

    fft(&mut a_re, &mut a_im, true);
    a_re.truncate(n);
    Ok(a_re)
}

/// Draw n samples of the noise process. Deterministic given kind and seed.
pub fn gen_noise(spec: &NoiseSpec, n: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        NoiseKind::White { sigma } => Ok(gen_white(&mut rng, n, sigma)),
        NoiseKind::Ar2 { phi1, phi2, sigma } => gen_ar2(&mut rng, n, phi1, phi2, sigma),
        NoiseKind::Ma1 { theta, sigma } => Ok(gen_ma1(&mut rng, n, theta, sigma)),
        NoiseKind::Fgn { hurst, sigma } => gen_fgn(&mut rng, n, hurst, sigma),
    }
}

/// Three-way classification of the noiseless smoothed derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendClass {
    Up,
    Down,
    Flat,
}

/// The reference map: the sign of the smoothed derivative of the noiseless
/// trend at every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueMap {
    bandwidths: BandwidthGrid,
    n: usize,
    cells: Vec<TrendClass>,
    zero_tolerance: f64,
}

impl TrueMap {
    pub fn bandwidths(&self) -> &BandwidthGrid {
        &self.bandwidths
    }

    pub fn rows(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class(&self, row: usize, col: usize) -> TrendClass {
        self.cells[row * self.n + col]
    }

    pub fn cells(&self) -> &[TrendClass] {
        &self.cells
    }

    /// Slope magnitudes at or below this were classified flat.
    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }
}

/// Smooth the noiseless trend at every bandwidth and take the sign of the
/// slope; magnitudes at or below `zero_tolerance` count as flat.
pub fn true_derivative_map(
    trend: &[f64],
    grid: &BandwidthGrid,
    kernel: &Kernel,
    zero_tolerance: f64,
) -> Result<TrueMap> {
    if zero_tolerance < 0.0 {
        return Err(SizerError::InvalidParameter(
            "zero tolerance must be nonnegative".into(),
        ));
    }
    let series = TimeSeries::new(trend.to_vec())?;
    let n = series.len();
    let mut cells = Vec::with_capacity(grid.len() * n);
    for &h in grid.bandwidths() {
        let fits = fit_row(&series, h, kernel)?;
        for fit in fits {
            let class = if fit.slope.abs() <= zero_tolerance {
                TrendClass::Flat
            } else if fit.slope > 0.0 {
                TrendClass::Up
            } else {
                TrendClass::Down
            };
            cells.push(class);
        }
    }
    Ok(TrueMap {
        bandwidths: grid.clone(),
        n,
        cells,
        zero_tolerance,
    })
}

/// Pixelwise agreement of an estimated map with the truth over the
/// non-sparse pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    /// Fraction of valid pixels where the map asserts a direction the truth
    /// contradicts (wrong sign, or a direction where the truth is flat).
    pub type1: f64,
    /// One minus the fraction of valid pixels where the truth is monotone
    /// but the map defers (probability of decision undeferred).
    pub power: f64,
    /// Number of non-sparse pixels entering the two rates.
    pub compared_pixels: usize,
}

/// Score an estimated map against the true-derivative map. Sparse pixels are
/// excluded from the comparison set.
pub fn compare_maps(truth: &TrueMap, est: &SiZerMap) -> Result<EvalResult> {
    if truth.rows() != est.rows() || truth.n() != est.n() {
        return Err(SizerError::ShapeMismatch(format!(
            "truth {}x{} vs map {}x{}",
            truth.rows(),
            truth.n(),
            est.rows(),
            est.n()
        )));
    }
    let mut valid = 0usize;
    let mut type1_hits = 0usize;
    let mut deferrals = 0usize;
    for row in 0..truth.rows() {
        for col in 0..truth.n() {
            let got = est.class(row, col);
            if got == PixelClass::Sparse {
                continue;
            }
            valid += 1;
            let want = truth.class(row, col);
            let wrong_direction = matches!(
                (want, got),
                (TrendClass::Up, PixelClass::Down)
                    | (TrendClass::Down, PixelClass::Up)
                    | (TrendClass::Flat, PixelClass::Up)
                    | (TrendClass::Flat, PixelClass::Down)
            );
            if wrong_direction {
                type1_hits += 1;
            }
            if matches!(want, TrendClass::Up | TrendClass::Down) && got == PixelClass::Flat {
                deferrals += 1;
            }
        }
    }
    if valid == 0 {
        return Ok(EvalResult {
            type1: 0.0,
            power: 0.0,
            compared_pixels: 0,
        });
    }
    Ok(EvalResult {
        type1: type1_hits as f64 / valid as f64,
        power: 1.0 - deferrals as f64 / valid as f64,
        compared_pixels: valid,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replication seed: `splitmix64(master ^ splitmix64(rep))`. Documented
/// so that parallel and serial study runs agree replication by replication.
pub fn derive_rep_seed(master: u64, rep: u64) -> u64 {
    splitmix64(master ^ splitmix64(rep))
}

/// Configuration of a coverage study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub trend: TrendSpec,
    pub noise: NoiseKind,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub grid: BandwidthGrid,
    pub alpha: f64,
    /// Pilot selection rule. The robust default avoids anchoring on the
    /// overfit first pilot, whose residuals understate the error scale and
    /// inflate the fine-scale error rates.
    pub mode: SelectionMode,
    pub kernel: Kernel,
    pub zero_tolerance: f64,
}

impl StudyConfig {
    pub fn new(
        trend: TrendSpec,
        noise: NoiseKind,
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Result<Self> {
        if reps == 0 {
            return Err(SizerError::InvalidParameter(
                "need at least one replication".into(),
            ));
        }
        Ok(Self {
            trend,
            noise,
            n,
            reps,
            seed,
            grid: default_grid(n)?,
            alpha: 0.05,
            mode: SelectionMode::default(),
            kernel: Kernel::gaussian(),
            zero_tolerance: 0.0,
        })
    }
}

/// Scores of the four selected maps in one replication, ordered hp1..hp4 by
/// increasing pilot number.
#[derive(Debug, Clone, PartialEq)]
pub struct RepScores {
    pub rep: usize,
    pub chosen: Vec<usize>,
    pub type1: [f64; 4],
    pub power: [f64; 4],
}

/// Mean / median / max / min of one quantity across replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

impl SummaryStats {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self {
            mean,
            median,
            max: *sorted.last().unwrap(),
            min: sorted[0],
        }
    }
}

/// Per-rank summary of the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSummary {
    pub type1: SummaryStats,
    pub power: SummaryStats,
}

/// Full study output: per-rank summaries plus the raw per-replication
/// scores and any replication failures (which do not abort the study).
#[derive(Debug, Clone)]
pub struct StudySummary {
    pub ranks: Vec<RankSummary>,
    pub replications: Vec<RepScores>,
    pub failures: Vec<(usize, String)>,
}

fn replicate(
    rep: usize,
    series: &TimeSeries,
    truth: &TrueMap,
    cfg: &StudyConfig,
) -> Result<RepScores> {
    let residuals: Vec<ResidualSeries> = cfg
        .grid
        .bandwidths()
        .iter()
        .map(|&h| pilot_residuals(series, h, &cfg.kernel))
        .collect::<Result<_>>()?;
    let ss: Vec<f64> = residuals.iter().map(|r| r.ss()).collect();
    let ir = compute_ir(&ss)?;
    let selection = select_pilots(&ir, cfg.mode)?;
    let deps: Vec<DependenceEstimate> = selection
        .chosen
        .iter()
        .map(|&number| DependenceEstimate::from_residuals(&residuals[number - 1]))
        .collect::<Result<_>>()?;
    let maps = MapBuilder::new(series, &cfg.grid, cfg.kernel)
        .options(MapOptions {
            alpha: cfg.alpha,
            quantile_mode: QuantileMode::PerPixel,
        })
        .build_many(&deps)?;
    let mut type1 = [0.0; 4];
    let mut power = [0.0; 4];
    for (rank, map) in maps.iter().enumerate() {
        let eval = compare_maps(truth, map)?;
        type1[rank] = eval.type1;
        power[rank] = eval.power;
    }
    Ok(RepScores {
        rep,
        chosen: selection.chosen,
        type1,
        power,
    })
}

/// Run the noise study: per replication, generate a series, select four
/// pilots by IR, and score each selected map against the true-derivative
/// map. Replications run in parallel; failures are collected, not fatal.
pub fn run_study(cfg: &StudyConfig) -> Result<StudySummary> {
    let trend = gen_trend(&cfg.trend, cfg.n)?;
    let truth = true_derivative_map(&trend, &cfg.grid, &cfg.kernel, cfg.zero_tolerance)?;

    let outcomes: Vec<(usize, Result<RepScores>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_rep_seed(cfg.seed, rep as u64);
            let spec = NoiseSpec {
                kind: cfg.noise.clone(),
                seed,
            };
            let run = gen_noise(&spec, cfg.n).and_then(|noise| {
                let values = trend.iter().zip(&noise).map(|(m, e)| m + e).collect();
                TimeSeries::new(values).and_then(|series| replicate(rep, &series, &truth, cfg))
            });
            (rep, run)
        })
        .collect();

    let mut replications = Vec::new();
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes {
        match outcome {
            Ok(scores) => replications.push(scores),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if replications.is_empty() {
        let (rep, msg) = failures.first().expect("reps >= 1");
        return Err(SizerError::Internal(format!(
            "every replication failed; first failure at replication {rep}: {msg}"
        )));
    }

    let ranks = (0..4)
        .map(|rank| {
            let t: Vec<f64> = replications.iter().map(|r| r.type1[rank]).collect();
            let p: Vec<f64> = replications.iter().map(|r| r.power[rank]).collect();
            RankSummary {
                type1: SummaryStats::from_values(&t),
                power: SummaryStats::from_values(&p),
            }
        })
        .collect();

    Ok(StudySummary {
        ranks,
        replications,
        failures,
    })
}
