//! Acceptance suite: one test per criterion, each ending in a PASS line
//! (or SKIP, for the optional real-data check).

mod common;

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sizer::dependence::{sample_autocov, AutocovFn, DependenceEstimate, ResidualSeries};
use sizer::inference::{build_map, quantile_q, PixelClass};
use sizer::io::{load_csv, ColumnSelector, HeaderMode};
use sizer::preprocess::deseasonalize_detrend;
use sizer::report::{analyze, AnalysisOptions, ReportMeta};
use sizer::scale_space::{default_grid, local_linear_fit};
use sizer::selection::SelectionMode;
use sizer::sim::{gen_noise, NoiseKind, NoiseSpec, StudyConfig, StudySummary};
use sizer::{Kernel, TimeSeries};

fn pass(criterion: &str) {
    println!("ACCEPTANCE {criterion}: PASS");
}

fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn criterion_1_smoothing_matches_dense_wls_oracle() {
    let start = Instant::now();
    let kernel = Kernel::gaussian();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..100 {
        let n = rng.random_range(12..=60);
        let series = TimeSeries::new(white_noise(n, rng.random())).unwrap();
        let i0 = rng.random_range(0..n);
        let h = rng.random_range(1.5..(1.2 * n as f64));
        let fit = local_linear_fit(&series, i0, h, &kernel).unwrap();
        let (level, slope) = common::dense_wls_fit(series.values(), i0, h);
        assert!(
            (fit.level - level).abs() < 1e-8,
            "case {case}: level {} vs oracle {level}",
            fit.level
        );
        assert!(
            (fit.slope - slope).abs() < 1e-8,
            "case {case}: slope {} vs oracle {slope}",
            fit.slope
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass("1 (smoothing oracle equivalence)");
}

#[test]
fn criterion_2_sandwich_matches_dense_covariance_oracle() {
    let start = Instant::now();
    let kernel = Kernel::gaussian();
    let mut rng = ChaCha8Rng::seed_from_u64(202);

    // Random positive semidefinite autocovariances (sample autocovariance
    // of random residual paths is PSD by construction) on n <= 80.
    for case in 0..40 {
        let n = rng.random_range(16..=80);
        let residuals = ResidualSeries::from_parts(white_noise(n, rng.random()), 2.0);
        let autocov = sample_autocov(&residuals, None).unwrap();
        let i0 = rng.random_range(0..n);
        let h = rng.random_range(1.5..(n as f64));
        let got = sizer::sandwich_slope_variance(n, i0, h, &kernel, &autocov).unwrap();
        let want = common::dense_sandwich_slope_var(n, i0, h, autocov.lags());
        assert!(
            ((got - want) / want.abs().max(1e-300)).abs() < 1e-9,
            "case {case} ({n}, {i0}, {h}): {got} vs {want}"
        );
    }

    // White autocovariance reduces to the independent-errors formula.
    for case in 0..20 {
        let n = rng.random_range(16..=80);
        let gamma0 = rng.random_range(0.2..4.0);
        let autocov = AutocovFn::white(gamma0, n).unwrap();
        let i0 = rng.random_range(0..n);
        let h = rng.random_range(1.5..(n as f64));
        let got = sizer::sandwich_slope_variance(n, i0, h, &kernel, &autocov).unwrap();
        let want = common::independent_slope_var(n, i0, h, gamma0);
        assert!(
            ((got - want) / want).abs() < 1e-9,
            "white case {case}: {got} vs {want}"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass("2 (sandwich variance oracle equivalence)");
}

/// Independently coded i.i.d. scale-space significance pipeline: own
/// weights, dense fits, independent-errors variance, quadrature quantile.
fn iid_oracle_classes(values: &[f64], grid: &[f64], gamma0: f64, alpha: f64) -> Vec<u8> {
    let n = values.len();
    let mut classes = Vec::with_capacity(grid.len() * n);
    for &h in grid {
        for i0 in 0..n {
            let ess = common::oracle_ess(n, i0, h);
            let (_, slope) = common::dense_wls_fit(values, i0, h);
            let sd = common::independent_slope_var(n, i0, h, gamma0).sqrt();
            let l = n as f64 / ess;
            let q = common::oracle_quantile_q(l, alpha);
            let code = if ess < 5.0 {
                3
            } else if slope - q * sd > 0.0 {
                0
            } else if slope + q * sd < 0.0 {
                1
            } else {
                2
            };
            classes.push(code);
        }
    }
    classes
}

#[test]
fn criterion_3_reduces_to_conventional_iid_pipeline() {
    let kernel = Kernel::gaussian();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for dataset in 0..10 {
        let n = rng.random_range(80..=130);
        // A trend plus noise so all four classes appear across scales.
        let slope_per_step = rng.random_range(-0.08..0.08);
        let wave = rng.random_range(0.5..2.5);
        let noise = white_noise(n, rng.random());
        let values: Vec<f64> = (0..n)
            .map(|i| {
                slope_per_step * i as f64
                    + wave * (i as f64 / 17.0).sin()
                    + noise[i]
            })
            .collect();
        let series = TimeSeries::new(values).unwrap();
        let mean = series.values().iter().sum::<f64>() / n as f64;
        let gamma0 =
            series.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;

        let grid = default_grid(n).unwrap();
        let dep =
            DependenceEstimate::new(AutocovFn::white(gamma0, n).unwrap(), n as f64).unwrap();
        let map = build_map(&series, &dep, &grid, 0.05, &kernel).unwrap();

        let oracle = iid_oracle_classes(series.values(), grid.bandwidths(), gamma0, 0.05);
        for row in 0..map.rows() {
            for col in 0..n {
                let got = map.class(row, col).code();
                let want = oracle[row * n + col];
                assert_eq!(
                    got, want,
                    "dataset {dataset}: pixel ({row}, {col}) class {got} vs oracle {want}"
                );
            }
        }
    }
    pass("3 (conventional i.i.d. reduction, pixel for pixel)");
}

#[test]
fn criterion_4_quantile_correctness() {
    let q = quantile_q(1.0, 0.05).unwrap();
    assert!((q - 1.959964).abs() < 1e-4, "q(1, 0.05) = {q}");
    // Against the quadrature oracle as well.
    assert!((q - common::oracle_quantile_q(1.0, 0.05)).abs() < 1e-9);
    let mut last = 0.0;
    for l in [1.0, 2.0, 5.0, 10.0, 100.0] {
        let q = quantile_q(l, 0.05).unwrap();
        assert!(q > last, "q not strictly increasing at l = {l}");
        last = q;
    }
    pass("4 (quantile correctness and monotonicity)");
}

/// Build the map of one series through the estimation pipeline: pilot
/// residuals at the middle bandwidth, dependence estimate, map.
fn pipeline_map(series: &TimeSeries, kernel: &Kernel) -> sizer::SiZerMap {
    let grid = default_grid(series.len()).unwrap();
    let h_p = grid.get(grid.len() / 2);
    let residuals = sizer::pilot_residuals(series, h_p, kernel).unwrap();
    let dep = DependenceEstimate::from_residuals(&residuals).unwrap();
    build_map(series, &dep, &grid, 0.05, kernel).unwrap()
}

#[test]
fn criterion_5_class_level_invariances() {
    let kernel = Kernel::gaussian();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for dataset in 0..10 {
        // Perfect-square lengths keep the grouped n* estimator exactly
        // reversal-symmetric (group count divides n).
        let n = if dataset % 2 == 0 { 100 } else { 144 };
        let trend_scale = rng.random_range(-0.05..0.05);
        let noise = white_noise(n, rng.random());
        let values: Vec<f64> = (0..n)
            .map(|i| trend_scale * i as f64 + (i as f64 / 11.0).sin() + noise[i])
            .collect();
        let series = TimeSeries::new(values).unwrap();
        let base = pipeline_map(&series, &kernel);

        // Shift invariance.
        let shifted = TimeSeries::new(series.values().iter().map(|v| v + 37.5).collect()).unwrap();
        let shifted_map = pipeline_map(&shifted, &kernel);
        for row in 0..base.rows() {
            for col in 0..n {
                assert_eq!(
                    base.class(row, col),
                    shifted_map.class(row, col),
                    "dataset {dataset}: shift changed pixel ({row}, {col})"
                );
            }
        }

        // Positive scale invariance.
        for c in [0.1, 3.0, 100.0] {
            let scaled =
                TimeSeries::new(series.values().iter().map(|v| c * v).collect()).unwrap();
            let scaled_map = pipeline_map(&scaled, &kernel);
            for row in 0..base.rows() {
                for col in 0..n {
                    assert_eq!(
                        base.class(row, col),
                        scaled_map.class(row, col),
                        "dataset {dataset}: scale {c} changed pixel ({row}, {col})"
                    );
                }
            }
        }

        // Time reversal mirrors the map and swaps Up and Down.
        let reversed_map = pipeline_map(&series.reversed(), &kernel);
        for row in 0..base.rows() {
            for col in 0..n {
                let want = match base.class(row, col) {
                    PixelClass::Up => PixelClass::Down,
                    PixelClass::Down => PixelClass::Up,
                    other => other,
                };
                assert_eq!(
                    reversed_map.class(row, n - 1 - col),
                    want,
                    "dataset {dataset}: reversal broke pixel ({row}, {col})"
                );
            }
        }
    }
    pass("5 (shift / scale / time-reversal class invariance)");
}

struct NoiseCase {
    label: &'static str,
    kind: NoiseKind,
}

fn study(kind: NoiseKind) -> StudySummary {
    let cfg = StudyConfig::new(
        sizer::TrendSpec::SineMinusRamp,
        kind,
        400,
        100,
        1,
    )
    .unwrap();
    assert_eq!(cfg.mode, SelectionMode::Robust);
    sizer::run_study(&cfg).unwrap()
}

fn majority_nonincreasing(summary: &StudySummary) -> f64 {
    let good = summary
        .replications
        .iter()
        .filter(|r| r.type1.windows(2).all(|w| w[0] >= w[1]))
        .count();
    good as f64 / summary.replications.len() as f64
}

#[test]
fn criterion_6_coverage_study_ranges() {
    let start = Instant::now();
    let cases = [
        NoiseCase {
            label: "white",
            kind: NoiseKind::White { sigma: 1.0 },
        },
        NoiseCase {
            label: "ma1",
            kind: NoiseKind::Ma1 {
                theta: 0.9,
                sigma: 1.0,
            },
        },
        NoiseCase {
            label: "fgn",
            kind: NoiseKind::Fgn {
                hurst: 0.9,
                sigma: 20.0f64.sqrt(),
            },
        },
    ];

    for case in cases {
        let summary = study(case.kind.clone());
        assert!(summary.failures.is_empty(), "{}: failed reps", case.label);
        assert_eq!(summary.replications.len(), 100);

        let mean_t1: Vec<f64> = summary.ranks.iter().map(|r| r.type1.mean).collect();
        // Mean type I error must not increase from hp1 to hp4.
        for w in mean_t1.windows(2) {
            assert!(
                w[0] >= w[1] - 1e-12,
                "{}: mean type1 not nonincreasing: {mean_t1:?}",
                case.label
            );
        }

        match case.label {
            "white" => {
                assert!(
                    mean_t1[0] <= 0.05,
                    "white hp1 mean type1 {} > 0.05",
                    mean_t1[0]
                );
                let power = summary.ranks[0].power.mean;
                assert!(
                    (0.60..=0.90).contains(&power),
                    "white hp1 mean power {power} outside [0.60, 0.90]"
                );
            }
            "ma1" => {
                let max_t1 = summary
                    .ranks
                    .iter()
                    .map(|r| r.type1.max)
                    .fold(0.0f64, f64::max);
                assert!(max_t1 <= 0.10, "ma1 max type1 {max_t1} > 0.10");
                let power = summary.ranks[0].power.mean;
                assert!(
                    (0.55..=0.85).contains(&power),
                    "ma1 hp1 mean power {power} outside [0.55, 0.85]"
                );
                let majority = majority_nonincreasing(&summary);
                assert!(
                    majority >= 0.60,
                    "ma1 within-replication monotone majority {majority} < 0.60"
                );
            }
            "fgn" => {
                assert!(
                    mean_t1[0] >= 0.15,
                    "fgn hp1 mean type1 {} < 0.15 (undercoverage expected)",
                    mean_t1[0]
                );
                let majority = majority_nonincreasing(&summary);
                assert!(
                    majority >= 0.60,
                    "fgn within-replication monotone majority {majority} < 0.60"
                );
            }
            _ => unreachable!(),
        }
        println!(
            "  {}: mean type1 by rank {:?}, hp1 mean power {:.4}",
            case.label, mean_t1, summary.ranks[0].power.mean
        );
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 900.0,
        "coverage study took {elapsed:?}, budget is 15 minutes"
    );
    pass("6 (coverage study reproduces the reference ranges)");
}

fn chocolate_csv() -> Option<std::path::PathBuf> {
    if let Ok(path) = std::env::var("SIZER_CHOCOLATE_CSV") {
        let path = std::path::PathBuf::from(path);
        if path.exists() {
            return Some(path);
        }
    }
    let fallback = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/chocolate.csv");
    fallback.exists().then_some(fallback)
}

/// The qualitative structure expected of the deseasonalized, detrended
/// monthly chocolate series: the lowest selected pilot flags the major
/// minimum near index 250 (a significant decrease followed by a significant
/// increase) at intermediate bandwidths, and the highest selected pilot
/// flags nothing except possibly an increase near the right end.
fn chocolate_structure_check(raw: &TimeSeries) -> Result<(), String> {
    let series = deseasonalize_detrend(raw, 12).map_err(|e| e.to_string())?;
    let n = series.len();
    let report = analyze(series, ReportMeta::default(), &AnalysisOptions::default())
        .map_err(|e| e.to_string())?;

    let low = &report.pilot(report.selection.chosen[0]).map;
    let mut found = false;
    for row in 3..8 {
        let mut down_at = None;
        for col in 0..n {
            match low.class(row, col) {
                PixelClass::Down if (150..300).contains(&col) => down_at = Some(col),
                PixelClass::Up => {
                    if let Some(d) = down_at {
                        if col > d && col < 350 {
                            found = true;
                        }
                    }
                }
                _ => {}
            }
        }
    }
    if !found {
        return Err("no down-then-up structure near index 250 in the lowest selected map".into());
    }

    let high = &report.pilot(report.selection.chosen[3]).map;
    for row in 0..high.rows() {
        for col in 0..n {
            match high.class(row, col) {
                PixelClass::Down => {
                    return Err(format!(
                        "unexpected significant decrease at ({row}, {col}) in the highest selected map"
                    ));
                }
                PixelClass::Up if col < (3 * n) / 4 => {
                    return Err(format!(
                        "significant increase away from the right end at ({row}, {col})"
                    ));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

#[test]
fn criterion_7_chocolate_qualitative_check() {
    let Some(path) = chocolate_csv() else {
        println!("ACCEPTANCE 7 (chocolate real-data check): SKIP (no CSV supplied; set SIZER_CHOCOLATE_CSV or add data/chocolate.csv)");
        return;
    };
    let raw = load_csv(&path, &ColumnSelector::Index(0), HeaderMode::Auto)
        .or_else(|_| load_csv(&path, &ColumnSelector::Index(1), HeaderMode::Auto))
        .expect("readable chocolate CSV");
    if let Err(msg) = chocolate_structure_check(&raw) {
        panic!("chocolate check failed: {msg}");
    }
    pass("7 (chocolate real-data qualitative check)");
}

/// Exercises the criterion-7 logic end to end on an engineered series with
/// the expected anatomy (seasonal cycle, rising trend, a deep valley near
/// index 250, a late surge, correlated noise), so the check itself stays
/// tested even when the real CSV is absent.
#[test]
fn chocolate_check_logic_accepts_an_engineered_series() {
    let n = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut ar = 0.0f64;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64;
            let z: f64 = rng.sample(StandardNormal);
            ar = 0.6 * ar + z;
            let seasonal = 6.0 * (2.0 * std::f64::consts::PI * t / 12.0).sin();
            let trend = 0.05 * t;
            let valley = -14.0 * (-0.5 * ((t - 250.0) / 28.0).powi(2)).exp();
            let surge = if i >= 360 { 0.25 * (t - 360.0) } else { 0.0 };
            seasonal + trend + valley + surge + 1.5 * ar
        })
        .collect();
    let raw = TimeSeries::new(values).unwrap();
    if let Err(msg) = chocolate_structure_check(&raw) {
        panic!("engineered series rejected: {msg}");
    }
}

#[test]
fn criterion_8_generator_fidelity_and_reproducibility() {
    // MA(1): lag-1 autocorrelation theta/(1+theta^2) within 0.02 at n=1e5.
    let spec = NoiseSpec {
        kind: NoiseKind::Ma1 {
            theta: 0.9,
            sigma: 1.0,
        },
        seed: 2,
    };
    let x = gen_noise(&spec, 100_000).unwrap();
    let acov =
        |x: &[f64], k: usize| (0..x.len() - k).map(|i| x[i] * x[i + k]).sum::<f64>() / x.len() as f64;
    let rho1 = acov(&x, 1) / acov(&x, 0);
    assert!((rho1 - 0.9 / 1.81).abs() < 0.02, "ma1 lag-1 {rho1}");

    // fGn: variance and lag-1 autocovariance within 5% of the closed form.
    let sigma = 20.0f64.sqrt();
    let spec = NoiseSpec {
        kind: NoiseKind::Fgn { hurst: 0.9, sigma },
        seed: 66,
    };
    let x = gen_noise(&spec, 1 << 14).unwrap();
    let var = acov(&x, 0);
    assert!((var - 20.0).abs() < 1.0, "fgn variance {var}");
    let want1 = 0.5 * 20.0 * (2.0f64.powf(1.8) - 2.0);
    let got1 = acov(&x, 1);
    assert!((got1 - want1).abs() < 0.05 * want1, "fgn lag-1 {got1} vs {want1}");

    // Bit reproducibility of every generator.
    for kind in [
        NoiseKind::White { sigma: 1.0 },
        NoiseKind::Ar2 {
            phi1: 1.261,
            phi2: -0.3,
            sigma: 20.0f64.sqrt(),
        },
        NoiseKind::Ma1 {
            theta: 0.9,
            sigma: 1.0,
        },
        NoiseKind::Fgn { hurst: 0.9, sigma },
    ] {
        let spec = NoiseSpec {
            kind,
            seed: 4242,
        };
        let a = gen_noise(&spec, 500).unwrap();
        let b = gen_noise(&spec, 500).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    pass("8 (generator fidelity and bit reproducibility)");
}
