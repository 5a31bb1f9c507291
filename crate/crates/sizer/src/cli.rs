//! Command-line interface: `analyze`, `simulate`, and `evaluate`.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use crate::error::SizerError;
use crate::io::{
    export_report, load_csv, study_table_csv, write_series_csv, write_study_csv, ColumnSelector,
    HeaderMode,
};
use crate::preprocess::{deseasonalize, deseasonalize_detrend, linear_detrend};
use crate::render::{ascii_map, render_panel};
use crate::report::{analyze, AnalysisOptions, ReportMeta};
use crate::selection::SelectionMode;
use crate::sim::{ar2_from_lag1, gen_noise, gen_trend, run_study, NoiseKind, NoiseSpec, StudyConfig, TrendSpec};

const USAGE: &str = "\
sizer - scale-space significance maps for trends in time series

USAGE:
  sizer analyze <data.csv> [options]     full analysis of a CSV series
  sizer simulate [options]               emit a simulated series as CSV
  sizer evaluate [options]               coverage study (type I error / power table)
  sizer help                             print this message

ANALYZE OPTIONS:
  --column C          CSV column, by 0-based index or by header name (default 0)
  --header MODE       auto | yes | no (default auto)
  --deseasonalize P   subtract per-phase means with period P before analysis
  --detrend           subtract the least-squares line before analysis
                      (with --deseasonalize, both are removed in one joint fit)
  --alpha A           significance level (default 0.05)
  --h-min V           smallest bandwidth (default 2)
  --h-max V           largest bandwidth (default n/2)
  --count N           number of bandwidths, odd (default 11)
  --mode M            pilot selection: first-plot | robust (default robust)
  --svg PATH          write the diagnostic panel as SVG
  --json PATH         write the report as JSON
  --ascii             print the four selected maps as text
                      (# up, . down, - flat, ? sparse)

SIMULATE OPTIONS:
  --trend T           eq7 | eq9 | csv (csv requires --trend-csv)
  --trend-csv PATH    trend samples for --trend csv
  --noise K           white | ar2 | ma1 | fgn
  --n N               series length
  --seed S            RNG seed (64-bit)
  --out PATH          output CSV (stdout when omitted)
  --sigma V           marginal standard deviation
                      (defaults: white/ma1 1, ar2/fgn sqrt(20))
  --theta V           MA(1) coefficient (default 0.9)
  --hurst V           Hurst exponent (default 0.9)
  --rho1 V            AR(2) target lag-1 autocorrelation (default 0.97)
  --phi1 V            AR(2) coefficient (overrides --rho1)
  --phi2 V            AR(2) second coefficient (default -0.3)

EVALUATE OPTIONS:
  --trend T           trend preset (default eq9)
  --noise K           white | ar2 | ma1 | fgn
  --reps R            number of replications
  --seed S            master seed
  --n N               series length (default 400)
  --alpha A           significance level (default 0.05)
  --mode M            pilot selection (default robust)
  --h-min/--h-max/--count   bandwidth grid (defaults 2 / n/2 / 11)
  --out PATH          table CSV (stdout when omitted)
  noise parameter flags as for simulate

COMMON:
  --config PATH       key = value file; command-line flags take precedence
";

/// Entry point; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let Some((command, rest)) = args.split_first() else {
        eprint!("{USAGE}");
        return 1;
    };
    match command.as_str() {
        "help" | "--help" | "-h" => {
            print!("{USAGE}");
            0
        }
        "analyze" => dispatch(rest, cmd_analyze),
        "simulate" => dispatch(rest, cmd_simulate),
        "evaluate" => dispatch(rest, cmd_evaluate),
        other => {
            eprintln!("unknown command: {other}\n");
            eprint!("{USAGE}");
            1
        }
    }
}

fn dispatch(args: &[String], cmd: fn(&Flags) -> std::result::Result<(), CliError>) -> i32 {
    match Flags::parse(args).and_then(|flags| cmd(&flags)) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}\n");
            eprint!("{USAGE}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(SizerError),
}

impl From<SizerError> for CliError {
    fn from(e: SizerError) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

const VALUE_FLAGS: &[&str] = &[
    "column", "header", "deseasonalize", "alpha", "h-min", "h-max", "count", "mode", "svg",
    "json", "trend", "trend-csv", "noise", "n", "seed", "out", "sigma", "theta", "hurst", "rho1",
    "phi1", "phi2", "reps", "config",
];
const BOOL_FLAGS: &[&str] = &["detrend", "ascii"];

/// Parsed flags: positionals plus key/value and boolean switches, with an
/// optional config file merged in underneath the command line.
struct Flags {
    positional: Vec<String>,
    values: HashMap<String, String>,
    switches: HashSet<String>,
}

impl Flags {
    fn parse(args: &[String]) -> std::result::Result<Self, CliError> {
        let mut positional = Vec::new();
        let mut values = HashMap::new();
        let mut switches = HashSet::new();
        let mut iter = args.iter();
        while let Some(arg) = iter.next() {
            if let Some(name) = arg.strip_prefix("--") {
                if BOOL_FLAGS.contains(&name) {
                    switches.insert(name.to_string());
                } else if VALUE_FLAGS.contains(&name) {
                    let value = iter
                        .next()
                        .ok_or_else(|| usage(format!("--{name} requires a value")))?;
                    values.insert(name.to_string(), value.clone());
                } else {
                    return Err(usage(format!("unknown flag --{name}")));
                }
            } else {
                positional.push(arg.clone());
            }
        }
        let mut flags = Self {
            positional,
            values,
            switches,
        };
        flags.merge_config()?;
        Ok(flags)
    }

    /// Fill in defaults from an optional `key = value` config file; the
    /// command line wins on conflicts.
    fn merge_config(&mut self) -> std::result::Result<(), CliError> {
        let Some(path) = self.values.get("config").cloned() else {
            return Ok(());
        };
        let text = std::fs::read_to_string(&path).map_err(|e| {
            CliError::Runtime(SizerError::Io {
                path: path.clone(),
                source: e,
            })
        })?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "{path}: line {}: expected key = value",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if BOOL_FLAGS.contains(&key) {
                if value == "true" && !self.switches.contains(key) {
                    self.switches.insert(key.to_string());
                }
            } else if VALUE_FLAGS.contains(&key) {
                self.values
                    .entry(key.to_string())
                    .or_insert_with(|| value.to_string());
            } else {
                return Err(usage(format!("{path}: line {}: unknown key {key}", lineno + 1)));
            }
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    fn has(&self, name: &str) -> bool {
        self.switches.contains(name)
    }

    fn parse_value<T: std::str::FromStr>(
        &self,
        name: &str,
    ) -> std::result::Result<Option<T>, CliError> {
        match self.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| usage(format!("--{name}: cannot parse {raw:?}"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, name: &str) -> std::result::Result<T, CliError> {
        self.parse_value(name)?
            .ok_or_else(|| usage(format!("--{name} is required")))
    }
}

fn parse_mode(flags: &Flags, default: SelectionMode) -> std::result::Result<SelectionMode, CliError> {
    match flags.get("mode") {
        None => Ok(default),
        Some(raw) => SelectionMode::parse(raw)
            .ok_or_else(|| usage(format!("--mode must be first-plot or robust, got {raw:?}"))),
    }
}

fn parse_header(flags: &Flags) -> std::result::Result<HeaderMode, CliError> {
    match flags.get("header") {
        None | Some("auto") => Ok(HeaderMode::Auto),
        Some("yes") => Ok(HeaderMode::Header),
        Some("no") => Ok(HeaderMode::NoHeader),
        Some(other) => Err(usage(format!("--header must be auto, yes or no, got {other:?}"))),
    }
}

fn parse_column(flags: &Flags) -> ColumnSelector {
    match flags.get("column") {
        None => ColumnSelector::Index(0),
        Some(raw) => match raw.parse::<usize>() {
            Ok(idx) => ColumnSelector::Index(idx),
            Err(_) => ColumnSelector::Name(raw.to_string()),
        },
    }
}

fn grid_options(flags: &Flags, opts: &mut AnalysisOptions) -> std::result::Result<(), CliError> {
    if let Some(h_min) = flags.parse_value::<f64>("h-min")? {
        opts.h_min = h_min;
    }
    opts.h_max = flags.parse_value::<f64>("h-max")?;
    if let Some(count) = flags.parse_value::<usize>("count")? {
        opts.count = count;
    }
    if let Some(alpha) = flags.parse_value::<f64>("alpha")? {
        opts.alpha = alpha;
    }
    Ok(())
}

fn parse_trend(flags: &Flags, n: Option<usize>) -> std::result::Result<(TrendSpec, Option<usize>), CliError> {
    match flags.get("trend") {
        None | Some("eq9") => Ok((TrendSpec::SineMinusRamp, n)),
        Some("eq7") => Ok((TrendSpec::LinearPlusSine, n)),
        Some("csv") => {
            let path = flags
                .get("trend-csv")
                .ok_or_else(|| usage("--trend csv requires --trend-csv PATH"))?;
            let series = load_csv(
                Path::new(path),
                &parse_column(flags),
                parse_header(flags)?,
            )?;
            let len = series.len();
            if let Some(n) = n {
                if n != len {
                    return Err(usage(format!(
                        "--n {n} does not match the {len} rows of {path}"
                    )));
                }
            }
            Ok((TrendSpec::Custom(series.values().to_vec()), Some(len)))
        }
        Some(other) => Err(usage(format!("--trend must be eq7, eq9 or csv, got {other:?}"))),
    }
}

fn parse_noise(flags: &Flags) -> std::result::Result<NoiseKind, CliError> {
    let name = flags
        .get("noise")
        .ok_or_else(|| usage("--noise is required"))?;
    let sigma = flags.parse_value::<f64>("sigma")?;
    match name {
        "white" => Ok(NoiseKind::White {
            sigma: sigma.unwrap_or(1.0),
        }),
        "ma1" => Ok(NoiseKind::Ma1 {
            theta: flags.parse_value::<f64>("theta")?.unwrap_or(0.9),
            sigma: sigma.unwrap_or(1.0),
        }),
        "fgn" => Ok(NoiseKind::Fgn {
            hurst: flags.parse_value::<f64>("hurst")?.unwrap_or(0.9),
            sigma: sigma.unwrap_or(20.0f64.sqrt()),
        }),
        "ar2" => {
            let phi2 = flags.parse_value::<f64>("phi2")?.unwrap_or(-0.3);
            let phi1 = match flags.parse_value::<f64>("phi1")? {
                Some(phi1) => phi1,
                None => {
                    let rho1 = flags.parse_value::<f64>("rho1")?.unwrap_or(0.97);
                    ar2_from_lag1(rho1, phi2)?.0
                }
            };
            Ok(NoiseKind::Ar2 {
                phi1,
                phi2,
                sigma: sigma.unwrap_or(20.0f64.sqrt()),
            })
        }
        other => Err(usage(format!(
            "--noise must be white, ar2, ma1 or fgn, got {other:?}"
        ))),
    }
}

fn cmd_analyze(flags: &Flags) -> std::result::Result<(), CliError> {
    let [input] = &flags.positional[..] else {
        return Err(usage("analyze expects exactly one CSV path"));
    };
    let input = PathBuf::from(input);
    let mut series = load_csv(&input, &parse_column(flags), parse_header(flags)?)?;

    let mut preprocessing = Vec::new();
    let period = flags.parse_value::<usize>("deseasonalize")?;
    let detrend = flags.has("detrend");
    match (period, detrend) {
        (Some(period), true) => {
            series = deseasonalize_detrend(&series, period)?;
            preprocessing.push(format!("deseasonalize({period})"));
            preprocessing.push("detrend".to_string());
        }
        (Some(period), false) => {
            series = deseasonalize(&series, period)?;
            preprocessing.push(format!("deseasonalize({period})"));
        }
        (None, true) => {
            series = linear_detrend(&series)?;
            preprocessing.push("detrend".to_string());
        }
        (None, false) => {}
    }

    let mut opts = AnalysisOptions {
        mode: parse_mode(flags, SelectionMode::Robust)?,
        ..AnalysisOptions::default()
    };
    grid_options(flags, &mut opts)?;

    let meta = ReportMeta {
        source: input.display().to_string(),
        preprocessing,
        trend_overlay: None,
    };
    let report = analyze(series, meta, &opts)?;

    println!(
        "n = {}, bandwidths = [{:.3}, {:.3}] x{}, alpha = {}, mode = {}",
        report.series.len(),
        report.grid.get(0),
        report.grid.get(report.grid.len() - 1),
        report.grid.len(),
        report.alpha,
        report.selection.mode.as_str()
    );
    println!("pilot     h_p        IR        n*");
    for pilot in &report.pilots {
        let mark = if report.selection.chosen.contains(&pilot.number) {
            '*'
        } else {
            ' '
        };
        println!(
            "{mark}{:>4}  {:>8.3}  {:>8.4}  {:>8.1}",
            pilot.number, pilot.h_p, pilot.ir, pilot.dep.n_star
        );
    }
    println!(
        "chosen: {}",
        report
            .selection
            .chosen
            .iter()
            .map(|k| format!("hp({k})"))
            .collect::<Vec<_>>()
            .join(" ")
    );

    if flags.has("ascii") {
        for number in &report.selection.chosen {
            let pilot = report.pilot(*number);
            println!(
                "\nhp({number}) h_p = {:.3}, IR = {:.4}, n* = {:.1} (coarse scale on top)",
                pilot.h_p, pilot.ir, pilot.dep.n_star
            );
            print!("{}", ascii_map(&pilot.map));
        }
    }
    if let Some(path) = flags.get("svg") {
        std::fs::write(path, render_panel(&report)).map_err(|e| SizerError::Io {
            path: path.to_string(),
            source: e,
        })?;
        println!("wrote {path}");
    }
    if let Some(path) = flags.get("json") {
        export_report(&report, Path::new(path))?;
        println!("wrote {path}");
    }
    Ok(())
}

fn cmd_simulate(flags: &Flags) -> std::result::Result<(), CliError> {
    if !flags.positional.is_empty() {
        return Err(usage("simulate takes no positional arguments"));
    }
    let n_flag = flags.parse_value::<usize>("n")?;
    let (trend_spec, inferred_n) = parse_trend(flags, n_flag)?;
    let n = inferred_n.ok_or_else(|| usage("--n is required"))?;
    let seed: u64 = flags.require("seed")?;
    let noise = NoiseSpec {
        kind: parse_noise(flags)?,
        seed,
    };
    let trend = gen_trend(&trend_spec, n)?;
    let eps = gen_noise(&noise, n)?;
    let values: Vec<f64> = trend.iter().zip(&eps).map(|(m, e)| m + e).collect();

    match flags.get("out") {
        Some(path) => {
            write_series_csv(Path::new(path), &values)?;
            println!("wrote {n} rows to {path}");
        }
        None => {
            let mut text = String::new();
            for v in &values {
                text.push_str(&format!("{v}\n"));
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn cmd_evaluate(flags: &Flags) -> std::result::Result<(), CliError> {
    if !flags.positional.is_empty() {
        return Err(usage("evaluate takes no positional arguments"));
    }
    let n = flags.parse_value::<usize>("n")?.unwrap_or(400);
    let (trend, _) = parse_trend(flags, Some(n))?;
    let noise = parse_noise(flags)?;
    let reps: usize = flags.require("reps")?;
    let seed: u64 = flags.require("seed")?;

    let mut cfg = StudyConfig::new(trend, noise, n, reps, seed)?;
    cfg.mode = parse_mode(flags, SelectionMode::Robust)?;
    if let Some(alpha) = flags.parse_value::<f64>("alpha")? {
        cfg.alpha = alpha;
    }
    let h_min = flags.parse_value::<f64>("h-min")?.unwrap_or(2.0);
    let h_max = flags
        .parse_value::<f64>("h-max")?
        .unwrap_or(n as f64 / 2.0);
    let count = flags.parse_value::<usize>("count")?.unwrap_or(11);
    cfg.grid = crate::scale_space::make_bandwidth_grid(count, h_min, h_max)?;

    let summary = run_study(&cfg)?;
    if !summary.failures.is_empty() {
        eprintln!(
            "warning: {} of {} replications failed; first: replication {}: {}",
            summary.failures.len(),
            reps,
            summary.failures[0].0,
            summary.failures[0].1
        );
    }
    match flags.get("out") {
        Some(path) => {
            write_study_csv(Path::new(path), &summary)?;
            println!("wrote {path}");
        }
        None => print!("{}", study_table_csv(&summary)),
    }
    Ok(())
}
