//! CSV ingestion, report persistence, and the study table writer.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SizerError};
use crate::report::AnalysisReport;
use crate::series::TimeSeries;
use crate::sim::StudySummary;

/// Which CSV column holds the observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

/// Header handling for [`load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// First row is a header when its selected cell does not parse as a
    /// number. Selecting a column by name forces a header.
    #[default]
    Auto,
    Header,
    NoHeader,
}

fn io_err(path: &Path, source: std::io::Error) -> SizerError {
    SizerError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, row: usize, msg: impl Into<String>) -> SizerError {
    SizerError::Csv {
        path: path.display().to_string(),
        row,
        msg: msg.into(),
    }
}

fn split_fields(line: &str) -> Vec<String> {
    line.split(',')
        .map(|f| {
            let trimmed = f.trim();
            let unquoted = trimmed
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(trimmed);
            unquoted.to_string()
        })
        .collect()
}

/// Read one column of a comma-separated UTF-8 file as a time series, in file
/// order. Parse failures name the 1-based file row.
pub fn load_csv(path: &Path, column: &ColumnSelector, header: HeaderMode) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if lines.is_empty() {
        return Err(csv_err(path, 1, "file is empty"));
    }

    let first_fields = split_fields(lines[0].1);
    let (col_index, has_header) = match column {
        ColumnSelector::Name(name) => {
            if header == HeaderMode::NoHeader {
                return Err(SizerError::InvalidParameter(format!(
                    "column selected by name ({name}) requires a header row"
                )));
            }
            let idx = first_fields
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| {
                    csv_err(
                        path,
                        lines[0].0,
                        format!("no column named {name:?} in header: {first_fields:?}"),
                    )
                })?;
            (idx, true)
        }
        ColumnSelector::Index(idx) => {
            let has_header = match header {
                HeaderMode::Header => true,
                HeaderMode::NoHeader => false,
                HeaderMode::Auto => {
                    let cell = first_fields.get(*idx).map(String::as_str).unwrap_or("");
                    cell.parse::<f64>().is_err()
                }
            };
            (*idx, has_header)
        }
    };

    let data_lines = if has_header { &lines[1..] } else { &lines[..] };
    let mut values = Vec::with_capacity(data_lines.len());
    for (row, line) in data_lines {
        let fields = split_fields(line);
        let cell = fields.get(col_index).ok_or_else(|| {
            csv_err(
                path,
                *row,
                format!("missing column {col_index} ({} fields)", fields.len()),
            )
        })?;
        let value: f64 = cell.parse().map_err(|_| {
            csv_err(path, *row, format!("cannot parse {cell:?} as a number"))
        })?;
        if !value.is_finite() {
            return Err(csv_err(path, *row, format!("non-finite value {cell:?}")));
        }
        values.push(value);
    }
    TimeSeries::new(values)
}

/// Write a headerless single-column CSV, one value per row, full precision.
pub fn write_series_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut text = String::new();
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Serialized analysis report. Pilot maps are stored as `[rows][n]` integer
/// class codes (0 = up, 1 = down, 2 = flat, 3 = sparse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub meta: MetaDoc,
    pub grid: Vec<f64>,
    pub pilots: Vec<PilotDoc>,
    pub selection: SelectionDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaDoc {
    pub source: String,
    pub preprocessing: Vec<String>,
    pub n: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotDoc {
    pub h_p: f64,
    pub ir: f64,
    pub n_star: f64,
    pub map: Vec<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDoc {
    pub mode: String,
    /// 1-based pilot numbers.
    pub chosen: Vec<usize>,
    pub targets: Vec<f64>,
}

/// Flatten a report into its serializable document.
pub fn report_doc(report: &AnalysisReport) -> ReportDoc {
    ReportDoc {
        meta: MetaDoc {
            source: report.meta.source.clone(),
            preprocessing: report.meta.preprocessing.clone(),
            n: report.series.len(),
            alpha: report.alpha,
        },
        grid: report.grid.bandwidths().to_vec(),
        pilots: report
            .pilots
            .iter()
            .map(|p| PilotDoc {
                h_p: p.h_p,
                ir: p.ir,
                n_star: p.dep.n_star,
                map: (0..p.map.rows())
                    .map(|row| {
                        (0..p.map.n())
                            .map(|col| p.map.class(row, col).code())
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
        selection: SelectionDoc {
            mode: report.selection.mode.as_str().to_string(),
            chosen: report.selection.chosen.clone(),
            targets: report.selection.targets.to_vec(),
        },
    }
}

/// Write the report document as JSON.
pub fn export_report(report: &AnalysisReport, path: &Path) -> Result<()> {
    let doc = report_doc(report);
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| SizerError::Internal(format!("report serialization failed: {e}")))?;
    fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

/// Read a report document back.
pub fn read_report(path: &Path) -> Result<ReportDoc> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        csv_err(path, e.line(), format!("invalid report JSON: {e}"))
    })
}

/// Study table: one row per selected-pilot rank with the summary statistics
/// of the two rates.
pub fn study_table_csv(summary: &StudySummary) -> String {
    let mut out = String::from(
        "rank,type1_mean,type1_median,type1_max,type1_min,power_mean,power_median,power_max,power_min\n",
    );
    for (i, rank) in summary.ranks.iter().enumerate() {
        out.push_str(&format!(
            "hp{},{},{},{},{},{},{},{},{}\n",
            i + 1,
            rank.type1.mean,
            rank.type1.median,
            rank.type1.max,
            rank.type1.min,
            rank.power.mean,
            rank.power.median,
            rank.power.max,
            rank.power.min,
        ));
    }
    out
}

pub fn write_study_csv(path: &Path, summary: &StudySummary) -> Result<()> {
    fs::write(path, study_table_csv(summary)).map_err(|e| io_err(path, e))
}
