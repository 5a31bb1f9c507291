//! The residual trade-off statistic over the pilot bandwidths and the rule
//! choosing four representative pilots.
//!
//! `IR(h_p)` is the pilot residual sum of squares normalized by its maximum
//! over pilots: near 0 the structure of the data is treated as trend, near 1
//! as dependence. Four pilots whose IR values are closest to 0%, 25%, 50%
//! and 75% span the range of trade-offs.

use crate::dependence::{DependenceEstimate, ResidualSeries};
use crate::error::{Result, SizerError};
use crate::inference::SiZerMap;

/// Everything computed for one pilot bandwidth.
#[derive(Debug, Clone)]
pub struct PilotAnalysis {
    /// 1-based pilot number in grid order (pilot 1 = smallest bandwidth).
    pub number: usize,
    pub h_p: f64,
    pub residuals: ResidualSeries,
    pub dep: DependenceEstimate,
    pub map: SiZerMap,
    pub ir: f64,
}

/// How the anchor pilot is picked.
///
/// The first-plot rule always shows the finest pilot. Its residuals can be
/// badly overfit when the data are positively correlated, so the robust rule
/// anchors on pilot 2 instead and, when pilot 2 is also the nearest to the
/// 25% target, respaces the remaining targets between `ir[2]` and the last
/// pilot's IR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionMode {
    FirstPlot,
    #[default]
    Robust,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::FirstPlot => "first-plot",
            SelectionMode::Robust => "robust",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "first-plot" => Some(SelectionMode::FirstPlot),
            "robust" => Some(SelectionMode::Robust),
            _ => None,
        }
    }
}

/// The four chosen pilots, in increasing pilot number, plus the IR targets
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// 1-based pilot numbers, strictly increasing, length 4.
    pub chosen: Vec<usize>,
    pub mode: SelectionMode,
    /// The anchor target (0%) followed by the three interior targets, which
    /// the robust mode may have respaced.
    pub targets: [f64; 4],
}

/// `IR(h_p) = ss(h_p) / max_p ss(p)`, elementwise over the pilot grid.
pub fn compute_ir(ss: &[f64]) -> Result<Vec<f64>> {
    if ss.is_empty() {
        return Err(SizerError::InvalidParameter("empty residual sums".into()));
    }
    let mut max = 0.0f64;
    for (i, v) in ss.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(SizerError::InvalidParameter(format!(
                "residual sum of squares at pilot {} must be finite and nonnegative, got {v}",
                i + 1
            )));
        }
        max = max.max(*v);
    }
    if max == 0.0 {
        return Err(SizerError::AllResidualsZero);
    }
    Ok(ss.iter().map(|v| v / max).collect())
}

/// Index (1-based) of the unused pilot whose IR is nearest to `target`,
/// searching `first..=ir.len()`. Ties break toward the smaller index; used
/// indices are skipped, which is the next-nearest-unused duplicate rule.
fn nearest_unused(ir: &[f64], target: f64, first: usize, used: &[bool]) -> usize {
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for number in first..=ir.len() {
        if used[number - 1] {
            continue;
        }
        let dist = (ir[number - 1] - target).abs();
        if dist < best_dist {
            best = number;
            best_dist = dist;
        }
    }
    best
}

/// Choose 4 of the pilots by their IR values.
pub fn select_pilots(ir: &[f64], mode: SelectionMode) -> Result<SelectionResult> {
    let count = ir.len();
    let needed = match mode {
        SelectionMode::FirstPlot => 4,
        SelectionMode::Robust => 5, // pilot 1 is never selectable
    };
    if count < needed {
        return Err(SizerError::InvalidParameter(format!(
            "need at least {needed} pilots for {} selection, got {count}",
            mode.as_str()
        )));
    }
    for v in ir {
        if !v.is_finite() {
            return Err(SizerError::InvalidParameter(
                "IR values must be finite".into(),
            ));
        }
    }

    let mut used = vec![false; count];
    let mut chosen = Vec::with_capacity(4);
    let (first, interior_targets) = match mode {
        SelectionMode::FirstPlot => {
            used[0] = true;
            chosen.push(1);
            (1, [0.25, 0.5, 0.75])
        }
        SelectionMode::Robust => {
            // Anchor on pilot 2. If pilot 2 is also the nearest selectable
            // pilot to the 25% target, respace the remaining targets across
            // [ir(2), ir(last)].
            let respace = nearest_unused(ir, 0.25, 2, &used) == 2;
            used[1] = true;
            chosen.push(2);
            let targets = if respace {
                let lo = ir[1];
                let span = ir[count - 1] - ir[1];
                [
                    lo + 0.25 * span,
                    lo + 0.5 * span,
                    lo + 0.75 * span,
                ]
            } else {
                [0.25, 0.5, 0.75]
            };
            (2, targets)
        }
    };

    for target in interior_targets {
        let pick = nearest_unused(ir, target, first, &used);
        used[pick - 1] = true;
        chosen.push(pick);
    }
    chosen.sort_unstable();

    Ok(SelectionResult {
        chosen,
        mode,
        targets: [
            0.0,
            interior_targets[0],
            interior_targets[1],
            interior_targets[2],
        ],
    })
}
