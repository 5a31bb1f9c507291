//! Panel rendering: an SVG document mirroring the four-row diagnostic layout
//! (data / family / trade-off bars, then smooths, residuals, and maps of the
//! four chosen pilots), plus an ASCII form of the maps for terminals.

use crate::inference::{PixelClass, SiZerMap};
use crate::report::AnalysisReport;

/// Fixed map colors.
pub fn class_color(class: PixelClass) -> &'static str {
    match class {
        PixelClass::Up => "#000000",
        PixelClass::Down => "#FFFFFF",
        PixelClass::Flat => "#808080",
        PixelClass::Sparse => "#404040",
    }
}

/// Terminal characters for the four classes.
pub fn class_char(class: PixelClass) -> char {
    match class {
        PixelClass::Up => '#',
        PixelClass::Down => '.',
        PixelClass::Flat => '-',
        PixelClass::Sparse => '?',
    }
}

/// Widest map drawn without pooling.
pub const MAX_RENDER_COLUMNS: usize = 2000;

/// Class grid of a map with columns pooled down to at most `max_cols` by
/// majority vote (ties toward the smaller class code). Row order follows the
/// map (row 0 = finest bandwidth).
pub fn pooled_classes(map: &SiZerMap, max_cols: usize) -> Vec<Vec<PixelClass>> {
    let n = map.n();
    let cols = n.min(max_cols);
    (0..map.rows())
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let start = j * n / cols;
                    let end = ((j + 1) * n / cols).max(start + 1);
                    let mut counts = [0usize; 4];
                    for col in start..end {
                        counts[map.class(row, col).code() as usize] += 1;
                    }
                    let mut best = 0usize;
                    for code in 1..4 {
                        if counts[code] > counts[best] {
                            best = code;
                        }
                    }
                    PixelClass::from_code(best as u8).unwrap()
                })
                .collect()
        })
        .collect()
}

/// Character rendering of one map, coarse bandwidths on top.
pub fn ascii_map(map: &SiZerMap) -> String {
    let grid = pooled_classes(map, MAX_RENDER_COLUMNS);
    let mut out = String::new();
    for row in (0..grid.len()).rev() {
        for class in &grid[row] {
            out.push(class_char(*class));
        }
        out.push('\n');
    }
    out
}

const PANEL_W: f64 = 270.0;
const PANEL_H: f64 = 160.0;
const GAP_X: f64 = 18.0;
const GAP_Y: f64 = 40.0;
const MARGIN: f64 = 28.0;

struct Panel {
    x: f64,
    y: f64,
}

impl Panel {
    fn at(col: usize, row: usize) -> Self {
        Self {
            x: MARGIN + col as f64 * (PANEL_W + GAP_X),
            y: MARGIN + row as f64 * (PANEL_H + GAP_Y),
        }
    }

    /// Map normalized [0,1] coordinates into the panel (y inverted).
    fn px(&self, fx: f64) -> f64 {
        self.x + fx * PANEL_W
    }

    fn py(&self, fy: f64) -> f64 {
        self.y + (1.0 - fy) * PANEL_H
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

fn frame(out: &mut String, p: &Panel, title: &str) {
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        fmt(p.x),
        fmt(p.y),
        fmt(PANEL_W),
        fmt(PANEL_H)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"#111111\">{}</text>\n",
        fmt(p.x),
        fmt(p.y - 6.0),
        title
    ));
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn polyline(out: &mut String, p: &Panel, values: &[f64], lo: f64, hi: f64, style: &str) {
    let n = values.len();
    let mut points = String::new();
    for (i, v) in values.iter().enumerate() {
        let fx = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let fy = (v - lo) / (hi - lo);
        points.push_str(&format!("{},{} ", fmt(p.px(fx)), fmt(p.py(fy))));
    }
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" {}/>\n",
        points.trim_end(),
        style
    ));
}

fn data_panel(out: &mut String, p: &Panel, report: &AnalysisReport) {
    frame(out, p, "data");
    let values = report.series.values();
    let mut all = values.to_vec();
    if let Some(trend) = &report.meta.trend_overlay {
        all.extend_from_slice(trend);
    }
    let (lo, hi) = bounds(&all);
    polyline(out, p, values, lo, hi, "stroke=\"#555555\" stroke-width=\"0.8\"");
    if let Some(trend) = &report.meta.trend_overlay {
        polyline(out, p, trend, lo, hi, "stroke=\"#bb2200\" stroke-width=\"1.2\"");
    }
}

fn family_panel(out: &mut String, p: &Panel, report: &AnalysisReport) {
    frame(out, p, "family of smooths");
    let values = report.series.values();
    let (lo, hi) = bounds(values);
    polyline(out, p, values, lo, hi, "stroke=\"#cccccc\" stroke-width=\"0.8\"");
    for fits in &report.family {
        let levels: Vec<f64> = fits.iter().map(|f| f.level).collect();
        polyline(out, p, &levels, lo, hi, "stroke=\"#225588\" stroke-width=\"0.9\"");
    }
}

fn ir_panel(out: &mut String, p: &Panel, report: &AnalysisReport) {
    frame(out, p, "IR by pilot (chosen highlighted)");
    let count = report.pilots.len();
    let slot = PANEL_W / count as f64;
    for pilot in &report.pilots {
        let chosen = report.selection.chosen.contains(&pilot.number);
        let fill = if chosen { "#bb2200" } else { "#999999" };
        let bar_h = pilot.ir.clamp(0.0, 1.0) * (PANEL_H - 8.0);
        let x = p.x + (pilot.number - 1) as f64 * slot + 0.15 * slot;
        let y = p.y + PANEL_H - bar_h;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.5\"/>\n",
            fmt(x),
            fmt(y),
            fmt(0.7 * slot),
            fmt(bar_h),
            fill
        ));
    }
}

fn legend_panel(out: &mut String, p: &Panel) {
    frame(out, p, "map legend");
    let entries = [
        (PixelClass::Up, "increasing"),
        (PixelClass::Down, "decreasing"),
        (PixelClass::Flat, "indeterminate"),
        (PixelClass::Sparse, "too sparse"),
    ];
    for (i, (class, label)) in entries.iter().enumerate() {
        let y = p.y + 24.0 + i as f64 * 26.0;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"20\" height=\"20\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.7\"/>\n",
            fmt(p.x + 14.0),
            fmt(y),
            class_color(*class)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"#111111\">{}</text>\n",
            fmt(p.x + 44.0),
            fmt(y + 14.0),
            label
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"#111111\">maps: x = time index,</text>\n",
        fmt(p.x + 14.0),
        fmt(p.y + 134.0)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"#111111\">y = log h, coarse on top</text>\n",
        fmt(p.x + 14.0),
        fmt(p.y + 148.0)
    ));
}

fn smooth_panel(out: &mut String, p: &Panel, report: &AnalysisReport, number: usize) {
    let pilot = report.pilot(number);
    frame(
        out,
        p,
        &format!("smooth hp({number}) h={} IR={}", fmt(pilot.h_p), fmt(pilot.ir)),
    );
    let values = report.series.values();
    let (lo, hi) = bounds(values);
    polyline(out, p, values, lo, hi, "stroke=\"#cccccc\" stroke-width=\"0.8\"");
    let levels: Vec<f64> = report.family[number - 1].iter().map(|f| f.level).collect();
    polyline(out, p, &levels, lo, hi, "stroke=\"#225588\" stroke-width=\"1.2\"");
}

fn residual_panel(out: &mut String, p: &Panel, report: &AnalysisReport, number: usize) {
    let pilot = report.pilot(number);
    frame(out, p, &format!("residuals hp({number})"));
    let residuals = pilot.residuals.residuals();
    let (lo, hi) = bounds(residuals);
    let zero_fy = (0.0 - lo) / (hi - lo);
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbbbbb\" stroke-width=\"0.6\"/>\n",
        fmt(p.px(0.0)),
        fmt(p.py(zero_fy)),
        fmt(p.px(1.0)),
        fmt(p.py(zero_fy))
    ));
    polyline(out, p, residuals, lo, hi, "stroke=\"#444444\" stroke-width=\"0.7\"");
}

fn map_panel(out: &mut String, p: &Panel, report: &AnalysisReport, number: usize) {
    let pilot = report.pilot(number);
    frame(
        out,
        p,
        &format!("map hp({number}) n*={}", fmt(pilot.dep.n_star)),
    );
    let grid = pooled_classes(&pilot.map, MAX_RENDER_COLUMNS);
    let rows = grid.len();
    let cols = grid[0].len();
    let cell_w = PANEL_W / cols as f64;
    let cell_h = PANEL_H / rows as f64;
    for (row, classes) in grid.iter().enumerate() {
        // Coarse bandwidths at the top of the map.
        let y = p.y + (rows - 1 - row) as f64 * cell_h;
        for (j, class) in classes.iter().enumerate() {
            let x = p.x + j as f64 * cell_w;
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                fmt(x),
                fmt(y),
                fmt(cell_w + 0.05),
                fmt(cell_h + 0.05),
                class_color(*class)
            ));
        }
    }
    // Redraw the frame over the cells.
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        fmt(p.x),
        fmt(p.y),
        fmt(PANEL_W),
        fmt(PANEL_H)
    ));
}

/// Render the full diagnostic panel as a standalone SVG document. The output
/// is a pure function of the report, byte for byte.
pub fn render_panel(report: &AnalysisReport) -> String {
    let width = MARGIN * 2.0 + 4.0 * PANEL_W + 3.0 * GAP_X;
    let height = MARGIN * 2.0 + 4.0 * PANEL_H + 3.0 * GAP_Y + 12.0;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        fmt(width),
        fmt(height)
    ));

    data_panel(&mut out, &Panel::at(0, 0), report);
    family_panel(&mut out, &Panel::at(1, 0), report);
    ir_panel(&mut out, &Panel::at(2, 0), report);
    legend_panel(&mut out, &Panel::at(3, 0));

    for (col, number) in report.selection.chosen.iter().enumerate() {
        smooth_panel(&mut out, &Panel::at(col, 1), report, *number);
        residual_panel(&mut out, &Panel::at(col, 2), report, *number);
        map_panel(&mut out, &Panel::at(col, 3), report, *number);
    }

    out.push_str("</svg>\n");
    out
}
