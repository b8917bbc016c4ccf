//! Static SVG line charts of batch time series.
//!
//! Every panel draws each run as a thin coloured line and the cross-run
//! mean as a heavy black line. Lines break where a value is absent.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::{AggregateRound, BatchResult};
use crate::io::number::format_sig9;
use crate::metrics::{RoundMetrics, VALUE_COLUMNS};
use crate::scalar::Scalar;

type Values = [Option<f64>; VALUE_COLUMNS];

/// One plotted quantity, read from a row of value columns.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub title: &'static str,
    extract: fn(&Values) -> Option<f64>,
}

impl Panel {
    pub fn value(&self, row: &Values) -> Option<f64> {
        (self.extract)(row)
    }
}

macro_rules! column_panel {
    ($title:expr, $idx:expr) => {
        Panel {
            title: $title,
            extract: |v| v[$idx],
        }
    };
}

const SANCTION_ENERGY: Panel = Panel {
    title: "sanction energy (damage + cost)",
    extract: |v| Some(v[15]? + v[16]?),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Bite size, its variance, population, hypocrisy, sanction energy, noise.
    Overview,
    Traits,
    Variances,
    Noise,
}

impl FigureKind {
    pub const ALL: [FigureKind; 4] = [
        FigureKind::Overview,
        FigureKind::Traits,
        FigureKind::Variances,
        FigureKind::Noise,
    ];

    pub fn stem(self) -> &'static str {
        match self {
            FigureKind::Overview => "overview",
            FigureKind::Traits => "traits",
            FigureKind::Variances => "variances",
            FigureKind::Noise => "noise",
        }
    }

    pub fn panels(self) -> Vec<Panel> {
        match self {
            FigureKind::Overview => vec![
                column_panel!("mean bite size", 2),
                column_panel!("bite size variance", 3),
                column_panel!("population", 0),
                column_panel!("hypocrite fraction", 14),
                SANCTION_ENERGY,
                column_panel!("mean bite noise", 8),
            ],
            FigureKind::Traits => vec![
                column_panel!("mean bite size", 2),
                column_panel!("mean sanction threshold", 4),
                column_panel!("mean sanction strength", 6),
            ],
            FigureKind::Variances => vec![
                column_panel!("bite size variance", 3),
                column_panel!("sanction threshold variance", 5),
                column_panel!("sanction strength variance", 7),
            ],
            FigureKind::Noise => vec![
                column_panel!("mean bite noise", 8),
                column_panel!("mean threshold noise", 10),
                column_panel!("mean strength noise", 12),
            ],
        }
    }
}

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 34.0;
const TITLE_H: f64 = 30.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

type Points = Vec<(f64, Option<f64>)>;

struct Frame {
    x0: f64,
    y0: f64,
    x_max: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = PANEL_W - MARGIN_L - MARGIN_R;
        self.x0
            + MARGIN_L
            + if self.x_max > 0.0 {
                x / self.x_max * w
            } else {
                0.0
            }
    }

    fn py(&self, y: f64) -> f64 {
        let h = PANEL_H - MARGIN_T - MARGIN_B;
        self.y0 + MARGIN_T + h - (y - self.y_lo) / (self.y_hi - self.y_lo) * h
    }
}

fn y_range(series: &[&Points]) -> Option<(f64, f64)> {
    let mut it = series
        .iter()
        .flat_map(|s| s.iter().filter_map(|p| p.1))
        .filter(|y| y.is_finite());
    let first = it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), y| (lo.min(y), hi.max(y)));
    if hi > lo {
        let pad = (hi - lo) * 0.04;
        Some((lo - pad, hi + pad))
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        Some((lo - pad, hi + pad))
    }
}

fn polylines(out: &mut String, frame: &Frame, points: &Points, style: &str) {
    let mut segment = String::new();
    let flush = |segment: &mut String, out: &mut String| {
        if !segment.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline {style} points="{}"/>"#,
                segment.trim_end()
            );
            segment.clear();
        }
    };
    for &(x, y) in points {
        match y.filter(|y| y.is_finite()) {
            Some(y) => {
                let _ = write!(segment, "{:.2},{:.2} ", frame.px(x), frame.py(y));
            }
            None => flush(&mut segment, out),
        }
    }
    flush(&mut segment, out);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn draw_panel(out: &mut String, x0: f64, y0: f64, panel: &Panel, runs: &[Points], mean: &Points) {
    let _ = writeln!(out, r#"<g class="panel">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        x0 + PANEL_W / 2.0,
        y0 + 18.0,
        escape(panel.title)
    );
    let x_max = runs
        .iter()
        .chain(std::iter::once(mean))
        .flat_map(|s| s.last().map(|p| p.0))
        .fold(0.0, f64::max);
    let all: Vec<&Points> = runs.iter().chain(std::iter::once(mean)).collect();
    let Some((y_lo, y_hi)) = y_range(&all) else {
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-size="12" fill="#888" text-anchor="middle">no data</text>"##,
            x0 + PANEL_W / 2.0,
            y0 + PANEL_H / 2.0
        );
        let _ = writeln!(out, "</g>");
        return;
    };
    let f = Frame {
        x0,
        y0,
        x_max,
        y_lo,
        y_hi,
    };
    let (left, right) = (f.px(0.0), f.px(x_max));
    let (top, bottom) = (f.py(y_hi), f.py(y_lo));
    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444" stroke-width="0.8"/>"##,
        right - left,
        bottom - top
    );
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * f64::from(i) / 4.0;
        let x = x_max * f64::from(i) / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            left - 4.0,
            f.py(y) + 3.0,
            format_tick(y)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            f.px(x),
            bottom + 14.0,
            format_tick(x)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">round</text>"#,
        (left + right) / 2.0,
        bottom + 27.0
    );
    for (i, run) in runs.iter().enumerate() {
        let style = format!(
            r#"class="run" fill="none" stroke="{}" stroke-opacity="0.45" stroke-width="0.8""#,
            PALETTE[i % PALETTE.len()]
        );
        polylines(out, &f, run, &style);
    }
    polylines(
        out,
        &f,
        mean,
        r##"class="mean" fill="none" stroke="#000" stroke-width="2.2""##,
    );
    let _ = writeln!(out, "</g>");
}

// four significant digits
fn format_tick(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format_sig9(v);
    }
    let scale = 10f64.powi(3 - v.abs().log10().floor() as i32);
    let r = (v * scale).round() / scale;
    format_sig9(if r == 0.0 { 0.0 } else { r })
}

/// Renders one figure. `runs` are per-run round series and `mean` is the
/// cross-run aggregate drawn on top.
pub fn render_figure(
    kind: FigureKind,
    title: &str,
    runs: &[&[RoundMetrics]],
    mean: &[AggregateRound],
) -> Result<String> {
    if runs.is_empty() {
        return Err(Error::EmptyBatch(format!("nothing to plot for {title}")));
    }
    let panels = kind.panels();
    let cols = if panels.len() > 3 { 2 } else { 3 };
    let rows = panels.len().div_ceil(cols);
    let width = PANEL_W * cols as f64;
    let height = TITLE_H + PANEL_H * rows as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="15" font-weight="bold" text-anchor="middle">{} ({} runs)</text>"#,
        width / 2.0,
        escape(title),
        runs.len()
    );
    for (i, panel) in panels.iter().enumerate() {
        let run_points: Vec<Points> = runs
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|m| (m.round as f64, panel.value(&m.values())))
                    .collect()
            })
            .collect();
        let mean_points: Points = mean
            .iter()
            .map(|a| (a.round as f64, panel.value(&a.values)))
            .collect();
        let x0 = PANEL_W * (i % cols) as f64;
        let y0 = TITLE_H + PANEL_H * (i / cols) as f64;
        draw_panel(&mut out, x0, y0, panel, &run_points, &mean_points);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes `<prefix>_<kind>.svg` for every figure kind and returns the paths.
pub fn emit_series_plots(
    title: &str,
    prefix: &str,
    runs: &[&[RoundMetrics]],
    mean: &[AggregateRound],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    // render everything first so an error leaves no partial output
    let figures = FigureKind::ALL
        .iter()
        .map(|&k| Ok((k, render_figure(k, title, runs, mean)?)))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for (kind, svg) in figures {
        let path = dir.join(format!("{prefix}_{}.svg", kind.stem()));
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn emit_plots<F: Scalar>(batch: &BatchResult<F>, dir: &Path) -> Result<Vec<PathBuf>> {
    let runs: Vec<&[RoundMetrics]> = batch.runs.iter().map(|r| r.rounds.as_slice()).collect();
    emit_series_plots(
        &batch.arm.to_string(),
        &batch.arm.label(),
        &runs,
        &batch.mean,
        dir,
    )
}
