use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::integrate_deltas;
use crate::error::{Error, Result};

/// Steps at or above this pressure are drawn; the rest is pen-up travel.
pub const PEN_DOWN_THRESHOLD: f64 = 0.5;

const PANEL: f64 = 140.0;
const PAD: f64 = 12.0;

/// Color role of a drawn trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ink,
    /// The example being fitted.
    Target,
    /// Generation before any inference-time adaptation.
    Unadapted,
    /// Generation after adaptation.
    Adapted,
    /// Adaptation started from an untrained model.
    Untrained,
}

impl Role {
    fn color(self) -> &'static str {
        match self {
            Role::Ink => "#222222",
            Role::Target => "#2ca02c",
            Role::Unadapted => "#d62728",
            Role::Adapted => "#1f77b4",
            Role::Untrained => "#ff7f0e",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Role::Ink => "ink",
            Role::Target => "target",
            Role::Unadapted => "unadapted",
            Role::Adapted => "adapted",
            Role::Untrained => "untrained",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub trajectory: Vec<[f64; 4]>,
    pub role: Role,
}

impl Layer {
    pub fn new(trajectory: Vec<[f64; 4]>, role: Role) -> Self {
        Self { trajectory, role }
    }
}

/// One glyph cell of a sheet; layers share the cell's coordinate frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub layers: Vec<Layer>,
    pub caption: Option<String>,
}

impl Panel {
    pub fn single(trajectory: Vec<[f64; 4]>, role: Role) -> Self {
        Self {
            layers: vec![Layer::new(trajectory, role)],
            caption: None,
        }
    }

    pub fn with_caption(mut self, caption: impl Into<String>) -> Self {
        self.caption = Some(caption.into());
        self
    }
}

/// A contiguous pen-down stretch in absolute coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PenRun {
    pub points: Vec<[f64; 2]>,
    pub mean_pressure: f64,
}

/// Integrates a trajectory and splits it into pen-down runs. A run ends at a
/// step below the pressure threshold or where a new stroke begins; runs of a
/// single point are dropped.
pub fn pen_down_runs(trajectory: &[[f64; 4]]) -> Vec<PenRun> {
    let positions = integrate_deltas(trajectory.iter().map(|r| (r[0], r[1])));
    let mut runs = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut flush = |current: &mut Vec<usize>| {
        if current.len() >= 2 {
            let mean_pressure = current.iter().map(|&t| trajectory[t][2]).sum::<f64>() / current.len() as f64;
            runs.push(PenRun {
                points: current.iter().map(|&t| positions[t]).collect(),
                mean_pressure,
            });
        }
        current.clear();
    };
    for (t, row) in trajectory.iter().enumerate() {
        let down = row[2] >= PEN_DOWN_THRESHOLD;
        let onset = row[3] >= PEN_DOWN_THRESHOLD;
        if !down || onset {
            flush(&mut current);
        }
        if down {
            current.push(t);
        }
    }
    flush(&mut current);
    runs
}

fn bounds(panel: &Panel) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for layer in &panel.layers {
        for p in integrate_deltas(layer.trajectory.iter().map(|r| (r[0], r[1]))) {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
    }
    if !b[0].is_finite() {
        return [0.0, 0.0, 1.0, 1.0];
    }
    b
}

/// Lays panels out on a grid of `columns` cells. Within a panel, geometry is
/// written in trajectory coordinates under a y-flipping transform, so the
/// polyline points are the integrated pen positions themselves.
pub fn sheet_svg(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (width, height) = (PANEL * columns as f64, PANEL * rows as f64);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (k, panel) in panels.iter().enumerate() {
        let (ox, oy) = ((k % columns) as f64 * PANEL, (k / columns) as f64 * PANEL);
        let [x0, y0, x1, y1] = bounds(panel);
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let scale = (PANEL - 2.0 * PAD) / span;
        let cx = ox + PAD + ((PANEL - 2.0 * PAD) - (x1 - x0) * scale) / 2.0;
        let cy = oy + PAD + ((PANEL - 2.0 * PAD) - (y1 - y0) * scale) / 2.0;
        writeln!(
            out,
            r#"<g class="panel" transform="translate({cx} {cy}) scale({scale} {neg}) translate({tx} {ty})">"#,
            neg = -scale,
            tx = -x0,
            ty = -y1,
        )
        .unwrap();
        for (li, layer) in panel.layers.iter().enumerate() {
            writeln!(
                out,
                r#"<g class="layer layer-{li} role-{name}" stroke="{color}" fill="none" stroke-linecap="round" stroke-linejoin="round">"#,
                name = layer.role.name(),
                color = layer.role.color()
            )
            .unwrap();
            for run in pen_down_runs(&layer.trajectory) {
                let pts: Vec<String> = run.points.iter().map(|p| format!("{},{}", p[0], p[1])).collect();
                writeln!(
                    out,
                    r#"<polyline class="stroke" points="{}" stroke-width="{:.3}" vector-effect="non-scaling-stroke"/>"#,
                    pts.join(" "),
                    0.75 + 2.5 * run.mean_pressure.clamp(0.0, 1.0)
                )
                .unwrap();
            }
            out.push_str("</g>\n");
        }
        out.push_str("</g>\n");
        if let Some(caption) = &panel.caption {
            writeln!(
                out,
                r#"<text class="caption" x="{}" y="{}" font-size="10" font-family="sans-serif">{}</text>"#,
                ox + 4.0,
                oy + PANEL - 3.0,
                escape(caption)
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One trajectory on its own.
pub fn render_svg(trajectory: &[[f64; 4]]) -> String {
    sheet_svg(&[Panel::single(trajectory.to_vec(), Role::Ink)], 1)
}

/// `generated` drawn over `reference` in contrasting colors.
pub fn render_svg_overlay(reference: &[[f64; 4]], generated: &[[f64; 4]]) -> String {
    let panel = Panel {
        layers: vec![
            Layer::new(reference.to_vec(), Role::Target),
            Layer::new(generated.to_vec(), Role::Adapted),
        ],
        caption: None,
    };
    sheet_svg(&[panel], 1)
}

pub fn write_svg(svg: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Diverging blue-white-red color for `v` on a scale symmetric about zero.
fn diverging(v: f64, max_abs: f64) -> (u8, u8, u8) {
    let t = if max_abs > 0.0 { (v / max_abs).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
    if t >= 0.0 {
        (255, fade(t), fade(t))
    } else {
        (fade(t), fade(t), 255)
    }
}

const CELL: f64 = 6.0;
const MARGIN: f64 = 28.0;

/// Heatmap of a `steps x units` matrix: steps run left to right, units top to
/// bottom, one `rect.cell` per entry.
pub fn heatmap_svg(matrix: &[Vec<f64>]) -> String {
    let steps = matrix.len();
    let units = matrix.first().map_or(0, |r| r.len());
    let max_abs = matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let width = MARGIN + CELL * steps as f64 + 4.0;
    let height = MARGIN + CELL * units as f64 + 4.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" data-max-abs="{max_abs}">"#
    )
    .unwrap();
    for (t, row) in matrix.iter().enumerate() {
        for (u, &v) in row.iter().enumerate() {
            let (r, g, b) = diverging(v, max_abs);
            writeln!(
                out,
                r##"<rect class="cell" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                MARGIN + CELL * t as f64,
                MARGIN + CELL * u as f64,
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        r#"<text class="axis-label" x="{}" y="12" font-size="10" font-family="sans-serif">step</text>"#,
        MARGIN
    )
    .unwrap();
    writeln!(
        out,
        r#"<text class="axis-label" x="4" y="{}" font-size="10" font-family="sans-serif" transform="rotate(-90 10 {})">unit</text>"#,
        MARGIN + 24.0,
        MARGIN + 24.0
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}

pub fn export_heatmap(matrix: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("heatmap values must be finite".into()));
    }
    write_svg(&heatmap_svg(matrix), path)
}
