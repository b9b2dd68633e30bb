use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{CharacterSample, Label, TrajectoryPoint, ALPHABET_SIZE};
use crate::error::{Error, Result};

const DEFAULT_GLYPHS: &str = include_str!("glyphs.txt");

/// A control polyline and the number of points it is resampled to.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub points: Vec<[f64; 2]>,
    pub samples: usize,
}

/// Hand-authored strokes for one letter, on the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphTemplate {
    pub label: Label,
    pub strokes: Vec<Stroke>,
    /// Side of the rendered unit square in canvas units.
    pub canvas: f64,
}

impl GlyphTemplate {
    /// A template rendered at canvas size 1.
    pub fn new(label: Label, strokes: Vec<Stroke>) -> Result<Self> {
        Self::with_canvas(label, strokes, 1.0)
    }

    pub fn with_canvas(label: Label, strokes: Vec<Stroke>, canvas: f64) -> Result<Self> {
        let t = Self { label, strokes, canvas };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strokes.is_empty() {
            return Err(Error::InvalidTemplate(format!("'{}' has no strokes", self.label)));
        }
        if !(self.canvas > 0.0 && self.canvas.is_finite()) {
            return Err(Error::InvalidTemplate(format!(
                "'{}' canvas size must be finite and > 0, got {}",
                self.label, self.canvas
            )));
        }
        for (i, s) in self.strokes.iter().enumerate() {
            if s.points.len() < 2 {
                return Err(Error::InvalidTemplate(format!(
                    "'{}' stroke {i} has fewer than 2 control points",
                    self.label
                )));
            }
            if s.samples < 2 {
                return Err(Error::InvalidTemplate(format!(
                    "'{}' stroke {i} has sample count {} < 2",
                    self.label, s.samples
                )));
            }
            if let Some(p) = s
                .points
                .iter()
                .find(|p| !p.iter().all(|v| (0.0..=1.0).contains(v)))
            {
                return Err(Error::InvalidTemplate(format!(
                    "'{}' stroke {i} control point ({}, {}) leaves the unit square",
                    self.label, p[0], p[1]
                )));
            }
            if s.points.iter().all(|p| *p == s.points[0]) {
                return Err(Error::DegenerateStroke {
                    label: self.label.as_char(),
                    stroke: i,
                });
            }
        }
        Ok(())
    }

    /// Number of steps a rendering of this template produces.
    pub fn sample_len(&self) -> usize {
        self.strokes.iter().map(|s| s.samples).sum::<usize>() + self.strokes.len() - 1
    }
}

/// Renders a template into pen deltas.
///
/// Control points get isotropic Gaussian jitter, each stroke is resampled at
/// uniform arc length, and consecutive strokes are joined by one zero-pressure
/// point that travels to the next stroke start. The pen starts at the first
/// stroke's first point, so every stroke onset carries a zero delta. Jitter is
/// in unit-square coordinates; deltas are scaled by the template's canvas.
pub fn render_template(
    template: &GlyphTemplate,
    jitter_sigma: f64,
    seed: u64,
) -> Result<CharacterSample> {
    template.validate()?;
    if !(jitter_sigma >= 0.0 && jitter_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "jitter_sigma must be finite and >= 0, got {jitter_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, jitter_sigma).expect("sigma checked above");

    let mut points = Vec::with_capacity(template.sample_len());
    let mut pen: Option<[f64; 2]> = None;
    for (i, stroke) in template.strokes.iter().enumerate() {
        let control: Vec<[f64; 2]> = stroke
            .points
            .iter()
            .map(|p| {
                if jitter_sigma == 0.0 {
                    *p
                } else {
                    [p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)]
                }
            })
            .collect();
        let mut resampled = resample(&control, stroke.samples).ok_or(Error::DegenerateStroke {
            label: template.label.as_char(),
            stroke: i,
        })?;
        if template.canvas != 1.0 {
            for p in &mut resampled {
                p[0] *= template.canvas;
                p[1] *= template.canvas;
            }
        }

        let start = resampled[0];
        if let Some(prev) = pen {
            points.push(TrajectoryPoint::new(start[0] - prev[0], start[1] - prev[1], 0.0, 0.0));
        }
        let mut prev = start;
        for (k, p) in resampled.iter().enumerate() {
            let onset = if k == 0 { 1.0 } else { 0.0 };
            points.push(TrajectoryPoint::new(p[0] - prev[0], p[1] - prev[1], 1.0, onset));
            prev = *p;
        }
        pen = Some(prev);
    }
    CharacterSample::new(template.label, points)
}

/// `n` points at uniform arc-length spacing, first and last on the ends.
/// Returns `None` when the polyline has zero length.
fn resample(control: &[[f64; 2]], n: usize) -> Option<Vec<[f64; 2]>> {
    let seg_len: Vec<f64> = control
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    let total: f64 = seg_len.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut walked = 0.0;
    for k in 0..n {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < seg_len.len() && walked + seg_len[seg] < target {
            walked += seg_len[seg];
            seg += 1;
        }
        let a = control[seg];
        let b = control[seg + 1];
        let frac = if seg_len[seg] > 0.0 {
            ((target - walked) / seg_len[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push([a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])]);
    }
    // Pin the endpoint against rounding in the walk.
    *out.last_mut().unwrap() = *control.last().unwrap();
    Some(out)
}

/// The 26 built-in lowercase templates.
///
/// 'y' starts with the exact stroke of 'v', and 'n'/'u'/'m'/'h' share arches
/// and stems, so related letters have common sub-trajectories.
pub fn default_templates() -> Vec<GlyphTemplate> {
    parse_templates(DEFAULT_GLYPHS).expect("built-in glyph table is valid")
}

/// Parses the key-value template document.
///
/// One stroke per line: `<letter>.<stroke> = <samples> : x y, x y, ...`.
/// A `canvas = <size>` line sets the canvas size for the letters that follow
/// (default 1). Blank lines and `#` comments are ignored. Strokes of a letter must be
/// numbered `0, 1, ...` without gaps. Output is sorted by label.
pub fn parse_templates(text: &str) -> Result<Vec<GlyphTemplate>> {
    let mut slots: Vec<Vec<(usize, Stroke)>> = vec![Vec::new(); ALPHABET_SIZE];
    let mut canvases: Vec<Option<f64>> = vec![None; ALPHABET_SIZE];
    let mut canvas = 1.0;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, "key", "expected '<letter>.<stroke> = ...'"))?;
        if key.trim() == "canvas" {
            canvas = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, "canvas", format!("'{}' is not a number", value.trim())))?;
            continue;
        }
        let (letter, index) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::parse(line_no, "key", "expected '<letter>.<stroke>'"))?;
        let label: Label = letter
            .parse()
            .map_err(|e: Error| Error::parse(line_no, "letter", e.to_string()))?;
        let index: usize = index
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, "stroke", format!("'{index}' is not an index")))?;
        let (samples, coords) = value
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, "value", "expected '<samples> : points'"))?;
        let samples: usize = samples.trim().parse().map_err(|_| {
            Error::parse(line_no, "samples", format!("'{}' is not a count", samples.trim()))
        })?;
        let mut points = Vec::new();
        for (k, pair) in coords.split(',').enumerate() {
            let nums: Vec<&str> = pair.split_whitespace().collect();
            if nums.len() != 2 {
                return Err(Error::parse(
                    line_no,
                    format!("point {k}"),
                    format!("expected 'x y', got '{}'", pair.trim()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("point {k}"), format!("'{s}' is not a number")))
            };
            points.push([parse(nums[0])?, parse(nums[1])?]);
        }
        match canvases[label.index()] {
            Some(c) if c != canvas => {
                return Err(Error::parse(line_no, "canvas", format!("strokes of '{label}' use different canvas sizes")));
            }
            _ => canvases[label.index()] = Some(canvas),
        }
        slots[label.index()].push((index, Stroke { points, samples }));
    }

    let mut templates = Vec::new();
    for (i, mut strokes) in slots.into_iter().enumerate() {
        if strokes.is_empty() {
            continue;
        }
        strokes.sort_by_key(|(k, _)| *k);
        let label = Label::new(i)?;
        for (expected, (k, _)) in strokes.iter().enumerate() {
            if *k != expected {
                return Err(Error::InvalidTemplate(format!(
                    "'{label}' strokes must be numbered contiguously from 0 (missing {expected})"
                )));
            }
        }
        templates.push(GlyphTemplate::with_canvas(
            label,
            strokes.into_iter().map(|(_, s)| s).collect(),
            canvases[i].unwrap_or(1.0),
        )?);
    }
    Ok(templates)
}

/// Writes templates in the format read by [`parse_templates`].
pub fn format_templates(templates: &[GlyphTemplate]) -> String {
    let mut out = String::new();
    let mut canvas = 1.0;
    for t in templates {
        if t.canvas != canvas {
            canvas = t.canvas;
            out.push_str(&format!("canvas = {canvas}\n"));
        }
        for (i, s) in t.strokes.iter().enumerate() {
            let pts: Vec<String> = s.points.iter().map(|p| format!("{} {}", p[0], p[1])).collect();
            out.push_str(&format!("{}.{} = {} : {}\n", t.label, i, s.samples, pts.join(", ")));
        }
    }
    out
}
