//! Hidden-state recording, segment similarity, and SVG output.

mod svg;

pub use svg::{
    export_heatmap, heatmap_svg, pen_down_runs, render_svg, render_svg_overlay, sheet_svg, write_svg, Layer,
    Panel, Role,
};

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::network::{forward_sequence, ModelParams, Trajectory};

/// Hidden and cell states of one generation, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRecord {
    pub hidden: Vec<Vec<f64>>,
    pub cell: Vec<Vec<f64>>,
    pub label_input: Vec<f64>,
    pub trajectory: Trajectory,
}

impl StateRecord {
    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }
}

pub fn record_states(params: &ModelParams, input: &[f64], steps: usize) -> Result<StateRecord> {
    let (trajectory, trace) = forward_sequence(params, input, steps)?;
    let (hidden, cell) = trace.steps.into_iter().map(|s| (s.h, s.c)).unzip();
    Ok(StateRecord {
        hidden,
        cell,
        label_input: input.to_vec(),
        trajectory,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot(a, b) / (na * nb)).clamp(-1.0, 1.0),
    }
}

/// Nearest-index positions that shrink `len` rows to `target` rows.
fn nearest_indices(len: usize, target: usize) -> Vec<usize> {
    if target == 1 {
        return vec![0];
    }
    (0..target)
        .map(|k| ((k * (len - 1)) as f64 / (target - 1) as f64).round() as usize)
        .collect()
}

/// Mean cosine similarity between aligned cell-state rows of two segments.
///
/// The longer segment is resampled to the shorter one's length by nearest
/// index. Two all-zero rows count as identical, one zero row as orthogonal.
pub fn segment_similarity(a: &StateRecord, range_a: Range<usize>, b: &StateRecord, range_b: Range<usize>) -> Result<f64> {
    for (r, rec) in [(&range_a, a), (&range_b, b)] {
        if r.is_empty() {
            return Err(Error::EmptyRange);
        }
        if r.end > rec.cell.len() {
            return Err(Error::InvalidConfig(format!(
                "range {}..{} exceeds record length {}",
                r.start,
                r.end,
                rec.cell.len()
            )));
        }
    }
    let rows_a = &a.cell[range_a];
    let rows_b = &b.cell[range_b];
    let m = rows_a.len().min(rows_b.len());
    let ia = nearest_indices(rows_a.len(), m);
    let ib = nearest_indices(rows_b.len(), m);
    let total: f64 = ia.iter().zip(&ib).map(|(&i, &j)| cosine(&rows_a[i], &rows_b[j])).sum();
    Ok(total / m as f64)
}

/// Whitespace-separated numeric grid, one matrix row per line.
pub fn format_grid(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    out
}

pub fn export_grid(matrix: &[Vec<f64>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_grid(matrix)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{init_params, one_hot};
    use crate::Label;

    fn record(rows: Vec<Vec<f64>>) -> StateRecord {
        let n = rows.len();
        StateRecord {
            hidden: rows.clone(),
            cell: rows,
            label_input: vec![0.0; 26],
            trajectory: vec![[0.0; 4]; n],
        }
    }

    #[test]
    fn zero_params_record_zero_states() {
        let p = ModelParams::zeros(3, 4);
        let r = record_states(&p, &one_hot(Label::new(1).unwrap()), 5).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.hidden.iter().chain(&r.cell).flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn records_match_the_trace() {
        let p = init_params(4, 6, 3);
        let x = one_hot(Label::new(7).unwrap());
        let r = record_states(&p, &x, 9).unwrap();
        let (_, trace) = forward_sequence(&p, &x, 9).unwrap();
        for (row, step) in r.hidden.iter().zip(&trace.steps) {
            assert_eq!(row, &step.h);
        }
        assert_eq!(r, record_states(&p, &x, 9).unwrap());
    }

    #[test]
    fn self_and_negated_similarity() {
        let rows = vec![vec![0.3, -0.2, 0.9], vec![0.1, 0.4, -0.5], vec![-0.7, 0.2, 0.1]];
        let neg: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        let a = record(rows);
        let b = record(neg);
        assert!((segment_similarity(&a, 0..3, &a, 0..3).unwrap() - 1.0).abs() < 1e-12);
        assert!((segment_similarity(&a, 0..3, &b, 0..3).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(segment_similarity(&a, 1..1, &a, 0..3), Err(Error::EmptyRange)));
        assert!(segment_similarity(&a, 0..4, &a, 0..3).is_err());
    }

    #[test]
    fn similarity_is_symmetric_across_lengths() {
        let p = init_params(4, 6, 3);
        let a = record_states(&p, &one_hot(Label::new(2).unwrap()), 20).unwrap();
        let b = record_states(&p, &one_hot(Label::new(9).unwrap()), 13).unwrap();
        let ab = segment_similarity(&a, 2..17, &b, 0..13).unwrap();
        let ba = segment_similarity(&b, 0..13, &a, 2..17).unwrap();
        assert_eq!(ab, ba);
        assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn nearest_index_resampling_keeps_ends() {
        assert_eq!(nearest_indices(10, 4), vec![0, 3, 6, 9]);
        assert_eq!(nearest_indices(5, 5), vec![0, 1, 2, 3, 4]);
        assert_eq!(nearest_indices(7, 1), vec![0]);
    }

    #[test]
    fn grid_text() {
        assert_eq!(format_grid(&[vec![1.0, -0.5], vec![0.25, 0.0]]), "1 -0.5\n0.25 0\n");
    }
}
