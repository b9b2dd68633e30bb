#![allow(dead_code)]

use glyphlstm::network::{forward_sequence, init_params, ModelParams, TensorId};
use glyphlstm::training::{backprop_through_time, mse_loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPSILON: f64 = 1e-5;
pub const MAX_RELATIVE_ERROR: f64 = 1e-4;
/// Denominator floor for the relative error. The central difference at
/// `FD_EPSILON` carries about 1e-11 of rounding noise, so entries smaller
/// than this are compared against the floor instead of their own magnitude.
pub const GRADIENT_FLOOR: f64 = 1e-6;

pub struct GradCheckCase {
    pub params: ModelParams,
    pub input: Vec<f64>,
    pub target: Vec<[f64; 4]>,
}

/// Random tiny net (sizes 1..=4, T 1..=5), dense random input and targets.
pub fn random_case(seed: u64) -> GradCheckCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ff = rng.random_range(1..=4);
    let n_lstm = rng.random_range(1..=4);
    let steps = rng.random_range(1..=5);
    let mut params = init_params(n_ff, n_lstm, seed ^ 0xABCD);
    // Non-zero biases so every bias path is exercised.
    for id in TensorId::ALL {
        for v in params.tensor_mut(id) {
            *v += rng.random_range(-0.5..0.5);
        }
    }
    let input = (0..26).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = (0..steps)
        .map(|_| [0, 1, 2, 3].map(|_| rng.random_range(-1.0..1.0)))
        .collect();
    GradCheckCase { params, input, target }
}

fn loss(params: &ModelParams, input: &[f64], target: &[[f64; 4]]) -> f64 {
    let (out, _) = forward_sequence(params, input, target.len()).unwrap();
    mse_loss(&out, target).unwrap()
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRADIENT_FLOOR)
}

#[derive(Debug)]
pub struct GradCheckReport {
    pub entries: usize,
    pub worst: f64,
    pub worst_at: String,
}

/// Central finite differences over every parameter entry and every input entry.
pub fn check_case(case: &GradCheckCase) -> GradCheckReport {
    let (_, trace) = forward_sequence(&case.params, &case.input, case.target.len()).unwrap();
    let (grads, dx) = backprop_through_time(&case.params, &trace, &case.target).unwrap();
    let mut report = GradCheckReport { entries: 0, worst: 0.0, worst_at: String::new() };
    let note = |err: f64, at: String, report: &mut GradCheckReport| {
        report.entries += 1;
        if err > report.worst {
            report.worst = err;
            report.worst_at = at;
        }
    };
    for id in TensorId::ALL {
        for k in 0..case.params.tensor(id).len() {
            let mut plus = case.params.clone();
            plus.tensor_mut(id)[k] += FD_EPSILON;
            let mut minus = case.params.clone();
            minus.tensor_mut(id)[k] -= FD_EPSILON;
            let numeric = (loss(&plus, &case.input, &case.target) - loss(&minus, &case.input, &case.target))
                / (2.0 * FD_EPSILON);
            let analytic = grads.tensor(id)[k];
            note(
                relative_error(analytic, numeric),
                format!("{}[{k}] analytic {analytic:.6e} numeric {numeric:.6e}", id.name()),
                &mut report,
            );
        }
    }
    for k in 0..case.input.len() {
        let mut plus = case.input.clone();
        plus[k] += FD_EPSILON;
        let mut minus = case.input.clone();
        minus[k] -= FD_EPSILON;
        let numeric = (loss(&case.params, &plus, &case.target) - loss(&case.params, &minus, &case.target))
            / (2.0 * FD_EPSILON);
        note(
            relative_error(dx[k], numeric),
            format!("input[{k}] analytic {:.6e} numeric {numeric:.6e}", dx[k]),
            &mut report,
        );
    }
    report
}
