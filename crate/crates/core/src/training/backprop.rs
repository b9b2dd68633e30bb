use crate::corpus::ALPHABET_SIZE;
use crate::error::{Error, Result};
use crate::network::{ForwardTrace, Gate, ModelParams, OUTPUTS};

use super::Gradients;

/// How the squared error is reduced over the `T x 4` residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Mean over all entries (the training objective).
    #[default]
    Mean,
    /// Plain sum of squares.
    Sum,
}

impl Reduction {
    fn divisor(self, steps: usize) -> f64 {
        match self {
            Reduction::Mean => (steps * OUTPUTS) as f64,
            Reduction::Sum => 1.0,
        }
    }
}

fn check_shapes(pred_len: usize, target_len: usize) -> Result<()> {
    if pred_len != target_len {
        return Err(Error::ShapeMismatch {
            expected: format!("{pred_len} x {OUTPUTS}"),
            found: format!("{target_len} x {OUTPUTS}"),
        });
    }
    Ok(())
}

/// Mean squared error over all `T x 4` entries.
pub fn mse_loss(pred: &[[f64; OUTPUTS]], target: &[[f64; OUTPUTS]]) -> Result<f64> {
    squared_error(pred, target, Reduction::Mean)
}

pub fn squared_error(
    pred: &[[f64; OUTPUTS]],
    target: &[[f64; OUTPUTS]],
    reduction: Reduction,
) -> Result<f64> {
    check_shapes(pred.len(), target.len())?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .flat_map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)))
        .sum();
    Ok(sum / reduction.divisor(pred.len()))
}

/// Exact gradients of [`mse_loss`] with respect to every parameter tensor and
/// to the input. The input gradient is summed over steps, which is the
/// gradient for an input shared by all steps.
pub fn backprop_through_time(
    params: &ModelParams,
    trace: &ForwardTrace,
    target: &[[f64; OUTPUTS]],
) -> Result<(Gradients, Vec<f64>)> {
    backprop_with(params, trace, target, Reduction::Mean)
}

pub fn backprop_with(
    params: &ModelParams,
    trace: &ForwardTrace,
    target: &[[f64; OUTPUTS]],
    reduction: Reduction,
) -> Result<(Gradients, Vec<f64>)> {
    check_shapes(trace.len(), target.len())?;
    let n = params.n_lstm();
    let n_ff = params.n_ff();
    let mut grads = Gradients::zeros_like(params);
    let mut dx = vec![0.0; ALPHABET_SIZE];
    if trace.is_empty() {
        return Ok((grads, dx));
    }
    let scale = 2.0 / reduction.divisor(trace.len());
    let zeros = vec![0.0; n];

    let mut dh_next = vec![0.0; n];
    let mut dc_next = vec![0.0; n];
    let mut dh = vec![0.0; n];
    let mut dz = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut da = vec![0.0; n_ff];
    let mut dz_ff = vec![0.0; n_ff];

    for t in (0..trace.len()).rev() {
        let step = &trace.steps[t];
        let (h_prev, c_prev) = if t > 0 {
            (&trace.steps[t - 1].h, &trace.steps[t - 1].c)
        } else {
            (&zeros, &zeros)
        };

        let mut dy = [0.0; OUTPUTS];
        for k in 0..OUTPUTS {
            dy[k] = scale * (step.output[k] - target[t][k]);
        }
        let g = grads.params_mut();
        g.w_out.add_outer(&dy, &step.h);
        for k in 0..OUTPUTS {
            g.b_out[k] += dy[k];
        }

        dh.copy_from_slice(&dh_next);
        params.w_out.add_transposed_matvec(&dy, &mut dh);

        let gates = &step.gates;
        for j in 0..n {
            let tc = step.c[j].tanh();
            let (i, f, gc, o) = (gates.input[j], gates.forget[j], gates.cell[j], gates.output[j]);
            let d_o = dh[j] * tc;
            let dc = dh[j] * o * (1.0 - tc * tc) + dc_next[j];
            dz[0][j] = dc * gc * i * (1.0 - i);
            dz[1][j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2][j] = dc * i * (1.0 - gc * gc);
            dz[3][j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }

        da.fill(0.0);
        dh_next.fill(0.0);
        let g = grads.params_mut();
        let pairs: [(&Gate, &mut Gate); 4] = [
            (&params.input_gate, &mut g.input_gate),
            (&params.forget_gate, &mut g.forget_gate),
            (&params.cell_gate, &mut g.cell_gate),
            (&params.output_gate, &mut g.output_gate),
        ];
        for ((gate, grad), dz) in pairs.into_iter().zip(&dz) {
            grad.w.add_outer(dz, &step.ff_act);
            grad.u.add_outer(dz, h_prev);
            for (b, d) in grad.b.iter_mut().zip(dz) {
                *b += d;
            }
            gate.w.add_transposed_matvec(dz, &mut da);
            gate.u.add_transposed_matvec(dz, &mut dh_next);
        }

        for j in 0..n_ff {
            let a = step.ff_act[j];
            dz_ff[j] = da[j] * (1.0 - a * a);
        }
        g.w_ff.add_outer(&dz_ff, &step.input);
        for (b, d) in g.b_ff.iter_mut().zip(&dz_ff) {
            *b += d;
        }
        params.w_ff.add_transposed_matvec(&dz_ff, &mut dx);
    }
    Ok((grads, dx))
}
