//! Model parameters and the forward pass.
//!
//! Each step feeds a 26-dim input through `tanh(W_ff x + b_ff)`, a standard
//! LSTM cell without peepholes, and an affine readout to
//! `(dx, dy, pressure, stroke_onset)`. Sequences start from `h = c = 0`.

mod checkpoint;

pub use checkpoint::{load_params, params_from_bytes, params_to_bytes, save_params, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};

/// Number of readout channels.
pub const OUTPUTS: usize = 4;

/// Generated or target trajectory, one `[dx, dy, pressure, stroke_onset]` row per step.
pub type Trajectory = Vec<[f64; OUTPUTS]>;

/// Weights of one LSTM gate: input projection, recurrent projection, bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub w: Matrix,
    pub u: Matrix,
    pub b: Vec<f64>,
}

impl Gate {
    fn zeros(n_ff: usize, n_lstm: usize) -> Self {
        Self {
            w: Matrix::zeros(n_lstm, n_ff),
            u: Matrix::zeros(n_lstm, n_lstm),
            b: vec![0.0; n_lstm],
        }
    }

    /// `W a + U h + b`
    fn preactivation(&self, a: &[f64], h: &[f64]) -> Vec<f64> {
        let mut z = self.b.clone();
        self.w.add_matvec(a, &mut z);
        self.u.add_matvec(h, &mut z);
        z
    }
}

/// All learnable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_ff: Matrix,
    pub b_ff: Vec<f64>,
    pub input_gate: Gate,
    pub forget_gate: Gate,
    pub cell_gate: Gate,
    pub output_gate: Gate,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

/// Names every tensor in [`ModelParams`]; [`TensorId::ALL`] is the canonical
/// order used by checkpoints and optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorId {
    WFf,
    BFf,
    WInput,
    UInput,
    BInput,
    WForget,
    UForget,
    BForget,
    WCell,
    UCell,
    BCell,
    WOutput,
    UOutput,
    BOutput,
    WOut,
    BOut,
}

impl TensorId {
    pub const ALL: [TensorId; 16] = [
        TensorId::WFf,
        TensorId::BFf,
        TensorId::WInput,
        TensorId::UInput,
        TensorId::BInput,
        TensorId::WForget,
        TensorId::UForget,
        TensorId::BForget,
        TensorId::WCell,
        TensorId::UCell,
        TensorId::BCell,
        TensorId::WOutput,
        TensorId::UOutput,
        TensorId::BOutput,
        TensorId::WOut,
        TensorId::BOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TensorId::WFf => "W_ff",
            TensorId::BFf => "b_ff",
            TensorId::WInput => "W_i",
            TensorId::UInput => "U_i",
            TensorId::BInput => "b_i",
            TensorId::WForget => "W_f",
            TensorId::UForget => "U_f",
            TensorId::BForget => "b_f",
            TensorId::WCell => "W_g",
            TensorId::UCell => "U_g",
            TensorId::BCell => "b_g",
            TensorId::WOutput => "W_o",
            TensorId::UOutput => "U_o",
            TensorId::BOutput => "b_o",
            TensorId::WOut => "W_out",
            TensorId::BOut => "b_out",
        }
    }

    /// The feedforward layer's incoming tensors.
    pub fn is_feedforward(self) -> bool {
        matches!(self, TensorId::WFf | TensorId::BFf)
    }
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(n_ff: usize, n_lstm: usize) -> Self {
        Self {
            w_ff: Matrix::zeros(n_ff, ALPHABET_SIZE),
            b_ff: vec![0.0; n_ff],
            input_gate: Gate::zeros(n_ff, n_lstm),
            forget_gate: Gate::zeros(n_ff, n_lstm),
            cell_gate: Gate::zeros(n_ff, n_lstm),
            output_gate: Gate::zeros(n_ff, n_lstm),
            w_out: Matrix::zeros(OUTPUTS, n_lstm),
            b_out: vec![0.0; OUTPUTS],
        }
    }

    pub fn n_ff(&self) -> usize {
        self.b_ff.len()
    }

    pub fn n_lstm(&self) -> usize {
        self.input_gate.b.len()
    }

    /// `(rows, cols)`; vectors are `(len, 1)`.
    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        let (ff, n) = (self.n_ff(), self.n_lstm());
        match id {
            TensorId::WFf => (ff, ALPHABET_SIZE),
            TensorId::BFf => (ff, 1),
            TensorId::WInput | TensorId::WForget | TensorId::WCell | TensorId::WOutput => (n, ff),
            TensorId::UInput | TensorId::UForget | TensorId::UCell | TensorId::UOutput => (n, n),
            TensorId::BInput | TensorId::BForget | TensorId::BCell | TensorId::BOutput => (n, 1),
            TensorId::WOut => (OUTPUTS, n),
            TensorId::BOut => (OUTPUTS, 1),
        }
    }

    pub fn tensor(&self, id: TensorId) -> &[f64] {
        match id {
            TensorId::WFf => self.w_ff.as_slice(),
            TensorId::BFf => &self.b_ff,
            TensorId::WInput => self.input_gate.w.as_slice(),
            TensorId::UInput => self.input_gate.u.as_slice(),
            TensorId::BInput => &self.input_gate.b,
            TensorId::WForget => self.forget_gate.w.as_slice(),
            TensorId::UForget => self.forget_gate.u.as_slice(),
            TensorId::BForget => &self.forget_gate.b,
            TensorId::WCell => self.cell_gate.w.as_slice(),
            TensorId::UCell => self.cell_gate.u.as_slice(),
            TensorId::BCell => &self.cell_gate.b,
            TensorId::WOutput => self.output_gate.w.as_slice(),
            TensorId::UOutput => self.output_gate.u.as_slice(),
            TensorId::BOutput => &self.output_gate.b,
            TensorId::WOut => self.w_out.as_slice(),
            TensorId::BOut => &self.b_out,
        }
    }

    pub fn tensor_mut(&mut self, id: TensorId) -> &mut [f64] {
        match id {
            TensorId::WFf => self.w_ff.as_mut_slice(),
            TensorId::BFf => &mut self.b_ff,
            TensorId::WInput => self.input_gate.w.as_mut_slice(),
            TensorId::UInput => self.input_gate.u.as_mut_slice(),
            TensorId::BInput => &mut self.input_gate.b,
            TensorId::WForget => self.forget_gate.w.as_mut_slice(),
            TensorId::UForget => self.forget_gate.u.as_mut_slice(),
            TensorId::BForget => &mut self.forget_gate.b,
            TensorId::WCell => self.cell_gate.w.as_mut_slice(),
            TensorId::UCell => self.cell_gate.u.as_mut_slice(),
            TensorId::BCell => &mut self.cell_gate.b,
            TensorId::WOutput => self.output_gate.w.as_mut_slice(),
            TensorId::UOutput => self.output_gate.u.as_mut_slice(),
            TensorId::BOutput => &mut self.output_gate.b,
            TensorId::WOut => self.w_out.as_mut_slice(),
            TensorId::BOut => &mut self.b_out,
        }
    }

    pub fn parameter_count(&self) -> usize {
        TensorId::ALL.iter().map(|&id| self.tensor(id).len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        TensorId::ALL
            .iter()
            .all(|&id| self.tensor(id).iter().all(|v| v.is_finite()))
    }

    pub fn same_architecture(&self, other: &ModelParams) -> bool {
        self.n_ff() == other.n_ff() && self.n_lstm() == other.n_lstm()
    }

    /// Bitwise equality of one tensor, so `-0.0`/`NaN` differences count.
    pub fn tensor_bits_eq(&self, other: &ModelParams, id: TensorId) -> bool {
        let (a, b) = (self.tensor(id), other.tensor(id));
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

/// Uniform `[-s, s]` weights with `s = 1/sqrt(fan_in)`, zero biases except the
/// forget-gate bias, which starts at 1.
pub fn init_params(n_ff: usize, n_lstm: usize, seed: u64) -> ModelParams {
    assert!(n_ff >= 1 && n_lstm >= 1, "layer sizes must be >= 1");
    let mut params = ModelParams::zeros(n_ff, n_lstm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for id in TensorId::ALL {
        let (_, cols) = params.shape(id);
        if cols == 1 {
            if id == TensorId::BForget {
                params.tensor_mut(id).fill(1.0);
            }
            continue;
        }
        let s = 1.0 / (cols as f64).sqrt();
        let dist = Uniform::new_inclusive(-s, s).expect("finite bounds");
        for v in params.tensor_mut(id) {
            *v = dist.sample(&mut rng);
        }
    }
    params
}

/// One-hot code for a label.
pub fn one_hot(label: Label) -> Vec<f64> {
    let mut v = vec![0.0; ALPHABET_SIZE];
    v[label.index()] = 1.0;
    v
}

/// One-hot code from a raw index; errors outside `0..=25`.
pub fn one_hot_index(index: usize) -> Result<Vec<f64>> {
    Label::new(index).map(one_hot)
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(n_lstm: usize) -> Self {
        Self {
            h: vec![0.0; n_lstm],
            c: vec![0.0; n_lstm],
        }
    }
}

/// Post-activation gate values of one LSTM step.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    /// Cell candidate `g`.
    pub cell: Vec<f64>,
    pub output: Vec<f64>,
}

/// Everything backpropagation needs from one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub input: Vec<f64>,
    pub ff_pre: Vec<f64>,
    pub ff_act: Vec<f64>,
    pub gates: GateRecord,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub output: [f64; OUTPUTS],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForwardTrace {
    pub steps: Vec<StepRecord>,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn outputs(&self) -> Trajectory {
        self.steps.iter().map(|s| s.output).collect()
    }
}

fn ff_layer(params: &ModelParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut pre = params.b_ff.clone();
    params.w_ff.add_matvec(x, &mut pre);
    let act = pre.iter().map(|z| z.tanh()).collect();
    (pre, act)
}

/// `tanh(W_ff x + b_ff)`
pub fn ff_forward(params: &ModelParams, x: &[f64]) -> Vec<f64> {
    ff_layer(params, x).1
}

/// One LSTM step from feedforward activation `a`.
pub fn lstm_step(params: &ModelParams, a: &[f64], state: &LstmState) -> (LstmState, GateRecord) {
    let i: Vec<f64> = params.input_gate.preactivation(a, &state.h).into_iter().map(sigmoid).collect();
    let f: Vec<f64> = params.forget_gate.preactivation(a, &state.h).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = params.cell_gate.preactivation(a, &state.h).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = params.output_gate.preactivation(a, &state.h).into_iter().map(sigmoid).collect();
    let c: Vec<f64> = (0..state.c.len()).map(|j| f[j] * state.c[j] + i[j] * g[j]).collect();
    let h: Vec<f64> = c.iter().zip(&o).map(|(c, o)| o * c.tanh()).collect();
    (
        LstmState { h, c },
        GateRecord {
            input: i,
            forget: f,
            cell: g,
            output: o,
        },
    )
}

/// `W_out h + b_out`, channels `(dx, dy, pressure, stroke_onset)`.
pub fn readout(params: &ModelParams, h: &[f64]) -> [f64; OUTPUTS] {
    let mut y = [0.0; OUTPUTS];
    y.copy_from_slice(&params.b_out);
    params.w_out.add_matvec(h, &mut y);
    y
}

fn check_input(params: &ModelParams, x: &[f64]) -> Result<()> {
    if x.len() != params.w_ff.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("input of length {}", params.w_ff.cols()),
            found: format!("length {}", x.len()),
        });
    }
    Ok(())
}

/// Runs the network with one input vector per step.
pub fn forward_inputs(params: &ModelParams, inputs: &[Vec<f64>]) -> Result<(Trajectory, ForwardTrace)> {
    let mut state = LstmState::zeros(params.n_lstm());
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        check_input(params, x)?;
        let (ff_pre, ff_act) = ff_layer(params, x);
        let (next, gates) = lstm_step(params, &ff_act, &state);
        let output = readout(params, &next.h);
        steps.push(StepRecord {
            input: x.clone(),
            ff_pre,
            ff_act,
            gates,
            c: next.c.clone(),
            h: next.h.clone(),
            output,
        });
        state = next;
    }
    let trace = ForwardTrace { steps };
    Ok((trace.outputs(), trace))
}

/// Runs `steps` steps with the same input at every step.
pub fn forward_sequence(params: &ModelParams, input: &[f64], steps: usize) -> Result<(Trajectory, ForwardTrace)> {
    check_input(params, input)?;
    let mut state = LstmState::zeros(params.n_lstm());
    // The feedforward activation is identical at every step.
    let (ff_pre, ff_act) = ff_layer(params, input);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, gates) = lstm_step(params, &ff_act, &state);
        let output = readout(params, &next.h);
        records.push(StepRecord {
            input: input.to_vec(),
            ff_pre: ff_pre.clone(),
            ff_act: ff_act.clone(),
            gates,
            c: next.c.clone(),
            h: next.h.clone(),
            output,
        });
        state = next;
    }
    let trace = ForwardTrace { steps: records };
    Ok((trace.outputs(), trace))
}

/// Trajectory for a pure label code.
pub fn generate(params: &ModelParams, label: Label, steps: usize) -> Trajectory {
    forward_sequence(params, &one_hot(label), steps)
        .expect("one-hot input has the model's input width")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label(i: usize) -> Label {
        Label::new(i).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_params(8, 6, 42);
        let b = init_params(8, 6, 42);
        assert_eq!(a, b);
        assert_ne!(a, init_params(8, 6, 43));
        assert!(a.forget_gate.b.iter().all(|&v| v == 1.0));
        for id in [TensorId::BFf, TensorId::BInput, TensorId::BCell, TensorId::BOutput, TensorId::BOut] {
            assert!(a.tensor(id).iter().all(|&v| v == 0.0), "{}", id.name());
        }
        for id in TensorId::ALL {
            let (_, fan_in) = a.shape(id);
            if fan_in == 1 {
                continue;
            }
            let s = 1.0 / (fan_in as f64).sqrt();
            assert!(a.tensor(id).iter().all(|v| v.abs() <= s), "{}", id.name());
        }
        assert_eq!(a.n_ff(), 8);
        assert_eq!(a.n_lstm(), 6);
    }

    #[test]
    fn ff_forward_zero_params_is_zero() {
        let p = ModelParams::zeros(5, 3);
        let x = one_hot(label(7));
        assert!(ff_forward(&p, &x).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ff_forward_scalar_evaluation() {
        // One unit, weight 2 from input 0, zero bias.
        let mut p = ModelParams::zeros(1, 1);
        p.w_ff.set(0, 0, 2.0);
        let a = ff_forward(&p, &one_hot(label(0)));
        assert!((a[0] - 2.0f64.tanh()).abs() < 1e-15);
        assert!((a[0] - 0.9640).abs() < 1e-4);
    }

    #[test]
    fn lstm_step_zero_params() {
        let p = ModelParams::zeros(2, 3);
        let (s, g) = lstm_step(&p, &[0.3, -0.7], &LstmState::zeros(3));
        assert!(g.input.iter().chain(&g.forget).chain(&g.output).all(|&v| v == 0.5));
        assert!(g.cell.iter().all(|&v| v == 0.0));
        assert!(s.c.iter().chain(&s.h).all(|&v| v == 0.0));
    }

    #[test]
    fn lstm_step_carries_half_the_cell() {
        let p = ModelParams::zeros(1, 1);
        let state = LstmState { h: vec![0.0], c: vec![1.0] };
        let (s, _) = lstm_step(&p, &[0.0], &state);
        assert_eq!(s.c[0], 0.5);
        let expected = 0.5 * 0.5f64.tanh();
        assert!((s.h[0] - expected).abs() < 1e-15);
        assert!((s.h[0] - 0.2311).abs() < 1e-4);
    }

    #[test]
    fn readout_is_affine() {
        let mut p = init_params(3, 4, 1);
        p.b_out = vec![0.5, -0.25, 1.0, 0.0];
        assert_eq!(readout(&p, &[0.0; 4]).to_vec(), p.b_out);

        let h1 = [0.1, -0.4, 0.3, 0.9];
        let h2 = [-0.2, 0.05, 0.6, -0.3];
        let sum: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| a + b).collect();
        let r0 = readout(&p, &[0.0; 4]);
        let (r1, r2, r12) = (readout(&p, &h1), readout(&p, &h2), readout(&p, &sum));
        for k in 0..4 {
            let lhs = r12[k] - r0[k];
            let rhs = (r1[k] - r0[k]) + (r2[k] - r0[k]);
            assert!((lhs - rhs).abs() < 1e-12);
        }

        let mut q = ModelParams::zeros(3, 4);
        q.b_out = vec![0.0, 0.0, 1.0, 0.0];
        assert_eq!(readout(&q, &h1), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_params_generate_zeros() {
        let p = ModelParams::zeros(4, 4);
        let (out, trace) = forward_sequence(&p, &one_hot(label(2)), 7).unwrap();
        assert_eq!(trace.len(), 7);
        assert!(out.iter().all(|r| *r == [0.0; 4]));
    }

    #[test]
    fn single_step_composes_the_layers() {
        let p = init_params(5, 4, 9);
        let x = one_hot(label(3));
        let (out, _) = forward_sequence(&p, &x, 1).unwrap();
        let a = ff_forward(&p, &x);
        let (s, _) = lstm_step(&p, &a, &LstmState::zeros(4));
        assert_eq!(out[0], readout(&p, &s.h));
    }

    #[test]
    fn shorter_run_is_a_prefix() {
        let p = init_params(6, 5, 3);
        let x = one_hot(label(10));
        let (short, _) = forward_sequence(&p, &x, 5).unwrap();
        let (long, _) = forward_sequence(&p, &x, 10).unwrap();
        assert_eq!(&long[..5], &short[..]);
    }

    #[test]
    fn constant_and_per_step_paths_agree() {
        let p = init_params(6, 5, 3);
        let x = vec![0.3; ALPHABET_SIZE];
        let (a, ta) = forward_sequence(&p, &x, 6).unwrap();
        let (b, tb) = forward_inputs(&p, &vec![x; 6]).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
    }

    #[test]
    fn trace_replays_outputs() {
        let p = init_params(6, 5, 11);
        let (out, trace) = forward_sequence(&p, &one_hot(label(4)), 8).unwrap();
        for (t, step) in trace.steps.iter().enumerate() {
            assert_eq!(readout(&p, &step.h), out[t]);
            let h: Vec<f64> = step.c.iter().zip(&step.gates.output).map(|(c, o)| o * c.tanh()).collect();
            assert_eq!(h, step.h);
        }
    }

    #[test]
    fn one_hot_codes() {
        let e0 = one_hot(label(0));
        let e25 = one_hot(label(25));
        assert_eq!(e0[0], 1.0);
        assert_eq!(e25[25], 1.0);
        assert_eq!(e0.iter().sum::<f64>(), 1.0);
        assert_eq!(e25.iter().sum::<f64>(), 1.0);
        assert!(matches!(one_hot_index(26), Err(Error::LabelOutOfRange(26))));
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let p = init_params(3, 3, 0);
        assert!(forward_sequence(&p, &[1.0; 5], 3).is_err());
    }

    proptest! {
        #[test]
        fn hidden_state_is_bounded(seed in any::<u64>(), scale in 0.1f64..3.0, steps in 1usize..30) {
            let mut p = init_params(4, 4, seed);
            for id in TensorId::ALL {
                for v in p.tensor_mut(id) {
                    *v *= scale;
                }
            }
            let x: Vec<f64> = (0..ALPHABET_SIZE).map(|i| ((i as f64) * 0.37).sin() * scale).collect();
            let (_, trace) = forward_sequence(&p, &x, steps).unwrap();
            for s in &trace.steps {
                prop_assert!(s.h.iter().all(|v| v.abs() < 1.0));
                prop_assert!(s.c.iter().all(|v| v.is_finite()));
                prop_assert!(s.ff_act.iter().all(|v| v.abs() <= 1.0));
            }
        }

        #[test]
        fn forward_is_pure(seed in any::<u64>(), l in 0usize..26) {
            let p = init_params(5, 5, seed);
            let x = one_hot(Label::new(l).unwrap());
            let a = forward_sequence(&p, &x, 12).unwrap();
            let b = forward_sequence(&p, &x, 12).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
