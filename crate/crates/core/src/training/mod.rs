//! Loss, exact backpropagation through time, Adam, and the training loop.

mod adam;
mod backprop;

pub use adam::{adam_step, sgd_step, AdamConfig, AdamState, TensorMask};
pub use backprop::{backprop_through_time, backprop_with, mse_loss, squared_error, Reduction};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::network::{forward_sequence, init_params, one_hot, ModelParams, TensorId};

/// Gradient of a scalar loss, one tensor per [`ModelParams`] tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(ModelParams);

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients(ModelParams::zeros(params.n_ff(), params.n_lstm()))
    }

    pub fn tensor(&self, id: TensorId) -> &[f64] {
        self.0.tensor(id)
    }

    pub fn tensor_mut(&mut self, id: TensorId) -> &mut [f64] {
        self.0.tensor_mut(id)
    }

    pub fn params(&self) -> &ModelParams {
        &self.0
    }

    pub(crate) fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub steps: usize,
    pub seed: u64,
    pub n_ff: usize,
    pub n_lstm: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            steps: 20_000,
            seed: 0,
            n_ff: 100,
            n_lstm: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate().map_err(Error::InvalidConfig)?;
        if self.n_ff == 0 || self.n_lstm == 0 {
            return Err(Error::InvalidConfig("layer sizes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Loss of the drawn sample at each step, before that step's update.
    pub losses: Vec<f64>,
}

/// Trains from `init_params(n_ff, n_lstm, seed)` on single uniformly drawn
/// samples. The caller decides which labels the corpus contains.
pub fn train(corpus: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(corpus, config, |_, _, _| {})
}

/// [`train`] with a hook called after every update as `(step, params, loss)`,
/// `step` counting from 1. Used for periodic checkpoints.
pub fn train_with(
    corpus: &Corpus,
    config: &TrainConfig,
    mut on_step: impl FnMut(usize, &ModelParams, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut params = init_params(config.n_ff, config.n_lstm, config.seed);
    let mut state = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let targets: Vec<_> = corpus.samples.iter().map(|s| s.targets()).collect();
    let inputs: Vec<_> = corpus.samples.iter().map(|s| one_hot(s.label())).collect();
    let mask = TensorMask::all();

    let mut losses = Vec::with_capacity(config.steps);
    for step in 1..=config.steps {
        let k = rng.random_range(0..corpus.len());
        let target = &targets[k];
        let (out, trace) = forward_sequence(&params, &inputs[k], target.len())?;
        let loss = mse_loss(&out, target)?;
        let (grads, _) = backprop_through_time(&params, &trace, target)?;
        adam_step(&mut params, &grads, &mut state, &config.adam, &mask);
        losses.push(loss);
        on_step(step, &params, loss);
    }
    Ok(TrainOutcome { params, losses })
}

/// Mean per-sample loss over a corpus.
pub fn evaluate(params: &ModelParams, corpus: &Corpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0.0;
    for s in &corpus.samples {
        let target = s.targets();
        let (out, _) = forward_sequence(params, &one_hot(s.label()), target.len())?;
        total += mse_loss(&out, &target)?;
    }
    Ok(total / corpus.len() as f64)
}

/// Mean of a window of a loss history.
pub fn window_mean(losses: &[f64]) -> f64 {
    losses.iter().sum::<f64>() / losses.len() as f64
}

/// Two-column text, `step loss`, steps counted from 1.
pub fn format_loss_history(losses: &[f64]) -> String {
    let mut out = String::new();
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{} {}", i + 1, l).unwrap();
    }
    out
}

pub fn save_loss_history(losses: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_loss_history(losses)).map_err(|e| Error::io(path, e))
}
