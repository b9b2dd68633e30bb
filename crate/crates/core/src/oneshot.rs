//! Inference-time optimization on a trained generator.
//!
//! * [`one_shot_acquire`] fits a single example of a new character by
//!   updating only the feedforward layer's incoming weights, leaving the LSTM
//!   and readout frozen.
//! * [`infer_class`] classifies a trajectory by gradient descent on the input
//!   code, starting from zeros, and taking the argmax.
//! * [`generate_variants`] perturbs the label code with Gaussian noise.
//! * [`blend`] feeds a convex mixture of two label codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{CharacterSample, Label, ALPHABET_SIZE};
use crate::error::{Error, Result};
use crate::network::{forward_inputs, forward_sequence, one_hot, ModelParams, TensorId, Trajectory};
use crate::training::{
    adam_step, backprop_through_time, backprop_with, mse_loss, sgd_step, squared_error, AdamConfig, AdamState,
    Reduction, TensorMask,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OneShotOptimizer {
    /// Adam with fresh moments and default betas.
    #[default]
    Adam,
    GradientDescent,
}

/// Which feedforward tensors one-shot acquisition adapts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedforwardMask {
    #[default]
    WeightsAndBias,
    WeightsOnly,
}

impl FeedforwardMask {
    pub fn tensor_mask(self) -> TensorMask {
        match self {
            FeedforwardMask::WeightsAndBias => TensorMask::feedforward(),
            FeedforwardMask::WeightsOnly => TensorMask::only(&[TensorId::WFf]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneShotConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub optimizer: OneShotOptimizer,
    pub mask: FeedforwardMask,
}

impl Default for OneShotConfig {
    fn default() -> Self {
        Self {
            iterations: 13_000,
            learning_rate: 0.001,
            optimizer: OneShotOptimizer::Adam,
            mask: FeedforwardMask::WeightsAndBias,
        }
    }
}

impl OneShotConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("one-shot iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("one-shot learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of acquiring one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub label: Label,
    pub params: ModelParams,
    /// Loss before each update; `losses[0]` is the pre-inference loss.
    pub losses: Vec<f64>,
    /// Loss after the last update.
    pub final_loss: f64,
}

impl Acquisition {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(self.final_loss)
    }
}

fn sample_loss(params: &ModelParams, input: &[f64], target: &Trajectory) -> Result<f64> {
    let (out, _) = forward_sequence(params, input, target.len())?;
    mse_loss(&out, target)
}

/// Fits `sample` under its own one-hot code by adapting only the feedforward
/// layer's incoming tensors. Every other tensor is returned bit-identical.
pub fn one_shot_acquire(params: &ModelParams, sample: &CharacterSample, config: &OneShotConfig) -> Result<Acquisition> {
    let mut params = params.clone();
    let input = one_hot(sample.label());
    let target = sample.targets();
    let mask = config.mask.tensor_mask();
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut state = AdamState::new(&params);
    let mut losses = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (out, trace) = forward_sequence(&params, &input, target.len())?;
        losses.push(mse_loss(&out, &target)?);
        let (grads, _) = backprop_through_time(&params, &trace, &target)?;
        match config.optimizer {
            OneShotOptimizer::Adam => adam_step(&mut params, &grads, &mut state, &adam, &mask),
            OneShotOptimizer::GradientDescent => sgd_step(&mut params, &grads, config.learning_rate, &mask),
        }
    }
    let final_loss = sample_loss(&params, &input, &target)?;
    Ok(Acquisition {
        label: sample.label(),
        params,
        losses,
        final_loss,
    })
}

/// Acquires several examples one after another into a single model, in
/// alphabetical label order.
pub fn acquire_sequentially(
    params: &ModelParams,
    samples: &[CharacterSample],
    config: &OneShotConfig,
) -> Result<(ModelParams, Vec<Acquisition>)> {
    let mut ordered: Vec<&CharacterSample> = samples.iter().collect();
    ordered.sort_by_key(|s| s.label());
    let mut current = params.clone();
    let mut log = Vec::with_capacity(ordered.len());
    for s in ordered {
        let acq = one_shot_acquire(&current, s, config)?;
        current = acq.params.clone();
        log.push(acq);
    }
    Ok((current, log))
}

/// One-shot outcome on a trained versus an untrained prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorComparison {
    pub label: Label,
    pub iterations: usize,
    pub learning_rate: f64,
    pub trained: Acquisition,
    pub untrained: Acquisition,
}

impl PriorComparison {
    pub fn trained_final_loss(&self) -> f64 {
        self.trained.final_loss
    }

    pub fn untrained_final_loss(&self) -> f64 {
        self.untrained.final_loss
    }

    pub fn trained_wins(&self) -> bool {
        self.trained.final_loss < self.untrained.final_loss
    }
}

/// Runs the same acquisition from a trained and from an untrained model.
pub fn compare_priors(
    trained: &ModelParams,
    untrained: &ModelParams,
    sample: &CharacterSample,
    config: &OneShotConfig,
) -> Result<PriorComparison> {
    if !trained.same_architecture(untrained) {
        return Err(Error::ArchitectureMismatch(format!(
            "trained {}x{} vs untrained {}x{}",
            trained.n_ff(),
            trained.n_lstm(),
            untrained.n_ff(),
            untrained.n_lstm()
        )));
    }
    Ok(PriorComparison {
        label: sample.label(),
        iterations: config.iterations,
        learning_rate: config.learning_rate,
        trained: one_shot_acquire(trained, sample, config)?,
        untrained: one_shot_acquire(untrained, sample, config)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassInferConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub reduction: Reduction,
}

impl Default for ClassInferConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            learning_rate: 0.01,
            reduction: Reduction::Sum,
        }
    }
}

impl ClassInferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig("class inference iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("class inference learning rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferredClass {
    pub input: Vec<f64>,
    pub label: Label,
    /// Objective value before each descent step.
    pub losses: Vec<f64>,
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Recovers an input code for `query` by gradient descent from the zero
/// vector, holding the code constant across steps. Parameters are read only.
pub fn infer_class(params: &ModelParams, query: &CharacterSample, config: &ClassInferConfig) -> Result<InferredClass> {
    infer_class_from_trajectory(params, &query.targets(), config)
}

/// [`infer_class`] for an arbitrary target, e.g. a generated trajectory whose
/// pressure and onset channels are not binary.
pub fn infer_class_from_trajectory(
    params: &ModelParams,
    target: &[[f64; 4]],
    config: &ClassInferConfig,
) -> Result<InferredClass> {
    let mut input = vec![0.0; ALPHABET_SIZE];
    let mut losses = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let (out, trace) = forward_sequence(params, &input, target.len())?;
        losses.push(squared_error(&out, target, config.reduction)?);
        let (_, dx) = backprop_with(params, &trace, target, config.reduction)?;
        for (x, g) in input.iter_mut().zip(&dx) {
            *x -= config.learning_rate * g;
        }
    }
    let label = Label::new(argmax(&input))?;
    Ok(InferredClass { input, label, losses })
}

/// How variant noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// Fresh noise at every time step.
    #[default]
    PerStep,
    /// One noise vector per variant, held for the whole sequence.
    PerVariant,
}

pub const DEFAULT_VARIANT_SIGMA: f64 = 0.05;

/// `count` trajectories from `one_hot(label) + noise`, noise i.i.d.
/// `N(0, noise_sigma^2)` per step and dimension.
pub fn generate_variants(
    params: &ModelParams,
    label: Label,
    noise_sigma: f64,
    count: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    generate_variants_with(params, label, noise_sigma, count, steps, seed, NoiseMode::PerStep)
}

pub fn generate_variants_with(
    params: &ModelParams,
    label: Label,
    noise_sigma: f64,
    count: usize,
    steps: usize,
    seed: u64,
    mode: NoiseMode,
) -> Result<Vec<Trajectory>> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise_sigma must be finite and >= 0, got {noise_sigma}")));
    }
    let base = one_hot(label);
    let noise = Normal::new(0.0, noise_sigma).expect("sigma checked above");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        base.iter()
            .map(|b| if noise_sigma == 0.0 { *b } else { b + noise.sample(rng) })
            .collect()
    };
    let mut variants = Vec::with_capacity(count);
    for _ in 0..count {
        let inputs: Vec<Vec<f64>> = match mode {
            NoiseMode::PerStep => (0..steps).map(|_| draw(&mut rng)).collect(),
            NoiseMode::PerVariant => vec![draw(&mut rng); steps],
        };
        variants.push(forward_inputs(params, &inputs)?.0);
    }
    Ok(variants)
}

/// `alpha * one_hot(a) + (1 - alpha) * one_hot(b)`
pub fn blend_input(label_a: Label, label_b: Label, alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mut v = vec![0.0; ALPHABET_SIZE];
    v[label_a.index()] += alpha;
    v[label_b.index()] += 1.0 - alpha;
    Ok(v)
}

pub fn blend(params: &ModelParams, label_a: Label, label_b: Label, alpha: f64, steps: usize) -> Result<Trajectory> {
    let x = blend_input(label_a, label_b, alpha)?;
    Ok(forward_sequence(params, &x, steps)?.0)
}

/// `columns` mixing weights from 1 down to 0, both ends included.
pub fn blend_alphas(columns: usize) -> Vec<f64> {
    match columns {
        0 => Vec::new(),
        1 => vec![1.0],
        n => (0..n).map(|k| 1.0 - k as f64 / (n - 1) as f64).collect(),
    }
}

/// The tenth-step mixtures 0.9, 0.8, ..., 0.1.
pub fn tenth_step_alphas() -> Vec<f64> {
    (1..10).rev().map(|k| k as f64 / 10.0).collect()
}

/// Which labels a checkpoint has acquired one-shot, and the sequence length
/// associated with each known label.
///
/// Stored as `key = value` lines: `acquired = n,o,p` and `length.<letter> = T`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub acquired: Vec<Label>,
    pub lengths: BTreeMap<Label, usize>,
}

impl Manifest {
    pub fn record_acquired(&mut self, label: Label, length: usize) {
        if !self.acquired.contains(&label) {
            self.acquired.push(label);
        }
        self.lengths.insert(label, length);
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        let acquired: Vec<String> = self.acquired.iter().map(|l| l.to_string()).collect();
        writeln!(out, "acquired = {}", acquired.join(",")).unwrap();
        for (l, t) in &self.lengths {
            writeln!(out, "length.{l} = {t}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, "key", "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "acquired" {
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let l: Label = part.parse().map_err(|e: Error| Error::parse(n + 1, "acquired", e.to_string()))?;
                    if !m.acquired.contains(&l) {
                        m.acquired.push(l);
                    }
                }
            } else if let Some(letter) = key.strip_prefix("length.") {
                let l: Label = letter.parse().map_err(|e: Error| Error::parse(n + 1, key, e.to_string()))?;
                let t: usize = value
                    .parse()
                    .map_err(|_| Error::parse(n + 1, key, format!("'{value}' is not a length")))?;
                m.lengths.insert(l, t);
            } else {
                return Err(Error::parse(n + 1, key, "unknown key"));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.format()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// One value per line, 26 lines, for bar plots of an inferred code.
pub fn format_input_vector(input: &[f64]) -> String {
    let mut out = String::new();
    for v in input {
        writeln!(out, "{v}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{default_templates, render_template};
    use crate::network::{generate, init_params};

    fn template_sample(c: char, seed: u64) -> CharacterSample {
        let label = Label::from_char(c).unwrap();
        let t = default_templates().into_iter().find(|t| t.label == label).unwrap();
        render_template(&t, 0.02, seed).unwrap()
    }

    #[test]
    fn acquisition_freezes_everything_but_the_feedforward_layer() {
        let p = init_params(6, 5, 2);
        let s = template_sample('v', 1);
        let acq = one_shot_acquire(&p, &s, &OneShotConfig::with_iterations(20)).unwrap();
        for id in TensorId::ALL {
            if id.is_feedforward() {
                assert!(!acq.params.tensor_bits_eq(&p, id), "{} should move", id.name());
            } else {
                assert!(acq.params.tensor_bits_eq(&p, id), "{} changed", id.name());
            }
        }
        assert_eq!(acq.losses.len(), 20);
        assert!(acq.losses.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn weights_only_mask_leaves_the_bias() {
        let p = init_params(6, 5, 2);
        let s = template_sample('o', 1);
        let cfg = OneShotConfig {
            iterations: 5,
            mask: FeedforwardMask::WeightsOnly,
            ..Default::default()
        };
        let acq = one_shot_acquire(&p, &s, &cfg).unwrap();
        assert!(acq.params.tensor_bits_eq(&p, TensorId::BFf));
        assert!(!acq.params.tensor_bits_eq(&p, TensorId::WFf));
    }

    #[test]
    fn first_recorded_loss_is_the_unadapted_model() {
        let p = init_params(6, 5, 3);
        let s = template_sample('n', 4);
        let acq = one_shot_acquire(&p, &s, &OneShotConfig::with_iterations(3)).unwrap();
        let pre = generate(&p, s.label(), s.len());
        assert_eq!(acq.losses[0], mse_loss(&pre, &s.targets()).unwrap());
    }

    #[test]
    fn gradient_descent_mode_also_fits() {
        let p = init_params(6, 5, 3);
        let s = template_sample('z', 4);
        let cfg = OneShotConfig {
            iterations: 200,
            learning_rate: 0.5,
            optimizer: OneShotOptimizer::GradientDescent,
            ..Default::default()
        };
        let acq = one_shot_acquire(&p, &s, &cfg).unwrap();
        assert!(acq.final_loss < acq.initial_loss());
    }

    #[test]
    fn identical_priors_report_identical_losses() {
        let p = init_params(5, 4, 8);
        let s = template_sample('x', 2);
        let cfg = OneShotConfig::with_iterations(10);
        let r = compare_priors(&p, &p, &s, &cfg).unwrap();
        assert_eq!(r.trained_final_loss(), r.untrained_final_loss());
        assert_eq!(r.iterations, 10);
        assert_eq!(r.learning_rate, 0.001);
        assert!(compare_priors(&p, &init_params(5, 3, 8), &s, &cfg).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.0; 26]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0, 1.0]), 1);
        assert_eq!(argmax(&[-3.0, -1.0, -2.0]), 1);
    }

    #[test]
    fn zero_rounds_of_inference_predict_label_zero() {
        let p = init_params(4, 4, 1);
        let s = template_sample('q', 1);
        let cfg = ClassInferConfig { iterations: 0, ..Default::default() };
        let r = infer_class(&p, &s, &cfg).unwrap();
        assert!(r.input.iter().all(|&v| v == 0.0));
        assert_eq!(r.label.index(), 0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inference_leaves_params_and_is_deterministic() {
        let p = init_params(5, 4, 6);
        let before = p.clone();
        let s = template_sample('s', 3);
        let cfg = ClassInferConfig { iterations: 25, ..Default::default() };
        let a = infer_class(&p, &s, &cfg).unwrap();
        let b = infer_class(&p, &s, &cfg).unwrap();
        assert_eq!(p, before);
        assert_eq!(a, b);
        assert!(a.losses.last().unwrap() < &a.losses[0]);
    }

    #[test]
    fn zero_noise_variants_equal_the_base() {
        let p = init_params(5, 4, 6);
        let l = Label::from_char('p').unwrap();
        let base = generate(&p, l, 30);
        let vs = generate_variants(&p, l, 0.0, 3, 30, 9).unwrap();
        assert_eq!(vs.len(), 3);
        assert!(vs.iter().all(|v| *v == base));
    }

    #[test]
    fn noisy_variants_depend_on_seed() {
        let p = init_params(5, 4, 6);
        let l = Label::from_char('p').unwrap();
        let a = generate_variants(&p, l, 0.05, 2, 20, 1).unwrap();
        let b = generate_variants(&p, l, 0.05, 2, 20, 2).unwrap();
        assert_ne!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(a, generate_variants(&p, l, 0.05, 2, 20, 1).unwrap());
        let held = generate_variants_with(&p, l, 0.05, 1, 20, 1, NoiseMode::PerVariant).unwrap();
        assert_ne!(held[0], a[0]);
    }

    #[test]
    fn blend_endpoints_are_pure_codes() {
        let p = init_params(5, 4, 6);
        let (a, b) = (Label::from_char('n').unwrap(), Label::from_char('u').unwrap());
        assert_eq!(blend(&p, a, b, 1.0, 25).unwrap(), generate(&p, a, 25));
        assert_eq!(blend(&p, a, b, 0.0, 25).unwrap(), generate(&p, b, 25));
        assert!(blend(&p, a, b, 1.5, 25).is_err());
        let x = blend_input(a, b, 0.7).unwrap();
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_schedules() {
        let a = blend_alphas(10);
        assert_eq!(a.len(), 10);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[9], 0.0);
        let t = tenth_step_alphas();
        assert_eq!(t.len(), 9);
        assert!((t[0] - 0.9).abs() < 1e-15 && (t[8] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest::default();
        m.record_acquired(Label::from_char('n').unwrap(), 34);
        m.record_acquired(Label::from_char('q').unwrap(), 45);
        m.lengths.insert(Label::from_char('a').unwrap(), 43);
        let text = m.format();
        assert!(text.starts_with("acquired = n,q\n"));
        assert_eq!(Manifest::parse(&text).unwrap(), m);
        assert!(Manifest::parse("bogus = 1").is_err());
    }
}
