use crate::network::{ModelParams, TensorId};

use super::Gradients;

/// Adam hyperparameters; defaults are the usual 0.001 / 0.9 / 0.999 / 1e-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate > 0.0) {
            return Err(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(format!("betas must lie in [0, 1), got {} / {}", self.beta1, self.beta2));
        }
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Which tensors an update may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorMask([bool; 16]);

impl TensorMask {
    pub fn all() -> Self {
        TensorMask([true; 16])
    }

    pub fn none() -> Self {
        TensorMask([false; 16])
    }

    pub fn only(ids: &[TensorId]) -> Self {
        let mut mask = Self::none();
        for &id in ids {
            mask.0[Self::slot(id)] = true;
        }
        mask
    }

    /// `{W_ff, b_ff}`
    pub fn feedforward() -> Self {
        Self::only(&[TensorId::WFf, TensorId::BFf])
    }

    pub fn contains(&self, id: TensorId) -> bool {
        self.0[Self::slot(id)]
    }

    fn slot(id: TensorId) -> usize {
        TensorId::ALL.iter().position(|&x| x == id).unwrap()
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of the masked tensors. The step counter
/// advances once per call regardless of the mask; moments of unmasked
/// tensors are left alone.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    config: &AdamConfig,
    mask: &TensorMask,
) {
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.beta1.powi(t);
    let bc2 = 1.0 - config.beta2.powi(t);
    for id in TensorId::ALL {
        if !mask.contains(id) {
            continue;
        }
        let g = grads.tensor(id);
        let m = state.m.tensor_mut(id);
        for (mi, gi) in m.iter_mut().zip(g) {
            *mi = config.beta1 * *mi + (1.0 - config.beta1) * gi;
        }
        let v = state.v.tensor_mut(id);
        for (vi, gi) in v.iter_mut().zip(g) {
            *vi = config.beta2 * *vi + (1.0 - config.beta2) * gi * gi;
        }
        let (m, v) = (state.m.tensor(id), state.v.tensor(id));
        for ((p, mi), vi) in params.tensor_mut(id).iter_mut().zip(m).zip(v) {
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

/// Plain gradient descent on the masked tensors.
pub fn sgd_step(params: &mut ModelParams, grads: &Gradients, learning_rate: f64, mask: &TensorMask) {
    for id in TensorId::ALL {
        if mask.contains(id) {
            for (p, g) in params.tensor_mut(id).iter_mut().zip(grads.tensor(id)) {
                *p -= learning_rate * g;
            }
        }
    }
}
