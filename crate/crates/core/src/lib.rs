//! A feedforward + LSTM generator for pen trajectories, and the inference-time
//! procedures built on it: one-shot acquisition of a new character into the
//! feedforward weights, classification by optimizing the input code, variant
//! generation by input noise, and blending of two codes.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod network;
pub mod oneshot;
pub mod training;

pub use corpus::{CharacterSample, Corpus, GlyphTemplate, Label, TrajectoryPoint, ALPHABET_SIZE};
pub use error::{Error, Result};
pub use network::{
    forward_sequence, init_params, one_hot, ForwardTrace, LstmState, ModelParams, TensorId,
    Trajectory,
};
pub use oneshot::{ClassInferConfig, OneShotConfig};
pub use training::{AdamConfig, AdamState, Gradients, TensorMask, TrainConfig};
