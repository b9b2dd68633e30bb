//! Fixtures shared by the criterion benches.

use glyphlstm::corpus::{default_templates, render_template};
use glyphlstm::{init_params, CharacterSample, Label, ModelParams};

/// Desk-scale model: 32 feedforward and 32 LSTM units.
pub fn desk_model(seed: u64) -> ModelParams {
    init_params(32, 32, seed)
}

pub fn sample(c: char) -> CharacterSample {
    let label = Label::from_char(c).expect("letter");
    let t = default_templates()
        .into_iter()
        .find(|t| t.label == label)
        .expect("template");
    render_template(&t, glyphlstm::corpus::DEFAULT_JITTER, 1).expect("renders")
}
