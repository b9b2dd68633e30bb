//! Synthetic character trajectories in the pen-delta format.
//!
//! Every sample is a sequence of `(dx, dy, pressure, stroke_onset)` steps with
//! a label in `a..=z`. The alphabet is split into a trained half (`a..=m`)
//! and a held-out half (`n..=z`).

mod io;
mod template;

pub use io::{load_corpus, parse_corpus, save_corpus, write_corpus};
pub use template::{
    default_templates, format_templates, parse_templates, render_template, GlyphTemplate, Stroke,
};

use std::fmt;

use crate::error::{Error, Result};

/// Number of character classes, and the length of the one-hot input.
pub const ALPHABET_SIZE: usize = 26;

/// Number of labels in the trained half of the alphabet (`a..=m`).
pub const TRAINED_COUNT: usize = 13;

/// Standard deviation of the control-point jitter used for corpus samples,
/// in unit-square template coordinates.
pub const DEFAULT_JITTER: f64 = 0.02;

/// Samples rendered per trained character in a default corpus.
pub const DEFAULT_VARIANTS: usize = 40;

/// A character class `0..=25`, i.e. `'a'..='z'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(u8);

impl Label {
    pub fn new(index: usize) -> Result<Self> {
        if index < ALPHABET_SIZE {
            Ok(Label(index as u8))
        } else {
            Err(Error::LabelOutOfRange(index))
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        if c.is_ascii_lowercase() {
            Ok(Label(c as u8 - b'a'))
        } else {
            Err(Error::InvalidConfig(format!("'{c}' is not a letter a-z")))
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn as_char(self) -> char {
        (b'a' + self.0) as char
    }

    pub fn is_trained(self) -> bool {
        self.index() < TRAINED_COUNT
    }

    pub fn all() -> impl Iterator<Item = Label> {
        (0..ALPHABET_SIZE as u8).map(Label)
    }

    /// `a..=m`
    pub fn trained() -> impl Iterator<Item = Label> {
        (0..TRAINED_COUNT as u8).map(Label)
    }

    /// `n..=z`
    pub fn heldout() -> impl Iterator<Item = Label> {
        (TRAINED_COUNT as u8..ALPHABET_SIZE as u8).map(Label)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    /// Accepts either a letter (`"q"`) or an index (`"16"`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut chars = s.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if c.is_ascii_lowercase() {
                return Label::from_char(c);
            }
        }
        let index: usize = s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("'{s}' is not a label")))?;
        Label::new(index)
    }
}

/// One time step of pen state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub dx: f64,
    pub dy: f64,
    pub pressure: f64,
    pub stroke_onset: f64,
}

impl TrajectoryPoint {
    pub fn new(dx: f64, dy: f64, pressure: f64, stroke_onset: f64) -> Self {
        Self {
            dx,
            dy,
            pressure,
            stroke_onset,
        }
    }

    /// `[dx, dy, pressure, stroke_onset]`, the readout channel order.
    pub fn to_array(self) -> [f64; 4] {
        [self.dx, self.dy, self.pressure, self.stroke_onset]
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.dx.is_finite() && self.dy.is_finite()) {
            return Err("non-finite displacement".into());
        }
        if !(0.0..=1.0).contains(&self.pressure) {
            return Err(format!("pressure {} outside [0, 1]", self.pressure));
        }
        if self.stroke_onset != 0.0 && self.stroke_onset != 1.0 {
            return Err(format!("stroke_onset {} is not 0 or 1", self.stroke_onset));
        }
        Ok(())
    }
}

/// A labeled trajectory of at least two points that starts a stroke.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterSample {
    label: Label,
    points: Vec<TrajectoryPoint>,
}

impl CharacterSample {
    pub fn new(label: Label, points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSample(format!(
                "needs at least 2 points, got {}",
                points.len()
            )));
        }
        for (t, p) in points.iter().enumerate() {
            p.check()
                .map_err(|m| Error::InvalidSample(format!("point {t}: {m}")))?;
        }
        if points[0].stroke_onset != 1.0 {
            return Err(Error::InvalidSample(
                "first point must have stroke_onset = 1".into(),
            ));
        }
        Ok(Self { label, points })
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Targets in readout channel order, one row per step.
    pub fn targets(&self) -> Vec<[f64; 4]> {
        self.points.iter().map(|p| p.to_array()).collect()
    }

    pub fn stroke_count(&self) -> usize {
        self.points.iter().filter(|p| p.stroke_onset == 1.0).count()
    }
}

/// Absolute pen positions from per-step deltas, accumulated from the origin.
pub fn integrate(sample: &CharacterSample) -> Vec<[f64; 2]> {
    integrate_deltas(sample.points.iter().map(|p| (p.dx, p.dy)))
}

pub fn integrate_deltas(deltas: impl IntoIterator<Item = (f64, f64)>) -> Vec<[f64; 2]> {
    let (mut x, mut y) = (0.0, 0.0);
    deltas
        .into_iter()
        .map(|(dx, dy)| {
            x += dx;
            y += dy;
            [x, y]
        })
        .collect()
}

/// First differences of absolute positions, with the origin prepended.
pub fn difference(positions: &[[f64; 2]]) -> Vec<(f64, f64)> {
    let mut prev = [0.0, 0.0];
    positions
        .iter()
        .map(|p| {
            let d = (p[0] - prev[0], p[1] - prev[1]);
            prev = *p;
            d
        })
        .collect()
}

/// A labeled collection of samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub samples: Vec<CharacterSample>,
}

impl Corpus {
    pub fn new(samples: Vec<CharacterSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn trained_labels() -> Vec<Label> {
        Label::trained().collect()
    }

    pub fn heldout_labels() -> Vec<Label> {
        Label::heldout().collect()
    }

    /// Keeps only samples whose label is in the trained half.
    pub fn trained_only(&self) -> Corpus {
        self.filter(|l| l.is_trained())
    }

    pub fn heldout_only(&self) -> Corpus {
        self.filter(|l| !l.is_trained())
    }

    pub fn filter(&self, mut keep: impl FnMut(Label) -> bool) -> Corpus {
        Corpus::new(
            self.samples
                .iter()
                .filter(|s| keep(s.label()))
                .cloned()
                .collect(),
        )
    }

    pub fn samples_for(&self, label: Label) -> impl Iterator<Item = &CharacterSample> {
        self.samples.iter().filter(move |s| s.label() == label)
    }

    /// Sample counts per label, in label order.
    pub fn counts(&self) -> [usize; ALPHABET_SIZE] {
        let mut counts = [0; ALPHABET_SIZE];
        for s in &self.samples {
            counts[s.label().index()] += 1;
        }
        counts
    }

    /// Mean sample length for `label`, rounded, or `None` if absent.
    pub fn mean_length(&self, label: Label) -> Option<usize> {
        let lens: Vec<usize> = self.samples_for(label).map(|s| s.len()).collect();
        mean_length(&lens)
    }
}

/// Rounded mean of sequence lengths.
pub fn mean_length(lengths: &[usize]) -> Option<usize> {
    if lengths.is_empty() {
        None
    } else {
        let total: usize = lengths.iter().sum();
        Some((total as f64 / lengths.len() as f64).round() as usize)
    }
}

/// Renders `variants_per_label` jittered samples for each template.
///
/// Seeds are derived from `seed`, the label and the variant index, so the
/// output does not depend on template order.
pub fn generate_corpus(
    templates: &[GlyphTemplate],
    variants_per_label: usize,
    jitter_sigma: f64,
    seed: u64,
) -> Result<Corpus> {
    let mut samples = Vec::with_capacity(templates.len() * variants_per_label);
    for t in templates {
        for v in 0..variants_per_label {
            samples.push(render_template(
                t,
                jitter_sigma,
                variant_seed(seed, t.label, v),
            )?);
        }
    }
    Ok(Corpus::new(samples))
}

/// Seed for variant `index` of `label` under a base seed.
pub fn variant_seed(seed: u64, label: Label, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((label.index() as u64) << 32)
        ^ index as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(dx: f64, dy: f64, onset: f64) -> TrajectoryPoint {
        TrajectoryPoint::new(dx, dy, 1.0, onset)
    }

    #[test]
    fn label_round_trips_chars_and_indices() {
        assert_eq!(Label::from_char('a').unwrap().index(), 0);
        assert_eq!(Label::from_char('z').unwrap().index(), 25);
        assert_eq!("q".parse::<Label>().unwrap().as_char(), 'q');
        assert_eq!("13".parse::<Label>().unwrap().as_char(), 'n');
        assert!(Label::new(26).is_err());
        assert!("A".parse::<Label>().is_err());
    }

    #[test]
    fn trained_and_heldout_partition_the_alphabet() {
        let trained = Corpus::trained_labels();
        let heldout = Corpus::heldout_labels();
        assert_eq!(trained.len(), 13);
        assert_eq!(heldout.len(), 13);
        assert!(trained.iter().all(|l| !heldout.contains(l)));
        let mut all: Vec<_> = trained.into_iter().chain(heldout).collect();
        all.sort();
        assert_eq!(all, Label::all().collect::<Vec<_>>());
        assert_eq!(Corpus::heldout_labels()[0].as_char(), 'n');
        assert_eq!(Corpus::trained_labels()[12].as_char(), 'm');
    }

    #[test]
    fn sample_validation() {
        let l = Label::new(0).unwrap();
        assert!(CharacterSample::new(l, vec![pt(0.0, 0.0, 1.0)]).is_err());
        assert!(CharacterSample::new(l, vec![pt(0.0, 0.0, 0.0), pt(0.1, 0.0, 0.0)]).is_err());
        let bad_pressure = TrajectoryPoint::new(0.0, 0.0, 1.5, 1.0);
        assert!(CharacterSample::new(l, vec![bad_pressure, pt(0.0, 0.0, 0.0)]).is_err());
        let bad_onset = TrajectoryPoint::new(0.0, 0.0, 1.0, 0.5);
        assert!(CharacterSample::new(l, vec![pt(0.0, 0.0, 1.0), bad_onset]).is_err());
        let ok = CharacterSample::new(l, vec![pt(0.0, 0.0, 1.0), pt(0.1, 0.0, 0.0)]).unwrap();
        assert_eq!(ok.len(), 2);
    }

    #[test]
    fn integrate_zero_deltas_stays_at_origin() {
        let l = Label::new(3).unwrap();
        let s = CharacterSample::new(l, vec![pt(0.0, 0.0, 1.0); 5]).unwrap();
        assert!(integrate(&s).iter().all(|p| *p == [0.0, 0.0]));
    }

    #[test]
    fn integrate_is_a_cumulative_sum() {
        let l = Label::new(3).unwrap();
        let s = CharacterSample::new(l, vec![pt(1.0, 0.0, 1.0), pt(0.0, 1.0, 0.0)]).unwrap();
        assert_eq!(integrate(&s), vec![[1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn difference_inverts_integrate() {
        let deltas = vec![(0.25, -0.5), (0.125, 0.0), (-1.0, 2.0), (0.0, 0.0)];
        let positions = integrate_deltas(deltas.clone());
        assert_eq!(difference(&positions), deltas);
    }

    #[test]
    fn mean_length_rounds() {
        assert_eq!(mean_length(&[]), None);
        assert_eq!(mean_length(&[10, 11]), Some(11));
        assert_eq!(mean_length(&[10, 10, 11]), Some(10));
    }
}
