use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CharacterSample, Corpus, Label, TrajectoryPoint};
use crate::error::{Error, Result};

/// Serializes a corpus: one sample per line, the label index followed by the
/// `dx dy pressure stroke_onset` quadruple of every step, space separated.
/// Floats use the shortest representation that parses back to the same bits.
pub fn write_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for s in &corpus.samples {
        write!(out, "{}", s.label().index()).unwrap();
        for p in s.points() {
            write!(out, " {} {} {} {}", p.dx, p.dy, p.pressure, p.stroke_onset).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_corpus(corpus)).map_err(|e| Error::io(path, e))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

const CHANNELS: [&str; 4] = ["dx", "dy", "pressure", "stroke_onset"];

/// Parses the line format written by [`write_corpus`]. Blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let label_index: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, "label", format!("'{}' is not an integer", fields[0])))?;
        let label = Label::new(label_index)
            .map_err(|e| Error::parse(line_no, "label", e.to_string()))?;
        let values = &fields[1..];
        if !values.len().is_multiple_of(4) {
            return Err(Error::parse(
                line_no,
                format!("step {}", values.len() / 4),
                format!("{} numeric fields is not a multiple of 4", values.len()),
            ));
        }
        let mut points = Vec::with_capacity(values.len() / 4);
        for (t, quad) in values.chunks_exact(4).enumerate() {
            let mut v = [0.0; 4];
            for (c, s) in quad.iter().enumerate() {
                v[c] = s.parse().map_err(|_| {
                    Error::parse(line_no, format!("step {t} {}", CHANNELS[c]), format!("'{s}' is not a number"))
                })?;
            }
            points.push(TrajectoryPoint::new(v[0], v[1], v[2], v[3]));
        }
        let sample = CharacterSample::new(label, points)
            .map_err(|e| Error::parse(line_no, "points", e.to_string()))?;
        samples.push(sample);
    }
    Ok(Corpus::new(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{default_templates, generate_corpus};
    use proptest::prelude::*;

    #[test]
    fn empty_corpus_is_an_empty_file() {
        let text = write_corpus(&Corpus::default());
        assert_eq!(text, "");
        assert!(parse_corpus(&text).unwrap().is_empty());
    }

    #[test]
    fn three_step_sample_has_thirteen_fields() {
        let label = Label::new(4).unwrap();
        let s = CharacterSample::new(
            label,
            vec![
                TrajectoryPoint::new(0.0, 0.0, 1.0, 1.0),
                TrajectoryPoint::new(0.1, -0.2, 1.0, 0.0),
                TrajectoryPoint::new(0.3, 0.0, 0.0, 0.0),
            ],
        )
        .unwrap();
        let text = write_corpus(&Corpus::new(vec![s]));
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.split_whitespace().count(), 13);
        assert!(text.starts_with("4 "));
    }

    #[test]
    fn malformed_line_reports_line_and_field() {
        let text = "0 0 0 1 1 0.1 0 1 0\n1 0 0 1 1 0.1 oops 1 0\n";
        match parse_corpus(text).unwrap_err() {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "step 1 dy");
            }
            e => panic!("unexpected {e:?}"),
        }
        match parse_corpus("30 0 0 1 1 0 0 1 0\n").unwrap_err() {
            Error::Parse { line, field, .. } => assert_eq!((line, field.as_str()), (1, "label")),
            e => panic!("unexpected {e:?}"),
        }
        assert!(parse_corpus("0 0 0 1 1 0.1\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.txt");
        let templates = default_templates();
        let c = generate_corpus(&templates[..3], 2, 0.02, 5).unwrap();
        save_corpus(&c, &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), c);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn round_trip_is_lossless(seed in any::<u64>(), jitter in 0.0f64..0.05) {
            let templates = default_templates();
            // 26 templates x 4 variants = 104 samples
            let c = generate_corpus(&templates, 4, jitter, seed).unwrap();
            let back = parse_corpus(&write_corpus(&c)).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
