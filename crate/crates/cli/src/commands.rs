//! Subcommand bodies. Each prints human-readable lines followed by one
//! `key=value` summary line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use glyphlstm::analysis::{export_grid, export_heatmap, record_states, render_svg, sheet_svg, write_svg, Layer, Panel, Role};
use glyphlstm::corpus::{default_templates, generate_corpus, load_corpus, parse_templates, save_corpus, Corpus, Label};
use glyphlstm::network::{generate, init_params, load_params, save_params, ModelParams};
use glyphlstm::oneshot::{
    blend, blend_alphas, compare_priors, format_input_vector, generate_variants_with, infer_class, one_shot_acquire,
    ClassInferConfig, Manifest, OneShotConfig,
};
use glyphlstm::training::{save_loss_history, train_with, window_mean, AdamConfig, TrainConfig};
use glyphlstm::{forward_sequence, CharacterSample, Error};

use crate::{BlendArgs, ClassifyArgs, Command, GenCorpusArgs, OneshotArgs, StatesArgs, TrainArgs, VariantsArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or values; exit code 1.
    Usage(String),
    /// Unreadable or unwritable files; exit code 2.
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(Error::InvalidConfig(_) | Error::LabelOutOfRange(_)) => 1,
            CliError::Io(_) | CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(command: Command) -> CliResult {
    match command {
        Command::GenCorpus(a) => gen_corpus(a),
        Command::Train(a) => train(a),
        Command::Oneshot(a) => oneshot(a),
        Command::Classify(a) => classify(a),
        Command::Variants(a) => variants(a),
        Command::Blend(a) => blend_sweep(a),
        Command::States(a) => states(a),
    }
}

/// `path` with `suffix` appended to its file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Where the manifest of a checkpoint lives.
pub fn manifest_path(model: &Path) -> PathBuf {
    with_suffix(model, ".manifest")
}

fn load_manifest(model: &Path) -> CliResult<Manifest> {
    let path = manifest_path(model);
    if path.exists() {
        Ok(Manifest::load(path)?)
    } else {
        Ok(Manifest::default())
    }
}

fn parse_label(s: &str) -> CliResult<Label> {
    s.trim()
        .parse()
        .map_err(|e: Error| CliError::Usage(format!("bad label '{s}': {e}")))
}

fn require_positive(name: &str, v: f64) -> CliResult {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be a positive number, got {v}")))
    }
}

/// Generation length from the flag, else from the manifest.
fn resolve_length(flag: Option<usize>, manifest: &Manifest, labels: &[Label]) -> CliResult<usize> {
    if let Some(t) = flag {
        if t == 0 {
            return Err(CliError::Usage("--length must be at least 1".into()));
        }
        return Ok(t);
    }
    let mut lens = Vec::new();
    for l in labels {
        match manifest.lengths.get(l) {
            Some(t) => lens.push(*t),
            None => {
                return Err(CliError::Usage(format!(
                    "no recorded length for '{l}' in the model manifest; pass --length"
                )))
            }
        }
    }
    Ok(glyphlstm::corpus::mean_length(&lens).unwrap_or(1))
}

fn gen_corpus(a: GenCorpusArgs) -> CliResult {
    if !(a.jitter >= 0.0 && a.jitter.is_finite()) {
        return Err(CliError::Usage(format!("--jitter must be >= 0, got {}", a.jitter)));
    }
    let templates = match &a.templates {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            parse_templates(&text)?
        }
        None => default_templates(),
    };
    let corpus = generate_corpus(&templates, a.variants, a.jitter, a.seed)?;
    save_corpus(&corpus, &a.out)?;
    let counts = corpus.counts();
    let per_label: Vec<String> = Label::all()
        .filter(|l| counts[l.index()] > 0)
        .map(|l| format!("{l}={}", counts[l.index()]))
        .collect();
    println!("counts {}", per_label.join(" "));
    println!(
        "samples={} labels={} variants={} jitter={} seed={} out={}",
        corpus.len(),
        per_label.len(),
        a.variants,
        a.jitter,
        a.seed,
        a.out.display()
    );
    Ok(())
}

fn train(a: TrainArgs) -> CliResult {
    let corpus = load_corpus(&a.corpus)?.trained_only();
    let config = TrainConfig {
        adam: AdamConfig {
            learning_rate: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
        },
        steps: a.steps,
        seed: a.seed,
        n_ff: a.n_ff,
        n_lstm: a.n_lstm,
    };
    if let Some(0) = a.checkpoint_every {
        return Err(CliError::Usage("--checkpoint-every must be at least 1".into()));
    }
    let mut hook_error = None;
    let outcome = if corpus.is_empty() && a.steps == 0 {
        // Nothing to draw from, but nothing to draw either.
        glyphlstm::training::TrainOutcome {
            params: init_params(a.n_ff, a.n_lstm, a.seed),
            losses: Vec::new(),
        }
    } else {
        train_with(&corpus, &config, |step, params, _| {
            if let Some(every) = a.checkpoint_every {
                if step.is_multiple_of(every) && hook_error.is_none() {
                    if let Err(e) = save_params(params, with_suffix(&a.model_out, &format!(".step{step}"))) {
                        hook_error = Some(e);
                    }
                }
            }
        })?
    };
    if let Some(e) = hook_error {
        return Err(e.into());
    }
    save_params(&outcome.params, &a.model_out)?;
    let loss_path = a.loss_out.clone().unwrap_or_else(|| with_suffix(&a.model_out, ".loss.txt"));
    save_loss_history(&outcome.losses, &loss_path)?;

    let mut manifest = Manifest::default();
    for l in Label::trained() {
        if let Some(t) = corpus.mean_length(l) {
            manifest.lengths.insert(l, t);
        }
    }
    manifest.save(manifest_path(&a.model_out))?;

    let n = outcome.losses.len();
    let window = n.min(100);
    let (first, last) = if n == 0 {
        (f64::NAN, f64::NAN)
    } else {
        (window_mean(&outcome.losses[..window]), window_mean(&outcome.losses[n - window..]))
    };
    println!(
        "steps={} samples={} n_ff={} n_lstm={} seed={} lr={} initial_loss={first} final_loss={last} model={} losses={}",
        a.steps,
        corpus.len(),
        a.n_ff,
        a.n_lstm,
        a.seed,
        a.lr,
        a.model_out.display(),
        loss_path.display()
    );
    Ok(())
}

fn select_labels(spec: &str) -> CliResult<Vec<Label>> {
    let mut labels: Vec<Label> = if spec.trim() == "heldout" {
        Label::heldout().collect()
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(parse_label).collect::<CliResult<_>>()?
    };
    if labels.is_empty() {
        return Err(CliError::Usage("--label selects no labels".into()));
    }
    labels.sort();
    labels.dedup();
    Ok(labels)
}

fn select_sample(corpus: &Corpus, label: Label, variant: usize) -> CliResult<CharacterSample> {
    corpus
        .samples_for(label)
        .nth(variant)
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("no sample {label}#{variant} in the corpus")))
}

fn oneshot(a: OneshotArgs) -> CliResult {
    require_positive("lr", a.lr)?;
    let params = load_params(&a.model)?;
    let mut manifest = load_manifest(&a.model)?;
    let corpus = load_corpus(&a.corpus)?;
    let labels = select_labels(&a.label)?;
    let samples: Vec<CharacterSample> =
        labels.iter().map(|&l| select_sample(&corpus, l, a.variant)).collect::<CliResult<_>>()?;
    let config = OneShotConfig {
        iterations: a.iterations,
        learning_rate: a.lr,
        optimizer: a.optimizer.into(),
        mask: a.mask.map(Into::into).unwrap_or_default(),
    };
    config.validate()?;
    let untrained = a
        .untrained_control
        .then(|| init_params(params.n_ff(), params.n_lstm(), a.untrained_seed));

    let mut current = params;
    let mut panels = Vec::new();
    let mut wins = 0;
    for s in &samples {
        let before = generate(&current, s.label(), s.len());
        let (acq, control) = match &untrained {
            Some(u) => {
                let cmp = compare_priors(&current, u, s, &config)?;
                if cmp.trained_wins() {
                    wins += 1;
                }
                (cmp.trained, Some(cmp.untrained))
            }
            None => (one_shot_acquire(&current, s, &config)?, None),
        };
        let after = generate(&acq.params, s.label(), s.len());
        let mut layers = vec![
            Layer::new(s.targets(), Role::Target),
            Layer::new(before, Role::Unadapted),
            Layer::new(after, Role::Adapted),
        ];
        match &control {
            Some(c) => {
                layers.push(Layer::new(generate(&c.params, s.label(), s.len()), Role::Untrained));
                println!(
                    "label={} initial_loss={} final_loss={} untrained_final_loss={}",
                    s.label(),
                    acq.initial_loss(),
                    acq.final_loss,
                    c.final_loss
                );
            }
            None => println!("label={} initial_loss={} final_loss={}", s.label(), acq.initial_loss(), acq.final_loss),
        }
        panels.push(Panel { layers, caption: Some(s.label().to_string()) });
        manifest.record_acquired(s.label(), s.len());
        current = acq.params;
    }
    save_params(&current, &a.model_out)?;
    manifest.save(manifest_path(&a.model_out))?;
    if let Some(path) = &a.svg_out {
        write_svg(&sheet_svg(&panels, panels.len().min(7)), path)?;
    }
    let acquired: Vec<String> = labels.iter().map(Label::to_string).collect();
    let mut summary = format!(
        "acquired={} iterations={} lr={} variant={} model={}",
        acquired.join(","),
        a.iterations,
        a.lr,
        a.variant,
        a.model_out.display()
    );
    if untrained.is_some() {
        summary.push_str(&format!(" trained_wins={wins}/{}", samples.len()));
    }
    println!("{summary}");
    Ok(())
}

fn classify(a: ClassifyArgs) -> CliResult {
    require_positive("lr", a.lr)?;
    let params = load_params(&a.model)?;
    let queries = load_corpus(&a.queries)?;
    let config = ClassInferConfig {
        iterations: a.iterations,
        learning_rate: a.lr,
        ..ClassInferConfig::default()
    };
    config.validate()?;
    let mut vectors = String::new();
    let mut panels = Vec::new();
    let mut correct = 0;
    for (i, q) in queries.samples.iter().enumerate() {
        let r = infer_class(&params, q, &config)?;
        if r.label == q.label() {
            correct += 1;
        }
        let final_loss = r.losses.last().copied().unwrap_or(f64::NAN);
        println!("query={i} label={} predicted={} loss={final_loss}", q.label(), r.label);
        let row: Vec<String> = format_input_vector(&r.input).lines().map(str::to_string).collect();
        vectors.push_str(&row.join(" "));
        vectors.push('\n');
        if a.svg_out.is_some() {
            let (regen, _) = forward_sequence(&params, &r.input, q.len())?;
            panels.push(Panel {
                layers: vec![Layer::new(q.targets(), Role::Target), Layer::new(regen, Role::Adapted)],
                caption: Some(format!("{} as {}", q.label(), r.label)),
            });
        }
    }
    if let Some(path) = &a.vector_out {
        fs::write(path, vectors).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &a.svg_out {
        write_svg(&sheet_svg(&panels, panels.len().clamp(1, 7)), path)?;
    }
    println!(
        "queries={} correct={correct} iterations={} lr={}",
        queries.len(),
        a.iterations,
        a.lr
    );
    Ok(())
}

fn variants(a: VariantsArgs) -> CliResult {
    let params = load_params(&a.model)?;
    let manifest = load_manifest(&a.model)?;
    let label = parse_label(&a.label)?;
    let steps = resolve_length(a.length, &manifest, &[label])?;
    let base = generate(&params, label, steps);
    let vs = generate_variants_with(&params, label, a.sigma, a.count, steps, a.seed, a.noise.into())?;
    let mut panels = vec![Panel::single(base, Role::Adapted).with_caption("base")];
    for (i, v) in vs.into_iter().enumerate() {
        panels.push(Panel::single(v, Role::Ink).with_caption(format!("{}", i + 1)));
    }
    write_svg(&sheet_svg(&panels, panels.len().min(9)), &a.svg_out)?;
    println!(
        "label={label} sigma={} count={} seed={} length={steps} glyphs={} svg={}",
        a.sigma,
        a.count,
        a.seed,
        panels.len(),
        a.svg_out.display()
    );
    Ok(())
}

fn blend_sweep(a: BlendArgs) -> CliResult {
    if a.steps < 2 {
        return Err(CliError::Usage("--steps must be at least 2".into()));
    }
    let params = load_params(&a.model)?;
    let manifest = load_manifest(&a.model)?;
    let la = parse_label(&a.label_a)?;
    let lb = parse_label(&a.label_b)?;
    let steps = resolve_length(a.length, &manifest, &[la, lb])?;
    let alphas = blend_alphas(a.steps);
    let mut panels = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let t = blend(&params, la, lb, alpha, steps)?;
        panels.push(Panel::single(t, Role::Adapted).with_caption(format!("{alpha:.2}")));
    }
    write_svg(&sheet_svg(&panels, panels.len()), &a.svg_out)?;
    println!(
        "label_a={la} label_b={lb} glyphs={} length={steps} svg={}",
        panels.len(),
        a.svg_out.display()
    );
    Ok(())
}

fn states(a: StatesArgs) -> CliResult {
    let params: ModelParams = load_params(&a.model)?;
    let manifest = load_manifest(&a.model)?;
    let label = parse_label(&a.label)?;
    let steps = resolve_length(a.length, &manifest, &[label])?;
    let record = record_states(&params, &glyphlstm::one_hot(label), steps)?;
    let c_path = with_suffix(&a.heatmap_out, "_c.svg");
    let h_path = with_suffix(&a.heatmap_out, "_h.svg");
    let t_path = with_suffix(&a.heatmap_out, "_trajectory.svg");
    export_heatmap(&record.cell, &c_path)?;
    export_heatmap(&record.hidden, &h_path)?;
    write_svg(&render_svg(&record.trajectory), &t_path)?;
    if a.grids {
        export_grid(&record.cell, with_suffix(&a.heatmap_out, "_c.txt"))?;
        export_grid(&record.hidden, with_suffix(&a.heatmap_out, "_h.txt"))?;
    }
    println!(
        "label={label} steps={steps} units={} c={} h={} trajectory={}",
        params.n_lstm(),
        c_path.display(),
        h_path.display(),
        t_path.display()
    );
    Ok(())
}
