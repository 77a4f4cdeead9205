//! `dialm`: train, decode, evaluate and inspect dialog language models.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{parse_config_file, ConfigError, Overrides, RunConfig};
use dialm_core::clustering::cluster_pos_tags;
use dialm_core::clustering::{cluster_words, WordMode};
use dialm_core::corpus::{normalize_corpus, parse_corpus, serialize_corpus, validate, Corpus, Dialog};
use dialm_core::lm::TrainedModel;
use dialm_core::pipeline::{crossval, decode_all, decoded_turn, gold_turns, train, PipelineError};
use dialm_core::synth::{generate, SynthParams};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "dialm", version, about = "Joint POS, tone, discourse-marker and speech-repair language models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Comma-separated components: tones, repairs, correction, silence.
    #[arg(long, global = true)]
    enable: Option<String>,
    /// Treat fresh starts as modification repairs.
    #[arg(long, global = true)]
    collapse_repairs: bool,
    #[arg(long, global = true)]
    beam: Option<usize>,
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    low_threshold: Option<u64>,
    /// Where metrics go; stdout if absent.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on an annotated corpus.
    Train,
    /// Decode a corpus and print the hypothesized annotation.
    Tag {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a corpus and score it against its annotation.
    Eval,
    /// Train and test one model per fold; counts are summed over folds.
    Crossval,
    /// Print the POS and word classification trees of a corpus.
    Cluster {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a trained model.
    Inspect,
    /// Generate an annotated synthetic corpus.
    Synth(SynthArgs),
    /// Check corpus annotations.
    Validate,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = SynthParams::default().turns)]
    turns: usize,
    #[arg(long, default_value_t = SynthParams::default().vocab)]
    vocab: usize,
    #[arg(long, default_value_t = SynthParams::default().repair_rate)]
    repair_rate: f64,
    #[arg(long, default_value_t = SynthParams::default().tone_rate)]
    tone_rate: f64,
    #[arg(long, default_value_t = SynthParams::default().et_rate)]
    et_rate: f64,
    #[arg(long, default_value_t = SynthParams::default().turns_per_dialog)]
    turns_per_dialog: usize,
}

#[derive(Debug, Error)]
enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, content: &str) -> Result<(), AppError> {
    let io = |source| AppError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, content: &str) -> Result<(), AppError> {
    match path {
        Some(p) => write_atomic(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, AppError> {
    path.as_deref().ok_or_else(|| AppError::Usage(format!("{flag} is required")))
}

fn load_corpus(rc: &RunConfig) -> Result<Corpus, AppError> {
    let path = need(&rc.corpus, "--corpus")?;
    parse_corpus(&read(path)?).map_err(|e| AppError::Invalid(format!("{}: {e}", path.display())))
}

/// Loads the corpus and fails on any annotation violation.
fn load_clean_corpus(rc: &RunConfig) -> Result<Corpus, AppError> {
    let corpus = load_corpus(rc)?;
    let violations = validate(&corpus);
    if let Some(first) = violations.first() {
        return Err(AppError::Invalid(format!("{} annotation violation(s); first: {first}", violations.len())));
    }
    Ok(corpus)
}

fn load_model(rc: &RunConfig) -> Result<TrainedModel, AppError> {
    let path = need(&rc.model, "--model")?;
    TrainedModel::from_json(&read(path)?).map_err(|e| AppError::Invalid(format!("{}: {e}", path.display())))
}

/// A model for decoding, with the beam width overridden if one was given.
fn load_decoder(rc: &RunConfig) -> Result<TrainedModel, AppError> {
    let mut model = load_model(rc)?;
    if rc.beam_set {
        model.config.beam = rc.lm.beam;
    }
    Ok(model)
}

/// Errors on the first POS tag in the corpus the model has never seen.
fn check_tagset(model: &TrainedModel, corpus: &Corpus) -> Result<Vec<dialm_core::corpus::GoldTurn>, AppError> {
    let turns = gold_turns(corpus).map_err(|e| AppError::Invalid(e.to_string()))?;
    for t in &turns {
        if let Some(p) = t.pos.iter().find(|p| !model.knows_pos(p)) {
            return Err(AppError::Invalid(format!("tagset mismatch: turn {} uses POS `{p}` unknown to the model", t.id)));
        }
    }
    Ok(turns)
}

fn cmd_train(rc: &RunConfig) -> Result<(), AppError> {
    let out = need(&rc.model, "--model")?;
    let corpus = load_clean_corpus(rc)?;
    let model = train(&corpus, rc.lm, rc.train_options())?;
    write_atomic(out, &model.to_json())?;
    eprintln!("trained on {} turns; {} trees", corpus.turn_count(), model.trees().len());
    Ok(())
}

fn cmd_tag(rc: &RunConfig, out: Option<&Path>) -> Result<(), AppError> {
    let model = load_decoder(rc)?;
    let corpus = load_corpus(rc)?;
    let turns = check_tagset(&model, &corpus)?;
    let normalized = normalize_corpus(&corpus).map_err(|e| AppError::Invalid(e.to_string()))?;
    let mut results = decode_all(&model, &turns).into_iter();
    let mut tagged = Corpus::default();
    for dialog in &normalized.dialogs {
        let mut d = Dialog { id: dialog.id.clone(), turns: Vec::new() };
        for turn in &dialog.turns {
            let (decoded, _) = results.next().expect("one result per turn")?;
            d.turns.push(decoded_turn(turn, &decoded));
        }
        tagged.dialogs.push(d);
    }
    emit(out, &serialize_corpus(&tagged))
}

fn cmd_eval(rc: &RunConfig) -> Result<(), AppError> {
    let model = load_decoder(rc)?;
    let corpus = load_corpus(rc)?;
    let turns = check_tagset(&model, &corpus)?;
    let metrics = dialm_core::pipeline::evaluate(&model, &turns)?;
    emit(rc.report.as_deref(), &metrics.to_key_values())
}

fn cmd_crossval(rc: &RunConfig) -> Result<(), AppError> {
    let corpus = load_clean_corpus(rc)?;
    let report = crossval(&corpus, rc.lm, rc.train_options(), rc.folds, rc.seed)?;
    let mut text = String::new();
    for (k, (test, m)) in report.folds.iter().enumerate() {
        let ids: Vec<&str> = test.iter().map(|&i| corpus.dialogs[i].id.as_str()).collect();
        let _ = writeln!(text, "fold{k}.test_dialogs = {}", ids.join(","));
        for line in m.to_key_values().lines() {
            let _ = writeln!(text, "fold{k}.{line}");
        }
    }
    for line in report.total.to_key_values().lines() {
        let _ = writeln!(text, "total.{line}");
    }
    emit(rc.report.as_deref(), &text)
}

fn cmd_cluster(rc: &RunConfig, out: Option<&Path>) -> Result<(), AppError> {
    let corpus = load_corpus(rc)?;
    let turns = gold_turns(&corpus).map_err(|e| AppError::Invalid(e.to_string()))?;
    let pos: Vec<Vec<&str>> = turns.iter().map(|t| t.pos.iter().map(String::as_str).collect()).collect();
    let words: Vec<Vec<(&str, &str)>> = turns
        .iter()
        .map(|t| t.words.iter().zip(&t.pos).map(|(w, p)| (w.as_str(), p.as_str())).collect())
        .collect();
    let mut text = String::new();
    if let Some(tree) = cluster_pos_tags(&pos) {
        text.push_str("# pos\n");
        text.push_str(&tree.to_text());
    }
    let clusters = cluster_words(&words, WordMode::ForcePos, rc.low_threshold);
    for (tag, tree) in &clusters.trees {
        let _ = writeln!(text, "# words {tag}");
        text.push_str(&tree.to_text());
    }
    emit(out, &text)
}

fn cmd_inspect(rc: &RunConfig) -> Result<(), AppError> {
    let model = load_model(rc)?;
    let c = &model.config;
    let mut text = String::new();
    let _ = writeln!(text, "format_version = {}", model.format_version);
    for (k, v) in [
        ("tones", c.tones),
        ("repairs", c.repairs),
        ("correction", c.correction),
        ("silence", c.silence),
        ("collapse_repairs", c.collapse_repairs),
    ] {
        let _ = writeln!(text, "{k} = {v}");
    }
    let _ = writeln!(text, "beam = {}\norder = {}", c.beam, c.order);
    let _ = writeln!(text, "low_threshold = {}\nseed = {}", model.options.low_threshold, model.options.seed);
    let _ = writeln!(text, "pos_tags = {}", model.pos_tags.join(","));
    let _ = writeln!(text, "vocabulary = {}", model.tag_dict.len());
    let _ = writeln!(text, "pos_class_depth = {}", model.pos_tree.depth());
    for (name, tree) in model.trees() {
        let _ = writeln!(
            text,
            "tree {name}: events {} nodes {} leaves {} depth {}",
            tree.n_events,
            tree.nodes.len(),
            tree.leaves(),
            tree.depth()
        );
    }
    if let Some(s) = &model.silence {
        let _ = writeln!(text, "silence_buckets = {}", s.factors.len());
    }
    emit(None, &text)
}

fn cmd_synth(args: &SynthArgs, seed: u64) -> Result<(), AppError> {
    let params = SynthParams {
        turns: args.turns,
        vocab: args.vocab,
        repair_rate: args.repair_rate,
        tone_rate: args.tone_rate,
        et_rate: args.et_rate,
        turns_per_dialog: args.turns_per_dialog,
        seed,
        ..SynthParams::default()
    };
    params.validate().map_err(|e| AppError::Usage(e.to_string()))?;
    let corpus = generate(&params).map_err(|e| AppError::Usage(e.to_string()))?;
    emit(args.out.as_deref(), &serialize_corpus(&corpus))
}

fn cmd_validate(rc: &RunConfig) -> Result<(), AppError> {
    let corpus = load_corpus(rc)?;
    let violations = validate(&corpus);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok: {} dialogs, {} turns", corpus.dialogs.len(), corpus.turn_count());
        Ok(())
    } else {
        Err(AppError::Invalid(format!("{} annotation violation(s)", violations.len())))
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let a = cli.run;
    let file = match &a.config {
        Some(p) => parse_config_file(&read(p)?)?,
        None => BTreeMap::new(),
    };
    let overrides = Overrides {
        corpus: a.corpus,
        model: a.model,
        enable: a.enable,
        collapse_repairs: a.collapse_repairs,
        beam: a.beam,
        order: a.order,
        folds: a.folds,
        seed: a.seed,
        low_threshold: a.low_threshold,
        report: a.report,
    };
    let rc = RunConfig::resolve(&file, &overrides)?;
    match &cli.command {
        Command::Train => cmd_train(&rc),
        Command::Tag { out } => cmd_tag(&rc, out.as_deref()),
        Command::Eval => cmd_eval(&rc),
        Command::Crossval => cmd_crossval(&rc),
        Command::Cluster { out } => cmd_cluster(&rc, out.as_deref()),
        Command::Inspect => cmd_inspect(&rc),
        Command::Synth(args) => cmd_synth(args, rc.seed),
        Command::Validate => cmd_validate(&rc),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dialm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
