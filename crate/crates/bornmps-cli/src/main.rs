//! Command-line front end: train, score, sweep, explain, report, sample,
//! synth.
//!
//! Exit codes: 0 success, 1 input parse errors, 2 configuration errors,
//! 3 numeric failures. Every output file is written through a temporary
//! sibling and renamed into place.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bornmps::explain;
use bornmps::mps::MpsModel;
use bornmps::pipeline::{
    self, encode, ingest, split_chronological, suggest_thresholds, EncodedDataset,
    FeatureVocabulary, PipelineError, RawTable, SynthSpec,
};
use bornmps::report;
use bornmps::storage::{write_atomic, ModelFile, StorageError};
use bornmps::trainer::{train, BatchSize, TrainConfig, TrainError};

#[derive(Parser)]
#[command(
    name = "bornmps",
    version,
    about = "Generative modeling and explainable anomaly detection for categorical event tables",
    after_help = "Config file: flat key=value lines (keys: input, labels, split, model, out_dir, \
                  threshold, seed, epochs, learning_rate, max_bond, sv_cutoff, batch_size, \
                  descent_steps_per_bond, initial_bond). Command-line flags override file values."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on the chronological head of a table and save it
    Train(TrainArgs),
    /// Score every row of a table against a saved model
    Score(CommonArgs),
    /// Count anomalies and captured attacks across candidate thresholds
    Sweep(CommonArgs),
    /// Break down why individual rows scored the way they did
    Explain(ExplainArgs),
    /// Emit the explainability bundle (entropies, mutual information,
    /// distribution comparisons, feature importance)
    Report(CommonArgs),
    /// Draw rows from a saved model and decode them to raw values
    Sample(SampleArgs),
    /// Generate a labeled synthetic stream with known structure
    Synth(SynthArgs),
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Input table (comma-separated text)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Model file to read, or to write for `train` [default: <out-dir>/model.mps]
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory for output files [default: .]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// key=value config file; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random draw [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Label column name (requires a header row); labels never influence
    /// training, only evaluation outputs
    #[arg(long)]
    labels: Option<String>,
    /// Chronological training fraction in (0,1) [default: 0.7]
    #[arg(long)]
    split: Option<f64>,
    /// Comma-separated threshold list, or "auto" for 50 evenly spaced values
    /// between the minimum and maximum score [default: auto]
    #[arg(long)]
    threshold: Option<String>,
    /// Treat the first line as data, not a header
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Full left-right-left sweeps [default: 10]
    #[arg(long)]
    epochs: Option<usize>,
    /// Gradient-descent step size [default: 0.05]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Largest bond dimension the SVD splits may keep [default: 32]
    #[arg(long)]
    max_bond: Option<usize>,
    /// Relative singular-value cutoff [default: 1e-7]
    #[arg(long)]
    sv_cutoff: Option<f64>,
    /// "full" or a row count per gradient update [default: full]
    #[arg(long)]
    batch_size: Option<String>,
    /// Descent steps per bond visit [default: 10]
    #[arg(long)]
    descent_steps_per_bond: Option<usize>,
    /// Bond dimension of the random initial model [default: 2]
    #[arg(long)]
    initial_bond: Option<usize>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Explain these row indices (repeatable)
    #[arg(long)]
    row: Vec<usize>,
    /// Explain every row scoring above the threshold
    #[arg(long)]
    all_flagged: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of rows to draw
    #[arg(long)]
    count: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON stream description; omitted = the built-in planted-pair stream
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Number of rows to generate
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    /// Anomaly rate of the built-in stream [default: 0.005]
    #[arg(long)]
    anomaly_rate: Option<f64>,
    /// Write the effective spec as JSON and exit
    #[arg(long)]
    emit_spec: bool,
}

// ---------------------------------------------------------------------------
// error handling and exit codes

enum CliError {
    Parse(String),
    Config(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Parse { .. }
            | PipelineError::BadLabel { .. }
            | PipelineError::RaggedRow { .. }
            | PipelineError::BadDistribution { .. }
            | PipelineError::BadSynthSpec(_) => CliError::Parse(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<StorageError> for CliError {
    fn from(e: StorageError) -> Self {
        match e {
            StorageError::Io(_) => CliError::Config(e.to_string()),
            StorageError::Parse { .. } | StorageError::Model(_) => CliError::Parse(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) | TrainError::EmptyRows | TrainError::InvalidRow { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// settings: defaults <- config file <- flags

#[derive(Clone)]
struct Settings {
    input: Option<PathBuf>,
    model: Option<PathBuf>,
    out_dir: PathBuf,
    seed: u64,
    labels: Option<String>,
    split: f64,
    threshold: String,
    no_header: bool,
    epochs: usize,
    learning_rate: f64,
    max_bond: usize,
    sv_cutoff: f64,
    batch_size: BatchSize,
    descent_steps_per_bond: usize,
    initial_bond: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            input: None,
            model: None,
            out_dir: PathBuf::from("."),
            seed: 42,
            labels: None,
            split: 0.7,
            threshold: "auto".into(),
            no_header: false,
            epochs: 10,
            learning_rate: 0.05,
            max_bond: 32,
            sv_cutoff: 1e-7,
            batch_size: BatchSize::Full,
            descent_steps_per_bond: 10,
            initial_bond: 2,
        }
    }
}

fn parse_batch_size(text: &str) -> Result<BatchSize, CliError> {
    if text.eq_ignore_ascii_case("full") {
        return Ok(BatchSize::Full);
    }
    text.parse::<usize>().map(BatchSize::Rows).map_err(|_| {
        CliError::Config(format!(
            "batch_size must be \"full\" or a row count, got {text:?}"
        ))
    })
}

impl Settings {
    fn resolve(common: &CommonArgs, train: Option<&TrainArgs>) -> Result<Self, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &common.config {
            s.apply_config_file(path)?;
        }
        // flags win over the file
        if let Some(v) = &common.input {
            s.input = Some(v.clone());
        }
        if let Some(v) = &common.model {
            s.model = Some(v.clone());
        }
        if let Some(v) = &common.out_dir {
            s.out_dir = v.clone();
        }
        if let Some(v) = common.seed {
            s.seed = v;
        }
        if let Some(v) = &common.labels {
            s.labels = Some(v.clone());
        }
        if let Some(v) = common.split {
            s.split = v;
        }
        if let Some(v) = &common.threshold {
            s.threshold = v.clone();
        }
        if common.no_header {
            s.no_header = true;
        }
        if let Some(t) = train {
            if let Some(v) = t.epochs {
                s.epochs = v;
            }
            if let Some(v) = t.learning_rate {
                s.learning_rate = v;
            }
            if let Some(v) = t.max_bond {
                s.max_bond = v;
            }
            if let Some(v) = t.sv_cutoff {
                s.sv_cutoff = v;
            }
            if let Some(v) = &t.batch_size {
                s.batch_size = parse_batch_size(v)?;
            }
            if let Some(v) = t.descent_steps_per_bond {
                s.descent_steps_per_bond = v;
            }
            if let Some(v) = t.initial_bond {
                s.initial_bond = v;
            }
        }
        if !(0.0 < s.split && s.split < 1.0) {
            return Err(CliError::Config(format!(
                "split must lie strictly between 0 and 1, got {}",
                s.split
            )));
        }
        Ok(s)
    }

    fn apply_config_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {} is not key=value", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn fmt::Display| {
                CliError::Config(format!("config line {}: bad {key}: {e}", no + 1))
            };
            match key {
                "input" => self.input = Some(PathBuf::from(value)),
                "model" => self.model = Some(PathBuf::from(value)),
                "out_dir" => self.out_dir = PathBuf::from(value),
                "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
                "labels" => self.labels = Some(value.to_string()),
                "split" => self.split = value.parse().map_err(|e| bad(&e))?,
                "threshold" => self.threshold = value.to_string(),
                "epochs" => self.epochs = value.parse().map_err(|e| bad(&e))?,
                "learning_rate" => self.learning_rate = value.parse().map_err(|e| bad(&e))?,
                "max_bond" => self.max_bond = value.parse().map_err(|e| bad(&e))?,
                "sv_cutoff" => self.sv_cutoff = value.parse().map_err(|e| bad(&e))?,
                "batch_size" => self.batch_size = parse_batch_size(value)?,
                "descent_steps_per_bond" => {
                    self.descent_steps_per_bond = value.parse().map_err(|e| bad(&e))?
                }
                "initial_bond" => self.initial_bond = value.parse().map_err(|e| bad(&e))?,
                other => {
                    return Err(CliError::Config(format!(
                        "config line {}: unknown key {other:?}",
                        no + 1
                    )))
                }
            }
        }
        Ok(())
    }

    fn input(&self) -> Result<&Path, CliError> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --input".into()))
    }

    fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.out_dir.join("model.mps"))
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            max_bond: self.max_bond,
            sv_cutoff: self.sv_cutoff,
            batch_size: self.batch_size,
            descent_steps_per_bond: self.descent_steps_per_bond,
            seed: self.seed,
        }
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        Ok(path)
    }
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Score(args) => cmd_score(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Report(args) => cmd_report(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bornmps: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_model(s: &Settings) -> Result<(MpsModel, FeatureVocabulary), CliError> {
    let path = s.model_path();
    let file = ModelFile::load(&path)?;
    let vocab = file.vocabulary.ok_or_else(|| {
        CliError::Config(format!(
            "model {} was saved without a vocabulary and cannot process raw tables",
            path.display()
        ))
    })?;
    Ok((file.model, vocab))
}

/// Ingests and encodes a table against a model's vocabulary.
fn load_encoded(
    s: &Settings,
    vocab: &FeatureVocabulary,
) -> Result<(RawTable, EncodedDataset), CliError> {
    let (table, labels) = ingest(s.input()?, !s.no_header, s.labels.as_deref())?;
    if table.num_columns() != vocab.num_features() {
        return Err(CliError::Config(format!(
            "table has {} feature columns but the model expects {}",
            table.num_columns(),
            vocab.num_features()
        )));
    }
    let ds = encode(&table.rows, vocab, labels)?;
    Ok((table, ds))
}

fn parse_thresholds(spec: &str, scores: &[f64]) -> Result<Vec<f64>, CliError> {
    if spec.eq_ignore_ascii_case("auto") {
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min.is_finite() && max.is_finite()) {
            return Err(CliError::Numeric("scores are not finite".into()));
        }
        if max == min {
            return Ok(vec![min]);
        }
        let span = max - min;
        return Ok((0..50).map(|i| min + span * i as f64 / 49.0).collect());
    }
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad threshold value {p:?}")))
        })
        .collect()
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args.common, Some(&args))?;
    s.ensure_out_dir()?;
    let (table, labels) = ingest(s.input()?, !s.no_header, s.labels.as_deref())?;

    // vocabulary comes from the training split only; later rows with novel
    // values fall into the reserved unseen slot
    let cut = (s.split * table.rows.len() as f64).floor() as usize;
    if cut == 0 || cut >= table.rows.len() {
        return Err(CliError::Config(format!(
            "split {} leaves an empty side for {} rows",
            s.split,
            table.rows.len()
        )));
    }
    let vocab = FeatureVocabulary::fit(table.header.as_deref(), &table.rows[..cut])?;
    let ds = encode(&table.rows, &vocab, labels)?;
    let (train_ds, _eval_ds) = split_chronological(&ds, s.split)?;

    let initial = MpsModel::init_random(&vocab.physical_dims(), s.initial_bond, s.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let (model, train_report) = train(&initial, &train_ds.rows, &s.train_config())?;

    let model_path = s.model_path();
    if let Some(parent) = model_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    ModelFile {
        model: model.clone(),
        vocabulary: Some(vocab),
        seed: Some(s.seed),
    }
    .save(&model_path)?;

    s.write("train_report.csv", &report::train_report_csv(&train_report))?;
    let train_scores = pipeline::score(&model, &train_ds)?;
    s.write(
        "threshold_suggestions.csv",
        &report::threshold_suggestions_csv(&suggest_thresholds(&train_scores)),
    )?;

    println!(
        "trained on {} rows, {} sweeps, final nll {:.6}",
        train_ds.len(),
        train_report.nll_per_sweep.len(),
        train_report.final_nll()
    );
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_score(args: CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args, None)?;
    s.ensure_out_dir()?;
    let (model, vocab) = load_model(&s)?;
    let (_, ds) = load_encoded(&s, &vocab)?;
    let scores = pipeline::score(&model, &ds)?;
    s.write(
        "scores.csv",
        &report::scores_csv(&ds.order, &scores, ds.labels.as_deref()),
    )?;

    let mut summary = String::from("metric,value\n");
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let suggestion = suggest_thresholds(&scores);
    let mut push = |k: &str, v: f64| {
        summary.push_str(&format!("{k},{}\n", report::fmt_sig12(v)));
    };
    push("count", n);
    push("mean_nll", mean);
    push("stddev_nll", var.sqrt());
    push("min_nll", scores.iter().copied().fold(f64::INFINITY, f64::min));
    push(
        "max_nll",
        scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    push("mean_plus_3sd", suggestion.mean_plus_3sd);
    push("median_plus_3mad", suggestion.median_plus_3mad);
    if let Some(labels) = &ds.labels {
        let benign: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(&x, _)| x)
            .collect();
        let attack: Vec<f64> = scores
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(&x, _)| x)
            .collect();
        if !benign.is_empty() {
            push(
                "mean_benign_nll",
                benign.iter().sum::<f64>() / benign.len() as f64,
            );
        }
        if !attack.is_empty() {
            push(
                "mean_attack_nll",
                attack.iter().sum::<f64>() / attack.len() as f64,
            );
        }
    }
    s.write("score_summary.csv", &summary)?;
    println!("scored {} rows", scores.len());
    Ok(())
}

fn cmd_sweep(args: CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args, None)?;
    s.ensure_out_dir()?;
    let (model, vocab) = load_model(&s)?;
    let (_, ds) = load_encoded(&s, &vocab)?;
    let scores = pipeline::score(&model, &ds)?;
    let thresholds = parse_thresholds(&s.threshold, &scores)?;
    let sweep = pipeline::threshold_sweep(&scores, ds.labels.as_deref(), &thresholds);
    s.write("sweep.csv", &report::sweep_csv(&sweep))?;
    if let Some(labels) = &ds.labels {
        let points: Vec<_> = sweep
            .points
            .iter()
            .map(|p| {
                (
                    p.threshold,
                    pipeline::metrics_at(&scores, labels, p.threshold),
                )
            })
            .collect();
        s.write("metrics.csv", &report::metrics_csv(&points))?;
    }
    println!(
        "swept {} thresholds over {} rows",
        sweep.points.len(),
        scores.len()
    );
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args.common, None)?;
    s.ensure_out_dir()?;
    if args.all_flagged == !args.row.is_empty() {
        return Err(CliError::Config(
            "pass either --row indices or --all-flagged with --threshold".into(),
        ));
    }
    let (model, vocab) = load_model(&s)?;
    let (_, ds) = load_encoded(&s, &vocab)?;
    let scores = pipeline::score(&model, &ds)?;

    let selected: Vec<usize> = if args.all_flagged {
        let threshold = if s.threshold.eq_ignore_ascii_case("auto") {
            suggest_thresholds(&scores).mean_plus_3sd
        } else {
            s.threshold.parse::<f64>().map_err(|_| {
                CliError::Config(
                    "--all-flagged needs a single numeric --threshold or auto".into(),
                )
            })?
        };
        (0..ds.len()).filter(|&i| scores[i] > threshold).collect()
    } else {
        for &idx in &args.row {
            if idx >= ds.len() {
                return Err(CliError::Config(format!(
                    "row {idx} out of range for {} rows",
                    ds.len()
                )));
            }
        }
        args.row.clone()
    };

    let mut rows = Vec::with_capacity(selected.len());
    for &idx in &selected {
        let explanation = pipeline::explain_row(&model, &ds.rows[idx])?;
        rows.push((ds.order[idx], explanation));
    }
    s.write("explain_rows.csv", &report::explanation_rows_csv(&rows))?;
    let names: Vec<String> = vocab.names().iter().map(|n| n.to_string()).collect();
    s.write(
        "explain_features.csv",
        &report::explanation_features_csv(&rows, &names, |feature, value| {
            vocab.decode_value(feature, value).to_string()
        }),
    )?;
    println!("explained {} rows", rows.len());
    Ok(())
}

fn cmd_report(args: CommonArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args, None)?;
    s.ensure_out_dir()?;
    let (model, vocab) = load_model(&s)?;
    let (_, ds) = load_encoded(&s, &vocab)?;
    let names: Vec<String> = vocab.names().iter().map(|n| n.to_string()).collect();

    let profile = explain::entropy_profile(&model);
    s.write(
        "entropy_profile.csv",
        &report::entropy_profile_csv(&names, &profile),
    )?;
    s.write(
        "mi_matrix.csv",
        &report::mi_matrix_csv(&explain::mi_matrix(&model)),
    )?;

    let dims = model.physical_dims();
    let mut discrepancies = Vec::with_capacity(dims.len());
    for (i, &d) in dims.iter().enumerate() {
        let mut counts = vec![0usize; d];
        for row in &ds.rows {
            counts[row.values()[i]] += 1;
        }
        let empirical: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / ds.len() as f64)
            .collect();
        let value_names: Vec<String> = (0..d)
            .map(|v| vocab.decode_value(i, v).to_string())
            .collect();
        let model_marginal = explain::marginal(&model, i);
        s.write(
            &format!("distribution_feature_{i}.csv"),
            &report::distribution_comparison_csv(&value_names, &empirical, &model_marginal),
        )?;
        let h = explain::distribution_discrepancy(&model, i, &empirical)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        discrepancies.push(h);
    }
    s.write(
        "discrepancy_entropy.csv",
        &report::discrepancy_entropy_csv(&names, &profile, &discrepancies),
    )?;

    if let Some(labels) = &ds.labels {
        let benign: Vec<_> = ds
            .rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(r, _)| r.clone())
            .collect();
        let attack: Vec<_> = ds
            .rows
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(r, _)| r.clone())
            .collect();
        if benign.is_empty() || attack.is_empty() {
            println!("skipping feature importance: one label class is empty");
        } else {
            let table = explain::feature_importance(&model, &benign, &attack)
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            s.write(
                "feature_importance.csv",
                &report::feature_importance_csv(&names, &table),
            )?;
        }
    }
    println!(
        "report bundle written to {} ({} features)",
        s.out_dir.display(),
        dims.len()
    );
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args.common, None)?;
    s.ensure_out_dir()?;
    let (model, vocab) = load_model(&s)?;
    let samples = model.sample(args.count, s.seed);
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|row| pipeline::decode_row(row, &vocab))
        .collect();
    let table = RawTable {
        header: Some(vocab.names().iter().map(|n| n.to_string()).collect()),
        rows,
    };
    let text = pipeline::emit(&table);
    let path = s.write("samples.csv", &text)?;
    println!("wrote {} samples to {}", samples.len(), path.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let s = Settings::resolve(&args.common, None)?;
    s.ensure_out_dir()?;
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read spec {}: {e}", path.display()))
            })?;
            SynthSpec::from_json(&text)?
        }
        None => SynthSpec::benchmark(args.anomaly_rate.unwrap_or(0.005)),
    };
    if args.emit_spec {
        let path = s.write("synth_spec.json", &spec.to_json_pretty())?;
        println!("spec written to {}", path.display());
        return Ok(());
    }
    let (table, labels) = spec.generate(args.count, s.seed)?;
    let path = s.out_dir.join("synth.csv");
    pipeline::write_table(&path, &table, Some(("label", &labels)))?;

    // closed-form ground truth alongside the stream
    let stats = format!(
        "metric,value\nexact_entropy,{}\nanomaly_rate,{}\nanomalies,{}\n",
        report::fmt_sig12(spec.exact_entropy()),
        report::fmt_sig12(spec.anomaly_rate),
        labels.iter().filter(|&&l| l).count()
    );
    s.write("synth_stats.csv", &stats)?;

    let mi = spec.exact_classical_mi_matrix();
    let mut grid = String::new();
    for row in &mi {
        let line: Vec<String> = row.iter().map(|v| report::fmt_sig12(*v)).collect();
        grid.push_str(&line.join(","));
        grid.push('\n');
    }
    s.write("synth_mi.csv", &grid)?;
    println!(
        "wrote {} rows ({} anomalous) to {}",
        table.rows.len(),
        labels.iter().filter(|&&l| l).count(),
        path.display()
    );
    Ok(())
}
