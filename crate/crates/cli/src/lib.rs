//! `specsense` subcommands: generate, train, evaluate, predict.
//!
//! Every option may also come from a `key=value` file passed with
//! `--config`; keys are the long flag names (`per-class` or `per_class`).
//! Flags given on the command line win.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;
use specsense_core::dataset::{self, Dataset, DatasetError, GenerateConfig, IqVector, Task};
use specsense_core::eval::{self, EvalError};
use specsense_core::nnet::{self, EpochRecord, FeatureSet, Model, ModelConfig, NnetError, TrainConfig};
use specsense_core::transforms::Representation;
use specsense_core::Complex32;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_IO, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError { code: EXIT_DATA, message: msg.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => CliError::io(e.to_string()),
            DatasetError::Parameter(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<NnetError> for CliError {
    fn from(e: NnetError) -> Self {
        match e {
            NnetError::Io(_) => CliError::io(e.to_string()),
            NnetError::Config(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(_) => CliError::io(e.to_string()),
            EvalError::Model(inner) => inner.into(),
            _ => CliError::data(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "specsense", version, about = "Wireless signal identification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a labelled dataset container.
    Generate(GenerateArgs),
    /// Train a classifier on a dataset.
    Train(TrainArgs),
    /// Score a trained model on the test split of a dataset.
    Evaluate(EvaluateArgs),
    /// Classify one capture.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `mod` (11 modulations) or `if` (15 interference classes).
    #[arg(long)]
    pub task: Option<String>,
    /// Examples per class per SNR.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// SNR grid `start:step:end` in dB, inclusive; comma-separated grids and
    /// single values are merged.
    #[arg(long, allow_hyphen_values = true)]
    pub snrs: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per capture.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// `iq`, `ap` or `fft`.
    #[arg(long)]
    pub repr: Option<String>,
    /// `desk` or `paper`.
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub train_frac: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub deterministic: bool,
    /// Output directory for model.spnn, history.csv and train_summary.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Raw capture: N little-endian (f32 I, f32 Q) pairs.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Take the capture from a dataset container instead.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<usize>,
}

/// Parsed `key=value` file. `#` starts a comment.
#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::usage(format!("config line {}: expected key=value", i + 1)))?;
            values.insert(k.trim().replace('_', "-"), v.trim().to_owned());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(ConfigFile::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        let mut unknown: Vec<&String> = self.values.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
        unknown.sort();
        match unknown.first() {
            Some(k) => Err(CliError::usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    /// The flag value if given, else the config value.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| CliError::usage(format!("missing required option --{name}")))
}

fn parse_with<T: FromStr>(v: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| CliError::usage(format!("{what}: {e}")))
}

/// Merges comma-separated `start:step:end` grids or single values.
pub fn parse_snrs(spec: &str) -> Result<Vec<i16>> {
    let mut grid = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if part.contains(':') {
            grid.extend(dataset::parse_snr_grid(part)?);
        } else {
            let v: i16 = parse_with(part, "SNR value")?;
            grid.extend(dataset::parse_snr_grid(&format!("{v}:1:{v}"))?);
        }
    }
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

pub fn cmd_generate(args: GenerateArgs) -> Result<String> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    cfg.check_keys(&["task", "per-class", "snrs", "seed", "n", "out"])?;
    let task: Task = parse_with(&required(cfg.pick(args.task, "task")?, "task")?, "task")?;
    let per_class = required(cfg.pick(args.per_class, "per-class")?, "per-class")?;
    let snrs = parse_snrs(&required(cfg.pick(args.snrs, "snrs")?, "snrs")?)?;
    let seed = required(cfg.pick(args.seed, "seed")?, "seed")?;
    let n = cfg.pick(args.n, "n")?.unwrap_or(dataset::DEFAULT_N);
    let out = required(cfg.pick(args.out, "out")?, "out")?;

    let ds = dataset::generate_dataset(&GenerateConfig { task, per_class_per_snr: per_class, snr_grid: snrs, seed, n })?;
    dataset::save(&ds, &out)?;
    let mut msg = format!("wrote {} records to {}\n", ds.len(), out.display());
    for (name, count) in ds.class_names.iter().zip(ds.class_counts()) {
        writeln!(msg, "{name:>16} {count}").unwrap();
    }
    Ok(msg)
}

/// Everything a training run needs, after merging flags and config.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub repr: Representation,
    pub scale: String,
    pub train: TrainConfig,
    pub train_frac: f64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(args: TrainArgs) -> Result<Self> {
        let cfg = ConfigFile::load(args.config.as_deref())?;
        cfg.check_keys(&[
            "dataset",
            "repr",
            "scale",
            "epochs",
            "batch",
            "lr",
            "dropout",
            "train-frac",
            "seed",
            "deterministic",
            "out",
        ])?;
        let defaults = TrainConfig::default();
        let repr = parse_with(&required(cfg.pick(args.repr, "repr")?, "repr")?, "representation")?;
        let scale = cfg.pick(args.scale, "scale")?.unwrap_or_else(|| "desk".into());
        if scale != "desk" && scale != "paper" {
            return Err(CliError::usage(format!("unknown model scale `{scale}` (expected desk or paper)")));
        }
        let train = TrainConfig {
            lr: cfg.pick(args.lr, "lr")?.unwrap_or(defaults.lr),
            batch_size: cfg.pick(args.batch, "batch")?.unwrap_or(defaults.batch_size),
            epochs: cfg.pick(args.epochs, "epochs")?.unwrap_or(defaults.epochs),
            dropout: cfg.pick(args.dropout, "dropout")?.unwrap_or(defaults.dropout),
            seed: required(cfg.pick(args.seed, "seed")?, "seed")?,
            deterministic: cfg.flag(args.deterministic, "deterministic")?,
            ..defaults
        };
        let train_frac = cfg.pick(args.train_frac, "train-frac")?.unwrap_or(0.67);
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(CliError::usage(format!("train fraction {train_frac} outside (0, 1)")));
        }
        Ok(ExperimentConfig {
            dataset: required(cfg.pick(args.dataset, "dataset")?, "dataset")?,
            repr,
            scale,
            train,
            train_frac,
            out: required(cfg.pick(args.out, "out")?, "out")?,
        })
    }

    pub fn model_config(&self, ds: &Dataset) -> ModelConfig {
        let base = if self.scale == "paper" { ModelConfig::paper(ds.num_classes()) } else { ModelConfig::desk(ds.num_classes()) };
        ModelConfig { dropout: self.train.dropout, ..base.with_input_len(ds.n) }
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_acc,train_acc\n");
    for h in history {
        writeln!(s, "{},{:.6},{:.6},{:.6},{:.6}", h.epoch, h.train_loss, h.val_loss, h.val_acc, h.train_acc).unwrap();
    }
    s
}

/// Train, validation and test partitions exactly as `train` made them.
pub fn recreate_split(model: &Model<f32>, ds: &Dataset) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(dataset::split(ds, model.meta.train_frac, model.meta.seed)?)
}

fn model_repr(model: &Model<f32>) -> Result<Representation> {
    Representation::from_tag(model.meta.repr_tag)
        .ok_or_else(|| CliError::data(format!("model records unknown representation tag {}", model.meta.repr_tag)))
}

fn check_compatible(model: &Model<f32>, ds: &Dataset) -> Result<()> {
    if model.num_classes() != ds.num_classes() {
        return Err(CliError::data(format!("model has {} classes but the dataset has {}", model.num_classes(), ds.num_classes())));
    }
    if model.input_shape()[2] != ds.n {
        return Err(CliError::data(format!("model expects {}-sample captures, dataset has {}", model.input_shape()[2], ds.n)));
    }
    if Task::from_tag(model.meta.task_tag).is_some_and(|t| t != ds.task) {
        return Err(CliError::data(format!("model was trained for the {} task, dataset is {}", Task::from_tag(model.meta.task_tag).unwrap(), ds.task)));
    }
    Ok(())
}

pub fn cmd_train(args: TrainArgs) -> Result<String> {
    let exp = ExperimentConfig::resolve(args)?;
    let ds = dataset::load(&exp.dataset)?;
    let (train_ds, val_ds, test_ds) = dataset::split(&ds, exp.train_frac, exp.train.seed)?;
    if train_ds.is_empty() || val_ds.is_empty() || test_ds.is_empty() {
        return Err(CliError::data(format!("{} examples are too few for a train/validation/test split", ds.len())));
    }
    info!("split {} / {} / {}", train_ds.len(), val_ds.len(), test_ds.len());
    let train_set = FeatureSet::from_dataset(&train_ds, exp.repr);
    let val_set = FeatureSet::from_dataset(&val_ds, exp.repr);
    let outcome = nnet::train(&exp.model_config(&ds), &train_set, &val_set, &exp.train)?;
    let mut model = outcome.model;
    model.meta.task_tag = ds.task.tag();
    model.meta.repr_tag = exp.repr.tag();
    model.meta.seed = exp.train.seed;
    model.meta.train_frac = exp.train_frac;

    let ev = eval::evaluate_model(&model, exp.repr, &test_ds)?;
    create_dir(&exp.out)?;
    nnet::save_model(&model, exp.out.join("model.spnn"))?;
    write_file(&exp.out.join("history.csv"), history_csv(&outcome.history))?;
    let best = outcome.best_epoch.map_or_else(|| "none".to_owned(), |e| e.to_string());
    let summary = format!(
        "task = {}\nrepr = {}\nscale = {}\nseed = {}\nbest_epoch = {best}\ntest_examples = {}\ntest_accuracy = {:.6}\n",
        ds.task, exp.repr, exp.scale, exp.train.seed, test_ds.len(), ev.report.accuracy
    );
    write_file(&exp.out.join("train_summary.txt"), &summary)?;
    Ok(summary)
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Result<String> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    cfg.check_keys(&["model", "dataset", "out"])?;
    let model = nnet::load_model(required(cfg.pick(args.model, "model")?, "model")?)?;
    let ds = dataset::load(required(cfg.pick(args.dataset, "dataset")?, "dataset")?)?;
    let out = required(cfg.pick(args.out, "out")?, "out")?;
    let repr = model_repr(&model)?;
    check_compatible(&model, &ds)?;
    let (_, _, test) = recreate_split(&model, &ds)?;
    let ev = eval::evaluate_model(&model, repr, &test)?;
    eval::emit_report(&ev.report, &ev.confusion, &ds.class_names, &out)?;
    Ok(format!(
        "test_examples = {}\naccuracy = {:.6}\nf1_weighted = {:.6}\nreport = {}\n",
        test.len(),
        ev.report.accuracy,
        ev.report.f1_avg,
        out.display()
    ))
}

/// Reads N little-endian `(f32 I, f32 Q)` pairs.
pub fn read_raw_capture(path: &Path) -> Result<IqVector> {
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    if bytes.is_empty() || bytes.len() % 8 != 0 {
        return Err(CliError::usage(format!("{}: {} bytes is not a whole number of (f32, f32) samples", path.display(), bytes.len())));
    }
    let f = |c: &[u8]| f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
    let samples: Vec<Complex32> = bytes.chunks_exact(8).map(|c| Complex32::new(f(&c[..4]), f(&c[4..]))).collect();
    IqVector::new(samples).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_raw_capture(path: &Path, capture: &IqVector) -> Result<()> {
    let mut bytes = Vec::with_capacity(capture.len() * 8);
    for s in capture.samples() {
        bytes.extend_from_slice(&s.re.to_le_bytes());
        bytes.extend_from_slice(&s.im.to_le_bytes());
    }
    write_file(path, bytes)
}

/// Top-1 index and probabilities for one capture under the model's recorded
/// representation.
pub fn classify(model: &Model<f32>, capture: &IqVector) -> Result<(usize, Vec<f32>)> {
    let repr = model_repr(model)?;
    if capture.len() != model.input_shape()[2] {
        return Err(CliError::usage(format!("capture has {} samples, model expects {}", capture.len(), model.input_shape()[2])));
    }
    Ok(nnet::predict(model, &repr.apply(capture))?)
}

pub fn cmd_predict(args: PredictArgs) -> Result<String> {
    let cfg = ConfigFile::load(args.config.as_deref())?;
    cfg.check_keys(&["model", "input", "dataset", "index"])?;
    let model = nnet::load_model(required(cfg.pick(args.model, "model")?, "model")?)?;
    let input = cfg.pick(args.input, "input")?;
    let from_ds = cfg.pick(args.dataset, "dataset")?;
    let capture = match (input, from_ds) {
        (Some(path), None) => read_raw_capture(&path)?,
        (None, Some(path)) => {
            let ds = dataset::load(&path)?;
            let index = required(cfg.pick(args.index, "index")?, "index")?;
            let e = ds.examples.get(index).ok_or_else(|| CliError::usage(format!("index {index} outside {} records", ds.len())))?;
            e.capture.clone()
        }
        _ => return Err(CliError::usage("give exactly one of --input or --dataset")),
    };
    let (top, probs) = classify(&model, &capture)?;
    let names = Task::from_tag(model.meta.task_tag)
        .map(|t| t.class_names())
        .unwrap_or_else(|| (0..model.num_classes()).map(|k| format!("class{k}")).collect());
    let mut ranked: Vec<usize> = (0..probs.len()).collect();
    ranked.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut msg = format!("prediction = {}\n", names[top]);
    for k in ranked {
        writeln!(msg, "{:>16} {:.6}", names[k], probs[k]).unwrap();
    }
    Ok(msg)
}

/// Caps worker threads from `SPECSENSE_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SPECSENSE_THREADS") {
        let n: usize = parse_with(&v, "SPECSENSE_THREADS")?;
        if n == 0 {
            return Err(CliError::usage("SPECSENSE_THREADS must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<String> {
    init_threads()?;
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_syntax() {
        let c = ConfigFile::parse("# experiment\ntask = mod\nper_class=3 # trailing\n\n").unwrap();
        assert_eq!(c.pick::<String>(None, "task").unwrap().as_deref(), Some("mod"));
        assert_eq!(c.pick::<usize>(None, "per-class").unwrap(), Some(3));
        assert_eq!(c.pick(Some(9usize), "per-class").unwrap(), Some(9));
        assert!(ConfigFile::parse("novalue").is_err());
        assert!(c.check_keys(&["task"]).is_err());
    }

    #[test]
    fn snr_lists() {
        assert_eq!(parse_snrs("-20:4:16,18").unwrap().len(), 11);
        assert_eq!(parse_snrs("-8, 18").unwrap(), vec![-8, 18]);
        assert!(parse_snrs("-40:2:0").is_err());
        assert!(parse_snrs("x").is_err());
    }
}
