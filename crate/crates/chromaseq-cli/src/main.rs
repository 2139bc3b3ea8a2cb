//! Thin command-line front end: argument handling, config-file merging, and
//! file placement. All modeling logic lives in the library.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 data or I/O,
//! 3 numeric failure.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use chromaseq::active::{predict_color, rounds_to_csv, rounds_to_table, run_round};
use chromaseq::checkpoint::{
    load as load_checkpoint, save as save_checkpoint, Checkpoint, CheckpointMetadata,
    MetricsSnapshot, ScheduleRecord,
};
use chromaseq::codec::{max_len_for, Vocabulary};
use chromaseq::data::{format_hex, load_csv, save_csv, split, Dataset};
use chromaseq::gradcheck::run_gradcheck;
use chromaseq::namegen::{filter_fresh, generate_names, load_adjectives, BaseColors};
use chromaseq::nn::{parameter_count, Model, ModelConfig};
use chromaseq::swatch::render_swatch_html;
use chromaseq::train::{evaluate, train, TrainSchedule};
use chromaseq::{Error, Result};

#[derive(Parser)]
#[command(name = "chromaseq", version, about = "Character-level color-name model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a color CSV and write its canonical form
    Ingest(IngestArgs),
    /// Train from scratch and write a checkpoint plus metric history
    Train(TrainArgs),
    /// Report loss and accuracy of a checkpoint on both dataset splits
    Eval(EvalArgs),
    /// Predict colors for words
    Predict(PredictArgs),
    /// Print adjective x base-color candidate names
    GenerateNames(GenerateNamesArgs),
    /// Run augment-retrain rounds starting from a checkpoint
    ActiveLearn(ActiveLearnArgs),
    /// Render predictions for a word list as a static HTML page
    Swatch(SwatchArgs),
    /// Check every analytic gradient against finite differences
    Gradcheck(GradcheckArgs),
}

/// Flags shared by every data-touching command. Precedence for each value:
/// flag, then config file, then (for the seed) CHROMASEQ_SEED, then default.
#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for initialization, shuffling, and the dataset split
    #[arg(long)]
    seed: Option<u64>,
    /// Use only the first N dataset records
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    conv_filters: Option<usize>,
    #[arg(long)]
    conv_kernel: Option<usize>,
    #[arg(long)]
    lstm_hidden: Option<usize>,
    /// Hidden dense widths, comma-separated (e.g. 256,128)
    #[arg(long)]
    dense_dims: Option<String>,
    /// Mean-pool LSTM states over time instead of taking the last state
    #[arg(long)]
    mean_pool: bool,
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    val_fraction: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Words to predict, in output order
    #[arg(required = true)]
    words: Vec<String>,
    /// Emit a JSON array instead of tab-separated lines
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GenerateNamesArgs {
    #[arg(long)]
    adjectives: Option<PathBuf>,
    /// Drop names this dataset already contains
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ActiveLearnArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    adjectives: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SwatchArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Word list, one per line; blank lines and # comments are skipped
    #[arg(long)]
    words: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GradcheckArgs {
    #[command(flatten)]
    common: CommonArgs,
}

/// Key=value pairs from a config file. Unknown keys are an error so typos
/// do not silently fall back to defaults.
struct FileConfig {
    values: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "dataset",
    "adjectives",
    "checkpoint",
    "out",
    "seed",
    "limit",
    "rounds",
    "epochs",
    "batch_size",
    "val_fraction",
    "learning_rate",
    "embed_dim",
    "conv_filters",
    "conv_kernel",
    "lstm_hidden",
    "dense_dims",
    "mean_pool",
    "max_len",
    "words",
];

impl FileConfig {
    fn empty() -> FileConfig {
        FileConfig {
            values: HashMap::new(),
        }
    }

    fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::empty());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key=value, got {:?}",
                    path.display(),
                    lineno + 1,
                    line
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key {:?}",
                    path.display(),
                    lineno + 1,
                    key
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::Config(format!("config key {} has invalid value {:?}", key, raw))
            }),
        }
    }

    fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Some(seed) = file.get("seed")? {
        return Ok(seed);
    }
    match std::env::var("CHROMASEQ_SEED") {
        Ok(raw) => raw
            .parse()
            .map_err(|_| Error::Config(format!("CHROMASEQ_SEED is not an integer: {:?}", raw))),
        Err(_) => Ok(0),
    }
}

fn required_path(
    flag: Option<PathBuf>,
    file: &FileConfig,
    key: &str,
    flag_name: &str,
) -> Result<PathBuf> {
    flag.or_else(|| file.get_path(key))
        .ok_or_else(|| Error::Config(format!("missing required {} (or config key {})", flag_name, key)))
}

fn parse_dense_dims(raw: &str) -> Result<Vec<usize>> {
    let raw = raw.trim();
    if raw.is_empty() || raw == "none" {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid dense_dims entry {:?}", part)))
        })
        .collect()
}

fn load_dataset(path: &Path, limit: Option<usize>, seed: u64) -> Result<Dataset> {
    let dataset = load_csv(path)?;
    let dataset = match limit {
        Some(n) => dataset.limited(n),
        None => dataset,
    };
    Ok(dataset.with_split_seed(seed))
}

fn resolve_limit(args: &CommonArgs, file: &FileConfig) -> Result<Option<usize>> {
    Ok(match args.limit {
        Some(n) => Some(n),
        None => file.get("limit")?,
    })
}

fn build_schedule(
    mut base: TrainSchedule,
    args: &ScheduleArgs,
    file: &FileConfig,
) -> Result<TrainSchedule> {
    base.epochs = args.epochs.or(file.get("epochs")?).unwrap_or(base.epochs);
    base.batch_size = args
        .batch_size
        .or(file.get("batch_size")?)
        .unwrap_or(base.batch_size);
    base.val_fraction = args
        .val_fraction
        .or(file.get("val_fraction")?)
        .unwrap_or(base.val_fraction);
    base.learning_rate = args
        .learning_rate
        .or(file.get("learning_rate")?)
        .unwrap_or(base.learning_rate);
    base.validate()?;
    Ok(base)
}

fn build_model_config(
    dataset: &Dataset,
    vocab: &Vocabulary,
    args: &ModelArgs,
    file: &FileConfig,
) -> Result<ModelConfig> {
    let max_len = args
        .max_len
        .or(file.get("max_len")?)
        .unwrap_or_else(|| max_len_for(dataset));
    let mut config = ModelConfig::reference(vocab.size(), max_len);
    config.embed_dim = args
        .embed_dim
        .or(file.get("embed_dim")?)
        .unwrap_or(config.embed_dim);
    config.conv_filters = args
        .conv_filters
        .or(file.get("conv_filters")?)
        .unwrap_or(config.conv_filters);
    config.conv_kernel = args
        .conv_kernel
        .or(file.get("conv_kernel")?)
        .unwrap_or(config.conv_kernel);
    config.lstm_hidden = args
        .lstm_hidden
        .or(file.get("lstm_hidden")?)
        .unwrap_or(config.lstm_hidden);
    if let Some(raw) = args
        .dense_dims
        .clone()
        .or_else(|| file.values.get("dense_dims").cloned())
    {
        config.dense_dims = parse_dense_dims(&raw)?;
    }
    config.mean_pool = args.mean_pool || file.get("mean_pool")?.unwrap_or(false);
    config.validate()?;
    Ok(config)
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let dataset_path = required_path(args.dataset, &file, "dataset", "--dataset")?;
    let out = required_path(args.out, &file, "out", "--out")?;
    let limit = resolve_limit(&args.common, &file)?;
    let seed = resolve_seed(args.common.seed, &file)?;

    let dataset = load_dataset(&dataset_path, limit, seed)?;
    ensure_out_dir(&out)?;
    let canonical = out.join("colors.csv");
    save_csv(&dataset, &canonical)?;

    let fp = dataset.fingerprint();
    println!("{} records -> {}", fp.rows, canonical.display());
    println!("sha256 {}", fp.sha256);
    Ok(())
}

fn checkpoint_metadata(
    dataset: &Dataset,
    schedules: Vec<ScheduleRecord>,
    seed: u64,
    metrics: Option<MetricsSnapshot>,
) -> CheckpointMetadata {
    CheckpointMetadata::for_run(&dataset.fingerprint(), schedules, seed, metrics)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let dataset_path = required_path(args.dataset, &file, "dataset", "--dataset")?;
    let out = required_path(args.out, &file, "out", "--out")?;
    let limit = resolve_limit(&args.common, &file)?;
    let seed = resolve_seed(args.common.seed, &file)?;

    let dataset = load_dataset(&dataset_path, limit, seed)?;
    let vocab = Vocabulary::build(&dataset)?;
    let config = build_model_config(&dataset, &vocab, &args.model, &file)?;
    let schedule = build_schedule(TrainSchedule::stage1(seed), &args.schedule, &file)?;

    println!(
        "training on {} records, {} parameters, {} epochs",
        dataset.len(),
        parameter_count(&config),
        schedule.epochs
    );
    let (params, report) = train::<f32>(&dataset, &vocab, &config, &schedule)?;

    ensure_out_dir(&out)?;
    let last = report.final_metrics();
    let metadata = checkpoint_metadata(
        &dataset,
        vec![ScheduleRecord::new("stage1", &schedule)],
        seed,
        Some(MetricsSnapshot {
            train_loss: last.train_loss,
            train_acc: last.train_acc,
            val_loss: last.val_loss,
            val_acc: last.val_acc,
        }),
    );
    let model = Model {
        config,
        vocab,
        params,
    };
    save_checkpoint(&Checkpoint::new(&model, metadata), out.join("model.csq"))?;
    report.write_csv(out.join("history.csv"))?;

    println!(
        "final: train loss {:.6} acc {:.4}, val loss {:.6} acc {:.4}",
        last.train_loss, last.train_acc, last.val_loss, last.val_acc
    );
    println!("wrote {} and history.csv", out.join("model.csq").display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let checkpoint_path = required_path(args.checkpoint, &file, "checkpoint", "--checkpoint")?;
    let dataset_path = required_path(args.dataset, &file, "dataset", "--dataset")?;
    let limit = resolve_limit(&args.common, &file)?;
    let seed = resolve_seed(args.common.seed, &file)?;
    let val_fraction = args
        .val_fraction
        .or(file.get("val_fraction")?)
        .unwrap_or(0.2);

    let model = load_checkpoint(&checkpoint_path)?.into_model();
    let dataset = load_dataset(&dataset_path, limit, seed)?;
    let (train_idx, val_idx) = split(&dataset, val_fraction, dataset.split_seed())?;
    if val_idx.is_empty() {
        return Err(Error::Config(format!(
            "validation split is empty ({} records at fraction {}); raise --val-fraction",
            dataset.len(),
            val_fraction
        )));
    }

    let (train_loss, train_acc) =
        evaluate(&model.params, &model.config, &model.vocab, &dataset, &train_idx)?;
    let (val_loss, val_acc) =
        evaluate(&model.params, &model.config, &model.vocab, &dataset, &val_idx)?;
    println!(
        "train: {} records, loss {:.6}, dominant-channel accuracy {:.4}",
        train_idx.len(),
        train_loss,
        train_acc
    );
    println!(
        "val:   {} records, loss {:.6}, dominant-channel accuracy {:.4}",
        val_idx.len(),
        val_loss,
        val_acc
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let checkpoint_path = required_path(args.checkpoint, &file, "checkpoint", "--checkpoint")?;
    let model = load_checkpoint(&checkpoint_path)?.into_model();

    let mut json_entries = Vec::new();
    for word in &args.words {
        let (rgb, rgb01) = predict_color(&model.params, &model.config, &model.vocab, word)?;
        if args.json {
            json_entries.push(serde_json::json!({
                "name": word,
                "hex": format_hex(rgb),
                "rgb": rgb,
                "rgb01": rgb01,
            }));
        } else {
            println!(
                "{}\t{}\t{},{},{}",
                word,
                format_hex(rgb),
                rgb[0],
                rgb[1],
                rgb[2]
            );
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&json_entries).expect("json"));
    }
    Ok(())
}

fn cmd_generate_names(args: GenerateNamesArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let adjectives_path = required_path(args.adjectives, &file, "adjectives", "--adjectives")?;
    let adjectives = load_adjectives(&adjectives_path)?;
    let names = generate_names(&adjectives, &BaseColors::default());

    let names = match args.dataset.or_else(|| file.get_path("dataset")) {
        Some(path) => {
            let limit = resolve_limit(&args.common, &file)?;
            let dataset = load_dataset(&path, limit, 0)?;
            filter_fresh(&names, &dataset)
        }
        None => names,
    };
    for name in names {
        println!("{}", name);
    }
    Ok(())
}

fn cmd_active_learn(args: ActiveLearnArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let checkpoint_path = required_path(args.checkpoint, &file, "checkpoint", "--checkpoint")?;
    let dataset_path = required_path(args.dataset, &file, "dataset", "--dataset")?;
    let adjectives_path = required_path(args.adjectives, &file, "adjectives", "--adjectives")?;
    let out = required_path(args.out, &file, "out", "--out")?;
    let limit = resolve_limit(&args.common, &file)?;
    let seed = resolve_seed(args.common.seed, &file)?;
    let rounds = args.rounds.or(file.get("rounds")?).unwrap_or(1);
    if rounds == 0 {
        return Err(Error::Config("rounds must be >= 1".into()));
    }

    let loaded = load_checkpoint(&checkpoint_path)?;
    let mut schedules = loaded.metadata.schedules.clone();
    let model = loaded.into_model();
    let mut dataset = load_dataset(&dataset_path, limit, seed)?;
    let adjectives = load_adjectives(&adjectives_path)?;
    let colors = BaseColors::default();
    let stage2 = build_schedule(TrainSchedule::stage2(seed), &args.schedule, &file)?;

    let mut params = model.params;
    let mut reports = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let (next_dataset, next_params, report) = run_round(
            &dataset,
            params,
            &model.config,
            &model.vocab,
            &stage2,
            &adjectives,
            &colors,
            round,
        )?;
        dataset = next_dataset;
        params = next_params;
        println!(
            "round {}: generated {}, appended {}",
            round, report.names_generated, report.names_appended
        );
        schedules.push(ScheduleRecord::new("stage2", &stage2));
        reports.push(report);
    }

    ensure_out_dir(&out)?;
    save_csv(&dataset, out.join("augmented.csv"))?;
    let last_post = reports.last().map(|r| MetricsSnapshot {
        train_loss: r.post.train_loss,
        train_acc: r.post.train_acc,
        val_loss: r.post.val_loss,
        val_acc: r.post.val_acc,
    });
    let metadata = checkpoint_metadata(&dataset, schedules, seed, last_post);
    let final_model = Model {
        config: model.config,
        vocab: model.vocab,
        params,
    };
    save_checkpoint(&Checkpoint::new(&final_model, metadata), out.join("model.csq"))?;
    write_file(&out.join("rounds.csv"), &rounds_to_csv(&reports))?;

    println!();
    print!("{}", rounds_to_table(&reports));
    println!(
        "\nwrote augmented.csv, model.csq, rounds.csv under {}",
        out.display()
    );
    Ok(())
}

fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let words: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    if words.is_empty() {
        return Err(Error::Data(format!(
            "{}: no words found",
            path.display()
        )));
    }
    Ok(words)
}

fn cmd_swatch(args: SwatchArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let checkpoint_path = required_path(args.checkpoint, &file, "checkpoint", "--checkpoint")?;
    let words_path = required_path(args.words, &file, "words", "--words")?;
    let out = args
        .out
        .or_else(|| file.get_path("out"))
        .unwrap_or_else(|| PathBuf::from("swatches.html"));

    let model = load_checkpoint(&checkpoint_path)?.into_model();
    let words = read_word_list(&words_path)?;
    let mut entries = Vec::with_capacity(words.len());
    for word in &words {
        let (rgb, _) = predict_color(&model.params, &model.config, &model.vocab, word)?;
        entries.push((word.clone(), rgb));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_out_dir(parent)?;
    }
    write_file(&out, &render_swatch_html(&entries))?;
    println!("wrote {} swatches to {}", entries.len(), out.display());
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, &file)?;
    let report = run_gradcheck(seed)?;
    print!("{}", report.to_table());
    if !report.passed() {
        return Err(Error::NonFinite(format!(
            "gradient check failed with max relative error {:.3e}",
            report.max_rel_err()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::GenerateNames(args) => cmd_generate_names(args),
        Command::ActiveLearn(args) => cmd_active_learn(args),
        Command::Swatch(args) => cmd_swatch(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 1,
        Error::NonFinite(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}
