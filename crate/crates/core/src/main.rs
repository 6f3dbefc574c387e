use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use decision_stream::data::{load_csv, load_features_csv, split_train_valid, Dataset, Schema, SchemaSource};
use decision_stream::ensemble::{train_ensemble, Ensemble, EnsembleConfig, EnsembleKind};
use decision_stream::evaluation::{
    as_values, run_experiment, task_error, tune_plim, write_experiment_csv, ExperimentConfig, DEFAULT_GRID,
};
use decision_stream::graph::{DsModel, Prediction, SplitMode};
use decision_stream::stats::TestFamily;
use decision_stream::synth::{generate, SynthConfig, SynthTask};
use decision_stream::training::{train, TrainConfig};
use decision_stream::Error;

#[derive(Parser)]
#[command(name = "ds", version, about = "Decision Stream learner")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model (or an ensemble) from a labelled CSV file.
    Train(TrainArgs),
    /// Write predictions for a CSV file.
    Predict(PredictArgs),
    /// Print the error of a model on a labelled CSV file.
    Evaluate(PredictArgs),
    /// Sweep the significance threshold on a validation set.
    Tune(TuneArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Compare tuned Decision Streams with a depth-limited tree on synthetic data.
    Experiment(ExperimentArgs),
    /// Print node count, depth, leaf count and maximum fan-in.
    Inspect(InspectArgs),
}

#[derive(Args, Clone)]
struct LearnArgs {
    #[arg(long, default_value_t = 0.05)]
    p_lim: f64,
    #[arg(long, default_value = "parametric")]
    family: TestFamily,
    #[arg(long, default_value = "exact", value_parser = parse_mode)]
    mode: SplitMode,
    /// Disable leaf merging.
    #[arg(long)]
    no_merge: bool,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl LearnArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            p_lim: self.p_lim,
            family: self.family,
            split_mode: self.mode,
            merge_enabled: !self.no_merge,
            min_samples_split: self.min_split,
            seed: self.seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Schema file; column kinds are inferred when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Label column (defaults to the schema's label).
    #[arg(long)]
    label: Option<String>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        load_labelled(&self.data, self.schema.as_deref(), self.label.as_deref())
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    learn: LearnArgs,
    /// Output model file.
    #[arg(long)]
    model: PathBuf,
    /// Trace CSV (default: next to the model).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<EnsembleKind>,
    #[arg(long, default_value_t = 10)]
    members: usize,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Schema file (default: the one saved next to the model).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Predictions CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    /// Training CSV, optionally followed by a validation CSV; a single file
    /// is split 90/10 under the seed.
    #[arg(long, num_args = 1..=2, required = true)]
    data: Vec<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    learn: LearnArgs,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Sweep CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "classification", value_parser = parse_task)]
    task: SynthTask,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "classification", value_parser = parse_task)]
    task: SynthTask,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[arg(long, default_value = "parametric")]
    family: TestFamily,
    #[arg(long, default_value = "scalable", value_parser = parse_mode)]
    mode: SplitMode,
    #[arg(long, default_value_t = 2)]
    min_split: usize,
    /// First seed; runs use consecutive seeds.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    runs: u64,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    tree_depth: usize,
    /// Results CSV (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

fn parse_mode(s: &str) -> Result<SplitMode, String> {
    match s {
        "exact" => Ok(SplitMode::Exact),
        "scalable" => Ok(SplitMode::Scalable),
        other => Err(format!("unknown split mode `{other}` (expected exact or scalable)")),
    }
}

fn parse_task(s: &str) -> Result<SynthTask, String> {
    match s {
        "classification" => Ok(SynthTask::Classification { num_classes: 2 }),
        "regression" => Ok(SynthTask::Regression),
        other => Err(format!(
            "unknown task `{other}` (expected classification or regression)"
        )),
    }
}

fn schema_sidecar(path: &Path) -> PathBuf {
    path.with_extension("schema.json")
}

fn load_labelled(data: &Path, schema: Option<&Path>, label: Option<&str>) -> Result<Dataset, Error> {
    match schema {
        Some(p) => {
            let schema = Schema::read(p)?;
            let label = label.map(str::to_owned).unwrap_or_else(|| schema.label.name.clone());
            load_csv(data, SchemaSource::Given(schema), &label)
        }
        None => {
            let label = label.ok_or_else(|| Error::InvalidArgument("--label is required without --schema".into()))?;
            load_csv(data, SchemaSource::Infer, label)
        }
    }
}

enum Loaded {
    Single(DsModel),
    Ensemble(Ensemble),
}

impl Loaded {
    fn read(path: &Path) -> Result<Loaded, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("members").is_some() {
            Ok(Loaded::Ensemble(Ensemble::from_json(&text)?))
        } else {
            Ok(Loaded::Single(DsModel::from_json(&text)?))
        }
    }

    fn predict(&self, table: &decision_stream::data::FeatureTable) -> Result<Vec<Prediction>, Error> {
        match self {
            Loaded::Single(m) => m.predict_batch(table),
            Loaded::Ensemble(e) => e.predict_batch(table),
        }
    }
}

fn model_schema(model: &Path, schema: Option<&Path>) -> Result<Schema, Error> {
    Schema::read(schema.map_or_else(|| schema_sidecar(model), Path::to_owned))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    match path {
        Some(p) => Ok(Box::new(std::fs::File::create(p).map_err(|e| Error::Io {
            path: p.to_owned(),
            source: e,
        })?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let data = args.data.load()?;
    let base = args.learn.config();
    data.schema().write(schema_sidecar(&args.model))?;
    match args.ensemble {
        Some(kind) => {
            let config = EnsembleConfig::preset(kind, args.members, &data, base, args.learn.seed);
            let ensemble = train_ensemble(&data, config)?;
            ensemble.save(&args.model)?;
            log::info!("trained {} members", ensemble.members.len());
        }
        None => {
            let (model, trace) = train(&data, base)?;
            model.save(&args.model)?;
            let trace_path = args.out.unwrap_or_else(|| args.model.with_extension("trace.csv"));
            trace.write_csv(&trace_path)?;
            log::info!("{}", model.summary());
        }
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let schema = model_schema(&args.model, args.schema.as_deref())?;
    let model = Loaded::read(&args.model)?;
    let table = load_features_csv(&args.data, &schema)?;
    let predictions = model.predict(&table)?;
    let mut w = csv::Writer::from_writer(output(args.out.as_deref())?);
    w.write_record([schema.label.name.as_str()])?;
    for p in predictions {
        let cell = match p {
            Prediction::Class(c) => schema
                .label
                .levels
                .get(c as usize)
                .cloned()
                .unwrap_or_else(|| c.to_string()),
            Prediction::Value(v) => v.to_string(),
        };
        w.write_record([cell])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: args.out.unwrap_or_else(|| "stdout".into()),
        source: e,
    })?;
    Ok(())
}

fn cmd_evaluate(args: PredictArgs) -> Result<(), Error> {
    let schema = model_schema(&args.model, args.schema.as_deref())?;
    let label = schema.label.name.clone();
    let data = load_csv(&args.data, SchemaSource::Given(schema), &label)?;
    let model = Loaded::read(&args.model)?;
    let predictions = as_values(&model.predict(data.features())?);
    let error = task_error(&predictions, &data)?;
    let metric = if data.num_classes().is_some() {
        "accuracy"
    } else {
        "wape"
    };
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "error={error:.2} metric={metric} rows={}", data.row_count()).map_err(|e| Error::Io {
        path: "stdout".into(),
        source: e,
    })?;
    Ok(())
}

fn cmd_tune(args: TuneArgs) -> Result<(), Error> {
    let first = load_labelled(&args.data[0], args.schema.as_deref(), args.label.as_deref())?;
    let (fit, valid) = match args.data.get(1) {
        Some(path) => {
            let label = first.schema().label.name.clone();
            (
                first.clone(),
                load_csv(path, SchemaSource::Given(first.schema().clone()), &label)?,
            )
        }
        None => split_train_valid(&first, 0.1, args.learn.seed)?,
    };
    let grid = args.grid.unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let sweep = tune_plim(&fit, &valid, &grid, args.learn.config())?;
    match &args.out {
        Some(p) => {
            sweep.write_csv(p)?;
            println!("best_p_lim={} best_error={:.2}", sweep.best_p_lim, sweep.best_error);
        }
        None => {
            sweep.write_csv_to(std::io::stdout().lock())?;
            eprintln!("best_p_lim={} best_error={:.2}", sweep.best_p_lim, sweep.best_error);
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let config = SynthConfig {
        noise_std: args.noise_std,
        ..SynthConfig::new(args.n_samples, args.task, args.seed)
    };
    let data = generate(&config)?;
    data.write_csv(&args.out)?;
    data.schema().write(schema_sidecar(&args.out))?;
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::new(args.task, args.n_samples, (args.seed..args.seed + args.runs).collect());
    config.noise_std = args.noise_std;
    config.tree_depth = args.tree_depth;
    config.base = TrainConfig {
        family: args.family,
        split_mode: args.mode,
        min_samples_split: args.min_split,
        ..TrainConfig::default()
    };
    if let Some(grid) = args.grid {
        config.grid = grid;
    }
    let rows = run_experiment(&config)?;
    write_experiment_csv(&rows, output(args.out.as_deref())?)
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Error> {
    match Loaded::read(&args.model)? {
        Loaded::Single(m) => println!("{}", m.summary()),
        Loaded::Ensemble(e) => {
            for (i, m) in e.members.iter().enumerate() {
                println!("member={i} {}", m.model.summary());
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DS_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
