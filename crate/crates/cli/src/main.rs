//! `radarcnn`: dataset generation, training, and the three evaluations.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use radarcnn::dataset::{
    generate_dataset, mean_component_power, read_frame, Dataset, DatasetPlan, Split,
};
use radarcnn::nn::{checkpoint, gradcheck, InputMode, RadarCnnModel};
use radarcnn::pipeline::{
    check_mode, evaluate_frames, sha256_hex, sweep_frames, train_with_progress,
    validate_sigma2_list, write_report, write_sweep_csv, Evaluation, Report, Selector, TrainConfig,
    TrainingLog, DEFAULT_SIGMA2,
};
use radarcnn::radar_sim::{RadarConfig, Variant};
use radarcnn::{Error, ErrorClass};

const DEFAULT_DATA_SEED: u64 = 42;
const DEFAULT_TRAIN_SEED: u64 = 7;
const DEFAULT_NOISE_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "radarcnn", version, about = "Radar IQ object classification")]
struct Cli {
    /// Worker threads (default: available cores). `--threads 1` is bit-reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the 600-frame dataset (300 train, 100 test, 200 occluded).
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DATA_SEED)]
        seed: u64,
    },
    /// Train one model on the clean training split.
    Train(TrainArgs),
    /// Confusion matrix on the clean test split or the occluded frames.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        occluded: bool,
        /// Fail unless the model was trained on this input mode.
        #[arg(long)]
        mode: Option<InputMode>,
        /// Directory for report.json and confusion.txt.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Accuracy on the clean test split under added complex Gaussian noise.
    SweepNoise {
        /// Checkpoint; repeat once per input mode.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated total complex variances, strictly increasing.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIGMA2)]
        sigma2: Vec<f64>,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NOISE_SEED)]
        noise_seed: u64,
        /// Directory for report.json, confusion.txt and sweep.csv.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finite-difference check of every backward pass.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the header and statistics of a frame file.
    Inspect {
        #[arg(long)]
        frame: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    mode: InputMode,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_TRAIN_SEED)]
    seed: u64,
    /// Consecutive 100%-accuracy epochs before stopping; 0 disables.
    #[arg(long, default_value_t = 3)]
    early_stop: usize,
    #[arg(long)]
    out: PathBuf,
    /// Directory for report.json with the training log.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
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
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numeric => 3,
            })
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let threads = match cli.threads {
        Some(0) => return Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    println!("# radarcnn {}", env!("CARGO_PKG_VERSION"));
    println!("# threads: {threads}");

    match cli.command {
        Command::Generate { out, seed } => generate(&out, seed),
        Command::Train(args) => train(args),
        Command::Eval {
            model,
            data,
            occluded,
            mode,
            report,
        } => eval(&model, &data, occluded, mode, report.as_deref()),
        Command::SweepNoise {
            model,
            data,
            sigma2,
            csv,
            noise_seed,
            report,
        } => sweep(&model, &data, &sigma2, &csv, noise_seed, report.as_deref()),
        Command::Gradcheck { seed } => grad_check(seed),
        Command::Inspect { frame } => inspect(&frame),
    }
}

fn header(run: &serde_json::Value) {
    println!("# config: {run}");
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn generate(out: &Path, seed: u64) -> CliResult {
    let config = RadarConfig::standard();
    let plan = DatasetPlan::standard();
    header(
        &json!({"command": "generate", "out": out, "seed": seed, "config": config, "plan": plan}),
    );
    let start = Instant::now();
    let manifest = generate_dataset(out, seed, &config)?;
    let count = |s: Split, v: Variant| manifest.select(Some(s), Some(v)).len();
    println!(
        "generated {} frames ({} train clean, {} test clean, {} test occluded) in {:.1}s",
        manifest.entries.len(),
        count(Split::Train, Variant::Clean),
        count(Split::Test, Variant::Clean),
        count(Split::Test, Variant::Occluded),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn train(args: TrainArgs) -> CliResult {
    let config = TrainConfig {
        input_mode: args.mode,
        batch_size: args.batch,
        lr: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        early_stop_epochs: args.early_stop,
    };
    config.validate()?;
    let dataset = Dataset::open(&args.data)?;
    let run = json!({
        "command": "train",
        "dataset_seed": dataset.manifest.seed,
        "manifest_sha256": file_digest(&args.data.join(radarcnn::dataset::MANIFEST_FILE))?,
        "train": config,
    });
    header(&run);
    let start = Instant::now();
    let outcome = train_with_progress(&dataset, &config, |e| {
        println!(
            "epoch {:>3}  loss {:.6}  train accuracy {:6.2}%  ({:.1}s)",
            e.epoch,
            e.loss,
            e.accuracy,
            start.elapsed().as_secs_f64()
        );
    })?;
    checkpoint::save(&outcome.model, &args.out)?;
    println!("saved {}", args.out.display());
    if let Some(dir) = &args.report {
        let mut report = Report::new(run);
        report.training.push(TrainingLog {
            input_mode: config.input_mode,
            epochs: outcome.log,
        });
        for p in write_report(&report, dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn load_model(path: &Path, mode: Option<InputMode>) -> CliResult<RadarCnnModel> {
    let model = checkpoint::load(path)?;
    if let Some(m) = mode {
        check_mode(&model, m)?;
    }
    Ok(model)
}

fn eval(
    model_path: &Path,
    data: &Path,
    occluded: bool,
    mode: Option<InputMode>,
    report_dir: Option<&Path>,
) -> CliResult {
    let model = load_model(model_path, mode)?;
    let dataset = Dataset::open(data)?;
    let selector = if occluded {
        Selector::OCCLUDED
    } else {
        Selector::TEST_CLEAN
    };
    let name = if occluded {
        "test-occluded"
    } else {
        "test-clean"
    };
    let run = json!({
        "command": "eval",
        "selection": name,
        "input_mode": model.input_mode,
        "dataset_seed": dataset.manifest.seed,
        "manifest_sha256": file_digest(&data.join(radarcnn::dataset::MANIFEST_FILE))?,
        "model_sha256": file_digest(model_path)?,
    });
    header(&run);
    let entries = dataset.manifest.select(selector.split, selector.variant);
    if entries.is_empty() {
        return Err(Error::Manifest(format!("no {name} frames in the manifest")).into());
    }
    let frames = dataset.read_all(&entries)?;
    let confusion = evaluate_frames(&model, &frames, None)?;
    println!(
        "{name} ({} input, {} frames)",
        model.input_mode,
        frames.len()
    );
    print!("{}", confusion.to_text());
    if let Some(dir) = report_dir {
        let mut report = Report::new(run);
        let (re, im) = mean_component_power(&frames);
        report.mean_power = Some([re, im]);
        report
            .evaluations
            .push(Evaluation::new(name, model.input_mode, confusion));
        for p in write_report(&report, dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn sweep(
    model_paths: &[PathBuf],
    data: &Path,
    sigma2: &[f64],
    csv: &Path,
    noise_seed: u64,
    report_dir: Option<&Path>,
) -> CliResult {
    validate_sigma2_list(sigma2)?;
    let models = model_paths
        .iter()
        .map(|p| load_model(p, None))
        .collect::<CliResult<Vec<_>>>()?;
    for (i, a) in models.iter().enumerate() {
        if models[..i].iter().any(|b| b.input_mode == a.input_mode) {
            return Err(Failure::Usage(format!(
                "two models for {} input",
                a.input_mode
            )));
        }
    }
    let dataset = Dataset::open(data)?;
    let digests = model_paths
        .iter()
        .map(|p| file_digest(p))
        .collect::<CliResult<Vec<_>>>()?;
    let run = json!({
        "command": "sweep-noise",
        "dataset_seed": dataset.manifest.seed,
        "manifest_sha256": file_digest(&data.join(radarcnn::dataset::MANIFEST_FILE))?,
        "models": models.iter().zip(&digests).map(|(m, d)| json!({"input_mode": m.input_mode, "sha256": d})).collect::<Vec<_>>(),
        "sigma2": sigma2,
        "noise_seed": noise_seed,
    });
    header(&run);
    let entries = dataset
        .manifest
        .select(Selector::TEST_CLEAN.split, Selector::TEST_CLEAN.variant);
    let frames = dataset.read_all(&entries)?;
    let (re, im) = mean_component_power(&frames);
    println!("clean test mean power per component: real {re:.4e}, imag {im:.4e}");
    let mut sweeps = Vec::with_capacity(models.len());
    for model in &models {
        let result = sweep_frames(model, &frames, sigma2, noise_seed)?;
        for p in &result.points {
            println!(
                "{:<8} sigma2 {:<10} accuracy {:6.2}%",
                model.input_mode, p.sigma2, p.accuracy
            );
        }
        sweeps.push(result);
    }
    write_sweep_csv(&sweeps, csv)?;
    println!("wrote {}", csv.display());
    if let Some(dir) = report_dir {
        let mut report = Report::new(run);
        report.mean_power = Some([re, im]);
        report.sweeps = sweeps;
        for p in write_report(&report, dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn grad_check(seed: u64) -> CliResult {
    header(&json!({"command": "gradcheck", "seed": seed}));
    let report = gradcheck::run_suite(seed)?;
    for r in &report.results {
        println!(
            "{:<24} max relative error {:.3e} over {:>4} entries (tolerance {:.0e}) {}",
            r.name,
            r.max_rel_error,
            r.checked,
            r.tolerance,
            if r.passed() { "ok" } else { "FAILED" }
        );
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Error::Numeric("gradient check".into()).into())
    }
}

fn inspect(path: &Path) -> CliResult {
    header(&json!({"command": "inspect", "frame": path}));
    let frame = read_frame(path)?;
    let (tx, rx, samples) = frame.shape();
    let class = radarcnn::CLASS_NAMES
        .get(frame.class_id as usize)
        .copied()
        .unwrap_or("unknown");
    let peak = frame.data().iter().map(|z| z.norm()).fold(0.0f32, f32::max);
    println!("frame_id:   {}", frame.frame_id);
    println!("class:      {} ({})", frame.class_id, class);
    println!("variant:    {:?}", frame.variant);
    println!("shape:      {tx} tx × {rx} rx × {samples} samples");
    println!("power (re): {:.6e}", frame.mean_power_real());
    println!("power (im): {:.6e}", frame.mean_power_imag());
    println!("peak |z|:   {peak:.6e}");
    Ok(())
}
