//! Command-line surface: `generate`, `train-detector`, `detect`, `remove`,
//! `evaluate` and `report`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use crate::audio::CLIP_LEN;
use crate::dataset::{
    generate_dataset, load_training_examples, manifest_dir, read_manifest, with_jobs,
    GenerationConfig, SplitCounts,
};
use crate::detector::{
    classwise_accuracy, effect_probabilities, select_effects, train, DetectorModel, TrainConfig,
    DEFAULT_THRESHOLD, HIDDEN_DIM,
};
use crate::effects::EffectKind;
use crate::error::Error;
use crate::evaluation::{evaluate, render_report, EvalReport, ReportFormat};
use crate::orchestrator::{
    compose_and_run, load_registry, BackendRegistry, ModeKind, OrchestratorMode, Ordering,
};
use crate::wav::{load_wav, save_wav};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "remfx", version, about = "Compositional audio effect removal")]
pub struct Cli {
    /// Seed for data generation, training and removal ordering.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Backend registry JSON; every backend is identity when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train/val/test splits with JSONL manifests.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8000)]
        train: usize,
        #[arg(long, default_value_t = 1000)]
        val: usize,
        #[arg(long, default_value_t = 1000)]
        test: usize,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(0..=5))]
        n_effects_max: u8,
        /// Target effect for FXAug examples.
        #[arg(long)]
        fxaug: Option<EffectKind>,
        #[arg(long, default_value_t = CLIP_LEN)]
        clip_len: usize,
    },
    /// Train the effect detector on a manifest.
    TrainDetector {
        #[arg(long)]
        manifest: PathBuf,
        /// Held-out manifest for class-wise accuracy.
        #[arg(long)]
        val_manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 3e-4)]
        lr: f64,
        #[arg(long, default_value_t = HIDDEN_DIM)]
        hidden: usize,
        #[arg(long)]
        spec_augment: bool,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Print per-effect probabilities for a clip.
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Remove effects from one clip.
    Remove {
        #[arg(long)]
        mode: ModeArg,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "random")]
        ordering: OrderingArg,
        /// Manifest holding the applied chain, for oracle mode.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Record id within `--manifest`.
        #[arg(long)]
        id: Option<u64>,
    },
    /// Evaluate a removal mode on a manifest, bucketed by effect count.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        mode: ModeArg,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "random")]
        ordering: OrderingArg,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved evaluation report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    All,
    Oracle,
    Detect,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderingArg {
    GroundTruth,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ModeMisconfigured(m) => Failure::Usage(m),
            e => Failure::Runtime(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `argv` (including the program name), runs it and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            if code == EXIT_USAGE {
                print_subcommand_help(&argv);
            }
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let jobs = cli.jobs;
    match with_jobs(jobs, || dispatch(&cli)) {
        Err(e) => fail(Failure::Usage(e.to_string())),
        Ok(Err(f)) => fail(f),
        Ok(Ok(())) => EXIT_OK,
    }
}

fn fail(f: Failure) -> i32 {
    match f {
        Failure::Usage(m) => {
            eprintln!("usage error: {m}");
            EXIT_USAGE
        }
        Failure::Runtime(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn print_subcommand_help(argv: &[OsString]) {
    let mut cmd = Cli::command();
    let name = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some());
    if let Some(sub) = name.and_then(|n| cmd.find_subcommand_mut(n)) {
        eprintln!("{}", sub.render_help());
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate {
            out,
            train,
            val,
            test,
            n_effects_max,
            fxaug,
            clip_len,
        } => {
            let cfg = GenerationConfig {
                counts: SplitCounts {
                    train: *train,
                    val: *val,
                    test: *test,
                },
                n_effects_max: *n_effects_max as usize,
                seed: cli.seed,
                fxaug: *fxaug,
                clip_len: *clip_len,
            };
            if train + val + test == 0 {
                return Err(Failure::Usage("at least one split needs examples".into()));
            }
            for path in generate_dataset(out, &cfg)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::TrainDetector {
            manifest,
            val_manifest,
            out,
            epochs,
            batch_size,
            lr,
            hidden,
            spec_augment,
            threshold,
        } => {
            let cfg = TrainConfig {
                lr: *lr,
                epochs: *epochs,
                batch_size: *batch_size,
                seed: cli.seed,
                spec_augment: *spec_augment,
                hidden_dim: *hidden,
                ..TrainConfig::default()
            };
            let data = load_training_examples(manifest, *spec_augment)?;
            let outcome = train(&data, &cfg)?;
            outcome.model.save(out)?;
            if let Some(last) = outcome.losses.last() {
                println!("steps: {}  final loss: {last:.4}", outcome.losses.len());
            }
            if let Some(val) = val_manifest {
                let held_out = load_training_examples(val, false)?;
                println!("{}", classwise_accuracy(&outcome.model, &held_out, *threshold)?);
            }
            Ok(())
        }
        Command::Detect {
            model,
            input,
            threshold,
        } => {
            let model = DetectorModel::load(model)?;
            let probs = effect_probabilities(&model, &load_wav(input)?)?;
            let selected = select_effects(&probs, *threshold);
            for kind in EffectKind::ALL {
                let mark = if selected.contains(&kind) { "yes" } else { "no" };
                println!("{kind} {:.4} {mark}", probs[kind.code()]);
            }
            Ok(())
        }
        Command::Remove {
            mode,
            input,
            out,
            model,
            threshold,
            ordering,
            manifest,
            id,
        } => {
            let mode = build_mode(*mode, *ordering, *threshold, cli.seed)?;
            let registry = registry(cli.config.as_deref(), mode.kind())?;
            let detector = load_detector(model.as_deref(), mode.kind())?;
            let (input, truth) = match (manifest, id) {
                (Some(m), Some(id)) => {
                    let record = read_manifest(m)?
                        .into_iter()
                        .find(|r| r.id == *id)
                        .ok_or_else(|| Failure::Usage(format!("no record {id} in {}", m.display())))?;
                    let path = input
                        .clone()
                        .unwrap_or_else(|| manifest_dir(m).join(&record.input_path));
                    (path, Some(record.stages()?))
                }
                (None, None) => (
                    input.clone().ok_or_else(|| Failure::Usage("--in is required".into()))?,
                    None,
                ),
                _ => return Err(Failure::Usage("--manifest and --id go together".into())),
            };
            let clip = load_wav(&input)?;
            let composed = compose_and_run(&clip, &mode, &registry, detector.as_ref(), truth.as_deref())?;
            save_wav(&composed.output, out)?;
            let names: Vec<&str> = composed.applied.iter().map(|k| k.name()).collect();
            println!("applied: [{}]", names.join(", "));
            Ok(())
        }
        Command::Evaluate {
            manifest,
            mode,
            model,
            threshold,
            ordering,
            out,
        } => {
            let mode = build_mode(*mode, *ordering, *threshold, cli.seed)?;
            let registry = registry(cli.config.as_deref(), mode.kind())?;
            let detector = load_detector(model.as_deref(), mode.kind())?;
            let report = evaluate(manifest, &mode, &registry, detector.as_ref())?;
            if let Some(path) = out {
                fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))?;
            }
            print!("{}", render_report(&report, ReportFormat::Text)?);
            Ok(())
        }
        Command::Report { input, format } => {
            let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
            let report = EvalReport::from_json(&text)?;
            let format = match format {
                FormatArg::Text => ReportFormat::Text,
                FormatArg::Json => ReportFormat::Json,
            };
            let rendered = render_report(&report, format)?;
            print!("{rendered}");
            if !rendered.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn build_mode(mode: ModeArg, ordering: OrderingArg, threshold: f64, seed: u64) -> CliResult<OrchestratorMode> {
    let kind = match mode {
        ModeArg::All => ModeKind::All,
        ModeArg::Oracle => ModeKind::Oracle,
        ModeArg::Detect => ModeKind::Detect,
    };
    let ordering = match ordering {
        OrderingArg::GroundTruth => Ordering::GroundTruth,
        OrderingArg::Random => Ordering::Random(seed),
    };
    Ok(OrchestratorMode::new(kind, ordering, threshold)?)
}

fn registry(config: Option<&Path>, mode: ModeKind) -> CliResult<BackendRegistry> {
    match config {
        Some(path) => Ok(load_registry(path)?),
        None => {
            log::warn!("no --config given; every backend in {mode} mode is identity");
            Ok(BackendRegistry::all_identity())
        }
    }
}

fn load_detector(model: Option<&Path>, mode: ModeKind) -> CliResult<Option<DetectorModel>> {
    match (model, mode) {
        (Some(path), _) => Ok(Some(DetectorModel::load(path)?)),
        (None, ModeKind::Detect) => Err(Failure::Usage("--mode detect needs --model".into())),
        (None, _) => Ok(None),
    }
}
