//! Command-line front door for the beam-profiling toolkit: inspect profiles
//! and codebooks, generate datasets, train and evaluate predictors, and emit
//! SVG figures.
//!
//! Exit codes: 0 success, 2 usage or unknown name, 3 I/O, 4 parse/schema/
//! version, 5 numeric failure.

mod plot;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use beamscope_core::learner::linreg::linreg_fit;
use beamscope_core::learner::mlp::mlp_new;
use beamscope_core::learner::model_io::{read_model, write_model, TrainedModel};
use beamscope_core::learner::tree::{forest_fit, gbrt_fit, tree_fit};
use beamscope_core::learner::{
    features_and_targets, mse, r2, split_dataset, train, LearnerError, OptimizerKind, TrainConfig,
};
use beamscope_core::profiler::{
    build_virtual_map, load_profile, read_dataset, run_sweep, write_dataset, ProfilerError,
    TestbedProfile,
};

#[derive(Parser)]
#[command(
    name = "beamscope",
    version,
    about = "mmWave beam profiling simulator and learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Linreg,
    Tree,
    Forest,
    Gbrt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKindArg {
    /// Metric heatmap over (spot index, beam direction)
    HeatmapAlphaD,
    /// Per-beta profile curves for representative beams
    ProfileBeta,
}

#[derive(Subcommand)]
enum Command {
    /// Print a profile's beam codebook as a text table
    Codebook {
        #[arg(long)]
        profile: String,
    },
    /// Print the virtual measurement map built around a beam direction
    Map {
        #[arg(long)]
        profile: String,
        /// Beam boresight azimuth the map is built around
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Run the sweep and write a dataset file
    Generate {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Disable small-scale fading (deterministic sweep)
        #[arg(long)]
        no_fading: bool,
    },
    /// Train the network predictor (or a classical baseline) on a dataset
    Train {
        dataset: PathBuf,
        /// Where to write the serialized model
        #[arg(long)]
        out: Option<PathBuf>,
        /// Hidden layer widths, e.g. 32,16,8,4,2
        #[arg(long, value_delimiter = ',', default_value = "32,16,8")]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 10)]
        batch: usize,
        /// Training fraction of the seeded shuffle split
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, value_enum, default_value_t = OptimizerArg::Adam)]
        optimizer: OptimizerArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train a classical baseline instead of the network
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
    },
    /// Evaluate a saved model on a dataset
    Eval { model: PathBuf, dataset: PathBuf },
    /// Predict the metric at one (alpha, beta, distance) point
    Predict {
        model: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        dist: f64,
    },
    /// Render a dataset as a standalone SVG figure
    ProfilePlot {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKindArg,
        #[arg(long)]
        out: PathBuf,
    },
}

// ── error-to-exit-code mapping ──────────────────────────────────────────────

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
    fn io(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
    fn parse(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }
    fn numeric(message: impl Into<String>) -> Self {
        CliError { code: 5, message: message.into() }
    }
}

impl From<ProfilerError> for CliError {
    fn from(e: ProfilerError) -> Self {
        match &e {
            ProfilerError::UnknownProfile(_) => CliError::usage(e.to_string()),
            ProfilerError::Io(_) => CliError::io(e.to_string()),
            _ => CliError::parse(e.to_string()),
        }
    }
}

impl From<LearnerError> for CliError {
    fn from(e: LearnerError) -> Self {
        match &e {
            LearnerError::Io(_) => CliError::io(e.to_string()),
            LearnerError::ModelFormat { .. }
            | LearnerError::VersionMismatch(_)
            | LearnerError::EmptyDataset => CliError::parse(e.to_string()),
            LearnerError::InvalidArchitecture(_) | LearnerError::InvalidHyperparameter(_) => {
                CliError::usage(e.to_string())
            }
            _ => CliError::numeric(e.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}

fn profile_dir() -> Option<PathBuf> {
    std::env::var_os("BEAMSCOPE_PROFILE_DIR").map(PathBuf::from)
}

fn resolve_profile(name: &str) -> Result<TestbedProfile, CliError> {
    Ok(load_profile(name, profile_dir().as_deref())?)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Codebook { profile } => {
            let p = resolve_profile(&profile)?;
            print!("{}", p.codebook.table_string());
            Ok(())
        }
        Command::Map { profile, alpha } => {
            let p = resolve_profile(&profile)?;
            let grid = build_virtual_map(&p, alpha)?;
            println!("beta_deg,distance_ft,rx_orientation_deg");
            for s in &grid.spots {
                println!("{},{},{}", s.beta_deg, s.distance_ft, s.rx_orientation_deg);
            }
            println!("# {} spots around alpha={alpha}", grid.spots.len());
            Ok(())
        }
        Command::Generate {
            profile,
            seed,
            out,
            no_fading,
        } => {
            let mut p = resolve_profile(&profile)?;
            if no_fading {
                p.channel.fading_enabled = false;
            }
            let dataset = run_sweep(&p, seed)?;
            write_dataset(&dataset, &out)?;
            println!(
                "{} records written to {} (profile={} seed={seed})",
                dataset.records.len(),
                out.display(),
                p.name
            );
            Ok(())
        }
        Command::Train {
            dataset,
            out,
            widths,
            epochs,
            batch,
            split,
            lr,
            optimizer,
            seed,
            baseline,
        } => cmd_train(
            &dataset, out.as_deref(), &widths, epochs, batch, split, lr, optimizer, seed, baseline,
        ),
        Command::Eval { model, dataset } => {
            let model = read_model(&model)?;
            let ds = read_dataset(&dataset)?;
            let (features, targets) = features_and_targets(&ds);
            let predictions: Vec<f64> = features.iter().map(|x| model.predict(x)).collect();
            let mse_v = mse(&predictions, &targets)?;
            let r2_v = r2(&predictions, &targets)?;
            println!(
                "eval: {} records, kind={}, mse={mse_v:.6} r2={r2_v:.4}",
                targets.len(),
                model.kind()
            );
            Ok(())
        }
        Command::Predict {
            model,
            alpha,
            beta,
            dist,
        } => {
            let model = read_model(&model)?;
            println!("{}", model.predict(&[alpha, beta, dist]));
            Ok(())
        }
        Command::ProfilePlot { dataset, kind, out } => {
            let ds = read_dataset(&dataset)?;
            let kind = match kind {
                PlotKindArg::HeatmapAlphaD => plot::PlotKind::HeatmapAlphaD,
                PlotKindArg::ProfileBeta => plot::PlotKind::ProfileBeta,
            };
            let svg = plot::render(&ds, kind).map_err(|e| CliError::parse(e.to_string()))?;
            std::fs::write(&out, svg).map_err(|e| CliError::io(e.to_string()))?;
            println!("plot written to {}", out.display());
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    dataset_path: &Path,
    model_out: Option<&Path>,
    widths: &[usize],
    epochs: usize,
    batch: usize,
    split_fraction: f64,
    lr: f64,
    optimizer: OptimizerArg,
    seed: u64,
    baseline: Option<BaselineArg>,
) -> Result<(), CliError> {
    let ds = read_dataset(dataset_path)?;
    let widths_str = widths
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    let optimizer_kind = match optimizer {
        OptimizerArg::Adam => OptimizerKind::Adam,
        OptimizerArg::Sgd => OptimizerKind::Sgd,
    };
    println!(
        "config: epochs={epochs} batch={batch} split={split_fraction} lr={lr} optimizer={} seed={seed} widths={widths_str}",
        optimizer_kind.as_str()
    );
    let split = split_dataset(&ds, split_fraction, seed)?;
    println!(
        "split: {} train / {} test records",
        split.train.records.len(),
        split.test.records.len()
    );

    let (model, test_mse, test_r2) = match baseline {
        None => {
            let config = TrainConfig {
                epochs,
                batch_size: batch,
                train_fraction: split_fraction,
                learning_rate: lr,
                optimizer: optimizer_kind,
                seed,
                hidden_widths: widths.to_vec(),
            };
            let mut mlp = mlp_new(&config.hidden_widths, config.seed)?;
            let (report, scaler) = train(&mut mlp, &split.train, &split.test, &config)?;
            println!(
                "final train loss (scaled units): {:.6}",
                report.loss_curve.last().unwrap()
            );
            println!("test mse (scaled units): {:.6}", report.final_test_mse_normalized);
            let model = TrainedModel::Mlp { mlp, scaler };
            (model, report.final_test_mse, report.final_test_r2)
        }
        Some(kind) => {
            let (train_x, train_y) = features_and_targets(&split.train);
            let (test_x, test_y) = features_and_targets(&split.test);
            let model = match kind {
                BaselineArg::Linreg => TrainedModel::Linreg(linreg_fit(&train_x, &train_y)?),
                BaselineArg::Tree => TrainedModel::Tree(tree_fit(&train_x, &train_y, 8, 2)?),
                BaselineArg::Forest => {
                    TrainedModel::Forest(forest_fit(&train_x, &train_y, 100, 8, 2, true, seed)?)
                }
                BaselineArg::Gbrt => {
                    TrainedModel::Gbrt(gbrt_fit(&train_x, &train_y, 200, 0.05, 3, seed)?)
                }
            };
            let predictions: Vec<f64> = test_x.iter().map(|x| model.predict(x)).collect();
            (model.clone(), mse(&predictions, &test_y)?, r2(&predictions, &test_y)?)
        }
    };

    println!("test mse={test_mse:.6} r2={test_r2:.4} (kind={})", model.kind());
    if let Some(path) = model_out {
        write_model(&model, path)?;
        println!("model written to {}", path.display());
    }
    Ok(())
}
