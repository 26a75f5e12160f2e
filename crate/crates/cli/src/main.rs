mod cascade_cmds;
mod config;
mod data_cmds;
mod error;
mod train_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;

/// SDF voxel datasets, staged training and early-exit cascade evaluation.
#[derive(Parser, Debug)]
#[command(name = "voxcade", version, args_override_self = true)]
struct Cli {
    /// Strip wall-clock measurements from written reports so reruns give
    /// identical files.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Flat `key = value` file with defaults for the command's options.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Voxelize a `class/{train,test}/*.off` mesh tree into a dataset.
    Voxelize(data_cmds::VoxelizeArgs),
    /// Build an MNIST-derived dataset.
    #[command(subcommand)]
    Dataset(data_cmds::DatasetCommand),
    /// Train one cascade stage or an MNIST reference network.
    Train(train_cmd::TrainArgs),
    /// Calibrate per-class exit thresholds and optionally sweep a grid.
    Calibrate(cascade_cmds::CalibrateArgs),
    /// Evaluate the cascade and write a JSON report.
    Eval(cascade_cmds::EvalArgs),
    /// Parameter, FLOP and forward-time figures per stage.
    Bench(cascade_cmds::BenchArgs),
    /// Evaluate the cascade with one early-exit stage removed.
    Ablate(cascade_cmds::AblateArgs),
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("VOXCADE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::input(format!("VOXCADE_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let args = config::expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            // help and version land here too; clap reports usage errors as 2
            std::process::exit(code);
        }
    };
    init_threads()?;
    let repro = cli.reproducible;
    match cli.command {
        Command::Voxelize(a) => data_cmds::voxelize(&a),
        Command::Dataset(c) => data_cmds::dataset(&c),
        Command::Train(a) => train_cmd::train(&a),
        Command::Calibrate(a) => cascade_cmds::calibrate(&a),
        Command::Eval(a) => cascade_cmds::eval(&a, repro),
        Command::Bench(a) => cascade_cmds::bench(&a, repro),
        Command::Ablate(a) => cascade_cmds::ablate(&a, repro),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match std::panic::catch_unwind(run) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("voxcade: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(1),
    }
}
