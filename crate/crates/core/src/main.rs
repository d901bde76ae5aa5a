use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ehsim::experiments::{run_experiment, write_csv, ExperimentError, ExperimentId, SweepSpec};

#[derive(Parser)]
#[command(
    name = "ehsim",
    version,
    about = "Energy-harvesting network experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write its rows as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; all cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the known experiment ids.
    ListExperiments,
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    trials: Option<usize>,
    jobs: Option<usize>,
) -> Result<(), ExperimentError> {
    let mut spec = SweepSpec::from_path(&config)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    let rows = pool.install(|| run_experiment(&spec))?;
    let file = File::create(&out).map_err(|source| ExperimentError::Io {
        path: out.clone(),
        source,
    })?;
    write_csv(&rows, BufWriter::new(file))?;
    eprintln!(
        "{}: wrote {} rows to {}",
        spec.experiment,
        rows.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            trials,
            jobs,
        } => run(config, out, seed, trials, jobs),
        Command::ListExperiments => {
            for id in ExperimentId::ALL {
                println!("{id}\t{}", id.description());
            }
            Ok(())
        }
        Command::Validate { config } => SweepSpec::from_path(&config).map(|spec| {
            println!(
                "{}: {} grid points, {} trials each",
                spec.experiment,
                spec.grid().len(),
                spec.trials
            );
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
