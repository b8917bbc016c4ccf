use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use normsim::io::bundle::{plot_run_csvs, replay_run_csv, write_batch_bundle, write_run_bundle};
use normsim::io::config::{load_spec, ConfigOverrides};
use normsim::{run_batch, run_simulation, Condition, Error, MutationOperator, Termination};

/// Seeded simulator of norm emergence under deterministic and noisy behaviour.
#[derive(Debug, Parser)]
#[command(name = "normsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one simulation and write run.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Execute replicate batches for every configured condition.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replicates: Option<u64>,
        /// Final population a run must exceed to count as successful.
        #[arg(long)]
        success_threshold: Option<u64>,
        /// Worker threads; output does not depend on this.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Render SVG figures from run CSV files or directories of them.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Re-run a run CSV from its embedded config and compare byte for byte.
    Replay {
        file: PathBuf,
        /// Also write the regenerated file here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// deterministic | probabilistic
    #[arg(long)]
    condition: Option<Condition>,
    /// gaussian | legacy_set_to_one
    #[arg(long)]
    operator: Option<MutationOperator>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long, default_value = "normsim-out")]
    out: PathBuf,
    /// Also write SVG figures under <out>/plots.
    #[arg(long)]
    plots: bool,
}

impl Common {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            seed: self.seed,
            condition: self.condition,
            operator: self.operator,
            rounds: self.rounds,
            ..Default::default()
        }
    }
}

fn termination(t: Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::Extinction { round } => format!("extinct at round {round}"),
    }
}

fn run(common: &Common) -> Result<(), Error> {
    let spec = load_spec(common.config.as_deref(), &common.overrides())?;
    if spec.arms.len() > 1 {
        eprintln!("note: config lists several conditions; `run` uses the first");
    }
    let config = spec.replicate_config(spec.arms[0], 0);
    let result = run_simulation(&config)?;
    let csv = write_run_bundle(&result, &common.out, common.plots)?;
    println!(
        "{} seed {}: {} rounds, {}, final population {}",
        spec.arms[0],
        config.seed,
        result.rounds_executed(),
        termination(result.termination),
        result.final_population()
    );
    println!("wrote {}", csv.display());
    Ok(())
}

fn batch(
    common: &Common,
    replicates: Option<u64>,
    success_threshold: Option<u64>,
    parallelism: Option<usize>,
) -> Result<(), Error> {
    let overrides = ConfigOverrides {
        replicates,
        success_threshold,
        parallelism,
        ..common.overrides()
    };
    let spec = load_spec(common.config.as_deref(), &overrides)?;
    let batches = run_batch(&spec)?;
    let summary = write_batch_bundle(&spec, &batches, &common.out, common.plots)?;
    for arm in &summary.arms {
        println!(
            "{}: {} runs, {} successful (> {}), {} extinct",
            arm.arm,
            arm.runs,
            arm.successful_runs,
            spec.success_population_threshold,
            arm.extinctions
        );
    }
    for check in &summary.checks {
        println!("{}", check.line());
    }
    println!("wrote {}", common.out.display());
    Ok(())
}

fn replay(file: &Path, out: Option<&Path>) -> Result<(), Error> {
    let replay = replay_run_csv(file)?;
    if let Some(out) = out {
        std::fs::write(out, &replay.regenerated).map_err(|e| Error::Io {
            path: out.to_path_buf(),
            source: e,
        })?;
    }
    if !replay.identical() {
        return Err(Error::Format {
            path: file.to_path_buf(),
            message: "replay differs from the recorded file".into(),
        });
    }
    println!("{}: replay identical", file.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { common } => run(common),
        Command::Batch {
            common,
            replicates,
            success_threshold,
            parallelism,
        } => batch(common, *replicates, *success_threshold, *parallelism),
        Command::Plot { inputs, out } => plot_run_csvs(inputs, out).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }),
        Command::Replay { file, out } => replay(file, out.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
