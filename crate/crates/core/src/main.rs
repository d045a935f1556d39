use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shedline::cli::{self, CliError, CommandOutput, OutputFormat, Overrides};

/// Deadline-aware load shedding harness.
#[derive(Debug, Parser)]
#[command(name = "shedline", version)]
struct Args {
    /// Use OS time and real waits instead of the virtual clock.
    #[arg(long, global = true)]
    wall_clock: bool,
    /// Write output here instead of the config's output path or stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare engines over the configured synthetic workload.
    Run { config: PathBuf },
    /// Measure evaluation cost and print a recommended u_capacity.
    Calibrate {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Fraction of deadline_normal to budget, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        safety: f64,
    },
    /// Score one list of URLs (one per line) through the shedder.
    Score { config: PathBuf, urls_file: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        output: args.output,
        format: args.format,
        wall_clock: args.wall_clock,
        seed: std::env::var(cli::SEED_ENV).ok(),
    };
    let result = match &args.command {
        Command::Run { config } => cli::cmd_run(config, &overrides),
        Command::Calibrate {
            config,
            samples,
            safety,
        } => cli::cmd_calibrate(config, *samples, *safety, &overrides),
        Command::Score { config, urls_file } => cli::cmd_score(config, urls_file, &overrides),
    };
    match result {
        Ok(out) => finish(out),
        Err(e) => fail(e),
    }
}

fn finish(out: CommandOutput) -> ExitCode {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for n in &out.notes {
        eprintln!("{n}");
    }
    print!("{}", out.stdout);
    if let Some(path) = out.written_to {
        eprintln!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("shedline: {e}");
    ExitCode::from(e.exit_code() as u8)
}
