use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexcube::cli::{relative, run, ArtifactFormat, Command, RunOptions};
use flexcube::load_scenario;

/// Flexibility analysis for power nodes: simulation, flex cubes, reach sets
/// and pool adequacy.
#[derive(Parser)]
#[command(name = "flexcube", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate every unit over the scenario grid.
    Simulate(Common),
    /// Per-step flexibility cubes of every unit.
    Flex(Common),
    /// Reachable flexibility sets from the first operating point.
    Reach(Common),
    /// Sum member flexibility over each pool.
    Aggregate(Common),
    /// Compare pool flexibility with the disturbance envelope.
    Adequacy(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    k_max: Option<usize>,
    /// Energy horizon in hours.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    pool: Option<String>,
    /// Only write artifacts of this kind (csv, off or json).
    #[arg(long)]
    format: Option<ArtifactFormat>,
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for adequacy deficits, so usage errors exit with 1.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (cmd, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Flex(a) => (Command::Flex, a),
        Cmd::Reach(a) => (Command::Reach, a),
        Cmd::Aggregate(a) => (Command::Aggregate, a),
        Cmd::Adequacy(a) => (Command::Adequacy, a),
    };
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        out: args.out,
        k_max: args.k_max,
        horizon: args.horizon,
        pool: args.pool,
        format: args.format,
    };
    match run(cmd, &scenario, &opts) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", relative(&opts.out, f));
            }
            if outcome.deficit {
                eprintln!("adequacy deficit found");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
