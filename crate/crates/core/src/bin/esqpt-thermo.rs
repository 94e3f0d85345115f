use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use esqpt_thermo::scenario::{run_scenario, RunOptions, Scenario, ToleranceProfile};

#[derive(Parser)]
#[command(
    version,
    about = "Classical thermodynamics of separable Hamiltonians from TOML scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write CSV tables plus a manifest.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Profile::Strict)]
        tolerance_profile: Profile,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Fast,
    Strict,
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        out,
        threads,
        tolerance_profile,
    } = Cli::parse().command;
    let scenario = match Scenario::from_path(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    let options = RunOptions {
        out_dir: out,
        threads,
        profile: match tolerance_profile {
            Profile::Fast => ToleranceProfile::Fast,
            Profile::Strict => ToleranceProfile::Strict,
        },
    };
    match run_scenario(&scenario, &options) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for (output, msg) in &report.failures {
                eprintln!("{output}: {msg}");
            }
            println!("{}", report.directory.display());
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
