use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use periscope::scenario::{self, RunError, ScenarioConfig};

/// Synthesize and verify two-mirror periscopes.
#[derive(Parser)]
#[command(name = "periscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario and write report.csv and summary.json.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.path` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, env = "PERISCOPE_JOBS")]
        jobs: Option<usize>,
    },
    /// Run a bundled scenario: spherical-bump, reversed-affine, frobenius-contact, s3-pullback.
    Demo {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "PERISCOPE_JOBS")]
        jobs: Option<usize>,
    },
}

fn execute(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let config = ScenarioConfig::load(&config)?;
            let outcome = scenario::run(&config, out.as_deref(), jobs)?;
            let s = &outcome.summary;
            for (name, c) in &s.checks {
                println!(
                    "{name:<10} {}  max {:.3e}  tol {:.0e}  failed points {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.max,
                    c.tolerance,
                    c.failed
                );
            }
            for path in [&outcome.csv_path, &outcome.summary_path]
                .into_iter()
                .flatten()
            {
                println!("wrote {}", path.display());
            }
            Ok(outcome.exit_code())
        }
        Command::Demo { name, out, jobs } => {
            scenario::demo(&name, out.as_deref(), jobs, &mut io::stdout())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("periscope: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
