use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavelab_cli::verify::format_table;
use wavelab_cli::{run_scenario, run_suite, run_sweep, CliError, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "wavelab", version, about = "Damped wave simulations, verification suites and decay sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Run { config: PathBuf },
    /// Run a verification suite: convex, gronwall, weights, multipliers or all.
    Verify { suite: String },
    /// Fit decay rates over the [sweep] grid of a scenario.
    Sweep {
        config: PathBuf,
        /// Allow more than 64 cells.
        #[arg(long)]
        allow_large: bool,
    },
}

fn execute(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Run { config } => {
            let summary = run_scenario(&RunConfig::load(&config)?)?;
            print!("{}", summary.to_text());
            println!("artifacts in {}", summary.output_dir.display());
            Ok(true)
        }
        Command::Verify { suite } => {
            let rows = run_suite(suite.parse::<Suite>()?)?;
            print!("{}", format_table(&rows));
            let failed = rows.iter().filter(|r| !r.passed).count();
            println!("{} checks, {failed} failed", rows.len());
            Ok(failed == 0)
        }
        Command::Sweep { config, allow_large } => {
            let cfg = RunConfig::load(&config)?;
            let rows = run_sweep(&cfg, allow_large)?;
            print!("{}", wavelab_cli::sweep::rows_to_csv(&rows));
            println!("{} cells written to {}", rows.len(), cfg.output_dir().join("sweep.csv").display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
