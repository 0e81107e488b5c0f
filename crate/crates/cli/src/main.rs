use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bai_cli::check::{self, CheckOptions, Suite};
use bai_cli::config::{parse_checkpoints, Overrides};
use bai_cli::rates::{self, Measure};
use bai_cli::{complexity, simulate, CliError, CliResult};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bai", version, about = "Fixed-budget and anytime best arm identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate PoE curves and write one CSV per (instance, algorithm) plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "BAI_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        replications: Option<u64>,
        /// Comma-separated rounds, or `default`.
        #[arg(long)]
        checkpoints: Option<String>,
    },
    /// Rate table (lower / plug-in / upper) with a minimax row from PoE CSVs.
    Rates {
        #[arg(long = "csv", required = true)]
        csvs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "h1")]
        measure: Measure,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run theory-check suites; exit 4 on any failure.
    Check {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Report file; the report is always printed too.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replications per budget in the SR exponent fit.
        #[arg(long, default_value_t = 100_000)]
        replications: u64,
        #[arg(long, env = "BAI_WORKERS")]
        workers: Option<usize>,
        /// Debug: perturb D so the sandwich checks must fail.
        #[arg(long, hide = true)]
        inject_violation: bool,
    },
    /// Print H1, H2, H3 of registered instances.
    Complexity {
        #[arg(long = "instance")]
        instances: Vec<String>,
    },
}

fn write_out(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { config, out, seed, workers, replications, checkpoints } => {
            let checkpoints = checkpoints.map(|s| parse_checkpoints(&s)).transpose().map_err(CliError::Usage)?;
            let overrides = Overrides { seed, replications, checkpoints };
            for path in simulate::run(&config, &out, &overrides, workers)? {
                println!("{}", path.display());
            }
        }
        Command::Rates { csvs, measure, out } => {
            let table = rates::run(&csvs, measure)?;
            match out {
                Some(p) => write_out(&p, &table)?,
                None => print!("{table}"),
            }
        }
        Command::Check { suite, out, trials, seed, replications, workers, inject_violation } => {
            let opts = CheckOptions { trials, seed, sr_replications: replications, workers, inject_violation };
            let reports = check::run(suite, &opts)?;
            let text = check::render(&reports);
            print!("{text}");
            if let Some(p) = out {
                write_out(&p, &text)?;
            }
            if check::any_failed(&reports) {
                return Err(CliError::CheckFailed("one or more checks failed".into()));
            }
        }
        Command::Complexity { instances } => print!("{}", complexity::run(&instances)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
