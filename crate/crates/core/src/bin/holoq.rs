use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holonomy_lab::scenario::{parse_scenario, run_scenario, Scenario, KINDS};
use holonomy_lab::Error;

#[derive(Parser)]
#[command(name = "holoq", version, about = "Run holonomy scenarios and write CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file.
    Run {
        file: PathBuf,
        /// CSV destination; overrides the scenario's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Parse and validate a scenario file, printing the normalized form.
    Validate { file: PathBuf },
    /// List the scenario kinds.
    ListScenarios,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io(_) => 4,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn load(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("HOLOQ_MAX_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Scenario(format!("HOLOQ_MAX_THREADS must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Scenario(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::ListScenarios => {
            for (name, about) in KINDS {
                println!("{name:<24} {about}");
            }
        }
        Command::Validate { file } => {
            let s = load(&file)?;
            println!("{}", s.normalized_dump());
        }
        Command::Run { file, out, seed, quiet } => {
            let mut s = load(&file)?;
            if let Some(seed) = seed {
                s.set_seed(seed);
            }
            let summary = run_scenario(&s)?;
            match out.or_else(|| s.output_path().map(PathBuf::from)) {
                Some(path) => std::fs::write(&path, &summary.csv)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
                None => print!("{}", summary.csv),
            }
            if !quiet {
                eprint!("{}", summary.report());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("holoq: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
