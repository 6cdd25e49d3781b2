use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leosm::config::{parse_config, RunSpec};
use leosm::report::{
    complexity_table, emit_csv, parse_q_sets, render_manifest, run_validation, se_table, write_table, DEFAULT_Q_SETS,
};
use leosm::{Error, Result};

#[derive(Parser)]
#[command(name = "leosm", version, about = "SM / SSK link-level simulator for LEO satellite MIMO downlinks")]
struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single BER sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "LEOSM_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Run a comparison suite and write one joined CSV.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "LEOSM_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Closed-form detector complexity per {Nt, M} set.
    ComplexityTable {
        #[arg(long, default_value_t = 2)]
        nr: usize,
        /// Comma-separated NTxM sets, e.g. 8x8,16x16.
        #[arg(long)]
        sets: Option<String>,
    },
    /// Spectral efficiency per {Nt, M} set.
    SeTable {
        #[arg(long)]
        sets: Option<String>,
    },
    /// AWGN and ML-detector oracle checks.
    Validate {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn write_outputs(spec: &RunSpec, name: &str, results: &[leosm::montecarlo::SweepResult], out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let csv_path = out.join(format!("{name}.csv"));
    emit_csv(results, &csv_path)?;
    let manifest_path = out.join(format!("{name}.manifest"));
    std::fs::write(&manifest_path, render_manifest(spec, results)?)?;
    println!("wrote {} and {}", csv_path.display(), manifest_path.display());
    Ok(())
}

fn sets_or_default(sets: Option<String>) -> Result<Vec<(usize, usize)>> {
    match sets {
        Some(s) => parse_q_sets(&s),
        None => Ok(DEFAULT_Q_SETS.to_vec()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Sweep { config, out } => {
            let spec = parse_config(&std::fs::read_to_string(&config)?)?;
            let RunSpec::Sweep(sweep) = &spec else {
                return Err(Error::Config("this document is a comparison suite; use `compare`".into()));
            };
            let result = leosm::montecarlo::run_sweep(&sweep.config)?;
            write_outputs(&spec, &sweep.name, std::slice::from_ref(&result), &out)?;
        }
        Command::Compare { config, out } => {
            let spec = parse_config(&std::fs::read_to_string(&config)?)?;
            let RunSpec::Suite(suite) = &spec else {
                return Err(Error::Config("this document is a single sweep; use `sweep`".into()));
            };
            let results = suite.run()?;
            write_outputs(&spec, &suite.name, &results, &out)?;
        }
        Command::ComplexityTable { nr, sets } => {
            if nr == 0 {
                return Err(Error::Config("nr must be at least 1".into()));
            }
            write_table(&complexity_table(nr, &sets_or_default(sets)?), io::stdout().lock())?;
        }
        Command::SeTable { sets } => {
            write_table(&se_table(&sets_or_default(sets)?), io::stdout().lock())?;
        }
        Command::Validate { trials, seed } => {
            let outcomes = run_validation(trials, seed)?;
            let mut stdout = io::stdout().lock();
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag} {}: {}", o.name, o.detail)?;
            }
            return Ok(outcomes.iter().all(|o| o.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
