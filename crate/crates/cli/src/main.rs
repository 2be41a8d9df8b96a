use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

mod checks;
mod config;
mod error;
mod experiments;

use checks::Status;
use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "latspec", version, about = "Run lattice Schrödinger experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the master seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: the config's `output`, else `results`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write `<name>.json` and `<name>.csv`.
    Run { config: PathBuf },
    /// Validate the config and run the hypothesis checks without solving.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::Validate { config } => validate(&cli, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latspec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("`--threads`: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("`--threads`: {e}")))?;
    }
    Ok(config)
}

fn validate(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let config = load(cli, path)?;
    println!(
        "{}: {} experiment in d={} is valid (config hash {})",
        path.display(),
        config.experiment.name(),
        config.dimension,
        &config.hash()[..16]
    );
    for check in checks::hypothesis_checks(&config)? {
        println!("  [{}] {}: {}", check.status, check.name, check.detail);
        if check.status == Status::Warning {
            eprintln!("warning: {}: {}", check.name, check.detail);
        }
    }
    Ok(())
}

fn run(cli: &Cli, path: &Path) -> Result<(), CliError> {
    let config = load(cli, path)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(config.experiment.name())
        .to_string();

    let start = Instant::now();
    let outcome = experiments::run(&config)?;
    let wall_clock = start.elapsed().as_secs_f64();

    let hash = config.hash();
    let csv_name = format!("{stem}.csv");
    let record = json!({
        "experiment": config.experiment.name(),
        "library_version": latspec_core::VERSION,
        "config_hash": hash,
        "config": config,
        "summary": outcome.summary,
        "rows": outcome.rows,
        "csv": csv_name,
        "wall_clock_seconds": wall_clock,
    });
    let mut json_bytes = serde_json::to_vec_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
    json_bytes.push(b'\n');

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let json_path = out_dir.join(format!("{stem}.json"));
    let csv_path = out_dir.join(&csv_name);
    write_atomically(&out_dir, &[(&csv_path, &outcome.csv), (&json_path, &json_bytes)])?;

    println!(
        "{} ({}, config {}) finished in {wall_clock:.2} s",
        config.experiment.name(),
        path.display(),
        &hash[..16]
    );
    for line in &outcome.lines {
        println!("  {line}");
    }
    println!("  wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}

/// Stages every file in `dir` before renaming any into place, so a failure
/// leaves no partial results behind.
fn write_atomically(dir: &Path, files: &[(&Path, &[u8])]) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| io(tmp.path(), e))?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| io(path, e.error))?;
    }
    Ok(())
}
