//! Experiment runner for pulse-level quantum Fourier models.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::PathBuf;
use std::time::Instant;

use config::RunConfig;
use error::CliError;
use output::Staging;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "PULSEQFM_THREADS";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: PathBuf,
    pub files: Vec<PathBuf>,
    pub wall_seconds: f64,
}

fn thread_count() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Runs one experiment. Outputs appear in `cfg.out` only if every stage succeeds.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let threads = thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    let start = Instant::now();
    let mut staging = Staging::new(&cfg.out)?;
    let result = pool.install(|| experiments::run(cfg, &mut staging));
    if let Err(e) = result {
        staging.abort();
        return Err(e);
    }
    let wall = start.elapsed().as_secs_f64();
    let manifest = serde_json::json!({
        "experiment": cfg.experiment.name(),
        "master_seed": cfg.master_seed,
        "config": cfg,
        "versions": {
            "pulseqfm": env!("CARGO_PKG_VERSION"),
        },
        "threads": pool.current_num_threads(),
        "wall_time_seconds": wall,
        "files": staging.files(),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    if let Err(e) = staging.write_text("manifest.json", &(text + "\n")) {
        staging.abort();
        return Err(e);
    }
    let files = staging.commit()?;
    Ok(RunSummary {
        out: cfg.out.clone(),
        files,
        wall_seconds: wall,
    })
}
