//! Run configuration: TOML file, command-line overrides and defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use pulseqfm::model::{ansatz_by_name, Mode, ANSATZ_NAMES};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Train,
    Coeffs,
    VarianceSweep,
    Fcc,
    Expressibility,
    FidelitySweep,
    Rank,
    Report,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Train => "train",
            Experiment::Coeffs => "coeffs",
            Experiment::VarianceSweep => "variance-sweep",
            Experiment::Fcc => "fcc",
            Experiment::Expressibility => "expressibility",
            Experiment::FidelitySweep => "fidelity-sweep",
            Experiment::Rank => "rank",
            Experiment::Report => "report",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Experiment as ValueEnum>::from_str(s, true)
            .map_err(|_| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Training modes selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "String")]
pub enum ModeSelection {
    All,
    One(Mode),
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::All => Mode::ALL.to_vec(),
            ModeSelection::One(m) => vec![m],
        }
    }
}

impl From<ModeSelection> for String {
    fn from(m: ModeSelection) -> String {
        match m {
            ModeSelection::All => "all".into(),
            ModeSelection::One(m) => m.name().into(),
        }
    }
}

impl FromStr for ModeSelection {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ModeSelection::All);
        }
        s.parse::<Mode>()
            .map(ModeSelection::One)
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Flags shared by every subcommand. Each one overrides the config key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated ansatz names, or `all`
    #[arg(long)]
    pub ansatz: Option<String>,
    /// gate, decomposed, pulse or all
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of seeds (0..N)
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Variance threshold for active frequencies
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "sigma2-max")]
    pub sigma2_max: Option<f64>,
    #[arg(long = "sigma2-steps")]
    pub sigma2_steps: Option<usize>,
    /// Parameter samples (variance sweep, FCC, fidelity sweep) or state pairs (expressibility)
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "master-seed")]
    pub master_seed: Option<u64>,
    #[arg(long = "n-qubits")]
    pub n_qubits: Option<usize>,
    #[arg(long = "n-blocks")]
    pub n_blocks: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    general: Option<GeneralSection>,
    train: Option<TrainSection>,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneralSection {
    ansatz: Option<String>,
    n_qubits: Option<usize>,
    n_blocks: Option<usize>,
    seeds: Option<usize>,
    master_seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSection {
    mode: Option<String>,
    steps: Option<usize>,
    lr: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    tau: Option<f64>,
    sigma2_max: Option<f64>,
    sigma2_steps: Option<usize>,
    samples: Option<usize>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub ansatze: Vec<String>,
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub seeds: usize,
    pub master_seed: u64,
    pub out: PathBuf,
    pub mode: ModeSelection,
    pub steps: usize,
    pub lr: f64,
    pub tau: f64,
    pub sigma2_max: f64,
    pub sigma2_steps: usize,
    /// `None` selects each experiment's default sample count.
    pub samples: Option<usize>,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            ansatze: ANSATZ_NAMES.iter().map(|s| s.to_string()).collect(),
            n_qubits: 3,
            n_blocks: 2,
            seeds: 10,
            master_seed: 0,
            out: PathBuf::from("out"),
            mode: ModeSelection::All,
            steps: 500,
            lr: 0.05,
            tau: 5e-6,
            sigma2_max: 0.008,
            sigma2_steps: 8,
            samples: None,
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).collect()
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.ansatze.is_empty() {
            return bad("no ansatz selected".into());
        }
        for a in &self.ansatze {
            ansatz_by_name(a, self.n_qubits).map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.n_blocks == 0 {
            return bad("n_blocks must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.tau >= 0.0) {
            return bad(format!("tau must be non-negative, got {}", self.tau));
        }
        if !(self.sigma2_max >= 0.0 && self.sigma2_max.is_finite()) {
            return bad(format!("sigma2_max must be non-negative, got {}", self.sigma2_max));
        }
        if self.sigma2_steps == 0 {
            return bad("sigma2_steps must be at least 1".into());
        }
        if self.samples.is_some_and(|s| s < 3) {
            return bad("samples must be at least 3".into());
        }
        Ok(())
    }
}

fn parse_ansatz_list(s: &str) -> Vec<String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return ANSATZ_NAMES.iter().map(|s| s.to_string()).collect();
    }
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

/// Merges defaults, the config file (if any) and command-line flags.
/// `experiment` comes from the subcommand, or from the file's `experiment` key.
pub fn resolve(experiment: Option<Experiment>, flags: &Overrides) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    let experiment = match (experiment, &file.experiment) {
        (Some(e), _) => e,
        (None, Some(name)) => name.parse()?,
        (None, None) => {
            return Err(CliError::Config(
                "missing config key `experiment` (or name the experiment on the command line)".into(),
            ))
        }
    };
    let mut cfg = RunConfig::defaults(experiment);
    let g = file.general.unwrap_or_default();
    let t = file.train.unwrap_or_default();
    let s = file.sweep.unwrap_or_default();

    if let Some(a) = flags.ansatz.as_deref().or(g.ansatz.as_deref()) {
        cfg.ansatze = parse_ansatz_list(a);
    }
    cfg.n_qubits = flags.n_qubits.or(g.n_qubits).unwrap_or(cfg.n_qubits);
    cfg.n_blocks = flags.n_blocks.or(g.n_blocks).unwrap_or(cfg.n_blocks);
    cfg.seeds = flags.seeds.or(g.seeds).unwrap_or(cfg.seeds);
    cfg.master_seed = flags.master_seed.or(g.master_seed).unwrap_or(cfg.master_seed);
    if let Some(o) = flags.out.clone().or(g.out) {
        cfg.out = o;
    }
    if let Some(m) = flags.mode.as_deref().or(t.mode.as_deref()) {
        cfg.mode = m.parse()?;
    }
    cfg.steps = flags.steps.or(t.steps).unwrap_or(cfg.steps);
    cfg.lr = flags.lr.or(t.lr).unwrap_or(cfg.lr);
    cfg.tau = flags.tau.or(s.tau).unwrap_or(cfg.tau);
    cfg.sigma2_max = flags.sigma2_max.or(s.sigma2_max).unwrap_or(cfg.sigma2_max);
    cfg.sigma2_steps = flags.sigma2_steps.or(s.sigma2_steps).unwrap_or(cfg.sigma2_steps);
    cfg.samples = flags.samples.or(s.samples);
    cfg.validate()?;
    Ok(cfg)
}
