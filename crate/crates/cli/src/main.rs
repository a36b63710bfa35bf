use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pulseqfm_cli::config::{resolve, Experiment, Overrides};
use pulseqfm_cli::run_experiment;

#[derive(Parser)]
#[command(name = "pulseqfm", version, about = "Pulse-level quantum Fourier model experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every ansatz in gate, decomposed and pulse modes
    Train(Overrides),
    /// Fourier coefficients at seeded initial points and the seeded targets
    Coeffs(Overrides),
    /// Coefficient variance and active-frequency counts across pulse distortion
    VarianceSweep(Overrides),
    /// Fourier coefficient correlation across pulse distortion
    Fcc(Overrides),
    /// KL divergence to the Haar fidelity distribution across pulse distortion
    Expressibility(Overrides),
    /// Fidelity and trace distance between gate and distorted pulse states
    FidelitySweep(Overrides),
    /// Jacobian ranks and escape-direction gradients
    Rank(Overrides),
    /// Every experiment into one output directory
    Report(Overrides),
    /// Run the experiment named in the config file (or given here)
    Run {
        experiment: Option<Experiment>,
        #[command(flatten)]
        flags: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Train(f) => (Some(Experiment::Train), f),
        Command::Coeffs(f) => (Some(Experiment::Coeffs), f),
        Command::VarianceSweep(f) => (Some(Experiment::VarianceSweep), f),
        Command::Fcc(f) => (Some(Experiment::Fcc), f),
        Command::Expressibility(f) => (Some(Experiment::Expressibility), f),
        Command::FidelitySweep(f) => (Some(Experiment::FidelitySweep), f),
        Command::Rank(f) => (Some(Experiment::Rank), f),
        Command::Report(f) => (Some(Experiment::Report), f),
        Command::Run { experiment, flags } => (experiment, flags),
    };
    let result = resolve(experiment, &flags).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            eprintln!("done in {:.1} s", summary.wall_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
