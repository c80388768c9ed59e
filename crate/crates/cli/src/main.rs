use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eit_cli::{execute, Command, Overrides};

/// Cavity-EIT thermometry of trapped ions.
///
/// Exit codes: 0 success, 2 invalid config, 3 solver failure,
/// 4 linewidth outside the calibrated span, 1 i/o error.
#[derive(Parser)]
#[command(name = "eit-thermo", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Run {
    /// JSON run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `threads` in the config)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Probe transmission sweep and central-peak fit
    Spectrum(Run),
    /// Linewidth versus temperature curve
    Calibrate(Run),
    /// Temperature from a measured linewidth
    Invert(Run),
    /// Linewidth over a (g, Ω_c) grid at several bath occupancies
    Map2d(Run),
    /// Linewidth and calibration versus ion number
    Multiion(Run),
    /// Thermal, motionless and closed-form linewidths versus Ω_c
    Compare(Run),
    /// Closed-form transmission of the motionless model
    Analytic(Run),
    /// Resolved-sideband dynamics
    Sideband {
        #[command(subcommand)]
        mode: SidebandCmd,
    },
}

#[derive(Subcommand)]
enum SidebandCmd {
    /// Blue-sideband Rabi flopping
    Rabi(Run),
    /// Red/blue excitation ratio versus phonon number
    Ratio(Run),
    /// Pulsed cooling or heating sequence
    Cool(Run),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, run) = match cli.cmd {
        Cmd::Spectrum(r) => (Command::Spectrum, r),
        Cmd::Calibrate(r) => (Command::Calibrate, r),
        Cmd::Invert(r) => (Command::Invert, r),
        Cmd::Map2d(r) => (Command::Map2d, r),
        Cmd::Multiion(r) => (Command::MultiIon, r),
        Cmd::Compare(r) => (Command::Compare, r),
        Cmd::Analytic(r) => (Command::Analytic, r),
        Cmd::Sideband { mode: SidebandCmd::Rabi(r) } => (Command::SidebandRabi, r),
        Cmd::Sideband { mode: SidebandCmd::Ratio(r) } => (Command::SidebandRatio, r),
        Cmd::Sideband { mode: SidebandCmd::Cool(r) } => (Command::SidebandCool, r),
    };
    let ov = Overrides { output_dir: run.out, threads: run.threads };
    match execute(command, &run.config, &ov) {
        Ok(results) => {
            println!("{}", serde_json::to_string_pretty(&results).expect("json value"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
