//! Library half of the `eit-thermo` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{load, RunOptions};
pub use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Calibrate,
    Invert,
    Map2d,
    MultiIon,
    Compare,
    Analytic,
    SidebandRabi,
    SidebandRatio,
    SidebandCool,
}

impl Command {
    /// Default output directory name.
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Calibrate => "calibrate",
            Command::Invert => "invert",
            Command::Map2d => "map2d",
            Command::MultiIon => "multiion",
            Command::Compare => "compare",
            Command::Analytic => "analytic",
            Command::SidebandRabi => "sideband_rabi",
            Command::SidebandRatio => "sideband_ratio",
            Command::SidebandCool => "sideband_cool",
        }
    }
}

/// Where a run writes and how many workers it uses. Command-line values win
/// over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn run_with<C, F>(command: Command, path: &Path, ov: &Overrides, f: F) -> CliResult<Value>
where
    C: serde::de::DeserializeOwned + RunOptions,
    F: FnOnce(&C, &Path) -> CliResult<Value> + Send,
    C: Sync,
{
    let cfg: C = load(path)?;
    let dir = ov
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = ov.threads.or(cfg.threads()) {
        if n == 0 {
            return Err(CliError::config("threads: must be >= 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    pool.install(|| f(&cfg, &dir))
}

/// Loads the config at `path` and runs `command`.
pub fn execute(command: Command, path: &Path, ov: &Overrides) -> CliResult<Value> {
    use commands::*;
    match command {
        Command::Spectrum => run_with(command, path, ov, spectrum),
        Command::Calibrate => run_with(command, path, ov, calibrate),
        Command::Invert => run_with(command, path, ov, invert),
        Command::Map2d => run_with(command, path, ov, map2d),
        Command::MultiIon => run_with(command, path, ov, multiion),
        Command::Compare => run_with(command, path, ov, compare),
        Command::Analytic => run_with(command, path, ov, analytic),
        Command::SidebandRabi => run_with(command, path, ov, sideband_rabi),
        Command::SidebandRatio => run_with(command, path, ov, sideband_ratio_scan),
        Command::SidebandCool => run_with(command, path, ov, sideband_cool),
    }
}
