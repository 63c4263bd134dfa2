//! One module per experiment. Each takes the effective configuration, writes
//! its artifacts through [`Run`](crate::run::Run) and records its checks.

pub mod analysis;
pub mod benchmark;
pub mod common;
pub mod evaluate;
pub mod noise;
pub mod rwa;
pub mod scan;
pub mod train;
pub mod wigner;

use std::path::PathBuf;

use crate::config::ExperimentConfig;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Ctx {
    pub out: Option<PathBuf>,
    pub check: bool,
}

impl Ctx {
    /// `--out` wins over the config's `output_dir`.
    pub fn out_dir(&self, cfg: &ExperimentConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output_dir.clone())
    }
}

/// Engineered rate used when the config leaves it open and the experiment
/// is defined at the calibration point.
pub const CALIBRATION_LAMBDA: f64 = aqec_core::codes::CALIBRATION_LAMBDA;
