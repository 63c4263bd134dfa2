//! Experiment configuration shared by the subcommands.
//!
//! Every section has defaults, so an empty JSON object is a valid config.
//! Unknown fields are rejected at every level.

use std::path::{Path, PathBuf};

use aqec_core::codes::ErrorOp;
use aqec_core::dense::{AmplitudeDampingParams, RwaConfig};
use aqec_core::{CodeName, SolverChoice, SystemParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must name the subcommand when present.
    pub experiment: Option<String>,
    pub codes: Vec<CodeName>,
    /// Codes given as 15-entry action vectors (8 codeword, 7 ladder).
    pub custom: Vec<CustomCode>,
    pub params: ParamsConfig,
    pub solver: SolverChoice,
    pub taus: TauGrid,
    /// Single evaluation time for scans and Wigner snapshots.
    pub tau: Option<f64>,
    /// Where fidelity drops are measured.
    pub measure_tau: f64,
    /// Second loss rate for the drop comparison in `evaluate`.
    pub compare_eta: f64,
    pub scan: ScanConfig,
    pub wigner: WignerConfig,
    pub benchmark: BenchmarkConfig,
    pub noise: NoiseConfig,
    pub xis: Vec<f64>,
    pub kl_errors: Vec<ErrorOp>,
    pub rwa: RwaSection,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            codes: Vec::new(),
            custom: Vec::new(),
            params: ParamsConfig::default(),
            solver: SolverChoice::Analytic,
            taus: TauGrid::default(),
            tau: None,
            measure_tau: 4.2,
            compare_eta: 0.0,
            scan: ScanConfig::default(),
            wigner: WignerConfig::default(),
            benchmark: BenchmarkConfig::default(),
            noise: NoiseConfig::default(),
            xis: vec![0.5, 1.0, 1.3],
            kl_errors: vec![ErrorOp::I, ErrorOp::A, ErrorOp::A2],
            rwa: RwaSection::default(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCode {
    pub label: String,
    pub action: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub gamma_b_ratio: f64,
    pub g_ratio: f64,
    pub eta2: f64,
    /// Engineered rate of the cavity-only equation. When absent it follows
    /// from `g` and `γ_b`.
    pub lambda: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            gamma_b_ratio: 1800.0,
            g_ratio: 600.0,
            eta2: 0.012,
            lambda: None,
        }
    }
}

impl ParamsConfig {
    pub fn system(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.gamma_b_ratio, self.eta2, self.g_ratio)?)
    }

    pub fn system_with_eta(&self, eta: f64) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.gamma_b_ratio, eta, self.g_ratio)?)
    }
}

/// Either explicit values or an inclusive `start..=stop` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauGrid {
    pub values: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            values: None,
            start: 0.0,
            stop: 4.2,
            step: 0.06,
        }
    }
}

impl TauGrid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match &self.values {
            Some(v) => v.clone(),
            None => {
                if !(self.step > 0.0 && self.stop >= self.start) {
                    return Err(CliError::Config(format!(
                        "tau grid needs step > 0 and stop ≥ start (got {}..{} step {})",
                        self.start, self.stop, self.step
                    )));
                }
                let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
                (0..=n).map(|k| self.start + self.step * k as f64).collect()
            }
        };
        if pts.is_empty() || pts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config(
                "tau grid must be non-empty, finite and non-negative".into(),
            ));
        }
        if pts.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Config("tau grid must be nondecreasing".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub theta_divisions: usize,
    pub phi_points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            theta_divisions: 10,
            phi_points: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    /// Grid covers `[-extent, extent]` in both quadratures.
    pub extent: f64,
    pub points: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            extent: 6.0,
            points: 161,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dims: Vec<usize>,
    pub repeats: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dims: vec![8, 16, 32],
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Phase-noise cutoffs in units of `γ_a`.
    pub omega_c: Vec<f64>,
    pub s_values: Vec<f64>,
    pub amplitude: Vec<AmplitudeCase>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            omega_c: (0..=6).map(|k| 2f64.powi(2 * k)).collect(),
            s_values: vec![2.0, 3.7, 5.0],
            amplitude: AmplitudeCase::reference_cases(),
        }
    }
}

/// One reservoir (detuning and width, in `γ_a`) with the couplings to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeCase {
    pub label: String,
    pub detuning: f64,
    pub width: f64,
    pub gamma0: Vec<f64>,
}

impl AmplitudeCase {
    /// The two reference reservoirs, converted with
    /// `γ_a = 0.2 kHz` (the rate used for the three-mode model): 100 kHz /
    /// 140 kHz and 1 kHz / 40 Hz.
    pub fn reference_cases() -> Vec<Self> {
        vec![
            Self {
                label: "wide".into(),
                detuning: 500.0,
                width: 700.0,
                gamma0: vec![10.0, 100.0, 1000.0],
            },
            Self {
                label: "narrow".into(),
                detuning: 5.0,
                width: 0.2,
                gamma0: vec![10.0, 100.0, 1000.0],
            },
        ]
    }

    pub fn points(&self) -> impl Iterator<Item = AmplitudeDampingParams> + '_ {
        self.gamma0.iter().map(|&g| AmplitudeDampingParams {
            gamma0: g,
            width: self.width,
            detuning: self.detuning,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RwaSection {
    pub model: RwaConfig,
    pub times_ms: Vec<f64>,
}

impl Default for RwaSection {
    fn default() -> Self {
        Self {
            model: RwaConfig::default(),
            times_ms: (1..=30).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid experiment config: {e}")))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self, experiment: &str) -> Result<(), CliError> {
        if let Some(name) = &self.experiment {
            if name != experiment {
                return Err(CliError::Config(format!(
                    "config is for experiment '{name}', not '{experiment}'"
                )));
            }
        }
        self.params.system()?;
        self.params.system_with_eta(self.compare_eta)?;
        if let Some(l) = self.params.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::Config(format!(
                    "lambda must be finite and non-negative, got {l}"
                )));
            }
        }
        self.taus.points()?;
        for (what, t) in [("tau", self.tau), ("measure_tau", Some(self.measure_tau))] {
            if let Some(t) = t {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(CliError::Config(format!(
                        "{what} must be finite and non-negative, got {t}"
                    )));
                }
            }
        }
        for c in &self.custom {
            if c.action.len() != 15 {
                return Err(CliError::Config(format!(
                    "custom code '{}' needs 15 action entries, got {}",
                    c.label,
                    c.action.len()
                )));
            }
        }
        if self.scan.theta_divisions == 0 || self.scan.phi_points == 0 {
            return Err(CliError::Config(
                "scan needs at least one θ interval and one φ point".into(),
            ));
        }
        if !(self.wigner.extent > 0.0) || self.wigner.points < 2 {
            return Err(CliError::Config(
                "wigner grid needs extent > 0 and at least 2 points".into(),
            ));
        }
        if self.benchmark.dims.iter().any(|&n| n < 8) || self.benchmark.repeats == 0 {
            return Err(CliError::Config(
                "benchmark dims must be ≥ 8 with at least one repeat".into(),
            ));
        }
        if self.xis.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(CliError::Config("ξ values must be positive".into()));
        }
        if self.noise.omega_c.iter().any(|w| !(*w > 0.0)) || self.noise.s_values.iter().any(|s| !(*s > 0.0)) {
            return Err(CliError::Config("phase noise needs ω_c > 0 and s > 0".into()));
        }
        for case in &self.noise.amplitude {
            for p in case.points() {
                p.validate()?;
            }
        }
        self.rwa.model.validate()?;
        if self.rwa.times_ms.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CliError::Config("RWA times must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_fields_rejected_at_depth() {
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"params": {"g": 1}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"taus": {"stop": 1, "extra": 0}}"#).is_err());
    }

    #[test]
    fn default_grid() {
        let pts = TauGrid::default().points().unwrap();
        assert_eq!(pts.len(), 71);
        assert!((pts[70] - 4.2).abs() < 1e-12);
        assert!((pts[10] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::default();
        c.taus.values = Some(vec![0.5, 0.1]);
        assert!(c.validate("evaluate").is_err());
        let c = ExperimentConfig {
            experiment: Some("rwa".into()),
            ..ExperimentConfig::default()
        };
        assert!(c.validate("evaluate").is_err());
        assert!(c.validate("rwa").is_ok());
        let mut c = ExperimentConfig::default();
        c.params.eta2 = -1.0;
        assert!(c.validate("evaluate").is_err());
    }

    #[test]
    fn named_codes_parse_lowercase() {
        let c = ExperimentConfig::from_json(r#"{"codes": ["grl", "t4c"], "solver": "dense"}"#).unwrap();
        assert_eq!(c.codes, vec![CodeName::Grl, CodeName::T4c]);
        assert_eq!(c.solver, SolverChoice::Dense);
    }
}
