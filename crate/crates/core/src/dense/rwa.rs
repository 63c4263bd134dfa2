//! Three-mode model (cavity ⊗ transmon ⊗ readout) in the rotating frame:
//! `H = g₀(L_o σ₊ + L_o† σ₋) + g₁ P (c†σ₋ + c σ₊)` with `P` a projector on
//! selected Fock levels.

use serde::{Deserialize, Serialize};

use super::hybrid::{mean_fidelity_with_model, sigma_minus};
use super::integrator::IntegratorOptions;
use super::model::{Coefficient, LindbladModel};
use crate::codes::Codeword;
use crate::error::{Error, Result};
use crate::fidelity::{breakeven_reference, gain};
use crate::fock::ProjectorLadder;
use crate::linalg::{annihilation, kron, CMatrix, C64};

const READOUT_DIM: usize = 2;

/// Rates and couplings in kHz (angular, i.e. each value multiplies `2π`),
/// and the horizon in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwaConfig {
    pub gamma_a_khz: f64,
    pub gamma_a2_khz: f64,
    pub gamma_b_khz: f64,
    pub gamma_c_khz: f64,
    pub g0_khz: f64,
    pub g1_khz: f64,
    pub t_final_ms: f64,
    /// Levels the readout coupling acts on.
    pub projector_levels: Vec<usize>,
}

impl Default for RwaConfig {
    fn default() -> Self {
        Self {
            gamma_a_khz: 0.2,
            gamma_a2_khz: 0.002,
            gamma_b_khz: 2.0,
            gamma_c_khz: 240.0,
            g0_khz: 120.0,
            g1_khz: 160.0,
            t_final_ms: 3.0,
            projector_levels: vec![3, 4, 6, 7],
        }
    }
}

/// Rates in units of `γ_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwaRates {
    pub eta2: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub g0: f64,
    pub g1: f64,
}

impl RwaConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gamma_a_khz,
            self.gamma_a2_khz,
            self.gamma_b_khz,
            self.gamma_c_khz,
            self.g0_khz,
            self.g1_khz,
            self.t_final_ms,
        ];
        if self.gamma_a_khz <= 0.0 || all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("RWA rates must be non-negative with γ_a > 0".into()));
        }
        Ok(())
    }

    pub fn rates(&self) -> RwaRates {
        let r = |x: f64| x / self.gamma_a_khz;
        RwaRates {
            eta2: r(self.gamma_a2_khz),
            gamma_b: r(self.gamma_b_khz),
            gamma_c: r(self.gamma_c_khz),
            g0: r(self.g0_khz),
            g1: r(self.g1_khz),
        }
    }

    /// `γ_a t` for a time in milliseconds.
    pub fn tau_of_ms(&self, t_ms: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.gamma_a_khz * t_ms
    }

    /// Violations of the ordering `γ_c > g₁ ≥ |g₀| > γ_a, γ_b`.
    pub fn regime_warnings(&self) -> Vec<String> {
        let r = self.rates();
        let mut w = Vec::new();
        if r.gamma_c <= r.g1 {
            w.push(format!("readout decay {} does not exceed g1 {}", r.gamma_c, r.g1));
        }
        if r.g1 < r.g0 {
            w.push(format!("g1 {} is below g0 {}", r.g1, r.g0));
        }
        if r.g0 <= r.gamma_b.max(1.0) {
            w.push(format!("g0 {} does not exceed the ancilla and cavity decay", r.g0));
        }
        w
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RwaResult {
    /// Times in milliseconds.
    pub times_ms: Vec<f64>,
    pub taus: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub breakeven: Vec<f64>,
    /// `None` where the gain is undefined (the code fidelity is 1).
    pub gain: Vec<Option<f64>>,
    pub warnings: Vec<String>,
}

pub fn rwa_model(dim: usize, ladder: &ProjectorLadder, cfg: &RwaConfig) -> Result<LindbladModel> {
    cfg.validate()?;
    if ladder.dim() != dim {
        return Err(Error::Structural(format!(
            "ladder spans {} levels, code has {dim}",
            ladder.dim()
        )));
    }
    let r = cfg.rates();
    let id_c = CMatrix::identity(dim, dim);
    let id2 = CMatrix::identity(2, 2);
    let three = |c: &CMatrix, q: &CMatrix, o: &CMatrix| kron(&kron(c, q), o);

    let mut lo = CMatrix::zeros(dim, dim);
    for (k, d) in ladder.coeffs().iter().enumerate() {
        lo[(k + 1, k)] = C64::new(*d, 0.0);
    }
    let mut proj = CMatrix::zeros(dim, dim);
    for &n in &cfg.projector_levels {
        if n >= dim {
            return Err(Error::OutOfRange {
                what: "projector level",
                value: n as i64,
                allowed: format!("0..{dim}"),
            });
        }
        proj[(n, n)] = C64::new(1.0, 0.0);
    }

    let a = three(&annihilation(dim), &id2, &id2);
    let s = three(&id_c, &sigma_minus(), &id2);
    let c = three(&id_c, &id2, &annihilation(READOUT_DIM));
    let l = three(&lo, &id2, &id2);
    let p = three(&proj, &id2, &id2);

    let mut m = LindbladModel::new(dim * 2 * READOUT_DIM);
    m.add_hamiltonian(Coefficient::Constant(r.g0), &(&l * s.adjoint() + l.adjoint() * &s))?;
    m.add_hamiltonian(
        Coefficient::Constant(r.g1),
        &(&p * (c.adjoint() * &s + &c * s.adjoint())),
    )?;
    m.add_collapse(Coefficient::Constant(1.0), &a)?;
    m.add_collapse(Coefficient::Constant(r.eta2), &(&a * &a))?;
    m.add_collapse(Coefficient::Constant(r.gamma_b), &s)?;
    m.add_collapse(Coefficient::Constant(r.gamma_c), &c)?;
    Ok(m.build())
}

/// Mean fidelity and gain at the given times (milliseconds).
pub fn simulate_rwa_three_mode(
    code: &Codeword,
    ladder: &ProjectorLadder,
    cfg: &RwaConfig,
    times_ms: &[f64],
) -> Result<RwaResult> {
    let model = rwa_model(code.dim(), ladder, cfg)?;
    let taus: Vec<f64> = times_ms.iter().map(|&t| cfg.tau_of_ms(t)).collect();
    let fidelity = mean_fidelity_with_model(code, &model, 2 * READOUT_DIM, &taus, &IntegratorOptions::default())?;
    let breakeven: Vec<f64> = taus.iter().map(|&t| breakeven_reference(t)).collect();
    let gain = fidelity
        .iter()
        .zip(&breakeven)
        .map(|(&f, &b)| gain(f, b).ok())
        .collect();
    Ok(RwaResult {
        times_ms: times_ms.to_vec(),
        taus,
        fidelity,
        breakeven,
        gain,
        warnings: cfg.regime_warnings(),
    })
}

/// The unit-weight ladder `|3⟩⟨2| + |4⟩⟨3| + |6⟩⟨5| + |7⟩⟨6|`.
pub fn unit_grl_ladder() -> ProjectorLadder {
    ProjectorLadder::from_terms(8, &[(3, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]).expect("fits in eight levels")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{named_code, CodeName};

    #[test]
    fn unit_conversion() {
        let cfg = RwaConfig::default();
        let r = cfg.rates();
        assert!((r.g0 - 600.0).abs() < 1e-9);
        assert!((r.gamma_c - 1200.0).abs() < 1e-9);
        assert!((cfg.tau_of_ms(3.0) - 2.0 * std::f64::consts::PI * 0.6).abs() < 1e-12);
        assert!(cfg.regime_warnings().is_empty());
        let weak = RwaConfig {
            gamma_c_khz: 100.0,
            ..RwaConfig::default()
        };
        assert_eq!(weak.regime_warnings().len(), 1);
    }

    #[test]
    fn zero_time_gain_is_absent() {
        let grl = named_code(CodeName::Grl);
        let res = simulate_rwa_three_mode(&grl.code, &unit_grl_ladder(), &RwaConfig::default(), &[0.0]).unwrap();
        assert_eq!(res.gain, vec![None]);
    }

    #[test]
    fn uncoupled_is_pure_decay() {
        let grl = named_code(CodeName::Grl);
        let cfg = RwaConfig {
            g0_khz: 0.0,
            g1_khz: 0.0,
            gamma_a2_khz: 0.0,
            ..RwaConfig::default()
        };
        let res = simulate_rwa_three_mode(&grl.code, &unit_grl_ladder(), &cfg, &[0.2]).unwrap();
        let solver =
            crate::analytic::AnalyticSolver::new(8, &crate::params::LossChannelSet::single_photon(), None, 0.0)
                .unwrap();
        let f = crate::fidelity::mean_fidelity_analytic(&grl.code, &solver, &[res.taus[0]]).unwrap();
        assert!((res.fidelity[0] - f[0]).abs() < 1e-7);
    }
}
