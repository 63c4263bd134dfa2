//! Non-Markovian ancilla noise: dephasing from an ohmic-family bath and
//! damping into a Lorentzian reservoir.
//!
//! All rates and times are in units of `γ_a`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::hybrid::{hybrid_model, mean_fidelity_with_model, sigma_minus, sigma_z, ANCILLA_DIM};
use super::integrator::IntegratorOptions;
use super::model::Coefficient;
use crate::codes::{Codeword, Recovery};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, C64};
use crate::params::SystemParams;

/// Bath with spectral density `J(ω) = (ω/ω_c)^s e^{-ω/ω_c}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDampingParams {
    pub omega_c: f64,
    pub s: f64,
    /// Multiplies the rate; zero switches the channel off.
    #[serde(default = "one")]
    pub scale: f64,
    /// Use `sin(s·arctan(ω_c t))` instead of `sin(arctan(ω_c t))`.
    #[serde(default)]
    pub s_in_phase: bool,
}

fn one() -> f64 {
    1.0
}

impl PhaseDampingParams {
    pub fn new(omega_c: f64, s: f64) -> Result<Self> {
        let p = Self {
            omega_c,
            s,
            scale: 1.0,
            s_in_phase: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0 && self.s > 0.0 && self.scale >= 0.0) {
            return Err(Error::Config(format!(
                "phase damping needs ω_c > 0, s > 0, scale ≥ 0 (got {}, {}, {})",
                self.omega_c, self.s, self.scale
            )));
        }
        Ok(())
    }
}

/// `γ(t) = ω_c Γ(s) sin(arctan(ω_c t)) / (1 + (ω_c t)²)^{s/2}`.
pub fn phase_damping_rate(t: f64, p: &PhaseDampingParams) -> f64 {
    let x = p.omega_c * t;
    let angle = if p.s_in_phase { p.s * x.atan() } else { x.atan() };
    p.scale * p.omega_c * gamma(p.s) * angle.sin() / (1.0 + x * x).powf(0.5 * p.s)
}

/// Hybrid AQEC dynamics plus `(γ(t)/2) D[σ_z]` on the ancilla.
pub fn simulate_phase_damping(
    code: &Codeword,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    p: &PhaseDampingParams,
    taus: &[f64],
) -> Result<Vec<f64>> {
    p.validate()?;
    let dim = code.dim();
    let mut model = hybrid_model(dim, recovery, params)?;
    let sz = kron(&CMatrix::identity(dim, dim), &sigma_z());
    let pc = *p;
    model.add_collapse(Coefficient::varying(move |t| phase_damping_rate(t, &pc)), &sz)?;
    mean_fidelity_with_model(code, &model.build(), ANCILLA_DIM, taus, &IntegratorOptions::default())
}

/// Lorentzian reservoir `J(ω) = γ₀λ² / (2π[(ω − ω_c)² + λ²])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeDampingParams {
    pub gamma0: f64,
    /// Lorentzian width `λ`.
    pub width: f64,
    /// `Δ = ω₀ − ω_c`.
    pub detuning: f64,
}

impl AmplitudeDampingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 >= 0.0 && self.width > 0.0 && self.detuning.is_finite()) {
            return Err(Error::Config(format!(
                "amplitude damping needs γ₀ ≥ 0 and λ > 0 (got {}, {})",
                self.gamma0, self.width
            )));
        }
        Ok(())
    }
}

/// Relative size below which `ℜ(t)` counts as vanished.
const SINGULAR_TOL: f64 = 1e-12;

/// `(h(t), γ(t))` with `h = −2 Im(ℜ̇/ℜ)` and `γ = −2 Re(ℜ̇/ℜ)`.
///
/// With `k = λ − iΔ`, `Ω = √(k² − 2γ₀λ)` and `E = e^{−Ωt}`,
/// `ℜ̇/ℜ = −γ₀λ q / (1 + E + k q)` where `q = (1 − E)/Ω`. This form never
/// divides by `Ω`, stays finite as `Ω → 0` and has no overflowing
/// hyperbolic functions.
pub fn amplitude_damping_functions(t: f64, p: &AmplitudeDampingParams) -> Result<(f64, f64)> {
    let ratio = log_derivative(t, p)?;
    Ok((-2.0 * ratio.im, -2.0 * ratio.re))
}

fn omega(p: &AmplitudeDampingParams) -> (C64, C64) {
    let k = C64::new(p.width, -p.detuning);
    let mut om = (k * k - 2.0 * p.gamma0 * p.width).sqrt();
    if om.re < 0.0 {
        om = -om;
    }
    (k, om)
}

fn log_derivative(t: f64, p: &AmplitudeDampingParams) -> Result<C64> {
    let (k, om) = omega(p);
    let z = om * t;
    let e = (-z).exp();
    let q = if z.norm() < 1e-4 {
        // (1 − e^{−z})/Ω = t (1 − z/2 + z²/6 − z³/24)
        C64::new(t, 0.0) * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
    } else {
        (1.0 - e) / om
    };
    let den = 1.0 + e + k * q;
    let scale = 1.0 + e.norm() + (k * q).norm();
    if den.norm() <= SINGULAR_TOL * scale {
        return Err(Error::Singularity(t));
    }
    Ok(-p.gamma0 * p.width * q / den)
}

/// `ℜ(t)` itself, for diagnostics.
pub fn reservoir_function(t: f64, p: &AmplitudeDampingParams) -> C64 {
    let (k, om) = omega(p);
    let half = om * t / 2.0;
    let lead = (-k * t / 2.0).exp();
    if om.norm() < 1e-12 {
        return lead * (1.0 + k * t / 2.0);
    }
    lead * (half.cosh() + k / om * half.sinh())
}

/// Hybrid AQEC dynamics with `H_int = (h(t)/2) σ₊σ₋` and ancilla decay
/// `γ_b + γ(t)`.
pub fn simulate_amplitude_damping(
    code: &Codeword,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    p: &AmplitudeDampingParams,
    taus: &[f64],
) -> Result<Vec<f64>> {
    p.validate()?;
    let t_max = taus.iter().copied().fold(0.0, f64::max);
    // Fail before integrating if ℜ vanishes anywhere on the horizon.
    const PROBES: usize = 20_000;
    for i in 0..=PROBES {
        log_derivative(t_max * i as f64 / PROBES as f64, p)?;
    }

    let dim = code.dim();
    let mut model = hybrid_model(dim, recovery, params)?;
    let sm = kron(&CMatrix::identity(dim, dim), &sigma_minus());
    let excited = sm.adjoint() * &sm;
    if p.gamma0 > 0.0 {
        let ph = *p;
        model.add_hamiltonian(
            Coefficient::varying(move |t| amplitude_damping_functions(t, &ph).map_or(f64::NAN, |(h, _)| 0.5 * h)),
            &excited,
        )?;
        let pg = *p;
        model.add_collapse(
            Coefficient::varying(move |t| amplitude_damping_functions(t, &pg).map_or(f64::NAN, |(_, g)| g)),
            &sm,
        )?;
    }
    mean_fidelity_with_model(code, &model.build(), ANCILLA_DIM, taus, &IntegratorOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_rate_values() {
        let p = PhaseDampingParams::new(5.0, 2.0).unwrap();
        assert_eq!(phase_damping_rate(0.0, &p), 0.0);
        assert!(phase_damping_rate(1e9, &p).abs() < 1e-6);
        let r = phase_damping_rate(1.0 / 5.0, &p);
        assert!((r - 5.0 * 2f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn phase_rate_variant_differs_for_non_unit_s() {
        let mut p = PhaseDampingParams::new(3.0, 3.7).unwrap();
        let a = phase_damping_rate(0.5, &p);
        p.s_in_phase = true;
        let b = phase_damping_rate(0.5, &p);
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn reservoir_starts_at_one() {
        let p = AmplitudeDampingParams {
            gamma0: 3.0,
            width: 700.0,
            detuning: 500.0,
        };
        assert_eq!(reservoir_function(0.0, &p), C64::new(1.0, 0.0));
        let (h, g) = amplitude_damping_functions(0.0, &p).unwrap();
        assert_eq!((h, g), (0.0, 0.0));
    }

    #[test]
    fn uncoupled_reservoir_has_no_rate() {
        let p = AmplitudeDampingParams {
            gamma0: 0.0,
            width: 7.0,
            detuning: 2.0,
        };
        for t in [0.1, 1.0, 3.0] {
            let (h, g) = amplitude_damping_functions(t, &p).unwrap();
            assert_eq!((h, g), (0.0, 0.0));
        }
    }

    #[test]
    fn log_derivative_matches_finite_difference() {
        let p = AmplitudeDampingParams {
            gamma0: 40.0,
            width: 3.0,
            detuning: 5.0,
        };
        for t in [0.05, 0.3, 0.9] {
            let d = 1e-6;
            let num = (reservoir_function(t + d, &p) - reservoir_function(t - d, &p)) / (2.0 * d);
            let want = num / reservoir_function(t, &p);
            let got = log_derivative(t, &p).unwrap();
            assert!((got - want).norm() < 1e-6 * want.norm().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        // Ω = 0 exactly when k² = 2γ₀λ with Δ = 0, i.e. λ = 2γ₀.
        let p = AmplitudeDampingParams {
            gamma0: 2.0,
            width: 4.0,
            detuning: 0.0,
        };
        let r = log_derivative(0.7, &p).unwrap();
        let want = -p.gamma0 * p.width * 0.7 / (2.0 + p.width * 0.7);
        assert!((r.re - want).abs() < 1e-12 && r.im.abs() < 1e-12);
    }

    #[test]
    fn oscillating_rate_in_strong_coupling() {
        let p = AmplitudeDampingParams {
            gamma0: 5000.0,
            width: 700.0,
            detuning: 500.0,
        };
        let signs: Vec<bool> = (1..400)
            .map(|i| {
                amplitude_damping_functions(i as f64 * 1e-4, &p)
                    .map(|(_, g)| g > 0.0)
                    .unwrap_or(true)
            })
            .collect();
        assert!(signs.windows(2).any(|w| w[0] != w[1]));
    }
}
