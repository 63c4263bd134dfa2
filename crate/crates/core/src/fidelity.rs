//! Fidelity metrics: cardinal states, six-state mean fidelity, Bloch scans,
//! the breakeven reference, gain and Wigner functions.
//!
//! Fidelity here is always the overlap `Tr(ρ₀ ρ_τ)`, not the Uhlmann
//! fidelity.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticSolver;
use crate::codes::{pure_unchecked, Codeword, Recovery};
use crate::dense::hybrid::{evolve_reduced, hybrid_model, simulate_aqec_hybrid, ANCILLA_DIM};
use crate::dense::IntegratorOptions;
use crate::error::{Error, Result};
use crate::fock::FockDensityMatrix;
use crate::linalg::{trace_product, CMatrix, C64};
use crate::params::SystemParams;

pub const CARDINAL_LABELS: [&str; 6] = ["+z", "-z", "+x", "-x", "+y", "-y"];

/// The six logical Bloch-sphere poles `±z, ±x, ±y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CardinalSet {
    states: Vec<FockDensityMatrix>,
}

impl CardinalSet {
    pub fn states(&self) -> &[FockDensityMatrix] {
        &self.states
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&'static str, &FockDensityMatrix)> {
        CARDINAL_LABELS.iter().copied().zip(&self.states)
    }
}

pub fn cardinal_states(code: &Codeword) -> CardinalSet {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = code.zero_logical();
    let o = code.one_logical();
    let mix = |phase: C64| -> Vec<C64> { z.iter().zip(o).map(|(a, b)| (a + phase * b) * h).collect() };
    let vectors = [
        z.to_vec(),
        o.to_vec(),
        mix(C64::new(1.0, 0.0)),
        mix(C64::new(-1.0, 0.0)),
        mix(C64::new(0.0, 1.0)),
        mix(C64::new(0.0, -1.0)),
    ];
    CardinalSet {
        states: vectors.iter().map(|v| pure_unchecked(v)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Analytic,
    Dense,
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Analytic => "analytic",
            SolverChoice::Dense => "dense",
        })
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(SolverChoice::Analytic),
            "dense" => Ok(SolverChoice::Dense),
            _ => Err(Error::Argument(format!(
                "unknown solver '{s}' (expected analytic or dense)"
            ))),
        }
    }
}

/// `F̄(τ)` for each grid point using a prepared structured solver.
pub fn mean_fidelity_analytic(code: &Codeword, solver: &AnalyticSolver, taus: &[f64]) -> Result<Vec<f64>> {
    let cards = cardinal_states(code);
    let mut acc = vec![0.0; taus.len()];
    for rho0 in cards.states() {
        let series = solver.evolve_series_matrix(rho0.matrix(), taus)?;
        for (a, r) in acc.iter_mut().zip(&series) {
            *a += trace_product(rho0.matrix(), r).re;
        }
    }
    Ok(acc.into_iter().map(|f| f / 6.0).collect())
}

/// Builds the structured solver for a code's recovery.
///
/// `lambda` is the engineered rate of `(λ/2) D[L_eng]`; without a recovery
/// it is ignored.
pub fn analytic_solver_for(
    dim: usize,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    lambda: f64,
) -> Result<AnalyticSolver> {
    match recovery {
        None => AnalyticSolver::new(dim, &params.channels(), None, 0.0),
        Some(Recovery::Ladder(l)) => AnalyticSolver::new(dim, &params.channels(), Some(l), lambda),
        Some(Recovery::Operator(_)) => Err(Error::Unsupported(
            "the structured solver needs a linear ladder recovery; use the dense solver".into(),
        )),
    }
}

/// Six-state mean fidelity over a time grid.
///
/// The structured solver uses `lambda` when given and otherwise the rate the
/// hybrid model reduces to. The dense solver integrates the cavity–ancilla
/// system; an explicit `lambda` then fixes the coupling through
/// `λ = 4g²/γ_b`.
pub fn mean_fidelity(
    code: &Codeword,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    lambda: Option<f64>,
    taus: &[f64],
    solver: SolverChoice,
) -> Result<Vec<f64>> {
    match solver {
        SolverChoice::Analytic => {
            let lam = lambda.unwrap_or_else(|| params.generator_lambda());
            let s = analytic_solver_for(code.dim(), recovery, params, lam)?;
            mean_fidelity_analytic(code, &s, taus)
        }
        SolverChoice::Dense => {
            let p = match lambda {
                Some(lam) => params.matching_generator(lam)?,
                None => *params,
            };
            simulate_aqec_hybrid(code, recovery, &p, taus)
        }
    }
}

/// `½ + e^{-τ}/6 + e^{-τ/2}/3`: the `|0⟩, |1⟩` code under free decay.
pub fn breakeven_reference(tau: f64) -> f64 {
    0.5 + (-tau).exp() / 6.0 + (-tau / 2.0).exp() / 3.0
}

/// `G = (1 − F̄_be)/(1 − F̄)`.
pub fn gain(f_code: f64, f_be: f64) -> Result<f64> {
    if f_code >= 1.0 {
        return Err(Error::UndefinedGain(f_code));
    }
    Ok((1.0 - f_be) / (1.0 - f_code))
}

/// `F(θ, φ, τ)` on a regular grid; rows are θ, columns φ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlochScan {
    pub theta_step: f64,
    pub phi_step: f64,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl BlochScan {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Surface average with `sin θ` weights and trapezoid ends in θ.
    pub fn sphere_average(&self) -> f64 {
        let n = self.thetas.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (theta, row)) in self.thetas.iter().zip(&self.values).enumerate() {
            let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            let w = end * theta.sin();
            num += w * row.iter().sum::<f64>() / row.len() as f64;
            den += w;
        }
        num / den
    }
}

/// Default scan with `Δθ = π/10`, `Δφ = π/20`.
pub fn bloch_scan(code: &Codeword, solver: &AnalyticSolver, tau: f64) -> Result<BlochScan> {
    bloch_scan_steps(code, solver, tau, 10, 40)
}

/// Scan with `theta_divisions` intervals on `[0, π]` (poles included) and
/// `phi_points` samples on `[0, 2π)`.
pub fn bloch_scan_steps(
    code: &Codeword,
    solver: &AnalyticSolver,
    tau: f64,
    theta_divisions: usize,
    phi_points: usize,
) -> Result<BlochScan> {
    bloch_scan_by(code, theta_divisions, phi_points, |rho0| {
        solver.evolve_matrix(rho0.matrix(), tau)
    })
}

/// The same scan with every point integrated through the cavity–ancilla
/// system, for recoveries the structured solver cannot represent.
pub fn bloch_scan_dense(
    code: &Codeword,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    tau: f64,
    theta_divisions: usize,
    phi_points: usize,
) -> Result<BlochScan> {
    let model = hybrid_model(code.dim(), recovery, params)?.build();
    let opts = IntegratorOptions::default();
    bloch_scan_by(code, theta_divisions, phi_points, |rho0| {
        let mut out = evolve_reduced(&model, rho0, ANCILLA_DIM, &[tau], &opts)?;
        Ok(out.remove(0))
    })
}

/// Scan driver: `evolve` maps an initial state to the evolved matrix.
pub fn bloch_scan_by<F>(code: &Codeword, theta_divisions: usize, phi_points: usize, evolve: F) -> Result<BlochScan>
where
    F: Fn(&FockDensityMatrix) -> Result<CMatrix> + Sync,
{
    if theta_divisions == 0 || phi_points == 0 {
        return Err(Error::Argument(
            "scan needs at least one θ interval and one φ point".into(),
        ));
    }
    let theta_step = PI / theta_divisions as f64;
    let phi_step = 2.0 * PI / phi_points as f64;
    let thetas: Vec<f64> = (0..=theta_divisions).map(|i| i as f64 * theta_step).collect();
    let phis: Vec<f64> = (0..phi_points).map(|j| j as f64 * phi_step).collect();
    let values = thetas
        .par_iter()
        .map(|&th| {
            phis.par_iter()
                .map(|&ph| {
                    let rho0 = code.bloch_state(th, ph);
                    let rt = evolve(&rho0)?;
                    Ok(trace_product(rho0.matrix(), &rt).re)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlochScan {
        theta_step,
        phi_step,
        thetas,
        phis,
        values,
    })
}

/// `W(x, p)` sampled on a grid; `values[i][j]` is at `(xs[i], ps[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    fn cell(&self) -> f64 {
        let dx = if self.xs.len() > 1 {
            self.xs[1] - self.xs[0]
        } else {
            1.0
        };
        let dp = if self.ps.len() > 1 {
            self.ps[1] - self.ps[0]
        } else {
            1.0
        };
        dx * dp
    }

    /// `∫ W dx dp` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.cell()
    }

    /// `2π ∫ W_a W_b dx dp`, which equals `Tr(ρ_a ρ_b)` on a wide enough grid.
    pub fn overlap(&self, other: &WignerGrid) -> Result<f64> {
        if self.xs != other.xs || self.ps != other.ps {
            return Err(Error::Argument("Wigner grids differ".into()));
        }
        let s: f64 = self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| a * b)
            .sum();
        Ok(2.0 * PI * s * self.cell())
    }
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Fock-basis Wigner function with `a = (x + ip)/√2`, so the vacuum peaks
/// at `1/π` and `W(0,0) = Σ (−1)ⁿ ρ_nn / π`.
pub fn wigner(rho: &FockDensityMatrix, xs: &[f64], ps: &[f64]) -> Result<WignerGrid> {
    if xs.iter().chain(ps).any(|v| !v.is_finite()) {
        return Err(Error::Argument("Wigner grid must be finite".into()));
    }
    let m = rho.matrix();
    let dim = m.nrows();
    let values = xs
        .par_iter()
        .map(|&x| {
            ps.iter()
                .map(|&p| {
                    let alpha = C64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
                    let b = 4.0 * alpha.norm_sqr();
                    let mut w = 0.0;
                    for r in 0..dim {
                        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                        if m[(r, r)].norm() > 0.0 {
                            w += (m[(r, r)] * sign * laguerre(r, 0, b)).re;
                        }
                        let mut ratio = 1.0; // √(r!/c!)
                        let mut pow = C64::new(1.0, 0.0); // (2α)^{c−r}
                        for c in r + 1..dim {
                            ratio /= (c as f64).sqrt();
                            pow *= alpha * 2.0;
                            let v = m[(r, c)];
                            if v.norm() > 0.0 {
                                w += 2.0 * (v * sign * pow * ratio * laguerre(r, c - r, b)).re;
                            }
                        }
                    }
                    w * (-b / 2.0).exp() / PI
                })
                .collect()
        })
        .collect();
    Ok(WignerGrid {
        xs: xs.to_vec(),
        ps: ps.to_vec(),
        values,
    })
}

/// Generalized Laguerre polynomial `L_n^(k)(x)` by recurrence.
fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    match n {
        0 => 1.0,
        _ => {
            let (mut prev, mut cur) = (1.0, 1.0 + k - x);
            for j in 1..n {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}
