//! Cavity ⊗ ancilla dynamics with the engineered exchange Hamiltonian
//! `H = g(L_eng σ₊ + L_eng† σ₋)`.
//!
//! Ancilla basis: index 0 is the ground state, 1 the excited state. The
//! composite index of `|n⟩ ⊗ |q⟩` is `2n + q`.

use rayon::prelude::*;

use super::integrator::{integrate_ode, IntegratorOptions};
use super::model::{Coefficient, LindbladModel};
use crate::codes::{Codeword, Recovery};
use crate::error::{Error, Result};
use crate::fidelity::cardinal_states;
use crate::fock::{FockDensityMatrix, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};
use crate::linalg::{
    annihilation, hermitian_eigenvalues, hermiticity_defect, kron, trace, trace_product, CMatrix, C64,
};
use crate::params::SystemParams;

pub const ANCILLA_DIM: usize = 2;

/// `σ₋ = |g⟩⟨e|`.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

/// `σ_z = |e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_z() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(-1.0, 0.0),
        C64::new(1.0, 0.0),
    ]))
}

/// A density matrix on cavity ⊗ ancilla (⊗ readout).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    cavity_dim: usize,
    ancilla_dim: usize,
    readout_dim: Option<usize>,
    entries: CMatrix,
}

impl HybridState {
    pub fn new(cavity_dim: usize, readout_dim: Option<usize>, entries: CMatrix) -> Result<Self> {
        let total = cavity_dim * ANCILLA_DIM * readout_dim.unwrap_or(1);
        if entries.nrows() != total || entries.ncols() != total {
            return Err(Error::Structural(format!(
                "hybrid state must be {total}x{total}, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if hermiticity_defect(&entries) > HERMITIAN_TOL {
            return Err(Error::InvalidState("hybrid state is not Hermitian".into()));
        }
        if (trace(&entries).re - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState("hybrid state trace deviates from 1".into()));
        }
        if hermitian_eigenvalues(&entries).into_iter().any(|w| w < -PSD_TOL) {
            return Err(Error::InvalidState("hybrid state has a negative eigenvalue".into()));
        }
        Ok(Self {
            cavity_dim,
            ancilla_dim: ANCILLA_DIM,
            readout_dim,
            entries,
        })
    }

    /// `ρ_a ⊗ |g⟩⟨g|` (⊗ `|0⟩⟨0|` for the readout).
    pub fn with_ground_ancilla(rho: &FockDensityMatrix, readout_dim: Option<usize>) -> Self {
        let env_dim = ANCILLA_DIM * readout_dim.unwrap_or(1);
        let mut g = CMatrix::zeros(env_dim, env_dim);
        g[(0, 0)] = C64::new(1.0, 0.0);
        Self {
            cavity_dim: rho.dim(),
            ancilla_dim: ANCILLA_DIM,
            readout_dim,
            entries: kron(rho.matrix(), &g),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn cavity_dim(&self) -> usize {
        self.cavity_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn readout_dim(&self) -> Option<usize> {
        self.readout_dim
    }

    pub fn reduced_cavity(&self) -> CMatrix {
        partial_trace_env(&self.entries, self.cavity_dim)
    }
}

/// Traces out everything but the leading cavity factor.
pub fn partial_trace_env(rho: &CMatrix, cavity_dim: usize) -> CMatrix {
    let env = rho.nrows() / cavity_dim;
    CMatrix::from_fn(cavity_dim, cavity_dim, |i, j| {
        (0..env).map(|q| rho[(i * env + q, j * env + q)]).sum()
    })
}

/// Lindbladian of the cavity–ancilla system without extra noise:
/// `H = g(L_eng σ₊ + h.c.)`, collapses `√γ_a a`, `√γ_a2 a²`, `√γ_b σ₋`.
///
/// Returned unbuilt so that noise terms can be appended.
pub fn hybrid_model(dim: usize, recovery: Option<&Recovery>, params: &SystemParams) -> Result<LindbladModel> {
    params.validate()?;
    let id_c = CMatrix::identity(dim, dim);
    let id_q = CMatrix::identity(ANCILLA_DIM, ANCILLA_DIM);
    let sm = kron(&id_c, &sigma_minus());
    let a = annihilation(dim);
    let mut model = LindbladModel::new(dim * ANCILLA_DIM);

    if let Some(rec) = recovery {
        if rec.dim() != dim {
            return Err(Error::Structural(format!(
                "recovery spans {} levels, code has {dim}",
                rec.dim()
            )));
        }
        if params.g_ratio > 0.0 {
            let l = kron(&rec.engineered_operator()?, &id_q);
            let h = &l * sm.adjoint() + l.adjoint() * &sm;
            model.add_hamiltonian(Coefficient::Constant(params.g_ratio), &h)?;
        }
    }
    model.add_collapse(Coefficient::Constant(1.0), &kron(&a, &id_q))?;
    if params.eta2 > 0.0 {
        model.add_collapse(Coefficient::Constant(params.eta2), &kron(&(&a * &a), &id_q))?;
    }
    model.add_collapse(Coefficient::Constant(params.gamma_b_ratio), &sm)?;
    Ok(model)
}

/// Evolves `ρ_a ⊗ |g⟩⟨g|` and returns the reduced cavity state at each time.
pub fn evolve_reduced(
    model: &LindbladModel,
    rho: &FockDensityMatrix,
    env_dim: usize,
    taus: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<CMatrix>> {
    let mut ground = CMatrix::zeros(env_dim, env_dim);
    ground[(0, 0)] = C64::new(1.0, 0.0);
    let full = kron(rho.matrix(), &ground);
    if full.nrows() != model.dim() {
        return Err(Error::Structural(format!(
            "state dimension {} does not match model dimension {}",
            full.nrows(),
            model.dim()
        )));
    }
    let mut scratch = model.scratch();
    let traj = integrate_ode(|t, y, dy| model.rhs_into(t, y, dy, &mut scratch), &full, taus, opts)?;
    Ok(traj.states.iter().map(|s| partial_trace_env(s, rho.dim())).collect())
}

/// Six-state mean fidelity `F̄(τ)` for a prepared model.
pub fn mean_fidelity_with_model(
    code: &Codeword,
    model: &LindbladModel,
    env_dim: usize,
    taus: &[f64],
    opts: &IntegratorOptions,
) -> Result<Vec<f64>> {
    let cards = cardinal_states(code);
    let per_state: Vec<Vec<f64>> = cards
        .states()
        .par_iter()
        .map(|rho0| {
            let states = evolve_reduced(model, rho0, env_dim, taus, opts)?;
            Ok(states.iter().map(|r| trace_product(rho0.matrix(), r).re).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..taus.len())
        .map(|k| per_state.iter().map(|f| f[k]).sum::<f64>() / 6.0)
        .collect())
}

/// `F̄(τ)` from the full cavity–ancilla integration.
pub fn simulate_aqec_hybrid(
    code: &Codeword,
    recovery: Option<&Recovery>,
    params: &SystemParams,
    taus: &[f64],
) -> Result<Vec<f64>> {
    let model = hybrid_model(code.dim(), recovery, params)?.build();
    mean_fidelity_with_model(code, &model, ANCILLA_DIM, taus, &IntegratorOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{named_code, CodeName};
    use crate::fidelity::breakeven_reference;
    use crate::linalg::max_abs_diff;

    #[test]
    fn zero_time_fidelity_is_one() {
        let grl = named_code(CodeName::Grl);
        let f = simulate_aqec_hybrid(&grl.code, grl.recovery.as_ref(), &SystemParams::standard(0.012), &[0.0]).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_breakeven_matches_closed_form() {
        let be = named_code(CodeName::Breakeven);
        let params = SystemParams::new(1800.0, 0.0, 0.0).unwrap();
        let taus = [0.3, 0.6, 1.5];
        let f = simulate_aqec_hybrid(&be.code, None, &params, &taus).unwrap();
        for (t, v) in taus.iter().zip(f) {
            assert!((v - breakeven_reference(*t)).abs() < 1e-8, "τ={t}: {v}");
        }
    }

    #[test]
    fn exchange_moves_three_toward_four_excited() {
        let grl = named_code(CodeName::Grl);
        let params = SystemParams::new(0.0, 0.0, 600.0).unwrap();
        let model = hybrid_model(8, grl.recovery.as_ref(), &params).unwrap().build();
        let mut rho = CMatrix::zeros(16, 16);
        rho[(6, 6)] = C64::new(1.0, 0.0); // |3, g⟩
        let d = model.rhs(0.0, &rho).unwrap();
        // −i[H, ρ] has (|4,e⟩, |3,g⟩) element −i·g·⟨4|L|3⟩ = −i·600·0.5.
        assert!((d[(9, 6)] - C64::new(0.0, -300.0)).norm() < 1e-9);
        assert!((d[(6, 9)] - C64::new(0.0, 300.0)).norm() < 1e-9);
        // Loss from a alone drains |3,g⟩ at rate 3.
        assert!((d[(6, 6)].re + 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho = FockDensityMatrix::fock(3, 2).unwrap();
        let h = HybridState::with_ground_ancilla(&rho, None);
        assert!(max_abs_diff(&h.reduced_cavity(), rho.matrix()) < 1e-15);
        assert!(HybridState::new(3, None, h.matrix().clone()).is_ok());
        let r = HybridState::with_ground_ancilla(&rho, Some(2));
        assert_eq!(r.matrix().nrows(), 12);
        assert!(max_abs_diff(&r.reduced_cavity(), rho.matrix()) < 1e-15);
    }
}
