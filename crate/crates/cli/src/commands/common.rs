use aqec_core::codes::{codeword_from_action, ladder_from_action};
use aqec_core::dense::hybrid::{evolve_reduced, ANCILLA_DIM};
use aqec_core::dense::{hybrid_model, IntegratorOptions, LindbladModel};
use aqec_core::fidelity::analytic_solver_for;
use aqec_core::linalg::CMatrix;
use aqec_core::{
    mean_fidelity, named_code, AnalyticSolver, CodeName, Codeword, FockDensityMatrix, Recovery, SolverChoice,
    SystemParams,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// A code under study with its recovery.
#[derive(Debug, Clone)]
pub struct Subject {
    pub label: String,
    pub name: Option<CodeName>,
    pub code: Codeword,
    pub recovery: Option<Recovery>,
}

impl Subject {
    pub fn named(name: CodeName) -> Self {
        let nc = named_code(name);
        Self {
            label: name.to_string(),
            name: Some(name),
            code: nc.code,
            recovery: nc.recovery,
        }
    }

    /// The structured solver needs a ladder; anything else goes dense.
    pub fn solver(&self, requested: SolverChoice) -> SolverChoice {
        match (&self.recovery, requested) {
            (Some(Recovery::Operator(_)), SolverChoice::Analytic) => SolverChoice::Dense,
            _ => requested,
        }
    }

    pub fn mean_fidelity(
        &self,
        params: &SystemParams,
        lambda: Option<f64>,
        taus: &[f64],
        requested: SolverChoice,
    ) -> Result<Vec<f64>, CliError> {
        let solver = self.solver(requested);
        Ok(mean_fidelity(
            &self.code,
            self.recovery.as_ref(),
            params,
            lambda,
            taus,
            solver,
        )?)
    }
}

/// Codes from the CLI when given, else from the config, else `fallback`;
/// custom action codes are appended.
pub fn subjects(cli: &[CodeName], cfg: &ExperimentConfig, fallback: &[CodeName]) -> Result<Vec<Subject>, CliError> {
    let names: &[CodeName] = if !cli.is_empty() {
        cli
    } else if !cfg.codes.is_empty() {
        &cfg.codes
    } else if cfg.custom.is_empty() {
        fallback
    } else {
        &[]
    };
    let mut out: Vec<Subject> = names.iter().map(|&n| Subject::named(n)).collect();
    for c in &cfg.custom {
        let code = codeword_from_action(&c.action[..8])?;
        let ladder = ladder_from_action(&c.action[8..])?;
        out.push(Subject {
            label: c.label.clone(),
            name: None,
            code,
            recovery: Some(Recovery::Ladder(ladder)),
        });
    }
    Ok(out)
}

/// Evolves single states with whichever solver applies.
pub enum Evolver {
    Analytic(AnalyticSolver),
    Dense(LindbladModel),
}

impl Evolver {
    pub fn new(
        subject: &Subject,
        params: &SystemParams,
        lambda: Option<f64>,
        requested: SolverChoice,
    ) -> Result<Self, CliError> {
        let dim = subject.code.dim();
        Ok(match subject.solver(requested) {
            SolverChoice::Analytic => {
                let lam = lambda.unwrap_or_else(|| params.generator_lambda());
                Evolver::Analytic(analytic_solver_for(dim, subject.recovery.as_ref(), params, lam)?)
            }
            SolverChoice::Dense => {
                let p = match lambda {
                    Some(l) => params.matching_generator(l)?,
                    None => *params,
                };
                Evolver::Dense(hybrid_model(dim, subject.recovery.as_ref(), &p)?.build())
            }
        })
    }

    pub fn evolve(&self, rho: &FockDensityMatrix, tau: f64) -> Result<CMatrix, CliError> {
        Ok(match self {
            Evolver::Analytic(s) => s.evolve_matrix(rho.matrix(), tau)?,
            Evolver::Dense(m) => evolve_reduced(m, rho, ANCILLA_DIM, &[tau], &IntegratorOptions::default())?.remove(0),
        })
    }
}

/// Index of the grid point nearest to `t`.
pub fn nearest(grid: &[f64], t: f64) -> usize {
    grid.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(i, _)| i)
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}
