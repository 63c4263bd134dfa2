use aqec_core::fidelity::{linspace, wigner, CARDINAL_LABELS};
use aqec_core::io::Table;
use aqec_core::{breakeven_reference, cardinal_states, CodeName, FockDensityMatrix};
use serde::Serialize;

use super::common::{fmt_f, subjects, Evolver};
use super::Ctx;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

const DEFAULT_TAU: f64 = 4.2;

#[derive(Debug, Serialize)]
struct StateSummary {
    state: &'static str,
    integral_initial: f64,
    integral_evolved: f64,
    /// `2π ∫ W₀ W_τ` on the grid.
    overlap: f64,
    /// `Tr(ρ₀ ρ_τ)` from the matrices.
    direct_overlap: f64,
}

#[derive(Debug, Serialize)]
struct CodeSummary {
    code: String,
    solver: String,
    states: Vec<StateSummary>,
    mean_overlap: f64,
    mean_direct_overlap: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    tau: f64,
    breakeven_reference: f64,
    codes: Vec<CodeSummary>,
}

fn slug(label: &str) -> String {
    label.replace('+', "plus").replace('-', "minus")
}

pub fn run(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let subjects = subjects(&[], cfg, &[CodeName::Grl])?;
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let params = cfg.params.system()?;
    let axis = linspace(-cfg.wigner.extent, cfg.wigner.extent, cfg.wigner.points);
    let mut run = Run::new("wigner", cfg, ctx.out_dir(cfg).as_deref())?;

    let mut codes = Vec::new();
    for s in &subjects {
        let evolver = Evolver::new(s, &params, cfg.params.lambda, cfg.solver)?;
        let set = cardinal_states(&s.code);
        let mut states = Vec::new();
        for (label, rho0) in CARDINAL_LABELS.iter().zip(set.states()) {
            let rho_t = FockDensityMatrix::from_matrix_unchecked(evolver.evolve(rho0, tau)?);
            let w0 = wigner(rho0, &axis, &axis)?;
            let wt = wigner(&rho_t, &axis, &axis)?;
            for (when, grid) in [("0", &w0), ("tau", &wt)] {
                let mut table = Table::new(["x", "p", "w"]);
                for (x, row) in grid.xs.iter().zip(&grid.values) {
                    for (p, v) in grid.ps.iter().zip(row) {
                        table.push([fmt_f(*x), fmt_f(*p), fmt_f(*v)])?;
                    }
                }
                run.csv(&format!("wigner_{}_{}_{when}.csv", s.label, slug(label)), &table)?;
            }
            states.push(StateSummary {
                state: label,
                integral_initial: w0.integral(),
                integral_evolved: wt.integral(),
                overlap: w0.overlap(&wt)?,
                direct_overlap: rho0.overlap(&rho_t),
            });
        }
        let n = states.len() as f64;
        let mean_overlap = states.iter().map(|s| s.overlap).sum::<f64>() / n;
        let mean_direct_overlap = states.iter().map(|s| s.direct_overlap).sum::<f64>() / n;
        codes.push(CodeSummary {
            code: s.label.clone(),
            solver: s.solver(cfg.solver).to_string(),
            states,
            mean_overlap,
            mean_direct_overlap,
        });
    }

    let worst = codes
        .iter()
        .flat_map(|c| &c.states)
        .flat_map(|s| [s.integral_initial, s.integral_evolved])
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    run.check(
        "grid integrals",
        "1 ± 0.01",
        format!("max |∫W − 1| = {worst:.4}"),
        worst <= 0.01,
    );
    for (s, c) in subjects.iter().zip(&codes) {
        if s.name == Some(CodeName::Grl) {
            run.check_close("grl overlap fidelity", c.mean_overlap, 0.705, 0.02);
            run.check_close("grl direct fidelity", c.mean_direct_overlap, 0.705, 0.02);
        }
    }
    let be = breakeven_reference(tau);
    run.check_close("breakeven reference", be, 0.548, 0.02);

    let summary = Summary {
        tau,
        breakeven_reference: be,
        codes,
    };
    run.finish(summary, ctx.check)
}
