use aqec_core::fidelity::{bloch_scan_by, BlochScan};
use aqec_core::io::Table;
use aqec_core::CodeName;
use serde::Serialize;

use super::common::{fmt_f, subjects, Evolver};
use super::{Ctx, CALIBRATION_LAMBDA};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

const DEFAULT_TAU: f64 = 0.6;

#[derive(Debug, Serialize)]
struct ScanSummary {
    code: String,
    solver: String,
    min: f64,
    max: f64,
    sphere_average: f64,
    /// Spread of the θ = 0 row, which should be a single point.
    pole_spread: f64,
    argmax_theta: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    tau: f64,
    lambda: f64,
    theta_divisions: usize,
    phi_points: usize,
    codes: Vec<ScanSummary>,
}

fn argmax_theta(scan: &BlochScan) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (theta, row) in scan.thetas.iter().zip(&scan.values) {
        for &v in row {
            if v > best.0 {
                best = (v, *theta);
            }
        }
    }
    best.1
}

pub fn run(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let subjects = subjects(&[], cfg, &[CodeName::Grl, CodeName::Breakeven])?;
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let lambda = cfg.params.lambda.unwrap_or(CALIBRATION_LAMBDA);
    let params = cfg.params.system()?;
    let mut run = Run::new("scan-bloch", cfg, ctx.out_dir(cfg).as_deref())?;

    let mut codes = Vec::new();
    for s in &subjects {
        let evolver = Evolver::new(s, &params, Some(lambda), cfg.solver)?;
        let scan = bloch_scan_by(&s.code, cfg.scan.theta_divisions, cfg.scan.phi_points, |rho| {
            evolver
                .evolve(rho, tau)
                .map_err(|e| aqec_core::Error::Argument(e.to_string()))
        })?;
        let mut table = Table::new(["theta", "phi", "fidelity"]);
        for (theta, row) in scan.thetas.iter().zip(&scan.values) {
            for (phi, v) in scan.phis.iter().zip(row) {
                table.push([fmt_f(*theta), fmt_f(*phi), fmt_f(*v)])?;
            }
        }
        run.csv(&format!("scan_{}.csv", s.label), &table)?;
        let pole = &scan.values[0];
        let spread =
            pole.iter().copied().fold(f64::NEG_INFINITY, f64::max) - pole.iter().copied().fold(f64::INFINITY, f64::min);
        codes.push(ScanSummary {
            code: s.label.clone(),
            solver: s.solver(cfg.solver).to_string(),
            min: scan.min(),
            max: scan.max(),
            sphere_average: scan.sphere_average(),
            pole_spread: spread,
            argmax_theta: argmax_theta(&scan),
        });
    }

    for (s, c) in subjects.iter().zip(&codes) {
        run.check(
            format!("{} θ=0 row constant", s.label),
            "spread ≤ 1e-10",
            format!("{:.2e}", c.pole_spread),
            c.pole_spread <= 1e-10,
        );
        match s.name {
            Some(CodeName::Grl) => run.check("grl min", "≥ 0.90", format!("{:.4}", c.min), c.min >= 0.90),
            Some(CodeName::Breakeven) => run.check(
                "breakeven max at θ=0",
                "θ = 0",
                format!("θ = {:.4}", c.argmax_theta),
                c.argmax_theta == 0.0,
            ),
            _ => {}
        }
    }

    let summary = Summary {
        tau,
        lambda,
        theta_divisions: cfg.scan.theta_divisions,
        phi_points: cfg.scan.phi_points,
        codes,
    };
    run.finish(summary, ctx.check)
}
