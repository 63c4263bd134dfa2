//! Static code analysis and the ladder-weight robustness scan.

use aqec_core::codes::{hamiltonian_distances, kl_check, xi_family, CodeAnalysis, KLReport};
use aqec_core::fidelity::mean_fidelity_analytic;
use aqec_core::io::Table;
use aqec_core::{named_code, AnalyticSolver, CodeName};
use serde::Serialize;

use super::common::{fmt_f, subjects};
use super::{Ctx, CALIBRATION_LAMBDA};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

const MAX_PAIRWISE: f64 = 0.01;

#[derive(Debug, Serialize)]
struct XiSummary {
    lambda: f64,
    xis: Vec<f64>,
    /// Largest `|F_ξi(τ) − F_ξj(τ)|` over all pairs and grid points.
    max_pairwise: f64,
}

pub fn xi_scan(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let grl = named_code(CodeName::Grl);
    let taus = cfg.taus.points()?;
    let params = cfg.params.system()?;
    let lambda = cfg.params.lambda.unwrap_or(CALIBRATION_LAMBDA);
    let mut run = Run::new("xi-scan", cfg, ctx.out_dir(cfg).as_deref())?;

    let curves = cfg
        .xis
        .iter()
        .map(|&xi| {
            let solver = AnalyticSolver::new(grl.code.dim(), &params.channels(), Some(&xi_family(xi)?), lambda)?;
            mean_fidelity_analytic(&grl.code, &solver, &taus)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut headers = vec!["tau".to_string()];
    headers.extend(cfg.xis.iter().map(|x| format!("xi_{x}")));
    let mut table = Table::new(headers);
    for (i, &t) in taus.iter().enumerate() {
        let mut row = vec![fmt_f(t)];
        row.extend(curves.iter().map(|c| fmt_f(c[i])));
        table.push(row)?;
    }
    run.csv("xi_scan.csv", &table)?;

    let mut worst: f64 = 0.0;
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    run.check(
        "max pairwise deviation",
        format!("< {MAX_PAIRWISE}"),
        format!("{worst:.4}"),
        worst < MAX_PAIRWISE,
    );
    let summary = XiSummary {
        lambda,
        xis: cfg.xis.clone(),
        max_pairwise: worst,
    };
    run.finish(summary, ctx.check)
}

#[derive(Debug, Serialize)]
struct KlEntry {
    code: String,
    satisfied: bool,
    report: KLReport,
    analysis: CodeAnalysis,
}

pub fn kl(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let subjects = subjects(&[], cfg, &[CodeName::Grl])?;
    let mut run = Run::new("kl", cfg, ctx.out_dir(cfg).as_deref())?;
    let entries: Vec<KlEntry> = subjects
        .iter()
        .map(|s| {
            let report = kl_check(&s.code, &cfg.kl_errors);
            KlEntry {
                code: s.label.clone(),
                satisfied: report.satisfied(),
                analysis: hamiltonian_distances(&s.code, s.recovery.as_ref()),
                report,
            }
        })
        .collect();
    run.json("kl.json", &entries)?;
    for (s, e) in subjects.iter().zip(&entries) {
        if s.name == Some(CodeName::Grl) {
            let n = e.report.flip_violations.len();
            run.check("grl flip violations", "0", n.to_string(), n == 0);
        }
    }
    run.finish(entries, ctx.check)
}
