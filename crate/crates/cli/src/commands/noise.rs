use aqec_core::dense::{simulate_amplitude_damping, simulate_phase_damping, PhaseDampingParams};
use aqec_core::io::Table;
use aqec_core::{breakeven_reference, CodeName, SolverChoice};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use super::common::{fmt_f, subjects, Subject};
use super::Ctx;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    Phase,
    Amplitude,
}

const MAX_FINAL_LOSS: f64 = 0.012;
const DIP_OMEGA: f64 = 256.0;

#[derive(Debug, Serialize)]
struct PhasePoint {
    code: String,
    omega_c: f64,
    s: f64,
    /// Noise-free minus noisy fidelity at the last grid point.
    final_loss: f64,
    final_loss_s_in_phase: f64,
    /// Largest noise-free minus noisy gap over the grid.
    max_dip: f64,
}

#[derive(Debug, Serialize)]
struct AmplitudePoint {
    code: String,
    case: String,
    gamma0: f64,
    detuning: f64,
    width: f64,
    final_fidelity: Option<f64>,
    final_loss: Option<f64>,
    error: Option<String>,
}

fn noise_free(s: &Subject, cfg: &ExperimentConfig, taus: &[f64]) -> Result<Vec<f64>, CliError> {
    s.mean_fidelity(&cfg.params.system()?, None, taus, SolverChoice::Dense)
}

pub fn run(ctx: &Ctx, cfg: &ExperimentConfig, kind: NoiseKind) -> Result<(), CliError> {
    match kind {
        NoiseKind::Phase => phase(ctx, cfg),
        NoiseKind::Amplitude => amplitude(ctx, cfg),
    }
}

fn phase(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let subjects = subjects(&[], cfg, &[CodeName::Grl])?;
    let taus = cfg.taus.points()?;
    let params = cfg.params.system()?;
    let mut run = Run::new("noise-phase", cfg, ctx.out_dir(cfg).as_deref())?;

    let mut points = Vec::new();
    for s in &subjects {
        let clean = noise_free(s, cfg, &taus)?;
        let grid: Vec<(f64, f64)> = cfg
            .noise
            .s_values
            .iter()
            .flat_map(|&sv| cfg.noise.omega_c.iter().map(move |&w| (w, sv)))
            .collect();
        let curves: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = grid
            .par_iter()
            .map(|&(w, sv)| {
                let p = PhaseDampingParams::new(w, sv)?;
                let variant = PhaseDampingParams { s_in_phase: true, ..p };
                let f = simulate_phase_damping(&s.code, s.recovery.as_ref(), &params, &p, &taus)?;
                let fv = simulate_phase_damping(&s.code, s.recovery.as_ref(), &params, &variant, &taus)?;
                Ok((w, sv, f, fv))
            })
            .collect::<Result<_, aqec_core::Error>>()?;
        for (w, sv, f, fv) in curves {
            let mut table = Table::new(["tau", "fidelity", "fidelity_s_in_phase", "noise_free"]);
            for i in 0..taus.len() {
                table.push([fmt_f(taus[i]), fmt_f(f[i]), fmt_f(fv[i]), fmt_f(clean[i])])?;
            }
            run.csv(&format!("phase_{}_wc{w}_s{sv}.csv", s.label), &table)?;
            let last = taus.len() - 1;
            points.push(PhasePoint {
                code: s.label.clone(),
                omega_c: w,
                s: sv,
                final_loss: clean[last] - f[last],
                final_loss_s_in_phase: clean[last] - fv[last],
                max_dip: clean
                    .iter()
                    .zip(&f)
                    .map(|(c, v)| c - v)
                    .fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }

    let worst = points.iter().map(|p| p.final_loss).fold(0.0, f64::max);
    run.check(
        "worst final loss",
        format!("≤ {MAX_FINAL_LOSS}"),
        format!("{worst:.4}"),
        worst <= MAX_FINAL_LOSS,
    );
    for s in &subjects {
        for &sv in &cfg.noise.s_values {
            let peak = points
                .iter()
                .filter(|p| p.code == s.label && p.s == sv)
                .max_by(|a, b| a.max_dip.total_cmp(&b.max_dip));
            if let Some(p) = peak {
                run.check(
                    format!("{} s={sv} largest dip", s.label),
                    format!("ω_c = {DIP_OMEGA}"),
                    format!("ω_c = {}", p.omega_c),
                    p.omega_c == DIP_OMEGA,
                );
            }
        }
    }
    run.finish(points, ctx.check)
}

fn amplitude(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let subjects = subjects(&[], cfg, &[CodeName::Grl])?;
    let taus = cfg.taus.points()?;
    let params = cfg.params.system()?;
    let mut run = Run::new("noise-amplitude", cfg, ctx.out_dir(cfg).as_deref())?;

    let mut points = Vec::new();
    for s in &subjects {
        let clean = noise_free(s, cfg, &taus)?;
        let grid: Vec<(&str, aqec_core::dense::AmplitudeDampingParams)> = cfg
            .noise
            .amplitude
            .iter()
            .flat_map(|c| c.points().map(move |p| (c.label.as_str(), p)))
            .collect();
        let curves: Vec<_> = grid
            .par_iter()
            .map(|(label, p)| {
                (
                    label,
                    p,
                    simulate_amplitude_damping(&s.code, s.recovery.as_ref(), &params, p, &taus),
                )
            })
            .collect();
        for (label, p, result) in curves {
            let mut point = AmplitudePoint {
                code: s.label.clone(),
                case: label.to_string(),
                gamma0: p.gamma0,
                detuning: p.detuning,
                width: p.width,
                final_fidelity: None,
                final_loss: None,
                error: None,
            };
            match result {
                Ok(f) => {
                    let mut table = Table::new(["tau", "fidelity", "noise_free", "breakeven"]);
                    for i in 0..taus.len() {
                        table.push([
                            fmt_f(taus[i]),
                            fmt_f(f[i]),
                            fmt_f(clean[i]),
                            fmt_f(breakeven_reference(taus[i])),
                        ])?;
                    }
                    run.csv(&format!("amplitude_{}_{label}_g{}.csv", s.label, p.gamma0), &table)?;
                    let last = taus.len() - 1;
                    point.final_fidelity = Some(f[last]);
                    point.final_loss = Some(clean[last] - f[last]);
                }
                // A vanishing reservoir function is a property of the point, not a failed run.
                Err(e @ aqec_core::Error::Singularity(_)) => point.error = Some(e.to_string()),
                Err(e) => return Err(e.into()),
            }
            points.push(point);
        }
    }

    for label in ["wide", "narrow"] {
        let present = points.iter().any(|p| p.case == label);
        run.check(format!("case {label}"), "present", present.to_string(), present);
    }
    run.finish(points, ctx.check)
}
