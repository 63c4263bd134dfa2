use aqec_core::benchmark::{run_benchmark, WORKLOAD_DT, WORKLOAD_ETA, WORKLOAD_STEPS};
use aqec_core::io::Table;
use serde::Serialize;

use super::common::fmt_f;
use super::Ctx;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

const MAX_JITTER: f64 = 0.2;
const MIN_SPEEDUP: f64 = 5.0;

#[derive(Debug, Serialize)]
struct Summary {
    workload: String,
    repeats: usize,
    rows: Vec<aqec_core::benchmark::BenchmarkRow>,
}

pub fn run(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dims = &cfg.benchmark.dims;
    let mut run = Run::new("benchmark", cfg, ctx.out_dir(cfg).as_deref())?;
    let rows = run_benchmark(dims, cfg.benchmark.repeats)?;

    let mut table = Table::new([
        "dim",
        "analytic_secs",
        "dense_secs",
        "speedup",
        "analytic_jitter",
        "dense_jitter",
        "max_deviation",
    ]);
    for r in &rows {
        table.push([
            r.dim.to_string(),
            fmt_f(r.analytic_secs),
            fmt_f(r.dense_secs),
            fmt_f(r.speedup),
            fmt_f(r.analytic_jitter),
            fmt_f(r.dense_jitter),
            fmt_f(r.max_deviation),
        ])?;
    }
    run.csv("benchmark.csv", &table)?;

    for n in [8, 16, 32] {
        let present = rows.iter().any(|r| r.dim == n);
        run.check(format!("row N={n}"), "present", present.to_string(), present);
    }
    if let Some(r) = rows.iter().find(|r| r.dim == 32) {
        run.check(
            "speedup N=32",
            format!("≥ {MIN_SPEEDUP}"),
            format!("{:.2}", r.speedup),
            r.speedup >= MIN_SPEEDUP,
        );
    }
    let jitter = rows
        .iter()
        .map(|r| r.analytic_jitter.max(r.dense_jitter))
        .fold(0.0, f64::max);
    run.check(
        "repeat jitter",
        format!("≤ {MAX_JITTER}"),
        format!("{jitter:.3}"),
        jitter <= MAX_JITTER,
    );
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        if last.dim > first.dim {
            let analytic = last.analytic_secs / first.analytic_secs;
            let dense = last.dense_secs / first.dense_secs;
            run.check(
                "dense grows faster than analytic",
                "dense factor > analytic factor",
                format!("{dense:.1} vs {analytic:.1}"),
                dense > analytic,
            );
        }
    }

    let summary = Summary {
        workload: format!("GRL, η = {WORKLOAD_ETA}, {WORKLOAD_STEPS} steps of {WORKLOAD_DT}"),
        repeats: cfg.benchmark.repeats,
        rows,
    };
    run.finish(summary, ctx.check)
}
