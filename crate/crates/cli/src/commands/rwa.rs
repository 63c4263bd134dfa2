use aqec_core::dense::rwa::unit_grl_ladder;
use aqec_core::dense::simulate_rwa_three_mode;
use aqec_core::io::Table;
use aqec_core::{named_code, CodeName};

use super::common::{fmt_f, nearest};
use super::Ctx;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::run::Run;

const CHECK_MS: f64 = 3.0;

pub fn run(ctx: &Ctx, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let grl = named_code(CodeName::Grl);
    let mut run = Run::new("rwa", cfg, ctx.out_dir(cfg).as_deref())?;
    let result = simulate_rwa_three_mode(&grl.code, &unit_grl_ladder(), &cfg.rwa.model, &cfg.rwa.times_ms)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let mut table = Table::new(["time_ms", "tau", "fidelity", "breakeven", "gain"]);
    for i in 0..result.times_ms.len() {
        table.push([
            fmt_f(result.times_ms[i]),
            fmt_f(result.taus[i]),
            fmt_f(result.fidelity[i]),
            fmt_f(result.breakeven[i]),
            result.gain[i].map_or_else(|| "nan".into(), fmt_f),
        ])?;
    }
    run.csv("rwa.csv", &table)?;

    if !result.times_ms.is_empty() {
        let i = nearest(&result.times_ms, CHECK_MS);
        if (result.times_ms[i] - CHECK_MS).abs() < 1e-9 {
            match result.gain[i] {
                Some(g) => run.check_close("gain at 3 ms", g, 2.64, 0.15),
                None => run.check("gain at 3 ms", "2.64 ± 0.15", "undefined", false),
            }
        }
    }
    run.finish(result, ctx.check)
}
