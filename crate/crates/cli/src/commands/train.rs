use std::path::Path;

use aqec_core::io::Table;
use aqec_core::rl::curriculum::save_checkpoint;
use aqec_core::rl::{run_curriculum, BestCode, EpisodeRecord, JsonlWriter, TrainConfig};
use serde::Serialize;

use super::common::fmt_f;
use super::Ctx;
use crate::error::CliError;
use crate::run::Run;

#[derive(Serialize)]
struct EpisodeLine<'a> {
    phase: u8,
    episode: usize,
    record: &'a EpisodeRecord,
}

#[derive(Debug, Serialize)]
struct SeedSummary {
    seed: u64,
    episodes: usize,
    updates: usize,
    best: Option<BestCode>,
}

pub fn load(path: Option<&Path>) -> Result<TrainConfig, CliError> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            Ok(TrainConfig::from_json(&text)?)
        }
    }
}

pub fn run(ctx: &Ctx, cfg: &TrainConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let mut run = Run::new("train", cfg, ctx.out.as_deref())?;
    let mut seeds = Vec::new();
    for &seed in &cfg.seeds {
        let log = format!("episodes_seed{seed}.jsonl");
        let mut writer = JsonlWriter::create(&run.out.join(&log))?;
        let mut counters = [0usize; 2];
        let art = run_curriculum(cfg, seed, &mut |phase, record| {
            let slot = &mut counters[usize::from(phase - 1)];
            let line = EpisodeLine {
                phase,
                episode: *slot,
                record,
            };
            *slot += 1;
            writer.write(&line)
        })?;
        writer.flush()?;
        run.files.push(log);

        let ckpt = format!("checkpoint_seed{seed}.bin");
        save_checkpoint(&run.out.join(&ckpt), &art.policy, cfg)?;
        run.files.push(ckpt);

        let mut table = Table::new([
            "phase",
            "episode",
            "steps",
            "total_reward",
            "mean_reward",
            "final_epsilon",
        ]);
        for s in &art.summaries {
            table.push([
                s.phase.to_string(),
                s.episode.to_string(),
                s.steps.to_string(),
                fmt_f(s.total_reward),
                fmt_f(s.mean_reward),
                s.final_epsilon.map_or_else(|| "nan".into(), fmt_f),
            ])?;
        }
        run.csv(&format!("rewards_seed{seed}.csv"), &table)?;
        seeds.push(SeedSummary {
            seed,
            episodes: art.summaries.len(),
            updates: art.updates.len(),
            best: art.best,
        });
    }

    let best = seeds
        .iter()
        .filter_map(|s| s.best.as_ref().map(|b| b.epsilon))
        .fold(f64::NEG_INFINITY, f64::max);
    run.check("best margin over breakeven", "> 0", format!("{best:.4}"), best > 0.0);
    run.finish(seeds, ctx.check)
}
