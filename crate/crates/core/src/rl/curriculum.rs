//! Two-phase curriculum driver, training configuration, checkpoints and
//! episode logs.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::env::{AqecEnv, CurriculumSchedule, EpisodeRecord, RewardConfig, RewardMode, StepRecord, Termination};
use super::env::{ACTION_FOCK, OBS_DIM};
use super::nn::Adam;
use super::policy::{ActorCritic, NetworkConfig, Sample};
use super::ppo::{
    compute_advantages, discounted_returns, new_optimizer, ppo_update, PpoConfig, Transition, UpdateStats,
};
use crate::codes::{codeword_from_action, ladder_from_action, Recovery};
use crate::error::{Error, Result};
use crate::fidelity::{mean_fidelity, SolverChoice};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub schedule: CurriculumSchedule,
    pub reward: RewardConfig,
    pub network: NetworkConfig,
    pub ppo: PpoConfig,
    pub seeds: Vec<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: CurriculumSchedule::default(),
            reward: RewardConfig::default(),
            network: NetworkConfig::default(),
            ppo: PpoConfig::default(),
            seeds: vec![0],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.reward.validate()?;
        self.network.validate()?;
        self.ppo.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).into()
    }

    pub fn hash_hex(&self) -> String {
        self.hash().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub phase: u8,
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub mean_reward: f64,
    pub final_epsilon: Option<f64>,
    pub termination: Option<Termination>,
}

/// Best code seen so far, ranked by the final-step margin over breakeven of
/// episodes that reached their horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCode {
    pub phase: u8,
    pub episode: usize,
    pub epsilon: f64,
    pub tau: f64,
    pub zeta: [f64; 3],
    pub first_action: Vec<f64>,
    pub last_action: Vec<f64>,
    pub zero_logical: Vec<f64>,
    pub one_logical: Vec<f64>,
    /// Ladder of the final step, normalized to `Λ = 1`.
    pub ladder: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainingArtifact {
    pub seed: u64,
    pub policy: ActorCritic,
    pub summaries: Vec<EpisodeSummary>,
    pub updates: Vec<UpdateStats>,
    pub best: Option<BestCode>,
}

fn episode_seed(seed: u64, phase: u8, episode: usize) -> u64 {
    let mut x = seed ^ ((phase as u64) << 56) ^ (episode as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

struct Rollout {
    record: EpisodeRecord,
    samples: Vec<(Vec<f64>, Sample)>,
    rewards: Vec<f64>,
}

fn rollout(
    policy: &ActorCritic,
    schedule: &CurriculumSchedule,
    max_steps: usize,
    reward: RewardConfig,
    seed: u64,
) -> Result<Rollout> {
    let mut env = AqecEnv::reset(schedule, max_steps, reward, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut out = Rollout {
        record: EpisodeRecord {
            zeta: env.zeta(),
            steps: Vec::new(),
            termination: None,
        },
        samples: Vec::new(),
        rewards: Vec::new(),
    };
    while !env.is_done() {
        let obs = env.observation().to_vec();
        let s = policy.sample(&obs, &mut rng)?;
        let (_, r, _, info) = env.step(&s.action)?;
        out.record.steps.push(StepRecord {
            observation: obs.clone(),
            action: s.action.clone(),
            reward: r,
            mean_fidelity: info.mean_fidelity,
            breakeven: info.breakeven,
        });
        out.record.termination = info.termination;
        out.rewards.push(r);
        out.samples.push((obs, s));
    }
    Ok(out)
}

fn best_from(record: &EpisodeRecord, phase: u8, episode: usize, step_tau: f64) -> Option<BestCode> {
    if record.termination != Some(Termination::Horizon) {
        return None;
    }
    let eps = record.final_epsilon()?;
    let first = &record.steps.first()?.action;
    let last = &record.steps.last()?.action;
    let code = codeword_from_action(&first[..ACTION_FOCK]).ok()?;
    let ladder = ladder_from_action(&last[ACTION_FOCK..]).ok()?.normalized().ok()?;
    Some(BestCode {
        phase,
        episode,
        epsilon: eps,
        tau: record.steps.len() as f64 * step_tau,
        zeta: record.zeta,
        first_action: first.clone(),
        last_action: last.clone(),
        zero_logical: code.zero_logical().iter().map(|z| z.re).collect(),
        one_logical: code.one_logical().iter().map(|z| z.re).collect(),
        ladder: ladder.coeffs().to_vec(),
    })
}

/// Runs both curriculum phases for one seed. `sink` receives every episode
/// record (phase, record) in order.
pub fn run_curriculum(
    cfg: &TrainConfig,
    seed: u64,
    sink: &mut dyn FnMut(u8, &EpisodeRecord) -> Result<()>,
) -> Result<TrainingArtifact> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = ActorCritic::new(cfg.network, &mut rng)?;
    let mut opt: Adam = new_optimizer(&policy, &cfg.ppo);
    let mut art = TrainingArtifact {
        seed,
        policy: policy.clone(),
        summaries: Vec::new(),
        updates: Vec::new(),
        best: None,
    };
    let delta = cfg.reward.mode == RewardMode::DeltaFidelity;
    let phases = [
        (
            1u8,
            cfg.schedule.phase1_episodes,
            if delta {
                RewardMode::DeltaFidelity
            } else {
                RewardMode::Phase1
            },
        ),
        (
            2u8,
            cfg.schedule.phase2_episodes,
            if delta {
                RewardMode::DeltaFidelity
            } else {
                RewardMode::Phase2
            },
        ),
    ];
    for (phase, episodes, mode) in phases {
        let reward = cfg.reward.with_mode(mode);
        let mut start = 0;
        while start < episodes {
            let end = (start + cfg.ppo.episodes_per_update).min(episodes);
            let snapshot = &policy;
            let rollouts: Vec<Rollout> = (start..end)
                .into_par_iter()
                .map(|e| {
                    let k = if phase == 1 {
                        cfg.schedule.phase1_max_steps
                    } else {
                        cfg.schedule.phase2_steps(e)
                    };
                    rollout(snapshot, &cfg.schedule, k, reward, episode_seed(seed, phase, e))
                })
                .collect::<Result<_>>()?;

            let mut buffer = Vec::new();
            for (offset, ro) in rollouts.into_iter().enumerate() {
                let e = start + offset;
                sink(phase, &ro.record)?;
                let values: Vec<f64> = ro.samples.iter().map(|(_, s)| s.value).collect();
                let adv = compute_advantages(&ro.rewards, &values, cfg.ppo.discount);
                let ret = discounted_returns(&ro.rewards, cfg.ppo.discount);
                for (((obs, s), a), g) in ro.samples.into_iter().zip(adv).zip(ret) {
                    buffer.push(Transition {
                        obs,
                        raw: s.raw,
                        log_prob_old: s.log_prob,
                        advantage: a,
                        ret: g,
                    });
                }
                let total = ro.record.total_reward();
                let steps = ro.record.steps.len();
                art.summaries.push(EpisodeSummary {
                    phase,
                    episode: e,
                    steps,
                    total_reward: total,
                    mean_reward: if steps > 0 { total / steps as f64 } else { 0.0 },
                    final_epsilon: ro.record.final_epsilon(),
                    termination: ro.record.termination,
                });
                if let Some(b) = best_from(&ro.record, phase, e, cfg.schedule.step_tau) {
                    if art.best.as_ref().is_none_or(|cur| b.epsilon > cur.epsilon) {
                        art.best = Some(b);
                    }
                }
            }
            if !buffer.is_empty() {
                art.updates
                    .push(ppo_update(&mut policy, &mut opt, &buffer, &cfg.ppo, &mut rng)?);
            }
            start = end;
        }
    }
    art.policy = policy;
    Ok(art)
}

/// Mean fidelity of the code and ladder encoded by one action, held fixed
/// over the whole grid.
pub fn evaluate_action(action: &[f64], params: &SystemParams, lambda: Option<f64>, taus: &[f64]) -> Result<Vec<f64>> {
    if action.len() != super::env::ACTION_DIM {
        return Err(Error::Structural(format!("action has {} entries", action.len())));
    }
    let code = codeword_from_action(&action[..ACTION_FOCK])?;
    let ladder = ladder_from_action(&action[ACTION_FOCK..])?;
    mean_fidelity(
        &code,
        Some(&Recovery::Ladder(ladder)),
        params,
        lambda,
        taus,
        SolverChoice::Analytic,
    )
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"AQECCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Magic, format version, config hash, parameter count, then parameters,
/// all little-endian.
pub fn checkpoint_bytes(policy: &ActorCritic, cfg: &TrainConfig) -> Vec<u8> {
    let params = policy.params();
    let mut out = Vec::with_capacity(52 + 8 * params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&cfg.hash());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn policy_from_checkpoint(bytes: &[u8], cfg: &TrainConfig) -> Result<ActorCritic> {
    let bad = |m: &str| Error::Config(format!("checkpoint: {m}"));
    if bytes.len() < 52 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    if bytes[12..44] != cfg.hash() {
        return Err(bad("config hash does not match"));
    }
    let n = u64::from_le_bytes(bytes[44..52].try_into().expect("8 bytes")) as usize;
    let body = &bytes[52..];
    if body.len() != 8 * n {
        return Err(bad("truncated parameter block"));
    }
    let params: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut policy = ActorCritic::new(cfg.network, &mut ChaCha8Rng::seed_from_u64(0))?;
    policy.set_params(&params)?;
    Ok(policy)
}

pub fn save_checkpoint(path: &Path, policy: &ActorCritic, cfg: &TrainConfig) -> Result<()> {
    std::fs::write(path, checkpoint_bytes(policy, cfg))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, cfg: &TrainConfig) -> Result<ActorCritic> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    policy_from_checkpoint(&bytes, cfg)
}

/// One JSON document per line.
pub struct JsonlWriter {
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| Error::Io(e.to_string()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Deterministic evaluation of the learned mean action on a fresh episode.
pub fn greedy_episode(
    policy: &ActorCritic,
    schedule: &CurriculumSchedule,
    steps: usize,
    seed: u64,
) -> Result<EpisodeRecord> {
    let mut env = AqecEnv::reset(schedule, steps, RewardConfig::default(), seed)?;
    let mut rec = EpisodeRecord {
        zeta: env.zeta(),
        steps: Vec::new(),
        termination: None,
    };
    while !env.is_done() {
        let obs = env.observation().to_vec();
        debug_assert_eq!(obs.len(), OBS_DIM);
        let a = policy.mean_action(&obs)?;
        let (_, r, _, info) = env.step(&a)?;
        rec.steps.push(StepRecord {
            observation: obs,
            action: a,
            reward: r,
            mean_fidelity: info.mean_fidelity,
            breakeven: info.breakeven,
        });
        rec.termination = info.termination;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::env::grl_action;

    fn tiny() -> TrainConfig {
        TrainConfig {
            schedule: CurriculumSchedule {
                phase1_episodes: 8,
                phase2_episodes: 4,
                phase2_max_steps: 6,
                fixed_zeta: Some([1800.0, 0.012, 600.0]),
                ..CurriculumSchedule::default()
            },
            network: NetworkConfig {
                hidden: 16,
                layers: 1,
                init_log_std: 0.0,
            },
            ppo: PpoConfig {
                episodes_per_update: 4,
                minibatch: 8,
                ..PpoConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_episodes_returns_initial_weights() {
        let mut cfg = tiny();
        cfg.schedule.phase1_episodes = 0;
        cfg.schedule.phase2_episodes = 0;
        let art = run_curriculum(&cfg, 3, &mut |_, _| Ok(())).unwrap();
        let init = ActorCritic::new(cfg.network, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(art.policy, init);
        assert!(art.summaries.is_empty() && art.best.is_none());
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny();
        let mut n = 0;
        let a = run_curriculum(&cfg, 1, &mut |_, _| {
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 12);
        let b = run_curriculum(&cfg, 1, &mut |_, _| Ok(())).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.summaries, b.summaries);
        assert!(a.summaries.iter().all(|s| s.steps <= if s.phase == 1 { 4 } else { 6 }));
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = tiny();
        let policy = ActorCritic::new(cfg.network, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let bytes = checkpoint_bytes(&policy, &cfg);
        assert_eq!(&bytes[..8], b"AQECCKPT");
        assert_eq!(policy_from_checkpoint(&bytes, &cfg).unwrap(), policy);
        let mut other = cfg.clone();
        other.reward.f1 = 50.0;
        assert!(policy_from_checkpoint(&bytes, &other).is_err());
        assert!(policy_from_checkpoint(&bytes[..60], &cfg).is_err());
    }

    #[test]
    fn config_rejects_unknown_fields() {
        assert!(TrainConfig::from_json(r#"{"seeds": [1], "bogus": 2}"#).is_err());
        let c = TrainConfig::from_json(r#"{"seeds": [4, 5], "reward": {"f1": 50}}"#).unwrap();
        assert_eq!(c.seeds, vec![4, 5]);
        assert_eq!(c.reward.f1, 50.0);
        assert_eq!(c.reward.f2, 2.0);
    }

    #[test]
    fn grl_action_evaluation() {
        let params = SystemParams::standard(0.012);
        let f = evaluate_action(&grl_action(), &params, Some(1e4), &[0.6]).unwrap();
        assert!((f[0] - 0.9486).abs() < 1e-3);
    }
}
