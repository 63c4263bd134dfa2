//! Episodic environment: each action proposes a codeword and a recovery
//! ladder, the six cardinal states evolve for one step under the structured
//! solver, and the reward compares the mean fidelity with breakeven.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticSolver;
use crate::codes::{codeword_from_action, ladder_from_action};
use crate::error::{Error, Result};
use crate::fidelity::{breakeven_reference, cardinal_states};
use crate::linalg::{trace_product, CMatrix};
use crate::params::SystemParams;

/// Fock levels addressed by an action.
pub const ACTION_FOCK: usize = 8;
pub const ACTION_LADDER: usize = ACTION_FOCK - 1;
pub const ACTION_DIM: usize = ACTION_FOCK + ACTION_LADDER;
pub const OBS_DIM: usize = 6 + 2 * ACTION_DIM + 3;

/// `[lo, hi]` for each of `γ_b/γ_a`, `γ_a2/γ_a`, `g/γ_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaRanges {
    pub gamma_b: [f64; 2],
    pub eta2: [f64; 2],
    pub g: [f64; 2],
}

impl Default for ZetaRanges {
    fn default() -> Self {
        Self {
            gamma_b: [600.0, 1800.0],
            eta2: [0.0, 0.08],
            g: [300.0, 600.0],
        }
    }
}

impl ZetaRanges {
    fn all(&self) -> [[f64; 2]; 3] {
        [self.gamma_b, self.eta2, self.g]
    }

    pub fn validate(&self) -> Result<()> {
        for [lo, hi] in self.all() {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return Err(Error::Config(format!("invalid parameter range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Min–max normalization, clamped to `[0, 1]`; a collapsed range maps
    /// to `0.5`.
    pub fn normalize(&self, zeta: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, (v, [lo, hi])) in out.iter_mut().zip(zeta.iter().zip(self.all())) {
            *o = if hi > lo {
                ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.5
            };
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSchedule {
    pub phase1_max_steps: usize,
    pub phase2_max_steps: usize,
    pub step_tau: f64,
    pub phase1_episodes: usize,
    pub phase2_episodes: usize,
    pub ranges: ZetaRanges,
    /// Use these `(γ_b/γ_a, γ_a2/γ_a, g/γ_a)` in every episode instead of
    /// sampling.
    pub fixed_zeta: Option<[f64; 3]>,
    /// Fraction of phase 2 over which the horizon grows linearly to its
    /// maximum.
    pub ramp_fraction: f64,
    /// Jump straight to the phase-2 horizon.
    pub fixed_k: bool,
}

impl Default for CurriculumSchedule {
    fn default() -> Self {
        Self {
            phase1_max_steps: 4,
            phase2_max_steps: 70,
            step_tau: 0.06,
            phase1_episodes: 2000,
            phase2_episodes: 2000,
            ranges: ZetaRanges::default(),
            fixed_zeta: None,
            ramp_fraction: 0.2,
            fixed_k: false,
        }
    }
}

impl CurriculumSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.phase1_max_steps == 0 || self.phase1_max_steps > self.phase2_max_steps {
            return Err(Error::Config(format!(
                "need 0 < K1 <= K2, got K1 = {}, K2 = {}",
                self.phase1_max_steps, self.phase2_max_steps
            )));
        }
        if !(self.step_tau.is_finite() && self.step_tau > 0.0) {
            return Err(Error::Config(format!(
                "step_tau must be positive, got {}",
                self.step_tau
            )));
        }
        if !(0.0..=1.0).contains(&self.ramp_fraction) {
            return Err(Error::Config(format!(
                "ramp_fraction must lie in [0, 1], got {}",
                self.ramp_fraction
            )));
        }
        self.ranges.validate()?;
        if let Some(z) = self.fixed_zeta {
            SystemParams::new(z[0], z[1], z[2])?;
        }
        Ok(())
    }

    /// Horizon for a phase-2 episode.
    pub fn phase2_steps(&self, episode: usize) -> usize {
        let ramp = (self.ramp_fraction * self.phase2_episodes as f64).ceil() as usize;
        if self.fixed_k || ramp == 0 || episode >= ramp {
            return self.phase2_max_steps;
        }
        let (k1, k2) = (self.phase1_max_steps as f64, self.phase2_max_steps as f64);
        (k1 + (k2 - k1) * (episode + 1) as f64 / ramp as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// `f₁ ε`.
    #[default]
    Phase1,
    /// `f₁ ε + f₂ α`, with the penalty and termination below breakeven.
    Phase2,
    /// `F̄_k − F̄_{k−1}`; kept to reproduce how it fails.
    DeltaFidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub f1: f64,
    pub f2: f64,
    pub penalty: f64,
    pub alpha_clip: f64,
    pub mode: RewardMode,
    /// Leading phase-2 steps exempt from the below-breakeven penalty.
    pub grace_steps: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            f1: 250.0,
            f2: 2.0,
            penalty: -20.0,
            alpha_clip: 0.97,
            mode: RewardMode::Phase1,
            grace_steps: 0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f1 > self.f2 && self.f2 >= 0.0) {
            return Err(Error::Config(format!(
                "need f1 > f2 >= 0, got f1 = {}, f2 = {}",
                self.f1, self.f2
            )));
        }
        if !self.penalty.is_finite() || !(0.0..=1.0).contains(&self.alpha_clip) {
            return Err(Error::Config("penalty must be finite and alpha_clip in [0, 1]".into()));
        }
        Ok(())
    }

    /// Reward for an unusable action with `remaining` steps left in the
    /// horizon (counting the current one): the penalty plus the lowest
    /// fidelity reward those steps could have earned, so that bailing out
    /// never beats finishing the episode.
    pub fn invalid_reward(&self, remaining: f64) -> f64 {
        match self.mode {
            RewardMode::DeltaFidelity => self.penalty - remaining,
            _ => self.penalty - self.f1 * remaining,
        }
    }

    pub fn with_mode(mut self, mode: RewardMode) -> Self {
        self.mode = mode;
        self
    }
}

/// `F_k − F_{k−1}`.
pub fn reward_delta_fidelity(f_k: f64, f_prev: f64) -> f64 {
    f_k - f_prev
}

/// Cosine similarity of consecutive actions, saturated to 1 above `clip`.
pub fn action_consistency(prev: &[f64], cur: &[f64], clip: f64) -> f64 {
    let dot: f64 = prev.iter().zip(cur).map(|(a, b)| a * b).sum();
    let np = prev.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nc = cur.iter().map(|x| x * x).sum::<f64>().sqrt();
    if np == 0.0 || nc == 0.0 {
        return 0.0;
    }
    let alpha = dot / (np * nc);
    if alpha > clip {
        1.0
    } else {
        alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    pub c: [f64; ACTION_FOCK],
    pub d: [f64; ACTION_LADDER],
}

impl ActionVector {
    pub fn from_slice(a: &[f64]) -> Result<Self> {
        if a.len() != ACTION_DIM {
            return Err(Error::Structural(format!(
                "action has {} entries, expected {ACTION_DIM}",
                a.len()
            )));
        }
        let mut c = [0.0; ACTION_FOCK];
        let mut d = [0.0; ACTION_LADDER];
        c.copy_from_slice(&a[..ACTION_FOCK]);
        d.copy_from_slice(&a[ACTION_FOCK..]);
        Ok(Self { c, d })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.c.iter().chain(&self.d).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub fidelities: [f64; 6],
    pub previous_action: [f64; ACTION_DIM],
    pub initial_action: [f64; ACTION_DIM],
    pub zeta: [f64; 3],
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBS_DIM);
        v.extend_from_slice(&self.fidelities);
        v.extend_from_slice(&self.previous_action);
        v.extend_from_slice(&self.initial_action);
        v.extend_from_slice(&self.zeta);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Horizon,
    BelowBreakeven,
    InvalidAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Observation the action was chosen from.
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub mean_fidelity: f64,
    pub breakeven: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub zeta: [f64; 3],
    pub steps: Vec<StepRecord>,
    pub termination: Option<Termination>,
}

impl EpisodeRecord {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn final_epsilon(&self) -> Option<f64> {
        self.steps.last().map(|s| s.mean_fidelity - s.breakeven)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub tau: f64,
    pub mean_fidelity: f64,
    pub breakeven: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub termination: Option<Termination>,
}

/// One AQEC episode.
#[derive(Debug, Clone)]
pub struct AqecEnv {
    max_steps: usize,
    step_tau: f64,
    reward: RewardConfig,
    ranges: ZetaRanges,
    zeta: [f64; 3],
    params: SystemParams,
    step: usize,
    initial: Vec<CMatrix>,
    current: Vec<CMatrix>,
    first_action: [f64; ACTION_DIM],
    prev_action: [f64; ACTION_DIM],
    prev_mean: f64,
    fidelities: [f64; 6],
    done: bool,
}

impl AqecEnv {
    /// Starts an episode; ζ is drawn from `seed` unless the schedule fixes it.
    pub fn reset(schedule: &CurriculumSchedule, max_steps: usize, reward: RewardConfig, seed: u64) -> Result<Self> {
        schedule.validate()?;
        reward.validate()?;
        if max_steps == 0 {
            return Err(Error::Config("episode horizon must be at least one step".into()));
        }
        let zeta = match schedule.fixed_zeta {
            Some(z) => z,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut z = [0.0; 3];
                for (v, [lo, hi]) in z.iter_mut().zip(schedule.ranges.all()) {
                    *v = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                }
                z
            }
        };
        let params = SystemParams::new(zeta[0], zeta[1], zeta[2])?;
        Ok(Self {
            max_steps,
            step_tau: schedule.step_tau,
            reward,
            ranges: schedule.ranges,
            zeta,
            params,
            step: 0,
            initial: Vec::new(),
            current: Vec::new(),
            first_action: [0.0; ACTION_DIM],
            prev_action: [0.0; ACTION_DIM],
            prev_mean: 1.0,
            fidelities: [1.0; 6],
            done: false,
        })
    }

    pub fn zeta(&self) -> [f64; 3] {
        self.zeta
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn tau(&self) -> f64 {
        self.step as f64 * self.step_tau
    }

    pub fn observation(&self) -> Observation {
        Observation {
            fidelities: self.fidelities,
            previous_action: self.prev_action,
            initial_action: self.first_action,
            zeta: self.ranges.normalize(self.zeta),
        }
    }

    /// Applies one action; returns the next observation, reward and status.
    pub fn step(&mut self, action: &[f64]) -> Result<(Observation, f64, bool, StepInfo)> {
        if self.done {
            return Err(Error::Argument("episode already finished".into()));
        }
        let av = ActionVector::from_slice(action)?;
        if action.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("action entries must be finite".into()));
        }
        let alpha = if self.step == 0 {
            1.0
        } else {
            action_consistency(&self.prev_action, action, self.reward.alpha_clip)
        };

        let built = codeword_from_action(&av.c).and_then(|code| Ok((code, ladder_from_action(&av.d)?)));
        let (code, ladder) = match built {
            Ok(v) => v,
            Err(Error::DegenerateCode(_)) | Err(Error::DegenerateLadder(_)) | Err(Error::Argument(_)) => {
                let remaining = (self.max_steps - self.step) as f64;
                self.done = true;
                self.step += 1;
                let info = StepInfo {
                    tau: self.tau(),
                    mean_fidelity: f64::NAN,
                    breakeven: breakeven_reference(self.tau()),
                    epsilon: f64::NAN,
                    alpha,
                    termination: Some(Termination::InvalidAction),
                };
                self.prev_action.copy_from_slice(action);
                return Ok((self.observation(), self.reward.invalid_reward(remaining), true, info));
            }
            Err(e) => return Err(e),
        };

        if self.step == 0 {
            let cards = cardinal_states(&code);
            self.initial = cards.states().iter().map(|s| s.matrix().clone()).collect();
            self.current = self.initial.clone();
            self.first_action.copy_from_slice(action);
        }
        let solver = AnalyticSolver::new(
            ACTION_FOCK,
            &self.params.channels(),
            Some(&ladder),
            self.params.generator_lambda(),
        )?;
        for (i, rho) in self.current.iter_mut().enumerate() {
            *rho = solver.evolve_matrix(rho, self.step_tau)?;
            self.fidelities[i] = trace_product(&self.initial[i], rho).re;
        }
        self.step += 1;
        self.prev_action.copy_from_slice(action);

        let tau = self.tau();
        let mean = self.fidelities.iter().sum::<f64>() / 6.0;
        let be = breakeven_reference(tau);
        let eps = mean - be;
        let mut termination = None;
        let reward = match self.reward.mode {
            RewardMode::Phase1 => self.reward.f1 * eps,
            RewardMode::Phase2 if eps < 0.0 && self.step > self.reward.grace_steps => {
                termination = Some(Termination::BelowBreakeven);
                self.reward.penalty
            }
            RewardMode::Phase2 => self.reward.f1 * eps + self.reward.f2 * alpha,
            RewardMode::DeltaFidelity => {
                if self.step == 1 {
                    0.0
                } else {
                    reward_delta_fidelity(mean, self.prev_mean)
                }
            }
        };
        self.prev_mean = mean;
        if termination.is_none() && self.step >= self.max_steps {
            termination = Some(Termination::Horizon);
        }
        self.done = termination.is_some();
        let info = StepInfo {
            tau,
            mean_fidelity: mean,
            breakeven: be,
            epsilon: eps,
            alpha,
            termination,
        };
        Ok((self.observation(), reward, self.done, info))
    }
}

/// Runs a fixed action sequence to completion (or until the episode ends).
pub fn run_scripted(env: &mut AqecEnv, actions: &[Vec<f64>]) -> Result<EpisodeRecord> {
    let mut rec = EpisodeRecord {
        zeta: env.zeta(),
        steps: Vec::new(),
        termination: None,
    };
    for a in actions {
        if env.is_done() {
            break;
        }
        let obs = env.observation().to_vec();
        let (_, reward, _, info) = env.step(a)?;
        rec.steps.push(StepRecord {
            observation: obs,
            action: a.clone(),
            reward,
            mean_fidelity: info.mean_fidelity,
            breakeven: info.breakeven,
        });
        rec.termination = info.termination;
    }
    Ok(rec)
}

/// The `|4⟩, |7⟩` code with the equal-weight `{3, 4, 6, 7}` ladder as an
/// action.
pub fn grl_action() -> Vec<f64> {
    let mut a = vec![0.0; ACTION_DIM];
    a[4] = 0.5;
    a[7] = -0.5;
    for k in [2, 3, 5, 6] {
        a[ACTION_FOCK + k] = 0.5;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{named_code, CodeName};
    use crate::fidelity::{mean_fidelity, SolverChoice};

    fn standard_schedule() -> CurriculumSchedule {
        CurriculumSchedule {
            fixed_zeta: Some([1800.0, 0.012, 600.0]),
            ..CurriculumSchedule::default()
        }
    }

    #[test]
    fn reset_observation() {
        let s = CurriculumSchedule::default();
        let env = AqecEnv::reset(&s, 4, RewardConfig::default(), 7).unwrap();
        let o = env.observation().to_vec();
        assert_eq!(o.len(), OBS_DIM);
        assert_eq!(OBS_DIM, 39);
        assert!(o[..6].iter().all(|&f| f == 1.0));
        assert!(o[6..36].iter().all(|&a| a == 0.0));
        assert!(o[36..].iter().all(|z| (0.0..=1.0).contains(z)));
        let again = AqecEnv::reset(&s, 4, RewardConfig::default(), 7).unwrap();
        assert_eq!(env.zeta(), again.zeta());
        let other = AqecEnv::reset(&s, 4, RewardConfig::default(), 8).unwrap();
        assert_ne!(env.zeta(), other.zeta());
    }

    #[test]
    fn epsilon_matches_direct_evaluation() {
        let s = standard_schedule();
        let mut env = AqecEnv::reset(&s, 4, RewardConfig::default(), 0).unwrap();
        let grl = named_code(CodeName::Grl);
        let params = SystemParams::new(1800.0, 0.012, 600.0).unwrap();
        for k in 1..=4 {
            let (_, r, done, info) = env.step(&grl_action()).unwrap();
            let tau = k as f64 * 0.06;
            let f = mean_fidelity(
                &grl.code,
                grl.recovery.as_ref(),
                &params,
                None,
                &[tau],
                SolverChoice::Analytic,
            )
            .unwrap()[0];
            assert!((info.epsilon - (f - breakeven_reference(tau))).abs() < 1e-9);
            assert!((r - 250.0 * info.epsilon).abs() < 1e-9);
            assert_eq!(done, k == 4);
        }
        assert!(env.step(&grl_action()).is_err());
    }

    #[test]
    fn phase2_reward_and_penalty() {
        let s = standard_schedule();
        let cfg = RewardConfig::default().with_mode(RewardMode::Phase2);
        let a = grl_action();
        // The GRL code dips below breakeven on its first step.
        let mut env = AqecEnv::reset(&s, 70, cfg, 0).unwrap();
        let (_, r, done, info) = env.step(&a).unwrap();
        assert!(info.epsilon < 0.0 && done && r == -20.0);

        let lenient = RewardConfig { grace_steps: 2, ..cfg };
        let mut env = AqecEnv::reset(&s, 70, lenient, 0).unwrap();
        env.step(&a).unwrap();
        let (_, r, done, info) = env.step(&a).unwrap();
        assert_eq!(info.alpha, 1.0);
        assert!(!done);
        assert!((r - (250.0 * info.epsilon + 2.0)).abs() < 1e-12);
        let (_, _, _, info) = env.step(&a).unwrap();
        assert!(info.epsilon > 0.0);

        // Vacuum-heavy logical zero with a harmful ladder drops below breakeven.
        let mut bad = vec![0.0; ACTION_DIM];
        bad[1] = 0.9;
        bad[2] = -0.9;
        bad[ACTION_FOCK + 1] = 0.9;
        let mut env = AqecEnv::reset(&s, 70, cfg, 0).unwrap();
        let (_, r, done, info) = env.step(&bad).unwrap();
        assert!(info.epsilon < 0.0);
        assert_eq!(r, -20.0);
        assert!(done);
        assert_eq!(info.termination, Some(Termination::BelowBreakeven));
    }

    #[test]
    fn invalid_actions_terminate() {
        let s = standard_schedule();
        let mut env = AqecEnv::reset(&s, 4, RewardConfig::default(), 0).unwrap();
        let mut a = grl_action();
        a[7] = 0.5;
        let (_, r, done, info) = env.step(&a).unwrap();
        assert_eq!((r, done), (-20.0 - 4.0 * 250.0, true));
        assert_eq!(info.termination, Some(Termination::InvalidAction));

        let mut env = AqecEnv::reset(&s, 4, RewardConfig::default(), 0).unwrap();
        let mut a = grl_action();
        for x in &mut a[ACTION_FOCK..] {
            *x = 0.0;
        }
        let (_, _, _, info) = env.step(&a).unwrap();
        assert_eq!(info.termination, Some(Termination::InvalidAction));
    }

    #[test]
    fn consistency_values() {
        assert_eq!(action_consistency(&[1.0, 0.0], &[1.0, 0.0], 0.97), 1.0);
        assert_eq!(action_consistency(&[1.0, 0.0], &[0.0, 1.0], 0.97), 0.0);
        assert!((action_consistency(&[1.0, 0.0], &[1.0, 1.0], 0.97) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(reward_delta_fidelity(0.9, 0.9), 0.0);
        assert!((reward_delta_fidelity(0.95, 0.90) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ramp_reaches_full_horizon() {
        let s = CurriculumSchedule {
            phase2_episodes: 100,
            ..CurriculumSchedule::default()
        };
        assert!(s.phase2_steps(0) > 4 && s.phase2_steps(0) < 10);
        assert_eq!(s.phase2_steps(19), 70);
        assert_eq!(s.phase2_steps(50), 70);
        let k: Vec<usize> = (0..20).map(|e| s.phase2_steps(e)).collect();
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
        let fixed = CurriculumSchedule { fixed_k: true, ..s };
        assert_eq!(fixed.phase2_steps(0), 70);
        assert!((s.step_tau * s.phase2_max_steps as f64 - 4.2).abs() < 1e-12);
    }

    #[test]
    fn schedule_validation() {
        let s = CurriculumSchedule {
            phase1_max_steps: 80,
            ..CurriculumSchedule::default()
        };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let r = RewardConfig {
            f2: 300.0,
            ..RewardConfig::default()
        };
        assert!(r.validate().is_err());
    }
}
