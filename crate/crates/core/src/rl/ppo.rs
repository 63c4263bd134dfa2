//! Proximal policy optimization: advantages, the clipped surrogate and its
//! gradient, and the minibatch update.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::env::{ACTION_DIM, OBS_DIM};
use super::nn::{Adam, AdamConfig};
use super::policy::{gaussian_entropy, ActorCritic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub discount: f64,
    /// Episodes collected per update; the rollout buffer is cleared after
    /// each update.
    pub episodes_per_update: usize,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    pub adam: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_eps: 0.2,
            epochs: 4,
            minibatch: 64,
            value_coef: 0.5,
            entropy_coef: 0.01,
            discount: 0.99,
            episodes_per_update: 16,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            adam: AdamConfig::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.clip_eps > 0.0
            && self.epochs > 0
            && self.minibatch > 0
            && self.episodes_per_update > 0
            && self.discount > 0.0
            && self.discount <= 1.0
            && self.value_coef >= 0.0
            && self.entropy_coef >= 0.0
            && self.max_grad_norm > 0.0
            && self.adam.learning_rate > 0.0;
        if !ok {
            return Err(Error::Config("invalid PPO hyperparameters".into()));
        }
        Ok(())
    }
}

/// `Σ_k γ^k r_{t+k}` for every step.
pub fn discounted_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + discount * acc;
        out[t] = acc;
    }
    out
}

/// `A_t = −V(o_t) + r_t + γ r_{t+1} + γ² r_{t+2} + …`.
pub fn compute_advantages(rewards: &[f64], values: &[f64], discount: f64) -> Vec<f64> {
    discounted_returns(rewards, discount)
        .into_iter()
        .zip(values)
        .map(|(g, v)| g - v)
        .collect()
}

/// `min(r A, clip(r, 1 − ε, 1 + ε) A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

/// Derivative of [`clipped_surrogate`] with respect to the ratio.
pub fn clipped_surrogate_grad(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if clipped == ratio || ratio * advantage < clipped * advantage {
        advantage
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Pre-squash sample.
    pub raw: Vec<f64>,
    pub log_prob_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Loss `−E[min(rA, clip(r)A)] + c_v E[(V − R)²] − c_e H` and its flat
/// gradient in parameter order.
pub fn ppo_loss_and_grad(policy: &ActorCritic, batch: &[Transition], cfg: &PpoConfig) -> Result<(LossStats, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Argument("empty PPO batch".into()));
    }
    let b = batch.len();
    let bf = b as f64;
    let mut obs = DMatrix::zeros(OBS_DIM, b);
    for (j, t) in batch.iter().enumerate() {
        obs.column_mut(j).copy_from_slice(&t.obs);
    }
    let fwd = policy.forward_batch(&obs);
    let log_std = policy.log_std();
    let inv_var: Vec<f64> = log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let norm_const: f64 = log_std.iter().sum::<f64>() + ACTION_DIM as f64 * 0.918_938_533_204_672_8;

    let mut stats = LossStats::default();
    let mut d_means = DMatrix::zeros(ACTION_DIM, b);
    let mut d_log_std = vec![-cfg.entropy_coef; ACTION_DIM];
    let mut d_values = vec![0.0; b];
    for (j, t) in batch.iter().enumerate() {
        let mut quad = 0.0;
        for i in 0..ACTION_DIM {
            let diff = t.raw[i] - fwd.means[(i, j)];
            quad += diff * diff * inv_var[i];
        }
        let logp = -0.5 * quad - norm_const;
        let ratio = (logp - t.log_prob_old).exp();
        if !ratio.is_finite() {
            return Err(Error::Divergence(format!("probability ratio is {ratio}")));
        }
        stats.policy_loss -= clipped_surrogate(ratio, t.advantage, cfg.clip_eps) / bf;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            stats.clip_fraction += 1.0 / bf;
        }
        stats.approx_kl += (t.log_prob_old - logp) / bf;
        let dlogp = -clipped_surrogate_grad(ratio, t.advantage, cfg.clip_eps) * ratio / bf;
        for i in 0..ACTION_DIM {
            let diff = t.raw[i] - fwd.means[(i, j)];
            d_means[(i, j)] = dlogp * diff * inv_var[i];
            d_log_std[i] += dlogp * (diff * diff * inv_var[i] - 1.0);
        }
        let err = fwd.values[j] - t.ret;
        stats.value_loss += err * err / bf;
        d_values[j] = 2.0 * cfg.value_coef * err / bf;
    }
    stats.entropy = gaussian_entropy(log_std);
    stats.total = stats.policy_loss + cfg.value_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;
    let grad = policy.backward(&fwd, &d_means, &d_log_std, &d_values);
    Ok((stats, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    pub loss: LossStats,
    pub minibatches: usize,
    /// Minibatches dropped because a ratio was not finite.
    pub skipped: usize,
}

/// Several epochs of shuffled minibatch steps on one rollout buffer.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut ActorCritic,
    opt: &mut Adam,
    batch: &[Transition],
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::Argument("empty PPO batch".into()));
    }
    let mut data = batch.to_vec();
    if cfg.normalize_advantages && data.len() > 1 {
        let n = data.len() as f64;
        let mean = data.iter().map(|t| t.advantage).sum::<f64>() / n;
        let var = data.iter().map(|t| (t.advantage - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt().max(1e-8);
        for t in &mut data {
            t.advantage = (t.advantage - mean) / sd;
        }
    }
    let mut stats = UpdateStats::default();
    let mut idx: Vec<usize> = (0..data.len()).collect();
    let mut params = policy.params();
    let split = policy.actor_len();
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.minibatch) {
            let mb: Vec<Transition> = chunk.iter().map(|&i| data[i].clone()).collect();
            let (loss, mut grad) = match ppo_loss_and_grad(policy, &mb, cfg) {
                Ok(v) => v,
                Err(Error::Divergence(_)) => {
                    stats.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // Actor and critic are clipped separately so that large value
            // errors do not shrink the policy step.
            let (actor, critic) = grad.split_at_mut(split);
            if !clip_norm(actor, cfg.max_grad_norm) || !clip_norm(critic, cfg.max_grad_norm) {
                stats.skipped += 1;
                continue;
            }
            opt.step(&mut params, &grad);
            policy.set_params(&params)?;
            stats.loss = loss;
            stats.minibatches += 1;
        }
    }
    Ok(stats)
}

/// Rescales `g` to at most `max_norm`; false if the norm is not finite.
fn clip_norm(g: &mut [f64], max_norm: f64) -> bool {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return false;
    }
    if norm > max_norm {
        let s = max_norm / norm;
        g.iter_mut().for_each(|x| *x *= s);
    }
    true
}

pub fn new_optimizer(policy: &ActorCritic, cfg: &PpoConfig) -> Adam {
    Adam::new(policy.num_params(), cfg.adam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::policy::{gaussian_log_prob, NetworkConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn advantage_examples() {
        assert_eq!(compute_advantages(&[5.0], &[0.0], 0.99), vec![5.0]);
        let a = compute_advantages(&[1.0, 1.0], &[0.0, 0.0], 0.99);
        assert!((a[0] - 1.99).abs() < 1e-15 && a[1] == 1.0);
        // A value function equal to the discounted returns gives zero.
        let r = [2.0; 5];
        let v = discounted_returns(&r, 0.9);
        assert!(compute_advantages(&r, &v, 0.9).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn clip_behavior() {
        assert_eq!(clipped_surrogate(1.0, 3.0, 0.2), 3.0);
        assert_eq!(clipped_surrogate(1.5, 2.0, 0.2), 2.4);
        assert_eq!(clipped_surrogate_grad(1.5, 2.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(1.5, -2.0, 0.2), -2.0);
        assert_eq!(clipped_surrogate_grad(0.5, -2.0, 0.2), 0.0);
        assert_eq!(clipped_surrogate_grad(1.1, 2.0, 0.2), 2.0);
    }

    /// One-dimensional Gaussian policy with parameters `(μ, log σ)`.
    fn toy_objective(p: [f64; 2], samples: &[(f64, f64, f64)], eps: f64) -> f64 {
        samples
            .iter()
            .map(|&(u, lp_old, adv)| {
                let r = (gaussian_log_prob(&[p[0]], &[p[1]], &[u]) - lp_old).exp();
                clipped_surrogate(r, adv, eps)
            })
            .sum::<f64>()
            / samples.len() as f64
    }

    #[test]
    fn toy_surrogate_gradient() {
        let old = [0.1, -0.2];
        let samples: Vec<(f64, f64, f64)> = [(0.3, 1.2), (-0.5, -0.7), (0.9, 0.4), (0.05, -1.5)]
            .iter()
            .map(|&(u, a)| (u, gaussian_log_prob(&[old[0]], &[old[1]], &[u]), a))
            .collect();
        let p = [0.16, -0.17];
        let n = samples.len() as f64;
        let mut g = [0.0; 2];
        for &(u, lp_old, adv) in &samples {
            let lp = gaussian_log_prob(&[p[0]], &[p[1]], &[u]);
            let r = (lp - lp_old).exp();
            let s = clipped_surrogate_grad(r, adv, 0.2) * r / n;
            let iv = (-2.0 * p[1]).exp();
            g[0] += s * (u - p[0]) * iv;
            g[1] += s * ((u - p[0]).powi(2) * iv - 1.0);
        }
        for k in 0..2 {
            let h = 1e-6;
            let mut up = p;
            up[k] += h;
            let mut dn = p;
            dn[k] -= h;
            let fd = (toy_objective(up, &samples, 0.2) - toy_objective(dn, &samples, 0.2)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(1e-8), "{k}: {fd} vs {}", g[k]);
        }
    }

    fn toy_batch(policy: &ActorCritic, rng: &mut ChaCha8Rng) -> Vec<Transition> {
        (0..6)
            .map(|k| {
                let obs: Vec<f64> = (0..OBS_DIM).map(|i| ((i * 3 + k * 7) as f64 * 0.13).sin()).collect();
                let s = policy.sample(&obs, rng).unwrap();
                Transition {
                    obs,
                    raw: s.raw,
                    log_prob_old: s.log_prob,
                    advantage: (k as f64 - 2.5) * 0.7,
                    ret: k as f64 * 0.3,
                }
            })
            .collect()
    }

    #[test]
    fn network_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg_net = NetworkConfig {
            hidden: 5,
            layers: 2,
            init_log_std: -0.5,
        };
        let old = ActorCritic::new(cfg_net, &mut rng).unwrap();
        let batch = toy_batch(&old, &mut rng);
        let mut policy = old.clone();
        let mut p = policy.params();
        // Move away from θ_old but stay inside the clip window.
        for (i, v) in p.iter_mut().enumerate() {
            *v += 0.002 * ((i as f64) * 0.7).sin();
        }
        policy.set_params(&p).unwrap();
        let cfg = PpoConfig::default();
        let (_, grad) = ppo_loss_and_grad(&policy, &batch, &cfg).unwrap();
        let mut probe = policy.clone();
        let mut worst: f64 = 0.0;
        for k in (0..p.len()).step_by(3) {
            let h = 1e-6;
            let mut q = p.clone();
            q[k] += h;
            probe.set_params(&q).unwrap();
            let up = ppo_loss_and_grad(&probe, &batch, &cfg).unwrap().0.total;
            q[k] -= 2.0 * h;
            probe.set_params(&q).unwrap();
            let dn = ppo_loss_and_grad(&probe, &batch, &cfg).unwrap().0.total;
            let fd = (up - dn) / (2.0 * h);
            let scale = fd.abs().max(grad[k].abs()).max(1e-6);
            worst = worst.max((fd - grad[k]).abs() / scale);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn ratios_are_one_at_old_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg_net = NetworkConfig {
            hidden: 6,
            layers: 1,
            init_log_std: 0.0,
        };
        let policy = ActorCritic::new(cfg_net, &mut rng).unwrap();
        let batch = toy_batch(&policy, &mut rng);
        let (stats, _) = ppo_loss_and_grad(&policy, &batch, &PpoConfig::default()).unwrap();
        assert_eq!(stats.clip_fraction, 0.0);
        assert!(stats.approx_kl.abs() < 1e-12);
        let mean_adv = batch.iter().map(|t| t.advantage).sum::<f64>() / batch.len() as f64;
        assert!((stats.policy_loss + mean_adv).abs() < 1e-12);
    }

    #[test]
    fn update_moves_toward_advantaged_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg_net = NetworkConfig {
            hidden: 8,
            layers: 1,
            init_log_std: 0.0,
        };
        let mut policy = ActorCritic::new(cfg_net, &mut rng).unwrap();
        let obs = vec![0.2; OBS_DIM];
        let before = policy.forward(&obs).unwrap().mean[0];
        let cfg = PpoConfig {
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            ..PpoConfig::default()
        };
        let mut opt = new_optimizer(&policy, &cfg);
        for _ in 0..5 {
            let batch: Vec<Transition> = (0..32)
                .map(|_| {
                    let s = policy.sample(&obs, &mut rng).unwrap();
                    let adv = s.raw[0];
                    Transition {
                        obs: obs.clone(),
                        raw: s.raw,
                        log_prob_old: s.log_prob,
                        advantage: adv,
                        ret: 0.0,
                    }
                })
                .collect();
            ppo_update(&mut policy, &mut opt, &batch, &cfg, &mut rng).unwrap();
        }
        assert!(policy.forward(&obs).unwrap().mean[0] > before);
    }
}
