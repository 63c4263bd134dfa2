//! Actor–critic with a shared actor backbone feeding a codeword head and a
//! ladder head, a learned state-independent spread, and a separate critic.
//!
//! Actions are `tanh(u)` with `u ~ N(μ, σ)`; the raw `u` is what gets stored
//! so that log-densities never need `atanh`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::env::{ACTION_DIM, ACTION_FOCK, ACTION_LADDER, OBS_DIM};
use super::nn::{Linear, Mlp, MlpCache};
use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub hidden: usize,
    pub layers: usize,
    pub init_log_std: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            layers: 2,
            init_log_std: 0.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 || !self.init_log_std.is_finite() {
            return Err(Error::Config(
                "network needs at least one hidden layer of nonzero width".into(),
            ));
        }
        Ok(())
    }

    fn sizes(&self, out: Option<usize>) -> Vec<usize> {
        let mut s = vec![OBS_DIM];
        s.extend(std::iter::repeat_n(self.hidden, self.layers));
        s.extend(out);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    config: NetworkConfig,
    backbone: Mlp,
    head_c: Linear,
    head_d: Linear,
    log_std: DVector<f64>,
    critic: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    /// Codeword means followed by ladder means.
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub raw: Vec<f64>,
    pub action: Vec<f64>,
    /// Gaussian log-density of `raw`.
    pub log_prob: f64,
    pub value: f64,
}

/// Forward pass over a batch, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct BatchForward {
    backbone: MlpCache,
    critic: MlpCache,
    /// `ACTION_DIM × batch`.
    pub means: DMatrix<f64>,
    pub values: Vec<f64>,
}

/// Largest `|tanh(u)|` handed out, so actions stay strictly inside (−1, 1).
const ACTION_BOUND: f64 = 1.0 - 1e-9;

pub fn squash(u: f64) -> f64 {
    u.tanh().clamp(-ACTION_BOUND, ACTION_BOUND)
}

/// `Σ log N(u_i; μ_i, σ_i)`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], raw: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(raw)
        .map(|((m, ls), u)| {
            let z = (u - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// Log-density of `tanh(u)`, including the change-of-variables term.
pub fn squashed_log_prob(mean: &[f64], log_std: &[f64], raw: &[f64]) -> f64 {
    let jac: f64 = raw
        .iter()
        .map(|&u| {
            // ln(1 − tanh²u) = 2(ln 2 − u − softplus(−2u)).
            let sp = if -2.0 * u > 30.0 {
                -2.0 * u
            } else {
                (-2.0 * u).exp().ln_1p()
            };
            2.0 * (std::f64::consts::LN_2 - u - sp)
        })
        .sum();
    gaussian_log_prob(mean, log_std, raw) - jac
}

/// Entropy of the pre-squash Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            backbone: Mlp::new(&config.sizes(None), true, 1.0, rng),
            head_c: Linear::new(config.hidden, ACTION_FOCK, 0.01, rng),
            head_d: Linear::new(config.hidden, ACTION_LADDER, 0.01, rng),
            log_std: DVector::from_element(ACTION_DIM, config.init_log_std),
            critic: Mlp::new(&config.sizes(Some(1)), false, 1.0, rng),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn num_params(&self) -> usize {
        self.backbone.num_params()
            + self.head_c.num_params()
            + self.head_d.num_params()
            + self.log_std.len()
            + self.critic.num_params()
    }

    /// Parameters before this index belong to the actor, the rest to the
    /// critic.
    pub fn actor_len(&self) -> usize {
        self.num_params() - self.critic.num_params()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        self.backbone.write_params(&mut p);
        self.head_c.write_params(&mut p);
        self.head_d.write_params(&mut p);
        p.extend_from_slice(self.log_std.as_slice());
        self.critic.write_params(&mut p);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(Error::Structural(format!(
                "expected {} parameters, got {}",
                self.num_params(),
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite network parameter".into()));
        }
        let mut src = p;
        self.backbone.read_params(&mut src);
        self.head_c.read_params(&mut src);
        self.head_d.read_params(&mut src);
        self.log_std.as_mut_slice().copy_from_slice(&src[..ACTION_DIM]);
        src = &src[ACTION_DIM..];
        self.critic.read_params(&mut src);
        Ok(())
    }

    pub fn log_std(&self) -> &[f64] {
        self.log_std.as_slice()
    }

    pub fn forward_batch(&self, obs: &DMatrix<f64>) -> BatchForward {
        let backbone = self.backbone.forward(obs);
        let c = self.head_c.forward(&backbone.output);
        let d = self.head_d.forward(&backbone.output);
        let mut means = DMatrix::zeros(ACTION_DIM, obs.ncols());
        means.rows_mut(0, ACTION_FOCK).copy_from(&c);
        means.rows_mut(ACTION_FOCK, ACTION_LADDER).copy_from(&d);
        let critic = self.critic.forward(obs);
        let values = critic.output.row(0).iter().copied().collect();
        BatchForward {
            backbone,
            critic,
            means,
            values,
        }
    }

    /// Flat gradient (in `params()` order) for upstream gradients of a
    /// scalar loss with respect to the means, the log-spreads and the
    /// values.
    pub fn backward(
        &self,
        fwd: &BatchForward,
        d_means: &DMatrix<f64>,
        d_log_std: &[f64],
        d_values: &[f64],
    ) -> Vec<f64> {
        let h = &fwd.backbone.output;
        let dc = d_means.rows(0, ACTION_FOCK).into_owned();
        let dd = d_means.rows(ACTION_FOCK, ACTION_LADDER).into_owned();
        let (dwc, dbc, dhc) = self.head_c.backward(h, &dc);
        let (dwd, dbd, dhd) = self.head_d.backward(h, &dd);
        let mut g = Vec::with_capacity(self.num_params());
        self.backbone.backward(&fwd.backbone, &(dhc + dhd), &mut g);
        g.extend_from_slice(dwc.as_slice());
        g.extend_from_slice(dbc.as_slice());
        g.extend_from_slice(dwd.as_slice());
        g.extend_from_slice(dbd.as_slice());
        g.extend_from_slice(d_log_std);
        let dv = DMatrix::from_row_slice(1, d_values.len(), d_values);
        self.critic.backward(&fwd.critic, &dv, &mut g);
        g
    }

    pub fn forward(&self, obs: &[f64]) -> Result<PolicyOutput> {
        if obs.len() != OBS_DIM {
            return Err(Error::Structural(format!(
                "observation has {} entries, expected {OBS_DIM}",
                obs.len()
            )));
        }
        let f = self.forward_batch(&DMatrix::from_column_slice(OBS_DIM, 1, obs));
        let out = PolicyOutput {
            mean: f.means.column(0).iter().copied().collect(),
            log_std: self.log_std.as_slice().to_vec(),
            value: f.values[0],
        };
        if out.mean.iter().chain(&out.log_std).any(|v| !v.is_finite()) || !out.value.is_finite() {
            return Err(Error::Divergence("policy produced non-finite outputs".into()));
        }
        Ok(out)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<Sample> {
        let out = self.forward(obs)?;
        let raw: Vec<f64> = out
            .mean
            .iter()
            .zip(&out.log_std)
            .map(|(m, ls)| {
                let z: f64 = rng.sample(StandardNormal);
                m + ls.exp() * z
            })
            .collect();
        Ok(Sample {
            action: raw.iter().map(|&u| squash(u)).collect(),
            log_prob: gaussian_log_prob(&out.mean, &out.log_std, &raw),
            raw,
            value: out.value,
        })
    }

    /// `tanh(μ)`: the action used for evaluation.
    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(obs)?.mean.iter().map(|&m| squash(m)).collect())
    }
}
