//! Timing of the structured solver against the dense hybrid integration on
//! a fixed AQEC workload.
//!
//! The workload is the GRL code and ladder padded to `N` levels, standard rate
//! ratios with `η = 0.012`, six cardinal states and ten time points
//! `τ = 0.06 k`. Both sides run on a single thread so the ratio reflects the
//! algorithms rather than the core count.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::codes::{named_code_dim, CodeName, Codeword, Recovery};
use crate::dense::hybrid::mean_fidelity_with_model;
use crate::dense::{hybrid_model, IntegratorOptions};
use crate::error::{Error, Result};
use crate::fidelity::{analytic_solver_for, mean_fidelity_analytic};
use crate::params::SystemParams;

pub const WORKLOAD_ETA: f64 = 0.012;
pub const WORKLOAD_STEPS: usize = 10;
pub const WORKLOAD_DT: f64 = 0.06;

#[derive(Debug, Clone)]
pub struct Workload {
    pub dim: usize,
    pub code: Codeword,
    pub recovery: Recovery,
    pub params: SystemParams,
    pub taus: Vec<f64>,
}

impl Workload {
    pub fn new(dim: usize) -> Result<Self> {
        let named = named_code_dim(CodeName::Grl, dim)?;
        let recovery = named
            .recovery
            .ok_or_else(|| Error::Structural("GRL has no recovery".into()))?;
        Ok(Self {
            dim,
            code: named.code,
            recovery,
            params: SystemParams::standard(WORKLOAD_ETA),
            taus: (1..=WORKLOAD_STEPS).map(|k| WORKLOAD_DT * k as f64).collect(),
        })
    }

    /// Builds the structured solver and evaluates the series.
    pub fn run_analytic(&self) -> Result<Vec<f64>> {
        let s = analytic_solver_for(
            self.dim,
            Some(&self.recovery),
            &self.params,
            self.params.generator_lambda(),
        )?;
        mean_fidelity_analytic(&self.code, &s, &self.taus)
    }

    /// Integrates the cavity–ancilla system for the same series.
    pub fn run_dense(&self) -> Result<Vec<f64>> {
        let model = hybrid_model(self.dim, Some(&self.recovery), &self.params)?.build();
        mean_fidelity_with_model(&self.code, &model, 2, &self.taus, &IntegratorOptions::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dim: usize,
    /// Median wall-clock seconds.
    pub analytic_secs: f64,
    pub dense_secs: f64,
    pub speedup: f64,
    /// Largest relative spread of the repeated analytic timings.
    pub analytic_jitter: f64,
    pub dense_jitter: f64,
    /// Largest fidelity difference between the two sides.
    pub max_deviation: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(max − min) / median`.
fn jitter(v: &[f64], med: f64) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if med > 0.0 {
        (hi - lo) / med
    } else {
        0.0
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let t = Instant::now();
    let out = f()?;
    Ok((out, t.elapsed()))
}

/// Times `repeats` runs of each side at one dimension.
pub fn benchmark_dim(dim: usize, repeats: usize) -> Result<BenchmarkRow> {
    if repeats == 0 {
        return Err(Error::Argument("at least one repeat is required".into()));
    }
    let w = Workload::new(dim)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Unsupported(e.to_string()))?;
    pool.install(|| {
        let mut ta = Vec::with_capacity(repeats);
        let mut td = Vec::with_capacity(repeats);
        let mut fa = Vec::new();
        let mut fd = Vec::new();
        for _ in 0..repeats {
            let (a, t) = timed(|| w.run_analytic())?;
            ta.push(t.as_secs_f64());
            fa = a;
            let (d, t) = timed(|| w.run_dense())?;
            td.push(t.as_secs_f64());
            fd = d;
        }
        let ma = median(&mut ta.clone());
        let md = median(&mut td.clone());
        Ok(BenchmarkRow {
            dim,
            analytic_secs: ma,
            dense_secs: md,
            speedup: md / ma,
            analytic_jitter: jitter(&ta, ma),
            dense_jitter: jitter(&td, md),
            max_deviation: fa.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        })
    })
}

pub fn run_benchmark(dims: &[usize], repeats: usize) -> Result<Vec<BenchmarkRow>> {
    dims.iter().map(|&n| benchmark_dim(n, repeats)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_grid() {
        let w = Workload::new(16).unwrap();
        assert_eq!(w.taus.len(), 10);
        assert!((w.taus[9] - 0.6).abs() < 1e-12);
        assert_eq!(w.code.dim(), 16);
        assert_eq!(w.params.generator_lambda(), 800.0);
    }

    #[test]
    fn sides_agree_at_default_truncation() {
        let row = benchmark_dim(8, 1).unwrap();
        assert!(row.max_deviation < 5e-3, "{row:?}");
        assert!(row.analytic_secs > 0.0 && row.dense_secs > 0.0);
    }

    #[test]
    fn median_and_jitter() {
        let mut v = vec![3.0, 1.0, 2.0];
        assert_eq!(median(&mut v), 2.0);
        assert_eq!(median(&mut [1.0, 2.0, 3.0, 4.0]), 2.5);
        assert!((jitter(&[1.0, 1.2, 1.1], 1.1) - 0.2 / 1.1).abs() < 1e-12);
    }
}
