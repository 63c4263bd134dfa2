//! Fully connected layers with hand-written backpropagation, and Adam.
//!
//! Batches are stored column-wise: an input batch is `features × batch`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `out × in`.
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Linear {
    /// Glorot-uniform weights scaled by `gain`, zero bias.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let limit = gain * (6.0 / (inputs + outputs) as f64).sqrt();
        Self {
            w: DMatrix::from_fn(outputs, inputs, |_, _| rng.random_range(-limit..=limit)),
            b: DVector::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.w * x;
        for mut col in z.column_iter_mut() {
            col += &self.b;
        }
        z
    }

    /// Gradients for upstream `dz` given the layer input `x`; returns
    /// `(dW, db, dx)`.
    pub fn backward(&self, x: &DMatrix<f64>, dz: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let dw = dz * x.transpose();
        let db = dz.column_sum();
        let dx = self.w.transpose() * dz;
        (dw, db, dx)
    }

    pub fn num_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(self.b.as_slice());
    }

    /// Consumes `num_params()` values from the front of `src`.
    pub fn read_params(&mut self, src: &mut &[f64]) {
        let nw = self.w.len();
        self.w.as_mut_slice().copy_from_slice(&src[..nw]);
        let nb = self.b.len();
        self.b.as_mut_slice().copy_from_slice(&src[nw..nw + nb]);
        *src = &src[nw + nb..];
    }
}

/// Tanh after every hidden layer; the last layer is linear unless
/// `tanh_output` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub tanh_output: bool,
}

/// Layer inputs kept for the backward pass, plus the output.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<DMatrix<f64>>,
    pub output: DMatrix<f64>,
}

impl Mlp {
    /// `sizes = [in, h₁, …, out]`; `out_gain` scales the last layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], tanh_output: bool, out_gain: f64, rng: &mut R) -> Self {
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| Linear::new(sizes[i], sizes[i + 1], if i + 1 == n { out_gain } else { 1.0 }, rng))
            .collect();
        Self { layers, tanh_output }
    }

    fn activated(&self, i: usize) -> bool {
        i + 1 < self.layers.len() || self.tanh_output
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> MlpCache {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&h);
            if self.activated(i) {
                z.apply(|v| *v = v.tanh());
            }
            inputs.push(h);
            h = z;
        }
        MlpCache { inputs, output: h }
    }

    /// Appends parameter gradients (in `write_params` order) to `grads` and
    /// returns the gradient with respect to the input.
    pub fn backward(&self, cache: &MlpCache, d_out: &DMatrix<f64>, grads: &mut Vec<f64>) -> DMatrix<f64> {
        let n = self.layers.len();
        let mut per_layer: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(n);
        let mut upstream = d_out.clone();
        for i in (0..n).rev() {
            if self.activated(i) {
                let out = if i + 1 == n {
                    &cache.output
                } else {
                    &cache.inputs[i + 1]
                };
                upstream.zip_apply(out, |g, y| *g *= 1.0 - y * y);
            }
            let (dw, db, dx) = self.layers[i].backward(&cache.inputs[i], &upstream);
            per_layer.push((dw, db));
            upstream = dx;
        }
        for (dw, db) in per_layer.iter().rev() {
            grads.extend_from_slice(dw.as_slice());
            grads.extend_from_slice(db.as_slice());
        }
        upstream
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Linear::num_params).sum()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.write_params(out);
        }
    }

    pub fn read_params(&mut self, src: &mut &[f64]) {
        for l in &mut self.layers {
            l.read_params(src);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Descends along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * grad[i];
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= c.learning_rate * mh / (vh.sqrt() + c.epsilon);
        }
    }
}
