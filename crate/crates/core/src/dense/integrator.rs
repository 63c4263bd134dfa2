//! Dormand–Prince 5(4) time stepping for matrix-valued linear ODEs.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    /// Disables error control and takes steps of this size instead.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_max: f64::INFINITY,
            fixed_step: None,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn fixed(h: f64) -> Self {
        Self {
            fixed_step: Some(h),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `out = y + h Σ w_k k_k`, written without temporaries.
fn combine(out: &mut CMatrix, y: &CMatrix, h: f64, terms: &[(f64, &CMatrix)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(y.as_slice());
    for &(w, k) in terms {
        if w == 0.0 {
            continue;
        }
        let s = h * w;
        for (oi, ki) in o.iter_mut().zip(k.as_slice()) {
            *oi += ki * s;
        }
    }
}

/// Integrates `dy/dt = f(t, y)` from `t = 0` and records `y` at each time
/// of the nondecreasing grid `t_eval`.
pub fn integrate_ode<F>(mut f: F, y0: &CMatrix, t_eval: &[f64], opts: &IntegratorOptions) -> Result<Trajectory>
where
    F: FnMut(f64, &CMatrix, &mut CMatrix),
{
    if t_eval.iter().any(|t| !t.is_finite() || *t < 0.0) || t_eval.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument(
            "output times must be finite, non-negative and nondecreasing".into(),
        ));
    }
    let (r, c) = y0.shape();
    let zeros = || CMatrix::zeros(r, c);
    let mut y = y0.clone();
    let mut y_new = zeros();
    let mut stage = zeros();
    let mut k: [CMatrix; 7] = std::array::from_fn(|_| zeros());

    let mut traj = Trajectory {
        times: Vec::with_capacity(t_eval.len()),
        states: Vec::with_capacity(t_eval.len()),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let mut t = 0.0;
    f(t, &y, &mut k[0]);
    let mut h = match opts.fixed_step {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(Error::Argument(format!("fixed step must be positive, got {h}"))),
        None => initial_step(&y, &k[0], opts),
    };

    for &target in t_eval {
        while t < target {
            if traj.accepted_steps + traj.rejected_steps >= opts.max_steps {
                return Err(Error::Stiffness { time: t, step: h });
            }
            let remaining = target - t;
            let landing = h >= remaining;
            let step = if landing { remaining } else { h };
            if step < 1e-14 * t.max(1.0) && !landing {
                return Err(Error::Stiffness { time: t, step });
            }

            {
                let [k1, k2, k3, k4, k5, k6, k7] = &mut k;
                combine(&mut stage, &y, step, &[(A21, k1)]);
                f(t + C2 * step, &stage, k2);
                combine(&mut stage, &y, step, &[(A31, k1), (A32, k2)]);
                f(t + C3 * step, &stage, k3);
                combine(&mut stage, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
                f(t + C4 * step, &stage, k4);
                combine(&mut stage, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
                f(t + C5 * step, &stage, k5);
                combine(
                    &mut stage,
                    &y,
                    step,
                    &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
                );
                f(t + step, &stage, k6);
                combine(
                    &mut y_new,
                    &y,
                    step,
                    &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)],
                );
                f(t + step, &y_new, k7);
            }

            if opts.fixed_step.is_some() {
                t = if landing { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                traj.accepted_steps += 1;
                continue;
            }

            let err = error_norm(&k, &y, &y_new, step, opts);
            if !err.is_finite() {
                return Err(Error::Stiffness { time: t, step });
            }
            if err <= 1.0 {
                t = if landing { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                traj.accepted_steps += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // A step shortened to land on an output says nothing about
                // the natural step size, so keep the previous one.
                if !landing || step >= h {
                    h = (step * factor).min(opts.h_max);
                }
            } else {
                traj.rejected_steps += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * t.max(1.0) {
                    return Err(Error::Stiffness { time: t, step: h });
                }
            }
        }
        traj.times.push(target);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

fn error_norm(k: &[CMatrix; 7], y: &CMatrix, y_new: &CMatrix, h: f64, opts: &IntegratorOptions) -> f64 {
    let n = y.len() as f64;
    let mut acc = 0.0;
    let ks: Vec<&[C64]> = k.iter().map(|m| m.as_slice()).collect();
    for i in 0..y.len() {
        let e = (ks[0][i] * E1 + ks[2][i] * E3 + ks[3][i] * E4 + ks[4][i] * E5 + ks[5][i] * E6 + ks[6][i] * E7) * h;
        let sc = opts.atol + opts.rtol * y.as_slice()[i].norm().max(y_new.as_slice()[i].norm());
        acc += (e.norm() / sc).powi(2);
    }
    (acc / n).sqrt()
}

fn initial_step(y: &CMatrix, f0: &CMatrix, opts: &IntegratorOptions) -> f64 {
    let scaled = |m: &CMatrix| {
        let n = m.len() as f64;
        (m.iter()
            .zip(y.iter())
            .map(|(v, yi)| (v.norm() / (opts.atol + opts.rtol * yi.norm())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y);
    let d1 = scaled(f0);
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(opts.h_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(t_end: f64, opts: &IntegratorOptions) -> f64 {
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let tr = integrate_ode(|_, y, dy| dy[(0, 0)] = -y[(0, 0)], &y0, &[t_end], opts).unwrap();
        tr.states[0][(0, 0)].re
    }

    #[test]
    fn zero_generator_is_constant() {
        let y0 = CMatrix::from_element(2, 2, C64::new(0.25, 0.1));
        let tr = integrate_ode(
            |_, _, dy| dy.fill(C64::new(0.0, 0.0)),
            &y0,
            &[0.0, 1.0, 5.0],
            &Default::default(),
        )
        .unwrap();
        for s in tr.states {
            assert_eq!(s, y0);
        }
    }

    #[test]
    fn adaptive_decay_accuracy() {
        let got = decay(3.0, &IntegratorOptions::default());
        assert!((got - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn fifth_order_convergence() {
        let exact = (-2.0f64).exp();
        let e1 = (decay(2.0, &IntegratorOptions::fixed(0.2)) - exact).abs();
        let e2 = (decay(2.0, &IntegratorOptions::fixed(0.1)) - exact).abs();
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn stiffness_is_reported() {
        let y0 = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let opts = IntegratorOptions {
            max_steps: 10,
            ..Default::default()
        };
        let r = integrate_ode(|_, y, dy| dy[(0, 0)] = -1e6 * y[(0, 0)], &y0, &[1.0], &opts);
        assert!(matches!(r, Err(Error::Stiffness { .. })));
    }

    #[test]
    fn rejects_unsorted_grid() {
        let y0 = CMatrix::zeros(1, 1);
        assert!(integrate_ode(|_, _, _| {}, &y0, &[1.0, 0.5], &Default::default()).is_err());
    }
}
