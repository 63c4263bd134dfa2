//! System parameters and loss-channel sets.
//!
//! Everything is expressed in units of the single-photon loss rate, so time
//! is always the dimensionless product `γ_a t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate ratios of the cavity–ancilla system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// `γ_b / γ_a`
    pub gamma_b_ratio: f64,
    /// `η = γ_a2 / γ_a`
    pub eta2: f64,
    /// `g / γ_a`
    pub g_ratio: f64,
    /// Cooperativity multiplier `λ = 8 g² / (γ_a γ_b)`.
    pub lambda_coop: f64,
}

impl SystemParams {
    /// Derives `lambda_coop` from the ratios.
    pub fn new(gamma_b_ratio: f64, eta2: f64, g_ratio: f64) -> Result<Self> {
        let p = Self {
            gamma_b_ratio,
            eta2,
            g_ratio,
            lambda_coop: derived_lambda(g_ratio, gamma_b_ratio),
        };
        p.validate()?;
        Ok(p)
    }

    /// The standard operating point: `g/γ_a = 600`, `γ_b/γ_a = 1800`.
    pub fn standard(eta2: f64) -> Self {
        Self::new(1800.0, eta2, 600.0).expect("constants are valid")
    }

    /// Same ratios with an explicitly chosen `λ`.
    pub fn with_lambda(mut self, lambda_coop: f64) -> Result<Self> {
        self.lambda_coop = lambda_coop;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eta(mut self, eta2: f64) -> Result<Self> {
        self.eta2 = eta2;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_b_ratio", self.gamma_b_ratio),
            ("eta2", self.eta2),
            ("g_ratio", self.g_ratio),
            ("lambda_coop", self.lambda_coop),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Whether `lambda_coop` still equals the value implied by the ratios.
    pub fn is_derived(&self) -> bool {
        let d = derived_lambda(self.g_ratio, self.gamma_b_ratio);
        (self.lambda_coop - d).abs() <= 1e-9 * d.abs().max(1.0)
    }

    /// Rate of the cavity-only engineered dissipator `(λ/2) D[L_eng]` that
    /// the hybrid model reduces to after eliminating the ancilla.
    ///
    /// Eliminating a ground-state ancilla with `H = g(L σ₊ + h.c.)` and decay
    /// `(γ_b/2) D[σ₋]` yields `(4g²/γ_b)/2 · D[L]`, half of `lambda_coop`.
    pub fn generator_lambda(&self) -> f64 {
        0.5 * self.lambda_coop
    }

    /// Hybrid parameters whose elimination yields `generator_lambda() = λ`,
    /// keeping `γ_b` and adjusting `g`.
    pub fn matching_generator(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config(format!(
                "λ must be finite and non-negative, got {lambda}"
            )));
        }
        self.g_ratio = (lambda * self.gamma_b_ratio / 4.0).sqrt();
        self.lambda_coop = 2.0 * lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn channels(&self) -> LossChannelSet {
        LossChannelSet::with_double_photon(self.eta2)
    }
}

fn derived_lambda(g_ratio: f64, gamma_b_ratio: f64) -> f64 {
    if gamma_b_ratio == 0.0 {
        0.0
    } else {
        8.0 * g_ratio * g_ratio / gamma_b_ratio
    }
}

/// Photon-loss orders with their rates relative to `γ_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossChannelSet {
    orders: BTreeMap<usize, f64>,
}

impl LossChannelSet {
    pub fn single_photon() -> Self {
        Self {
            orders: BTreeMap::from([(1, 1.0)]),
        }
    }

    /// Single-photon loss plus `a²` loss at relative rate `eta`. A zero
    /// `eta` leaves the second channel out entirely.
    pub fn with_double_photon(eta: f64) -> Self {
        let mut s = Self::single_photon();
        if eta > 0.0 {
            s.orders.insert(2, eta);
        }
        s
    }

    pub fn none() -> Self {
        Self {
            orders: BTreeMap::new(),
        }
    }

    pub fn from_orders(orders: BTreeMap<usize, f64>) -> Result<Self> {
        let s = Self { orders };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (&n, &eta) in &self.orders {
            if n == 0 {
                return Err(Error::Config("loss order must be at least 1".into()));
            }
            if !eta.is_finite() || eta < 0.0 {
                return Err(Error::Config(format!(
                    "rate of order {n} must be non-negative, got {eta}"
                )));
            }
        }
        if let Some(&eta1) = self.orders.get(&1) {
            if (eta1 - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!("single-photon rate is the unit, got {eta1}")));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.orders.iter().map(|(&n, &e)| (n, e)).filter(|&(_, e)| e > 0.0)
    }

    pub fn rate(&self, n: usize) -> f64 {
        self.orders.get(&n).copied().unwrap_or(0.0)
    }

    pub fn max_order(&self) -> usize {
        self.iter().map(|(n, _)| n).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_point_lambda() {
        let p = SystemParams::standard(0.012);
        assert!((p.lambda_coop - 1600.0).abs() < 1e-9);
        assert!(p.is_derived());
        assert!((p.generator_lambda() - 800.0).abs() < 1e-9);
    }

    #[test]
    fn override_is_not_derived() {
        let p = SystemParams::standard(0.0).with_lambda(1e4).unwrap();
        assert!(!p.is_derived());
    }

    #[test]
    fn matching_generator_round_trip() {
        let p = SystemParams::standard(0.012).matching_generator(1e4).unwrap();
        assert!((p.generator_lambda() - 1e4).abs() < 1e-9);
        // 4g²/γ_b evaluated from the adjusted coupling
        assert!((4.0 * p.g_ratio * p.g_ratio / p.gamma_b_ratio - 1e4).abs() < 1e-6);
        assert!(p.is_derived());
        assert!(SystemParams::standard(0.0).matching_generator(-1.0).is_err());
    }

    #[test]
    fn negative_ratio_rejected() {
        assert!(SystemParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn channel_sets() {
        let c = LossChannelSet::with_double_photon(0.0);
        assert_eq!(c.max_order(), 1);
        let c = LossChannelSet::with_double_photon(0.08);
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![(1, 1.0), (2, 0.08)]);
        assert!(LossChannelSet::from_orders(BTreeMap::from([(1, 0.5)])).is_err());
        assert!(LossChannelSet::from_orders(BTreeMap::from([(2, -0.1)])).is_err());
    }
}
