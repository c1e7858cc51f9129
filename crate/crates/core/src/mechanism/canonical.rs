//! Mechanisms that pool several types under one certificate, and their
//! reduction to one certificate per type.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ModelConfig;

use super::MechanismSolution;

/// A menu sampled on a θ-grid where types may share a message.
///
/// `weight[i]` is the probability mass carried by node `i`; expectations
/// conditional on a message use these weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledMechanism {
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
    pub message: Vec<usize>,
    pub views_good: Vec<f64>,
    pub views_bad: Vec<f64>,
    pub price: Vec<f64>,
}

impl PooledMechanism {
    pub fn new(
        theta: Vec<f64>,
        weight: Vec<f64>,
        message: Vec<usize>,
        views_good: Vec<f64>,
        views_bad: Vec<f64>,
        price: Vec<f64>,
    ) -> Result<Self> {
        let n = theta.len();
        let lens = [weight.len(), message.len(), views_good.len(), views_bad.len(), price.len()];
        if n < 2 || lens.iter().any(|&l| l != n) {
            return Err(Error::Precondition("pooled mechanism arrays must have equal length >= 2".into()));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("theta grid must be strictly increasing".into()));
        }
        if weight.iter().any(|&w| !(w >= 0.0)) || views_good.iter().chain(&views_bad).any(|&v| !(v >= 0.0)) {
            return Err(Error::Precondition("weights and views must be nonnegative".into()));
        }
        Ok(PooledMechanism {
            theta,
            weight,
            message,
            views_good,
            views_bad,
            price,
        })
    }

    /// Trapezoid masses `f(θ_i)·Δθ_i` normalized to sum to one.
    pub fn grid_weights(theta: &[f64], cfg: &ModelConfig) -> Vec<f64> {
        let n = theta.len();
        let mut w: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i > 0 { theta[i] - theta[i - 1] } else { 0.0 };
                let right = if i + 1 < n { theta[i + 1] - theta[i] } else { 0.0 };
                0.5 * (left + right) * cfg.dist.pdf(theta[i])
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        }
        w
    }

    /// Treats every node of `sol` as its own message.
    pub fn from_solution(sol: &MechanismSolution, weight: Vec<f64>) -> Result<Self> {
        Self::new(
            sol.theta.clone(),
            weight,
            (0..sol.len()).collect(),
            sol.views_good.clone(),
            sol.views_bad.clone(),
            sol.price.clone(),
        )
    }

    /// `Λ(m) = E[V_g | m] / E[V_g + V_b | m]`, set to 1 for messages without views.
    pub fn message_quality(&self) -> BTreeMap<usize, f64> {
        let mut sums: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for i in 0..self.theta.len() {
            let e = sums.entry(self.message[i]).or_default();
            e.0 += self.weight[i] * self.views_good[i];
            e.1 += self.weight[i] * (self.views_good[i] + self.views_bad[i]);
        }
        sums.into_iter()
            .map(|(m, (g, t))| (m, if t > 0.0 { g / t } else { 1.0 }))
            .collect()
    }

    pub fn quality(&self) -> Vec<f64> {
        let q = self.message_quality();
        self.message.iter().map(|m| q[m]).collect()
    }

    /// Each type's payoff `θ·A(Λ(m))·V_g − P`.
    pub fn utilities(&self, cfg: &ModelConfig) -> Vec<f64> {
        let q = self.quality();
        (0..self.theta.len())
            .map(|i| self.theta[i] * cfg.attention.value(q[i]) * self.views_good[i] - self.price[i])
            .collect()
    }

    /// Weighted sum of the platform's per-type profit.
    pub fn profit(&self, cfg: &ModelConfig) -> f64 {
        let q = self.quality();
        (0..self.theta.len())
            .map(|i| {
                let (vg, vb) = (self.views_good[i], self.views_bad[i]);
                self.weight[i]
                    * (self.price[i] + cfg.attention.value(q[i]) * vb
                        - cfg.gamma * (vg + vb)
                        - cfg.cost.cost(vg))
            })
            .sum()
    }
}

/// Gives each type its own certificate of the same quality, re-spreading bad
/// views as `Ṽ_b = V_g·(1−Λ)/Λ`. Prices are carried over unchanged.
pub fn canonicalize(pooled: &PooledMechanism, cfg: &ModelConfig) -> Result<MechanismSolution> {
    let quality = pooled.quality();
    let phi = pooled.theta.iter().map(|&t| cfg.dist.phi(t)).collect();
    let mut sol = MechanismSolution::build(
        "canonical",
        cfg,
        pooled.theta.clone(),
        phi,
        quality,
        pooled.views_good.clone(),
        Vec::new(),
    );
    sol.price = pooled.price.clone();
    Ok(sol)
}
