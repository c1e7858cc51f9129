use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::quadrature::integrate_nodes;

use super::{envelope_prices, r_value, MechanismSolution};

/// Envelope prices `P(θ) = θ·a(θ) − ∫₀^θ a`, with `a = A(Λ)·V_g`.
pub fn price_schedule(sol: &MechanismSolution, cfg: &ModelConfig) -> Result<Vec<f64>> {
    let alloc = sol.allocation(cfg);
    let scale = alloc.iter().fold(1.0f64, |m, &a| m.max(a.abs()));
    if let Some(i) = alloc.windows(2).position(|w| w[1] - w[0] < -1e-9 * scale) {
        return Err(Error::Precondition(format!(
            "allocation decreases between theta = {} and {}",
            sol.theta[i],
            sol.theta[i + 1]
        )));
    }
    Ok(envelope_prices(&sol.theta, &alloc, &sol.breaks))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviation {
    Misreport(f64),
    OptOut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcReport {
    /// Largest gain from a deviation; positive means IC or IR fails.
    pub max_violation: f64,
    /// `θ̄ · max allocation`, the natural payoff scale.
    pub scale: f64,
    /// Type and deviation attaining `max_violation`.
    pub at: Option<(f64, Deviation)>,
}

impl IcReport {
    pub fn scaled(&self) -> f64 {
        if self.scale > 0.0 {
            self.max_violation / self.scale
        } else {
            self.max_violation
        }
    }
}

/// Checks every misreport between grid types and the outside option.
pub fn verify_ic(sol: &MechanismSolution, cfg: &ModelConfig) -> IcReport {
    let alloc = sol.allocation(cfg);
    let theta = &sol.theta;
    let price = &sol.price;
    let per_type: Vec<(f64, Deviation)> = (0..theta.len())
        .into_par_iter()
        .map(|i| {
            let truthful = theta[i] * alloc[i] - price[i];
            let mut best = (-truthful, Deviation::OptOut);
            for j in 0..theta.len() {
                let gain = theta[i] * alloc[j] - price[j] - truthful;
                if gain > best.0 {
                    best = (gain, Deviation::Misreport(theta[j]));
                }
            }
            best
        })
        .collect();
    let mut report = IcReport {
        max_violation: 0.0,
        scale: cfg.theta_max() * alloc.iter().fold(0.0f64, |m, &a| m.max(a)),
        at: None,
    };
    for (i, (gain, dev)) in per_type.into_iter().enumerate() {
        if gain > report.max_violation {
            report.max_violation = gain;
            report.at = Some((theta[i], dev));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitReport {
    /// Prices plus bad-provider revenue net of view costs.
    pub direct: f64,
    /// Expected `R(φ, Λ)·V_g − c(V_g)`.
    pub virtual_surplus: f64,
}

impl ProfitReport {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.virtual_surplus).abs() / self.direct.abs().max(self.virtual_surplus.abs()).max(1e-300)
    }
}

pub fn profit(sol: &MechanismSolution, cfg: &ModelConfig) -> ProfitReport {
    let a = &cfg.attention;
    let n = sol.len();
    let mut direct = Vec::with_capacity(n);
    let mut virt = Vec::with_capacity(n);
    for i in 0..n {
        let (l, vg, vb) = (sol.quality[i], sol.views_good[i], sol.views_bad[i]);
        let f = cfg.dist.pdf(sol.theta[i]);
        let cost = cfg.cost.cost(vg);
        direct.push(f * (sol.price[i] + a.value(l) * vb - cfg.gamma * (vb + vg) - cost));
        let s = if vg > 0.0 && l > 0.0 {
            r_value(a, cfg.gamma, sol.phi[i], l) * vg - cost
        } else {
            0.0
        };
        virt.push(f * s);
    }
    ProfitReport {
        direct: integrate_nodes(&sol.theta, &direct, &sol.breaks),
        virtual_surplus: integrate_nodes(&sol.theta, &virt, &sol.breaks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::solve_optimal;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn constant_allocation_is_free() {
        let cfg = ModelConfig::running_example();
        let t = grid(101);
        let sol = MechanismSolution::from_parts("c", &cfg, t.clone(), vec![1.0; 101], vec![0.4; 101]).unwrap();
        for p in price_schedule(&sol, &cfg).unwrap() {
            assert!(p.abs() < 1e-14);
        }
    }

    #[test]
    fn linear_allocation_prices() {
        let cfg = ModelConfig::running_example();
        let t = grid(101);
        let sol = MechanismSolution::from_parts("lin", &cfg, t.clone(), vec![1.0; 101], t.clone()).unwrap();
        for (th, p) in t.iter().zip(price_schedule(&sol, &cfg).unwrap()) {
            assert_relative_eq!(p, th * th / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn decreasing_allocation_is_flagged() {
        let cfg = ModelConfig::running_example();
        let t = grid(51);
        let v: Vec<f64> = t.iter().map(|x| 1.0 - x).collect();
        let sol = MechanismSolution::from_parts("dec", &cfg, t, vec![1.0; 51], v).unwrap();
        assert!(matches!(price_schedule(&sol, &cfg), Err(Error::Precondition(_))));
        let ic = verify_ic(&sol, &cfg);
        assert!(ic.max_violation > 1e-3);
    }

    #[test]
    fn zero_mechanism() {
        let cfg = ModelConfig::running_example();
        let sol = MechanismSolution::from_parts("zero", &cfg, grid(11), vec![1.0; 11], vec![0.0; 11]).unwrap();
        assert_eq!(verify_ic(&sol, &cfg).max_violation, 0.0);
        let p = profit(&sol, &cfg);
        assert_eq!(p.direct, 0.0);
        assert_eq!(p.virtual_surplus, 0.0);
    }

    #[test]
    fn optimum_is_ic_and_revenue_equivalent() {
        let cfg = ModelConfig::running_example();
        let sol = solve_optimal(&cfg).unwrap();
        let ic = verify_ic(&sol, &cfg);
        assert!(ic.scaled() <= 1e-8, "{ic:?}");
        let p = profit(&sol, &cfg);
        assert!(p.relative_gap() <= 1e-6, "{p:?}");
        let u = sol.utility(&cfg);
        assert!(u.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(u[0].abs() < 1e-15);
    }
}
