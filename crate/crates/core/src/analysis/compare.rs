use crate::error::{Error, Result};
use crate::mechanism::{assemble_grid, MechanismSolution, NodeEval, OptimalPolicy, Policy};
use crate::model::ModelConfig;
use crate::quadrature::integrate_nodes;

use super::{content_diversity, ServingSet, SERVED_EPS};

/// Which branch of the perfect-certification dichotomy holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dichotomy {
    /// Quality is one wherever anyone is served.
    PerfectOptimal,
    /// Some type with `φ > γ` gets quality below one, and some type with
    /// `φ < γ`, unserved under perfect certification, gets views.
    ReducesDiversity { imperfect_at: f64, extra_served_at: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub engagement_optimal: Vec<f64>,
    pub engagement_perfect: Vec<f64>,
    pub delta: Vec<f64>,
    pub total_optimal: f64,
    pub total_perfect: f64,
    pub diversity_optimal: ServingSet,
    pub diversity_perfect: ServingSet,
    pub dichotomy: Dichotomy,
    pub optimal: MechanismSolution,
    pub perfect: MechanismSolution,
}

/// Tags nodes with the perfect-certification serving regime as well, so the
/// shared grid resolves both mechanisms' cutoffs.
struct JointPolicy<'a> {
    cfg: &'a ModelConfig,
    optimal: OptimalPolicy<'a>,
}

impl Policy for JointPolicy<'_> {
    fn eval(&self, theta: f64, phi: f64) -> NodeEval {
        let mut e = self.optimal.eval(theta, phi);
        let perfect_served = phi - self.cfg.gamma > 0.0;
        e.regime |= u32::from(perfect_served) << 8;
        e
    }
}

/// Solves the optimum and enforced perfect certification on one grid.
pub fn compare_to_perfect(cfg: &ModelConfig) -> Result<ComparisonReport> {
    cfg.validate()?;
    let joint = JointPolicy {
        cfg,
        optimal: OptimalPolicy::new(cfg),
    };
    let grid = assemble_grid(cfg, &joint);
    let perfect_views: Vec<f64> = grid
        .phi
        .iter()
        .map(|&p| cfg.cost.inverse_marginal_cost(p - cfg.gamma))
        .collect();
    let perfect = MechanismSolution::build(
        "perfect",
        cfg,
        grid.theta.clone(),
        grid.phi.clone(),
        vec![1.0; grid.theta.len()],
        perfect_views,
        grid.breaks.clone(),
    );
    let optimal = grid.into_solution(cfg, "optimal");

    let eo = optimal.allocation(cfg);
    let ep = perfect.allocation(cfg);
    let delta: Vec<f64> = eo.iter().zip(&ep).map(|(a, b)| a - b).collect();
    let total = |e: &[f64]| {
        let y: Vec<f64> = e.iter().zip(&optimal.theta).map(|(v, &t)| v * cfg.dist.pdf(t)).collect();
        integrate_nodes(&optimal.theta, &y, &optimal.breaks)
    };
    let dichotomy = classify(&optimal, cfg)?;
    Ok(ComparisonReport {
        total_optimal: total(&eo),
        total_perfect: total(&ep),
        diversity_optimal: content_diversity(&optimal, cfg),
        diversity_perfect: content_diversity(&perfect, cfg),
        theta: optimal.theta.clone(),
        phi: optimal.phi.clone(),
        engagement_optimal: eo,
        engagement_perfect: ep,
        delta,
        dichotomy,
        optimal,
        perfect,
    })
}

fn classify(sol: &MechanismSolution, cfg: &ModelConfig) -> Result<Dichotomy> {
    let below_one = |l: f64| l < 1.0 - 1e-12;
    let served = |i: usize| sol.views_good[i] > SERVED_EPS;
    let perfect_everywhere = (0..sol.len()).all(|i| !served(i) || !below_one(sol.quality[i]));
    if perfect_everywhere {
        return Ok(Dichotomy::PerfectOptimal);
    }
    let imperfect = (0..sol.len()).find(|&i| sol.phi[i] > cfg.gamma && below_one(sol.quality[i]));
    let extra = (0..sol.len()).find(|&i| sol.phi[i] < cfg.gamma && served(i));
    match (imperfect, extra) {
        (Some(i), Some(j)) => Ok(Dichotomy::ReducesDiversity {
            imperfect_at: sol.theta[i],
            extra_served_at: sol.theta[j],
        }),
        _ => Err(Error::Internal(format!(
            "perfect-certification dichotomy fails: imperfect above gamma at {:?}, served below gamma at {:?}",
            imperfect.map(|i| sol.theta[i]),
            extra.map(|j| sol.theta[j])
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_sign_pattern() {
        let cfg = ModelConfig::running_example();
        let rep = compare_to_perfect(&cfg).unwrap();
        assert!(matches!(rep.dichotomy, Dichotomy::ReducesDiversity { .. }));
        for i in 0..rep.theta.len() {
            let phi = rep.phi[i];
            let s = (1.0 - phi).sqrt();
            let analytic = if (0.0..=0.75).contains(&phi) { 0.5 / s * (1.0 - s) - (phi - 0.25).max(0.0) } else { 0.0 };
            assert!((rep.delta[i] - analytic).abs() < 1e-9, "phi {phi}: {} vs {analytic}", rep.delta[i]);
        }
    }

    #[test]
    fn costly_untargeted_views_make_no_difference() {
        let cfg = ModelConfig::running_example().with_gamma(0.6).unwrap();
        let rep = compare_to_perfect(&cfg).unwrap();
        assert_eq!(rep.dichotomy, Dichotomy::PerfectOptimal);
        assert!(rep.delta.iter().all(|d| d.abs() < 1e-15));
    }
}
