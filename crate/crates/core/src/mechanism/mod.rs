//! The optimal screening mechanism: pointwise maximization of the effective
//! virtual value, assembly on the θ-grid, envelope pricing and checks.

mod assemble;
mod canonical;
mod pricing;

pub(crate) use assemble::{assemble_grid, NodeEval, Policy};
pub use canonical::{canonicalize, PooledMechanism};
pub use pricing::{price_schedule, profit, verify_ic, Deviation, IcReport, ProfitReport};

use crate::error::{Error, Result};
use crate::model::{prev_float, AttentionSpec, ModelConfig};
use crate::quadrature::cumulative_nodes;
use crate::search::{log_uniform_grid, maximize_largest, Maximum};

/// Views at or below this count as unserved.
pub const SERVED_EPS: f64 = 1e-12;

/// Relative band within which two values of `R` count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// `R(φ̂, λ) = (φ̂ + (1−λ)/λ)·A(λ) − γ/λ`.
pub fn effective_virtual_value(phi_hat: f64, lambda: f64, cfg: &ModelConfig) -> Result<f64> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Domain {
            what: "lambda",
            value: lambda,
            domain: "(0, 1]".into(),
        });
    }
    Ok(r_value(&cfg.attention, cfg.gamma, phi_hat, lambda))
}

pub(crate) fn r_value(attention: &AttentionSpec, gamma: f64, phi: f64, lambda: f64) -> f64 {
    ((phi * lambda + 1.0 - lambda) * attention.value(lambda) - gamma) / lambda
}

/// `λ²·∂R/∂λ`, which has the sign of the slope.
fn r_slope(attention: &AttentionSpec, gamma: f64, phi: f64, lambda: f64) -> f64 {
    gamma - attention.value(lambda) + lambda * (lambda * phi + 1.0 - lambda) * attention.slope(lambda)
}

/// Reusable search state for `argmax_λ R(φ̂, λ)` under one configuration.
pub struct QualitySearch<'a> {
    cfg: &'a ModelConfig,
    grid: Vec<f64>,
    extra: Vec<f64>,
}

impl<'a> QualitySearch<'a> {
    pub fn new(cfg: &'a ModelConfig) -> Self {
        let grid = log_uniform_grid(cfg.grid.lambda_coarse_points, cfg.lambda_floor());
        let extra = cfg.attention.kink().into_iter().collect();
        QualitySearch { cfg, grid, extra }
    }

    pub fn r(&self, phi: f64, lambda: f64) -> f64 {
        r_value(&self.cfg.attention, self.cfg.gamma, phi, lambda)
    }

    /// Largest maximizer of `R(φ̂, ·)` and the maximal value.
    pub fn best(&self, phi: f64) -> Maximum {
        let a = &self.cfg.attention;
        let g = self.cfg.gamma;
        let f = |l: f64| r_value(a, g, phi, l);
        let s = |l: f64| r_slope(a, g, phi, l);
        // A kink competes only where it is a local maximum. Comparing it by
        // value against a smooth peak converging onto it is decided by
        // rounding noise.
        let extra: Vec<f64> = self
            .extra
            .iter()
            .copied()
            .filter(|&k| s(prev_float(k)) >= 0.0 && s(k) <= 0.0)
            .collect();
        maximize_largest(&f, Some(&s), &self.grid, &extra, self.cfg.grid.refine_tol, TIE_TOL)
    }

    pub fn views(&self, r: f64) -> f64 {
        self.cfg.cost.inverse_marginal_cost(r)
    }
}

/// `Λ*(φ̂)`: the largest maximizer of `R(φ̂, ·)` on `(0, 1]`.
pub fn optimal_quality(phi_hat: f64, cfg: &ModelConfig) -> f64 {
    QualitySearch::new(cfg).best(phi_hat).x
}

/// `V* = c'^{-1}(max{R(φ̂, λ*), 0})`.
pub fn optimal_views(phi_hat: f64, lambda_star: f64, cfg: &ModelConfig) -> f64 {
    debug_assert!(lambda_star > 0.0 && lambda_star <= 1.0);
    cfg.cost
        .inverse_marginal_cost(r_value(&cfg.attention, cfg.gamma, phi_hat, lambda_star))
}

const AT_ONE: u32 = 2;
const AT_KINK: u32 = 4;

pub(crate) fn regime_of(lambda: f64, v: f64, kink: Option<f64>) -> u32 {
    let mut r = u32::from(v > 0.0);
    if lambda == 1.0 {
        r |= AT_ONE;
    } else if kink.is_some_and(|k| (lambda - k).abs() <= 1e-12) {
        r |= AT_KINK;
    }
    r
}

pub(crate) struct OptimalPolicy<'a> {
    search: QualitySearch<'a>,
    kink: Option<f64>,
}

impl<'a> OptimalPolicy<'a> {
    pub(crate) fn new(cfg: &'a ModelConfig) -> Self {
        OptimalPolicy {
            search: QualitySearch::new(cfg),
            kink: cfg.attention.kink(),
        }
    }
}

impl Policy for OptimalPolicy<'_> {
    fn eval(&self, _theta: f64, phi: f64) -> NodeEval {
        let m = self.search.best(phi);
        let v = self.search.views(m.value);
        NodeEval {
            lambda: m.x,
            v_good: v,
            regime: regime_of(m.x, v, self.kink),
        }
    }
}

struct ClosedFormPolicy<'a> {
    cfg: &'a ModelConfig,
}

impl Policy for ClosedFormPolicy<'_> {
    fn eval(&self, _theta: f64, phi: f64) -> NodeEval {
        let (lambda, v) = closed_form_point(phi, self.cfg);
        NodeEval {
            lambda,
            v_good: v,
            regime: regime_of(lambda, v, None),
        }
    }
}

/// `(Λ, V)` of the linear-attention optimum at virtual value `φ`.
pub fn closed_form_point(phi: f64, cfg: &ModelConfig) -> (f64, f64) {
    let g = cfg.gamma;
    let lambda = if phi <= 1.0 - g { (g / (1.0 - phi)).sqrt().min(1.0) } else { 1.0 };
    let v = if phi >= 1.0 - 1.0 / (4.0 * g) {
        cfg.cost
            .inverse_marginal_cost(phi * lambda + 1.0 - lambda - g / lambda)
    } else {
        0.0
    };
    (lambda, v)
}

/// Largest decrease between neighbouring nodes, reported as a nonpositive number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub quality_drop: f64,
    pub views_drop: f64,
    pub allocation_drop: f64,
}

fn worst_drop(xs: &[f64]) -> f64 {
    xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::min)
}

/// A direct mechanism sampled on a sorted θ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSolution {
    pub label: String,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub quality: Vec<f64>,
    pub views_good: Vec<f64>,
    pub views_bad: Vec<f64>,
    pub price: Vec<f64>,
    /// Node intervals `[θ_i, θ_{i+1}]` that straddle a kink or jump.
    pub breaks: Vec<usize>,
    pub diagnostics: Diagnostics,
}

impl MechanismSolution {
    /// Fills `V_b` by the pinned-down ratio and prices by the envelope formula.
    pub fn build(
        label: &str,
        cfg: &ModelConfig,
        theta: Vec<f64>,
        phi: Vec<f64>,
        quality: Vec<f64>,
        views_good: Vec<f64>,
        breaks: Vec<usize>,
    ) -> Self {
        let views_bad = quality
            .iter()
            .zip(&views_good)
            .map(|(&l, &v)| if l > 0.0 && v > 0.0 { v * (1.0 - l) / l } else { 0.0 })
            .collect();
        let mut sol = MechanismSolution {
            label: label.to_string(),
            theta,
            phi,
            quality,
            views_good,
            views_bad,
            price: Vec::new(),
            breaks,
            diagnostics: Diagnostics::default(),
        };
        let alloc = sol.allocation(cfg);
        sol.diagnostics = Diagnostics {
            quality_drop: worst_drop(&sol.quality),
            views_drop: worst_drop(&sol.views_good),
            allocation_drop: worst_drop(&alloc),
        };
        sol.price = envelope_prices(&sol.theta, &alloc, &sol.breaks);
        sol
    }

    /// Builds a mechanism from arbitrary `(Λ, V_g)` samples with no known breaks.
    pub fn from_parts(label: &str, cfg: &ModelConfig, theta: Vec<f64>, quality: Vec<f64>, views_good: Vec<f64>) -> Result<Self> {
        let n = theta.len();
        if n < 2 || quality.len() != n || views_good.len() != n {
            return Err(Error::Precondition("mechanism arrays must have equal length >= 2".into()));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("theta grid must be strictly increasing".into()));
        }
        let phi = theta.iter().map(|&t| cfg.dist.phi(t)).collect();
        Ok(Self::build(label, cfg, theta, phi, quality, views_good, Vec::new()))
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Engagement density `A(Λ(θ))·V_g(θ)` per node.
    pub fn allocation(&self, cfg: &ModelConfig) -> Vec<f64> {
        self.quality
            .iter()
            .zip(&self.views_good)
            .map(|(&l, &v)| cfg.attention.value(l) * v)
            .collect()
    }

    /// Piecewise-linear `(Λ, V_g)` at an off-grid `θ`, clamped to the grid.
    pub fn at(&self, theta: f64) -> (f64, f64) {
        let k = self.theta.partition_point(|&t| t <= theta);
        if k == 0 {
            return (self.quality[0], self.views_good[0]);
        }
        if k >= self.len() {
            let last = self.len() - 1;
            return (self.quality[last], self.views_good[last]);
        }
        let (t0, t1) = (self.theta[k - 1], self.theta[k]);
        let w = (theta - t0) / (t1 - t0);
        let lerp = |a: f64, b: f64| a + w * (b - a);
        (lerp(self.quality[k - 1], self.quality[k]), lerp(self.views_good[k - 1], self.views_good[k]))
    }

    /// Information rent `U(θ_i) = ∫₀^θ_i A(Λ)V_g`.
    pub fn utility(&self, cfg: &ModelConfig) -> Vec<f64> {
        let alloc = self.allocation(cfg);
        self.theta
            .iter()
            .zip(alloc.iter().zip(&self.price))
            .map(|(&t, (&a, &p))| t * a - p)
            .collect()
    }
}

pub(crate) fn envelope_prices(theta: &[f64], alloc: &[f64], breaks: &[usize]) -> Vec<f64> {
    let rent = cumulative_nodes(theta, alloc, breaks);
    theta
        .iter()
        .zip(alloc.iter().zip(&rent))
        .map(|(&t, (&a, &u))| t * a - u)
        .collect()
}

/// The profit-maximizing mechanism.
pub fn solve_optimal(cfg: &ModelConfig) -> Result<MechanismSolution> {
    cfg.validate()?;
    let sol = assemble_grid(cfg, &OptimalPolicy::new(cfg)).into_solution(cfg, "optimal");
    let d = sol.diagnostics;
    let v_scale = sol.views_good.iter().fold(1.0f64, |m, &v| m.max(v));
    if d.quality_drop < -1e-9 || d.views_drop < -1e-9 * v_scale {
        let at = |xs: &[f64]| {
            let i = (1..xs.len())
                .min_by(|&i, &j| (xs[i] - xs[i - 1]).total_cmp(&(xs[j] - xs[j - 1])))
                .unwrap_or(0);
            sol.theta[i]
        };
        return Err(Error::Internal(format!(
            "optimal mechanism is not monotone (quality drop {:e} at theta {}, views drop {:e} at theta {})",
            d.quality_drop,
            at(&sol.quality),
            d.views_drop,
            at(&sol.views_good)
        )));
    }
    Ok(sol)
}

/// The linear-attention optimum in closed form.
pub fn closed_form_linear(cfg: &ModelConfig) -> Result<MechanismSolution> {
    if cfg.attention.plain_power() != Some(1.0) {
        return Err(Error::Precondition(
            "closed form requires linear attention A(lambda) = lambda without transforms".into(),
        ));
    }
    cfg.validate()?;
    Ok(assemble_grid(cfg, &ClosedFormPolicy { cfg }).into_solution(cfg, "closed_form_linear"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AttentionSpec, CostSpec};
    use approx::assert_relative_eq;

    #[test]
    fn r_examples() {
        let cfg = ModelConfig::running_example();
        assert_eq!(effective_virtual_value(0.5, 1.0, &cfg).unwrap(), 0.25);
        assert_relative_eq!(effective_virtual_value(0.5, 0.5, &cfg).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(effective_virtual_value(0.0, 0.5, &cfg).unwrap(), 0.0, epsilon = 1e-15);
        assert!(effective_virtual_value(0.5, 0.0, &cfg).is_err());
        assert!(effective_virtual_value(0.5, 1.5, &cfg).is_err());
    }

    #[test]
    fn quality_examples() {
        let cfg = ModelConfig::running_example();
        assert_relative_eq!(optimal_quality(0.5, &cfg), 0.5f64.sqrt(), epsilon = 1e-10);
        assert_eq!(optimal_quality(0.9, &cfg), 1.0);
        let l = optimal_quality(0.5, &cfg);
        assert_relative_eq!(optimal_views(0.5, l, &cfg), 1.0 - 0.5f64.sqrt(), epsilon = 1e-10);
        assert_eq!(optimal_views(0.0, 0.5, &cfg), 0.0);
        assert_eq!(optimal_views(-0.9, 0.5, &cfg), 0.0);
    }

    #[test]
    fn quality_at_kinks() {
        // Addiction: R is decreasing right of 1 − z, so the kink can be optimal.
        let cfg = ModelConfig::running_example()
            .with_attention(AttentionSpec::power(1.0).unwrap().with_addiction(0.1).unwrap())
            .unwrap();
        let q = optimal_quality(0.99, &cfg);
        assert!(q <= 0.9 + 1e-12, "{q}");
    }

    #[test]
    fn closed_form_examples() {
        let cfg = ModelConfig::running_example();
        let (l, v) = closed_form_point(0.5, &cfg);
        assert_relative_eq!(l, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(v, 1.0 - 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(closed_form_point(0.75, &cfg).0, 1.0);
        let cfg3 = cfg.with_gamma(0.3).unwrap();
        let cutoff = 1.0 - 1.0 / 1.2;
        assert!(closed_form_point(cutoff, &cfg3).1.abs() < 1e-12);
        let bad = cfg.with_attention(AttentionSpec::power(0.5).unwrap()).unwrap();
        assert!(matches!(closed_form_linear(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn solver_matches_closed_form() {
        let cfg = ModelConfig::running_example();
        let num = solve_optimal(&cfg).unwrap();
        let cf = closed_form_linear(&cfg).unwrap();
        for (i, &phi) in num.phi.iter().enumerate() {
            let (l, v) = closed_form_point(phi, &cfg);
            assert!((num.quality[i] - l).abs() < 1e-9, "phi {phi}: {} vs {l}", num.quality[i]);
            assert!((num.views_good[i] - v).abs() < 1e-9);
        }
        assert!(cf.diagnostics.quality_drop == 0.0 && cf.diagnostics.views_drop == 0.0);
    }

    #[test]
    fn costly_certification_is_perfect() {
        let cfg = ModelConfig::running_example().with_gamma(0.6).unwrap();
        let sol = solve_optimal(&cfg).unwrap();
        for (l, v) in sol.quality.iter().zip(&sol.views_good) {
            if *v > 0.0 {
                assert_eq!(*l, 1.0);
            }
        }
    }

    #[test]
    fn cubic_cost_views() {
        let cfg = ModelConfig::running_example().with_cost(CostSpec::new(1.0, 3.0).unwrap()).unwrap();
        let l = optimal_quality(0.9, &cfg);
        assert_relative_eq!(optimal_views(0.9, l, &cfg), 0.65f64.sqrt(), epsilon = 1e-12);
    }
}
