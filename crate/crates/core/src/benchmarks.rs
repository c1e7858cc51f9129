//! Restricted mechanisms: the engagement planner, a single certificate of
//! fixed quality (perfect certification included), and two certificates
//! split at a cutoff type.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanism::{assemble_grid, r_value, MechanismSolution, NodeEval, Policy, TIE_TOL};
use crate::model::ModelConfig;
use crate::quadrature::adaptive_simpson;
use crate::search::{golden_max_log, log_uniform_grid, maximize_largest};

/// Coarse grid size per axis for the two-certificate search.
const TWO_CERT_GRID: usize = 64;
/// Coarse grid size for the single-certificate search.
const SINGLE_GRID: usize = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct SingleCertResult {
    pub lambda: f64,
    pub mechanism: MechanismSolution,
    /// `Π^s(λ)`.
    pub profit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCertResult {
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub theta_hat: f64,
    pub mechanism: MechanismSolution,
    /// `Π^bin(λ̲, λ̄, θ̂)`.
    pub profit: f64,
    /// False when the allocation fails to be nondecreasing.
    pub feasible: bool,
    /// Coarse-grid pairs within `PLATEAU_TOL` of the reported profit. More
    /// than one flags a flat optimum whose maximizer need not be unique.
    pub near_optimal_pairs: usize,
}

/// Relative band used to count near-optimal certificate pairs.
pub const PLATEAU_TOL: f64 = 1e-9;

struct ConstantPolicy {
    lambda: f64,
    views: f64,
}

impl Policy for ConstantPolicy {
    fn eval(&self, _theta: f64, _phi: f64) -> NodeEval {
        NodeEval {
            lambda: self.lambda,
            v_good: self.views,
            regime: 0,
        }
    }
}

/// Quality `λ̲` below the cutoff and `λ̄` from it upward.
struct CutoffPolicy<'a> {
    cfg: &'a ModelConfig,
    low: f64,
    high: f64,
    theta_hat: f64,
}

impl CutoffPolicy<'_> {
    fn lambda_at(&self, theta: f64) -> f64 {
        if theta >= self.theta_hat && self.theta_hat < self.cfg.theta_max() {
            self.high
        } else {
            self.low
        }
    }
}

impl Policy for CutoffPolicy<'_> {
    fn eval(&self, theta: f64, phi: f64) -> NodeEval {
        let lambda = self.lambda_at(theta);
        let r = r_value(&self.cfg.attention, self.cfg.gamma, phi, lambda);
        let v = self.cfg.cost.inverse_marginal_cost(r);
        let high = lambda == self.high && self.high != self.low;
        NodeEval {
            lambda,
            v_good: v,
            regime: u32::from(v > 0.0) | (u32::from(high) << 1),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "lambda",
            value: lambda,
            domain: "(0, 1]".into(),
        })
    }
}

/// Maximizes engagement net of view costs: perfect quality and identical
/// traffic `c'^{-1}(1 − γ)` for every type.
pub fn planner(cfg: &ModelConfig) -> MechanismSolution {
    let policy = ConstantPolicy {
        lambda: 1.0,
        views: cfg.cost.inverse_marginal_cost(1.0 - cfg.gamma),
    };
    assemble_grid(cfg, &policy).into_solution(cfg, "planner")
}

/// Expected virtual surplus when types in `[lo, hi]` receive quality `λ`
/// and the pointwise optimal views, summed over `segments = [(λ, lo, hi)]`.
pub fn restricted_profit(cfg: &ModelConfig, segments: &[(f64, f64, f64)]) -> f64 {
    let a = &cfg.attention;
    segments
        .iter()
        .filter(|(_, lo, hi)| hi > lo)
        .map(|&(lambda, lo, hi)| {
            let att = a.value(lambda);
            if att <= 0.0 {
                return 0.0;
            }
            // R(φ, λ) ≥ 0 iff φ ≥ φ_c.
            let phi_c = cfg.gamma / (lambda * att) - (1.0 - lambda) / lambda;
            let start = match cfg.dist.first_theta_with_phi_at_least(phi_c) {
                Some(t) => t.max(lo),
                None => return 0.0,
            };
            if start >= hi {
                return 0.0;
            }
            let mut cuts = vec![start];
            cuts.extend(cfg.dist.knots().iter().copied().filter(|&k| k > start && k < hi));
            cuts.push(hi);
            let integrand = |t: f64| {
                let r = r_value(a, cfg.gamma, cfg.dist.phi(t), lambda);
                cfg.cost.surplus(r) * cfg.dist.pdf(t)
            };
            cuts.windows(2)
                .map(|w| {
                    // Evaluate just inside each piece so the density is the piece's own.
                    let (l, r) = (w[0], w[1]);
                    let inner = |t: f64| integrand(t.clamp(l, crate::model::prev_float(r).max(l)));
                    adaptive_simpson(&inner, l, r, 1e-12, 1e-16)
                })
                .sum::<f64>()
        })
        .sum()
}

/// `Π^s(λ)`.
pub fn single_profit(cfg: &ModelConfig, lambda: f64) -> f64 {
    restricted_profit(cfg, &[(lambda, 0.0, cfg.theta_max())])
}

pub fn single_certificate(cfg: &ModelConfig, lambda: f64) -> Result<SingleCertResult> {
    check_lambda(lambda)?;
    let policy = CutoffPolicy {
        cfg,
        low: lambda,
        high: lambda,
        theta_hat: 0.0,
    };
    let label = if lambda == 1.0 { "perfect" } else { "single" };
    Ok(SingleCertResult {
        lambda,
        mechanism: assemble_grid(cfg, &policy).into_solution(cfg, label),
        profit: single_profit(cfg, lambda),
    })
}

/// Perfect certification: a single certificate of quality one.
pub fn enforced_perfect(cfg: &ModelConfig) -> Result<SingleCertResult> {
    single_certificate(cfg, 1.0)
}

/// Largest maximizer of `Π^s` over `(0, 1]`.
pub fn optimize_single(cfg: &ModelConfig) -> Result<SingleCertResult> {
    cfg.validate()?;
    let grid = log_uniform_grid(SINGLE_GRID, cfg.lambda_floor());
    let f = |l: f64| single_profit(cfg, l);
    let best = maximize_largest(&f, None, &grid, &[], cfg.grid.refine_tol, TIE_TOL);
    single_certificate(cfg, best.x)
}

/// `θ̂`: the first type for which `λ̄` yields at least the effective virtual
/// value of `λ̲`, or `θ̄` when there is none.
pub fn crossing_cutoff(cfg: &ModelConfig, low: f64, high: f64) -> f64 {
    let a = &cfg.attention;
    let (al, ah) = (a.value(low), a.value(high));
    // R(φ, λ) = φ·A(λ) + k(λ).
    let k = |l: f64, att: f64| (1.0 - l) / l * att - cfg.gamma / l;
    let (kl, kh) = (k(low, al), k(high, ah));
    if ah == al {
        return if kh >= kl { 0.0 } else { cfg.theta_max() };
    }
    let phi_star = (kl - kh) / (ah - al);
    let mut t = match cfg.dist.first_theta_with_phi_at_least(phi_star) {
        Some(t) => t,
        None => return cfg.theta_max(),
    };
    // Guard the algebraic crossing against rounding in the direct comparison.
    let wins = |t: f64| {
        let phi = cfg.dist.phi(t);
        r_value(a, cfg.gamma, phi, high) >= r_value(a, cfg.gamma, phi, low)
    };
    while t < cfg.theta_max() && !wins(t) {
        t = f64::from_bits(t.to_bits() + 1).min(cfg.theta_max());
    }
    t
}

fn cutoff_segments(cfg: &ModelConfig, low: f64, high: f64, theta_hat: f64) -> [(f64, f64, f64); 2] {
    let top = cfg.theta_max();
    if theta_hat >= top {
        [(low, 0.0, top), (high, top, top)]
    } else {
        [(low, 0.0, theta_hat), (high, theta_hat, top)]
    }
}

/// `Π^bin(λ̲, λ̄, θ̂)` and the associated mechanism.
pub fn two_certificate_profit(cfg: &ModelConfig, low: f64, high: f64, theta_hat: f64) -> Result<TwoCertResult> {
    check_lambda(low)?;
    check_lambda(high)?;
    if low > high {
        return Err(Error::Precondition(format!("need lambda_low <= lambda_high, got {low} > {high}")));
    }
    if !(0.0..=cfg.theta_max()).contains(&theta_hat) {
        return Err(Error::Domain {
            what: "theta_hat",
            value: theta_hat,
            domain: format!("[0, {}]", cfg.theta_max()),
        });
    }
    let policy = CutoffPolicy {
        cfg,
        low,
        high,
        theta_hat,
    };
    let mechanism = assemble_grid(cfg, &policy).into_solution(cfg, "two_certificate");
    let scale = mechanism.allocation(cfg).iter().fold(1.0f64, |m, &a| m.max(a));
    let feasible = mechanism.diagnostics.allocation_drop >= -1e-12 * scale;
    Ok(TwoCertResult {
        lambda_low: low,
        lambda_high: high,
        theta_hat,
        profit: restricted_profit(cfg, &cutoff_segments(cfg, low, high, theta_hat)),
        mechanism,
        feasible,
        near_optimal_pairs: 1,
    })
}

/// Profit of the pair `(λ̲, λ̄)` under the crossing cutoff.
pub fn two_certificate_value(cfg: &ModelConfig, low: f64, high: f64) -> f64 {
    let t = crossing_cutoff(cfg, low, high);
    restricted_profit(cfg, &cutoff_segments(cfg, low, high, t))
}

/// Best pair `(λ̲, λ̄)` over a coarse grid with coordinate refinement. The
/// single-certificate optimum is always a candidate, so the result never
/// does worse than one certificate.
pub fn optimize_two_certificate(cfg: &ModelConfig) -> Result<TwoCertResult> {
    cfg.validate()?;
    let single = optimize_single(cfg)?;
    let grid = log_uniform_grid(TWO_CERT_GRID, cfg.lambda_floor());
    let pairs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|j| (0..=j).map(move |i| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| two_certificate_value(cfg, grid[i], grid[j]))
        .collect();

    let mut best = (single.lambda, single.lambda, single.profit);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        if v > best.2 {
            best = (grid[i], grid[j], v);
        }
    }

    let bracket = |x: f64, lo: f64, hi: f64| {
        let k = grid.partition_point(|&g| g < x);
        let a = grid[k.saturating_sub(1)].max(lo);
        let b = grid.get(k + 1).copied().unwrap_or(1.0).min(hi);
        (a.min(x), b.max(x))
    };
    let tol = cfg.grid.refine_tol.max(1e-9);
    for _ in 0..4 {
        let before = best.2;
        let (a, b) = bracket(best.0, cfg.lambda_floor(), best.1);
        if b > a {
            let high = best.1;
            let m = golden_max_log(&|l: f64| two_certificate_value(cfg, l, high), a, b, tol);
            if m.value > best.2 {
                best = (m.x, high, m.value);
            }
        }
        let (a, b) = bracket(best.1, best.0, 1.0);
        if b > a {
            let low = best.0;
            let m = golden_max_log(&|l: f64| two_certificate_value(cfg, low, l), a, b, tol);
            if m.value > best.2 {
                best = (low, m.x, m.value);
            }
        }
        if best.2 - before <= 1e-14 * best.2.abs().max(1e-300) {
            break;
        }
    }
    let theta_hat = crossing_cutoff(cfg, best.0, best.1);
    let mut result = two_certificate_profit(cfg, best.0, best.1, theta_hat)?;
    let floor = best.2 - PLATEAU_TOL * best.2.abs();
    result.near_optimal_pairs = values.iter().filter(|&&v| v >= floor).count().max(1);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostSpec, TypeDistribution};
    use approx::assert_relative_eq;

    #[test]
    fn planner_examples() {
        let cfg = ModelConfig::running_example();
        let p = planner(&cfg);
        assert!(p.views_good.iter().all(|&v| v == 0.75));
        assert!(p.views_bad.iter().all(|&v| v == 0.0));
        let cubic = cfg.with_cost(CostSpec::new(1.0, 3.0).unwrap()).unwrap();
        assert_relative_eq!(planner(&cubic).views_good[7], 0.75f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn single_certificate_lines() {
        let cfg = ModelConfig::running_example();
        let perfect = enforced_perfect(&cfg).unwrap();
        for (phi, v) in perfect.mechanism.phi.iter().zip(&perfect.mechanism.views_good) {
            assert!((v - (phi - 0.25).max(0.0)).abs() <= 1e-15);
        }
        let half = single_certificate(&cfg, 0.5).unwrap();
        for (phi, v) in half.mechanism.phi.iter().zip(&half.mechanism.views_good) {
            assert!((v - ((phi + 1.0) / 2.0 - 0.5).max(0.0)).abs() <= 1e-15);
        }
        assert!(single_certificate(&cfg, 0.0).is_err());
    }

    #[test]
    fn perfect_profit_closed_form() {
        // ∫_{0.625}^1 (2θ − 1.25)²/2 dθ = 0.75³/12.
        let cfg = ModelConfig::running_example();
        assert_relative_eq!(single_profit(&cfg, 1.0), 0.75f64.powi(3) / 12.0, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_two_certificate_cases() {
        let cfg = ModelConfig::running_example();
        let s = single_profit(&cfg, 0.6);
        let same = two_certificate_profit(&cfg, 0.6, 0.6, 0.4).unwrap();
        assert!((same.profit - s).abs() <= 1e-10);
        let top = two_certificate_profit(&cfg, 0.3, 0.8, 0.0).unwrap();
        assert!((top.profit - single_profit(&cfg, 0.8)).abs() <= 1e-10);
        assert!(two_certificate_profit(&cfg, 0.8, 0.3, 0.0).is_err());
    }

    #[test]
    fn crossing_rule_picks_the_better_certificate() {
        let cfg = ModelConfig::running_example();
        let (lo, hi) = (0.4, 0.9);
        let t = crossing_cutoff(&cfg, lo, hi);
        let r = |t: f64, l: f64| r_value(&cfg.attention, cfg.gamma, cfg.dist.phi(t), l);
        assert!(r(t, hi) >= r(t, lo));
        assert!(r(t - 1e-9, hi) < r(t - 1e-9, lo));
        let res = two_certificate_profit(&cfg, lo, hi, t).unwrap();
        assert!(res.feasible);
    }

    #[test]
    fn restricted_optimizers_when_perfect_is_too_coarse() {
        // θ̄·A'(1) = 0.5 < 1 − γ = 0.75.
        let cfg = ModelConfig {
            dist: TypeDistribution::uniform(0.5).unwrap(),
            ..ModelConfig::running_example()
        };
        let s = optimize_single(&cfg).unwrap();
        assert!(s.lambda < 1.0 - 1e-3, "{}", s.lambda);
        let two = optimize_two_certificate(&cfg).unwrap();
        assert!(two.lambda_high - two.lambda_low >= 1e-3);
        assert!(two.profit >= s.profit - 1e-12);
        assert!(two.feasible);
    }
}
