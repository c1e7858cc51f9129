use crate::error::{Error, Result};
use crate::mechanism::{profit, solve_optimal, MechanismSolution};
use crate::model::{AttentionSpec, CostSpec, ModelConfig};

use super::{base_indices, content_diversity, engagement, ServingSet, SERVED_EPS};

/// One solved parameter value, sampled on the uniform base θ-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub theta: Vec<f64>,
    pub quality: Vec<f64>,
    pub views: Vec<f64>,
    pub profit: f64,
    pub engagement: f64,
    pub serving: ServingSet,
    pub solution: MechanismSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: &'static str,
    pub values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Human-readable descriptions of every failed comparative-statics check.
    pub violations: Vec<String>,
}

impl SweepResult {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn run(
    parameter: &'static str,
    cfg: &ModelConfig,
    values: &[f64],
    make: impl Fn(f64) -> Result<ModelConfig>,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Precondition(format!("{parameter} sweep needs at least one value")));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(format!("{parameter} values must be strictly increasing")));
    }
    values
        .iter()
        .map(|&v| {
            let c = make(v)?;
            let sol = solve_optimal(&c)?;
            let idx = base_indices(&sol, cfg);
            Ok(SweepPoint {
                value: v,
                theta: idx.iter().map(|&i| sol.theta[i]).collect(),
                quality: idx.iter().map(|&i| sol.quality[i]).collect(),
                views: idx.iter().map(|&i| sol.views_good[i]).collect(),
                profit: profit(&sol, &c).virtual_surplus,
                engagement: engagement(&sol, &c),
                serving: content_diversity(&sol, &c),
                solution: sol,
            })
        })
        .collect()
}

/// Records `Λ_hi(θ) ≥ Λ_lo(θ) − tol` failures, restricted to `mask` when given.
fn quality_order(
    out: &mut Vec<String>,
    what: &str,
    hi: &SweepPoint,
    lo: &SweepPoint,
    tol: f64,
    mask: Option<&dyn Fn(usize) -> bool>,
) {
    for i in 0..hi.theta.len() {
        if mask.is_some_and(|m| !m(i)) {
            continue;
        }
        let gap = hi.quality[i] - lo.quality[i];
        if gap < -tol {
            out.push(format!(
                "{what}: quality {} < {} at theta = {} ({} vs {})",
                hi.quality[i], lo.quality[i], hi.theta[i], hi.value, lo.value
            ));
            return;
        }
    }
}

/// For `better` serving a type, `other` must serve it too.
fn served_nested(out: &mut Vec<String>, what: &str, better: &SweepPoint, other: &SweepPoint) {
    if let Some(i) = (0..better.theta.len()).find(|&i| better.views[i] > SERVED_EPS && !(other.views[i] > 0.0)) {
        out.push(format!(
            "{what}: theta = {} served at {} but not at {}",
            better.theta[i], better.value, other.value
        ));
    }
}

/// Quality must be nondecreasing in `γ` at every type.
pub fn sweep_gamma(cfg: &ModelConfig, gammas: &[f64]) -> Result<SweepResult> {
    let points = run("gamma", cfg, gammas, |g| cfg.with_gamma(g))?;
    let mut violations = Vec::new();
    for w in points.windows(2) {
        quality_order(&mut violations, "gamma", &w[1], &w[0], 1e-6, None);
    }
    Ok(SweepResult {
        parameter: "gamma",
        values: gammas.to_vec(),
        points,
        violations,
    })
}

/// Quality and the serving set must not depend on `κ`; views fall in `κ`.
pub fn sweep_kappa(cfg: &ModelConfig, kappas: &[f64]) -> Result<SweepResult> {
    let sigma = cfg.cost.sigma;
    let points = run("kappa", cfg, kappas, |k| cfg.with_cost(CostSpec::new(k, sigma)?))?;
    let step = cfg.theta_max() / (cfg.grid.theta_points - 1) as f64;
    let mut violations = Vec::new();
    let first = &points[0];
    for p in &points[1..] {
        if let Some(i) = (0..p.theta.len()).find(|&i| (p.quality[i] - first.quality[i]).abs() > 1e-8) {
            violations.push(format!(
                "kappa: quality differs at theta = {} ({} vs {})",
                p.theta[i], p.quality[i], first.quality[i]
            ));
        }
        let (a, b) = (&first.serving.intervals, &p.serving.intervals);
        let same = a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| (x.0 - y.0).abs() <= step && (x.1 - y.1).abs() <= step);
        if !same {
            violations.push(format!("kappa: serving set changes from {a:?} to {b:?}"));
        }
        if sigma == 2.0 {
            if let Some(i) = (0..p.theta.len())
                .find(|&i| (p.views[i] * p.value - first.views[i] * first.value).abs() > 1e-10)
            {
                violations.push(format!("kappa: views do not scale as 1/kappa at theta = {}", p.theta[i]));
            }
        }
    }
    for w in points.windows(2) {
        let scale = w[0].views.iter().fold(1.0f64, |m, &v| m.max(v));
        if let Some(i) = (0..w[0].theta.len()).find(|&i| w[1].views[i] > w[0].views[i] + 1e-12 * scale) {
            violations.push(format!(
                "kappa: views increase from {} to {} at theta = {}",
                w[0].value, w[1].value, w[0].theta[i]
            ));
        }
    }
    Ok(SweepResult {
        parameter: "kappa",
        values: kappas.to_vec(),
        points,
        violations,
    })
}

/// For `α' < α`: types served under `α` are served under `α'` and receive
/// at least the quality they get under `α'`.
pub fn sweep_alpha(cfg: &ModelConfig, alphas: &[f64]) -> Result<SweepResult> {
    let base = cfg.attention;
    let points = run("alpha", cfg, alphas, |a| {
        let mut att = AttentionSpec::power(a)?;
        att.loss_b = base.loss_b;
        att.addiction_z = base.addiction_z;
        cfg.with_attention(att)
    })?;
    let violations = nested_checks("alpha", &points, |hi, lo| (hi, lo));
    Ok(SweepResult {
        parameter: "alpha",
        values: alphas.to_vec(),
        points,
        violations,
    })
}

/// For `b' < b`: types served under `b` are served under `b'`, with weakly
/// higher quality under `b`.
pub fn sweep_losses(cfg: &ModelConfig, bs: &[f64]) -> Result<SweepResult> {
    if let Some(&b) = bs.iter().find(|&&b| !(b >= 0.0)) {
        return Err(Error::invalid("attention.loss_b", format!("loss_b must be nonnegative, got {b}")));
    }
    let points = run("b", cfg, bs, |b| {
        let att = AttentionSpec {
            loss_b: 0.0,
            addiction_z: 0.0,
            ..cfg.attention
        };
        cfg.with_attention(if b > 0.0 { att.with_loss(b)? } else { att })
    })?;
    let violations = nested_checks("b", &points, |hi, lo| (hi, lo));
    Ok(SweepResult {
        parameter: "b",
        values: bs.to_vec(),
        points,
        violations,
    })
}

/// For `z < z'`: types served under `z` are served under `z'`, with weakly
/// higher quality under `z`.
pub fn sweep_addiction(cfg: &ModelConfig, zs: &[f64]) -> Result<SweepResult> {
    let cap = cfg.attention.base_inverse(cfg.gamma);
    if let Some(&z) = zs.iter().find(|&&z| !(z > 0.0 && z < cap)) {
        return Err(Error::invalid(
            "attention.addiction_z",
            format!("addiction_z must lie in (0, A^-1(gamma)) = (0, {cap}), got {z}"),
        ));
    }
    let points = run("z", cfg, zs, |z| {
        let att = AttentionSpec {
            loss_b: 0.0,
            addiction_z: 0.0,
            ..cfg.attention
        };
        cfg.with_attention(att.with_addiction(z)?)
    })?;
    // Lower z plays the role of the higher parameter.
    let violations = nested_checks("z", &points, |hi, lo| (lo, hi));
    Ok(SweepResult {
        parameter: "z",
        values: zs.to_vec(),
        points,
        violations,
    })
}

/// Pairwise checks over all `(lower, higher)` parameter pairs. `order`
/// maps them to `(better, other)`, where `better` should have the higher
/// quality and the smaller serving set.
fn nested_checks(
    what: &str,
    points: &[SweepPoint],
    order: impl Fn(usize, usize) -> (usize, usize),
) -> Vec<String> {
    let mut out = Vec::new();
    for hi in 0..points.len() {
        for lo in 0..hi {
            let (b, o) = order(hi, lo);
            let (better, other) = (&points[b], &points[o]);
            served_nested(&mut out, what, better, other);
            let mask = |i: usize| better.views[i] > SERVED_EPS;
            quality_order(&mut out, what, better, other, 1e-6, Some(&mask));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridConfig;
    use approx::assert_relative_eq;

    fn small() -> ModelConfig {
        let cfg = ModelConfig::running_example();
        cfg.with_grid(GridConfig { theta_points: 401, ..cfg.grid }).unwrap()
    }

    #[test]
    fn gamma_sweep_matches_closed_form() {
        let cfg = small();
        let res = sweep_gamma(&cfg, &[0.1, 0.25, 0.4]).unwrap();
        assert!(res.holds(), "{:?}", res.violations);
        // θ = 0.75 has φ = 0.5.
        let i = 300;
        for (p, expect) in res.points.iter().zip([0.2f64.sqrt(), 0.5f64.sqrt(), 0.8f64.sqrt()]) {
            assert_eq!(p.theta[i], 0.75);
            assert_relative_eq!(p.quality[i], expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn kappa_sweep_scales_views() {
        let res = sweep_kappa(&small(), &[0.5, 1.0, 2.0]).unwrap();
        assert!(res.holds(), "{:?}", res.violations);
    }

    #[test]
    fn alpha_and_transform_sweeps_hold() {
        let cfg = small();
        assert!(sweep_alpha(&cfg, &[0.5, 1.0, 2.0]).unwrap().holds());
        let sqrt = cfg.with_attention(AttentionSpec::power(0.5).unwrap()).unwrap();
        let b = sweep_losses(&sqrt, &[0.0, 0.5, 1.0]).unwrap();
        assert!(b.holds(), "{:?}", b.violations);
        assert_eq!(b.points[0].quality, sweep_gamma(&sqrt, &[0.25]).unwrap().points[0].quality);
        let z = sweep_addiction(&cfg, &[0.01, 0.03]).unwrap();
        assert!(z.holds(), "{:?}", z.violations);
        assert!(sweep_addiction(&cfg, &[0.3]).is_err());
        assert!(sweep_gamma(&cfg, &[0.3, 0.2]).is_err());
    }
}
