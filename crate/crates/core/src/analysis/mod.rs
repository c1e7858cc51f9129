//! Engagement, consumer welfare and content diversity of a mechanism, plus
//! comparisons and parameter sweeps built on them.

mod compare;
mod limits;
mod sweep;

pub use compare::{compare_to_perfect, ComparisonReport, Dichotomy};
pub use limits::{small_gamma_limits, LimitReport, LimitRow, LimitTrend};
pub use sweep::{
    sweep_addiction, sweep_alpha, sweep_gamma, sweep_kappa, sweep_losses, SweepPoint, SweepResult,
};

use crate::error::{Error, Result};
use crate::mechanism::MechanismSolution;
use crate::model::ModelConfig;
use crate::quadrature::{adaptive_simpson, integrate_nodes};

pub use crate::mechanism::SERVED_EPS;

/// `∫ A(Λ)·V_g·f dθ`.
pub fn engagement(sol: &MechanismSolution, cfg: &ModelConfig) -> f64 {
    let y: Vec<f64> = sol
        .allocation(cfg)
        .iter()
        .zip(&sol.theta)
        .map(|(a, &t)| a * cfg.dist.pdf(t))
        .collect();
    integrate_nodes(&sol.theta, &y, &sol.breaks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReport {
    /// `engagement / (α + 1)`.
    pub proportional: f64,
    /// Expected reader surplus from good content net of losses on bad
    /// content, integrated over reading costs directly.
    pub direct: f64,
}

impl WelfareReport {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.proportional.abs().max(self.direct.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.proportional - self.direct).abs() / scale
        }
    }
}

/// Consumer welfare under power attention `A(λ) = λ^α`.
pub fn consumer_welfare_power(sol: &MechanismSolution, cfg: &ModelConfig) -> Result<WelfareReport> {
    let alpha = cfg.attention.plain_power().ok_or_else(|| {
        Error::Unsupported("consumer welfare is only derived for power attention without transforms".into())
    })?;
    let a = &cfg.attention;
    // Integrate against dA by substituting y = A(q), so q = A^{-1}(y).
    let reader = |lambda: f64| {
        let top = a.value(lambda);
        let good = adaptive_simpson(&|y: f64| 1.0 - a.base_inverse(y), 0.0, top, 1e-13, 1e-17);
        let bad = adaptive_simpson(&|y: f64| a.base_inverse(y), 0.0, top, 1e-13, 1e-17);
        (good, bad)
    };
    let mut cache: Option<(f64, (f64, f64))> = None;
    let y: Vec<f64> = (0..sol.len())
        .map(|i| {
            let (l, vg, vb) = (sol.quality[i], sol.views_good[i], sol.views_bad[i]);
            if vg == 0.0 && vb == 0.0 {
                return 0.0;
            }
            let (good, bad) = match cache {
                Some((cl, v)) if cl == l => v,
                _ => {
                    let v = reader(l);
                    cache = Some((l, v));
                    v
                }
            };
            (vg * good - vb * bad) * cfg.dist.pdf(sol.theta[i])
        })
        .collect();
    Ok(WelfareReport {
        proportional: engagement(sol, cfg) / (alpha + 1.0),
        direct: integrate_nodes(&sol.theta, &y, &sol.breaks),
    })
}

/// Types receiving positive views.
#[derive(Debug, Clone, PartialEq)]
pub struct ServingSet {
    pub intervals: Vec<(f64, f64)>,
    /// Probability mass of the served types.
    pub measure: f64,
}

impl ServingSet {
    pub fn lower(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.0)
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= theta && theta <= b)
    }
}

/// Maximal node runs with `V_g > SERVED_EPS`, with run ends placed where the
/// interpolated views vanish.
pub fn content_diversity(sol: &MechanismSolution, cfg: &ModelConfig) -> ServingSet {
    let v = &sol.views_good;
    let t = &sol.theta;
    let crossing = |i: usize, j: usize| {
        let w = -v[i] / (v[j] - v[i]);
        t[i] + w.clamp(0.0, 1.0) * (t[j] - t[i])
    };
    let mut intervals = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..sol.len() {
        let served = v[i] > SERVED_EPS;
        match (served, start) {
            (true, None) => start = Some(if i == 0 { t[0] } else { crossing(i - 1, i) }),
            (false, Some(s)) => {
                intervals.push((s, crossing(i - 1, i)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push((s, t[sol.len() - 1]));
    }
    let measure = intervals.iter().map(|&(a, b)| cfg.dist.cdf(b) - cfg.dist.cdf(a)).sum();
    ServingSet { intervals, measure }
}

/// Nodes of `sol` on the uniform base grid, which every assembled solution contains.
pub(crate) fn base_indices(sol: &MechanismSolution, cfg: &ModelConfig) -> Vec<usize> {
    let n = cfg.grid.theta_points;
    let top = cfg.theta_max();
    (0..n)
        .map(|i| {
            let t = if i + 1 == n { top } else { top * i as f64 / (n - 1) as f64 };
            sol.theta.partition_point(|&x| x < t)
        })
        .collect()
}
