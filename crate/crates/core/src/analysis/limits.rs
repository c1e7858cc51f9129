use crate::error::{Error, Result};
use crate::mechanism::QualitySearch;
use crate::model::{AttentionSpec, CostSpec, GridConfig, ModelConfig, TypeDistribution};

/// Virtual values at which the per-type limits are probed.
pub const PROBES: [f64; 3] = [0.0, 0.3, 0.6];

/// Per-type engagement as `γ → 0` under `A = λ^α`, `c = v^σ/σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitTrend {
    /// `α > 1/σ`: engagement falls to zero.
    Vanishing,
    /// `α = 1/σ`: engagement tends to `α^{1/(σ−1)}`.
    Constant(f64),
    /// `α < 1/σ`: engagement grows without bound.
    Exploding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub gamma: f64,
    pub phi_hat: f64,
    pub lambda: f64,
    pub views: f64,
    pub engagement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub alpha: f64,
    pub sigma: f64,
    pub trend: LimitTrend,
    pub rows: Vec<LimitRow>,
    /// Whether every probe follows the predicted direction. For the constant
    /// case this means the gap to the limit shrinks along the sequence.
    pub trend_holds: bool,
    /// Largest quality over the probes at the smallest `γ`.
    pub max_lambda_at_smallest: f64,
    /// Largest `|engagement − limit|` at the smallest `γ`, constant case only.
    pub limit_gap: Option<f64>,
}

impl LimitReport {
    /// Rows for one probe, in the order of the `γ` sequence.
    pub fn probe(&self, phi_hat: f64) -> Vec<LimitRow> {
        self.rows.iter().filter(|r| r.phi_hat == phi_hat).copied().collect()
    }
}

fn trend_of(alpha: f64, sigma: f64) -> LimitTrend {
    let pivot = 1.0 / sigma;
    if (alpha - pivot).abs() <= 1e-12 {
        LimitTrend::Constant(alpha.powf(1.0 / (sigma - 1.0)))
    } else if alpha > pivot {
        LimitTrend::Vanishing
    } else {
        LimitTrend::Exploding
    }
}

/// Evaluates the optimal per-type quality and engagement at [`PROBES`]
/// along a decreasing `γ` sequence.
pub fn small_gamma_limits(alpha: f64, sigma: f64, gammas: &[f64]) -> Result<LimitReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("attention.alpha", format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if gammas.is_empty() || gammas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("gamma values must be nonempty and strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(gammas.len() * PROBES.len());
    for &gamma in gammas {
        let cfg = ModelConfig::new(
            AttentionSpec::power(alpha)?,
            CostSpec::new(1.0, sigma)?,
            TypeDistribution::uniform(1.0)?,
            gamma,
            GridConfig::default(),
        )?;
        let search = QualitySearch::new(&cfg);
        for &phi_hat in &PROBES {
            let m = search.best(phi_hat);
            let views = search.views(m.value);
            rows.push(LimitRow {
                gamma,
                phi_hat,
                lambda: m.x,
                views,
                engagement: cfg.attention.value(m.x) * views,
            });
        }
    }
    let trend = trend_of(alpha, sigma);
    let last = gammas[gammas.len() - 1];
    let at_last: Vec<&LimitRow> = rows.iter().filter(|r| r.gamma == last).collect();
    let max_lambda_at_smallest = at_last.iter().map(|r| r.lambda).fold(0.0, f64::max);
    let limit_gap = match trend {
        LimitTrend::Constant(l) => Some(at_last.iter().map(|r| (r.engagement - l).abs()).fold(0.0, f64::max)),
        _ => None,
    };
    let mut report = LimitReport {
        alpha,
        sigma,
        trend,
        rows,
        trend_holds: true,
        max_lambda_at_smallest,
        limit_gap,
    };
    report.trend_holds = PROBES.iter().all(|&p| {
        let e: Vec<f64> = report.probe(p).iter().map(|r| r.engagement).collect();
        match trend {
            LimitTrend::Vanishing => e.windows(2).all(|w| w[1] < w[0]),
            LimitTrend::Exploding => e.windows(2).all(|w| w[1] > w[0]),
            LimitTrend::Constant(l) => (e[e.len() - 1] - l).abs() <= (e[0] - l).abs(),
        }
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trends_follow_concavity() {
        let gammas = [1e-2, 1e-3, 1e-4];
        let mid = small_gamma_limits(0.5, 2.0, &gammas).unwrap();
        assert!(matches!(mid.trend, LimitTrend::Constant(l) if (l - 0.5).abs() < 1e-15));
        assert!(mid.limit_gap.unwrap() < 0.05, "{mid:?}");
        let flat = small_gamma_limits(0.7, 2.0, &gammas).unwrap();
        assert_eq!(flat.trend, LimitTrend::Vanishing);
        assert!(flat.trend_holds, "{flat:?}");
        let steep = small_gamma_limits(0.3, 2.0, &gammas).unwrap();
        assert_eq!(steep.trend, LimitTrend::Exploding);
        assert!(steep.trend_holds, "{steep:?}");
        for r in [&mid, &flat, &steep] {
            assert!(r.max_lambda_at_smallest <= 0.05);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(small_gamma_limits(1.2, 2.0, &[0.1]).is_err());
        assert!(small_gamma_limits(0.5, 2.0, &[0.01, 0.1]).is_err());
    }
}
