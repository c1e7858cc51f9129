//! Brute-force reference computations. Nothing here refines: every answer is
//! an exhaustive maximum over a fixed dense grid, so the grid step bounds the
//! error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mechanism::QualitySearch;
use crate::model::{AttentionSpec, CostSpec, GridConfig, ModelConfig, TypeDistribution};
use crate::search::log_uniform_grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lambda_points: usize,
    pub v_points: usize,
    pub v_max: f64,
    /// Simpson nodes across `[0, θ̄]` for profit integrals.
    pub theta_points: usize,
}

impl GridSpec {
    /// Grid for one-dimensional argmax checks.
    pub fn argmax(cfg: &ModelConfig) -> Self {
        GridSpec {
            lambda_points: 1_000_000,
            v_points: 10_000,
            v_max: 10.0 * cfg.cost.inverse_marginal_cost(cfg.theta_max()),
            theta_points: 4001,
        }
    }

    /// Grid for profit sweeps over λ.
    pub fn profit(cfg: &ModelConfig) -> Self {
        GridSpec {
            lambda_points: 10_000,
            ..Self::argmax(cfg)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_points < 2 || self.v_points < 2 || self.theta_points < 2 {
            return Err(Error::Precondition("oracle grid counts must be at least 2".into()));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::Precondition(format!("oracle v_max must be positive, got {}", self.v_max)));
        }
        Ok(())
    }

    /// Solver-style spacing, with the transform kink added as a node since a
    /// maximum there is not resolved by any finite grid.
    fn lambdas(&self, cfg: &ModelConfig) -> Vec<f64> {
        let mut xs = log_uniform_grid(self.lambda_points, cfg.lambda_floor());
        if let Some(k) = cfg.attention.kink() {
            let i = xs.partition_point(|&x| x < k);
            if xs.get(i) != Some(&k) {
                xs.insert(i, k);
            }
        }
        xs
    }
}

/// Exhaustive grid maximum, with the spacing around the winning point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub x: f64,
    pub value: f64,
    /// Larger of the two gaps adjacent to `x`.
    pub step: f64,
}

fn r_direct(cfg: &ModelConfig, phi: f64, lambda: f64) -> f64 {
    (phi + (1.0 - lambda) / lambda) * cfg.attention.value(lambda) - cfg.gamma / lambda
}

/// Largest-index maximum of `values`; exact ties go to the later point.
fn grid_argmax(xs: &[f64], values: &[f64]) -> GridMax {
    let chunk = 4096;
    let best = values
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, vs)| {
            let mut k = 0;
            for (j, &v) in vs.iter().enumerate() {
                if v >= vs[k] {
                    k = j;
                }
            }
            (c * chunk + k, vs[k])
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.1 >= a.1 { b } else { a })
        .expect("grid is nonempty");
    let i = best.0;
    let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
    let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { 0.0 };
    GridMax {
        x: xs[i],
        value: best.1,
        step: left.max(right),
    }
}

/// `max_λ R(φ̂, λ)` over the λ grid.
pub fn brute_argmax_quality(phi_hat: f64, cfg: &ModelConfig, grid: &GridSpec) -> GridMax {
    let xs = grid.lambdas(cfg);
    let values: Vec<f64> = xs.par_iter().map(|&l| r_direct(cfg, phi_hat, l)).collect();
    grid_argmax(&xs, &values)
}

/// `max_v R(φ̂, λ)·v − c(v)` over `v ∈ [0, v_max]`.
pub fn brute_views(phi_hat: f64, lambda: f64, cfg: &ModelConfig, grid: &GridSpec) -> GridMax {
    let r = r_direct(cfg, phi_hat, lambda);
    let h = grid.v_max / (grid.v_points - 1) as f64;
    let mut best = GridMax { x: 0.0, value: 0.0, step: h };
    for k in 1..grid.v_points {
        let v = h * k as f64;
        let value = r * v - cfg.cost.cost(v);
        if value > best.value {
            best = GridMax { x: v, value, step: h };
        }
    }
    best
}

/// `Π^s(λ)` by composite Simpson over θ, split at the density knots.
pub fn simpson_single_profit(cfg: &ModelConfig, lambda: f64, theta_points: usize) -> f64 {
    let top = cfg.theta_max();
    let mut cuts = vec![0.0];
    cuts.extend_from_slice(cfg.dist.knots());
    cuts.push(top);
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let m = (((b - a) / top * theta_points as f64).ceil() as usize).max(2).next_multiple_of(2);
            let h = (b - a) / m as f64;
            // Density evaluated at the piece midpoint so knots do not leak.
            let f = cfg.dist.pdf(0.5 * (a + b));
            let g = |t: f64| {
                let phi = t - (1.0 - cfg.dist.cdf(t)) / f;
                cfg.cost.surplus(r_direct(cfg, phi, lambda)) * f
            };
            let mut s = g(a) + g(b);
            for k in 1..m {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + h * k as f64);
            }
            s * h / 3.0
        })
        .sum()
}

/// Best single certificate over the λ grid.
pub fn brute_single_profit(cfg: &ModelConfig, grid: &GridSpec) -> GridMax {
    let xs = grid.lambdas(cfg);
    let values: Vec<f64> = xs
        .par_iter()
        .map(|&l| simpson_single_profit(cfg, l, grid.theta_points))
        .collect();
    grid_argmax(&xs, &values)
}

/// Solver-versus-oracle comparison at one `(φ̂, cfg)` probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCheck {
    pub phi_hat: f64,
    pub lambda_solver: f64,
    pub lambda_oracle: GridMax,
    pub views_solver: f64,
    pub views_oracle: GridMax,
}

impl ProbeCheck {
    pub fn lambda_ok(&self) -> bool {
        (self.lambda_solver - self.lambda_oracle.x).abs() <= self.lambda_oracle.step
    }

    /// `|R(Λ_solver) − R_oracle|`.
    pub fn r_gap(&self, cfg: &ModelConfig) -> f64 {
        (r_direct(cfg, self.phi_hat, self.lambda_solver) - self.lambda_oracle.value).abs()
    }

    pub fn views_ok(&self) -> bool {
        (self.views_solver - self.views_oracle.x).abs() <= self.views_oracle.step
    }

    pub fn holds(&self, cfg: &ModelConfig) -> bool {
        self.lambda_ok() && self.views_ok() && self.r_gap(cfg) <= 1e-9
    }
}

pub fn check_probe(phi_hat: f64, cfg: &ModelConfig, grid: &GridSpec) -> ProbeCheck {
    let search = QualitySearch::new(cfg);
    let m = search.best(phi_hat);
    ProbeCheck {
        phi_hat,
        lambda_solver: m.x,
        lambda_oracle: brute_argmax_quality(phi_hat, cfg, grid),
        views_solver: search.views(m.value),
        views_oracle: brute_views(phi_hat, m.x, cfg, grid),
    }
}

/// Maps seven numbers in `[0, 1)` to a valid configuration with uniform
/// types and an optional loss or addiction transform, plus a virtual value
/// in `[−θ̄, θ̄]`.
pub fn sample_probe(u: [f64; 7]) -> Result<(ModelConfig, f64)> {
    let alpha = 0.5 + 2.5 * u[0];
    let theta_max = 0.5 + 1.5 * u[1];
    let gamma = (0.05 + 0.85 * u[2]) * theta_max.min(1.0);
    let cost = CostSpec::new(0.5 + 1.5 * u[3], 1.5 + 1.5 * u[4])?;
    let base = AttentionSpec::power(alpha)?;
    let attention = if u[5] < 0.6 {
        base
    } else if u[5] < 0.8 {
        base.with_loss(5.0 * (u[5] - 0.6))?
    } else {
        let cap = gamma.powf(1.0 / alpha);
        base.with_addiction(cap * 5.0 * (u[5] - 0.8) * 0.95)?
    };
    let cfg = ModelConfig::new(
        attention,
        cost,
        TypeDistribution::uniform(theta_max)?,
        gamma,
        GridConfig::default(),
    )?;
    Ok((cfg, theta_max * (2.0 * u[6] - 1.0)))
}
