//! Model primitives: attention, targeting cost, type distribution and the
//! validated parameter bundle every solver consumes.

mod attention;
mod cost;
mod distribution;

pub use attention::{AttentionFamily, AttentionSpec};
pub use cost::CostSpec;
pub use distribution::{Regularity, Tabulated, TypeDistribution};

pub(crate) use distribution::{bisect_predicate, prev_float};

use crate::error::{Error, Result};

/// Numerical resolution shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Uniform θ-grid size, endpoints included.
    pub theta_points: usize,
    /// Size of the coarse λ grid scanned before refinement.
    pub lambda_coarse_points: usize,
    /// Relative tolerance of the λ refinement.
    pub refine_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            theta_points: 2001,
            lambda_coarse_points: 256,
            refine_tol: 1e-10,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_points < 2 {
            return Err(Error::invalid("grid.theta_points", "theta_points must be at least 2"));
        }
        if self.lambda_coarse_points < 32 {
            return Err(Error::invalid(
                "grid.lambda_coarse_points",
                "lambda_coarse_points must be at least 32",
            ));
        }
        if !(self.refine_tol.is_finite() && self.refine_tol > 0.0) {
            return Err(Error::invalid("grid.refine_tol", "refine_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub attention: AttentionSpec,
    pub cost: CostSpec,
    pub dist: TypeDistribution,
    /// Opportunity cost of a view.
    pub gamma: f64,
    pub grid: GridConfig,
}

impl ModelConfig {
    pub fn new(
        attention: AttentionSpec,
        cost: CostSpec,
        dist: TypeDistribution,
        gamma: f64,
        grid: GridConfig,
    ) -> Result<Self> {
        let cfg = ModelConfig {
            attention,
            cost,
            dist,
            gamma,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `A(λ) = λ`, `γ = 1/4`, `c(v) = v²/2`, uniform values on `[0, 1]`.
    pub fn running_example() -> Self {
        ModelConfig {
            attention: AttentionSpec::power(1.0).expect("valid"),
            cost: CostSpec::new(1.0, 2.0).expect("valid"),
            dist: TypeDistribution::uniform(1.0).expect("valid"),
            gamma: 0.25,
            grid: GridConfig::default(),
        }
    }

    pub fn theta_max(&self) -> f64 {
        self.dist.theta_max()
    }

    pub fn validate(&self) -> Result<()> {
        self.attention.validate()?;
        self.cost.validate()?;
        self.dist.validate()?;
        self.grid.validate()?;
        let cap = self.theta_max().min(1.0);
        if !(self.gamma > 0.0 && self.gamma < cap) {
            return Err(Error::invalid(
                "model.gamma",
                format!("gamma must be < min(theta_max, 1) and positive, got {} (bound {cap})", self.gamma),
            ));
        }
        let z = self.attention.addiction_z;
        if z > 0.0 && self.attention.base(z) >= self.gamma {
            return Err(Error::invalid(
                "attention.addiction_z",
                format!("addiction_z must satisfy A(z) < gamma; A({z}) = {}", self.attention.base(z)),
            ));
        }
        let reg = self.dist.check_regularity(self.grid.theta_points.max(101), 1e-12);
        if !reg.regular {
            return Err(Error::NonRegular {
                at: reg.violation_at.unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.gamma = gamma;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_attention(&self, attention: AttentionSpec) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.attention = attention;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_cost(&self, cost: CostSpec) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.cost = cost;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_grid(&self, grid: GridConfig) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.grid = grid;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Lower end of the λ search. The maximizer of `R` sits near `A^{-1}(γ)`
    /// when γ is small, so the floor tracks it.
    pub fn lambda_floor(&self) -> f64 {
        let near = 1e-2 * self.attention.inverse(self.gamma);
        near.clamp(1e-280, 1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_example_is_valid() {
        ModelConfig::running_example().validate().unwrap();
    }

    #[test]
    fn gamma_bound_names_key() {
        let cfg = ModelConfig {
            dist: TypeDistribution::uniform(0.7).unwrap(),
            gamma: 0.8,
            ..ModelConfig::running_example()
        };
        match cfg.validate() {
            Err(Error::InvalidParameter { key, reason }) => {
                assert_eq!(key, "model.gamma");
                assert!(reason.contains("gamma must be < min(theta_max, 1)"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn addiction_must_stay_below_gamma() {
        let base = ModelConfig::running_example();
        let ok = base.attention.with_addiction(0.2).unwrap();
        assert!(base.with_attention(ok).is_ok());
        let too_much = base.attention.with_addiction(0.3).unwrap();
        assert!(base.with_attention(too_much).is_err());
    }

    #[test]
    fn non_regular_distribution_is_rejected() {
        let cfg = ModelConfig {
            dist: TypeDistribution::tabulated(vec![0.0, 0.05, 1.0], vec![0.0, 0.5, 1.0]).unwrap(),
            ..ModelConfig::running_example()
        };
        assert!(matches!(cfg.validate(), Err(Error::NonRegular { .. })));
    }

    #[test]
    fn lambda_floor_tracks_small_gamma() {
        let cfg = ModelConfig::running_example();
        assert_eq!(cfg.lambda_floor(), 1e-6);
        let concave = cfg
            .with_attention(AttentionSpec::power(0.3).unwrap())
            .unwrap()
            .with_gamma(1e-4)
            .unwrap();
        assert!(concave.lambda_floor() < 1e-14);
    }
}
