use crate::error::{Error, Result};

/// Targeting cost `c(v) = κ·v^σ/σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec {
    pub kappa: f64,
    pub sigma: f64,
}

impl CostSpec {
    pub fn new(kappa: f64, sigma: f64) -> Result<Self> {
        let spec = CostSpec { kappa, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid("cost.kappa", format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.sigma.is_finite() && self.sigma > 1.0) {
            return Err(Error::invalid("cost.sigma", format!("sigma must exceed 1, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn cost(&self, v: f64) -> f64 {
        self.kappa * v.max(0.0).powf(self.sigma) / self.sigma
    }

    /// `c'(v) = κ·v^(σ−1)`.
    pub fn marginal_cost(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::Domain {
                what: "views",
                value: v,
                domain: "[0, inf)".into(),
            });
        }
        Ok(self.kappa * v.powf(self.sigma - 1.0))
    }

    /// `c'^{-1}(x) = (max{x, 0}/κ)^(1/(σ−1))`.
    pub fn inverse_marginal_cost(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let ratio = x / self.kappa;
        if self.sigma == 2.0 {
            ratio
        } else {
            ratio.powf(1.0 / (self.sigma - 1.0))
        }
    }

    /// `max_v {r·v − c(v)}`, attained at `v = c'^{-1}(r)`.
    pub fn surplus(&self, r: f64) -> f64 {
        let v = self.inverse_marginal_cost(r);
        if v == 0.0 {
            0.0
        } else {
            r * v - self.cost(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn marginal_cost_examples() {
        let quad = CostSpec::new(1.0, 2.0).unwrap();
        assert_eq!(quad.marginal_cost(0.5).unwrap(), 0.5);
        assert_eq!(CostSpec::new(2.0, 2.0).unwrap().marginal_cost(0.5).unwrap(), 1.0);
        assert_eq!(CostSpec::new(3.0, 3.5).unwrap().marginal_cost(0.0).unwrap(), 0.0);
        assert!(quad.marginal_cost(-1e-3).is_err());
    }

    #[test]
    fn inverse_marginal_cost_examples() {
        let quad = CostSpec::new(1.0, 2.0).unwrap();
        assert_eq!(quad.inverse_marginal_cost(0.25), 0.25);
        assert_eq!(quad.inverse_marginal_cost(-1.0), 0.0);
        assert_relative_eq!(CostSpec::new(1.0, 3.0).unwrap().inverse_marginal_cost(0.04), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn surplus_matches_closed_form() {
        let c = CostSpec::new(1.5, 3.0).unwrap();
        let r: f64 = 0.7;
        let expected = (1.0 - 1.0 / 3.0) * (1.5f64).powf(-0.5) * r.powf(1.5);
        assert_relative_eq!(c.surplus(r), expected, max_relative = 1e-13);
        assert_eq!(c.surplus(-0.2), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CostSpec::new(0.0, 2.0).is_err());
        assert!(CostSpec::new(1.0, 1.0).is_err());
    }
}
