use crate::error::{Error, Result};

/// Base attention family on `[0, 1]`, normalized so that `A(0) = 0` and `A(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttentionFamily {
    /// `A(x) = x^alpha`.
    Power { alpha: f64 },
}

/// Attention function `A(λ)`: the share of consumers who read content whose
/// certificate says it is good with probability `λ`.
///
/// Optionally transformed by a loss `b` from reading bad content,
/// `A_b(λ) = A(max{λ(1+b) − b, 0})`, or by addiction `z`,
/// `A_z(λ) = A(min{λ + z, 1})`. At most one transform is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionSpec {
    pub family: AttentionFamily,
    pub loss_b: f64,
    pub addiction_z: f64,
}

impl AttentionSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        let spec = AttentionSpec {
            family: AttentionFamily::Power { alpha },
            loss_b: 0.0,
            addiction_z: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_loss(mut self, b: f64) -> Result<Self> {
        self.loss_b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_addiction(mut self, z: f64) -> Result<Self> {
        self.addiction_z = z;
        self.validate()?;
        Ok(self)
    }

    /// Checks the standalone invariants. The joint condition `A(z) < γ` is
    /// checked by [`crate::ModelConfig::validate`].
    pub fn validate(&self) -> Result<()> {
        let AttentionFamily::Power { alpha } = self.family;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("attention.alpha", format!("alpha must be positive, got {alpha}")));
        }
        if !(self.loss_b.is_finite() && self.loss_b >= 0.0) {
            return Err(Error::invalid("attention.loss_b", format!("loss_b must be nonnegative, got {}", self.loss_b)));
        }
        if !(self.addiction_z.is_finite() && self.addiction_z >= 0.0 && self.addiction_z < 1.0) {
            return Err(Error::invalid(
                "attention.addiction_z",
                format!("addiction_z must lie in [0, 1), got {}", self.addiction_z),
            ));
        }
        if self.loss_b > 0.0 && self.addiction_z > 0.0 {
            return Err(Error::invalid(
                "attention.addiction_z",
                "loss_b and addiction_z cannot both be nonzero",
            ));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        let AttentionFamily::Power { alpha } = self.family;
        alpha
    }

    /// `Some(alpha)` when this is an untransformed power function.
    pub fn plain_power(&self) -> Option<f64> {
        (self.loss_b == 0.0 && self.addiction_z == 0.0).then(|| self.alpha())
    }

    /// Untransformed `A(x)` for `x` in `[0, 1]`.
    pub fn base(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.family {
            AttentionFamily::Power { alpha } => {
                if alpha == 1.0 {
                    x
                } else {
                    x.powf(alpha)
                }
            }
        }
    }

    pub fn base_deriv(&self, x: f64) -> f64 {
        match self.family {
            AttentionFamily::Power { alpha } => {
                if alpha == 1.0 {
                    1.0
                } else {
                    alpha * x.powf(alpha - 1.0)
                }
            }
        }
    }

    pub fn base_inverse(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self.family {
            AttentionFamily::Power { alpha } => y.powf(1.0 / alpha),
        }
    }

    /// The argument passed to the base family after applying the transform.
    fn inner(&self, lambda: f64) -> f64 {
        if self.loss_b > 0.0 {
            (lambda - self.loss_b * (1.0 - lambda)).max(0.0)
        } else if self.addiction_z > 0.0 {
            (lambda + self.addiction_z).min(1.0)
        } else {
            lambda
        }
    }

    /// Location of the transform kink, if any.
    pub fn kink(&self) -> Option<f64> {
        if self.loss_b > 0.0 {
            Some(self.loss_b / (1.0 + self.loss_b))
        } else if self.addiction_z > 0.0 {
            Some(1.0 - self.addiction_z)
        } else {
            None
        }
    }

    /// `A(λ)` including any transform.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain {
                what: "lambda",
                value: lambda,
                domain: "[0, 1]".into(),
            });
        }
        Ok(self.value(lambda))
    }

    /// Unchecked `A(λ)`; arguments outside `[0, 1]` are clamped.
    pub fn value(&self, lambda: f64) -> f64 {
        self.base(self.inner(lambda.clamp(0.0, 1.0)))
    }

    /// `dA/dλ`, failing exactly at a transform kink.
    pub fn deriv(&self, lambda: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain {
                what: "lambda",
                value: lambda,
                domain: "[0, 1]".into(),
            });
        }
        if let Some(k) = self.kink() {
            if (lambda - k).abs() <= 1e-12 {
                let (left, right) = self.one_sided_derivs(k);
                return Err(Error::Kink { at: k, left, right });
            }
        }
        Ok(self.slope(lambda))
    }

    fn one_sided_derivs(&self, k: f64) -> (f64, f64) {
        if self.loss_b > 0.0 {
            (0.0, (1.0 + self.loss_b) * self.base_deriv(0.0))
        } else {
            (self.base_deriv(k + self.addiction_z), 0.0)
        }
    }

    /// Unchecked derivative; at a kink returns the right derivative.
    pub(crate) fn slope(&self, lambda: f64) -> f64 {
        if self.loss_b > 0.0 {
            let x = lambda * (1.0 + self.loss_b) - self.loss_b;
            if x < 0.0 {
                0.0
            } else {
                (1.0 + self.loss_b) * self.base_deriv(x)
            }
        } else if self.addiction_z > 0.0 {
            let x = lambda + self.addiction_z;
            if x >= 1.0 {
                0.0
            } else {
                self.base_deriv(x)
            }
        } else {
            self.base_deriv(lambda)
        }
    }

    /// Smallest `λ` with `A(λ) ≥ y` for the transformed function.
    pub fn inverse(&self, y: f64) -> f64 {
        let x = self.base_inverse(y);
        if self.loss_b > 0.0 {
            (x + self.loss_b) / (1.0 + self.loss_b)
        } else if self.addiction_z > 0.0 {
            (x - self.addiction_z).max(0.0)
        } else {
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        let linear = AttentionSpec::power(1.0).unwrap();
        assert_eq!(linear.eval(0.5).unwrap(), 0.5);
        let lossy = linear.with_loss(1.0).unwrap();
        assert_relative_eq!(lossy.eval(0.75).unwrap(), 0.5, epsilon = 1e-15);
        let sqrt = AttentionSpec::power(0.5).unwrap();
        assert_relative_eq!(sqrt.eval(0.25).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let a = AttentionSpec::power(1.0).unwrap();
        assert!(matches!(a.eval(1.5), Err(Error::Domain { .. })));
        assert!(matches!(a.eval(-0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn deriv_examples() {
        assert_eq!(AttentionSpec::power(1.0).unwrap().deriv(0.3).unwrap(), 1.0);
        assert_relative_eq!(AttentionSpec::power(2.0).unwrap().deriv(0.5).unwrap(), 1.0);
        let addicted = AttentionSpec::power(1.0).unwrap().with_addiction(0.1).unwrap();
        assert_eq!(addicted.deriv(0.5).unwrap(), 1.0);
    }

    #[test]
    fn deriv_at_kinks_reports_one_sided_slopes() {
        let lossy = AttentionSpec::power(1.0).unwrap().with_loss(1.0).unwrap();
        match lossy.deriv(0.5) {
            Err(Error::Kink { at, left, right }) => {
                assert_eq!(at, 0.5);
                assert_eq!(left, 0.0);
                assert_eq!(right, 2.0);
            }
            other => panic!("expected kink, got {other:?}"),
        }
        let addicted = AttentionSpec::power(1.0).unwrap().with_addiction(0.2).unwrap();
        match addicted.deriv(0.8) {
            Err(Error::Kink { left, right, .. }) => {
                assert_eq!(left, 1.0);
                assert_eq!(right, 0.0);
            }
            other => panic!("expected kink, got {other:?}"),
        }
    }

    #[test]
    fn transforms_keep_normalization_at_one() {
        let a = AttentionSpec::power(0.7).unwrap();
        assert_eq!(a.with_loss(0.4).unwrap().value(1.0), 1.0);
        assert_eq!(a.with_addiction(0.05).unwrap().value(1.0), 1.0);
        assert_eq!(a.value(0.0), 0.0);
    }

    #[test]
    fn loss_and_addiction_are_exclusive() {
        let a = AttentionSpec::power(1.0).unwrap().with_loss(0.5).unwrap();
        assert!(a.with_addiction(0.1).is_err());
    }

    #[test]
    fn inverse_round_trips() {
        let a = AttentionSpec::power(0.5).unwrap();
        assert_relative_eq!(a.value(a.inverse(0.3)), 0.3, epsilon = 1e-14);
        let b = a.with_loss(0.5).unwrap();
        assert_relative_eq!(b.value(b.inverse(0.3)), 0.3, epsilon = 1e-14);
        let z = a.with_addiction(0.01).unwrap();
        assert_relative_eq!(z.value(z.inverse(0.3)), 0.3, epsilon = 1e-14);
    }
}
