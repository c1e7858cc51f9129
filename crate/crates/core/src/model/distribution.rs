use crate::error::{Error, Result};

/// Distribution `F` of good-provider values on `[0, θ̄]`.
#[derive(Debug, Clone, PartialEq)]
pub enum TypeDistribution {
    Uniform { theta_max: f64 },
    Tabulated(Tabulated),
}

/// Piecewise-linear `F` through `(theta[i], cdf[i])`, so `f` is piecewise constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    theta: Vec<f64>,
    cdf: Vec<f64>,
    density: Vec<f64>,
}

impl Tabulated {
    pub fn new(theta: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 || theta.len() != cdf.len() {
            return Err(Error::invalid(
                "dist.cdf",
                format!("need matching theta/cdf tables of length >= 2, got {} and {}", theta.len(), cdf.len()),
            ));
        }
        if theta[0] != 0.0 {
            return Err(Error::invalid("dist.theta", "theta grid must start at 0"));
        }
        if cdf[0] != 0.0 || (cdf[cdf.len() - 1] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("dist.cdf", "cdf must run from 0 to 1"));
        }
        let mut density = Vec::with_capacity(theta.len() - 1);
        for (t, c) in theta.windows(2).zip(cdf.windows(2)) {
            if !(t[1] > t[0]) {
                return Err(Error::invalid("dist.theta", "theta grid must be strictly increasing"));
            }
            if !(c[1] > c[0]) {
                return Err(Error::invalid("dist.cdf", "cdf must be strictly increasing (density must be positive)"));
            }
            density.push((c[1] - c[0]) / (t[1] - t[0]));
        }
        Ok(Tabulated { theta, cdf, density })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// Segment index whose half-open interval `[θ_k, θ_{k+1})` contains `x`.
    fn segment(&self, x: f64) -> usize {
        let last = self.density.len() - 1;
        match self.theta.partition_point(|&t| t <= x) {
            0 => 0,
            k => (k - 1).min(last),
        }
    }
}

impl TypeDistribution {
    pub fn uniform(theta_max: f64) -> Result<Self> {
        let d = TypeDistribution::Uniform { theta_max };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(theta: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        Ok(TypeDistribution::Tabulated(Tabulated::new(theta, cdf)?))
    }

    pub fn validate(&self) -> Result<()> {
        if let TypeDistribution::Uniform { theta_max } = self {
            if !(theta_max.is_finite() && *theta_max > 0.0) {
                return Err(Error::invalid("dist.theta_max", format!("theta_max must be positive, got {theta_max}")));
            }
        }
        Ok(())
    }

    pub fn theta_max(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { theta_max } => *theta_max,
            TypeDistribution::Tabulated(t) => t.theta[t.theta.len() - 1],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let top = self.theta_max();
        if x <= 0.0 {
            return 0.0;
        }
        if x >= top {
            return 1.0;
        }
        match self {
            TypeDistribution::Uniform { theta_max } => x / theta_max,
            TypeDistribution::Tabulated(t) => {
                let k = t.segment(x);
                t.cdf[k] + t.density[k] * (x - t.theta[k])
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            TypeDistribution::Uniform { theta_max } => 1.0 / theta_max,
            TypeDistribution::Tabulated(t) => t.density[t.segment(x)],
        }
    }

    /// Interior points where the density jumps.
    pub fn knots(&self) -> &[f64] {
        match self {
            TypeDistribution::Uniform { .. } => &[],
            TypeDistribution::Tabulated(t) => &t.theta[1..t.theta.len() - 1],
        }
    }

    /// `φ(θ) = θ − (1 − F(θ))/f(θ)`.
    pub fn virtual_value(&self, theta: f64) -> Result<f64> {
        let top = self.theta_max();
        if !(0.0..=top).contains(&theta) {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                domain: format!("[0, {top}]"),
            });
        }
        Ok(self.phi(theta))
    }

    /// Unchecked virtual value.
    pub fn phi(&self, theta: f64) -> f64 {
        match self {
            TypeDistribution::Uniform { theta_max } => 2.0 * theta - theta_max,
            TypeDistribution::Tabulated(_) => theta - (1.0 - self.cdf(theta)) / self.pdf(theta),
        }
    }

    /// Smallest `θ` with `φ(θ) ≥ y`, by bisection. `None` when no type reaches `y`.
    pub fn first_theta_with_phi_at_least(&self, y: f64) -> Option<f64> {
        let top = self.theta_max();
        if self.phi(0.0) >= y {
            return Some(0.0);
        }
        if self.phi(top) < y {
            return None;
        }
        Some(bisect_predicate(0.0, top, |t| self.phi(t) >= y))
    }

    /// `φ^{-1}(y)` for `y` in `[φ(0), φ(θ̄)]`, found by bisection on the monotone `φ`.
    pub fn virtual_value_inverse(&self, y: f64) -> Result<f64> {
        let (lo, hi) = (self.phi(0.0), self.phi(self.theta_max()));
        if !(lo..=hi).contains(&y) {
            return Err(Error::Domain {
                what: "virtual value",
                value: y,
                domain: format!("[{lo}, {hi}]"),
            });
        }
        Ok(self.first_theta_with_phi_at_least(y).unwrap_or(self.theta_max()))
    }

    /// Samples `φ` on `n_check` evenly spaced points plus both sides of every
    /// knot and reports the first decrease larger than `tol`.
    pub fn check_regularity(&self, n_check: usize, tol: f64) -> Regularity {
        let top = self.theta_max();
        let n = n_check.max(2);
        let mut points: Vec<f64> = (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect();
        for &k in self.knots() {
            points.push(prev_float(k));
            points.push(k);
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut prev = self.phi(points[0]);
        for &t in &points[1..] {
            let cur = self.phi(t);
            if cur < prev - tol {
                return Regularity {
                    regular: false,
                    violation_at: Some(t),
                };
            }
            prev = cur;
        }
        Regularity {
            regular: true,
            violation_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub regular: bool,
    pub violation_at: Option<f64>,
}

/// Largest float strictly below a positive `x`.
pub(crate) fn prev_float(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    f64::from_bits(x.to_bits() - 1)
}

/// Returns the smallest point (to machine precision) in `[lo, hi]` where a
/// monotone predicate flips from false to true. Assumes `pred(hi)` holds.
pub(crate) fn bisect_predicate(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_virtual_value_examples() {
        let u1 = TypeDistribution::uniform(1.0).unwrap();
        assert_eq!(u1.virtual_value(0.75).unwrap(), 0.5);
        assert_eq!(u1.virtual_value(1.0).unwrap(), 1.0);
        assert_eq!(TypeDistribution::uniform(2.0).unwrap().virtual_value(1.0).unwrap(), 0.0);
        assert!(u1.virtual_value(1.01).is_err());
    }

    #[test]
    fn uniform_inverse_examples() {
        let u1 = TypeDistribution::uniform(1.0).unwrap();
        assert_relative_eq!(u1.virtual_value_inverse(0.25).unwrap(), 0.625, epsilon = 1e-12);
        let y = u1.phi(0.3);
        assert_relative_eq!(u1.virtual_value_inverse(y).unwrap(), 0.3, epsilon = 1e-12);
        assert_eq!(u1.virtual_value_inverse(1.0).unwrap(), 1.0);
        assert!(u1.virtual_value_inverse(1.5).is_err());
    }

    #[test]
    fn uniform_is_regular() {
        for top in [1.0, 0.5] {
            let r = TypeDistribution::uniform(top).unwrap().check_regularity(101, 1e-12);
            assert!(r.regular);
            assert_eq!(r.violation_at, None);
        }
    }

    #[test]
    fn density_spike_near_zero_is_not_regular() {
        // f = 10 on [0, 0.05), f = 0.5/0.95 on [0.05, 1].
        // Left of the knot phi = 0.05 - 0.5/10 = 0; right of it phi = 0.05 - 0.95 = -0.9.
        let d = TypeDistribution::tabulated(vec![0.0, 0.05, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert_relative_eq!(d.phi(prev_float(0.05)), 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.phi(0.05), -0.9, epsilon = 1e-12);
        let r = d.check_regularity(50, 1e-10);
        assert!(!r.regular);
        assert_eq!(r.violation_at, Some(0.05));
    }

    #[test]
    fn tabulated_uniform_matches_uniform() {
        let tab = TypeDistribution::tabulated(vec![0.0, 0.4, 1.0], vec![0.0, 0.4, 1.0]).unwrap();
        let uni = TypeDistribution::uniform(1.0).unwrap();
        for t in [0.0, 0.1, 0.4, 0.77, 1.0] {
            assert_relative_eq!(tab.phi(t), uni.phi(t), epsilon = 1e-12);
            assert_relative_eq!(tab.cdf(t), uni.cdf(t), epsilon = 1e-12);
        }
        assert!(tab.check_regularity(64, 1e-12).regular);
        assert_eq!(tab.knots(), &[0.4]);
    }

    #[test]
    fn tabulated_rejects_flat_cdf() {
        assert!(TypeDistribution::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]).is_err());
        assert!(TypeDistribution::tabulated(vec![0.1, 0.5, 1.0], vec![0.0, 0.5, 1.0]).is_err());
    }
}
