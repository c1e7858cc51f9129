//! One-dimensional maximization over `(0, 1]`: a coarse log+uniform scan,
//! golden-section refinement of the best brackets in `ln λ`, and an optional
//! slope-bisection polish where a derivative is available.

use crate::model::bisect_predicate;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Candidate peaks refined after the coarse scan.
const MAX_PEAKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

impl Maximum {
    /// Higher value wins; exact ties go to the larger `x`.
    fn better(self, other: Maximum) -> Maximum {
        if other.value > self.value || (other.value == self.value && other.x > self.x) {
            other
        } else {
            self
        }
    }
}

/// Half the points log-spaced on `[floor, 0.1)`, the rest uniform on `[0.1, 1]`.
pub fn log_uniform_grid(n: usize, floor: f64) -> Vec<f64> {
    let n_log = n / 2;
    let n_uni = n - n_log;
    let mut grid = Vec::with_capacity(n);
    let (lo, hi) = (floor.ln(), 0.1f64.ln());
    for k in 0..n_log {
        grid.push((lo + (hi - lo) * k as f64 / n_log as f64).exp());
    }
    for j in 0..n_uni {
        grid.push(0.1 + 0.9 * j as f64 / (n_uni - 1).max(1) as f64);
    }
    // The uniform step can round past or short of one.
    if let Some(last) = grid.last_mut() {
        *last = 1.0;
    }
    grid
}

/// Golden-section maximization of `f` over `[a, b]` in `ln x`, to relative width `tol`.
pub fn golden_max_log(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Maximum {
    let (mut lo, mut hi) = (a.ln(), b.ln());
    // exp(ln x) can land one ulp outside the bracket.
    let at = |u: f64| u.exp().clamp(a, b);
    let mut best = Maximum { x: a, value: f(a) }.better(Maximum { x: b, value: f(b) });
    let mut u1 = hi - INV_PHI * (hi - lo);
    let mut u2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(at(u1));
    let mut f2 = f(at(u2));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 || (f1 == f2 && u2 > u1) {
            lo = u1;
            u1 = u2;
            f1 = f2;
            u2 = lo + INV_PHI * (hi - lo);
            f2 = f(at(u2));
        } else {
            hi = u2;
            u2 = u1;
            f2 = f1;
            u1 = hi - INV_PHI * (hi - lo);
            f1 = f(at(u1));
        }
    }
    best = best.better(Maximum { x: at(u1), value: f1 });
    best.better(Maximum { x: at(u2), value: f2 })
}

/// Maximizes `f` over the span of `grid` and returns the largest maximizer.
///
/// `slope`, when given, must have the sign of `f'` away from kinks; it is used
/// to polish each refined peak to machine precision. `extra` points (e.g. a
/// known kink) are always considered as candidates. Peaks whose values lie
/// within `tie_tol·max(1, |best|)` of the best are treated as ties.
pub fn maximize_largest(
    f: &impl Fn(f64) -> f64,
    slope: Option<&dyn Fn(f64) -> f64>,
    grid: &[f64],
    extra: &[f64],
    tol: f64,
    tie_tol: f64,
) -> Maximum {
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let n = grid.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left_ok = i == 0 || values[i] >= values[i - 1];
            let right_ok = i == n - 1 || values[i] > values[i + 1];
            left_ok && right_ok
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(j.cmp(&i)));
    peaks.truncate(MAX_PEAKS);

    let mut found: Vec<Maximum> = Vec::new();
    for &i in &peaks {
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(n - 1)];
        let mut best = Maximum { x: grid[i], value: values[i] };
        if b > a {
            best = best.better(golden_max_log(f, a, b, tol));
            // The slope sign is exact where values are flat to rounding, so
            // a polished point supersedes the derivative-free estimate.
            if let Some(p) = slope.and_then(|s| polish(f, s, best.x, a, b)) {
                best = p;
            }
        }
        found.push(best);
    }
    let (lo, hi) = (grid[0], grid[n - 1]);
    found.extend(
        extra
            .iter()
            .filter(|&&x| x >= lo && x <= hi)
            .map(|&x| Maximum { x, value: f(x) }),
    );

    let top = found
        .iter()
        .copied()
        .reduce(Maximum::better)
        .expect("grid is nonempty");
    let band = tie_tol * top.value.abs().max(1.0);
    found
        .into_iter()
        .filter(|m| m.value >= top.value - band)
        .reduce(|a, b| if b.x > a.x { b } else { a })
        .unwrap_or(top)
}

/// Bisects on the sign change of `slope` around `x0`, staying inside `[a, b]`.
fn polish(f: &impl Fn(f64) -> f64, slope: &dyn Fn(f64) -> f64, x0: f64, a: f64, b: f64) -> Option<Maximum> {
    if x0 >= b && slope(b) >= 0.0 {
        return Some(Maximum { x: b, value: f(b) });
    }
    let mut width = 1e-7 * x0;
    for _ in 0..8 {
        let l = (x0 - width).max(a);
        let r = (x0 + width).min(b);
        let (sl, sr) = (slope(l), slope(r));
        if sl >= 0.0 && sr <= 0.0 && r > l {
            // First point with negative slope; the crossing lies within one step below it.
            let x = bisect_predicate(l, r, |x| slope(x) < 0.0);
            return Some(Maximum { x, value: f(x) });
        }
        if r >= b && sr > 0.0 {
            return Some(Maximum { x: b, value: f(b) });
        }
        width *= 10.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_layout() {
        let g = log_uniform_grid(64, 1e-6);
        assert_eq!(g.len(), 64);
        assert_relative_eq!(g[0], 1e-6, max_relative = 1e-12);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn golden_finds_interior_peak() {
        let f = |x: f64| -(x - 0.3).powi(2);
        let m = golden_max_log(&f, 0.1, 0.9, 1e-12);
        assert_relative_eq!(m.x, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn polish_reaches_machine_precision() {
        let f = |x: f64| -(x - 0.3).powi(2);
        let s = |x: f64| -(x - 0.3);
        let grid = log_uniform_grid(64, 1e-6);
        let m = maximize_largest(&f, Some(&s), &grid, &[], 1e-10, 1e-9);
        assert!((m.x - 0.3).abs() < 1e-14, "{}", m.x);
    }

    #[test]
    fn ties_resolve_to_largest() {
        // Two equal peaks at 0.2 and 0.8.
        let f = |x: f64| -((x - 0.2).powi(2)).min((x - 0.8).powi(2));
        let grid = log_uniform_grid(128, 1e-6);
        let m = maximize_largest(&f, None, &grid, &[], 1e-12, 1e-9);
        assert!((m.x - 0.8).abs() < 1e-5, "{}", m.x);
    }

    #[test]
    fn increasing_function_peaks_at_one() {
        let f = |x: f64| x;
        let s = |_: f64| 1.0;
        let grid = log_uniform_grid(32, 1e-6);
        let m = maximize_largest(&f, Some(&s), &grid, &[], 1e-10, 1e-9);
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn flat_function_picks_one() {
        let f = |_: f64| 0.0;
        let grid = log_uniform_grid(32, 1e-6);
        assert_eq!(maximize_largest(&f, None, &grid, &[], 1e-10, 1e-9).x, 1.0);
    }
}
