//! Quadrature over sampled nodes and over closures.
//!
//! Node rules integrate the interpolating parabola through consecutive
//! triples, so they accept non-uniform spacing. Intervals listed in `breaks`
//! straddle a kink or jump and are never spanned by a parabola.

/// Integral over `[lo, hi]` of the parabola through three points.
fn parabola_integral(x: [f64; 3], y: [f64; 3], lo: f64, hi: f64) -> f64 {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let c2 = (d12 - d01) / (x[2] - x[0]);
    let h0 = x[1] - x[0];
    let g = |s: f64| y[0] * s + d01 * s * s / 2.0 + c2 * (s * s * s / 3.0 - h0 * s * s / 2.0);
    g(hi - x[0]) - g(lo - x[0])
}

/// Spacing ratio beyond which a parabola is not trusted across an interval.
const MAX_RATIO: f64 = 64.0;

fn balanced(x: &[f64], i: usize) -> bool {
    let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
    h0 <= MAX_RATIO * h1 && h1 <= MAX_RATIO * h0
}

/// Maximal index ranges `[start, end]` not crossing a break interval.
fn pieces(n: usize, breaks: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut sorted = breaks.to_vec();
    sorted.sort_unstable();
    for &b in &sorted {
        if b + 1 >= n {
            continue;
        }
        out.push((start, b));
        start = b + 1;
    }
    out.push((start, n - 1));
    out
}

/// Composite Simpson over node samples, split at `breaks`. Each break
/// interval `[x_b, x_{b+1}]` contributes its trapezoid.
pub fn integrate_nodes(x: &[f64], y: &[f64], breaks: &[usize]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for &b in breaks {
        if b + 1 < x.len() {
            total += 0.5 * (x[b + 1] - x[b]) * (y[b] + y[b + 1]);
        }
    }
    for (s, e) in pieces(x.len(), breaks) {
        total += integrate_piece(&x[s..=e], &y[s..=e]);
    }
    total
}

fn integrate_piece(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() - 1;
    match m {
        0 => 0.0,
        1 => 0.5 * (x[1] - x[0]) * (y[0] + y[1]),
        _ => {
            let mut total = 0.0;
            let mut j = 0;
            while j + 2 <= m {
                if balanced(x, j) {
                    total += parabola_integral([x[j], x[j + 1], x[j + 2]], [y[j], y[j + 1], y[j + 2]], x[j], x[j + 2]);
                    j += 2;
                } else {
                    total += 0.5 * (x[j + 1] - x[j]) * (y[j] + y[j + 1]);
                    j += 1;
                }
            }
            if j < m && m >= 2 && balanced(x, m - 2) {
                total += parabola_integral(
                    [x[m - 2], x[m - 1], x[m]],
                    [y[m - 2], y[m - 1], y[m]],
                    x[m - 1],
                    x[m],
                );
            } else if j < m {
                total += 0.5 * (x[m] - x[m - 1]) * (y[m - 1] + y[m]);
            }
            total
        }
    }
}

/// Running integral `U_i = ∫_{x_0}^{x_i} y`, one parabola per interval.
pub fn cumulative_nodes(x: &[f64], y: &[f64], breaks: &[usize]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let mut is_break = vec![false; n];
    for &b in breaks {
        if b + 1 < n {
            is_break[b] = true;
        }
    }
    for (s, e) in pieces(n, breaks) {
        for i in s..e {
            let inc = if i + 2 <= e && balanced(x, i) {
                parabola_integral([x[i], x[i + 1], x[i + 2]], [y[i], y[i + 1], y[i + 2]], x[i], x[i + 1])
            } else if i > s && balanced(x, i - 1) {
                parabola_integral([x[i - 1], x[i], x[i + 1]], [y[i - 1], y[i], y[i + 1]], x[i], x[i + 1])
            } else {
                0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1])
            };
            out[i + 1] = out[i] + inc;
        }
        if e + 1 < n && is_break[e] {
            out[e + 1] = out[e] + 0.5 * (x[e + 1] - x[e]) * (y[e] + y[e + 1]);
        }
    }
    out
}

/// Adaptive Simpson with Richardson correction. Stops when the local error
/// estimate falls below `max(abs_tol, rel_tol·|whole|)` scaled to the subinterval.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Seed the tolerance from a finer pass so flat starts don't stop too early.
    let scale = {
        let n = 64;
        let h = (b - a) / n as f64;
        (0..=n).map(|i| f(a + h * i as f64).abs()).sum::<f64>() * h
    };
    let tol = abs_tol.max(rel_tol * scale);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || m <= a || m >= b {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
