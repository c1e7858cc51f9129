use checkmark_core::mechanism::{
    canonicalize, closed_form_point, effective_virtual_value, optimal_quality, optimal_views, profit,
    solve_optimal, verify_ic,
};
use checkmark_core::oracle::sample_probe;
use checkmark_core::quadrature::{cumulative_nodes, integrate_nodes};
use checkmark_core::{ModelConfig, PooledMechanism};
use proptest::prelude::*;

fn unit7() -> impl Strategy<Value = [f64; 7]> {
    prop::array::uniform7(0.0..1.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quality_and_views_rise_with_virtual_value(u in unit7(), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (cfg, _) = sample_probe(u).unwrap();
        let top = cfg.theta_max();
        let (p1, p2) = (top * (2.0 * a.min(b) - 1.0), top * (2.0 * a.max(b) - 1.0));
        let (l1, l2) = (optimal_quality(p1, &cfg), optimal_quality(p2, &cfg));
        prop_assert!(l1 <= l2 + 1e-9, "lambda {l1} at {p1} > {l2} at {p2}");
        let (v1, v2) = (optimal_views(p1, l1, &cfg), optimal_views(p2, l2, &cfg));
        prop_assert!(v1 <= v2 + 1e-9 * v2.max(1.0), "views {v1} at {p1} > {v2} at {p2}");
    }

    #[test]
    fn optimum_beats_every_quality(u in unit7(), lam in 1e-6..1.0f64) {
        let (cfg, phi) = sample_probe(u).unwrap();
        let best = optimal_quality(phi, &cfg);
        let r_best = effective_virtual_value(phi, best, &cfg).unwrap();
        let r = effective_virtual_value(phi, lam, &cfg).unwrap();
        prop_assert!(r <= r_best + 1e-12 * r_best.abs().max(1.0), "R({lam}) = {r} > R({best}) = {r_best}");
    }

    #[test]
    fn linear_search_matches_closed_form(gamma in 0.02..0.95f64, phi in -1.0..1.0f64) {
        let cfg = ModelConfig::running_example().with_gamma(gamma).unwrap();
        let (lam, v) = closed_form_point(phi, &cfg);
        let found = optimal_quality(phi, &cfg);
        prop_assert!((found - lam).abs() <= 1e-8, "numeric {found}, closed form {lam}");
        prop_assert!((optimal_views(phi, found, &cfg) - v).abs() <= 1e-10);
    }

    #[test]
    fn running_integral_is_exact_on_quadratics(
        // Spacing ratios stay below the point where the rule falls back to trapezoids.
        steps in prop::collection::vec(0.05..1.0f64, 3..40),
        c in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let mut x = vec![0.0];
        for s in &steps {
            x.push(x.last().unwrap() + s);
        }
        let y: Vec<f64> = x.iter().map(|&t| c[0] + c[1] * t + c[2] * t * t).collect();
        let exact = |t: f64| c[0] * t + c[1] * t * t / 2.0 + c[2] * t * t * t / 3.0;
        let u = cumulative_nodes(&x, &y, &[]);
        let scale = exact(*x.last().unwrap()).abs().max(1.0);
        for (t, ui) in x.iter().zip(&u) {
            prop_assert!((ui - exact(*t)).abs() <= 1e-11 * scale);
        }
        prop_assert!((integrate_nodes(&x, &y, &[]) - u[x.len() - 1]).abs() <= 1e-11 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimal_menus_are_incentive_compatible(u in unit7()) {
        let (cfg, _) = sample_probe(u).unwrap();
        let sol = solve_optimal(&cfg).unwrap();
        let ic = verify_ic(&sol, &cfg);
        prop_assert!(ic.scaled() <= 1e-8, "{ic:?}");
        let gap = profit(&sol, &cfg).relative_gap();
        prop_assert!(gap <= 1e-6, "revenue gap {gap}");
    }

    #[test]
    fn canonical_menus_are_fixed_points(gamma in 0.05..0.9f64) {
        let cfg = ModelConfig::running_example().with_gamma(gamma).unwrap();
        let sol = solve_optimal(&cfg).unwrap();
        let pooled = PooledMechanism::from_solution(&sol, PooledMechanism::grid_weights(&sol.theta, &cfg)).unwrap();
        let again = canonicalize(&pooled, &cfg).unwrap();
        for i in 0..sol.len() {
            let served = sol.views_good[i] > 0.0;
            if served {
                prop_assert!((again.quality[i] - sol.quality[i]).abs() <= 1e-12);
            }
            prop_assert!((again.views_good[i] - sol.views_good[i]).abs() <= 1e-12);
            prop_assert!((again.views_bad[i] - sol.views_bad[i]).abs() <= 1e-12 * sol.views_bad[i].max(1.0));
            prop_assert_eq!(again.price[i], sol.price[i]);
        }
    }
}
