use beg::bounds::{evaluate_bound, increment_bound, regression_decompose, step_table, variance_term, BoundKind};
use beg::cases::find_case;
use beg::density::{build_comparison_density, Pattern};
use beg::exact_law::{build_joint_law, moment_set, w_scale};
use beg::model::g_derivs_at_zero;
use beg::stein::{estimate_stein_constants_on, GridSpec};

#[test]
fn region_a_variance_term_is_cubic() {
    let c = find_case("fixed-A").unwrap();
    let p = c.params_at(64).unwrap();
    let scaled: Vec<f64> = (6..=12)
        .map(|e| {
            let n = 1usize << e;
            variance_term(&build_joint_law(p, n).unwrap(), 0.5) * (n as f64).powi(3)
        })
        .collect();
    let first = scaled[0];
    assert!(scaled.iter().all(|&v| v >= 0.0 && v <= 10.0 * first), "{scaled:?}");
}

#[test]
fn region_a_remainder_decays() {
    let c = find_case("fixed-A").unwrap();
    let p = c.params_at(64).unwrap();
    let r: Vec<f64> = (6..=12)
        .map(|e| {
            let n = 1usize << e;
            let d = c.drift(&p, n);
            regression_decompose(&build_joint_law(p, n).unwrap(), 0.5, &d).remainder_l2 / d.lambda
        })
        .collect();
    // O(n^{−1/2}): the last value is well below the first
    assert!(r[6] < 0.25 * r[0], "{r:?}");
    let scaled: Vec<f64> = r.iter().enumerate().map(|(i, v)| v * 2f64.powf(0.5 * (6 + i) as f64)).collect();
    assert!(scaled.iter().all(|&v| v <= 10.0 * scaled[0]));
}

#[test]
fn region_a_bound_is_order_root_n() {
    let c = find_case("fixed-A").unwrap();
    let p = c.params_at(64).unwrap();
    let mut scaled = Vec::new();
    for n in [64usize, 1024] {
        let law = build_joint_law(p, n).unwrap();
        let d = c.drift(&p, n);
        let ms = moment_set(&law, 0.5, 8).unwrap();
        let cmp = build_comparison_density(&d, Pattern::GAUSSIAN, &ms).unwrap();
        let b = evaluate_bound(&law, 0.5, &d, &cmp, None, w_scale(n, 0.5), BoundKind::Normal).unwrap();
        assert!(b.total >= b.exact_dk);
        assert_eq!(b.terms.tail_term, 0.0);
        scaled.push(b.total * (n as f64).sqrt());
    }
    assert!(scaled[1] <= 100.0 * scaled[0], "{scaled:?}");
}

#[test]
fn general_bound_dominates_at_b_and_c() {
    for id in ["fixed-B", "fixed-C"] {
        let c = find_case(id).unwrap();
        let n = 256;
        let p = c.params_at(n).unwrap();
        let law = build_joint_law(p, n).unwrap();
        let d = c.drift(&p, n);
        let ms = moment_set(&law, c.gamma, 8).unwrap();
        let cmp = build_comparison_density(&d, c.pattern, &ms).unwrap();
        let k = estimate_stein_constants_on(&cmp.density, GridSpec { lo: -10.0, hi: 10.0, step: 0.02 });
        for a in [w_scale(n, c.gamma), 2.0 * w_scale(n, c.gamma) * (1.0 + 1e-9)] {
            let b = evaluate_bound(&law, c.gamma, &d, &cmp, Some(&k), a, BoundKind::General).unwrap();
            assert!(b.total >= b.exact_dk, "{id} A={a}: {} < {}", b.total, b.exact_dk);
        }
    }
}

#[test]
fn tail_term_vanishes_only_above_largest_increment() {
    let c = find_case("fixed-B").unwrap();
    let n = 128;
    let p = c.params_at(n).unwrap();
    let law = build_joint_law(p, n).unwrap();
    let t = step_table(&law, c.gamma);
    let u = w_scale(n, c.gamma);
    assert!(t.tail(u) > 0.0);
    assert!(t.tail(1.5 * u) > 0.0);
    assert_eq!(t.tail(increment_bound(n, c.gamma) * (1.0 + 1e-12)), 0.0);
}

#[test]
fn fixed_density_coefficients() {
    for (id, k) in [("fixed-B", 4usize), ("fixed-C", 6)] {
        let c = find_case(id).unwrap();
        let n = 512;
        let p = c.params_at(n).unwrap();
        let ms = moment_set(&build_joint_law(p, n).unwrap(), c.gamma, 8).unwrap();
        let cmp = build_comparison_density(&c.drift(&p, n), c.pattern, &ms).unwrap();
        let expect = 1.0 / (k as f64 * ms.get(k));
        let got = if k == 4 { cmp.density.b2 } else { cmp.density.b3 };
        assert!((got - expect).abs() < 1e-14 * expect);
        assert_eq!(cmp.density.b1, 0.0);
    }
}

#[test]
fn tricritical_drift_scale() {
    let c = find_case("fixed-C").unwrap();
    let n = 1000;
    let p = c.params_at(n).unwrap();
    let d = c.drift(&p, n);
    assert!((d.lambda - (n as f64).powf(-5.0 / 3.0)).abs() < 1e-15);
    let g6 = g_derivs_at_zero(&p).g6;
    assert!((d.q[2] - g6 / (120.0 * p.coupling())).abs() < 1e-9 * d.q[2]);
}

#[test]
fn b1_negative_k_still_normalizes() {
    let c = find_case("B1.k-").unwrap();
    let n = 1024;
    let p = c.params_at(n).unwrap();
    let ms = moment_set(&build_joint_law(p, n).unwrap(), c.gamma, 8).unwrap();
    let cmp = build_comparison_density(&c.drift(&p, n), c.pattern, &ms).unwrap();
    assert!(cmp.density.b1 < 0.0 && cmp.density.b2 > 0.0);
    assert_eq!(cmp.density.cdf_value(0.0), 0.5);
}
