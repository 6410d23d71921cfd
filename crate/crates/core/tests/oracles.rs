use beg::bounds::{conditional_step_moments, regression_decompose, variance_term};
use beg::exact_law::{build_joint_law, moment, pair_covariance};
use beg::model::{critical_k, pair_conditional_funcs, schedule_eval, ModelParams, Schedule, BETA_C};
use beg::oracle::{brute_force_covariance, brute_force_moment, brute_force_steps, total_variation};
use beg::Drift;

// Frozen from a 30-digit brute-force enumeration.
const M2_N4_A: f64 = 0.747_578_991_047_929_4;
const M4_N6_K15_QUARTER: f64 = 2.343_603_881_119_555;

fn params() -> Vec<ModelParams> {
    [(1.0, 0.6), (1.0, critical_k(1.0)), (BETA_C, critical_k(BETA_C)), (0.5, 0.3), (1.0, 1.5), (2.0, 1.2)]
        .into_iter()
        .map(|(b, k)| ModelParams::new(b, k).unwrap())
        .collect()
}

#[test]
fn frozen_moments() {
    let p = ModelParams::new(1.0, 0.6).unwrap();
    let law = build_joint_law(p, 4).unwrap();
    assert!((moment(&law, 0.5, 2).unwrap() - M2_N4_A).abs() < 1e-12);
    assert!((brute_force_moment(&p, 4, 0.5, 2).unwrap() - M2_N4_A).abs() < 1e-12);
    let p = ModelParams::new(1.0, 1.5).unwrap();
    let law = build_joint_law(p, 6).unwrap();
    assert!((moment(&law, 0.25, 4).unwrap() - M4_N6_K15_QUARTER).abs() < 1e-12);
}

#[test]
fn frozen_constants() {
    assert!((critical_k(1.0) - 1.179_570_457_114_761_3).abs() < 1e-14);
    assert!((critical_k(BETA_C) - 1.082_021_280_666_722_6).abs() < 1e-14);
    let p = ModelParams::new(1.0, 0.6).unwrap();
    assert!((pair_conditional_funcs(&p, 0.0).1 - 0.423_883_115_234_170_9).abs() < 1e-14);
    let s = Schedule::FixedBeta { beta_fixed: 1.0, k: 1.0, delta2: 0.5 };
    assert!((schedule_eval(&s, 100).unwrap().k - (critical_k(1.0) - 0.1)).abs() < 1e-15);
}

#[test]
fn enumeration_matches_brute_force_up_to_ten() {
    for p in params() {
        for n in [9, 10] {
            let law = build_joint_law(p, n).unwrap();
            assert!(total_variation(&law).unwrap() < 1e-12);
        }
    }
}

#[test]
fn covariance_matches_brute_force() {
    for p in params() {
        for n in 2..=8 {
            let law = build_joint_law(p, n).unwrap();
            let ours = pair_covariance(&law).unwrap();
            let bf = brute_force_covariance(&p, n).unwrap();
            assert!((ours - bf).abs() < 1e-12, "n={n} {ours} {bf}");
        }
    }
}

#[test]
fn step_moments_match_brute_force_for_several_gammas() {
    for p in params() {
        for n in 1..=6 {
            let law = build_joint_law(p, n).unwrap();
            for gamma in [1.0 / 6.0, 0.3, 0.5] {
                let bf = brute_force_steps(&p, n, gamma).unwrap();
                for c in conditional_step_moments(&law, gamma) {
                    let (m, s) = bf.classes[&(c.s, c.m)];
                    assert!((m - c.mean).abs() < 1e-12 && (s - c.second).abs() < 1e-12);
                }
                assert!((variance_term(&law, gamma) - bf.variance_term).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn regression_identity_reconstructs() {
    for p in params() {
        for n in 2..=6 {
            let law = build_joint_law(p, n).unwrap();
            let drift = Drift { lambda: 1.0 / n as f64, q: [0.7, 0.1, 0.01] };
            let r = regression_decompose(&law, 0.5, &drift);
            assert!(r.identity_residual < 1e-14, "{}", r.identity_residual);
        }
    }
}
