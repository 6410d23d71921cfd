//! Acceptance suite. Each test prints one PASS/FAIL line per criterion and
//! asserts on it.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use beg::bounds::{conditional_step_moments, spin_conditional, variance_term};
use beg::cases::{case_catalog, find_case};
use beg::exact_law::{build_joint_law, hs_check, moment, pair_covariance};
use beg::mcmc::{default_burn_in, run_chain, ChainConfig};
use beg::model::{critical_k, f_single, g_derivs_at_zero, g_prime, pair_conditional_funcs, ModelParams, BETA_C};
use beg::oracle::{brute_force_steps, total_variation};
use beg::rates::{default_ladder, run_sweep, RateReport, ScanOptions};
use beg::Result;

fn report(criterion: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn oracle_params() -> Vec<ModelParams> {
    [(1.0, 0.6), (1.0, critical_k(1.0)), (BETA_C, critical_k(BETA_C)), (0.5, 0.3), (1.0, 1.5), (2.0, 1.2)]
        .into_iter()
        .map(|(b, k)| ModelParams::new(b, k).unwrap())
        .collect()
}

#[test]
fn criterion_1_exhaustive_oracle() {
    let start = Instant::now();
    let (mut tv_max, mut step_max, mut var_max) = (0.0f64, 0.0f64, 0.0f64);
    for p in oracle_params() {
        for n in 1..=8 {
            let law = build_joint_law(p, n).unwrap();
            tv_max = tv_max.max(total_variation(&law).unwrap());
            let gamma = 0.25;
            let brute = brute_force_steps(&p, n, gamma).unwrap();
            let ours = conditional_step_moments(&law, gamma);
            for c in &ours {
                if let Some(&(mean, second)) = brute.classes.get(&(c.s, c.m)) {
                    step_max = step_max.max((mean - c.mean).abs()).max((second - c.second).abs());
                }
            }
            assert_eq!(ours.len(), brute.classes.len(), "class count at n={n}");
            var_max = var_max.max((variance_term(&law, gamma) - brute.variance_term).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = tv_max < 1e-12 && step_max < 1e-12 && var_max < 1e-12 && elapsed < Duration::from_secs(60);
    report(
        "1",
        ok,
        &format!("max TV={tv_max:.3e}, step moments {step_max:.3e}, variance_term {var_max:.3e}, {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(ok);
}

#[test]
fn criterion_2_closed_forms() {
    let mut g2_max = 0.0f64;
    let mut g4_max = 0.0f64;
    for beta in [0.3, 0.7, 1.0, 1.2, BETA_C, 2.0, 3.0] {
        let p = ModelParams::new(beta, critical_k(beta)).unwrap();
        g2_max = g2_max.max(g_derivs_at_zero(&p).g2.abs());
    }
    for k in [0.2, 0.8, critical_k(BETA_C), 1.5] {
        let p = ModelParams::new(BETA_C, k).unwrap();
        g4_max = g4_max.max(g_derivs_at_zero(&p).g4.abs());
    }
    let (mut id_max, mut sq_max) = (0.0f64, 0.0f64);
    for p in oracle_params() {
        for i in 0..=200 {
            let x = -1.0 + 0.01 * i as f64;
            // derivative of βKx² − log(1 + e^{−β}(e^y + e^{−y})) at y = 2βKx, written out
            let a = p.coupling();
            let (ep, em, eb) = ((a * x).exp(), (-a * x).exp(), (-p.beta).exp());
            let dg = a * x - a * eb * (ep - em) / (1.0 + eb * (ep + em));
            id_max = id_max.max((g_prime(&p, x) - dg).abs()).max((a * (x - f_single(&p, x)) - dg).abs());
            let (f1, f2) = pair_conditional_funcs(&p, x);
            sq_max = sq_max.max((f2 * f2 - f1).abs());
        }
    }
    let g6 = g_derivs_at_zero(&ModelParams::tricritical()).g6;
    let g6_rel = (g6 - 162.0).abs() / 162.0;
    let ok = g2_max < 1e-12 && g4_max < 1e-12 && id_max < 1e-12 && sq_max < 1e-12 && g6_rel < 1e-6;
    report(
        "2",
        ok,
        &format!("|g2|={g2_max:.2e}, |g4|={g4_max:.2e}, G' identity {id_max:.2e}, f2^2-f1 {sq_max:.2e}, g6={g6:.15} (rel {g6_rel:.2e})"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_fixed_parameter_rates() {
    let mut all = true;
    for (id, tol) in [("fixed-A", 0.15), ("fixed-B", 0.15), ("fixed-C", 0.10)] {
        let c = find_case(id).unwrap();
        let opts = ScanOptions { slope_tol: tol, ..ScanOptions::default() };
        let start = Instant::now();
        let r = beg::rates::run_case(&c, &default_ladder(&c), &opts).unwrap();
        let ok = r.passed();
        all &= ok;
        report(
            "3",
            ok,
            &format!(
                "{id}: slope {:.4} (need <= {:.4}), d_K n^r ratio {:.3} (need <= 10), {} points, {:.1}s",
                r.fit.slope,
                -r.predicted_rate + tol,
                r.scaled_ratio,
                r.ladder.len(),
                start.elapsed().as_secs_f64()
            ),
        );
    }
    assert!(all);
}

struct Sweep {
    rows: Vec<(String, Result<RateReport>)>,
    elapsed: Duration,
}

fn sweep(with_bounds: bool) -> &'static Sweep {
    static PLAIN: OnceLock<Sweep> = OnceLock::new();
    static BOUNDED: OnceLock<Sweep> = OnceLock::new();
    let cell = if with_bounds { &BOUNDED } else { &PLAIN };
    cell.get_or_init(|| {
        let start = Instant::now();
        let opts = ScanOptions { with_bounds, ..ScanOptions::default() };
        let rows = run_sweep(&case_catalog(), None, &opts);
        Sweep { rows, elapsed: start.elapsed() }
    })
}

#[test]
fn criterion_4_full_sweep() {
    let s = sweep(false);
    let mut failed = Vec::new();
    for (id, r) in &s.rows {
        match r {
            Ok(rep) if rep.passed() => {}
            Ok(rep) => failed.push(format!("{id} (slope {:.3}, ratio {:.2})", rep.fit.slope, rep.scaled_ratio)),
            Err(e) => failed.push(format!("{id} ({e})")),
        }
    }
    let slope = |id: &str| s.rows.iter().find(|(i, _)| i == id).and_then(|(_, r)| r.as_ref().ok()).map(|r| r.fit.slope);
    let (b3a, b3b) = (slope("B3a"), slope("B3b"));
    let split = match (b3a, b3b) {
        (Some(a), Some(b)) => a - b,
        _ => f64::NAN,
    };
    let split_ok = split >= 0.05;
    let time_ok = s.elapsed < Duration::from_secs(3600);
    let ok = failed.is_empty() && split_ok && time_ok && s.rows.len() == 42;
    report(
        "4",
        ok,
        &format!(
            "{}/{} cases pass; B3 slope split {split:.4} (need >= 0.05); {:.1}s; failing: [{}]",
            s.rows.len() - failed.len(),
            s.rows.len(),
            s.elapsed.as_secs_f64(),
            failed.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_bound_dominance() {
    let s = sweep(true);
    let (mut checked, mut violations, mut skipped) = (0usize, Vec::new(), Vec::new());
    let mut worst = f64::INFINITY;
    for (id, r) in &s.rows {
        let Ok(rep) = r else {
            skipped.push(id.clone());
            continue;
        };
        for p in &rep.ladder {
            let b = p.bounds.as_ref().expect("bounds requested");
            checked += 1;
            worst = worst.min(b.at_a.total / p.dk);
            if !(b.at_a.total >= p.dk) {
                violations.push(format!("{id}@{}", p.n));
            }
            if let Some(c) = b.at_a.constants {
                assert!(c.d1.is_finite() && c.d2.is_finite() && c.d3.is_finite() && c.d4.is_finite());
            }
        }
    }
    let ok = violations.is_empty() && skipped.is_empty();
    report(
        "5",
        ok,
        &format!(
            "{checked} (case, n) points at A = n^-(1-gamma); min bound/d_K {worst:.3e}; violations [{}]; not evaluable [{}]; {:.1}s",
            violations.join(", "),
            skipped.join(", "),
            s.elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_6_lemma_numerics() {
    // conditional-mean sandwich at every class
    let mut sandwich_bad = 0usize;
    for p in oracle_params() {
        for e in 4..=8 {
            let n = 1usize << e;
            let c = (2.0 * p.beta * p.k / n as f64).exp();
            for t in -(n as i64 - 1)..=(n as i64 - 1) {
                let q = spin_conditional(&p, n, t);
                let mu = q[2] - q[0];
                let f = f_single(&p, t as f64 / n as f64);
                let (lo, hi) = if f >= 0.0 { (f / c, f * c) } else { (f * c, f / c) };
                let slack = 1e-15 * f.abs().max(1e-300);
                if mu < lo - slack || mu > hi + slack {
                    sandwich_bad += 1;
                }
            }
        }
    }
    let sandwich_ok = sandwich_bad == 0;
    report("6", sandwich_ok, &format!("sandwich e^(+-2bK/n): {sandwich_bad} violating classes over n in 2^4..2^8"));

    let regions = [
        ("A", ModelParams::new(1.0, 0.6).unwrap(), 0.5f64),
        ("B", ModelParams::new(1.0, critical_k(1.0)).unwrap(), 0.25),
        ("C", ModelParams::tricritical(), 1.0 / 6.0),
    ];
    let mut cov_ok = true;
    let mut mom_ok = true;
    let mut hs_ok = true;
    for (name, p, gamma) in regions {
        let mut covs = Vec::new();
        let mut moms: Vec<[f64; 4]> = Vec::new();
        for e in 6..=13 {
            let law = build_joint_law(p, 1usize << e).unwrap();
            let nf = (1u64 << e) as f64;
            if e <= 12 {
                covs.push(pair_covariance(&law).unwrap().abs() * nf.powf((4.0 * gamma).min(1.0)));
            }
            let m = [2, 4, 6, 8].map(|l| moment(&law, gamma, l).unwrap());
            moms.push(m);
        }
        let cmax = covs.iter().cloned().fold(0.0, f64::max);
        let c_ok = cmax <= 10.0 * covs[0];
        cov_ok &= c_ok;
        report(
            "6",
            c_ok,
            &format!("{name}: |Cov| n^min(4g,1) from {:.4e} to {:.4e}, max {cmax:.4e} (need <= 10x first)", covs[0], covs[covs.len() - 1]),
        );
        let mut worst = 0.0f64;
        for l in 0..4 {
            let first = moms[0][l];
            let mx = moms.iter().map(|m| m[l]).fold(0.0, f64::max);
            worst = worst.max(mx / first);
        }
        let m_ok = worst <= 10.0;
        mom_ok &= m_ok;
        report(
            "6",
            m_ok,
            &format!("{name}: E[W^l], l=2..8, max/first over n in 2^6..2^13 = {worst:.4} (need <= 10); E[W^8] at 2^13 = {:.4e}", moms[moms.len() - 1][3]),
        );
        let hs = hs_check(p, 1024, gamma).unwrap();
        let h_ok = hs.sup_error < 1e-3;
        hs_ok &= h_ok;
        report("6", h_ok, &format!("{name}: HS sup-CDF error at n=1024 = {:.3e} (need < 1e-3)", hs.sup_error));
    }
    assert!(sandwich_ok && cov_ok && mom_ok && hs_ok);
}

#[test]
fn criterion_7_mcmc() {
    let p = ModelParams::new(1.0, 0.6).unwrap();
    let gamma = 0.5;
    let mut ok = true;
    for (i, n) in [20usize, 50, 100].into_iter().enumerate() {
        let sweeps = 100_000;
        let cfg = ChainConfig { n, sweeps, burn_in: default_burn_in(sweeps), seed: 2024 + i as u64, gamma, trace_every: None, pmf: false };
        let stats = run_chain(&p, &cfg).unwrap();
        let law = build_joint_law(p, n).unwrap();
        let mut worst = 0.0f64;
        for (k, est) in &stats.moments {
            let exact = moment(&law, gamma, *k).unwrap();
            worst = worst.max((est.mean - exact).abs() / est.std_error);
        }
        let again = run_chain(&p, &cfg).unwrap();
        let same = format!("{:?}", stats.moments) == format!("{:?}", again.moments);
        let this_ok = worst <= 4.0 && same;
        ok &= this_ok;
        report("7", this_ok, &format!("n={n}: max |est - exact|/SE over l=2,4,6,8 = {worst:.3} (need <= 4); reproducible: {same}"));
    }
    assert!(ok);
}
