//! Exhaustive 3^n reference computations for small n.

use std::collections::BTreeMap;

use crate::bounds::spin_conditional;
use crate::error::{BegError, Result};
use crate::exact_law::{w_scale, JointLaw};
use crate::model::ModelParams;
use crate::numeric::Neumaier;

pub const MAX_BRUTE_N: usize = 12;

/// Visits every configuration with its Boltzmann weight exp(−βH).
fn for_each_config<F: FnMut(&[i8], f64)>(p: &ModelParams, n: usize, mut f: F) -> Result<()> {
    if n == 0 || n > MAX_BRUTE_N {
        return Err(BegError::InvalidParams(format!("brute force supports 1 <= n <= {MAX_BRUTE_N}, got {n}")));
    }
    let mut spins = vec![-1i8; n];
    loop {
        let s: i64 = spins.iter().map(|&x| x as i64).sum();
        let m = spins.iter().filter(|&&x| x != 0).count() as f64;
        let h = m - p.k * (s * s) as f64 / n as f64;
        f(&spins, (-p.beta * h).exp());
        let mut i = 0;
        loop {
            if i == n {
                return Ok(());
            }
            if spins[i] < 1 {
                spins[i] += 1;
                break;
            }
            spins[i] = -1;
            i += 1;
        }
    }
}

fn class_of(spins: &[i8]) -> (i64, usize) {
    (spins.iter().map(|&x| x as i64).sum(), spins.iter().filter(|&&x| x != 0).count())
}

/// Law of (S, M) by summing over all 3^n configurations.
pub fn brute_force_atoms(p: &ModelParams, n: usize) -> Result<BTreeMap<(i64, usize), f64>> {
    let mut raw: BTreeMap<(i64, usize), Neumaier> = BTreeMap::new();
    let mut z = Neumaier::new();
    for_each_config(p, n, |sp, w| {
        raw.entry(class_of(sp)).or_default().add(w);
        z.add(w);
    })?;
    let z = z.value();
    Ok(raw.into_iter().map(|(k, v)| (k, v.value() / z)).collect())
}

/// Total-variation distance between the enumerated law and the brute-force law.
pub fn total_variation(law: &JointLaw) -> Result<f64> {
    let bf = brute_force_atoms(&law.params, law.n)?;
    let mut acc = Neumaier::new();
    for (s, m, p) in law.atoms() {
        acc.add((p - bf.get(&(s, m)).copied().unwrap_or(0.0)).abs());
    }
    for (&(s, m), &q) in &bf {
        if law.atom(s, m) == 0.0 && q != 0.0 {
            acc.add(q);
        }
    }
    Ok(0.5 * acc.value())
}

/// E[W_γ^k] by enumeration.
pub fn brute_force_moment(p: &ModelParams, n: usize, gamma: f64, k: i32) -> Result<f64> {
    let scale = w_scale(n, gamma);
    let (mut num, mut z) = (Neumaier::new(), Neumaier::new());
    for_each_config(p, n, |sp, w| {
        num.add(w * (class_of(sp).0 as f64 * scale).powi(k));
        z.add(w);
    })?;
    Ok(num.value() / z.value())
}

/// Cov(ω₁², ω₂²) by enumeration.
pub fn brute_force_covariance(p: &ModelParams, n: usize) -> Result<f64> {
    let (mut a, mut b, mut ab, mut z) = (Neumaier::new(), Neumaier::new(), Neumaier::new(), Neumaier::new());
    for_each_config(p, n, |sp, w| {
        let x = (sp[0] * sp[0]) as f64;
        let y = (sp[1] * sp[1]) as f64;
        a.add(w * x);
        b.add(w * y);
        ab.add(w * x * y);
        z.add(w);
    })?;
    let z = z.value();
    Ok(ab.value() / z - (a.value() / z) * (b.value() / z))
}

/// Per-configuration E[W − W′ | ω] and E[(W − W′)² | ω] aggregated to classes.
#[derive(Debug, Clone)]
pub struct BruteSteps {
    /// (s, M) → (E[D | class], E[D² | class]).
    pub classes: BTreeMap<(i64, usize), (f64, f64)>,
    /// Var(E[D² | W]).
    pub variance_term: f64,
}

pub fn brute_force_steps(p: &ModelParams, n: usize, gamma: f64) -> Result<BruteSteps> {
    let u = w_scale(n, gamma);
    let mut cls: BTreeMap<(i64, usize), [Neumaier; 3]> = BTreeMap::new();
    let mut by_s: BTreeMap<i64, [Neumaier; 2]> = BTreeMap::new();
    for_each_config(p, n, |sp, w| {
        let (s, m) = class_of(sp);
        let (mut d1, mut d2) = (0.0, 0.0);
        for &x in sp {
            let c = spin_conditional(p, n, s - x as i64);
            for (v, pr) in [-1.0, 0.0, 1.0].into_iter().zip(c) {
                let d = x as f64 - v;
                d1 += pr * d;
                d2 += pr * d * d;
            }
        }
        let (d1, d2) = (u * d1 / n as f64, u * u * d2 / n as f64);
        let e = cls.entry((s, m)).or_default();
        e[0].add(w);
        e[1].add(w * d1);
        e[2].add(w * d2);
        let g = by_s.entry(s).or_default();
        g[0].add(w);
        g[1].add(w * d2);
    })?;
    let z: f64 = by_s.values().map(|g| g[0].value()).sum();
    let cond: Vec<(f64, f64)> = by_s.values().map(|g| (g[0].value() / z, g[1].value() / g[0].value())).collect();
    let mean: f64 = cond.iter().map(|(q, v)| q * v).sum();
    let var: f64 = cond.iter().map(|(q, v)| q * (v - mean).powi(2)).sum();
    let classes = cls
        .into_iter()
        .map(|(k, e)| {
            let w = e[0].value();
            (k, (e[1].value() / w, e[2].value() / w))
        })
        .collect();
    Ok(BruteSteps { classes, variance_term: var })
}
