//! Exact finite-n law of the total spin via enumeration over (s, M).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{kolmogorov_steps, Cdf};
use crate::error::{BegError, Result};
use crate::model::{g_eval, minimize_g, ModelParams};
use crate::numeric::{adaptive_simpson, log_factorials, normal_cdf, Neumaier};

pub const DEFAULT_CAP: usize = 20_000;

/// Conditional summary of one spin-sum value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    /// P(S = s).
    pub prob: f64,
    /// E[M | S = s].
    pub mean_m: f64,
    /// E[M² | S = s].
    pub mean_m2: f64,
}

/// Exact law of (S, M) under P_{β,K,n}.
///
/// Only per-s summaries are kept; individual atoms are recomputed on demand.
#[derive(Debug, Clone)]
pub struct JointLaw {
    pub n: usize,
    pub params: ModelParams,
    /// log Z_{β,K,n} with respect to the uniform product measure on {−1,0,1}^n.
    pub log_partition: f64,
    slices: Vec<Slice>,
    log_fact: Vec<f64>,
    explicit: Option<BTreeMap<(i64, usize), f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LawHeader {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub log_partition: f64,
}

#[inline]
fn log_weight(lf: &[f64], p: &ModelParams, n: usize, s: usize, m: usize) -> f64 {
    let np = (m + s) / 2;
    let nm = (m - s) / 2;
    let sf = s as f64;
    lf[n] - lf[np] - lf[nm] - lf[n - m] - p.beta * m as f64 + p.beta * p.k * sf * sf / n as f64
}

/// (log mass, E[M|s], E[M²|s]) of one slice, shifted by its own maximum.
fn slice_stats(lf: &[f64], p: &ModelParams, n: usize, s: usize) -> (f64, f64, f64) {
    let lw: Vec<f64> = (s..=n).step_by(2).map(|m| log_weight(lf, p, n, s, m)).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for (j, &l) in lw.iter().enumerate() {
        let m = (s + 2 * j) as f64;
        let w = (l - top).exp();
        z.add(w);
        m1.add(w * m);
        m2.add(w * m * m);
    }
    let z = z.value();
    (top + z.ln(), m1.value() / z, m2.value() / z)
}

pub fn build_joint_law(params: ModelParams, n: usize) -> Result<JointLaw> {
    build_joint_law_capped(params, n, DEFAULT_CAP)
}

pub fn build_joint_law_capped(params: ModelParams, n: usize, cap: usize) -> Result<JointLaw> {
    let params = ModelParams::new(params.beta, params.k)?;
    if n == 0 {
        return Err(BegError::InvalidParams("n must be at least 1".into()));
    }
    if n > cap {
        return Err(BegError::CapExceeded { n, cap });
    }
    let lf = log_factorials(n);
    let raw: Vec<(f64, f64, f64)> = (0..=n).into_par_iter().map(|s| slice_stats(&lf, &params, n, s)).collect();

    let top = raw.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let mut z = Neumaier::new();
    for (s, r) in raw.iter().enumerate() {
        let w = (r.0 - top).exp();
        z.add(if s == 0 { w } else { 2.0 * w });
    }
    let log_z = top + z.value().ln();
    let slices = raw
        .iter()
        .map(|&(l, m1, m2)| Slice { prob: (l - log_z).exp(), mean_m: m1, mean_m2: m2 })
        .collect();
    Ok(JointLaw {
        n,
        params,
        log_partition: log_z - n as f64 * 3f64.ln(),
        slices,
        log_fact: lf,
        explicit: None,
    })
}

impl JointLaw {
    /// Summary for spin sum s ∈ [−n, n].
    #[inline]
    pub fn slice(&self, s: i64) -> &Slice {
        &self.slices[s.unsigned_abs() as usize]
    }

    pub fn prob_s(&self, s: i64) -> f64 {
        self.slice(s).prob
    }

    fn log_z_counting(&self) -> f64 {
        self.log_partition + self.n as f64 * 3f64.ln()
    }

    /// P(S = s, M = m); zero off the lattice.
    pub fn atom(&self, s: i64, m: usize) -> f64 {
        let a = s.unsigned_abs() as usize;
        if m > self.n || m < a || (m - a) % 2 != 0 {
            return 0.0;
        }
        if let Some(ex) = &self.explicit {
            return ex.get(&(s, m)).copied().unwrap_or(0.0);
        }
        (log_weight(&self.log_fact, &self.params, self.n, a, m) - self.log_z_counting()).exp()
    }

    /// All atoms in (s, M) lexicographic order.
    pub fn atoms(&self) -> impl Iterator<Item = (i64, usize, f64)> + '_ {
        let n = self.n as i64;
        (-n..=n).flat_map(move |s| {
            (s.unsigned_abs() as usize..=self.n).step_by(2).map(move |m| (s, m, self.atom(s, m)))
        })
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = Neumaier::new();
        for (s, sl) in self.slices.iter().enumerate() {
            acc.add(if s == 0 { sl.prob } else { 2.0 * sl.prob });
        }
        acc.value()
    }

    /// Locations s/n^{1−γ} with masses P(S = s), ascending.
    pub fn step_points(&self, gamma: f64) -> Vec<(f64, f64)> {
        let scale = w_scale(self.n, gamma);
        let n = self.n as i64;
        (-n..=n).map(|s| (s as f64 * scale, self.prob_s(s))).collect()
    }

    pub fn expect_m(&self) -> (f64, f64) {
        let (mut m1, mut m2) = (Neumaier::new(), Neumaier::new());
        for (s, sl) in self.slices.iter().enumerate() {
            let mult = if s == 0 { 1.0 } else { 2.0 };
            m1.add(mult * sl.prob * sl.mean_m);
            m2.add(mult * sl.prob * sl.mean_m2);
        }
        (m1.value(), m2.value())
    }

    pub fn header(&self) -> LawHeader {
        LawHeader { n: self.n, beta: self.params.beta, k: self.params.k, log_partition: self.log_partition }
    }

    /// Writes a `# {json header}` line followed by `s,M,probability` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = serde_json::to_string(&self.header()).expect("header serializes");
        writeln!(out, "# {header}")?;
        writeln!(out, "s,M,probability")?;
        for (s, m, p) in self.atoms() {
            writeln!(out, "{s},{m},{p:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<JointLaw> {
        let fmt = |msg: String| BegError::Format(msg);
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| fmt("empty law file".into()))?.map_err(|e| fmt(e.to_string()))?;
        let json = first.strip_prefix("# ").ok_or_else(|| fmt("missing JSON header line".into()))?;
        let header: LawHeader = serde_json::from_str(json).map_err(|e| fmt(e.to_string()))?;
        let params = ModelParams::new(header.beta, header.k)?;
        let n = header.n;
        let mut atoms = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| fmt(e.to_string()))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let mut field = |name: &str| it.next().ok_or_else(|| fmt(format!("missing {name} in `{line}`")));
            let s: i64 = field("s")?.trim().parse().map_err(|e| fmt(format!("{e}")))?;
            let m: usize = field("M")?.trim().parse().map_err(|e| fmt(format!("{e}")))?;
            let p: f64 = field("probability")?.trim().parse().map_err(|e| fmt(format!("{e}")))?;
            if s.unsigned_abs() as usize > n || m > n {
                return Err(fmt(format!("atom ({s},{m}) outside n={n}")));
            }
            atoms.insert((s, m), p);
        }
        let mut slices = Vec::with_capacity(n + 1);
        for s in 0..=n as i64 {
            let (mut z, mut m1, mut m2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
            for m in (s as usize..=n).step_by(2) {
                let p = atoms.get(&(s, m)).copied().unwrap_or(0.0);
                z.add(p);
                m1.add(p * m as f64);
                m2.add(p * (m * m) as f64);
            }
            let z = z.value();
            slices.push(if z > 0.0 {
                Slice { prob: z, mean_m: m1.value() / z, mean_m2: m2.value() / z }
            } else {
                Slice { prob: 0.0, mean_m: s as f64, mean_m2: (s * s) as f64 }
            });
        }
        Ok(JointLaw {
            n,
            params,
            log_partition: header.log_partition,
            slices,
            log_fact: log_factorials(n),
            explicit: Some(atoms),
        })
    }
}

/// 1/n^{1−γ}.
#[inline]
pub fn w_scale(n: usize, gamma: f64) -> f64 {
    (n as f64).powf(gamma - 1.0)
}

/// Moments E[W_γ^k] for k = 0..=max_order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub gamma: f64,
    pub moments: BTreeMap<usize, f64>,
}

impl MomentSet {
    pub fn get(&self, k: usize) -> f64 {
        self.moments[&k]
    }
}

pub const MAX_MOMENT_ORDER: usize = 12;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 0.5 {
        Ok(())
    } else {
        Err(BegError::InvalidParams(format!("gamma must lie in (0, 1/2], got {gamma}")))
    }
}

pub fn moment(law: &JointLaw, gamma: f64, k: usize) -> Result<f64> {
    check_gamma(gamma)?;
    if k > MAX_MOMENT_ORDER {
        return Err(BegError::InvalidParams(format!("moment order {k} exceeds {MAX_MOMENT_ORDER}")));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if k % 2 == 1 {
        return Ok(0.0);
    }
    let scale = w_scale(law.n, gamma);
    let mut acc = Neumaier::new();
    for s in 1..=law.n {
        acc.add(2.0 * law.slices[s].prob * (s as f64 * scale).powi(k as i32));
    }
    Ok(acc.value())
}

pub fn moment_set(law: &JointLaw, gamma: f64, max_order: usize) -> Result<MomentSet> {
    let mut moments = BTreeMap::new();
    for k in 0..=max_order {
        moments.insert(k, moment(law, gamma, k)?);
    }
    Ok(MomentSet { gamma, moments })
}

pub fn kolmogorov_distance<C: Cdf + ?Sized>(law: &JointLaw, gamma: f64, f: &C) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(kolmogorov_steps(&law.step_points(gamma), f))
}

/// Exchangeable-site covariance Cov(ω_i², ω_j²).
pub fn pair_covariance(law: &JointLaw) -> Result<f64> {
    if law.n < 2 {
        return Err(BegError::InvalidParams("pair covariance needs n >= 2".into()));
    }
    let n = law.n as f64;
    let (m1, m2) = law.expect_m();
    Ok((m2 - m1) / (n * (n - 1.0)) - (m1 / n) * (m1 / n))
}

#[derive(Debug, Clone, Serialize)]
pub struct HsCheck {
    pub sup_error: f64,
    /// Largest |C(t) + C(−t) − 1| over both CDFs.
    pub symmetry_error: f64,
    pub grid_points: usize,
    pub half_width: f64,
    pub smoothing_sd: f64,
}

pub const HS_GRID_POINTS: usize = 2001;

/// Compares the Gaussian-smoothed law of W_γ with the density ∝ exp(−nG(y/n^γ)).
pub fn hs_check(params: ModelParams, n: usize, gamma: f64) -> Result<HsCheck> {
    check_gamma(gamma)?;
    let law = build_joint_law(params, n)?;
    hs_check_law(&law, gamma)
}

pub fn hs_check_law(law: &JointLaw, gamma: f64) -> Result<HsCheck> {
    check_gamma(gamma)?;
    let p = law.params;
    let n = law.n;
    let nf = n as f64;
    let var_y = 1.0 / (p.coupling() * nf.powf(1.0 - 2.0 * gamma));
    let sigma = var_y.sqrt();
    let m2 = moment(law, gamma, 2)?;
    let width = 8.0 * (m2 + var_y).sqrt();

    let half = HS_GRID_POINTS / 2;
    let mut grid = vec![0.0; HS_GRID_POINTS];
    for j in 0..half {
        let t = -width + width * j as f64 / half as f64;
        grid[j] = t;
        grid[HS_GRID_POINTS - 1 - j] = -t;
    }

    let atoms: Vec<(f64, f64)> = law.step_points(gamma).into_iter().filter(|a| a.1 > 0.0).collect();
    let mixture: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let mut acc = Neumaier::new();
            for &(w, q) in &atoms {
                acc.add(q * normal_cdf((t - w) / sigma));
            }
            acc.value()
        })
        .collect();

    let g_min = minimize_g(&p).first().map_or(0.0, |&x| g_eval(&p, x));
    let ng = nf.powf(gamma);
    let dens = |y: f64| (-nf * (g_eval(&p, y / ng) - g_min)).exp();
    let mut outer = width;
    while dens(-outer) > 1e-300 && outer < 1e6 {
        outer *= 2.0;
    }
    let peak = dens(0.0).max(1e-300);
    let tol = 1e-15 * peak * width;
    let mut cum = Vec::with_capacity(HS_GRID_POINTS);
    let mut acc = Neumaier::new();
    acc.add(adaptive_simpson(&dens, -outer, grid[0], tol));
    cum.push(acc.value());
    for w in grid.windows(2) {
        acc.add(adaptive_simpson(&dens, w[0], w[1], tol));
        cum.push(acc.value());
    }
    acc.add(adaptive_simpson(&dens, grid[HS_GRID_POINTS - 1], outer, tol));
    let total = acc.value();

    let mut sup: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for j in 0..HS_GRID_POINTS {
        let g = cum[j] / total;
        sup = sup.max((mixture[j] - g).abs());
        let mirror = HS_GRID_POINTS - 1 - j;
        sym = sym.max((mixture[j] + mixture[mirror] - 1.0).abs());
        sym = sym.max((g + cum[mirror] / total - 1.0).abs());
    }
    Ok(HsCheck { sup_error: sup, symmetry_error: sym, grid_points: HS_GRID_POINTS, half_width: width, smoothing_sd: sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{Normal, PointMass, StepCdf};

    fn p(beta: f64, k: f64) -> ModelParams {
        ModelParams::new(beta, k).unwrap()
    }

    #[test]
    fn n1_closed_form() {
        let law = build_joint_law(p(1.0, 0.6), 1).unwrap();
        let e = (-(1.0f64) * (1.0 - 0.6)).exp();
        assert!((law.prob_s(0) - 1.0 / (1.0 + 2.0 * e)).abs() < 1e-15);
        assert!((law.prob_s(1) - e / (1.0 + 2.0 * e)).abs() < 1e-15);
    }

    #[test]
    fn normalized_and_symmetric() {
        for n in [1usize, 7, 100, 1000] {
            let law = build_joint_law(p(1.0, 0.6), n).unwrap();
            assert!((law.total_mass() - 1.0).abs() < 1e-12);
            let atoms: f64 = law.atoms().map(|a| a.2).sum();
            assert!((atoms - 1.0).abs() < 1e-12);
            assert_eq!(law.atom(3.min(n as i64), n), law.atom(-(3.min(n as i64)), n));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(
            build_joint_law_capped(p(1.0, 0.6), 11, 10).unwrap_err(),
            BegError::CapExceeded { n: 11, cap: 10 }
        );
    }

    #[test]
    fn moments_basics() {
        let law = build_joint_law(p(1.0, 0.6), 50).unwrap();
        assert_eq!(moment(&law, 0.5, 0).unwrap(), 1.0);
        assert_eq!(moment(&law, 0.5, 3).unwrap(), 0.0);
        assert!(moment(&law, 0.5, 13).is_err());
        assert!(moment(&law, 0.6, 2).is_err());
    }

    #[test]
    fn kolmogorov_trivial_cases() {
        let law = build_joint_law(p(1.0, 0.6), 20).unwrap();
        let own = StepCdf::new(&law.step_points(0.5));
        assert_eq!(kolmogorov_distance(&law, 0.5, &own).unwrap(), 0.0);
        let left = PointMass { at: -1e3 };
        assert!((kolmogorov_distance(&law, 0.5, &left).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_matches_dense_scan() {
        let law = build_joint_law(p(1.0, 0.6), 6).unwrap();
        let pts = law.step_points(0.5);
        let f = Normal { sd: 1.0 };
        let exact = kolmogorov_distance(&law, 0.5, &f).unwrap();
        let step = StepCdf::new(&pts);
        let mut scan: f64 = 0.0;
        let lo = pts[0].0 - 1.0;
        let hi = pts[pts.len() - 1].0 + 1.0;
        let m = 1_000_000;
        for i in 0..=m {
            let t = lo + (hi - lo) * i as f64 / m as f64;
            scan = scan.max((step.cdf(t) - f.cdf(t)).abs());
        }
        assert!(exact >= scan - 1e-12 && exact - scan < 1e-5, "{exact} {scan}");
    }

    #[test]
    fn round_trip_csv() {
        let law = build_joint_law(p(1.0, 0.6), 12).unwrap();
        let mut buf = Vec::new();
        law.write_csv(&mut buf).unwrap();
        let back = JointLaw::read_csv(&buf[..]).unwrap();
        assert_eq!(back.header(), law.header());
        for ((s, m, a), (s2, m2, b)) in law.atoms().zip(back.atoms()) {
            assert_eq!((s, m), (s2, m2));
            assert!((a - b).abs() <= 1e-15);
        }
        assert!(JointLaw::read_csv(&b"s,M\n"[..]).is_err());
    }

    #[test]
    fn hs_identity_small_error() {
        let r = hs_check(p(1.0, 0.6), 256, 0.5).unwrap();
        assert!(r.sup_error < 1e-3, "{}", r.sup_error);
        assert!(r.symmetry_error < 1e-10, "{}", r.symmetry_error);
    }
}
