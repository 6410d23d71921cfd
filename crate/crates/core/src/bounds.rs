//! The Gibbs-sampling exchangeable pair (W, W′) and the Stein bounds.
//!
//! W′ resamples one uniformly chosen spin from its exact conditional law. Given
//! the class (s, M), every conditional quantity of the increment D = W − W′ is an
//! average over the three spin groups, hence affine in M; collapsing to the
//! W-level only needs E[M | s] and E[M² | s].

use serde::{Deserialize, Serialize};

use crate::density::{Comparison, Drift};
use crate::distance::Normal;
use crate::error::Result;
use crate::exact_law::{kolmogorov_distance, moment, w_scale, JointLaw};
use crate::model::{f_single, ModelParams};
use crate::numeric::Neumaier;
use crate::stein::SteinConstants;

/// Conditional law (P(−1), P(0), P(+1)) of a resampled spin given S_n^i = t.
pub fn spin_conditional(p: &ModelParams, n: usize, t: i64) -> [f64; 3] {
    let bk = p.beta * p.k / n as f64;
    let tf = t as f64;
    let lm = -p.beta + bk - 2.0 * bk * tf;
    let lp = -p.beta + bk + 2.0 * bk * tf;
    let top = lm.max(lp).max(0.0);
    let (wm, w0, wp) = ((lm - top).exp(), (-top).exp(), (lp - top).exp());
    let z = wm + w0 + wp;
    [wm / z, w0 / z, wp / z]
}

/// Affine form (c0 + c1·M)/n of a per-site average, given the per-site values
/// for the +1, −1 and 0 groups.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Affine {
    pub c0: f64,
    pub c1: f64,
}

impl Affine {
    fn from_groups(n: usize, s: i64, vp: f64, vm: f64, v0: f64) -> Self {
        Affine { c0: s as f64 * 0.5 * (vp - vm) + n as f64 * v0, c1: 0.5 * (vp + vm) - v0 }
    }

    #[inline]
    pub fn at(&self, n: usize, m: f64) -> f64 {
        (self.c0 + self.c1 * m) / n as f64
    }

    /// E[(value)² | s] given E[M|s] and E[M²|s].
    #[inline]
    pub fn second(&self, n: usize, m1: f64, m2: f64) -> f64 {
        let nf = n as f64;
        (self.c0 * self.c0 + 2.0 * self.c0 * self.c1 * m1 + self.c1 * self.c1 * m2) / (nf * nf)
    }
}

/// Per-s conditional data of the increment, in units of u = n^{−(1−γ)}.
#[derive(Debug, Clone, Copy)]
pub struct SliceStep {
    pub s: i64,
    pub prob: f64,
    pub mean_m: f64,
    pub mean_m2: f64,
    /// E[ω_I − ω_I′ | s, M].
    pub mean: Affine,
    /// E[(ω_I − ω_I′)² | s, M].
    pub second: Affine,
    /// P(|ω_I − ω_I′| = 1 | s, M).
    pub jump1: Affine,
    /// P(|ω_I − ω_I′| = 2 | s, M).
    pub jump2: Affine,
    /// Average of E[ω_I′ | ·] − f(S^I/n).
    pub f_gap: Affine,
}

#[derive(Debug, Clone)]
pub struct StepTable {
    pub n: usize,
    pub gamma: f64,
    pub u: f64,
    pub rows: Vec<SliceStep>,
}

pub fn step_table(law: &JointLaw, gamma: f64) -> StepTable {
    let n = law.n;
    let p = law.params;
    let ni = n as i64;
    let cond: Vec<[f64; 3]> = (-ni - 1..=ni + 1).map(|t| spin_conditional(&p, n, t)).collect();
    let at = |t: i64| cond[(t + ni + 1) as usize];
    let mu = |c: [f64; 3]| c[2] - c[0];
    let nu = |c: [f64; 3]| c[2] + c[0];
    let fs = |t: i64| f_single(&p, t as f64 / n as f64);
    let rows = (-ni..=ni)
        .map(|s| {
            let (cp, cm, c0) = (at(s - 1), at(s + 1), at(s));
            let sl = law.slice(s);
            SliceStep {
                s,
                prob: sl.prob,
                mean_m: sl.mean_m,
                mean_m2: sl.mean_m2,
                mean: Affine::from_groups(n, s, 1.0 - mu(cp), -1.0 - mu(cm), -mu(c0)),
                second: Affine::from_groups(
                    n,
                    s,
                    1.0 - 2.0 * mu(cp) + nu(cp),
                    1.0 + 2.0 * mu(cm) + nu(cm),
                    nu(c0),
                ),
                jump1: Affine::from_groups(n, s, cp[1], cm[1], 1.0 - c0[1]),
                jump2: Affine::from_groups(n, s, cp[0], cm[2], 0.0),
                f_gap: Affine::from_groups(n, s, mu(cp) - fs(s - 1), mu(cm) - fs(s + 1), mu(c0) - fs(s)),
            }
        })
        .collect();
    StepTable { n, gamma, u: w_scale(n, gamma), rows }
}

/// Exact E[W − W′ | s, M] and E[(W − W′)² | s, M] for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassStep {
    pub s: i64,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean: f64,
    pub second: f64,
}

pub fn conditional_step_moments(law: &JointLaw, gamma: f64) -> Vec<ClassStep> {
    let t = step_table(law, gamma);
    let mut out = Vec::new();
    for r in &t.rows {
        for m in (r.s.unsigned_abs() as usize..=law.n).step_by(2) {
            let mf = m as f64;
            out.push(ClassStep {
                s: r.s,
                m,
                mean: t.u * r.mean.at(law.n, mf),
                second: t.u * t.u * r.second.at(law.n, mf),
            });
        }
    }
    out
}

impl StepTable {
    pub fn w(&self, s: i64) -> f64 {
        s as f64 * self.u
    }

    /// E[W − W′ | W = w_s].
    pub fn mean_w(&self, r: &SliceStep) -> f64 {
        self.u * r.mean.at(self.n, r.mean_m)
    }

    /// E[(W − W′)² | W = w_s].
    pub fn second_w(&self, r: &SliceStep) -> f64 {
        self.u * self.u * r.second.at(self.n, r.mean_m)
    }

    fn expect<F: Fn(&SliceStep) -> f64>(&self, f: F) -> f64 {
        let mut acc = Neumaier::new();
        for r in &self.rows {
            if r.prob > 0.0 {
                acc.add(r.prob * f(r));
            }
        }
        acc.value()
    }

    /// Var(E[(W − W′)² | W]).
    pub fn variance_term(&self) -> f64 {
        let mean = self.expect(|r| self.second_w(r));
        self.expect(|r| (self.second_w(r) - mean).powi(2)).max(0.0)
    }

    /// Var(E[(W − W′)² | F]) with F the full configuration.
    pub fn variance_term_f(&self) -> f64 {
        let u4 = self.u.powi(4);
        let mean = self.expect(|r| self.second_w(r));
        (self.expect(|r| u4 * r.second.second(self.n, r.mean_m, r.mean_m2)) - mean * mean).max(0.0)
    }

    /// E[(W − W′)² 1{|W − W′| ≥ a}].
    pub fn tail(&self, a: f64) -> f64 {
        let u = self.u;
        let w1 = if u >= a { u * u } else { 0.0 };
        let w2 = if 2.0 * u >= a { 4.0 * u * u } else { 0.0 };
        self.expect(|r| w1 * r.jump1.at(self.n, r.mean_m) + w2 * r.jump2.at(self.n, r.mean_m))
    }
}

pub fn variance_term(law: &JointLaw, gamma: f64) -> f64 {
    step_table(law, gamma).variance_term()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionDecomposition {
    pub gamma: f64,
    pub lambda: f64,
    pub psi_coeffs: [f64; 3],
    /// max |R(W)| over the support, R(W) = λψ(W) + E[W − W′ | W].
    pub remainder_max: f64,
    /// √E[R(W)²].
    pub remainder_l2: f64,
    /// √E[R_F²] for the configuration-level remainder.
    pub remainder_l2_f: f64,
    /// Largest deviation of the reconstruction W + λψ(W) − R from E[W′ | W].
    pub identity_residual: f64,
    /// max over classes of |u·avg(E[ω′|·] − f(S^i/n))|.
    pub f_gap_max: f64,
    /// f_gap_max·n^{2−γ}.
    pub f_gap_scaled: f64,
}

fn drift_poly(a: &[f64; 3], w: f64) -> f64 {
    let w2 = w * w;
    w * (a[0] + w2 * (a[1] + w2 * a[2]))
}

pub fn regression_decompose(law: &JointLaw, gamma: f64, drift: &Drift) -> RegressionDecomposition {
    let t = step_table(law, gamma);
    regression_from_table(&t, drift)
}

pub fn regression_from_table(t: &StepTable, drift: &Drift) -> RegressionDecomposition {
    let a = drift.a();
    let n = t.n;
    let mut rmax: f64 = 0.0;
    let mut resid: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let (mut r2, mut r2f) = (Neumaier::new(), Neumaier::new());
    for r in &t.rows {
        let w = t.w(r.s);
        let poly = drift_poly(&a, w);
        let rem = t.mean_w(r) - poly;
        let lam_psi = -poly;
        let cond_next = w - t.mean_w(r);
        resid = resid.max((w + lam_psi - rem - cond_next).abs());
        let lo = r.s.unsigned_abs() as f64;
        let hi = n as f64;
        gap = gap.max((t.u * r.f_gap.at(n, lo)).abs()).max((t.u * r.f_gap.at(n, hi)).abs());
        if r.prob > 0.0 {
            rmax = rmax.max(rem.abs());
            r2.add(r.prob * rem * rem);
            // R_F = u(c0 + c1 M)/n − poly, squared and averaged over M | s
            let shifted = Affine { c0: r.mean.c0 - poly * n as f64 / t.u, c1: r.mean.c1 };
            r2f.add(r.prob * t.u * t.u * shifted.second(n, r.mean_m, r.mean_m2));
        }
    }
    RegressionDecomposition {
        gamma: t.gamma,
        lambda: drift.lambda,
        psi_coeffs: drift.q,
        remainder_max: rmax,
        remainder_l2: r2.value().max(0.0).sqrt(),
        remainder_l2_f: r2f.value().max(0.0).sqrt(),
        identity_residual: resid,
        f_gap_max: gap,
        f_gap_scaled: gap * (n as f64).powf(2.0 - t.gamma),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// The general-density bound with constants d₁–d₄.
    General,
    /// The normal-approximation corollary with σ² = 1/q₁.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundTerms {
    pub variance_term: f64,
    pub remainder_term: f64,
    pub cube_term: f64,
    pub psi_term: f64,
    pub tail_term: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.variance_term + self.remainder_term + self.cube_term + self.psi_term + self.tail_term
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub terms: BoundTerms,
    pub total: f64,
    pub exact_dk: f64,
    #[serde(rename = "A_halfwidth")]
    pub a_halfwidth: f64,
    /// Half-width actually used; the normal corollary needs |W − W′| ≤ A.
    pub a_used: f64,
    pub lambda: f64,
    pub lambda_eff: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub remainder_l2: f64,
    pub constants: Option<SteinConstants>,
}

/// Largest possible |W − W′|: a spin flip from ±1 to ∓1.
pub fn increment_bound(n: usize, gamma: f64) -> f64 {
    2.0 * w_scale(n, gamma)
}

/// Evaluates the chosen Stein bound with exact law quantities.
///
/// The general bound is written for the comparison density's own ψ_p = p′/p,
/// whose regression scale is λ′ = λ·c_last; the remainder is unchanged.
pub fn evaluate_bound(
    law: &JointLaw,
    gamma: f64,
    drift: &Drift,
    cmp: &Comparison,
    consts: Option<&SteinConstants>,
    a: f64,
    kind: BoundKind,
) -> Result<BoundReport> {
    let t = step_table(law, gamma);
    evaluate_bound_from_table(law, &t, drift, cmp, consts, a, kind)
}

pub fn evaluate_bound_from_table(
    law: &JointLaw,
    t: &StepTable,
    drift: &Drift,
    cmp: &Comparison,
    consts: Option<&SteinConstants>,
    a: f64,
    kind: BoundKind,
) -> Result<BoundReport> {
    let gamma = t.gamma;
    let m2 = moment(law, gamma, 2)?;
    let var = t.variance_term();
    let reg = regression_from_table(t, drift);
    let rl2 = reg.remainder_l2;
    let (terms, a_used, exact) = match kind {
        BoundKind::General => {
            let c = consts.copied().unwrap_or_else(|| crate::stein::estimate_stein_constants(&cmp.density));
            let lam = cmp.lambda_eff;
            let psi_abs = t.expect(|r| cmp.density.psi(t.w(r.s)).abs());
            let terms = BoundTerms {
                variance_term: c.d2 / (2.0 * lam) * var.sqrt(),
                remainder_term: (c.d1 + c.d2 * m2.sqrt() + 1.5 * a) * rl2 / lam,
                cube_term: c.d4 * a.powi(3) / (4.0 * lam),
                psi_term: 1.5 * a * psi_abs,
                tail_term: c.d3 / (2.0 * lam) * t.tail(a),
            };
            (terms, a, kolmogorov_distance(law, gamma, &cmp.density)?)
        }
        BoundKind::Normal => {
            let a_used = a.max(increment_bound(law.n, gamma));
            let lam = drift.lambda;
            let sigma2 = 1.0 / drift.q[0];
            let sw = m2.sqrt();
            let root2pi = (2.0 * std::f64::consts::PI).sqrt();
            let terms = BoundTerms {
                variance_term: sigma2 / (2.0 * lam) * var.sqrt(),
                remainder_term: sigma2 * (sw * (root2pi + 4.0) / 4.0 + 1.5 * a_used) * rl2 / lam,
                cube_term: sigma2 * a_used.powi(3) / lam * (sw * root2pi / 16.0 + sw / 4.0),
                psi_term: sigma2 * 1.5 * a_used * sw,
                tail_term: 0.0,
            };
            (terms, a_used, kolmogorov_distance(law, gamma, &Normal { sd: sw })?)
        }
    };
    Ok(BoundReport {
        kind,
        total: terms.total(),
        terms,
        exact_dk: exact,
        a_halfwidth: a,
        a_used,
        lambda: drift.lambda,
        lambda_eff: cmp.lambda_eff,
        second_moment: m2,
        variance: var,
        remainder_l2: rl2,
        constants: if kind == BoundKind::General { consts.copied() } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_law::build_joint_law;

    #[test]
    fn conditional_law_sums_to_one_and_sandwich() {
        let p = ModelParams::new(1.0, 0.6).unwrap();
        let n = 40;
        for t in -(n as i64 - 1)..n as i64 {
            let c = spin_conditional(&p, n, t);
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let f = f_single(&p, t as f64 / n as f64);
            let e = (2.0 * p.beta * p.k / n as f64).exp();
            let mean = c[2] - c[0];
            let (lo, hi) = if f >= 0.0 { (f / e, f * e) } else { (f * e, f / e) };
            assert!(mean >= lo - 1e-15 && mean <= hi + 1e-15);
        }
    }

    #[test]
    fn zero_class_has_zero_drift() {
        let law = build_joint_law(ModelParams::new(1.0, 0.6).unwrap(), 10).unwrap();
        let steps = conditional_step_moments(&law, 0.5);
        let zero = steps.iter().find(|c| c.s == 0 && c.m == 0).unwrap();
        assert!(zero.mean.abs() < 1e-15);
    }

    #[test]
    fn exchangeability_identity() {
        // E[(W − W′)²] = 2 E[W · E[W − W′ | W]] for an exchangeable pair
        let law = build_joint_law(ModelParams::new(1.0, 0.6).unwrap(), 60).unwrap();
        let t = step_table(&law, 0.5);
        let lhs = t.expect(|r| t.second_w(r));
        let rhs = 2.0 * t.expect(|r| t.w(r.s) * t.mean_w(r));
        assert!((lhs - rhs).abs() < 1e-13 * lhs);
    }

    #[test]
    fn tail_vanishes_above_increment_bound() {
        let law = build_joint_law(ModelParams::new(1.0, 0.6).unwrap(), 30).unwrap();
        let t = step_table(&law, 0.5);
        assert_eq!(t.tail(increment_bound(30, 0.5) * (1.0 + 1e-12)), 0.0);
        assert!(t.tail(t.u) > 0.0);
        let total = t.expect(|r| t.second_w(r));
        assert!((t.tail(1e-9) - total).abs() < 1e-13 * total);
    }
}
