//! Closed-form analytics of the mean-field BEG model.

use serde::{Deserialize, Serialize};

use crate::error::{BegError, Result};
use crate::numeric::{bisect, ln_cosh};

/// Critical inverse temperature, ln 4.
pub const BETA_C: f64 = 1.386_294_361_119_890_6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl ModelParams {
    pub fn new(beta: f64, k: f64) -> Result<Self> {
        if !beta.is_finite() || !k.is_finite() {
            return Err(BegError::NonFinite("beta/K"));
        }
        if beta <= 0.0 || k <= 0.0 {
            return Err(BegError::InvalidParams(format!(
                "beta and K must be positive, got beta={beta}, K={k}"
            )));
        }
        Ok(Self { beta, k })
    }

    pub fn tricritical() -> Self {
        Self { beta: BETA_C, k: critical_k(BETA_C) }
    }

    /// 2βK, the coupling that appears in every kernel.
    #[inline]
    pub fn coupling(&self) -> f64 {
        2.0 * self.beta * self.k
    }

    /// m = 2e^{-β}/(1+2e^{-β}): the ρ_β-probability of a nonzero spin.
    #[inline]
    pub fn nonzero_weight(&self) -> f64 {
        nonzero_weight(self.beta)
    }
}

#[inline]
fn nonzero_weight(beta: f64) -> f64 {
    let q = 2.0 * (-beta).exp();
    q / (1.0 + q)
}

/// c_β(t) = log((1 + e^{-β}(e^t + e^{-t})) / (1 + 2e^{-β})).
pub fn cumulant_gf(beta: f64, t: f64) -> Result<f64> {
    if !beta.is_finite() || !t.is_finite() {
        return Err(BegError::NonFinite("cumulant_gf"));
    }
    if beta <= 0.0 {
        return Err(BegError::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    Ok(cgf(beta, t))
}

#[inline]
pub(crate) fn cgf(beta: f64, t: f64) -> f64 {
    let a = t.abs();
    if a <= 20.0 {
        // 1 + m(cosh t - 1), with cosh t - 1 = 2 sinh²(t/2)
        let sh = (0.5 * a).sinh();
        (2.0 * nonzero_weight(beta) * sh * sh).ln_1p()
    } else {
        let e = (-beta).exp();
        a + ((-a).exp() + e * (1.0 + (-2.0 * a).exp())).ln() - (2.0 * e).ln_1p()
    }
}

/// c′_β(t), the mean spin under the tilted single-site law.
#[inline]
pub(crate) fn cgf_prime(beta: f64, t: f64) -> f64 {
    let q = 2.0 * (-beta).exp();
    if t.abs() < 20.0 {
        q * t.sinh() / (1.0 + q * t.cosh())
    } else {
        let sech = 1.0 / t.cosh();
        q * t.tanh() / (sech + q)
    }
}

/// K_c(β) = (e^β + 2)/(4β).
pub fn critical_k(beta: f64) -> f64 {
    (beta.exp() + 2.0) / (4.0 * beta)
}

/// G_{β,K}(x) = βKx² − c_β(2βKx).
pub fn g_eval(p: &ModelParams, x: f64) -> f64 {
    p.beta * p.k * x * x - cgf(p.beta, p.coupling() * x)
}

pub fn g_prime(p: &ModelParams, x: f64) -> f64 {
    p.coupling() * (x - f_single(p, x))
}

/// Taylor coefficients (g2, g4, g6) of G at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GDerivs {
    pub g2: f64,
    pub g4: f64,
    pub g6: f64,
}

pub fn g_derivs_at_zero(p: &ModelParams) -> GDerivs {
    let a = p.coupling();
    let eb = p.beta.exp();
    let m = p.nonzero_weight();
    let a2 = a * a;
    GDerivs {
        g2: a * (eb + 2.0 - 2.0 * a) / (eb + 2.0),
        g4: 2.0 * a2 * a2 * (4.0 - eb) / ((eb + 2.0) * (eb + 2.0)),
        // sixth cumulant of a symmetric spin with P(ω ≠ 0) = m
        g6: -a2 * a2 * a2 * (m - 15.0 * m * m + 30.0 * m * m * m),
    }
}

/// f_{β,K}(x) = 2e^{-β} sinh(2βKx) / (1 + 2e^{-β} cosh(2βKx)).
pub fn f_single(p: &ModelParams, x: f64) -> f64 {
    cgf_prime(p.beta, p.coupling() * x)
}

/// The pair-conditional kernels (f1, f2).
pub fn pair_conditional_funcs(p: &ModelParams, x: f64) -> (f64, f64) {
    let y = p.coupling() * x;
    let e1 = (-p.beta).exp();
    if y.abs() < 300.0 {
        let c = y.cosh();
        let c2 = 1.0 + (2.0 * y).cosh();
        let num = 2.0 * e1 * e1 * c2;
        let f1 = num / (1.0 + 4.0 * e1 * c + num);
        let f2 = 2.0 * e1 * c / (1.0 + 2.0 * e1 * c);
        (f1, f2)
    } else {
        let lq = std::f64::consts::LN_2 - p.beta + ln_cosh(y);
        let f2 = 1.0 / (1.0 + (-lq).exp());
        (f2 * f2, f2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionTag {
    A,
    B,
    C,
    FirstOrderCurve,
    TwoPhase,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub tag: RegionTag,
    pub boundary_tolerance: f64,
}

pub const DEFAULT_REGION_TOL: f64 = 1e-9;

/// Classifies (β, K). The tolerance is relative to β_c and K_c(β).
pub fn classify_region(p: &ModelParams, tol: f64) -> Result<Region> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(BegError::InvalidParams(format!("tolerance must lie in (0, 1e-3], got {tol}")));
    }
    let kc = critical_k(p.beta);
    let near_beta_c = (p.beta - BETA_C).abs() <= tol * BETA_C;
    let near_curve = (p.k - kc).abs() <= tol * kc;
    let tag = if near_beta_c && (p.k - critical_k(BETA_C)).abs() <= tol * critical_k(BETA_C) {
        RegionTag::C
    } else if p.beta < BETA_C && near_curve {
        RegionTag::B
    } else if p.beta <= BETA_C || near_beta_c {
        if p.k < kc {
            RegionTag::A
        } else {
            RegionTag::TwoPhase
        }
    } else {
        let mins = minimize_g(p);
        let has_zero = mins.iter().any(|&x| x == 0.0);
        let has_nonzero = mins.iter().any(|&x| x != 0.0);
        match (has_zero, has_nonzero) {
            (true, true) => RegionTag::FirstOrderCurve,
            (false, true) => RegionTag::TwoPhase,
            _ => RegionTag::Other,
        }
    };
    Ok(Region { tag, boundary_tolerance: tol })
}

const MIN_GRID_STEP: f64 = 1e-3;
const MIN_GRID_MAX: f64 = 1.5;

/// Global minimizers of G on [−1.5, 1.5], symmetric under negation and sorted.
pub fn minimize_g(p: &ModelParams) -> Vec<f64> {
    let steps = (MIN_GRID_MAX / MIN_GRID_STEP).round() as usize;
    let xs: Vec<f64> = (0..=steps).map(|i| i as f64 * MIN_GRID_STEP).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g_eval(p, x)).collect();

    let mut candidates = Vec::new();
    // G is even, so the origin is a local minimum whenever its right neighbour is not lower
    if gs[1] >= gs[0] {
        candidates.push(0.0);
    }
    for i in 1..steps {
        if gs[i] < gs[i - 1] && gs[i] <= gs[i + 1] {
            let root = bisect(|x| g_prime(p, x), xs[i - 1], xs[i + 1], 1e-15);
            candidates.push(root);
        }
    }
    if gs[steps] < gs[steps - 1] {
        candidates.push(xs[steps]);
    }

    let values: Vec<f64> = candidates.iter().map(|&x| g_eval(p, x)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = 1e-12 * (1.0 + best.abs());
    let mut out = Vec::new();
    for (&x, &v) in candidates.iter().zip(&values) {
        if v - best <= scale {
            out.push(x);
            if x != 0.0 {
                out.push(-x);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendreRate {
    pub value: f64,
    /// The maximizing t.
    pub t: f64,
    /// True when the maximizer hit the |t| ≤ 50 search cap.
    pub saturated: bool,
}

pub const LEGENDRE_T_CAP: f64 = 50.0;

/// J_β(z) = sup_t {tz − c_β(t)}.
pub fn legendre_rate(beta: f64, z: f64) -> Result<LegendreRate> {
    if !beta.is_finite() || !z.is_finite() {
        return Err(BegError::NonFinite("legendre_rate"));
    }
    if beta <= 0.0 || z.abs() > 1.0 {
        return Err(BegError::InvalidParams(format!(
            "need beta > 0 and |z| <= 1, got beta={beta}, z={z}"
        )));
    }
    let a = z.abs();
    let (t, saturated) = if a == 0.0 {
        (0.0, false)
    } else if cgf_prime(beta, LEGENDRE_T_CAP) <= a {
        (LEGENDRE_T_CAP, true)
    } else {
        (bisect(|t| cgf_prime(beta, t) - a, 0.0, LEGENDRE_T_CAP, 1e-14), false)
    };
    Ok(LegendreRate { value: (t * a - cgf(beta, t)).max(0.0), t: t * z.signum(), saturated })
}

/// Parameter sequences (β_n, K_n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Schedule {
    /// Constant parameters.
    Fixed {
        beta: f64,
        #[serde(rename = "K")]
        k: f64,
    },
    /// β_n = β fixed, K_n = K_c(β) − k n^{−Δ₂}.
    FixedBeta { beta_fixed: f64, k: f64, delta2: f64 },
    /// β_n = log(e^{β_c} − b n^{−Δ₁}), K_n = K_c(β_n) − k n^{−Δ₂}.
    MovingBeta { b: f64, k: f64, delta1: f64, delta2: f64 },
    /// β_n = β + c_β n^{−e}, K_n = K + c_K n^{−e}: a generic sequence converging to (β, K).
    Drift {
        beta: f64,
        #[serde(rename = "K")]
        k: f64,
        c_beta: f64,
        #[serde(rename = "c_K")]
        c_k: f64,
        exponent: f64,
    },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BegError::InvalidParams(msg));
        match *self {
            Schedule::Fixed { beta, k } => ModelParams::new(beta, k).map(|_| ()),
            Schedule::FixedBeta { beta_fixed, k, delta2 } => {
                if !(beta_fixed > 0.0) || k == 0.0 || !(delta2 > 0.0) {
                    return bad(format!(
                        "fixed-beta schedule needs beta>0, k!=0, delta2>0 (beta={beta_fixed}, k={k}, delta2={delta2})"
                    ));
                }
                Ok(())
            }
            Schedule::MovingBeta { b, k, delta1, delta2 } => {
                if b == 0.0 || k == 0.0 || !(delta1 > 0.0) || !(delta2 > 0.0) {
                    return bad(format!(
                        "moving-beta schedule needs b!=0, k!=0, delta1>0, delta2>0 (b={b}, k={k}, delta1={delta1}, delta2={delta2})"
                    ));
                }
                Ok(())
            }
            Schedule::Drift { beta, k, exponent, .. } => {
                ModelParams::new(beta, k)?;
                if !(exponent > 0.0) {
                    return bad(format!("drift exponent must be positive, got {exponent}"));
                }
                Ok(())
            }
        }
    }

    /// Limit point of the sequence.
    pub fn limit(&self) -> ModelParams {
        match *self {
            Schedule::Fixed { beta, k } | Schedule::Drift { beta, k, .. } => ModelParams { beta, k },
            Schedule::FixedBeta { beta_fixed, .. } => ModelParams { beta: beta_fixed, k: critical_k(beta_fixed) },
            Schedule::MovingBeta { .. } => ModelParams::tricritical(),
        }
    }
}

pub fn schedule_eval(s: &Schedule, n: usize) -> Result<ModelParams> {
    if n == 0 {
        return Err(BegError::InvalidParams("n must be at least 1".into()));
    }
    s.validate()?;
    let nf = n as f64;
    let (beta, k) = match *s {
        Schedule::Fixed { beta, k } => (beta, k),
        Schedule::FixedBeta { beta_fixed, k, delta2 } => {
            (beta_fixed, critical_k(beta_fixed) - k * nf.powf(-delta2))
        }
        Schedule::MovingBeta { b, k, delta1, delta2 } => {
            let arg = 4.0 - b * nf.powf(-delta1);
            if arg <= 1.0 {
                return Err(BegError::ScheduleUnderflow { n, beta: arg.max(0.0).ln(), k: f64::NAN });
            }
            let beta = arg.ln();
            (beta, critical_k(beta) - k * nf.powf(-delta2))
        }
        Schedule::Drift { beta, k, c_beta, c_k, exponent } => {
            let d = nf.powf(-exponent);
            (beta + c_beta * d, k + c_k * d)
        }
    };
    if !(beta > 0.0) || !(k > 0.0) {
        return Err(BegError::ScheduleUnderflow { n, beta, k });
    }
    Ok(ModelParams { beta, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd2(f: impl Fn(f64) -> f64, h: f64) -> f64 {
        (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
    }

    #[test]
    fn cgf_basics() {
        assert_eq!(cumulant_gf(1.0, 0.0).unwrap(), 0.0);
        for s in [0.3, 1.7] {
            assert_eq!(cgf(1.0, s), cgf(1.0, -s));
        }
        let c2 = fd2(|t| cgf(BETA_C, t), 1e-4);
        assert!((c2 - 1.0 / 3.0).abs() < 1e-7);
        assert!(cumulant_gf(1.0, f64::NAN).is_err());
        assert!(cumulant_gf(-1.0, 0.0).is_err());
    }

    #[test]
    fn cgf_branches_agree_at_switch() {
        for beta in [0.5f64, 1.0, 3.0] {
            let e = (-beta).exp();
            let direct = |t: f64| ((1.0 + e * (t.exp() + (-t).exp())) / (1.0 + 2.0 * e)).ln();
            for t in [19.99, 20.0, 20.01, 35.0] {
                assert!((cgf(beta, t) - direct(t)).abs() < 1e-12 * direct(t));
            }
        }
        assert!(cgf(1.0, 700.0).is_finite());
    }

    #[test]
    fn critical_k_values() {
        assert!((critical_k(BETA_C) - 1.5 / BETA_C).abs() < 1e-15);
        assert!((critical_k(BETA_C) - 1.082_021_2).abs() < 1e-7);
        assert!((critical_k(1.0) - 1.179_570_4).abs() < 1e-7);
        for beta in [0.5, 1.0, BETA_C, 2.0] {
            let c2 = fd2(|t| cgf(beta, t), 1e-4);
            assert!((critical_k(beta) - 1.0 / (2.0 * beta * c2)).abs() < 1e-6);
        }
    }

    #[test]
    fn g_closed_forms() {
        for beta in [0.8, 1.0, BETA_C] {
            let p = ModelParams::new(beta, critical_k(beta)).unwrap();
            assert!(g_derivs_at_zero(&p).g2.abs() < 1e-12);
        }
        for k in [0.3, 1.0, 2.5] {
            let p = ModelParams::new(BETA_C, k).unwrap();
            assert!(g_derivs_at_zero(&p).g4.abs() < 1e-12);
        }
        let d = g_derivs_at_zero(&ModelParams::tricritical());
        assert!((d.g6 - 162.0).abs() < 1e-9);
        assert!((d.g6 / 720.0 - 9.0 / 40.0).abs() < 1e-12);
    }

    #[test]
    fn g2_g4_match_finite_differences() {
        for (beta, k) in [(1.0, 0.6), (0.5, 0.3), (2.0, 1.2), (1.0, 1.5)] {
            let p = ModelParams::new(beta, k).unwrap();
            let d = g_derivs_at_zero(&p);
            let g = |x: f64| g_eval(&p, x);
            let h = 1e-4;
            let g2 = fd2(g, h);
            let g4 = (g(2.0 * h) - 4.0 * g(h) + 6.0 * g(0.0) - 4.0 * g(-h) + g(-2.0 * h)) / h.powi(4);
            assert!((g2 - d.g2).abs() <= 1e-6 * d.g2.abs().max(1.0), "{g2} {}", d.g2);
            // fourth differences lose about eight digits to cancellation
            let h = 2e-2;
            let g4b = (g(2.0 * h) - 4.0 * g(h) + 6.0 * g(0.0) - 4.0 * g(-h) + g(-2.0 * h)) / h.powi(4);
            assert!((g4b - d.g4).abs() <= 1e-2 * d.g4.abs().max(1.0), "{g4} {g4b} {}", d.g4);
        }
    }

    #[test]
    fn f_single_identity() {
        for (beta, k) in [(1.0, 0.6), (0.5, 0.3), (BETA_C, critical_k(BETA_C)), (2.0, 1.2)] {
            let p = ModelParams::new(beta, k).unwrap();
            assert_eq!(f_single(&p, 0.0), 0.0);
            for i in 0..=200 {
                let x = -1.0 + i as f64 * 0.01;
                let rhs = x - g_prime(&p, x) / p.coupling();
                assert!((f_single(&p, x) - rhs).abs() < 1e-12);
                assert_eq!(f_single(&p, -x), -f_single(&p, x));
            }
        }
    }

    #[test]
    fn pair_kernels() {
        let p = ModelParams::new(1.0, 0.6).unwrap();
        let (_, f2) = pair_conditional_funcs(&p, 0.0);
        let e = (-1.0f64).exp();
        assert!((f2 - 2.0 * e / (1.0 + 2.0 * e)).abs() < 1e-15);
        assert!((f2 - 0.42388).abs() < 1e-5);
        for i in 0..=200 {
            let x = -1.0 + i as f64 * 0.01;
            let (f1, f2) = pair_conditional_funcs(&p, x);
            assert!((f2 * f2 - f1).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&f1) && (0.0..=1.0).contains(&f2));
        }
        let (f1, f2) = pair_conditional_funcs(&p, 400.0);
        assert!((f2 * f2 - f1).abs() < 1e-12);
    }

    #[test]
    fn schedules() {
        let s = Schedule::FixedBeta { beta_fixed: 1.0, k: 1.0, delta2: 0.5 };
        let p = schedule_eval(&s, 100).unwrap();
        assert!((p.k - (critical_k(1.0) - 0.1)).abs() < 1e-14);
        assert!((p.k - 1.079_570_4).abs() < 1e-7);
        let mv = Schedule::MovingBeta { b: 1.0, k: 1.0, delta1: 1.0 / 3.0, delta2: 2.0 / 3.0 };
        let mut prev = 0.0;
        for n in [8usize, 64, 512, 4096, 1 << 20] {
            let b = schedule_eval(&mv, n).unwrap().beta;
            assert!(b > prev && b < BETA_C);
            prev = b;
        }
        assert!((BETA_C - prev) < 1e-2);
        let under = Schedule::MovingBeta { b: 4.0, k: 1.0, delta1: 0.5, delta2: 0.5 };
        assert!(matches!(schedule_eval(&under, 1), Err(BegError::ScheduleUnderflow { .. })));
        let far = schedule_eval(&s, 1 << 30).unwrap();
        assert!((far.k - critical_k(1.0)).abs() < 1e-4);
    }

    #[test]
    fn regions() {
        let tol = DEFAULT_REGION_TOL;
        let tag = |b: f64, k: f64| classify_region(&ModelParams::new(b, k).unwrap(), tol).unwrap().tag;
        assert_eq!(tag(1.0, 0.5), RegionTag::A);
        assert_eq!(tag(1.0, critical_k(1.0)), RegionTag::B);
        assert_eq!(tag(BETA_C, 1.5 / 4f64.ln()), RegionTag::C);
        assert_eq!(tag(1.0, 1.5), RegionTag::TwoPhase);
        assert_eq!(tag(3.0, 0.5), RegionTag::Other);
        assert_eq!(tag(3.0, 5.0), RegionTag::TwoPhase);
        assert!(classify_region(&ModelParams::new(1.0, 0.5).unwrap(), 0.0).is_err());
    }

    #[test]
    fn minimizers() {
        assert_eq!(minimize_g(&ModelParams::new(1.0, 0.6).unwrap()), vec![0.0]);
        assert_eq!(minimize_g(&ModelParams::new(1.0, critical_k(1.0)).unwrap()), vec![0.0]);
        assert_eq!(minimize_g(&ModelParams::tricritical()), vec![0.0]);
        let p = ModelParams::new(1.0, 1.5).unwrap();
        let m = minimize_g(&p);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0], -m[1]);
        assert!(m[1] > 0.0 && g_prime(&p, m[1]).abs() < 1e-12);
        assert!(g_eval(&p, m[1]) < 0.0);
    }

    #[test]
    fn legendre() {
        assert_eq!(legendre_rate(1.0, 0.0).unwrap().value, 0.0);
        let a = legendre_rate(1.0, 0.4).unwrap();
        let b = legendre_rate(1.0, -0.4).unwrap();
        assert!((a.value - b.value).abs() < 1e-15 && a.value > 0.0);
        assert!((cgf_prime(1.0, a.t) - 0.4).abs() < 1e-12);
        let edge = legendre_rate(1.0, 1.0).unwrap();
        assert!(edge.saturated && edge.value.is_finite());
        let grid: Vec<f64> = (0..=98).map(|i| -0.98 + i as f64 * 0.02).collect();
        let vals: Vec<f64> = grid.iter().map(|&z| legendre_rate(1.0, z).unwrap().value).collect();
        for w in vals.windows(3) {
            assert!(w[0] >= 0.0 && w[1] <= 0.5 * (w[0] + w[2]) + 1e-12);
        }
        assert!(legendre_rate(1.0, 1.5).is_err());
    }
}
