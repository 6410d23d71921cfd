//! Even polynomial densities p(x) ∝ exp(−(b₁x² + b₂x⁴ + b₃x⁶)).

use serde::{Deserialize, Serialize};

use crate::distance::Cdf;
use crate::error::{BegError, Result};
use crate::exact_law::MomentSet;
use crate::numeric::{adaptive_simpson, bisect, Neumaier};

/// Exponent at which the truncated tail is dropped (below f64 underflow).
const TRUNC_EXPONENT: f64 = 745.0;
const PANELS: usize = 512;
pub const QUADRATURE_TOL: f64 = 1e-12;
/// Below this lower-tail mass the CDF switches to the Mills-ratio form.
const MILLS_SWITCH: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct PolyDensity {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub log_norm: f64,
    pub quadrature_tol: f64,
    v_min: f64,
    trunc: f64,
    edges: Vec<f64>,
    /// Unnormalized mass of exp(−(V − V_min)) from −T up to each edge.
    cum: Vec<f64>,
    half_mass: f64,
}

/// Serializable form of a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub log_norm: f64,
    pub quadrature_tol: f64,
}

fn poly(b1: f64, b2: f64, b3: f64, x: f64) -> f64 {
    let y = x * x;
    y * (b1 + y * (b2 + y * b3))
}

/// Minimum of b₁y + b₂y² + b₃y³ over y ≥ 0.
fn v_minimum(b1: f64, b2: f64, b3: f64) -> f64 {
    let g = |y: f64| y * (b1 + y * (b2 + y * b3));
    let mut roots = Vec::new();
    if b3 != 0.0 {
        let disc = 4.0 * b2 * b2 - 12.0 * b3 * b1;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            roots.push((-2.0 * b2 + sq) / (6.0 * b3));
            roots.push((-2.0 * b2 - sq) / (6.0 * b3));
        }
    } else if b2 != 0.0 {
        roots.push(-b1 / (2.0 * b2));
    }
    roots.into_iter().filter(|&y| y > 0.0).map(g).fold(0.0, f64::min)
}

pub fn normalize_density(b1: f64, b2: f64, b3: f64) -> Result<PolyDensity> {
    if !(b1.is_finite() && b2.is_finite() && b3.is_finite()) {
        return Err(BegError::NonFinite("density coefficients"));
    }
    let leading = [b3, b2, b1].into_iter().find(|&b| b != 0.0);
    if !matches!(leading, Some(b) if b > 0.0) {
        return Err(BegError::NonIntegrable { b1, b2, b3 });
    }
    let v_min = v_minimum(b1, b2, b3);
    let shifted = |x: f64| poly(b1, b2, b3, x) - v_min;

    let mut hi = 1.0;
    while shifted(hi) <= TRUNC_EXPONENT {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while lo > 1e-300 && shifted(lo) > TRUNC_EXPONENT {
        lo /= 2.0;
    }
    // beyond the outermost well V is increasing, so the crossing is unique there
    let trunc = bisect(|x| shifted(x) - TRUNC_EXPONENT, lo, hi, 1e-14 * hi);

    let f = |x: f64| (-shifted(x)).exp();
    let coarse = {
        let m = 4096;
        let h = trunc / m as f64;
        let mut acc = Neumaier::new();
        for i in 0..=m {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc.add(w * f(-trunc + i as f64 * h));
        }
        acc.value() * h / 3.0
    };
    let panel_tol = 0.1 * QUADRATURE_TOL * coarse / PANELS as f64;
    let edges: Vec<f64> = (0..=PANELS).map(|i| -trunc + trunc * i as f64 / PANELS as f64).collect();
    let mut cum = Vec::with_capacity(PANELS + 1);
    let mut acc = Neumaier::new();
    cum.push(0.0);
    for w in edges.windows(2) {
        acc.add(adaptive_simpson(&f, w[0], w[1], panel_tol));
        cum.push(acc.value());
    }
    let half_mass = acc.value();
    Ok(PolyDensity {
        b1,
        b2,
        b3,
        log_norm: (2.0 * half_mass).ln() - v_min,
        quadrature_tol: QUADRATURE_TOL,
        v_min,
        trunc,
        edges,
        cum,
        half_mass,
    })
}

impl PolyDensity {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(BegError::InvalidParams(format!("variance must be positive, got {variance}")));
        }
        normalize_density(0.5 / variance, 0.0, 0.0)
    }

    pub fn record(&self) -> DensityRecord {
        DensityRecord {
            b1: self.b1,
            b2: self.b2,
            b3: self.b3,
            log_norm: self.log_norm,
            quadrature_tol: self.quadrature_tol,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        self.b2 == 0.0 && self.b3 == 0.0
    }

    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        poly(self.b1, self.b2, self.b3, x)
    }

    #[inline]
    pub fn ln_pdf(&self, x: f64) -> f64 {
        -self.potential(x) - self.log_norm
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// ψ = p′/p.
    #[inline]
    pub fn psi(&self, x: f64) -> f64 {
        let y = x * x;
        -x * (2.0 * self.b1 + y * (4.0 * self.b2 + 6.0 * self.b3 * y))
    }

    #[inline]
    pub fn psi_prime(&self, x: f64) -> f64 {
        let y = x * x;
        -(2.0 * self.b1 + y * (12.0 * self.b2 + 30.0 * self.b3 * y))
    }

    /// Truncation half-width T: beyond it the density is below e^{−745} of its peak.
    pub fn truncation(&self) -> f64 {
        self.trunc
    }

    fn shifted(&self, x: f64) -> f64 {
        (-(self.potential(x) - self.v_min)).exp()
    }

    /// Lower-tail mass for t ≤ 0 in unnormalized units.
    fn lower_mass(&self, t: f64) -> f64 {
        if t <= -self.trunc {
            return 0.0;
        }
        let step = self.trunc / PANELS as f64;
        let i = (((t + self.trunc) / step).floor() as usize).min(PANELS - 1);
        let tol = 0.1 * QUADRATURE_TOL * self.half_mass / PANELS as f64;
        self.cum[i] + adaptive_simpson(&|x| self.shifted(x), self.edges[i], t, tol)
    }

    pub fn cdf_value(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.5
        } else if t < 0.0 {
            (0.5 * self.lower_mass(t) / self.half_mass).clamp(0.0, 0.5)
        } else {
            1.0 - self.cdf_value(-t)
        }
    }

    /// ln P(t) with relative accuracy in the far lower tail.
    pub fn ln_cdf(&self, t: f64) -> f64 {
        if t > 0.0 {
            return (-self.cdf_value(-t)).ln_1p();
        }
        let direct = self.cdf_value(t);
        if direct > MILLS_SWITCH {
            return direct.ln();
        }
        self.ln_pdf(t) + self.ln_mills(t)
    }

    /// ln ∫₀^∞ exp(V(t) − V(t − u)) du for t in the lower tail.
    fn ln_mills(&self, t: f64) -> f64 {
        // V(t − u) − V(t) in factored form, free of cancellation
        let s2 = t * t;
        let rise = |u: f64| {
            let y = (t - u) * (t - u);
            u * (u - 2.0 * t) * (self.b1 + self.b2 * (y + s2) + self.b3 * (y * y + y * s2 + s2 * s2))
        };
        let g = |u: f64| (-rise(u)).exp();
        let slope = (-self.psi(t)).abs().max(1e-300);
        let mut upper = 1.0 / slope;
        while rise(upper) < 60.0 {
            upper *= 2.0;
        }
        let rough = 1.0 / slope;
        adaptive_simpson(&g, 0.0, upper, 1e-13 * rough).ln()
    }

    /// E[X^k]; odd orders are exactly zero.
    pub fn moment(&self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        if k == 0 {
            return 1.0;
        }
        let f = |x: f64| x.powi(k as i32) * self.shifted(x);
        let scale = self.trunc.powi(k as i32).max(1.0);
        let tol = 0.1 * QUADRATURE_TOL * self.half_mass * scale / PANELS as f64;
        let mut acc = Neumaier::new();
        for w in self.edges.windows(2) {
            acc.add(adaptive_simpson(&f, w[0], w[1], tol));
        }
        acc.value() / self.half_mass
    }
}

impl Cdf for PolyDensity {
    fn cdf(&self, t: f64) -> f64 {
        self.cdf_value(t)
    }
}

/// Which monomials of ψ a case retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub quadratic: bool,
    pub quartic: bool,
    pub sextic: bool,
}

impl Pattern {
    pub const GAUSSIAN: Pattern = Pattern { quadratic: true, quartic: false, sextic: false };
    pub const QUARTIC: Pattern = Pattern { quadratic: false, quartic: true, sextic: false };
    pub const SEXTIC: Pattern = Pattern { quadratic: false, quartic: false, sextic: true };

    pub fn active(&self) -> [bool; 3] {
        [self.quadratic, self.quartic, self.sextic]
    }

    pub fn count(&self) -> usize {
        self.active().iter().filter(|&&a| a).count()
    }

    pub fn label(&self) -> String {
        let names = ["x2", "x4", "x6"];
        let parts: Vec<&str> = names.iter().zip(self.active()).filter(|(_, a)| *a).map(|(n, _)| *n).collect();
        parts.join("+")
    }
}

/// Regression drift E[W − W′ | W] ≈ a₁W + a₃W³ + a₅W⁵, written as −λψ(W) with
/// ψ(x) = −(q₁x + q₃x³ + q₅x⁵) and a_j = λ q_j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub lambda: f64,
    pub q: [f64; 3],
}

impl Drift {
    pub fn a(&self) -> [f64; 3] {
        [self.lambda * self.q[0], self.lambda * self.q[1], self.lambda * self.q[2]]
    }
}

/// Comparison density and the effective regression scale λ′ = λ·c_last.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub density: PolyDensity,
    pub lambda_eff: f64,
    pub c_last: f64,
}

/// Builds the comparison density for a drift restricted to `pattern`, using
/// finite-n moments. Single-term patterns reduce to b_j = 1/(2j E[W^{2j}]).
pub fn build_comparison_density(drift: &Drift, pattern: Pattern, moments: &MomentSet) -> Result<Comparison> {
    let active = pattern.active();
    let q: Vec<f64> = (0..3).map(|j| if active[j] { drift.q[j] } else { 0.0 }).collect();
    let m = |k: usize| moments.get(k);
    let c_last = q[0] * m(2) + q[1] * m(4) + q[2] * m(6);
    let (b1, b2, b3) = if pattern.count() == 1 {
        (
            if active[0] { 1.0 / (2.0 * m(2)) } else { 0.0 },
            if active[1] { 1.0 / (4.0 * m(4)) } else { 0.0 },
            if active[2] { 1.0 / (6.0 * m(6)) } else { 0.0 },
        )
    } else {
        (q[0] / (2.0 * c_last), q[1] / (4.0 * c_last), q[2] / (6.0 * c_last))
    };
    let density = normalize_density(b1, b2, b3)?;
    Ok(Comparison { density, lambda_eff: drift.lambda * c_last, c_last })
}
