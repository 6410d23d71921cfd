//! Solution of the density Stein equation f′ + ψf = 1{x ≤ z} − P(z).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::PolyDensity;

/// f_z(x) = P(min(x,z))·(1 − P(max(x,z)))/p(x), in log space.
pub fn stein_solution(d: &PolyDensity, z: f64, x: f64) -> f64 {
    let (lo, hi) = if x <= z { (x, z) } else { (z, x) };
    (d.ln_cdf(lo) + d.ln_cdf(-hi) - d.ln_pdf(x)).exp()
}

/// f_z′(x) from the equation itself; at x = z this is the left derivative.
pub fn stein_derivative(d: &PolyDensity, z: f64, x: f64) -> f64 {
    let h = if x <= z { 1.0 } else { 0.0 };
    h - d.cdf_value(z) - d.psi(x) * stein_solution(d, z, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub const DEFAULT: GridSpec = GridSpec { lo: -10.0, hi: 10.0, step: 0.005 };

    pub fn points(&self) -> Vec<f64> {
        let m = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=m).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// Grid maxima of |f_z|, |f_z′|, osc f_z′ and |(ψ f_z)′|. The same grid is used
/// for z and x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinConstants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub grid: GridSpec,
}

pub fn estimate_stein_constants(d: &PolyDensity) -> SteinConstants {
    estimate_stein_constants_on(d, GridSpec::DEFAULT)
}

pub fn estimate_stein_constants_on(d: &PolyDensity, grid: GridSpec) -> SteinConstants {
    let xs = grid.points();
    let lp: Vec<f64> = xs.iter().map(|&x| d.ln_cdf(x)).collect();
    let lq: Vec<f64> = xs.iter().map(|&x| d.ln_cdf(-x)).collect();
    let ld: Vec<f64> = xs.iter().map(|&x| d.ln_pdf(x)).collect();
    let cdf: Vec<f64> = xs.iter().map(|&x| d.cdf_value(x)).collect();
    let psi: Vec<f64> = xs.iter().map(|&x| d.psi(x)).collect();
    let dpsi: Vec<f64> = xs.iter().map(|&x| d.psi_prime(x)).collect();

    let per_z: Vec<[f64; 4]> = (0..xs.len())
        .into_par_iter()
        .map(|j| {
            let (mut d1, mut d2, mut d4) = (0.0f64, 0.0f64, 0.0f64);
            let (mut fmax, mut fmin) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut visit = |f: f64, fp: f64, i: usize| {
                d1 = d1.max(f.abs());
                d2 = d2.max(fp.abs());
                fmax = fmax.max(fp);
                fmin = fmin.min(fp);
                d4 = d4.max((dpsi[i] * f + psi[i] * fp).abs());
            };
            for i in 0..xs.len() {
                if i <= j {
                    let f = (lp[i] + lq[j] - ld[i]).exp();
                    visit(f, 1.0 - cdf[j] - psi[i] * f, i);
                }
                if i >= j {
                    // at i == j this is the right-hand limit across the jump
                    let f = (lp[j] + lq[i] - ld[i]).exp();
                    visit(f, -cdf[j] - psi[i] * f, i);
                }
            }
            [d1, d2, fmax - fmin, d4]
        })
        .collect();

    let mut out = [0.0f64; 4];
    for r in &per_z {
        for k in 0..4 {
            out[k] = out[k].max(r[k]);
        }
    }
    SteinConstants { d1: out[0], d2: out[1], d3: out[2], d4: out[3], grid }
}
