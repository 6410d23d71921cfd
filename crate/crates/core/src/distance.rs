//! Kolmogorov distance between a discrete step law and a reference CDF.

use crate::numeric::{normal_cdf, Neumaier};

/// A cumulative distribution function together with its left limits.
pub trait Cdf {
    fn cdf(&self, t: f64) -> f64;

    /// P(X < t). Continuous laws inherit the default.
    fn cdf_left(&self, t: f64) -> f64 {
        self.cdf(t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Normal {
    pub sd: f64,
}

impl Cdf for Normal {
    fn cdf(&self, t: f64) -> f64 {
        normal_cdf(t / self.sd)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    pub at: f64,
}

impl Cdf for PointMass {
    fn cdf(&self, t: f64) -> f64 {
        if t >= self.at {
            1.0
        } else {
            0.0
        }
    }

    fn cdf_left(&self, t: f64) -> f64 {
        if t > self.at {
            1.0
        } else {
            0.0
        }
    }
}

/// Wraps a plain function as a continuous CDF.
pub struct FnCdf<F>(pub F);

impl<F: Fn(f64) -> f64> Cdf for FnCdf<F> {
    fn cdf(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Right-continuous step CDF of a finite law given as sorted (location, mass) pairs.
#[derive(Debug, Clone)]
pub struct StepCdf {
    locs: Vec<f64>,
    cum: Vec<f64>,
}

impl StepCdf {
    pub fn new(points: &[(f64, f64)]) -> Self {
        let mut acc = Neumaier::new();
        let mut locs = Vec::with_capacity(points.len());
        let mut cum = Vec::with_capacity(points.len());
        for &(t, p) in points {
            acc.add(p);
            locs.push(t);
            cum.push(acc.value());
        }
        Self { locs, cum }
    }

    fn mass_up_to(&self, idx: usize) -> f64 {
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }
}

impl Cdf for StepCdf {
    fn cdf(&self, t: f64) -> f64 {
        self.mass_up_to(self.locs.partition_point(|&x| x <= t))
    }

    fn cdf_left(&self, t: f64) -> f64 {
        self.mass_up_to(self.locs.partition_point(|&x| x < t))
    }
}

/// Exact sup_t |F_n(t) − F(t)| for a step law with atoms at strictly increasing
/// locations. Between atoms F_n is flat and F monotone, so the supremum is
/// attained at an atom or as a left limit at one.
pub fn kolmogorov_steps<C: Cdf + ?Sized>(points: &[(f64, f64)], f: &C) -> f64 {
    let mut acc = Neumaier::new();
    let mut prev = 0.0;
    let mut sup: f64 = 0.0;
    for &(t, p) in points {
        acc.add(p);
        let here = acc.value();
        let right = (here - f.cdf(t)).abs();
        let left = (f.cdf_left(t) - prev).abs();
        sup = sup.max(right).max(left);
        prev = here;
    }
    sup.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_distance_is_zero() {
        let pts = [(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)];
        let step = StepCdf::new(&pts);
        assert_eq!(kolmogorov_steps(&pts, &step), 0.0);
    }

    #[test]
    fn point_mass_left_of_support() {
        let pts = [(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)];
        assert_eq!(kolmogorov_steps(&pts, &PointMass { at: -5.0 }), 1.0);
    }

    #[test]
    fn symmetric_two_point_vs_normal() {
        let pts = [(-1.0, 0.5), (1.0, 0.5)];
        let d = kolmogorov_steps(&pts, &Normal { sd: 1.0 });
        // the largest gap is just below ±1: Φ(1) − 0.5 versus the jump at −1
        let expect = (normal_cdf(1.0) - 0.5).max(0.5 - normal_cdf(-1.0)).max(normal_cdf(-1.0));
        assert!((d - expect).abs() < 1e-15);
    }
}
