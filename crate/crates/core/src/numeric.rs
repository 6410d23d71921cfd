//! Small numerical kernels shared by the other modules.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().collect::<Neumaier>().value()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + compensated_sum(xs.iter().map(|&x| (x - m).exp())).ln()
}

/// Table of ln(k!) for k = 0..=n, built by compensated summation of ln k.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Neumaier::new();
    out.push(0.0);
    for k in 1..=n {
        acc.add((k as f64).ln());
        out.push(acc.value());
    }
    out
}

/// ln cosh(y) without overflow.
#[inline]
pub fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson_panel<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> Panel {
    let m = 0.5 * (a + b);
    let fm = f(m);
    Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
    }
}

/// Adaptive Simpson quadrature with Richardson correction and an explicit stack.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let root = simpson_panel(f, a, f(a), b, f(b));
    let mut stack = vec![(root, tol, 0u32)];
    let mut acc = Neumaier::new();
    while let Some((p, eps, depth)) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let left = simpson_panel(f, p.a, p.fa, m, p.fm);
        let right = simpson_panel(f, m, p.fm, p.b, p.fb);
        let delta = left.whole + right.whole - p.whole;
        if depth >= 50 || delta.abs() <= 15.0 * eps {
            acc.add(left.whole + right.whole + delta / 15.0);
        } else {
            stack.push((right, 0.5 * eps, depth + 1));
            stack.push((left, 0.5 * eps, depth + 1));
        }
    }
    acc.value()
}

/// Bisection for a sign change of `f` on [a, b]. Returns the midpoint of the
/// final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
