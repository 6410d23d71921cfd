//! Random-site heat-bath sampler with batch-means error bars.
//!
//! Seeds: a chain is driven by `ChaCha8Rng::seed_from_u64(seed)`. Independent
//! chains in a sweep use `chain_seed(master, index)`, which applies the
//! splitmix64 finalizer to `master + (index + 1)·0x9E3779B97F4A7C15`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::spin_conditional;
use crate::error::{BegError, Result};
use crate::exact_law::w_scale;
use crate::model::ModelParams;

pub const BATCHES: usize = 32;
pub const CHECK_INTERVAL: u64 = 1 << 10;

pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn chain_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// 10% of the sweeps.
pub fn default_burn_in(sweeps: u64) -> u64 {
    sweeps / 10
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub spins: Vec<i8>,
    pub s: i64,
    pub m: i64,
    pub rng_seed: u64,
    pub sweep_count: u64,
    rng: ChaCha8Rng,
    /// P(ω_i′ = −1, 0, +1 | S^i = t), indexed by t + n.
    table: Vec<[f64; 3]>,
}

impl ChainState {
    /// Starts from i.i.d. uniform spins drawn from the chain's own generator.
    pub fn new(params: &ModelParams, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(BegError::InvalidParams("n must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spins: Vec<i8> = (0..n).map(|_| rng.gen_range(-1i8..=1)).collect();
        let ni = n as i64;
        let table = (-ni..=ni).map(|t| spin_conditional(params, n, t)).collect();
        let (s, m) = sums(&spins);
        Ok(ChainState { spins, s, m, rng_seed: seed, sweep_count: 0, rng, table })
    }

    fn update(&mut self) {
        let n = self.spins.len();
        let i = self.rng.gen_range(0..n);
        let x = self.spins[i] as i64;
        let c = self.table[(self.s - x + n as i64) as usize];
        let u: f64 = self.rng.gen();
        let y: i64 = if u < c[0] {
            -1
        } else if u < c[0] + c[1] {
            0
        } else {
            1
        };
        self.spins[i] = y as i8;
        self.s += y - x;
        self.m += y.abs() - x.abs();
    }

    /// n single-site updates at uniformly random sites.
    pub fn sweep(&mut self) {
        for _ in 0..self.spins.len() {
            self.update();
        }
        self.sweep_count += 1;
        if self.sweep_count % CHECK_INTERVAL == 0 {
            self.check();
        }
    }

    /// Panics if the running sums disagree with the configuration.
    pub fn check(&self) {
        let (s, m) = sums(&self.spins);
        assert!(s == self.s && m == self.m, "running sums drifted: ({}, {}) vs ({s}, {m})", self.s, self.m);
    }
}

fn sums(spins: &[i8]) -> (i64, i64) {
    (spins.iter().map(|&x| x as i64).sum(), spins.iter().filter(|&&x| x != 0).count() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConfig {
    pub n: usize,
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub gamma: f64,
    /// Record a trace row every this many measured sweeps.
    pub trace_every: Option<u64>,
    pub pmf: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub sweep: u64,
    pub s: i64,
    #[serde(rename = "M")]
    pub m: i64,
    pub w: f64,
    pub w2: f64,
    pub w4: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStats {
    pub config: ChainConfig,
    pub params: ModelParams,
    /// (order, estimate of E[W^order]) for orders 2, 4, 6, 8.
    pub moments: Vec<(usize, Estimate)>,
    pub nonzero_fraction: Estimate,
    /// Empirical P(S = s) over measured sweeps.
    pub pmf: Option<Vec<(i64, f64)>>,
    pub trace: Vec<TraceRow>,
}

impl ChainStats {
    pub fn moment(&self, k: usize) -> Option<Estimate> {
        self.moments.iter().find(|(o, _)| *o == k).map(|(_, e)| *e)
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# schema=mcmc-trace/1")?;
        writeln!(out, "sweep,s,M,W,W2,W4")?;
        for r in &self.trace {
            writeln!(out, "{},{},{},{:.16e},{:.16e},{:.16e}", r.sweep, r.s, r.m, r.w, r.w2, r.w4)?;
        }
        Ok(())
    }
}

/// Batch means over `BATCHES` equal batches; the leftover tail is dropped.
pub fn batch_means(xs: &[f64]) -> Estimate {
    let len = xs.len() / BATCHES;
    let means: Vec<f64> = (0..BATCHES).map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let mean = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Estimate { mean, std_error: (var / BATCHES as f64).sqrt() }
}

pub const MOMENT_ORDERS: [usize; 4] = [2, 4, 6, 8];

pub fn run_chain(params: &ModelParams, cfg: &ChainConfig) -> Result<ChainStats> {
    if cfg.sweeps <= cfg.burn_in {
        return Err(BegError::InvalidParams(format!("sweeps ({}) must exceed burn-in ({})", cfg.sweeps, cfg.burn_in)));
    }
    if cfg.sweeps - cfg.burn_in < BATCHES as u64 {
        return Err(BegError::InvalidParams(format!("need at least {BATCHES} measured sweeps")));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma <= 0.5) {
        return Err(BegError::InvalidParams(format!("gamma must lie in (0, 1/2], got {}", cfg.gamma)));
    }
    let n = cfg.n;
    let mut st = ChainState::new(params, n, cfg.seed)?;
    let scale = w_scale(n, cfg.gamma);
    for _ in 0..cfg.burn_in {
        st.sweep();
    }
    let kept = (cfg.sweeps - cfg.burn_in) as usize;
    let mut obs: Vec<Vec<f64>> = vec![Vec::with_capacity(kept); MOMENT_ORDERS.len() + 1];
    let mut counts = if cfg.pmf { vec![0u64; 2 * n + 1] } else { Vec::new() };
    let mut trace = Vec::new();
    for j in 0..kept as u64 {
        st.sweep();
        let w = st.s as f64 * scale;
        let w2 = w * w;
        let mut p = w2;
        for series in obs.iter_mut().take(MOMENT_ORDERS.len()) {
            series.push(p);
            p *= w2;
        }
        obs[MOMENT_ORDERS.len()].push(st.m as f64 / n as f64);
        if cfg.pmf {
            counts[(st.s + n as i64) as usize] += 1;
        }
        if let Some(every) = cfg.trace_every {
            if every > 0 && j % every == 0 {
                trace.push(TraceRow { sweep: st.sweep_count, s: st.s, m: st.m, w, w2, w4: w2 * w2 });
            }
        }
    }
    st.check();
    let moments = MOMENT_ORDERS.iter().zip(&obs).map(|(&k, xs)| (k, batch_means(xs))).collect();
    let pmf = cfg.pmf.then(|| {
        let total = kept as f64;
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as i64 - n as i64, c as f64 / total))
            .collect()
    });
    Ok(ChainStats {
        config: *cfg,
        params: *params,
        moments,
        nonzero_fraction: batch_means(&obs[MOMENT_ORDERS.len()]),
        pmf,
        trace,
    })
}
