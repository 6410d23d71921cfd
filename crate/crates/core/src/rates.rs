//! n-ladder experiments: exact Kolmogorov distances, Stein bounds and log-log fits.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{evaluate_bound_from_table, increment_bound, regression_from_table, step_table, BoundKind, BoundReport, RegressionDecomposition};
use crate::cases::CaseSpec;
use crate::density::{build_comparison_density, DensityRecord};
use crate::error::{BegError, Result};
use crate::exact_law::{build_joint_law_capped, kolmogorov_distance, moment_set, w_scale, DEFAULT_CAP};
use crate::stein::{estimate_stein_constants_on, GridSpec};

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of log d on log n.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(BegError::TooFewPoints { needed: MIN_FIT_POINTS, got: points.len() });
    }
    if points.iter().any(|&(n, d)| !(n > 0.0) || !(d > 0.0) || !d.is_finite()) {
        return Err(BegError::InvalidParams("log-log fit needs n > 0 and finite d > 0".into()));
    }
    if points.iter().all(|&(_, d)| d == points[0].1) {
        return Err(BegError::DegenerateFit);
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(BegError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    Ok(LogLogFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub slope_tol: f64,
    pub bound_factor: f64,
    pub with_bounds: bool,
    pub cap: usize,
    pub stein_grid: GridSpec,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { slope_tol: 0.15, bound_factor: 10.0, with_bounds: false, cap: DEFAULT_CAP, stein_grid: GridSpec::DEFAULT }
    }
}

/// Bounds at the prescribed half-width A = n^{−(1−γ)} and just above the
/// largest increment 2n^{−(1−γ)}.
#[derive(Debug, Clone, Serialize)]
pub struct PointBounds {
    pub at_a: BoundReport,
    pub above_increment: BoundReport,
    pub regression: RegressionDecomposition,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderPoint {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub dk: f64,
    /// E[W^2], E[W^4], E[W^6], E[W^8].
    pub moments: [f64; 4],
    pub density: DensityRecord,
    pub lambda: f64,
    pub lambda_eff: f64,
    pub bounds: Option<PointBounds>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointFailure {
    pub n: usize,
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub case: CaseSpec,
    pub predicted_rate: f64,
    pub ladder: Vec<LadderPoint>,
    pub failures: Vec<PointFailure>,
    pub fit: LogLogFit,
    /// max over the ladder of d_K n^r divided by its value at the smallest n.
    pub scaled_ratio: f64,
    pub slope_ok: bool,
    pub bounded_ok: bool,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.slope_ok && self.bounded_ok
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# schema=rate-report/1 case={}", self.case.id)?;
        writeln!(out, "n,beta,K,dk,m2,m4,m6,m8,lambda_eff,bound_at_A,bound_above_increment")?;
        for p in &self.ladder {
            let (b1, b2) = match &p.bounds {
                Some(b) => (fmt17(b.at_a.total), fmt17(b.above_increment.total)),
                None => (String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                p.n,
                fmt17(p.beta),
                fmt17(p.k),
                fmt17(p.dk),
                fmt17(p.moments[0]),
                fmt17(p.moments[1]),
                fmt17(p.moments[2]),
                fmt17(p.moments[3]),
                fmt17(p.lambda_eff),
                b1,
                b2
            )?;
        }
        Ok(())
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn default_ladder(case: &CaseSpec) -> Vec<usize> {
    let top = if case.extended_ladder() { 13 } else { 12 };
    (6..=top).map(|e| 1usize << e).collect()
}

pub fn evaluate_point(case: &CaseSpec, n: usize, opts: &ScanOptions) -> Result<LadderPoint> {
    let params = case.params_at(n)?;
    let law = build_joint_law_capped(params, n, opts.cap)?;
    let g = case.gamma;
    let ms = moment_set(&law, g, 8)?;
    let drift = case.drift(&params, n);
    let cmp = build_comparison_density(&drift, case.pattern, &ms)?;
    let dk = kolmogorov_distance(&law, g, &cmp.density)?;
    let bounds = if opts.with_bounds {
        let table = step_table(&law, g);
        let kind = case.bound_kind();
        let consts = match kind {
            BoundKind::General => Some(estimate_stein_constants_on(&cmp.density, opts.stein_grid)),
            BoundKind::Normal => None,
        };
        let a = w_scale(n, g);
        let above = increment_bound(n, g) * (1.0 + 1e-9);
        let at_a = evaluate_bound_from_table(&law, &table, &drift, &cmp, consts.as_ref(), a, kind)?;
        let above_increment = evaluate_bound_from_table(&law, &table, &drift, &cmp, consts.as_ref(), above, kind)?;
        Some(PointBounds { at_a, above_increment, regression: regression_from_table(&table, &drift) })
    } else {
        None
    };
    Ok(LadderPoint {
        n,
        beta: params.beta,
        k: params.k,
        dk,
        moments: [ms.get(2), ms.get(4), ms.get(6), ms.get(8)],
        density: cmp.density.record(),
        lambda: drift.lambda,
        lambda_eff: cmp.lambda_eff,
        bounds,
    })
}

fn assemble(case: &CaseSpec, results: Vec<(usize, Result<LadderPoint>)>, opts: &ScanOptions) -> Result<RateReport> {
    let r = case.predicted_rate()?;
    let mut ladder = Vec::new();
    let mut failures = Vec::new();
    for (n, res) in results {
        match res {
            Ok(p) => ladder.push(p),
            Err(e) => failures.push(PointFailure { n, kind: e.kind(), message: e.to_string() }),
        }
    }
    ladder.sort_by_key(|p| p.n);
    let pts: Vec<(f64, f64)> = ladder.iter().map(|p| (p.n as f64, p.dk)).collect();
    let fit = fit_loglog(&pts)?;
    let scaled: Vec<f64> = ladder.iter().map(|p| p.dk * (p.n as f64).powf(r)).collect();
    let scaled_ratio = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / scaled[0];
    Ok(RateReport {
        case: case.clone(),
        predicted_rate: r,
        fit,
        slope_ok: fit.slope <= -r + opts.slope_tol,
        bounded_ok: scaled_ratio <= opts.bound_factor,
        scaled_ratio,
        ladder,
        failures,
    })
}

pub fn run_case(case: &CaseSpec, ladder: &[usize], opts: &ScanOptions) -> Result<RateReport> {
    case.predicted_rate()?;
    let mut ns = ladder.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let results: Vec<(usize, Result<LadderPoint>)> =
        ns.par_iter().map(|&n| (n, evaluate_point(case, n, opts))).collect();
    assemble(case, results, opts)
}

/// Runs every case on its default ladder (or `ladder` when given), parallel
/// over all (case, n) pairs. Output order follows the input order.
pub fn run_sweep(cases: &[CaseSpec], ladder: Option<&[usize]>, opts: &ScanOptions) -> Vec<(String, Result<RateReport>)> {
    let jobs: Vec<(usize, usize)> = cases
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            let ns = ladder.map(|l| l.to_vec()).unwrap_or_else(|| default_ladder(c));
            ns.into_iter().map(move |n| (i, n))
        })
        .collect();
    let done: Vec<(usize, usize, Result<LadderPoint>)> =
        jobs.par_iter().map(|&(i, n)| (i, n, evaluate_point(&cases[i], n, opts))).collect();
    let mut grouped: Vec<Vec<(usize, Result<LadderPoint>)>> = vec![Vec::new(); cases.len()];
    for (i, n, r) in done {
        grouped[i].push((n, r));
    }
    cases
        .iter()
        .zip(grouped)
        .map(|(c, g)| (c.id.clone(), assemble(c, g, opts)))
        .collect()
}

/// One summary row per case.
pub fn write_summary<W: Write>(rows: &[(String, Result<RateReport>)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# schema=rate-summary/1")?;
    writeln!(out, "case,theorem,gamma,predicted_rate,slope,intercept,r_squared,scaled_ratio,points,slope_ok,bounded_ok,pass,error")?;
    for (id, r) in rows {
        match r {
            Ok(rep) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},",
                id,
                rep.case.theorem.name(),
                fmt17(rep.case.gamma),
                fmt17(rep.predicted_rate),
                fmt17(rep.fit.slope),
                fmt17(rep.fit.intercept),
                fmt17(rep.fit.r_squared),
                fmt17(rep.scaled_ratio),
                rep.ladder.len(),
                rep.slope_ok,
                rep.bounded_ok,
                rep.passed()
            )?,
            Err(e) => writeln!(out, "{id},,,,,,,,0,false,false,false,{}", e.kind())?,
        }
    }
    Ok(())
}
