use std::fs::File;
use std::io::{BufReader, Write};

use beg::cases::{case_catalog, find_case};
use beg::density::{build_comparison_density, normalize_density, PolyDensity};
use beg::distance::{Normal, StepCdf};
use beg::exact_law::{build_joint_law, kolmogorov_distance, moment_set, JointLaw};
use beg::mcmc::{chain_seed, default_burn_in, run_chain, ChainConfig};
use beg::model::{critical_k, minimize_g, ModelParams, BETA_C};
use beg::oracle::total_variation;
use beg::rates::{default_ladder, evaluate_point, fmt17, run_case, run_sweep, write_summary, ScanOptions};
use beg::stein::GridSpec;
use beg::BegError;
use serde_json::{json, Value};

use crate::config::{parse_config, Resolver};
use crate::output::{json as to_json, num, Csv};
use crate::{Cli, CliError, Cmd, ModelArgs};

type Res<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Csv,
    Json,
}

fn value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Beg(BegError::InvalidParams(msg.into()))
}

pub fn run(cli: Cli) -> Res<()> {
    let file = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => Default::default(),
    };
    let mut r = Resolver::new(file);
    let (name, default_format) = match &cli.cmd {
        Cmd::PhaseDiagram { .. } => ("phase-diagram", "csv"),
        Cmd::ExactLaw { .. } => ("exact-law", "json"),
        Cmd::LimitDensity { .. } => ("limit-density", "json"),
        Cmd::Kolmogorov { .. } => ("kolmogorov", "json"),
        Cmd::SteinBound { .. } => ("stein-bound", "json"),
        Cmd::RateScan { .. } => ("rate-scan", "csv"),
        Cmd::Mcmc { .. } => ("mcmc", "json"),
        Cmd::CaseCatalog => ("case-catalog", "csv"),
    };
    r.record("subcommand", name);
    let format = match r.get("format", cli.format.clone(), Some(default_format.to_string()))?.as_str() {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(invalid(format!("format must be csv or json, got {other}"))),
    };
    let seed = r.get("seed", cli.seed, Some(0u64))?;
    if let Some(t) = r.opt("threads", cli.threads)? {
        if t == 0 {
            return Err(invalid("threads must be positive"));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let output = r.opt("output", cli.output.as_ref().map(|p| p.display().to_string()))?;

    let text = match cli.cmd {
        Cmd::PhaseDiagram { beta_min, beta_max, points } => phase_diagram(&mut r, format, beta_min, beta_max, points)?,
        Cmd::ExactLaw { model, check_bruteforce, save } => exact_law(&mut r, format, model, check_bruteforce, save)?,
        Cmd::LimitDensity { b1, b2, b3, case, n, grid_points, half_width } => {
            limit_density(&mut r, format, [b1, b2, b3], case, n, grid_points, half_width)?
        }
        Cmd::Kolmogorov { model, law, against, sd, b1, b2, b3 } => {
            kolmogorov(&mut r, format, model, law, against, sd, [b1, b2, b3])?
        }
        Cmd::SteinBound { case, n, grid_step } => stein_bound(&mut r, format, case, n, grid_step)?,
        Cmd::RateScan { case, all, bounds, ladder } => rate_scan(&mut r, format, case, all, bounds, ladder)?,
        Cmd::Mcmc { model, sweeps, burn_in, trace_every, pmf } => {
            mcmc(&mut r, format, model, seed, sweeps, burn_in, trace_every, pmf)?
        }
        Cmd::CaseCatalog => case_table(&mut r, format)?,
    };
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn config_value(r: &Resolver) -> Value {
    value(&r.resolved)
}

fn json_doc(r: &Resolver, schema: &str, result: Value) -> String {
    let mut s = to_json(&json!({ "schema": schema, "config": config_value(r), "result": result }));
    s.push('\n');
    s
}

fn model_params(r: &mut Resolver, m: &ModelArgs) -> Res<(ModelParams, usize, f64)> {
    let n = r.get("n", m.n, None)?;
    let beta = r.get("beta", m.beta, None)?;
    let k = r.get("K", m.k, None)?;
    let gamma = r.get("gamma", m.gamma, Some(0.5))?;
    Ok((ModelParams::new(beta, k)?, n, gamma))
}

/// Smallest K with a nonzero global minimizer of G, by bisection.
fn first_order_k(beta: f64) -> f64 {
    let ordered = |k: f64| ModelParams::new(beta, k).map(|p| minimize_g(&p).iter().any(|&x| x != 0.0)).unwrap_or(false);
    let (mut lo, mut hi) = (1e-3, critical_k(beta));
    if ordered(lo) || !ordered(hi) {
        return f64::NAN;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ordered(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn phase_diagram(r: &mut Resolver, f: Format, lo: Option<f64>, hi: Option<f64>, pts: Option<usize>) -> Res<String> {
    let lo = r.get("beta-min", lo, Some(0.2))?;
    let hi = r.get("beta-max", hi, Some(3.0))?;
    let pts = r.get("points", pts, Some(57usize))?;
    r.finish()?;
    if !(lo > 0.0 && hi > lo && pts >= 2) {
        return Err(invalid("need 0 < beta-min < beta-max and points >= 2"));
    }
    let rows: Vec<(f64, f64, f64, &str)> = (0..pts)
        .map(|i| {
            let beta = lo + (hi - lo) * i as f64 / (pts - 1) as f64;
            let kc = critical_k(beta);
            let rel = (beta - BETA_C).abs() / BETA_C;
            if rel <= 1e-9 {
                (beta, kc, kc, "tricritical")
            } else if beta < BETA_C {
                (beta, kc, kc, "second-order")
            } else {
                (beta, kc, first_order_k(beta), "first-order")
            }
        })
        .collect();
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("phase-diagram/1", &config_value(r), &["beta", "K_c", "boundary_K", "transition"]);
            for (b, kc, kb, t) in &rows {
                c.row(&[num(*b), num(*kc), num(*kb), t.to_string()]);
            }
            c.finish()
        }
        Format::Json => json_doc(
            r,
            "phase-diagram/1",
            json!({
                "beta_c": BETA_C,
                "K_c_at_beta_c": critical_k(BETA_C),
                "rows": rows.iter().map(|(b, kc, kb, t)| json!({"beta": b, "K_c": kc, "boundary_K": kb, "transition": t})).collect::<Vec<_>>(),
            }),
        ),
    })
}

fn moments_value(law: &JointLaw, gamma: f64) -> Res<Value> {
    let ms = moment_set(law, gamma, 8)?;
    Ok(json!({ "m2": ms.get(2), "m4": ms.get(4), "m6": ms.get(6), "m8": ms.get(8) }))
}

fn exact_law(r: &mut Resolver, f: Format, m: ModelArgs, check: bool, save: Option<std::path::PathBuf>) -> Res<String> {
    let (p, n, gamma) = model_params(r, &m)?;
    let check = r.flag("check-bruteforce", check)?;
    let save = r.opt("save", save.map(|s| s.display().to_string()))?;
    r.finish()?;
    let law = build_joint_law(p, n)?;
    let tv = if check { Some(total_variation(&law)?) } else { None };
    if let Some(path) = save {
        let mut out = std::io::BufWriter::new(File::create(path)?);
        law.write_csv(&mut out)?;
        out.flush()?;
    }
    let moments = moments_value(&law, gamma)?;
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("exact-law/1", &config_value(r), &["s", "probability", "mean_M"]);
            for s in -(n as i64)..=n as i64 {
                c.row(&[s.to_string(), num(law.prob_s(s)), num(law.slice(s).mean_m)]);
            }
            c.finish()
        }
        Format::Json => json_doc(
            r,
            "exact-law/1",
            json!({
                "log_partition": law.log_partition,
                "total_mass": law.total_mass(),
                "moments": moments,
                "tv_bruteforce": tv,
                "prob_s": (-(n as i64)..=n as i64).map(|s| json!([s, law.prob_s(s)])).collect::<Vec<_>>(),
            }),
        ),
    })
}

fn case_density(case: &str, n: usize) -> Res<PolyDensity> {
    let c = find_case(case)?;
    let p = c.params_at(n)?;
    let law = build_joint_law(p, n)?;
    let ms = moment_set(&law, c.gamma, 8)?;
    Ok(build_comparison_density(&c.drift(&p, n), c.pattern, &ms)?.density)
}

fn limit_density(
    r: &mut Resolver,
    f: Format,
    b: [Option<f64>; 3],
    case: Option<String>,
    n: Option<usize>,
    grid: Option<usize>,
    half: Option<f64>,
) -> Res<String> {
    let case = r.opt("case", case)?;
    let d = match case {
        Some(id) => {
            let n = r.get("n", n, None)?;
            case_density(&id, n)?
        }
        None => {
            let b1 = r.get("b1", b[0], Some(0.0))?;
            let b2 = r.get("b2", b[1], Some(0.0))?;
            let b3 = r.get("b3", b[2], Some(0.0))?;
            normalize_density(b1, b2, b3)?
        }
    };
    let grid = r.get("grid-points", grid, Some(201usize))?;
    let half = r.get("half-width", half, Some(5.0))?;
    r.finish()?;
    if grid < 2 || !(half > 0.0) {
        return Err(invalid("need grid-points >= 2 and half-width > 0"));
    }
    let xs: Vec<f64> = (0..grid).map(|i| -half + 2.0 * half * i as f64 / (grid - 1) as f64).collect();
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("limit-density/1", &config_value(r), &["x", "pdf", "cdf"]);
            for &x in &xs {
                c.row(&[num(x), num(d.pdf(x)), num(d.cdf_value(x))]);
            }
            c.finish()
        }
        Format::Json => json_doc(
            r,
            "limit-density/1",
            json!({
                "density": value(&d.record()),
                "truncation": d.truncation(),
                "moments": { "m2": d.moment(2), "m4": d.moment(4), "m6": d.moment(6), "m8": d.moment(8) },
                "grid": xs.iter().map(|&x| json!([x, d.pdf(x), d.cdf_value(x)])).collect::<Vec<_>>(),
            }),
        ),
    })
}

fn kolmogorov(
    r: &mut Resolver,
    f: Format,
    m: ModelArgs,
    law_path: Option<std::path::PathBuf>,
    against: Option<String>,
    sd: Option<f64>,
    b: [Option<f64>; 3],
) -> Res<String> {
    let law_path = r.opt("law", law_path.map(|p| p.display().to_string()))?;
    let (law, gamma) = match law_path {
        Some(path) => {
            let law = JointLaw::read_csv(BufReader::new(File::open(path)?))?;
            (law, r.get("gamma", m.gamma, Some(0.5))?)
        }
        None => {
            let (p, n, gamma) = model_params(r, &m)?;
            (build_joint_law(p, n)?, gamma)
        }
    };
    let against = r.get("against", against, Some("normal".to_string()))?;
    let dk = match against.as_str() {
        "normal" => {
            let default_sd = moment_set(&law, gamma, 2)?.get(2).sqrt();
            let sd = r.get("sd", sd, Some(default_sd))?;
            kolmogorov_distance(&law, gamma, &Normal { sd })?
        }
        "self" => kolmogorov_distance(&law, gamma, &StepCdf::new(&law.step_points(gamma)))?,
        "density" => {
            let d = normalize_density(r.get("b1", b[0], Some(0.0))?, r.get("b2", b[1], Some(0.0))?, r.get("b3", b[2], Some(0.0))?)?;
            kolmogorov_distance(&law, gamma, &d)?
        }
        other => return Err(invalid(format!("against must be normal, self or density, got {other}"))),
    };
    r.finish()?;
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("kolmogorov/1", &config_value(r), &["n", "beta", "K", "gamma", "dk"]);
            c.row(&[law.n.to_string(), num(law.params.beta), num(law.params.k), num(gamma), num(dk)]);
            c.finish()
        }
        Format::Json => json_doc(r, "kolmogorov/1", json!({ "n": law.n, "dk": dk })),
    })
}

fn stein_bound(r: &mut Resolver, f: Format, case: Option<String>, n: Option<usize>, step: Option<f64>) -> Res<String> {
    let id = r.get("case", case, None)?;
    let n = r.get("n", n, None)?;
    let step = r.get("grid-step", step, Some(GridSpec::DEFAULT.step))?;
    r.finish()?;
    if !(step > 0.0 && step <= 1.0) {
        return Err(invalid("grid-step must lie in (0, 1]"));
    }
    let c = find_case(&id)?;
    let opts = ScanOptions { with_bounds: true, stein_grid: GridSpec { step, ..GridSpec::DEFAULT }, ..Default::default() };
    let pt = evaluate_point(&c, n, &opts)?;
    let b = pt.bounds.as_ref().expect("bounds requested");
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("stein-bound/1", &config_value(r), &["term", "at_A", "above_increment"]);
            let (x, y) = (&b.at_a.terms, &b.above_increment.terms);
            for (name, u, v) in [
                ("variance", x.variance_term, y.variance_term),
                ("remainder", x.remainder_term, y.remainder_term),
                ("cube", x.cube_term, y.cube_term),
                ("psi", x.psi_term, y.psi_term),
                ("tail", x.tail_term, y.tail_term),
                ("total", b.at_a.total, b.above_increment.total),
                ("exact_dk", b.at_a.exact_dk, b.above_increment.exact_dk),
            ] {
                c.row(&[name.to_string(), num(u), num(v)]);
            }
            c.finish()
        }
        Format::Json => json_doc(r, "stein-bound/1", value(&pt)),
    })
}

fn parse_ladder(s: &str) -> Res<Vec<usize>> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| invalid(format!("bad ladder entry {x:?}"))))
        .collect()
}

fn rate_scan(r: &mut Resolver, f: Format, case: Option<String>, all: bool, bounds: bool, ladder: Option<String>) -> Res<String> {
    let case = r.opt("case", case)?;
    let all = r.flag("all", all)?;
    let bounds = r.flag("bounds", bounds)?;
    let ladder = r.opt("ladder", ladder)?.map(|s| parse_ladder(&s)).transpose()?;
    r.finish()?;
    let opts = ScanOptions { with_bounds: bounds, ..Default::default() };
    let header = format!("# config={}\n", to_json(&config_value(r)));
    match (case, all) {
        (Some(_), true) | (None, false) => Err(invalid("give exactly one of --case and --all")),
        (None, true) => {
            let rows = run_sweep(&case_catalog(), ladder.as_deref(), &opts);
            Ok(match f {
                Format::Csv => {
                    let mut buf = header.into_bytes();
                    write_summary(&rows, &mut buf)?;
                    String::from_utf8(buf).expect("utf8")
                }
                Format::Json => {
                    let out: Vec<Value> = rows
                        .iter()
                        .map(|(id, res)| match res {
                            Ok(rep) => value(rep),
                            Err(e) => json!({ "case": id, "error": e.kind(), "message": e.to_string() }),
                        })
                        .collect();
                    json_doc(r, "rate-scan/1", Value::Array(out))
                }
            })
        }
        (Some(id), false) => {
            let c = find_case(&id)?;
            let ns = ladder.unwrap_or_else(|| default_ladder(&c));
            let rep = run_case(&c, &ns, &opts)?;
            Ok(match f {
                Format::Csv => {
                    let mut buf = header.into_bytes();
                    rep.write_csv(&mut buf)?;
                    writeln!(
                        buf,
                        "# fit slope={} intercept={} predicted_rate={} scaled_ratio={} pass={}",
                        fmt17(rep.fit.slope),
                        fmt17(rep.fit.intercept),
                        fmt17(rep.predicted_rate),
                        fmt17(rep.scaled_ratio),
                        rep.passed()
                    )?;
                    String::from_utf8(buf).expect("utf8")
                }
                Format::Json => json_doc(r, "rate-scan/1", value(&rep)),
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn mcmc(
    r: &mut Resolver,
    f: Format,
    m: ModelArgs,
    seed: u64,
    sweeps: Option<u64>,
    burn_in: Option<u64>,
    trace_every: Option<u64>,
    pmf: bool,
) -> Res<String> {
    let (p, n, gamma) = model_params(r, &m)?;
    let sweeps = r.get("sweeps", sweeps, Some(100_000u64))?;
    let burn_in = r.get("burn-in", burn_in, Some(default_burn_in(sweeps)))?;
    let trace_every = r.opt("trace-every", trace_every)?;
    let pmf = r.flag("pmf", pmf)?;
    r.finish()?;
    let cfg = ChainConfig { n, sweeps, burn_in, seed: chain_seed(seed, 0), gamma, trace_every, pmf };
    let stats = run_chain(&p, &cfg)?;
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new("mcmc/1", &config_value(r), &["quantity", "mean", "std_error"]);
            for (k, e) in &stats.moments {
                c.row(&[format!("W^{k}"), num(e.mean), num(e.std_error)]);
            }
            c.row(&["nonzero_fraction".into(), num(stats.nonzero_fraction.mean), num(stats.nonzero_fraction.std_error)]);
            let mut text = c.finish();
            if trace_every.is_some() {
                let mut buf = Vec::new();
                stats.write_trace_csv(&mut buf)?;
                text.push_str(&String::from_utf8(buf).expect("utf8"));
            }
            text
        }
        Format::Json => json_doc(r, "mcmc/1", value(&stats)),
    })
}

fn case_table(r: &mut Resolver, f: Format) -> Res<String> {
    r.finish()?;
    let cases = case_catalog();
    Ok(match f {
        Format::Csv => {
            let mut c = Csv::new(
                "case-catalog/1",
                &config_value(r),
                &["id", "theorem", "subcase", "gamma", "pattern", "lambda_exponent", "predicted_rate", "schedule"],
            );
            for cs in &cases {
                let rate = cs.predicted_rate().map(num).unwrap_or_else(|e| e.kind().to_string());
                // quoted because the schedule JSON contains commas
                let sched = format!("\"{}\"", to_json(&value(&cs.schedule)).replace('"', "\"\""));
                c.row(&[
                    cs.id.clone(),
                    cs.theorem.name().to_string(),
                    cs.subcase.clone(),
                    num(cs.gamma),
                    cs.pattern.label(),
                    num(cs.lambda_exponent),
                    rate,
                    sched,
                ]);
            }
            c.finish()
        }
        Format::Json => {
            let rows: Vec<Value> = cases
                .iter()
                .map(|cs| {
                    let mut v = value(cs);
                    v["predicted_rate"] = cs.predicted_rate().map(Value::from).unwrap_or(Value::Null);
                    v
                })
                .collect();
            json_doc(r, "case-catalog/1", Value::Array(rows))
        }
    })
}
