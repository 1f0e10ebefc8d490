//! One function per experiment kind.

use std::io::Write;

use frade_core::carleman::{
    sweep_s, weight_is_time_monotone, write_sweep_csv, ExponentLadder, FractionalBoundEstimate, RationalOrderEstimate, Region,
    SubDiffusionEstimate, Sweep, WeightedParabolicEstimate,
};
use frade_core::fade::{solve_fade, write_solution_csv};
use frade_core::frac_calc::family::TestFn;
use frade_core::frac_calc::{caputo_derivative, gamma_fn, rl_integral};
use frade_core::geometry::{choose_beta, level_values, BetaRule, Cutoff, Face, LevelAnchor, Weight, WeightParams};
use frade_core::inverse::{
    add_history_noise, cauchy_epsilon, check_isp_hypotheses, fit_holder, lateral_cauchy_solve, noise_study, reconstruct_source,
    relative_error_on, synthesize_history, CauchyData, IspOptions, NoiseStudy, Target,
};
use frade_core::{GridFunction, SpaceField, TimeGrid, TimeSeries};
use serde_json::{json, Value};

use crate::config::Config;
use crate::run::{field, grid, problem, pseudoconvexity, sample_seed, summary_f64, EquationParts, Output, RunResult};

const DEFAULT_S: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
const FULL: EquationParts = EquationParts { orders_from_config: true, data: true };
const OPERATOR_ONLY: EquationParts = EquationParts { orders_from_config: true, data: false };

fn rel_l2(u: &[f64], exact: &[f64]) -> f64 {
    let num: f64 = u.iter().zip(exact).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = exact.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

/// Below this error an observed order is round-off noise and reported as NaN.
const ROUND_OFF: f64 = 1e-12;

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| if w[1] < ROUND_OFF { f64::NAN } else { (w[0] / w[1]).log2() }).collect()
}

pub fn forward(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let prob = problem(cfg, g, &[], FULL)?;
    let exact = cfg.expr_opt("check", "exact")?;
    let u = solve_fade(&prob)?;
    out.file("solution.csv", |w| write_solution_csv(w, &u))?;
    out.put("max_abs", u.max_abs());
    let mut line = format!("forward nx={} nt={} max|u|={}", g.space().nx(), g.time().nodes(), u.max_abs());
    if let Some(e) = &exact {
        let err = rel_l2(u.values(), field(g, e).values());
        out.put("rel_l2_error", err);
        line.push_str(&format!(" rel_l2={err}"));
    }
    out.line(line);

    // optional refinement study against the exact solution
    let time_levels: Option<Vec<usize>> = cfg.list_opt("check", "time_levels")?;
    let space_levels: Option<Vec<usize>> = cfg.list_opt("check", "space_levels")?;
    if time_levels.is_none() && space_levels.is_none() {
        return Ok(());
    }
    let Some(e) = exact else {
        return Err(cfg.error("check", "exact", "refinement levels need an exact solution").into());
    };
    let mut rows = Vec::new();
    let mut orders = serde_json::Map::new();
    for (axis, levels) in [("time", time_levels), ("space", space_levels)] {
        let Some(levels) = levels else { continue };
        let errs = levels
            .iter()
            .map(|&n| {
                let mut c = cfg.clone();
                c.set("grid", if axis == "time" { "nt" } else { "nx" }, n.to_string());
                let gi = grid(&c)?;
                let u = solve_fade(&problem(&c, gi, &[], FULL)?)?;
                Ok(rel_l2(u.values(), field(gi, &e).values()))
            })
            .collect::<RunResult<Vec<f64>>>()?;
        let ord = observed_orders(&errs);
        for (k, (&n, &err)) in levels.iter().zip(&errs).enumerate() {
            let o = if k == 0 || ord[k - 1].is_nan() { String::new() } else { ord[k - 1].to_string() };
            rows.push(format!("{axis},{n},{err},{o}"));
        }
        let min = ord.iter().copied().fold(f64::INFINITY, f64::min);
        out.line(format!("forward {axis} refinement: errors={errs:?} min order={min}"));
        orders.insert(format!("{axis}_min_order"), summary_f64(Some(min)));
    }
    out.file("convergence.csv", |w| {
        writeln!(w, "axis,nodes,rel_l2_error,order")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))?;
        Ok(())
    })?;
    out.put("convergence", Value::Object(orders));
    Ok(())
}

/// Test functions for the semigroup check, all vanishing at zero.
const SEMIGROUP_FUNCTIONS: [TestFn; 4] =
    [("t", |t| t), ("t^2", |t| t * t), ("sin(3t)", |t| (3.0 * t).sin()), ("t*exp(-t)", |t| t * (-t).exp())];

pub fn caputo_check(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let alphas: Vec<f64> = cfg.list("caputo", "alphas")?;
    let powers: Vec<u32> = cfg.list_opt("caputo", "powers")?.unwrap_or_else(|| vec![1, 2]);
    let levels: Vec<usize> = cfg.list_opt("caputo", "nodes")?.unwrap_or_else(|| vec![257, 513, 1025, 2049]);
    let horizon: f64 = cfg.value_or("caputo", "horizon", 1.0)?;
    if levels.iter().any(|&n| n < crate::run::MIN_NODES) {
        return Err(cfg.error("caputo", "nodes", format!("needs at least {} nodes per level", crate::run::MIN_NODES)).into());
    }
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &alpha in &alphas {
        for &p in &powers {
            let pf = p as f64;
            let scale = gamma_fn(pf + 1.0)? / gamma_fn(pf + 1.0 - alpha)?;
            let errs = levels
                .iter()
                .map(|&n| {
                    let tg = TimeGrid::new(horizon, n)?;
                    let d = caputo_derivative(&TimeSeries::from_fn(tg, |t| t.powf(pf)), alpha)?;
                    let exact = TimeSeries::from_fn(tg, |t| scale * t.powf(pf - alpha));
                    Ok(d.max_abs_diff_from(&exact, 0.0))
                })
                .collect::<frade_core::Result<Vec<f64>>>()?;
            let ord = observed_orders(&errs);
            for (k, (&n, &e)) in levels.iter().zip(&errs).enumerate() {
                let o = if k == 0 || ord[k - 1].is_nan() { String::new() } else { ord[k - 1].to_string() };
                rows.push(format!("{alpha},{p},{n},{e},{o}"));
            }
            let min = ord.iter().copied().fold(f64::INFINITY, f64::min);
            let finest = *errs.last().unwrap_or(&0.0);
            out.line(format!("caputo alpha={alpha} t^{p}: finest error={finest} min order={}", fmt_opt(min)));
            summary.push(json!({ "alpha": alpha, "power": p, "finest_error": finest, "min_order": summary_f64(Some(min)) }));
        }
    }
    out.file("caputo_check.csv", |w| {
        writeln!(w, "alpha,power,nodes,max_error,order")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))?;
        Ok(())
    })?;
    out.put("caputo", summary);

    let (Some(p1), Some(p2)) = (cfg.value_opt::<f64>("semigroup", "p1")?, cfg.value_opt::<f64>("semigroup", "p2")?) else {
        return Ok(());
    };
    let mut rows = Vec::new();
    let mut worst_shrink = f64::INFINITY;
    for (name, h) in SEMIGROUP_FUNCTIONS {
        let defects = levels
            .iter()
            .map(|&n| {
                let tg = TimeGrid::new(horizon, n)?;
                let hs = TimeSeries::from_fn(tg, h);
                let nested = rl_integral(&rl_integral(&hs, p2)?, p1)?;
                let direct = rl_integral(&hs, p1 + p2)?;
                Ok(nested.max_abs_diff_from(&direct, 0.0))
            })
            .collect::<frade_core::Result<Vec<f64>>>()?;
        for (&n, &d) in levels.iter().zip(&defects) {
            rows.push(format!("{name},{n},{d}"));
        }
        for w in defects.windows(2) {
            worst_shrink = worst_shrink.min(w[0] / w[1]);
        }
    }
    out.file("semigroup.csv", |w| {
        writeln!(w, "function,nodes,max_defect")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))?;
        Ok(())
    })?;
    out.line(format!("semigroup p1={p1} p2={p2}: worst defect shrink per doubling={}", fmt_opt(worst_shrink)));
    out.put("semigroup_min_shrink", summary_f64(Some(worst_shrink)));
    Ok(())
}

fn fmt_opt(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "n/a".into()
    }
}

struct SweepSettings {
    s: Vec<f64>,
    max_growth: f64,
    threshold: Option<f64>,
}

fn sweep_settings(cfg: &Config) -> RunResult<SweepSettings> {
    let s: Vec<f64> = cfg.list_opt("sweep", "s")?.unwrap_or_else(|| DEFAULT_S.to_vec());
    Ok(SweepSettings { s, max_growth: cfg.value_or("sweep", "max_growth", 2.0)?, threshold: cfg.value_opt("sweep", "threshold")? })
}

fn region(cfg: &Config) -> RunResult<Region> {
    let pair = |key: &str| -> RunResult<Option<(f64, f64)>> {
        match cfg.list_opt::<f64>("region", key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] < v[1] => Ok(Some((v[0], v[1]))),
            Some(_) => Err(cfg.error("region", key, "expected 'lo, hi' with lo < hi").into()),
        }
    };
    Ok(Region { x: pair("x")?, y: pair("y")?, t: pair("t")?, phi_above: None })
}

/// Writes the sweep, records it in the summary and prints one line.
fn report_sweep(out: &mut Output, file: &str, label: &str, sweep: &Sweep, settings: &SweepSettings) -> RunResult<Value> {
    out.file(file, |w| write_sweep_csv(w, sweep))?;
    let ratios: Vec<Value> = sweep.ratios().into_iter().map(summary_f64).collect();
    let bounded = settings.threshold.map(|th| sweep.is_bounded(settings.max_growth, th));
    let growth_ok = sweep.growth.map(|g| g <= settings.max_growth);
    out.line(format!(
        "{label}: ratios={:?} c_hat={} growth={} bounded={}",
        sweep.ratios().iter().map(|r| r.map_or("undefined".to_string(), |v| format!("{v:.6e}"))).collect::<Vec<_>>(),
        sweep.c_hat.map_or("undefined".into(), |v| v.to_string()),
        sweep.growth.map_or("undefined".into(), |v| v.to_string()),
        bounded.or(growth_ok).map_or("undefined".into(), |b| b.to_string()),
    ));
    Ok(json!({
        "file": file,
        "s": settings.s,
        "ratios": ratios,
        "c_hat": summary_f64(sweep.c_hat),
        "growth": summary_f64(sweep.growth),
        "max_growth": settings.max_growth,
        "threshold": settings.threshold,
        "bounded": bounded.or(growth_ok),
    }))
}

fn sub_weight(cfg: &Config, g: frade_core::SpaceTimeGrid, s0: f64) -> RunResult<Weight> {
    let (dom, d) = pseudoconvexity(cfg, g)?;
    let lambda: f64 = cfg.value_or("weight", "lambda", 4.0)?;
    let alpha1: f64 = cfg.value("weight", "alpha1")?;
    let beta = match cfg.value_opt("weight", "beta")? {
        Some(b) => b,
        None => choose_beta(BetaRule::SubCauchy { horizon: g.time().horizon(), alpha1 }, d.sup_norm(&dom))?,
    };
    Ok(Weight::new(d, WeightParams::sub(lambda, s0, beta, alpha1)?))
}

fn regular_weight(cfg: &Config, g: frade_core::SpaceTimeGrid, s0: f64) -> RunResult<(Weight, f64)> {
    let (dom, d) = pseudoconvexity(cfg, g)?;
    let lambda: f64 = cfg.value_or("weight", "lambda", 4.0)?;
    let eps: f64 = cfg.value("weight", "eps")?;
    let horizon = g.time().horizon();
    let t0: f64 = cfg.value_or("weight", "t0", 0.5 * horizon)?;
    let beta = choose_beta(BetaRule::Eps { eps }, d.sup_norm(&dom))?;
    Ok((Weight::new(d, WeightParams::regular(lambda, s0, beta, t0, horizon)?), d.sup_norm(&dom)))
}

pub fn carleman_sub(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let settings = sweep_settings(cfg)?;
    let w = sub_weight(cfg, g, settings.s[0])?;
    let prob = problem(cfg, g, &[], OPERATOR_ONLY)?;
    let u = field(g, &cfg.expr("field", "u")?);
    let est = SubDiffusionEstimate::new(&u, &prob, &w, &region(cfg)?)?;
    let sweep = sweep_s(&est, &settings.s)?;
    let v = report_sweep(out, "sweep.csv", "sub-diffusion estimate", &sweep, &settings)?;
    out.put("beta", w.params.beta);
    out.put("sweep", v);
    Ok(())
}

pub fn carleman_fractional_bound(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let settings = sweep_settings(cfg)?;
    let w = sub_weight(cfg, g, settings.s[0])?;
    let alphas: Vec<f64> = cfg.list("estimate", "alphas")?;
    let c1: f64 = cfg.value_or("estimate", "c1", 1.0)?;
    let c2: f64 = cfg.value_or("estimate", "c2", 0.5)?;
    let u = field(g, &cfg.expr("field", "u")?);
    let monotone = weight_is_time_monotone(&w, g);
    out.line(format!("weight non-increasing in t at every node: {monotone}"));
    out.put("weight_time_monotone", monotone);
    let mut sweeps = Vec::new();
    for &alpha in &alphas {
        let est = FractionalBoundEstimate::new(&u, alpha, &w, c1, c2)?;
        let sweep = sweep_s(&est, &settings.s)?;
        let mut v = report_sweep(out, &format!("sweep_alpha_{alpha}.csv"), &format!("fractional bound alpha={alpha}"), &sweep, &settings)?;
        v["alpha"] = json!(alpha);
        sweeps.push(v);
    }
    out.put("sweeps", sweeps);
    Ok(())
}

pub fn carleman_parabolic(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let settings = sweep_settings(cfg)?;
    let (w, _) = regular_weight(cfg, g, settings.s[0])?;
    let tau: i32 = cfg.value_or("estimate", "tau", 0)?;
    let prob = problem(cfg, g, &[], OPERATOR_ONLY)?;
    let u = field(g, &cfg.expr("field", "u")?);
    let est = WeightedParabolicEstimate::new(&u, &prob, &w, tau)?;
    let sweep = sweep_s(&est, &settings.s)?;
    let v = report_sweep(out, "sweep.csv", &format!("weighted parabolic estimate tau={tau}"), &sweep, &settings)?;
    out.put("sweep", v);
    Ok(())
}

fn parse_ratio(cfg: &Config) -> RunResult<(u32, u32)> {
    let text = cfg.str("estimate", "order")?;
    let bad = || cfg.error("estimate", "order", format!("expected 'm/k' with positive integers, got '{text}'"));
    let (m, k) = text.split_once('/').ok_or_else(bad)?;
    Ok((m.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

pub fn carleman_rational(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let (m, k) = parse_ratio(cfg)?;
    // the order gate comes before any grid work
    let ladder = ExponentLadder::new(m, k)?;
    out.file("ladder.csv", |w| {
        writeln!(w, "j,side,s_exponent")?;
        for j in ladder.lhs_indices() {
            writeln!(w, "{j},lhs,{}", ladder.lhs_exponent(j))?;
        }
        for j in ladder.indices() {
            writeln!(w, "{j},rhs,{}", ladder.rhs_exponent(j))?;
        }
        writeln!(w, ",hessian,{}", ladder.hessian_exponent())?;
        writeln!(w, ",gradient,{}", ladder.gradient_exponent())?;
        Ok(())
    })?;
    out.put("ladder", json!({ "m": m, "k": k, "j1": ladder.j1 }));
    let g = grid(cfg)?;
    let settings = sweep_settings(cfg)?;
    let (w, d_norm) = regular_weight(cfg, g, settings.s[0])?;
    let levels: u32 = cfg.value_or("weight", "levels", 8)?;
    let eps: f64 = cfg.value("weight", "eps")?;
    let level_set = level_values(&w.params, d_norm, levels, LevelAnchor::Epsilon(eps))?;
    let band: Vec<usize> = cfg.list_opt("weight", "cutoff")?.unwrap_or_else(|| vec![1, 2]);
    if band.len() != 2 || band[0] >= band[1] || band[1] > 3 {
        return Err(cfg.error("weight", "cutoff", "expected two level indices 0 <= a < b <= 3").into());
    }
    let cut = Cutoff::new(level_set.mu(band[0]), level_set.mu(band[1]))?;
    let prob = problem(cfg, g, &[m as f64 / k as f64], EquationParts { orders_from_config: false, data: false })?;
    let u = field(g, &cfg.expr("field", "u")?);
    let est = RationalOrderEstimate::new(&u, &prob, ladder, &w, cut)?;
    let sweep = sweep_s(&est, &settings.s)?;
    let v = report_sweep(out, "sweep.csv", &format!("rational-order estimate {m}/{k}"), &sweep, &settings)?;
    out.put("sweep", v);
    Ok(())
}

fn study_summary(out: &mut Output, label: &str, study: &NoiseStudy) -> RunResult<()> {
    out.file("noise.csv", |w| study.write_csv(w))?;
    let fit = serde_json::to_value(&study.fit).expect("fit serializes");
    out.json("fit.json", &fit)?;
    out.line(format!(
        "{label} noise study: theta={} log_c={} residual={} holder_consistent={}",
        study.fit.theta, study.fit.log_c, study.fit.residual, study.fit.holder_consistent
    ));
    out.put("mean_errors", study.mean_errors.clone());
    out.put("fit", fit);
    Ok(())
}

struct NoiseSettings {
    deltas: Vec<f64>,
    seeds: Vec<u64>,
}

fn noise_settings(cfg: &Config, base: u64) -> RunResult<Option<NoiseSettings>> {
    let Some(deltas) = cfg.list_opt::<f64>("noise", "deltas")? else {
        return Ok(None);
    };
    let count: u64 = cfg.value_or("noise", "seeds", 5)?;
    if count == 0 {
        return Err(cfg.error("noise", "seeds", "needs at least one seed").into());
    }
    Ok(Some(NoiseSettings { deltas, seeds: (0..count).map(|k| sample_seed(base, k)).collect() }))
}

pub fn cauchy(cfg: &Config, seed: u64, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let prob = problem(cfg, g, &[], FULL)?;
    let face = Face::parse(cfg.str_opt("cauchy", "face").unwrap_or("x_hi"))?;
    let reg: f64 = cfg.value_or("cauchy", "reg", 1e-6)?;
    let horizon = g.time().horizon();
    let eps = match cfg.value_opt::<f64>("cauchy", "eps")? {
        Some(eps) if eps > 0.0 && 2.0 * eps < horizon => eps,
        Some(_) => return Err(cfg.error("cauchy", "eps", "expected 0 < eps < horizon/2").into()),
        None => {
            let alpha1: f64 = cfg.value("cauchy", "alpha1")?;
            let levels: u32 = cfg.value_or("cauchy", "levels", 8)?;
            cauchy_epsilon(horizon, levels, alpha1)?
        }
    };
    let window = cfg.str_opt("cauchy", "window").unwrap_or("initial");
    let t = match window {
        "initial" => (0.0, eps),
        "interior" => (eps, horizon - eps),
        other => return Err(cfg.error("cauchy", "window", format!("expected 'initial' or 'interior', got '{other}'")).into()),
    };
    let x: Vec<f64> = cfg.list("cauchy", "target_x")?;
    if x.len() != 2 || x[0] >= x[1] {
        return Err(cfg.error("cauchy", "target_x", "expected 'lo, hi' with lo < hi").into());
    }
    let target = Target { x: (x[0], x[1]), t };
    let noise = noise_settings(cfg, seed)?;

    let truth = solve_fade(&prob)?;
    let data = CauchyData::from_solution(&prob, &truth, face)?;
    let rec = lateral_cauchy_solve(&prob, &data, reg)?;
    let err = relative_error_on(&rec.u, &truth, target)?;
    let free = if face == Face::XHi { 0 } else { g.space().len() - 1 };
    let true_bdy = truth.trace(free);
    out.file("boundary.csv", |w| {
        writeln!(w, "t,h_hat,h_true")?;
        for ((t, a), b) in g.time().iter().zip(rec.boundary.values()).zip(true_bdy.values()) {
            writeln!(w, "{t},{a},{b}")?;
        }
        Ok(())
    })?;
    out.line(format!("cauchy eps={eps} target x={:?} t={:?}: exact-data relative error={err}", target.x, target.t));
    out.put("eps", eps);
    out.put("target", serde_json::to_value(target).expect("target serializes"));
    out.put("exact_error", err);
    if let Some(ns) = noise {
        let run = |delta: f64, s: u64| -> frade_core::Result<f64> {
            let rec = lateral_cauchy_solve(&prob, &data.with_noise(delta, s)?, reg)?;
            relative_error_on(&rec.u, &truth, target)
        };
        let study = noise_study(&ns.deltas, &ns.seeds, run)?;
        study_summary(out, "cauchy", &study)?;
    }
    Ok(())
}

pub fn isp(cfg: &Config, seed: u64, out: &mut Output) -> RunResult<()> {
    let g = grid(cfg)?;
    let (_, d) = pseudoconvexity(cfg, g)?;
    let prob = problem(cfg, g, &[], OPERATOR_ONLY)?;
    let r_expr = cfg.expr("isp", "r")?;
    let f_expr = cfg.expr("isp", "f")?;
    let opts =
        IspOptions { t0: cfg.value_or("isp", "t0", g.time().horizon())?, eps: cfg.value("isp", "eps")?, r0: cfg.value("isp", "r0")? };
    let tol: f64 = cfg.value_or("isp", "hypothesis_tol", 1e-2)?;
    let noise = noise_settings(cfg, seed)?;

    let r = field(g, &r_expr);
    let truth = SpaceField::from_fn(g.space(), |[x, y]| f_expr.eval(x, y, 0.0));
    let u = synthesize_history(&prob, &r, &truth)?;
    check_isp_hypotheses(&u, &r, tol)?;
    let est = reconstruct_source(&u, &r, &prob, &d, opts)?;
    let err = est.relative_error(&truth)?;
    out.file("source.csv", |w| est.write_csv(w, &truth))?;
    out.line(format!("isp t0={} eps={}: noiseless relative error={err}", opts.t0, opts.eps));
    out.put("noiseless_error", err);
    if let Some(ns) = noise {
        let run = |delta: f64, s: u64| -> frade_core::Result<f64> {
            let noisy: GridFunction = add_history_noise(&u, delta, s)?;
            reconstruct_source(&noisy, &r, &prob, &d, opts)?.relative_error(&truth)
        };
        let study = noise_study(&ns.deltas, &ns.seeds, run)?;
        study_summary(out, "isp", &study)?;
    }
    Ok(())
}

pub fn holder_fit(cfg: &Config, out: &mut Output) -> RunResult<()> {
    let deltas: Vec<f64> = cfg.list("fit", "deltas")?;
    let errors: Vec<f64> = cfg.list("fit", "errors")?;
    if deltas.len() != errors.len() {
        return Err(cfg.error("fit", "errors", format!("needs {} entries to match fit.deltas", deltas.len())).into());
    }
    let fit = fit_holder(&deltas, &errors)?;
    let v = serde_json::to_value(&fit).expect("fit serializes");
    out.json("fit.json", &v)?;
    out.line(format!(
        "holder fit: theta={} C={} residual={} holder_consistent={}",
        fit.theta,
        fit.log_c.exp(),
        fit.residual,
        fit.holder_consistent
    ));
    out.put("fit", v);
    Ok(())
}
