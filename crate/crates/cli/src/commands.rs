use std::fs;
use std::path::Path;

use anyhow::Context;
use rrw_core::config::SolverConfig;
use rrw_core::dp_oracle::{compare, dp_solve_fitted, Comparison, DpGrid};
use rrw_core::export::{self, num};
use rrw_core::increments::IncrementModel;
use rrw_core::mc_engine::{compare_extreme_to_theory, run, tail_cells, SimConfig};
use rrw_core::mlp_solver::{rate_curve, solve_path_with};
use serde_json::{json, Value};

use crate::args::{Cli, Command, CurveArgs, Format, PathArgs, SimArgs, SolverArgs, VerifyArgs};
use crate::error::CliError;
use crate::manifest::{sidecar, Recorder};

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::config("--workers must be at least 1"));
        }
        // ignore the error if a pool already exists (only possible in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match cli.command {
        Command::Path(a) => cmd_path(a),
        Command::RateCurve(a) => cmd_rate_curve(a),
        Command::Simulate(a) => cmd_simulate(a, cli.workers),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn load_model(arg: &str) -> Result<(IncrementModel, Value), CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading model file {arg}"))?
    };
    let model = IncrementModel::from_json(&text)?;
    let echo = serde_json::to_value(model.spec().expect("built-in family")).expect("spec serializes");
    Ok((model, echo))
}

fn solver_config(a: &SolverArgs) -> Result<SolverConfig, CliError> {
    if !(a.gradient_margin >= 0.0 && a.gradient_margin.is_finite()) {
        return Err(CliError::config("--gradient-margin must be a finite nonnegative number"));
    }
    Ok(SolverConfig { gradient_margin: a.gradient_margin, ..SolverConfig::default() })
}

fn format_of(path: &Path) -> Result<Format, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("csv") | None => Ok(Format::Csv),
        Some(other) => Err(CliError::config(format!("unsupported output extension .{other}"))),
    }
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn path_summary(p: &rrw_core::mlp_solver::MostLikelyPath) -> Value {
    json!({
        "z": num(p.z),
        "rate": export::ext(p.rate_value),
        "lambda_star": export::ext(p.lambda_star),
        "t0": num(p.t0),
        "t00": num(p.t00),
        "t1": num(p.t1),
        "jump": num(p.jump),
        "endpoint": num(p.endpoint),
        "branch": p.branch,
        "regime": p.regime().label(),
        "start_window": [num(p.start_window[0]), num(p.start_window[1])],
        "flat_prefix": p.flat_prefix,
    })
}

fn cmd_path(a: PathArgs) -> Result<(), CliError> {
    let (model, echo) = load_model(&a.model)?;
    let cfg = solver_config(&a.solver)?;
    if a.samples < 2 {
        return Err(CliError::config("--samples must be at least 2"));
    }
    let path = solve_path_with(&model, a.z, &cfg)?;
    match &a.out {
        None => match a.format {
            Format::Csv => print!("{}", export::path_csv(&model, &path, a.samples)),
            Format::Json => print_json(&export::path_json(&model, &path, a.samples)),
        },
        Some(out) => {
            let config = json!({ "model": echo, "z": a.z, "samples": a.samples, "gradient_margin": cfg.gradient_margin });
            let mut rec = Recorder::new("path", config, None);
            match format_of(out)? {
                Format::Json => rec.write_json(out, export::path_json(&model, &path, a.samples))?,
                Format::Csv => rec.write_csv(out, &export::path_csv(&model, &path, a.samples))?,
            }
            let manifest = rec.finish(&sidecar(out, "manifest.json"))?;
            let mut s = path_summary(&path);
            s["manifest"] = json!(manifest.display().to_string());
            print_json(&s);
        }
    }
    Ok(())
}

fn cmd_rate_curve(a: CurveArgs) -> Result<(), CliError> {
    let (model, echo) = load_model(&a.model)?;
    let cfg = solver_config(&a.solver)?;
    if a.points < 2 || !(a.z_max > a.z_min) || a.z_min < 0.0 {
        return Err(CliError::config("need 0 <= z-min < z-max and at least 2 points"));
    }
    let grid: Vec<f64> = (0..a.points)
        .map(|i| a.z_min + (a.z_max - a.z_min) * i as f64 / (a.points - 1) as f64)
        .collect();
    let curve = rate_curve(&model, &grid, &cfg);
    let curve_json = || {
        let pts: Vec<Value> = curve
            .points
            .iter()
            .map(|p| json!({ "z": num(p.z), "rate": export::ext(p.rate), "path": p.path.as_ref().map(path_summary) }))
            .collect();
        json!({ "model": echo, "points": pts })
    };
    match &a.out {
        None => match a.format {
            Format::Csv => print!("{}", export::curve_csv(&curve)),
            Format::Json => {
                let mut v = curve_json();
                v["transitions"] = export::transitions_json(&curve)["transitions"].clone();
                print_json(&v);
            }
        },
        Some(out) => {
            let config = json!({
                "model": echo, "z_min": a.z_min, "z_max": a.z_max, "points": a.points,
                "gradient_margin": cfg.gradient_margin,
            });
            let mut rec = Recorder::new("rate-curve", config, None);
            match format_of(out)? {
                Format::Json => rec.write_json(out, curve_json())?,
                Format::Csv => rec.write_csv(out, &export::curve_csv(&curve))?,
            }
            let tpath = sidecar(out, "transitions.json");
            let transitions = export::transitions_json(&curve);
            rec.write_json(&tpath, transitions.clone())?;
            let manifest = rec.finish(&sidecar(out, "manifest.json"))?;
            print_json(&json!({
                "points": curve.points.len(),
                "transitions": transitions["transitions"],
                "manifest": manifest.display().to_string(),
            }));
        }
    }
    Ok(())
}

fn cmd_simulate(a: SimArgs, workers: Option<usize>) -> Result<(), CliError> {
    let (model, echo) = load_model(&a.model)?;
    let cfg = solver_config(&a.solver)?;
    let seed = match std::env::var("RRW_SEED") {
        Ok(s) => s.trim().parse::<u64>().map_err(|_| CliError::config(format!("RRW_SEED is not a u64: {s}")))?,
        Err(_) => a.seed,
    };
    if a.n == 0 || a.reps == 0 {
        return Err(CliError::config("--n and --reps must be at least 1"));
    }
    let mut sim = SimConfig::new(model.clone(), a.n, a.reps, seed);
    sim.thresholds = a.thresholds.clone();
    sim.keep_extreme = a.keep_extreme;
    sim.workers = workers;
    let outcome = run(&sim)?;
    // worker count is deliberately left out: it does not change results
    let config = json!({
        "model": echo, "n": a.n, "reps": a.reps, "thresholds": a.thresholds,
        "keep_extreme": a.keep_extreme, "gradient_margin": cfg.gradient_margin,
    });
    let mut rec = Recorder::new("simulate", config, Some(seed));
    let mut summary = export::outcome_json(&model, &outcome);
    let comparison = if a.keep_extreme {
        match compare_extreme_to_theory(&outcome, &model, &cfg) {
            Ok(Some(c)) => Some(json!({
                "z_obs": num(c.z_obs), "sup_distance": num(c.sup_distance), "l1_distance": num(c.l1_distance),
                "max_psi": num(c.max_psi), "shift": num(c.shift), "aligned_by_min_sup": c.aligned,
            })),
            Ok(None) => None,
            Err(e) => Some(json!({ "error": e.to_string() })),
        }
    } else {
        None
    };
    if let Some(c) = &comparison {
        summary["extreme_vs_theory"] = c.clone();
    }
    let dir = &a.out_dir;
    rec.write_json(&dir.join("outcome.json"), summary.clone())?;
    rec.write_csv(&dir.join("tail_report.csv"), &export::tail_csv(&tail_cells(&outcome)))?;
    if let Some(csv) = export::extreme_csv(&outcome) {
        rec.write_csv(&dir.join("extreme_path.csv"), &csv)?;
    }
    let manifest = rec.finish(&dir.join("manifest.json"))?;
    print_json(&json!({
        "extreme_mean": num(outcome.extreme_mean),
        "mean_wbar": num(outcome.mean_wbar),
        "extreme_vs_theory": comparison,
        "manifest": manifest.display().to_string(),
    }));
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let (model, echo) = load_model(&a.model)?;
    let cfg = solver_config(&a.solver)?;
    let [n_t, n_h, n_a] = a.grid[..] else {
        return Err(CliError::config("--grid takes exactly three counts n_t,n_h,n_a"));
    };
    DpGrid::new(n_t, n_h, n_a, 1.0, 1.0)?;
    let (cmp, sol) = if a.z == 0.0 {
        let sol = dp_solve_fitted(&model, 0.0, n_t, n_h, n_a)?;
        (Comparison { analytic: 0.0, dp: sol.cost, rel_gap: 0.0, h_max: sol.grid.h_max }, sol)
    } else {
        compare(&model, a.z, n_t, n_h, n_a, &cfg)?
    };
    let report = json!({
        "model": echo, "z": num(a.z), "grid": [n_t, n_h, n_a], "h_max": num(cmp.h_max),
        "max_span": sol.grid.max_span, "analytic": num(cmp.analytic), "dp": num(cmp.dp),
        "rel_gap": num(cmp.rel_gap), "dp_area": num(sol.area),
    });
    if let Some(out) = &a.out {
        let config = json!({ "model": echo, "z": a.z, "grid": [n_t, n_h, n_a], "gradient_margin": cfg.gradient_margin });
        let mut rec = Recorder::new("verify", config, None);
        match format_of(out)? {
            Format::Json => rec.write_json(out, export::dp_json(&model, a.z, &sol))?,
            Format::Csv => rec.write_csv(out, &export::dp_csv(&sol))?,
        }
        let manifest = rec.finish(&sidecar(out, "manifest.json"))?;
        let mut r = report;
        r["manifest"] = json!(manifest.display().to_string());
        print_json(&r);
    } else {
        print_json(&report);
    }
    Ok(())
}
