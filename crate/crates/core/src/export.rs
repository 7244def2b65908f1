//! Plot-ready JSON and CSV renderings. All numbers carry 12 significant
//! digits.

use serde_json::{json, Map, Value};

use crate::dp_oracle::DpSolution;
use crate::extended::Extended;
use crate::increments::{IncrementModel, ModelError};
use crate::mc_engine::{SimOutcome, TailCell};
use crate::mlp_solver::{eval_path, RateCurve, MostLikelyPath};

pub const PATH_CSV_HEADER: &str = "t,psi";
pub const EXTREME_CSV_HEADER: &str = "k,W_k";
pub const TAIL_CSV_HEADER: &str = "n,r,side,count,R,log_freq_over_n,lo,hi";
pub const CURVE_CSV_HEADER: &str = "z,rate,regime,t0,t00,t1,jump,lambda_star,endpoint";

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest text of `x` rounded to 12 significant digits; `inf`, `-inf`,
/// `nan` for non-finite values.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        let r = round12(x);
        if r != 0.0 && (r.abs() < 1e-6 || r.abs() >= 1e15) {
            format!("{r:e}")
        } else {
            format!("{r}")
        }
    }
}

/// JSON number rounded to 12 digits, or the strings used for non-finite
/// values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round12(x))
    } else {
        Value::String(fmt12(x))
    }
}

pub fn ext(x: Extended) -> Value {
    num(x.to_f64())
}

/// Uniform grid `t_i = i/(samples - 1)`.
pub fn sample_times(samples: usize) -> Vec<f64> {
    let n = samples.max(2) - 1;
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn model_value(model: &IncrementModel) -> Value {
    match model.spec() {
        Ok(spec) => serde_json::to_value(spec).expect("spec serializes"),
        Err(ModelError::NotSerializable(label)) => json!({ "family": "custom", "label": label }),
        Err(_) => Value::Null,
    }
}

pub fn path_json(model: &IncrementModel, path: &MostLikelyPath, samples: usize) -> Value {
    let s: Vec<Value> = sample_times(samples)
        .into_iter()
        .map(|t| json!({ "t": num(t), "psi": num(eval_path(path, model, t)) }))
        .collect();
    json!({
        "model": model_value(model),
        "z": num(path.z),
        "t0": num(path.t0),
        "t00": num(path.t00),
        "t1": num(path.t1),
        "jump": num(path.jump),
        "lambda_star": ext(path.lambda_star),
        "endpoint": num(path.endpoint),
        "rate": ext(path.rate_value),
        "branch": path.branch,
        "start_window": [num(path.start_window[0]), num(path.start_window[1])],
        "flat_prefix": path.flat_prefix,
        "samples": s,
    })
}

pub fn path_csv(model: &IncrementModel, path: &MostLikelyPath, samples: usize) -> String {
    let mut out = String::from(PATH_CSV_HEADER);
    out.push('\n');
    for t in sample_times(samples) {
        out.push_str(&format!("{},{}\n", fmt12(t), fmt12(eval_path(path, model, t))));
    }
    out
}

/// Excursion summary of a lattice path: first and last positive times.
fn dp_support(sol: &DpSolution) -> (f64, f64, f64, f64) {
    let n = sol.path.len() - 1;
    let dt = 1.0 / n as f64;
    let first = sol.path.iter().position(|&h| h > 0.0);
    let last = sol.path.iter().rposition(|&h| h > 0.0);
    match (first, last) {
        (Some(f), Some(l)) => {
            let t0 = f.saturating_sub(1) as f64 * dt;
            let t1 = if l == n { 1.0 } else { (l + 1) as f64 * dt };
            let jump = if f == 0 { sol.path[0] } else { 0.0 };
            (t0, t1, jump, sol.path[n])
        }
        _ => (0.0, 0.0, 0.0, 0.0),
    }
}

pub fn dp_json(model: &IncrementModel, z: f64, sol: &DpSolution) -> Value {
    let n = sol.path.len() - 1;
    let (t0, t1, jump, endpoint) = dp_support(sol);
    let s: Vec<Value> = sol
        .path
        .iter()
        .enumerate()
        .map(|(i, &h)| json!({ "t": num(i as f64 / n as f64), "psi": num(h) }))
        .collect();
    json!({
        "method": "dp",
        "model": model_value(model),
        "z": num(z),
        "t0": num(t0),
        "t00": num(t0),
        "t1": num(t1),
        "jump": num(jump),
        "lambda_star": Value::Null,
        "endpoint": num(endpoint),
        "rate": num(sol.cost),
        "area": num(sol.area),
        "grid": {
            "n_t": sol.grid.n_t, "n_h": sol.grid.n_h, "n_a": sol.grid.n_a,
            "h_max": num(sol.grid.h_max), "a_max": num(sol.grid.a_max), "max_span": sol.grid.max_span,
        },
        "samples": s,
    })
}

pub fn dp_csv(sol: &DpSolution) -> String {
    let n = sol.path.len() - 1;
    let mut out = String::from(PATH_CSV_HEADER);
    out.push('\n');
    for (i, &h) in sol.path.iter().enumerate() {
        out.push_str(&format!("{},{}\n", fmt12(i as f64 / n as f64), fmt12(h)));
    }
    out
}

pub fn curve_csv(curve: &RateCurve) -> String {
    let mut out = String::from(CURVE_CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        match &p.path {
            Some(path) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt12(p.z),
                fmt12(p.rate.to_f64()),
                path.regime().label(),
                fmt12(path.t0),
                fmt12(path.t00),
                fmt12(path.t1),
                fmt12(path.jump),
                fmt12(path.lambda_star.to_f64()),
                fmt12(path.endpoint),
            )),
            None => out.push_str(&format!("{},{},infeasible,,,,,,\n", fmt12(p.z), fmt12(p.rate.to_f64()))),
        }
    }
    out
}

pub fn transitions_json(curve: &RateCurve) -> Value {
    let list: Vec<Value> = curve
        .transitions
        .iter()
        .map(|t| {
            json!({
                "z": num(t.z), "lo": num(t.lo), "hi": num(t.hi),
                "from": t.from.label(), "to": t.to.label(),
            })
        })
        .collect();
    json!({ "model": model_value(&curve.model), "transitions": list })
}

pub fn extreme_csv(outcome: &SimOutcome) -> Option<String> {
    let w = outcome.extreme_path.as_ref()?;
    let mut out = String::from(EXTREME_CSV_HEADER);
    out.push('\n');
    for (k, x) in w.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt12(*x)));
    }
    Some(out)
}

pub fn tail_csv(cells: &[TailCell]) -> String {
    let mut out = String::from(TAIL_CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.n,
            fmt12(c.r),
            c.side.as_str(),
            c.count,
            c.replications,
            fmt12(c.log_freq_over_n),
            fmt12(c.lo),
            fmt12(c.hi),
        ));
    }
    out
}

pub fn outcome_json(model: &IncrementModel, outcome: &SimOutcome) -> Value {
    let tails: Vec<Value> = outcome
        .tail_counts
        .iter()
        .map(|t| json!({ "r": num(t.r), "below": t.below, "above": t.above }))
        .collect();
    let mut m = Map::new();
    m.insert("model".into(), model_value(model));
    m.insert("n".into(), json!(outcome.n));
    m.insert("replications".into(), json!(outcome.replications));
    m.insert("seed".into(), json!(outcome.seed));
    m.insert("tail_counts".into(), Value::Array(tails));
    m.insert("extreme_mean".into(), num(outcome.extreme_mean));
    m.insert("extreme_index".into(), json!(outcome.extreme_index));
    m.insert("mean_wbar".into(), num(outcome.mean_wbar));
    if let Some(w) = &outcome.wbar_samples {
        m.insert("wbar_samples".into(), Value::Array(w.iter().map(|&x| num(x)).collect()));
    }
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp_solver::solve_path;

    #[test]
    fn twelve_digit_formatting() {
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2.0 / 3.0), "0.666666666667");
        assert_eq!(fmt12(0.25), "0.25");
        assert_eq!(fmt12(1e-20 / 3.0), "3.33333333333e-21");
        assert_eq!(fmt12(f64::INFINITY), "inf");
        assert_eq!(fmt12(-0.0), "-0");
    }

    #[test]
    fn path_exports() {
        let m = IncrementModel::gaussian(1.0, 1.0).unwrap();
        let p = solve_path(&m, 1.0 / 6.0).unwrap();
        let csv = path_csv(&m, &p, 3);
        assert_eq!(csv, "t,psi\n0,0\n0.5,0.25\n1,0\n");
        let j = path_json(&m, &p, 3);
        assert_eq!(j["model"]["family"], "gaussian");
        assert_eq!(j["rate"], json!(0.666666666667));
        assert_eq!(j["samples"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn linear_path_reports_infinite_multiplier() {
        let m = IncrementModel::bernoulli(1.0 / 3.0).unwrap();
        let p = solve_path(&m, 0.5).unwrap();
        assert_eq!(path_json(&m, &p, 2)["lambda_star"], "inf");
    }
}
