//! CSV and JSON renderings of experiment results.
//!
//! Wall times are left out unless asked for, so that equal seeds give
//! byte-identical files.

use std::io::Write;

use serde_json::Value;

use crate::engine::ExperimentResult;
use crate::error::Result;

pub const CSV_COLUMNS: [&str; 16] = [
    "kind",
    "algorithm",
    "n",
    "window",
    "snr_db",
    "trial",
    "trial_seed",
    "status",
    "error",
    "iterations",
    "converged",
    "count",
    "failed",
    "median",
    "mean",
    "max",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One `trial` row per trial, then one `aggregate` row per
/// (algorithm, window, snr) group.
pub fn write_csv(w: impl Write, result: &ExperimentResult, timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if timing {
        header.push("seconds");
    }
    out.write_record(&header)?;
    for t in &result.trials {
        let mut row = vec![
            "trial".to_string(),
            t.algorithm.clone(),
            t.n.to_string(),
            t.window.clone(),
            format!("{:?}", t.snr_db),
            t.trial.to_string(),
            t.trial_seed.to_string(),
            t.status.clone(),
            format!("{:?}", t.error),
            opt(t.iterations),
            opt(t.converged),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ];
        if timing {
            row.push(format!("{:?}", t.seconds));
        }
        out.write_record(&row)?;
    }
    for a in &result.aggregates {
        let mut row = vec![
            "aggregate".to_string(),
            a.algorithm.clone(),
            a.n.to_string(),
            a.window.clone(),
            format!("{:?}", a.snr_db),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            a.count.to_string(),
            a.failed.to_string(),
            format!("{:?}", a.median),
            format!("{:?}", a.mean),
            format!("{:?}", a.max),
        ];
        if timing {
            row.push(format!("{:?}", a.mean_seconds));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

fn strip_key(v: &mut Value, key: &str) {
    match v {
        Value::Object(map) => {
            map.remove(key);
            map.values_mut().for_each(|c| strip_key(c, key));
        }
        Value::Array(items) => items.iter_mut().for_each(|c| strip_key(c, key)),
        _ => {}
    }
}

pub fn to_json(result: &ExperimentResult, timing: bool) -> Result<Value> {
    let mut v = serde_json::to_value(result)?;
    if !timing {
        strip_key(&mut v, "seconds");
        strip_key(&mut v, "mean_seconds");
    }
    Ok(v)
}

pub fn write_json(mut w: impl Write, result: &ExperimentResult, timing: bool) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &to_json(result, timing)?)?;
    writeln!(w)?;
    Ok(())
}
