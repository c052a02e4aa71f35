//! One run per parameter value, on a rayon pool. Results are collected in
//! value order, so the summary does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use toml::{Table, Value};

use crate::config::{from_table, set_path, ConfigError, ExperimentConfig, Mode};
use crate::runner::{execute, snapshot, write_outputs, RunError, RunOutputs};

pub const SUMMARY_HEADER: &str = "index,value,status,exit_code,verdict,neutral_gate,C_fit,max_ratio";

/// Config keys a sweep parameter writes. `c` and `beta` set both layers.
pub fn parameter_keys(param: &str) -> Result<Vec<Vec<String>>, ConfigError> {
    let keys: &[&str] = match param {
        "delta" => &["network.delta"],
        "mu" => &["network.mu"],
        "c" => &["network.c", "network.c_bar"],
        "c_bar" => &["network.c_bar"],
        "beta" => &["sync.beta", "sync.beta_bar"],
        "beta_bar" => &["sync.beta_bar"],
        "step" => &["solver.step"],
        "t_end" => &["solver.t_end"],
        "gamma" => &["halanay.gamma"],
        "r" => &["halanay.r"],
        other if other.contains('.') => &[],
        other => {
            return Err(ConfigError::Invalid(vec![fracbam::model::FieldError {
                field: "sweep.param".into(),
                reason: format!("unknown parameter '{other}'"),
            }]))
        }
    };
    if keys.is_empty() {
        return Ok(vec![param.split('.').map(str::to_string).collect()]);
    }
    Ok(keys.iter().map(|k| k.split('.').map(str::to_string).collect()).collect())
}

/// `0.6,0.7, 0.8`; an empty or blank string is an empty list.
pub fn parse_values(text: &str) -> Result<Vec<f64>, ConfigError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                ConfigError::Invalid(vec![fracbam::model::FieldError {
                    field: "sweep.values".into(),
                    reason: format!("'{}' is not a finite number", s.trim()),
                }])
            })
        })
        .collect()
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<RunOutputs, RunError>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub summary: String,
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:.16e}"))
}

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (i, row) in rows.iter().enumerate() {
        let _ = match &row.result {
            Ok(o) => writeln!(
                out,
                "{i},{:.16e},ok,0,{},{},{},{}",
                row.value,
                o.verdict.as_deref().unwrap_or(""),
                opt(o.neutral_gate),
                opt(o.c_fit),
                opt(o.max_ratio)
            ),
            Err(e) => {
                let msg: String = e.to_string().replace([',', '\n', '"'], " ");
                writeln!(out, "{i},{:.16e},error: {msg},{},,,,", row.value, e.exit_code())
            }
        };
    }
    out
}

fn member(base: &Table, base_dir: &Path, keys: &[Vec<String>], mode: Mode, value: f64) -> Result<ExperimentConfig, RunError> {
    let mut table = base.clone();
    table.insert("mode".into(), Value::String(mode.as_str().into()));
    table.remove("sweep");
    for k in keys {
        set_path(&mut table, k, Value::Float(value)).map_err(|reason| {
            RunError::Config(ConfigError::Invalid(vec![fracbam::model::FieldError {
                field: k.join("."),
                reason,
            }]))
        })?;
    }
    Ok(from_table(table, base_dir)?)
}

/// Runs the sweep and writes `run_<i>/` per value plus `summary.csv`, all
/// covered by one manifest in `dir`. Per-run failures are recorded, not raised.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[f64],
    dir: &Path,
) -> Result<SweepResult, RunError> {
    let started = Instant::now();
    let keys = parameter_keys(param)?;
    let mode = match cfg.mode {
        Mode::Sweep => cfg.sweep.as_ref().map_or(Mode::Certify, |s| s.mode),
        m => m,
    };
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            result: member(&cfg.table, &cfg.base_dir, &keys, mode, value).and_then(|c| execute(&c).map(|o| (o, snapshot(&c)))).map(|(mut o, snap)| {
                o.files.insert(crate::runner::CONFIG_SNAPSHOT.into(), snap);
                o
            }),
        })
        .collect();
    let summary = summary_csv(&rows);
    let mut files = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if let Ok(o) = &row.result {
            for (name, body) in &o.files {
                files.insert(format!("run_{i}/{name}"), body.clone());
            }
        }
    }
    files.insert("summary.csv".into(), summary.clone());
    write_outputs(dir, Mode::Sweep, &snapshot(cfg), &files, started)?;
    Ok(SweepResult { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_parameters() {
        assert_eq!(parameter_keys("c").unwrap().len(), 2);
        assert_eq!(parameter_keys("coupling.d.1.1.1").unwrap()[0], ["coupling", "d", "1", "1", "1"]);
        assert!(parameter_keys("nonsense").is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values(" ").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_values("0.6, 0.7").unwrap(), vec![0.6, 0.7]);
        assert!(parse_values("0.6,,0.7").is_err());
        assert!(parse_values("inf").is_err());
    }
}
