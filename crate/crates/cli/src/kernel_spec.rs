//! Text form of a delay kernel, as written in config files.
//!
//! ```text
//! zero
//! exp(5)                    e^{-5t}
//! exp(6, 0.5)               0.5 e^{-6t}
//! table(0:1, 0.5:0.4, 1:0)  piecewise linear samples t:value
//! table(0:1, 1:0.2; tail=2) samples continued by 0.2 e^{-2(t-1)}
//! csv(kernel.csv; tail=2)   samples read from a two-column file
//! ```

use std::fs;
use std::path::Path;

use fracbam::kernels::{Kernel, TableKernel};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelSpecError {
    #[error("unknown kernel form '{0}' (expected zero, exp(..), table(..) or csv(..))")]
    Form(String),
    #[error("malformed kernel '{spec}': {reason}")]
    Syntax { spec: String, reason: String },
    #[error("kernel file {path}: {reason}")]
    File { path: String, reason: String },
    #[error("invalid kernel '{spec}': {reason}")]
    Invalid { spec: String, reason: String },
}

fn syntax(spec: &str, reason: impl Into<String>) -> KernelSpecError {
    KernelSpecError::Syntax {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn number(spec: &str, s: &str) -> Result<f64, KernelSpecError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| syntax(spec, format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(syntax(spec, format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

/// `body` split at an optional `; tail=rate`.
fn split_tail<'a>(spec: &str, body: &'a str) -> Result<(&'a str, Option<f64>), KernelSpecError> {
    match body.split_once(';') {
        None => Ok((body, None)),
        Some((head, opt)) => {
            let (key, value) = opt
                .split_once('=')
                .ok_or_else(|| syntax(spec, "expected 'tail=<rate>' after ';'"))?;
            if key.trim() != "tail" {
                return Err(syntax(spec, format!("unknown option '{}'", key.trim())));
            }
            Ok((head, Some(number(spec, value)?)))
        }
    }
}

fn table(spec: &str, times: Vec<f64>, values: Vec<f64>, tail: Option<f64>) -> Result<Kernel, KernelSpecError> {
    TableKernel::new(times, values, tail)
        .map(Kernel::Table)
        .map_err(|e| KernelSpecError::Invalid {
            spec: spec.to_string(),
            reason: e.to_string(),
        })
}

/// Parses one kernel. `base` resolves relative `csv(..)` paths; without it
/// file kernels are rejected.
pub fn parse_kernel(spec: &str, base: Option<&Path>) -> Result<Kernel, KernelSpecError> {
    let s = spec.trim();
    if s == "zero" {
        return Ok(Kernel::zero());
    }
    let open = s.find('(').ok_or_else(|| KernelSpecError::Form(s.to_string()))?;
    if !s.ends_with(')') {
        return Err(syntax(s, "missing ')'"));
    }
    let name = s[..open].trim();
    let body = &s[open + 1..s.len() - 1];
    match name {
        "exp" => {
            let args: Vec<&str> = body.split(',').collect();
            let (rate, weight) = match args.as_slice() {
                [r] => (number(s, r)?, 1.0),
                [r, w] => (number(s, r)?, number(s, w)?),
                _ => return Err(syntax(s, "exp takes a rate and an optional weight")),
            };
            Kernel::exponential(rate, weight).map_err(|e| KernelSpecError::Invalid {
                spec: s.to_string(),
                reason: e.to_string(),
            })
        }
        "table" => {
            let (points, tail) = split_tail(s, body)?;
            let mut times = Vec::new();
            let mut values = Vec::new();
            for p in points.split(',') {
                let (t, v) = p.split_once(':').ok_or_else(|| syntax(s, format!("'{}' is not t:value", p.trim())))?;
                times.push(number(s, t)?);
                values.push(number(s, v)?);
            }
            table(s, times, values, tail)
        }
        "csv" => {
            let (path, tail) = split_tail(s, body)?;
            let base = base.ok_or_else(|| KernelSpecError::File {
                path: path.trim().to_string(),
                reason: "file kernels need a config location".into(),
            })?;
            let full = base.join(path.trim());
            let text = fs::read_to_string(&full).map_err(|e| KernelSpecError::File {
                path: full.display().to_string(),
                reason: e.to_string(),
            })?;
            let (times, values) = read_samples(&text).map_err(|reason| KernelSpecError::File {
                path: full.display().to_string(),
                reason,
            })?;
            table(s, times, values, tail)
        }
        _ => Err(KernelSpecError::Form(name.to_string())),
    }
}

/// Two numeric columns; a non-numeric first line is taken as a header.
fn read_samples(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                times.push(v[0]);
                values.push(v[1]);
            }
            None if i == 0 => continue,
            _ => return Err(format!("line {}: expected 't,value'", i + 1)),
        }
    }
    Ok((times, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_forms() {
        assert_eq!(parse_kernel("exp(5)", None).unwrap(), Kernel::exponential(5.0, 1.0).unwrap());
        assert_eq!(parse_kernel(" exp(6, 0.5) ", None).unwrap(), Kernel::exponential(6.0, 0.5).unwrap());
        assert!(parse_kernel("zero", None).unwrap().is_zero());
    }

    #[test]
    fn table_with_tail() {
        let k = parse_kernel("table(0:1, 1:0.5; tail=2)", None).unwrap();
        assert!((k.eval(0.5) - 0.75).abs() < 1e-15);
        assert!((k.total_mass() - (0.75 + 0.25)).abs() < 1e-9);
    }

    #[test]
    fn malformed_specs() {
        for bad in ["", "exp", "exp(", "exp()", "exp(-1)", "exp(1,2,3)", "gauss(1)", "table(0:1; tail)", "table(1:1)", "table(0:1, 1:1)", "csv(x.csv)", "exp(nan)"] {
            assert!(parse_kernel(bad, None).is_err(), "{bad}");
        }
    }
}
