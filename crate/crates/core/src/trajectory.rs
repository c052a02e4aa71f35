//! Sampled solutions and their CSV form.

use std::fmt::Write as _;

use thiserror::Error;

/// What the solver knew beyond the sampled states.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDetails {
    pub delta: f64,
    pub step: f64,
    /// neutral delay in steps
    pub lag: usize,
    pub neutral_coefficients: Vec<f64>,
    /// `phi_i(t_n - mu)` for `n < lag`
    pub delayed_history: Vec<Vec<f64>>,
    /// `z_n = x_n - c x(t_n - mu)`
    pub neutral: Vec<Vec<f64>>,
    /// right-hand side at each accepted state
    pub rhs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `states[n][i]` is component `i` at `times[n]`
    pub states: Vec<Vec<f64>>,
    pub details: Option<SolveDetails>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CsvError {
    #[error("empty input")]
    Empty,
    #[error("header must start with `t` and name at least one column")]
    Header,
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
}

impl Trajectory {
    pub fn component(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(move |s| s[i])
    }

    /// Renames the columns; the count must match.
    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.names.len(), "column count mismatch");
        self.names = names;
        self
    }

    /// `t,<names>` then one row per sample, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for v in row {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(CsvError::Empty)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "t" || cols[1..].iter().any(|c| c.is_empty()) {
            return Err(CsvError::Header);
        }
        let names: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (i, line) in lines {
            let row_err = |reason: String| CsvError::Row { line: i + 1, reason };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(row_err(format!("expected {} fields, found {}", cols.len(), fields.len())));
            }
            let mut vals = Vec::with_capacity(fields.len());
            for f in &fields {
                let v: f64 = f.parse().map_err(|_| row_err(format!("`{f}` is not a number")))?;
                if !v.is_finite() {
                    return Err(row_err(format!("`{f}` is not finite")));
                }
                vals.push(v);
            }
            let t = vals[0];
            if let Some(&prev) = times.last() {
                if !(t > prev) {
                    return Err(row_err(format!("time {t} does not increase")));
                }
            }
            times.push(t);
            states.push(vals[1..].to_vec());
        }
        Ok(Self {
            names,
            times,
            states,
            details: None,
        })
    }
}
