//! Experiment configs: TOML sections with dotted keys for tensor entries
//! (`d.1.2.1 = 0.75`), plus `FRACBAM__SECTION__KEY` environment overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use fracbam::halanay::HalanayProblem;
use fracbam::kernels::Kernel;
use fracbam::model::{Activation, BamNetwork, FieldError, History, Tensor3};
use fracbam::solver::{DelayWindow, MemoryPolicy, SolverConfig};
use fracbam::sync::{FeedbackGains, LayerHistory};
use thiserror::Error;
use toml::{Table, Value};

use crate::kernel_spec::parse_kernel;

pub const ENV_PREFIX: &str = "FRACBAM__";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Certify,
    Halanay,
    Sync,
    Sweep,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        Some(match s {
            "simulate" => Mode::Simulate,
            "certify" => Mode::Certify,
            "halanay" => Mode::Halanay,
            "sync" => Mode::Sync,
            "sweep" => Mode::Sweep,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Certify => "certify",
            Mode::Halanay => "halanay",
            Mode::Sync => "sync",
            Mode::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

/// Grid on which the kernel-condition constant is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSettings {
    pub horizon: f64,
    pub step: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncSettings {
    pub gains: FeedbackGains,
    pub response: LayerHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// mode of each run
    pub mode: Mode,
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub network: Option<BamNetwork>,
    pub solver: SolverConfig,
    pub condition: ConditionSettings,
    pub equilibrium_tol: f64,
    pub equilibrium_max_iter: usize,
    pub sync: Option<SyncSettings>,
    pub halanay: Option<HalanayProblem>,
    pub sweep: Option<SweepSettings>,
    pub output_dir: Option<PathBuf>,
    /// the effective table after all overrides
    pub table: Table,
    /// directory that relative paths resolve against
    pub base_dir: PathBuf,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "network",
        &[
            "n1", "n2", "delta", "mu", "c", "c_bar", "a", "a_bar", "input", "input_bar", "activation",
            "activation_bar",
        ],
    ),
    ("coupling", &["d", "d_bar"]),
    ("kernels", &["k", "h", "k_bar", "h_bar"]),
    ("history", &["x", "y"]),
    (
        "solver",
        &["step", "t_end", "corrector_iterations", "memory_window", "window"],
    ),
    ("equilibrium", &["tol", "max_iter"]),
    ("certify", &["omega_horizon", "omega_step", "omega_tol"]),
    ("sync", &["beta", "beta_bar", "response_x", "response_y"]),
    (
        "halanay",
        &["gamma", "r", "c", "mu", "kernel", "history", "y0", "y0_margin", "horizon"],
    ),
    ("sweep", &["mode", "param", "values"]),
    ("output", &["dir"]),
];

pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>().map_err(|e| ConfigError::Syntax(e.to_string().trim().to_string()))
}

/// A bare override value: a TOML literal if it parses as one, else a string.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Sets `path` in `table`, creating intermediate tables.
pub fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<(), String> {
    let (first, rest) = path.split_first().ok_or("empty key")?;
    if rest.is_empty() {
        table.insert(first.clone(), value);
        return Ok(());
    }
    let entry = table.entry(first.clone()).or_insert_with(|| Value::Table(Table::new()));
    set_in(entry, first, rest, value)
}

// Tables descend by key, arrays by 1-based index.
fn set_in(node: &mut Value, name: &str, path: &[String], value: Value) -> Result<(), String> {
    let (key, rest) = path.split_first().ok_or("empty key")?;
    let slot = match node {
        Value::Table(t) => {
            if rest.is_empty() {
                t.insert(key.clone(), value);
                return Ok(());
            }
            t.entry(key.clone()).or_insert_with(|| Value::Table(Table::new()))
        }
        Value::Array(a) => {
            let len = a.len();
            let i = key
                .parse::<usize>()
                .ok()
                .filter(|i| (1..=len).contains(i))
                .ok_or_else(|| format!("'{name}' has {len} entries; '{key}' is not an index 1..={len}"))?;
            let slot = &mut a[i - 1];
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        _ => return Err(format!("'{name}' is neither a section nor a list")),
    };
    set_in(slot, key, rest, value)
}

/// Applies `FRACBAM__SECTION__KEY[__INDEX..]=value` variables; others are ignored.
pub fn apply_env<I>(table: &mut Table, vars: I) -> Result<(), ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (var, raw) in vars {
        let path: Vec<String> = var[ENV_PREFIX.len()..].split("__").map(|s| s.to_lowercase()).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(ConfigError::Env {
                var,
                reason: "empty key segment".into(),
            });
        }
        set_path(table, &path, parse_value(&raw)).map_err(|reason| ConfigError::Env { var, reason })?;
    }
    Ok(())
}

pub fn load(path: &Path, env: impl IntoIterator<Item = (String, String)>, overrides: &[(Vec<String>, Value)]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut table = parse_table(&text)?;
    apply_env(&mut table, env)?;
    for (key, value) in overrides {
        set_path(&mut table, key, value.clone()).map_err(|reason| {
            ConfigError::Invalid(vec![FieldError {
                field: key.join("."),
                reason,
            }])
        })?;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    from_table(table, &base)
}

struct Reader<'a> {
    table: &'a Table,
    errs: Vec<FieldError>,
}

impl<'a> Reader<'a> {
    fn err(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.errs.push(FieldError {
            field: field.into(),
            reason: reason.into(),
        });
    }

    fn section(&self, name: &str) -> Option<&'a Table> {
        self.table.get(name).and_then(Value::as_table)
    }

    fn value(&self, section: &str, key: &str) -> Option<&'a Value> {
        self.section(section).and_then(|t| t.get(key))
    }

    fn real_opt(&mut self, section: &str, key: &str) -> Option<f64> {
        let v = self.value(section, key)?;
        match as_real(v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.err(format!("{section}.{key}"), format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn real(&mut self, section: &str, key: &str, default: f64) -> f64 {
        self.real_opt(section, key).unwrap_or(default)
    }

    fn required(&mut self, section: &str, key: &str) -> Option<f64> {
        if self.value(section, key).is_none() {
            self.err(format!("{section}.{key}"), "missing");
            return None;
        }
        self.real_opt(section, key)
    }

    fn count(&mut self, section: &str, key: &str) -> Option<usize> {
        let v = self.value(section, key);
        match v.and_then(Value::as_integer) {
            Some(n) if (1..=1_000_000).contains(&n) => Some(n as usize),
            _ => {
                let got = v.map_or("nothing".to_string(), |v| v.to_string());
                self.err(format!("{section}.{key}"), format!("expected a positive integer, got {got}"));
                None
            }
        }
    }

    fn string(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let v = self.value(section, key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.err(format!("{section}.{key}"), format!("expected a string, got {v}"));
                None
            }
        }
    }

    /// A list of `n` reals; a single number fills all entries.
    fn vector(&mut self, section: &str, key: &str, n: usize, default: Option<f64>) -> Vec<f64> {
        let field = format!("{section}.{key}");
        let Some(v) = self.value(section, key) else {
            if let Some(d) = default {
                return vec![d; n];
            }
            self.err(field, "missing");
            return vec![f64::NAN; n];
        };
        if let Some(x) = as_real(v) {
            return vec![x; n];
        }
        let Some(arr) = v.as_array() else {
            self.err(field, format!("expected a number or a list, got {v}"));
            return vec![f64::NAN; n];
        };
        if arr.len() != n {
            self.err(field, format!("expected {n} entries, got {}", arr.len()));
            return vec![f64::NAN; n];
        }
        let mut out = Vec::with_capacity(n);
        for (i, x) in arr.iter().enumerate() {
            match as_real(x) {
                Some(x) => out.push(x),
                None => {
                    self.err(format!("{field}[{}]", i + 1), format!("expected a number, got {x}"));
                    out.push(f64::NAN);
                }
            }
        }
        out
    }

    fn activations(&mut self, key: &str, n: usize) -> Vec<Activation> {
        let field = format!("network.{key}");
        let names: Vec<(String, String)> = match self.value("network", key) {
            None => vec![(field.clone(), "tanh".into()); n],
            Some(Value::String(s)) => vec![(field.clone(), s.clone()); n],
            Some(Value::Array(arr)) if arr.len() == n => arr
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("{field}[{}]", i + 1), v.as_str().unwrap_or("").to_string()))
                .collect(),
            Some(v) => {
                self.err(&field, format!("expected a name or {n} names, got {v}"));
                return vec![Activation::tanh(); n];
            }
        };
        names
            .into_iter()
            .map(|(f, name)| match name.as_str() {
                "tanh" => Activation::tanh(),
                "asinh" => Activation::asinh(),
                "linear" => Activation::linear(),
                other => {
                    self.err(f, format!("unknown activation '{other}' (tanh, asinh or linear)"));
                    Activation::tanh()
                }
            })
            .collect()
    }

    fn histories(&mut self, section: &str, key: &str, n: usize) -> Vec<History> {
        let field = format!("{section}.{key}");
        let Some(v) = self.value(section, key) else {
            return vec![History::Constant(0.0); n];
        };
        let items: Vec<&Value> = match v.as_array() {
            Some(arr) if arr.len() == n && !is_pairs(v) => arr.iter().collect(),
            _ if n == 1 => vec![v],
            _ => {
                self.err(field, format!("expected {n} entries"));
                return vec![History::Constant(0.0); n];
            }
        };
        items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let f = if n == 1 { field.clone() } else { format!("{field}[{}]", i + 1) };
                match history(v) {
                    Ok(h) => h,
                    Err(reason) => {
                        self.err(f, reason);
                        History::Constant(0.0)
                    }
                }
            })
            .collect()
    }

    fn tensor(&mut self, key: &str, dims: [usize; 3]) -> Tensor3<f64> {
        let mut out = Tensor3::filled(dims, 0.0);
        let field = format!("coupling.{key}");
        let Some(v) = self.value("coupling", key) else {
            return out;
        };
        let mut entries = Vec::new();
        if let Err(reason) = indexed(v, dims, &mut Vec::new(), &mut entries) {
            self.err(field, reason);
            return out;
        }
        for (idx, v) in entries {
            match as_real(v) {
                Some(x) if x.is_finite() => out.set(idx[0], idx[1], idx[2], x),
                _ => self.err(
                    format!("{field}.{}.{}.{}", idx[0] + 1, idx[1] + 1, idx[2] + 1),
                    format!("expected a finite number, got {v}"),
                ),
            }
        }
        out
    }

    fn kernels(&mut self, key: &str, dims: [usize; 3], base: &Path) -> Tensor3<Kernel> {
        let mut out = Tensor3::filled(dims, Kernel::zero());
        let field = format!("kernels.{key}");
        let Some(v) = self.value("kernels", key) else {
            return out;
        };
        let spec = |s: &str, f: &str, this: &mut Self| match parse_kernel(s, Some(base)) {
            Ok(k) => Some(k),
            Err(e) => {
                this.err(f, e.to_string());
                None
            }
        };
        match v {
            Value::String(s) => {
                if let Some(k) = spec(s, &field, self) {
                    out = Tensor3::filled(dims, k);
                }
            }
            Value::Table(t) => {
                let mut rest = t.clone();
                if let Some(all) = rest.remove("all") {
                    match all.as_str() {
                        Some(s) => {
                            if let Some(k) = spec(s, &format!("{field}.all"), self) {
                                out = Tensor3::filled(dims, k);
                            }
                        }
                        None => self.err(format!("{field}.all"), "expected a kernel string"),
                    }
                }
                let rest = Value::Table(rest);
                let mut entries = Vec::new();
                if let Err(reason) = indexed(&rest, dims, &mut Vec::new(), &mut entries) {
                    self.err(&field, reason);
                    return out;
                }
                for (idx, v) in entries {
                    let f = format!("{field}.{}.{}.{}", idx[0] + 1, idx[1] + 1, idx[2] + 1);
                    match v.as_str() {
                        Some(s) => {
                            if let Some(k) = spec(s, &f, self) {
                                out.set(idx[0], idx[1], idx[2], k);
                            }
                        }
                        None => self.err(f, "expected a kernel string"),
                    }
                }
            }
            _ => self.err(field, format!("expected a kernel string or indexed entries, got {v}")),
        }
        out
    }
}

fn as_real(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// `[[t, v], ...]`
fn is_pairs(v: &Value) -> bool {
    v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(|p| p.as_array().is_some()))
}

fn history(v: &Value) -> Result<History, String> {
    if let Some(x) = as_real(v) {
        return if x.is_finite() {
            Ok(History::Constant(x))
        } else {
            Err("must be finite".into())
        };
    }
    if !is_pairs(v) {
        return Err(format!("expected a number or [[t, value], ...], got {v}"));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for p in v.as_array().into_iter().flatten() {
        let pair = p.as_array().filter(|a| a.len() == 2).ok_or("each sample must be [t, value]")?;
        match (as_real(&pair[0]), as_real(&pair[1])) {
            (Some(t), Some(x)) => {
                times.push(t);
                values.push(x);
            }
            _ => return Err("samples must be numbers".into()),
        }
    }
    History::sampled(times, values)
}

/// Walks a three-level `i.j.k` table, collecting zero-based indices.
fn indexed<'v>(
    v: &'v Value,
    dims: [usize; 3],
    prefix: &mut Vec<usize>,
    out: &mut Vec<([usize; 3], &'v Value)>,
) -> Result<(), String> {
    let depth = prefix.len();
    if depth == 3 {
        out.push(([prefix[0], prefix[1], prefix[2]], v));
        return Ok(());
    }
    let t = v
        .as_table()
        .ok_or_else(|| format!("expected three indices, got {} ({})", depth, v))?;
    for (key, inner) in t {
        let i: usize = key.parse().map_err(|_| format!("'{key}' is not an index"))?;
        if i == 0 || i > dims[depth] {
            return Err(format!("index {key} out of range 1..={}", dims[depth]));
        }
        prefix.push(i - 1);
        indexed(inner, dims, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

fn unknown_keys(table: &Table, errs: &mut Vec<FieldError>) {
    let top: BTreeSet<&str> = SECTIONS.iter().map(|(s, _)| *s).chain(["mode"]).collect();
    for (key, v) in table {
        if !top.contains(key.as_str()) {
            errs.push(FieldError {
                field: key.clone(),
                reason: "unknown section or key".into(),
            });
            continue;
        }
        let Some((_, allowed)) = SECTIONS.iter().find(|(s, _)| s == key) else {
            continue;
        };
        match v.as_table() {
            Some(t) => {
                for k in t.keys().filter(|k| !allowed.contains(&k.as_str())) {
                    errs.push(FieldError {
                        field: format!("{key}.{k}"),
                        reason: "unknown key".into(),
                    });
                }
            }
            None => errs.push(FieldError {
                field: key.clone(),
                reason: "expected a section".into(),
            }),
        }
    }
}

fn network(r: &mut Reader, base: &Path) -> Option<BamNetwork> {
    r.section("network")?;
    let n1 = r.count("network", "n1");
    let n2 = r.count("network", "n2");
    let (n1, n2) = (n1?, n2?);
    if n1 > 64 || n2 > 64 {
        r.err("network.n1/n2", "at most 64 neurons per layer");
        return None;
    }
    let mut net = BamNetwork::blank(n1, n2);
    net.delta = r.required("network", "delta").unwrap_or(f64::NAN);
    net.mu = r.real("network", "mu", 1.0);
    net.c = r.real("network", "c", 0.0);
    net.c_bar = r.real("network", "c_bar", 0.0);
    net.a = r.vector("network", "a", n1, None);
    net.a_bar = r.vector("network", "a_bar", n2, None);
    net.input = r.vector("network", "input", n1, Some(0.0));
    net.input_bar = r.vector("network", "input_bar", n2, Some(0.0));
    net.g = r.activations("activation", n2);
    net.g_bar = r.activations("activation_bar", n1);
    let dims = [n2, n1, n2];
    let dims_bar = [n1, n2, n1];
    net.d = r.tensor("d", dims);
    net.d_bar = r.tensor("d_bar", dims_bar);
    net.k = r.kernels("k", dims, base);
    net.h = r.kernels("h", dims, base);
    net.k_bar = r.kernels("k_bar", dims_bar, base);
    net.h_bar = r.kernels("h_bar", dims_bar, base);
    net.history_x = r.histories("history", "x", n1);
    net.history_y = r.histories("history", "y", n2);
    Some(net)
}

fn solver(r: &mut Reader) -> SolverConfig {
    let step = r.real("solver", "step", 0.01);
    let t_end = r.real("solver", "t_end", 10.0);
    let corrector_iterations = match r.value("solver", "corrector_iterations") {
        None => 1,
        Some(_) => r.count("solver", "corrector_iterations").unwrap_or(1),
    };
    let memory = match r.real_opt("solver", "memory_window") {
        None => MemoryPolicy::Full,
        Some(w) if w > 0.0 && step > 0.0 => MemoryPolicy::Truncated {
            cells: (w / step).round().max(1.0) as usize,
        },
        Some(w) => {
            r.err("solver.memory_window", format!("must be positive (got {w})"));
            MemoryPolicy::Full
        }
    };
    let window = match r.string("solver", "window") {
        None | Some("infinite") => DelayWindow::Infinite,
        Some("since_start") => DelayWindow::SinceStart,
        Some(other) => {
            r.err("solver.window", format!("expected 'infinite' or 'since_start', got '{other}'"));
            DelayWindow::Infinite
        }
    };
    if !(step > 0.0) {
        r.err("solver.step", format!("must be positive (got {step})"));
    }
    if !(t_end > 0.0) {
        r.err("solver.t_end", format!("must be positive (got {t_end})"));
    }
    if step > 0.0 && t_end / step > 5e6 {
        r.err("solver.step", "more than 5e6 steps");
    }
    SolverConfig {
        step,
        t_end,
        corrector_iterations,
        memory,
        window,
    }
}

fn halanay(r: &mut Reader, base: &Path) -> Option<HalanayProblem> {
    r.section("halanay")?;
    let gamma = r.required("halanay", "gamma").unwrap_or(f64::NAN);
    let rate = r.required("halanay", "r").unwrap_or(f64::NAN);
    let c = r.real("halanay", "c", 0.0);
    let mu = r.real("halanay", "mu", 1.0);
    let kernel = match r.string("halanay", "kernel") {
        None => Kernel::zero(),
        Some(s) => parse_kernel(s, Some(base)).unwrap_or_else(|e| {
            r.err("halanay.kernel", e.to_string());
            Kernel::zero()
        }),
    };
    let history = r.histories("halanay", "history", 1).pop().unwrap();
    let horizon = r.real("halanay", "horizon", 10.0);
    let margin = r.real("halanay", "y0_margin", 1.01);
    let mut p = HalanayProblem {
        gamma,
        r: rate,
        c,
        mu,
        kernel,
        history,
        y0: 1.0,
        horizon,
    };
    match r.value("halanay", "y0") {
        None => p.y0 = p.minimal_y0(margin),
        Some(Value::String(s)) if s == "auto" => p.y0 = p.minimal_y0(margin),
        Some(_) => p.y0 = r.real("halanay", "y0", f64::NAN),
    }
    if !(margin > 1.0) {
        r.err("halanay.y0_margin", format!("must exceed 1 (got {margin})"));
    }
    if r.errs.is_empty() {
        if let Err(e) = p.validate() {
            r.err("halanay", e.to_string());
        }
    }
    Some(p)
}

fn sync(r: &mut Reader, net: Option<&BamNetwork>) -> Option<SyncSettings> {
    r.section("sync")?;
    let beta = r.real("sync", "beta", 0.0);
    let beta_bar = r.real("sync", "beta_bar", beta);
    let gains = match FeedbackGains::new(beta, beta_bar) {
        Ok(g) => g,
        Err(e) => {
            r.err("sync.beta", e.to_string());
            FeedbackGains { beta: 0.0, beta_bar: 0.0 }
        }
    };
    let (n1, n2) = net.map_or((0, 0), |n| (n.n1, n.n2));
    let response = LayerHistory {
        x: r.histories("sync", "response_x", n1),
        y: r.histories("sync", "response_y", n2),
    };
    Some(SyncSettings { gains, response })
}

fn sweep(r: &mut Reader) -> Option<SweepSettings> {
    r.section("sweep")?;
    let mode = match r.string("sweep", "mode").map(|s| (s, Mode::parse(s))) {
        None => Mode::Certify,
        Some((_, Some(Mode::Sweep))) => {
            r.err("sweep.mode", "a sweep cannot run sweeps");
            Mode::Certify
        }
        Some((_, Some(m))) => m,
        Some((s, None)) => {
            r.err("sweep.mode", format!("unknown mode '{s}'"));
            Mode::Certify
        }
    };
    let param = r.string("sweep", "param").unwrap_or("").to_string();
    let values = match r.value("sweep", "values") {
        None => Vec::new(),
        Some(Value::Array(a)) => a.iter().filter_map(as_real).collect(),
        Some(v) => {
            r.err("sweep.values", format!("expected a list of numbers, got {v}"));
            Vec::new()
        }
    };
    Some(SweepSettings { mode, param, values })
}

/// Builds and validates the experiment. Every problem found is reported.
pub fn from_table(table: Table, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let mut r = Reader {
        table: &table,
        errs: Vec::new(),
    };
    unknown_keys(&table, &mut r.errs);
    let mode = match table.get("mode").map(|v| (v, v.as_str().and_then(Mode::parse))) {
        Some((_, Some(m))) => Some(m),
        Some((v, None)) => {
            r.err("mode", format!("expected simulate, certify, halanay, sync or sweep, got {v}"));
            None
        }
        None => {
            r.err("mode", "missing");
            None
        }
    };
    let net = network(&mut r, base);
    let solver = solver(&mut r);
    let condition = ConditionSettings {
        horizon: r.real("certify", "omega_horizon", solver.t_end),
        step: r.real("certify", "omega_step", solver.step),
        tol: r.real("certify", "omega_tol", 1e-4),
    };
    if !(condition.horizon > 0.0 && condition.step > 0.0 && condition.step <= condition.horizon) {
        r.err("certify.omega_step", "need 0 < omega_step <= omega_horizon");
    }
    if !(condition.tol > 0.0) {
        r.err("certify.omega_tol", "must be positive");
    }
    let equilibrium_tol = r.real("equilibrium", "tol", 1e-13);
    let equilibrium_max_iter = match r.value("equilibrium", "max_iter") {
        None => 100_000,
        Some(_) => r.count("equilibrium", "max_iter").unwrap_or(1),
    };
    if !(equilibrium_tol > 0.0) {
        r.err("equilibrium.tol", "must be positive");
    }
    let halanay = halanay(&mut r, base);
    let sync = sync(&mut r, net.as_ref());
    let sweep = sweep(&mut r);
    let output_dir = r.string("output", "dir").map(|d| base.join(d));

    if let Some(net) = &net {
        if let Err(fracbam::model::NetworkError::Invalid(list)) = net.validate() {
            r.errs.extend(list);
        }
        if solver.step > 0.0 && net.mu > 0.0 {
            let ratio = net.mu / solver.step;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                r.err("solver.step", format!("must divide network.mu = {} into whole steps", net.mu));
            }
        }
    }
    if let Some(m) = mode {
        let run_mode = if m == Mode::Sweep { sweep.as_ref().map(|s| s.mode) } else { Some(m) };
        if m == Mode::Sweep && sweep.is_none() {
            r.err("sweep", "sweep mode needs a [sweep] section");
        }
        match run_mode {
            Some(Mode::Simulate | Mode::Certify | Mode::Sync) if net.is_none() => {
                r.err("network", "this mode needs a [network] section")
            }
            Some(Mode::Sync) if sync.is_none() => r.err("sync", "sync mode needs a [sync] section"),
            Some(Mode::Halanay) if halanay.is_none() => {
                r.err("halanay", "halanay mode needs a [halanay] section")
            }
            _ => {}
        }
    }
    if !r.errs.is_empty() {
        return Err(ConfigError::Invalid(r.errs));
    }
    Ok(ExperimentConfig {
        mode: mode.expect("checked above"),
        network: net,
        solver,
        condition,
        equilibrium_tol,
        equilibrium_max_iter,
        sync,
        halanay,
        sweep,
        output_dir,
        table,
        base_dir: base.to_path_buf(),
    })
}
