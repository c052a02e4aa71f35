//! Executes one experiment and persists its outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fracbam::halanay::{halanay_constants, halanay_trajectory, halanay_validate};
use fracbam::kernels::{ConditionOptions, KernelConditionReport};
use fracbam::model::{find_equilibrium, BamNetwork, Equilibrium};
use fracbam::solver::simulate;
use fracbam::stability::{
    certify_bounded, certify_unbounded, check_envelope, decay_rate, measure_omega, EnvelopeReport,
    StabilityCertificate,
};
use fracbam::sync::{augmented_network, sync_certificate, synchronize, FeedbackGains, LayerHistory};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::manifest::{sha256_hex, RunManifest, FILE_NAME, TOOL};

pub const CONFIG_SNAPSHOT: &str = "config.toml";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("certificate not established: {0}")]
    Gate(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io { .. } => 1,
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Gate(_) => 4,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> RunError {
    RunError::Numeric(e.to_string())
}

/// What a run produced: file contents keyed by name, plus the headline numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutputs {
    pub files: BTreeMap<String, String>,
    pub verdict: Option<String>,
    pub certified: Option<bool>,
    pub c_fit: Option<f64>,
    pub max_ratio: Option<f64>,
    pub neutral_gate: Option<f64>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn equilibrium_text(net: &BamNetwork, eq: &Equilibrium) -> String {
    let mut out = String::new();
    for (name, v) in net.state_names().iter().zip(eq.x.iter().chain(&eq.y)) {
        let _ = writeln!(out, "{name}={}", real(*v));
    }
    let _ = writeln!(out, "residual={}", real(eq.residual));
    let _ = writeln!(out, "iterations={}", eq.iterations);
    out
}

fn series_csv(header: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = format!("{header}\n");
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{},{}", real(*t), real(*v));
    }
    out
}

fn omega(cfg: &ExperimentConfig, net: &BamNetwork) -> Result<KernelConditionReport, RunError> {
    let opts = ConditionOptions {
        tol: cfg.condition.tol,
        ..ConditionOptions::default()
    };
    measure_omega(net, cfg.condition.horizon, cfg.condition.step, opts).map_err(numeric)
}

fn certificate(net: &BamNetwork, eq: &Equilibrium, omega: f64) -> Result<StabilityCertificate, RunError> {
    if net.is_bounded() {
        certify_bounded(net, omega).map_err(numeric)
    } else {
        certify_unbounded(net, eq, omega).map_err(numeric)
    }
}

fn record_certificate(out: &mut RunOutputs, cert: &StabilityCertificate, cond: &KernelConditionReport) {
    out.files.insert("certificate.txt".into(), cert.to_report());
    out.files.insert("condition.csv".into(), series_csv("t,ratio", &cond.grid, &cond.ratios));
    out.verdict = Some(cert.verdict.as_str().to_string());
    out.certified = Some(cert.verdict.is_certified());
    out.neutral_gate = Some(cert.neutral_gate);
}

fn record_envelope(out: &mut RunOutputs, env: &EnvelopeReport, times: &[f64]) {
    out.files.insert("envelope.txt".into(), env.to_report());
    out.files.insert("envelope.csv".into(), series_csv("t,ratio", times, &env.ratios));
    out.c_fit = Some(env.c_fit);
    out.max_ratio = Some(env.max_ratio);
}

fn run_network(cfg: &ExperimentConfig, certify: bool) -> Result<RunOutputs, RunError> {
    let net = cfg.network.as_ref().expect("validated config has a network");
    let eq = find_equilibrium(net, cfg.equilibrium_tol, cfg.equilibrium_max_iter).map_err(numeric)?;
    let traj = simulate(&net.to_system(), &cfg.solver).map_err(numeric)?;
    let env = check_envelope(&traj, &eq, decay_rate(net), net.delta);
    let mut out = RunOutputs::default();
    out.files.insert("trajectory.csv".into(), traj.to_csv());
    out.files.insert("equilibrium.txt".into(), equilibrium_text(net, &eq));
    record_envelope(&mut out, &env, &traj.times);
    if certify {
        let cond = omega(cfg, net)?;
        let cert = certificate(net, &eq, cond.omega_star)?;
        record_certificate(&mut out, &cert, &cond);
    }
    Ok(out)
}

fn run_sync(cfg: &ExperimentConfig) -> Result<RunOutputs, RunError> {
    let net = cfg.network.as_ref().expect("validated config has a network");
    let s = cfg.sync.as_ref().expect("validated config has a sync section");
    let drive = LayerHistory {
        x: net.history_x.clone(),
        y: net.history_y.clone(),
    };
    let run = synchronize(net, &drive, &s.response, s.gains, &cfg.solver).map_err(numeric)?;
    let aug = augmented_network(net, s.gains);
    let cond = omega(cfg, &aug)?;
    let cert = sync_certificate(net, s.gains, cond.omega_star).map_err(numeric)?;
    let base = sync_certificate(net, FeedbackGains { beta: 0.0, beta_bar: 0.0 }, cond.omega_star).map_err(numeric)?;
    let mut summary = run.summary();
    let _ = writeln!(summary, "neutral_gate_ungained={}", real(base.neutral_gate));
    let _ = writeln!(summary, "neutral_gate={}", real(cert.neutral_gate));
    let mut out = RunOutputs::default();
    out.files.insert("drive.csv".into(), run.drive.to_csv());
    out.files.insert("response.csv".into(), run.response.to_csv());
    out.files.insert("error.csv".into(), run.error.to_csv());
    out.files.insert("sync.txt".into(), summary);
    record_certificate(&mut out, &cert, &cond);
    let norms = run.error_norms();
    out.max_ratio = Some(norms[norms.len() - 1] / norms[0].max(f64::MIN_POSITIVE));
    Ok(out)
}

fn run_halanay(cfg: &ExperimentConfig) -> Result<RunOutputs, RunError> {
    let p = cfg.halanay.as_ref().expect("validated config has a halanay section");
    let mut out = RunOutputs::default();
    let traj = halanay_trajectory(p, &cfg.solver).map_err(numeric)?;
    out.files.insert("halanay_trajectory.csv".into(), traj.to_csv());
    let consts = halanay_constants(p).map_err(numeric)?;
    out.neutral_gate = Some(consts.gate_value);
    if !consts.gate {
        out.files.insert("halanay.txt".into(), consts.to_report());
        out.verdict = Some("gate_failed".into());
        out.certified = Some(false);
        return Ok(out);
    }
    match halanay_validate(p, &cfg.solver) {
        Ok(rep) => {
            out.files.insert("halanay.txt".into(), rep.to_report());
            out.files.insert("halanay_ratios.csv".into(), rep.ratios_csv());
            out.verdict = Some("envelope_holds".into());
            out.certified = Some(true);
            out.max_ratio = rep.envelope_ratios.iter().cloned().reduce(f64::max);
            Ok(out)
        }
        // a violated envelope is a numeric failure of the claim, not a config problem
        Err(e) => Err(numeric(e)),
    }
}

/// Runs the pipeline of `cfg.mode` (a single run; sweeps go through [`crate::sweep`]).
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutputs, RunError> {
    match cfg.mode {
        Mode::Simulate => run_network(cfg, false),
        Mode::Certify => run_network(cfg, true),
        Mode::Sync => run_sync(cfg),
        Mode::Halanay => run_halanay(cfg),
        Mode::Sweep => Err(RunError::Config(ConfigError::Syntax(
            "sweep configs run through the sweep command".into(),
        ))),
    }
}

pub fn snapshot(cfg: &ExperimentConfig) -> String {
    toml::to_string(&cfg.table).expect("a parsed table serializes")
}

fn io(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Writes the files, the config snapshot and a manifest covering them.
pub fn write_outputs(
    dir: &Path,
    mode: Mode,
    config_snapshot: &str,
    files: &BTreeMap<String, String>,
    started: Instant,
) -> Result<RunManifest, RunError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let write = |name: &str, body: &str| {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        }
        fs::write(&path, body).map_err(|e| io(&path, e))
    };
    write(CONFIG_SNAPSHOT, config_snapshot)?;
    for (name, body) in files {
        write(name, body)?;
    }
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        mode: mode.as_str().to_string(),
        config_sha256: sha256_hex(config_snapshot.as_bytes()),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: files.iter().map(|(k, v)| (k.clone(), sha256_hex(v.as_bytes()))).collect(),
    };
    write(FILE_NAME, &manifest.render())?;
    Ok(manifest)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub require_certified: bool,
}

/// `--out`, else `[output] dir`, else `runs/<config stem>` in the working directory.
pub fn output_dir(cfg: &ExperimentConfig, config_path: &Path, opts: &RunOptions) -> PathBuf {
    opts.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| {
        let stem = config_path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("runs").join(stem)
    })
}

/// Runs a loaded config and writes its outputs. Fails with a gate error after
/// writing when `require_certified` is set and no certificate was established.
pub fn run_config(cfg: &ExperimentConfig, dir: &Path, opts: &RunOptions) -> Result<RunOutputs, RunError> {
    let started = Instant::now();
    let out = execute(cfg)?;
    write_outputs(dir, cfg.mode, &snapshot(cfg), &out.files, started)?;
    if opts.require_certified && out.certified != Some(true) {
        let why = match (&out.verdict, cfg.mode) {
            (Some(v), _) => format!("verdict {v}"),
            (None, m) => format!("{m} mode produces no certificate"),
        };
        return Err(RunError::Gate(why));
    }
    Ok(out)
}
