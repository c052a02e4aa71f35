//! Drive-response synchronization with linear feedback.
//!
//! The response copy of the network receives `-beta (z_p - x_p)` on the `x`
//! layer and `-beta_bar (w_q - y_q)` on the `y` layer, and is stepped jointly
//! with the drive as one system.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{find_equilibrium, BamNetwork, EquilibriumError, History};
use crate::solver::{caputo_residuals, simulate, SolverConfig, SolverError};
use crate::stability::{certify_bounded, certify_unbounded, CertificateError, StabilityCertificate};
use crate::trajectory::{SolveDetails, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackGains {
    pub beta: f64,
    pub beta_bar: f64,
}

impl FeedbackGains {
    pub fn new(beta: f64, beta_bar: f64) -> Result<Self, SyncError> {
        if !(beta >= 0.0 && beta.is_finite() && beta_bar >= 0.0 && beta_bar.is_finite()) {
            return Err(SyncError::Gains { beta, beta_bar });
        }
        Ok(Self { beta, beta_bar })
    }
}

/// Histories for the `x` and `y` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerHistory {
    pub x: Vec<History>,
    pub y: Vec<History>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncRun {
    pub drive: Trajectory,
    pub response: Trajectory,
    /// `response - drive`, columns `e_1..e_n1, ebar_1..ebar_n2`
    pub error: Trajectory,
    pub gains: FeedbackGains,
    /// per-step L1 Caputo residual of the error system
    pub error_residual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("feedback gains must be finite and non-negative (got {beta}, {beta_bar})")]
    Gains { beta: f64, beta_bar: f64 },
    #[error("{which} history: expected {n1}+{n2} functions, got {x}+{y}")]
    History {
        which: &'static str,
        n1: usize,
        n2: usize,
        x: usize,
        y: usize,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

fn with_history(net: &BamNetwork, h: &LayerHistory, which: &'static str) -> Result<BamNetwork, SyncError> {
    if h.x.len() != net.n1 || h.y.len() != net.n2 {
        return Err(SyncError::History {
            which,
            n1: net.n1,
            n2: net.n2,
            x: h.x.len(),
            y: h.y.len(),
        });
    }
    let mut out = net.clone();
    out.history_x = h.x.clone();
    out.history_y = h.y.clone();
    Ok(out)
}

fn split(tr: &Trajectory, range: std::ops::Range<usize>, names: Vec<String>) -> Trajectory {
    Trajectory {
        names,
        times: tr.times.clone(),
        states: tr.states.iter().map(|s| s[range.clone()].to_vec()).collect(),
        details: None,
    }
}

/// Integrates drive and response as one `2(n1 + n2)`-dimensional system.
pub fn synchronize(
    net: &BamNetwork,
    drive_history: &LayerHistory,
    response_history: &LayerHistory,
    gains: FeedbackGains,
    cfg: &SolverConfig,
) -> Result<SyncRun, SyncError> {
    let gains = FeedbackGains::new(gains.beta, gains.beta_bar)?;
    let drive = with_history(net, drive_history, "drive")?;
    let response = with_history(net, response_history, "response")?;
    let mut sys = drive.to_system();
    let off = sys.append(&response.to_system());
    let n = net.n1 + net.n2;
    for i in 0..n {
        let b = if i < net.n1 { gains.beta } else { gains.beta_bar };
        if b != 0.0 {
            sys.coupling.push((off + i, off + i, -b));
            sys.coupling.push((off + i, i, b));
        }
    }
    let joint = simulate(&sys, cfg)?;
    let names = net.state_names();
    let error_names: Vec<String> = (1..=net.n1)
        .map(|p| format!("e_{p}"))
        .chain((1..=net.n2).map(|q| format!("ebar_{q}")))
        .collect();
    let d = joint.details.as_ref().expect("solver output carries details");
    let diff = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| (0..n).map(|i| r[off + i] - r[i]).collect())
            .collect()
    };
    let error = Trajectory {
        names: error_names,
        times: joint.times.clone(),
        states: diff(&joint.states),
        details: Some(SolveDetails {
            delta: d.delta,
            step: d.step,
            lag: d.lag,
            neutral_coefficients: d.neutral_coefficients[..n].to_vec(),
            delayed_history: (0..n)
                .map(|i| {
                    d.delayed_history[off + i]
                        .iter()
                        .zip(&d.delayed_history[i])
                        .map(|(a, b)| a - b)
                        .collect()
                })
                .collect(),
            neutral: diff(&d.neutral),
            rhs: diff(&d.rhs),
        }),
    };
    let error_residual = caputo_residuals(&error).unwrap_or_default();
    Ok(SyncRun {
        drive: split(&joint, 0..n, names.clone()),
        response: split(&joint, off..off + n, names),
        error,
        gains,
        error_residual,
    })
}

/// The network with `a_p + beta` and `a_bar_q + beta_bar`: the linear part of the error system.
pub fn augmented_network(net: &BamNetwork, gains: FeedbackGains) -> BamNetwork {
    let mut out = net.clone();
    out.a.iter_mut().for_each(|a| *a += gains.beta);
    out.a_bar.iter_mut().for_each(|a| *a += gains.beta_bar);
    out
}

/// Certificate of the gain-augmented network. For unbounded activations the
/// constants that need an equilibrium use the drive network's.
pub fn sync_certificate(
    net: &BamNetwork,
    gains: FeedbackGains,
    omega: f64,
) -> Result<StabilityCertificate, SyncError> {
    let gains = FeedbackGains::new(gains.beta, gains.beta_bar)?;
    let aug = augmented_network(net, gains);
    if net.is_bounded() {
        Ok(certify_bounded(&aug, omega)?)
    } else {
        let eq = find_equilibrium(net, 1e-13, 100_000)?;
        Ok(certify_unbounded(&aug, &eq, omega)?)
    }
}

impl SyncRun {
    /// `max_i |e_i(t_n)|` at each step.
    pub fn error_norms(&self) -> Vec<f64> {
        self.error
            .states
            .iter()
            .map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    }

    /// Largest error-system residual from `t = mu` on. Closer to 0 the
    /// residual is dominated by the `t^delta` corner of the solution.
    pub fn late_residual(&self) -> f64 {
        let lag = self.error.details.as_ref().map_or(0, |d| d.lag);
        self.error_residual.iter().skip(lag).cloned().fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        let norms = self.error_norms();
        let mut out = String::new();
        let _ = writeln!(out, "beta={:.16e}", self.gains.beta);
        let _ = writeln!(out, "beta_bar={:.16e}", self.gains.beta_bar);
        let _ = writeln!(out, "error_initial={:.16e}", norms[0]);
        let _ = writeln!(out, "error_final={:.16e}", norms[norms.len() - 1]);
        let _ = writeln!(out, "error_residual_max={:.16e}", self.late_residual());
        out
    }
}
