//! Numerical check of the fractional Halanay inequality with neutral and
//! distributed delay:
//! `D^g [y(t) - c y(t - mu)] <= -r y(t) + int_0^inf h(s) y(t - s) ds`
//! implies `y(t) <= Lambda E_g(-r t^g)`.
//!
//! The equality version of the inequality is simulated and the per-interval
//! envelope bounds `3 B y0 sum_{l<=k} (V W c)^l / (1 - M)` are checked on
//! every grid point.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gamma::{gamma, reflection_product};
use crate::kernels::{check_condition_k1, ConditionError, ConditionOptions, Kernel};
use crate::mittag_leffler::eval_unchecked;
use crate::model::{Activation, History};
use crate::solver::{simulate, DelayWindow, NeutralSystem, Product, Signal, SolverConfig, SolverError};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct HalanayProblem {
    pub gamma: f64,
    pub r: f64,
    pub c: f64,
    pub mu: f64,
    pub kernel: Kernel,
    pub history: History,
    /// bound with `|phi(s)| < y0 E_g(-r (s + mu)^g)` on `[-mu, 0]`
    pub y0: f64,
    /// horizon over which the kernel constant `M` is measured
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HalanayError {
    #[error("halanay.{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("history exceeds y0 E(-r (s + mu)^g) at s = {s}: |phi| = {value}, bound {bound}")]
    History { s: f64, value: f64, bound: f64 },
    #[error("Halanay gate fails: M = {m}, [1 + Gamma(1+g)Gamma(1-g)] V c = {gate_value}")]
    Gate { m: f64, gate_value: f64 },
    #[error("envelope violated at t = {t} (interval {interval}): {lhs} > {bound}")]
    EnvelopeViolation {
        t: f64,
        interval: usize,
        lhs: f64,
        bound: f64,
    },
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalanayReport {
    /// `1/(r mu^g) + 2^g Gamma(1-g)`, the larger reading
    pub v_const: f64,
    /// `Gamma(1+g) V`
    pub v_exact: f64,
    pub b_const: f64,
    pub w_const: f64,
    pub m_measured: f64,
    /// `[1 + Gamma(1+g)Gamma(1-g)] V c`
    pub gate_value: f64,
    /// `M < 1 - gate_value` and `gate_value < 1`
    pub gate: bool,
    /// the same gate with `v_exact`
    pub gate_exact: bool,
    /// `V W c`
    pub series_ratio: f64,
    /// `3 B y0 sum_{l<=k} (V W c)^l` for `k = 1, 2, ...`
    pub lambda_partial_sums: Vec<f64>,
    /// `[3 + c Gamma(1+g)Gamma(1-g)] y0`, the first-interval bound
    pub first_interval_bound: f64,
    pub times: Vec<f64>,
    /// `y(t) / E_g(-r t^g)`
    pub envelope_ratios: Vec<f64>,
    /// `(1 - M) sup |ratio|` on each interval `[(k-1) mu, k mu]`
    pub interval_sup: Vec<f64>,
}

impl HalanayProblem {
    pub fn validate(&self) -> Result<(), HalanayError> {
        let bad = |field, reason: String| Err(HalanayError::Invalid { field, reason });
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma", format!("must lie in (0, 1) (got {})", self.gamma));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r", format!("must be positive (got {})", self.r));
        }
        if !(0.0..1.0).contains(&self.c) {
            return bad("c", format!("must lie in [0, 1) (got {})", self.c));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu", format!("must be positive (got {})", self.mu));
        }
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return bad("y0", format!("must be positive (got {})", self.y0));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", format!("must be positive (got {})", self.horizon));
        }
        let mut samples: Vec<f64> = (0..=400).map(|i| -self.mu + self.mu * i as f64 / 400.0).collect();
        samples.extend(self.history.knots().iter().filter(|s| **s >= -self.mu));
        for s in samples {
            let value = self.history.eval(s).abs();
            let bound = self.y0 * eval_unchecked(self.gamma, 1.0, -self.r * (s + self.mu).max(0.0).powf(self.gamma));
            if !(value < bound) {
                return Err(HalanayError::History { s, value, bound });
            }
        }
        Ok(())
    }

    /// The smallest admissible `y0` times `margin`, for a given history.
    pub fn minimal_y0(&self, margin: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..=400 {
            let s = -self.mu + self.mu * i as f64 / 400.0;
            let e = eval_unchecked(self.gamma, 1.0, -self.r * (s + self.mu).powf(self.gamma));
            worst = worst.max(self.history.eval(s).abs() / e);
        }
        for &s in self.history.knots().iter().filter(|s| **s >= -self.mu) {
            let e = eval_unchecked(self.gamma, 1.0, -self.r * (s + self.mu).powf(self.gamma));
            worst = worst.max(self.history.eval(s).abs() / e);
        }
        worst * margin
    }

    fn system(&self, decay: f64, kernel_scale: f64) -> NeutralSystem {
        let mut sys = NeutralSystem::new(self.gamma, self.mu);
        sys.push_component(self.c, decay, 0.0, self.history.clone());
        sys.names[0] = "y".into();
        if !self.kernel.is_zero() && kernel_scale != 0.0 {
            let k = sys.add_kernel(self.kernel.clone());
            let s = sys.add_signal(Signal::new(0, Activation::linear()));
            sys.products.push(Product {
                equation: 0,
                coef: kernel_scale,
                factors: vec![(k, s)],
            });
        }
        sys
    }
}

/// Halanay constants; the envelope fields are left empty.
pub fn halanay_constants(p: &HalanayProblem) -> Result<HalanayReport, HalanayError> {
    p.validate()?;
    let g = p.gamma;
    let gp = reflection_product(g);
    let v_const = 1.0 / (p.r * p.mu.powf(g)) + 2f64.powf(g) * gamma(1.0 - g);
    let v_exact = gamma(1.0 + g) * v_const;
    let b_const = 1.0 + p.r * gamma(1.0 - g) * (2.0 * p.mu).powf(g);
    let steps = (p.horizon / 0.01).ceil().max(64.0) as usize;
    let grid: Vec<f64> = (1..=steps).map(|i| p.horizon * i as f64 / steps as f64).collect();
    let m_measured = check_condition_k1(&p.kernel, p.r, g, &grid, ConditionOptions::default())?.omega_star;
    let w_const = (1.0 + gp) / (1.0 - m_measured);
    let gate_value = (1.0 + gp) * v_const * p.c;
    let gate_exact_value = (1.0 + gp) * v_exact * p.c;
    let series_ratio = v_const * w_const * p.c;
    Ok(HalanayReport {
        v_const,
        v_exact,
        b_const,
        w_const,
        m_measured,
        gate_value,
        gate: gate_value < 1.0 && m_measured < 1.0 - gate_value,
        gate_exact: gate_exact_value < 1.0 && m_measured < 1.0 - gate_exact_value,
        series_ratio,
        lambda_partial_sums: Vec::new(),
        first_interval_bound: (3.0 + p.c * gp) * p.y0,
        times: Vec::new(),
        envelope_ratios: Vec::new(),
        interval_sup: Vec::new(),
    })
}

/// Simulates the equality system and checks every grid point against the
/// bound of its interval. The first offending point is returned as an error.
pub fn halanay_validate(p: &HalanayProblem, cfg: &SolverConfig) -> Result<HalanayReport, HalanayError> {
    validate_dynamics(p, cfg, p.r, 1.0)
}

/// As [`halanay_validate`] for a strict sub-solution: decay `r + extra_decay`
/// and kernel scaled by `kernel_scale <= 1`, against the original constants.
pub fn halanay_subsolution_check(
    p: &HalanayProblem,
    cfg: &SolverConfig,
    extra_decay: f64,
    kernel_scale: f64,
) -> Result<HalanayReport, HalanayError> {
    if !(extra_decay >= 0.0) || !(0.0..=1.0).contains(&kernel_scale) {
        return Err(HalanayError::Invalid {
            field: "subsolution",
            reason: "needs extra_decay >= 0 and kernel_scale in [0, 1]".into(),
        });
    }
    validate_dynamics(p, cfg, p.r + extra_decay, kernel_scale)
}

/// Trajectory of the equality system.
pub fn halanay_trajectory(p: &HalanayProblem, cfg: &SolverConfig) -> Result<Trajectory, HalanayError> {
    p.validate()?;
    let cfg = SolverConfig {
        window: DelayWindow::Infinite,
        ..*cfg
    };
    Ok(simulate(&p.system(p.r, 1.0), &cfg)?)
}

fn validate_dynamics(
    p: &HalanayProblem,
    cfg: &SolverConfig,
    decay: f64,
    kernel_scale: f64,
) -> Result<HalanayReport, HalanayError> {
    let mut rep = halanay_constants(p)?;
    if !rep.gate {
        return Err(HalanayError::Gate {
            m: rep.m_measured,
            gate_value: rep.gate_value,
        });
    }
    let cfg = SolverConfig {
        window: DelayWindow::Infinite,
        ..*cfg
    };
    let tr = simulate(&p.system(decay, kernel_scale), &cfg)?;
    let intervals = ((cfg.t_end / p.mu) - 1e-9).ceil().max(1.0) as usize;
    let mut sums = Vec::with_capacity(intervals);
    let mut acc = 0.0;
    let mut term = 1.0;
    acc += term;
    for _ in 1..=intervals {
        term *= rep.series_ratio;
        acc += term;
        sums.push(3.0 * rep.b_const * p.y0 * acc);
    }
    let ratios: Vec<f64> = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, s)| s[0] / eval_unchecked(p.gamma, 1.0, -p.r * t.powf(p.gamma)))
        .collect();
    let mut sup = vec![0.0f64; intervals];
    for (&t, &ratio) in tr.times.iter().zip(&ratios) {
        // t = 0 belongs to the first interval, (k-1)mu < t <= k mu to the k-th
        let k = ((t / p.mu) - 1e-9).ceil().max(1.0) as usize;
        let k = k.min(intervals);
        let lhs = (1.0 - rep.m_measured) * ratio.abs();
        sup[k - 1] = sup[k - 1].max(lhs);
        let mut bound = sums[k - 1];
        if k == 1 {
            bound = bound.min(rep.first_interval_bound);
        }
        if !(lhs <= bound) {
            return Err(HalanayError::EnvelopeViolation {
                t,
                interval: k,
                lhs,
                bound,
            });
        }
    }
    rep.lambda_partial_sums = sums;
    rep.times = tr.times;
    rep.envelope_ratios = ratios;
    rep.interval_sup = sup;
    Ok(rep)
}

impl HalanayReport {
    pub fn to_report(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        let mut out = String::new();
        for (k, v) in [
            ("V", self.v_const),
            ("V_exact", self.v_exact),
            ("B", self.b_const),
            ("W", self.w_const),
            ("M_measured", self.m_measured),
            ("gate_value", self.gate_value),
            ("series_ratio", self.series_ratio),
            ("first_interval_bound", self.first_interval_bound),
        ] {
            let _ = writeln!(out, "{k}={}", f(v));
        }
        for (k, (s, sup)) in self.lambda_partial_sums.iter().zip(&self.interval_sup).enumerate() {
            let _ = writeln!(out, "interval.{}.bound={}", k + 1, f(*s));
            let _ = writeln!(out, "interval.{}.sup={}", k + 1, f(*sup));
        }
        let _ = writeln!(out, "flag.gate={}", self.gate);
        let _ = writeln!(out, "flag.gate_exact={}", self.gate_exact);
        out
    }

    /// `t,ratio` rows.
    pub fn ratios_csv(&self) -> String {
        let mut out = String::from("t,ratio\n");
        for (t, r) in self.times.iter().zip(&self.envelope_ratios) {
            let _ = writeln!(out, "{t:.16e},{r:.16e}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> HalanayProblem {
        HalanayProblem {
            gamma: 0.5,
            r: 1.0,
            c: 0.0,
            mu: 1.0,
            kernel: Kernel::zero(),
            history: History::Constant(0.0),
            y0: 1.0,
            horizon: 5.0,
        }
    }

    #[test]
    fn v_for_half_order() {
        let rep = halanay_constants(&problem()).unwrap();
        let want = 1.0 + (2.0 * std::f64::consts::PI).sqrt();
        assert!((rep.v_const - want).abs() < 1e-13);
        assert!(rep.v_const > 1.0);
    }

    #[test]
    fn zero_kernel_gives_zero_m() {
        let mut p = problem();
        p.c = 0.01;
        let rep = halanay_constants(&p).unwrap();
        assert_eq!(rep.m_measured, 0.0);
        assert!(rep.gate);
    }

    #[test]
    fn history_above_envelope_is_rejected() {
        let mut p = problem();
        p.history = History::Constant(0.9);
        assert!(matches!(p.validate(), Err(HalanayError::History { .. })));
        p.y0 = p.minimal_y0(1.01);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn zero_history_stays_zero() {
        let cfg = SolverConfig {
            step: 0.01,
            t_end: 3.0,
            ..SolverConfig::default()
        };
        let rep = halanay_validate(&problem(), &cfg).unwrap();
        assert!(rep.envelope_ratios.iter().all(|&r| r == 0.0));
        assert_eq!(rep.lambda_partial_sums.len(), 3);
    }
}
