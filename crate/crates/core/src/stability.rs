//! Stability certificates for the bounded and unbounded activation cases,
//! and the empirical check of a trajectory against the decay envelope.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gamma::{gamma, reflection_product};
use crate::kernels::{
    aggregate_kernel, check_condition_k1, h_star, AggregateMode, ConditionError, ConditionOptions, DelayKernel,
    KernelConditionReport, MissingBound,
};
use crate::mittag_leffler::eval_unchecked;
use crate::model::{BamNetwork, Equilibrium};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    BoundedCertified,
    UnboundedCertified,
    Uncertified,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::BoundedCertified => "bounded-certified",
            Verdict::UnboundedCertified => "unbounded-certified",
            Verdict::Uncertified => "uncertified",
        }
    }

    pub fn is_certified(self) -> bool {
        self != Verdict::Uncertified
    }
}

/// Constants that only exist when activations may be unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedConstants {
    pub theta: f64,
    pub theta_bar: f64,
    pub nu: f64,
    pub nu_bar: f64,
    pub pi_const: f64,
    pub kappa: f64,
    /// `int_0^inf h*(s) ds`
    pub h_star_mass: f64,
    pub eta: f64,
    /// `1 / (2 B* (1 + U))`
    pub c_threshold: f64,
    /// `1 / (4 pi)`
    pub omega_budget_unbounded: f64,
    /// `sup` over the history of `max(sum_p |phi_p - x_p*|, sum_q |phi_q - y_q*|)`
    pub v0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    pub delta: f64,
    pub mu: f64,
    pub a: f64,
    pub a_bar: f64,
    pub xi: f64,
    pub a_star: f64,
    pub c_star: f64,
    /// `Gamma(1+delta) Gamma(1-delta)`
    pub gamma_product: f64,
    /// `1/(xi mu^delta) + 2^delta Gamma(1-delta)`, the larger of the two readings
    pub f: f64,
    /// `Gamma(1+delta) F`
    pub f_exact: f64,
    pub b: f64,
    pub b_star: f64,
    /// `max(sum_p a_p, sum_q a_bar_q)`
    pub a_sum: f64,
    pub u: f64,
    pub omega_measured: f64,
    pub w: f64,
    pub w_star: f64,
    /// `[1 + Gamma(1+delta)Gamma(1-delta)] F a* c* / xi`
    pub neutral_gate: f64,
    /// `1 - neutral_gate`
    pub omega_budget_bounded: f64,
    /// `F W a* c* / xi`, the ratio of the envelope series
    pub series_ratio: f64,
    /// `2 B* c* (1 + U)`
    pub lambda_ratio: f64,
    /// `sum_k lambda_ratio^k`, infinite when the ratio reaches 1
    pub lambda_sum: f64,
    pub unbounded: Option<UnboundedConstants>,
    pub flags: Vec<(&'static str, bool)>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error(transparent)]
    MissingBound(#[from] MissingBound),
    #[error("activation {layer}[{index}] has no finite positive Lipschitz constant")]
    Lipschitz { layer: &'static str, index: usize },
    #[error("equilibrium does not match the network ({0})")]
    Equilibrium(String),
    #[error("network parameters are invalid: {0}")]
    Network(String),
    #[error(transparent)]
    Condition(#[from] ConditionError),
}

fn lipschitz_ok(net: &BamNetwork) -> Result<(), CertificateError> {
    for (layer, acts) in [("activation", &net.g), ("activation_bar", &net.g_bar)] {
        for (i, g) in acts.iter().enumerate() {
            let l = g.lipschitz();
            if !(l > 0.0 && l.is_finite()) {
                return Err(CertificateError::Lipschitz { layer, index: i + 1 });
            }
        }
    }
    Ok(())
}

fn kernels_integrable(net: &BamNetwork) -> bool {
    [&net.k, &net.h, &net.k_bar, &net.h_bar]
        .iter()
        .all(|t| t.iter().all(|k| k.total_mass().is_finite()))
}

fn common(net: &BamNetwork, omega: f64) -> Result<StabilityCertificate, CertificateError> {
    net.validate().map_err(|e| CertificateError::Network(e.to_string()))?;
    lipschitz_ok(net)?;
    let delta = net.delta;
    let mu = net.mu;
    let a = net.a.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_bar = net.a_bar.iter().cloned().fold(f64::INFINITY, f64::min);
    let xi = a.min(a_bar);
    let a_star = a.max(a_bar);
    let c_star = net.c.max(net.c_bar);
    let gp = reflection_product(delta);
    // at delta = 1 the 2^delta Gamma(1-delta) term has no finite value
    let g1m = if delta < 1.0 { gamma(1.0 - delta) } else { f64::INFINITY };
    let f = 1.0 / (xi * mu.powf(delta)) + 2f64.powf(delta) * g1m;
    let f_exact = gamma(1.0 + delta) * f;
    let b = 1.0 + xi * g1m * (2.0 * mu).powf(delta);
    let b_star = b.max(f);
    let a_sum = net.a.iter().sum::<f64>().max(net.a_bar.iter().sum::<f64>());
    let u = a_sum * gp / xi;
    let w = if omega < 1.0 { (1.0 + gp) / (1.0 - omega) } else { f64::INFINITY };
    let w_star = if omega < 1.0 {
        (3.0 + c_star * a_star / xi * gp) / (1.0 - omega)
    } else {
        f64::INFINITY
    };
    let neutral_gate = (1.0 + gp) * f * a_star * c_star / xi;
    let series_ratio = f * w * a_star * c_star / xi;
    let lambda_ratio = 2.0 * b_star * c_star * (1.0 + u);
    let lambda_sum = if lambda_ratio < 1.0 {
        1.0 / (1.0 - lambda_ratio)
    } else {
        f64::INFINITY
    };
    Ok(StabilityCertificate {
        delta,
        mu,
        a,
        a_bar,
        xi,
        a_star,
        c_star,
        gamma_product: gp,
        f,
        f_exact,
        b,
        b_star,
        a_sum,
        u,
        omega_measured: omega,
        w,
        w_star,
        neutral_gate,
        omega_budget_bounded: 1.0 - neutral_gate,
        series_ratio,
        lambda_ratio,
        lambda_sum,
        unbounded: None,
        flags: Vec::new(),
        verdict: Verdict::Uncertified,
    })
}

/// `xi = min(min_p a_p, min_q a_bar_q)`
pub fn decay_rate(net: &BamNetwork) -> f64 {
    net.a.iter().chain(&net.a_bar).cloned().fold(f64::INFINITY, f64::min)
}

/// Measures the kernel-condition constant of a network on the grid
/// `step, 2 step, .., horizon`, with the bounded aggregate kernel when every
/// activation is bounded and the unbounded one otherwise.
pub fn measure_omega(
    net: &BamNetwork,
    horizon: f64,
    step: f64,
    opts: ConditionOptions,
) -> Result<KernelConditionReport, CertificateError> {
    let mode = if net.is_bounded() {
        AggregateMode::Bounded
    } else {
        AggregateMode::Unbounded
    };
    let kernel = aggregate_kernel(net, mode)?;
    let n = (horizon / step).round().max(1.0) as usize;
    let grid: Vec<f64> = (1..=n).map(|i| horizon * i as f64 / n as f64).collect();
    Ok(check_condition_k1(&kernel, decay_rate(net), net.delta, &grid, opts)?)
}

/// Certificate for bounded activations. `omega` is the measured kernel-condition constant.
pub fn certify_bounded(net: &BamNetwork, omega: f64) -> Result<StabilityCertificate, CertificateError> {
    for (layer, acts) in [("activation", &net.g), ("activation_bar", &net.g_bar)] {
        if let Some(i) = acts.iter().position(|g| g.bound().is_none()) {
            return Err(MissingBound { layer, index: i + 1 }.into());
        }
    }
    let mut cert = common(net, omega)?;
    cert.flags = vec![
        ("kernels_integrable", kernels_integrable(net)),
        ("activations_bounded", true),
        ("activations_lipschitz", true),
        ("neutral_gate_below_one", cert.neutral_gate < 1.0),
        ("omega_within_budget", omega < cert.omega_budget_bounded),
        ("series_ratio_below_one", cert.series_ratio < 1.0),
        ("c_star_below_one", cert.c_star < 1.0),
    ];
    if cert.flags.iter().all(|f| f.1) {
        cert.verdict = Verdict::BoundedCertified;
    }
    Ok(cert)
}

/// Certificate for possibly unbounded activations, local around `eq`.
///
/// `eta` is the largest power of 1/2 with `Omega eta kappa h*_mass < 1/4`.
pub fn certify_unbounded(
    net: &BamNetwork,
    eq: &Equilibrium,
    omega: f64,
) -> Result<StabilityCertificate, CertificateError> {
    if eq.x.len() != net.n1 || eq.y.len() != net.n2 {
        return Err(CertificateError::Equilibrium(format!(
            "expected {}+{} components, got {}+{}",
            net.n1,
            net.n2,
            eq.x.len(),
            eq.y.len()
        )));
    }
    let mut cert = common(net, omega)?;
    let gy: Vec<f64> = (0..net.n2).map(|q| net.g[q].eval(eq.y[q]).abs()).collect();
    let gx: Vec<f64> = (0..net.n1).map(|p| net.g_bar[p].eval(eq.x[p]).abs()).collect();
    let (mut theta, mut nu) = (0.0, 0.0);
    for q in 0..net.n2 {
        for p in 0..net.n1 {
            for s in 0..net.n2 {
                let d = net.d.get(q, p, s).abs();
                if d == 0.0 {
                    continue;
                }
                let (lq, ls) = (net.g[q].lipschitz(), net.g[s].lipschitz());
                let (kh, hh) = (net.k.get(q, p, s).total_mass(), net.h.get(q, p, s).total_mass());
                theta += d * (lq * hh * gy[s] + ls * kh * gy[q]);
                nu += d * lq * ls;
            }
        }
    }
    let (mut theta_bar, mut nu_bar) = (0.0, 0.0);
    for p in 0..net.n1 {
        for q in 0..net.n2 {
            for r in 0..net.n1 {
                let d = net.d_bar.get(p, q, r).abs();
                if d == 0.0 {
                    continue;
                }
                let (mp, mr) = (net.g_bar[p].lipschitz(), net.g_bar[r].lipschitz());
                let (kh, hh) = (
                    net.k_bar.get(p, q, r).total_mass(),
                    net.h_bar.get(p, q, r).total_mass(),
                );
                theta_bar += d * (mp * hh * gx[r] + mr * kh * gx[p]);
                nu_bar += d * mp * mr;
            }
        }
    }
    let pi_const = theta.max(theta_bar);
    let kappa = nu.max(nu_bar);
    let h_star_mass = h_star(net).tail_mass(0.0);
    let mut eta = 1.0;
    for _ in 0..2000 {
        if omega * eta * kappa * h_star_mass < 0.25 {
            break;
        }
        eta *= 0.5;
    }
    let c_threshold = 1.0 / (2.0 * cert.b_star * (1.0 + cert.u));
    let omega_budget_unbounded = if pi_const > 0.0 { 0.25 / pi_const } else { f64::INFINITY };
    let u0: f64 = net
        .history_x
        .iter()
        .zip(&eq.x)
        .map(|(h, x)| h.sup_deviation(*x))
        .sum();
    let v0_bar: f64 = net
        .history_y
        .iter()
        .zip(&eq.y)
        .map(|(h, y)| h.sup_deviation(*y))
        .sum();
    let v0 = u0.max(v0_bar);
    cert.flags = vec![
        ("kernels_integrable", kernels_integrable(net)),
        ("activations_lipschitz", true),
        ("omega_pi_below_quarter", omega * pi_const < 0.25),
        ("c_star_below_threshold", cert.c_star < c_threshold.min(1.0)),
        ("lambda_series_converges", cert.lambda_ratio < 1.0),
        ("omega_eta_below_half", omega * (pi_const + eta * kappa * h_star_mass) < 0.5),
        ("initial_data_small", v0 * cert.lambda_sum < eta / 4.0),
    ];
    cert.unbounded = Some(UnboundedConstants {
        theta,
        theta_bar,
        nu,
        nu_bar,
        pi_const,
        kappa,
        h_star_mass,
        eta,
        c_threshold,
        omega_budget_unbounded,
        v0,
    });
    if cert.flags.iter().all(|f| f.1) {
        cert.verdict = Verdict::UnboundedCertified;
    }
    Ok(cert)
}

fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl StabilityCertificate {
    /// Right-hand side of the per-interval envelope claim on the `k`-th
    /// interval: `3 B V0 sum_{l<=k} series_ratio^l / (1 - Omega)`.
    pub fn envelope_bound(&self, v0: f64, k: usize) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for _ in 0..=k {
            sum += term;
            term *= self.series_ratio;
        }
        3.0 * self.b * v0 * sum / (1.0 - self.omega_measured)
    }

    /// `name=value` per constant, then `flag.<name>=true|false`, then the verdict.
    pub fn to_report(&self) -> String {
        let mut rows: Vec<(&str, f64)> = vec![
            ("delta", self.delta),
            ("mu", self.mu),
            ("a", self.a),
            ("a_bar", self.a_bar),
            ("xi", self.xi),
            ("a_star", self.a_star),
            ("c_star", self.c_star),
            ("gamma_product", self.gamma_product),
            ("F", self.f),
            ("F_exact", self.f_exact),
            ("B", self.b),
            ("B_star", self.b_star),
            ("A", self.a_sum),
            ("U", self.u),
            ("omega_measured", self.omega_measured),
            ("W", self.w),
            ("W_star", self.w_star),
            ("neutral_gate", self.neutral_gate),
            ("omega_budget_bounded", self.omega_budget_bounded),
            ("series_ratio", self.series_ratio),
            ("lambda_ratio", self.lambda_ratio),
            ("lambda_sum", self.lambda_sum),
        ];
        if let Some(u) = &self.unbounded {
            rows.extend([
                ("theta", u.theta),
                ("theta_bar", u.theta_bar),
                ("nu", u.nu),
                ("nu_bar", u.nu_bar),
                ("pi_const", u.pi_const),
                ("kappa", u.kappa),
                ("h_star_mass", u.h_star_mass),
                ("eta", u.eta),
                ("c_threshold", u.c_threshold),
                ("omega_budget_unbounded", u.omega_budget_unbounded),
                ("v0", u.v0),
            ]);
        }
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k}={}", fmt_real(v));
        }
        for (k, v) in &self.flags {
            let _ = writeln!(out, "flag.{k}={v}");
        }
        let _ = writeln!(out, "verdict={}", self.verdict.as_str());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub c_fit: f64,
    pub xi_used: f64,
    pub max_ratio: f64,
    /// `V(t) / E_delta(-xi t^delta)` on the trajectory grid
    pub ratios: Vec<f64>,
    /// least-squares slope of the ratio over the last quarter of the grid
    pub final_quartile_slope: f64,
    pub pass: bool,
}

impl EnvelopeReport {
    pub fn to_report(&self) -> String {
        format!(
            "C_fit={}\nxi_used={}\nmax_ratio={}\nfinal_quartile_slope={}\npass={}\n",
            fmt_real(self.c_fit),
            fmt_real(self.xi_used),
            fmt_real(self.max_ratio),
            fmt_real(self.final_quartile_slope),
            self.pass
        )
    }
}

/// Distance of the trajectory to `eq` measured against `E_delta(-xi t^delta)`.
///
/// The first `eq.x.len()` columns are the `x` layer and the next `eq.y.len()`
/// the `y` layer; `V(t) = max(sum |x - x*|, sum |y - y*|)`. The report passes when
/// the ratio stays finite and its fitted slope over the last quarter is not positive.
pub fn check_envelope(traj: &Trajectory, eq: &Equilibrium, xi: f64, delta: f64) -> EnvelopeReport {
    let n1 = eq.x.len();
    let ratios: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let u: f64 = (0..n1).map(|p| (s[p] - eq.x[p]).abs()).sum();
            let v: f64 = eq.y.iter().enumerate().map(|(q, y)| (s[n1 + q] - y).abs()).sum();
            u.max(v) / eval_unchecked(delta, 1.0, -xi * t.powf(delta))
        })
        .collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let start = ratios.len() - ratios.len() / 4;
    let slope = trend(&traj.times[start..], &ratios[start..]);
    // slopes at rounding level of the ratio count as flat
    let flat = 1e-9 * max_ratio.max(f64::MIN_POSITIVE);
    let finite = ratios.iter().all(|r| r.is_finite());
    EnvelopeReport {
        c_fit: max_ratio,
        xi_used: xi,
        max_ratio,
        ratios,
        final_quartile_slope: slope,
        pass: finite && slope <= flat,
    }
}

fn trend(t: &[f64], y: &[f64]) -> f64 {
    if t.len() < 2 {
        return 0.0;
    }
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    sxy / sxx
}
