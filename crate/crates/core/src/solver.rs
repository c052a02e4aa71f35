//! Adams-Bashforth-Moulton predictor-corrector for neutral Caputo systems
//! with distributed delays.
//!
//! Each component obeys
//! `D^delta [x_i - c_i x_i(t - mu)] = -a_i x_i + b_i + sum_j w_ij x_j + sum products`,
//! where a product is `coef * prod_f int_0^inf k_f(s) g_f(x_f(t - s)) ds`.
//! The scheme integrates `z = x - c x(t - mu)` and recovers `x` from `z`
//! and the delayed value, so `mu` must be a multiple of the step.

use thiserror::Error;

use crate::gamma::gamma;
use crate::kernels::Kernel;
use crate::model::{Activation, History};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::trajectory::{SolveDetails, Trajectory};

/// An activated state component feeding a convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub component: usize,
    pub activation: Activation,
}

impl Signal {
    pub fn new(component: usize, activation: Activation) -> Self {
        Self { component, activation }
    }
}

/// `coef * prod (kernel * signal)` added to `equation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Product {
    pub equation: usize,
    pub coef: f64,
    /// `(kernel index, signal index)` pairs
    pub factors: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralSystem {
    pub delta: f64,
    pub mu: f64,
    pub names: Vec<String>,
    pub neutral: Vec<f64>,
    pub decay: Vec<f64>,
    pub input: Vec<f64>,
    pub history: Vec<History>,
    /// `(i, j, w)`: adds `w x_j` to equation `i`
    pub coupling: Vec<(usize, usize, f64)>,
    pub kernels: Vec<Kernel>,
    pub signals: Vec<Signal>,
    pub products: Vec<Product>,
}

impl NeutralSystem {
    pub fn new(delta: f64, mu: f64) -> Self {
        Self {
            delta,
            mu,
            names: Vec::new(),
            neutral: Vec::new(),
            decay: Vec::new(),
            input: Vec::new(),
            history: Vec::new(),
            coupling: Vec::new(),
            kernels: Vec::new(),
            signals: Vec::new(),
            products: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.decay.len()
    }

    pub fn push_component(&mut self, c: f64, decay: f64, input: f64, history: History) -> usize {
        self.names.push(format!("u{}", self.names.len() + 1));
        self.neutral.push(c);
        self.decay.push(decay);
        self.input.push(input);
        self.history.push(history);
        self.dim() - 1
    }

    /// Index of `k`, reusing an equal kernel when there is one.
    pub fn add_kernel(&mut self, k: Kernel) -> usize {
        if let Some(i) = self.kernels.iter().position(|x| *x == k) {
            return i;
        }
        self.kernels.push(k);
        self.kernels.len() - 1
    }

    pub fn add_signal(&mut self, s: Signal) -> usize {
        if let Some(i) = self.signals.iter().position(|x| *x == s) {
            return i;
        }
        self.signals.push(s);
        self.signals.len() - 1
    }

    /// Appends `other` as new components; returns the index of its first component.
    /// The two systems must share order and delay.
    pub fn append(&mut self, other: &NeutralSystem) -> usize {
        assert!(
            self.delta == other.delta && self.mu == other.mu,
            "appended systems must share order and delay"
        );
        let off = self.dim();
        self.names.extend(other.names.iter().cloned());
        self.neutral.extend_from_slice(&other.neutral);
        self.decay.extend_from_slice(&other.decay);
        self.input.extend_from_slice(&other.input);
        self.history.extend(other.history.iter().cloned());
        for &(i, j, w) in &other.coupling {
            self.coupling.push((i + off, j + off, w));
        }
        let kmap: Vec<usize> = other.kernels.iter().map(|k| self.add_kernel(k.clone())).collect();
        let smap: Vec<usize> = other
            .signals
            .iter()
            .map(|s| self.add_signal(Signal::new(s.component + off, s.activation.clone())))
            .collect();
        for p in &other.products {
            self.products.push(Product {
                equation: p.equation + off,
                coef: p.coef,
                factors: p.factors.iter().map(|&(k, s)| (kmap[k], smap[s])).collect(),
            });
        }
        off
    }

    fn check(&self) -> Result<(), SolverError> {
        let n = self.dim();
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(SolverError::Config(format!("order must lie in (0, 1] (got {})", self.delta)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(SolverError::Config(format!("delay must be positive (got {})", self.mu)));
        }
        if [self.neutral.len(), self.input.len(), self.history.len(), self.names.len()]
            .iter()
            .any(|&l| l != n)
        {
            return Err(SolverError::Config("component vectors differ in length".into()));
        }
        let bad_coupling = self.coupling.iter().any(|&(i, j, _)| i >= n || j >= n);
        let bad_signal = self.signals.iter().any(|s| s.component >= n);
        let bad_product = self.products.iter().any(|p| {
            p.equation >= n
                || p.factors
                    .iter()
                    .any(|&(k, s)| k >= self.kernels.len() || s >= self.signals.len())
        });
        if bad_coupling || bad_signal || bad_product {
            return Err(SolverError::Config("system references a missing component, kernel or signal".into()));
        }
        Ok(())
    }
}

/// How much of the kernel the convolutions keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryPolicy {
    Full,
    /// Only lags below `cells` steps. Each dropped convolution is off by at most
    /// `sup|g| * int_{cells h}^inf k`.
    Truncated { cells: usize },
}

/// Lower limit of the distributed-delay integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayWindow {
    /// `int_0^inf`, reading the history on `(-inf, 0]`.
    Infinite,
    /// `int_0^t`: the history before `t = 0` contributes nothing.
    SinceStart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub step: f64,
    pub t_end: f64,
    pub corrector_iterations: usize,
    pub memory: MemoryPolicy,
    pub window: DelayWindow,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            t_end: 10.0,
            corrector_iterations: 1,
            memory: MemoryPolicy::Full,
            window: DelayWindow::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("solver configuration: {0}")]
    Config(String),
    #[error("solution blew up at t = {t}: component {component} reached {value:e}")]
    BlowUp { t: f64, component: String, value: f64 },
}

const BLOW_UP: f64 = 1e12;

/// `(k+1)^p - k^p` without cancellation.
fn first_difference(k: usize, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
}

/// `(k+2)^p - 2 (k+1)^p + k^p` without cancellation.
fn second_difference(k: usize, p: f64) -> f64 {
    let kf = k as f64;
    if k < 64 {
        return (kf + 2.0).powf(p) - 2.0 * (kf + 1.0).powf(p) + kf.powf(p);
    }
    // even Taylor terms of u^p about u = k + 1
    let u = kf + 1.0;
    let mut sum = 0.0;
    let mut coef = 1.0;
    let mut fact = 1.0;
    for j in 1..=12 {
        coef *= p - (j - 1) as f64;
        fact *= j as f64;
        if j % 2 == 0 {
            let term = 2.0 * coef / fact * u.powf(p - j as f64);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
    }
    sum
}

fn blow_up(names: &[String], t: f64, x: &[f64]) -> Result<(), SolverError> {
    for (i, v) in x.iter().enumerate() {
        if !v.is_finite() || v.abs() > BLOW_UP {
            return Err(SolverError::BlowUp {
                t,
                component: names[i].clone(),
                value: *v,
            });
        }
    }
    Ok(())
}

/// `int_{t}^{cut} k(s) g(phi(t - s)) ds`: the part of a convolution that reads the history.
fn history_part(k: &Kernel, g: &Activation, phi: &History, t: f64, cut: f64) -> f64 {
    if cut <= t {
        return 0.0;
    }
    let mass = |a: f64, b: f64| {
        if b == f64::INFINITY {
            k.tail_mass(a)
        } else {
            k.tail_mass(a) - k.tail_mass(b)
        }
    };
    match phi {
        History::Constant(v) => g.eval(*v) * mass(t, cut),
        History::Sampled { times, values } => {
            // phi is constant before its first sample, i.e. for s > t - times[0]
            let far = (t - times[0]).min(cut);
            let mut total = 0.0;
            if far > t {
                let mut breaks: Vec<f64> = times.iter().map(|tau| t - tau).collect();
                if let Kernel::Table(tab) = k {
                    breaks.extend_from_slice(tab.times());
                }
                let opts = QuadOptions::with_tolerance(1e-15, 1e-12);
                total += integrate_with_breaks(|s| k.eval(s) * g.eval(phi.eval(t - s)), t, far, &breaks, opts)
                    .map(|r| r.0)
                    .unwrap_or(f64::NAN);
            }
            if cut > far {
                total += g.eval(values[0]) * mass(far, cut);
            }
            total
        }
    }
}

struct Plan {
    /// distinct `(kernel, signal)` convolutions
    pairs: Vec<(usize, usize)>,
    /// each product's factors as indices into `pairs`
    factor_pairs: Vec<Vec<usize>>,
}

impl Plan {
    fn new(sys: &NeutralSystem) -> Self {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut factor_pairs = Vec::new();
        for p in &sys.products {
            let mut idx = Vec::new();
            for f in &p.factors {
                let i = match pairs.iter().position(|x| x == f) {
                    Some(i) => i,
                    None => {
                        pairs.push(*f);
                        pairs.len() - 1
                    }
                };
                idx.push(i);
            }
            factor_pairs.push(idx);
        }
        Self { pairs, factor_pairs }
    }
}

fn eval_rhs(sys: &NeutralSystem, plan: &Plan, x: &[f64], conv: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = sys.input[i] - sys.decay[i] * x[i];
    }
    for &(i, j, w) in &sys.coupling {
        out[i] += w * x[j];
    }
    for (p, idx) in sys.products.iter().zip(&plan.factor_pairs) {
        out[p.equation] += p.coef * idx.iter().map(|&k| conv[k]).product::<f64>();
    }
}

/// Integrates `sys` on `[0, cfg.t_end]` with `cfg.corrector_iterations` corrector
/// passes per step.
pub fn simulate(sys: &NeutralSystem, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    sys.check()?;
    let h = cfg.step;
    if !(h > 0.0 && h.is_finite()) {
        return Err(SolverError::Config(format!("step must be positive (got {h})")));
    }
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(SolverError::Config(format!("t_end must be positive (got {})", cfg.t_end)));
    }
    if cfg.corrector_iterations == 0 {
        return Err(SolverError::Config("at least one corrector iteration is needed".into()));
    }
    let lag = (sys.mu / h).round() as usize;
    if lag == 0 || (lag as f64 * h - sys.mu).abs() > 1e-9 * sys.mu {
        return Err(SolverError::Config(format!(
            "step {h} must divide the neutral delay {}",
            sys.mu
        )));
    }
    let n_steps = (cfg.t_end / h - 1e-9).ceil() as usize;
    if n_steps > 50_000_000 {
        return Err(SolverError::Config(format!("{n_steps} steps is more than this solver will take")));
    }
    let dim = sys.dim();
    let delta = sys.delta;
    let plan = Plan::new(sys);
    let cells = match cfg.memory {
        MemoryPolicy::Full => n_steps,
        MemoryPolicy::Truncated { cells } => cells.min(n_steps),
    };
    let cut = match cfg.memory {
        MemoryPolicy::Full => f64::INFINITY,
        MemoryPolicy::Truncated { cells } => cells as f64 * h,
    };
    let weights: Vec<(Vec<f64>, Vec<f64>)> = sys.kernels.iter().map(|k| k.hat_weights(h, cells)).collect();
    let t_at = |n: usize| n as f64 * h;

    let history_at = |n: usize| -> Vec<f64> {
        plan.pairs
            .iter()
            .map(|&(k, s)| match cfg.window {
                DelayWindow::SinceStart => 0.0,
                DelayWindow::Infinite => {
                    let sig = &sys.signals[s];
                    history_part(&sys.kernels[k], &sig.activation, &sys.history[sig.component], t_at(n), cut)
                }
            })
            .collect()
    };
    let delayed = |states: &[Vec<f64>], i: usize, n: usize| -> f64 {
        if n >= lag {
            states[n - lag][i]
        } else {
            sys.history[i].eval(t_at(n) - sys.mu)
        }
    };

    let x0: Vec<f64> = (0..dim).map(|i| sys.history[i].eval(0.0)).collect();
    blow_up(&sys.names, 0.0, &x0)?;
    let z0: Vec<f64> = (0..dim).map(|i| x0[i] - sys.neutral[i] * sys.history[i].eval(-sys.mu)).collect();
    // signal values per step
    let mut sig_vals: Vec<Vec<f64>> = sys
        .signals
        .iter()
        .map(|s| vec![s.activation.eval(x0[s.component])])
        .collect();
    let mut states = vec![x0.clone()];
    let mut zs = vec![z0.clone()];
    let mut rhs = vec![vec![0.0; dim]];
    eval_rhs(sys, &plan, &x0, &history_at(0), &mut rhs[0]);

    let pred_w: Vec<f64> = (0..=n_steps).map(|k| first_difference(k, delta)).collect();
    let corr_w: Vec<f64> = (0..=n_steps).map(|k| second_difference(k, delta + 1.0)).collect();
    let pred_scale = h.powf(delta) / gamma(delta + 1.0);
    let corr_scale = h.powf(delta) / gamma(delta + 2.0);

    let mut conv = vec![0.0; plan.pairs.len()];
    let mut rest = vec![0.0; plan.pairs.len()];
    let mut f_new = vec![0.0; dim];
    for n in 0..n_steps {
        let m = n + 1;
        let t = t_at(m);
        // memory sums
        let mut pred = z0.clone();
        let mut corr = z0.clone();
        let nf = n as f64;
        let a0 = (nf + 1.0).powf(delta) * (nf * ((-1.0 / (nf + 1.0)).ln_1p() * delta).exp_m1() + delta);
        for i in 0..dim {
            let mut ps = 0.0;
            let mut cs = a0 * rhs[0][i];
            for j in 0..=n {
                ps += pred_w[n - j] * rhs[j][i];
                if j >= 1 {
                    cs += corr_w[n - j] * rhs[j][i];
                }
            }
            pred[i] += pred_scale * ps;
            corr[i] += corr_scale * cs;
        }
        let xd: Vec<f64> = (0..dim).map(|i| delayed(&states, i, m)).collect();
        // convolution parts that do not involve the new value
        let hist = history_at(m);
        let live = cells.min(m);
        for (c, &(k, s)) in plan.pairs.iter().enumerate() {
            let (l, r) = &weights[k];
            let f = &sig_vals[s];
            let mut acc = hist[c];
            for q in 0..live {
                if q >= 1 {
                    acc += l[q] * f[m - q];
                }
                acc += r[q] * f[m - q - 1];
            }
            rest[c] = acc;
        }
        let mut x: Vec<f64> = (0..dim).map(|i| pred[i] + sys.neutral[i] * xd[i]).collect();
        let mut z = pred;
        let fill = |x: &[f64], conv: &mut [f64]| {
            for (c, &(k, s)) in plan.pairs.iter().enumerate() {
                let sig = &sys.signals[s];
                let newest = if live > 0 {
                    weights[k].0[0] * sig.activation.eval(x[sig.component])
                } else {
                    0.0
                };
                conv[c] = rest[c] + newest;
            }
        };
        for _ in 0..cfg.corrector_iterations {
            blow_up(&sys.names, t, &x)?;
            fill(&x, &mut conv);
            eval_rhs(sys, &plan, &x, &conv, &mut f_new);
            for i in 0..dim {
                z[i] = corr[i] + corr_scale * f_new[i];
                x[i] = z[i] + sys.neutral[i] * xd[i];
            }
        }
        blow_up(&sys.names, t, &x)?;
        fill(&x, &mut conv);
        eval_rhs(sys, &plan, &x, &conv, &mut f_new);
        for (s, sig) in sys.signals.iter().enumerate() {
            sig_vals[s].push(sig.activation.eval(x[sig.component]));
        }
        states.push(x);
        zs.push(z);
        rhs.push(f_new.clone());
    }
    let times = (0..=n_steps).map(t_at).collect();
    Ok(Trajectory {
        names: sys.names.clone(),
        times,
        states,
        details: Some(SolveDetails {
            delta,
            step: h,
            lag,
            neutral_coefficients: sys.neutral.clone(),
            delayed_history: (0..dim)
                .map(|i| (0..lag).map(|n| sys.history[i].eval(t_at(n) - sys.mu)).collect())
                .collect(),
            neutral: zs,
            rhs,
        }),
    })
}

fn residual_at(d: &SolveDetails, w: &[f64], scale: f64, m: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..d.neutral[m].len() {
        let mut acc = 0.0;
        for j in 0..m {
            acc += w[j] * (d.neutral[m - j][i] - d.neutral[m - j - 1][i]);
        }
        worst = worst.max((scale * acc - d.rhs[m][i]).abs());
    }
    worst
}

fn l1_weights(d: &SolveDetails, n: usize) -> (Vec<f64>, f64) {
    let w = (0..n).map(|j| first_difference(j, 1.0 - d.delta)).collect();
    (w, d.step.powf(-d.delta) / gamma(2.0 - d.delta))
}

/// Max-abs defect at step `t_index` of the L1 Caputo derivative of
/// `x - c x(t - mu)` against the right-hand side recorded along the trajectory.
/// `None` for trajectories without solver details, at step 0, or past the end.
pub fn caputo_residual(traj: &Trajectory, t_index: usize) -> Option<f64> {
    let d = traj.details.as_ref()?;
    if t_index == 0 || t_index >= d.neutral.len() {
        return None;
    }
    let (w, scale) = l1_weights(d, t_index + 1);
    Some(residual_at(d, &w, scale, t_index))
}

/// [`caputo_residual`] at every step; entry 0 is 0.
pub fn caputo_residuals(traj: &Trajectory) -> Option<Vec<f64>> {
    let d = traj.details.as_ref()?;
    let n = d.neutral.len();
    let (w, scale) = l1_weights(d, n);
    Some((0..n).map(|m| if m == 0 { 0.0 } else { residual_at(d, &w, scale, m) }).collect())
}

/// Largest disagreement between the stored `z_n` and `x_n - c x(t_n - mu)`,
/// in units of the rounding of the larger term.
pub fn neutral_defect_ulps(traj: &Trajectory) -> Option<f64> {
    let d = traj.details.as_ref()?;
    let mut worst = 0.0f64;
    for (n, x) in traj.states.iter().enumerate() {
        for i in 0..x.len() {
            let xd = if n >= d.lag {
                traj.states[n - d.lag][i]
            } else {
                d.delayed_history[i][n]
            };
            let cx = d.neutral_coefficients[i] * xd;
            let scale = x[i].abs().max(cx.abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((x[i] - cx - d.neutral[n][i]).abs() / (f64::EPSILON * scale));
        }
    }
    Some(worst)
}
