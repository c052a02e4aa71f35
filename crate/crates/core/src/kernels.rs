//! Distributed-delay kernels, their masses, and the measured kernel condition
//!
//! `int_0^t (t-w)^(d-1) E_{d,d}(-xi (t-w)^d) int_{-inf}^w E_d(-xi l^d) K(w-l) dl dw <= Omega E_d(-xi t^d)`.

use thiserror::Error;

use crate::mittag_leffler::eval_unchecked;
use crate::model::{Activation, BamNetwork};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("exponential kernel needs a positive finite rate (got {0})")]
    Rate(f64),
    #[error("kernel weight must be finite and non-negative (got {0})")]
    Weight(f64),
    #[error("table kernel: {0}")]
    Table(String),
    #[error("table kernel ends at t = {t} with value {value} but declares no tail; its mass would be truncated")]
    UndeclaredTail { t: f64, value: f64 },
}

/// Piecewise-linear kernel through `(times[i], values[i])`, `times[0] = 0`.
/// Past the last sample it is either zero or `v_last * exp(-tail_rate (t - t_last))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableKernel {
    times: Vec<f64>,
    values: Vec<f64>,
    tail_rate: Option<f64>,
}

impl TableKernel {
    pub fn new(times: Vec<f64>, values: Vec<f64>, tail_rate: Option<f64>) -> Result<Self, KernelError> {
        if times.len() != values.len() {
            return Err(KernelError::Table(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(KernelError::Table("need at least two samples".into()));
        }
        if times[0] != 0.0 {
            return Err(KernelError::Table(format!("first sample must be at t = 0 (got {})", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(KernelError::Table("sample times must be finite and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(KernelError::Table(format!("values must be finite and non-negative (got {v})")));
        }
        match tail_rate {
            Some(r) if !(r > 0.0 && r.is_finite()) => return Err(KernelError::Rate(r)),
            None => {
                let last = *values.last().unwrap();
                let scale = values.iter().cloned().fold(0.0, f64::max);
                if last > 1e-12 * scale {
                    return Err(KernelError::UndeclaredTail {
                        t: *times.last().unwrap(),
                        value: last,
                    });
                }
            }
            _ => {}
        }
        Ok(Self {
            times,
            values,
            tail_rate,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_rate(&self) -> Option<f64> {
        self.tail_rate
    }

    fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let end = self.end();
        if t >= end {
            return match self.tail_rate {
                Some(r) => self.values.last().unwrap() * (-r * (t - end)).exp(),
                None if t == end => *self.values.last().unwrap(),
                None => 0.0,
            };
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Exact integral of the piecewise-linear part over `[a, b]` within the table.
    fn linear_mass(&self, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let lo = self.times[i].max(a);
            let hi = self.times[i + 1].min(b);
            if hi > lo {
                total += 0.5 * (hi - lo) * (self.eval(lo) + self.eval(hi));
            }
        }
        total
    }

    fn tail_mass(&self, t: f64) -> f64 {
        let end = self.end();
        let tail = |from: f64| match self.tail_rate {
            Some(r) => self.values.last().unwrap() * (-r * (from - end)).exp() / r,
            None => 0.0,
        };
        if t >= end {
            tail(t)
        } else {
            self.linear_mass(t.max(0.0), end) + tail(end)
        }
    }
}

/// A non-negative, integrable delay kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `weight * exp(-rate t)`
    Exponential { rate: f64, weight: f64 },
    Table(TableKernel),
}

impl Kernel {
    pub fn exponential(rate: f64, weight: f64) -> Result<Self, KernelError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(KernelError::Rate(rate));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(KernelError::Weight(weight));
        }
        Ok(Kernel::Exponential { rate, weight })
    }

    pub fn zero() -> Self {
        Kernel::Exponential {
            rate: 1.0,
            weight: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Kernel::Exponential { weight, .. } => *weight == 0.0,
            Kernel::Table(t) => t.values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Exponential { rate, weight } => {
                if t < 0.0 {
                    0.0
                } else {
                    weight * (-rate * t).exp()
                }
            }
            Kernel::Table(tab) => tab.eval(t),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.tail_mass(0.0)
    }

    /// `int_t^inf k(s) ds`
    pub fn tail_mass(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self {
            Kernel::Exponential { rate, weight } => weight * (-rate * t).exp() / rate,
            Kernel::Table(tab) => tab.tail_mass(t),
        }
    }

    /// Interval weights for the piecewise-linear convolution on a grid of step `h`:
    /// for cell `[ih, (i+1)h]`, `left[i] = int k(s) ((i+1)h - s)/h ds` and
    /// `right[i] = int k(s) (s - ih)/h ds`.
    pub fn hat_weights(&self, h: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
        let mut left = Vec::with_capacity(cells);
        let mut right = Vec::with_capacity(cells);
        match self {
            Kernel::Exponential { rate, weight } => {
                let x = rate * h;
                // int_0^h e^{-rate u} du and int_0^h u e^{-rate u} du / h
                let m0 = -(-x).exp_m1() / rate;
                let m1 = h * first_moment_factor(x);
                let decay = (-x).exp();
                let mut scale = *weight;
                for _ in 0..cells {
                    let r = scale * m1;
                    right.push(r);
                    left.push(scale * m0 - r);
                    scale *= decay;
                }
            }
            Kernel::Table(tab) => {
                let opts = QuadOptions::with_tolerance(1e-15, 1e-13);
                for i in 0..cells {
                    let a = i as f64 * h;
                    let b = a + h;
                    let breaks: Vec<f64> = tab.times.iter().copied().filter(|&t| t > a && t < b).collect();
                    let m0 = integrate_with_breaks(|s| tab.eval(s), a, b, &breaks, opts)
                        .map(|r| r.0)
                        .unwrap_or(0.0);
                    let r = integrate_with_breaks(|s| tab.eval(s) * (s - a) / h, a, b, &breaks, opts)
                        .map(|r| r.0)
                        .unwrap_or(0.0);
                    right.push(r);
                    left.push(m0 - r);
                }
            }
        }
        (left, right)
    }
}

/// `(1 - e^{-x}(1 + x)) / x^2`, accurate for small `x`.
fn first_moment_factor(x: f64) -> f64 {
    if x < 0.1 {
        // sum_{k>=2} (-1)^k (k-1) x^(k-2) / k!
        let mut sum = 0.0;
        let mut fact = 2.0;
        let mut pow = 1.0;
        for k in 2..20 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (k - 1) as f64 * pow / fact;
            pow *= x;
            fact *= (k + 1) as f64;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Anything that can serve as the `K` in the kernel condition.
pub trait DelayKernel {
    fn eval(&self, t: f64) -> f64;
    /// `int_t^inf K(s) ds`
    fn tail_mass(&self, t: f64) -> f64;

    /// Tail masses at increasing `nodes`.
    fn tail_masses(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&t| self.tail_mass(t)).collect()
    }
}

impl DelayKernel for Kernel {
    fn eval(&self, t: f64) -> f64 {
        Kernel::eval(self, t)
    }

    fn tail_mass(&self, t: f64) -> f64 {
        Kernel::tail_mass(self, t)
    }
}

/// Pointwise maximum over branches, each branch a weighted sum of kernels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateKernel {
    pub branches: Vec<Vec<(f64, Kernel)>>,
}

impl AggregateKernel {
    pub fn new(branches: Vec<Vec<(f64, Kernel)>>) -> Self {
        let branches = branches
            .into_iter()
            .map(|b| b.into_iter().filter(|(w, k)| *w != 0.0 && !k.is_zero()).collect())
            .collect();
        Self { branches }
    }

    pub fn is_zero(&self) -> bool {
        self.branches.iter().all(|b| b.is_empty())
    }

    /// Every branch multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            branches: self
                .branches
                .iter()
                .map(|b| b.iter().map(|(w, k)| (w * s, k.clone())).collect())
                .collect(),
        }
    }

    fn branch_tail(branch: &[(f64, Kernel)], t: f64) -> f64 {
        branch.iter().map(|(w, k)| w.abs() * k.tail_mass(t)).sum()
    }

    pub fn total_mass(&self) -> f64 {
        DelayKernel::tail_mass(self, 0.0)
    }
}

impl DelayKernel for AggregateKernel {
    fn eval(&self, t: f64) -> f64 {
        self.branches
            .iter()
            .map(|b| b.iter().map(|(w, k)| w * k.eval(t)).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn tail_mass(&self, t: f64) -> f64 {
        match self.branches.iter().filter(|b| !b.is_empty()).count() {
            0 => 0.0,
            1 => {
                let b = self.branches.iter().find(|b| !b.is_empty()).unwrap();
                Self::branch_tail(b, t)
            }
            _ => {
                // max of sums has no closed-form tail: integrate until the
                // summed tails of all branches are negligible
                let sum_tail = |s: f64| self.branches.iter().map(|b| Self::branch_tail(b, s)).sum::<f64>();
                let scale = sum_tail(t);
                if scale == 0.0 {
                    return 0.0;
                }
                let mut end = t + 1.0;
                while sum_tail(end) > 1e-16 * scale && end < t + 1e6 {
                    end = t + 2.0 * (end - t);
                }
                let mut breaks = Vec::new();
                let mut x = t + 0.5;
                while x < end {
                    breaks.push(x);
                    x = t + 2.0 * (x - t);
                }
                let opts = QuadOptions::with_tolerance(1e-16 * scale, 1e-12);
                integrate_with_breaks(|s| DelayKernel::eval(self, s), t, end, &breaks, opts)
                    .map(|r| r.0)
                    .unwrap_or(f64::NAN)
                    + sum_tail(end)
            }
        }
    }

    fn tail_masses(&self, nodes: &[f64]) -> Vec<f64> {
        if self.branches.iter().filter(|b| !b.is_empty()).count() < 2 || nodes.is_empty() {
            return nodes.iter().map(|&t| self.tail_mass(t)).collect();
        }
        // accumulate cell integrals backwards from the last node
        let mut out = vec![0.0; nodes.len()];
        let last = nodes.len() - 1;
        out[last] = self.tail_mass(nodes[last]);
        let scale = self.tail_mass(nodes[0]).max(f64::MIN_POSITIVE);
        let opts = QuadOptions::with_tolerance(1e-17 * scale, 1e-13);
        for j in (0..last).rev() {
            let cell = crate::quadrature::integrate(|s| DelayKernel::eval(self, s), nodes[j], nodes[j + 1], opts)
                .map(|r| r.0)
                .unwrap_or(f64::NAN);
            out[j] = out[j + 1] + cell;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    /// `K(t)`: the maximum of the two layer sums weighted by bounds and Lipschitz constants
    Bounded,
    /// `K*(t)`: the pointwise maximum of every active kernel
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("activation {layer}[{index}] declares no bound; the bounded aggregate needs one")]
pub struct MissingBound {
    pub layer: &'static str,
    pub index: usize,
}

fn layer_bound(acts: &[Activation], layer: &'static str) -> Result<f64, MissingBound> {
    let mut g = 0.0f64;
    for (i, a) in acts.iter().enumerate() {
        g = g.max(a.bound().ok_or(MissingBound { layer, index: i + 1 })?);
    }
    Ok(g)
}

/// The kernel that the stability condition is checked against.
/// Terms with a zero coupling weight are left out; `|d|` is used throughout.
pub fn aggregate_kernel(net: &BamNetwork, mode: AggregateMode) -> Result<AggregateKernel, MissingBound> {
    match mode {
        AggregateMode::Bounded => {
            let g = layer_bound(&net.g, "activation")?;
            let gb = layer_bound(&net.g_bar, "activation_bar")?;
            let mut first = Vec::new();
            for q in 0..net.n2 {
                for p in 0..net.n1 {
                    for s in 0..net.n2 {
                        let d = net.d.get(q, p, s).abs();
                        if d == 0.0 {
                            continue;
                        }
                        let (k, h) = (net.k.get(q, p, s), net.h.get(q, p, s));
                        first.push((g * d * net.g[q].lipschitz() * h.total_mass(), k.clone()));
                        first.push((g * d * net.g[s].lipschitz() * k.total_mass(), h.clone()));
                    }
                }
            }
            let mut second = Vec::new();
            for p in 0..net.n1 {
                for q in 0..net.n2 {
                    for r in 0..net.n1 {
                        let d = net.d_bar.get(p, q, r).abs();
                        if d == 0.0 {
                            continue;
                        }
                        let (k, h) = (net.k_bar.get(p, q, r), net.h_bar.get(p, q, r));
                        second.push((gb * d * net.g_bar[p].lipschitz() * h.total_mass(), k.clone()));
                        second.push((gb * d * net.g_bar[r].lipschitz() * k.total_mass(), h.clone()));
                    }
                }
            }
            Ok(AggregateKernel::new(vec![merge(first), merge(second)]))
        }
        AggregateMode::Unbounded => Ok(max_of(active_kernels(net, true, true))),
    }
}

/// `h*(t)`, the pointwise maximum of the second-factor kernels `h` and `h_bar`.
pub fn h_star(net: &BamNetwork) -> AggregateKernel {
    max_of(active_kernels(net, false, true))
}

/// `k*(t)`, the pointwise maximum of the first-factor kernels `k` and `k_bar`.
pub fn k_star(net: &BamNetwork) -> AggregateKernel {
    max_of(active_kernels(net, true, false))
}

fn active_kernels(net: &BamNetwork, first: bool, second: bool) -> Vec<Kernel> {
    let mut out: Vec<Kernel> = Vec::new();
    let mut add = |k: &Kernel| {
        if !k.is_zero() && !out.contains(k) {
            out.push(k.clone());
        }
    };
    for q in 0..net.n2 {
        for p in 0..net.n1 {
            for s in 0..net.n2 {
                if *net.d.get(q, p, s) != 0.0 {
                    if first {
                        add(net.k.get(q, p, s));
                    }
                    if second {
                        add(net.h.get(q, p, s));
                    }
                }
            }
        }
    }
    for p in 0..net.n1 {
        for q in 0..net.n2 {
            for r in 0..net.n1 {
                if *net.d_bar.get(p, q, r) != 0.0 {
                    if first {
                        add(net.k_bar.get(p, q, r));
                    }
                    if second {
                        add(net.h_bar.get(p, q, r));
                    }
                }
            }
        }
    }
    out
}

fn max_of(kernels: Vec<Kernel>) -> AggregateKernel {
    AggregateKernel::new(kernels.into_iter().map(|k| vec![(1.0, k)]).collect())
}

/// Sums the weights of identical kernels.
fn merge(terms: Vec<(f64, Kernel)>) -> Vec<(f64, Kernel)> {
    let mut out: Vec<(f64, Kernel)> = Vec::new();
    for (w, k) in terms {
        match out.iter_mut().find(|(_, x)| *x == k) {
            Some(e) => e.0 += w,
            None => out.push((w, k)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionOptions {
    /// Stop refining once `omega_star` moves by less than this.
    pub tol: f64,
    /// Upper limit on mesh points.
    pub max_points: usize,
    /// Budget that `omega_star` is compared against, if any.
    pub budget: Option<f64>,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_points: 1 << 15,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConditionReport {
    /// sup over the grid of `LHS(t) / E_delta(-xi t^delta)`
    pub omega_star: f64,
    pub grid: Vec<f64>,
    /// the ratio at each grid point
    pub ratios: Vec<f64>,
    /// step of the finest mesh used
    pub mesh_step: f64,
    pub converged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("grid must be non-empty, positive and strictly increasing")]
    Grid,
    #[error("xi must be positive (got {0})")]
    Xi(f64),
    #[error("order must lie in (0, 1] (got {0})")]
    Order(f64),
}

/// Measures the smallest `Omega` for which the kernel condition holds on `grid`.
///
/// The inner integral over `l < 0` uses `E_delta(-xi l^delta) = 1` there, so it
/// contributes `int_w^inf K`. The outer singular factor is integrated with exact
/// product weights against a piecewise-linear interpolant; the mesh is halved
/// until `omega_star` settles to `opts.tol`.
pub fn check_condition_k1<K: DelayKernel + ?Sized>(
    kernel: &K,
    xi: f64,
    delta: f64,
    grid: &[f64],
    opts: ConditionOptions,
) -> Result<KernelConditionReport, ConditionError> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConditionError::Grid);
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(ConditionError::Xi(xi));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(ConditionError::Order(delta));
    }
    let t_max = *grid.last().unwrap();
    let min_gap = grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(grid[0], f64::min);
    // start no coarser than 1/64 of the horizon
    let mut n = ((t_max / min_gap).ceil() as usize).max(64);
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;
    let mut result;
    loop {
        let h = t_max / n as f64;
        let lhs = condition_lhs(kernel, xi, delta, h, n);
        let ratios: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let pos = t / h;
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                let v = lhs[i] + (lhs[i + 1] - lhs[i]) * frac;
                v / eval_unchecked(delta, 1.0, -xi * t.powf(delta))
            })
            .collect();
        let omega = ratios.iter().cloned().fold(0.0, f64::max);
        result = (omega, ratios, h);
        if let Some((p, _)) = &prev {
            if (omega - p).abs() < opts.tol {
                converged = true;
                break;
            }
        }
        if 2 * n + 1 > opts.max_points {
            break;
        }
        prev = Some((omega, Vec::new()));
        n *= 2;
    }
    let (omega_star, ratios, mesh_step) = result;
    let pass = match opts.budget {
        Some(b) => omega_star <= b,
        None => omega_star.is_finite(),
    };
    Ok(KernelConditionReport {
        omega_star,
        grid: grid.to_vec(),
        ratios,
        mesh_step,
        converged,
        pass,
    })
}

/// LHS of the kernel condition at `t = k h`, `k = 0..=n`.
fn condition_lhs<K: DelayKernel + ?Sized>(kernel: &K, xi: f64, delta: f64, h: f64, n: usize) -> Vec<f64> {
    let s: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let e1: Vec<f64> = s.iter().map(|&t| eval_unchecked(delta, 1.0, -xi * t.powf(delta))).collect();
    let kv: Vec<f64> = s.iter().map(|&t| kernel.eval(t)).collect();
    let tails = kernel.tail_masses(&s);
    if kv.iter().all(|&v| v == 0.0) && tails[0] == 0.0 {
        return vec![0.0; n + 1];
    }
    // inner integral: trapezoid on [0, w] plus the pre-history tail
    let mut phi = vec![0.0; n + 1];
    for j in 0..=n {
        let mut acc = 0.0;
        for i in 0..=j {
            acc += e1[i] * kv[j - i];
        }
        acc -= 0.5 * (e1[0] * kv[j] + e1[j] * kv[0]);
        phi[j] = h * acc + tails[j];
    }
    // product weights for R(s) = s^(d-1) E_{d,d}(-xi s^d) = -(1/xi) d/ds E_d(-xi s^d)
    let p: Vec<f64> = s
        .iter()
        .zip(&e1)
        .map(|(&t, &e)| {
            if t == 0.0 {
                0.0
            } else {
                t * (eval_unchecked(delta, 2.0, -xi * t.powf(delta)) - e) / xi
            }
        })
        .collect();
    let mut w_far = vec![0.0; n];
    let mut w_near = vec![0.0; n];
    for k in 0..n {
        let (sa, sb) = (s[k], s[k + 1]);
        let m0 = (e1[k] - e1[k + 1]) / xi;
        let m1 = p[k + 1] - p[k];
        w_far[k] = (m1 - sa * m0) / h;
        w_near[k] = (sb * m0 - m1) / h;
    }
    let mut lhs = vec![0.0; n + 1];
    for m in 1..=n {
        let mut acc = 0.0;
        for k in 0..m {
            acc += w_near[k] * phi[m - k] + w_far[k] * phi[m - k - 1];
        }
        lhs[m] = acc;
    }
    lhs
}
