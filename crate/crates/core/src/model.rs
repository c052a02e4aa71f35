//! The BAM network, its equilibrium, and the shift that moves it to the origin.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::kernels::Kernel;
use crate::solver::{NeutralSystem, Product, Signal};

#[derive(Clone)]
pub enum ActivationKind {
    Tanh,
    Asinh,
    Linear,
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lipschitz: f64,
        bound: Option<f64>,
    },
}

impl fmt::Debug for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::Tanh => write!(f, "Tanh"),
            ActivationKind::Asinh => write!(f, "Asinh"),
            ActivationKind::Linear => write!(f, "Linear"),
            ActivationKind::Custom {
                name, lipschitz, bound, ..
            } => write!(f, "Custom({name}, L={lipschitz}, bound={bound:?})"),
        }
    }
}

impl PartialEq for ActivationKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ActivationKind::Tanh, ActivationKind::Tanh)
            | (ActivationKind::Asinh, ActivationKind::Asinh)
            | (ActivationKind::Linear, ActivationKind::Linear) => true,
            (ActivationKind::Custom { f: a, .. }, ActivationKind::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// `v -> kind(v + offset)`
#[derive(Debug, Clone, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub offset: f64,
}

impl Activation {
    pub fn tanh() -> Self {
        Self::from_kind(ActivationKind::Tanh)
    }

    pub fn asinh() -> Self {
        Self::from_kind(ActivationKind::Asinh)
    }

    pub fn linear() -> Self {
        Self::from_kind(ActivationKind::Linear)
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
        bound: Option<f64>,
    ) -> Self {
        Self::from_kind(ActivationKind::Custom {
            name: name.into(),
            f: Arc::new(f),
            lipschitz,
            bound,
        })
    }

    fn from_kind(kind: ActivationKind) -> Self {
        Self { kind, offset: 0.0 }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            ActivationKind::Tanh => "tanh",
            ActivationKind::Asinh => "asinh",
            ActivationKind::Linear => "linear",
            ActivationKind::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        let u = v + self.offset;
        match &self.kind {
            ActivationKind::Tanh => u.tanh(),
            ActivationKind::Asinh => u.asinh(),
            ActivationKind::Linear => u,
            ActivationKind::Custom { f, .. } => f(u),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            ActivationKind::Tanh | ActivationKind::Asinh | ActivationKind::Linear => 1.0,
            ActivationKind::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// `sup |g|`, if finite.
    pub fn bound(&self) -> Option<f64> {
        match &self.kind {
            ActivationKind::Tanh => Some(1.0),
            ActivationKind::Asinh | ActivationKind::Linear => None,
            ActivationKind::Custom { bound, .. } => *bound,
        }
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            offset: self.offset + by,
        }
    }
}

/// Initial function on `(-inf, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    Constant(f64),
    /// Piecewise linear through the samples, constant outside them.
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl History {
    pub fn sampled(times: Vec<f64>, values: Vec<f64>) -> Result<Self, String> {
        if times.is_empty() || times.len() != values.len() {
            return Err(format!("{} times but {} values", times.len(), values.len()));
        }
        if times.iter().any(|t| !(t.is_finite() && *t <= 0.0)) {
            return Err("sample times must be finite and <= 0".into());
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("sample times must be strictly increasing".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("sample values must be finite".into());
        }
        Ok(History::Sampled { times, values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            History::Constant(v) => *v,
            History::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                values[i] + (values[i + 1] - values[i]) * (t - times[i]) / (times[i + 1] - times[i])
            }
        }
    }

    /// Sample times where the function has kinks (empty when constant).
    pub fn knots(&self) -> &[f64] {
        match self {
            History::Constant(_) => &[],
            History::Sampled { times, .. } => times,
        }
    }

    pub fn minus(&self, c: f64) -> Self {
        match self {
            History::Constant(v) => History::Constant(v - c),
            History::Sampled { times, values } => History::Sampled {
                times: times.clone(),
                values: values.iter().map(|v| v - c).collect(),
            },
        }
    }

    /// `sup_{t <= 0} |phi(t) - c|`
    pub fn sup_deviation(&self, c: f64) -> f64 {
        match self {
            History::Constant(v) => (v - c).abs(),
            History::Sampled { values, .. } => values.iter().map(|v| (v - c).abs()).fold(0.0, f64::max),
        }
    }
}

/// Dense `n0 x n1 x n2` array, indexed in the order the subscripts are written.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: Clone> Tensor3<T> {
    pub fn filled(dims: [usize; 3], value: T) -> Self {
        Self {
            dims,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }
}

impl<T> Tensor3<T> {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2], "tensor index out of range");
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[self.offset(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid network:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

/// Two-layer higher-order BAM network.
///
/// `x` has `n1` neurons and `y` has `n2`. `d`, `k`, `h` are indexed `[q][p][s]`
/// and feed `x_p` from `g_q(y_q)` and `g_s(y_s)`; `d_bar`, `k_bar`, `h_bar` are
/// indexed `[p][q][r]` and feed `y_q` from `g_bar_p(x_p)` and `g_bar_r(x_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BamNetwork {
    pub n1: usize,
    pub n2: usize,
    pub delta: f64,
    pub mu: f64,
    pub c: f64,
    pub c_bar: f64,
    pub a: Vec<f64>,
    pub a_bar: Vec<f64>,
    pub input: Vec<f64>,
    pub input_bar: Vec<f64>,
    pub d: Tensor3<f64>,
    pub d_bar: Tensor3<f64>,
    pub k: Tensor3<Kernel>,
    pub h: Tensor3<Kernel>,
    pub k_bar: Tensor3<Kernel>,
    pub h_bar: Tensor3<Kernel>,
    /// applied to `y`
    pub g: Vec<Activation>,
    /// applied to `x`
    pub g_bar: Vec<Activation>,
    pub history_x: Vec<History>,
    pub history_y: Vec<History>,
}

impl BamNetwork {
    /// A network with zero couplings, zero kernels, tanh activations and zero histories.
    pub fn blank(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            delta: 0.9,
            mu: 1.0,
            c: 0.0,
            c_bar: 0.0,
            a: vec![1.0; n1],
            a_bar: vec![1.0; n2],
            input: vec![0.0; n1],
            input_bar: vec![0.0; n2],
            d: Tensor3::filled([n2, n1, n2], 0.0),
            d_bar: Tensor3::filled([n1, n2, n1], 0.0),
            k: Tensor3::filled([n2, n1, n2], Kernel::zero()),
            h: Tensor3::filled([n2, n1, n2], Kernel::zero()),
            k_bar: Tensor3::filled([n1, n2, n1], Kernel::zero()),
            h_bar: Tensor3::filled([n1, n2, n1], Kernel::zero()),
            g: vec![Activation::tanh(); n2],
            g_bar: vec![Activation::tanh(); n1],
            history_x: vec![History::Constant(0.0); n1],
            history_y: vec![History::Constant(0.0); n2],
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut errs = Vec::new();
        let mut push = |field: String, reason: String| errs.push(FieldError { field, reason });
        if self.n1 == 0 || self.n2 == 0 {
            push("network.n1/n2".into(), "both layers need at least one neuron".into());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            push("network.delta".into(), format!("must lie in (0, 1] (got {})", self.delta));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            push("network.mu".into(), format!("must be positive (got {})", self.mu));
        }
        for (name, c) in [("network.c", self.c), ("network.c_bar", self.c_bar)] {
            if !(0.0..1.0).contains(&c) {
                push(name.into(), format!("must lie in [0, 1) (got {c})"));
            }
        }
        let vectors: [(&str, &Vec<f64>, usize, bool); 4] = [
            ("network.a", &self.a, self.n1, true),
            ("network.a_bar", &self.a_bar, self.n2, true),
            ("network.input", &self.input, self.n1, false),
            ("network.input_bar", &self.input_bar, self.n2, false),
        ];
        for (name, v, n, positive) in vectors {
            if v.len() != n {
                push(name.into(), format!("expected {n} entries, got {}", v.len()));
                continue;
            }
            for (i, x) in v.iter().enumerate() {
                if !x.is_finite() || (positive && *x <= 0.0) {
                    let need = if positive { "positive and finite" } else { "finite" };
                    push(format!("{name}[{}]", i + 1), format!("must be {need} (got {x})"));
                }
            }
        }
        let dims = [self.n2, self.n1, self.n2];
        let dims_bar = [self.n1, self.n2, self.n1];
        for (name, t, want) in [("coupling.d", &self.d, dims), ("coupling.d_bar", &self.d_bar, dims_bar)] {
            if t.dims() != want {
                push(name.into(), format!("expected dimensions {want:?}, got {:?}", t.dims()));
            } else if let Some(v) = t.iter().find(|v| !v.is_finite()) {
                push(name.into(), format!("entries must be finite (got {v})"));
            }
        }
        for (name, t, want) in [
            ("kernels.k", &self.k, dims),
            ("kernels.h", &self.h, dims),
            ("kernels.k_bar", &self.k_bar, dims_bar),
            ("kernels.h_bar", &self.h_bar, dims_bar),
        ] {
            if t.dims() != want {
                push(name.into(), format!("expected dimensions {want:?}, got {:?}", t.dims()));
            }
        }
        if self.g.len() != self.n2 {
            push("network.activation".into(), format!("expected {} entries, got {}", self.n2, self.g.len()));
        }
        if self.g_bar.len() != self.n1 {
            push(
                "network.activation_bar".into(),
                format!("expected {} entries, got {}", self.n1, self.g_bar.len()),
            );
        }
        if self.history_x.len() != self.n1 {
            push("history.x".into(), format!("expected {} entries, got {}", self.n1, self.history_x.len()));
        }
        if self.history_y.len() != self.n2 {
            push("history.y".into(), format!("expected {} entries, got {}", self.n2, self.history_y.len()));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(NetworkError::Invalid(errs))
        }
    }

    /// True when every activation has a finite bound.
    pub fn is_bounded(&self) -> bool {
        self.g.iter().chain(&self.g_bar).all(|g| g.bound().is_some())
    }

    /// `(sum_q,s |d| k^ h^ G_q G_s + |I_p|) / a_p` and the same for `y`; `None`
    /// for unbounded activations. Damped iteration from the origin stays inside.
    pub fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let gb: Vec<f64> = self.g.iter().map(|g| g.bound()).collect::<Option<_>>()?;
        let gbb: Vec<f64> = self.g_bar.iter().map(|g| g.bound()).collect::<Option<_>>()?;
        let mut bx = vec![0.0; self.n1];
        for (p, b) in bx.iter_mut().enumerate() {
            let mut s = self.input[p].abs();
            for q in 0..self.n2 {
                for r in 0..self.n2 {
                    s += self.d.get(q, p, r).abs()
                        * self.k.get(q, p, r).total_mass()
                        * self.h.get(q, p, r).total_mass()
                        * gb[q]
                        * gb[r];
                }
            }
            *b = s / self.a[p];
        }
        let mut by = vec![0.0; self.n2];
        for (q, b) in by.iter_mut().enumerate() {
            let mut s = self.input_bar[q].abs();
            for p in 0..self.n1 {
                for r in 0..self.n1 {
                    s += self.d_bar.get(p, q, r).abs()
                        * self.k_bar.get(p, q, r).total_mass()
                        * self.h_bar.get(p, q, r).total_mass()
                        * gbb[p]
                        * gbb[r];
                }
            }
            *b = s / self.a_bar[q];
        }
        Some((bx, by))
    }

    /// Right-hand side at a constant state, with all kernels at full mass.
    pub fn stationary_rhs(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gy: Vec<f64> = (0..self.n2).map(|q| self.g[q].eval(y[q])).collect();
        let gx: Vec<f64> = (0..self.n1).map(|p| self.g_bar[p].eval(x[p])).collect();
        let mut fx = vec![0.0; self.n1];
        for p in 0..self.n1 {
            let mut s = self.input[p] - self.a[p] * x[p];
            for q in 0..self.n2 {
                for r in 0..self.n2 {
                    let d = *self.d.get(q, p, r);
                    if d != 0.0 {
                        s += d * self.k.get(q, p, r).total_mass() * gy[q] * self.h.get(q, p, r).total_mass() * gy[r];
                    }
                }
            }
            fx[p] = s;
        }
        let mut fy = vec![0.0; self.n2];
        for q in 0..self.n2 {
            let mut s = self.input_bar[q] - self.a_bar[q] * y[q];
            for p in 0..self.n1 {
                for r in 0..self.n1 {
                    let d = *self.d_bar.get(p, q, r);
                    if d != 0.0 {
                        s += d
                            * self.k_bar.get(p, q, r).total_mass()
                            * gx[p]
                            * self.h_bar.get(p, q, r).total_mass()
                            * gx[r];
                    }
                }
            }
            fy[q] = s;
        }
        (fx, fy)
    }

    /// Lowers the network to the generic form the solver integrates.
    /// State layout is `x_1..x_n1, y_1..y_n2`.
    pub fn to_system(&self) -> NeutralSystem {
        let n1 = self.n1;
        let mut sys = NeutralSystem::new(self.delta, self.mu);
        for p in 0..n1 {
            sys.push_component(self.c, self.a[p], self.input[p], self.history_x[p].clone());
        }
        for q in 0..self.n2 {
            sys.push_component(self.c_bar, self.a_bar[q], self.input_bar[q], self.history_y[q].clone());
        }
        let sig_y: Vec<usize> = (0..self.n2)
            .map(|q| sys.add_signal(Signal::new(n1 + q, self.g[q].clone())))
            .collect();
        let sig_x: Vec<usize> = (0..n1)
            .map(|p| sys.add_signal(Signal::new(p, self.g_bar[p].clone())))
            .collect();
        for p in 0..n1 {
            for q in 0..self.n2 {
                for s in 0..self.n2 {
                    let d = *self.d.get(q, p, s);
                    let (k, h) = (self.k.get(q, p, s), self.h.get(q, p, s));
                    if d == 0.0 || k.is_zero() || h.is_zero() {
                        continue;
                    }
                    let kk = sys.add_kernel(k.clone());
                    let hh = sys.add_kernel(h.clone());
                    sys.products.push(Product {
                        equation: p,
                        coef: d,
                        factors: vec![(kk, sig_y[q]), (hh, sig_y[s])],
                    });
                }
            }
        }
        for q in 0..self.n2 {
            for p in 0..n1 {
                for r in 0..n1 {
                    let d = *self.d_bar.get(p, q, r);
                    let (k, h) = (self.k_bar.get(p, q, r), self.h_bar.get(p, q, r));
                    if d == 0.0 || k.is_zero() || h.is_zero() {
                        continue;
                    }
                    let kk = sys.add_kernel(k.clone());
                    let hh = sys.add_kernel(h.clone());
                    sys.products.push(Product {
                        equation: n1 + q,
                        coef: d,
                        factors: vec![(kk, sig_x[p]), (hh, sig_x[r])],
                    });
                }
            }
        }
        sys.names = self.state_names();
        sys
    }

    pub fn state_names(&self) -> Vec<String> {
        (1..=self.n1)
            .map(|p| format!("x{p}"))
            .chain((1..=self.n2).map(|q| format!("y{q}")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// max-abs of the stationary right-hand side
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("fixed-point iteration is not contracting: residual {residual:e} at iteration {iteration} did not shrink over the last {window} iterations")]
    NotContracting {
        iteration: usize,
        residual: f64,
        window: usize,
    },
    #[error("no equilibrium to {tol:e} after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64, tol: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

const DAMPING: f64 = 0.5;
const CONTRACTION_WINDOW: usize = 10;

/// Damped fixed-point iteration `u <- (1 - w) u + w T(u)` from the origin, `w = 1/2`.
pub fn find_equilibrium(net: &BamNetwork, tol: f64, max_iter: usize) -> Result<Equilibrium, EquilibriumError> {
    find_equilibrium_traced(net, tol, max_iter).map(|(e, _)| e)
}

/// As [`find_equilibrium`], also returning every iterate `(x, y)`.
pub fn find_equilibrium_traced(
    net: &BamNetwork,
    tol: f64,
    max_iter: usize,
) -> Result<(Equilibrium, Vec<(Vec<f64>, Vec<f64>)>), EquilibriumError> {
    net.validate()?;
    let mut x = vec![0.0; net.n1];
    let mut y = vec![0.0; net.n2];
    let mut trace = vec![(x.clone(), y.clone())];
    let mut history = Vec::new();
    for it in 0..=max_iter {
        let (fx, fy) = net.stationary_rhs(&x, &y);
        let residual = fx.iter().chain(&fy).fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= tol {
            return Ok((
                Equilibrium {
                    x,
                    y,
                    residual,
                    iterations: it,
                },
                trace,
            ));
        }
        if !residual.is_finite() {
            return Err(EquilibriumError::NotContracting {
                iteration: it,
                residual,
                window: CONTRACTION_WINDOW,
            });
        }
        history.push(residual);
        if it >= CONTRACTION_WINDOW && residual >= history[it - CONTRACTION_WINDOW] {
            return Err(EquilibriumError::NotContracting {
                iteration: it,
                residual,
                window: CONTRACTION_WINDOW,
            });
        }
        if it == max_iter {
            return Err(EquilibriumError::MaxIterations {
                iterations: it,
                residual,
                tol,
            });
        }
        // T(u)_p = u_p + f_p / a_p
        for p in 0..net.n1 {
            x[p] += DAMPING * fx[p] / net.a[p];
        }
        for q in 0..net.n2 {
            y[q] += DAMPING * fy[q] / net.a_bar[q];
        }
        trace.push((x.clone(), y.clone()));
    }
    unreachable!("loop returns on its last iteration")
}

/// The same network written in the deviation `u = x - x*`, `v = y - y*`;
/// its equilibrium is the origin.
pub fn shift_to_origin(net: &BamNetwork, eq: &Equilibrium) -> BamNetwork {
    let mut out = net.clone();
    for q in 0..net.n2 {
        out.g[q] = net.g[q].shifted(eq.y[q]);
        out.input_bar[q] = net.input_bar[q] - net.a_bar[q] * eq.y[q];
        out.history_y[q] = net.history_y[q].minus(eq.y[q]);
    }
    for p in 0..net.n1 {
        out.g_bar[p] = net.g_bar[p].shifted(eq.x[p]);
        out.input[p] = net.input[p] - net.a[p] * eq.x[p];
        out.history_x[p] = net.history_x[p].minus(eq.x[p]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BamNetwork {
        let mut n = BamNetwork::blank(1, 1);
        n.a = vec![2.0];
        n.a_bar = vec![3.0];
        n.input = vec![0.5];
        n.input_bar = vec![-0.25];
        n.d.set(0, 0, 0, 1.0);
        n.d_bar.set(0, 0, 0, -0.5);
        let e = Kernel::exponential(2.0, 1.0).unwrap();
        n.k.set(0, 0, 0, e.clone());
        n.h.set(0, 0, 0, e.clone());
        n.k_bar.set(0, 0, 0, e.clone());
        n.h_bar.set(0, 0, 0, e);
        n
    }

    #[test]
    fn tensor_indexing_is_row_major() {
        let mut t = Tensor3::filled([2, 3, 4], 0usize);
        t.set(1, 2, 3, 7);
        assert_eq!(*t.get(1, 2, 3), 7);
        assert_eq!(t.iter().position(|&v| v == 7), Some(23));
    }

    #[test]
    fn sampled_history_interpolates_and_clamps() {
        let h = History::sampled(vec![-2.0, -1.0, 0.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(h.eval(-5.0), 1.0);
        assert_eq!(h.eval(-1.5), 2.0);
        assert_eq!(h.eval(0.0), 2.0);
        assert!(History::sampled(vec![0.0, -1.0], vec![1.0, 1.0]).is_err());
        assert!(History::sampled(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn equilibrium_solves_stationary_equations() {
        let net = small();
        let eq = find_equilibrium(&net, 1e-14, 500).unwrap();
        let (fx, fy) = net.stationary_rhs(&eq.x, &eq.y);
        assert!(fx[0].abs() < 1e-14 && fy[0].abs() < 1e-14);
    }

    #[test]
    fn iterates_stay_inside_box() {
        let net = small();
        let (bx, by) = net.box_bounds().unwrap();
        let (_, trace) = find_equilibrium_traced(&net, 1e-14, 500).unwrap();
        for (x, y) in trace {
            assert!(x[0].abs() <= bx[0] && y[0].abs() <= by[0]);
        }
    }

    #[test]
    fn shifted_network_rests_at_origin() {
        let net = small();
        let eq = find_equilibrium(&net, 1e-14, 500).unwrap();
        let shifted = shift_to_origin(&net, &eq);
        let (fx, fy) = shifted.stationary_rhs(&[0.0], &[0.0]);
        assert!(fx[0].abs() < 1e-14 && fy[0].abs() < 1e-14);
        let zero = Equilibrium {
            x: vec![0.0],
            y: vec![0.0],
            residual: 0.0,
            iterations: 0,
        };
        assert_eq!(shift_to_origin(&shifted, &zero), shifted);
    }

    #[test]
    fn strong_positive_feedback_is_not_contracting() {
        let mut net = small();
        net.g = vec![Activation::linear()];
        net.g_bar = vec![Activation::linear()];
        net.d.set(0, 0, 0, 400.0);
        net.d_bar.set(0, 0, 0, 400.0);
        net.input = vec![5.0];
        net.input_bar = vec![5.0];
        assert!(matches!(
            find_equilibrium(&net, 1e-12, 1000),
            Err(EquilibriumError::NotContracting { .. })
        ));
    }

    #[test]
    fn validation_names_the_field() {
        let mut net = small();
        net.a = vec![-1.0];
        net.c = 1.5;
        let err = net.validate().unwrap_err().to_string();
        assert!(err.contains("network.a[1]"), "{err}");
        assert!(err.contains("network.c"), "{err}");
    }
}
