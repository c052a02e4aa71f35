#![allow(dead_code)]

use std::collections::HashMap;

use fracbam::kernels::Kernel;
use fracbam::model::{Activation, BamNetwork, History};

const CONSTANTS: &str = include_str!("../data/constants.txt");

/// Values written by tools/oracles/constants.py.
pub fn constants() -> HashMap<String, f64> {
    CONSTANTS
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
        .collect()
}

pub fn k(name: &str) -> f64 {
    *constants().get(name).unwrap_or_else(|| panic!("no reference value {name}"))
}

/// The tanh network with the exponential kernels used in the examples.
pub fn ex1() -> BamNetwork {
    let mut n = BamNetwork::blank(2, 2);
    n.delta = 0.9;
    n.mu = 1.0;
    n.c = 1e-4;
    n.c_bar = 1e-4;
    n.a = vec![5.0, 7.0];
    n.a_bar = vec![6.0, 8.0];
    n.input = vec![1.0, 0.75];
    n.input_bar = vec![0.5, 1.0];
    let d = [
        ((0, 0, 0), 1.3),
        ((0, 0, 1), 0.5),
        ((1, 0, 0), 1.0),
        ((1, 0, 1), 0.25),
        ((0, 1, 0), 0.75),
        ((0, 1, 1), 1.0),
        ((1, 1, 0), 0.5),
        ((1, 1, 1), 0.4),
    ];
    let d_bar = [
        ((0, 0, 0), 0.6),
        ((0, 0, 1), 1.0),
        ((1, 0, 0), 0.5),
        ((1, 0, 1), 0.25),
        ((0, 1, 0), 1.0),
        ((0, 1, 1), 1.4),
        ((1, 1, 0), 0.75),
        ((1, 1, 1), 1.25),
    ];
    let e5 = Kernel::exponential(5.0, 1.0).unwrap();
    let e6 = Kernel::exponential(6.0, 1.0).unwrap();
    for ((i, j, l), v) in d {
        n.d.set(i, j, l, v);
        n.k.set(i, j, l, e5.clone());
        n.h.set(i, j, l, e5.clone());
    }
    for ((i, j, l), v) in d_bar {
        n.d_bar.set(i, j, l, v);
        n.k_bar.set(i, j, l, e6.clone());
        n.h_bar.set(i, j, l, e6.clone());
    }
    n.history_x = vec![History::Constant(-0.5), History::Constant(-1.0)];
    n.history_y = vec![History::Constant(-0.75), History::Constant(-1.5)];
    n
}

/// The same network with asinh activations.
pub fn ex2() -> BamNetwork {
    let mut n = ex1();
    n.g = vec![Activation::asinh(); 2];
    n.g_bar = vec![Activation::asinh(); 2];
    n
}

/// One decoupled neuron: `D x = -lambda x`, `x(0) = x0`, no neutral term.
pub fn scalar(delta: f64, lambda: f64, x0: f64) -> BamNetwork {
    let mut n = BamNetwork::blank(1, 1);
    n.delta = delta;
    n.c = 0.0;
    n.c_bar = 0.0;
    n.a = vec![lambda];
    n.a_bar = vec![lambda];
    n.history_x = vec![History::Constant(x0)];
    n.history_y = vec![History::Constant(0.0)];
    n
}

/// Relabels the two `x` neurons.
pub fn swap_x(net: &BamNetwork) -> BamNetwork {
    let mut out = net.clone();
    let sw = |i: usize| 1 - i;
    out.a.swap(0, 1);
    out.input.swap(0, 1);
    out.history_x.swap(0, 1);
    out.g_bar.swap(0, 1);
    for q in 0..2 {
        for p in 0..2 {
            for s in 0..2 {
                out.d.set(q, sw(p), s, *net.d.get(q, p, s));
                out.k.set(q, sw(p), s, net.k.get(q, p, s).clone());
                out.h.set(q, sw(p), s, net.h.get(q, p, s).clone());
                out.d_bar.set(sw(q), p, sw(s), *net.d_bar.get(q, p, s));
                out.k_bar.set(sw(q), p, sw(s), net.k_bar.get(q, p, s).clone());
                out.h_bar.set(sw(q), p, sw(s), net.h_bar.get(q, p, s).clone());
            }
        }
    }
    out
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
