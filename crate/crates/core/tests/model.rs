mod common;

use common::{ex1, ex2, k, swap_x};
use fracbam::model::{
    find_equilibrium, find_equilibrium_traced, shift_to_origin, Activation, BamNetwork, Equilibrium, History,
    NetworkError,
};
use proptest::prelude::*;

fn check_against_oracle(eq: &Equilibrium, prefix: &str) {
    let got: Vec<f64> = eq.x.iter().chain(&eq.y).cloned().collect();
    for (i, v) in got.iter().enumerate() {
        let want = k(&format!("{prefix}.eq{}", i + 1));
        assert!((v - want).abs() < 1e-8, "{prefix} component {i}: {v} vs {want}");
    }
}

#[test]
fn tanh_equilibrium_matches_oracle() {
    let eq = find_equilibrium(&ex1(), 1e-12, 10_000).unwrap();
    assert!(eq.residual <= 1e-12);
    check_against_oracle(&eq, "tanh");
}

#[test]
fn asinh_equilibrium_matches_oracle() {
    check_against_oracle(&find_equilibrium(&ex2(), 1e-12, 10_000).unwrap(), "asinh");
}

#[test]
fn decoupled_linear_equilibria() {
    let mut n = BamNetwork::blank(3, 2);
    n.a = vec![2.0, 3.0, 4.0];
    n.input = n.a.clone();
    n.a_bar = vec![5.0, 6.0];
    n.input_bar = n.a_bar.clone();
    let eq = find_equilibrium(&n, 1e-14, 1000).unwrap();
    assert!(eq.x.iter().chain(&eq.y).all(|v| (v - 1.0).abs() < 1e-13));

    let mut s = BamNetwork::blank(1, 1);
    s.a = vec![4.0];
    s.input = vec![2.0];
    assert!((find_equilibrium(&s, 1e-14, 1000).unwrap().x[0] - 0.5).abs() < 1e-13);
}

#[test]
fn relabeling_permutes_the_equilibrium() {
    let a = find_equilibrium(&ex1(), 1e-13, 10_000).unwrap();
    let b = find_equilibrium(&swap_x(&ex1()), 1e-13, 10_000).unwrap();
    assert!((a.x[0] - b.x[1]).abs() < 1e-12 && (a.x[1] - b.x[0]).abs() < 1e-12);
    assert!((a.y[0] - b.y[0]).abs() < 1e-12 && (a.y[1] - b.y[1]).abs() < 1e-12);
}

#[test]
fn iterates_stay_in_the_box() {
    let net = ex1();
    let (bx, by) = net.box_bounds().unwrap();
    let (_, trace) = find_equilibrium_traced(&net, 1e-13, 10_000).unwrap();
    for (x, y) in trace {
        assert!(x.iter().zip(&bx).all(|(v, b)| v.abs() <= *b + 1e-15));
        assert!(y.iter().zip(&by).all(|(v, b)| v.abs() <= *b + 1e-15));
    }
}

#[test]
fn shifting_by_zero_is_the_identity() {
    let net = ex1();
    let zero = Equilibrium {
        x: vec![0.0; 2],
        y: vec![0.0; 2],
        residual: 0.0,
        iterations: 0,
    };
    let twice = shift_to_origin(&shift_to_origin(&net, &zero), &zero);
    assert_eq!(twice, net);
}

#[test]
fn shifted_network_rests_at_the_origin() {
    let mut net = ex1();
    let eq = find_equilibrium(&net, 1e-14, 10_000).unwrap();
    net.history_x = eq.x.iter().map(|v| History::Constant(*v)).collect();
    net.history_y = eq.y.iter().map(|v| History::Constant(*v)).collect();
    let s = shift_to_origin(&net, &eq);
    assert!(s.history_x.iter().chain(&s.history_y).all(|h| h.sup_deviation(0.0) == 0.0));
    let (fx, fy) = s.stationary_rhs(&[0.0; 2], &[0.0; 2]);
    assert!(fx.iter().chain(&fy).all(|v| v.abs() < 1e-13));
}

#[test]
fn validation_names_each_bad_field() {
    let mut net = ex1();
    net.a[1] = -3.0;
    net.c_bar = 1.0;
    net.delta = 1.5;
    let NetworkError::Invalid(errs) = net.validate().unwrap_err();
    let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
    assert!(fields.contains(&"network.a[2]"));
    assert!(fields.contains(&"network.c_bar"));
    assert!(fields.contains(&"network.delta"));
    assert!(find_equilibrium(&net, 1e-12, 10).is_err());
}

#[test]
fn runaway_iteration_is_reported() {
    let mut net = BamNetwork::blank(1, 1);
    net.g = vec![Activation::linear()];
    net.g_bar = vec![Activation::linear()];
    net.d.set(0, 0, 0, 50.0);
    net.k.set(0, 0, 0, fracbam::kernels::Kernel::exponential(1.0, 1.0).unwrap());
    net.h.set(0, 0, 0, fracbam::kernels::Kernel::exponential(1.0, 1.0).unwrap());
    net.d_bar.set(0, 0, 0, 50.0);
    net.k_bar.set(0, 0, 0, fracbam::kernels::Kernel::exponential(1.0, 1.0).unwrap());
    net.h_bar.set(0, 0, 0, fracbam::kernels::Kernel::exponential(1.0, 1.0).unwrap());
    net.input = vec![1.0];
    assert!(find_equilibrium(&net, 1e-12, 10_000).is_err());
}

proptest! {
    #[test]
    fn activation_metadata_holds(u in -50.0f64..50.0, v in -50.0f64..50.0, off in -3.0f64..3.0) {
        for g in [Activation::tanh(), Activation::asinh(), Activation::linear()] {
            let g = g.shifted(off);
            prop_assert!((g.eval(u) - g.eval(v)).abs() <= g.lipschitz() * (u - v).abs() * (1.0 + 1e-12) + 1e-15);
            if let Some(b) = g.bound() {
                prop_assert!(g.eval(u).abs() <= b);
            }
        }
    }

    #[test]
    fn sampled_history_interpolates(a in -5.0f64..5.0, b in -5.0f64..5.0, s in 0.0f64..1.0) {
        let h = History::sampled(vec![-2.0, -1.0], vec![a, b]).unwrap();
        prop_assert!((h.eval(-2.0 + s) - (a + (b - a) * s)).abs() < 1e-12);
        prop_assert_eq!(h.eval(-7.0), a);
        prop_assert_eq!(h.eval(0.0), b);
    }
}
