mod common;

use common::{ex1, scalar, sup_diff};
use fracbam::mittag_leffler::ml_one;
use fracbam::model::{find_equilibrium, shift_to_origin, History};
use fracbam::solver::{
    caputo_residual, caputo_residuals, neutral_defect_ulps, simulate, DelayWindow, MemoryPolicy, SolverConfig,
};
use fracbam::trajectory::Trajectory;

const ORACLE: &str = include_str!("data/delta_one.csv");

fn cfg(step: f64, t_end: f64) -> SolverConfig {
    SolverConfig {
        step,
        t_end,
        ..Default::default()
    }
}

fn scalar_error(step: f64) -> f64 {
    let tr = simulate(&scalar(0.9, 1.0, 1.0).to_system(), &cfg(step, 5.0)).unwrap();
    tr.times
        .iter()
        .zip(&tr.states)
        .map(|(t, s)| (s[0] - ml_one(0.9, -t.powf(0.9)).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[test]
fn scalar_relaxation_error_and_refinement() {
    let e1 = scalar_error(0.01);
    let e2 = scalar_error(0.005);
    assert!(e1 < 1e-3, "error {e1}");
    assert!(e1 / e2 >= 1.8, "refinement ratio {}", e1 / e2);
}

#[test]
fn order_one_matches_augmented_ode() {
    let mut net = ex1();
    net.delta = 1.0;
    net.c = 0.0;
    net.c_bar = 0.0;
    // trapezoidal at order one: 1.2e-4 at h = 0.005, a quarter of that here
    let step = 0.0025;
    let tr = simulate(&net.to_system(), &cfg(step, 10.0)).unwrap();
    let mut worst = 0.0f64;
    for line in ORACLE.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let i = (v[0] / step).round() as usize;
        worst = worst.max(sup_diff(&tr.states[i], &v[1..]));
    }
    assert!(worst < 1e-4, "sup error {worst}");
}

#[test]
fn equilibrium_start_stays_put() {
    let mut net = ex1();
    let eq = find_equilibrium(&net, 1e-14, 10_000).unwrap();
    net.history_x = eq.x.iter().map(|v| History::Constant(*v)).collect();
    net.history_y = eq.y.iter().map(|v| History::Constant(*v)).collect();
    let tr = simulate(&net.to_system(), &cfg(0.02, 10.0)).unwrap();
    let star: Vec<f64> = eq.x.iter().chain(&eq.y).cloned().collect();
    for s in &tr.states {
        assert!(sup_diff(s, &star) < 1e-9);
    }
    for r in caputo_residuals(&tr).unwrap().into_iter().skip(1) {
        assert!(r < 1e-8, "residual {r}");
    }
}

#[test]
fn residual_shrinks_with_step() {
    let res = |h: f64| {
        let tr = simulate(&scalar(0.9, 1.0, 1.0).to_system(), &cfg(h, 1.0)).unwrap();
        let i = (0.5 / h).round() as usize;
        caputo_residual(&tr, i).unwrap()
    };
    let (r1, r2, r3) = (res(0.02), res(0.01), res(0.005));
    let order1 = (r1 / r2).log2();
    let order2 = (r2 / r3).log2();
    assert!(order1 >= 1.0 && order2 >= 1.0, "observed orders {order1} {order2}");
    assert!((order1 - order2).abs() < 0.3);
}

#[test]
fn residual_needs_an_interior_index() {
    let tr = simulate(&scalar(0.9, 1.0, 1.0).to_system(), &cfg(0.1, 1.0)).unwrap();
    assert!(caputo_residual(&tr, 0).is_none());
    assert!(caputo_residual(&tr, tr.times.len()).is_none());
    let bare = Trajectory {
        details: None,
        ..tr
    };
    assert!(caputo_residual(&bare, 3).is_none());
}

#[test]
fn neutral_identity_holds_on_the_grid() {
    let tr = simulate(&ex1().to_system(), &cfg(0.02, 10.0)).unwrap();
    let ulps = neutral_defect_ulps(&tr).unwrap();
    assert!(ulps <= 1.0, "defect {ulps} ulps");
}

#[test]
fn vanishing_neutral_coefficient_is_continuous() {
    let mut a = ex1();
    a.c = 0.0;
    a.c_bar = 0.0;
    let mut b = a.clone();
    b.c = 1e-16;
    b.c_bar = 1e-16;
    let ta = simulate(&a.to_system(), &cfg(0.02, 10.0)).unwrap();
    let tb = simulate(&b.to_system(), &cfg(0.02, 10.0)).unwrap();
    for (x, y) in ta.states.iter().zip(&tb.states) {
        assert!(sup_diff(x, y) < 1e-12);
    }
}

#[test]
fn states_stay_in_the_a_priori_box() {
    let net = ex1();
    let (bx, by) = net.box_bounds().unwrap();
    let hist = [0.5f64, 1.0, 0.75, 1.5];
    let tr = simulate(&net.to_system(), &cfg(0.02, 10.0)).unwrap();
    let limits: Vec<f64> = bx.iter().chain(&by).zip(hist).map(|(b, h)| b.max(h)).collect();
    for s in &tr.states {
        for (v, lim) in s.iter().zip(&limits) {
            assert!(v.abs() <= lim + 1e-12);
        }
    }
}

#[test]
fn shifted_network_commutes_with_simulation() {
    let net = ex1();
    let eq = find_equilibrium(&net, 1e-14, 10_000).unwrap();
    let shifted = shift_to_origin(&net, &eq);
    let c = cfg(0.02, 10.0);
    let a = simulate(&net.to_system(), &c).unwrap();
    let b = simulate(&shifted.to_system(), &c).unwrap();
    let star: Vec<f64> = eq.x.iter().chain(&eq.y).cloned().collect();
    for (x, u) in a.states.iter().zip(&b.states) {
        let back: Vec<f64> = u.iter().zip(&star).map(|(u, s)| u + s).collect();
        assert!(sup_diff(x, &back) < 1e-10);
    }
}

#[test]
fn truncated_memory_tracks_full_memory() {
    let net = ex1();
    let full = simulate(&net.to_system(), &cfg(0.02, 10.0)).unwrap();
    let cut = SolverConfig {
        memory: MemoryPolicy::Truncated { cells: 250 },
        ..cfg(0.02, 10.0)
    };
    let trunc = simulate(&net.to_system(), &cut).unwrap();
    // the kernels lose e^{-25} of their mass beyond five time units
    for (x, y) in full.states.iter().zip(&trunc.states) {
        assert!(sup_diff(x, y) < 1e-9);
    }
}

#[test]
fn windows_agree_without_pre_history_mass() {
    // zero histories: nothing is lost by cutting the integrals at t = 0
    let mut net = ex1();
    net.history_x = vec![History::Constant(0.0); 2];
    net.history_y = vec![History::Constant(0.0); 2];
    let a = simulate(&net.to_system(), &cfg(0.02, 5.0)).unwrap();
    let b = simulate(
        &net.to_system(),
        &SolverConfig {
            window: DelayWindow::SinceStart,
            ..cfg(0.02, 5.0)
        },
    )
    .unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(sup_diff(x, y) < 1e-13);
    }
}

#[test]
fn csv_export_has_named_columns() {
    let tr = simulate(&ex1().to_system(), &cfg(0.5, 2.0)).unwrap();
    let csv = tr.to_csv();
    assert!(csv.starts_with("t,x1,x2,y1,y2\n"));
    assert_eq!(csv.lines().count(), 6);
}
