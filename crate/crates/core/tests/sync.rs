mod common;

use common::{ex1, ex2, k, sup_diff};
use fracbam::model::{find_equilibrium, Equilibrium, History};
use fracbam::solver::{simulate, SolverConfig};
use fracbam::stability::{certify_bounded, check_envelope};
use fracbam::sync::{sync_certificate, synchronize, FeedbackGains, LayerHistory};

fn consts(v: &[f64]) -> Vec<History> {
    v.iter().map(|x| History::Constant(*x)).collect()
}

fn drive() -> LayerHistory {
    LayerHistory {
        x: consts(&[-0.5, -1.0]),
        y: consts(&[-0.75, -1.5]),
    }
}

fn response() -> LayerHistory {
    LayerHistory {
        x: consts(&[-1.0, -1.75]),
        y: consts(&[-1.0, -2.0]),
    }
}

fn cfg() -> SolverConfig {
    SolverConfig {
        step: 0.02,
        t_end: 10.0,
        ..Default::default()
    }
}

fn gains(b: f64) -> FeedbackGains {
    FeedbackGains::new(b, b).unwrap()
}

#[test]
fn identical_histories_never_separate() {
    let run = synchronize(&ex1(), &drive(), &drive(), gains(2.0), &cfg()).unwrap();
    assert!(run.error_norms().iter().all(|e| *e < 1e-10));
}

#[test]
fn feedback_drives_the_error_down() {
    let run = synchronize(&ex1(), &drive(), &response(), gains(2.0), &cfg()).unwrap();
    let norms = run.error_norms();
    assert!(norms[norms.len() - 1] < 0.05 * norms[0], "{} vs {}", norms[norms.len() - 1], norms[0]);
    assert_eq!(run.error.names, ["e_1", "e_2", "ebar_1", "ebar_2"]);
}

#[test]
fn error_is_response_minus_drive() {
    let run = synchronize(&ex2(), &drive(), &response(), gains(2.0), &cfg()).unwrap();
    assert_eq!(run.drive.times, run.error.times);
    assert_eq!(run.response.times, run.error.times);
    for ((d, r), e) in run.drive.states.iter().zip(&run.response.states).zip(&run.error.states) {
        for i in 0..4 {
            assert_eq!(e[i], r[i] - d[i]);
        }
    }
}

#[test]
fn error_system_residual_is_small() {
    // the solution has a t^delta corner at 0, so only the residual after the
    // first delay interval measures the scheme
    let late = |r: &[f64], h: f64| r[(1.0 / h).round() as usize..].iter().cloned().fold(0.0, f64::max);
    let run = synchronize(&ex1(), &drive(), &response(), gains(2.0), &cfg()).unwrap();
    let worst = late(&run.error_residual, 0.02);
    assert!(worst < 1e-3, "residual {worst}");
    let fine = synchronize(
        &ex1(),
        &drive(),
        &response(),
        gains(2.0),
        &SolverConfig {
            step: 0.01,
            ..cfg()
        },
    )
    .unwrap();
    let finer = late(&fine.error_residual, 0.01);
    assert!(finer < 0.75 * worst, "{finer} vs {worst}");
}

#[test]
fn zero_gain_is_two_independent_runs() {
    let net = ex1();
    let run = synchronize(&net, &drive(), &response(), gains(0.0), &cfg()).unwrap();
    let mut a = net.clone();
    a.history_x = drive().x;
    a.history_y = drive().y;
    let mut b = net.clone();
    b.history_x = response().x;
    b.history_y = response().y;
    let ta = simulate(&a.to_system(), &cfg()).unwrap();
    let tb = simulate(&b.to_system(), &cfg()).unwrap();
    for i in 0..ta.times.len() {
        let diff: Vec<f64> = tb.states[i].iter().zip(&ta.states[i]).map(|(r, d)| r - d).collect();
        assert!(sup_diff(&run.error.states[i], &diff) < 1e-12);
        assert!(sup_diff(&run.drive.states[i], &ta.states[i]) < 1e-12);
    }
}

#[test]
fn gains_raise_the_decay_rate() {
    let net = ex1();
    let base = certify_bounded(&net, 0.4).unwrap();
    let same = sync_certificate(&net, gains(0.0), 0.4).unwrap();
    assert_eq!(base, same);
    let two = sync_certificate(&net, gains(2.0), 0.4).unwrap();
    assert_eq!(two.xi, k("gains2.xi"));
    assert!((two.neutral_gate - k("gains2.G3")).abs() < 1e-12 * two.neutral_gate);
    assert!(two.neutral_gate < base.neutral_gate);
    let ten = sync_certificate(&net, gains(10.0), 0.4).unwrap();
    assert!(ten.neutral_gate < two.neutral_gate);
}

#[test]
fn gate_falls_along_the_gain_ladder() {
    let net = ex1();
    let mut prev = f64::INFINITY;
    for b in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let cert = sync_certificate(&net, gains(b), 0.4).unwrap();
        assert!((cert.neutral_gate - k(&format!("gains{b}.G3"))).abs() < 1e-12);
        assert!(cert.neutral_gate <= prev);
        prev = cert.neutral_gate;
    }
}

#[test]
fn unbounded_network_gets_a_local_certificate() {
    let cert = sync_certificate(&ex2(), gains(2.0), 0.3).unwrap();
    assert!(cert.unbounded.is_some());
    assert_eq!(cert.xi, 7.0);
}

#[test]
fn error_envelope_is_finite() {
    let net = ex1();
    let run = synchronize(&net, &drive(), &response(), gains(2.0), &cfg()).unwrap();
    let origin = Equilibrium {
        x: vec![0.0; 2],
        y: vec![0.0; 2],
        residual: 0.0,
        iterations: 0,
    };
    let env = check_envelope(&run.error, &origin, 7.0, net.delta);
    assert!(env.c_fit.is_finite());
    assert!(find_equilibrium(&net, 1e-12, 10_000).is_ok());
}

#[test]
fn negative_gains_are_rejected() {
    assert!(FeedbackGains::new(-1.0, 0.0).is_err());
    assert!(FeedbackGains::new(1.0, f64::NAN).is_err());
    let short = LayerHistory {
        x: consts(&[0.0]),
        y: consts(&[0.0, 0.0]),
    };
    assert!(synchronize(&ex1(), &short, &drive(), gains(1.0), &cfg()).is_err());
}
