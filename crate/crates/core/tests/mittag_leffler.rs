use fracbam::gamma::{gamma, rgamma};
use fracbam::mittag_leffler::{
    frac_integral_identity_residual, mainardi_enclosure, ml_one, ml_two,
};
use proptest::prelude::*;

const ORACLE: &str = include_str!("data/ml_oracle.csv");

fn oracle_rows() -> Vec<(f64, f64, f64, f64)> {
    ORACLE
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (v[0], v[1], v[2], v[3])
        })
        .collect()
}

#[test]
fn matches_high_precision_series() {
    let rows = oracle_rows();
    assert!(rows.len() >= 50);
    for (d, rho, z, want) in rows {
        let got = ml_two(d, rho, z).unwrap();
        let err = (got - want).abs() / want.abs().max(1.0);
        assert!(err < 1e-10, "E_{{{d},{rho}}}({z}) = {got}, want {want}");
    }
}

#[test]
fn first_oracle_points() {
    assert!((ml_one(0.9, -5.0).unwrap() - 3.443_132_480_409_842_390_5e-2).abs() < 1e-10);
    assert!((ml_two(0.9, 0.9, -2.0).unwrap() - 1.105_980_242_932_084_808e-1).abs() < 1e-10);
    assert!((ml_two(1.0, 2.0, -1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    assert!((ml_one(1.0, -1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
}

#[test]
fn order_one_is_exp() {
    for i in 0..=3500 {
        let z = -30.0 + i as f64 * 0.01;
        let v = ml_two(1.0, 1.0, z).unwrap();
        assert!((v - z.exp()).abs() < 1e-12 * z.exp().max(1.0));
    }
}

#[test]
fn mainardi_sandwich_on_lattice() {
    let mut violations = 0;
    for di in 1..=9 {
        let d = di as f64 / 10.0;
        for &c in &[0.5, 1.0, 5.0] {
            for ti in 1..=100 {
                let t = ti as f64 / 10.0;
                let e = mainardi_enclosure(d, c, t).unwrap();
                let v = ml_one(d, -c * t.powf(d)).unwrap();
                if !e.contains(v) {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn enclosure_formula_against_independent_gamma() {
    let e = mainardi_enclosure(0.9, 5.0, 1.0).unwrap();
    let g01 = statrs::function::gamma::gamma(0.1);
    let g19 = statrs::function::gamma::gamma(1.9);
    assert!((e.lower - 1.0 / (1.0 + 5.0 * g01)).abs() < 1e-13);
    assert!((e.upper - 1.0 / (1.0 + 5.0 / g19)).abs() < 1e-13);
}

#[test]
fn gamma_against_independent_implementation() {
    let mut x = 0.013;
    while x < 60.0 {
        let a = gamma(x);
        let b = statrs::function::gamma::gamma(x);
        // statrs itself is good to a few 1e-13 here
        assert!(((a - b) / b).abs() < 5e-13, "x={x}: {a} {b}");
        assert!((rgamma(x) * b - 1.0).abs() < 5e-13);
        x += 0.137;
    }
}

#[test]
fn decreasing_on_the_negative_axis() {
    for di in 1..10 {
        let d = di as f64 / 10.0;
        for &c in &[0.5, 1.0, 5.0] {
            let mut prev = 1.0;
            for ti in 1..=200 {
                let t = ti as f64 * 0.05;
                let v = ml_one(d, -c * t.powf(d)).unwrap();
                assert!(v < prev, "d={d} c={c} t={t}");
                prev = v;
            }
        }
    }
}

#[test]
fn identity_residual_examples() {
    assert!(frac_integral_identity_residual(1.0, 1.0, 1.0, 0.0, 2.0).unwrap() < 1e-10);
    assert!(frac_integral_identity_residual(0.9, 1.0, 0.9, -1.0, 1.0).unwrap() < 1e-8);
    assert!(frac_integral_identity_residual(0.5, 0.5, 0.5, -2.0, 3.0).unwrap() < 1e-8);
}

#[test]
fn identity_residual_lattice() {
    for &sigma in &[0.5, 0.9, 1.5] {
        for &gamma in &[0.5, 1.0, 1.5] {
            for &beta in &[0.5, 0.9, 1.0] {
                let r = frac_integral_identity_residual(sigma, gamma, beta, -1.0, 1.5).unwrap();
                assert!(r < 1e-8, "sigma={sigma} gamma={gamma} beta={beta}: {r}");
            }
        }
    }
}

proptest! {
    #[test]
    fn rho_one_is_the_one_parameter_function(d in 0.05f64..=1.0, z in -200.0f64..2.0) {
        prop_assert_eq!(ml_two(d, 1.0, z).unwrap().to_bits(), ml_one(d, z).unwrap().to_bits());
    }

    #[test]
    fn negative_axis_values_lie_in_unit_interval(d in 0.05f64..1.0, x in 0.0f64..1e4) {
        let v = ml_one(d, -x).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0, "E_{}(-{}) = {}", d, x, v);
    }

    #[test]
    fn recurrence_links_neighbouring_rho(d in 0.1f64..1.0, rho in 0.2f64..1.5, x in 0.1f64..50.0) {
        // E_{d,rho}(z) = 1/Gamma(rho) + z E_{d,rho+d}(z)
        let z = -x;
        let lhs = ml_two(d, rho, z).unwrap();
        let rhs = rgamma(rho) + z * ml_two(d, rho + d, z).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + x), "{} vs {}", lhs, rhs);
    }
}
