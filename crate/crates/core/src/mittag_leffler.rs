//! One- and two-parameter Mittag-Leffler functions on the real line.
//!
//! For order `0 < delta < 1` and `z = -x < 0` the evaluation is split by
//! `s = x^(1/delta)`, which controls both the cancellation in the power series
//! (largest term about `e^s`) and the truncation error of the asymptotic
//! expansion (about `e^-s`):
//!
//! * `s <= 4`: power series, Kahan-summed, terms built in log space;
//! * `s >= 45`: asymptotic expansion `-sum_k (-x)^-k / Gamma(rho - delta k)`;
//! * in between: a real integral along the cut of the Hankel contour.
//!
//! Positive arguments use the series (no cancellation). Order one is handled
//! by `exp`, the Euler integral and a three-term recurrence.

use std::f64::consts::PI;

use thiserror::Error;

use crate::gamma::{ln_gamma, rgamma, sin_pi};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions, QuadratureError};

const SERIES_LIMIT: f64 = 4.0;
const ASYMPTOTIC_LIMIT: f64 = 45.0;
/// Largest `z^(1/delta)` accepted for positive arguments; beyond it the value overflows.
const POSITIVE_LIMIT: f64 = 700.0;
/// Most negative argument accepted.
pub const MIN_ARGUMENT: f64 = -1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlError {
    #[error("order delta = {0} is outside (0, 1]")]
    Order(f64),
    #[error("second parameter rho = {0} must be positive")]
    Rho(f64),
    #[error("argument z = {0} is outside the supported range")]
    OutOfRange(f64),
    #[error("{name} = {value} is outside its domain")]
    Parameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Order pair `(delta, rho)` of `E_{delta, rho}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlOrder {
    pub delta: f64,
    pub rho: f64,
}

impl MlOrder {
    pub fn new(delta: f64, rho: f64) -> Result<Self, MlError> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(MlError::Order(delta));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(MlError::Rho(rho));
        }
        Ok(Self { delta, rho })
    }

    pub fn one(delta: f64) -> Result<Self, MlError> {
        Self::new(delta, 1.0)
    }

    pub fn eval(&self, z: f64) -> Result<f64, MlError> {
        if !z.is_finite() || z < MIN_ARGUMENT {
            return Err(MlError::OutOfRange(z));
        }
        if z > 0.0 && z.powf(1.0 / self.delta) > POSITIVE_LIMIT {
            return Err(MlError::OutOfRange(z));
        }
        let v = eval_unchecked(self.delta, self.rho, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(MlError::OutOfRange(z))
        }
    }
}

/// `E_delta(z)`.
pub fn ml_one(delta: f64, z: f64) -> Result<f64, MlError> {
    ml_two(delta, 1.0, z)
}

/// `E_{delta, rho}(z)`.
pub fn ml_two(delta: f64, rho: f64, z: f64) -> Result<f64, MlError> {
    MlOrder::new(delta, rho)?.eval(z)
}

/// Evaluation without the range checks; callers guarantee valid parameters.
/// Returns a non-finite value when the result overflows.
pub(crate) fn eval_unchecked(delta: f64, rho: f64, z: f64) -> f64 {
    if z == 0.0 {
        return rgamma(rho);
    }
    if delta == 1.0 {
        return order_one(rho, z);
    }
    if z > 0.0 {
        return series(delta, rho, z);
    }
    let x = -z;
    let s = x.powf(1.0 / delta);
    if s <= SERIES_LIMIT {
        return series(delta, rho, z);
    }
    if s >= ASYMPTOTIC_LIMIT {
        if let Some(v) = asymptotic(delta, rho, x) {
            return v;
        }
    }
    cut_integral(delta, rho, x)
}

struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// |z|^k / |Gamma(delta k + rho)| with the sign of the quotient, via logs when needed.
fn series_term(delta: f64, rho: f64, ln_abs_z: f64, negative: bool, k: usize) -> f64 {
    let arg = delta * k as f64 + rho;
    let sign_z = if negative && k % 2 == 1 { -1.0 } else { 1.0 };
    if arg < 170.0 {
        let r = rgamma(arg);
        if r == 0.0 {
            return 0.0;
        }
        let mag = (k as f64 * ln_abs_z + r.abs().ln()).exp();
        sign_z * r.signum() * mag
    } else {
        // Gamma is positive here
        sign_z * (k as f64 * ln_abs_z - ln_gamma(arg)).exp()
    }
}

fn series(delta: f64, rho: f64, z: f64) -> f64 {
    let ln_abs_z = z.abs().ln();
    let negative = z < 0.0;
    let mut acc = Kahan::new();
    // past the peak term near delta k = |z|^(1/delta) the terms fall monotonically
    let peak = (z.abs().powf(1.0 / delta) / delta).ceil() as usize + 2;
    let mut small = 0;
    let mut k = 0usize;
    loop {
        let t = series_term(delta, rho, ln_abs_z, negative, k);
        acc.add(t);
        if k > peak && t.abs() <= 1e-17 * acc.sum.abs().max(1e-300) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        k += 1;
        if k > 200_000 {
            break;
        }
    }
    acc.sum
}

/// Asymptotic expansion for `E_{delta,rho}(-x)`; `None` if the optimally
/// truncated series cannot reach double precision.
fn asymptotic(delta: f64, rho: f64, x: f64) -> Option<f64> {
    let ln_x = x.ln();
    let mut acc = Kahan::new();
    let mut prev_bound = f64::INFINITY;
    for k in 1..2000usize {
        let kf = k as f64;
        // |1/Gamma(rho - delta k)| <= Gamma(1 + delta k - rho) / pi, from the reflection formula
        let bound = (ln_gamma(1.0 + delta * kf - rho) - kf * ln_x).exp() / PI;
        let bound = if 1.0 + delta * kf - rho > 0.0 {
            bound
        } else {
            (-kf * ln_x).exp() * rgamma(rho - delta * kf).abs()
        };
        let term = {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-kf * ln_x).exp() * rgamma(rho - delta * kf)
        };
        let negligible = |b: f64, sum: f64| b <= 1e-16 * sum.abs() + 1e-18;
        if k > 2 && negligible(bound, acc.sum) {
            return Some(acc.sum);
        }
        // the reflection bound is only monotone once Gamma is increasing
        if bound > prev_bound && 1.0 + delta * kf - rho > 2.0 {
            // reached the smallest term; accept only if it is negligible
            return if prev_bound <= 1e-15 * acc.sum.abs() + 1e-17 {
                Some(acc.sum)
            } else {
                None
            };
        }
        acc.add(term);
        prev_bound = bound;
    }
    None
}

/// Real integral along the branch cut, valid for `0 < delta < 1`, `rho < 1 + delta`.
/// Larger `rho` is brought down by `E_{a,b}(z) = (E_{a,b-a}(z) - 1/Gamma(b-a)) / z`
/// until `rho <= 1 + delta/2`, which keeps the substitution exponent below `2/delta`.
fn cut_integral(delta: f64, rho: f64, x: f64) -> f64 {
    if rho > 1.0 + 0.5 * delta {
        let lower = cut_integral(delta, rho - delta, x);
        return (lower - rgamma(rho - delta)) / (-x);
    }
    let a = delta;
    let sb = sin_pi(rho);
    let sab = sin_pi(rho - a);
    let ca = (PI * a).cos();
    // r = u^m removes the r^(a - rho) endpoint singularity
    let m = 1.0 / (1.0 + a - rho);
    let r_max: f64 = 50.0;
    let u_max = r_max.powf(1.0 / m);
    // r^(a - rho) dr = m du, so only the smooth part remains
    let f = |u: f64| -> f64 {
        let r = u.powf(m);
        let ra = r.powf(a);
        let num = ra * sb + x * sab;
        let den = ra * ra + 2.0 * x * ra * ca + x * x;
        m * (-r).exp() * num / den
    };
    let peak = x.powf(1.0 / a);
    let mut breaks = Vec::new();
    for p in [peak, (x * ca.abs()).powf(1.0 / a), 1.0] {
        if p < r_max {
            breaks.push(p.powf(1.0 / m));
        }
    }
    let opts = QuadOptions::with_tolerance(1e-16, 1e-14);
    let value = match integrate_with_breaks(f, 0.0, u_max, &breaks, opts) {
        Ok((v, _)) => v,
        Err(_) => {
            let relaxed = QuadOptions {
                max_intervals: 20_000,
                ..QuadOptions::with_tolerance(1e-14, 1e-12)
            };
            integrate_with_breaks(f, 0.0, u_max, &breaks, relaxed)
                .map(|(v, _)| v)
                .unwrap_or(f64::NAN)
        }
    };
    value / PI
}

fn order_one(rho: f64, z: f64) -> f64 {
    if rho == 1.0 {
        return z.exp();
    }
    if z.abs() <= SERIES_LIMIT {
        return series(1.0, rho, z);
    }
    if rho > 1.0 {
        return euler_integral(rho, z);
    }
    // E_{1,rho}(z) = 1/Gamma(rho) + z E_{1,rho+1}(z)
    rgamma(rho) + z * order_one(rho + 1.0, z)
}

/// `E_{1,b}(z) = (1/Gamma(b)) int_0^1 exp(z (1 - s^(1/(b-1)))) ds` for `b > 1`.
fn euler_integral(b: f64, z: f64) -> f64 {
    let p = 1.0 / (b - 1.0);
    let f = |s: f64| (z * (1.0 - s.powf(p))).exp();
    // mass concentrates near s = 1 for z < 0 and near s = 0 for z > 0
    let breaks: Vec<f64> = [0.5, 0.9, 0.99, 0.999, 0.01, 0.1].to_vec();
    let opts = QuadOptions::with_tolerance(0.0, 1e-14);
    let v = integrate_with_breaks(f, 0.0, 1.0, &breaks, opts)
        .or_else(|_| integrate(f, 0.0, 1.0, QuadOptions::with_tolerance(0.0, 1e-12)))
        .map(|(v, _)| v)
        .unwrap_or(f64::NAN);
    v * rgamma(b)
}

/// Two-sided bound on `E_delta(-c t^delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enclosure {
    pub lower: f64,
    pub upper: f64,
}

impl Enclosure {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// `(1/(1 + c Gamma(1-delta) t^delta), 1/(1 + c t^delta / Gamma(1+delta)))`.
/// Defined for `0 < delta < 1` only.
pub fn mainardi_enclosure(delta: f64, c: f64, t: f64) -> Result<Enclosure, MlError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MlError::Order(delta));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(MlError::Parameter { name: "c", value: c });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(MlError::Parameter { name: "t", value: t });
    }
    let y = c * t.powf(delta);
    let lower = 1.0 / (1.0 + y * crate::gamma::gamma(1.0 - delta));
    let upper = 1.0 / (1.0 + y * rgamma(1.0 + delta));
    Ok(Enclosure { lower, upper })
}

/// Absolute difference between the two sides of
/// `I^sigma [t^(gamma-1) E_{beta,gamma}(c t^beta)](x) = x^(sigma+gamma-1) E_{beta,sigma+gamma}(c x^beta)`,
/// the left side by adaptive quadrature of the Riemann-Liouville integral.
pub fn frac_integral_identity_residual(
    sigma: f64,
    gamma: f64,
    beta: f64,
    c: f64,
    x: f64,
) -> Result<f64, MlError> {
    for (name, value) in [("sigma", sigma), ("gamma", gamma), ("x", x)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(MlError::Parameter { name, value });
        }
    }
    if !c.is_finite() {
        return Err(MlError::Parameter { name: "c", value: c });
    }
    let inner = MlOrder::new(beta, gamma)?;
    let outer = MlOrder::new(beta, sigma + gamma)?;
    // range-check the largest argument once, then integrate unchecked
    inner.eval(c * x.powf(beta))?;
    inner.eval(c * (0.5 * x).powf(beta))?;
    let e = |t: f64| eval_unchecked(beta, gamma, c * t.powf(beta));

    let half = 0.5 * x;
    let opts = QuadOptions::with_tolerance(1e-15, 1e-13);
    // [0, x/2] with t = v^(1/gamma): t^(gamma-1) dt = dv / gamma
    let left = integrate(
        |v: f64| {
            let t = v.powf(1.0 / gamma);
            (x - t).powf(sigma - 1.0) * e(t) / gamma
        },
        0.0,
        half.powf(gamma),
        opts,
    )?
    .0;
    // [x/2, x] with w = (x-t)^sigma: (x-t)^(sigma-1) dt = dw / sigma
    let right = integrate(
        |w: f64| {
            let t = x - w.powf(1.0 / sigma);
            t.powf(gamma - 1.0) * e(t) / sigma
        },
        0.0,
        half.powf(sigma),
        opts,
    )?
    .0;
    let lhs = (left + right) * rgamma(sigma);
    let rhs = x.powf(sigma + gamma - 1.0) * outer.eval(c * x.powf(beta))?;
    Ok((lhs - rhs).abs())
}
