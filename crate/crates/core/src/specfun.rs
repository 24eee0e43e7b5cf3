//! Exponentially scaled modified Bessel functions `e^{-z} I_n(z)`, `n = 0..=3`.
//!
//! Below [`SERIES_CROSSOVER`] the ascending power series is summed directly;
//! every term is positive, so the sum carries no cancellation. Above it the
//! Hankel asymptotic expansion is summed until its terms stop shrinking. At
//! the crossover the smallest asymptotic term is about `e^{-2z} < 1e-17`.
//!
//! The integrands of the effective potential also need the entire functions
//! `R_n(z) = e^{-z} I_n(z) / (z/2)^n`, which stay finite at `z = 0`; see
//! [`scaled_ratios`].

use crate::error::{Error, Result};

/// Argument at which evaluation switches from the power series to the
/// asymptotic expansion.
pub const SERIES_CROSSOVER: f64 = 20.0;

pub const MAX_ORDER: usize = 3;

/// `e^{-z} I_n(z)` for `0 <= n <= 3`, `z >= 0`.
pub fn bessel_i_scaled(n: usize, z: f64) -> Result<f64> {
    if n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("Bessel order {n} exceeds {MAX_ORDER}")));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Bessel argument must be finite and non-negative, got {z}"
        )));
    }
    Ok(ie_unchecked(n, z))
}

pub(crate) fn ie_unchecked(n: usize, z: f64) -> f64 {
    if z < SERIES_CROSSOVER {
        ie_series(n, z)
    } else {
        ie_asymptotic(n, z)
    }
}

/// Power-series branch, usable at any `z` (slow for large `z`).
pub fn ie_series(n: usize, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    ratio_series(n, z) * half.powi(n as i32)
}

/// Asymptotic branch, accurate only for large `z`.
pub fn ie_asymptotic(n: usize, z: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    let inv8z = 1.0 / (8.0 * z);
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) * inv8z / k as f64;
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// `e^{-z} sum_k q^k / (k! (k+n)!)` with `q = z^2/4`.
fn ratio_series(n: usize, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0 / factorial(n);
    let mut sum = term;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= q / ((k * (k + n)) as f64);
        sum += term;
        if term < 1e-17 * sum || k > 400 {
            break;
        }
    }
    sum * (-z).exp()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `[R_0(z), R_1(z), R_2(z)]` with `R_n(z) = e^{-z} I_n(z) / (z/2)^n`.
///
/// `R_n(0) = 1/n!`. The three orders share one series loop.
pub fn scaled_ratios(z: f64) -> [f64; 3] {
    if z < SERIES_CROSSOVER {
        let q = 0.25 * z * z;
        let (mut t0, mut s0, mut s1, mut s2) = (1.0, 1.0, 1.0, 0.5);
        let mut k = 0usize;
        loop {
            k += 1;
            let kf = k as f64;
            t0 *= q / (kf * kf);
            let t1 = t0 / (kf + 1.0);
            let t2 = t1 / (kf + 2.0);
            s0 += t0;
            s1 += t1;
            s2 += t2;
            if t0 < 1e-17 * s0 || k > 400 {
                break;
            }
        }
        let e = (-z).exp();
        [s0 * e, s1 * e, s2 * e]
    } else {
        let half = 0.5 * z;
        [
            ie_asymptotic(0, z),
            ie_asymptotic(1, z) / half,
            ie_asymptotic(2, z) / (half * half),
        ]
    }
}
