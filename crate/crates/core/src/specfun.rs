//! Bessel-type kernels used by the propagation and efficiency code.
//!
//! Integer-order J₀, J₁ use the ascending power series for |x| ≤ 12 and the
//! Hankel asymptotic expansion beyond. At x = 12 the series loses at most a
//! few ulps of its largest term (~4·10³) and the smallest asymptotic term is
//! ~10⁻¹², so both branches sit well inside 10⁻¹⁰ of each other at the seam.
//!
//! The modified functions are only exposed in exponentially scaled form,
//! `e^{-x} I_n(x)`, because the arguments reached by the efficiency formula
//! routinely exceed the f64 overflow point of `I_n`.

use crate::error::{domain, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Crossover between ascending series and Hankel expansion for J₀, J₁.
pub const J_SERIES_LIMIT: f64 = 12.0;
/// Crossover between ascending series and large-argument expansion for scaled I₀, I₁.
pub const I_SERIES_LIMIT: f64 = 20.0;

/// Accuracy contract for the kernels in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySpec {
    pub max_relative_error: f64,
    pub tested_range: (f64, f64),
}

/// What the test-suite verifies for every kernel here.
pub const ACCURACY: AccuracySpec = AccuracySpec {
    max_relative_error: 1e-10,
    tested_range: (0.0, 100.0),
};

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("bessel_j0", format!("non-finite argument {x}")));
    }
    Ok(j0(x))
}

/// Bessel function of the first kind, order one. Odd in `x`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("bessel_j1", format!("non-finite argument {x}")));
    }
    Ok(j1(x))
}

/// The forward-scattering kernel `J₁(2√u)/√u`, continuously extended to 1 at u = 0.
pub fn sr_kernel(u: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(domain(
            "sr_kernel",
            format!("argument must be finite and >= 0, got {u}"),
        ));
    }
    Ok(sr_kernel_unchecked(u))
}

/// `e^{-x} I₀(x)` for x ≥ 0.
pub fn bessel_i0_scaled(x: f64) -> Result<f64> {
    check_nonnegative("bessel_i0_scaled", x)?;
    Ok(i_scaled(0, x))
}

/// `e^{-x} I₁(x)` for x ≥ 0.
pub fn bessel_i1_scaled(x: f64) -> Result<f64> {
    check_nonnegative("bessel_i1_scaled", x)?;
    Ok(i_scaled(1, x))
}

fn check_nonnegative(function: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || x.is_nan() {
        return Err(domain(function, format!("argument must be >= 0, got {x}")));
    }
    Ok(())
}

pub(crate) fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= J_SERIES_LIMIT {
        j_series(0, ax)
    } else {
        j_hankel(0, ax)
    }
}

pub(crate) fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= J_SERIES_LIMIT {
        j_series(1, ax)
    } else {
        j_hankel(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Kernel without argument checks; caller guarantees `u >= 0`.
pub(crate) fn sr_kernel_unchecked(u: f64) -> f64 {
    // 2√u ≤ 12  ⇔  u ≤ 36
    if u <= 36.0 {
        // Σ (-u)^k / (k! (k+1)!)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -u / (k * (k + 1.0));
            sum += term;
            if term.abs() <= 1e-17 * sum.abs().max(1e-3) {
                break;
            }
        }
        sum
    } else {
        let s = u.sqrt();
        j_hankel(1, 2.0 * s) / s
    }
}

/// Ascending series `Σ (-1)^k (x/2)^{2k+n} / (k! (k+n)!)` for n ∈ {0, 1}.
fn j_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = if n == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut max_term = term.abs();
    let mut k = 0.0;
    let nf = n as f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + nf));
        sum += term;
        max_term = max_term.max(term.abs());
        if term.abs() < 1e-18 * max_term && k > half {
            break;
        }
    }
    sum
}

/// Hankel expansion `J_n(x) ≈ √(2/πx) (P cos χ − Q sin χ)`, χ = x − (n/2 + 1/4)π.
fn j_hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let eight_x = 8.0 * x;
    let mut term = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * eight_x);
        let mag = term.abs();
        if mag > prev || mag < 1e-17 {
            break;
        }
        prev = mag;
        // a_k enters P for even k, Q for odd k, with alternating signs.
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
    }
    let (s, c) = x.sin_cos();
    // cos χ and sin χ expanded to avoid forming x − phase for large x.
    let (cos_chi, sin_chi) = if n == 0 {
        (FRAC_1_SQRT_2 * (c + s), FRAC_1_SQRT_2 * (s - c))
    } else {
        (FRAC_1_SQRT_2 * (s - c), -FRAC_1_SQRT_2 * (s + c))
    };
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn i_scaled(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= I_SERIES_LIMIT {
        let half = 0.5 * x;
        let q = half * half;
        let nf = n as f64;
        let mut term = if n == 0 { 1.0 } else { half };
        let mut sum = term;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= q / (k * (k + nf));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // e^{-x} I_n(x) ≈ (2πx)^{-1/2} Σ (-1)^k a_k(n) / x^k
        let mu = 4.0 * (n * n) as f64;
        let eight_x = 8.0 * x;
        let mut term = 1.0;
        let mut sum: f64 = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= -(mu - odd * odd) / (kf * eight_x);
            let mag = term.abs();
            if mag > prev || mag < 1e-17 * sum.abs() {
                break;
            }
            prev = mag;
            sum += term;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}
