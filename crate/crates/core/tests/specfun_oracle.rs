//! Bessel kernels against exact rational evaluation of their power series.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use sfslab_core::specfun::{bessel_i0_scaled, bessel_i1_scaled, bessel_j0, bessel_j1, sr_kernel};

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// `Σ s^k (x/2)^{2k+n} / (k!(k+n)!)` with `s = -1` (J) or `+1` (I), summed
/// exactly until the terms drop below 1e-40.
fn bessel_series(n: u32, x: f64, alternating: bool) -> f64 {
    let half = exact(x) / BigRational::from_integer(BigInt::from(2));
    let q = &half * &half;
    let mut term = if n == 0 { BigRational::one() } else { half.clone() };
    let mut sum = term.clone();
    let floor = BigRational::new(BigInt::one(), BigInt::from(10).pow(40));
    let mut k = 0u32;
    loop {
        k += 1;
        term = &term * &q / BigRational::from_integer(BigInt::from(k * (k + n)));
        if alternating && k % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        if k as f64 > x && term.abs() < floor {
            break;
        }
    }
    sum.to_f64().unwrap()
}

fn j_exact(n: u32, x: f64) -> f64 {
    bessel_series(n, x, true)
}

fn i_exact(n: u32, x: f64) -> f64 {
    bessel_series(n, x, false)
}

/// `Σ (−u)^k / (k!(k+1)!)`.
fn sr_exact(u: f64) -> f64 {
    let uq = exact(u);
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    let floor = BigRational::new(BigInt::one(), BigInt::from(10).pow(40));
    let mut k = 0u32;
    loop {
        k += 1;
        term = -(&term * &uq) / BigRational::from_integer(BigInt::from(k * (k + 1)));
        sum += &term;
        if k as f64 > u.sqrt() * 2.0 && term.abs() < floor {
            break;
        }
    }
    sum.to_f64().unwrap()
}

#[test]
fn alternating_bookkeeping_is_right() {
    // J₀(1) = 0.7651976865579666
    assert!((j_exact(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
    assert!((j_exact(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
}

#[test]
fn tabulated_values() {
    assert!(bessel_j0(2.404_825_557_695_773).unwrap().abs() < 1e-10);
    assert!((bessel_j0(5.0).unwrap() - (-0.177_596_771_314_338_3)).abs() < 1e-10);
    assert!((bessel_j1(3.0).unwrap() - 0.339_058_958_525_936_5).abs() < 1e-10);
}

#[test]
fn j_kernels_match_series_on_0_to_30() {
    for i in 0..=300 {
        let x = i as f64 * 0.1;
        let (j0, j1) = (bessel_j0(x).unwrap(), bessel_j1(x).unwrap());
        let (e0, e1) = (j_exact(0, x), j_exact(1, x));
        assert!((j0 - e0).abs() < 1e-10, "J0({x}) = {j0} vs {e0}");
        assert!((j1 - e1).abs() < 1e-10, "J1({x}) = {j1} vs {e1}");
    }
}

#[test]
fn sr_kernel_matches_series() {
    for i in 0..=120 {
        let u = i as f64 * 0.75;
        let (k, e) = (sr_kernel(u).unwrap(), sr_exact(u));
        assert!((k - e).abs() < 1e-10, "K({u}) = {k} vs {e}");
    }
}

#[test]
fn scaled_i_kernels_match_series() {
    for x in [0.0_f64, 0.1, 1.0, 2.5, 7.0, 15.0, 19.9, 20.1, 30.0, 50.0, 80.0] {
        let w = (-x).exp();
        let (i0, i1) = (bessel_i0_scaled(x).unwrap(), bessel_i1_scaled(x).unwrap());
        let (e0, e1) = (i_exact(0, x) * w, i_exact(1, x) * w);
        assert!((i0 - e0).abs() <= 1e-10 * e0.max(1e-300), "I0s({x}) = {i0} vs {e0}");
        assert!(
            (i1 - e1).abs() <= 1e-10 * e1.max(1e-300) + 1e-300,
            "I1s({x}) = {i1} vs {e1}"
        );
    }
}

#[test]
fn derivative_identity() {
    // d/dx [x J₁(x)] = x J₀(x)
    let h = 1e-5;
    for i in 1..=60 {
        let x = i as f64 * 0.5;
        let f = |x: f64| x * bessel_j1(x).unwrap();
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        assert!((d - x * bessel_j0(x).unwrap()).abs() < 1e-7 * x.max(1.0), "x = {x}");
    }
}
