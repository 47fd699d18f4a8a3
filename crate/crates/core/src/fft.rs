//! Thin wrappers over rustfft with the crate's transform convention:
//! spectrum `X(ν_k) = Σ_j x_j e^{+2πi jk/N}` and back with `e^{-2πi jk/N}/N`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalised `e^{+i}` transform (rustfft's inverse direction).
pub(crate) fn spectrum(data: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(data.len()).process(data);
}

/// Inverse of [`spectrum`], including the 1/N factor.
pub(crate) fn from_spectrum(data: &mut [Complex64]) {
    let n = data.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(data);
    let inv = 1.0 / n as f64;
    data.iter_mut().for_each(|z| *z *= inv);
}

/// Signed frequency of bin `k` for an `n`-point transform with sample step `dt`.
pub(crate) fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let k = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    k / (n as f64 * dt)
}

/// Causal linear convolution `y[m] = Σ_{k≤m} kernel[k]·x[m-k]`, truncated to `x.len()`.
pub(crate) fn causal_convolve(x: &[Complex64], kernel: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let size = (2 * n).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    a[..n].copy_from_slice(x);
    for (dst, &k) in b.iter_mut().zip(kernel.iter().take(n)) {
        *dst = Complex64::new(k, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    a.truncate(n);
    a.iter_mut().for_each(|z| *z *= scale);
    a
}

/// Discrete Hilbert transform of a real periodic sequence (analytic-signal
/// construction), with `H[cos] = sin`.
pub(crate) fn hilbert(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut z: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut z);
    let half = n / 2;
    for (k, zk) in z.iter_mut().enumerate() {
        let w = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *zk *= w;
    }
    planner.plan_fft_inverse(n).process(&mut z);
    z.iter().map(|c| c.im / n as f64).collect()
}
