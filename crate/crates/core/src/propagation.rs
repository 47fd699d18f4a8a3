//! Linear propagation of small-area pulses through a Lorentzian absorber.
//!
//! The full impulse response is `δ(t) + h(t)` with the scattered part
//! `h(t) = −b·K(bt)·e^{−t/T₂}` for t ≥ 0, where `K(u) = J₁(2√u)/√u`.
//! The delta term is never discretised: every propagator returns
//! `input + (h ∗ input)`.
//!
//! Envelopes that jump at t = 0 store a one-sided limit in the origin sample
//! (see [`OriginSample`]); the θ(0) = 1/2 convention only enters the
//! convolution, where a left-limit origin sample is replaced by the mean of
//! both one-sided limits.

use crate::error::{domain, Error, Result};
use crate::fft;
use crate::medium::{
    BeamGeometry, ExpReversedSpec, Flagged, OriginSample, PulseEnvelope, PulseMeta, ResonantMedium, Side, TimeGrid,
};
use crate::specfun::{j0, sr_kernel_unchecked};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Samples per shortest timescale in the default grid.
pub const DEFAULT_SAMPLES_PER_SCALE: f64 = 200.0;
/// Quadrature sub-steps per shortest timescale when integrating Φ.
const PHI_STEPS_PER_SCALE: f64 = 200.0;
/// Exponential damping at which the Φ integral is truncated.
const PHI_TAIL_CUTOFF: f64 = 1e-14;
/// Pre-pulse span in units of T.
pub const PRE_SPAN_T: f64 = 10.0;
/// Decay span in units of T₂.
pub const POST_SPAN_T2: f64 = 5.0;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Shortest of T, T₂ and T_R.
fn shortest_scale(medium: &ResonantMedium, spec: &ExpReversedSpec) -> f64 {
    spec.duration().min(medium.t2()).min(medium.t_r())
}

/// Default grid: `dt = min(T, T₂, T_R)/200` spanning `[−10T, 5T₂]`.
pub fn default_grid(medium: &ResonantMedium, spec: &ExpReversedSpec) -> Result<TimeGrid> {
    let dt = shortest_scale(medium, spec) / DEFAULT_SAMPLES_PER_SCALE;
    TimeGrid::anchored(-PRE_SPAN_T * spec.duration(), POST_SPAN_T2 * medium.t2(), dt)
}

/// Time-reversed exponential `√(2/T)·e^{t/T}` for t ≤ 0, zero afterwards.
pub fn make_exp_reversed(spec: &ExpReversedSpec, grid: &TimeGrid) -> Result<PulseEnvelope> {
    let t = spec.duration();
    let required = -PRE_SPAN_T * t;
    if grid.t_start() > required * (1.0 - 1e-9) || grid.t_end() < 0.0 {
        return Err(Error::Precondition(format!(
            "grid [{:.6e}, {:.6e}] must span at least [{:.6e}, 0] (10 T before t = 0)",
            grid.t_start(),
            grid.t_end(),
            required
        )));
    }
    let amp = (2.0 / t).sqrt();
    let samples = (0..grid.len())
        .map(|i| match grid.side(i) {
            Side::Before | Side::Origin => c(amp * (grid.t(i) / t).exp()),
            Side::After => c(0.0),
        })
        .collect();
    let mut pulse = PulseEnvelope::new(*grid, samples)?;
    pulse.meta.origin = OriginSample::LeftLimit;
    Ok(pulse)
}

/// Non-delta part of the impulse response, `−b·K(bt)·e^{−t/T₂}` (1/s).
pub fn impulse_response_scattered(medium: &ResonantMedium, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("impulse_response_scattered", format!("t must be >= 0, got {t}")));
    }
    Ok(scattered_kernel(medium, t))
}

fn scattered_kernel(medium: &ResonantMedium, t: f64) -> f64 {
    let b = medium.b();
    if b == 0.0 {
        return 0.0;
    }
    -b * sr_kernel_unchecked(b * t) * (-t / medium.t2()).exp()
}

/// Φ(t) = √(2/T)·b·∫_t^∞ K(bτ)·e^{−τ(1/T₂+1/T)} dτ, by composite Simpson.
pub fn phi(medium: &ResonantMedium, spec: &ExpReversedSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain("phi", format!("t must be >= 0, got {t}")));
    }
    Ok(phi_scaled(medium, spec, t) * (-t / spec.duration()).exp())
}

/// Closed form Φ(0) = √(2/T)·(1 − e^{−b/(1/T+1/T₂)}).
pub fn phi0(medium: &ResonantMedium, spec: &ExpReversedSpec) -> f64 {
    let t = spec.duration();
    let rate = 1.0 / t + 1.0 / medium.t2();
    (2.0 / t).sqrt() * -(-medium.b() / rate).exp_m1()
}

/// `Φ(t)·e^{t/T}`, i.e. minus the scattered field after the pulse.
///
/// Written as an integral over `s = τ − t ≥ 0`, which keeps every factor
/// bounded for large t/T.
fn phi_scaled(medium: &ResonantMedium, spec: &ExpReversedSpec, t: f64) -> f64 {
    let b = medium.b();
    if b == 0.0 {
        return 0.0;
    }
    let tt = spec.duration();
    let rate = 1.0 / tt + 1.0 / medium.t2();
    let s_max = -PHI_TAIL_CUTOFF.ln() / rate;
    let h_max = shortest_scale(medium, spec) / PHI_STEPS_PER_SCALE;
    let integrand = |s: f64| segment_integrand(medium, spec, t, s);
    (2.0 / tt).sqrt() * simpson(integrand, 0.0, s_max, h_max)
}

/// `b·K(b(t+s))·e^{−(t+s)/T₂}·e^{−s/T}`.
fn segment_integrand(medium: &ResonantMedium, spec: &ExpReversedSpec, t: f64, s: f64) -> f64 {
    let b = medium.b();
    let tau = t + s;
    b * sr_kernel_unchecked(b * tau) * (-tau / medium.t2() - s / spec.duration()).exp()
}

/// Composite Simpson on [a, b] with an even number of panels no wider than `h_max`.
pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, h_max: f64) -> f64 {
    let mut m = ((b - a) / h_max).ceil().max(2.0) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let h = (b - a) / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..m {
        let v = f(a + k as f64 * h);
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even)
}

fn check_decay_span(medium: &ResonantMedium, spec: &ExpReversedSpec, grid: &TimeGrid) -> Result<()> {
    let need_before = -PRE_SPAN_T * spec.duration();
    let need_after = POST_SPAN_T2 * medium.t2();
    if grid.t_start() > need_before * (1.0 - 1e-9) || grid.t_end() < need_after * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "grid [{:.6e}, {:.6e}] must cover [{:.6e}, {:.6e}] (10 T before, 5 T2 after t = 0)",
            grid.t_start(),
            grid.t_end(),
            need_before,
            need_after
        )));
    }
    Ok(())
}

/// Closed-form output for the time-reversed exponential input:
/// `F_in − Φ(0)e^{t/T}` before t = 0 and `−Φ(t)e^{t/T}` after.
///
/// The origin sample stores the t → 0⁺ limit `−Φ(0)`.
pub fn propagate_exp_reversed(
    medium: &ResonantMedium,
    spec: &ExpReversedSpec,
    grid: &TimeGrid,
) -> Result<PulseEnvelope> {
    check_decay_span(medium, spec, grid)?;
    let input = make_exp_reversed(spec, grid)?;
    let tt = spec.duration();
    let amp = (2.0 / tt).sqrt();
    let p0 = phi0(medium, spec);
    let n = grid.len();
    let mut out = vec![c(0.0); n];

    let first_after = (0..n).find(|&i| grid.side(i) != Side::Before).unwrap_or(n);
    for (i, z) in out.iter_mut().enumerate().take(first_after) {
        *z = c((amp - p0) * (grid.t(i) / tt).exp());
    }

    if first_after < n && medium.b() > 0.0 {
        // Backward recursion g(t_i) = e^{−dt/T} g(t_{i+1}) + √(2/T)∫_0^{dt} f(t_i+s) e^{−s/T} ds.
        let dt = grid.dt();
        let decay = (-dt / tt).exp();
        let h_max = shortest_scale(medium, spec) / PHI_STEPS_PER_SCALE;
        let mut g = phi_scaled(medium, spec, grid.t(n - 1));
        out[n - 1] = c(-g);
        for i in (first_after..n - 1).rev() {
            let t = grid.t(i);
            let seg = amp * simpson(|s| segment_integrand(medium, spec, t, s), 0.0, dt, h_max);
            g = decay * g + seg;
            out[i] = c(-g);
        }
        if grid.side(first_after) == Side::Origin {
            out[first_after] = c(-p0);
        }
    }

    let mut pulse = PulseEnvelope::new(*grid, out)?;
    pulse.meta = PulseMeta {
        input_energy: Some(input.energy()),
        origin: OriginSample::RightLimit,
        warnings: vec!["origin sample holds the t->0+ limit; theta(0)=1/2 not applied".into()],
    };
    Ok(pulse)
}

/// Relative amplitude below which the input is considered to have decayed at the grid ends.
pub const TAIL_THRESHOLD: f64 = 1e-8;

/// Numerical convolution `F_out = F_in + h ∗ F_in` (trapezoidal, O(dt²)).
///
/// If the input stores a left limit at t = 0, the origin sample is replaced
/// by the mean of the left limit and the extrapolated right limit inside the
/// quadrature, which keeps the O(dt²) order across the switch-off.
pub fn propagate_convolution(medium: &ResonantMedium, input: &PulseEnvelope) -> Result<PulseEnvelope> {
    let grid = *input.grid();
    let n = grid.len();
    let dt = grid.dt();
    let samples = input.samples();

    let mut warnings = Vec::new();
    let peak = input.peak();
    if peak > 0.0 {
        let edge = samples[0].norm().max(samples[n - 1].norm());
        if edge > TAIL_THRESHOLD * peak {
            warnings.push(format!(
                "insufficient grid tail: edge amplitude {:.3e} of peak exceeds {:.0e}",
                edge / peak,
                TAIL_THRESHOLD
            ));
        }
    }

    if medium.b() == 0.0 {
        let mut out = input.clone();
        out.meta.input_energy = Some(input.energy());
        out.meta.warnings = warnings;
        return Ok(out);
    }

    let mut quad_input = samples.to_vec();
    if input.meta.origin == OriginSample::LeftLimit {
        if let Some(o) = grid.origin_index() {
            if o + 2 < n {
                let right = samples[o + 1] * 2.0 - samples[o + 2];
                quad_input[o] = (samples[o] + right) * 0.5;
            }
        }
    }

    let mut weights: Vec<f64> = (0..n).map(|k| dt * scattered_kernel(medium, k as f64 * dt)).collect();
    weights[0] *= 0.5;
    let scattered = fft::causal_convolve(&quad_input, &weights);
    let out: Vec<Complex64> = samples.iter().zip(&scattered).map(|(x, s)| x + s).collect();

    let mut pulse = input.with_samples(out);
    pulse.meta.input_energy = Some(input.energy());
    pulse.meta.warnings = warnings;
    Ok(pulse)
}

/// Transfer function of the discretised impulse response used by
/// [`propagate_convolution`], evaluated at detuning `nu` (Hz).
pub fn discrete_transfer(medium: &ResonantMedium, dt: f64, n: usize, nu: f64) -> Complex64 {
    let mut acc = c(0.5 * scattered_kernel(medium, 0.0));
    for k in 1..n {
        let t = k as f64 * dt;
        acc += Complex64::from_polar(scattered_kernel(medium, t), 2.0 * PI * nu * t);
    }
    c(1.0) + acc * dt
}

fn piecewise(grid: &TimeGrid, before: impl Fn(f64) -> f64, after: impl Fn(f64) -> f64) -> Result<PulseEnvelope> {
    let samples = (0..grid.len())
        .map(|i| {
            let t = grid.t(i);
            match grid.side(i) {
                Side::Before => c(before(t)),
                Side::Origin => c(after(0.0)),
                Side::After => c(after(t)),
            }
        })
        .collect();
    let mut pulse = PulseEnvelope::new(*grid, samples)?;
    pulse.meta.origin = OriginSample::RightLimit;
    Ok(pulse)
}

/// Optically thin limit (αL ≪ 1): the tail is an exponential free induction decay.
pub fn out_thin(medium: &ResonantMedium, spec: &ExpReversedSpec, grid: &TimeGrid) -> Result<PulseEnvelope> {
    let tt = spec.duration();
    let t2 = medium.t2();
    let amp = (2.0 / tt).sqrt();
    let fid = medium.b() * tt * t2 / (tt + t2);
    piecewise(
        grid,
        |t| amp * (1.0 - fid) * (t / tt).exp(),
        |t| -amp * fid * (-t / t2).exp(),
    )
}

/// Short-excitation limit (T ≪ T_R, T₂): the tail reproduces the impulse response.
pub fn out_short(medium: &ResonantMedium, spec: &ExpReversedSpec, grid: &TimeGrid) -> Result<PulseEnvelope> {
    let tt = spec.duration();
    let b = medium.b();
    let t2 = medium.t2();
    let amp = (2.0 / tt).sqrt();
    piecewise(
        grid,
        |t| amp * (1.0 - b * tt) * (t / tt).exp(),
        |t| -amp * b * tt * sr_kernel_unchecked(b * t) * (-t / t2).exp(),
    )
}

/// Strong-superradiance limit (bT, bT₂ ≫ 1): `−√(2/T)·J₀(2√(bt))` after t = 0, zero before.
pub fn out_strong(medium: &ResonantMedium, spec: &ExpReversedSpec, grid: &TimeGrid) -> Result<PulseEnvelope> {
    let amp = (2.0 / spec.duration()).sqrt();
    let b = medium.b();
    piecewise(grid, |_| 0.0, |t| -amp * j0(2.0 * (b * t).sqrt()))
}

/// Threshold above which the one-dimensional propagation model is accepted.
pub const FRESNEL_VALID_1D: f64 = 10.0;

/// Fresnel number S/(Lλ) of the interaction volume; `in_regime` ⇔ value ≥ 10.
pub fn fresnel_number(geom: &BeamGeometry) -> Flagged {
    let value = geom.cross_section / (geom.length * geom.wavelength);
    Flagged {
        value,
        in_regime: value >= FRESNEL_VALID_1D,
    }
}
