//! Frequency-domain propagation through tabulated absorption profiles.
//!
//! A causal medium is fixed by its absorption: the phase of the amplitude
//! response is the Hilbert transform of `−αL(ν)/2`. Spectral pits (holes
//! burnt into an inhomogeneous line) produce a steep positive phase slope
//! and therefore a group delay.

use crate::error::{Error, Result};
use crate::fft;
use crate::medium::{OriginSample, PulseEnvelope, ResonantMedium};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Profiles must span at least this many structured widths.
pub const PADDING_FACTOR: f64 = 8.0;
/// Minimum number of grid samples across a raised-cosine edge.
pub const EDGE_SAMPLES: f64 = 8.0;
/// Largest spectral energy fraction allowed outside a transfer-function grid.
pub const BANDWIDTH_LEAK_TOL: f64 = 1e-8;
/// Measured group velocity of the reference experiment (m/s), kept for comparison.
pub const MEASURED_VG: f64 = 40_000.0;
/// Measured delay of the reference experiment (s) over its 2 cm crystal.
pub const MEASURED_DELAY: f64 = 500e-9;

/// Uniform frequency grid (Hz, detuning from the line centre).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqGrid {
    nu_start: f64,
    dnu: f64,
    n: usize,
}

impl FreqGrid {
    pub fn new(nu_start: f64, dnu: f64, n: usize) -> Result<Self> {
        if !(dnu > 0.0) || !dnu.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dnu",
                value: dnu,
                expected: "finite and > 0",
            });
        }
        if n < 4 {
            return Err(Error::Precondition(format!(
                "frequency grid needs n >= 4 samples, got {n}"
            )));
        }
        if !nu_start.is_finite() {
            return Err(Error::InvalidParameter {
                name: "nu_start",
                value: nu_start,
                expected: "finite",
            });
        }
        Ok(Self { nu_start, dnu, n })
    }

    /// Symmetric grid over `[-half_span, half_span]` with ν = 0 on a sample.
    pub fn centered(half_span: f64, dnu: f64) -> Result<Self> {
        if !(half_span > 0.0) {
            return Err(Error::InvalidParameter {
                name: "half_span",
                value: half_span,
                expected: "> 0",
            });
        }
        if !(dnu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dnu",
                value: dnu,
                expected: "> 0",
            });
        }
        let m = (half_span / dnu - 1e-9).ceil() as usize;
        Self::new(-(m as f64) * dnu, dnu, 2 * m + 1)
    }

    /// Grid from tabulated frequencies, which must be uniformly spaced.
    pub fn from_samples(freqs: &[f64]) -> Result<Self> {
        if freqs.len() < 4 {
            return Err(Error::Precondition(format!(
                "need at least 4 frequencies, got {}",
                freqs.len()
            )));
        }
        let n = freqs.len();
        let dnu = (freqs[n - 1] - freqs[0]) / (n - 1) as f64;
        for (i, f) in freqs.iter().enumerate() {
            let expect = freqs[0] + i as f64 * dnu;
            if (f - expect).abs() > 1e-6 * dnu.abs() {
                return Err(Error::Precondition(format!(
                    "frequency grid not uniform at row {i}: {f} vs expected {expect}"
                )));
            }
        }
        Self::new(freqs[0], dnu, n)
    }

    pub fn nu_start(&self) -> f64 {
        self.nu_start
    }

    pub fn dnu(&self) -> f64 {
        self.dnu
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nu(&self, i: usize) -> f64 {
        self.nu_start + i as f64 * self.dnu
    }

    pub fn nu_end(&self) -> f64 {
        self.nu(self.n - 1)
    }

    pub fn span(&self) -> f64 {
        self.nu_end() - self.nu_start
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.nu(i))
    }

    fn contains(&self, nu: f64) -> bool {
        nu >= self.nu_start && nu <= self.nu_end()
    }
}

/// Tabulated optical depth αL(ν) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    grid: FreqGrid,
    alpha_l: Vec<f64>,
}

impl SpectralProfile {
    pub fn new(grid: FreqGrid, alpha_l: Vec<f64>) -> Result<Self> {
        if alpha_l.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} absorption values for a grid of {} points",
                alpha_l.len(),
                grid.len()
            )));
        }
        if let Some(i) = alpha_l.iter().position(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::Precondition(format!(
                "alpha_l must be finite and >= 0, got {} at index {i}",
                alpha_l[i]
            )));
        }
        Ok(Self { grid, alpha_l })
    }

    pub fn grid(&self) -> &FreqGrid {
        &self.grid
    }

    pub fn alpha_l(&self) -> &[f64] {
        &self.alpha_l
    }

    /// Width of the region where the profile departs from its edge baseline
    /// by at least half of the largest departure (0 for a flat profile).
    pub fn structured_width(&self) -> f64 {
        let n = self.alpha_l.len();
        let base = 0.5 * (self.alpha_l[0] + self.alpha_l[n - 1]);
        let dev: Vec<f64> = self.alpha_l.iter().map(|a| (a - base).abs()).collect();
        let max = dev.iter().cloned().fold(0.0, f64::max);
        if max <= 1e-12 * base.abs().max(1.0) {
            return 0.0;
        }
        let first = dev.iter().position(|d| *d >= 0.5 * max).unwrap_or(0);
        let last = dev.iter().rposition(|d| *d >= 0.5 * max).unwrap_or(0);
        (last - first) as f64 * self.grid.dnu()
    }

    /// ∫ αL(ν) dν by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        let n = self.alpha_l.len();
        let inner: f64 = self.alpha_l[1..n - 1].iter().sum();
        self.grid.dnu() * (inner + 0.5 * (self.alpha_l[0] + self.alpha_l[n - 1]))
    }
}

/// Square hole with raised-cosine edges in a flat absorbing background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitSpec {
    pub background_alpha_l: f64,
    /// Full width of the hole at half the background depth (Hz).
    pub hole_fwhm: f64,
    /// Width of each raised-cosine edge (Hz); 0 gives an ideal square hole.
    pub edge_softness: f64,
    /// Crystal length (m), used to convert αL into α.
    pub length_m: f64,
}

impl PitSpec {
    pub fn validate(&self) -> Result<()> {
        let checks: [(&'static str, f64, bool, &'static str); 4] = [
            (
                "background_alpha_l",
                self.background_alpha_l,
                self.background_alpha_l > 0.0,
                "> 0",
            ),
            ("hole_fwhm", self.hole_fwhm, self.hole_fwhm > 0.0, "> 0"),
            ("edge_softness", self.edge_softness, self.edge_softness >= 0.0, ">= 0"),
            ("length_m", self.length_m, self.length_m > 0.0, "> 0"),
        ];
        for (name, value, ok, expected) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value, expected });
            }
        }
        if self.edge_softness > self.hole_fwhm {
            return Err(Error::InvalidParameter {
                name: "edge_softness",
                value: self.edge_softness,
                expected: "<= hole_fwhm",
            });
        }
        Ok(())
    }

    /// Background absorption coefficient α (1/m).
    pub fn alpha_per_m(&self) -> f64 {
        self.background_alpha_l / self.length_m
    }

    /// Delay L/v_g from the ideal-hole estimate v_g = πΓ/α.
    pub fn analytic_delay(&self) -> f64 {
        self.length_m / vg_analytic(self.hole_fwhm, self.alpha_per_m())
    }

    fn shape(&self, nu: f64) -> f64 {
        let h = 0.5 * self.hole_fwhm;
        let s = self.edge_softness;
        let a = nu.abs();
        if s == 0.0 {
            return if a < h {
                0.0
            } else if a > h {
                1.0
            } else {
                0.5
            };
        }
        if a <= h - 0.5 * s {
            0.0
        } else if a >= h + 0.5 * s {
            1.0
        } else {
            0.5 * (1.0 - (PI * (a - h + 0.5 * s) / s).cos())
        }
    }
}

/// Absorption profile of a spectral pit centred at zero detuning.
pub fn build_pit(spec: &PitSpec, grid: &FreqGrid) -> Result<SpectralProfile> {
    spec.validate()?;
    if spec.edge_softness > 0.0 && spec.edge_softness / grid.dnu() < EDGE_SAMPLES {
        return Err(Error::Precondition(format!(
            "grid step {:.3e} Hz resolves the {:.3e} Hz edge with fewer than {EDGE_SAMPLES} samples",
            grid.dnu(),
            spec.edge_softness
        )));
    }
    let alpha = grid
        .frequencies()
        .map(|nu| spec.background_alpha_l * spec.shape(nu))
        .collect();
    SpectralProfile::new(*grid, alpha)
}

/// Homogeneous Lorentzian line of `medium` tabulated on `grid`.
pub fn lorentzian_profile(medium: &ResonantMedium, grid: &FreqGrid) -> Result<SpectralProfile> {
    SpectralProfile::new(
        *grid,
        grid.frequencies().map(|nu| medium.absorption_profile(nu)).collect(),
    )
}

/// Complex amplitude response on a frequency grid, stored as log-amplitude
/// and unwrapped phase so that it can be interpolated smoothly.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    grid: FreqGrid,
    log_amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl TransferFunction {
    /// Transparent response (≡ 1).
    pub fn identity(grid: FreqGrid) -> Self {
        Self {
            grid,
            log_amplitude: vec![0.0; grid.len()],
            phase: vec![0.0; grid.len()],
        }
    }

    /// Analytic response `exp(−b/(1/T₂ − i2πν))` of a Lorentzian medium.
    pub fn analytic(medium: &ResonantMedium, grid: FreqGrid) -> Self {
        let (log_amplitude, phase) = grid
            .frequencies()
            .map(|nu| {
                let denom = Complex64::new(1.0 / medium.t2(), -2.0 * PI * nu);
                let z = -Complex64::from(medium.b()) / denom;
                (z.re, z.im)
            })
            .unzip();
        Self {
            grid,
            log_amplitude,
            phase,
        }
    }

    pub fn grid(&self) -> &FreqGrid {
        &self.grid
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn log_amplitude(&self) -> &[f64] {
        &self.log_amplitude
    }

    pub fn complex_response(&self) -> Vec<Complex64> {
        self.log_amplitude
            .iter()
            .zip(&self.phase)
            .map(|(l, p)| Complex64::from_polar(l.exp(), *p))
            .collect()
    }

    /// Response at `nu` by linear interpolation of log-amplitude and phase;
    /// clamps to the edge values outside the grid.
    pub fn at(&self, nu: f64) -> Complex64 {
        let pos = ((nu - self.grid.nu_start()) / self.grid.dnu()).clamp(0.0, (self.grid.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let w = pos - i as f64;
        let l = self.log_amplitude[i] * (1.0 - w) + self.log_amplitude[i + 1] * w;
        let p = self.phase[i] * (1.0 - w) + self.phase[i + 1] * w;
        Complex64::from_polar(l.exp(), p)
    }
}

/// Minimum-phase response of a tabulated profile: `|H| = e^{−αL/2}` and
/// phase equal to the Hilbert transform of `−αL/2`.
pub fn kk_transfer(profile: &SpectralProfile) -> Result<TransferFunction> {
    let grid = *profile.grid();
    let width = profile.structured_width();
    if grid.span() < PADDING_FACTOR * width {
        return Err(Error::Precondition(format!(
            "insufficient padding: profile span {:.3e} Hz < {PADDING_FACTOR}x structured width {:.3e} Hz",
            grid.span(),
            width
        )));
    }
    let n = grid.len();
    let a = profile.alpha_l();
    let size = (8 * n).next_power_of_two();
    // Extend with the edge values, meeting half way round the period.
    let right_pad = (size - n) / 2;
    let u: Vec<f64> = (0..size)
        .map(|j| {
            if j < n {
                -0.5 * a[j]
            } else if j < n + right_pad {
                -0.5 * a[n - 1]
            } else {
                -0.5 * a[0]
            }
        })
        .collect();
    let mut phase = fft::hilbert(&u);
    phase.truncate(n);
    Ok(TransferFunction {
        grid,
        log_amplitude: u[..n].to_vec(),
        phase,
    })
}

/// Propagates `input` through `tf`, with the pulse carrier sitting at
/// `carrier_detuning` (Hz) on the transfer-function grid.
pub fn propagate_spectral(
    tf: &TransferFunction,
    input: &PulseEnvelope,
    carrier_detuning: f64,
) -> Result<PulseEnvelope> {
    let grid = *input.grid();
    let n = grid.len();
    let dt = grid.dt();
    let samples = input.samples();

    let peak = input.peak();
    let edge = samples[0].norm_sqr().max(samples[n - 1].norm_sqr());
    if peak > 0.0 && edge > BANDWIDTH_LEAK_TOL * peak * peak {
        return Err(Error::Precondition(format!(
            "input does not fit its time grid: edge intensity {:.3e} of peak exceeds {BANDWIDTH_LEAK_TOL:.0e}",
            edge / (peak * peak)
        )));
    }

    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..n].copy_from_slice(samples);
    if input.meta.origin == OriginSample::LeftLimit {
        if let Some(o) = grid.origin_index() {
            if o + 2 < n {
                let right = samples[o + 1] * 2.0 - samples[o + 2];
                buf[o] = (samples[o] + right) * 0.5;
            }
        }
    }
    fft::spectrum(&mut buf);

    let total: f64 = buf.iter().map(|z| z.norm_sqr()).sum();
    if total > 0.0 {
        let tf_grid = tf.grid();
        let outside: f64 = buf
            .iter()
            .enumerate()
            .filter(|(k, _)| !tf_grid.contains(fft::bin_frequency(*k, size, dt) + carrier_detuning))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        if outside > BANDWIDTH_LEAK_TOL * total {
            return Err(Error::BandwidthOverflow {
                required_span_hz: required_span(&buf, size, dt, total),
                available_span_hz: tf_grid.span(),
            });
        }
    }

    for (k, z) in buf.iter_mut().enumerate() {
        *z *= tf.at(fft::bin_frequency(k, size, dt) + carrier_detuning);
    }
    fft::from_spectrum(&mut buf);
    buf.truncate(n);

    let mut out = input.with_samples(buf);
    out.meta.input_energy = Some(input.energy());
    if out.meta.origin == OriginSample::LeftLimit {
        out.meta.origin = OriginSample::Sampled;
    }
    Ok(out)
}

/// Smallest symmetric band (about the carrier) holding all but the tolerated leak.
fn required_span(spec: &[Complex64], size: usize, dt: f64, total: f64) -> f64 {
    let mut bins: Vec<(f64, f64)> = spec
        .iter()
        .enumerate()
        .map(|(k, z)| (fft::bin_frequency(k, size, dt).abs(), z.norm_sqr()))
        .collect();
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (f, e) in bins {
        acc += e;
        if total - acc <= BANDWIDTH_LEAK_TOL * total {
            return 2.0 * f;
        }
    }
    1.0 / dt
}

/// Mean group delay `(1/2π)·dφ/dν` over `[nu0 − bandwidth/2, nu0 + bandwidth/2]`,
/// from central differences at the grid nodes in the band. Positive means delayed.
pub fn group_delay(tf: &TransferFunction, nu0: f64, bandwidth: f64) -> Result<f64> {
    if !(bandwidth >= 0.0) || !nu0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "bandwidth",
            value: bandwidth,
            expected: ">= 0 with finite centre",
        });
    }
    let g = tf.grid();
    let lo = ((nu0 - 0.5 * bandwidth - g.nu_start()) / g.dnu()).ceil();
    let hi = ((nu0 + 0.5 * bandwidth - g.nu_start()) / g.dnu()).floor();
    let (lo, hi) = if hi < lo {
        let k = ((nu0 - g.nu_start()) / g.dnu()).round();
        (k, k)
    } else {
        (lo, hi)
    };
    if lo < 1.0 || hi > (g.len() - 2) as f64 {
        return Err(Error::Precondition(format!(
            "band [{:.6e}, {:.6e}] Hz reaches the grid edge [{:.6e}, {:.6e}] Hz",
            nu0 - 0.5 * bandwidth,
            nu0 + 0.5 * bandwidth,
            g.nu_start(),
            g.nu_end()
        )));
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let p = tf.phase();
    let sum: f64 = (lo..=hi).map(|i| (p[i + 1] - p[i - 1]) / (2.0 * g.dnu())).sum();
    Ok(sum / ((hi - lo + 1) as f64 * 2.0 * PI))
}

/// Ideal-hole group velocity `v_g = πΓ/α` for a hole of width Γ (Hz) in a
/// background of absorption coefficient α (1/m). Arguments must be positive.
pub fn vg_analytic(hole_fwhm: f64, alpha_per_m: f64) -> f64 {
    PI * hole_fwhm / alpha_per_m
}

/// Output of the two-axis polarization model.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedResult {
    pub theta: f64,
    /// Component along the transition dipole, sent through the medium.
    pub parallel_out: PulseEnvelope,
    /// Orthogonal component, which sees a transparent crystal.
    pub perpendicular_out: PulseEnvelope,
    pub energy_parallel: f64,
    pub energy_perpendicular: f64,
}

/// Splits `input` into components `cos θ` (through `tf`) and `sin θ`
/// (unaffected), with the carrier at the hole centre.
pub fn polarized_propagate(tf: &TransferFunction, input: &PulseEnvelope, theta: f64) -> Result<PolarizedResult> {
    polarized_propagate_at(tf, input, theta, 0.0)
}

/// [`polarized_propagate`] with the carrier at `carrier_detuning` (Hz).
pub fn polarized_propagate_at(
    tf: &TransferFunction,
    input: &PulseEnvelope,
    theta: f64,
    carrier_detuning: f64,
) -> Result<PolarizedResult> {
    if !theta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "theta",
            value: theta,
            expected: "finite",
        });
    }
    let parallel_out = propagate_spectral(tf, &input.scaled(Complex64::new(theta.cos(), 0.0)), carrier_detuning)?;
    let mut perpendicular_out = input.scaled(Complex64::new(theta.sin(), 0.0));
    perpendicular_out.meta.input_energy = Some(input.energy());
    Ok(PolarizedResult {
        theta,
        energy_parallel: parallel_out.energy(),
        energy_perpendicular: perpendicular_out.energy(),
        parallel_out,
        perpendicular_out,
    })
}
