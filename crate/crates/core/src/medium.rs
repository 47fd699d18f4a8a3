use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Lorentzian two-level absorber of optical depth αL and phase relaxation time T₂.
///
/// All other medium symbols (thickness parameter `b`, superradiant lifetime
/// `T_R`, homogeneous linewidth `Γ`) are derived from these two fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantMedium {
    alpha_l: f64,
    t2: f64,
}

impl ResonantMedium {
    pub fn new(alpha_l: f64, t2: f64) -> Result<Self> {
        if !(alpha_l >= 0.0) || !alpha_l.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha_l",
                value: alpha_l,
                expected: "finite and >= 0",
            });
        }
        if !(t2 > 0.0) || !t2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t2",
                value: t2,
                expected: "finite and > 0",
            });
        }
        Ok(Self { alpha_l, t2 })
    }

    pub fn alpha_l(&self) -> f64 {
        self.alpha_l
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// Thickness parameter b = αL / 2T₂ (1/s).
    pub fn b(&self) -> f64 {
        self.alpha_l / (2.0 * self.t2)
    }

    /// Superradiant lifetime T_R = 1/b; infinite for a transparent medium.
    pub fn t_r(&self) -> f64 {
        1.0 / self.b()
    }

    /// Homogeneous linewidth Γ = 1/(πT₂) in Hz.
    pub fn gamma(&self) -> f64 {
        1.0 / (PI * self.t2)
    }

    /// Analytic amplitude transfer function `exp(−b / (1/T₂ − iω))` of the
    /// full impulse response, with ω = 2πν and the `e^{+iωt}` transform
    /// convention used throughout the crate.
    pub fn transfer(&self, nu: f64) -> Complex64 {
        let denom = Complex64::new(1.0 / self.t2, -2.0 * PI * nu);
        (-Complex64::from(self.b()) / denom).exp()
    }

    /// Intensity absorption profile αL(ν) = αL / (1 + (2πνT₂)²).
    pub fn absorption_profile(&self, nu: f64) -> f64 {
        let w = 2.0 * PI * nu * self.t2;
        self.alpha_l / (1.0 + w * w)
    }
}

/// Duration parameter T of the time-reversed exponential input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpReversedSpec {
    duration: f64,
}

impl ExpReversedSpec {
    pub fn new(duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidParameter {
                name: "duration_T",
                value: duration,
                expected: "finite and > 0",
            });
        }
        Ok(Self { duration })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// Beam and sample geometry entering the Fresnel number S/(Lλ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub cross_section: f64,
    pub length: f64,
    pub wavelength: f64,
}

/// A value together with a flag telling whether the approximation or model
/// producing it is used inside its stated regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged {
    pub value: f64,
    pub in_regime: bool,
}

/// Where a sample sits relative to t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Before,
    Origin,
    After,
}

/// Largest grid accepted; bounds memory at a few hundred MB per envelope.
pub const MAX_SAMPLES: usize = 1 << 24;

/// Uniform time grid `t_i = t_start + i·dt`, `i < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                expected: "finite and > 0",
            });
        }
        if n < 2 {
            return Err(Error::Precondition(format!("time grid needs n >= 2 samples, got {n}")));
        }
        if n > MAX_SAMPLES {
            return Err(Error::Precondition(format!(
                "time grid of {n} samples exceeds the limit of {MAX_SAMPLES}; increase dt or shorten the span"
            )));
        }
        if !t_start.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_start",
                value: t_start,
                expected: "finite",
            });
        }
        Ok(Self { t_start, dt, n })
    }

    /// Grid covering `[t_from, t_to]` with t = 0 landing exactly on a sample
    /// whenever `t_from <= 0 <= t_to`.
    pub fn anchored(t_from: f64, t_to: f64, dt: f64) -> Result<Self> {
        if !(t_to > t_from) {
            return Err(Error::Precondition(format!("empty time span [{t_from}, {t_to}]")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                expected: "finite and > 0",
            });
        }
        let before = (-t_from / dt - 1e-9).ceil();
        let after = (t_to / dt - 1e-9).ceil();
        if before + after >= MAX_SAMPLES as f64 {
            return Err(Error::Precondition(format!(
                "span [{t_from:.3e}, {t_to:.3e}] at dt {dt:.3e} exceeds the limit of {MAX_SAMPLES} samples"
            )));
        }
        let n = (before + after) as usize + 1;
        Self::new(-before * dt, dt, n)
    }

    /// Same start and step, length extended to the next power of two.
    pub fn to_pow2(&self) -> Self {
        Self {
            n: self.n.next_power_of_two(),
            ..*self
        }
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.n - 1)
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.t(i))
    }

    /// Index of the sample at t = 0, if the grid has one.
    pub fn origin_index(&self) -> Option<usize> {
        let k = (-self.t_start / self.dt).round();
        if k < 0.0 || k >= self.n as f64 {
            return None;
        }
        let t = self.t(k as usize);
        (t.abs() <= 1e-9 * self.dt).then_some(k as usize)
    }

    pub fn side(&self, i: usize) -> Side {
        match self.origin_index() {
            Some(o) if i == o => Side::Origin,
            Some(o) if i < o => Side::Before,
            Some(_) => Side::After,
            None if self.t(i) < 0.0 => Side::Before,
            None => Side::After,
        }
    }

    /// Fractional index of time `t` (may lie outside `[0, n-1]`).
    pub fn position(&self, t: f64) -> f64 {
        (t - self.t_start) / self.dt
    }

    pub fn is_uniform_with(&self, other: &TimeGrid) -> bool {
        self.n == other.n
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t_start - other.t_start).abs() <= 1e-9 * self.dt
    }
}

/// Which one-sided value the sample at t = 0 stores when the envelope jumps there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OriginSample {
    /// Plain sample of a function continuous at the origin (or unknown).
    #[default]
    Sampled,
    /// Limit t → 0⁻ (used for inputs that switch off at t = 0).
    LeftLimit,
    /// Limit t → 0⁺ (used for the scattered decay; θ(0) = 1/2 is not applied).
    RightLimit,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseMeta {
    /// Energy of the pulse that produced this envelope, if it was propagated.
    pub input_energy: Option<f64>,
    pub origin: OriginSample,
    pub warnings: Vec<String>,
}

/// Complex field envelope on a uniform grid, in units of s^{-1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    grid: TimeGrid,
    samples: Vec<Complex64>,
    pub meta: PulseMeta,
}

impl PulseEnvelope {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            grid,
            samples,
            meta: PulseMeta::default(),
        })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.times().map(f).collect();
        Self::new(grid, samples)
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            meta: PulseMeta::default(),
        }
    }

    /// Unit-energy Gaussian with intensity FWHM `fwhm`, centred at `t_center`.
    pub fn gaussian(grid: TimeGrid, t_center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::InvalidParameter {
                name: "fwhm",
                value: fwhm,
                expected: "> 0",
            });
        }
        // |F|² = A² exp(-(t-tc)²/(2σ²)), FWHM = 2√(2 ln 2) σ
        let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
        let amp = (1.0 / (sigma * (2.0 * PI).sqrt())).sqrt();
        Self::from_fn(grid, |t| {
            let x = (t - t_center) / sigma;
            Complex64::new(amp * (-0.25 * x * x).exp(), 0.0)
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn intensity(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|z| z.norm_sqr())
    }

    /// Trapezoidal ∫|F|² dt over the whole grid.
    ///
    /// When the origin sample holds a one-sided limit, the segment on the
    /// other side of t = 0 uses the linearly extrapolated opposite limit, so
    /// a pulse that switches off at t = 0 is not smeared over one step.
    pub fn energy(&self) -> f64 {
        let dt = self.grid.dt();
        let s = &self.samples;
        let n = s.len();
        let inner: f64 = s[1..n - 1].iter().map(|z| z.norm_sqr()).sum();
        let mut e = dt * (inner + 0.5 * (s[0].norm_sqr() + s[n - 1].norm_sqr()));
        if let Some(o) = self.grid.origin_index() {
            let stored = s[o].norm_sqr();
            match self.meta.origin {
                OriginSample::LeftLimit if o + 2 < n => {
                    let right = (s[o + 1] * 2.0 - s[o + 2]).norm_sqr();
                    e += 0.5 * dt * (right - stored);
                }
                OriginSample::RightLimit if o >= 2 => {
                    let left = (s[o - 1] * 2.0 - s[o - 2]).norm_sqr();
                    e += 0.5 * dt * (left - stored);
                }
                _ => {}
            }
        }
        e
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * factor).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Copy with unit trapezoidal energy.
    pub fn normalized(&self) -> Result<Self> {
        let e = self.energy();
        if !(e > 0.0) {
            return Err(Error::Precondition("cannot normalize a zero-energy envelope".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / e.sqrt(), 0.0)))
    }

    /// Peak |F|.
    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            grid: self.grid,
            samples,
            meta: self.meta.clone(),
        }
    }
}
