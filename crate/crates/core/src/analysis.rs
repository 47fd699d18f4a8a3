//! Observables extracted from simulated outputs: energies, superradiant decay
//! time, the `x` parameter, forward-scattering efficiency and αL sweeps.
//!
//! The decay model is `|F_out|² = I(0)·e^{−t/T_dec}` with
//! `1/T_dec = 2/T₂ + (αL/2T₂)·x`. Fits use the cumulative form
//! `∫₀ᵗ|F_out|² = Ε(1 − e^{−t/T_dec})`, which averages over the Bessel ringing.

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::medium::{ExpReversedSpec, Flagged, OriginSample, PulseEnvelope, ResonantMedium, TimeGrid};
use crate::propagation::{default_grid, phi0, propagate_exp_reversed};
use crate::specfun::{bessel_i0_scaled, bessel_i1_scaled};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Allowed deviation of the input energy from 1 when computing an efficiency.
pub const UNIT_ENERGY_TOL: f64 = 1e-3;
/// Maximum tolerated energy beyond the grid end, relative to Ε.
pub const TAIL_LEAK_TOL: f64 = 1e-4;
/// Fraction of the tail energy captured by the free-fit window.
pub const FIT_WINDOW_FRACTION: f64 = 0.9999;

/// Trapezoidal ∫|F|² over `[from_t, to_t]`, with the window endpoints
/// interpolated linearly in |F|² so that adjacent windows add up exactly.
///
/// A one-sided origin sample is paired with the extrapolated opposite limit,
/// as in [`PulseEnvelope::energy`].
pub fn energy(pulse: &PulseEnvelope, from_t: f64, to_t: f64) -> Result<f64> {
    let grid = pulse.grid();
    let intensity: Vec<f64> = pulse.intensity().collect();
    let (Some(o), true) = (grid.origin_index(), pulse.meta.origin != OriginSample::Sampled) else {
        return integrate_window(grid, &intensity, from_t, to_t);
    };
    let s = pulse.samples();
    let n = s.len();
    let (mut left, mut right) = (intensity.clone(), intensity);
    match pulse.meta.origin {
        OriginSample::LeftLimit if o + 2 < n => right[o] = (s[o + 1] * 2.0 - s[o + 2]).norm_sqr(),
        OriginSample::RightLimit if o >= 2 => left[o] = (s[o - 1] * 2.0 - s[o - 2]).norm_sqr(),
        _ => {}
    }
    if to_t <= 0.0 {
        return integrate_window(grid, &left, from_t, to_t);
    }
    if from_t >= 0.0 {
        return integrate_window(grid, &right, from_t, to_t);
    }
    // Validate the full window before splitting it.
    integrate_window(grid, &left, from_t, to_t)?;
    Ok(integrate_window(grid, &left, from_t, 0.0)? + integrate_window(grid, &right, 0.0, to_t)?)
}

fn integrate_window(grid: &TimeGrid, y: &[f64], from_t: f64, to_t: f64) -> Result<f64> {
    let slack = 1e-9 * grid.dt();
    if from_t > to_t || from_t < grid.t_start() - slack || to_t > grid.t_end() + slack {
        return Err(Error::Precondition(format!(
            "energy window [{from_t:.6e}, {to_t:.6e}] outside grid [{:.6e}, {:.6e}]",
            grid.t_start(),
            grid.t_end()
        )));
    }
    let n = y.len();
    let clamp = |p: f64| p.clamp(0.0, (n - 1) as f64);
    let (pa, pb) = (clamp(grid.position(from_t)), clamp(grid.position(to_t)));
    let interp = |p: f64| {
        let i = (p.floor() as usize).min(n - 2);
        let f = p - i as f64;
        y[i] * (1.0 - f) + y[i + 1] * f
    };
    let ia = pa.ceil() as usize;
    let ib = pb.floor() as usize;
    if ia > ib {
        return Ok(0.5 * (interp(pa) + interp(pb)) * (pb - pa) * grid.dt());
    }
    let mut acc = 0.5 * (interp(pa) + y[ia]) * (ia as f64 - pa);
    for i in ia..ib {
        acc += 0.5 * (y[i] + y[i + 1]);
    }
    acc += 0.5 * (y[ib] + interp(pb)) * (pb - ib as f64);
    Ok(acc * grid.dt())
}

/// |F|² on the grid with the origin sample replaced by its t → 0⁺ value.
///
/// Outputs that already store the right limit are used as is; otherwise the
/// right limit is extrapolated quadratically from the three following samples.
fn tail_intensity(pulse: &PulseEnvelope) -> Vec<f64> {
    let mut y: Vec<f64> = pulse.intensity().collect();
    let grid = pulse.grid();
    if let Some(o) = grid.origin_index() {
        if pulse.meta.origin != OriginSample::RightLimit && o + 3 < y.len() {
            let s = pulse.samples();
            let right = s[o + 1] * 3.0 - s[o + 2] * 3.0 + s[o + 3];
            y[o] = right.norm_sqr();
        }
    }
    y
}

/// Forward-scattering efficiency Ε = ∫₀^∞ |F_out|² for a unit-energy input.
pub fn efficiency(output: &PulseEnvelope) -> Result<f64> {
    let e_in = output
        .meta
        .input_energy
        .ok_or_else(|| Error::Precondition("efficiency needs an envelope produced by propagating a pulse".into()))?;
    if (e_in - 1.0).abs() > UNIT_ENERGY_TOL {
        return Err(Error::Precondition(format!(
            "efficiency expects a unit-energy input, got input energy {e_in:.6}"
        )));
    }
    let grid = output.grid();
    if grid.t_end() <= 0.0 {
        return Err(Error::Precondition("output grid ends before t = 0".into()));
    }
    let y = tail_intensity(output);
    integrate_window(grid, &y, 0.0_f64.max(grid.t_start()), grid.t_end())
}

/// How `I(0)` is obtained in [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMode {
    /// `I(0) = |Φ(0)|²`, `T_dec = Ε/I(0)`.
    #[default]
    Phi0Pinned,
    /// Two-parameter least squares of the cumulative-energy curve.
    FreeFit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub t_dec: f64,
    pub i0_amp: f64,
    pub x: f64,
    pub efficiency: f64,
    /// RMS deviation of the cumulative-energy model from the data.
    pub residual: f64,
    pub mode: FitMode,
}

/// `1/T_dec = 2/T₂ + (αL/2T₂)·x`.
pub fn decay_time(medium: &ResonantMedium, x: f64) -> f64 {
    let t2 = medium.t2();
    1.0 / (2.0 / t2 + medium.alpha_l() / (2.0 * t2) * x)
}

/// Inverse of [`decay_time`]: `x = (T₂/T_dec − 2)·2/αL`.
pub fn x_from_tdec(medium: &ResonantMedium, t_dec: f64) -> Result<f64> {
    if medium.alpha_l() == 0.0 {
        return Err(Error::Precondition("x is undefined for alpha_l = 0".into()));
    }
    if !(t_dec > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t_dec",
            value: t_dec,
            expected: "> 0",
        });
    }
    Ok((medium.t2() / t_dec - 2.0) * 2.0 / medium.alpha_l())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XRegime {
    /// `1 + αL/24`, αL ≲ 1.
    Small,
    /// `1 + 2/√(παL)`, αL ≫ 1 and short excitation.
    Large,
    /// `1 + 0.055·αL`, T = T₂/2 and 0.5 ≤ αL ≤ 5.
    ExperimentFit,
}

/// Closed-form approximations of x; `in_regime` flags use outside the stated range.
pub fn x_approx(alpha_l: f64, regime: XRegime) -> Result<Flagged> {
    if !(alpha_l > 0.0) || !alpha_l.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha_l",
            value: alpha_l,
            expected: "finite and > 0",
        });
    }
    let (value, in_regime) = match regime {
        XRegime::Small => (1.0 + alpha_l / 24.0, alpha_l <= 1.0),
        XRegime::Large => (1.0 + 2.0 / (PI * alpha_l).sqrt(), alpha_l >= 10.0),
        XRegime::ExperimentFit => (1.0 + 0.055 * alpha_l, (0.5..=5.0).contains(&alpha_l)),
    };
    Ok(Flagged { value, in_regime })
}

/// Short-pulse efficiency `2Tb·[1 − e^{−bT₂}(I₀(bT₂) + I₁(bT₂))]`;
/// flagged out of regime when T > T_R/10.
pub fn closed_form_efficiency_short(medium: &ResonantMedium, spec: &ExpReversedSpec) -> Result<Flagged> {
    let b = medium.b();
    let t = spec.duration();
    let z = b * medium.t2();
    let value = 2.0 * t * b * (1.0 - bessel_i0_scaled(z)? - bessel_i1_scaled(z)?);
    Ok(Flagged {
        value,
        in_regime: t <= medium.t_r() / 10.0,
    })
}

/// Cumulative ∫₀^{t_k}|F|² at every grid point from the origin on, as `(t_k, energy)`.
pub fn cumulative_tail(pulse: &PulseEnvelope) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = pulse.grid();
    let o = grid
        .origin_index()
        .ok_or_else(|| Error::Precondition("decay fit needs a sample at t = 0".into()))?;
    let y = tail_intensity(pulse);
    let dt = grid.dt();
    let mut t = Vec::with_capacity(y.len() - o);
    let mut c = Vec::with_capacity(y.len() - o);
    let mut acc = 0.0;
    t.push(0.0);
    c.push(0.0);
    for i in o + 1..y.len() {
        acc += 0.5 * (y[i - 1] + y[i]) * dt;
        t.push(grid.t(i));
        c.push(acc);
    }
    Ok((t, c))
}

fn model_rms(t: &[f64], c: &[f64], e: f64, t_dec: f64) -> f64 {
    let ss: f64 = t
        .iter()
        .zip(c)
        .map(|(&t, &c)| {
            let r = e * -(-t / t_dec).exp_m1() - c;
            r * r
        })
        .sum();
    (ss / t.len() as f64).sqrt()
}

/// Extracts T_dec, I(0), x and Ε from a propagated time-reversed exponential.
pub fn fit_decay(
    output: &PulseEnvelope,
    medium: &ResonantMedium,
    spec: &ExpReversedSpec,
    mode: FitMode,
) -> Result<DecayFit> {
    let eff = efficiency(output)?;
    let last = output.samples().last().map(|z| z.norm_sqr()).unwrap_or(0.0);
    // the tail intensity decays at least as e^{−2t/T₂}
    let leak = last * medium.t2() / 2.0;
    if leak > TAIL_LEAK_TOL * eff {
        return Err(Error::Precondition(format!(
            "decay not contained in grid: estimated leak {:.3e} exceeds {TAIL_LEAK_TOL:.0e} of efficiency {eff:.3e}",
            leak
        )));
    }
    if !(eff > 0.0) {
        return Err(Error::Precondition("no scattered energy to fit".into()));
    }
    let (t, c) = cumulative_tail(output)?;
    let total = *c.last().unwrap();
    let end = c
        .iter()
        .position(|&v| v >= FIT_WINDOW_FRACTION * total)
        .unwrap_or(c.len() - 1)
        .max(2);
    let (t, c) = (&t[..=end], &c[..=end]);

    let i0 = phi0(medium, spec).powi(2);
    let t_dec = eff / i0;
    match mode {
        FitMode::Phi0Pinned => Ok(DecayFit {
            t_dec,
            i0_amp: i0,
            x: x_from_tdec(medium, t_dec)?,
            efficiency: eff,
            residual: model_rms(t, c, eff, t_dec),
            mode,
        }),
        FitMode::FreeFit => {
            let report = levenberg_marquardt(
                |p, r, j| {
                    for (k, (&tk, &ck)) in t.iter().zip(c).enumerate() {
                        let e = (-tk / p[1]).exp();
                        r[k] = p[0] * (1.0 - e) - ck;
                        j[2 * k] = 1.0 - e;
                        j[2 * k + 1] = -p[0] * e * tk / (p[1] * p[1]);
                    }
                },
                &[eff, t_dec],
                t.len(),
                LmOptions::default(),
            )?;
            let (e_fit, td_fit) = (report.params[0], report.params[1]);
            if !(td_fit > 0.0) {
                return Err(Error::NonConvergent {
                    iterations: report.iterations,
                    residual: report.rms_residual,
                    best: report.params,
                });
            }
            Ok(DecayFit {
                t_dec: td_fit,
                i0_amp: e_fit / td_fit,
                x: x_from_tdec(medium, td_fit)?,
                efficiency: e_fit,
                residual: report.rms_residual,
                mode,
            })
        }
    }
}

/// Choice of pulse duration per sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TRule {
    HalfT2,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha_l: f64,
    pub t_over_t2: f64,
    pub t_dec_over_t2: f64,
    pub x: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Propagates the time-reversed exponential at every αL and fits with
/// I(0) = |Φ(0)|². Points run in parallel; rows come back in input order.
pub fn sweep_theory(alpha_l_values: &[f64], rule: TRule, medium_t2: f64) -> Result<SweepResult> {
    if alpha_l_values.is_empty() {
        return Err(Error::Precondition("empty alpha_l sweep".into()));
    }
    if alpha_l_values.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(Error::Precondition(
            "alpha_l sweep values must be finite and > 0".into(),
        ));
    }
    if alpha_l_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition(
            "alpha_l sweep values must be strictly increasing".into(),
        ));
    }
    let duration = match rule {
        TRule::HalfT2 => medium_t2 / 2.0,
        TRule::Fixed(t) => t,
    };
    let spec = ExpReversedSpec::new(duration)?;
    let rows = alpha_l_values
        .par_iter()
        .map(|&alpha_l| {
            let medium = ResonantMedium::new(alpha_l, medium_t2)?;
            let grid = default_grid(&medium, &spec)?;
            let out = propagate_exp_reversed(&medium, &spec, &grid)?;
            let fit = fit_decay(&out, &medium, &spec, FitMode::Phi0Pinned)?;
            Ok(SweepRow {
                alpha_l,
                t_over_t2: duration / medium_t2,
                t_dec_over_t2: fit.t_dec / medium_t2,
                x: fit.x,
                efficiency: fit.efficiency,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

/// `√(Σ|a−b|²·dt)` over samples shared by two envelopes on the same grid,
/// optionally restricted to `[from, to]`.
///
/// When both envelopes jump at t = 0 and store opposite one-sided limits
/// there, the origin sample is skipped: the two values describe different
/// sides of the discontinuity.
pub fn l2_distance(a: &PulseEnvelope, b: &PulseEnvelope, window: Option<(f64, f64)>) -> Result<f64> {
    let (skip, filter) = comparison_mask(a, b, window)?;
    let ss: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip && filter(i))
        .map(|(_, (x, y))| (x - y).norm_sqr())
        .sum();
    Ok((ss * a.grid().dt()).sqrt())
}

/// `‖a − b‖ / ‖b‖`, both norms over the samples used by [`l2_distance`].
pub fn relative_l2(a: &PulseEnvelope, b: &PulseEnvelope, window: Option<(f64, f64)>) -> Result<f64> {
    let (skip, filter) = comparison_mask(a, b, window)?;
    let norm_sq: f64 = b
        .samples()
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != skip && filter(i))
        .map(|(_, y)| y.norm_sqr())
        .sum();
    if !(norm_sq > 0.0) {
        return Err(Error::Precondition(
            "reference envelope vanishes on the comparison window".into(),
        ));
    }
    Ok(l2_distance(a, b, window)? / (norm_sq * a.grid().dt()).sqrt())
}

type SampleFilter = Box<dyn Fn(usize) -> bool>;

fn comparison_mask(
    a: &PulseEnvelope,
    b: &PulseEnvelope,
    window: Option<(f64, f64)>,
) -> Result<(Option<usize>, SampleFilter)> {
    let grid = *a.grid();
    if !grid.is_uniform_with(b.grid()) {
        return Err(Error::Precondition(
            "comparison needs envelopes on the same grid".into(),
        ));
    }
    let skip = match (a.meta.origin, b.meta.origin) {
        (OriginSample::LeftLimit, OriginSample::RightLimit) | (OriginSample::RightLimit, OriginSample::LeftLimit) => {
            grid.origin_index()
        }
        _ => None,
    };
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    Ok((skip, Box::new(move |i| (lo..=hi).contains(&grid.t(i)))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::make_exp_reversed;
    use crate::Complex64;
    use approx::assert_relative_eq;

    fn med(a: f64) -> ResonantMedium {
        ResonantMedium::new(a, 1.0).unwrap()
    }

    #[test]
    fn energy_of_zero_and_normalized_pulses() {
        let g = TimeGrid::anchored(-10.0, 2.0, 1e-3).unwrap();
        assert_eq!(energy(&PulseEnvelope::zeros(g), -10.0, 2.0).unwrap(), 0.0);
        let p = make_exp_reversed(&ExpReversedSpec::new(1.0).unwrap(), &g).unwrap();
        assert!((energy(&p, -10.0, 0.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn energy_is_additive_and_checks_window() {
        let g = TimeGrid::anchored(-3.0, 3.0, 0.01).unwrap();
        let p = PulseEnvelope::gaussian(g, 0.2, 0.8).unwrap();
        let whole = energy(&p, -2.513, 1.777).unwrap();
        let parts = energy(&p, -2.513, 0.1234).unwrap() + energy(&p, 0.1234, 1.777).unwrap();
        assert!((whole - parts).abs() < 1e-14);
        assert!(energy(&p, -3.5, 0.0).is_err());
        assert!(energy(&p, 1.0, 0.0).is_err());
        assert!(energy(&p, 0.0, 0.0).unwrap() == 0.0);
    }

    #[test]
    fn efficiency_zero_for_transparent_medium() {
        let s = ExpReversedSpec::new(0.5).unwrap();
        let g = default_grid(&med(1.0), &s).unwrap();
        let out = propagate_exp_reversed(&med(0.0), &s, &g).unwrap();
        assert_eq!(efficiency(&out).unwrap(), 0.0);
    }

    #[test]
    fn efficiency_requires_unit_input() {
        let s = ExpReversedSpec::new(0.5).unwrap();
        let g = default_grid(&med(2.0), &s).unwrap();
        let mut out = propagate_exp_reversed(&med(2.0), &s, &g).unwrap();
        out.meta.input_energy = Some(0.5);
        assert!(efficiency(&out).is_err());
        out.meta.input_energy = None;
        assert!(efficiency(&out).is_err());
    }

    #[test]
    fn x_inversion() {
        let m = med(2.0);
        assert_relative_eq!(x_from_tdec(&m, 1.0 / 3.0).unwrap(), 1.0, max_relative = 1e-14);
        for a in [0.3, 4.0, 77.0] {
            assert!(x_from_tdec(&med(a), 0.5).unwrap().abs() < 1e-15);
            for x in [0.2, 1.0, 1.7] {
                let back = x_from_tdec(&med(a), decay_time(&med(a), x)).unwrap();
                assert!((back - x).abs() < 1e-12);
            }
        }
        assert!(x_from_tdec(&med(0.0), 0.3).is_err());
    }

    #[test]
    fn decay_time_anchors() {
        assert!((decay_time(&med(2.0), 1.0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((decay_time(&med(40.0), 1.0) - 1.0 / 22.0).abs() < 1e-12);
    }

    #[test]
    fn x_approximations() {
        let s = x_approx(0.24, XRegime::Small).unwrap();
        assert!((s.value - 1.01).abs() < 1e-15 && s.in_regime);
        let l = x_approx(40.0, XRegime::Large).unwrap();
        assert!((l.value - 1.178).abs() < 5e-4 && l.in_regime);
        let f = x_approx(2.0, XRegime::ExperimentFit).unwrap();
        assert!((f.value - 1.11).abs() < 1e-15 && f.in_regime);
        assert!(!x_approx(8.0, XRegime::ExperimentFit).unwrap().in_regime);
        assert!(x_approx(0.0, XRegime::Large).is_err());
    }

    #[test]
    fn closed_form_short_limits() {
        let s = ExpReversedSpec::new(1e-3).unwrap();
        assert_eq!(closed_form_efficiency_short(&med(0.0), &s).unwrap().value, 0.0);
        let m = ResonantMedium::new(2e6, 1.0).unwrap(); // bT₂ = 1e6
        let s = ExpReversedSpec::new(1e-9).unwrap();
        let v = closed_form_efficiency_short(&m, &s).unwrap();
        let full = 2.0 * 1e-9 * m.b();
        assert!(v.value < full && v.value > full * (1.0 - 2.0 / (2.0 * PI * 1e6f64).sqrt() - 1e-9));
        assert!(v.in_regime);
        let slow = ExpReversedSpec::new(0.5).unwrap();
        assert!(!closed_form_efficiency_short(&med(4.0), &slow).unwrap().in_regime);
    }

    #[test]
    fn sweep_validation() {
        assert!(sweep_theory(&[], TRule::HalfT2, 1.0).is_err());
        assert!(sweep_theory(&[1.0, 1.0], TRule::HalfT2, 1.0).is_err());
        assert!(sweep_theory(&[-1.0, 1.0], TRule::HalfT2, 1.0).is_err());
    }

    #[test]
    fn l2_skips_opposite_one_sided_limits() {
        let g = TimeGrid::anchored(-1.0, 1.0, 0.5).unwrap();
        let mut a = PulseEnvelope::zeros(g);
        let mut b = PulseEnvelope::new(
            g,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(3.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        assert!((l2_distance(&a, &b, None).unwrap() - 3.0 * 0.5f64.sqrt()).abs() < 1e-15);
        a.meta.origin = OriginSample::LeftLimit;
        b.meta.origin = OriginSample::RightLimit;
        assert_eq!(l2_distance(&a, &b, None).unwrap(), 0.0);
    }
}
