//! Superradiant loss channel of an atomic frequency comb.
//!
//! A comb with peak spacing Δ and peak width γ rephases after
//! `T_recall = 1/Δ`. Each peak on its own emits collectively; in the
//! superradiant regime its decay time shortens to
//! `(T_single)_SR = F/(π(2 + (αL/2)x))·T_recall` with `x = 1 + 2/√(παL)`.

use crate::analysis::{x_approx, XRegime};
use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfcComb {
    delta: f64,
    gamma_peak: f64,
    alpha_l: f64,
}

impl AfcComb {
    pub fn new(delta: f64, gamma_peak: f64, alpha_l: f64) -> Result<Self> {
        if !(gamma_peak > 0.0) || !gamma_peak.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma_peak",
                value: gamma_peak,
                expected: "finite and > 0",
            });
        }
        if !(delta > gamma_peak) || !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                expected: "finite and > gamma_peak (finesse > 1)",
            });
        }
        if !(alpha_l >= 0.0) || !alpha_l.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha_l",
                value: alpha_l,
                expected: "finite and >= 0",
            });
        }
        Ok(Self {
            delta,
            gamma_peak,
            alpha_l,
        })
    }

    /// Comb with spacing `delta` and the given finesse.
    pub fn with_finesse(delta: f64, finesse: f64, alpha_l: f64) -> Result<Self> {
        Self::new(delta, delta / finesse, alpha_l)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma_peak(&self) -> f64 {
        self.gamma_peak
    }

    pub fn alpha_l(&self) -> f64 {
        self.alpha_l
    }

    pub fn finesse(&self) -> f64 {
        self.delta / self.gamma_peak
    }

    pub fn t_recall(&self) -> f64 {
        1.0 / self.delta
    }

    pub fn t_single(&self) -> f64 {
        1.0 / (PI * self.gamma_peak)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfcAssessment {
    pub t_single_sr: f64,
    pub ratio_to_recall: f64,
    /// Set when the single-peak decay beats the rephasing time.
    pub sr_loss_flagged: bool,
    /// False when the large-αL form of x is used outside its regime.
    pub x_in_regime: bool,
}

/// Superradiant single-peak decay time relative to the recall time.
pub fn sr_single_peak_time(comb: &AfcComb) -> AfcAssessment {
    let a = comb.alpha_l();
    // (αL/2)·x with x = 1 + 2/√(παL), written to stay finite as αL → 0
    let sr_term = a / 2.0 + (a / PI).sqrt();
    let ratio = comb.finesse() / (PI * (2.0 + sr_term));
    let x_in_regime = a > 0.0 && x_approx(a, XRegime::Large).map(|f| f.in_regime).unwrap_or(false);
    AfcAssessment {
        t_single_sr: ratio * comb.t_recall(),
        ratio_to_recall: ratio,
        sr_loss_flagged: ratio < 1.0,
        x_in_regime,
    }
}

/// Free-induction-decay time `1/(πΓ_peak)` of a Lorentzian peak of FWHM Γ_peak (Hz).
pub fn fid_time(gamma_peak: f64) -> Result<f64> {
    if !(gamma_peak > 0.0) || !gamma_peak.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma_peak",
            value: gamma_peak,
            expected: "finite and > 0",
        });
    }
    Ok(1.0 / (PI * gamma_peak))
}
