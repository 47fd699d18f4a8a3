//! Numerical laboratory for small-area coherent pulses in optically thick
//! resonant absorbers.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Bessel kernels with a stated accuracy contract.
//! * [`medium`]: the resonant medium, time grids and pulse envelopes.
//! * [`propagation`]: impulse response, convolution and closed-form outputs.
//! * [`analysis`]: energies, decay-time fits, efficiency, αL sweeps.
//! * [`afc`]: single-peak superradiant loss for atomic frequency combs.
//! * [`slowlight`]: spectral-pit transfer functions and group delay.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afc;
pub mod analysis;
pub mod error;
mod fft;
pub mod fit;
pub mod medium;
pub mod propagation;
pub mod slowlight;
pub mod specfun;

pub use afc::{AfcAssessment, AfcComb};
pub use analysis::{DecayFit, FitMode, SweepResult, SweepRow, TRule, XRegime};
pub use error::{Error, Result};
pub use medium::{
    BeamGeometry, ExpReversedSpec, Flagged, OriginSample, PulseEnvelope, PulseMeta, ResonantMedium, TimeGrid,
};
pub use num_complex::Complex64;
pub use slowlight::{FreqGrid, PitSpec, PolarizedResult, SpectralProfile, TransferFunction};
