//! Simulator and estimation toolkit for wideband joint communication-radar
//! (JCR) receivers with few-bit analog-to-digital converters.
//!
//! The crate models the full receive chain of a millimeter-wave JCR system:
//!
//! 1. [`waveform`] — Zadoff-Chu sounding sequences and the measurement matrix
//!    `D` (circulant matched-filter mode or DFT/deramped mode).
//! 2. [`channel`] — geometric scenes of point scatterers, path-loss laws, and
//!    their discretization onto the range-angle grid `X` (M angle bins × K
//!    range bins).
//! 3. [`frontend`] — received-block synthesis `Y = A_M · X · D + W` at a
//!    target SNR and uniform mid-rise quantization to `b` bits per real
//!    component.
//! 4. [`estimation`] — traditional matched-filter + angle-FFT processing,
//!    MMSE calibration equalization, and EM-tuned Bernoulli-Gaussian /
//!    Gaussian-mixture GAMP sparse recovery from the quantized samples.
//! 5. [`metrics`] — NMSE scoring, peak extraction with physical unit
//!    conversion, and Monte-Carlo sweeps over SNR and ADC resolution.
//! 6. [`io`] — binary block dumps ("captured I/Q") and deterministic CSV
//!    result tables.
//!
//! The crate-level contract is determinism: every stochastic quantity is
//! derived from explicit seeds through a documented splitting rule, so any
//! sweep cell can be reproduced in isolation.

pub mod channel;
pub mod estimation;
pub mod fftutil;
pub mod frontend;
pub mod io;
pub mod metrics;
pub mod operator;
pub mod special;
pub mod waveform;

mod error;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Complex = num_complex::Complex64;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Speed of light in meters per second (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
