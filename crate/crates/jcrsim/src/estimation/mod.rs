//! Channel estimators: traditional matched-filter + angle-FFT processing,
//! MMSE calibration equalization, and Bayesian sparse recovery (GAMP with
//! Bernoulli-Gaussian or Gaussian-mixture priors, optionally EM-tuned).

pub mod denoiser;
pub mod em;
pub mod equalize;
pub mod gamp;
pub mod output;
pub mod traditional;

pub use denoiser::{bg_denoiser, gm_denoiser, GaussComponent, PriorParams};
pub use em::em_update;
pub use equalize::mmse_equalize;
pub use gamp::{
    gamp_estimate, gamp_estimate_with_state, GampConfig, GampState, InputDomain, PriorModel,
};
pub use output::quantized_output_fn;
pub use traditional::traditional_estimate;

use crate::{Complex, Error, Result};
use ndarray::Array2;

/// Which estimator produced a [`ChannelEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMethod {
    Traditional,
    Gamp,
}

impl std::fmt::Display for EstimatorMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorMethod::Traditional => write!(f, "traditional"),
            EstimatorMethod::Gamp => write!(f, "gamp"),
        }
    }
}

/// Solver bookkeeping attached to an estimate.
#[derive(Debug, Clone)]
pub struct EstimateDiagnostics {
    /// Iterations executed (1 for the traditional estimator).
    pub iterations: usize,
    /// Relative change of the estimate in the last iteration.
    pub final_residual: f64,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
    /// Whether non-finite iterates were detected (the returned estimate is
    /// the last stable one).
    pub diverged: bool,
    /// Final prior hyperparameters (learned when EM was enabled).
    pub learned_prior: Option<PriorParams>,
}

impl EstimateDiagnostics {
    pub(crate) fn single_shot() -> Self {
        Self {
            iterations: 1,
            final_residual: 0.0,
            converged: true,
            diverged: false,
            learned_prior: None,
        }
    }
}

/// A recovered M×K range-angle coefficient matrix with provenance.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub x_hat: Array2<Complex>,
    pub method: EstimatorMethod,
    pub diagnostics: EstimateDiagnostics,
}

impl ChannelEstimate {
    /// Check the all-entries-finite invariant.
    pub fn validate(&self) -> Result<()> {
        if self.x_hat.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical(
                "channel estimate contains non-finite entries".into(),
            ));
        }
        Ok(())
    }
}
