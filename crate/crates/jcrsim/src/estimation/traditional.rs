//! Traditional linear processing: matched filtering (or tone extraction in
//! DFT mode) per antenna, then a unitary angle FFT per range bin.

use super::{ChannelEstimate, EstimateDiagnostics, EstimatorMethod};
use crate::operator::SystemOperator;
use crate::{Complex, Result};
use ndarray::Array2;

/// Estimate the range-angle coefficients from a received (possibly
/// quantized) block by applying the measurement adjoint and normalizing by
/// the per-row sequence energy:
///
/// ```text
/// X̂ = A_Mᴴ · Y · Dᴴ / ‖D row‖²
/// ```
///
/// In circulant mode the right factor is circular cross-correlation with
/// the training sequence (classic matched filtering); in DFT mode it
/// extracts the per-delay tones. No gain correction is applied for
/// quantization: this is the raw linear pipeline.
pub fn traditional_estimate(
    block: &Array2<Complex>,
    op: &SystemOperator,
) -> Result<ChannelEstimate> {
    let scale = 1.0 / op.matrix().row_energy();
    let x_hat = op.adjoint(block)?.mapv(|c| c * scale);
    let est = ChannelEstimate {
        x_hat,
        method: EstimatorMethod::Traditional,
        diagnostics: EstimateDiagnostics::single_shot(),
    };
    est.validate()?;
    Ok(est)
}
