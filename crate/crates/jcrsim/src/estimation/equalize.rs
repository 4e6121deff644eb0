//! Frequency-domain MMSE equalization for the data-bearing portion of a
//! frame, given a per-subcarrier channel response estimate.

use crate::{Complex, Error, Result};
use ndarray::Array2;

/// Apply a per-subcarrier linear MMSE equalizer to each row of `y_freq`:
///
/// ```text
/// x̂[m, n] = y[m, n] · conj(h[n]) / (|h[n]|² + 1/snr)
/// ```
///
/// `channel_freq` holds the channel's frequency response at each of the
/// columns of `y_freq`; `snr_linear` is the (linear, not dB) signal-to-noise
/// ratio used for the regularizer. Subcarriers where the channel response is
/// exactly zero are driven to zero rather than amplified.
pub fn mmse_equalize(
    y_freq: &Array2<Complex>,
    channel_freq: &[Complex],
    snr_linear: f64,
) -> Result<Array2<Complex>> {
    if !(snr_linear.is_finite() && snr_linear > 0.0) {
        return Err(Error::invalid(format!(
            "snr_linear must be finite and positive, got {snr_linear}"
        )));
    }
    if y_freq.ncols() != channel_freq.len() {
        return Err(Error::dims(format!(
            "y_freq has {} columns but channel_freq has {} entries",
            y_freq.ncols(),
            channel_freq.len()
        )));
    }
    if channel_freq.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
        return Err(Error::invalid("channel_freq contains non-finite entries"));
    }
    let inv_snr = 1.0 / snr_linear;
    let mut out = y_freq.clone();
    for mut row in out.rows_mut() {
        for (v, h) in row.iter_mut().zip(channel_freq.iter()) {
            *v = *v * h.conj() / (h.norm_sqr() + inv_snr);
        }
    }
    Ok(out)
}
