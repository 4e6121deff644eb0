//! Scalar output-channel score function for quantized observations.
//!
//! One real quantizer output `q` constrains the pre-quantization sample to
//! the bin `[lo, up)`. Given a Gaussian belief `N(u, psi/2)` about the
//! noiseless sample (variances are stated per complex sample; each real
//! component carries half), the score combines the prior pull `-u/psi` with
//! the bin-likelihood term, which is evaluated through the moments of a
//! Gaussian truncated to the bin so that deep-tail bins keep full precision.

use crate::frontend::{bin_bounds, BitDepth};
use crate::special::truncated_normal_moments;
use crate::{Error, Result};

/// Evaluate the quantized-observation score `g` and its sensitivity `g'`
/// (the derivative with respect to `-u`) for one real component.
///
/// * `u` — mean of the current belief about the noiseless sample.
/// * `q` — observed quantizer output level (must be a representable level
///   of the `bits`-bit mid-rise quantizer with step `delta`).
/// * `psi` — belief variance, per complex sample.
/// * `noise_variance` — thermal noise variance, per complex sample.
/// * `bits` — ADC resolution; `Infinite` bypasses the bin likelihood and
///   returns the linear-observation form `g = (q-u)/(sigma^2+psi)`.
/// * `delta` — quantizer step for the real component (ignored when
///   `bits` is `Infinite`).
pub fn quantized_output_fn(
    u: f64,
    q: f64,
    psi: f64,
    noise_variance: f64,
    bits: BitDepth,
    delta: f64,
) -> Result<(f64, f64)> {
    if !(psi.is_finite() && psi > 0.0) {
        return Err(Error::invalid(format!(
            "belief variance must be finite and positive, got {psi}"
        )));
    }
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be finite and non-negative, got {noise_variance}"
        )));
    }
    if !u.is_finite() || !q.is_finite() {
        return Err(Error::invalid("u and q must be finite"));
    }
    let s = noise_variance + psi;
    match bits {
        BitDepth::Infinite => Ok(((q - u) / s, 1.0 / s)),
        BitDepth::Finite(b) => {
            let (lo, up) = bin_bounds(q, delta, b)?;
            // The noisy sample is N(u, s/2) per real component; standardize
            // the bin and reuse the stable truncated-moment kernel.
            let sigma = (0.5 * s).sqrt();
            let alpha = (lo - u) / sigma;
            let beta = (up - u) / sigma;
            let (m_std, v_std) = truncated_normal_moments(alpha, beta);
            // Bin-likelihood term: (E[noisy | bin] - u) / (2 s).
            let t = sigma * m_std / (2.0 * s);
            // d/du of the bin term is (v_std - 1) / (2 s) <= 0, so the
            // overall sensitivity never drops below 1/psi.
            let g = -u / psi + t;
            let g_prime = 1.0 / psi + (1.0 - v_std) / (2.0 * s);
            if !g.is_finite() || !g_prime.is_finite() {
                return Err(Error::Numerical(format!(
                    "output score diverged (u={u}, q={q}, psi={psi}, s={s})"
                )));
            }
            Ok((g, g_prime))
        }
    }
}
