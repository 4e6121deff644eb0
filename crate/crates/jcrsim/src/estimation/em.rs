//! Expectation-maximization refresh of the sparse prior hyperparameters.
//!
//! Given per-coefficient pseudo-observations from a solver state, the prior
//! weights, means, and variances are re-fit in closed form from the
//! posterior responsibilities and conditional moments. Weights (including
//! the zero-atom probability) remain a simplex by construction.

use super::denoiser::{posterior_stats, GaussComponent, PriorParams};
use super::gamp::GampState;
use crate::Complex;
use ndarray::Array2;

/// Smallest admissible active fraction; the zero-atom probability is
/// correspondingly capped at `1 - ACTIVE_MIN`.
const ACTIVE_MIN: f64 = 1e-6;

/// One EM pass over all coefficients. `pin_zero_means` keeps component
/// means at zero (the Bernoulli-Gaussian family); otherwise means are
/// learned along with weights and variances.
pub(crate) fn refresh_prior(
    r_hat: &Array2<Complex>,
    tau_r: &Array2<f64>,
    prior: &PriorParams,
    pin_zero_means: bool,
    variance_floor: f64,
) -> PriorParams {
    let ncomp = prior.components.len();
    let n = r_hat.len().max(1) as f64;
    let floor = variance_floor.max(f64::MIN_POSITIVE);
    let mut resp_sum = vec![0.0f64; ncomp];
    let mut mean_sum = vec![Complex::default(); ncomp];
    let mut second_sum = vec![0.0f64; ncomp];
    let mut active_sum = 0.0f64;
    for (r, &tau) in r_hat.iter().zip(tau_r.iter()) {
        let stats = posterior_stats(*r, tau.max(floor), prior);
        active_sum += 1.0 - stats.resp_zero;
        for (v, c) in stats.comps.iter().enumerate() {
            resp_sum[v] += c.resp;
            mean_sum[v] += c.mean * c.resp;
            second_sum[v] += c.resp * (c.mean.norm_sqr() + c.var);
        }
    }
    let active = (active_sum / n).clamp(ACTIVE_MIN, 1.0 - ACTIVE_MIN);
    let total_resp: f64 = resp_sum.iter().sum();
    let components = (0..ncomp)
        .map(|v| {
            let denom = resp_sum[v].max(1e-300);
            let mean = if pin_zero_means {
                Complex::default()
            } else {
                mean_sum[v] / denom
            };
            let variance = (second_sum[v] / denom - mean.norm_sqr()).max(floor);
            let share = if total_resp > 0.0 {
                resp_sum[v] / total_resp
            } else {
                1.0 / ncomp as f64
            };
            GaussComponent {
                weight: active * share,
                mean,
                variance,
            }
        })
        .collect();
    PriorParams {
        sparsity: 1.0 - active,
        components,
    }
}

/// Refresh the prior hyperparameters from a solver state: weights, means,
/// and variances are re-fit from the per-coefficient posteriors implied by
/// the state's pseudo-observations. The zero-atom probability is clamped
/// away from 0 and 1, and variances are floored, so the result is always a
/// valid prior. An invalid input prior is returned unchanged.
pub fn em_update(state: &GampState, prior: &PriorParams) -> PriorParams {
    if prior.validate().is_err() || state.r_hat.dim() != state.tau_r.dim() {
        return prior.clone();
    }
    refresh_prior(&state.r_hat, &state.tau_r, prior, false, 1e-12)
}
