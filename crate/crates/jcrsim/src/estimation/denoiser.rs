//! Sparse prior models and their scalar MMSE denoisers.
//!
//! Coefficients are modeled as Bernoulli-Gaussian (a point mass at zero
//! plus a circular complex Gaussian) or, more generally, Bernoulli plus a
//! Gaussian mixture. Given a Gaussian pseudo-observation of a coefficient,
//! the denoiser returns the posterior mean together with the posterior
//! variance, which doubles as the (Wirtinger) derivative of the posterior
//! mean with respect to the observation.

use crate::{Complex, Error, Result};
use serde::{Deserialize, Serialize};

/// One active mixture component: a circular complex Gaussian with the given
/// weight, mean, and (per complex sample) variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussComponent {
    pub weight: f64,
    pub mean: Complex,
    pub variance: f64,
}

/// A sparsity-promoting prior: a coefficient is exactly zero with
/// probability `sparsity`, otherwise it is drawn from the mixture in
/// `components`. All weights together with `sparsity` form a simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    /// Probability that a coefficient is exactly zero.
    pub sparsity: f64,
    /// Active mixture components; weights sum to `1 - sparsity`.
    pub components: Vec<GaussComponent>,
}

impl PriorParams {
    /// Bernoulli-Gaussian prior: a coefficient is non-zero with probability
    /// `active_fraction` and then drawn from a zero-mean circular Gaussian
    /// of the given variance.
    pub fn bernoulli_gaussian(active_fraction: f64, variance: f64) -> Self {
        Self {
            sparsity: 1.0 - active_fraction,
            components: vec![GaussComponent {
                weight: active_fraction,
                mean: Complex::default(),
                variance,
            }],
        }
    }

    /// Bernoulli-Gaussian-mixture prior with `num_components` zero-mean
    /// components of equal weight whose variances form a geometric grid
    /// spanning `[mean_variance / 10, 10 * mean_variance]` (for a single
    /// component, just `mean_variance`).
    pub fn gaussian_mixture(
        active_fraction: f64,
        num_components: usize,
        mean_variance: f64,
    ) -> Self {
        let v = num_components.max(1);
        let components = (0..v)
            .map(|i| {
                let exponent = if v == 1 {
                    0.0
                } else {
                    -1.0 + 2.0 * i as f64 / (v as f64 - 1.0)
                };
                GaussComponent {
                    weight: active_fraction / v as f64,
                    mean: Complex::default(),
                    variance: mean_variance * 10f64.powf(exponent),
                }
            })
            .collect();
        Self {
            sparsity: 1.0 - active_fraction,
            components,
        }
    }

    /// Probability that a coefficient is non-zero.
    pub fn active_fraction(&self) -> f64 {
        1.0 - self.sparsity
    }

    /// Prior second moment `E|x|^2` (the zero atom contributes nothing).
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.mean.norm_sqr() + c.variance))
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sparsity.is_finite() && (0.0..1.0).contains(&self.sparsity)) {
            return Err(Error::invalid(format!(
                "zero-probability must lie in [0, 1), got {}",
                self.sparsity
            )));
        }
        if self.components.is_empty() {
            return Err(Error::invalid("prior needs at least one active component"));
        }
        let mut weight_sum = self.sparsity;
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::invalid(format!(
                    "component {i} weight must be finite and non-negative, got {}",
                    c.weight
                )));
            }
            if !(c.variance.is_finite() && c.variance > 0.0) {
                return Err(Error::invalid(format!(
                    "component {i} variance must be finite and positive, got {}",
                    c.variance
                )));
            }
            if !c.mean.re.is_finite() || !c.mean.im.is_finite() {
                return Err(Error::invalid(format!("component {i} mean is non-finite")));
            }
            weight_sum += c.weight;
        }
        if (weight_sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "zero-probability and component weights must sum to 1, got {weight_sum}"
            )));
        }
        Ok(())
    }
}

/// Per-component posterior summary for one coefficient.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ComponentStat {
    /// Posterior probability that the coefficient came from this component.
    pub resp: f64,
    /// Posterior mean conditioned on this component.
    pub mean: Complex,
    /// Posterior variance conditioned on this component.
    pub var: f64,
}

/// Full posterior summary of one coefficient given a Gaussian
/// pseudo-observation `r ~ CN(x, tau)`.
#[derive(Debug, Clone)]
pub(crate) struct PosteriorStats {
    pub mean: Complex,
    pub variance: f64,
    pub resp_zero: f64,
    pub comps: Vec<ComponentStat>,
}

/// Posterior mean/variance and responsibilities for a coefficient with the
/// given prior, observed through `r = x + CN(0, tau)`. Responsibilities are
/// computed in the log domain so extreme observations stay finite.
pub(crate) fn posterior_stats(r: Complex, tau: f64, prior: &PriorParams) -> PosteriorStats {
    debug_assert!(tau > 0.0 && tau.is_finite(), "tau must be positive");
    // Unnormalized log responsibilities; the common -ln(pi) is dropped.
    let log_zero = if prior.sparsity > 0.0 {
        prior.sparsity.ln() - tau.ln() - r.norm_sqr() / tau
    } else {
        f64::NEG_INFINITY
    };
    let mut logs = Vec::with_capacity(prior.components.len());
    let mut stats = Vec::with_capacity(prior.components.len());
    for c in &prior.components {
        let total = c.variance + tau;
        let diff = r - c.mean;
        let log_w = if c.weight > 0.0 {
            c.weight.ln() - total.ln() - diff.norm_sqr() / total
        } else {
            f64::NEG_INFINITY
        };
        logs.push(log_w);
        stats.push(ComponentStat {
            resp: 0.0,
            mean: (r * c.variance + c.mean * tau) / total,
            var: c.variance * tau / total,
        });
    }
    let max_log = logs.iter().copied().fold(log_zero, f64::max);
    let exp_zero = (log_zero - max_log).exp();
    let mut norm = exp_zero;
    for (log_w, stat) in logs.iter().zip(stats.iter_mut()) {
        stat.resp = (log_w - max_log).exp();
        norm += stat.resp;
    }
    let resp_zero = exp_zero / norm;
    let mut mean = Complex::default();
    for stat in stats.iter_mut() {
        stat.resp /= norm;
        mean += stat.mean * stat.resp;
    }
    // Law-of-total-variance form centered on the overall mean: every term
    // is non-negative, so extreme observations (where |mean|² dwarfs the
    // spread) cannot cancel catastrophically.
    let mut variance = resp_zero * mean.norm_sqr();
    for stat in stats.iter() {
        variance += stat.resp * (stat.var + (stat.mean - mean).norm_sqr());
    }
    PosteriorStats {
        mean,
        variance,
        resp_zero,
        comps: stats,
    }
}

fn check_observation(v: Complex, xi: f64) -> Result<()> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::invalid(format!(
            "observation precision must be finite and positive, got {xi}"
        )));
    }
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::invalid("observation is non-finite"));
    }
    Ok(())
}

/// Bernoulli-Gaussian MMSE denoiser in scaled-observation form: the
/// observation satisfies `v | x ~ CN(xi * x, xi)`, i.e. `v / xi` is an
/// unbiased pseudo-observation of the coefficient with variance `1 / xi`.
///
/// The prior must be Bernoulli-Gaussian (a single zero-mean component).
/// Returns the posterior mean of `x` and the posterior variance; the latter
/// equals the Wirtinger derivative of the posterior mean with respect to
/// `v`.
pub fn bg_denoiser(v: Complex, xi: f64, prior: &PriorParams) -> Result<(Complex, f64)> {
    if prior.components.len() != 1 || prior.components[0].mean != Complex::default() {
        return Err(Error::invalid(
            "bg_denoiser needs a single zero-mean component; use gm_denoiser for mixtures",
        ));
    }
    gm_denoiser(v, xi, prior)
}

/// Gaussian-mixture generalization of [`bg_denoiser`] with the same
/// observation convention `v | x ~ CN(xi * x, xi)`.
pub fn gm_denoiser(v: Complex, xi: f64, prior: &PriorParams) -> Result<(Complex, f64)> {
    check_observation(v, xi)?;
    prior.validate()?;
    let stats = posterior_stats(v / xi, 1.0 / xi, prior);
    Ok((stats.mean, stats.variance))
}
