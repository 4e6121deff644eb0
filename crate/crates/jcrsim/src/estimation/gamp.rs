//! Sparse range-angle recovery from quantized observations by generalized
//! approximate message passing, with optional in-loop EM refresh of the
//! prior hyperparameters and a reduced matched-filter input mode.
//!
//! Each iteration alternates two separable steps coupled through the
//! system operator. The output step forms conditional means and variances
//! of the noiseless samples given the observed quantizer levels (truncated
//! Gaussian moments per real component; the plain linear-Gaussian form when
//! unquantized). The input step denoises per-coefficient pseudo-observations
//! under the zero-atom-plus-Gaussian-mixture prior. Per-entry curvatures
//! propagate through the operator's squared-modulus maps, mean updates are
//! damped, and any non-finite iterate rolls the solver back to the last
//! stable state (reported through the `diverged` flag).

use super::denoiser::{posterior_stats, GaussComponent, PriorParams};
use super::em::refresh_prior;
use super::{ChannelEstimate, EstimateDiagnostics, EstimatorMethod};
use crate::frontend::{bin_bounds, BitDepth, ComponentScales, QuantizerSpec};
use crate::operator::SystemOperator;
use crate::special::truncated_normal_moments;
use crate::waveform::{build_measurement_matrix, MatrixMode, TrainingSequence};
use crate::{Complex, Error, Result};
use ndarray::{Array2, Zip};

/// Smallest residual-domain curvature kept after the output step.
const TAU_S_FLOOR: f64 = 1e-16;
/// Largest curvature kept anywhere in the loop.
const TAU_MAX: f64 = 1e18;
/// Active fraction assumed by the observation-energy starting prior.
const INITIAL_ACTIVE_FRACTION: f64 = 0.1;

/// Sparse prior family the solver maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum PriorModel {
    /// Zero atom plus one zero-mean Gaussian component; EM keeps the mean
    /// pinned at zero.
    BernoulliGaussian,
    /// Zero atom plus `components` Gaussian components whose weights, means,
    /// and variances are all learned when EM is enabled.
    GaussianMixture { components: usize },
}

impl PriorModel {
    fn num_components(&self) -> usize {
        match *self {
            PriorModel::BernoulliGaussian => 1,
            PriorModel::GaussianMixture { components } => components,
        }
    }
}

/// Which observations the solver consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputDomain {
    /// The full M×N quantized block, with the exact bin-likelihood output
    /// channel. The default.
    Quantized,
    /// The M×K matched-filter reduction of the block. Quantization error is
    /// folded into an effective Gaussian noise level, trading output-channel
    /// exactness for an N/K-fold smaller problem.
    MatchedFiltered,
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct GampConfig {
    /// Iteration cap.
    pub max_iterations: usize,
    /// Stop once the relative change of the estimate falls below this.
    pub convergence_tol: f64,
    /// Fraction of each new mean update kept, in (0, 1]; applied to the
    /// coefficient means and the residual-domain duals.
    pub damping: f64,
    /// Prior family.
    pub prior: PriorModel,
    /// Refresh the prior hyperparameters inside the loop.
    pub em_enabled: bool,
    /// First iteration at which EM refreshes engage; the stopping rule
    /// cannot fire before `em_warmup + 5` iterations while EM is enabled.
    pub em_warmup: usize,
    /// Complex per-sample thermal noise variance at the ADC input.
    pub noise_variance: f64,
    /// Lower clamp for every propagated variance.
    pub min_variance_floor: f64,
    /// Explicit starting prior; `None` derives one from the observation
    /// energy (component count must match `prior` when given).
    pub initial_prior: Option<PriorParams>,
    /// Observation domain to run in.
    pub input_domain: InputDomain,
}

impl Default for GampConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            convergence_tol: 1e-6,
            damping: 0.7,
            prior: PriorModel::BernoulliGaussian,
            em_enabled: true,
            em_warmup: 10,
            noise_variance: 0.0,
            min_variance_floor: 1e-12,
            initial_prior: None,
            input_domain: InputDomain::Quantized,
        }
    }
}

impl GampConfig {
    /// Defaults with the given thermal noise variance.
    pub fn new(noise_variance: f64) -> Self {
        Self {
            noise_variance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("iteration cap must be at least 1"));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::invalid(format!(
                "convergence tolerance must be finite and positive, got {}",
                self.convergence_tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::invalid(format!(
                "noise variance must be finite and non-negative, got {}",
                self.noise_variance
            )));
        }
        if !(self.min_variance_floor.is_finite() && self.min_variance_floor > 0.0) {
            return Err(Error::invalid(format!(
                "variance floor must be finite and positive, got {}",
                self.min_variance_floor
            )));
        }
        if self.prior.num_components() == 0 {
            return Err(Error::invalid("mixture prior needs at least one component"));
        }
        if let Some(p) = &self.initial_prior {
            p.validate()?;
            if p.components.len() != self.prior.num_components() {
                return Err(Error::invalid(format!(
                    "starting prior has {} components but the configured family expects {}",
                    p.components.len(),
                    self.prior.num_components()
                )));
            }
            if matches!(self.prior, PriorModel::BernoulliGaussian)
                && p.components[0].mean != Complex::default()
            {
                return Err(Error::invalid(
                    "Bernoulli-Gaussian starting prior must have a zero mean",
                ));
            }
        }
        Ok(())
    }
}

/// Final internal solver state, exposed so the prior can be re-fit from the
/// per-coefficient pseudo-observations (see [`super::em_update`]).
#[derive(Debug, Clone)]
pub struct GampState {
    /// Posterior coefficient means, M×K.
    pub x_hat: Array2<Complex>,
    /// Residual-domain dual variables, matching the observation shape.
    pub s_hat: Array2<Complex>,
    /// Per-coefficient pseudo-observations, M×K.
    pub r_hat: Array2<Complex>,
    /// Input-side curvature (pseudo-observation variances), M×K,
    /// strictly positive.
    pub tau_r: Array2<f64>,
    /// Output-side curvature (prediction variances), observation-shaped,
    /// strictly positive.
    pub tau_p: Array2<f64>,
    /// Completed iterations.
    pub iteration: usize,
}

impl GampState {
    /// Check shape agreement, finiteness, and curvature positivity.
    pub fn validate(&self) -> Result<()> {
        if self.x_hat.dim() != self.r_hat.dim() || self.x_hat.dim() != self.tau_r.dim() {
            return Err(Error::invalid("coefficient-side state shapes disagree"));
        }
        if self.s_hat.dim() != self.tau_p.dim() {
            return Err(Error::invalid("observation-side state shapes disagree"));
        }
        let finite_c = |a: &Array2<Complex>| a.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if !finite_c(&self.x_hat) || !finite_c(&self.s_hat) || !finite_c(&self.r_hat) {
            return Err(Error::Numerical("solver state contains non-finite entries".into()));
        }
        if self
            .tau_r
            .iter()
            .chain(self.tau_p.iter())
            .any(|&v| !(v.is_finite() && v > 0.0))
        {
            return Err(Error::Numerical(
                "solver curvatures must be finite and strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Recover the M×K coefficient matrix from a quantized block.
///
/// `quantizer` must be the resolved spec returned by
/// [`crate::frontend::quantize`] when its bit depth is finite (the output
/// step needs the realized component steps); an infinite-depth spec needs no
/// resolution. `config.noise_variance` is the complex per-sample thermal
/// noise variance of the block.
pub fn gamp_estimate(
    q: &Array2<Complex>,
    op: &SystemOperator,
    quantizer: &QuantizerSpec,
    config: &GampConfig,
) -> Result<ChannelEstimate> {
    gamp_estimate_with_state(q, op, quantizer, config).map(|(estimate, _)| estimate)
}

/// [`gamp_estimate`] plus the final solver state.
pub fn gamp_estimate_with_state(
    q: &Array2<Complex>,
    op: &SystemOperator,
    quantizer: &QuantizerSpec,
    config: &GampConfig,
) -> Result<(ChannelEstimate, GampState)> {
    config.validate()?;
    quantizer.validate()?;
    let (m_dim, n_dim) = q.dim();
    if m_dim != op.num_angle_bins() || n_dim != op.sequence_len() {
        return Err(Error::dims(format!(
            "observed block is {m_dim}×{n_dim} but the operator expects {}×{}",
            op.num_angle_bins(),
            op.sequence_len()
        )));
    }
    if q.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::invalid("observed block contains non-finite entries"));
    }

    let outcome = match config.input_domain {
        InputDomain::Quantized => {
            let scales = match quantizer.bits {
                BitDepth::Finite(_) => {
                    let sc = quantizer.component_scales.as_ref().ok_or_else(|| {
                        Error::invalid(
                            "finite-bit recovery needs the resolved component steps; \
                             pass the spec returned by quantize()",
                        )
                    })?;
                    if let ComponentScales::PerAntenna(v) = sc {
                        if v.len() != m_dim {
                            return Err(Error::dims(format!(
                                "{} per-antenna steps for a {m_dim}-antenna block",
                                v.len()
                            )));
                        }
                    }
                    Some(sc)
                }
                BitDepth::Infinite => None,
            };
            run_loop(q, op, quantizer.bits, scales, config.noise_variance, config)?
        }
        InputDomain::MatchedFiltered => {
            // Sequence-side matched filter only; the angle transform stays in
            // the reduced model R ≈ A_M·X + noise.
            let k_dim = op.num_range_bins();
            let row_energy = op.matrix().row_energy();
            let mut reduced = Array2::from_elem((m_dim, k_dim), Complex::default());
            for (m, row) in q.rows().into_iter().enumerate() {
                let filtered = op.matrix().apply_adjoint_row(&row.to_vec());
                for (k, v) in filtered.into_iter().enumerate() {
                    reduced[[m, k]] = v / row_energy;
                }
            }
            // Quantization error enters as extra white noise at the
            // distortion fraction of the received sample power.
            let power = q.iter().map(|c| c.norm_sqr()).sum::<f64>() / (m_dim * n_dim) as f64;
            let distortion = quantizer.bits.distortion_fraction()?;
            let effective_noise = (config.noise_variance + distortion * power) / row_energy;
            let spike = TrainingSequence::from_samples(
                std::iter::once(Complex::new(1.0, 0.0))
                    .chain(std::iter::repeat(Complex::default()).take(k_dim - 1))
                    .collect(),
            )?;
            let identity = build_measurement_matrix(&spike, k_dim, MatrixMode::Circulant)?;
            let reduced_op = SystemOperator::new(m_dim, identity)?;
            run_loop(
                &reduced,
                &reduced_op,
                BitDepth::Infinite,
                None,
                effective_noise,
                config,
            )?
        }
    };

    let estimate = ChannelEstimate {
        x_hat: outcome.x_hat,
        method: EstimatorMethod::Gamp,
        diagnostics: outcome.diagnostics,
    };
    estimate.validate()?;
    Ok((estimate, outcome.state))
}

struct LoopOutcome {
    x_hat: Array2<Complex>,
    state: GampState,
    diagnostics: EstimateDiagnostics,
}

/// Starting prior: configured explicitly, or derived by inverting the
/// quantizer's power loss to estimate the signal energy the observations
/// carry, then spreading it over `num_coefficients` at a 10% active
/// fraction.
fn starting_prior(
    config: &GampConfig,
    observed_energy: f64,
    num_samples: f64,
    num_coefficients: f64,
    column_energy: f64,
    distortion: f64,
    noise_variance: f64,
) -> PriorParams {
    if let Some(p) = &config.initial_prior {
        return p.clone();
    }
    let signal_energy = (observed_energy / (1.0 - distortion) - num_samples * noise_variance)
        .max(0.1 * observed_energy);
    let target = (signal_energy / (column_energy * num_coefficients)).max(config.min_variance_floor);
    let base = match config.prior {
        PriorModel::BernoulliGaussian => {
            PriorParams::bernoulli_gaussian(INITIAL_ACTIVE_FRACTION, 1.0)
        }
        PriorModel::GaussianMixture { components } => {
            PriorParams::gaussian_mixture(INITIAL_ACTIVE_FRACTION, components, 1.0)
        }
    };
    let scale = target / base.second_moment();
    PriorParams {
        sparsity: base.sparsity,
        components: base
            .components
            .iter()
            .map(|c| GaussComponent {
                variance: c.variance * scale,
                ..*c
            })
            .collect(),
    }
}

fn all_finite_c(a: &Array2<Complex>) -> bool {
    a.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

fn all_finite_f(a: &Array2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

fn run_loop(
    observed: &Array2<Complex>,
    op: &SystemOperator,
    bits: BitDepth,
    scales: Option<&ComponentScales>,
    noise_variance: f64,
    config: &GampConfig,
) -> Result<LoopOutcome> {
    let (m_dim, n_dim) = observed.dim();
    let k_dim = op.num_range_bins();
    let floor = config.min_variance_floor;
    let gamma = config.damping;
    let pin_means = matches!(config.prior, PriorModel::BernoulliGaussian);
    let min_iterations = if config.em_enabled {
        config.em_warmup + 5
    } else {
        1
    };
    let observed_energy: f64 = observed.iter().map(|c| c.norm_sqr()).sum();
    let mut prior = starting_prior(
        config,
        observed_energy,
        (m_dim * n_dim) as f64,
        (m_dim * k_dim) as f64,
        op.column_energy(),
        bits.distortion_fraction()?,
        noise_variance,
    );

    let mut x_hat = Array2::from_elem((m_dim, k_dim), Complex::default());
    let mut tau_x = Array2::from_elem((m_dim, k_dim), prior.second_moment().max(floor));
    let mut s_hat = Array2::from_elem((m_dim, n_dim), Complex::default());
    let mut r_hat = Array2::from_elem((m_dim, k_dim), Complex::default());
    let mut tau_r = Array2::from_elem((m_dim, k_dim), 1.0);
    let mut tau_p = Array2::from_elem((m_dim, n_dim), 1.0);

    let mut iterations = 0usize;
    let mut final_residual = f64::INFINITY;
    let mut converged = false;
    let mut diverged = false;

    for t in 1..=config.max_iterations {
        let snapshot = (
            x_hat.clone(),
            s_hat.clone(),
            r_hat.clone(),
            tau_r.clone(),
            tau_p.clone(),
        );

        // Prediction and its curvature through the operator.
        let tau_p_new = op.abs2_forward(&tau_x)?.mapv(|v| v.clamp(floor, TAU_MAX));
        let mut p = op.forward(&x_hat)?;
        Zip::from(&mut p)
            .and(&tau_p_new)
            .and(&s_hat)
            .for_each(|pv, &tp, &sv| *pv -= sv * tp);

        // Conditional moments of the noiseless samples given the
        // observations.
        let mut z_hat = Array2::from_elem((m_dim, n_dim), Complex::default());
        let mut tau_z = Array2::from_elem((m_dim, n_dim), 0.0);
        match bits {
            BitDepth::Infinite => {
                Zip::from(&mut z_hat)
                    .and(&mut tau_z)
                    .and(&p)
                    .and(&tau_p_new)
                    .and(observed)
                    .for_each(|z, tz, &pv, &tp, &qv| {
                        let total = tp + noise_variance;
                        *z = pv + (qv - pv) * (tp / total);
                        *tz = tp * noise_variance / total;
                    });
            }
            BitDepth::Finite(b) => {
                let sc = scales.ok_or_else(|| {
                    Error::invalid("finite-bit output step requires resolved component steps")
                })?;
                let half_noise = 0.5 * noise_variance;
                for m in 0..m_dim {
                    for n in 0..n_dim {
                        let vz = 0.5 * tau_p_new[[m, n]];
                        let vs = vz + half_noise;
                        let sd = vs.sqrt();
                        let pv = p[[m, n]];
                        let qv = observed[[m, n]];
                        let mut z_comp = [0.0f64; 2];
                        let mut tz = 0.0f64;
                        for (slot, imag) in [(0usize, false), (1usize, true)] {
                            let u = if imag { pv.im } else { pv.re };
                            let q_level = if imag { qv.im } else { qv.re };
                            let (lo, up) = bin_bounds(q_level, sc.step(m, imag), b)?;
                            let (m_std, v_std) =
                                truncated_normal_moments((lo - u) / sd, (up - u) / sd);
                            z_comp[slot] = u + (vz / vs) * sd * m_std;
                            tz += vz - (vz * vz / vs) * (1.0 - v_std);
                        }
                        z_hat[[m, n]] = Complex::new(z_comp[0], z_comp[1]);
                        tau_z[[m, n]] = tz;
                    }
                }
            }
        }

        // Residual-domain dual update (damped) and its curvature.
        let mut tau_s = Array2::from_elem((m_dim, n_dim), 0.0);
        Zip::from(&mut tau_s)
            .and(&tau_z)
            .and(&tau_p_new)
            .for_each(|ts, &tz, &tp| *ts = ((1.0 - tz / tp) / tp).max(TAU_S_FLOOR));
        Zip::from(&mut s_hat)
            .and(&z_hat)
            .and(&p)
            .and(&tau_p_new)
            .for_each(|s, &z, &pv, &tp| *s = *s * (1.0 - gamma) + (z - pv) / tp * gamma);

        // Pseudo-observations per coefficient.
        let tau_r_new = op
            .abs2_adjoint(&tau_s)?
            .mapv(|v| (1.0 / v).clamp(floor, TAU_MAX));
        let mut r_new = op.adjoint(&s_hat)?;
        Zip::from(&mut r_new)
            .and(&tau_r_new)
            .and(&x_hat)
            .for_each(|r, &tr, &x| *r = x + *r * tr);

        // Separable denoising under the sparse prior, with damped means.
        let mut x_new = Array2::from_elem((m_dim, k_dim), Complex::default());
        let mut tau_x_new = Array2::from_elem((m_dim, k_dim), 0.0);
        Zip::from(&mut x_new)
            .and(&mut tau_x_new)
            .and(&r_new)
            .and(&tau_r_new)
            .for_each(|x, tx, &r, &tr| {
                let stats = posterior_stats(r, tr, &prior);
                *x = stats.mean;
                *tx = stats.variance;
            });
        let mut delta_sq = 0.0f64;
        let mut prev_sq = 0.0f64;
        Zip::from(&mut x_new).and(&x_hat).for_each(|x, &old| {
            *x = *x * gamma + old * (1.0 - gamma);
            delta_sq += (*x - old).norm_sqr();
            prev_sq += old.norm_sqr();
        });
        let residual = delta_sq.sqrt() / prev_sq.sqrt().max(1e-30);

        if !(all_finite_c(&x_new)
            && all_finite_c(&s_hat)
            && all_finite_c(&r_new)
            && all_finite_f(&tau_x_new)
            && all_finite_f(&tau_r_new)
            && residual.is_finite())
        {
            let (sx, ss, sr, str_, stp) = snapshot;
            x_hat = sx;
            s_hat = ss;
            r_hat = sr;
            tau_r = str_;
            tau_p = stp;
            diverged = true;
            iterations = t;
            break;
        }

        x_hat = x_new;
        tau_x = tau_x_new.mapv(|v| v.max(floor));
        r_hat = r_new;
        tau_r = tau_r_new;
        tau_p = tau_p_new;
        iterations = t;
        final_residual = residual;

        if config.em_enabled && t >= config.em_warmup {
            prior = refresh_prior(&r_hat, &tau_r, &prior, pin_means, floor);
        }
        if residual < config.convergence_tol && t >= min_iterations {
            converged = true;
            break;
        }
    }

    let diagnostics = EstimateDiagnostics {
        iterations,
        final_residual,
        converged,
        diverged,
        learned_prior: config.em_enabled.then(|| prior.clone()),
    };
    let state = GampState {
        x_hat: x_hat.clone(),
        s_hat,
        r_hat,
        tau_r,
        tau_p,
        iteration: iterations,
    };
    Ok(LoopOutcome {
        x_hat,
        state,
        diagnostics,
    })
}
