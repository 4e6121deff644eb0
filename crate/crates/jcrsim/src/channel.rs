//! Geometric scenes and their discretization onto the range-angle grid.
//!
//! A scene is a list of point scatterers (radar targets, residual
//! self-interference, communication paths). Discretization projects each
//! scatterer onto
//!
//! * K **range bins** of width `1/W` seconds via the sampled receive pulse,
//!   and
//! * M **angle bins** of width `1/M` in spatial frequency via the unitary
//!   angle dictionary `A_M` (normalized DFT steering vectors),
//!
//! producing the M×K coefficient matrix `X` that the measurement model
//! `Y = A_M·X·D` consumes. Off-grid delays and angles are represented
//! exactly (pulse sidelobes, Dirichlet leakage); nothing is snapped.

use crate::waveform::FrameConfig;
use crate::{Complex, Error, Result, SPEED_OF_LIGHT};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// What kind of propagation path a scatterer models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScattererKind {
    /// Radar reflector: two-way delay `2d/c`, radar path-loss law.
    Target,
    /// Residual TX→RX leakage: modeled like a radar return at a small
    /// effective distance, normally with an explicit power override.
    SelfInterference,
    /// One-way communication path: delay `d/c`, communication path-loss law.
    CommPath,
}

/// A single point scatterer in a scene.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Scatterer {
    /// Distance in meters (one-way geometric distance).
    pub distance: f64,
    /// Physical angle of arrival φ in radians, |φ| ≤ π/2.
    pub physical_aoa: f64,
    /// Radar cross-section in dB·m² (used by radar-kind scatterers only).
    pub rcs_dbsm: f64,
    /// Linear channel power G bypassing the path-loss formula when set.
    pub power_override: Option<f64>,
    /// Coefficient phase in radians; `None` until drawn by
    /// [`Scene::resolve_phases`].
    pub phase: Option<f64>,
    pub kind: ScattererKind,
}

impl Scatterer {
    pub fn validate(&self) -> Result<()> {
        if self.distance < 0.0 {
            return Err(Error::invalid("scatterer distance must be ≥ 0"));
        }
        if self.physical_aoa.abs() > PI / 2.0 {
            return Err(Error::invalid(
                "physical angle of arrival must lie in [−π/2, π/2]",
            ));
        }
        if let Some(p) = self.power_override {
            if p < 0.0 {
                return Err(Error::invalid("power override must be ≥ 0"));
            }
        }
        Ok(())
    }

    /// Propagation delay in seconds (two-way for radar kinds, one-way for
    /// communication paths).
    pub fn delay(&self) -> f64 {
        match self.kind {
            ScattererKind::Target | ScattererKind::SelfInterference => {
                2.0 * self.distance / SPEED_OF_LIGHT
            }
            ScattererKind::CommPath => self.distance / SPEED_OF_LIGHT,
        }
    }
}

/// Uniform linear receive array.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ArrayGeometry {
    /// Number of antenna elements M.
    pub num_elements: usize,
    /// Element spacing d₀ in meters.
    pub spacing: f64,
    /// Carrier wavelength λ in meters.
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.num_elements == 0 {
            return Err(Error::invalid("array needs at least one element"));
        }
        if self.spacing <= 0.0 || self.wavelength <= 0.0 {
            return Err(Error::invalid("spacing and wavelength must be positive"));
        }
        if self.spacing > self.wavelength / 2.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "element spacing must not exceed half a wavelength",
            ));
        }
        Ok(())
    }

    /// Spatial angle θ = d₀·sin(φ)/λ of a physical angle of arrival φ.
    /// With spacing ≤ λ/2 the result lies in [−0.5, 0.5].
    pub fn spatial_angle(&self, physical_aoa: f64) -> f64 {
        self.spacing * physical_aoa.sin() / self.wavelength
    }

    /// Inverse map: physical angle φ = arcsin(λ·θ/d₀) of a spatial angle.
    pub fn physical_angle(&self, spatial_angle: f64) -> f64 {
        (self.wavelength * spatial_angle / self.spacing).asin()
    }
}

/// Wrap a spatial angle into the principal interval [−0.5, 0.5).
pub fn wrap_spatial_angle(theta: f64) -> f64 {
    theta - (theta + 0.5).floor()
}

/// Unit-norm steering vector: element m is `(1/√M)·exp(−j2π·m·θ)` with θ
/// wrapped into [−0.5, 0.5).
pub fn array_response(geometry: &ArrayGeometry, spatial_angle: f64) -> Vec<Complex> {
    let m_total = geometry.num_elements;
    let theta = wrap_spatial_angle(spatial_angle);
    let scale = 1.0 / (m_total as f64).sqrt();
    (0..m_total)
        .map(|m| {
            let angle = -2.0 * PI * m as f64 * theta;
            Complex::new(scale * angle.cos(), scale * angle.sin())
        })
        .collect()
}

/// The M×M angle dictionary whose column m is the steering vector at the
/// grid point θ = m/M. Unitary: `A_Mᴴ·A_M = I`.
pub fn angle_dictionary(m_total: usize) -> Array2<Complex> {
    let scale = 1.0 / (m_total as f64).sqrt();
    Array2::from_shape_fn((m_total, m_total), |(i, m)| {
        // Reduce i·m modulo M exactly so long dictionaries stay unitary.
        let idx = (i * m) % m_total;
        let angle = -2.0 * PI * idx as f64 / m_total as f64;
        Complex::new(scale * angle.cos(), scale * angle.sin())
    })
}

/// Project a steering vector onto the angle grid: entry m of `A_Mᴴ·a(θ)`
/// is `(1/M)·Σ_i exp(j2π·i·(m/M − θ))` (a Dirichlet kernel, exactly a unit
/// impulse when θ sits on the grid).
pub fn project_onto_angle_grid(geometry: &ArrayGeometry, spatial_angle: f64) -> Vec<Complex> {
    let m_total = geometry.num_elements;
    let theta = wrap_spatial_angle(spatial_angle);
    (0..m_total)
        .map(|m| {
            let delta = m as f64 / m_total as f64 - theta;
            let mut acc = Complex::default();
            for i in 0..m_total {
                let angle = 2.0 * PI * i as f64 * delta;
                acc += Complex::new(angle.cos(), angle.sin());
            }
            acc / m_total as f64
        })
        .collect()
}

/// Receive antenna gain as a function of the physical angle of arrival.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum RxGainPattern {
    /// Angle-independent gain.
    Uniform { gain: f64 },
    /// `peak·cos(φ)^order` lobe, zero beyond ±π/2.
    CosineLobe { peak: f64, order: f64 },
}

impl Default for RxGainPattern {
    fn default() -> Self {
        RxGainPattern::Uniform { gain: 1.0 }
    }
}

impl RxGainPattern {
    pub fn gain(&self, physical_aoa: f64) -> f64 {
        match *self {
            RxGainPattern::Uniform { gain } => gain,
            RxGainPattern::CosineLobe { peak, order } => {
                let c = physical_aoa.cos();
                if c <= 0.0 {
                    0.0
                } else {
                    peak * c.powf(order)
                }
            }
        }
    }
}

/// Free-space-reference path-loss law parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct PathLossParams {
    /// Path-loss exponent u (> 0).
    pub exponent: f64,
    /// System loss factor L (linear, ≥ 1).
    pub loss_factor: f64,
    /// Receive gain pattern G_RX(φ).
    pub rx_gain: RxGainPattern,
    /// Radar only: when `true` the distance exponent is applied on both legs
    /// of the round trip (`d^{2u}`); when `false` the stated formula is used
    /// literally (`d^u`). Ignored by the communication law.
    pub two_way: bool,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            loss_factor: 1.0,
            rx_gain: RxGainPattern::default(),
            two_way: false,
        }
    }
}

impl PathLossParams {
    pub fn validate(&self) -> Result<()> {
        if self.exponent <= 0.0 {
            return Err(Error::invalid("path-loss exponent must be positive"));
        }
        if self.loss_factor < 1.0 {
            return Err(Error::invalid("loss factor must be ≥ 1"));
        }
        Ok(())
    }
}

/// One-way communication channel power
/// `G_c = λ²·G_RX(φ) / ((4π)²·d^u·L_c)`.
pub fn comm_path_power(
    params: &PathLossParams,
    wavelength: f64,
    distance: f64,
    physical_aoa: f64,
) -> Result<f64> {
    params.validate()?;
    if distance <= 0.0 {
        return Err(Error::invalid(
            "path power is singular at zero distance; distances must be positive",
        ));
    }
    let num = wavelength * wavelength * params.rx_gain.gain(physical_aoa);
    let den = (4.0 * PI).powi(2) * distance.powf(params.exponent) * params.loss_factor;
    Ok(num / den)
}

/// Two-way radar channel power
/// `G_r = λ²·G_RX(φ)·σ_RCS / (64π³·d^u·L_r)`, with the distance exponent
/// doubled when `params.two_way` is set (see `PathLossParams::two_way`).
pub fn radar_path_power(
    params: &PathLossParams,
    wavelength: f64,
    distance: f64,
    physical_aoa: f64,
    rcs_linear: f64,
) -> Result<f64> {
    params.validate()?;
    if distance <= 0.0 {
        return Err(Error::invalid(
            "path power is singular at zero distance; distances must be positive",
        ));
    }
    if rcs_linear < 0.0 {
        return Err(Error::invalid("radar cross-section must be ≥ 0"));
    }
    let eff_exp = if params.two_way {
        2.0 * params.exponent
    } else {
        params.exponent
    };
    let num = wavelength * wavelength * params.rx_gain.gain(physical_aoa) * rcs_linear;
    let den = 64.0 * PI.powi(3) * distance.powf(eff_exp) * params.loss_factor;
    Ok(num / den)
}

/// Path-loss laws for the two link types present in a scene.
#[derive(Debug, Clone, Copy, Default, serde::Serialize, serde::Deserialize)]
pub struct PathLossModel {
    pub comm: PathLossParams,
    pub radar: PathLossParams,
}

/// Receive pulse shape, evaluated at symbol-rate offsets.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "shape")]
pub enum PulseShape {
    /// Raised cosine, truncated to ±`half_width` symbols.
    RaisedCosine { rolloff: f64, half_width: usize },
    /// Ideal Nyquist sinc, truncated to ±`half_width` symbols. Exact for
    /// on-grid delays; use a large half-width for energy-closure studies.
    NyquistSinc { half_width: usize },
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape::RaisedCosine {
            rolloff: 0.25,
            half_width: 8,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl PulseShape {
    pub fn half_width(&self) -> usize {
        match *self {
            PulseShape::RaisedCosine { half_width, .. } => half_width,
            PulseShape::NyquistSinc { half_width } => half_width,
        }
    }

    /// Pulse value at `x` symbol periods from the center; `eval(0) = 1`.
    pub fn eval(&self, x: f64) -> f64 {
        let hw = self.half_width() as f64;
        if x.abs() > hw {
            return 0.0;
        }
        match *self {
            PulseShape::NyquistSinc { .. } => sinc(x),
            PulseShape::RaisedCosine { rolloff, .. } => {
                if rolloff == 0.0 {
                    return sinc(x);
                }
                let denom = 1.0 - (2.0 * rolloff * x).powi(2);
                if denom.abs() < 1e-9 {
                    // Removable singularity at |x| = 1/(2·rolloff).
                    PI / 4.0 * sinc(1.0 / (2.0 * rolloff))
                } else {
                    sinc(x) * (PI * rolloff * x).cos() / denom
                }
            }
        }
    }
}

/// Range-angle grid settings for scene discretization.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    /// Number of range bins K (delay window is K/W seconds).
    pub range_bins: usize,
    #[serde(default)]
    pub pulse: PulseShape,
}

/// A collection of scatterers.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.scatterers.iter().enumerate() {
            s.validate()
                .map_err(|e| Error::invalid(format!("scatterer {i}: {e}")))?;
        }
        Ok(())
    }

    /// Draw every unresolved coefficient phase uniformly from [0, 2π),
    /// deterministically from `seed`. Already-set phases are kept.
    pub fn resolve_phases(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.scatterers {
            let draw = rng.gen::<f64>() * 2.0 * PI;
            if s.phase.is_none() {
                s.phase = Some(draw);
            }
        }
    }

    /// Append the default residual self-interference term: effective delay
    /// 0.5/W (distance c/(4W) under the two-way convention), broadside,
    /// 20 dB above the strongest target's linear power.
    pub fn add_default_self_interference(
        &mut self,
        frame: &FrameConfig,
        pathloss: &PathLossModel,
    ) -> Result<()> {
        let mut strongest: f64 = 0.0;
        for s in &self.scatterers {
            if s.kind == ScattererKind::Target {
                let p = match s.power_override {
                    Some(p) => p,
                    None => radar_path_power(
                        &pathloss.radar,
                        frame.carrier_wavelength,
                        s.distance,
                        s.physical_aoa,
                        db_to_linear(s.rcs_dbsm),
                    )?,
                };
                strongest = strongest.max(p);
            }
        }
        if strongest == 0.0 {
            return Err(Error::invalid(
                "default self-interference needs at least one target to reference",
            ));
        }
        self.scatterers.push(Scatterer {
            distance: SPEED_OF_LIGHT / (4.0 * frame.bandwidth),
            physical_aoa: 0.0,
            rcs_dbsm: 0.0,
            power_override: Some(strongest * 100.0),
            phase: None,
            kind: ScattererKind::SelfInterference,
        });
        Ok(())
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Ground-truth channel on the range-angle grid.
#[derive(Debug, Clone)]
pub struct RangeAngleChannel {
    x: Array2<Complex>,
    a_m: Array2<Complex>,
    delay_resolution: f64,
}

impl RangeAngleChannel {
    /// Wrap an existing M×K coefficient matrix (delay resolution `1/W`).
    pub fn from_matrix(x: Array2<Complex>, bandwidth: f64) -> Result<Self> {
        if bandwidth <= 0.0 {
            return Err(Error::invalid("bandwidth must be positive"));
        }
        let a_m = angle_dictionary(x.nrows());
        Ok(Self {
            x,
            a_m,
            delay_resolution: 1.0 / bandwidth,
        })
    }

    /// M×K angle-domain × range-bin coefficients.
    pub fn x(&self) -> &Array2<Complex> {
        &self.x
    }

    /// The unitary M×M angle dictionary.
    pub fn angle_dictionary(&self) -> &Array2<Complex> {
        &self.a_m
    }

    pub fn num_angle_bins(&self) -> usize {
        self.x.nrows()
    }

    pub fn num_range_bins(&self) -> usize {
        self.x.ncols()
    }

    /// Range-bin width 1/W in seconds.
    pub fn delay_resolution(&self) -> f64 {
        self.delay_resolution
    }

    /// Angle-bin width in spatial frequency, 1/M.
    pub fn angle_resolution(&self) -> f64 {
        1.0 / self.num_angle_bins() as f64
    }

    /// The channel seen at the antenna elements, `A_M·X` (same energy as
    /// `X` because the dictionary is unitary).
    pub fn to_element_domain(&self) -> Array2<Complex> {
        self.a_m.dot(&self.x)
    }
}

/// Discretize a scene onto the M×K range-angle grid.
///
/// Each scatterer contributes `√G·e^{jφ}` spread across range bins by the
/// sampled receive pulse (centered on its delay in units of 1/W) and across
/// angle bins by projecting its steering vector onto the angle dictionary.
pub fn discretize_scene(
    scene: &Scene,
    geometry: &ArrayGeometry,
    frame: &FrameConfig,
    pathloss: &PathLossModel,
    grid: &GridSpec,
) -> Result<RangeAngleChannel> {
    geometry.validate()?;
    frame.validate()?;
    scene.validate()?;
    if grid.range_bins == 0 {
        return Err(Error::invalid("need at least one range bin"));
    }
    let m_total = geometry.num_elements;
    let k_total = grid.range_bins;
    let mut x = Array2::from_elem((m_total, k_total), Complex::default());
    let tau_max = k_total as f64 / frame.bandwidth;

    for (idx, s) in scene.scatterers.iter().enumerate() {
        let delay = s.delay();
        if delay > tau_max {
            return Err(Error::invalid(format!(
                "scatterer {idx} delay {delay:.3e} s exceeds the grid window {tau_max:.3e} s"
            )));
        }
        let power = match s.power_override {
            Some(p) => p,
            None => match s.kind {
                ScattererKind::Target | ScattererKind::SelfInterference => radar_path_power(
                    &pathloss.radar,
                    frame.carrier_wavelength,
                    s.distance,
                    s.physical_aoa,
                    db_to_linear(s.rcs_dbsm),
                )?,
                ScattererKind::CommPath => comm_path_power(
                    &pathloss.comm,
                    frame.carrier_wavelength,
                    s.distance,
                    s.physical_aoa,
                )?,
            },
        };
        let phase = s.phase.ok_or_else(|| {
            Error::invalid(format!(
                "scatterer {idx} has no phase; call Scene::resolve_phases first"
            ))
        })?;
        let amp = Complex::new(0.0, phase).exp() * power.sqrt();
        let beam = project_onto_angle_grid(geometry, geometry.spatial_angle(s.physical_aoa));

        let center = delay * frame.bandwidth;
        let hw = grid.pulse.half_width() as f64;
        let k_lo = ((center - hw).ceil().max(0.0)) as usize;
        let k_hi = ((center + hw).floor().min((k_total - 1) as f64)) as usize;
        for k in k_lo..=k_hi.min(k_total - 1) {
            let pv = grid.pulse.eval(k as f64 - center);
            if pv == 0.0 {
                continue;
            }
            let w = amp * pv;
            for (m, b) in beam.iter().enumerate() {
                x[[m, k]] += w * b;
            }
        }
    }
    RangeAngleChannel::from_matrix(x, frame.bandwidth)
}

/// Least-squares fit of the path-loss exponent from `(distance_m, power_dB)`
/// samples: regress power in dB against log10(distance); the slope is in
/// dB/decade and the returned exponent is `−slope/10`, halved when
/// `two_way` round-trip decay generated the data. Also returns the intercept
/// (dB at 1 m).
pub fn fit_path_loss_exponent(
    measurements: &[(f64, f64)],
    two_way: bool,
) -> Result<(f64, f64)> {
    if measurements.len() < 2 {
        return Err(Error::invalid("need at least two measurements"));
    }
    if measurements.iter().any(|&(d, _)| d <= 0.0) {
        return Err(Error::invalid("distances must be positive"));
    }
    let n = measurements.len() as f64;
    let zs: Vec<f64> = measurements.iter().map(|&(d, _)| d.log10()).collect();
    let z_mean = zs.iter().sum::<f64>() / n;
    let p_mean = measurements.iter().map(|&(_, p)| p).sum::<f64>() / n;
    let mut szz = 0.0;
    let mut szp = 0.0;
    for (&(_, p), &z) in measurements.iter().zip(&zs) {
        szz += (z - z_mean) * (z - z_mean);
        szp += (z - z_mean) * (p - p_mean);
    }
    if szz == 0.0 {
        return Err(Error::invalid(
            "all distances equal: exponent fit is rank-deficient",
        ));
    }
    let slope = szp / szz;
    let intercept = p_mean - slope * z_mean;
    let mut u = -slope / 10.0;
    if two_way {
        u /= 2.0;
    }
    Ok((u, intercept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_geometry(m: usize) -> ArrayGeometry {
        ArrayGeometry {
            num_elements: m,
            spacing: 0.002,
            wavelength: 0.004,
        }
    }

    fn test_frame() -> FrameConfig {
        FrameConfig {
            preamble_fraction: 1.0,
            coherent_interval: 1e-3,
            bandwidth: 1.536e9,
            carrier_wavelength: 0.004,
        }
    }

    #[test]
    fn array_response_broadside() {
        let a = array_response(&test_geometry(4), 0.0);
        for e in &a {
            assert_relative_eq!(e.re, 0.5, epsilon = 1e-15);
            assert_relative_eq!(e.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn array_response_half_cycle() {
        let a = array_response(&test_geometry(2), 0.5);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(a[0].re, s, epsilon = 1e-15);
        assert_relative_eq!(a[1].re, -s, epsilon = 1e-12);
        assert_relative_eq!(a[1].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn array_response_grid_orthogonality() {
        let g = test_geometry(8);
        let a0 = array_response(&g, 0.0);
        let a2 = array_response(&g, 0.25);
        let ip: Complex = a0.iter().zip(&a2).map(|(x, y)| x * y.conj()).sum();
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn array_response_wraps() {
        let g = test_geometry(8);
        let a = array_response(&g, 0.75);
        let b = array_response(&g, -0.25);
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.re, y.re, epsilon = 1e-12);
            assert_relative_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn dictionary_is_unitary() {
        for m in [1usize, 2, 8, 64] {
            let a = angle_dictionary(m);
            let ah = a.t().mapv(|c| c.conj());
            let g = ah.dot(&a);
            for i in 0..m {
                for j in 0..m {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g[[i, j]] - Complex::new(want, 0.0)).norm() < 1e-12,
                        "gram deviates at ({i},{j}) for M={m}"
                    );
                }
            }
        }
    }

    #[test]
    fn dictionary_columns_are_grid_responses() {
        let m = 8;
        let g = test_geometry(m);
        let a = angle_dictionary(m);
        for col in 0..m {
            let want = array_response(&g, col as f64 / m as f64);
            for row in 0..m {
                assert!((a[[row, col]] - want[row]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dictionary_preserves_norm() {
        let m = 16;
        let a = angle_dictionary(m);
        let x: Vec<Complex> = (0..m)
            .map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.37).cos()))
            .collect();
        let xa = ndarray::Array1::from_vec(x.clone());
        let y = a.dot(&xa);
        let nx: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let ny: f64 = y.iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(nx, ny, max_relative = 1e-12);
    }

    #[test]
    fn comm_power_reference_point() {
        let p = PathLossParams::default();
        let g = comm_path_power(&p, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(g, 1.0 / (4.0 * PI).powi(2), max_relative = 1e-12);
        assert!((g - 6.333e-3).abs() < 5e-6);
    }

    #[test]
    fn comm_power_inverse_square() {
        let p = PathLossParams::default();
        let g2 = comm_path_power(&p, 1.0, 2.0, 0.0).unwrap();
        let g4 = comm_path_power(&p, 1.0, 4.0, 0.0).unwrap();
        assert_relative_eq!(g2 / g4, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn comm_power_rejects_zero_distance() {
        let p = PathLossParams::default();
        assert!(comm_path_power(&p, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn radar_power_reference_point() {
        let p = PathLossParams::default();
        let g = radar_path_power(&p, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(g, 1.0 / (64.0 * PI.powi(3)), max_relative = 1e-12);
        assert!((g - 5.04e-4).abs() < 5e-7);
    }

    #[test]
    fn radar_power_linear_in_rcs() {
        let p = PathLossParams::default();
        let g1 = radar_path_power(&p, 0.004, 3.0, 0.1, 1.0).unwrap();
        let g2 = radar_path_power(&p, 0.004, 3.0, 0.1, 2.0).unwrap();
        assert_relative_eq!(g2, 2.0 * g1, max_relative = 1e-12);
    }

    #[test]
    fn radar_power_round_trip_convention() {
        // Literal one-application law: doubling distance at u=2 is −6.02 dB.
        let literal = PathLossParams::default();
        let g2 = radar_path_power(&literal, 1.0, 2.0, 0.0, 1.0).unwrap();
        let g4 = radar_path_power(&literal, 1.0, 4.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(linear_to_db(g2 / g4), 6.0206, epsilon = 1e-3);
        // Round-trip convention: the exponent applies on both legs, −12.04 dB.
        let two_way = PathLossParams {
            two_way: true,
            ..literal
        };
        let g2 = radar_path_power(&two_way, 1.0, 2.0, 0.0, 1.0).unwrap();
        let g4 = radar_path_power(&two_way, 1.0, 4.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(linear_to_db(g2 / g4), 12.0412, epsilon = 1e-3);
    }

    #[test]
    fn pulse_values() {
        let rc = PulseShape::default();
        assert_relative_eq!(rc.eval(0.0), 1.0);
        // Nyquist zero crossings at nonzero integers.
        assert!(rc.eval(1.0).abs() < 1e-15);
        assert!(rc.eval(3.0).abs() < 1e-15);
        // Removable singularity at 1/(2·rolloff) = 2 for rolloff 0.25:
        // (π/4)·sinc(2) = 0.
        assert!(rc.eval(2.0).abs() < 1e-12);
        assert_eq!(rc.eval(8.5), 0.0, "outside the truncation window");
        let sc = PulseShape::NyquistSinc { half_width: 8 };
        assert_relative_eq!(sc.eval(0.5), 2.0 / PI, max_relative = 1e-12);
    }

    #[test]
    fn raised_cosine_half_offset_energy() {
        // Sampled energy of the truncated RC at a half-bin offset; frozen
        // reference from an independent numerical evaluation.
        let rc = PulseShape::default();
        let e: f64 = (-8..8).map(|k| rc.eval(k as f64 + 0.5).powi(2)).sum();
        assert!((e - 0.875).abs() < 1e-3, "got {e}");
    }

    fn on_grid_scene(m_star: usize, k_star: usize, g: &ArrayGeometry, f: &FrameConfig) -> Scene {
        let theta = m_star as f64 / g.num_elements as f64;
        let phi = g.physical_angle(wrap_spatial_angle(theta));
        let dist = k_star as f64 * SPEED_OF_LIGHT / (2.0 * f.bandwidth);
        Scene {
            scatterers: vec![Scatterer {
                distance: dist,
                physical_aoa: phi,
                rcs_dbsm: 0.0,
                power_override: Some(4.0),
                phase: Some(0.3),
                kind: ScattererKind::Target,
            }],
        }
    }

    #[test]
    fn on_grid_scatterer_hits_single_cell() {
        let g = test_geometry(8);
        let f = test_frame();
        let scene = on_grid_scene(2, 5, &g, &f);
        let grid = GridSpec {
            range_bins: 16,
            pulse: PulseShape::NyquistSinc { half_width: 8 },
        };
        let ch = discretize_scene(&scene, &g, &f, &PathLossModel::default(), &grid).unwrap();
        let want = Complex::new(0.0, 0.3).exp() * 2.0;
        for m in 0..8 {
            for k in 0..16 {
                let v = ch.x()[[m, k]];
                if (m, k) == (2, 5) {
                    assert!((v - want).norm() < 1e-10, "peak cell wrong: {v}");
                } else {
                    assert!(v.norm() < 1e-10, "leakage at ({m},{k}): {}", v.norm());
                }
            }
        }
    }

    #[test]
    fn empty_scene_is_zero() {
        let g = test_geometry(4);
        let f = test_frame();
        let grid = GridSpec {
            range_bins: 8,
            pulse: PulseShape::default(),
        };
        let ch =
            discretize_scene(&Scene::default(), &g, &f, &PathLossModel::default(), &grid).unwrap();
        assert!(ch.x().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn midway_scatterer_energy_closes() {
        let g = test_geometry(4);
        let f = test_frame();
        // Delay exactly between bins 511 and 512 on a 1024-bin grid.
        let dist = 511.5 * SPEED_OF_LIGHT / (2.0 * f.bandwidth);
        let scene = Scene {
            scatterers: vec![Scatterer {
                distance: dist,
                physical_aoa: 0.31,
                rcs_dbsm: 0.0,
                power_override: Some(2.5),
                phase: Some(1.1),
                kind: ScattererKind::Target,
            }],
        };
        let grid = GridSpec {
            range_bins: 1024,
            pulse: PulseShape::NyquistSinc { half_width: 512 },
        };
        let ch = discretize_scene(&scene, &g, &f, &PathLossModel::default(), &grid).unwrap();
        let e: f64 = ch.x().iter().map(|c| c.norm_sqr()).sum();
        assert!((e - 2.5).abs() / 2.5 < 1e-3, "energy closure failed: {e}");
    }

    #[test]
    fn radar_and_comm_delay_conventions() {
        // A radar target at d and a comm path at 2d share the same delay,
        // hence the same range-bin peak.
        let g = test_geometry(4);
        let f = test_frame();
        let d = 6.0 * SPEED_OF_LIGHT / (2.0 * f.bandwidth);
        let mk = |kind, dist| Scatterer {
            distance: dist,
            physical_aoa: 0.0,
            rcs_dbsm: 0.0,
            power_override: Some(1.0),
            phase: Some(0.0),
            kind,
        };
        let grid = GridSpec {
            range_bins: 16,
            pulse: PulseShape::NyquistSinc { half_width: 8 },
        };
        for sc in [
            mk(ScattererKind::Target, d),
            mk(ScattererKind::CommPath, 2.0 * d),
        ] {
            let scene = Scene {
                scatterers: vec![sc],
            };
            let ch = discretize_scene(&scene, &g, &f, &PathLossModel::default(), &grid).unwrap();
            let (mut best, mut best_k) = (0.0, 0);
            for k in 0..16 {
                let col: f64 = (0..4).map(|m| ch.x()[[m, k]].norm_sqr()).sum();
                if col > best {
                    best = col;
                    best_k = k;
                }
            }
            assert_eq!(best_k, 6);
        }
    }

    #[test]
    fn scene_superposition() {
        let g = test_geometry(8);
        let f = test_frame();
        let grid = GridSpec {
            range_bins: 32,
            pulse: PulseShape::default(),
        };
        let mut a = on_grid_scene(1, 3, &g, &f);
        let b = on_grid_scene(5, 17, &g, &f);
        let xa = discretize_scene(&a, &g, &f, &PathLossModel::default(), &grid).unwrap();
        let xb = discretize_scene(&b, &g, &f, &PathLossModel::default(), &grid).unwrap();
        a.scatterers.extend(b.scatterers.clone());
        let xab = discretize_scene(&a, &g, &f, &PathLossModel::default(), &grid).unwrap();
        for m in 0..8 {
            for k in 0..32 {
                let sum = xa.x()[[m, k]] + xb.x()[[m, k]];
                assert!((xab.x()[[m, k]] - sum).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_window_scatterer_rejected() {
        let g = test_geometry(4);
        let f = test_frame();
        let grid = GridSpec {
            range_bins: 8,
            pulse: PulseShape::default(),
        };
        let scene = Scene {
            scatterers: vec![Scatterer {
                distance: 100.0 * SPEED_OF_LIGHT / f.bandwidth,
                physical_aoa: 0.0,
                rcs_dbsm: 0.0,
                power_override: Some(1.0),
                phase: Some(0.0),
                kind: ScattererKind::Target,
            }],
        };
        let err = discretize_scene(&scene, &g, &f, &PathLossModel::default(), &grid).unwrap_err();
        assert!(err.to_string().contains("scatterer 0"), "got: {err}");
    }

    #[test]
    fn unresolved_phase_rejected() {
        let g = test_geometry(4);
        let f = test_frame();
        let grid = GridSpec {
            range_bins: 8,
            pulse: PulseShape::default(),
        };
        let scene = Scene {
            scatterers: vec![Scatterer {
                distance: 0.5,
                physical_aoa: 0.0,
                rcs_dbsm: 0.0,
                power_override: Some(1.0),
                phase: None,
                kind: ScattererKind::Target,
            }],
        };
        assert!(discretize_scene(&scene, &g, &f, &PathLossModel::default(), &grid).is_err());
    }

    #[test]
    fn resolve_phases_is_deterministic_and_preserving() {
        let mut s1 = Scene {
            scatterers: vec![
                Scatterer {
                    distance: 1.0,
                    physical_aoa: 0.0,
                    rcs_dbsm: 0.0,
                    power_override: None,
                    phase: None,
                    kind: ScattererKind::Target,
                },
                Scatterer {
                    distance: 2.0,
                    physical_aoa: 0.1,
                    rcs_dbsm: 0.0,
                    power_override: None,
                    phase: Some(0.25),
                    kind: ScattererKind::Target,
                },
            ],
        };
        let mut s2 = s1.clone();
        s1.resolve_phases(7);
        s2.resolve_phases(7);
        assert_eq!(s1.scatterers[0].phase, s2.scatterers[0].phase);
        assert_eq!(s1.scatterers[1].phase, Some(0.25));
        let p = s1.scatterers[0].phase.unwrap();
        assert!((0.0..2.0 * PI).contains(&p));
        let mut s3 = s2.clone();
        s3.scatterers[0].phase = None;
        s3.resolve_phases(8);
        assert_ne!(s3.scatterers[0].phase, s1.scatterers[0].phase);
    }

    #[test]
    fn default_self_interference() {
        let f = test_frame();
        let pl = PathLossModel::default();
        let mut scene = Scene {
            scatterers: vec![Scatterer {
                distance: 2.0,
                physical_aoa: 0.2,
                rcs_dbsm: 10.0,
                power_override: None,
                phase: Some(0.0),
                kind: ScattererKind::Target,
            }],
        };
        scene.add_default_self_interference(&f, &pl).unwrap();
        let si = scene.scatterers.last().unwrap();
        assert_eq!(si.kind, ScattererKind::SelfInterference);
        // Effective two-way delay is 0.5/W.
        assert_relative_eq!(si.delay() * f.bandwidth, 0.5, max_relative = 1e-12);
        let target_power = radar_path_power(&pl.radar, f.carrier_wavelength, 2.0, 0.2, 10.0)
            .unwrap();
        assert_relative_eq!(
            si.power_override.unwrap(),
            100.0 * target_power,
            max_relative = 1e-12
        );
        // No targets → rejected.
        let mut empty = Scene::default();
        assert!(empty.add_default_self_interference(&f, &pl).is_err());
    }

    #[test]
    fn exponent_fit_exact_lines() {
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|i| {
                let d = i as f64;
                (d, -20.0 * d.log10() + 3.0)
            })
            .collect();
        let (u, b) = fit_path_loss_exponent(&pts, false).unwrap();
        assert_relative_eq!(u, 2.0, epsilon = 1e-9);
        assert_relative_eq!(b, 3.0, epsilon = 1e-9);
        let pts4: Vec<(f64, f64)> = (1..=10)
            .map(|i| {
                let d = i as f64 * 0.5;
                (d, -40.0 * d.log10() - 7.0)
            })
            .collect();
        let (u, _) = fit_path_loss_exponent(&pts4, false).unwrap();
        assert_relative_eq!(u, 4.0, epsilon = 1e-9);
        let (u, _) = fit_path_loss_exponent(&pts4, true).unwrap();
        assert_relative_eq!(u, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn exponent_fit_degenerate_inputs() {
        assert!(fit_path_loss_exponent(&[(1.0, 0.0)], false).is_err());
        assert!(fit_path_loss_exponent(&[(2.0, 0.0), (2.0, -1.0)], false).is_err());
        assert!(fit_path_loss_exponent(&[(2.0, 0.0), (-1.0, 1.0)], false).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(test_geometry(8).validate().is_ok());
        let too_wide = ArrayGeometry {
            num_elements: 4,
            spacing: 0.003,
            wavelength: 0.004,
        };
        assert!(too_wide.validate().is_err());
        let none = ArrayGeometry {
            num_elements: 0,
            spacing: 0.002,
            wavelength: 0.004,
        };
        assert!(none.validate().is_err());
    }

    #[test]
    fn scatterer_validation() {
        let bad_angle = Scatterer {
            distance: 1.0,
            physical_aoa: 2.0,
            rcs_dbsm: 0.0,
            power_override: None,
            phase: None,
            kind: ScattererKind::Target,
        };
        assert!(bad_angle.validate().is_err());
        let bad_dist = Scatterer {
            distance: -1.0,
            physical_aoa: 0.0,
            ..bad_angle.clone()
        };
        assert!(bad_dist.validate().is_err());
    }
}
