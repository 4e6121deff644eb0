//! Receiver front end: Gaussian noise injection at a target SNR and
//! few-bit mid-rise ADC quantization.
//!
//! The quantizer maps each real and imaginary component independently:
//!
//! ```text
//! q = sign(x) · (min(⌈|x|/Δ⌉, 2^{b−1}) − ½) · Δ
//! ```
//!
//! with the component step `Δ = √E[x²]·Δ_b`, where `Δ_b` is the
//! distortion-minimizing step for a standard Gaussian input (computed once
//! per bit depth and cached). Exact zeros map to the first negative level
//! `−Δ/2` (the ceiling of 0 is 0), and exact bin-boundary inputs map to the
//! lower-magnitude bin — both conventions are reachable in floating point
//! and therefore documented and tested.

use crate::channel::RangeAngleChannel;
use crate::operator::SystemOperator;
use crate::special::{gaussian_quantizer_mse, golden_section_min};
use crate::{Complex, Error, Result};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::fmt;
use std::sync::OnceLock;

/// Largest supported finite ADC resolution.
pub const MAX_BITS: u8 = 12;

/// ADC resolution: a finite bit depth in 1..=12, or the unquantized model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Finite(u8),
    Infinite,
}

impl BitDepth {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BitDepth::Finite(b) if (1..=MAX_BITS).contains(&b) => Ok(()),
            BitDepth::Finite(b) => Err(Error::invalid(format!(
                "bit depth {b} outside the supported range 1..={MAX_BITS}"
            ))),
            BitDepth::Infinite => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BitDepth::Finite(_))
    }

    /// Relative quantization distortion `E[(x−Q(x))²]/E[x²]` at the optimal
    /// step for Gaussian input; zero for the unquantized model.
    pub fn distortion_fraction(&self) -> Result<f64> {
        match *self {
            BitDepth::Finite(b) => quantizer_distortion(b),
            BitDepth::Infinite => Ok(0.0),
        }
    }
}

impl fmt::Display for BitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitDepth::Finite(b) => write!(f, "{b}"),
            BitDepth::Infinite => write!(f, "infinite"),
        }
    }
}

impl serde::Serialize for BitDepth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BitDepth::Finite(b) => s.serialize_u8(*b),
            BitDepth::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for BitDepth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> serde::de::Visitor<'de> for V {
            type Value = BitDepth;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "an integer bit depth (1..=12) or the string \"infinite\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<BitDepth, E> {
                if (1..=MAX_BITS as u64).contains(&v) {
                    Ok(BitDepth::Finite(v as u8))
                } else {
                    Err(E::custom(format!("bit depth {v} outside 1..={MAX_BITS}")))
                }
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<BitDepth, E> {
                if v >= 0 {
                    self.visit_u64(v as u64)
                } else {
                    Err(E::custom("bit depth must be positive"))
                }
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<BitDepth, E> {
                match v {
                    "infinite" | "inf" => Ok(BitDepth::Infinite),
                    other => Err(E::custom(format!(
                        "unknown bit depth {other:?}; use an integer or \"infinite\""
                    ))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn step_cache() -> &'static [OnceLock<f64>; MAX_BITS as usize] {
    static CACHE: OnceLock<[OnceLock<f64>; MAX_BITS as usize]> = OnceLock::new();
    CACHE.get_or_init(|| std::array::from_fn(|_| OnceLock::new()))
}

/// Distortion-minimizing mid-rise step `Δ_b` for a standard Gaussian input,
/// found by golden-section search on the closed-form quantizer MSE and
/// cached per bit depth.
pub fn optimal_step(bits: u8) -> Result<f64> {
    BitDepth::Finite(bits).validate()?;
    Ok(*step_cache()[bits as usize - 1].get_or_init(|| {
        golden_section_min(|d| gaussian_quantizer_mse(d, bits), 1e-3, 4.0, 1e-10)
    }))
}

/// Minimum relative distortion `D_b = min_Δ E[(x−Q(x))²]` for a standard
/// Gaussian input at `bits` resolution.
pub fn quantizer_distortion(bits: u8) -> Result<f64> {
    Ok(gaussian_quantizer_mse(optimal_step(bits)?, bits))
}

/// Where the per-component quantizer scale `√E[x²]` comes from.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "source")]
pub enum ScaleSource {
    /// Second moments measured on the block being quantized (the emulation
    /// path used on captured data). `per_antenna` selects row-wise moments
    /// instead of one pair for the whole block.
    EmpiricalMoment { per_antenna: bool },
    /// Known complex-sample variance (per-component moment is half of it).
    ConfiguredVariance { variance: f64 },
}

impl Default for ScaleSource {
    fn default() -> Self {
        ScaleSource::EmpiricalMoment { per_antenna: false }
    }
}

/// Absolute per-component steps resolved when a block was quantized.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ComponentScales {
    /// One `(Δ_Re, Δ_Im)` pair for the whole block.
    PerBlock { re: f64, im: f64 },
    /// One `(Δ_Re, Δ_Im)` pair per antenna row.
    PerAntenna(Vec<(f64, f64)>),
}

impl ComponentScales {
    /// Step for one component; `imag` selects the imaginary part.
    pub fn step(&self, antenna: usize, imag: bool) -> f64 {
        match self {
            ComponentScales::PerBlock { re, im } => {
                if imag {
                    *im
                } else {
                    *re
                }
            }
            ComponentScales::PerAntenna(v) => {
                let (re, im) = v[antenna];
                if imag {
                    im
                } else {
                    re
                }
            }
        }
    }
}

/// Mid-rise quantizer configuration plus, after application, the resolved
/// absolute component steps.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuantizerSpec {
    pub bits: BitDepth,
    /// Dimensionless step per unit RMS; `None` selects [`optimal_step`].
    pub step_scale: Option<f64>,
    #[serde(default)]
    pub scale_source: ScaleSource,
    /// Filled in by [`quantize`]; `None` before application or when
    /// `bits` is infinite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component_scales: Option<ComponentScales>,
}

impl QuantizerSpec {
    pub fn new(bits: BitDepth) -> Self {
        Self {
            bits,
            step_scale: None,
            scale_source: ScaleSource::default(),
            component_scales: None,
        }
    }

    pub fn with_scale_source(mut self, source: ScaleSource) -> Self {
        self.scale_source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bits.validate()?;
        if let Some(s) = self.step_scale {
            if s <= 0.0 {
                return Err(Error::invalid("step scale must be positive"));
            }
        }
        if let ScaleSource::ConfiguredVariance { variance } = self.scale_source {
            if variance <= 0.0 {
                return Err(Error::invalid("configured variance must be positive"));
            }
        }
        Ok(())
    }

    /// The dimensionless step `Δ_b` in effect (explicit or optimal).
    pub fn effective_step_scale(&self) -> Result<f64> {
        match (self.step_scale, self.bits) {
            (Some(s), _) => Ok(s),
            (None, BitDepth::Finite(b)) => optimal_step(b),
            (None, BitDepth::Infinite) => Ok(f64::NAN),
        }
    }
}

fn quantize_component(x: f64, delta: f64, bits: u8) -> f64 {
    let half_levels = (1u64 << (bits - 1)) as f64;
    // x = ±0 takes the positive branch, landing on −Δ/2 (⌈0⌉ = 0).
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let j = (x.abs() / delta).ceil().min(half_levels).max(0.0);
    sign * (j - 0.5) * delta
}

/// Quantize a complex block; returns the quantized block and a copy of the
/// spec with `component_scales` resolved (needed to map outputs back to
/// quantization bins).
pub fn quantize(
    y: &Array2<Complex>,
    spec: &QuantizerSpec,
) -> Result<(Array2<Complex>, QuantizerSpec)> {
    spec.validate()?;
    let bits = match spec.bits {
        BitDepth::Infinite => {
            let mut resolved = spec.clone();
            resolved.component_scales = None;
            return Ok((y.clone(), resolved));
        }
        BitDepth::Finite(b) => b,
    };
    if y.is_empty() {
        return Err(Error::invalid("cannot quantize an empty block"));
    }
    let step_scale = spec.effective_step_scale()?;

    let moment_pair = |it: &mut dyn Iterator<Item = Complex>| -> Result<(f64, f64)> {
        let (mut sre, mut sim, mut n) = (0.0f64, 0.0f64, 0usize);
        for c in it {
            sre += c.re * c.re;
            sim += c.im * c.im;
            n += 1;
        }
        let (mre, mim) = (sre / n as f64, sim / n as f64);
        if mre == 0.0 || mim == 0.0 {
            return Err(Error::invalid(
                "block component has zero power; moment-based quantizer scale undefined",
            ));
        }
        Ok((mre.sqrt() * step_scale, mim.sqrt() * step_scale))
    };

    let scales = match spec.scale_source {
        ScaleSource::ConfiguredVariance { variance } => {
            let d = (variance / 2.0).sqrt() * step_scale;
            ComponentScales::PerBlock { re: d, im: d }
        }
        ScaleSource::EmpiricalMoment { per_antenna: false } => {
            let (re, im) = moment_pair(&mut y.iter().copied())?;
            ComponentScales::PerBlock { re, im }
        }
        ScaleSource::EmpiricalMoment { per_antenna: true } => {
            let mut v = Vec::with_capacity(y.nrows());
            for row in y.rows() {
                v.push(moment_pair(&mut row.iter().copied())?);
            }
            ComponentScales::PerAntenna(v)
        }
    };

    let q = Array2::from_shape_fn(y.dim(), |(m, n)| {
        let dre = scales.step(m, false);
        let dim = scales.step(m, true);
        Complex::new(
            quantize_component(y[[m, n]].re, dre, bits),
            quantize_component(y[[m, n]].im, dim, bits),
        )
    });
    let mut resolved = spec.clone();
    resolved.component_scales = Some(scales);
    Ok((q, resolved))
}

/// The quantization interval `[lo, up)` that produced output level `q`
/// (outermost bins extend to ±∞). Rejects values that are not levels of the
/// `bits`-deep mid-rise alphabet with step `delta` (tolerating the rounding
/// of a 32-bit-float capture).
pub fn bin_bounds(q: f64, delta: f64, bits: u8) -> Result<(f64, f64)> {
    BitDepth::Finite(bits).validate()?;
    if !(delta > 0.0) {
        return Err(Error::invalid("quantizer step must be positive"));
    }
    let half_levels = (1u64 << (bits - 1)) as f64;
    let j = (q.abs() / delta + 0.5).round();
    if j < 1.0 || j > half_levels || ((j - 0.5) * delta - q.abs()).abs() > 1e-3 * delta {
        return Err(Error::invalid(format!(
            "{q} is not an output level of the {bits}-bit mid-rise alphabet with step {delta}"
        )));
    }
    let lo = (j - 1.0) * delta;
    let up = if j == half_levels {
        f64::INFINITY
    } else {
        j * delta
    };
    if q < 0.0 {
        Ok((-up, -lo))
    } else {
        Ok((lo, up))
    }
}

/// Additive noise specification for synthesis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum NoiseSpec {
    /// Noise power set so that `‖Z‖²/E‖W‖²` equals this SNR.
    SnrDb(f64),
    /// Complex per-sample noise variance σ_w² given directly.
    NoiseVariance(f64),
    Noiseless,
}

/// Synthesis settings: noise level, coherent repetitions, RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SynthesisConfig {
    pub noise: NoiseSpec,
    /// Coherently averaged sequence repetitions; averaging R blocks divides
    /// the effective noise variance by R.
    pub repetitions: u32,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(noise: NoiseSpec, seed: u64) -> Self {
        Self {
            noise,
            repetitions: 1,
            seed,
        }
    }
}

/// A received M×N block with its noise bookkeeping.
#[derive(Debug, Clone)]
pub struct ReceivedBlock {
    y: Array2<Complex>,
    noise_variance: f64,
    snr_db: Option<f64>,
    seed: u64,
}

impl ReceivedBlock {
    pub fn from_parts(
        y: Array2<Complex>,
        noise_variance: f64,
        snr_db: Option<f64>,
        seed: u64,
    ) -> Self {
        Self {
            y,
            noise_variance,
            snr_db,
            seed,
        }
    }

    pub fn y(&self) -> &Array2<Complex> {
        &self.y
    }

    pub fn into_y(self) -> Array2<Complex> {
        self.y
    }

    /// Effective complex per-sample noise variance (after repetition
    /// averaging).
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// The configured SNR, when the block was synthesized in SNR mode.
    pub fn snr_db(&self) -> Option<f64> {
        self.snr_db
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_antennas(&self) -> usize {
        self.y.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.y.ncols()
    }

    /// The block as it survives a 32-bit-float I/Q capture: every component
    /// rounded through `f32`. Idempotent; this is the exact data a dump
    /// written by `io` reproduces on load.
    pub fn captured(&self) -> Self {
        let y = self
            .y
            .mapv(|c| Complex::new(c.re as f32 as f64, c.im as f32 as f64));
        Self { y, ..*self }
    }
}

/// Synthesize `Y = A_M·X·D + W` with i.i.d. complex Gaussian noise.
///
/// In SNR mode the variance solves `‖Z‖²/E‖W‖² = snr_linear` with
/// `Z = A_M·X·D`; an all-zero channel is rejected there (the ratio is
/// undefined). Per complex sample, real and imaginary parts are drawn
/// independently with variance σ_w²/2, row-major, real before imaginary —
/// the draw order is part of the determinism contract.
pub fn synthesize_received(
    channel: &RangeAngleChannel,
    op: &SystemOperator,
    cfg: &SynthesisConfig,
) -> Result<ReceivedBlock> {
    if cfg.repetitions == 0 {
        return Err(Error::invalid("repetition count must be ≥ 1"));
    }
    let z = op.forward(channel.x())?;
    let mn = (z.nrows() * z.ncols()) as f64;
    let signal_energy: f64 = z.iter().map(|c| c.norm_sqr()).sum();

    let (mut variance, snr_db) = match cfg.noise {
        NoiseSpec::Noiseless => (0.0, None),
        NoiseSpec::SnrDb(s) if !s.is_finite() && s > 0.0 => (0.0, None),
        NoiseSpec::SnrDb(s) => {
            if signal_energy == 0.0 {
                return Err(Error::invalid(
                    "all-zero channel: SNR-referenced noise power is undefined",
                ));
            }
            let snr_linear = crate::channel::db_to_linear(s);
            (signal_energy / (mn * snr_linear), Some(s))
        }
        NoiseSpec::NoiseVariance(v) => {
            if v < 0.0 {
                return Err(Error::invalid("noise variance must be ≥ 0"));
            }
            (v, None)
        }
    };
    variance /= cfg.repetitions as f64;

    let mut y = z;
    if variance > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let sigma = (variance / 2.0).sqrt();
        for c in y.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *c += Complex::new(re * sigma, im * sigma);
        }
    }
    Ok(ReceivedBlock {
        y,
        noise_variance: variance,
        snr_db,
        seed: cfg.seed,
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a worker seed from a root seed and an index path (for example
/// `[scene, snr_index, bits_index, repetition]`). The rule is a fold of the
/// splitmix64 finalizer over the path, so distinct paths give independent
/// streams and results are reproducible from `(root, path)` alone.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(root);
    for &p in path {
        s = splitmix64(s ^ splitmix64(p.wrapping_add(0xA076_1D64_78BD_642F)));
    }
    s
}
