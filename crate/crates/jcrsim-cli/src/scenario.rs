//! Strict scenario files: the on-disk experiment description.
//!
//! Keys carry explicit units in their names (`bandwidth-hz`,
//! `wavelength-m`, `distance-m`) and unknown keys are rejected, so unit
//! bugs and typos fail at load time instead of producing silently wrong
//! physics. A parsed scenario is converted ("realized") into the library's
//! runtime objects in one validated step.

use anyhow::{anyhow, bail, Context};
use jcrsim::channel::{
    discretize_scene, ArrayGeometry, GridSpec, PathLossModel, PathLossParams, PulseShape,
    RangeAngleChannel, RxGainPattern, Scatterer, ScattererKind, Scene,
};
use jcrsim::estimation::{EstimatorMethod, GampConfig, InputDomain, PriorModel};
use jcrsim::frontend::{derive_seed, BitDepth};
use jcrsim::metrics::{NmseReference, SweepConfig, SweepGrid};
use jcrsim::operator::SystemOperator;
use jcrsim::waveform::{build_measurement_matrix, FrameConfig, MatrixMode, TrainingSequence};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Names of the scenario presets compiled into the binary.
pub const PRESET_NAMES: [&str; 5] = [
    "single-target",
    "two-target",
    "extended-bike",
    "jcr-indoor",
    "paper-scale",
];

/// Source text of a named preset, if it exists.
pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "single-target" => Some(include_str!("../presets/single-target.toml")),
        "two-target" => Some(include_str!("../presets/two-target.toml")),
        "extended-bike" => Some(include_str!("../presets/extended-bike.toml")),
        "jcr-indoor" => Some(include_str!("../presets/jcr-indoor.toml")),
        "paper-scale" => Some(include_str!("../presets/paper-scale.toml")),
        _ => None,
    }
}

fn default_one_u32() -> u32 {
    1
}
fn default_preamble() -> f64 {
    1.0
}
fn default_matrix_mode() -> String {
    "circulant".into()
}
fn default_rolloff() -> f64 {
    0.25
}
fn default_half_width() -> usize {
    8
}
fn default_rcs() -> f64 {
    0.0
}
fn default_kind() -> String {
    "target".into()
}
fn default_exponent() -> f64 {
    2.0
}
fn default_loss_factor() -> f64 {
    1.0
}
fn default_gain() -> f64 {
    1.0
}
fn default_methods() -> Vec<String> {
    vec!["traditional".into(), "gamp".into()]
}
fn default_reference() -> String {
    "ground-truth".into()
}
fn default_reference_snr() -> f64 {
    30.0
}

/// Top-level scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioFile {
    /// Label copied into every result row and artifact name.
    pub scene_id: String,
    /// Root of all seed derivations in this run.
    pub root_seed: u64,
    /// Default artifact directory; overridable by `--out` and the output
    /// root environment variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub frame: FrameSection,
    pub geometry: GeometrySection,
    pub grid: GridSection,
    #[serde(default)]
    pub pathloss: PathLossSection,
    pub sweep: SweepSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    pub scene: SceneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FrameSection {
    /// Training sequence length N.
    pub sequence_length: usize,
    /// Zadoff-Chu root, coprime with N.
    pub zc_root: u64,
    /// Coherent repetitions of the sequence per block.
    #[serde(default = "default_one_u32")]
    pub repetitions: u32,
    pub bandwidth_hz: f64,
    pub wavelength_m: f64,
    pub coherent_interval_s: f64,
    /// Fraction of the coherent interval spent on the preamble.
    #[serde(default = "default_preamble")]
    pub preamble_fraction: f64,
    /// Measurement matrix construction: "circulant" or "dft".
    #[serde(default = "default_matrix_mode")]
    pub matrix_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GeometrySection {
    /// Antenna count M.
    pub num_elements: usize,
    /// Element spacing d₀; defaults to half the carrier wavelength.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridSection {
    /// Number of range bins K. Give either this or `max-delay-s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_bins: Option<usize>,
    /// Delay window τ_max in seconds; K = ⌈τ_max · W⌉.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_delay_s: Option<f64>,
    #[serde(default)]
    pub pulse: PulseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PulseSection {
    /// "raised-cosine" or "nyquist-sinc".
    pub shape: String,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
    #[serde(default = "default_half_width")]
    pub half_width: usize,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            shape: "raised-cosine".into(),
            rolloff: default_rolloff(),
            half_width: default_half_width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SceneSection {
    /// Append the default residual TX→RX leakage term (20 dB above the
    /// strongest target, at the minimum resolvable delay, broadside).
    #[serde(default)]
    pub auto_self_interference: bool,
    pub scatterers: Vec<ScattererSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScattererSection {
    /// "target", "self-interference", or "comm-path".
    #[serde(default = "default_kind")]
    pub kind: String,
    pub distance_m: f64,
    /// Physical angle of arrival in degrees, |angle| ≤ 90.
    #[serde(default)]
    pub angle_deg: f64,
    #[serde(default = "default_rcs")]
    pub rcs_dbsm: f64,
    /// Linear channel power bypassing the path-loss law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_override: Option<f64>,
    /// Fixed coefficient phase; unset phases are drawn from the root seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PathLossSection {
    #[serde(default)]
    pub comm: PathLossLawSection,
    #[serde(default)]
    pub radar: PathLossLawSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PathLossLawSection {
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_loss_factor")]
    pub loss_factor: f64,
    #[serde(default)]
    pub two_way: bool,
    #[serde(default)]
    pub rx_gain: RxGainSection,
}

impl Default for PathLossLawSection {
    fn default() -> Self {
        Self {
            exponent: default_exponent(),
            loss_factor: default_loss_factor(),
            two_way: false,
            rx_gain: RxGainSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RxGainSection {
    /// "uniform" or "cosine-lobe".
    pub shape: String,
    #[serde(default = "default_gain")]
    pub gain: f64,
    #[serde(default = "default_gain")]
    pub peak: f64,
    #[serde(default = "default_exponent")]
    pub order: f64,
}

impl Default for RxGainSection {
    fn default() -> Self {
        Self {
            shape: "uniform".into(),
            gain: default_gain(),
            peak: default_gain(),
            order: default_exponent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepSection {
    pub snr_points_db: Vec<f64>,
    /// Integers 1..=12 and/or the string "infinite".
    pub bit_depths: Vec<BitDepth>,
    pub seeds_per_point: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// "ground-truth" or "high-snr-twelve-bit".
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default = "default_reference_snr")]
    pub reference_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EstimatorSection {
    #[serde(default)]
    pub gamp: GampSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GampSection {
    pub max_iterations: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub damping: Option<f64>,
    /// "bg" or "gm".
    pub prior: Option<String>,
    /// Mixture components for the "gm" prior (default 3).
    pub components: Option<usize>,
    pub em_enabled: Option<bool>,
    pub em_warmup: Option<usize>,
    /// "quantized" or "matched-filtered".
    pub input_domain: Option<String>,
}

/// Everything a command needs, converted and validated.
pub struct Realized {
    pub scenario: ScenarioFile,
    pub frame: FrameConfig,
    pub geometry: ArrayGeometry,
    pub grid: GridSpec,
    pub scene: Scene,
    pub pathloss: PathLossModel,
    pub channel: RangeAngleChannel,
    pub op: SystemOperator,
    pub sweep: SweepConfig,
}

impl ScenarioFile {
    /// Parse a scenario document; unknown keys anywhere are errors.
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let scenario: ScenarioFile = toml::from_str(text)?;
        Ok(scenario)
    }

    /// Load from a path, or fall back to a compiled-in preset when the
    /// argument names one and no such file exists.
    pub fn load(arg: &str) -> anyhow::Result<Self> {
        let path = Path::new(arg);
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario {arg}"))?;
            return Self::from_toml(&text).with_context(|| format!("parsing scenario {arg}"));
        }
        if let Some(text) = preset_text(arg) {
            return Self::from_toml(text).with_context(|| format!("parsing preset {arg}"));
        }
        bail!(
            "scenario {arg:?} is neither a file nor a preset (presets: {})",
            PRESET_NAMES.join(", ")
        )
    }

    /// Canonical serialization: parsed content re-emitted with defaults
    /// materialized, independent of source formatting and key order.
    pub fn canonical_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn parse_kind(kind: &str) -> anyhow::Result<ScattererKind> {
        match kind {
            "target" => Ok(ScattererKind::Target),
            "self-interference" => Ok(ScattererKind::SelfInterference),
            "comm-path" => Ok(ScattererKind::CommPath),
            other => bail!("unknown scatterer kind {other:?}"),
        }
    }

    fn parse_rx_gain(section: &RxGainSection) -> anyhow::Result<RxGainPattern> {
        match section.shape.as_str() {
            "uniform" => Ok(RxGainPattern::Uniform { gain: section.gain }),
            "cosine-lobe" => Ok(RxGainPattern::CosineLobe {
                peak: section.peak,
                order: section.order,
            }),
            other => bail!("unknown rx-gain shape {other:?}"),
        }
    }

    fn parse_pulse(section: &PulseSection) -> anyhow::Result<PulseShape> {
        match section.shape.as_str() {
            "raised-cosine" => Ok(PulseShape::RaisedCosine {
                rolloff: section.rolloff,
                half_width: section.half_width,
            }),
            "nyquist-sinc" => Ok(PulseShape::NyquistSinc {
                half_width: section.half_width,
            }),
            other => bail!("unknown pulse shape {other:?}"),
        }
    }

    fn parse_methods(names: &[String]) -> anyhow::Result<Vec<EstimatorMethod>> {
        if names.is_empty() {
            bail!("sweep.methods must not be empty");
        }
        names
            .iter()
            .map(|n| jcrsim::io::parse_method(n).map_err(|e| anyhow!(e)))
            .collect()
    }

    fn parse_reference(name: &str) -> anyhow::Result<NmseReference> {
        match name {
            "ground-truth" => Ok(NmseReference::GroundTruth),
            "high-snr-twelve-bit" => Ok(NmseReference::HighSnrTwelveBit),
            other => bail!("unknown sweep reference {other:?}"),
        }
    }

    /// Solver settings from the estimator section (noise variance is
    /// filled in per cell at run time).
    pub fn gamp_config(&self) -> anyhow::Result<GampConfig> {
        let section = &self.scenario_gamp();
        let mut config = GampConfig::default();
        if let Some(v) = section.max_iterations {
            config.max_iterations = v;
        }
        if let Some(v) = section.convergence_tol {
            config.convergence_tol = v;
        }
        if let Some(v) = section.damping {
            config.damping = v;
        }
        if let Some(v) = section.em_enabled {
            config.em_enabled = v;
        }
        if let Some(v) = section.em_warmup {
            config.em_warmup = v;
        }
        match section.prior.as_deref() {
            None | Some("bg") => config.prior = PriorModel::BernoulliGaussian,
            Some("gm") => {
                config.prior = PriorModel::GaussianMixture {
                    components: section.components.unwrap_or(3),
                }
            }
            Some(other) => bail!("unknown prior {other:?}; use \"bg\" or \"gm\""),
        }
        if section.prior.as_deref() != Some("gm") && section.components.is_some() {
            bail!("estimator.gamp.components needs prior = \"gm\"");
        }
        match section.input_domain.as_deref() {
            None | Some("quantized") => config.input_domain = InputDomain::Quantized,
            Some("matched-filtered") => config.input_domain = InputDomain::MatchedFiltered,
            Some(other) => bail!("unknown input domain {other:?}"),
        }
        config.validate().map_err(|e| anyhow!(e))?;
        Ok(config)
    }

    fn scenario_gamp(&self) -> GampSection {
        self.estimator.gamp.clone()
    }

    /// Number of range bins after resolving `range-bins` / `max-delay-s`.
    pub fn range_bins(&self) -> anyhow::Result<usize> {
        match (self.grid.range_bins, self.grid.max_delay_s) {
            (Some(k), None) => Ok(k),
            (None, Some(tau)) => {
                if !(tau > 0.0) {
                    bail!("grid.max-delay-s must be positive");
                }
                Ok((tau * self.frame.bandwidth_hz).ceil() as usize)
            }
            (Some(_), Some(_)) => {
                bail!("grid: give either range-bins or max-delay-s, not both")
            }
            (None, None) => bail!("grid: one of range-bins or max-delay-s is required"),
        }
    }

    /// Convert to runtime objects, drawing unresolved scatterer phases
    /// from the root seed.
    pub fn realize(&self) -> anyhow::Result<Realized> {
        let frame = FrameConfig {
            preamble_fraction: self.frame.preamble_fraction,
            coherent_interval: self.frame.coherent_interval_s,
            bandwidth: self.frame.bandwidth_hz,
            carrier_wavelength: self.frame.wavelength_m,
        };
        frame.validate().map_err(|e| anyhow!("frame: {e}"))?;

        let geometry = ArrayGeometry {
            num_elements: self.geometry.num_elements,
            spacing: self
                .geometry
                .spacing_m
                .unwrap_or(self.frame.wavelength_m / 2.0),
            wavelength: self.frame.wavelength_m,
        };
        geometry.validate().map_err(|e| anyhow!("geometry: {e}"))?;

        let grid = GridSpec {
            range_bins: self.range_bins()?,
            pulse: Self::parse_pulse(&self.grid.pulse)?,
        };

        let pathloss = PathLossModel {
            comm: PathLossParams {
                exponent: self.pathloss.comm.exponent,
                loss_factor: self.pathloss.comm.loss_factor,
                rx_gain: Self::parse_rx_gain(&self.pathloss.comm.rx_gain)?,
                two_way: self.pathloss.comm.two_way,
            },
            radar: PathLossParams {
                exponent: self.pathloss.radar.exponent,
                loss_factor: self.pathloss.radar.loss_factor,
                rx_gain: Self::parse_rx_gain(&self.pathloss.radar.rx_gain)?,
                two_way: self.pathloss.radar.two_way,
            },
        };
        pathloss.comm.validate().map_err(|e| anyhow!("pathloss.comm: {e}"))?;
        pathloss
            .radar
            .validate()
            .map_err(|e| anyhow!("pathloss.radar: {e}"))?;

        let mut scene = Scene::default();
        for (i, s) in self.scene.scatterers.iter().enumerate() {
            let angle = s.angle_deg.to_radians();
            scene.scatterers.push(Scatterer {
                distance: s.distance_m,
                physical_aoa: angle,
                rcs_dbsm: s.rcs_dbsm,
                power_override: s.power_override,
                phase: s.phase_rad,
                kind: Self::parse_kind(&s.kind)
                    .with_context(|| format!("scene.scatterers[{i}]"))?,
            });
        }
        if self.scene.auto_self_interference {
            scene
                .add_default_self_interference(&frame, &pathloss)
                .map_err(|e| anyhow!("scene: {e}"))?;
        }
        // Phase draw on its own seed path (cells use [0, ..], the sweep
        // reference uses [1]).
        scene.resolve_phases(derive_seed(self.root_seed, &[2]));
        scene.validate().map_err(|e| anyhow!("scene: {e}"))?;

        let channel = discretize_scene(&scene, &geometry, &frame, &pathloss, &grid)
            .map_err(|e| anyhow!("scene: {e}"))?;

        let sequence =
            TrainingSequence::generate_zc(self.frame.sequence_length, self.frame.zc_root)
                .map_err(|e| anyhow!("frame: {e}"))?;
        let mode = match self.frame.matrix_mode.as_str() {
            "circulant" => MatrixMode::Circulant,
            "dft" => MatrixMode::Dft,
            other => bail!("unknown matrix mode {other:?}"),
        };
        let matrix = build_measurement_matrix(&sequence, grid.range_bins, mode)
            .map_err(|e| anyhow!("frame/grid: {e}"))?;
        let op = SystemOperator::new(geometry.num_elements, matrix)
            .map_err(|e| anyhow!("operator: {e}"))?;

        let sweep_grid = SweepGrid {
            snr_points_db: self.sweep.snr_points_db.clone(),
            bit_depths: self.sweep.bit_depths.clone(),
            seeds_per_point: self.sweep.seeds_per_point,
        };
        let sweep = SweepConfig {
            scene_id: self.scene_id.clone(),
            grid: sweep_grid,
            methods: Self::parse_methods(&self.sweep.methods)?,
            root_seed: self.root_seed,
            reference: Self::parse_reference(&self.sweep.reference)?,
            gamp: self.gamp_config()?,
            repetitions: self.frame.repetitions,
            reference_snr_db: self.sweep.reference_snr_db,
        };
        sweep.validate().map_err(|e| anyhow!("sweep: {e}"))?;

        Ok(Realized {
            scenario: self.clone(),
            frame,
            geometry,
            grid,
            scene,
            pathloss,
            channel,
            op,
            sweep,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"
scene-id = "unit"
root-seed = 5

[frame]
sequence-length = 64
zc-root = 1
bandwidth-hz = 1.536e9
wavelength-m = 5e-3
coherent-interval-s = 1e-3

[geometry]
num-elements = 8

[grid]
range-bins = 16

[sweep]
snr-points-db = [0.0]
bit-depths = [2, "infinite"]
seeds-per-point = 1

[[scene.scatterers]]
distance-m = 1.0
angle-deg = 10.0
"#
        .to_string()
    }

    #[test]
    fn minimal_scenario_realizes() {
        let s = ScenarioFile::from_toml(&minimal()).unwrap();
        let r = s.realize().unwrap();
        assert_eq!(r.channel.num_angle_bins(), 8);
        assert_eq!(r.channel.num_range_bins(), 16);
        assert_eq!(r.op.sequence_len(), 64);
        assert_eq!(r.sweep.methods.len(), 2);
        assert_eq!(r.geometry.spacing, 2.5e-3);
        // Phases were drawn deterministically.
        assert!(r.scene.scatterers[0].phase.is_some());
        let r2 = ScenarioFile::from_toml(&minimal()).unwrap().realize().unwrap();
        assert_eq!(
            r.scene.scatterers[0].phase,
            r2.scene.scatterers[0].phase
        );
    }

    #[test]
    fn unknown_keys_are_rejected_everywhere() {
        let cases = [
            ("scene-id = \"unit\"", "scene-idd = \"unit\""),
            ("bandwidth-hz = 1.536e9", "bandwidth = 1.536e9"),
            ("distance-m = 1.0", "distance = 1.0"),
            ("range-bins = 16", "range-bins = 16\nextra = 1"),
        ];
        for (good, bad) in cases {
            let text = minimal().replace(good, bad);
            let err = ScenarioFile::from_toml(&text).unwrap_err().to_string();
            assert!(
                err.contains("unknown field") || err.contains("missing field"),
                "replacing {good:?}: {err}"
            );
        }
    }

    #[test]
    fn mutually_exclusive_grid_keys() {
        let both = minimal().replace("range-bins = 16", "range-bins = 16\nmax-delay-s = 1e-8");
        let s = ScenarioFile::from_toml(&both).unwrap();
        assert!(s.realize().is_err());
        let neither = minimal().replace("range-bins = 16", "");
        let s = ScenarioFile::from_toml(&neither).unwrap();
        assert!(s.realize().is_err());
        // K from the delay window: ⌈2.083e-8 · 1.536e9⌉ = 32.
        let tau = minimal().replace("range-bins = 16", "max-delay-s = 2.083e-8");
        let s = ScenarioFile::from_toml(&tau).unwrap();
        assert_eq!(s.range_bins().unwrap(), 32);
    }

    #[test]
    fn presets_all_parse_and_realize() {
        for name in PRESET_NAMES {
            let s = ScenarioFile::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.scene_id, name, "preset id should match its name");
            let r = s.realize().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(r.channel.x().iter().any(|c| c.norm_sqr() > 0.0));
        }
        assert!(ScenarioFile::load("no-such-preset").is_err());
    }

    #[test]
    fn canonical_form_ignores_formatting_not_semantics() {
        let a = ScenarioFile::from_toml(&minimal()).unwrap();
        // Same content, different whitespace/comments and key order.
        let shuffled = minimal()
            .replace(
                "[frame]\nsequence-length = 64\nzc-root = 1",
                "# comment\n[frame]\n\nzc-root = 1\nsequence-length   =   64",
            )
            .replace("scene-id = \"unit\"\nroot-seed = 5", "root-seed = 5\nscene-id = \"unit\"");
        let b = ScenarioFile::from_toml(&shuffled).unwrap();
        assert_eq!(a.canonical_toml().unwrap(), b.canonical_toml().unwrap());
        // A semantic change shows up.
        let c = ScenarioFile::from_toml(&minimal().replace("root-seed = 5", "root-seed = 6"))
            .unwrap();
        assert_ne!(a.canonical_toml().unwrap(), c.canonical_toml().unwrap());
        // Materializing a default explicitly is not a semantic change.
        let d = ScenarioFile::from_toml(
            &minimal().replace("zc-root = 1", "zc-root = 1\nrepetitions = 1"),
        )
        .unwrap();
        assert_eq!(a.canonical_toml().unwrap(), d.canonical_toml().unwrap());
    }

    #[test]
    fn gamp_section_maps_to_solver_config() {
        let text = minimal().replace(
            "[sweep]",
            "[estimator.gamp]\nprior = \"gm\"\ncomponents = 3\ndamping = 0.8\n\n[sweep]",
        );
        let s = ScenarioFile::from_toml(&text).unwrap();
        let config = s.gamp_config().unwrap();
        assert_eq!(
            config.prior,
            PriorModel::GaussianMixture { components: 3 }
        );
        assert_eq!(config.damping, 0.8);

        let bad = minimal().replace(
            "[sweep]",
            "[estimator.gamp]\ncomponents = 3\n\n[sweep]",
        );
        assert!(ScenarioFile::from_toml(&bad).unwrap().gamp_config().is_err());
    }

    fn realize_err(s: &ScenarioFile) -> String {
        match s.realize() {
            Err(e) => format!("{e:#}"),
            Ok(_) => panic!("expected realize to fail"),
        }
    }

    #[test]
    fn bad_physics_is_rejected_with_field_context() {
        let s = ScenarioFile::from_toml(
            &minimal().replace("num-elements = 8", "num-elements = 8\nspacing-m = 5e-3"),
        )
        .unwrap();
        let err = realize_err(&s);
        assert!(err.contains("geometry"), "{err}");

        let s = ScenarioFile::from_toml(
            &minimal().replace("distance-m = 1.0", "distance-m = 100.0"),
        )
        .unwrap();
        let err = realize_err(&s);
        assert!(err.contains("scene"), "{err}");
    }
}
