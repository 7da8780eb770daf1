//! Run configuration read from TOML.
//!
//! Keys carry their units (`duration_s`, `speed_mps`, ...). Unknown keys and
//! keys that do not apply to the chosen scenario kind are errors.
//!
//! ```toml
//! seed = 7
//!
//! [scenario]
//! kind = "sway3d"            # rectilinear | planar_sway | sway3d | tangential_orbit | custom_samples
//! duration_s = 10.0
//! sample_rate_hz = 100.0
//! noise_sigma_m = 0.0
//! center_m = [0.0, 0.0, 0.0]
//! amplitude_m = [0.06, 0.04, 0.03]
//! frequency_hz = [0.3, 0.7, 1.1]
//! phase_rad = [0.0, 0.5, 1.0]
//!
//! [object]
//! position_m = [0.1, 0.8, -0.05]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::DEFAULT_TOLERANCE;
use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::generators::{ScenarioConfig, ScenarioKind, SwayParams};
use crate::kinematics::{ScenePoint, Vec3, DEFAULT_SAMPLE_RATE};
use crate::observables::{default_gravity, ProjectionConfig, RateSource, ValidityThresholds};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    scenario: RawScenario,
    object: RawObject,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    observables: RawObservables,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    duration_s: Option<f64>,
    sample_rate_hz: Option<f64>,
    t0_s: Option<f64>,
    #[serde(default)]
    noise_sigma_m: f64,
    start_m: Option<[f64; 3]>,
    speed_mps: Option<f64>,
    direction: Option<[f64; 3]>,
    center_m: Option<[f64; 3]>,
    amplitude_m: Option<Vec<f64>>,
    frequency_hz: Option<Vec<f64>>,
    phase_rad: Option<Vec<f64>>,
    orbit_radius_m: Option<f64>,
    start_angle_rad: Option<f64>,
    samples_csv: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    position_m: [f64; 3],
    #[serde(default = "default_label")]
    label: String,
}

fn default_label() -> String {
    "object".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    #[serde(default = "default_tolerance")]
    tolerance: f64,
    #[serde(default = "default_reach")]
    reach_threshold_m: f64,
}

impl Default for RawAnalysis {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            reach_threshold_m: default_reach(),
        }
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_reach() -> f64 {
    0.6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservables {
    speed_eps_mps: Option<f64>,
    rate_eps_radps: Option<f64>,
    planarity_tol: Option<f64>,
    #[serde(default)]
    rate_source: RateSource,
    gravity_mps2: Option<[f64; 3]>,
}

impl Default for RawObservables {
    fn default() -> Self {
        Self {
            speed_eps_mps: None,
            rate_eps_radps: None,
            planarity_tol: None,
            rate_source: RateSource::Auto,
            gravity_mps2: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    flow_residual_threshold_radps: Option<f64>,
    scale_residual_threshold: Option<f64>,
    window_s: Option<f64>,
    verdict_fraction: Option<f64>,
    min_active_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub tolerance: f64,
    pub reach_threshold: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            reach_threshold: default_reach(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub analysis: AnalysisSettings,
    pub projection: ProjectionConfig,
    pub gravity: Vec3,
    pub detector: DetectorConfig,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn object(&self) -> &ScenePoint {
        &self.scenario.object
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses a config; relative paths inside it resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let object = ScenePoint::new(Vec3::from(raw.object.position_m), raw.object.label)?;
        let scenario = build_scenario(raw.scenario, object, raw.seed, base_dir)?;
        scenario.validate()?;

        let defaults = ValidityThresholds::default();
        let projection = ProjectionConfig {
            thresholds: ValidityThresholds {
                speed_eps: raw.observables.speed_eps_mps.unwrap_or(defaults.speed_eps),
                rate_eps: raw.observables.rate_eps_radps.unwrap_or(defaults.rate_eps),
                planarity_tol: raw
                    .observables
                    .planarity_tol
                    .unwrap_or(defaults.planarity_tol),
            },
            rate_source: raw.observables.rate_source,
        };
        let th = projection.thresholds;
        for (key, v) in [
            ("observables.speed_eps_mps", th.speed_eps),
            ("observables.rate_eps_radps", th.rate_eps),
            ("observables.planarity_tol", th.planarity_tol),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "key `{key}` must be finite and >= 0"
                )));
            }
        }
        let gravity = raw
            .observables
            .gravity_mps2
            .map(Vec3::from)
            .unwrap_or_else(default_gravity);
        if !gravity.iter().all(|c| c.is_finite()) {
            return Err(Error::Config(
                "key `observables.gravity_mps2` must be finite".into(),
            ));
        }

        let d = DetectorConfig::default();
        let detector = DetectorConfig {
            flow_residual_threshold: raw
                .detector
                .flow_residual_threshold_radps
                .unwrap_or(d.flow_residual_threshold),
            scale_residual_threshold: raw
                .detector
                .scale_residual_threshold
                .unwrap_or(d.scale_residual_threshold),
            window_s: raw.detector.window_s.unwrap_or(d.window_s),
            verdict_fraction: raw.detector.verdict_fraction.unwrap_or(d.verdict_fraction),
            min_active_samples: raw
                .detector
                .min_active_samples
                .unwrap_or(d.min_active_samples),
        };
        detector.validate()?;

        let analysis = AnalysisSettings {
            tolerance: raw.analysis.tolerance,
            reach_threshold: raw.analysis.reach_threshold_m,
        };
        if !(analysis.tolerance.is_finite() && analysis.tolerance >= 0.0) {
            return Err(Error::Config(
                "key `analysis.tolerance` must be finite and >= 0".into(),
            ));
        }
        if !(analysis.reach_threshold.is_finite() && analysis.reach_threshold > 0.0) {
            return Err(Error::Config(
                "key `analysis.reach_threshold_m` must be finite and > 0".into(),
            ));
        }

        Ok(Self {
            seed: raw.seed,
            scenario,
            analysis,
            projection,
            gravity,
            detector,
            output_dir: raw.output.dir.map(|d| base_dir.join(d)),
        })
    }
}

fn required<T>(value: Option<T>, key: &str, kind: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing key `scenario.{key}` for kind `{kind}`")))
}

fn axes<const N: usize>(
    value: Option<Vec<f64>>,
    key: &str,
    kind: &str,
    default: f64,
) -> Result<[f64; N]> {
    match value {
        None => Ok([default; N]),
        Some(v) => v.try_into().map_err(|v: Vec<f64>| {
            Error::Config(format!(
                "key `scenario.{key}` needs {N} values for kind `{kind}`, got {}",
                v.len()
            ))
        }),
    }
}

fn build_scenario(
    raw: RawScenario,
    object: ScenePoint,
    seed: u64,
    base_dir: &Path,
) -> Result<ScenarioConfig> {
    let kind_name = raw.kind.as_str();
    let present = [
        ("duration_s", raw.duration_s.is_some()),
        ("sample_rate_hz", raw.sample_rate_hz.is_some()),
        ("start_m", raw.start_m.is_some()),
        ("speed_mps", raw.speed_mps.is_some()),
        ("direction", raw.direction.is_some()),
        ("center_m", raw.center_m.is_some()),
        ("amplitude_m", raw.amplitude_m.is_some()),
        ("frequency_hz", raw.frequency_hz.is_some()),
        ("phase_rad", raw.phase_rad.is_some()),
        ("orbit_radius_m", raw.orbit_radius_m.is_some()),
        ("start_angle_rad", raw.start_angle_rad.is_some()),
        ("samples_csv", raw.samples_csv.is_some()),
    ];
    let allowed: &[&str] = match kind_name {
        "rectilinear" => &["duration_s", "sample_rate_hz", "start_m", "speed_mps", "direction"],
        "planar_sway" | "sway3d" => &[
            "duration_s",
            "sample_rate_hz",
            "center_m",
            "amplitude_m",
            "frequency_hz",
            "phase_rad",
        ],
        "tangential_orbit" => &[
            "duration_s",
            "sample_rate_hz",
            "orbit_radius_m",
            "speed_mps",
            "start_angle_rad",
        ],
        "custom_samples" => &["samples_csv"],
        other => {
            return Err(Error::Config(format!(
                "key `scenario.kind` has unknown value `{other}` (expected rectilinear, planar_sway, sway3d, tangential_orbit or custom_samples)"
            )))
        }
    };
    if let Some((key, _)) = present
        .iter()
        .find(|(key, set)| *set && !allowed.contains(key))
    {
        return Err(Error::Config(format!(
            "key `scenario.{key}` does not apply to kind `{kind_name}`"
        )));
    }

    let kind = match kind_name {
        "rectilinear" => ScenarioKind::Rectilinear {
            start: Vec3::from(raw.start_m.unwrap_or([0.0; 3])),
            speed: required(raw.speed_mps, "speed_mps", kind_name)?,
            direction: Vec3::from(raw.direction.unwrap_or([1.0, 0.0, 0.0])),
        },
        "planar_sway" => ScenarioKind::PlanarSway(SwayParams {
            center: Vec3::from(raw.center_m.unwrap_or([0.0; 3])),
            amplitude: axes(
                Some(required(raw.amplitude_m, "amplitude_m", kind_name)?),
                "amplitude_m",
                kind_name,
                0.0,
            )?,
            frequency: axes(
                Some(required(raw.frequency_hz, "frequency_hz", kind_name)?),
                "frequency_hz",
                kind_name,
                0.0,
            )?,
            phase: axes(raw.phase_rad, "phase_rad", kind_name, 0.0)?,
        }),
        "sway3d" => ScenarioKind::Sway3d(SwayParams {
            center: Vec3::from(raw.center_m.unwrap_or([0.0; 3])),
            amplitude: axes(
                Some(required(raw.amplitude_m, "amplitude_m", kind_name)?),
                "amplitude_m",
                kind_name,
                0.0,
            )?,
            frequency: axes(
                Some(required(raw.frequency_hz, "frequency_hz", kind_name)?),
                "frequency_hz",
                kind_name,
                0.0,
            )?,
            phase: axes(raw.phase_rad, "phase_rad", kind_name, 0.0)?,
        }),
        "tangential_orbit" => ScenarioKind::TangentialOrbit {
            radius: required(raw.orbit_radius_m, "orbit_radius_m", kind_name)?,
            speed: required(raw.speed_mps, "speed_mps", kind_name)?,
            start_angle: raw.start_angle_rad.unwrap_or(0.0),
        },
        _ => {
            let path = base_dir.join(required(raw.samples_csv, "samples_csv", kind_name)?);
            let track = crate::io::read_track_csv(&path)?;
            let grid = *track.grid();
            let mut config = ScenarioConfig::new(
                ScenarioKind::CustomSamples {
                    positions: track.position().to_vec(),
                },
                grid.duration(),
                object,
            );
            config.sample_rate = grid.sample_rate();
            config.t0 = grid.t0();
            config.noise_sigma = raw.noise_sigma_m;
            config.rng_seed = seed;
            return Ok(config);
        }
    };
    let mut config = ScenarioConfig::new(
        kind,
        required(raw.duration_s, "duration_s", kind_name)?,
        object,
    );
    config.sample_rate = raw.sample_rate_hz.unwrap_or(DEFAULT_SAMPLE_RATE);
    config.t0 = raw.t0_s.unwrap_or(0.0);
    config.noise_sigma = raw.noise_sigma_m;
    config.rng_seed = seed;
    Ok(config)
}
