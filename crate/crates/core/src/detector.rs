//! Live-versus-playback decision from cross-array consistency.
//!
//! Two residuals are evaluated per sample:
//!
//! * **flow without motion**: `Q` wherever the inertial speed is below
//!   `speed_eps`. A rigid scene at finite distance cannot rotate in the optic
//!   array of an observer that is not moving, since `Q = V |sin α| / D`.
//! * **scale inconsistency**: the object position recovered from the eq3
//!   distance, `displacement - d_eq3 · bearing`, must stay fixed for a
//!   stationary object. Over a sliding window the RMS spread of that recovered
//!   position, divided by the mean eq3 distance, is the residual.
//!
//! The verdict is `simulated` when either residual exceeds its threshold on at
//! least `verdict_fraction` of the samples it is defined on, `indeterminate`
//! when fewer than `min_active_samples` samples carry any motion or flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::estimate_eq3;
use crate::kinematics::Vec3;
use crate::observables::{InertialStream, OpticalStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// rad/s
    pub flow_residual_threshold: f64,
    /// dimensionless (spread / mean distance)
    pub scale_residual_threshold: f64,
    /// Sliding window length (s).
    pub window_s: f64,
    pub verdict_fraction: f64,
    pub min_active_samples: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            flow_residual_threshold: 1e-3,
            scale_residual_threshold: 0.05,
            window_s: 0.5,
            verdict_fraction: 0.10,
            min_active_samples: 3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.flow_residual_threshold.is_finite()
            && self.flow_residual_threshold >= 0.0
            && self.scale_residual_threshold.is_finite()
            && self.scale_residual_threshold >= 0.0
            && self.window_s.is_finite()
            && self.window_s > 0.0
            && self.verdict_fraction.is_finite()
            && (0.0..=1.0).contains(&self.verdict_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid detector settings: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Live,
    Simulated,
    Indeterminate,
}

pub const RULE_FLOW_WITHOUT_MOTION: &str = "flow-without-motion";
pub const RULE_SCALE_INCONSISTENCY: &str = "scale-inconsistency";
pub const RULE_NONE: &str = "none";
pub const RULE_TOO_FEW_SAMPLES: &str = "too-few-active-samples";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    pub rule_fired: String,
    pub config: DetectorConfig,
    pub speed_eps: f64,
    pub rate_eps: f64,
    pub active_samples: usize,
    /// Share of all samples whose flow residual exceeds its threshold.
    pub flow_exceed_fraction: f64,
    /// Share of defined scale residuals exceeding their threshold.
    pub scale_exceed_fraction: Option<f64>,
    pub flow_residual: Vec<f64>,
    pub scale_residual: Vec<Option<f64>>,
}

pub fn detect(
    optics: &OpticalStream,
    inertial: &InertialStream,
    config: &DetectorConfig,
) -> Result<DetectionReport> {
    config.validate()?;
    optics
        .grid
        .check_aligned(&inertial.grid, "optical vs inertial stream")?;
    let n = optics.grid.n_samples();
    let speed_eps = optics.thresholds.speed_eps;
    let rate_eps = optics.thresholds.rate_eps;

    let mut active_samples = 0;
    let flow_residual: Vec<f64> = inertial
        .speed_v
        .iter()
        .zip(&optics.q_norm)
        .map(|(&v, &q)| {
            let moving = v >= speed_eps;
            let flowing = q >= rate_eps;
            if moving || flowing {
                active_samples += 1;
            }
            if !moving && flowing {
                q
            } else {
                0.0
            }
        })
        .collect();

    let d_eq3 = estimate_eq3(optics, inertial)?;
    let recovered: Vec<Option<(Vec3, f64)>> = d_eq3
        .iter()
        .enumerate()
        .map(|(k, d)| d.map(|d| (inertial.displacement[k] - optics.bearing[k] * d, d)))
        .collect();
    let half = ((config.window_s * optics.grid.sample_rate()) / 2.0).round() as usize;
    let scale_residual: Vec<Option<f64>> = (0..n)
        .map(|k| {
            let window: Vec<(Vec3, f64)> = recovered[k.saturating_sub(half)..(k + half + 1).min(n)]
                .iter()
                .flatten()
                .copied()
                .collect();
            if window.len() < 3 {
                return None;
            }
            let m = window.len() as f64;
            let mean_d = window.iter().map(|w| w.1).sum::<f64>() / m;
            if mean_d.is_nan() || mean_d <= 0.0 {
                return None;
            }
            let centroid = window.iter().fold(Vec3::zeros(), |acc, w| acc + w.0) / m;
            let spread = (window
                .iter()
                .map(|w| (w.0 - centroid).norm_squared())
                .sum::<f64>()
                / m)
                .sqrt();
            Some(spread / mean_d)
        })
        .collect();

    let flow_exceed_fraction = flow_residual
        .iter()
        .filter(|r| **r > config.flow_residual_threshold)
        .count() as f64
        / n as f64;
    let defined: Vec<f64> = scale_residual.iter().flatten().copied().collect();
    let scale_exceed_fraction = (!defined.is_empty()).then(|| {
        defined
            .iter()
            .filter(|r| **r > config.scale_residual_threshold)
            .count() as f64
            / defined.len() as f64
    });

    let (verdict, rule) = if active_samples < config.min_active_samples {
        (Verdict::Indeterminate, RULE_TOO_FEW_SAMPLES)
    } else if flow_exceed_fraction > 0.0 && flow_exceed_fraction >= config.verdict_fraction {
        (Verdict::Simulated, RULE_FLOW_WITHOUT_MOTION)
    } else if scale_exceed_fraction.is_some_and(|f| f > 0.0 && f >= config.verdict_fraction) {
        (Verdict::Simulated, RULE_SCALE_INCONSISTENCY)
    } else {
        (Verdict::Live, RULE_NONE)
    };

    Ok(DetectionReport {
        verdict,
        rule_fired: rule.to_string(),
        config: *config,
        speed_eps,
        rate_eps,
        active_samples,
        flow_exceed_fraction,
        scale_exceed_fraction,
        flow_residual,
        scale_residual,
    })
}
