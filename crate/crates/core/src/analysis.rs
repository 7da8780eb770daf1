//! Accuracy statistics, reach judgments, plot-ready tables and movement
//! descriptors computed from distance estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{DistanceEstimateSeries, Equation};
use crate::kinematics::KinematicTrack;
use crate::observables::{InertialStream, OpticalStream};

pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationAccuracy {
    pub valid_samples: usize,
    pub valid_fraction: f64,
    /// Share of valid samples with relative error `<= tolerance`; absent when
    /// no sample is valid.
    pub accurate_fraction: Option<f64>,
    pub mean_abs_relative_error: Option<f64>,
}

impl EquationAccuracy {
    pub fn is_empty(&self) -> bool {
        self.valid_samples == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub scenario_id: String,
    pub tolerance: f64,
    pub n_samples: usize,
    pub equations: BTreeMap<Equation, EquationAccuracy>,
}

impl AccuracyReport {
    pub fn get(&self, eq: Equation) -> &EquationAccuracy {
        &self.equations[&eq]
    }

    pub fn accurate_fraction(&self, eq: Equation) -> Option<f64> {
        self.get(eq).accurate_fraction
    }
}

fn relative_error(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs() / truth
}

/// Per-equation share of valid samples whose relative error is within
/// `tolerance`. Denominators are valid samples only; `valid_fraction` reports
/// how many there were.
pub fn accuracy(
    est: &DistanceEstimateSeries,
    tolerance: f64,
    scenario_id: &str,
) -> Result<AccuracyReport> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be finite and >= 0, got {tolerance}"
        )));
    }
    let n = est.len();
    let equations = Equation::ALL
        .iter()
        .map(|&eq| {
            let errors: Vec<f64> = est
                .equation(eq)
                .iter()
                .zip(&est.d_truth)
                .filter_map(|(d, truth)| d.map(|d| relative_error(d, *truth)))
                .collect();
            let valid = errors.len();
            let (accurate, mean) = if valid == 0 {
                (None, None)
            } else {
                let hits = errors.iter().filter(|e| **e <= tolerance).count();
                (
                    Some(hits as f64 / valid as f64),
                    Some(errors.iter().sum::<f64>() / valid as f64),
                )
            };
            (
                eq,
                EquationAccuracy {
                    valid_samples: valid,
                    valid_fraction: valid as f64 / n as f64,
                    accurate_fraction: accurate,
                    mean_abs_relative_error: mean,
                },
            )
        })
        .collect();
    Ok(AccuracyReport {
        scenario_id: scenario_id.to_string(),
        tolerance,
        n_samples: n,
        equations,
    })
}

/// "Within reach" verdicts. A distance equal to the threshold counts as within
/// reach (`D <= threshold`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachJudgment {
    pub reach_threshold: f64,
    pub truth: Vec<bool>,
    pub verdicts: BTreeMap<Equation, Vec<Option<bool>>>,
}

impl ReachJudgment {
    /// Fraction of valid samples where the estimator's verdict matches truth.
    pub fn agreement(&self, eq: Equation) -> Option<f64> {
        let mut valid = 0usize;
        let mut hits = 0usize;
        for (v, t) in self.verdicts[&eq].iter().zip(&self.truth) {
            if let Some(v) = v {
                valid += 1;
                hits += usize::from(v == t);
            }
        }
        (valid > 0).then(|| hits as f64 / valid as f64)
    }
}

pub fn reach_judgment(est: &DistanceEstimateSeries, threshold: f64) -> Result<ReachJudgment> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Config(format!(
            "reach threshold must be finite and > 0, got {threshold}"
        )));
    }
    Ok(ReachJudgment {
        reach_threshold: threshold,
        truth: est.d_truth.iter().map(|d| *d <= threshold).collect(),
        verdicts: Equation::ALL
            .iter()
            .map(|&eq| {
                let v = est
                    .equation(eq)
                    .iter()
                    .map(|d| d.map(|d| d <= threshold))
                    .collect();
                (eq, v)
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    pub position: [f64; 3],
    pub speed_v: f64,
    pub alpha: Option<f64>,
    pub q_norm: f64,
    pub d_truth: f64,
    pub d_eq1: Option<f64>,
    pub d_eq2: Option<f64>,
    pub d_eq3: Option<f64>,
    pub d_eq5: Option<f64>,
}

impl EstimateRow {
    pub fn estimate(&self, eq: Equation) -> Option<f64> {
        match eq {
            Equation::Eq1 => self.d_eq1,
            Equation::Eq2 => self.d_eq2,
            Equation::Eq3 => self.d_eq3,
            Equation::Eq5 => self.d_eq5,
        }
    }
}

/// One row per sample: everything needed to redraw the trajectory, distance
/// and optic/inertial component panels.
pub fn estimate_table(
    est: &DistanceEstimateSeries,
    optics: &OpticalStream,
    inertial: &InertialStream,
) -> Result<Vec<EstimateRow>> {
    est.grid
        .check_aligned(&optics.grid, "estimates vs optics")?;
    est.grid
        .check_aligned(&inertial.grid, "estimates vs inertial")?;
    Ok((0..est.len())
        .map(|k| {
            let p = est.observer_position[k];
            EstimateRow {
                t: est.grid.time(k),
                position: [p.x, p.y, p.z],
                speed_v: inertial.speed_v[k],
                alpha: optics.alpha[k],
                q_norm: optics.q_norm[k],
                d_truth: est.d_truth[k],
                d_eq1: est.d_eq1[k],
                d_eq2: est.d_eq2[k],
                d_eq3: est.d_eq3[k],
                d_eq5: est.d_eq5[k],
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSummary {
    /// Peak-to-peak excursion per axis (m).
    pub amplitude: [f64; 3],
    pub mean_speed: f64,
    pub max_speed: f64,
    pub mean_acceleration: f64,
    pub max_acceleration: f64,
}

/// Extremum of a sampled series, refined by a parabola through the three
/// samples around an interior extremum.
fn refined_extremum(values: &[f64], want_max: bool) -> f64 {
    let better = |a: f64, b: f64| if want_max { a > b } else { a < b };
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if better(v, values[k]) {
            k = i;
        }
    }
    let y = values[k];
    if k == 0 || k + 1 == values.len() {
        return y;
    }
    let (ym, yp) = (values[k - 1], values[k + 1]);
    let curvature = ym - 2.0 * y + yp;
    if curvature == 0.0 || (curvature < 0.0) != want_max {
        return y;
    }
    y - (yp - ym).powi(2) / (8.0 * curvature)
}

pub fn exploration_summary(track: &KinematicTrack) -> ExplorationSummary {
    let amplitude = [0, 1, 2].map(|j| {
        let axis: Vec<f64> = track.position().iter().map(|p| p[j]).collect();
        (refined_extremum(&axis, true) - refined_extremum(&axis, false)).max(0.0)
    });
    let speeds = track.speed();
    let accels: Vec<f64> = track.acceleration().iter().map(|a| a.norm()).collect();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let max = |s: &[f64]| s.iter().copied().fold(0.0, f64::max);
    ExplorationSummary {
        amplitude,
        mean_speed: mean(&speeds),
        max_speed: max(&speeds),
        mean_acceleration: mean(&accels),
        max_acceleration: max(&accels),
    }
}
