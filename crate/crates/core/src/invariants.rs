//! Cross-energy invariants.
//!
//! Distance estimators combine the optical stream (bearing geometry) with the
//! inertial speed `V`:
//!
//! | estimator | formula                 | exact when                    |
//! |-----------|-------------------------|-------------------------------|
//! | `eq1`     | `V sin α / |α̇|`         | heading is constant           |
//! | `eq2`     | `V sin α / |θ̇|`         | motion is planar              |
//! | `eq3`     | `V |sin α| / Q`         | always (stationary object)    |
//! | `eq5`     | `V / Q`                 | motion tangential to object   |
//!
//! Since `Q = V |sin α| / D` for a stationary object, `eq5 = D / |sin α| >= eq3`.
//!
//! The slope invariant combines the gravitoinertial vector with the support
//! normal: the direction of balance is `-f / |f|` and the slope is its angle to
//! the surface normal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{KinematicTrack, ScenePoint, TimeGrid, Vec3};
use crate::observables::{unit_angle, InertialStream, OpticalStream, SupportStream};

/// Specific force magnitude below which orientation is undefined (m/s²).
pub const FREE_FALL_EPS: f64 = 1e-6;

pub type Estimate = Vec<Option<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Eq1,
    Eq2,
    Eq3,
    Eq5,
}

impl Equation {
    pub const ALL: [Equation; 4] = [Equation::Eq1, Equation::Eq2, Equation::Eq3, Equation::Eq5];

    pub fn name(self) -> &'static str {
        match self {
            Equation::Eq1 => "eq1",
            Equation::Eq2 => "eq2",
            Equation::Eq3 => "eq3",
            Equation::Eq5 => "eq5",
        }
    }
}

fn aligned(optics: &OpticalStream, inertial: &InertialStream) -> Result<()> {
    optics
        .grid
        .check_aligned(&inertial.grid, "optical vs inertial stream")
}

fn estimate_with(
    optics: &OpticalStream,
    inertial: &InertialStream,
    f: impl Fn(usize, f64) -> Option<f64>,
) -> Result<Estimate> {
    aligned(optics, inertial)?;
    Ok(inertial
        .speed_v
        .iter()
        .enumerate()
        .map(|(k, &v)| f(k, v))
        .collect())
}

/// `D = V sin α / |α̇|`, the rectilinear model.
pub fn estimate_eq1(optics: &OpticalStream, inertial: &InertialStream) -> Result<Estimate> {
    let eps = optics.thresholds.rate_eps;
    estimate_with(optics, inertial, |k, v| {
        let alpha = optics.alpha[k]?;
        let rate = optics.alpha_dot[k]?.abs();
        (rate >= eps).then(|| v * alpha.sin() / rate)
    })
}

/// `D = V sin α / |θ̇|`, the planar model. Fails with a regime error when the
/// optic source did not move in a plane through the object.
pub fn estimate_eq2(optics: &OpticalStream, inertial: &InertialStream) -> Result<Estimate> {
    if !optics.is_planar() {
        return Err(Error::Regime(
            "eq2 needs planar motion; theta_dot is undefined for this stream".into(),
        ));
    }
    let eps = optics.thresholds.rate_eps;
    estimate_with(optics, inertial, |k, v| {
        let alpha = optics.alpha[k]?;
        let rate = optics.theta_dot[k]?.abs();
        (rate >= eps).then(|| v * alpha.sin() / rate)
    })
}

/// `|D| = V |sin α| / Q`, valid for any motion of the point of observation.
pub fn estimate_eq3(optics: &OpticalStream, inertial: &InertialStream) -> Result<Estimate> {
    let eps = optics.thresholds.rate_eps;
    estimate_with(optics, inertial, |k, v| {
        let alpha = optics.alpha[k]?;
        let q = optics.q_norm[k];
        (q >= eps).then(|| v * alpha.sin().abs() / q)
    })
}

/// `D = V / Q`, exact only for motion tangential to an object-centred sphere.
pub fn estimate_eq5(optics: &OpticalStream, inertial: &InertialStream) -> Result<Estimate> {
    let eps = optics.thresholds.rate_eps;
    estimate_with(optics, inertial, |k, v| {
        let q = optics.q_norm[k];
        (q >= eps).then(|| v / q)
    })
}

/// What optics alone yield about distance: `|sin α| / Q`, in seconds.
///
/// With no speed term this is `D / V`, a time rather than a length. It reduces
/// to `sin α / |α̇|` when the heading is constant and stays defined on orbits,
/// where `α̇ = 0`.
pub fn optics_only_ratio(optics: &OpticalStream) -> Estimate {
    let eps = optics.thresholds.rate_eps;
    optics
        .alpha
        .iter()
        .zip(&optics.q_norm)
        .map(|(a, &q)| {
            let alpha = (*a)?;
            (q >= eps).then(|| alpha.sin().abs() / q)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimateSeries {
    pub grid: TimeGrid,
    pub object: ScenePoint,
    /// Position of the observer whose inertial stream was used.
    pub observer_position: Vec<Vec3>,
    /// `|observer_position - object|`.
    pub d_truth: Vec<f64>,
    pub d_eq1: Estimate,
    /// All `None` when the motion is not planar.
    pub d_eq2: Estimate,
    pub d_eq3: Estimate,
    pub d_eq5: Estimate,
}

impl DistanceEstimateSeries {
    pub fn compute(
        optics: &OpticalStream,
        inertial: &InertialStream,
        observer: &KinematicTrack,
        object: &ScenePoint,
    ) -> Result<Self> {
        observer
            .grid()
            .check_aligned(&inertial.grid, "observer track vs inertial stream")?;
        let d_eq2 = match estimate_eq2(optics, inertial) {
            Ok(d) => d,
            Err(Error::Regime(_)) => vec![None; optics.grid.n_samples()],
            Err(e) => return Err(e),
        };
        Ok(Self {
            grid: optics.grid,
            object: object.clone(),
            observer_position: observer.position().to_vec(),
            d_truth: observer
                .position()
                .iter()
                .map(|p| (p - object.position).norm())
                .collect(),
            d_eq1: estimate_eq1(optics, inertial)?,
            d_eq2,
            d_eq3: estimate_eq3(optics, inertial)?,
            d_eq5: estimate_eq5(optics, inertial)?,
        })
    }

    pub fn equation(&self, eq: Equation) -> &[Option<f64>] {
        match eq {
            Equation::Eq1 => &self.d_eq1,
            Equation::Eq2 => &self.d_eq2,
            Equation::Eq3 => &self.d_eq3,
            Equation::Eq5 => &self.d_eq5,
        }
    }

    pub fn len(&self) -> usize {
        self.d_truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_truth.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    pub grid: TimeGrid,
    /// Angle between direction of balance and surface normal; `None` in free fall.
    pub slope_angle: Vec<Option<f64>>,
    /// Unit vector contraparallel to the specific force; `None` in free fall.
    pub direction_of_balance: Vec<Option<Vec3>>,
}

impl SlopeEstimate {
    pub fn degenerate(&self, k: usize) -> bool {
        self.slope_angle[k].is_none()
    }
}

/// Orientation of the direction of balance relative to the surface of support.
pub fn slope_invariant(
    inertial: &InertialStream,
    support: &SupportStream,
) -> Result<SlopeEstimate> {
    inertial
        .grid
        .check_aligned(&support.grid, "inertial vs support stream")?;
    let (slope_angle, direction_of_balance) = inertial
        .specific_force
        .iter()
        .zip(support.surface_normal())
        .map(|(f, n)| {
            let norm = f.norm();
            if norm < FREE_FALL_EPS {
                (None, None)
            } else {
                let dob = -f / norm;
                (Some(unit_angle(&dob, n)), Some(dob))
            }
        })
        .unzip();
    Ok(SlopeEstimate {
        grid: inertial.grid,
        slope_angle,
        direction_of_balance,
    })
}
