//! Single-energy observable streams derived from a trajectory and a scene.
//!
//! * [`OpticalStream`]: bearing of the point of observation seen from the
//!   object, the angle `alpha` to the heading, and the angular rates
//!   (`alpha_dot`, `theta_dot`, `Q = |i × di/dt|`).
//! * [`InertialStream`]: velocity, speed `V`, and the gravitoinertial
//!   (specific-force) vector `gravity - acceleration`.
//! * [`SupportStream`]: unit normal of the surface of support.
//!
//! Bearing convention: `bearing[k]` is the unit vector pointing *from the
//! object toward the point of observation*. `alpha` is measured between the
//! opposite direction (toward the object) and the direction of motion.
//! `Q` does not depend on which of the two directions is used.
//!
//! Angular rates are obtained through one of two routes ([`RateSource`]):
//! by the chain rule from the track's own velocity/acceleration, or by
//! differentiating the sampled bearing and `alpha` series with
//! [`differentiate`]. `alpha_dot` is signed; the distance estimators use its
//! magnitude.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::PlaybackPair;
use crate::kinematics::{differentiate, KinematicTrack, Provenance, ScenePoint, TimeGrid, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default gravity vector, z up (m/s²).
pub fn default_gravity() -> Vec3 {
    Vec3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

/// Minimum observer-object separation before the bearing is undefined (m).
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityThresholds {
    /// Speed below which the direction of motion, and so `alpha`, is undefined (m/s).
    pub speed_eps: f64,
    /// Angular rate below which the distance estimators are undefined (rad/s).
    pub rate_eps: f64,
    /// Largest ratio of smallest to largest singular value of the
    /// object-relative positions for which motion counts as planar.
    pub planarity_tol: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self {
            speed_eps: 1e-6,
            rate_eps: 1e-6,
            planarity_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateSource {
    /// Chain rule for analytic and ingested tracks, finite differences for
    /// differentiated tracks.
    #[default]
    Auto,
    TrackDerivatives,
    FiniteDifference,
}

impl RateSource {
    fn resolve(self, provenance: Provenance) -> RateSource {
        match (self, provenance) {
            (RateSource::Auto, Provenance::Differentiated) => RateSource::FiniteDifference,
            (RateSource::Auto, _) => RateSource::TrackDerivatives,
            (other, _) => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub thresholds: ValidityThresholds,
    pub rate_source: RateSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalStream {
    pub grid: TimeGrid,
    /// Unit vector from the object toward the point of observation.
    pub bearing: Vec<Vec3>,
    /// Angle between the direction to the object and the direction of motion;
    /// `None` where the optic source moves slower than `speed_eps`.
    pub alpha: Vec<Option<f64>>,
    pub alpha_dot: Vec<Option<f64>>,
    /// Signed bearing rate about the motion-plane normal; `None` everywhere
    /// when the motion is not planar.
    pub theta_dot: Vec<Option<f64>>,
    /// Rotational vector `i × di/dt`.
    pub omega: Vec<Vec3>,
    /// `Q = |omega|`.
    pub q_norm: Vec<f64>,
    pub plane_normal: Option<Vec3>,
    pub thresholds: ValidityThresholds,
    /// Route actually used for the angular rates (never `Auto`).
    pub rate_source: RateSource,
}

impl OpticalStream {
    pub fn is_planar(&self) -> bool {
        self.plane_normal.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InertialStream {
    pub grid: TimeGrid,
    pub velocity: Vec<Vec3>,
    pub speed_v: Vec<f64>,
    /// Vector sum of gravity and the inertial force per unit mass: `g - a`.
    pub specific_force: Vec<Vec3>,
    pub gravity: Vec3,
    /// Self-motion path relative to the first sample (m).
    pub displacement: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportStream {
    pub grid: TimeGrid,
    surface_normal: Vec<Vec3>,
}

impl SupportStream {
    pub fn new(grid: TimeGrid, surface_normal: Vec<Vec3>) -> Result<Self> {
        if surface_normal.len() != grid.n_samples() {
            return Err(Error::InputShape(format!(
                "support normal has {} samples, grid has {}",
                surface_normal.len(),
                grid.n_samples()
            )));
        }
        if let Some(k) = surface_normal
            .iter()
            .position(|n| (n.norm() - 1.0).abs().is_nan() || (n.norm() - 1.0).abs() > 1e-9)
        {
            return Err(Error::InputShape(format!(
                "support normal at sample {k} is not unit length"
            )));
        }
        Ok(Self {
            grid,
            surface_normal,
        })
    }

    /// Constant normal; `normal` is normalized first.
    pub fn constant(grid: TimeGrid, normal: Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::Config(format!("invalid surface normal {normal:?}")));
        }
        Self::new(grid, vec![normal / len; grid.n_samples()])
    }

    pub fn level(grid: TimeGrid) -> Self {
        Self {
            grid,
            surface_normal: vec![Vec3::z(); grid.n_samples()],
        }
    }

    /// Ground inclined by `angle` (rad) about the y axis.
    pub fn tilted_about_y(grid: TimeGrid, angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        Self::constant(grid, Vec3::new(s, 0.0, c))
    }

    pub fn surface_normal(&self) -> &[Vec3] {
        &self.surface_normal
    }
}

/// Angle between unit vectors, robust near 0 and π.
pub(crate) fn unit_angle(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Normal of the plane through the object containing every object-relative
/// position, if one exists within `tol`.
fn motion_plane(relative: &[Vec3], tol: f64) -> Option<Vec3> {
    let scale = relative.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut m = Matrix3::zeros();
    for r in relative {
        let u = r / scale;
        m += u * u.transpose();
    }
    let eig = SymmetricEigen::new(m);
    let (imin, lmin) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let lmax = eig.eigenvalues.max();
    if lmax <= 0.0 || lmin.max(0.0).sqrt() > tol * lmax.sqrt() {
        return None;
    }
    let mut n: Vec3 = eig.eigenvectors.column(imin).into_owned().normalize();
    let lead = n.iamax();
    if n[lead] < 0.0 {
        n = -n;
    }
    Some(n)
}

fn analytic_alpha_dot(
    bearing: &Vec3,
    bearing_rate: &Vec3,
    v: &Vec3,
    a: &Vec3,
    sin_alpha: f64,
    cos_alpha: f64,
) -> f64 {
    let speed = v.norm();
    let u = -bearing;
    let u_dot = -bearing_rate;
    let w = v / speed;
    let w_dot = (a - w * w.dot(a)) / speed;
    if sin_alpha > 1e-9 {
        -(u_dot.dot(&w) + u.dot(&w_dot)) / sin_alpha
    } else if cos_alpha > 0.0 {
        (u_dot - w_dot).norm()
    } else {
        -(u_dot + w_dot).norm()
    }
}

/// Optical kinematics of `object` as seen from the moving point of observation.
pub fn project_optics(
    track: &KinematicTrack,
    object: &ScenePoint,
    config: &ProjectionConfig,
) -> Result<OpticalStream> {
    let grid = *track.grid();
    let th = config.thresholds;
    let relative: Vec<Vec3> = track
        .position()
        .iter()
        .map(|p| p - object.position)
        .collect();
    let distance: Vec<f64> = relative.iter().map(|r| r.norm()).collect();
    if let Some(k) = distance
        .iter()
        .position(|d| d.is_nan() || *d <= MIN_SEPARATION)
    {
        return Err(Error::DegenerateGeometry(format!(
            "object '{}' coincides with the point of observation at sample {k}",
            object.label
        )));
    }
    let bearing: Vec<Vec3> = relative
        .iter()
        .zip(&distance)
        .map(|(r, d)| r / *d)
        .collect();

    let rate_source = config.rate_source.resolve(track.provenance());
    let bearing_rate: Vec<Vec3> = match rate_source {
        RateSource::FiniteDifference => differentiate(&bearing, &grid)?,
        _ => bearing
            .iter()
            .zip(track.velocity())
            .zip(&distance)
            .map(|((i, v), d)| (v - i * i.dot(v)) / *d)
            .collect(),
    };
    let omega: Vec<Vec3> = bearing
        .iter()
        .zip(&bearing_rate)
        .map(|(i, di)| i.cross(di))
        .collect();
    let q_norm: Vec<f64> = omega.iter().map(|w| w.norm()).collect();

    let alpha: Vec<Option<f64>> = bearing
        .iter()
        .zip(track.velocity())
        .map(|(i, v)| {
            let speed = v.norm();
            (speed > th.speed_eps).then(|| unit_angle(&(-i), &(v / speed)))
        })
        .collect();

    let alpha_dot: Vec<Option<f64>> = match rate_source {
        RateSource::FiniteDifference => {
            let raw: Vec<f64> = alpha.iter().map(|a| a.unwrap_or(f64::NAN)).collect();
            differentiate(&raw, &grid)?
                .into_iter()
                .map(|d| d.is_finite().then_some(d))
                .collect()
        }
        _ => (0..grid.n_samples())
            .map(|k| {
                alpha[k].map(|al| {
                    analytic_alpha_dot(
                        &bearing[k],
                        &bearing_rate[k],
                        &track.velocity()[k],
                        &track.acceleration()[k],
                        al.sin(),
                        al.cos(),
                    )
                })
            })
            .collect(),
    };

    let plane_normal = motion_plane(&relative, th.planarity_tol);
    let theta_dot = match plane_normal {
        Some(n) => omega.iter().map(|w| Some(n.dot(w))).collect(),
        None => vec![None; grid.n_samples()],
    };

    Ok(OpticalStream {
        grid,
        bearing,
        alpha,
        alpha_dot,
        theta_dot,
        omega,
        q_norm,
        plane_normal,
        thresholds: th,
        rate_source,
    })
}

/// Non-optical kinematics of the point of observation.
pub fn project_inertial(track: &KinematicTrack, gravity: Vec3) -> InertialStream {
    let origin = track.position()[0];
    InertialStream {
        grid: *track.grid(),
        velocity: track.velocity().to_vec(),
        speed_v: track.speed(),
        specific_force: track.acceleration().iter().map(|a| gravity - a).collect(),
        gravity,
        displacement: track.position().iter().map(|p| p - origin).collect(),
    }
}

/// Optics rendered from the recorded (live) motion paired with the inertial
/// stream of the stationary observer watching the playback.
pub fn replay_optics(
    pair: &PlaybackPair,
    object: &ScenePoint,
    config: &ProjectionConfig,
    gravity: Vec3,
) -> Result<(OpticalStream, InertialStream)> {
    let optics = project_optics(pair.replayed_optics_source(), object, config)?;
    let inertial = project_inertial(&pair.stationary, gravity);
    Ok((optics, inertial))
}
