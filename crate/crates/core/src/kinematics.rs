//! Uniformly sampled trajectories and the finite-difference machinery shared by
//! every other module.
//!
//! All quantities are SI (metres, seconds, radians). A [`KinematicTrack`] carries
//! position, velocity and acceleration of the point of observation on a
//! [`TimeGrid`]; the [`Provenance`] tag records whether the derivatives are
//! closed-form, finite-differenced, or read from a file.

use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Default sampling rate of the motion recordings (Hz).
pub const DEFAULT_SAMPLE_RATE: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    sample_rate: f64,
    n_samples: usize,
    t0: f64,
}

impl TimeGrid {
    pub fn new(sample_rate: f64, n_samples: usize, t0: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Config(format!(
                "sample_rate must be finite and > 0, got {sample_rate}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::Config(format!("t0 must be finite, got {t0}")));
        }
        if n_samples < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: n_samples,
            });
        }
        Ok(Self {
            sample_rate,
            n_samples,
            t0,
        })
    }

    /// Grid covering the closed interval `[t0, t0 + duration]`.
    pub fn covering(sample_rate: f64, duration: f64, t0: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Config(format!(
                "duration must be finite and > 0, got {duration}"
            )));
        }
        let steps = (duration * sample_rate + 1e-9).floor();
        if !steps.is_finite() || steps > 1e9 {
            return Err(Error::Config(format!(
                "duration {duration} s at {sample_rate} Hz is too many samples"
            )));
        }
        Self::new(sample_rate, steps as usize + 1, t0)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(|k| self.time(k))
    }

    pub fn duration(&self) -> f64 {
        (self.n_samples - 1) as f64 / self.sample_rate
    }

    /// Exact equality of rate, length and origin.
    pub fn check_aligned(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Alignment(format!(
                "{what}: grids differ ({} Hz x {} from {} s vs {} Hz x {} from {} s)",
                self.sample_rate,
                self.n_samples,
                self.t0,
                other.sample_rate,
                other.n_samples,
                other.t0
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Derivatives evaluated in closed form.
    Analytic,
    /// Derivatives obtained by [`differentiate`] from sampled positions.
    Differentiated,
    /// Derivatives read from an external file.
    Ingested,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTrack {
    grid: TimeGrid,
    position: Vec<Vec3>,
    velocity: Vec<Vec3>,
    acceleration: Vec<Vec3>,
    provenance: Provenance,
}

impl KinematicTrack {
    pub fn new(
        grid: TimeGrid,
        position: Vec<Vec3>,
        velocity: Vec<Vec3>,
        acceleration: Vec<Vec3>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = grid.n_samples();
        for (name, len) in [
            ("position", position.len()),
            ("velocity", velocity.len()),
            ("acceleration", acceleration.len()),
        ] {
            if len != n {
                return Err(Error::InputShape(format!(
                    "{name} has {len} samples, grid has {n}"
                )));
            }
        }
        let finite = |s: &[Vec3]| s.iter().all(|v| v.iter().all(|c| c.is_finite()));
        if !(finite(&position) && finite(&velocity) && finite(&acceleration)) {
            return Err(Error::InputShape("track contains non-finite values".into()));
        }
        Ok(Self {
            grid,
            position,
            velocity,
            acceleration,
            provenance,
        })
    }

    /// Builds a track from positions alone; velocity comes from
    /// [`differentiate`], acceleration from [`differentiate2`].
    pub fn from_positions(grid: TimeGrid, position: Vec<Vec3>) -> Result<Self> {
        let velocity = differentiate(&position, &grid)?;
        let acceleration = differentiate2(&position, &grid)?;
        Self::new(
            grid,
            position,
            velocity,
            acceleration,
            Provenance::Differentiated,
        )
    }

    /// Track held at one position with zero derivatives.
    pub fn stationary(grid: TimeGrid, at: Vec3) -> Result<Self> {
        let n = grid.n_samples();
        Self::new(
            grid,
            vec![at; n],
            vec![Vec3::zeros(); n],
            vec![Vec3::zeros(); n],
            Provenance::Analytic,
        )
    }

    /// Discards the stored derivatives and re-derives them from positions.
    pub fn rederived(&self) -> Result<Self> {
        Self::from_positions(self.grid, self.position.clone())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn position(&self) -> &[Vec3] {
        &self.position
    }

    pub fn velocity(&self) -> &[Vec3] {
        &self.velocity
    }

    pub fn acceleration(&self) -> &[Vec3] {
        &self.acceleration
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.grid.n_samples()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Speed `V = |velocity|` at each sample.
    pub fn speed(&self) -> Vec<f64> {
        self.velocity.iter().map(|v| v.norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePoint {
    pub position: Vec3,
    pub label: String,
}

impl ScenePoint {
    pub fn new(position: Vec3, label: impl Into<String>) -> Result<Self> {
        if !position.iter().all(|c| c.is_finite()) {
            return Err(Error::Config(format!(
                "scene point coordinates must be finite, got {position:?}"
            )));
        }
        Ok(Self {
            position,
            label: label.into(),
        })
    }
}

/// Second-order finite-difference derivative of a uniformly sampled series.
///
/// Interior samples use the central stencil `(f[k+1] - f[k-1]) / 2h`; the two
/// endpoints use the one-sided second-order stencils
/// `(-3 f0 + 4 f1 - f2) / 2h` and `(3 fn - 4 fn-1 + fn-2) / 2h`, so the output
/// has the same length as the input.
pub fn differentiate<T>(series: &[T], grid: &TimeGrid) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = series.len();
    if n != grid.n_samples() {
        return Err(Error::InputShape(format!(
            "series has {n} samples, grid has {}",
            grid.n_samples()
        )));
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let half_rate = 0.5 * grid.sample_rate();
    let mut out = Vec::with_capacity(n);
    out.push((series[1] * 4.0 - series[0] * 3.0 - series[2]) * half_rate);
    for w in series.windows(3) {
        out.push((w[2] - w[0]) * half_rate);
    }
    out.push((series[n - 1] * 3.0 - series[n - 2] * 4.0 + series[n - 3]) * half_rate);
    Ok(out)
}

/// Second-order finite-difference second derivative.
///
/// Interior samples use `(f[k+1] - 2 f[k] + f[k-1]) / h²`, the endpoints the
/// one-sided `(2 f0 - 5 f1 + 4 f2 - f3) / h²` and its mirror. Applying
/// [`differentiate`] twice would leave first-order error at the ends. A
/// three-sample series gets the single central value everywhere.
pub fn differentiate2<T>(series: &[T], grid: &TimeGrid) -> Result<Vec<T>>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = series.len();
    if n != grid.n_samples() {
        return Err(Error::InputShape(format!(
            "series has {n} samples, grid has {}",
            grid.n_samples()
        )));
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let rate2 = grid.sample_rate() * grid.sample_rate();
    let central = |w: &[T]| (w[0] + w[2] - w[1] * 2.0) * rate2;
    if n == 3 {
        return Ok(vec![central(series); 3]);
    }
    let s = series;
    let mut out = Vec::with_capacity(n);
    out.push((s[0] * 2.0 - s[1] * 5.0 + s[2] * 4.0 - s[3]) * rate2);
    out.extend(s.windows(3).map(central));
    out.push((s[n - 1] * 2.0 - s[n - 2] * 5.0 + s[n - 3] * 4.0 - s[n - 4]) * rate2);
    Ok(out)
}

/// Linearly interpolates positions onto a grid at `new_rate` spanning the same
/// start time, then re-derives velocity and acceleration.
pub fn resample(track: &KinematicTrack, new_rate: f64) -> Result<KinematicTrack> {
    if !(new_rate.is_finite() && new_rate > 0.0) {
        return Err(Error::Config(format!(
            "new_rate must be finite and > 0, got {new_rate}"
        )));
    }
    let old = track.grid();
    let n_old = old.n_samples();
    if n_old < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n_old,
        });
    }
    // Index ratio between grids; exactly 1.0 when the rate is unchanged.
    let ratio = old.sample_rate() / new_rate;
    let last = (n_old - 1) as f64;
    let n_new = ((last / ratio) + 1e-9).floor() as usize + 1;
    if n_new < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: n_new,
        });
    }
    let grid = TimeGrid::new(new_rate, n_new, old.t0())?;
    let p = track.position();
    let position = (0..n_new)
        .map(|k| {
            let u = (k as f64 * ratio).min(last);
            let i = (u.floor() as usize).min(n_old - 2);
            let frac = u - i as f64;
            p[i] + (p[i + 1] - p[i]) * frac
        })
        .collect();
    KinematicTrack::from_positions(grid, position)
}
