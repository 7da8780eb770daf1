//! Synthetic head-motion families and the playback transform.
//!
//! Noise-free scenarios produce closed-form derivatives. With `noise_sigma > 0`
//! i.i.d. Gaussian noise is added to every position coordinate and the
//! derivatives are re-derived numerically. The noise stream comes from
//! ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed)`), drawn sample by
//! sample in x, y, z order, so a given seed reproduces the same track on any
//! platform.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kinematics::{KinematicTrack, Provenance, ScenePoint, TimeGrid, Vec3};

/// Sinusoidal sway about `center`, one independent sinusoid per axis:
/// `p_j(t) = center_j + amplitude_j * sin(2π frequency_j t + phase_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwayParams<const N: usize> {
    pub center: Vec3,
    pub amplitude: [f64; N],
    pub frequency: [f64; N],
    pub phase: [f64; N],
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Constant velocity `speed * direction` from `start`.
    Rectilinear {
        start: Vec3,
        speed: f64,
        direction: Vec3,
    },
    /// Lissajous sway in the horizontal (x, y) plane at the height of `center`.
    PlanarSway(SwayParams<2>),
    Sway3d(SwayParams<3>),
    /// Constant-speed circle of `radius` around the object in the horizontal
    /// plane through it, starting at azimuth `start_angle`.
    TangentialOrbit {
        radius: f64,
        speed: f64,
        start_angle: f64,
    },
    /// Externally supplied positions; derivatives are finite-differenced.
    CustomSamples {
        positions: Vec<Vec3>,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Rectilinear { .. } => "rectilinear",
            ScenarioKind::PlanarSway(_) => "planar_sway",
            ScenarioKind::Sway3d(_) => "sway3d",
            ScenarioKind::TangentialOrbit { .. } => "tangential_orbit",
            ScenarioKind::CustomSamples { .. } => "custom_samples",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub duration: f64,
    pub sample_rate: f64,
    pub t0: f64,
    pub object: ScenePoint,
    pub noise_sigma: f64,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, duration: f64, object: ScenePoint) -> Self {
        Self {
            kind,
            duration,
            sample_rate: crate::kinematics::DEFAULT_SAMPLE_RATE,
            t0: 0.0,
            object,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }

    /// Head-scale 3D sway in front of an object 0.8 m away.
    pub fn sway3d_default() -> Self {
        Self::new(
            ScenarioKind::Sway3d(SwayParams {
                center: Vec3::zeros(),
                amplitude: [0.06, 0.04, 0.03],
                frequency: [0.3, 0.7, 1.1],
                phase: [0.0, 0.5, 1.0],
            }),
            10.0,
            ScenePoint {
                position: Vec3::new(0.1, 0.8, -0.05),
                label: "object".into(),
            },
        )
    }

    /// Grid on which [`generate`] evaluates this scenario.
    pub fn grid(&self) -> Result<TimeGrid> {
        match &self.kind {
            ScenarioKind::CustomSamples { positions } => {
                TimeGrid::new(self.sample_rate, positions.len(), self.t0)
            }
            _ => TimeGrid::covering(self.sample_rate, self.duration, self.t0),
        }
    }

    /// Same scenario with every length (and hence every speed) multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let sway = |p: &SwayParams<3>| SwayParams {
            center: p.center * k,
            amplitude: p.amplitude.map(|a| a * k),
            frequency: p.frequency,
            phase: p.phase,
        };
        let kind = match &self.kind {
            ScenarioKind::Rectilinear {
                start,
                speed,
                direction,
            } => ScenarioKind::Rectilinear {
                start: start * k,
                speed: speed * k,
                direction: *direction,
            },
            ScenarioKind::PlanarSway(p) => ScenarioKind::PlanarSway(SwayParams {
                center: p.center * k,
                amplitude: p.amplitude.map(|a| a * k),
                frequency: p.frequency,
                phase: p.phase,
            }),
            ScenarioKind::Sway3d(p) => ScenarioKind::Sway3d(sway(p)),
            ScenarioKind::TangentialOrbit {
                radius,
                speed,
                start_angle,
            } => ScenarioKind::TangentialOrbit {
                radius: radius * k,
                speed: speed * k,
                start_angle: *start_angle,
            },
            ScenarioKind::CustomSamples { positions } => ScenarioKind::CustomSamples {
                positions: positions.iter().map(|p| p * k).collect(),
            },
        };
        Self {
            kind,
            object: ScenePoint {
                position: self.object.position * k,
                label: self.object.label.clone(),
            },
            noise_sigma: self.noise_sigma * k,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Config(format!("{what} is invalid: {v}")));
        let finite3 = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration", self.duration);
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad("sample_rate", self.sample_rate);
        }
        if !self.t0.is_finite() {
            return bad("t0", self.t0);
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma", self.noise_sigma);
        }
        if !finite3(&self.object.position) {
            return Err(Error::Config("object position must be finite".into()));
        }
        fn check_sway<const N: usize>(p: &SwayParams<N>) -> Result<()> {
            if !p.center.iter().all(|c| c.is_finite()) {
                return Err(Error::Config("sway center must be finite".into()));
            }
            for j in 0..N {
                if !(p.amplitude[j].is_finite() && p.amplitude[j] >= 0.0) {
                    return Err(Error::Config(format!(
                        "sway amplitude[{j}] must be finite and >= 0, got {}",
                        p.amplitude[j]
                    )));
                }
                if !(p.frequency[j].is_finite() && p.frequency[j] >= 0.0) {
                    return Err(Error::Config(format!(
                        "sway frequency[{j}] must be finite and >= 0, got {}",
                        p.frequency[j]
                    )));
                }
                if !p.phase[j].is_finite() {
                    return Err(Error::Config(format!("sway phase[{j}] must be finite")));
                }
            }
            Ok(())
        }
        match &self.kind {
            ScenarioKind::Rectilinear {
                start,
                speed,
                direction,
            } => {
                if !finite3(start) {
                    return Err(Error::Config("rectilinear start must be finite".into()));
                }
                if !(speed.is_finite() && *speed >= 0.0) {
                    return bad("rectilinear speed", *speed);
                }
                if !finite3(direction) || direction.norm() == 0.0 {
                    return Err(Error::Config(
                        "rectilinear direction must be finite and non-zero".into(),
                    ));
                }
            }
            ScenarioKind::PlanarSway(p) => check_sway(p)?,
            ScenarioKind::Sway3d(p) => check_sway(p)?,
            ScenarioKind::TangentialOrbit {
                radius,
                speed,
                start_angle,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad("orbit radius", *radius);
                }
                if !(speed.is_finite() && *speed >= 0.0) {
                    return bad("orbit speed", *speed);
                }
                if !start_angle.is_finite() {
                    return bad("orbit start angle", *start_angle);
                }
            }
            ScenarioKind::CustomSamples { positions } => {
                if positions.iter().any(|p| !finite3(p)) {
                    return Err(Error::Config("custom samples must be finite".into()));
                }
                if positions.len() < 3 {
                    return Err(Error::InsufficientData {
                        needed: 3,
                        got: positions.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Evaluates one sway axis: (position offset, velocity, acceleration).
fn sway_axis(amplitude: f64, frequency: f64, phase: f64, t: f64) -> (f64, f64, f64) {
    let w = TAU * frequency;
    let (s, c) = (w * t + phase).sin_cos();
    (amplitude * s, amplitude * w * c, -amplitude * w * w * s)
}

fn analytic_samples(config: &ScenarioConfig, grid: &TimeGrid) -> (Vec<Vec3>, Vec<Vec3>, Vec<Vec3>) {
    let n = grid.n_samples();
    let mut p = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for t in grid.times() {
        let (pk, vk, ak) = match &config.kind {
            ScenarioKind::Rectilinear {
                start,
                speed,
                direction,
            } => {
                let vel = direction.normalize() * *speed;
                (start + vel * t, vel, Vec3::zeros())
            }
            ScenarioKind::PlanarSway(s) => {
                let (x, vx, ax) = sway_axis(s.amplitude[0], s.frequency[0], s.phase[0], t);
                let (y, vy, ay) = sway_axis(s.amplitude[1], s.frequency[1], s.phase[1], t);
                (
                    s.center + Vec3::new(x, y, 0.0),
                    Vec3::new(vx, vy, 0.0),
                    Vec3::new(ax, ay, 0.0),
                )
            }
            ScenarioKind::Sway3d(s) => {
                let mut pk = s.center;
                let mut vk = Vec3::zeros();
                let mut ak = Vec3::zeros();
                for j in 0..3 {
                    let (x, vx, ax) = sway_axis(s.amplitude[j], s.frequency[j], s.phase[j], t);
                    pk[j] += x;
                    vk[j] = vx;
                    ak[j] = ax;
                }
                (pk, vk, ak)
            }
            ScenarioKind::TangentialOrbit {
                radius,
                speed,
                start_angle,
            } => {
                let omega = speed / radius;
                let (s, c) = (start_angle + omega * t).sin_cos();
                (
                    config.object.position + Vec3::new(c, s, 0.0) * *radius,
                    Vec3::new(-s, c, 0.0) * *speed,
                    Vec3::new(-c, -s, 0.0) * (speed * omega),
                )
            }
            ScenarioKind::CustomSamples { .. } => unreachable!("custom samples are not analytic"),
        };
        p.push(pk);
        v.push(vk);
        a.push(ak);
    }
    (p, v, a)
}

/// Synthesizes the trajectory described by `config`.
pub fn generate(config: &ScenarioConfig) -> Result<KinematicTrack> {
    config.validate()?;
    let grid = config.grid()?;
    if let ScenarioKind::CustomSamples { positions } = &config.kind {
        let mut positions = positions.clone();
        add_noise(&mut positions, config.noise_sigma, config.rng_seed)?;
        return KinematicTrack::from_positions(grid, positions);
    }
    let (mut p, v, a) = analytic_samples(config, &grid);
    if config.noise_sigma > 0.0 {
        add_noise(&mut p, config.noise_sigma, config.rng_seed)?;
        return KinematicTrack::from_positions(grid, p);
    }
    KinematicTrack::new(grid, p, v, a, Provenance::Analytic)
}

fn add_noise(positions: &mut [Vec3], sigma: f64, seed: u64) -> Result<()> {
    if sigma == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in positions.iter_mut() {
        for j in 0..3 {
            p[j] += normal.sample(&mut rng);
        }
    }
    Ok(())
}

/// Live motion paired with a stationary observer, modelling optics played
/// back from a recording to someone who is not moving.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaybackPair {
    /// The recorded motion; optics are rendered from this track.
    pub live: KinematicTrack,
    /// The observer during playback; inertial quantities come from here.
    pub stationary: KinematicTrack,
}

impl PlaybackPair {
    pub fn replayed_optics_source(&self) -> &KinematicTrack {
        &self.live
    }
}

pub fn make_playback(live: &KinematicTrack, hold_position: Vec3) -> Result<PlaybackPair> {
    if !hold_position.iter().all(|c| c.is_finite()) {
        return Err(Error::Config("hold position must be finite".into()));
    }
    Ok(PlaybackPair {
        live: live.clone(),
        stationary: KinematicTrack::stationary(*live.grid(), hold_position)?,
    })
}

/// Seeded family of head-scale 3D sway scenarios used by the demo suite.
///
/// Each scenario draws per-axis amplitudes in [0.02, 0.1] m, frequencies in
/// [0.1, 1.5] Hz and phases in [0, 2π), with the object 0.4–1.5 m ahead (+y)
/// and up to 0.2 m off-axis. Scenario `i` uses `ChaCha8Rng::seed_from_u64(seed + i)`.
pub fn sway3d_suite(seed: u64, count: usize, duration: f64) -> Vec<ScenarioConfig> {
    (0..count)
        .map(|i| {
            let scenario_seed = seed.wrapping_add(i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed);
            let amplitude = [(); 3].map(|_| rng.random_range(0.02..=0.1));
            let frequency = [(); 3].map(|_| rng.random_range(0.1..=1.5));
            let phase = [(); 3].map(|_| rng.random_range(0.0..TAU));
            let object = Vec3::new(
                rng.random_range(-0.2..=0.2),
                rng.random_range(0.4..=1.5),
                rng.random_range(-0.2..=0.2),
            );
            let mut config = ScenarioConfig::new(
                ScenarioKind::Sway3d(SwayParams {
                    center: Vec3::zeros(),
                    amplitude,
                    frequency,
                    phase,
                }),
                duration,
                ScenePoint {
                    position: object,
                    label: format!("sway3d-{i}"),
                },
            );
            config.rng_seed = scenario_seed;
            config
        })
        .collect()
}
