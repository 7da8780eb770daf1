//! Distance and orientation invariants that span the optical, inertial and
//! support arrays of a moving observer.
//!
//! The pipeline is
//! [`generators`] → [`observables`] → [`invariants`] → [`analysis`] / [`detector`],
//! with [`kinematics`] providing the shared time-series types and numerical
//! differentiation. [`config`], [`io`] and [`demo`] back the command-line tool.

pub mod analysis;
pub mod config;
pub mod demo;
pub mod detector;
pub mod error;
pub mod generators;
pub mod invariants;
pub mod io;
pub mod kinematics;
pub mod observables;

pub use error::{Error, Result};
pub use kinematics::{KinematicTrack, Provenance, ScenePoint, TimeGrid, Vec3};
