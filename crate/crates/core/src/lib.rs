//! Deterministic world model and agent stack for one-vs-one humanoid soccer.
//!
//! Everything in this crate is pure computation over explicit inputs: field
//! geometry, the kinematic world simulation, synthetic perception, compassless
//! multi-hypothesis localization, the two-level behavior state machines and the
//! moving-ball kick timing estimator. IO, configuration files, traces and the
//! command line live in the `soccer-sim` companion crate.

#![no_std]

extern crate alloc;

pub mod agent;
pub mod behaviors;
pub mod checks;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kick_timing;
pub mod localization;
pub mod perception;
pub mod rng;
pub mod sim;

pub use error::{ConfigError, Error};
pub use field::{FieldSpec, Landmark, LandmarkKind, StartPose, StartPoseLabel};
pub use geometry::{Pose2D, Vec2};
pub use sim::{SimParams, VelocityCommand, WorldState};
