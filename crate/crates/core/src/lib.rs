//! Trajectory tracking for underactuated surface vessels in polar coordinates.
//!
//! The crate is organised bottom-up:
//!
//! - [`vessel`]: 3-DOF kinematics and dynamics, bounded disturbance sampling.
//! - [`polar`]: the body-velocity and position-error polar transforms, the
//!   reduced two-input model and angle helpers.
//! - [`emo`]: exponential modification of the reference orientation and the
//!   constant `kappa` that bounds its admissible gains.
//! - [`controller`]: the backstepping law with disturbance domination and the
//!   Lyapunov diagnostics used to monitor it.
//! - [`cbf`]: the surge barrier constraint, its closed-form QP filter and the
//!   relaxed sway-bound threshold.
//! - [`reference`], [`integrator`], [`sim`], [`metrics`], [`trace`]: the
//!   closed-loop simulation engine and its outputs.
//! - [`config`]: scenario configuration, presets and validation.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cbf;
pub mod config;
pub mod controller;
pub mod emo;
pub mod error;
pub mod integrator;
pub mod metrics;
pub mod polar;
pub mod reference;
pub mod sim;
pub mod trace;
pub mod vessel;

pub use cbf::{CbfConfig, ClassK, Method1Config};
pub use config::{Method, Preset, ScenarioConfig};
pub use controller::{
    Controller, ControllerGains, ControllerState, DerivativeMode, LyapunovDiag, TrackingErrors,
};
pub use emo::{EmoOutput, EmoParams};
pub use error::{Error, Result};
pub use metrics::Metrics;
pub use polar::{BodyPolar, ErrorPolar, ReducedModel};
pub use reference::{ReferenceSample, ReferenceSpec};
pub use sim::run_scenario;
pub use trace::{SimTrace, StepRecord};
pub use vessel::{ControlInput, Disturbance, VesselParams, VesselState};
