//! The three controller stacks and the plumbing they share.
//!
//! All controllers run at the control rate (default 500 Hz), consume the
//! mission references and the measured state, and emit a body wrench plus two
//! joint torques. Plant quantities that close algebraic loops (interaction
//! wrench, rotor speed sum, vehicle accelerations) arrive lagged by one
//! physics step through [`PlantFeedback`].

pub mod dflc;
pub mod fbl;
pub mod fmrlc;

use crate::dynamics::{BaseAcceleration, InteractionWrench, JointTorques, SystemState};
use crate::rotor::BodyWrench;
use crate::trajectory::MissionSample;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("desired acceleration demands free fall; attitude constraint undefined")]
    FreeFallDemand,
    #[error("attitude outside the controller's validity region")]
    AttitudeOutOfRange,
}

/// Actuation commands produced by one control tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub wrench: BodyWrench,
    pub joint_torques: JointTorques,
}

/// Plant information fed back to the controllers, lagged by one physics step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantFeedback {
    pub interaction: InteractionWrench,
    pub rotor_speed_sum: f64,
    pub base_accel: BaseAcceleration,
}

impl PlantFeedback {
    /// Feedback for the very first tick, before any plant step has run.
    pub fn startup() -> Self {
        Self {
            interaction: InteractionWrench::zeros(),
            rotor_speed_sum: 0.0,
            base_accel: BaseAcceleration::zeros(),
        }
    }
}

/// A closed-loop mission controller.
pub trait MissionController {
    fn step(
        &mut self,
        t: f64,
        refs: &MissionSample,
        state: &SystemState,
        feedback: &PlantFeedback,
        dt: f64,
    ) -> Result<ControlOutput, ControlError>;
}

/// Pole of the first-order filter applied to numerically differentiated
/// signals [rad/s].
pub const DERIVATIVE_FILTER_POLE: f64 = 50.0;

/// First-order low-pass filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    pole: f64,
    state: f64,
}

impl LowPass {
    pub fn new(pole: f64) -> Self {
        Self { pole, state: 0.0 }
    }

    pub fn update(&mut self, x: f64, dt: f64) -> f64 {
        let blend = 1.0 - (-self.pole * dt).exp();
        self.state += blend * (x - self.state);
        self.state
    }

    pub fn value(&self) -> f64 {
        self.state
    }
}

/// Backward-difference differentiator smoothed by a first-order low-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredDerivative {
    pole: f64,
    state: f64,
    prev: Option<f64>,
}

impl FilteredDerivative {
    pub fn new(pole: f64) -> Self {
        Self {
            pole,
            state: 0.0,
            prev: None,
        }
    }

    /// Feeds one sample and returns the filtered derivative estimate.
    pub fn update(&mut self, x: f64, dt: f64) -> f64 {
        let raw = match self.prev {
            Some(p) => (x - p) / dt,
            None => 0.0,
        };
        self.prev = Some(x);
        let blend = 1.0 - (-self.pole * dt).exp();
        self.state += blend * (raw - self.state);
        self.state
    }

    pub fn value(&self) -> f64 {
        self.state
    }
}
