//! Direct fuzzy logic control: eight PD-like Mamdani loops.
//!
//! Six loops drive the actuated channels (altitude, attitude, joints); the x
//! and y loops close the outer position cascade by emitting desired pitch and
//! roll for the attitude loops. Position errors are first rotated into the
//! body frame so the outer loops see errors aligned with the tilt axes that
//! correct them. The altitude loop adds a constant thrust offset to carry the
//! vehicle weight.

use super::{ControlError, ControlOutput, FilteredDerivative, MissionController, PlantFeedback,
    DERIVATIVE_FILTER_POLE};
use crate::dynamics::{JointTorques, SystemState};
use crate::fuzzy::{defuzzify_cog, infer, ClippedSet, FuzzyVariable, RuleBase2d};
use crate::rotor::BodyWrench;
use crate::trajectory::{MissionChannel, MissionSample};

/// Input/output scalings of one fuzzy loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopGains {
    /// Error scaling onto the normalized universe.
    pub error_scale: f64,
    /// Error-rate scaling onto its universe.
    pub rate_scale: f64,
    /// Output scaling from the normalized universe to actuator units.
    pub output_scale: f64,
}

impl LoopGains {
    pub fn new(error_scale: f64, rate_scale: f64, output_scale: f64) -> Self {
        Self {
            error_scale,
            rate_scale,
            output_scale,
        }
    }
}

/// Scalings of all eight loops plus the altitude thrust offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DflcGains {
    pub x: LoopGains,
    pub y: LoopGains,
    pub z: LoopGains,
    pub roll: LoopGains,
    pub pitch: LoopGains,
    pub yaw: LoopGains,
    pub joint1: LoopGains,
    pub joint2: LoopGains,
    /// Constant added to the altitude loop's output [N].
    pub thrust_offset: f64,
}

impl DflcGains {
    /// Tuned scalings of the reference platform.
    pub fn reference() -> Self {
        Self {
            x: LoopGains::new(0.007, 0.05, 5.0),
            y: LoopGains::new(0.007, 0.05, 5.0),
            z: LoopGains::new(1.0, 0.3, 16.5),
            roll: LoopGains::new(0.5, 0.5, 9.0),
            pitch: LoopGains::new(0.5, 0.5, 10.0),
            yaw: LoopGains::new(1.0, 0.5, 0.2),
            joint1: LoopGains::new(2.0, 0.05, 4.0),
            joint2: LoopGains::new(5.0, 0.3, 0.3),
            thrust_offset: 7.85,
        }
    }
}

/// Full base width of the three output sets partitioning [-1, 1].
const OUTPUT_BASE_WIDTH: f64 = 2.0;

/// One PD-like fuzzy loop: 3 sets on the scaled error in [-1, 1], 3 sets on
/// the scaled error rate in [-3, 3], and the shared 3x3 rule base.
#[derive(Debug, Clone, PartialEq)]
pub struct DflcLoop {
    gains: LoopGains,
    offset: f64,
    error_var: FuzzyVariable,
    rate_var: FuzzyVariable,
    rules: RuleBase2d,
}

impl DflcLoop {
    pub fn new(gains: LoopGains, offset: f64) -> Self {
        Self {
            gains,
            offset,
            error_var: FuzzyVariable::uniform(3, -1.0, 1.0),
            rate_var: FuzzyVariable::uniform(3, -3.0, 3.0),
            rules: RuleBase2d::pd_3x3(),
        }
    }

    /// One evaluation; the error rate comes from the measured state rates
    /// (the fast joint loops cannot afford differentiation lag).
    pub fn evaluate(&self, error: f64, error_rate: f64) -> f64 {
        let (u, _) = defuzzify_cog(&self.activations(error, error_rate), OUTPUT_BASE_WIDTH);
        self.gains.output_scale * u + self.offset
    }

    /// The clipped output sets the inputs fire, for debug logging.
    pub fn activations(&self, error: f64, error_rate: f64) -> Vec<ClippedSet> {
        let fe = self.error_var.fuzzify(self.gains.error_scale * error);
        let fc = self.rate_var.fuzzify(self.gains.rate_scale * error_rate);
        infer(&self.rules, &fe, &fc)
    }
}

/// Rotates inertial-plane position errors and their rates into the body
/// frame (small-tilt form): returns (x error, x rate, y error, y rate).
pub fn body_frame_error(
    x_error: f64,
    y_error: f64,
    x_rate: f64,
    y_rate: f64,
    yaw: f64,
) -> (f64, f64, f64, f64) {
    let (sy, cy) = yaw.sin_cos();
    (
        x_error * cy + y_error * sy,
        x_rate * cy + y_rate * sy,
        x_error * sy - y_error * cy,
        x_rate * sy - y_rate * cy,
    )
}

/// The eight-loop direct fuzzy controller.
pub struct DflcController {
    x: DflcLoop,
    y: DflcLoop,
    z: DflcLoop,
    roll: DflcLoop,
    pitch: DflcLoop,
    yaw: DflcLoop,
    joint1: DflcLoop,
    joint2: DflcLoop,
    roll_ref_rate: FilteredDerivative,
    pitch_ref_rate: FilteredDerivative,
}

impl DflcController {
    pub fn new(gains: DflcGains) -> Self {
        Self {
            x: DflcLoop::new(gains.x, 0.0),
            y: DflcLoop::new(gains.y, 0.0),
            z: DflcLoop::new(gains.z, gains.thrust_offset),
            roll: DflcLoop::new(gains.roll, 0.0),
            pitch: DflcLoop::new(gains.pitch, 0.0),
            yaw: DflcLoop::new(gains.yaw, 0.0),
            joint1: DflcLoop::new(gains.joint1, 0.0),
            joint2: DflcLoop::new(gains.joint2, 0.0),
            roll_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            pitch_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
        }
    }

    pub fn reference() -> Self {
        Self::new(DflcGains::reference())
    }

    /// Outer position cascade: body-frame errors map to the desired pitch
    /// (forward motion) and desired roll (lateral motion).
    pub fn position_setpoints(
        &self,
        x_error: f64,
        x_rate: f64,
        y_error: f64,
        y_rate: f64,
    ) -> (f64, f64) {
        (
            self.x.evaluate(x_error, x_rate),
            self.y.evaluate(y_error, y_rate),
        )
    }
}

impl MissionController for DflcController {
    fn step(
        &mut self,
        _t: f64,
        refs: &MissionSample,
        state: &SystemState,
        _feedback: &PlantFeedback,
        dt: f64,
    ) -> Result<ControlOutput, ControlError> {
        let x_ref = refs.get(MissionChannel::X);
        let y_ref = refs.get(MissionChannel::Y);
        let (bx, bxr, by, byr) = body_frame_error(
            x_ref.value - state.position.x,
            y_ref.value - state.position.y,
            x_ref.rate - state.velocity.x,
            y_ref.rate - state.velocity.y,
            state.attitude.yaw,
        );
        let (pitch_d, roll_d) = self.position_setpoints(bx, bxr, by, byr);
        let roll_d_rate = self.roll_ref_rate.update(roll_d, dt);
        let pitch_d_rate = self.pitch_ref_rate.update(pitch_d, dt);
        let rates = state.attitude_rate;

        let z_ref = refs.get(MissionChannel::Z);
        let yaw_ref = refs.get(MissionChannel::Yaw);
        let j1_ref = refs.get(MissionChannel::Joint1);
        let j2_ref = refs.get(MissionChannel::Joint2);
        let thrust = self.z.evaluate(
            z_ref.value - state.position.z,
            z_ref.rate - state.velocity.z,
        );
        let roll_moment = self
            .roll
            .evaluate(roll_d - state.attitude.roll, roll_d_rate - rates.x);
        let pitch_moment = self
            .pitch
            .evaluate(pitch_d - state.attitude.pitch, pitch_d_rate - rates.y);
        let yaw_moment = self
            .yaw
            .evaluate(yaw_ref.value - state.attitude.yaw, yaw_ref.rate - rates.z);
        let torque1 = self.joint1.evaluate(
            j1_ref.value - state.joints.joint1,
            j1_ref.rate - state.joint_rates[0],
        );
        let torque2 = self.joint2.evaluate(
            j2_ref.value - state.joints.joint2,
            j2_ref.rate - state.joint_rates[1],
        );

        Ok(ControlOutput {
            wrench: BodyWrench::new(thrust, roll_moment, pitch_moment, yaw_moment),
            joint_torques: JointTorques {
                joint1: torque1,
                joint2: torque2,
            },
        })
    }
}
