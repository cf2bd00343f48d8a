//! Feedback-linearization PID control.
//!
//! Each regulated channel (altitude, the three attitude angles, the two
//! joints) gets a control law that cancels the modeled nonlinear terms and
//! imposes linear PID error dynamics on what is left. Desired roll and pitch
//! are not free: they follow from the desired translational accelerations and
//! yaw through the thrust-direction constraint of an underactuated vehicle.
//!
//! The controller compensates the arm's interaction wrench with the lagged
//! plant value and derives the joint-space inertia/load terms from its own
//! nominal arm model; a grasped payload is invisible to it by design.

use super::{ControlError, ControlOutput, FilteredDerivative, LowPass, MissionController,
    PlantFeedback, DERIVATIVE_FILTER_POLE};
use crate::dynamics::rne::{arm_dynamics, interaction_wrench, rne_sweep, BaseMotion};
use crate::dynamics::{ArmParams, JointTorques, QuadrotorParams, SystemState};
use crate::rotor::BodyWrench;
use crate::spatial::Vec3;
use crate::trajectory::{MissionChannel, MissionSample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub kd: f64,
    pub ki: f64,
}

impl PidGains {
    pub fn new(kp: f64, kd: f64, ki: f64) -> Self {
        Self { kp, kd, ki }
    }
}

/// Gains of the six feedback-linearized loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblGains {
    pub altitude: PidGains,
    pub roll: PidGains,
    pub pitch: PidGains,
    pub yaw: PidGains,
    pub joint1: PidGains,
    pub joint2: PidGains,
}

impl FblGains {
    /// Tuned gains of the full vehicle-plus-arm loops.
    pub fn reference() -> Self {
        Self {
            altitude: PidGains::new(16.0, 8.0, 0.01),
            roll: PidGains::new(100.0, 8.0, 10.0),
            pitch: PidGains::new(100.0, 8.0, 10.0),
            yaw: PidGains::new(16.0, 8.0, 0.01),
            joint1: PidGains::new(16.0, 8.0, 0.01),
            joint2: PidGains::new(16.0, 8.0, 0.01),
        }
    }

    /// Attitude-only gains used on the bench stabilization rig.
    pub fn attitude_rig() -> Self {
        Self {
            altitude: PidGains::new(0.0, 0.0, 0.0),
            roll: PidGains::new(100.0, 1.0, 10.0),
            pitch: PidGains::new(85.0, 1.0, 10.0),
            yaw: PidGains::new(0.01, 260.0, 250.0),
            joint1: PidGains::new(0.0, 0.0, 0.0),
            joint2: PidGains::new(0.0, 0.0, 0.0),
        }
    }
}

/// One PID loop with its integral state. The integral contribution is clamped
/// to `authority` so a stuck loop cannot wind up past its actuator budget.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PidLoop {
    gains: PidGains,
    integral: f64,
    authority: f64,
}

impl PidLoop {
    fn new(gains: PidGains, authority: f64) -> Self {
        Self {
            gains,
            integral: 0.0,
            authority,
        }
    }

    fn control(&mut self, error: f64, error_rate: f64, dt: f64) -> f64 {
        self.integral += error * dt;
        if self.gains.ki > 0.0 {
            let bound = self.authority / self.gains.ki;
            self.integral = self.integral.clamp(-bound, bound);
        }
        self.gains.kp * error + self.gains.kd * error_rate + self.gains.ki * self.integral
    }
}

/// Pole of the low-pass on the interaction-wrench estimate [rad/s].
pub const WRENCH_ESTIMATE_POLE: f64 = 50.0;

/// Integral-action budgets, roughly half the respective actuator authority.
const ALTITUDE_INTEGRAL_AUTHORITY: f64 = 10.0; // N
const ATTITUDE_INTEGRAL_AUTHORITY: f64 = 1.0; // N m
const JOINT_INTEGRAL_AUTHORITY: f64 = 0.5; // N m

/// Desired roll and pitch from the desired translational accelerations and
/// yaw, with the arm's (mass-normalized) interaction force compensated.
///
/// Returns `(roll, pitch, clamped)`; `clamped` reports that the roll ratio
/// was driven past +-1 by an extreme demand and saturated.
pub fn desired_attitude(
    desired_accel: &Vec3,
    desired_yaw: f64,
    interaction_force: &Vec3,
    mass: f64,
    gravity: f64,
) -> Result<(f64, f64, bool), ControlError> {
    let ax = desired_accel.x - interaction_force.x / mass;
    let ay = desired_accel.y - interaction_force.y / mass;
    let az = desired_accel.z + gravity - interaction_force.z / mass;
    let norm = (ax * ax + ay * ay + az * az).sqrt();
    if norm < 1e-9 {
        return Err(ControlError::FreeFallDemand);
    }
    let (sy, cy) = desired_yaw.sin_cos();
    let (roll, clamped) = clamped_asin((ax * sy - ay * cy) / norm);
    let pitch = (ax * cy + ay * sy).atan2(az);
    Ok((roll, pitch, clamped))
}

/// Arc sine with the argument clamped to [-1, 1]. The roll ratio is bounded
/// by 1 analytically, so the clamp only ever absorbs rounding overshoot; the
/// flag reports when it fired.
pub fn clamped_asin(ratio: f64) -> (f64, bool) {
    let clamped = ratio.abs() > 1.0;
    (ratio.clamp(-1.0, 1.0).asin(), clamped)
}

/// The full feedback-linearization controller.
pub struct FblController {
    quad: QuadrotorParams,
    arm_model: ArmParams,
    altitude: PidLoop,
    roll: PidLoop,
    pitch: PidLoop,
    yaw: PidLoop,
    joint1: PidLoop,
    joint2: PidLoop,
    roll_ref_rate: FilteredDerivative,
    roll_ref_accel: FilteredDerivative,
    pitch_ref_rate: FilteredDerivative,
    pitch_ref_accel: FilteredDerivative,
    // The compensated interaction wrench is low-passed: reacting to it at the
    // raw tick rate closes an unstable loop through its own one-tick lag.
    interaction_force: [LowPass; 3],
    interaction_moment: [LowPass; 3],
}

impl FblController {
    pub fn new(gains: FblGains, quad: QuadrotorParams, arm_model: ArmParams) -> Self {
        Self {
            quad,
            arm_model,
            altitude: PidLoop::new(gains.altitude, ALTITUDE_INTEGRAL_AUTHORITY),
            roll: PidLoop::new(gains.roll, ATTITUDE_INTEGRAL_AUTHORITY),
            pitch: PidLoop::new(gains.pitch, ATTITUDE_INTEGRAL_AUTHORITY),
            yaw: PidLoop::new(gains.yaw, ATTITUDE_INTEGRAL_AUTHORITY),
            joint1: PidLoop::new(gains.joint1, JOINT_INTEGRAL_AUTHORITY),
            joint2: PidLoop::new(gains.joint2, JOINT_INTEGRAL_AUTHORITY),
            roll_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            roll_ref_accel: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            pitch_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            pitch_ref_accel: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            interaction_force: [LowPass::new(WRENCH_ESTIMATE_POLE); 3],
            interaction_moment: [LowPass::new(WRENCH_ESTIMATE_POLE); 3],
        }
    }

    pub fn reference(quad: QuadrotorParams, arm_model: ArmParams) -> Self {
        Self::new(FblGains::reference(), quad, arm_model)
    }
}

impl MissionController for FblController {
    fn step(
        &mut self,
        _t: f64,
        refs: &MissionSample,
        state: &SystemState,
        feedback: &PlantFeedback,
        dt: f64,
    ) -> Result<ControlOutput, ControlError> {
        let att = state.attitude;
        let tilt = att.roll.cos() * att.pitch.cos();
        if tilt <= 0.0 {
            return Err(ControlError::AttitudeOutOfRange);
        }
        let q = &self.quad;
        let rates = state.attitude_rate;
        let spin = feedback.rotor_speed_sum;

        let x = refs.get(MissionChannel::X);
        let y = refs.get(MissionChannel::Y);
        let z = refs.get(MissionChannel::Z);
        let yaw_ref = refs.get(MissionChannel::Yaw);

        // Joint loops linearized through the nominal arm model, evaluated at
        // the same lagged vehicle acceleration the plant integrates with so
        // the bias cancellation is exact while the model matches the plant.
        let base = BaseMotion::from_state(state, &feedback.base_accel);
        let arm_dyn = arm_dynamics(
            &base,
            &state.joints,
            &state.joint_rates,
            &self.arm_model,
            q.gravity,
        );
        let arm_terms = arm_dyn.effective_terms();
        let j1 = refs.get(MissionChannel::Joint1);
        let j2 = refs.get(MissionChannel::Joint2);
        let u_j1 = j1.accel
            + self.joint1.control(
                j1.value - state.joints.joint1,
                j1.rate - state.joint_rates[0],
                dt,
            );
        let u_j2 = j2.accel
            + self.joint2.control(
                j2.value - state.joints.joint2,
                j2.rate - state.joint_rates[1],
                dt,
            );
        let torque1 = arm_terms[0].inertia * u_j1 - arm_terms[0].load;
        let torque2 = arm_terms[1].inertia * u_j2 - arm_terms[1].load;
        let joint_torques = JointTorques {
            joint1: torque1,
            joint2: torque2,
        };

        // Observer-free interaction estimate: the nominal arm model's own
        // prediction of the wrench it applies to the vehicle under the
        // commanded torques. A grasped payload is invisible here. Low-passed
        // because reacting to the estimate at the raw tick rate closes an
        // unstable loop through its one-tick lag.
        let predicted_acc = arm_dyn
            .joint_accelerations(&joint_torques)
            .ok_or(ControlError::AttitudeOutOfRange)?;
        let sweep = rne_sweep(
            &base,
            &state.joints,
            &state.joint_rates,
            &predicted_acc,
            &self.arm_model,
            q.gravity,
        );
        let predicted = interaction_wrench(&sweep, &att, self.arm_model.base_length);
        let force_est = Vec3::new(
            self.interaction_force[0].update(predicted.force_inertial.x, dt),
            self.interaction_force[1].update(predicted.force_inertial.y, dt),
            self.interaction_force[2].update(predicted.force_inertial.z, dt),
        );
        let moment_est = Vec3::new(
            self.interaction_moment[0].update(predicted.moment_body.x, dt),
            self.interaction_moment[1].update(predicted.moment_body.y, dt),
            self.interaction_moment[2].update(predicted.moment_body.z, dt),
        );

        // Attitude setpoints from the thrust-direction constraint, evaluated
        // on the desired trajectory.
        let accel_d = Vec3::new(x.accel, y.accel, z.accel);
        let (roll_d, pitch_d, _) = desired_attitude(
            &accel_d,
            yaw_ref.value,
            &force_est,
            q.mass,
            q.gravity,
        )?;
        let roll_d_rate = self.roll_ref_rate.update(roll_d, dt);
        let roll_d_accel = self.roll_ref_accel.update(roll_d_rate, dt);
        let pitch_d_rate = self.pitch_ref_rate.update(pitch_d, dt);
        let pitch_d_accel = self.pitch_ref_accel.update(pitch_d_rate, dt);

        // Altitude: cancel gravity, tilt loss and the arm's vertical pull.
        let u_z = z.accel
            + self
                .altitude
                .control(z.value - state.position.z, z.rate - state.velocity.z, dt);
        let thrust = (q.mass * u_z + q.mass * q.gravity - force_est.z) / tilt;

        // Attitude loops with gyroscopic and interaction compensation.
        let u_roll = roll_d_accel
            + self
                .roll
                .control(roll_d - att.roll, roll_d_rate - rates.x, dt);
        let roll_moment = q.inertia_x * u_roll
            - rates.y * rates.z * (q.inertia_y - q.inertia_z)
            + q.rotor_inertia * rates.y * spin
            - moment_est.x;

        let u_pitch = pitch_d_accel
            + self
                .pitch
                .control(pitch_d - att.pitch, pitch_d_rate - rates.y, dt);
        let pitch_moment = q.inertia_y * u_pitch
            - rates.x * rates.z * (q.inertia_z - q.inertia_x)
            - q.rotor_inertia * rates.x * spin
            - moment_est.y;

        let u_yaw = yaw_ref.accel
            + self
                .yaw
                .control(yaw_ref.value - att.yaw, yaw_ref.rate - rates.z, dt);
        let yaw_moment = q.inertia_z * u_yaw - rates.x * rates.y * (q.inertia_x - q.inertia_y)
            - moment_est.z;

        Ok(ControlOutput {
            wrench: BodyWrench::new(thrust, roll_moment, pitch_moment, yaw_moment),
            joint_torques,
        })
    }
}
