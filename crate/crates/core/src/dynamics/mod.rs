//! Coupled equations of motion of the vehicle and the hanging arm.
//!
//! The vehicle follows Newton-Euler rigid-body dynamics driven by rotor
//! thrust/moments plus the interaction wrench the arm applies at its mount.
//! Attitude uses the small-variation model where Euler-angle rates stand in
//! for body rates, which keeps the rotational equations in diagonal form.
//!
//! The arm's dynamics come from the recursive Newton-Euler sweep in [`rne`];
//! the vehicle <-> arm acceleration coupling is broken by feeding the sweep
//! the vehicle accelerations of the previous integration step (one-step lag).

pub mod rne;

use crate::kinematics::{JointAngles, ManipulatorGeometry};
use crate::rotor::BodyWrench;
use crate::spatial::{rotation_from_euler, EulerAngles, Mat3, Vec3};
use crate::STANDARD_GRAVITY;
use rne::{arm_dynamics, interaction_wrench, rne_sweep, BaseMotion};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    /// The attitude left the region where the thrust direction model holds.
    #[error("attitude outside model validity region (cos(pitch)cos(roll) <= 0)")]
    ModelValidity,
    #[error("arm mass matrix is singular")]
    SingularMassMatrix,
}

/// Rigid-body parameters of the vehicle. The base-link mass of the arm mount
/// is folded into `mass`; only the two moving links enter the arm dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrotorParams {
    pub mass: f64,
    pub inertia_x: f64,
    pub inertia_y: f64,
    pub inertia_z: f64,
    /// Spin inertia of one rotor, for the gyroscopic coupling terms.
    pub rotor_inertia: f64,
    pub gravity: f64,
}

impl QuadrotorParams {
    /// Identified parameters of the reference vehicle.
    pub fn reference() -> Self {
        Self {
            mass: 1.0,
            inertia_x: 13.215e-3,
            inertia_y: 12.522e-3,
            inertia_z: 23.527e-3,
            rotor_inertia: 33.216e-6,
            gravity: STANDARD_GRAVITY,
        }
    }
}

/// One arm link: a slender beam with its center of mass `cg_offset` from the
/// proximal joint along the link axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub mass: f64,
    pub length: f64,
    pub cg_offset: f64,
    /// Inertia about the center of mass, in the link frame (x along the link).
    pub inertia: Mat3,
    /// Viscous joint friction [N m s/rad].
    pub friction: f64,
}

impl LinkParams {
    /// A uniform slender beam: centered mass, negligible inertia about its
    /// own axis.
    pub fn uniform_beam(mass: f64, length: f64, friction: f64) -> Self {
        let transverse = mass * length * length / 12.0;
        Self {
            mass,
            length,
            cg_offset: length / 2.0,
            inertia: Mat3::from_diagonal(&Vec3::new(0.0, transverse, transverse)),
            friction,
        }
    }
}

/// Parameters of the 2-link arm plus its rigid base link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    /// Length of the rigid base link from the vehicle belly to joint 1 [m].
    pub base_length: f64,
    /// Mass of the base link; carried by the vehicle body, recorded here for
    /// completeness of the parameter set.
    pub base_mass: f64,
    pub link1: LinkParams,
    pub link2: LinkParams,
}

/// Default viscous friction for the arm joints [N m s/rad].
pub const DEFAULT_JOINT_FRICTION: f64 = 1e-3;

impl ArmParams {
    /// Identified parameters of the reference arm.
    pub fn reference() -> Self {
        Self {
            base_length: 30e-3,
            base_mass: 30e-3,
            link1: LinkParams::uniform_beam(55e-3, 70e-3, DEFAULT_JOINT_FRICTION),
            link2: LinkParams::uniform_beam(112e-3, 85e-3, DEFAULT_JOINT_FRICTION),
        }
    }

    pub fn geometry(&self) -> ManipulatorGeometry {
        ManipulatorGeometry {
            base_offset: self.base_length,
            link1: self.link1.length,
            link2: self.link2.length,
        }
    }

    /// Combined mass of the two moving links.
    pub fn moving_mass(&self) -> f64 {
        self.link1.mass + self.link2.mass
    }
}

/// Link-2 parameters after rigidly grasping a point payload at the tip:
/// combined mass, shifted center of mass, and the parallel-axis inertia
/// growth on the two transverse axes. `mass = 0` returns the input untouched.
pub fn apply_payload(arm: &ArmParams, payload_mass: f64) -> ArmParams {
    if payload_mass == 0.0 {
        return *arm;
    }
    let link = &arm.link2;
    let total = link.mass + payload_mass;
    let new_cg = (link.mass * link.cg_offset + payload_mass * link.length) / total;
    let shift = link.mass * (new_cg - link.cg_offset).powi(2)
        + payload_mass * (link.length - new_cg).powi(2);
    let mut inertia = link.inertia;
    inertia[(1, 1)] += shift;
    inertia[(2, 2)] += shift;
    let mut out = *arm;
    out.link2 = LinkParams {
        mass: total,
        length: link.length,
        cg_offset: new_cg,
        inertia,
        friction: link.friction,
    };
    out
}

/// Full configuration and velocity of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    /// Vehicle position in the inertial frame [m].
    pub position: Vec3,
    /// Vehicle velocity in the inertial frame [m/s].
    pub velocity: Vec3,
    pub attitude: EulerAngles,
    /// Euler-angle rates, equated to body rates by the attitude model [rad/s].
    pub attitude_rate: Vec3,
    pub joints: JointAngles,
    pub joint_rates: [f64; 2],
}

/// Number of scalar states in [`SystemState`].
pub const STATE_DIM: usize = 16;

impl SystemState {
    pub fn zeros() -> Self {
        Self {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: EulerAngles::zero(),
            attitude_rate: Vec3::zeros(),
            joints: JointAngles::default(),
            joint_rates: [0.0; 2],
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
            self.attitude.roll,
            self.attitude.pitch,
            self.attitude.yaw,
            self.attitude_rate.x,
            self.attitude_rate.y,
            self.attitude_rate.z,
            self.joints.joint1,
            self.joints.joint2,
            self.joint_rates[0],
            self.joint_rates[1],
        ]
    }

    pub fn from_array(a: &[f64; STATE_DIM]) -> Self {
        Self {
            position: Vec3::new(a[0], a[1], a[2]),
            velocity: Vec3::new(a[3], a[4], a[5]),
            attitude: EulerAngles::new(a[6], a[7], a[8]),
            attitude_rate: Vec3::new(a[9], a[10], a[11]),
            joints: JointAngles::new(a[12], a[13]),
            joint_rates: [a[14], a[15]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Torques applied by the two joint actuators [N m].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointTorques {
    pub joint1: f64,
    pub joint2: f64,
}

/// Actuation of one physics step: rotor wrench, joint torques, and the signed
/// rotor speed sum driving the gyroscopic terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub wrench: BodyWrench,
    pub joint_torques: JointTorques,
    pub rotor_speed_sum: f64,
}

/// Wrench the arm applies to the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionWrench {
    pub force_body: Vec3,
    pub moment_body: Vec3,
    pub force_inertial: Vec3,
}

impl InteractionWrench {
    pub fn zeros() -> Self {
        Self {
            force_body: Vec3::zeros(),
            moment_body: Vec3::zeros(),
            force_inertial: Vec3::zeros(),
        }
    }
}

/// Vehicle accelerations carried across integration steps to close the
/// arm <-> vehicle coupling with a one-step lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseAcceleration {
    /// Linear acceleration in the inertial frame.
    pub linear_inertial: Vec3,
    /// Euler-angle accelerations (body angular acceleration in this model).
    pub euler: Vec3,
}

impl BaseAcceleration {
    pub fn zeros() -> Self {
        Self {
            linear_inertial: Vec3::zeros(),
            euler: Vec3::zeros(),
        }
    }
}

/// Angular accelerations of the vehicle under the given moments.
/// Pure Euler-equation form; no attitude-validity restriction.
pub fn rotational_accelerations(
    rates: &Vec3,
    wrench: &BodyWrench,
    rotor_speed_sum: f64,
    interaction_moment: &Vec3,
    params: &QuadrotorParams,
) -> Vec3 {
    let (p, q, r) = (rates.x, rates.y, rates.z);
    Vec3::new(
        (q * r * (params.inertia_y - params.inertia_z) - params.rotor_inertia * q * rotor_speed_sum
            + wrench.roll_moment
            + interaction_moment.x)
            / params.inertia_x,
        (p * r * (params.inertia_z - params.inertia_x) + params.rotor_inertia * p * rotor_speed_sum
            + wrench.pitch_moment
            + interaction_moment.y)
            / params.inertia_y,
        (p * q * (params.inertia_x - params.inertia_y) + wrench.yaw_moment + interaction_moment.z)
            / params.inertia_z,
    )
}

/// Linear acceleration of the vehicle in the inertial frame under thrust,
/// gravity and the arm's interaction force.
pub fn translational_accelerations(
    attitude: &EulerAngles,
    thrust: f64,
    interaction_force_inertial: &Vec3,
    params: &QuadrotorParams,
) -> Vec3 {
    let (sph, cph) = attitude.roll.sin_cos();
    let (sth, cth) = attitude.pitch.sin_cos();
    let (sps, cps) = attitude.yaw.sin_cos();
    let f = interaction_force_inertial;
    Vec3::new(
        (thrust * (cps * sth * cph + sps * sph) + f.x) / params.mass,
        (thrust * (sps * sth * cph - cps * sph) + f.y) / params.mass,
        -params.gravity + (thrust * cth * cph + f.z) / params.mass,
    )
}

/// Six vehicle accelerations (linear inertial, Euler-angle) under the given
/// actuation and interaction wrench. Errors outside the validity region.
pub fn quadrotor_accelerations(
    state: &SystemState,
    wrench: &BodyWrench,
    rotor_speed_sum: f64,
    interaction: &InteractionWrench,
    params: &QuadrotorParams,
) -> Result<(Vec3, Vec3), DynamicsError> {
    if state.attitude.pitch.cos() * state.attitude.roll.cos() <= 0.0 {
        return Err(DynamicsError::ModelValidity);
    }
    Ok((
        translational_accelerations(
            &state.attitude,
            wrench.thrust,
            &interaction.force_inertial,
            params,
        ),
        rotational_accelerations(
            &state.attitude_rate,
            wrench,
            rotor_speed_sum,
            &interaction.moment_body,
            params,
        ),
    ))
}

/// Everything one derivative evaluation produces: the state derivative plus
/// the vehicle accelerations and interaction wrench for the next step's lag.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeOutput {
    pub derivative: [f64; STATE_DIM],
    pub accelerations: BaseAcceleration,
    pub interaction: InteractionWrench,
    pub joint_accelerations: [f64; 2],
}

/// Time derivative of the full system state under the given actuation.
///
/// `lagged` supplies the vehicle accelerations of the previous integration
/// step, which seed the arm's base motion. Deterministic: equal inputs give
/// bit-equal outputs.
pub fn state_derivative(
    state: &SystemState,
    input: &ControlInput,
    quad: &QuadrotorParams,
    arm: &ArmParams,
    lagged: &BaseAcceleration,
) -> Result<DerivativeOutput, DynamicsError> {
    let base = BaseMotion::from_state(state, lagged);
    let dynamics = arm_dynamics(&base, &state.joints, &state.joint_rates, arm, quad.gravity);
    let joint_acc = dynamics
        .joint_accelerations(&input.joint_torques)
        .ok_or(DynamicsError::SingularMassMatrix)?;
    let workspace = rne_sweep(
        &base,
        &state.joints,
        &state.joint_rates,
        &joint_acc,
        arm,
        quad.gravity,
    );
    let interaction = interaction_wrench(&workspace, &state.attitude, arm.base_length);
    let (linear, angular) = quadrotor_accelerations(
        state,
        &input.wrench,
        input.rotor_speed_sum,
        &interaction,
        quad,
    )?;
    let derivative = [
        state.velocity.x,
        state.velocity.y,
        state.velocity.z,
        linear.x,
        linear.y,
        linear.z,
        state.attitude_rate.x,
        state.attitude_rate.y,
        state.attitude_rate.z,
        angular.x,
        angular.y,
        angular.z,
        state.joint_rates[0],
        state.joint_rates[1],
        joint_acc[0],
        joint_acc[1],
    ];
    Ok(DerivativeOutput {
        derivative,
        accelerations: BaseAcceleration {
            linear_inertial: linear,
            euler: angular,
        },
        interaction,
        joint_accelerations: joint_acc,
    })
}

/// Body-frame velocity of the vehicle for the current state.
pub fn body_velocity(state: &SystemState) -> Vec3 {
    rotation_from_euler(&state.attitude) * state.velocity
}
