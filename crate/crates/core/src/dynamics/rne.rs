//! Recursive Newton-Euler dynamics of the 2-link arm.
//!
//! The vehicle body is the moving base of the chain. The outward sweep
//! propagates velocities and accelerations from the base link through the two
//! joints; the inward sweep propagates forces and moments back, yielding the
//! joint torques and the reaction wrench the arm exerts on the vehicle.
//!
//! Frame bookkeeping: quantities named `*_in_k` are expressed in link frame k.
//! `r_link` points from the proximal to the distal joint of a link; `r_cm`
//! points from the distal joint back to the link's center of mass.

use super::{ArmParams, BaseAcceleration, InteractionWrench, SystemState};
use crate::kinematics::JointAngles;
use crate::spatial::{rotation_from_euler, skew, EulerAngles, Mat3, Vec3};
use nalgebra::{Matrix2, Vector2};

/// Motion of the arm's base (the vehicle body), expressed in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMotion {
    pub attitude: EulerAngles,
    pub linear_vel: Vec3,
    pub angular_vel: Vec3,
    pub linear_acc: Vec3,
    pub angular_acc: Vec3,
}

impl BaseMotion {
    /// Base motion from a vehicle state plus the (lagged) vehicle
    /// accelerations from the previous integration step.
    pub fn from_state(state: &SystemState, accel: &BaseAcceleration) -> Self {
        let to_body = rotation_from_euler(&state.attitude);
        let linear_vel = to_body * state.velocity;
        let angular_vel = state.attitude_rate;
        // d/dt of the body-frame velocity picks up a transport term.
        let linear_acc = to_body * accel.linear_inertial - angular_vel.cross(&linear_vel);
        Self {
            attitude: state.attitude,
            linear_vel,
            angular_vel,
            linear_acc,
            angular_acc: accel.euler,
        }
    }

    /// A base that is rigidly held at the given attitude.
    pub fn frozen(attitude: EulerAngles) -> Self {
        Self {
            attitude,
            linear_vel: Vec3::zeros(),
            angular_vel: Vec3::zeros(),
            linear_acc: Vec3::zeros(),
            angular_acc: Vec3::zeros(),
        }
    }
}

/// Rotation taking body-frame vectors into arm frame 0 (fixed mounting).
pub fn body_to_frame0() -> Mat3 {
    Mat3::new(
        0.0, -1.0, 0.0, //
        0.0, 0.0, -1.0, //
        1.0, 0.0, 0.0,
    )
}

/// Rotation taking frame-0 vectors into frame 1 at the given joint-1 angle.
fn frame0_to_frame1(joint1: f64) -> Mat3 {
    let (s, c) = joint1.sin_cos();
    Mat3::new(
        c, s, 0.0, //
        0.0, 0.0, 1.0, //
        s, -c, 0.0,
    )
}

/// Rotation taking frame-1 vectors into frame 2 at the given joint-2 angle.
fn frame1_to_frame2(joint2: f64) -> Mat3 {
    let (s, c) = joint2.sin_cos();
    Mat3::new(
        c, s, 0.0, //
        -s, c, 0.0, //
        0.0, 0.0, 1.0,
    )
}

/// All intermediate quantities of one Newton-Euler pass.
#[derive(Debug, Clone, Copy)]
pub struct RneWorkspace {
    /// Angular velocity of frames 0..2, each in its own frame.
    pub angular_vel: [Vec3; 3],
    pub angular_acc: [Vec3; 3],
    pub linear_vel: [Vec3; 3],
    pub linear_acc: [Vec3; 3],
    /// Center-of-mass accelerations of links 1 and 2.
    pub cm_acc: [Vec3; 2],
    /// Inertial force -m*a of links 1 and 2.
    pub inertial_force: [Vec3; 2],
    /// Inertial moment -(I*wd + w x I*w) of links 1 and 2.
    pub inertial_moment: [Vec3; 2],
    /// Force each link receives from its parent, in the link's own frame.
    pub joint_force: [Vec3; 2],
    /// Moment each link receives from its parent, in the link's own frame.
    pub joint_moment: [Vec3; 2],
    /// Force on link 1 from the base, expressed in frame 0.
    pub base_force: Vec3,
    /// Moment on link 1 from the base, expressed in frame 0.
    pub base_moment: Vec3,
    /// Actuator torques about the two joint axes, joint friction included.
    pub joint_torques: [f64; 2],
}

/// One full Newton-Euler pass at the given trial joint accelerations.
pub fn rne_sweep(
    base: &BaseMotion,
    joints: &JointAngles,
    joint_rates: &[f64; 2],
    joint_accel: &[f64; 2],
    arm: &ArmParams,
    gravity: f64,
) -> RneWorkspace {
    let to_body = rotation_from_euler(&base.attitude);
    let to_frame0 = body_to_frame0();
    let to_frame1 = frame0_to_frame1(joints.joint1);
    let to_frame2 = frame1_to_frame2(joints.joint2);
    let inertial_to_1 = to_frame1 * to_frame0 * to_body;
    let inertial_to_2 = to_frame2 * inertial_to_1;

    let g_inertial = Vec3::new(0.0, 0.0, -gravity);
    let gravity_in = [inertial_to_1 * g_inertial, inertial_to_2 * g_inertial];

    let axis = Vec3::z();

    // Base link: rigid with the body, offset from the body origin.
    let w0 = to_frame0 * base.angular_vel;
    let wd0 = to_frame0 * base.angular_acc;
    let base_arm = Vec3::new(0.0, arm.base_length, 0.0);
    let v0 = to_frame0 * base.linear_vel + w0.cross(&base_arm);
    let vd0 = to_frame0 * base.linear_acc + wd0.cross(&base_arm) + w0.cross(&w0.cross(&base_arm));

    let links = [&arm.link1, &arm.link2];
    let rotations = [to_frame1, to_frame2];

    let mut w = [w0, Vec3::zeros(), Vec3::zeros()];
    let mut wd = [wd0, Vec3::zeros(), Vec3::zeros()];
    let mut v = [v0, Vec3::zeros(), Vec3::zeros()];
    let mut vd = [vd0, Vec3::zeros(), Vec3::zeros()];
    let mut cm_acc = [Vec3::zeros(); 2];
    let mut inertial_force = [Vec3::zeros(); 2];
    let mut inertial_moment = [Vec3::zeros(); 2];

    // Outward sweep.
    for i in 0..2 {
        let rot = rotations[i];
        let link = links[i];
        let r_link = Vec3::new(link.length, 0.0, 0.0);
        let r_cm = Vec3::new(-(link.length - link.cg_offset), 0.0, 0.0);
        let k = i + 1;
        w[k] = rot * (w[k - 1] + joint_rates[i] * axis);
        wd[k] = rot
            * (wd[k - 1] + joint_accel[i] * axis + w[k - 1].cross(&(joint_rates[i] * axis)));
        v[k] = rot * v[k - 1] + w[k].cross(&r_link);
        vd[k] = rot * vd[k - 1] + wd[k].cross(&r_link) + w[k].cross(&w[k].cross(&r_link));
        cm_acc[i] = vd[k] + wd[k].cross(&r_cm) + w[k].cross(&w[k].cross(&r_cm));
        inertial_force[i] = -link.mass * cm_acc[i];
        inertial_moment[i] = -link.inertia * wd[k] - w[k].cross(&(link.inertia * w[k]));
    }

    // Inward sweep; nothing pulls on the free end of link 2.
    let mut joint_force = [Vec3::zeros(); 2];
    let mut joint_moment = [Vec3::zeros(); 2];
    let mut child_force_here = Vec3::zeros();
    let mut child_moment_here = Vec3::zeros();
    for i in (0..2).rev() {
        let link = links[i];
        let r_link = Vec3::new(link.length, 0.0, 0.0);
        let r_cm = Vec3::new(-(link.length - link.cg_offset), 0.0, 0.0);
        joint_force[i] = child_force_here - link.mass * gravity_in[i] - inertial_force[i];
        joint_moment[i] = child_moment_here + (r_link + r_cm).cross(&joint_force[i])
            - r_cm.cross(&child_force_here)
            - inertial_moment[i];
        if i == 1 {
            // Express link 2's reaction in frame 1 for link 1's balance.
            let to_parent = rotations[1].transpose();
            child_force_here = to_parent * joint_force[1];
            child_moment_here = to_parent * joint_moment[1];
        }
    }

    // Joint torques are the axis components of the joint moments, each
    // expressed in the parent frame where the axis is defined.
    let moment_on_1_in_0 = to_frame1.transpose() * joint_moment[0];
    let force_on_1_in_0 = to_frame1.transpose() * joint_force[0];
    let moment_on_2_in_1 = to_frame2.transpose() * joint_moment[1];
    let torque1 = moment_on_1_in_0.z + arm.link1.friction * joint_rates[0];
    let torque2 = moment_on_2_in_1.z + arm.link2.friction * joint_rates[1];

    RneWorkspace {
        angular_vel: w,
        angular_acc: wd,
        linear_vel: v,
        linear_acc: vd,
        cm_acc,
        inertial_force,
        inertial_moment,
        joint_force,
        joint_moment,
        base_force: force_on_1_in_0,
        base_moment: moment_on_1_in_0,
        joint_torques: [torque1, torque2],
    }
}

/// Reaction wrench the arm applies to the vehicle, in body and inertial frames.
pub fn interaction_wrench(
    workspace: &RneWorkspace,
    attitude: &EulerAngles,
    base_length: f64,
) -> InteractionWrench {
    let frame0_to_body = body_to_frame0().transpose();
    let mount_point = Vec3::new(0.0, 0.0, -base_length);
    // The sweep computes the wrench the base applies to link 1; the vehicle
    // feels the opposite.
    let force_body = -(frame0_to_body * workspace.base_force);
    let moment_body =
        skew(&mount_point) * force_body - frame0_to_body * workspace.base_moment;
    let to_inertial = rotation_from_euler(attitude).transpose();
    InteractionWrench {
        force_body,
        moment_body,
        force_inertial: to_inertial * force_body,
    }
}

/// Joint-space form of the arm dynamics: `mass_matrix * qdd = tau - bias`,
/// with `bias` the torques required to sustain the current state at zero
/// joint acceleration (gravity, velocity products, base motion, friction).
#[derive(Debug, Clone, Copy)]
pub struct ArmDynamics {
    pub mass_matrix: Matrix2<f64>,
    pub bias_torques: Vector2<f64>,
}

/// Per-joint scalar form `inertia * qdd_i = tau_i + load_i` used by the
/// model-based control laws (cross-joint inertial coupling folded out).
#[derive(Debug, Clone, Copy)]
pub struct EffectiveJointTerms {
    pub inertia: f64,
    pub load: f64,
}

/// Extracts the joint-space mass matrix and bias through three sweeps:
/// one at zero joint acceleration and one per unit joint acceleration.
pub fn arm_dynamics(
    base: &BaseMotion,
    joints: &JointAngles,
    joint_rates: &[f64; 2],
    arm: &ArmParams,
    gravity: f64,
) -> ArmDynamics {
    let bias = rne_sweep(base, joints, joint_rates, &[0.0, 0.0], arm, gravity).joint_torques;
    let unit1 = rne_sweep(base, joints, joint_rates, &[1.0, 0.0], arm, gravity).joint_torques;
    let unit2 = rne_sweep(base, joints, joint_rates, &[0.0, 1.0], arm, gravity).joint_torques;
    ArmDynamics {
        mass_matrix: Matrix2::new(
            unit1[0] - bias[0],
            unit2[0] - bias[0],
            unit1[1] - bias[1],
            unit2[1] - bias[1],
        ),
        bias_torques: Vector2::new(bias[0], bias[1]),
    }
}

impl ArmDynamics {
    /// Solves for the joint accelerations under the applied torques.
    pub fn joint_accelerations(&self, applied: &super::JointTorques) -> Option<[f64; 2]> {
        let rhs = Vector2::new(applied.joint1, applied.joint2) - self.bias_torques;
        let sol = self.mass_matrix.try_inverse()? * rhs;
        Some([sol[0], sol[1]])
    }

    /// Diagonal per-joint terms for the control laws.
    pub fn effective_terms(&self) -> [EffectiveJointTerms; 2] {
        [
            EffectiveJointTerms {
                inertia: self.mass_matrix[(0, 0)],
                load: -self.bias_torques[0],
            },
            EffectiveJointTerms {
                inertia: self.mass_matrix[(1, 1)],
                load: -self.bias_torques[1],
            },
        ]
    }
}
