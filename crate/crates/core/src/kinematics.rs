//! Kinematics of the 2-link manipulator hanging under the quadrotor.
//!
//! Frames: the arm base frame {0} is attached to the quadrotor body at an
//! offset `base_offset` below the center of mass; frames {1} and {2} follow
//! the links under the Denavit-Hartenberg convention. Joint 1 rotates about
//! the body x-axis, joint 2 about an axis that is perpendicular to it.
//!
//! Forward kinematics composes body pose and arm chain into the end-effector
//! pose in the inertial frame. Inverse kinematics recovers the quadrotor
//! motion variables (X, Y, Z, yaw) and the two joint angles from a desired
//! end-effector pose, assuming level attitude (roll = pitch = 0).

use crate::spatial::{
    euler_from_rotation_lossy, homogeneous, is_rotation, rotation_from_euler, rotation_part,
    translation_part, EulerAngles, Mat3, Transform4, Vec3,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("atan2 is undefined for (0, 0)")]
    AtanBothZero,
    #[error("orientation is not a valid rotation matrix")]
    InvalidRotation,
}

/// Link lengths of the manipulator in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulatorGeometry {
    /// Offset from the quadrotor center of mass down to the arm base joint.
    pub base_offset: f64,
    pub link1: f64,
    pub link2: f64,
}

impl Default for ManipulatorGeometry {
    fn default() -> Self {
        Self {
            base_offset: 30e-3,
            link1: 70e-3,
            link2: 85e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointAngles {
    pub joint1: f64,
    pub joint2: f64,
}

impl JointAngles {
    pub fn new(joint1: f64, joint2: f64) -> Self {
        Self { joint1, joint2 }
    }
}

/// One Denavit-Hartenberg row (d, a, alpha, theta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    pub theta: f64,
}

/// DH table of the arm: a fixed base row plus one row per revolute joint.
pub fn dh_table(geometry: &ManipulatorGeometry, joints: &JointAngles) -> [DhRow; 3] {
    use std::f64::consts::FRAC_PI_2;
    [
        DhRow {
            d: -geometry.base_offset,
            a: 0.0,
            alpha: -FRAC_PI_2,
            theta: -FRAC_PI_2,
        },
        DhRow {
            d: 0.0,
            a: geometry.link1,
            alpha: FRAC_PI_2,
            theta: joints.joint1,
        },
        DhRow {
            d: 0.0,
            a: geometry.link2,
            alpha: 0.0,
            theta: joints.joint2,
        },
    ]
}

/// Homogeneous transform of a single DH row.
pub fn dh_transform(row: &DhRow) -> Transform4 {
    let (st, ct) = row.theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Transform4::new(
        ct,
        -st * ca,
        st * sa,
        row.a * ct,
        st,
        ct * ca,
        -ct * sa,
        row.a * st,
        0.0,
        sa,
        ca,
        row.d,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

/// The three link transforms: body -> frame0, frame0 -> frame1, frame1 -> frame2.
pub fn dh_chain(geometry: &ManipulatorGeometry, joints: &JointAngles) -> [Transform4; 3] {
    let table = dh_table(geometry, joints);
    [
        dh_transform(&table[0]),
        dh_transform(&table[1]),
        dh_transform(&table[2]),
    ]
}

/// Quadrotor position and attitude in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadrotorPose {
    pub position: Vec3,
    pub attitude: EulerAngles,
}

/// End-effector pose in the inertial frame. The orientation uses the same
/// roll/pitch/yaw parameterization as the vehicle attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndEffectorPose {
    pub position: Vec3,
    pub orientation: EulerAngles,
}

/// Homogeneous transform from the body frame to the inertial frame.
pub fn body_to_inertial(pose: &QuadrotorPose) -> Transform4 {
    homogeneous(
        &rotation_from_euler(&pose.attitude).transpose(),
        &pose.position,
    )
}

/// Full transform from the end-effector frame to the inertial frame.
pub fn end_effector_transform(
    pose: &QuadrotorPose,
    joints: &JointAngles,
    geometry: &ManipulatorGeometry,
) -> Transform4 {
    let [a_b0, a_01, a_12] = dh_chain(geometry, joints);
    body_to_inertial(pose) * a_b0 * a_01 * a_12
}

/// End-effector pose in the inertial frame for a given vehicle pose and
/// joint configuration.
pub fn forward_kinematics(
    pose: &QuadrotorPose,
    joints: &JointAngles,
    geometry: &ManipulatorGeometry,
) -> EndEffectorPose {
    let t = end_effector_transform(pose, joints, geometry);
    let r_to_inertial = rotation_part(&t);
    EndEffectorPose {
        position: translation_part(&t),
        // Same convention as the vehicle attitude: angles of the matrix that
        // maps inertial vectors into the end-effector frame.
        orientation: euler_from_rotation_lossy(&r_to_inertial.transpose()),
    }
}

/// Which inverse-kinematics branch produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkCase {
    /// Generic orientation, positive sin(joint1) branch.
    Case1A,
    /// Generic orientation, negative sin(joint1) branch.
    Case1B,
    /// Degenerate orientation with joint1 = 0; yaw is free.
    Case2,
    /// Degenerate orientation with joint1 = pi; yaw is free.
    Case3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkSolution {
    /// Required quadrotor position.
    pub position: Vec3,
    /// Required quadrotor yaw.
    pub yaw: f64,
    pub joints: JointAngles,
    pub case: IkCase,
    /// Set for the degenerate cases where any yaw solves the pose; the yaw
    /// reported is the caller's preference (default 0).
    pub free_yaw: bool,
}

/// Quadrant-correct arc tangent on (-pi, pi]; errors when both arguments are zero.
pub fn atan2_checked(y: f64, x: f64) -> Result<f64, KinematicsError> {
    if y == 0.0 && x == 0.0 {
        return Err(KinematicsError::AtanBothZero);
    }
    let a = y.atan2(x);
    Ok(if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    })
}

/// Threshold below which the orientation is treated as degenerate (joint 1 at
/// 0 or pi) and the free-yaw branches apply.
const DEGENERATE_TOL: f64 = 1e-9;

/// Inverse kinematics from an end-effector pose expressed with Euler angles.
pub fn inverse_kinematics(
    pose: &EndEffectorPose,
    geometry: &ManipulatorGeometry,
    preferred_yaw: Option<f64>,
) -> Result<Vec<IkSolution>, KinematicsError> {
    let r_to_inertial = rotation_from_euler(&pose.orientation).transpose();
    inverse_kinematics_matrix(&r_to_inertial, &pose.position, geometry, preferred_yaw)
}

/// Inverse kinematics from the end-effector rotation matrix (end-effector
/// frame to inertial) and position. Solves orientation first, then position.
pub fn inverse_kinematics_matrix(
    r_to_inertial: &Mat3,
    position: &Vec3,
    geometry: &ManipulatorGeometry,
    preferred_yaw: Option<f64>,
) -> Result<Vec<IkSolution>, KinematicsError> {
    if !is_rotation(r_to_inertial, 1e-9) {
        return Err(KinematicsError::InvalidRotation);
    }
    let r = r_to_inertial;
    let r11 = r[(0, 0)];
    let r12 = r[(0, 1)];
    let r13 = r[(0, 2)];
    let r23 = r[(1, 2)];
    let r31 = r[(2, 0)];
    let r32 = r[(2, 1)];
    let r33 = r[(2, 2)].clamp(-1.0, 1.0);

    let mut solutions = Vec::with_capacity(2);
    if r13.abs() < DEGENERATE_TOL && r23.abs() < DEGENERATE_TOL {
        // Orthonormality forces r33 to +-1; yaw and joint 2 are only
        // determined through their sum (r33 = 1) or difference (r33 = -1).
        let yaw = preferred_yaw.unwrap_or(0.0);
        let combined = atan2_checked(r11, r12)?;
        let (joint1, joint2, case) = if r33 > 0.0 {
            (0.0, combined - yaw, IkCase::Case2)
        } else {
            (std::f64::consts::PI, combined + yaw, IkCase::Case3)
        };
        solutions.push(solve_position(
            position,
            geometry,
            yaw,
            JointAngles::new(joint1, joint2),
            case,
            true,
        ));
    } else {
        let root = (1.0 - r33 * r33).max(0.0).sqrt();
        // sin(joint1) > 0 branch.
        solutions.push(solve_position(
            position,
            geometry,
            atan2_checked(r13, -r23)?,
            JointAngles::new(atan2_checked(root, r33)?, atan2_checked(r32, -r31)?),
            IkCase::Case1A,
            false,
        ));
        // sin(joint1) < 0 branch.
        solutions.push(solve_position(
            position,
            geometry,
            atan2_checked(-r13, r23)?,
            JointAngles::new(atan2_checked(-root, r33)?, atan2_checked(-r32, r31)?),
            IkCase::Case1B,
            false,
        ));
    }
    Ok(solutions)
}

/// Inverse position: subtracts the arm offset (at level attitude) from the
/// end-effector position to recover the quadrotor position.
fn solve_position(
    ee_position: &Vec3,
    geometry: &ManipulatorGeometry,
    yaw: f64,
    joints: JointAngles,
    case: IkCase,
    free_yaw: bool,
) -> IkSolution {
    let (s1, c1) = joints.joint1.sin_cos();
    let (s2, c2) = joints.joint2.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let l0 = geometry.base_offset;
    let l1 = geometry.link1;
    let l2 = geometry.link2;
    let x = ee_position.x - (l1 * c1 * sy + l2 * cy * s2 + l2 * c1 * c2 * sy);
    let y = ee_position.y - (-l1 * cy * c1 + l2 * sy * s2 - l2 * cy * c1 * c2);
    let z = ee_position.z + l0 + l1 * s1 + l2 * c2 * s1;
    IkSolution {
        position: Vec3::new(x, y, z),
        yaw,
        joints,
        case,
        free_yaw,
    }
}
