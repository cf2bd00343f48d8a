//! Shared test utilities: a deterministic RNG and the independent oracles the
//! integration suites check the implementation against.
//!
//! Compiled once per test target, so each target uses a subset.
#![allow(dead_code)]

use ams_core::dynamics::ArmParams;
use ams_core::fuzzy::ClippedSet;
use ams_core::kinematics::{dh_chain, JointAngles};
use ams_core::spatial::{homogeneous, rotation_from_euler, rotation_part, translation_part,
    EulerAngles, Mat3, Transform4, Vec3};

/// SplitMix64: tiny, deterministic, good enough for test sampling.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// Numeric center-of-gravity oracle: integrates each clipped symmetric
/// triangle on a fine grid and aggregates per set, matching the analytic
/// formula's per-set aggregation semantics.
pub fn numeric_cog(sets: &[ClippedSet], base_width: f64) -> f64 {
    let half = base_width / 2.0;
    let n = 200_000usize;
    let mut area_total = 0.0;
    let mut moment_total = 0.0;
    for set in sets {
        let lo = set.center - half;
        let hi = set.center + half;
        let dx = (hi - lo) / n as f64;
        let mu = |x: f64| -> f64 {
            let tri = 1.0 - (x - set.center).abs() / half;
            tri.max(0.0).min(set.degree)
        };
        let mut area = 0.5 * (mu(lo) + mu(hi));
        let mut moment = 0.5 * (lo * mu(lo) + hi * mu(hi));
        for k in 1..n {
            let x = lo + k as f64 * dx;
            let m = mu(x);
            area += m;
            moment += x * m;
        }
        area_total += area * dx;
        moment_total += moment * dx;
    }
    if area_total == 0.0 {
        0.0
    } else {
        moment_total / area_total
    }
}

/// Derivatives of the two joint transforms with respect to their angles.
fn d_joint1_transform(joint1: f64, link1: f64) -> Transform4 {
    let (s, c) = joint1.sin_cos();
    Transform4::new(
        -s, 0.0, c, -link1 * s, //
        c, 0.0, s, link1 * c, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    )
}

fn d_joint2_transform(joint2: f64, link2: f64) -> Transform4 {
    let (s, c) = joint2.sin_cos();
    Transform4::new(
        -s, -c, 0.0, -link2 * s, //
        c, -s, 0.0, link2 * c, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 0.0,
    )
}

/// Unskew: extracts the vector of a skew-symmetric matrix.
fn unskew(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Geometry of one link's center of mass under the frozen-base chain:
/// 2-column position Jacobian, world rotation, and the 2-column body-frame
/// angular Jacobian, all analytic.
struct LinkGeometry {
    jacobian: [Vec3; 2],
    omega_body: [Vec3; 2],
}

fn link_geometry(
    attitude: &EulerAngles,
    joints: &JointAngles,
    arm: &ArmParams,
    link: usize,
) -> LinkGeometry {
    let base = homogeneous(
        &rotation_from_euler(attitude).transpose(),
        &Vec3::zeros(),
    );
    let [a_b0, a_01, a_12] = dh_chain(&arm.geometry(), joints);
    let stem = base * a_b0;
    let (transform, d1, d2, cm_offset) = if link == 0 {
        let t = stem * a_01;
        let d1 = stem * d_joint1_transform(joints.joint1, arm.link1.length);
        (
            t,
            d1,
            Transform4::zeros(),
            Vec3::new(-(arm.link1.length - arm.link1.cg_offset), 0.0, 0.0),
        )
    } else {
        let t = stem * a_01 * a_12;
        let d1 = stem * d_joint1_transform(joints.joint1, arm.link1.length) * a_12;
        let d2 = stem * a_01 * d_joint2_transform(joints.joint2, arm.link2.length);
        (
            t,
            d1,
            d2,
            Vec3::new(-(arm.link2.length - arm.link2.cg_offset), 0.0, 0.0),
        )
    };
    let rot = rotation_part(&transform);
    let mut jacobian = [Vec3::zeros(); 2];
    let mut omega_body = [Vec3::zeros(); 2];
    for (j, d) in [d1, d2].iter().enumerate() {
        let dr = rotation_part(d);
        jacobian[j] = translation_part(d) + dr * cm_offset;
        // dR/dq R^T is skew(omega_world) for unit joint rate.
        let omega_world = unskew(&(dr * rot.transpose()));
        omega_body[j] = rot.transpose() * omega_world;
    }
    LinkGeometry { jacobian, omega_body }
}

/// Joint-space mass matrix of the frozen-base arm, from the analytic
/// Jacobians (independent of the Newton-Euler recursion).
pub fn lagrangian_mass_matrix(
    attitude: &EulerAngles,
    joints: &JointAngles,
    arm: &ArmParams,
) -> [[f64; 2]; 2] {
    let mut m = [[0.0; 2]; 2];
    for (link_idx, params) in [&arm.link1, &arm.link2].into_iter().enumerate() {
        let geo = link_geometry(attitude, joints, arm, link_idx);
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += params.mass * geo.jacobian[i].dot(&geo.jacobian[j])
                    + geo.omega_body[i].dot(&(params.inertia * geo.omega_body[j]));
            }
        }
    }
    m
}

/// Gravity torque vector dV/dq from the analytic Jacobians.
pub fn lagrangian_gravity(
    attitude: &EulerAngles,
    joints: &JointAngles,
    arm: &ArmParams,
    gravity: f64,
) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (link_idx, params) in [&arm.link1, &arm.link2].into_iter().enumerate() {
        let geo = link_geometry(attitude, joints, arm, link_idx);
        for j in 0..2 {
            g[j] += params.mass * gravity * geo.jacobian[j].z;
        }
    }
    g
}

/// Joint torques of the frozen-base arm from the Lagrangian formulation:
/// tau = M qdd + (dM/dq qd) qd - 1/2 qd' dM/dq_j qd + dV/dq + friction.
/// The mass-matrix gradients come from central finite differences.
pub fn lagrangian_torques(
    attitude: &EulerAngles,
    joints: &JointAngles,
    joint_rates: &[f64; 2],
    joint_accel: &[f64; 2],
    arm: &ArmParams,
    gravity: f64,
) -> [f64; 2] {
    let h = 1e-6;
    let m = lagrangian_mass_matrix(attitude, joints, arm);
    let mut dm = [[[0.0; 2]; 2]; 2]; // dm[k][i][j] = dM_ij/dq_k
    for k in 0..2 {
        let mut plus = *joints;
        let mut minus = *joints;
        if k == 0 {
            plus.joint1 += h;
            minus.joint1 -= h;
        } else {
            plus.joint2 += h;
            minus.joint2 -= h;
        }
        let mp = lagrangian_mass_matrix(attitude, &plus, arm);
        let mm = lagrangian_mass_matrix(attitude, &minus, arm);
        for i in 0..2 {
            for j in 0..2 {
                dm[k][i][j] = (mp[i][j] - mm[i][j]) / (2.0 * h);
            }
        }
    }
    let grav = lagrangian_gravity(attitude, joints, arm, gravity);
    let friction = [arm.link1.friction, arm.link2.friction];
    let mut tau = [0.0; 2];
    for j in 0..2 {
        let mut value = grav[j] + friction[j] * joint_rates[j];
        for i in 0..2 {
            value += m[j][i] * joint_accel[i];
            for k in 0..2 {
                value += dm[k][j][i] * joint_rates[k] * joint_rates[i];
                value -= 0.5 * dm[j][i][k] * joint_rates[i] * joint_rates[k];
            }
        }
        tau[j] = value;
    }
    tau
}
