//! Euler-angle and rotation-matrix algebra shared by every other module.
//!
//! Conventions: the attitude is parameterized by roll (about x), pitch
//! (about y) and yaw (about z). `rotation_from_euler` returns the matrix
//! that maps inertial-frame vectors into the body frame; body angular rates
//! relate to Euler-angle rates through `euler_rate_jacobian`.

use nalgebra::{Matrix3, Matrix4, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
/// Homogeneous transform; the bottom row is `[0, 0, 0, 1]` by construction.
pub type Transform4 = Matrix4<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    /// Pitch is at +-pi/2 within tolerance; roll and yaw are not separable.
    #[error("gimbal lock: |pitch| = pi/2 within tolerance")]
    GimbalLock,
    #[error("matrix is not a rotation (orthonormality or determinant check failed)")]
    NotARotation,
}

/// Attitude as roll/pitch/yaw angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

/// Rotation mapping inertial-frame vectors into the body frame for the given
/// roll/pitch/yaw attitude.
pub fn rotation_from_euler(angles: &EulerAngles) -> Mat3 {
    let (sph, cph) = angles.roll.sin_cos();
    let (sth, cth) = angles.pitch.sin_cos();
    let (sps, cps) = angles.yaw.sin_cos();
    Mat3::new(
        cps * cth,
        sps * cth,
        -sth,
        -sps * cph + sph * sth * cps,
        cps * cph + sps * sth * sph,
        cth * sph,
        sps * sph + cps * sth * cph,
        -cps * sph + sps * sth * cph,
        cth * cph,
    )
}

/// Jacobian mapping Euler-angle rates to body angular rates. Singular at
/// |pitch| = pi/2; callers check `determinant()` (= cos(pitch)) when inverting.
pub fn euler_rate_jacobian(angles: &EulerAngles) -> Mat3 {
    let (sph, cph) = angles.roll.sin_cos();
    let (sth, cth) = angles.pitch.sin_cos();
    Mat3::new(
        1.0, 0.0, -sth, //
        0.0, cph, cth * sph, //
        0.0, -sph, cth * cph,
    )
}

/// Extracts roll/pitch/yaw from an inertial-to-body rotation matrix.
///
/// Returns `GimbalLock` when |pitch| = pi/2 within 1e-9 and `NotARotation`
/// when the matrix fails the orthonormality check.
pub fn euler_from_rotation(r: &Mat3) -> Result<EulerAngles, SpatialError> {
    if !is_rotation(r, 1e-6) {
        return Err(SpatialError::NotARotation);
    }
    let r13 = r[(0, 2)];
    if 1.0 - r13.abs() < 1e-9 {
        return Err(SpatialError::GimbalLock);
    }
    Ok(EulerAngles {
        roll: r[(1, 2)].atan2(r[(2, 2)]),
        pitch: (-r13).asin(),
        yaw: r[(0, 1)].atan2(r[(0, 0)]),
    })
}

/// Like [`euler_from_rotation`] but total: at gimbal lock the yaw/roll split
/// is not unique, so yaw is set to zero and roll absorbs the remainder.
pub fn euler_from_rotation_lossy(r: &Mat3) -> EulerAngles {
    match euler_from_rotation(r) {
        Ok(a) => a,
        Err(_) => EulerAngles {
            roll: r[(1, 0)].atan2(r[(1, 1)]),
            pitch: (-r[(0, 2)].clamp(-1.0, 1.0)).asin(),
            yaw: 0.0,
        },
    }
}

/// Skew-symmetric matrix of `v`, so that `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// True when `r * r^T = I` within `tol` and the determinant is positive.
pub fn is_rotation(r: &Mat3, tol: f64) -> bool {
    let gram = r * r.transpose();
    let mut dev: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev <= tol && r.determinant() > 0.0
}

/// Builds a homogeneous transform from a rotation block and a translation.
pub fn homogeneous(rotation: &Mat3, translation: &Vec3) -> Transform4 {
    let mut t = Transform4::identity();
    t.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
    t.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
    t
}

pub fn rotation_part(t: &Transform4) -> Mat3 {
    t.fixed_view::<3, 3>(0, 0).into_owned()
}

pub fn translation_part(t: &Transform4) -> Vec3 {
    t.fixed_view::<3, 1>(0, 3).into_owned()
}

/// Wraps an angle to the interval (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Smallest signed difference `a - b` wrapped to (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}
