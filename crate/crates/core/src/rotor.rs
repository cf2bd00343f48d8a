//! Rotor assembly maps and the control mixer.
//!
//! Each rotor carries two identified models: linear fits from the PWM command
//! to squared speed, thrust and drag moment, and quadratic thrust/moment laws
//! in the rotor speed. The mixer allocates a commanded body wrench to the four
//! rotors through the quadratic laws; the PWM maps close the loop down to the
//! actual motor commands.
//!
//! Unit note: the bench thrust fits were taken in gram-force. The calibration
//! loader converts them to newtons exactly once, so everything in this module
//! is SI.

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

pub const PWM_MIN: f64 = 1000.0;
pub const PWM_MAX: f64 = 2000.0;

/// Conversion applied to thrust-fit coefficients when a calibration declares
/// them in gram-force.
pub const GRAM_FORCE_TO_NEWTON: f64 = 9.81e-3;

#[derive(Debug, Error, PartialEq)]
pub enum RotorError {
    #[error("rotor speed must be positive to derive the drag moment from power")]
    ZeroSpeed,
    #[error("allocation matrix is singular")]
    SingularMatrix,
    #[error("PWM command {0} outside [{PWM_MIN}, {PWM_MAX}] us")]
    PwmOutOfRange(f64),
}

/// Identified maps of one rotor assembly (ESC + motor + propeller).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorFit {
    /// Squared-speed fit: omega^2 = speed_slope * pwm + speed_intercept [rad^2/s^2].
    pub speed_slope: f64,
    pub speed_intercept: f64,
    /// Thrust fit in newtons: f = thrust_slope * pwm + thrust_intercept.
    pub thrust_slope: f64,
    pub thrust_intercept: f64,
    /// Drag-moment fit in newton-metres: m = moment_slope * pwm + moment_intercept.
    pub moment_slope: f64,
    pub moment_intercept: f64,
    /// Quadratic thrust law: f = thrust_coeff * omega^2 [kg m / rad^2].
    pub thrust_coeff: f64,
    /// Quadratic drag law: m = moment_coeff * omega^2 [kg m^2 / rad^2].
    pub moment_coeff: f64,
}

/// Calibration of the full rotor set plus the moment arm of the airframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorCalibration {
    pub rotors: [RotorFit; 4],
    /// Distance from the vehicle center of mass to each rotor axis [m].
    pub arm_length: f64,
}

/// Bench-identified linear fit coefficients; thrust fits in gram-force as
/// measured, converted to SI by the constructors below.
const SPEED_SLOPES: [f64; 4] = [420.5, 466.0, 411.4, 445.0];
const SPEED_INTERCEPTS: [f64; 4] = [-4.06e5, -4.43e5, -3.92e5, -4.13e5];
const THRUST_SLOPES_GF: [f64; 4] = [0.6566, 0.6029, 0.6805, 0.6119];
const THRUST_INTERCEPTS_GF: [f64; 4] = [-731.4, -674.4, -758.3, -660.5];
const MOMENT_SLOPES: [f64; 4] = [0.0001658, 0.0001348, 0.000172, 0.000141];
const MOMENT_INTERCEPTS: [f64; 4] = [-0.1462, -0.1178, -0.1577, -0.126];
const THRUST_COEFFS: [f64; 4] = [1.667e-5, 1.285e-5, 1.711e-5, 1.556e-5];
const MOMENT_COEFFS: [f64; 4] = [3.965e-7, 2.847e-7, 4.404e-7, 3.170e-7];

/// Moment arm of the reference airframe [m].
pub const REFERENCE_ARM_LENGTH: f64 = 223.5e-3;

impl RotorCalibration {
    /// Per-rotor bench calibration, for asymmetric-rotor studies.
    pub fn identified_per_rotor() -> Self {
        let mut rotors = [RotorFit {
            speed_slope: 0.0,
            speed_intercept: 0.0,
            thrust_slope: 0.0,
            thrust_intercept: 0.0,
            moment_slope: 0.0,
            moment_intercept: 0.0,
            thrust_coeff: 0.0,
            moment_coeff: 0.0,
        }; 4];
        for j in 0..4 {
            rotors[j] = RotorFit {
                speed_slope: SPEED_SLOPES[j],
                speed_intercept: SPEED_INTERCEPTS[j],
                thrust_slope: THRUST_SLOPES_GF[j] * GRAM_FORCE_TO_NEWTON,
                thrust_intercept: THRUST_INTERCEPTS_GF[j] * GRAM_FORCE_TO_NEWTON,
                moment_slope: MOMENT_SLOPES[j],
                moment_intercept: MOMENT_INTERCEPTS[j],
                thrust_coeff: THRUST_COEFFS[j],
                moment_coeff: MOMENT_COEFFS[j],
            };
        }
        Self {
            rotors,
            arm_length: REFERENCE_ARM_LENGTH,
        }
    }

    /// Simulation default: identical quadratic laws on all four rotors
    /// (rotor 1's coefficients), keeping the per-rotor linear PWM fits.
    pub fn identified_uniform() -> Self {
        let mut cal = Self::identified_per_rotor();
        for rotor in &mut cal.rotors {
            rotor.thrust_coeff = THRUST_COEFFS[0];
            rotor.moment_coeff = MOMENT_COEFFS[0];
        }
        cal
    }
}

/// Motor commands in microseconds, one per rotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwmCommand(pub [f64; 4]);

impl PwmCommand {
    /// Validates that every channel lies inside the ESC input range.
    pub fn checked(values: [f64; 4]) -> Result<Self, RotorError> {
        for &u in &values {
            if !(PWM_MIN..=PWM_MAX).contains(&u) {
                return Err(RotorError::PwmOutOfRange(u));
            }
        }
        Ok(Self(values))
    }
}

/// Rotor angular speeds [rad/s], non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorSpeeds(pub [f64; 4]);

/// Thrust and the three body moments commanded to (or realized by) the rotors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyWrench {
    /// Total thrust along the body z-axis [N].
    pub thrust: f64,
    /// Rolling moment about body x [N m].
    pub roll_moment: f64,
    /// Pitching moment about body y [N m].
    pub pitch_moment: f64,
    /// Yawing moment about body z [N m].
    pub yaw_moment: f64,
}

impl BodyWrench {
    pub fn new(thrust: f64, roll_moment: f64, pitch_moment: f64, yaw_moment: f64) -> Self {
        Self {
            thrust,
            roll_moment,
            pitch_moment,
            yaw_moment,
        }
    }

    fn to_vector(self) -> Vector4<f64> {
        Vector4::new(
            self.thrust,
            self.roll_moment,
            self.pitch_moment,
            self.yaw_moment,
        )
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Rotor speeds from PWM through the linear squared-speed fits. Commands below
/// the spin-up root give a negative squared speed; those clamp to zero and set
/// the per-rotor flag.
pub fn speed_from_pwm(cal: &RotorCalibration, pwm: &PwmCommand) -> (RotorSpeeds, [bool; 4]) {
    let mut speeds = [0.0; 4];
    let mut below = [false; 4];
    for j in 0..4 {
        let sq = cal.rotors[j].speed_slope * pwm.0[j] + cal.rotors[j].speed_intercept;
        if sq < 0.0 {
            below[j] = true;
        } else {
            speeds[j] = sq.sqrt();
        }
    }
    (RotorSpeeds(speeds), below)
}

/// Per-rotor thrust [N] from the quadratic law.
pub fn thrust_from_speed(cal: &RotorCalibration, speeds: &RotorSpeeds) -> [f64; 4] {
    std::array::from_fn(|j| cal.rotors[j].thrust_coeff * speeds.0[j] * speeds.0[j])
}

/// Per-rotor drag moment [N m] from the quadratic law.
pub fn moment_from_speed(cal: &RotorCalibration, speeds: &RotorSpeeds) -> [f64; 4] {
    std::array::from_fn(|j| cal.rotors[j].moment_coeff * speeds.0[j] * speeds.0[j])
}

/// Drag moment from consumed power: the power equals drag moment times speed.
pub fn drag_moment_from_power(power: f64, speed: f64) -> Result<f64, RotorError> {
    if speed <= 0.0 {
        return Err(RotorError::ZeroSpeed);
    }
    Ok(power / speed)
}

/// Linear map from PWM commands to the body wrench built from the fitted
/// thrust/moment lines: wrench = G * u + A.
pub fn wrench_from_pwm(cal: &RotorCalibration, pwm: &PwmCommand) -> BodyWrench {
    let (g, a) = pwm_allocation(cal);
    BodyWrench::from_vector(&(g * Vector4::from(pwm.0) + a))
}

fn pwm_allocation(cal: &RotorCalibration) -> (Matrix4<f64>, Vector4<f64>) {
    let d = cal.arm_length;
    let c: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].thrust_slope);
    let dd: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].thrust_intercept);
    let e: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].moment_slope);
    let h: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].moment_intercept);
    let g = Matrix4::new(
        c[0],
        c[1],
        c[2],
        c[3],
        0.0,
        -d * c[1],
        0.0,
        d * c[3],
        -d * c[0],
        0.0,
        d * c[2],
        0.0,
        -e[0],
        e[1],
        -e[2],
        e[3],
    );
    let a = Vector4::new(
        dd[0] + dd[1] + dd[2] + dd[3],
        d * (dd[3] - dd[1]),
        d * (dd[2] - dd[0]),
        -h[0] + h[1] - h[2] + h[3],
    );
    (g, a)
}

/// Inverse of [`wrench_from_pwm`]: u = G^-1 (wrench - A), clamped to the ESC
/// range. The flag reports whether any channel saturated.
pub fn pwm_from_wrench(
    cal: &RotorCalibration,
    wrench: &BodyWrench,
) -> Result<(PwmCommand, bool), RotorError> {
    let (g, a) = pwm_allocation(cal);
    let inv = g.try_inverse().ok_or(RotorError::SingularMatrix)?;
    let u = inv * (wrench.to_vector() - a);
    let mut clamped = [0.0; 4];
    let mut saturated = false;
    for j in 0..4 {
        clamped[j] = u[j].clamp(PWM_MIN, PWM_MAX);
        if clamped[j] != u[j] {
            saturated = true;
        }
    }
    Ok((PwmCommand(clamped), saturated))
}

fn speed_allocation(cal: &RotorCalibration) -> Matrix4<f64> {
    let d = cal.arm_length;
    let kf: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].thrust_coeff);
    let km: [f64; 4] = std::array::from_fn(|j| cal.rotors[j].moment_coeff);
    Matrix4::new(
        kf[0],
        kf[1],
        kf[2],
        kf[3],
        0.0,
        -d * kf[1],
        0.0,
        d * kf[3],
        -d * kf[0],
        0.0,
        d * kf[2],
        0.0,
        -km[0],
        km[1],
        -km[2],
        km[3],
    )
}

/// Allocates a wrench to squared rotor speeds through the quadratic laws.
/// Negative squared speeds (infeasible demands) clamp to zero with a flag;
/// the realized wrench then differs from the commanded one.
pub fn mixer_speeds_from_wrench(
    cal: &RotorCalibration,
    wrench: &BodyWrench,
) -> Result<([f64; 4], bool), RotorError> {
    let m = speed_allocation(cal);
    let inv = m.try_inverse().ok_or(RotorError::SingularMatrix)?;
    let sq = inv * wrench.to_vector();
    let mut out = [0.0; 4];
    let mut clamped = false;
    for j in 0..4 {
        if sq[j] < 0.0 {
            clamped = true;
        } else {
            out[j] = sq[j];
        }
    }
    Ok((out, clamped))
}

/// Rotor speeds (rad/s) from the squared-speed mixer output.
pub fn speeds_from_squared(squared: &[f64; 4]) -> RotorSpeeds {
    RotorSpeeds(std::array::from_fn(|j| squared[j].max(0.0).sqrt()))
}

/// Recomposes the body wrench realized by a set of rotor speeds.
pub fn wrench_from_speeds(cal: &RotorCalibration, speeds: &RotorSpeeds) -> BodyWrench {
    let f = thrust_from_speed(cal, speeds);
    let m = moment_from_speed(cal, speeds);
    let d = cal.arm_length;
    BodyWrench::new(
        f[0] + f[1] + f[2] + f[3],
        d * (f[3] - f[1]),
        d * (f[2] - f[0]),
        -m[0] + m[1] - m[2] + m[3],
    )
}

/// Signed speed sum of the counter-rotating pairs; drives the gyroscopic
/// coupling terms of the vehicle dynamics.
pub fn omega_bar(speeds: &RotorSpeeds) -> f64 {
    speeds.0[0] - speeds.0[1] + speeds.0[2] - speeds.0[3]
}
