//! # ams-core
//!
//! Deterministic simulation and control library for an aerial manipulation
//! system: a quadrotor carrying a 2-DOF serial manipulator under its belly.
//!
//! The library covers the full pipeline needed to fly payload pick/place
//! missions in simulation:
//!
//! - [`spatial`]: Euler-angle/rotation algebra, rate Jacobian, homogeneous
//!   transforms and the skew operator.
//! - [`kinematics`]: DH chain of the arm, forward kinematics of the end
//!   effector in the inertial frame, and the three-case inverse kinematics.
//! - [`rotor`]: per-rotor PWM/speed/thrust/drag maps, the control mixer and
//!   its inverse.
//! - [`dynamics`]: coupled quadrotor + manipulator equations of motion,
//!   recursive Newton-Euler arm dynamics, interaction wrench, payload
//!   parameter switching.
//! - [`trajectory`]: quintic point-to-point references and the multi-region
//!   pick/place mission builder.
//! - [`fuzzy`]: Mamdani inference with triangular membership functions and
//!   center-of-gravity defuzzification.
//! - [`control`]: three controller stacks — feedback-linearization PID,
//!   direct fuzzy logic, and adaptive fuzzy model-reference learning control.
//! - [`sim`]: fixed-step RK4 closed-loop simulation with payload events and
//!   CSV logging.
//! - [`identify`]: least-squares identification of the rotor maps.
//! - [`config`]: plain-text file formats (calibration, parameters, missions,
//!   scenarios).



pub mod config;
pub mod control;
pub mod dynamics;
pub mod fuzzy;
pub mod identify;

pub mod kinematics;
pub mod rotor;
pub mod sim;

pub mod spatial;
pub mod trajectory;

/// Standard gravity [m/s^2] used throughout unless a parameter file overrides it.
pub const STANDARD_GRAVITY: f64 = 9.81;
