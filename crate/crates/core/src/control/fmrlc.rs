//! Adaptive fuzzy model-reference learning control.
//!
//! Each actuated channel gets a learnable Mamdani controller whose output
//! membership centers start at zero. A first-order reference model defines
//! the desired closed-loop response; the mismatch between model and plant
//! feeds a fixed fuzzy inverse model whose output shifts the centers of the
//! rules that were active on the previous tick. A slower auto-tuner rescales
//! the input gains to the reciprocal of the recent input maxima, keeping the
//! rule base focused on the live operating range.
//!
//! The outer x/y position loops stay direct fuzzy loops: they only map
//! position errors to desired tilt and need no adaptation.

use super::dflc::{body_frame_error, DflcGains, DflcLoop};
use super::{ControlError, ControlOutput, FilteredDerivative, MissionController, PlantFeedback,
    DERIVATIVE_FILTER_POLE};
use crate::dynamics::{JointTorques, SystemState};
use crate::fuzzy::{defuzzify_cog, infer, FuzzyVariable, RuleBase2d};
use crate::rotor::BodyWrench;
use crate::trajectory::{MissionChannel, MissionSample};

/// First-order reference model `1 / (tau s + 1)`, discretized exactly for a
/// zero-order-held input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceModel {
    pub time_constant: f64,
    pub output: f64,
}

impl ReferenceModel {
    pub fn new(time_constant: f64) -> Self {
        assert!(time_constant > 0.0);
        Self {
            time_constant,
            output: 0.0,
        }
    }

    /// Advances the model by `dt` toward the command `r` and returns the
    /// model output.
    pub fn step(&mut self, r: f64, dt: f64) -> f64 {
        let blend = 1.0 - (-dt / self.time_constant).exp();
        self.output += blend * (r - self.output);
        self.output
    }
}

/// Periodically rescales the controller input gains to the reciprocal of the
/// largest recent inputs, capped to keep a quiet loop from blowing the gains
/// up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoTuner {
    pub period: f64,
    pub error_gain_cap: f64,
    pub rate_gain_cap: f64,
    max_error: f64,
    max_rate: f64,
    next_update: f64,
}

impl AutoTuner {
    pub fn new(period: f64, error_gain_cap: f64, rate_gain_cap: f64) -> Self {
        Self {
            period,
            error_gain_cap,
            rate_gain_cap,
            max_error: 0.0,
            max_rate: 0.0,
            next_update: period,
        }
    }

    pub fn observe(&mut self, error: f64, rate: f64) {
        self.max_error = self.max_error.max(error.abs());
        self.max_rate = self.max_rate.max(rate.abs());
    }

    /// At the end of each window, sets the gains to the reciprocal window
    /// maxima (capped) and resets. Returns whether an update fired.
    pub fn try_update(&mut self, t: f64, error_scale: &mut f64, rate_scale: &mut f64) -> bool {
        // Half-tick slack so accumulated float time hits the boundary.
        if t < self.next_update - 1e-9 {
            return false;
        }
        *error_scale = (1.0 / self.max_error).min(self.error_gain_cap);
        *rate_scale = (1.0 / self.max_rate).min(self.rate_gain_cap);
        self.max_error = 0.0;
        self.max_rate = 0.0;
        self.next_update += self.period;
        true
    }
}

/// Scalings and time constants of one learning loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmrlcLoopGains {
    /// Initial error gain onto the normalized universe.
    pub error_scale: f64,
    /// Initial error-rate gain.
    pub rate_scale: f64,
    /// Output gain to actuator units.
    pub output_scale: f64,
    /// Model-tracking-error gain of the inverse model.
    pub model_error_scale: f64,
    /// Model-tracking-error-rate gain of the inverse model.
    pub model_rate_scale: f64,
    /// Output gain of the inverse model (learning rate).
    pub learning_scale: f64,
    /// Reference-model time constant [s].
    pub time_constant: f64,
    /// Auto-tuning window [s].
    pub tuning_period: f64,
}

/// Tuned scalings of the six learning loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmrlcGains {
    pub altitude: FmrlcLoopGains,
    pub roll: FmrlcLoopGains,
    pub pitch: FmrlcLoopGains,
    pub yaw: FmrlcLoopGains,
    pub joint1: FmrlcLoopGains,
    pub joint2: FmrlcLoopGains,
}

impl FmrlcGains {
    pub fn reference() -> Self {
        Self {
            altitude: FmrlcLoopGains {
                error_scale: 1.0 / 5.0,
                rate_scale: 1.0 / 10.0,
                output_scale: 16.5,
                model_error_scale: 1.0 / 60.0,
                model_rate_scale: 1.0 / 15.0,
                learning_scale: 3.0,
                time_constant: 0.03,
                tuning_period: 0.1,
            },
            roll: FmrlcLoopGains {
                error_scale: 2.0,
                rate_scale: 1.0,
                output_scale: 0.93,
                model_error_scale: 10.0,
                model_rate_scale: 10.0,
                learning_scale: 0.0029,
                time_constant: 0.01,
                tuning_period: 0.05,
            },
            pitch: FmrlcLoopGains {
                error_scale: 2.0,
                rate_scale: 1.0,
                output_scale: 0.93,
                model_error_scale: 10.0,
                model_rate_scale: 10.0,
                learning_scale: 0.0029,
                time_constant: 0.01,
                tuning_period: 0.05,
            },
            yaw: FmrlcLoopGains {
                error_scale: 1.0 / 3.0,
                rate_scale: 1.0 / 30.0,
                output_scale: 0.19,
                model_error_scale: 10.0,
                model_rate_scale: 10.0,
                learning_scale: 0.0019,
                time_constant: 0.01,
                tuning_period: 0.05,
            },
            joint1: FmrlcLoopGains {
                error_scale: 1.0 / 60.0,
                rate_scale: 1.0 / 1000.0,
                output_scale: 0.63,
                model_error_scale: 1.0 / 2.0,
                model_rate_scale: 1.0 / 2.0,
                learning_scale: 0.0063,
                time_constant: 0.1,
                tuning_period: 0.1,
            },
            joint2: FmrlcLoopGains {
                error_scale: 1.0 / 60.0,
                rate_scale: 1.0 / 1000.0,
                output_scale: 0.32,
                model_error_scale: 1.0 / 1.5,
                model_rate_scale: 1.0 / 1.5,
                learning_scale: 9.6e-4,
                time_constant: 0.1,
                tuning_period: 0.1,
            },
        }
    }
}

/// Number of membership functions per controller input.
const INPUT_SET_COUNT: usize = 11;
/// Full base width of the output membership functions.
const OUTPUT_BASE_WIDTH: f64 = 0.4;
/// Auto-tuned gains are capped at this multiple of their initial values.
const GAIN_CAP_FACTOR: f64 = 10.0;

/// One learning loop: reference model, learnable rule base, fixed inverse
/// model and auto-tuner.
#[derive(Debug, Clone, PartialEq)]
pub struct FmrlcLoop {
    pub error_scale: f64,
    pub rate_scale: f64,
    output_scale: f64,
    model_error_scale: f64,
    model_rate_scale: f64,
    learning_scale: f64,
    reference: ReferenceModel,
    rules: RuleBase2d,
    inverse: RuleBase2d,
    input_var: FuzzyVariable,
    tuner: AutoTuner,
    previous_active: Vec<(usize, usize)>,
}

impl FmrlcLoop {
    pub fn new(gains: &FmrlcLoopGains) -> Self {
        Self {
            error_scale: gains.error_scale,
            rate_scale: gains.rate_scale,
            output_scale: gains.output_scale,
            model_error_scale: gains.model_error_scale,
            model_rate_scale: gains.model_rate_scale,
            learning_scale: gains.learning_scale,
            reference: ReferenceModel::new(gains.time_constant),
            rules: RuleBase2d::zeros(INPUT_SET_COUNT, INPUT_SET_COUNT),
            inverse: RuleBase2d::inverse_model_11x11(),
            input_var: FuzzyVariable::uniform(INPUT_SET_COUNT, -1.0, 1.0),
            tuner: AutoTuner::new(
                gains.tuning_period,
                GAIN_CAP_FACTOR * gains.error_scale,
                GAIN_CAP_FACTOR * gains.rate_scale,
            ),
            previous_active: Vec::new(),
        }
    }

    /// Learned rule base (for dumps, warm starts and inspection).
    pub fn rules(&self) -> &RuleBase2d {
        &self.rules
    }

    /// Rules active at the most recent tick (the set the next learning
    /// update will shift).
    pub fn active_set(&self) -> &[(usize, usize)] {
        &self.previous_active
    }

    /// Installs a previously learned rule base.
    pub fn restore_rules(&mut self, rules: RuleBase2d) {
        assert_eq!(rules.rows(), INPUT_SET_COUNT);
        assert_eq!(rules.cols(), INPUT_SET_COUNT);
        self.rules = rules;
    }

    pub fn model_output(&self) -> f64 {
        self.reference.output
    }

    /// Inverse-model evaluation: maps the model-tracking error and its rate
    /// to the required shift of the active output centers.
    pub fn inverse_model(&self, model_error: f64, model_error_rate: f64) -> f64 {
        let fe = self.input_var.fuzzify(self.model_error_scale * model_error);
        let fc = self
            .input_var
            .fuzzify(self.model_rate_scale * model_error_rate);
        let (p, _) = defuzzify_cog(&infer(&self.inverse, &fe, &fc), OUTPUT_BASE_WIDTH);
        self.learning_scale * p
    }

    /// Shifts the centers of the rules in the given active set by `p`.
    pub fn update_knowledge_base(&mut self, active: &[(usize, usize)], p: f64) {
        for &(i, j) in active {
            self.rules.shift_clamped(i, j, p);
        }
    }

    /// One control tick: reference model, learning, control and auto-tuning.
    /// `r_rate` and `y_rate` are the reference and measured signal rates; the
    /// fast loops cannot afford numerical-differentiation lag.
    pub fn step(&mut self, t: f64, r: f64, r_rate: f64, y: f64, y_rate: f64, dt: f64) -> f64 {
        let ym = self.reference.step(r, dt);
        let model_error = ym - y;
        // Error rate from the model's own differential equation and the
        // measured plant rate.
        let model_rate = (r - ym) / self.reference.time_constant - y_rate;
        let p = self.inverse_model(model_error, model_rate);
        // The shift lands on the rules that produced the previous output.
        let active = std::mem::take(&mut self.previous_active);
        self.update_knowledge_base(&active, p);

        let error = r - y;
        let rate = r_rate - y_rate;
        let fe = self.input_var.fuzzify(self.error_scale * error);
        let fc = self.input_var.fuzzify(self.rate_scale * rate);
        self.previous_active = fe
            .iter()
            .flat_map(|&(i, _)| fc.iter().map(move |&(j, _)| (i, j)))
            .collect();
        let (u, _) = defuzzify_cog(&infer(&self.rules, &fe, &fc), OUTPUT_BASE_WIDTH);

        self.tuner.observe(error, rate);
        self.tuner
            .try_update(t + dt, &mut self.error_scale, &mut self.rate_scale);
        self.output_scale * u
    }
}

/// The six learning loops plus the fixed x/y outer position loops.
pub struct FmrlcController {
    x: DflcLoop,
    y: DflcLoop,
    roll_ref_rate: FilteredDerivative,
    pitch_ref_rate: FilteredDerivative,
    pub altitude: FmrlcLoop,
    pub roll: FmrlcLoop,
    pub pitch: FmrlcLoop,
    pub yaw: FmrlcLoop,
    pub joint1: FmrlcLoop,
    pub joint2: FmrlcLoop,
}

impl FmrlcController {
    pub fn new(gains: FmrlcGains, outer: DflcGains) -> Self {
        Self {
            x: DflcLoop::new(outer.x, 0.0),
            y: DflcLoop::new(outer.y, 0.0),
            roll_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            pitch_ref_rate: FilteredDerivative::new(DERIVATIVE_FILTER_POLE),
            altitude: FmrlcLoop::new(&gains.altitude),
            roll: FmrlcLoop::new(&gains.roll),
            pitch: FmrlcLoop::new(&gains.pitch),
            yaw: FmrlcLoop::new(&gains.yaw),
            joint1: FmrlcLoop::new(&gains.joint1),
            joint2: FmrlcLoop::new(&gains.joint2),
        }
    }

    pub fn reference() -> Self {
        Self::new(FmrlcGains::reference(), DflcGains::reference())
    }

    /// The six learning loops in mission-channel order (altitude, attitude,
    /// joints), for dumping or restoring learned rule bases.
    pub fn loops(&self) -> [(&'static str, &FmrlcLoop); 6] {
        [
            ("z", &self.altitude),
            ("roll", &self.roll),
            ("pitch", &self.pitch),
            ("yaw", &self.yaw),
            ("joint1", &self.joint1),
            ("joint2", &self.joint2),
        ]
    }

    pub fn loop_mut(&mut self, name: &str) -> Option<&mut FmrlcLoop> {
        match name {
            "z" => Some(&mut self.altitude),
            "roll" => Some(&mut self.roll),
            "pitch" => Some(&mut self.pitch),
            "yaw" => Some(&mut self.yaw),
            "joint1" => Some(&mut self.joint1),
            "joint2" => Some(&mut self.joint2),
            _ => None,
        }
    }
}

impl MissionController for FmrlcController {
    fn step(
        &mut self,
        t: f64,
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
        // The outer loops' setpoints feed the attitude reference models.
        let pitch_d = self.x.evaluate(bx, bxr);
        let roll_d = self.y.evaluate(by, byr);
        let roll_d_rate = self.roll_ref_rate.update(roll_d, dt);
        let pitch_d_rate = self.pitch_ref_rate.update(pitch_d, dt);
        let rates = state.attitude_rate;

        let z_ref = refs.get(MissionChannel::Z);
        let yaw_ref = refs.get(MissionChannel::Yaw);
        let j1_ref = refs.get(MissionChannel::Joint1);
        let j2_ref = refs.get(MissionChannel::Joint2);
        let thrust = self.altitude.step(
            t,
            z_ref.value,
            z_ref.rate,
            state.position.z,
            state.velocity.z,
            dt,
        );
        let roll_moment = self
            .roll
            .step(t, roll_d, roll_d_rate, state.attitude.roll, rates.x, dt);
        let pitch_moment =
            self.pitch
                .step(t, pitch_d, pitch_d_rate, state.attitude.pitch, rates.y, dt);
        let yaw_moment = self.yaw.step(
            t,
            yaw_ref.value,
            yaw_ref.rate,
            state.attitude.yaw,
            rates.z,
            dt,
        );
        let torque1 = self.joint1.step(
            t,
            j1_ref.value,
            j1_ref.rate,
            state.joints.joint1,
            state.joint_rates[0],
            dt,
        );
        let torque2 = self.joint2.step(
            t,
            j2_ref.value,
            j2_ref.rate,
            state.joints.joint2,
            state.joint_rates[1],
            dt,
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
