//! Fixed-step closed-loop simulation.
//!
//! A scenario runs a controller at the control rate against RK4 integration
//! of the coupled dynamics at the (faster) physics rate, applies payload
//! pick/place parameter switches at their scheduled instants, and logs one
//! record per control tick. Identical configurations produce byte-identical
//! logs.
//!
//! The commanded wrench closes through a configurable actuation path: ideal
//! (taken as-is), through the rotor-speed mixer, or down to PWM commands and
//! back through the fitted linear maps.

use crate::control::dflc::{DflcController, DflcGains};
use crate::control::fbl::{FblController, FblGains};
use crate::control::fmrlc::{FmrlcController, FmrlcGains};
use crate::control::{ControlOutput, MissionController, PlantFeedback};
use crate::dynamics::{
    apply_payload, state_derivative, ArmParams, BaseAcceleration, ControlInput,
    InteractionWrench, QuadrotorParams, SystemState, STATE_DIM,
};
use crate::kinematics::{forward_kinematics, EndEffectorPose, JointAngles, QuadrotorPose};
use crate::rotor::{
    mixer_speeds_from_wrench, omega_bar, pwm_from_wrench, speed_from_pwm, speeds_from_squared,
    wrench_from_pwm, wrench_from_speeds, RotorCalibration,
};
use crate::trajectory::{benchmark_mission, MissionProfile, MissionSample};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("control period must be a positive integer multiple of the physics step")]
    InvalidTimestep,
    #[error("scenario mission cannot be built: {0}")]
    Mission(String),
}

/// Which controller stack closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Fbl,
    Dflc,
    Fmrlc,
}

impl ControllerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Fbl => "fbl",
            ControllerKind::Dflc => "dflc",
            ControllerKind::Fmrlc => "fmrlc",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "fbl" => Some(Self::Fbl),
            "dflc" => Some(Self::Dflc),
            "fmrlc" => Some(Self::Fmrlc),
            _ => None,
        }
    }
}

/// How the commanded wrench reaches the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActuationPath {
    /// Commanded wrench applied directly; no rotor model in the loop.
    Ideal,
    /// Wrench -> squared speeds -> realized wrench via the quadratic laws.
    RotorSpeeds,
    /// Wrench -> PWM -> realized wrench via the fitted linear maps.
    Pwm,
}

impl ActuationPath {
    pub fn name(&self) -> &'static str {
        match self {
            ActuationPath::Ideal => "ideal",
            ActuationPath::RotorSpeeds => "speeds",
            ActuationPath::Pwm => "pwm",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "ideal" => Some(Self::Ideal),
            "speeds" => Some(Self::RotorSpeeds),
            "pwm" => Some(Self::Pwm),
            _ => None,
        }
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub mission: MissionProfile,
    pub controller: ControllerKind,
    pub actuation: ActuationPath,
    pub dt_physics: f64,
    pub dt_control: f64,
    pub duration: f64,
    pub quad: QuadrotorParams,
    pub arm: ArmParams,
    pub calibration: RotorCalibration,
    pub fbl_gains: FblGains,
    pub dflc_gains: DflcGains,
    pub fmrlc_gains: FmrlcGains,
    /// Any state magnitude beyond this terminates the run as divergent.
    pub divergence_threshold: f64,
    /// Any position-tracking error beyond this terminates the run as
    /// divergent: the vehicle has escaped the mission envelope even if its
    /// states are still numerically tame.
    pub tracking_divergence_threshold: f64,
    pub initial_state: SystemState,
}

impl ScenarioConfig {
    /// A scenario over the given mission with reference parameters and the
    /// default rates (1 kHz physics, 500 Hz control).
    pub fn new(mission: MissionProfile, controller: ControllerKind) -> Self {
        Self {
            mission,
            controller,
            actuation: ActuationPath::RotorSpeeds,
            dt_physics: 1e-3,
            dt_control: 2e-3,
            duration: 0.0,
            quad: QuadrotorParams::reference(),
            arm: ArmParams::reference(),
            calibration: RotorCalibration::identified_uniform(),
            fbl_gains: FblGains::reference(),
            dflc_gains: DflcGains::reference(),
            fmrlc_gains: FmrlcGains::reference(),
            divergence_threshold: 1e6,
            tracking_divergence_threshold: 100.0,
            initial_state: SystemState::zeros(),
        }
    }

    /// The full 80 s multi-region pick/place benchmark mission.
    pub fn benchmark(controller: ControllerKind) -> Result<Self, SimError> {
        let arm = ArmParams::reference();
        let mission =
            benchmark_mission(&arm.geometry()).map_err(|e| SimError::Mission(e.to_string()))?;
        let mut config = Self::new(mission, controller);
        config.duration = 80.0;
        Ok(config)
    }
}

/// Markers attached to log records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimEvent {
    #[default]
    None,
    Pick,
    Place,
    Divergence,
}

impl SimEvent {
    pub fn name(&self) -> &'static str {
        match self {
            SimEvent::None => "",
            SimEvent::Pick => "pick",
            SimEvent::Place => "place",
            SimEvent::Divergence => "divergence",
        }
    }
}

/// One control-tick snapshot.
#[derive(Debug, Clone, Copy)]
pub struct LogRecord {
    pub t: f64,
    pub state: SystemState,
    /// Reference values of the six channels (x, y, z, yaw, joint1, joint2).
    pub refs: [f64; 6],
    /// Wrench and joint torques the plant actually received.
    pub control: ControlOutput,
    pub interaction: InteractionWrench,
    pub event: SimEvent,
}

/// Why and when a run terminated early.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceRecord {
    pub time: f64,
    pub reason: String,
}

/// Full output of one scenario run.
#[derive(Debug, Clone, Default)]
pub struct SimLog {
    pub records: Vec<LogRecord>,
    pub divergence: Option<DivergenceRecord>,
}

const CSV_HEADER: &str = "t,x,y,z,vx,vy,vz,roll,pitch,yaw,roll_rate,pitch_rate,yaw_rate,\
joint1,joint2,joint1_rate,joint2_rate,ref_x,ref_y,ref_z,ref_yaw,ref_joint1,ref_joint2,\
thrust,roll_moment,pitch_moment,yaw_moment,joint1_torque,joint2_torque,\
interaction_fx,interaction_fy,interaction_fz,interaction_mx,interaction_my,interaction_mz,event";

impl SimLog {
    /// Serializes the log as CSV: header row, one row per control tick, time
    /// first, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 256 + 256);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let s = &r.state;
            let c = &r.control;
            let w = &r.interaction;
            let fields: Vec<String> = [
                r.t,
                s.position.x,
                s.position.y,
                s.position.z,
                s.velocity.x,
                s.velocity.y,
                s.velocity.z,
                s.attitude.roll,
                s.attitude.pitch,
                s.attitude.yaw,
                s.attitude_rate.x,
                s.attitude_rate.y,
                s.attitude_rate.z,
                s.joints.joint1,
                s.joints.joint2,
                s.joint_rates[0],
                s.joint_rates[1],
                r.refs[0],
                r.refs[1],
                r.refs[2],
                r.refs[3],
                r.refs[4],
                r.refs[5],
                c.wrench.thrust,
                c.wrench.roll_moment,
                c.wrench.pitch_moment,
                c.wrench.yaw_moment,
                c.joint_torques.joint1,
                c.joint_torques.joint2,
                w.force_inertial.x,
                w.force_inertial.y,
                w.force_inertial.z,
                w.moment_body.x,
                w.moment_body.y,
                w.moment_body.z,
            ]
            .iter()
            .map(|v| v.to_string())
            .collect();
            out.push_str(&fields.join(","));
            out.push(',');
            out.push_str(r.event.name());
            out.push('\n');
        }
        out
    }
}

/// Classical fourth-order Runge-Kutta step. Bit-reproducible: the same
/// inputs always produce the same output.
pub fn rk4_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let k2 = f(t + dt / 2.0, &add_scaled(y, &k1, dt / 2.0));
    let k3 = f(t + dt / 2.0, &add_scaled(y, &k2, dt / 2.0));
    let k4 = f(t + dt, &add_scaled(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add_scaled<const N: usize>(y: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// Builds the controller stack a scenario asks for. The model-based
/// controller gets the pristine (payload-free) parameters as its model.
pub fn build_controller(config: &ScenarioConfig) -> Box<dyn MissionController> {
    match config.controller {
        ControllerKind::Fbl => Box::new(FblController::new(
            config.fbl_gains,
            config.quad,
            config.arm,
        )),
        ControllerKind::Dflc => Box::new(DflcController::new(config.dflc_gains)),
        ControllerKind::Fmrlc => Box::new(FmrlcController::new(
            config.fmrlc_gains,
            config.dflc_gains,
        )),
    }
}

/// One RK4 physics step of the coupled dynamics. All four stages share the
/// lagged vehicle accelerations; the returned pair refreshes the lag for the
/// next step from the first-stage evaluation.
fn physics_step(
    state: &SystemState,
    input: &ControlInput,
    quad: &QuadrotorParams,
    arm: &ArmParams,
    lag: &BaseAcceleration,
    dt: f64,
) -> Result<(SystemState, BaseAcceleration, InteractionWrench), crate::dynamics::DynamicsError> {
    let y0 = state.to_array();
    let first = state_derivative(state, input, quad, arm, lag)?;
    let k1 = first.derivative;
    let k2 = state_derivative(
        &SystemState::from_array(&add_scaled(&y0, &k1, dt / 2.0)),
        input,
        quad,
        arm,
        lag,
    )?
    .derivative;
    let k3 = state_derivative(
        &SystemState::from_array(&add_scaled(&y0, &k2, dt / 2.0)),
        input,
        quad,
        arm,
        lag,
    )?
    .derivative;
    let k4 = state_derivative(
        &SystemState::from_array(&add_scaled(&y0, &k3, dt)),
        input,
        quad,
        arm,
        lag,
    )?
    .derivative;
    let mut y = y0;
    for i in 0..STATE_DIM {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok((
        SystemState::from_array(&y),
        first.accelerations,
        first.interaction,
    ))
}

/// Runs the closed loop described by `config` and returns the log. Divergence
/// (numerical blow-up, non-finite states, controller validity violations) is
/// an expected outcome recorded in the log, not an error.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimLog, SimError> {
    let mut controller = build_controller(config);
    run_scenario_with(config, controller.as_mut())
}

/// Like [`run_scenario`] but drives a caller-owned controller, so learned
/// state can be pre-seeded and inspected after the run.
pub fn run_scenario_with(
    config: &ScenarioConfig,
    controller: &mut dyn MissionController,
) -> Result<SimLog, SimError> {
    let substeps = (config.dt_control / config.dt_physics).round();
    if !(substeps >= 1.0
        && (config.dt_control - substeps * config.dt_physics).abs() < 1e-12
        && config.dt_physics > 0.0)
    {
        return Err(SimError::InvalidTimestep);
    }
    let substeps = substeps as usize;
    let ticks = (config.duration / config.dt_control).round() as u64;

    let mut state = config.initial_state;
    let mut lag = BaseAcceleration::zeros();
    let mut interaction = InteractionWrench::zeros();
    let mut spin = 0.0;
    let mut arm_active = config.arm;
    let mut picked = false;
    let mut placed = false;

    let mut log = SimLog::default();
    let mut last_control = ControlOutput::default();

    'ticks: for tick in 0..=ticks {
        let t = tick as f64 * config.dt_control;
        let mut event = SimEvent::None;
        if let Some(p) = config.mission.payload {
            // The switch lands on the first tick at or past the event time.
            if !picked && t >= p.pick_time - 1e-9 {
                arm_active = apply_payload(&config.arm, p.mass);
                picked = true;
                event = SimEvent::Pick;
            } else if picked && !placed && t >= p.place_time - 1e-9 {
                arm_active = config.arm;
                placed = true;
                event = SimEvent::Place;
            }
        }

        let refs = config.mission.sample(t);
        let feedback = PlantFeedback {
            interaction,
            rotor_speed_sum: spin,
            base_accel: lag,
        };
        let commanded = match controller.step(t, &refs, &state, &feedback, config.dt_control) {
            Ok(c) => c,
            Err(e) => {
                log.records
                    .push(record(t, &state, &refs, &last_control, &interaction, SimEvent::Divergence));
                log.divergence = Some(DivergenceRecord {
                    time: t,
                    reason: format!("controller: {e}"),
                });
                break 'ticks;
            }
        };

        // Close the actuation path.
        let (realized, spin_now) = match config.actuation {
            ActuationPath::Ideal => (commanded.wrench, 0.0),
            ActuationPath::RotorSpeeds => {
                match mixer_speeds_from_wrench(&config.calibration, &commanded.wrench) {
                    Ok((squared, _)) => {
                        let speeds = speeds_from_squared(&squared);
                        (
                            wrench_from_speeds(&config.calibration, &speeds),
                            omega_bar(&speeds),
                        )
                    }
                    Err(e) => {
                        log.divergence = Some(DivergenceRecord {
                            time: t,
                            reason: format!("mixer: {e}"),
                        });
                        log.records
                            .push(record(t, &state, &refs, &last_control, &interaction, SimEvent::Divergence));
                        break 'ticks;
                    }
                }
            }
            ActuationPath::Pwm => match pwm_from_wrench(&config.calibration, &commanded.wrench) {
                Ok((pwm, _)) => {
                    let (speeds, _) = speed_from_pwm(&config.calibration, &pwm);
                    (
                        wrench_from_pwm(&config.calibration, &pwm),
                        omega_bar(&speeds),
                    )
                }
                Err(e) => {
                    log.divergence = Some(DivergenceRecord {
                        time: t,
                        reason: format!("mixer: {e}"),
                    });
                    log.records
                        .push(record(t, &state, &refs, &last_control, &interaction, SimEvent::Divergence));
                    break 'ticks;
                }
            },
        };
        spin = spin_now;
        let applied = ControlOutput {
            wrench: realized,
            joint_torques: commanded.joint_torques,
        };
        last_control = applied;
        log.records
            .push(record(t, &state, &refs, &applied, &interaction, event));
        if tick == ticks {
            break;
        }

        let input = ControlInput {
            wrench: realized,
            joint_torques: commanded.joint_torques,
            rotor_speed_sum: spin,
        };
        // The coupling lag is frozen over the whole control tick so the
        // controller's model terms and the plant integrate with the same
        // vehicle accelerations; it refreshes from the tick's first stage.
        let mut tick_refresh: Option<(BaseAcceleration, InteractionWrench)> = None;
        for sub in 0..substeps {
            let t_sub = t + sub as f64 * config.dt_physics;
            match physics_step(&state, &input, &config.quad, &arm_active, &lag, config.dt_physics)
            {
                Ok((next, accel, wrench)) => {
                    state = next;
                    if tick_refresh.is_none() {
                        tick_refresh = Some((accel, wrench));
                    }
                }
                Err(e) => {
                    log.records.push(record(
                        t_sub,
                        &state,
                        &refs,
                        &applied,
                        &interaction,
                        SimEvent::Divergence,
                    ));
                    log.divergence = Some(DivergenceRecord {
                        time: t_sub,
                        reason: format!("dynamics: {e}"),
                    });
                    break 'ticks;
                }
            }
            let blown = state
                .to_array()
                .iter()
                .any(|v| !v.is_finite() || v.abs() > config.divergence_threshold);
            let escaped = (state.position.x - refs.channels[0].value).abs()
                .max((state.position.y - refs.channels[1].value).abs())
                .max((state.position.z - refs.channels[2].value).abs())
                > config.tracking_divergence_threshold;
            if blown || escaped {
                log.records.push(record(
                    t_sub,
                    &state,
                    &refs,
                    &applied,
                    &interaction,
                    SimEvent::Divergence,
                ));
                let reason = if blown {
                    "state magnitude beyond divergence threshold"
                } else {
                    "position error beyond the mission envelope"
                };
                log.divergence = Some(DivergenceRecord {
                    time: t_sub,
                    reason: reason.to_string(),
                });
                break 'ticks;
            }
        }
        if let Some((accel, wrench)) = tick_refresh {
            lag = accel;
            interaction = wrench;
        }
    }
    Ok(log)
}

fn record(
    t: f64,
    state: &SystemState,
    refs: &MissionSample,
    control: &ControlOutput,
    interaction: &InteractionWrench,
    event: SimEvent,
) -> LogRecord {
    LogRecord {
        t,
        state: *state,
        refs: std::array::from_fn(|i| refs.channels[i].value),
        control: *control,
        interaction: *interaction,
        event,
    }
}

/// End-effector pose per log record, through the full forward kinematics
/// (no level-attitude reduction).
pub fn end_effector_trace(
    log: &SimLog,
    geometry: &crate::kinematics::ManipulatorGeometry,
) -> Vec<(f64, EndEffectorPose)> {
    log.records
        .iter()
        .map(|r| {
            let pose = QuadrotorPose {
                position: r.state.position,
                attitude: r.state.attitude,
            };
            let joints = JointAngles::new(r.state.joints.joint1, r.state.joints.joint2);
            (r.t, forward_kinematics(&pose, &joints, geometry))
        })
        .collect()
}

/// Hover-in-place scenario: zero references, no payload.
pub fn hover_scenario(controller: ControllerKind, duration: f64) -> ScenarioConfig {
    let mut config = ScenarioConfig::new(MissionProfile::default(), controller);
    config.duration = duration;
    config
}
