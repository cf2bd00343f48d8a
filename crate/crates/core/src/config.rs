//! Plain-text file formats: calibration, physical parameters, missions and
//! scenarios.
//!
//! All formats are flat `key value...` lines; `#` starts a comment. Units are
//! declared in the file where they are not SI (the thrust fits were bench-
//! measured in gram-force and are converted exactly once, on load).

use crate::control::dflc::{DflcGains, LoopGains};
use crate::control::fbl::{FblGains, PidGains};
use crate::control::fmrlc::{FmrlcGains, FmrlcLoopGains};
use crate::dynamics::{ArmParams, LinkParams, QuadrotorParams};
use crate::rotor::{RotorCalibration, RotorFit, GRAM_FORCE_TO_NEWTON};
use crate::sim::{ActuationPath, ControllerKind, ScenarioConfig, SimError};
use crate::trajectory::{
    benchmark_mission, plan_quintic, MissionChannel, MissionProfile, PayloadEvent,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error("missing key {0:?}")]
    MissingKey(String),
    #[error("bad value for {key:?}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("unsupported unit {0:?} for the thrust fit")]
    BadUnit(String),
    #[error("mission error: {0}")]
    Mission(String),
    #[error("scenario error: {0}")]
    Scenario(String),
}

/// Parsed key-value document plus positional rows for repeated keys.
#[derive(Debug, Default)]
struct Document {
    values: BTreeMap<String, String>,
    /// (line, key, remaining fields) for every line, in order.
    rows: Vec<(usize, String, Vec<String>)>,
}

fn parse_document(text: &str) -> Document {
    let mut doc = Document::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace().map(str::to_string);
        let key = fields.next().unwrap();
        let rest: Vec<String> = fields.collect();
        doc.values
            .insert(key.clone(), rest.join(" "));
        doc.rows.push((i + 1, key, rest));
    }
    doc
}

impl Document {
    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        let raw = self
            .values
            .get(key)
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))?;
        raw.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.clone(),
        })
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.values.get(key) {
            Some(raw) => raw.parse().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: raw.clone(),
            }),
            None => Ok(default),
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Loads a rotor calibration. Thrust-fit coefficients are converted to
/// newtons when the file declares `thrust_fit_unit gram_force` (the factor is
/// part of the file so the raw bench numbers stay citable).
pub fn parse_calibration(text: &str) -> Result<RotorCalibration, ConfigError> {
    let doc = parse_document(text);
    let unit = doc.text("thrust_fit_unit").unwrap_or("newton");
    let scale = match unit {
        "gram_force" => doc.f64_or("gram_force_to_newton", GRAM_FORCE_TO_NEWTON)?,
        "newton" => 1.0,
        other => return Err(ConfigError::BadUnit(other.to_string())),
    };
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
    for (j, rotor) in rotors.iter_mut().enumerate() {
        let n = j + 1;
        *rotor = RotorFit {
            speed_slope: doc.f64(&format!("speed_slope_{n}"))?,
            speed_intercept: doc.f64(&format!("speed_intercept_{n}"))?,
            thrust_slope: doc.f64(&format!("thrust_slope_{n}"))? * scale,
            thrust_intercept: doc.f64(&format!("thrust_intercept_{n}"))? * scale,
            moment_slope: doc.f64(&format!("moment_slope_{n}"))?,
            moment_intercept: doc.f64(&format!("moment_intercept_{n}"))?,
            thrust_coeff: doc.f64(&format!("thrust_coeff_{n}"))?,
            moment_coeff: doc.f64(&format!("moment_coeff_{n}"))?,
        };
    }
    Ok(RotorCalibration {
        rotors,
        arm_length: doc.f64("arm_length")?,
    })
}

/// Writes a calibration with the thrust fits back in gram-force, mirroring
/// the bench units.
pub fn format_calibration(cal: &RotorCalibration) -> String {
    let mut out = String::new();
    out.push_str("# rotor assembly calibration\n");
    out.push_str("# thrust fits are bench values in gram-force; the loader converts to newtons\n");
    out.push_str("thrust_fit_unit gram_force\n");
    let _ = writeln!(out, "gram_force_to_newton {GRAM_FORCE_TO_NEWTON}");
    let _ = writeln!(out, "arm_length {}", cal.arm_length);
    for (j, r) in cal.rotors.iter().enumerate() {
        let n = j + 1;
        let _ = writeln!(out, "speed_slope_{n} {}", r.speed_slope);
        let _ = writeln!(out, "speed_intercept_{n} {}", r.speed_intercept);
        let _ = writeln!(out, "thrust_slope_{n} {}", r.thrust_slope / GRAM_FORCE_TO_NEWTON);
        let _ = writeln!(
            out,
            "thrust_intercept_{n} {}",
            r.thrust_intercept / GRAM_FORCE_TO_NEWTON
        );
        let _ = writeln!(out, "moment_slope_{n} {}", r.moment_slope);
        let _ = writeln!(out, "moment_intercept_{n} {}", r.moment_intercept);
        let _ = writeln!(out, "thrust_coeff_{n} {}", r.thrust_coeff);
        let _ = writeln!(out, "moment_coeff_{n} {}", r.moment_coeff);
    }
    out
}

/// Loads vehicle and arm parameters (flat keys, SI units). Missing keys fall
/// back to the reference platform.
pub fn parse_params(text: &str) -> Result<(QuadrotorParams, ArmParams), ConfigError> {
    let doc = parse_document(text);
    let quad_ref = QuadrotorParams::reference();
    let arm_ref = ArmParams::reference();
    let quad = QuadrotorParams {
        mass: doc.f64_or("mass", quad_ref.mass)?,
        inertia_x: doc.f64_or("inertia_x", quad_ref.inertia_x)?,
        inertia_y: doc.f64_or("inertia_y", quad_ref.inertia_y)?,
        inertia_z: doc.f64_or("inertia_z", quad_ref.inertia_z)?,
        rotor_inertia: doc.f64_or("rotor_inertia", quad_ref.rotor_inertia)?,
        gravity: doc.f64_or("gravity", quad_ref.gravity)?,
    };
    let link = |doc: &Document, name: &str, fallback: &LinkParams| -> Result<LinkParams, ConfigError> {
        let mass = doc.f64_or(&format!("{name}_mass"), fallback.mass)?;
        let length = doc.f64_or(&format!("{name}_length"), fallback.length)?;
        let friction = doc.f64_or(&format!("{name}_friction"), fallback.friction)?;
        Ok(LinkParams::uniform_beam(mass, length, friction))
    };
    let arm = ArmParams {
        base_length: doc.f64_or("base_length", arm_ref.base_length)?,
        base_mass: doc.f64_or("base_mass", arm_ref.base_mass)?,
        link1: link(&doc, "link1", &arm_ref.link1)?,
        link2: link(&doc, "link2", &arm_ref.link2)?,
    };
    Ok((quad, arm))
}

pub fn format_params(quad: &QuadrotorParams, arm: &ArmParams) -> String {
    let mut out = String::new();
    out.push_str("# vehicle and arm parameters, SI units\n");
    let _ = writeln!(out, "mass {}", quad.mass);
    let _ = writeln!(out, "inertia_x {}", quad.inertia_x);
    let _ = writeln!(out, "inertia_y {}", quad.inertia_y);
    let _ = writeln!(out, "inertia_z {}", quad.inertia_z);
    let _ = writeln!(out, "rotor_inertia {}", quad.rotor_inertia);
    let _ = writeln!(out, "gravity {}", quad.gravity);
    let _ = writeln!(out, "base_length {}", arm.base_length);
    let _ = writeln!(out, "base_mass {}", arm.base_mass);
    for (name, link) in [("link1", &arm.link1), ("link2", &arm.link2)] {
        let _ = writeln!(out, "{name}_mass {}", link.mass);
        let _ = writeln!(out, "{name}_length {}", link.length);
        let _ = writeln!(out, "{name}_friction {}", link.friction);
    }
    out
}

/// Parses mission rows:
/// `segment <channel> <target> <start> <duration>` (sequential per channel,
/// starting from the previous segment's target or 0) and
/// `payload <mass> <pick> <place>`.
pub fn parse_mission(text: &str) -> Result<MissionProfile, ConfigError> {
    let doc = parse_document(text);
    let mut mission = MissionProfile::default();
    let mut last_target = [0.0f64; 6];
    for (line, key, fields) in &doc.rows {
        match key.as_str() {
            "segment" => {
                if fields.len() != 4 {
                    return Err(ConfigError::Line(
                        *line,
                        "segment wants: channel target start duration".into(),
                    ));
                }
                let channel = MissionChannel::parse(&fields[0]).ok_or_else(|| {
                    ConfigError::Line(*line, format!("unknown channel {:?}", fields[0]))
                })?;
                let nums: Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse()).collect();
                let nums = nums
                    .map_err(|_| ConfigError::Line(*line, "bad number in segment".into()))?;
                let (target, start, duration) = (nums[0], nums[1], nums[2]);
                let idx = channel.index();
                let seg = plan_quintic(last_target[idx], target, start, start + duration)
                    .map_err(|e| ConfigError::Mission(e.to_string()))?;
                mission
                    .channel_mut(channel)
                    .push(seg)
                    .map_err(|e| ConfigError::Mission(e.to_string()))?;
                last_target[idx] = target;
            }
            "payload" => {
                if fields.len() != 3 {
                    return Err(ConfigError::Line(
                        *line,
                        "payload wants: mass pick_time place_time".into(),
                    ));
                }
                let nums: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse()).collect();
                let nums = nums
                    .map_err(|_| ConfigError::Line(*line, "bad number in payload".into()))?;
                mission.payload = Some(PayloadEvent {
                    mass: nums[0],
                    pick_time: nums[1],
                    place_time: nums[2],
                });
            }
            other => {
                return Err(ConfigError::Line(*line, format!("unknown key {other:?}")));
            }
        }
    }
    Ok(mission)
}

/// Writes a mission as rows readable by [`parse_mission`].
pub fn format_mission(mission: &MissionProfile) -> String {
    let mut out = String::new();
    out.push_str("# mission: segment <channel> <target> <start> <duration>\n");
    for channel in MissionChannel::ALL {
        for seg in mission.channel(channel).segments() {
            let target = seg.sample(seg.end_time).value;
            let _ = writeln!(
                out,
                "segment {} {} {} {}",
                channel.name(),
                target,
                seg.start_time,
                seg.duration()
            );
        }
    }
    if let Some(p) = mission.payload {
        let _ = writeln!(out, "payload {} {} {}", p.mass, p.pick_time, p.place_time);
    }
    out
}


/// Loads feedback-linearization PID gains; missing keys keep the reference
/// values. Keys: `<loop>_kp`, `<loop>_kd`, `<loop>_ki` for loops
/// `altitude, roll, pitch, yaw, joint1, joint2`.
pub fn parse_fbl_gains(text: &str) -> Result<FblGains, ConfigError> {
    let doc = parse_document(text);
    let mut gains = FblGains::reference();
    for (name, slot) in [
        ("altitude", &mut gains.altitude),
        ("roll", &mut gains.roll),
        ("pitch", &mut gains.pitch),
        ("yaw", &mut gains.yaw),
        ("joint1", &mut gains.joint1),
        ("joint2", &mut gains.joint2),
    ] {
        *slot = PidGains::new(
            doc.f64_or(&format!("{name}_kp"), slot.kp)?,
            doc.f64_or(&format!("{name}_kd"), slot.kd)?,
            doc.f64_or(&format!("{name}_ki"), slot.ki)?,
        );
    }
    Ok(gains)
}

pub fn format_fbl_gains(gains: &FblGains) -> String {
    let mut out = String::from("# feedback-linearization PID gains\n");
    for (name, g) in [
        ("altitude", &gains.altitude),
        ("roll", &gains.roll),
        ("pitch", &gains.pitch),
        ("yaw", &gains.yaw),
        ("joint1", &gains.joint1),
        ("joint2", &gains.joint2),
    ] {
        let _ = writeln!(out, "{name}_kp {}", g.kp);
        let _ = writeln!(out, "{name}_kd {}", g.kd);
        let _ = writeln!(out, "{name}_ki {}", g.ki);
    }
    out
}

/// Loads direct-fuzzy scalings; keys `<loop>_error_scale`, `<loop>_rate_scale`,
/// `<loop>_output_scale` for loops `x, y, z, roll, pitch, yaw, joint1,
/// joint2`, plus `thrust_offset`.
pub fn parse_dflc_gains(text: &str) -> Result<DflcGains, ConfigError> {
    let doc = parse_document(text);
    let mut gains = DflcGains::reference();
    for (name, slot) in [
        ("x", &mut gains.x),
        ("y", &mut gains.y),
        ("z", &mut gains.z),
        ("roll", &mut gains.roll),
        ("pitch", &mut gains.pitch),
        ("yaw", &mut gains.yaw),
        ("joint1", &mut gains.joint1),
        ("joint2", &mut gains.joint2),
    ] {
        *slot = LoopGains::new(
            doc.f64_or(&format!("{name}_error_scale"), slot.error_scale)?,
            doc.f64_or(&format!("{name}_rate_scale"), slot.rate_scale)?,
            doc.f64_or(&format!("{name}_output_scale"), slot.output_scale)?,
        );
    }
    gains.thrust_offset = doc.f64_or("thrust_offset", gains.thrust_offset)?;
    Ok(gains)
}

pub fn format_dflc_gains(gains: &DflcGains) -> String {
    let mut out = String::from("# direct fuzzy loop scalings\n");
    for (name, g) in [
        ("x", &gains.x),
        ("y", &gains.y),
        ("z", &gains.z),
        ("roll", &gains.roll),
        ("pitch", &gains.pitch),
        ("yaw", &gains.yaw),
        ("joint1", &gains.joint1),
        ("joint2", &gains.joint2),
    ] {
        let _ = writeln!(out, "{name}_error_scale {}", g.error_scale);
        let _ = writeln!(out, "{name}_rate_scale {}", g.rate_scale);
        let _ = writeln!(out, "{name}_output_scale {}", g.output_scale);
    }
    let _ = writeln!(out, "thrust_offset {}", gains.thrust_offset);
    out
}

/// Loads learning-control scalings; keys `<loop>_<field>` for loops
/// `altitude, roll, pitch, yaw, joint1, joint2` and fields `error_scale,
/// rate_scale, output_scale, model_error_scale, model_rate_scale,
/// learning_scale, time_constant, tuning_period`.
pub fn parse_fmrlc_gains(text: &str) -> Result<FmrlcGains, ConfigError> {
    let doc = parse_document(text);
    let mut gains = FmrlcGains::reference();
    for (name, slot) in [
        ("altitude", &mut gains.altitude),
        ("roll", &mut gains.roll),
        ("pitch", &mut gains.pitch),
        ("yaw", &mut gains.yaw),
        ("joint1", &mut gains.joint1),
        ("joint2", &mut gains.joint2),
    ] {
        *slot = FmrlcLoopGains {
            error_scale: doc.f64_or(&format!("{name}_error_scale"), slot.error_scale)?,
            rate_scale: doc.f64_or(&format!("{name}_rate_scale"), slot.rate_scale)?,
            output_scale: doc.f64_or(&format!("{name}_output_scale"), slot.output_scale)?,
            model_error_scale: doc
                .f64_or(&format!("{name}_model_error_scale"), slot.model_error_scale)?,
            model_rate_scale: doc
                .f64_or(&format!("{name}_model_rate_scale"), slot.model_rate_scale)?,
            learning_scale: doc.f64_or(&format!("{name}_learning_scale"), slot.learning_scale)?,
            time_constant: doc.f64_or(&format!("{name}_time_constant"), slot.time_constant)?,
            tuning_period: doc.f64_or(&format!("{name}_tuning_period"), slot.tuning_period)?,
        };
    }
    Ok(gains)
}

/// Builds a scenario from a flat description. Recognized keys:
/// `controller fbl|dflc|fmrlc`, `actuation ideal|speeds|pwm`, `duration S`,
/// `dt_physics S`, `dt_control S`, `mission benchmark` (or inline
/// `segment`/`payload` rows), `divergence_threshold V`,
/// `tracking_divergence_threshold V`, plus any parameter or calibration key
/// accepted by [`parse_params`] / [`parse_calibration`].
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc = parse_document(text);
    let controller = match doc.text("controller") {
        Some(name) => ControllerKind::parse(name).ok_or_else(|| ConfigError::BadValue {
            key: "controller".into(),
            value: name.into(),
        })?,
        None => return Err(ConfigError::MissingKey("controller".into())),
    };
    let (quad, arm) = parse_params(text)?;

    let mission = if doc.text("mission") == Some("benchmark") {
        benchmark_mission(&arm.geometry()).map_err(|e| ConfigError::Mission(e.to_string()))?
    } else {
        // Inline rows; ignore scenario-level keys.
        let mission_rows: String = text
            .lines()
            .filter(|l| {
                let k = l.trim().split_whitespace().next().unwrap_or("");
                k == "segment" || k == "payload"
            })
            .collect::<Vec<_>>()
            .join("\n");
        parse_mission(&mission_rows)?
    };

    let mut config = ScenarioConfig::new(mission, controller);
    config.quad = quad;
    config.arm = arm;
    config.actuation = match doc.text("actuation") {
        Some(name) => ActuationPath::parse(name).ok_or_else(|| ConfigError::BadValue {
            key: "actuation".into(),
            value: name.into(),
        })?,
        None => ActuationPath::RotorSpeeds,
    };
    config.dt_physics = doc.f64_or("dt_physics", config.dt_physics)?;
    config.dt_control = doc.f64_or("dt_control", config.dt_control)?;
    config.duration = doc.f64_or("duration", config.mission.end_time().max(1.0))?;
    config.divergence_threshold =
        doc.f64_or("divergence_threshold", config.divergence_threshold)?;
    config.tracking_divergence_threshold = doc.f64_or(
        "tracking_divergence_threshold",
        config.tracking_divergence_threshold,
    )?;
    Ok(config)
}

/// Convenience wrapper mapping scenario validation failures into the
/// config error space.
pub fn validate_scenario(config: &ScenarioConfig) -> Result<(), ConfigError> {
    let substeps = (config.dt_control / config.dt_physics).round();
    if substeps < 1.0 || (config.dt_control - substeps * config.dt_physics).abs() > 1e-12 {
        return Err(ConfigError::Scenario(SimError::InvalidTimestep.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_round_trip_converts_units_once() {
        let cal = RotorCalibration::identified_per_rotor();
        let text = format_calibration(&cal);
        // The serialized thrust slope is the raw bench number.
        assert!(text.contains("thrust_slope_1 0.6566"));
        let back = parse_calibration(&text).unwrap();
        assert!((back.rotors[0].thrust_slope - cal.rotors[0].thrust_slope).abs() < 1e-15);
        assert_eq!(back.arm_length, cal.arm_length);
    }

    #[test]
    fn calibration_rejects_unknown_unit() {
        let cal = RotorCalibration::identified_per_rotor();
        let text = format_calibration(&cal).replace("gram_force", "stone");
        assert!(matches!(
            parse_calibration(&text),
            Err(ConfigError::BadUnit(_))
        ));
    }

    #[test]
    fn params_round_trip() {
        let quad = QuadrotorParams::reference();
        let arm = ArmParams::reference();
        let text = format_params(&quad, &arm);
        let (q2, a2) = parse_params(&text).unwrap();
        assert_eq!(q2, quad);
        assert_eq!(a2, arm);
    }

    #[test]
    fn params_defaults_when_missing() {
        let (q, a) = parse_params("mass 1.25\n").unwrap();
        assert_eq!(q.mass, 1.25);
        assert_eq!(q.inertia_x, QuadrotorParams::reference().inertia_x);
        assert_eq!(a.link2.length, 0.085);
    }

    #[test]
    fn mission_round_trip() {
        let mission = benchmark_mission(&ArmParams::reference().geometry()).unwrap();
        let text = format_mission(&mission);
        let back = parse_mission(&text).unwrap();
        let t = 37.3;
        let a = mission.sample(t);
        let b = back.sample(t);
        for i in 0..6 {
            assert!((a.channels[i].value - b.channels[i].value).abs() < 1e-9);
        }
        assert_eq!(back.payload, mission.payload);
    }

    #[test]
    fn mission_rejects_malformed_rows() {
        assert!(matches!(
            parse_mission("segment x 1.0 0.0\n"),
            Err(ConfigError::Line(1, _))
        ));
        assert!(matches!(
            parse_mission("segment q 1.0 0.0 1.0\n"),
            Err(ConfigError::Line(1, _))
        ));
        assert!(matches!(
            parse_mission("orbit 1 2 3\n"),
            Err(ConfigError::Line(1, _))
        ));
    }

    #[test]
    fn scenario_inline_and_benchmark() {
        let text = "controller dflc\nduration 2.5\nsegment z 1.0 0 1\npayload 0.05 1 2\n";
        let config = parse_scenario(text).unwrap();
        assert_eq!(config.controller, ControllerKind::Dflc);
        assert_eq!(config.duration, 2.5);
        assert_eq!(config.mission.payload.unwrap().mass, 0.05);
        validate_scenario(&config).unwrap();

        let bench = parse_scenario("controller fmrlc\nmission benchmark\nduration 80\n").unwrap();
        assert_eq!(bench.mission.payload.unwrap().pick_time, 15.0);
    }

    #[test]
    fn gains_files_round_trip() {
        let fbl = crate::control::fbl::FblGains::reference();
        let parsed = parse_fbl_gains(&format_fbl_gains(&fbl)).unwrap();
        assert_eq!(parsed, fbl);
        let overridden = parse_fbl_gains("altitude_kp 20\n").unwrap();
        assert_eq!(overridden.altitude.kp, 20.0);
        assert_eq!(overridden.altitude.kd, fbl.altitude.kd);

        let dflc = crate::control::dflc::DflcGains::reference();
        let parsed = parse_dflc_gains(&format_dflc_gains(&dflc)).unwrap();
        assert_eq!(parsed, dflc);
        let offset = parse_dflc_gains("thrust_offset 9.81\n").unwrap();
        assert_eq!(offset.thrust_offset, 9.81);

        let fmrlc = crate::control::fmrlc::FmrlcGains::reference();
        let tweaked = parse_fmrlc_gains("altitude_learning_scale 2.5\n").unwrap();
        assert_eq!(tweaked.altitude.learning_scale, 2.5);
        assert_eq!(tweaked.roll, fmrlc.roll);
    }

    #[test]
    fn scenario_requires_controller() {
        assert_eq!(
            parse_scenario("duration 1\n").unwrap_err(),
            ConfigError::MissingKey("controller".into())
        );
    }
}
