//! The four subcommands.

use crate::args::Args;
use crate::log;
use ams_core::config::{
    format_mission, parse_calibration, parse_dflc_gains, parse_fbl_gains, parse_fmrlc_gains,
    parse_scenario, validate_scenario,
};
use ams_core::control::fmrlc::FmrlcController;
use ams_core::fuzzy::RuleBase2d;
use ams_core::identify::{fit_rotor_maps, fits_to_csv, parse_bench_csv};
use ams_core::rotor::{
    mixer_speeds_from_wrench, omega_bar, pwm_from_wrench, speeds_from_squared, BodyWrench,
    RotorCalibration,
};
use ams_core::sim::{run_scenario, run_scenario_with, ControllerKind};
use ams_core::trajectory::{plan_quintic, MissionChannel, MissionProfile, PayloadEvent};
use std::fmt::Write as _;
use std::fs;

fn read(path: &str) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {path:?}: {e}"))
}

fn write(path: &str, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("cannot write {path:?}: {e}"))
}

/// `ams simulate`: run a scenario file, write the log CSV. Divergent runs are
/// expected outcomes: they exit 0 with the divergence marked in the log.
pub fn simulate(argv: &[String]) -> Result<(), String> {
    let args = Args::parse(argv, &["seedless"])?;
    let scenario_path = args.required("scenario")?;
    let out_path = args.required("out")?;
    if args.switch("seedless") {
        // Runs are always deterministic and seed-free; accepted for
        // compatibility with batch drivers.
        log::debug("--seedless: runs are always deterministic");
    }
    let text = read(scenario_path)?;
    let mut config = parse_scenario(&text).map_err(|e| e.to_string())?;
    if let Some(name) = args.get("controller") {
        config.controller =
            ControllerKind::parse(name).ok_or_else(|| format!("unknown controller {name:?}"))?;
    }
    if let Some(path) = args.get("calibration") {
        config.calibration = parse_calibration(&read(path)?).map_err(|e| e.to_string())?;
    }
    if let Some(path) = args.get("gains") {
        let gains_text = read(path)?;
        match config.controller {
            ControllerKind::Fbl => {
                config.fbl_gains = parse_fbl_gains(&gains_text).map_err(|e| e.to_string())?;
            }
            ControllerKind::Dflc => {
                config.dflc_gains = parse_dflc_gains(&gains_text).map_err(|e| e.to_string())?;
            }
            ControllerKind::Fmrlc => {
                config.fmrlc_gains = parse_fmrlc_gains(&gains_text).map_err(|e| e.to_string())?;
            }
        }
    }
    validate_scenario(&config).map_err(|e| e.to_string())?;
    log::info(format!(
        "simulate: controller={} duration={}s dt={}ms/{}ms",
        config.controller.name(),
        config.duration,
        config.dt_physics * 1e3,
        config.dt_control * 1e3
    ));

    // The learning controller supports warm starts and rule-base dumps; the
    // other stacks run through the plain path.
    let sim_log = if config.controller == ControllerKind::Fmrlc
        && (args.get("load-rulebases").is_some() || args.get("dump-rulebases").is_some())
    {
        let mut controller = FmrlcController::new(config.fmrlc_gains, config.dflc_gains);
        if let Some(dir) = args.get("load-rulebases") {
            let names: Vec<&str> = controller.loops().iter().map(|(n, _)| *n).collect();
            for name in names {
                let path = format!("{dir}/{name}.grid");
                let grid = RuleBase2d::from_grid_string(&read(&path)?, 11, 11)
                    .map_err(|e| format!("{path}: {e}"))?;
                controller
                    .loop_mut(name)
                    .expect("loop names are fixed")
                    .restore_rules(grid);
            }
            log::info(format!("rule bases restored from {dir}"));
        }
        let sim_log = run_scenario_with(&config, &mut controller).map_err(|e| e.to_string())?;
        if let Some(dir) = args.get("dump-rulebases") {
            std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {dir:?}: {e}"))?;
            for (name, learner) in controller.loops() {
                write(&format!("{dir}/{name}.grid"), &learner.rules().to_grid_string())?;
            }
            log::info(format!("learned rule bases written to {dir}"));
        }
        sim_log
    } else {
        run_scenario(&config).map_err(|e| e.to_string())?
    };
    match &sim_log.divergence {
        Some(d) => log::info(format!("diverged at t={:.3}s: {}", d.time, d.reason)),
        None => log::info(format!("completed {} records", sim_log.records.len())),
    }
    write(out_path, &sim_log.to_csv())
}

/// `ams plan`: build a mission (benchmark or from --segment/--payload specs),
/// write the mission file and optionally a sampled reference CSV.
pub fn plan(argv: &[String]) -> Result<(), String> {
    let args = Args::parse(argv, &["benchmark"])?;
    let out_mission = args.required("out-mission")?;
    let mission = if args.switch("benchmark") {
        let geometry = ams_core::kinematics::ManipulatorGeometry::default();
        ams_core::trajectory::benchmark_mission(&geometry).map_err(|e| e.to_string())?
    } else {
        let mut mission = MissionProfile::default();
        let mut last = [0.0f64; 6];
        for spec in args.get_all("segment") {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 4 {
                return Err(format!(
                    "--segment {spec:?}: want CHANNEL:TARGET:START:DURATION"
                ));
            }
            let channel = MissionChannel::parse(parts[0])
                .ok_or_else(|| format!("--segment: unknown channel {:?}", parts[0]))?;
            let num = |s: &str| -> Result<f64, String> {
                s.parse().map_err(|_| format!("--segment: bad number {s:?}"))
            };
            let (target, start, duration) = (num(parts[1])?, num(parts[2])?, num(parts[3])?);
            let idx = channel.index();
            let seg = plan_quintic(last[idx], target, start, start + duration)
                .map_err(|e| e.to_string())?;
            mission
                .channel_mut(channel)
                .push(seg)
                .map_err(|e| e.to_string())?;
            last[idx] = target;
        }
        if let Some(spec) = args.get("payload") {
            let parts: Vec<&str> = spec.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("--payload {spec:?}: want MASS:PICK:PLACE"));
            }
            let num = |s: &str| -> Result<f64, String> {
                s.parse().map_err(|_| format!("--payload: bad number {s:?}"))
            };
            mission.payload = Some(PayloadEvent {
                mass: num(parts[0])?,
                pick_time: num(parts[1])?,
                place_time: num(parts[2])?,
            });
        }
        mission
    };
    write(out_mission, &format_mission(&mission))?;
    log::info(format!("mission written to {out_mission}"));

    if let Some(csv_path) = args.get("out-csv") {
        let dt = args.f64("sample-dt", 0.1)?;
        if dt <= 0.0 {
            return Err("--sample-dt must be positive".into());
        }
        let end = mission.end_time();
        let mut csv = String::from(
            "t,x,x_rate,x_accel,y,y_rate,y_accel,z,z_rate,z_accel,\
yaw,yaw_rate,yaw_accel,joint1,joint1_rate,joint1_accel,joint2,joint2_rate,joint2_accel\n",
        );
        let steps = (end / dt).ceil() as u64;
        for k in 0..=steps {
            let t = k as f64 * dt;
            let s = mission.sample(t);
            let mut row = t.to_string();
            for ch in s.channels {
                let _ = write!(row, ",{},{},{}", ch.value, ch.rate, ch.accel);
            }
            csv.push_str(&row);
            csv.push('\n');
        }
        write(csv_path, &csv)?;
        log::info(format!("sampled references written to {csv_path}"));
    }
    Ok(())
}

/// `ams fit`: least-squares rotor maps from bench CSV.
pub fn fit(argv: &[String]) -> Result<(), String> {
    let args = Args::parse(argv, &[])?;
    let data_path = args.required("data")?;
    let out_path = args.required("out")?;
    let samples = parse_bench_csv(&read(data_path)?).map_err(|e| e.to_string())?;
    if samples.is_empty() {
        return Err("no samples in input".into());
    }
    let fits = fit_rotor_maps(&samples).map_err(|e| e.to_string())?;
    log::info(format!(
        "fitted {} rotor(s) from {} samples",
        fits.len(),
        samples.len()
    ));
    write(out_path, &fits_to_csv(&fits))
}

/// `ams mixer`: allocate a wrench to rotor speeds and PWM commands, print a
/// table to stdout.
pub fn mixer(argv: &[String]) -> Result<(), String> {
    let args = Args::parse(argv, &["per-rotor"])?;
    let thrust = args
        .required("thrust")?
        .parse::<f64>()
        .map_err(|_| "--thrust: bad number".to_string())?;
    let wrench = BodyWrench::new(
        thrust,
        args.f64("tau1", 0.0)?,
        args.f64("tau2", 0.0)?,
        args.f64("tau3", 0.0)?,
    );
    let cal = match args.get("calibration") {
        Some(path) => {
            ams_core::config::parse_calibration(&read(path)?).map_err(|e| e.to_string())?
        }
        None if args.switch("per-rotor") => RotorCalibration::identified_per_rotor(),
        None => RotorCalibration::identified_uniform(),
    };
    let (squared, clamped) = mixer_speeds_from_wrench(&cal, &wrench).map_err(|e| e.to_string())?;
    let speeds = speeds_from_squared(&squared);
    let (pwm, saturated) = pwm_from_wrench(&cal, &wrench).map_err(|e| e.to_string())?;
    println!("rotor,omega_rad_s,pwm_us");
    for j in 0..4 {
        println!("{},{},{}", j + 1, speeds.0[j], pwm.0[j]);
    }
    println!("omega_bar,{},", omega_bar(&speeds));
    if clamped {
        println!("note,speed demand clamped at zero,");
    }
    if saturated {
        println!("note,pwm saturated at range limits,");
    }
    Ok(())
}
