//! Least-squares identification of the rotor maps from bench data.
//!
//! Bench rows carry (rotor, PWM, squared speed, thrust, electrical power);
//! three lines per rotor are fitted: squared speed, thrust and drag moment
//! against PWM, with the drag moment first recovered from power over speed.

use crate::rotor::drag_moment_from_power;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum IdentifyError {
    #[error("need at least two distinct abscissa values to fit a line")]
    RankDeficient,
    #[error("row {0}: {1}")]
    BadRow(usize, String),
    #[error("no samples for rotor {0}")]
    MissingRotor(usize),
}

/// One fitted line with its residual root-mean-square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares through centered sums; exact input lines are
/// recovered to machine precision.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit, IdentifyError> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let first = x.first().ok_or(IdentifyError::RankDeficient)?;
    if !x.iter().any(|v| v != first) {
        return Err(IdentifyError::RankDeficient);
    }
    let mean_x: f64 = x.iter().sum::<f64>() / n;
    let mean_y: f64 = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mean_x) * (xi - mean_x);
        sxy += (xi - mean_x) * (yi - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (slope * xi + intercept);
            r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        residual_rms: (ss / n).sqrt(),
    })
}

/// One bench sample. Thrust keeps whatever unit the rig reported (the fit is
/// unit-agnostic); power is in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSample {
    /// Rotor index, 1-based as on the airframe.
    pub rotor: usize,
    pub pwm: f64,
    pub speed_squared: f64,
    pub thrust: f64,
    pub power: f64,
}

/// Fitted maps of one rotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorMapsFit {
    pub rotor: usize,
    pub speed_squared: LineFit,
    pub thrust: LineFit,
    pub moment: LineFit,
}

/// Fits all three maps for every rotor present in the samples, in rotor order.
pub fn fit_rotor_maps(samples: &[BenchSample]) -> Result<Vec<RotorMapsFit>, IdentifyError> {
    let mut rotors: Vec<usize> = samples.iter().map(|s| s.rotor).collect();
    rotors.sort_unstable();
    rotors.dedup();
    let mut fits = Vec::with_capacity(rotors.len());
    for rotor in rotors {
        let rows: Vec<&BenchSample> = samples.iter().filter(|s| s.rotor == rotor).collect();
        if rows.is_empty() {
            return Err(IdentifyError::MissingRotor(rotor));
        }
        let pwm: Vec<f64> = rows.iter().map(|s| s.pwm).collect();
        let omega_sq: Vec<f64> = rows.iter().map(|s| s.speed_squared).collect();
        let thrust: Vec<f64> = rows.iter().map(|s| s.thrust).collect();
        let mut moment = Vec::with_capacity(rows.len());
        for (i, s) in rows.iter().enumerate() {
            let speed = s.speed_squared.max(0.0).sqrt();
            let m = drag_moment_from_power(s.power, speed)
                .map_err(|e| IdentifyError::BadRow(i, e.to_string()))?;
            moment.push(m);
        }
        fits.push(RotorMapsFit {
            rotor,
            speed_squared: fit_line(&pwm, &omega_sq)?,
            thrust: fit_line(&pwm, &thrust)?,
            moment: fit_line(&pwm, &moment)?,
        });
    }
    Ok(fits)
}

/// Parses bench data CSV: header then `rotor,pwm_us,omega_sq,thrust,power_w`.
pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchSample>, IdentifyError> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.chars().any(|c| c.is_alphabetic())) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(IdentifyError::BadRow(
                i + 1,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let parse = |s: &str| -> Result<f64, IdentifyError> {
            s.trim()
                .parse()
                .map_err(|_| IdentifyError::BadRow(i + 1, format!("bad number {s:?}")))
        };
        samples.push(BenchSample {
            rotor: parse(fields[0])? as usize,
            pwm: parse(fields[1])?,
            speed_squared: parse(fields[2])?,
            thrust: parse(fields[3])?,
            power: parse(fields[4])?,
        });
    }
    Ok(samples)
}

/// Serializes fits as CSV: `rotor,map,slope,intercept,residual_rms`.
pub fn fits_to_csv(fits: &[RotorMapsFit]) -> String {
    let mut out = String::from("rotor,map,slope,intercept,residual_rms\n");
    for f in fits {
        for (name, line) in [
            ("speed_sq", &f.speed_squared),
            ("thrust", &f.thrust),
            ("moment", &f.moment),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f.rotor, name, line.slope, line.intercept, line.residual_rms
            ));
        }
    }
    out
}
