//! Quintic point-to-point reference trajectories and the multi-region
//! pick/place mission builder.
//!
//! Each segment is the unique fifth-order polynomial with zero velocity and
//! acceleration at both ends. Outside its window a segment holds the nearest
//! endpoint, so a channel made of non-overlapping segments is continuous with
//! plateaus between moves.

use crate::kinematics::{inverse_kinematics, EndEffectorPose, IkCase, ManipulatorGeometry};
use crate::spatial::{EulerAngles, Vec3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("segment must end after it starts (start {start}, end {end})")]
    EmptyWindow { start: f64, end: f64 },
    #[error("segments overlap at t = {0}")]
    Overlap(f64),
    #[error("mission pose has no inverse kinematics solution")]
    Unreachable,
}

/// One smooth move between two rest values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticSegment {
    pub start_time: f64,
    pub end_time: f64,
    /// Polynomial coefficients in the normalized time s = (t - t0)/(tf - t0).
    pub coeffs: [f64; 6],
}

/// Position, velocity and acceleration of a reference at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub value: f64,
    pub rate: f64,
    pub accel: f64,
}

/// Plans the rest-to-rest quintic from `start_value` to `end_value` over
/// [`start_time`, `end_time`].
pub fn plan_quintic(
    start_value: f64,
    end_value: f64,
    start_time: f64,
    end_time: f64,
) -> Result<QuinticSegment, TrajectoryError> {
    if end_time <= start_time {
        return Err(TrajectoryError::EmptyWindow {
            start: start_time,
            end: end_time,
        });
    }
    let delta = end_value - start_value;
    Ok(QuinticSegment {
        start_time,
        end_time,
        coeffs: [
            start_value,
            0.0,
            0.0,
            10.0 * delta,
            -15.0 * delta,
            6.0 * delta,
        ],
    })
}

impl QuinticSegment {
    pub fn duration(&self) -> f64 {
        self.end_time - self.start_time
    }

    /// Value and derivatives at time `t`; endpoints are held outside the window.
    pub fn sample(&self, t: f64) -> Sample {
        let duration = self.duration();
        let s = ((t - self.start_time) / duration).clamp(0.0, 1.0);
        let c = &self.coeffs;
        let value = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        if t < self.start_time || t > self.end_time {
            return Sample {
                value,
                rate: 0.0,
                accel: 0.0,
            };
        }
        let dv = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let ddv = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        Sample {
            value,
            rate: dv / duration,
            accel: ddv / (duration * duration),
        }
    }
}

/// A reference channel: ordered non-overlapping segments with holds between.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Channel {
    segments: Vec<QuinticSegment>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a segment; must start at or after the previous segment's end.
    pub fn push(&mut self, segment: QuinticSegment) -> Result<(), TrajectoryError> {
        if let Some(last) = self.segments.last() {
            if segment.start_time < last.end_time {
                return Err(TrajectoryError::Overlap(segment.start_time));
            }
        }
        self.segments.push(segment);
        Ok(())
    }

    pub fn segments(&self) -> &[QuinticSegment] {
        &self.segments
    }

    /// Final value the channel settles at.
    pub fn final_value(&self) -> f64 {
        self.segments
            .last()
            .map(|s| s.sample(s.end_time).value)
            .unwrap_or(0.0)
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map(|s| s.end_time).unwrap_or(0.0)
    }

    pub fn sample(&self, t: f64) -> Sample {
        // The last segment that has started governs; before the first one,
        // its held start value applies.
        let mut chosen: Option<&QuinticSegment> = None;
        for seg in &self.segments {
            if t >= seg.start_time {
                chosen = Some(seg);
            } else {
                break;
            }
        }
        match chosen.or_else(|| self.segments.first()) {
            Some(seg) => seg.sample(t),
            None => Sample::default(),
        }
    }
}

/// The six reference channels of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MissionChannel {
    X,
    Y,
    Z,
    Yaw,
    Joint1,
    Joint2,
}

impl MissionChannel {
    pub const ALL: [MissionChannel; 6] = [
        MissionChannel::X,
        MissionChannel::Y,
        MissionChannel::Z,
        MissionChannel::Yaw,
        MissionChannel::Joint1,
        MissionChannel::Joint2,
    ];

    pub fn index(&self) -> usize {
        match self {
            MissionChannel::X => 0,
            MissionChannel::Y => 1,
            MissionChannel::Z => 2,
            MissionChannel::Yaw => 3,
            MissionChannel::Joint1 => 4,
            MissionChannel::Joint2 => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MissionChannel::X => "x",
            MissionChannel::Y => "y",
            MissionChannel::Z => "z",
            MissionChannel::Yaw => "yaw",
            MissionChannel::Joint1 => "joint1",
            MissionChannel::Joint2 => "joint2",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// Payload grasp/release instants and the grasped mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadEvent {
    pub mass: f64,
    pub pick_time: f64,
    pub place_time: f64,
}

/// All six reference channels plus the payload schedule.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MissionProfile {
    pub channels: [Channel; 6],
    pub payload: Option<PayloadEvent>,
}

/// References of all channels at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MissionSample {
    pub channels: [Sample; 6],
}

impl MissionSample {
    pub fn get(&self, channel: MissionChannel) -> &Sample {
        &self.channels[channel.index()]
    }
}

impl MissionProfile {
    pub fn channel(&self, channel: MissionChannel) -> &Channel {
        &self.channels[channel.index()]
    }

    pub fn channel_mut(&mut self, channel: MissionChannel) -> &mut Channel {
        &mut self.channels[channel.index()]
    }

    pub fn sample(&self, t: f64) -> MissionSample {
        MissionSample {
            channels: std::array::from_fn(|i| self.channels[i].sample(t)),
        }
    }

    /// Time at which the last channel settles (payload events included).
    pub fn end_time(&self) -> f64 {
        let channels = self
            .channels
            .iter()
            .map(Channel::end_time)
            .fold(0.0, f64::max);
        match self.payload {
            Some(p) => channels.max(p.place_time),
            None => channels,
        }
    }
}

/// Default duration of one mission transition [s].
pub const DEFAULT_TRANSITION: f64 = 10.0;
/// Default start times of the three mission transitions [s].
pub const DEFAULT_REGION_STARTS: [f64; 3] = [0.0, 30.0, 55.0];
/// Benchmark payload schedule: 150 g picked at 15 s, placed at 65 s.
pub const DEFAULT_PAYLOAD: PayloadEvent = PayloadEvent {
    mass: 0.15,
    pick_time: 15.0,
    place_time: 65.0,
};

/// End-effector targets of the three mission regions: positions move
/// 5 -> 20 -> 60 m on every axis while all three orientation angles move
/// 0.5 -> 1.0 -> 1.5 rad.
pub fn benchmark_targets() -> [EndEffectorPose; 3] {
    let levels = [(5.0, 0.5), (20.0, 1.0), (60.0, 1.5)];
    levels.map(|(p, a)| EndEffectorPose {
        position: Vec3::new(p, p, p),
        orientation: EulerAngles::new(a, a, a),
    })
}

/// Builds the three-region pick/place mission: each region's end-effector
/// pose maps through inverse kinematics to quadrotor and joint setpoints,
/// connected by rest-to-rest quintics with plateaus between regions.
pub fn benchmark_mission(
    geometry: &ManipulatorGeometry,
) -> Result<MissionProfile, TrajectoryError> {
    let mut mission = MissionProfile::default();
    let mut previous = [0.0; 6];
    for (region, pose) in benchmark_targets().iter().enumerate() {
        let solutions =
            inverse_kinematics(pose, geometry, None).map_err(|_| TrajectoryError::Unreachable)?;
        let solution = solutions
            .iter()
            .find(|s| s.case == IkCase::Case1A)
            .or_else(|| solutions.first())
            .ok_or(TrajectoryError::Unreachable)?;
        let targets = [
            solution.position.x,
            solution.position.y,
            solution.position.z,
            solution.yaw,
            solution.joints.joint1,
            solution.joints.joint2,
        ];
        let start = DEFAULT_REGION_STARTS[region];
        for (i, channel) in MissionChannel::ALL.iter().enumerate() {
            let seg = plan_quintic(previous[i], targets[i], start, start + DEFAULT_TRANSITION)?;
            mission.channel_mut(*channel).push(seg)?;
        }
        previous = targets;
    }
    mission.payload = Some(DEFAULT_PAYLOAD);
    Ok(mission)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_kinematics, JointAngles, QuadrotorPose};

    #[test]
    fn constant_when_endpoints_equal() {
        let seg = plan_quintic(2.5, 2.5, 0.0, 1.0).unwrap();
        for t in [0.0, 0.3, 0.99, 1.0] {
            let s = seg.sample(t);
            assert_eq!(s.value, 2.5);
            assert_eq!(s.rate, 0.0);
            assert_eq!(s.accel, 0.0);
        }
    }

    #[test]
    fn unit_move_midpoint_and_peak_rate() {
        let seg = plan_quintic(0.0, 1.0, 0.0, 1.0).unwrap();
        let mid = seg.sample(0.5);
        assert!((mid.value - 0.5).abs() < 1e-12);
        assert!((mid.rate - 15.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_conditions_exact() {
        let seg = plan_quintic(-3.0, 7.0, 2.0, 5.5).unwrap();
        for (t, q) in [(2.0, -3.0), (5.5, 7.0)] {
            let s = seg.sample(t);
            assert!((s.value - q).abs() < 1e-12);
            assert!(s.rate.abs() < 1e-12);
            assert!(s.accel.abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_held_outside_window() {
        let seg = plan_quintic(1.0, 4.0, 10.0, 20.0).unwrap();
        let before = seg.sample(0.0);
        assert_eq!(before.value, 1.0);
        assert_eq!(before.rate, 0.0);
        let after = seg.sample(100.0);
        assert_eq!(after.value, 4.0);
        assert_eq!(after.accel, 0.0);
    }

    #[test]
    fn rejects_empty_window() {
        assert!(matches!(
            plan_quintic(0.0, 1.0, 1.0, 1.0),
            Err(TrajectoryError::EmptyWindow { .. })
        ));
    }

    #[test]
    fn rate_matches_finite_difference() {
        let seg = plan_quintic(0.0, 2.0, 0.0, 4.0).unwrap();
        let h = 1e-6;
        for t in [0.5, 1.7, 3.2] {
            let num = (seg.sample(t + h).value - seg.sample(t - h).value) / (2.0 * h);
            assert!((num - seg.sample(t).rate).abs() < 1e-6);
        }
    }

    #[test]
    fn channel_holds_between_segments() {
        let mut channel = Channel::new();
        channel
            .push(plan_quintic(0.0, 1.0, 0.0, 1.0).unwrap())
            .unwrap();
        channel
            .push(plan_quintic(1.0, 3.0, 5.0, 6.0).unwrap())
            .unwrap();
        assert_eq!(channel.sample(2.7).value, 1.0);
        assert_eq!(channel.sample(2.7).rate, 0.0);
        assert!((channel.sample(5.5).value - 2.0).abs() < 1e-12);
        assert_eq!(channel.sample(10.0).value, 3.0);
    }

    #[test]
    fn channel_rejects_overlap() {
        let mut channel = Channel::new();
        channel
            .push(plan_quintic(0.0, 1.0, 0.0, 2.0).unwrap())
            .unwrap();
        assert_eq!(
            channel.push(plan_quintic(1.0, 2.0, 1.5, 3.0).unwrap()),
            Err(TrajectoryError::Overlap(1.5))
        );
    }

    #[test]
    fn benchmark_mission_reaches_region_poses() {
        let geometry = ManipulatorGeometry::default();
        let mission = benchmark_mission(&geometry).unwrap();
        let targets = benchmark_targets();
        // At the end of each transition the commanded configuration must
        // reproduce the region's end-effector pose through forward kinematics.
        for (region, target) in targets.iter().enumerate() {
            let t = DEFAULT_REGION_STARTS[region] + DEFAULT_TRANSITION;
            let s = mission.sample(t);
            let pose = QuadrotorPose {
                position: Vec3::new(
                    s.get(MissionChannel::X).value,
                    s.get(MissionChannel::Y).value,
                    s.get(MissionChannel::Z).value,
                ),
                attitude: EulerAngles::new(0.0, 0.0, s.get(MissionChannel::Yaw).value),
            };
            let joints = JointAngles::new(
                s.get(MissionChannel::Joint1).value,
                s.get(MissionChannel::Joint2).value,
            );
            let ee = forward_kinematics(&pose, &joints, &geometry);
            assert!(
                (ee.position - target.position).amax() < 1e-9,
                "region {region}"
            );
        }
        let payload = mission.payload.unwrap();
        assert_eq!(payload.mass, 0.15);
        assert_eq!(payload.pick_time, 15.0);
        assert_eq!(payload.place_time, 65.0);
        assert_eq!(mission.end_time(), 65.0);
    }

    #[test]
    fn benchmark_mission_first_region_altitude() {
        // The first region lifts the end effector to 5 m; the vehicle's own
        // altitude target sits above it by the hanging-arm offset.
        let geometry = ManipulatorGeometry::default();
        let mission = benchmark_mission(&geometry).unwrap();
        let s = mission.sample(DEFAULT_TRANSITION);
        let pose = QuadrotorPose {
            position: Vec3::new(
                s.get(MissionChannel::X).value,
                s.get(MissionChannel::Y).value,
                s.get(MissionChannel::Z).value,
            ),
            attitude: EulerAngles::new(0.0, 0.0, s.get(MissionChannel::Yaw).value),
        };
        let joints = JointAngles::new(
            s.get(MissionChannel::Joint1).value,
            s.get(MissionChannel::Joint2).value,
        );
        let ee = forward_kinematics(&pose, &joints, &geometry);
        assert!((ee.position.z - 5.0).abs() < 1e-9);
    }

    #[test]
    fn mission_references_are_continuous() {
        let geometry = ManipulatorGeometry::default();
        let mission = benchmark_mission(&geometry).unwrap();
        let dt = 0.05;
        let span = 60.0;
        let bound = 1.875 * span / DEFAULT_TRANSITION * dt * 1.5;
        let mut prev = mission.sample(0.0);
        let mut t = dt;
        while t <= 80.0 {
            let cur = mission.sample(t);
            for i in 0..6 {
                let jump = (cur.channels[i].value - prev.channels[i].value).abs();
                assert!(jump < bound, "channel {i} jumps {jump} at t = {t}");
            }
            prev = cur;
            t += dt;
        }
    }
}
