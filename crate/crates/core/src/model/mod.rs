//! Domain types shared by the whole pipeline.

mod quaternion;
mod vector;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use quaternion::{quat_multiply, quat_rotate, Quaternion, UNIT_NORM_TOLERANCE};
pub use vector::Vector3;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Standard gravity, used for the accelerometer full-scale range.
pub const STANDARD_GRAVITY: f64 = 9.80665;
/// Accelerometer full scale, m/s².
pub const ACCEL_RANGE: f64 = 8.0 * STANDARD_GRAVITY;
/// Gyroscope full scale, °/s.
pub const GYRO_RANGE: f64 = 500.0;
/// Magnetometer full scale, gauss.
pub const MAG_RANGE: f64 = 1.3;
/// Nominal capture rate, Hz.
pub const NOMINAL_SAMPLE_RATE: f64 = 100.0;

/// Where a sensor is worn. Every trial carries exactly one of each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorPlacement {
    LeftFoot,
    RightFoot,
    LeftShank,
    RightShank,
    LeftThigh,
    RightThigh,
    Pelvis,
}

impl SensorPlacement {
    pub const ALL: [SensorPlacement; 7] = [
        SensorPlacement::LeftFoot,
        SensorPlacement::RightFoot,
        SensorPlacement::LeftShank,
        SensorPlacement::RightShank,
        SensorPlacement::LeftThigh,
        SensorPlacement::RightThigh,
        SensorPlacement::Pelvis,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Name used in trial files.
    pub fn name(self) -> &'static str {
        match self {
            SensorPlacement::LeftFoot => "LeftFoot",
            SensorPlacement::RightFoot => "RightFoot",
            SensorPlacement::LeftShank => "LeftShank",
            SensorPlacement::RightShank => "RightShank",
            SensorPlacement::LeftThigh => "LeftThigh",
            SensorPlacement::RightThigh => "RightThigh",
            SensorPlacement::Pelvis => "Pelvis",
        }
    }

    /// Name used in feature column headers.
    pub fn snake_name(self) -> &'static str {
        match self {
            SensorPlacement::LeftFoot => "left_foot",
            SensorPlacement::RightFoot => "right_foot",
            SensorPlacement::LeftShank => "left_shank",
            SensorPlacement::RightShank => "right_shank",
            SensorPlacement::LeftThigh => "left_thigh",
            SensorPlacement::RightThigh => "right_thigh",
            SensorPlacement::Pelvis => "pelvis",
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            SensorPlacement::LeftFoot | SensorPlacement::LeftShank | SensorPlacement::LeftThigh => {
                Some(Side::Left)
            }
            SensorPlacement::RightFoot
            | SensorPlacement::RightShank
            | SensorPlacement::RightThigh => Some(Side::Right),
            SensorPlacement::Pelvis => None,
        }
    }
}

impl fmt::Display for SensorPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SensorPlacement::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown placement {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Sagittal-plane joint, spanned by two adjacent sensors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JointId {
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl JointId {
    pub const ALL: [JointId; 6] = [
        JointId::LeftHip,
        JointId::RightHip,
        JointId::LeftKnee,
        JointId::RightKnee,
        JointId::LeftAnkle,
        JointId::RightAnkle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(proximal, distal)` segment sensors. The joint angle is the proximal
    /// segment angle minus the distal one.
    pub fn segments(self) -> (SensorPlacement, SensorPlacement) {
        use SensorPlacement::*;
        match self {
            JointId::LeftHip => (Pelvis, LeftThigh),
            JointId::RightHip => (Pelvis, RightThigh),
            JointId::LeftKnee => (LeftThigh, LeftShank),
            JointId::RightKnee => (RightThigh, RightShank),
            JointId::LeftAnkle => (LeftShank, LeftFoot),
            JointId::RightAnkle => (RightShank, RightFoot),
        }
    }

    pub fn snake_name(self) -> &'static str {
        match self {
            JointId::LeftHip => "left_hip",
            JointId::RightHip => "right_hip",
            JointId::LeftKnee => "left_knee",
            JointId::RightKnee => "right_knee",
            JointId::LeftAnkle => "left_ankle",
            JointId::RightAnkle => "right_ankle",
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.snake_name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Patient,
    Control,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Patient => "patient",
            Group::Control => "control",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patient" => Ok(Group::Patient),
            "control" => Ok(Group::Control),
            _ => Err(Error::Schema(format!("unknown group {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Other,
    Unspecified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectMeta {
    pub id: String,
    pub group: Group,
    pub age: f64,
    pub weight: f64,
    pub gender: Gender,
    pub days_post_op: Option<u32>,
}

impl SubjectMeta {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidRecording("empty subject id".into()));
        }
        match (self.group, self.days_post_op) {
            (Group::Patient, None) => Err(Error::InvalidRecording(format!(
                "patient {} has no days_post_op",
                self.id
            ))),
            (Group::Control, Some(_)) => Err(Error::InvalidRecording(format!(
                "control {} has days_post_op",
                self.id
            ))),
            _ => Ok(()),
        }
    }
}

/// One synchronized IMU reading in file units: accel m/s², gyro °/s, mag gauss,
/// all in the sensor frame.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ImuSample<T> {
    pub t: T,
    pub accel: Vector3<T>,
    pub gyro: Vector3<T>,
    pub mag: Vector3<T>,
}

impl<T: Real> ImuSample<T> {
    /// Returns the name of the first channel outside the full-scale range.
    pub fn out_of_range_channel(&self) -> Option<&'static str> {
        let check = |v: &Vector3<T>, limit: f64| {
            v.to_array()
                .iter()
                .all(|c| c.is_finite() && c.abs() <= T::lit(limit))
        };
        if !self.t.is_finite() {
            Some("t")
        } else if !check(&self.accel, ACCEL_RANGE) {
            Some("accel")
        } else if !check(&self.gyro, GYRO_RANGE) {
            Some("gyro")
        } else if !check(&self.mag, MAG_RANGE) {
            Some("mag")
        } else {
            None
        }
    }
}

/// A uniformly sampled scalar signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub values: Vec<T>,
    pub sample_rate: T,
    pub label: String,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(label: impl Into<String>, sample_rate: T, values: Vec<T>) -> Self {
        Self {
            values,
            sample_rate,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> T {
        self.sample_rate.recip()
    }

    /// Same signal restricted to `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self::new(
            self.label.clone(),
            self.sample_rate,
            self.values[range].to_vec(),
        )
    }
}

/// Raw samples of all seven sensors for one walking trial.
///
/// Construction validates every invariant; the value is immutable afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecording<T> {
    subject: SubjectMeta,
    streams: [Vec<ImuSample<T>>; 7],
    sample_rate: T,
    calibration_window: (usize, usize),
}

impl<T: Real> TrialRecording<T> {
    /// `streams` is indexed by [`SensorPlacement::index`]. The calibration
    /// window is a half-open sample range that must end before the last
    /// sample, leaving walking data after it.
    pub fn new(
        subject: SubjectMeta,
        streams: [Vec<ImuSample<T>>; 7],
        sample_rate: T,
        calibration_window: (usize, usize),
    ) -> Result<Self> {
        subject.validate()?;
        if !(sample_rate.is_finite() && sample_rate > T::zero()) {
            return Err(Error::InvalidRecording(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        let len = streams[0].len();
        let period = sample_rate.recip();
        let t0 = streams[0].first().map(|s| s.t);
        for p in SensorPlacement::ALL {
            let stream = &streams[p.index()];
            if stream.is_empty() {
                return Err(Error::Schema(format!("stream {p} is empty")));
            }
            if stream.len() != len {
                return Err(Error::Sync {
                    placement: p,
                    message: format!("{} samples, expected {len}", stream.len()),
                });
            }
            for (i, s) in stream.iter().enumerate() {
                if let Some(ch) = s.out_of_range_channel() {
                    return Err(Error::OutOfRange(format!("{p} sample {i} channel {ch}")));
                }
                if i > 0 && s.t <= stream[i - 1].t {
                    return Err(Error::InvalidRecording(format!(
                        "{p}: timestamps not strictly increasing at sample {i}"
                    )));
                }
            }
            if let Some(t0) = t0 {
                if (stream[0].t - t0).abs() >= period {
                    return Err(Error::Sync {
                        placement: p,
                        message: "start offset of one sample period or more".into(),
                    });
                }
            }
        }
        let (start, end) = calibration_window;
        if start >= end || end >= len {
            return Err(Error::InvalidRecording(format!(
                "calibration window {start}..{end} must be non-empty and precede walking data ({len} samples)"
            )));
        }
        Ok(Self {
            subject,
            streams,
            sample_rate,
            calibration_window,
        })
    }

    pub fn subject(&self) -> &SubjectMeta {
        &self.subject
    }

    pub fn stream(&self, p: SensorPlacement) -> &[ImuSample<T>] {
        &self.streams[p.index()]
    }

    pub fn streams(&self) -> &[Vec<ImuSample<T>>; 7] {
        &self.streams
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn calibration_window(&self) -> (usize, usize) {
        self.calibration_window
    }

    /// Samples per stream.
    pub fn len(&self) -> usize {
        self.streams[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample range after the standing phase.
    pub fn walking_range(&self) -> std::ops::Range<usize> {
        self.calibration_window.1..self.len()
    }

    /// Timestamps of the reference (pelvis) stream.
    pub fn times(&self) -> Vec<T> {
        self.stream(SensorPlacement::Pelvis)
            .iter()
            .map(|s| s.t)
            .collect()
    }

    pub fn with_subject(mut self, subject: SubjectMeta) -> Result<Self> {
        subject.validate()?;
        self.subject = subject;
        Ok(self)
    }

    /// Maps every sample through `f`, re-validating the result.
    pub fn map_samples(
        &self,
        mut f: impl FnMut(SensorPlacement, &ImuSample<T>) -> ImuSample<T>,
    ) -> Result<Self> {
        let streams = SensorPlacement::ALL.map(|p| {
            self.stream(p)
                .iter()
                .map(|s| f(p, s))
                .collect::<Vec<_>>()
        });
        Self::new(
            self.subject.clone(),
            streams,
            self.sample_rate,
            self.calibration_window,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> SubjectMeta {
        SubjectMeta {
            id: "s1".into(),
            group: Group::Control,
            age: 30.0,
            weight: 70.0,
            gender: Gender::Female,
            days_post_op: None,
        }
    }

    fn still_stream(n: usize) -> Vec<ImuSample<f64>> {
        (0..n)
            .map(|i| ImuSample {
                t: i as f64 / 100.0,
                accel: Vector3::new(0.0, 0.0, 9.81),
                gyro: Vector3::zeros(),
                mag: Vector3::new(0.2, 0.0, -0.4),
            })
            .collect()
    }

    #[test]
    fn accepts_valid_recording() {
        let streams = std::array::from_fn(|_| still_stream(300));
        let r = TrialRecording::new(meta(), streams, 100.0, (0, 150)).unwrap();
        assert_eq!(r.len(), 300);
        assert_eq!(r.walking_range(), 150..300);
    }

    #[test]
    fn rejects_non_monotonic_time() {
        let mut streams: [Vec<ImuSample<f64>>; 7] = std::array::from_fn(|_| still_stream(300));
        streams[3][10].t = streams[3][9].t;
        assert!(TrialRecording::new(meta(), streams, 100.0, (0, 150)).is_err());
    }

    #[test]
    fn rejects_empty_placement() {
        let mut streams: [Vec<ImuSample<f64>>; 7] = std::array::from_fn(|_| still_stream(300));
        streams[SensorPlacement::Pelvis.index()].clear();
        assert!(matches!(
            TrialRecording::new(meta(), streams, 100.0, (0, 150)),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn rejects_saturated_gyro() {
        let mut streams: [Vec<ImuSample<f64>>; 7] = std::array::from_fn(|_| still_stream(300));
        streams[0][5].gyro.x = 600.0;
        assert!(matches!(
            TrialRecording::new(meta(), streams, 100.0, (0, 150)),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn subject_meta_days_iff_patient() {
        let mut m = meta();
        m.days_post_op = Some(3);
        assert!(m.validate().is_err());
        m.group = Group::Patient;
        assert!(m.validate().is_ok());
        m.days_post_op = None;
        assert!(m.validate().is_err());
    }

    #[test]
    fn joints_pair_adjacent_segments() {
        for j in JointId::ALL {
            let (p, d) = j.segments();
            assert_ne!(p, d);
        }
        assert_eq!(
            JointId::LeftKnee.segments(),
            (SensorPlacement::LeftThigh, SensorPlacement::LeftShank)
        );
    }

    #[test]
    fn placement_names_round_trip() {
        for p in SensorPlacement::ALL {
            assert_eq!(p.name().parse::<SensorPlacement>().unwrap(), p);
        }
    }
}
