//! Sagittal segment and joint angles.
//!
//! Each segment's inclination is measured twice: from the low-passed
//! accelerometer (gravity direction in the aligned sensor frame) and by
//! integrating the aligned gyro's medio-lateral rate. One Kalman filter per
//! segment fuses the two; joint angles are differences of the corrected
//! segment angles, proximal minus distal.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::butterworth::Smoother;
use super::kalman::{kf_segment_angle, KfOutput, KfParams, KfState};
use crate::error::Result;
use crate::ingest::{sagittal_inclination_deg, CalibrationOffsets};
use crate::model::{JointId, SensorPlacement, TimeSeries, TrialRecording, Vector3};
use crate::scalar::Real;

/// Removes ±360° jumps between consecutive samples in place.
pub fn unwrap_degrees<T: Real>(x: &mut [T]) {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut shift = T::zero();
    for i in 1..x.len() {
        let raw = x[i];
        let prev_raw = x[i - 1] - shift;
        let d = raw - prev_raw;
        if d > half {
            shift = shift - full;
        } else if d < -half {
            shift = shift + full;
        }
        x[i] = raw + shift;
    }
}

/// Inclination in degrees of each specific-force reading in the aligned
/// segment frame: `atan2(anterior, vertical)` with the anterior component
/// taken as `-x`, unwrapped.
pub fn accel_inclination<T: Real>(accel: &[Vector3<T>]) -> Vec<T> {
    let mut out: Vec<T> = accel.iter().map(sagittal_inclination_deg).collect();
    unwrap_degrees(&mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentAngles<T> {
    pub placement: SensorPlacement,
    /// Accelerometer inclination, degrees.
    pub theta_a: Vec<T>,
    /// Gyro integration and Kalman output.
    pub kf: KfOutput<T>,
}

/// Segment angles for all seven sensors of an aligned trial (see
/// [`CalibrationOffsets::apply`]). The accelerometer is low-passed with
/// `smoother` before its inclination is taken.
pub fn segment_angles<T: Real>(
    aligned: &TrialRecording<T>,
    params: &KfParams,
    smoother: &Smoother<T>,
) -> Result<Vec<SegmentAngles<T>>> {
    let fs = aligned.sample_rate();
    SensorPlacement::ALL
        .iter()
        .map(|&p| {
            let stream = aligned.stream(p);
            let ax: Vec<T> = stream.iter().map(|s| s.accel.x).collect();
            let az: Vec<T> = stream.iter().map(|s| s.accel.z).collect();
            let ax = smoother.apply(&ax);
            let az = smoother.apply(&az);
            let filtered: Vec<Vector3<T>> = ax
                .iter()
                .zip(&az)
                .map(|(&x, &z)| Vector3::new(x, T::zero(), z))
                .collect();
            let theta_a = accel_inclination(&filtered);
            let rate: Vec<T> = stream.iter().map(|s| s.gyro.y).collect();
            let kf = kf_segment_angle(&rate, &theta_a, KfState::new(params, fs));
            Ok(SegmentAngles {
                placement: p,
                theta_a,
                kf,
            })
        })
        .collect()
}

/// Per-joint view of the fusion, offsets already removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTrace<T> {
    pub joint: JointId,
    pub t: Vec<T>,
    pub theta_g: Vec<T>,
    pub theta_a: Vec<T>,
    pub corrected: Vec<T>,
    /// Proximal minus distal gyro bias estimate, °/s.
    pub beta: Vec<T>,
}

impl<T: Real> JointTrace<T> {
    /// `t,theta_g,theta_a,theta_corrected,beta` rows.
    pub fn debug_csv(&self) -> String {
        let mut s = String::from("t,theta_g,theta_a,theta_corrected,beta\n");
        for i in 0..self.t.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                self.t[i], self.theta_g[i], self.theta_a[i], self.corrected[i], self.beta[i]
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointAngleSeries<T> {
    pub joint: JointId,
    /// Sagittal angle in degrees, zero in the standing posture.
    pub angle: TimeSeries<T>,
}

/// Aligns a raw trial with `offsets` and returns one trace per joint.
pub fn joint_traces<T: Real>(
    trial: &TrialRecording<T>,
    offsets: &CalibrationOffsets<T>,
    params: &KfParams,
    smoother: &Smoother<T>,
) -> Result<Vec<JointTrace<T>>> {
    let aligned = offsets.apply(trial)?;
    let segments = segment_angles(&aligned, params, smoother)?;
    let times = trial.times();
    Ok(JointId::ALL
        .iter()
        .map(|&j| {
            let (prox, dist) = j.segments();
            let p = &segments[prox.index()];
            let d = &segments[dist.index()];
            let off = offsets.joint(j);
            let diff = |a: &[T], b: &[T], o: T| -> Vec<T> {
                a.iter().zip(b).map(|(&x, &y)| x - y - o).collect()
            };
            JointTrace {
                joint: j,
                t: times.clone(),
                theta_g: diff(&p.kf.theta_g, &d.kf.theta_g, off),
                theta_a: diff(&p.theta_a, &d.theta_a, off),
                corrected: diff(&p.kf.corrected, &d.kf.corrected, off),
                beta: diff(&p.kf.bias, &d.kf.bias, T::zero()),
            }
        })
        .collect())
}

/// Drift-corrected sagittal angles of all six joints over the whole trial.
pub fn joint_angles<T: Real>(
    trial: &TrialRecording<T>,
    offsets: &CalibrationOffsets<T>,
    params: &KfParams,
    smoother: &Smoother<T>,
) -> Result<Vec<JointAngleSeries<T>>> {
    let fs = trial.sample_rate();
    Ok(joint_traces(trial, offsets, params, smoother)?
        .into_iter()
        .map(|tr| JointAngleSeries {
            joint: tr.joint,
            angle: TimeSeries::new(tr.joint.snake_name(), fs, tr.corrected),
        })
        .collect())
}
