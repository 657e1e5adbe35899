//! Standing-phase calibration.
//!
//! During quiet standing every joint angle is defined as 0°. The mean
//! accelerometer reading of each sensor gives its mounting tilt; the rotation
//! that brings that reading onto the vertical is the sensor's reference
//! quaternion. Sensor data rotated by the reference quaternion reads as if
//! the sensor were mounted aligned with its segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ImuSample, JointId, Quaternion, SensorPlacement, TrialRecording, Vector3};
use crate::scalar::Real;

/// Gyro magnitude bound for quiet standing, °/s.
pub const STATIONARY_GYRO_DPS: f64 = 5.0;
/// Shortest accepted standing window, seconds.
pub const MIN_CALIBRATION_SECONDS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementCalibration<T> {
    /// Rotation from the raw sensor frame to the aligned segment frame.
    pub reference: Quaternion<T>,
    /// Sagittal mounting tilt in degrees.
    pub sagittal_tilt_deg: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOffsets<T> {
    pub placements: [PlacementCalibration<T>; 7],
    /// Residual joint angle over the standing window after alignment, degrees.
    pub joints: [T; 6],
}

impl<T: Real> CalibrationOffsets<T> {
    pub fn identity() -> Self {
        Self {
            placements: [PlacementCalibration {
                reference: Quaternion::identity(),
                sagittal_tilt_deg: T::zero(),
            }; 7],
            joints: [T::zero(); 6],
        }
    }

    pub fn placement(&self, p: SensorPlacement) -> &PlacementCalibration<T> {
        &self.placements[p.index()]
    }

    pub fn joint(&self, j: JointId) -> T {
        self.joints[j.index()]
    }

    /// Rotates every sensor's readings into its aligned segment frame.
    pub fn align_sample(&self, p: SensorPlacement, s: &ImuSample<T>) -> ImuSample<T> {
        let q = self.placement(p).reference;
        ImuSample {
            t: s.t,
            accel: q.rotate_unchecked(s.accel),
            gyro: q.rotate_unchecked(s.gyro),
            mag: q.rotate_unchecked(s.mag),
        }
    }

    pub fn apply(&self, trial: &TrialRecording<T>) -> Result<TrialRecording<T>> {
        trial.map_samples(|p, s| self.align_sample(p, s))
    }

    /// Largest reference rotation angle or joint offset, in degrees.
    pub fn max_deviation_deg(&self) -> T {
        let rot = self
            .placements
            .iter()
            .map(|c| c.reference.angle().to_degrees())
            .fold(T::zero(), T::max);
        self.joints.iter().map(|j| j.abs()).fold(rot, T::max)
    }
}

/// Sagittal inclination in degrees of a specific-force reading in an aligned
/// frame: zero when the reading points along +z.
pub(crate) fn sagittal_inclination_deg<T: Real>(a: &Vector3<T>) -> T {
    (-a.x).atan2(a.z).to_degrees()
}

/// Computes calibration offsets from the trial's standing window.
pub fn calibrate<T: Real>(trial: &TrialRecording<T>) -> Result<CalibrationOffsets<T>> {
    let (start, end) = trial.calibration_window();
    let n = end - start;
    let needed = (trial.sample_rate() * T::lit(MIN_CALIBRATION_SECONDS))
        .round()
        .to_usize()
        .unwrap_or(usize::MAX);
    if n < needed {
        return Err(Error::NotStationary(format!(
            "standing window has {n} samples, need at least {needed}"
        )));
    }
    let limit = T::lit(STATIONARY_GYRO_DPS);
    for p in SensorPlacement::ALL {
        for (i, s) in trial.stream(p)[start..end].iter().enumerate() {
            let g = s.gyro.norm();
            if g >= limit {
                return Err(Error::NotStationary(format!(
                    "{p} gyro magnitude {g:.2} °/s at sample {}",
                    start + i
                )));
            }
        }
    }

    let count = T::from_count(n);
    let placements = SensorPlacement::ALL.map(|p| {
        let sum = trial.stream(p)[start..end]
            .iter()
            .fold(Vector3::zeros(), |acc, s| acc + s.accel);
        let mean = sum * count.recip();
        let reference = Quaternion::between(mean, Vector3::unit_z()).unwrap_or_default();
        PlacementCalibration {
            reference,
            sagittal_tilt_deg: sagittal_inclination_deg(&mean),
        }
    });

    let mut offsets = CalibrationOffsets {
        placements,
        joints: [T::zero(); 6],
    };
    for j in JointId::ALL {
        let (prox, dist) = j.segments();
        let qp = offsets.placement(prox).reference;
        let qd = offsets.placement(dist).reference;
        let total: T = (start..end)
            .map(|i| {
                let ap = qp.rotate_unchecked(trial.stream(prox)[i].accel);
                let ad = qd.rotate_unchecked(trial.stream(dist)[i].accel);
                sagittal_inclination_deg(&ap) - sagittal_inclination_deg(&ad)
            })
            .sum();
        offsets.joints[j.index()] = total / count;
    }
    Ok(offsets)
}
