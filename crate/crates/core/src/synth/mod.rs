//! Seeded generator of seven-sensor walking trials with known ground truth.
//!
//! Joint angles follow three-harmonic Fourier curves of a canonical gait
//! cycle, scaled to the profile's ranges of motion. Segment angles chain
//! from the pelvis down each leg (joint = proximal − distal). Each sensor is
//! pitched by its segment angle plus a mounting tilt; its gyro reads the
//! analytic angle rate and its accelerometer reads gravity plus a small
//! motion acceleration, both rotated into the sensor frame. A standing
//! phase precedes walking for calibration.

mod cohort;
pub mod planted;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use cohort::{
    fixture_cohorts, recovery_cohort, standard_cohort, CohortPlan, CohortSpec, PlannedTrial, Population,
    Separation, Spread, EASY_SEPARATION_SD, RECOVERY_HORIZON_DAYS,
};

use crate::error::{Error, Result};
use crate::model::{
    Group, ImuSample, JointId, SensorPlacement, SubjectMeta, TrialRecording, Vector3,
    ACCEL_RANGE, GYRO_RANGE, MAG_RANGE,
};

pub const SAMPLE_RATE_HZ: f64 = 100.0;
/// Quiet standing before walking, seconds. Also the calibration window.
pub const STANDING_S: f64 = 1.5;
/// Time to blend from standing into steady walking, seconds.
pub const RAMP_S: f64 = 0.5;
pub const GRAVITY: f64 = 9.81;
/// Earth field in the global frame, gauss.
pub const EARTH_FIELD: [f64; 3] = [0.2, 0.0, -0.4];

/// Output resolution as steps per unit.
const ACCEL_STEPS: f64 = 1e3;
const GYRO_STEPS: f64 = 1e2;
const MAG_STEPS: f64 = 1e4;

/// Canonical curves `[c0, a1, b1, a2, b2, a3, b3]` for
/// `c0 + Σ a_k cos(2πkp) + b_k sin(2πkp)`, phase 0 at heel strike.
const HIP_CURVE: [f64; 7] = [13.95, 18.452, -2.72, -2.231, -2.227, -0.028, 0.867];
const KNEE_CURVE: [f64; 7] = [22.8, -4.508, -18.309, -10.779, 6.102, -2.004, 2.436];
const ANKLE_CURVE: [f64; 7] = [-1.8, 0.817, 4.977, -0.671, -6.643, -0.064, 1.298];
/// Pelvic tilt amplitude at twice the stride frequency, degrees.
const PELVIS_TILT_DEG: f64 = 2.0;

/// Motion acceleration amplitudes of one sensor, m/s².
#[derive(Clone, Copy, Debug)]
struct MotionGains {
    own_strike: f64,
    other_strike: f64,
    bounce: f64,
    sway: f64,
    fore_aft: f64,
}

fn motion_gains(p: SensorPlacement) -> MotionGains {
    use SensorPlacement::*;
    let (own_strike, other_strike) = match p {
        Pelvis => (1.0, 1.0),
        LeftThigh | RightThigh => (1.5, 0.5),
        LeftShank | RightShank => (2.5, 0.5),
        LeftFoot | RightFoot => (4.0, 0.5),
    };
    MotionGains {
        own_strike,
        other_strike,
        bounce: 1.0,
        sway: 0.8,
        fore_aft: if p == Pelvis { 0.25 } else { 0.3 },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevels {
    /// Standard deviation, m/s².
    pub accel: f64,
    /// Standard deviation, °/s.
    pub gyro: f64,
    /// Standard deviation, gauss.
    pub mag: f64,
}

impl NoiseLevels {
    pub const ZERO: NoiseLevels = NoiseLevels {
        accel: 0.0,
        gyro: 0.0,
        mag: 0.0,
    };
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            accel: 0.05,
            gyro: 0.5,
            mag: 0.002,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitProfile {
    /// Steps per second.
    pub cadence: f64,
    /// The left step lasts `1 + stride_asymmetry` times the right step.
    pub stride_asymmetry: f64,
    /// Range of motion per joint in [`JointId::ALL`] order, degrees.
    pub amplitude: [f64; 6],
    pub noise: NoiseLevels,
    /// Gyro bias about each sensor's medio-lateral axis, °/s.
    pub gyro_bias: [f64; 7],
    /// Sensor pitch relative to its segment, degrees.
    pub mount_tilt: [f64; 7],
    pub group: Group,
    pub recovery_day: Option<u32>,
    /// Cycle phase at walking onset, fraction of a stride.
    pub start_phase: f64,
    pub seed: u64,
}

/// Canonical range of motion of each joint curve, degrees.
pub fn canonical_range(j: JointId) -> f64 {
    let c = joint_curve(j);
    let (lo, hi) = (0..2000)
        .map(|i| fourier(&c, i as f64 / 2000.0).0)
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Range of motion giving the canonical curve shape with its knee peak at
/// 60°, hip 38° and ankle 22°.
pub fn default_amplitude() -> [f64; 6] {
    let knee = 60.0 * canonical_range(JointId::LeftKnee) / curve_peak(JointId::LeftKnee);
    [38.0, 38.0, knee, knee, 22.0, 22.0]
}

fn curve_peak(j: JointId) -> f64 {
    let c = joint_curve(j);
    (0..2000)
        .map(|i| fourier(&c, i as f64 / 2000.0).0)
        .fold(f64::MIN, f64::max)
}

impl GaitProfile {
    /// A healthy, symmetric, noisy profile at 1.85 steps/s.
    pub fn healthy(seed: u64) -> Self {
        Self {
            cadence: 1.85,
            stride_asymmetry: 0.0,
            amplitude: default_amplitude(),
            noise: NoiseLevels::default(),
            gyro_bias: [0.0; 7],
            mount_tilt: [0.0; 7],
            group: Group::Control,
            recovery_day: None,
            start_phase: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if !(0.5..=3.0).contains(&self.cadence) {
            return bad(format!("cadence {} outside [0.5, 3.0] steps/s", self.cadence));
        }
        if !(0.0..=0.5).contains(&self.stride_asymmetry) {
            return bad(format!("stride asymmetry {} outside [0, 0.5]", self.stride_asymmetry));
        }
        for j in JointId::ALL {
            let a = self.amplitude[j.index()];
            let limit = match j {
                JointId::LeftKnee | JointId::RightKnee => 75.0,
                JointId::LeftHip | JointId::RightHip => 60.0,
                JointId::LeftAnkle | JointId::RightAnkle => 45.0,
            };
            if !(0.0..=limit).contains(&a) {
                return bad(format!("{j} range of motion {a}° outside [0, {limit}]"));
            }
        }
        let n = &self.noise;
        if ![n.accel, n.gyro, n.mag].iter().all(|v| (0.0..1.0).contains(v)) {
            return bad("noise levels must lie in [0, 1)".into());
        }
        if self.gyro_bias.iter().any(|b| !(b.abs() <= 5.0)) {
            return bad("gyro bias must be within ±5 °/s".into());
        }
        if self.mount_tilt.iter().any(|m| !(m.abs() <= 30.0)) {
            return bad("mount tilt must be within ±30°".into());
        }
        if (self.group == Group::Patient) != self.recovery_day.is_some() {
            return bad("recovery day is required for patients only".into());
        }
        Ok(())
    }

    pub fn stride_period(&self) -> f64 {
        2.0 / self.cadence
    }

    /// Fraction of the stride from left to right heel strike.
    fn right_lag(&self) -> f64 {
        (1.0 + self.stride_asymmetry) / (2.0 + self.stride_asymmetry)
    }
}

/// Analytic signals behind a generated trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub t: Vec<f64>,
    /// Joint angles in [`JointId::ALL`] order, degrees.
    pub joint_angles: Vec<Vec<f64>>,
    /// Segment angles in [`SensorPlacement::ALL`] order, degrees, without
    /// mounting tilt.
    pub segment_angles: Vec<Vec<f64>>,
    /// Segment angle rates, °/s.
    pub segment_rates: Vec<Vec<f64>>,
    pub gyro_bias: [f64; 7],
    /// Mean step period, seconds.
    pub step_period: f64,
    pub stride_period: f64,
    /// Left and right step durations, seconds.
    pub step_durations: (f64, f64),
    pub standing_samples: usize,
}

fn joint_curve(j: JointId) -> [f64; 7] {
    match j {
        JointId::LeftHip | JointId::RightHip => HIP_CURVE,
        JointId::LeftKnee | JointId::RightKnee => KNEE_CURVE,
        JointId::LeftAnkle | JointId::RightAnkle => ANKLE_CURVE,
    }
}

/// Value and phase derivative of a Fourier curve.
fn fourier(c: &[f64; 7], p: f64) -> (f64, f64) {
    let mut v = c[0];
    let mut d = 0.0;
    for h in 1..=3 {
        let w = std::f64::consts::TAU * h as f64;
        let (s, co) = (w * p).sin_cos();
        v += c[2 * h - 1] * co + c[2 * h] * s;
        d += w * (-c[2 * h - 1] * s + c[2 * h] * co);
    }
    (v, d)
}

/// Smoothstep blend from standing (0) to walking (1) and its time
/// derivative.
fn ramp(t: f64) -> (f64, f64) {
    if t <= STANDING_S {
        return (0.0, 0.0);
    }
    let u = (t - STANDING_S) / RAMP_S;
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    (u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u) / RAMP_S)
}

/// Zero-mean von Mises pulse peaking at phase 0.
fn strike(p: f64) -> f64 {
    const KAPPA: f64 = 8.0;
    // I0(8) e^-8, the pulse's mean over a cycle.
    const MEAN: f64 = 0.143_431_781_856_850_3;
    (KAPPA * ((std::f64::consts::TAU * p).cos() - 1.0)).exp() - MEAN
}

fn rotate_y_inverse(deg: f64, v: [f64; 3]) -> Vector3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    // Rᵀ v for R = R_y(deg).
    Vector3::new(c * v[0] - s * v[2], v[1], s * v[0] + c * v[2])
}

/// Rounds to `1/steps`; dividing by the exact integer keeps the printed
/// form short.
fn quantize(v: f64, steps: f64) -> f64 {
    (v * steps).round() / steps
}

/// Kinematic state of all joints and segments at time `t`.
struct Pose {
    joints: [(f64, f64); 6],
    segments: [(f64, f64); 7],
    phase_left: f64,
    phase_right: f64,
    ramp: f64,
}

fn pose(profile: &GaitProfile, scale: &[f64; 6], t: f64) -> Pose {
    use SensorPlacement::*;
    let stride = profile.stride_period();
    let walk = (t - STANDING_S).max(0.0);
    let pl = profile.start_phase + walk / stride;
    let pr = pl - profile.right_lag();
    let (r, dr) = ramp(t);
    let dp = 1.0 / stride;

    let mut joints = [(0.0, 0.0); 6];
    for j in JointId::ALL {
        let p = match j {
            JointId::LeftHip | JointId::LeftKnee | JointId::LeftAnkle => pl,
            _ => pr,
        };
        let (v, d) = fourier(&joint_curve(j), p);
        let k = scale[j.index()];
        joints[j.index()] = (r * k * v, dr * k * v + r * k * d * dp);
    }

    let w = 2.0 * std::f64::consts::TAU;
    let tilt = 0.5 * PELVIS_TILT_DEG * ((w * pl).sin() + (w * pr).sin());
    let dtilt = 0.5 * PELVIS_TILT_DEG * w * dp * ((w * pl).cos() + (w * pr).cos());
    let pelvis = (r * tilt, dr * tilt + r * dtilt);

    let mut segments = [(0.0, 0.0); 7];
    segments[Pelvis.index()] = pelvis;
    for j in JointId::ALL {
        let (prox, dist) = j.segments();
        let (pa, pd) = segments[prox.index()];
        let (ja, jd) = joints[j.index()];
        segments[dist.index()] = (pa - ja, pd - jd);
    }
    Pose {
        joints,
        segments,
        phase_left: pl,
        phase_right: pr,
        ramp: r,
    }
}

fn motion_accel(p: SensorPlacement, pose: &Pose) -> [f64; 3] {
    use crate::model::Side;
    let g = motion_gains(p);
    let (own, other) = match p.side() {
        Some(Side::Right) => (pose.phase_right, pose.phase_left),
        _ => (pose.phase_left, pose.phase_right),
    };
    let w2 = 2.0 * std::f64::consts::TAU;
    let strikes = g.own_strike * strike(own) + g.other_strike * strike(other);
    let bounce = 0.5 * g.bounce * ((w2 * own).cos() + (w2 * other).cos());
    let sway = g.sway * (std::f64::consts::TAU * pose.phase_left).sin();
    let fore = match p.side() {
        Some(_) => g.fore_aft * (w2 * own).sin(),
        None => 0.5 * g.fore_aft * ((w2 * own).sin() + (w2 * other).sin()),
    };
    [pose.ramp * fore, pose.ramp * sway, pose.ramp * (strikes + bounce)]
}

/// Generates `walking_s` seconds of walking after the standing phase.
pub fn generate_trial(
    profile: &GaitProfile,
    subject: SubjectMeta,
    walking_s: f64,
) -> Result<(TrialRecording<f64>, GroundTruth)> {
    profile.validate()?;
    if !(walking_s >= 2.0) {
        return Err(Error::InvalidProfile(format!(
            "walking duration {walking_s} s is shorter than 2 s"
        )));
    }
    let fs = SAMPLE_RATE_HZ;
    let standing = (STANDING_S * fs).round() as usize;
    let n = standing + (walking_s * fs).round() as usize;
    let scale = JointId::ALL.map(|j| profile.amplitude[j.index()] / canonical_range(j));

    let mut rngs: Vec<ChaCha8Rng> = (0..21)
        .map(|k| {
            let mut r = ChaCha8Rng::seed_from_u64(profile.seed);
            r.set_stream(k as u64 + 1);
            r
        })
        .collect();
    let gauss = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::InvalidProfile(e.to_string()));
    let (na, ng, nm) = (
        gauss(profile.noise.accel)?,
        gauss(profile.noise.gyro)?,
        gauss(profile.noise.mag)?,
    );

    let mut streams: [Vec<ImuSample<f64>>; 7] = Default::default();
    let mut truth = GroundTruth {
        t: Vec::with_capacity(n),
        joint_angles: vec![Vec::with_capacity(n); 6],
        segment_angles: vec![Vec::with_capacity(n); 7],
        segment_rates: vec![Vec::with_capacity(n); 7],
        gyro_bias: profile.gyro_bias,
        step_period: 1.0 / profile.cadence,
        stride_period: profile.stride_period(),
        step_durations: (
            profile.stride_period() * profile.right_lag(),
            profile.stride_period() * (1.0 - profile.right_lag()),
        ),
        standing_samples: standing,
    };

    for k in 0..n {
        let t = k as f64 / fs;
        let pose = pose(profile, &scale, t);
        truth.t.push(t);
        for j in JointId::ALL {
            truth.joint_angles[j.index()].push(pose.joints[j.index()].0);
        }
        for p in SensorPlacement::ALL {
            let i = p.index();
            let (angle, rate) = pose.segments[i];
            truth.segment_angles[i].push(angle);
            truth.segment_rates[i].push(rate);

            let pitch = angle + profile.mount_tilt[i];
            let m = motion_accel(p, &pose);
            let accel = rotate_y_inverse(pitch, [m[0], m[1], m[2] + GRAVITY]);
            let mag = rotate_y_inverse(pitch, EARTH_FIELD);
            let [ra, rg, rm] = &mut rngs[3 * i..3 * i + 3] else {
                unreachable!()
            };
            let noisy = |v: f64, d: &Normal<f64>, r: &mut ChaCha8Rng, q: f64| {
                quantize(v + d.sample(r), q)
            };
            let sample = ImuSample {
                t,
                accel: Vector3::new(
                    noisy(accel.x, &na, ra, ACCEL_STEPS),
                    noisy(accel.y, &na, ra, ACCEL_STEPS),
                    noisy(accel.z, &na, ra, ACCEL_STEPS),
                ),
                gyro: Vector3::new(
                    noisy(0.0, &ng, rg, GYRO_STEPS),
                    noisy(rate + profile.gyro_bias[i], &ng, rg, GYRO_STEPS),
                    noisy(0.0, &ng, rg, GYRO_STEPS),
                ),
                mag: Vector3::new(
                    noisy(mag.x, &nm, rm, MAG_STEPS),
                    noisy(mag.y, &nm, rm, MAG_STEPS),
                    noisy(mag.z, &nm, rm, MAG_STEPS),
                ),
            };
            if sample.accel.to_array().iter().any(|v| v.abs() > ACCEL_RANGE)
                || sample.gyro.to_array().iter().any(|v| v.abs() > GYRO_RANGE)
                || sample.mag.to_array().iter().any(|v| v.abs() > MAG_RANGE)
            {
                return Err(Error::InvalidProfile(format!(
                    "{p} saturates at t = {t:.2} s; reduce cadence or range of motion"
                )));
            }
            streams[i].push(sample);
        }
    }
    let trial = TrialRecording::new(subject, streams, fs, (0, standing))?;
    Ok((trial, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gender;

    fn subject() -> SubjectMeta {
        SubjectMeta {
            id: "c01".into(),
            group: Group::Control,
            age: 40.0,
            weight: 70.0,
            gender: Gender::Female,
            days_post_op: None,
        }
    }

    fn clean(seed: u64) -> GaitProfile {
        GaitProfile {
            noise: NoiseLevels::ZERO,
            ..GaitProfile::healthy(seed)
        }
    }

    #[test]
    fn curve_derivative_matches_finite_difference() {
        for j in JointId::ALL {
            let c = joint_curve(j);
            for i in 0..50 {
                let p = i as f64 / 50.0;
                let h = 1e-6;
                let fd = (fourier(&c, p + h).0 - fourier(&c, p - h).0) / (2.0 * h);
                assert!((fd - fourier(&c, p).1).abs() < 1e-5);
            }
        }
        assert!((strike(0.0) + 0.143_431_781_856_850_3 - 1.0).abs() < 1e-12);
        let mean: f64 = (0..10000).map(|i| strike(i as f64 / 10000.0)).sum::<f64>() / 10000.0;
        assert!(mean.abs() < 1e-6);
    }

    #[test]
    fn default_knee_peaks_at_sixty() {
        let scale = default_amplitude()[2] / canonical_range(JointId::LeftKnee);
        assert!((scale * curve_peak(JointId::LeftKnee) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_bits() {
        let p = GaitProfile::healthy(9);
        let (a, _) = generate_trial(&p, subject(), 4.0).unwrap();
        let (b, _) = generate_trial(&p, subject(), 4.0).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_trial(&GaitProfile::healthy(10), subject(), 4.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gyro_integrates_to_segment_angle() {
        let mut p = clean(1);
        p.gyro_bias = [0.3, -0.2, 0.1, 0.4, -0.5, 0.25, -0.1];
        let (trial, truth) = generate_trial(&p, subject(), 60.0).unwrap();
        for sp in SensorPlacement::ALL {
            let i = sp.index();
            let s = trial.stream(sp);
            let mut angle = truth.segment_angles[i][0];
            let mut worst: f64 = 0.0;
            for k in 1..s.len() {
                let w = 0.5 * (s[k - 1].gyro.y + s[k].gyro.y) - truth.gyro_bias[i];
                angle += 0.01 * w;
                worst = worst.max((angle - truth.segment_angles[i][k]).abs());
            }
            assert!(worst < 0.1, "{sp}: {worst}");
        }
    }

    #[test]
    fn standing_reads_gravity() {
        let mut p = GaitProfile::healthy(2);
        p.mount_tilt = [5.0, -3.0, 0.0, 2.0, 8.0, -6.0, 1.0];
        let (trial, truth) = generate_trial(&p, subject(), 3.0).unwrap();
        for sp in SensorPlacement::ALL {
            let m = p.mount_tilt[sp.index()].to_radians();
            for s in &trial.stream(sp)[..truth.standing_samples] {
                let expect = Vector3::new(-m.sin() * GRAVITY, 0.0, m.cos() * GRAVITY);
                assert!((s.accel - expect).norm() < 0.3);
            }
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        let mut p = GaitProfile::healthy(1);
        p.cadence = 3.5;
        assert!(matches!(generate_trial(&p, subject(), 5.0), Err(Error::InvalidProfile(_))));
        let mut p = GaitProfile::healthy(1);
        p.amplitude[2] = 80.0;
        assert!(matches!(p.validate(), Err(Error::InvalidProfile(_))));
        let mut p = GaitProfile::healthy(1);
        p.cadence = 3.0;
        p.amplitude = [60.0, 60.0, 75.0, 75.0, 45.0, 45.0];
        assert!(matches!(generate_trial(&p, subject(), 5.0), Err(Error::InvalidProfile(_))));
    }
}
