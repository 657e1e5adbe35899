//! From a raw trial to the 27 analysed signals and their features.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::periodicity::{periodicity, Periodicity};
use crate::features::{extract_features, windowed_trial_features, Axis, SignalId};
use crate::ingest::{calibrate, CalibrationOffsets};
use crate::kinematics::{
    joint_traces, to_global_accel, JointTrace, KfParams, OrientationState, Smoother,
    DEFAULT_GAIN, DEFAULT_GRAVITY, GAIT_CUTOFF_HZ, GAIT_FILTER_ORDER,
};
use crate::model::{SensorPlacement, TimeSeries, TrialRecording};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One feature vector over the whole walking segment.
    Batch,
    /// One feature vector per sliding window.
    Windowed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub filter_order: usize,
    pub cutoff_hz: f64,
    /// Forward-backward filtering; a single causal pass otherwise.
    pub zero_phase: bool,
    pub orientation_gain: f64,
    pub gravity: f64,
    pub use_magnetometer: bool,
    pub kf: KfParams,
    pub mode: Mode,
    /// Window length in samples for windowed mode.
    pub window: usize,
    pub hop: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter_order: GAIT_FILTER_ORDER,
            cutoff_hz: GAIT_CUTOFF_HZ,
            zero_phase: true,
            orientation_gain: DEFAULT_GAIN,
            gravity: DEFAULT_GRAVITY,
            use_magnetometer: false,
            kf: KfParams::default(),
            mode: Mode::Batch,
            window: 512,
            hop: 256,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=10).contains(&self.filter_order) {
            return bad(format!("filter_order {} outside 1..=10", self.filter_order));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < 50.0) {
            return bad(format!("cutoff_hz {} outside (0, 50)", self.cutoff_hz));
        }
        if !(self.orientation_gain > 0.0 && self.orientation_gain <= 1.0) {
            return bad(format!("orientation_gain {} outside (0, 1]", self.orientation_gain));
        }
        if !(self.gravity > 9.0 && self.gravity < 10.5) {
            return bad(format!("gravity {} outside (9, 10.5)", self.gravity));
        }
        let kf = &self.kf;
        for (name, v) in [
            ("kf.q_angle", kf.q_angle),
            ("kf.q_bias", kf.q_bias),
            ("kf.p0_angle", kf.p0_angle),
            ("kf.p0_bias", kf.p0_bias),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be finite and non-negative"));
            }
        }
        if !(kf.r > 0.0 && kf.r.is_finite()) {
            return bad(format!("kf.r {} must be positive", kf.r));
        }
        if self.window < 64 || self.hop == 0 {
            return bad(format!(
                "window {} must be at least 64 samples and hop {} at least 1",
                self.window, self.hop
            ));
        }
        Ok(())
    }

    pub fn smoother<T: Real>(&self, sample_rate: T) -> Result<Smoother<T>> {
        Smoother::gait(
            self.filter_order,
            T::lit(self.cutoff_hz),
            sample_rate,
            self.zero_phase,
        )
    }
}

/// Intermediate products of one trial.
#[derive(Clone, Debug)]
pub struct ProcessedTrial<T> {
    pub offsets: CalibrationOffsets<T>,
    /// 27 walking-segment signals in [`SignalId::all`] order.
    pub signals: Vec<TimeSeries<T>>,
    /// Whole-trial joint fusion traces.
    pub joints: Vec<JointTrace<T>>,
}

/// Gravity-free global acceleration of every sensor over the whole trial,
/// low-passed, as `[placement][axis]`.
pub fn global_accelerations<T: Real>(
    aligned: &TrialRecording<T>,
    cfg: &PipelineConfig,
    smoother: &Smoother<T>,
) -> Result<Vec<[Vec<T>; 3]>> {
    let dt = aligned.sample_rate().recip();
    let gravity = T::lit(cfg.gravity);
    SensorPlacement::ALL
        .iter()
        .map(|&p| {
            let stream = aligned.stream(p);
            let mut state = OrientationState::from_accel(stream[0].accel, T::lit(cfg.orientation_gain), dt)
                .with_magnetometer(cfg.use_magnetometer);
            let mut axes: [Vec<T>; 3] = Default::default();
            for s in stream {
                state.step(s.accel, s.gyro.map(T::to_radians), s.mag);
                let g = to_global_accel(state.q, s.accel, gravity)?;
                axes[0].push(g.x);
                axes[1].push(g.y);
                axes[2].push(g.z);
            }
            Ok(axes.map(|a| smoother.apply(&a)))
        })
        .collect()
}

/// Calibrates a trial and derives its 27 walking-segment signals.
pub fn process_trial<T: Real>(
    trial: &TrialRecording<T>,
    cfg: &PipelineConfig,
) -> Result<ProcessedTrial<T>> {
    let fs = trial.sample_rate();
    let smoother = cfg.smoother(fs)?;
    let offsets = calibrate(trial)?;
    let aligned = offsets.apply(trial)?;
    let accel = global_accelerations(&aligned, cfg, &smoother)?;
    let joints = joint_traces(trial, &offsets, &cfg.kf, &smoother)?;
    let walk = trial.walking_range();

    let signals = SignalId::all()
        .into_iter()
        .map(|id| {
            let values = match id {
                SignalId::Accel(p, a) => {
                    let idx = match a {
                        Axis::X => 0,
                        Axis::Y => 1,
                        Axis::Z => 2,
                    };
                    accel[p.index()][idx][walk.clone()].to_vec()
                }
                SignalId::Joint(j) => joints[j.index()].corrected[walk.clone()].to_vec(),
            };
            TimeSeries::new(id.name(), fs, values)
        })
        .collect();
    Ok(ProcessedTrial {
        offsets,
        signals,
        joints,
    })
}

/// Signal used for trial-level step and stride timing: the pelvis vertical
/// acceleration, which repeats once per step on either side.
pub const TIMING_SIGNAL: SignalId = SignalId::Accel(SensorPlacement::Pelvis, Axis::Z);

impl<T: Real> ProcessedTrial<T> {
    pub fn signal(&self, id: SignalId) -> &TimeSeries<T> {
        &self.signals[id.index()]
    }

    /// Step and stride timing of the whole trial.
    pub fn timing(&self) -> Result<Periodicity<T>> {
        let s = self.signal(TIMING_SIGNAL);
        periodicity(&s.values, s.sample_rate)
    }
}

/// Feature vectors of a trial: one in batch mode, one per window otherwise.
pub fn trial_features<T: Real>(trial: &TrialRecording<T>, cfg: &PipelineConfig) -> Result<Vec<Vec<T>>> {
    let processed = process_trial(trial, cfg)?;
    match cfg.mode {
        Mode::Batch => Ok(vec![extract_features(&processed.signals)?]),
        Mode::Windowed => windowed_trial_features(&processed.signals, cfg.window, cfg.hop),
    }
}
