//! The nine gait features of each of the 27 trial signals.
//!
//! Signals are the three global acceleration components of each sensor
//! (gravity removed) followed by the six sagittal joint angles. Features are
//! computed per signal in [`FeatureId`] order, so the feature vector of a
//! trial has 27 × 9 = 243 entries in a fixed, named order.

pub mod periodicity;
pub mod spectrum;
mod table;
pub mod wavelet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use periodicity::{
    autocorrelation, periodicity, regularity, regularity_at_lag, step_period, stride_period,
    Periodicity,
};
pub use spectrum::{apc, periodogram, smnr_with_period, spectral_entropy, Periodogram};
pub use table::{FeatureTable, FeatureVector, RowMeta};
pub use wavelet::{wavedec, wavelet_energy};

use crate::error::{Error, Result};
use crate::model::{JointId, SensorPlacement, TimeSeries};
use crate::scalar::Real;

pub const SIGNAL_COUNT: usize = 27;
pub const FEATURES_PER_SIGNAL: usize = 9;
pub const FEATURE_COUNT: usize = SIGNAL_COUNT * FEATURES_PER_SIGNAL;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// One of the 27 analysed signals of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalId {
    /// Global-frame acceleration component of a sensor.
    Accel(SensorPlacement, Axis),
    Joint(JointId),
}

impl SignalId {
    pub fn all() -> [SignalId; SIGNAL_COUNT] {
        let mut out = [SignalId::Joint(JointId::LeftHip); SIGNAL_COUNT];
        for p in SensorPlacement::ALL {
            for a in Axis::ALL {
                out[p.index() * 3 + a as usize] = SignalId::Accel(p, a);
            }
        }
        for j in JointId::ALL {
            out[21 + j.index()] = SignalId::Joint(j);
        }
        out
    }

    pub fn index(self) -> usize {
        match self {
            SignalId::Accel(p, a) => p.index() * 3 + a as usize,
            SignalId::Joint(j) => 21 + j.index(),
        }
    }

    pub fn name(self) -> String {
        match self {
            SignalId::Accel(p, a) => format!("{}_{}", p.snake_name(), a.name()),
            SignalId::Joint(j) => j.snake_name().to_string(),
        }
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SignalId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalId::all()
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown signal {s:?}")))
    }
}

impl Serialize for SignalId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for SignalId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    /// Movement intensity: root mean square.
    Mi,
    /// Symmetry: skewness of the sample distribution.
    Paf,
    StepPeriod,
    StridePeriod,
    Regularity,
    /// Average power in the gait band.
    Apc,
    /// Normalized spectral entropy.
    Se,
    /// Stride-harmonic to residual power, dB.
    Smnr,
    /// Entropy of wavelet band powers.
    We,
}

impl FeatureId {
    pub const ALL: [FeatureId; FEATURES_PER_SIGNAL] = [
        FeatureId::Mi,
        FeatureId::Paf,
        FeatureId::StepPeriod,
        FeatureId::StridePeriod,
        FeatureId::Regularity,
        FeatureId::Apc,
        FeatureId::Se,
        FeatureId::Smnr,
        FeatureId::We,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Mi => "mi",
            FeatureId::Paf => "paf",
            FeatureId::StepPeriod => "step_period",
            FeatureId::StridePeriod => "stride_period",
            FeatureId::Regularity => "regularity",
            FeatureId::Apc => "apc",
            FeatureId::Se => "se",
            FeatureId::Smnr => "smnr",
            FeatureId::We => "we",
        }
    }

    /// Features that need a detectable gait period.
    pub fn needs_period(self) -> bool {
        matches!(
            self,
            FeatureId::StepPeriod | FeatureId::StridePeriod | FeatureId::Regularity | FeatureId::Smnr
        )
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown feature {s:?}")))
    }
}

/// Position of `(signal, feature)` in the 243-element vector.
pub fn feature_index(signal: SignalId, feature: FeatureId) -> usize {
    signal.index() * FEATURES_PER_SIGNAL + feature.index()
}

/// Inverse of [`feature_index`].
pub fn feature_at(index: usize) -> (SignalId, FeatureId) {
    (
        SignalId::all()[index / FEATURES_PER_SIGNAL],
        FeatureId::ALL[index % FEATURES_PER_SIGNAL],
    )
}

/// Column name of `(signal, feature)`, e.g. `left_knee_smnr`.
pub fn feature_name(signal: SignalId, feature: FeatureId) -> String {
    format!("{}_{}", signal.name(), feature.name())
}

/// All 243 column names in vector order.
pub fn feature_names() -> Vec<String> {
    (0..FEATURE_COUNT)
        .map(|i| {
            let (s, f) = feature_at(i);
            feature_name(s, f)
        })
        .collect()
}

/// True when every value equals the first up to rounding.
pub(crate) fn is_flat<T: Real>(x: &[T]) -> bool {
    let Some(&first) = x.first() else {
        return true;
    };
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = scale * T::epsilon() * T::lit(16.0);
    x.iter().all(|v| (*v - first).abs() <= tol)
}

/// Root mean square.
pub fn movement_intensity<T: Real>(x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(Error::EmptySignal);
    }
    let ms = x.iter().map(|v| *v * *v).sum::<T>() / T::from_count(x.len());
    Ok(ms.sqrt())
}

/// Population skewness `m3 / m2^1.5`.
pub fn paf<T: Real>(x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(Error::EmptySignal);
    }
    if is_flat(x) {
        return Err(Error::ZeroVariance);
    }
    let n = T::from_count(x.len());
    let m = crate::scalar::mean(x);
    let (m2, m3) = x.iter().fold((T::zero(), T::zero()), |(a, b), &v| {
        let d = v - m;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    if !(m2 > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    Ok(m3 / (m2 * m2.sqrt()))
}

/// Nine features of one signal, or the first feature that failed.
pub fn signal_features<T: Real>(
    x: &TimeSeries<T>,
) -> std::result::Result<[T; FEATURES_PER_SIGNAL], (FeatureId, Error)> {
    let v = &x.values;
    let fs = x.sample_rate;
    let tag = |f: FeatureId| move |e: Error| (f, e);
    let mi = movement_intensity(v).map_err(tag(FeatureId::Mi))?;
    let skew = paf(v).map_err(tag(FeatureId::Paf))?;
    let per = periodicity(v, fs).map_err(tag(FeatureId::StepPeriod))?;
    let power = apc(v, fs).map_err(tag(FeatureId::Apc))?;
    let se = spectral_entropy(v, fs).map_err(tag(FeatureId::Se))?;
    let smnr = smnr_with_period(v, fs, per.stride_period()).map_err(tag(FeatureId::Smnr))?;
    let we = wavelet_energy(v).map_err(tag(FeatureId::We))?;
    let out = [
        mi,
        skew,
        per.step_period(),
        per.stride_period(),
        per.regularity,
        power,
        se,
        smnr,
        we,
    ];
    for (f, value) in FeatureId::ALL.iter().zip(out) {
        if !value.is_finite() {
            return Err((*f, Error::DegenerateData(format!("non-finite value {value}"))));
        }
    }
    Ok(out)
}

/// The 243-element feature vector of the 27 signals given in
/// [`SignalId::all`] order.
pub fn extract_features<T: Real>(signals: &[TimeSeries<T>]) -> Result<Vec<T>> {
    if signals.len() != SIGNAL_COUNT {
        return Err(Error::DimensionMismatch {
            expected: SIGNAL_COUNT,
            got: signals.len(),
        });
    }
    let len = signals[0].len();
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    for (id, x) in SignalId::all().into_iter().zip(signals) {
        if x.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: x.len(),
            });
        }
        let f = signal_features(x).map_err(|(f, e)| Error::feature(id.name(), f.name(), e))?;
        out.extend_from_slice(&f);
    }
    Ok(out)
}

fn check_window(len: usize, window: usize, hop: usize) -> Result<usize> {
    if window == 0 || window > len {
        return Err(Error::WindowTooLong { window, len });
    }
    if hop == 0 {
        return Err(Error::Config("window hop must be at least one sample".into()));
    }
    Ok((len - window) / hop + 1)
}

/// Features of each `window`-sample slice of `x`, starting every `hop`
/// samples.
pub fn windowed_features<T: Real>(
    x: &TimeSeries<T>,
    window: usize,
    hop: usize,
) -> Result<Vec<[T; FEATURES_PER_SIGNAL]>> {
    let count = check_window(x.len(), window, hop)?;
    (0..count)
        .map(|w| {
            signal_features(&x.slice(w * hop..w * hop + window))
                .map_err(|(f, e)| Error::feature(x.label.clone(), f.name(), e))
        })
        .collect()
}

/// Trial-level counterpart of [`windowed_features`]: one 243-element vector
/// per window.
pub fn windowed_trial_features<T: Real>(
    signals: &[TimeSeries<T>],
    window: usize,
    hop: usize,
) -> Result<Vec<Vec<T>>> {
    let len = signals.first().map_or(0, |s| s.len());
    let count = check_window(len, window, hop)?;
    (0..count)
        .map(|w| {
            let slices: Vec<TimeSeries<T>> = signals
                .iter()
                .map(|s| s.slice(w * hop..w * hop + window))
                .collect();
            extract_features(&slices)
        })
        .collect()
}
