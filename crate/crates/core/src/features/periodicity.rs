//! Step and stride periods from the autocorrelation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::is_flat;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Autocorrelation peaks below this value are ignored.
pub const MIN_PEAK: f64 = 0.2;
/// Lag range searched for the step period, seconds.
pub const STEP_RANGE_S: (f64, f64) = (0.3, 1.0);
/// Lag range searched for the stride period, seconds.
pub const STRIDE_RANGE_S: (f64, f64) = (0.6, 2.0);

/// Unbiased autocorrelation normalized by lag 0, for lags `0..=max_lag`.
/// A flat signal yields `None`.
pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Option<Vec<T>> {
    let n = x.len();
    if n == 0 || is_flat(x) {
        return None;
    }
    let max_lag = max_lag.min(n - 1);
    let mean = crate::scalar::mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); size];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v - mean;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for b in buf.iter_mut() {
        *b = Complex::new(b.norm_sqr(), T::zero());
    }
    planner.plan_fft_inverse(size).process(&mut buf);

    let c0 = buf[0].re / T::from_count(n);
    if !(c0 > T::zero()) {
        return None;
    }
    Some(
        (0..=max_lag)
            .map(|k| buf[k].re / T::from_count(n - k) / c0)
            .collect(),
    )
}

/// Local maxima of `acf` at or above [`MIN_PEAK`] with lags in `lo..=hi`.
fn peaks<T: Real>(acf: &[T], lo: usize, hi: usize) -> Vec<usize> {
    let thresh = T::lit(MIN_PEAK);
    let hi = hi.min(acf.len().saturating_sub(2));
    (lo.max(1)..=hi)
        .filter(|&k| acf[k] >= thresh && acf[k] > acf[k - 1] && acf[k] >= acf[k + 1])
        .collect()
}

/// Step and stride lags with the autocorrelation they were read from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodicity<T> {
    pub step_lag: usize,
    pub stride_lag: usize,
    pub sample_rate: T,
    /// Autocorrelation at the stride lag, clamped to `[0, 1]`.
    pub regularity: T,
}

impl<T: Real> Periodicity<T> {
    pub fn step_period(&self) -> T {
        T::from_count(self.step_lag) / self.sample_rate
    }

    pub fn stride_period(&self) -> T {
        T::from_count(self.stride_lag) / self.sample_rate
    }
}

fn lag_bounds<T: Real>(range: (f64, f64), fs: T) -> (usize, usize) {
    // Tolerance keeps 0.3 s at 100 Hz on lag 30 despite rounding.
    let tol = T::lit(1e-4);
    let lo = (T::lit(range.0) * fs - tol).ceil().to_usize().unwrap_or(0);
    let hi = (T::lit(range.1) * fs + tol).floor().to_usize().unwrap_or(0);
    (lo, hi)
}

/// Finds the step period as the first autocorrelation peak in the step
/// range and the stride period as the stride-range peak nearest twice the
/// step. Stride-periodic signals without a step peak take the first
/// stride-range peak as the stride and half of it as the step; a step peak
/// without a matching stride peak implies a stride of two steps.
pub fn periodicity<T: Real>(x: &[T], sample_rate: T) -> Result<Periodicity<T>> {
    let (step_lo, step_hi) = lag_bounds(STEP_RANGE_S, sample_rate);
    let (stride_lo, stride_hi) = lag_bounds(STRIDE_RANGE_S, sample_rate);
    let acf = autocorrelation(x, stride_hi + 1)
        .ok_or_else(|| Error::NoPeriodicity("signal has no variation".into()))?;

    let step_peak = peaks(&acf, step_lo, step_hi).first().copied();
    let stride_peaks = peaks(&acf, stride_lo, stride_hi);
    let (step_lag, stride_lag) = match step_peak {
        Some(step) => {
            let target = 2 * step;
            let nearest = stride_peaks
                .iter()
                .copied()
                .min_by_key(|&k| (k.abs_diff(target), k));
            (step, nearest.unwrap_or(target))
        }
        None => match stride_peaks.first() {
            Some(&stride) => ((stride + 1) / 2, stride),
            None => {
                return Err(Error::NoPeriodicity(format!(
                    "no autocorrelation peak of at least {MIN_PEAK} between {} and {} s",
                    STEP_RANGE_S.0, STRIDE_RANGE_S.1
                )))
            }
        },
    };
    let regularity = acf
        .get(stride_lag)
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero())
        .min(T::one());
    Ok(Periodicity {
        step_lag,
        stride_lag,
        sample_rate,
        regularity,
    })
}

pub fn step_period<T: Real>(x: &[T], sample_rate: T) -> Result<T> {
    periodicity(x, sample_rate).map(|p| p.step_period())
}

pub fn stride_period<T: Real>(x: &[T], sample_rate: T) -> Result<T> {
    periodicity(x, sample_rate).map(|p| p.stride_period())
}

pub fn regularity<T: Real>(x: &[T], sample_rate: T) -> Result<T> {
    periodicity(x, sample_rate).map(|p| p.regularity)
}

/// Normalized autocorrelation at a given lag, clamped to `[0, 1]`.
pub fn regularity_at_lag<T: Real>(x: &[T], lag: usize) -> Result<T> {
    let acf = autocorrelation(x, lag).ok_or(Error::ZeroVariance)?;
    let v = acf.get(lag).copied().ok_or(Error::SignalTooShort {
        len: x.len(),
        min: lag + 1,
    })?;
    Ok(v.max(T::zero()).min(T::one()))
}
