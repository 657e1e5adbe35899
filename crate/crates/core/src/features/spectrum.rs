//! Hann-windowed one-sided periodogram and the features derived from it.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower and upper edge of the gait band, Hz.
pub const GAIT_BAND_HZ: (f64, f64) = (0.5, 5.0);
/// Stride fundamental plus this many harmonics count as signal in SMNR.
pub const SMNR_HARMONICS: usize = 5;
/// Half-width in bins of each harmonic's SMNR window.
pub const SMNR_HALF_WIDTH: usize = 2;
/// Noise power never drops below this fraction of the harmonic power.
const SMNR_NOISE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Periodogram<T> {
    /// Bin spacing, Hz.
    pub df: T,
    /// One-sided power spectral density, bins `0..=nfft/2`.
    pub psd: Vec<T>,
}

impl<T: Real> Periodogram<T> {
    pub fn freq(&self, bin: usize) -> T {
        self.df * T::from_count(bin)
    }

    /// Bins whose centre lies in `[lo, hi]` Hz.
    pub fn band(&self, lo: T, hi: T) -> std::ops::RangeInclusive<usize> {
        let first = (lo / self.df).ceil().to_usize().unwrap_or(0);
        let last = (hi / self.df)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(self.psd.len() - 1);
        first..=last
    }

    /// Integrated power over the bins in `[lo, hi]` Hz.
    pub fn band_power(&self, lo: T, hi: T) -> T {
        let r = self.band(lo, hi);
        if r.is_empty() {
            return T::zero();
        }
        self.psd[r].iter().copied().sum::<T>() * self.df
    }
}

/// Periodic Hann window of length `n`.
pub fn hann<T: Real>(n: usize) -> Vec<T> {
    let len = T::from_count(n);
    (0..n)
        .map(|i| T::lit(0.5) - T::lit(0.5) * (T::TAU() * T::from_count(i) / len).cos())
        .collect()
}

/// Mean-removed, Hann-windowed periodogram zero-padded to the next power of
/// two. Integrating the PSD gives the window-weighted mean power.
pub fn periodogram<T: Real>(x: &[T], sample_rate: T) -> Result<Periodogram<T>> {
    if x.is_empty() {
        return Err(Error::EmptySignal);
    }
    let n = x.len();
    let nfft = n.next_power_of_two().max(2);
    let mean = crate::scalar::mean(x);
    let w = hann::<T>(n);
    let mut buf: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); nfft];
    for i in 0..n {
        buf[i] = Complex::new((x[i] - mean) * w[i], T::zero());
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);

    let w2: T = w.iter().map(|v| *v * *v).sum();
    let scale = (sample_rate * w2).recip();
    let half = nfft / 2;
    let psd = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || k == half {
                p
            } else {
                p * T::lit(2.0)
            }
        })
        .collect();
    Ok(Periodogram {
        df: sample_rate / T::from_count(nfft),
        psd,
    })
}

/// Mean power in the 0.5–5 Hz band.
pub fn apc<T: Real>(x: &[T], sample_rate: T) -> Result<T> {
    let p = periodogram(x, sample_rate)?;
    Ok(p.band_power(T::lit(GAIT_BAND_HZ.0), T::lit(GAIT_BAND_HZ.1)))
}

/// Shannon entropy of the normalized periodogram over all one-sided bins,
/// divided by the log of the bin count.
pub fn spectral_entropy<T: Real>(x: &[T], sample_rate: T) -> Result<T> {
    if super::is_flat(x) {
        return Err(Error::ZeroVariance);
    }
    let p = periodogram(x, sample_rate)?;
    let total: T = p.psd.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let h = p
        .psd
        .iter()
        .map(|&v| v / total)
        .filter(|&q| q > T::zero())
        .fold(T::zero(), |acc, q| acc - q * q.ln());
    Ok(h / T::from_count(p.psd.len()).ln())
}

/// Harmonic-to-residual power ratio in dB within the gait band, given the
/// stride period in seconds.
pub fn smnr_with_period<T: Real>(x: &[T], sample_rate: T, stride_period: T) -> Result<T> {
    let p = periodogram(x, sample_rate)?;
    let band = p.band(T::lit(GAIT_BAND_HZ.0), T::lit(GAIT_BAND_HZ.1));
    if band.is_empty() {
        return Err(Error::NoPeriodicity("gait band holds no frequency bins".into()));
    }
    let f0 = stride_period.recip();
    let last = p.psd.len() - 1;
    let mut harmonic = vec![false; p.psd.len()];
    for h in 1..=SMNR_HARMONICS {
        let target = (f0 * T::from_count(h) / p.df).round().to_usize().unwrap_or(usize::MAX);
        if target > last {
            break;
        }
        // Snap to the strongest bin near the predicted harmonic.
        let lo = target.saturating_sub(1);
        let hi = (target + 1).min(last);
        let mut peak = target;
        for k in lo..=hi {
            if p.psd[k] > p.psd[peak] {
                peak = k;
            }
        }
        let lo = peak.saturating_sub(SMNR_HALF_WIDTH);
        let hi = (peak + SMNR_HALF_WIDTH).min(last);
        harmonic[lo..=hi].iter_mut().for_each(|b| *b = true);
    }
    let (mut signal, mut noise) = (T::zero(), T::zero());
    for k in band {
        if harmonic[k] {
            signal = signal + p.psd[k];
        } else {
            noise = noise + p.psd[k];
        }
    }
    if !(signal > T::zero()) {
        return Err(Error::NoPeriodicity("no power at the stride harmonics".into()));
    }
    let noise = noise.max(signal * T::lit(SMNR_NOISE_FLOOR));
    Ok(T::lit(10.0) * (signal / noise).log10())
}
