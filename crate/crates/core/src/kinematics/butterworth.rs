//! Butterworth low-pass filters as cascaded second-order sections.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::scalar::Real;

pub const GAIT_CUTOFF_HZ: f64 = 7.0;
pub const GAIT_FILTER_ORDER: usize = 4;

/// Second-order section, `a0` normalized to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 2],
}

impl<T: Real> Biquad<T> {
    fn dc_gain(&self) -> T {
        (self.b[0] + self.b[1] + self.b[2]) / (T::one() + self.a[0] + self.a[1])
    }

    /// Transposed direct form II state for a constant input `x` held forever.
    fn steady_state(&self, x: T) -> [T; 2] {
        let y = self.dc_gain() * x;
        let z2 = self.b[2] * x - self.a[1] * y;
        let z1 = self.b[1] * x - self.a[0] * y + z2;
        [z1, z2]
    }

    #[inline]
    fn tick(&self, z: &mut [T; 2], x: T) -> T {
        let y = self.b[0] * x + z[0];
        z[0] = self.b[1] * x - self.a[0] * y + z[1];
        z[1] = self.b[2] * x - self.a[1] * y;
        y
    }

    fn response(&self, w: T) -> Complex<T> {
        let z1 = Complex::from_polar(T::one(), -w);
        let z2 = z1 * z1;
        let num = Complex::from(self.b[0]) + z1 * self.b[1] + z2 * self.b[2];
        let den = Complex::from(T::one()) + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Butterworth<T> {
    pub order: usize,
    pub cutoff_hz: T,
    pub sample_rate: T,
    pub sections: Vec<Biquad<T>>,
}

impl<T: Real> Butterworth<T> {
    /// Digital low-pass by the bilinear transform with the cutoff pre-warped,
    /// so the magnitude is exactly `1/√2` at `cutoff_hz`.
    pub fn lowpass(order: usize, cutoff_hz: T, sample_rate: T) -> Result<Self> {
        let nyquist = sample_rate * T::lit(0.5);
        if order == 0 || !(cutoff_hz > T::zero() && cutoff_hz < nyquist) {
            return Err(Error::Config(format!(
                "Butterworth order {order}, cutoff {cutoff_hz} Hz at {sample_rate} Hz is not realizable"
            )));
        }
        let k = T::lit(2.0) * sample_rate;
        let wc = k * (T::PI() * cutoff_hz / sample_rate).tan();
        let n = T::from_count(order);
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // Conjugate pole pair at angle θ from the imaginary axis.
            let theta = T::PI() * T::from_count(2 * i + 1) / (T::lit(2.0) * n);
            let a1 = T::lit(2.0) * wc * theta.sin();
            let a0 = wc * wc;
            let d0 = k * k + a1 * k + a0;
            sections.push(Biquad {
                b: [a0 / d0, T::lit(2.0) * a0 / d0, a0 / d0],
                a: [
                    (T::lit(2.0) * a0 - T::lit(2.0) * k * k) / d0,
                    (k * k - a1 * k + a0) / d0,
                ],
            });
        }
        if order % 2 == 1 {
            let d0 = k + wc;
            sections.push(Biquad {
                b: [wc / d0, wc / d0, T::zero()],
                a: [(wc - k) / d0, T::zero()],
            });
        }
        Ok(Self {
            order,
            cutoff_hz,
            sample_rate,
            sections,
        })
    }

    /// Magnitude response of a single pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: T) -> T {
        let w = T::lit(2.0) * T::PI() * freq_hz / self.sample_rate;
        self.sections
            .iter()
            .fold(Complex::from(T::one()), |acc, s| acc * s.response(w))
            .norm()
    }

    fn run(&self, x: &[T], init: T) -> Vec<T> {
        let mut out = x.to_vec();
        let mut level = init;
        for s in &self.sections {
            let mut z = s.steady_state(level);
            for v in out.iter_mut() {
                *v = s.tick(&mut z, *v);
            }
            level = s.dc_gain() * level;
        }
        out
    }

    /// Single causal pass, started in steady state at the first sample.
    pub fn filter(&self, x: &[T]) -> Vec<T> {
        match x.first() {
            Some(&x0) => self.run(x, x0),
            None => Vec::new(),
        }
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding at
    /// both ends. The output has the input's length and the squared
    /// magnitude response.
    pub fn filtfilt(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let two = T::lit(2.0);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| two * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| two * x[n - 1] - x[n - 1 - i]));

        let mut fwd = self.run(&ext, ext[0]);
        fwd.reverse();
        let mut back = self.run(&fwd, fwd[0]);
        back.reverse();
        back[pad..pad + n].to_vec()
    }
}

/// A low-pass filter applied either forward-backward or as one causal pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smoother<T> {
    pub filter: Butterworth<T>,
    pub zero_phase: bool,
}

impl<T: Real> Smoother<T> {
    /// Low-pass for 100 Hz gait recordings; other rates are rejected.
    pub fn gait(order: usize, cutoff_hz: T, sample_rate: T, zero_phase: bool) -> Result<Self> {
        let expected = super::REQUIRED_RATE_HZ;
        if (sample_rate.as_f64() - expected).abs() > 1e-9 {
            return Err(Error::UnsupportedRate {
                rate: sample_rate.as_f64(),
                expected,
            });
        }
        Ok(Self {
            filter: Butterworth::lowpass(order, cutoff_hz, sample_rate)?,
            zero_phase,
        })
    }

    /// The default 4th-order 7 Hz zero-phase smoother.
    pub fn default_gait(sample_rate: T) -> Result<Self> {
        Self::gait(GAIT_FILTER_ORDER, T::lit(GAIT_CUTOFF_HZ), sample_rate, true)
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        if self.zero_phase {
            self.filter.filtfilt(x)
        } else {
            self.filter.filter(x)
        }
    }
}

/// Zero-phase 4th-order 7 Hz low-pass for 100 Hz gait recordings.
pub fn lowpass7hz<T: Real>(x: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    let f = Smoother::default_gait(x.sample_rate)?;
    Ok(TimeSeries::new(x.label.clone(), x.sample_rate, f.apply(&x.values)))
}
