//! Periodized Daubechies-4 wavelet decomposition.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Decomposition depth used for the wavelet-energy feature.
pub const WAVELET_LEVELS: usize = 5;
/// Shortest signal accepted by [`wavelet_energy`].
pub const MIN_WAVELET_LEN: usize = 64;

/// db4 low-pass decomposition filter (eight taps, four vanishing moments).
const DB4: [f64; 8] = [
    -0.010_597_401_784_997_278,
    0.032_883_011_666_982_945,
    0.030_841_381_835_986_965,
    -0.187_034_811_718_881_14,
    -0.027_983_769_416_983_85,
    0.630_880_767_929_590_4,
    0.714_846_570_552_541_5,
    0.230_377_813_308_855_23,
];

fn filters<T: Real>() -> ([T; 8], [T; 8]) {
    let lo = DB4.map(T::lit);
    let mut hi = [T::zero(); 8];
    for (n, h) in hi.iter_mut().enumerate() {
        let v = lo[7 - n];
        *h = if n % 2 == 0 { v } else { -v };
    }
    (lo, hi)
}

/// One analysis step with periodic extension. Odd-length input is first
/// extended by repeating its last sample.
pub fn dwt_step<T: Real>(x: &[T]) -> (Vec<T>, Vec<T>) {
    let mut x = x.to_vec();
    if x.len() % 2 == 1 {
        x.push(*x.last().unwrap());
    }
    let n = x.len();
    let (lo, hi) = filters::<T>();
    let half = n / 2;
    let mut a = Vec::with_capacity(half);
    let mut d = Vec::with_capacity(half);
    for k in 0..half {
        let (mut sa, mut sd) = (T::zero(), T::zero());
        for j in 0..8 {
            let v = x[(2 * k + j) % n];
            sa = sa + lo[j] * v;
            sd = sd + hi[j] * v;
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

/// Multi-level decomposition: `[d1, d2, ..., d_levels, a_levels]`.
pub fn wavedec<T: Real>(x: &[T], levels: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(levels + 1);
    let mut approx = x.to_vec();
    for _ in 0..levels {
        let (a, d) = dwt_step(&approx);
        out.push(d);
        approx = a;
    }
    out.push(approx);
    out
}

/// Shannon entropy (nats) of the relative band powers of a 5-level db4
/// decomposition. Each band's power is the mean square of its coefficients,
/// so white noise spreads evenly over the six bands.
pub fn wavelet_energy<T: Real>(x: &[T]) -> Result<T> {
    if x.len() < MIN_WAVELET_LEN {
        return Err(Error::SignalTooShort {
            len: x.len(),
            min: MIN_WAVELET_LEN,
        });
    }
    let bands = wavedec(x, WAVELET_LEVELS);
    let power: Vec<T> = bands
        .iter()
        .map(|b| b.iter().map(|v| *v * *v).sum::<T>() / T::from_count(b.len()))
        .collect();
    let total: T = power.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    Ok(power
        .iter()
        .map(|&p| p / total)
        .filter(|&q| q > T::zero())
        .fold(T::zero(), |acc, q| acc - q * q.ln()))
}
