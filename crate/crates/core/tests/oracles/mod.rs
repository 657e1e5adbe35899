//! Direct-definition reference implementations of the gait features.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const FS: f64 = 100.0;

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-9)
}

/// Gait-like test signal: a stride fundamental, a strong step harmonic,
/// higher harmonics, an offset and white noise.
pub fn gait_signal(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(600..1400);
    let f0 = rng.random_range(0.75..1.05);
    let amps: [f64; 4] = std::array::from_fn(|h| {
        let base = if h == 1 { 1.0 } else { 0.4 };
        base * rng.random_range(0.5..1.5)
    });
    let phases: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI));
    let offset = rng.random_range(-2.0..2.0);
    let noise = Normal::new(0.0, rng.random_range(0.02..0.3)).unwrap();
    (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            offset
                + (0..4)
                    .map(|h| amps[h] * (2.0 * PI * f0 * (h + 1) as f64 * t + phases[h]).sin())
                    .sum::<f64>()
                + noise.sample(&mut rng)
        })
        .collect()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    let n = x.len() as f64;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn direct_acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let m = mean(x);
    let n = x.len();
    let c0 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    (0..=max_lag)
        .map(|k| {
            let s: f64 = (0..n - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum();
            s / (n - k) as f64 / c0
        })
        .collect()
}

/// `(step_lag, stride_lag, regularity)` by the published peak rules.
pub fn direct_periodicity(x: &[f64]) -> Option<(usize, usize, f64)> {
    let acf = direct_acf(x, 201);
    let is_peak = |k: usize| k >= 1 && k + 1 < acf.len() && acf[k] >= 0.2 && acf[k] > acf[k - 1] && acf[k] >= acf[k + 1];
    let step = (30..=100).find(|&k| is_peak(k));
    let strides: Vec<usize> = (60..=200).filter(|&k| is_peak(k)).collect();
    let (step, stride) = match step {
        Some(s) => {
            let mut best: Option<usize> = None;
            for &k in &strides {
                let d = k.abs_diff(2 * s);
                if best.is_none_or(|b| d < b.abs_diff(2 * s)) {
                    best = Some(k);
                }
            }
            (s, best.unwrap_or(2 * s))
        }
        None => {
            let k = *strides.first()?;
            ((k + 1) / 2, k)
        }
    };
    Some((step, stride, acf[stride].clamp(0.0, 1.0)))
}

/// One-sided PSD from a direct DFT of the Hann-windowed, mean-removed,
/// zero-padded signal.
pub fn direct_psd(x: &[f64]) -> (f64, Vec<f64>) {
    let n = x.len();
    let nfft = n.next_power_of_two();
    let m = mean(x);
    let w: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let w2: f64 = w.iter().map(|v| v * v).sum();
    let y: Vec<f64> = (0..n).map(|i| (x[i] - m) * w[i]).collect();
    let psd = (0..=nfft / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in y.iter().enumerate() {
                let a = -2.0 * PI * (k * i % nfft) as f64 / nfft as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            let p = (re * re + im * im) / (FS * w2);
            if k == 0 || k == nfft / 2 {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    (FS / nfft as f64, psd)
}

pub fn band_bins(df: f64, len: usize) -> std::ops::RangeInclusive<usize> {
    let lo = (0.5 / df).ceil() as usize;
    let hi = ((5.0 / df).floor() as usize).min(len - 1);
    lo..=hi
}

pub fn direct_apc(df: f64, psd: &[f64]) -> f64 {
    band_bins(df, psd.len()).map(|k| psd[k]).sum::<f64>() * df
}

pub fn direct_se(psd: &[f64]) -> f64 {
    let total: f64 = psd.iter().sum();
    let h: f64 = psd
        .iter()
        .map(|p| p / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum();
    h / (psd.len() as f64).ln()
}

pub fn direct_smnr(df: f64, psd: &[f64], stride_s: f64) -> f64 {
    let last = psd.len() - 1;
    let mut marked = vec![false; psd.len()];
    for h in 1..=5 {
        let target = (h as f64 / stride_s / df).round() as usize;
        if target > last {
            break;
        }
        let cands = target.saturating_sub(1)..=(target + 1).min(last);
        let mut peak = target;
        for k in cands {
            if psd[k] > psd[peak] {
                peak = k;
            }
        }
        for k in peak.saturating_sub(2)..=(peak + 2).min(last) {
            marked[k] = true;
        }
    }
    let (mut s, mut n) = (0.0, 0.0);
    for k in band_bins(df, psd.len()) {
        if marked[k] {
            s += psd[k];
        } else {
            n += psd[k];
        }
    }
    10.0 * (s / n.max(1e-12 * s)).log10()
}

const DB4_LO: [f64; 8] = [
    -0.010597401784997278,
    0.032883011666982945,
    0.030841381835986965,
    -0.18703481171888114,
    -0.02798376941698385,
    0.6308807679295904,
    0.7148465705525415,
    0.23037781330885523,
];

/// Periodized db4 analysis as an explicit orthogonal matrix.
pub fn dwt_matrix(n: usize) -> Vec<Vec<f64>> {
    let hi: Vec<f64> = (0..8)
        .map(|j| if j % 2 == 0 { DB4_LO[7 - j] } else { -DB4_LO[7 - j] })
        .collect();
    let mut m = vec![vec![0.0; n]; n];
    for k in 0..n / 2 {
        for j in 0..8 {
            m[k][(2 * k + j) % n] += DB4_LO[j];
            m[n / 2 + k][(2 * k + j) % n] += hi[j];
        }
    }
    m
}

pub fn direct_we(x: &[f64]) -> f64 {
    let mut approx = x.to_vec();
    let mut powers = Vec::new();
    for _ in 0..5 {
        if approx.len() % 2 == 1 {
            approx.push(*approx.last().unwrap());
        }
        let n = approx.len();
        let m = dwt_matrix(n);
        let y: Vec<f64> = m.iter().map(|row| row.iter().zip(&approx).map(|(a, b)| a * b).sum()).collect();
        let d = &y[n / 2..];
        powers.push(d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64);
        approx = y[..n / 2].to_vec();
    }
    powers.push(approx.iter().map(|v| v * v).sum::<f64>() / approx.len() as f64);
    let total: f64 = powers.iter().sum();
    powers
        .iter()
        .map(|p| p / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum()
}
