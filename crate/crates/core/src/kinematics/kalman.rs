//! Indirect (error-state) Kalman filter for gyro drift.
//!
//! The primary estimate is the integral of the bias-compensated gyro rate.
//! The filter's state is the error of that estimate together with the
//! residual gyro bias, `x = [angle error (°), bias (°/s)]`, propagated by
//! `F = [[1, Ts], [0, 1]]` and observed through `H = [1, 0]` as the
//! difference between the integrated angle and the accelerometer angle.
//! After every update the estimated error is subtracted from the integrated
//! angle and the residual bias is folded into the running bias estimate.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfParams {
    /// Process noise on the angle error, deg² per step.
    pub q_angle: f64,
    /// Process noise on the bias, (°/s)² per step.
    pub q_bias: f64,
    /// Accelerometer angle noise variance, deg².
    pub r: f64,
    pub p0_angle: f64,
    pub p0_bias: f64,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            q_angle: 1e-4,
            q_bias: 1e-6,
            r: 0.5,
            p0_angle: 1.0,
            p0_bias: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KfState<T> {
    /// `[angle error, residual bias]`.
    pub x: [T; 2],
    pub p: [[T; 2]; 2],
    pub ts: T,
    pub q: [[T; 2]; 2],
    pub r: T,
}

impl<T: Real> KfState<T> {
    pub fn new(params: &KfParams, sample_rate: T) -> Self {
        let z = T::zero();
        Self {
            x: [z, z],
            p: [[T::lit(params.p0_angle), z], [z, T::lit(params.p0_bias)]],
            ts: sample_rate.recip(),
            q: [[T::lit(params.q_angle), z], [z, T::lit(params.q_bias)]],
            r: T::lit(params.r),
        }
    }

    pub fn predict(&mut self) {
        let ts = self.ts;
        let [[p00, p01], [p10, p11]] = self.p;
        self.x = [self.x[0] + ts * self.x[1], self.x[1]];
        self.p = [
            [
                p00 + ts * (p01 + p10) + ts * ts * p11 + self.q[0][0],
                p01 + ts * p11 + self.q[0][1],
            ],
            [p10 + ts * p11 + self.q[1][0], p11 + self.q[1][1]],
        ];
    }

    /// Measurement update with `z` observing the angle error. Uses the
    /// Joseph form so the covariance stays symmetric positive semidefinite.
    pub fn update(&mut self, z: T) {
        let [[p00, p01], [p10, p11]] = self.p;
        let s = p00 + self.r;
        if !(s > T::zero()) || !s.is_finite() {
            return;
        }
        let k0 = p00 / s;
        let k1 = p10 / s;
        let innov = z - self.x[0];
        self.x = [self.x[0] + k0 * innov, self.x[1] + k1 * innov];

        // A = I - K H = [[1 - k0, 0], [-k1, 1]]; P' = A P Aᵀ + r K Kᵀ.
        let a00 = T::one() - k0;
        let ap = [
            [a00 * p00, a00 * p01],
            [-k1 * p00 + p10, -k1 * p01 + p11],
        ];
        let n00 = ap[0][0] * a00 + self.r * k0 * k0;
        let n01 = -ap[0][0] * k1 + ap[0][1] + self.r * k0 * k1;
        let n10 = ap[1][0] * a00 + self.r * k1 * k0;
        let n11 = -ap[1][0] * k1 + ap[1][1] + self.r * k1 * k1;
        let off = (n01 + n10) * T::lit(0.5);
        self.p = [[n00, off], [off, n11]];
    }

    /// Smallest eigenvalue of `P`.
    pub fn min_eigenvalue(&self) -> T {
        let [[a, b], [_, d]] = self.p;
        let tr = (a + d) * T::lit(0.5);
        let det = a * d - b * b;
        tr - (tr * tr - det).max(T::zero()).sqrt()
    }
}

/// Per-sample filter output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KfOutput<T> {
    /// Uncorrected gyro integration, degrees.
    pub theta_g: Vec<T>,
    /// Drift-corrected angle, degrees.
    pub corrected: Vec<T>,
    /// Running gyro bias estimate, °/s.
    pub bias: Vec<T>,
}

/// Fuses a gyro rate (°/s) with an accelerometer angle (°). Both series are
/// sampled at `1 / kf.ts` and must have equal length. Integration starts
/// from the first accelerometer angle and uses the trapezoidal rule.
pub fn kf_segment_angle<T: Real>(rate_dps: &[T], theta_a: &[T], mut kf: KfState<T>) -> KfOutput<T> {
    assert_eq!(rate_dps.len(), theta_a.len(), "rate and angle series must align");
    let n = rate_dps.len();
    let mut out = KfOutput {
        theta_g: Vec::with_capacity(n),
        corrected: Vec::with_capacity(n),
        bias: Vec::with_capacity(n),
    };
    if n == 0 {
        return out;
    }
    let half = T::lit(0.5);
    let mut raw = theta_a[0];
    let mut angle = theta_a[0];
    let mut bias = T::zero();
    for i in 0..n {
        if i > 0 {
            let w = (rate_dps[i - 1] + rate_dps[i]) * half;
            raw = raw + kf.ts * w;
            angle = angle + kf.ts * (w - bias);
        }
        kf.predict();
        kf.update(angle - theta_a[i]);
        angle = angle - kf.x[0];
        bias = bias + kf.x[1];
        kf.x = [T::zero(), T::zero()];

        out.theta_g.push(raw);
        out.corrected.push(angle);
        out.bias.push(bias);
    }
    out
}
