//! Gradient-descent orientation filter.
//!
//! Gyro rates propagate the sensor-to-global quaternion; one normalized
//! gradient step of size `gain` per update pulls it towards the attitude
//! in which the measured specific force points up (and, optionally, the
//! measured magnetic field matches the reference field's inclination).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ImuSample, Quaternion, Vector3};
use crate::scalar::Real;

/// Default gradient step size.
pub const DEFAULT_GAIN: f64 = 0.1;
/// Default gravity magnitude, m/s².
pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationState<T> {
    /// Sensor-to-global rotation.
    pub q: Quaternion<T>,
    pub gain: T,
    /// Sample period, seconds.
    pub dt: T,
    pub use_magnetometer: bool,
}

impl<T: Real> OrientationState<T> {
    pub fn new(q: Quaternion<T>, gain: T, dt: T) -> Self {
        Self {
            q: q.normalized(),
            gain,
            dt,
            use_magnetometer: false,
        }
    }

    /// Attitude with zero heading whose vertical matches the accelerometer.
    pub fn from_accel(accel: Vector3<T>, gain: T, dt: T) -> Self {
        let q = Quaternion::between(accel, Vector3::unit_z()).unwrap_or_default();
        Self::new(q, gain, dt)
    }

    pub fn with_magnetometer(mut self, on: bool) -> Self {
        self.use_magnetometer = on;
        self
    }

    /// One fusion step with gyro in rad/s; accel and mag in any unit.
    pub fn step(&mut self, accel: Vector3<T>, gyro_rad: Vector3<T>, mag: Vector3<T>) {
        let q = self.q;
        let half = T::lit(0.5);
        let mut q_dot = q.multiply(&Quaternion::pure(gyro_rad));
        q_dot = Quaternion::new(q_dot.w * half, q_dot.x * half, q_dot.y * half, q_dot.z * half);

        if let Some(a) = accel.normalized() {
            let grad = match mag.normalized().filter(|_| self.use_magnetometer) {
                Some(m) => marg_gradient(&q, &a, &m),
                None => imu_gradient(&q, &a),
            };
            let n = grad.norm();
            if n > T::zero() && n.is_finite() {
                let s = self.gain / n;
                q_dot = Quaternion::new(
                    q_dot.w - grad.w * s,
                    q_dot.x - grad.x * s,
                    q_dot.y - grad.y * s,
                    q_dot.z - grad.z * s,
                );
            }
        }
        let dt = self.dt;
        self.q = Quaternion::new(
            q.w + q_dot.w * dt,
            q.x + q_dot.x * dt,
            q.y + q_dot.y * dt,
            q.z + q_dot.z * dt,
        )
        .normalized();
    }
}

/// Gradient of `|Rᵀẑ - a|²/2` with respect to the quaternion components.
fn imu_gradient<T: Real>(q: &Quaternion<T>, a: &Vector3<T>) -> Quaternion<T> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let f1 = two * (x * z - w * y) - a.x;
    let f2 = two * (w * x + y * z) - a.y;
    let f3 = two * (T::lit(0.5) - x * x - y * y) - a.z;
    Quaternion::new(
        -two * y * f1 + two * x * f2,
        two * z * f1 + two * w * f2 - four * x * f3,
        -two * w * f1 + two * z * f2 - four * y * f3,
        two * x * f1 + two * y * f2,
    )
}

fn marg_gradient<T: Real>(q: &Quaternion<T>, a: &Vector3<T>, m: &Vector3<T>) -> Quaternion<T> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    // Reference field: measured field in the global frame with its
    // horizontal part folded onto the x axis.
    let h = q.rotate_unchecked(*m);
    let bx = (h.x * h.x + h.y * h.y).sqrt();
    let bz = h.z;

    let f1 = two * (x * z - w * y) - a.x;
    let f2 = two * (w * x + y * z) - a.y;
    let f3 = two * (half - x * x - y * y) - a.z;
    let f4 = two * bx * (half - y * y - z * z) + two * bz * (x * z - w * y) - m.x;
    let f5 = two * bx * (x * y - w * z) + two * bz * (w * x + y * z) - m.y;
    let f6 = two * bx * (x * z + w * y) + two * bz * (half - x * x - y * y) - m.z;

    // Rows of the Jacobian, columns ordered (w, x, y, z).
    let j = [
        [-two * y, two * z, -two * w, two * x],
        [two * x, two * w, two * z, two * y],
        [T::zero(), -four * x, -four * y, T::zero()],
        [
            -two * bz * y,
            two * bz * z,
            -four * bx * y - two * bz * w,
            -four * bx * z + two * bz * x,
        ],
        [
            -two * bx * z + two * bz * x,
            two * bx * y + two * bz * w,
            two * bx * x + two * bz * z,
            -two * bx * w + two * bz * y,
        ],
        [
            two * bx * y,
            two * bx * z - four * bz * x,
            two * bx * w - four * bz * y,
            two * bx * x,
        ],
    ];
    let f = [f1, f2, f3, f4, f5, f6];
    let mut g = [T::zero(); 4];
    for (row, fi) in j.iter().zip(f) {
        for (gk, jk) in g.iter_mut().zip(row) {
            *gk = *gk + *jk * fi;
        }
    }
    Quaternion::new(g[0], g[1], g[2], g[3])
}

/// Functional form of [`OrientationState::step`] for a sample in file units
/// (gyro in °/s).
pub fn update_orientation<T: Real>(
    state: OrientationState<T>,
    sample: &ImuSample<T>,
) -> OrientationState<T> {
    let mut next = state;
    next.step(sample.accel, sample.gyro.map(T::to_radians), sample.mag);
    next
}

/// Rotates a sensor-frame acceleration into the global frame and removes
/// gravity `(0, 0, gravity)`.
pub fn to_global_accel<T: Real>(
    q: Quaternion<T>,
    a_sensor: Vector3<T>,
    gravity: T,
) -> Result<Vector3<T>> {
    let g = q.rotate(a_sensor)?;
    Ok(Vector3::new(g.x, g.y, g.z - gravity))
}

/// Runs the filter over a stream and returns the quaternion after each sample.
pub fn track_orientation<T: Real>(
    samples: &[ImuSample<T>],
    gain: T,
    dt: T,
    use_magnetometer: bool,
) -> Vec<Quaternion<T>> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    let mut state = OrientationState::from_accel(first.accel, gain, dt).with_magnetometer(use_magnetometer);
    samples
        .iter()
        .map(|s| {
            state.step(s.accel, s.gyro.map(T::to_radians), s.mag);
            state.q
        })
        .collect()
}
