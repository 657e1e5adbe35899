//! Hamilton quaternions, scalar first.
//!
//! A unit quaternion `q` describes the sensor-to-global rotation; a vector
//! expressed in the sensor frame is mapped to the global frame by
//! `q ⊗ (0, v) ⊗ q*`.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::Vector3;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance on `|q| - 1` accepted by checked rotations.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Default for Quaternion<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Quaternion<T> {
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn pure(v: Vector3<T>) -> Self {
        Self::new(T::zero(), v.x, v.y, v.z)
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<T>, angle: T) -> Self {
        let Some(u) = axis.normalized() else {
            return Self::identity();
        };
        let half = angle * T::lit(0.5);
        let s = half.sin();
        Self::new(half.cos(), u.x * s, u.y * s, u.z * s)
    }

    /// Smallest rotation taking direction `from` onto direction `to`.
    pub fn between(from: Vector3<T>, to: Vector3<T>) -> Option<Self> {
        let a = from.normalized()?;
        let b = to.normalized()?;
        let d = a.dot(&b);
        if d < T::lit(-1.0 + 1e-12) {
            // Antiparallel: any axis orthogonal to `a` works.
            let ortho = if a.x.abs() < T::lit(0.9) {
                Vector3::unit_x()
            } else {
                Vector3::unit_y()
            };
            return Some(Self::from_axis_angle(a.cross(&ortho), T::PI()));
        }
        let c = a.cross(&b);
        Some(Self::new(T::one() + d, c.x, c.y, c.z).normalized())
    }

    pub fn vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Unit quaternion; the zero quaternion maps to identity.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            let r = n.recip();
            Self::new(self.w * r, self.x * r, self.y * r, self.z * r)
        } else {
            Self::identity()
        }
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - T::one()).abs() <= T::lit(UNIT_NORM_TOLERANCE)
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// `q ⊗ (0, v) ⊗ q*`, rejecting quaternions that are not unit norm.
    pub fn rotate(&self, v: Vector3<T>) -> Result<Vector3<T>> {
        if !self.is_unit() {
            return Err(Error::NonUnitQuaternion {
                norm: self.norm().as_f64(),
            });
        }
        Ok(self.rotate_unchecked(v))
    }

    pub fn rotate_unchecked(&self, v: Vector3<T>) -> Vector3<T> {
        self.multiply(&Self::pure(v))
            .multiply(&self.conjugate())
            .vector()
    }

    /// Row-major rotation matrix of a unit quaternion.
    pub fn to_rotation_matrix(&self) -> [[T; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        [
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ]
    }

    /// Angle of the rotation in radians, in `[0, π]`.
    pub fn angle(&self) -> T {
        let q = self.normalized();
        T::lit(2.0) * q.vector().norm().atan2(q.w.abs())
    }
}

impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.multiply(&rhs)
    }
}

/// Hamilton product of two quaternions.
pub fn quat_multiply<T: Real>(a: Quaternion<T>, b: Quaternion<T>) -> Quaternion<T> {
    a.multiply(&b)
}

/// Rotates `v` by the unit quaternion `q`.
pub fn quat_rotate<T: Real>(q: Quaternion<T>, v: Vector3<T>) -> Result<Vector3<T>> {
    q.rotate(v)
}
