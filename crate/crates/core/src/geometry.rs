//! Plane vectors and linear maps of the plane.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector `(cos a, sin a)`.
    pub fn polar(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::new(c, s)
    }

    /// Unit tangent `e_a = (-sin a, cos a)` of the tangent-angle parametrization.
    pub fn tangent_dir(a: f64) -> Self {
        let (s, c) = a.sin_cos();
        Self::new(-s, c)
    }

    /// The area form: `det(self, other)`.
    pub fn det(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Rotation by +pi/2.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for PlanePoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<PlanePoint> for f64 {
    type Output = PlanePoint;
    fn mul(self, v: PlanePoint) -> PlanePoint {
        PlanePoint::new(self * v.x, self * v.y)
    }
}

/// Linear part of an affine map. Tables are origin-centred, so translations
/// never enter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl AffineMap {
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// The unimodular normalizer: rotate by `-sigma` (bringing direction
    /// `sigma` onto the x axis), then apply `(x, y) -> (a x, y / a)`.
    pub fn normalizer(a: f64, sigma: f64) -> Self {
        Self::diag(a, 1.0 / a).then_after(Self::rotation(-sigma))
    }

    /// `self ∘ inner`.
    pub fn then_after(self, inner: Self) -> Self {
        Self::new(
            self.m11 * inner.m11 + self.m12 * inner.m21,
            self.m11 * inner.m12 + self.m12 * inner.m22,
            self.m21 * inner.m11 + self.m22 * inner.m21,
            self.m21 * inner.m12 + self.m22 * inner.m22,
        )
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, v: PlanePoint) -> PlanePoint {
        PlanePoint::new(
            self.m11 * v.x + self.m12 * v.y,
            self.m21 * v.x + self.m22 * v.y,
        )
    }

    pub fn apply_transpose(&self, v: PlanePoint) -> PlanePoint {
        PlanePoint::new(
            self.m11 * v.x + self.m21 * v.y,
            self.m12 * v.x + self.m22 * v.y,
        )
    }

    pub fn ensure_invertible(&self) -> Result<()> {
        let d = self.det();
        let scale = self.m11.abs() + self.m12.abs() + self.m21.abs() + self.m22.abs();
        if !d.is_finite() || d.abs() <= 1e-14 * scale * scale {
            return Err(Error::InvalidInput(format!(
                "affine map is singular (det = {d:e})"
            )));
        }
        Ok(())
    }
}

/// Tangent angle `a` with `e_a` parallel to `dir` and pointing the same way,
/// lifted into `[reference - pi, reference + pi)`.
pub fn tangent_angle_of(dir: PlanePoint, reference: f64) -> f64 {
    let raw = (-dir.x).atan2(dir.y);
    lift_near(raw, reference)
}

/// Representative of `angle` modulo 2π nearest to `reference`.
pub fn lift_near(angle: f64, reference: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    reference + (angle - reference + PI).rem_euclid(TAU) - PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    #[test]
    fn normalizer_is_unimodular() {
        let m = AffineMap::normalizer(0.3, 1.1);
        assert!((m.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalizer_aligns_sigma_with_x_axis() {
        let m = AffineMap::normalizer(1.0, FRAC_PI_6);
        let v = m.apply(PlanePoint::polar(FRAC_PI_6));
        assert!((v.x - 1.0).abs() < 1e-15 && v.y.abs() < 1e-15);
    }

    #[test]
    fn tangent_angle_roundtrip() {
        for &a in &[0.0, 0.4, FRAC_PI_2, 3.0, -2.5] {
            let back = tangent_angle_of(PlanePoint::tangent_dir(a), a + 0.1);
            assert!((back - a).abs() < 1e-14, "{a} -> {back}");
        }
    }

    #[test]
    fn singular_map_rejected() {
        assert!(AffineMap::new(1.0, 2.0, 2.0, 4.0)
            .ensure_invertible()
            .is_err());
        assert!(AffineMap::IDENTITY.ensure_invertible().is_ok());
    }
}
