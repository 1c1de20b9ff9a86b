//! Minimal planar vectors and 2×2 matrices.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Row-major 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn trace(self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_finite(self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    /// Solve `M v = rhs` by Cramer's rule. Returns `None` when the matrix is singular.
    pub fn solve(self, rhs: Vec2) -> Option<Vec2> {
        let d = self.det();
        if d == 0.0 {
            return None;
        }
        Some(Vec2::new(
            (rhs.x * self.a22 - rhs.y * self.a12) / d,
            (self.a11 * rhs.y - self.a21 * rhs.x) / d,
        ))
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }
}

impl Mul<Mat2> for Mat2 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * m.a11 + self.a12 * m.a21,
            self.a11 * m.a12 + self.a12 * m.a22,
            self.a21 * m.a11 + self.a22 * m.a21,
            self.a21 * m.a12 + self.a22 * m.a22,
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, m: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + m.a11,
            self.a12 + m.a12,
            self.a21 + m.a21,
            self.a22 + m.a22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, m: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - m.a11,
            self.a12 - m.a12,
            self.a21 - m.a21,
            self.a22 - m.a22,
        )
    }
}
