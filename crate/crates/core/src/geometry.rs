//! Planar vectors, poses and the handful of float helpers the rest of the
//! crate needs without `std`.

use core::f64::consts::{PI, TAU};
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn asin(x: f64) -> f64 {
    libm::asin(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let mut a = libm::fmod(angle, TAU);
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Smallest signed difference `a - b`, wrapped into `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * cos(angle), radius * sin(angle))
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        sqrt(self.norm_squared())
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        atan2(self.y, self.x)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = (sin(angle), cos(angle));
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar pose; `theta` is counterclockwise with 0 pointing at the opponent
/// goal along +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_polar(1.0, self.theta)
    }

    /// Maps an egocentric point (x forward, y left) into the field frame.
    pub fn ego_to_field(&self, p_ego: Vec2) -> Vec2 {
        p_ego.rotated(self.theta) + self.position()
    }

    /// Inverse of [`Pose2D::ego_to_field`].
    pub fn field_to_ego(&self, p_field: Vec2) -> Vec2 {
        (p_field - self.position()).rotated(-self.theta)
    }

    /// Composes this pose with a displacement expressed in its own frame.
    pub fn compose(&self, delta: Pose2D) -> Pose2D {
        let p = self.ego_to_field(Vec2::new(delta.x, delta.y));
        Pose2D::new(p.x, p.y, self.theta + delta.theta)
    }

    /// Displacement of `other` expressed in this pose's frame.
    pub fn relative(&self, other: &Pose2D) -> Pose2D {
        let p = self.field_to_ego(other.position());
        Pose2D::new(p.x, p.y, other.theta - self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Image of a pose under the 180° rotation about the field center.
pub fn mirror_pose(pose: Pose2D) -> Pose2D {
    Pose2D::new(-pose.x, -pose.y, pose.theta + PI)
}

pub fn mirror_point(p: Vec2) -> Vec2 {
    -p
}

/// Intersection parameter of segments `p0→p1` and `q0→q1`, returned as the
/// fraction along the first segment, if they intersect.
pub fn segment_intersection(p0: Vec2, p1: Vec2, q0: Vec2, q1: Vec2) -> Option<f64> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    let qp = q0 - p0;
    if denom.abs() < 1e-15 {
        return None;
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Distance from `p` to the segment `a→b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    p.distance(closest_point_on_segment(p, a, b))
}

pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn close(a: Vec2, b: Vec2) -> bool {
        a.distance(b) < 1e-12
    }

    #[test]
    fn ego_to_field_cases() {
        let p = Vec2::new(1.0, 0.0);
        assert!(close(Pose2D::new(0.0, 0.0, 0.0).ego_to_field(p), Vec2::new(1.0, 0.0)));
        assert!(close(
            Pose2D::new(1.0, 2.0, FRAC_PI_2).ego_to_field(p),
            Vec2::new(1.0, 3.0)
        ));
        assert!(close(Pose2D::new(0.0, 0.0, PI).ego_to_field(p), Vec2::new(-1.0, 0.0)));
    }

    #[test]
    fn mirror_cases() {
        let m = mirror_pose(Pose2D::new(1.0, 2.0, 0.0));
        assert_eq!((m.x, m.y), (-1.0, -2.0));
        assert!((m.theta - PI).abs() < 1e-15);
        let m = mirror_pose(Pose2D::new(0.0, 0.0, FRAC_PI_2));
        assert!((m.theta + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn normalize_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(7.0) - (7.0 - TAU)).abs() < 1e-12);
    }

    #[test]
    fn intersection_basic() {
        let t = segment_intersection(
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
        );
        assert_eq!(t, Some(0.5));
        assert!(segment_intersection(
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
        )
        .is_none());
    }
}
