//! Plane geometry primitives: points, rigid poses, segments and oriented boxes.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A point or vector in the bird's-eye-view plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `heading` (radians, counter-clockwise from +x).
    pub fn from_heading(heading: f64) -> Self {
        Vec2::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2D cross product (z-component of the 3D cross product).
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Normalized copy, or `None` for (near-)zero vectors.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self / n)
        }
    }

    /// Angle of the vector in radians, in (-pi, pi].
    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular (rotation by +90 degrees).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
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

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        *self = *self + rhs;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x / rhs, self.y / rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// Absolute difference between two headings, in [0, pi].
pub fn heading_difference(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

/// A rigid transform: the pose of a frame expressed in its parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vec2,
    pub rotation: f64,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        translation: Vec2::ZERO,
        rotation: 0.0,
    };

    pub fn new(translation: Vec2, rotation: f64) -> Self {
        Pose {
            translation,
            rotation,
        }
    }

    /// Maps a point expressed in this frame into the parent frame.
    pub fn to_parent_point(&self, p: Vec2) -> Vec2 {
        p.rotated(self.rotation) + self.translation
    }

    /// Maps a point expressed in the parent frame into this frame.
    pub fn to_local_point(&self, p: Vec2) -> Vec2 {
        (p - self.translation).rotated(-self.rotation)
    }

    /// Maps a free vector (direction, velocity) into the parent frame.
    pub fn to_parent_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(self.rotation)
    }

    /// Maps a free vector from the parent frame into this frame.
    pub fn to_local_vector(&self, v: Vec2) -> Vec2 {
        v.rotated(-self.rotation)
    }

    pub fn to_parent_heading(&self, h: f64) -> f64 {
        normalize_angle(h + self.rotation)
    }

    pub fn to_local_heading(&self, h: f64) -> f64 {
        normalize_angle(h - self.rotation)
    }

    /// Pose of `other` (given in this frame) expressed in the parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.to_parent_point(other.translation),
            rotation: normalize_angle(self.rotation + other.rotation),
        }
    }

    pub fn inverse(&self) -> Pose {
        Pose {
            translation: (-self.translation).rotated(-self.rotation),
            rotation: normalize_angle(-self.rotation),
        }
    }
}

/// Closest point on segment [a, b] to `p`, returned as the clamped parameter
/// t in [0, 1] together with the point itself.
pub fn project_on_segment(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 < 1e-24 {
        return (0.0, a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (t, a + ab * t)
}

/// Distance from `p` to segment [a, b].
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let (_, q) = project_on_segment(p, a, b);
    p.distance(q)
}

/// An oriented rectangle described by center, heading and full extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    /// Full length along the heading axis, full width across it.
    pub length: f64,
    pub width: f64,
}

impl Obb {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Obb {
            center,
            heading,
            length,
            width,
        }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let u = Vec2::from_heading(self.heading) * (self.length * 0.5);
        let v = Vec2::from_heading(self.heading).perp() * (self.width * 0.5);
        [
            self.center + u + v,
            self.center + u - v,
            self.center - u - v,
            self.center - u + v,
        ]
    }

    /// True when `p` lies inside or on the rectangle.
    pub fn contains(&self, p: Vec2) -> bool {
        let local = (p - self.center).rotated(-self.heading);
        local.x.abs() <= self.length * 0.5 + 1e-12 && local.y.abs() <= self.width * 0.5 + 1e-12
    }

    /// Point of this box closest to `p`.
    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let local = (p - self.center).rotated(-self.heading);
        let clamped = Vec2::new(
            local.x.clamp(-self.length * 0.5, self.length * 0.5),
            local.y.clamp(-self.width * 0.5, self.width * 0.5),
        );
        clamped.rotated(self.heading) + self.center
    }
}

/// Separating-axis intersection test for two oriented rectangles.
pub fn obb_intersects(a: &Obb, b: &Obb) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    let axes = [
        Vec2::from_heading(a.heading),
        Vec2::from_heading(a.heading).perp(),
        Vec2::from_heading(b.heading),
        Vec2::from_heading(b.heading).perp(),
    ];
    for axis in axes {
        let pa: Vec<f64> = ca.iter().map(|c| c.dot(axis)).collect();
        let pb: Vec<f64> = cb.iter().map(|c| c.dot(axis)).collect();
        let (min_a, max_a) = min_max(&pa);
        let (min_b, max_b) = min_max(&pb);
        if max_a < min_b || max_b < min_a {
            return false;
        }
    }
    true
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn normalize_angle_wraps_into_half_open_range() {
        assert!((normalize_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < EPS);
        assert!((normalize_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < EPS);
        assert!(normalize_angle(0.25).abs() - 0.25 < EPS);
    }

    #[test]
    fn pose_round_trip_is_identity() {
        let pose = Pose::new(Vec2::new(3.0, -2.0), 0.7);
        let p = Vec2::new(10.0, 5.0);
        let back = pose.to_local_point(pose.to_parent_point(p));
        assert!(back.distance(p) < EPS);
    }

    #[test]
    fn pose_compose_matches_sequential_application() {
        let a = Pose::new(Vec2::new(1.0, 2.0), 0.3);
        let b = Pose::new(Vec2::new(-4.0, 0.5), -1.1);
        let p = Vec2::new(2.0, 7.0);
        let via_compose = a.compose(&b).to_parent_point(p);
        let sequential = a.to_parent_point(b.to_parent_point(p));
        assert!(via_compose.distance(sequential) < EPS);
    }

    #[test]
    fn pose_inverse_composes_to_identity() {
        let pose = Pose::new(Vec2::new(5.0, -1.0), 2.1);
        let id = pose.compose(&pose.inverse());
        assert!(id.translation.norm() < EPS);
        assert!(id.rotation.abs() < EPS);
    }

    #[test]
    fn segment_projection_clamps_to_endpoints() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(10.0, 0.0);
        let (t, q) = project_on_segment(Vec2::new(-5.0, 3.0), a, b);
        assert_eq!(t, 0.0);
        assert!(q.distance(a) < EPS);
        let (t, q) = project_on_segment(Vec2::new(4.0, -2.0), a, b);
        assert!((t - 0.4).abs() < EPS);
        assert!(q.distance(Vec2::new(4.0, 0.0)) < EPS);
    }

    #[test]
    fn obb_separation_and_overlap() {
        let a = Obb::new(Vec2::ZERO, 0.0, 4.0, 2.0);
        let b = Obb::new(Vec2::new(5.0, 0.0), 0.0, 4.0, 2.0);
        assert!(!obb_intersects(&a, &b));
        let c = Obb::new(Vec2::new(3.0, 0.0), 0.5, 4.0, 2.0);
        assert!(obb_intersects(&a, &c));
        // Touching corner-to-corner counts as intersecting.
        let d = Obb::new(Vec2::new(4.0, 0.0), 0.0, 4.0, 2.0);
        assert!(obb_intersects(&a, &d));
    }

    #[test]
    fn obb_contains_respects_rotation() {
        let b = Obb::new(Vec2::new(1.0, 1.0), std::f64::consts::FRAC_PI_2, 4.0, 2.0);
        assert!(b.contains(Vec2::new(1.0, 2.9)));
        assert!(!b.contains(Vec2::new(2.2, 1.0)));
    }
}
