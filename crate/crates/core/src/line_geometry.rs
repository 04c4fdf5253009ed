//! Oriented lines in 3-space and their pair invariants.
//!
//! For two oriented lines with unit directions `u0`, `u1` through points
//! `m0`, `m1` the invariants are
//!
//! ```text
//! g = u0 · u1        h = (m0 − m1) · (u0 × u1)
//! ```
//!
//! `h` does not depend on which points are used, and the pair `(g, h)` is the
//! real and dual part of the dual dot product of the Study-sphere images of
//! the lines. Both vanish exactly when the lines are perpendicular and meet.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > f64::MIN_POSITIVE && n.is_finite()).then(|| self / n)
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A line with a chosen unit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedLine {
    pub anchor: Vec3,
    pub direction: Vec3,
}

impl OrientedLine {
    /// Builds a line through `anchor`; `direction` is normalised.
    pub fn new(anchor: Vec3, direction: Vec3) -> Option<Self> {
        Some(OrientedLine {
            anchor,
            direction: direction.normalized()?,
        })
    }

    /// Line through two distinct points, oriented from `a` towards `b`.
    pub fn through(a: Vec3, b: Vec3) -> Option<Self> {
        OrientedLine::new(a, b - a)
    }

    pub fn reversed(self) -> Self {
        OrientedLine {
            anchor: self.anchor,
            direction: -self.direction,
        }
    }

    /// Same oriented line, re-anchored at `anchor + direction * t`.
    pub fn reanchored(self, t: f64) -> Self {
        OrientedLine {
            anchor: self.anchor + self.direction * t,
            direction: self.direction,
        }
    }

    pub fn point_at(self, t: f64) -> Vec3 {
        self.anchor + self.direction * t
    }

    pub fn distance_to_point(self, p: Vec3) -> f64 {
        (p - self.anchor).cross(self.direction).norm()
    }
}

/// The pair invariants `(g, h)` of two oriented lines.
pub fn line_invariants(l0: &OrientedLine, l1: &OrientedLine) -> (f64, f64) {
    let g = l0.direction.dot(l1.direction);
    let h = (l0.anchor - l1.anchor).dot(l0.direction.cross(l1.direction));
    (g, h)
}

/// Minimal distance between the carrier lines, `None` when they are parallel
/// within `tol` (measured as `‖u0 × u1‖`).
pub fn line_distance(l0: &OrientedLine, l1: &OrientedLine, tol: f64) -> Option<f64> {
    let s = l0.direction.cross(l1.direction).norm();
    if s <= tol {
        return None;
    }
    let (_, h) = line_invariants(l0, l1);
    Some(h.abs() / s)
}

/// True when both invariants are within `tol` of zero and the lines are not
/// parallel. Near-parallel pairs report `false`.
pub fn is_perpendicular_intersecting(l0: &OrientedLine, l1: &OrientedLine, tol: f64) -> bool {
    if l0.direction.cross(l1.direction).norm() <= tol {
        return false;
    }
    let (g, h) = line_invariants(l0, l1);
    g.abs() <= tol && h.abs() <= tol
}

/// A dual number `real + ε·dual` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualNumber {
    pub real: f64,
    pub dual: f64,
}

impl DualNumber {
    pub const fn new(real: f64, dual: f64) -> Self {
        DualNumber { real, dual }
    }
}

impl Add for DualNumber {
    type Output = DualNumber;
    fn add(self, o: DualNumber) -> DualNumber {
        DualNumber::new(self.real + o.real, self.dual + o.dual)
    }
}

impl Sub for DualNumber {
    type Output = DualNumber;
    fn sub(self, o: DualNumber) -> DualNumber {
        DualNumber::new(self.real - o.real, self.dual - o.dual)
    }
}

impl Mul for DualNumber {
    type Output = DualNumber;
    fn mul(self, o: DualNumber) -> DualNumber {
        DualNumber::new(self.real * o.real, self.real * o.dual + self.dual * o.real)
    }
}

impl Neg for DualNumber {
    type Output = DualNumber;
    fn neg(self) -> DualNumber {
        DualNumber::new(-self.real, -self.dual)
    }
}

/// A dual vector `a + ε·b`. For a line, `a` is the direction and `b` the
/// moment vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVector {
    pub real_part: Vec3,
    pub dual_part: Vec3,
}

impl DualVector {
    pub fn dot(&self, o: &DualVector) -> DualNumber {
        DualNumber::new(
            self.real_part.dot(o.real_part),
            self.real_part.dot(o.dual_part) + self.dual_part.dot(o.real_part),
        )
    }

    /// Distance of `self · self` from `1 + ε0`, as `max(|re − 1|, |du|)`.
    pub fn study_defect(&self) -> f64 {
        let d = self.dot(self);
        (d.real - 1.0).abs().max(d.dual.abs())
    }
}

/// Study-sphere image `u + ε (p × u)` of an oriented line.
pub fn to_study(l: &OrientedLine) -> DualVector {
    DualVector {
        real_part: l.direction,
        dual_part: l.anchor.cross(l.direction),
    }
}

pub fn dual_dot(a: &DualVector, b: &DualVector) -> DualNumber {
    a.dot(b)
}

/// A straight segment in 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment3 {
    pub start: Vec3,
    pub end: Vec3,
}

impl Segment3 {
    pub const fn new(start: Vec3, end: Vec3) -> Self {
        Segment3 { start, end }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn midpoint(&self) -> Vec3 {
        self.start.lerp(self.end, 0.5)
    }

    pub fn reversed(&self) -> Segment3 {
        Segment3::new(self.end, self.start)
    }

    pub fn lerp(&self, o: &Segment3, t: f64) -> Segment3 {
        Segment3::new(self.start.lerp(o.start, t), self.end.lerp(o.end, t))
    }

    /// Carrier line oriented from `start` to `end`.
    pub fn line(&self) -> Option<OrientedLine> {
        OrientedLine::through(self.start, self.end)
    }

    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let d = self.end - self.start;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return p.distance(self.start);
        }
        let t = ((p - self.start).dot(d) / len2).clamp(0.0, 1.0);
        p.distance(self.start + d * t)
    }

    /// Minimal distance between two segments.
    pub fn distance(&self, o: &Segment3) -> f64 {
        let (p, q) = closest_points(self, o);
        p.distance(q)
    }
}

/// Closest points between two segments (clamped parametric solution, with the
/// parallel case handled by endpoint projection).
pub fn closest_points(a: &Segment3, b: &Segment3) -> (Vec3, Vec3) {
    let d1 = a.end - a.start;
    let d2 = b.end - b.start;
    let r = a.start - b.start;
    let aa = d1.norm_squared();
    let ee = d2.norm_squared();
    let f = d2.dot(r);
    if aa <= f64::MIN_POSITIVE && ee <= f64::MIN_POSITIVE {
        return (a.start, b.start);
    }
    let (s, t);
    if aa <= f64::MIN_POSITIVE {
        s = 0.0;
        t = (f / ee).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if ee <= f64::MIN_POSITIVE {
            t = 0.0;
            s = (-c / aa).clamp(0.0, 1.0);
        } else {
            let bb = d1.dot(d2);
            let denom = aa * ee - bb * bb;
            let mut s0 = if denom > 1e-14 * aa * ee {
                ((bb * f - c * ee) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (bb * s0 + f) / ee;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / aa).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((bb - c) / aa).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let p = a.start + d1 * s;
    let q = b.start + d2 * t;
    // The clamped solution can miss the optimum for near-parallel pairs;
    // endpoint projections are always admissible candidates.
    let mut best = (p, q, p.distance(q));
    for (pp, seg) in [(a.start, b), (a.end, b)] {
        let qq = project_onto(seg, pp);
        let dist = pp.distance(qq);
        if dist < best.2 {
            best = (pp, qq, dist);
        }
    }
    for (qq, seg) in [(b.start, a), (b.end, a)] {
        let pp = project_onto(seg, qq);
        let dist = pp.distance(qq);
        if dist < best.2 {
            best = (pp, qq, dist);
        }
    }
    (best.0, best.1)
}

fn project_onto(seg: &Segment3, p: Vec3) -> Vec3 {
    let d = seg.end - seg.start;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return seg.start;
    }
    let t = ((p - seg.start).dot(d) / len2).clamp(0.0, 1.0);
    seg.start + d * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: [f64; 3], d: [f64; 3]) -> OrientedLine {
        OrientedLine::new(Vec3::from_array(a), Vec3::from_array(d)).unwrap()
    }

    #[test]
    fn invariants_of_axes() {
        let x = line([0.0; 3], [1.0, 0.0, 0.0]);
        let y = line([0.0; 3], [0.0, 1.0, 0.0]);
        assert_eq!(line_invariants(&x, &y), (0.0, 0.0));
        let y_up = line([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        assert_eq!(line_invariants(&x, &y_up), (0.0, -1.0));
        assert_eq!(line_invariants(&x, &x), (1.0, 0.0));
    }

    #[test]
    fn perpendicular_intersecting_cases() {
        let x = line([0.0; 3], [1.0, 0.0, 0.0]);
        let y = line([0.0; 3], [0.0, 1.0, 0.0]);
        assert!(is_perpendicular_intersecting(&x, &y, 1e-9));
        let x_shift = line([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(!is_perpendicular_intersecting(&x, &x_shift, 1e-9));
        let skew = line([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        assert!(!is_perpendicular_intersecting(&x, &skew, 1e-9));
        assert_eq!(line_distance(&x, &skew, 1e-9), Some(1.0));
        assert_eq!(line_distance(&x, &x_shift, 1e-9), None);
    }

    #[test]
    fn study_images() {
        let x = line([0.0; 3], [1.0, 0.0, 0.0]);
        let s = to_study(&x);
        assert_eq!(s.real_part, Vec3::X);
        assert_eq!(s.dual_part, Vec3::ZERO);

        let lifted = line([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert_eq!(to_study(&lifted).dual_part, Vec3::Y);

        // Moment of the y-direction line through (1,0,0), re-derived from a
        // second anchor on the same line.
        let a = to_study(&line([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]));
        let b = to_study(&line([1.0, 1.0, 0.0], [0.0, 1.0, 0.0]));
        assert_eq!(a.dual_part, Vec3::new(0.0, 0.0, 1.0));
        assert!((a.dual_part - b.dual_part).norm() < 1e-12);
    }

    #[test]
    fn dual_dot_examples() {
        let x = to_study(&line([0.0; 3], [1.0, 0.0, 0.0]));
        let y = to_study(&line([0.0; 3], [0.0, 1.0, 0.0]));
        let x_up = to_study(&line([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]));
        assert_eq!(dual_dot(&x, &x), DualNumber::new(1.0, 0.0));
        assert_eq!(dual_dot(&x, &y), DualNumber::new(0.0, 0.0));
        assert_eq!(dual_dot(&x, &x_up), DualNumber::new(1.0, 0.0));
    }

    #[test]
    fn epsilon_squares_to_zero() {
        let e = DualNumber::new(0.0, 3.5);
        let f = DualNumber::new(0.0, -2.0);
        assert_eq!(e * f, DualNumber::new(0.0, 0.0));
        let p = DualNumber::new(2.0, 3.0) * DualNumber::new(5.0, 7.0);
        assert_eq!(p, DualNumber::new(10.0, 14.0 + 15.0));
    }

    #[test]
    fn segment_distances() {
        let a = Segment3::new(Vec3::ZERO, Vec3::X);
        let b = Segment3::new(Vec3::new(0.5, -1.0, 1.0), Vec3::new(0.5, 1.0, 1.0));
        assert!((a.distance(&b) - 1.0).abs() < 1e-15);
        let c = Segment3::new(Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0));
        assert!((a.distance(&c) - 1.0).abs() < 1e-15);
        let par = Segment3::new(Vec3::new(0.2, 0.5, 0.0), Vec3::new(0.7, 0.5, 0.0));
        assert!((a.distance(&par) - 0.5).abs() < 1e-15);
        let crossing = Segment3::new(Vec3::new(0.5, -1.0, 0.0), Vec3::new(0.5, 1.0, 0.0));
        assert!(a.distance(&crossing) < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
            (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
        }

        fn any_line() -> impl Strategy<Value = OrientedLine> {
            (vec3(5.0), vec3(1.0))
                .prop_filter_map("zero direction", |(a, d)| {
                    (d.norm() > 1e-3).then(|| OrientedLine::new(a, d)).flatten()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn h_is_anchor_independent(l0 in any_line(), l1 in any_line(), s in -5.0..5.0f64, t in -5.0..5.0f64) {
                let (g, h) = line_invariants(&l0, &l1);
                let (g2, h2) = line_invariants(&l0.reanchored(s), &l1.reanchored(t));
                prop_assert!((g - g2).abs() < 1e-12);
                prop_assert!((h - h2).abs() < 1e-10);
            }

            #[test]
            fn dual_dot_matches_invariants(l0 in any_line(), l1 in any_line()) {
                let (g, h) = line_invariants(&l0, &l1);
                let d = dual_dot(&to_study(&l0), &to_study(&l1));
                prop_assert!((d.real - g).abs() < 1e-12);
                prop_assert!((d.dual - h).abs() < 1e-12);
                prop_assert!(to_study(&l0).study_defect() < 1e-12);
            }

            #[test]
            fn pair_symmetries(l0 in any_line(), l1 in any_line()) {
                let (g, h) = line_invariants(&l0, &l1);
                let (g_sw, h_sw) = line_invariants(&l1, &l0);
                prop_assert_eq!(g, g_sw);
                prop_assert!((h - h_sw).abs() < 1e-12);
                let (g_rev, h_rev) = line_invariants(&l0.reversed(), &l1);
                prop_assert_eq!(g_rev, -g);
                prop_assert!((h_rev + h).abs() < 1e-12);
            }

            #[test]
            fn normalized_h_is_line_distance(l0 in any_line(), l1 in any_line()) {
                if let Some(d) = line_distance(&l0, &l1, 1e-3) {
                    // Distance between segments on the carrier lines, long
                    // enough to contain the closest points of near-parallel
                    // lines.
                    let sin = l0.direction.cross(l1.direction).norm();
                    let half = 10.0 * (1.0 + l0.anchor.distance(l1.anchor)) / sin;
                    let a = Segment3::new(l0.point_at(-half), l0.point_at(half));
                    let b = Segment3::new(l1.point_at(-half), l1.point_at(half));
                    prop_assert!((a.distance(&b) - d).abs() < 1e-6 * (1.0 + d));
                }
            }

            #[test]
            fn segment_distance_is_below_sampled(a0 in vec3(2.0), a1 in vec3(2.0), b0 in vec3(2.0), b1 in vec3(2.0)) {
                let a = Segment3::new(a0, a1);
                let b = Segment3::new(b0, b1);
                let d = a.distance(&b);
                let mut best = f64::INFINITY;
                for i in 0..=40 {
                    for j in 0..=40 {
                        let p = a0.lerp(a1, i as f64 / 40.0);
                        let q = b0.lerp(b1, j as f64 / 40.0);
                        best = best.min(p.distance(q));
                    }
                }
                prop_assert!(d <= best + 1e-12);
                prop_assert!(best - d <= 0.1 * ((a1 - a0).norm() + (b1 - b0).norm()) + 1e-12);
            }
        }
    }
}
