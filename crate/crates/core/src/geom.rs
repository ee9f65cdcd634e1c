//! Planar and spatial primitives shared by every other module.
//!
//! Points double as vectors. Predicates take a [`TolerancePolicy`]; float
//! thresholds are relative to the magnitudes involved so that uniformly
//! scaling an instance never changes a verdict.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("zero-length ray")]
    ZeroLengthRay,
    #[error("non-isometric placement: hinge is {expected} long in space but {actual} in the plane")]
    NonIsometricPlacement { expected: String, actual: String },
    #[error("degenerate face: vertices are collinear")]
    DegenerateFace,
    #[error("half-plane normal is zero")]
    ZeroNormal,
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2 { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Polar angle in (-pi, pi].
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! impl_vector_ops {
    ($t:ident { $($f:ident),+ }) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                $t { $($f: self.$f + o.$f),+ }
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                $t { $($f: self.$f - o.$f),+ }
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t {
                $t { $($f: self.$f * s),+ }
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                $t { $($f: -self.$f),+ }
            }
        }
    };
}

impl_vector_ops!(Point2 { x, y });
impl_vector_ops!(Point3 { x, y, z });

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Arithmetic used for straight-line predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    #[default]
    Float,
    /// Coordinates are read back as the shortest decimal that prints them
    /// and predicates are evaluated exactly over the rationals.
    ExactRational,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TolerancePolicy {
    /// Relative threshold for sign decisions (sines, normalized depths).
    pub eps_predicate: f64,
    /// Relative threshold for areas (fraction of squared instance size).
    pub eps_area: f64,
    pub mode: ArithmeticMode,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            eps_predicate: 1e-9,
            eps_area: 1e-12,
            mode: ArithmeticMode::Float,
        }
    }
}

impl TolerancePolicy {
    pub fn with_eps_predicate(mut self, eps: f64) -> Self {
        self.eps_predicate = eps;
        self
    }

    pub fn exact(mut self) -> Self {
        self.mode = ArithmeticMode::ExactRational;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.eps_predicate > 0.0 && self.eps_area > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Clockwise,
    Collinear,
    CounterClockwise,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Clockwise => -1,
            Orientation::Collinear => 0,
            Orientation::CounterClockwise => 1,
        }
    }

    fn from_sign(s: i8) -> Self {
        match s.signum() {
            1 => Orientation::CounterClockwise,
            -1 => Orientation::Clockwise,
            _ => Orientation::Collinear,
        }
    }
}

/// Sign of twice the signed area of `(p, q, r)`.
///
/// In float mode the determinant is evaluated on a canonical (sorted)
/// ordering of the points so that swapping arguments negates the result
/// exactly; it counts as collinear when the determinant is below
/// `eps_predicate` times the largest product of two sides meeting at a corner.
pub fn orient2d(p: Point2, q: Point2, r: Point2, policy: &TolerancePolicy) -> Orientation {
    match policy.mode {
        ArithmeticMode::ExactRational => Orientation::from_sign(exact::orient2d_sign(p, q, r)),
        ArithmeticMode::Float => {
            let mut pts = [p, q, r];
            let mut parity = 1i8;
            // three-element sorting network, tracking permutation parity
            for (i, j) in [(0, 1), (1, 2), (0, 1)] {
                if lex_less(pts[j], pts[i]) {
                    pts.swap(i, j);
                    parity = -parity;
                }
            }
            let [a, b, c] = pts;
            let det = (b - a).cross(c - a);
            let scale = [(b - a).norm() * (c - a).norm(), (a - b).norm() * (c - b).norm(), (a - c).norm() * (b - c).norm()]
                .into_iter()
                .fold(0.0, f64::max);
            if det.abs() <= policy.eps_predicate * scale {
                Orientation::Collinear
            } else {
                Orientation::from_sign(parity * det.signum() as i8)
            }
        }
    }
}

fn lex_less(a: Point2, b: Point2) -> bool {
    a.x < b.x || (a.x == b.x && a.y < b.y)
}

/// Shared vector operations for [`angle_at`].
pub trait EuclideanPoint: Copy + Sub<Output = Self> {
    fn dot_with(self, o: Self) -> f64;
    fn cross_norm(self, o: Self) -> f64;
    fn length(self) -> f64;
}

impl EuclideanPoint for Point2 {
    fn dot_with(self, o: Self) -> f64 {
        self.dot(o)
    }
    fn cross_norm(self, o: Self) -> f64 {
        self.cross(o).abs()
    }
    fn length(self) -> f64 {
        self.norm()
    }
}

impl EuclideanPoint for Point3 {
    fn dot_with(self, o: Self) -> f64 {
        self.dot(o)
    }
    fn cross_norm(self, o: Self) -> f64 {
        self.cross(o).norm()
    }
    fn length(self) -> f64 {
        self.norm()
    }
}

/// Angle in `[0, pi]` between the rays `v -> p` and `v -> q`.
pub fn angle_at<P: EuclideanPoint>(v: P, p: P, q: P) -> Result<f64, GeomError> {
    let (a, b) = (p - v, q - v);
    if a.length() == 0.0 || b.length() == 0.0 {
        return Err(GeomError::ZeroLengthRay);
    }
    Ok(a.cross_norm(b).atan2(a.dot_with(b)))
}

/// Counter-clockwise angle in `[0, 2pi)` that rotates direction `from` onto `to`.
pub fn ccw_angle(from: Point2, to: Point2) -> f64 {
    let a = from.cross(to).atan2(from.dot(to));
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Side of `r` relative to the directed line `p -> q`, if not on it.
    pub fn of(p: Point2, q: Point2, r: Point2) -> Option<Side> {
        let c = (q - p).cross(r - p);
        if c > 0.0 {
            Some(Side::Left)
        } else if c < 0.0 {
            Some(Side::Right)
        } else {
            None
        }
    }
}

/// Places the third vertex `r` of the spatial triangle `(p, q, r)` in the
/// plane, given the planar images of the hinge endpoints `p` and `q`.
///
/// The image keeps all three side lengths and lies on `side` of the
/// directed placed hinge.
pub fn develop_across_hinge(
    p: Point3,
    q: Point3,
    r: Point3,
    placed_p: Point2,
    placed_q: Point2,
    side: Side,
    policy: &TolerancePolicy,
) -> Result<Point2, GeomError> {
    if !(p.is_finite() && q.is_finite() && r.is_finite() && placed_p.is_finite() && placed_q.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let hinge = q - p;
    let len = hinge.norm();
    let placed_len = placed_p.dist(placed_q);
    if len == 0.0 || (len - placed_len).abs() > 1e-9 * len.max(placed_len) {
        return Err(GeomError::NonIsometricPlacement {
            expected: format!("{len}"),
            actual: format!("{placed_len}"),
        });
    }
    let w = r - p;
    let along = w.dot(hinge) / len;
    let height = w.cross(hinge).norm() / len;
    if height <= policy.eps_predicate * w.norm().max(len) {
        return Err(GeomError::DegenerateFace);
    }
    let u = (placed_q - placed_p) * (1.0 / placed_len);
    let normal = match side {
        Side::Left => u.perp(),
        Side::Right => -u.perp(),
    };
    Ok(placed_p + u * along + normal * height)
}

/// Signed area of a planar polygon (positive when counter-clockwise).
pub fn signed_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Area of the spatial triangle `(a, b, c)`.
pub fn triangle_area3(a: Point3, b: Point3, c: Point3) -> f64 {
    (b - a).cross(c - a).norm() * 0.5
}

pub fn centroid(poly: &[Point2]) -> Point2 {
    let s = poly.iter().fold(Point2::default(), |acc, &p| acc + p);
    s * (1.0 / poly.len() as f64)
}

/// Largest pairwise distance among `points`, via rotating calipers on their hull.
pub fn diameter(points: &[Point2]) -> f64 {
    let hull = convex_hull(points);
    match hull.len() {
        0 | 1 => 0.0,
        2 => hull[0].dist(hull[1]),
        n => {
            let mut best = 0.0f64;
            let mut j = 1;
            for i in 0..n {
                let ni = (i + 1) % n;
                let edge = hull[ni] - hull[i];
                // advance the antipodal pointer while the triangle area grows
                while edge.cross(hull[(j + 1) % n] - hull[i]).abs() > edge.cross(hull[j] - hull[i]).abs() {
                    j = (j + 1) % n;
                }
                best = best.max(hull[i].dist(hull[j])).max(hull[ni].dist(hull[j]));
            }
            best
        }
    }
}

/// Andrew's monotone chain; counter-clockwise, no collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const TOL: TolerancePolicy = TolerancePolicy {
        eps_predicate: 1e-9,
        eps_area: 1e-12,
        mode: ArithmeticMode::Float,
    };

    #[test]
    fn orient2d_basic_cases() {
        let o = Point2::new(0.0, 0.0);
        let x = Point2::new(1.0, 0.0);
        let y = Point2::new(0.0, 1.0);
        for policy in [TOL, TOL.exact()] {
            assert_eq!(orient2d(o, x, y, &policy).sign(), 1);
            assert_eq!(orient2d(o, x, Point2::new(2.0, 0.0), &policy).sign(), 0);
            assert_eq!(orient2d(o, y, x, &policy).sign(), -1);
        }
    }

    #[test]
    fn angle_at_cases() {
        let o = Point2::new(0.0, 0.0);
        assert!((angle_at(o, Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((angle_at(o, Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)).unwrap() - PI).abs() < 1e-15);
        assert_eq!(angle_at(o, o, Point2::new(1.0, 0.0)), Err(GeomError::ZeroLengthRay));
        // b_1, b_2, b_3 of the quadrilateral-base counterexample
        let b1 = Point3::new(-0.95, 0.0, 0.0);
        let b2 = Point3::new(0.0, 3.0, 0.0);
        let b3 = Point3::new(6.0, 0.0, 0.0);
        let oracle = {
            let (u, v) = (b1 - b2, b3 - b2);
            (u.dot(v) / (u.norm() * v.norm())).acos()
        };
        let a = angle_at(b2, b1, b3).unwrap();
        assert!((a - oracle).abs() < 1e-12);
        assert!((a - 1.4137).abs() < 2e-4);
        assert!((a.to_degrees() - 81.0).abs() < 0.05);
    }

    #[test]
    fn develop_single_face() {
        let img = develop_across_hinge(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 1.0),
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Side::Right,
            &TOL,
        )
        .unwrap();
        assert!((img.x - 1.0).abs() < 1e-15);
        assert!((img.y + 2f64.sqrt()).abs() < 1e-15);
        assert!((img.dist(Point2::new(0.0, 0.0)) - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn develop_rejects_degenerate_and_stretched() {
        let err = develop_across_hinge(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(5.0, 0.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Side::Left,
            &TOL,
        );
        assert_eq!(err, Err(GeomError::DegenerateFace));
        let err = develop_across_hinge(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Side::Left,
            &TOL,
        );
        assert!(matches!(err, Err(GeomError::NonIsometricPlacement { .. })));
    }

    #[test]
    fn diameter_matches_pairwise_max() {
        let pts = [
            Point2::new(-0.95, 0.0),
            Point2::new(0.0, 3.0),
            Point2::new(6.0, 0.0),
            Point2::new(0.0, -3.0),
            Point2::new(-0.9, 0.0),
            Point2::new(0.3, 0.1),
        ];
        assert!((diameter(&pts) - 6.95).abs() < 1e-12);
    }

    fn coord() -> impl Strategy<Value = f64> {
        -100.0..100.0f64
    }

    fn pt2() -> impl Strategy<Value = Point2> {
        (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
    }

    fn pt3() -> impl Strategy<Value = Point3> {
        (coord(), coord(), coord()).prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn orient2d_is_antisymmetric(p in pt2(), q in pt2(), r in pt2()) {
            for policy in [TOL, TOL.exact()] {
                let s = orient2d(p, q, r, &policy).sign();
                prop_assert_eq!(orient2d(q, p, r, &policy).sign(), -s);
                prop_assert_eq!(orient2d(p, r, q, &policy).sign(), -s);
                prop_assert_eq!(orient2d(r, q, p, &policy).sign(), -s);
            }
        }

        #[test]
        fn exact_orient_is_error_free_on_short_decimals(
            c in proptest::collection::vec(-20_000i64..20_000, 6)
        ) {
            // four decimal digits, like the bundled fixtures
            let p = |i: usize| Point2::new(c[i] as f64 / 1e4, c[i + 1] as f64 / 1e4);
            let det = (c[2] - c[0]) as i128 * (c[5] - c[1]) as i128 - (c[3] - c[1]) as i128 * (c[4] - c[0]) as i128;
            prop_assert_eq!(orient2d(p(0), p(2), p(4), &TOL.exact()).sign() as i128, det.signum());
        }

        #[test]
        fn exact_orient_detects_decimal_collinearity(a in -500i64..500, b in -500i64..500, t in 1i64..50) {
            let p = Point2::new(a as f64 / 1e4, b as f64 / 1e4);
            let q = Point2::new((a + 7) as f64 / 1e4, (b - 13) as f64 / 1e4);
            let r = Point2::new((a + 7 * t) as f64 / 1e4, (b - 13 * t) as f64 / 1e4);
            prop_assert_eq!(orient2d(p, q, r, &TOL.exact()), Orientation::Collinear);
        }

        #[test]
        fn develop_preserves_lengths_and_sides(
            p in pt3(), q in pt3(), r in pt3(), origin in pt2(), heading in 0.0..std::f64::consts::TAU
        ) {
            let len = p.dist(q);
            prop_assume!(len > 1e-3);
            prop_assume!((r - p).cross(q - p).norm() > 1e-3 * len * len.max(r.dist(p)));
            let pp = origin;
            let pq = origin + Point2::new(len, 0.0).rotated(heading);
            let left = develop_across_hinge(p, q, r, pp, pq, Side::Left, &TOL).unwrap();
            let right = develop_across_hinge(p, q, r, pp, pq, Side::Right, &TOL).unwrap();
            for img in [left, right] {
                prop_assert!((img.dist(pp) - r.dist(p)).abs() <= 1e-9 * r.dist(p).max(1.0));
                prop_assert!((img.dist(pq) - r.dist(q)).abs() <= 1e-9 * r.dist(q).max(1.0));
            }
            prop_assert_eq!(Side::of(pp, pq, left), Some(Side::Left));
            prop_assert_eq!(Side::of(pp, pq, right), Some(Side::Right));
        }

        #[test]
        fn diameter_equals_brute_force(pts in proptest::collection::vec(pt2(), 1..30)) {
            let brute = pts.iter().flat_map(|a| pts.iter().map(move |b| a.dist(*b))).fold(0.0, f64::max);
            prop_assert!((diameter(&pts) - brute).abs() <= 1e-12 * brute.max(1.0));
        }
    }
}
