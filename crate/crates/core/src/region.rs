//! Possibly unbounded planar regions as half-plane intersections.
//!
//! Regions are never clipped to a box for decisions. Interior intersection is
//! decided by maximizing the radius of a disk inscribed in both regions, a
//! three-variable linear program solved by vertex enumeration.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geom::{GeomError, Point2, TolerancePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray2 {
    pub origin: Point2,
    pub direction: Point2,
}

impl Ray2 {
    pub fn new(origin: Point2, direction: Point2) -> Result<Self, GeomError> {
        let direction = direction.normalized().ok_or(GeomError::ZeroLengthRay)?;
        Ok(Ray2 { origin, direction })
    }

    pub fn through(origin: Point2, point: Point2) -> Result<Self, GeomError> {
        Ray2::new(origin, point - origin)
    }

    pub fn at(&self, t: f64) -> Point2 {
        self.origin + self.direction * t
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        let t = (p - self.origin).dot(self.direction).max(0.0);
        self.at(t).dist(p)
    }
}

/// The closed set `a x + b y <= c`, stored with `(a, b)` of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Set on lines that only split a non-convex region into convex pieces.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub split: bool,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GeomError> {
        let n = a.hypot(b);
        if n.is_nan() || n <= 0.0 || !c.is_finite() || !n.is_finite() {
            return Err(GeomError::ZeroNormal);
        }
        Ok(HalfPlane {
            a: a / n,
            b: b / n,
            c: c / n,
            split: false,
        })
    }

    /// Points on or to the left of the directed line `p -> q`.
    pub fn left_of(p: Point2, q: Point2) -> Result<Self, GeomError> {
        let d = q - p;
        // cross(d, x - p) >= 0  <=>  d.y x - d.x y <= d.y p.x - d.x p.y
        HalfPlane::new(d.y, -d.x, d.y * p.x - d.x * p.y)
    }

    /// Points `x` with `(x - anchor) . normal <= 0`.
    pub fn behind(anchor: Point2, normal: Point2) -> Result<Self, GeomError> {
        HalfPlane::new(normal.x, normal.y, normal.dot(anchor))
    }

    pub fn as_split(mut self) -> Self {
        self.split = true;
        self
    }

    pub fn normal(&self) -> Point2 {
        Point2::new(self.a, self.b)
    }

    /// Signed distance; non-positive inside.
    pub fn eval(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y - self.c
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.eval(p) <= tol
    }

    fn line_intersection(&self, o: &HalfPlane) -> Option<Point2> {
        let det = self.a * o.b - self.b * o.a;
        if det.abs() < 1e-15 {
            return None;
        }
        Some(Point2::new(
            (self.c * o.b - self.b * o.c) / det,
            (self.a * o.c - self.c * o.a) / det,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Intersection {
    Disjoint,
    Touching,
    Overlapping { witness: Point2 },
}

impl Intersection {
    pub fn is_overlapping(&self) -> bool {
        matches!(self, Intersection::Overlapping { .. })
    }
}

/// Intersection of half-planes; unbounded unless the constraints close it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvexRegion {
    pub halfplanes: Vec<HalfPlane>,
}

/// An arc of directions `[start, start + len]` (radians, counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: f64,
    pub len: f64,
}

impl Arc {
    pub const FULL: Arc = Arc { start: 0.0, len: TAU };

    fn offset(&self, angle: f64) -> f64 {
        (angle - self.start).rem_euclid(TAU)
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.len >= TAU || self.offset(angle) <= self.len
    }

    /// Intersection with another arc, assuming at least one is at most a half-turn.
    fn intersect(&self, o: &Arc) -> Option<Arc> {
        if self.len >= TAU {
            return Some(*o);
        }
        if o.len >= TAU {
            return Some(*self);
        }
        let mut best: Option<Arc> = None;
        for (a, b) in [(self, o), (o, self)] {
            // portion of `b` that starts inside `a`
            let off = a.offset(b.start);
            if off <= a.len {
                let len = (a.len - off).min(b.len);
                if best.is_none_or(|x| len > x.len) {
                    best = Some(Arc { start: b.start, len });
                }
            }
        }
        best
    }

    /// Positive overlap length, or minus the smaller angular gap.
    pub fn signed_overlap(&self, o: &Arc) -> f64 {
        if let Some(x) = self.intersect(o) {
            return x.len;
        }
        let gap1 = self.offset(o.start) - self.len;
        let gap2 = o.offset(self.start) - o.len;
        -gap1.min(gap2)
    }
}

/// A boundary crossing of two regions, with the angle of their common wedge there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: Point2,
    pub angle: f64,
}

impl ConvexRegion {
    pub fn new(halfplanes: Vec<HalfPlane>) -> Self {
        ConvexRegion { halfplanes }
    }

    /// Counter-clockwise convex polygon.
    pub fn from_polygon(poly: &[Point2]) -> Result<Self, GeomError> {
        let n = poly.len();
        (0..n)
            .map(|i| HalfPlane::left_of(poly[i], poly[(i + 1) % n]))
            .collect::<Result<Vec<_>, _>>()
            .map(ConvexRegion::new)
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.halfplanes.iter().all(|h| h.contains(p, tol))
    }

    pub fn contains_strictly(&self, p: Point2, margin: f64) -> bool {
        self.halfplanes.iter().all(|h| h.eval(p) < -margin)
    }

    /// Largest `|c|`, a length scale for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.halfplanes.iter().map(|h| h.c.abs()).fold(0.0, f64::max)
    }

    /// Directions along which the region is unbounded, if any.
    pub fn recession_arc(&self) -> Option<Arc> {
        let mut arc = Arc::FULL;
        for h in &self.halfplanes {
            // directions d with n . d <= 0 form the half-turn starting at n rotated by +90 degrees
            let half = Arc {
                start: (h.normal().angle() + PI / 2.0).rem_euclid(TAU),
                len: PI,
            };
            arc = arc.intersect(&half)?;
        }
        Some(arc)
    }

    /// Classifies the interiors of `self` and `other`.
    pub fn intersects(&self, other: &ConvexRegion, policy: &TolerancePolicy) -> Intersection {
        let scale = self.scale().max(other.scale());
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let all: Vec<HalfPlane> = self.halfplanes.iter().chain(&other.halfplanes).copied().collect();
        let (depth, center) = max_inscribed_radius(&all, scale);
        let eps = policy.eps_predicate * scale;
        if depth > eps {
            Intersection::Overlapping { witness: center }
        } else if depth >= -eps {
            Intersection::Touching
        } else {
            Intersection::Disjoint
        }
    }

    /// Inscribed radius of the region itself (capped at its length scale).
    pub fn depth(&self) -> f64 {
        let s = self.scale();
        max_inscribed_radius(&self.halfplanes, if s > 0.0 { s } else { 1.0 }).0
    }

    /// Vertices of the region clipped to an axis-aligned box, counter-clockwise.
    pub fn clip_to_box(&self, min: Point2, max: Point2) -> Vec<Point2> {
        let mut poly = vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ];
        for h in &self.halfplanes {
            poly = clip_polygon(&poly, h);
            if poly.is_empty() {
                break;
            }
        }
        poly
    }
}

/// Sutherland-Hodgman step: keeps the part of `poly` inside `h`.
pub fn clip_polygon(poly: &[Point2], h: &HalfPlane) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let (fp, fq) = (h.eval(p), h.eval(q));
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            out.push(p.lerp(q, fp / (fp - fq)));
        }
    }
    out
}

/// Maximizes `t` subject to `h.eval(x) + t <= 0` for every `h` and `t <= cap`.
///
/// Returns `(t, x)`. The feasible set in `(x, y, t)` is pointed whenever the
/// normals span the plane, so the optimum sits at a vertex; with only parallel
/// normals a far bounding box is added, which cannot change the optimal `t`.
fn max_inscribed_radius(hps: &[HalfPlane], cap: f64) -> (f64, Point2) {
    // rows (a, b, 1 | c); the cap row is (0, 0, 1 | cap)
    let mut rows: Vec<[f64; 4]> = hps.iter().map(|h| [h.a, h.b, 1.0, h.c]).collect();
    rows.push([0.0, 0.0, 1.0, cap]);
    let spans = hps
        .iter()
        .any(|h| hps.iter().any(|g| (h.a * g.b - h.b * g.a).abs() > 1e-12));
    if !spans {
        let m = 1e6 * cap;
        rows.extend([[1.0, 0.0, 0.0, m], [-1.0, 0.0, 0.0, m], [0.0, 1.0, 0.0, m], [0.0, -1.0, 0.0, m]]);
    }
    let tol = 1e-10 * cap;
    let mut best: Option<(f64, Point2)> = None;
    let k = rows.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let Some(sol) = solve3([rows[i], rows[j], rows[l]]) else {
                    continue;
                };
                let x = Point2::new(sol[0], sol[1]);
                let t = sol[2];
                if !(x.is_finite() && t.is_finite()) {
                    continue;
                }
                let feasible = rows
                    .iter()
                    .all(|r| r[0] * x.x + r[1] * x.y + r[2] * t <= r[3] + tol * (1.0 + x.norm() / cap));
                if feasible && best.is_none_or(|(bt, _)| t > bt) {
                    best = Some((t, x));
                }
            }
        }
    }
    best.unwrap_or((f64::NEG_INFINITY, Point2::default()))
}

fn solve3(m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    let det = |c0: usize, c1: usize, c2: usize| {
        m[0][c0] * (m[1][c1] * m[2][c2] - m[1][c2] * m[2][c1]) - m[0][c1] * (m[1][c0] * m[2][c2] - m[1][c2] * m[2][c0])
            + m[0][c2] * (m[1][c0] * m[2][c1] - m[1][c1] * m[2][c0])
    };
    let d = det(0, 1, 2);
    if d.abs() < 1e-13 {
        return None;
    }
    Some([det(3, 1, 2) / d, det(0, 3, 2) / d, det(0, 1, 3) / d])
}

/// A finite union of convex pieces; wedges wider than a half-turn need two.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Region {
    pub pieces: Vec<ConvexRegion>,
}

impl From<ConvexRegion> for Region {
    fn from(c: ConvexRegion) -> Self {
        Region { pieces: vec![c] }
    }
}

impl Region {
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.pieces.iter().any(|c| c.contains(p, tol))
    }

    pub fn intersects(&self, other: &Region, policy: &TolerancePolicy) -> Intersection {
        let mut touching = false;
        for a in &self.pieces {
            for b in &other.pieces {
                match a.intersects(b, policy) {
                    hit @ Intersection::Overlapping { .. } => return hit,
                    Intersection::Touching => touching = true,
                    Intersection::Disjoint => {}
                }
            }
        }
        if touching {
            Intersection::Touching
        } else {
            Intersection::Disjoint
        }
    }

    /// Signed angular overlap of the recession arcs, `None` if either region is bounded.
    pub fn recession_overlap(&self, other: &Region) -> Option<f64> {
        let arcs = |r: &Region| r.pieces.iter().filter_map(ConvexRegion::recession_arc).collect::<Vec<_>>();
        let (mine, theirs) = (arcs(self), arcs(other));
        mine.iter()
            .flat_map(|a| theirs.iter().map(move |b| a.signed_overlap(b)))
            .reduce(f64::max)
    }

    /// Points where a true boundary line of `self` crosses one of `other`,
    /// each with the opening angle of the common wedge there.
    pub fn crossings(&self, other: &Region, policy: &TolerancePolicy) -> Vec<Crossing> {
        let mut out: Vec<Crossing> = Vec::new();
        for pa in &self.pieces {
            for pb in &other.pieces {
                let scale = pa.scale().max(pb.scale()).max(f64::MIN_POSITIVE);
                let tol = policy.eps_predicate * scale;
                for ha in pa.halfplanes.iter().filter(|h| !h.split) {
                    for hb in pb.halfplanes.iter().filter(|h| !h.split) {
                        let Some(x) = ha.line_intersection(hb) else { continue };
                        let tol = tol * (1.0 + x.norm() / scale);
                        if !(pa.contains(x, tol) && pb.contains(x, tol)) {
                            continue;
                        }
                        let (na, nb) = (ha.normal(), hb.normal());
                        let angle = na.cross(nb).abs().atan2(-na.dot(nb));
                        if !out.iter().any(|c| c.point.dist(x) <= tol) {
                            out.push(Crossing { point: x, angle });
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn hp(a: f64, b: f64, c: f64) -> HalfPlane {
        HalfPlane::new(a, b, c).unwrap()
    }

    #[test]
    fn opposite_quarter_planes_are_disjoint() {
        let q1 = ConvexRegion::new(vec![hp(1.0, 0.0, 0.0), hp(0.0, 1.0, 0.0)]);
        let q2 = ConvexRegion::new(vec![hp(-1.0, 0.0, -1.0), hp(0.0, -1.0, -1.0)]);
        assert_eq!(q1.intersects(&q2, &policy()), Intersection::Disjoint);
    }

    #[test]
    fn half_planes_sharing_a_line_touch() {
        let h1 = ConvexRegion::new(vec![hp(1.0, 0.0, 2.0)]);
        let h2 = ConvexRegion::new(vec![hp(-1.0, 0.0, -2.0)]);
        assert_eq!(h1.intersects(&h2, &policy()), Intersection::Touching);
        let h3 = ConvexRegion::new(vec![hp(-1.0, 0.0, -1.0)]);
        assert!(h1.intersects(&h3, &policy()).is_overlapping());
    }

    #[test]
    fn zero_normal_is_rejected() {
        assert_eq!(HalfPlane::new(0.0, 0.0, 1.0), Err(GeomError::ZeroNormal));
    }

    #[test]
    fn thin_unbounded_sliver_overlaps() {
        // below the x-axis and above a line that crosses it far away at a tiny angle
        let psi = 1e-4f64;
        let below: Region = ConvexRegion::new(vec![hp(0.0, 1.0, 0.0)]).into();
        let start = Point2::new(0.0, 1.0);
        let above: Region =
            ConvexRegion::new(vec![HalfPlane::left_of(start, start + Point2::new(psi.cos(), -psi.sin())).unwrap()]).into();
        match below.intersects(&above, &policy()) {
            Intersection::Overlapping { witness } => {
                assert!(below.pieces[0].contains_strictly(witness, 0.0));
                assert!(above.pieces[0].contains_strictly(witness, 0.0));
            }
            other => panic!("expected overlap, got {other:?}"),
        }
        let cs = below.crossings(&above, &policy());
        assert_eq!(cs.len(), 1);
        assert!((cs[0].angle - psi).abs() < 1e-12);
        assert!((cs[0].point.x - 1.0 / psi.tan()).abs() < 1e-6);
        assert!((below.recession_overlap(&above).unwrap() - psi).abs() < 1e-12);
    }

    #[test]
    fn crossing_angle_of_two_lines() {
        let a: Region = ConvexRegion::new(vec![hp(0.0, -1.0, 0.0)]).into();
        let b: Region = ConvexRegion::new(vec![hp(1.0, -1.0, 0.0)]).into(); // y >= x
        let cs = a.crossings(&b, &policy());
        assert_eq!(cs.len(), 1);
        // common part near the origin is {y >= 0, y >= x}: opening 135 degrees
        assert!((cs[0].angle - 0.75 * PI).abs() < 1e-12);
    }

    #[test]
    fn recession_arcs() {
        let quarter = ConvexRegion::new(vec![hp(-1.0, 0.0, 0.0), hp(0.0, -1.0, 0.0)]);
        let arc = quarter.recession_arc().unwrap();
        assert!((arc.len - PI / 2.0).abs() < 1e-12);
        assert!(arc.contains(PI / 4.0) && !arc.contains(-PI / 4.0));
        let square = ConvexRegion::from_polygon(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!(square.recession_arc().is_none());
        let third: Region = ConvexRegion::new(vec![hp(1.0, 0.0, 0.0), hp(0.0, -1.0, 0.0)]).into();
        assert!((Region::from(quarter).recession_overlap(&third).unwrap() + 0.0).abs() < 1e-12);
    }

    #[test]
    fn clip_to_box_of_half_plane() {
        let h = ConvexRegion::new(vec![hp(1.0, 0.0, 0.0)]);
        let poly = h.clip_to_box(Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0));
        assert!((crate::geom::signed_area(&poly) - 2.0).abs() < 1e-12);
    }

    fn tri() -> impl Strategy<Value = Vec<Point2>> {
        proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3).prop_filter_map("degenerate", |v| {
            let mut p: Vec<Point2> = v.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
            let a = crate::geom::signed_area(&p);
            if a.abs() < 1e-2 {
                return None;
            }
            if a < 0.0 {
                p.reverse();
            }
            Some(p)
        })
    }

    proptest! {
        #[test]
        fn intersection_is_symmetric_with_interior_witness(t1 in tri(), t2 in tri()) {
            let (r1, r2) = (ConvexRegion::from_polygon(&t1).unwrap(), ConvexRegion::from_polygon(&t2).unwrap());
            let a = r1.intersects(&r2, &policy());
            let b = r2.intersects(&r1, &policy());
            prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b));
            if let Intersection::Overlapping { witness } = a {
                prop_assert!(r1.contains_strictly(witness, 0.0));
                prop_assert!(r2.contains_strictly(witness, 0.0));
            }
        }
    }
}
