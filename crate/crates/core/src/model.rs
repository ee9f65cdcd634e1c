//! Prismatoid data model, validation, and the lateral band of triangles.
//!
//! Indices are 0-based in code and rendered 1-based (`b_1`, `A_2`, ...) in
//! every `Display` implementation, matching the usual labelling of the two
//! polygons.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::geom::{angle_at, orient2d, signed_area, triangle_area3, ArithmeticMode, Orientation, Point2, Point3, TolerancePolicy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("fewer than 3 vertices in the {0} polygon")]
    TooFewVertices(PolygonRole),
    #[error("non-finite coordinate in the {0} polygon")]
    NonFinite(PolygonRole),
    #[error("the {0} polygon is not planar")]
    NotPlanar(PolygonRole),
    #[error("planes not parallel")]
    PlanesNotParallel,
    #[error("coplanar polygons")]
    CoplanarPolygons,
    #[error("repeated vertex {index} in the {role} polygon")]
    RepeatedVertex { role: PolygonRole, index: usize },
    #[error("nonconvex polygon ({0}): {1}")]
    NonConvex(PolygonRole, String),
    #[error("non-simplicial side face: edge {base_edge} of the base is parallel to edge {top_edge} of the top")]
    NonSimplicialSideFace { base_edge: usize, top_edge: usize },
    #[error("top/base face reconstruction failed: {0}")]
    Reconstruction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonRole {
    Top,
    Base,
}

impl fmt::Display for PolygonRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolygonRole::Top => "top",
            PolygonRole::Base => "base",
        })
    }
}

/// A vertex of the prismatoid: `Base(i)` is `b_{i+1}`, `Top(j)` is `a_{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexId {
    Base(usize),
    Top(usize),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Base(i) => write!(f, "b_{}", i + 1),
            VertexId::Top(j) => write!(f, "a_{}", j + 1),
        }
    }
}

/// A face of the prismatoid surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceId {
    Base,
    Top,
    /// B-triangle on base edge `b_i b_{i+1}`.
    BTriangle(usize),
    /// A-triangle on top edge `a_j a_{j+1}`.
    ATriangle(usize),
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaceId::Base => f.write_str("B"),
            FaceId::Top => f.write_str("A"),
            FaceId::BTriangle(i) => write!(f, "B_{}", i + 1),
            FaceId::ATriangle(j) => write!(f, "A_{}", j + 1),
        }
    }
}

/// Two parallel strictly convex polygons, both counter-clockwise seen from
/// above, the base in a plane below the top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prismatoid {
    pub top: Vec<Point3>,
    pub base: Vec<Point3>,
    /// Plane separation, always positive.
    pub z: f64,
}

fn newell_normal(poly: &[Point3]) -> Point3 {
    let n = poly.len();
    (0..n).fold(Point3::default(), |acc, i| {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        acc + Point3::new((p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y))
    })
}

fn extent(points: &[Point3]) -> f64 {
    points
        .iter()
        .flat_map(|p| points.iter().map(move |q| p.dist(*q)))
        .fold(0.0, f64::max)
}

/// Rotation taking the unit vector `n` onto `+z` (Rodrigues).
fn align_to_z(n: Point3) -> impl Fn(Point3) -> Point3 {
    let z = Point3::new(0.0, 0.0, 1.0);
    let axis = n.cross(z);
    let s = axis.norm();
    let c = n.dot(z);
    let k = axis.normalized().unwrap_or(Point3::new(1.0, 0.0, 0.0));
    let angle = s.atan2(c);
    let (sa, ca) = angle.sin_cos();
    move |v: Point3| v * ca + k.cross(v) * sa + k * (k.dot(v) * (1.0 - ca))
}

impl Prismatoid {
    pub fn n(&self) -> usize {
        self.base.len()
    }

    pub fn m(&self) -> usize {
        self.top.len()
    }

    pub fn point(&self, v: VertexId) -> Point3 {
        match v {
            VertexId::Base(i) => self.base[i % self.n()],
            VertexId::Top(j) => self.top[j % self.m()],
        }
    }

    pub fn base_xy(&self) -> Vec<Point2> {
        self.base.iter().map(|p| p.xy()).collect()
    }

    pub fn top_xy(&self) -> Vec<Point2> {
        self.top.iter().map(|p| p.xy()).collect()
    }

    /// Interior angle of the base at `b_i`.
    pub fn base_angle(&self, i: usize) -> f64 {
        let n = self.n();
        let (p, v, q) = (self.base[(i + n - 1) % n], self.base[i], self.base[(i + 1) % n]);
        angle_at(v.xy(), p.xy(), q.xy()).expect("validated base has no repeated vertices")
    }

    /// Largest distance between two vertices of either polygon.
    pub fn size(&self) -> f64 {
        let all: Vec<Point3> = self.top.iter().chain(&self.base).copied().collect();
        extent(&all)
    }

    pub fn scaled(&self, s: f64) -> Prismatoid {
        Prismatoid {
            top: self.top.iter().map(|&p| p * s).collect(),
            base: self.base.iter().map(|&p| p * s).collect(),
            z: self.z * s,
        }
    }

    /// Rotation about the vertical axis.
    pub fn rotated_about_z(&self, angle: f64) -> Prismatoid {
        let rot = |p: &Point3| {
            let q = p.xy().rotated(angle);
            Point3::new(q.x, q.y, p.z)
        };
        Prismatoid {
            top: self.top.iter().map(rot).collect(),
            base: self.base.iter().map(rot).collect(),
            z: self.z,
        }
    }

    /// Checks the two polygons and normalizes them into a prismatoid.
    ///
    /// Polygons in arbitrary parallel planes are first moved by a rigid motion
    /// so that the planes are horizontal and the top lies above the base.
    /// Clockwise polygons are reversed, keeping their first vertex.
    pub fn validate(top: &[Point3], base: &[Point3], policy: &TolerancePolicy) -> Result<Prismatoid, ModelError> {
        use PolygonRole::{Base, Top};
        for (role, poly) in [(Top, top), (Base, base)] {
            if poly.len() < 3 {
                return Err(ModelError::TooFewVertices(role));
            }
            if poly.iter().any(|p| !p.is_finite()) {
                return Err(ModelError::NonFinite(role));
            }
        }
        let all: Vec<Point3> = top.iter().chain(base).copied().collect();
        let size = extent(&all);
        if size.is_nan() || size <= 0.0 {
            return Err(ModelError::RepeatedVertex { role: Base, index: 1 });
        }
        let eps_len = policy.eps_predicate * size;
        for (role, poly) in [(Top, top), (Base, base)] {
            let k = poly.len();
            for i in 0..k {
                for j in i + 1..k {
                    if poly[i].dist(poly[j]) <= eps_len {
                        return Err(ModelError::RepeatedVertex { role, index: j });
                    }
                }
            }
        }

        let (mut top, mut base) = (top.to_vec(), base.to_vec());
        let already_horizontal = |poly: &[Point3]| poly.iter().all(|p| (p.z - poly[0].z).abs() <= eps_len);
        if !(already_horizontal(&top) && already_horizontal(&base)) {
            let nb = newell_normal(&base).normalized().ok_or(ModelError::NonConvex(Base, "zero area".into()))?;
            let nt = newell_normal(&top).normalized().ok_or(ModelError::NonConvex(Top, "zero area".into()))?;
            for (role, poly, n) in [(Top, &top, nt), (Base, &base, nb)] {
                if poly.iter().any(|p| (p.dot(n) - poly[0].dot(n)).abs() > eps_len) {
                    return Err(ModelError::NotPlanar(role));
                }
            }
            if nb.cross(nt).norm() > policy.eps_predicate {
                return Err(ModelError::PlanesNotParallel);
            }
            let rot = align_to_z(nb);
            top = top.into_iter().map(&rot).collect();
            base = base.into_iter().map(&rot).collect();
        }
        let mean_z = |poly: &[Point3]| poly.iter().map(|p| p.z).sum::<f64>() / poly.len() as f64;
        let (mut zt, mut zb) = (mean_z(&top), mean_z(&base));
        if (zt - zb).abs() <= eps_len {
            return Err(ModelError::CoplanarPolygons);
        }
        if zt < zb {
            // half-turn about the x-axis
            let flip = |p: Point3| Point3::new(p.x, -p.y, -p.z);
            top = top.into_iter().map(flip).collect();
            base = base.into_iter().map(flip).collect();
            (zt, zb) = (-zt, -zb);
        }
        for p in &mut top {
            p.z = zt;
        }
        for p in &mut base {
            p.z = zb;
        }

        for (role, poly) in [(Top, &mut top), (Base, &mut base)] {
            let xy: Vec<Point2> = poly.iter().map(|p| p.xy()).collect();
            if signed_area(&xy) < 0.0 {
                poly[1..].reverse();
            }
            check_strictly_convex(role, &poly.iter().map(|p| p.xy()).collect::<Vec<_>>(), policy)?;
        }
        Ok(Prismatoid { top, base, z: zt - zb })
    }
}

fn check_strictly_convex(role: PolygonRole, poly: &[Point2], policy: &TolerancePolicy) -> Result<(), ModelError> {
    let k = poly.len();
    let mut turning = 0.0;
    for i in 0..k {
        let (p, q, r) = (poly[i], poly[(i + 1) % k], poly[(i + 2) % k]);
        match orient2d(p, q, r, policy) {
            Orientation::CounterClockwise => {}
            Orientation::Collinear => {
                return Err(ModelError::NonConvex(role, format!("vertices {}..{} are collinear", i + 1, (i + 2) % k + 1)))
            }
            Orientation::Clockwise => return Err(ModelError::NonConvex(role, format!("reflex vertex {}", (i + 1) % k + 1))),
        }
        turning += (q - p).cross(r - q).atan2((q - p).dot(r - q));
    }
    if (turning - TAU).abs() > 1e-6 {
        return Err(ModelError::NonConvex(role, "polygon winds more than once".into()));
    }
    Ok(())
}

/// A lateral face of the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum SideFace {
    /// `b_i b_{i+1} a_apex`.
    BTriangle { edge: usize, apex: usize },
    /// `a_j a_{j+1} b_apex`.
    ATriangle { edge: usize, apex: usize },
}

impl SideFace {
    pub fn id(&self) -> FaceId {
        match *self {
            SideFace::BTriangle { edge, .. } => FaceId::BTriangle(edge),
            SideFace::ATriangle { edge, .. } => FaceId::ATriangle(edge),
        }
    }
}

/// The cyclic band of lateral triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub n: usize,
    pub m: usize,
    /// Side faces in counter-clockwise order, starting with `B_1`.
    pub faces: Vec<SideFace>,
    /// `b_apex[i]`: top vertex of `B_{i+1}`.
    pub b_apex: Vec<usize>,
    /// `a_apex[j]`: base vertex of `A_{j+1}`.
    pub a_apex: Vec<usize>,
    /// `fans[i]`: top edges of the A-triangles at `b_{i+1}`, ordered from the
    /// `B_i` side to the `B_{i+1}` side.
    pub fans: Vec<Vec<usize>>,
}

impl Band {
    /// Merges the two polygons by the direction of their outward edge normals.
    ///
    /// A base edge gets as apex the top vertex extreme along its outward
    /// normal, and vice versa; walking both normal sequences in angular order
    /// yields the faces in band order in `O(n + m)`.
    pub fn build(p: &Prismatoid, policy: &TolerancePolicy) -> Result<Band, ModelError> {
        let (n, m) = (p.n(), p.m());
        let base = p.base_xy();
        let top = p.top_xy();
        let normal = |poly: &[Point2], i: usize| {
            let d = poly[(i + 1) % poly.len()] - poly[i];
            Point2::new(d.y, -d.x).normalized().expect("validated edge")
        };
        let base_n: Vec<Point2> = (0..n).map(|i| normal(&base, i)).collect();
        let top_n: Vec<Point2> = (0..m).map(|j| normal(&top, j)).collect();
        let reference = base_n[0];
        let rel = |v: Point2| crate::geom::ccw_angle(reference, v);
        for (i, nb) in base_n.iter().enumerate() {
            for (j, nt) in top_n.iter().enumerate() {
                if nb.cross(*nt).abs() <= policy.eps_predicate && nb.dot(*nt) > 0.0 {
                    return Err(ModelError::NonSimplicialSideFace { base_edge: i + 1, top_edge: j + 1 });
                }
            }
        }
        // first top edge counter-clockwise from the first base normal
        let start = (0..m)
            .min_by(|&a, &b| rel(top_n[a]).total_cmp(&rel(top_n[b])))
            .expect("m >= 3");
        let mut faces = Vec::with_capacity(n + m);
        let mut b_apex = vec![usize::MAX; n];
        let mut a_apex = vec![usize::MAX; m];
        let mut fans = vec![Vec::new(); n];
        let (mut i, mut k) = (0usize, 0usize);
        let mut top_vertex = start;
        while i < n || k < m {
            let take_base = k == m || (i < n && rel(base_n[i]) < rel(top_n[(start + k) % m]));
            if take_base {
                faces.push(SideFace::BTriangle { edge: i, apex: top_vertex });
                b_apex[i] = top_vertex;
                i += 1;
            } else {
                let j = (start + k) % m;
                let apex = i % n;
                faces.push(SideFace::ATriangle { edge: j, apex });
                a_apex[j] = apex;
                fans[apex].push(j);
                top_vertex = (j + 1) % m;
                k += 1;
            }
        }
        let band = Band { n, m, faces, b_apex, a_apex, fans };
        band.check_structure()?;
        Ok(band)
    }

    fn check_structure(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Reconstruction(msg));
        if self.faces.len() != self.n + self.m {
            return fail(format!("{} side faces for n + m = {}", self.faces.len(), self.n + self.m));
        }
        if self.fans.iter().map(Vec::len).sum::<usize>() != self.m {
            return fail("fan sizes do not add up to m".into());
        }
        for i in 0..self.n {
            // the fan at b_i runs from the apex of B_{i-1} to the apex of B_i
            let mut cur = self.b_apex[(i + self.n - 1) % self.n];
            for &j in &self.fans[i] {
                if j != cur {
                    return fail(format!("fan at b_{} is not contiguous", i + 1));
                }
                cur = (j + 1) % self.m;
            }
            if cur != self.b_apex[i] {
                return fail(format!("fan at b_{} does not end at the apex of B_{}", i + 1, i + 1));
            }
        }
        Ok(())
    }

    pub fn fan_sizes(&self) -> Vec<usize> {
        self.fans.iter().map(Vec::len).collect()
    }

    /// Corner vertices of a side face: `(b_i, b_{i+1}, a)` or `(a_j, a_{j+1}, b)`.
    pub fn face_vertices(&self, f: &SideFace) -> [VertexId; 3] {
        match *f {
            SideFace::BTriangle { edge, apex } => {
                [VertexId::Base(edge), VertexId::Base((edge + 1) % self.n), VertexId::Top(apex)]
            }
            SideFace::ATriangle { edge, apex } => {
                [VertexId::Top(edge), VertexId::Top((edge + 1) % self.m), VertexId::Base(apex)]
            }
        }
    }

    pub fn side_face(&self, id: FaceId) -> Option<SideFace> {
        match id {
            FaceId::BTriangle(i) if i < self.n => Some(SideFace::BTriangle { edge: i, apex: self.b_apex[i] }),
            FaceId::ATriangle(j) if j < self.m => Some(SideFace::ATriangle { edge: j, apex: self.a_apex[j] }),
            _ => None,
        }
    }

    /// Interior angles of each side face at its three corners, in band order.
    pub fn face_angles(&self, p: &Prismatoid) -> Vec<[f64; 3]> {
        self.faces
            .iter()
            .map(|f| {
                let [u, v, w] = self.face_vertices(f).map(|x| p.point(x));
                [
                    angle_at(u, v, w).expect("validated face"),
                    angle_at(v, w, u).expect("validated face"),
                    angle_at(w, u, v).expect("validated face"),
                ]
            })
            .collect()
    }

    pub fn max_face_angle(&self, p: &Prismatoid) -> f64 {
        self.face_angles(p).iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn lateral_area(&self, p: &Prismatoid) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [u, v, w] = self.face_vertices(f).map(|x| p.point(x));
                triangle_area3(u, v, w)
            })
            .sum()
    }

    /// Checks every side-face angle against a right angle.
    ///
    /// In exact mode the test is the sign of the corner dot product and `eps`
    /// is ignored.
    pub fn nonobtuse_report(&self, p: &Prismatoid, eps: f64, policy: &TolerancePolicy) -> NonobtuseReport {
        let mut violations = Vec::new();
        for (f, angles) in self.faces.iter().zip(self.face_angles(p)) {
            let verts = self.face_vertices(f);
            for c in 0..3 {
                let obtuse = match policy.mode {
                    ArithmeticMode::Float => angles[c] > FRAC_PI_2 + eps,
                    ArithmeticMode::ExactRational => {
                        let [u, v, w] = [verts[c], verts[(c + 1) % 3], verts[(c + 2) % 3]].map(|x| p.point(x));
                        exact::corner_dot_sign(u, v, w) < 0
                    }
                };
                if obtuse {
                    violations.push(AngleViolation { face: f.id(), corner: verts[c], angle: angles[c] });
                }
            }
        }
        NonobtuseReport { nonobtuse: violations.is_empty(), violations }
    }

    /// Checks that each face's plane supports the hull: every other vertex
    /// lies strictly on the inner side.
    pub fn supports_hull(&self, p: &Prismatoid, policy: &TolerancePolicy) -> bool {
        let all: Vec<Point3> = p.top.iter().chain(&p.base).copied().collect();
        let scale = p.size();
        self.faces.iter().all(|f| {
            let vs = self.face_vertices(f);
            let [u, v, w] = vs.map(|x| p.point(x));
            let normal = (v - u).cross(w - u);
            let nn = normal.norm();
            let outward = if normal.dot(centroid3(&all) - u) > 0.0 { -1.0 } else { 1.0 };
            all.iter().all(|&x| {
                let on_face = [u, v, w].contains(&x);
                on_face || outward * normal.dot(x - u) / nn < -policy.eps_predicate * scale
            })
        })
    }
}

fn centroid3(points: &[Point3]) -> Point3 {
    points.iter().fold(Point3::default(), |a, &p| a + p) * (1.0 / points.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleViolation {
    pub face: FaceId,
    pub corner: VertexId,
    /// Radians.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonobtuseReport {
    pub nonobtuse: bool,
    pub violations: Vec<AngleViolation>,
}

/// Default obtuseness slack for a policy: none in exact mode.
pub fn default_obtuse_eps(policy: &TolerancePolicy) -> f64 {
    match policy.mode {
        ArithmeticMode::Float => 1e-9,
        ArithmeticMode::ExactRational => 0.0,
    }
}

/// Sum of the side-face angles and the base angle meeting at `b_i`; always below `2 pi`.
pub fn angle_sum_at_base_vertex(p: &Prismatoid, band: &Band, i: usize) -> f64 {
    let mut sum = p.base_angle(i);
    for (f, angles) in band.faces.iter().zip(band.face_angles(p)) {
        for (c, v) in band.face_vertices(f).iter().enumerate() {
            if *v == VertexId::Base(i) {
                sum += angles[c];
            }
        }
    }
    debug_assert!(sum < TAU + 1e-12 && sum > 0.0 && PI > 0.0);
    sum
}
