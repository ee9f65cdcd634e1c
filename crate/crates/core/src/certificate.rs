//! Wedges `V_i`, diamonds `D_i`, and the region certificate.
//!
//! Around base vertex `b_i` the two B-triangles on either side are unfolded
//! about their base edges, which puts the apex of `B_{i-1}` at `a_j` and the
//! apex of `B_i` at `a_k`. Everything else hanging off `b_i` in any petal
//! unfolding (the fan and possibly the top) lies in the wedge swept
//! counter-clockwise from `b_i a_j` to `b_i a_k`. Fan triangles stay inside
//! the diamond cut from the wedge by the perpendiculars at `a_j` and `a_k`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;
use crate::geom::{angle_at, ccw_angle, ArithmeticMode, Point2, TolerancePolicy};
use crate::model::{Band, Prismatoid};
use crate::petal::{develop_b_triangle, developed_b_apexes, PetalError};
use crate::region::{ConvexRegion, Crossing, HalfPlane, Intersection, Ray2, Region};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertificateError {
    #[error("degenerate wedge at b_{0}: b_i, a_j and a_k are collinear after development")]
    DegenerateWedge(usize),
    #[error("base not rectangle")]
    BaseNotRectangle,
    #[error(transparent)]
    Petal(#[from] PetalError),
}

/// Developed neighbourhood of one base vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PetalFrame {
    /// 0-based base vertex index.
    pub i: usize,
    pub b: Point2,
    /// Developed apex of the preceding B-triangle.
    pub aj: Point2,
    /// Developed apex of the following B-triangle.
    pub ak: Point2,
    /// Opening of the wedge, in `(0, 2 pi)`.
    pub theta: f64,
}

impl PetalFrame {
    /// Wedge boundary rays `b -> a_j` and `b -> a_k`.
    pub fn rays(&self) -> (Ray2, Ray2) {
        (
            Ray2::through(self.b, self.aj).expect("developed apex differs from b"),
            Ray2::through(self.b, self.ak).expect("developed apex differs from b"),
        )
    }

    /// Rays perpendicular to `b a_j` at `a_j` and to `b a_k` at `a_k`, turned into the wedge.
    pub fn perpendicular_rays(&self) -> (Ray2, Ray2) {
        let (rj, rk) = self.rays();
        (
            Ray2 { origin: self.aj, direction: rj.direction.perp() },
            Ray2 { origin: self.ak, direction: -rk.direction.perp() },
        )
    }

    /// `V_i` as one convex piece, or two when wider than a half-turn.
    pub fn wedge(&self) -> Region {
        let (b, aj, ak) = (self.b, self.aj, self.ak);
        let from_j = HalfPlane::left_of(b, aj).expect("nonzero ray");
        let to_k = HalfPlane::left_of(ak, b).expect("nonzero ray");
        if self.theta <= PI {
            return ConvexRegion::new(vec![from_j, to_k]).into();
        }
        let mid = b + (aj - b).normalized().expect("nonzero ray").rotated(self.theta / 2.0);
        Region {
            pieces: vec![
                ConvexRegion::new(vec![from_j, HalfPlane::left_of(mid, b).expect("nonzero").as_split()]),
                ConvexRegion::new(vec![HalfPlane::left_of(b, mid).expect("nonzero").as_split(), to_k]),
            ],
        }
    }

    /// `D_i`: the wedge cut by the perpendiculars at `a_j` and `a_k`.
    pub fn diamond(&self) -> Region {
        let cut_j = HalfPlane::behind(self.aj, self.aj - self.b).expect("nonzero ray");
        let cut_k = HalfPlane::behind(self.ak, self.ak - self.b).expect("nonzero ray");
        let mut region = self.wedge();
        for piece in &mut region.pieces {
            piece.halfplanes.extend([cut_j, cut_k]);
        }
        region
    }
}

pub fn frames(p: &Prismatoid, band: &Band, policy: &TolerancePolicy) -> Result<Vec<PetalFrame>, CertificateError> {
    let apexes = developed_b_apexes(p, band, policy)?;
    let n = p.n();
    let base = p.base_xy();
    (0..n)
        .map(|i| {
            let (b, aj, ak) = (base[i], apexes[(i + n - 1) % n], apexes[i]);
            let theta = ccw_angle(aj - b, ak - b);
            if theta <= policy.eps_predicate || theta >= 2.0 * PI - policy.eps_predicate {
                return Err(CertificateError::DegenerateWedge(i + 1));
            }
            Ok(PetalFrame { i, b, aj, ak, theta })
        })
        .collect()
}

pub fn wedge(p: &Prismatoid, band: &Band, i: usize, policy: &TolerancePolicy) -> Result<Region, CertificateError> {
    Ok(frames(p, band, policy)?[i].wedge())
}

pub fn diamond(p: &Prismatoid, band: &Band, i: usize, policy: &TolerancePolicy) -> Result<Region, CertificateError> {
    Ok(frames(p, band, policy)?[i].diamond())
}

/// What a wedge ran into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "camelCase")]
pub enum Obstacle {
    BTriangle(usize),
    Diamond(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateFailure {
    /// 0-based index of the wedge.
    pub wedge: usize,
    pub obstacle: Obstacle,
    /// Interior point of both regions.
    pub witness: Point2,
    /// Boundary crossings of the two regions with the opening angle there.
    pub crossings: Vec<Crossing>,
}

impl CertificateFailure {
    pub fn penetration_angle(&self) -> f64 {
        self.crossings.iter().map(|c| c.angle).fold(0.0, f64::max)
    }
}

impl fmt::Display for CertificateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.obstacle {
            Obstacle::BTriangle(j) => write!(f, "(V_{}, B_{})", self.wedge + 1, j + 1),
            Obstacle::Diamond(j) => write!(f, "(V_{}, D_{})", self.wedge + 1, j + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificateReport {
    pub holds: bool,
    /// Every failing pair, in checking order; the first is the reported witness.
    pub failures: Vec<CertificateFailure>,
    /// Largest crossing angle over all failing pairs (radians).
    pub max_penetration_angle: f64,
}

impl CertificateReport {
    pub fn witness(&self) -> Option<&CertificateFailure> {
        self.failures.first()
    }
}

/// Checks that every wedge `V_i` avoids every developed B-triangle and
/// every diamond `D_j` with `j != i`. Wedges are taken in order; for each,
/// B-triangles are checked before diamonds.
pub fn orourke_certificate(p: &Prismatoid, band: &Band, policy: &TolerancePolicy) -> Result<CertificateReport, CertificateError> {
    let fr = frames(p, band, policy)?;
    let n = p.n();
    let triangles: Vec<Region> = (0..n)
        .map(|j| {
            let t = develop_b_triangle(p, band, j, policy)?;
            Ok(ConvexRegion::from_polygon(&t.points).map_err(PetalError::from)?.into())
        })
        .collect::<Result<_, CertificateError>>()?;
    let diamonds: Vec<Region> = fr.iter().map(PetalFrame::diamond).collect();
    let mut failures = Vec::new();
    for (i, f) in fr.iter().enumerate() {
        let v = f.wedge();
        let obstacles = (0..n)
            .map(|j| (Obstacle::BTriangle(j), &triangles[j]))
            .chain((0..n).filter(|&j| j != i).map(|j| (Obstacle::Diamond(j), &diamonds[j])));
        for (obstacle, region) in obstacles {
            if let Intersection::Overlapping { witness } = v.intersects(region, policy) {
                failures.push(CertificateFailure { wedge: i, obstacle, witness, crossings: v.crossings(region, policy) });
            }
        }
    }
    Ok(CertificateReport {
        holds: failures.is_empty(),
        max_penetration_angle: failures.iter().map(CertificateFailure::penetration_angle).fold(0.0, f64::max),
        failures,
    })
}

/// Signed angular overlap of the unbounded directions of `V_i` and `D_j`:
/// positive when the two regions share a sliver reaching to infinity,
/// negative by the angular gap otherwise. Smooth in the coordinates, so it
/// serves as a margin for keeping such a failure alive.
pub fn pair_margin(fr: &[PetalFrame], i: usize, j: usize) -> f64 {
    fr[i].wedge().recession_overlap(&fr[j].diamond()).unwrap_or(-PI)
}

/// Sub-claim of the rectangle argument that failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SViolation {
    /// Segment from the opposite vertex to its `a_j`.
    SegmentAj,
    /// Segment from the opposite vertex to its `a_k`.
    SegmentAk,
    RayAtAj,
    RayAtAk,
    /// `V_i` meets `S` beyond `b_i`.
    Wedge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SContainment {
    pub wedge: usize,
    pub diamond: usize,
    pub violations: Vec<SViolation>,
}

impl SContainment {
    pub fn contained(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn is_rectangle(p: &Prismatoid, policy: &TolerancePolicy) -> bool {
    let n = p.n();
    if n != 4 {
        return false;
    }
    (0..n).all(|i| {
        let (prev, v, next) = (p.base[(i + n - 1) % n], p.base[i], p.base[(i + 1) % n]);
        match policy.mode {
            ArithmeticMode::ExactRational => exact::corner_dot_sign(v, prev, next) == 0,
            ArithmeticMode::Float => {
                (angle_at(v.xy(), prev.xy(), next.xy()).expect("validated base") - FRAC_PI_2).abs() <= policy.eps_predicate
            }
        }
    })
}

/// The rectangle-base argument for the wedge at `b_i` and the diamond at the
/// opposite corner `b_{i+2}`: with `S` the quarter-plane at `b_i` spanned by
/// the two base edges, the diamond's segments and perpendicular rays stay in
/// `S`, and the wedge meets `S` only at `b_i`.
pub fn rectangle_s_containment(p: &Prismatoid, band: &Band, i: usize, policy: &TolerancePolicy) -> Result<SContainment, CertificateError> {
    if !is_rectangle(p, policy) {
        return Err(CertificateError::BaseNotRectangle);
    }
    let fr = frames(p, band, policy)?;
    let n = p.n();
    let k = (i + 2) % n;
    let base = p.base_xy();
    let b = base[i];
    let (e1, e2) = (base[(i + 1) % n] - b, base[(i + n - 1) % n] - b);
    let s = ConvexRegion::new(vec![
        HalfPlane::behind(b, -e1).expect("edge"),
        HalfPlane::behind(b, -e2).expect("edge"),
    ]);
    let size = p.size();
    let tol = policy.eps_predicate * size;
    let in_s = |x: Point2| s.contains(x, tol);
    let dir_in_s = |d: Point2| d.dot(e1) >= -policy.eps_predicate * e1.norm() && d.dot(e2) >= -policy.eps_predicate * e2.norm();
    let d = &fr[k];
    let mut violations = Vec::new();
    if !(in_s(d.b) && in_s(d.aj)) {
        violations.push(SViolation::SegmentAj);
    }
    if !(in_s(d.b) && in_s(d.ak)) {
        violations.push(SViolation::SegmentAk);
    }
    let (pj, pk) = d.perpendicular_rays();
    if !(in_s(pj.origin) && dir_in_s(pj.direction)) {
        violations.push(SViolation::RayAtAj);
    }
    if !(in_s(pk.origin) && dir_in_s(pk.direction)) {
        violations.push(SViolation::RayAtAk);
    }
    let v = fr[i].wedge();
    let s_region: Region = s.into();
    let apart = !v.intersects(&s_region, policy).is_overlapping() && v.recession_overlap(&s_region).is_some_and(|o| o < 0.0);
    if !apart {
        violations.push(SViolation::Wedge);
    }
    Ok(SContainment { wedge: i, diamond: k, violations })
}
