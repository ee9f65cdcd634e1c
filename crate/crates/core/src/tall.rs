//! The tallness bound and checks of its three supporting inequalities.
//!
//! With `P_A` the top perimeter, `Delta_B` the smallest turn angle of the
//! base and `d_AB` the diameter of the base together with the projected top,
//! a prismatoid is tall when `z >= (3 pi P_A + 4 d_AB) / (2 Delta_B)`. The
//! argument needs both `z >= 2 d_AB / (Delta_B l)` (B-triangles stay close to
//! perpendicular) and `z >= 3 pi P_A / (2 Delta_B (1 - l))` (fans stay narrow);
//! `l = 4 d_AB / (3 pi P_A + 4 d_AB)` makes both equal to the bound.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::geom::{angle_at, diameter, Point2, TolerancePolicy};
use crate::model::{Band, FaceId, Prismatoid, VertexId};
use crate::petal::{develop, fan_lateral_edges, Layout, PetalChoice, PetalError};
use crate::region::{ConvexRegion, HalfPlane, Ray2};

/// Turn angles below this make the bound meaningless.
const NEAR_STRAIGHT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TallReport {
    pub z: f64,
    pub perimeter_a: f64,
    /// `pi` minus the largest interior base angle.
    pub delta_b: f64,
    /// The top projected onto the base plane.
    pub a_proj: Vec<Point2>,
    pub d_ab: f64,
    pub bound: f64,
    pub is_tall: bool,
    pub ell: f64,
    /// Height needed by the B-triangle inequality.
    pub step1_height: f64,
    /// Height needed by the fan inequality.
    pub step2_height: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

pub fn perimeter(poly: &[Point2]) -> f64 {
    let k = poly.len();
    (0..k).map(|i| poly[i].dist(poly[(i + 1) % k])).sum()
}

pub fn tall_report(p: &Prismatoid) -> TallReport {
    let n = p.n();
    let a_proj = p.top_xy();
    let perimeter_a = perimeter(&a_proj);
    let max_angle = (0..n).map(|i| p.base_angle(i)).fold(0.0, f64::max);
    let delta_b = PI - max_angle;
    let all: Vec<Point2> = a_proj.iter().copied().chain(p.base_xy()).collect();
    let d_ab = diameter(&all);
    let bound = (3.0 * PI * perimeter_a + 4.0 * d_ab) / (2.0 * delta_b);
    let ell = 4.0 * d_ab / (3.0 * PI * perimeter_a + 4.0 * d_ab);
    let mut warnings = Vec::new();
    if delta_b < NEAR_STRAIGHT {
        warnings.push(format!("base is nearly straight at a vertex (turn angle {delta_b:e} rad); the bound is huge"));
    }
    TallReport {
        z: p.z,
        perimeter_a,
        delta_b,
        a_proj,
        d_ab,
        bound,
        is_tall: p.z >= bound,
        ell,
        step1_height: 2.0 * d_ab / (delta_b * ell),
        step2_height: 3.0 * PI * perimeter_a / (2.0 * delta_b * (1.0 - ell)),
        warnings,
    }
}

/// One inequality evaluation; `slack = rhs - lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64) -> Self {
        Inequality { lhs, rhs, slack: rhs - lhs }
    }

    pub fn holds(&self) -> bool {
        self.slack >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum Check {
    NotApplicable,
    Evaluated(Inequality),
}

impl Check {
    pub fn holds(&self) -> bool {
        match self {
            Check::NotApplicable => true,
            Check::Evaluated(q) => q.holds(),
        }
    }

    pub fn slack(&self) -> Option<f64> {
        match self {
            Check::NotApplicable => None,
            Check::Evaluated(q) => Some(q.slack),
        }
    }
}

/// Base angle of `B_{edge+1}` at one of its two base corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Step1 {
    pub edge: usize,
    pub corner: VertexId,
    pub check: Check,
}

/// `angle(b_{i+1} b_i a_j) <= pi/2 + (Delta_B / 2) l` at both base corners of
/// `B_{edge+1}`, where `a_j` is its apex.
pub fn step1_check(p: &Prismatoid, band: &Band, edge: usize, ell: f64) -> [Step1; 2] {
    let r = tall_report(p);
    let n = p.n();
    let applicable = p.z >= 2.0 * r.d_ab / (r.delta_b * ell);
    let apex = p.point(VertexId::Top(band.b_apex[edge]));
    let (u, v) = (edge, (edge + 1) % n);
    let rhs = FRAC_PI_2 + r.delta_b / 2.0 * ell;
    [(u, v), (v, u)].map(|(at, other)| {
        let lhs = angle_at(p.base[at], p.base[other], apex).expect("validated face");
        Step1 {
            edge,
            corner: VertexId::Base(at),
            check: if applicable { Check::Evaluated(Inequality::new(lhs, rhs)) } else { Check::NotApplicable },
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Step2 {
    pub vertex: usize,
    /// Whole fan angle at `b_i` against `(Delta_B / 3)(1 - l)`. Any split of
    /// the fan opens at most this much on either side.
    pub aggregate: Check,
    /// Angle of each fan triangle at `b_i` against `(pi/2) |a_j a_{j+1}| / z`.
    pub per_edge: Vec<(usize, Inequality)>,
}

impl Step2 {
    pub fn holds(&self) -> bool {
        self.aggregate.holds() && self.per_edge.iter().all(|(_, q)| q.holds())
    }
}

pub fn step2_check(p: &Prismatoid, band: &Band, vertex: usize, ell: f64) -> Step2 {
    let r = tall_report(p);
    let b = p.base[vertex];
    let mut total = 0.0;
    let mut per_edge = Vec::new();
    for &j in &band.fans[vertex] {
        let (a0, a1) = (p.top[j], p.top[(j + 1) % p.m()]);
        let angle = angle_at(b, a0, a1).expect("validated face");
        total += angle;
        per_edge.push((j, Inequality::new(angle, FRAC_PI_2 * a0.dist(a1) / p.z)));
    }
    let applicable = p.z >= 3.0 * PI * r.perimeter_a / (2.0 * r.delta_b * (1.0 - ell));
    let aggregate = if applicable {
        Check::Evaluated(Inequality::new(total, r.delta_b / 3.0 * (1.0 - ell)))
    } else {
        Check::NotApplicable
    };
    Step2 { vertex, aggregate, per_edge }
}

/// Region outside base edge `b_i b_{i+1}` between the bisectors of the
/// exterior angles at its ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorRegion {
    pub edge: usize,
    pub m_start: Ray2,
    pub m_end: Ray2,
    pub region: ConvexRegion,
}

fn outward_normal(base: &[Point2], i: usize) -> Point2 {
    let d = base[(i + 1) % base.len()] - base[i];
    Point2::new(d.y, -d.x).normalized().expect("validated edge")
}

pub fn sector(p: &Prismatoid, edge: usize) -> SectorRegion {
    let base = p.base_xy();
    let n = base.len();
    let (i, k) = (edge, (edge + 1) % n);
    let bisector = |v: usize| {
        let m = outward_normal(&base, (v + n - 1) % n) + outward_normal(&base, v);
        Ray2::new(base[v], m).expect("strictly convex base")
    };
    let (ms, me) = (bisector(i), bisector(k));
    let region = ConvexRegion::new(vec![
        HalfPlane::left_of(base[k], base[i]).expect("edge"),
        HalfPlane::left_of(base[i], base[i] + ms.direction).expect("ray"),
        HalfPlane::left_of(base[k] + me.direction, base[k]).expect("ray"),
    ]);
    SectorRegion { edge, m_start: ms, m_end: me, region }
}

/// Edge `e` owns every face whose path to the base in the cut tree passes
/// through `B_e`.
pub fn petal_of(layout: &Layout, face: FaceId) -> Option<usize> {
    let mut cur = face;
    loop {
        if let FaceId::BTriangle(e) = cur {
            return Some(e);
        }
        cur = layout.face(cur)?.parent?;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Step3 {
    pub choice: String,
    /// Petal carrying the top.
    pub top_petal: usize,
    /// Lower bound on the distance from the top's attachment vertex to the
    /// nearest bisector ray, from the angle estimate.
    pub d_min: f64,
    /// Measured distance of the attachment vertex to that ray.
    pub distance: f64,
    pub half_perimeter: f64,
    /// Faces with a vertex outside the sector of their petal.
    pub escaped: Vec<FaceId>,
    pub holds: bool,
}

pub fn step3_check(p: &Prismatoid, band: &Band, choice: &PetalChoice, policy: &TolerancePolicy) -> Result<Step3, PetalError> {
    let r = tall_report(p);
    let layout = develop(p, band, choice, policy)?;
    let n = p.n();
    let tol = policy.eps_predicate * p.size();
    let sectors: Vec<SectorRegion> = (0..n).map(|e| sector(p, e)).collect();
    let mut escaped = Vec::new();
    for f in &layout.faces {
        let Some(e) = petal_of(&layout, f.id) else { continue };
        if f.points.iter().any(|&x| !sectors[e].region.contains(x, tol)) {
            escaped.push(f.id);
        }
    }

    // the top hangs off an A-triangle of the fan at b_v, which sits on petal e
    let carrier = FaceId::ATriangle(choice.top_edge);
    let e = petal_of(&layout, carrier).expect("carrier is attached");
    let v = band.a_apex[choice.top_edge];
    let other = if v == e { (e + 1) % n } else { e };
    let ray = if v == e { sectors[e].m_start } else { sectors[e].m_end };
    let top = layout.face(FaceId::Top).expect("top is placed");
    let carrier_face = layout.face(carrier).expect("carrier is placed");
    let bv = p.base[v].xy();
    let mut d_min = f64::INFINITY;
    let mut distance = f64::INFINITY;
    for a in [VertexId::Top(choice.top_edge), VertexId::Top((choice.top_edge + 1) % p.m())] {
        let placed = carrier_face.point_of(a).expect("hinge vertex");
        let turned = angle_at(bv, p.base[other].xy(), placed).expect("distinct points");
        d_min = d_min.min(bv.dist(placed) * (FRAC_PI_2 + r.delta_b / 2.0 - turned).sin());
        distance = distance.min(ray.distance_to(placed));
    }
    debug_assert!(top.points.len() == p.m());
    let half_perimeter = r.perimeter_a / 2.0;
    Ok(Step3 {
        choice: choice.to_string(),
        top_petal: e,
        d_min,
        distance,
        half_perimeter,
        holds: escaped.is_empty() && d_min >= half_perimeter,
        escaped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LemmaReport {
    pub step1: Vec<Step1>,
    pub step2: Vec<Step2>,
    pub step3: Vec<Step3>,
    pub all_hold: bool,
}

/// Runs all three checks; step 3 over every petal choice.
pub fn lemma_report(p: &Prismatoid, band: &Band, policy: &TolerancePolicy) -> Result<LemmaReport, PetalError> {
    let r = tall_report(p);
    let step1: Vec<Step1> = (0..p.n()).flat_map(|e| step1_check(p, band, e, r.ell)).collect();
    let step2: Vec<Step2> = (0..p.n()).map(|i| step2_check(p, band, i, r.ell)).collect();
    let space = crate::petal::ChoiceSpace::new(band);
    let step3 = space
        .iter()
        .map(|c| step3_check(p, band, &c, policy))
        .collect::<Result<Vec<_>, _>>()?;
    let all_hold = step1.iter().all(|s| s.check.holds()) && step2.iter().all(Step2::holds) && step3.iter().all(|s| s.holds);
    Ok(LemmaReport { step1, step2, step3, all_hold })
}

/// Fan angle at `b_i` between consecutive lateral edges, in band order.
pub fn fan_angles(p: &Prismatoid, band: &Band, i: usize) -> Vec<f64> {
    let ends = fan_lateral_edges(band, i);
    ends.windows(2)
        .map(|w| angle_at(p.base[i], p.top[w[0]], p.top[w[1]]).expect("validated face"))
        .collect()
}
