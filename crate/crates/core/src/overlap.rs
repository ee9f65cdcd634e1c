//! Interior-overlap detection between the placed faces of a layout.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{angle_at, centroid, signed_area, Point2, TolerancePolicy};
use crate::model::FaceId;
use crate::petal::Layout;
use crate::region::{clip_polygon, HalfPlane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapWitness {
    pub faces: (FaceId, FaceId),
    /// Strictly inside both faces.
    pub point: Point2,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapReport {
    pub overlapping: bool,
    pub witnesses: Vec<OverlapWitness>,
    /// Largest angle of the common region at a crossing of two face
    /// boundaries, over all overlapping pairs (radians, 0 when none).
    pub max_penetration_angle: f64,
}

/// Result of comparing two convex polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonOverlap {
    pub point: Point2,
    pub area: f64,
    pub crossing_angle: f64,
}

fn diameter_sq(poly: &[Point2]) -> f64 {
    poly.iter()
        .flat_map(|p| poly.iter().map(move |q| (*p - *q).dot(*p - *q)))
        .fold(0.0, f64::max)
}

/// Separating-axis test on both edge-normal sets.
///
/// Returns the smallest overlap of the two projections over all axes; it is
/// at most zero exactly when some axis separates the polygons or they only
/// touch.
pub fn min_axis_overlap(a: &[Point2], b: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for poly in [a, b] {
        let k = poly.len();
        for i in 0..k {
            let Some(axis) = (poly[(i + 1) % k] - poly[i]).perp().normalized() else { continue };
            let range = |p: &[Point2]| {
                p.iter()
                    .map(|q| q.dot(axis))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            };
            let ((alo, ahi), (blo, bhi)) = (range(a), range(b));
            best = best.min(ahi.min(bhi) - alo.max(blo));
        }
    }
    best
}

/// Interior overlap of two counter-clockwise convex polygons.
pub fn convex_overlap(a: &[Point2], b: &[Point2], policy: &TolerancePolicy) -> Option<PolygonOverlap> {
    let size_sq = diameter_sq(a).max(diameter_sq(b));
    let size = size_sq.sqrt();
    if min_axis_overlap(a, b) <= policy.eps_predicate * size {
        return None;
    }
    let mut clipped = a.to_vec();
    let k = b.len();
    for i in 0..k {
        let Ok(h) = HalfPlane::left_of(b[i], b[(i + 1) % k]) else { continue };
        clipped = clip_polygon(&clipped, &h);
        if clipped.len() < 3 {
            return None;
        }
    }
    let area = signed_area(&clipped);
    if area <= policy.eps_area * size_sq {
        return None;
    }
    let near = |p: Point2, poly: &[Point2]| poly.iter().any(|q| q.dist(p) <= 1e-12 * size);
    let c = clipped.len();
    let crossing_angle = (0..c)
        .filter(|&i| !near(clipped[i], a) && !near(clipped[i], b))
        .filter_map(|i| angle_at(clipped[i], clipped[(i + c - 1) % c], clipped[(i + 1) % c]).ok())
        .fold(0.0, f64::max);
    Some(PolygonOverlap { point: centroid_of_area(&clipped), area, crossing_angle })
}

/// Area centroid; interior for any convex polygon of positive area.
fn centroid_of_area(poly: &[Point2]) -> Point2 {
    let a = signed_area(poly);
    if a == 0.0 {
        return centroid(poly);
    }
    let k = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..k {
        let (p, q) = (poly[i], poly[(i + 1) % k]);
        let w = p.cross(q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    Point2::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Compares every pair of placed faces. Faces meeting along a hinge or at a
/// point only touch and never count as overlapping.
pub fn check_overlap(layout: &Layout, policy: &TolerancePolicy) -> OverlapReport {
    let faces = &layout.faces;
    let pairs: Vec<(usize, usize)> = (0..faces.len()).flat_map(|i| (i + 1..faces.len()).map(move |j| (i, j))).collect();
    let hits: Vec<(OverlapWitness, f64)> = pairs
        .iter()
        .filter_map(|&(i, j)| {
            convex_overlap(&faces[i].points, &faces[j].points, policy).map(|o| {
                let w = OverlapWitness { faces: (faces[i].id, faces[j].id), point: o.point, area: o.area };
                (w, o.crossing_angle)
            })
        })
        .collect();
    OverlapReport {
        overlapping: !hits.is_empty(),
        max_penetration_angle: hits.iter().map(|h| h.1).fold(0.0, f64::max),
        witnesses: hits.into_iter().map(|h| h.0).collect(),
    }
}

/// Overlap reports for many layouts in parallel, in input order.
pub fn check_all(layouts: &[Layout], policy: &TolerancePolicy) -> Vec<OverlapReport> {
    layouts.par_iter().map(|l| check_overlap(l, policy)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::model::Band;
    use crate::petal::{all_layouts, ChoiceSpace};
    use proptest::prelude::*;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn square(x: f64, y: f64) -> Vec<Point2> {
        vec![
            Point2::new(x, y),
            Point2::new(x + 1.0, y),
            Point2::new(x + 1.0, y + 1.0),
            Point2::new(x, y + 1.0),
        ]
    }

    #[test]
    fn squares_sharing_an_edge_do_not_overlap() {
        assert_eq!(convex_overlap(&square(0.0, 0.0), &square(1.0, 0.0), &policy()), None);
        assert_eq!(convex_overlap(&square(0.0, 0.0), &square(1.0, 1.0), &policy()), None);
    }

    #[test]
    fn shifted_squares_overlap_by_half() {
        let o = convex_overlap(&square(0.0, 0.0), &square(0.5, 0.0), &policy()).unwrap();
        assert!((o.area - 0.5).abs() <= 1e-9);
        assert!(o.point.x > 0.5 && o.point.x < 1.0 && o.point.y > 0.0 && o.point.y < 1.0);
    }

    #[test]
    fn counterexample_layouts_do_not_overlap() {
        for p in [instances::pc(), instances::pcyc()] {
            let band = Band::build(&p, &policy()).unwrap();
            let space = ChoiceSpace::new(&band);
            for layout in all_layouts(&p, &band, &space, &policy()) {
                let report = check_overlap(&layout.unwrap(), &policy());
                assert!(!report.overlapping, "{:?}", report.witnesses);
            }
        }
    }

    proptest! {
        #[test]
        fn overlap_is_symmetric_and_rigid(
            dx in -1.5f64..1.5, dy in -1.5f64..1.5, angle in 0.0f64..6.3, tx in -5.0f64..5.0, ty in -5.0f64..5.0,
        ) {
            let a = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.2), Point2::new(0.3, 0.9)];
            let b: Vec<Point2> = a.iter().map(|p| Point2::new(-p.x + dx, -p.y + dy)).collect();
            let ab = convex_overlap(&a, &b, &policy());
            let ba = convex_overlap(&b, &a, &policy());
            prop_assert_eq!(ab.is_some(), ba.is_some());
            let moved = |poly: &[Point2]| poly.iter().map(|p| p.rotated(angle) + Point2::new(tx, ty)).collect::<Vec<_>>();
            let m = convex_overlap(&moved(&a), &moved(&b), &policy());
            if let (Some(x), Some(y)) = (&ab, &m) {
                prop_assert!((x.area - y.area).abs() < 1e-9);
            }
            if let Some(x) = ab {
                for poly in [&a, &b] {
                    for i in 0..3 {
                        prop_assert!((poly[(i + 1) % 3] - poly[i]).cross(x.point - poly[i]) > 0.0);
                    }
                }
            }
        }
    }
}
