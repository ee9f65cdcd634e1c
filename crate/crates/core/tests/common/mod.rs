//! Independent oracles and instance generators shared by the integration
//! tests.
#![allow(dead_code)]

use petal_core::geom::{convex_hull, triangle_area3};
use petal_core::model::Band;
use petal_core::{Point2, Point3, Prismatoid, TolerancePolicy};
use rand::Rng;

/// A lateral hull face found by brute force over point triples.
pub struct HullFace {
    /// Indices into `top ++ base`.
    pub vertices: [usize; 3],
    pub area: f64,
}

/// Lateral faces of the hull of `top` and `base`: every triple whose plane
/// has all points on one side and which is not horizontal.
pub fn brute_force_lateral_faces(p: &Prismatoid) -> Vec<HullFace> {
    let pts: Vec<Point3> = p.top.iter().chain(&p.base).copied().collect();
    let tol = 1e-9 * p.size() * p.size() * p.size();
    let mut faces = Vec::new();
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let nrm = (pts[j] - pts[i]).cross(pts[l] - pts[i]);
                if nrm.norm() <= 1e-12 * p.size() * p.size() || nrm.x.abs() + nrm.y.abs() <= 1e-12 * nrm.norm() {
                    continue;
                }
                let side: Vec<f64> = pts.iter().map(|q| nrm.dot(*q - pts[i])).collect();
                let supporting = side.iter().all(|&s| s <= tol) || side.iter().all(|&s| s >= -tol);
                if supporting {
                    faces.push(HullFace { vertices: [i, j, l], area: triangle_area3(pts[i], pts[j], pts[l]) });
                }
            }
        }
    }
    faces
}

/// Number of petal unfoldings counted directly: spanning trees of the face
/// adjacency graph that keep every base edge and exactly one top edge.
pub fn spanning_tree_oracle(p: &Prismatoid) -> u128 {
    let (n, m) = (p.n(), p.m());
    let faces = brute_force_lateral_faces(p);
    assert_eq!(faces.len(), n + m, "oracle expects a simplicial band");
    // nodes: 0 = base, 1 = top, 2.. lateral faces
    let is_top = |v: usize| v < m;
    let mut base_edges = Vec::new();
    let mut top_edges = Vec::new();
    let mut lateral = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let [a, b, c] = f.vertices;
        for (u, v) in [(a, b), (b, c), (a, c)] {
            match (is_top(u), is_top(v)) {
                (false, false) => base_edges.push((0, fi + 2)),
                (true, true) => top_edges.push((1, fi + 2)),
                _ => {
                    if let Some((gi, _)) = faces.iter().enumerate().skip(fi + 1).find(|(_, g)| g.vertices.contains(&u) && g.vertices.contains(&v)) {
                        lateral.push((fi + 2, gi + 2));
                    }
                }
            }
        }
    }
    assert_eq!((base_edges.len(), top_edges.len(), lateral.len()), (n, m, n + m));
    let nodes = n + m + 2;
    let mut count = 0u128;
    for mask in 0u64..(1 << lateral.len()) {
        if mask.count_ones() as usize != m {
            continue;
        }
        for t in &top_edges {
            let mut edges: Vec<(usize, usize)> = base_edges.clone();
            edges.push(*t);
            edges.extend((0..lateral.len()).filter(|k| mask >> k & 1 == 1).map(|k| lateral[k]));
            if is_tree(nodes, &edges) {
                count += 1;
            }
        }
    }
    count
}

fn is_tree(nodes: usize, edges: &[(usize, usize)]) -> bool {
    if edges.len() + 1 != nodes {
        return false;
    }
    let mut parent: Vec<usize> = (0..nodes).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Convex polygon with `k` vertices at sorted random angles on an ellipse.
pub fn random_convex<R: Rng>(rng: &mut R, k: usize, center: Point2, rx: f64, ry: f64) -> Vec<Point2> {
    loop {
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let pts: Vec<Point2> = angles.iter().map(|a| Point2::new(center.x + rx * a.cos(), center.y + ry * a.sin())).collect();
        let gaps_ok = (0..k).all(|i| {
            let next = if i + 1 < k { angles[i + 1] } else { angles[0] + std::f64::consts::TAU };
            next - angles[i] > 0.2
        });
        if gaps_ok && convex_hull(&pts).len() == k {
            return pts;
        }
    }
}

fn lift(poly: &[Point2], z: f64) -> Vec<Point3> {
    poly.iter().map(|q| Point3::new(q.x, q.y, z)).collect()
}

fn accept(top: &[Point2], base: &[Point2], z: f64) -> Option<(Prismatoid, Band)> {
    let policy = TolerancePolicy::default();
    let p = Prismatoid::validate(&lift(top, z), &lift(base, 0.0), &policy).ok()?;
    let band = Band::build(&p, &policy).ok()?;
    Some((p, band))
}

/// Rectangle base with a random top, rejection-sampled until every side face
/// is nonobtuse. Returns the instance and the number of rejected draws.
pub fn random_rectangle_instance<R: Rng>(rng: &mut R) -> (Prismatoid, Band, usize) {
    let mut rejected = 0;
    loop {
        let (w, h) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0));
        let base = [Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)];
        let m = rng.gen_range(3..=6);
        let center = Point2::new(rng.gen_range(0.25 * w..0.75 * w), rng.gen_range(0.25 * h..0.75 * h));
        let r = rng.gen_range(0.1..0.5) * w.min(h);
        let (rx, ry) = (r * rng.gen_range(0.6..1.0), r * rng.gen_range(0.6..1.0));
        let top = random_convex(rng, m, center, rx, ry);
        let z = rng.gen_range(0.2..3.0) * w.max(h);
        if let Some((p, band)) = accept(&top, &base, z) {
            if band.max_face_angle(&p) <= std::f64::consts::FRAC_PI_2 {
                return (p, band, rejected);
            }
        }
        rejected += 1;
    }
}

/// Random convex base and top, with the separation set to `factor` times
/// the tallness bound.
pub fn random_tall_instance<R: Rng>(rng: &mut R, factor: f64) -> (Prismatoid, Band) {
    loop {
        let n = rng.gen_range(3..=6);
        let m = rng.gen_range(3..=6);
        let (bx, by) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0));
        let base = random_convex(rng, n, Point2::new(0.0, 0.0), bx, by);
        let center = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (tx, ty) = (rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5));
        let top = random_convex(rng, m, center, tx, ty);
        let Some((p, _)) = accept(&top, &base, 1.0) else { continue };
        let bound = petal_core::tall::tall_report(&p).bound;
        if let Some(found) = accept(&top, &base, factor * bound) {
            return found;
        }
    }
}
