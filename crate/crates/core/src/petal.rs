//! Petal cut choices and their planar developments.
//!
//! A petal unfolding keeps every base edge and cuts all top edges but one.
//! Counting faces (`n + m + 2`) against the edges a spanning tree may keep
//! (`n + m + 1`) leaves exactly one cut lateral edge per fan, so a choice is
//! a split position in every fan plus the uncut top edge.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{develop_across_hinge, signed_area, GeomError, Point2, Side, TolerancePolicy};
use crate::model::{Band, FaceId, ModelError, Prismatoid, SideFace, VertexId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PetalError {
    #[error("choice/band mismatch: {0}")]
    ChoiceMismatch(String),
    #[error("invalid choice spec `{0}`: expected fanSplit=k1,...,kn;topEdge=j")]
    Syntax(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// One petal cut tree.
///
/// `fan_split[i]` fan triangles at `b_{i+1}` unfold with `B_i` (the
/// preceding B-triangle); the rest unfold with `B_{i+1}`. `top_edge` is the
/// 0-based index of the uncut top edge; text forms use 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PetalChoice {
    pub fan_split: Vec<usize>,
    pub top_edge: usize,
}

impl fmt::Display for PetalChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let splits: Vec<String> = self.fan_split.iter().map(usize::to_string).collect();
        write!(f, "fanSplit={};topEdge={}", splits.join(","), self.top_edge + 1)
    }
}

impl FromStr for PetalChoice {
    type Err = PetalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PetalError::Syntax(s.to_string());
        let (mut fan_split, mut top_edge) = (None, None);
        for part in s.split(';') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            match key.trim() {
                "fanSplit" => {
                    let v: Result<Vec<usize>, _> = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse())
                        .collect();
                    fan_split = Some(v.map_err(|_| bad())?);
                }
                "topEdge" => {
                    let j: usize = value.trim().parse().map_err(|_| bad())?;
                    top_edge = Some(j.checked_sub(1).ok_or_else(bad)?);
                }
                _ => return Err(bad()),
            }
        }
        Ok(PetalChoice {
            fan_split: fan_split.ok_or_else(bad)?,
            top_edge: top_edge.ok_or_else(bad)?,
        })
    }
}

/// All petal choices of a band, in lexicographic order of `fan_split` and
/// then `top_edge`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSpace {
    pub fan_sizes: Vec<usize>,
    pub m: usize,
}

impl ChoiceSpace {
    pub fn new(band: &Band) -> Self {
        ChoiceSpace { fan_sizes: band.fan_sizes(), m: band.m }
    }

    /// `m * prod(|fan_i| + 1)`; saturates at `u128::MAX`.
    pub fn count(&self) -> u128 {
        self.fan_sizes
            .iter()
            .fold(self.m as u128, |acc, &f| acc.saturating_mul(f as u128 + 1))
    }

    /// The choice at position `k` of the enumeration order.
    pub fn nth(&self, mut k: u128) -> Option<PetalChoice> {
        if k >= self.count() {
            return None;
        }
        let top_edge = (k % self.m as u128) as usize;
        k /= self.m as u128;
        let mut fan_split = vec![0; self.fan_sizes.len()];
        for (i, &f) in self.fan_sizes.iter().enumerate().rev() {
            let radix = f as u128 + 1;
            fan_split[i] = (k % radix) as usize;
            k /= radix;
        }
        Some(PetalChoice { fan_split, top_edge })
    }

    /// Position of `c` in the enumeration order.
    pub fn index_of(&self, c: &PetalChoice) -> Option<u128> {
        self.check(c).ok()?;
        let mut k = 0u128;
        for (&s, &f) in c.fan_split.iter().zip(&self.fan_sizes) {
            k = k * (f as u128 + 1) + s as u128;
        }
        Some(k * self.m as u128 + c.top_edge as u128)
    }

    pub fn check(&self, c: &PetalChoice) -> Result<(), PetalError> {
        if c.fan_split.len() != self.fan_sizes.len() {
            return Err(PetalError::ChoiceMismatch(format!(
                "{} fan splits for {} base vertices",
                c.fan_split.len(),
                self.fan_sizes.len()
            )));
        }
        for (i, (&s, &f)) in c.fan_split.iter().zip(&self.fan_sizes).enumerate() {
            if s > f {
                return Err(PetalError::ChoiceMismatch(format!("split {s} at b_{} exceeds fan size {f}", i + 1)));
            }
        }
        if c.top_edge >= self.m {
            return Err(PetalError::ChoiceMismatch(format!("top edge {} of {}", c.top_edge + 1, self.m)));
        }
        Ok(())
    }

    /// Streams every choice once, without materializing the list.
    pub fn iter(&self) -> ChoiceIter<'_> {
        ChoiceIter {
            space: self,
            next: Some(PetalChoice { fan_split: vec![0; self.fan_sizes.len()], top_edge: 0 }),
        }
    }

    /// A uniformly random choice.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PetalChoice {
        let k = rng.gen_range(0..self.count());
        self.nth(k).expect("index below count")
    }
}

pub struct ChoiceIter<'a> {
    space: &'a ChoiceSpace,
    next: Option<PetalChoice>,
}

impl Iterator for ChoiceIter<'_> {
    type Item = PetalChoice;

    fn next(&mut self) -> Option<PetalChoice> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        if succ.top_edge + 1 < self.space.m {
            succ.top_edge += 1;
            self.next = Some(succ);
        } else {
            succ.top_edge = 0;
            let mut i = succ.fan_split.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if succ.fan_split[i] < self.space.fan_sizes[i] {
                    succ.fan_split[i] += 1;
                    self.next = Some(succ);
                    break;
                }
                succ.fan_split[i] = 0;
            }
        }
        Some(current)
    }
}

/// Lateral edges around `b_{i+1}`: `e_0` is shared with the preceding
/// B-triangle, `e_f` with the following one. Returns the top-vertex ends.
pub fn fan_lateral_edges(band: &Band, i: usize) -> Vec<usize> {
    let mut ends = vec![band.b_apex[(i + band.n - 1) % band.n]];
    ends.extend(band.fans[i].iter().map(|&j| (j + 1) % band.m));
    ends
}

/// The faces kept together by a choice, as `(parent, child, hinge)` triples
/// in development order.
pub fn hinges(band: &Band, c: &PetalChoice) -> Result<Vec<(FaceId, FaceId, [VertexId; 2])>, PetalError> {
    ChoiceSpace::new(band).check(c)?;
    let (n, m) = (band.n, band.m);
    let mut out = Vec::with_capacity(n + m + 1);
    for i in 0..n {
        out.push((FaceId::Base, FaceId::BTriangle(i), [VertexId::Base(i), VertexId::Base((i + 1) % n)]));
    }
    for i in 0..n {
        let fan = &band.fans[i];
        let ends = fan_lateral_edges(band, i);
        let b = VertexId::Base(i);
        let k = c.fan_split[i];
        let mut parent = FaceId::BTriangle((i + n - 1) % n);
        for t in 0..k {
            let child = FaceId::ATriangle(fan[t]);
            out.push((parent, child, [b, VertexId::Top(ends[t])]));
            parent = child;
        }
        let mut parent = FaceId::BTriangle(i);
        for t in (k..fan.len()).rev() {
            let child = FaceId::ATriangle(fan[t]);
            out.push((parent, child, [b, VertexId::Top(ends[t + 1])]));
            parent = child;
        }
    }
    let j = c.top_edge;
    out.push((FaceId::ATriangle(j), FaceId::Top, [VertexId::Top(j), VertexId::Top((j + 1) % m)]));
    Ok(out)
}

/// Union-find check that the kept edges form a spanning tree of all
/// `n + m + 2` faces.
pub fn is_spanning_tree(band: &Band, kept: &[(FaceId, FaceId, [VertexId; 2])]) -> bool {
    let (n, m) = (band.n, band.m);
    let index = |f: FaceId| match f {
        FaceId::Base => 0,
        FaceId::Top => 1,
        FaceId::BTriangle(i) => 2 + i,
        FaceId::ATriangle(j) => 2 + n + j,
    };
    let mut parent: Vec<usize> = (0..n + m + 2).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    if kept.len() != n + m + 1 {
        return false;
    }
    for &(a, b, _) in kept {
        let (ra, rb) = (find(&mut parent, index(a)), find(&mut parent, index(b)));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedFace {
    pub id: FaceId,
    /// Counter-clockwise in the plane.
    pub vertices: Vec<VertexId>,
    pub points: Vec<Point2>,
    pub parent: Option<FaceId>,
    pub hinge: Option<[VertexId; 2]>,
}

impl PlacedFace {
    pub fn point_of(&self, v: VertexId) -> Option<Point2> {
        self.vertices.iter().position(|&w| w == v).map(|k| self.points[k])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub choice: PetalChoice,
    pub faces: Vec<PlacedFace>,
}

impl Layout {
    pub fn face(&self, id: FaceId) -> Option<&PlacedFace> {
        self.faces.iter().find(|f| f.id == id)
    }

    pub fn area(&self) -> f64 {
        self.faces.iter().map(PlacedFace::area).sum()
    }

    /// Largest relative deviation of a placed edge length from its spatial length.
    pub fn max_edge_error(&self, p: &Prismatoid) -> f64 {
        let mut worst = 0.0f64;
        for f in &self.faces {
            let k = f.vertices.len();
            for a in 0..k {
                for b in a + 1..k {
                    let spatial = p.point(f.vertices[a]).dist(p.point(f.vertices[b]));
                    let planar = f.points[a].dist(f.points[b]);
                    worst = worst.max((spatial - planar).abs() / spatial);
                }
            }
        }
        worst
    }
}

fn place(
    p: &Prismatoid,
    parent: &PlacedFace,
    hinge: [VertexId; 2],
    child: FaceId,
    verts: Vec<VertexId>,
    policy: &TolerancePolicy,
) -> Result<PlacedFace, PetalError> {
    let [h0, h1] = hinge;
    let missing = |v: VertexId| PetalError::ChoiceMismatch(format!("hinge vertex {v} not on {}", parent.id));
    let (q0, q1) = (parent.point_of(h0).ok_or_else(|| missing(h0))?, parent.point_of(h1).ok_or_else(|| missing(h1))?);
    let other = parent
        .vertices
        .iter()
        .zip(&parent.points)
        .find(|(v, _)| **v != h0 && **v != h1)
        .map(|(_, &pt)| pt)
        .expect("faces have at least three vertices");
    let side = Side::of(q0, q1, other).ok_or(GeomError::DegenerateFace)?.opposite();
    let mut points = Vec::with_capacity(verts.len());
    for &v in &verts {
        let pt = if v == h0 {
            q0
        } else if v == h1 {
            q1
        } else {
            develop_across_hinge(p.point(h0), p.point(h1), p.point(v), q0, q1, side, policy)?
        };
        points.push(pt);
    }
    let mut face = PlacedFace { id: child, vertices: verts, points, parent: Some(parent.id), hinge: Some(hinge) };
    orient_ccw(&mut face);
    Ok(face)
}

fn orient_ccw(f: &mut PlacedFace) {
    if signed_area(&f.points) < 0.0 {
        f.points.reverse();
        f.vertices.reverse();
    }
}

fn face_vertices(p: &Prismatoid, band: &Band, id: FaceId) -> Vec<VertexId> {
    match id {
        FaceId::Base => (0..p.n()).map(VertexId::Base).collect(),
        FaceId::Top => (0..p.m()).map(VertexId::Top).collect(),
        side => band.face_vertices(&band.side_face(side).expect("face of this band")).to_vec(),
    }
}

pub fn base_face(p: &Prismatoid) -> PlacedFace {
    PlacedFace {
        id: FaceId::Base,
        vertices: (0..p.n()).map(VertexId::Base).collect(),
        points: p.base_xy(),
        parent: None,
        hinge: None,
    }
}

/// `B_{i+1}` unfolded outward across its base edge.
pub fn develop_b_triangle(p: &Prismatoid, band: &Band, i: usize, policy: &TolerancePolicy) -> Result<PlacedFace, PetalError> {
    let n = p.n();
    let f = SideFace::BTriangle { edge: i, apex: band.b_apex[i] };
    place(
        p,
        &base_face(p),
        [VertexId::Base(i), VertexId::Base((i + 1) % n)],
        f.id(),
        band.face_vertices(&f).to_vec(),
        policy,
    )
}

/// Planar image of the apex of every B-triangle; the same in all petal layouts.
pub fn developed_b_apexes(p: &Prismatoid, band: &Band, policy: &TolerancePolicy) -> Result<Vec<Point2>, PetalError> {
    (0..p.n())
        .map(|i| {
            let t = develop_b_triangle(p, band, i, policy)?;
            Ok(t.point_of(VertexId::Top(band.b_apex[i])).expect("apex on its face"))
        })
        .collect()
}

/// Develops the petal unfolding selected by `c`. The base keeps its
/// coordinates; every other face hangs off its parent in the cut tree.
pub fn develop(p: &Prismatoid, band: &Band, c: &PetalChoice, policy: &TolerancePolicy) -> Result<Layout, PetalError> {
    if band.n != p.n() || band.m != p.m() {
        return Err(PetalError::ChoiceMismatch("band built for another prismatoid".into()));
    }
    let tree = hinges(band, c)?;
    let mut faces = vec![base_face(p)];
    for (parent, child, hinge) in tree {
        let parent_face = faces.iter().find(|f| f.id == parent).expect("parents are placed first").clone();
        let placed = place(p, &parent_face, hinge, child, face_vertices(p, band, child), policy)?;
        faces.push(placed);
    }
    Ok(Layout { choice: c.clone(), faces })
}

/// Every petal layout, streamed in enumeration order.
pub fn all_layouts<'a>(
    p: &'a Prismatoid,
    band: &'a Band,
    space: &'a ChoiceSpace,
    policy: &'a TolerancePolicy,
) -> impl Iterator<Item = Result<Layout, PetalError>> + 'a {
    space.iter().map(move |c| develop(p, band, &c, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;
    use crate::instances;
    use proptest::prelude::*;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn choice_text_round_trip() {
        let c: PetalChoice = "fanSplit=1,0,2,0;topEdge=3".parse().unwrap();
        assert_eq!(c, PetalChoice { fan_split: vec![1, 0, 2, 0], top_edge: 2 });
        assert_eq!(c.to_string(), "fanSplit=1,0,2,0;topEdge=3");
        assert!("fanSplit=1;topEdge=0".parse::<PetalChoice>().is_err());
        assert!("topEdge=1".parse::<PetalChoice>().is_err());
        let empty: PetalChoice = "fanSplit=;topEdge=1".parse().unwrap();
        assert!(empty.fan_split.is_empty());
    }

    #[test]
    fn three_fans_of_one() {
        let space = ChoiceSpace { fan_sizes: vec![1, 1, 1], m: 3 };
        assert_eq!(space.count(), 24);
        let all: Vec<PetalChoice> = space.iter().collect();
        assert_eq!(all.len(), 24);
        for (k, c) in all.iter().enumerate() {
            assert_eq!(space.nth(k as u128).as_ref(), Some(c));
            assert_eq!(space.index_of(c), Some(k as u128));
        }
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
    }

    #[test]
    fn counterexample_choices_are_trees() {
        let p = instances::pc();
        let band = Band::build(&p, &policy()).unwrap();
        let space = ChoiceSpace::new(&band);
        assert_eq!(space.count(), 3 * band.fan_sizes().iter().map(|&f| f as u128 + 1).product::<u128>());
        for c in space.iter() {
            assert!(is_spanning_tree(&band, &hinges(&band, &c).unwrap()));
        }
    }

    #[test]
    fn mismatched_choice_is_rejected() {
        let p = instances::pc();
        let band = Band::build(&p, &policy()).unwrap();
        let bad = PetalChoice { fan_split: vec![0, 0], top_edge: 0 };
        assert!(matches!(develop(&p, &band, &bad, &policy()), Err(PetalError::ChoiceMismatch(_))));
        let bad = PetalChoice { fan_split: vec![0; 4], top_edge: 3 };
        assert!(matches!(develop(&p, &band, &bad, &policy()), Err(PetalError::ChoiceMismatch(_))));
    }

    #[test]
    fn single_b_triangle_develops_below_its_edge() {
        // base edge (0,0)-(2,0) with the base interior above; apex (1,1,1)
        let base = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0), Point3::new(1.0, 3.0, 0.0)];
        let top = vec![Point3::new(1.0, 1.0, 1.0), Point3::new(1.2, 1.3, 1.0), Point3::new(0.8, 1.3, 1.0)];
        let p = Prismatoid::validate(&top, &base, &policy()).unwrap();
        let band = Band::build(&p, &policy()).unwrap();
        assert_eq!(band.b_apex[0], 0);
        let apexes = developed_b_apexes(&p, &band, &policy()).unwrap();
        assert!(apexes[0].dist(Point2::new(1.0, -2f64.sqrt())) < 1e-12);
    }

    #[test]
    fn layouts_are_isometric_and_area_preserving() {
        for p in [instances::pc(), instances::pcyc(), instances::square_antiprismoid(), instances::tall_square()] {
            let band = Band::build(&p, &policy()).unwrap();
            let space = ChoiceSpace::new(&band);
            let top_area = signed_area(&p.top_xy());
            let total = signed_area(&p.base_xy()) + band.lateral_area(&p) + top_area;
            for layout in all_layouts(&p, &band, &space, &policy()) {
                let layout = layout.unwrap();
                assert_eq!(layout.faces.len(), p.n() + p.m() + 2);
                assert!(layout.max_edge_error(&p) <= 1e-9);
                assert!((layout.area() - total).abs() <= 1e-8 * total);
                assert_eq!(layout.face(FaceId::Base).unwrap().points, p.base_xy());
                for f in &layout.faces {
                    let (Some(parent), Some([h0, h1])) = (f.parent, f.hinge) else { continue };
                    let parent = layout.face(parent).unwrap();
                    let (p0, p1) = (parent.point_of(h0).unwrap(), parent.point_of(h1).unwrap());
                    assert_eq!((f.point_of(h0).unwrap(), f.point_of(h1).unwrap()), (p0, p1));
                    let side_of = |face: &PlacedFace| {
                        let c = crate::geom::centroid(&face.points);
                        (p1 - p0).cross(c - p0).signum()
                    };
                    assert_eq!(side_of(f), -side_of(parent));
                }
            }
        }
    }

    #[test]
    fn developed_angle_sum_at_base_vertices() {
        let p = instances::pc();
        let band = Band::build(&p, &policy()).unwrap();
        let space = ChoiceSpace::new(&band);
        let angles = band.face_angles(&p);
        for layout in all_layouts(&p, &band, &space, &policy()) {
            let layout = layout.unwrap();
            for i in 0..p.n() {
                let b = VertexId::Base(i);
                let mut planar = 0.0;
                let mut spatial = 0.0;
                for f in &layout.faces {
                    let Some(k) = f.vertices.iter().position(|&v| v == b) else { continue };
                    let len = f.vertices.len();
                    let (prev, next) = (f.points[(k + len - 1) % len], f.points[(k + 1) % len]);
                    planar += crate::geom::angle_at(f.points[k], prev, next).unwrap();
                    spatial += match f.id {
                        FaceId::Base => p.base_angle(i),
                        id => {
                            let pos = band.faces.iter().position(|s| s.id() == id).unwrap();
                            let c = band.face_vertices(&band.faces[pos]).iter().position(|&v| v == b).unwrap();
                            angles[pos][c]
                        }
                    };
                }
                assert!((planar - spatial).abs() < 1e-9);
                assert!(planar < std::f64::consts::TAU);
            }
        }
    }

    #[test]
    fn mirror_image_mirrors_layouts() {
        let p = instances::pc();
        let mirror = |q: &Point3| Point3::new(q.x, -q.y, q.z);
        let m = Prismatoid::validate(
            &p.top.iter().map(mirror).collect::<Vec<_>>(),
            &p.base.iter().map(mirror).collect::<Vec<_>>(),
            &policy(),
        )
        .unwrap();
        let (bp, bm) = (Band::build(&p, &policy()).unwrap(), Band::build(&m, &policy()).unwrap());
        // the mirror reverses orientation: b_1 stays and the rest are relabelled in reverse
        let sp = ChoiceSpace::new(&bp);
        let mut mirrored_area = 0.0;
        let mut area = 0.0;
        for (lp, lm) in all_layouts(&p, &bp, &sp, &policy()).zip(all_layouts(&m, &bm, &ChoiceSpace::new(&bm), &policy())) {
            area += lp.unwrap().area();
            mirrored_area += lm.unwrap().area();
        }
        assert!((area - mirrored_area).abs() < 1e-9 * area);
        // every vertex of every layout of p appears reflected in some layout of m
        let reflect = |q: Point2| Point2::new(q.x, -q.y);
        let pts_m: Vec<Point2> = all_layouts(&m, &bm, &ChoiceSpace::new(&bm), &policy())
            .flat_map(|l| l.unwrap().faces.into_iter().flat_map(|f| f.points))
            .collect();
        for l in all_layouts(&p, &bp, &sp, &policy()) {
            for f in l.unwrap().faces {
                for q in f.points {
                    assert!(pts_m.iter().any(|r| r.dist(reflect(q)) < 1e-9));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn nth_matches_iteration(sizes in proptest::collection::vec(0usize..3, 3..6), m in 3usize..6, k in 0u128..2000) {
            let space = ChoiceSpace { fan_sizes: sizes, m };
            let k = k % space.count();
            let c = space.nth(k).unwrap();
            prop_assert_eq!(space.iter().nth(k as usize), Some(c.clone()));
            prop_assert_eq!(space.index_of(&c), Some(k));
        }
    }
}
