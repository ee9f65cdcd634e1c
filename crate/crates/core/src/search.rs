//! Feasible descent on vertex coordinates, keeping every side face
//! nonobtuse and a wedge/diamond overlap alive.
//!
//! Each iteration finds a direction from a small quadratic program: minimize
//! `g.d + |d|^2 / 2` subject to `c_k + grad c_k . d <= -mu` for the nearly
//! active constraints, so that the step turns away from constraints it
//! approaches instead of sliding along them. Steps are accepted only when
//! the new point is valid, feasible, keeps the same band, still fails the
//! certificate, and lowers the objective; otherwise the step is halved.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificate::{frames, orourke_certificate, pair_margin, Obstacle};
use crate::geom::{angle_at, Point3, TolerancePolicy};
use crate::model::{Band, Prismatoid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("start violates preconditions: {0}")]
    Precondition(String),
    #[error("base not quadrilateral")]
    BaseNotQuadrilateral,
    #[error("no progress: step size fell below {0:e} before any step was accepted")]
    NoProgress(f64),
}

/// What the search minimizes.
#[derive(Clone, Default)]
pub enum Objective {
    /// `|angle(b_1 b_2 b_3) - pi/2|`.
    #[default]
    CyclicBase,
    Custom(Arc<dyn Fn(&Prismatoid) -> f64 + Send + Sync>),
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::CyclicBase => f.write_str("CyclicBase"),
            Objective::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub seed: u64,
    /// Initial and largest step length.
    pub step_size: f64,
    pub shrink_factor: f64,
    pub max_iters: usize,
    /// Allowed excess of a side-face angle over a right angle.
    pub constraint_eps: f64,
    pub objective: Objective,
    /// Restrict to the mirror-symmetric family: `b_1`, `b_3`, `a_1` on the
    /// x-axis, `b_2`/`b_4` and `a_2`/`a_3` reflections of each other.
    pub symmetry_lock: bool,
    /// Stop once the objective is at most this.
    pub target: f64,
    /// Constraints within this of their limit enter the direction problem.
    pub active_margin: f64,
    /// Required inward decrease of active constraints per unit step.
    pub inward: f64,
    /// Finite-difference step.
    pub h: f64,
    /// Random feasible nudges tried when the step size underflows.
    pub escape_attempts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            step_size: 1e-2,
            shrink_factor: 0.5,
            max_iters: 10_000,
            constraint_eps: 1e-9,
            objective: Objective::CyclicBase,
            symmetry_lock: false,
            target: 1e-6,
            active_margin: 1e-3,
            inward: 1e-7,
            h: 1e-6,
            escape_attempts: 16,
        }
    }
}

impl SearchConfig {
    pub fn is_valid(&self) -> bool {
        self.step_size > 0.0 && self.shrink_factor > 0.0 && self.shrink_factor < 1.0 && self.h > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StopReason {
    Converged,
    MaxIterations,
    Stationary,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    pub prismatoid: Prismatoid,
    pub objective_value: f64,
    pub constraints_satisfied: bool,
    pub certificate_fails: bool,
    /// Failing pair kept alive, such as `(V_2, D_4)`.
    pub witness: Option<String>,
    /// Largest crossing angle of failing certificate pairs (radians).
    pub penetration_angle: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<(usize, f64)>,
}

pub fn objective_cyclic(p: &Prismatoid) -> Result<f64, SearchError> {
    if p.n() != 4 {
        return Err(SearchError::BaseNotQuadrilateral);
    }
    let b = p.base_xy();
    let angle = angle_at(b[1], b[0], b[2]).map_err(|e| SearchError::Precondition(e.to_string()))?;
    Ok((angle - FRAC_PI_2).abs())
}

/// Maps a variable vector to coordinates.
#[derive(Debug, Clone)]
enum Parametrization {
    /// `[b1x, b2y, b3x, a1x, a2x, a2y, z]` with `b_2 = (c, -b2y)` and `b_4 = (c, b2y)`.
    Mirror { c: f64 },
    /// All coordinates except the pinned `b_1`.
    Free { n: usize, m: usize, b1: (f64, f64) },
}

impl Parametrization {
    fn encode(&self, p: &Prismatoid) -> Vec<f64> {
        match self {
            Parametrization::Mirror { .. } => {
                vec![p.base[0].x, -p.base[1].y, p.base[2].x, p.top[0].x, p.top[1].x, -p.top[1].y, p.z]
            }
            Parametrization::Free { .. } => {
                let mut w: Vec<f64> = p.base[1..].iter().flat_map(|q| [q.x, q.y]).collect();
                w.extend(p.top.iter().flat_map(|q| [q.x, q.y]));
                w.push(p.z);
                w
            }
        }
    }

    /// Points in input order with the base at height zero.
    fn decode(&self, w: &[f64]) -> (Vec<Point3>, Vec<Point3>) {
        match *self {
            Parametrization::Mirror { c } => {
                let [b1x, b2y, b3x, a1x, a2x, a2y, z] = w[..] else { unreachable!("seven variables") };
                let base = vec![
                    Point3::new(b1x, 0.0, 0.0),
                    Point3::new(c, -b2y, 0.0),
                    Point3::new(b3x, 0.0, 0.0),
                    Point3::new(c, b2y, 0.0),
                ];
                let top = vec![Point3::new(a1x, 0.0, z), Point3::new(a2x, -a2y, z), Point3::new(a2x, a2y, z)];
                (top, base)
            }
            Parametrization::Free { n, m, b1 } => {
                let z = w[w.len() - 1];
                let mut base = vec![Point3::new(b1.0, b1.1, 0.0)];
                base.extend((0..n - 1).map(|k| Point3::new(w[2 * k], w[2 * k + 1], 0.0)));
                let off = 2 * (n - 1);
                let top = (0..m).map(|k| Point3::new(w[off + 2 * k], w[off + 2 * k + 1], z)).collect();
                (top, base)
            }
        }
    }

    /// Prismatoid without validation, keeping the start's vertex labels.
    fn raw(&self, w: &[f64]) -> Prismatoid {
        let (top, base) = self.decode(w);
        let z = top[0].z - base[0].z;
        Prismatoid { top, base, z }
    }

    fn is_mirror_symmetric(p: &Prismatoid, tol: f64) -> bool {
        let (b, a) = (&p.base, &p.top);
        p.n() == 4
            && p.m() == 3
            && b[0].y.abs() <= tol
            && b[2].y.abs() <= tol
            && a[0].y.abs() <= tol
            && (b[1].x - b[3].x).abs() <= tol
            && (b[1].y + b[3].y).abs() <= tol
            && (a[1].x - a[2].x).abs() <= tol
            && (a[1].y + a[2].y).abs() <= tol
    }
}

struct Problem<'a> {
    param: Parametrization,
    band: Band,
    pair: Option<(usize, usize)>,
    objective: &'a Objective,
    policy: TolerancePolicy,
}

impl Problem<'_> {
    fn objective(&self, p: &Prismatoid) -> f64 {
        match self.objective {
            Objective::CyclicBase => objective_cyclic(p).unwrap_or(f64::INFINITY),
            Objective::Custom(f) => f(p),
        }
    }

    /// Face-angle excesses over a right angle, then minus the overlap margin.
    /// Evaluated on the start's band so the vector stays smooth.
    fn constraints(&self, p: &Prismatoid) -> Vec<f64> {
        let mut c = Vec::with_capacity(3 * self.band.faces.len() + 1);
        for f in &self.band.faces {
            let [u, v, w] = self.band.face_vertices(f).map(|x| p.point(x));
            for (x, y, z) in [(u, v, w), (v, w, u), (w, u, v)] {
                c.push(angle_at(x, y, z).unwrap_or(std::f64::consts::PI) - FRAC_PI_2);
            }
        }
        if let Some((i, j)) = self.pair {
            let margin = frames(p, &self.band, &self.policy)
                .map(|fr| pair_margin(&fr, i, j))
                .unwrap_or(-std::f64::consts::PI);
            c.push(-margin);
        }
        c
    }

    /// Full acceptance test for a trial point.
    fn accept(&self, w: &[f64], eps: f64) -> Option<Prismatoid> {
        let (top, base) = self.param.decode(w);
        let p = Prismatoid::validate(&top, &base, &self.policy).ok()?;
        let band = Band::build(&p, &self.policy).ok()?;
        if band != self.band || p.base != self.param.raw(w).base {
            return None;
        }
        let c = self.constraints(&p);
        let faces = 3 * self.band.faces.len();
        if c[..faces].iter().any(|&x| x > eps) {
            return None;
        }
        if self.pair.is_some() && c[faces] >= 0.0 {
            return None;
        }
        let fails = orourke_certificate(&p, &band, &self.policy).map(|r| !r.holds).unwrap_or(false);
        fails.then_some(p)
    }
}

fn central_gradient(f: impl Fn(&[f64]) -> Vec<f64>, w: &[f64], h: f64) -> Vec<Vec<f64>> {
    // rows: one per output, columns: one per variable
    let mut cols = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let (mut up, mut down) = (w.to_vec(), w.to_vec());
        up[k] += h;
        down[k] -= h;
        let (fu, fd) = (f(&up), f(&down));
        cols.push(fu.iter().zip(&fd).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let outputs = cols.first().map_or(0, Vec::len);
    (0..outputs).map(|o| cols.iter().map(|c| c[o]).collect()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `g.d + |d|^2 / 2` subject to `rows[k].d <= rhs[k]` by
/// coordinate ascent on the dual; `d = -(g + sum lambda_k rows[k])`.
pub fn direction_qp(g: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let mut lambda = vec![0.0; rows.len()];
    let mut d: Vec<f64> = g.iter().map(|x| -x).collect();
    let norms: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
    for _ in 0..2000 {
        let mut change = 0.0f64;
        for k in 0..rows.len() {
            if norms[k] == 0.0 {
                continue;
            }
            let violation = dot(&rows[k], &d) - rhs[k];
            let next = (lambda[k] + violation / norms[k]).max(0.0);
            let delta = next - lambda[k];
            if delta != 0.0 {
                for (di, ri) in d.iter_mut().zip(&rows[k]) {
                    *di -= delta * ri;
                }
                lambda[k] = next;
                change = change.max(delta.abs() * norms[k].sqrt());
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    d
}

pub fn search(start: &Prismatoid, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    let policy = TolerancePolicy::default();
    if !cfg.is_valid() {
        return Err(SearchError::Precondition("invalid search configuration".into()));
    }
    if matches!(cfg.objective, Objective::CyclicBase) && start.n() != 4 {
        return Err(SearchError::BaseNotQuadrilateral);
    }
    let band = Band::build(start, &policy).map_err(|e| SearchError::Precondition(e.to_string()))?;
    let report = band.nonobtuse_report(start, cfg.constraint_eps, &policy);
    if !report.nonobtuse {
        let v = &report.violations[0];
        return Err(SearchError::Precondition(format!(
            "obtuse side face {} at {} ({:.4} deg)",
            v.face,
            v.corner,
            v.angle.to_degrees()
        )));
    }
    let cert = orourke_certificate(start, &band, &policy).map_err(|e| SearchError::Precondition(e.to_string()))?;
    if cert.holds {
        return Err(SearchError::Precondition("the certificate holds at the start".into()));
    }
    let fr = frames(start, &band, &policy).map_err(|e| SearchError::Precondition(e.to_string()))?;
    // keep alive the failing diamond pair whose overlap is widest
    let pair = cert
        .failures
        .iter()
        .filter_map(|f| match f.obstacle {
            Obstacle::Diamond(j) => Some((f.wedge, j)),
            Obstacle::BTriangle(_) => None,
        })
        .map(|(i, j)| ((i, j), pair_margin(&fr, i, j)))
        .filter(|(_, m)| *m > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(ij, _)| ij);

    let param = if cfg.symmetry_lock {
        if !Parametrization::is_mirror_symmetric(start, 1e-12 * start.size()) {
            return Err(SearchError::Precondition("symmetry lock needs a mirror-symmetric start".into()));
        }
        Parametrization::Mirror { c: start.base[1].x }
    } else {
        Parametrization::Free { n: start.n(), m: start.m(), b1: (start.base[0].x, start.base[0].y) }
    };
    let problem = Problem { param, band, pair, objective: &cfg.objective, policy };
    let mut w = problem.param.encode(start);
    let base_z = start.base[0].z;
    let mut current = start.clone();
    let mut f = problem.objective(start);
    let mut trace = vec![(0, f)];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut step = cfg.step_size;
    let mut accepted = 0usize;
    let mut iterations = 0usize;
    let mut stop = StopReason::MaxIterations;

    let fvec = |v: &[f64]| vec![problem.objective(&problem.param.raw(v))];
    let cvec = |v: &[f64]| problem.constraints(&problem.param.raw(v));

    while iterations < cfg.max_iters {
        if f <= cfg.target {
            stop = StopReason::Converged;
            break;
        }
        iterations += 1;
        let g = central_gradient(fvec, &w, cfg.h).remove(0);
        let c = cvec(&w);
        let active: Vec<usize> = (0..c.len()).filter(|&k| c[k] > -cfg.active_margin).collect();
        let d = if active.is_empty() {
            g.iter().map(|x| -x).collect()
        } else {
            let jac = central_gradient(|v| cvec(v), &w, cfg.h);
            let rows: Vec<Vec<f64>> = active.iter().map(|&k| jac[k].clone()).collect();
            let rhs: Vec<f64> = active.iter().map(|&k| -c[k] - cfg.inward).collect();
            direction_qp(&g, &rows, &rhs)
        };
        let norm = dot(&d, &d).sqrt();
        if norm < 1e-14 {
            stop = StopReason::Stationary;
            break;
        }
        let dir: Vec<f64> = d.iter().map(|x| x / norm).collect();
        let mut moved = None;
        while step > 1e-14 {
            let trial: Vec<f64> = w.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            if let Some(p) = problem.accept(&trial, cfg.constraint_eps) {
                let ft = problem.objective(&p);
                if ft < f {
                    moved = Some((trial, p, ft));
                    break;
                }
            }
            step *= cfg.shrink_factor;
        }
        if moved.is_none() {
            moved = escape(&problem, &w, f, cfg, &mut rng);
            step = cfg.step_size;
        }
        let Some((trial, p, ft)) = moved else {
            if accepted == 0 {
                return Err(SearchError::NoProgress(1e-14));
            }
            stop = StopReason::StepUnderflow;
            break;
        };
        w = trial;
        current = p;
        f = ft;
        accepted += 1;
        trace.push((iterations, f));
        step = (step * 2.0).min(cfg.step_size);
    }
    if f <= cfg.target {
        stop = StopReason::Converged;
    }
    if accepted > 0 && base_z != 0.0 {
        let lift = |q: &Point3| Point3::new(q.x, q.y, q.z + base_z);
        current = Prismatoid { top: current.top.iter().map(lift).collect(), base: current.base.iter().map(lift).collect(), z: current.z };
    }
    let band = Band::build(&current, &policy).map_err(|e| SearchError::Precondition(e.to_string()))?;
    let cert = orourke_certificate(&current, &band, &policy).map_err(|e| SearchError::Precondition(e.to_string()))?;
    Ok(SearchResult {
        constraints_satisfied: band.nonobtuse_report(&current, cfg.constraint_eps, &policy).nonobtuse,
        certificate_fails: !cert.holds,
        witness: cert.witness().map(ToString::to_string),
        penetration_angle: cert.max_penetration_angle,
        objective_value: f,
        prismatoid: current,
        iterations,
        stop_reason: stop,
        trace,
    })
}

/// Random feasible nudges that do not raise the objective.
fn escape(problem: &Problem, w: &[f64], f: f64, cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Option<(Vec<f64>, Prismatoid, f64)> {
    for attempt in 0..cfg.escape_attempts {
        let radius = cfg.step_size * 1e-3 * 0.5f64.powi(attempt as i32);
        let trial: Vec<f64> = w.iter().map(|x| x + radius * rng.gen_range(-1.0..1.0)).collect();
        if let Some(p) = problem.accept(&trial, cfg.constraint_eps) {
            let ft = problem.objective(&p);
            if ft < f {
                return Some((trial, p, ft));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn cyclic_objective_values() {
        let pc = objective_cyclic(&instances::pc()).unwrap();
        assert!((pc.to_degrees() - 9.0).abs() <= 0.2);
        assert!(objective_cyclic(&instances::pcyc()).unwrap() <= 1e-3);
        assert_eq!(objective_cyclic(&instances::square_antiprismoid()).unwrap(), 0.0);
    }

    #[test]
    fn qp_respects_constraints() {
        // minimize -x + |d|^2/2 with x <= 0.25
        let d = direction_qp(&[-1.0, 0.0], &[vec![1.0, 0.0]], &[0.25]);
        assert!((d[0] - 0.25).abs() < 1e-12 && d[1].abs() < 1e-12);
        let free = direction_qp(&[-1.0, 2.0], &[vec![1.0, 0.0]], &[5.0]);
        assert_eq!(free, vec![1.0, -2.0]);
    }

    #[test]
    fn preconditions() {
        let cfg = SearchConfig::default();
        assert!(matches!(search(&instances::square_antiprismoid(), &cfg), Err(SearchError::Precondition(_))));
        let tri = {
            let p = instances::pc();
            Prismatoid::validate(&p.top, &p.base[..3], &TolerancePolicy::default()).unwrap()
        };
        assert_eq!(search(&tri, &cfg).unwrap_err(), SearchError::BaseNotQuadrilateral);
    }

    #[test]
    fn mirror_parametrization_round_trips() {
        let p = instances::pc();
        let param = Parametrization::Mirror { c: 0.0 };
        let w = param.encode(&p);
        assert_eq!(w, vec![-0.95, 3.0, 6.0, -0.9, 0.3, 0.1, 1.45]);
        let q = param.raw(&w);
        assert_eq!((q.top, q.base), (p.top.clone(), p.base.clone()));
    }

    #[test]
    fn short_search_is_monotone_and_feasible() {
        let cfg = SearchConfig { max_iters: 5, symmetry_lock: true, ..Default::default() };
        let r = search(&instances::pc(), &cfg).unwrap();
        assert!(r.trace.windows(2).all(|t| t[1].1 < t[0].1));
        assert!(r.constraints_satisfied && r.certificate_fails);
        assert!(r.objective_value < objective_cyclic(&instances::pc()).unwrap());
    }
}
