//! JSON documents, run reports, and SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point2, Point3, TolerancePolicy};
use crate::model::{ModelError, Prismatoid};
use crate::petal::Layout;
use crate::region::Region;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid document: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("nothing to render")]
    EmptyScene,
}

/// A prismatoid as stored on disk.
///
/// Points are either `[x, y]` pairs with the plane heights in `zTop` and
/// `zBase`, or full `[x, y, z]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PrismatoidDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub base: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_base: Option<f64>,
    pub top: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_top: Option<f64>,
}

fn lift(points: &[Vec<f64>], z: Option<f64>, what: &str) -> Result<Vec<Point3>, IoError> {
    points
        .iter()
        .enumerate()
        .map(|(k, p)| match (p.as_slice(), z) {
            (&[x, y], Some(z)) => Ok(Point3::new(x, y, z)),
            (&[_, _], None) => Err(IoError::Schema(format!("{what} point {} is 2D but z{} is missing", k + 1, capitalized(what)))),
            (&[x, y, pz], None) => Ok(Point3::new(x, y, pz)),
            (&[_, _, _], Some(_)) => Err(IoError::Schema(format!("{what} point {} is 3D and z{} is also given", k + 1, capitalized(what)))),
            _ => Err(IoError::Schema(format!("{what} point {} has {} coordinates", k + 1, p.len()))),
        })
        .collect()
}

fn capitalized(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

impl PrismatoidDocument {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn points(&self) -> Result<(Vec<Point3>, Vec<Point3>), IoError> {
        Ok((lift(&self.top, self.z_top, "top")?, lift(&self.base, self.z_base, "base")?))
    }

    pub fn to_prismatoid(&self, policy: &TolerancePolicy) -> Result<Prismatoid, IoError> {
        let (top, base) = self.points()?;
        Ok(Prismatoid::validate(&top, &base, policy)?)
    }

    /// Planar form of a validated prismatoid.
    pub fn from_prismatoid(p: &Prismatoid, name: Option<String>, source: Option<String>) -> Self {
        let flat = |poly: &[Point3]| poly.iter().map(|q| vec![q.x, q.y]).collect();
        PrismatoidDocument {
            name,
            source,
            base: flat(&p.base),
            z_base: Some(p.base[0].z),
            top: flat(&p.top),
            z_top: Some(p.top[0].z),
        }
    }
}

/// Machine-readable summary of one CLI run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub verdicts: Verdicts,
    pub counts: BTreeMap<String, u128>,
    /// Milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub witnesses: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdicts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonobtuse: Option<bool>,
    /// `true` when the certificate holds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tall: Option<bool>,
    /// `true` when some layout overlaps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<bool>,
}

/// Axis-aligned drawing window in layout coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub min: Point2,
    pub max: Point2,
}

impl Viewport {
    /// Bounding box of `points` grown by `margin` times its larger side.
    pub fn around(points: impl IntoIterator<Item = Point2>, margin: f64) -> Option<Viewport> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let pad = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9) * margin;
        Some(Viewport { min: lo - Point2::new(pad, pad), max: hi + Point2::new(pad, pad) })
    }
}

/// Faces and regions to draw.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub faces: Vec<(String, Vec<Point2>)>,
    pub regions: Vec<(String, Region)>,
    pub viewport: Option<Viewport>,
}

impl Scene {
    pub fn from_layout(layout: &Layout) -> Self {
        Scene {
            faces: layout.faces.iter().map(|f| (f.id.to_string(), f.points.clone())).collect(),
            ..Default::default()
        }
    }

    pub fn with_region(mut self, id: impl Into<String>, region: Region) -> Self {
        self.regions.push((id.into(), region));
        self
    }

    fn viewport(&self) -> Option<Viewport> {
        self.viewport.or_else(|| {
            let pts = self.faces.iter().flat_map(|(_, p)| p.iter().copied());
            let apexes = self
                .regions
                .iter()
                .flat_map(|(_, r)| r.pieces.iter())
                .flat_map(|c| c.clip_to_box(Point2::new(-1e3, -1e3), Point2::new(1e3, 1e3)));
            if self.faces.is_empty() {
                Viewport::around(apexes, 0.1)
            } else {
                Viewport::around(pts, 0.25)
            }
        })
    }

    /// Deterministic SVG 1.1 with six-decimal coordinates. The y-axis points
    /// up as in the layout.
    pub fn to_svg(&self) -> Result<String, IoError> {
        if self.faces.is_empty() && self.regions.is_empty() {
            return Err(IoError::EmptyScene);
        }
        let vp = self.viewport().ok_or(IoError::EmptyScene)?;
        let (w, h) = (vp.max.x - vp.min.x, vp.max.y - vp.min.y);
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
            vp.min.x, -vp.max.y, w, h
        );
        let stroke = w.max(h) / 500.0;
        let _ = writeln!(s, r#"<g transform="scale(1,-1)" stroke-width="{stroke:.6}" stroke-linejoin="round">"#);
        for (id, poly) in &self.faces {
            let fill = match id.as_str() {
                "B" => "#d9d9d9",
                "A" => "#f4c542",
                _ if id.starts_with("B_") => "#8fb8de",
                _ => "#f29e7a",
            };
            let _ = writeln!(
                s,
                r#"<path data-face="{id}" fill="{fill}" fill-opacity="0.8" stroke="black" d="{}"/>"#,
                path_data(poly)
            );
        }
        for (k, (id, region)) in self.regions.iter().enumerate() {
            let color = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"][k % 4];
            for (p, piece) in region.pieces.iter().enumerate() {
                let poly = piece.clip_to_box(vp.min, vp.max);
                if poly.len() < 3 {
                    continue;
                }
                let clipped = piece.recession_arc().is_some() || !piece.contains(poly[0], 1e-9 * w.max(h)) || poly_touches_box(&poly, &vp);
                let _ = writeln!(
                    s,
                    r#"<path data-region="{id}" data-piece="{p}" data-clipped="{clipped}" fill="{color}" fill-opacity="0.25" stroke="{color}" d="{}"/>"#,
                    path_data(&poly)
                );
            }
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, "</svg>");
        Ok(s)
    }
}

fn poly_touches_box(poly: &[Point2], vp: &Viewport) -> bool {
    let tol = 1e-9 * (vp.max.x - vp.min.x).max(vp.max.y - vp.min.y);
    poly.iter().any(|p| {
        (p.x - vp.min.x).abs() <= tol || (p.x - vp.max.x).abs() <= tol || (p.y - vp.min.y).abs() <= tol || (p.y - vp.max.y).abs() <= tol
    })
}

fn path_data(poly: &[Point2]) -> String {
    let mut d = String::new();
    for (k, p) in poly.iter().enumerate() {
        let _ = write!(d, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, p.x, p.y);
    }
    d.push('Z');
    d
}
