//! Exact rational evaluation of straight-line predicates.
//!
//! A float is read as the shortest decimal that round-trips to it, so
//! inputs typed with a few decimal digits (`-0.95`, `3.7169`) are treated as
//! exactly those decimals rather than their nearest binary neighbours.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::geom::{Point2, Point3};

pub fn rational(x: f64) -> BigRational {
    assert!(x.is_finite(), "exact arithmetic on a non-finite value");
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt = format!("{int_part}{frac_part}").parse().expect("decimal digits");
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(numer, denom);
    if negative {
        -r
    } else {
        r
    }
}

fn sign(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub fn orient2d_sign(p: Point2, q: Point2, r: Point2) -> i8 {
    let (px, py) = (rational(p.x), rational(p.y));
    let det = (rational(q.x) - &px) * (rational(r.y) - &py) - (rational(q.y) - &py) * (rational(r.x) - &px);
    sign(&det)
}

/// Sign of `(p - v) . (q - v)`; negative exactly when the angle at `v` is obtuse.
pub fn corner_dot_sign(v: Point3, p: Point3, q: Point3) -> i8 {
    let v = [rational(v.x), rational(v.y), rational(v.z)];
    let p = [rational(p.x), rational(p.y), rational(p.z)];
    let q = [rational(q.x), rational(q.y), rational(q.z)];
    let dot = (0..3).fold(BigRational::zero(), |acc, k| acc + (&p[k] - &v[k]) * (&q[k] - &v[k]));
    sign(&dot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_readback() {
        assert_eq!(rational(-0.95), BigRational::new((-95).into(), 100.into()));
        assert_eq!(rational(3.7169), BigRational::new(37169.into(), 10000.into()));
        assert_eq!(rational(6.0), BigRational::from_integer(6.into()));
        assert_eq!(rational(1e-7), BigRational::new(1.into(), 10_000_000.into()));
    }

    #[test]
    fn decimal_collinearity_is_exact() {
        let p = Point2::new(0.1, 0.1);
        let q = Point2::new(0.2, 0.2);
        let r = Point2::new(0.3, 0.3);
        assert_eq!(orient2d_sign(p, q, r), 0);
    }

    #[test]
    fn right_angle_has_zero_dot() {
        let v = Point3::new(0.0, 0.0, 0.0);
        assert_eq!(corner_dot_sign(v, Point3::new(0.3, 0.0, 0.0), Point3::new(0.0, 0.7, 0.1)), 0);
        assert_eq!(corner_dot_sign(v, Point3::new(0.3, 0.0, 0.0), Point3::new(-0.1, 0.7, 0.1)), -1);
    }
}
