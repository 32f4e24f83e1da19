//! Finite-dimensional real `ℓ_p` spaces: norms, duality pairing and the
//! unit-ball geometry used by the norm optimizers.
//!
//! Exponents are kept as exact rationals (or `∞`) so that conjugation is
//! exact; evaluation happens in `f64`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the dimension for which `ℓ_∞` sign vectors are enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// An exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Ratio<u64>),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(Ratio::new_raw(1, 1));
    pub const TWO: Exponent = Exponent::Finite(Ratio::new_raw(2, 1));
    pub const INFINITY: Exponent = Exponent::Infinity;

    pub fn integer(p: u64) -> Result<Self> {
        Self::ratio(p, 1)
    }

    pub fn ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num < den {
            return Err(Error::InvalidExponent(format!(
                "{num}/{den} is not in [1, inf]"
            )));
        }
        Ok(Exponent::Finite(Ratio::new(num, den)))
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Exponent::Finite(r) if r.numer() == r.denom())
    }

    pub fn is_two(&self) -> bool {
        *self == Exponent::TWO
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// Hölder conjugate: `1/p + 1/p* = 1`.
    pub fn conjugate(&self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(r) => {
                let (n, d) = (*r.numer(), *r.denom());
                if n == d {
                    Exponent::Infinity
                } else {
                    Exponent::Finite(Ratio::new(n, n - d))
                }
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinity => write!(f, "inf"),
            Exponent::Finite(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Exponent::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidExponent(s.to_string());
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinity);
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Exponent::ratio(n, d).map_err(|_| bad());
        }
        // Decimal literal, converted exactly: "1.25" -> 125/100.
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        if frac_part.len() > 12 {
            return Err(bad());
        }
        let den = 10u64.pow(frac_part.len() as u32);
        let digits = format!("{int_part}{frac_part}");
        let num: u64 = digits.parse().map_err(|_| bad())?;
        Exponent::ratio(num, den).map_err(|_| bad())
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The space `ℓ_p^d` over the reals. The scalar field is `ℓ_p^1` for any `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    dim: usize,
    exponent: Exponent,
}

impl Space {
    pub fn new(dim: usize, exponent: Exponent) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        Ok(Space { dim, exponent })
    }

    /// The scalar field, modeled as a one-dimensional space.
    pub fn scalars() -> Self {
        Space {
            dim: 1,
            exponent: Exponent::TWO,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn dual(&self) -> Space {
        Space {
            dim: self.dim,
            exponent: self.exponent.conjugate(),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.exponent.is_two()
    }

    pub fn zero(&self) -> Vector {
        Vector {
            space: *self,
            coords: vec![0.0; self.dim],
        }
    }

    /// Canonical unit vector `e_i` (zero-based index).
    pub fn unit(&self, i: usize) -> Result<Vector> {
        if i >= self.dim {
            return Err(Error::ShapeMismatch(format!(
                "unit vector e_{} in dimension {}",
                i + 1,
                self.dim
            )));
        }
        let mut v = self.zero();
        v.coords[i] = 1.0;
        Ok(v)
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        Vector::new(*self, coords)
    }

    pub fn norm_of(&self, coords: &[f64]) -> f64 {
        lp_norm(coords, self.exponent)
    }

    /// Whether two spaces have the same dimension and exponent.
    pub fn ensure_eq(&self, other: &Space) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lp:{}:{}", self.exponent, self.dim)
    }
}

impl FromStr for Space {
    type Err = Error;

    /// Parses `lp:<p>:<d>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["lp", p, d] => {
                let exponent: Exponent = p.parse()?;
                let dim: usize = d
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSpace(s.to_string()))?;
                Space::new(dim, exponent)
            }
            _ => Err(Error::InvalidSpace(format!(
                "expected lp:<p>:<d>, got `{s}`"
            ))),
        }
    }
}

impl Serialize for Space {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A vector together with the space it lives in.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    space: Space,
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(space: Space, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim {
            return Err(Error::DimensionMismatch {
                dim: space.dim,
                found: coords.len(),
            });
        }
        Ok(Vector { space, coords })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        lp_norm(&self.coords, self.space.exponent)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Vector {
        Vector {
            space: self.space,
            coords: self.coords.iter().map(|c| a * c).collect(),
        }
    }

    /// Reads the same coordinates as an element of the dual space.
    pub fn as_functional(&self) -> Functional {
        Functional(Vector {
            space: self.space.dual(),
            coords: self.coords.clone(),
        })
    }
}

/// `‖x‖_p` of a coordinate slice; the maximum modulus when `p = ∞`.
pub fn lp_norm(coords: &[f64], p: Exponent) -> f64 {
    let max = coords.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    match p {
        Exponent::Infinity => max,
        _ if max == 0.0 => 0.0,
        _ if p.is_one() => coords.iter().map(|c| c.abs()).sum(),
        _ if p.is_two() => coords.iter().map(|c| c * c).sum::<f64>().sqrt(),
        _ => {
            let pv = p.value();
            let s: f64 = coords.iter().map(|c| (c.abs() / max).powf(pv)).sum();
            max * s.powf(1.0 / pv)
        }
    }
}

/// `(Σ a_j^p)^{1/p}` for a sequence of nonnegative reals; `max` when `p = ∞`.
pub(crate) fn lp_norm_iter(values: impl Iterator<Item = f64>, p: Exponent) -> f64 {
    let vals: Vec<f64> = values.collect();
    lp_norm(&vals, p)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An element of the dual of some space.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional(pub Vector);

impl Functional {
    pub fn new(primal: Space, coords: Vec<f64>) -> Result<Self> {
        Ok(Functional(Vector::new(primal.dual(), coords)?))
    }

    /// `e_i^*`, the coordinate functional on `primal`.
    pub fn coordinate(primal: Space, i: usize) -> Result<Self> {
        Ok(Functional(primal.dual().unit(i)?))
    }

    /// The space this functional acts on.
    pub fn primal(&self) -> Space {
        self.0.space.dual()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0.coords
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn apply(&self, x: &Vector) -> Result<f64> {
        pair(self, x)
    }
}

/// `f(x)`; the functional must live in the dual of `x`'s space.
pub fn pair(f: &Functional, x: &Vector) -> Result<f64> {
    let expected = x.space.dual();
    if f.0.space != expected {
        return Err(Error::SpaceMismatch {
            expected: expected.to_string(),
            found: f.0.space.to_string(),
        });
    }
    Ok(dot(&f.0.coords, &x.coords))
}

pub fn vec_norm(x: &Vector) -> f64 {
    x.norm()
}

pub fn dual(s: Space) -> Space {
    s.dual()
}

/// `x / ‖x‖`.
pub fn radial_retract(x: &Vector) -> Result<Vector> {
    let n = x.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(x.scaled(1.0 / n))
}

/// In-place radial retraction of raw coordinates; returns the original norm.
pub(crate) fn retract_in_place(coords: &mut [f64], p: Exponent) -> f64 {
    let n = lp_norm(coords, p);
    if n > 0.0 {
        coords.iter_mut().for_each(|c| *c /= n);
    }
    n
}

/// Coordinates `h` with `‖h‖_{p*} = 1` and `⟨h, x⟩ = ‖x‖_p`, where `p` is `exponent`.
///
/// For the zero vector this returns a unit vector of the dual. Zero coordinates
/// get sign `+1` when the dual is `ℓ_∞`, so the result is always a vertex there.
pub fn norming_coords(x: &[f64], exponent: Exponent) -> Vec<f64> {
    let d = x.len();
    let n = lp_norm(x, exponent);
    let mut h = vec![0.0; d];
    if n == 0.0 {
        if d > 0 {
            h[0] = 1.0;
        }
        return h;
    }
    match exponent {
        Exponent::Infinity => {
            // first attaining index
            let i = x.iter().position(|c| c.abs() == n).unwrap_or(0);
            h[i] = x[i].signum();
        }
        _ if exponent.is_one() => {
            for (hi, &xi) in h.iter_mut().zip(x) {
                *hi = if xi < 0.0 { -1.0 } else { 1.0 };
            }
        }
        _ => {
            let pv = exponent.value();
            for (hi, &xi) in h.iter_mut().zip(x) {
                *hi = xi.signum() * (xi.abs() / n).powf(pv - 1.0);
            }
        }
    }
    h
}

/// A norming functional of `x`: unit norm in the dual and `f(x) = ‖x‖`.
pub fn norming_functional(x: &Vector) -> Functional {
    let coords = norming_coords(&x.coords, x.space.exponent);
    Functional(Vector {
        space: x.space.dual(),
        coords,
    })
}

/// Extreme points of the closed unit ball of `s`, for `p ∈ {1, ∞}`.
pub fn extreme_points(s: Space) -> Result<Vec<Vector>> {
    extreme_points_capped(s, DEFAULT_ENUMERATION_CAP)
}

pub fn extreme_points_capped(s: Space, cap: usize) -> Result<Vec<Vector>> {
    let d = s.dim;
    if s.exponent.is_one() {
        let mut pts = Vec::with_capacity(2 * d);
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut v = s.zero();
                v.coords[i] = sign;
                pts.push(v);
            }
        }
        Ok(pts)
    } else if s.exponent.is_infinite() {
        if d > cap {
            return Err(Error::EnumerationCap {
                what: "sign vectors of the l_inf ball",
                size: d,
                cap,
            });
        }
        Ok((0..1u64 << d)
            .map(|mask| {
                let coords = (0..d)
                    .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                    .collect();
                Vector { space: s, coords }
            })
            .collect())
    } else {
        Err(Error::UnsupportedExponent {
            exponent: s.exponent.to_string(),
            operation: "extreme point enumeration",
        })
    }
}
