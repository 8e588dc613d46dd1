//! Constant-curvature model spaces `M_κ^n` in explicit ambient coordinates.
//!
//! * `κ = 0`: points are plain `n`-vectors.
//! * `κ > 0`: points lie on the sphere of radius `1/√κ` in `R^{n+1}`.
//! * `κ < 0`: points lie on the upper sheet of the hyperboloid `⟨x,x⟩ = 1/κ`
//!   for the Minkowski form `⟨x,y⟩ = -x₀y₀ + Σ xᵢyᵢ`.
//!
//! Distances and angles use half-angle forms (`asin`, `asinh`, `atan2`) so
//! that short sides and thin triangles keep full relative precision.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the model constraint on point coordinates.
pub const MODEL_TOLERANCE: f64 = 1e-12;

/// Singular-value ratio below which a point set counts as degenerate.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Sectional curvature of a model space.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curvature(f64);

impl Curvature {
    pub const FLAT: Curvature = Curvature(0.0);
    pub const SPHERICAL: Curvature = Curvature(1.0);
    pub const HYPERBOLIC: Curvature = Curvature(-1.0);

    pub fn new(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::OutOfRange(format!("curvature must be finite, got {kappa}")));
        }
        Ok(Curvature(kappa))
    }

    #[inline]
    pub fn kappa(self) -> f64 {
        self.0
    }

    /// `D_κ`: `π/√κ` for `κ > 0`, `+∞` otherwise.
    pub fn diameter_bound(self) -> f64 {
        if self.0 > 0.0 {
            PI / self.0.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Length scale `1/√|κ|` of the curved models (`+∞` when flat).
    pub fn scale(self) -> f64 {
        if self.0 == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.0.abs().sqrt()
        }
    }

    /// Number of ambient coordinates for the `n`-dimensional model.
    pub fn ambient_len(self, dim: usize) -> usize {
        if self.0 == 0.0 {
            dim
        } else {
            dim + 1
        }
    }
}

/// A point of `M_κ^n` in ambient model coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    kappa: Curvature,
    coords: Vec<f64>,
}

impl ModelPoint {
    /// Validates `coords` against the model constraint (relative [`MODEL_TOLERANCE`]).
    pub fn new(kappa: Curvature, coords: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(kappa, coords, MODEL_TOLERANCE, false)
    }

    /// Like [`ModelPoint::new`] but accepts a looser tolerance and then snaps the
    /// coordinates exactly onto the model. Used for decimal file input.
    pub fn projected(kappa: Curvature, coords: Vec<f64>, tolerance: f64) -> Result<Self> {
        Self::with_tolerance(kappa, coords, tolerance, true)
    }

    fn with_tolerance(kappa: Curvature, coords: Vec<f64>, tol: f64, snap: bool) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let k = kappa.kappa();
        if k == 0.0 {
            return Ok(ModelPoint { kappa, coords });
        }
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: coords.len() });
        }
        let target = 1.0 / k;
        let q = form(k, &coords, &coords);
        let residual = ((q - target) / target).abs();
        if k < 0.0 && coords[0] <= 0.0 {
            return Err(Error::OffModel { kappa: k, residual: f64::INFINITY });
        }
        if residual > tol {
            return Err(Error::OffModel { kappa: k, residual });
        }
        let coords = if snap {
            normalize(k, &coords).ok_or(Error::OffModel { kappa: k, residual })?
        } else {
            coords
        };
        Ok(ModelPoint { kappa, coords })
    }

    /// Constructs without validation; callers guarantee the constraint.
    pub(crate) fn from_raw(kappa: Curvature, coords: Vec<f64>) -> Self {
        ModelPoint { kappa, coords }
    }

    /// The base point: the flat origin, or `(1/√|κ|, 0, …, 0)` on the curved models.
    pub fn origin(kappa: Curvature, dim: usize) -> Self {
        let mut coords = vec![0.0; kappa.ambient_len(dim)];
        if kappa.kappa() != 0.0 {
            coords[0] = kappa.scale();
        }
        ModelPoint { kappa, coords }
    }

    /// Exponential map at [`ModelPoint::origin`]: the point reached by walking
    /// along the tangent vector `v` for length `|v|`.
    pub fn from_tangent(kappa: Curvature, v: &[f64]) -> Self {
        let k = kappa.kappa();
        if k == 0.0 {
            return ModelPoint { kappa, coords: v.to_vec() };
        }
        let r = kappa.scale();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut coords = Vec::with_capacity(v.len() + 1);
        if len == 0.0 {
            coords.push(r);
            coords.extend(std::iter::repeat(0.0).take(v.len()));
        } else if k > 0.0 {
            let th = len / r;
            coords.push(r * th.cos());
            coords.extend(v.iter().map(|x| r * th.sin() * x / len));
        } else {
            let th = len / r;
            coords.push(r * th.cosh());
            coords.extend(v.iter().map(|x| r * th.sinh() * x / len));
        }
        ModelPoint { kappa, coords }
    }

    pub fn kappa(&self) -> Curvature {
        self.kappa
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        if self.kappa.kappa() == 0.0 {
            self.coords.len()
        } else {
            self.coords.len() - 1
        }
    }

    fn check_compatible(&self, other: &ModelPoint) -> Result<()> {
        if self.kappa != other.kappa {
            return Err(Error::CurvatureMismatch { a: self.kappa.kappa(), b: other.kappa.kappa() });
        }
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

/// Euclidean dot product for `κ ≥ 0`, Minkowski form for `κ < 0`.
#[inline]
pub(crate) fn form(kappa: f64, a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    if kappa < 0.0 {
        dot - 2.0 * a[0] * b[0]
    } else {
        dot
    }
}

/// Rescales an ambient vector back onto the model surface.
pub(crate) fn normalize(kappa: f64, x: &[f64]) -> Option<Vec<f64>> {
    if kappa == 0.0 {
        return Some(x.to_vec());
    }
    let q = form(kappa, x, x);
    let target = 1.0 / kappa;
    // q and target must share sign
    if !(q / target > 0.0) {
        return None;
    }
    let s = (target / q).sqrt();
    let mut out: Vec<f64> = x.iter().map(|c| c * s).collect();
    if kappa < 0.0 && out[0] < 0.0 {
        out.iter_mut().for_each(|c| *c = -*c);
    }
    Some(out)
}

/// Geodesic distance between raw ambient coordinates.
#[inline]
pub(crate) fn raw_distance(kappa: f64, a: &[f64], b: &[f64]) -> f64 {
    if kappa == 0.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    }
    let r = 1.0 / kappa.abs().sqrt();
    let mut q = 0.0;
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let d = (x - y) * (x - y);
        if i == 0 && kappa < 0.0 {
            q -= d;
        } else {
            q += d;
        }
    }
    let chord = q.max(0.0).sqrt();
    if kappa > 0.0 {
        2.0 * r * (chord / (2.0 * r)).min(1.0).asin()
    } else {
        2.0 * r * (chord / (2.0 * r)).asinh()
    }
}

/// Vertex angle opposite `opposite` in a model triangle with adjacent sides `s1`, `s2`.
///
/// Half-angle form of the curvature-κ law of cosines; exact at 0 and π.
pub fn angle_from_sides(kappa: Curvature, s1: f64, s2: f64, opposite: f64) -> Result<f64> {
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::Degenerate(format!("zero-length side ({s1}, {s2})")));
    }
    let k = kappa.kappa();
    let scale = if k == 0.0 { 1.0 } else { k.abs().sqrt() };
    let f = |x: f64| -> f64 {
        let x = x * scale;
        if k == 0.0 {
            x
        } else if k > 0.0 {
            x.sin()
        } else {
            x.sinh()
        }
    };
    let (a, b, c) = (s1, s2, opposite);
    let num = f((c + a - b) / 2.0) * f((c - a + b) / 2.0);
    let den = f((a + b + c) / 2.0) * f((a + b - c) / 2.0);
    Ok(2.0 * num.max(0.0).sqrt().atan2(den.max(0.0).sqrt()))
}

/// Geodesic distance in `M_κ^n`.
pub fn mk_distance(kappa: Curvature, a: &ModelPoint, b: &ModelPoint) -> Result<f64> {
    if a.kappa != kappa {
        return Err(Error::CurvatureMismatch { a: kappa.kappa(), b: a.kappa.kappa() });
    }
    a.check_compatible(b)?;
    Ok(raw_distance(kappa.kappa(), &a.coords, &b.coords))
}

/// Vertex angle at `apex` of the geodesic triangle `(apex, u, v)`, derived
/// from the three side lengths.
pub fn mk_angle(kappa: Curvature, apex: &ModelPoint, u: &ModelPoint, v: &ModelPoint) -> Result<f64> {
    let a = mk_distance(kappa, apex, u)?;
    let b = mk_distance(kappa, apex, v)?;
    let c = mk_distance(kappa, u, v)?;
    let d = kappa.diameter_bound();
    if a >= d || b >= d {
        return Err(Error::Antipodal { distance: a.max(b), diameter: d });
    }
    angle_from_sides(kappa, a, b, c)
}

/// A Euclidean triangle with prescribed side lengths `a = |BC|`, `b = |CA|`, `c = |AB|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTriangle {
    pub side_lengths: [f64; 3],
    /// `A`, `B`, `C` in the plane.
    pub planar_coords: [[f64; 2]; 3],
}

impl ComparisonTriangle {
    /// Point at arclength fraction `t` from vertex `from` towards vertex `to`.
    pub fn point_on_side(&self, from: usize, to: usize, t: f64) -> [f64; 2] {
        let p = self.planar_coords[from];
        let q = self.planar_coords[to];
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    }
}

/// Places `A` at the origin, `B` on the positive first axis and `C` in the closed upper half-plane.
pub fn place_comparison_triangle(a: f64, b: f64, c: f64) -> Result<ComparisonTriangle> {
    for (name, s) in [('a', a), ('b', b), ('c', c)] {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::OutOfRange(format!("side {name} = {s} must be a finite nonnegative real")));
        }
    }
    let slack = 1e-12 * (a + b + c);
    for (name, s, o1, o2) in [('a', a, b, c), ('b', b, c, a), ('c', c, a, b)] {
        let excess = s - (o1 + o2);
        if excess > slack {
            return Err(Error::TriangleInequality { side: name, length: s, excess });
        }
    }
    let cc = if c == 0.0 {
        [b, 0.0]
    } else {
        let x = ((b - a) * (b + a) + c * c) / (2.0 * c);
        // Kahan's area formula on sorted sides
        let mut s = [a, b, c];
        s.sort_by(|p, q| q.total_cmp(p));
        let (x1, y1, z1) = (s[0], s[1], s[2]);
        let prod = (x1 + (y1 + z1)) * (z1 - (x1 - y1)) * (z1 + (x1 - y1)) * (x1 + (y1 - z1));
        let area = 0.25 * prod.max(0.0).sqrt();
        [x, 2.0 * area / c]
    };
    Ok(ComparisonTriangle { side_lengths: [a, b, c], planar_coords: [[0.0, 0.0], [c, 0.0], cc] })
}

/// Point at arclength fraction `t` along the geodesic from `a` to `b`.
pub fn geodesic_point(kappa: Curvature, a: &ModelPoint, b: &ModelPoint, t: f64) -> Result<ModelPoint> {
    a.check_compatible(b)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange(format!("geodesic parameter {t} not in [0, 1]")));
    }
    let k = kappa.kappa();
    let d = raw_distance(k, &a.coords, &b.coords);
    if k > 0.0 && d >= kappa.diameter_bound() * (1.0 - 1e-12) {
        return Err(Error::Antipodal { distance: d, diameter: kappa.diameter_bound() });
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    Ok(ModelPoint::from_raw(kappa, raw_geodesic(k, &a.coords, &b.coords, d, t)))
}

pub(crate) fn raw_geodesic(k: f64, a: &[f64], b: &[f64], d: f64, t: f64) -> Vec<f64> {
    if k == 0.0 || d == 0.0 {
        let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
        return if k == 0.0 { p } else { normalize(k, &p).unwrap_or_else(|| a.to_vec()) };
    }
    let th = d * k.abs().sqrt();
    let (ca, cb) = if k > 0.0 {
        (((1.0 - t) * th).sin() / th.sin(), (t * th).sin() / th.sin())
    } else {
        (((1.0 - t) * th).sinh() / th.sinh(), (t * th).sinh() / th.sinh())
    };
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Tangent vector at `v` pointing towards `w` (not normalized), in ambient coordinates.
/// Linear in `w`.
pub(crate) fn tangent_towards(kappa: f64, v: &[f64], w: &[f64]) -> Vec<f64> {
    if kappa == 0.0 {
        return w.iter().zip(v).map(|(x, y)| x - y).collect();
    }
    let lam = form(kappa, v, w) / form(kappa, v, v);
    w.iter().zip(v).map(|(x, y)| x - lam * y).collect()
}

pub(crate) fn tangent_norm(kappa: f64, t: &[f64]) -> f64 {
    form(kappa, t, t).max(0.0).sqrt()
}

/// Coefficient `λ` with `tangent_towards(v, w) = w - λ v`.
pub(crate) fn tangent_lambda(kappa: f64, v: &[f64], w: &[f64]) -> f64 {
    if kappa == 0.0 {
        1.0
    } else {
        form(kappa, v, w) / form(kappa, v, v)
    }
}

/// Walks distance `t` from `v` along the unit tangent `u`.
/// Returns the coefficients `(α, γ)` with result `= α v + γ u`.
pub(crate) fn exp_coefficients(kappa: f64, t: f64) -> (f64, f64) {
    if kappa == 0.0 {
        (1.0, t)
    } else {
        let r = 1.0 / kappa.abs().sqrt();
        if kappa > 0.0 {
            ((t / r).cos(), r * (t / r).sin())
        } else {
            ((t / r).cosh(), r * (t / r).sinh())
        }
    }
}

/// Whether the points span a subspace of full expected dimension.
///
/// Flat points are tested for affine independence, curved ones for linear
/// independence of their ambient coordinate vectors.
pub fn general_position_check(points: &[ModelPoint]) -> bool {
    let Some(first) = points.first() else {
        return false;
    };
    if points.iter().any(|p| p.kappa != first.kappa || p.coords.len() != first.coords.len()) {
        return false;
    }
    let n = first.coords.len();
    let flat = first.kappa.kappa() == 0.0;
    let rows: Vec<Vec<f64>> = if flat {
        points[1..].iter().map(|p| p.coords.iter().zip(&first.coords).map(|(x, y)| x - y).collect()).collect()
    } else {
        points.iter().map(|p| p.coords.clone()).collect()
    };
    if rows.is_empty() {
        return true;
    }
    if rows.len() > n {
        return false;
    }
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return false;
    }
    sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count() == rows.len()
}
