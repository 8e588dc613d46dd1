//! Built-in complexes, addressable as `name(a,b,c)` literals.
//!
//! Every generator lays its simplexes out in one global chart whose center is
//! a vertex, so the chart distance from the center equals the intrinsic
//! distance to it.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{build_complex, ComplexK, DistanceBound, Gluing, PointRef, SimplexId, SimplexSpec, BARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::model_space::{raw_distance, Curvature, ModelPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    /// Unit squares over `[-R, R]²`, each split along its diagonal.
    PlaneTiling { radius: f64 },
    /// Flat sectors glued cyclically around an apex.
    Cone { total_angle: f64, sectors: usize, radius: f64 },
    /// Hyperbolic sectors of angle `apex_angle` each, glued cyclically.
    HyperbolicFan { kappa: f64, sectors: usize, apex_angle: f64, radius: f64 },
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::PlaneTiling { radius } => write!(f, "plane_tiling({radius})"),
            Generator::Cone { total_angle, sectors, radius } => write!(f, "cone({total_angle},{sectors},{radius})"),
            Generator::HyperbolicFan { kappa, sectors, apex_angle, radius } => {
                write!(f, "hyperbolic_fan({kappa},{sectors},{apex_angle},{radius})")
            }
        }
    }
}

fn split_literal(s: &str) -> Option<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    let args = if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(str::trim).collect() };
    Some((s[..open].trim(), args))
}

/// Whether a string looks like a generator literal rather than a path.
pub fn is_generator_literal(s: &str) -> bool {
    split_literal(s).is_some_and(|(name, _)| !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

fn real(s: &str) -> Result<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("expected a real number, got `{s}`")))
}

fn count(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|_| Error::Parse(format!("expected a non-negative integer, got `{s}`")))
}

impl Generator {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = split_literal(s).ok_or_else(|| Error::Parse(format!("not a generator literal: `{s}`")))?;
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("{name} takes {n} arguments, got {}", args.len())))
            }
        };
        let g = match name {
            "plane_tiling" => {
                arity(1)?;
                Generator::PlaneTiling { radius: real(args[0])? }
            }
            "cone" => {
                arity(3)?;
                Generator::Cone { total_angle: real(args[0])?, sectors: count(args[1])?, radius: real(args[2])? }
            }
            "hyperbolic_fan" => {
                arity(4)?;
                Generator::HyperbolicFan {
                    kappa: real(args[0])?,
                    sectors: count(args[1])?,
                    apex_angle: real(args[2])?,
                    radius: real(args[3])?,
                }
            }
            other => return Err(Error::UnknownGenerator(other.to_string())),
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::OutOfRange(m));
        if !(self.radius() > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius()));
        }
        match *self {
            Generator::PlaneTiling { radius } if radius > 512.0 => bad(format!("tiling radius {radius} too large")),
            Generator::Cone { total_angle, sectors, .. } => {
                if sectors < 2 {
                    return bad("a cone needs at least 2 sectors".into());
                }
                let a = total_angle / sectors as f64;
                if !(a > 0.0 && a < PI) {
                    return bad(format!("sector angle {a} must lie in (0, π)"));
                }
                Ok(())
            }
            Generator::HyperbolicFan { kappa, sectors, apex_angle, .. } => {
                if !(kappa < 0.0) {
                    return bad(format!("hyperbolic fan needs κ < 0, got {kappa}"));
                }
                if sectors < 2 {
                    return bad("a fan needs at least 2 sectors".into());
                }
                if !(apex_angle > 0.0 && apex_angle < PI) {
                    return bad(format!("apex angle {apex_angle} must lie in (0, π)"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Generator::PlaneTiling { radius } | Generator::Cone { radius, .. } | Generator::HyperbolicFan { radius, .. } => radius,
        }
    }

    pub fn with_radius(&self, r: f64) -> Self {
        let mut g = *self;
        match &mut g {
            Generator::PlaneTiling { radius } | Generator::Cone { radius, .. } | Generator::HyperbolicFan { radius, .. } => *radius = r,
        }
        g
    }

    pub fn kappa(&self) -> Curvature {
        match *self {
            Generator::HyperbolicFan { kappa, .. } => Curvature::new(kappa).expect("checked"),
            _ => Curvature::FLAT,
        }
    }

    /// Total angle around the center vertex.
    pub fn center_angle(&self) -> f64 {
        match *self {
            Generator::PlaneTiling { .. } => 2.0 * PI,
            Generator::Cone { total_angle, .. } => total_angle,
            Generator::HyperbolicFan { sectors, apex_angle, .. } => sectors as f64 * apex_angle,
        }
    }

    pub fn build(&self) -> Result<Subject> {
        self.check()?;
        let (complex, boundary) = match *self {
            Generator::PlaneTiling { radius } => plane_tiling(radius)?,
            Generator::Cone { total_angle, sectors, radius } => {
                let a = total_angle / sectors as f64;
                let v = |r: f64, t: f64| ModelPoint::new(Curvature::FLAT, vec![r * t.cos(), r * t.sin()]);
                fan(Curvature::FLAT, sectors, |i| Ok([v(0.0, 0.0)?, v(radius, i as f64 * a)?, v(radius, (i + 1) as f64 * a)?]))?
            }
            Generator::HyperbolicFan { kappa, sectors, apex_angle, radius } => {
                let k = Curvature::new(kappa)?;
                let v = |t: f64| ModelPoint::from_tangent(k, &[radius * t.cos(), radius * t.sin()]);
                fan(k, sectors, |i| Ok([ModelPoint::origin(k, 2), v(i as f64 * apex_angle), v((i + 1) as f64 * apex_angle)]))?
            }
        };
        let center = match self {
            Generator::PlaneTiling { .. } => locate_tiling(&complex, self.radius(), &[0.0, 0.0]).expect("origin is a vertex"),
            _ => PointRef::vertex(0, 0, 3),
        };
        let center = complex.canonicalize(&center)?;
        Ok(Subject {
            label: self.to_string(),
            complex: Arc::new(complex),
            unbounded: true,
            declared_boundary: boundary,
            generator: Some(*self),
            center: Some(center),
        })
    }

    /// Locates a point given in polar chart coordinates around the center.
    pub fn locate_polar(&self, k: &ComplexK, r: f64, theta: f64) -> Option<PointRef> {
        if !(r >= 0.0) || r > self.radius() {
            return None;
        }
        match *self {
            Generator::PlaneTiling { radius } => locate_tiling(k, radius, &[r * theta.cos(), r * theta.sin()]),
            Generator::Cone { total_angle, sectors, .. } => {
                let a = total_angle / sectors as f64;
                let t = theta.rem_euclid(total_angle);
                let i = ((t / a).floor() as usize).min(sectors - 1);
                let target = [r * t.cos(), r * t.sin()];
                let si = k.simplex_index(i as SimplexId).ok()?;
                bary_in(k, si, &target).map(|b| PointRef::new(i as SimplexId, b))
            }
            Generator::HyperbolicFan { sectors, apex_angle, .. } => {
                let total = sectors as f64 * apex_angle;
                let t = theta.rem_euclid(total);
                let i = ((t / apex_angle).floor() as usize).min(sectors - 1);
                let target = ModelPoint::from_tangent(self.kappa(), &[r * t.cos(), r * t.sin()]);
                let si = k.simplex_index(i as SimplexId).ok()?;
                bary_in(k, si, target.coords()).map(|b| PointRef::new(i as SimplexId, b))
            }
        }
    }

    /// Locates a point given in the generator's ambient chart coordinates.
    pub fn locate_chart(&self, k: &ComplexK, coords: &[f64]) -> Option<PointRef> {
        match *self {
            Generator::PlaneTiling { radius } => locate_tiling(k, radius, coords),
            _ => (0..k.simplexes().len()).find_map(|si| bary_in(k, si, coords).map(|b| PointRef::new(k.simplexes()[si].id, b))),
        }
    }
}

type Built = (ComplexK, Vec<(SimplexId, Vec<usize>)>);

fn tiling_id(n: i64, i: i64, j: i64, upper: bool) -> SimplexId {
    (((i + n) * 2 * n + (j + n)) * 2 + upper as i64) as SimplexId
}

fn plane_tiling(radius: f64) -> Result<Built> {
    let n = radius.ceil().max(1.0) as i64;
    let p = |x: i64, y: i64| ModelPoint::new(Curvature::FLAT, vec![x as f64, y as f64]);
    let mut specs = Vec::with_capacity((4 * n * n * 2) as usize);
    let mut gluings = Vec::new();
    let mut boundary = Vec::new();
    for i in -n..n {
        for j in -n..n {
            let lower = tiling_id(n, i, j, false);
            let upper = tiling_id(n, i, j, true);
            specs.push(SimplexSpec::new(lower, vec![p(i, j)?, p(i + 1, j)?, p(i + 1, j + 1)?]));
            specs.push(SimplexSpec::new(upper, vec![p(i, j)?, p(i + 1, j + 1)?, p(i, j + 1)?]));
            gluings.push(Gluing::new(lower, vec![0, 2], upper, vec![0, 1]));
            if i + 1 < n {
                gluings.push(Gluing::new(lower, vec![1, 2], tiling_id(n, i + 1, j, true), vec![0, 2]));
            } else {
                boundary.push((lower, vec![1, 2]));
            }
            if j + 1 < n {
                gluings.push(Gluing::new(upper, vec![1, 2], tiling_id(n, i, j + 1, false), vec![1, 0]));
            } else {
                boundary.push((upper, vec![1, 2]));
            }
            if i == -n {
                boundary.push((upper, vec![0, 2]));
            }
            if j == -n {
                boundary.push((lower, vec![0, 1]));
            }
        }
    }
    Ok((build_complex(Curvature::FLAT, specs, gluings)?, boundary))
}

fn fan(kappa: Curvature, sectors: usize, verts: impl Fn(usize) -> Result<[ModelPoint; 3]>) -> Result<Built> {
    let mut specs = Vec::with_capacity(sectors);
    let mut gluings = Vec::with_capacity(sectors);
    let mut boundary = Vec::with_capacity(sectors);
    for i in 0..sectors {
        specs.push(SimplexSpec::new(i as SimplexId, verts(i)?.to_vec()));
        gluings.push(Gluing::new(i as SimplexId, vec![0, 2], ((i + 1) % sectors) as SimplexId, vec![0, 1]));
        boundary.push((i as SimplexId, vec![1, 2]));
    }
    Ok((build_complex(kappa, specs, gluings)?, boundary))
}

fn locate_tiling(k: &ComplexK, radius: f64, c: &[f64]) -> Option<PointRef> {
    let n = radius.ceil().max(1.0) as i64;
    let (x, y) = (*c.first()?, *c.get(1)?);
    let i = (x.floor() as i64).clamp(-n, n - 1);
    let j = (y.floor() as i64).clamp(-n, n - 1);
    let (u, v) = (x - i as f64, y - j as f64);
    if !(-BARY_TOLERANCE..=1.0 + BARY_TOLERANCE).contains(&u) || !(-BARY_TOLERANCE..=1.0 + BARY_TOLERANCE).contains(&v) {
        return None;
    }
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    let p = if u >= v {
        PointRef::new(tiling_id(n, i, j, false), vec![1.0 - u, u - v, v])
    } else {
        PointRef::new(tiling_id(n, i, j, true), vec![1.0 - v, u, v - u])
    };
    k.canonicalize(&p).ok()
}

/// Barycentric coordinates of ambient `x` in simplex `si`, if it lies there.
pub(crate) fn bary_in(k: &ComplexK, si: usize, x: &[f64]) -> Option<Vec<f64>> {
    let verts = &k.simplexes()[si].vertices;
    let n = verts.len();
    let len = x.len();
    let flat = k.kappa().kappa() == 0.0;
    let rows = if flat { len + 1 } else { len };
    let a = DMatrix::from_fn(rows, n, |r, c| if r < len { verts[c].coords()[r] } else { 1.0 });
    let b = DVector::from_fn(rows, |r, _| if r < len { x[r] } else { 1.0 });
    let sol = a.svd(true, true).solve(&b, 1e-14).ok()?;
    let s: f64 = sol.iter().sum();
    if !(s > 0.0) {
        return None;
    }
    let bary: Vec<f64> = sol.iter().map(|v| v / s).collect();
    if bary.iter().any(|v| *v < -1e-9) {
        return None;
    }
    let mut bary: Vec<f64> = bary.into_iter().map(|v| v.max(0.0)).collect();
    let t: f64 = bary.iter().sum();
    bary.iter_mut().for_each(|v| *v /= t);
    let back = k.embed(si, &bary);
    if raw_distance(k.kappa().kappa(), &back, x) > 1e-9 * (1.0 + x.iter().map(|c| c.abs()).fold(0.0, f64::max)) {
        return None;
    }
    Some(bary)
}

/// A complex plus the facts the pipeline needs about where it came from.
#[derive(Clone, Debug)]
pub struct Subject {
    pub label: String,
    pub complex: Arc<ComplexK>,
    /// Procedurally generated complexes stand in for unbounded spaces.
    pub unbounded: bool,
    /// Codimension-one faces cut off by materialization.
    pub declared_boundary: Vec<(SimplexId, Vec<usize>)>,
    pub generator: Option<Generator>,
    /// Chart center, for generated complexes.
    pub center: Option<PointRef>,
}

impl Subject {
    pub fn from_complex(label: impl Into<String>, complex: ComplexK) -> Self {
        Subject {
            label: label.into(),
            complex: Arc::new(complex),
            unbounded: false,
            declared_boundary: Vec::new(),
            generator: None,
            center: None,
        }
    }

    /// Radius of the ball that sampling stays in, if restricted.
    pub fn core_radius(&self) -> Option<f64> {
        self.generator.map(|g| g.radius() / 4.0)
    }

    /// A random point: uniform simplex, then uniform barycentric coordinates.
    /// Generated complexes keep samples inside the core ball.
    pub fn sample_point(&self, rng: &mut impl Rng) -> PointRef {
        let k = &self.complex;
        let core = self.core_radius();
        for _ in 0..100_000 {
            let s = &k.simplexes()[rng.random_range(0..k.simplexes().len())];
            let mut w: Vec<f64> = (0..s.vertices.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let Ok(p) = k.canonicalize(&PointRef::new(s.id, w)) else {
                continue;
            };
            match core {
                Some(r) if self.chart_radius(&p).is_none_or(|d| d > r) => continue,
                _ => return p,
            }
        }
        self.center.clone().unwrap_or_else(|| k.vertex_point(0))
    }

    /// Intrinsic distance from the chart center, when known exactly.
    pub fn chart_radius(&self, p: &PointRef) -> Option<f64> {
        let c = self.center.as_ref()?;
        let k = &self.complex;
        let pc = k.model_point(p).ok()?;
        let cc = k.model_point(c).ok()?;
        Some(raw_distance(k.kappa().kappa(), pc.coords(), cc.coords()))
    }

    /// Whether every codimension-one face not declared boundary is shared by exactly two simplexes.
    pub fn manifold_like(&self) -> bool {
        let k = &self.complex;
        for orbit in 0..k.orbit_count() {
            let members = k.orbit_members(orbit as u32);
            let (si, mask) = members[0];
            let n = k.simplexes()[si].vertices.len();
            if n < 2 || mask.count_ones() as usize != n - 1 {
                continue;
            }
            if members.len() > 2 {
                return false;
            }
            if members.len() == 1 {
                let id = k.simplexes()[si].id;
                let slots = super::slots_of(mask);
                let declared = self.declared_boundary.iter().any(|(bid, bs)| {
                    if let Ok(bi) = k.simplex_index(*bid) {
                        k.orbit_of(bi, super::mask_of(bs)) == orbit as u32
                    } else {
                        *bid == id && *bs == slots
                    }
                });
                if !declared {
                    return false;
                }
            }
        }
        true
    }
}

/// A point in a generator's chart.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartPoint {
    Polar { r: f64, theta: f64 },
    Cartesian(Vec<f64>),
}

impl ChartPoint {
    fn radius(&self, kappa: Curvature) -> f64 {
        match self {
            ChartPoint::Polar { r, .. } => *r,
            ChartPoint::Cartesian(c) => {
                let o = ModelPoint::origin(kappa, 2);
                if c.len() == o.coords().len() {
                    raw_distance(kappa.kappa(), c, o.coords())
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Distance on an unbounded generator, materialized just far enough.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WorkingDistance {
    pub bound: DistanceBound,
    pub materialized_radius: f64,
    /// Multiple of the chain bound covered around the query points.
    pub margin: f64,
}

/// Working-radius margin over the best known chain bound.
pub const WORKING_MARGIN: f64 = 1.5;

/// Lazily grown materializations of one generator.
pub struct Procedural {
    generator: Generator,
    cache: Mutex<BTreeMap<u64, Arc<Subject>>>,
}

impl Procedural {
    pub fn new(generator: Generator) -> Self {
        Procedural { generator, cache: Mutex::new(BTreeMap::new()) }
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    /// The materialization of radius `r`, built once.
    pub fn materialize(&self, r: f64) -> Result<Arc<Subject>> {
        let r = match self.generator {
            Generator::PlaneTiling { .. } => r.ceil(),
            _ => r,
        };
        let mut cache = self.cache.lock().expect("generator cache poisoned");
        if let Some(s) = cache.get(&r.to_bits()) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.generator.with_radius(r).build()?);
        cache.insert(r.to_bits(), s.clone());
        Ok(s)
    }

    fn locate(&self, s: &Subject, p: &ChartPoint) -> Option<PointRef> {
        let g = s.generator?;
        match p {
            ChartPoint::Polar { r, theta } => g.locate_polar(&s.complex, *r, *theta),
            ChartPoint::Cartesian(c) => g.locate_chart(&s.complex, c),
        }
    }

    /// Distance between chart points, growing the materialization until it
    /// covers [`WORKING_MARGIN`] times the chain bound around both points.
    pub fn distance(&self, a: &ChartPoint, b: &ChartPoint, mesh: f64) -> Result<WorkingDistance> {
        let kappa = self.generator.kappa();
        let reach = a.radius(kappa).max(b.radius(kappa));
        if !reach.is_finite() {
            return Err(Error::InvalidPoint("chart point has the wrong dimension".into()));
        }
        let mut r = self.generator.radius().max(reach * 1.01);
        for _ in 0..16 {
            let s = self.materialize(r)?;
            let (Some(pa), Some(pb)) = (self.locate(&s, a), self.locate(&s, b)) else {
                r *= 2.0;
                continue;
            };
            let bound = s.complex.distance(&pa, &pb, mesh)?;
            let needed = reach + WORKING_MARGIN * bound.upper_bound;
            if r >= needed {
                return Ok(WorkingDistance { bound, materialized_radius: r, margin: WORKING_MARGIN });
            }
            r = needed;
        }
        Err(Error::OutOfRange("materialization did not converge".into()))
    }
}
