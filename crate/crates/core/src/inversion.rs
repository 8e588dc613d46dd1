//! The inversion `i_p(x, y) = d(x, y) / (d(x, p) d(y, p))`, its ideal point,
//! and sampled probes for metric-hood and midpoints.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::engine::{DistanceEngine, SourceField};
use crate::complex::generators::Subject;
use crate::complex::{point_order, ComplexK, PointRef};
use crate::curvature::{sample_rng, PtolemyWitness};
use crate::error::{Error, Result};
use crate::numeric::ext_real;

/// Subdivision level of the coarse midpoint search.
const COARSE_LEVEL: u32 = 8;
const REFINE_CANDIDATES: usize = 4;

#[derive(Clone, Debug)]
pub struct InversionView {
    pub base: Arc<ComplexK>,
    pub p: PointRef,
    pub has_ideal_point: bool,
}

impl InversionView {
    pub fn new(subject: &Subject, p: &PointRef) -> Result<Self> {
        let p = subject.complex.canonicalize(p)?;
        Ok(InversionView { base: subject.complex.clone(), p, has_ideal_point: subject.unbounded })
    }

    pub fn from_complex(k: Arc<ComplexK>, p: &PointRef, has_ideal_point: bool) -> Result<Self> {
        let p = k.canonicalize(p)?;
        Ok(InversionView { base: k, p, has_ideal_point })
    }

    fn check_not_base(&self, x: &PointRef) -> Result<PointRef> {
        let x = self.base.canonicalize(x)?;
        if x.approx_eq(&self.p) {
            return Err(Error::BasePoint("the inversion is undefined at its base point".into()));
        }
        Ok(x)
    }
}

/// A point of the extended space: a point of the complex or the ideal point `p′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvPoint {
    Point(PointRef),
    Ideal,
}

/// An inversion value with the interval implied by the distance budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvDistance {
    pub value: f64,
    pub lower: f64,
    #[serde(with = "ext_real")]
    pub upper: f64,
    /// Base distances used: `xy, xp, yp` (`x p` only for the ideal point).
    pub distances: Vec<f64>,
    pub budgets: Vec<f64>,
}

pub fn inv_distance(view: &InversionView, x: &PointRef, y: &PointRef, mesh: f64) -> Result<InvDistance> {
    let x = view.check_not_base(x)?;
    let y = view.check_not_base(y)?;
    let m = view.base.pairwise_distances(&[x, y, view.p.clone()], mesh)?;
    let (xy, xp, yp) = (&m[0][1], &m[0][2], &m[1][2]);
    let den = xp.upper_bound * yp.upper_bound;
    let value = xy.upper_bound / den;
    let lower = (xy.upper_bound - xy.budget).max(0.0) / den;
    let lo_den = (xp.upper_bound - xp.budget) * (yp.upper_bound - yp.budget);
    let upper = if lo_den > 0.0 { xy.upper_bound / lo_den } else { f64::INFINITY };
    Ok(InvDistance {
        value,
        lower,
        upper,
        distances: vec![xy.upper_bound, xp.upper_bound, yp.upper_bound],
        budgets: vec![xy.budget, xp.budget, yp.budget],
    })
}

/// `î_p(x, p′) = 1 / d(x, p)`.
pub fn ideal_distance(view: &InversionView, x: &PointRef, mesh: f64) -> Result<InvDistance> {
    if !view.has_ideal_point {
        return Err(Error::NoIdealPoint);
    }
    let x = view.check_not_base(x)?;
    let d = view.base.ordered_distance(&x, &view.p, mesh)?;
    let lo = d.upper_bound - d.budget;
    Ok(InvDistance {
        value: 1.0 / d.upper_bound,
        lower: 1.0 / d.upper_bound,
        upper: if lo > 0.0 { 1.0 / lo } else { f64::INFINITY },
        distances: vec![d.upper_bound],
        budgets: vec![d.budget],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricWitness {
    pub x: PointRef,
    pub y: PointRef,
    /// The intermediate point of the triangle inequality.
    pub z: PointRef,
    pub i_xz: f64,
    pub i_zy: f64,
    pub i_xy: f64,
    /// `i_xz + i_zy − i_xy`.
    pub margin: f64,
    pub certified: bool,
    /// The same six distances read as a Ptolemy quadruple `(x, y, z, p)`.
    pub quadruple: PtolemyWitness,
}

/// Triangle inequality `i_p(x, y) ≤ i_p(x, z) + i_p(z, y)`.
///
/// A negative margin is certified exactly when the Ptolemy pairing
/// `d(x,y)d(z,p)` of the same distances is certified, since the margin is
/// that pairing's excess divided by `−d(x,p)d(y,p)d(z,p)`.
pub fn metric_check_triple(view: &InversionView, x: &PointRef, y: &PointRef, z: &PointRef, mesh: f64) -> Result<MetricWitness> {
    let x = view.check_not_base(x)?;
    let y = view.check_not_base(y)?;
    let z = view.check_not_base(z)?;
    let q = PtolemyWitness::measure(&view.base, [x.clone(), y.clone(), z.clone(), view.p.clone()], mesh)?;
    let [xy, zp, xz, py, xp, yz] = q.distances;
    let i_xz = xz / (xp * zp);
    let i_zy = yz / (zp * py);
    let i_xy = xy / (xp * py);
    let margin = i_xz + i_zy - i_xy;
    let certified = margin < 0.0 && q.pairing_certified(0);
    Ok(MetricWitness { x, y, z, i_xz, i_zy, i_xy, margin, certified, quadruple: q })
}

/// The triangle-inequality instance at base point `p` that a Ptolemy witness
/// `(x, y, z, p)` turns into, following its worst pairing.
pub fn triple_for_witness(w: &PtolemyWitness) -> (PointRef, PointRef, PointRef, PointRef) {
    let [x, y, z, p] = w.points.clone();
    match w.pairing {
        0 => (x, y, z, p),
        1 => (x, z, y, p),
        _ => (y, z, x, p),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCheckReport {
    pub base: PointRef,
    pub samples: usize,
    pub worst: MetricWitness,
    pub certified_count: usize,
}

impl MetricCheckReport {
    pub fn refutes(&self) -> bool {
        self.worst.certified
    }
}

fn sample_off_base(subject_like: &Subject, view: &InversionView, rng: &mut rand_chacha::ChaCha8Rng) -> PointRef {
    loop {
        let x = subject_like.sample_point(rng);
        if !x.approx_eq(&view.p) {
            return x;
        }
    }
}

/// Smallest triangle-inequality margin of `i_p` over seeded random triples.
pub fn metric_check(subject: &Subject, view: &InversionView, samples: usize, seed: u64, mesh: f64) -> Result<MetricCheckReport> {
    if samples == 0 {
        return Err(Error::OutOfRange("at least one sample is required".into()));
    }
    let (worst, certified_count) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let x = sample_off_base(subject, view, &mut rng);
            let y = sample_off_base(subject, view, &mut rng);
            let z = sample_off_base(subject, view, &mut rng);
            let w = metric_check_triple(view, &x, &y, &z, mesh)?;
            let c = w.certified as usize;
            Ok((w, c))
        })
        .reduce_with(|a: Result<(MetricWitness, usize)>, b| match (a, b) {
            (Ok((wa, ca)), Ok((wb, cb))) => Ok((if metric_order(&wa, &wb) == Ordering::Greater { wb } else { wa }, ca + cb)),
            (Err(e), _) | (_, Err(e)) => Err(e),
        })
        .expect("at least one sample")?;
    Ok(MetricCheckReport { base: view.p.clone(), samples, worst, certified_count })
}

fn metric_order(a: &MetricWitness, b: &MetricWitness) -> Ordering {
    a.margin.total_cmp(&b.margin).then_with(|| {
        for (p, q) in [(&a.x, &b.x), (&a.y, &b.y), (&a.z, &b.z)] {
            match point_order(p, q) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointPair {
    pub x: InvPoint,
    pub y: InvPoint,
    /// `i_p(x, y)`.
    pub target: f64,
    /// Smallest `max(i_p(x, z), i_p(z, y))` found.
    #[serde(with = "ext_real")]
    pub best: f64,
    pub z: Option<PointRef>,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MidpointReport {
    pub base: PointRef,
    pub pairs: usize,
    pub tolerance: f64,
    pub mesh: f64,
    pub passes: bool,
    /// Pair with the largest `best / (target / 2)`.
    pub worst: Option<MidpointPair>,
    /// Sampled search: support for the length-space property, never a proof.
    pub evidence_only: bool,
}

struct Fields {
    engine: Arc<DistanceEngine>,
    p: SourceField,
    x: Option<SourceField>,
    y: Option<SourceField>,
}

impl Fields {
    /// `max(i(x, z), i(z, y))`, with the ideal point contributing `1/d(z, p)`.
    fn score(&self, k: &ComplexK, z: &PointRef) -> Result<f64> {
        let dzp = self.p.distance_to(&self.engine, k, z)?;
        if !(dzp > 0.0) {
            return Ok(f64::INFINITY);
        }
        let side = |f: &Option<SourceField>| -> Result<f64> {
            match f {
                Some(f) => {
                    let dfp = self.p.distance_to(&self.engine, k, f.source())?;
                    Ok(f.distance_to(&self.engine, k, z)? / (dfp * dzp))
                }
                None => Ok(1.0 / dzp),
            }
        };
        Ok(side(&self.x)?.max(side(&self.y)?))
    }
}

/// Searches for an approximate `i_p`-midpoint of `x` and `y`.
pub fn midpoint_pair(view: &InversionView, x: &InvPoint, y: &InvPoint, mesh: f64, tol: f64) -> Result<MidpointPair> {
    let k = view.base.as_ref();
    let resolve = |q: &InvPoint| -> Result<Option<PointRef>> {
        match q {
            InvPoint::Point(p) => Ok(Some(view.check_not_base(p)?)),
            InvPoint::Ideal if view.has_ideal_point => Ok(None),
            InvPoint::Ideal => Err(Error::NoIdealPoint),
        }
    };
    let (xp, yp) = (resolve(x)?, resolve(y)?);
    let target = match (&xp, &yp) {
        (Some(a), Some(b)) => inv_distance(view, a, b, mesh)?.value,
        (Some(a), None) | (None, Some(a)) => ideal_distance(view, a, mesh)?.value,
        (None, None) => 0.0,
    };
    let engine = k.engine(mesh)?;
    let fields = Fields {
        p: engine.field(k, &view.p)?,
        x: xp.as_ref().map(|a| engine.field(k, a)).transpose()?,
        y: yp.as_ref().map(|a| engine.field(k, a)).transpose()?,
        engine: engine.clone(),
    };
    let mut cands: Vec<PointRef> = DistanceEngine::grid_points(k, COARSE_LEVEL);
    cands.extend(xp.iter().cloned());
    cands.extend(yp.iter().cloned());
    let mut scored: Vec<(f64, PointRef)> = cands
        .into_iter()
        .filter(|z| !z.approx_eq(&view.p))
        .map(|z| Ok((fields.score(k, &z)?, z)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| point_order(&a.1, &b.1)));
    let mut best = scored.first().cloned().unwrap_or((f64::INFINITY, view.p.clone()));
    let fine = engine.subdivision().max(COARSE_LEVEL) as f64;
    for (s0, z0) in scored.into_iter().take(REFINE_CANDIDATES) {
        for (si, bary) in k.containing(&z0) {
            let id = k.simplexes()[si].id;
            let (s, z) = refine(k, &fields, id, bary, s0, 2.0 / COARSE_LEVEL as f64, 1.0 / fine)?;
            if s < best.0 {
                best = (s, z);
            }
        }
    }
    let passes = best.0 <= 0.5 * target * (1.0 + tol);
    Ok(MidpointPair { x: x.clone(), y: y.clone(), target, best: best.0, z: Some(best.1), passes })
}

/// Compass search over barycentric moves inside one simplex, halving the
/// step from `start` down to `floor`.
fn refine(k: &ComplexK, fields: &Fields, id: u32, bary: Vec<f64>, score: f64, start: f64, floor: f64) -> Result<(f64, PointRef)> {
    let n = bary.len();
    let mut cur = (score, bary);
    let mut step = start;
    while step >= floor {
        let mut moved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || cur.1[j] < step {
                    continue;
                }
                let mut b = cur.1.clone();
                b[i] += step;
                b[j] -= step;
                b[j] = b[j].max(0.0);
                let z = PointRef::new(id, b.clone());
                let s = fields.score(k, &z)?;
                if s < cur.0 {
                    cur = (s, b);
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok((cur.0, k.canonicalize(&PointRef::new(id, cur.1))?))
}

/// Midpoint probe over seeded random pairs. With an ideal point, every
/// fourth pair joins a sample to `p′`.
pub fn midpoint_test(subject: &Subject, view: &InversionView, pairs: usize, seed: u64, mesh: f64, tol: f64) -> Result<MidpointReport> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    let list: Vec<(InvPoint, InvPoint)> = (0..pairs)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let x = InvPoint::Point(sample_off_base(subject, view, &mut rng));
            let y = if view.has_ideal_point && i % 4 == 3 { InvPoint::Ideal } else { InvPoint::Point(sample_off_base(subject, view, &mut rng)) };
            (x, y)
        })
        .collect();
    midpoint_pairs(view, &list, mesh, tol)
}

/// Midpoint probe over explicit pairs.
pub fn midpoint_pairs(view: &InversionView, pairs: &[(InvPoint, InvPoint)], mesh: f64, tol: f64) -> Result<MidpointReport> {
    let results: Vec<MidpointPair> = pairs.par_iter().map(|(x, y)| midpoint_pair(view, x, y, mesh, tol)).collect::<Result<_>>()?;
    let ratio = |r: &MidpointPair| if r.target > 0.0 { r.best / (0.5 * r.target) } else { 0.0 };
    let mut worst: Option<MidpointPair> = None;
    for r in results.iter() {
        if worst.as_ref().is_none_or(|w| ratio(r) > ratio(w)) {
            worst = Some(r.clone());
        }
    }
    Ok(MidpointReport {
        base: view.p.clone(),
        pairs: pairs.len(),
        tolerance: tol,
        mesh,
        passes: results.iter().all(|r| r.passes),
        worst,
        evidence_only: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generators::Generator;
    use crate::complex::{build_complex, Gluing, SimplexSpec};
    use crate::model_space::{Curvature, ModelPoint};

    fn line() -> ComplexK {
        let f = |x: f64| ModelPoint::new(Curvature::FLAT, vec![x]).unwrap();
        let a = SimplexSpec::new(0, vec![f(0.0), f(1.0)]);
        let b = SimplexSpec::new(1, vec![f(1.0), f(2.0)]);
        build_complex(Curvature::FLAT, vec![a, b], vec![Gluing::new(0, vec![1], 1, vec![0])]).unwrap()
    }

    #[test]
    fn segment_values() {
        let v = InversionView::from_complex(Arc::new(line()), &PointRef::new(0, vec![1.0, 0.0]), false).unwrap();
        let x = PointRef::new(0, vec![0.0, 1.0]);
        let y = PointRef::new(1, vec![0.0, 1.0]);
        assert_eq!(inv_distance(&v, &x, &y, 0.1).unwrap().value, 0.5);
        assert_eq!(inv_distance(&v, &x, &x, 0.1).unwrap().value, 0.0);
        assert!(matches!(inv_distance(&v, &v.p.clone(), &y, 0.1), Err(Error::BasePoint(_))));
        assert!(matches!(ideal_distance(&v, &x, 0.1), Err(Error::NoIdealPoint)));
        let m = metric_check_triple(&v, &x, &y, &x, 0.1).unwrap();
        assert_eq!(m.margin, 0.0);
    }

    #[test]
    fn tiling_values() {
        let s = Generator::parse("plane_tiling(3)").unwrap().build().unwrap();
        let g = s.generator.unwrap();
        let k = &s.complex;
        let v = InversionView::new(&s, s.center.as_ref().unwrap()).unwrap();
        let x = g.locate_chart(k, &[1.0, 0.0]).unwrap();
        let y = g.locate_chart(k, &[0.0, 1.0]).unwrap();
        let d = inv_distance(&v, &x, &y, 0.05).unwrap();
        assert!(d.lower <= 2f64.sqrt() + 1e-12 && 2f64.sqrt() <= d.upper + 1e-12, "{d:?}");
        assert_eq!(d.value, inv_distance(&v, &y, &x, 0.05).unwrap().value);
        let far = g.locate_chart(k, &[2.0, 0.0]).unwrap();
        let i = ideal_distance(&v, &far, 0.05).unwrap();
        assert!((i.value * i.distances[0] - 1.0).abs() <= 1e-12);
        assert_eq!(i.value, 0.5);
    }

    #[test]
    fn midpoints_on_the_unit_circle() {
        let s = Generator::parse("plane_tiling(3)").unwrap().build().unwrap();
        let g = s.generator.unwrap();
        let k = &s.complex;
        let v = InversionView::new(&s, s.center.as_ref().unwrap()).unwrap();
        let pt = |t: f64| InvPoint::Point(g.locate_chart(k, &[t.cos(), t.sin()]).unwrap());
        let pairs = vec![(pt(0.0), pt(1.5)), (pt(0.3), pt(2.5)), (pt(1.0), InvPoint::Ideal), (pt(0.7), pt(0.7))];
        let r = midpoint_pairs(&v, &pairs, 0.05, 0.05).unwrap();
        assert!(r.passes, "{:?}", r.worst);
    }
}
