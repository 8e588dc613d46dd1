//! Ptolemy sampling, the link condition, quarter-point quadruples and the
//! closed forms that predict their separations.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::generators::Subject;
use crate::complex::{point_order, ComplexK, DistanceBound, PointRef};
use crate::error::{Error, Result};
use crate::links::{
    cone_distance, iterated_cone_distance, link_at_vertex, shortest_injective_cycle, star_radius, LinkComplex, LinkEdge, LinkGraph, LinkLoop,
};
use crate::model_space::{angle_from_sides, Curvature};
use crate::numeric::ext_real;

/// Slack on `2π` when comparing link girths.
pub const LINK_TOLERANCE: f64 = 1e-9;

/// Point-index pairs behind the six distances, in the order
/// `xy, zp, xz, py, xp, yz`.
pub const QUAD_PAIRS: [(usize, usize); 6] = [(0, 1), (2, 3), (0, 2), (3, 1), (0, 3), (1, 2)];

fn pairing_products(d: &[f64; 6]) -> [f64; 3] {
    [d[0] * d[1], d[2] * d[3], d[4] * d[5]]
}

fn pairing_excess(p: &[f64; 3], i: usize) -> f64 {
    let (j, k) = match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    p[i] - (p[j] + p[k])
}

/// Largest excess of one pairing's product over the sum of the other two.
pub fn ptolemy_defect(d_xy: f64, d_zp: f64, d_xz: f64, d_py: f64, d_xp: f64, d_yz: f64) -> f64 {
    let p = pairing_products(&[d_xy, d_zp, d_xz, d_py, d_xp, d_yz]);
    (0..3).map(|i| pairing_excess(&p, i)).fold(f64::NEG_INFINITY, f64::max)
}

/// Margin a pairing's excess must clear before it counts, given upper-bound
/// distances that may overshoot by up to their budgets.
pub fn certification_threshold(distances: &[f64; 6], budgets: &[f64; 6]) -> f64 {
    let delta = budgets.iter().cloned().fold(0.0, f64::max);
    let dmax = distances.iter().cloned().fold(0.0, f64::max);
    4.0 * delta * dmax + delta * delta + 1e-12 * dmax * dmax
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtolemyWitness {
    /// `x, y, z, p`.
    pub points: [PointRef; 4],
    /// `xy, zp, xz, py, xp, yz`.
    pub distances: [f64; 6],
    pub budgets: [f64; 6],
    pub defect: f64,
    /// Pairing attaining the defect: 0 for `xy·zp`, 1 for `xz·py`, 2 for `xp·yz`.
    pub pairing: usize,
    pub threshold: f64,
    pub certified: bool,
}

impl PtolemyWitness {
    pub fn from_distances(points: [PointRef; 4], distances: [f64; 6], budgets: [f64; 6]) -> Self {
        let p = pairing_products(&distances);
        let mut pairing = 0;
        for i in 1..3 {
            if pairing_excess(&p, i) > pairing_excess(&p, pairing) {
                pairing = i;
            }
        }
        let d = &distances;
        let defect = ptolemy_defect(d[0], d[1], d[2], d[3], d[4], d[5]);
        let threshold = certification_threshold(&distances, &budgets);
        PtolemyWitness { points, distances, budgets, defect, pairing, threshold, certified: defect > threshold }
    }

    /// Measures all six distances among `points`.
    pub fn measure(k: &ComplexK, points: [PointRef; 4], mesh: f64) -> Result<Self> {
        let (points, bounds) = quad_distances(k, points, mesh)?;
        Ok(Self::from_distances(points, bounds.each_ref().map(|b| b.upper_bound), bounds.each_ref().map(|b| b.budget)))
    }

    /// Whether a given pairing's excess alone clears the threshold.
    pub fn pairing_certified(&self, pairing: usize) -> bool {
        pairing_excess(&pairing_products(&self.distances), pairing) > self.threshold
    }
}

/// The six distances among four points, in [`QUAD_PAIRS`] order, with the
/// points canonicalized.
pub fn quad_distances(k: &ComplexK, points: [PointRef; 4], mesh: f64) -> Result<([PointRef; 4], [DistanceBound; 6])> {
    let m = k.pairwise_distances(&points, mesh)?;
    let pts = points.map(|p| k.canonicalize(&p)).into_iter().collect::<Result<Vec<_>>>()?;
    let pts: [PointRef; 4] = pts.try_into().expect("four points");
    Ok((pts, QUAD_PAIRS.map(|(i, j)| m[i][j].clone())))
}

fn witness_order(a: &PtolemyWitness, b: &PtolemyWitness) -> Ordering {
    a.defect.total_cmp(&b.defect).then_with(|| {
        // ties go to the lexicographically smaller witness
        for (p, q) in a.points.iter().zip(&b.points) {
            match point_order(p, q) {
                Ordering::Equal => continue,
                o => return o.reverse(),
            }
        }
        Ordering::Equal
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub samples: usize,
    pub seed: u64,
    pub mesh: f64,
    /// Add quarter-point quadruples around vertices whose link has a short loop.
    pub association: bool,
}

impl ScanConfig {
    pub fn new(samples: usize, seed: u64, mesh: f64) -> Self {
        ScanConfig { samples, seed, mesh, association: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub worst: PtolemyWitness,
    pub samples: usize,
    /// Quadruples contributed by association.
    pub seeded: usize,
    pub certified_count: usize,
    pub mesh_used: f64,
}

impl ScanReport {
    pub fn refutes(&self) -> bool {
        self.worst.certified && self.worst.defect > 0.0
    }
}

/// Random generator for sample `index` of a seeded run.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Worst Ptolemy quadruple among seeded random samples (plus association
/// seeds when enabled). Independent of the thread count.
pub fn ptolemy_scan(subject: &Subject, cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.samples == 0 {
        return Err(Error::OutOfRange("at least one sample is required".into()));
    }
    let k = subject.complex.as_ref();
    let seeds = if cfg.association { association_seeds(subject)? } else { Vec::new() };
    let n = cfg.samples;
    let quad = |i: usize| -> [PointRef; 4] {
        if i < n {
            let mut rng = sample_rng(cfg.seed, i as u64);
            std::array::from_fn(|_| subject.sample_point(&mut rng))
        } else {
            seeds[i - n].clone()
        }
    };
    let total = n + seeds.len();
    let (worst, certified_count) = (0..total)
        .into_par_iter()
        .map(|i| PtolemyWitness::measure(k, quad(i), cfg.mesh).map(|w| {
            let c = w.certified as usize;
            (w, c)
        }))
        .reduce_with(|a, b| match (a, b) {
            (Ok((wa, ca)), Ok((wb, cb))) => {
                let w = if witness_order(&wa, &wb) == Ordering::Less { wb } else { wa };
                Ok((w, ca + cb))
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        })
        .expect("at least one sample")?;
    Ok(ScanReport { worst, samples: total, seeded: seeds.len(), certified_count, mesh_used: k.engine(cfg.mesh)?.spacing() })
}

/// Quarter-point quadruples at vertices whose link fails the girth test.
pub fn association_seeds(subject: &Subject) -> Result<Vec<[PointRef; 4]>> {
    let k = subject.complex.as_ref();
    if k.dimension() != 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for verdict in link_condition_check(k, 1)? {
        let Some(lp) = verdict.short_loop.as_ref().filter(|_| !verdict.passes) else {
            continue;
        };
        let mut limit = star_radius(k, &verdict.vertex)?;
        if let (Some(core), Some(r)) = (subject.core_radius(), subject.chart_radius(&verdict.vertex)) {
            limit = limit.min(core - r);
        }
        if !(limit > 0.0) {
            continue;
        }
        let link = link_at_vertex(k, &verdict.vertex)?;
        for f in [0.125, 0.25, 0.5, 1.0] {
            let q = associate_quadruple(k, &link, lp, f * limit, 0)?;
            // opposite quarter points form the first pairing
            out.push([q[0].clone(), q[2].clone(), q[1].clone(), q[3].clone()]);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkVerdict {
    pub vertex: PointRef,
    pub vertex_class: usize,
    #[serde(with = "ext_real")]
    pub girth: f64,
    pub passes: bool,
    /// Link level that produced the verdict.
    pub depth: u32,
    /// Set when the check cannot be exhaustive at this dimension.
    pub partial: bool,
    /// The shortest loop, for 1-dimensional links.
    pub short_loop: Option<LinkLoop>,
}

/// Girth-based link test at every vertex.
///
/// Surfaces get a full verdict from the girth of each vertex link. For
/// 3-complexes the girth is taken in the links of the link (one per edge at
/// the vertex), and verdicts are marked partial.
pub fn link_condition_check(k: &ComplexK, max_depth: u32) -> Result<Vec<LinkVerdict>> {
    if max_depth < 1 {
        return Err(Error::OutOfRange("max_depth must be at least 1".into()));
    }
    let dim = k.dimension();
    if dim > 3 {
        return Err(Error::Unsupported(format!("link condition in dimension {dim}")));
    }
    if dim == 3 && max_depth < 2 {
        return Err(Error::Unsupported("3-complexes need max_depth ≥ 2".into()));
    }
    let mut out = Vec::with_capacity(k.vertex_count());
    for class in 0..k.vertex_count() {
        let vertex = k.vertex_point(class);
        let link = link_at_vertex(k, &vertex)?;
        let verdict = if dim == 3 {
            let girth = (0..link.node_count).map(|a| depth_two_girth(&link, a)).fold(f64::INFINITY, f64::min);
            LinkVerdict { vertex, vertex_class: class, girth, passes: girth_passes(girth), depth: 2, partial: true, short_loop: None }
        } else {
            let lp = shortest_injective_cycle(&link.as_graph());
            let girth = lp.as_ref().map_or(f64::INFINITY, |l| l.length);
            LinkVerdict { vertex, vertex_class: class, girth, passes: girth_passes(girth), depth: 1, partial: false, short_loop: lp }
        };
        out.push(verdict);
    }
    Ok(out)
}

fn girth_passes(girth: f64) -> bool {
    girth >= 2.0 * PI - LINK_TOLERANCE
}

/// Girth of the link of direction `a` inside a 2-dimensional vertex link.
///
/// Its nodes are the faces through `a`, and each cell containing `a`
/// contributes an edge weighted by the spherical angle at `a`.
fn depth_two_girth(link: &LinkComplex, a: usize) -> f64 {
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut node = |pair: (usize, usize)| -> usize {
        let key = (pair.0.min(pair.1), pair.0.max(pair.1));
        nodes.iter().position(|&n| n == key).unwrap_or_else(|| {
            nodes.push(key);
            nodes.len() - 1
        })
    };
    let mut edges = Vec::new();
    for (ci, c) in link.cells.iter().enumerate() {
        if c.slots.len() != 3 {
            continue;
        }
        let Some(ia) = c.nodes.iter().position(|&n| n == a) else {
            continue;
        };
        let others: Vec<usize> = (0..3).filter(|&i| i != ia).collect();
        let (ib, ic) = (others[0], others[1]);
        // a face of the cell is named by its pair of link nodes
        let nb = node((a, c.nodes[ib]));
        let nc = node((a, c.nodes[ic]));
        let Ok(w) = angle_from_sides(Curvature::SPHERICAL, c.angles[ia][ib], c.angles[ia][ic], c.angles[ib][ic]) else {
            continue;
        };
        edges.push(LinkEdge { a: nb, b: nc, weight: w, cell: ci });
    }
    let g = LinkGraph { node_count: nodes.len(), edges };
    crate::links::shortest_injective_loop(&g)
}

/// Position along a link loop: the loop edge and the angle into it,
/// measured from the edge's first link node.
fn loop_position(link: &LinkComplex, g: &LinkGraph, lp: &LinkLoop, s: f64) -> Result<(usize, f64)> {
    let mut acc = 0.0;
    for (i, &(ei, forward)) in lp.edges.iter().enumerate() {
        let e = g.edges[ei];
        let last = i + 1 == lp.edges.len();
        if s <= acc + e.weight || last {
            let into = (s - acc).clamp(0.0, e.weight);
            let phi = if forward { into } else { e.weight - into };
            let th = link.cells[e.cell].angles[0][1];
            return Ok((e.cell, phi.clamp(0.0, th)));
        }
        acc += e.weight;
    }
    Err(Error::NotInjective("empty loop".into()))
}

fn check_injective(g: &LinkGraph, lp: &LinkLoop) -> Result<()> {
    if lp.edges.is_empty() {
        return Err(Error::NotInjective("empty loop".into()));
    }
    let mut seen_edges = std::collections::BTreeSet::new();
    let mut seen_nodes = std::collections::BTreeSet::new();
    let mut prev_end: Option<usize> = None;
    let mut start = None;
    for &(ei, forward) in &lp.edges {
        let e = g.edges.get(ei).ok_or_else(|| Error::NotInjective(format!("unknown link edge {ei}")))?;
        let (from, to) = if forward { (e.a, e.b) } else { (e.b, e.a) };
        if let Some(p) = prev_end {
            if p != from {
                return Err(Error::NotInjective(format!("edge {ei} does not continue the loop")));
            }
        }
        start.get_or_insert(from);
        if !seen_edges.insert(ei) || !seen_nodes.insert(from) {
            return Err(Error::NotInjective(format!("revisits at edge {ei}")));
        }
        prev_end = Some(to);
    }
    if prev_end != start {
        return Err(Error::NotInjective("loop is not closed".into()));
    }
    Ok(())
}

/// The four points at distance `ε` from the link's base vertex in the
/// directions of the loop's quarter points.
pub fn associate_quadruple(k: &ComplexK, link: &LinkComplex, lp: &LinkLoop, epsilon: f64, r: u32) -> Result<[PointRef; 4]> {
    if r != 0 {
        return Err(Error::Unsupported("association is materialized for loops in the first link only".into()));
    }
    let g = link.as_graph();
    check_injective(&g, lp)?;
    let radius = star_radius(k, &link.base_point)?;
    if !(epsilon >= 0.0) || epsilon > radius {
        return Err(Error::EpsilonTooLarge { epsilon, radius });
    }
    let mut out = Vec::with_capacity(4);
    for i in 0..4 {
        let (cell, phi) = loop_position(link, &g, lp, lp.length * i as f64 / 4.0)?;
        let dir = link.arc_point(cell, phi)?;
        out.push(link.exp(k, &dir, epsilon)?);
    }
    Ok(out.try_into().expect("four points"))
}

/// `ε√2 · sin^r ε · √(1 − cos D)`.
pub fn predicted_separation_flat(epsilon: f64, r: u32, d: f64) -> f64 {
    // √(1 − cos D) = √2 sin(D/2), which keeps precision near D = 0
    2.0 * epsilon * epsilon.sin().powi(r as i32) * (d / 2.0).sin()
}

/// `(2/√−κ) · asinh(sin(D′/2) · sinh(ε√−κ))` with `D′` the `r`-fold cone separation.
pub fn predicted_separation_hyp(kappa: f64, epsilon: f64, r: u32, d: f64) -> Result<f64> {
    if !(kappa < 0.0) {
        return Err(Error::OutOfRange(format!("hyperbolic prediction needs κ < 0, got {kappa}")));
    }
    let s = (-kappa).sqrt();
    let dp = iterated_cone_distance(r, epsilon, d);
    Ok(2.0 / s * ((dp / 2.0).sin() * (epsilon * s).sinh()).asinh())
}

/// `sin²x > 2 sin²(x/λ)`.
pub fn lemma31_check(lambda: f64, x: f64) -> bool {
    let a = x.sin();
    let b = (x / lambda).sin();
    a * a > 2.0 * b * b
}

/// `cos⁻¹(1 − ε(1 − cos 2D)) > λ cos⁻¹(1 − ε(1 − cos D))`, evaluated through
/// `cos⁻¹(1 − 2u²) = 2 asin u`.
pub fn lemma32_check(d: f64, lambda: f64, epsilon: f64) -> Result<bool> {
    let (lhs, rhs) = lemma32_sides(d, lambda, epsilon)?;
    Ok(lhs > rhs)
}

/// Both sides of the inequality in [`lemma32_check`].
pub fn lemma32_sides(d: f64, lambda: f64, epsilon: f64) -> Result<(f64, f64)> {
    let u = epsilon.sqrt() * d.sin();
    if !(epsilon > 0.0) || !(u <= 1.0) {
        return Err(Error::OutOfRange(format!("ε = {epsilon} outside (0, 1/sin²D] for D = {d}")));
    }
    let lhs = 2.0 * u.asin();
    let rhs = lambda * 2.0 * (epsilon.sqrt() * (d / 2.0).sin()).asin();
    Ok((lhs, rhs))
}

/// `cos D > cos² D`.
pub fn flat_violation_criterion(d: f64) -> bool {
    let c = d.cos();
    c > c * c
}

/// Limit of `defect / ε²` for quarter points around a flat cone vertex with
/// adjacent link separation `d` and opposite separation `d2`.
pub fn predicted_defect_ratio(d: f64, d2: f64) -> f64 {
    let a = (d / 2.0).sin();
    let b = (d2 / 2.0).sin();
    // 2(1 − cos D″) − 4(1 − cos D)
    4.0 * b * b - 8.0 * a * a
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub vertex: PointRef,
    pub loop_length: f64,
    pub epsilon: f64,
    pub r: u32,
    pub mesh: f64,
    /// Quarter points in loop order.
    pub points: [PointRef; 4],
    /// Link separation of adjacent quarter points.
    pub adjacent_link_separation: f64,
    /// `min(π, L/2)`, the link separation of opposite quarter points.
    pub opposite_link_separation: f64,
    /// `2D` without clamping.
    pub opposite_link_separation_literal: f64,
    pub measured_adjacent: [f64; 4],
    pub measured_opposite: [f64; 2],
    /// Cone-metric predictions for the complex's curvature.
    pub predicted_adjacent: f64,
    pub predicted_opposite: f64,
    /// Flat closed forms with the literal `2D`.
    pub predicted_adjacent_flat: f64,
    pub predicted_opposite_flat_literal: f64,
    pub predicted_adjacent_hyp: Option<f64>,
    pub predicted_opposite_hyp: Option<f64>,
    pub max_relative_gap: f64,
    pub witness: PtolemyWitness,
    pub defect_over_eps2: f64,
    pub predicted_defect_over_eps2: f64,
    /// `sin²(D″/2) > 2 sin²(D′/2)` with `D′`, `D″` from the iterated cone.
    pub squared_criterion: bool,
}

/// Quarter-point quadruple around `vertex` (or the first vertex whose link
/// fails the girth test), measured and compared with the closed forms.
pub fn counterexample(subject: &Subject, vertex: Option<&PointRef>, epsilon: f64, mesh: f64) -> Result<CounterexampleReport> {
    let k = subject.complex.as_ref();
    if k.dimension() != 2 {
        return Err(Error::Unsupported("quarter-point construction needs a 2-complex".into()));
    }
    let vertex = match vertex {
        Some(v) => k.vertex_point(k.vertex_class_of(v)?),
        None => {
            let verdicts = link_condition_check(k, 1)?;
            let pick = verdicts
                .iter()
                .find(|v| !v.passes)
                .or_else(|| subject.center.as_ref().and_then(|c| verdicts.iter().find(|v| k.vertex_class_of(c).ok() == Some(v.vertex_class))))
                .or_else(|| verdicts.iter().find(|v| v.short_loop.is_some()))
                .ok_or_else(|| Error::Unsupported("no vertex link contains a loop".into()))?;
            pick.vertex.clone()
        }
    };
    let link = link_at_vertex(k, &vertex)?;
    let lp = shortest_injective_cycle(&link.as_graph()).ok_or_else(|| Error::Unsupported("the vertex link contains no loop".into()))?;
    let q = associate_quadruple(k, &link, &lp, epsilon, 0)?;
    let m = k.pairwise_distances(&q, mesh)?;
    let len = lp.length;
    let d = len / 4.0;
    let d2 = (len / 2.0).min(PI);
    let kappa = k.kappa();
    let measured_adjacent = [m[0][1].upper_bound, m[1][2].upper_bound, m[2][3].upper_bound, m[3][0].upper_bound];
    let measured_opposite = [m[0][2].upper_bound, m[1][3].upper_bound];
    let predicted_adjacent = cone_distance(kappa, d, epsilon, epsilon)?;
    let predicted_opposite = cone_distance(kappa, d2, epsilon, epsilon)?;
    let (adj_hyp, opp_hyp) = if kappa.kappa() < 0.0 {
        (Some(predicted_separation_hyp(kappa.kappa(), epsilon, 0, d)?), Some(predicted_separation_hyp(kappa.kappa(), epsilon, 0, d2)?))
    } else {
        (None, None)
    };
    let gap = |x: f64, p: f64| if p > 0.0 { (x - p).abs() / p } else { x.abs() };
    let max_relative_gap = measured_adjacent
        .iter()
        .map(|&x| gap(x, predicted_adjacent))
        .chain(measured_opposite.iter().map(|&x| gap(x, predicted_opposite)))
        .fold(0.0, f64::max);
    let (pts, bounds) = quad_distances(k, [q[0].clone(), q[2].clone(), q[1].clone(), q[3].clone()], mesh)?;
    let witness = PtolemyWitness::from_distances(pts, bounds.each_ref().map(|b| b.upper_bound), bounds.each_ref().map(|b| b.budget));
    let dp = iterated_cone_distance(0, epsilon, d);
    let dpp = iterated_cone_distance(0, epsilon, 2.0 * d);
    let (sp, spp) = ((dp / 2.0).sin(), (dpp / 2.0).sin());
    Ok(CounterexampleReport {
        vertex,
        loop_length: len,
        epsilon,
        r: 0,
        mesh,
        points: q,
        adjacent_link_separation: d,
        opposite_link_separation: d2,
        opposite_link_separation_literal: 2.0 * d,
        measured_adjacent,
        measured_opposite,
        predicted_adjacent,
        predicted_opposite,
        predicted_adjacent_flat: predicted_separation_flat(epsilon, 0, d),
        predicted_opposite_flat_literal: predicted_separation_flat(epsilon, 0, 2.0 * d),
        predicted_adjacent_hyp: adj_hyp,
        predicted_opposite_hyp: opp_hyp,
        max_relative_gap,
        defect_over_eps2: if epsilon > 0.0 { witness.defect / (epsilon * epsilon) } else { 0.0 },
        witness,
        predicted_defect_over_eps2: predicted_defect_ratio(d, d2),
        squared_criterion: spp * spp > 2.0 * sp * sp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generators::Generator;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn defect_examples() {
        let r2 = 2f64.sqrt();
        // square corners x, y, z, p in cyclic order x, z, y, p: diagonals are xy and zp
        close(ptolemy_defect(r2, r2, 1.0, 1.0, 1.0, 1.0), 0.0, 1e-15);
        assert_eq!(ptolemy_defect(2.0, 2.0, 1.0, 1.0, 1.0, 1.0), 2.0);
        assert_eq!(ptolemy_defect(0.0, 0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn separation_examples() {
        close(predicted_separation_flat(0.1, 0, PI / 2.0), 0.141421, 5e-7);
        close(predicted_separation_flat(0.1, 0, 3.0 * PI / 8.0), 0.111114, 5e-7);
        assert_eq!(predicted_separation_flat(0.1, 0, 0.0), 0.0);
        close(predicted_separation_hyp(-1.0, 0.01, 0, PI / 2.0).unwrap(), 0.0141421, 5e-7);
        assert_eq!(predicted_separation_hyp(-1.0, 0.1, 0, 0.0).unwrap(), 0.0);
        for &d in &[0.1, 1.0, PI / 2.0, 3.0] {
            let c = cone_distance(Curvature::FLAT, d, 0.3, 0.3).unwrap();
            close(predicted_separation_flat(0.3, 0, d), c, 1e-12);
            let h = cone_distance(Curvature::new(-2.0).unwrap(), d, 0.3, 0.3).unwrap();
            close(predicted_separation_hyp(-2.0, 0.3, 0, d).unwrap(), h, 1e-12);
        }
    }

    #[test]
    fn lemma_examples() {
        assert!(lemma31_check(1.5, 0.1));
        assert!(!lemma31_check(1.2, 0.1));
        assert!(!lemma31_check(1.5, 0.0));
        assert!(lemma32_check(PI / 3.0, 1.6, 0.01).unwrap());
        let (l, r) = lemma32_sides(PI / 3.0, 1.6, 0.01).unwrap();
        close(l, 0.173422, 5e-7);
        close(r, 0.160067, 5e-7);
        assert!(!lemma32_check(PI / 3.0, 1.8, 0.01).unwrap());
        assert!(lemma32_check(1.0, 1.5, 0.0).is_err());
        assert!(lemma32_check(1.0, 1.5, 2.0).is_err());
        assert!(flat_violation_criterion(3.0 * PI / 8.0));
        assert!(flat_violation_criterion(PI / 4.0));
        close(predicted_defect_ratio(3.0 * PI / 8.0, 3.0 * PI / 4.0), 0.94495, 5e-6);
    }

    #[test]
    fn link_verdicts() {
        let tiling = Generator::parse("plane_tiling(2)").unwrap().build().unwrap();
        let c = tiling.center.clone().unwrap();
        let v = link_condition_check(&tiling.complex, 1).unwrap();
        let center = v.iter().find(|x| x.vertex_class == tiling.complex.vertex_class_of(&c).unwrap()).unwrap();
        assert!(center.passes);
        close(center.girth, 2.0 * PI, 1e-12);
        assert!(v.iter().all(|x| x.passes));

        let cone = Generator::parse("cone(4.71238898038469,3,2)").unwrap().build().unwrap();
        let v = link_condition_check(&cone.complex, 1).unwrap();
        let apex = v.iter().find(|x| !x.passes).unwrap();
        close(apex.girth, 1.5 * PI, 1e-12);
        assert_eq!(v.iter().filter(|x| !x.passes).count(), 1);
    }

    #[test]
    fn association_examples() {
        let cone = Generator::parse("cone(4.71238898038469,3,2)").unwrap().build().unwrap();
        let k = &cone.complex;
        let apex = cone.center.clone().unwrap();
        let link = link_at_vertex(k, &apex).unwrap();
        let lp = shortest_injective_cycle(&link.as_graph()).unwrap();
        let q = associate_quadruple(k, &link, &lp, 0.1, 0).unwrap();
        for p in &q {
            close(cone.chart_radius(p).unwrap(), 0.1, 1e-12);
        }
        let z = associate_quadruple(k, &link, &lp, 0.0, 0).unwrap();
        assert!(z.iter().all(|p| p.approx_eq(&k.canonicalize(&apex).unwrap())));
        assert!(matches!(associate_quadruple(k, &link, &lp, 5.0, 0), Err(Error::EpsilonTooLarge { .. })));
        assert!(matches!(associate_quadruple(k, &link, &lp, 0.1, 1), Err(Error::Unsupported(_))));
        let mut bad = lp.clone();
        bad.edges.push(bad.edges[0]);
        assert!(matches!(associate_quadruple(k, &link, &bad, 0.1, 0), Err(Error::NotInjective(_))));
    }

    #[test]
    fn flat_vertex_quadruple_has_no_defect() {
        let tiling = Generator::parse("plane_tiling(2)").unwrap().build().unwrap();
        let r = counterexample(&tiling, tiling.center.as_ref(), 0.1, 0.05).unwrap();
        close(r.adjacent_link_separation, PI / 2.0, 1e-12);
        for x in r.measured_adjacent {
            assert!(x >= 0.1 * 2f64.sqrt() - 1e-12 && x <= 0.1 * 2f64.sqrt() + 0.1, "{x}");
        }
        for x in r.measured_opposite {
            close(x, 0.2, 1e-12);
        }
        assert!(!r.witness.certified);
        close(ptolemy_defect(0.2, 0.2, 0.1 * 2f64.sqrt(), 0.1 * 2f64.sqrt(), 0.1 * 2f64.sqrt(), 0.1 * 2f64.sqrt()), 0.0, 1e-15);
    }
}
