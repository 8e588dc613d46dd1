//! Shortest paths over barycentric ε-nets.
//!
//! Every simplex is convex, so a shortest chain only needs turning points on
//! faces shared by two or more simplexes. Grid nodes are therefore placed on
//! those faces (plus all vertices); a query point is joined to every node of
//! every simplex containing it. All faces use one subdivision level `m`, a
//! power of two, so halving the mesh yields a supergraph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{slots_of, ComplexK, PointRef};
use crate::error::{Error, Result};
use crate::model_space::raw_distance;

const MAX_LEVEL: u32 = 1 << 14;
const SOURCE: u32 = u32::MAX;

/// Result of a distance query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBound {
    /// Length of the best chain found.
    pub upper_bound: f64,
    /// Largest grid spacing of the net used.
    pub mesh_used: f64,
    /// Heuristic slack: `mesh_used` per intermediate node, zero for a direct segment.
    pub budget: f64,
    /// The chain realizing `upper_bound`, endpoints included.
    pub path: Vec<PointRef>,
}

impl DistanceBound {
    pub fn exact(&self) -> bool {
        self.budget == 0.0
    }

    /// Lower end of the budgeted interval.
    pub fn lower(&self) -> f64 {
        (self.upper_bound - self.budget).max(0.0)
    }
}

struct Node {
    point: PointRef,
    incid: Vec<(u32, u32)>,
}

struct Cell {
    ids: Vec<u32>,
    coords: Vec<f64>,
}

pub struct DistanceEngine {
    kappa: f64,
    dim: usize,
    level: u32,
    spacing: f64,
    nodes: Vec<Node>,
    cells: Vec<Cell>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-indices `(i_0..i_d)` with every entry ≥ 1 summing to `m`.
pub(crate) fn interior_indices(parts: usize, m: u32) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 1..=left.saturating_sub(parts as u32 - 1) {
            cur.push(i);
            rec(left - i, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if (m as usize) >= parts {
        rec(m, parts, &mut Vec::new(), &mut out);
    }
    out
}

fn edge_spacing(k: &ComplexK, si: usize, a: usize, b: usize, m: u32) -> f64 {
    let n = k.simplexes[si].vertices.len();
    let kappa = k.kappa.kappa();
    let at = |i: u32| {
        let mut bary = vec![0.0; n];
        bary[a] = (m - i) as f64 / m as f64;
        bary[b] = i as f64 / m as f64;
        k.embed(si, &bary)
    };
    if kappa == 0.0 {
        return raw_distance(0.0, &at(0), &at(1));
    }
    let mut probes = vec![0, m - 1];
    if m >= 2 {
        probes.push(m / 2 - 1);
        probes.push(m / 2);
    }
    probes.into_iter().map(|i| raw_distance(kappa, &at(i), &at(i + 1))).fold(0.0, f64::max)
}

fn spacing_at(k: &ComplexK, m: u32) -> f64 {
    let mut worst: f64 = 0.0;
    for orbit in 0..k.orbit_count() {
        let (si, mask) = k.orbit_members(orbit as u32)[0];
        if mask.count_ones() == 2 {
            let s = slots_of(mask);
            worst = worst.max(edge_spacing(k, si, s[0], s[1], m));
        }
    }
    worst
}

/// Smallest power-of-two subdivision whose edge spacing is at most `mesh`.
pub(crate) fn grid_level(k: &ComplexK, mesh: f64) -> u32 {
    let mut m = 1u32;
    while m < MAX_LEVEL && spacing_at(k, m) > mesh {
        m *= 2;
    }
    m
}

impl DistanceEngine {
    pub(crate) fn new(k: &ComplexK, level: u32) -> Self {
        let kappa = k.kappa.kappa();
        let dim = k.simplexes[0].vertices[0].coords().len();
        let mut cells: Vec<Cell> = k.simplexes.iter().map(|_| Cell { ids: Vec::new(), coords: Vec::new() }).collect();
        let mut nodes = Vec::new();
        for orbit in 0..k.orbit_count() {
            let members = k.orbit_members(orbit as u32);
            let (si, mask) = members[0];
            let parts = mask.count_ones() as usize;
            if parts > 1 && members.len() < 2 {
                continue;
            }
            let slots = slots_of(mask);
            let n = k.simplexes[si].vertices.len();
            for idx in interior_indices(parts, level) {
                let mut bary = vec![0.0; n];
                for (s, i) in slots.iter().zip(&idx) {
                    bary[*s] = *i as f64 / level as f64;
                }
                let point = PointRef { simplex: k.simplexes[si].id, bary };
                let id = nodes.len() as u32;
                let mut incid = Vec::with_capacity(members.len());
                for (ti, tb) in k.containing(&point) {
                    let cell = &mut cells[ti];
                    incid.push((ti as u32, cell.ids.len() as u32));
                    cell.ids.push(id);
                    cell.coords.extend(k.embed(ti, &tb));
                }
                nodes.push(Node { point, incid });
            }
        }
        DistanceEngine { kappa, dim, level, spacing: spacing_at(k, level), nodes, cells }
    }

    pub fn subdivision(&self) -> u32 {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn coords(&self, cell: u32, local: u32) -> &[f64] {
        let s = local as usize * self.dim;
        &self.cells[cell as usize].coords[s..s + self.dim]
    }

    /// Per-simplex ambient coordinates of a canonical point.
    fn attach(&self, k: &ComplexK, p: &PointRef) -> Vec<(usize, Vec<f64>)> {
        k.containing(p).into_iter().map(|(si, b)| (si, k.embed(si, &b))).collect()
    }

    /// Distances from every node to a point, restricted to nodes sharing a simplex with it.
    fn adjacency(&self, at: &[(usize, Vec<f64>)]) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for (si, x) in at {
            let cell = &self.cells[*si];
            for (local, id) in cell.ids.iter().enumerate() {
                let c = &cell.coords[local * self.dim..(local + 1) * self.dim];
                out.push((*id, raw_distance(self.kappa, x, c)));
            }
        }
        out
    }

    /// Dijkstra from a point; stops once every target bound is settled.
    fn run(&self, k: &ComplexK, x: &PointRef, targets: &[PointRef]) -> Result<(Vec<f64>, Vec<u32>, Vec<Option<(f64, Option<u32>)>>)> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![SOURCE; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let xa = self.attach(k, x);
        for (id, d) in self.adjacency(&xa) {
            if d < dist[id as usize] {
                dist[id as usize] = d;
                heap.push(Entry(d, id));
            }
        }
        let mut best: Vec<Option<(f64, Option<u32>)>> = Vec::with_capacity(targets.len());
        let mut tadj: Vec<Vec<f64>> = Vec::with_capacity(targets.len());
        for t in targets {
            let ta = self.attach(k, t);
            let mut direct: Option<f64> = None;
            for (si, tc) in &ta {
                if let Some((_, xc)) = xa.iter().find(|(xi, _)| xi == si) {
                    let d = raw_distance(self.kappa, xc, tc);
                    direct = Some(direct.map_or(d, |b: f64| b.min(d)));
                }
            }
            best.push(direct.map(|d| (d, None)));
            let mut row = vec![f64::INFINITY; n];
            for (id, d) in self.adjacency(&ta) {
                let slot = &mut row[id as usize];
                *slot = slot.min(d);
            }
            tadj.push(row);
        }
        let full = targets.is_empty();
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u as usize] {
                continue;
            }
            if !full && best.iter().all(|b| b.is_some_and(|(v, _)| v <= d)) {
                break;
            }
            done[u as usize] = true;
            for (t, row) in tadj.iter().enumerate() {
                let w = row[u as usize];
                if w.is_finite() {
                    let cand = d + w;
                    if best[t].is_none_or(|(v, _)| cand < v) {
                        best[t] = Some((cand, Some(u)));
                    }
                }
            }
            for &(cell, local) in &self.nodes[u as usize].incid {
                let cu = self.coords(cell, local);
                let c = &self.cells[cell as usize];
                for (j, &v) in c.ids.iter().enumerate() {
                    if done[v as usize] {
                        continue;
                    }
                    let nd = d + raw_distance(self.kappa, cu, &c.coords[j * self.dim..(j + 1) * self.dim]);
                    if nd < dist[v as usize] {
                        dist[v as usize] = nd;
                        pred[v as usize] = u;
                        heap.push(Entry(nd, v));
                    }
                }
            }
        }
        Ok((dist, pred, best))
    }

    fn chain(&self, x: &PointRef, y: &PointRef, last: Option<u32>, pred: &[u32]) -> Vec<PointRef> {
        let mut mid = Vec::new();
        let mut cur = last;
        while let Some(u) = cur {
            mid.push(self.nodes[u as usize].point.clone());
            let p = pred[u as usize];
            cur = if p == SOURCE { None } else { Some(p) };
        }
        mid.reverse();
        let mut path = Vec::with_capacity(mid.len() + 2);
        path.push(x.clone());
        path.extend(mid);
        path.push(y.clone());
        path
    }

    /// The search sums cell-local lengths; the reported bound is the chain's
    /// own length so the two never disagree in the last bit.
    fn bound(&self, k: &ComplexK, upper: f64, path: Vec<PointRef>) -> Result<DistanceBound> {
        let hops = path.len().saturating_sub(2);
        let (upper, budget) = if hops == 0 { (upper, 0.0) } else { (k.chain_length(&path)?, self.spacing * hops as f64) };
        Ok(DistanceBound { upper_bound: upper, mesh_used: self.spacing, budget, path })
    }

    pub fn distance(&self, k: &ComplexK, x: &PointRef, y: &PointRef) -> Result<DistanceBound> {
        Ok(self.distances(k, x, std::slice::from_ref(y))?.remove(0))
    }

    /// Distances from `x` to each target in one search.
    pub fn distances(&self, k: &ComplexK, x: &PointRef, targets: &[PointRef]) -> Result<Vec<DistanceBound>> {
        let x = k.canonicalize(x)?;
        let targets: Vec<PointRef> = targets.iter().map(|t| k.canonicalize(t)).collect::<Result<_>>()?;
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        let (_, pred, best) = self.run(k, &x, &targets)?;
        targets
            .iter()
            .zip(best)
            .map(|(t, b)| {
                let (upper, last) = prefer_direct(b, k.local_distance_canonical(&x, t)).ok_or(Error::Unreachable)?;
                self.bound(k, upper, self.chain(&x, t, last, &pred))
            })
            .collect()
    }

    /// Complete single-source search, for repeated queries from one point.
    pub fn field(&self, k: &ComplexK, x: &PointRef) -> Result<SourceField> {
        let x = k.canonicalize(x)?;
        let (dist, pred, _) = self.run(k, &x, &[])?;
        let attached = self.attach(k, &x);
        Ok(SourceField { source: x, attached, dist, pred })
    }

    /// Every grid point of subdivision `level` on every face, interiors included.
    pub fn grid_points(k: &ComplexK, level: u32) -> Vec<PointRef> {
        let mut out = Vec::new();
        for orbit in 0..k.orbit_count() {
            let (si, mask) = k.orbit_members(orbit as u32)[0];
            let slots = slots_of(mask);
            let n = k.simplexes[si].vertices.len();
            for idx in interior_indices(slots.len(), level) {
                let mut bary = vec![0.0; n];
                for (s, i) in slots.iter().zip(&idx) {
                    bary[*s] = *i as f64 / level as f64;
                }
                out.push(PointRef { simplex: k.simplexes[si].id, bary });
            }
        }
        out
    }
}

/// A segment inside one simplex is exact; grid detours that beat it only by
/// rounding are discarded.
fn prefer_direct(best: Option<(f64, Option<u32>)>, direct: Option<f64>) -> Option<(f64, Option<u32>)> {
    match (best, direct) {
        (Some((b, _)), Some(d)) if b >= d * (1.0 - 1e-12) => Some((d, None)),
        (None, Some(d)) => Some((d, None)),
        (b, _) => b,
    }
}

/// Distances from one source to every node of an engine.
pub struct SourceField {
    source: PointRef,
    attached: Vec<(usize, Vec<f64>)>,
    dist: Vec<f64>,
    pred: Vec<u32>,
}

impl SourceField {
    pub fn source(&self) -> &PointRef {
        &self.source
    }

    /// Best chain from the source to `y` through the engine's nodes.
    pub fn bound_to(&self, engine: &DistanceEngine, k: &ComplexK, y: &PointRef) -> Result<DistanceBound> {
        let y = k.canonicalize(y)?;
        let ya = engine.attach(k, &y);
        let mut best: Option<(f64, Option<u32>)> = None;
        for (si, yc) in &ya {
            if let Some((_, xc)) = self.attached.iter().find(|(xi, _)| xi == si) {
                let d = raw_distance(engine.kappa, xc, yc);
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, None));
                }
            }
        }
        for (id, w) in engine.adjacency(&ya) {
            let cand = self.dist[id as usize] + w;
            if best.is_none_or(|(b, _)| cand < b) {
                best = Some((cand, Some(id)));
            }
        }
        let (upper, last) = prefer_direct(best, k.local_distance_canonical(&self.source, &y)).ok_or(Error::Unreachable)?;
        engine.bound(k, upper, engine.chain(&self.source, &y, last, &self.pred))
    }

    pub fn distance_to(&self, engine: &DistanceEngine, k: &ComplexK, y: &PointRef) -> Result<f64> {
        Ok(self.bound_to(engine, k, y)?.upper_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, Gluing, SimplexSpec};
    use crate::model_space::{Curvature, ModelPoint};

    fn flat(c: &[f64]) -> ModelPoint {
        ModelPoint::new(Curvature::FLAT, c.to_vec()).unwrap()
    }

    fn unit_square() -> ComplexK {
        let a = SimplexSpec::new(0, vec![flat(&[0.0, 0.0]), flat(&[1.0, 0.0]), flat(&[1.0, 1.0])]);
        let b = SimplexSpec::new(1, vec![flat(&[0.0, 0.0]), flat(&[1.0, 1.0]), flat(&[0.0, 1.0])]);
        build_complex(Curvature::FLAT, vec![a, b], vec![Gluing::new(0, vec![0, 2], 1, vec![0, 1])]).unwrap()
    }

    #[test]
    fn interior_index_counts() {
        assert_eq!(interior_indices(1, 4), vec![vec![4]]);
        assert_eq!(interior_indices(2, 4).len(), 3);
        assert_eq!(interior_indices(3, 4).len(), 3);
        assert!(interior_indices(3, 2).is_empty());
    }

    #[test]
    fn square_diagonal() {
        let k = unit_square();
        let b = k.distance(&PointRef::vertex(0, 0, 3), &PointRef::vertex(0, 2, 3), 0.05).unwrap();
        assert_eq!(b.upper_bound, 2f64.sqrt());
        assert!(b.exact());
    }

    #[test]
    fn across_the_gluing() {
        let k = unit_square();
        let x = PointRef::new(0, vec![0.1, 0.8, 0.1]);
        let y = PointRef::new(1, vec![0.1, 0.1, 0.8]);
        let (px, py) = (k.model_point(&x).unwrap(), k.model_point(&y).unwrap());
        let truth = crate::model_space::mk_distance(Curvature::FLAT, &px, &py).unwrap();
        let coarse = k.distance(&x, &y, 0.05).unwrap();
        let fine = k.distance(&x, &y, 0.025).unwrap();
        assert!(coarse.upper_bound >= truth - 1e-12);
        assert!(coarse.upper_bound - truth <= 0.1);
        assert!(fine.upper_bound <= coarse.upper_bound);
        assert_eq!(k.chain_length(&coarse.path).unwrap(), coarse.upper_bound);
    }

    #[test]
    fn field_agrees_with_search() {
        let k = unit_square();
        let e = k.engine(0.1).unwrap();
        let x = PointRef::new(0, vec![0.1, 0.8, 0.1]);
        let y = PointRef::new(1, vec![0.1, 0.1, 0.8]);
        let f = e.field(&k, &x).unwrap();
        assert_eq!(f.distance_to(&e, &k, &y).unwrap(), e.distance(&k, &x, &y).unwrap().upper_bound);
    }
}
