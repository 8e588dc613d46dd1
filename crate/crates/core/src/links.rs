//! Links of vertices and the κ-cone metric.
//!
//! The link of a vertex `v` has one spherical cell per simplex incident to
//! `v`. Its vertices are the directions of the edges at `v`, and edge lengths
//! are the corner angles at `v`. Two directions are the same link vertex when
//! the corresponding edges of the complex are identified.

use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complex::generators::bary_in;
use crate::complex::{build_complex, ComplexK, Gluing, PointRef, SimplexId, SimplexSpec};
use crate::error::{Error, Result};
use crate::model_space::{self, angle_from_sides, exp_coefficients, form, raw_distance, tangent_lambda, tangent_towards, Curvature, ModelPoint};
use crate::numeric::exact_sum;

/// One incident simplex seen from the base vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCell {
    pub simplex: SimplexId,
    /// Slot of the base vertex in that simplex.
    pub apex_slot: usize,
    /// The other slots, i.e. the directions spanning this cell.
    pub slots: Vec<usize>,
    /// Link vertex of each direction.
    pub nodes: Vec<usize>,
    /// Corner angles at the base vertex between directions.
    pub angles: Vec<Vec<f64>>,
}

/// An edge of the link multigraph: one corner of a 2-simplex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub cell: usize,
}

/// Weighted multigraph; parallel edges and self-loops allowed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkGraph {
    pub node_count: usize,
    pub edges: Vec<LinkEdge>,
}

/// A closed walk in a link graph: edge indices with traversal direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoop {
    pub edges: Vec<(usize, bool)>,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkComplex {
    pub base_point: PointRef,
    pub vertex_class: usize,
    /// Number of distinct edge directions at the base point.
    pub node_count: usize,
    pub cells: Vec<LinkCell>,
}

/// A direction at the base vertex: a cell and nonnegative weights on its
/// unit edge directions, scaled so the combination has unit length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPoint {
    pub cell: usize,
    pub coeffs: Vec<f64>,
}

/// A point `[x, t]` of a κ-cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint<X> {
    pub direction: X,
    pub radius: f64,
}

impl<X> ConePoint<X> {
    pub fn distance(&self, other: &Self, kappa: Curvature, sep: impl Fn(&X, &X) -> f64) -> Result<f64> {
        let s = if self.radius == 0.0 || other.radius == 0.0 { 0.0 } else { sep(&self.direction, &other.direction) };
        cone_distance(kappa, s, self.radius, other.radius)
    }
}

/// Distance in the κ-cone between `[x, t]` and `[x′, t′]` with `d(x, x′) = link_sep`.
///
/// Half-angle forms of the three laws of cosines, which are exact at the
/// vertex and along the through-vertex path.
pub fn cone_distance(kappa: Curvature, link_sep: f64, t: f64, t2: f64) -> Result<f64> {
    if !(link_sep >= 0.0) || !(t >= 0.0) || !(t2 >= 0.0) || !t.is_finite() || !t2.is_finite() {
        return Err(Error::OutOfRange(format!("cone_distance({link_sep}, {t}, {t2})")));
    }
    let k = kappa.kappa();
    if k > 0.0 && t.max(t2) > kappa.diameter_bound() / 2.0 {
        return Err(Error::OutOfRange(format!("radius exceeds D/2 = {}", kappa.diameter_bound() / 2.0)));
    }
    if t == 0.0 {
        return Ok(t2);
    }
    if t2 == 0.0 {
        return Ok(t);
    }
    let sep = link_sep.min(PI);
    if sep == PI {
        return Ok(t + t2);
    }
    let h = (sep / 2.0).sin();
    let (a, b) = (t.min(t2), t.max(t2));
    if k == 0.0 {
        let g = b - a;
        return Ok((g * g + 4.0 * a * b * h * h).sqrt());
    }
    let s = k.abs().sqrt();
    if k < 0.0 {
        let u = (s * (b - a) / 2.0).sinh();
        let v = (u * u + (s * a).sinh() * (s * b).sinh() * h * h).sqrt();
        Ok(2.0 * v.asinh() / s)
    } else {
        let u = (s * (b - a) / 2.0).sin();
        let v = (u * u + (s * a).sin() * (s * b).sin() * h * h).sqrt();
        Ok(2.0 * v.min(1.0).asin() / s)
    }
}

/// Distance between `[x, ε]` points in the r-fold spherical cone over a space
/// where `d(x, x′) = D`: `cos⁻¹(1 − sin^{2r}ε (1 − cos D))`.
pub fn iterated_cone_distance(r: u32, epsilon: f64, d: f64) -> f64 {
    2.0 * (epsilon.sin().powi(r as i32) * (d / 2.0).sin()).asin()
}

/// Vertex angle between slots `a` and `b` of simplex `si` at slot `apex`.
fn corner(k: &ComplexK, si: usize, apex: usize, a: usize, b: usize) -> Result<f64> {
    let kappa = k.kappa();
    let v = &k.simplexes()[si].vertices;
    let d = |i: usize, j: usize| raw_distance(kappa.kappa(), v[i].coords(), v[j].coords());
    angle_from_sides(kappa, d(apex, a), d(apex, b), d(a, b))
}

/// Link of the vertex `v`.
pub fn link_at_vertex(k: &ComplexK, v: &PointRef) -> Result<LinkComplex> {
    let class = k.vertex_class_of(v)?;
    let base_point = k.vertex_point(class);
    let mut incid = k.vertex_incidences(class);
    incid.sort();
    let mut node_of: BTreeMap<u32, usize> = BTreeMap::new();
    let mut cells = Vec::with_capacity(incid.len());
    for (si, apex) in incid {
        let n = k.simplexes()[si].vertices.len();
        let slots: Vec<usize> = (0..n).filter(|&s| s != apex).collect();
        let mut nodes = Vec::with_capacity(slots.len());
        for &s in &slots {
            let orbit = k.orbit_of(si, (1 << apex) | (1 << s));
            let next = node_of.len();
            nodes.push(*node_of.entry(orbit).or_insert(next));
        }
        let mut angles = vec![vec![0.0; slots.len()]; slots.len()];
        for i in 0..slots.len() {
            for j in i + 1..slots.len() {
                let a = corner(k, si, apex, slots[i], slots[j])?;
                angles[i][j] = a;
                angles[j][i] = a;
            }
        }
        cells.push(LinkCell { simplex: k.simplexes()[si].id, apex_slot: apex, slots, nodes, angles });
    }
    Ok(LinkComplex { base_point, vertex_class: class, node_count: node_of.len(), cells })
}

impl LinkComplex {
    /// Dimension of the link: one less than the largest incident simplex.
    pub fn dimension(&self) -> usize {
        self.cells.iter().map(|c| c.slots.len()).max().unwrap_or(1).saturating_sub(1)
    }

    /// Multigraph form; cells of other dimensions are skipped.
    pub fn as_graph(&self) -> LinkGraph {
        let edges = self
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.slots.len() == 2)
            .map(|(i, c)| LinkEdge { a: c.nodes[0], b: c.nodes[1], weight: c.angles[0][1], cell: i })
            .collect();
        LinkGraph { node_count: self.node_count, edges }
    }

    /// Total corner angle around the base vertex.
    pub fn total_angle(&self) -> f64 {
        exact_sum(&self.as_graph().edges.iter().map(|e| e.weight).collect::<Vec<_>>())
    }

    /// The link realized as an `M_1` complex (one spherical simplex per cell).
    pub fn to_complex(&self, k: &ComplexK) -> Result<ComplexK> {
        let ambient = self.cells.iter().map(|c| c.slots.len()).max().unwrap_or(1).max(2);
        let mut specs = Vec::with_capacity(self.cells.len());
        for (ci, c) in self.cells.iter().enumerate() {
            let n = c.slots.len();
            let gram = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { c.angles[i][j].cos() });
            let l = gram.cholesky().ok_or_else(|| Error::Degenerate(format!("link cell {ci} is degenerate")))?.l();
            let vertices = (0..n)
                .map(|i| {
                    let mut row: Vec<f64> = (0..ambient).map(|j| if j < n { l[(i, j)] } else { 0.0 }).collect();
                    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    row.iter_mut().for_each(|x| *x /= norm);
                    ModelPoint::new(Curvature::SPHERICAL, row)
                })
                .collect::<Result<Vec<_>>>()?;
            specs.push(SimplexSpec::new(ci as SimplexId, vertices));
        }
        // identify cell faces whose faces in the complex are identified
        let mut groups: BTreeMap<u32, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
        for (ci, c) in self.cells.iter().enumerate() {
            let si = k.simplex_index(c.simplex)?;
            let n = c.slots.len();
            for sub in 1u32..(1 << n) {
                let local: Vec<usize> = (0..n).filter(|i| sub & (1 << i) != 0).collect();
                let mask = local.iter().fold(1u32 << c.apex_slot, |m, &i| m | (1 << c.slots[i]));
                groups.entry(k.orbit_of(si, mask)).or_default().push((ci, local));
            }
        }
        let mut gluings = Vec::new();
        for members in groups.values() {
            let (c0, ref l0) = members[0];
            let class_of = |ci: usize, i: usize| self.cells[ci].nodes[i];
            for (c1, l1) in &members[1..] {
                let face_b: Vec<usize> = l0
                    .iter()
                    .map(|&i| *l1.iter().find(|&&j| class_of(*c1, j) == class_of(c0, i)).expect("identified faces share directions"))
                    .collect();
                gluings.push(Gluing::new(c0 as SimplexId, l0.clone(), *c1 as SimplexId, face_b));
            }
        }
        build_complex(Curvature::SPHERICAL, specs, gluings)
    }

    /// Link point at angle `phi` from the first direction of a 2-dimensional corner cell.
    pub fn arc_point(&self, cell: usize, phi: f64) -> Result<LinkPoint> {
        let c = self.cells.get(cell).ok_or_else(|| Error::InvalidPoint(format!("no link cell {cell}")))?;
        if c.slots.len() != 2 {
            return Err(Error::Unsupported("arc points need a 1-dimensional link cell".into()));
        }
        let th = c.angles[0][1];
        if !(0.0..=th).contains(&phi) {
            return Err(Error::InvalidPoint(format!("angle {phi} outside [0, {th}]")));
        }
        let coeffs = if phi == 0.0 {
            vec![1.0, 0.0]
        } else if phi == th {
            vec![0.0, 1.0]
        } else {
            vec![(th - phi).sin() / th.sin(), phi.sin() / th.sin()]
        };
        Ok(LinkPoint { cell, coeffs })
    }

    /// Position of a 1-dimensional link point as `(cell, angle from first direction)`.
    fn arc_angle(&self, p: &LinkPoint) -> Result<f64> {
        let c = &self.cells[p.cell];
        if c.slots.len() != 2 {
            return Err(Error::Unsupported("arc position needs a 1-dimensional link cell".into()));
        }
        let th = c.angles[0][1];
        Ok(arc_phi(th, &p.coeffs))
    }

    /// Link distance between two points of a 1-dimensional link.
    pub fn arc_distance(&self, a: &LinkPoint, b: &LinkPoint) -> Result<f64> {
        let (pa, pb) = (self.arc_angle(a)?, self.arc_angle(b)?);
        let g = self.as_graph();
        let ca = &self.cells[a.cell];
        let cb = &self.cells[b.cell];
        let (ta, tb) = (ca.angles[0][1], cb.angles[0][1]);
        let mut best = if a.cell == b.cell { (pa - pb).abs() } else { f64::INFINITY };
        let seeds = [(ca.nodes[0], pa), (ca.nodes[1], ta - pa)];
        let dist = graph_dijkstra(&g, &seeds, None);
        best = best.min(dist[cb.nodes[0]] + pb).min(dist[cb.nodes[1]] + (tb - pb));
        Ok(best)
    }

    /// Point of the complex at distance `t` from the base vertex in direction `p`.
    pub fn exp(&self, k: &ComplexK, p: &LinkPoint, t: f64) -> Result<PointRef> {
        let c = self.cells.get(p.cell).ok_or_else(|| Error::InvalidPoint(format!("no link cell {}", p.cell)))?;
        let si = k.simplex_index(c.simplex)?;
        let kappa = k.kappa().kappa();
        let verts = &k.simplexes()[si].vertices;
        let n = verts.len();
        if t == 0.0 {
            return k.canonicalize(&PointRef::vertex(c.simplex, c.apex_slot, n));
        }
        let v = verts[c.apex_slot].coords();
        let (alpha, gamma) = exp_coefficients(kappa, t);
        let mut w = vec![0.0; n];
        w[c.apex_slot] = alpha;
        for (ci, &s) in p.coeffs.iter().zip(&c.slots) {
            if *ci == 0.0 {
                continue;
            }
            let ws = verts[s].coords();
            let lam = tangent_lambda(kappa, v, ws);
            let tang = tangent_towards(kappa, v, ws);
            let norm = model_space::tangent_norm(kappa, &tang);
            w[s] += gamma * ci / norm;
            w[c.apex_slot] -= gamma * ci * lam / norm;
        }
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) || w.iter().any(|x| *x < -1e-12 * sum) {
            return Err(Error::EpsilonTooLarge { epsilon: t, radius: star_radius(k, &self.base_point)? });
        }
        let bary: Vec<f64> = w.iter().map(|x| (x / sum).max(0.0)).collect();
        let s2: f64 = bary.iter().sum();
        let bary: Vec<f64> = bary.iter().map(|x| x / s2).collect();
        k.canonicalize(&PointRef::new(c.simplex, bary))
    }
}

fn arc_phi(th: f64, c: &[f64]) -> f64 {
    if c[1] == 0.0 {
        return 0.0;
    }
    if c[0] == 0.0 {
        return th;
    }
    // direction = c0 u0 + c1 u1 with unit u's at angle th: tan φ = c1 sin th / (c0 + c1 cos th)
    (c[1] * th.sin()).atan2(c[0] + c[1] * th.cos()).clamp(0.0, th)
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// Multi-source Dijkstra on a link graph, optionally ignoring one edge.
fn graph_dijkstra(g: &LinkGraph, seeds: &[(usize, f64)], skip: Option<usize>) -> Vec<f64> {
    graph_paths(g, seeds, skip).0
}

fn graph_paths(g: &LinkGraph, seeds: &[(usize, f64)], skip: Option<usize>) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.node_count];
    for (i, e) in g.edges.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        adj[e.a].push((e.b, i));
        if e.a != e.b {
            adj[e.b].push((e.a, i));
        }
    }
    let mut dist = vec![f64::INFINITY; g.node_count];
    let mut via: Vec<Option<(usize, usize)>> = vec![None; g.node_count];
    let mut heap = BinaryHeap::new();
    for &(s, d) in seeds {
        if d < dist[s] {
            dist[s] = d;
            heap.push(Item(d, s));
        }
    }
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, ei) in &adj[u] {
            let nd = d + g.edges[ei].weight;
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some((u, ei));
                heap.push(Item(nd, v));
            }
        }
    }
    (dist, via)
}

/// Shortest simple cycle of a weighted multigraph, with its edges.
///
/// Removes each edge in turn and closes the shortest path between its ends.
/// The length is the correctly rounded sum of the cycle's weights.
pub fn shortest_injective_cycle(g: &LinkGraph) -> Option<LinkLoop> {
    let mut best: Option<(f64, LinkLoop)> = None;
    for (i, e) in g.edges.iter().enumerate() {
        let (approx, edges) = if e.a == e.b {
            (e.weight, vec![(i, true)])
        } else {
            let (dist, via) = graph_paths(g, &[(e.a, 0.0)], Some(i));
            if !dist[e.b].is_finite() {
                continue;
            }
            // walk back from b to a, then close with edge i (b -> a)
            let mut path = Vec::new();
            let mut cur = e.b;
            while cur != e.a {
                let (prev, ei) = via[cur].expect("reached nodes have a predecessor");
                path.push((ei, g.edges[ei].a == prev));
                cur = prev;
            }
            path.reverse();
            path.push((i, false));
            (dist[e.b] + e.weight, path)
        };
        if best.as_ref().is_none_or(|(b, _)| approx < *b) {
            let length = exact_sum(&edges.iter().map(|(ei, _)| g.edges[*ei].weight).collect::<Vec<_>>());
            best = Some((approx, LinkLoop { edges, length }));
        }
    }
    best.map(|(_, l)| l)
}

/// Length of the shortest simple cycle; `+∞` for a forest.
pub fn shortest_injective_loop(g: &LinkGraph) -> f64 {
    shortest_injective_cycle(g).map_or(f64::INFINITY, |l| l.length)
}

/// Distance from `v` to the totally geodesic span of `face` (a lower bound
/// for the distance to the face itself).
fn distance_to_span(kappa: f64, v: &[f64], face: &[&[f64]]) -> f64 {
    if face.len() == 1 {
        return raw_distance(kappa, v, face[0]);
    }
    let (vecs, target): (Vec<Vec<f64>>, Vec<f64>) = if kappa == 0.0 {
        let o = face[0];
        let vecs = face[1..].iter().map(|w| w.iter().zip(o).map(|(a, b)| a - b).collect()).collect();
        (vecs, v.iter().zip(o).map(|(a, b)| a - b).collect())
    } else {
        (face.iter().map(|w| w.to_vec()).collect(), v.to_vec())
    };
    let f = |a: &[f64], b: &[f64]| if kappa == 0.0 { a.iter().zip(b).map(|(x, y)| x * y).sum() } else { form(kappa, a, b) };
    let m = vecs.len();
    let g = DMatrix::from_fn(m, m, |i, j| f(&vecs[i], &vecs[j]));
    let rhs = nalgebra::DVector::from_fn(m, |i, _| f(&vecs[i], &target));
    let Some(c) = g.lu().solve(&rhs) else {
        return 0.0;
    };
    let mut perp = target.clone();
    for (ci, w) in c.iter().zip(&vecs) {
        for (p, x) in perp.iter_mut().zip(w) {
            *p -= ci * x;
        }
    }
    let q = f(&perp, &perp).max(0.0).sqrt();
    if kappa == 0.0 {
        q
    } else {
        let r = 1.0 / kappa.abs().sqrt();
        if kappa > 0.0 {
            r * (q / r).min(1.0).asin()
        } else {
            r * (q / r).asinh()
        }
    }
}

/// Radius within which pairs of points around `v` are joined inside its
/// closed star: half the smallest distance from `v` to an opposite face.
pub fn star_radius(k: &ComplexK, v: &PointRef) -> Result<f64> {
    let class = k.vertex_class_of(v)?;
    let kappa = k.kappa().kappa();
    let mut best = f64::INFINITY;
    for (si, apex) in k.vertex_incidences(class) {
        let verts = &k.simplexes()[si].vertices;
        if verts.len() < 2 {
            continue;
        }
        let face: Vec<&[f64]> = verts.iter().enumerate().filter(|(i, _)| *i != apex).map(|(_, p)| p.coords()).collect();
        best = best.min(distance_to_span(kappa, verts[apex].coords(), &face));
    }
    Ok(best / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometrySample {
    pub radii: [f64; 2],
    pub link_separation: f64,
    pub measured: f64,
    pub predicted: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalIsometryReport {
    pub vertex: PointRef,
    pub epsilon: f64,
    pub star_radius: f64,
    pub samples: usize,
    pub max_discrepancy: f64,
    /// Largest distance budget among the samples.
    pub budget: f64,
    /// Every sample's discrepancy lies within its own budget.
    pub within_budget: bool,
    pub worst: Option<IsometrySample>,
}

/// Random point of a link, uniform over cells then over the cell's simplex of directions.
fn random_link_point(link: &LinkComplex, rng: &mut ChaCha8Rng) -> LinkPoint {
    let cell = rng.random_range(0..link.cells.len());
    let c = &link.cells[cell];
    let n = c.slots.len();
    let mut w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    // normalize the tangent combination to unit length using the corner angles
    let q: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| w[i] * w[j] * if i == j { 1.0 } else { c.angles[i][j].cos() }).sum();
    let s = q.sqrt();
    w.iter_mut().for_each(|x| *x /= s);
    LinkPoint { cell, coeffs: w }
}

/// Compares intrinsic distances near `v` with the cone over its link.
pub fn local_isometry_check(k: &ComplexK, v: &PointRef, epsilon: f64, samples: usize, seed: u64, mesh: f64) -> Result<LocalIsometryReport> {
    let link = link_at_vertex(k, v)?;
    let radius = star_radius(k, v)?;
    if !(epsilon > 0.0) || epsilon > radius {
        return Err(Error::EpsilonTooLarge { epsilon, radius });
    }
    let kappa = k.kappa();
    let one_dim = link.cells.iter().all(|c| c.slots.len() <= 2) && link.cells.iter().any(|c| c.slots.len() == 2);
    let link_k = if one_dim { None } else { Some(link.to_complex(k)?) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LocalIsometryReport {
        vertex: link.base_point.clone(),
        epsilon,
        star_radius: radius,
        samples,
        max_discrepancy: 0.0,
        budget: 0.0,
        within_budget: true,
        worst: None,
    };
    for _ in 0..samples {
        let (a, b) = if one_dim {
            let pick = |rng: &mut ChaCha8Rng| {
                let g: Vec<usize> = (0..link.cells.len()).filter(|&i| link.cells[i].slots.len() == 2).collect();
                let cell = g[rng.random_range(0..g.len())];
                let th = link.cells[cell].angles[0][1];
                link.arc_point(cell, rng.random::<f64>() * th).expect("angle in range")
            };
            (pick(&mut rng), pick(&mut rng))
        } else {
            (random_link_point(&link, &mut rng), random_link_point(&link, &mut rng))
        };
        let t1 = epsilon * (1.0 - rng.random::<f64>());
        let t2 = epsilon * (1.0 - rng.random::<f64>());
        let sep = match &link_k {
            None => link.arc_distance(&a, &b)?,
            Some(lk) => {
                let pa = PointRef::new(a.cell as SimplexId, spherical_bary(&a.coeffs));
                let pb = PointRef::new(b.cell as SimplexId, spherical_bary(&b.coeffs));
                lk.distance(&pa, &pb, mesh)?.upper_bound
            }
        };
        let predicted = cone_distance(kappa, sep, t1, t2)?;
        let (x, y) = (link.exp(k, &a, t1)?, link.exp(k, &b, t2)?);
        let bound = k.distance(&x, &y, mesh)?;
        let slack = bound.budget + 1e-9;
        let disc = (bound.upper_bound - predicted).abs();
        if disc > slack {
            report.within_budget = false;
        }
        report.budget = report.budget.max(slack);
        if report.worst.is_none() || disc > report.max_discrepancy {
            report.max_discrepancy = disc;
            report.worst = Some(IsometrySample { radii: [t1, t2], link_separation: sep, measured: bound.upper_bound, predicted, budget: slack });
        }
    }
    Ok(report)
}

/// Barycentric coordinates in a link cell of a direction given by tangent weights.
fn spherical_bary(coeffs: &[f64]) -> Vec<f64> {
    let s: f64 = coeffs.iter().sum();
    coeffs.iter().map(|c| c / s).collect()
}

/// Points of the star of a vertex, located from ambient coordinates (used by tests).
pub fn locate_in_simplex(k: &ComplexK, simplex: SimplexId, coords: &[f64]) -> Option<PointRef> {
    let si = k.simplex_index(simplex).ok()?;
    bary_in(k, si, coords).map(|b| PointRef::new(simplex, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::generators::Generator;

    #[test]
    fn cone_distance_examples() {
        let f = Curvature::FLAT;
        assert!((cone_distance(f, PI / 2.0, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cone_distance(f, 3.0 * PI / 2.0, 1.0, 1.0).unwrap(), 2.0);
        let h = cone_distance(Curvature::HYPERBOLIC, PI / 2.0, 0.01, 0.01).unwrap();
        assert!((h - 2.0 * ((PI / 4.0).sin() * 0.01f64.sinh()).asinh()).abs() < 1e-16);
        assert!((h - 0.0141421).abs() < 5e-7);
        let s = cone_distance(Curvature::SPHERICAL, PI / 2.0, PI / 4.0, PI / 4.0).unwrap();
        assert!((s - PI / 3.0).abs() < 1e-15);
        assert!(cone_distance(Curvature::SPHERICAL, 1.0, 2.0, 0.1).is_err());
        assert!(cone_distance(f, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn iterated_examples() {
        assert_eq!(iterated_cone_distance(0, 0.3, 1.2), 1.2);
        assert!((iterated_cone_distance(3, PI / 2.0, 1.2) - 1.2).abs() < 1e-15);
        let v = iterated_cone_distance(2, 0.1, PI / 2.0);
        assert!((v - (1.0 - 0.1f64.sin().powi(4)).acos()).abs() < 1e-9);
        assert!((v - 0.0140951).abs() < 1e-7);
    }

    #[test]
    fn cone_apex_link() {
        let s = Generator::parse("cone(4.71238898038469,3,2.0)").unwrap().build().unwrap();
        let link = link_at_vertex(&s.complex, s.center.as_ref().unwrap()).unwrap();
        let g = link.as_graph();
        assert_eq!(g.node_count, 3);
        assert_eq!(g.edges.len(), 3);
        assert!((link.total_angle() - 1.5 * PI).abs() < 1e-12);
        assert!((shortest_injective_loop(&g) - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn triangle_corner_link() {
        let p = |x: f64, y: f64| ModelPoint::new(Curvature::FLAT, vec![x, y]).unwrap();
        let k = build_complex(Curvature::FLAT, vec![SimplexSpec::new(0, vec![p(0.0, 0.0), p(1.0, 0.0), p(0.5, 0.75f64.sqrt())])], vec![]).unwrap();
        let link = link_at_vertex(&k, &PointRef::vertex(0, 0, 3)).unwrap();
        let g = link.as_graph();
        assert_eq!(g.edges.len(), 1);
        assert!((g.edges[0].weight - PI / 3.0).abs() < 1e-15);
        assert_eq!(shortest_injective_loop(&g), f64::INFINITY);
        assert!(link_at_vertex(&k, &PointRef::new(0, vec![0.5, 0.5, 0.0])).is_err());
    }

    #[test]
    fn multigraph_cycles() {
        let e = |a, b, w| LinkEdge { a, b, weight: w, cell: 0 };
        let two = LinkGraph { node_count: 2, edges: vec![e(0, 1, 1.0), e(0, 1, 2.0)] };
        assert_eq!(shortest_injective_loop(&two), 3.0);
        let lp = LinkGraph { node_count: 1, edges: vec![e(0, 0, 0.5)] };
        assert_eq!(shortest_injective_loop(&lp), 0.5);
        let q = LinkGraph { node_count: 4, edges: (0..4).map(|i| e(i, (i + 1) % 4, PI / 2.0)).collect() };
        assert_eq!(shortest_injective_loop(&q), 2.0 * PI);
    }

    #[test]
    fn exp_reaches_radius() {
        let s = Generator::parse("cone(4.71238898038469,3,2.0)").unwrap().build().unwrap();
        let k = &s.complex;
        let link = link_at_vertex(k, s.center.as_ref().unwrap()).unwrap();
        let p = link.arc_point(1, 0.3).unwrap();
        let x = link.exp(k, &p, 0.25).unwrap();
        assert!((s.chart_radius(&x).unwrap() - 0.25).abs() < 1e-14);
        assert!((link.arc_angle(&p).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_exp_reaches_radius() {
        let s = Generator::HyperbolicFan { kappa: -1.0, sectors: 5, apex_angle: 1.0, radius: 1.0 }.build().unwrap();
        let link = link_at_vertex(&s.complex, s.center.as_ref().unwrap()).unwrap();
        assert!((link.total_angle() - 5.0).abs() < 1e-12);
        let x = link.exp(&s.complex, &link.arc_point(2, 0.4).unwrap(), 0.3).unwrap();
        assert!((s.chart_radius(&x).unwrap() - 0.3).abs() < 1e-13);
    }

    #[test]
    fn star_radius_of_tiling_vertex() {
        let s = Generator::PlaneTiling { radius: 2.0 }.build().unwrap();
        let r = star_radius(&s.complex, s.center.as_ref().unwrap()).unwrap();
        assert!((r - 0.5f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn link_export_is_a_circle() {
        let s = Generator::PlaneTiling { radius: 2.0 }.build().unwrap();
        let link = link_at_vertex(&s.complex, s.center.as_ref().unwrap()).unwrap();
        let lk = link.to_complex(&s.complex).unwrap();
        assert_eq!(lk.simplexes().len(), 6);
        assert_eq!(lk.vertex_count(), 6);
        assert_eq!(lk.kappa(), Curvature::SPHERICAL);
    }
}
