//! `M_κ`-simplicial complexes: geodesic simplexes glued along isometric faces.
//!
//! Faces are tracked as `(simplex index, slot mask)` pairs. Every gluing
//! identifies each sub-face of the glued face with its image, and a
//! union-find over all such pairs gives the face orbits (the quotient map).
//! Points are barycentric coordinates in one simplex; on curved models the
//! ambient combination `Σ βᵢ wᵢ` is rescaled onto the model, which commutes
//! with the linear isometries used by gluings.

pub mod engine;
pub mod generators;
pub mod interchange;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_space::{self, general_position_check, raw_distance, Curvature, ModelPoint};

pub use engine::{DistanceBound, DistanceEngine, SourceField};

/// Absolute tolerance on edge lengths for gluings and shape classes.
pub const GLUING_TOLERANCE: f64 = 1e-9;

/// Tolerance on barycentric coordinates.
pub const BARY_TOLERANCE: f64 = 1e-12;

const MAX_VERTICES: usize = 16;

pub type SimplexId = u32;

/// One geodesic simplex `S_λ`, given by its vertices in the model space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexSpec {
    pub id: SimplexId,
    pub vertices: Vec<ModelPoint>,
}

impl SimplexSpec {
    pub fn new(id: SimplexId, vertices: Vec<ModelPoint>) -> Self {
        SimplexSpec { id, vertices }
    }

    pub fn dimension(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }
}

/// Identifies `face_a` of one simplex with `face_b` of another, slot by slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub simplex_a: SimplexId,
    pub face_a: Vec<usize>,
    pub simplex_b: SimplexId,
    pub face_b: Vec<usize>,
}

impl Gluing {
    pub fn new(simplex_a: SimplexId, face_a: Vec<usize>, simplex_b: SimplexId, face_b: Vec<usize>) -> Self {
        Gluing { simplex_a, face_a, simplex_b, face_b }
    }
}

/// A point of the complex: a simplex and barycentric coordinates in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRef {
    pub simplex: SimplexId,
    pub bary: Vec<f64>,
}

impl PointRef {
    pub fn new(simplex: SimplexId, bary: Vec<f64>) -> Self {
        PointRef { simplex, bary }
    }

    /// The `slot`-th vertex of a simplex with `len` vertices.
    pub fn vertex(simplex: SimplexId, slot: usize, len: usize) -> Self {
        let mut bary = vec![0.0; len];
        bary[slot] = 1.0;
        PointRef { simplex, bary }
    }

    pub(crate) fn support(&self) -> u32 {
        self.bary.iter().enumerate().filter(|(_, b)| **b > 0.0).fold(0, |m, (i, _)| m | (1 << i))
    }

    /// Whether two canonical points agree within [`BARY_TOLERANCE`].
    pub fn approx_eq(&self, other: &PointRef) -> bool {
        self.simplex == other.simplex
            && self.bary.len() == other.bary.len()
            && self.bary.iter().zip(&other.bary).all(|(a, b)| (a - b).abs() <= BARY_TOLERANCE)
    }
}

/// Isometry class of a face: dimension plus its canonical distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub dimension: usize,
    pub edge_length_matrix: Vec<Vec<f64>>,
}

impl ShapeClass {
    fn matches(&self, other: &[Vec<f64>]) -> bool {
        let n = self.edge_length_matrix.len();
        if other.len() != n {
            return false;
        }
        permutations(n).into_iter().any(|perm| {
            (0..n).all(|i| (0..n).all(|j| (self.edge_length_matrix[i][j] - other[perm[i]][perm[j]]).abs() <= GLUING_TOLERANCE))
        })
    }
}

pub(crate) type FaceKey = (usize, u32);

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// A validated `M_κ`-simplicial complex.
pub struct ComplexK {
    kappa: Curvature,
    simplexes: Vec<SimplexSpec>,
    gluings: Vec<Gluing>,
    index: HashMap<SimplexId, usize>,
    face_offset: Vec<usize>,
    face_orbit: Vec<u32>,
    orbits: Vec<Vec<FaceKey>>,
    vertex_class: Vec<Vec<usize>>,
    vertex_orbit: Vec<u32>,
    engines: Mutex<BTreeMap<u32, Arc<DistanceEngine>>>,
}

impl Clone for ComplexK {
    fn clone(&self) -> Self {
        ComplexK {
            kappa: self.kappa,
            simplexes: self.simplexes.clone(),
            gluings: self.gluings.clone(),
            index: self.index.clone(),
            face_offset: self.face_offset.clone(),
            face_orbit: self.face_orbit.clone(),
            orbits: self.orbits.clone(),
            vertex_class: self.vertex_class.clone(),
            vertex_orbit: self.vertex_orbit.clone(),
            engines: Mutex::new(BTreeMap::new()),
        }
    }
}

impl std::fmt::Debug for ComplexK {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ComplexK")
            .field("kappa", &self.kappa)
            .field("simplexes", &self.simplexes.len())
            .field("gluings", &self.gluings.len())
            .field("vertices", &self.vertex_orbit.len())
            .finish()
    }
}

fn pairwise(points: &[&[f64]], kappa: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = raw_distance(kappa, points[i], points[j]);
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}

fn mask_of(slots: &[usize]) -> u32 {
    slots.iter().fold(0, |m, s| m | (1 << s))
}

pub(crate) fn slots_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Builds and validates a complex from its simplexes and gluings.
pub fn build_complex(kappa: Curvature, specs: Vec<SimplexSpec>, gluings: Vec<Gluing>) -> Result<ComplexK> {
    ComplexK::build(kappa, specs, gluings)
}

impl ComplexK {
    pub fn build(kappa: Curvature, mut specs: Vec<SimplexSpec>, gluings: Vec<Gluing>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyComplex);
        }
        specs.sort_by_key(|s| s.id);
        let mut index = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.id, i).is_some() {
                return Err(Error::DuplicateId(s.id));
            }
        }
        let k = kappa.kappa();
        let ambient = specs[0].vertices.first().map(|v| v.coords().len()).unwrap_or(0);
        for s in &specs {
            if s.vertices.is_empty() || s.vertices.len() > MAX_VERTICES {
                return Err(Error::OutOfRange(format!("simplex {} has {} vertices", s.id, s.vertices.len())));
            }
            for v in &s.vertices {
                if v.kappa() != kappa {
                    return Err(Error::CurvatureMismatch { a: k, b: v.kappa().kappa() });
                }
                if v.coords().len() != ambient {
                    return Err(Error::DimensionMismatch { expected: ambient, found: v.coords().len() });
                }
            }
            if k > 0.0 {
                let bound = kappa.diameter_bound();
                let coords: Vec<&[f64]> = s.vertices.iter().map(|v| v.coords()).collect();
                let m = pairwise(&coords, k);
                let worst = m.iter().flatten().cloned().fold(0.0, f64::max);
                if worst >= bound {
                    return Err(Error::SimplexTooLarge { id: s.id, distance: worst, bound });
                }
            }
            if !general_position_check(&s.vertices) {
                return Err(Error::NotGeneralPosition { id: s.id });
            }
        }

        let mut face_offset = Vec::with_capacity(specs.len());
        let mut total = 0usize;
        for s in &specs {
            face_offset.push(total);
            total += 1 << s.vertices.len();
        }
        let key = |si: usize, mask: u32| (face_offset[si] + mask as usize) as u32;

        let mut dsu = Dsu::new(total);
        for (gi, g) in gluings.iter().enumerate() {
            let bad = |reason: String| Error::InvalidGluing { index: gi, reason };
            let ia = *index.get(&g.simplex_a).ok_or(Error::UnknownSimplex(g.simplex_a))?;
            let ib = *index.get(&g.simplex_b).ok_or(Error::UnknownSimplex(g.simplex_b))?;
            if g.face_a.len() != g.face_b.len() {
                return Err(bad(format!("face lengths differ ({} vs {})", g.face_a.len(), g.face_b.len())));
            }
            if g.face_a.is_empty() {
                return Err(bad("empty face".into()));
            }
            for (si, face) in [(ia, &g.face_a), (ib, &g.face_b)] {
                let n = specs[si].vertices.len();
                if face.iter().any(|&s| s >= n) {
                    return Err(bad(format!("slot out of range for simplex {}", specs[si].id)));
                }
                if mask_of(face).count_ones() as usize != face.len() {
                    return Err(bad("repeated slot in face".into()));
                }
            }
            let pa: Vec<&[f64]> = g.face_a.iter().map(|&s| specs[ia].vertices[s].coords()).collect();
            let pb: Vec<&[f64]> = g.face_b.iter().map(|&s| specs[ib].vertices[s].coords()).collect();
            let (ma, mb) = (pairwise(&pa, k), pairwise(&pb, k));
            let mismatch = ma.iter().flatten().zip(mb.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if mismatch > GLUING_TOLERANCE {
                return Err(Error::NonIsometricGluing { index: gi, mismatch });
            }
            let len = g.face_a.len();
            for sub in 1u32..(1 << len) {
                let (mut sa, mut sb) = (0u32, 0u32);
                for p in 0..len {
                    if sub & (1 << p) != 0 {
                        sa |= 1 << g.face_a[p];
                        sb |= 1 << g.face_b[p];
                    }
                }
                dsu.union(key(ia, sa), key(ib, sb));
            }
        }

        // orbit ids in (simplex index, mask) order
        let mut face_orbit = vec![u32::MAX; total];
        let mut root_orbit: HashMap<u32, u32> = HashMap::new();
        let mut orbits: Vec<Vec<FaceKey>> = Vec::new();
        for (si, s) in specs.iter().enumerate() {
            for mask in 1u32..(1 << s.vertices.len()) {
                let r = dsu.find(key(si, mask));
                let id = *root_orbit.entry(r).or_insert_with(|| {
                    orbits.push(Vec::new());
                    (orbits.len() - 1) as u32
                });
                face_orbit[key(si, mask) as usize] = id;
                orbits[id as usize].push((si, mask));
            }
        }
        for members in &mut orbits {
            members.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| slots_of(a.1).cmp(&slots_of(b.1))));
        }

        let mut vertex_orbit = Vec::new();
        let mut class_of_orbit: HashMap<u32, usize> = HashMap::new();
        let mut vertex_class = Vec::with_capacity(specs.len());
        for (si, s) in specs.iter().enumerate() {
            let mut classes = Vec::with_capacity(s.vertices.len());
            for slot in 0..s.vertices.len() {
                let o = face_orbit[key(si, 1 << slot) as usize];
                let c = *class_of_orbit.entry(o).or_insert_with(|| {
                    vertex_orbit.push(o);
                    vertex_orbit.len() - 1
                });
                if let Some(prev) = classes.iter().position(|&x| x == c) {
                    return Err(Error::SelfIdentification { id: s.id, slot_a: prev, slot_b: slot });
                }
                classes.push(c);
            }
            vertex_class.push(classes);
        }

        // the closure must remain isometric along vertex-class correspondences
        for members in orbits.iter().filter(|m| m.len() > 1) {
            let (r_si, r_mask) = members[0];
            let r_slots = slots_of(r_mask);
            let r_classes: Vec<usize> = r_slots.iter().map(|&s| vertex_class[r_si][s]).collect();
            let rp: Vec<&[f64]> = r_slots.iter().map(|&s| specs[r_si].vertices[s].coords()).collect();
            let rm = pairwise(&rp, k);
            for &(si, mask) in &members[1..] {
                let slots = slots_of(mask);
                let mut mapped = Vec::with_capacity(slots.len());
                for c in &r_classes {
                    match slots.iter().find(|&&s| vertex_class[si][s] == *c) {
                        Some(&s) => mapped.push(s),
                        None => {
                            return Err(Error::InvalidGluing {
                                index: usize::MAX,
                                reason: format!("inconsistent face identification in simplex {}", specs[si].id),
                            })
                        }
                    }
                }
                let mp: Vec<&[f64]> = mapped.iter().map(|&s| specs[si].vertices[s].coords()).collect();
                let mm = pairwise(&mp, k);
                let mismatch = rm.iter().flatten().zip(mm.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                if mismatch > GLUING_TOLERANCE * members.len() as f64 {
                    return Err(Error::NonIsometricGluing { index: usize::MAX, mismatch });
                }
            }
        }

        let mut conn = Dsu::new(specs.len());
        for g in &gluings {
            conn.union(index[&g.simplex_a] as u32, index[&g.simplex_b] as u32);
        }
        let root = conn.find(0);
        for (i, s) in specs.iter().enumerate() {
            if conn.find(i as u32) != root {
                return Err(Error::Disconnected { root: specs[0].id, id: s.id });
            }
        }

        Ok(ComplexK {
            kappa,
            simplexes: specs,
            gluings,
            index,
            face_offset,
            face_orbit,
            orbits,
            vertex_class,
            vertex_orbit,
            engines: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn kappa(&self) -> Curvature {
        self.kappa
    }

    pub fn simplexes(&self) -> &[SimplexSpec] {
        &self.simplexes
    }

    pub fn gluings(&self) -> &[Gluing] {
        &self.gluings
    }

    /// Largest simplex dimension.
    pub fn dimension(&self) -> usize {
        self.simplexes.iter().map(|s| s.dimension()).max().unwrap_or(0)
    }

    /// Dimension of the ambient model the vertices live in.
    pub fn model_dimension(&self) -> usize {
        self.simplexes[0].vertices[0].dim()
    }

    pub fn simplex_index(&self, id: SimplexId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownSimplex(id))
    }

    pub fn simplex(&self, id: SimplexId) -> Result<&SimplexSpec> {
        Ok(&self.simplexes[self.simplex_index(id)?])
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_orbit.len()
    }

    /// Vertex class of each slot of the simplex at `index`.
    pub fn vertex_classes(&self, index: usize) -> &[usize] {
        &self.vertex_class[index]
    }

    pub(crate) fn orbit_of(&self, si: usize, mask: u32) -> u32 {
        self.face_orbit[self.face_offset[si] + mask as usize]
    }

    pub(crate) fn orbit_members(&self, orbit: u32) -> &[FaceKey] {
        &self.orbits[orbit as usize]
    }

    pub(crate) fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    /// `(simplex index, slot)` pairs at which a vertex class occurs.
    pub fn vertex_incidences(&self, class: usize) -> Vec<(usize, usize)> {
        self.orbits[self.vertex_orbit[class] as usize]
            .iter()
            .map(|&(si, mask)| (si, mask.trailing_zeros() as usize))
            .collect()
    }

    /// Canonical point for a vertex class.
    pub fn vertex_point(&self, class: usize) -> PointRef {
        let (si, mask) = self.orbits[self.vertex_orbit[class] as usize][0];
        PointRef::vertex(self.simplexes[si].id, mask.trailing_zeros() as usize, self.simplexes[si].vertices.len())
    }

    /// Vertex class of a canonical point that is a vertex.
    pub fn vertex_class_of(&self, p: &PointRef) -> Result<usize> {
        let c = self.canonicalize(p)?;
        let support = c.support();
        if support.count_ones() != 1 {
            return Err(Error::NotAVertex);
        }
        let si = self.simplex_index(c.simplex)?;
        Ok(self.vertex_class[si][support.trailing_zeros() as usize])
    }

    /// Orbit-minimal representative of a point.
    pub fn canonicalize(&self, p: &PointRef) -> Result<PointRef> {
        let si = self.simplex_index(p.simplex)?;
        let n = self.simplexes[si].vertices.len();
        if p.bary.len() != n {
            return Err(Error::InvalidPoint(format!("expected {n} barycentric coordinates, got {}", p.bary.len())));
        }
        if p.bary.iter().any(|b| !b.is_finite() || *b < -BARY_TOLERANCE) {
            return Err(Error::InvalidPoint(format!("barycentric coordinates outside the simplex: {:?}", p.bary)));
        }
        let sum: f64 = p.bary.iter().sum();
        if (sum - 1.0).abs() > BARY_TOLERANCE * n as f64 {
            return Err(Error::InvalidPoint(format!("barycentric coordinates sum to {sum}")));
        }
        let mut bary: Vec<f64> = p.bary.iter().map(|&b| if b < BARY_TOLERANCE { 0.0 } else { b }).collect();
        let s: f64 = bary.iter().sum();
        if (s - 1.0).abs() > 1e-14 {
            bary.iter_mut().for_each(|b| *b /= s);
        }
        let q = PointRef { simplex: p.simplex, bary };
        let support = q.support();
        let orbit = self.orbit_of(si, support);
        let (ri, rmask) = self.orbits[orbit as usize][0];
        if ri == si {
            return Ok(q);
        }
        Ok(PointRef { simplex: self.simplexes[ri].id, bary: self.transfer(si, &q.bary, ri, rmask) })
    }

    /// Maps barycentric coordinates supported on a face of `from` to the
    /// identified face `(to, to_mask)`.
    fn transfer(&self, from: usize, bary: &[f64], to: usize, to_mask: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.simplexes[to].vertices.len()];
        for (slot, &b) in bary.iter().enumerate() {
            if b > 0.0 {
                let c = self.vertex_class[from][slot];
                let t = slots_of(to_mask).into_iter().find(|&s| self.vertex_class[to][s] == c).expect("identified faces share vertex classes");
                out[t] = b;
            }
        }
        out
    }

    /// All simplexes containing a canonical point, with its coordinates in each.
    pub(crate) fn containing(&self, canonical: &PointRef) -> Vec<(usize, Vec<f64>)> {
        let si = self.index[&canonical.simplex];
        let orbit = self.orbit_of(si, canonical.support());
        self.orbits[orbit as usize]
            .iter()
            .map(|&(ti, tmask)| {
                let b = if ti == si { canonical.bary.clone() } else { self.transfer(si, &canonical.bary, ti, tmask) };
                (ti, b)
            })
            .collect()
    }

    /// Ambient model coordinates of barycentric coordinates in a simplex.
    pub(crate) fn embed(&self, si: usize, bary: &[f64]) -> Vec<f64> {
        let verts = &self.simplexes[si].vertices;
        let len = verts[0].coords().len();
        let mut x = vec![0.0; len];
        for (b, v) in bary.iter().zip(verts) {
            if *b != 0.0 {
                for (xi, ci) in x.iter_mut().zip(v.coords()) {
                    *xi += b * ci;
                }
            }
        }
        if self.kappa.kappa() == 0.0 {
            x
        } else {
            model_space::normalize(self.kappa.kappa(), &x).expect("convex combination stays on the model")
        }
    }

    /// Model point of `p` in the chart of its canonical simplex.
    pub fn model_point(&self, p: &PointRef) -> Result<ModelPoint> {
        let c = self.canonicalize(p)?;
        let si = self.simplex_index(c.simplex)?;
        Ok(ModelPoint::from_raw(self.kappa, self.embed(si, &c.bary)))
    }

    /// Model distance between two points sharing a simplex (minimum over shared simplexes).
    pub fn local_distance(&self, a: &PointRef, b: &PointRef) -> Result<f64> {
        let ca = self.canonicalize(a)?;
        let cb = self.canonicalize(b)?;
        self.local_distance_canonical(&ca, &cb).ok_or(Error::NoSharedSimplex)
    }

    pub(crate) fn local_distance_canonical(&self, a: &PointRef, b: &PointRef) -> Option<f64> {
        let ha = self.containing(a);
        let hb = self.containing(b);
        let k = self.kappa.kappa();
        let mut best: Option<f64> = None;
        for (si, ba) in &ha {
            if let Some((_, bb)) = hb.iter().find(|(ti, _)| ti == si) {
                let d = raw_distance(k, &self.embed(*si, ba), &self.embed(*si, bb));
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
        best
    }

    /// Length of a chain whose consecutive points share a simplex.
    pub fn chain_length(&self, chain: &[PointRef]) -> Result<f64> {
        let canon: Vec<PointRef> = chain.iter().map(|p| self.canonicalize(p)).collect::<Result<_>>()?;
        let legs: Vec<f64> = canon
            .windows(2)
            .map(|w| self.local_distance_canonical(&w[0], &w[1]).ok_or(Error::NoSharedSimplex))
            .collect::<Result<_>>()?;
        // correctly rounded, so a reversed chain has the same length
        Ok(crate::numeric::exact_sum(&legs))
    }

    /// Point at arclength fraction `t` along a chain whose consecutive points
    /// share a simplex.
    pub fn chain_point(&self, chain: &[PointRef], t: f64) -> Result<PointRef> {
        if chain.is_empty() || !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("chain position {t} on a chain of {} points", chain.len())));
        }
        let canon: Vec<PointRef> = chain.iter().map(|p| self.canonicalize(p)).collect::<Result<_>>()?;
        let mut lens = Vec::with_capacity(canon.len().saturating_sub(1));
        for w in canon.windows(2) {
            lens.push(self.local_distance_canonical(&w[0], &w[1]).ok_or(Error::NoSharedSimplex)?);
        }
        let total: f64 = lens.iter().sum();
        let mut left = t * total;
        for (i, &l) in lens.iter().enumerate() {
            if left <= l && l > 0.0 {
                return self.segment_point(&canon[i], &canon[i + 1], l, left / l);
            }
            left -= l;
        }
        Ok(canon.last().expect("nonempty").clone())
    }

    fn segment_point(&self, a: &PointRef, b: &PointRef, d: f64, s: f64) -> Result<PointRef> {
        let ha = self.containing(a);
        let hb = self.containing(b);
        let k = self.kappa.kappa();
        for (si, ba) in &ha {
            let Some((_, bb)) = hb.iter().find(|(ti, _)| ti == si) else {
                continue;
            };
            let bary: Vec<f64> = if k == 0.0 {
                ba.iter().zip(bb).map(|(x, y)| x + s * (y - x)).collect()
            } else {
                let x = model_space::raw_geodesic(k, &self.embed(*si, ba), &self.embed(*si, bb), d, s);
                generators::bary_in(self, *si, &x).ok_or_else(|| Error::InvalidPoint("geodesic left its simplex".into()))?
            };
            return self.canonicalize(&PointRef::new(self.simplexes[*si].id, bary));
        }
        Err(Error::NoSharedSimplex)
    }

    /// The distinct isometry classes of faces of all dimensions.
    pub fn shapes(&self) -> Vec<ShapeClass> {
        let k = self.kappa.kappa();
        let mut classes: Vec<ShapeClass> = Vec::new();
        let mut by_dim: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for members in &self.orbits {
            let (si, mask) = members[0];
            let coords: Vec<&[f64]> = slots_of(mask).iter().map(|&s| self.simplexes[si].vertices[s].coords()).collect();
            let m = pairwise(&coords, k);
            let dim = coords.len() - 1;
            let bucket = by_dim.entry(dim).or_default();
            if bucket.iter().any(|&ci| classes[ci].matches(&m)) {
                continue;
            }
            bucket.push(classes.len());
            classes.push(ShapeClass { dimension: dim, edge_length_matrix: canonical_matrix(&m) });
        }
        classes.sort_by(|a, b| {
            a.dimension.cmp(&b.dimension).then_with(|| {
                let fa: Vec<f64> = a.edge_length_matrix.iter().flatten().cloned().collect();
                let fb: Vec<f64> = b.edge_length_matrix.iter().flatten().cloned().collect();
                fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        classes
    }

    /// Distance engine on the barycentric grid for a mesh size (cached per grid level).
    pub fn engine(&self, mesh: f64) -> Result<Arc<DistanceEngine>> {
        if !(mesh > 0.0) || !mesh.is_finite() {
            return Err(Error::OutOfRange(format!("mesh must be positive, got {mesh}")));
        }
        let level = engine::grid_level(self, mesh);
        let mut cache = self.engines.lock().expect("engine cache poisoned");
        if let Some(e) = cache.get(&level) {
            return Ok(e.clone());
        }
        let e = Arc::new(DistanceEngine::new(self, level));
        cache.insert(level, e.clone());
        Ok(e)
    }

    /// Upper bound on the intrinsic distance from the ε-net at spacing ≤ `mesh`.
    pub fn distance(&self, x: &PointRef, y: &PointRef, mesh: f64) -> Result<DistanceBound> {
        self.engine(mesh)?.distance(self, x, y)
    }

    /// Distance computed from the smaller endpoint in [`point_order`], so
    /// that swapping the arguments reproduces the same bits.
    pub fn ordered_distance(&self, a: &PointRef, b: &PointRef, mesh: f64) -> Result<DistanceBound> {
        let (ca, cb) = (self.canonicalize(a)?, self.canonicalize(b)?);
        if point_order(&ca, &cb) == std::cmp::Ordering::Greater {
            let mut d = self.distance(&cb, &ca, mesh)?;
            d.path.reverse();
            Ok(d)
        } else {
            self.distance(&ca, &cb, mesh)
        }
    }

    /// All pairwise distances among `points`. Each pair is searched from its
    /// smaller endpoint, so the values agree with [`Self::ordered_distance`].
    pub fn pairwise_distances(&self, points: &[PointRef], mesh: f64) -> Result<Vec<Vec<DistanceBound>>> {
        let pts: Vec<PointRef> = points.iter().map(|p| self.canonicalize(p)).collect::<Result<_>>()?;
        let engine = self.engine(mesh)?;
        let n = pts.len();
        let zero = |p: &PointRef| DistanceBound { upper_bound: 0.0, mesh_used: engine.spacing(), budget: 0.0, path: vec![p.clone(), p.clone()] };
        let mut out: Vec<Vec<Option<DistanceBound>>> = vec![vec![None; n]; n];
        for i in 0..n {
            let mut targets = Vec::new();
            for j in 0..n {
                match point_order(&pts[i], &pts[j]) {
                    std::cmp::Ordering::Less => targets.push(j),
                    std::cmp::Ordering::Equal => out[i][j] = Some(zero(&pts[i])),
                    std::cmp::Ordering::Greater => {}
                }
            }
            let tp: Vec<PointRef> = targets.iter().map(|&j| pts[j].clone()).collect();
            for (j, d) in targets.into_iter().zip(engine.distances(self, &pts[i], &tp)?) {
                let mut back = d.clone();
                back.path.reverse();
                out[j][i] = Some(back);
                out[i][j] = Some(d);
            }
        }
        Ok(out.into_iter().map(|row| row.into_iter().map(|d| d.expect("every pair filled")).collect()).collect())
    }

    /// Faces of codimension one that belong to exactly one simplex.
    pub fn free_faces(&self) -> Vec<(SimplexId, Vec<usize>)> {
        let mut out = Vec::new();
        for members in &self.orbits {
            let (si, mask) = members[0];
            let n = self.simplexes[si].vertices.len();
            if members.len() == 1 && mask.count_ones() as usize == n - 1 && n >= 2 {
                out.push((self.simplexes[si].id, slots_of(mask)));
            }
        }
        out
    }

    /// Smallest positive edge length among all faces.
    pub fn min_positive_separation(&self) -> f64 {
        let k = self.kappa.kappa();
        let mut best = f64::INFINITY;
        for s in &self.simplexes {
            for i in 0..s.vertices.len() {
                for j in i + 1..s.vertices.len() {
                    let d = raw_distance(k, s.vertices[i].coords(), s.vertices[j].coords());
                    if d > 0.0 {
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }
}

/// Total order on points: simplex id, then barycentric coordinates.
pub fn point_order(a: &PointRef, b: &PointRef) -> std::cmp::Ordering {
    a.simplex.cmp(&b.simplex).then_with(|| {
        for (x, y) in a.bary.iter().zip(&b.bary) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        a.bary.len().cmp(&b.bary.len())
    })
}

/// Lexicographically smallest flattened distance matrix over vertex permutations.
fn canonical_matrix(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut best: Option<Vec<Vec<f64>>> = None;
    for perm in permutations(n) {
        let cand: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[perm[i]][perm[j]]).collect()).collect();
        let better = match &best {
            None => true,
            Some(b) => {
                let fa: Vec<f64> = cand.iter().flatten().cloned().collect();
                let fb: Vec<f64> = b.iter().flatten().cloned().collect();
                fa < fb
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.unwrap_or_default()
}
