//! Comparison-triangle flatness, planar development of flat surfaces, and the
//! staged Euclidean-recognition pipeline.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complex::generators::Subject;
use crate::complex::{ComplexK, PointRef, SimplexId};
use crate::curvature::{link_condition_check, ptolemy_scan, sample_rng, ScanConfig};
use crate::error::{Error, Result};
use crate::inversion::{metric_check, metric_check_triple, midpoint_test, triple_for_witness, InversionView};
use crate::model_space::place_comparison_triangle;
use crate::numeric::exact_sum;
use crate::report::{to_value, Status};

/// Placements farther apart than this count as distortion.
pub const DEVELOP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessPair {
    pub p: PointRef,
    pub q: PointRef,
    /// `(side, t)` of each point; sides are 0 = AB, 1 = BC, 2 = CA.
    pub positions: [(usize, f64); 2],
    pub measured: f64,
    pub comparison: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub triangle: [PointRef; 3],
    /// `|AB|, |BC|, |CA|`.
    pub side_lengths: [f64; 3],
    pub side_budgets: [f64; 3],
    pub sampled_pairs: Vec<FlatnessPair>,
    /// Largest `|measured − comparison|`.
    pub max_gap: f64,
    /// Largest `|measured − comparison| − budget`, floored at zero.
    pub max_defect: f64,
    /// Every pair has `measured ≤ comparison + budget`.
    pub cat0_holds: bool,
    /// Every pair has `|measured − comparison| ≤ budget`.
    pub equality_holds: bool,
    pub degenerate: bool,
}

/// Compares distances between points on the sides of the triangle `xyz`
/// with the same distances in its Euclidean comparison triangle.
pub fn triangle_flatness(k: &ComplexK, tri: [&PointRef; 3], mesh: f64, probes: usize, seed: u64) -> Result<FlatnessReport> {
    let pts: Vec<PointRef> = tri.iter().map(|p| k.canonicalize(p)).collect::<Result<_>>()?;
    let triangle: [PointRef; 3] = pts.clone().try_into().expect("three points");
    let coincident = (0..3).any(|i| pts[i].approx_eq(&pts[(i + 1) % 3]));
    let mut report = FlatnessReport {
        triangle,
        side_lengths: [0.0; 3],
        side_budgets: [0.0; 3],
        sampled_pairs: Vec::new(),
        max_gap: 0.0,
        max_defect: 0.0,
        cat0_holds: true,
        equality_holds: true,
        degenerate: coincident,
    };
    if coincident {
        return Ok(report);
    }
    let sides: Vec<_> = (0..3).map(|i| k.ordered_distance(&pts[i], &pts[(i + 1) % 3], mesh)).collect::<Result<_>>()?;
    report.side_lengths = std::array::from_fn(|i| sides[i].upper_bound);
    report.side_budgets = std::array::from_fn(|i| sides[i].budget);
    let [ab, bc, ca] = report.side_lengths;
    let side_budget = report.side_budgets.iter().cloned().fold(0.0, f64::max);
    let longest = ab.max(bc).max(ca);
    if 2.0 * longest >= ab + bc + ca - 2.0 * side_budget {
        report.degenerate = true;
    }
    let cmp = place_comparison_triangle(bc, ca, ab)?;
    let mut rng = sample_rng(seed, 0);
    for _ in 0..probes {
        let pos: [(usize, f64); 2] = std::array::from_fn(|_| (rng.random_range(0..3), rng.random::<f64>()));
        let on = |(s, t): (usize, f64)| k.chain_point(&sides[s].path, t);
        let (p, q) = (on(pos[0])?, on(pos[1])?);
        let measured = k.ordered_distance(&p, &q, mesh)?;
        let (pp, pq) = (cmp.point_on_side(pos[0].0, (pos[0].0 + 1) % 3, pos[0].1), cmp.point_on_side(pos[1].0, (pos[1].0 + 1) % 3, pos[1].1));
        let comparison = (pp[0] - pq[0]).hypot(pp[1] - pq[1]);
        let budget = measured.budget + 2.0 * side_budget + 1e-9;
        let gap = measured.upper_bound - comparison;
        report.max_gap = report.max_gap.max(gap.abs());
        report.max_defect = report.max_defect.max(gap.abs() - budget);
        report.cat0_holds &= gap <= budget;
        report.equality_holds &= gap.abs() <= budget;
        report.sampled_pairs.push(FlatnessPair { p, q, positions: pos, measured: measured.upper_bound, comparison, budget });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexImage {
    pub vertex_class: usize,
    /// First placement reached from the root.
    pub coords: [f64; 2],
    /// Every placement, one per incident triangle.
    pub placements: Vec<[f64; 2]>,
    /// Sum of the placed corner angles at this vertex.
    pub angle_sum: f64,
    /// Every edge at the vertex borders two triangles.
    pub interior: bool,
    /// `2π − angle_sum` for interior vertices.
    pub deficit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Development {
    pub root: SimplexId,
    pub vertices: Vec<VertexImage>,
    /// Planar image of each triangle, by simplex id, vertices in slot order.
    pub placements: BTreeMap<SimplexId, [[f64; 2]; 3]>,
    /// Worst disagreement between two placements of one vertex.
    pub max_distortion: f64,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Third vertex at distances `dp`, `dq` from `p`, `q`, on the side of `pq`
/// opposite to `avoid`.
fn pivot(p: [f64; 2], q: [f64; 2], dp: f64, dq: f64, avoid: [f64; 2]) -> [f64; 2] {
    let l = dist2(p, q);
    let u = [(q[0] - p[0]) / l, (q[1] - p[1]) / l];
    let x = (dp * dp - dq * dq + l * l) / (2.0 * l);
    let h = (dp * dp - x * x).max(0.0).sqrt();
    let side = if cross(p, q, avoid) > 0.0 { -1.0 } else { 1.0 };
    [p[0] + x * u[0] - side * h * u[1], p[1] + x * u[1] + side * h * u[0]]
}

/// Lays the triangles of a flat surface out in the plane, breadth first from
/// `root`, pivoting each new triangle about the edge it shares with a placed one.
pub fn develop(k: &ComplexK, root: SimplexId) -> Result<Development> {
    if k.kappa().kappa() != 0.0 {
        return Err(Error::Unsupported(format!("development needs a flat complex, got κ = {}", k.kappa().kappa())));
    }
    if k.dimension() != 2 || k.model_dimension() != 2 {
        return Err(Error::Unsupported(format!("development needs a 2-complex in the plane, got dimension {}", k.dimension())));
    }
    if let Some(s) = k.simplexes().iter().find(|s| s.vertices.len() != 3) {
        return Err(Error::Unsupported(format!("simplex {} is a dangling edge or point", s.id)));
    }
    let n = k.simplexes().len();
    for orbit in 0..k.orbit_count() {
        let members = k.orbit_members(orbit as u32);
        if members[0].1.count_ones() == 2 && members.len() > 2 {
            return Err(Error::Unsupported(format!("an edge of simplex {} borders {} triangles", k.simplexes()[members[0].0].id, members.len())));
        }
    }
    let root_i = k.simplex_index(root)?;
    let side = |si: usize, a: usize, b: usize| {
        let v = &k.simplexes()[si].vertices;
        dist2([v[a].coords()[0], v[a].coords()[1]], [v[b].coords()[0], v[b].coords()[1]])
    };
    let mut placed: Vec<Option<[[f64; 2]; 3]>> = vec![None; n];
    let c = place_comparison_triangle(side(root_i, 1, 2), side(root_i, 2, 0), side(root_i, 0, 1))?;
    placed[root_i] = Some(c.planar_coords);
    let mut queue = VecDeque::from([root_i]);
    while let Some(si) = queue.pop_front() {
        let here = placed[si].expect("queued triangles are placed");
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let orbit = k.orbit_of(si, (1 << a) | (1 << b));
            for &(ti, tmask) in k.orbit_members(orbit) {
                if ti == si || placed[ti].is_some() {
                    continue;
                }
                // match t's edge slots to ours through vertex classes
                let cls = k.vertex_classes(si);
                let tcls = k.vertex_classes(ti);
                let tslots: Vec<usize> = (0..3).filter(|s| tmask & (1 << s) != 0).collect();
                let ta = *tslots.iter().find(|&&s| tcls[s] == cls[a]).unwrap_or(&tslots[0]);
                let tb = *tslots.iter().find(|&&s| s != ta).expect("edges have two slots");
                let tc = 3 - ta - tb;
                let third = 3 - a - b;
                let mut img = [[0.0; 2]; 3];
                img[ta] = here[a];
                img[tb] = here[b];
                img[tc] = pivot(here[a], here[b], side(ti, ta, tc), side(ti, tb, tc), here[third]);
                placed[ti] = Some(img);
                queue.push_back(ti);
            }
        }
    }
    let mut by_class: BTreeMap<usize, Vec<[f64; 2]>> = BTreeMap::new();
    let mut corners: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut placements = BTreeMap::new();
    for (si, img) in placed.iter().enumerate() {
        let Some(img) = img else { continue };
        placements.insert(k.simplexes()[si].id, *img);
        for s in 0..3 {
            let cl = k.vertex_classes(si)[s];
            by_class.entry(cl).or_default().push(img[s]);
            let (u, w) = (img[(s + 1) % 3], img[(s + 2) % 3]);
            let (du, dw) = ([u[0] - img[s][0], u[1] - img[s][1]], [w[0] - img[s][0], w[1] - img[s][1]]);
            let ang = (du[0] * dw[1] - du[1] * dw[0]).abs().atan2(du[0] * dw[0] + du[1] * dw[1]);
            corners.entry(cl).or_default().push(ang);
        }
    }
    let mut max_distortion: f64 = 0.0;
    let mut vertices = Vec::new();
    for (cl, pl) in by_class {
        for i in 0..pl.len() {
            for j in i + 1..pl.len() {
                max_distortion = max_distortion.max(dist2(pl[i], pl[j]));
            }
        }
        let angle_sum = exact_sum(&corners[&cl]);
        let interior = vertex_is_interior(k, cl);
        vertices.push(VertexImage {
            vertex_class: cl,
            coords: pl[0],
            placements: pl,
            angle_sum,
            interior,
            deficit: interior.then(|| 2.0 * PI - angle_sum),
        });
    }
    Ok(Development { root, vertices, placements, max_distortion })
}

fn vertex_is_interior(k: &ComplexK, class: usize) -> bool {
    let mut edges = 0;
    for (si, apex) in k.vertex_incidences(class) {
        for s in 0..3 {
            if s != apex && k.orbit_members(k.orbit_of(si, (1 << apex) | (1 << s))).len() != 2 {
                return false;
            }
            edges += 1;
        }
    }
    edges > 0
}

impl Development {
    pub fn vertex(&self, class: usize) -> Option<&VertexImage> {
        self.vertices.iter().find(|v| v.vertex_class == class)
    }

    /// SVG drawing: triangle outlines, one dot per vertex image, and a
    /// caption with the distortion. Vertices placed inconsistently are red.
    pub fn to_svg(&self) -> String {
        let all: Vec<[f64; 2]> = self.placements.values().flatten().cloned().collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &all {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        if all.is_empty() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let size = 600.0;
        let margin = 20.0;
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (size - 2.0 * margin) / span;
        let tx = |p: [f64; 2]| (margin + (p[0] - lo[0]) * scale, size - margin - (p[1] - lo[1]) * scale);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{h}" viewBox="0 0 {size} {h}">"#, h = size + 30.0);
        let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        for (id, img) in &self.placements {
            let pts: Vec<String> = img.iter().map(|&p| tx(p)).map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
            let _ = writeln!(s, r##"<polygon points="{}" fill="#dde8f4" stroke="#335577" stroke-width="1" data-simplex="{id}"/>"##, pts.join(" "));
        }
        for v in &self.vertices {
            let bad = v.placements.iter().any(|&p| dist2(p, v.coords) > DEVELOP_TOLERANCE);
            let color = if bad { "#cc2222" } else { "#222222" };
            for &p in &v.placements {
                let (x, y) = tx(p);
                let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="{color}" data-vertex="{}"/>"#, v.vertex_class);
            }
        }
        let _ = writeln!(
            s,
            r##"<text x="{margin}" y="{y}" font-family="monospace" font-size="13" fill="#000000">root {} · max distortion {:.3e}</text>"##,
            self.root,
            self.max_distortion,
            y = size + 15.0
        );
        s.push_str("</svg>\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub mesh: f64,
    pub ptolemy_samples: usize,
    pub metric_samples: usize,
    /// Base points for the inversion checks, the first being the chart center
    /// (or the centroid of the first simplex).
    pub base_points: usize,
    pub midpoint_pairs: usize,
    pub midpoint_tolerance: f64,
    pub triangles: usize,
    pub probes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            mesh: 0.05,
            ptolemy_samples: 1000,
            metric_samples: 500,
            base_points: 2,
            midpoint_pairs: 6,
            midpoint_tolerance: 0.05,
            triangles: 6,
            probes: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: String,
    pub status: Status,
    pub witness: Value,
    pub budget: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Outcome {
    EvidenceEuclidean,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub outcome: Outcome,
    /// Stage behind a refutation or an inconclusive outcome.
    pub stage: Option<String>,
    pub stages: Vec<StageResult>,
}

impl PipelineReport {
    /// `EVIDENCE-EUCLIDEAN`, `REFUTED(stage)` or `INCONCLUSIVE(stage)`.
    pub fn label(&self) -> String {
        match (&self.outcome, &self.stage) {
            (Outcome::EvidenceEuclidean, _) => "EVIDENCE-EUCLIDEAN".into(),
            (Outcome::Refuted, Some(s)) => format!("REFUTED({s})"),
            (Outcome::Inconclusive, Some(s)) => format!("INCONCLUSIVE({s})"),
            (o, None) => format!("{o:?}").to_uppercase(),
        }
    }

    /// Stage verdict for the overall outcome.
    pub fn status(&self) -> Status {
        match self.outcome {
            Outcome::EvidenceEuclidean => Status::Evidence,
            Outcome::Refuted => Status::Refuted,
            Outcome::Inconclusive => Status::Inconclusive,
        }
    }
}

fn stage(name: &str, status: Status, witness: Value, budget: Value) -> StageResult {
    StageResult { stage: name.into(), status, witness, budget }
}

fn error_stage(name: &str, e: &Error) -> StageResult {
    stage(name, Status::Inconclusive, json!({ "error": e.to_string() }), Value::Null)
}

/// Base point of the inversion checks: the chart center, or the centroid of
/// the first simplex.
pub fn default_base_point(subject: &Subject) -> PointRef {
    subject.center.clone().unwrap_or_else(|| {
        let s = &subject.complex.simplexes()[0];
        let n = s.vertices.len();
        PointRef::new(s.id, vec![1.0 / n as f64; n])
    })
}

/// Runs every stage in order and combines their verdicts.
pub fn theorem_b_pipeline(subject: &Subject, cfg: &PipelineConfig) -> PipelineReport {
    let k = subject.complex.as_ref();
    let mut stages = Vec::new();

    let manifold = subject.manifold_like();
    let topo_ok = subject.unbounded && manifold;
    stages.push(stage(
        "topology",
        if topo_ok { Status::Pass } else { Status::Inconclusive },
        json!({ "unbounded": subject.unbounded, "manifold_like": manifold, "free_faces": k.free_faces().len(), "declared_boundary": subject.declared_boundary.len() }),
        Value::Null,
    ));

    let max_depth = if k.dimension() == 3 { 2 } else { 1 };
    stages.push(match link_condition_check(k, max_depth) {
        Ok(v) => {
            let failing: Vec<_> = v.iter().filter(|x| !x.passes).collect();
            let partial = v.iter().any(|x| x.partial);
            let status = if !failing.is_empty() {
                Status::Fail
            } else if partial {
                Status::Partial
            } else {
                Status::Pass
            };
            let worst = v.iter().min_by(|a, b| a.girth.total_cmp(&b.girth));
            stage(
                "link_condition",
                status,
                json!({ "vertices": v.len(), "failing": failing.len(), "worst": worst.map(|w| json!({
                    "vertex": to_value(&w.vertex), "girth": crate::report::to_value(&ExtReal(w.girth)), "depth": w.depth, "partial": w.partial
                })) }),
                json!({ "girth_tolerance": crate::curvature::LINK_TOLERANCE }),
            )
        }
        Err(e) => error_stage("link_condition", &e),
    });

    let scan = ptolemy_scan(subject, &ScanConfig::new(cfg.ptolemy_samples, cfg.seed, cfg.mesh));
    stages.push(match &scan {
        Ok(r) => stage(
            "ptolemy_scan",
            if r.refutes() { Status::Refuted } else { Status::Pass },
            to_value(r),
            json!({ "threshold": r.worst.threshold, "mesh_used": r.mesh_used }),
        ),
        Err(e) => error_stage("ptolemy_scan", e),
    });

    stages.push(metric_stage(subject, cfg, scan.as_ref().ok()));

    let base = default_base_point(subject);
    stages.push(match InversionView::new(subject, &base).and_then(|v| midpoint_test(subject, &v, cfg.midpoint_pairs, cfg.seed, cfg.mesh, cfg.midpoint_tolerance)) {
        Ok(r) => stage("midpoint_test", if r.passes { Status::Pass } else { Status::Inconclusive }, to_value(&r), json!({ "tolerance": cfg.midpoint_tolerance })),
        Err(e) => error_stage("midpoint_test", &e),
    });

    stages.push(flatness_stage(subject, cfg));

    if k.dimension() == 2 && k.kappa().kappa() == 0.0 && k.model_dimension() == 2 {
        stages.push(match develop(k, k.simplexes()[0].id) {
            Ok(d) => {
                let status = if d.max_distortion > DEVELOP_TOLERANCE { Status::Refuted } else { Status::Pass };
                let deficits: Vec<Value> = d
                    .vertices
                    .iter()
                    .filter(|v| v.deficit.is_some_and(|x| x.abs() > DEVELOP_TOLERANCE))
                    .map(|v| json!({ "vertex_class": v.vertex_class, "angle_sum": v.angle_sum, "deficit": v.deficit }))
                    .collect();
                stage("develop", status, json!({ "max_distortion": d.max_distortion, "angle_deficits": deficits }), json!({ "tolerance": DEVELOP_TOLERANCE }))
            }
            Err(e) => error_stage("develop", &e),
        });
    }

    let refuted = stages.iter().find(|s| s.status == Status::Refuted).map(|s| s.stage.clone());
    let (outcome, at) = if let Some(s) = refuted {
        (Outcome::Refuted, Some(s))
    } else if !topo_ok {
        (Outcome::Inconclusive, Some("topology".to_string()))
    } else if let Some(s) = stages.iter().find(|s| s.status != Status::Pass) {
        (Outcome::Inconclusive, Some(s.stage.clone()))
    } else {
        (Outcome::EvidenceEuclidean, None)
    };
    PipelineReport { outcome, stage: at, stages }
}

#[derive(Serialize)]
struct ExtReal(#[serde(with = "crate::numeric::ext_real")] f64);

fn metric_stage(subject: &Subject, cfg: &PipelineConfig, scan: Option<&crate::curvature::ScanReport>) -> StageResult {
    let run = || -> Result<StageResult> {
        let k = &subject.complex;
        if let Some(w) = scan.map(|s| &s.worst).filter(|w| w.certified) {
            let (x, y, z, p) = triple_for_witness(w);
            let view = InversionView::from_complex(k.clone(), &p, subject.unbounded)?;
            let m = metric_check_triple(&view, &x, &y, &z, cfg.mesh)?;
            if m.certified {
                return Ok(stage("metric_check", Status::Refuted, json!({ "base": to_value(&p), "witness": to_value(&m) }), json!({ "threshold": m.quadruple.threshold })));
            }
        }
        let mut bases = vec![default_base_point(subject)];
        let mut rng = sample_rng(cfg.seed ^ 0x6d65_7472_6963, 0);
        while bases.len() < cfg.base_points.max(1) {
            bases.push(subject.sample_point(&mut rng));
        }
        let mut worst: Option<crate::inversion::MetricCheckReport> = None;
        for (i, b) in bases.iter().enumerate() {
            let view = InversionView::new(subject, b)?;
            let r = metric_check(subject, &view, cfg.metric_samples, cfg.seed.wrapping_add(i as u64), cfg.mesh)?;
            if r.refutes() {
                return Ok(stage("metric_check", Status::Refuted, to_value(&r), json!({ "threshold": r.worst.quadruple.threshold })));
            }
            if worst.as_ref().is_none_or(|w| r.worst.margin < w.worst.margin) {
                worst = Some(r);
            }
        }
        let w = worst.expect("at least one base point");
        Ok(stage("metric_check", Status::Pass, to_value(&w), json!({ "threshold": w.worst.quadruple.threshold })))
    };
    run().unwrap_or_else(|e| error_stage("metric_check", &e))
}

fn flatness_stage(subject: &Subject, cfg: &PipelineConfig) -> StageResult {
    let run = || -> Result<StageResult> {
        let k = subject.complex.as_ref();
        let mut worst: Option<FlatnessReport> = None;
        let mut degenerate = 0;
        for i in 0..cfg.triangles {
            let mut rng = sample_rng(cfg.seed ^ 0x666c_6174, i as u64);
            let t: [PointRef; 3] = std::array::from_fn(|_| subject.sample_point(&mut rng));
            let r = triangle_flatness(k, [&t[0], &t[1], &t[2]], cfg.mesh, cfg.probes, cfg.seed.wrapping_add(i as u64))?;
            if r.degenerate {
                degenerate += 1;
                continue;
            }
            if worst.as_ref().is_none_or(|w| r.max_defect > w.max_defect) {
                worst = Some(r);
            }
        }
        let refuted = worst.as_ref().is_some_and(|w| !w.equality_holds);
        let summary = worst.as_ref().map(|w| {
            json!({
                "triangle": to_value(&w.triangle), "side_lengths": w.side_lengths, "max_gap": w.max_gap,
                "max_defect": w.max_defect, "cat0_holds": w.cat0_holds, "equality_holds": w.equality_holds
            })
        });
        Ok(stage(
            "triangle_flatness",
            if refuted { Status::Refuted } else { Status::Pass },
            json!({ "triangles": cfg.triangles, "degenerate": degenerate, "worst": summary }),
            json!({ "side_budgets": worst.map(|w| w.side_budgets) }),
        ))
    };
    run().unwrap_or_else(|e| error_stage("triangle_flatness", &e))
}
