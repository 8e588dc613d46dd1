//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every criterion is reported even when
//! an earlier one fails; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use catcheck_core::complex::interchange::load_complex;
use catcheck_core::curvature::{
    counterexample, lemma31_check, lemma32_check, link_condition_check, predicted_separation_hyp, ptolemy_defect,
    sample_rng,
};
use catcheck_core::flatness::{default_base_point, develop, theorem_b_pipeline, Outcome, PipelineConfig};
use catcheck_core::inversion::{ideal_distance, metric_check, metric_check_triple, triple_for_witness, InversionView};
use catcheck_core::links::{cone_distance, iterated_cone_distance, shortest_injective_loop, LinkEdge, LinkGraph};
use catcheck_core::numeric::exact_sum;
use catcheck_core::{ComplexK, Curvature, Generator, PointRef, Subject};
use rand::Rng;

const CONE: &str = "cone(4.71238898038469,3,2.0)";

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn generated(spec: &str) -> Subject {
    Generator::parse(spec).and_then(|g| g.build()).expect("generator literal builds")
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, format!("took {:.2?}, limit {limit} s", elapsed))
}

fn planar(k: &ComplexK, a: &PointRef, b: &PointRef) -> f64 {
    let (p, q) = (k.model_point(a).unwrap(), k.model_point(b).unwrap());
    p.coords().iter().zip(q.coords()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn random_point(k: &ComplexK, rng: &mut impl Rng) -> PointRef {
    let s = &k.simplexes()[rng.random_range(0..k.simplexes().len())];
    let w: Vec<f64> = (0..s.vertices.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let t: f64 = w.iter().sum();
    PointRef::new(s.id, w.iter().map(|x| x / t).collect())
}

fn concyclic() -> Check {
    let start = Instant::now();
    let s = generated("plane_tiling(3)");
    let (k, g) = (&s.complex, s.generator.unwrap());
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut rng = sample_rng(1, i);
        let c = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = rng.random_range(0.2..1.5);
        let mut th: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        th.sort_by(f64::total_cmp);
        let pts: Vec<PointRef> = th
            .iter()
            .map(|t| g.locate_chart(k, &[c[0] + r * t.cos(), c[1] + r * t.sin()]).expect("inside the tiling"))
            .collect();
        let d = |a: usize, b: usize| planar(k, &pts[a], &pts[b]);
        let defect = ptolemy_defect(d(0, 1), d(2, 3), d(0, 2), d(3, 1), d(0, 3), d(1, 2));
        worst = worst.max(defect.abs());
    }
    ensure(worst <= 1e-6, format!("max |defect| {worst:e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("max |defect| {worst:.2e} over 100 quadruples"))
}

fn quarter_points() -> Check {
    let d = ptolemy_defect(1.0, 1.0, 2.0, 2.0, 1.0, 1.0);
    ensure(d == 2.0, format!("defect {d}"))?;
    Ok("defect = 2".into())
}

fn cone_counterexample() -> Check {
    let start = Instant::now();
    let s = generated(CONE);
    let r = counterexample(&s, None, 0.1, 0.005).map_err(|e| e.to_string())?;
    let rel = |m: f64, p: f64| (m - p).abs() / p;
    let adj = r.measured_adjacent.iter().map(|m| rel(*m, 0.111114)).fold(0.0, f64::max);
    let opp = r.measured_opposite.iter().map(|m| rel(*m, 0.184776)).fold(0.0, f64::max);
    let ratio = rel(r.defect_over_eps2, 0.94495);
    ensure(adj <= 0.01, format!("adjacent {:?} off by {adj:.4}", r.measured_adjacent))?;
    ensure(opp <= 0.01, format!("opposite {:?} off by {opp:.4}", r.measured_opposite))?;
    ensure(ratio <= 0.05, format!("defect/eps^2 {} off by {ratio:.4}", r.defect_over_eps2))?;
    ensure(r.witness.certified, "defect not certified")?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "adjacent {:.6}, opposite {:.6}, defect/eps^2 {:.5}",
        r.measured_adjacent[0], r.measured_opposite[0], r.defect_over_eps2
    ))
}

fn iterated_cone() -> Check {
    let sphere = Curvature::new(1.0).unwrap();
    let mut worst = 0.0f64;
    for r in 1..=3 {
        for eps in [0.1f64, 0.5, 1.0] {
            for d in [0.1, PI / 2.0, 3.0] {
                let closed = (1.0f64 - eps.sin().powi(2 * r as i32) * (1.0 - d.cos())).acos();
                let mut step = d;
                for _ in 0..r {
                    step = cone_distance(sphere, step, eps, eps).map_err(|e| e.to_string())?;
                }
                worst = worst.max((closed - step).abs()).max((iterated_cone_distance(r, eps, d) - step).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max gap {worst:e}"))?;
    Ok(format!("max gap {worst:.1e}"))
}

fn hyperbolic_taylor() -> Check {
    let d = PI / 2.0;
    let mut notes = Vec::new();
    let mut failed = Vec::new();
    for r in [0u32, 1] {
        let ratios: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&e: &f64| {
                let dp = iterated_cone_distance(r, e, d);
                let s = predicted_separation_hyp(-1.0, e, r, d).unwrap();
                (s - 2.0 * e * (dp / 2.0).sin()).abs() / e.powi(3)
            })
            .collect();
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / hi;
        notes.push(format!("r={r} ratios {:.3e}/{:.3e}/{:.3e}", ratios[0], ratios[1], ratios[2]));
        if !(spread < 0.5) {
            failed.push(format!("r={r} spread {:.0}%", spread * 100.0));
        }
    }
    if failed.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(format!("{}; {}", failed.join(", "), notes.join("; ")))
    }
}

fn lemma_grids() -> Check {
    for lambda in [1.5, 1.7, 2.0] {
        for x in [1e-1, 1e-2, 1e-3] {
            ensure(lemma31_check(lambda, x), format!("lemma31_check({lambda}, {x}) false"))?;
        }
    }
    for d in [PI / 8.0, PI / 6.0, PI / 4.0, PI / 3.0, 3.0 * PI / 8.0, 7.0 * PI / 16.0] {
        let lambda = (2f64.sqrt() + (2.0 * (1.0 + d.cos())).sqrt()) / 2.0;
        let ok = lemma32_check(d, lambda, 1e-3).map_err(|e| e.to_string())?;
        ensure(ok, format!("lemma32_check({d}, {lambda}, 1e-3) false"))?;
    }
    Ok("9 + 6 grid points true".into())
}

/// Shortest simple cycle by enumerating edge subsets.
fn brute_girth(nodes: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << edges.len()) {
        let chosen: Vec<_> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        let mut deg = vec![0; nodes];
        for &(a, b, _) in &chosen {
            deg[a] += 1;
            deg[b] += 1;
        }
        if deg.iter().any(|&x| x != 0 && x != 2) {
            continue;
        }
        // one cycle iff the touched nodes are connected
        let mut parent: Vec<usize> = (0..nodes).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                p[x] = find(p, p[x]);
            }
            p[x]
        }
        for &(a, b, _) in &chosen {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let touched: Vec<usize> = (0..nodes).filter(|&v| deg[v] > 0).collect();
        let root = find(&mut parent, touched[0]);
        if touched.iter().all(|&v| find(&mut parent, v) == root) {
            best = best.min(exact_sum(&chosen.iter().map(|e| e.2).collect::<Vec<_>>()));
        }
    }
    best
}

fn girth_oracle() -> Check {
    let start = Instant::now();
    let weights = [PI / 4.0, PI / 2.0, PI];
    let mut graphs = 0;
    for i in 0..4000u64 {
        let mut rng = sample_rng(3, i);
        let nodes = rng.random_range(1..=6);
        let m = rng.random_range(0..=8);
        let edges: Vec<(usize, usize, f64)> = (0..m)
            .map(|_| (rng.random_range(0..nodes), rng.random_range(0..nodes), weights[rng.random_range(0..3)]))
            .collect();
        let g = LinkGraph {
            node_count: nodes,
            edges: edges.iter().enumerate().map(|(c, &(a, b, weight))| LinkEdge { a, b, weight, cell: c }).collect(),
        };
        let (fast, slow) = (shortest_injective_loop(&g), brute_girth(nodes, &edges));
        ensure(fast == slow, format!("graph {edges:?}: girth {fast} vs brute force {slow}"))?;
        graphs += 1;
    }
    let center_girth = |s: &Subject| -> Result<f64, String> {
        let class = s.complex.vertex_class_of(s.center.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let v = link_condition_check(&s.complex, 2).map_err(|e| e.to_string())?;
        let v = v.into_iter().find(|v| v.vertex_class == class).ok_or("no verdict for the center")?;
        Ok(if v.passes { v.girth } else { -v.girth })
    };
    let flat = center_girth(&generated("plane_tiling(3)"))?;
    ensure((flat - 2.0 * PI).abs() <= 1e-9, format!("tiling vertex girth {flat} (negative = fails)"))?;
    let cone = center_girth(&generated(CONE))?;
    ensure((cone + 1.5 * PI).abs() <= 1e-9, format!("cone apex girth {} (negative = fails)", cone))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("{graphs} multigraphs match; tiling 2pi passes, cone 3pi/2 fails"))
}

fn distance_oracle() -> Check {
    let start = Instant::now();
    let square = load_complex(&std::fs::read_to_string(data("square.cx")).unwrap()).map_err(|e| e.to_string())?;
    let strip = load_complex(&std::fs::read_to_string(data("strip.cx")).unwrap()).map_err(|e| e.to_string())?;
    ensure(strip.simplexes().len() == 10, "strip should have 10 triangles")?;
    let mut worst = 0.0f64;
    for (name, k) in [("square", &square), ("strip", &strip)] {
        for i in 0..40 {
            let mut rng = sample_rng(8, i);
            let (a, b) = (random_point(k, &mut rng), random_point(k, &mut rng));
            let exact = planar(k, &a, &b);
            let mut prev = f64::INFINITY;
            for mesh in [0.05, 0.02] {
                let ub = k.ordered_distance(&a, &b, mesh).map_err(|e| e.to_string())?.upper_bound;
                let gap = ub - exact;
                ensure(gap >= -1e-9 && gap <= 2.0 * mesh, format!("{name}: bound {ub} vs {exact} at mesh {mesh}"))?;
                ensure(ub <= prev, format!("{name}: bound grew under refinement, {prev} -> {ub}"))?;
                prev = ub;
                worst = worst.max(gap / mesh);
            }
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("worst gap {worst:.3}*mesh, monotone"))
}

fn data(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn inversion_identities() -> Check {
    let start = Instant::now();
    let tiling = generated("plane_tiling(3)");
    let base = default_base_point(&tiling);
    let view = InversionView::new(&tiling, &base).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = tiling.sample_point(&mut sample_rng(9, i));
        if x.approx_eq(&base) {
            continue;
        }
        let ideal = ideal_distance(&view, &x, 0.25).map_err(|e| e.to_string())?.value;
        let d = tiling.complex.ordered_distance(&x, &base, 0.25).map_err(|e| e.to_string())?.upper_bound;
        worst = worst.max((ideal * d - 1.0).abs());
    }
    ensure(worst <= 1e-12, format!("ideal identity off by {worst:e}"))?;
    let scan = metric_check(&tiling, &view, 10_000, 0, 0.25).map_err(|e| e.to_string())?;
    ensure(scan.certified_count == 0, format!("{} certified violations on the tiling", scan.certified_count))?;

    let cone = generated(CONE);
    let ce = counterexample(&cone, None, 0.1, 0.005).map_err(|e| e.to_string())?;
    let (x, y, z, p) = triple_for_witness(&ce.witness);
    let view = InversionView::new(&cone, &p).map_err(|e| e.to_string())?;
    let w = metric_check_triple(&view, &x, &y, &z, 0.005).map_err(|e| e.to_string())?;
    ensure(w.certified, format!("cone violation not certified, margin {}", w.margin))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("identity gap {worst:.1e}; tiling clean over 10^4 triples; cone margin {:.3e}", w.margin))
}

fn development() -> Check {
    let start = Instant::now();
    let tiling = generated("plane_tiling(3)");
    let k = &tiling.complex;
    let dev = develop(k, k.simplexes()[0].id).map_err(|e| e.to_string())?;
    ensure(dev.max_distortion <= 1e-9, format!("tiling distortion {}", dev.max_distortion))?;
    let mesh = 0.05;
    let n = k.vertex_count();
    let mut worst = 0.0f64;
    for i in 0..30u64 {
        let mut rng = sample_rng(10, i);
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let (pa, pb) = (dev.vertex(a).unwrap().coords, dev.vertex(b).unwrap().coords);
        let flat = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
        let chain = k.ordered_distance(&k.vertex_point(a), &k.vertex_point(b), mesh).map_err(|e| e.to_string())?;
        worst = worst.max((chain.upper_bound - flat).abs());
    }
    ensure(worst <= 2.0 * mesh, format!("vertex distances off by {worst}"))?;
    let flat_distortion = dev.max_distortion;

    let cone = generated(CONE);
    let apex = cone.complex.vertex_class_of(cone.center.as_ref().unwrap()).map_err(|e| e.to_string())?;
    let dev = develop(&cone.complex, cone.complex.simplexes()[0].id).map_err(|e| e.to_string())?;
    let v = dev.vertex(apex).ok_or("apex not developed")?;
    ensure((v.angle_sum - 1.5 * PI).abs() <= 1e-9, format!("apex angle sum {}", v.angle_sum))?;
    let deficit = v.deficit.ok_or("apex not interior")?;
    ensure((deficit - PI / 2.0).abs() <= 1e-9, format!("apex deficit {deficit}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("tiling distortion {:.1e}, vertex gap {worst:.4}; cone apex sum {:.6}", flat_distortion, v.angle_sum))
}

fn pipeline_verdicts() -> Check {
    let start = Instant::now();
    let cfg = PipelineConfig::default();
    let triangle = load_complex(&std::fs::read_to_string(data("equilateral.cx")).unwrap()).map_err(|e| e.to_string())?;
    let cases = [
        (generated("plane_tiling(3)"), Outcome::EvidenceEuclidean),
        (generated(CONE), Outcome::Refuted),
        (Subject::from_complex("triangle", triangle), Outcome::Inconclusive),
    ];
    let mut labels = Vec::new();
    for (s, want) in cases {
        let r = theorem_b_pipeline(&s, &cfg);
        ensure(r.outcome == want, format!("{}: got {}", s.label, r.label()))?;
        labels.push(r.label());
    }
    within(start.elapsed(), 120.0)?;
    Ok(labels.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("concyclic equality", concyclic),
        ("quarter-point refutation", quarter_points),
        ("cone counterexample", cone_counterexample),
        ("iterated-cone identity", iterated_cone),
        ("hyperbolic Taylor check", hyperbolic_taylor),
        ("lemma grids", lemma_grids),
        ("girth oracle", girth_oracle),
        ("distance oracle", distance_oracle),
        ("inversion identities", inversion_identities),
        ("development", development),
        ("pipeline verdicts", pipeline_verdicts),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match result {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({t:.2?})", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({t:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
