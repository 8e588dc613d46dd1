use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use catcheck_core::complex::interchange::{load_complex, ComplexFile};
use catcheck_core::curvature::{
    certification_threshold, predicted_separation_flat, predicted_separation_hyp, ptolemy_defect, sample_rng,
    PtolemyWitness,
};
use catcheck_core::flatness::{develop, triangle_flatness};
use catcheck_core::inversion::{inv_distance, InversionView};
use catcheck_core::links::{cone_distance, iterated_cone_distance, shortest_injective_loop, LinkEdge, LinkGraph};
use catcheck_core::model_space::{mk_distance, place_comparison_triangle};
use catcheck_core::{ComplexK, Curvature, Generator, ModelPoint, PointRef, Subject};
use proptest::prelude::*;

fn tiling() -> &'static Subject {
    static S: OnceLock<Subject> = OnceLock::new();
    S.get_or_init(|| Generator::parse("plane_tiling(3)").and_then(|g| g.build()).unwrap())
}

fn strip() -> &'static ComplexK {
    static K: OnceLock<ComplexK> = OnceLock::new();
    K.get_or_init(|| {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/strip.cx");
        load_complex(&std::fs::read_to_string(path).unwrap()).unwrap()
    })
}

fn point(seed: u64, i: u64) -> PointRef {
    tiling().sample_point(&mut sample_rng(seed, i))
}

fn strip_point(seed: u64, i: u64) -> PointRef {
    let s = Subject::from_complex("strip", strip().clone());
    s.sample_point(&mut sample_rng(seed, i))
}

fn tangent() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.2f64..1.2, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn model_distance_is_a_metric(k in prop::sample::select(vec![-1.0, 0.0, 1.0]), a in tangent(), b in tangent(), c in tangent()) {
        let kappa = Curvature::new(k).unwrap();
        let [p, q, r] = [a, b, c].map(|v| ModelPoint::from_tangent(kappa, &v));
        let d = |x: &ModelPoint, y: &ModelPoint| mk_distance(kappa, x, y).unwrap();
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() <= 1e-12);
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-10);
        if k > 0.0 {
            prop_assert!(d(&p, &q) <= PI + 1e-12);
        }
    }

    #[test]
    fn curvature_is_continuous_at_zero(a in tangent(), b in tangent()) {
        let flat = Curvature::new(0.0).unwrap();
        let hyp = Curvature::new(-1e-6).unwrap();
        let d0 = mk_distance(flat, &ModelPoint::from_tangent(flat, &a), &ModelPoint::from_tangent(flat, &b)).unwrap();
        let d1 = mk_distance(hyp, &ModelPoint::from_tangent(hyp, &a), &ModelPoint::from_tangent(hyp, &b)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-4, "{} vs {}", d0, d1);
    }

    #[test]
    fn comparison_triangle_reproduces_sides(x in 0.01f64..10.0, y in 0.01f64..10.0, t in 0.0f64..1.0) {
        // third side anywhere in the triangle-inequality window
        let z = (x - y).abs() + t * (x + y - (x - y).abs());
        let tri = place_comparison_triangle(x, y, z).unwrap();
        let c = tri.planar_coords;
        let d = |i: usize, j: usize| ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt();
        let scale = x.max(y).max(z);
        prop_assert!((d(1, 2) - x).abs() <= 1e-12 * scale);
        prop_assert!((d(2, 0) - y).abs() <= 1e-12 * scale);
        prop_assert!((d(0, 1) - z).abs() <= 1e-12 * scale);
    }

    #[test]
    fn defect_has_the_pairing_symmetries(d in prop::array::uniform6(0.0f64..5.0)) {
        // labels x, y, z, p; pairing {xy | zp}
        let dist = |a: usize, b: usize| -> f64 {
            let idx = [[0, 0, 2, 4], [0, 0, 5, 3], [2, 5, 0, 1], [4, 3, 1, 0]];
            if a == b { 0.0 } else { d[idx[a][b]] }
        };
        let defect = |p: [usize; 4]| {
            let [x, y, z, w] = p;
            ptolemy_defect(dist(x, y), dist(z, w), dist(x, z), dist(w, y), dist(x, w), dist(y, z))
        };
        let base = defect([0, 1, 2, 3]);
        for g in [[1, 0, 2, 3], [0, 1, 3, 2], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 0, 1], [2, 3, 1, 0], [3, 2, 1, 0]] {
            prop_assert_eq!(defect(g), base);
        }
    }

    #[test]
    fn defect_scales_quadratically(d in prop::array::uniform6(0.0f64..5.0), s in 0.1f64..10.0) {
        let a = ptolemy_defect(d[0], d[1], d[2], d[3], d[4], d[5]);
        let b = ptolemy_defect(s * d[0], s * d[1], s * d[2], s * d[3], s * d[4], s * d[5]);
        prop_assert!((b - s * s * a).abs() <= 1e-12 * s * s * 75.0);
    }

    #[test]
    fn certified_witness_clears_its_budget(d in prop::array::uniform6(0.1f64..3.0), b in prop::array::uniform6(0.0f64..0.01)) {
        let p = || PointRef::new(0, vec![1.0, 0.0, 0.0]);
        let w = PtolemyWitness::from_distances([p(), p(), p(), p()], d, b);
        let dmax = d.iter().cloned().fold(0.0, f64::max);
        let bmax = b.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(w.defect, ptolemy_defect(d[0], d[1], d[2], d[3], d[4], d[5]));
        prop_assert_eq!(w.threshold, certification_threshold(&d, &b));
        if w.certified {
            prop_assert!(w.defect > 4.0 * bmax * dmax);
        }
    }

    #[test]
    fn cone_distance_identities(k in prop::sample::select(vec![-1.0, 0.0, 1.0]), sep in 0.0f64..PI, t in 0.0f64..1.5, u in 0.0f64..1.5) {
        let kappa = Curvature::new(k).unwrap();
        prop_assert_eq!(cone_distance(kappa, sep, t, 0.0).unwrap(), t);
        prop_assert_eq!(cone_distance(kappa, sep, t, u).unwrap(), cone_distance(kappa, sep, u, t).unwrap());
        let flat = Curvature::new(0.0).unwrap();
        prop_assert_eq!(cone_distance(flat, PI + sep, t, u).unwrap(), t + u);
        // planar law of cosines
        let law = (t * t + u * u - 2.0 * t * u * sep.cos()).max(0.0).sqrt();
        prop_assert!((cone_distance(flat, sep, t, u).unwrap() - law).abs() <= 1e-9);
    }

    #[test]
    fn iterated_cone_composes(r in 0u32..4, eps in 0.01f64..1.5, d in 0.0f64..PI) {
        let sphere = Curvature::new(1.0).unwrap();
        let next = iterated_cone_distance(r + 1, eps, d);
        let step = cone_distance(sphere, iterated_cone_distance(r, eps, d), eps, eps).unwrap();
        prop_assert!((next - step).abs() <= 1e-12);
        prop_assert!(iterated_cone_distance(r, eps, (d + 0.1).min(PI)) >= iterated_cone_distance(r, eps, d));
    }

    #[test]
    fn zero_fold_predictions_are_cone_distances(eps in 0.001f64..1.5, d in 0.0f64..PI, k in -4.0f64..-0.01) {
        let flat = Curvature::new(0.0).unwrap();
        prop_assert!((predicted_separation_flat(eps, 0, d) - cone_distance(flat, d, eps, eps).unwrap()).abs() <= 1e-12);
        let hyp = Curvature::new(k).unwrap();
        let h = predicted_separation_hyp(k, eps, 0, d).unwrap();
        prop_assert!((h - cone_distance(hyp, d, eps, eps).unwrap()).abs() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn girth_matches_brute_force(
        nodes in 1usize..6,
        raw in prop::collection::vec((0usize..6, 0usize..6, 0usize..3), 0..=8),
    ) {
        let w = [PI / 4.0, PI / 2.0, PI];
        let edges: Vec<(usize, usize, f64)> = raw.iter().map(|&(a, b, i)| (a % nodes, b % nodes, w[i])).collect();
        let g = LinkGraph {
            node_count: nodes,
            edges: edges.iter().enumerate().map(|(c, &(a, b, weight))| LinkEdge { a, b, weight, cell: c }).collect(),
        };
        prop_assert_eq!(shortest_injective_loop(&g), brute_girth(nodes, &edges));
    }
}

/// Shortest simple cycle by enumerating edge subsets, summing weights in
/// units of `π/4` so the total is exact.
fn brute_girth(nodes: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut best: Option<u32> = None;
    for mask in 1u32..(1 << edges.len()) {
        let chosen: Vec<_> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
        let mut deg = vec![0; nodes];
        let mut adj = vec![Vec::new(); nodes];
        for &(a, b, _) in &chosen {
            deg[a] += 1;
            deg[b] += 1;
            adj[a].push(b);
            adj[b].push(a);
        }
        if deg.iter().any(|&x| x != 0 && x != 2) {
            continue;
        }
        let start = deg.iter().position(|&x| x > 0).unwrap();
        let mut seen = vec![false; nodes];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend(&adj[v]);
            }
        }
        if (0..nodes).all(|v| deg[v] == 0 || seen[v]) {
            let units: u32 = chosen.iter().map(|e| (e.2 / (PI / 4.0)).round() as u32).sum();
            best = Some(best.map_or(units, |b| b.min(units)));
        }
    }
    best.map_or(f64::INFINITY, |u| u as f64 * (PI / 4.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distance_is_symmetric_and_triangular(seed in any::<u64>()) {
        let k = strip();
        let [a, b, c] = [0, 1, 2].map(|i| strip_point(seed, i));
        let mesh = 0.05;
        let d = |x: &PointRef, y: &PointRef| k.ordered_distance(x, y, mesh).unwrap();
        let (ab, ba) = (d(&a, &b), d(&b, &a));
        prop_assert!((ab.upper_bound - ba.upper_bound).abs() <= 1e-12);
        prop_assert!(d(&a, &c).upper_bound <= ab.upper_bound + d(&b, &c).upper_bound + 2.0 * mesh);
        // the reported chain realizes the bound
        prop_assert_eq!(k.chain_length(&ab.path).unwrap(), ab.upper_bound);
    }

    #[test]
    fn refinement_never_lengthens(seed in any::<u64>()) {
        let k = strip();
        let (a, b) = (strip_point(seed, 0), strip_point(seed, 1));
        let coarse = k.ordered_distance(&a, &b, 0.1).unwrap().upper_bound;
        let fine = k.ordered_distance(&a, &b, 0.05).unwrap().upper_bound;
        prop_assert!(fine <= coarse, "{} > {}", fine, coarse);
    }

    #[test]
    fn inversion_is_symmetric(seed in any::<u64>()) {
        let s = tiling();
        let view = InversionView::new(s, &point(seed, 0)).unwrap();
        let (x, y) = (point(seed, 1), point(seed, 2));
        let xy = inv_distance(&view, &x, &y, 0.25).unwrap().value;
        let yx = inv_distance(&view, &y, &x, 0.25).unwrap().value;
        prop_assert_eq!(xy, yx);
    }

    #[test]
    fn flat_triangles_satisfy_cat0(seed in any::<u64>()) {
        let s = tiling();
        let [a, b, c] = [0, 1, 2].map(|i| point(seed, i));
        let r = triangle_flatness(&s.complex, [&a, &b, &c], 0.1, 8, seed).unwrap();
        prop_assert!(r.cat0_holds, "max gap {}", r.max_gap);
    }
}

fn scaled(k: &ComplexK, s: f64) -> ComplexK {
    let mut f = ComplexFile::from_complex(k);
    for simplex in &mut f.simplexes {
        for v in &mut simplex.vertices {
            v.iter_mut().for_each(|c| *c *= s);
        }
    }
    f.build().unwrap()
}

#[test]
fn inversion_scales_inversely() {
    let s = tiling();
    let base = Arc::clone(&s.complex);
    for factor in [2.0, 10.0] {
        let big = Arc::new(scaled(&base, factor));
        for i in 0..6 {
            let [p, x, y] = [0, 1, 2].map(|j| point(100 + i, j));
            let mesh = 0.25;
            let v1 = InversionView::from_complex(Arc::clone(&base), &p, true).unwrap();
            let v2 = InversionView::from_complex(Arc::clone(&big), &p, true).unwrap();
            let small = inv_distance(&v1, &x, &y, mesh).unwrap();
            let large = inv_distance(&v2, &x, &y, mesh * factor).unwrap();
            let want = small.value / factor;
            let slack = (small.upper - small.lower) / factor + (large.upper - large.lower);
            assert!((large.value - want).abs() <= slack + 1e-12, "factor {factor}: {} vs {want}", large.value);
        }
    }
}

#[test]
fn development_is_root_invariant() {
    let k = &tiling().complex;
    let ids: Vec<_> = k.simplexes().iter().map(|s| s.id).collect();
    let a = develop(k, ids[0]).unwrap();
    let b = develop(k, ids[ids.len() / 2]).unwrap();
    let n = k.vertex_count();
    let dist = |d: &catcheck_core::flatness::Development, i: usize, j: usize| {
        let (p, q) = (d.vertex(i).unwrap().coords, d.vertex(j).unwrap().coords);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    };
    for i in 0..n {
        for j in 0..i {
            assert!((dist(&a, i, j) - dist(&b, i, j)).abs() <= 1e-9, "vertices {i}, {j}");
        }
    }
}

#[test]
fn development_never_lengthens() {
    let k = &tiling().complex;
    let dev = develop(k, k.simplexes()[0].id).unwrap();
    assert!(dev.max_distortion <= 1e-9);
    let mesh = 0.1;
    let n = k.vertex_count();
    for i in 0..40u64 {
        let (a, b) = ((i as usize * 7) % n, (i as usize * 13 + 5) % n);
        let (p, q) = (dev.vertex(a).unwrap().coords, dev.vertex(b).unwrap().coords);
        let flat = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let ub = k.ordered_distance(&k.vertex_point(a), &k.vertex_point(b), mesh).unwrap().upper_bound;
        assert!(flat <= ub + 1e-9 && flat >= ub - 2.0 * mesh, "{a}-{b}: planar {flat}, chain {ub}");
    }
}
