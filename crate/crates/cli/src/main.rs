use std::path::PathBuf;
use std::process::ExitCode;

use catcheck_core::complex::generators::{is_generator_literal, ChartPoint, Procedural};
use catcheck_core::complex::interchange::load_complex;
use catcheck_core::curvature::{counterexample, link_condition_check, ptolemy_scan, ScanConfig, LINK_TOLERANCE};
use catcheck_core::flatness::{default_base_point, develop, theorem_b_pipeline, triangle_flatness, PipelineConfig, DEVELOP_TOLERANCE};
use catcheck_core::inversion::{metric_check, metric_check_triple, midpoint_test, InversionView};
use catcheck_core::links::{link_at_vertex, locate_in_simplex, star_radius};
use catcheck_core::report::{Report, Status};
use catcheck_core::{Generator, PointRef, Subject};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "catcheck", version, about = "Checks curvature and Ptolemy properties of metric simplicial complexes")]
struct Cli {
    #[arg(long, global = true, value_enum, default_value = "json")]
    output: Output,
    /// Relative tolerance for prediction matches and midpoint searches.
    #[arg(long, global = true, default_value_t = 0.05)]
    tolerance: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "CATCHECK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Output {
    Json,
    Text,
}

/// Points are written `ID:b0,b1,..` (simplex id and barycentric
/// coordinates), `x,y` (chart coordinates), `polar:r,theta`, `vertex:N` or
/// `center`.
#[derive(Subcommand, Debug)]
enum Command {
    /// Load a complex and report its structure.
    Validate { subject: String },
    /// Chain-metric distance between two points.
    Distance {
        subject: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
    },
    /// Sample quadruples and report the worst Ptolemy defect.
    PtolemyScan {
        subject: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        /// Skip the quarter-point quadruples at vertices with short link loops.
        #[arg(long)]
        no_association: bool,
    },
    /// The link of one vertex.
    Link {
        subject: String,
        #[arg(long, default_value = "center")]
        vertex: String,
    },
    /// Girth test of every vertex link.
    LinkCheck {
        subject: String,
        #[arg(long, default_value_t = 2)]
        max_depth: u32,
    },
    /// Quarter points around a vertex with a short link loop, against the closed forms.
    Counterexample {
        subject: String,
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.005)]
        mesh: f64,
    },
    /// Triangle inequality and midpoints of the inversion at a base point.
    InvertCheck {
        subject: String,
        #[arg(long)]
        base_point: Option<String>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        #[arg(long, default_value_t = 6)]
        pairs: usize,
        /// Check one triple `x y z` instead of sampling.
        #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"])]
        triple: Option<Vec<String>>,
    },
    /// Compare a triangle with its Euclidean comparison triangle.
    Flatness {
        subject: String,
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"], required = true)]
        triangle: Vec<String>,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        #[arg(long, default_value_t = 64)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Lay a flat surface out in the plane.
    Develop {
        subject: String,
        #[arg(long)]
        root: Option<u32>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Every stage, combined into one outcome.
    Pipeline {
        subject: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        mesh: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

type CliResult<T> = Result<T, String>;

fn load_subject(s: &str) -> CliResult<Subject> {
    if is_generator_literal(s) {
        let g = Generator::parse(s).map_err(|e| e.to_string())?;
        return g.build().map_err(|e| format!("{s}: {e}"));
    }
    let text = std::fs::read_to_string(s).map_err(|e| format!("{s}: {e}"))?;
    let k = load_complex(&text).map_err(|e| format!("{s}: {e}"))?;
    Ok(Subject::from_complex(s, k))
}

fn reals(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number `{x}` in `{s}`"))).collect()
}

fn chart_point(s: &str) -> Option<ChartPoint> {
    if let Some(rest) = s.strip_prefix("polar:") {
        let v = reals(rest).ok()?;
        return (v.len() == 2).then(|| ChartPoint::Polar { r: v[0], theta: v[1] });
    }
    if s == "center" {
        return Some(ChartPoint::Cartesian(vec![0.0, 0.0]));
    }
    if s.contains(':') {
        return None;
    }
    reals(s).ok().map(ChartPoint::Cartesian)
}

fn parse_point(subject: &Subject, s: &str) -> CliResult<PointRef> {
    let k = &subject.complex;
    let s = s.trim();
    let found = if s == "center" {
        subject.center.clone().ok_or_else(|| "`center` needs a generated subject".to_string())?
    } else if let Some(n) = s.strip_prefix("vertex:") {
        let n: usize = n.parse().map_err(|_| format!("bad vertex index in `{s}`"))?;
        if n >= k.vertex_count() {
            return Err(format!("vertex {n} out of range (the complex has {})", k.vertex_count()));
        }
        k.vertex_point(n)
    } else if let Some(rest) = s.strip_prefix("polar:") {
        let v = reals(rest)?;
        let g = subject.generator.ok_or("polar points need a generated subject")?;
        if v.len() != 2 {
            return Err(format!("`{s}`: expected polar:r,theta"));
        }
        g.locate_polar(k, v[0], v[1]).ok_or_else(|| format!("`{s}` lies outside the materialized complex"))?
    } else if let Some((id, bary)) = s.split_once(':') {
        let id: u32 = id.parse().map_err(|_| format!("bad simplex id in `{s}`"))?;
        PointRef::new(id, reals(bary)?)
    } else {
        let c = reals(s)?;
        let hit = match subject.generator {
            Some(g) => g.locate_chart(k, &c),
            None => k.simplexes().iter().find_map(|sp| locate_in_simplex(k, sp.id, &c)),
        };
        hit.ok_or_else(|| format!("`{s}` lies in no simplex"))?
    };
    k.canonicalize(&found).map_err(|e| format!("`{s}`: {e}"))
}

fn run(cli: &Cli) -> CliResult<Report> {
    let tol = cli.tolerance;
    if !(tol > 0.0) {
        return Err(format!("--tolerance must be positive, got {tol}"));
    }
    let err = |e: catcheck_core::Error| e.to_string();
    let report = match &cli.command {
        Command::Validate { subject } => {
            let s = load_subject(subject)?;
            let k = &s.complex;
            let mut r = Report::new("validate", 0);
            r.param("subject", subject);
            r.verdict(
                "validate",
                Status::Pass,
                json!({
                    "curvature": k.kappa().kappa(),
                    "dimension": k.dimension(),
                    "simplexes": k.simplexes().len(),
                    "vertices": k.vertex_count(),
                    "gluings": k.gluings().len(),
                    "shapes": k.shapes().len(),
                    "free_faces": k.free_faces().len(),
                    "min_positive_separation": k.min_positive_separation(),
                    "unbounded": s.unbounded,
                    "manifold_like": s.manifold_like(),
                }),
            );
            r
        }
        Command::Distance { subject, from, to, mesh } => {
            let s = load_subject(subject)?;
            let mut r = Report::new("distance", 0);
            r.param("subject", subject).param("from", from).param("to", to).param("mesh", mesh);
            let procedural = match (s.generator, chart_point(from), chart_point(to)) {
                (Some(g), Some(a), Some(b)) => Some(Procedural::new(g).distance(&a, &b, *mesh).map_err(err)?),
                _ => None,
            };
            let (bound, radius) = match procedural {
                Some(w) => (w.bound, Some(w.materialized_radius)),
                None => {
                    let (a, b) = (parse_point(&s, from)?, parse_point(&s, to)?);
                    (s.complex.ordered_distance(&a, &b, *mesh).map_err(err)?, None)
                }
            };
            r.verdict(
                "distance",
                Status::Pass,
                json!({
                    "upper_bound": bound.upper_bound,
                    "lower_bound": bound.lower(),
                    "mesh_used": bound.mesh_used,
                    "exact": bound.exact(),
                    "path": bound.path,
                    "materialized_radius": radius,
                }),
            );
            r.budget("distance", bound.budget);
            r
        }
        Command::PtolemyScan { subject, samples, seed, mesh, no_association } => {
            let s = load_subject(subject)?;
            let cfg = ScanConfig { samples: *samples, seed: *seed, mesh: *mesh, association: !no_association };
            let scan = ptolemy_scan(&s, &cfg).map_err(err)?;
            let mut r = Report::new("ptolemy-scan", *seed);
            r.param("subject", subject).param("samples", samples).param("mesh", mesh).param("association", !no_association);
            r.verdict("ptolemy_scan", if scan.refutes() { Status::Refuted } else { Status::Pass }, &scan);
            r.budget("ptolemy_scan", json!({ "threshold": scan.worst.threshold, "budgets": scan.worst.budgets, "mesh_used": scan.mesh_used }));
            r
        }
        Command::Link { subject, vertex } => {
            let s = load_subject(subject)?;
            let k = &s.complex;
            let v = parse_point(&s, vertex)?;
            let class = k.vertex_class_of(&v).map_err(err)?;
            let link = link_at_vertex(k, &v).map_err(err)?;
            let depth = if k.dimension() == 3 { 2 } else { 1 };
            let verdicts = link_condition_check(k, depth).map_err(err)?;
            let lv = verdicts.into_iter().find(|x| x.vertex_class == class).expect("every vertex has a verdict");
            let status = match (lv.passes, lv.partial) {
                (false, _) => Status::Fail,
                (true, true) => Status::Partial,
                (true, false) => Status::Pass,
            };
            let mut r = Report::new("link", 0);
            r.param("subject", subject).param("vertex", vertex);
            r.verdict(
                "link",
                status,
                json!({
                    "verdict": lv,
                    "link_dimension": link.dimension(),
                    "link_vertices": link.node_count,
                    "cells": link.cells.len(),
                    "total_angle": link.total_angle(),
                    "star_radius": star_radius(k, &v).map_err(err)?,
                }),
            );
            r.budget("link", json!({ "girth_tolerance": LINK_TOLERANCE }));
            r
        }
        Command::LinkCheck { subject, max_depth } => {
            let s = load_subject(subject)?;
            let v = link_condition_check(&s.complex, *max_depth).map_err(err)?;
            let status = if v.iter().any(|x| !x.passes) {
                Status::Fail
            } else if v.iter().any(|x| x.partial) {
                Status::Partial
            } else {
                Status::Pass
            };
            let mut r = Report::new("link-check", 0);
            r.param("subject", subject).param("max_depth", max_depth);
            r.verdict("link_condition", status, json!({ "vertices": v }));
            r.budget("link_condition", json!({ "girth_tolerance": LINK_TOLERANCE }));
            r
        }
        Command::Counterexample { subject, vertex, epsilon, mesh } => {
            let s = load_subject(subject)?;
            let v = vertex.as_deref().map(|x| parse_point(&s, x)).transpose()?;
            let c = counterexample(&s, v.as_ref(), *epsilon, *mesh).map_err(err)?;
            let mut r = Report::new("counterexample", 0);
            r.param("subject", subject).param("epsilon", epsilon).param("mesh", mesh).param("tolerance", tol);
            let matched = c.max_relative_gap <= tol;
            r.verdict("prediction", if matched { Status::Pass } else { Status::Fail }, &c);
            let refuted = c.witness.certified && c.witness.defect > 0.0;
            r.verdict("ptolemy", if refuted { Status::Refuted } else { Status::Pass }, &c.witness);
            r.budget("ptolemy", json!({ "threshold": c.witness.threshold, "budgets": c.witness.budgets }));
            r
        }
        Command::InvertCheck { subject, base_point, samples, seed, mesh, pairs, triple } => {
            let s = load_subject(subject)?;
            let p = match base_point {
                Some(b) => parse_point(&s, b)?,
                None => default_base_point(&s),
            };
            let view = InversionView::new(&s, &p).map_err(err)?;
            let mut r = Report::new("invert-check", *seed);
            r.param("subject", subject).param("base_point", &p).param("samples", samples).param("mesh", mesh).param("pairs", pairs);
            if let Some(t) = triple {
                let pts: Vec<PointRef> = t.iter().map(|x| parse_point(&s, x)).collect::<CliResult<_>>()?;
                let w = metric_check_triple(&view, &pts[0], &pts[1], &pts[2], *mesh).map_err(err)?;
                r.verdict("metric_check", if w.certified { Status::Refuted } else { Status::Pass }, &w);
                r.budget("metric_check", json!({ "threshold": w.quadruple.threshold }));
            } else {
                let m = metric_check(&s, &view, *samples, *seed, *mesh).map_err(err)?;
                r.verdict("metric_check", if m.refutes() { Status::Refuted } else { Status::Pass }, &m);
                r.budget("metric_check", json!({ "threshold": m.worst.quadruple.threshold }));
            }
            if *pairs > 0 {
                let mp = midpoint_test(&s, &view, *pairs, *seed, *mesh, tol).map_err(err)?;
                r.verdict("midpoint_test", if mp.passes { Status::Evidence } else { Status::Inconclusive }, &mp);
                r.budget("midpoint_test", json!({ "tolerance": tol }));
            }
            r
        }
        Command::Flatness { subject, triangle, mesh, probes, seed } => {
            let s = load_subject(subject)?;
            let t: Vec<PointRef> = triangle.iter().map(|x| parse_point(&s, x)).collect::<CliResult<_>>()?;
            let f = triangle_flatness(&s.complex, [&t[0], &t[1], &t[2]], *mesh, *probes, *seed).map_err(err)?;
            let status = if f.degenerate {
                Status::Inconclusive
            } else if f.equality_holds {
                Status::Pass
            } else {
                Status::Fail
            };
            let mut r = Report::new("flatness", *seed);
            r.param("subject", subject).param("triangle", triangle).param("mesh", mesh).param("probes", probes);
            r.verdict("triangle_flatness", status, &f);
            r.budget("triangle_flatness", json!({ "side_budgets": f.side_budgets }));
            r
        }
        Command::Develop { subject, root, svg } => {
            let s = load_subject(subject)?;
            let root = root.unwrap_or(s.complex.simplexes()[0].id);
            let d = develop(&s.complex, root).map_err(err)?;
            if let Some(path) = svg {
                std::fs::write(path, d.to_svg()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            let mut r = Report::new("develop", 0);
            r.param("subject", subject).param("root", root);
            if let Some(path) = svg {
                r.param("svg", path.display().to_string());
            }
            r.verdict("develop", if d.max_distortion <= DEVELOP_TOLERANCE { Status::Pass } else { Status::Fail }, &d);
            r.budget("develop", json!({ "tolerance": DEVELOP_TOLERANCE }));
            r
        }
        Command::Pipeline { subject, seed, mesh, samples } => {
            let s = load_subject(subject)?;
            let cfg = PipelineConfig { seed: *seed, mesh: *mesh, ptolemy_samples: *samples, midpoint_tolerance: tol, ..PipelineConfig::default() };
            let p = theorem_b_pipeline(&s, &cfg);
            let mut r = Report::new("pipeline", *seed);
            r.param("subject", subject).param("config", &cfg);
            for st in &p.stages {
                r.verdict(&st.stage, st.status, &st.witness);
                if !st.budget.is_null() {
                    r.budget(&st.stage, &st.budget);
                }
            }
            r.verdict("pipeline", p.status(), json!({ "outcome": p.label(), "stage": p.stage }));
            r
        }
    };
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("catcheck: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(report) => {
            match cli.output {
                Output::Json => print!("{}", report.to_json()),
                Output::Text => print!("{}", report.to_text()),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(msg) => {
            eprintln!("catcheck: {msg}");
            ExitCode::from(2)
        }
    }
}
