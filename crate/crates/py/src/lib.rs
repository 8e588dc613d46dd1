//! Python bindings. Points cross the boundary as `(simplex_id, [bary...])`
//! tuples; reports come back as plain dicts.

use catcheck_core::complex::generators::is_generator_literal;
use catcheck_core::complex::interchange::{load_complex, ComplexFile};
use catcheck_core::curvature::{self, ScanConfig};
use catcheck_core::flatness::{self, PipelineConfig};
use catcheck_core::inversion::{self, InversionView};
use catcheck_core::{Generator, PointRef, Subject};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

type Point = (u32, Vec<f64>);

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn point_out(p: &PointRef) -> Point {
    (p.simplex, p.bary.clone())
}

/// A piecewise constant-curvature complex, either loaded or generated.
#[pyclass(name = "Complex", module = "catcheck", frozen)]
struct PyComplex {
    subject: Subject,
}

impl PyComplex {
    fn point(&self, p: &Point) -> PyResult<PointRef> {
        self.subject.complex.canonicalize(&PointRef::new(p.0, p.1.clone())).map_err(err)
    }
}

#[pymethods]
impl PyComplex {
    /// Parse the JSON interchange format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let k = load_complex(text).map_err(err)?;
        Ok(PyComplex { subject: Subject::from_complex("python", k) })
    }

    /// Build from a generator literal such as `cone(4.712389,3,2.0)`.
    #[staticmethod]
    fn generate(spec: &str) -> PyResult<Self> {
        if !is_generator_literal(spec) {
            return Err(err(format!("`{spec}` is not a generator literal")));
        }
        let subject = Generator::parse(spec).and_then(|g| g.build()).map_err(err)?;
        Ok(PyComplex { subject })
    }

    fn to_json(&self) -> String {
        ComplexFile::from_complex(&self.subject.complex).to_json()
    }

    #[getter]
    fn curvature(&self) -> f64 {
        self.subject.complex.kappa().kappa()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.subject.complex.dimension()
    }

    #[getter]
    fn simplex_count(&self) -> usize {
        self.subject.complex.simplexes().len()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.subject.complex.vertex_count()
    }

    /// Shape classes and vertex count, as a dict.
    fn shapes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.subject.complex.shapes())
    }

    fn vertex(&self, n: usize) -> PyResult<Point> {
        let k = &self.subject.complex;
        if n >= k.vertex_count() {
            return Err(err(format!("vertex {n} out of range (the complex has {})", k.vertex_count())));
        }
        Ok(point_out(&k.vertex_point(n)))
    }

    /// Chart center of a generated complex.
    fn center(&self) -> PyResult<Point> {
        self.subject.center.as_ref().map(point_out).ok_or_else(|| err("only generated complexes have a center"))
    }

    fn polar(&self, r: f64, theta: f64) -> PyResult<Point> {
        let g = self.subject.generator.ok_or_else(|| err("polar points need a generated complex"))?;
        g.locate_polar(&self.subject.complex, r, theta)
            .map(|p| point_out(&p))
            .ok_or_else(|| err("point lies outside the materialized complex"))
    }

    /// Returns `(value, budget)`.
    #[pyo3(signature = (a, b, mesh = 0.05))]
    fn distance(&self, a: Point, b: Point, mesh: f64) -> PyResult<(f64, f64)> {
        let d = self.subject.complex.ordered_distance(&self.point(&a)?, &self.point(&b)?, mesh).map_err(err)?;
        Ok((d.upper_bound, d.budget))
    }

    #[pyo3(signature = (samples = 2000, seed = 0, mesh = 0.05, association = true))]
    fn ptolemy_scan<'py>(
        &self,
        py: Python<'py>,
        samples: usize,
        seed: u64,
        mesh: f64,
        association: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cfg = ScanConfig { association, ..ScanConfig::new(samples, seed, mesh) };
        let report = py.detach(|| curvature::ptolemy_scan(&self.subject, &cfg)).map_err(err)?;
        to_py(py, &report)
    }

    #[pyo3(signature = (max_depth = 2))]
    fn link_check<'py>(&self, py: Python<'py>, max_depth: u32) -> PyResult<Bound<'py, PyAny>> {
        let v = py.detach(|| curvature::link_condition_check(&self.subject.complex, max_depth)).map_err(err)?;
        to_py(py, &v)
    }

    #[pyo3(signature = (epsilon = 0.1, mesh = 0.005, vertex = None))]
    fn counterexample<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        mesh: f64,
        vertex: Option<Point>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let v = vertex.map(|p| self.point(&p)).transpose()?;
        let r = py.detach(|| curvature::counterexample(&self.subject, v.as_ref(), epsilon, mesh)).map_err(err)?;
        to_py(py, &r)
    }

    /// Distance in the inverted space about `base`.
    #[pyo3(signature = (base, x, y, mesh = 0.05))]
    fn inv_distance<'py>(
        &self,
        py: Python<'py>,
        base: Point,
        x: Point,
        y: Point,
        mesh: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let view = InversionView::new(&self.subject, &self.point(&base)?).map_err(err)?;
        let d = inversion::inv_distance(&view, &self.point(&x)?, &self.point(&y)?, mesh).map_err(err)?;
        to_py(py, &d)
    }

    #[pyo3(signature = (base, samples = 1000, seed = 0, mesh = 0.05))]
    fn metric_check<'py>(
        &self,
        py: Python<'py>,
        base: Point,
        samples: usize,
        seed: u64,
        mesh: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let view = InversionView::new(&self.subject, &self.point(&base)?).map_err(err)?;
        let r = py.detach(|| inversion::metric_check(&self.subject, &view, samples, seed, mesh)).map_err(err)?;
        to_py(py, &r)
    }

    #[pyo3(signature = (a, b, c, mesh = 0.05, probes = 64, seed = 0))]
    fn flatness<'py>(
        &self,
        py: Python<'py>,
        a: Point,
        b: Point,
        c: Point,
        mesh: f64,
        probes: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = [self.point(&a)?, self.point(&b)?, self.point(&c)?];
        let k = &self.subject.complex;
        let r = py.detach(|| flatness::triangle_flatness(k, [&t[0], &t[1], &t[2]], mesh, probes, seed)).map_err(err)?;
        to_py(py, &r)
    }

    /// Returns `(development_dict, svg)`.
    #[pyo3(signature = (root = None))]
    fn develop<'py>(&self, py: Python<'py>, root: Option<u32>) -> PyResult<(Bound<'py, PyAny>, String)> {
        let k = &self.subject.complex;
        let root = root.unwrap_or_else(|| k.simplexes()[0].id);
        let d = flatness::develop(k, root).map_err(err)?;
        Ok((to_py(py, &d)?, d.to_svg()))
    }

    #[pyo3(signature = (seed = 0, mesh = 0.05, samples = 1000))]
    fn pipeline<'py>(&self, py: Python<'py>, seed: u64, mesh: f64, samples: usize) -> PyResult<Bound<'py, PyAny>> {
        let cfg = PipelineConfig { seed, mesh, ptolemy_samples: samples, ..PipelineConfig::default() };
        let r = py.detach(|| flatness::theorem_b_pipeline(&self.subject, &cfg));
        to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        let k = &self.subject.complex;
        format!(
            "Complex(label={:?}, curvature={}, dimension={}, simplexes={})",
            self.subject.label,
            k.kappa().kappa(),
            k.dimension(),
            k.simplexes().len()
        )
    }
}

/// Max pairing excess for six pairwise distances.
#[pyfunction]
fn ptolemy_defect(d_xy: f64, d_zp: f64, d_xz: f64, d_py: f64, d_xp: f64, d_yz: f64) -> f64 {
    curvature::ptolemy_defect(d_xy, d_zp, d_xz, d_py, d_xp, d_yz)
}

#[pyfunction]
fn predicted_separation_flat(epsilon: f64, r: u32, d: f64) -> f64 {
    curvature::predicted_separation_flat(epsilon, r, d)
}

#[pyfunction]
fn predicted_separation_hyp(kappa: f64, epsilon: f64, r: u32, d: f64) -> PyResult<f64> {
    curvature::predicted_separation_hyp(kappa, epsilon, r, d).map_err(err)
}

#[pyfunction]
fn predicted_defect_ratio(d: f64, d2: f64) -> f64 {
    curvature::predicted_defect_ratio(d, d2)
}

#[pyfunction]
fn lemma31_check(lambda: f64, x: f64) -> bool {
    curvature::lemma31_check(lambda, x)
}

#[pyfunction]
fn lemma32_check(d: f64, lambda: f64, epsilon: f64) -> PyResult<bool> {
    curvature::lemma32_check(d, lambda, epsilon).map_err(err)
}

#[pyfunction]
fn flat_violation_criterion(d: f64) -> bool {
    curvature::flat_violation_criterion(d)
}

#[pymodule]
fn catcheck(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyComplex>()?;
    m.add_function(wrap_pyfunction!(ptolemy_defect, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_separation_flat, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_separation_hyp, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_defect_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(lemma31_check, m)?)?;
    m.add_function(wrap_pyfunction!(lemma32_check, m)?)?;
    m.add_function(wrap_pyfunction!(flat_violation_criterion, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
