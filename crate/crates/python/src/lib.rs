//! Python bindings for `confgrowth`.
//!
//! Structured results (certificates, reports, estimates) are returned as
//! plain dicts decoded from the same JSON the command-line tool writes.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use confgrowth::report::{self, RunConfig};
use confgrowth::{growth, insertion, schreier, words, Error, ReducedWord};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Input(_) | Error::Validation(_) | Error::Completion(_) | Error::UnsupportedBackend(_) => {
            PyValueError::new_err(err.to_string())
        }
        Error::Resource(_) => PyMemoryError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn to_dict<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = report::to_canonical_json(value).map_err(to_py)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A freely reduced word in `F_n`, written `"abA"` with uppercase inverses.
#[pyclass(name = "Word", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWord {
    inner: ReducedWord,
}

#[pymethods]
impl PyWord {
    #[new]
    #[pyo3(signature = (text, rank = 2))]
    fn new(text: &str, rank: u32) -> PyResult<Self> {
        let alphabet = words::Alphabet::new(rank).map_err(to_py)?;
        Ok(PyWord {
            inner: alphabet.parse(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn rank(&self) -> u32 {
        self.inner.alphabet().rank()
    }

    fn inverse(&self) -> PyWord {
        PyWord {
            inner: self.inner.inverse(),
        }
    }

    fn conjugate(&self, p: &PyWord) -> PyResult<PyWord> {
        Ok(PyWord {
            inner: words::conjugate(&self.inner, &p.inner).map_err(to_py)?,
        })
    }

    fn __mul__(&self, other: &PyWord) -> PyResult<PyWord> {
        Ok(PyWord {
            inner: words::multiply(&self.inner, &other.inner).map_err(to_py)?,
        })
    }

    fn __pow__(&self, k: usize, _modulo: Option<usize>) -> PyWord {
        PyWord {
            inner: self.inner.pow(k),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &PyWord) -> bool {
        self.inner == other.inner
    }

    fn __hash__(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.inner.hash(&mut h);
        h.finish()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Word({:?}, rank={})", self.inner.to_string(), self.rank())
    }
}

fn parse_words(graph: &schreier::CosetGraph, list: &[String]) -> PyResult<Vec<ReducedWord>> {
    list.iter().map(|w| graph.alphabet().parse(w).map_err(to_py)).collect()
}

/// A rooted Schreier coset graph `H\F_n`.
#[pyclass(name = "CosetGraph", frozen)]
struct PyCosetGraph {
    inner: schreier::CosetGraph,
    spec: String,
}

#[pymethods]
impl PyCosetGraph {
    /// Builds a graph from a backend spec such as `"abelian:1;0"`,
    /// `"free-product:2,3"`, `"cyclic:5:1,2"`, `"trivial"` or `"file:g.json"`.
    #[new]
    #[pyo3(signature = (spec, rank = None))]
    fn new(spec: &str, rank: Option<u32>) -> PyResult<Self> {
        Ok(PyCosetGraph {
            inner: report::parse_backend(spec, rank).map_err(to_py)?,
            spec: spec.to_string(),
        })
    }

    #[staticmethod]
    fn from_edge_list_json(text: &str) -> PyResult<Self> {
        Ok(PyCosetGraph {
            inner: schreier::CosetGraph::from_edge_list_json(text).map_err(to_py)?,
            spec: "explicit-file".into(),
        })
    }

    #[getter]
    fn rank(&self) -> u32 {
        self.inner.rank()
    }

    #[getter]
    fn backend(&self) -> String {
        self.inner.kind().to_string()
    }

    fn vertex_count(&self) -> Option<usize> {
        self.inner.vertex_count()
    }

    /// Label of the vertex reached from the root by `word`.
    fn vertex_of(&self, word: &PyWord) -> String {
        self.inner.vertex_of(&word.inner).to_string()
    }

    #[pyo3(signature = (radius, budget = confgrowth::DEFAULT_VERTEX_BUDGET))]
    fn sphere_counts(&self, radius: usize, budget: usize) -> PyResult<Vec<u64>> {
        Ok(schreier::bfs_ball(&self.inner, radius, budget).map_err(to_py)?.counts())
    }

    #[pyo3(signature = (max_len, budget = confgrowth::DEFAULT_VERTEX_BUDGET))]
    fn loop_counts(&self, max_len: usize, budget: usize) -> PyResult<Vec<u64>> {
        schreier::loop_counts(&self.inner, max_len, budget).map_err(to_py)
    }

    #[pyo3(signature = (budget = confgrowth::DEFAULT_VERTEX_BUDGET))]
    fn hashimoto_growth(&self, py: Python<'_>, budget: usize) -> PyResult<Py<PyAny>> {
        let est = schreier::hashimoto_growth(&self.inner, budget).map_err(to_py)?;
        to_dict(py, &est)
    }

    /// Whether every vertex of the ball carries a loop labelled by some `p`.
    #[pyo3(signature = (p, radius, budget = confgrowth::DEFAULT_VERTEX_BUDGET))]
    fn is_confined(&self, p: Vec<String>, radius: usize, budget: usize) -> PyResult<(bool, Option<String>)> {
        let p = parse_words(&self.inner, &p)?;
        let rep = schreier::confinement_check(&self.inner, &p, radius, budget).map_err(to_py)?;
        Ok((rep.holds, rep.failing_vertex.map(|v| v.to_string())))
    }

    #[pyo3(signature = (radius, budget = confgrowth::DEFAULT_VERTEX_BUDGET))]
    fn certify_gap(&self, py: Python<'_>, radius: usize, budget: usize) -> PyResult<Py<PyAny>> {
        let cert = growth::certify_gap(&self.inner, radius, budget).map_err(to_py)?;
        to_dict(py, &cert)
    }

    /// Builds and verifies the inflation map for `g`; returns the full report.
    #[pyo3(signature = (g, p, piece_len = 1, f_candidates = None, s = 1.0, max_bits = insertion::DEFAULT_MAX_BITS))]
    #[allow(clippy::too_many_arguments)]
    fn insert(
        &self,
        py: Python<'_>,
        g: &str,
        p: Vec<String>,
        piece_len: usize,
        f_candidates: Option<Vec<String>>,
        s: f64,
        max_bits: usize,
    ) -> PyResult<Py<PyAny>> {
        let config = RunConfig {
            backend: Some("trivial".into()),
            rank: Some(self.inner.rank()),
            g: Some(g.to_string()),
            p: Some(p),
            piece_len: Some(piece_len),
            f_candidates,
            s: Some(vec![s]),
            max_bits: Some(max_bits),
            ..RunConfig::default()
        };
        let mut resolved = config.resolve().map_err(to_py)?;
        resolved.graph = self.inner.clone();
        resolved.spec = self.spec.clone();
        let outcome = report::cmd_insert(&resolved).map_err(to_py)?;
        to_dict(py, &outcome.report)
    }

    fn __repr__(&self) -> String {
        format!("CosetGraph({:?}, rank={})", self.spec, self.inner.rank())
    }
}

/// Least-squares growth rate of `counts` (`"spheres"`, `"balls"` or `"closed-walks"`).
#[pyfunction]
#[pyo3(signature = (counts, kind = "spheres"))]
fn estimate_rate(py: Python<'_>, counts: Vec<u64>, kind: &str) -> PyResult<Py<PyAny>> {
    let kind = match kind {
        "spheres" => growth::CountKind::Spheres,
        "balls" => growth::CountKind::Balls,
        "closed-walks" => growth::CountKind::ClosedWalks,
        other => return Err(PyValueError::new_err(format!("unknown count kind {other:?}"))),
    };
    let est = growth::estimate_rate(&counts, kind, growth::WindowPolicy::TopHalf).map_err(to_py)?;
    to_dict(py, &est)
}

#[pyfunction]
fn appendix1_bound(d: u32, r: u32) -> PyResult<f64> {
    growth::appendix1_bound(d, r).map_err(to_py)
}

/// Returns `(alpha, bound)`.
#[pyfunction]
fn appendix2_bound(n: u32, m: u32) -> PyResult<(f64, f64)> {
    let b = growth::appendix2_bound(n, m).map_err(to_py)?;
    Ok((b.alpha, b.bound))
}

#[pyfunction]
fn rho(theta: f64, r: f64, s: f64) -> PyResult<f64> {
    Ok(growth::rho(growth::GapFunctionParams::new(theta, r).map_err(to_py)?, s))
}

#[pyfunction]
fn find_gap_omega(py: Python<'_>, theta: f64, r: f64, omega: f64) -> PyResult<Py<PyAny>> {
    let params = growth::GapFunctionParams::new(theta, r).map_err(to_py)?;
    to_dict(py, &growth::find_gap_omega(params, omega).map_err(to_py)?)
}

/// Runs `analyze`, `certify`, `insert` or `verify` on a JSON config and
/// returns `(status, report)`.
#[pyfunction]
fn run(py: Python<'_>, command: &str, config_json: &str) -> PyResult<(i32, Py<PyAny>)> {
    let resolved = RunConfig::from_json(config_json)
        .and_then(|c| c.resolve())
        .map_err(to_py)?;
    let outcome = match command {
        "analyze" => report::cmd_analyze(&resolved),
        "certify" => report::cmd_certify(&resolved),
        "insert" => report::cmd_insert(&resolved),
        "verify" => report::cmd_verify(&resolved),
        other => return Err(PyValueError::new_err(format!("unknown command {other:?}"))),
    }
    .map_err(to_py)?;
    Ok((outcome.status, to_dict(py, &outcome.report)?))
}

#[pymodule]
fn pyconfgrowth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWord>()?;
    m.add_class::<PyCosetGraph>()?;
    m.add_function(wrap_pyfunction!(estimate_rate, m)?)?;
    m.add_function(wrap_pyfunction!(appendix1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(appendix2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(find_gap_omega, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
