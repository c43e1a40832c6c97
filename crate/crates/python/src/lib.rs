//! Python bindings for the `maxcut_predict` solvers.
//!
//! Cuts and predictions cross the boundary as lists of ints; graphs are
//! wrapped in [`PyGraph`].

use maxcut_predict::graph::{self, CutAssignment, Graph, WeightLaw, Width};
use maxcut_predict::partial::{self, TauGrid};
use maxcut_predict::pipeline::{self, NoisyConfig};
use maxcut_predict::prediction::{self, Independence, NoisyPrediction, PartialPrediction};
use maxcut_predict::{oracle, wide, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::TooLarge { .. } | Error::Precondition(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn cut(x: Vec<i8>) -> PyResult<CutAssignment> {
    CutAssignment::new(x).map_err(py_err)
}

fn independence(pairwise: bool) -> Independence {
    if pairwise {
        Independence::PairwiseOnly
    } else {
        Independence::Mutual
    }
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(PyGraph {
            inner: Graph::new(n, edges).map_err(py_err)?,
        })
    }

    /// Parses the `n m` / `i j w` edge-list format.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::load_edge_list(text).map_err(py_err)?,
        })
    }

    fn to_edge_list(&self) -> String {
        graph::save_edge_list(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.i, e.j, e.w)).collect()
    }

    /// Sum of weighted degrees (each edge counted twice).
    #[getter]
    fn total_weight(&self) -> f64 {
        self.inner.total_weight()
    }

    fn cut_value(&self, x: Vec<i8>) -> PyResult<f64> {
        graph::cut_value(&self.inner, &cut(x)?).map_err(py_err)
    }

    /// `True` when the graph is Δ-wide for the given η.
    fn is_wide(&self, delta: usize, eta: f64) -> PyResult<bool> {
        let rep = graph::classify(&self.inner, delta, eta).map_err(py_err)?;
        Ok(rep.graph_class == Width::Wide)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.edges().len())
    }
}

#[pyfunction]
#[pyo3(signature = (n, p, seed=0, uniform_weights=false))]
fn erdos_renyi(n: usize, p: f64, seed: u64, uniform_weights: bool) -> PyResult<PyGraph> {
    let law = if uniform_weights {
        WeightLaw::Uniform
    } else {
        WeightLaw::Unit
    };
    let g = graph::gen_erdos_renyi(n, p, law, seed).map_err(py_err)?;
    Ok(PyGraph { inner: g.graph })
}

#[pyfunction]
#[pyo3(signature = (truth, q_cross, q_within, seed=0))]
fn planted(truth: Vec<i8>, q_cross: f64, q_within: f64, seed: u64) -> PyResult<PyGraph> {
    let g = graph::gen_planted(&cut(truth)?, q_cross, q_within, seed).map_err(py_err)?;
    Ok(PyGraph { inner: g })
}

#[pyfunction]
#[pyo3(signature = (n, d, seed=0))]
fn random_regular(n: usize, d: usize, seed: u64) -> PyResult<PyGraph> {
    Ok(PyGraph {
        inner: graph::gen_random_regular(n, d, seed).map_err(py_err)?,
    })
}

/// Exact optimum `(value, cut)` by enumeration.
#[pyfunction]
fn exact_maxcut(g: &PyGraph) -> PyResult<(f64, Vec<i8>)> {
    let (v, x) = oracle::exact_maxcut(&g.inner).map_err(py_err)?;
    Ok((v, x.into_inner()))
}

#[pyfunction]
#[pyo3(signature = (truth, epsilon, seed=0, pairwise=false))]
fn sample_noisy(truth: Vec<i8>, epsilon: f64, seed: u64, pairwise: bool) -> PyResult<Vec<i8>> {
    let y = prediction::sample_noisy(&cut(truth)?, epsilon, seed, independence(pairwise)).map_err(py_err)?;
    Ok(y.y)
}

#[pyfunction]
#[pyo3(signature = (truth, epsilon, seed=0, pairwise=false))]
fn sample_partial(truth: Vec<i8>, epsilon: f64, seed: u64, pairwise: bool) -> PyResult<Vec<i8>> {
    let y = prediction::sample_partial(&cut(truth)?, epsilon, seed, independence(pairwise)).map_err(py_err)?;
    Ok(y.y)
}

/// Plain relaxation with the best of `roundings` hyperplane cuts.
#[pyfunction]
#[pyo3(signature = (g, seed=0, roundings=20))]
fn solve_gw(py: Python<'_>, g: &PyGraph, seed: u64, roundings: usize) -> PyResult<Vec<i8>> {
    let x = py.detach(|| wide::gw_best(&g.inner, seed, roundings)).map_err(py_err)?;
    Ok(x.into_inner())
}

/// Portfolio solver for a noisy prediction. Returns `(cut, value, branch)`.
#[pyfunction]
#[pyo3(signature = (g, prediction, epsilon, seed=0, eta=0.05, eps_prime=0.05, delta=None))]
#[allow(clippy::too_many_arguments)]
fn solve_noisy(
    py: Python<'_>,
    g: &PyGraph,
    prediction: Vec<i8>,
    epsilon: f64,
    seed: u64,
    eta: f64,
    eps_prime: f64,
    delta: Option<usize>,
) -> PyResult<(Vec<i8>, f64, &'static str)> {
    let y = NoisyPrediction::new(prediction, epsilon).map_err(py_err)?;
    let cfg = NoisyConfig {
        seed,
        eta,
        eps_prime,
        delta,
        ..NoisyConfig::default()
    };
    let out = py
        .detach(|| pipeline::solve_noisy(&g.inner, &y, &cfg))
        .map_err(py_err)?;
    Ok((out.cut.into_inner(), out.value, out.tag.tag()))
}

/// Label-fixed relaxation for a partial prediction (0 marks a hidden label).
#[pyfunction]
#[pyo3(signature = (g, prediction, epsilon, seed=0, roundings=20))]
fn solve_partial_gw(
    py: Python<'_>,
    g: &PyGraph,
    prediction: Vec<i8>,
    epsilon: f64,
    seed: u64,
    roundings: usize,
) -> PyResult<Vec<i8>> {
    let y = PartialPrediction::new(prediction, epsilon).map_err(py_err)?;
    let x = py
        .detach(|| partial::solve_partial_gw(&g.inner, &y, seed, roundings))
        .map_err(py_err)?;
    Ok(x.into_inner())
}

/// τ-constrained relaxation with threshold rounding. Returns
/// `(cut, value, best_tau)`.
#[pyfunction]
#[pyo3(signature = (g, prediction, epsilon, seed=0, roundings=20, tau_step=0.05))]
fn solve_partial_rt(
    py: Python<'_>,
    g: &PyGraph,
    prediction: Vec<i8>,
    epsilon: f64,
    seed: u64,
    roundings: usize,
    tau_step: f64,
) -> PyResult<(Vec<i8>, f64, f64)> {
    let y = PartialPrediction::new(prediction, epsilon).map_err(py_err)?;
    let grid = TauGrid::new(tau_step).map_err(py_err)?;
    let out = py
        .detach(|| partial::solve_partial_rt(&g.inner, &y, &grid, seed, roundings))
        .map_err(py_err)?;
    Ok((out.cut.into_inner(), out.value, out.best_tau))
}

#[pymodule]
fn pymaxcut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(erdos_renyi, m)?)?;
    m.add_function(wrap_pyfunction!(planted, m)?)?;
    m.add_function(wrap_pyfunction!(random_regular, m)?)?;
    m.add_function(wrap_pyfunction!(exact_maxcut, m)?)?;
    m.add_function(wrap_pyfunction!(sample_noisy, m)?)?;
    m.add_function(wrap_pyfunction!(sample_partial, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gw, m)?)?;
    m.add_function(wrap_pyfunction!(solve_noisy, m)?)?;
    m.add_function(wrap_pyfunction!(solve_partial_gw, m)?)?;
    m.add_function(wrap_pyfunction!(solve_partial_rt, m)?)?;
    Ok(())
}
