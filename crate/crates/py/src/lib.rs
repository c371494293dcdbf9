//! Python bindings. The extension module is named `tetratomo`.

use std::collections::BTreeMap;

use nalgebra::Matrix3;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use tetratomo as core;
use tetratomo::adaptive::{Alignment, StrategyConfig, StrategyKind, TwoQubitStrategy};
use tetratomo::bloch::StateKind;
use tetratomo::{ClickCounts, FitMode, TomoError};

fn to_py(e: TomoError) -> PyErr {
    match e {
        TomoError::Io(_) => PyIOError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, value: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what} '{value}'")))
}

/// A qubit state given by its Pauli vector.
#[pyclass(name = "PauliVector", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyPauliVector(core::PauliVector);

#[pymethods]
impl PyPauliVector {
    #[new]
    fn new(x: f64, y: f64, z: f64) -> PyResult<Self> {
        core::PauliVector::new(x, y, z).map(PyPauliVector).map_err(to_py)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.vector().x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.vector().y
    }

    #[getter]
    fn z(&self) -> f64 {
        self.0.vector().z
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn is_pure(&self) -> bool {
        self.0.is_pure()
    }

    fn to_list(&self) -> [f64; 3] {
        let v = self.0.vector();
        [v.x, v.y, v.z]
    }

    fn __repr__(&self) -> String {
        let v = self.0.vector();
        format!("PauliVector({}, {}, {})", v.x, v.y, v.z)
    }
}

/// Orientation of the four measurement directions.
#[pyclass(name = "TetraFrame", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyTetraFrame(core::TetraFrame);

#[pymethods]
impl PyTetraFrame {
    /// The reference tetrahedron, or a rotated copy given a 3x3 rotation.
    #[new]
    #[pyo3(signature = (rotation=None))]
    fn new(rotation: Option<[[f64; 3]; 3]>) -> PyResult<Self> {
        match rotation {
            None => Ok(PyTetraFrame(core::TetraFrame::reference())),
            Some(r) => {
                let flat: Vec<f64> = r.iter().flatten().copied().collect();
                core::TetraFrame::from_rotation(Matrix3::from_row_slice(&flat))
                    .map(PyTetraFrame)
                    .map_err(to_py)
            }
        }
    }

    fn vectors(&self) -> Vec<[f64; 3]> {
        self.0.vectors().iter().map(|a| [a.x, a.y, a.z]).collect()
    }
}

fn frame_or_reference(frame: Option<PyTetraFrame>) -> core::TetraFrame {
    frame.map(|f| f.0).unwrap_or_else(core::TetraFrame::reference)
}

/// Result of a maximum-likelihood fit.
#[pyclass(name = "Estimate", frozen)]
pub struct PyEstimate(core::Estimate);

#[pymethods]
impl PyEstimate {
    #[getter]
    fn state(&self) -> PyPauliVector {
        PyPauliVector(self.0.s)
    }

    #[getter]
    fn ptilde(&self) -> Vec<f64> {
        self.0.ptilde.clone()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn branch(&self) -> &'static str {
        match self.0.branch {
            core::Branch::Interior => "interior",
            core::Branch::Boundary => "boundary",
        }
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.0.loglik
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        let v = self.0.s.vector();
        format!("Estimate(S=({}, {}, {}), branch={})", v.x, v.y, v.z, self.branch())
    }
}

#[pyfunction]
#[pyo3(signature = (state, frame=None))]
fn outcome_probabilities(state: PyPauliVector, frame: Option<PyTetraFrame>) -> [f64; 4] {
    *core::bloch::outcome_probabilities(&state.0, &frame_or_reference(frame)).values()
}

#[pyfunction]
#[pyo3(signature = (p, frame=None))]
fn reconstruct_pauli(p: [f64; 4], frame: Option<PyTetraFrame>) -> PyResult<PyPauliVector> {
    let p = core::Probabilities4::new(p).map_err(to_py)?;
    Ok(PyPauliVector(core::bloch::reconstruct_pauli(&p, &frame_or_reference(frame))))
}

#[pyfunction]
#[pyo3(signature = (state, n, seed, frame=None))]
fn sample_clicks(state: PyPauliVector, n: u64, seed: u64, frame: Option<PyTetraFrame>) -> [u64; 4] {
    core::clicks::simulate_clicks(&state.0, &frame_or_reference(frame), n, seed).n
}

#[pyfunction]
#[pyo3(signature = (counts, frame=None, mode="auto"))]
fn ml_estimate_four(counts: [u64; 4], frame: Option<PyTetraFrame>, mode: &str) -> PyResult<PyEstimate> {
    let mode: FitMode = parse("mode", mode)?;
    core::ml::ml_estimate_four(&ClickCounts::new(counts), &frame_or_reference(frame), mode)
        .map(PyEstimate)
        .map_err(to_py)
}

/// Counts ordered `x+, x-, y+, y-, z+, z-`.
#[pyfunction]
fn ml_estimate_six(counts: [u64; 6]) -> PyResult<PyEstimate> {
    core::ml::ml_estimate_six(&core::SixCounts::new(counts), &core::SixFrame::standard())
        .map(PyEstimate)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (a, b))]
fn uhlmann_fidelity(a: PyPauliVector, b: PyPauliVector) -> f64 {
    core::metrics::uhlmann_fidelity(&a.0, &b.0)
}

#[pyfunction]
#[pyo3(signature = (state, n, frame=None))]
fn violation_probability(state: PyPauliVector, n: u64, frame: Option<PyTetraFrame>) -> PyResult<f64> {
    core::metrics::violation_probability(&state.0, &frame_or_reference(frame), n).map_err(to_py)
}

/// Closed-form error predictions; `None` where a formula does not apply.
#[pyfunction]
#[pyo3(signature = (state, n, frame=None))]
fn predictions(state: PyPauliVector, n: u64, frame: Option<PyTetraFrame>) -> PyResult<BTreeMap<String, Option<f64>>> {
    let p = core::metrics::predictions(&state.0, &frame_or_reference(frame), n).map_err(to_py)?;
    let value = serde_json::to_value(p).map_err(|e| PyValueError::new_err(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// One simulated run; returns `(sq_dist, fidelity, estimate)`.
#[pyfunction]
#[pyo3(signature = (state, n, seed, strategy="static", alignment="parallel", mode="auto", misalignment_deg=0.0))]
#[allow(clippy::too_many_arguments)]
fn run_trial(
    state: PyPauliVector,
    n: u64,
    seed: u64,
    strategy: &str,
    alignment: &str,
    mode: &str,
    misalignment_deg: f64,
) -> PyResult<(f64, f64, PyEstimate)> {
    let config = StrategyConfig {
        kind: parse::<StrategyKind>("strategy", strategy)?,
        alignment: parse::<Alignment>("alignment", alignment)?,
        n,
        misalignment_deg,
        seed,
        mode: parse("mode", mode)?,
    };
    config.validate().map_err(to_py)?;
    let mut rng = core::rng::seeded(seed);
    let t = core::adaptive::run_trial(&config, &state.0, &mut rng).map_err(to_py)?;
    Ok((t.sq_dist, t.fidelity, PyEstimate(t.estimate)))
}

/// Exact mean `|S - s|^2` after two clicks.
#[pyfunction]
#[pyo3(signature = (strategy="nonadaptive", average="pure"))]
fn two_qubit_exhaustive(strategy: &str, average: &str) -> PyResult<f64> {
    let strategy: TwoQubitStrategy = parse("strategy", strategy)?;
    let average: StateKind = parse("average", average)?;
    Ok(core::adaptive::two_qubit_exhaustive(strategy, average))
}

/// Gate-network probabilities `p_1..p_4` and post-measurement Pauli vectors.
#[pyfunction]
fn run_network(state: PyPauliVector) -> ([f64; 4], Vec<Option<[f64; 3]>>) {
    let out = core::circuit::run_network(&state.0);
    let posts = out
        .post_states
        .iter()
        .map(|s| s.map(|s| [s.vector().x, s.vector().y, s.vector().z]))
        .collect();
    (out.probabilities, posts)
}

/// Runs an experiment from its JSON configuration; returns `(csv, summary_json)`.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<(String, String)> {
    let config = core::experiment::ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let report = core::experiment::run_experiment(&config).map_err(to_py)?;
    let summary = serde_json::to_string(&report.summary).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((report.csv(), summary))
}

#[pymodule]
#[pyo3(name = "tetratomo")]
fn tetratomo_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliVector>()?;
    m.add_class::<PyTetraFrame>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(outcome_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_pauli, m)?)?;
    m.add_function(wrap_pyfunction!(sample_clicks, m)?)?;
    m.add_function(wrap_pyfunction!(ml_estimate_four, m)?)?;
    m.add_function(wrap_pyfunction!(ml_estimate_six, m)?)?;
    m.add_function(wrap_pyfunction!(uhlmann_fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(violation_probability, m)?)?;
    m.add_function(wrap_pyfunction!(predictions, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(two_qubit_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(run_network, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
