//! Python bindings: the main directional/belief/collision primitives plus
//! scenario execution, for scripting experiments from Python.
//!
//! Build and use:
//!
//!     cargo build -p cease-py --release
//!     cp target/release/libcease_py.so cease_py.so
//!     python3 -c "import cease_py; print(cease_py.__doc__)"

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cease_core::sim::{
    load_scenario, run_policy, temporal_coverage, PartName, Policy,
};

fn to_py_err(e: cease_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A camera pointing direction given by azimuth and elevation, radians.
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct VisionState {
    inner: cease_core::geometry::VisionState,
}

#[pymethods]
impl VisionState {
    #[new]
    fn new(azimuth: f64, elevation: f64) -> Self {
        Self {
            inner: cease_core::geometry::VisionState::new(azimuth, elevation),
        }
    }

    #[getter]
    fn azimuth(&self) -> f64 {
        self.inner.azimuth
    }

    #[getter]
    fn elevation(&self) -> f64 {
        self.inner.elevation
    }

    /// Great-circle angle to another pointing direction, radians.
    fn angular_distance_to(&self, other: &VisionState) -> f64 {
        cease_core::geometry::angular_distance(self.inner, other.inner)
    }

    /// Unit direction vector (x, y, z).
    fn unit_vector(&self) -> (f64, f64, f64) {
        let v = self.inner.unit_vector();
        (v.x, v.y, v.z)
    }

    fn __repr__(&self) -> String {
        format!(
            "VisionState(azimuth={:.6}, elevation={:.6})",
            self.inner.azimuth, self.inner.elevation
        )
    }
}

/// Great-circle angle between two (azimuth, elevation) directions, radians.
#[pyfunction]
fn angular_distance(az1: f64, el1: f64, az2: f64, el2: f64) -> f64 {
    cease_core::geometry::angular_distance(
        cease_core::geometry::VisionState::new(az1, el1),
        cease_core::geometry::VisionState::new(az2, el2),
    )
}

/// Rotates a 3-vector about a unit axis by `theta` radians.
#[pyfunction]
fn rodrigues_rotate(o: [f64; 3], axis: [f64; 3], theta: f64) -> PyResult<[f64; 3]> {
    let rotated = cease_core::geometry::rodrigues_rotate(
        &Vector3::from(o),
        &Vector3::from(axis),
        theta,
    )
    .map_err(to_py_err)?;
    Ok([rotated.x, rotated.y, rotated.z])
}

/// P(‖X‖ < radius) for a zero-mean Gaussian with the given 3×3 covariance.
#[pyfunction]
fn neighborhood_probability(cov: [[f64; 3]; 3], radius: f64) -> PyResult<f64> {
    let m = Matrix3::from_fn(|r, c| cov[r][c]);
    cease_core::belief::neighborhood_probability(&m, radius).map_err(to_py_err)
}

/// The four-branch collision probability estimate (0, 1−u, or 1).
#[pyfunction]
fn cpe_value(collides: bool, collides_accelerated: bool, observed: bool, certainty: f64) -> f64 {
    cease_core::collision::cpe_value(collides, collides_accelerated, observed, certainty)
}

fn parse_policy(name: &str) -> PyResult<Policy> {
    name.parse::<Policy>().map_err(to_py_err)
}

fn coverage_dict<'py>(
    py: Python<'py>,
    scenario_path: &str,
    policy: Policy,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut scenario = load_scenario(Path::new(scenario_path)).map_err(to_py_err)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let trace = run_policy(&scenario, policy, false).map_err(to_py_err)?;
    let coverage = temporal_coverage(&trace);
    let mut parts = HashMap::new();
    for (part, ratio) in PartName::ALL.iter().zip(coverage.parts.iter()) {
        parts.insert(part.label().to_string(), *ratio);
    }
    let dict = PyDict::new(py);
    dict.set_item("policy", policy.to_string())?;
    dict.set_item("scenario", scenario.name.clone())?;
    dict.set_item("seed", scenario.seed)?;
    dict.set_item("steps", scenario.steps())?;
    dict.set_item("parts", parts)?;
    dict.set_item("avg", coverage.avg)?;
    Ok(dict)
}

/// Runs one policy over a scenario file and returns its temporal coverage.
#[pyfunction]
#[pyo3(signature = (scenario_path, policy, seed=None))]
fn run_scenario<'py>(
    py: Python<'py>,
    scenario_path: &str,
    policy: &str,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    coverage_dict(py, scenario_path, parse_policy(policy)?, seed)
}

/// Runs several policies on the same scenario and seed.
#[pyfunction]
#[pyo3(signature = (scenario_path, policies=None, seed=None))]
fn compare_policies<'py>(
    py: Python<'py>,
    scenario_path: &str,
    policies: Option<Vec<String>>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let policies = match policies {
        Some(names) => names
            .iter()
            .map(|n| parse_policy(n))
            .collect::<PyResult<Vec<_>>>()?,
        None => Policy::ALL.to_vec(),
    };
    let out = PyDict::new(py);
    for policy in policies {
        out.set_item(policy.to_string(), coverage_dict(py, scenario_path, policy, seed)?)?;
    }
    Ok(out)
}

/// Validates a scenario file, returning a short summary.
#[pyfunction]
fn validate_scenario<'py>(py: Python<'py>, scenario_path: &str) -> PyResult<Bound<'py, PyDict>> {
    let scenario = load_scenario(Path::new(scenario_path)).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("name", scenario.name.clone())?;
    dict.set_item("cameras", scenario.cameras.len())?;
    dict.set_item("humanoids", scenario.humanoids.len())?;
    dict.set_item("steps", scenario.steps())?;
    dict.set_item("dt_s", scenario.dt)?;
    Ok(dict)
}

#[pymodule]
fn cease_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<VisionState>()?;
    m.add_function(wrap_pyfunction!(angular_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rodrigues_rotate, m)?)?;
    m.add_function(wrap_pyfunction!(neighborhood_probability, m)?)?;
    m.add_function(wrap_pyfunction!(cpe_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(compare_policies, m)?)?;
    m.add_function(wrap_pyfunction!(validate_scenario, m)?)?;
    Ok(())
}
