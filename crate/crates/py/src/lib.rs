//! Python module `sensecov`. Documents cross the boundary as JSON text.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sensecov::monitor::Scenario;
use sensecov::mtl::parse_mtl;
use sensecov::session::{CommitRequest, CreateRequest, EvaluateRequest};
use sensecov::{evaluate_candidate, rank_parameters, reference, Criterion, Error, ErrorClass, EvalSettings, QualityReport};

create_exception!(sensecov, InfeasibleError, PyException, "Skill parameter cannot be used in the current world state.");

fn to_py(e: Error) -> PyErr {
    match e.class() {
        ErrorClass::Validation => PyValueError::new_err(e.to_string()),
        ErrorClass::Infeasible => InfeasibleError::new_err(e.to_string()),
        ErrorClass::Runtime => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("documents serialise")
}

pub fn normalise_mtl(text: &str) -> Result<String, Error> {
    Ok(parse_mtl(text)?.to_string())
}

pub fn evaluate_json(scene: &str, skill: &str, parameter: &str, min_n: usize, k: usize) -> Result<String, Error> {
    let scene = sensecov::Scene::from_json(scene)?;
    let skill = sensecov::SkillDef::from_json(skill)?;
    let mut settings = EvalSettings::uniform(min_n);
    settings.policy.k = k;
    Ok(evaluate_candidate(&skill, parameter, &scene, &settings)?.report.to_json())
}

pub fn rank_json(reports: &str, criterion: &str) -> Result<Vec<String>, Error> {
    let reports: Vec<QualityReport> = serde_json::from_str(reports)?;
    let criterion: Criterion = criterion.parse()?;
    Ok(rank_parameters(&reports, criterion).into_iter().map(|r| r.parameter).collect())
}

/// Normalised text of an MTL formula.
#[pyfunction]
fn format_mtl(text: &str) -> PyResult<String> {
    normalise_mtl(text).map_err(to_py)
}

/// Quality report (JSON) of one candidate parameter.
#[pyfunction]
#[pyo3(signature = (scene, skill, parameter, min_n = 10, k = 1))]
fn evaluate(py: Python<'_>, scene: &str, skill: &str, parameter: &str, min_n: usize, k: usize) -> PyResult<String> {
    py.detach(|| evaluate_json(scene, skill, parameter, min_n, k)).map_err(to_py)
}

/// Parameters of a JSON list of quality reports, best first.
#[pyfunction]
#[pyo3(signature = (reports, criterion = "lexicographic"))]
fn rank(reports: &str, criterion: &str) -> PyResult<Vec<String>> {
    rank_json(reports, criterion).map_err(to_py)
}

/// Session creation document (JSON) of a bundled reference setup.
#[pyfunction]
fn reference_setup(name: &str) -> PyResult<String> {
    reference::create_request(name, None).map(|r| json(&r)).map_err(to_py)
}

/// An in-memory programming session.
#[pyclass(module = "sensecov")]
struct Session {
    inner: sensecov::Session,
}

#[pymethods]
impl Session {
    /// Either `reference="pickup"` or a creation document.
    #[new]
    #[pyo3(signature = (document = None, reference = None, id = "session"))]
    fn new(document: Option<&str>, reference: Option<&str>, id: &str) -> PyResult<Self> {
        let req: CreateRequest = match (document, reference) {
            (Some(doc), None) => serde_json::from_str(doc).map_err(|e| to_py(e.into()))?,
            (None, Some(name)) => reference::create_request(name, None).map_err(to_py)?,
            _ => return Err(PyValueError::new_err("pass exactly one of document or reference")),
        };
        let inner = sensecov::Session::new(id, &req).map_err(to_py)?;
        Ok(Session { inner })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    /// Current world state atoms.
    #[getter]
    fn world(&self) -> Vec<String> {
        self.inner.world.atoms().map(|a| a.to_string()).collect()
    }

    #[pyo3(signature = (skill, filter = "", min_n = 10, k = 1, criterion = "lexicographic"))]
    fn evaluate(&mut self, skill: &str, filter: &str, min_n: usize, k: usize, criterion: &str) -> PyResult<String> {
        let mut req = EvaluateRequest::new(skill, filter);
        req.min_n = min_n;
        req.k = k;
        req.criterion = criterion.parse().map_err(to_py)?;
        self.inner.evaluate(&req).map(|r| json(&r)).map_err(to_py)
    }

    fn commit(&mut self, skill: &str, parameter: &str) -> PyResult<String> {
        let req = CommitRequest {
            skill: skill.into(),
            parameter: parameter.into(),
        };
        self.inner.commit(&req).map(|s| json(&s)).map_err(to_py)
    }

    /// Runs the program; without a scenario it runs fault-free.
    #[pyo3(signature = (scenario = None))]
    fn run(&mut self, scenario: Option<&str>) -> PyResult<String> {
        let scenario = match scenario {
            Some(text) => Scenario::from_json(text).map_err(to_py)?,
            None => Scenario::default(),
        };
        self.inner.run(&scenario).map(|r| json(&r)).map_err(to_py)
    }

    fn reports(&self) -> String {
        json(&self.inner.reports())
    }
}

#[pymodule]
#[pyo3(name = "sensecov")]
fn sensecov_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(format_mtl, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(reference_setup, m)?)?;
    m.add_class::<Session>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    Ok(())
}
