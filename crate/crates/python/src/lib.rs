//! Python bindings: trajectory I/O, segmentation, synthetic suites and the
//! evaluation metric.

use std::path::PathBuf;

use moseg::pipeline::{segment, Method, PipelineConfig};
use moseg::synth::{make_benchmark_suite, write_suite, Archetype};
use moseg::{load_trajectories, save_trajectories, Error, TrajectorySet};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e.category() {
        "io" => PyOSError::new_err(e.to_string()),
        "numerical" => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Tracked image points over a fixed number of frames.
#[pyclass(name = "Trajectories", module = "moseg_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyTrajectories {
    inner: TrajectorySet,
}

#[pymethods]
impl PyTrajectories {
    /// Build from per-point tracks: each track holds one `(x, y)` or
    /// `None` per frame. Labels are 0-based motion indices.
    #[new]
    #[pyo3(signature = (tracks, labels=None))]
    fn new(tracks: Vec<Vec<Option<(f64, f64)>>>, labels: Option<Vec<usize>>) -> PyResult<Self> {
        let frames = tracks.first().map_or(0, Vec::len);
        let tracks = tracks
            .into_iter()
            .map(|t| t.into_iter().map(|p| p.map(|(x, y)| [x, y])).collect())
            .collect();
        let inner = TrajectorySet::new(frames, tracks, labels).map_err(to_py)?;
        Ok(PyTrajectories { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_trajectories(path)
            .map(|inner| PyTrajectories { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        TrajectorySet::parse(text)
            .map(|inner| PyTrajectories { inner })
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_trajectories(&self.inner, path).map_err(to_py)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn num_frames(&self) -> usize {
        self.inner.num_frames()
    }

    #[getter]
    fn num_points(&self) -> usize {
        self.inner.num_points()
    }

    #[getter]
    fn num_motions(&self) -> Option<usize> {
        self.inner.num_motions()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(<[usize]>::to_vec)
    }

    /// Position of `point` in `frame`, or `None` where invisible.
    fn position(&self, point: usize, frame: usize) -> PyResult<Option<(f64, f64)>> {
        if point >= self.inner.num_points() || frame >= self.inner.num_frames() {
            return Err(PyValueError::new_err("point or frame out of range"));
        }
        Ok(self.inner.position(point, frame).map(|[x, y]| (x, y)))
    }

    fn __len__(&self) -> usize {
        self.inner.num_points()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectories(frames={}, points={}, motions={})",
            self.inner.num_frames(),
            self.inner.num_points(),
            self.inner.num_motions().map_or("None".into(), |m| m.to_string())
        )
    }
}

/// Segment trajectories into motions; returns 0-based labels.
///
/// `motions` defaults to the number of ground-truth motions. The GIL is
/// released while the pipeline runs.
#[pyfunction]
#[pyo3(signature = (
    trajectories, motions=None, method="subset", *, seed=0, budget=None,
    h_fraction=None, epsilon_quantile=None, lambda_=None, gamma=None, restarts=None,
))]
#[allow(clippy::too_many_arguments)]
fn segment_trajectories(
    py: Python<'_>,
    trajectories: &PyTrajectories,
    motions: Option<usize>,
    method: &str,
    seed: u64,
    budget: Option<usize>,
    h_fraction: Option<f64>,
    epsilon_quantile: Option<f64>,
    lambda_: Option<f64>,
    gamma: Option<f64>,
    restarts: Option<usize>,
) -> PyResult<Vec<usize>> {
    let method: Method = method.parse().map_err(to_py)?;
    let t = &trajectories.inner;
    let m = motions
        .or(t.num_motions())
        .ok_or_else(|| PyValueError::new_err("motions is required for unlabelled trajectories"))?;
    let d = PipelineConfig::default();
    let cfg = PipelineConfig {
        budget,
        seed,
        h_fraction: h_fraction.unwrap_or(d.h_fraction),
        epsilon_quantile: epsilon_quantile.unwrap_or(d.epsilon_quantile),
        lambda: lambda_.unwrap_or(d.lambda),
        gamma: gamma.unwrap_or(d.gamma),
        restarts: restarts.unwrap_or(d.restarts),
        ..d
    };
    py.detach(|| segment(t, m, method, &cfg))
        .map(|s| s.labeling.labels)
        .map_err(to_py)
}

/// Fraction of misassigned points under the best cluster matching.
#[pyfunction]
fn classification_error(pred: Vec<usize>, truth: Vec<usize>) -> PyResult<f64> {
    moseg::classification_error(&pred, &truth).map_err(to_py)
}

/// A synthetic suite as `(name, trajectories, motions)` tuples.
#[pyfunction]
#[pyo3(signature = (archetype, seed=1))]
fn synth_suite(archetype: &str, seed: u64) -> PyResult<Vec<(String, PyTrajectories, usize)>> {
    let a: Archetype = archetype.parse().map_err(to_py)?;
    let suite = make_benchmark_suite(a, seed).map_err(to_py)?;
    Ok(suite
        .into_iter()
        .map(|s| {
            let t = PyTrajectories {
                inner: s.scene.trajectories,
            };
            (s.name, t, s.num_motions)
        })
        .collect())
}

/// Write a synthetic suite to `directory`; returns the manifest path.
#[pyfunction]
#[pyo3(signature = (archetype, directory, seed=1))]
fn write_synth_suite(archetype: &str, directory: PathBuf, seed: u64) -> PyResult<PathBuf> {
    let a: Archetype = archetype.parse().map_err(to_py)?;
    let suite = make_benchmark_suite(a, seed).map_err(to_py)?;
    write_suite(directory, &suite).map_err(to_py)
}

#[pymodule]
pub fn moseg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectories>()?;
    m.add_function(wrap_pyfunction!(segment_trajectories, m)?)?;
    m.add_function(wrap_pyfunction!(classification_error, m)?)?;
    m.add_function(wrap_pyfunction!(synth_suite, m)?)?;
    m.add_function(wrap_pyfunction!(write_synth_suite, m)?)?;
    m.add("METHODS", Method::ALL.map(Method::name).to_vec())?;
    m.add("ARCHETYPES", Archetype::ALL.map(Archetype::name).to_vec())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
