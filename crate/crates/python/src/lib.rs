//! Python bindings: polytopes, flexibility cubes, reach sets and the batch runs.

use std::path::PathBuf;

use flexcube::cli::{self, ArtifactFormat, Command, RunOptions};
use flexcube::{FlexCube, FlexDynamics, Point, Polytope};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_points(rows: Vec<Vec<f64>>) -> Vec<Point> {
    rows.into_iter().map(Point::from_vec).collect()
}

/// Convex polytope held in both vertex and halfspace form.
#[pyclass(name = "Polytope", module = "pyflexcube", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPolytope {
    inner: Polytope,
}

#[pymethods]
impl PyPolytope {
    /// Convex hull of a list of points.
    #[staticmethod]
    fn from_points(points: Vec<Vec<f64>>) -> PyResult<Self> {
        Polytope::from_points(to_points(points)).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_box(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        Polytope::from_box(&lo, &hi).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn vertices(&self) -> Vec<Vec<f64>> {
        self.inner.vertices().iter().map(|v| v.iter().copied().collect()).collect()
    }

    /// Halfspaces `(normals, offsets)` with `normal · x <= offset`.
    fn halfspaces(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let h = self.inner.hrep();
        (h.normals().iter().map(|n| n.iter().copied().collect()).collect(), h.offsets().to_vec())
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn support(&self, direction: Vec<f64>) -> PyResult<f64> {
        if direction.len() != self.inner.dim() {
            return Err(value_err(format!("direction has {} entries, expected {}", direction.len(), self.inner.dim())));
        }
        Ok(self.inner.support(&Point::from_vec(direction)))
    }

    fn contains(&self, other: PyRef<'_, PyPolytope>) -> bool {
        self.inner.contains(&other.inner)
    }

    fn contains_point(&self, point: Vec<f64>) -> bool {
        point.len() == self.inner.dim() && self.inner.contains_point(&Point::from_vec(point))
    }

    fn hausdorff(&self, other: PyRef<'_, PyPolytope>) -> f64 {
        self.inner.hausdorff(&other.inner)
    }

    fn minkowski_sum(&self, other: PyRef<'_, PyPolytope>) -> PyResult<Self> {
        flexcube::minkowski_sum(&self.inner, &other.inner).map(|inner| Self { inner }).map_err(value_err)
    }

    /// `self ⊖ other`, or `None` when the difference is empty.
    fn pontryagin_diff(&self, other: PyRef<'_, PyPolytope>) -> PyResult<Option<Self>> {
        flexcube::remaining_flex(&self.inner, &other.inner)
            .map(|p| p.map(|inner| Self { inner }))
            .map_err(value_err)
    }

    /// Triangle mesh in OFF format.
    fn to_off(&self) -> PyResult<String> {
        flexcube::polytope::mesh::triangulate(&self.inner).map(|m| m.to_off()).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Polytope(dim={}, vertices={})", self.inner.dim(), self.inner.vertices().len())
    }
}

/// The six flexibility extremes of one unit or pool at one step.
#[pyclass(name = "FlexCube", module = "pyflexcube", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFlexCube {
    rho_plus: f64,
    rho_minus: f64,
    pi_plus: f64,
    pi_minus: f64,
    eps_plus: f64,
    eps_minus: f64,
    horizon: f64,
    time_index: usize,
}

impl From<FlexCube> for PyFlexCube {
    fn from(c: FlexCube) -> Self {
        Self {
            rho_plus: c.rho_plus,
            rho_minus: c.rho_minus,
            pi_plus: c.pi_plus,
            pi_minus: c.pi_minus,
            eps_plus: c.eps_plus,
            eps_minus: c.eps_minus,
            horizon: c.horizon,
            time_index: c.time_index,
        }
    }
}

impl PyFlexCube {
    fn cube(&self) -> FlexCube {
        FlexCube {
            rho_plus: self.rho_plus,
            rho_minus: self.rho_minus,
            pi_plus: self.pi_plus,
            pi_minus: self.pi_minus,
            eps_plus: self.eps_plus,
            eps_minus: self.eps_minus,
            horizon: self.horizon,
            time_index: self.time_index,
        }
    }
}

#[pymethods]
impl PyFlexCube {
    #[new]
    #[pyo3(signature = (rho, pi, eps, horizon = f64::INFINITY, time_index = 0))]
    fn new(rho: (f64, f64), pi: (f64, f64), eps: (f64, f64), horizon: f64, time_index: usize) -> Self {
        Self {
            rho_minus: rho.0,
            rho_plus: rho.1,
            pi_minus: pi.0,
            pi_plus: pi.1,
            eps_minus: eps.0,
            eps_plus: eps.1,
            horizon,
            time_index,
        }
    }

    fn to_polytope(&self) -> PyResult<PyPolytope> {
        self.cube().to_polytope().map(|inner| PyPolytope { inner }).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FlexCube(k={}, rho=[{}, {}], pi=[{}, {}], eps=[{}, {}])",
            self.time_index, self.rho_minus, self.rho_plus, self.pi_minus, self.pi_plus, self.eps_minus, self.eps_plus
        )
    }
}

/// A parsed scenario file.
#[pyclass(name = "Scenario", module = "pyflexcube", frozen, skip_from_py_object)]
struct PyScenario {
    inner: flexcube::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        flexcube::load_scenario(path).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn units(&self) -> Vec<String> {
        self.inner.units.keys().cloned().collect()
    }

    #[getter]
    fn pools(&self) -> Vec<String> {
        self.inner.pools.iter().map(|p| p.id.clone()).collect()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.grid.dt
    }

    /// Flexibility cube of `unit` at every scheduled step.
    #[pyo3(signature = (unit, horizon = None))]
    fn flex_timeline(&self, unit: &str, horizon: Option<f64>) -> PyResult<Vec<PyFlexCube>> {
        let params = &self.inner.unit(unit).map_err(value_err)?.params;
        let traj = self.inner.simulate_unit(unit).map_err(value_err)?;
        let settings = self.inner.flex_settings(horizon).map_err(value_err)?;
        let tl = flexcube::flex_timeline(unit, params, &traj, &settings).map_err(value_err)?;
        Ok(tl.entries.into_iter().map(Into::into).collect())
    }

    /// Reach sets of `unit` from its first nominal operating point.
    #[pyo3(signature = (unit, k_max = None))]
    fn reach(&self, unit: &str, k_max: Option<usize>) -> PyResult<Vec<PyPolytope>> {
        let first = self.flex_timeline(unit, None)?;
        let cube = first.first().ok_or_else(|| value_err("scenario has no steps"))?.cube();
        let gamma = self.inner.unit(unit).map_err(value_err)?.dissipation_gamma;
        let dynamics = FlexDynamics::from_cube(&cube, self.inner.grid.dt, gamma).map_err(value_err)?;
        let sets = flexcube::reach_until(&dynamics, k_max.unwrap_or(self.inner.grid.k_max)).map_err(value_err)?;
        Ok(sets.into_iter().map(|s| PyPolytope { inner: s.poly }).collect())
    }
}

/// Componentwise sum of cubes from the same step and horizon.
#[pyfunction]
fn aggregate_cubes(cubes: Vec<PyRef<'_, PyFlexCube>>) -> PyResult<PyFlexCube> {
    let cubes: Vec<FlexCube> = cubes.iter().map(|c| c.cube()).collect();
    flexcube::aggregate_cubes(&cubes).map(Into::into).map_err(value_err)
}

/// Minkowski sum of member volumes.
#[pyfunction]
fn aggregate_polytopes(vols: Vec<PyRef<'_, PyPolytope>>) -> PyResult<PyPolytope> {
    let vols: Vec<Polytope> = vols.iter().map(|p| p.inner.clone()).collect();
    flexcube::aggregate_polytopes(&vols).map(|inner| PyPolytope { inner }).map_err(value_err)
}

/// Tightest `(ρ, π, ε)` box around a disturbance series sampled every `dt` hours.
#[pyfunction]
fn needed_envelope(series: Vec<f64>, dt: f64) -> PyResult<PyFlexCube> {
    flexcube::needed_envelope(&series, dt, "python").map(|e| e.needed.into()).map_err(value_err)
}

/// `(covered, deficit_axes)` for an available and a needed volume.
#[pyfunction]
fn adequacy(available: PyRef<'_, PyPolytope>, needed: PyRef<'_, PyPolytope>) -> PyResult<(bool, Vec<String>)> {
    let a = flexcube::adequacy(&available.inner, &needed.inner).map_err(value_err)?;
    Ok((a.covered, a.deficit_axes.iter().map(|x| x.label().to_string()).collect()))
}

/// Runs one batch command and returns `(written files, deficit found)`.
#[pyfunction]
#[pyo3(signature = (command, scenario, out, k_max = None, horizon = None, pool = None, format = None))]
fn run(
    command: &str,
    scenario: PathBuf,
    out: PathBuf,
    k_max: Option<usize>,
    horizon: Option<f64>,
    pool: Option<String>,
    format: Option<&str>,
) -> PyResult<(Vec<String>, bool)> {
    let cmd: Command = command.parse().map_err(value_err)?;
    let s = flexcube::load_scenario(scenario).map_err(value_err)?;
    let mut opts = RunOptions::new(out.clone());
    opts.k_max = k_max;
    opts.horizon = horizon;
    opts.pool = pool;
    opts.format = format.map(str::parse::<ArtifactFormat>).transpose().map_err(value_err)?;
    let outcome = cli::run(cmd, &s, &opts).map_err(value_err)?;
    Ok((outcome.files.iter().map(|f| cli::relative(&out, f)).collect(), outcome.deficit))
}

#[pymodule]
pub fn pyflexcube(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolytope>()?;
    m.add_class::<PyFlexCube>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(aggregate_cubes, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_polytopes, m)?)?;
    m.add_function(wrap_pyfunction!(needed_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(adequacy, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
