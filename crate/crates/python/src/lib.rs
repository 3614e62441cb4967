//! Python bindings for the `rann` transport solver.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use rann::analysis::{angular_trapezoid, scalar_flux, uniform_grid};
use rann::cli::{method_preset, resolve, run, Command, Overrides};
use rann::quadrature::gauss_legendre_rule;
use rann::solver::{multigroup_schedule, solve_problem, FluxSolution, SolveConfig};
use rann::transport::{builtin_problem, TransportProblem};
use rann::{RandomFeatureBasis, RannError};

fn py_err(e: RannError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Gaussian random-feature network with frozen hidden parameters.
#[pyclass(name = "Basis", module = "rann_py", frozen)]
struct PyBasis {
    inner: RandomFeatureBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    #[pyo3(signature = (neurons, dim, bound, seed))]
    fn new(neurons: usize, dim: usize, bound: f64, seed: u64) -> PyResult<Self> {
        RandomFeatureBasis::build(neurons, dim, bound, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn biases(&self) -> Vec<f64> {
        self.inner.biases().to_vec()
    }

    /// Feature values at one point.
    fn eval(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        if point.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "point has {} coordinates, basis expects {}",
                point.len(),
                self.inner.dim()
            )));
        }
        let mut out = vec![0.0; self.inner.len()];
        self.inner.eval_point(&point, &mut out);
        Ok(out)
    }
}

/// One of the built-in benchmark problems.
#[pyclass(name = "Problem", module = "rann_py", frozen)]
struct PyProblem {
    name: String,
    inner: TransportProblem,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let inner = builtin_problem(name).map_err(py_err)?;
        Ok(Self {
            name: name.to_string(),
            inner,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.name
    }

    #[getter]
    fn groups(&self) -> usize {
        self.inner.groups()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.kind().dim()
    }

    /// Group blocks in solve order.
    fn schedule(&self) -> Vec<Vec<usize>> {
        multigroup_schedule(&self.inner.xs)
    }

    /// Trains the problem's preset network; `neurons` replaces the preset width.
    #[pyo3(signature = (seed = 1, neurons = None, desk = false))]
    fn solve(&self, py: Python<'_>, seed: u64, neurons: Option<usize>, desk: bool) -> PyResult<PySolution> {
        let mut config: SolveConfig = method_preset(&self.name, desk, seed).map_err(py_err)?;
        if let Some(m) = neurons {
            config.neurons = vec![m];
        }
        let problem = self.inner.clone();
        let inner = py
            .detach(|| solve_problem(&problem, &config))
            .map_err(py_err)?;
        Ok(PySolution { inner })
    }

    fn __repr__(&self) -> String {
        format!("Problem('{}')", self.name)
    }
}

/// Trained coefficients for every group.
#[pyclass(name = "Solution", module = "rann_py", frozen)]
struct PySolution {
    inner: FluxSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn groups(&self) -> usize {
        self.inner.groups()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.diagnostics.residual()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.coefficients.clone()
    }

    #[pyo3(signature = (point, group = 0))]
    fn angular_flux(&self, point: Vec<f64>, group: usize) -> PyResult<f64> {
        self.inner.angular_flux(&point, group).map_err(py_err)
    }

    /// Scalar flux on a uniform spatial grid, returned as `(points, values)`
    /// with `values[i][g]` for grid point `i` and group `g`.
    #[pyo3(signature = (grid = 101, angular_nodes = 200))]
    fn scalar_flux(&self, grid: usize, angular_nodes: usize) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let points = uniform_grid(&self.inner.problem.domain, grid).map_err(py_err)?;
        let rule = angular_trapezoid(self.inner.problem.kind(), angular_nodes).map_err(py_err)?;
        let field = scalar_flux(&self.inner, &points, &rule).map_err(py_err)?;
        let coords = points.iter().map(<[f64]>::to_vec).collect();
        let values = field.values.chunks(field.groups).map(<[f64]>::to_vec).collect();
        Ok((coords, values))
    }
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
#[pyfunction]
fn gauss_legendre(a: f64, b: f64, k: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let rule = gauss_legendre_rule(a, b, k).map_err(py_err)?;
    Ok((rule.nodes().to_vec(), rule.weights().to_vec()))
}

/// Runs a CLI command from configuration text and returns `(passed, report_json)`.
#[pyfunction]
#[pyo3(signature = (command, config = "", output = None, desk = false, seed = None))]
fn run_config(
    py: Python<'_>,
    command: &str,
    config: &str,
    output: Option<PathBuf>,
    desk: bool,
    seed: Option<u64>,
) -> PyResult<(bool, String)> {
    let command = Command::parse(command).map_err(py_err)?;
    let flags = Overrides {
        output,
        desk,
        seed,
        ..Default::default()
    };
    let resolved = resolve(command, config, &flags).map_err(py_err)?;
    let outcome = py.detach(|| run(&resolved)).map_err(py_err)?;
    Ok((outcome.passed, outcome.report.to_string()))
}

#[pymodule]
fn rann_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
