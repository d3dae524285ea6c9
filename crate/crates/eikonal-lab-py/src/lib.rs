//! Python bindings for `eikonal_lab`.

use eikonal_lab::field::{check_divergence_free, field_from_spec, load_field};
use eikonal_lab::kinetic::{entropy_measure, nu_projection, Side};
use eikonal_lab::lagrangian::{
    build_representation, horizontal_error, representation_error, vertical_cost,
};
use eikonal_lab::measure::ABins;
use eikonal_lab::LiftedField;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: eikonal_lab::Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_side(side: &str) -> PyResult<Side> {
    match side {
        "hypograph" => Ok(Side::Hypograph),
        "epigraph" => Ok(Side::Epigraph),
        other => Err(PyValueError::new_err(format!("unknown side {other:?}"))),
    }
}

/// Lifted field on a grid.
#[pyclass(name = "Field", frozen)]
pub struct PyField {
    inner: LiftedField,
}

#[pymethods]
impl PyField {
    /// Builtin (`builtin:name:k=v,...`) or a grid file path.
    #[staticmethod]
    fn from_spec(spec: &str) -> PyResult<Self> {
        field_from_spec(spec)
            .map(|inner| PyField { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_field(path)
            .map(|inner| PyField { inner })
            .map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nx, self.inner.ny)
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.inner.phi.clone()
    }

    /// Returns `(l1_residual, passed)`.
    fn check_divergence(&self, tol: f64) -> (f64, bool) {
        let r = check_divergence_free(&self.inner, tol);
        (r.l1_residual, r.passed)
    }

    /// Spatial defect `nu` as `(x, y, w)` atoms.
    fn defect_measure(&self) -> Vec<(f64, f64, f64)> {
        let bins = ABins::new(self.inner.nx, self.inner.m);
        nu_projection(&entropy_measure(&self.inner, &bins))
            .atoms
            .iter()
            .map(|a| (a.x[0], a.x[1], a.w))
            .collect()
    }

    /// Builds the representation at level `n` and returns
    /// `(e_h, e_v, w1_at_t)`.
    #[pyo3(signature = (n, side = "hypograph", t = 0.5))]
    fn representation(&self, n: u32, side: &str, t: f64) -> PyResult<(f64, f64, f64)> {
        let side = parse_side(side)?;
        let bins = ABins::new(self.inner.nx, self.inner.m);
        let ens = build_representation(&self.inner, n, &bins, side).map_err(to_py)?;
        let err = representation_error(&ens, &self.inner, &bins, t).map_err(to_py)?;
        Ok((horizontal_error(&ens), vertical_cost(&ens), err.w1))
    }
}

/// Runs the command line with `args` (without the program name) and returns
/// the exit status.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    eikonal_lab::cli::main_with_args(std::iter::once("eikonal-lab".to_string()).chain(args))
}

#[pymodule]
pub fn eikonal_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
