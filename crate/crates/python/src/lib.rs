//! Python bindings for `hfsoliton`.

use hfsoliton::reconstruct::{self, ScatteringCoeffs};
use hfsoliton::spectral::{self, Eigenvalue};
use hfsoliton::verify::{self, IntegrationSpec};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Discrete spectral data: eigenvalues `a` with `Re a > 0` and their norming constants.
#[pyclass(name = "SpectralData", frozen)]
struct PySpectralData {
    inner: spectral::SpectralData,
}

#[pymethods]
impl PySpectralData {
    /// `eigenvalues` is a list of `(a, [c_0, ..., c_{n-1}])` pairs.
    #[new]
    fn new(eigenvalues: Vec<(Complex64, Vec<Complex64>)>) -> PyResult<Self> {
        let entries = eigenvalues
            .into_iter()
            .map(|(a, norming)| Eigenvalue { a, norming })
            .collect();
        let inner = spectral::SpectralData::new(entries).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn one_soliton(a: Complex64, c: Complex64) -> PyResult<Self> {
        let inner = spectral::SpectralData::one_soliton(a, c).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn vacuum() -> Self {
        Self {
            inner: spectral::SpectralData::vacuum(),
        }
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.a, e.norming.clone()))
            .collect()
    }

    #[getter]
    fn decay_half_width(&self) -> f64 {
        self.inner.decay_half_width()
    }

    /// Spectral data with norming constants evolved to time `t`.
    fn evolved(&self, t: f64) -> PyResult<Self> {
        let inner = spectral::evolve_norming(&self.inner, t).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        let parts: Vec<String> = self
            .inner
            .entries()
            .iter()
            .map(|e| format!("({}, multiplicity {})", e.a, e.multiplicity()))
            .collect();
        format!("SpectralData([{}])", parts.join(", "))
    }
}

/// Magnetization `(m1, m2, m3)` at a single point.
#[pyfunction]
fn magnetization(sd: &PySpectralData, z: f64, t: f64) -> PyResult<(f64, f64, f64)> {
    let sys = spectral::embed(&spectral::realize_triplet(&sd.inner), t).map_err(value_error)?;
    let m = reconstruct::magnetization(&sys, z).map_err(value_error)?;
    Ok((m[0], m[1], m[2]))
}

/// Magnetization on a tensor grid, indexed `[t][z]`.
#[pyfunction]
fn field_on_grid(py: Python<'_>, sd: &PySpectralData, z: Vec<f64>, t: Vec<f64>) -> PyResult<Vec<Vec<(f64, f64, f64)>>> {
    let field = py
        .detach(|| reconstruct::field_on_grid(&sd.inner, &z, &t))
        .map_err(value_error)?;
    Ok((0..t.len())
        .map(|ti| field.slice(ti).iter().map(|m| (m[0], m[1], m[2])).collect())
        .collect())
}

#[pyfunction]
fn one_soliton_closed_form(a: Complex64, c: Complex64, z: f64, t: f64) -> (f64, f64, f64) {
    let m = reconstruct::one_soliton_closed_form(a, c, z, t);
    (m[0], m[1], m[2])
}

/// Transmission coefficient `a(lambda)` from the determinant formula.
#[pyfunction]
fn transmission(sd: &PySpectralData, lam: Complex64) -> PyResult<Complex64> {
    reconstruct::transmission(&spectral::realize_triplet(&sd.inner), lam).map_err(value_error)
}

/// Zeros of `a(lambda)` in the upper half plane, polished by Newton's method.
#[pyfunction]
fn transmission_zeros(sd: &PySpectralData) -> PyResult<Vec<Complex64>> {
    let coeffs = ScatteringCoeffs::new(&spectral::realize_triplet(&sd.inner)).map_err(value_error)?;
    coeffs
        .zeros()
        .into_iter()
        .map(|z| coeffs.polish_zero(z).map_err(value_error))
        .collect()
}

/// Finite-difference residual of `m_t = m x m_zz` on a uniform grid.
#[pyfunction]
fn pde_residual<'py>(py: Python<'py>, sd: &PySpectralData, z: Vec<f64>, t: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let report = py
        .detach(|| reconstruct::field_on_grid(&sd.inner, &z, &t).and_then(|f| verify::pde_residual(&f)))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("max_pde_residual", report.max_pde_residual)?;
    d.set_item("coarse_pde_residual", report.coarse_pde_residual)?;
    d.set_item("convergence_order_estimate", report.convergence_order_estimate)?;
    d.set_item("max_norm_defect", report.max_norm_defect)?;
    d.set_item("boundary_defect", report.boundary_defect)?;
    d.set_item("h_z", report.h_z)?;
    d.set_item("h_t", report.h_t)?;
    Ok(d)
}

/// Direct scattering through the synthesized field at real `lambdas`.
#[pyfunction]
#[pyo3(signature = (sd, t, lambdas, tolerance = 1e-6))]
fn roundtrip<'py>(
    py: Python<'py>,
    sd: &PySpectralData,
    t: f64,
    lambdas: Vec<f64>,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = IntegrationSpec {
        tolerance,
        ..IntegrationSpec::default()
    };
    let report = py
        .detach(|| verify::roundtrip_report(&sd.inner, t, &lambdas, &spec))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("a_numeric", report.a_numeric)?;
    d.set_item("b_numeric", report.b_numeric)?;
    d.set_item("a_formula", report.a_formula)?;
    d.set_item("unimodularity_defect", report.unimodularity_defect)?;
    d.set_item("reflection_defect", report.reflection_defect)?;
    d.set_item("normalized_formula_defect", report.normalized_formula_defect)?;
    Ok(d)
}

#[pymodule]
fn hfsoliton_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectralData>()?;
    m.add_function(wrap_pyfunction!(magnetization, m)?)?;
    m.add_function(wrap_pyfunction!(field_on_grid, m)?)?;
    m.add_function(wrap_pyfunction!(one_soliton_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(pde_residual, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    Ok(())
}
