//! Python bindings: structured tensors, fast products, HOOI, TLS and pole
//! estimation. Complex values cross the boundary as Python `complex`;
//! matrices as lists of rows.

use hankel_core::decomposition::{hooi_square_hankel, tls_solve as core_tls, HooiConfig};
use hankel_core::expfit::{self, Noise};
use hankel_core::{AntiCirculantTensor, BhhbTensor, Complex64, ComplexMatrix, Error, ExpModel1D, ExpModel2D};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(hankel_tensor, NumericalError, PyException, "Degenerate or ill-conditioned numerical problem.");

fn to_py(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    ComplexMatrix::from_rows(&rows).map_err(to_py)
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j)).collect()).collect()
}

fn slices(xs: &[Vec<Complex64>]) -> Vec<&[Complex64]> {
    xs.iter().map(Vec::as_slice).collect()
}

fn noise(sigma: f64, seed: u64) -> PyResult<Option<Noise>> {
    Ok(if sigma == 0.0 { None } else { Some(Noise::new(sigma, seed).map_err(to_py)?) })
}

/// Hankel tensor given by its generating vector and mode sizes.
#[pyclass(name = "HankelTensor", module = "hankel_tensor", frozen)]
struct PyHankelTensor {
    inner: hankel_core::HankelTensor,
}

#[pymethods]
impl PyHankelTensor {
    #[new]
    fn new(h: Vec<Complex64>, shape: Vec<usize>) -> PyResult<Self> {
        Ok(Self { inner: hankel_core::HankelTensor::new(h, shape).map_err(to_py)? })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().to_vec()
    }

    #[getter]
    fn generating_vector(&self) -> Vec<Complex64> {
        self.inner.generating_vector().to_vec()
    }

    /// Contract modes 2..m with `xs`; returns a vector of length `shape[0]`.
    fn tvp_partial(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
        self.inner.tvp_partial(&slices(&xs)).map_err(to_py)
    }

    fn tvp_full(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        self.inner.tvp_full(&slices(&xs)).map_err(to_py)
    }

    /// Dense entries in row-major order.
    fn to_dense(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.to_dense().map_err(to_py)?.into_data())
    }

    /// Best rank-(R, ..., R) approximation of a square tensor; returns
    /// `(core entries row-major, factor rows)`.
    #[pyo3(signature = (rank, tol = 1e-10, max_iter = 100))]
    fn hooi(&self, rank: usize, tol: f64, max_iter: usize) -> PyResult<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
        let cfg = HooiConfig::uniform(rank, self.inner.order()).with_tol(tol).with_max_iter(max_iter);
        let res = hooi_square_hankel(&self.inner, rank, &cfg).map_err(to_py)?;
        Ok((res.tucker.core.data().to_vec(), rows_of(res.factor())))
    }

    fn __repr__(&self) -> String {
        format!("HankelTensor(shape={:?})", self.inner.shape())
    }
}

#[pyclass(name = "AntiCirculantTensor", module = "hankel_tensor", frozen)]
struct PyAntiCirculantTensor {
    inner: AntiCirculantTensor,
}

#[pymethods]
impl PyAntiCirculantTensor {
    #[new]
    fn new(order: usize, c: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self { inner: AntiCirculantTensor::new(order, c).map_err(to_py)? })
    }

    fn spectrum(&self) -> Vec<Complex64> {
        self.inner.spectrum()
    }

    fn special_eigenpairs(&self) -> Vec<(Complex64, Vec<Complex64>)> {
        self.inner.special_eigenpairs()
    }

    fn tvp_partial(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
        self.inner.tvp_partial(&slices(&xs)).map_err(to_py)
    }

    fn tvp_full(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        self.inner.tvp_full(&slices(&xs)).map_err(to_py)
    }
}

/// Block Hankel tensor with Hankel blocks, from its generating matrix (list of rows).
#[pyclass(name = "BhhbTensor", module = "hankel_tensor", frozen)]
struct PyBhhbTensor {
    inner: BhhbTensor,
}

#[pymethods]
impl PyBhhbTensor {
    #[new]
    fn new(h: Vec<Vec<Complex64>>, outer: Vec<usize>, block: Vec<usize>) -> PyResult<Self> {
        Ok(Self { inner: BhhbTensor::new(matrix(h)?, outer, block).map_err(to_py)? })
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.inner.dims()
    }

    fn tvp_partial(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
        self.inner.tvp_partial(&slices(&xs)).map_err(to_py)
    }

    fn tvp_full(&self, xs: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        self.inner.tvp_full(&slices(&xs)).map_err(to_py)
    }

    fn to_dense(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.to_dense().map_err(to_py)?.into_data())
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &hankel_core::PoleEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("poles", e.poles.clone())?;
    d.set_item("second_poles", e.second_poles.clone())?;
    d.set_item("relative_errors", e.relative_errors.clone())?;
    d.set_item("second_relative_errors", e.second_relative_errors.clone())?;
    d.set_item("warnings", e.warnings.clone())?;
    d.set_item("hooi_iterations", e.hooi_iterations)?;
    d.set_item("hooi_converged", e.hooi_converged)?;
    Ok(d)
}

/// Samples of `Σ c_k z_k^n`, optionally with complex Gaussian noise.
#[pyfunction]
#[pyo3(signature = (c, z, n, sigma = 0.0, seed = 0))]
fn synth_1d(c: Vec<Complex64>, z: Vec<Complex64>, n: usize, sigma: f64, seed: u64) -> PyResult<Vec<Complex64>> {
    let model = ExpModel1D::from_poles(&c, &z).map_err(to_py)?;
    Ok(expfit::synth_1d(&model, n, noise(sigma, seed)?))
}

/// `N1 × N2` samples of `Σ c_k z1_k^n1 z2_k^n2` as a list of rows.
#[pyfunction]
#[pyo3(signature = (c, z1, z2, n1, n2, sigma = 0.0, seed = 0))]
fn synth_2d(
    c: Vec<Complex64>,
    z1: Vec<Complex64>,
    z2: Vec<Complex64>,
    n1: usize,
    n2: usize,
    sigma: f64,
    seed: u64,
) -> PyResult<Vec<Vec<Complex64>>> {
    let model = ExpModel2D::from_poles(&c, &z1, &z2).map_err(to_py)?;
    Ok(rows_of(&expfit::synth_2d(&model, n1, n2, noise(sigma, seed)?)))
}

#[pyfunction]
#[pyo3(signature = (x, shape, k, truth = None))]
fn estimate_poles_1d<'py>(
    py: Python<'py>,
    x: Vec<Complex64>,
    shape: Vec<usize>,
    k: usize,
    truth: Option<Vec<Complex64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut est = expfit::estimate_poles_1d(&x, &shape, k, None).map_err(to_py)?;
    if let Some(t) = truth {
        est.compare(&t, None).map_err(to_py)?;
    }
    estimate_dict(py, &est)
}

#[pyfunction]
#[pyo3(signature = (x, block, outer, k, truth = None))]
fn estimate_poles_2d<'py>(
    py: Python<'py>,
    x: Vec<Vec<Complex64>>,
    block: Vec<usize>,
    outer: Vec<usize>,
    k: usize,
    truth: Option<(Vec<Complex64>, Vec<Complex64>)>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut est = expfit::estimate_poles_2d(&matrix(x)?, &block, &outer, k, None).map_err(to_py)?;
    if let Some((z1, z2)) = truth {
        est.compare(&z1, Some(&z2)).map_err(to_py)?;
    }
    estimate_dict(py, &est)
}

#[pyfunction]
fn mode1_singular_values(x: Vec<Vec<Complex64>>, block: Vec<usize>, outer: Vec<usize>) -> PyResult<Vec<f64>> {
    expfit::mode1_singular_values(&matrix(x)?, &block, &outer).map_err(to_py)
}

/// Total least squares `A W ≈ B` for matrices given as lists of rows.
#[pyfunction]
fn tls_solve(a: Vec<Vec<Complex64>>, b: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(rows_of(&core_tls(&matrix(a)?, &matrix(b)?).map_err(to_py)?))
}

#[pymodule]
fn hankel_tensor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHankelTensor>()?;
    m.add_class::<PyAntiCirculantTensor>()?;
    m.add_class::<PyBhhbTensor>()?;
    m.add_function(wrap_pyfunction!(synth_1d, m)?)?;
    m.add_function(wrap_pyfunction!(synth_2d, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_poles_1d, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_poles_2d, m)?)?;
    m.add_function(wrap_pyfunction!(mode1_singular_values, m)?)?;
    m.add_function(wrap_pyfunction!(tls_solve, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
