//! Python bindings for the core crate.

use liouville::error::Error;
use liouville::field::{sample_log_field, FieldOptions, GridSpec};
use liouville::gmc::{build_gmc, BaseDensity};
use liouville::ising::{Algorithm, IsingChain};
use liouville::kernel::{LogKernelSpec, MollifierSpec};
use liouville::lqft::{InsertionSet, Lqft, LqftParams, RerootFunctional, SeibergVerdict, VertexInsertion};
use liouville::sphere::{Mobius, C};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn insertions(points: Vec<(f64, f64, f64)>) -> PyResult<InsertionSet> {
    InsertionSet::new(points.into_iter().map(|(x, y, alpha)| VertexInsertion { z: C::new(x, y), alpha }).collect()).map_err(err)
}

/// One field realization on an n×n grid of the given side: (points, values, variance).
#[pyfunction]
#[pyo3(signature = (n, side, eps, seed))]
#[allow(clippy::type_complexity)]
fn sample_field(n: usize, side: f64, eps: f64, seed: u64) -> PyResult<(Vec<(f64, f64)>, Vec<f64>, Vec<f64>)> {
    let f = sample_log_field(&LogKernelSpec::planar(side), &MollifierSpec::bump(eps), GridSpec { n, side }, eps, seed, FieldOptions::default()).map_err(err)?;
    Ok((f.points.iter().map(|p| (p[0], p[1])).collect(), f.values, f.variance))
}

/// Chaos weights for one field realization on an n×n grid.
#[pyfunction]
fn gmc_weights(n: usize, side: f64, eps: f64, gamma: f64, seed: u64) -> PyResult<Vec<f64>> {
    let f = sample_log_field(&LogKernelSpec::planar(side), &MollifierSpec::bump(eps), GridSpec { n, side }, eps, seed, FieldOptions::default()).map_err(err)?;
    Ok(build_gmc(&f, gamma, BaseDensity::Uniform).map_err(err)?.weights)
}

#[pyfunction]
fn structure_function(d: usize, gamma: f64, q: f64) -> f64 {
    liouville::multifractal::structure_function(d, gamma, q)
}

#[pyfunction]
fn sphere_gff(cells: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let f = liouville::sphere::sample_sphere_gff(cells, seed).map_err(err)?;
    Ok((f.values, f.cell))
}

#[pyfunction]
fn lqft_constants<'py>(py: Python<'py>, gamma: f64) -> PyResult<Bound<'py, PyDict>> {
    let k = liouville::lqft::lqft_constants(gamma).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("gamma", k.gamma)?;
    d.set_item("q", k.q)?;
    d.set_item("central_charge", k.central_charge)?;
    Ok(d)
}

/// "strict", "soft" or "fail", plus the reasons for anything short of strict.
#[pyfunction]
fn seiberg_check(points: Vec<(f64, f64, f64)>, gamma: f64) -> PyResult<(String, Vec<String>)> {
    Ok(match liouville::lqft::seiberg_check(&insertions(points)?, gamma) {
        SeibergVerdict::StrictPass => ("strict".into(), vec![]),
        SeibergVerdict::SoftPassOnly { reasons } => ("soft".into(), reasons),
        SeibergVerdict::Fail { reasons } => ("fail".into(), reasons),
    })
}

#[pyfunction]
fn spin_correlation(points: Vec<(f64, f64)>) -> PyResult<f64> {
    let p: Vec<C> = points.into_iter().map(|(x, y)| C::new(x, y)).collect();
    liouville::ising::spin_correlation_exact(&p).map_err(err)
}

#[pyfunction]
fn critical_beta() -> f64 {
    liouville::ising::critical_beta()
}

/// Normalized Möbius map z ↦ (az + b)/(cz + d), coefficients as complex numbers.
#[pyclass(name = "Mobius")]
#[derive(Clone)]
struct PyMobius(Mobius);

#[pymethods]
impl PyMobius {
    #[new]
    fn new(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> PyResult<Self> {
        let z = |p: (f64, f64)| C::new(p.0, p.1);
        Ok(PyMobius(Mobius::new(z(a), z(b), z(c), z(d)).map_err(err)?))
    }

    #[staticmethod]
    fn rotation(theta: f64) -> Self {
        PyMobius(Mobius::rotation(theta))
    }

    #[staticmethod]
    fn scaling(lam: f64) -> Self {
        PyMobius(Mobius::scaling(lam))
    }

    fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        self.0.apply(C::new(x, y)).map(|w| (w.re, w.im))
    }
}

/// Sphere sampler shared by the Liouville estimators.
#[pyclass(name = "Lqft")]
struct PyLqft(Lqft);

#[pymethods]
impl PyLqft {
    #[new]
    fn new(cells: usize) -> PyResult<Self> {
        Ok(PyLqft(Lqft::new(cells).map_err(err)?))
    }

    /// (value, stderr, ess) of the correlation up to the global constant.
    fn correlation(&self, points: Vec<(f64, f64, f64)>, gamma: f64, mu: f64, n: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
        let p = LqftParams::new(gamma, mu).map_err(err)?;
        let r = self.0.correlation(&insertions(points)?, &p, n, seed).map_err(err)?;
        Ok((r.value, r.stderr, r.ess))
    }

    /// (ratio, stderr) of the Möbius covariance test.
    fn kpz(&self, points: Vec<(f64, f64, f64)>, psi: &PyMobius, gamma: f64, n: usize, seed: u64) -> PyResult<(f64, f64)> {
        let p = LqftParams::new(gamma, 1.0).map_err(err)?;
        let r = self.0.kpz(&insertions(points)?, &psi.0, &p, n, seed).map_err(err)?;
        Ok((r.ratio, r.stderr))
    }

    /// [(lhs, rhs, z)] for the cap-mass functionals at the given radius.
    fn reroot(&self, gamma: f64, radius: f64, n: usize, seed: u64) -> PyResult<Vec<(f64, f64, f64)>> {
        let f = [RerootFunctional::CapMass { radius }, RerootFunctional::CapMassSquared { radius }];
        let r = self.0.reroot(gamma, &f, n, seed).map_err(err)?;
        Ok(r.lines.iter().map(|l| (l.lhs.value, l.rhs.value, l.z)).collect())
    }
}

/// Plus-boundary Ising chain on [-N, N]².
#[pyclass(name = "IsingChain", unsendable)]
struct PyIsingChain(IsingChain);

#[pymethods]
impl PyIsingChain {
    #[new]
    #[pyo3(signature = (half_width, beta, seed, cluster = true))]
    fn new(half_width: usize, beta: f64, seed: u64, cluster: bool) -> PyResult<Self> {
        let a = if cluster { Algorithm::Cluster } else { Algorithm::SingleSite };
        Ok(PyIsingChain(IsingChain::new(half_width, beta, a, seed).map_err(err)?))
    }

    fn sweep(&mut self, k: usize) {
        for _ in 0..k {
            self.0.sweep();
        }
    }

    fn spin(&self, x: i64, y: i64) -> i8 {
        self.0.state.at(x, y)
    }

    fn magnetization(&self) -> f64 {
        self.0.state.magnetization()
    }

    fn energy(&self) -> f64 {
        self.0.state.energy()
    }
}

#[pymodule]
fn liouville_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_field, m)?)?;
    m.add_function(wrap_pyfunction!(gmc_weights, m)?)?;
    m.add_function(wrap_pyfunction!(structure_function, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_gff, m)?)?;
    m.add_function(wrap_pyfunction!(lqft_constants, m)?)?;
    m.add_function(wrap_pyfunction!(seiberg_check, m)?)?;
    m.add_function(wrap_pyfunction!(spin_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(critical_beta, m)?)?;
    m.add_class::<PyMobius>()?;
    m.add_class::<PyLqft>()?;
    m.add_class::<PyIsingChain>()?;
    Ok(())
}
