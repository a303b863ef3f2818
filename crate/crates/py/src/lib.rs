//! Python bindings for `unruh_qfi`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use unruh_qfi::dynamics::{self, GammaZConvention};
use unruh_qfi::field_response::{self, OracleSettings};
use unruh_qfi::metrology;
use unruh_qfi::sweep::{self, Preset};
use unruh_qfi::verify::{self, VerifySettings};

fn py_err(e: unruh_qfi::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn convention(name: &str) -> PyResult<GammaZConvention> {
    name.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "DetectorParams", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyDetectorParams(dynamics::DetectorParams);

#[pymethods]
impl PyDetectorParams {
    #[new]
    #[pyo3(signature = (omega0, lambda_, a))]
    fn new(omega0: f64, lambda_: f64, a: f64) -> PyResult<Self> {
        dynamics::DetectorParams::new(omega0, lambda_, a)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn omega0(&self) -> f64 {
        self.0.omega0
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    fn is_weak_coupling(&self) -> bool {
        self.0.is_weak_coupling()
    }

    fn __repr__(&self) -> String {
        format!(
            "DetectorParams(omega0={}, lambda_={}, a={})",
            self.0.omega0, self.0.lambda, self.0.a
        )
    }
}

#[pyclass(name = "Boundary", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyBoundary(unruh_qfi::BoundaryConfig);

#[pymethods]
impl PyBoundary {
    #[staticmethod]
    fn unbounded() -> Self {
        Self(unruh_qfi::BoundaryConfig::Unbounded)
    }

    #[staticmethod]
    fn mirrors(r: f64, alpha: f64) -> PyResult<Self> {
        unruh_qfi::BoundaryConfig::mirrors(r, alpha)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn is_unbounded(&self) -> bool {
        self.0.is_unbounded()
    }

    fn image_distances(&self) -> PyResult<(f64, f64, f64)> {
        let [c, s, r] = self.0.image_distances().map_err(py_err)?;
        Ok((c, s, r))
    }

    fn __repr__(&self) -> String {
        match self.0 {
            unruh_qfi::BoundaryConfig::Unbounded => "Boundary.unbounded()".to_string(),
            unruh_qfi::BoundaryConfig::TwoPerpendicularMirrors { r, alpha } => {
                format!("Boundary.mirrors(r={r}, alpha={alpha})")
            }
        }
    }
}

#[pyclass(name = "DecayRates", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyDecayRates(dynamics::DecayRates);

#[pymethods]
impl PyDecayRates {
    #[new]
    fn new(gamma_plus: f64, gamma_minus: f64, gamma_z: f64) -> PyResult<Self> {
        dynamics::DecayRates::new(gamma_plus, gamma_minus, gamma_z)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn gamma_plus(&self) -> f64 {
        self.0.gamma_plus
    }

    #[getter]
    fn gamma_minus(&self) -> f64 {
        self.0.gamma_minus
    }

    #[getter]
    fn gamma_z(&self) -> f64 {
        self.0.gamma_z
    }

    fn transverse(&self) -> f64 {
        self.0.transverse()
    }

    fn longitudinal(&self) -> f64 {
        self.0.longitudinal()
    }

    fn stationary_bz(&self) -> Option<f64> {
        self.0.stationary_bz()
    }

    fn __repr__(&self) -> String {
        format!(
            "DecayRates(gamma_plus={}, gamma_minus={}, gamma_z={})",
            self.0.gamma_plus, self.0.gamma_minus, self.0.gamma_z
        )
    }
}

#[pyfunction]
#[pyo3(signature = (detector, boundary, convention = "eq7"))]
fn decay_rates(
    detector: PyRef<'_, PyDetectorParams>,
    boundary: PyRef<'_, PyBoundary>,
    convention: &str,
) -> PyResult<PyDecayRates> {
    dynamics::decay_rates(&detector.0, &boundary.0, self::convention(convention)?)
        .map(PyDecayRates)
        .map_err(py_err)
}

#[pyfunction]
fn response(a: f64, boundary: PyRef<'_, PyBoundary>, omega: f64) -> PyResult<f64> {
    field_response::response(a, &boundary.0, omega)
        .map(|r| r.value)
        .map_err(py_err)
}

/// Numeric Fourier transform of the Wightman function, extrapolated in epsilon.
#[pyfunction]
#[pyo3(signature = (a, boundary, omega, window = None))]
fn response_oracle(
    a: f64,
    boundary: PyRef<'_, PyBoundary>,
    omega: f64,
    window: Option<f64>,
) -> PyResult<f64> {
    let settings = OracleSettings {
        window,
        ..OracleSettings::default()
    };
    field_response::response_numeric_oracle(a, &boundary.0, omega, &settings)
        .map(|e| e.value)
        .map_err(py_err)
}

#[pyfunction]
fn f1(omega: f64, a: f64, r: f64) -> f64 {
    field_response::f1(omega, a, r)
}

#[pyfunction]
fn f2(a: f64, r: f64) -> f64 {
    field_response::f2(a, r)
}

#[pyfunction]
fn bracket(omega: f64, a: f64, boundary: PyRef<'_, PyBoundary>) -> f64 {
    field_response::bracket(omega, a, &boundary.0)
}

/// Bloch vector at `tau` for the probe state with angles `(theta, phi)`.
#[pyfunction]
fn evolve(
    theta: f64,
    phi: f64,
    rates: PyRef<'_, PyDecayRates>,
    omega_eff: f64,
    tau: f64,
) -> (f64, f64, f64) {
    let s0 = dynamics::BlochState::from_angles(theta, phi);
    let s = dynamics::evolve_analytic(&s0, &rates.0, omega_eff, tau);
    (s.bx, s.by, s.bz)
}

/// QFI record as a dict with keys tau, qfi, qfi_closed, eigenvalues, crb, bloch.
#[pyfunction]
#[pyo3(signature = (theta, phi, rates, omega_eff, tau, measurements = 1))]
fn qfi<'py>(
    py: Python<'py>,
    theta: f64,
    phi: f64,
    rates: PyRef<'_, PyDecayRates>,
    omega_eff: f64,
    tau: f64,
    measurements: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let rec = metrology::qfi_record(theta, phi, &rates.0, omega_eff, tau, measurements)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tau", rec.tau)?;
    d.set_item("qfi", rec.qfi)?;
    d.set_item("qfi_closed", rec.qfi_closed)?;
    d.set_item("eigenvalues", (rec.eigenvalues[0], rec.eigenvalues[1]))?;
    d.set_item("crb", rec.crb)?;
    d.set_item("bloch", (rec.state.bx, rec.state.by, rec.state.bz))?;
    Ok(d)
}

#[pyfunction]
fn qfi_closed_form(theta: f64, rates: PyRef<'_, PyDecayRates>, tau: f64) -> f64 {
    metrology::qfi_closed_form(theta, &rates.0, tau)
}

#[pyfunction]
fn qfi_max_eq22(
    detector: PyRef<'_, PyDetectorParams>,
    boundary: PyRef<'_, PyBoundary>,
    tau: f64,
) -> PyResult<f64> {
    metrology::qfi_max_eq22(&detector.0, &boundary.0, tau).map_err(py_err)
}

#[pyfunction]
fn cramer_rao(qfi: f64, measurements: u64) -> PyResult<f64> {
    metrology::cramer_rao(qfi, measurements).map_err(py_err)
}

/// Figure preset table as `(header, rows)`.
#[pyfunction]
#[pyo3(signature = (name, convention = "eq7"))]
fn preset(name: &str, convention: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let p: Preset = name.parse().map_err(PyValueError::new_err)?;
    let run = p.default_run(self::convention(convention)?);
    let table = sweep::run_preset(&run).map_err(py_err)?;
    Ok((table.header, table.rows))
}

/// Runs every oracle cross-check; returns `(passed, [(name, max_error, tolerance, passed)])`.
#[pyfunction]
#[pyo3(signature = (oracle_window = None))]
fn run_verification(oracle_window: Option<f64>) -> (bool, Vec<(String, f64, f64, bool)>) {
    let settings = VerifySettings {
        oracle: OracleSettings {
            window: oracle_window,
            ..OracleSettings::default()
        },
        ..VerifySettings::default()
    };
    let report = verify::run_verification(&settings);
    let rows = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.max_error, c.tolerance, c.passed))
        .collect();
    (report.passed(), rows)
}

#[pymodule]
#[pyo3(name = "unruh_qfi")]
pub fn unruh_qfi_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDetectorParams>()?;
    m.add_class::<PyBoundary>()?;
    m.add_class::<PyDecayRates>()?;
    m.add_function(wrap_pyfunction!(decay_rates, m)?)?;
    m.add_function(wrap_pyfunction!(response, m)?)?;
    m.add_function(wrap_pyfunction!(response_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(f2, m)?)?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(qfi, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(qfi_max_eq22, m)?)?;
    m.add_function(wrap_pyfunction!(cramer_rao, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
