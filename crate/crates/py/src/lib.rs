//! Python bindings: `import qes`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use qes_core::algebraise::{SectorResult, INVARIANCE_TOL};
use qes_core::coupled::{self, CoupledParams, CoupledSector, TrigFamily, TrigParams};
use qes_core::elliptic::{self, Modulus};
use qes_core::lame::{self, LameParams};
use qes_core::manybody::{self, ManyBodyParams};
use qes_core::report::{self, Constants, Coupling, RunOptions};
use qes_core::verify::{self, Suite};
use qes_core::QesError;

create_exception!(qes, QesFailure, PyException, "Numerical failure inside the engine.");
create_exception!(qes, NotQesError, QesFailure, "The candidate space is not invariant.");

fn err(e: QesError) -> PyErr {
    match e {
        QesError::Domain(_) | QesError::Parameter(_) => PyValueError::new_err(e.to_string()),
        QesError::NotQes { .. } => NotQesError::new_err(e.to_string()),
        _ => QesFailure::new_err(e.to_string()),
    }
}

/// A certified sector: label, dimension, invariance residual and eigenvalues.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Sector {
    label: String,
    dim: usize,
    residual: f64,
    eigenvalues: Vec<f64>,
}

#[pymethods]
impl Sector {
    fn __repr__(&self) -> String {
        format!(
            "Sector({:?}, dim={}, residual={:.2e}, eigenvalues={:?})",
            self.label, self.dim, self.residual, self.eigenvalues
        )
    }
}

impl Sector {
    fn from_result(label: impl Into<String>, r: SectorResult) -> Self {
        Sector {
            label: label.into(),
            dim: r.dim,
            residual: r.residual,
            eigenvalues: r.eigenvalues,
        }
    }
}

/// Report of one command-style run, serializable to JSON or CSV.
#[pyclass(frozen)]
struct RunReport(report::RunReport);

#[pymethods]
impl RunReport {
    #[getter]
    fn system(&self) -> &str {
        &self.0.system
    }

    #[getter]
    fn passed(&self) -> bool {
        self.0.passed()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }

    #[getter]
    fn sectors(&self) -> Vec<Sector> {
        self.0
            .sectors
            .iter()
            .map(|s| Sector {
                label: s.gauge.clone(),
                dim: s.dim,
                residual: s.residual,
                eigenvalues: s.eigenvalues.clone(),
            })
            .collect()
    }

    /// `(name, pass, detail)` for every check.
    #[getter]
    fn checks(&self) -> Vec<(String, bool, String)> {
        self.0
            .checks
            .iter()
            .map(|c| (c.name.clone(), c.pass, c.detail.clone()))
            .collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn __str__(&self) -> String {
        self.0.to_text()
    }
}

fn options(seed: u64, grid: usize, tol: f64) -> RunOptions {
    RunOptions { seed, grid, tol }
}

/// `(sn, cn, dn)` of `x` at modulus `k`.
#[pyfunction]
fn jacobi(x: f64, k: f64) -> PyResult<(f64, f64, f64)> {
    let j = elliptic::jacobi(x, Modulus::new(k).map_err(err)?);
    Ok((j.sn, j.cn, j.dn))
}

/// Quarter period `K(k)`.
#[pyfunction]
fn complete_k(k: f64) -> PyResult<f64> {
    elliptic::complete_k(Modulus::new(k).map_err(err)?).map_err(err)
}

/// The four Lamé sectors `f1..f4` for coupling `2n(2n+1)k²`.
#[pyfunction]
#[pyo3(signature = (n, k, seed = 42))]
fn lame_sectors(py: Python<'_>, n: usize, k: f64, seed: u64) -> PyResult<Vec<Sector>> {
    let s = py
        .detach(|| LameParams::new(n, k).and_then(|p| lame::full_spectrum(&p, seed, INVARIANCE_TOL)))
        .map_err(err)?;
    Ok(s.sectors.into_iter().map(|(g, r)| Sector::from_result(g.to_string(), r)).collect())
}

/// Coexisting many-body sectors; give exactly one of `c` and `m`.
#[pyfunction]
#[pyo3(signature = (bodies, a, b, *, c = None, m = None, e2 = 0.2, e3 = -1.0, seed = 42))]
#[allow(clippy::too_many_arguments)]
fn manybody_sectors(
    py: Python<'_>,
    bodies: usize,
    a: f64,
    b: f64,
    c: Option<f64>,
    m: Option<f64>,
    e2: f64,
    e3: f64,
    seed: u64,
) -> PyResult<Vec<Sector>> {
    let roots = elliptic::WeierstrassRoots::new(e2, e3).map_err(err)?;
    let p = match (c, m) {
        (Some(c), None) => ManyBodyParams::new(bodies, a, b, c, roots),
        (None, Some(m)) => ManyBodyParams::on_locus(bodies, a, b, m, roots),
        _ => return Err(PyValueError::new_err("give exactly one of c and m")),
    }
    .map_err(err)?;
    let secs = py.detach(|| manybody::all_sectors(&p, seed, INVARIANCE_TOL)).map_err(err)?;
    Ok(secs.into_iter().map(|(s, r)| Sector::from_result(s.to_string(), r)).collect())
}

/// Quantized one-body coupling `c_m`.
#[pyfunction]
fn coupling_cm(bodies: usize, a: f64, b: f64, m: f64) -> f64 {
    manybody::coupling_cm(bodies, a, b, m)
}

fn coupled_params(m: usize, k: f64, b: f64, constants: &str) -> PyResult<CoupledParams> {
    match constants {
        "qes" => CoupledParams::qes(m, k, b),
        "printed" => CoupledParams::printed(m, k, b),
        other => return Err(PyValueError::new_err(format!("constants must be 'qes' or 'printed', got {other:?}"))),
    }
    .map_err(err)
}

/// `(A, θ, κ₁)` for the chosen constants.
#[pyfunction]
#[pyo3(signature = (m, k, b, constants = "qes"))]
fn coupled_constants(m: usize, k: f64, b: f64, constants: &str) -> PyResult<(f64, f64, f64)> {
    let p = coupled_params(m, k, b, constants)?;
    Ok((p.a, p.theta, p.kappa1))
}

/// The `F` and `G` sectors of the two-channel elliptic system.
#[pyfunction]
#[pyo3(signature = (m, k, b, constants = "qes", seed = 42))]
fn coupled_sectors(py: Python<'_>, m: usize, k: f64, b: f64, constants: &str, seed: u64) -> PyResult<Vec<Sector>> {
    let p = coupled_params(m, k, b, constants)?;
    let secs = py
        .detach(|| {
            CoupledSector::ALL
                .iter()
                .map(|&s| coupled::coupled_spectrum(&p, s, seed, INVARIANCE_TOL).map(|r| (s, r)))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(err)?;
    Ok(secs.into_iter().map(|(s, r)| Sector::from_result(s.to_string(), r)).collect())
}

/// Rows of the Fourier block of family `"E"` or `"G"` at index `p`.
#[pyfunction]
#[pyo3(signature = (n, b, p, family = "E"))]
fn trig_block(n: usize, b: f64, p: usize, family: &str) -> PyResult<Vec<Vec<f64>>> {
    let t = TrigParams::new(n, b).map_err(err)?;
    let fam = match family {
        "E" => TrigFamily::E,
        "G" => TrigFamily::G,
        other => return Err(PyValueError::new_err(format!("family must be 'E' or 'G', got {other:?}"))),
    };
    Ok(coupled::trig_block(&t, fam, p).to_rows())
}

/// `(ω₋², ω₊²)` from the closed form `1 − 2b + p²/N² ± √(b² + 4p²/N²)`.
#[pyfunction]
fn trig_closed_form(n: usize, b: f64, p: usize) -> PyResult<(f64, f64)> {
    Ok(coupled::trig_closed_form_spectrum(&TrigParams::new(n, b).map_err(err)?, p))
}

#[pyfunction]
#[pyo3(signature = (n, k, seed = 42, grid = 2048, tol = 1e-3))]
fn run_lame(py: Python<'_>, n: usize, k: f64, seed: u64, grid: usize, tol: f64) -> PyResult<RunReport> {
    let r = py.detach(|| report::run_lame(n, k, &options(seed, grid, tol))).map_err(err)?;
    Ok(RunReport(r))
}

#[pyfunction]
#[pyo3(signature = (bodies, a, b, *, c = None, m = None, e2 = 0.2, e3 = -1.0, seed = 42))]
#[allow(clippy::too_many_arguments)]
fn run_manybody(
    py: Python<'_>,
    bodies: usize,
    a: f64,
    b: f64,
    c: Option<f64>,
    m: Option<f64>,
    e2: f64,
    e3: f64,
    seed: u64,
) -> PyResult<RunReport> {
    let coupling = match (c, m) {
        (Some(c), None) => Coupling::C(c),
        (None, Some(m)) => Coupling::M(m),
        _ => return Err(PyValueError::new_err("give exactly one of c and m")),
    };
    let opts = options(seed, report::RunOptions::default().grid, report::RunOptions::default().tol);
    let r = py
        .detach(|| report::run_manybody(bodies, a, b, e2, e3, coupling, &opts))
        .map_err(err)?;
    Ok(RunReport(r))
}

#[pyfunction]
#[pyo3(signature = (m, k, b, constants = "qes", seed = 42, grid = 2048, tol = 1e-3))]
#[allow(clippy::too_many_arguments)]
fn run_coupled(
    py: Python<'_>,
    m: usize,
    k: f64,
    b: f64,
    constants: &str,
    seed: u64,
    grid: usize,
    tol: f64,
) -> PyResult<RunReport> {
    let c = match constants {
        "qes" => Constants::Qes,
        "printed" => Constants::Printed,
        other => return Err(PyValueError::new_err(format!("constants must be 'qes' or 'printed', got {other:?}"))),
    };
    let r = py
        .detach(|| report::run_coupled(m, k, b, c, &options(seed, grid, tol)))
        .map_err(err)?;
    Ok(RunReport(r))
}

#[pyfunction]
#[pyo3(signature = (n, b, pmax = 4, seed = 42, grid = 2048, tol = 1e-3))]
fn run_trig(py: Python<'_>, n: usize, b: f64, pmax: usize, seed: u64, grid: usize, tol: f64) -> PyResult<RunReport> {
    let r = py
        .detach(|| report::run_trig(n, b, pmax, &options(seed, grid, tol)))
        .map_err(err)?;
    Ok(RunReport(r))
}

/// `(id, title, pass)` for each criterion of the suite.
#[pyfunction]
#[pyo3(signature = (suite = "all"))]
fn run_verify(py: Python<'_>, suite: &str) -> PyResult<Vec<(u8, String, bool)>> {
    let s: Suite = suite.parse().map_err(err)?;
    let results = py.detach(|| verify::run_suite(s, &RunOptions::default()));
    Ok(results.into_iter().map(|c| (c.id, c.title.to_string(), c.pass)).collect())
}

#[pymodule]
fn qes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QesFailure", m.py().get_type::<QesFailure>())?;
    m.add("NotQesError", m.py().get_type::<NotQesError>())?;
    m.add_class::<Sector>()?;
    m.add_class::<RunReport>()?;
    m.add_function(wrap_pyfunction!(jacobi, m)?)?;
    m.add_function(wrap_pyfunction!(complete_k, m)?)?;
    m.add_function(wrap_pyfunction!(lame_sectors, m)?)?;
    m.add_function(wrap_pyfunction!(manybody_sectors, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_cm, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_constants, m)?)?;
    m.add_function(wrap_pyfunction!(coupled_sectors, m)?)?;
    m.add_function(wrap_pyfunction!(trig_block, m)?)?;
    m.add_function(wrap_pyfunction!(trig_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(run_lame, m)?)?;
    m.add_function(wrap_pyfunction!(run_manybody, m)?)?;
    m.add_function(wrap_pyfunction!(run_coupled, m)?)?;
    m.add_function(wrap_pyfunction!(run_trig, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
