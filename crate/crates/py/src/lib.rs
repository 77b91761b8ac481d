//! Python bindings: the main types and operations of the WASEP laboratory.
//!
//! Driving fields and density profiles cross the boundary as JSON (the same
//! schema the CLI config uses); lattice data crosses as plain lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use wasep_lab::flows;
use wasep_lab::hydro::{self, DensityField, VectorFieldSpec};
use wasep_lab::lattice::{self, Torus};
use wasep_lab::master;
use wasep_lab::obs;
use wasep_lab::rng::{stream_rng, Stream};
use wasep_lab::wasep;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_field(json: &str) -> PyResult<VectorFieldSpec> {
    serde_json::from_str(json).map_err(err)
}

fn density(torus: Torus, values: Vec<f64>) -> PyResult<DensityField> {
    DensityField::new(torus, values).map_err(err)
}

/// Discrete torus geometry.
#[pyclass(name = "Torus", skip_from_py_object)]
#[derive(Clone)]
struct PyTorus {
    inner: Torus,
}

#[pymethods]
impl PyTorus {
    #[new]
    fn new(d: usize, n: usize) -> PyResult<Self> {
        Ok(PyTorus {
            inner: Torus::new(d, n).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn side(&self) -> usize {
        self.inner.side()
    }

    #[getter]
    fn sites(&self) -> usize {
        self.inner.sites()
    }

    fn decode(&self, site: usize) -> Vec<i64> {
        self.inner.decode(site)[..self.inner.dim()].to_vec()
    }

    fn wrap(&self, site: usize, offset: Vec<i64>) -> PyResult<usize> {
        let mut off = [0i64; lattice::MAX_D];
        if offset.len() != self.inner.dim() {
            return Err(PyValueError::new_err("offset length must equal dim"));
        }
        off[..offset.len()].copy_from_slice(&offset);
        Ok(self.inner.wrap(site, &off))
    }

    fn dist_inf(&self, a: usize, b: usize) -> usize {
        self.inner.dist_inf(a, b)
    }

    fn __repr__(&self) -> String {
        format!("Torus(d={}, n={})", self.inner.dim(), self.inner.side())
    }
}

/// `ℓ`-sparse partition classes as lists of site indices.
#[pyfunction]
fn sparse_partition(d: usize, n: usize, l: usize) -> PyResult<Vec<Vec<usize>>> {
    let torus = Torus::new(d, n).map_err(err)?;
    Ok(lattice::sparse_partition(&torus, l)
        .map_err(err)?
        .into_iter()
        .map(|class| class.sites().to_vec())
        .collect())
}

/// Energies and exactness report of the flow `φ_ℓ` connecting `δ_0` to
/// `q_ℓ`.
#[pyfunction]
fn flow_report(py: Python<'_>, l: usize, d: usize) -> PyResult<Py<pyo3::types::PyDict>> {
    let phi = flows::point_to_qell_flow(l, d).map_err(err)?;
    let (_, ql) = lattice::box_measures(l, d).map_err(err)?;
    let report = flows::qell_report(&phi, l, d, &ql);
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("l", report.l)?;
    dict.set_item("d", report.d)?;
    dict.set_item("sum_sq", report.sum_sq)?;
    dict.set_item("sum_abs", report.sum_abs)?;
    dict.set_item("max_abs", report.max_abs)?;
    dict.set_item("divergence_exact", report.divergence_exact)?;
    dict.set_item("support_ok", report.support_ok)?;
    Ok(dict.unbind())
}

/// `g_d` scale function.
#[pyfunction]
fn g_d(d: usize, l: usize) -> PyResult<f64> {
    flows::g_d(d, l).map_err(err)
}

/// Balancing block scale `ℓ(n)`.
#[pyfunction]
fn ell_of_n(d: usize, n: usize) -> PyResult<usize> {
    obs::ell_of_n(d, n).map_err(err)
}

/// Solve the hydrodynamic equation; returns the density at `t_final`.
#[pyfunction]
#[pyo3(signature = (d, n, u0, field_json, t_final, dt=None))]
fn solve_hydro(
    d: usize,
    n: usize,
    u0: Vec<f64>,
    field_json: &str,
    t_final: f64,
    dt: Option<f64>,
) -> PyResult<Vec<f64>> {
    let torus = Torus::new(d, n).map_err(err)?;
    let u0 = density(torus, u0)?;
    let field = parse_field(field_json)?;
    let sol = hydro::solve_hydro(&u0, &field, t_final, dt).map_err(err)?;
    Ok(sol.at(t_final))
}

/// Evaluate the discrete generator `ℒ^n u`.
#[pyfunction]
fn discrete_generator(d: usize, n: usize, u: Vec<f64>, field_json: &str) -> PyResult<Vec<f64>> {
    let torus = Torus::new(d, n).map_err(err)?;
    let field = parse_field(field_json)?;
    let dual = hydro::sample_dual_field(&field, &torus);
    Ok(hydro::discrete_generator(&u, &dual, &torus))
}

/// Simulate the exclusion process; returns `(times, occupancy lists)`.
#[pyfunction]
#[pyo3(signature = (d, n, u0, field_json, t_final, seed, snapshots))]
fn simulate(
    d: usize,
    n: usize,
    u0: Vec<f64>,
    field_json: &str,
    t_final: f64,
    seed: u64,
    snapshots: Vec<f64>,
) -> PyResult<(Vec<f64>, Vec<Vec<u8>>)> {
    let torus = Torus::new(d, n).map_err(err)?;
    let u0 = density(torus, u0)?;
    let field = parse_field(field_json)?;
    let rates = wasep::build_rates(&field, &torus);
    let mut init = stream_rng(seed, 0, Stream::InitialCondition);
    let eta0 = wasep::sample_profile_measure(&u0, &mut init);
    let mut dynamics = stream_rng(seed, 0, Stream::Dynamics);
    let traj =
        wasep::simulate(&eta0, &rates, t_final, &mut dynamics, &snapshots, false).map_err(err)?;
    let times = traj.snapshots.iter().map(|(t, _)| *t).collect();
    let configs = traj
        .snapshots
        .iter()
        .map(|(_, c)| {
            (0..torus.sites())
                .map(|s| c.occupied(s) as u8)
                .collect::<Vec<u8>>()
        })
        .collect();
    Ok((times, configs))
}

/// Fluctuation field `X(f) = n^{-d/2} Σ_x (η_x − u_x) f_x`.
#[pyfunction]
fn fluctuation_field(
    d: usize,
    n: usize,
    occupancy: Vec<u8>,
    u: Vec<f64>,
    f: Vec<f64>,
) -> PyResult<f64> {
    let torus = Torus::new(d, n).map_err(err)?;
    if occupancy.len() != torus.sites() {
        return Err(PyValueError::new_err("occupancy length mismatch"));
    }
    let mut eta = wasep::Configuration::empty(torus);
    for (s, &o) in occupancy.iter().enumerate() {
        eta.set(s, o != 0);
    }
    Ok(wasep_lab::fluct::fluctuation_field(&eta, &u, &f))
}

/// Relative entropy `Σ p log(p/μ)` of two state-space probability vectors
/// on a tiny torus.
#[pyfunction]
fn relative_entropy(d: usize, n: usize, p: Vec<f64>, mu: Vec<f64>) -> PyResult<f64> {
    let torus = Torus::new(d, n).map_err(err)?;
    let p = master::StateDistribution::new(torus, p).map_err(err)?;
    let mu = master::StateDistribution::new(torus, mu).map_err(err)?;
    master::relative_entropy(&p, &mu).map_err(err)
}

/// Product Bernoulli measure over the full state space of a tiny torus.
#[pyfunction]
fn product_measure(d: usize, n: usize, u: Vec<f64>) -> PyResult<Vec<f64>> {
    let torus = Torus::new(d, n).map_err(err)?;
    let u = density(torus, u)?;
    Ok(master::product_measure_vector(&u)
        .map_err(err)?
        .probs()
        .to_vec())
}

#[pymodule]
fn wasep_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTorus>()?;
    m.add_function(wrap_pyfunction!(sparse_partition, m)?)?;
    m.add_function(wrap_pyfunction!(flow_report, m)?)?;
    m.add_function(wrap_pyfunction!(g_d, m)?)?;
    m.add_function(wrap_pyfunction!(ell_of_n, m)?)?;
    m.add_function(wrap_pyfunction!(solve_hydro, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_generator, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_field, m)?)?;
    m.add_function(wrap_pyfunction!(relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(product_measure, m)?)?;
    Ok(())
}
