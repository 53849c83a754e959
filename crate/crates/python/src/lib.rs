//! Python bindings. Configurations cross the boundary as wrapped objects and
//! serialize to the same JSON documents the CLI writes.

use fkgas_core::hamiltonians::{self as ham, Quadrature};
use fkgas_core::interactions::{self as inter, SuperstabilityConstants};
use fkgas_core::representations::{self as rep, ConfigDocument, FORMAT_VERSION};
use fkgas_core::rng::{stream, Stream};
use fkgas_core::samplers::{self, IdealSpec, OracleSpec};
use fkgas_core::statistics::{self as stats, LongCycleRule};
use fkgas_core::verification::{self, AcceptanceConfig};
use fkgas_core::{Error, ErrorKind};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn py_err(e: Error) -> PyErr {
    match e.kind() {
        ErrorKind::Config => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for fkgas_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: ham::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    fn new(beta: f64, mu: f64, side: f64, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: ham::ModelParams::new(beta, mu, side, dim).py()? })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn side(&self) -> f64 {
        self.inner.side
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Mass of the loop measure in the window.
    fn loop_measure_mass(&self) -> f64 {
        ham::loop_measure_mass(&self.inner)
    }

    fn loop_intensity(&self, j: usize) -> f64 {
        ham::loop_intensity(&self.inner, j)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("ModelParams(beta={}, mu={}, side={}, dim={})", p.beta, p.mu, p.side, p.dim)
    }
}

#[pyclass(name = "EnergyModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnergyModel {
    inner: inter::EnergyModel,
}

#[pymethods]
impl PyEnergyModel {
    #[staticmethod]
    fn zero() -> Self {
        Self { inner: inter::EnergyModel::zero() }
    }

    #[staticmethod]
    fn hard_core(radius: f64, cell: f64, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: inter::EnergyModel::hard_core(radius, cell, dim).py()? })
    }

    #[staticmethod]
    fn bump(strength: f64, range: f64, cell: f64, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: inter::EnergyModel::bump(strength, range, cell, dim).py()? })
    }

    /// Superstability constants `(A, B, r)`, if certified.
    #[getter]
    fn constants(&self) -> Option<(f64, f64, f64)> {
        self.inner.constants.map(|c| (c.a, c.b, c.r))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "FkConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFkConfig {
    inner: rep::FkConfig,
}

#[pymethods]
impl PyFkConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ConfigDocument::fk_strict(text).py()? })
    }

    fn to_json(&self) -> String {
        ConfigDocument::Fk { version: FORMAT_VERSION, config: self.inner.clone() }.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn is_permutation_wise(&self) -> bool {
        self.inner.is_permutation_wise()
    }

    /// Start points of the bridges.
    fn starts(&self) -> Vec<Vec<f64>> {
        self.inner.bridges().iter().map(|b| b.start().to_vec()).collect()
    }

    /// `σ_γ` as a list of successor indices.
    fn successors(&self) -> PyResult<Vec<usize>> {
        Ok(self.inner.links().py()?.to_vec())
    }

    fn cycle_lengths(&self) -> PyResult<BTreeMap<usize, usize>> {
        stats::cycle_length_counts(&self.inner).py()
    }

    fn time_reversed(&self) -> Self {
        Self { inner: self.inner.time_reversed() }
    }

    fn translated(&self, v: Vec<f64>) -> PyResult<Self> {
        if v.len() != self.inner.dim() {
            return Err(PyValueError::new_err("shift has the wrong dimension"));
        }
        Ok(Self { inner: self.inner.translated(&v) })
    }

    /// Encode to marked points at lattice scale `r` and decode again.
    fn mp_round_trip(&self, r: f64) -> PyResult<Self> {
        let mp = rep::encode_fk_to_mp(&self.inner, r).py()?;
        Ok(Self { inner: rep::decode_mp_to_fk(&mp).py()? })
    }

    fn assemble(&self) -> PyResult<PyRlConfig> {
        Ok(PyRlConfig { inner: rep::assemble_fk_to_rl(&self.inner).py()? })
    }

    fn f1(&self) -> f64 {
        stats::f1(&self.inner)
    }

    fn f2(&self) -> f64 {
        stats::f2(&self.inner)
    }

    fn f3(&self) -> f64 {
        stats::f3(&self.inner)
    }

    fn f4(&self) -> f64 {
        stats::f4(&self.inner)
    }

    fn short_cycles(&self) -> f64 {
        stats::short_cycles(&self.inner)
    }

    /// `rule` is `"literal"` or `"period_one_long"`.
    #[pyo3(signature = (n, rule = "literal"))]
    fn long_cycles(&self, n: usize, rule: &str) -> PyResult<f64> {
        let rule = match rule {
            "literal" => LongCycleRule::Literal,
            "period_one_long" => LongCycleRule::PeriodOneLong,
            _ => return Err(PyValueError::new_err("rule must be 'literal' or 'period_one_long'")),
        };
        Ok(stats::long_cycle_fraction(&self.inner, n, rule))
    }

    fn energy(&self, model: &PyEnergyModel, params: &PyModelParams) -> PyResult<f64> {
        ham::h_fk(&self.inner, &model.inner, &params.inner, Quadrature::Left).py()
    }

    fn __repr__(&self) -> String {
        format!("FkConfig(dim={}, bridges={})", self.inner.dim(), self.inner.len())
    }
}

#[pyclass(name = "RlConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRlConfig {
    inner: rep::RlConfig,
}

#[pymethods]
impl PyRlConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        match ConfigDocument::from_json(text).py()? {
            ConfigDocument::Rl { config, .. } => Ok(Self { inner: config }),
            _ => Err(PyValueError::new_err("expected a rooted-loop document")),
        }
    }

    fn to_json(&self) -> String {
        ConfigDocument::Rl { version: FORMAT_VERSION, config: self.inner.clone() }.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.loops.len()
    }

    fn loop_lengths(&self) -> Vec<usize> {
        self.inner.loops.iter().map(|l| l.length).collect()
    }

    fn total_length(&self) -> usize {
        self.inner.total_length()
    }

    fn cut(&self) -> PyFkConfig {
        PyFkConfig { inner: rep::cut_rl_to_fk(&self.inner) }
    }

    fn time_shift(&self, s: f64) -> Self {
        Self { inner: self.inner.time_shift(s) }
    }

    fn energy(&self, model: &PyEnergyModel, params: &PyModelParams) -> PyResult<f64> {
        ham::h_rl(&self.inner, &model.inner, &params.inner, Quadrature::Left).py()
    }

    fn log_density(&self, model: &PyEnergyModel, params: &PyModelParams) -> PyResult<f64> {
        ham::log_density_rl(&self.inner, &model.inner, &params.inner, Quadrature::Left).py()
    }

    fn __repr__(&self) -> String {
        format!("RlConfig(dim={}, loops={})", self.inner.dim, self.inner.loops.len())
    }
}

/// Exact rejection sampler from the free loop soup; owns its random stream.
#[pyclass(name = "ExactSampler")]
struct PyExactSampler {
    inner: samplers::ExactSampler,
    rng: Stream,
}

#[pymethods]
impl PyExactSampler {
    #[new]
    #[pyo3(signature = (params, model, steps = 32, max_bridges = None, j_max = None, seed = 0, stream_index = 0))]
    fn new(
        params: &PyModelParams,
        model: &PyEnergyModel,
        steps: usize,
        max_bridges: Option<usize>,
        j_max: Option<usize>,
        seed: u64,
        stream_index: u64,
    ) -> PyResult<Self> {
        let (p, m) = (params.inner, model.inner.clone());
        let inner = match j_max {
            Some(j) => samplers::ExactSampler::with_j_max(p, m, steps, max_bridges, j),
            None => samplers::ExactSampler::new(p, m, steps, max_bridges),
        }
        .py()?;
        Ok(Self { inner, rng: stream(seed, stream_index) })
    }

    fn sample(&mut self, py: Python<'_>, n: usize) -> PyResult<Vec<PyRlConfig>> {
        let (inner, rng) = (&self.inner, &mut self.rng);
        py.detach(|| (0..n).map(|_| inner.sample(rng).map(|d| PyRlConfig { inner: d.config })).collect::<fkgas_core::Result<Vec<_>>>())
            .py()
    }
}

/// `n` draws of the free loop soup.
#[pyfunction]
#[pyo3(signature = (params, n, steps = 32, j_max = None, seed = 0))]
fn sample_ideal(py: Python<'_>, params: &PyModelParams, n: usize, steps: usize, j_max: Option<usize>, seed: u64) -> PyResult<Vec<PyRlConfig>> {
    let p = params.inner;
    let spec = IdealSpec { steps, j_max };
    py.detach(|| {
        let mut rng = stream(seed, 0);
        (0..n).map(|_| samplers::sample_ideal_rl(&p, &spec, &mut rng).map(|c| PyRlConfig { inner: c })).collect::<fkgas_core::Result<Vec<_>>>()
    })
    .py()
}

/// Partition function of the bridge-capped system, by the permutation sum and
/// by cycle types. Returns `{"fk": (Z, stderr), "cycle_type": (Z, stderr)}`.
#[pyfunction]
#[pyo3(signature = (params, model, n_max, seed = 0, samples_per_term = 100_000, steps = 32))]
fn partition_function(
    py: Python<'_>,
    params: &PyModelParams,
    model: &PyEnergyModel,
    n_max: usize,
    seed: u64,
    samples_per_term: usize,
    steps: usize,
) -> PyResult<BTreeMap<String, (f64, f64)>> {
    let mut spec = OracleSpec::new(n_max, seed);
    spec.samples_per_term = samples_per_term;
    spec.steps = steps;
    let (p, m) = (params.inner, model.inner.clone());
    let rep = py.detach(|| samplers::enumeration_oracle(&spec, &m, &p, &[])).py()?;
    Ok(BTreeMap::from([
        ("fk".to_string(), (rep.fk.z.value, rep.fk.z.stderr)),
        ("cycle_type".to_string(), (rep.cycle_type.z.value, rep.cycle_type.z.stderr)),
    ]))
}

#[pyfunction]
fn zeta(s: f64) -> f64 {
    ham::zeta(s)
}

#[pyfunction]
fn entropy_bound_constant(params: &PyModelParams, a: f64, b: f64, r: f64) -> PyResult<f64> {
    let c = SuperstabilityConstants::new(a, b, r).py()?;
    Ok(ham::entropy_bound_constant(&params.inner, &c))
}

#[pyfunction]
fn density_upper_bound(params: &PyModelParams, a: f64, b: f64, r: f64) -> PyResult<f64> {
    let c = SuperstabilityConstants::new(a, b, r).py()?;
    Ok(ham::density_upper_bound(&params.inner, &c))
}

/// Two-sample Kolmogorov–Smirnov test: `(statistic, p_value)`.
#[pyfunction]
fn ks_test(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stats::two_sample_test(&xs, &ys).py()?;
    Ok((r.statistic, r.p_value))
}

/// Run acceptance criteria; returns `(id, name, passed, detail)` per criterion.
#[pyfunction]
#[pyo3(signature = (criteria = None, scale = 1.0, seed = None))]
fn run_acceptance(py: Python<'_>, criteria: Option<Vec<u32>>, scale: f64, seed: Option<u64>) -> PyResult<Vec<(u32, String, bool, String)>> {
    if !(scale > 0.0) {
        return Err(PyValueError::new_err("scale must be positive"));
    }
    let mut cfg = AcceptanceConfig { scale, ..Default::default() };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let ids = criteria.unwrap_or_else(|| (1..=12).collect());
    let results = py.detach(|| verification::run_selected(&cfg, &ids));
    Ok(results
        .into_iter()
        .map(|r| (r.id, r.name, r.passed, r.detail))
        .collect())
}

#[pymodule]
#[pyo3(name = "fkgas")]
fn fkgas_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyEnergyModel>()?;
    m.add_class::<PyFkConfig>()?;
    m.add_class::<PyRlConfig>()?;
    m.add_class::<PyExactSampler>()?;
    m.add_function(wrap_pyfunction!(sample_ideal, m)?)?;
    m.add_function(wrap_pyfunction!(partition_function, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_bound_constant, m)?)?;
    m.add_function(wrap_pyfunction!(density_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
