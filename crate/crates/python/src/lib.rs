//! Python bindings: cost tables, layer shapes, the closed-form estimator,
//! the functional simulator and survey frontiers.
//!
//! Breakdowns and reports are returned as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use spikecost::analytic::{self, EnergyBreakdown, NetKind};
use spikecost::sim::{self, SimConfig, Traversal};
use spikecost::survey::{bundled_audio, bundled_imagenet};
use spikecost::{
    AcceleratorRecord, Access, ConvShape, LayerShape, NeuronParams, RecurrentShape, ResetMode, SparsityMode,
    SparsitySpec, Task,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CostTable", module = "spikecost_py")]
struct PyCostTable {
    inner: spikecost::CostTable,
}

#[pymethods]
impl PyCostTable {
    /// Prices in pJ (per byte for memory). Omitted values take the bundled
    /// 45 nm defaults.
    #[new]
    #[pyo3(signature = (add=None, mult=None, comp=None, sub=None, rd=None, wr=None))]
    fn new(
        add: Option<f64>,
        mult: Option<f64>,
        comp: Option<f64>,
        sub: Option<f64>,
        rd: Option<f64>,
        wr: Option<f64>,
    ) -> PyResult<Self> {
        let d = spikecost::CostTable::bundled_45nm();
        let custom = [add, mult, comp, sub, rd, wr].iter().any(Option::is_some);
        let inner = spikecost::CostTable {
            e_add_pj: add.unwrap_or(d.e_add_pj),
            e_mult_pj: mult.unwrap_or(d.e_mult_pj),
            e_comp_pj: comp.unwrap_or(d.e_comp_pj),
            e_sub_pj: sub.unwrap_or(d.e_sub_pj),
            e_rd_pj_per_byte: rd.unwrap_or(d.e_rd_pj_per_byte),
            e_wr_pj_per_byte: wr.unwrap_or(d.e_wr_pj_per_byte),
            label: if custom { "custom".into() } else { d.label },
        };
        inner.validate().map_err(err)?;
        Ok(PyCostTable { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyCostTable { inner: spikecost::load_cost_table(path).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCostTable { inner: spikecost::CostTable::from_json_str(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Energy of moving `bits` through memory; `access` is "read" or "write".
    #[pyo3(signature = (bits, access="read"))]
    fn mem_energy(&self, bits: u32, access: &str) -> PyResult<f64> {
        let access = match access {
            "read" => Access::Read,
            "write" => Access::Write,
            other => return Err(err(format!("access must be 'read' or 'write', got '{other}'"))),
        };
        self.inner.mem_energy(bits, access).map_err(err)
    }

    #[getter]
    fn add(&self) -> f64 {
        self.inner.e_add_pj
    }
    #[getter]
    fn mult(&self) -> f64 {
        self.inner.e_mult_pj
    }
    #[getter]
    fn comp(&self) -> f64 {
        self.inner.e_comp_pj
    }
    #[getter]
    fn sub(&self) -> f64 {
        self.inner.e_sub_pj
    }
    #[getter]
    fn rd(&self) -> f64 {
        self.inner.e_rd_pj_per_byte
    }
    #[getter]
    fn wr(&self) -> f64 {
        self.inner.e_wr_pj_per_byte
    }
    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    fn __repr__(&self) -> String {
        let t = &self.inner;
        format!(
            "CostTable(add={}, mult={}, comp={}, sub={}, rd={}, wr={})",
            t.e_add_pj, t.e_mult_pj, t.e_comp_pj, t.e_sub_pj, t.e_rd_pj_per_byte, t.e_wr_pj_per_byte
        )
    }
}

#[pyclass(name = "ConvShape", module = "spikecost_py")]
struct PyConvShape {
    inner: ConvShape,
}

#[pymethods]
impl PyConvShape {
    /// Defaults to the 512x14x14 input, 512 channel, 3x3 layer.
    #[new]
    #[pyo3(signature = (ci=512, hi=14, wi=14, co=512, hk=3, wk=3, stride=1, padding=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        ci: usize,
        hi: usize,
        wi: usize,
        co: usize,
        hk: usize,
        wk: usize,
        stride: usize,
        padding: usize,
    ) -> PyResult<Self> {
        let inner = ConvShape { ci, hi, wi, co, hk, wk, stride, padding, ..ConvShape::default() };
        inner.output_dims().map_err(err)?;
        Ok(PyConvShape { inner })
    }

    fn output_dims(&self) -> PyResult<(usize, usize, usize)> {
        self.inner.output_dims().map_err(err)
    }

    fn n_rd(&self) -> usize {
        self.inner.n_rd()
    }

    fn windows(&self) -> PyResult<u64> {
        self.inner.windows().map_err(err)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ConvShape(ci={}, hi={}, wi={}, co={}, hk={}, wk={}, stride={}, padding={})",
            c.ci, c.hi, c.wi, c.co, c.hk, c.wk, c.stride, c.padding
        )
    }
}

#[pyclass(name = "RecurrentShape", module = "spikecost_py")]
struct PyRecurrentShape {
    inner: RecurrentShape,
}

#[pymethods]
impl PyRecurrentShape {
    #[new]
    #[pyo3(signature = (n_in=1024, n_neurons=512))]
    fn new(n_in: usize, n_neurons: usize) -> PyResult<Self> {
        let inner = RecurrentShape::new(n_in, n_neurons);
        inner.validate().map_err(err)?;
        Ok(PyRecurrentShape { inner })
    }

    #[getter]
    fn n_in(&self) -> usize {
        self.inner.n_in
    }

    #[getter]
    fn n_neurons(&self) -> usize {
        self.inner.n_neurons
    }

    fn __repr__(&self) -> String {
        format!("RecurrentShape(n_in={}, n_neurons={})", self.inner.n_in, self.inner.n_neurons)
    }
}

fn layer_of(obj: &Bound<'_, PyAny>) -> PyResult<LayerShape> {
    if let Ok(c) = obj.extract::<PyRef<'_, PyConvShape>>() {
        return Ok(LayerShape::Conv(c.inner));
    }
    if let Ok(r) = obj.extract::<PyRef<'_, PyRecurrentShape>>() {
        return Ok(LayerShape::Recurrent(r.inner));
    }
    Err(err("layer must be a ConvShape or RecurrentShape"))
}

fn net_of(net: &str) -> PyResult<NetKind> {
    match net.to_ascii_lowercase().as_str() {
        "snn" => Ok(NetKind::Snn),
        "ann" | "rnn" => Ok(NetKind::Ann),
        _ => Err(err(format!("net must be 'snn' or 'ann', got '{net}'"))),
    }
}

fn mode_of(mode: &str) -> PyResult<SparsityMode> {
    match mode {
        "paper" => Ok(SparsityMode::PaperFaithful),
        "component" => Ok(SparsityMode::ComponentWise),
        _ => Err(err(format!("mode must be 'paper' or 'component', got '{mode}'"))),
    }
}

fn table_of(table: Option<PyRef<'_, PyCostTable>>) -> spikecost::CostTable {
    table.map_or_else(spikecost::CostTable::bundled_45nm, |t| t.inner.clone())
}

fn breakdown<'py>(py: Python<'py>, b: &EnergyBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", b.kind.as_str())?;
    for (name, v) in b.components() {
        d.set_item(name, v)?;
    }
    d.set_item("memory_pj", b.memory_pj())?;
    d.set_item("arith_pj", b.arith_pj())?;
    Ok(d)
}

/// Dense energy of one output element (window or neuron).
#[pyfunction]
#[pyo3(signature = (layer, net="snn", table=None))]
fn element_energy<'py>(
    py: Python<'py>,
    layer: &Bound<'py, PyAny>,
    net: &str,
    table: Option<PyRef<'py, PyCostTable>>,
) -> PyResult<Bound<'py, PyDict>> {
    let b = analytic::element_energy(&layer_of(layer)?, net_of(net)?, &table_of(table)).map_err(err)?;
    breakdown(py, &b)
}

/// Whole-layer energy at activity density `gamma` over `timesteps` steps.
#[pyfunction]
#[pyo3(signature = (layer, net="snn", gamma=1.0, timesteps=1, mode="paper", table=None))]
fn layer_total<'py>(
    py: Python<'py>,
    layer: &Bound<'py, PyAny>,
    net: &str,
    gamma: f64,
    timesteps: u32,
    mode: &str,
    table: Option<PyRef<'py, PyCostTable>>,
) -> PyResult<Bound<'py, PyDict>> {
    let sp = SparsitySpec::new(gamma, mode_of(mode)?).map_err(err)?;
    let b = analytic::layer_total(&layer_of(layer)?, net_of(net)?, &table_of(table), &sp, timesteps).map_err(err)?;
    breakdown(py, &b)
}

/// Rows of `{"gamma", "snn", "ann"}` sorted by gamma, descending.
#[pyfunction]
#[pyo3(signature = (layer, gammas, timesteps=1, mode="paper", table=None))]
fn sweep<'py>(
    py: Python<'py>,
    layer: &Bound<'py, PyAny>,
    gammas: Vec<f64>,
    timesteps: u32,
    mode: &str,
    table: Option<PyRef<'py, PyCostTable>>,
) -> PyResult<Bound<'py, PyList>> {
    let rows = analytic::sweep_sparsity(&layer_of(layer)?, &table_of(table), &gammas, timesteps, mode_of(mode)?)
        .map_err(err)?;
    let out = PyList::empty(py);
    for r in rows {
        let d = PyDict::new(py);
        d.set_item("gamma", r.gamma)?;
        d.set_item("snn", breakdown(py, &r.snn)?)?;
        d.set_item("ann", breakdown(py, &r.ann)?)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Seeded functional simulation compared against the closed form at the
/// measured input density.
#[pyfunction]
#[pyo3(signature = (layer, net="snn", density=1.0, seed=42, timesteps=1, beta=1.0, theta=64, deferred_reset=false, dense_traversal=false, table=None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    layer: &Bound<'py, PyAny>,
    net: &str,
    density: f64,
    seed: u64,
    timesteps: u32,
    beta: f64,
    theta: i32,
    deferred_reset: bool,
    dense_traversal: bool,
    table: Option<PyRef<'py, PyCostTable>>,
) -> PyResult<Bound<'py, PyDict>> {
    let reset = if deferred_reset { ResetMode::DeferredSubtract } else { ResetMode::ImmediateSubtract };
    let cfg = SimConfig {
        density,
        seed,
        timesteps,
        params: NeuronParams::new(beta, theta, reset).map_err(err)?,
        traversal: if dense_traversal { Traversal::Dense } else { Traversal::EventDriven },
        ..SimConfig::default()
    };
    let (layer, net, table) = (layer_of(layer)?, net_of(net)?, table_of(table));
    let c = py.detach(|| sim::simulate_layer(&layer, net, &cfg, &table)).map_err(err)?;
    let d = PyDict::new(py);
    let counts = PyDict::new(py);
    for (name, v) in c.counts.entries() {
        counts.set_item(name, v)?;
    }
    d.set_item("counts", counts)?;
    d.set_item("simulated", breakdown(py, &c.simulated)?)?;
    d.set_item("analytic", breakdown(py, &c.analytic)?)?;
    d.set_item("empirical_density", c.empirical_density)?;
    d.set_item("total_deviation", c.total_deviation())?;
    d.set_item("output_nonzero", c.output_nonzero)?;
    Ok(d)
}

fn survey_of(survey: &str) -> PyResult<Vec<AcceleratorRecord>> {
    match survey {
        "imagenet" => Ok(bundled_imagenet()),
        "audio" => Ok(bundled_audio()),
        path => spikecost::load_survey(path).map_err(err),
    }
}

fn task_of(task: Option<&str>) -> PyResult<Option<Task>> {
    task.map(|t| t.parse::<Task>().map_err(err)).transpose()
}

/// Survey records (`"imagenet"`, `"audio"` or a JSON path) as dicts.
#[pyfunction]
#[pyo3(signature = (survey="imagenet"))]
fn records<'py>(py: Python<'py>, survey: &str) -> PyResult<Bound<'py, PyList>> {
    let out = PyList::empty(py);
    for r in survey_of(survey)? {
        let d = PyDict::new(py);
        d.set_item("name", &r.name)?;
        d.set_item("family", r.family.to_string())?;
        d.set_item("task", r.task.to_string())?;
        d.set_item("process_nm", r.process_nm)?;
        d.set_item("energy_nj", r.energy_per_inference_nj)?;
        d.set_item("error_pct", r.task_error_pct)?;
        out.append(d)?;
    }
    Ok(out)
}

/// `{"task", "frontier": [...], "dominated": {name: [dominators]}}`.
#[pyfunction]
#[pyo3(signature = (survey="imagenet", task=None))]
fn frontier<'py>(py: Python<'py>, survey: &str, task: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let f = spikecost::frontier(&survey_of(survey)?, task_of(task)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("task", f.task.to_string())?;
    d.set_item("frontier", f.frontier)?;
    let dominated = PyDict::new(py);
    for (name, by) in f.dominated {
        dominated.set_item(name, by.into_iter().collect::<Vec<_>>())?;
    }
    d.set_item("dominated", dominated)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (survey="imagenet", task=None))]
fn scatter_csv(survey: &str, task: Option<&str>) -> PyResult<String> {
    spikecost::emit_scatter(&survey_of(survey)?, task_of(task)?).map_err(err)
}

#[pyfunction]
fn format_energy(pj: f64) -> String {
    analytic::format_energy(pj)
}

#[pymodule]
fn spikecost_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCostTable>()?;
    m.add_class::<PyConvShape>()?;
    m.add_class::<PyRecurrentShape>()?;
    m.add_function(wrap_pyfunction!(element_energy, m)?)?;
    m.add_function(wrap_pyfunction!(layer_total, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(records, m)?)?;
    m.add_function(wrap_pyfunction!(frontier, m)?)?;
    m.add_function(wrap_pyfunction!(scatter_csv, m)?)?;
    m.add_function(wrap_pyfunction!(format_energy, m)?)?;
    Ok(())
}
