//! Python bindings: networks, escape-time rasters, escape bounds, component counts,
//! boundedness windows and configuration classes.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quadnet::bifurcation::{self, Event, RealMapFamily, ScanSettings, WindowSettings};
use quadnet::cli::io;
use quadnet::ensemble::{self, ConfigurationFamily};
use quadnet::families::FamilySpec;
use quadnet::raster::{self, BinaryRaster, EscapeRaster, GridSpec};
use quadnet::topology::{self, Connectivity};
use quadnet::{escape, Error, MultiState, Network};

type Window = (f64, f64, f64, f64);

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::Precondition(_)
        | Error::IndexOutOfRange { .. }
        | Error::CapExceeded { .. }
        | Error::Schema { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn grid(window: Window, res: (usize, usize)) -> PyResult<GridSpec> {
    GridSpec::new(window.0, window.1, window.2, window.3, res.0, res.1).map_err(err)
}

fn rows<T: Copy>(data: &[T], width: usize) -> Vec<Vec<T>> {
    data.chunks(width).map(<[T]>::to_vec).collect()
}

fn raster_rows(r: &EscapeRaster) -> Vec<Vec<i32>> {
    rows(&r.data, r.grid.width)
}

fn map_family(name: &str, xi0: f64) -> PyResult<RealMapFamily> {
    match name {
        "z3_batch4" => Ok(RealMapFamily::Z3Batch4),
        "z2_even" => Ok(RealMapFamily::Z2Even),
        "z3_limit" => Ok(RealMapFamily::Z3Limit { xi0 }),
        other => Err(PyValueError::new_err(format!("unknown map {other:?}; expected z3_batch4, z2_even or z3_limit"))),
    }
}

fn connectivity(c: u8) -> PyResult<Connectivity> {
    Connectivity::try_from(c).map_err(err)
}

/// Network of coupled quadratic maps `z_j -> (sum_k w_jk z_k)^2 + c_j`.
#[pyclass(name = "Network", module = "pyquadnet", frozen)]
struct PyNetwork {
    inner: Network,
}

#[pymethods]
impl PyNetwork {
    #[new]
    fn new(adjacency: Vec<Vec<u8>>, weights: Vec<Vec<f64>>, c: Vec<Complex64>) -> PyResult<Self> {
        Ok(PyNetwork { inner: Network::new(adjacency, weights, c).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (c=Complex64::new(0.0, 0.0)))]
    fn single(c: Complex64) -> PyResult<Self> {
        Self::family(FamilySpec::Single, c)
    }

    #[staticmethod]
    #[pyo3(signature = (a, c=Complex64::new(0.0, 0.0)))]
    fn simple_dual(a: f64, c: Complex64) -> PyResult<Self> {
        Self::family(FamilySpec::SimpleDual { a }, c)
    }

    #[staticmethod]
    #[pyo3(signature = (a, b, c=Complex64::new(0.0, 0.0)))]
    fn self_drive(a: f64, b: f64, c: Complex64) -> PyResult<Self> {
        Self::family(FamilySpec::SelfDrive { a, b }, c)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyNetwork { inner: io::network_from_json(&v).map_err(err)? })
    }

    fn to_json(&self) -> String {
        io::network_to_json(&self.inner).to_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn params(&self) -> Vec<Complex64> {
        self.inner.params().to_vec()
    }

    #[getter]
    fn adjacency(&self) -> Vec<Vec<u8>> {
        self.inner.adjacency_rows()
    }

    #[getter]
    fn weights(&self) -> Vec<Vec<f64>> {
        self.inner.weight_rows()
    }

    /// Copy with every node parameter set to `c`.
    fn with_c(&self, c: Complex64) -> Self {
        PyNetwork { inner: self.inner.with_equi_param(c) }
    }

    fn step(&self, z: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.step(&MultiState::from_values(z)).map_err(err)?.values)
    }

    /// States visited from `z0` (all zeros by default) and the escape step, or None.
    #[pyo3(signature = (max_iter, escape_radius=20.0, z0=None))]
    fn orbit(&self, max_iter: usize, escape_radius: f64, z0: Option<Vec<Complex64>>) -> PyResult<(Vec<Vec<Complex64>>, Option<usize>)> {
        let s0 = z0.map(MultiState::from_values).unwrap_or_else(|| MultiState::zeros(self.inner.n()));
        let rec = self.inner.iterate_orbit(&s0, max_iter, escape_radius).map_err(err)?;
        Ok((rec.states.into_iter().map(|s| s.values).collect(), rec.escape_iter))
    }

    fn __repr__(&self) -> String {
        format!("Network(n={})", self.inner.n())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl PyNetwork {
    fn family(spec: FamilySpec, c: Complex64) -> PyResult<Self> {
        Ok(PyNetwork { inner: spec.build_with_c(c).map_err(err)? })
    }
}

/// Escape iteration per pixel (row 0 on top), -1 where the critical orbit stays bounded.
#[pyfunction]
#[pyo3(signature = (net, window, res, max_iter=50, escape_radius=20.0))]
fn equi_m_raster(
    py: Python<'_>,
    net: &PyNetwork,
    window: Window,
    res: (usize, usize),
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Vec<Vec<i32>>> {
    let g = grid(window, res)?;
    let r = py.detach(|| raster::equi_m_raster(&net.inner, &g, max_iter, escape_radius)).map_err(err)?;
    Ok(raster_rows(&r))
}

/// Like `equi_m_raster` but only node `node` (0-based) has to stay bounded.
#[pyfunction]
#[pyo3(signature = (net, node, window, res, max_iter=50, escape_radius=20.0))]
fn node_m_raster(
    py: Python<'_>,
    net: &PyNetwork,
    node: usize,
    window: Window,
    res: (usize, usize),
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Vec<Vec<i32>>> {
    let g = grid(window, res)?;
    let r = py.detach(|| raster::node_m_raster(&net.inner, node, &g, max_iter, escape_radius)).map_err(err)?;
    Ok(raster_rows(&r))
}

/// Escape iteration of the uniform start `z` on every node, over the `z` window.
#[pyfunction]
#[pyo3(signature = (net, window, res, max_iter=50, escape_radius=20.0))]
fn uni_j_raster(
    py: Python<'_>,
    net: &PyNetwork,
    window: Window,
    res: (usize, usize),
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Vec<Vec<i32>>> {
    let g = grid(window, res)?;
    let r = py.detach(|| raster::uni_j_raster(&net.inner, &g, max_iter, escape_radius)).map_err(err)?;
    Ok(raster_rows(&r))
}

#[pyfunction]
#[pyo3(signature = (net, delta=None))]
fn escape_bound<'py>(py: Python<'py>, net: &PyNetwork, delta: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let delta = delta.unwrap_or_else(|| escape::default_delta(&net.inner));
    let b = escape::escape_bound(&net.inner, delta).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("delta", b.delta)?;
    d.set_item("radius", b.radius)?;
    d.set_item("m", b.m)?;
    d.set_item("per_node_a", b.per_node_a)?;
    d.set_item("per_node_m", b.per_node_m)?;
    Ok(d)
}

/// Connected components of a boolean mask, optionally after dilation by `blowup_radius` pixels.
#[pyfunction]
#[pyo3(signature = (mask, connectivity=8, blowup_radius=0.0))]
fn count_components(mask: Vec<Vec<bool>>, connectivity: u8, blowup_radius: f64) -> PyResult<usize> {
    let height = mask.len();
    let width = mask.first().map_or(0, Vec::len);
    if mask.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("mask rows differ in length"));
    }
    let g = grid((0.0, 1.0, 0.0, 1.0), (width, height))?;
    let b = BinaryRaster::new(g, mask.concat()).map_err(err)?;
    topology::component_count_blowup(&b, blowup_radius, self::connectivity(connectivity)?).map_err(err)
}

/// 1 where `c0` lies in the equi-M set of the self-drive network with parameters `(a, b)`.
#[pyfunction]
#[pyo3(signature = (window, res, c0=Complex64::new(-1.0, 0.0), max_iter=50, escape_radius=20.0))]
fn ab_membership_locus(
    py: Python<'_>,
    window: Window,
    res: (usize, usize),
    c0: Complex64,
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Vec<Vec<u32>>> {
    let g = grid(window, res)?;
    let fam = |a: f64, b: f64| FamilySpec::SelfDrive { a, b }.build();
    let l = py.detach(|| topology::ab_membership_locus(fam, &g, c0, max_iter, escape_radius)).map_err(err)?;
    Ok(rows(&l.data, g.width))
}

/// Parameter intervals on which the critical orbit of the named map stays bounded.
#[pyfunction]
#[pyo3(signature = (map, p_min, p_max, xi0=0.0))]
fn bounded_windows(py: Python<'_>, map: &str, p_min: f64, p_max: f64, xi0: f64) -> PyResult<Vec<(f64, f64)>> {
    let fam = map_family(map, xi0)?;
    py.detach(|| bifurcation::bounded_windows(fam, p_min, p_max, WindowSettings::default())).map_err(err)
}

/// Fold ("LP") and period-doubling ("PD") points as `(kind, p, xi)`.
#[pyfunction]
#[pyo3(signature = (map, p_min, p_max, xi0=0.0))]
fn fixed_point_events(py: Python<'_>, map: &str, p_min: f64, p_max: f64, xi0: f64) -> PyResult<Vec<(String, f64, f64)>> {
    let fam = map_family(map, xi0)?;
    let scan = py.detach(|| bifurcation::fixed_point_scan(fam, p_min, p_max, ScanSettings::default())).map_err(err)?;
    Ok(scan
        .events()
        .map(|e| {
            let kind = match e.event {
                Some(Event::LP) => "LP",
                Some(Event::PD) => "PD",
                None => "",
            };
            (kind.to_string(), e.p, e.xi)
        })
        .collect())
}

fn edge_family(n: usize, k: usize, g: Option<f64>, sample: Option<usize>, seed: u64) -> ConfigurationFamily {
    let mut fam = ConfigurationFamily::edge_count(n, k);
    if let Some(g) = g {
        fam = fam.with_g(g);
    }
    match sample {
        Some(s) => fam.sampled(s, seed),
        None => fam,
    }
}

/// Spectral and asymptotic class ids of every `n`-node configuration with `k` edges.
#[pyfunction]
#[pyo3(signature = (n, k, c, g=None, max_iter=50, escape_radius=20.0))]
fn classes<'py>(
    py: Python<'py>,
    n: usize,
    k: usize,
    c: Complex64,
    g: Option<f64>,
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let (configs, spectral, asym) = py
        .detach(|| -> quadnet::Result<_> {
            let configs = ensemble::enumerate(&edge_family(n, k, g, None, 0))?;
            let spectral = ensemble::partition_spectral(&configs)?;
            let asym = ensemble::partition_asymptotic(&configs, c, &ensemble::default_z_grid(), max_iter, escape_radius)?;
            Ok((configs, spectral, asym))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("bitmask", configs.iter().map(ensemble::adjacency_hex).collect::<Vec<_>>())?;
    d.set_item("spectral", spectral.class_ids)?;
    d.set_item("asymptotic", asym.class_ids)?;
    Ok(d)
}

/// Fraction of configurations whose critical orbit stays bounded, per `c` pixel.
#[pyfunction]
#[pyo3(signature = (n, k, window, res, g=None, sample=None, seed=0, max_iter=50, escape_radius=20.0))]
#[allow(clippy::too_many_arguments)]
fn core_equi_m(
    py: Python<'_>,
    n: usize,
    k: usize,
    window: Window,
    res: (usize, usize),
    g: Option<f64>,
    sample: Option<usize>,
    seed: u64,
    max_iter: u32,
    escape_radius: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let grid = grid(window, res)?;
    let r = py
        .detach(|| {
            let configs = ensemble::enumerate(&edge_family(n, k, g, sample, seed))?;
            ensemble::core_equi_m(&configs, &grid, max_iter, escape_radius)
        })
        .map_err(err)?;
    Ok(rows(&r.data, grid.width))
}

#[pymodule]
fn pyquadnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(equi_m_raster, m)?)?;
    m.add_function(wrap_pyfunction!(node_m_raster, m)?)?;
    m.add_function(wrap_pyfunction!(uni_j_raster, m)?)?;
    m.add_function(wrap_pyfunction!(escape_bound, m)?)?;
    m.add_function(wrap_pyfunction!(count_components, m)?)?;
    m.add_function(wrap_pyfunction!(ab_membership_locus, m)?)?;
    m.add_function(wrap_pyfunction!(bounded_windows, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point_events, m)?)?;
    m.add_function(wrap_pyfunction!(classes, m)?)?;
    m.add_function(wrap_pyfunction!(core_equi_m, m)?)?;
    m.add("BOUNDED", raster::BOUNDED)?;
    Ok(())
}
