//! Python bindings: thin wrappers around the space, function, and subset
//! types plus the main operations.  Scalars cross the boundary as Python
//! ints where integral and as exact "p/q" strings otherwise; structured
//! results cross as plain dicts mirroring the JSON report schemas.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde_json::Value as JsonValue;
use std::str::FromStr;

use metricbv::graph::{validate_graph, Metric, MetricGraph, PointRef};
use metricbv::num::Num;
use metricbv::pl::PiecewiseLinear;
use metricbv::subset::EdgeSubset;
use metricbv::variation::{Mode, SolveOpts};

fn to_py_err(e: metricbv::Error) -> PyErr {
    if e.is_precondition() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse_scalar(v: &Bound<'_, PyAny>) -> PyResult<Num> {
    if let Ok(i) = v.extract::<i64>() {
        return Ok(Num::int(i));
    }
    if let Ok(s) = v.extract::<String>() {
        return Num::from_str(&s).map_err(PyValueError::new_err);
    }
    if let Ok(x) = v.extract::<f64>() {
        return Ok(Num::float(x));
    }
    Err(PyValueError::new_err(
        "expected an int, a string like '3/4', or a float",
    ))
}

fn parse_point(s: &str) -> PyResult<PointRef> {
    PointRef::from_str(s).map_err(PyValueError::new_err)
}

fn parse_points(specs: Vec<String>) -> PyResult<Vec<PointRef>> {
    specs.iter().map(|s| parse_point(s)).collect()
}

fn parse_radii(radii: Vec<Bound<'_, PyAny>>) -> PyResult<Vec<Num>> {
    radii.iter().map(parse_scalar).collect()
}

fn parse_metric(metric: &str) -> PyResult<Metric> {
    match metric {
        "geodesic" => Ok(Metric::Geodesic),
        "ambient" | "ambient_euclidean" => Ok(Metric::AmbientEuclidean),
        other => Err(PyValueError::new_err(format!("unknown metric '{other}'"))),
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "pv" => Ok(Mode::Pointwise),
        "PV" => Ok(Mode::Partition),
        "iv" => Ok(Mode::Interior),
        other => Err(PyValueError::new_err(format!(
            "unknown mode '{other}' (expected pv, PV, or iv)"
        ))),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &JsonValue) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        JsonValue::Null => py.None().into_bound(py),
        JsonValue::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        JsonValue::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n
                .as_f64()
                .ok_or_else(|| PyValueError::new_err("non-finite number"))?
                .into_pyobject(py)?
                .into_any(),
        },
        JsonValue::String(s) => s.as_str().into_pyobject(py)?.into_any(),
        JsonValue::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        JsonValue::Object(map) => {
            let dict = PyDict::new(py);
            for (k, val) in map {
                dict.set_item(k, json_to_py(py, val)?)?;
            }
            dict.into_any()
        }
    })
}

fn report_to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let value = serde_json::to_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &value)
}

fn scalar_to_py<'py>(py: Python<'py>, v: &Num) -> PyResult<Bound<'py, PyAny>> {
    report_to_py(py, v)
}

fn opts(cap_segments: usize) -> SolveOpts {
    SolveOpts { cap_segments }
}

/// A metric graph with its metric mode.
#[pyclass(frozen, module = "metricbv_py")]
struct Space {
    inner: MetricGraph,
}

#[pymethods]
impl Space {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let g: MetricGraph =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        validate_graph(&g)
            .into_result(metricbv::Error::InvalidSpace)
            .map_err(to_py_err)?;
        Ok(Space { inner: g })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn vertices(&self) -> usize {
        self.inner.vertices.len()
    }

    #[getter]
    fn edges(&self) -> usize {
        self.inner.edges.len()
    }

    #[getter]
    fn metric(&self) -> &'static str {
        match self.inner.metric {
            Metric::Geodesic => "geodesic",
            Metric::AmbientEuclidean => "ambient_euclidean",
        }
    }

    fn h1_total<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        scalar_to_py(py, &metricbv::measure::h1_total(&self.inner))
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        report_to_py(py, &validate_graph(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!(
            "Space({} vertices, {} edges, {})",
            self.inner.vertices.len(),
            self.inner.edges.len(),
            match self.inner.metric {
                Metric::Geodesic => "geodesic",
                Metric::AmbientEuclidean => "ambient_euclidean",
            }
        )
    }
}

/// A piecewise linear function on a space.
#[pyclass(frozen, module = "metricbv_py")]
struct Function {
    inner: PiecewiseLinear,
}

#[pymethods]
impl Function {
    #[staticmethod]
    fn from_json(text: &str, space: PyRef<'_, Space>) -> PyResult<Self> {
        let f: PiecewiseLinear =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        metricbv::pl::validate_fn(&space.inner, &f)
            .into_result(metricbv::Error::InvalidFunction)
            .map_err(to_py_err)?;
        Ok(Function { inner: f })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn is_continuous(&self, space: PyRef<'_, Space>) -> PyResult<bool> {
        self.inner.is_continuous(&space.inner).map_err(to_py_err)
    }

    fn value_at<'py>(
        &self,
        py: Python<'py>,
        space: PyRef<'_, Space>,
        point: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = parse_point(point)?;
        let v = self.inner.value_at(&space.inner, &p).map_err(to_py_err)?;
        scalar_to_py(py, &v)
    }

    fn __repr__(&self) -> String {
        format!("Function({} edges)", self.inner.edges.len())
    }
}

/// A finite union of edge intervals and vertices.
#[pyclass(frozen, module = "metricbv_py")]
struct Subset {
    inner: EdgeSubset,
}

#[pymethods]
impl Subset {
    #[staticmethod]
    fn from_json(text: &str, space: PyRef<'_, Space>) -> PyResult<Self> {
        let s: EdgeSubset =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        metricbv::subset::validate_subset(&space.inner, &s)
            .into_result(metricbv::Error::InvalidSubset)
            .map_err(to_py_err)?;
        Ok(Subset { inner: s })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn measure<'py>(&self, py: Python<'py>, space: PyRef<'_, Space>) -> PyResult<Bound<'py, PyAny>> {
        let m = metricbv::measure::h1_of_subset(&space.inner, &self.inner).map_err(to_py_err)?;
        scalar_to_py(py, &m)
    }

    fn complement(&self, space: PyRef<'_, Space>) -> PyResult<Subset> {
        let c = self.inner.complement(&space.inner).map_err(to_py_err)?;
        Ok(Subset { inner: c })
    }

    fn __repr__(&self) -> String {
        format!("Subset({} edge interval groups)", self.inner.edges.len())
    }
}

#[pyfunction]
#[pyo3(signature = (levels, metric = "geodesic"))]
fn star_space(levels: u32, metric: &str) -> PyResult<Space> {
    let g = metricbv::gallery::star_space(levels, parse_metric(metric)?).map_err(to_py_err)?;
    Ok(Space { inner: g })
}

#[pyfunction]
fn star_marked_set(levels: u32) -> PyResult<Subset> {
    let s = metricbv::gallery::star_marked_set(levels).map_err(to_py_err)?;
    Ok(Subset { inner: s })
}

#[pyfunction]
#[pyo3(signature = (seed, n = 6, path = false, extra = 0, pieces = 3, jumps = 0.3))]
fn random_instance(
    seed: u64,
    n: u32,
    path: bool,
    extra: u32,
    pieces: u32,
    jumps: f64,
) -> PyResult<(Space, Function)> {
    let spec = metricbv::gallery::RandomSpec {
        vertices: n,
        extra_edges: extra,
        path,
        max_pieces: pieces,
        jump_prob: jumps,
    };
    let (g, f) = metricbv::gallery::random_instance(seed, &spec).map_err(to_py_err)?;
    Ok((Space { inner: g }, Function { inner: f }))
}

#[pyfunction]
fn indicator(space: PyRef<'_, Space>, set: PyRef<'_, Subset>) -> PyResult<Function> {
    let f = metricbv::subset::indicator(&space.inner, &set.inner).map_err(to_py_err)?;
    Ok(Function { inner: f })
}

#[pyfunction]
fn superlevel(
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    t: &Bound<'_, PyAny>,
) -> PyResult<Subset> {
    let t = parse_scalar(t)?;
    let s = metricbv::subset::superlevel(&space.inner, &f.inner, &t).map_err(to_py_err)?;
    Ok(Subset { inner: s })
}

#[pyfunction]
#[pyo3(signature = (space, f, mode = "pv", cap_segments = 48))]
fn variation<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    mode: &str,
    cap_segments: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let system = metricbv::variation::variation_solve(
        &space.inner,
        &f.inner,
        parse_mode(mode)?,
        &opts(cap_segments),
    )
    .map_err(to_py_err)?;
    report_to_py(py, &system)
}

#[pyfunction]
#[pyo3(signature = (space, f, cap_segments = 48))]
fn var_total<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    cap_segments: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let v = metricbv::variation::var_total(&space.inner, &f.inner, &opts(cap_segments))
        .map_err(to_py_err)?;
    scalar_to_py(py, &v)
}

#[pyfunction]
fn good_representative(space: PyRef<'_, Space>, f: PyRef<'_, Function>) -> PyResult<Function> {
    let g = metricbv::variation::good_representative(&space.inner, &f.inner).map_err(to_py_err)?;
    Ok(Function { inner: g })
}

#[pyfunction]
fn jump_points<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    kappa: &Bound<'_, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let kappa = parse_scalar(kappa)?;
    let recs =
        metricbv::variation::jump_points(&space.inner, &f.inner, &kappa).map_err(to_py_err)?;
    report_to_py(py, &recs)
}

#[pyfunction]
#[pyo3(signature = (space, f, cap_segments = 48))]
fn tv_bracket<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    cap_segments: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let b = metricbv::bv::tv_bracket(&space.inner, &f.inner, &opts(cap_segments))
        .map_err(to_py_err)?;
    report_to_py(py, &b)
}

#[pyfunction]
#[pyo3(signature = (space, f, cap_segments = 48))]
fn coarea_sweep<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    cap_segments: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let sweep = metricbv::bv::coarea_sweep(&space.inner, &f.inner, &opts(cap_segments))
        .map_err(to_py_err)?;
    report_to_py(py, &sweep)
}

#[pyfunction]
fn perimeter_bound<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    set: PyRef<'_, Subset>,
    c0: &Bound<'_, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let c0 = parse_scalar(c0)?;
    let b = metricbv::bv::perimeter_upper_bound(&space.inner, &set.inner, &c0).map_err(to_py_err)?;
    report_to_py(py, &b)
}

#[pyfunction]
#[pyo3(signature = (space, f, eps, c0, cap_segments = 48))]
fn smooth_jumps<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    eps: &Bound<'_, PyAny>,
    c0: &Bound<'_, PyAny>,
    cap_segments: usize,
) -> PyResult<(Function, Bound<'py, PyAny>)> {
    let eps = parse_scalar(eps)?;
    let c0 = parse_scalar(c0)?;
    let sm = metricbv::bv::smooth_jumps(&space.inner, &f.inner, &eps, &c0, &opts(cap_segments))
        .map_err(to_py_err)?;
    Ok((
        Function { inner: sm.function },
        scalar_to_py(py, &sm.pv_value)?,
    ))
}

#[pyfunction]
fn density_profile<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    point: &str,
    radii: Vec<Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let profile = metricbv::diagnostics::density_liminf(
        &space.inner,
        &parse_point(point)?,
        &parse_radii(radii)?,
    )
    .map_err(to_py_err)?;
    report_to_py(py, &profile)
}

#[pyfunction]
fn doubling<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    centers: Vec<String>,
    radii: Vec<Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let scan = metricbv::diagnostics::doubling_scan(
        &space.inner,
        &parse_points(centers)?,
        &parse_radii(radii)?,
    )
    .map_err(to_py_err)?;
    report_to_py(py, &scan)
}

#[pyfunction]
#[pyo3(signature = (space, f, point, radius, p = 1.0, c = None, lam = None))]
fn poincare<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, Function>,
    point: &str,
    radius: &Bound<'_, PyAny>,
    p: f64,
    c: Option<&Bound<'_, PyAny>>,
    lam: Option<&Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = metricbv::diagnostics::PoincareParams {
        p,
        c: c.map(parse_scalar).transpose()?.unwrap_or(Num::int(4)),
        lambda: lam.map(parse_scalar).transpose()?.unwrap_or(Num::int(3)),
    };
    let ball = metricbv::diagnostics::BallSpec {
        center: parse_point(point)?,
        radius: parse_scalar(radius)?,
    };
    let check = metricbv::diagnostics::poincare_check(&space.inner, &ball, &f.inner, &params)
        .map_err(to_py_err)?;
    report_to_py(py, &check)
}

#[pyfunction]
fn mtb_scan<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    set: PyRef<'_, Subset>,
    candidates: Vec<String>,
    radii: Vec<Bound<'_, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let scan = metricbv::diagnostics::mtb_scan(
        &space.inner,
        &set.inner,
        &parse_points(candidates)?,
        &parse_radii(radii)?,
    )
    .map_err(to_py_err)?;
    report_to_py(py, &scan)
}

#[pyfunction]
#[pyo3(signature = (space, set, c0, radii, cap_segments = 48))]
fn federer<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    set: PyRef<'_, Subset>,
    c0: &Bound<'_, PyAny>,
    radii: Vec<Bound<'_, PyAny>>,
    cap_segments: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let report = metricbv::diagnostics::federer_report(
        &space.inner,
        &set.inner,
        &parse_scalar(c0)?,
        &parse_radii(radii)?,
        &opts(cap_segments),
    )
    .map_err(to_py_err)?;
    report_to_py(py, &report)
}

#[pyfunction]
fn ball_measure<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    point: &str,
    radius: &Bound<'_, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let ball = metricbv::measure::ball_subset(
        &space.inner,
        &parse_point(point)?,
        &parse_scalar(radius)?,
    )
    .map_err(to_py_err)?;
    let m = metricbv::measure::h1_of_subset(&space.inner, &ball).map_err(to_py_err)?;
    scalar_to_py(py, &m)
}

#[pymodule]
fn metricbv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_class::<Function>()?;
    m.add_class::<Subset>()?;
    m.add_function(wrap_pyfunction!(star_space, m)?)?;
    m.add_function(wrap_pyfunction!(star_marked_set, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(indicator, m)?)?;
    m.add_function(wrap_pyfunction!(superlevel, m)?)?;
    m.add_function(wrap_pyfunction!(variation, m)?)?;
    m.add_function(wrap_pyfunction!(var_total, m)?)?;
    m.add_function(wrap_pyfunction!(good_representative, m)?)?;
    m.add_function(wrap_pyfunction!(jump_points, m)?)?;
    m.add_function(wrap_pyfunction!(tv_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(coarea_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(perimeter_bound, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_jumps, m)?)?;
    m.add_function(wrap_pyfunction!(density_profile, m)?)?;
    m.add_function(wrap_pyfunction!(doubling, m)?)?;
    m.add_function(wrap_pyfunction!(poincare, m)?)?;
    m.add_function(wrap_pyfunction!(mtb_scan, m)?)?;
    m.add_function(wrap_pyfunction!(federer, m)?)?;
    m.add_function(wrap_pyfunction!(ball_measure, m)?)?;
    Ok(())
}
