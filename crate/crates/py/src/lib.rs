//! Python bindings. Chains and plans cross the boundary as JSON strings in
//! the same formats the CLI reads and writes.

use linkfold::arch::convexify_arch;
use linkfold::flips::{convexify_flips, DEFAULT_MAX_FLIPS};
use linkfold::locked::{self, knot, NeedleParams};
use linkfold::motion::{sample_frames, validate as validate_plan, ValidationPolicy};
use linkfold::straighten::{find_straightening_direction, straighten as straighten_along, DEFAULT_BUDGET};
use linkfold::{chain, gen, geom, io, Error, Point};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Planning(_) | Error::NoRegularProjection | Error::ClosureUnreachable { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn direction(d: Option<[f64; 3]>) -> PyResult<Option<Point>> {
    d.map(|a| Point::from_array(a).normalized().ok_or_else(|| PyValueError::new_err("zero direction")))
        .transpose()
}

/// Chain JSON from a vertex list (2 or 3 coordinates per vertex).
#[pyfunction]
#[pyo3(signature = (vertices, closed=false))]
fn make_chain(vertices: Vec<Vec<f64>>, closed: bool) -> PyResult<String> {
    let points = vertices
        .iter()
        .map(|v| match v[..] {
            [x, y] => Ok(Point::planar(x, y)),
            [x, y, z] => Ok(Point::new(x, y, z)),
            _ => Err(PyValueError::new_err("each vertex needs 2 or 3 coordinates")),
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(io::chain_to_json(&chain::make_chain(points, closed).map_err(to_py)?))
}

/// Minimum clearance (distance between non-overlapping edges) of a chain.
#[pyfunction]
fn min_clearance(chain_json: &str) -> PyResult<f64> {
    Ok(geom::min_clearance(&io::chain_from_json(chain_json).map_err(to_py)?))
}

/// Whether the chain is simple.
#[pyfunction]
fn is_simple(chain_json: &str) -> PyResult<bool> {
    Ok(chain::is_simple(&io::chain_from_json(chain_json).map_err(to_py)?, None).simple)
}

/// Straightening plan for an open chain with a simple projection.
#[pyfunction]
#[pyo3(signature = (chain_json, direction=None, budget=DEFAULT_BUDGET, seed=0))]
fn straighten(chain_json: &str, direction: Option<[f64; 3]>, budget: usize, seed: u64) -> PyResult<String> {
    let config = io::chain_from_json(chain_json).map_err(to_py)?;
    let d = match self::direction(direction)? {
        Some(d) => d,
        None => find_straightening_direction(&config, budget, seed)
            .map_err(to_py)?
            .ok_or_else(|| to_py(Error::NoRegularProjection))?,
    };
    Ok(io::plan_to_json(&straighten_along(&config, d).map_err(to_py)?))
}

/// Convexification plan for a planar polygon; `method` is "flips" or "arch".
#[pyfunction]
#[pyo3(signature = (chain_json, method="arch", max_flips=DEFAULT_MAX_FLIPS))]
fn convexify(chain_json: &str, method: &str, max_flips: usize) -> PyResult<String> {
    let config = io::chain_from_json(chain_json).map_err(to_py)?;
    let plan = match method {
        "flips" => convexify_flips(&config, max_flips).map_err(to_py)?.plan,
        "arch" => convexify_arch(&config).map_err(to_py)?.plan,
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    Ok(io::plan_to_json(&plan))
}

/// Validate a plan; returns a dict with `certified`, `moves`,
/// `min_clearance` and `failure` (a message or None).
#[pyfunction]
#[pyo3(signature = (plan_json, samples=None, tol=None))]
fn validate<'py>(py: Python<'py>, plan_json: &str, samples: Option<usize>, tol: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let plan = io::plan_from_json(plan_json).map_err(to_py)?;
    let mut policy = ValidationPolicy { tol, ..ValidationPolicy::default() };
    if let Some(s) = samples {
        policy.initial_samples = s.max(1);
    }
    let report = validate_plan(&plan, &policy);
    let d = PyDict::new(py);
    d.set_item("certified", report.certified)?;
    d.set_item("moves", plan.len())?;
    d.set_item(
        "min_clearance",
        report.moves.iter().map(|m| m.min_clearance).fold(f64::INFINITY, f64::min),
    )?;
    d.set_item(
        "failure",
        report.failure.map(|f| format!("move {} at t = {}: {}", f.move_index, f.t, f.message)),
    )?;
    Ok(d)
}

/// Knot determinants of a closed chain along `samples` regular projections.
#[pyfunction]
#[pyo3(signature = (chain_json, samples=3, seed=0))]
fn knot_determinants(chain_json: &str, samples: usize, seed: u64) -> PyResult<Vec<u64>> {
    let config = io::chain_from_json(chain_json).map_err(to_py)?;
    knot::knot_determinants(&config, samples.max(1), seed).map_err(to_py)
}

/// Example chain JSON: needles-open, needles-closed, needles-completion,
/// polygon, lifted or zigzag.
#[pyfunction]
#[pyo3(signature = (shape, n=8, seed=0))]
fn generate(shape: &str, n: usize, seed: u64) -> PyResult<String> {
    let params = NeedleParams::default();
    let mut rng = gen::rng(seed);
    let config = match shape {
        "needles-open" => locked::make_knitting_needles(&params).map_err(to_py)?,
        "needles-closed" => locked::make_locked_closed(&params, locked::default_offset(&params)).map_err(to_py)?,
        "needles-completion" => locked::make_trefoil_completion(&params).map_err(to_py)?,
        "polygon" if n >= 3 => gen::random_simple_polygon(n, &mut rng),
        "lifted" if n >= 2 => gen::random_lifted_chain(n, &mut rng),
        "zigzag" if n >= 2 => gen::zigzag(n),
        _ => return Err(PyValueError::new_err(format!("unknown shape {shape:?} or n = {n} too small"))),
    };
    Ok(io::chain_to_json(&config))
}

/// Frames JSON sampled from a plan.
#[pyfunction]
#[pyo3(signature = (plan_json, samples=16))]
fn export_frames(plan_json: &str, samples: usize) -> PyResult<String> {
    let plan = io::plan_from_json(plan_json).map_err(to_py)?;
    Ok(io::frames_to_json(&sample_frames(&plan, samples.max(1)).map_err(to_py)?))
}

#[pymodule]
fn linkfold_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(make_chain, m)?)?;
    m.add_function(wrap_pyfunction!(min_clearance, m)?)?;
    m.add_function(wrap_pyfunction!(is_simple, m)?)?;
    m.add_function(wrap_pyfunction!(straighten, m)?)?;
    m.add_function(wrap_pyfunction!(convexify, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(knot_determinants, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(export_frames, m)?)?;
    Ok(())
}
