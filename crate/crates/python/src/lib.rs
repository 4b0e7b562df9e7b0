//! Python bindings for `qdomain`.
//!
//! Inputs use the same text formats as the `qdomain` CLI. Law suites return
//! lists of `{name, paper_ref, verdict, witness}` dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use qdomain::counterexamples::{ell2_truncation_demo, no_least_upper_bound_witness, PiecewiseLinear};
use qdomain::cpmaps::{loewner_leq_maps, KrausMap, OrderMode};
use qdomain::effect::{check_laws, parse_rational, FiniteEffectAlgebra, LawConfig, LawMode};
use qdomain::matrix::parse_matrices;
use qdomain::random::seeded;
use qdomain::report::LawReport;
use qdomain::subdist::check_monad_laws;
use qdomain::wp::{LoopPolicy, QuantumProgram};
use qdomain::wstar::{commutant, AlgebraElement, NormalState};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn report_to_list<'py>(py: Python<'py>, report: LawReport) -> PyResult<Bound<'py, PyList>> {
    let list = PyList::empty(py);
    for c in report.sorted().checks {
        let d = PyDict::new(py);
        d.set_item("name", c.name)?;
        d.set_item("paper_ref", c.concept)?;
        d.set_item("verdict", c.verdict.to_string())?;
        d.set_item("witness", c.witness)?;
        list.append(d)?;
    }
    Ok(list)
}

/// Checks the PCM, GEA or effect algebra axioms on a finite table.
#[pyfunction]
#[pyo3(signature = (table, mode = "ea"))]
fn table_laws<'py>(py: Python<'py>, table: &str, mode: &str) -> PyResult<Bound<'py, PyList>> {
    let mode = match mode {
        "pcm" => LawMode::Pcm,
        "gea" => LawMode::Gea,
        "ea" => LawMode::Ea,
        other => return Err(value_error(format!("unknown mode {other:?}, expected pcm, gea or ea"))),
    };
    let t = FiniteEffectAlgebra::parse(table).map_err(value_error)?;
    report_to_list(py, check_laws(&t, &t.carrier(), mode, &LawConfig::exhaustive()))
}

/// Unit, associativity and Kleisli laws of the subdistribution monad on
/// random instances.
#[pyfunction]
#[pyo3(signature = (seed = 0, instances = 200, max_size = 5))]
fn monad_laws(py: Python<'_>, seed: u64, instances: usize, max_size: usize) -> PyResult<Bound<'_, PyList>> {
    if max_size == 0 {
        return Err(value_error("max_size must be at least 1"));
    }
    let mut rng = seeded(seed);
    report_to_list(py, check_monad_laws(&mut rng, instances, max_size))
}

/// Weakest precondition of `post` under `program`, as matrix text.
/// With `state`, also returns both sides of the duality pairing.
#[pyfunction]
#[pyo3(signature = (program, post, state = None, tol = 1e-9, max_iterations = 100_000))]
fn wp<'py>(
    py: Python<'py>,
    program: &str,
    post: &str,
    state: Option<&str>,
    tol: f64,
    max_iterations: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let q = AlgebraElement::parse(post).map_err(value_error)?;
    let p = QuantumProgram::parse(program, Some(q.signature())).map_err(value_error)?;
    let policy = LoopPolicy {
        max_iterations,
        ..LoopPolicy::default()
    };
    let w = p.wp(&q, policy, tol).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("precondition", w.effect.element().to_text())?;
    d.set_item("iterations", w.iterations)?;
    d.set_item("converged", w.converged)?;
    if let Some(s) = state {
        let rho = AlgebraElement::parse(s)
            .and_then(|e| NormalState::new(e, tol))
            .map_err(value_error)?;
        let r = p.duality_check(&rho, &q, policy, tol).map_err(value_error)?;
        d.set_item("precondition_pairing", r.precondition_pairing)?;
        d.set_item("state_pairing", r.state_pairing)?;
    }
    Ok(d)
}

/// Decides `f ⊑ g` for two Kraus maps via the Choi matrix of `g − f`.
#[pyfunction]
#[pyo3(signature = (f, g, tol = 1e-9))]
fn maps_leq(f: &str, g: &str, tol: f64) -> PyResult<bool> {
    let f = KrausMap::parse(f).map_err(value_error)?;
    let g = KrausMap::parse(g).map_err(value_error)?;
    let v = loewner_leq_maps(&f.transfer(), &g.transfer(), tol, OrderMode::Choi).map_err(value_error)?;
    Ok(v.holds)
}

/// Dimension of the commutant of the generators in `M_n`.
#[pyfunction]
fn commutant_dim(generators: &str) -> PyResult<usize> {
    let gens = parse_matrices(generators).map_err(value_error)?;
    let n = gens.first().map(|g| g.rows()).ok_or_else(|| value_error("no generators"))?;
    Ok(commutant(n, &gens).map_err(value_error)?.dim())
}

/// `‖(1 − p'_N) e_1‖` for the join of the truncated ℓ² family.
#[pyfunction]
#[pyo3(signature = (n, tol = 1e-9))]
fn ell2_distance(n: usize, tol: f64) -> PyResult<f64> {
    Ok(ell2_truncation_demo(n, tol).map_err(value_error)?.distance)
}

/// Strictly smaller continuous upper bound of the step chain, with the
/// point and gap of the decrease as rational strings.
#[pyfunction]
#[pyo3(signature = (g, delta = "1/8"))]
fn no_lub_witness<'py>(py: Python<'py>, g: &str, delta: &str) -> PyResult<Bound<'py, PyDict>> {
    let g = PiecewiseLinear::parse(g).map_err(value_error)?;
    let delta = parse_rational(delta).map_err(value_error)?;
    let w = no_least_upper_bound_witness(&g, &delta).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("improved", w.improved.to_text())?;
    d.set_item("delta", w.delta.to_string())?;
    d.set_item("point", w.point.to_string())?;
    d.set_item("gap", w.gap.to_string())?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "qdomain")]
fn qdomain_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(table_laws, m)?)?;
    m.add_function(wrap_pyfunction!(monad_laws, m)?)?;
    m.add_function(wrap_pyfunction!(wp, m)?)?;
    m.add_function(wrap_pyfunction!(maps_leq, m)?)?;
    m.add_function(wrap_pyfunction!(commutant_dim, m)?)?;
    m.add_function(wrap_pyfunction!(ell2_distance, m)?)?;
    m.add_function(wrap_pyfunction!(no_lub_witness, m)?)?;
    Ok(())
}
