//! Python bindings for the rbh-lab laboratory: thermal order parameter,
//! error-correction rates, gauging dualities, and the 2D disentangler
//! checks, exposed as plain functions returning dicts or scalars.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use rbh_lab::disentangle2d::{
    self, build_circuit, conjugate_hamiltonian, default_square_side, dense_oracle, is_valid,
    sample_sinks, valid_probability, TriLattice,
};
use rbh_lab::error::Error;
use rbh_lab::gauging::{kernel_matches_symmetry_orbits, Gauger};
use rbh_lab::homology::CubicLattice;
use rbh_lab::loopgas::{exact_ensemble, peierls_tail, EnsembleParams};
use rbh_lab::membrane::{
    build_membranes, build_membranes_auto, max_admissible_alpha, order_parameter,
    order_parameter_exact, product_state_baseline,
};
use rbh_lab::restore::{logical_error_rate, nishimori_p, Method};
use rbh_lab::runio::split_seed;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Dimension(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Flip probability equivalent to temperature `t` on the Nishimori line.
#[pyfunction]
fn nishimori_flip_probability(t: f64) -> PyResult<f64> {
    nishimori_p(t).map_err(to_py_err)
}

/// Monte Carlo estimate of the membrane order parameter on a d^3 torus.
#[pyfunction]
#[pyo3(signature = (d, beta, samples = 10_000, seed = 1, alpha = None))]
fn order_param<'py>(
    py: Python<'py>,
    d: usize,
    beta: f64,
    samples: usize,
    seed: u64,
    alpha: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let lat = CubicLattice::new(d).map_err(to_py_err)?;
    let pair = match alpha {
        Some(a) => build_membranes(&lat, 0, d / 2, a).map_err(to_py_err)?,
        None => build_membranes_auto(&lat, beta).map_err(to_py_err)?,
    };
    let params = EnsembleParams::new(beta, d, seed).map_err(to_py_err)?;
    let est = order_parameter(&lat, &pair, &params, samples).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("o_raw", est.o_raw)?;
    out.set_item("o_corrected", est.o_corrected)?;
    out.set_item("stderr", est.stderr)?;
    out.set_item("alpha", est.alpha)?;
    out.set_item("n_samples", est.n_samples)?;
    Ok(out)
}

/// Exact membrane order parameter by full enumeration (d = 2 only).
#[pyfunction]
#[pyo3(signature = (beta, alpha = None))]
fn order_param_exact(beta: f64, alpha: Option<usize>) -> PyResult<f64> {
    let lat = CubicLattice::new(2).map_err(to_py_err)?;
    let pair = match alpha {
        Some(a) => build_membranes(&lat, 0, 1, a).map_err(to_py_err)?,
        None => build_membranes_auto(&lat, beta).map_err(to_py_err)?,
    };
    Ok(order_parameter_exact(&lat, &pair, beta).map_err(to_py_err)?.o_corrected)
}

/// Order parameter of the product state dual to beta = 0 (exactly 1/2).
#[pyfunction]
fn baseline_order_param(d: usize) -> PyResult<f64> {
    let lat = CubicLattice::new(d).map_err(to_py_err)?;
    let pair = build_membranes(&lat, 0, d / 2, 0).map_err(to_py_err)?;
    Ok(product_state_baseline(&lat, &pair))
}

/// Largest admissible correction radius parameter for separation `sep`.
#[pyfunction]
fn max_alpha(d: usize, sep: usize) -> usize {
    max_admissible_alpha(d, sep)
}

/// Logical failure rate of the matching decoder at flip probability p.
#[pyfunction]
#[pyo3(signature = (d, p, trials = 1000, method = "greedy", seed = 1))]
fn decode_failure_rate<'py>(
    py: Python<'py>,
    d: usize,
    p: f64,
    trials: usize,
    method: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = match method {
        "greedy" => Method::Greedy,
        "exact" => Method::Exact,
        other => {
            return Err(PyValueError::new_err(format!(
                "method must be 'greedy' or 'exact', got {other:?}"
            )))
        }
    };
    let rate = logical_error_rate(d, p, trials, m, seed).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("fail_rate", rate.fail_rate)?;
    out.set_item("stderr", rate.stderr)?;
    out.set_item("fail_rate_edges", rate.fail_rate_edges)?;
    out.set_item("fail_rate_faces", rate.fail_rate_faces)?;
    out.set_item("n_trials", rate.n_trials)?;
    Ok(out)
}

/// Exact loop-gas tail mass P(largest loop >= alpha) at d = 2, with the
/// analytic Peierls upper bound for comparison.
#[pyfunction]
fn loop_tail(alpha: usize, beta: f64) -> PyResult<(f64, f64)> {
    let lat = CubicLattice::new(2).map_err(to_py_err)?;
    let ens = exact_ensemble(&lat, beta).map_err(to_py_err)?;
    let bound = peierls_tail(alpha, beta, 2).map_err(to_py_err)?;
    Ok((ens.gamma.tail_mass(alpha), bound))
}

/// Check both gauging dualities and the symmetry-orbit kernel property on a
/// d^3 torus; returns True when every check holds.
#[pyfunction]
fn gauge_verify(d: usize) -> PyResult<bool> {
    let lat = CubicLattice::new(d).map_err(to_py_err)?;
    let gauger = Gauger::new(&lat);
    let report = gauger.verify_dualities().map_err(to_py_err)?;
    Ok(report.ok() && kernel_matches_symmetry_orbits(&lat))
}

/// Sample sink configurations on an L x L triangular torus and run the
/// disentangling-circuit checks on each valid draw.
#[pyfunction]
#[pyo3(signature = (l, beta, trials = 20, c = 8.0, seed = 1))]
fn disentangle_verify<'py>(
    py: Python<'py>,
    l: usize,
    beta: f64,
    trials: usize,
    c: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let lat = TriLattice::new(l).map_err(to_py_err)?;
    let side = default_square_side(&lat, c);
    let mut valid = 0usize;
    let mut conjugations_ok = true;
    let mut max_depth = 0usize;
    for i in 0..trials {
        let mut rng = ChaCha20Rng::seed_from_u64(split_seed(seed, i as u64));
        let k = sample_sinks(&lat, beta, &mut rng);
        if !is_valid(&lat, &k, side).map_err(to_py_err)? {
            continue;
        }
        valid += 1;
        let circuit = build_circuit(&lat, &k, side).map_err(to_py_err)?;
        max_depth = max_depth.max(circuit.depth());
        let terms = conjugate_hamiltonian(&lat, &k, &circuit).map_err(to_py_err)?;
        conjugations_ok &= disentangle2d::matches_target(&k, &terms);
    }
    let out = PyDict::new(py);
    out.set_item("L", l)?;
    out.set_item("square_side", side)?;
    out.set_item("trials", trials)?;
    out.set_item("valid", valid)?;
    out.set_item("expected_valid_probability", valid_probability(&lat, side, beta).map_err(to_py_err)?)?;
    out.set_item("max_depth", max_depth)?;
    out.set_item("all_conjugations_ok", conjugations_ok)?;
    Ok(out)
}

/// Dense 7- and 12-qubit oracles for the disentangling gate identities.
#[pyfunction]
#[pyo3(signature = (tol = 1e-10))]
fn disentangle_dense_oracle(tol: f64) -> PyResult<bool> {
    let star = dense_oracle(&disentangle2d::Patch::star(), tol).map_err(to_py_err)?;
    let torus = dense_oracle(&disentangle2d::Patch::torus_3x4(), tol).map_err(to_py_err)?;
    Ok(star && torus)
}

/// Trace distance between the exact L = 3 thermal state and its fixed-point
/// approximation, together with the closed-form upper bound.
#[pyfunction]
fn lemma1_check(beta: f64) -> PyResult<(f64, f64)> {
    disentangle2d::lemma1_gap(3, beta).map_err(to_py_err)
}

#[pymodule]
#[pyo3(name = "rbh_lab")]
fn rbh_lab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(nishimori_flip_probability, m)?)?;
    m.add_function(wrap_pyfunction!(order_param, m)?)?;
    m.add_function(wrap_pyfunction!(order_param_exact, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_order_param, m)?)?;
    m.add_function(wrap_pyfunction!(max_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(decode_failure_rate, m)?)?;
    m.add_function(wrap_pyfunction!(loop_tail, m)?)?;
    m.add_function(wrap_pyfunction!(gauge_verify, m)?)?;
    m.add_function(wrap_pyfunction!(disentangle_verify, m)?)?;
    m.add_function(wrap_pyfunction!(disentangle_dense_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_check, m)?)?;
    Ok(())
}
