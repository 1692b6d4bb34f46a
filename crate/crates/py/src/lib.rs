//! Python bindings for the `qwalk` simulator.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qwalk::config::parse_config;
use qwalk::experiment::run_experiment as run_cli_experiment;
use qwalk::integrator::{run_trajectory, IntegrationConfig, SampleGrid, TrajectoryOptions};
use qwalk::lattice::{ExpansionPolicy, WavePacket};
use qwalk::observables::{fit_crossover_series, variance};
use qwalk::qubit::{self, QubitParams};
use qwalk::{spectral, DisorderKind, DisorderSpec, QwalkError};

fn to_py(e: QwalkError) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

/// Wave function on a window of consecutive lattice sites.
#[pyclass(name = "WavePacket", from_py_object)]
#[derive(Clone)]
struct PyWavePacket {
    inner: WavePacket,
}

#[pymethods]
impl PyWavePacket {
    #[new]
    #[pyo3(signature = (amplitudes, x_offset = 0, time = 0.0))]
    fn new(amplitudes: Vec<Complex64>, x_offset: i64, time: f64) -> PyResult<Self> {
        Ok(PyWavePacket {
            inner: WavePacket::from_parts(amplitudes, x_offset, time).map_err(to_py)?,
        })
    }

    /// Packet localized on `center`.
    #[staticmethod]
    #[pyo3(signature = (center = 0))]
    fn delta(center: i64) -> Self {
        PyWavePacket {
            inner: WavePacket::delta(center),
        }
    }

    /// Equal amplitudes over `n` sites centered on the origin.
    #[staticmethod]
    fn uniform(n: usize) -> PyResult<Self> {
        Ok(PyWavePacket {
            inner: WavePacket::uniform(n).map_err(to_py)?,
        })
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    #[getter]
    fn x_offset(&self) -> i64 {
        self.inner.x_offset()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn coordinates(&self) -> Vec<i64> {
        self.inner.coordinates().collect()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn variance(&self) -> f64 {
        variance(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "WavePacket(sites={}, x_offset={}, time={})",
            self.inner.len(),
            self.inner.x_offset(),
            self.inner.time()
        )
    }
}

fn disorder_spec(kind: &str, w: f64, dtu: f64, seed: u64) -> PyResult<DisorderSpec> {
    let kind = DisorderKind::parse(kind)
        .ok_or_else(|| PyValueError::new_err(format!("unknown disorder `{kind}`")))?;
    Ok(match kind {
        DisorderKind::Clean => DisorderSpec::clean(),
        DisorderKind::StaticBox => DisorderSpec::static_box(w, seed),
        DisorderKind::DynamicWhite => DisorderSpec::white(w, dtu, seed),
        DisorderKind::DynamicSinusoidal => DisorderSpec::sinusoidal(w, seed),
    })
}

/// Integrates one trajectory and returns `(t, sigma2, p0, c, final_state)`.
#[pyfunction]
#[pyo3(signature = (psi0, disorder = "clean", w = 0.0, dt = 0.01, tmax = 10.0, dtu = 0.05, seed = 0, realization = 0, expanding = true, samples = 200))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn simulate(
    py: Python<'_>,
    psi0: &PyWavePacket,
    disorder: &str,
    w: f64,
    dt: f64,
    tmax: f64,
    dtu: f64,
    seed: u64,
    realization: u64,
    expanding: bool,
    samples: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, PyWavePacket)> {
    let spec = disorder_spec(disorder, w, dtu, seed)?;
    let cfg = IntegrationConfig::new(dt, tmax).with_samples(SampleGrid::Geometric { count: samples, first: None });
    let policy = ExpansionPolicy::default();
    let opts = TrajectoryOptions {
        expansion: expanding.then_some(&policy),
        carpet_rows: None,
    };
    let field = spec.realize(realization);
    let psi = psi0.inner.clone();
    let out = py
        .detach(|| run_trajectory(psi, &field, &cfg, &opts))
        .map_err(to_py)?;
    let s = out.series;
    Ok((s.times, s.sigma2, s.p0, s.c_of_t, PyWavePacket { inner: out.final_state }))
}

/// Exact evolution of `psi0` under the static potential `eps` (same window).
#[pyfunction]
fn evolve_spectral(psi0: &PyWavePacket, eps: Vec<f64>, t: f64) -> PyResult<PyWavePacket> {
    let system = spectral::eigensystem(&eps).map_err(to_py)?;
    Ok(PyWavePacket {
        inner: system.evolve(&psi0.inner, t).map_err(to_py)?,
    })
}

/// Ascending energies and orthonormal modes of the tight-binding chain.
#[pyfunction]
fn eigensystem(eps: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let s = spectral::eigensystem(&eps).map_err(to_py)?;
    Ok((s.energies().to_vec(), s.modes().map(|m| m.to_vec()).collect()))
}

/// `J_x(2t)^2`, the clean infinite-lattice density from a delta start.
#[pyfunction]
fn bessel_density(x: i64, t: f64) -> f64 {
    spectral::bessel_density(x, t)
}

/// `(t_quad_end, t_diff_start)` of a sampled `sigma2(t)`; `None` when undetermined.
#[pyfunction]
fn fit_crossover(times: Vec<f64>, sigma2: Vec<f64>, w: f64) -> PyResult<(Option<f64>, Option<f64>)> {
    if times.len() != sigma2.len() {
        return Err(PyValueError::new_err("times and sigma2 differ in length"));
    }
    let est = fit_crossover_series(&times, &sigma2, w).map_err(to_py)?;
    Ok((est.t_quad_end, est.t_diff_start))
}

/// Noise-averaged `(rho, R, J)` of the driven two-level system at time `t`.
#[pyfunction]
fn analytic_averaged(gamma: f64, w: f64, t: f64) -> (f64, f64, f64) {
    let s = qubit::analytic_averaged(&QubitParams::new(gamma, w), t);
    (s.rho, s.r, s.j)
}

/// Monte-Carlo ensemble of the two-level system: `(t, rho, R, J, J_stderr)`.
#[pyfunction]
#[pyo3(signature = (gamma = 1.0, w = 1.0, ensemble = 1000, dt = 0.002, tmax = 10.0, dtu = 0.01, seed = 0, samples = 200))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn ensemble_qubit(
    py: Python<'_>,
    gamma: f64,
    w: f64,
    ensemble: usize,
    dt: f64,
    tmax: f64,
    dtu: f64,
    seed: u64,
    samples: usize,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let params = QubitParams {
        gamma,
        w,
        seed,
        ensemble_size: ensemble,
        dt,
        t_max: tmax,
        update_interval: dtu,
        samples,
        workers: 0,
    };
    let mc = py.detach(|| qubit::ensemble_qubit(&params)).map_err(to_py)?;
    Ok((
        mc.states.iter().map(|s| s.time).collect(),
        mc.states.iter().map(|s| s.rho).collect(),
        mc.states.iter().map(|s| s.r).collect(),
        mc.states.iter().map(|s| s.j).collect(),
        mc.j_stderr,
    ))
}

#[pyfunction]
fn critical_disorder(gamma: f64) -> PyResult<f64> {
    qubit::critical_disorder(gamma).map_err(to_py)
}

/// Runs a command-line experiment, e.g. `run_experiment(["carpet", "--out", "dir"])`.
/// Returns the written file paths.
#[pyfunction]
fn run_experiment(py: Python<'_>, args: Vec<String>) -> PyResult<Vec<String>> {
    let cfg = parse_config(std::iter::once("qwalk".to_string()).chain(args))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let summary = py
        .detach(|| run_cli_experiment(&cfg))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(summary.files.iter().map(|p| p.display().to_string()).collect())
}

#[pymodule]
fn qwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWavePacket>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_spectral, m)?)?;
    m.add_function(wrap_pyfunction!(eigensystem, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_density, m)?)?;
    m.add_function(wrap_pyfunction!(fit_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_averaged, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_qubit, m)?)?;
    m.add_function(wrap_pyfunction!(critical_disorder, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
