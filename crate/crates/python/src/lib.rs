//! Python bindings: spacing laws, entropy functionals, samplers, the
//! stochastic processes, Fokker–Planck relaxation and the Calogero scans.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sel_core::calogero::{excited_state_entropy_scan, hermite_entropy_scan, CalogeroSpec, EntropyScan, Extension};
use sel_core::densities::{Density, DensityModel, SurmiseLabel};
use sel_core::entropy::{coarse_entropy, coarse_grain as coarse_masses, differential_entropy, discrete_entropy, kl_divergence};
use sel_core::fokker_planck::{gaussian_on_grid, relaxation_run, Potential, ThermoSpec};
use sel_core::grid::UniformGrid;
use sel_core::maxent::{kl_tilt, solve_kl_min, solve_maxent, AuxFunction, KlConstraint, MomentConstraintSet, Support};
use sel_core::processes::{bessel_ou_transition_pdf, gaps, simulate, Observables, ProcessKind, SdeConfig};
use sel_core::rmt::{spacing_from_components, spacing_from_matrix, EnsembleSpec};
use sel_core::rng::stream;

create_exception!(selpy, NumericalError, PyRuntimeError, "A computation broke down numerically.");

fn err(e: sel_core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for sel_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn label(name: &str) -> PyResult<SurmiseLabel> {
    name.parse::<SurmiseLabel>().py()
}

/// A probability density on the half line: a named spacing law, an
/// Erlang law, a Bessel–OU stationary law or a half-line Gaussian.
#[pyclass(frozen, skip_from_py_object, module = "selpy")]
#[derive(Clone, Copy)]
struct SpacingLaw {
    model: DensityModel,
}

#[pymethods]
impl SpacingLaw {
    /// Catalog law by label, e.g. "goe", "gue", "poisson", "p0".
    #[staticmethod]
    fn surmise(name: &str) -> PyResult<Self> {
        Ok(Self { model: DensityModel::surmise(label(name)?) })
    }

    #[staticmethod]
    fn erlang(rate: f64, shape: u32) -> PyResult<Self> {
        Ok(Self { model: DensityModel::erlang(rate, shape).py()? })
    }

    /// 2 r^{n−1} e^{−r²} / Γ(n/2)
    #[staticmethod]
    fn bessel_ou(n: u32) -> PyResult<Self> {
        Ok(Self { model: DensityModel::bessel_ou(n).py()? })
    }

    #[staticmethod]
    fn half_line_gaussian(sigma2: f64) -> PyResult<Self> {
        Ok(Self { model: DensityModel::half_line_gaussian(sigma2).py()? })
    }

    #[getter]
    fn label(&self) -> String {
        self.model.label()
    }

    /// (c, β, α, b) with pdf = c s^β exp(−b s^α).
    #[getter]
    fn coefficients(&self) -> (f64, u32, u32, f64) {
        self.model.coefficients()
    }

    fn pdf(&self, s: f64) -> PyResult<f64> {
        self.model.pdf(s).py()
    }

    fn cdf(&self, s: f64) -> f64 {
        self.model.cdf(s)
    }

    fn moment(&self, k: u32) -> PyResult<f64> {
        self.model.moment(k).py()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.model.mean()
    }

    #[getter]
    fn variance(&self) -> f64 {
        self.model.variance()
    }

    /// Differential entropy, by quadrature unless `closed` is set.
    #[pyo3(signature = (closed=false))]
    fn entropy(&self, closed: bool) -> PyResult<f64> {
        if closed {
            self.model.shannon_entropy_closed().py()
        } else {
            differential_entropy(&self.model).py()
        }
    }

    /// KL(self ‖ reference)
    fn kl_to(&self, reference: &SpacingLaw) -> PyResult<f64> {
        kl_divergence(&self.model, &reference.model).py()
    }

    #[pyo3(signature = (count, seed=0))]
    fn sample(&self, py: Python<'_>, count: usize, seed: u64) -> PyResult<Vec<f64>> {
        let m = self.model;
        py.detach(|| m.sample(&mut stream(seed, 0), count)).py()
    }

    /// Same law rescaled to unit mean.
    fn unit_mean(&self) -> Self {
        Self { model: self.model.normalize_unit_mean() }
    }

    fn __repr__(&self) -> String {
        format!("SpacingLaw({})", self.model.label())
    }
}

/// Labels accepted by `SpacingLaw.surmise`.
#[pyfunction]
fn labels() -> Vec<&'static str> {
    SurmiseLabel::ALL.iter().map(|l| l.name()).collect()
}

/// Masses on `cells` equal cells of [0, length], their discrete entropy and
/// the coarse estimate S(μ) + ln Δs.
#[pyfunction]
fn coarse_grain(py: Python<'_>, law: &SpacingLaw, length: f64, cells: usize) -> PyResult<Py<PyDict>> {
    let g = coarse_masses(&law.model, length, cells).py()?;
    let d = PyDict::new(py);
    d.set_item("discrete_entropy", discrete_entropy(&g))?;
    d.set_item("coarse_entropy", coarse_entropy(&g))?;
    d.set_item("cell_width", g.cell_width)?;
    d.set_item("masses", g.masses)?;
    Ok(d.unbind())
}

/// Maximum-entropy density under power-moment constraints.
///
/// `support` is "half_line", "full_line" or "interval" (with lo, hi);
/// `moments` maps powers to target values.
#[pyfunction]
#[pyo3(signature = (moments, support="half_line", lo=None, hi=None, tol=1e-10))]
fn maxent(py: Python<'_>, moments: Vec<(u32, f64)>, support: &str, lo: Option<f64>, hi: Option<f64>, tol: f64) -> PyResult<Py<PyDict>> {
    let support = match (support, lo, hi) {
        ("half_line", ..) => Support::HalfLine,
        ("full_line", ..) => Support::FullLine,
        ("interval", Some(lo), Some(hi)) => Support::Interval { lo, hi },
        ("interval", ..) => return Err(PyValueError::new_err("interval support needs lo and hi")),
        (other, ..) => return Err(PyValueError::new_err(format!("unknown support `{other}`"))),
    };
    let c = MomentConstraintSet::new(support, &moments).py()?;
    let s = py.detach(|| solve_maxent(&c, tol)).py()?;
    let d = PyDict::new(py);
    d.set_item("multipliers", s.multipliers)?;
    d.set_item("achieved_moments", s.achieved_moments)?;
    d.set_item("entropy", s.entropy)?;
    d.set_item("converged", s.converged)?;
    d.set_item("iterations", s.iterations)?;
    Ok(d.unbind())
}

/// Minimum-KL tilt ρ = C ρ_ref x^λ of a reference law, either at a given λ
/// or solving ⟨−ln x⟩ = theta.
#[pyfunction]
#[pyo3(signature = (reference, theta=None, lam=None, tol=1e-12, points=None))]
fn kl_fit(py: Python<'_>, reference: &SpacingLaw, theta: Option<f64>, lam: Option<f64>, tol: f64, points: Option<Vec<f64>>) -> PyResult<Py<PyDict>> {
    let sol = match (theta, lam) {
        (Some(theta), None) => solve_kl_min(&KlConstraint { reference: reference.model, aux: AuxFunction::NegLog, theta }, tol).py()?,
        (None, Some(l)) => kl_tilt(&reference.model, &AuxFunction::NegLog, l).py()?,
        _ => return Err(PyValueError::new_err("give exactly one of theta and lam")),
    };
    let d = PyDict::new(py);
    d.set_item("lam", sol.lambda)?;
    d.set_item("normalization", sol.normalization)?;
    d.set_item("achieved_theta", sol.achieved_theta)?;
    d.set_item("kl_to_reference", kl_divergence(&sol.density, &reference.model).py()?)?;
    if let Some(xs) = points {
        d.set_item("density", xs.iter().map(|&x| sol.density.value(x)).collect::<Vec<f64>>())?;
    }
    Ok(d.unbind())
}

/// Unit-mean eigenvalue gaps of 2×2 Gaussian matrices.
#[pyfunction]
#[pyo3(signature = (dyson_index, count, seed=0))]
fn matrix_spacings(py: Python<'_>, dyson_index: u32, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    let spec = EnsembleSpec::dyson_scaled(dyson_index, 2).py()?;
    py.detach(|| spacing_from_matrix(&spec, seed, count)).py()
}

/// Unit-mean norms of `k` independent Gaussian components.
#[pyfunction]
#[pyo3(signature = (k, count, seed=0))]
fn component_spacings(py: Python<'_>, k: u32, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    py.detach(|| spacing_from_components(k, seed, count)).py()
}

fn run_paths(py: Python<'_>, kind: ProcessKind, paths: usize, t_final: f64, dt: f64, seed: u64, initial: Option<Vec<f64>>) -> PyResult<Py<PyDict>> {
    let cfg = SdeConfig::new(dt, dt * 1e-8, seed).py()?;
    let obs = Observables { initial, ..Default::default() };
    let b = py.detach(|| simulate(kind, &cfg, t_final, paths, &obs)).py()?;
    let d = PyDict::new(py);
    if matches!(kind, ProcessKind::Dyson { .. }) {
        d.set_item("gaps", gaps(&b.final_positions))?;
    }
    d.set_item("final_positions", b.final_positions)?;
    d.set_item("ordering_violations", b.ordering_violations)?;
    d.set_item("accepted_steps", b.counts.accepted)?;
    d.set_item("rejected_steps", b.counts.rejected)?;
    Ok(d.unbind())
}

/// Dyson eigenvalue diffusion from equispaced levels on [−1, 1].
#[pyfunction]
#[pyo3(signature = (dyson_index, n, paths, t_final, dt=0.01, seed=0, a2=None))]
#[allow(clippy::too_many_arguments)]
fn dyson(py: Python<'_>, dyson_index: u32, n: usize, paths: usize, t_final: f64, dt: f64, seed: u64, a2: Option<f64>) -> PyResult<Py<PyDict>> {
    run_paths(py, ProcessKind::Dyson { dyson_index, n, a2 }, paths, t_final, dt, seed, None)
}

/// Bessel–Ornstein–Uhlenbeck radii started at r0.
#[pyfunction]
#[pyo3(signature = (n, paths, t_final, dt=0.005, seed=0, r0=1.0))]
fn bessel_ou(py: Python<'_>, n: u32, paths: usize, t_final: f64, dt: f64, seed: u64, r0: f64) -> PyResult<Py<PyDict>> {
    run_paths(py, ProcessKind::BesselOu { n }, paths, t_final, dt, seed, Some(vec![r0]))
}

#[pyfunction]
fn bessel_ou_kernel(n: u32, r_from: f64, r_to: f64, t: f64) -> PyResult<f64> {
    bessel_ou_transition_pdf(n, r_from, r_to, t).py()
}

/// Fokker–Planck relaxation from a Gaussian start; one dict per report.
#[pyfunction]
#[pyo3(signature = (potential="harmonic", strength=1.0, temperature=1.0, friction=1.0, lo=-10.0, hi=10.0, cells=400, x0=2.0, var0=1.0, t_final=10.0, reports=100))]
#[allow(clippy::too_many_arguments)]
fn fp_relax(
    py: Python<'_>,
    potential: &str,
    strength: f64,
    temperature: f64,
    friction: f64,
    lo: f64,
    hi: f64,
    cells: usize,
    x0: f64,
    var0: f64,
    t_final: f64,
    reports: usize,
) -> PyResult<Vec<Py<PyDict>>> {
    let pot = match potential {
        "harmonic" => Potential::Harmonic { stiffness: strength },
        "bistable" => Potential::Bistable { height: strength },
        "bessel_ou" if strength.fract() == 0.0 && strength >= 1.0 => Potential::BesselOu { n: strength as u32 },
        _ => return Err(PyValueError::new_err(format!("bad potential `{potential}` with strength {strength}"))),
    };
    let spec = ThermoSpec::new(UniformGrid::new(lo, hi, cells).py()?, pot, temperature, friction).py()?;
    let rho0 = gaussian_on_grid(spec.grid, x0, var0).py()?;
    let times: Vec<f64> = (0..=reports).map(|i| t_final * i as f64 / reports.max(1) as f64).collect();
    let reps = py.detach(|| relaxation_run(&rho0, &spec, t_final, &times)).py()?;
    reps.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("t", r.time)?;
            d.set_item("entropy", r.entropy)?;
            d.set_item("energy", r.energy)?;
            d.set_item("free_energy", r.free_energy)?;
            d.set_item("free_energy_eq", r.free_energy_eq)?;
            d.set_item("entropy_production", r.entropy_production)?;
            d.set_item("heat_rate", r.heat_rate)?;
            d.set_item("entropy_rate", r.entropy_rate)?;
            d.set_item("conditional_kl", r.conditional_kl)?;
            Ok(d.unbind())
        })
        .collect()
}

fn scan_rows(py: Python<'_>, scan: EntropyScan) -> PyResult<Vec<Py<PyDict>>> {
    scan.rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("n", r.n)?;
            d.set_item("energy", r.energy)?;
            d.set_item("s_q", r.s_q)?;
            d.set_item("s_p", r.s_p)?;
            d.set_item("sum", r.sum)?;
            d.set_item("delta_x", r.delta_x)?;
            d.set_item("delta_p", r.delta_p)?;
            d.set_item("product", r.product)?;
            Ok(d.unbind())
        })
        .collect()
}

/// Position/momentum entropies for levels 0..=n_max of
/// H = −d²/dx² + x² + γ/x², or of the plain oscillator when `harmonic`.
#[pyfunction]
#[pyo3(signature = (gamma=1.0, n_max=3, cells=3000, even=false, harmonic=false))]
fn calogero_scan(py: Python<'_>, gamma: f64, n_max: u32, cells: usize, even: bool, harmonic: bool) -> PyResult<Vec<Py<PyDict>>> {
    let ext = if even { Extension::Even } else { Extension::Odd };
    let scan = py
        .detach(|| {
            if harmonic {
                hermite_entropy_scan(n_max, 12.0, cells)
            } else {
                excited_state_entropy_scan(gamma, n_max, cells, ext)
            }
        })
        .py()?;
    scan_rows(py, scan)
}

/// Closed-form level k of the two-level ("two_level") or singular form.
#[pyfunction]
fn calogero_level(form: &str, coupling: f64, k: u32) -> PyResult<f64> {
    let spec = match form {
        "two_level" => CalogeroSpec::TwoLevel(coupling),
        "singular" => CalogeroSpec::Singular(coupling),
        _ => return Err(PyValueError::new_err(format!("unknown form `{form}`"))),
    };
    spec.spectrum(k).py()
}

/// Runs acceptance criteria (all when `only` is empty); returns
/// (id, name, passed, detail) tuples.
#[pyfunction]
#[pyo3(signature = (seed=0, only=Vec::new()))]
fn verify(py: Python<'_>, seed: u64, only: Vec<u32>) -> Vec<(u32, String, bool, String)> {
    py.detach(|| sel_cli::acceptance::run_suite(seed, &only))
        .into_iter()
        .map(|r| (r.id, r.name, r.passed, r.detail))
        .collect()
}

#[pymodule]
fn selpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<SpacingLaw>()?;
    m.add_function(wrap_pyfunction!(labels, m)?)?;
    m.add_function(wrap_pyfunction!(coarse_grain, m)?)?;
    m.add_function(wrap_pyfunction!(maxent, m)?)?;
    m.add_function(wrap_pyfunction!(kl_fit, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_spacings, m)?)?;
    m.add_function(wrap_pyfunction!(component_spacings, m)?)?;
    m.add_function(wrap_pyfunction!(dyson, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_ou, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_ou_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(fp_relax, m)?)?;
    m.add_function(wrap_pyfunction!(calogero_scan, m)?)?;
    m.add_function(wrap_pyfunction!(calogero_level, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
