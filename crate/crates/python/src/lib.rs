//! Python bindings: priors, coordinate posteriors, wavelets, sequence
//! models and the experiment runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ht_bnp::coordinate_posterior::{
    coord_summary_quadrature_with, sequence_posterior, CoordProblem, PosteriorMethod, QuadratureConfig,
    SequencePosteriorConfig,
};
use ht_bnp::harness::{load_config, rate_sweep_points, run, RunOptions, RunStatus};
use ht_bnp::priors::sample_prior;
use ht_bnp::samplers::whiten_transform as whiten;
use ht_bnp::sequence_models::{make_truth as build_truth, simulate, volterra_multipliers as volterra, Dj94Signal, TruthSpec};
use ht_bnp::wavelet::{dwt_forward as forward, dwt_inverse as inverse, WaveletFilter, WaveletName};
use ht_bnp::{CoefficientField, Error, FieldLayout, PriorSpec, ScaleKind, TailDensity, TailKind};

create_exception!(ht_bnp_py, ConfigError, PyValueError);
create_exception!(ht_bnp_py, NumericalError, PyArithmeticError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } => ConfigError::new_err(e.to_string()),
        Error::Numerical { .. } => NumericalError::new_err(e.to_string()),
        Error::Domain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn tail_kind(kind: &str, nu: Option<f64>) -> PyResult<TailKind> {
    Ok(match kind {
        "cauchy" => TailKind::Cauchy,
        "gaussian" => TailKind::Gaussian,
        "laplace" => TailKind::Laplace,
        "student_t" => TailKind::StudentT {
            nu: nu.ok_or_else(|| PyValueError::new_err("student_t needs nu"))?,
        },
        _ => return Err(PyValueError::new_err(format!("unknown tail `{kind}`"))),
    })
}

fn scale_kind(kind: &str, a: f64, delta: f64, alpha: f64) -> PyResult<ScaleKind> {
    Ok(match kind {
        "ot" => ScaleKind::Ot { a, delta },
        "ht" => ScaleKind::Ht { alpha },
        "gaussian_scale" => ScaleKind::GaussianScale { alpha },
        _ => return Err(PyValueError::new_err(format!("unknown scale `{kind}`"))),
    })
}

fn wavelet(name: &str) -> PyResult<WaveletFilter> {
    let w = match name {
        "haar" => WaveletName::Haar,
        "symmlet8" => WaveletName::Symmlet8,
        "daubechies8" => WaveletName::Daubechies8,
        _ => return Err(PyValueError::new_err(format!("unknown wavelet `{name}`"))),
    };
    Ok(WaveletFilter::new(w))
}

/// Symmetric coordinate law of a series prior.
#[pyclass(name = "TailDensity", frozen)]
struct PyTail(TailDensity);

#[pymethods]
impl PyTail {
    /// `kind` is one of cauchy, gaussian, laplace, student_t (needs `nu`).
    #[new]
    #[pyo3(signature = (kind, nu=None))]
    fn new(kind: &str, nu: Option<f64>) -> PyResult<Self> {
        let t = TailDensity::new(tail_kind(kind, nu)?);
        t.validate().map_err(to_py)?;
        Ok(Self(t))
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    fn pdf(&self, x: f64) -> f64 {
        self.0.pdf(x)
    }

    fn logpdf(&self, x: f64) -> f64 {
        self.0.logpdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn survival(&self, x: f64) -> f64 {
        self.0.survival(x)
    }

    fn quantile(&self, p: f64) -> f64 {
        self.0.quantile(p)
    }

    fn __repr__(&self) -> String {
        format!("TailDensity({:?})", self.0.kind)
    }
}

/// Series prior: scales times i.i.d. draws from a tail density.
#[pyclass(name = "PriorSpec", frozen)]
struct PyPrior(PriorSpec);

#[pymethods]
impl PyPrior {
    /// Single-index prior on coefficients `1..=k`.
    #[staticmethod]
    #[pyo3(signature = (scale, tail, k, a=1.0, delta=0.5, alpha=1.0))]
    fn single(scale: &str, tail: PyRef<'_, PyTail>, k: usize, a: f64, delta: f64, alpha: f64) -> PyResult<Self> {
        let p = PriorSpec::single(scale_kind(scale, a, delta, alpha)?, tail.0, k);
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    /// Wavelet prior on levels `coarse_level..=max_level`.
    #[staticmethod]
    #[pyo3(signature = (scale, tail, max_level, coarse_level=0, a=1.0, delta=0.5, alpha=1.0))]
    fn wavelet(
        scale: &str,
        tail: PyRef<'_, PyTail>,
        max_level: usize,
        coarse_level: usize,
        a: f64,
        delta: f64,
        alpha: f64,
    ) -> PyResult<Self> {
        let p = PriorSpec::wavelet(scale_kind(scale, a, delta, alpha)?, tail.0, max_level, coarse_level);
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    fn scales(&self) -> Vec<f64> {
        self.0.scales()
    }

    /// One prior draw of the coefficients.
    fn sample(&self, seed: u64) -> PyResult<Vec<f64>> {
        Ok(sample_prior(&self.0, seed).map_err(to_py)?.into_values())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Posterior summary of one coordinate.
#[pyclass(name = "CoordSummary", frozen, get_all)]
struct PyCoordSummary {
    mean: f64,
    sd: f64,
    /// `(level, value)` pairs.
    quantiles: Vec<(f64, f64)>,
}

/// Quadrature posterior of `theta` given `X = kappa theta + eps / sqrt(n)`
/// and prior `sigma * h`, tempered by `rho`.
#[pyfunction]
#[pyo3(signature = (x, n, sigma, tail, rho=1.0, kappa=1.0, levels=vec![0.025, 0.5, 0.975]))]
fn coord_posterior(
    x: f64,
    n: f64,
    sigma: f64,
    tail: PyRef<'_, PyTail>,
    rho: f64,
    kappa: f64,
    levels: Vec<f64>,
) -> PyResult<PyCoordSummary> {
    let p = CoordProblem::direct(x, n, sigma, tail.0).with_rho(rho).with_kappa(kappa);
    let s = coord_summary_quadrature_with(&p, &levels, &QuadratureConfig::default()).map_err(to_py)?;
    Ok(PyCoordSummary {
        mean: s.mean,
        sd: s.sd(),
        quantiles: s.quantiles,
    })
}

/// Map a standard normal draw to a standard Cauchy draw.
#[pyfunction]
fn whiten_transform(xi: f64) -> f64 {
    whiten(xi)
}

/// Periodized orthonormal DWT of `2^J` samples, scaling block first.
#[pyfunction]
#[pyo3(signature = (samples, wavelet_name="symmlet8", coarse_level=0))]
fn dwt_forward(samples: Vec<f64>, wavelet_name: &str, coarse_level: usize) -> PyResult<Vec<f64>> {
    Ok(forward(&samples, &wavelet(wavelet_name)?, coarse_level)
        .map_err(to_py)?
        .into_values())
}

#[pyfunction]
#[pyo3(signature = (coeffs, wavelet_name="symmlet8", coarse_level=0))]
fn dwt_inverse(coeffs: Vec<f64>, wavelet_name: &str, coarse_level: usize) -> PyResult<Vec<f64>> {
    let field = CoefficientField::new(FieldLayout::Wavelet { coarse_level }, coeffs).map_err(to_py)?;
    inverse(&field, &wavelet(wavelet_name)?).map_err(to_py)
}

/// Truth coefficients: `sobolev_sin` (length `truncation`) or
/// `density_log_truth` (levels `0..=truncation`).
#[pyfunction]
fn make_truth(name: &str, truncation: usize) -> PyResult<Vec<f64>> {
    let spec = match name {
        "sobolev_sin" => TruthSpec::SobolevSin,
        "density_log_truth" => TruthSpec::DensityLogTruth,
        _ => return Err(PyValueError::new_err(format!("unknown truth `{name}`"))),
    };
    Ok(build_truth(&spec, truncation).map_err(to_py)?.into_values())
}

/// A DJ94 test signal sampled at `i / n`.
#[pyfunction]
fn dj94_signal(name: &str, n: usize) -> PyResult<Vec<f64>> {
    let s = Dj94Signal::ALL
        .iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown signal `{name}`")))?;
    Ok(s.samples(n))
}

/// Singular values of the Volterra operator, `k = 1..=k_max`.
#[pyfunction]
fn volterra_multipliers(k_max: usize) -> PyResult<Vec<f64>> {
    volterra(k_max).map_err(to_py)
}

/// Simulate `X = kappa f + eps / sqrt(n)` for a single-index truth and
/// return the coordinatewise posterior means and sds.
#[pyfunction]
#[pyo3(signature = (truth, n, prior, seed, forward=None, rho=1.0))]
fn sequence_posterior_means(
    truth: Vec<f64>,
    n: f64,
    prior: PyRef<'_, PyPrior>,
    seed: u64,
    forward: Option<Vec<f64>>,
    rho: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let truth = CoefficientField::single(truth).map_err(to_py)?;
    let obs = simulate(&truth, n, forward.as_deref(), seed).map_err(to_py)?;
    let post = sequence_posterior(
        &obs,
        &prior.0,
        rho,
        PosteriorMethod::Quadrature,
        &SequencePosteriorConfig::default(),
        Some(&truth),
    )
    .map_err(to_py)?;
    let means = post.summaries.iter().map(|s| s.mean).collect();
    let sds = post.summaries.iter().map(|s| s.sd()).collect();
    Ok((means, sds, post.l2_error.unwrap_or(f64::NAN)))
}

/// Mean posterior-mean error over `seeds` data sets per `n`:
/// a list of `(n, mean_error, se)`.
#[pyfunction]
#[pyo3(signature = (prior, truth, ns, seeds, seed, forward=None))]
fn rate_sweep(
    prior: PyRef<'_, PyPrior>,
    truth: Vec<f64>,
    ns: Vec<f64>,
    seeds: usize,
    seed: u64,
    forward: Option<Vec<f64>>,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let truth = CoefficientField::single(truth).map_err(to_py)?;
    let pts = rate_sweep_points(&prior.0, &truth, forward.as_deref(), &ns, seeds, seed).map_err(to_py)?;
    Ok(pts.into_iter().map(|p| (p.n, p.mean_error, p.se)).collect())
}

/// Parse and validate a TOML config; returns the experiment name.
#[pyfunction]
fn validate_config(path: PathBuf) -> PyResult<String> {
    Ok(load_config(&path).map_err(to_py)?.experiment.name().to_string())
}

/// Outcome of `run_experiment`.
#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    dir: String,
    status: String,
    wall_clock_seconds: f64,
    /// Relative artifact path to sha256 digest.
    outputs: BTreeMap<String, String>,
    manifest_json: String,
}

/// Run the experiment described by a TOML config file.
#[pyfunction]
#[pyo3(signature = (config, seed=None, paper_scale=false, out=None))]
fn run_experiment(
    py: Python<'_>,
    config: PathBuf,
    seed: Option<u64>,
    paper_scale: bool,
    out: Option<PathBuf>,
) -> PyResult<PyRunResult> {
    let cfg = load_config(&config).map_err(to_py)?;
    let opts = RunOptions { seed, paper_scale, out };
    let summary = py.detach(|| run(&cfg, &opts)).map_err(to_py)?;
    let m = summary.manifest;
    Ok(PyRunResult {
        dir: summary.dir.display().to_string(),
        status: match m.status {
            RunStatus::Running => "running",
            RunStatus::Complete => "complete",
            RunStatus::Failed => "failed",
        }
        .to_string(),
        wall_clock_seconds: m.wall_clock_seconds,
        manifest_json: serde_json::to_string(&m).map_err(|e| PyRuntimeError::new_err(e.to_string()))?,
        outputs: m.outputs,
    })
}

#[pymodule]
fn ht_bnp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyTail>()?;
    m.add_class::<PyPrior>()?;
    m.add_class::<PyCoordSummary>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(coord_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(whiten_transform, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_forward, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(make_truth, m)?)?;
    m.add_function(wrap_pyfunction!(dj94_signal, m)?)?;
    m.add_function(wrap_pyfunction!(volterra_multipliers, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_posterior_means, m)?)?;
    m.add_function(wrap_pyfunction!(rate_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
