//! Experiment configuration: a TOML tree, parsed with field paths in errors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coordinate_posterior::McmcKind;
use crate::error::{Error, Result};
use crate::priors::{PriorSpec, ScaleKind, TailDensity, TailKind};
use crate::samplers::{HierarchicalGaussianSpec, HyperPrior, Parametrization};
use crate::sequence_models::{Dj94Signal, TruthSpec};
use crate::theory_checks::{RateFlavor, RateSpec};
use crate::wavelet::{WaveletName, FINE_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig1PosteriorMeans,
    InverseRegression,
    Dj94Denoise,
    DensityEstimation,
    Classification,
    RateSweep,
    PriorMass,
    TheorySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Fig1PosteriorMeans,
        Experiment::InverseRegression,
        Experiment::Dj94Denoise,
        Experiment::DensityEstimation,
        Experiment::Classification,
        Experiment::RateSweep,
        Experiment::PriorMass,
        Experiment::TheorySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1PosteriorMeans => "fig1_posterior_means",
            Experiment::InverseRegression => "inverse_regression",
            Experiment::Dj94Denoise => "dj94_denoise",
            Experiment::DensityEstimation => "density_estimation",
            Experiment::Classification => "classification",
            Experiment::RateSweep => "rate_sweep",
            Experiment::PriorMass => "prior_mass",
            Experiment::TheorySuite => "theory_suite",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    fn needs_n(self) -> bool {
        !matches!(self, Experiment::Dj94Denoise | Experiment::TheorySuite)
    }

    fn needs_priors(self) -> bool {
        !matches!(self, Experiment::Fig1PosteriorMeans | Experiment::TheorySuite)
    }

    fn allows_hierarchical(self) -> bool {
        matches!(self, Experiment::InverseRegression | Experiment::Dj94Denoise)
    }

    fn is_function_model(self) -> bool {
        matches!(self, Experiment::DensityEstimation | Experiment::Classification)
    }
}

/// Forward operator of a sequence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardKind {
    Identity,
    /// Singular values `1 / ((k - 1/2) pi)` of the Volterra operator.
    Volterra,
}

fn default_alpha_prior() -> HyperPrior {
    HyperPrior::Exponential { rate: 1.0 }
}

fn default_tau_prior() -> HyperPrior {
    HyperPrior::InverseGamma { shape: 1.0, scale: 1.0 }
}

fn default_proposal_sd() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    /// Independent coordinates `sigma_k zeta_k`.
    Series {
        #[serde(default)]
        name: Option<String>,
        scale: ScaleKind,
        tail: TailKind,
    },
    /// Gaussian prior with hyperpriors on regularity and variance, sampled
    /// by Metropolis-within-Gibbs.
    HierarchicalGaussian {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_alpha_prior")]
        alpha: HyperPrior,
        #[serde(default = "default_tau_prior")]
        tau: HyperPrior,
        /// Centered when `n rho >= 1e5`, non-centered otherwise, if unset.
        #[serde(default)]
        parametrization: Option<Parametrization>,
        #[serde(default = "default_proposal_sd")]
        alpha_proposal_sd: f64,
        #[serde(default = "default_proposal_sd")]
        tau_proposal_sd: f64,
    },
}

/// Short label of a coordinate law, used in file names.
pub fn tail_label(t: TailKind) -> String {
    match t {
        TailKind::StudentT { nu } => format!("t{nu}"),
        TailKind::Cauchy => "cauchy".into(),
        TailKind::Gaussian => "gaussian".into(),
        TailKind::Laplace => "laplace".into(),
    }
}

fn scale_label(s: ScaleKind) -> String {
    match s {
        ScaleKind::Ot { .. } => "ot".into(),
        ScaleKind::Ht { alpha } => format!("ht{alpha}"),
        ScaleKind::GaussianScale { alpha } => format!("gauss{alpha}"),
    }
}

/// `n rho` at or above which the hierarchical sampler defaults to the
/// centered parametrization.
pub const CENTERED_MIN_PRECISION: f64 = 1e5;

impl PriorConfig {
    pub fn label(&self) -> String {
        match self {
            PriorConfig::Series { name: Some(n), .. } | PriorConfig::HierarchicalGaussian { name: Some(n), .. } => {
                n.clone()
            }
            PriorConfig::Series { scale, tail, .. } => format!("{}_{}", scale_label(*scale), tail_label(*tail)),
            PriorConfig::HierarchicalGaussian { .. } => "hier_gauss".into(),
        }
    }

    /// Prior on `k` coordinates (single layout).
    pub fn series_single(&self, k: usize) -> Option<PriorSpec> {
        match self {
            PriorConfig::Series { scale, tail, .. } => Some(PriorSpec::single(*scale, TailDensity::new(*tail), k)),
            _ => None,
        }
    }

    /// Prior on levels `coarse..=max_level` of a wavelet basis.
    pub fn series_wavelet(&self, max_level: usize, coarse: usize) -> Option<PriorSpec> {
        match self {
            PriorConfig::Series { scale, tail, .. } => {
                Some(PriorSpec::wavelet(*scale, TailDensity::new(*tail), max_level, coarse))
            }
            _ => None,
        }
    }

    pub fn hierarchical(&self, precision: f64) -> Option<HierarchicalGaussianSpec> {
        match *self {
            PriorConfig::HierarchicalGaussian {
                alpha,
                tau,
                parametrization,
                alpha_proposal_sd,
                tau_proposal_sd,
                ..
            } => Some(HierarchicalGaussianSpec {
                alpha,
                tau,
                parametrization: parametrization.unwrap_or(if precision >= CENTERED_MIN_PRECISION {
                    Parametrization::Centered
                } else {
                    Parametrization::Noncentered
                }),
                alpha_proposal_sd,
                tau_proposal_sd,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordMethod {
    /// Quadrature from `quadrature_min_n` on, MCMC below.
    #[default]
    Auto,
    Quadrature,
    Mcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FunctionAlgorithm {
    /// pCN (plain for Gaussian tails, whitened otherwise).
    #[default]
    Pcn,
    /// Whitened infinity-MALA.
    Mala,
}

fn default_quadrature_min_n() -> f64 {
    1e9
}

fn default_max_kept() -> usize {
    2000
}

fn default_credible_level() -> f64 {
    0.95
}

fn default_mcmc_sampler() -> McmcKind {
    McmcKind::Slice
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    /// Total iterations including burn-in; experiment default if unset.
    #[serde(default)]
    pub n_draws: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// Upper bound on stored draws; the chain is thinned to fit.
    #[serde(default = "default_max_kept")]
    pub max_kept: usize,
    #[serde(default)]
    pub method: CoordMethod,
    #[serde(default = "default_quadrature_min_n")]
    pub quadrature_min_n: f64,
    #[serde(default = "default_mcmc_sampler")]
    pub mcmc_sampler: McmcKind,
    #[serde(default)]
    pub algorithm: FunctionAlgorithm,
    /// Initial whitened-MALA step scale.
    #[serde(default)]
    pub step: Option<f64>,
    /// Initial pCN `beta`.
    #[serde(default)]
    pub pcn_beta: Option<f64>,
    #[serde(default = "default_credible_level")]
    pub credible_level: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            n_draws: None,
            burn_in: None,
            max_kept: default_max_kept(),
            method: CoordMethod::Auto,
            quadrature_min_n: default_quadrature_min_n(),
            mcmc_sampler: default_mcmc_sampler(),
            algorithm: FunctionAlgorithm::Pcn,
            step: None,
            pcn_beta: None,
            credible_level: default_credible_level(),
        }
    }
}

fn default_fig1_sigmas() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4, 1e-5]
}

fn default_fig1_tails() -> Vec<TailKind> {
    vec![TailKind::StudentT { nu: 3.0 }, TailKind::Gaussian]
}

fn default_x_max() -> f64 {
    0.006
}

fn default_points() -> usize {
    241
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig1Settings {
    #[serde(default = "default_fig1_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_fig1_tails")]
    pub tails: Vec<TailKind>,
    /// Observations run over `[-x_max, x_max]`.
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for Fig1Settings {
    fn default() -> Self {
        Self {
            sigmas: default_fig1_sigmas(),
            tails: default_fig1_tails(),
            x_max: default_x_max(),
            points: default_points(),
        }
    }
}

fn default_signals() -> Vec<Dj94Signal> {
    Dj94Signal::ALL.to_vec()
}

fn default_snr() -> f64 {
    7.0
}

fn default_dj94_level() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dj94Settings {
    #[serde(default = "default_signals")]
    pub signals: Vec<Dj94Signal>,
    #[serde(default = "default_snr")]
    pub target_snr: f64,
    /// Finest level `L`: `2^(L+1)` coefficients.
    #[serde(default = "default_dj94_level")]
    pub max_level: usize,
}

impl Default for Dj94Settings {
    fn default() -> Self {
        Self {
            signals: default_signals(),
            target_snr: default_snr(),
            max_level: default_dj94_level(),
        }
    }
}

fn default_seeds() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSweepSettings {
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

impl Default for RateSweepSettings {
    fn default() -> Self {
        Self { seeds: default_seeds() }
    }
}

fn default_d1_grid() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 1.0]
}

fn default_min_hits() -> usize {
    30
}

fn default_lower_bound() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorMassSettings {
    #[serde(default = "default_d1_grid")]
    pub d1_grid: Vec<f64>,
    #[serde(default = "default_min_hits")]
    pub min_hits: usize,
    /// Monte Carlo draws per ball; 20000 desk, 200000 paper scale if unset.
    #[serde(default)]
    pub n_mc: Option<usize>,
    /// Rate for `eps_n`; derived from the prior (beta = 1) if unset.
    #[serde(default)]
    pub rate: Option<RateSpec>,
    /// Reported bound on `log p_hat / (n eps_n^2)`.
    #[serde(default = "default_lower_bound")]
    pub lower_bound: f64,
}

impl Default for PriorMassSettings {
    fn default() -> Self {
        Self {
            d1_grid: default_d1_grid(),
            min_hits: default_min_hits(),
            n_mc: None,
            rate: None,
            lower_bound: default_lower_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Parent directory; artifacts go to `<output_dir>/<experiment>/`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Noise precision (white noise) or sample size (density, classification).
    #[serde(default)]
    pub n: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    /// `K` for sequence experiments, finest level `L` for wavelet ones.
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub forward: Option<ForwardKind>,
    #[serde(default)]
    pub wavelet: Option<WaveletName>,
    #[serde(default)]
    pub truth: Option<TruthSpec>,
    #[serde(default)]
    pub priors: Vec<PriorConfig>,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub fig1: Option<Fig1Settings>,
    #[serde(default)]
    pub dj94: Option<Dj94Settings>,
    #[serde(default)]
    pub rate_sweep: Option<RateSweepSettings>,
    #[serde(default)]
    pub prior_mass: Option<PriorMassSettings>,
}

/// Parse a TOML configuration; errors carry the dotted path of the field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        Error::config(if path == "." { "<document>".into() } else { path }, message.trim().to_string())
    })
}

/// Read, parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn truncation_or(&self, default: usize) -> usize {
        self.truncation.unwrap_or(default)
    }

    pub fn rho_values(&self) -> Vec<f64> {
        self.rho.clone().unwrap_or_else(|| vec![1.0])
    }

    pub fn n_values(&self) -> &[f64] {
        self.n.as_deref().unwrap_or(&[])
    }

    pub fn default_truncation(&self) -> usize {
        match self.experiment {
            Experiment::InverseRegression => 200,
            Experiment::DensityEstimation | Experiment::Classification => 10,
            Experiment::RateSweep => 1000,
            Experiment::PriorMass => 100,
            _ => 0,
        }
    }

    pub fn forward_kind(&self) -> ForwardKind {
        self.forward.unwrap_or(match self.experiment {
            Experiment::InverseRegression => ForwardKind::Volterra,
            _ => ForwardKind::Identity,
        })
    }

    pub fn wavelet_name(&self) -> WaveletName {
        self.wavelet.unwrap_or(if self.experiment.is_function_model() {
            WaveletName::Daubechies8
        } else {
            WaveletName::Symmlet8
        })
    }

    /// Check experiment-specific requirements; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment;
        let name = exp.name();
        if exp.needs_n() {
            let ns = self
                .n
                .as_ref()
                .ok_or_else(|| Error::config("n", format!("required for {name}")))?;
            if ns.is_empty() {
                return Err(Error::config("n", "must list at least one value"));
            }
            for (i, &v) in ns.iter().enumerate() {
                positive(&format!("n[{i}]"), v)?;
                if exp.is_function_model() && (v.fract() != 0.0 || v < 1.0) {
                    return Err(Error::config(format!("n[{i}]"), format!("sample size must be a positive integer, got {v}")));
                }
                if exp == Experiment::PriorMass && v < std::f64::consts::E {
                    return Err(Error::config(format!("n[{i}]"), "must be at least e"));
                }
            }
            let min_len = match exp {
                Experiment::RateSweep => 3,
                Experiment::PriorMass => 2,
                _ => 1,
            };
            if ns.len() < min_len {
                return Err(Error::config("n", format!("{name} needs at least {min_len} values")));
            }
            if exp == Experiment::Fig1PosteriorMeans && ns.len() != 1 {
                return Err(Error::config("n", "fig1_posterior_means takes exactly one value"));
            }
        }
        if let Some(rho) = &self.rho {
            if rho.is_empty() {
                return Err(Error::config("rho", "must list at least one value"));
            }
            for (i, &r) in rho.iter().enumerate() {
                if !(r > 0.0 && r <= 1.0) {
                    return Err(Error::config(format!("rho[{i}]"), format!("must lie in (0, 1], got {r}")));
                }
            }
        }
        if let Some(t) = self.truncation {
            if t == 0 {
                return Err(Error::config("truncation", "must be at least 1"));
            }
            if exp.is_function_model() && t + 1 > FINE_DEPTH {
                return Err(Error::config(
                    "truncation",
                    format!("finest level must be below {} for the fine grid", FINE_DEPTH - 1),
                ));
            }
        }
        if exp.needs_priors() && self.priors.is_empty() {
            return Err(Error::config("priors", format!("at least one prior is required for {name}")));
        }
        let mut labels = Vec::new();
        for (i, p) in self.priors.iter().enumerate() {
            let path = format!("priors[{i}]");
            let label = p.label();
            if label.is_empty() || label.contains(['/', '\\']) {
                return Err(Error::config(format!("{path}.name"), "must be a non-empty file-name-safe label"));
            }
            if labels.contains(&label) {
                return Err(Error::config(format!("{path}.name"), format!("duplicate prior label `{label}`")));
            }
            labels.push(label);
            match p {
                PriorConfig::Series { .. } => {
                    let spec = if exp.is_function_model() {
                        p.series_wavelet(self.truncation_or(self.default_truncation()), 0)
                    } else if exp == Experiment::Dj94Denoise {
                        p.series_wavelet(10, 5)
                    } else {
                        p.series_single(self.truncation_or(self.default_truncation()).max(1))
                    };
                    if let Some(spec) = spec {
                        spec.validate().map_err(|e| Error::config(path.clone(), e.to_string()))?;
                    }
                }
                PriorConfig::HierarchicalGaussian {
                    alpha,
                    tau,
                    alpha_proposal_sd,
                    tau_proposal_sd,
                    ..
                } => {
                    if !exp.allows_hierarchical() {
                        return Err(Error::config(
                            format!("{path}.family"),
                            format!("hierarchical_gaussian priors are only available for white-noise experiments, not {name}"),
                        ));
                    }
                    validate_hyper(&format!("{path}.alpha"), alpha)?;
                    validate_hyper(&format!("{path}.tau"), tau)?;
                    positive(&format!("{path}.alpha_proposal_sd"), *alpha_proposal_sd)?;
                    positive(&format!("{path}.tau_proposal_sd"), *tau_proposal_sd)?;
                }
            }
        }
        self.validate_sampler()?;
        self.validate_sections()
    }

    fn validate_sampler(&self) -> Result<()> {
        let s = &self.sampler;
        if let (Some(n), Some(b)) = (s.n_draws, s.burn_in) {
            if n <= b {
                return Err(Error::config("sampler.n_draws", "must exceed sampler.burn_in"));
            }
        }
        if s.n_draws == Some(0) {
            return Err(Error::config("sampler.n_draws", "must be positive"));
        }
        if s.max_kept == 0 {
            return Err(Error::config("sampler.max_kept", "must be at least 1"));
        }
        if !(s.credible_level > 0.0 && s.credible_level <= 1.0) {
            return Err(Error::config("sampler.credible_level", "must lie in (0, 1]"));
        }
        positive("sampler.quadrature_min_n", s.quadrature_min_n)?;
        if let Some(step) = s.step {
            positive("sampler.step", step)?;
        }
        if let Some(b) = s.pcn_beta {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::config("sampler.pcn_beta", format!("must lie in (0, 1], got {b}")));
            }
        }
        Ok(())
    }

    fn validate_sections(&self) -> Result<()> {
        if let Some(f) = &self.fig1 {
            if f.sigmas.is_empty() {
                return Err(Error::config("fig1.sigmas", "must list at least one value"));
            }
            for (i, &s) in f.sigmas.iter().enumerate() {
                positive(&format!("fig1.sigmas[{i}]"), s)?;
            }
            if f.tails.is_empty() {
                return Err(Error::config("fig1.tails", "must list at least one tail"));
            }
            for (i, t) in f.tails.iter().enumerate() {
                TailDensity::new(*t)
                    .validate()
                    .map_err(|e| Error::config(format!("fig1.tails[{i}]"), e.to_string()))?;
            }
            positive("fig1.x_max", f.x_max)?;
            if f.points < 2 {
                return Err(Error::config("fig1.points", "must be at least 2"));
            }
        }
        if let Some(d) = &self.dj94 {
            if d.signals.is_empty() {
                return Err(Error::config("dj94.signals", "must list at least one signal"));
            }
            positive("dj94.target_snr", d.target_snr)?;
            if d.max_level < 6 {
                return Err(Error::config("dj94.max_level", "must exceed the coarse level 5"));
            }
        }
        if let Some(r) = &self.rate_sweep {
            if r.seeds < 2 {
                return Err(Error::config("rate_sweep.seeds", "must be at least 2"));
            }
        }
        if let Some(m) = &self.prior_mass {
            if m.d1_grid.is_empty() {
                return Err(Error::config("prior_mass.d1_grid", "must list at least one value"));
            }
            for (i, &d) in m.d1_grid.iter().enumerate() {
                positive(&format!("prior_mass.d1_grid[{i}]"), d)?;
            }
            if let Some(n) = m.n_mc {
                if n < 1000 {
                    return Err(Error::config("prior_mass.n_mc", "must be at least 1000"));
                }
            }
            if let Some(r) = &m.rate {
                positive("prior_mass.rate.beta", r.beta)?;
                if !(r.kappa >= 0.0) {
                    return Err(Error::config("prior_mass.rate.kappa", "must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Rate used for prior-mass balls around a `beta = 1` truth.
    pub fn mass_rate(&self, prior: &PriorConfig) -> RateSpec {
        if let Some(r) = self.prior_mass.as_ref().and_then(|m| m.rate) {
            return r;
        }
        match prior {
            PriorConfig::Series {
                scale: ScaleKind::Ot { delta, .. },
                tail,
                ..
            } => RateSpec::new(RateFlavor::L2Ot, 1.0, tail_kappa(*tail), *delta),
            PriorConfig::Series { tail, .. } => RateSpec::new(RateFlavor::L2Ht, 1.0, tail_kappa(*tail), 0.0),
            PriorConfig::HierarchicalGaussian { .. } => RateSpec::new(RateFlavor::L2Ht, 1.0, 1.0, 0.0),
        }
    }
}

/// Exponent `kappa` of `log(1/h(x)) <~ (log x)^(1+kappa)`: 0 for polynomial
/// tails. Light tails have no such exponent; they get 1 as a placeholder.
pub fn tail_kappa(t: TailKind) -> f64 {
    match t {
        TailKind::StudentT { .. } | TailKind::Cauchy => 0.0,
        TailKind::Gaussian | TailKind::Laplace => 1.0,
    }
}

fn validate_hyper(path: &str, h: &HyperPrior) -> Result<()> {
    let ok = match *h {
        HyperPrior::Fixed { value } => value > 0.0 && value.is_finite(),
        HyperPrior::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        HyperPrior::InverseGamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, format!("invalid hyperprior {h:?}")))
    }
}
