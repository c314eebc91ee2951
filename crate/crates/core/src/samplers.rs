//! Function-space MCMC for non-product posteriors.
//!
//! Priors are handled in whitened coordinates: a field is `f = s * T(xi)`
//! with `xi` i.i.d. standard normal, `s` the prior scales and `T` the map
//! carrying `N(0, 1)` to the coordinate law. The samplers only ever see
//! `T`, its derivative and the scales, never the tail density itself.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::chain::ChainOutput;
use crate::error::{Error, Result};
use crate::field::FieldLayout;
use crate::priors::{PriorSpec, ScaleKind, TailDensity, TailKind};
use crate::rng::rng_from_seed;
use crate::sequence_models::SequenceObservation;
use crate::special::{norm_logpdf, norm_pdf, norm_quantile, norm_sf};

/// Log-likelihood of a coefficient vector.
pub trait LogLikelihood: Sync {
    fn value(&self, f: &[f64]) -> f64;

    /// Value and gradient with respect to the coefficients, when available.
    fn value_and_gradient(&self, _f: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }

    /// Diagonal curvature of the negative log-likelihood (e.g. `n kappa^2 rho`
    /// for white noise); preconditions the MALA step sizes.
    fn curvature(&self, dim: usize) -> Vec<f64> {
        vec![0.0; dim]
    }

    /// Coefficients to start a warm-started chain from.
    fn warm_start(&self) -> Option<Vec<f64>> {
        None
    }
}

/// The flat likelihood; chains then sample the prior.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroLikelihood;

impl LogLikelihood for ZeroLikelihood {
    fn value(&self, _f: &[f64]) -> f64 {
        0.0
    }

    fn value_and_gradient(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some((0.0, vec![0.0; f.len()]))
    }
}

/// `T(xi) = tan(pi (1 - 2 Phi(xi)) / 2) = cot(pi Phi(xi))`, the decreasing map
/// carrying `N(0, 1)` to the standard Cauchy law.
///
/// Evaluated through `Phi(-|xi|)` so both tails keep full relative accuracy;
/// beyond `|xi| ~ 38` the normal tail underflows and `T` saturates at about
/// `+-1.4e307`.
pub fn whiten_transform(xi: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    let p = norm_sf(xi.abs()).max(f64::MIN_POSITIVE);
    let v = 1.0 / (PI * p).tan();
    if xi <= 0.0 {
        v
    } else {
        -v
    }
}

/// Inverse of [`whiten_transform`].
pub fn whiten_inverse(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let p = (1.0 / t.abs()).atan() / PI;
    let v = norm_quantile(p);
    if t > 0.0 {
        v
    } else {
        -v
    }
}

/// `dT/dxi = -pi phi(xi) (1 + T(xi)^2)`.
pub fn whiten_derivative(xi: f64) -> f64 {
    let t = whiten_transform(xi);
    -PI * norm_pdf(xi) * (1.0 + t * t)
}

/// Whitening map for a coordinate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Whitening {
    /// `T(xi) = xi`: plain pCN on a Gaussian prior.
    Identity,
    /// `T(xi) = F^-1(Phi(-xi))` for the given tail (the closed form above for Cauchy).
    Tail { tail: TailDensity },
}

impl Whitening {
    pub fn for_tail(tail: TailDensity) -> Self {
        match tail.kind {
            TailKind::Gaussian => Whitening::Identity,
            _ => Whitening::Tail { tail },
        }
    }

    pub fn transform(&self, xi: f64) -> f64 {
        match self {
            Whitening::Identity => xi,
            Whitening::Tail { tail } => match tail.kind {
                TailKind::Cauchy => whiten_transform(xi),
                _ => {
                    // quantiles at small probabilities only
                    let p = norm_sf(xi.abs()).max(f64::MIN_POSITIVE);
                    let q = tail.quantile(p);
                    if xi >= 0.0 {
                        q
                    } else {
                        -q
                    }
                }
            },
        }
    }

    pub fn inverse(&self, t: f64) -> f64 {
        match self {
            Whitening::Identity => t,
            Whitening::Tail { tail } => match tail.kind {
                TailKind::Cauchy => whiten_inverse(t),
                _ => {
                    if t == 0.0 {
                        return 0.0;
                    }
                    let v = norm_quantile(tail.survival(t.abs()));
                    if t > 0.0 {
                        v
                    } else {
                        -v
                    }
                }
            },
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        match self {
            Whitening::Identity => 1.0,
            Whitening::Tail { tail } => match tail.kind {
                TailKind::Cauchy => whiten_derivative(xi),
                _ => -norm_pdf(xi) / tail.pdf(self.transform(xi)),
            },
        }
    }
}

/// Whitened-coordinate target: a log-likelihood, prior scales and a map `T`.
pub struct WhitenedTarget<'a, L: LogLikelihood + ?Sized> {
    pub loglik: &'a L,
    pub scales: &'a [f64],
    pub whitening: Whitening,
}

impl<'a, L: LogLikelihood + ?Sized> WhitenedTarget<'a, L> {
    pub fn new(loglik: &'a L, scales: &'a [f64], whitening: Whitening) -> Self {
        Self {
            loglik,
            scales,
            whitening,
        }
    }

    pub fn field(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .zip(self.scales)
            .map(|(x, s)| s * self.whitening.transform(*x))
            .collect()
    }

    /// Log-likelihood and its gradient in `xi`.
    pub fn value_and_gradient(&self, xi: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let f = self.field(xi);
        let (v, g) = self
            .loglik
            .value_and_gradient(&f)
            .ok_or_else(|| Error::config("sampler.algorithm", "this likelihood provides no gradient for MALA"))?;
        let gxi = g
            .iter()
            .zip(xi.iter().zip(self.scales))
            .map(|(gf, (x, s))| gf * s * self.whitening.derivative(*x))
            .collect();
        Ok((v, gxi, f))
    }

    /// MALA step sizes `scale / (1 + c_i (s_i T'(xi_i))^2)`.
    pub fn preconditioned_steps(&self, xi: &[f64], scale: f64) -> Vec<f64> {
        let c = self.loglik.curvature(xi.len());
        xi.iter()
            .zip(self.scales)
            .zip(c)
            .map(|((x, s), ci)| {
                let d = s * self.whitening.derivative(*x);
                scale / (1.0 + ci * d * d)
            })
            .collect()
    }
}

/// Chain state in whitened coordinates with its cached field.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedState {
    pub xi: Vec<f64>,
    pub f: Vec<f64>,
    pub loglik: f64,
    /// Gradient of the log-likelihood in `xi` (MALA only).
    pub grad: Option<Vec<f64>>,
    /// Proposals rejected because the log-likelihood was not finite.
    pub nonfinite: usize,
}

impl WhitenedState {
    pub fn new<L: LogLikelihood + ?Sized>(xi: Vec<f64>, target: &WhitenedTarget<'_, L>) -> Result<Self> {
        if xi.len() != target.scales.len() {
            return Err(Error::domain("state and scales differ in length"));
        }
        let f = target.field(&xi);
        let loglik = target.loglik.value(&f);
        if !loglik.is_finite() {
            return Err(Error::domain("log-likelihood is not finite at the initial state"));
        }
        Ok(Self {
            xi,
            f,
            loglik,
            grad: None,
            nonfinite: 0,
        })
    }

    fn ensure_grad<L: LogLikelihood + ?Sized>(&mut self, target: &WhitenedTarget<'_, L>) -> Result<()> {
        if self.grad.is_none() {
            let (v, g, _) = target.value_and_gradient(&self.xi)?;
            self.loglik = v;
            self.grad = Some(g);
        }
        Ok(())
    }
}

/// One pCN step: `xi' = sqrt(1 - beta^2) xi + beta eta`, accepted with
/// probability `min(1, exp(L(f') - L(f)))`.
pub fn pcn_step<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    state: &mut WhitenedState,
    target: &WhitenedTarget<'_, L>,
    beta: f64,
    rng: &mut R,
) -> Result<bool> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::domain(format!("pCN beta must lie in [0, 1], got {beta}")));
    }
    let c = (1.0 - beta * beta).sqrt();
    let prop: Vec<f64> = state
        .xi
        .iter()
        .map(|x| {
            let e: f64 = StandardNormal.sample(rng);
            c * x + beta * e
        })
        .collect();
    let f = target.field(&prop);
    let l = target.loglik.value(&f);
    let u: f64 = rng.random();
    if !l.is_finite() {
        state.nonfinite += 1;
        return Ok(false);
    }
    if u.ln() < l - state.loglik {
        state.xi = prop;
        state.f = f;
        state.loglik = l;
        state.grad = None;
        Ok(true)
    } else {
        Ok(false)
    }
}

fn mala_mean(xi: &[f64], g: &[f64], step: &[f64]) -> Vec<f64> {
    xi.iter()
        .zip(g)
        .zip(step)
        .map(|((x, gi), d)| ((2.0 - d) * x + 2.0 * d * gi) / (2.0 + d))
        .collect()
}

fn log_q(to: &[f64], mean: &[f64], step: &[f64]) -> f64 {
    to.iter()
        .zip(mean)
        .zip(step)
        .map(|((t, m), d)| {
            let sd = (8.0 * d).sqrt() / (2.0 + d);
            norm_logpdf((t - m) / sd) - sd.ln()
        })
        .sum()
}

/// One whitened infinity-MALA step (semi-implicit, theta = 1/2) with
/// per-coordinate step sizes and an exact Metropolis-Hastings correction.
///
/// Proposal: `xi' = ((2 - d) xi + 2 d grad L(xi) + sqrt(8 d) eta) / (2 + d)`.
/// With a flat likelihood this is a pCN move that leaves `N(0, I)` invariant.
pub fn whitened_mala_step<L: LogLikelihood + ?Sized, R: Rng + ?Sized>(
    state: &mut WhitenedState,
    target: &WhitenedTarget<'_, L>,
    step: &[f64],
    rng: &mut R,
) -> Result<bool> {
    if step.len() != state.xi.len() || step.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::domain("MALA steps must be positive, one per coordinate"));
    }
    state.ensure_grad(target)?;
    let g = state.grad.as_ref().expect("gradient cached");
    let mean_fwd = mala_mean(&state.xi, g, step);
    let prop: Vec<f64> = mean_fwd
        .iter()
        .zip(step)
        .map(|(m, d)| {
            let e: f64 = StandardNormal.sample(rng);
            m + (8.0 * d).sqrt() / (2.0 + d) * e
        })
        .collect();
    let u: f64 = rng.random();
    let (l2, g2, f2) = target.value_and_gradient(&prop)?;
    if !l2.is_finite() || g2.iter().any(|v| !v.is_finite()) {
        state.nonfinite += 1;
        return Ok(false);
    }
    let mean_bwd = mala_mean(&prop, &g2, step);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let log_a = l2 - 0.5 * sq(&prop) - state.loglik + 0.5 * sq(&state.xi) + log_q(&state.xi, &mean_bwd, step)
        - log_q(&prop, &mean_fwd, step);
    if u.ln() < log_a {
        state.xi = prop;
        state.f = f2;
        state.loglik = l2;
        state.grad = Some(g2);
        Ok(true)
    } else {
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    #[default]
    Centered,
    Noncentered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// pCN on a Gaussian prior.
    Pcn { beta: f64 },
    WhitenedPcn { beta: f64 },
    /// `step` is the initial global scale of the preconditioned step sizes.
    WhitenedMala { step: f64 },
    MwgGaussian {
        alpha_proposal_sd: f64,
        #[serde(default)]
        parametrization: Parametrization,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    #[default]
    PriorDraw,
    /// Warm start at the whitened likelihood's suggested coefficients.
    Data,
    /// Explicit whitened coordinates.
    Custom { xi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub n_draws: usize,
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: Init,
    /// Tune the step during burn-in (frozen afterwards).
    #[serde(default = "default_true")]
    pub adapt: bool,
}

fn default_thin() -> usize {
    1
}

fn default_true() -> bool {
    true
}

impl SamplerConfig {
    pub fn new(algorithm: Algorithm, n_draws: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            algorithm,
            n_draws,
            burn_in,
            thin: 1,
            seed,
            init: Init::PriorDraw,
            adapt: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_draws <= self.burn_in {
            return Err(Error::config("sampler.n_draws", "must exceed sampler.burn_in"));
        }
        if self.thin == 0 {
            return Err(Error::config("sampler.thin", "must be at least 1"));
        }
        match self.algorithm {
            Algorithm::Pcn { beta } | Algorithm::WhitenedPcn { beta } if !(0.0..=1.0).contains(&beta) => {
                Err(Error::config("sampler.algorithm.beta", format!("must lie in [0, 1], got {beta}")))
            }
            Algorithm::WhitenedMala { step } if !(step > 0.0 && step.is_finite()) => {
                Err(Error::config("sampler.algorithm.step", format!("must be positive, got {step}")))
            }
            Algorithm::MwgGaussian { alpha_proposal_sd, .. } if !(alpha_proposal_sd > 0.0) => Err(Error::config(
                "sampler.algorithm.alpha_proposal_sd",
                format!("must be positive, got {alpha_proposal_sd}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Acceptance targets for burn-in tuning.
pub const PCN_TARGET_ACCEPTANCE: f64 = 0.25;
pub const MALA_TARGET_ACCEPTANCE: f64 = 0.574;
const ADAPT_EVERY: usize = 100;

/// Run a pCN, whitened pCN or whitened MALA chain for `prior` and `loglik`.
pub fn run_sampler<L: LogLikelihood + ?Sized>(loglik: &L, prior: &PriorSpec, config: &SamplerConfig) -> Result<ChainOutput> {
    config.validate()?;
    prior.validate()?;
    let whitening = match config.algorithm {
        Algorithm::Pcn { .. } => {
            if prior.tail.kind != TailKind::Gaussian {
                return Err(Error::config(
                    "sampler.algorithm",
                    "plain pCN needs a Gaussian prior; use whitened_pcn for other tails",
                ));
            }
            Whitening::Identity
        }
        Algorithm::WhitenedPcn { .. } | Algorithm::WhitenedMala { .. } => Whitening::for_tail(prior.tail),
        Algorithm::MwgGaussian { .. } => {
            return Err(Error::config(
                "sampler.algorithm",
                "Metropolis-within-Gibbs runs through mwg_hierarchical_gaussian",
            ))
        }
    };
    let scales = prior.scales();
    let target = WhitenedTarget::new(loglik, &scales, whitening);
    let mut rng = rng_from_seed(config.seed);
    let dim = scales.len();
    let xi0: Vec<f64> = match &config.init {
        Init::PriorDraw => (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
        Init::Data => {
            let f = loglik
                .warm_start()
                .ok_or_else(|| Error::config("sampler.init", "this likelihood offers no warm start"))?;
            if f.len() != dim {
                return Err(Error::config("sampler.init", "warm start length does not match the prior"));
            }
            f.iter()
                .zip(&scales)
                .map(|(v, s)| whitening.inverse(v / s).clamp(-8.0, 8.0))
                .collect()
        }
        Init::Custom { xi } => {
            if xi.len() != dim {
                return Err(Error::config("sampler.init.xi", "length does not match the prior"));
            }
            xi.clone()
        }
    };
    let mut state = WhitenedState::new(xi0, &target)?;
    let mut out = ChainOutput::new(dim, config.seed, config.burn_in);
    out.thin = config.thin;
    out.config = serde_json::to_value(config).ok();
    let mut sum = vec![0.0; dim];
    let (mut win_acc, mut win_tot, mut post_acc) = (0usize, 0usize, 0usize);

    let mut beta = match config.algorithm {
        Algorithm::Pcn { beta } | Algorithm::WhitenedPcn { beta } => beta,
        _ => 0.0,
    };
    let mut scale = match config.algorithm {
        Algorithm::WhitenedMala { step } => step,
        _ => 0.0,
    };
    let is_mala = matches!(config.algorithm, Algorithm::WhitenedMala { .. });
    let mut steps = if is_mala {
        target.preconditioned_steps(&state.xi, scale)
    } else {
        Vec::new()
    };

    for it in 0..config.n_draws {
        let accepted = if is_mala {
            whitened_mala_step(&mut state, &target, &steps, &mut rng)?
        } else {
            pcn_step(&mut state, &target, beta, &mut rng)?
        };
        out.proposed += 1;
        win_tot += 1;
        if accepted {
            out.accepted += 1;
            win_acc += 1;
            if it >= config.burn_in {
                post_acc += 1;
            }
        }
        if it < config.burn_in && config.adapt && (it + 1) % ADAPT_EVERY == 0 {
            let r = win_acc as f64 / win_tot as f64;
            if is_mala {
                scale *= (r - MALA_TARGET_ACCEPTANCE).exp();
                steps = target.preconditioned_steps(&state.xi, scale);
            } else if beta > 0.0 {
                beta = (beta * (r - PCN_TARGET_ACCEPTANCE).exp()).clamp(1e-4, 1.0);
            }
            win_acc = 0;
            win_tot = 0;
        }
        if it >= config.burn_in {
            for (a, b) in sum.iter_mut().zip(&state.f) {
                *a += b;
            }
            if (it - config.burn_in).is_multiple_of(config.thin) {
                out.push(&state.f);
                out.log_posterior.push(state.loglik);
            }
        }
    }
    let kept = (config.n_draws - config.burn_in) as f64;
    out.full_mean = Some(sum.iter().map(|s| s / kept).collect());
    out.post_burn_in_acceptance = Some(post_acc as f64 / kept);
    out.step_size = Some(if is_mala { scale } else { beta });
    out.blocks.insert("f".into(), (out.accepted, out.proposed));
    if state.nonfinite > 0 {
        out.blocks.insert("f_nonfinite".into(), (state.nonfinite, out.proposed));
    }
    Ok(out)
}

/// Hyperprior for a positive hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HyperPrior {
    Fixed { value: f64 },
    Exponential { rate: f64 },
    InverseGamma { shape: f64, scale: f64 },
}

impl HyperPrior {
    fn log_density(&self, v: f64) -> f64 {
        if !(v > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            HyperPrior::Fixed { .. } => 0.0,
            HyperPrior::Exponential { rate } => rate.ln() - rate * v,
            HyperPrior::InverseGamma { shape, scale } => {
                shape * scale.ln() - statrs::function::gamma::ln_gamma(shape) - (shape + 1.0) * v.ln() - scale / v
            }
        }
    }

    fn initial(&self) -> f64 {
        match *self {
            HyperPrior::Fixed { value } => value,
            HyperPrior::Exponential { rate } => 1.0 / rate,
            HyperPrior::InverseGamma { shape, scale } => {
                if shape > 1.0 {
                    scale / (shape - 1.0)
                } else {
                    scale / shape
                }
            }
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        let ok = match *self {
            HyperPrior::Fixed { value } => value > 0.0 && value.is_finite(),
            HyperPrior::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            HyperPrior::InverseGamma { shape, scale } => shape > 0.0 && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(path, format!("invalid hyperprior {self:?}")))
        }
    }
}

/// Hierarchical Gaussian prior `f_k ~ N(0, tau b_k(alpha)^2)` with
/// `b_k = k^(-1/2-alpha)` (or `2^(-l(1/2+alpha))` on wavelet levels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalGaussianSpec {
    pub alpha: HyperPrior,
    pub tau: HyperPrior,
    #[serde(default)]
    pub parametrization: Parametrization,
    pub alpha_proposal_sd: f64,
    #[serde(default = "default_tau_sd")]
    pub tau_proposal_sd: f64,
}

fn default_tau_sd() -> f64 {
    0.3
}

impl HierarchicalGaussianSpec {
    /// `alpha ~ Exp(1)`, `tau ~ InvGamma(1, 1)`.
    pub fn standard(parametrization: Parametrization) -> Self {
        Self {
            alpha: HyperPrior::Exponential { rate: 1.0 },
            tau: HyperPrior::InverseGamma { shape: 1.0, scale: 1.0 },
            parametrization,
            alpha_proposal_sd: 0.3,
            tau_proposal_sd: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwgConfig {
    pub spec: HierarchicalGaussianSpec,
    pub n_draws: usize,
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
    /// When false the data are ignored and the chain samples the prior.
    #[serde(default = "default_true")]
    pub use_likelihood: bool,
}

fn base_scales(layout: FieldLayout, len: usize, alpha: f64) -> Vec<f64> {
    let prior = match layout {
        FieldLayout::Single => PriorSpec::single(ScaleKind::GaussianScale { alpha }, TailDensity::gaussian(), len),
        FieldLayout::Wavelet { coarse_level } => PriorSpec::wavelet(
            ScaleKind::GaussianScale { alpha },
            TailDensity::gaussian(),
            len.trailing_zeros() as usize - 1,
            coarse_level,
        ),
    };
    prior.scales()
}

/// Conjugate moments of `f_k | X` under `f_k ~ N(0, sigma_k^2)`:
/// variance `1 / (n kappa_k^2 + 1 / sigma_k^2)`, mean `variance * n kappa_k X_k`.
pub fn gaussian_block_moments(obs: &SequenceObservation, sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut m = Vec::with_capacity(sigma.len());
    let mut v = Vec::with_capacity(sigma.len());
    for (i, s) in sigma.iter().enumerate() {
        let k = obs.kappa(i);
        let var = 1.0 / (obs.n * k * k + 1.0 / (s * s));
        v.push(var);
        m.push(var * obs.n * k * obs.x[i]);
    }
    (m, v)
}

fn gauss_loglik_sum(obs: &SequenceObservation, f: &[f64]) -> f64 {
    f.iter()
        .enumerate()
        .map(|(i, fi)| -0.5 * obs.n * (obs.x[i] - obs.kappa(i) * fi).powi(2))
        .sum()
}

/// Metropolis-within-Gibbs for the hierarchical Gaussian prior: an exact
/// conjugate draw of the field, then random-walk Metropolis on `log alpha`
/// and `log tau`. Traces `alpha` and `tau` are recorded in `hyper`.
pub fn mwg_hierarchical_gaussian(obs: &SequenceObservation, config: &MwgConfig) -> Result<ChainOutput> {
    obs.validate()?;
    let spec = &config.spec;
    spec.alpha.validate("prior.alpha")?;
    spec.tau.validate("prior.tau")?;
    if config.n_draws <= config.burn_in {
        return Err(Error::config("sampler.n_draws", "must exceed sampler.burn_in"));
    }
    if config.thin == 0 {
        return Err(Error::config("sampler.thin", "must be at least 1"));
    }
    if !(spec.alpha_proposal_sd > 0.0 && spec.tau_proposal_sd > 0.0) {
        return Err(Error::config("sampler.alpha_proposal_sd", "proposal sds must be positive"));
    }
    let dim = obs.len();
    let mut rng = rng_from_seed(config.seed);
    let mut alpha = spec.alpha.initial();
    let mut tau = spec.tau.initial();
    let mut base = base_scales(obs.layout, dim, alpha);
    let scales_of = |base: &[f64], tau: f64| -> Vec<f64> { base.iter().map(|b| b * tau.sqrt()).collect() };
    let mut sigma = scales_of(&base, tau);

    // field in the active parametrization: f (centered) or xi (noncentered)
    let mut state: Vec<f64> = vec![0.0; dim];
    let centered = spec.parametrization == Parametrization::Centered;
    let use_lik = config.use_likelihood;

    let log_prior_f = |f: &[f64], sigma: &[f64]| -> f64 {
        f.iter()
            .zip(sigma)
            .map(|(v, s)| norm_logpdf(v / s) - s.ln())
            .sum()
    };
    let field_of = |state: &[f64], sigma: &[f64]| -> Vec<f64> {
        if centered {
            state.to_vec()
        } else {
            state.iter().zip(sigma).map(|(x, s)| x * s).collect()
        }
    };

    let mut out = ChainOutput::new(dim, config.seed, config.burn_in);
    out.thin = config.thin;
    out.config = serde_json::to_value(config).ok();
    let mut sum = vec![0.0; dim];
    let mut acc = BTreeMap::from([("alpha".to_string(), (0usize, 0usize)), ("tau".to_string(), (0, 0))]);
    let mut alpha_trace = Vec::new();
    let mut tau_trace = Vec::new();

    for it in 0..config.n_draws {
        // field block
        if centered {
            if use_lik {
                let (m, v) = gaussian_block_moments(obs, &sigma);
                for i in 0..dim {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    state[i] = m[i] + v[i].sqrt() * e;
                }
            } else {
                for i in 0..dim {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    state[i] = sigma[i] * e;
                }
            }
        } else {
            for i in 0..dim {
                let e: f64 = StandardNormal.sample(&mut rng);
                state[i] = if use_lik {
                    let a = obs.kappa(i) * sigma[i];
                    let var = 1.0 / (obs.n * a * a + 1.0);
                    var * obs.n * a * obs.x[i] + var.sqrt() * e
                } else {
                    e
                };
            }
        }

        // hyperparameter blocks
        for name in ["alpha", "tau"] {
            let hp = if name == "alpha" { spec.alpha } else { spec.tau };
            if matches!(hp, HyperPrior::Fixed { .. }) {
                continue;
            }
            let sd = if name == "alpha" {
                spec.alpha_proposal_sd
            } else {
                spec.tau_proposal_sd
            };
            let cur = if name == "alpha" { alpha } else { tau };
            let z: f64 = StandardNormal.sample(&mut rng);
            let prop = cur * (sd * z).exp();
            let (new_base, new_sigma) = if name == "alpha" {
                let b = base_scales(obs.layout, dim, prop);
                let s = scales_of(&b, tau);
                (b, s)
            } else {
                (base.clone(), scales_of(&base, prop))
            };
            let log_target = |sig: &[f64], v: f64| -> f64 {
                let data_term = if centered {
                    log_prior_f(&state, sig)
                } else if use_lik {
                    gauss_loglik_sum(obs, &field_of(&state, sig))
                } else {
                    0.0
                };
                // log-scale random walk: Jacobian v
                data_term + hp.log_density(v) + v.ln()
            };
            let log_a = log_target(&new_sigma, prop) - log_target(&sigma, cur);
            let u: f64 = rng.random();
            let entry = acc.get_mut(name).expect("block registered");
            entry.1 += 1;
            if u.ln() < log_a {
                entry.0 += 1;
                if name == "alpha" {
                    alpha = prop;
                    base = new_base;
                } else {
                    tau = prop;
                }
                sigma = new_sigma;
            }
        }

        if it >= config.burn_in {
            let f = field_of(&state, &sigma);
            for (a, b) in sum.iter_mut().zip(&f) {
                *a += b;
            }
            if (it - config.burn_in).is_multiple_of(config.thin) {
                out.log_posterior.push(gauss_loglik_sum(obs, &f));
                out.push(&f);
                alpha_trace.push(alpha);
                tau_trace.push(tau);
            }
        }
    }
    let kept = (config.n_draws - config.burn_in) as f64;
    out.full_mean = Some(sum.iter().map(|s| s / kept).collect());
    out.accepted = acc.values().map(|v| v.0).sum();
    out.proposed = acc.values().map(|v| v.1).sum();
    out.blocks = acc;
    out.hyper.insert("alpha".into(), alpha_trace);
    out.hyper.insert("tau".into(), tau_trace);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionNorm {
    L1,
    L2,
    Linf,
}

impl RegionNorm {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            RegionNorm::L1 => d.sum::<f64>() / a.len().max(1) as f64,
            RegionNorm::L2 => (d.map(|v| v * v).sum::<f64>() / a.len().max(1) as f64).sqrt(),
            RegionNorm::Linf => d.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleRegion {
    pub mean: Vec<f64>,
    /// Indices of the retained draws, closest first.
    pub retained: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Keep the `ceil(level N)` draws closest to the sample mean in `norm`
/// and report their pointwise envelope.
pub fn credible_region(draws: &[Vec<f64>], level: f64, norm: RegionNorm) -> Result<CredibleRegion> {
    if draws.is_empty() {
        return Err(Error::domain("credible region needs at least one draw"));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::domain(format!("credible level must lie in (0, 1], got {level}")));
    }
    let dim = draws[0].len();
    if draws.iter().any(|d| d.len() != dim) {
        return Err(Error::domain("draws differ in length"));
    }
    let n = draws.len();
    let mut mean = vec![0.0; dim];
    for d in draws {
        for (m, v) in mean.iter_mut().zip(d) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut order: Vec<(f64, usize)> = draws
        .iter()
        .enumerate()
        .map(|(i, d)| (norm.distance(d, &mean), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let keep = ((level * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let retained: Vec<usize> = order[..keep.min(n)].iter().map(|p| p.1).collect();
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for &i in &retained {
        for j in 0..dim {
            lower[j] = lower[j].min(draws[i][j]);
            upper[j] = upper[j].max(draws[i][j]);
        }
    }
    Ok(CredibleRegion {
        mean,
        retained,
        lower,
        upper,
    })
}

/// Draws of a chain as separate vectors.
pub fn chain_draws(chain: &ChainOutput) -> Vec<Vec<f64>> {
    chain.iter().map(|d| d.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_statistic, mean, variance};

    #[test]
    fn transform_examples() {
        assert_eq!(whiten_transform(0.0), 0.0);
        assert_close!(whiten_transform(norm_quantile(0.25)), 1.0, 1e-12);
        for xi in [-6.0, -2.5, -0.3, 0.0, 0.1, 1.7, 6.0] {
            assert_close!(whiten_inverse(whiten_transform(xi)), xi, 1e-10);
        }
        // monotone and finite far out
        assert!(whiten_transform(40.0).is_finite() && whiten_transform(-40.0).is_finite());
        assert!(whiten_transform(1.0) < whiten_transform(0.5));
        let h = 1e-6;
        for xi in [-2.0, 0.3, 1.5] {
            let fd = (whiten_transform(xi + h) - whiten_transform(xi - h)) / (2.0 * h);
            assert_close!(whiten_derivative(xi) / fd, 1.0, 1e-7);
        }
    }

    #[test]
    fn transform_pushforward_is_cauchy() {
        let mut rng = rng_from_seed(2024);
        let mut t: Vec<f64> = (0..100_000)
            .map(|_| whiten_transform(StandardNormal.sample(&mut rng)))
            .collect();
        let c = TailDensity::cauchy();
        let d = ks_statistic(&mut t, |x| c.cdf(x));
        assert!(d < 0.01, "KS {d}");
    }

    #[test]
    fn general_tail_whitening() {
        for tail in [TailDensity::student_t(3.0), TailDensity::laplace(), TailDensity::cauchy()] {
            let w = Whitening::for_tail(tail);
            for xi in [-4.0, -1.0, 0.0, 0.7, 3.0] {
                assert_close!(w.inverse(w.transform(xi)), xi, 1e-8);
                let h = 1e-6;
                let fd = (w.transform(xi + h) - w.transform(xi - h)) / (2.0 * h);
                assert!((w.derivative(xi) / fd - 1.0).abs() < 1e-6, "{tail:?} {xi}: {}", w.derivative(xi) / fd);
            }
            let mut rng = rng_from_seed(5);
            let mut t: Vec<f64> = (0..50_000).map(|_| w.transform(StandardNormal.sample(&mut rng))).collect();
            assert!(ks_statistic(&mut t, |x| tail.cdf(x)) < 0.01);
        }
    }

    struct WhiteNoise {
        x: Vec<f64>,
        n: f64,
    }

    impl LogLikelihood for WhiteNoise {
        fn value(&self, f: &[f64]) -> f64 {
            f.iter().zip(&self.x).map(|(a, b)| -0.5 * self.n * (a - b).powi(2)).sum()
        }
        fn value_and_gradient(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
            Some((self.value(f), f.iter().zip(&self.x).map(|(a, b)| self.n * (b - a)).collect()))
        }
        fn curvature(&self, dim: usize) -> Vec<f64> {
            vec![self.n; dim]
        }
        fn warm_start(&self) -> Option<Vec<f64>> {
            Some(self.x.clone())
        }
    }

    #[test]
    fn whitened_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(1);
        let ll = WhiteNoise {
            x: (0..8).map(|_| rng.random::<f64>() - 0.5).collect(),
            n: 30.0,
        };
        let scales: Vec<f64> = (1..=8).map(|k| (k as f64).powf(-1.2)).collect();
        let target = WhitenedTarget::new(&ll, &scales, Whitening::for_tail(TailDensity::cauchy()));
        for _ in 0..20 {
            let xi: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (_, g, _) = target.value_and_gradient(&xi).unwrap();
            for j in 0..8 {
                let h = 1e-6 * xi[j].abs().max(1.0);
                let mut a = xi.clone();
                let mut b = xi.clone();
                a[j] += h;
                b[j] -= h;
                // the likelihood is separable: difference the j-th term only
                // so the other terms do not swamp the quotient in rounding
                let term = |xi: &[f64]| -0.5 * ll.n * (ll.x[j] - target.field(xi)[j]).powi(2);
                let fd = (term(&a) - term(&b)) / (2.0 * h);
                assert!((g[j] - fd).abs() <= 1e-6 * g[j].abs().max(1e-3), "{j}: {} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn pcn_limits() {
        let scales = vec![1.0; 3];
        let target = WhitenedTarget::new(&ZeroLikelihood, &scales, Whitening::for_tail(TailDensity::cauchy()));
        let mut s = WhitenedState::new(vec![0.3, -1.0, 2.0], &target).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..10 {
            assert!(pcn_step(&mut s, &target, 0.0, &mut rng).unwrap());
        }
        assert_eq!(s.xi, vec![0.3, -1.0, 2.0]);
        // beta = 1 proposes an independent draw, which the flat likelihood accepts
        assert!(pcn_step(&mut s, &target, 1.0, &mut rng).unwrap());
        assert_ne!(s.xi, vec![0.3, -1.0, 2.0]);
        assert!(pcn_step(&mut s, &target, 1.5, &mut rng).is_err());
    }

    #[test]
    fn nonfinite_proposals_are_rejected() {
        struct Wall;
        impl LogLikelihood for Wall {
            fn value(&self, f: &[f64]) -> f64 {
                if f[0] > 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        }
        let scales = vec![1.0];
        let target = WhitenedTarget::new(&Wall, &scales, Whitening::Identity);
        let mut s = WhitenedState::new(vec![-1.0], &target).unwrap();
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            pcn_step(&mut s, &target, 0.9, &mut rng).unwrap();
            assert!(s.f[0] <= 0.0);
        }
        assert!(s.nonfinite > 0);
    }

    fn quartile_check(chain: &ChainOutput, scales: &[f64], tail: TailDensity) {
        for j in 0..chain.dim {
            let mut c = chain.coordinate(j);
            c.sort_by(|a, b| a.total_cmp(b));
            for p in [0.25, 0.5, 0.75] {
                let emp = crate::stats::sorted_quantile(&c, p);
                let want = scales[j] * tail.quantile(p);
                // MC s.e. of an empirical quantile: sqrt(p(1-p)/N)/density,
                // inflated for autocorrelation through the effective size
                let dens = tail.pdf(want / scales[j]) / scales[j];
                let n_eff = c.len() as f64 / 10.0;
                let se = (p * (1.0 - p) / n_eff).sqrt() / dens;
                assert!((emp - want).abs() < 3.0 * se, "coord {j} p {p}: {emp} vs {want} (se {se})");
            }
        }
    }

    #[test]
    fn whitened_pcn_prior_invariance() {
        let prior = PriorSpec::single(ScaleKind::ot_default(), TailDensity::cauchy(), 4);
        let cfg = SamplerConfig {
            adapt: false,
            ..SamplerConfig::new(Algorithm::WhitenedPcn { beta: 0.5 }, 100_000, 0, 8)
        };
        let chain = run_sampler(&ZeroLikelihood, &prior, &cfg).unwrap();
        assert_eq!(chain.acceptance_rate(), 1.0);
        quartile_check(&chain, &prior.scales(), TailDensity::cauchy());
        assert_eq!(chain, run_sampler(&ZeroLikelihood, &prior, &cfg).unwrap());
    }

    #[test]
    fn mala_prior_invariance_and_small_steps() {
        let prior = PriorSpec::single(ScaleKind::ot_default(), TailDensity::cauchy(), 3);
        let cfg = SamplerConfig {
            adapt: false,
            ..SamplerConfig::new(Algorithm::WhitenedMala { step: 0.5 }, 60_000, 0, 9)
        };
        let chain = run_sampler(&ZeroLikelihood, &prior, &cfg).unwrap();
        assert!(chain.acceptance_rate() > 0.999);
        quartile_check(&chain, &prior.scales(), TailDensity::cauchy());

        let ll = WhiteNoise {
            x: vec![0.4, -0.2, 0.05],
            n: 100.0,
        };
        let cfg = SamplerConfig {
            adapt: false,
            init: Init::Data,
            ..SamplerConfig::new(Algorithm::WhitenedMala { step: 1e-4 }, 5_000, 0, 9)
        };
        let chain = run_sampler(&ll, &prior, &cfg).unwrap();
        assert!(chain.acceptance_rate() > 0.99, "{}", chain.acceptance_rate());
    }

    #[test]
    fn adapted_mala_hits_target_and_posterior() {
        // product posterior: compare with coordinatewise quadrature means
        let prior = PriorSpec::single(ScaleKind::ot_default(), TailDensity::cauchy(), 5);
        let ll = WhiteNoise {
            x: vec![1.1, -0.4, 0.3, 0.02, -0.05],
            n: 25.0,
        };
        let cfg = SamplerConfig {
            init: Init::Data,
            ..SamplerConfig::new(Algorithm::WhitenedMala { step: 0.5 }, 60_000, 10_000, 21)
        };
        let chain = run_sampler(&ll, &prior, &cfg).unwrap();
        let acc = chain.post_burn_in_acceptance.unwrap();
        assert!(acc > 0.3 && acc < 0.85, "{acc}");
        let m = chain.mean().unwrap();
        for (j, s) in prior.scales().iter().enumerate() {
            let p = crate::coordinate_posterior::CoordProblem::direct(ll.x[j], 25.0, *s, TailDensity::cauchy());
            let q = crate::coordinate_posterior::coord_summary_quadrature(&p).unwrap();
            let tr = chain.coordinate(j);
            let se = crate::stats::batch_means_se(&tr);
            assert!((m[j] - q.mean).abs() < 4.0 * se + 1e-3 * q.sd(), "{j}: {} vs {}", m[j], q.mean);
        }
    }

    #[test]
    fn detailed_balance_histogram() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let prior = PriorSpec::single(ScaleKind::Ht { alpha: 0.5 }, TailDensity::cauchy(), 2);
        let ll = WhiteNoise {
            x: vec![0.5, -0.2],
            n: 4.0,
        };
        let cfg = SamplerConfig {
            adapt: false,
            thin: 50,
            ..SamplerConfig::new(Algorithm::WhitenedPcn { beta: 0.8 }, 1_000_000, 1_000, 77)
        };
        let chain = run_sampler(&ll, &prior, &cfg).unwrap();
        let p = crate::coordinate_posterior::CoordProblem::direct(0.5, 4.0, prior.scales()[0], TailDensity::cauchy());
        let levels: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let q = crate::coordinate_posterior::coord_summary_quadrature_with(&p, &levels, &Default::default()).unwrap();
        let edges: Vec<f64> = q.quantiles.iter().map(|x| x.1).collect();
        let mut counts = [0usize; 20];
        for v in chain.coordinate(0) {
            counts[edges.partition_point(|e| *e < v)] += 1;
        }
        let n = chain.n_kept() as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - n / 20.0).powi(2) / (n / 20.0)).sum();
        let pval = 1.0 - ChiSquared::new(19.0).unwrap().cdf(chi2);
        assert!(pval > 0.01, "chi2 {chi2} p {pval}");
    }

    fn obs(x: Vec<f64>, n: f64) -> SequenceObservation {
        SequenceObservation {
            x,
            n,
            forward: None,
            layout: FieldLayout::Single,
            seed: None,
        }
    }

    #[test]
    fn mwg_fixed_hyperparameters_is_conjugate() {
        let o = obs(vec![0.3, -1.0, 0.2, 0.05], 50.0);
        let sigma = base_scales(FieldLayout::Single, 4, 1.5);
        let (m, v) = gaussian_block_moments(&o, &sigma);
        for i in 0..4 {
            let s2 = sigma[i] * sigma[i];
            assert_close!(m[i], 50.0 * s2 * o.x[i] / (1.0 + 50.0 * s2), 1e-12);
            assert_close!(v[i], s2 / (1.0 + 50.0 * s2), 1e-12);
        }
        let cfg = MwgConfig {
            spec: HierarchicalGaussianSpec {
                alpha: HyperPrior::Fixed { value: 1.5 },
                tau: HyperPrior::Fixed { value: 1.0 },
                ..HierarchicalGaussianSpec::standard(Parametrization::Centered)
            },
            n_draws: 40_000,
            burn_in: 0,
            thin: 1,
            seed: 6,
            use_likelihood: true,
        };
        let chain = mwg_hierarchical_gaussian(&o, &cfg).unwrap();
        let cm = chain.mean().unwrap();
        for i in 0..4 {
            // independent exact draws: s.e. sqrt(v / N)
            assert!((cm[i] - m[i]).abs() < 3.0 * (v[i] / 40_000.0).sqrt());
            assert_close!(variance(&chain.coordinate(i)) / v[i], 1.0, 0.05);
        }
        assert_eq!(chain, mwg_hierarchical_gaussian(&o, &cfg).unwrap());
    }

    #[test]
    fn mwg_recovers_alpha_prior_without_likelihood() {
        // the centered alpha-chain mixes slowly once many coefficients pin
        // alpha down, so it is checked on a short field
        for (param, dim) in [(Parametrization::Centered, 3), (Parametrization::Noncentered, 20)] {
            let o = obs(vec![0.0; dim], 1.0);
            let cfg = MwgConfig {
                spec: HierarchicalGaussianSpec {
                    tau: HyperPrior::Fixed { value: 1.0 },
                    alpha_proposal_sd: 1.0,
                    ..HierarchicalGaussianSpec::standard(param)
                },
                n_draws: 300_000,
                burn_in: 1_000,
                thin: 1,
                seed: 12,
                use_likelihood: false,
            };
            let chain = mwg_hierarchical_gaussian(&o, &cfg).unwrap();
            let a = &chain.hyper["alpha"];
            let se = crate::stats::batch_means_se(a);
            let m = mean(a);
            assert!((m - 1.0).abs() < 3.0 * se, "{param:?}: mean {m} se {se}");
            // variance of Exp(1) is 1; s.e. from batch means of (a - 1)^2
            let sq: Vec<f64> = a.iter().map(|v| (v - m).powi(2)).collect();
            let se_v = crate::stats::batch_means_se(&sq);
            assert!((mean(&sq) - 1.0).abs() < 3.0 * se_v, "{param:?}: var {} se {se_v}", mean(&sq));
        }
    }

    #[test]
    fn mwg_rejects_bad_config() {
        let o = obs(vec![0.0; 3], 1.0);
        let mut cfg = MwgConfig {
            spec: HierarchicalGaussianSpec::standard(Parametrization::Centered),
            n_draws: 10,
            burn_in: 10,
            thin: 1,
            seed: 0,
            use_likelihood: true,
        };
        assert!(matches!(mwg_hierarchical_gaussian(&o, &cfg), Err(Error::Config { .. })));
        cfg.burn_in = 0;
        cfg.spec.alpha = HyperPrior::Exponential { rate: -1.0 };
        assert!(matches!(mwg_hierarchical_gaussian(&o, &cfg), Err(Error::Config { .. })));
        let prior = PriorSpec::single(ScaleKind::ot_default(), TailDensity::cauchy(), 3);
        let c = SamplerConfig::new(Algorithm::Pcn { beta: 0.5 }, 10, 0, 0);
        assert!(matches!(run_sampler(&ZeroLikelihood, &prior, &c), Err(Error::Config { .. })));
    }

    #[test]
    fn credible_region_examples() {
        let one = vec![vec![1.0, 2.0]];
        let r = credible_region(&one, 0.95, RegionNorm::L2).unwrap();
        assert_eq!(r.retained, vec![0]);
        assert_eq!(r.lower, r.upper);

        // four draws at distances 1, 2, 3, 4 from their mean (0)
        let d = vec![vec![-1.0], vec![2.0], vec![3.0], vec![-4.0]];
        let r = credible_region(&d, 0.75, RegionNorm::L2).unwrap();
        assert_eq!(r.mean, vec![0.0]);
        assert_eq!(r.retained, vec![0, 1, 2]);
        assert_eq!((r.lower[0], r.upper[0]), (-1.0, 3.0));
        let all = credible_region(&d, 1.0, RegionNorm::Linf).unwrap();
        assert_eq!(all.retained.len(), 4);
        assert!(credible_region(&[], 0.9, RegionNorm::L1).is_err());
    }
}
