//! One-dimensional posteriors of a Gaussian sequence model coordinate.
//!
//! For a coordinate with observation `x`, precision `n`, forward multiplier
//! `kappa`, prior `theta ~ sigma * h` and temperature `rho`, the tempered
//! posterior density is proportional to
//! `phi(sqrt(n) (x - kappa theta))^rho h(theta / sigma) / sigma`.
//! Products of such coordinates give the full sequence-model posterior.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainOutput;
use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};
use crate::priors::{PriorSpec, TailDensity};
use crate::quadrature::{integrate_segments, locate_mass, real_line, QuadOptions, Segment};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sequence_models::SequenceObservation;
use crate::special::norm_logpdf;
use crate::stats::{mean, sorted_quantile, variance};

/// Default quantile levels reported in summaries.
pub const DEFAULT_LEVELS: [f64; 3] = [0.025, 0.5, 0.975];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordProblem {
    pub x: f64,
    pub n: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub tail: TailDensity,
    pub rho: f64,
}

impl CoordProblem {
    pub fn direct(x: f64, n: f64, sigma: f64, tail: TailDensity) -> Self {
        Self {
            x,
            n,
            kappa: 1.0,
            sigma,
            tail,
            rho: 1.0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() {
            return Err(Error::domain("observation must be finite"));
        }
        for (name, v) in [("n", self.n), ("kappa", self.kappa), ("sigma", self.sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::domain(format!("temperature must lie in (0, 1], got {}", self.rho)));
        }
        self.tail.validate()
    }

    /// Centre of the likelihood bulk in `theta`.
    fn likelihood_centre(&self) -> f64 {
        self.x / self.kappa
    }

    /// Standard deviation of the tempered likelihood in `theta`.
    fn likelihood_sd(&self) -> f64 {
        1.0 / (self.kappa * (self.n * self.rho).sqrt())
    }

    fn reflected(&self) -> Self {
        Self { x: -self.x, ..*self }
    }
}

/// `rho * log phi(sqrt(n) (x - kappa theta)) + log h(theta / sigma) - log sigma`.
pub fn coord_log_unnormalized(p: &CoordProblem, theta: f64) -> f64 {
    let r = p.n.sqrt() * (p.x - p.kappa * theta);
    p.rho * norm_logpdf(r) + p.tail.logpdf(theta / p.sigma) - p.sigma.ln()
}

/// `coord_log_unnormalized(p, theta) - coord_log_unnormalized(p, at)`,
/// factored so that it stays accurate when both terms are huge (a sharp
/// likelihood far from its centre).
fn coord_log_ratio(p: &CoordProblem, theta: f64, at: f64) -> f64 {
    let (rt, ra) = (p.x - p.kappa * theta, p.x - p.kappa * at);
    let lik = 0.5 * p.rho * p.n * p.kappa * (theta - at) * (rt + ra);
    lik + p.tail.logpdf_diff(theta, at, p.sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub variance: f64,
    /// `(level, value)` pairs, levels ascending.
    pub quantiles: Vec<(f64, f64)>,
    /// Log of the integral of `exp(coord_log_unnormalized)`; absent for
    /// sampling-based summaries.
    pub log_norm: Option<f64>,
}

impl PosteriorSummary {
    pub fn sd(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }

    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(l, _)| (l - level).abs() < 1e-12)
            .map(|(_, v)| *v)
    }

    /// Point mass at zero, used for coordinates beyond the prior truncation.
    pub fn zero(levels: &[f64]) -> Self {
        Self {
            mean: 0.0,
            variance: 0.0,
            quantiles: levels.iter().map(|&l| (l, 0.0)).collect(),
            log_norm: None,
        }
    }

    fn reflected(self) -> Self {
        let mut q: Vec<(f64, f64)> = self.quantiles.iter().map(|&(l, v)| (1.0 - l, -v)).collect();
        q.reverse();
        // reflected levels are only approximately the requested ones; restore them
        for (slot, orig) in q.iter_mut().zip(self.quantiles.iter()) {
            slot.0 = orig.0;
        }
        Self {
            mean: -self.mean,
            variance: self.variance,
            quantiles: q,
            log_norm: self.log_norm,
        }
    }

    /// Scale the variable by `1 / c` (`c > 0`).
    fn divided_by(self, c: f64) -> Self {
        Self {
            mean: self.mean / c,
            variance: self.variance / (c * c),
            quantiles: self.quantiles.iter().map(|&(l, v)| (l, v / c)).collect(),
            log_norm: self.log_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Relative accuracy target for the normalizer, mean and variance.
    pub rel_tol: f64,
    pub max_pieces: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_pieces: 4000,
        }
    }
}

/// Breakpoints of the integration window: the prior bulk `[-50 sigma, 50 sigma]`
/// united with the likelihood bulk `x / kappa +- 12 sd`, plus their centres.
fn window_breaks(p: &CoordProblem) -> Vec<f64> {
    let c = p.likelihood_centre();
    let w = p.likelihood_sd();
    let s = p.sigma;
    vec![
        -50.0 * s,
        -5.0 * s,
        -s,
        0.0,
        s,
        5.0 * s,
        50.0 * s,
        c - 12.0 * w,
        c - 3.0 * w,
        c,
        c + 3.0 * w,
        c + 12.0 * w,
    ]
}

/// Maximize `coord_log_unnormalized` on `[lo, hi]` by golden-section search.
fn refine_max(p: &CoordProblem, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |t: f64| coord_log_unnormalized(p, t);
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        }
    }
    if fa >= fb {
        (fa, a)
    } else {
        (fb, b)
    }
}

/// Distance from `mode` at which the log-density has dropped by one half,
/// searched on the given side (capped at `cap`).
fn half_width(p: &CoordProblem, mode: f64, peak: f64, sign: f64, cap: f64) -> f64 {
    let below = |d: f64| coord_log_unnormalized(p, mode + sign * d) < peak - 0.5;
    if !below(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Local maxima of the log-density: a scan of the window, with every
/// scanned local maximum refined in its bracket. The scan alone can miss a
/// posterior peak much narrower than the gap between prior and likelihood
/// bulk (a light-tailed prior in conflict with the data).
fn local_modes(p: &CoordProblem, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = breaks.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let mut grid = Vec::new();
    for w in sorted.windows(2) {
        for i in 0..32 {
            grid.push(w[0] + (w[1] - w[0]) * i as f64 / 32.0);
        }
    }
    grid.push(*sorted.last().expect("window has breakpoints"));
    let vals: Vec<f64> = grid.iter().map(|&t| coord_log_unnormalized(p, t)).collect();
    let last = grid.len() - 1;
    (0..grid.len())
        .filter(|&i| (i == 0 || vals[i] >= vals[i - 1]) && (i == last || vals[i] >= vals[i + 1]))
        .map(|i| refine_max(p, grid[i.saturating_sub(1)], grid[(i + 1).min(last)]))
        .filter(|(l, _)| l.is_finite())
        .collect()
}

/// Window breakpoints refined around the modes, and the largest
/// log-density (the log-domain reference, so that the integrand never
/// overflows) with its location.
fn resolve_window(p: &CoordProblem) -> (Vec<f64>, (f64, f64)) {
    let mut breaks = window_breaks(p);
    let modes = local_modes(p, &breaks);
    let best = modes
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0.0), |b, m| if m.0 > b.0 { m } else { b });
    let cap = 50.0 * p.sigma + 12.0 * p.likelihood_sd();
    for &(l, t) in &modes {
        // modes carrying non-negligible mass get their own bulk
        if l < best.0 - 60.0 {
            continue;
        }
        for sign in [-1.0, 1.0] {
            let h = half_width(p, t, l, sign, cap);
            breaks.extend([1.0, 3.0, 12.0].map(|k| t + sign * k * h));
        }
        breaks.push(t);
    }
    (breaks, best)
}

struct Moments {
    log_norm: f64,
    mean: f64,
    variance: f64,
    pieces: Vec<(Segment, [f64; 3])>,
    /// Mode at which the integrand is `1`.
    mode: f64,
    z: f64,
}

fn moments_about(
    p: &CoordProblem,
    segments: &[Segment],
    (log_ref, mode): (f64, f64),
    centre: f64,
    cfg: &QuadratureConfig,
) -> Result<Moments> {
    let f = |t: f64| {
        let w = coord_log_ratio(p, t, mode).exp();
        let d = t - centre;
        [w, w * d, w * d * d]
    };
    let r = integrate_segments(
        f,
        segments,
        QuadOptions {
            rel_tol: cfg.rel_tol,
            max_pieces: cfg.max_pieces,
        },
        |v| {
            // the mean is resolved relative to max(|mean|, spread)
            let z = v[0].abs();
            let m2 = v[2].abs();
            let mean_mag = (z * centre + v[1]).abs();
            [z, mean_mag.max((z * m2).sqrt()), m2]
        },
    )?;
    let [z, m1, m2] = r.value;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Numerical {
            message: "posterior normalizing constant is not positive and finite".into(),
            achieved: z,
            coordinate: None,
        });
    }
    let d = m1 / z;
    Ok(Moments {
        log_norm: log_ref + z.ln(),
        mean: centre + d,
        variance: (m2 / z - d * d).max(0.0),
        pieces: r.pieces,
        mode,
        z,
    })
}

/// Posterior summary by adaptive Gauss-Kronrod quadrature in the log domain.
pub fn coord_summary_quadrature(p: &CoordProblem) -> Result<PosteriorSummary> {
    coord_summary_quadrature_with(p, &DEFAULT_LEVELS, &QuadratureConfig::default())
}

pub fn coord_summary_quadrature_with(
    p: &CoordProblem,
    levels: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PosteriorSummary> {
    p.validate()?;
    if levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::domain("quantile levels must lie in (0, 1)"));
    }
    // every tail is symmetric: solve for x >= 0 and reflect, which makes
    // sign equivariance exact
    if p.x < 0.0 {
        let mirrored: Vec<f64> = levels.iter().map(|l| 1.0 - l).rev().collect();
        let s = summary_nonnegative(&p.reflected(), &mirrored, cfg)?;
        let mut out = s.reflected();
        for (slot, l) in out.quantiles.iter_mut().zip(levels) {
            slot.0 = *l;
        }
        return Ok(out);
    }
    summary_nonnegative(p, levels, cfg)
}

fn summary_nonnegative(p: &CoordProblem, levels: &[f64], cfg: &QuadratureConfig) -> Result<PosteriorSummary> {
    let (breaks, (log_ref, mode)) = resolve_window(p);
    let segments = real_line(&breaks);
    let mut m = moments_about(p, &segments, (log_ref, mode), mode, cfg)?;
    // re-centre when the mode is far from the mean relative to the spread,
    // which would make the variance a difference of near-equal numbers
    let d = m.mean - mode;
    if d * d > 0.5 * (m.variance + d * d) {
        m = moments_about(p, &segments, (log_ref, mode), m.mean, cfg)?;
    }
    let mean = if p.x == 0.0 { 0.0 } else { m.mean };
    let quantiles = levels
        .iter()
        .map(|&l| (l, quantile_from_pieces(p, &m, l)))
        .collect();
    Ok(PosteriorSummary {
        mean,
        variance: m.variance,
        quantiles,
        log_norm: Some(m.log_norm),
    })
}

fn quantile_from_pieces(p: &CoordProblem, m: &Moments, level: f64) -> f64 {
    let target = level * m.z;
    let mut acc = 0.0;
    let last = m.pieces.len() - 1;
    for (i, (seg, v)) in m.pieces.iter().enumerate() {
        if acc + v[0] >= target || i == last {
            let f = |t: f64| coord_log_ratio(p, t, m.mode).exp();
            let local = (target - acc).clamp(0.0, v[0]);
            // skip pieces carrying no mass at all
            if v[0] <= 0.0 {
                return seg.x_range().0;
            }
            return locate_mass(&f, seg, local);
        }
        acc += v[0];
    }
    unreachable!("partition is nonempty")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordSampler {
    /// Gaussian random-walk Metropolis with the given step size.
    RandomWalk { step: f64 },
    /// Univariate slice sampler with stepping out and shrinkage.
    Slice,
}

impl CoordSampler {
    /// Random walk with step `2.4 * sd`, the sd taken from a pilot quadrature.
    pub fn default_random_walk(p: &CoordProblem) -> Result<Self> {
        let s = coord_summary_quadrature_with(p, &[], &QuadratureConfig::default())?;
        Ok(CoordSampler::RandomWalk {
            step: 2.4 * s.sd().max(1e-300),
        })
    }
}

/// Draw from a coordinate posterior. `n_draws` counts all iterations; the
/// first `burn_in` are discarded.
pub fn coord_sample_mcmc(
    p: &CoordProblem,
    sampler: CoordSampler,
    n_draws: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ChainOutput> {
    coord_sample_mcmc_from(p, sampler, n_draws, burn_in, seed, None)
}

/// As [`coord_sample_mcmc`], starting from `init` instead of the
/// likelihood centre.
pub fn coord_sample_mcmc_from(
    p: &CoordProblem,
    sampler: CoordSampler,
    n_draws: usize,
    burn_in: usize,
    seed: u64,
    init: Option<f64>,
) -> Result<ChainOutput> {
    p.validate()?;
    if n_draws <= burn_in {
        return Err(Error::domain("n_draws must exceed burn_in"));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = ChainOutput::new(1, seed, burn_in);
    let logp = |t: f64| coord_log_unnormalized(p, t);
    let mut theta = init.unwrap_or_else(|| p.likelihood_centre());
    let mut lp = logp(theta);
    if !lp.is_finite() {
        theta = 0.0;
        lp = logp(theta);
    }
    match sampler {
        CoordSampler::RandomWalk { step } => {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::domain(format!("random-walk step must be positive, got {step}")));
            }
            out.step_size = Some(step);
            let mut kept_acc = 0usize;
            for it in 0..n_draws {
                let z: f64 = rng.sample(StandardNormal);
                let prop = theta + step * z;
                let lq = logp(prop);
                out.proposed += 1;
                if rng.random::<f64>().ln() < lq - lp {
                    theta = prop;
                    lp = lq;
                    out.accepted += 1;
                    if it >= burn_in {
                        kept_acc += 1;
                    }
                }
                if it >= burn_in {
                    out.push(&[theta]);
                }
            }
            out.post_burn_in_acceptance = Some(kept_acc as f64 / (n_draws - burn_in) as f64);
        }
        CoordSampler::Slice => {
            let width = p.sigma.max(p.likelihood_sd());
            out.step_size = Some(width);
            for it in 0..n_draws {
                theta = slice_step(&logp, theta, lp, width, &mut rng);
                lp = logp(theta);
                out.proposed += 1;
                out.accepted += 1;
                if it >= burn_in {
                    out.push(&[theta]);
                }
            }
            out.post_burn_in_acceptance = Some(1.0);
        }
    }
    Ok(out)
}

/// One slice-sampling update (stepping out, then shrinkage).
fn slice_step<F: Fn(f64) -> f64, R: Rng + ?Sized>(logp: &F, x0: f64, lp0: f64, w: f64, rng: &mut R) -> f64 {
    let level = lp0 + rng.random::<f64>().ln();
    let mut lo = x0 - w * rng.random::<f64>();
    let mut hi = lo + w;
    let mut budget = 1000;
    while budget > 0 && logp(lo) > level {
        lo -= w;
        budget -= 1;
    }
    budget = 1000;
    while budget > 0 && logp(hi) > level {
        hi += w;
        budget -= 1;
    }
    loop {
        let x1 = lo + (hi - lo) * rng.random::<f64>();
        if logp(x1) > level {
            return x1;
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
        if hi - lo <= f64::EPSILON * x0.abs().max(f64::MIN_POSITIVE) {
            return x0;
        }
    }
}

/// Summary of a one-dimensional chain.
pub fn summarize_chain(chain: &ChainOutput, levels: &[f64]) -> PosteriorSummary {
    let mut xs = chain.coordinate(0);
    let m = mean(&xs);
    let v = if xs.len() > 1 { variance(&xs) } else { 0.0 };
    xs.sort_by(|a, b| a.total_cmp(b));
    PosteriorSummary {
        mean: m,
        variance: v,
        quantiles: levels.iter().map(|&l| (l, sorted_quantile(&xs, l))).collect(),
        log_norm: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McmcKind {
    /// Step `2.4 * sd` from a pilot quadrature, per coordinate.
    RandomWalk,
    Slice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PosteriorMethod {
    Quadrature,
    Mcmc {
        sampler: McmcKind,
        n_draws: usize,
        burn_in: usize,
    },
}

#[derive(Debug, Clone)]
pub struct SequencePosteriorConfig {
    pub levels: Vec<f64>,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
}

impl Default for SequencePosteriorConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS.to_vec(),
            seed: 0,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequencePosterior {
    pub summaries: Vec<PosteriorSummary>,
    pub mean_field: CoefficientField,
    pub l2_error: Option<f64>,
}

fn layouts_compatible(obs: FieldLayout, prior: FieldLayout) -> bool {
    match (obs, prior) {
        (FieldLayout::Single, FieldLayout::Single) => true,
        (FieldLayout::Wavelet { coarse_level: a }, FieldLayout::Wavelet { coarse_level: b }) => a == b,
        _ => false,
    }
}

/// Coordinatewise posterior of a sequence model. Coordinates beyond the
/// prior truncation are set to zero.
pub fn sequence_posterior(
    obs: &SequenceObservation,
    prior: &PriorSpec,
    rho: f64,
    method: PosteriorMethod,
    config: &SequencePosteriorConfig,
    truth: Option<&CoefficientField>,
) -> Result<SequencePosterior> {
    obs.validate()?;
    prior.validate()?;
    if !layouts_compatible(obs.layout, prior.field_layout()) {
        return Err(Error::domain(format!(
            "prior layout {:?} does not match observation layout {:?}",
            prior.field_layout(),
            obs.layout
        )));
    }
    if prior.len() > obs.len() {
        return Err(Error::domain(format!(
            "prior truncation covers {} coordinates but only {} were observed",
            prior.len(),
            obs.len()
        )));
    }
    if let Some(t) = truth {
        if t.len() != obs.len() {
            return Err(Error::domain("truth and observation differ in length"));
        }
    }
    let scales = prior.scales();
    let summaries: Vec<PosteriorSummary> = (0..obs.len())
        .into_par_iter()
        .map(|i| {
            if i >= scales.len() {
                return Ok(PosteriorSummary::zero(&config.levels));
            }
            let p = CoordProblem {
                x: obs.x[i],
                n: obs.n,
                kappa: obs.kappa(i),
                sigma: scales[i],
                tail: prior.tail,
                rho,
            };
            coordinate_summary(&p, method, config, derive_seed(config.seed, i as u64)).map_err(|e| e.at_coordinate(i))
        })
        .collect::<Result<_>>()?;
    let mean_field = CoefficientField::new(obs.layout, summaries.iter().map(|s| s.mean).collect())?;
    let l2_error = truth.map(|t| t.l2_distance(&mean_field));
    Ok(SequencePosterior {
        summaries,
        mean_field,
        l2_error,
    })
}

fn coordinate_summary(
    p: &CoordProblem,
    method: PosteriorMethod,
    config: &SequencePosteriorConfig,
    seed: u64,
) -> Result<PosteriorSummary> {
    match method {
        PosteriorMethod::Quadrature => coord_summary_quadrature_with(p, &config.levels, &config.quadrature),
        PosteriorMethod::Mcmc {
            sampler,
            n_draws,
            burn_in,
        } => {
            let s = match sampler {
                McmcKind::RandomWalk => CoordSampler::default_random_walk(p)?,
                McmcKind::Slice => CoordSampler::Slice,
            };
            let chain = coord_sample_mcmc(p, s, n_draws, burn_in, seed)?;
            Ok(summarize_chain(&chain, &config.levels))
        }
    }
}

/// Posterior mean of `f_k` in the inverse model computed through the
/// direct-model coordinate `mu_k = kappa_k f_k` with prior scale `kappa_k sigma_k`.
pub fn inverse_via_direct(p: &CoordProblem) -> Result<PosteriorSummary> {
    let direct = CoordProblem {
        kappa: 1.0,
        sigma: p.kappa * p.sigma,
        ..*p
    };
    Ok(coord_summary_quadrature(&direct)?.divided_by(p.kappa))
}
