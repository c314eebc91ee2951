//! Tempered log-likelihoods for density estimation, binary classification
//! and the white-noise sequence model, plus density normalization and
//! divergences between densities.
//!
//! Functions `f` on `[0, 1]` are wavelet expansions evaluated on the fine
//! dyadic grid `t_i = i / M`, `M = 2^FINE_DEPTH` (see
//! [`Synthesizer`](crate::wavelet::Synthesizer)). Integrals over `[0, 1]`
//! use the trapezoid rule on the `M + 1` points `t_0..=t_M`; since the
//! expansions are 1-periodic the endpoint values agree and the rule reduces
//! to `(1 / M) sum_{i < M}`. Sample points are read at their nearest grid
//! point, the same lookup as [`eval_function`](crate::wavelet::eval_function),
//! so likelihood and normalization stay mutually consistent.
//!
//! `rho = 1` (the standard posterior) is accepted everywhere; contraction
//! guarantees for the density and classification models are only known for
//! `rho < 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::rng::rng_from_seed;
use crate::samplers::LogLikelihood;
use crate::sequence_models::SequenceObservation;
use crate::special::norm_logpdf;
use crate::wavelet::{Synthesizer, WaveletFilter};

/// Allowed deviation of a density's quadrature mass from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// I.i.d. samples from a density on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityData {
    samples: Vec<f64>,
}

impl DensityData {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = samples.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::domain(format!("sample {i} = {x} outside [0, 1]")));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Pairs `(X_i, Y_i)` with `X_i` in `[0, 1]` and binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationData {
    x: Vec<f64>,
    y: Vec<u8>,
}

impl ClassificationData {
    pub fn new(x: Vec<f64>, y: Vec<u8>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::domain(format!("{} predictors but {} labels", x.len(), y.len())));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("predictor {i} = {v} outside [0, 1]")));
        }
        if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| **v > 1) {
            return Err(Error::domain(format!("label {i} = {v} is not binary")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Trapezoid weights for `len` equispaced points spanning `[a, b]`.
pub fn trapezoid_weights(len: usize, a: f64, b: f64) -> Vec<f64> {
    if len < 2 {
        return vec![b - a; len];
    }
    let h = (b - a) / (len - 1) as f64;
    let mut w = vec![h; len];
    w[0] = h / 2.0;
    w[len - 1] = h / 2.0;
    w
}

/// `log int_0^1 e^f` by the trapezoid rule on equispaced values covering
/// `[0, 1]` (endpoints included).
pub fn log_normalizer(f: &[f64]) -> Result<f64> {
    if f.len() < 2 {
        return Err(Error::domain("need at least two grid values"));
    }
    if f.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::domain("log-density values must be finite"));
    }
    let w = trapezoid_weights(f.len(), 0.0, 1.0);
    let terms: Vec<f64> = f.iter().zip(&w).map(|(v, w)| v + w.ln()).collect();
    Ok(log_sum_exp(&terms))
}

/// `g = e^f / int_0^1 e^f` on an equispaced grid of `[0, 1]` (endpoints
/// included), computed in the log domain. Values of `-inf` give `g = 0`.
pub fn normalize_density(f: &[f64]) -> Result<Vec<f64>> {
    let z = log_normalizer(f)?;
    Ok(f.iter().map(|v| (v - z).exp()).collect())
}

/// `Lambda(u) = 1 / (1 + e^{-u})`, evaluated without overflow.
pub fn logistic_link(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)`.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!("rho = {rho} must lie in (0, 1]")));
    }
    Ok(())
}

/// Function values on the fine grid, including the endpoint `t = 1`.
pub fn grid_function(synth: &Synthesizer, coeffs: &[f64]) -> Result<Vec<f64>> {
    let mut v = synth.grid_values(coeffs)?;
    v.push(v[0]);
    Ok(v)
}

/// Number of points falling on each of the `M` grid cells.
fn grid_counts(synth: &Synthesizer, points: &[f64]) -> Result<Vec<f64>> {
    let mut c = vec![0.0; synth.grid_len()];
    for &x in points {
        c[synth.grid_index(x)?] += 1.0;
    }
    Ok(c)
}

/// Tempered density log-likelihood
/// `rho (sum_i f(X_i) - n log int_0^1 e^f)` as a function of the wavelet
/// coefficients of `f`.
#[derive(Debug, Clone)]
pub struct DensityLikelihood {
    synth: Synthesizer,
    counts: Vec<f64>,
    n: f64,
    rho: f64,
}

impl DensityLikelihood {
    pub fn new(synth: Synthesizer, data: &DensityData, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let counts = grid_counts(&synth, data.samples())?;
        Ok(Self {
            synth,
            counts,
            n: data.len() as f64,
            rho,
        })
    }

    pub fn synthesizer(&self) -> &Synthesizer {
        &self.synth
    }

    pub fn loglik(&self, coeffs: &[f64]) -> Result<f64> {
        let v = self.synth.grid_values(coeffs)?;
        Ok(self.from_grid(&v).0)
    }

    pub fn loglik_and_gradient(&self, coeffs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.synth.grid_values(coeffs)?;
        let (value, log_z) = self.from_grid(&v);
        let m = v.len() as f64;
        let w: Vec<f64> = v
            .iter()
            .zip(&self.counts)
            .map(|(vi, c)| self.rho * (c - self.n * (vi - log_z).exp() / m))
            .collect();
        Ok((value, self.synth.grid_adjoint(&w)?))
    }

    /// `(value, log normalizer)` from the `M` periodic grid values.
    fn from_grid(&self, v: &[f64]) -> (f64, f64) {
        let log_z = log_sum_exp(v) - (v.len() as f64).ln();
        let s: f64 = v.iter().zip(&self.counts).map(|(a, c)| a * c).sum();
        (self.rho * (s - self.n * log_z), log_z)
    }
}

impl LogLikelihood for DensityLikelihood {
    fn value(&self, f: &[f64]) -> f64 {
        self.loglik(f).unwrap_or(f64::NEG_INFINITY)
    }

    fn value_and_gradient(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.loglik_and_gradient(f).ok()
    }

    /// Fisher information of an orthonormal coefficient near the uniform density.
    fn curvature(&self, dim: usize) -> Vec<f64> {
        vec![self.n * self.rho; dim]
    }
}

/// Tempered logistic-regression log-likelihood
/// `rho sum_i [Y_i log Lambda(f(X_i)) + (1 - Y_i) log(1 - Lambda(f(X_i)))]`.
/// The marginal density of `X` factorises out and is omitted.
#[derive(Debug, Clone)]
pub struct ClassificationLikelihood {
    synth: Synthesizer,
    ones: Vec<f64>,
    zeros: Vec<f64>,
    n: f64,
    rho: f64,
}

impl ClassificationLikelihood {
    pub fn new(synth: Synthesizer, data: &ClassificationData, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let m = synth.grid_len();
        let mut ones = vec![0.0; m];
        let mut zeros = vec![0.0; m];
        for (&x, &y) in data.x().iter().zip(data.y()) {
            let i = synth.grid_index(x)?;
            if y == 1 {
                ones[i] += 1.0;
            } else {
                zeros[i] += 1.0;
            }
        }
        Ok(Self {
            synth,
            ones,
            zeros,
            n: data.len() as f64,
            rho,
        })
    }

    pub fn synthesizer(&self) -> &Synthesizer {
        &self.synth
    }

    pub fn loglik(&self, coeffs: &[f64]) -> Result<f64> {
        let v = self.synth.grid_values(coeffs)?;
        Ok(self.from_grid(&v))
    }

    pub fn loglik_and_gradient(&self, coeffs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.synth.grid_values(coeffs)?;
        let w: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, u)| self.rho * (self.ones[i] - (self.ones[i] + self.zeros[i]) * logistic_link(*u)))
            .collect();
        Ok((self.from_grid(&v), self.synth.grid_adjoint(&w)?))
    }

    fn from_grid(&self, v: &[f64]) -> f64 {
        let s: f64 = v
            .iter()
            .enumerate()
            .filter(|(i, _)| self.ones[*i] + self.zeros[*i] > 0.0)
            .map(|(i, u)| -self.ones[i] * softplus(-u) - self.zeros[i] * softplus(*u))
            .sum();
        self.rho * s
    }
}

impl LogLikelihood for ClassificationLikelihood {
    fn value(&self, f: &[f64]) -> f64 {
        self.loglik(f).unwrap_or(f64::NEG_INFINITY)
    }

    fn value_and_gradient(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
        self.loglik_and_gradient(f).ok()
    }

    fn curvature(&self, dim: usize) -> Vec<f64> {
        vec![0.25 * self.n * self.rho; dim]
    }
}

pub fn density_loglik(f: &CoefficientField, filter: &WaveletFilter, data: &DensityData, rho: f64) -> Result<f64> {
    DensityLikelihood::new(Synthesizer::for_field(filter.clone(), f)?, data, rho)?.loglik(f.values())
}

/// Value and gradient with respect to the wavelet coefficients.
pub fn density_loglik_gradient(
    f: &CoefficientField,
    filter: &WaveletFilter,
    data: &DensityData,
    rho: f64,
) -> Result<(f64, Vec<f64>)> {
    DensityLikelihood::new(Synthesizer::for_field(filter.clone(), f)?, data, rho)?.loglik_and_gradient(f.values())
}

pub fn classification_loglik(
    f: &CoefficientField,
    filter: &WaveletFilter,
    data: &ClassificationData,
    rho: f64,
) -> Result<f64> {
    ClassificationLikelihood::new(Synthesizer::for_field(filter.clone(), f)?, data, rho)?.loglik(f.values())
}

pub fn classification_loglik_gradient(
    f: &CoefficientField,
    filter: &WaveletFilter,
    data: &ClassificationData,
    rho: f64,
) -> Result<(f64, Vec<f64>)> {
    ClassificationLikelihood::new(Synthesizer::for_field(filter.clone(), f)?, data, rho)?
        .loglik_and_gradient(f.values())
}

/// Tempered white-noise likelihood `-(rho n / 2) sum_k (X_k - kappa_k f_k)^2`.
#[derive(Debug, Clone)]
pub struct WhiteNoiseLikelihood {
    x: Vec<f64>,
    kappa: Vec<f64>,
    n: f64,
    rho: f64,
}

impl WhiteNoiseLikelihood {
    pub fn new(obs: &SequenceObservation, rho: f64) -> Result<Self> {
        obs.validate()?;
        check_rho(rho)?;
        Ok(Self {
            x: obs.x.clone(),
            kappa: (0..obs.len()).map(|i| obs.kappa(i)).collect(),
            n: obs.n,
            rho,
        })
    }
}

impl LogLikelihood for WhiteNoiseLikelihood {
    fn value(&self, f: &[f64]) -> f64 {
        let s: f64 = f
            .iter()
            .zip(&self.x)
            .zip(&self.kappa)
            .map(|((fi, x), k)| (x - k * fi).powi(2))
            .sum();
        -0.5 * self.rho * self.n * s
    }

    fn value_and_gradient(&self, f: &[f64]) -> Option<(f64, Vec<f64>)> {
        let g = f
            .iter()
            .zip(&self.x)
            .zip(&self.kappa)
            .map(|((fi, x), k)| self.rho * self.n * k * (x - k * fi))
            .collect();
        Some((self.value(f), g))
    }

    fn curvature(&self, dim: usize) -> Vec<f64> {
        (0..dim)
            .map(|i| self.rho * self.n * self.kappa.get(i).map_or(0.0, |k| k * k))
            .collect()
    }

    fn warm_start(&self) -> Option<Vec<f64>> {
        Some(self.x.iter().zip(&self.kappa).map(|(x, k)| x / k).collect())
    }
}

fn check_density(name: &str, p: &[f64], weights: &[f64]) -> Result<f64> {
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::domain(format!("density `{name}` has invalid value {v}")));
    }
    let mass: f64 = p.iter().zip(weights).map(|(a, w)| a * w).sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::domain(format!("density `{name}` integrates to {mass}, not 1")));
    }
    Ok(mass)
}

fn check_lengths(p: &[f64], q: &[f64], weights: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.len() != weights.len() || p.is_empty() {
        return Err(Error::domain("densities and weights must share a non-empty grid"));
    }
    Ok(())
}

/// `D_rho(p, q) = -(1 / (1 - rho)) log int p^rho q^{1 - rho}` by quadrature
/// with the given weights (trapezoid weights for a grid, ones for atoms).
///
/// Both densities must integrate to one within [`NORMALIZATION_TOL`]; the
/// remaining quadrature mass error is divided out so that `D_rho(p, p) = 0`.
pub fn renyi_divergence(p: &[f64], q: &[f64], weights: &[f64], rho: f64) -> Result<f64> {
    check_lengths(p, q, weights)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("rho = {rho} must lie in (0, 1)")));
    }
    let mp = check_density("p", p, weights)?;
    let mq = check_density("q", q, weights)?;
    let terms: Vec<f64> = p
        .iter()
        .zip(q)
        .zip(weights)
        .filter(|((a, b), w)| **a > 0.0 && **b > 0.0 && **w > 0.0)
        .map(|((a, b), w)| rho * a.ln() + (1.0 - rho) * b.ln() + w.ln())
        .collect();
    if terms.is_empty() {
        return Ok(f64::INFINITY);
    }
    let log_i = log_sum_exp(&terms) - rho * mp.ln() - (1.0 - rho) * mq.ln();
    Ok((-log_i / (1.0 - rho)).max(0.0))
}

/// Kullback-Leibler divergence `K = int p log(p / q)` and second moment
/// `V = int p (log(p / q) - K)^2`, by quadrature with the given weights.
/// `K = V = inf` when `q` vanishes where `p` does not.
pub fn kl_and_v(p: &[f64], q: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    check_lengths(p, q, weights)?;
    let mp = check_density("p", p, weights)?;
    let mq = check_density("q", q, weights)?;
    let mut ratios = Vec::with_capacity(p.len());
    for ((a, b), w) in p.iter().zip(q).zip(weights) {
        if *a == 0.0 || *w == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        ratios.push((a / mp * w, (a / mp).ln() - (b / mq).ln()));
    }
    let k: f64 = ratios.iter().map(|(pw, r)| pw * r).sum();
    let v: f64 = ratios.iter().map(|(pw, r)| pw * (r - k).powi(2)).sum();
    Ok((k, v))
}

/// `(K, V)` between the densities `e^v / int e^v` and `e^w / int e^w`, given
/// log-densities up to constants on an equispaced grid of `[0, 1]`.
pub fn kl_and_v_from_logs(v: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let p = normalize_density(v)?;
    let q = normalize_density(w)?;
    kl_and_v(&p, &q, &trapezoid_weights(p.len(), 0.0, 1.0))
}

/// The envelope `d^2 (1 + d) e^d` bounding `K(p_v, p_w)` up to a constant,
/// where `d = ||v - w||_inf`.
pub fn kl_envelope(sup_distance: f64) -> f64 {
    let d = sup_distance;
    d * d * (1.0 + d) * d.exp()
}

/// Number of quadrature points per coordinate in [`white_noise_renyi`].
const WHITE_NOISE_POINTS: usize = 4001;

/// Rényi divergence between the white-noise laws `prod_k N(kappa_k f_k, 1/n)`
/// and `prod_k N(kappa_k f0_k, 1/n)`, summing per-coordinate divergences
/// computed by quadrature. Analytically this is `n rho ||kappa (f - f0)||^2 / 2`.
pub fn white_noise_renyi(f: &[f64], f0: &[f64], kappa: Option<&[f64]>, n: f64, rho: f64) -> Result<f64> {
    if f.len() != f0.len() || kappa.is_some_and(|k| k.len() != f.len()) {
        return Err(Error::domain("fields and multipliers must have equal length"));
    }
    if !(n > 0.0) {
        return Err(Error::domain("n must be positive"));
    }
    let s = 1.0 / n.sqrt();
    let mut total = 0.0;
    for i in 0..f.len() {
        let k = kappa.map_or(1.0, |k| k[i]);
        let (a, b) = (k * f[i], k * f0[i]);
        if a == b {
            continue;
        }
        let centre = 0.5 * (a + b);
        let half = 0.5 * (a - b).abs() + 14.0 * s;
        let grid: Vec<f64> = (0..WHITE_NOISE_POINTS)
            .map(|j| centre - half + 2.0 * half * j as f64 / (WHITE_NOISE_POINTS - 1) as f64)
            .collect();
        let dens = |m: f64| -> Vec<f64> { grid.iter().map(|x| (norm_logpdf((x - m) / s) - s.ln()).exp()).collect() };
        let w = trapezoid_weights(WHITE_NOISE_POINTS, centre - half, centre + half);
        total += renyi_divergence(&dens(a), &dens(b), &w, rho)?;
    }
    Ok(total)
}

/// Draw `n` points from the density with values `g` on an equispaced grid
/// of `[0, 1]` (endpoints included), inverting the trapezoid CDF with
/// linear interpolation inside each cell.
pub fn sample_density(g: &[f64], n: usize, seed: u64) -> Result<DensityData> {
    let w = trapezoid_weights(g.len(), 0.0, 1.0);
    check_density("g", g, &w)?;
    let cells = g.len() - 1;
    let h = 1.0 / cells as f64;
    let mut cdf = Vec::with_capacity(g.len());
    cdf.push(0.0);
    for i in 0..cells {
        cdf.push(cdf[i] + 0.5 * h * (g[i] + g[i + 1]));
    }
    let total = cdf[cells];
    let mut rng = rng_from_seed(seed);
    let samples = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let j = cdf.partition_point(|c| *c <= u).clamp(1, cells) - 1;
            let width = cdf[j + 1] - cdf[j];
            let frac = if width > 0.0 { (u - cdf[j]) / width } else { 0.0 };
            ((j as f64 + frac) * h).clamp(0.0, 1.0)
        })
        .collect();
    DensityData::new(samples)
}

/// Uniform predictors with labels `Y_i ~ Bernoulli(Lambda(f0(X_i)))`, where
/// `f0_grid` holds the values of `f0` on an equispaced grid of `[0, 1]`.
pub fn sample_classification(f0_grid: &[f64], n: usize, seed: u64) -> Result<ClassificationData> {
    if f0_grid.len() < 2 {
        return Err(Error::domain("need at least two grid values"));
    }
    let cells = (f0_grid.len() - 1) as f64;
    let mut rng = rng_from_seed(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = rng.random();
        let p = logistic_link(f0_grid[(xi * cells).round() as usize]);
        x.push(xi);
        y.push(u8::from(rng.random::<f64>() < p));
    }
    ClassificationData::new(x, y)
}
