//! The experiments behind each `Experiment` value.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::json;

use super::config::{
    tail_label, CoordMethod, Experiment, ExperimentConfig, ForwardKind, FunctionAlgorithm, PriorConfig,
};
use super::Sink;
use crate::chain::ChainOutput;
use crate::coordinate_posterior::{
    coord_sample_mcmc_from, coord_summary_quadrature_with, sequence_posterior, CoordProblem, CoordSampler, McmcKind,
    PosteriorMethod, QuadratureConfig, SequencePosteriorConfig,
};
use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};
use crate::io::{
    classification_data_table, coefficient_row_cells, density_data_table, fmt_f64, observation_table, schema, Table,
};
use crate::model_likelihoods::{
    grid_function, logistic_link, normalize_density, sample_classification, sample_density, trapezoid_weights,
    white_noise_renyi, ClassificationLikelihood, DensityLikelihood, WhiteNoiseLikelihood,
};
use crate::priors::{PriorSpec, ScaleKind, TailDensity, TailKind};
use crate::rng::{derive_seed, rng_from_seed};
use crate::samplers::{
    mwg_hierarchical_gaussian, run_sampler, whiten_transform, Algorithm, Init, MwgConfig, Parametrization,
    RegionNorm, SamplerConfig,
};
use crate::sequence_models::{
    make_truth, simulate, snr, volterra_multipliers, SequenceObservation, TruthSpec,
};
use crate::special::norm_quantile;
use crate::stats::{ks_statistic, mean, sorted_quantile, variance};
use crate::theory_checks::{
    bvm_coordinate_check, fit_rate_slope, membership, prior_mass_trend, CheckReport, CheckStatus, RateFlavor,
    RateSpec, SmoothnessBall,
};
use crate::wavelet::{dwt_inverse, Synthesizer, WaveletFilter, WaveletName};
use crate::samplers::credible_region;

/// Published posterior-mean errors for Blocks, Bumps, HeaviSine, Doppler.
pub const DJ94_REFERENCE_OT: [f64; 4] = [0.50, 0.54, 0.21, 0.33];
pub const DJ94_REFERENCE_HIERARCHICAL: [f64; 4] = [0.61, 0.70, 0.26, 0.49];

// Seed streams, combined with `derive_seed`.
const STREAM_DATA: u64 = 1;
const STREAM_CELL: u64 = 2;
const STREAM_CHECK: u64 = 3;

/// Points of the output grid for cosine-basis functions.
const FUNCTION_POINTS: usize = 201;
/// Fine-grid stride of the density/classification output grid.
const OUTPUT_STRIDE: usize = 8;

pub(super) fn dispatch(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    match cfg.experiment {
        Experiment::Fig1PosteriorMeans => fig1(cfg, sink),
        Experiment::InverseRegression => inverse_regression(cfg, paper, sink),
        Experiment::Dj94Denoise => dj94(cfg, paper, sink),
        Experiment::DensityEstimation | Experiment::Classification => function_model(cfg, paper, sink),
        Experiment::RateSweep => rate_sweep(cfg, sink),
        Experiment::PriorMass => prior_mass(cfg, paper, sink),
        Experiment::TheorySuite => theory_suite(cfg, paper, sink),
    }
}

fn seed_for(seed: u64, stream: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, stream), index as u64)
}

fn n_label(n: f64) -> String {
    format!("{n:e}")
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `(n_draws, burn_in)`: the published lengths at paper scale, otherwise
/// the configured ones (burn-in defaults to half the run).
fn budget(cfg: &ExperimentConfig, paper: bool, desk: (usize, usize), published: (usize, usize)) -> Result<(usize, usize)> {
    if paper {
        return Ok(published);
    }
    let n = cfg.sampler.n_draws.unwrap_or(desk.0);
    let b = cfg.sampler.burn_in.unwrap_or(if cfg.sampler.n_draws.is_some() { n / 2 } else { desk.1 });
    if n <= b {
        return Err(Error::config("sampler.burn_in", "must be below sampler.n_draws"));
    }
    Ok((n, b))
}

fn thin_for(cfg: &ExperimentConfig, paper: bool, n_draws: usize, burn_in: usize) -> usize {
    let cap = if paper { cfg.sampler.max_kept.max(4000) } else { cfg.sampler.max_kept };
    (n_draws - burn_in).div_ceil(cap).max(1)
}

fn levels(cfg: &ExperimentConfig) -> [f64; 3] {
    let a = (1.0 - cfg.sampler.credible_level) / 2.0;
    [a, 0.5, 1.0 - a]
}

#[derive(Debug, Clone, Copy)]
struct CoefSummary {
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
}

fn chain_summaries(chain: &ChainOutput, lv: &[f64; 3]) -> Vec<CoefSummary> {
    (0..chain.dim)
        .map(|j| {
            let mut xs = chain.coordinate(j);
            let m = chain.full_mean.as_ref().map_or_else(|| mean(&xs), |f| f[j]);
            let sd = if xs.len() > 1 { variance(&xs).sqrt() } else { 0.0 };
            xs.sort_by(f64::total_cmp);
            CoefSummary {
                mean: m,
                sd,
                lo: sorted_quantile(&xs, lv[0]),
                hi: sorted_quantile(&xs, lv[2]),
            }
        })
        .collect()
}

fn coefficient_table(layout: FieldLayout, truth: &[f64], x: Option<&[f64]>, s: &[CoefSummary]) -> Table {
    let mut t = Table::new(schema::COEFFICIENTS);
    for (i, c) in s.iter().enumerate() {
        let (level, index) = coefficient_row_cells(layout, i);
        t.push(vec![
            level,
            index,
            fmt_f64(truth[i]),
            opt_cell(x.map(|x| x[i])),
            fmt_f64(c.mean),
            fmt_f64(c.sd),
            fmt_f64(c.lo),
            fmt_f64(c.hi),
        ]);
    }
    t
}

struct Band {
    mean: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn band_table(series: &str, grid: &[f64], truth: &[f64], band: &Band) -> Table {
    let mut t = Table::new(schema::FUNCTION_BAND);
    for i in 0..grid.len() {
        t.push(vec![
            series.to_string(),
            fmt_f64(grid[i]),
            fmt_f64(truth[i]),
            fmt_f64(band.mean[i]),
            fmt_f64(band.lo[i]),
            fmt_f64(band.hi[i]),
        ]);
    }
    t
}

/// Band from function-valued draws: mean and envelope of the credible set.
fn draw_band(draws: &[Vec<f64>], level: f64, norm: RegionNorm) -> Result<Band> {
    let r = credible_region(draws, level, norm)?;
    Ok(Band {
        mean: r.mean,
        lo: r.lower,
        hi: r.upper,
    })
}

/// `e_k(t) = sqrt(2) cos((k - 1/2) pi t)`, the singular functions of the
/// Volterra operator; `basis[k - 1][i]` is `e_k(grid[i])`.
pub fn cosine_basis(k_max: usize, grid: &[f64]) -> Vec<Vec<f64>> {
    (1..=k_max)
        .map(|k| {
            let w = (k as f64 - 0.5) * std::f64::consts::PI;
            grid.iter().map(|t| std::f64::consts::SQRT_2 * (w * t).cos()).collect()
        })
        .collect()
}

fn synthesize(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis.first().map_or(0, Vec::len)];
    for (b, c) in basis.iter().zip(coeffs) {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(b) {
                *o += c * v;
            }
        }
    }
    out
}

// ---------------------------------------------------------------- fig1

fn fig1(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let s = cfg.fig1.clone().unwrap_or_default();
    let n = cfg.n_values()[0];
    let lv = levels(cfg);
    let xs: Vec<f64> = (0..s.points)
        .map(|i| -s.x_max + 2.0 * s.x_max * i as f64 / (s.points - 1) as f64)
        .collect();
    let cells: Vec<(TailKind, f64)> = s
        .tails
        .iter()
        .flat_map(|&t| s.sigmas.iter().map(move |&sg| (t, sg)))
        .collect();
    let blocks = cells
        .par_iter()
        .map(|&(tail, sigma)| -> Result<Vec<Vec<String>>> {
            let series = format!("{}_sigma{}", tail_label(tail), n_label(sigma));
            xs.iter()
                .map(|&x| {
                    let p = CoordProblem::direct(x, n, sigma, TailDensity::new(tail));
                    let q = coord_summary_quadrature_with(&p, &lv, &QuadratureConfig::default())
                        .map_err(|e| e.context(&format!("{series} at x = {x}")))?;
                    let g = n * sigma * sigma;
                    Ok(vec![
                        series.clone(),
                        tail_label(tail),
                        fmt_f64(sigma),
                        fmt_f64(x),
                        fmt_f64(q.mean),
                        fmt_f64(q.sd()),
                        opt_cell(q.quantile(lv[0])),
                        opt_cell(q.quantile(lv[2])),
                        fmt_f64(g * x / (1.0 + g)),
                    ])
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(schema::FIG1);
    t.meta.insert("n".into(), fmt_f64(n));
    for row in blocks.into_iter().flatten() {
        t.push(row);
    }
    sink.table("fig1_posterior_means.csv", &t)
}

// ---------------------------------------------------- sequence models

struct CellOutput {
    label: String,
    tables: Vec<(String, Table)>,
    error_row: Vec<String>,
}

struct SeqCellResult {
    summaries: Vec<CoefSummary>,
    /// Coefficient draws (one vector per kept draw), when sampled.
    draws: Option<Vec<Vec<f64>>>,
    method: String,
    acceptance: Option<f64>,
}

fn obs_tempered(obs: &SequenceObservation, rho: f64) -> SequenceObservation {
    SequenceObservation {
        n: obs.n * rho,
        ..obs.clone()
    }
}

fn hierarchical_chain(
    cfg: &ExperimentConfig,
    paper: bool,
    prior: &PriorConfig,
    obs: &SequenceObservation,
    rho: f64,
    seed: u64,
) -> Result<(ChainOutput, Parametrization)> {
    let tempered = obs_tempered(obs, rho);
    let spec = prior
        .hierarchical(tempered.n)
        .ok_or_else(|| Error::domain("not a hierarchical prior"))?;
    let (n_draws, burn_in) = budget(cfg, paper, (20_000, 10_000), (400_000, 200_000))?;
    let mc = MwgConfig {
        spec,
        n_draws,
        burn_in,
        thin: thin_for(cfg, paper, n_draws, burn_in),
        seed,
        use_likelihood: true,
    };
    Ok((mwg_hierarchical_gaussian(&tempered, &mc)?, spec.parametrization))
}

fn parametrization_name(p: Parametrization) -> &'static str {
    match p {
        Parametrization::Centered => "mwg_centered",
        Parametrization::Noncentered => "mwg_noncentered",
    }
}

fn mcmc_name(k: McmcKind) -> &'static str {
    match k {
        McmcKind::Slice => "mcmc_slice",
        McmcKind::RandomWalk => "mcmc_random_walk",
    }
}

fn sequence_cell(
    cfg: &ExperimentConfig,
    paper: bool,
    prior: &PriorConfig,
    obs: &SequenceObservation,
    truth: &CoefficientField,
    rho: f64,
    seed: u64,
) -> Result<SeqCellResult> {
    let lv = levels(cfg);
    let k = truth.len();
    if let Some(spec) = prior.series_single(k) {
        let quadrature = match cfg.sampler.method {
            CoordMethod::Quadrature => true,
            CoordMethod::Mcmc => false,
            CoordMethod::Auto => obs.n >= cfg.sampler.quadrature_min_n,
        };
        if quadrature {
            let pc = SequencePosteriorConfig {
                levels: lv.to_vec(),
                seed,
                quadrature: QuadratureConfig::default(),
            };
            let post = sequence_posterior(obs, &spec, rho, PosteriorMethod::Quadrature, &pc, None)?;
            let summaries = post
                .summaries
                .iter()
                .map(|s| CoefSummary {
                    mean: s.mean,
                    sd: s.sd(),
                    lo: s.quantile(lv[0]).unwrap_or(f64::NAN),
                    hi: s.quantile(lv[2]).unwrap_or(f64::NAN),
                })
                .collect();
            return Ok(SeqCellResult {
                summaries,
                draws: None,
                method: "quadrature".into(),
                acceptance: None,
            });
        }
        let (n_draws, burn_in) = budget(cfg, paper, (3000, 1000), (8000, 4000))?;
        let kind = cfg.sampler.mcmc_sampler;
        let scales = spec.scales();
        let chains = (0..k)
            .into_par_iter()
            .map(|i| {
                let p = CoordProblem {
                    x: obs.x[i],
                    n: obs.n,
                    kappa: obs.kappa(i),
                    sigma: scales[i],
                    tail: spec.tail,
                    rho,
                };
                let s = derive_seed(seed, i as u64);
                let init = rng_from_seed(derive_seed(s, 1)).random_range(-2.0..2.0);
                let sampler = match kind {
                    McmcKind::Slice => CoordSampler::Slice,
                    McmcKind::RandomWalk => CoordSampler::default_random_walk(&p)?,
                };
                coord_sample_mcmc_from(&p, sampler, n_draws, burn_in, s, Some(init)).map_err(|e| e.at_coordinate(i))
            })
            .collect::<Result<Vec<_>>>()?;
        let kept = chains[0].n_kept();
        let draws: Vec<Vec<f64>> = (0..kept).map(|d| chains.iter().map(|c| c.draw(d)[0]).collect()).collect();
        let summaries = chains.iter().map(|c| chain_summaries(c, &lv)[0]).collect();
        let acc = mean(&chains.iter().map(|c| c.post_burn_in_acceptance.unwrap_or(f64::NAN)).collect::<Vec<_>>());
        return Ok(SeqCellResult {
            summaries,
            draws: Some(draws),
            method: mcmc_name(kind).into(),
            acceptance: Some(acc),
        });
    }
    let (chain, param) = hierarchical_chain(cfg, paper, prior, obs, rho, seed)?;
    Ok(SeqCellResult {
        summaries: chain_summaries(&chain, &lv),
        draws: Some(chain.iter().map(<[f64]>::to_vec).collect()),
        method: parametrization_name(param).into(),
        acceptance: chain.block_rate("alpha"),
    })
}

fn inverse_regression(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    let k = cfg.truncation_or(cfg.default_truncation());
    let truth = single_truth(cfg, k)?;
    let forward = match cfg.forward_kind() {
        ForwardKind::Volterra => Some(volterra_multipliers(k)?),
        ForwardKind::Identity => None,
    };
    let grid: Vec<f64> = (0..FUNCTION_POINTS).map(|i| i as f64 / (FUNCTION_POINTS - 1) as f64).collect();
    let basis = cosine_basis(k, &grid);
    let truth_fn = synthesize(&basis, truth.values());
    let ns = cfg.n_values();
    let observations = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| simulate(&truth, n, forward.as_deref(), seed_for(cfg.seed, STREAM_DATA, j)))
        .collect::<Result<Vec<_>>>()?;
    for (n, obs) in ns.iter().zip(&observations) {
        sink.table(&format!("observations/n{}.csv", n_label(*n)), &observation_table(obs))?;
    }
    let rhos = cfg.rho_values();
    let mut cells = Vec::new();
    for (pi, prior) in cfg.priors.iter().enumerate() {
        for (j, obs) in observations.iter().enumerate() {
            for &rho in &rhos {
                cells.push((pi, prior, j, obs, rho));
            }
        }
    }
    let z = norm_quantile(0.5 + cfg.sampler.credible_level / 2.0);
    let outputs = cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(_, prior, _, obs, rho))| -> Result<CellOutput> {
            let label = format!("{}_n{}_rho{}", prior.label(), n_label(obs.n), rho);
            let res = sequence_cell(cfg, paper, prior, obs, &truth, rho, seed_for(cfg.seed, STREAM_CELL, ci))
                .map_err(|e| e.context(&label))?;
            let means: Vec<f64> = res.summaries.iter().map(|s| s.mean).collect();
            let band = match &res.draws {
                Some(d) => {
                    let fdraws: Vec<Vec<f64>> = d.iter().map(|c| synthesize(&basis, c)).collect();
                    let mut b = draw_band(&fdraws, cfg.sampler.credible_level, RegionNorm::L2)?;
                    b.mean = synthesize(&basis, &means);
                    b
                }
                None => {
                    // pointwise normal approximation from coordinate variances
                    let m = synthesize(&basis, &means);
                    let sd: Vec<f64> = (0..grid.len())
                        .map(|i| {
                            basis
                                .iter()
                                .zip(&res.summaries)
                                .map(|(b, s)| (b[i] * s.sd).powi(2))
                                .sum::<f64>()
                                .sqrt()
                        })
                        .collect();
                    Band {
                        lo: m.iter().zip(&sd).map(|(a, s)| a - z * s).collect(),
                        hi: m.iter().zip(&sd).map(|(a, s)| a + z * s).collect(),
                        mean: m,
                    }
                }
            };
            let err = means
                .iter()
                .zip(truth.values())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(CellOutput {
                tables: vec![
                    (
                        format!("cells/{label}/coefficients.csv"),
                        coefficient_table(FieldLayout::Single, truth.values(), Some(&obs.x), &res.summaries),
                    ),
                    (format!("cells/{label}/function.csv"), band_table(&label, &grid, &truth_fn, &band)),
                ],
                error_row: vec![
                    prior.label(),
                    fmt_f64(obs.n),
                    fmt_f64(rho),
                    res.method,
                    "l2".into(),
                    fmt_f64(err),
                    opt_cell(res.acceptance),
                ],
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_cells(sink, outputs)
}

fn write_cells(sink: &mut Sink, outputs: Vec<CellOutput>) -> Result<()> {
    let mut errors = Table::new(schema::ERRORS);
    let mut labels = Vec::new();
    for out in outputs {
        for (path, t) in &out.tables {
            sink.table(path, t)?;
        }
        errors.push(out.error_row);
        labels.push(out.label);
    }
    sink.extra.insert("cells".into(), json!(labels));
    sink.table("errors.csv", &errors)
}

fn single_truth(cfg: &ExperimentConfig, k: usize) -> Result<CoefficientField> {
    let spec = cfg.truth.clone().unwrap_or(TruthSpec::SobolevSin);
    let truth = make_truth(&spec, k).map_err(|e| Error::config("truth", e.to_string()))?;
    if truth.layout() != FieldLayout::Single || truth.len() != k {
        return Err(Error::config(
            "truth",
            format!("{} needs a single-layout truth of length {k}", cfg.experiment.name()),
        ));
    }
    Ok(truth)
}

// -------------------------------------------------------------- dj94

fn dj94_reference(prior: &PriorConfig, signal_index: usize) -> Option<f64> {
    match prior {
        PriorConfig::Series {
            scale: ScaleKind::Ot { .. },
            tail: TailKind::Cauchy,
            ..
        } => Some(DJ94_REFERENCE_OT[signal_index]),
        PriorConfig::HierarchicalGaussian { .. } => Some(DJ94_REFERENCE_HIERARCHICAL[signal_index]),
        _ => None,
    }
}

fn dj94(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    let s = cfg.dj94.clone().unwrap_or_default();
    if cfg.wavelet.is_some_and(|w| w != WaveletName::Symmlet8) {
        return Err(Error::config("wavelet", "the DJ94 benchmark is analyzed with symmlet8"));
    }
    let filter = WaveletFilter::new(WaveletName::Symmlet8);
    let lv = levels(cfg);
    let mut truths = Vec::new();
    let mut snrs = serde_json::Map::new();
    for (j, &signal) in s.signals.iter().enumerate() {
        let truth = make_truth(
            &TruthSpec::Dj94 {
                signal,
                target_snr: s.target_snr,
            },
            s.max_level,
        )?;
        let samples = dwt_inverse(&truth, &filter)?;
        snrs.insert(signal.name().into(), json!(snr(&samples, 1.0)));
        let obs = simulate(&truth, 1.0, None, seed_for(cfg.seed, STREAM_DATA, j))?;
        sink.table(&format!("observations/{}.csv", signal.name()), &observation_table(&obs))?;
        truths.push((signal, truth, samples, obs));
    }
    sink.extra.insert("snr".into(), serde_json::Value::Object(snrs.clone()));
    let mut cells = Vec::new();
    for t in &truths {
        for prior in &cfg.priors {
            cells.push((t, prior));
        }
    }
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(ci, &((signal, truth, samples, obs), prior))| -> Result<(Vec<(String, Table)>, Vec<String>)> {
            let label = format!("{}_{}", signal.name(), prior.label());
            let seed = seed_for(cfg.seed, STREAM_CELL, ci);
            let (chain, acceptance) = match prior.series_wavelet(s.max_level, crate::sequence_models::DJ94_COARSE_LEVEL)
            {
                Some(spec) => {
                    let loglik = WhiteNoiseLikelihood::new(obs, 1.0)?;
                    let (n_draws, burn_in) = budget(cfg, paper, (20_000, 10_000), (200_000, 100_000))?;
                    let mut sc = SamplerConfig::new(
                        Algorithm::WhitenedMala {
                            step: cfg.sampler.step.unwrap_or(0.5),
                        },
                        n_draws,
                        burn_in,
                        seed,
                    );
                    sc.thin = thin_for(cfg, paper, n_draws, burn_in);
                    sc.init = Init::Data;
                    let c = run_sampler(&loglik, &spec, &sc).map_err(|e| e.context(&label))?;
                    let a = c.post_burn_in_acceptance;
                    (c, a)
                }
                None => {
                    let (c, _) = hierarchical_chain(cfg, paper, prior, obs, 1.0, seed).map_err(|e| e.context(&label))?;
                    let a = c.block_rate("alpha");
                    (c, a)
                }
            };
            let summaries = chain_summaries(&chain, &lv);
            let mean_field = truth.with_values(summaries.iter().map(|c| c.mean).collect())?;
            let big_n = truth.len() as f64;
            let err = truth.l2_distance(&mean_field) / big_n.sqrt();
            let sample_draws = chain
                .iter()
                .map(|d| dwt_inverse(&truth.with_values(d.to_vec())?, &filter))
                .collect::<Result<Vec<_>>>()?;
            let mut band = draw_band(&sample_draws, cfg.sampler.credible_level, RegionNorm::L2)?;
            band.mean = dwt_inverse(&mean_field, &filter)?;
            let grid: Vec<f64> = (0..samples.len()).map(|i| i as f64 / samples.len() as f64).collect();
            let tables = vec![
                (
                    format!("cells/{label}/coefficients.csv"),
                    coefficient_table(truth.layout(), truth.values(), Some(&obs.x), &summaries),
                ),
                (format!("cells/{label}/function.csv"), band_table(&label, &grid, samples, &band)),
            ];
            let row = vec![
                signal.name().to_string(),
                prior.label(),
                fmt_f64(err),
                opt_cell(dj94_reference(prior, dj94_signal_index(*signal))),
                opt_cell(acceptance),
                fmt_f64(snr(samples, 1.0)),
            ];
            Ok((tables, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(schema::DJ94);
    let mut errors = serde_json::Map::new();
    for (tables, row) in rows {
        for (p, tb) in &tables {
            sink.table(p, tb)?;
        }
        errors.insert(format!("{}/{}", row[0], row[1]), json!(row[2].parse::<f64>().unwrap_or(f64::NAN)));
        t.push(row);
    }
    sink.extra.insert("l2_errors".into(), serde_json::Value::Object(errors));
    sink.table("dj94_errors.csv", &t)
}

fn dj94_signal_index(s: crate::sequence_models::Dj94Signal) -> usize {
    crate::sequence_models::Dj94Signal::ALL
        .iter()
        .position(|x| *x == s)
        .expect("signal listed in ALL")
}

// ------------------------------------------- density and classification

enum FunctionData {
    Density(crate::model_likelihoods::DensityData),
    Classification(crate::model_likelihoods::ClassificationData),
}

fn function_model(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    let is_density = cfg.experiment == Experiment::DensityEstimation;
    let l = cfg.truncation_or(cfg.default_truncation());
    let filter = WaveletFilter::new(cfg.wavelet_name());
    let spec = cfg.truth.clone().unwrap_or(TruthSpec::DensityLogTruth);
    let truth = make_truth(&spec, l).map_err(|e| Error::config("truth", e.to_string()))?;
    let coarse = truth
        .coarse_level()
        .ok_or_else(|| Error::config("truth", "function models need a wavelet-layout truth"))?;
    if truth.depth() != Some(l + 1) {
        return Err(Error::config("truth", format!("truth must have 2^{} coefficients", l + 1)));
    }
    let synth = Synthesizer::for_field(filter, &truth)?;
    let f0 = grid_function(&synth, truth.values())?;
    let transform = |f: &[f64]| -> Result<Vec<f64>> {
        if is_density {
            normalize_density(f)
        } else {
            Ok(f.iter().map(|&u| logistic_link(u)).collect())
        }
    };
    let target = transform(&f0)?;
    let m = synth.grid_len();
    let out_idx: Vec<usize> = (0..=m).step_by(OUTPUT_STRIDE).collect();
    let grid: Vec<f64> = out_idx.iter().map(|&i| i as f64 / m as f64).collect();
    let sub = |v: &[f64]| -> Vec<f64> { out_idx.iter().map(|&i| v[i]).collect() };
    let target_out = sub(&target);
    let weights = trapezoid_weights(grid.len(), 0.0, 1.0);

    let ns = cfg.n_values();
    let data = ns
        .iter()
        .enumerate()
        .map(|(j, &n)| -> Result<FunctionData> {
            let s = seed_for(cfg.seed, STREAM_DATA, j);
            Ok(if is_density {
                FunctionData::Density(sample_density(&target, n as usize, s)?)
            } else {
                FunctionData::Classification(sample_classification(&f0, n as usize, s)?)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (n, d) in ns.iter().zip(&data) {
        let t = match d {
            FunctionData::Density(d) => density_data_table(d),
            FunctionData::Classification(d) => classification_data_table(d),
        };
        sink.table(&format!("data/n{}.csv", n_label(*n)), &t)?;
    }

    let rhos = cfg.rho_values();
    let mut cells = Vec::new();
    for prior in &cfg.priors {
        for (j, d) in data.iter().enumerate() {
            for &rho in &rhos {
                cells.push((prior, ns[j], d, rho));
            }
        }
    }
    let lv = levels(cfg);
    let outputs = cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(prior, n, d, rho))| -> Result<CellOutput> {
            let label = format!("{}_n{}_rho{}", prior.label(), n_label(n), rho);
            let spec = prior
                .series_wavelet(l, coarse)
                .ok_or_else(|| Error::config("priors", "function models take series priors"))?;
            let (n_draws, burn_in) = budget(cfg, paper, (10_000, 5000), (50_000, 25_000))?;
            let algorithm = match cfg.sampler.algorithm {
                FunctionAlgorithm::Pcn => {
                    let beta = cfg.sampler.pcn_beta.unwrap_or(0.2);
                    if spec.tail.kind == TailKind::Gaussian {
                        Algorithm::Pcn { beta }
                    } else {
                        Algorithm::WhitenedPcn { beta }
                    }
                }
                FunctionAlgorithm::Mala => Algorithm::WhitenedMala {
                    step: cfg.sampler.step.unwrap_or(0.5),
                },
            };
            let mut sc = SamplerConfig::new(algorithm, n_draws, burn_in, seed_for(cfg.seed, STREAM_CELL, ci));
            sc.thin = thin_for(cfg, paper, n_draws, burn_in);
            sc.init = Init::PriorDraw;
            let chain = match d {
                FunctionData::Density(d) => run_sampler(&DensityLikelihood::new(synth.clone(), d, rho)?, &spec, &sc),
                FunctionData::Classification(d) => {
                    run_sampler(&ClassificationLikelihood::new(synth.clone(), d, rho)?, &spec, &sc)
                }
            }
            .map_err(|e| e.context(&label))?;
            let fdraws = chain
                .iter()
                .map(|c| Ok(sub(&transform(&grid_function(&synth, c)?)?)))
                .collect::<Result<Vec<_>>>()?;
            let band = draw_band(&fdraws, cfg.sampler.credible_level, RegionNorm::L1)?;
            let err: f64 = band
                .mean
                .iter()
                .zip(&target_out)
                .zip(&weights)
                .map(|((a, b), w)| w * (a - b).abs())
                .sum();
            let summaries = chain_summaries(&chain, &lv);
            Ok(CellOutput {
                tables: vec![
                    (
                        format!("cells/{label}/coefficients.csv"),
                        coefficient_table(truth.layout(), truth.values(), None, &summaries),
                    ),
                    (format!("cells/{label}/function.csv"), band_table(&label, &grid, &target_out, &band)),
                ],
                error_row: vec![
                    prior.label(),
                    fmt_f64(n),
                    fmt_f64(rho),
                    match algorithm {
                        Algorithm::Pcn { .. } => "pcn",
                        Algorithm::WhitenedPcn { .. } => "whitened_pcn",
                        _ => "whitened_mala",
                    }
                    .into(),
                    "l1".into(),
                    fmt_f64(err),
                    opt_cell(chain.post_burn_in_acceptance),
                ],
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_cells(sink, outputs)
}

// ------------------------------------------------------- rate sweep

/// Mean posterior-mean `L^2` error over seeds at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: f64,
    pub mean_error: f64,
    /// Standard error of `mean_error` across seeds.
    pub se: f64,
    pub errors: Vec<f64>,
}

/// Posterior-mean errors (quadrature path, `rho = 1`) over `seeds`
/// independent data sets for each `n`.
pub fn rate_sweep_points(
    prior: &PriorSpec,
    truth: &CoefficientField,
    forward: Option<&[f64]>,
    ns: &[f64],
    seeds: usize,
    seed: u64,
) -> Result<Vec<RatePoint>> {
    if seeds == 0 {
        return Err(Error::domain("need at least one seed"));
    }
    let pc = SequencePosteriorConfig {
        levels: Vec::new(),
        seed,
        quadrature: QuadratureConfig::default(),
    };
    ns.iter()
        .enumerate()
        .map(|(j, &n)| {
            let errors = (0..seeds)
                .into_par_iter()
                .map(|s| {
                    let obs = simulate(truth, n, forward, seed_for(seed, STREAM_DATA, j * seeds + s))?;
                    let post = sequence_posterior(&obs, prior, 1.0, PosteriorMethod::Quadrature, &pc, Some(truth))?;
                    Ok(post.l2_error.expect("truth supplied"))
                })
                .collect::<Result<Vec<f64>>>()?;
            let m = mean(&errors);
            let se = if seeds > 1 {
                (variance(&errors) / seeds as f64).sqrt()
            } else {
                f64::NAN
            };
            Ok(RatePoint {
                n,
                mean_error: m,
                se,
                errors,
            })
        })
        .collect()
}

fn rate_sweep(cfg: &ExperimentConfig, sink: &mut Sink) -> Result<()> {
    let k = cfg.truncation_or(cfg.default_truncation());
    let truth = single_truth(cfg, k)?;
    let seeds = cfg.rate_sweep.clone().unwrap_or_default().seeds;
    let forward = match cfg.forward_kind() {
        ForwardKind::Volterra => Some(volterra_multipliers(k)?),
        ForwardKind::Identity => None,
    };
    let reference = match cfg.forward_kind() {
        ForwardKind::Identity => -1.0 / 3.0,
        ForwardKind::Volterra => -1.0 / 5.0,
    };
    let mut t = Table::new(schema::RATE);
    t.meta.insert("seeds".into(), seeds.to_string());
    let mut slopes = serde_json::Map::new();
    for (i, prior) in cfg.priors.iter().enumerate() {
        let spec = prior
            .series_single(k)
            .ok_or_else(|| Error::config(format!("priors[{i}]"), "rate_sweep takes series priors"))?;
        let pts = rate_sweep_points(&spec, &truth, forward.as_deref(), cfg.n_values(), seeds, seed_for(cfg.seed, STREAM_CELL, i))
            .map_err(|e| e.context(&prior.label()))?;
        for p in &pts {
            t.push(vec![
                prior.label(),
                fmt_f64(p.n),
                fmt_f64(p.mean_error),
                fmt_f64(p.se),
                fmt_f64(p.n.ln()),
                fmt_f64(p.mean_error.ln()),
                fmt_f64((p.mean_error - 2.0 * p.se).max(f64::MIN_POSITIVE).ln()),
                fmt_f64((p.mean_error + 2.0 * p.se).ln()),
            ]);
        }
        let fit = fit_rate_slope(&pts.iter().map(|p| (p.n, p.mean_error)).collect::<Vec<_>>())?;
        slopes.insert(
            prior.label(),
            json!({"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2, "reference_slope": reference}),
        );
    }
    sink.table("rate_sweep.csv", &t)?;
    let slopes = serde_json::Value::Object(slopes);
    sink.json("rate_slope.json", &slopes)?;
    sink.extra.insert("slopes".into(), slopes);
    Ok(())
}

// ------------------------------------------------------- prior mass

fn prior_mass_rows(t: &mut Table, rows: &[crate::theory_checks::MassTrendRow]) {
    for r in rows {
        t.push(vec![
            fmt_f64(r.n),
            fmt_f64(r.eps_n),
            fmt_f64(r.radius),
            r.estimate.hits.to_string(),
            r.estimate.n_mc.to_string(),
            fmt_f64(r.estimate.p_hat),
            fmt_f64(r.estimate.ci.0),
            fmt_f64(r.estimate.ci.1),
            fmt_f64(r.normalized_log_mass),
        ]);
    }
}

#[allow(clippy::too_many_arguments)]
fn mass_report(
    name: &str,
    prior: &PriorSpec,
    truth: &CoefficientField,
    rate: &RateSpec,
    ns: &[f64],
    d1_grid: &[f64],
    min_hits: usize,
    n_mc: usize,
    lower_bound: f64,
    seed: u64,
) -> Result<(CheckReport, Vec<crate::theory_checks::MassTrendRow>)> {
    let (d1, rows) = prior_mass_trend(prior, truth, rate, ns, d1_grid, min_hits, n_mc, seed)?;
    let enough = rows.iter().all(|r| r.estimate.hits >= min_hits);
    let lowest = rows.iter().map(|r| r.normalized_log_mass).fold(f64::INFINITY, f64::min);
    let status = if enough && lowest >= lower_bound {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    let report = CheckReport::new(
        name,
        json!({"n": ns, "rate": rate, "d1_grid": d1_grid, "min_hits": min_hits, "n_mc": n_mc, "lower_bound": lower_bound}),
        json!({"d1": d1, "min_normalized_log_mass": lowest, "rows": rows}),
        status,
    );
    Ok((report, rows))
}

fn prior_mass(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    let k = cfg.truncation_or(cfg.default_truncation());
    let truth = single_truth(cfg, k)?;
    let s = cfg.prior_mass.clone().unwrap_or_default();
    let n_mc = s.n_mc.unwrap_or(if paper { 200_000 } else { 20_000 });
    let mut reports = Vec::new();
    for (i, prior) in cfg.priors.iter().enumerate() {
        let spec = prior
            .series_single(k)
            .ok_or_else(|| Error::config(format!("priors[{i}]"), "prior_mass takes series priors"))?;
        let rate = cfg.mass_rate(prior);
        let (report, rows) = mass_report(
            &format!("prior_mass_{}", prior.label()),
            &spec,
            &truth,
            &rate,
            cfg.n_values(),
            &s.d1_grid,
            s.min_hits,
            n_mc,
            s.lower_bound,
            seed_for(cfg.seed, STREAM_CELL, i),
        )
        .map_err(|e| e.context(&prior.label()))?;
        let mut t = Table::new(schema::PRIOR_MASS);
        t.meta.insert("prior".into(), prior.label());
        prior_mass_rows(&mut t, &rows);
        sink.table(&format!("prior_mass_{}.csv", prior.label()), &t)?;
        reports.push(report);
    }
    sink.extra.insert(
        "passed".into(),
        json!(reports.iter().filter(|r| r.passed()).count()),
    );
    sink.json("prior_mass_report.json", &reports)
}

// ----------------------------------------------------- theory suite

fn status(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

fn theory_suite(cfg: &ExperimentConfig, paper: bool, sink: &mut Sink) -> Result<()> {
    let seed = |i: usize| seed_for(cfg.seed, STREAM_CHECK, i);
    let mut reports = Vec::new();

    // Whitening pushes the standard normal to the standard Cauchy law.
    let draws = if paper { 1_000_000 } else { 100_000 };
    let mut rng = rng_from_seed(seed(0));
    let mut t: Vec<f64> = (0..draws)
        .map(|_| whiten_transform(StandardNormal.sample(&mut rng)))
        .collect();
    let cauchy = TailDensity::cauchy();
    let ks = ks_statistic(&mut t, |x| cauchy.cdf(x));
    reports.push(CheckReport::new(
        "whitened_transform_ks",
        json!({"draws": draws, "threshold": 0.01}),
        json!({"ks": ks}),
        status(ks < 0.01),
    ));

    // Conjugate Gaussian coordinate posterior.
    let n = 1e4;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let sigma = 10f64.powf(-3.0 + 0.4 * i as f64);
        for j in 0..10 {
            let x = -0.5 + j as f64 / 9.0;
            let q = coord_summary_quadrature_with(
                &CoordProblem::direct(x, n, sigma, TailDensity::gaussian()),
                &[],
                &QuadratureConfig::default(),
            )?;
            let g = n * sigma * sigma;
            worst = worst.max((q.mean - g * x / (1.0 + g)).abs());
        }
    }
    reports.push(CheckReport::new(
        "gaussian_conjugacy",
        json!({"n": n, "grid": "10 x 10 (sigma, x)", "tolerance": 1e-8}),
        json!({"max_abs_error": worst}),
        status(worst < 1e-8),
    ));

    // Renyi divergence of white-noise laws.
    let mut rng = rng_from_seed(seed(1));
    let f: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
    let f0: Vec<f64> = (0..8).map(|_| StandardNormal.sample(&mut rng)).collect();
    let (nn, rho) = (50.0, 0.5);
    let d = white_noise_renyi(&f, &f0, None, nn, rho)?;
    let exact = nn * rho * f.iter().zip(&f0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 2.0;
    let rel = (d - exact).abs() / exact;
    reports.push(CheckReport::new(
        "renyi_white_noise_identity",
        json!({"n": nn, "rho": rho, "dim": 8}),
        json!({"numeric": d, "closed_form": exact, "relative_error": rel}),
        status(rel < 1e-6),
    ));

    // Truth smoothness.
    let truth = make_truth(&TruthSpec::SobolevSin, 10_000)?;
    let ball = SmoothnessBall::Sobolev { beta: 0.9, l: 2.0 };
    let inside = membership(&truth, &ball)?;
    reports.push(CheckReport::new(
        "sobolev_sin_membership",
        json!({"ball": ball, "truncation": 10_000}),
        json!({"member": inside}),
        status(inside),
    ));

    // Contraction-rate slope in the direct model.
    let k = 1000;
    let seeds = if paper { 20 } else { 5 };
    let ot = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 0.5 }, TailDensity::cauchy(), k);
    let truth_k = make_truth(&TruthSpec::SobolevSin, k)?;
    let ns = [1e2, 1e3, 1e4, 1e5, 1e6];
    let pts = rate_sweep_points(&ot, &truth_k, None, &ns, seeds, seed(2))?;
    let fit = fit_rate_slope(&pts.iter().map(|p| (p.n, p.mean_error)).collect::<Vec<_>>())?;
    reports.push(CheckReport::new(
        "rate_slope_direct",
        json!({"prior": "ot a=1 delta=0.5 cauchy", "truncation": k, "seeds": seeds, "n": ns, "band": [-0.40, -0.26]}),
        json!({"slope": fit.slope, "r2": fit.r2, "errors": pts.iter().map(|p| p.mean_error).collect::<Vec<_>>()}),
        status((-0.40..=-0.26).contains(&fit.slope)),
    ));

    // Prior mass of shrinking balls.
    let mass_prior = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 1.0 }, TailDensity::cauchy(), 100);
    let (report, _) = mass_report(
        "prior_mass_trend",
        &mass_prior,
        &make_truth(&TruthSpec::SobolevSin, 100)?,
        &RateSpec::new(RateFlavor::L2Ot, 1.0, 0.0, 1.0),
        &[50.0, 100.0, 200.0],
        &[0.1, 0.25, 0.5, 1.0],
        30,
        if paper { 200_000 } else { 20_000 },
        -1.0,
        seed(3),
    )?;
    reports.push(report);

    // Coordinatewise Bernstein-von Mises at moderate n (reported only).
    let kb = 50;
    let truth_b = make_truth(&TruthSpec::SobolevSin, kb)?;
    let obs = simulate(&truth_b, 1e4, None, seed(4))?;
    let prior_b = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 0.5 }, TailDensity::cauchy(), kb);
    let mut sc = SamplerConfig::new(Algorithm::WhitenedMala { step: 0.5 }, 20_000, 10_000, seed(5));
    sc.init = Init::Data;
    let chain = run_sampler(&WhiteNoiseLikelihood::new(&obs, 1.0)?, &prior_b, &sc)?;
    let ks = bvm_coordinate_check(&chain, &obs, &[0, 1, 2])?;
    reports.push(CheckReport::new(
        "bvm_coordinates",
        json!({"n": 1e4, "truncation": kb, "coordinates": [0, 1, 2], "draws": chain.n_kept()}),
        json!({"ks": ks, "acceptance": chain.post_burn_in_acceptance}),
        CheckStatus::ReportedOnly,
    ));

    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.check_name.as_str())
        .collect();
    sink.extra.insert("failed_checks".into(), json!(failed));
    sink.json("theory_report.json", &reports)
}
