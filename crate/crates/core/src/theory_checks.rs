//! Finite-sample checks of the theoretical quantities: smoothness norms,
//! contraction-rate formulas, prior mass of balls around the truth,
//! error-vs-n slopes and coordinatewise normality of the posterior.
//!
//! The asymptotic statements cannot be verified as such; prior mass is only
//! reachable by direct Monte Carlo at small `n` (probabilities below about
//! `1e-8` are out of reach), so it is checked as a trend across an `n` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::ChainOutput;
use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};
use crate::priors::PriorSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sequence_models::SequenceObservation;
use crate::special::norm_cdf;
use crate::stats::{ks_statistic, linear_fit, wilson_interval};
use crate::wavelet::{Synthesizer, WaveletFilter, WaveletName};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothnessBall {
    /// `sum_k k^{2 beta} f_k^2 <= L^2` (single layout).
    Sobolev { beta: f64, l: f64 },
    /// `max_k |f_lk| <= 2^{-l (1/2 + beta)} L` at every level (wavelet layout).
    Holder { beta: f64, l: f64 },
    /// `sum_l 2^{r l (beta + 1/2 - 1/r)} sum_k |f_lk|^r <= L^r` (wavelet layout).
    Besov { beta: f64, r: f64, l: f64 },
}

impl SmoothnessBall {
    pub fn validate(&self) -> Result<()> {
        let (beta, l) = match *self {
            SmoothnessBall::Sobolev { beta, l } | SmoothnessBall::Holder { beta, l } => (beta, l),
            SmoothnessBall::Besov { beta, r, l } => {
                if !(1.0..=2.0).contains(&r) {
                    return Err(Error::domain(format!("Besov r = {r} must lie in [1, 2]")));
                }
                (beta, l)
            }
        };
        if !(beta > 0.0 && l > 0.0) {
            return Err(Error::domain("ball parameters beta and L must be positive"));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        match *self {
            SmoothnessBall::Sobolev { l, .. } | SmoothnessBall::Holder { l, .. } | SmoothnessBall::Besov { l, .. } => l,
        }
    }
}

/// Wavelet level of flat index `i`; the scaling block counts as the coarse level.
fn wavelet_level(layout: FieldLayout, i: usize) -> f64 {
    match layout {
        FieldLayout::Wavelet { coarse_level } => layout.level_of(i).unwrap_or(coarse_level) as f64,
        FieldLayout::Single => unreachable!("checked by caller"),
    }
}

/// The norm whose sublevel set at `L` is the ball: `sqrt(sum k^{2 beta} f_k^2)`
/// (Sobolev), `max_l 2^{l (1/2 + beta)} max_k |f_lk|` (Hölder) or the
/// weighted `l^r` norm (Besov). Exact on the truncated field.
pub fn ball_norm(field: &CoefficientField, ball: &SmoothnessBall) -> Result<f64> {
    ball.validate()?;
    let layout = field.layout();
    let v = field.values();
    match (*ball, layout) {
        (SmoothnessBall::Sobolev { beta, .. }, FieldLayout::Single) => Ok(v
            .iter()
            .enumerate()
            .map(|(i, f)| ((i + 1) as f64).powf(2.0 * beta) * f * f)
            .sum::<f64>()
            .sqrt()),
        (SmoothnessBall::Holder { beta, .. }, FieldLayout::Wavelet { .. }) => Ok(v
            .iter()
            .enumerate()
            .map(|(i, f)| 2f64.powf(wavelet_level(layout, i) * (0.5 + beta)) * f.abs())
            .fold(0.0, f64::max)),
        (SmoothnessBall::Besov { beta, r, .. }, FieldLayout::Wavelet { .. }) => Ok(v
            .iter()
            .enumerate()
            .map(|(i, f)| 2f64.powf(r * wavelet_level(layout, i) * (beta + 0.5 - 1.0 / r)) * f.abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)),
        (SmoothnessBall::Sobolev { .. }, _) => Err(Error::domain("Sobolev norms need a single-layout field")),
        _ => Err(Error::domain("Hölder and Besov norms need a wavelet-layout field")),
    }
}

/// Whether the field lies in the (closed) ball.
pub fn membership(field: &CoefficientField, ball: &SmoothnessBall) -> Result<bool> {
    Ok(ball_norm(field, ball)? <= ball.radius())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFlavor {
    /// `(log n)^{(1 + (1 + kappa) beta) / (2 beta + 1)} n^{-beta / (2 beta + 1)}`
    L2Ht,
    /// `(log n)^{(1 + kappa)(1 + delta) beta / (2 beta + 1)} n^{-beta / (2 beta + 1)}`
    L2Ot,
    /// `(log log n)^{2 / (1 + 2 beta)} (log n)^{(1 + (1 + kappa) beta) / (1 + 2 beta)} n^{-beta / (2 beta + 1)}`
    LinfHt,
    /// `(log n)^{(2 + 2 kappa) beta / (1 + 2 beta)} n^{-beta / (2 beta + 1)}`
    LinfOt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSpec {
    pub flavor: RateFlavor,
    pub beta: f64,
    pub kappa: f64,
    /// Exponent excess of the OT scales; only read by [`RateFlavor::L2Ot`].
    #[serde(default)]
    pub delta: f64,
}

impl RateSpec {
    pub fn new(flavor: RateFlavor, beta: f64, kappa: f64, delta: f64) -> Self {
        Self {
            flavor,
            beta,
            kappa,
            delta,
        }
    }
}

/// `epsilon_n` for the given flavor, natural logarithms throughout; needs
/// `n >= e` so that `log log n >= 0`.
pub fn rate_epsilon_n(spec: &RateSpec, n: f64) -> Result<f64> {
    let RateSpec {
        flavor,
        beta,
        kappa,
        delta,
    } = *spec;
    if !(beta > 0.0 && kappa >= 0.0 && delta >= 0.0) {
        return Err(Error::domain("rate parameters must be positive"));
    }
    if !(n >= std::f64::consts::E) {
        return Err(Error::domain(format!("n = {n} must be at least e")));
    }
    let ln = n.ln();
    let d = 2.0 * beta + 1.0;
    let poly = n.powf(-beta / d);
    let factor = match flavor {
        RateFlavor::L2Ht => ln.powf((1.0 + (1.0 + kappa) * beta) / d),
        RateFlavor::L2Ot => ln.powf((1.0 + kappa) * (1.0 + delta) * beta / d),
        RateFlavor::LinfHt => ln.ln().powf(2.0 / d) * ln.powf((1.0 + (1.0 + kappa) * beta) / d),
        RateFlavor::LinfOt => ln.powf((2.0 + 2.0 * kappa) * beta / d),
    };
    Ok(factor * poly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum MassNorm {
    /// Coefficient (equivalently function) `L^2` distance.
    L2,
    /// Supremum of the function difference on the fine dyadic grid.
    Linf { wavelet: WaveletName },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorMassEstimate {
    pub p_hat: f64,
    pub hits: usize,
    pub n_mc: usize,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
}

const MASS_CHUNK: usize = 4096;

/// Direct Monte Carlo estimate of `Pi[||f - f0|| < eps]` for the truncated
/// prior. Coefficients of `f0` beyond the truncation enter the `L^2` distance
/// as a fixed offset. Chunks of draws use derived seeds, so the estimate does
/// not depend on the thread count.
pub fn prior_mass_estimate(
    prior: &PriorSpec,
    f0: &CoefficientField,
    eps: f64,
    norm: MassNorm,
    n_mc: usize,
    seed: u64,
) -> Result<PriorMassEstimate> {
    prior.validate()?;
    if !(eps >= 0.0) {
        return Err(Error::domain("eps must be non-negative"));
    }
    if n_mc < 1000 {
        return Err(Error::domain("n_mc must be at least 1000"));
    }
    if f0.layout() != prior.field_layout() {
        return Err(Error::domain("truth and prior layouts differ"));
    }
    let scales = prior.scales();
    let k = scales.len();
    let f0v = f0.values();
    let tail_sq: f64 = f0v.iter().skip(k).map(|v| v * v).sum();
    let synth = match norm {
        MassNorm::L2 => None,
        MassNorm::Linf { wavelet } => {
            if f0v.len() != k {
                return Err(Error::domain("sup-norm balls need a truth of the prior's length"));
            }
            let FieldLayout::Wavelet { coarse_level } = prior.field_layout() else {
                return Err(Error::domain("sup-norm balls need a wavelet-layout prior"));
            };
            Some(Synthesizer::new(WaveletFilter::new(wavelet), coarse_level, prior.truncation + 1)?)
        }
    };
    let chunks = n_mc.div_ceil(MASS_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<usize> {
            let mut rng = rng_from_seed(derive_seed(seed, c as u64));
            let size = MASS_CHUNK.min(n_mc - c * MASS_CHUNK);
            let mut diff = vec![0.0; k];
            let mut hits = 0;
            for _ in 0..size {
                for i in 0..k {
                    diff[i] = scales[i] * prior.tail.sample(&mut rng) - f0v.get(i).copied().unwrap_or(0.0);
                }
                let inside = match &synth {
                    None => (diff.iter().map(|d| d * d).sum::<f64>() + tail_sq).sqrt() < eps,
                    Some(s) => s.grid_values(&diff)?.iter().fold(0.0f64, |m, v| m.max(v.abs())) < eps,
                };
                hits += usize::from(inside);
            }
            Ok(hits)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(PriorMassEstimate {
        p_hat: hits as f64 / n_mc as f64,
        hits,
        n_mc,
        ci: wilson_interval(hits, n_mc, 1.959_963_984_540_054),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `log error` on `log n`.
pub fn fit_rate_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::domain("a slope fit needs at least three (n, error) pairs"));
    }
    if pairs.windows(2).any(|w| !(w[1].0 > w[0].0)) || pairs[0].0 <= 0.0 {
        return Err(Error::domain("n values must be positive and strictly increasing"));
    }
    if let Some((n, e)) = pairs.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::domain(format!("error {e} at n = {n} is not positive")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&xs, &ys)?;
    Ok(SlopeFit { slope, intercept, r2 })
}

/// KS statistic of `sqrt(n) (kappa_c f_c - X_c)` over the kept draws against
/// the standard normal, for each requested (0-based) coordinate. Nothing is
/// asserted here: the limit is asymptotic.
pub fn bvm_coordinate_check(draws: &ChainOutput, obs: &SequenceObservation, coords: &[usize]) -> Result<Vec<(usize, f64)>> {
    if draws.n_kept() == 0 {
        return Err(Error::domain("chain has no draws"));
    }
    coords
        .iter()
        .map(|&c| {
            if c >= draws.dim || c >= obs.len() {
                return Err(Error::domain(format!("coordinate {c} out of range")));
            }
            let rn = obs.n.sqrt();
            let mut z: Vec<f64> = draws.coordinate(c).iter().map(|f| rn * (obs.kappa(c) * f - obs.x[c])).collect();
            Ok((c, ks_statistic(&mut z, norm_cdf)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    ReportedOnly,
}

/// One entry of a theory report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub inputs: serde_json::Value,
    pub statistics: serde_json::Value,
    pub status: CheckStatus,
}

impl CheckReport {
    pub fn new(name: &str, inputs: serde_json::Value, statistics: serde_json::Value, status: CheckStatus) -> Self {
        Self {
            check_name: name.to_string(),
            inputs,
            statistics,
            status,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// One row of the prior-mass trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassTrendRow {
    pub n: f64,
    pub eps_n: f64,
    pub radius: f64,
    pub estimate: PriorMassEstimate,
    /// `log p_hat / (n eps_n^2)`; `-inf` when no draw hit the ball.
    pub normalized_log_mass: f64,
}

/// Prior mass of `L^2` balls of radius `d1 eps_n` around `f0` across an
/// `n` grid. `d1` is the smallest value of `d1_grid` for which every ball
/// receives at least `min_hits` Monte Carlo hits.
pub fn prior_mass_trend(
    prior: &PriorSpec,
    f0: &CoefficientField,
    rate: &RateSpec,
    n_grid: &[f64],
    d1_grid: &[f64],
    min_hits: usize,
    n_mc: usize,
    seed: u64,
) -> Result<(f64, Vec<MassTrendRow>)> {
    let eps: Vec<f64> = n_grid.iter().map(|n| rate_epsilon_n(rate, *n)).collect::<Result<_>>()?;
    let mut last = None;
    for &d1 in d1_grid {
        let rows = n_grid
            .iter()
            .zip(&eps)
            .enumerate()
            .map(|(j, (&n, &e))| {
                let estimate = prior_mass_estimate(prior, f0, d1 * e, MassNorm::L2, n_mc, derive_seed(seed, j as u64))?;
                Ok(MassTrendRow {
                    n,
                    eps_n: e,
                    radius: d1 * e,
                    normalized_log_mass: estimate.p_hat.ln() / (n * e * e),
                    estimate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ok = rows.iter().all(|r| r.estimate.hits >= min_hits);
        last = Some((d1, rows));
        if ok {
            break;
        }
    }
    last.ok_or_else(|| Error::domain("d1 grid is empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordinate_posterior::{coord_sample_mcmc, CoordProblem, CoordSampler};
    use crate::priors::{ScaleKind, TailDensity};
    use crate::sequence_models::{make_truth, TruthSpec};
    use rand_distr::{Distribution, StandardNormal};

    fn single(v: Vec<f64>) -> CoefficientField {
        CoefficientField::single(v).unwrap()
    }

    #[test]
    fn ball_norm_examples() {
        let sob = SmoothnessBall::Sobolev { beta: 1.0, l: 1.0 };
        let zero = single(vec![0.0; 10]);
        assert_eq!(ball_norm(&zero, &sob).unwrap(), 0.0);
        assert!(membership(&zero, &sob).unwrap());
        let w0 = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 2 }, vec![0.0; 16]).unwrap();
        for b in [SmoothnessBall::Holder { beta: 1.0, l: 0.1 }, SmoothnessBall::Besov { beta: 1.0, r: 1.5, l: 0.1 }] {
            assert!(membership(&w0, &b).unwrap());
        }

        let mut v = vec![0.0; 10];
        v[4] = 2.0;
        assert_close!(ball_norm(&single(v), &sob).unwrap().powi(2), 100.0, 1e-12);

        let truth = make_truth(&TruthSpec::SobolevSin, 1_000_000).unwrap();
        assert!(membership(&truth, &SmoothnessBall::Sobolev { beta: 0.9, l: 2.0 }).unwrap());

        assert!(ball_norm(&w0, &sob).is_err());
        assert!(ball_norm(&zero, &SmoothnessBall::Holder { beta: 1.0, l: 1.0 }).is_err());
        assert!(ball_norm(&w0, &SmoothnessBall::Besov { beta: 1.0, r: 3.0, l: 1.0 }).is_err());
    }

    #[test]
    fn holder_is_levelwise_and_closed() {
        // coarse level 1: indices 0..2 scaling (level 1), 2..4 level 1, 4..8 level 2
        let beta = 0.5;
        let bound = |l: f64| 2f64.powf(-l * (0.5 + beta));
        let mut v = vec![0.0; 8];
        v[1] = bound(1.0);
        v[5] = -bound(2.0);
        let f = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 1 }, v.clone()).unwrap();
        let ball = SmoothnessBall::Holder { beta, l: 1.0 };
        assert_close!(ball_norm(&f, &ball).unwrap(), 1.0, 1e-15);
        assert!(membership(&f, &ball).unwrap());
        v[6] = 1.01 * bound(2.0);
        let f = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 1 }, v).unwrap();
        assert!(!membership(&f, &ball).unwrap());
    }

    #[test]
    fn ball_norms_satisfy_triangle_inequality() {
        let mut rng = rng_from_seed(3);
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(&mut rng)).collect() };
        for _ in 0..50 {
            let (a, b) = (draw(32), draw(32));
            let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let sob = SmoothnessBall::Sobolev { beta: 1.3, l: 1.0 };
            let n = |v: &[f64]| ball_norm(&single(v.to_vec()), &sob).unwrap();
            assert!(n(&sum) <= n(&a) + n(&b) + 1e-12);
            let bes = SmoothnessBall::Besov { beta: 0.7, r: 2.0, l: 1.0 };
            let w = |v: &[f64]| {
                let f = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 1 }, v.to_vec()).unwrap();
                ball_norm(&f, &bes).unwrap()
            };
            assert!(w(&sum) <= w(&a) + w(&b) + 1e-12);
        }
    }

    const ALL: [RateFlavor; 4] = [RateFlavor::L2Ht, RateFlavor::L2Ot, RateFlavor::LinfHt, RateFlavor::LinfOt];

    #[test]
    fn rate_examples() {
        let e = std::f64::consts::E;
        let r = rate_epsilon_n(&RateSpec::new(RateFlavor::L2Ht, 1.0, 0.0, 0.0), e).unwrap();
        assert_close!(r, (-1.0f64 / 3.0).exp(), 1e-15);
        assert!(rate_epsilon_n(&RateSpec::new(RateFlavor::L2Ht, 1.0, 0.0, 0.0), 2.0).is_err());

        // monotone from n = e^e for the L2 flavors; the log log factor of the
        // sup-norm HT rate delays its decrease until log n is about 3.5
        for (flavor, start) in [
            (RateFlavor::L2Ht, e.powf(e)),
            (RateFlavor::L2Ot, e.powf(e)),
            (RateFlavor::LinfOt, e.powf(e)),
            (RateFlavor::LinfHt, 3.6f64.exp()),
        ] {
            let spec = RateSpec::new(flavor, 1.0, 0.0, 0.5);
            let mut last = f64::INFINITY;
            for i in 0..400 {
                let n = start * 1.1f64.powi(i);
                let v = rate_epsilon_n(&spec, n).unwrap();
                assert!(v < last, "{flavor:?} at n = {n}");
                last = v;
            }
        }

        let ot = rate_epsilon_n(&RateSpec::new(RateFlavor::L2Ot, 1.0, 0.0, 0.1), 1e6).unwrap();
        let ht = rate_epsilon_n(&RateSpec::new(RateFlavor::L2Ht, 1.0, 0.0, 0.1), 1e6).unwrap();
        assert!(ot <= ht);

        // shared polynomial factor: pairwise ratios grow slower than n^0.01
        for a in ALL {
            for b in ALL {
                let ratio = |n: f64| {
                    rate_epsilon_n(&RateSpec::new(a, 1.0, 0.0, 0.5), n).unwrap()
                        / rate_epsilon_n(&RateSpec::new(b, 1.0, 0.0, 0.5), n).unwrap()
                };
                let growth = (ratio(1e100) / ratio(1e50)).abs();
                assert!(growth < 1e50f64.powf(0.01) && 1.0 / growth < 1e50f64.powf(0.01), "{a:?}/{b:?}: {growth}");
            }
        }
    }

    #[test]
    fn prior_mass_examples() {
        let prior = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 0.5 }, TailDensity::cauchy(), 20);
        let f0 = single(vec![0.0; 20]);
        let huge = prior_mass_estimate(&prior, &f0, 1e6, MassNorm::L2, 2000, 1).unwrap();
        assert_eq!(huge.p_hat, 1.0);
        let none = prior_mass_estimate(&prior, &f0, 0.0, MassNorm::L2, 2000, 1).unwrap();
        assert_eq!(none.p_hat, 0.0);

        let one = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 0.5 }, TailDensity::cauchy(), 1);
        let est = prior_mass_estimate(&one, &single(vec![0.0]), 1.0, MassNorm::L2, 100_000, 2).unwrap();
        assert!(est.ci.0 < 0.5 && 0.5 < est.ci.1, "{est:?}");

        // thread-count independence
        let a = prior_mass_estimate(&prior, &f0, 1.0, MassNorm::L2, 10_000, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| prior_mass_estimate(&prior, &f0, 1.0, MassNorm::L2, 10_000, 5).unwrap());
        assert_eq!(a, b);

        assert!(prior_mass_estimate(&prior, &f0, 1.0, MassNorm::L2, 10, 1).is_err());
        assert!(prior_mass_estimate(&prior, &f0, 1.0, MassNorm::Linf { wavelet: WaveletName::Haar }, 1000, 1).is_err());
    }

    #[test]
    fn sup_norm_mass_on_wavelet_prior() {
        let prior = PriorSpec::wavelet(ScaleKind::Ot { a: 1.0, delta: 1.0 }, TailDensity::cauchy(), 4, 0);
        let f0 = prior.zero_field();
        let norm = MassNorm::Linf { wavelet: WaveletName::Haar };
        let small = prior_mass_estimate(&prior, &f0, 0.5, norm, 2000, 3).unwrap();
        let large = prior_mass_estimate(&prior, &f0, 5.0, norm, 2000, 3).unwrap();
        assert!(small.p_hat < large.p_hat);
        assert_eq!(prior_mass_estimate(&prior, &f0, 1e12, norm, 1000, 3).unwrap().p_hat, 1.0);
    }

    #[test]
    fn slope_fit_examples() {
        let ns: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
        for p in [-1.0 / 3.0, -0.5] {
            let pairs: Vec<(f64, f64)> = ns.iter().map(|n| (*n, n.powf(p))).collect();
            let fit = fit_rate_slope(&pairs).unwrap();
            assert!((fit.slope - p).abs() < 1e-12);
            assert!((fit.r2 - 1.0).abs() < 1e-12);
        }
        // 5% multiplicative noise
        let mut rng = rng_from_seed(8);
        let mut good = 0;
        for _ in 0..200 {
            let pairs: Vec<(f64, f64)> = ns
                .iter()
                .map(|n| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (*n, n.powf(-1.0 / 3.0) * (1.0 + 0.05 * z))
                })
                .collect();
            good += usize::from((fit_rate_slope(&pairs).unwrap().slope + 1.0 / 3.0).abs() < 0.05);
        }
        assert!(good >= 195, "{good}");

        assert!(fit_rate_slope(&[(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate_slope(&[(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).is_err());
    }

    fn obs_single(x: Vec<f64>, n: f64) -> SequenceObservation {
        SequenceObservation {
            x,
            n,
            forward: None,
            layout: FieldLayout::Single,
            seed: None,
        }
    }

    #[test]
    fn bvm_examples() {
        // conjugate Gaussian: sigma^2 n = 1e6
        let (n, sigma, x): (f64, f64, f64) = (1e4, 10.0, 0.3);
        let post_var = sigma * sigma / (1.0 + n * sigma * sigma);
        let post_mean = x * n * sigma * sigma / (1.0 + n * sigma * sigma);
        let mut chain = ChainOutput::new(1, 0, 0);
        let mut rng = rng_from_seed(11);
        for _ in 0..10_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            chain.push(&[post_mean + post_var.sqrt() * z]);
        }
        let obs = obs_single(vec![x], n);
        let ks = bvm_coordinate_check(&chain, &obs, &[0]).unwrap();
        assert!(ks[0].1 < 0.02, "{ks:?}");

        // Student t3 prior with OT scale at k = 1 (sigma_1 = 1), n = 1e6
        let n = 1e6;
        let x = 0.84 + 0.4e-3;
        let p = CoordProblem::direct(x, n, 1.0, TailDensity::student_t(3.0));
        let mut chain = coord_sample_mcmc(&p, CoordSampler::Slice, 40_000, 2_000, 12).unwrap();
        // thin to roughly independent draws
        let kept: Vec<f64> = chain.coordinate(0).into_iter().step_by(3).collect();
        chain.draws = kept;
        let ks = bvm_coordinate_check(&chain, &obs_single(vec![x], n), &[0]).unwrap();
        assert!(ks[0].1 < 0.05, "{ks:?}");

        let mut flat = ChainOutput::new(1, 0, 0);
        for _ in 0..100 {
            flat.push(&[x]);
        }
        let ks = bvm_coordinate_check(&flat, &obs_single(vec![x], n), &[0]).unwrap();
        assert!(ks[0].1 >= 0.5);
        assert!(bvm_coordinate_check(&flat, &obs_single(vec![x], n), &[1]).is_err());
    }

    #[test]
    fn prior_mass_trend_is_bounded_below() {
        let prior = PriorSpec::single(ScaleKind::Ot { a: 1.0, delta: 1.0 }, TailDensity::cauchy(), 100);
        let f0 = make_truth(&TruthSpec::SobolevSin, 100).unwrap();
        let rate = RateSpec::new(RateFlavor::L2Ot, 1.0, 0.0, 1.0);
        let (d1, rows) =
            prior_mass_trend(&prior, &f0, &rate, &[50.0, 100.0, 200.0], &[0.1, 0.25, 0.5, 1.0], 30, 20_000, 4).unwrap();
        assert!(rows.iter().all(|r| r.estimate.hits >= 30), "d1 = {d1}: {rows:?}");
        for r in &rows {
            assert!(r.normalized_log_mass >= -1.0, "{r:?}");
        }
    }

    #[test]
    fn reports_serialize() {
        let r = CheckReport::new(
            "rate_slope",
            serde_json::json!({"n": [100, 1000]}),
            serde_json::json!({"slope": -0.3}),
            CheckStatus::ReportedOnly,
        );
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"status\":\"reported_only\""));
        assert!(r.passed());
        let back: CheckReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
