//! Heavy-tailed series priors.
//!
//! A prior draws each coefficient as `scale(index) * zeta` with `zeta`
//! i.i.d. from a symmetric [`TailDensity`]. Scales come from a
//! [`ScaleSpec`]: super-polynomially decaying ("oversmoothed", OT),
//! polynomial (HT(alpha)) or the same polynomial sequence used with a
//! Gaussian tail.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT as StudentTDist};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};
use crate::quadrature;
use crate::rng::rng_from_seed;
use crate::special::{norm_quantile, norm_sf};

/// Single index `k >= 1` or wavelet level `l >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IndexLayout {
    #[default]
    Single,
    Wavelet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleKind {
    /// `exp(-a (ln k)^(1+delta))`, or `2^(-a l^(1+delta))` on wavelet levels.
    Ot { a: f64, delta: f64 },
    /// `k^(-1/2-alpha)`, or `2^(-l(1/2+alpha))`.
    Ht { alpha: f64 },
    /// Same sequence as `Ht`; used with a Gaussian tail.
    GaussianScale { alpha: f64 },
}

impl ScaleKind {
    /// OT scales with the experiment defaults `a = 1`, `delta = 0.5`.
    pub fn ot_default() -> Self {
        ScaleKind::Ot { a: 1.0, delta: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub kind: ScaleKind,
    #[serde(default)]
    pub layout: IndexLayout,
}

impl ScaleSpec {
    pub fn new(kind: ScaleKind, layout: IndexLayout) -> Self {
        Self { kind, layout }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            ScaleKind::Ot { a, delta } => a > 0.0 && delta > 0.0 && a.is_finite() && delta.is_finite(),
            ScaleKind::Ht { alpha } | ScaleKind::GaussianScale { alpha } => {
                alpha > 0.0 && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("scale parameters must be positive: {:?}", self.kind)))
        }
    }

    /// Scale at single index `k >= 1` or wavelet level `l >= 0`.
    pub fn eval(&self, index: usize) -> Result<f64> {
        if self.layout == IndexLayout::Single && index == 0 {
            return Err(Error::domain("single-index scales start at k = 1"));
        }
        Ok(self.eval_unchecked(index))
    }

    pub(crate) fn eval_unchecked(&self, index: usize) -> f64 {
        let i = index as f64;
        match (self.layout, self.kind) {
            (IndexLayout::Single, ScaleKind::Ot { a, delta }) => {
                (-a * i.ln().powf(1.0 + delta)).exp()
            }
            (IndexLayout::Single, ScaleKind::Ht { alpha })
            | (IndexLayout::Single, ScaleKind::GaussianScale { alpha }) => i.powf(-0.5 - alpha),
            (IndexLayout::Wavelet, ScaleKind::Ot { a, delta }) => {
                (-a * i.powf(1.0 + delta) * LN_2).exp()
            }
            (IndexLayout::Wavelet, ScaleKind::Ht { alpha })
            | (IndexLayout::Wavelet, ScaleKind::GaussianScale { alpha }) => {
                (-i * (0.5 + alpha) * LN_2).exp()
            }
        }
    }
}

/// `eval_scale` operation: scale at index `k` (single) or level `l` (wavelet).
pub fn eval_scale(spec: &ScaleSpec, index: usize) -> Result<f64> {
    spec.eval(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailKind {
    StudentT { nu: f64 },
    Cauchy,
    Gaussian,
    Laplace,
}

/// Symmetric coordinate law `h` of the prior, with its declared tail
/// exponent `kappa` (in `log(1/h(x)) <= c1 (1 + log^(1+kappa)(1+x))`) and
/// the order below which absolute moments are finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TailKind", into = "TailKind")]
pub struct TailDensity {
    pub kind: TailKind,
    pub kappa: f64,
    pub q_moments: f64,
    log_norm: f64,
}

impl From<TailKind> for TailDensity {
    fn from(kind: TailKind) -> Self {
        TailDensity::new(kind)
    }
}

impl From<TailDensity> for TailKind {
    fn from(t: TailDensity) -> Self {
        t.kind
    }
}

/// Gap below the tail index used to declare the moment order of Student laws.
pub const MOMENT_GAP: f64 = 1e-6;

impl TailDensity {
    pub fn new(kind: TailKind) -> Self {
        let (kappa, q_moments, log_norm) = match kind {
            TailKind::StudentT { nu } => (
                0.0,
                nu - MOMENT_GAP,
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln(),
            ),
            TailKind::Cauchy => (0.0, 1.0 - MOMENT_GAP, -PI.ln()),
            // light-tailed baselines; kappa is nominal only
            TailKind::Gaussian => (1.0, f64::INFINITY, -0.5 * (2.0 * PI).ln()),
            TailKind::Laplace => (1.0, f64::INFINITY, -LN_2),
        };
        Self {
            kind,
            kappa,
            q_moments,
            log_norm,
        }
    }

    pub fn student_t(nu: f64) -> Self {
        Self::new(TailKind::StudentT { nu })
    }
    pub fn cauchy() -> Self {
        Self::new(TailKind::Cauchy)
    }
    pub fn gaussian() -> Self {
        Self::new(TailKind::Gaussian)
    }
    pub fn laplace() -> Self {
        Self::new(TailKind::Laplace)
    }

    pub fn validate(&self) -> Result<()> {
        if let TailKind::StudentT { nu } = self.kind {
            if !(nu > 0.0 && nu.is_finite()) {
                return Err(Error::domain(format!("Student-t degrees of freedom must be positive, got {nu}")));
            }
        }
        Ok(())
    }

    /// Student and Cauchy laws satisfy the polylogarithmic tail condition;
    /// Gaussian and Laplace are comparison baselines only.
    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self.kind, TailKind::StudentT { .. } | TailKind::Cauchy)
    }

    #[inline]
    pub fn logpdf(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.log_norm
            + match self.kind {
                TailKind::StudentT { nu } => -0.5 * (nu + 1.0) * (ax * ax / nu).ln_1p(),
                TailKind::Cauchy => -(ax * ax).ln_1p(),
                TailKind::Gaussian => -0.5 * ax * ax,
                TailKind::Laplace => -ax,
            }
    }

    /// `logpdf(a / s) - logpdf(b / s)`, differencing before scaling so that
    /// it stays accurate for nearby points far out in the tail.
    pub fn logpdf_diff(&self, a: f64, b: f64, s: f64) -> f64 {
        match self.kind {
            TailKind::Gaussian => -0.5 * ((a - b) / s) * ((a + b) / s),
            TailKind::Laplace => -(a.abs() - b.abs()) / s,
            _ => self.logpdf(a / s) - self.logpdf(b / s),
        }
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        self.logpdf(x).exp()
    }

    /// Upper tail `H(x) = P(zeta > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self.kind {
            TailKind::StudentT { nu } => student_sf(nu, x),
            TailKind::Cauchy => {
                if x > 0.0 {
                    (1.0 / x).atan() / PI
                } else {
                    0.5 - x.atan() / PI
                }
            }
            TailKind::Gaussian => norm_sf(x),
            TailKind::Laplace => {
                if x >= 0.0 {
                    0.5 * (-x).exp()
                } else {
                    1.0 - 0.5 * x.exp()
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x > 0.0 {
            1.0 - self.survival(x)
        } else {
            self.survival(-x)
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self.kind {
            TailKind::StudentT { nu } => {
                if p == 0.5 {
                    return 0.0;
                }
                // polish the library root with Newton steps on the tail
                // probability, in the tail where it carries full precision
                let q = p.min(1.0 - p);
                let mut x = students(nu).inverse_cdf(q);
                for _ in 0..2 {
                    let fx = self.survival(-x);
                    let d = self.pdf(x);
                    if !(d > 0.0 && fx > 0.0) {
                        break;
                    }
                    x -= (fx.ln() - q.ln()) * fx / d;
                }
                if p < 0.5 {
                    x
                } else {
                    -x
                }
            }
            TailKind::Cauchy => {
                if p == 0.5 {
                    0.0
                } else {
                    -1.0 / (PI * p).tan()
                }
            }
            TailKind::Gaussian => norm_quantile(p),
            TailKind::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            TailKind::StudentT { nu } => StudentTDist::new(nu)
                .expect("validated degrees of freedom")
                .sample(rng),
            TailKind::Cauchy => {
                // inverse CDF on the open interval
                let u: f64 = rng.random();
                if u == 0.0 {
                    0.0
                } else {
                    (PI * (u - 0.5)).tan()
                }
            }
            TailKind::Gaussian => StandardNormal.sample(rng),
            TailKind::Laplace => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

/// Student-t upper tail through the regularized incomplete beta function,
/// using `t^2 / (nu + t^2)` near the centre and `nu / (nu + t^2)` in the tails
/// so that neither branch cancels.
fn student_sf(nu: f64, t: f64) -> f64 {
    let t2 = t * t;
    if t2 < nu {
        let half = 0.5 * beta_reg(0.5, 0.5 * nu, t2 / (nu + t2));
        if t >= 0.0 {
            0.5 - half
        } else {
            0.5 + half
        }
    } else {
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t2));
        if t >= 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }
}

fn students(nu: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, nu).expect("validated degrees of freedom")
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("argument must be finite, got {x}")))
    }
}

pub fn tail_pdf(h: &TailDensity, x: f64) -> Result<f64> {
    Ok(h.pdf(finite(x)?))
}

pub fn tail_logpdf(h: &TailDensity, x: f64) -> Result<f64> {
    Ok(h.logpdf(finite(x)?))
}

pub fn tail_survival(h: &TailDensity, x: f64) -> Result<f64> {
    Ok(h.survival(finite(x)?))
}

pub fn tail_sample<R: Rng + ?Sized>(h: &TailDensity, rng: &mut R) -> f64 {
    h.sample(rng)
}

/// `int_{-t}^{t} |x|^q h(x) dx`, integrated piecewise on a log-spaced partition.
pub fn truncated_abs_moment(h: &TailDensity, q: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("truncation radius must be positive and finite"));
    }
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = t.min(1.0);
    loop {
        let r = quadrature::integrate(|x| x.powf(q) * h.pdf(x), lo, hi, 1e-12, 1e-14)?;
        total += r.value;
        if hi >= t {
            break;
        }
        lo = hi;
        hi = (hi * 4.0).min(t);
    }
    Ok(2.0 * total)
}

/// Outcome of checking the shape and tail conditions on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub symmetric: bool,
    pub decreasing: bool,
    /// Smallest `c1` with `log(1/h(x)) <= c1 (1 + log^(1+kappa)(1+x))` on the grid.
    pub log_bound_c1: f64,
    /// Whether the required `c1` stays bounded towards the top of the grid.
    pub log_bound_holds: bool,
    pub tail_exponent: f64,
    /// Smallest `c2` with `H(x) <= c2 / x^p` for grid points `x >= 1`.
    pub tail_bound_c2: f64,
    pub tail_bound_holds: bool,
    /// Largest probed order whose truncated absolute moment stabilises over the grid range.
    pub moment_q: f64,
}

const GROWTH_SLOPE_LIMIT: f64 = 0.1;
const MOMENT_STABILITY: f64 = 0.1;
const MOMENT_ORDERS: [f64; 16] = [
    0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0,
];

/// Least-squares slope of `ln v` against `ln x` over the upper half (in log
/// scale) of the points. `None` when fewer than two usable points remain.
fn upper_growth_slope(xs: &[f64], vals: &[f64]) -> Option<f64> {
    let xmax = *xs.last()?;
    let xmin = xs[0].max(1.0);
    if xmax <= xmin {
        return None;
    }
    let cut = (xmin * xmax).sqrt();
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(vals)
        .filter(|(x, v)| **x >= cut && **v > 0.0 && v.is_finite())
        .map(|(x, v)| (x.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Check symmetry, monotonicity, the log-tail bound (declared `kappa`) and
/// the tail-integral bound `H(x) <= c2 / x^tail_exponent` on a positive,
/// sorted grid.
///
/// A bound "holds" when the pointwise constant it requires does not keep
/// growing across the upper half of the grid (log-log slope at most 0.1).
pub fn check_conditions_with_exponent(
    h: &TailDensity,
    grid: &[f64],
    tail_exponent: f64,
) -> Result<ConditionReport> {
    if grid.is_empty() {
        return Err(Error::domain("condition grid must be nonempty"));
    }
    if grid.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("condition grid must be sorted, positive and finite"));
    }
    let symmetric = grid.iter().all(|&x| h.pdf(x) == h.pdf(-x));
    let mut decreasing = h.pdf(0.0) >= h.pdf(grid[0]);
    decreasing &= grid.windows(2).all(|w| h.pdf(w[1]) <= h.pdf(w[0]));

    let ratios: Vec<f64> = grid
        .iter()
        .map(|&x| -h.logpdf(x) / (1.0 + (x.ln_1p()).powf(1.0 + h.kappa)))
        .collect();
    let log_bound_c1 = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let log_bound_holds = log_bound_c1.is_finite()
        && upper_growth_slope(grid, &ratios).is_none_or(|s| s <= GROWTH_SLOPE_LIMIT);

    let tail_pts: Vec<f64> = grid.iter().cloned().filter(|&x| x >= 1.0).collect();
    let tail_vals: Vec<f64> = tail_pts
        .iter()
        .map(|&x| x.powf(tail_exponent) * h.survival(x))
        .collect();
    let tail_bound_c2 = tail_vals.iter().cloned().fold(0.0, f64::max);
    let tail_bound_holds = tail_bound_c2.is_finite()
        && upper_growth_slope(&tail_pts, &tail_vals).is_none_or(|s| s <= GROWTH_SLOPE_LIMIT);

    let top = *grid.last().unwrap();
    let mut moment_q = 0.0;
    if top > 10.0 {
        for &q in MOMENT_ORDERS.iter() {
            let near = truncated_abs_moment(h, q, top / 10.0)?;
            let far = truncated_abs_moment(h, q, top)?;
            if far.is_finite() && (far - near).abs() <= MOMENT_STABILITY * far {
                moment_q = q;
            } else {
                break;
            }
        }
    }

    Ok(ConditionReport {
        symmetric,
        decreasing,
        log_bound_c1,
        log_bound_holds,
        tail_exponent,
        tail_bound_c2,
        tail_bound_holds,
        moment_q,
    })
}

/// [`check_conditions_with_exponent`] with the quadratic tail bound.
pub fn check_conditions(h: &TailDensity, grid: &[f64]) -> Result<ConditionReport> {
    check_conditions_with_exponent(h, grid, 2.0)
}

/// A series prior: scale sequence, coordinate law and explicit truncation.
///
/// For the single layout `truncation` is the number of coefficients `K`.
/// For the wavelet layout it is the finest detail level `L`; the field
/// holds the scaling block at `coarse_level` and detail levels
/// `coarse_level..=L`. Scales on wavelet levels are indexed relative to the
/// coarse level, and the scaling block shares the scale of relative level 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub scale: ScaleSpec,
    pub tail: TailDensity,
    pub truncation: usize,
    #[serde(default)]
    pub coarse_level: usize,
}

impl PriorSpec {
    pub fn single(kind: ScaleKind, tail: TailDensity, k: usize) -> Self {
        Self {
            scale: ScaleSpec::new(kind, IndexLayout::Single),
            tail,
            truncation: k,
            coarse_level: 0,
        }
    }

    pub fn wavelet(kind: ScaleKind, tail: TailDensity, max_level: usize, coarse_level: usize) -> Self {
        Self {
            scale: ScaleSpec::new(kind, IndexLayout::Wavelet),
            tail,
            truncation: max_level,
            coarse_level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scale.validate()?;
        self.tail.validate()?;
        if self.truncation < 1 {
            return Err(Error::domain("truncation must be at least 1"));
        }
        if self.scale.layout == IndexLayout::Wavelet && self.coarse_level > self.truncation {
            return Err(Error::domain("coarse level exceeds the maximal level"));
        }
        if self.scale.layout == IndexLayout::Wavelet && self.truncation >= 30 {
            return Err(Error::domain("wavelet truncation level too large"));
        }
        Ok(())
    }

    pub fn field_layout(&self) -> FieldLayout {
        match self.scale.layout {
            IndexLayout::Single => FieldLayout::Single,
            IndexLayout::Wavelet => FieldLayout::Wavelet {
                coarse_level: self.coarse_level,
            },
        }
    }

    /// Number of coefficients in a field drawn from this prior.
    pub fn len(&self) -> usize {
        match self.scale.layout {
            IndexLayout::Single => self.truncation,
            IndexLayout::Wavelet => 1usize << (self.truncation + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-coefficient scales aligned with the field layout.
    pub fn scales(&self) -> Vec<f64> {
        match self.scale.layout {
            IndexLayout::Single => (1..=self.truncation).map(|k| self.scale.eval_unchecked(k)).collect(),
            IndexLayout::Wavelet => {
                let layout = self.field_layout();
                (0..self.len())
                    .map(|i| {
                        let l = layout.relative_level(i).unwrap_or(0);
                        self.scale.eval_unchecked(l)
                    })
                    .collect()
            }
        }
    }

    /// A zero field with this prior's layout and length.
    pub fn zero_field(&self) -> CoefficientField {
        CoefficientField::new(self.field_layout(), vec![0.0; self.len()])
            .expect("prior layout produces a consistent field")
    }
}

/// Draw a truncated field from the prior.
pub fn sample_prior(spec: &PriorSpec, seed: u64) -> Result<CoefficientField> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let values = spec
        .scales()
        .into_iter()
        .map(|s| s * spec.tail.sample(&mut rng))
        .collect();
    CoefficientField::new(spec.field_layout(), values)
}
