//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! The integrator works on vector-valued integrands so that several moments
//! share one set of evaluations. Semi-infinite pieces are mapped to `(0, 1]`
//! with `x = b + (1 - t) / t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// A piece of the real line in its integration variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Finite { a: f64, b: f64 },
    /// `[b, inf)` parametrised by `t in (t0, t1] within (0, 1]`.
    Upper { b: f64, t0: f64, t1: f64 },
    /// `(-inf, a]` parametrised by `t in (t0, t1]`, `x = a - (1 - t) / t`.
    Lower { a: f64, t0: f64, t1: f64 },
}

impl Segment {
    fn param_range(&self) -> (f64, f64) {
        match *self {
            Segment::Finite { a, b } => (a, b),
            Segment::Upper { t0, t1, .. } | Segment::Lower { t0, t1, .. } => (t0, t1),
        }
    }

    fn with_range(&self, lo: f64, hi: f64) -> Segment {
        match *self {
            Segment::Finite { .. } => Segment::Finite { a: lo, b: hi },
            Segment::Upper { b, .. } => Segment::Upper { b, t0: lo, t1: hi },
            Segment::Lower { a, .. } => Segment::Lower { a, t0: lo, t1: hi },
        }
    }

    /// Map the parameter to `(x, dx/dparam)`.
    #[inline]
    fn map(&self, u: f64) -> (f64, f64) {
        match *self {
            Segment::Finite { .. } => (u, 1.0),
            Segment::Upper { b, .. } => (b + (1.0 - u) / u, 1.0 / (u * u)),
            Segment::Lower { a, .. } => (a - (1.0 - u) / u, 1.0 / (u * u)),
        }
    }

    /// Range in `x`, ordered.
    pub fn x_range(&self) -> (f64, f64) {
        let (lo, hi) = self.param_range();
        match *self {
            Segment::Finite { .. } => (lo, hi),
            Segment::Upper { .. } => {
                let x_hi = if lo == 0.0 { f64::INFINITY } else { self.map(lo).0 };
                (self.map(hi).0, x_hi)
            }
            Segment::Lower { .. } => {
                let x_lo = if lo == 0.0 { f64::NEG_INFINITY } else { self.map(lo).0 };
                (x_lo, self.map(hi).0)
            }
        }
    }

    /// Sub-segment covering `x` values from the left end of `self` up to `x`.
    pub fn left_part(&self, x: f64) -> Segment {
        let (lo, hi) = self.param_range();
        match *self {
            Segment::Finite { a, .. } => Segment::Finite { a, b: x.clamp(a, hi) },
            // x grows as t decreases: the left part is t in [t(x), t1]
            Segment::Upper { b, .. } => {
                let t = (1.0 / (1.0 + (x - b))).clamp(lo, hi);
                Segment::Upper { b, t0: t, t1: hi }
            }
            // x grows with t: the left part is t in [t0, t(x)]
            Segment::Lower { a, .. } => {
                let t = (1.0 / (1.0 + (a - x))).clamp(lo, hi);
                Segment::Lower { a, t0: lo, t1: t }
            }
        }
    }
}

/// Gauss-Kronrod estimate on one segment; returns (kronrod, |kronrod - gauss|).
pub fn gk15<const N: usize, F>(f: &F, seg: &Segment) -> ([f64; N], [f64; N])
where
    F: Fn(f64) -> [f64; N],
{
    let (lo, hi) = seg.param_range();
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |u: f64| {
        let (x, jac) = seg.map(u);
        let mut v = f(x);
        for vi in v.iter_mut() {
            *vi *= jac;
        }
        v
    };
    let fc = eval(centre);
    let mut kron = [0.0; N];
    let mut gauss = [0.0; N];
    for j in 0..N {
        kron[j] = WGK[7] * fc[j];
        gauss[j] = WG[3] * fc[j];
    }
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = eval(centre - dx);
        let f2 = eval(centre + dx);
        for j in 0..N {
            let s = f1[j] + f2[j];
            kron[j] += WGK[i] * s;
            if i % 2 == 1 {
                gauss[j] += WG[i / 2] * s;
            }
        }
    }
    let mut err = [0.0; N];
    for j in 0..N {
        kron[j] *= half;
        gauss[j] *= half;
        err[j] = (kron[j] - gauss[j]).abs();
    }
    (kron, err)
}

#[derive(Debug, Clone)]
struct Piece<const N: usize> {
    seg: Segment,
    value: [f64; N],
    error: [f64; N],
    priority: f64,
}

impl<const N: usize> PartialEq for Piece<N> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const N: usize> Eq for Piece<N> {}
impl<const N: usize> PartialOrd for Piece<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Piece<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub max_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            max_pieces: 4000,
        }
    }
}

/// Converged partition with per-piece estimates.
#[derive(Debug, Clone)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    /// Final pieces sorted left to right with their values.
    pub pieces: Vec<(Segment, [f64; N])>,
}

/// Integrate a vector-valued function over the union of `segments`.
///
/// Refinement bisects the piece with the largest scaled error until, for
/// every component `j`, the summed error is below `rel_tol * scale(value)[j]`.
/// `scale` maps the current estimate to positive reference magnitudes.
pub fn integrate_segments<const N: usize, F, S>(
    f: F,
    segments: &[Segment],
    opts: QuadOptions,
    scale: S,
) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> [f64; N],
    S: Fn(&[f64; N]) -> [f64; N],
{
    let mut heap: BinaryHeap<Piece<N>> = BinaryHeap::new();
    let mut total = [0.0; N];
    let mut total_err = [0.0; N];
    let mut raw: Vec<(Segment, [f64; N], [f64; N])> = Vec::new();
    for seg in segments {
        let (v, e) = gk15(&f, seg);
        for j in 0..N {
            total[j] += v[j];
            total_err[j] += e[j];
        }
        raw.push((*seg, v, e));
    }
    let priority = |e: &[f64; N], sc: &[f64; N]| -> f64 {
        (0..N).map(|j| e[j] / sc[j]).fold(0.0, f64::max)
    };
    let sc = positive_scale(&scale(&total));
    for (seg, v, e) in raw {
        heap.push(Piece {
            seg,
            value: v,
            error: e,
            priority: priority(&e, &sc),
        });
    }
    let mut since_resum = 0usize;
    loop {
        let sc = positive_scale(&scale(&total));
        let mut converged = (0..N).all(|j| total_err[j] <= opts.rel_tol * sc[j]);
        // the running sums lose the small error totals to cancellation once
        // large early estimates have been replaced; re-add them from the
        // partition now and then, and always before giving up
        if !converged && (since_resum >= 64 || heap.len() >= opts.max_pieces) {
            since_resum = 0;
            total = [0.0; N];
            total_err = [0.0; N];
            for p in heap.iter() {
                for j in 0..N {
                    total[j] += p.value[j];
                    total_err[j] += p.error[j];
                }
            }
            let sc = positive_scale(&scale(&total));
            converged = (0..N).all(|j| total_err[j] <= opts.rel_tol * sc[j]);
        }
        if converged {
            break;
        }
        since_resum += 1;
        if heap.len() >= opts.max_pieces {
            let worst = (0..N)
                .map(|j| total_err[j] / sc[j])
                .fold(0.0, f64::max);
            return Err(Error::Numerical {
                message: format!("adaptive quadrature did not converge within {} pieces", opts.max_pieces),
                achieved: worst,
                coordinate: None,
            });
        }
        let piece = heap.pop().expect("nonempty partition");
        let (lo, hi) = piece.seg.param_range();
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // cannot bisect further in floating point; keep the estimate
            let worst = (0..N).map(|j| total_err[j] / sc[j]).fold(0.0, f64::max);
            return Err(Error::Numerical {
                message: "quadrature piece collapsed below floating-point resolution".into(),
                achieved: worst,
                coordinate: None,
            });
        }
        let left = piece.seg.with_range(lo, mid);
        let right = piece.seg.with_range(mid, hi);
        let (vl, el) = gk15(&f, &left);
        let (vr, er) = gk15(&f, &right);
        for j in 0..N {
            total[j] += vl[j] + vr[j] - piece.value[j];
            total_err[j] += el[j] + er[j] - piece.error[j];
        }
        let sc = positive_scale(&scale(&total));
        heap.push(Piece {
            seg: left,
            value: vl,
            error: el,
            priority: priority(&el, &sc),
        });
        heap.push(Piece {
            seg: right,
            value: vr,
            error: er,
            priority: priority(&er, &sc),
        });
    }
    // recompute totals from the final partition to shed accumulated rounding
    let mut pieces: Vec<(Segment, [f64; N])> = heap.into_iter().map(|p| (p.seg, p.value)).collect();
    pieces.sort_by(|a, b| a.0.x_range().0.total_cmp(&b.0.x_range().0));
    let mut value = [0.0; N];
    for (_, v) in &pieces {
        for j in 0..N {
            value[j] += v[j];
        }
    }
    Ok(QuadResult {
        value,
        error: total_err,
        pieces,
    })
}

fn positive_scale<const N: usize>(s: &[f64; N]) -> [f64; N] {
    let mut out = *s;
    for v in out.iter_mut() {
        *v = if v.is_finite() && *v > 0.0 { *v } else { f64::MIN_POSITIVE };
    }
    out
}

/// Segments covering the whole real line with the given sorted breakpoints.
pub fn real_line(breaks: &[f64]) -> Vec<Segment> {
    let mut b: Vec<f64> = breaks.iter().cloned().filter(|x| x.is_finite()).collect();
    b.sort_by(|x, y| x.total_cmp(y));
    b.dedup();
    let mut segs = Vec::with_capacity(b.len() + 1);
    let first = b[0];
    let last = *b.last().unwrap();
    segs.push(Segment::Lower { a: first, t0: 0.0, t1: 1.0 });
    for w in b.windows(2) {
        segs.push(Segment::Finite { a: w[0], b: w[1] });
    }
    segs.push(Segment::Upper { b: last, t0: 0.0, t1: 1.0 });
    segs
}

/// Point `x` inside `seg` where the integral of `f` from the left end of
/// `seg` reaches `target` (bisection in the segment parameter).
pub fn locate_mass<F: Fn(f64) -> f64>(f: &F, seg: &Segment, target: f64) -> f64 {
    let g = |x: f64| [f(x)];
    let (mut lo, mut hi) = seg.param_range();
    // for upper tails x decreases in the parameter
    let increasing = !matches!(seg, Segment::Upper { .. });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let x = seg.map(mid).0;
        let mass = gk15(&g, &seg.left_part(x)).0[0];
        if (mass < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    seg.map(0.5 * (lo + hi)).0
}

/// Scalar result.
#[derive(Debug, Clone, Copy)]
pub struct Scalar {
    pub value: f64,
    pub error: f64,
}

/// Scalar integral over `[a, b]` to `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Scalar> {
    let r = integrate_segments(
        |x| [f(x)],
        &[Segment::Finite { a, b }],
        QuadOptions {
            rel_tol,
            max_pieces: 4000,
        },
        |v| [v[0].abs().max(abs_tol / rel_tol)],
    )?;
    Ok(Scalar {
        value: r.value[0],
        error: r.error[0],
    })
}
