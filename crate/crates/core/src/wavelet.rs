//! Periodized orthonormal discrete wavelet transform.
//!
//! Analysis at each level maps `a` (length `m`) to
//! `approx[k] = sum_t h[t] a[(2k + t) mod m]` and
//! `detail[k] = sum_t g[t] a[(2k + t) mod m]` with the quadrature mirror
//! `g[t] = (-1)^t h[L - 1 - t]`. Synthesis is the transpose.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WaveletName {
    Haar,
    /// Least-asymmetric Daubechies filter with 8 vanishing moments (16 taps).
    #[default]
    Symmlet8,
    /// Extremal-phase Daubechies filter with 8 vanishing moments (16 taps).
    Daubechies8,
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

// Symmlet 8 as tabulated in WaveLab 850 (MakeONFilter('Symmlet', 8)).
const SYMMLET8: [f64; 16] = [
    -0.003_382_415_951_005_002_8,
    -0.000_542_132_331_800_010_7,
    0.031_695_087_811_525_99,
    0.007_607_487_324_976_609,
    -0.143_294_238_351_272_67,
    -0.061_273_359_067_811_076,
    0.481_359_651_259_053_4,
    0.777_185_751_699_628,
    0.364_441_894_836_178_95,
    -0.051_945_838_107_881_8,
    -0.027_219_029_917_103_486,
    0.049_137_179_673_730_29,
    0.003_808_752_013_894_489_6,
    -0.014_952_258_337_062_199,
    -0.000_302_920_514_724_133_1,
    0.001_889_950_332_767_689,
];

// Daubechies 8 (db8), PyWavelets reconstruction low-pass.
const DAUBECHIES8: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_299_95,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_9,
    0.000_472_484_573_913_282_8,
    0.128_747_426_620_478_47,
    -0.017_369_301_001_807_547,
    -0.044_088_253_930_794_755,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947_05,
    0.000_675_449_406_450_569_3,
    -0.000_117_476_784_124_769_53,
];

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    pub name: WaveletName,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(name: WaveletName) -> Self {
        let lowpass: Vec<f64> = match name {
            WaveletName::Haar => HAAR.to_vec(),
            WaveletName::Symmlet8 => SYMMLET8.to_vec(),
            WaveletName::Daubechies8 => DAUBECHIES8.to_vec(),
        };
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 } * lowpass[len - 1 - t])
            .collect();
        Self {
            name,
            lowpass,
            highpass,
        }
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// One analysis step; `input.len()` must be even.
    fn analyze_step(&self, input: &[f64], approx: &mut [f64], detail: &mut [f64]) {
        let m = input.len();
        let half = m / 2;
        for k in 0..half {
            let mut a = 0.0;
            let mut d = 0.0;
            for (t, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                let x = input[(2 * k + t) % m];
                a += h * x;
                d += g * x;
            }
            approx[k] = a;
            detail[k] = d;
        }
    }

    /// Transpose of [`Self::analyze_step`].
    fn synthesize_step(&self, approx: &[f64], detail: &[f64], out: &mut [f64]) {
        let m = out.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..approx.len() {
            let (a, d) = (approx[k], detail[k]);
            for (t, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                out[(2 * k + t) % m] += h * a + g * d;
            }
        }
    }
}

/// Forward transform of `2^J` samples down to `coarse_level`.
pub fn dwt_forward(samples: &[f64], filter: &WaveletFilter, coarse_level: usize) -> Result<CoefficientField> {
    let n = samples.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::domain(format!("sample length {n} is not a power of two >= 2")));
    }
    let depth = n.trailing_zeros() as usize;
    if coarse_level >= depth {
        return Err(Error::domain(format!(
            "coarse level {coarse_level} must be below the depth {depth}"
        )));
    }
    let mut out = vec![0.0; n];
    let mut current = samples.to_vec();
    let mut approx = vec![0.0; n / 2];
    let mut detail = vec![0.0; n / 2];
    for level in (coarse_level..depth).rev() {
        let half = 1usize << level;
        filter.analyze_step(&current, &mut approx[..half], &mut detail[..half]);
        out[half..2 * half].copy_from_slice(&detail[..half]);
        current.truncate(half);
        current.copy_from_slice(&approx[..half]);
    }
    out[..1 << coarse_level].copy_from_slice(&current);
    CoefficientField::new(FieldLayout::Wavelet { coarse_level }, out)
}

/// Inverse transform back to `2^J` samples.
pub fn dwt_inverse(coeffs: &CoefficientField, filter: &WaveletFilter) -> Result<Vec<f64>> {
    let coarse_level = coeffs
        .coarse_level()
        .ok_or_else(|| Error::domain("inverse DWT needs a wavelet-layout field"))?;
    let values = coeffs.values();
    let n = values.len();
    if !n.is_power_of_two() || n.trailing_zeros() as usize <= coarse_level {
        return Err(Error::domain("coefficient field does not match its declared levels"));
    }
    let depth = n.trailing_zeros() as usize;
    let mut current = values[..1 << coarse_level].to_vec();
    let mut next = vec![0.0; n];
    for level in coarse_level..depth {
        let half = 1usize << level;
        let detail = &values[half..2 * half];
        filter.synthesize_step(&current, detail, &mut next[..2 * half]);
        current.clear();
        current.extend_from_slice(&next[..2 * half]);
    }
    Ok(current)
}

/// Resolution (log2 of the grid size) used to evaluate expansions as functions.
pub const FINE_DEPTH: usize = 12;

/// Evaluates wavelet expansions as functions on `[0, 1]`.
///
/// The field is zero-padded to [`FINE_DEPTH`] levels (or its own depth if
/// deeper), synthesized, and rescaled by `sqrt(M)` so that the basis
/// functions have unit `L^2[0,1]` norm. Grid point `i` sits at `t = i / M`;
/// the expansion is 1-periodic, so `t = 1` reads the value at `t = 0`.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    filter: WaveletFilter,
    coarse_level: usize,
    depth: usize,
    fine_depth: usize,
}

impl Synthesizer {
    pub fn new(filter: WaveletFilter, coarse_level: usize, depth: usize) -> Result<Self> {
        if depth <= coarse_level {
            return Err(Error::domain("field depth must exceed the coarse level"));
        }
        Ok(Self {
            filter,
            coarse_level,
            depth,
            fine_depth: depth.max(FINE_DEPTH),
        })
    }

    pub fn for_field(filter: WaveletFilter, field: &CoefficientField) -> Result<Self> {
        let j0 = field
            .coarse_level()
            .ok_or_else(|| Error::domain("function evaluation needs a wavelet-layout field"))?;
        Self::new(filter, j0, field.depth().unwrap())
    }

    pub fn grid_len(&self) -> usize {
        1 << self.fine_depth
    }

    pub fn coeff_len(&self) -> usize {
        1 << self.depth
    }

    fn check(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.coeff_len() {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                self.coeff_len(),
                coeffs.len()
            )));
        }
        Ok(())
    }

    /// Function values at `t_i = i / M`, `i = 0..M`.
    pub fn grid_values(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check(coeffs)?;
        let m = self.grid_len();
        let mut padded = vec![0.0; m];
        padded[..coeffs.len()].copy_from_slice(coeffs);
        let field = CoefficientField::new(
            FieldLayout::Wavelet {
                coarse_level: self.coarse_level,
            },
            padded,
        )?;
        let mut v = dwt_inverse(&field, &self.filter)?;
        let s = (m as f64).sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        Ok(v)
    }

    /// Adjoint of [`Self::grid_values`]: maps weights on the grid to the
    /// gradient of `sum_i w_i f(t_i)` with respect to the coefficients.
    pub fn grid_adjoint(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let m = self.grid_len();
        if weights.len() != m {
            return Err(Error::domain("adjoint weights must cover the fine grid"));
        }
        let field = dwt_forward(weights, &self.filter, self.coarse_level)?;
        let s = (m as f64).sqrt();
        Ok(field.values()[..self.coeff_len()].iter().map(|x| x * s).collect())
    }

    /// Nearest grid index for a point of `[0, 1]`.
    pub fn grid_index(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("evaluation point {x} outside [0, 1]")));
        }
        let m = self.grid_len();
        Ok(((x * m as f64).round() as usize) % m)
    }
}

/// Evaluate the expansion at points of `[0, 1]` by nearest-point lookup on
/// the fine dyadic grid.
pub fn eval_function(coeffs: &CoefficientField, filter: &WaveletFilter, grid: &[f64]) -> Result<Vec<f64>> {
    let synth = Synthesizer::for_field(filter.clone(), coeffs)?;
    let idx: Vec<usize> = grid.iter().map(|&x| synth.grid_index(x)).collect::<Result<_>>()?;
    let values = synth.grid_values(coeffs.values())?;
    Ok(idx.into_iter().map(|i| values[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn all_filters() -> Vec<WaveletFilter> {
        [WaveletName::Haar, WaveletName::Symmlet8, WaveletName::Daubechies8]
            .into_iter()
            .map(WaveletFilter::new)
            .collect()
    }

    #[test]
    fn filters_are_orthonormal() {
        for f in all_filters() {
            let h = f.lowpass();
            let norm: f64 = h.iter().map(|x| x * x).sum();
            assert_close!(norm, 1.0, 1e-12);
            assert_close!(h.iter().sum::<f64>(), std::f64::consts::SQRT_2, 1e-12);
            for shift in (2..h.len()).step_by(2) {
                let dot: f64 = (0..h.len() - shift).map(|t| h[t] * h[t + shift]).sum();
                assert!(dot.abs() < 1e-12, "{:?} shift {shift}: {dot}", f.name);
            }
        }
    }

    #[test]
    fn highpass_vanishing_moments() {
        for (name, moments) in [(WaveletName::Symmlet8, 8), (WaveletName::Daubechies8, 8)] {
            let g = WaveletFilter::new(name).highpass().to_vec();
            for p in 0..moments {
                let m: f64 = g.iter().enumerate().map(|(t, v)| (t as f64).powi(p) * v).sum();
                let scale: f64 = g.iter().enumerate().map(|(t, v)| ((t as f64).powi(p) * v).abs()).sum();
                assert!(m.abs() < 1e-9 * scale.max(1.0), "{name:?} moment {p}: {m}");
            }
        }
    }

    #[test]
    fn symmlet8_matches_second_table() {
        // PyWavelets `sym8` reconstruction low-pass
        let pywt = [
            0.0018899503327594609,
            -0.0003029205147213668,
            -0.01495225833704823,
            0.003808752013890615,
            0.049137179673607506,
            -0.027219029917056003,
            -0.05194583810770904,
            0.3644418948353314,
            0.7771857517005235,
            0.4813596512583722,
            -0.061273359067658524,
            -0.1432942383508097,
            0.007607487324917605,
            0.03169508781149298,
            -0.0005421323317911481,
            -0.0033824159510061256,
        ];
        for (a, b) in SYMMLET8.iter().zip(pywt.iter().rev()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn haar_constant_signal() {
        let f = WaveletFilter::new(WaveletName::Haar);
        let c = dwt_forward(&[1.0, 1.0, 1.0, 1.0], &f, 0).unwrap();
        assert_close!(c.values()[0], 2.0, 1e-15);
        assert!(c.values()[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn reconstruction_and_parseval() {
        let mut rng = rng_from_seed(5);
        for f in all_filters() {
            for (depth, j0) in [(1usize, 0usize), (6, 0), (6, 3), (11, 5)] {
                let x: Vec<f64> = (0..1 << depth).map(|_| rng.random::<f64>() - 0.5).collect();
                let c = dwt_forward(&x, &f, j0).unwrap();
                let e_x: f64 = x.iter().map(|v| v * v).sum();
                assert_close!(c.l2_norm().powi(2), e_x, 1e-10 * e_x.max(1.0));
                let y = dwt_inverse(&c, &f).unwrap();
                for (a, b) in x.iter().zip(&y) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let depth = 6;
        let n = 1usize << depth;
        for f in all_filters() {
            for j0 in [0, 2] {
                let basis: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let mut v = vec![0.0; n];
                        v[i] = 1.0;
                        let c = CoefficientField::new(FieldLayout::Wavelet { coarse_level: j0 }, v).unwrap();
                        dwt_inverse(&c, &f).unwrap()
                    })
                    .collect();
                for i in 0..n {
                    for j in 0..n {
                        let dot: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - want).abs() < 1e-8, "{:?} ({i},{j}) {dot}", f.name);
                    }
                }
            }
        }
    }

    #[test]
    fn errors() {
        let f = WaveletFilter::new(WaveletName::Haar);
        assert!(dwt_forward(&[1.0, 2.0, 3.0], &f, 0).is_err());
        assert!(dwt_forward(&[1.0, 2.0, 3.0, 4.0], &f, 2).is_err());
        let single = CoefficientField::single(vec![1.0]).unwrap();
        assert!(dwt_inverse(&single, &f).is_err());
    }

    #[test]
    fn zero_field_and_unit_detail() {
        let f = WaveletFilter::new(WaveletName::Symmlet8);
        let z = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 3 }, vec![0.0; 256]).unwrap();
        assert!(dwt_inverse(&z, &f).unwrap().iter().all(|v| *v == 0.0));
        let mut v = vec![0.0; 256];
        v[70] = 1.0;
        let c = z.with_values(v).unwrap();
        let w = dwt_inverse(&c, &f).unwrap();
        assert_close!(w.iter().map(|x| x * x).sum::<f64>().sqrt(), 1.0, 1e-10);
    }

    #[test]
    fn function_evaluation() {
        let haar = WaveletFilter::new(WaveletName::Haar);
        let mut v = vec![0.0; 16];
        v[0] = 2.5;
        let c = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 0 }, v).unwrap();
        let pts = [0.0, 0.1, 0.5, 0.77, 1.0];
        for y in eval_function(&c, &haar, &pts).unwrap() {
            assert_close!(y, 2.5, 1e-12);
        }
        assert!(eval_function(&c, &haar, &[1.5]).is_err());

        // at full fine resolution the evaluation is the rescaled inverse transform
        let sym = WaveletFilter::new(WaveletName::Symmlet8);
        let mut rng = rng_from_seed(3);
        let m = 1usize << FINE_DEPTH;
        let vals: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let field = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 4 }, vals).unwrap();
        let pts: Vec<f64> = (0..m).step_by(97).map(|i| i as f64 / m as f64).collect();
        let evals = eval_function(&field, &sym, &pts).unwrap();
        let direct = dwt_inverse(&field, &sym).unwrap();
        for (p, e) in pts.iter().zip(evals) {
            let i = (p * m as f64).round() as usize;
            assert!((e - direct[i] * (m as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluation_is_linear_and_adjoint_consistent() {
        let sym = WaveletFilter::new(WaveletName::Symmlet8);
        let synth = Synthesizer::new(sym, 0, 6).unwrap();
        let mut rng = rng_from_seed(8);
        let a: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
        let b: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let (fa, fb, fab) = (
            synth.grid_values(&a).unwrap(),
            synth.grid_values(&b).unwrap(),
            synth.grid_values(&ab).unwrap(),
        );
        for i in 0..fa.len() {
            assert!((fab[i] - (2.0 * fa[i] - 3.0 * fb[i])).abs() < 1e-10);
        }
        let w: Vec<f64> = (0..synth.grid_len()).map(|_| rng.random::<f64>()).collect();
        let lhs: f64 = w.iter().zip(&fa).map(|(x, y)| x * y).sum();
        let g = synth.grid_adjoint(&w).unwrap();
        let rhs: f64 = g.iter().zip(&a).map(|(x, y)| x * y).sum();
        assert_close!(lhs, rhs, 1e-9 * lhs.abs().max(1.0));
    }
}
