//! Ground truths and Gaussian sequence observations.
//!
//! Direct model: `X_k = f_k + eps_k / sqrt(n)`. Inverse model:
//! `X_k = kappa_k f_k + eps_k / sqrt(n)` with forward multipliers `kappa_k`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CoefficientField, FieldLayout};
use crate::rng::rng_from_seed;
use crate::wavelet::{dwt_forward, WaveletFilter, WaveletName};

/// Spatially inhomogeneous test signals of Donoho and Johnstone (1994).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dj94Signal {
    Blocks,
    Bumps,
    #[serde(rename = "heavisine")]
    HeaviSine,
    Doppler,
}

impl Dj94Signal {
    pub const ALL: [Dj94Signal; 4] = [
        Dj94Signal::Blocks,
        Dj94Signal::Bumps,
        Dj94Signal::HeaviSine,
        Dj94Signal::Doppler,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Dj94Signal::Blocks => "blocks",
            Dj94Signal::Bumps => "bumps",
            Dj94Signal::HeaviSine => "heavisine",
            Dj94Signal::Doppler => "doppler",
        }
    }

    /// Closed form at `t in [0, 1]`, as in Table 1 of Donoho & Johnstone,
    /// "Ideal spatial adaptation by wavelet shrinkage", Biometrika 81 (1994),
    /// and WaveLab's `MakeSignal`.
    pub fn eval(&self, t: f64) -> f64 {
        const POS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
        match self {
            Dj94Signal::Blocks => {
                const HGT: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
                POS.iter()
                    .zip(HGT)
                    .map(|(&p, h)| h * (1.0 + sgn(t - p)) / 2.0)
                    .sum()
            }
            Dj94Signal::Bumps => {
                const HGT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
                const WTH: [f64; 11] = [
                    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
                ];
                POS.iter()
                    .zip(HGT)
                    .zip(WTH)
                    .map(|((&p, h), w)| h * (1.0 + ((t - p) / w).abs()).powi(-4))
                    .sum()
            }
            Dj94Signal::HeaviSine => 4.0 * (4.0 * PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t),
            Dj94Signal::Doppler => {
                let eps = 0.05;
                (t * (1.0 - t)).sqrt() * (2.0 * PI * (1.0 + eps) / (t + eps)).sin()
            }
        }
    }

    /// Samples at `t_i = i / n`, `i = 1..=n`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.eval(i as f64 / n as f64)).collect()
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Coarse level of the DJ94 wavelet expansions.
pub const DJ94_COARSE_LEVEL: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthSpec {
    /// `f_k = k^(-3/2) sin(k)`, single layout.
    SobolevSin,
    /// `f_lk = 4 cos^3(k) 2^(-5l/2)` on detail levels `0..=L`, coarse level 0,
    /// scaling coefficient 0.
    DensityLogTruth,
    /// A DJ94 signal sampled on `2^(L+1)` points, rescaled to `target_snr`
    /// against unit-variance noise, analyzed with periodized Symmlet-8 down
    /// to coarse level 5.
    Dj94 { signal: Dj94Signal, target_snr: f64 },
    Custom { layout: FieldLayout, values: Vec<f64> },
}

/// Build the truth. `truncation` is `K` (single layout) or the finest
/// level `L` (wavelet layouts); it is ignored for `Custom`.
pub fn make_truth(spec: &TruthSpec, truncation: usize) -> Result<CoefficientField> {
    let field = match spec {
        TruthSpec::SobolevSin => {
            if truncation == 0 {
                return Err(Error::domain("truncation must be at least 1"));
            }
            CoefficientField::single(
                (1..=truncation)
                    .map(|k| {
                        let k = k as f64;
                        k.powf(-1.5) * k.sin()
                    })
                    .collect(),
            )?
        }
        TruthSpec::DensityLogTruth => {
            let n = 1usize << (truncation + 1);
            let mut v = vec![0.0; n];
            for l in 0..=truncation {
                let s = 2f64.powf(-2.5 * l as f64);
                for k in 0..(1usize << l) {
                    v[(1 << l) + k] = 4.0 * (k as f64).cos().powi(3) * s;
                }
            }
            CoefficientField::new(FieldLayout::Wavelet { coarse_level: 0 }, v)?
        }
        TruthSpec::Dj94 { signal, target_snr } => {
            if truncation <= DJ94_COARSE_LEVEL {
                return Err(Error::domain("DJ94 truths need a finest level above the coarse level 5"));
            }
            let n = 1usize << (truncation + 1);
            let samples = snr_rescale(&signal.samples(n), 1.0, *target_snr)?;
            dwt_forward(&samples, &WaveletFilter::new(WaveletName::Symmlet8), DJ94_COARSE_LEVEL)?
        }
        TruthSpec::Custom { layout, values } => CoefficientField::new(*layout, values.clone())?,
    };
    if field.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("truth has non-finite coefficients"));
    }
    Ok(field)
}

/// Rescale `samples` so that `||samples||_2 / (noise_sd sqrt(len))` equals `target_snr`.
pub fn snr_rescale(samples: &[f64], noise_sd: f64, target_snr: f64) -> Result<Vec<f64>> {
    if !(noise_sd > 0.0 && target_snr > 0.0) {
        return Err(Error::domain("noise sd and target SNR must be positive"));
    }
    let norm = samples.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::domain("cannot rescale an all-zero or non-finite signal"));
    }
    let factor = target_snr * noise_sd * (samples.len() as f64).sqrt() / norm;
    Ok(samples.iter().map(|x| x * factor).collect())
}

/// Achieved `||samples||_2 / (noise_sd sqrt(len))`.
pub fn snr(samples: &[f64], noise_sd: f64) -> f64 {
    samples.iter().map(|x| x * x).sum::<f64>().sqrt() / (noise_sd * (samples.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VolterraConvention {
    /// Singular values `1 / ((k - 1/2) pi)` of `f -> int_0^t f`.
    #[default]
    Reciprocal,
    /// The growing sequence `pi / (k - 1/2)`, kept for side-by-side comparison.
    Printed,
}

pub fn volterra_multipliers(k_max: usize) -> Result<Vec<f64>> {
    volterra_multipliers_with(k_max, VolterraConvention::Reciprocal)
}

pub fn volterra_multipliers_with(k_max: usize, convention: VolterraConvention) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::domain("need at least one Volterra multiplier"));
    }
    Ok((1..=k_max)
        .map(|k| {
            let m = (k as f64 - 0.5) * PI;
            match convention {
                VolterraConvention::Reciprocal => 1.0 / m,
                VolterraConvention::Printed => PI * PI / m,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceObservation {
    pub x: Vec<f64>,
    /// Noise precision: each coordinate has variance `1 / n`.
    pub n: f64,
    pub forward: Option<Vec<f64>>,
    pub layout: FieldLayout,
    pub seed: Option<u64>,
}

impl SequenceObservation {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Forward multiplier of coordinate `i` (1 in the direct model).
    pub fn kappa(&self, i: usize) -> f64 {
        self.forward.as_ref().map_or(1.0, |f| f[i])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::domain(format!("noise precision must be positive, got {}", self.n)));
        }
        if let Some(f) = &self.forward {
            if f.len() != self.x.len() {
                return Err(Error::domain("forward multipliers and observations differ in length"));
            }
            if f.iter().any(|k| !(*k > 0.0)) {
                return Err(Error::domain("forward multipliers must be positive"));
            }
        }
        CoefficientField::new(self.layout, self.x.clone()).map(|_| ())
    }

    pub fn as_field(&self) -> CoefficientField {
        CoefficientField::new(self.layout, self.x.clone()).expect("validated observation layout")
    }
}

/// Draw `X = kappa * f + eps / sqrt(n)`.
pub fn simulate(
    truth: &CoefficientField,
    n: f64,
    forward: Option<&[f64]>,
    seed: u64,
) -> Result<SequenceObservation> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("noise precision must be positive, got {n}")));
    }
    if let Some(f) = forward {
        if f.len() != truth.len() {
            return Err(Error::domain(format!(
                "forward length {} does not match truth length {}",
                f.len(),
                truth.len()
            )));
        }
    }
    let mut rng = rng_from_seed(seed);
    let sd = 1.0 / n.sqrt();
    let x = truth
        .values()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let kappa = forward.map_or(1.0, |fw| fw[i]);
            let e: f64 = StandardNormal.sample(&mut rng);
            kappa * f + sd * e
        })
        .collect();
    Ok(SequenceObservation {
        x,
        n,
        forward: forward.map(|f| f.to_vec()),
        layout: truth.layout(),
        seed: Some(seed),
    })
}
