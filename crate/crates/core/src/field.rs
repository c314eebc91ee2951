//! Coefficient containers for single-index and wavelet expansions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::priors::IndexLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum FieldLayout {
    /// `values[k - 1]` holds `f_k`.
    Single,
    /// Flat periodized-DWT order: the `2^coarse_level` scaling
    /// coefficients, then detail levels `coarse_level, coarse_level + 1, ...`
    /// with `2^l` entries each.
    Wavelet { coarse_level: usize },
}

impl FieldLayout {
    pub fn index_layout(&self) -> IndexLayout {
        match self {
            FieldLayout::Single => IndexLayout::Single,
            FieldLayout::Wavelet { .. } => IndexLayout::Wavelet,
        }
    }

    /// Detail level of flat position `i`, `None` for the scaling block or
    /// the single layout.
    pub fn level_of(&self, i: usize) -> Option<usize> {
        match *self {
            FieldLayout::Single => None,
            FieldLayout::Wavelet { coarse_level } => {
                if i < (1usize << coarse_level) {
                    None
                } else {
                    Some(usize::BITS as usize - 1 - i.leading_zeros() as usize)
                }
            }
        }
    }

    /// Level counted from the coarse level (the scaling block maps to 0).
    pub fn relative_level(&self, i: usize) -> Option<usize> {
        match *self {
            FieldLayout::Single => None,
            FieldLayout::Wavelet { coarse_level } => {
                Some(self.level_of(i).map_or(0, |l| l - coarse_level))
            }
        }
    }

    /// `(level, index within level)` for wavelet fields, where the scaling
    /// block is reported at `coarse_level - 1`.
    pub fn level_index(&self, i: usize) -> (i64, usize) {
        match *self {
            FieldLayout::Single => (0, i + 1),
            FieldLayout::Wavelet { coarse_level } => match self.level_of(i) {
                None => (coarse_level as i64 - 1, i),
                Some(l) => (l as i64, i - (1usize << l)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    layout: FieldLayout,
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn new(layout: FieldLayout, values: Vec<f64>) -> Result<Self> {
        if let FieldLayout::Wavelet { coarse_level } = layout {
            let n = values.len();
            if !n.is_power_of_two() {
                return Err(Error::domain(format!("wavelet field length {n} is not a power of two")));
            }
            if n.trailing_zeros() as usize <= coarse_level {
                return Err(Error::domain(format!(
                    "wavelet field of length {n} has no detail level above coarse level {coarse_level}"
                )));
            }
        } else if values.is_empty() {
            return Err(Error::domain("single-index field must be nonempty"));
        }
        Ok(Self { layout, values })
    }

    pub fn single(values: Vec<f64>) -> Result<Self> {
        Self::new(FieldLayout::Single, values)
    }

    pub fn layout(&self) -> FieldLayout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coarse_level(&self) -> Option<usize> {
        match self.layout {
            FieldLayout::Single => None,
            FieldLayout::Wavelet { coarse_level } => Some(coarse_level),
        }
    }

    /// `log2` of the length of a wavelet field (number of dyadic levels).
    pub fn depth(&self) -> Option<usize> {
        self.coarse_level().map(|_| self.values.len().trailing_zeros() as usize)
    }

    pub fn scaling(&self) -> Option<&[f64]> {
        self.coarse_level().map(|j0| &self.values[..1 << j0])
    }

    /// Detail coefficients at absolute level `l`.
    pub fn detail(&self, l: usize) -> Option<&[f64]> {
        let j0 = self.coarse_level()?;
        let depth = self.depth()?;
        (l >= j0 && l < depth).then(|| &self.values[1 << l..2 << l])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::domain("replacement values have the wrong length"));
        }
        Ok(Self {
            layout: self.layout,
            values,
        })
    }

    pub fn l2_distance(&self, other: &CoefficientField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelet_levels() {
        let f = CoefficientField::new(FieldLayout::Wavelet { coarse_level: 2 }, (0..32).map(f64::from).collect())
            .unwrap();
        assert_eq!(f.depth(), Some(5));
        assert_eq!(f.scaling().unwrap(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.detail(2).unwrap(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(f.detail(4).unwrap().len(), 16);
        assert!(f.detail(5).is_none());
        let lay = f.layout();
        assert_eq!(lay.level_of(3), None);
        assert_eq!(lay.level_of(4), Some(2));
        assert_eq!(lay.level_of(31), Some(4));
        assert_eq!(lay.relative_level(2), Some(0));
        assert_eq!(lay.relative_level(9), Some(1));
        assert_eq!(lay.level_index(1), (1, 1));
        assert_eq!(lay.level_index(17), (4, 1));
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(CoefficientField::new(FieldLayout::Wavelet { coarse_level: 0 }, vec![0.0; 6]).is_err());
        assert!(CoefficientField::new(FieldLayout::Wavelet { coarse_level: 3 }, vec![0.0; 8]).is_err());
        assert!(CoefficientField::single(vec![]).is_err());
    }
}
