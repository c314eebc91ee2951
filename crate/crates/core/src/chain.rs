//! Archive of MCMC draws.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{batch_means_se, mean, sorted_quantile};

/// Post-burn-in draws stored row-major (`n_kept x dim`, every `thin`-th
/// iteration), plus acceptance statistics over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub dim: usize,
    pub draws: Vec<f64>,
    pub accepted: usize,
    pub proposed: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Final step size (for adaptive samplers) or the fixed step used.
    pub step_size: Option<f64>,
    /// Acceptance rate after burn-in, when the sampler tracks it.
    pub post_burn_in_acceptance: Option<f64>,
    /// `(accepted, proposed)` per update block, e.g. `"f"`, `"alpha"`.
    pub blocks: BTreeMap<String, (usize, usize)>,
    /// Log-likelihood at each kept draw.
    pub log_posterior: Vec<f64>,
    /// Hyperparameter traces at each kept draw.
    pub hyper: BTreeMap<String, Vec<f64>>,
    /// Mean over every post-burn-in iteration (not only the thinned ones).
    pub full_mean: Option<Vec<f64>>,
    pub config: Option<serde_json::Value>,
}

impl ChainOutput {
    pub fn new(dim: usize, seed: u64, burn_in: usize) -> Self {
        Self {
            dim,
            draws: Vec::new(),
            accepted: 0,
            proposed: 0,
            burn_in,
            thin: 1,
            seed,
            step_size: None,
            post_burn_in_acceptance: None,
            blocks: BTreeMap::new(),
            log_posterior: Vec::new(),
            hyper: BTreeMap::new(),
            full_mean: None,
            config: None,
        }
    }

    pub fn block_rate(&self, block: &str) -> Option<f64> {
        self.blocks
            .get(block)
            .map(|&(a, p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
    }

    pub fn push(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.draws.extend_from_slice(state);
    }

    pub fn n_kept(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.draws.len() / self.dim
        }
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks(self.dim.max(1))
    }

    /// Trace of coordinate `j`.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.iter().map(|d| d[j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Posterior mean: over all post-burn-in iterations when recorded,
    /// otherwise over the kept draws.
    pub fn mean(&self) -> Result<Vec<f64>> {
        if let Some(m) = &self.full_mean {
            return Ok(m.clone());
        }
        let n = self.n_kept();
        if n == 0 {
            return Err(Error::domain("chain has no draws"));
        }
        let mut m = vec![0.0; self.dim];
        for d in self.iter() {
            for (a, b) in m.iter_mut().zip(d) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= n as f64);
        Ok(m)
    }

    /// Batch-means Monte Carlo standard error of the mean of coordinate `j`.
    pub fn mc_se(&self, j: usize) -> f64 {
        batch_means_se(&self.coordinate(j))
    }

    /// Left-continuous empirical quantile of coordinate `j`.
    pub fn quantile(&self, j: usize, p: f64) -> f64 {
        let mut c = self.coordinate(j);
        c.sort_by(|a, b| a.total_cmp(b));
        sorted_quantile(&c, p)
    }

    /// Mean of a scalar functional over the kept draws.
    pub fn mean_of<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        mean(&self.iter().map(f).collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_summaries() {
        let mut c = ChainOutput::new(2, 1, 0);
        for i in 0..4 {
            c.push(&[i as f64, 10.0 * i as f64]);
        }
        c.accepted = 3;
        c.proposed = 4;
        assert_eq!(c.n_kept(), 4);
        assert_eq!(c.draw(2), &[2.0, 20.0]);
        assert_eq!(c.coordinate(1), vec![0.0, 10.0, 20.0, 30.0]);
        assert_eq!(c.mean().unwrap(), vec![1.5, 15.0]);
        assert_eq!(c.acceptance_rate(), 0.75);
        assert_eq!(c.quantile(0, 0.5), 1.0);
        assert!(ChainOutput::new(3, 0, 0).mean().is_err());
    }
}
