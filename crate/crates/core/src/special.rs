//! Standard normal helpers.
//!
//! `erfc` comes from `libm` (musl port, ~1 ulp), which keeps the normal
//! tails smooth enough for finite-difference checks; the quantile starts
//! from `statrs`'s `erfc_inv` and is polished by one Newton step.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn norm_logpdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// `Phi(x)`, accurate in the lower tail.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Phi(x)`, accurate in the upper tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `Phi^{-1}(p)`; relative accuracy is kept for small `p`.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // work in the lower tail, where p carries full relative precision
    let q = p.min(1.0 - p);
    let mut x = -SQRT_2 * erfc_inv(2.0 * q);
    let fx = norm_cdf(x);
    let dens = norm_pdf(x);
    if dens > 0.0 && fx > 0.0 {
        // Newton step on log Phi for relative accuracy in the far tail
        x -= (fx.ln() - q.ln()) * fx / dens;
    }
    if p < 0.5 {
        x
    } else {
        -x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_identities() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_close!(norm_cdf(1.959963984540054), 0.975, 1e-15);
        assert_close!(norm_sf(8.0) / 6.220960574271785e-16, 1.0, 1e-14);
        for p in [1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8, 0.999] {
            let x = norm_quantile(p);
            assert_close!(norm_cdf(x) / p, 1.0, 1e-13);
        }
    }
}
