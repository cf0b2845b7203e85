//! Multivariate gamma function and Stiefel manifold volumes, in log space.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144729885849400174143427351353058711647;
const LN_2: f64 = core::f64::consts::LN_2;

/// log Γ_p[a] = (p(p−1)/4)·log π + Σ_{i=1..p} log Γ(a − (i−1)/2).
///
/// Requires a > (p−1)/2 so every ordinary gamma argument is positive.
pub fn log_mv_gamma(p: usize, a: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidDims("p must be positive".into()));
    }
    if a <= (p as f64 - 1.0) / 2.0 {
        return Err(Error::GammaPole { p, a });
    }
    let mut acc = (p * (p - 1)) as f64 / 4.0 * LN_PI;
    for i in 0..p {
        acc += ln_gamma(a - i as f64 / 2.0);
    }
    Ok(acc)
}

/// log of the volume of the Stiefel manifold V_{r,m}: log(2^r · π^{mr/2} / Γ_r[m/2]).
pub fn stiefel_log_volume(r: usize, m: usize) -> Result<f64> {
    if r == 0 || r > m {
        return Err(Error::InvalidDims(format!("requires 1 <= r <= m, got r={r}, m={m}")));
    }
    Ok(r as f64 * LN_2 + (m * r) as f64 / 2.0 * LN_PI - log_mv_gamma(r, m as f64 / 2.0)?)
}
