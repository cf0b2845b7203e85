//! Deterministic dense linear algebra: Moore–Penrose inverses, nonnegative
//! definite square roots, decompositions restricted to their nonsingular
//! parts, and numerical rank with an explicit tolerance policy.
//!
//! The generalized inverse is always the Moore–Penrose one; results that
//! involve a g-inverse do not depend on the choice, so we fix the unique
//! option that is also numerically convenient.

pub mod gamma;
pub mod types;

pub use gamma::{log_mv_gamma, stiefel_log_volume};
pub use types::{
    require_finite, DistDims, OrderedEigs, RangeKind, SpectralPsd, SvdForm, DEFAULT_REL_TOL,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Gap below which eigen/singular values are treated as numerically tied.
const TIE_REL_TOL: f64 = 1e-12;

fn singular_value_cutoff(svals: &[f64], rel_tol: f64, rows: usize, cols: usize) -> f64 {
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    rel_tol * smax * rows.max(cols) as f64
}

/// Moore–Penrose inverse via SVD with relative-tolerance truncation.
///
/// Singular values below `rel_tol · σ_max · max(rows, cols)` are treated as
/// exactly zero.
pub fn mp_pinv(m: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
    require_finite(m, "mp_pinv input")?;
    let (rows, cols) = m.shape();
    let svd = m.clone().svd(true, true);
    let cutoff = singular_value_cutoff(svd.singular_values.as_slice(), rel_tol, rows, cols);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with v_t");
    // pinv = V · diag(1/σ on kept values) · Uᵀ
    let k = svd.singular_values.len();
    let mut scaled_v = DMatrix::<f64>::zeros(cols, k);
    for j in 0..k {
        let s = svd.singular_values[j];
        if s > cutoff {
            let inv = 1.0 / s;
            for i in 0..cols {
                scaled_v[(i, j)] = vt[(j, i)] * inv;
            }
        }
    }
    Ok(scaled_v * u.transpose())
}

/// Count of singular values above `rel_tol · σ_max · max(rows, cols)`.
pub fn rank_with_tol(m: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    require_finite(m, "rank input")?;
    let svals = m.clone().singular_values();
    let cutoff = singular_value_cutoff(svals.as_slice(), rel_tol, m.nrows(), m.ncols());
    Ok(svals.iter().filter(|&&s| s > cutoff).count())
}

/// Nonnegative definite square root: same frame, square-rooted eigenvalues.
pub fn nnd_sqrt(s: &SpectralPsd) -> SpectralPsd {
    s.map_eigs(f64::sqrt)
}

/// Flips each column so its largest-magnitude entry is positive; returns the
/// applied signs so a paired factor can be flipped consistently.
fn canonicalize_columns(frame: &mut DMatrix<f64>) -> Vec<f64> {
    let mut signs = Vec::with_capacity(frame.ncols());
    for mut col in frame.column_iter_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
        if sign < 0.0 {
            col.scale_mut(-1.0);
        }
        signs.push(sign);
    }
    signs
}

fn check_ties(values: &[f64], scale: f64) -> Result<()> {
    for w in values.windows(2) {
        let gap = w[0] - w[1];
        if gap < TIE_REL_TOL * scale {
            return Err(Error::TiedValues { gap });
        }
    }
    Ok(())
}

/// Nonsingular part of the spectral decomposition of a symmetric PSD matrix.
///
/// Returns the orthonormal frame spanning the column space together with the
/// strictly descending positive eigenvalues. A meaningfully negative
/// eigenvalue (below −rel_tol·‖S‖) is a not-PSD error; the zero matrix is a
/// rank-0 error.
pub fn spectral_nonsingular(s: &DMatrix<f64>, rel_tol: f64) -> Result<SpectralPsd> {
    require_finite(s, "spectral input")?;
    if s.nrows() != s.ncols() {
        return Err(Error::InvalidDims("spectral input must be square".into()));
    }
    if (s - s.transpose()).abs().max() > types::FRAME_TOL * (1.0 + s.abs().max()) {
        return Err(Error::InvalidDims("spectral input must be symmetric".into()));
    }
    let sym = nalgebra::SymmetricEigen::new(s.clone());
    let max_abs = sym.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max_abs == 0.0 {
        return Err(Error::RankZero);
    }
    let min_eig = sym.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -rel_tol * max_abs * s.nrows() as f64 {
        return Err(Error::NotPsd { min_eig });
    }
    let cutoff = rel_tol * max_abs * s.nrows() as f64;
    let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[b].partial_cmp(&sym.eigenvalues[a]).unwrap());
    let kept: Vec<usize> = order.into_iter().filter(|&i| sym.eigenvalues[i] > cutoff).collect();
    if kept.is_empty() {
        return Err(Error::RankZero);
    }
    let values: Vec<f64> = kept.iter().map(|&i| sym.eigenvalues[i]).collect();
    check_ties(&values, max_abs)?;
    let mut frame = DMatrix::<f64>::zeros(s.nrows(), kept.len());
    for (j, &i) in kept.iter().enumerate() {
        frame.set_column(j, &sym.eigenvectors.column(i));
    }
    canonicalize_columns(&mut frame);
    let eigs = OrderedEigs::new(values, RangeKind::Positive)?;
    Ok(SpectralPsd::from_parts_unchecked(frame, eigs))
}

/// Nonsingular part of the SVD of a full column rank m×r matrix:
/// `Q₁ · diag(κ) · Pᵀ` with κ strictly descending.
///
/// Rank-deficient input is rejected, as are numerically tied singular values
/// (a tie has probability zero under every sampler here, so one signals a
/// bug rather than a state to silently perturb).
pub fn svd_nonsingular(m: &DMatrix<f64>, rel_tol: f64) -> Result<SvdForm> {
    require_finite(m, "svd input")?;
    let (rows, cols) = m.shape();
    if cols > rows {
        return Err(Error::InvalidDims(format!(
            "requires rows >= cols, got {rows}x{cols}"
        )));
    }
    let svd = m.clone().svd(true, true);
    let svals: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let cutoff = singular_value_cutoff(&svals, rel_tol, rows, cols);
    let rank = svals.iter().filter(|&&s| s > cutoff).count();
    if rank < cols {
        return Err(Error::RankDeficient { rank, expected: cols });
    }
    let smax = svals[0];
    check_ties(&svals, smax)?;
    let mut left = svd.u.expect("svd with u");
    let vt = svd.v_t.expect("svd with v_t");
    let signs = canonicalize_columns(&mut left);
    // P picks up the same sign flips so Q₁ diag(κ) Pᵀ is unchanged.
    let mut right = vt.transpose();
    for (j, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            right.column_mut(j).scale_mut(-1.0);
        }
    }
    let eigs = OrderedEigs::new(svals, RangeKind::Positive)?;
    SvdForm::from_parts(left, right, eigs)
}
