use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Tolerance for orthonormality and reconstruction checks on frames.
pub const FRAME_TOL: f64 = 1e-10;

/// Open range a strictly descending eigenvalue vector must live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeKind {
    /// (0, ∞)
    Positive,
    /// (0, 1)
    Unit,
}

/// Strictly descending positive values (eigenvalues or singular values).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedEigs {
    values: Vec<f64>,
    range_kind: RangeKind,
}

impl OrderedEigs {
    pub fn new(values: Vec<f64>, range_kind: RangeKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::RankZero);
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "OrderedEigs" });
            }
            let in_range = match range_kind {
                RangeKind::Positive => v > 0.0,
                RangeKind::Unit => v > 0.0 && v < 1.0,
            };
            if !in_range {
                return Err(Error::Support(format!(
                    "value {v} outside open range {range_kind:?}"
                )));
            }
        }
        if values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::NotDescending);
        }
        Ok(Self { values, range_kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range_kind(&self) -> RangeKind {
        self.range_kind
    }
}

/// Rank-k positive semidefinite m×m matrix stored as its nonsingular part:
/// an orthonormal m×k frame and the strictly descending positive eigenvalues.
#[derive(Debug, Clone)]
pub struct SpectralPsd {
    frame: DMatrix<f64>,
    eigs: OrderedEigs,
}

impl SpectralPsd {
    /// Builds from parts, checking frame orthonormality within [`FRAME_TOL`].
    pub fn from_parts(frame: DMatrix<f64>, eigs: OrderedEigs) -> Result<Self> {
        if frame.ncols() != eigs.len() || frame.ncols() > frame.nrows() {
            return Err(Error::InvalidDims(format!(
                "frame is {}x{} but {} eigenvalues given",
                frame.nrows(),
                frame.ncols(),
                eigs.len()
            )));
        }
        let gram = frame.transpose() * &frame;
        let id = DMatrix::<f64>::identity(frame.ncols(), frame.ncols());
        if (gram - id).abs().max() > FRAME_TOL {
            return Err(Error::InvalidDims(
                "frame columns are not orthonormal".into(),
            ));
        }
        Ok(Self { frame, eigs })
    }

    /// Internal constructor for frames produced by our own decompositions.
    pub(crate) fn from_parts_unchecked(frame: DMatrix<f64>, eigs: OrderedEigs) -> Self {
        Self { frame, eigs }
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn rank(&self) -> usize {
        self.eigs.len()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn eigs(&self) -> &OrderedEigs {
        &self.eigs
    }

    /// Dense reconstruction `frame · diag(eigs) · frameᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.frame.clone();
        for (j, &e) in self.eigs.values().iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        &scaled * self.frame.transpose()
    }

    /// `frame · diag(f(eigs)) · frameᵀ` for a strictly monotone positive f.
    /// Columns are reordered so the mapped values stay strictly descending
    /// (an order-reversing f such as 1/e flips the frame).
    pub(crate) fn map_eigs(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.eigs.values().iter().map(|&e| f(e)).collect();
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
        let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let mut frame = DMatrix::zeros(self.frame.nrows(), idx.len());
        for (j, &i) in idx.iter().enumerate() {
            frame.column_mut(j).copy_from(&self.frame.column(i));
        }
        let eigs = OrderedEigs::new(sorted, RangeKind::Positive)
            .expect("a strictly monotone map keeps distinct values distinct");
        Self { frame, eigs }
    }
}

/// Nonsingular part of a singular value decomposition of an m×r full
/// column rank matrix: `Q₁ · diag(svals) · Pᵀ`.
#[derive(Debug, Clone)]
pub struct SvdForm {
    left_frame: DMatrix<f64>,
    right_orth: DMatrix<f64>,
    svals: OrderedEigs,
}

impl SvdForm {
    pub fn from_parts(
        left_frame: DMatrix<f64>,
        right_orth: DMatrix<f64>,
        svals: OrderedEigs,
    ) -> Result<Self> {
        let r = svals.len();
        if left_frame.ncols() != r || right_orth.nrows() != r || right_orth.ncols() != r {
            return Err(Error::InvalidDims("SVD factor shapes disagree".into()));
        }
        for (name, q) in [("left frame", &left_frame), ("right factor", &right_orth)] {
            let gram = q.transpose() * q;
            let id = DMatrix::<f64>::identity(r, r);
            if (gram - id).abs().max() > FRAME_TOL {
                return Err(Error::InvalidDims(format!("{name} is not orthonormal")));
            }
        }
        Ok(Self { left_frame, right_orth, svals })
    }

    pub fn rows(&self) -> usize {
        self.left_frame.nrows()
    }

    pub fn cols(&self) -> usize {
        self.svals.len()
    }

    pub fn left_frame(&self) -> &DMatrix<f64> {
        &self.left_frame
    }

    pub fn right_orth(&self) -> &DMatrix<f64> {
        &self.right_orth
    }

    pub fn svals(&self) -> &OrderedEigs {
        &self.svals
    }

    /// Dense reconstruction `Q₁ · diag(svals) · Pᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left_frame.clone();
        for (j, &s) in self.svals.values().iter().enumerate() {
            scaled.column_mut(j).scale_mut(s);
        }
        &scaled * self.right_orth.transpose()
    }
}

/// Integer bookkeeping for the distribution families: sizes m, n, r together
/// with the ranks of the row scale Ξ (r_xi) and the Wishart scale Θ (r_theta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistDims {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub r_xi: usize,
    pub r_theta: usize,
}

impl DistDims {
    /// Dims with full-rank Ξ (r_xi = r) and full-rank Θ (r_theta = m).
    pub fn new(m: usize, n: usize, r: usize) -> Result<Self> {
        Self::with_ranks(m, n, r, r, m)
    }

    pub fn with_ranks(m: usize, n: usize, r: usize, r_xi: usize, r_theta: usize) -> Result<Self> {
        let d = Self { m, n, r, r_xi, r_theta };
        if m == 0 || n == 0 || r == 0 {
            return Err(Error::InvalidDims("m, n, r must be positive".into()));
        }
        if r_xi == 0 || r_xi > r {
            return Err(Error::InvalidDims(format!("requires 0 < r_xi <= r, got r_xi={r_xi}, r={r}")));
        }
        if r_theta == 0 || r_theta > m {
            return Err(Error::InvalidDims(format!(
                "requires 0 < r_theta <= m, got r_theta={r_theta}, m={m}"
            )));
        }
        // side condition m >= q >= r_xi > 0
        if d.q() < r_xi {
            return Err(Error::InvalidDims(format!(
                "requires m >= min(m,n) >= r_xi, got m={m}, n={n}, r_xi={r_xi}"
            )));
        }
        Ok(d)
    }

    /// q = min(m, n), the rank of the Wishart factor.
    pub fn q(&self) -> usize {
        self.m.min(self.n)
    }

    /// q₁ = min(m, n + r_xi).
    pub fn q1(&self) -> usize {
        self.m.min(self.n + self.r_xi)
    }

    /// Checks the order m ≥ n ≥ r required by the full-rank r×r variants.
    pub fn require_full_r_order(&self) -> Result<()> {
        if !(self.m >= self.n && self.n >= self.r) {
            return Err(Error::InvalidDims(format!(
                "requires m >= n >= r, got m={}, n={}, r={}",
                self.m, self.n, self.r
            )));
        }
        Ok(())
    }

    /// Checks the order 0 < r ≤ n ≤ m required by the inverted t family.
    pub fn require_inverted_t_order(&self) -> Result<()> {
        if !(self.r <= self.n && self.n <= self.m) {
            return Err(Error::InvalidDims(format!(
                "requires r <= n <= m, got m={}, n={}, r={}",
                self.m, self.n, self.r
            )));
        }
        Ok(())
    }
}

/// Rejects matrices containing NaN or infinities.
pub fn require_finite(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context });
    }
    Ok(())
}
