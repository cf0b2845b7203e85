//! Seeded sampling of every ensemble by its defining matrix construction.
//!
//! The distributions here are defined through explicit constructions
//! (A = ZZᵀ, Y = ZCᵀ, then Moore–Penrose algebra), so sampling follows the
//! constructions directly. This gives distribution ground truth that is
//! independent of any closed-form density, which is exactly what the
//! verification layer needs.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    mp_pinv, rank_with_tol, require_finite, spectral_nonsingular, DistDims, OrderedEigs, RangeKind,
    SpectralPsd, DEFAULT_REL_TOL,
};

/// A reproducible, splittable random stream: the same (seed, stream_id)
/// always reproduces the identical draw sequence, and distinct stream ids
/// give statistically independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Concrete generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derives the stream for batch `index`, for deterministic parallel MC.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }
}

/// Factor C of a possibly singular row scale Ξ = C·Cᵀ, with C of full
/// column rank r_xi.
#[derive(Debug, Clone)]
pub struct CovFactor {
    factor: DMatrix<f64>,
}

impl CovFactor {
    pub fn new(factor: DMatrix<f64>) -> Result<Self> {
        require_finite(&factor, "covariance factor")?;
        if factor.ncols() > factor.nrows() {
            return Err(Error::InvalidDims("factor must be r x r_xi with r_xi <= r".into()));
        }
        let rank = rank_with_tol(&factor, DEFAULT_REL_TOL)?;
        if rank < factor.ncols() {
            return Err(Error::RankDeficient { rank, expected: factor.ncols() });
        }
        Ok(Self { factor })
    }

    pub fn size(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Dense Ξ = C·Cᵀ.
    pub fn xi(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }
}

/// Parameters of the general singular matricvariate t family. `None` scale
/// stands for the identity.
#[derive(Debug, Clone)]
pub struct TParams {
    pub dims: DistDims,
    pub mu: DMatrix<f64>,
    pub theta: Option<SpectralPsd>,
    pub xi: Option<CovFactor>,
}

impl TParams {
    pub fn new(
        dims: DistDims,
        mu: DMatrix<f64>,
        theta: Option<SpectralPsd>,
        xi: Option<CovFactor>,
    ) -> Result<Self> {
        require_finite(&mu, "mu")?;
        if mu.shape() != (dims.m, dims.r) {
            return Err(Error::InvalidDims(format!(
                "mu must be {}x{}, got {}x{}",
                dims.m,
                dims.r,
                mu.nrows(),
                mu.ncols()
            )));
        }
        if let Some(theta) = &theta {
            if theta.dim() != dims.m {
                return Err(Error::InvalidDims("theta dimension must equal m".into()));
            }
            // Rank-deficient Θ sampling is not characterized; full rank only.
            if theta.rank() != dims.m {
                return Err(Error::Unsupported(
                    "only full-rank (or identity) theta is supported".into(),
                ));
            }
        }
        if let Some(xi) = &xi {
            if xi.size() != dims.r || xi.rank() != dims.r_xi {
                return Err(Error::InvalidDims(format!(
                    "xi factor must be {}x{}, got {}x{}",
                    dims.r,
                    dims.r_xi,
                    xi.size(),
                    xi.rank()
                )));
            }
        } else if dims.r_xi != dims.r {
            return Err(Error::InvalidDims(
                "identity xi requires r_xi = r".into(),
            ));
        }
        Ok(Self { dims, mu, theta, xi })
    }

    /// Identity scales, zero location.
    pub fn identity(dims: DistDims) -> Result<Self> {
        let mu = DMatrix::zeros(dims.m, dims.r);
        Self::new(dims, mu, None, None)
    }
}

fn std_normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Spectral form of Z·Zᵀ computed from the SVD of the factor Z.
fn gram_spectral(z: &DMatrix<f64>) -> Result<SpectralPsd> {
    let svd = z.clone().svd(true, false);
    let svals: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let smax = svals.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::RankZero);
    }
    let cutoff = DEFAULT_REL_TOL * smax * z.nrows().max(z.ncols()) as f64;
    let kept = svals.iter().filter(|&&s| s > cutoff).count();
    let u = svd.u.expect("svd with u");
    let mut frame = u.columns(0, kept).into_owned();
    canonical_signs(&mut frame);
    let eigs = OrderedEigs::new(svals[..kept].iter().map(|s| s * s).collect(), RangeKind::Positive)?;
    Ok(SpectralPsd::from_parts_unchecked(frame, eigs))
}

fn canonical_signs(frame: &mut DMatrix<f64>) {
    for mut col in frame.column_iter_mut() {
        let (mut best, mut best_abs) = (0usize, 0.0f64);
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.scale_mut(-1.0);
        }
    }
}

/// (A^{1/2})⁺ as a dense matrix, from the spectral form of A.
fn pinv_sqrt(a: &SpectralPsd) -> DMatrix<f64> {
    let mut scaled = a.frame().clone();
    for (j, &e) in a.eigs().values().iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / e.sqrt());
    }
    &scaled * a.frame().transpose()
}

/// Matrix-variate normal Y ~ N(0, I_m ⊗ Ξ): Y = Z·Cᵀ with Z m×r_xi standard
/// normal, or a plain m×r standard normal when Ξ is the identity.
pub fn sample_matrix_normal(
    m: usize,
    r: usize,
    xi: Option<&CovFactor>,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    match xi {
        None => std_normal_matrix(m, r, rng),
        Some(c) => {
            debug_assert_eq!(c.size(), r);
            let z = std_normal_matrix(m, c.rank(), rng);
            z * c.factor().transpose()
        }
    }
}

/// (Pseudo-)Wishart A = Z·Zᵀ with Z m×n standard normal, in spectral form
/// of rank min(m, n).
pub fn sample_pseudo_wishart(m: usize, n: usize, rng: &mut impl Rng) -> Result<SpectralPsd> {
    let z = std_normal_matrix(m, n, rng);
    gram_spectral(&z)
}

/// One (A, Y) construction pair: A in spectral form of rank min(m, n), and
/// Y m×k. When `theta` is given, both pick up the Θ^{1/2} scale (A becomes
/// Wishart with scale Θ and Y has covariance Θ ⊗ I_k).
pub struct ConstructionDraw {
    pub a: SpectralPsd,
    pub y: DMatrix<f64>,
}

pub fn draw_construction(
    m: usize,
    n: usize,
    k: usize,
    theta: Option<&SpectralPsd>,
    rng: &mut impl Rng,
) -> Result<ConstructionDraw> {
    let g = std_normal_matrix(m, n, rng);
    let y = std_normal_matrix(m, k, rng);
    match theta {
        None => Ok(ConstructionDraw { a: gram_spectral(&g)?, y }),
        Some(t) => {
            let mut root = t.frame().clone();
            for (j, &e) in t.eigs().values().iter().enumerate() {
                root.column_mut(j).scale_mut(e.sqrt());
            }
            let half = &root * t.frame().transpose();
            Ok(ConstructionDraw { a: gram_spectral(&(&half * g))?, y: half * y })
        }
    }
}

/// T = (A^{1/2})⁺·Y + μ from a shared (A, Y) draw.
pub fn t_from(a: &SpectralPsd, y: &DMatrix<f64>, mu: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let mut t = pinv_sqrt(a) * y;
    if let Some(mu) = mu {
        t += mu;
    }
    t
}

/// Beta II spectral form F = (A^{1/2})⁺·YYᵀ·(A^{1/2})⁺ from a shared draw.
pub fn beta2_spectral_from(a: &SpectralPsd, y: &DMatrix<f64>) -> Result<SpectralPsd> {
    gram_spectral(&(pinv_sqrt(a) * y))
}

/// Beta II full-rank form F̃ = Yᵀ·A⁺·Y from a shared draw.
pub fn beta2_full_from(a: &SpectralPsd, y: &DMatrix<f64>) -> DMatrix<f64> {
    let pa = a.map_eigs(|e| 1.0 / e).reconstruct();
    let f = y.transpose() * pa * y;
    // exact symmetrization; the product is symmetric only up to roundoff
    0.5 * (&f + f.transpose())
}

/// Beta I spectral form U = ((A+YYᵀ)^{1/2})⁺·YYᵀ·((A+YYᵀ)^{1/2})⁺.
pub fn beta1_spectral_from(a: &SpectralPsd, y: &DMatrix<f64>) -> Result<SpectralPsd> {
    let s = a.reconstruct() + y * y.transpose();
    let s = spectral_nonsingular(&s, DEFAULT_REL_TOL)?;
    gram_spectral(&(pinv_sqrt(&s) * y))
}

/// Beta I full-rank form Ũ = Yᵀ·(A + YYᵀ)⁺·Y.
///
/// The pseudoinverse goes through the same spectral decomposition as the
/// other shared-draw builders, so per-draw identities against them hold to
/// roundoff rather than to the (possibly much larger) SVD-vs-eigen gap on
/// ill-conditioned draws.
pub fn beta1_full_from(a: &SpectralPsd, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = a.reconstruct() + y * y.transpose();
    let s = spectral_nonsingular(&s, DEFAULT_REL_TOL)?;
    let ps = s.map_eigs(|e| 1.0 / e).reconstruct();
    let u = y.transpose() * ps * y;
    Ok(0.5 * (&u + u.transpose()))
}

/// Inverted t form R = [(A + YYᵀ)⁺]^{1/2}·Y.
pub fn inverted_t_from(a: &SpectralPsd, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = a.reconstruct() + y * y.transpose();
    let s = spectral_nonsingular(&s, DEFAULT_REL_TOL)?;
    Ok(pinv_sqrt(&s) * y)
}

/// Draws T = (A^{1/2})⁺·Y + μ with A Wishart(n, Θ) and Y ~ N(0, I ⊗ Ξ).
pub fn sample_t(params: &TParams, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let d = &params.dims;
    let g = std_normal_matrix(d.m, d.n, rng);
    let a = match &params.theta {
        None => gram_spectral(&g)?,
        Some(t) => {
            let mut root = t.frame().clone();
            for (j, &e) in t.eigs().values().iter().enumerate() {
                root.column_mut(j).scale_mut(e.sqrt());
            }
            gram_spectral(&(&root * t.frame().transpose() * g))?
        }
    };
    let y = sample_matrix_normal(d.m, d.r, params.xi.as_ref(), rng);
    Ok(t_from(&a, &y, Some(&params.mu)))
}

/// Draws X = T·(C⁺)ᵀ (linear transform of T; requires μ = 0 and explicit Ξ).
pub fn sample_x(params: &TParams, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if params.mu.iter().any(|&v| v != 0.0) {
        return Err(Error::Unsupported("X = T·(C⁺)ᵀ is defined for μ = 0".into()));
    }
    let c = params
        .xi
        .as_ref()
        .ok_or_else(|| Error::Unsupported("X requires an explicit covariance factor C".into()))?;
    let t = sample_t(params, rng)?;
    let c_pinv = mp_pinv(c.factor(), DEFAULT_REL_TOL)?;
    Ok(t * c_pinv.transpose())
}

/// Which of the two equivalent beta constructions to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaVariant {
    /// m×m rank-r_xi spectral form.
    SpectralM,
    /// full-rank r×r symmetric form (requires m ≥ n ≥ r and Ξ = I).
    FullR,
}

/// A sampled beta matrix in either representation.
#[derive(Debug, Clone)]
pub enum BetaSample {
    Spectral(SpectralPsd),
    Full(DMatrix<f64>),
}

impl BetaSample {
    /// Nonzero eigenvalues, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match self {
            BetaSample::Spectral(s) => Ok(s.eigs().values().to_vec()),
            BetaSample::Full(m) => {
                let s = spectral_nonsingular(m, DEFAULT_REL_TOL)?;
                Ok(s.eigs().values().to_vec())
            }
        }
    }
}

fn beta_draw(dims: &DistDims, variant: BetaVariant, rng: &mut impl Rng) -> Result<ConstructionDraw> {
    match variant {
        BetaVariant::SpectralM => draw_construction(dims.m, dims.n, dims.r_xi, None, rng),
        BetaVariant::FullR => {
            dims.require_full_r_order()?;
            draw_construction(dims.m, dims.n, dims.r, None, rng)
        }
    }
}

/// Doubly singular beta type II sample.
pub fn sample_beta2(dims: &DistDims, variant: BetaVariant, rng: &mut impl Rng) -> Result<BetaSample> {
    let draw = beta_draw(dims, variant, rng)?;
    match variant {
        BetaVariant::SpectralM => Ok(BetaSample::Spectral(beta2_spectral_from(&draw.a, &draw.y)?)),
        BetaVariant::FullR => Ok(BetaSample::Full(beta2_full_from(&draw.a, &draw.y))),
    }
}

/// Doubly singular beta type I sample.
pub fn sample_beta1(dims: &DistDims, variant: BetaVariant, rng: &mut impl Rng) -> Result<BetaSample> {
    let draw = beta_draw(dims, variant, rng)?;
    match variant {
        BetaVariant::SpectralM => Ok(BetaSample::Spectral(beta1_spectral_from(&draw.a, &draw.y)?)),
        BetaVariant::FullR => Ok(BetaSample::Full(beta1_full_from(&draw.a, &draw.y)?)),
    }
}

/// Inverted matricvariate t sample R (all singular values in (0,1) when
/// A + YYᵀ is nonsingular).
pub fn sample_inverted_t(dims: &DistDims, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    dims.require_inverted_t_order()?;
    let draw = draw_construction(dims.m, dims.n, dims.r, None, rng)?;
    inverted_t_from(&draw.a, &draw.y)
}

/// Largest eigenvalue of Ũ = Yᵀ(A + YYᵀ)⁺Y with optional Θ scale applied to
/// both A and Y (the scale-invariance statistic).
pub fn sample_beta1_full_largest_eig(
    dims: &DistDims,
    theta: Option<&SpectralPsd>,
    rng: &mut impl Rng,
) -> Result<f64> {
    dims.require_full_r_order()?;
    let draw = draw_construction(dims.m, dims.n, dims.r, theta, rng)?;
    let u = beta1_full_from(&draw.a, &draw.y)?;
    let eigs = spectral_nonsingular(&u, DEFAULT_REL_TOL)?;
    Ok(eigs.eigs().values()[0])
}
