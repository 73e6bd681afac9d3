//! Symmetric eigendecomposition and spectral embeddings.

mod accurate;
mod jacobi;

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::{LaplacianBundle, Variant};
use crate::matrix::{sq_dist, DenseMatrix};

/// Largest order handled by Jacobi rotations under [`Solver::Auto`].
pub const JACOBI_MAX_N: usize = 192;

/// Eigenvalues below this fraction of the spectral radius are recomputed
/// by the high-relative-accuracy route.
pub const REFINE_BELOW: f64 = 1e-8;

/// Eigengaps below this are reported as ties.
pub const TIE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Jacobi up to [`JACOBI_MAX_N`], tridiagonal reduction above.
    #[default]
    Auto,
    Jacobi,
    Tridiagonal,
}

impl Solver {
    fn uses_jacobi(self, n: usize) -> bool {
        match self {
            Solver::Auto => n <= JACOBI_MAX_N,
            Solver::Jacobi => true,
            Solver::Tridiagonal => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecomposeOptions {
    pub solver: Solver,
    /// Recompute eigenvalues below `REFINE_BELOW·‖L‖` to full relative accuracy.
    pub refine_small: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { solver: Solver::Auto, refine_small: true }
    }
}

/// Ascending eigenvalues, orthonormal eigenvectors and embedding rows.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    eigenvalues: Vec<f64>,
    eigenvectors: DenseMatrix,
    embedding: DenseMatrix,
    variant: Variant,
    k: usize,
    row_weights: Vec<f64>,
    refined: usize,
}

impl SpectralEmbedding {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DenseMatrix {
        &self.eigenvectors
    }

    /// `n × k` rows: `U_{i,1:k}`, or `D_ii^{-1/2}·U_{i,1:k}` for normalized variants.
    pub fn embedding(&self) -> &DenseMatrix {
        &self.embedding
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// How many leading eigenvalues came from the high-accuracy route.
    pub fn refined_count(&self) -> usize {
        self.refined
    }

    /// Embedding rows of a different width from the same decomposition.
    pub fn embedding_of_width(&self, width: usize) -> Result<DenseMatrix> {
        let n = self.len();
        if width == 0 || width > n {
            return Err(Error::InvalidParameter(format!("embedding width must lie in [1, {n}], got {width}")));
        }
        Ok(DenseMatrix::from_fn(n, width, |i, j| self.row_weights[i] * self.eigenvectors[(i, j)]))
    }

    /// Same decomposition with embedding width `k`.
    pub fn with_k(&self, k: usize) -> Result<SpectralEmbedding> {
        let embedding = self.embedding_of_width(k)?;
        Ok(SpectralEmbedding { embedding, k, ..self.clone() })
    }

    pub fn embedding_distance(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.len();
        if i >= n || j >= n {
            return Err(Error::InvalidParameter(format!("row index out of range for {n} rows")));
        }
        Ok(sq_dist(self.embedding.row(i), self.embedding.row(j)).sqrt())
    }

    /// `e_{k+1} - e_k`, or `None` when `k = n`.
    pub fn eigengap(&self) -> Option<f64> {
        (self.k < self.len()).then(|| self.eigenvalues[self.k] - self.eigenvalues[self.k - 1])
    }

    pub fn has_tie_at_k(&self) -> bool {
        self.eigengap().is_some_and(|g| g < TIE_GAP)
    }

    /// Perturbation scale of the embedding rows due to rounding:
    /// `16·n·ε_mach·‖L‖/(e_{k+1} - e_k)` times the largest row weight.
    /// Infinite when the eigengap vanishes.
    pub fn resolution(&self) -> f64 {
        let n = self.len();
        let radius = self.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
        let row_scale = self.row_weights.iter().copied().fold(0.0, f64::max);
        match self.eigengap() {
            None => 0.0,
            Some(gap) if gap > 0.0 => 16.0 * n as f64 * f64::EPSILON * radius / gap * row_scale,
            Some(_) => f64::INFINITY,
        }
    }

    /// Residual and orthonormality diagnostics against the bundle the
    /// decomposition came from.
    pub fn check(&self, bundle: &LaplacianBundle) -> InvariantReport {
        let n = self.len();
        let l = bundle.laplacian();
        let mut max_scaled_residual = 0.0f64;
        for j in 0..self.k {
            let u = self.eigenvectors.column(j);
            let lu = l.mul_vec(&u);
            let res = lu.iter().zip(&u).map(|(a, b)| (a - self.eigenvalues[j] * b).powi(2)).sum::<f64>().sqrt();
            max_scaled_residual = max_scaled_residual.max(res / self.eigenvalues[j].abs().max(1.0));
        }
        let mut max_orthonormality_error = 0.0f64;
        let ut = self.eigenvectors.transpose();
        for a in 0..n {
            for b in a..n {
                let d = crate::matrix::dot(ut.row(a), ut.row(b)) - if a == b { 1.0 } else { 0.0 };
                max_orthonormality_error = max_orthonormality_error.max(d.abs());
            }
        }
        let ascending = self.eigenvalues.windows(2).all(|w| w[0] <= w[1]);
        let sign_convention = (0..n).all(|j| {
            let col = self.eigenvectors.column(j);
            let p = argmax_abs(&col);
            col[p] >= 0.0
        });
        InvariantReport { max_scaled_residual, max_orthonormality_error, ascending, sign_convention }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    /// `max_{j≤k} ‖L u_j - e_j u_j‖ / max(1, |e_j|)`.
    pub max_scaled_residual: f64,
    /// `max |UᵀU - I|`.
    pub max_orthonormality_error: f64,
    pub ascending: bool,
    pub sign_convention: bool,
}

impl InvariantReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_scaled_residual <= tol && self.max_orthonormality_error <= tol && self.ascending && self.sign_convention
    }
}

pub fn decompose(bundle: &LaplacianBundle, k: usize) -> Result<SpectralEmbedding> {
    decompose_with(bundle, k, DecomposeOptions::default())
}

pub fn decompose_with(bundle: &LaplacianBundle, k: usize, opts: DecomposeOptions) -> Result<SpectralEmbedding> {
    let n = bundle.len();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in [1, {n}], got {k}")));
    }
    let (mut eigenvalues, eigenvectors) = symmetric_eigen(bundle.laplacian(), opts.solver)?;
    let refined = if opts.refine_small { refine_small(bundle, &mut eigenvalues)? } else { 0 };
    let row_weights: Vec<f64> = match bundle.variant() {
        Variant::Unnormalized => vec![1.0; n],
        _ => bundle.degree().iter().map(|d| 1.0 / d.sqrt()).collect(),
    };
    let embedding = DenseMatrix::from_fn(n, k, |i, j| row_weights[i] * eigenvectors[(i, j)]);
    Ok(SpectralEmbedding { eigenvalues, eigenvectors, embedding, variant: bundle.variant(), k, row_weights, refined })
}

/// Ascending Laplacian eigenvalues without eigenvectors.
pub fn spectrum(bundle: &LaplacianBundle, opts: DecomposeOptions) -> Result<Vec<f64>> {
    let l = bundle.laplacian();
    let n = l.rows();
    if !l.is_finite() {
        return Err(Error::NonFinite("matrix passed to the eigensolver"));
    }
    let mut values = if opts.solver.uses_jacobi(n) {
        symmetric_eigen(l, Solver::Jacobi)?.0
    } else {
        let a = Mat::<f64>::from_fn(n, n, |i, j| l[(i, j)]);
        let mut v = a.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        v.sort_by(f64::total_cmp);
        v
    };
    if opts.refine_small {
        refine_small(bundle, &mut values)?;
    }
    Ok(values)
}

/// Replaces eigenvalues below `REFINE_BELOW·radius` with high-accuracy values.
fn refine_small(bundle: &LaplacianBundle, eigenvalues: &mut [f64]) -> Result<usize> {
    let radius = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let count = eigenvalues.iter().take_while(|&&e| e < REFINE_BELOW * radius).count();
    if count == 0 || radius == 0.0 {
        return Ok(0);
    }
    let mut weights = bundle.affinity().clone();
    for i in 0..weights.rows() {
        weights[(i, i)] = 0.0;
    }
    let small = accurate::smallest_eigenvalues(&weights, &bundle.row_scaling(), count, radius)?;
    eigenvalues[..count].copy_from_slice(&small);
    Ok(count)
}

/// Ascending eigenvalues and sign-normalized eigenvector columns of a symmetric matrix.
pub fn symmetric_eigen(m: &DenseMatrix, solver: Solver) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::DimensionMismatch { expected: n, found: m.cols() });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix passed to the eigensolver"));
    }
    let (values, vectors) = if solver.uses_jacobi(n) {
        let (values, vectors) = jacobi::jacobi_eigen(m)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sorted = order.iter().map(|&j| values[j]).collect();
        (sorted, DenseMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]))
    } else {
        let a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
        let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        ((0..n).map(|j| s[j]).collect(), DenseMatrix::from_fn(n, n, |i, j| u[(i, j)]))
    };
    let mut vectors = vectors;
    for j in 0..n {
        let col = vectors.column(j);
        if col[argmax_abs(&col)] < 0.0 {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok((values, vectors))
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}
