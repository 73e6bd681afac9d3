//! Smallest eigenvalues of `S·(D0 - A0)·S` to high relative accuracy.
//!
//! A dense solver resolves eigenvalues only down to about `ε·‖L‖`; this route
//! resolves them to full relative precision, which the eigenvalue dichotomy
//! needs when cross-cluster affinities are far below machine epsilon.
//!
//! The graph Laplacian `L = D0 - A0` is factored as `Π·X·diag(g)·Xᵀ·Πᵀ` by
//! eliminating vertices one at a time (Kron reduction). Every off-diagonal of
//! a reduced graph is a sum of nonnegative terms and every pivot `g_t` is
//! recomputed as the row sum of the current off-diagonals, so the factors
//! carry no cancellation. Pivots are chosen greedily by largest reduced
//! degree, which leaves the small pivots at the end. With `Y = S·Π·X` split
//! into bulk and tail columns, the tail singular values orthogonal to the bulk
//! are those of `diag(g_tail)^{1/2}·(ẐᵀẐ)^{-1/2}`, where `Ẑ = S^{-1}·Π·X^{-T}` restricted to
//! the tail columns spans the orthogonal complement of the bulk.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, Par};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const BLOCK: usize = 64;
const MAX_TAIL: usize = 96;

/// Sets the flush-to-zero and denormals-are-zero bits of MXCSR until dropped.
///
/// Products of affinities reach the subnormal range, where arithmetic is two
/// orders of magnitude slower. Flushing perturbs each operation by less than
/// `f64::MIN_POSITIVE` in absolute terms.
struct FlushSubnormals {
    #[cfg(target_arch = "x86_64")]
    saved: u32,
}

impl FlushSubnormals {
    #[allow(deprecated)]
    fn enable() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_getcsr, _mm_setcsr};
            // SAFETY: only the FTZ (bit 15) and DAZ (bit 6) control bits change.
            let saved = unsafe { _mm_getcsr() };
            unsafe { _mm_setcsr(saved | 0x8040) };
            Self { saved }
        }
        #[cfg(not(target_arch = "x86_64"))]
        Self {}
    }
}

impl Drop for FlushSubnormals {
    #[allow(deprecated)]
    fn drop(&mut self) {
        #[cfg(target_arch = "x86_64")]
        // SAFETY: restores the control word read in `enable`.
        unsafe {
            std::arch::x86_64::_mm_setcsr(self.saved)
        };
    }
}

pub(crate) struct KronFactor {
    /// Eliminated vertex at each step.
    order: Vec<usize>,
    /// Pivot `g_t` at each step.
    pivots: Vec<f64>,
    /// Multiplier column for each step, indexed by original vertex.
    multipliers: Vec<Vec<f64>>,
}

/// Eliminate all vertices of the weighted graph `weights` (diagonal ignored).
pub(crate) fn kron_factor(weights: &DenseMatrix) -> KronFactor {
    let _ftz = FlushSubnormals::enable();
    let n = weights.rows();
    let mut work = Mat::<f64>::from_fn(n, n, |i, j| if i == j { 0.0 } else { weights[(i, j)] });
    let mut idx: Vec<usize> = (0..n).collect();
    let mut approx: Vec<f64> = (0..n).map(|i| work.col(i).iter().sum()).collect();
    let mut order = Vec::with_capacity(n);
    let mut pivots = Vec::with_capacity(n);
    let mut multipliers = Vec::with_capacity(n);

    while !idx.is_empty() {
        let r = idx.len();
        let b = BLOCK.min(r);
        let mut panel = Mat::<f64>::zeros(r, b);
        let mut inv = vec![0.0; b];
        let mut removed = vec![false; r];
        let mut col = vec![0.0; r];
        for t in 0..b {
            let mut p = usize::MAX;
            for i in 0..r {
                if !removed[i] && (p == usize::MAX || approx[i] > approx[p]) {
                    p = i;
                }
            }
            for i in 0..r {
                col[i] = if removed[i] || i == p {
                    0.0
                } else {
                    let mut v = work[(i, p)];
                    for s in 0..t {
                        v += panel[(i, s)] * panel[(p, s)] * inv[s];
                    }
                    v
                };
            }
            let g: f64 = col.iter().sum();
            let gi = if g > 0.0 { 1.0 / g } else { 0.0 };
            let mut mult = vec![0.0; n];
            for i in 0..r {
                if col[i] != 0.0 {
                    mult[idx[i]] = -col[i] * gi;
                    approx[i] -= col[i] * col[i] * gi;
                }
                panel[(i, t)] = col[i];
            }
            inv[t] = gi;
            removed[p] = true;
            order.push(idx[p]);
            pivots.push(g);
            multipliers.push(mult);
        }

        let keep: Vec<usize> = (0..r).filter(|&i| !removed[i]).collect();
        let m = keep.len();
        if m == 0 {
            break;
        }
        let mut next = Mat::<f64>::from_fn(m, m, |a, c| work[(keep[a], keep[c])]);
        let lhs = Mat::<f64>::from_fn(m, b, |a, s| panel[(keep[a], s)] * inv[s]);
        let rhs = Mat::<f64>::from_fn(b, m, |s, c| panel[(keep[c], s)]);
        triangular::matmul(
            next.as_mut(),
            BlockStructure::StrictTriangularLower,
            Accum::Add,
            lhs.as_ref(),
            BlockStructure::Rectangular,
            rhs.as_ref(),
            BlockStructure::Rectangular,
            1.0,
            Par::Seq,
        );
        for a in 0..m {
            next[(a, a)] = 0.0;
        }
        // Only the strict lower triangle was updated.
        for c in 0..m {
            for a in (c + 1)..m {
                next[(c, a)] = next[(a, c)];
            }
        }
        approx = (0..m).map(|a| next.col(a).iter().sum()).collect();
        idx = keep.iter().map(|&i| idx[i]).collect();
        work = next;
    }
    KronFactor { order, pivots, multipliers }
}

/// The `count` smallest eigenvalues of `diag(scale)·L·diag(scale)` where `L` is
/// the Laplacian of `weights`. `spectral_scale` is the magnitude of the largest
/// eigenvalue and sets how far the tail must reach.
pub(crate) fn smallest_eigenvalues(
    weights: &DenseMatrix,
    scale: &[f64],
    count: usize,
    spectral_scale: f64,
) -> Result<Vec<f64>> {
    let n = weights.rows();
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > n || scale.len() != n {
        return Err(Error::InvalidParameter("bad request for small eigenvalues".into()));
    }
    let f = kron_factor(weights);

    // Grow the tail until every bulk pivot is well above the resolution floor.
    let mut prefix_min = vec![f64::INFINITY; n + 1];
    for t in 0..n {
        prefix_min[t + 1] = prefix_min[t].min(f.pivots[t]);
    }
    let target = 1e-4 * spectral_scale.max(f64::MIN_POSITIVE);
    let mut m = (count + 2).min(n);
    while m < n.min(MAX_TAIL.max(count + 2)) && prefix_min[n - m] < target {
        m += 1;
    }

    // Z = X^{-T} restricted to the tail columns, indexed by original vertex.
    let mut z = vec![0.0; n * m];
    let mut acc = vec![0.0; m];
    for t in (0..n).rev() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        if t >= n - m {
            acc[t - (n - m)] = 1.0;
        }
        for (j, &x) in f.multipliers[t].iter().enumerate() {
            if x != 0.0 {
                let zj = &z[j * m..(j + 1) * m];
                for c in 0..m {
                    acc[c] -= x * zj[c];
                }
            }
        }
        let v = f.order[t];
        z[v * m..(v + 1) * m].copy_from_slice(&acc);
    }
    for v in 0..n {
        let s = scale[v];
        z[v * m..(v + 1) * m].iter_mut().for_each(|e| *e /= s);
    }

    let r = householder_r(&z, n, m);
    let rinv = upper_inverse(&r, m)?;
    // B = R^{-T}·diag(sqrt(g_tail)): columns of a well-conditioned matrix,
    // scaled, so one-sided Jacobi keeps full relative accuracy.
    let tail = &f.pivots[n - m..];
    let mut b = DenseMatrix::from_fn(m, m, |i, c| rinv[(c, i)] * tail[c].max(0.0).sqrt());
    let mut values = one_sided_jacobi_sq_norms(&mut b);
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    Ok(values)
}

/// Upper-triangular `R` of a Householder QR of the row-major `rows × cols` matrix.
fn householder_r(a: &[f64], rows: usize, cols: usize) -> DenseMatrix {
    let mut w = a.to_vec();
    let at = |w: &Vec<f64>, i: usize, j: usize| w[i * cols + j];
    for j in 0..cols {
        let norm = (j..rows).map(|i| at(&w, i, j).powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if at(&w, j, j) > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| at(&w, i, j)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in j..cols {
            let dotv: f64 = (j..rows).map(|i| v[i - j] * at(&w, i, c)).sum();
            let f = 2.0 * dotv / vnorm2;
            for i in j..rows {
                w[i * cols + c] -= f * v[i - j];
            }
        }
    }
    DenseMatrix::from_fn(cols, cols, |i, j| if j >= i { w[i * cols + j] } else { 0.0 })
}

fn upper_inverse(r: &DenseMatrix, m: usize) -> Result<DenseMatrix> {
    let mut inv = DenseMatrix::zeros(m, m);
    for c in 0..m {
        for i in (0..=c).rev() {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for l in (i + 1)..=c {
                s -= r[(i, l)] * inv[(l, c)];
            }
            if r[(i, i)] == 0.0 {
                return Err(Error::Eigen("singular tail basis in small-eigenvalue refinement".into()));
            }
            inv[(i, c)] = s / r[(i, i)];
        }
    }
    Ok(inv)
}

/// Squared singular values of `b` by one-sided Jacobi on its columns.
fn one_sided_jacobi_sq_norms(b: &mut DenseMatrix) -> Vec<f64> {
    let (rows, cols) = (b.rows(), b.cols());
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..rows {
                    let (x, y) = (b[(i, p)], b[(i, q)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (b[(i, p)], b[(i, q)]);
                    b[(i, p)] = c * x - s * y;
                    b[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..cols).map(|c| (0..rows).map(|i| b[(i, c)].powi(2)).sum()).collect()
}
