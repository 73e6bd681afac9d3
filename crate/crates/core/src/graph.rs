//! Affinity graphs, the three Laplacians, cut objectives and partition geometry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::KernelSpec;
use crate::matrix::{sq_dist, DenseMatrix};
use crate::points::{Partition, PointSet};

/// Degrees at or below this value are treated as numerically zero.
pub const DEGREE_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `L = D - A`.
    #[serde(rename = "L")]
    Unnormalized,
    /// `L_N = I - D^{-1/2} A D^{-1/2}` with self-loops in `A`.
    #[serde(rename = "LN")]
    Normalized,
    /// `L_N0 = I - D0^{-1/2} A0 D0^{-1/2}` with a zero-diagonal `A0`.
    #[serde(rename = "LN0")]
    NormalizedNoSelfLoops,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Unnormalized, Variant::Normalized, Variant::NormalizedNoSelfLoops];

    pub fn short_name(self) -> &'static str {
        match self {
            Variant::Unnormalized => "L",
            Variant::Normalized => "LN",
            Variant::NormalizedNoSelfLoops => "LN0",
        }
    }

    pub fn self_loops(self) -> bool {
        self != Variant::NormalizedNoSelfLoops
    }

    pub fn is_normalized(self) -> bool {
        self != Variant::Unnormalized
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" => Ok(Variant::Unnormalized),
            "LN" => Ok(Variant::Normalized),
            "LN0" => Ok(Variant::NormalizedNoSelfLoops),
            other => Err(Error::InvalidParameter(format!("unknown variant {other:?}; expected L, LN or LN0"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BundleOptions {
    /// Clamp `L_N0` degrees from below instead of failing.
    pub degree_floor: Option<f64>,
    pub exec: Execution,
}

/// Affinity matrix, degrees and one Laplacian variant.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    variant: Variant,
    sigma: f64,
    affinity: DenseMatrix,
    degree: Vec<f64>,
    laplacian: DenseMatrix,
}

impl LaplacianBundle {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    /// Affinity with unit diagonal, or zero diagonal for `L_N0`.
    pub fn affinity(&self) -> &DenseMatrix {
        &self.affinity
    }

    /// Row sums of [`Self::affinity`], after any degree floor.
    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn laplacian(&self) -> &DenseMatrix {
        &self.laplacian
    }

    /// Diagonal scaling `s` with `laplacian = S·(D0 - A0)·S`, `S = diag(s)`.
    pub(crate) fn row_scaling(&self) -> Vec<f64> {
        match self.variant {
            Variant::Unnormalized => vec![1.0; self.len()],
            _ => self.degree.iter().map(|d| 1.0 / d.sqrt()).collect(),
        }
    }
}

pub fn build_bundle(points: &PointSet, spec: &KernelSpec, sigma: f64, variant: Variant) -> Result<LaplacianBundle> {
    build_bundle_with(points, spec, sigma, variant, BundleOptions::default())
}

pub fn build_bundle_with(
    points: &PointSet,
    spec: &KernelSpec,
    sigma: f64,
    variant: Variant,
    opts: BundleOptions,
) -> Result<LaplacianBundle> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidParameter("a graph needs at least two points".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")));
    }
    if let Some(f) = opts.degree_floor {
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidParameter(format!("degree floor must be positive, got {f}")));
        }
    }
    let affinity = affinity_matrix(points, spec, sigma, variant.self_loops(), opts.exec);
    // Off-diagonal row sums: the diagonal of D - A, free of cancellation.
    let off_sums: Vec<f64> = exec::map_indices(opts.exec, n, |i| {
        affinity.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum()
    });
    let mut degree: Vec<f64> =
        off_sums.iter().map(|s| if variant.self_loops() { s + 1.0 } else { *s }).collect();
    if variant == Variant::NormalizedNoSelfLoops {
        for (i, d) in degree.iter_mut().enumerate() {
            if *d <= DEGREE_UNDERFLOW {
                match opts.degree_floor {
                    Some(f) => *d = d.max(f),
                    None => return Err(Error::SingularDegree { index: i, degree: *d }),
                }
            }
        }
    }
    let mut laplacian = DenseMatrix::zeros(n, n);
    let scale: Vec<f64> = match variant {
        Variant::Unnormalized => vec![1.0; n],
        _ => degree.iter().map(|d| 1.0 / d.sqrt()).collect(),
    };
    exec::for_each_row(opts.exec, laplacian.as_mut_slice(), n, |i, row| {
        let a = affinity.row(i);
        for j in 0..n {
            row[j] = if i == j { off_sums[i] * scale[i] * scale[i] } else { -a[j] * scale[i] * scale[j] };
        }
    });
    if !laplacian.is_finite() {
        return Err(Error::NonFinite("laplacian"));
    }
    Ok(LaplacianBundle { variant, sigma, affinity, degree, laplacian })
}

/// `A_ij = K_σ(‖x_i - x_j‖)`, with values below the smallest normal clamped to zero.
pub fn affinity_matrix(
    points: &PointSet,
    spec: &KernelSpec,
    sigma: f64,
    self_loops: bool,
    exec: Execution,
) -> DenseMatrix {
    let n = points.len();
    let inv = 1.0 / (sigma * sigma);
    let mut a = DenseMatrix::zeros(n, n);
    exec::for_each_row(exec, a.as_mut_slice(), n, |i, row| {
        let pi = points.point(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                if self_loops { 1.0 } else { 0.0 }
            } else {
                let k = spec.eval_sq_scaled(sq_dist(pi, points.point(j)), inv);
                if k < f64::MIN_POSITIVE { 0.0 } else { k }
            };
        }
    });
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    /// `uᵀ L u`.
    pub matrix: f64,
    /// `½ Σ_ij A_ij (u_i - u_j)²`.
    pub pairwise: f64,
}

pub fn quadratic_form(bundle: &LaplacianBundle, u: &[f64]) -> Result<QuadraticForm> {
    if bundle.variant != Variant::Unnormalized {
        return Err(Error::InvalidParameter("quadratic form identity needs the unnormalized Laplacian".into()));
    }
    let n = bundle.len();
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.len() });
    }
    let lu = bundle.laplacian.mul_vec(u);
    let matrix = u.iter().zip(&lu).map(|(a, b)| a * b).sum();
    let mut pairwise = 0.0;
    for i in 0..n {
        let row = bundle.affinity.row(i);
        for j in 0..n {
            let diff = u[i] - u[j];
            pairwise += row[j] * diff * diff;
        }
    }
    Ok(QuadraticForm { matrix, pairwise: 0.5 * pairwise })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutObjectives {
    pub rcut: f64,
    pub ncut: f64,
}

/// RCut and NCut of a partition; `vol` includes the self-loop term `K(0) = 1`.
pub fn cut_objectives(points: &PointSet, spec: &KernelSpec, sigma: f64, partition: &Partition) -> Result<CutObjectives> {
    cut_objectives_with(points, spec, sigma, partition, true)
}

pub fn cut_objectives_with(
    points: &PointSet,
    spec: &KernelSpec,
    sigma: f64,
    partition: &Partition,
    self_loops: bool,
) -> Result<CutObjectives> {
    if partition.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: partition.len() });
    }
    let a = affinity_matrix(points, spec, sigma, self_loops, Execution::default());
    let labels = partition.labels();
    let k = partition.k();
    let mut cut = vec![0.0; k];
    let mut vol = vec![0.0; k];
    for i in 0..points.len() {
        let row = a.row(i);
        for (j, &w) in row.iter().enumerate() {
            vol[labels[i]] += w;
            if labels[j] != labels[i] {
                cut[labels[i]] += w;
            }
        }
    }
    let sizes = partition.sizes();
    let rcut = (0..k).map(|l| cut[l] / sizes[l] as f64).sum();
    let ncut = (0..k).map(|l| if cut[l] == 0.0 { 0.0 } else { cut[l] / vol[l] }).sum();
    Ok(CutObjectives { rcut, ncut })
}

/// Cluster geometry consumed by every bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionProfile {
    pub partition: Partition,
    /// `δ_l`: largest intra-cluster MST edge (0 for singletons).
    pub delta: Vec<f64>,
    /// `d(C_m, X \ C_m)`; infinite when `k = 1`.
    pub separation: Vec<f64>,
    /// `min_m separation_m - max_l δ_l`.
    pub margin: f64,
}

impl PartitionProfile {
    pub fn n(&self) -> usize {
        self.partition.len()
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_separation(&self) -> f64 {
        self.separation.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `min_m sep_m^α - 3·max_l δ_l^α`.
    pub fn strengthened_margin(&self, alpha: f64) -> f64 {
        self.min_separation().powf(alpha) - 3.0 * self.max_delta().powf(alpha)
    }

    pub fn min_cluster_size(&self) -> usize {
        self.partition.sizes().into_iter().min().unwrap_or(0)
    }
}

pub fn partition_profile(points: &PointSet, partition: &Partition) -> Result<PartitionProfile> {
    if partition.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: partition.len() });
    }
    let members = partition.members();
    let delta = members
        .iter()
        .map(|m| mst_edges(points, m).iter().map(|e| e.2).fold(0.0, f64::max))
        .collect::<Vec<_>>();
    let labels = partition.labels();
    let mut sep_sq = vec![f64::INFINITY; partition.k()];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if labels[i] != labels[j] {
                let s = sq_dist(points.point(i), points.point(j));
                sep_sq[labels[i]] = sep_sq[labels[i]].min(s);
                sep_sq[labels[j]] = sep_sq[labels[j]].min(s);
            }
        }
    }
    let separation: Vec<f64> = sep_sq.into_iter().map(f64::sqrt).collect();
    let max_delta = delta.iter().copied().fold(0.0, f64::max);
    let margin = separation.iter().copied().fold(f64::INFINITY, f64::min) - max_delta;
    Ok(PartitionProfile { partition: partition.clone(), delta, separation, margin })
}

/// Euclidean MST over `indices` by Prim's algorithm, as `(i, j, length)` with `i < j`.
/// Ties pick the lowest candidate index, so the result is deterministic.
pub fn mst_edges(points: &PointSet, indices: &[usize]) -> Vec<(usize, usize, f64)> {
    let m = indices.len();
    if m < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; m];
    let mut best = vec![f64::INFINITY; m];
    let mut parent = vec![0usize; m];
    let mut edges = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let pc = points.point(indices[current]);
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for t in 0..m {
            if in_tree[t] {
                continue;
            }
            let d = sq_dist(pc, points.point(indices[t]));
            if d < best[t] {
                best[t] = d;
                parent[t] = current;
            }
            if best[t] < next_d {
                next_d = best[t];
                next = t;
            }
        }
        in_tree[next] = true;
        let (a, b) = (indices[parent[next]], indices[next]);
        edges.push((a.min(b), a.max(b), next_d.sqrt()));
        current = next;
    }
    edges
}

/// The `k`-way partition maximizing the smallest between-cluster distance:
/// the global MST with its `k - 1` longest edges removed. Equal lengths are
/// cut in lexicographic `(i, j)` order; clusters are numbered by smallest member.
pub fn max_margin_partition(points: &PointSet, k: usize) -> Result<Partition> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in [1, {n}], got {k}")));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut edges = mst_edges(points, &all);
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut uf = UnionFind::new(n);
    for &(i, j, _) in &edges[k - 1..] {
        uf.union(i, j);
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    Partition::canonical(&roots)
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}
