//! Closed-form eigenvector and eigenvalue bounds, maximum-margin certificates,
//! and a randomized conformance sweep that checks them against computed
//! decompositions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::eigen::{decompose, symmetric_eigen, Solver};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::graph::{build_bundle_with, partition_profile, BundleOptions, PartitionProfile, Variant};
use crate::kernel::KernelSpec;
use crate::matrix::{sq_dist, DenseMatrix};
use crate::points::{Partition, PointSet};

/// Relative tolerance on every inequality check.
pub const RELATIVE_TOLERANCE: f64 = 1e-8;

/// An eigenvector bound is only checked when the estimated perturbation of
/// the embedding rows stays below this fraction of the bound.
pub const RESOLUTION_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundId {
    EvecWithinL,
    EvecWithinLN,
    EvecWithinLN0,
    CentroidSepOrtho,
    CentroidSepGeneral,
    RankObstructionOrtho,
    RankObstructionGeneral,
    EvalSumL,
    EvalGapL,
    EvalSumLN,
    EvalGapLN,
    EvalSumLN0,
    EvalGapLN0,
    MmcWithinL,
    MmcBetweenL,
    MmcWithinLN,
    MmcBetweenLN,
    MmcRatioLN0,
}

/// Which side of the bound the empirical value must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `empirical ≤ theoretical`.
    Upper,
    /// `empirical ≥ theoretical`.
    Lower,
}

impl BoundId {
    pub const ALL: [BoundId; 18] = [
        BoundId::EvecWithinL,
        BoundId::EvecWithinLN,
        BoundId::EvecWithinLN0,
        BoundId::CentroidSepOrtho,
        BoundId::CentroidSepGeneral,
        BoundId::RankObstructionOrtho,
        BoundId::RankObstructionGeneral,
        BoundId::EvalSumL,
        BoundId::EvalGapL,
        BoundId::EvalSumLN,
        BoundId::EvalGapLN,
        BoundId::EvalSumLN0,
        BoundId::EvalGapLN0,
        BoundId::MmcWithinL,
        BoundId::MmcBetweenL,
        BoundId::MmcWithinLN,
        BoundId::MmcBetweenLN,
        BoundId::MmcRatioLN0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::EvecWithinL => "EvecWithinL",
            BoundId::EvecWithinLN => "EvecWithinLN",
            BoundId::EvecWithinLN0 => "EvecWithinLN0",
            BoundId::CentroidSepOrtho => "CentroidSepOrtho",
            BoundId::CentroidSepGeneral => "CentroidSepGeneral",
            BoundId::RankObstructionOrtho => "RankObstructionOrtho",
            BoundId::RankObstructionGeneral => "RankObstructionGeneral",
            BoundId::EvalSumL => "EvalSumL",
            BoundId::EvalGapL => "EvalGapL",
            BoundId::EvalSumLN => "EvalSumLN",
            BoundId::EvalGapLN => "EvalGapLN",
            BoundId::EvalSumLN0 => "EvalSumLN0",
            BoundId::EvalGapLN0 => "EvalGapLN0",
            BoundId::MmcWithinL => "MmcWithinL",
            BoundId::MmcBetweenL => "MmcBetweenL",
            BoundId::MmcWithinLN => "MmcWithinLN",
            BoundId::MmcBetweenLN => "MmcBetweenLN",
            BoundId::MmcRatioLN0 => "MmcRatioLN0",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            BoundId::CentroidSepOrtho
            | BoundId::CentroidSepGeneral
            | BoundId::RankObstructionOrtho
            | BoundId::RankObstructionGeneral
            | BoundId::EvalGapL
            | BoundId::EvalGapLN
            | BoundId::EvalGapLN0
            | BoundId::MmcBetweenL
            | BoundId::MmcBetweenLN => Direction::Lower,
            _ => Direction::Upper,
        }
    }

    /// Bounds checked on a decomposition of the given variant, in report order.
    pub fn for_variant(variant: Variant) -> &'static [BoundId] {
        match variant {
            Variant::Unnormalized => &[
                BoundId::EvecWithinL,
                BoundId::CentroidSepOrtho,
                BoundId::RankObstructionOrtho,
                BoundId::EvalSumL,
                BoundId::EvalGapL,
                BoundId::MmcWithinL,
                BoundId::MmcBetweenL,
            ],
            Variant::Normalized => &[
                BoundId::EvecWithinLN,
                BoundId::CentroidSepGeneral,
                BoundId::RankObstructionGeneral,
                BoundId::EvalSumLN,
                BoundId::EvalGapLN,
                BoundId::MmcWithinLN,
                BoundId::MmcBetweenLN,
            ],
            Variant::NormalizedNoSelfLoops => &[
                BoundId::EvecWithinLN0,
                BoundId::CentroidSepGeneral,
                BoundId::RankObstructionGeneral,
                BoundId::EvalSumLN0,
                BoundId::EvalGapLN0,
                BoundId::MmcRatioLN0,
            ],
        }
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown bound id {s:?}")))
    }
}

/// A bound value, or the reason its preconditions fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    Value(f64),
    NotApplicable(String),
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Value(v) => Some(*v),
            Bound::NotApplicable(_) => None,
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, Bound::Value(_))
    }
}

/// Parameters a report was evaluated under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundContext {
    pub alpha: f64,
    pub delta: Vec<f64>,
    pub separation: Vec<f64>,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Clusterability radius of the rows against their representatives.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Smallest and largest eigenvalue of `VᵀV`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram_extremes: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_threshold: Option<f64>,
    /// Estimated perturbation of the embedding rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub applicable: bool,
    pub theoretical: Option<f64>,
    /// Natural log of the theoretical value for bounds evaluated in log space.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_theoretical: Option<f64>,
    pub empirical: Option<f64>,
    /// `None` when the bound is not applicable.
    pub satisfied: Option<bool>,
    /// Distance to the bound in the satisfied direction; negative on violation.
    pub slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub context: BoundContext,
}

impl BoundReport {
    pub fn is_violation(&self) -> bool {
        self.applicable && self.satisfied == Some(false)
    }
}

/// Compares `empirical` against a bound with relative tolerance
/// [`RELATIVE_TOLERANCE`]. For upper bounds carrying a log value the
/// comparison happens in log space, so underflowed bounds stay meaningful.
pub fn check_inequality(direction: Direction, theoretical: f64, log_theoretical: Option<f64>, empirical: f64) -> (bool, f64) {
    let tol = RELATIVE_TOLERANCE * theoretical.abs().max(empirical.abs());
    match direction {
        Direction::Upper => {
            let ok = match log_theoretical {
                Some(lt) if empirical > 0.0 => empirical.ln() <= lt + RELATIVE_TOLERANCE || empirical <= theoretical + tol,
                _ => empirical <= theoretical + tol,
            };
            (ok, theoretical - empirical)
        }
        Direction::Lower => (empirical >= theoretical - tol, empirical - theoretical),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn check_profile(profile: &PartitionProfile) -> Result<()> {
    if profile.k() >= 2 && profile.min_separation() == 0.0 {
        return Err(Error::DegenerateGeometry("points from different clusters coincide".into()));
    }
    Ok(())
}

fn log_k(spec: &KernelSpec, x: f64, sigma: f64) -> f64 {
    if x.is_infinite() {
        f64::NEG_INFINITY
    } else {
        spec.log_eval_unchecked(x / sigma)
    }
}

/// `max_m log K_σ(sep_m)`, with `log K_σ(δ_m)` subtracted inside the max
/// when the graph has no self-loops.
fn log_cross_term(profile: &PartitionProfile, spec: &KernelSpec, sigma: f64, variant: Variant) -> f64 {
    (0..profile.k())
        .map(|m| {
            let sep = log_k(spec, profile.separation[m], sigma);
            match variant {
                Variant::NormalizedNoSelfLoops => sep - log_k(spec, profile.delta[m], sigma),
                _ => sep,
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-cluster log of the within-cluster embedding bound
/// `n^{1.5}k^{0.5}·sqrt(max_m K_σ(sep_m)/K_σ(δ_l))`, with the extra `1/K_σ(δ_m)`
/// inside the max for LN0.
pub fn log_evec_within_bound(profile: &PartitionProfile, spec: &KernelSpec, sigma: f64, variant: Variant) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    check_profile(profile)?;
    let (n, k) = (profile.n() as f64, profile.k() as f64);
    let base = 1.5 * n.ln() + 0.5 * k.ln();
    let cross = log_cross_term(profile, spec, sigma, variant);
    Ok(profile.delta.iter().map(|&d| base + 0.5 * (cross - log_k(spec, d, sigma))).collect())
}

pub fn evec_within_bound(profile: &PartitionProfile, spec: &KernelSpec, sigma: f64, variant: Variant) -> Result<Vec<f64>> {
    Ok(log_evec_within_bound(profile, spec, sigma, variant)?.into_iter().map(f64::exp).collect())
}

/// Lower bound on the minimum pairwise distance between `k` centroids that
/// every row of `V` lies within `ε` of. `gram_extremes = Some((e1, ek))` selects
/// the non-orthonormal form.
pub fn centroid_separation_bound(n: usize, k: usize, epsilon: f64, gram_extremes: Option<(f64, f64)>) -> Result<Bound> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let limit = 1.0 / (3.0 * nf * kf * kf);
    let head = (2.0 / nf).sqrt();
    match gram_extremes {
        None => {
            if epsilon < limit {
                Ok(Bound::Value(head - 12f64.sqrt() * kf * (3.0 * nf * epsilon).powf(0.25)))
            } else {
                Ok(Bound::NotApplicable(format!("epsilon {epsilon} is not below 1/(3nk^2) = {limit}")))
            }
        }
        Some((e1, ek)) => {
            if !(e1.is_finite() && ek.is_finite() && e1 <= ek) {
                return Err(Error::InvalidParameter(format!("invalid Gram extremes ({e1}, {ek})")));
            }
            if e1 <= 0.0 {
                return Ok(Bound::NotApplicable("smallest Gram eigenvalue is not positive".into()));
            }
            if epsilon < e1.sqrt() * limit {
                let tail = 12f64.sqrt() * kf * (3.0 * nf * epsilon / e1.sqrt()).powf(0.25);
                Ok(Bound::Value((head - tail) / ek.sqrt()))
            } else {
                Ok(Bound::NotApplicable(format!("epsilon {epsilon} is not below sqrt(e1)/(3nk^2) = {}", e1.sqrt() * limit)))
            }
        }
    }
}

/// `(3n(k+1)²)^{-1}`, scaled by `sqrt(e1)` in the general case.
pub fn rank_obstruction_floor(n: usize, k: usize, e1: Option<f64>) -> Result<f64> {
    if n <= k {
        return Err(Error::InvalidParameter(format!("rank obstruction needs n > k, got n={n}, k={k}")));
    }
    let base = 1.0 / (3.0 * n as f64 * ((k + 1) as f64).powi(2));
    Ok(match e1 {
        None => base,
        Some(e) => e.max(0.0).sqrt() * base,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueBounds {
    /// Upper bound on `Σ_{l≤k} e_l`.
    pub sum_bound: f64,
    pub log_sum_bound: f64,
    /// Lower bound on `e_{k+1}`.
    pub gap_floor: f64,
}

pub fn eigenvalue_bounds(profile: &PartitionProfile, spec: &KernelSpec, sigma: f64, variant: Variant) -> Result<EigenvalueBounds> {
    check_sigma(sigma)?;
    check_profile(profile)?;
    let (n, k) = (profile.n() as f64, profile.k() as f64);
    let cross = log_cross_term(profile, spec, sigma, variant);
    let log_sum_bound = (n * k).ln() + cross;
    let n_pow = if variant.is_normalized() { 3 } else { 2 };
    let min_within = profile.delta.iter().map(|&d| log_k(spec, d, sigma)).fold(f64::INFINITY, f64::min).exp();
    let first = min_within / (9.0 * n.powi(n_pow) * (k + 1.0).powi(4));
    let second = n.powi(3) * k * cross.exp();
    Ok(EigenvalueBounds { sum_bound: log_sum_bound.exp(), log_sum_bound, gap_floor: first - second })
}

/// Smallest integer `z` meeting the side condition of each certificate:
/// `n^{z-15} ≥ 81k^15` (L), `n^{z-18} ≥ 81k^15` (LN), `z ≥ 10` (LN0).
pub fn default_z(variant: Variant, n: usize, k: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("certificates need n >= 2".into()));
    }
    let offset = match variant {
        Variant::Unnormalized => 15.0,
        Variant::Normalized => 18.0,
        Variant::NormalizedNoSelfLoops => return Ok(10.0),
    };
    let need = (81f64.ln() + 15.0 * (k as f64).ln()) / (n as f64).ln();
    let mut z = offset + need.ceil();
    if z - 1.0 >= offset && z_condition_holds(variant, n, k, z - 1.0) {
        z -= 1.0;
    }
    Ok(z)
}

pub fn z_condition_holds(variant: Variant, n: usize, k: usize, z: f64) -> bool {
    let lhs = |offset: f64| (z - offset) * (n as f64).ln();
    let rhs = 81f64.ln() + 15.0 * (k as f64).ln();
    match variant {
        Variant::Unnormalized => lhs(15.0) >= rhs,
        Variant::Normalized => lhs(18.0) >= rhs,
        Variant::NormalizedNoSelfLoops => z >= 10.0,
    }
}

/// Largest admissible `σ` for the maximum-margin certificate of `variant`.
pub fn mmc_sigma_threshold(profile: &PartitionProfile, spec: &KernelSpec, variant: Variant, z: f64) -> Result<Bound> {
    check_profile(profile)?;
    let (n, k) = (profile.n(), profile.k());
    if k < 2 {
        return Ok(Bound::NotApplicable("certificates need k >= 2".into()));
    }
    if !z_condition_holds(variant, n, k, z) {
        return Ok(Bound::NotApplicable(format!("z = {z} violates the side condition for {variant}")));
    }
    let ln_n = (n as f64).ln();
    match variant {
        Variant::Unnormalized | Variant::Normalized => {
            if !spec.tail_bound_proven() {
                return Ok(Bound::NotApplicable("tail constants of the kernel are not established".into()));
            }
            if profile.margin <= 0.0 {
                return Ok(Bound::NotApplicable(format!("margin {} is not positive", profile.margin)));
            }
            let log_term = spec.tail_a().ln() + z / 3.0 * ln_n;
            if log_term <= 0.0 {
                return Ok(Bound::NotApplicable("log(A n^{z/3}) is not positive".into()));
            }
            Ok(Bound::Value(profile.margin * log_term.powf(-1.0 / spec.tail_alpha())))
        }
        Variant::NormalizedNoSelfLoops => {
            if profile.min_cluster_size() < 2 {
                return Ok(Bound::NotApplicable("a cluster has fewer than two points".into()));
            }
            let strengthened = profile.strengthened_margin(spec.alpha());
            if strengthened <= 0.0 {
                return Ok(Bound::NotApplicable(format!("strengthened margin {strengthened} is not positive")));
            }
            let log_term = 8.0 * 13f64.ln() + 9.0 * (k as f64).ln() + z * ln_n;
            Ok(Bound::Value((strengthened / log_term).powf(1.0 / spec.alpha())))
        }
    }
}

/// `(k³/n^{z-9})^{1/6}`.
pub fn mmc_within_bound(n: usize, k: usize, z: f64) -> f64 {
    ((3.0 * (k as f64).ln() - (z - 9.0) * (n as f64).ln()) / 6.0).exp()
}

/// `sqrt(2/n) - 6(k^27/n^{z-o})^{1/24}` with `o = 15` (L) or `18` (LN).
pub fn mmc_between_bound(variant: Variant, n: usize, k: usize, z: f64) -> Option<f64> {
    let offset = match variant {
        Variant::Unnormalized => 15.0,
        Variant::Normalized => 18.0,
        Variant::NormalizedNoSelfLoops => return None,
    };
    let (nf, kf) = (n as f64, k as f64);
    Some((2.0 / nf).sqrt() - 6.0 * ((27.0 * kf.ln() - (z - offset) * nf.ln()) / 24.0).exp())
}

/// `n^{(4-z)/2}`.
pub fn mmc_ratio_bound(n: usize, z: f64) -> f64 {
    (n as f64).powf((4.0 - z) / 2.0)
}

/// Within- and between-cluster distances of embedding rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingGeometry {
    /// Largest distance between rows of the same cluster, per cluster.
    pub within: Vec<f64>,
    pub max_within: f64,
    /// Smallest distance between rows of different clusters; infinite for `k = 1`.
    pub min_between: f64,
}

impl EmbeddingGeometry {
    /// `max_within / min_between`.
    pub fn ratio(&self) -> f64 {
        self.max_within / self.min_between
    }
}

pub fn embedding_geometry(rows: &DenseMatrix, labels: &[usize], k: usize, exec: Execution) -> Result<EmbeddingGeometry> {
    let n = rows.rows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: labels.len() });
    }
    if labels.iter().any(|&l| l >= k) {
        return Err(Error::InvalidPartition(format!("label out of range for k = {k}")));
    }
    let per_row = exec::map_indices(exec, n, |i| {
        let mut within = 0.0f64;
        let mut between = f64::INFINITY;
        for j in (i + 1)..n {
            let d = sq_dist(rows.row(i), rows.row(j));
            if labels[i] == labels[j] {
                within = within.max(d);
            } else {
                between = between.min(d);
            }
        }
        (within, between)
    });
    let mut within = vec![0.0f64; k];
    let mut min_between = f64::INFINITY;
    for (i, (w, b)) in per_row.into_iter().enumerate() {
        within[labels[i]] = within[labels[i]].max(w);
        min_between = min_between.min(b);
    }
    let within: Vec<f64> = within.into_iter().map(f64::sqrt).collect();
    let max_within = within.iter().copied().fold(0.0, f64::max);
    Ok(EmbeddingGeometry { within, max_within, min_between: min_between.sqrt() })
}

/// Rows of the lowest-index member of each cluster, and the largest
/// distance from a row to its own cluster's representative.
fn representative_rows(rows: &DenseMatrix, partition: &Partition) -> (DenseMatrix, f64) {
    let reps: Vec<usize> = partition.members().iter().map(|m| m[0]).collect();
    let w = DenseMatrix::from_fn(reps.len(), rows.cols(), |l, c| rows[(reps[l], c)]);
    let eps = (0..rows.rows())
        .map(|i| sq_dist(rows.row(i), w.row(partition.labels()[i])))
        .fold(0.0, f64::max)
        .sqrt();
    (w, eps)
}

fn min_pairwise_distance(w: &DenseMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..w.rows() {
        for b in (a + 1)..w.rows() {
            best = best.min(sq_dist(w.row(a), w.row(b)));
        }
    }
    best.sqrt()
}

fn gram_extremes(rows: &DenseMatrix) -> Result<(f64, f64)> {
    let g = rows.transpose().matmul(rows);
    let (values, _) = symmetric_eigen(&g, Solver::Jacobi)?;
    Ok((values[0], values[values.len() - 1]))
}

fn covering_radius(rows: &DenseMatrix, centers: &[Vec<f64>]) -> f64 {
    (0..rows.rows())
        .map(|i| centers.iter().map(|c| sq_dist(rows.row(i), c)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Smallest covering radius `max_i min_l ‖V_i - W_l‖` found over `k` centers:
/// farthest-first traversal from every start row, then minimax refinement of
/// the best few. Any value found is an upper estimate of the optimum.
pub fn best_covering_radius(rows: &DenseMatrix, k: usize) -> f64 {
    let n = rows.rows();
    if k >= n {
        return 0.0;
    }
    let mut candidates: Vec<(f64, Vec<Vec<f64>>)> = (0..n)
        .map(|start| {
            let mut centers = vec![rows.row(start).to_vec()];
            let mut near: Vec<f64> = (0..n).map(|i| sq_dist(rows.row(i), rows.row(start))).collect();
            while centers.len() < k {
                let far = (0..n).fold(0, |b, i| if near[i] > near[b] { i } else { b });
                centers.push(rows.row(far).to_vec());
                for i in 0..n {
                    near[i] = near[i].min(sq_dist(rows.row(i), rows.row(far)));
                }
            }
            (near.into_iter().fold(0.0, f64::max).sqrt(), centers)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = candidates[0].0;
    for (_, mut centers) in candidates.into_iter().take(4) {
        for _ in 0..10 {
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
            for i in 0..n {
                let l = (0..k).fold(0, |b, l| {
                    if sq_dist(rows.row(i), &centers[l]) < sq_dist(rows.row(i), &centers[b]) {
                        l
                    } else {
                        b
                    }
                });
                groups[l].push(i);
            }
            for (l, g) in groups.iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                let mut c = rows.row(g[0]).to_vec();
                for t in 1..=64 {
                    let far = g.iter().copied().fold(g[0], |b, i| {
                        if sq_dist(rows.row(i), &c) > sq_dist(rows.row(b), &c) {
                            i
                        } else {
                            b
                        }
                    });
                    let step = 1.0 / (t as f64 + 1.0);
                    for (cv, pv) in c.iter_mut().zip(rows.row(far)) {
                        *cv += step * (pv - *cv);
                    }
                }
                centers[l] = c;
            }
            best = best.min(covering_radius(rows, &centers));
        }
    }
    best
}

/// Every bound of `variant` evaluated on the decomposition at `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationOptions {
    /// Certificate exponent; the smallest admissible value when `None`.
    pub z: Option<f64>,
    pub exec: Execution,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self { z: None, exec: Execution::Sequential }
    }
}

pub fn evaluate_bounds(
    points: &PointSet,
    profile: &PartitionProfile,
    spec: &KernelSpec,
    sigma: f64,
    variant: Variant,
    opts: EvaluationOptions,
) -> Result<Vec<BoundReport>> {
    check_sigma(sigma)?;
    check_profile(profile)?;
    if profile.n() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: profile.n() });
    }
    let (n, k) = (profile.n(), profile.k());
    let z = match opts.z {
        Some(z) => z,
        None => default_z(variant, n, k)?,
    };
    let base_context = BoundContext {
        alpha: spec.alpha(),
        delta: profile.delta.clone(),
        separation: profile.separation.clone(),
        margin: profile.margin,
        z: None,
        epsilon: None,
        gram_extremes: None,
        sigma_threshold: None,
        resolution: None,
    };
    let report = |id: BoundId, context: BoundContext| BoundReport {
        bound_id: id,
        variant,
        n,
        k,
        sigma,
        applicable: false,
        theoretical: None,
        log_theoretical: None,
        empirical: None,
        satisfied: None,
        slack: None,
        reason: None,
        context,
    };
    let not_applicable = |id: BoundId, reason: String, context: BoundContext| BoundReport {
        reason: Some(reason),
        ..report(id, context)
    };
    let evaluated = |id: BoundId, theo: f64, log_theo: Option<f64>, emp: f64, context: BoundContext| {
        let (ok, slack) = check_inequality(id.direction(), theo, log_theo, emp);
        BoundReport {
            applicable: true,
            theoretical: Some(theo),
            log_theoretical: log_theo,
            empirical: Some(emp),
            satisfied: Some(ok),
            slack: Some(slack),
            ..report(id, context)
        }
    };
    let ids = BoundId::for_variant(variant);

    let bundle = match build_bundle_with(points, spec, sigma, variant, BundleOptions { degree_floor: None, exec: opts.exec }) {
        Ok(b) => b,
        Err(Error::SingularDegree { index, degree }) => {
            let reason = format!("degree {degree:e} at index {index} underflows");
            return Ok(ids.iter().map(|&id| not_applicable(id, reason.clone(), base_context.clone())).collect());
        }
        Err(e) => return Err(e),
    };
    let width = (k + 1).min(n);
    let embedding = decompose(&bundle, k)?;
    let values = embedding.eigenvalues();
    let rows = embedding.embedding();
    let geometry = embedding_geometry(rows, profile.partition.labels(), k, opts.exec)?;
    let resolution = embedding.resolution();
    let small_cluster = variant == Variant::NormalizedNoSelfLoops && profile.min_cluster_size() < 2;
    let threshold = mmc_sigma_threshold(profile, spec, variant, z)?;

    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let ctx = BoundContext { resolution: Some(resolution), ..base_context.clone() };
        let r = match id {
            BoundId::EvecWithinL | BoundId::EvecWithinLN | BoundId::EvecWithinLN0 => {
                if small_cluster {
                    not_applicable(id, "a cluster has fewer than two points".into(), ctx)
                } else {
                    let logs = log_evec_within_bound(profile, spec, sigma, variant)?;
                    let tightest = (0..k)
                        .min_by(|&a, &b| {
                            let ra = logs[a] - geometry.within[a].ln();
                            let rb = logs[b] - geometry.within[b].ln();
                            ra.total_cmp(&rb)
                        })
                        .unwrap_or(0);
                    let min_bound = logs.iter().copied().fold(f64::INFINITY, f64::min).exp();
                    if resolution > RESOLUTION_FRACTION * min_bound {
                        not_applicable(id, "eigenvector subspace not resolved at this sigma".into(), ctx)
                    } else {
                        let mut worst = evaluated(id, logs[tightest].exp(), Some(logs[tightest]), geometry.within[tightest], ctx);
                        for l in 0..k {
                            let (ok, _) = check_inequality(Direction::Upper, logs[l].exp(), Some(logs[l]), geometry.within[l]);
                            if !ok {
                                worst.satisfied = Some(false);
                            }
                        }
                        worst
                    }
                }
            }
            BoundId::CentroidSepOrtho | BoundId::CentroidSepGeneral => {
                let (w, eps) = representative_rows(rows, &profile.partition);
                let gram = if id == BoundId::CentroidSepGeneral { Some(gram_extremes(rows)?) } else { None };
                let ctx = BoundContext { epsilon: Some(eps), gram_extremes: gram, ..ctx };
                match centroid_separation_bound(n, k, eps, gram)? {
                    Bound::Value(b) => evaluated(id, b, None, min_pairwise_distance(&w), ctx),
                    Bound::NotApplicable(reason) => not_applicable(id, reason, ctx),
                }
            }
            BoundId::RankObstructionOrtho | BoundId::RankObstructionGeneral => {
                if n <= k {
                    not_applicable(id, "needs n > k".into(), ctx)
                } else {
                    let v = embedding.embedding_of_width(width)?;
                    let e1 = if id == BoundId::RankObstructionGeneral { Some(gram_extremes(&v)?.0) } else { None };
                    let floor = rank_obstruction_floor(n, k, e1)?;
                    let ctx = BoundContext { gram_extremes: e1.map(|e| (e, e)), ..ctx };
                    if e1.is_some_and(|e| e <= 0.0) {
                        not_applicable(id, "V does not have full column rank".into(), ctx)
                    } else {
                        let eps = best_covering_radius(&v, k);
                        evaluated(id, floor, None, eps, BoundContext { epsilon: Some(eps), ..ctx })
                    }
                }
            }
            BoundId::EvalSumL | BoundId::EvalSumLN | BoundId::EvalSumLN0 => {
                let b = eigenvalue_bounds(profile, spec, sigma, variant)?;
                let sum: f64 = values[..k].iter().sum();
                evaluated(id, b.sum_bound, Some(b.log_sum_bound), sum, ctx)
            }
            BoundId::EvalGapL | BoundId::EvalGapLN | BoundId::EvalGapLN0 => {
                if k >= n {
                    not_applicable(id, "needs k < n".into(), ctx)
                } else {
                    let b = eigenvalue_bounds(profile, spec, sigma, variant)?;
                    evaluated(id, b.gap_floor, None, values[k], ctx)
                }
            }
            BoundId::MmcWithinL | BoundId::MmcWithinLN | BoundId::MmcBetweenL | BoundId::MmcBetweenLN | BoundId::MmcRatioLN0 => {
                let ctx = BoundContext { z: Some(z), sigma_threshold: threshold.value(), ..ctx };
                match &threshold {
                    Bound::NotApplicable(reason) => not_applicable(id, reason.clone(), ctx),
                    Bound::Value(t) if sigma >= *t => {
                        not_applicable(id, format!("sigma {sigma} is not below the threshold {t}"), ctx)
                    }
                    Bound::Value(_) => match id {
                        BoundId::MmcWithinL | BoundId::MmcWithinLN => {
                            let b = mmc_within_bound(n, k, z);
                            if resolution > RESOLUTION_FRACTION * b {
                                not_applicable(id, "eigenvector subspace not resolved at this sigma".into(), ctx)
                            } else {
                                evaluated(id, b, Some(b.ln()), geometry.max_within, ctx)
                            }
                        }
                        BoundId::MmcBetweenL | BoundId::MmcBetweenLN => {
                            let b = mmc_between_bound(variant, n, k, z).unwrap_or(f64::NEG_INFINITY);
                            if resolution > RESOLUTION_FRACTION * (2.0 / n as f64).sqrt() {
                                not_applicable(id, "eigenvector subspace not resolved at this sigma".into(), ctx)
                            } else {
                                evaluated(id, b, None, geometry.min_between, ctx)
                            }
                        }
                        _ => {
                            let b = mmc_ratio_bound(n, z);
                            if resolution > RESOLUTION_FRACTION * b * geometry.min_between {
                                not_applicable(id, "eigenvector subspace not resolved at this sigma".into(), ctx)
                            } else {
                                evaluated(id, b, Some(b.ln()), geometry.ratio(), ctx)
                            }
                        }
                    },
                }
            }
        };
        out.push(r);
    }
    Ok(out)
}

/// Certificate reports only: within/between (L, LN) or the ratio (LN0).
pub fn mmc_certificate(
    points: &PointSet,
    profile: &PartitionProfile,
    spec: &KernelSpec,
    sigma: f64,
    variant: Variant,
    z: Option<f64>,
) -> Result<Vec<BoundReport>> {
    let all = evaluate_bounds(points, profile, spec, sigma, variant, EvaluationOptions { z, exec: Execution::Sequential })?;
    Ok(all
        .into_iter()
        .filter(|r| {
            matches!(
                r.bound_id,
                BoundId::MmcWithinL | BoundId::MmcBetweenL | BoundId::MmcWithinLN | BoundId::MmcBetweenLN | BoundId::MmcRatioLN0
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub instances: usize,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub k_choices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub exec: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            instances: 200,
            seed: 0,
            n_min: 6,
            n_max: 60,
            d_min: 1,
            d_max: 5,
            k_choices: vec![2, 3],
            alphas: vec![1.0, 1.5, 2.0, 3.0],
            variants: Variant::ALL.to_vec(),
            exec: Execution::default(),
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.n_max < 6 || self.n_min > self.n_max {
            return Err(Error::InvalidParameter(format!("need 6 <= n_max and n_min <= n_max, got [{}, {}]", self.n_min, self.n_max)));
        }
        if self.d_min == 0 || self.d_min > self.d_max {
            return Err(Error::InvalidParameter("invalid dimension range".into()));
        }
        if self.k_choices.is_empty() || self.k_choices.iter().any(|&k| k < 2 || 2 * k > self.n_max) {
            return Err(Error::InvalidParameter("k choices must satisfy 2 <= k <= n_max/2".into()));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a >= 1.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("sweep kernels need alpha >= 1".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter("no variants selected".into()));
        }
        Ok(())
    }
}

/// One randomized blob instance with the bandwidths it is evaluated at.
#[derive(Debug, Clone)]
pub struct ConformanceInstance {
    pub id: usize,
    pub points: PointSet,
    pub profile: PartitionProfile,
    pub spec: KernelSpec,
    /// `(variant, σ)` pairs: one shared σ drawn over the resolvable range,
    /// plus one per variant drawn below its certificate threshold.
    pub evaluations: Vec<(Variant, f64)>,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Points uniform in unit balls around centers at least `2 + gap` apart,
/// every cluster holding at least two points.
pub fn generate_instance(cfg: &SweepConfig, id: usize) -> Result<ConformanceInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let k = cfg.k_choices[rng.random_range(0..cfg.k_choices.len())];
    let n = rng.random_range(cfg.n_min.max(2 * k)..=cfg.n_max);
    let d = rng.random_range(cfg.d_min..=cfg.d_max);
    let alpha = cfg.alphas[rng.random_range(0..cfg.alphas.len())];
    let spec = KernelSpec::exponential_power(alpha, d)?;

    let mut sizes = vec![2usize; k];
    for _ in 0..(n - 2 * k) {
        sizes[rng.random_range(0..k)] += 1;
    }
    let gap: f64 = rng.random_range(3.0..8.0);
    let mut side = 4.0 * k as f64 * (2.0 + gap);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while centers.len() < k {
        let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * side).collect();
        if centers.iter().all(|o| sq_dist(o, &c).sqrt() >= 2.0 + gap) {
            centers.push(c);
        }
        attempts += 1;
        if attempts % 200 == 0 {
            side *= 1.5;
        }
    }
    let mut coords = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (l, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            coords.extend(dir.iter().zip(&centers[l]).map(|(v, c)| c + v / norm * radius));
            labels.push(l);
        }
    }
    let points = PointSet::new(d, coords)?;
    let partition = Partition::new(labels)?;
    let profile = partition_profile(&points, &partition)?;

    let mut diameter = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max(points.distance(i, j));
        }
    }
    let sigma_lo = profile.max_delta() * 1e6f64.ln().powf(-1.0 / alpha);
    let sigma_hi = 2.0 * diameter;
    let shared = log_uniform(&mut rng, sigma_lo, sigma_hi);
    let mut evaluations = Vec::new();
    for &variant in &cfg.variants {
        evaluations.push((variant, shared));
    }
    for &variant in &cfg.variants {
        let z = default_z(variant, n, k)?;
        if let Bound::Value(t) = mmc_sigma_threshold(&profile, &spec, variant, z)? {
            evaluations.push((variant, log_uniform(&mut rng, 0.3 * t, 0.999 * t)));
        }
    }
    Ok(ConformanceInstance { id, points, profile, spec, evaluations })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundTally {
    pub evaluated: usize,
    pub applicable: usize,
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub reports: Vec<BoundReport>,
    pub tally: BTreeMap<BoundId, BoundTally>,
}

impl SweepOutcome {
    pub fn violations(&self) -> usize {
        self.reports.iter().filter(|r| r.is_violation()).count()
    }
}

/// Generates and evaluates `cfg.instances` instances, in parallel across
/// instances when the execution mode allows.
pub fn run_conformance(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let per_instance = exec::map_indices(cfg.exec, cfg.instances, |id| -> Result<Vec<BoundReport>> {
        let inst = generate_instance(cfg, id)?;
        let mut reports = Vec::new();
        for &(variant, sigma) in &inst.evaluations {
            let opts = EvaluationOptions { z: None, exec: Execution::Sequential };
            reports.extend(evaluate_bounds(&inst.points, &inst.profile, &inst.spec, sigma, variant, opts)?);
        }
        Ok(reports)
    });
    let mut reports = Vec::new();
    for r in per_instance {
        reports.extend(r?);
    }
    let mut tally: BTreeMap<BoundId, BoundTally> = BTreeMap::new();
    for r in &reports {
        let t = tally.entry(r.bound_id).or_default();
        t.evaluated += 1;
        if r.applicable {
            t.applicable += 1;
        }
        if r.is_violation() {
            t.violations += 1;
        }
    }
    Ok(SweepOutcome { reports, tally })
}
