//! Spectral clustering, level-set component estimation and bandwidth sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{embedding_geometry, RESOLUTION_FRACTION};
use crate::eigen::{decompose_with, spectrum, DecomposeOptions, SpectralEmbedding};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::graph::{build_bundle_with, max_margin_partition, BundleOptions, UnionFind, Variant};
use crate::kde::{truncate, LevelSetEstimate, Schedule};
use crate::kernel::KernelSpec;
use crate::matrix::{sq_dist, DenseMatrix};
use crate::points::{Partition, PointSet};

/// Label carried by sample points outside the estimated level set.
pub const OUTSIDE: usize = usize::MAX;

/// Eigenvalues kept in results beyond the embedding width.
const EIGENVALUE_PREFIX: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Assignment {
    /// Complete-linkage agglomeration cut at `k` groups.
    #[default]
    CompleteLinkage,
    /// Lloyd iterations from k-means++ seeds, best of `restarts`.
    KMeans { restarts: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClusterOptions {
    pub assignment: Assignment,
    /// Optional clamp on LN0 degrees; off by default.
    pub degree_floor: Option<f64>,
    pub decompose: DecomposeOptions,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    /// Largest embedding distance between rows sharing a label.
    pub max_within: f64,
    /// Smallest embedding distance between rows with different labels.
    pub min_between: f64,
    pub ratio: f64,
    /// `e_{k+1} - e_k`.
    pub eigengap: Option<f64>,
    /// Set when the eigengap at `k` is below the tie threshold.
    pub tie_at_k: bool,
    /// Rounding-induced perturbation scale of the embedding rows.
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// One label per clustered point, canonical by first appearance.
    pub labels: Vec<usize>,
    pub k_used: usize,
    pub variant: Variant,
    pub sigma: f64,
    pub diagnostics: ClusterDiagnostics,
    /// Leading eigenvalues, at least `e_1..e_{k+1}` when available.
    pub eigenvalues: Vec<f64>,
}

impl ClusterResult {
    pub fn partition(&self) -> Result<Partition> {
        Partition::new(self.labels.clone())
    }

    /// The labels are determined by the computed embedding: rounding moves
    /// rows by less than `RESOLUTION_FRACTION` of the between-cluster distance.
    pub fn is_resolved(&self) -> bool {
        self.k_used < 2 || self.diagnostics.resolution <= RESOLUTION_FRACTION * self.diagnostics.min_between
    }
}

/// Complete-linkage agglomeration of `rows` down to `k` groups.
///
/// Nearest-neighbour chains over a condensed distance matrix; merges are then
/// replayed in order of height, which yields the same hierarchy because the
/// complete-linkage update is reducible.
pub fn complete_linkage(rows: &DenseMatrix, k: usize) -> Result<Vec<usize>> {
    let n = rows.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in [1, {n}], got {k}")));
    }
    let merges = nn_chain(rows);
    let mut order: Vec<usize> = (0..merges.len()).collect();
    order.sort_by(|&a, &b| merges[a].2.total_cmp(&merges[b].2).then(a.cmp(&b)));
    let mut uf = UnionFind::new(n);
    for &m in order.iter().take(n - k) {
        uf.union(merges[m].0, merges[m].1);
    }
    let roots: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
    Ok(Partition::canonical(&roots)?.labels().to_vec())
}

fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Merges `(a, b, height)` between original representatives.
fn nn_chain(rows: &DenseMatrix) -> Vec<(usize, usize, f64)> {
    let n = rows.rows();
    if n < 2 {
        return Vec::new();
    }
    let mut dist = vec![0.0f64; n * (n - 1) / 2];
    for i in 0..n {
        for j in (i + 1)..n {
            dist[condensed_index(n, i, j)] = sq_dist(rows.row(i), rows.row(j)).sqrt();
        }
    }
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap_or(0));
        }
        loop {
            let top = chain[chain.len() - 1];
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| dist[condensed_index(n, top, p)]);
            for c in 0..n {
                if c == top || !active[c] {
                    continue;
                }
                let d = dist[condensed_index(n, top, c)];
                if d < best_d {
                    best_d = d;
                    best = Some(c);
                }
            }
            let next = best.unwrap_or(top);
            if Some(next) == prev {
                chain.pop();
                chain.pop();
                let (a, b) = if top < next { (top, next) } else { (next, top) };
                merges.push((a, b, best_d));
                active[b] = false;
                for c in 0..n {
                    if active[c] && c != a {
                        let ia = condensed_index(n, a, c);
                        let ib = condensed_index(n, b, c);
                        dist[ia] = dist[ia].max(dist[ib]);
                    }
                }
                remaining -= 1;
                break;
            }
            chain.push(next);
        }
    }
    merges
}

/// Lloyd's algorithm from k-means++ seeds; returns the lowest-inertia labelling.
pub fn kmeans(rows: &DenseMatrix, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = rows.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in [1, {n}], got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts.max(1) {
        let mut centers: Vec<Vec<f64>> = vec![rows.row(rng.random_range(0..n)).to_vec()];
        let mut near: Vec<f64> = (0..n).map(|i| sq_dist(rows.row(i), &centers[0])).collect();
        while centers.len() < k {
            let total: f64 = near.iter().sum();
            let pick = if total > 0.0 {
                let mut u = rng.random::<f64>() * total;
                let mut chosen = n - 1;
                for (i, &w) in near.iter().enumerate() {
                    if u < w {
                        chosen = i;
                        break;
                    }
                    u -= w;
                }
                chosen
            } else {
                rng.random_range(0..n)
            };
            centers.push(rows.row(pick).to_vec());
            for i in 0..n {
                near[i] = near[i].min(sq_dist(rows.row(i), rows.row(pick)));
            }
        }
        let mut labels = vec![0usize; n];
        for _ in 0..300 {
            let mut changed = false;
            for i in 0..n {
                let l = (0..k).fold(0, |b, l| if sq_dist(rows.row(i), &centers[l]) < sq_dist(rows.row(i), &centers[b]) { l } else { b });
                if l != labels[i] {
                    labels[i] = l;
                    changed = true;
                }
            }
            let mut sums = vec![vec![0.0; rows.cols()]; k];
            let mut counts = vec![0usize; k];
            for i in 0..n {
                counts[labels[i]] += 1;
                for (s, v) in sums[labels[i]].iter_mut().zip(rows.row(i)) {
                    *s += v;
                }
            }
            for l in 0..k {
                if counts[l] > 0 {
                    centers[l] = sums[l].iter().map(|s| s / counts[l] as f64).collect();
                }
            }
            if !changed {
                break;
            }
        }
        let inertia: f64 = (0..n).map(|i| sq_dist(rows.row(i), &centers[labels[i]])).sum();
        if best.as_ref().map_or(true, |(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    let labels = best.map(|b| b.1).unwrap_or_default();
    Ok(Partition::canonical(&labels)?.labels().to_vec())
}

/// Maximum-weight assignment on a square matrix (Hungarian algorithm with potentials).
fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<usize> {
    let m = weights.len();
    let cost = |i: usize, j: usize| -weights[i][j];
    let inf = f64::INFINITY;
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; m];
    for j in 1..=m {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Label matching that maximizes agreement between two labellings of the
/// same points; labels equal to [`OUTSIDE`] are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMatching {
    /// `mapping[a] = b` sends label `a` of the first labelling to label `b`
    /// of the second, or `None` when `a` has no partner.
    pub mapping: Vec<Option<usize>>,
    pub agreement: usize,
    pub compared: usize,
}

impl LabelMatching {
    pub fn disagreement_rate(&self) -> f64 {
        if self.compared == 0 {
            0.0
        } else {
            (self.compared - self.agreement) as f64 / self.compared as f64
        }
    }
}

pub fn match_labels(a: &[usize], b: &[usize]) -> Result<LabelMatching> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let pairs: Vec<(usize, usize)> = a.iter().zip(b).filter(|(x, y)| **x != OUTSIDE && **y != OUTSIDE).map(|(x, y)| (*x, *y)).collect();
    let ka = pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0);
    let kb = pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0);
    let m = ka.max(kb);
    let mut counts = vec![vec![0.0; m]; m];
    for &(x, y) in &pairs {
        counts[x][y] += 1.0;
    }
    let assignment = max_weight_assignment(&counts);
    let mut agreement = 0usize;
    let mut mapping = vec![None; ka];
    for x in 0..ka {
        let y = assignment[x];
        if y < kb {
            mapping[x] = Some(y);
            agreement += counts[x][y] as usize;
        }
    }
    Ok(LabelMatching { mapping, agreement, compared: pairs.len() })
}

/// Groups `rows` into `k` labels by the chosen assignment rule.
pub fn assign_rows(rows: &DenseMatrix, k: usize, assignment: Assignment) -> Result<Vec<usize>> {
    match assignment {
        Assignment::CompleteLinkage => complete_linkage(rows, k),
        Assignment::KMeans { restarts, seed } => kmeans(rows, k, restarts, seed),
    }
}

/// Labels and diagnostics from an existing decomposition at width `k`.
pub fn cluster_embedding(
    embedding: &SpectralEmbedding,
    sigma: f64,
    k: usize,
    opts: &ClusterOptions,
) -> Result<ClusterResult> {
    let n = embedding.len();
    let emb = if embedding.k() == k { embedding.clone() } else { embedding.with_k(k)? };
    let labels = if k == 1 { vec![0; n] } else { assign_rows(emb.embedding(), k, opts.assignment)? };
    let k_used = labels.iter().copied().max().map_or(0, |m| m + 1);
    let geo = embedding_geometry(emb.embedding(), &labels, k_used, opts.exec)?;
    let prefix = n.min((k + 1).max(EIGENVALUE_PREFIX));
    Ok(ClusterResult {
        labels,
        k_used,
        variant: emb.variant(),
        sigma,
        diagnostics: ClusterDiagnostics {
            max_within: geo.max_within,
            min_between: geo.min_between,
            ratio: geo.ratio(),
            eigengap: emb.eigengap(),
            tie_at_k: emb.has_tie_at_k(),
            resolution: emb.resolution(),
        },
        eigenvalues: emb.eigenvalues()[..prefix].to_vec(),
    })
}

pub fn spectral_cluster(points: &PointSet, spec: &KernelSpec, sigma: f64, k: usize, variant: Variant) -> Result<ClusterResult> {
    spectral_cluster_with(points, spec, sigma, k, variant, &ClusterOptions::default())
}

pub fn spectral_cluster_with(
    points: &PointSet,
    spec: &KernelSpec,
    sigma: f64,
    k: usize,
    variant: Variant,
    opts: &ClusterOptions,
) -> Result<ClusterResult> {
    let n = points.len();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k must lie in [2, {n}], got {k}")));
    }
    let bundle = build_bundle_with(points, spec, sigma, variant, BundleOptions { degree_floor: opts.degree_floor, exec: opts.exec })?;
    let embedding = decompose_with(&bundle, k, opts.decompose)?;
    cluster_embedding(&embedding, sigma, k, opts)
}

/// Scaling sequence `f_n = H·n^h·K(σ_n^{-√ε})`, held in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentCountConfig {
    pub h_scale: f64,
    pub h_exp: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma_n: f64,
}

impl ComponentCountConfig {
    pub fn new(spec: &KernelSpec, sigma_n: f64, h_scale: f64, h_exp: f64, epsilon: f64) -> Result<Self> {
        if !(h_scale.is_finite() && h_scale > 0.0 && h_exp.is_finite()) {
            return Err(Error::Config("f_n needs H > 0 and finite h".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        if !(sigma_n.is_finite() && sigma_n > 0.0) {
            return Err(Error::Config(format!("sigma_n must be positive, got {sigma_n}")));
        }
        Ok(Self { h_scale, h_exp, epsilon, alpha: spec.alpha(), sigma_n })
    }

    pub fn from_schedule(schedule: &Schedule) -> Self {
        Self {
            h_scale: schedule.params.h_scale,
            h_exp: schedule.params.h_exp,
            epsilon: schedule.params.epsilon,
            alpha: schedule.alpha,
            sigma_n: schedule.sigma_n,
        }
    }

    pub fn log_f_n(&self, n: usize) -> f64 {
        self.h_scale.ln() + self.h_exp * (n as f64).ln() - self.sigma_n.powf(-self.alpha * self.epsilon.sqrt())
    }

    /// `f_n`, or a configuration error when it underflows.
    pub fn f_n(&self, n: usize) -> Result<f64> {
        let lf = self.log_f_n(n);
        let f = lf.exp();
        if !(f >= f64::MIN_POSITIVE) {
            return Err(Error::Config(format!(
                "f_n = exp({lf}) underflows; increase ln H or h so that ln f_n exceeds {}",
                f64::MIN_POSITIVE.ln()
            )));
        }
        Ok(f)
    }
}

/// `ĉ = max{l ≤ c_max : e_j < f_n for all j ≤ l}`, at least 1.
pub fn count_below(eigenvalues: &[f64], f_n: f64, c_max: usize) -> Result<usize> {
    if c_max == 0 || c_max >= eigenvalues.len() {
        return Err(Error::InvalidParameter(format!("c_max must lie in [1, {}), got {c_max}", eigenvalues.len())));
    }
    if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("eigenvalues must be ascending".into()));
    }
    if !(f_n > 0.0) {
        return Err(Error::Config("f_n must be positive".into()));
    }
    let c = eigenvalues.iter().take(c_max).take_while(|&&e| e / f_n < 1.0).count();
    Ok(c.max(1))
}

pub fn estimate_component_count(eigenvalues: &[f64], n: usize, cfg: &ComponentCountConfig, c_max: usize) -> Result<usize> {
    count_below(eigenvalues, cfg.f_n(n)?, c_max)
}

/// `min(10, ⌊n/2⌋)`, capped below the number of eigenvalues.
pub fn default_c_max(n: usize) -> usize {
    10.min(n / 2).min(n.saturating_sub(1)).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSource {
    Forced,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetResult {
    /// Survivor indices, ascending.
    pub survivors: Vec<usize>,
    /// One label per sample point; [`OUTSIDE`] for non-survivors.
    pub labels: Vec<usize>,
    pub cluster: ClusterResult,
    pub count_source: CountSource,
    /// `ln f_n` used by the estimator.
    pub log_f_n: f64,
    /// Largest nearest-neighbour distance within each group.
    pub max_nn_gap: Vec<f64>,
    pub densities: Vec<f64>,
    pub lambda: f64,
    pub s_n: f64,
    pub sigma_n: f64,
}

/// Truncates at `λ - S_n`, then spectrally clusters the survivors with
/// `k = c` when given, else with the estimated component count.
pub fn level_set_components(
    points: &PointSet,
    lambda: f64,
    spec: &KernelSpec,
    schedule: &Schedule,
    variant: Variant,
    c: Option<usize>,
    opts: &ClusterOptions,
) -> Result<LevelSetResult> {
    let estimate = truncate(points, spec, lambda, schedule.sigma_n, schedule.s_n, opts.exec)?;
    level_set_from_estimate(points, estimate, spec, schedule, variant, c, opts)
}

pub fn level_set_from_estimate(
    points: &PointSet,
    estimate: LevelSetEstimate,
    spec: &KernelSpec,
    schedule: &Schedule,
    variant: Variant,
    c: Option<usize>,
    opts: &ClusterOptions,
) -> Result<LevelSetResult> {
    if estimate.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    let m = estimate.survivors.len();
    if let Some(c) = c {
        if c == 0 || c > m {
            return Err(Error::InvalidParameter(format!("c must lie in [1, {m}], got {c}")));
        }
    }
    let cfg = ComponentCountConfig::from_schedule(schedule);
    let log_f_n = cfg.log_f_n(points.len());
    let sub = points.subset(&estimate.survivors)?;
    let (cluster, source) = if m == 1 {
        let result = ClusterResult {
            labels: vec![0],
            k_used: 1,
            variant,
            sigma: schedule.sigma_n,
            diagnostics: ClusterDiagnostics { max_within: 0.0, min_between: f64::INFINITY, ratio: 0.0, eigengap: None, tie_at_k: false, resolution: 0.0 },
            eigenvalues: vec![0.0],
        };
        (result, if c.is_some() { CountSource::Forced } else { CountSource::Estimated })
    } else {
        let bundle = build_bundle_with(&sub, spec, schedule.sigma_n, variant, BundleOptions { degree_floor: opts.degree_floor, exec: opts.exec })?;
        let embedding = decompose_with(&bundle, 1, opts.decompose)?;
        let (k, source) = match c {
            Some(c) => (c, CountSource::Forced),
            None => (estimate_component_count(embedding.eigenvalues(), points.len(), &cfg, default_c_max(m))?, CountSource::Estimated),
        };
        (cluster_embedding(&embedding, schedule.sigma_n, k, opts)?, source)
    };
    let mut labels = vec![OUTSIDE; points.len()];
    for (pos, &i) in estimate.survivors.iter().enumerate() {
        labels[i] = cluster.labels[pos];
    }
    let max_nn_gap = nearest_neighbour_gaps(&sub, &cluster.labels, cluster.k_used, opts.exec);
    Ok(LevelSetResult {
        survivors: estimate.survivors,
        labels,
        cluster,
        count_source: source,
        log_f_n,
        max_nn_gap,
        densities: estimate.densities,
        lambda: estimate.lambda,
        s_n: estimate.s_n,
        sigma_n: estimate.sigma_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetCount {
    pub survivors: usize,
    pub c_hat: usize,
    pub log_f_n: f64,
    /// Leading eigenvalues of the survivor Laplacian.
    pub eigenvalues: Vec<f64>,
}

/// Component-count estimate on the truncated sample, without eigenvectors.
pub fn level_set_count(
    points: &PointSet,
    lambda: f64,
    spec: &KernelSpec,
    schedule: &Schedule,
    variant: Variant,
    opts: &ClusterOptions,
) -> Result<LevelSetCount> {
    let estimate = truncate(points, spec, lambda, schedule.sigma_n, schedule.s_n, opts.exec)?;
    if estimate.is_empty() {
        return Err(Error::EmptyLevelSet);
    }
    let m = estimate.survivors.len();
    let cfg = ComponentCountConfig::from_schedule(schedule);
    if m == 1 {
        return Ok(LevelSetCount { survivors: 1, c_hat: 1, log_f_n: cfg.log_f_n(points.len()), eigenvalues: vec![0.0] });
    }
    let sub = points.subset(&estimate.survivors)?;
    let bundle = build_bundle_with(&sub, spec, schedule.sigma_n, variant, BundleOptions { degree_floor: opts.degree_floor, exec: opts.exec })?;
    let values = spectrum(&bundle, opts.decompose)?;
    let c_hat = estimate_component_count(&values, points.len(), &cfg, default_c_max(m))?;
    Ok(LevelSetCount {
        survivors: m,
        c_hat,
        log_f_n: cfg.log_f_n(points.len()),
        eigenvalues: values[..m.min(EIGENVALUE_PREFIX)].to_vec(),
    })
}

fn nearest_neighbour_gaps(points: &PointSet, labels: &[usize], k: usize, exec: Execution) -> Vec<f64> {
    let nearest = exec::map_indices(exec, points.len(), |i| {
        let mut best = f64::INFINITY;
        for j in 0..points.len() {
            if j != i && labels[j] == labels[i] {
                best = best.min(sq_dist(points.point(i), points.point(j)));
            }
        }
        best
    });
    let mut gaps = vec![0.0f64; k];
    for (i, d) in nearest.into_iter().enumerate() {
        if d.is_finite() {
            gaps[labels[i]] = gaps[labels[i]].max(d.sqrt());
        }
    }
    gaps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub sigma: f64,
    pub variant: Variant,
    /// `None` when the bundle could not be built at this `σ`.
    pub result: Option<ClusterResult>,
    /// The bundle was built and the embedding is numerically resolved.
    pub applicable: bool,
    /// Labels equal the maximum-margin partition up to permutation;
    /// `None` when not applicable.
    pub agreement: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl SweepEntry {
    pub fn ratio(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.diagnostics.ratio)
    }
}

/// The last applicable entry, i.e. the smallest applicable `σ`.
pub fn smallest_applicable(entries: &[SweepEntry]) -> Option<&SweepEntry> {
    entries.iter().rev().find(|e| e.applicable)
}

/// One clustering per `σ` of a strictly decreasing grid, compared against
/// [`max_margin_partition`]. Degree underflow and unresolved embeddings
/// yield not-applicable entries.
pub fn sigma_sweep(
    points: &PointSet,
    spec: &KernelSpec,
    k: usize,
    variant: Variant,
    grid: &[f64],
    opts: &ClusterOptions,
) -> Result<Vec<SweepEntry>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sigma grid is empty".into()));
    }
    if grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::InvalidParameter("sigma grid entries must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("sigma grid must be strictly decreasing".into()));
    }
    let reference = max_margin_partition(points, k)?;
    let inner = ClusterOptions { exec: Execution::Sequential, ..*opts };
    let entries = exec::map_slice(opts.exec, grid, |&sigma| -> Result<SweepEntry> {
        match spectral_cluster_with(points, spec, sigma, k, variant, &inner) {
            Ok(result) if result.is_resolved() => {
                let agreement = result.partition().map(|p| p.same_clusters(&reference)).unwrap_or(false);
                Ok(SweepEntry { sigma, variant, result: Some(result), applicable: true, agreement: Some(agreement), reason: None })
            }
            Ok(result) => {
                let reason = format!(
                    "embedding resolution {:e} exceeds {RESOLUTION_FRACTION} of the between-cluster distance {:e}",
                    result.diagnostics.resolution, result.diagnostics.min_between
                );
                Ok(SweepEntry { sigma, variant, result: Some(result), applicable: false, agreement: None, reason: Some(reason) })
            }
            Err(e @ Error::SingularDegree { .. }) => {
                Ok(SweepEntry { sigma, variant, result: None, applicable: false, agreement: None, reason: Some(e.to_string()) })
            }
            Err(e) => Err(e),
        }
    });
    entries.into_iter().collect()
}

/// Index of the first agreeing entry after which every applicable entry agrees.
pub fn stable_agreement_from(entries: &[SweepEntry]) -> Option<usize> {
    let first = entries.iter().position(|e| e.agreement == Some(true))?;
    entries[first..].iter().all(|e| e.agreement != Some(false)).then_some(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linkage_splits_obvious_groups() {
        let rows = DenseMatrix::from_row_major(5, 1, vec![0.0, 0.1, 5.0, 5.2, 0.05]);
        assert_eq!(complete_linkage(&rows, 2).unwrap(), vec![0, 0, 1, 1, 0]);
        assert_eq!(complete_linkage(&rows, 5).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(complete_linkage(&rows, 1).unwrap(), vec![0; 5]);
    }

    #[test]
    fn hungarian_matches_permuted_labels() {
        let m = match_labels(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]).unwrap();
        assert_eq!(m.agreement, 5);
        assert_eq!(m.mapping, vec![Some(2), Some(0), Some(1)]);
        let m = match_labels(&[0, 0, 0, 1], &[0, 1, 1, 1]).unwrap();
        assert_eq!(m.agreement, 2);
        let m = match_labels(&[0, OUTSIDE, 1], &[1, 0, 0]).unwrap();
        assert_eq!((m.agreement, m.compared), (2, 2));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_below(&[0.0, 1e-12, 0.4, 0.5], 1e-6, 3).unwrap(), 2);
        assert_eq!(count_below(&[0.0, 0.3, 0.4, 0.5], 1e-6, 3).unwrap(), 1);
        assert!(count_below(&[0.0, 0.3], 1e-6, 2).is_err());
    }

    #[test]
    fn f_n_underflow_is_config_error() {
        let g = KernelSpec::gaussian(2).unwrap();
        let cfg = ComponentCountConfig::new(&g, 1e-3, 1.0, 0.0, 0.5).unwrap();
        assert!(matches!(cfg.f_n(100), Err(Error::Config(_))));
    }

    #[test]
    fn kmeans_flag_agrees_on_easy_data() {
        let rows = DenseMatrix::from_row_major(6, 1, vec![0.0, 0.1, 0.2, 9.0, 9.1, 9.2]);
        assert_eq!(kmeans(&rows, 2, 5, 3).unwrap(), complete_linkage(&rows, 2).unwrap());
    }
}
