//! Kernel density estimation, level-set truncation, bandwidth schedules and
//! synthetic Gaussian-mixture ground truth.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::KernelSpec;
use crate::matrix::sq_dist;
use crate::points::PointSet;

/// One isotropic Gaussian component `w·N(μ, s²I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub scale: f64,
}

/// Mixture of isotropic Gaussians with an optional level `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    components: Vec<GaussianComponent>,
    dim: usize,
    lambda: Option<f64>,
}

impl DensityModel {
    pub fn new(components: Vec<GaussianComponent>, lambda: Option<f64>) -> Result<Self> {
        let dim = components
            .first()
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::Config("a density model needs at least one component".into()))?;
        if dim == 0 {
            return Err(Error::Config("component means must be nonempty".into()));
        }
        let mut total = 0.0;
        for c in &components {
            if c.mean.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.mean.len() });
            }
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::Config(format!("component weight must be nonnegative, got {}", c.weight)));
            }
            if !(c.scale.is_finite() && c.scale > 0.0) {
                return Err(Error::Config(format!("component scale must be positive, got {}", c.scale)));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("component weights must sum to 1, got {total}")));
        }
        if let Some(l) = lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::Config(format!("lambda must be positive, got {l}")));
            }
        }
        Ok(Self { components, dim, lambda })
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    fn component_density(&self, c: &GaussianComponent, x: &[f64]) -> f64 {
        let s2 = c.scale * c.scale;
        let norm = (2.0 * PI * s2).powf(-0.5 * self.dim as f64);
        c.weight * norm * (-0.5 * sq_dist(x, &c.mean) / s2).exp()
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|c| self.component_density(c, x)).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for c in &self.components {
            let f = self.component_density(c, x) / (c.scale * c.scale);
            for (gi, (xi, mi)) in g.iter_mut().zip(x.iter().zip(&c.mean)) {
                *gi -= f * (xi - mi);
            }
        }
        g
    }

    /// Upper bound on `‖∇p‖`: each component's gradient norm peaks at distance `s`.
    pub fn gradient_bound(&self) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let s2 = c.scale * c.scale;
                c.weight * (2.0 * PI * s2).powf(-0.5 * self.dim as f64) * (-0.5f64).exp() / c.scale
            })
            .sum()
    }

    /// Flatness constants `(C, γ)`; not available in closed form for mixtures.
    pub fn flatness(&self) -> Option<(f64, f64)> {
        None
    }

    /// Local maxima reached by ascent from each component mean, deduplicated.
    pub fn modes(&self) -> Vec<Vec<f64>> {
        let mut modes: Vec<Vec<f64>> = Vec::new();
        let tol = 1e-3 * self.min_scale();
        for c in &self.components {
            if c.weight == 0.0 {
                continue;
            }
            let m = self.ascend(&c.mean);
            if !modes.iter().any(|q| sq_dist(q, &m).sqrt() < tol) {
                modes.push(m);
            }
        }
        modes
    }

    fn min_scale(&self) -> f64 {
        self.components.iter().map(|c| c.scale).fold(f64::INFINITY, f64::min)
    }

    /// Gradient ascent on `log p` with step `0.1·s_min²`, stopping once `‖∇p‖ < 1e-8`.
    pub fn ascend(&self, start: &[f64]) -> Vec<f64> {
        let eta = 0.1 * self.min_scale().powi(2);
        let mut x = start.to_vec();
        for _ in 0..20_000 {
            let g = self.gradient(&x);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gn < 1e-8 {
                break;
            }
            let p = self.density(&x);
            if p <= 0.0 {
                break;
            }
            let mut moved = 0.0;
            for (xi, gi) in x.iter_mut().zip(&g) {
                let step = eta * gi / p;
                *xi += step;
                moved += step * step;
            }
            if moved.sqrt() < 1e-14 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                break;
            }
        }
        x
    }

    /// Index into `modes` of the basin containing `x`.
    pub fn basin_label(&self, modes: &[Vec<f64>], x: &[f64]) -> usize {
        let end = self.ascend(x);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, m) in modes.iter().enumerate() {
            let d = sq_dist(m, &end);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Minimum of `p` along the segment between two points.
    pub fn segment_minimum(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..=4000)
            .map(|i| {
                let t = i as f64 / 4000.0;
                let x: Vec<f64> = a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect();
                self.density(&x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Gap between the `λ`-superlevel regions around two modes, measured along
    /// the segment joining them. Zero when the segment stays above `λ`.
    pub fn segment_gap(&self, a: &[f64], b: &[f64], lambda: f64) -> f64 {
        let len = sq_dist(a, b).sqrt();
        let point = |t: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect() };
        let above = |t: f64| self.density(&point(t)) >= lambda;
        let steps = 20_000;
        let mut first_below = None;
        let mut last_below = None;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            if !above(t) {
                first_below.get_or_insert(i);
                last_below = Some(i);
            }
        }
        let (Some(f), Some(l)) = (first_below, last_below) else {
            return 0.0;
        };
        let refine = |lo: f64, hi: f64, lo_above: bool| {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if above(mid) == lo_above {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let h = 1.0 / steps as f64;
        let left = if f == 0 { 0.0 } else { refine((f - 1) as f64 * h, f as f64 * h, true) };
        let right = if l == steps { 1.0 } else { refine((l + 1) as f64 * h, l as f64 * h, true) };
        (right - left).abs() * len
    }

    /// Flat `key=value` config: `components`, then `weight.i`, `mean.i`
    /// (comma separated), `scale.i`, and optional `lambda`.
    pub fn to_config(&self) -> String {
        let mut out = format!("components={}\n", self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            let mean: Vec<String> = c.mean.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("weight.{i}={}\nmean.{i}={}\nscale.{i}={}\n", c.weight, mean.join(","), c.scale));
        }
        if let Some(l) = self.lambda {
            out.push_str(&format!("lambda={l}\n"));
        }
        out
    }
}

impl FromStr for DensityModel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut count = None;
        let mut lambda = None;
        let mut fields = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = || Error::Config(format!("line {}: bad value {v:?}", lineno + 1));
            match k {
                "components" => count = Some(v.parse::<usize>().map_err(|_| bad())?),
                "lambda" => lambda = Some(v.parse::<f64>().map_err(|_| bad())?),
                _ => {
                    fields.insert(k.to_string(), v.to_string());
                }
            }
        }
        let count = count.ok_or_else(|| Error::Config("missing components".into()))?;
        let mut comps = Vec::with_capacity(count);
        for i in 0..count {
            let mut get = |name: &str| {
                fields
                    .remove(&format!("{name}.{i}"))
                    .ok_or_else(|| Error::Config(format!("missing {name}.{i}")))
            };
            let (w, m, s) = (get("weight"), get("mean"), get("scale"));
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?}")));
            let mean = m?.split(',').map(num).collect::<Result<Vec<_>>>()?;
            comps.push(GaussianComponent { weight: num(&w?)?, mean, scale: num(&s?)? });
        }
        if let Some(k) = fields.keys().next() {
            return Err(Error::Config(format!("unknown model key {k:?}")));
        }
        DensityModel::new(comps, lambda)
    }
}

/// `n` i.i.d. draws, deterministic in `seed`.
pub fn sample(model: &DensityModel, n: usize, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim;
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = model.components.len() - 1;
        for (i, c) in model.components.iter().enumerate() {
            acc += c.weight;
            if u < acc && c.weight > 0.0 {
                chosen = i;
                break;
            }
        }
        let c = &model.components[chosen];
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            coords.push(c.mean[j] + c.scale * z);
        }
    }
    PointSet::new(d, coords)
}

/// `p̂(x) = c_K/(n·σ^d)·Σ_i K(‖x - X_i‖/σ)` at each query.
pub fn kde_at(points: &PointSet, spec: &KernelSpec, sigma: f64, queries: &PointSet, exec: Execution) -> Result<Vec<f64>> {
    let d = points.dim();
    if spec.dimension() != d {
        return Err(Error::DimensionMismatch { expected: d, found: spec.dimension() });
    }
    if queries.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: queries.dim() });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")));
    }
    let factor = spec.c_k() / (points.len() as f64 * sigma.powi(d as i32));
    let inv = 1.0 / (sigma * sigma);
    Ok(exec::map_indices(exec, queries.len(), |q| {
        let x = queries.point(q);
        let mut s = 0.0;
        for i in 0..points.len() {
            s += spec.eval_sq_scaled(sq_dist(x, points.point(i)), inv);
        }
        factor * s
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetEstimate {
    /// Indices with `p̂(X_j) > λ - s_n`, ascending.
    pub survivors: Vec<usize>,
    pub lambda: f64,
    pub s_n: f64,
    pub sigma_n: f64,
    /// `p̂(X_j)` for every sample point.
    pub densities: Vec<f64>,
}

impl LevelSetEstimate {
    pub fn is_empty(&self) -> bool {
        self.survivors.is_empty()
    }
}

pub fn truncate(
    points: &PointSet,
    spec: &KernelSpec,
    lambda: f64,
    sigma_n: f64,
    s_n: f64,
    exec: Execution,
) -> Result<LevelSetEstimate> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(s_n.is_finite() && s_n >= 0.0) {
        return Err(Error::InvalidParameter(format!("slack must be nonnegative, got {s_n}")));
    }
    let densities = kde_at(points, spec, sigma_n, points, exec)?;
    let threshold = lambda - s_n;
    let survivors = (0..points.len()).filter(|&j| densities[j] > threshold).collect();
    Ok(LevelSetEstimate { survivors, lambda, s_n, sigma_n, densities })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleProfile {
    /// Bandwidth window for the eigenvector lemmas, `ν > 1/α`.
    EvecConsistency,
    /// Bandwidth window for the eigenvalue lemmas, `ν > 1/(α√ε)`.
    EvalConsistency,
}

impl fmt::Display for ScheduleProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleProfile::EvecConsistency => "evec",
            ScheduleProfile::EvalConsistency => "eval",
        })
    }
}

impl FromStr for ScheduleProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evec" => Ok(ScheduleProfile::EvecConsistency),
            "eval" => Ok(ScheduleProfile::EvalConsistency),
            other => Err(Error::InvalidParameter(format!("unknown schedule profile {other:?}; expected evec or eval"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    /// Slack scale `D` in `s_n = D·σ_n^{1-ε}`.
    pub slack_scale: f64,
    pub epsilon: f64,
    /// Window exponent; defaults to `1.5/α` or `1.5/(α√ε)` by profile.
    pub nu: Option<f64>,
    /// `H` in `f_n = H·n^h·K(σ_n^{-√ε})`.
    pub h_scale: f64,
    /// `h` in `f_n`.
    pub h_exp: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self { slack_scale: 1.0, epsilon: 0.5, nu: None, h_scale: 1.0, h_exp: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n: usize,
    pub d: usize,
    pub profile: ScheduleProfile,
    pub nu: f64,
    /// `n^{-1/(d+1)}`.
    pub lower: f64,
    /// `(ln n)^{-ν}`.
    pub upper: f64,
    /// Geometric mean of the window endpoints.
    pub sigma_n: f64,
    pub s_n: f64,
    pub params: ScheduleParams,
    /// Kernel exponent, needed to evaluate `f_n`.
    pub alpha: f64,
}

impl Schedule {
    /// `ln f_n = ln H + h·ln n - σ_n^{-α√ε}`.
    pub fn log_f_n(&self) -> f64 {
        self.params.h_scale.ln() + self.params.h_exp * (self.n as f64).ln()
            - self.sigma_n.powf(-self.alpha * self.params.epsilon.sqrt())
    }
}

pub fn schedule(n: usize, d: usize, spec: &KernelSpec, profile: ScheduleProfile, params: ScheduleParams) -> Result<Schedule> {
    if n < 2 {
        return Err(Error::InvalidParameter("schedule needs n >= 2".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let eps = params.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if !(params.slack_scale.is_finite() && params.slack_scale > 0.0) {
        return Err(Error::InvalidParameter("slack scale D must be positive".into()));
    }
    if !(params.h_scale.is_finite() && params.h_scale > 0.0 && params.h_exp.is_finite()) {
        return Err(Error::InvalidParameter("f_n needs H > 0 and finite h".into()));
    }
    let alpha = spec.alpha();
    let floor = match profile {
        ScheduleProfile::EvecConsistency => 1.0 / alpha,
        ScheduleProfile::EvalConsistency => 1.0 / (alpha * eps.sqrt()),
    };
    let nu = params.nu.unwrap_or(1.5 * floor);
    if nu <= floor {
        return Err(Error::InvalidParameter(format!("nu must exceed {floor} for this profile, got {nu}")));
    }
    let (lower, upper) = window(n, d, nu);
    if !(lower < upper) {
        return Err(Error::ScheduleInfeasible { n, min_feasible_n: min_feasible_n(n, d, nu) });
    }
    let sigma_n = (0.5 * (lower.ln() + upper.ln())).exp();
    let s_n = params.slack_scale * sigma_n.powf(1.0 - eps);
    Ok(Schedule { n, d, profile, nu, lower, upper, sigma_n, s_n, params: ScheduleParams { nu: Some(nu), ..params }, alpha })
}

fn window(n: usize, d: usize, nu: f64) -> (f64, f64) {
    let nf = n as f64;
    (nf.powf(-1.0 / (d as f64 + 1.0)), nf.ln().powf(-nu))
}

/// Smallest `m > n` from which the window stays nonempty. `ln(upper/lower)`
/// increases once `ln m > ν(d+1)`, so the search starts past that point.
fn min_feasible_n(n: usize, d: usize, nu: f64) -> usize {
    let feasible = |m: usize| {
        let (lo, hi) = window(m, d, nu);
        lo < hi
    };
    let turn = (nu * (d as f64 + 1.0)).exp().ceil();
    let mut lo = (n + 1).max(if turn < 1e18 { turn as usize } else { usize::MAX / 4 }).max(3);
    if feasible(lo) {
        return lo;
    }
    let mut hi = lo;
    while !feasible(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == usize::MAX {
            return hi;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
