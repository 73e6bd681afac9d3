//! Exponential-power kernels `K(x) = exp(-x^α)` and their scaled forms.
//!
//! `K(0) = 1`, `K` is strictly decreasing, and for `α ≥ 1` the tail ratio
//! condition `K(x)/K(y) ≤ A·exp(-(x-y)^α)` holds with `A = 1` because
//! `x^α ≥ y^α + (x-y)^α` whenever `α ≥ 1`. For `α < 1` no finite constant
//! works: `K(y+t)/K(y) → 1` as `y → ∞` with `t` fixed.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-x^2)`.
    Gaussian,
    /// `exp(-x^α)` for a user exponent.
    ExponentialPower,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian => f.write_str("gaussian"),
            KernelFamily::ExponentialPower => f.write_str("exponential_power"),
        }
    }
}

/// An exponential-power kernel with its tail constants and density normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    alpha: f64,
    tail_a: f64,
    tail_alpha: f64,
    dimension: usize,
    c_k: f64,
}

impl KernelSpec {
    pub fn gaussian(dimension: usize) -> Result<Self> {
        Self::build(KernelFamily::Gaussian, 2.0, dimension)
    }

    pub fn exponential_power(alpha: f64, dimension: usize) -> Result<Self> {
        Self::build(KernelFamily::ExponentialPower, alpha, dimension)
    }

    fn build(family: KernelFamily, alpha: f64, dimension: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("kernel exponent must be positive, got {alpha}")));
        }
        if dimension == 0 {
            return Err(Error::InvalidParameter("kernel dimension must be at least 1".into()));
        }
        Ok(Self {
            family,
            alpha,
            tail_a: 1.0,
            tail_alpha: alpha,
            dimension,
            c_k: normalization_constant(alpha, dimension)?,
        })
    }

    /// Override the tail constants `(A, α')` used by the margin thresholds.
    pub fn with_tail(mut self, tail_a: f64, tail_alpha: f64) -> Result<Self> {
        if !(tail_a.is_finite() && tail_a > 0.0 && tail_alpha.is_finite() && tail_alpha > 0.0) {
            return Err(Error::InvalidParameter("tail constants must be positive and finite".into()));
        }
        self.tail_a = tail_a;
        self.tail_alpha = tail_alpha;
        Ok(self)
    }

    /// Same family, exponent and tail constants for another dimension.
    pub fn with_dimension(self, dimension: usize) -> Result<Self> {
        let mut out = Self::build(self.family, self.alpha, dimension)?;
        out.tail_a = self.tail_a;
        out.tail_alpha = self.tail_alpha;
        Ok(out)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tail_a(&self) -> f64 {
        self.tail_a
    }

    pub fn tail_alpha(&self) -> f64 {
        self.tail_alpha
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    /// Whether the tail constants are covered by the superadditivity argument:
    /// `α ≥ 1`, `A ≥ 1` and `α' = α`.
    pub fn tail_bound_proven(&self) -> bool {
        self.alpha >= 1.0 && self.tail_a >= 1.0 && self.tail_alpha == self.alpha
    }

    /// `K(x)`. May underflow to zero for very large `x`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_distance(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// `K(x/σ)`, evaluated as `eval(x/σ)`.
    pub fn eval_scaled(&self, x: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        self.eval(x / sigma)
    }

    /// `log K(x) = -x^α`.
    pub fn log_eval(&self, x: f64) -> Result<f64> {
        check_distance(x)?;
        Ok(self.log_eval_unchecked(x))
    }

    /// `log K_σ(x) = -(x/σ)^α`.
    pub fn log_eval_scaled(&self, x: f64, sigma: f64) -> Result<f64> {
        check_sigma(sigma)?;
        self.log_eval(x / sigma)
    }

    /// `log(K_σ(a)/K_σ(b)) = (b^α - a^α)/σ^α`.
    pub fn log_ratio_scaled(&self, a: f64, b: f64, sigma: f64) -> Result<f64> {
        check_distance(a)?;
        check_distance(b)?;
        check_sigma(sigma)?;
        Ok((b.powf(self.alpha) - a.powf(self.alpha)) / sigma.powf(self.alpha))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        (-self.pow_alpha(x)).exp()
    }

    #[inline]
    pub(crate) fn log_eval_unchecked(&self, x: f64) -> f64 {
        -self.pow_alpha(x)
    }

    /// Kernel value from a squared distance, avoiding the square root for the Gaussian.
    #[inline]
    pub(crate) fn eval_sq_scaled(&self, sq_dist: f64, inv_sigma_sq: f64) -> f64 {
        let t = sq_dist * inv_sigma_sq;
        if self.alpha == 2.0 {
            (-t).exp()
        } else if self.alpha == 1.0 {
            (-t.sqrt()).exp()
        } else {
            (-t.powf(0.5 * self.alpha)).exp()
        }
    }

    #[inline]
    fn pow_alpha(&self, x: f64) -> f64 {
        if self.alpha == 2.0 {
            x * x
        } else if self.alpha == 1.0 {
            x
        } else {
            x.powf(self.alpha)
        }
    }

    /// Check the tail ratio inequality with this kernel's own constants.
    pub fn verify_tail_ratio(&self, samples: &[(f64, f64)]) -> Result<TailReport> {
        verify_tail_ratio(self, self.tail_a, self.tail_alpha, samples)
    }

    /// Flat `key=value` record: family, alpha, tail_A, tail_alpha, dimension.
    pub fn to_record(&self) -> String {
        format!(
            "family={}\nalpha={}\ntail_A={}\ntail_alpha={}\ndimension={}\n",
            self.family, self.alpha, self.tail_a, self.tail_alpha, self.dimension
        )
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut family = None;
        let mut alpha = None;
        let mut tail_a = None;
        let mut tail_alpha = None;
        let mut dimension = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: bad number {v:?}", lineno + 1)))
            };
            match key.trim() {
                "family" => {
                    family = Some(match value {
                        "gaussian" => KernelFamily::Gaussian,
                        "exponential_power" => KernelFamily::ExponentialPower,
                        other => return Err(Error::Config(format!("unknown kernel family {other:?}"))),
                    })
                }
                "alpha" => alpha = Some(num(value)?),
                "tail_A" => tail_a = Some(num(value)?),
                "tail_alpha" => tail_alpha = Some(num(value)?),
                "dimension" => {
                    dimension = Some(value.parse::<usize>().map_err(|_| {
                        Error::Config(format!("line {}: bad dimension {value:?}", lineno + 1))
                    })?)
                }
                other => return Err(Error::Config(format!("unknown kernel key {other:?}"))),
            }
        }
        let family = family.ok_or_else(|| Error::Config("missing family".into()))?;
        let dimension = dimension.ok_or_else(|| Error::Config("missing dimension".into()))?;
        let spec = match family {
            KernelFamily::Gaussian => {
                if let Some(a) = alpha {
                    if a != 2.0 {
                        return Err(Error::Config(format!("gaussian kernel requires alpha=2, got {a}")));
                    }
                }
                Self::gaussian(dimension)?
            }
            KernelFamily::ExponentialPower => {
                let a = alpha.ok_or_else(|| Error::Config("missing alpha".into()))?;
                Self::exponential_power(a, dimension)?
            }
        };
        let ta = tail_a.unwrap_or(spec.tail_a);
        let tal = tail_alpha.unwrap_or(spec.tail_alpha);
        spec.with_tail(ta, tal)
    }
}

fn check_distance(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!("kernel argument must be nonnegative, got {x}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive and finite, got {sigma}")));
    }
    Ok(())
}

/// `c_K = α·Γ(d/2) / (2·π^{d/2}·Γ(d/α))`, so that `c_K ∫ K(‖x‖) dx = 1` over `R^d`.
pub fn normalization_constant(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(format!("need alpha > 0 and d >= 1, got ({alpha}, {d})")));
    }
    let d = d as f64;
    let log_c = alpha.ln() + ln_gamma(d / 2.0) - 2f64.ln() - 0.5 * d * PI.ln() - ln_gamma(d / alpha);
    Ok(log_c.exp())
}

/// `∫_{R^d} exp(-‖x‖^α) dx` by radial reduction and adaptive Simpson quadrature.
///
/// The unit-sphere surface area comes from the recurrence
/// `ω_d = 2π·ω_{d-2}/(d-2)` seeded with `ω_1 = 2`, `ω_2 = 2π`.
pub fn radial_mass(alpha: f64, d: usize) -> f64 {
    let mut omega = if d % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut m = if d % 2 == 1 { 1 } else { 2 };
    while m < d {
        m += 2;
        omega *= 2.0 * PI / (m - 2) as f64;
    }
    let upper = 80f64.powf(1.0 / alpha);
    let f = |r: f64| r.powi(d as i32 - 1) * (-r.powf(alpha)).exp();
    // Split so the interval containing the bulk of the mass is resolved early.
    let knots = [0.0, 0.25 * upper.min(4.0), upper.min(4.0), upper];
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(&f, w[0], w[1], 1e-13, 50);
        }
    }
    omega * total
}

pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// A radially symmetric kernel profile known through its logarithm.
pub trait RadialProfile {
    fn log_value(&self, x: f64) -> f64;
}

impl RadialProfile for KernelSpec {
    fn log_value(&self, x: f64) -> f64 {
        self.log_eval_unchecked(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub holds: bool,
    /// `min over pairs of log A - (x-y)^α' - log(K(x)/K(y))`; negative means violated.
    pub worst_slack: f64,
    pub worst_pair: Option<(f64, f64)>,
    pub checked: usize,
}

/// Check `K(x)/K(y) ≤ A·exp(-(x-y)^α')` in log space for every `(y, x)` pair.
pub fn verify_tail_ratio<K: RadialProfile + ?Sized>(
    kernel: &K,
    tail_a: f64,
    tail_alpha: f64,
    samples: &[(f64, f64)],
) -> Result<TailReport> {
    let log_a = tail_a.ln();
    let mut worst = f64::INFINITY;
    let mut worst_pair = None;
    let mut holds = true;
    for &(y, x) in samples {
        if !(y >= 0.0 && x >= y) {
            return Err(Error::InvalidParameter(format!("tail pair must satisfy 0 <= y <= x, got ({y}, {x})")));
        }
        let (lx, ly) = (kernel.log_value(x), kernel.log_value(y));
        let gap = (x - y).powf(tail_alpha);
        let slack = log_a - gap - (lx - ly);
        let scale = 1.0 + lx.abs() + ly.abs() + gap + log_a.abs();
        if slack < -1e-12 * scale {
            holds = false;
        }
        if slack < worst {
            worst = slack;
            worst_pair = Some((y, x));
        }
    }
    Ok(TailReport { holds, worst_slack: worst, worst_pair, checked: samples.len() })
}
