//! Lipschitz regularization `f_k` of the derivative nonlinearity `g`.
//!
//! With `G(s) = int_0^s g`,
//!
//! ```text
//!          | -k [G(-k - 1/k) - G(-k)]      s <= -k
//!          | -k [G(s - 1/k) - G(s)]        -k <= s <= -1/k
//! f_k(s) = | k^2 s [G(-2/k) - G(-1/k)]     -1/k <= s <= 0
//!          | k^2 s [G(2/k) - G(1/k)]       0 <= s <= 1/k
//!          | k [G(s + 1/k) - G(s)]         1/k <= s <= k
//!          | k [G(k + 1/k) - G(k)]         s >= k
//! ```
//!
//! Shared endpoints go to the branch listed first. Differences of `G` are
//! evaluated as single integrals of `g` over the short interval, never as a
//! difference of two antiderivative values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::ScalarFn;
use crate::quadrature::adaptive_gk;

/// Absolute tolerance of [`antiderivative`].
pub const ANTIDERIVATIVE_TOL: f64 = 1e-12;
const SEGMENT_REL_TOL: f64 = 1e-14;
const MAX_INTERVALS: usize = 2000;

fn integral(g: &ScalarFn, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    adaptive_gk(|t| g.eval(t), a, b, abs_tol, SEGMENT_REL_TOL, MAX_INTERVALS)
        .map(|r| r.value)
        .map_err(|e| Error::Antiderivative { at: b, reason: e.to_string() })
}

/// `G(s) = int_0^s g(t) dt`.
pub fn antiderivative(g: &ScalarFn, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Antiderivative { at: s, reason: "non-finite argument".into() });
    }
    integral(g, 0.0, s, ANTIDERIVATIVE_TOL)
}

/// The pair `(k, f_k)`. Branch constants are computed once at construction.
#[derive(Debug, Clone)]
pub struct StraussApproximant {
    g: ScalarFn,
    k: u64,
    kf: f64,
    inv_k: f64,
    /// `f_k(-k)`, shared by the two leftmost branches.
    at_minus_k: f64,
    /// `f_k(k)`, shared by the two rightmost branches.
    at_k: f64,
    /// `int_{-2/k}^{-1/k} g`.
    inner_neg: f64,
    /// `int_{1/k}^{2/k} g`.
    inner_pos: f64,
}

impl StraussApproximant {
    pub fn new(g: ScalarFn, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("Strauss index k must be >= 1".into()));
        }
        let kf = k as f64;
        let inv_k = 1.0 / kf;
        let mut approx = Self { g, k, kf, inv_k, at_minus_k: 0.0, at_k: 0.0, inner_neg: 0.0, inner_pos: 0.0 };
        approx.inner_neg = approx.segment(-inv_k - inv_k, -inv_k)?;
        approx.inner_pos = approx.segment(inv_k, inv_k + inv_k)?;
        approx.at_minus_k = approx.left(-kf)?;
        approx.at_k = approx.right(kf)?;
        Ok(approx)
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn g(&self) -> &ScalarFn {
        &self.g
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64> {
        // Per-unit-length tolerance so that k * segment is accurate to ~1e-12.
        integral(&self.g, a, b, ANTIDERIVATIVE_TOL * (b - a).abs())
    }

    // -k [G(s - 1/k) - G(s)] = k int_{s-1/k}^{s} g
    fn left(&self, s: f64) -> Result<f64> {
        Ok(self.kf * self.segment(s - self.inv_k, s)?)
    }

    // k [G(s + 1/k) - G(s)] = k int_{s}^{s+1/k} g
    fn right(&self, s: f64) -> Result<f64> {
        Ok(self.kf * self.segment(s, s + self.inv_k)?)
    }

    /// `f_k(s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        let (k, inv_k) = (self.kf, self.inv_k);
        if s <= -k {
            Ok(self.at_minus_k)
        } else if s <= -inv_k {
            if s == -inv_k {
                // Same integral as the inner branch at this point.
                Ok(k * self.inner_neg)
            } else {
                self.left(s)
            }
        } else if s <= 0.0 {
            // k^2 s [G(-2/k) - G(-1/k)] = -k^2 s int_{-2/k}^{-1/k} g
            Ok(-k * k * s * self.inner_neg)
        } else if s <= inv_k {
            Ok(k * k * s * self.inner_pos)
        } else if s <= k {
            self.right(s)
        } else {
            Ok(self.at_k)
        }
    }

    /// Growth envelope of the upper estimate: `|s|^theta` for `|s| >= 1/k`, else `s^2`.
    pub fn envelope(&self, s: f64, theta: f64) -> f64 {
        if s.abs() >= self.inv_k {
            s.abs().powf(theta)
        } else {
            s * s
        }
    }

    /// Branch joins `-k, -1/k, 0, 1/k, k`.
    pub fn joins(&self) -> [f64; 5] {
        [-self.kf, -self.inv_k, 0.0, self.inv_k, self.kf]
    }
}

fn grid(radius: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(2);
    (0..samples).map(|i| -radius + 2.0 * radius * i as f64 / (samples - 1) as f64).collect()
}

/// `max |f_k(s) - g(s)|` over `samples` equispaced points of `[-m, m]`.
pub fn uniform_error(approx: &StraussApproximant, g: &ScalarFn, m: f64, samples: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in grid(m, samples) {
        worst = worst.max((approx.eval(s)? - g.eval(s)).abs());
    }
    Ok(worst)
}

/// Largest difference quotient of `f_k` between neighbouring samples of `[-radius, radius]`.
pub fn lipschitz_estimate(approx: &StraussApproximant, radius: f64, samples: usize) -> Result<f64> {
    let pts = grid(radius, samples);
    let vals: Vec<f64> = pts.iter().map(|&s| approx.eval(s)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 1..pts.len() {
        worst = worst.max((vals[i] - vals[i - 1]).abs() / (pts[i] - pts[i - 1]));
    }
    Ok(worst)
}

/// Sampled `sup s f_k(s) / envelope(s)` over `[-radius, radius]`, joins included.
pub fn growth_ratio(approx: &StraussApproximant, theta: f64, radius: f64, samples: usize) -> Result<f64> {
    let mut pts = grid(radius, samples);
    let inv_k = 1.0 / approx.k() as f64;
    for s in [inv_k, 2.0 * inv_k, approx.k() as f64] {
        if s <= radius {
            pts.push(s);
            pts.push(-s);
        }
    }
    let mut worst = 0.0f64;
    for s in pts {
        if s == 0.0 {
            continue;
        }
        worst = worst.max(s * approx.eval(s)? / approx.envelope(s, theta));
    }
    Ok(worst)
}

/// Strauss indices sampled when estimating the growth constant.
pub const GROWTH_SAMPLE_KS: [u64; 6] = [1, 10, 100, 1_000, 10_000, 100_000];

/// The growth constant `C1 = max(1, sup_k sup_s s f_k(s) / envelope(s))`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct GrowthConstant {
    pub c1: f64,
    /// Sampled supremum before clamping at 1.
    pub sampled_sup: f64,
    pub radius: f64,
    pub samples: usize,
}

pub fn growth_constant(g: &ScalarFn, theta: f64, radius: f64, samples: usize) -> Result<GrowthConstant> {
    let mut sup = 0.0f64;
    for k in GROWTH_SAMPLE_KS {
        let approx = StraussApproximant::new(g.clone(), k)?;
        sup = sup.max(growth_ratio(&approx, theta, radius, samples)?);
    }
    Ok(GrowthConstant { c1: sup.max(1.0), sampled_sup: sup, radius, samples })
}

/// One row of a Strauss report.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct StraussRow {
    pub k: u64,
    pub uniform_error: f64,
    pub lipschitz_estimate: f64,
}

/// `(k, uniform_error, lipschitz_estimate)` for each `k`.
pub fn report(g: &ScalarFn, ks: &[u64], radius: f64, samples: usize) -> Result<Vec<StraussRow>> {
    ks.iter()
        .map(|&k| {
            let approx = StraussApproximant::new(g.clone(), k)?;
            Ok(StraussRow {
                k,
                uniform_error: uniform_error(&approx, g, radius, samples)?,
                lipschitz_estimate: lipschitz_estimate(&approx, radius, samples)?,
            })
        })
        .collect()
}
