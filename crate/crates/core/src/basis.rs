//! Even orthonormal basis of `H_0^1(-n, n)`: `e_l(t) = nu_l cos(omega_l t)` with
//! `omega_l = (2l - 1) pi / (2n)` and `nu_l = 1 / sqrt(n (1 + omega_l^2))`.
//!
//! These are orthogonal in both `L^2` and `H^1`, so the `H^1` norm of a
//! synthesis is the Euclidean length of its coefficients.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::CompositeRule;

/// Gram deviation above which [`build_basis`] fails.
pub const GRAM_FAIL_TOL: f64 = 1e-8;
/// Gram deviation targeted by [`build_basis_auto`].
pub const GRAM_TARGET_TOL: f64 = 1e-10;
/// Quadrature nodes per unit length in the default policy.
pub const NODES_PER_UNIT: f64 = 32.0;

/// Default quadrature size: `max(2M + 8, 64, 32 n)`.
pub fn default_quadrature_nodes(n: f64, m: usize) -> usize {
    (2 * m + 8).max(64).max((NODES_PER_UNIT * n).ceil() as usize)
}

#[derive(Debug, Clone)]
pub struct EvenBasis {
    n: f64,
    omega: Vec<f64>,
    nu: Vec<f64>,
    rule: CompositeRule,
    /// `e_l` at the quadrature nodes, row `l`.
    values: Vec<f64>,
    /// `e_l'` at the quadrature nodes, row `l`.
    derivatives: Vec<f64>,
    gram_deviation: f64,
}

fn check_args(n: f64, m: usize) -> Result<()> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("half width n must be positive, got {n}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("basis dimension M must be >= 1".into()));
    }
    Ok(())
}

/// Builds the basis with at least `q` quadrature nodes (`q >= 2M + 8`).
pub fn build_basis(n: f64, m: usize, q: usize) -> Result<EvenBasis> {
    check_args(n, m)?;
    if q < 2 * m + 8 {
        return Err(Error::InvalidParameter(format!("need Q >= 2M + 8 = {}, got {q}", 2 * m + 8)));
    }
    let basis = EvenBasis::assemble(n, m, q)?;
    if basis.gram_deviation > GRAM_FAIL_TOL {
        return Err(Error::QuadratureOrder { deviation: basis.gram_deviation, nodes: basis.rule.len() });
    }
    Ok(basis)
}

/// Starts from `q` nodes and doubles until the Gram deviation is below
/// [`GRAM_TARGET_TOL`] (at most six doublings).
pub fn build_basis_auto(n: f64, m: usize, q: usize) -> Result<EvenBasis> {
    check_args(n, m)?;
    let mut q = q.max(2 * m + 8);
    let mut basis = EvenBasis::assemble(n, m, q)?;
    for _ in 0..6 {
        if basis.gram_deviation <= GRAM_TARGET_TOL {
            return Ok(basis);
        }
        q *= 2;
        basis = EvenBasis::assemble(n, m, q)?;
    }
    if basis.gram_deviation > GRAM_FAIL_TOL {
        return Err(Error::QuadratureOrder { deviation: basis.gram_deviation, nodes: basis.rule.len() });
    }
    Ok(basis)
}

impl EvenBasis {
    fn assemble(n: f64, m: usize, q: usize) -> Result<Self> {
        let rule = CompositeRule::symmetric(n, q)?;
        let omega: Vec<f64> = (0..m).map(|l| (2 * l + 1) as f64 * PI / (2.0 * n)).collect();
        let nu: Vec<f64> = omega.iter().map(|w| 1.0 / (n * (1.0 + w * w)).sqrt()).collect();
        let nodes = rule.nodes();
        let rows: Vec<(Vec<f64>, Vec<f64>)> = par::map_range(m, |l| {
            let (w, v) = (omega[l], nu[l]);
            let e = nodes.iter().map(|&t| v * (w * t).cos()).collect();
            let de = nodes.iter().map(|&t| -v * w * (w * t).sin()).collect();
            (e, de)
        });
        let mut values = Vec::with_capacity(m * nodes.len());
        let mut derivatives = Vec::with_capacity(m * nodes.len());
        for (e, de) in rows {
            values.extend(e);
            derivatives.extend(de);
        }
        let mut basis = Self { n, omega, nu, rule, values, derivatives, gram_deviation: 0.0 };
        basis.gram_deviation = basis.gram_deviation_computed();
        Ok(basis)
    }

    fn gram_deviation_computed(&self) -> f64 {
        let m = self.dim();
        let w = self.rule.weights();
        let rows: Vec<f64> = par::map_range(m, |i| {
            let (ei, di) = (self.e(i), self.de(i));
            let mut worst = 0.0f64;
            for j in 0..m {
                let (ej, dj) = (self.e(j), self.de(j));
                let g: f64 = (0..w.len()).map(|k| w[k] * (ei[k] * ej[k] + di[k] * dj[k])).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
            worst
        });
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn rule(&self) -> &CompositeRule {
        &self.rule
    }

    /// Largest `|Gram - I|` entry at this quadrature order.
    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// `e_l` at the quadrature nodes (`l` zero-based).
    pub fn e(&self, l: usize) -> &[f64] {
        let q = self.rule.len();
        &self.values[l * q..(l + 1) * q]
    }

    /// `e_l'` at the quadrature nodes.
    pub fn de(&self, l: usize) -> &[f64] {
        let q = self.rule.len();
        &self.derivatives[l * q..(l + 1) * q]
    }

    /// `int_{-n}^{n} e_l = nu_l (2 / omega_l) (-1)^l` (zero-based `l`).
    pub fn element_integral(&self, l: usize) -> f64 {
        let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.nu[l] * 2.0 / self.omega[l]
    }

    /// `(u, u')` at the quadrature nodes.
    pub fn synthesize_nodes(&self, xi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(xi.len(), self.dim());
        let q = self.rule.len();
        let mut u = vec![0.0; q];
        let mut du = vec![0.0; q];
        for (l, &c) in xi.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for ((ui, dui), (e, de)) in u.iter_mut().zip(du.iter_mut()).zip(self.e(l).iter().zip(self.de(l))) {
                *ui += c * e;
                *dui += c * de;
            }
        }
        (u, du)
    }

    /// `(u(t), u'(t), u''(t))` at an arbitrary point.
    pub fn synthesize_point(&self, xi: &[f64], t: f64) -> (f64, f64, f64) {
        let (mut u, mut du, mut d2u) = (0.0, 0.0, 0.0);
        for ((&c, &w), &v) in xi.iter().zip(&self.omega).zip(&self.nu) {
            let (s, co) = (w * t).sin_cos();
            u += c * v * co;
            du -= c * v * w * s;
            d2u -= c * v * w * w * co;
        }
        (u, du, d2u)
    }

    /// `(u, u')` on an arbitrary grid (`|t| <= n`).
    pub fn synthesize(&self, xi: &[f64], grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let pts: Vec<(f64, f64, f64)> = par::map_slice(grid, |&t| self.synthesize_point(xi, t));
        pts.into_iter().map(|(u, du, _)| (u, du)).unzip()
    }

    /// `H^1` projection of a function sampled with its derivative on a quadrature rule.
    ///
    /// The sampled function is taken to vanish outside the rule's interval,
    /// which must lie inside `[-n, n]`.
    pub fn project_samples(&self, nodes: &[f64], weights: &[f64], u: &[f64], du: &[f64]) -> Vec<f64> {
        par::map_range(self.dim(), |l| {
            let (w, v) = (self.omega[l], self.nu[l]);
            (0..nodes.len())
                .map(|i| {
                    let (s, c) = (w * nodes[i]).sin_cos();
                    weights[i] * (u[i] * v * c - du[i] * v * w * s)
                })
                .sum()
        })
    }

    /// `H^1` norm of a synthesis computed by quadrature.
    pub fn quadrature_norm(&self, xi: &[f64]) -> f64 {
        let (u, du) = self.synthesize_nodes(xi);
        let vals: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a * a + b * b).collect();
        self.rule.sum(&vals).sqrt()
    }
}

/// Coefficient vector with its `H^1` norm.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GalerkinCoeffs {
    pub xi: Vec<f64>,
    pub norm_w12: f64,
}

impl GalerkinCoeffs {
    pub fn new(xi: Vec<f64>) -> Self {
        let norm_w12 = euclid(&xi);
        Self { xi, norm_w12 }
    }
}

pub fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Projection `P_M`: keeps the first `m` coefficients.
pub fn truncate(xi: &[f64], m: usize) -> Vec<f64> {
    xi.iter().copied().take(m).collect()
}

/// Zero-pads (or truncates) `xi` to length `m`.
pub fn resize(xi: &[f64], m: usize) -> Vec<f64> {
    let mut out = truncate(xi, m);
    out.resize(m, 0.0);
    out
}
