//! Quadrature rules shared by every integral in the crate.
//!
//! Two rules live here: a fixed composite Gauss–Legendre rule used for all
//! Galerkin integrals on `[-n, n]`, and an adaptive Gauss–Kronrod (7/15)
//! integrator used for antiderivatives of the derivative nonlinearity and for
//! weighted norms of the coefficient `a1`.

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Nodes per Gauss–Legendre panel of the composite rule.
pub const PANEL_ORDER: usize = 16;

/// Composite Gauss–Legendre rule on a symmetric interval `[-half_width, half_width]`.
///
/// The panel count is always even so that `t = 0` is a panel boundary, and
/// nodes are mirrored exactly: `nodes[i] == -nodes[len - 1 - i]` bit for bit.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    /// Builds a rule with at least `min_nodes` nodes.
    pub fn symmetric(half_width: f64, min_nodes: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!("quadrature half width must be positive, got {half_width}")));
        }
        let mut panels = min_nodes.div_ceil(PANEL_ORDER).max(2);
        if panels % 2 == 1 {
            panels += 1;
        }
        let (ref_nodes, ref_weights) = reference_rule(PANEL_ORDER)?;
        let half_panels = panels / 2;
        let width = half_width / half_panels as f64;

        // Positive half first, then mirror.
        let mut pos_nodes = Vec::with_capacity(half_panels * PANEL_ORDER);
        let mut pos_weights = Vec::with_capacity(half_panels * PANEL_ORDER);
        for p in 0..half_panels {
            let a = p as f64 * width;
            let b = if p + 1 == half_panels { half_width } else { (p + 1) as f64 * width };
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (x, w) in ref_nodes.iter().zip(&ref_weights) {
                pos_nodes.push(mid + half * x);
                pos_weights.push(half * w);
            }
        }
        let mut nodes: Vec<f64> = pos_nodes.iter().rev().map(|x| -x).collect();
        nodes.extend_from_slice(&pos_nodes);
        let mut weights: Vec<f64> = pos_weights.iter().rev().copied().collect();
        weights.extend_from_slice(&pos_weights);
        Ok(Self { half_width, nodes, weights })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over the rule's interval.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Weighted sum of pre-sampled values (one per node).
    pub fn sum(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Gauss–Legendre nodes/weights on `[-1, 1]`, sorted ascending and symmetrized.
fn reference_rule(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussLegendre::new(order).map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre rule: {e}")))?;
    let mut pairs: Vec<(f64, f64)> = rule.nodes().copied().zip(rule.weights().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        nodes[j] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[j] = w;
    }
    Ok((nodes, weights))
}

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights, aligned with XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub value: f64,
    pub error_estimate: f64,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` (`a > b` flips the sign).
///
/// Bisects the worst interval until the summed error estimate drops below
/// `max(abs_tol, rel_tol * |value|)`, or fails after `max_intervals` pieces.
pub fn adaptive_gk(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Adaptive> {
    if a == b {
        return Ok(Adaptive { value: 0.0, error_estimate: 0.0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&mut f, lo, hi);
    let mut intervals = vec![(lo, hi, v, e)];
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let error: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Adaptive { value: sign * value, error_estimate: error });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence on [{lo}, {hi}]: error {error:.3e} > {abs_tol:.3e}"
            )));
        }
        let worst = intervals.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).map(|(i, _)| i).unwrap_or(0);
        let (l, h, _, _) = intervals.swap_remove(worst);
        let m = 0.5 * (l + h);
        if m <= l || m >= h {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature(format!("interval [{l}, {h}] exhausted")));
        }
        let (v1, e1) = gk15(&mut f, l, m);
        let (v2, e2) = gk15(&mut f, m, h);
        intervals.push((l, m, v1, e1));
        intervals.push((m, h, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn composite_rule_is_mirror_symmetric() {
        let rule = CompositeRule::symmetric(3.5, 100).unwrap();
        let n = rule.len();
        assert!(n >= 100);
        for i in 0..n {
            assert_eq!(rule.nodes()[i], -rule.nodes()[n - 1 - i]);
            assert_eq!(rule.weights()[i], rule.weights()[n - 1 - i]);
        }
        assert_relative_eq!(rule.weights().iter().sum::<f64>(), 7.0, max_relative = 1e-14);
    }

    #[test]
    fn composite_rule_integrates_smooth_functions() {
        let rule = CompositeRule::symmetric(2.0, 64).unwrap();
        let v = rule.integrate(|t| (-t * t).exp());
        // erf(2) * sqrt(pi)
        assert_relative_eq!(v, 1.764_162_781_524_843, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_kinks_and_reversed_bounds() {
        let v = adaptive_gk(|x: f64| x.abs(), -1.0, 2.0, 1e-13, 0.0, 200).unwrap();
        assert_relative_eq!(v.value, 2.5, max_relative = 1e-12);
        let r = adaptive_gk(|x: f64| x * x, 1.0, 0.0, 1e-14, 0.0, 50).unwrap();
        assert_relative_eq!(r.value, -1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let res = adaptive_gk(|x: f64| 1.0 / x.abs().sqrt().max(1e-300), -1.0, 1.0, 1e-15, 0.0, 4);
        assert!(matches!(res, Err(Error::Quadrature(_))));
    }
}
