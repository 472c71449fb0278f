//! Problem instances: the data `(A, a1, g, q, p, theta, lambda, gamma)` of
//!
//! ```text
//! -(A(u) u')' + u = lambda a1(t) |u|^{q-1} + |u|^{p-1} + g(|u'|)   on R,
//! u > 0,  u(t) -> 0 as t -> +-inf,
//! ```
//!
//! together with sampled checks of the structural hypotheses placed on them.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::quadrature::adaptive_gk;

type Fn1 = dyn Fn(f64) -> f64 + Send + Sync;
type TailFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A named scalar function `R -> R`.
#[derive(Clone)]
pub struct ScalarFn {
    label: String,
    f: Arc<Fn1>,
}

impl ScalarFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), f: Arc::new(f) }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarFn({})", self.label)
    }
}

/// Diffusion coefficient `A` with its analytic derivative.
#[derive(Clone, Debug)]
pub struct Diffusion {
    pub value: ScalarFn,
    pub derivative: ScalarFn,
}

impl Diffusion {
    pub fn new(value: ScalarFn, derivative: ScalarFn) -> Self {
        Self { value, derivative }
    }

    /// `A(t) = gamma`.
    pub fn constant(gamma: f64) -> Self {
        Self::new(ScalarFn::new(format!("constant(gamma={gamma})"), move |_| gamma), ScalarFn::new("0", |_| 0.0))
    }

    /// `A(t) = gamma + (1 - gamma) (1/2 + arctan(t)/pi)`, increasing from `gamma` to 1.
    pub fn arctan(gamma: f64) -> Self {
        let span = 1.0 - gamma;
        Self::new(
            ScalarFn::new(format!("arctan(gamma={gamma})"), move |t: f64| {
                gamma + span * (0.5 + t.atan() / std::f64::consts::PI)
            }),
            ScalarFn::new(format!("arctan'(gamma={gamma})"), move |t: f64| {
                span / (std::f64::consts::PI * (1.0 + t * t))
            }),
        )
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.value.eval(t)
    }

    #[inline]
    pub fn eval_derivative(&self, t: f64) -> f64 {
        self.derivative.eval(t)
    }
}

/// Weight `a1` plus a certified bound on `int_{|t|>R} a1(t)^s dt`.
#[derive(Clone)]
pub struct Weight {
    pub value: ScalarFn,
    tail: Arc<TailFn>,
}

impl Weight {
    /// `tail(R, s)` must bound `int_{|t| > R} |a1(t)|^s dt` from above.
    pub fn new(value: ScalarFn, tail: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { value, tail: Arc::new(tail) }
    }

    /// `a1(t) = exp(-beta t^2)`.
    pub fn gaussian(beta: f64) -> Self {
        Self::new(
            ScalarFn::new(format!("gaussian(beta={beta})"), move |t: f64| (-beta * t * t).exp()),
            move |r: f64, s: f64| {
                let c = s * beta;
                (-c * r * r).exp() / (c * r)
            },
        )
    }

    /// `a1(t) = exp(-beta |t|)`.
    pub fn exponential(beta: f64) -> Self {
        Self::new(
            ScalarFn::new(format!("exponential(beta={beta})"), move |t: f64| (-beta * t.abs()).exp()),
            move |r: f64, s: f64| {
                let c = s * beta;
                2.0 * (-c * r).exp() / c
            },
        )
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.value.eval(t)
    }

    pub fn tail_bound(&self, radius: f64, exponent: f64) -> f64 {
        (self.tail)(radius, exponent)
    }

    /// Sampled infimum of `a1` on `[-radius, radius]` (endpoints included).
    pub fn infimum(&self, radius: f64, points: usize) -> f64 {
        let points = points.max(2);
        (0..points)
            .map(|i| self.eval(-radius + 2.0 * radius * i as f64 / (points - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.value.label())
    }
}

/// Catalog of derivative nonlinearities `g`.
pub mod nonlinearity {
    use super::ScalarFn;

    /// `g(s) = s|s|` (theta = 3).
    pub fn quadratic() -> ScalarFn {
        ScalarFn::new("s|s|", |s: f64| s * s.abs())
    }

    /// `g(s) = sign(s) |s|^{theta - 1}`.
    pub fn power(theta: f64) -> ScalarFn {
        ScalarFn::new(format!("sign(s)|s|^{}", theta - 1.0), move |s: f64| s.signum() * s.abs().powf(theta - 1.0))
    }

    /// `g = 0`.
    pub fn zero() -> ScalarFn {
        ScalarFn::new("0", |_| 0.0)
    }
}

/// Data of one problem instance. Immutable once built.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: String,
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub diffusion: Diffusion,
    pub weight: Weight,
    pub g: ScalarFn,
}

impl ProblemInstance {
    /// Builds an instance; rejects non-finite scalars and negative `lambda`.
    ///
    /// The exponent and `gamma` ranges are *not* rejected here: they are
    /// reported by [`validate_hypotheses`] like every other hypothesis.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        q: f64,
        p: f64,
        theta: f64,
        lambda: f64,
        gamma: f64,
        diffusion: Diffusion,
        weight: Weight,
        g: ScalarFn,
    ) -> Result<Self> {
        for (label, v) in [("q", q), ("p", p), ("theta", theta), ("lambda", lambda), ("gamma", gamma)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{label} must be finite, got {v}")));
            }
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { name: name.into(), q, p, theta, lambda, gamma, diffusion, weight, g })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Conjugate exponent `s = 2 / (2 - q)` of the weight norm.
    pub fn weight_exponent(&self) -> f64 {
        2.0 / (2.0 - self.q)
    }
}

/// Built-in instances.
pub mod catalog {
    use super::*;

    pub const DEFAULT: &str = "quadratic-arctan";

    pub fn names() -> &'static [&'static str] {
        &["quadratic-arctan", "quadratic-constant", "power25-arctan", "zero-g-constant"]
    }

    /// Looks up a named instance at the given `lambda`.
    pub fn instance(name: &str, lambda: f64) -> Option<ProblemInstance> {
        let (diffusion, g, theta) = match name {
            "quadratic-arctan" => (Diffusion::arctan(0.5), nonlinearity::quadratic(), 3.0),
            "quadratic-constant" => (Diffusion::constant(0.5), nonlinearity::quadratic(), 3.0),
            "power25-arctan" => (Diffusion::arctan(0.5), nonlinearity::power(2.5), 2.5),
            "zero-g-constant" => (Diffusion::constant(0.5), nonlinearity::zero(), 3.0),
            _ => return None,
        };
        ProblemInstance::new(name, 1.5, 3.0, theta, lambda, 0.5, diffusion, Weight::gaussian(1.0), g).ok()
    }

    pub fn diffusion(name: &str, gamma: f64) -> Option<Diffusion> {
        match name {
            "constant" => Some(Diffusion::constant(gamma)),
            "arctan" => Some(Diffusion::arctan(gamma)),
            _ => None,
        }
    }

    pub fn weight(name: &str, beta: f64) -> Option<Weight> {
        match name {
            "gaussian" => Some(Weight::gaussian(beta)),
            "exponential" => Some(Weight::exponential(beta)),
            _ => None,
        }
    }

    pub fn nonlinearity(name: &str, theta: f64) -> Option<ScalarFn> {
        match name {
            "quadratic" => Some(nonlinearity::quadratic()),
            "power" => Some(nonlinearity::power(theta)),
            "zero" => Some(nonlinearity::zero()),
            _ => None,
        }
    }
}

/// Outcome of one sampled hypothesis check.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Worst sampled margin (negative means violated).
    pub worst_margin: f64,
    pub worst_at: Option<f64>,
    /// Samples where the inequality holds with equality.
    pub ties: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct HypothesisReport {
    pub instance: String,
    pub grid_radius: f64,
    pub grid_points: usize,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Step of the centered difference used to cross-check `A'`.
pub const DERIVATIVE_FD_STEP: f64 = 1e-6;
/// Relative tolerance of the `A'` cross-check.
pub const DERIVATIVE_REL_TOL: f64 = 1e-4;

fn scalar_check(name: &str, margin: f64, strict: bool) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        passed: if strict { margin > 0.0 } else { margin >= 0.0 },
        worst_margin: margin,
        worst_at: None,
        ties: usize::from(margin == 0.0),
    }
}

/// Folds sampled margins into a check. `strict` demands margin > 0.
fn sampled_check(name: &str, at: &[f64], margins: &[f64], strict: bool) -> HypothesisCheck {
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut ties = 0;
    for (&t, &m) in at.iter().zip(margins) {
        if m == 0.0 {
            ties += 1;
        }
        if m < worst {
            worst = m;
            worst_at = Some(t);
        }
    }
    HypothesisCheck {
        name: name.into(),
        passed: if strict { worst > 0.0 } else { worst >= 0.0 },
        worst_margin: worst,
        worst_at,
        ties,
    }
}

fn finite(what: &str, at: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InstanceEvaluation { what: what.into(), at })
    }
}

/// Samples (H1)-(H3) on `grid_points` equispaced points of `[-grid_radius, grid_radius]`.
///
/// Non-strict inequalities pass on ties (ties are counted); strict ones
/// (`a1 > 0`, exponent ranges with open ends) fail on ties.
pub fn validate_hypotheses(inst: &ProblemInstance, grid_radius: f64, grid_points: usize) -> Result<HypothesisReport> {
    if grid_points < 2 || !(grid_radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need grid_points >= 2 and grid_radius > 0, got {grid_points}, {grid_radius}"
        )));
    }
    let grid: Vec<f64> =
        (0..grid_points).map(|i| -grid_radius + 2.0 * grid_radius * i as f64 / (grid_points - 1) as f64).collect();

    struct Sample {
        a1: f64,
        a1_mirror: f64,
        a: f64,
        da: f64,
        da_fd: f64,
        sg: f64,
        pow: f64,
    }
    let samples: Vec<Result<Sample>> = par::map_slice(&grid, |&t| {
        let h = DERIVATIVE_FD_STEP;
        Ok(Sample {
            a1: finite("a1", t, inst.weight.eval(t))?,
            a1_mirror: finite("a1", -t, inst.weight.eval(-t))?,
            a: finite("A", t, inst.diffusion.eval(t))?,
            da: finite("A'", t, inst.diffusion.eval_derivative(t))?,
            da_fd: finite("A", t, (inst.diffusion.eval(t + h) - inst.diffusion.eval(t - h)) / (2.0 * h))?,
            sg: finite("g", t, t * inst.g.eval(t))?,
            pow: t.abs().powf(inst.theta),
        })
    });
    let samples: Vec<Sample> = samples.into_iter().collect::<Result<_>>()?;

    let mut checks = vec![
        scalar_check("H1: q > 1", inst.q - 1.0, true),
        scalar_check("H1: q < 2", 2.0 - inst.q, true),
        scalar_check("H1: p > 2", inst.p - 2.0, true),
        scalar_check("H2: gamma > 0", inst.gamma, true),
        scalar_check("H2: gamma < 1", 1.0 - inst.gamma, true),
        scalar_check("H3: theta > 2", inst.theta - 2.0, true),
        scalar_check("H3: theta <= 3", 3.0 - inst.theta, false),
    ];

    let even: Vec<f64> = samples.iter().map(|s| -(s.a1 - s.a1_mirror).abs()).collect();
    checks.push(sampled_check("H1: a1 even", &grid, &even, false));
    let pos: Vec<f64> = samples.iter().map(|s| s.a1).collect();
    checks.push(sampled_check("H1: a1 positive", &grid, &pos, true));

    let lower: Vec<f64> = samples.iter().map(|s| s.a - inst.gamma).collect();
    checks.push(sampled_check("H2: A >= gamma", &grid, &lower, false));
    let mono: Vec<f64> = samples.windows(2).map(|w| w[1].a - w[0].a).collect();
    checks.push(sampled_check("H2: A nondecreasing", &grid[1..], &mono, false));
    let deriv: Vec<f64> =
        samples.iter().map(|s| DERIVATIVE_REL_TOL * s.da.abs().max(s.da_fd.abs()) - (s.da - s.da_fd).abs()).collect();
    checks.push(sampled_check("H2: A' matches finite difference", &grid, &deriv, false));

    let sg_lo: Vec<f64> = samples.iter().map(|s| s.sg).collect();
    checks.push(sampled_check("H3: s g(s) >= 0", &grid, &sg_lo, false));
    // `powf` and the product `s g(s)` may round differently; a gap within a
    // few ulps of `|s|^theta` is a tie.
    let sg_hi: Vec<f64> = samples
        .iter()
        .map(|s| {
            let m = s.pow - s.sg;
            if m.abs() <= 4.0 * f64::EPSILON * s.pow {
                0.0
            } else {
                m
            }
        })
        .collect();
    checks.push(sampled_check("H3: s g(s) <= |s|^theta", &grid, &sg_hi, false));

    Ok(HypothesisReport { instance: inst.name.clone(), grid_radius, grid_points, checks })
}

/// `||a1||_{L^s}` with `s = 2/(2-q)`, truncated to `[-R, R]`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct WeightNorm {
    pub exponent: f64,
    pub radius: f64,
    /// `(int_{-R}^{R} a1^s)^{1/s}`.
    pub norm: f64,
    /// `int_{-R}^{R} a1^s`.
    pub integral: f64,
    /// Certified upper bound on `int_{|t|>R} a1^s`.
    pub tail_bound: f64,
}

/// Largest tail mass tolerated by [`lstar_norm_a1`].
pub const TAIL_TOLERANCE: f64 = 1e-10;

/// Weighted norm of `a1` by adaptive quadrature plus a certified tail bound.
pub fn lstar_norm_a1(inst: &ProblemInstance, truncation_radius: f64) -> Result<WeightNorm> {
    if !(truncation_radius > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation radius must be positive, got {truncation_radius}")));
    }
    let s = inst.weight_exponent();
    let tail = inst.weight.tail_bound(truncation_radius, s);
    if !(tail <= TAIL_TOLERANCE) {
        return Err(Error::TruncationInsufficient { radius: truncation_radius, tail, tol: TAIL_TOLERANCE });
    }
    // Even integrand: integrate the right half on unit-length pieces.
    let pieces = truncation_radius.ceil().max(1.0) as usize;
    let width = truncation_radius / pieces as f64;
    let mut half = 0.0;
    for i in 0..pieces {
        let a = i as f64 * width;
        let b = if i + 1 == pieces { truncation_radius } else { (i + 1) as f64 * width };
        half += adaptive_gk(|t| inst.weight.eval(t).abs().powf(s), a, b, 1e-15, 1e-15, 500)?.value;
    }
    let integral = 2.0 * half;
    Ok(WeightNorm { exponent: s, radius: truncation_radius, norm: integral.powf(1.0 / s), integral, tail_bound: tail })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_instance() -> ProblemInstance {
        catalog::instance(catalog::DEFAULT, 0.01).unwrap()
    }

    #[test]
    fn catalog_instances_pass_hypotheses() {
        for name in catalog::names() {
            let inst = catalog::instance(name, 0.01).unwrap();
            let rep = validate_hypotheses(&inst, 20.0, 10_000).unwrap();
            assert!(rep.passed(), "{name}: {:#?}", rep.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sign_violation_in_g_is_reported() {
        let mut inst = default_instance();
        inst.g = ScalarFn::new("-s", |s| -s);
        let rep = validate_hypotheses(&inst, 20.0, 10_000).unwrap();
        assert!(!rep.passed());
        let c = rep.check("H3: s g(s) >= 0").unwrap();
        assert!(!c.passed);
        // s g(s) = -s^2 is most negative at the grid edge; s = 1 is a violation too.
        assert!(1.0 * inst.g.eval(1.0) < 0.0);
        assert_eq!(c.worst_margin, -400.0);
    }

    #[test]
    fn odd_weight_fails_evenness() {
        let mut inst = default_instance();
        inst.weight = Weight::new(ScalarFn::new("t", |t| t), |_, _| 0.0);
        let rep = validate_hypotheses(&inst, 20.0, 10_000).unwrap();
        let c = rep.check("H1: a1 even").unwrap();
        assert!(!c.passed);
        assert!(inst.weight.eval(1.0) != inst.weight.eval(-1.0));
    }

    #[test]
    fn non_finite_evaluation_is_an_error() {
        let mut inst = default_instance();
        inst.g = ScalarFn::new("1/s", |s| 1.0 / s);
        let grid_has_zero = validate_hypotheses(&inst, 1.0, 3);
        assert!(matches!(grid_has_zero, Err(Error::InstanceEvaluation { at, .. }) if at == 0.0));
    }

    #[test]
    fn constant_diffusion_reports_ties() {
        let inst = catalog::instance("quadratic-constant", 0.01).unwrap();
        let rep = validate_hypotheses(&inst, 5.0, 101).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.check("H2: A >= gamma").unwrap().ties, 101);
        assert_eq!(rep.check("H2: A nondecreasing").unwrap().ties, 100);
    }

    #[test]
    fn bad_grid_is_rejected() {
        let inst = default_instance();
        assert!(validate_hypotheses(&inst, 1.0, 1).is_err());
        assert!(validate_hypotheses(&inst, 0.0, 10).is_err());
    }

    #[test]
    fn gaussian_weight_norm_matches_closed_form() {
        let inst = default_instance();
        let wn = lstar_norm_a1(&inst, 20.0).unwrap();
        assert_eq!(wn.exponent, 4.0);
        // int exp(-4 t^2) dt = sqrt(pi / 4)
        let oracle = (std::f64::consts::PI / 4.0).sqrt().powf(0.25);
        assert_relative_eq!(wn.norm, oracle, max_relative = 1e-12);
        assert_relative_eq!(wn.norm, 0.970_26, max_relative = 1e-5);
    }

    #[test]
    fn exponential_weight_norm_matches_closed_form() {
        let mut inst = default_instance();
        inst.weight = Weight::exponential(1.0);
        let wn = lstar_norm_a1(&inst, 20.0).unwrap();
        assert_relative_eq!(wn.norm, 0.5_f64.powf(0.25), max_relative = 1e-12);
    }

    #[test]
    fn zero_weight_has_zero_norm() {
        let mut inst = default_instance();
        inst.weight = Weight::new(ScalarFn::new("0", |_| 0.0), |_, _| 0.0);
        assert_eq!(lstar_norm_a1(&inst, 5.0).unwrap().norm, 0.0);
    }

    #[test]
    fn short_truncation_is_rejected() {
        let inst = default_instance();
        assert!(matches!(lstar_norm_a1(&inst, 1.0), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn weight_infimum_is_attained_at_the_edge() {
        let w = Weight::gaussian(1.0);
        assert_eq!(w.infimum(1.0, 11), (-1.0f64).exp());
    }
}
