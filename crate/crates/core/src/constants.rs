//! Explicit constants of the existence argument, the positivity barrier and
//! the large-`lambda` nonexistence bound.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::galerkin::{random_directions, GalerkinSystem};
use crate::par;
use crate::problem::{lstar_norm_a1, Diffusion, ProblemInstance};
use crate::strauss::growth_constant;

/// `C` in `||u||_inf <= C ||u||_{W^{1,2}}` for the Hilbert norm.
pub fn embedding_constant() -> f64 {
    FRAC_1_SQRT_2
}

/// `min{(gamma / (4 C^{p-2}))^{1/(p-2)}, (gamma / (4 C1 max{C^{theta-2}, C}))^{1/(theta-2)}}`.
pub fn delta1(gamma: f64, c: f64, c1: f64, p: f64, theta: f64) -> f64 {
    let a = (gamma / (4.0 * c.powf(p - 2.0))).powf(1.0 / (p - 2.0));
    let b = (gamma / (4.0 * c1 * c.powf(theta - 2.0).max(c))).powf(1.0 / (theta - 2.0));
    a.min(b)
}

/// `gamma r^2 - C^{p-2} r^p - C1 max{C^{theta-2}, C} r^theta`, which exceeds
/// `gamma r^2 / 2` for `0 < r < delta1`.
pub fn coercivity_margin(r: f64, gamma: f64, c: f64, c1: f64, p: f64, theta: f64) -> f64 {
    gamma * r * r - c.powf(p - 2.0) * r.powf(p) - c1 * c.powf(theta - 2.0).max(c) * r.powf(theta)
}

/// `Lambda* = r^2 gamma / (2 C2 delta1^q)`.
pub fn lambda_star(r: f64, gamma: f64, c2: f64, delta1: f64, q: f64) -> f64 {
    r * r * gamma / (2.0 * c2 * delta1.powf(q))
}

/// `rho1 = gamma r^2 / 2 - lambda C2 delta1^q`.
pub fn rho1(lambda: f64, gamma: f64, r: f64, c2: f64, delta1: f64, q: f64) -> f64 {
    0.5 * gamma * r * r - lambda * c2 * delta1.powf(q)
}

/// Smallest `k` with `rho1 > (C1 sqrt(2n) / k + sqrt(2n) / k) delta1` (`psi = 1`).
pub fn k_star(rho1: f64, c1: f64, n: f64, delta1: f64) -> Result<u64> {
    if !(rho1 > 0.0) {
        return Err(Error::LambdaTooLarge { rho1 });
    }
    let bound = (c1 + 1.0) * (2.0 * n).sqrt() * delta1 / rho1;
    let k = bound.floor() + 1.0;
    if !(k < u64::MAX as f64) {
        return Err(Error::LambdaTooLarge { rho1 });
    }
    Ok(k as u64)
}

/// First Dirichlet eigenvalue of `-d^2/dt^2` on `(-n, n)`: `pi^2 / (2n)^2`.
pub fn first_eigenvalue(n: f64) -> f64 {
    PI * PI / (4.0 * n * n)
}

/// First eigenfunction `cos(pi t / (2n))`, normalized by its maximum.
pub fn first_eigenfunction(n: f64, t: f64) -> f64 {
    (PI * t / (2.0 * n)).cos()
}

/// `tau = (lambda a~ / (1 + gamma lambda1))^{1/(2-q)}`.
pub fn tau_subsolution_scale(lambda: f64, a_tilde: f64, gamma: f64, lambda1: f64, q: f64) -> Result<f64> {
    if !(a_tilde > 0.0) {
        return Err(Error::WeightVanishes(a_tilde));
    }
    Ok((lambda * a_tilde / (1.0 + gamma * lambda1)).powf(1.0 / (2.0 - q)))
}

/// [`tau_subsolution_scale`] for an instance, with 0 when `min a1` underflows to 0.
pub fn barrier_scale(inst: &ProblemInstance, a_tilde: f64, lambda1: f64) -> Result<f64> {
    match tau_subsolution_scale(inst.lambda, a_tilde, inst.gamma, lambda1, inst.q) {
        Err(Error::WeightVanishes(0.0)) => Ok(0.0),
        other => other,
    }
}

/// `Q(s) = (Lambda s^{q-1} + s^{p-1}) / s`.
pub fn q_functional(lambda_cap: f64, q: f64, p: f64, s: f64) -> f64 {
    (lambda_cap * s.powf(q - 1.0) + s.powf(p - 1.0)) / s
}

/// Minimizer `m = (Lambda (2-q) / (p-2))^{1/(p-q)}` of `Q` and `C_Lambda = Q(m)`.
///
/// `Lambda = 0` gives `(0, 0)`, the infimum of `Q(s) = s^{p-2}`.
pub fn q_min_and_threshold(lambda_cap: f64, q: f64, p: f64) -> (f64, f64) {
    if lambda_cap <= 0.0 {
        return (0.0, 0.0);
    }
    let m = (lambda_cap * (2.0 - q) / (p - 2.0)).powf(1.0 / (p - q));
    (m, q_functional(lambda_cap, q, p, m))
}

/// `r~ = min{r, sqrt(lambda) sqrt(2 C2 r^q / gamma)}`.
pub fn r_tilde(lambda: f64, r: f64, c2: f64, gamma: f64, q: f64) -> f64 {
    r.min(lambda.sqrt() * asymptotic_constant(r, c2, gamma, q).sqrt())
}

/// `2 C2 r^q / gamma`, so that `||u_lambda||^2 <= lambda * asymptotic_constant`.
pub fn asymptotic_constant(r: f64, c2: f64, gamma: f64, q: f64) -> f64 {
    2.0 * c2 * r.powf(q) / gamma
}

/// `delta` of the nonexistence inequality.
pub const NONEXISTENCE_DELTA: f64 = 0.5;

/// Data of the nonexistence threshold.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Threshold {
    pub lambda0: f64,
    pub radius: f64,
    pub r_tilde: f64,
    /// `min a1` on `[-R, R]`.
    pub a_tilde_r: f64,
    /// `pi^2 / (2R)^2`.
    pub sigma1: f64,
    pub delta: f64,
    /// `A(C r~) sigma1 + A(C r~) delta + 1`.
    pub target: f64,
}

/// Samples used for infima of `a1`.
pub const INFIMUM_POINTS: usize = 10_001;

/// Smallest `lambda0` with `C_Lambda(lambda0 a~_R) >= A(C r~) sigma1 + A(C r~) delta + 1`, by bisection.
pub fn nonexistence_threshold(inst: &ProblemInstance, radius: f64, r_tilde: f64) -> Result<Threshold> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let a_tilde_r = inst.weight.infimum(radius, INFIMUM_POINTS);
    if !(a_tilde_r > 0.0) {
        return Err(Error::ThresholdUndefined(format!("inf a1 on [-{radius}, {radius}] is {a_tilde_r}")));
    }
    let a = inst.diffusion.eval(embedding_constant() * r_tilde);
    let sigma1 = first_eigenvalue(radius);
    let delta = NONEXISTENCE_DELTA;
    let target = a * sigma1 + a * delta + 1.0;
    let c_lambda = |lambda: f64| q_min_and_threshold(lambda * a_tilde_r, inst.q, inst.p).1;

    let mut hi = 1.0;
    let mut doublings = 0;
    while c_lambda(hi) < target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(Error::ThresholdUndefined("C_Lambda does not reach the target".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if c_lambda(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold { lambda0: hi, radius, r_tilde, a_tilde_r, sigma1, delta, target })
}

/// Largest sampled difference quotient of `A` on `[-radius, radius]`.
pub fn diffusion_lipschitz(a: &Diffusion, radius: f64, samples: usize) -> f64 {
    let samples = samples.max(2);
    let pts: Vec<f64> = (0..samples).map(|i| -radius + 2.0 * radius * i as f64 / (samples - 1) as f64).collect();
    pts.windows(2).map(|w| (a.eval(w[1]) - a.eval(w[0])).abs() / (w[1] - w[0])).fold(0.0, f64::max)
}

/// Lieberman constants `T` (slightly above the required maximum) and `L = 2T`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct LiebermanConstants {
    pub t: f64,
    pub l: f64,
    pub a_tilde_lipschitz: f64,
}

/// Relative margin by which `T` exceeds the maximum it must dominate.
pub const LIEBERMAN_MARGIN: f64 = 1e-6;

pub fn lieberman(inst: &ProblemInstance, n: f64, r: f64, c1: f64, lipschitz_samples: usize) -> LiebermanConstants {
    let cr = embedding_constant() * r;
    let a1_edge = inst.weight.eval(-n).abs().max(inst.weight.eval(n).abs());
    let a_tilde = diffusion_lipschitz(&inst.diffusion, cr, lipschitz_samples);
    let first = cr + inst.lambda * a1_edge * cr.powf(inst.q - 1.0) + cr.powf(inst.p - 1.0) + 1.0;
    let t = first.max(2.0 * c1).max(inst.diffusion.eval(cr)).max(a_tilde) * (1.0 + LIEBERMAN_MARGIN);
    LiebermanConstants { t, l: 2.0 * t, a_tilde_lipschitz: a_tilde }
}

/// Outcome of sampling `<F(xi), xi>` on the sphere `||xi|| = r`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertificateReport {
    pub radius: f64,
    pub samples: usize,
    pub min_pairing: f64,
    /// Direction (scaled to the sphere) attaining the minimum.
    pub witness: Vec<f64>,
    pub passed: bool,
}

/// Evaluates `<F(xi), xi>` at `samples` seeded random points of the sphere of radius `r`.
pub fn sphere_sign_certificate(sys: &GalerkinSystem, r: f64, samples: usize, seed: u64) -> Result<CertificateReport> {
    let dirs: Vec<Vec<f64>> = random_directions(sys.dim(), samples, seed)
        .into_iter()
        .map(|d| d.into_iter().map(|x| r * x).collect())
        .collect();
    let vals: Vec<Result<f64>> = par::map_slice(&dirs, |xi| sys.pairing(xi));
    let mut min_pairing = f64::INFINITY;
    let mut witness = vec![0.0; sys.dim()];
    for (v, d) in vals.into_iter().zip(&dirs) {
        let v = v?;
        if v < min_pairing {
            min_pairing = v;
            witness.clone_from(d);
        }
    }
    Ok(CertificateReport { radius: r, samples, min_pairing, witness, passed: min_pairing > 0.0 })
}

/// Knobs for [`ConstantsReport::compute`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsSettings {
    /// Radius and sample count of the sampled growth constant `C1`.
    pub c1_radius: f64,
    pub c1_samples: usize,
    /// Truncation radius of `||a1||_{L^s}`.
    pub weight_radius: f64,
    /// Radius `R` of the nonexistence threshold.
    pub nonexistence_radius: f64,
    pub lipschitz_samples: usize,
}

impl Default for ConstantsSettings {
    fn default() -> Self {
        Self {
            c1_radius: 20.0,
            c1_samples: 4001,
            weight_radius: 8.0,
            nonexistence_radius: 1.0,
            lipschitz_samples: 10_001,
        }
    }
}

/// Every constant for one instance at one `(n, lambda)`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConstantsReport {
    pub instance: String,
    pub n: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub delta1: f64,
    pub r: f64,
    pub rho1: f64,
    #[serde(rename = "Lambda_star")]
    pub lambda_star: f64,
    /// `None` when `rho1 <= 0`.
    pub k_star: Option<u64>,
    pub lambda1: f64,
    /// `min a1` on `[-n, n]`.
    pub a_tilde: f64,
    pub tau: f64,
    pub r_tilde: f64,
    /// `2 C2 r^q / gamma`.
    pub asymptotic_constant: f64,
    /// `Lambda = lambda a~_R`.
    #[serde(rename = "Lambda")]
    pub lambda_cap: f64,
    pub m: f64,
    #[serde(rename = "C_Lambda")]
    pub c_lambda: f64,
    pub nonexistence_radius: f64,
    pub a_tilde_r: f64,
    pub sigma1: f64,
    pub delta: f64,
    pub nonexistence_threshold: f64,
    pub nonexistence_threshold_ok: bool,
    #[serde(rename = "T")]
    pub lieberman_t: f64,
    #[serde(rename = "L")]
    pub lieberman_l: f64,
    #[serde(rename = "A_tilde")]
    pub a_tilde_lipschitz: f64,
}

impl ConstantsReport {
    pub fn compute(inst: &ProblemInstance, n: f64, settings: &ConstantsSettings) -> Result<Self> {
        let c = embedding_constant();
        let c1 = growth_constant(&inst.g, inst.theta, settings.c1_radius, settings.c1_samples)?.c1;
        let c2 = lstar_norm_a1(inst, settings.weight_radius)?.norm;
        let d1 = delta1(inst.gamma, c, c1, inst.p, inst.theta);
        let r = 0.5 * d1;
        let rho = rho1(inst.lambda, inst.gamma, r, c2, d1, inst.q);
        let k = k_star(rho, c1, n, d1).ok();
        let lambda1 = first_eigenvalue(n);
        let a_tilde = inst.weight.infimum(n, INFIMUM_POINTS);
        let tau = barrier_scale(inst, a_tilde, lambda1)?;
        let rt = r_tilde(inst.lambda, r, c2, inst.gamma, inst.q);
        // A is nondecreasing, so r in place of r~ only raises the target.
        let thr = nonexistence_threshold(inst, settings.nonexistence_radius, r)?;
        let lambda_cap = inst.lambda * thr.a_tilde_r;
        let (m, c_lambda) = q_min_and_threshold(lambda_cap, inst.q, inst.p);
        let lieb = lieberman(inst, n, r, c1, settings.lipschitz_samples);
        Ok(Self {
            instance: inst.name.clone(),
            n,
            lambda: inst.lambda,
            gamma: inst.gamma,
            q: inst.q,
            p: inst.p,
            theta: inst.theta,
            c,
            c1,
            c2,
            delta1: d1,
            r,
            rho1: rho,
            lambda_star: lambda_star(r, inst.gamma, c2, d1, inst.q),
            k_star: k,
            lambda1,
            a_tilde,
            tau,
            r_tilde: rt,
            asymptotic_constant: asymptotic_constant(r, c2, inst.gamma, inst.q),
            lambda_cap,
            m,
            c_lambda,
            nonexistence_radius: thr.radius,
            a_tilde_r: thr.a_tilde_r,
            sigma1: thr.sigma1,
            delta: thr.delta,
            nonexistence_threshold: thr.lambda0,
            nonexistence_threshold_ok: thr.lambda0.is_finite() && inst.lambda < thr.lambda0,
            lieberman_t: lieb.t,
            lieberman_l: lieb.l,
            a_tilde_lipschitz: lieb.a_tilde_lipschitz,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::catalog;
    use approx::assert_relative_eq;

    #[test]
    fn delta1_symmetric_case() {
        let c = embedding_constant();
        let d = delta1(0.5, c, 1.0, 3.0, 3.0);
        assert_relative_eq!(d, 0.5 / (4.0 * c), max_relative = 1e-15);
        assert!((d - 0.17678).abs() < 1e-5);
        assert!(delta1(1e-9, c, 1.0, 3.0, 3.0) < 1e-9);
    }

    #[test]
    fn half_coercivity_below_delta1() {
        let c = embedding_constant();
        let d = delta1(0.5, c, 7.0 / 3.0, 3.0, 3.0);
        for i in 1..1000 {
            let r = d * i as f64 / 1000.0;
            assert!(coercivity_margin(r, 0.5, c, 7.0 / 3.0, 3.0, 3.0) > 0.25 * r * r);
        }
    }

    #[test]
    fn lambda_star_boundary_and_homogeneity() {
        let (r, g, c2, d, q) = (0.088_388, 0.5, 0.9712, 0.176_78, 1.5);
        let ls = lambda_star(r, g, c2, d, q);
        assert!((ls - 0.02706).abs() < 1e-5);
        assert!(rho1(ls, g, r, c2, d, q).abs() < 1e-17);
        assert!(rho1(0.5 * ls, g, r, c2, d, q) > 0.0);
        assert_relative_eq!(lambda_star(r, g, 2.0 * c2, d, q), 0.5 * ls, max_relative = 1e-15);
    }

    #[test]
    fn k_star_examples() {
        let d = 0.176_78;
        let k = k_star(1e-3, 1.0, 5.0, d).unwrap();
        assert_eq!(k, 1119);
        let holds = |k: u64| 1e-3 > (2.0 * 10f64.sqrt() / k as f64) * d;
        assert!(holds(k) && !holds(k - 1));
        assert_eq!(k_star(1e9, 1.0, 5.0, d).unwrap(), 1);
        assert!(matches!(k_star(0.0, 1.0, 5.0, d), Err(Error::LambdaTooLarge { .. })));
    }

    #[test]
    fn eigen_pair() {
        assert_relative_eq!(first_eigenvalue(1.0), PI * PI / 4.0, max_relative = 1e-15);
        assert!((first_eigenvalue(5.0) - 0.098_696).abs() < 1e-6);
        assert!(first_eigenfunction(5.0, 5.0).abs() < 1e-15);
    }

    #[test]
    fn tau_formula() {
        let l1 = first_eigenvalue(5.0);
        let t = tau_subsolution_scale(0.02, (-25f64).exp(), 0.5, l1, 1.5).unwrap();
        let oracle = (0.02 * (-25f64).exp() / (1.0 + 0.5 * l1)).powi(2);
        assert_relative_eq!(t, oracle, max_relative = 1e-14);
        assert!(matches!(tau_subsolution_scale(0.02, 0.0, 0.5, l1, 1.5), Err(Error::WeightVanishes(_))));
        assert_eq!(tau_subsolution_scale(0.0, 1.0, 0.5, l1, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn q_minimizer() {
        let (m, cl) = q_min_and_threshold(1.0, 1.5, 3.0);
        assert_relative_eq!(m, 0.5f64.powf(1.0 / 1.5), max_relative = 1e-15);
        assert_relative_eq!(cl, m.powf(-0.5) + m, max_relative = 1e-14);
        assert!((cl - 1.889_88).abs() < 1e-5);
        assert!(q_functional(1.0, 1.5, 3.0, 1e-6) > 999.0);
        assert!(q_min_and_threshold(2.0, 1.5, 3.0).0 > m);
    }

    #[test]
    fn r_tilde_examples() {
        let rt = r_tilde(0.02, 0.088_388, 0.9712, 0.5, 1.5);
        assert!((rt - 0.04518).abs() < 1e-4);
        assert_eq!(r_tilde(0.0, 0.088_388, 0.9712, 0.5, 1.5), 0.0);
        assert_eq!(r_tilde(1e9, 0.088_388, 0.9712, 0.5, 1.5), 0.088_388);
    }

    #[test]
    fn threshold_meets_target() {
        let inst = catalog::instance("quadratic-constant", 0.01).unwrap();
        let thr = nonexistence_threshold(&inst, 1.0, 0.05).unwrap();
        let target = 0.5 * PI * PI / 4.0 + 0.25 + 1.0;
        assert_relative_eq!(thr.target, target, max_relative = 1e-15);
        // For q = 3/2, p = 3: C_Lambda = Lambda^{2/3} (2^{1/3} + 2^{-2/3}).
        let cap = (target / (2f64.powf(1.0 / 3.0) + 2f64.powf(-2.0 / 3.0))).powf(1.5);
        assert_relative_eq!(thr.lambda0 * thr.a_tilde_r, cap, max_relative = 1e-12);
        assert!(nonexistence_threshold(&inst, 1.0, 0.0).is_ok());
    }

    #[test]
    fn report_invariants() {
        let inst = catalog::instance(catalog::DEFAULT, 0.005).unwrap();
        let rep = ConstantsReport::compute(&inst, 5.0, &ConstantsSettings::default()).unwrap();
        assert!(0.0 < rep.r && rep.r < rep.delta1);
        assert!(rep.lambda_star > 0.0);
        assert!(rep.rho1 > 0.0 && rep.k_star.is_some());
        assert!(rep.r_tilde <= rep.r);
        assert!(rep.nonexistence_threshold_ok);
        assert_relative_eq!(rep.c1, 7.0 / 3.0, max_relative = 1e-10);
    }
}
