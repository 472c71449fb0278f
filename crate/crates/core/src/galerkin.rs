//! The Galerkin system of the regularized problem on `(-n, n)`:
//!
//! ```text
//! F_j(xi) = int A(u) u' e_j' + int u e_j - int lambda a1 |u|^{q-1} e_j
//!         - int |u|^{p-1} e_j - int f_k(|u'|) e_j - int (psi/k) e_j,
//! ```
//!
//! with `u = sum xi_l e_l` and `psi = 1`. An optional source `h(t)` is
//! subtracted as well; it is zero except in manufactured-solution tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{euclid, EvenBasis, GalerkinCoeffs};
use crate::error::{Error, Result};
use crate::newton::{newton, NewtonOptions, NewtonRun};
use crate::par;
use crate::problem::{ProblemInstance, ScalarFn};
use crate::quadrature::CompositeRule;
use crate::strauss::StraussApproximant;

/// The map `xi -> F(xi)` for fixed `(instance, basis, f_k, forcing)`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem<'a> {
    pub inst: &'a ProblemInstance,
    pub basis: &'a EvenBasis,
    pub approx: &'a StraussApproximant,
    /// Constant forcing `psi / k`.
    pub forcing: f64,
    pub source: Option<ScalarFn>,
    a1_nodes: Vec<f64>,
    source_nodes: Vec<f64>,
}

/// Pointwise integrand data of the weak form.
struct Pointwise {
    flux: f64,
    mass: f64,
}

impl<'a> GalerkinSystem<'a> {
    /// The regularized system with forcing `1/k`.
    pub fn new(inst: &'a ProblemInstance, basis: &'a EvenBasis, approx: &'a StraussApproximant) -> Self {
        Self::with_forcing(inst, basis, approx, 1.0 / approx.k() as f64)
    }

    pub fn with_forcing(
        inst: &'a ProblemInstance,
        basis: &'a EvenBasis,
        approx: &'a StraussApproximant,
        forcing: f64,
    ) -> Self {
        let a1_nodes = basis.rule().nodes().iter().map(|&t| inst.weight.eval(t)).collect();
        let source_nodes = vec![0.0; basis.rule().len()];
        Self { inst, basis, approx, forcing, source: None, a1_nodes, source_nodes }
    }

    /// Adds a source term `h(t)` to the right-hand side.
    pub fn with_source(mut self, source: ScalarFn) -> Self {
        self.source_nodes = self.basis.rule().nodes().iter().map(|&t| source.eval(t)).collect();
        self.source = Some(source);
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn rhs(&self, a1: f64, h: f64, u: f64, du: f64, t: f64) -> Result<f64> {
        right_hand_side(self.inst, self.approx, self.forcing + h, a1, u, du, t)
    }

    fn pointwise(&self, xi: &[f64]) -> Result<Vec<Pointwise>> {
        let (u, du) = self.basis.synthesize_nodes(xi);
        let nodes = self.basis.rule().nodes();
        let out: Vec<Result<Pointwise>> = par::map_range(nodes.len(), |i| {
            let t = nodes[i];
            let a = self.inst.diffusion.eval(u[i]);
            if !a.is_finite() {
                return Err(Error::Assembly { term: "A(u)", at: t });
            }
            let rhs = self.rhs(self.a1_nodes[i], self.source_nodes[i], u[i], du[i], t)?;
            Ok(Pointwise { flux: a * du[i], mass: u[i] - rhs })
        });
        out.into_iter().collect()
    }

    /// `F(xi)`.
    pub fn assemble(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "coefficient vector has length {}, basis has {}",
                xi.len(),
                self.dim()
            )));
        }
        let pts = self.pointwise(xi)?;
        let w = self.basis.rule().weights();
        Ok(par::map_range(self.dim(), |j| {
            let (e, de) = (self.basis.e(j), self.basis.de(j));
            (0..w.len()).map(|i| w[i] * (pts[i].flux * de[i] + pts[i].mass * e[i])).sum()
        }))
    }

    /// `<F(xi), xi>`.
    pub fn pairing(&self, xi: &[f64]) -> Result<f64> {
        Ok(self.assemble(xi)?.iter().zip(xi).map(|(f, x)| f * x).sum())
    }

    /// Weak-form defect against a test function given by its values and
    /// derivatives on `rule`, with `u` synthesized pointwise.
    fn weak_defect(&self, xi: &[f64], rule: &CompositeRule, v: &[f64], dv: &[f64]) -> Result<f64> {
        let nodes = rule.nodes();
        let vals: Vec<Result<f64>> = par::map_range(nodes.len(), |i| {
            let t = nodes[i];
            let (u, du, _) = self.basis.synthesize_point(xi, t);
            let h = self.source.as_ref().map_or(0.0, |s| s.eval(t));
            let rhs = self.rhs(self.inst.weight.eval(t), h, u, du, t)?;
            Ok(self.inst.diffusion.eval(u) * du * dv[i] + (u - rhs) * v[i])
        });
        let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
        Ok(rule.sum(&vals))
    }
}

/// A root of the Galerkin system with sampled `(u, u')`.
#[derive(Debug, Clone, Serialize)]
pub struct GalerkinSolution {
    pub coeffs: GalerkinCoeffs,
    pub n: f64,
    pub m: usize,
    pub k: u64,
    pub lambda: f64,
    pub forcing: f64,
    /// `||F(xi)||`.
    pub residual: f64,
    pub newton_iterations: usize,
    /// Whether the sphere sign condition was certified for this solve.
    pub certificate: Option<bool>,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl GalerkinSolution {
    pub fn xi(&self) -> &[f64] {
        &self.coeffs.xi
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm_w12
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Output grid spacing.
pub const GRID_STEP: f64 = 1.0 / 32.0;

/// Symmetric grid on `[-n, n]` with spacing at most `step`; `grid[i] == -grid[len-1-i]` exactly.
pub fn symmetric_grid(n: f64, step: f64) -> Vec<f64> {
    let intervals = 2 * ((n / step).ceil() as usize).max(1);
    let len = intervals + 1;
    let mut grid = vec![0.0; len];
    let half = intervals / 2;
    for i in 0..half {
        let t = -n + 2.0 * n * i as f64 / intervals as f64;
        grid[i] = t;
        grid[len - 1 - i] = -t;
    }
    grid[half] = 0.0;
    grid
}

/// Solver settings for [`solve_in_ball`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub newton: NewtonOptions,
    pub warm_start: Option<Vec<f64>>,
    /// Number of seeded fallback directions (started at radius `r/4`).
    pub directions: usize,
    pub seed: u64,
    /// Run every start and keep the largest root instead of stopping at the first.
    pub exhaustive: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), warm_start: None, directions: 8, seed: 0x5eed, exhaustive: false }
    }
}

/// Unit vectors with standard normal entries, drawn from a seeded stream.
pub fn random_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let norm = euclid(&v);
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

fn starts(dim: usize, radius: f64, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if let Some(w) = &opts.warm_start {
        out.push(w.clone());
    }
    out.push(vec![0.0; dim]);
    let mut e1 = vec![0.0; dim];
    e1[0] = 0.25 * radius;
    out.push(e1);
    for d in random_directions(dim, opts.directions, opts.seed) {
        out.push(d.into_iter().map(|x| 0.25 * radius * x).collect());
    }
    out
}

/// Converged Newton runs from every start, in start order.
pub fn find_roots(sys: &GalerkinSystem, radius: f64, opts: &SolveOptions) -> Result<Vec<NewtonRun>> {
    let f = |x: &[f64]| sys.assemble(x);
    let mut roots = Vec::new();
    for s in starts(sys.dim(), radius, opts) {
        let run = newton(&f, &s, radius, &opts.newton)?;
        if run.converged {
            roots.push(run);
        }
    }
    Ok(roots)
}

/// Finds a root of `F` in the closed ball of radius `radius`.
///
/// Starts are tried in order (warm start, origin, `r/4 e_1`, seeded
/// directions). By default the first converged start wins; with
/// `exhaustive` the converged root of largest norm is returned.
pub fn solve_in_ball(sys: &GalerkinSystem, radius: f64, opts: &SolveOptions) -> Result<GalerkinSolution> {
    let f = |x: &[f64]| sys.assemble(x);
    let all = starts(sys.dim(), radius, opts);
    let mut best: Option<NewtonRun> = None;
    let mut best_residual = f64::INFINITY;
    for s in &all {
        let run = newton(&f, s, radius, &opts.newton)?;
        best_residual = best_residual.min(run.residual);
        if !run.converged {
            continue;
        }
        let better = best.as_ref().is_none_or(|b| euclid(&run.x) > euclid(&b.x));
        if better {
            best = Some(run);
        }
        if !opts.exhaustive {
            break;
        }
    }
    let run = best.ok_or(Error::SolverExhausted { starts: all.len(), best_residual })?;
    Ok(package(sys, run))
}

/// Wraps a converged coefficient vector into a [`GalerkinSolution`].
pub fn package(sys: &GalerkinSystem, run: NewtonRun) -> GalerkinSolution {
    let grid = symmetric_grid(sys.basis.n(), GRID_STEP);
    let (u, du) = sys.basis.synthesize(&run.x, &grid);
    GalerkinSolution {
        coeffs: GalerkinCoeffs::new(run.x),
        n: sys.basis.n(),
        m: sys.dim(),
        k: sys.approx.k(),
        lambda: sys.inst.lambda,
        forcing: sys.forcing,
        residual: run.residual,
        newton_iterations: run.iterations,
        certificate: None,
        grid,
        u,
        du,
    }
}

/// Number of random probes used by [`weak_residual`].
pub const RANDOM_PROBES: usize = 10;

/// Largest weak-form defect over the first `probe_count` basis elements and
/// [`RANDOM_PROBES`] random unit-norm even syntheses.
///
/// Defects are evaluated on a quadrature rule twice as fine as the basis rule,
/// with `u` and the probes synthesized pointwise.
pub fn weak_residual(sys: &GalerkinSystem, xi: &[f64], probe_count: usize, seed: u64) -> Result<f64> {
    let basis = sys.basis;
    let rule = CompositeRule::symmetric(basis.n(), 2 * basis.rule().len())?;
    let m = basis.dim();
    let mut probes: Vec<Vec<f64>> = (0..probe_count.min(m))
        .map(|l| {
            let mut c = vec![0.0; m];
            c[l] = 1.0;
            c
        })
        .collect();
    probes.extend(random_directions(m, RANDOM_PROBES, seed));
    let mut worst = 0.0f64;
    for c in probes {
        let (v, dv) = basis.synthesize(&c, rule.nodes());
        worst = worst.max(sys.weak_defect(xi, &rule, &v, &dv)?.abs());
    }
    Ok(worst)
}

/// Right-hand side `lambda a1 |u|^{q-1} + |u|^{p-1} + f_k(|u'|) + forcing`.
pub fn right_hand_side(
    inst: &ProblemInstance,
    approx: &StraussApproximant,
    forcing: f64,
    a1: f64,
    u: f64,
    du: f64,
    t: f64,
) -> Result<f64> {
    let fk = approx.eval(du.abs())?;
    let sub = inst.lambda * a1 * u.abs().powf(inst.q - 1.0);
    let pow = u.abs().powf(inst.p - 1.0);
    for (term, v) in [("lambda a1 |u|^(q-1)", sub), ("|u|^(p-1)", pow), ("f_k(|u'|)", fk)] {
        if !v.is_finite() {
            return Err(Error::Assembly { term, at: t });
        }
    }
    Ok(sub + pow + fk + forcing)
}

/// `u''` from the strong form:
/// `(u - lambda a1 |u|^{q-1} - |u|^{p-1} - f_k(|u'|) - forcing - A'(u) u'^2) / A(u)`.
pub fn second_derivative(
    inst: &ProblemInstance,
    approx: &StraussApproximant,
    forcing: f64,
    t: f64,
    u: f64,
    du: f64,
) -> Result<f64> {
    let a = inst.diffusion.eval(u);
    if a < 0.5 * inst.gamma {
        return Err(Error::HypothesisBreach { at: t, value: a });
    }
    let rhs = right_hand_side(inst, approx, forcing, inst.weight.eval(t), u, du, t)?;
    Ok((u - rhs - inst.diffusion.eval_derivative(u) * du * du) / a)
}

/// [`second_derivative`] for the system's forcing and source.
pub fn strong_second_derivative(sys: &GalerkinSystem, t: f64, u: f64, du: f64) -> Result<f64> {
    let h = sys.source.as_ref().map_or(0.0, |s| s.eval(t));
    second_derivative(sys.inst, sys.approx, sys.forcing + h, t, u, du)
}

/// `sup |u''_synth - u''_strong|` over `grid`.
pub fn strong_residual(sys: &GalerkinSystem, xi: &[f64], grid: &[f64]) -> Result<f64> {
    let vals: Vec<Result<f64>> = par::map_slice(grid, |&t| {
        let (u, du, d2u) = sys.basis.synthesize_point(xi, t);
        Ok((d2u - strong_second_derivative(sys, t, u, du)?).abs())
    });
    let mut worst = 0.0f64;
    for v in vals {
        worst = worst.max(v?);
    }
    Ok(worst)
}

/// Interior grid `{t in grid : |t| <= n - margin}`.
pub fn interior(grid: &[f64], n: f64, margin: f64) -> Vec<f64> {
    grid.iter().copied().filter(|t| t.abs() <= n - margin).collect()
}

/// Result of the Lieberman growth-envelope check `|B(x, u, u')| <= L (1 + |u'|)^2`.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct EnvelopeCheck {
    pub l: f64,
    /// Largest `|B| / (L (1 + |u'|)^2)` on the grid.
    pub worst_ratio: f64,
    pub worst_at: f64,
    /// `sup |u|`, to be compared with `C r`.
    pub sup_u: f64,
    pub passed: bool,
}

/// `B(x, z, p) = z - (lambda a1(x) |z|^{q-1} + |z|^{p-1} + f_k(|p|) + 1/k)` along the solution graph.
pub fn lieberman_envelope(sys: &GalerkinSystem, sol: &GalerkinSolution, l: f64) -> Result<EnvelopeCheck> {
    let mut worst_ratio = 0.0f64;
    let mut worst_at = 0.0;
    for ((&t, &u), &du) in sol.grid.iter().zip(&sol.u).zip(&sol.du) {
        let b = u - sys.rhs(sys.inst.weight.eval(t), 0.0, u, du, t)?;
        let ratio = b.abs() / (l * (1.0 + du.abs()).powi(2));
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_at = t;
        }
    }
    Ok(EnvelopeCheck { l, worst_ratio, worst_at, sup_u: sol.sup_norm(), passed: worst_ratio <= 1.0 })
}
