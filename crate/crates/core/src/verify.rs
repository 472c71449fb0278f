//! Sampled checks of the qualitative conclusions on a computed solution:
//! evenness, positivity, the lower bounds at convex points and under the
//! `tau phi_1` barrier, the comparison principle, and decay.

use serde::Serialize;

use crate::constants::{self, first_eigenfunction, first_eigenvalue, INFIMUM_POINTS};
use crate::continuation::HomoclinicSolution;
use crate::error::Result;
use crate::galerkin::{self, GalerkinSystem};
use crate::problem::{Diffusion, ProblemInstance, ScalarFn};
use crate::strauss::StraussApproximant;

/// Outcome of one check. Skipped checks pass vacuously and carry a reason.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub skipped: Option<String>,
    /// Worst sampled value of the checked quantity.
    pub witness_value: f64,
    pub witness_at: Option<f64>,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, passed: bool, witness_value: f64, witness_at: Option<f64>, tolerance: f64) -> Self {
        Self { name: name.into(), passed, skipped: None, witness_value, witness_at, tolerance }
    }

    fn skip(name: &str, reason: &str) -> Self {
        Self {
            name: name.into(),
            passed: true,
            skipped: Some(reason.into()),
            witness_value: f64::NAN,
            witness_at: None,
            tolerance: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const EVENNESS_TOL: f64 = 1e-12;
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Evenness, strict interior positivity and boundary values on a grid
/// symmetric about 0 (`grid[i] == -grid[len-1-i]`).
pub fn check_even_positive(grid: &[f64], u: &[f64]) -> Vec<CheckResult> {
    let len = u.len();
    let mut even = (0.0f64, None);
    for i in 0..len / 2 {
        let d = (u[i] - u[len - 1 - i]).abs();
        if d > even.0 {
            even = (d, Some(grid[i]));
        }
    }
    let mut min = (f64::INFINITY, None);
    for i in 1..len.saturating_sub(1) {
        if u[i] < min.0 {
            min = (u[i], Some(grid[i]));
        }
    }
    let edge = u[0].abs().max(u[len - 1].abs());
    vec![
        CheckResult::new("evenness", even.0 <= EVENNESS_TOL, even.0, even.1, EVENNESS_TOL),
        CheckResult::new("positivity", min.0 > 0.0, min.0, min.1, 0.0),
        CheckResult::new("boundary values", edge <= BOUNDARY_TOL, edge, Some(grid[len - 1]), BOUNDARY_TOL),
    ]
}

/// Profile data needed by the pointwise checks.
#[derive(Debug, Clone, Copy)]
pub struct Profile<'a> {
    pub n: f64,
    pub k: u64,
    pub forcing: f64,
    pub grid: &'a [f64],
    pub u: &'a [f64],
    pub du: &'a [f64],
}

/// `u(x) > (lambda a~)^{1/(2-q)} - tol` wherever the strong-form `u''(x) >= 0`
/// and `|x| <= n - margin`.
pub fn check_interior_minimum_bound(
    inst: &ProblemInstance,
    prof: &Profile,
    margin: f64,
    tol: f64,
) -> Result<CheckResult> {
    let name = "interior minimum bound";
    let a_tilde = inst.weight.infimum(prof.n, INFIMUM_POINTS);
    let bound = (inst.lambda * a_tilde).powf(1.0 / (2.0 - inst.q));
    let approx = StraussApproximant::new(inst.g.clone(), prof.k)?;
    let mut worst = (f64::INFINITY, None);
    let mut convex_points = 0usize;
    for ((&t, &u), &du) in prof.grid.iter().zip(prof.u).zip(prof.du) {
        if t.abs() > prof.n - margin {
            continue;
        }
        let d2u = galerkin::second_derivative(inst, &approx, prof.forcing, t, u, du)?;
        if d2u >= 0.0 {
            convex_points += 1;
            let slack = u - bound;
            if slack < worst.0 {
                worst = (slack, Some(t));
            }
        }
    }
    if convex_points == 0 {
        return Ok(CheckResult::skip(name, "no grid point with u'' >= 0"));
    }
    Ok(CheckResult::new(name, worst.0 > -tol, worst.0, worst.1, tol))
}

/// Whether `u' >= 0` at every grid point of `(-n, 0)`.
pub fn is_case_one(grid: &[f64], du: &[f64], n: f64) -> bool {
    grid.iter().zip(du).filter(|(t, _)| **t > -n && **t < 0.0).all(|(_, d)| *d >= 0.0)
}

/// `u(t) >= tau phi_1(t) - tol` on the grid, when `u' >= 0` on `(-n, 0)`.
pub fn check_subsolution_barrier(grid: &[f64], u: &[f64], du: &[f64], n: f64, tau: f64, tol: f64) -> CheckResult {
    let name = "subsolution barrier";
    if !is_case_one(grid, du, n) {
        return CheckResult::skip(name, "Case 2 geometry");
    }
    let mut worst = (f64::INFINITY, None);
    for (&t, &v) in grid.iter().zip(u) {
        let slack = v - tau * first_eigenfunction(n, t);
        if slack < worst.0 {
            worst = (slack, Some(t));
        }
    }
    CheckResult::new(name, worst.0 >= -tol, worst.0, worst.1, tol)
}

/// A sampled even function with `v`, `v'` and `v''` on a common grid.
#[derive(Debug, Clone, Copy)]
pub struct Sampled<'a> {
    pub v: &'a [f64],
    pub dv: &'a [f64],
    pub d2v: &'a [f64],
}

/// Relative tolerance of the comparison premises.
pub const PREMISE_REL_TOL: f64 = 1e-9;

/// Premises 0 to 5 of the comparison principle for `v <= w` on `(-rho, rho)`,
/// then the conclusion when every premise holds.
///
/// The grid must span `[-rho, rho]`; its endpoints are `+-rho`.
pub fn check_comparison_premises(
    diffusion: &Diffusion,
    grid: &[f64],
    v: Sampled,
    w: Sampled,
    sigma: &ScalarFn,
) -> Vec<CheckResult> {
    let len = grid.len();
    let interior = 1..len.saturating_sub(1);
    let mut out = Vec::new();

    // 0: sigma(s)/s strictly decreasing on the range of v and w.
    let smax = v.v.iter().chain(w.v).fold(0.0f64, |a, b| a.max(*b)).max(1e-300);
    let ratios: Vec<(f64, f64)> = (1..=1000)
        .map(|i| {
            let s = smax * i as f64 / 1000.0;
            (s, sigma.eval(s) / s)
        })
        .collect();
    let mono = ratios.windows(2).map(|p| (p[0].1 - p[1].1, p[1].0)).fold((f64::INFINITY, None), |a, (d, s)| {
        if d < a.0 {
            (d, Some(s))
        } else {
            a
        }
    });
    out.push(CheckResult::new("premise 0: sigma(s)/s strictly decreasing", mono.0 > 0.0, mono.0, mono.1, 0.0));

    // 1: (A(w)w')' - w + sigma(w) <= 0 <= (A(v)v')' - v + sigma(v).
    let op = |f: &Sampled, i: usize| {
        let (x, dx, d2x) = (f.v[i], f.dv[i], f.d2v[i]);
        let terms = [diffusion.eval_derivative(x) * dx * dx, diffusion.eval(x) * d2x, -x, sigma.eval(x.max(0.0))];
        let scale: f64 = terms.iter().map(|t| t.abs()).sum();
        (terms.iter().sum::<f64>(), scale)
    };
    let mut p1 = (f64::INFINITY, None);
    for i in interior.clone() {
        let (lw, sw) = op(&w, i);
        let (lv, sv) = op(&v, i);
        // Margins normalized by the size of the terms; negative means violated.
        for m in [(-lw + PREMISE_REL_TOL * sw) / sw.max(1e-300), (lv + PREMISE_REL_TOL * sv) / sv.max(1e-300)] {
            if m < p1.0 {
                p1 = (m, Some(grid[i]));
            }
        }
    }
    out.push(CheckResult::new("premise 1: super/sub-solution inequalities", p1.0 >= 0.0, p1.0, p1.1, PREMISE_REL_TOL));

    // 2: v, w >= 0 inside and v(rho) <= w(rho).
    let mut p2 = (f64::INFINITY, None);
    for i in interior.clone() {
        let m = v.v[i].min(w.v[i]);
        if m < p2.0 {
            p2 = (m, Some(grid[i]));
        }
    }
    let end = w.v[len - 1] - v.v[len - 1];
    let edge_tol = PREMISE_REL_TOL * v.v[len - 1].abs().max(w.v[len - 1].abs()) + BOUNDARY_TOL;
    let p2_ok = p2.0 >= 0.0 && end >= -edge_tol;
    out.push(CheckResult::new("premise 2: nonnegativity and boundary order", p2_ok, p2.0.min(end), p2.1, edge_tol));

    // 3: zero sets have null measure: no two consecutive interior zeros.
    let mut p3 = (0.0, None);
    for i in interior.clone().skip(1) {
        if (v.v[i] == 0.0 && v.v[i - 1] == 0.0) || (w.v[i] == 0.0 && w.v[i - 1] == 0.0) {
            p3 = (1.0, Some(grid[i]));
            break;
        }
    }
    out.push(CheckResult::new("premise 3: null zero sets", p3.0 == 0.0, p3.0, p3.1, 0.0));

    // 4: v' w' >= 0.
    let mut p4 = (f64::INFINITY, None);
    for i in interior.clone() {
        let prod = v.dv[i] * w.dv[i];
        let scale = (v.dv[i] * w.dv[i]).abs();
        let m = if prod < 0.0 && scale <= f64::MIN_POSITIVE { 0.0 } else { prod };
        if m < p4.0 {
            p4 = (m, Some(grid[i]));
        }
    }
    out.push(CheckResult::new("premise 4: v' w' >= 0", p4.0 >= 0.0, p4.0, p4.1, 0.0));

    // 5: bounded derivatives.
    let sup = v.dv.iter().chain(w.dv).fold(0.0f64, |a, b| a.max(b.abs()));
    out.push(CheckResult::new("premise 5: bounded derivatives", sup.is_finite(), sup, None, 0.0));

    let name = "comparison conclusion v <= w";
    if out.iter().all(|c| c.passed) {
        let mut worst = (f64::INFINITY, None);
        for ((&t, &wv), &vv) in grid.iter().zip(w.v).zip(v.v).take(len) {
            let slack = wv - vv;
            if slack < worst.0 {
                worst = (slack, Some(t));
            }
        }
        let tol = BOUNDARY_TOL;
        out.push(CheckResult::new(name, worst.0 >= -tol, worst.0, worst.1, tol));
    } else {
        out.push(CheckResult::skip(name, "premises not satisfied"));
    }
    out
}

/// Slack allowed in the monotone-tail test, relative to `sup |u|`.
pub const DECAY_MONOTONE_REL_SLACK: f64 = 1e-12;

/// `sup_{|t| >= n/2} |u| <= tail_tol` and `|u|` nonincreasing beyond the last
/// interior critical point (right half of a symmetric grid).
pub fn check_decay(grid: &[f64], u: &[f64], du: &[f64], n: f64, tail_tol: f64) -> Vec<CheckResult> {
    let mut tail = (0.0f64, None);
    for (&t, &v) in grid.iter().zip(u) {
        if t.abs() >= 0.5 * n && v.abs() > tail.0 {
            tail = (v.abs(), Some(t));
        }
    }
    let mid = grid.len() / 2;
    let right = mid..grid.len() - 1;
    let last_critical = right.rev().find(|&i| du[i] == 0.0 || du[i] * du[i + 1] < 0.0).unwrap_or(mid);
    let sup = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let slack = DECAY_MONOTONE_REL_SLACK * sup;
    let mut mono = (f64::INFINITY, None);
    for i in last_critical..grid.len() - 1 {
        let m = u[i].abs() - u[i + 1].abs();
        if m < mono.0 {
            mono = (m, Some(grid[i + 1]));
        }
    }
    let mono_val = if mono.0.is_finite() { mono.0 } else { 0.0 };
    vec![
        CheckResult::new("tail decay", tail.0 <= tail_tol, tail.0, tail.1, tail_tol),
        CheckResult::new("monotone tail", mono_val >= -slack, mono_val, mono.1, slack),
    ]
}

/// Tolerances for [`verify_homoclinic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySettings {
    pub weak_residual_tol: f64,
    pub nonnegativity_tol: f64,
    pub agreement_tol: f64,
    pub tail_tol: f64,
    pub barrier_tol: f64,
    pub minimum_bound_tol: f64,
    /// Distance from `+-n` excluded from interior checks.
    pub margin: f64,
    pub probe_seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            weak_residual_tol: 1e-8,
            nonnegativity_tol: 1e-8,
            agreement_tol: 1e-6,
            tail_tol: 1e-6,
            barrier_tol: 1e-14,
            minimum_bound_tol: 0.0,
            margin: 1.0 / 32.0,
            probe_seed: 7,
        }
    }
}

/// Every applicable check on the final level of a homoclinic run.
pub fn verify_homoclinic(
    inst: &ProblemInstance,
    sol: &HomoclinicSolution,
    s: &VerifySettings,
) -> Result<VerificationReport> {
    let fin = sol.final_solution();
    let n = fin.n;
    let mut checks = check_even_positive(&fin.grid, &fin.u);

    let min_u = fin.u.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(CheckResult::new("nonnegativity", min_u >= -s.nonnegativity_tol, min_u, None, s.nonnegativity_tol));

    let basis = crate::basis::build_basis_auto(n, fin.m, crate::basis::default_quadrature_nodes(n, fin.m))?;
    let approx = StraussApproximant::new(inst.g.clone(), fin.k)?;
    let sys = GalerkinSystem::with_forcing(inst, &basis, &approx, fin.forcing);
    let weak = galerkin::weak_residual(&sys, fin.xi(), fin.m, s.probe_seed)?;
    checks.push(CheckResult::new("weak residual", weak <= s.weak_residual_tol, weak, None, s.weak_residual_tol));

    let c = &sol.constants;
    let mut worst_norm = (f64::NEG_INFINITY, None);
    for (lvl, g) in sol.levels.iter().zip(&sol.solutions) {
        let excess = g.norm() - c.r_tilde.min(c.r);
        if excess > worst_norm.0 {
            worst_norm = (excess, Some(lvl.n));
        }
    }
    checks.push(CheckResult::new("norm within r_tilde", worst_norm.0 <= 0.0, worst_norm.0, worst_norm.1, 0.0));

    let lieb = constants::lieberman(inst, n, c.r, c.c1, 10_001);
    let env = galerkin::lieberman_envelope(&sys, fin, lieb.l)?;
    let cr = constants::embedding_constant() * c.r;
    checks.push(CheckResult::new(
        "Lieberman growth envelope",
        env.passed && env.sup_u <= cr,
        env.worst_ratio,
        Some(env.worst_at),
        1.0,
    ));

    let prof = Profile { n, k: fin.k, forcing: fin.forcing, grid: &fin.grid, u: &fin.u, du: &fin.du };
    checks.push(check_interior_minimum_bound(inst, &prof, s.margin, s.minimum_bound_tol)?);

    let lambda1 = first_eigenvalue(n);
    let a_tilde = inst.weight.infimum(n, INFIMUM_POINTS);
    let tau = constants::barrier_scale(inst, a_tilde, lambda1)?;
    checks.push(check_subsolution_barrier(&fin.grid, &fin.u, &fin.du, n, tau, s.barrier_tol));

    // Comparison of tau phi_1 with the solution, sigma(s) = lambda a~ s^{q-1}.
    let d2u: Vec<f64> = fin
        .grid
        .iter()
        .zip(&fin.u)
        .zip(&fin.du)
        .map(|((&t, &u), &du)| galerkin::second_derivative(inst, &approx, fin.forcing, t, u, du))
        .collect::<Result<_>>()?;
    let w_scale = std::f64::consts::PI / (2.0 * n);
    let phi: Vec<f64> = fin.grid.iter().map(|&t| tau * first_eigenfunction(n, t)).collect();
    let dphi: Vec<f64> = fin.grid.iter().map(|&t| -tau * w_scale * (w_scale * t).sin()).collect();
    let d2phi: Vec<f64> = phi.iter().map(|p| -lambda1 * p).collect();
    let (lam, q) = (inst.lambda * a_tilde, inst.q);
    let sigma = ScalarFn::new("lambda a~ s^{q-1}", move |s: f64| lam * s.powf(q - 1.0));
    let v = Sampled { v: &phi, dv: &dphi, d2v: &d2phi };
    let w = Sampled { v: &fin.u, dv: &fin.du, d2v: &d2u };
    let comparison = check_comparison_premises(&inst.diffusion, &fin.grid, v, w, &sigma);
    // Failed premises make the comparison inapplicable rather than failed.
    let premises_hold = comparison.iter().filter(|c| c.name.starts_with("premise")).all(|c| c.passed);
    for mut c in comparison {
        if !premises_hold && c.name.starts_with("premise") && !c.passed {
            c.passed = true;
            c.skipped = Some("premise violated; comparison not applicable".into());
        }
        checks.push(c);
    }

    checks.push(CheckResult::new(
        "cross-level agreement",
        sol.agreement <= s.agreement_tol,
        sol.agreement,
        None,
        s.agreement_tol,
    ));
    checks.extend(check_decay(&fin.grid, &fin.u, &fin.du, n, s.tail_tol));
    Ok(VerificationReport { checks })
}
