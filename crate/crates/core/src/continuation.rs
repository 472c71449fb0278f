//! Continuation in `k` (removing the regularization), `n` (growing the
//! domain) and `lambda` (parameter sweeps).

use serde::Serialize;

use crate::basis::{build_basis_auto, default_quadrature_nodes, euclid, EvenBasis};
use crate::constants::{self, CertificateReport, ConstantsReport, ConstantsSettings};
use crate::error::{Error, Result};
use crate::galerkin::{solve_in_ball, GalerkinSolution, GalerkinSystem, SolveOptions};
use crate::par;
use crate::problem::ProblemInstance;
use crate::strauss::StraussApproximant;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOptions {
    /// Basis size per unit half width: `M = ceil(m_per_unit * n)`.
    pub m_per_unit: f64,
    pub n_schedule: Vec<f64>,
    /// The `k` schedule starts at `k_start_factor * k*` and doubles up to `k_cap`.
    pub k_start_factor: u64,
    pub k_cap: u64,
    /// First `k` when `lambda >= Lambda*` (no `k*` available).
    pub k_floor: u64,
    pub drift_tol: f64,
    pub gap_tol: f64,
    pub agreement_tol: f64,
    pub tail_tol: f64,
    pub certificate_samples: usize,
    pub seed: u64,
    pub constants: ConstantsSettings,
    pub solve: SolveOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            m_per_unit: 4.0,
            n_schedule: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            k_start_factor: 1,
            k_cap: 1 << 40,
            k_floor: 1024,
            drift_tol: 1e-8,
            gap_tol: 1e-6,
            agreement_tol: 1e-6,
            tail_tol: 1e-6,
            certificate_samples: 200,
            seed: 0x5eed,
            constants: ConstantsSettings::default(),
            solve: SolveOptions::default(),
        }
    }
}

impl ContinuationOptions {
    pub fn basis_size(&self, n: f64) -> usize {
        (self.m_per_unit * n).ceil().max(1.0) as usize
    }
}

/// One level of the `k` continuation.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct KLevel {
    pub k: u64,
    /// `||xi_k - xi_{k_prev}||` (infinite at the first level).
    pub drift: f64,
    /// `sup |f_k(|u'|) - g(|u'|)|` on the output grid.
    pub fk_gap: f64,
    pub residual: f64,
    pub norm: f64,
}

/// Limit in `k` of the regularized problem at fixed `(n, M)`.
#[derive(Debug, Clone, Serialize)]
pub struct PnSolution {
    pub solution: GalerkinSolution,
    pub levels: Vec<KLevel>,
    pub certificate: Option<CertificateReport>,
    pub k_star: Option<u64>,
    pub radius: f64,
}

fn fk_gap(approx: &StraussApproximant, du: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &d in du {
        let s = d.abs();
        worst = worst.max((approx.eval(s)? - approx.g().eval(s)).abs());
    }
    Ok(worst)
}

/// Solves the regularized problem along `k_start, 2 k_start, ...` until the
/// coefficient drift and the `f_k` gap both fall below tolerance.
///
/// With `certify`, the sphere sign condition is sampled at the first level.
#[allow(clippy::too_many_arguments)]
pub fn solve_pn(
    inst: &ProblemInstance,
    basis: &EvenBasis,
    k_start: u64,
    radius: f64,
    warm_start: Option<Vec<f64>>,
    certify: bool,
    opts: &ContinuationOptions,
) -> Result<PnSolution> {
    let mut levels: Vec<KLevel> = Vec::new();
    let mut certificate = None;
    let mut prev: Option<Vec<f64>> = warm_start;
    let mut k = k_start.max(1);
    let mut first = true;
    loop {
        let approx = StraussApproximant::new(inst.g.clone(), k)?;
        let sys = GalerkinSystem::new(inst, basis, &approx);
        if certify && first {
            certificate = Some(constants::sphere_sign_certificate(&sys, radius, opts.certificate_samples, opts.seed)?);
        }
        let solve = SolveOptions { warm_start: prev.clone(), ..opts.solve.clone() };
        let mut sol = solve_in_ball(&sys, radius, &solve)?;
        let drift = if first {
            f64::INFINITY
        } else {
            let p = prev.as_deref().unwrap_or(&[]);
            euclid(&sol.xi().iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        let gap = fk_gap(&approx, &sol.du)?;
        levels.push(KLevel { k, drift, fk_gap: gap, residual: sol.residual, norm: sol.norm() });
        prev = Some(sol.xi().to_vec());
        if drift <= opts.drift_tol && gap <= opts.gap_tol {
            sol.certificate = certificate.as_ref().map(|c| c.passed);
            return Ok(PnSolution { solution: sol, levels, certificate, k_star: None, radius });
        }
        first = false;
        match k.checked_mul(2) {
            Some(next) if next <= opts.k_cap => k = next,
            _ => {
                return Err(Error::KContinuationStalled { levels: levels.len(), last_drift: drift, last_gap: gap });
            }
        }
    }
}

/// First `k` of the schedule and whether it is certified; `k*` beyond the cap
/// falls back to the uncertified start `k_floor`.
pub fn schedule_start(report: &ConstantsReport, opts: &ContinuationOptions) -> (u64, bool) {
    match report.k_star.map(|k| k.saturating_mul(opts.k_start_factor.max(1))) {
        Some(k) if k <= opts.k_cap => (k, true),
        _ => (opts.k_floor, false),
    }
}

/// Solves the problem on `(-n, n)` at the configured `M` with the default schedule.
pub fn solve_at(
    inst: &ProblemInstance,
    n: f64,
    warm: Option<Vec<f64>>,
    opts: &ContinuationOptions,
) -> Result<(PnSolution, ConstantsReport)> {
    let report = ConstantsReport::compute(inst, n, &opts.constants)?;
    let m = opts.basis_size(n);
    let basis = build_basis_auto(n, m, default_quadrature_nodes(n, m))?;
    let (k0, certified) = schedule_start(&report, opts);
    let mut pn = solve_pn(inst, &basis, k0, report.r, warm, certified, opts)?;
    pn.k_star = report.k_star;
    Ok((pn, report))
}

/// Summary of one `n` level.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LevelSummary {
    pub n: f64,
    pub m: usize,
    pub quadrature_nodes: usize,
    pub k_star: Option<u64>,
    pub k_final: u64,
    pub forcing: f64,
    pub norm_w12: f64,
    pub sup_norm: f64,
    pub residual: f64,
    pub certificate: Option<bool>,
    /// Agreement with the previous level on `[-(n_prev - 1), n_prev - 1]`.
    pub agreement: Option<f64>,
    pub tail_sup: f64,
    pub k_levels: Vec<KLevel>,
}

/// The numerical homoclinic: the last `n` level, with the whole level history.
#[derive(Debug, Clone, Serialize)]
pub struct HomoclinicSolution {
    pub lambda: f64,
    pub n_final: f64,
    pub levels: Vec<LevelSummary>,
    #[serde(skip)]
    pub solutions: Vec<GalerkinSolution>,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub tail_sup: f64,
    pub agreement: f64,
    pub constants: ConstantsReport,
}

impl HomoclinicSolution {
    pub fn final_solution(&self) -> &GalerkinSolution {
        self.solutions.last().expect("at least one level")
    }

    pub fn norm(&self) -> f64 {
        self.final_solution().norm()
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// `sup_{|t| >= n/2} |u(t)|`.
pub fn tail_sup(sol: &GalerkinSolution) -> f64 {
    sol.grid.iter().zip(&sol.u).filter(|(t, _)| t.abs() >= 0.5 * sol.n).fold(0.0, |a, (_, u)| a.max(u.abs()))
}

/// `sup |u_new(t) - u_prev(t)|` over the previous grid restricted to `|t| <= n_prev - 1`.
pub fn agreement(new: &GalerkinSolution, new_basis: &EvenBasis, prev: &GalerkinSolution) -> f64 {
    let bound = prev.n - 1.0;
    prev.grid
        .iter()
        .zip(&prev.u)
        .filter(|(t, _)| t.abs() <= bound)
        .map(|(&t, &u)| (new_basis.synthesize_point(new.xi(), t).0 - u).abs())
        .fold(0.0, f64::max)
}

/// Runs [`solve_pn`] on the `n` schedule, warm-starting each level by
/// projecting the previous one (extended by zero), until consecutive levels
/// agree and the tail has decayed.
pub fn solve_homoclinic(inst: &ProblemInstance, opts: &ContinuationOptions) -> Result<HomoclinicSolution> {
    if opts.n_schedule.is_empty() {
        return Err(Error::InvalidParameter("empty n schedule".into()));
    }
    let mut levels: Vec<LevelSummary> = Vec::new();
    let mut solutions: Vec<GalerkinSolution> = Vec::new();
    let mut prev_basis: Option<EvenBasis> = None;
    for &n in &opts.n_schedule {
        let report = ConstantsReport::compute(inst, n, &opts.constants)?;
        let m = opts.basis_size(n);
        let basis = build_basis_auto(n, m, default_quadrature_nodes(n, m))?;
        let warm = match (&prev_basis, solutions.last()) {
            (Some(pb), Some(ps)) => {
                let (u, du) = pb.synthesize_nodes(ps.xi());
                Some(basis.project_samples(pb.rule().nodes(), pb.rule().weights(), &u, &du))
            }
            _ => None,
        };
        let (k0, certified) = schedule_start(&report, opts);
        let pn = match solve_pn(inst, &basis, k0, report.r, warm, certified, opts) {
            Ok(pn) => pn,
            Err(e @ (Error::SolverExhausted { .. } | Error::KContinuationStalled { .. })) if !certified => {
                return Err(Error::NoHomoclinic { lambda: inst.lambda, reason: format!("at n = {n}: {e}") });
            }
            Err(e) => return Err(e),
        };
        let sol = pn.solution;
        let agree = match (solutions.last(), levels.is_empty()) {
            (Some(prev), false) => Some(agreement(&sol, &basis, prev)),
            _ => None,
        };
        let tail = tail_sup(&sol);
        levels.push(LevelSummary {
            n,
            m,
            quadrature_nodes: basis.rule().len(),
            k_star: report.k_star,
            k_final: sol.k,
            forcing: sol.forcing,
            norm_w12: sol.norm(),
            sup_norm: sol.sup_norm(),
            residual: sol.residual,
            certificate: pn.certificate.as_ref().map(|c| c.passed),
            agreement: agree,
            tail_sup: tail,
            k_levels: pn.levels,
        });
        solutions.push(sol);
        prev_basis = Some(basis);
        if let Some(a) = agree {
            if a <= opts.agreement_tol && tail <= opts.tail_tol {
                let last = solutions.last().expect("pushed above");
                return Ok(HomoclinicSolution {
                    lambda: inst.lambda,
                    n_final: n,
                    grid: last.grid.clone(),
                    u: last.u.clone(),
                    du: last.du.clone(),
                    tail_sup: tail,
                    agreement: a,
                    levels,
                    solutions,
                    constants: report,
                });
            }
        }
    }
    let last = levels.last().expect("nonempty schedule");
    Err(Error::NoHomoclinic {
        lambda: inst.lambda,
        reason: format!(
            "schedule exhausted at n = {}: tail {:.3e} (tol {:.1e}), agreement {} (tol {:.1e})",
            last.n,
            last.tail_sup,
            opts.tail_tol,
            last.agreement.map_or("n/a".to_string(), |a| format!("{a:.3e}")),
            opts.agreement_tol
        ),
    })
}

/// One row of a `lambda` sweep.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub norm_w12: f64,
    pub sup_norm: f64,
    /// `lambda * 2 C2 r^q / gamma`.
    pub norm_sq_bound: f64,
    /// `C r~(lambda)`.
    pub sup_bound: f64,
    pub n_final: f64,
}

/// Slack allowed on the squared-norm bound.
pub const SWEEP_SLACK: f64 = 1e-8;

/// Solves the homoclinic problem at each `lambda`; rows are independent.
pub fn lambda_sweep(inst: &ProblemInstance, lambdas: &[f64], opts: &ContinuationOptions) -> Result<Vec<SweepRow>> {
    let rows: Vec<Result<SweepRow>> = par::map_slice(lambdas, |&lambda| {
        let row_inst = inst.with_lambda(lambda);
        let n_last = *opts.n_schedule.last().unwrap_or(&0.0);
        let report = ConstantsReport::compute(&row_inst, n_last.max(1.0), &opts.constants)?;
        let norm_sq_bound = lambda * report.asymptotic_constant;
        let sup_bound = report.c * report.r_tilde;
        if lambda == 0.0 {
            return Ok(SweepRow { lambda, norm_w12: 0.0, sup_norm: 0.0, norm_sq_bound, sup_bound, n_final: 0.0 });
        }
        let sol = solve_homoclinic(&row_inst, opts)?;
        let norm = sol.norm();
        if norm * norm > norm_sq_bound + SWEEP_SLACK {
            return Err(Error::AsymptoticBoundBreach { lambda, norm_sq: norm * norm, bound: norm_sq_bound });
        }
        Ok(SweepRow {
            lambda,
            norm_w12: norm,
            sup_norm: sol.sup_norm(),
            norm_sq_bound,
            sup_bound,
            n_final: sol.n_final,
        })
    });
    rows.into_iter().collect()
}
