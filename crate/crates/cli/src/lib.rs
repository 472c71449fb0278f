//! Command-line front end: reads a run configuration, dispatches one
//! subcommand, writes its JSON/CSV artifacts and a manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use homoclinic::constants::{self, ConstantsReport};
use homoclinic::continuation::{self, lambda_sweep, solve_homoclinic, ContinuationOptions, HomoclinicSolution};
use homoclinic::galerkin::{self, GalerkinSystem};
use homoclinic::problem::{validate_hypotheses, ProblemInstance};
use homoclinic::strauss::{self, StraussApproximant};
use homoclinic::verify::{self, VerificationReport, VerifySettings};
use homoclinic::{basis, par, Error};
use serde_json::json;

use crate::config::{RunConfig, DEFAULT_LAMBDA_FRACTION};
use crate::output::{csv_table, fmt_value, sha256_hex, Artifacts, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STALL: i32 = 3;

pub const NONEXISTENCE_MESSAGE: &str = "no solution found, consistent with the nonexistence threshold";

/// Points of the hypothesis grid used by `validate`.
pub const HYPOTHESIS_POINTS: usize = 10_001;
pub const HYPOTHESIS_RADIUS: f64 = 20.0;

#[derive(Debug, Parser)]
#[command(name = "homoclinic-cli", version, about = "Even homoclinic solutions by Galerkin continuation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the structural hypotheses of the instance.
    Validate(CommonArgs),
    /// Every explicit constant for the instance at `discretization.n`.
    ConstantsReport(CommonArgs),
    /// Uniform error and Lipschitz estimate of f_k for each configured k.
    StraussReport(CommonArgs),
    /// One truncated problem on (-n, n) with k-continuation.
    Solve(CommonArgs),
    /// The full pipeline: k- and n-continuation plus verification.
    Homoclinic(CommonArgs),
    /// Homoclinic runs over a lambda grid with the asymptotic bounds.
    Sweep(CommonArgs),
    /// Run above the nonexistence threshold and expect no solution.
    NonexistenceProbe(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::ConstantsReport(_) => "constants-report",
            Command::StraussReport(_) => "strauss-report",
            Command::Solve(_) => "solve",
            Command::Homoclinic(_) => "homoclinic",
            Command::Sweep(_) => "sweep",
            Command::NonexistenceProbe(_) => "nonexistence-probe",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Validate(a)
            | Command::ConstantsReport(a)
            | Command::StraussReport(a)
            | Command::Solve(a)
            | Command::Homoclinic(a)
            | Command::Sweep(a)
            | Command::NonexistenceProbe(a) => a,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Accept lambda values above Lambda*.
    #[arg(long)]
    pub allow_beyond_lambda_star: bool,
}

/// Result of one command before the manifest is written.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub status: String,
    pub summary: serde_json::Value,
}

impl Outcome {
    fn new(code: i32, status: impl Into<String>, summary: serde_json::Value) -> Self {
        Self { code, status: status.into(), summary }
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SolverExhausted { .. } | Error::KContinuationStalled { .. } | Error::NoHomoclinic { .. } => EXIT_STALL,
        Error::InvalidParameter(_)
        | Error::TruncationInsufficient { .. }
        | Error::WeightVanishes(_)
        | Error::ThresholdUndefined(_)
        | Error::InstanceEvaluation { .. } => EXIT_CONFIG,
        _ => EXIT_VERIFICATION,
    }
}

fn failure(err: &Error) -> Outcome {
    Outcome::new(exit_code(err), err.to_string(), json!({ "error": err.to_string() }))
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    run(&cli.command)
}

pub fn run(command: &Command) -> i32 {
    let args = command.args();
    let (mut cfg, bytes) = match RunConfig::load(&args.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    cfg.run.allow_beyond_lambda_star |= args.allow_beyond_lambda_star;
    let dir = cfg.output_dir();
    let mut out = match Artifacts::new(&dir) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("cannot create output directory {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
    };
    let threads = cfg.run.threads;
    let outcome = par::with_threads(threads, || dispatch(command, &cfg, &mut out));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => Outcome::new(EXIT_CONFIG, format!("i/o error: {e}"), json!({ "error": e.to_string() })),
    };
    let manifest = Manifest {
        command: command.name(),
        library_version: homoclinic::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(&bytes),
        config: &cfg,
        threads,
        parallel_build: par::is_parallel(),
        exit_code: outcome.code,
        status: outcome.status.clone(),
        artifacts: out.files().to_vec(),
        summary: outcome.summary,
    };
    if let Err(e) = out.json("manifest.json", &manifest) {
        eprintln!("cannot write manifest: {e}");
        return EXIT_CONFIG;
    }
    match outcome.code {
        EXIT_OK => println!("{}: {}", command.name(), outcome.status),
        EXIT_VERIFICATION => {
            eprintln!("{}: {} (report: {})", command.name(), outcome.status, report_path(&out).display())
        }
        _ => eprintln!("{}: {}", command.name(), outcome.status),
    }
    outcome.code
}

fn report_path(out: &Artifacts) -> PathBuf {
    let v = out.path("verification.json");
    if v.exists() {
        v
    } else {
        out.path("manifest.json")
    }
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut Artifacts) -> std::io::Result<Outcome> {
    let ctx = match Context::new(cfg) {
        Ok(ctx) => ctx,
        Err(o) => return Ok(o),
    };
    match command {
        Command::Validate(_) => ctx.validate(out),
        Command::ConstantsReport(_) => ctx.constants_report(out),
        Command::StraussReport(_) => ctx.strauss_report(out),
        Command::Solve(_) => ctx.solve(out),
        Command::Homoclinic(_) => ctx.homoclinic(out),
        Command::Sweep(_) => ctx.sweep(out),
        Command::NonexistenceProbe(_) => ctx.nonexistence_probe(out),
    }
}

/// The resolved instance and options shared by every command.
struct Context<'a> {
    cfg: &'a RunConfig,
    inst: ProblemInstance,
    lambda_star: f64,
    opts: ContinuationOptions,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, Outcome> {
        let config_error =
            |msg: String| Outcome::new(EXIT_CONFIG, format!("config error: {msg}"), json!({ "error": msg }));
        let base = cfg.base_instance(0.0).map_err(config_error)?;
        let settings = cfg.constants_settings();
        let report = ConstantsReport::compute(&base, cfg.discretization.n, &settings).map_err(|e| {
            let mut o = failure(&e);
            o.code = EXIT_CONFIG;
            o
        })?;
        let lambda_star = report.lambda_star;
        let lambda = match (cfg.instance.lambda, cfg.instance.lambda_fraction) {
            (Some(l), _) => l,
            (None, f) => f.unwrap_or(DEFAULT_LAMBDA_FRACTION) * lambda_star,
        };
        if lambda > lambda_star && !cfg.run.allow_beyond_lambda_star {
            return Err(config_error(format!(
                "lambda = {lambda} exceeds Lambda* = {lambda_star}; pass --allow-beyond-lambda-star to permit"
            )));
        }
        Ok(Self { cfg, inst: base.with_lambda(lambda), lambda_star, opts: cfg.continuation_options() })
    }

    fn verify_settings(&self) -> VerifySettings {
        let t = &self.cfg.tolerances;
        VerifySettings {
            weak_residual_tol: t.weak_residual,
            agreement_tol: t.agreement,
            tail_tol: t.tail,
            probe_seed: self.cfg.continuation.seed,
            ..VerifySettings::default()
        }
    }

    fn validate(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let report = match validate_hypotheses(&self.inst, HYPOTHESIS_RADIUS, HYPOTHESIS_POINTS) {
            Ok(r) => r,
            Err(e) => return Ok(failure(&e)),
        };
        out.json("hypotheses.json", &report)?;
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let summary = json!({ "passed": report.passed(), "failed": failed });
        Ok(if report.passed() {
            Outcome::new(EXIT_OK, "all hypotheses hold on the sample grid", summary)
        } else {
            Outcome::new(EXIT_VERIFICATION, format!("hypotheses violated: {}", failed.join(", ")), summary)
        })
    }

    fn constants_report(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let report = match ConstantsReport::compute(&self.inst, self.cfg.discretization.n, &self.opts.constants) {
            Ok(r) => r,
            Err(e) => return Ok(failure(&e)),
        };
        out.json("constants.json", &report)?;
        let summary = json!({ "Lambda_star": report.lambda_star, "k_star": report.k_star, "r": report.r });
        Ok(Outcome::new(EXIT_OK, "constants written", summary))
    }

    fn strauss_report(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let s = &self.cfg.strauss;
        let rows = match strauss::report(&self.inst.g, &s.ks, s.radius, s.samples) {
            Ok(r) => r,
            Err(e) => return Ok(failure(&e)),
        };
        let mut csv = String::from("k,uniform_error,lipschitz_estimate\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{}\n", r.k, fmt_value(r.uniform_error), fmt_value(r.lipschitz_estimate)));
        }
        out.text("strauss.csv", &csv)?;
        let monotone = rows.windows(2).all(|w| w[1].uniform_error <= w[0].uniform_error);
        let summary = json!({ "rows": rows.len(), "uniform_error_nonincreasing": monotone });
        Ok(if monotone {
            Outcome::new(EXIT_OK, "strauss report written", summary)
        } else {
            Outcome::new(EXIT_VERIFICATION, "uniform error is not nonincreasing in k", summary)
        })
    }

    fn solve(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let n = self.cfg.discretization.n;
        let (pn, report) = match continuation::solve_at(&self.inst, n, None, &self.opts) {
            Ok(v) => v,
            Err(e) => return Ok(failure(&e)),
        };
        let sol = &pn.solution;
        let mut checks = verify::check_even_positive(&sol.grid, &sol.u);
        let weak = (|| {
            let b = basis::build_basis_auto(n, sol.m, basis::default_quadrature_nodes(n, sol.m))?;
            let approx = StraussApproximant::new(self.inst.g.clone(), sol.k)?;
            let sys = GalerkinSystem::with_forcing(&self.inst, &b, &approx, sol.forcing);
            galerkin::weak_residual(&sys, sol.xi(), sol.m, self.cfg.continuation.seed)
        })();
        let weak = match weak {
            Ok(w) => w,
            Err(e) => return Ok(failure(&e)),
        };
        let tol = self.cfg.tolerances.weak_residual;
        checks.push(check("weak residual", weak <= tol, weak, tol));
        checks.push(check("norm within r", sol.norm() <= pn.radius, sol.norm() - pn.radius, 0.0));
        if let Some(c) = &pn.certificate {
            checks.push(check("sphere sign certificate", c.passed, c.min_pairing, 0.0));
        }
        let verification = VerificationReport { checks };
        out.json("verification.json", &verification)?;
        out.json(
            "solve.json",
            &json!({
                "lambda": self.inst.lambda,
                "n": n,
                "m": sol.m,
                "k_final": sol.k,
                "forcing": sol.forcing,
                "norm_w12": sol.norm(),
                "sup_norm": sol.sup_norm(),
                "residual": sol.residual,
                "weak_residual": weak,
                "xi": sol.xi(),
                "k_levels": pn.levels,
                "certificate": pn.certificate,
                "constants": report,
            }),
        )?;
        let summary =
            json!({ "norm_w12": sol.norm(), "k_final": sol.k, "weak_residual": weak, "passed": verification.passed() });
        if !verification.passed() {
            return Ok(verification_failure(&verification, summary));
        }
        out.samples("solution.csv", &sol.grid, &sol.u, &sol.du)?;
        Ok(Outcome::new(EXIT_OK, "solution verified", summary))
    }

    fn homoclinic(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let sol = match solve_homoclinic(&self.inst, &self.opts) {
            Ok(s) => s,
            Err(e) => {
                out.json("homoclinic.json", &json!({ "lambda": self.inst.lambda, "status": e.to_string() }))?;
                return Ok(failure(&e));
            }
        };
        let verification = match verify::verify_homoclinic(&self.inst, &sol, &self.verify_settings()) {
            Ok(v) => v,
            Err(e) => return Ok(failure(&e)),
        };
        out.json("verification.json", &verification)?;
        out.json("homoclinic.json", &homoclinic_summary(&sol, self.lambda_star))?;
        let summary = json!({
            "lambda": sol.lambda,
            "n_final": sol.n_final,
            "norm_w12": sol.norm(),
            "sup_norm": sol.sup_norm(),
            "agreement": sol.agreement,
            "tail_sup": sol.tail_sup,
            "passed": verification.passed(),
        });
        if !verification.passed() {
            return Ok(verification_failure(&verification, summary));
        }
        for (i, level) in sol.solutions.iter().enumerate() {
            out.samples(&format!("level_{i}.csv"), &level.grid, &level.u, &level.du)?;
        }
        out.samples("merged.csv", &sol.grid, &sol.u, &sol.du)?;
        Ok(Outcome::new(EXIT_OK, "numerical homoclinic verified", summary))
    }

    fn sweep(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let s = &self.cfg.sweep;
        let lambdas: Vec<f64> = if s.lambdas.is_empty() {
            s.lambda_fractions.iter().map(|f| f * self.lambda_star).collect()
        } else {
            s.lambdas.clone()
        };
        if let Some(l) = lambdas.iter().find(|&&l| l > self.lambda_star) {
            if !self.cfg.run.allow_beyond_lambda_star {
                let msg = format!("sweep lambda {l} exceeds Lambda* = {}", self.lambda_star);
                return Ok(Outcome::new(EXIT_CONFIG, format!("config error: {msg}"), json!({ "error": msg })));
            }
        }
        let rows = match lambda_sweep(&self.inst, &lambdas, &self.opts) {
            Ok(r) => r,
            Err(e) => return Ok(failure(&e)),
        };
        let col = |f: fn(&continuation::SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let (l, nw, su, nb, sb, nf) = (
            col(|r| r.lambda),
            col(|r| r.norm_w12),
            col(|r| r.sup_norm),
            col(|r| r.norm_sq_bound),
            col(|r| r.sup_bound),
            col(|r| r.n_final),
        );
        out.text(
            "sweep.csv",
            &csv_table(
                &["lambda", "norm_w12", "sup_norm", "norm_sq_bound", "sup_bound", "n_final"],
                &[&l, &nw, &su, &nb, &sb, &nf],
            ),
        )?;
        let verification = sweep_checks(&rows);
        out.json("verification.json", &verification)?;
        let summary = json!({ "rows": rows.len(), "passed": verification.passed() });
        Ok(if verification.passed() {
            Outcome::new(EXIT_OK, "sweep within the asymptotic bounds", summary)
        } else {
            verification_failure(&verification, summary)
        })
    }

    fn nonexistence_probe(&self, out: &mut Artifacts) -> std::io::Result<Outcome> {
        let n = self.cfg.discretization.n;
        let report = match ConstantsReport::compute(&self.inst, n, &self.opts.constants) {
            Ok(r) => r,
            Err(e) => return Ok(failure(&e)),
        };
        let threshold = match constants::nonexistence_threshold(&self.inst, self.cfg.nonexistence.radius, report.r) {
            Ok(t) => t,
            Err(e) => return Ok(failure(&e)),
        };
        let probe = self.cfg.nonexistence.factor * threshold.lambda0;
        let result = solve_homoclinic(&self.inst.with_lambda(probe), &self.opts);
        let (code, status, found) = match &result {
            Err(Error::NoHomoclinic { .. }) => (EXIT_OK, NONEXISTENCE_MESSAGE.to_string(), false),
            Err(e) => (exit_code(e), e.to_string(), false),
            Ok(_) => (EXIT_VERIFICATION, "a solution was found above the nonexistence threshold".to_string(), true),
        };
        let detail = match &result {
            Err(e) => e.to_string(),
            Ok(sol) => format!("norm_w12 = {}", sol.norm()),
        };
        let body = json!({
            "lambda0": threshold.lambda0,
            "threshold": threshold,
            "probe_lambda": probe,
            "factor": self.cfg.nonexistence.factor,
            "solution_found": found,
            "status": status,
            "detail": detail,
        });
        out.json("nonexistence.json", &body)?;
        Ok(Outcome::new(code, status, body))
    }
}

fn check(name: &str, passed: bool, witness_value: f64, tolerance: f64) -> verify::CheckResult {
    verify::CheckResult { name: name.into(), passed, skipped: None, witness_value, witness_at: None, tolerance }
}

fn verification_failure(report: &VerificationReport, summary: serde_json::Value) -> Outcome {
    let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    Outcome::new(EXIT_VERIFICATION, format!("verification failed: {}", names.join(", ")), summary)
}

fn homoclinic_summary(sol: &HomoclinicSolution, lambda_star: f64) -> serde_json::Value {
    json!({
        "lambda": sol.lambda,
        "Lambda_star": lambda_star,
        "n_final": sol.n_final,
        "norm_w12": sol.norm(),
        "sup_norm": sol.sup_norm(),
        "tail_sup": sol.tail_sup,
        "agreement": sol.agreement,
        "levels": sol.levels,
        "constants": sol.constants,
    })
}

/// Row-wise bounds are enforced by the sweep itself; this adds the
/// monotonicity and sup-norm checks.
pub fn sweep_checks(rows: &[continuation::SweepRow]) -> VerificationReport {
    let mut sorted: Vec<&continuation::SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
    let mut worst_step = f64::INFINITY;
    for w in sorted.windows(2) {
        if w[0].lambda > w[1].lambda {
            worst_step = worst_step.min(w[0].norm_w12 - w[1].norm_w12);
        }
    }
    let worst_step = if worst_step.is_finite() { worst_step } else { 0.0 };
    let mut worst_sup = f64::NEG_INFINITY;
    let mut worst_bound = f64::NEG_INFINITY;
    for r in rows {
        worst_sup = worst_sup.max(r.sup_norm - r.sup_bound);
        worst_bound = worst_bound.max(r.norm_w12 * r.norm_w12 - r.norm_sq_bound);
    }
    let slack = continuation::SWEEP_SLACK;
    VerificationReport {
        checks: vec![
            check("norm squared within lambda bound", worst_bound <= slack, worst_bound, slack),
            check("norms strictly decreasing in lambda", sorted.len() < 2 || worst_step > 0.0, worst_step, 0.0),
            check("sup norm within C r_tilde", worst_sup <= 0.0, worst_sup, 0.0),
        ],
    }
}

/// Reads a `t,u,du` sample table written by [`Artifacts::samples`].
pub fn read_samples(path: &Path) -> std::io::Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let (mut t, mut u, mut du) = (Vec::new(), Vec::new(), Vec::new());
    for line in text.lines().skip(1) {
        let cells: Vec<f64> =
            line.split(',').map(|c| c.parse().map_err(std::io::Error::other)).collect::<Result<_, _>>()?;
        if cells.len() != 3 {
            return Err(std::io::Error::other(format!("expected 3 columns, got {}", cells.len())));
        }
        t.push(cells[0]);
        u.push(cells[1]);
        du.push(cells[2]);
    }
    Ok((t, u, du))
}
