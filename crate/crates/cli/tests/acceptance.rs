//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 1-5 call the library; 6-9 drive the `homoclinic-cli` binary.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use homoclinic::basis::{build_basis_auto, default_quadrature_nodes, euclid};
use homoclinic::constants::{nonexistence_threshold, sphere_sign_certificate, ConstantsReport, ConstantsSettings};
use homoclinic::continuation::{solve_at, ContinuationOptions};
use homoclinic::galerkin::{self, interior, solve_in_ball, symmetric_grid, GalerkinSystem, SolveOptions, GRID_STEP};
use homoclinic::newton::{newton, NewtonOptions};
use homoclinic::problem::{catalog, nonlinearity, ProblemInstance, ScalarFn};
use homoclinic::strauss::{uniform_error, StraussApproximant};
use serde_json::Value;

// Pinned tolerances.
const SIGN_TOL: f64 = 1e-12;
const UNIFORM_ERROR_K10: f64 = 0.10333;
const UNIFORM_ERROR_TOL: f64 = 1e-4;
const CONSTANTS_REL_TOL: f64 = 1e-8;
const ORACLE_TOL: f64 = 1e-6;
const WEAK_RESIDUAL_TOL: f64 = 1e-8;
const EVENNESS_TOL: f64 = 1e-12;
const AGREEMENT_TOL: f64 = 1e-6;
const TAIL_TOL: f64 = 1e-6;
const SWEEP_SLACK: f64 = 1e-8;

const STRAUSS_KS: [u64; 4] = [10, 100, 1_000, 10_000];
const STRAUSS_SAMPLES: usize = 10_000;
/// `sup s f_k(s) / envelope(s)` for `g(s) = s|s|`, attained at `s = 1/k`.
const C1_QUADRATIC: f64 = 7.0 / 3.0;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(u32, &str, Option<Duration>, Check); 9] = [
        (1, "Strauss suite", Some(Duration::from_secs(5)), strauss_suite),
        (2, "constants suite", Some(Duration::from_secs(1)), constants_suite),
        (3, "sphere sign certificate", Some(Duration::from_secs(30)), certificate_suite),
        (4, "oracle equivalence at M=2", Some(Duration::from_secs(60)), oracle_equivalence),
        (5, "residual suite", Some(Duration::from_secs(120)), residual_suite),
        (6, "conclusions on a homoclinic run", Some(Duration::from_secs(600)), conclusions_suite),
        (7, "lambda asymptotics", Some(Duration::from_secs(900)), asymptotics_suite),
        (8, "nonexistence", Some(Duration::from_secs(600)), nonexistence_suite),
        (9, "determinism", None, determinism_suite),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let timing = match budget {
            Some(b) => format!("{:.2} s, budget {} s", elapsed.as_secs_f64(), b.as_secs()),
            None => format!("{:.2} s", elapsed.as_secs_f64()),
        };
        let result = match (result, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err("over the runtime budget".to_string()),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {id} ({name}): PASS [{timing}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{timing}] {detail}");
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn catalog_at_half_lambda_star() -> (ProblemInstance, f64) {
    let base = catalog::instance(catalog::DEFAULT, 0.0).unwrap();
    let star = ConstantsReport::compute(&base, 2.0, &ConstantsSettings::default()).unwrap().lambda_star;
    (base.with_lambda(0.5 * star), star)
}

fn strauss_suite() -> Result<String, String> {
    let g = nonlinearity::quadratic();
    let mut errors = Vec::new();
    for k in STRAUSS_KS {
        let fk = StraussApproximant::new(g.clone(), k).map_err(|e| e.to_string())?;
        for i in 0..STRAUSS_SAMPLES {
            let s = -20.0 + 40.0 * i as f64 / (STRAUSS_SAMPLES - 1) as f64;
            let v = fk.eval(s).map_err(|e| e.to_string())?;
            ensure(s * v >= -SIGN_TOL, || format!("s f_k(s) = {} at k = {k}, s = {s}", s * v))?;
            let env = C1_QUADRATIC * fk.envelope(s, 3.0) * (1.0 + 1e-12);
            ensure(s * v <= env, || format!("growth envelope fails at k = {k}, s = {s}: {} > {env}", s * v))?;
        }
        errors.push(uniform_error(&fk, &g, 1.0, STRAUSS_SAMPLES).map_err(|e| e.to_string())?);
    }
    ensure(errors.windows(2).all(|w| w[1] < w[0]), || format!("uniform errors not decreasing: {errors:?}"))?;
    ensure((errors[0] - UNIFORM_ERROR_K10).abs() <= UNIFORM_ERROR_TOL, || {
        format!("uniform error at k = 10 is {}", errors[0])
    })?;
    let oracle = 0.1 + 1.0 / 300.0;
    Ok(format!("uniform errors {}; k=10 oracle 1/k + 1/(3k^2) = {oracle:.6}", sci(&errors)))
}

fn constants_suite() -> Result<String, String> {
    let (inst, _) = catalog_at_half_lambda_star();
    let n = 5.0;
    let rep = ConstantsReport::compute(&inst, n, &ConstantsSettings::default()).map_err(|e| e.to_string())?;

    // Closed forms for q = 3/2, p = theta = 3, gamma = 1/2, a1 = exp(-t^2), g = s|s|, psi = 1.
    let (q, gamma) = (1.5, 0.5);
    let c = 0.5f64.sqrt();
    let c1 = C1_QUADRATIC;
    let c2 = (std::f64::consts::PI / 4.0).powf(0.125);
    let delta1 = (gamma / (4.0 * c)).min(gamma / (4.0 * c1 * c));
    let r = 0.5 * delta1;
    let lambda_star = r * r * gamma / (2.0 * c2 * delta1.powf(q));
    let lambda = 0.5 * lambda_star;
    let rho1 = r * r * gamma / 2.0 - lambda * c2 * delta1.powf(q);
    let k_star = ((c1 + 1.0) * (2.0 * n).sqrt() * delta1 / rho1).floor() + 1.0;
    let lambda1 = std::f64::consts::PI.powi(2) / (4.0 * n * n);
    let a_tilde = (-n * n).exp();
    let tau = (lambda * a_tilde / (1.0 + gamma * lambda1)).powi(2);
    let r_tilde = r.min((lambda * 2.0 * c2 * r.powf(q) / gamma).sqrt());
    let cap = lambda * (-1.0f64).exp();
    let m = (cap / 2.0).powf(2.0 / 3.0);
    let c_lambda = (2f64.powf(1.0 / 3.0) + 2f64.powf(-2.0 / 3.0)) * cap.powf(2.0 / 3.0);

    let k = rep.k_star.ok_or("k* undefined")? as f64;
    let pairs = [
        ("delta1", rep.delta1, delta1),
        ("Lambda*", rep.lambda_star, lambda_star),
        ("k*", k, k_star),
        ("lambda1", rep.lambda1, lambda1),
        ("tau", rep.tau, tau),
        ("r_tilde", rep.r_tilde, r_tilde),
        ("m", rep.m, m),
        ("C_Lambda", rep.c_lambda, c_lambda),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in pairs {
        let e = rel(got, want);
        ensure(e <= CONSTANTS_REL_TOL, || format!("{name}: {got:e} vs oracle {want:e} (rel {e:.2e})"))?;
        worst = worst.max(e);
    }
    Ok(format!("8 constants at n = 5, worst relative deviation {worst:.2e}"))
}

fn certificate_suite() -> Result<String, String> {
    let (inst, _) = catalog_at_half_lambda_star();
    let mut mins = Vec::new();
    for (n, m) in [(2.0, 4), (5.0, 8)] {
        let rep = ConstantsReport::compute(&inst, n, &ConstantsSettings::default()).map_err(|e| e.to_string())?;
        let k = 2 * rep.k_star.ok_or("k* undefined")?;
        let basis = build_basis_auto(n, m, default_quadrature_nodes(n, m)).map_err(|e| e.to_string())?;
        let fk = StraussApproximant::new(inst.g.clone(), k).map_err(|e| e.to_string())?;
        let sys = GalerkinSystem::new(&inst, &basis, &fk);
        let cert = sphere_sign_certificate(&sys, rep.r, 200, 0x5eed).map_err(|e| e.to_string())?;
        ensure(cert.passed, || format!("(n, M) = ({n}, {m}): min pairing {:e}", cert.min_pairing))?;
        mins.push(cert.min_pairing);
    }
    Ok(format!("min <F(xi), xi> on the sphere: {}", sci(&mins)))
}

/// Grid point of `B[0, radius]` minimizing `|F|` on a 201 x 201 grid.
fn grid_minimizer(f: &dyn Fn(&[f64]) -> Vec<f64>, radius: f64) -> Vec<f64> {
    let side = 201;
    let mut best = (vec![0.0, 0.0], f64::INFINITY);
    for i in 0..side {
        for j in 0..side {
            let step = 2.0 * radius / (side - 1) as f64;
            let x = [-radius + step * i as f64, -radius + step * j as f64];
            if euclid(&x) > radius {
                continue;
            }
            let v = euclid(&f(&x));
            if v < best.1 {
                best = (x.to_vec(), v);
            }
        }
    }
    best.0
}

fn oracle_equivalence() -> Result<String, String> {
    let (inst, _) = catalog_at_half_lambda_star();
    let n = 2.0;
    let rep = ConstantsReport::compute(&inst, n, &ConstantsSettings::default()).map_err(|e| e.to_string())?;
    let k = 2 * rep.k_star.ok_or("k* undefined")?;
    let basis = build_basis_auto(n, 2, default_quadrature_nodes(n, 2)).map_err(|e| e.to_string())?;
    let fk = StraussApproximant::new(inst.g.clone(), k).map_err(|e| e.to_string())?;
    let sys = GalerkinSystem::new(&inst, &basis, &fk);
    let sol = solve_in_ball(&sys, rep.r, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let start = grid_minimizer(&|x: &[f64]| sys.assemble(x).unwrap(), rep.r);
    let refined =
        newton(&|x: &[f64]| sys.assemble(x), &start, rep.r, &NewtonOptions::default()).map_err(|e| e.to_string())?;
    ensure(refined.converged, || format!("refinement from {start:?} stalled at residual {:e}", refined.residual))?;
    let (oracle, res) = (refined.x, refined.residual);
    let diff = euclid(&[sol.xi()[0] - oracle[0], sol.xi()[1] - oracle[1]]);
    ensure(diff <= ORACLE_TOL, || format!("solver {:?} vs brute force {oracle:?}: |d| = {diff:e}", sol.xi()))?;
    Ok(format!("|xi_solver - xi_oracle| = {diff:.2e}, oracle residual {res:.2e}"))
}

fn residual_suite() -> Result<String, String> {
    let (inst, _) = catalog_at_half_lambda_star();
    let n = 2.0;
    let mut strong = Vec::new();
    let mut worst_weak = 0.0f64;
    for m_per_unit in [4.0, 8.0, 16.0] {
        let opts = ContinuationOptions { m_per_unit, ..Default::default() };
        let (pn, _) = solve_at(&inst, n, None, &opts).map_err(|e| e.to_string())?;
        let sol = &pn.solution;
        let basis = build_basis_auto(n, sol.m, default_quadrature_nodes(n, sol.m)).map_err(|e| e.to_string())?;
        let fk = StraussApproximant::new(inst.g.clone(), sol.k).map_err(|e| e.to_string())?;
        let sys = GalerkinSystem::with_forcing(&inst, &basis, &fk, sol.forcing);
        let weak = galerkin::weak_residual(&sys, sol.xi(), sol.m, 7).map_err(|e| e.to_string())?;
        ensure(weak <= WEAK_RESIDUAL_TOL, || format!("weak residual {weak:e} at M = {}", sol.m))?;
        worst_weak = worst_weak.max(weak);
        let grid = interior(&symmetric_grid(n, GRID_STEP), n, 0.25);
        strong.push(galerkin::strong_residual(&sys, sol.xi(), &grid).map_err(|e| e.to_string())?);
    }
    ensure(strong.windows(2).all(|w| w[1] < w[0]), || {
        format!("strong residual not decreasing over M = 8, 16, 32: {strong:?}")
    })?;
    let manufactured = manufactured_residual()?;
    ensure(manufactured <= WEAK_RESIDUAL_TOL, || format!("manufactured residual {manufactured:e}"))?;
    Ok(format!(
        "weak <= {worst_weak:.2e}; strong over M = 8, 16, 32: {}; manufactured {manufactured:.2e}",
        sci(&strong)
    ))
}

/// Weak residual of the root of the system with a source making
/// `u* = 0.02 e_1 - 0.005 e_2` an exact solution.
fn manufactured_residual() -> Result<f64, String> {
    let inst = catalog::instance(catalog::DEFAULT, 0.005).unwrap();
    let (n, m) = (2.0, 8);
    let basis = build_basis_auto(n, m, default_quadrature_nodes(n, m)).map_err(|e| e.to_string())?;
    let fk = StraussApproximant::new(inst.g.clone(), 1000).map_err(|e| e.to_string())?;
    let mut target = vec![0.0; m];
    target[0] = 0.02;
    target[1] = -0.005;
    let (w, nu) = (basis.omega().to_vec(), basis.nu().to_vec());
    let (src_inst, src_fk, coeffs) = (inst.clone(), fk.clone(), target.clone());
    let forcing = 1.0 / fk.k() as f64;
    let h = ScalarFn::new("manufactured", move |t: f64| {
        let (mut u, mut du, mut d2u) = (0.0, 0.0, 0.0);
        for l in 0..2 {
            let (s, c) = (w[l] * t).sin_cos();
            u += coeffs[l] * nu[l] * c;
            du -= coeffs[l] * nu[l] * w[l] * s;
            d2u -= coeffs[l] * nu[l] * w[l] * w[l] * c;
        }
        let a = &src_inst.diffusion;
        let lhs = -a.eval_derivative(u) * du * du - a.eval(u) * d2u + u;
        let rhs = galerkin::right_hand_side(&src_inst, &src_fk, forcing, src_inst.weight.eval(t), u, du, t).unwrap();
        lhs - rhs
    });
    let sys = GalerkinSystem::new(&inst, &basis, &fk).with_source(h);
    let run = newton(
        &|x: &[f64]| sys.assemble(x),
        &target.iter().map(|v| 0.9 * v).collect::<Vec<_>>(),
        1.0,
        &NewtonOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(run.converged, || format!("manufactured Newton stalled at residual {:e}", run.residual))?;
    let err = euclid(&run.x.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>());
    ensure(err <= ORACLE_TOL, || format!("manufactured root off by {err:e}"))?;
    galerkin::weak_residual(&sys, &run.x, m, 7).map_err(|e| e.to_string())
}

struct Run {
    code: i32,
    dir: PathBuf,
    stdout: String,
    stderr: String,
}

fn cli(command: &str, config: &str, dir: &Path, extra: &[&str]) -> Result<Run, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_homoclinic-cli"))
        .arg(command)
        .arg(&cfg)
        .args(extra)
        .env("HOMOCLINIC_OUTPUT_DIR", dir.join("out"))
        .output()
        .map_err(|e| e.to_string())?;
    Ok(Run {
        code: out.status.code().unwrap_or(-1),
        dir: dir.join("out"),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    })
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("homoclinic-acceptance-{}", std::process::id())).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

const HALF_LAMBDA_STAR: &str = "[instance]\nname = \"quadratic-arctan\"\nlambda_fraction = 0.5\n\n[run]\nthreads = 1\n";

fn check_entry<'a>(report: &'a Value, name: &str) -> Result<&'a Value, String> {
    report["checks"]
        .as_array()
        .and_then(|a| a.iter().find(|c| c["name"] == name))
        .ok_or_else(|| format!("check '{name}' missing from the report"))
}

fn conclusions_suite() -> Result<String, String> {
    let run = cli("homoclinic", HALF_LAMBDA_STAR, &scratch("c6"), &[])?;
    ensure(run.code == 0, || format!("exit {}: {}", run.code, run.stderr.trim()))?;
    ensure(run.dir.join("merged.csv").exists(), || "merged.csv missing".into())?;
    let report = read_json(&run.dir.join("verification.json"))?;
    let value = |name: &str| -> Result<(bool, f64, bool), String> {
        let c = check_entry(&report, name)?;
        Ok((
            c["passed"].as_bool().unwrap_or(false),
            c["witness_value"].as_f64().unwrap_or(f64::NAN),
            c["skipped"].is_null(),
        ))
    };
    let (_, even, _) = value("evenness")?;
    ensure(even <= EVENNESS_TOL, || format!("evenness defect {even:e}"))?;
    let (pos_ok, pos, _) = value("positivity")?;
    ensure(pos_ok && pos > 0.0, || format!("interior minimum {pos:e}"))?;
    let (bound_ok, bound_slack, applied) = value("interior minimum bound")?;
    ensure(bound_ok && applied && bound_slack > 0.0, || format!("interior minimum bound slack {bound_slack:e}"))?;
    let (_, agree, _) = value("cross-level agreement")?;
    ensure(agree <= AGREEMENT_TOL, || format!("agreement {agree:e}"))?;
    let (_, tail, _) = value("tail decay")?;
    ensure(tail <= TAIL_TOL, || format!("tail {tail:e}"))?;
    let failures: Vec<String> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].to_string())
        .collect();
    ensure(failures.is_empty(), || format!("failed checks: {failures:?}"))?;
    Ok(format!("evenness {even:.1e}, min u {pos:.2e}, agreement {agree:.2e}, tail {tail:.2e}"))
}

fn parse_csv(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse::<f64>().map_err(|e| e.to_string())).collect()).collect()
}

fn asymptotics_suite() -> Result<String, String> {
    let config =
        format!("{HALF_LAMBDA_STAR}\n[sweep]\nlambda_fractions = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625]\n");
    let run = cli("sweep", &config, &scratch("c7"), &[])?;
    ensure(run.code == 0, || format!("exit {}: {}", run.code, run.stderr.trim()))?;
    let rows = parse_csv(&run.dir.join("sweep.csv"))?;
    ensure(rows.len() == 7, || format!("{} rows", rows.len()))?;
    for r in &rows {
        let (lambda, norm, sup, bound, sup_bound) = (r[0], r[1], r[2], r[3], r[4]);
        ensure(norm * norm <= bound + SWEEP_SLACK, || {
            format!("lambda {lambda:e}: |u|^2 = {:e} > {bound:e}", norm * norm)
        })?;
        ensure(sup <= sup_bound, || format!("lambda {lambda:e}: sup |u| = {sup:e} > C r~ = {sup_bound:e}"))?;
    }
    ensure(rows.windows(2).all(|w| w[1][1] < w[0][1]), || "norms not strictly decreasing".into())?;
    let ratio = rows[6][1] / rows[0][1];
    Ok(format!("norms {:.3e} -> {:.3e} (ratio {ratio:.2e}) over lambda = Lambda*/2^j", rows[0][1], rows[6][1]))
}

fn nonexistence_suite() -> Result<String, String> {
    let (inst, _) = catalog_at_half_lambda_star();
    let rep = ConstantsReport::compute(&inst, 2.0, &ConstantsSettings::default()).map_err(|e| e.to_string())?;
    let th = nonexistence_threshold(&inst, 1.0, rep.r).map_err(|e| e.to_string())?;
    ensure(th.lambda0.is_finite() && th.lambda0 > 0.0, || format!("lambda0 = {}", th.lambda0))?;
    let config =
        format!("[instance]\nname = \"quadratic-arctan\"\nlambda = {:e}\n\n[run]\nthreads = 1\n", 10.0 * th.lambda0);
    let run = cli("homoclinic", &config, &scratch("c8"), &["--allow-beyond-lambda-star"])?;
    ensure(run.code == 3, || format!("homoclinic at 10 lambda0 exited {} ({})", run.code, run.stderr.trim()))?;
    ensure(run.stderr.contains("no numerical homoclinic"), || format!("status: {}", run.stderr.trim()))?;
    let probe = cli("nonexistence-probe", HALF_LAMBDA_STAR, &scratch("c8-probe"), &[])?;
    ensure(probe.code == 0, || format!("probe exited {}: {}", probe.code, probe.stderr.trim()))?;
    ensure(probe.stdout.contains("no solution found"), || format!("probe said: {}", probe.stdout.trim()))?;
    Ok(format!("lambda0 = {:.6e}; run at 10 lambda0: no numerical homoclinic", th.lambda0))
}

fn determinism_suite() -> Result<String, String> {
    let a = cli("homoclinic", HALF_LAMBDA_STAR, &scratch("c9a"), &[])?;
    let b = cli("homoclinic", HALF_LAMBDA_STAR, &scratch("c9b"), &[])?;
    ensure(a.code == 0 && b.code == 0, || format!("exit codes {} and {}", a.code, b.code))?;
    let mut names: Vec<String> = std::fs::read_dir(&a.dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    ensure(!names.is_empty(), || "no CSV written".into())?;
    for name in &names {
        let x = std::fs::read(a.dir.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, || format!("{name} differs between reruns"))?;
    }
    Ok(format!("{} CSV files byte-identical", names.len()))
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}
