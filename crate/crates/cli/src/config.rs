//! Run configuration: a sectioned TOML file. The schema is documented in
//! `config/schema.md`; every key is optional.

use std::path::{Path, PathBuf};

use homoclinic::constants::ConstantsSettings;
use homoclinic::continuation::ContinuationOptions;
use homoclinic::galerkin::SolveOptions;
use homoclinic::newton::NewtonOptions;
use homoclinic::problem::{catalog, ProblemInstance};
use serde::{Deserialize, Serialize};

/// Environment variable overriding `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "HOMOCLINIC_OUTPUT_DIR";

pub const DEFAULT_LAMBDA_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub instance: InstanceSection,
    pub discretization: DiscretizationSection,
    pub continuation: ContinuationSection,
    pub sweep: SweepSection,
    pub strauss: StraussSection,
    pub nonexistence: NonexistenceSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceSection {
    /// Catalog entry providing every field not set below.
    pub name: String,
    /// Absolute `lambda`; exclusive with `lambda_fraction`.
    pub lambda: Option<f64>,
    /// `lambda` as a multiple of `Lambda*`; [`DEFAULT_LAMBDA_FRACTION`] when neither is set.
    pub lambda_fraction: Option<f64>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    pub diffusion: Option<String>,
    pub weight: Option<String>,
    pub weight_beta: Option<f64>,
    pub nonlinearity: Option<String>,
}

impl Default for InstanceSection {
    fn default() -> Self {
        Self {
            name: catalog::DEFAULT.into(),
            lambda: None,
            lambda_fraction: None,
            q: None,
            p: None,
            theta: None,
            gamma: None,
            diffusion: None,
            weight: None,
            weight_beta: None,
            nonlinearity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub m_per_unit: f64,
    /// Half width for `solve`, `validate` and `constants-report`.
    pub n: f64,
    pub directions: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self { m_per_unit: 4.0, n: 2.0, directions: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSection {
    pub n_schedule: Vec<f64>,
    pub k_start_factor: u64,
    pub k_cap: u64,
    pub k_floor: u64,
    pub certificate_samples: usize,
    pub seed: u64,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        let d = ContinuationOptions::default();
        Self {
            n_schedule: d.n_schedule,
            k_start_factor: d.k_start_factor,
            k_cap: d.k_cap,
            k_floor: d.k_floor,
            certificate_samples: d.certificate_samples,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Absolute values; used when nonempty, otherwise `lambda_fractions`.
    pub lambdas: Vec<f64>,
    /// Multiples of `Lambda*`.
    pub lambda_fractions: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { lambdas: Vec::new(), lambda_fractions: (0..7).map(|j| 0.5f64.powi(j)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StraussSection {
    pub ks: Vec<u64>,
    pub radius: f64,
    pub samples: usize,
}

impl Default for StraussSection {
    fn default() -> Self {
        Self { ks: vec![10, 100, 1_000, 10_000], radius: 1.0, samples: 10_001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonexistenceSection {
    /// Radius `R` of the threshold.
    pub radius: f64,
    /// The probe runs at `factor * lambda0`.
    pub factor: f64,
}

impl Default for NonexistenceSection {
    fn default() -> Self {
        Self { radius: 1.0, factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub newton: f64,
    pub drift: f64,
    pub gap: f64,
    pub agreement: f64,
    pub tail: f64,
    pub weak_residual: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let d = ContinuationOptions::default();
        Self {
            newton: NewtonOptions::default().tol,
            drift: d.drift_tol,
            gap: d.gap_tol,
            agreement: d.agreement_tol,
            tail: d.tail_tol,
            weak_residual: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Worker threads; 1 keeps runs reproducible bit for bit, 0 uses every core.
    pub threads: usize,
    pub allow_beyond_lambda_star: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { threads: 1, allow_beyond_lambda_star: false }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), String> {
        let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Structural checks that do not need the instance constants.
    pub fn check(&self) -> Result<(), String> {
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.newton", t.newton),
            ("tolerances.drift", t.drift),
            ("tolerances.gap", t.gap),
            ("tolerances.agreement", t.agreement),
            ("tolerances.tail", t.tail),
            ("tolerances.weak_residual", t.weak_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be a positive number, got {v}"));
            }
        }
        increasing("continuation.n_schedule", &self.continuation.n_schedule)?;
        if self.continuation.n_schedule[0] <= 1.0 {
            return Err("continuation.n_schedule entries must exceed 1".into());
        }
        let c = &self.continuation;
        if c.k_start_factor == 0 || c.k_floor == 0 || c.k_cap < c.k_floor {
            return Err("need k_start_factor >= 1, k_floor >= 1 and k_cap >= k_floor".into());
        }
        if !(self.discretization.m_per_unit > 0.0) || !(self.discretization.n > 0.0) {
            return Err("discretization.m_per_unit and discretization.n must be positive".into());
        }
        let s = &self.strauss;
        increasing("strauss.ks", &s.ks.iter().map(|&k| k as f64).collect::<Vec<_>>())?;
        if s.ks[0] == 0 || !(s.radius > 0.0) || s.samples < 2 {
            return Err("strauss: ks must be >= 1, radius > 0, samples >= 2".into());
        }
        if !(self.nonexistence.radius > 0.0) || !(self.nonexistence.factor > 0.0) {
            return Err("nonexistence.radius and nonexistence.factor must be positive".into());
        }
        let i = &self.instance;
        match (i.lambda, i.lambda_fraction) {
            (Some(_), Some(_)) => return Err("set only one of instance.lambda and instance.lambda_fraction".into()),
            (Some(v), None) | (None, Some(v)) if !(v >= 0.0 && v.is_finite()) => {
                return Err(format!("lambda must be finite and >= 0, got {v}"));
            }
            _ => {}
        }
        let grid = if self.sweep.lambdas.is_empty() { &self.sweep.lambda_fractions } else { &self.sweep.lambdas };
        if grid.is_empty() {
            return Err("sweep grid is empty".into());
        }
        if grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err("sweep values must be finite and >= 0".into());
        }
        Ok(())
    }

    /// The instance at `lambda` (not yet resolved against `Lambda*`).
    pub fn base_instance(&self, lambda: f64) -> Result<ProblemInstance, String> {
        let i = &self.instance;
        let base = catalog::instance(&i.name, lambda)
            .ok_or_else(|| format!("unknown instance '{}'; known: {}", i.name, catalog::names().join(", ")))?;
        let q = i.q.unwrap_or(base.q);
        let p = i.p.unwrap_or(base.p);
        let theta = i.theta.unwrap_or(base.theta);
        let gamma = i.gamma.unwrap_or(base.gamma);
        let diffusion = match &i.diffusion {
            Some(d) => catalog::diffusion(d, gamma).ok_or_else(|| format!("unknown diffusion '{d}'"))?,
            None if i.gamma.is_some() => return Err("instance.gamma requires instance.diffusion".into()),
            None => base.diffusion,
        };
        let weight = match (&i.weight, i.weight_beta) {
            (Some(w), b) => catalog::weight(w, b.unwrap_or(1.0)).ok_or_else(|| format!("unknown weight '{w}'"))?,
            (None, Some(_)) => return Err("instance.weight_beta requires instance.weight".into()),
            (None, None) => base.weight,
        };
        let g = match &i.nonlinearity {
            Some(g) => catalog::nonlinearity(g, theta).ok_or_else(|| format!("unknown nonlinearity '{g}'"))?,
            None => base.g,
        };
        ProblemInstance::new(i.name.clone(), q, p, theta, lambda, gamma, diffusion, weight, g)
            .map_err(|e| e.to_string())
    }

    pub fn constants_settings(&self) -> ConstantsSettings {
        ConstantsSettings { nonexistence_radius: self.nonexistence.radius, ..ConstantsSettings::default() }
    }

    pub fn continuation_options(&self) -> ContinuationOptions {
        let c = &self.continuation;
        let t = &self.tolerances;
        let defaults = ContinuationOptions::default();
        ContinuationOptions {
            m_per_unit: self.discretization.m_per_unit,
            n_schedule: c.n_schedule.clone(),
            k_start_factor: c.k_start_factor,
            k_cap: c.k_cap,
            k_floor: c.k_floor,
            drift_tol: t.drift,
            gap_tol: t.gap,
            agreement_tol: t.agreement,
            tail_tol: t.tail,
            certificate_samples: c.certificate_samples,
            seed: c.seed,
            constants: self.constants_settings(),
            solve: SolveOptions {
                newton: NewtonOptions { tol: t.newton, ..NewtonOptions::default() },
                directions: self.discretization.directions,
                seed: c.seed,
                ..defaults.solve
            },
        }
    }

    /// Output directory, honoring [`OUTPUT_DIR_ENV`].
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output.dir.clone(),
        }
    }
}

fn increasing(name: &str, v: &[f64]) -> Result<(), String> {
    if v.is_empty() {
        return Err(format!("{name} must be nonempty"));
    }
    if v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(format!("{name} must be strictly increasing"));
    }
    Ok(())
}
