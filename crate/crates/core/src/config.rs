//! JSON run configuration and the built-in scenarios.
//!
//! Every numeric field accepts either a JSON number or a constant expression
//! string such as `"7/6"` or `"3^(1/4)/10"`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvp::{Fidelity, Growth, ProblemSpec, VOperator};
use crate::error::Error;
use crate::exec::ExecMode;
use crate::expr::{parse_with_vars, BoundExpr};
use crate::frac::{FracOrder, DEFAULT_N};
use crate::psi::{PsiFunction, PsiKind};
use crate::solver::{SolveOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::stability::{Perturbation, Z_VARS};

/// Built-in scenarios as (name, JSON source).
pub const BUILTIN: &[(&str, &str)] = &[
    ("example-4.1-i", include_str!("../scenarios/example-4.1-i.json")),
    ("example-4.1-ii", include_str!("../scenarios/example-4.1-ii.json")),
    ("example-4.1-iii", include_str!("../scenarios/example-4.1-iii.json")),
    ("example-4.1-iii-sweep", include_str!("../scenarios/example-4.1-iii-sweep.json")),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{message} at line {line}, column {column} (field `{field}`)")]
    Json {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown scenario `{name}` (available: {available})")]
    UnknownScenario { name: String, available: String },
    #[error("{0}")]
    Usage(String),
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "IoError",
            ConfigError::Json { .. } => "ConfigSyntaxError",
            ConfigError::Field { .. } => "ConfigFieldError",
            ConfigError::UnknownScenario { .. } => "UnknownScenario",
            ConfigError::Usage(_) => "UsageError",
        }
    }
}

fn field_err(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

/// Failure to turn a config into a problem: either the config itself is bad or
/// the problem it describes is.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Problem(#[from] Error),
}

/// A number or a constant expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Expr(String),
}

impl Num {
    pub fn eval(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Expr(s) => {
                let e = parse_with_vars(s, &[]).map_err(|e| field_err(field, e))?;
                let v = e.eval_with(&|_| None).map_err(|e| field_err(field, e))?;
                Ok(v)
            }
        }
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num::Value(v)
    }
}

fn compile(src: &str, vars: &[&str], field: &str) -> Result<BoundExpr, ConfigError> {
    BoundExpr::compile(src, vars).map_err(|e| field_err(field, e))
}

fn nums(v: &[Num], field: &str) -> Result<Vec<f64>, ConfigError> {
    v.iter()
        .enumerate()
        .map(|(i, n)| n.eval(&format!("{field}[{i}]")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PsiConfig {
    Linear,
    ExpSaturating {
        c: Num,
    },
    PowerExponential {
        rho: Num,
    },
    Tangent {
        rho: Num,
    },
    /// `expr` and `prime` in `(t, r)`, `inverse` in `(tau, r)`, with `r = rho`.
    Custom {
        expr: String,
        #[serde(default)]
        prime: Option<String>,
        #[serde(default)]
        inverse: Option<String>,
        #[serde(default)]
        rho: Option<Num>,
    },
}

impl PsiConfig {
    fn kind(&self) -> Result<PsiKind, ConfigError> {
        Ok(match self {
            PsiConfig::Linear => PsiKind::Linear,
            PsiConfig::ExpSaturating { c } => PsiKind::ExpSaturating { c: c.eval("problem.psi.c")? },
            PsiConfig::PowerExponential { rho } => PsiKind::PowerExponential {
                rho: rho.eval("problem.psi.rho")?,
            },
            PsiConfig::Tangent { rho } => PsiKind::Tangent {
                rho: rho.eval("problem.psi.rho")?,
            },
            PsiConfig::Custom {
                expr,
                prime,
                inverse,
                rho,
            } => PsiKind::Custom {
                psi: compile(expr, &["t", "r"], "problem.psi.expr")?,
                prime: prime
                    .as_deref()
                    .map(|p| compile(p, &["t", "r"], "problem.psi.prime"))
                    .transpose()?,
                inverse: inverse
                    .as_deref()
                    .map(|p| compile(p, &["tau", "r"], "problem.psi.inverse"))
                    .transpose()?,
                rho: rho.as_ref().map(|r| r.eval("problem.psi.rho")).transpose()?.unwrap_or(0.0),
            },
        })
    }

    /// Short label used in sweep file names.
    pub fn family(&self) -> &'static str {
        match self {
            PsiConfig::Linear => "linear",
            PsiConfig::ExpSaturating { .. } => "exp-saturating",
            PsiConfig::PowerExponential { .. } => "power-exponential",
            PsiConfig::Tangent { .. } => "tangent",
            PsiConfig::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VConfig {
    #[default]
    Identity,
    /// (𝒱u)(t) = u(warp(t)).
    TimeWarp(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub p: [String; 3],
    pub phi: [String; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub nu: Num,
    pub beta: Num,
    #[serde(default = "zero")]
    pub lambda: Num,
    pub psi: PsiConfig,
    pub a: Num,
    #[serde(rename = "T")]
    pub t_end: Num,
    pub alphas: Vec<Num>,
    pub betas: Vec<Num>,
    pub etas: Vec<Num>,
    pub xi: Num,
    pub f: String,
    pub g: String,
    #[serde(default, rename = "V")]
    pub v: VConfig,
    #[serde(default)]
    pub lipschitz: Option<[String; 3]>,
    #[serde(default)]
    pub g_lipschitz: Option<Num>,
    #[serde(default)]
    pub growth: Option<GrowthConfig>,
    #[serde(default)]
    pub bound_p: Option<String>,
    #[serde(default)]
    pub mode: Fidelity,
}

fn zero() -> Num {
    Num::Value(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: DEFAULT_N }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: Num,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> Num {
    Num::Value(DEFAULT_TOL)
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: default_tol(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    #[serde(default = "default_zeta_range")]
    pub range: [Num; 2],
    #[serde(default = "default_zeta_samples")]
    pub samples: usize,
}

fn default_zeta_range() -> [Num; 2] {
    [Num::Value(0.0), Num::Expr("7/6".into())]
}

fn default_zeta_samples() -> usize {
    crate::criteria::ZETA_SAMPLES
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig {
            range: default_zeta_range(),
            samples: default_zeta_samples(),
        }
    }
}

impl ZetaConfig {
    pub fn bounds(&self) -> Result<(f64, f64), ConfigError> {
        let lo = self.range[0].eval("zeta.range[0]")?;
        let hi = self.range[1].eval("zeta.range[1]")?;
        if !(lo < hi) {
            return Err(field_err("zeta.range", format!("empty range [{lo}, {hi}]")));
        }
        if self.samples < 512 {
            return Err(field_err("zeta.samples", "at least 512 samples are required"));
        }
        Ok((lo, hi))
    }
}

/// One perturbation shape run at several amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// z in `(t, eps, psi)`.
    pub z: String,
    pub eps: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub perturbations: Vec<PerturbationConfig>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let eps = vec![Num::Value(1e-2), Num::Value(1e-3)];
        StabilityConfig {
            perturbations: vec![
                PerturbationConfig {
                    z: "eps".into(),
                    eps: eps.clone(),
                },
                PerturbationConfig {
                    z: "eps*sin(psi)".into(),
                    eps,
                },
            ],
        }
    }
}

impl StabilityConfig {
    pub fn perturbations(&self) -> Result<Vec<Perturbation>, ConfigError> {
        let mut out = Vec::new();
        for (i, p) in self.perturbations.iter().enumerate() {
            let field = format!("stability.perturbations[{i}]");
            let z = compile(&p.z, &Z_VARS, &format!("{field}.z"))?;
            for eps in nums(&p.eps, &format!("{field}.eps"))? {
                out.push(Perturbation::new(z.clone(), eps));
            }
        }
        Ok(out)
    }
}

/// Cartesian product of ψ families, ρ values and λ values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub families: Vec<String>,
    pub rho: Vec<Num>,
    pub lambda: Vec<Num>,
}

/// One member of a sweep.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub description: Option<String>,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub zeta: ZetaConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    /// Published values to compare the computed constants against.
    #[serde(default)]
    pub published: BTreeMap<String, f64>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub exec: ExecMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiConfig {
    scenarios: BTreeMap<String, RunConfig>,
}

fn parse_json<T: serde::de::DeserializeOwned>(src: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(src);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Json {
            field,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl RunConfig {
    pub fn from_json(src: &str) -> Result<Self, ConfigError> {
        parse_json(src)
    }

    /// A built-in scenario by name.
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        match BUILTIN.iter().find(|(n, _)| *n == name) {
            Some((_, src)) => Self::from_json(src),
            None => Err(ConfigError::UnknownScenario {
                name: name.into(),
                available: BUILTIN.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
            }),
        }
    }

    /// Read a config file holding either one run or `{"scenarios": {name: run, ..}}`.
    pub fn load(path: &Path, scenario: Option<&str>) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_source(&src, scenario)
    }

    pub fn from_source(src: &str, scenario: Option<&str>) -> Result<Self, ConfigError> {
        let probe: serde_json::Value = parse_json(src)?;
        if probe.get("scenarios").is_none() {
            return Self::from_json(src);
        }
        let mut multi: MultiConfig = parse_json(src)?;
        let available = || multi_names(&probe);
        let name = match scenario {
            Some(n) => n.to_string(),
            None if multi.scenarios.len() == 1 => multi.scenarios.keys().next().cloned().unwrap_or_default(),
            None => {
                return Err(ConfigError::Usage(format!(
                    "config holds several scenarios; pick one with --scenario ({})",
                    available()
                )))
            }
        };
        multi.scenarios.remove(&name).ok_or_else(|| ConfigError::UnknownScenario {
            name,
            available: available(),
        })
    }

    pub fn solve_options(&self) -> Result<SolveOptions, ConfigError> {
        let tol = self.solver.tol.eval("solver.tol")?;
        if !(tol > 0.0) {
            return Err(field_err("solver.tol", "must be positive"));
        }
        Ok(SolveOptions {
            tol,
            max_iter: self.solver.max_iter,
        })
    }

    /// Materialize the problem and run its structural validation.
    pub fn build_spec(&self) -> Result<(ProblemSpec, Vec<String>), BuildError> {
        let p = &self.problem;
        let order = FracOrder::new(p.nu.eval("problem.nu")?, p.beta.eval("problem.beta")?)?;
        let a = p.a.eval("problem.a")?;
        let t_end = p.t_end.eval("problem.T")?;
        let psi = PsiFunction::new(p.psi.kind()?, a, t_end)?;
        let t = ["t"];
        let v = match &p.v {
            VConfig::Identity => VOperator::Identity,
            VConfig::TimeWarp(w) => VOperator::TimeWarp(compile(w, &t, "problem.V.time-warp")?),
        };
        let lipschitz = match &p.lipschitz {
            Some(l) => Some([
                compile(&l[0], &t, "problem.lipschitz[0]")?,
                compile(&l[1], &t, "problem.lipschitz[1]")?,
                compile(&l[2], &t, "problem.lipschitz[2]")?,
            ]),
            None => None,
        };
        let growth = match &p.growth {
            Some(g) => {
                let pf = |i: usize| compile(&g.p[i], &t, &format!("problem.growth.p[{i}]"));
                let phi = |i: usize| compile(&g.phi[i], &["r"], &format!("problem.growth.phi[{i}]"));
                Some(Growth {
                    p: [pf(0)?, pf(1)?, pf(2)?],
                    phi: [phi(0)?, phi(1)?, phi(2)?],
                })
            }
            None => None,
        };
        let spec = ProblemSpec {
            order,
            lambda: p.lambda.eval("problem.lambda")?,
            psi,
            alphas: nums(&p.alphas, "problem.alphas")?,
            betas: nums(&p.betas, "problem.betas")?,
            etas: nums(&p.etas, "problem.etas")?,
            xi: p.xi.eval("problem.xi")?,
            f: compile(&p.f, &["t", "u", "v", "w"], "problem.f")?,
            g: compile(&p.g, &["u"], "problem.g")?,
            v,
            lipschitz,
            g_lipschitz: p.g_lipschitz.as_ref().map(|n| n.eval("problem.g_lipschitz")).transpose()?,
            growth,
            bound_p: p.bound_p.as_deref().map(|s| compile(s, &t, "problem.bound_p")).transpose()?,
            fidelity: p.mode,
        };
        let notes = spec.validate()?;
        Ok((spec, notes))
    }

    /// The sweep members in (family, ρ, λ) order, or just this run without a sweep.
    pub fn variants(&self) -> Result<Vec<Variant>, ConfigError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![Variant {
                label: String::new(),
                config: self.clone(),
            }]);
        };
        let rhos = nums(&sweep.rho, "sweep.rho")?;
        let lambdas = nums(&sweep.lambda, "sweep.lambda")?;
        let mut out = Vec::new();
        for (i, family) in sweep.families.iter().enumerate() {
            for (&rho, rho_src) in rhos.iter().zip(&sweep.rho) {
                let psi = match family.as_str() {
                    "power-exponential" => PsiConfig::PowerExponential { rho: rho_src.clone() },
                    "tangent" => PsiConfig::Tangent { rho: rho_src.clone() },
                    other => {
                        return Err(field_err(
                            format!("sweep.families[{i}]"),
                            format!("`{other}` has no rho parameter (use power-exponential or tangent)"),
                        ))
                    }
                };
                for (&lam, lam_src) in lambdas.iter().zip(&sweep.lambda) {
                    let mut config = self.clone();
                    config.sweep = None;
                    config.problem.psi = psi.clone();
                    config.problem.lambda = lam_src.clone();
                    out.push(Variant {
                        label: format!("{family}_rho{rho}_lambda{lam}"),
                        config,
                    });
                }
            }
        }
        Ok(out)
    }
}

fn multi_names(v: &serde_json::Value) -> String {
    v.get("scenarios")
        .and_then(|s| s.as_object())
        .map(|o| o.keys().cloned().collect::<Vec<_>>().join(", "))
        .unwrap_or_default()
}
