use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::coeff::{CoefficientExprs, CoefficientField, CoefficientSource, Preset};
use crate::expr::{parse_coeff, CoeffExpr};
use crate::grid::{build_domain, DomainGrid, ShapeSpec};
use crate::operator::{assemble, DiscreteOperator, Scheme};
use crate::semigroup::{EvolutionMethod, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SolveElliptic,
    SolveDirichlet,
    ResolventSweep,
    Evolve,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SolveElliptic => "solve_elliptic",
            Task::SolveDirichlet => "solve_dirichlet",
            Task::ResolventSweep => "resolvent_sweep",
            Task::Evolve => "evolve",
            Task::Verify => "verify",
        }
    }
}

/// Either a named preset or explicit expressions. Omitted `a12`, `b1`,
/// `b2` and `c` default to `"0"`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a11: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a12: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a22: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl CoefficientsConfig {
    pub fn preset(p: Preset) -> Self {
        CoefficientsConfig {
            preset: Some(p),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<CoefficientExprs, HarnessError> {
        let explicit = [&self.a11, &self.a12, &self.a22, &self.b1, &self.b2, &self.c];
        if let Some(p) = self.preset {
            if explicit.iter().any(|e| e.is_some()) || self.lambda.is_some() {
                return Err(HarnessError::config(
                    "coefficients",
                    "a preset cannot be combined with explicit coefficients",
                ));
            }
            return Ok(p.exprs());
        }
        let req = |name: &str, v: &Option<String>| -> Result<String, HarnessError> {
            v.clone().ok_or_else(|| {
                HarnessError::config(format!("coefficients.{name}"), "missing expression")
            })
        };
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "0".into());
        let src = CoefficientSource {
            a11: req("a11", &self.a11)?,
            a12: opt(&self.a12),
            a22: req("a22", &self.a22)?,
            b1: opt(&self.b1),
            b2: opt(&self.b2),
            c: opt(&self.c),
        };
        for (name, text) in [
            ("a11", &src.a11),
            ("a12", &src.a12),
            ("a22", &src.a22),
            ("b1", &src.b1),
            ("b2", &src.b2),
            ("c", &src.c),
        ] {
            parse_expr(&format!("coefficients.{name}"), text)?;
        }
        let lambda = self.lambda.ok_or_else(|| {
            HarnessError::config("coefficients.lambda", "missing ellipticity constant")
        })?;
        CoefficientExprs::parse(&src, lambda)
            .map_err(|e| HarnessError::config("coefficients.lambda", e.to_string()))
    }
}

/// Parses an expression, reporting errors against `path`.
pub fn parse_expr(path: &str, text: &str) -> Result<CoeffExpr, HarnessError> {
    parse_coeff(text).map_err(|e| HarnessError::Config {
        path: path.to_string(),
        message: e.to_string(),
        column: Some(e.column()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

fn default_h() -> f64 {
    1.0 / 16.0
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            h: default_h(),
            scheme: Scheme::default(),
        }
    }
}

/// Task parameters; each task reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    /// Right-hand side `f` of `−A u = f`.
    pub f: String,
    /// Boundary data `g`.
    pub g: String,
    /// Shift `μ` in `(μ − A)u = f`.
    pub mu: f64,
    /// Route `solve_dirichlet` through the enclosing ball.
    pub via_ball: bool,
    pub margin: f64,
    pub sweep: SweepConfig,
    pub probes: usize,
    /// Initial datum of `evolve`.
    pub u0: String,
    pub times: Vec<f64>,
    pub method: String,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            f: "0".into(),
            g: "0".into(),
            mu: 0.0,
            via_ball: true,
            margin: 1.0,
            sweep: SweepConfig::default(),
            probes: 32,
            u0: "sin(pi*x)*sin(pi*y)".into(),
            times: vec![0.1],
            method: "yosida:64".into(),
        }
    }
}

impl TaskParams {
    pub fn evolution_method(&self) -> Result<EvolutionMethod, HarnessError> {
        self.method
            .parse()
            .map_err(|e: crate::semigroup::SemigroupError| {
                HarnessError::config("params.method", e.to_string())
            })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// JSON report path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// CSV path for field data, sweeps and traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: ShapeSpec,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub discretization: Discretization,
    pub task: Task,
    #[serde(default)]
    pub params: TaskParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

/// Domain, coefficients and operator built from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: DomainGrid,
    pub exprs: CoefficientExprs,
    pub field: CoefficientField,
    pub op: DiscreteOperator,
}

impl ExperimentConfig {
    pub fn new(domain: ShapeSpec, preset: Preset, task: Task) -> Self {
        ExperimentConfig {
            domain,
            coefficients: CoefficientsConfig::preset(preset),
            discretization: Discretization::default(),
            task,
            params: TaskParams::default(),
            seed: 0,
            outputs: Outputs::default(),
        }
    }

    /// Parses JSON, reporting the path of the first offending field.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::config(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without building the grid.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.coefficients.resolve()?;
        let h = self.discretization.h;
        if !(h.is_finite() && h > 0.0) {
            return Err(HarnessError::config(
                "discretization.h",
                format!("mesh width must be positive, got {h}"),
            ));
        }
        self.domain
            .validate()
            .map_err(|e| HarnessError::config("domain", e.to_string()))?;
        parse_expr("params.f", &self.params.f)?;
        parse_expr("params.g", &self.params.g)?;
        parse_expr("params.u0", &self.params.u0)?;
        if self.task == Task::Evolve {
            self.params.evolution_method()?;
            if self
                .params
                .times
                .iter()
                .any(|t| !(t.is_finite() && *t >= 0.0))
            {
                return Err(HarnessError::config(
                    "params.times",
                    "times must be finite and ≥ 0",
                ));
            }
        }
        if !(self.params.mu.is_finite() && self.params.mu >= 0.0) {
            return Err(HarnessError::config("params.mu", "shift must be ≥ 0"));
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<Setup, HarnessError> {
        let exprs = self.coefficients.resolve()?;
        let grid = build_domain(&self.domain, self.discretization.h)
            .map_err(|e| HarnessError::config("discretization.h", e.to_string()))?;
        let field = exprs
            .sample(&grid)
            .map_err(|e| HarnessError::config("coefficients", e.to_string()))?;
        let op = assemble(&grid, &field, self.discretization.scheme)?;
        Ok(Setup {
            grid,
            exprs,
            field,
            op,
        })
    }
}
