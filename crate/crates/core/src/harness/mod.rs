//! Experiment configs, the `verify` battery, and report / CSV emission.

mod catalog;
mod config;
mod golden;
mod output;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{catalog, catalog_domains, Catalog, DomainEntry, PresetEntry};
pub use config::{
    parse_expr, CoefficientsConfig, Discretization, ExperimentConfig, Outputs, Setup, Task,
    TaskParams,
};
pub use golden::{
    calibrate_constants, golden_constants, golden_key, recompute_golden, CalibratedConstants,
    GoldenConstants, BOUND_SHIFTS, GOLDEN_JSON,
};
pub use output::{field_csv, sweep_csv, trace_csv};
pub use verify::{run_verify, CheckRecord, CheckStatus, Summary, VerifyReport, CHECKS};

use crate::elliptic::{
    dirichlet_via_ball, solve_full_problem, EllipticError, GridFunction, ShiftedSolver,
};
use crate::linalg::SolverOptions;
use crate::operator::OperatorError;
use crate::semigroup::{evolve_trace, sector_sweep, NormOptions, SemigroupError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`{}: {message}", column.map(|c| format!(" (column {c})")).unwrap_or_default())]
    Config {
        path: String,
        message: String,
        column: Option<usize>,
    },
    #[error("cannot write {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Config {
            path: path.into(),
            message: message.into(),
            column: None,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config { .. })
    }
}

/// Generator for one named randomized check: the stream is a hash of the
/// name, so checks never share or shift each other's draws.
pub fn rng_for(seed: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    rng.set_stream(h);
    rng
}

/// Result of [`run`]: a JSON-serializable report plus the CSV payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub task: Task,
    pub pass: bool,
    pub summary: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
    #[serde(skip)]
    pub csv: Option<String>,
}

impl RunOutcome {
    pub fn report_json(&self) -> String {
        match &self.verify {
            Some(v) => v.to_json(),
            None => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
        }
    }
}

fn num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// Executes the configured task. `jobs` bounds the verify work pool.
pub fn run(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let setup = cfg.setup()?;
    let p = &cfg.params;
    let grid = &setup.grid;
    let mut summary = BTreeMap::new();
    summary.insert("n_interior".into(), grid.n_interior().into());
    summary.insert("n_boundary".into(), grid.n_boundary().into());
    summary.insert("h".into(), num(grid.h()));
    summary.insert(
        "monotone".into(),
        serde_json::to_value(setup.op.monotone()).expect("enum serializes"),
    );
    let sample_f = |path: &str, text: &str| -> Result<GridFunction, HarnessError> {
        let e = parse_expr(path, text)?;
        Ok(GridFunction::sample(grid, |x, y| e.eval(x, y))?)
    };
    let sample_g = |text: &str| -> Result<Vec<f64>, HarnessError> {
        let e = parse_expr("params.g", text)?;
        Ok(grid.sample_boundary(|x, y| e.eval(x, y)))
    };
    let outcome = match cfg.task {
        Task::SolveElliptic => {
            let f = sample_f("params.f", &p.f)?;
            let g = sample_g(&p.g)?;
            let sol = if p.mu == 0.0 {
                solve_full_problem(&setup.op, &f, &g)?
            } else {
                let s = ShiftedSolver::new(&setup.op, p.mu, SolverOptions::default())?;
                let u0 = s.solve(&f)?;
                let u1 = s.solve_dirichlet(&g)?;
                let u: Vec<f64> =
                    u0.u.values()
                        .iter()
                        .zip(u1.u.values())
                        .map(|(a, b)| a + b)
                        .collect();
                crate::elliptic::EllipticSolution {
                    u: GridFunction::new(u, grid.h())?.with_boundary(g.clone())?,
                    residual_norm: u0.residual_norm.max(u1.residual_norm),
                    method: u0.method,
                    iterations: u0.iterations + u1.iterations,
                }
            };
            summary.insert("residual_norm".into(), num(sol.residual_norm));
            summary.insert("sup_norm".into(), num(sol.u.sup_norm()));
            RunOutcome {
                task: cfg.task,
                pass: true,
                summary,
                verify: None,
                csv: Some(field_csv(grid, &sol.u)),
            }
        }
        Task::SolveDirichlet => {
            let f = sample_f("params.f", &p.f)?;
            let g = sample_g(&p.g)?;
            let direct = solve_full_problem(&setup.op, &f, &g)?;
            let u = if p.via_ball {
                let b = dirichlet_via_ball(
                    grid,
                    &setup.field,
                    cfg.discretization.scheme,
                    &f,
                    &g,
                    p.margin,
                )?;
                let diff = b
                    .solution
                    .u
                    .values()
                    .iter()
                    .zip(direct.u.values())
                    .map(|(a, c)| (a - c).abs())
                    .fold(0.0, f64::max);
                summary.insert("ball_interior".into(), b.ball_interior.into());
                summary.insert("ball_vs_direct".into(), num(diff));
                summary.insert("residual_norm".into(), num(b.solution.residual_norm));
                b.solution.u
            } else {
                summary.insert("residual_norm".into(), num(direct.residual_norm));
                direct.u
            };
            summary.insert("sup_norm".into(), num(u.sup_norm()));
            RunOutcome {
                task: cfg.task,
                pass: true,
                summary,
                verify: None,
                csv: Some(field_csv(grid, &u)),
            }
        }
        Task::ResolventSweep => {
            let opts = NormOptions {
                probes: p.probes,
                seed: cfg.seed,
                ..Default::default()
            };
            let rep = sector_sweep(&setup.op, &p.sweep, opts);
            summary.insert("m_measured".into(), num(rep.m_measured));
            summary.insert("omega".into(), num(rep.omega));
            summary.insert("failures".into(), rep.failures.into());
            summary.insert("max_angle_deg".into(), num(rep.max_angle_deg));
            summary.insert(
                "theta_deg".into(),
                rep.theta_deg.map_or(serde_json::Value::Null, num),
            );
            RunOutcome {
                task: cfg.task,
                pass: rep.failures == 0 && rep.m_measured.is_finite(),
                summary,
                verify: None,
                csv: Some(sweep_csv(&rep)),
            }
        }
        Task::Evolve => {
            let u0 = sample_f("params.u0", &p.u0)?;
            let method = p.evolution_method()?;
            let trace = evolve_trace(&setup.op, &u0, &p.times, method)?;
            summary.insert(
                "final_sup_norm".into(),
                num(trace.snapshots.last().map_or(0.0, |s| s.sup_norm())),
            );
            RunOutcome {
                task: cfg.task,
                pass: true,
                summary,
                verify: None,
                csv: Some(trace_csv(grid, &trace)),
            }
        }
        Task::Verify => {
            let report = run_verify(cfg, &setup, jobs)?;
            RunOutcome {
                task: cfg.task,
                pass: report.summary.fail == 0,
                summary,
                verify: Some(report),
                csv: None,
            }
        }
    };
    Ok(outcome)
}

/// Writes the report and CSV to the configured paths, `out` overriding the
/// CSV path (or the report path for `verify`). Returns the written paths.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    outcome: &RunOutcome,
    out: Option<&Path>,
) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let mut report = cfg.outputs.report.clone();
    let mut field = cfg.outputs.field.clone();
    if let Some(o) = out {
        if outcome.task == Task::Verify {
            report = Some(o.to_path_buf());
        } else {
            field = Some(o.to_path_buf());
        }
    }
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    };
    if let (Some(path), Some(csv)) = (&field, &outcome.csv) {
        write(path, csv)?;
        written.push(path.clone());
    }
    if let Some(path) = &report {
        write(path, &outcome.report_json())?;
        written.push(path.clone());
    }
    Ok(written)
}
