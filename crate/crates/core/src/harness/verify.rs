use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    calibrate_constants, golden_constants, golden_key, rng_for, CalibratedConstants,
    CoefficientsConfig, ExperimentConfig, HarnessError, Setup, BOUND_SHIFTS,
};
use crate::coeff::{
    check_ellipticity, divergence_reduction, extend_with_margin, mollify, sym2_min_eigenvalue,
    CoefficientField, MollifierSpec,
};
use crate::elliptic::{
    aleksandrov_check, dirichlet_via_ball, holder_seminorm, solve_full_problem, BumpField,
    GridFunction, ShiftedSolver,
};
use crate::grid::{build_domain, DomainGrid, ShapeSpec};
use crate::linalg::{LinearSystem, SolverOptions};
use crate::operator::{assemble, truncation_errors, DiscreteOperator, Jet, Scheme};
use crate::semigroup::{
    compactness_proxy, complex_max_with, dissipativity_check, eigen_reference,
    evolve_backward_euler, gradient_bound_probe, is_irreducible, positivity_check, sector_sweep,
    strict_positivity_check, yosida_evolve, NormOptions, SweepConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Property the check exercises; every anchor is listed in the
    /// property map of the guide.
    pub anchor: String,
    pub status: CheckStatus,
    pub measured: BTreeMap<String, Value>,
    pub tolerances: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub domain: ShapeSpec,
    pub coefficients: CoefficientsConfig,
    pub h: f64,
    pub scheme: Scheme,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

struct Outcome {
    status: CheckStatus,
    measured: BTreeMap<String, Value>,
    tolerances: BTreeMap<String, Value>,
    message: Option<String>,
}

impl Outcome {
    fn new(pass: bool) -> Self {
        Outcome {
            status: if pass {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            message: None,
        }
    }

    fn skipped(reason: impl Into<String>) -> Self {
        Outcome {
            message: Some(reason.into()),
            status: CheckStatus::Skipped,
            ..Outcome::new(true)
        }
    }

    fn m(mut self, key: &str, v: f64) -> Self {
        self.measured.insert(key.into(), num(v));
        self
    }

    fn mv(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.measured.insert(key.into(), v.into());
        self
    }

    fn tol(mut self, key: &str, v: f64) -> Self {
        self.tolerances.insert(key.into(), num(v));
        self
    }

    fn msg(mut self, m: impl Into<String>) -> Self {
        self.message = Some(m.into());
        self
    }
}

type CheckResult = Result<Outcome, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Largest grid refined to inside the battery.
const REFINE_LIMIT: usize = 40_000;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    s: &'a Setup,
    constants: OnceLock<Result<(CalibratedConstants, String), String>>,
}

struct Level {
    grid: DomainGrid,
    field: CoefficientField,
    op: DiscreteOperator,
}

impl Ctx<'_> {
    fn h(&self) -> f64 {
        self.s.grid.h()
    }

    fn level(&self, h: f64) -> Result<Option<Level>, String> {
        let grid = match build_domain(&self.cfg.domain, h) {
            Ok(g) => g,
            Err(_) => return Ok(None),
        };
        if grid.n_interior() > REFINE_LIMIT {
            return Ok(None);
        }
        let field = self.s.exprs.sample(&grid).map_err(err)?;
        let op = assemble(&grid, &field, self.cfg.discretization.scheme).map_err(err)?;
        Ok(Some(Level { grid, field, op }))
    }

    fn bumps(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<BumpField> {
        let bbox = self.s.grid.geometry().bbox();
        (0..n).map(|_| BumpField::random(rng, bbox)).collect()
    }

    fn sample(grid: &DomainGrid, b: &BumpField) -> GridFunction {
        GridFunction::sample(grid, |x, y| b.eval(x, y)).expect("bumps are finite")
    }

    /// Frozen constants when the config matches a golden entry, otherwise
    /// measured once on the grid of width `2h` (or `h`).
    fn constants(&self) -> Result<(CalibratedConstants, String), String> {
        self.constants
            .get_or_init(|| {
                let g = golden_constants();
                if let Some(p) = self.cfg.coefficients.preset {
                    if let Some(key) = golden_key(&self.cfg.domain, p) {
                        if self.cfg.discretization.scheme == g.scheme {
                            if let Some(c) = g.constants.get(&key) {
                                return Ok((*c, format!("golden {key} at h={}", g.h)));
                            }
                        }
                    }
                }
                let mut h = 2.0 * self.h();
                if build_domain(&self.cfg.domain, h).is_err() {
                    h = self.h();
                }
                let mut rng = rng_for(g.seed, "calibration");
                calibrate_constants(
                    &self.cfg.domain,
                    &self.s.exprs,
                    self.cfg.discretization.scheme,
                    h,
                    100,
                    &mut rng,
                )
                .map(|c| (c, format!("measured at h={h}")))
                .map_err(err)
            })
            .clone()
    }

    fn require_certified(&self) -> Option<Outcome> {
        (!self.s.op.is_certified()).then(|| Outcome::skipped("operator is not certified monotone"))
    }
}

pub struct CheckDef {
    pub name: &'static str,
    pub anchor: &'static str,
    run: fn(&Ctx, &mut ChaCha8Rng) -> CheckResult,
}

/// The battery, in report order.
pub const CHECKS: &[CheckDef] = &[
    CheckDef {
        name: "ellipticity",
        anchor: "uniform ellipticity",
        run: ellipticity,
    },
    CheckDef {
        name: "monotonicity",
        anchor: "monotone discretization",
        run: monotonicity,
    },
    CheckDef {
        name: "consistency_order",
        anchor: "interior consistency",
        run: consistency_order,
    },
    CheckDef {
        name: "divergence_reduction",
        anchor: "divergence-form rewrite",
        run: divergence,
    },
    CheckDef {
        name: "mollification",
        anchor: "mollified coefficients",
        run: mollification,
    },
    CheckDef {
        name: "poisson_round_trip",
        anchor: "closed injective realization",
        run: round_trip,
    },
    CheckDef {
        name: "uniform_bound",
        anchor: "uniform a priori bound",
        run: uniform_bound,
    },
    CheckDef {
        name: "harmonic_maximum_principle",
        anchor: "maximum principle for harmonic functions",
        run: harmonic_max,
    },
    CheckDef {
        name: "ball_equivalence",
        anchor: "ball extension construction",
        run: ball_equivalence,
    },
    CheckDef {
        name: "aleksandrov",
        anchor: "Aleksandrov maximum principle",
        run: aleksandrov,
    },
    CheckDef {
        name: "holder_stability",
        anchor: "Hölder regularity",
        run: holder,
    },
    CheckDef {
        name: "dissipativity",
        anchor: "m-dissipativity",
        run: dissipativity,
    },
    CheckDef {
        name: "resolvent_positivity",
        anchor: "resolvent positivity",
        run: resolvent_positivity,
    },
    CheckDef {
        name: "complex_maximum_principle",
        anchor: "complex maximum principle",
        run: complex_max,
    },
    CheckDef {
        name: "resolvent_identity",
        anchor: "resolvent identity",
        run: resolvent_identity,
    },
    CheckDef {
        name: "sectoriality",
        anchor: "sectorial resolvent bound",
        run: sectoriality,
    },
    CheckDef {
        name: "yosida_positivity",
        anchor: "Yosida approximation",
        run: yosida_positivity,
    },
    CheckDef {
        name: "yosida_convergence",
        anchor: "Yosida approximation",
        run: yosida_convergence,
    },
    CheckDef {
        name: "semigroup_property",
        anchor: "semigroup property",
        run: semigroup_property,
    },
    CheckDef {
        name: "strict_positivity",
        anchor: "strict positivity",
        run: strict_positivity,
    },
    CheckDef {
        name: "gradient_bound",
        anchor: "Lipschitz domain of the generator",
        run: gradient_bound,
    },
    CheckDef {
        name: "compactness",
        anchor: "compact resolvent",
        run: compactness,
    },
];

/// Runs every check in a work pool of `jobs` threads (rayon's default if
/// `None`); the report lists checks in [`CHECKS`] order.
pub fn run_verify(
    cfg: &ExperimentConfig,
    setup: &Setup,
    jobs: Option<usize>,
) -> Result<VerifyReport, HarnessError> {
    let ctx = Ctx {
        cfg,
        s: setup,
        constants: OnceLock::new(),
    };
    let body = || -> Vec<CheckRecord> {
        CHECKS
            .par_iter()
            .map(|c| {
                let mut rng = rng_for(cfg.seed, c.name);
                let out = (c.run)(&ctx, &mut rng).unwrap_or_else(|e| Outcome::new(false).msg(e));
                CheckRecord {
                    name: c.name.into(),
                    anchor: c.anchor.into(),
                    status: out.status,
                    measured: out.measured,
                    tolerances: out.tolerances,
                    message: out.message,
                }
            })
            .collect()
    };
    let checks = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?
            .install(body),
        None => body(),
    };
    let count = |s: CheckStatus| checks.iter().filter(|c| c.status == s).count();
    let summary = Summary {
        pass: count(CheckStatus::Pass),
        fail: count(CheckStatus::Fail),
        skipped: count(CheckStatus::Skipped),
    };
    Ok(VerifyReport {
        seed: cfg.seed,
        domain: cfg.domain.clone(),
        coefficients: cfg.coefficients.clone(),
        h: setup.grid.h(),
        scheme: cfg.discretization.scheme,
        checks,
        summary,
    })
}

fn ellipticity(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let cert = check_ellipticity(&c.s.field, &c.s.grid, 64).map_err(err)?;
    Ok(Outcome::new(cert.pass)
        .m("min_eigenvalue", cert.min_eigenvalue)
        .m("min_quadform", cert.min_quadform)
        .mv("worst_node", cert.worst_node)
        .tol("lambda", cert.lambda))
}

fn monotonicity(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let r = c.s.op.report().ok_or("operator has no certificate")?;
    Ok(Outcome::new(r.monotone)
        .m("min_offdiag", r.min_offdiag)
        .m("slack", r.slack)
        .mv("worst_node", r.worst_node)
        .tol("min_offdiag", 0.0))
}

/// `sin(πx)·sin(πy)` with derivatives.
fn probe_jet(x: f64, y: f64) -> Jet {
    let pi = std::f64::consts::PI;
    let (sx, cx, sy, cy) = (
        (pi * x).sin(),
        (pi * x).cos(),
        (pi * y).sin(),
        (pi * y).cos(),
    );
    Jet {
        u: sx * sy,
        ux: pi * cx * sy,
        uy: pi * sx * cy,
        uxx: -pi * pi * sx * sy,
        uxy: pi * pi * cx * cy,
        uyy: -pi * pi * sx * sy,
    }
}

fn consistency_order(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let h = c.h();
    let levels: Vec<Level> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&hh| c.level(hh))
        .collect::<Result<Option<Vec<_>>, _>>()?
        .unwrap_or_default();
    if levels.len() < 3 {
        return Ok(Outcome::skipped("refined grids too large"));
    }
    // fixed physical node set: deep nodes of the coarsest grid
    let key = |x: f64, y: f64| ((x / h).round() as i64, (y / h).round() as i64);
    let coarse: HashSet<(i64, i64)> =
        truncation_errors(&levels[0].op, &levels[0].field, probe_jet, 2)
            .iter()
            .map(|&(k, _)| {
                let n = levels[0].grid.node(k);
                key(n.x, n.y)
            })
            .collect();
    if coarse.is_empty() {
        return Ok(Outcome::skipped("no interior node two layers deep"));
    }
    let errs: Vec<f64> = levels
        .iter()
        .map(|l| {
            truncation_errors(&l.op, &l.field, probe_jet, 2)
                .into_iter()
                .filter(|&(k, _)| {
                    let n = l.grid.node(k);
                    let (i, j) = (n.x / h, n.y / h);
                    (i - i.round()).abs() < 1e-9
                        && (j - j.round()).abs() < 1e-9
                        && coarse.contains(&key(n.x, n.y))
                })
                .map(|e| e.1)
                .fold(0.0, f64::max)
        })
        .collect();
    let drift = c.s.field.max_drift() > 0.0;
    let expected = if c.cfg.discretization.scheme == Scheme::UpwindFirstOrder && drift {
        0.9
    } else {
        1.9
    };
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let exact = errs.iter().all(|&e| e < 1e-10);
    let pass = exact || orders.iter().all(|&o| o >= expected);
    Ok(Outcome::new(pass)
        .m("error_h", errs[0])
        .m("error_h2", errs[1])
        .m("error_h4", errs[2])
        .m("order_1", orders[0])
        .m("order_2", orders[1])
        .tol("min_order", expected))
}

fn divergence(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let e = &c.s.exprs;
    let smooth = [&e.a11, &e.a12, &e.a22].iter().all(|x| x.is_smooth());
    let errors = |l: &Level| -> (f64, usize) {
        let r = divergence_reduction(&l.field, &l.grid, 1e3);
        let err = l
            .grid
            .interior_nodes()
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let d11 = e.a11.eval_with_gradient(n.x, n.y);
                let d12 = e.a12.eval_with_gradient(n.x, n.y);
                let d22 = e.a22.eval_with_gradient(n.x, n.y);
                let b1 = l.field.b1()[k] - d11.1 - d12.2;
                let b2 = l.field.b2()[k] - d12.1 - d22.2;
                (r.b1[k] - b1).abs().max((r.b2[k] - b2).abs())
            })
            .fold(0.0, f64::max);
        (err, r.warnings.len())
    };
    let coarse = Level {
        grid: c.s.grid.clone(),
        field: c.s.field.clone(),
        op: c.s.op.clone(),
    };
    let (e0, w0) = errors(&coarse);
    let Some(fine) = c.level(c.h() / 2.0)? else {
        return Ok(Outcome::skipped("refined grid too large"));
    };
    let (e1, _) = errors(&fine);
    let order = (e0 / e1).log2();
    let out = Outcome::new(true)
        .m("error_h", e0)
        .m("error_h2", e1)
        .m("order", order)
        .mv("warnings", w0);
    if !smooth {
        return Ok(out.msg("non-smooth coefficients: order not asserted"));
    }
    let pass = e0 < 1e-10 || order >= 1.9;
    Ok(Outcome {
        status: Outcome::new(pass).status,
        ..out
    }
    .tol("min_order", 1.9))
}

fn mollification(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let ext = extend_with_margin(&c.s.field, &c.s.grid, 1.0).map_err(err)?;
    let half = 0.5 * c.s.field.lambda();
    let mut out = Outcome::new(true);
    let mut pass = true;
    let mut prev = f64::INFINITY;
    for k in [4u32, 8, 16] {
        let m = mollify(&ext, MollifierSpec { k }).map_err(err)?;
        let min_eig = (0..m.n_nodes())
            .map(|i| {
                let [[p, q], [_, r]] = m.matrix(i);
                sym2_min_eigenvalue(p, q, r)
            })
            .fold(f64::INFINITY, f64::min);
        let dist = crate::coeff::diffusion_distance(&c.s.field, &m);
        pass &= min_eig >= half - 1e-12;
        // a kernel of radius ≤ h touches only its center node
        if 1.0 / k as f64 > c.h() {
            pass &= dist < prev;
            prev = dist;
        } else {
            pass &= dist <= 1e-12;
        }
        out = out
            .m(&format!("min_eigenvalue_k{k}"), min_eig)
            .m(&format!("distance_k{k}"), dist);
    }
    Ok(Outcome {
        status: Outcome::new(pass).status,
        ..out
    }
    .tol("min_eigenvalue", half))
}

fn round_trip(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let op = &c.s.op;
    let zero = vec![0.0; c.s.grid.n_boundary()];
    let fs: Vec<GridFunction> = c
        .bumps(rng, 5)
        .iter()
        .map(|b| Ctx::sample(&c.s.grid, b))
        .collect();
    let mut worst: f64 = 0.0;
    for mu in BOUND_SHIFTS {
        let s = ShiftedSolver::new(op, mu, SolverOptions::default()).map_err(err)?;
        for f in &fs {
            let u = s.solve(f).map_err(err)?;
            let au = op.apply(u.u.values(), &zero).map_err(err)?;
            let r = (0..op.n())
                .map(|i| (mu * u.u.values()[i] - au[i] - f.values()[i]).abs())
                .fold(0.0, f64::max);
            worst = worst.max(r / f.sup_norm().max(f64::MIN_POSITIVE));
        }
    }
    Ok(Outcome::new(worst <= 1e-10)
        .m("relative_residual", worst)
        .tol("relative_residual", 1e-10))
}

fn uniform_bound(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let (cal, source) = c.constants()?;
    let fs: Vec<GridFunction> = c
        .bumps(rng, 20)
        .iter()
        .map(|b| Ctx::sample(&c.s.grid, b))
        .collect();
    let mut measured: f64 = 0.0;
    for mu in BOUND_SHIFTS {
        let s = ShiftedSolver::new(&c.s.op, mu, SolverOptions::default()).map_err(err)?;
        for f in fs.iter().filter(|f| f.l2_norm() > 0.0) {
            measured = measured.max(s.solve(f).map_err(err)?.u.sup_norm() / f.l2_norm());
        }
    }
    let allowed = 1.25 * cal.uniform_bound;
    Ok(Outcome::new(measured <= allowed)
        .m("constant", measured)
        .m("calibrated", cal.uniform_bound)
        .tol("constant", allowed)
        .msg(source))
}

fn harmonic_max(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let s = ShiftedSolver::new(&c.s.op, 0.0, SolverOptions::default()).map_err(err)?;
    let mut excess = f64::NEG_INFINITY;
    for b in c.bumps(rng, 20) {
        let g = c.s.grid.sample_boundary(|x, y| b.eval(x, y));
        let u = s.solve_dirichlet(&g).map_err(err)?;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        excess = excess.max(u.u.sup_norm() - gmax);
    }
    Ok(Outcome::new(excess <= 1e-12)
        .m("max_excess", excess)
        .tol("max_excess", 1e-12))
}

fn ball_equivalence(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let bs = c.bumps(rng, 2);
        let f = Ctx::sample(&c.s.grid, &bs[0]);
        let g = c.s.grid.sample_boundary(|x, y| bs[1].eval(x, y));
        let direct = solve_full_problem(&c.s.op, &f, &g).map_err(err)?;
        let ball = dirichlet_via_ball(
            &c.s.grid,
            &c.s.field,
            c.cfg.discretization.scheme,
            &f,
            &g,
            1.0,
        )
        .map_err(err)?;
        let d = direct
            .u
            .values()
            .iter()
            .zip(ball.solution.u.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(d / direct.u.sup_norm().max(1.0));
    }
    Ok(Outcome::new(worst <= 1e-9)
        .m("max_difference", worst)
        .tol("max_difference", 1e-9))
}

fn aleksandrov(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let (cal, source) = c.constants()?;
    let allowed = 1.25 * cal.c1;
    let op = &c.s.op;
    let s = ShiftedSolver::new(op, 0.0, SolverOptions::default()).map_err(err)?;
    let zero = vec![0.0; c.s.grid.n_boundary()];
    let (mut worst_c1, mut worst_two_sided, mut max_sign): (f64, f64, f64) =
        (0.0, 0.0, f64::NEG_INFINITY);
    let mut pass = true;
    for b in c.bumps(rng, 50) {
        let f = Ctx::sample(&c.s.grid, &b);
        let u = s.solve(&f).map_err(err)?;
        let r = aleksandrov_check(op, &u, &f, &zero, Some(allowed)).map_err(err)?;
        pass &= r.pass;
        worst_c1 = worst_c1.max(r.measured_c1);
        if f.l2_norm() > 0.0 {
            let q = u.u.sup_norm() / (2.0 * f.l2_norm());
            worst_two_sided = worst_two_sided.max(q);
            pass &= q <= allowed;
        }
        let neg =
            GridFunction::new(f.values().iter().map(|v| -v.abs()).collect(), f.h()).map_err(err)?;
        let un = s.solve(&neg).map_err(err)?;
        let rn = aleksandrov_check(op, &un, &neg, &zero, Some(allowed)).map_err(err)?;
        pass &= rn.sign_ok;
        max_sign = max_sign.max(rn.sup_u);
    }
    Ok(Outcome::new(pass)
        .m("measured_c1", worst_c1)
        .m("two_sided_c1", worst_two_sided)
        .m("calibrated_c1", cal.c1)
        .m("max_u_for_nonpositive_f", max_sign)
        .tol("c1", allowed)
        .tol("sign", 1e-12)
        .msg(source))
}

fn holder(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let Some(fine) = c.level(c.h() / 2.0)? else {
        return Ok(Outcome::skipped("refined grid too large"));
    };
    let solve = |grid: &DomainGrid, op: &DiscreteOperator| -> Result<GridFunction, String> {
        let f = GridFunction::sample(grid, |_, _| 1.0).map_err(err)?;
        let u = solve_full_problem(op, &f, &vec![0.0; grid.n_boundary()]).map_err(err)?;
        Ok(u.u)
    };
    let uc = solve(&c.s.grid, &c.s.op)?;
    let uf = solve(&fine.grid, &fine.op)?;
    let ratio = |a: f64| holder_seminorm(&uf, &fine.grid, a) / holder_seminorm(&uc, &c.s.grid, a);
    let r04 = ratio(0.4);
    let largest = (1..=9)
        .map(|k| k as f64 / 10.0)
        .filter(|&a| ratio(a) <= 1.5)
        .fold(0.0, f64::max);
    Ok(Outcome::new(r04 <= 1.5)
        .m("ratio_alpha_0.4", r04)
        .m("largest_stable_alpha", largest)
        .tol("ratio", 1.5))
}

fn dissipativity(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let r = dissipativity_check(&c.s.op, &[0.1, 1.0, 10.0, 100.0]).map_err(err)?;
    let mut out = Outcome::new(r.pass);
    for e in &r.entries {
        out = out.m(&format!("lambda_{}", e.lambda), e.value);
    }
    Ok(out.tol("value", 1.0 + 1e-12))
}

fn resolvent_positivity(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let mut pass = true;
    let mut out = Outcome::new(true);
    for lam in [0.1, 1.0, 10.0] {
        let r = positivity_check(&c.s.op, lam, 10, rng).map_err(err)?;
        pass &= r.pass;
        out = out.m(
            &format!("min_lambda_{lam}"),
            r.dense_min.unwrap_or(r.min_value),
        );
    }
    Ok(Outcome {
        status: Outcome::new(pass).status,
        ..out
    }
    .tol("min_entry", -1e-12))
}

fn complex_max(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let nb = c.s.grid.n_boundary();
    let mut failures = 0usize;
    let mut excess = f64::NEG_INFINITY;
    for lam in [
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 2.0),
        Complex64::new(0.1, 5.0),
    ] {
        let sys =
            c.s.op
                .shifted_system(lam, SolverOptions::default())
                .map_err(err)?;
        for _ in 0..200 {
            let g: Vec<Complex64> = (0..nb)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let r = complex_max_with(&c.s.op, &sys, lam, &g).map_err(err)?;
            failures += usize::from(!r.pass);
            excess = excess.max(r.interior_max - r.boundary_max);
        }
    }
    Ok(Outcome::new(failures == 0)
        .mv("failures", failures)
        .m("max_excess", excess)
        .tol("max_excess", 1e-12))
}

fn resolvent_identity(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let op = &c.s.op;
    let pairs = [
        (Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)),
        (Complex64::new(1.0, 1.0), Complex64::new(3.0, 0.0)),
        (Complex64::new(10.0, 0.0), Complex64::new(0.1, 0.0)),
    ];
    let mut worst: f64 = 0.0;
    for (l, m) in pairs {
        let sl: LinearSystem<Complex64> = op
            .shifted_system(l, SolverOptions::default())
            .map_err(err)?;
        let sm: LinearSystem<Complex64> = op
            .shifted_system(m, SolverOptions::default())
            .map_err(err)?;
        for _ in 0..20 {
            let f: Vec<Complex64> = (0..op.n())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
                .collect();
            let rl = sl.solve(&f).map_err(err)?.0;
            let rm = sm.solve(&f).map_err(err)?.0;
            let rlrm = sl.solve(&rm).map_err(err)?.0;
            let scale = crate::linalg::max_modulus(&rl).max(crate::linalg::max_modulus(&rm));
            let e = (0..op.n())
                .map(|i| (rl[i] - rm[i] - (m - l) * rlrm[i]).norm())
                .fold(0.0, f64::max);
            worst = worst.max(e / scale);
        }
    }
    Ok(Outcome::new(worst <= 1e-8)
        .m("relative_error", worst)
        .tol("relative_error", 1e-8))
}

fn sectoriality(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let cfg: &SweepConfig = &c.cfg.params.sweep;
    let opts = NormOptions {
        seed: c.cfg.seed,
        probes: c.cfg.params.probes,
        ..Default::default()
    };
    let fine = sector_sweep(&c.s.op, cfg, opts);
    let ray_max = fine
        .samples
        .iter()
        .filter(|s| s.angle_deg == 0.0)
        .filter_map(|s| s.norm)
        .fold(0.0, f64::max);
    let mut pass = fine.failures == 0 && fine.m_measured.is_finite();
    if c.s.op.is_certified() && fine.omega == 0.0 {
        pass &= ray_max <= 1.0 + 1e-12;
    }
    let mut out = Outcome::new(true)
        .m("m_measured", fine.m_measured)
        .m("omega", fine.omega)
        .m("real_ray_max", ray_max)
        .m("max_angle_deg", fine.max_angle_deg)
        .m("theta_deg", fine.theta_deg.unwrap_or(f64::NAN))
        .mv("failures", fine.failures);
    if let Some(coarse) = c.level(2.0 * c.h()).ok().flatten() {
        let rep = sector_sweep(&coarse.op, cfg, opts);
        let ratio = rep.m_measured / fine.m_measured;
        pass &= (0.5..=2.0).contains(&ratio);
        out = out
            .m("m_measured_2h", rep.m_measured)
            .m("ratio_2h_h", ratio);
    }
    Ok(Outcome {
        status: Outcome::new(pass).status,
        ..out
    }
    .tol("ratio_low", 0.5)
    .tol("ratio_high", 2.0)
    .tol("real_ray", 1.0 + 1e-12))
}

fn yosida_positivity(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    let b = &c.bumps(rng, 1)[0];
    let u0 = GridFunction::sample(&c.s.grid, |x, y| b.eval(x, y).abs()).map_err(err)?;
    let y = yosida_evolve(&c.s.op, &u0, 0.1, 64).map_err(err)?;
    let min = y.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome::new(min >= -1e-12)
        .m("min_value", min)
        .tol("min_value", -1e-12))
}

fn yosida_convergence(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let op = &c.s.op;
    let t = 0.1;
    let u0 = GridFunction::sample(&c.s.grid, |x, y| probe_jet(x, y).u).map_err(err)?;
    let (reference, kind) = match eigen_reference(op, &u0, t) {
        Ok(r) => (r, "eigen"),
        Err(_) => (
            evolve_backward_euler(op, &u0, t, 4096).map_err(err)?,
            "backward_euler_4096",
        ),
    };
    let error = |n: u32| -> Result<f64, String> {
        let y = yosida_evolve(op, &u0, t, n).map_err(err)?;
        Ok(y.values()
            .iter()
            .zip(reference.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    };
    let (e16, e256) = (error(16)?, error(256)?);
    Ok(Outcome::new(e256 < 0.25 * e16)
        .m("error_n16", e16)
        .m("error_n256", e256)
        .m("ratio", e256 / e16)
        .tol("ratio", 0.25)
        .msg(format!("reference: {kind}")))
}

fn semigroup_property(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let op = &c.s.op;
    let u0 = Ctx::sample(&c.s.grid, &c.bumps(rng, 1)[0]);
    let whole = evolve_backward_euler(op, &u0, 0.05, 5).map_err(err)?;
    let first = evolve_backward_euler(op, &u0, 0.03, 3).map_err(err)?;
    let split = evolve_backward_euler(op, &first, 0.02, 2).map_err(err)?;
    let d = whole
        .values()
        .iter()
        .zip(split.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / u0.sup_norm().max(1.0);
    Ok(Outcome::new(d <= 1e-12)
        .m("difference", d)
        .tol("difference", 1e-12))
}

fn strict_positivity(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    if let Some(o) = c.require_certified() {
        return Ok(o);
    }
    if !is_irreducible(&c.s.op) {
        return Ok(Outcome::skipped("interior graph is not connected"));
    }
    let bb = c.s.grid.geometry().bbox();
    let (cx, cy) = (0.5 * (bb[0] + bb[2]), 0.5 * (bb[1] + bb[3]));
    let nodes = c.s.grid.interior_nodes();
    let k = (0..nodes.len())
        .min_by(|&a, &b| {
            let d = |n: &crate::grid::Node| (n.x - cx).powi(2) + (n.y - cy).powi(2);
            d(&nodes[a]).total_cmp(&d(&nodes[b])).then(a.cmp(&b))
        })
        .ok_or("empty grid")?;
    let mut v = vec![0.0; nodes.len()];
    v[k] = 1.0;
    let f = GridFunction::new(v, c.h()).map_err(err)?;
    let r = strict_positivity_check(&c.s.op, &f, &[0.05, 0.1, 0.5], 1024).map_err(err)?;
    let mut out = Outcome::new(r.pass);
    for (t, m) in r.times.iter().zip(&r.minima) {
        out = out.m(&format!("min_t{t}"), *m);
    }
    Ok(out.tol("min_value", 0.0))
}

fn gradient_bound(c: &Ctx, rng: &mut ChaCha8Rng) -> CheckResult {
    let family: Vec<GridFunction> = c
        .bumps(rng, 50)
        .iter()
        .map(|b| Ctx::sample(&c.s.grid, b))
        .collect();
    let r = gradient_bound_probe(&c.s.op, &family, &[1.0, 0.1, 0.01]).map_err(err)?;
    let mut out = Outcome::new(r.pass);
    for (e, ce) in &r.constants {
        out = out.m(&format!("c_eps_{e}"), *ce);
    }
    Ok(out)
}

fn compactness(c: &Ctx, _: &mut ChaCha8Rng) -> CheckResult {
    let Some(coarse) = c.level(2.0 * c.h()).ok().flatten() else {
        return Ok(Outcome::skipped("no coarser grid"));
    };
    if c.s.op.n() > crate::semigroup::DENSE_LIMIT {
        return Ok(Outcome::skipped("grid above the dense limit"));
    }
    let f = compactness_proxy(&c.s.op, 1.0).map_err(err)?;
    let g = compactness_proxy(&coarse.op, 1.0).map_err(err)?;
    Ok(Outcome::new(f.ratio_half < g.ratio_half)
        .m("ratio_half_h", f.ratio_half)
        .m("ratio_half_2h", g.ratio_half)
        .m("ratio_quarter_h", f.ratio_quarter)
        .m("sigma_1", f.singular_values[0]))
}
