//! Poisson and Dirichlet solves, the ball-extension route, and the
//! maximum-principle and Hölder checks built on them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::{extend_with_margin, CoeffError, CoefficientField};
use crate::grid::DomainGrid;
use crate::linalg::{LinearSystem, SolveError, SolveMethod, SolveStats, SolverOptions};
use crate::operator::{assemble, DiscreteOperator, OperatorError, Scheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error("operator is not certified monotone")]
    NotMonotone,
    #[error("non-finite grid value at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

fn expect_len(what: &'static str, expected: usize, got: usize) -> Result<(), EllipticError> {
    if expected == got {
        Ok(())
    } else {
        Err(EllipticError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

/// Values on the interior nodes, optionally with boundary values attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
    boundary: Option<Vec<f64>>,
    h: f64,
}

impl GridFunction {
    pub fn new(values: Vec<f64>, h: f64) -> Result<Self, EllipticError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EllipticError::NonFinite { index });
        }
        Ok(GridFunction {
            values,
            boundary: None,
            h,
        })
    }

    pub fn zeros(grid: &DomainGrid) -> Self {
        GridFunction {
            values: vec![0.0; grid.n_interior()],
            boundary: None,
            h: grid.h(),
        }
    }

    pub fn sample(grid: &DomainGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self, EllipticError> {
        GridFunction::new(grid.sample_interior(f), grid.h())
    }

    pub fn with_boundary(mut self, g: Vec<f64>) -> Result<Self, EllipticError> {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(EllipticError::NonFinite {
                index: self.values.len() + i,
            });
        }
        self.boundary = Some(g);
        Ok(self)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary(&self) -> Option<&[f64]> {
        self.boundary.as_deref()
    }

    /// Interior values followed by boundary values (if any).
    pub fn all_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        if let Some(b) = &self.boundary {
            v.extend_from_slice(b);
        }
        v
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sup norm over the interior nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(h² Σ |u|²)^{1/2}` over the interior nodes.
    pub fn l2_norm(&self) -> f64 {
        self.h * self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn positive_part(&self) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
            boundary: self
                .boundary
                .as_ref()
                .map(|b| b.iter().map(|v| v.max(0.0)).collect()),
            h: self.h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolution {
    pub u: GridFunction,
    pub residual_norm: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

impl EllipticSolution {
    fn from_stats(u: GridFunction, s: SolveStats) -> Self {
        EllipticSolution {
            u,
            residual_norm: s.relative_residual,
            method: s.method,
            iterations: s.iterations,
        }
    }
}

/// `μI − A_h`, factored once and reused across right-hand sides.
#[derive(Debug, Clone)]
pub struct ShiftedSolver<'a> {
    op: &'a DiscreteOperator,
    mu: f64,
    system: LinearSystem<f64>,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(
        op: &'a DiscreteOperator,
        mu: f64,
        opts: SolverOptions,
    ) -> Result<Self, EllipticError> {
        Ok(ShiftedSolver {
            op,
            mu,
            system: op.shifted_system(mu, opts)?,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Solves `(μI − A_h)u = f` with zero boundary data.
    pub fn solve(&self, f: &GridFunction) -> Result<EllipticSolution, EllipticError> {
        expect_len("right-hand side", self.op.n(), f.len())?;
        let (u, stats) = self.system.solve(f.values())?;
        Ok(EllipticSolution::from_stats(
            GridFunction::new(u, self.op.h())?,
            stats,
        ))
    }

    /// Solves `(μI − A_h)u = boundary_coupling·g`, i.e. `(A_h − μ)u = 0`
    /// with boundary data `g`. The solution carries `g` on the boundary.
    pub fn solve_dirichlet(&self, g: &[f64]) -> Result<EllipticSolution, EllipticError> {
        let nb = self.op.boundary_coupling().ncols();
        expect_len("boundary data", nb, g.len())?;
        let rhs = self.op.boundary_coupling().mul_vec(g);
        let (u, stats) = self.system.solve(&rhs)?;
        Ok(EllipticSolution::from_stats(
            GridFunction::new(u, self.op.h())?.with_boundary(g.to_vec())?,
            stats,
        ))
    }
}

/// Solves `(μI − A_h)u = f` with zero boundary data. With `μ = 0` this is
/// `−A_h u = f`.
pub fn solve_poisson(
    op: &DiscreteOperator,
    f: &GridFunction,
    mu: f64,
) -> Result<EllipticSolution, EllipticError> {
    ShiftedSolver::new(op, mu, SolverOptions::default())?.solve(f)
}

/// Solves `A_h u = 0` in the interior with `u = g` on the boundary.
pub fn solve_dirichlet_direct(
    op: &DiscreteOperator,
    g: &[f64],
) -> Result<EllipticSolution, EllipticError> {
    ShiftedSolver::new(op, 0.0, SolverOptions::default())?.solve_dirichlet(g)
}

/// `−A_h u = f`, `u = g` on the boundary, as `u₀ + u₁` with `u₀` the zero
/// boundary Poisson solve and `u₁` the homogeneous Dirichlet solve.
pub fn solve_full_problem(
    op: &DiscreteOperator,
    f: &GridFunction,
    g: &[f64],
) -> Result<EllipticSolution, EllipticError> {
    let s = ShiftedSolver::new(op, 0.0, SolverOptions::default())?;
    let u0 = s.solve(f)?;
    let u1 = s.solve_dirichlet(g)?;
    let u: Vec<f64> =
        u0.u.values()
            .iter()
            .zip(u1.u.values())
            .map(|(a, b)| a + b)
            .collect();
    Ok(EllipticSolution {
        u: GridFunction::new(u, op.h())?.with_boundary(g.to_vec())?,
        residual_norm: u0.residual_norm.max(u1.residual_norm),
        method: u0.method,
        iterations: u0.iterations + u1.iterations,
    })
}

/// Intermediate pieces of the ball construction.
#[derive(Debug, Clone)]
pub struct BallSolution {
    pub solution: EllipticSolution,
    /// `v` on the ball interior nodes.
    pub v: Vec<f64>,
    /// `w` on the domain interior nodes.
    pub w: Vec<f64>,
    pub ball_interior: usize,
}

/// Solves `−A_h u = f`, `u = g` on `∂Ω` through an enclosing ball:
/// extend the coefficients to the ball and `f` by zero, solve `−Ã_h v = f`
/// on the ball with zero boundary data, then solve `A_h w = 0` on `Ω` with
/// boundary data `v|∂Ω − g` and return `u = v|Ω − w`.
pub fn dirichlet_via_ball(
    grid: &DomainGrid,
    field: &CoefficientField,
    scheme: Scheme,
    f: &GridFunction,
    g: &[f64],
    margin: f64,
) -> Result<BallSolution, EllipticError> {
    expect_len("right-hand side", grid.n_interior(), f.len())?;
    expect_len("boundary data", grid.n_boundary(), g.len())?;
    let ext = extend_with_margin(field, grid, margin)?;
    let ball = &ext.ball;
    let ball_op = assemble(&ball.grid, &ext.field, scheme)?;
    let mut fb = vec![0.0; ball.grid.n_interior()];
    for (k, &v) in f.values().iter().enumerate() {
        fb[ball.injection[k]] = v;
    }
    let vs = solve_poisson(&ball_op, &GridFunction::new(fb, grid.h())?, 0.0)?;
    let v = vs.u.values();
    let trace: Vec<f64> = (0..grid.n_boundary())
        .map(|b| v[ball.injection[grid.n_interior() + b]] - g[b])
        .collect();
    let op = assemble(grid, field, scheme)?;
    let ws = solve_dirichlet_direct(&op, &trace)?;
    let w = ws.u.values().to_vec();
    let u: Vec<f64> = (0..grid.n_interior())
        .map(|k| v[ball.injection[k]] - w[k])
        .collect();
    Ok(BallSolution {
        solution: EllipticSolution {
            u: GridFunction::new(u, grid.h())?.with_boundary(g.to_vec())?,
            residual_norm: vs.residual_norm.max(ws.residual_norm),
            method: vs.method,
            iterations: vs.iterations + ws.iterations,
        },
        v: v.to_vec(),
        w,
        ball_interior: ball.grid.n_interior(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AleksandrovReport {
    pub sup_u: f64,
    /// `max(0, sup_∂Ω u)`.
    pub sup_boundary_plus: f64,
    /// `‖f⁺‖_{L²}`.
    pub l2_f: f64,
    /// `(sup u − sup_∂Ω u⁺)⁺ / ‖f⁺‖`, zero when `f⁺ = 0`.
    pub measured_c1: f64,
    /// Calibrated constant times the safety factor, if one was supplied.
    pub allowed_c1: Option<f64>,
    /// `true` unless `f ≤ 0`, `g ≤ 0` and some `u > 1e-12`.
    pub sign_ok: bool,
    pub pass: bool,
}

/// Checks `sup u ≤ sup_∂Ω u⁺ + allowed_c1·‖f⁺‖_{L²}` and the sign half of
/// the maximum principle for a solution of `−A_h u = f`, `u = g`.
pub fn aleksandrov_check(
    op: &DiscreteOperator,
    u: &EllipticSolution,
    f: &GridFunction,
    g: &[f64],
    allowed_c1: Option<f64>,
) -> Result<AleksandrovReport, EllipticError> {
    if !op.is_certified() {
        return Err(EllipticError::NotMonotone);
    }
    expect_len("right-hand side", op.n(), f.len())?;
    expect_len("solution", op.n(), u.u.len())?;
    let sup_u = u.u.max();
    let sup_boundary_plus = g.iter().copied().fold(0.0, f64::max);
    let l2_f = f.positive_part().l2_norm();
    let excess = (sup_u - sup_boundary_plus).max(0.0);
    let measured_c1 = if l2_f > 0.0 { excess / l2_f } else { 0.0 };
    let nonpositive_data = l2_f == 0.0 && sup_boundary_plus == 0.0;
    let sign_ok = !nonpositive_data || sup_u <= 1e-12;
    let bound_ok = match allowed_c1 {
        Some(c) => sup_u <= sup_boundary_plus + c * l2_f + 1e-12,
        None => true,
    };
    Ok(AleksandrovReport {
        sup_u,
        sup_boundary_plus,
        l2_f,
        measured_c1,
        allowed_c1,
        sign_ok,
        pass: sign_ok && bound_ok,
    })
}

/// Smooth random data: a constant plus a few Gaussian bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpField {
    pub offset: f64,
    /// `(x, y, width, amplitude)`.
    pub bumps: Vec<[f64; 4]>,
}

impl BumpField {
    /// Draws bumps centred in `bbox = [xmin, ymin, xmax, ymax]`.
    pub fn random<R: Rng>(rng: &mut R, bbox: [f64; 4]) -> Self {
        let count = rng.random_range(1..=4);
        let bumps = (0..count)
            .map(|_| {
                [
                    rng.random_range(bbox[0]..bbox[2]),
                    rng.random_range(bbox[1]..bbox[3]),
                    rng.random_range(0.1..0.3),
                    rng.random_range(-1.0..1.0),
                ]
            })
            .collect();
        BumpField {
            offset: rng.random_range(-0.5..0.5),
            bumps,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.offset
            + self
                .bumps
                .iter()
                .map(|[cx, cy, w, a]| a * (-((x - cx).powi(2) + (y - cy).powi(2)) / (w * w)).exp())
                .sum::<f64>()
    }
}

/// `max |u(p) − u(q)| / |p − q|^α` over all node pairs, boundary nodes
/// included when `u` carries boundary values. Exhaustive up to 20 000
/// nodes; beyond that 4·10⁶ pairs drawn from a fixed-seed generator.
pub fn holder_seminorm(u: &GridFunction, grid: &DomainGrid, alpha: f64) -> f64 {
    let vals = u.all_values();
    let pts: Vec<[f64; 2]> = grid.nodes()[..vals.len()]
        .iter()
        .map(|n| [n.x, n.y])
        .collect();
    let q = |a: usize, b: usize| {
        let d = ((pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2)).sqrt();
        (vals[a] - vals[b]).abs() / d.powf(alpha)
    };
    let n = vals.len();
    if n <= 20_000 {
        (0..n)
            .into_par_iter()
            .map(|a| ((a + 1)..n).map(|b| q(a, b)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    } else {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x401d);
        let mut best: f64 = 0.0;
        for _ in 0..4_000_000 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                best = best.max(q(a, b));
            }
        }
        best
    }
}
