//! Assembly of the discrete operator `A_h` and its monotonicity certificate.
//!
//! At an interior node with coefficients `(a11, a12, a22, b1, b2, c)` the
//! stencil is
//!
//! ```text
//! a11·(E + W − 2C)/h² + a22·(N + S − 2C)/h²
//!   + |a12|·(D₁ + D₂ + 2C − E − W − N − S)/h²     cross term 2·a12·∂xy
//!   + first-order terms (central or upwind) + c·C
//! ```
//!
//! where `(D₁, D₂)` is the NE/SW pair when `a12 ≥ 0` and the NW/SE pair
//! otherwise. Off-diagonal weights are then `a11 − |a12|`, `a22 − |a12|` and
//! `|a12|` (over `h²`), nonnegative whenever `|a12| ≤ min(a11, a22)`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::{CoeffError, CoefficientField};
use crate::grid::{DomainGrid, NodeRef};
use crate::linalg::{CsrMatrix, LinearSystem, Scalar, SolveError, SolverOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Central,
    #[default]
    #[serde(alias = "upwind")]
    UpwindFirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Certified,
    Violated,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// Interior node with the most negative off-diagonal weight (or the
    /// first node breaking a sign condition).
    pub worst_node: usize,
    /// Most negative off-diagonal stencil weight.
    pub min_offdiag: f64,
    /// Smallest diagonal-dominance margin `|diag| − Σ off-diagonal`.
    pub slack: f64,
}

/// Discrete operator on the interior unknowns plus boundary coupling:
/// `(A_h u)_i = Σ interior_ij u_j + Σ boundary_ib g_b`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: DomainGrid,
    interior: CsrMatrix<f64>,
    boundary: CsrMatrix<f64>,
    scheme: Scheme,
    monotone: Monotone,
    report: Option<MonotoneReport>,
    c_max: f64,
}

/// Assembles `A_h`. Assembly is total; the monotonicity certificate is
/// computed and attached.
pub fn assemble(
    grid: &DomainGrid,
    field: &CoefficientField,
    scheme: Scheme,
) -> Result<DiscreteOperator, OperatorError> {
    if field.n_nodes() != grid.n_nodes() {
        return Err(OperatorError::DimensionMismatch {
            what: "coefficient samples",
            expected: grid.n_nodes(),
            got: field.n_nodes(),
        });
    }
    if let Some(node) = field.c().iter().position(|&c| c > 0.0) {
        return Err(CoeffError::PositiveReaction {
            node,
            value: field.c()[node],
        }
        .into());
    }
    let h = grid.h();
    let h2 = h * h;
    let n = grid.n_interior();
    let mut irows = Vec::with_capacity(n);
    let mut brows = Vec::with_capacity(n);
    for k in 0..n {
        let [[a11, a12], [_, a22]] = field.matrix(k);
        let (b1, b2, c) = (field.b1()[k], field.b2()[k], field.c()[k]);
        let m = a12.abs();
        let mut w: Vec<((i64, i64), f64)> = vec![
            ((1, 0), (a11 - m) / h2),
            ((-1, 0), (a11 - m) / h2),
            ((0, 1), (a22 - m) / h2),
            ((0, -1), (a22 - m) / h2),
        ];
        if a12 >= 0.0 {
            w.push(((1, 1), m / h2));
            w.push(((-1, -1), m / h2));
        } else {
            w.push(((-1, 1), m / h2));
            w.push(((1, -1), m / h2));
        }
        let mut centre = (-2.0 * a11 - 2.0 * a22 + 2.0 * m) / h2 + c;
        match scheme {
            Scheme::Central => {
                w.push(((1, 0), b1 / (2.0 * h)));
                w.push(((-1, 0), -b1 / (2.0 * h)));
                w.push(((0, 1), b2 / (2.0 * h)));
                w.push(((0, -1), -b2 / (2.0 * h)));
            }
            Scheme::UpwindFirstOrder => {
                for (b, fwd) in [(b1, (1, 0)), (b2, (0, 1))] {
                    if b > 0.0 {
                        w.push((fwd, b / h));
                        centre -= b / h;
                    } else if b < 0.0 {
                        w.push(((-fwd.0, -fwd.1), -b / h));
                        centre += b / h;
                    }
                }
            }
        }
        let mut irow = vec![(k, centre)];
        let mut brow = Vec::new();
        for ((di, dj), v) in w {
            match grid.neighbor(k, di, dj) {
                Some(NodeRef::Interior(q)) => irow.push((q, v)),
                Some(NodeRef::Boundary(b)) => brow.push((b, v)),
                None => unreachable!("interior nodes have every stencil neighbour"),
            }
        }
        irows.push(irow);
        brows.push(brow);
    }
    let mut op = DiscreteOperator {
        grid: grid.clone(),
        interior: CsrMatrix::from_rows(n, irows),
        boundary: CsrMatrix::from_rows(grid.n_boundary(), brows),
        scheme,
        monotone: Monotone::Unknown,
        report: None,
        c_max: field.c()[..n]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    };
    op.certify();
    Ok(op)
}

impl DiscreteOperator {
    /// Operator from explicit matrices; the certificate starts `Unknown`
    /// until [`DiscreteOperator::certify`] runs.
    pub fn from_parts(
        grid: &DomainGrid,
        interior: CsrMatrix<f64>,
        boundary: CsrMatrix<f64>,
        scheme: Scheme,
    ) -> Result<Self, OperatorError> {
        let n = grid.n_interior();
        if interior.nrows() != n || interior.ncols() != n {
            return Err(OperatorError::DimensionMismatch {
                what: "interior matrix",
                expected: n,
                got: interior.nrows(),
            });
        }
        if boundary.nrows() != n || boundary.ncols() != grid.n_boundary() {
            return Err(OperatorError::DimensionMismatch {
                what: "boundary coupling",
                expected: grid.n_boundary(),
                got: boundary.ncols(),
            });
        }
        Ok(DiscreteOperator {
            grid: grid.clone(),
            interior,
            boundary,
            scheme,
            monotone: Monotone::Unknown,
            report: None,
            c_max: f64::NAN,
        })
    }

    pub fn grid(&self) -> &DomainGrid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn n(&self) -> usize {
        self.interior.nrows()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn interior(&self) -> &CsrMatrix<f64> {
        &self.interior
    }

    pub fn boundary_coupling(&self) -> &CsrMatrix<f64> {
        &self.boundary
    }

    pub fn monotone(&self) -> Monotone {
        self.monotone
    }

    pub fn is_certified(&self) -> bool {
        self.monotone == Monotone::Certified
    }

    pub fn report(&self) -> Option<MonotoneReport> {
        self.report
    }

    /// `interior·u + boundary_coupling·g`.
    pub fn apply(&self, u: &[f64], g: &[f64]) -> Result<Vec<f64>, OperatorError> {
        if u.len() != self.n() {
            return Err(OperatorError::DimensionMismatch {
                what: "interior values",
                expected: self.n(),
                got: u.len(),
            });
        }
        if g.len() != self.boundary.ncols() {
            return Err(OperatorError::DimensionMismatch {
                what: "boundary values",
                expected: self.boundary.ncols(),
                got: g.len(),
            });
        }
        let mut out = self.interior.mul_vec(u);
        for (o, b) in out.iter_mut().zip(self.boundary.mul_vec(g)) {
            *o += b;
        }
        Ok(out)
    }

    /// Runs the sign checks and records the verdict on the operator.
    pub fn certify(&mut self) -> MonotoneReport {
        let r = monotonicity_certificate(self);
        self.monotone = if r.monotone {
            Monotone::Certified
        } else {
            Monotone::Violated
        };
        self.report = Some(r);
        r
    }

    /// `shift·I − scale·A_h` over `T`, prepared for solves.
    pub fn shifted_system<T: Scalar>(
        &self,
        shift: T,
        opts: SolverOptions,
    ) -> Result<LinearSystem<T>, SolveError> {
        let m = self
            .interior
            .map(|v| T::from_real(v))
            .shifted(shift, T::from_real(-1.0));
        LinearSystem::new(m, opts)
    }

    /// Writes both matrices as `row col value` triplets (17 significant
    /// digits), interior block first.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# interior {} {}", self.n(), self.n())?;
        for i in 0..self.n() {
            for (j, v) in self.interior.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        writeln!(w, "# boundary {} {}", self.n(), self.boundary.ncols())?;
        for i in 0..self.n() {
            for (j, v) in self.boundary.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Monotone iff every off-diagonal stencil weight (interior and boundary
/// coupling) is nonnegative, every diagonal entry is nonpositive, and
/// `c ≤ 0`. Then `−A_h` is an M-matrix.
pub fn monotonicity_certificate(op: &DiscreteOperator) -> MonotoneReport {
    let mut report = MonotoneReport {
        // NaN: built from raw matrices, only the stencil is known
        monotone: op.c_max.is_nan() || op.c_max <= 0.0,
        worst_node: 0,
        min_offdiag: f64::INFINITY,
        slack: f64::INFINITY,
    };
    for i in 0..op.n() {
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut row_min = f64::INFINITY;
        for (j, v) in op.interior.row(i) {
            if j == i {
                diag += v;
            } else {
                off += v;
                row_min = row_min.min(v);
            }
        }
        for (_, v) in op.boundary.row(i) {
            off += v;
            row_min = row_min.min(v);
        }
        if row_min < report.min_offdiag {
            report.min_offdiag = row_min;
            report.worst_node = i;
        }
        if diag > 0.0 || row_min < 0.0 {
            if report.monotone {
                report.worst_node = i;
            }
            report.monotone = false;
        }
        report.slack = report.slack.min(diag.abs() - off);
    }
    report
}

/// Value and derivatives up to second order of a smooth test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
}

/// `|A_h u − 𝓐u|` at every interior node at least `layers` lattice steps
/// away from every boundary node, with `u` sampled at all nodes. Pairs are
/// `(interior index, error)`.
pub fn truncation_errors(
    op: &DiscreteOperator,
    field: &CoefficientField,
    u: impl Fn(f64, f64) -> Jet,
    layers: i64,
) -> Vec<(usize, f64)> {
    let grid = op.grid();
    let ui: Vec<f64> = grid
        .interior_nodes()
        .iter()
        .map(|n| u(n.x, n.y).u)
        .collect();
    let ub: Vec<f64> = grid
        .boundary_nodes()
        .iter()
        .map(|n| u(n.x, n.y).u)
        .collect();
    let au = op.apply(&ui, &ub).expect("sampled vectors match the grid");
    let mut out = Vec::new();
    for (k, n) in grid.interior_nodes().iter().enumerate() {
        let deep = (-layers..=layers).all(|di| {
            (-layers..=layers)
                .all(|dj| matches!(grid.locate(n.i + di, n.j + dj), Some(NodeRef::Interior(_))))
        });
        if !deep {
            continue;
        }
        let j = u(n.x, n.y);
        let [[a11, a12], [_, a22]] = field.matrix(k);
        let exact = a11 * j.uxx
            + 2.0 * a12 * j.uxy
            + a22 * j.uyy
            + field.b1()[k] * j.ux
            + field.b2()[k] * j.uy
            + field.c()[k] * j.u;
        out.push((k, (au[k] - exact).abs()));
    }
    out
}

/// Max of [`truncation_errors`], `None` if no node qualifies.
pub fn truncation_error(
    op: &DiscreteOperator,
    field: &CoefficientField,
    u: impl Fn(f64, f64) -> Jet,
    layers: i64,
) -> Option<f64> {
    truncation_errors(op, field, u, layers)
        .into_iter()
        .map(|e| e.1)
        .reduce(f64::max)
}
