//! Complex resolvents, sector sweeps, Yosida and backward-Euler evolution,
//! and the positivity / dissipativity battery.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{EllipticError, GridFunction};
use crate::linalg::{
    dense_inf_norm, estimate_inverse_inf_norm, max_modulus, LinearSystem, SolveError, SolverOptions,
};
use crate::operator::{DiscreteOperator, OperatorError};

/// Largest system handled by dense inverses and dense exponentials.
pub const DENSE_LIMIT: usize = 2500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("operator is not certified monotone")]
    NotMonotone,
    #[error("interior graph of the operator is not connected")]
    DisconnectedDomain,
    #[error("substep error estimate {estimate:.3e} above tolerance at t = {t}")]
    StepRejection { t: f64, estimate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn expect_len(expected: usize, got: usize) -> Result<(), SemigroupError> {
    if expected == got {
        Ok(())
    } else {
        Err(SemigroupError::DimensionMismatch { expected, got })
    }
}

fn require_certified(op: &DiscreteOperator) -> Result<(), SemigroupError> {
    if op.is_certified() {
        Ok(())
    } else {
        Err(SemigroupError::NotMonotone)
    }
}

/// `λ_h(i, j) = (4/h²)(sin²(iπh/2) + sin²(jπh/2))`, the Dirichlet
/// eigenvalues of the five-point Laplacian on the unit square (negated).
pub fn laplacian_eigenvalue(h: f64, i: usize, j: usize) -> f64 {
    let s = |k: usize| (k as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2);
    4.0 / (h * h) * (s(i) + s(j))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexGridFunction {
    values: Vec<Complex64>,
}

impl ComplexGridFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self, SemigroupError> {
        if let Some(index) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(EllipticError::NonFinite { index }.into());
        }
        Ok(ComplexGridFunction { values })
    }

    pub fn from_real(u: &GridFunction) -> Self {
        ComplexGridFunction {
            values: u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        max_modulus(&self.values)
    }
}

fn check_lambda(lambda: Complex64) -> Result<(), SemigroupError> {
    if lambda.re > 0.0 && lambda.re.is_finite() && lambda.im.is_finite() {
        Ok(())
    } else {
        Err(SemigroupError::InvalidParameter(format!(
            "resolvent needs Re λ > 0, got {lambda}"
        )))
    }
}

/// Solves `(λI − A_h)u = f` with zero boundary data.
pub fn resolvent(
    op: &DiscreteOperator,
    lambda: Complex64,
    f: &ComplexGridFunction,
) -> Result<ComplexGridFunction, SemigroupError> {
    check_lambda(lambda)?;
    expect_len(op.n(), f.len())?;
    let sys = op.shifted_system(lambda, SolverOptions::default())?;
    let (u, _) = sys.solve(f.values())?;
    ComplexGridFunction::new(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    DenseInverse,
    NormEstimator,
}

impl NormMethod {
    pub fn name(self) -> &'static str {
        match self {
            NormMethod::DenseInverse => "dense_inverse",
            NormMethod::NormEstimator => "norm_estimator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub dense_limit: usize,
    pub probes: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            dense_limit: DENSE_LIMIT,
            probes: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventNorm {
    pub lambda: Complex64,
    /// `‖λ(λ − A_h)⁻¹‖∞`.
    pub norm: f64,
    pub method: NormMethod,
}

/// `‖λ(λ − A_h)⁻¹‖∞`: exact max row sum of the dense inverse up to
/// `dense_limit` unknowns, randomized lower estimate beyond.
pub fn resolvent_norm(
    op: &DiscreteOperator,
    lambda: Complex64,
    opts: NormOptions,
) -> Result<ResolventNorm, SemigroupError> {
    check_lambda(lambda)?;
    let sys = op.shifted_system(lambda, SolverOptions::default())?;
    let (inv, method) = if op.n() <= opts.dense_limit {
        (
            dense_inf_norm(&sys.dense_inverse()?),
            NormMethod::DenseInverse,
        )
    } else {
        let tr = LinearSystem::new(sys.matrix().transpose(), SolverOptions::default())?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let est = estimate_inverse_inf_norm(
            op.n(),
            opts.probes,
            &mut rng,
            |b| sys.solve(b).map(|s| s.0),
            |b| tr.solve(b).map(|s| s.0),
        )?;
        (est, NormMethod::NormEstimator)
    };
    Ok(ResolventNorm {
        lambda,
        norm: lambda.norm() * inv,
        method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub angles_deg: Vec<f64>,
    pub moduli: Vec<f64>,
}

impl SweepConfig {
    /// `angles` evenly spaced in `[−max_deg, max_deg]` and `moduli`
    /// log-spaced in `[lo, hi]`.
    pub fn new(angles: usize, max_deg: f64, moduli: usize, lo: f64, hi: f64) -> Self {
        let lin = |n: usize, a: f64, b: f64| -> Vec<f64> {
            if n == 1 {
                return vec![0.5 * (a + b)];
            }
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()
        };
        SweepConfig {
            angles_deg: lin(angles, -max_deg, max_deg),
            moduli: lin(moduli, lo.log10(), hi.log10())
                .into_iter()
                .map(|e| 10f64.powf(e))
                .collect(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig::new(9, 85.0, 13, 1e-2, 1e4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSample {
    pub lambda: Complex64,
    pub angle_deg: f64,
    pub modulus: f64,
    pub norm: Option<f64>,
    pub method: Option<NormMethod>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorialReport {
    pub samples: Vec<SectorSample>,
    /// Max norm over the successful samples.
    pub m_measured: f64,
    /// Shift added to every sample point (`λ = ω + r e^{iθ}`).
    pub omega: f64,
    pub max_angle_deg: f64,
    /// Largest swept `|θ|` at which the running max stays below twice the
    /// real-ray value, if the sweep contains the real ray.
    pub theta_deg: Option<f64>,
    pub failures: usize,
}

fn sweep_once(
    op: &DiscreteOperator,
    cfg: &SweepConfig,
    omega: f64,
    opts: NormOptions,
) -> Vec<SectorSample> {
    let points: Vec<(f64, f64)> = cfg
        .angles_deg
        .iter()
        .flat_map(|&a| cfg.moduli.iter().map(move |&r| (a, r)))
        .collect();
    points
        .par_iter()
        .map(|&(a, r)| {
            let lambda = Complex64::new(omega, 0.0) + Complex64::from_polar(r, a.to_radians());
            let res = resolvent_norm(op, lambda, opts);
            let (norm, method, error) = match res {
                Ok(n) if n.norm.is_finite() => (Some(n.norm), Some(n.method), None),
                Ok(n) => (
                    None,
                    Some(n.method),
                    Some(format!("non-finite norm {}", n.norm)),
                ),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SectorSample {
                lambda,
                angle_deg: a,
                modulus: r,
                norm,
                method,
                error,
            }
        })
        .collect()
}

/// Samples `‖λ(λ − A_h)⁻¹‖∞` over a polar grid in the right half-plane.
/// If any sample fails the sweep is repeated with shift `ω = 1`.
pub fn sector_sweep(
    op: &DiscreteOperator,
    cfg: &SweepConfig,
    opts: NormOptions,
) -> SectorialReport {
    let mut omega = 0.0;
    let mut samples = sweep_once(op, cfg, omega, opts);
    if samples.iter().any(|s| s.norm.is_none()) {
        omega = 1.0;
        samples = sweep_once(op, cfg, omega, opts);
    }
    let failures = samples.iter().filter(|s| s.norm.is_none()).count();
    let m_measured = samples.iter().filter_map(|s| s.norm).fold(0.0, f64::max);
    let max_at = |pred: &dyn Fn(f64) -> bool| {
        samples
            .iter()
            .filter(|s| pred(s.angle_deg.abs()))
            .filter_map(|s| s.norm)
            .fold(0.0, f64::max)
    };
    let ray = max_at(&|a| a == 0.0);
    let theta_deg = if samples
        .iter()
        .any(|s| s.angle_deg == 0.0 && s.norm.is_some())
    {
        let mut angles: Vec<f64> = cfg.angles_deg.iter().map(|a| a.abs()).collect();
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        angles
            .into_iter()
            .take_while(|&th| max_at(&|a| a <= th) < 2.0 * ray)
            .last()
    } else {
        None
    };
    SectorialReport {
        max_angle_deg: cfg.angles_deg.iter().fold(0.0, |m, a| m.max(a.abs())),
        samples,
        m_measured,
        omega,
        theta_deg,
        failures,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EvolutionMethod {
    Yosida { n: u32 },
    BackwardEuler { steps: u32 },
    EigenReference,
}

impl std::str::FromStr for EvolutionMethod {
    type Err = SemigroupError;

    /// `yosida:N`, `be:STEPS` or `eigen`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SemigroupError::InvalidParameter(format!("unknown evolution method {s:?}"));
        match s.split_once(':') {
            Some(("yosida", n)) => Ok(EvolutionMethod::Yosida {
                n: n.parse().map_err(|_| bad())?,
            }),
            Some(("be", n)) => Ok(EvolutionMethod::BackwardEuler {
                steps: n.parse().map_err(|_| bad())?,
            }),
            None if s == "eigen" => Ok(EvolutionMethod::EigenReference),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupTrace {
    pub times: Vec<f64>,
    pub snapshots: Vec<GridFunction>,
    pub method: EvolutionMethod,
}

fn check_time(t: f64) -> Result<(), SemigroupError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(SemigroupError::InvalidParameter(format!(
            "time must be ≥ 0, got {t}"
        )))
    }
}

/// Relative tolerance of the substepped Yosida integrator.
const RK_TOL: f64 = 1e-9;

/// `e^{tB_n}u₀` with `B_n = n²(nI − A_h)⁻¹ − nI`, evaluated as
/// `e^{−tn}·exp(t n² R_n)u₀`. Dense scaling-and-squaring up to
/// [`DENSE_LIMIT`] unknowns, adaptive RK4 substeps otherwise.
pub fn yosida_evolve(
    op: &DiscreteOperator,
    u0: &GridFunction,
    t: f64,
    n: u32,
) -> Result<GridFunction, SemigroupError> {
    yosida_evolve_with(op, u0, t, n, op.n() <= DENSE_LIMIT)
}

/// [`yosida_evolve`] with an explicit choice of path.
pub fn yosida_evolve_with(
    op: &DiscreteOperator,
    u0: &GridFunction,
    t: f64,
    n: u32,
    dense: bool,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    expect_len(op.n(), u0.len())?;
    if n == 0 {
        return Err(SemigroupError::InvalidParameter(
            "Yosida index must be positive".into(),
        ));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let nf = n as f64;
    let sys = op.shifted_system(nf, SolverOptions::default())?;
    let u = if dense {
        let r = sys.dense_inverse()?;
        yosida_dense(&r, u0.values(), t, nf)
    } else {
        yosida_rk4(&sys, u0.values(), t, nf)?
    };
    Ok(GridFunction::new(u, op.h())?)
}

fn yosida_dense(r: &DMatrix<f64>, u0: &[f64], t: f64, n: f64) -> Vec<f64> {
    let m = r * (t * n * n);
    let norm = dense_inf_norm(&m).max(t * n);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 2f64.powi(-s);
    let ms = &m * scale;
    // Taylor series of exp(M/2^s) with e^{−tn/2^s} folded in; every term
    // is entrywise nonnegative
    let damp = (-t * n * scale).exp();
    let dim = m.nrows();
    let mut term = DMatrix::<f64>::identity(dim, dim) * damp;
    let mut e = term.clone();
    for k in 1..60 {
        term = &ms * &term / k as f64;
        e += &term;
        if dense_inf_norm(&term) <= 1e-18 * dense_inf_norm(&e) {
            break;
        }
    }
    for _ in 0..s {
        e = &e * &e;
    }
    (e * DVector::from_column_slice(u0)).as_slice().to_vec()
}

fn yosida_rk4(
    sys: &LinearSystem<f64>,
    u0: &[f64],
    t: f64,
    n: f64,
) -> Result<Vec<f64>, SemigroupError> {
    let rhs = |y: &[f64]| -> Result<Vec<f64>, SemigroupError> {
        let (r, _) = sys.solve(y)?;
        Ok(r.iter()
            .zip(y)
            .map(|(ri, yi)| n * n * ri - n * yi)
            .collect())
    };
    let step = |y: &[f64], tau: f64| -> Result<Vec<f64>, SemigroupError> {
        let axpy = |k: &[f64], a: f64| {
            y.iter()
                .zip(k)
                .map(|(yi, ki)| yi + a * ki)
                .collect::<Vec<_>>()
        };
        let k1 = rhs(y)?;
        let k2 = rhs(&axpy(&k1, tau / 2.0))?;
        let k3 = rhs(&axpy(&k2, tau / 2.0))?;
        let k4 = rhs(&axpy(&k3, tau))?;
        Ok((0..y.len())
            .map(|i| y[i] + tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    };
    let mut y = u0.to_vec();
    let mut now = 0.0;
    let mut tau = (0.5 / n).min(t);
    let mut rejections = 0;
    while now < t {
        let h = tau.min(t - now);
        // step doubling: compare one step of h against two of h/2
        let full = step(&y, h)?;
        let half = step(&step(&y, h / 2.0)?, h / 2.0)?;
        let scale = max_modulus(&half)
            .max(max_modulus(u0))
            .max(f64::MIN_POSITIVE);
        let diff = half
            .iter()
            .zip(&full)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let estimate = diff / 15.0 / scale;
        if estimate <= RK_TOL {
            y = half;
            now += h;
            continue;
        }
        rejections += 1;
        if rejections > 40 || h < 1e-12 * t {
            return Err(SemigroupError::StepRejection { t: now, estimate });
        }
        tau = h / 2.0;
    }
    Ok(y)
}

/// `((I − τA_h)⁻¹)^steps u₀` with `τ = t / steps`.
pub fn evolve_backward_euler(
    op: &DiscreteOperator,
    u0: &GridFunction,
    t: f64,
    steps: u32,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    expect_len(op.n(), u0.len())?;
    if steps == 0 {
        return Err(SemigroupError::InvalidParameter("steps must be ≥ 1".into()));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let tau = t / steps as f64;
    let sys = op.shifted_system(1.0 / tau, SolverOptions::default())?;
    let mut u = u0.values().to_vec();
    for _ in 0..steps {
        let rhs: Vec<f64> = u.iter().map(|v| v / tau).collect();
        u = sys.solve(&rhs)?.0;
    }
    Ok(GridFunction::new(u, op.h())?)
}

/// `e^{tA_h}u₀` by symmetric eigendecomposition; `A_h` must be symmetric.
pub fn eigen_reference(
    op: &DiscreteOperator,
    u0: &GridFunction,
    t: f64,
) -> Result<GridFunction, SemigroupError> {
    check_time(t)?;
    expect_len(op.n(), u0.len())?;
    let a = op.interior().to_dense();
    let asym = (&a - a.transpose()).abs().max();
    if asym > 1e-12 * a.abs().max() {
        return Err(SemigroupError::InvalidParameter(
            "eigen reference needs a symmetric operator".into(),
        ));
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let v = &eig.eigenvectors;
    let mut c = v.transpose() * DVector::from_column_slice(u0.values());
    for (ci, l) in c.iter_mut().zip(eig.eigenvalues.iter()) {
        *ci *= (t * l).exp();
    }
    Ok(GridFunction::new((v * c).as_slice().to_vec(), op.h())?)
}

pub fn evolve(
    op: &DiscreteOperator,
    u0: &GridFunction,
    t: f64,
    method: EvolutionMethod,
) -> Result<GridFunction, SemigroupError> {
    match method {
        EvolutionMethod::Yosida { n } => yosida_evolve(op, u0, t, n),
        EvolutionMethod::BackwardEuler { steps } => evolve_backward_euler(op, u0, t, steps),
        EvolutionMethod::EigenReference => eigen_reference(op, u0, t),
    }
}

/// Snapshots at `times`, each computed from `u₀` directly.
pub fn evolve_trace(
    op: &DiscreteOperator,
    u0: &GridFunction,
    times: &[f64],
    method: EvolutionMethod,
) -> Result<SemigroupTrace, SemigroupError> {
    let mut all = vec![0.0];
    all.extend(times.iter().copied().filter(|&t| t != 0.0));
    let snapshots = all
        .par_iter()
        .map(|&t| evolve(op, u0, t, method))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemigroupTrace {
        times: all,
        snapshots,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipativityEntry {
    pub lambda: f64,
    /// `λ‖(λ − A_h)⁻¹‖∞`.
    pub value: f64,
    /// `λ / (λ + min(−c))`, never above 1.
    pub bound: f64,
    pub method: NormMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub entries: Vec<DissipativityEntry>,
    pub pass: bool,
}

/// `λ‖(λ − A_h)⁻¹‖∞ ≤ 1 + 1e-12` for every `λ`. Dense inverse up to
/// [`DENSE_LIMIT`] unknowns; beyond, the norm is the max of
/// `(λ − A_h)⁻¹·1`, exact for a nonnegative inverse.
pub fn dissipativity_check(
    op: &DiscreteOperator,
    lambdas: &[f64],
) -> Result<DissipativityReport, SemigroupError> {
    require_certified(op)?;
    let slack = op.report().map_or(0.0, |r| r.slack.max(0.0));
    let entries = lambdas
        .iter()
        .map(|&lambda| {
            check_lambda(Complex64::new(lambda, 0.0))?;
            let sys = op.shifted_system(lambda, SolverOptions::default())?;
            let (norm, method) = if op.n() <= DENSE_LIMIT {
                (
                    dense_inf_norm(&sys.dense_inverse()?),
                    NormMethod::DenseInverse,
                )
            } else {
                let (x, _) = sys.solve(&vec![1.0; op.n()])?;
                (
                    x.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                    NormMethod::NormEstimator,
                )
            };
            Ok(DissipativityEntry {
                lambda,
                value: lambda * norm,
                bound: lambda / (lambda + slack),
                method,
            })
        })
        .collect::<Result<Vec<_>, SemigroupError>>()?;
    let pass = entries.iter().all(|e| e.value <= 1.0 + 1e-12);
    Ok(DissipativityReport { entries, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub lambda: f64,
    pub trials: usize,
    /// Smallest entry over all resolvent outputs.
    pub min_value: f64,
    /// Smallest entry of the dense inverse, on small grids.
    pub dense_min: Option<f64>,
    pub pass: bool,
}

/// `(λ − A_h)⁻¹f ≥ −1e-12` for random `f ≥ 0`, plus an entrywise check of
/// the dense inverse when it is small enough.
pub fn positivity_check<R: Rng>(
    op: &DiscreteOperator,
    lambda: f64,
    trials: usize,
    rng: &mut R,
) -> Result<PositivityReport, SemigroupError> {
    check_lambda(Complex64::new(lambda, 0.0))?;
    let sys = op.shifted_system(lambda, SolverOptions::default())?;
    let mut min_value = f64::INFINITY;
    for _ in 0..trials {
        let f: Vec<f64> = (0..op.n()).map(|_| rng.random_range(0.0..1.0)).collect();
        let (u, _) = sys.solve(&f)?;
        min_value = u.iter().copied().fold(min_value, f64::min);
    }
    let dense_min = if op.n() <= DENSE_LIMIT {
        Some(sys.dense_inverse()?.min())
    } else {
        None
    };
    let pass = min_value >= -1e-12 && dense_min.is_none_or(|m| m >= -1e-12);
    Ok(PositivityReport {
        lambda,
        trials,
        min_value,
        dense_min,
        pass,
    })
}

/// `true` if every interior node reaches every other through positive
/// off-diagonal entries of `A_h`.
pub fn is_irreducible(op: &DiscreteOperator) -> bool {
    let n = op.n();
    if n == 0 {
        return false;
    }
    let m = op.interior();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for (j, v) in m.row(i) {
            if j != i && v > 0.0 && !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    // a positive weight i→j with a symmetric-pattern stencil also gives
    // j→i, so reachability from node 0 decides connectivity
    count == n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictPositivityReport {
    pub times: Vec<f64>,
    /// Minimum over interior nodes at each time.
    pub minima: Vec<f64>,
    pub steps: u32,
    pub skipped: bool,
    pub pass: bool,
}

/// Evolves `f ≥ 0, f ≢ 0` by backward Euler and requires a strictly
/// positive result at every interior node and every time. `f = 0` is
/// reported as skipped.
pub fn strict_positivity_check(
    op: &DiscreteOperator,
    f: &GridFunction,
    times: &[f64],
    steps: u32,
) -> Result<StrictPositivityReport, SemigroupError> {
    require_certified(op)?;
    expect_len(op.n(), f.len())?;
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(SemigroupError::InvalidParameter(
            "initial datum must be ≥ 0".into(),
        ));
    }
    if !is_irreducible(op) {
        return Err(SemigroupError::DisconnectedDomain);
    }
    if f.values().iter().all(|&v| v == 0.0) {
        return Ok(StrictPositivityReport {
            times: times.to_vec(),
            minima: vec![0.0; times.len()],
            steps,
            skipped: true,
            pass: true,
        });
    }
    let minima = times
        .par_iter()
        .map(|&t| {
            Ok(evolve_backward_euler(op, f, t, steps)?
                .values()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<Vec<f64>, SemigroupError>>()?;
    let pass = minima.iter().all(|&m| m > 0.0);
    Ok(StrictPositivityReport {
        times: times.to_vec(),
        minima,
        steps,
        skipped: false,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMaxReport {
    pub lambda: Complex64,
    pub interior_max: f64,
    pub boundary_max: f64,
    pub pass: bool,
}

/// Solves `(λ − A_h)u = 0` with `u = g` on the boundary and checks that
/// `max |u|` is attained on the boundary.
pub fn complex_max_principle_check(
    op: &DiscreteOperator,
    lambda: Complex64,
    g: &[Complex64],
) -> Result<ComplexMaxReport, SemigroupError> {
    require_certified(op)?;
    check_lambda(lambda)?;
    let sys = op.shifted_system(lambda, SolverOptions::default())?;
    complex_max_with(op, &sys, lambda, g)
}

/// [`complex_max_principle_check`] with a prepared `λ − A_h`.
pub fn complex_max_with(
    op: &DiscreteOperator,
    sys: &LinearSystem<Complex64>,
    lambda: Complex64,
    g: &[Complex64],
) -> Result<ComplexMaxReport, SemigroupError> {
    require_certified(op)?;
    let b = op.boundary_coupling();
    expect_len(b.ncols(), g.len())?;
    let rhs = b.map(|v| Complex64::new(v, 0.0)).mul_vec(g);
    let (u, _) = sys.solve(&rhs)?;
    let interior_max = max_modulus(&u);
    let boundary_max = max_modulus(g);
    Ok(ComplexMaxReport {
        lambda,
        interior_max,
        boundary_max,
        pass: interior_max <= boundary_max + 1e-12,
    })
}

/// Central-difference gradient magnitude `max |D_h u|` with zero boundary
/// values.
pub fn gradient_sup(op: &DiscreteOperator, u: &[f64]) -> f64 {
    let grid = op.grid();
    let h = op.h();
    let val = |k: usize, di: i64, dj: i64| match grid.neighbor(k, di, dj) {
        Some(crate::grid::NodeRef::Interior(q)) => u[q],
        _ => 0.0,
    };
    (0..op.n())
        .map(|k| {
            let dx = (val(k, 1, 0) - val(k, -1, 0)) / (2.0 * h);
            let dy = (val(k, 0, 1) - val(k, 0, -1)) / (2.0 * h);
            dx.hypot(dy)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundReport {
    /// `(ε, c_ε)` pairs, `ε` decreasing.
    pub constants: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Smallest `c_ε` with `‖D_h u‖∞ ≤ ε‖A_h u‖∞ + c_ε‖u‖∞` over `family`.
pub fn gradient_bound_probe(
    op: &DiscreteOperator,
    family: &[GridFunction],
    epsilons: &[f64],
) -> Result<GradientBoundReport, SemigroupError> {
    let zero = vec![0.0; op.boundary_coupling().ncols()];
    let norms = family
        .iter()
        .map(|u| {
            expect_len(op.n(), u.len())?;
            let au = op.apply(u.values(), &zero)?;
            Ok((
                gradient_sup(op, u.values()),
                au.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
                u.sup_norm(),
            ))
        })
        .collect::<Result<Vec<_>, SemigroupError>>()?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let constants: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| {
            let c = norms
                .iter()
                .filter(|n| n.2 > 0.0)
                .map(|&(d, a, s)| (d - e * a).max(0.0) / s)
                .fold(0.0, f64::max);
            (e, c)
        })
        .collect();
    let pass =
        constants.iter().all(|c| c.1.is_finite()) && constants.windows(2).all(|w| w[1].1 >= w[0].1);
    Ok(GradientBoundReport { constants, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub lambda: f64,
    /// Singular values of `(λ − A_h)⁻¹`, descending.
    pub singular_values: Vec<f64>,
    /// `σ_{N/4} / σ₁`.
    pub ratio_quarter: f64,
    /// `σ_{N/2} / σ₁`.
    pub ratio_half: f64,
}

/// Singular values of the dense resolvent.
pub fn compactness_proxy(
    op: &DiscreteOperator,
    lambda: f64,
) -> Result<CompactnessReport, SemigroupError> {
    check_lambda(Complex64::new(lambda, 0.0))?;
    if op.n() > DENSE_LIMIT {
        return Err(SemigroupError::InvalidParameter(format!(
            "compactness proxy needs ≤ {DENSE_LIMIT} unknowns, got {}",
            op.n()
        )));
    }
    let sys = op.shifted_system(lambda, SolverOptions::default())?;
    let inv = sys.dense_inverse()?;
    let mut sv: Vec<f64> = inv.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let n = sv.len();
    let at = |k: usize| sv[k.saturating_sub(1).min(n - 1)] / sv[0];
    Ok(CompactnessReport {
        lambda,
        ratio_quarter: at(n / 4),
        ratio_half: at(n / 2),
        singular_values: sv,
    })
}
