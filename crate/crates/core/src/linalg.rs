//! Sparse storage and the linear solvers behind every discrete solve.
//!
//! Systems up to [`SolverOptions::direct_limit`] unknowns are factored with a
//! banded LU (lattice ordering keeps the bandwidth at one grid row); larger
//! ones go through Jacobi-preconditioned BiCGSTAB. Both paths are generic
//! over real and complex scalars.

use nalgebra::{ComplexField, DMatrix};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Real or complex field element used by the solvers.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {}

impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> Scalar for T {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("singular system: zero pivot in column {column}")]
    Singular { column: usize },
    #[error(
        "iterative solver stalled after {iterations} iterations (relative residual {residual:e})"
    )]
    Divergence { iterations: usize, residual: f64 },
    #[error("system is nearly singular (condition estimate {estimate:e})")]
    NearSingular { estimate: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate
    /// columns are summed; explicit zeros are kept.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = indices.len();
            for (j, v) in row {
                assert!(j < ncols, "column {j} out of range {ncols}");
                if indices.len() > start && *indices.last().unwrap() == j {
                    let last = values.last_mut().unwrap();
                    *last += v;
                } else {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, nalgebra::one())]).collect())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i)
            .find(|e| e.0 == j)
            .map_or_else(nalgebra::zero, |e| e.1)
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                self.row(i)
                    .fold(nalgebra::zero(), |acc: T, (j, v)| acc + v * x[j])
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `shift·I + scale·self` for a square matrix.
    pub fn shifted(&self, shift: T, scale: T) -> Self {
        assert_eq!(self.nrows, self.ncols);
        let rows = (0..self.nrows)
            .map(|i| {
                let mut r: Vec<(usize, T)> = self.row(i).map(|(j, v)| (j, scale * v)).collect();
                r.push((i, shift));
                r
            })
            .collect();
        Self::from_rows(self.ncols, rows)
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.nrows {
            for (j, _) in self.row(i) {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Diagonal pivot is kept while it is at least this fraction of the column
/// maximum. M-matrices therefore factor without row exchanges, which keeps
/// the sign pattern of the triangular factors.
const PIVOT_THRESHOLD: f64 = 0.1;

/// LU factorization with threshold partial pivoting in LAPACK-style band
/// storage (column-major, `kl` extra super-diagonals for row exchanges).
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<T>,
    piv: Vec<usize>,
    pivot_range: (f64, f64),
}

impl<T: Scalar> BandedLu<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self, SolveError> {
        assert_eq!(a.nrows(), a.ncols(), "banded LU needs a square matrix");
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let w = 2 * kl + ku + 1;
        let mut lu: BandedLu<T> = BandedLu {
            n,
            kl,
            ku,
            ab: vec![nalgebra::zero(); n * w],
            piv: vec![0; n],
            pivot_range: (f64::INFINITY, 0.0),
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                let k = lu.at(i, j);
                lu.ab[k] += v;
            }
        }
        let uw = kl + ku;
        for k in 0..n {
            let rmax = (k + kl).min(n - 1);
            let mut best = k;
            let mut best_mod = 0.0;
            for r in k..=rmax {
                let m = lu.ab[lu.at(r, k)].modulus();
                if m > best_mod {
                    best_mod = m;
                    best = r;
                }
            }
            if best_mod == 0.0 {
                return Err(SolveError::Singular { column: k });
            }
            if lu.ab[lu.at(k, k)].modulus() >= PIVOT_THRESHOLD * best_mod {
                best = k;
            }
            lu.piv[k] = best;
            let jmax = (k + uw).min(n - 1);
            if best != k {
                for j in k..=jmax {
                    let (p, q) = (lu.at(k, j), lu.at(best, j));
                    lu.ab.swap(p, q);
                }
            }
            let pivot = lu.ab[lu.at(k, k)];
            let pm = pivot.modulus();
            lu.pivot_range = (lu.pivot_range.0.min(pm), lu.pivot_range.1.max(pm));
            let col = lu.at(k, k);
            for r in (k + 1)..=rmax {
                lu.ab[col + (r - k)] /= pivot;
            }
            for j in (k + 1)..=jmax {
                let ukj = lu.ab[lu.at(k, j)];
                if ukj == nalgebra::zero() {
                    continue;
                }
                let cj = lu.at(k, j);
                for r in (k + 1)..=rmax {
                    let l = lu.ab[col + (r - k)];
                    lu.ab[cj + (r - k)] -= l * ukj;
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * (2 * self.kl + self.ku + 1) + (i + self.ku + self.kl - j)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of largest to smallest pivot modulus; a cheap lower bound on
    /// the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_range.1 / self.pivot_range.0
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == nalgebra::zero() {
                continue;
            }
            let col = self.at(k, k);
            let hi = (k + self.kl).min(n - 1);
            for (d, br) in b[k + 1..=hi].iter_mut().enumerate() {
                *br -= self.ab[col + d + 1] * bk;
            }
        }
        let uw = self.kl + self.ku;
        for k in (0..n).rev() {
            let xk = b[k] / self.ab[self.at(k, k)];
            b[k] = xk;
            if xk == nalgebra::zero() {
                continue;
            }
            let lo = k.saturating_sub(uw);
            let base = self.at(lo, k);
            for (d, bi) in b[lo..k].iter_mut().enumerate() {
                *bi -= self.ab[base + d] * xk;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    BandedLu,
    BiCgStab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Largest system solved by direct factorization.
    pub direct_limit: usize,
    /// Relative residual `‖b − Ax‖∞ / ‖b‖∞` required on success.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Condition estimate beyond which a system is reported near-singular.
    pub max_condition: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            direct_limit: 40_000,
            rel_tol: 1e-10,
            max_iter: 20_000,
            max_condition: 1e14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// A square system prepared for repeated solves.
#[derive(Debug, Clone)]
pub struct LinearSystem<T> {
    matrix: CsrMatrix<T>,
    lu: Option<BandedLu<T>>,
    opts: SolverOptions,
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new(matrix: CsrMatrix<T>, opts: SolverOptions) -> Result<Self, SolveError> {
        let lu = if matrix.nrows() <= opts.direct_limit {
            let lu = BandedLu::factor(&matrix)?;
            if lu.pivot_ratio() > opts.max_condition {
                return Err(SolveError::NearSingular {
                    estimate: lu.pivot_ratio(),
                });
            }
            Some(lu)
        } else {
            None
        };
        Ok(LinearSystem { matrix, lu, opts })
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn method(&self) -> SolveMethod {
        if self.lu.is_some() {
            SolveMethod::BandedLu
        } else {
            SolveMethod::BiCgStab
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<(Vec<T>, SolveStats), SolveError> {
        let n = self.dim();
        if b.len() != n {
            return Err(SolveError::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let bnorm = max_modulus(b);
        if bnorm == 0.0 {
            return Ok((
                vec![nalgebra::zero(); n],
                SolveStats {
                    method: self.method(),
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }
        match &self.lu {
            Some(lu) => {
                let mut x = lu.solve(b);
                let mut res = self.residual(b, &x);
                let mut rel = max_modulus(&res) / bnorm;
                let mut steps = 0;
                // iterative refinement
                while rel > self.opts.rel_tol * 1e-2 && steps < 3 {
                    lu.solve_in_place(&mut res);
                    for (xi, di) in x.iter_mut().zip(&res) {
                        *xi += *di;
                    }
                    res = self.residual(b, &x);
                    rel = max_modulus(&res) / bnorm;
                    steps += 1;
                }
                if rel > self.opts.rel_tol {
                    return Err(SolveError::Divergence {
                        iterations: steps,
                        residual: rel,
                    });
                }
                Ok((
                    x,
                    SolveStats {
                        method: SolveMethod::BandedLu,
                        iterations: steps,
                        relative_residual: rel,
                    },
                ))
            }
            None => {
                let (x, iterations) = bicgstab(&self.matrix, b, self.opts)?;
                let rel = max_modulus(&self.residual(b, &x)) / bnorm;
                if rel > self.opts.rel_tol {
                    return Err(SolveError::Divergence {
                        iterations,
                        residual: rel,
                    });
                }
                Ok((
                    x,
                    SolveStats {
                        method: SolveMethod::BiCgStab,
                        iterations,
                        relative_residual: rel,
                    },
                ))
            }
        }
    }

    fn residual(&self, b: &[T], x: &[T]) -> Vec<T> {
        let ax = self.matrix.mul_vec(x);
        b.iter().zip(ax).map(|(&bi, ai)| bi - ai).collect()
    }

    /// Dense inverse, one column per unit vector.
    pub fn dense_inverse(&self) -> Result<DMatrix<T>, SolveError> {
        let n = self.dim();
        let cols: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![nalgebra::zero(); n];
                e[j] = nalgebra::one();
                match &self.lu {
                    Some(lu) => {
                        lu.solve_in_place(&mut e);
                        Ok(e)
                    }
                    None => self.solve(&e).map(|s| s.0),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(DMatrix::from_fn(n, n, |i, j| cols[j][i]))
    }
}

pub fn max_modulus<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

/// Max absolute row sum of a dense matrix.
pub fn dense_inf_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(nalgebra::zero(), |acc: T, (&x, &y)| acc + x.conjugate() * y)
}

fn norm2<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

/// Jacobi-preconditioned BiCGSTAB from a zero initial guess.
pub fn bicgstab<T: Scalar>(
    a: &CsrMatrix<T>,
    b: &[T],
    opts: SolverOptions,
) -> Result<(Vec<T>, usize), SolveError> {
    let n = b.len();
    let zero: T = nalgebra::zero();
    let one: T = nalgebra::one();
    let dinv: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d == zero { one } else { one / d })
        .collect();
    let precond = |v: &[T]| -> Vec<T> { v.iter().zip(&dinv).map(|(&x, &d)| x * d).collect() };

    let bnorm = norm2(b);
    let mut x = vec![zero; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut rho = one;
    let mut alpha = one;
    let mut omega = one;
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    // 2-norm target a bit below the ∞-norm acceptance threshold
    let target = opts.rel_tol * 1e-2 * bnorm;
    for it in 1..=opts.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.modulus() == 0.0 {
            return Err(SolveError::Divergence {
                iterations: it,
                residual: norm2(&r) / bnorm,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let phat = precond(&p);
        v = a.mul_vec(&phat);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<T> = r.iter().zip(&v).map(|(&ri, &vi)| ri - alpha * vi).collect();
        if norm2(&s) <= target {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok((x, it));
        }
        let shat = precond(&s);
        let t = a.mul_vec(&shat);
        let tt = dot(&t, &t);
        omega = if tt == zero { zero } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            return Ok((x, it));
        }
        if omega == zero {
            break;
        }
    }
    Err(SolveError::Divergence {
        iterations: opts.max_iter,
        residual: norm2(&r) / bnorm,
    })
}

/// Randomized lower estimate of `‖A⁻¹‖∞` from `probes` random-phase
/// vectors, sharpened by exact row sums of the most promising rows.
///
/// `solve` applies `A⁻¹`, `solve_transpose` applies `A⁻ᵀ` (plain transpose,
/// no conjugation). The result never exceeds the true norm.
pub fn estimate_inverse_inf_norm<T: Scalar, R: Rng>(
    n: usize,
    probes: usize,
    rng: &mut R,
    solve: impl Fn(&[T]) -> Result<Vec<T>, SolveError>,
    solve_transpose: impl Fn(&[T]) -> Result<Vec<T>, SolveError>,
) -> Result<f64, SolveError> {
    let mut score = vec![0.0f64; n];
    for _ in 0..probes {
        let x: Vec<T> = (0..n)
            .map(|_| {
                let re: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
                T::from_real(re)
            })
            .collect();
        let y = solve(&x)?;
        for (s, v) in score.iter_mut().zip(&y) {
            *s = s.max(v.modulus());
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut best = score.iter().copied().fold(0.0, f64::max);
    for &i in order.iter().take(4.min(n)) {
        let mut e = vec![nalgebra::zero::<T>(); n];
        e[i] = nalgebra::one();
        // row i of A⁻¹ is column i of A⁻ᵀ
        let row = solve_transpose(&e)?;
        best = best.max(row.iter().map(|v| v.modulus()).sum());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn laplace_1d(n: usize) -> CsrMatrix<f64> {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(n, rows)
    }

    #[test]
    fn csr_basics() {
        let m = CsrMatrix::from_rows(
            3,
            vec![vec![(2, 1.0), (0, 2.0), (2, 3.0)], vec![], vec![(1, -1.0)]],
        );
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![14.0, 0.0, -2.0]);
        assert_eq!(m.transpose().get(2, 0), 4.0);
        assert_eq!(m.bandwidths(), (1, 2));
        assert_eq!(m.inf_norm(), 6.0);
    }

    #[test]
    fn banded_lu_matches_dense_solve() {
        let a = laplace_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let x = BandedLu::factor(&a).unwrap().solve(&b);
        let dense = a
            .to_dense()
            .lu()
            .solve(&nalgebra::DVector::from_vec(b))
            .unwrap();
        for i in 0..30 {
            assert!((x[i] - dense[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = CsrMatrix::from_rows(2, vec![vec![(1, 1.0)], vec![(0, 1.0), (1, 1.0)]]);
        let x = BandedLu::factor(&a).unwrap().solve(&[2.0, 5.0]);
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let s = CsrMatrix::from_rows(2, vec![vec![(0, 1.0)], vec![(0, 2.0)]]);
        assert_eq!(
            BandedLu::factor(&s).unwrap_err(),
            SolveError::Singular { column: 1 }
        );
    }

    #[test]
    fn iterative_and_direct_agree() {
        let a = laplace_1d(40).shifted(0.5, 1.0);
        let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64 * 0.1).collect();
        let direct = LinearSystem::new(a.clone(), SolverOptions::default()).unwrap();
        let iter = LinearSystem::new(
            a,
            SolverOptions {
                direct_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let (x1, s1) = direct.solve(&b).unwrap();
        let (x2, s2) = iter.solve(&b).unwrap();
        assert_eq!(s1.method, SolveMethod::BandedLu);
        assert_eq!(s2.method, SolveMethod::BiCgStab);
        for i in 0..40 {
            assert!((x1[i] - x2[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn complex_iterative_solve() {
        let a = laplace_1d(25)
            .map(Complex64::from)
            .shifted(Complex64::new(1.0, 3.0), Complex64::new(1.0, 0.0));
        let b: Vec<Complex64> = (0..25).map(|i| Complex64::new(1.0, i as f64)).collect();
        let opts = SolverOptions {
            direct_limit: 0,
            ..Default::default()
        };
        let (x, _) = LinearSystem::new(a.clone(), opts)
            .unwrap()
            .solve(&b)
            .unwrap();
        let r = a.mul_vec(&x);
        for i in 0..25 {
            assert!((r[i] - b[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let sys = LinearSystem::new(laplace_1d(3), SolverOptions::default()).unwrap();
        assert_eq!(
            sys.solve(&[1.0]).unwrap_err(),
            SolveError::DimensionMismatch {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn estimator_is_a_sharp_lower_bound() {
        let a = laplace_1d(20).shifted(0.1, 1.0);
        let sys = LinearSystem::new(a.clone(), SolverOptions::default()).unwrap();
        let syst = LinearSystem::new(a.transpose(), SolverOptions::default()).unwrap();
        let exact = dense_inf_norm(&sys.dense_inverse().unwrap());
        let mut rng = rand::rng();
        let est = estimate_inverse_inf_norm(
            20,
            32,
            &mut rng,
            |b| sys.solve(b).map(|s| s.0),
            |b| syst.solve(b).map(|s| s.0),
        )
        .unwrap();
        assert!(est <= exact * (1.0 + 1e-12));
        assert!(est >= 0.5 * exact);
    }

    proptest! {
        #[test]
        fn banded_lu_solves_random_banded(
            n in 2usize..25,
            entries in proptest::collection::vec(-1.0f64..1.0, 25 * 5),
        ) {
            // diagonally dominant with bandwidth 2
            let rows = (0..n).map(|i| {
                let mut r = Vec::new();
                for (k, d) in [-2i64, -1, 1, 2].iter().enumerate() {
                    let j = i as i64 + d;
                    if j >= 0 && (j as usize) < n {
                        r.push((j as usize, entries[i * 5 + k]));
                    }
                }
                r.push((i, 5.0 + entries[i * 5 + 4]));
                r
            }).collect();
            let a = CsrMatrix::from_rows(n, rows);
            let b: Vec<f64> = (0..n).map(|i| entries[i] * 3.0).collect();
            let x = BandedLu::factor(&a).unwrap().solve(&b);
            let ax = a.mul_vec(&x);
            for i in 0..n {
                prop_assert!((ax[i] - b[i]).abs() < 1e-12);
            }
        }
    }
}
