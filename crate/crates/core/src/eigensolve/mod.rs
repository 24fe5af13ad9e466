//! Extreme eigenpairs of symmetric pencils `S v = lambda M v`.
//!
//! Small pencils (`n <= DENSE_LIMIT`) are reduced to a standard dense
//! problem through the Cholesky factor of `M`. Larger ones use shift-invert
//! Lanczos: a shift `sigma` is pushed below the spectrum until `S - sigma M`
//! admits a sparse Cholesky factorization, after which the ground state is
//! the dominant eigenvector of `(S - sigma M)^{-1} M`.

mod dense;
mod lanczos;

use std::sync::Arc;

use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Side;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{Pattern, SymSparse};

pub use dense::{dense_generalized_eigen, DenseEigen};

/// Pencils up to this dimension are solved densely.
pub const DENSE_LIMIT: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
const START_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("mass matrix is not positive definite")]
    IndefiniteMass,
    #[error("pencil dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty pencil")]
    Empty,
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("could not find a shift below the spectrum")]
    ShiftFailure,
    #[error("factorization failed: {0}")]
    Factorization(String),
}

type Result<T> = std::result::Result<T, EigenError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub eigenvalue: f64,
    /// M-normalized.
    pub eigenvector: Vec<f64>,
    /// See [`relative_residual`].
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Which algorithm handles a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense for dimension up to [`DENSE_LIMIT`], Krylov above.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// Starting vector; the deterministic default is used when absent.
    pub start: Option<Vec<f64>>,
    /// A guess of the target eigenvalue (for example from a nearby solve).
    pub shift_hint: Option<f64>,
    /// Largest Krylov basis before a restart.
    pub max_basis: usize,
    pub method: Method,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: DEFAULT_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            start: None,
            shift_hint: None,
            max_basis: 40,
            method: Method::Auto,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64, max_iterations: usize) -> Self {
        EigenOptions {
            tol,
            max_iterations,
            ..Default::default()
        }
    }
}

/// All-ones plus a fixed-seed perturbation of relative size 0.1.
pub fn default_start(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    (0..n).map(|_| 1.0 + 0.1 * rng.gen_range(-1.0..1.0)).collect()
}

pub fn smallest_eigenpair(
    s: &SymSparse,
    m: &SymSparse,
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    PencilSolver::new(m.clone()).smallest(s, &EigenOptions::with_tol(tol, max_iterations))
}

pub fn largest_eigenpair(
    s: &SymSparse,
    m: &SymSparse,
    tol: f64,
    max_iterations: usize,
) -> Result<SpectralResult> {
    PencilSolver::new(m.clone()).largest(s, &EigenOptions::with_tol(tol, max_iterations))
}

/// Relative residual of an approximate eigenpair,
/// `|S v - lambda M v| / (|S v| + max(|lambda|, 1) |M v|)`.
///
/// Eigenvalues are measured against unit scale (the roots solve
/// `F = -1`), so pairs with `S v = 0`, like constants at zero coupling,
/// are not reported as unconverged.
pub fn relative_residual(s: &SymSparse, m: &SymSparse, lambda: f64, v: &[f64]) -> f64 {
    let sv = s.mul_vec(v);
    let mv = m.mul_vec(v);
    let r = norm(&sv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect::<Vec<_>>());
    let denom = norm(&sv) + lambda.abs().max(1.0) * norm(&mv);
    if denom == 0.0 {
        0.0
    } else {
        r / denom
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sparse Cholesky factorization of a [`SymSparse`] matrix.
pub(crate) struct Factor {
    llt: Llt<usize, f64>,
}

impl Factor {
    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        use faer::linalg::solvers::SolveCore;
        let mut rhs = faer::MatMut::from_column_major_slice_mut(x, x.len(), 1);
        self.llt.solve_in_place_with_conj(faer::Conj::No, rhs.as_mut());
    }
}

fn symbolic_ref(p: &Pattern) -> SymbolicSparseColMatRef<'_, usize> {
    SymbolicSparseColMatRef::new_checked(p.dim(), p.dim(), p.col_ptr(), None, p.row_idx())
}

/// Eigensolver bound to one mass matrix.
///
/// Keeps the positive-definiteness check of `M` and the symbolic Cholesky
/// analysis of the last shifted pattern, so repeated solves with pencils
/// `A - beta B` on a shared pattern only redo the numeric factorization.
pub struct PencilSolver {
    m: SymSparse,
    mass_checked: bool,
    symbolic: Option<(Arc<Pattern>, SymbolicLlt<usize>)>,
}

impl PencilSolver {
    pub fn new(m: SymSparse) -> PencilSolver {
        PencilSolver {
            m,
            mass_checked: false,
            symbolic: None,
        }
    }

    pub fn mass(&self) -> &SymSparse {
        &self.m
    }

    fn check(&self, s: &SymSparse, opts: &EigenOptions) -> Result<()> {
        if s.dim() != self.m.dim() {
            return Err(EigenError::DimensionMismatch(s.dim(), self.m.dim()));
        }
        if s.dim() == 0 {
            return Err(EigenError::Empty);
        }
        if !(opts.tol > 0.0) {
            return Err(EigenError::InvalidTolerance(opts.tol));
        }
        if let Some(x) = &opts.start {
            if x.len() != s.dim() {
                return Err(EigenError::DimensionMismatch(x.len(), s.dim()));
            }
        }
        Ok(())
    }

    pub(crate) fn factor(&mut self, k: &SymSparse) -> Result<Option<Factor>> {
        let p = k.pattern();
        let cached = match &self.symbolic {
            Some((q, _)) => Arc::ptr_eq(q, p) || **q == **p,
            None => false,
        };
        if !cached {
            let sym = SymbolicLlt::try_new(symbolic_ref(p), Side::Upper)
                .map_err(|e| EigenError::Factorization(format!("{e:?}")))?;
            self.symbolic = Some((p.clone(), sym));
        }
        let sym = self.symbolic.as_ref().unwrap().1.clone();
        let mat = SparseColMatRef::new(symbolic_ref(p), k.values());
        Ok(Llt::try_new_with_symbolic(sym, mat, Side::Upper)
            .ok()
            .map(|llt| Factor { llt }))
    }

    fn check_mass(&mut self) -> Result<()> {
        if self.mass_checked {
            return Ok(());
        }
        let m = self.m.clone();
        let ok = if m.dim() <= DENSE_LIMIT {
            dense::cholesky(&m.to_dense()).is_some()
        } else {
            self.factor(&m)?.is_some()
        };
        if !ok {
            return Err(EigenError::IndefiniteMass);
        }
        self.mass_checked = true;
        Ok(())
    }

    /// Minimal eigenpair of `(S, M)`.
    pub fn smallest(&mut self, s: &SymSparse, opts: &EigenOptions) -> Result<SpectralResult> {
        self.check(s, opts)?;
        self.check_mass()?;
        let n = s.dim();
        let dense = match opts.method {
            Method::Auto => n <= DENSE_LIMIT,
            Method::Dense => true,
            Method::Krylov => false,
        };
        if dense {
            let eig = dense_generalized_eigen(&s.to_dense(), &self.m.to_dense())
                .ok_or(EigenError::IndefiniteMass)?;
            let v = eig.vectors[0].clone();
            let lambda = eig.values[0];
            return finish(s, &self.m, lambda, v, 1, opts.tol);
        }
        lanczos::smallest(self, s, opts)
    }

    /// Maximal eigenpair of `(S, M)`.
    pub fn largest(&mut self, s: &SymSparse, opts: &EigenOptions) -> Result<SpectralResult> {
        let opts = EigenOptions {
            shift_hint: opts.shift_hint.map(|h| -h),
            ..opts.clone()
        };
        let mut r = self.smallest(&s.scaled(-1.0), &opts)?;
        r.eigenvalue = -r.eigenvalue;
        Ok(r)
    }
}

/// M-normalizes, fixes the sign (first significant entry positive) and
/// checks the residual contract.
fn finish(
    s: &SymSparse,
    m: &SymSparse,
    lambda: f64,
    mut v: Vec<f64>,
    iterations: usize,
    tol: f64,
) -> Result<SpectralResult> {
    let mn = m.quadratic_form(&v).sqrt();
    let big = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sign = v
        .iter()
        .find(|x| x.abs() > 1e-3 * big)
        .map_or(1.0, |x| x.signum());
    for x in &mut v {
        *x *= sign / mn;
    }
    let relative_residual = relative_residual(s, m, lambda, &v);
    if !(relative_residual <= tol) {
        return Err(EigenError::NonConvergence {
            iterations,
            residual: relative_residual,
        });
    }
    Ok(SpectralResult {
        eigenvalue: lambda,
        eigenvector: v,
        relative_residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cyclic Jacobi eigenvalues of a dense symmetric matrix, ascending.
    pub(crate) fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
        let n = a.len();
        let mut a = a.to_vec();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        d
    }

    #[test]
    fn identity_pencil() {
        let i = SymSparse::identity(5);
        let r = smallest_eigenpair(&i, &i, 1e-9, 500).unwrap();
        assert!((r.eigenvalue - 1.0).abs() < 1e-14);
        assert!((i.quadratic_form(&r.eigenvector) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_pencil() {
        let s = SymSparse::diagonal(&[3.0, -2.0, 7.0]).unwrap();
        let i = SymSparse::identity(3);
        let r = smallest_eigenpair(&s, &i, 1e-9, 500).unwrap();
        assert!((r.eigenvalue + 2.0).abs() < 1e-14);
        assert!((r.eigenvector[1].abs() - 1.0).abs() < 1e-12);
        let r = largest_eigenpair(&s, &i, 1e-9, 500).unwrap();
        assert!((r.eigenvalue - 7.0).abs() < 1e-14);
    }

    #[test]
    fn indefinite_mass_is_reported() {
        let s = SymSparse::identity(3);
        let m = SymSparse::diagonal(&[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(
            smallest_eigenpair(&s, &m, 1e-9, 500).unwrap_err(),
            EigenError::IndefiniteMass
        );
    }

    #[test]
    fn jacobi_oracle_on_known_matrix() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let d = jacobi_eigenvalues(&a);
        assert!((d[0] - 1.0).abs() < 1e-14 && (d[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn default_start_is_deterministic() {
        assert_eq!(default_start(10), default_start(10));
        assert!(default_start(10).iter().all(|x| (0.9..=1.1).contains(x)));
    }
}
