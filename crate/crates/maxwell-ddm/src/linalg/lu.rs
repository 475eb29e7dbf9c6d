//! Sparse LU with pivoting, backed by faer's supernodal factorization
//! (fill-reducing ordering applied internally).

use faer::prelude::Solve;

use super::sparse::ComplexSparseMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Reusable decomposition of a square complex sparse matrix.
pub struct Factorization {
    lu: faer::sparse::linalg::solvers::Lu<usize, C64>,
    n: usize,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

/// Factor a square complex sparse matrix.
///
/// Structural singularity is reported by the symbolic analysis; numerical
/// singularity is caught by a canary solve against `A * ones`.
pub fn lu_factor(a: &ComplexSparseMatrix) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(Error::config(format!(
            "lu_factor needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let csc = a.to_faer_csc();
    let lu = csc.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
        faer::sparse::linalg::LuError::Generic(_) => Error::config("sparse LU allocation failure"),
    })?;
    let fact = Factorization { lu, n };
    let ones = vec![C64::new(1.0, 0.0); n];
    let canary = lu_solve(&fact, &a.matvec(&ones));
    if let Some(pivot) = canary.iter().position(|v| !v.is_finite()) {
        return Err(Error::Singular { pivot });
    }
    Ok(fact)
}

/// Solve `A x = b` against a cached factorization.
pub fn lu_solve(f: &Factorization, b: &[C64]) -> Vec<C64> {
    assert_eq!(b.len(), f.n);
    let mut rhs = faer::Mat::zeros(f.n, 1);
    for (i, &v) in b.iter().enumerate() {
        rhs[(i, 0)] = v;
    }
    let x = f.lu.solve(&rhs);
    (0..f.n).map(|i| x[(i, 0)]).collect()
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        lu_solve(self, b)
    }

    /// Solve several right-hand sides given as columns of a dense matrix.
    pub fn solve_mat(&self, b: &faer::Mat<C64>) -> faer::Mat<C64> {
        assert_eq!(b.nrows(), self.n);
        self.lu.solve(b)
    }
}
