//! Hermitian-definite generalized eigensolver.
//!
//! The pencil `L v = lambda R v` (L Hermitian, R Hermitian positive definite)
//! is reduced by the Cholesky factorization `R = G G^H` to the standard
//! Hermitian problem `G^-1 L G^-H q = lambda q`, which is handled by a dense
//! Hermitian QR-type iteration. Eigenvectors are returned R-orthonormal.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues in nondecreasing order and R-orthonormal eigenvectors
/// (columns), real parts only.
pub fn hermitian_gen_eig(l: &Mat<C64>, r: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let n = l.nrows();
    if l.ncols() != n || r.nrows() != n || r.ncols() != n {
        return Err(Error::config("pencil matrices must be square and matching"));
    }
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let l = hermitize(l)?;
    let r = hermitize(r)?;

    let llt = r.llt(Side::Lower).map_err(
        |faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index }| {
            Error::NotPositiveDefinite { minor: index }
        },
    )?;
    let g = llt.L().to_owned();
    let gh = g.adjoint().to_owned();

    // B = G^-1 L G^-H, computed by two triangular solves.
    let mut x = l.clone();
    solve_lower_triangular_in_place(g.as_ref(), x.as_mut(), Par::Seq);
    let mut y = x.adjoint().to_owned();
    solve_lower_triangular_in_place(g.as_ref(), y.as_mut(), Par::Seq);
    let mut b = y.adjoint().to_owned();
    // roundoff symmetrization
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (b[(i, j)] + b[(j, i)].conj());
            b[(i, j)] = avg;
            b[(j, i)] = avg.conj();
        }
        b[(i, i)] = C64::new(b[(i, i)].re, 0.0);
    }

    let evd = b
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence)?;
    let mut eigenvalues = Vec::with_capacity(n);
    for i in 0..n {
        let s = evd.S()[i];
        debug_assert!(s.im.abs() <= HERMITIAN_TOL * (1.0 + s.re.abs()));
        eigenvalues.push(s.re);
    }

    // V = G^-H Q restores R-orthonormality: V^H R V = Q^H Q = I.
    let mut v = evd.U().to_owned();
    solve_upper_triangular_in_place(gh.as_ref(), v.as_mut(), Par::Seq);

    Ok((eigenvalues, v))
}

fn hermitize(m: &Mat<C64>) -> Result<Mat<C64>> {
    let n = m.nrows();
    let scale = 1.0 + frobenius(m);
    let mut out = Mat::zeros(n, n);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            out[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        }
    }
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { asymmetry: asym / scale });
    }
    Ok(out)
}

pub(crate) fn frobenius(m: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}
