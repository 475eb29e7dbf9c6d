//! Adaptive spectral coarse space.
//!
//! On each subdomain the pencil `L xi = lambda R xi` is solved in the
//! Maxwell-harmonic basis, where `L = (W V)^H S (W V)`, `R = V^H S V`, `W` is
//! the diagonal of partition-of-unity weights and `S` the local imp Gram.
//! Modes with `lambda >= rho^2` are kept; their weighted prolongations form
//! the columns of the global coarse matrix, and the Galerkin coarse operator
//! is factored once.

use faer::prelude::Solve;
use faer::Mat;

use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_gen_eig, ComplexSparseMatrix};
use crate::local_problems::{sparse_times_dense, HarmonicBasis, LocalSystem};
use crate::C64;

const EIGENVALUE_CLAMP: f64 = 1e-10;

/// Eigenpairs of one subdomain pencil with the tolerance-selected subset.
pub struct SpectralSelection {
    /// Ascending, clamped to be nonnegative.
    pub eigenvalues: Vec<f64>,
    /// R-orthonormal coefficient vectors in harmonic-basis coordinates.
    pub vectors: Mat<C64>,
    pub rho: f64,
    /// Indices with `eigenvalue >= rho^2`.
    pub selected: Vec<usize>,
}

/// The GenEO-style pencil of one subdomain. `chi` holds the
/// partition-of-unity weights on the subdomain edges.
pub fn build_geneo_pencil(
    local: &LocalSystem,
    harmonic: &HarmonicBasis,
    chi: &[f64],
) -> (Mat<C64>, Mat<C64>) {
    assert_eq!(chi.len(), local.n_local());
    let m = harmonic.v.ncols();
    let n = local.n_local();
    let mut wv = Mat::<C64>::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            wv[(i, j)] = chi[i] * harmonic.v[(i, j)];
        }
    }
    let swv = sparse_times_dense(&local.s_imp, &wv);
    let l = wv.adjoint() * &swv;
    (hermitize(l), hermitize(harmonic.gram.clone()))
}

fn hermitize(m: Mat<C64>) -> Mat<C64> {
    let n = m.nrows();
    let mut out = m;
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)].conj());
            out[(i, j)] = avg;
            out[(j, i)] = avg.conj();
        }
        out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
    }
    out
}

/// Solve the pencil and keep the modes above the tolerance: `lambda >= rho^2`
/// (ties at the threshold keep every tied mode).
pub fn select_modes(l: &Mat<C64>, r: &Mat<C64>, rho: f64) -> Result<SpectralSelection> {
    if !(0.0 < rho && rho < 1.0) {
        return Err(Error::config("rho must lie in (0, 1)"));
    }
    if l.nrows() == 0 {
        return Ok(SpectralSelection {
            eigenvalues: Vec::new(),
            vectors: Mat::zeros(0, 0),
            rho,
            selected: Vec::new(),
        });
    }
    let (raw, vectors) = hermitian_gen_eig(l, r)?;
    let mut eigenvalues = Vec::with_capacity(raw.len());
    for lam in raw {
        if lam < -EIGENVALUE_CLAMP {
            return Err(Error::Coarse(format!(
                "pencil eigenvalue {lam:.3e} is negative beyond roundoff"
            )));
        }
        eigenvalues.push(lam.max(0.0));
    }
    let threshold = rho * rho;
    let selected = (0..eigenvalues.len())
        .filter(|&i| eigenvalues[i] >= threshold)
        .collect();
    Ok(SpectralSelection {
        eigenvalues,
        vectors,
        rho,
        selected,
    })
}

/// Tolerance rule `rho = min(C0 kappa^-sigma, 0.999)` with
/// `sigma = 2 - (alpha + beta) + gamma / 2`.
pub fn choose_rho(kappa: f64, alpha: f64, beta: f64, gamma: f64, c0: f64) -> Result<f64> {
    if !(0.0 <= alpha && alpha <= beta && beta <= 1.0) {
        return Err(Error::config("need 0 <= alpha <= beta <= 1"));
    }
    if !(0.0 < gamma && gamma <= 1.0) {
        return Err(Error::config("need gamma in (0, 1]"));
    }
    if !(c0 > 0.0 && kappa > 0.0) {
        return Err(Error::config("need positive C0 and kappa"));
    }
    let sigma = 2.0 - (alpha + beta) + gamma / 2.0;
    Ok((c0 * kappa.powf(-sigma)).min(0.999))
}

/// One column of the coarse matrix: values over a sorted global-edge support.
#[derive(Debug, Clone)]
pub struct CoarseColumn {
    pub support: Vec<usize>,
    pub values: Vec<C64>,
}

impl CoarseColumn {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Conjugated dot product with a global vector.
    pub fn dot_global(&self, global: &[C64]) -> C64 {
        self.support
            .iter()
            .zip(&self.values)
            .map(|(&e, v)| v.conj() * global[e])
            .sum()
    }

    pub fn axpy_global(&self, alpha: C64, global: &mut [C64]) {
        for (&e, v) in self.support.iter().zip(&self.values) {
            global[e] += alpha * v;
        }
    }
}

/// Global coarse basis with the factored Galerkin operator `A0 = C^H A C`.
pub struct CoarseSpace {
    pub columns: Vec<CoarseColumn>,
    a0_lu: Option<faer::linalg::solvers::PartialPivLu<C64>>,
}

impl CoarseSpace {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn empty() -> Self {
        CoarseSpace {
            columns: Vec::new(),
            a0_lu: None,
        }
    }

    /// Assemble and factor `A0` from weighted columns; an empty column set
    /// yields the empty coarse space (one-level fallback).
    pub fn build(a: &ComplexSparseMatrix, columns: Vec<CoarseColumn>) -> Result<Self> {
        let columns: Vec<CoarseColumn> = columns
            .into_iter()
            .filter(|c| c.norm() > 1e-13)
            .collect();
        let dim = columns.len();
        if dim == 0 {
            return Ok(CoarseSpace::empty());
        }
        let n = a.nrows();
        let mut a0 = Mat::<C64>::zeros(dim, dim);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        for j in 0..dim {
            for v in tmp.iter_mut() {
                *v = C64::new(0.0, 0.0);
            }
            columns[j].axpy_global(C64::new(1.0, 0.0), &mut tmp);
            let ac = a.matvec(&tmp);
            for (i, ci) in columns.iter().enumerate() {
                a0[(i, j)] = ci.dot_global(&ac);
            }
        }
        let lu = a0.partial_piv_lu();
        // probe the factorization for numerical singularity
        let mut probe = Mat::<C64>::zeros(dim, 1);
        for i in 0..dim {
            probe[(i, 0)] = C64::new(1.0 + (i % 7) as f64, 0.5);
        }
        let x = lu.solve(&probe);
        let ax = &a0 * &x;
        let mut resid = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..dim {
            resid += (ax[(i, 0)] - probe[(i, 0)]).norm_sqr();
            scale += probe[(i, 0)].norm_sqr();
        }
        if !(resid.sqrt() <= 1e-6 * scale.sqrt()) {
            return Err(Error::Coarse(
                "coarse operator is numerically singular; consider a larger rho".into(),
            ));
        }
        Ok(CoarseSpace {
            columns,
            a0_lu: Some(lu),
        })
    }

    /// `C A0^-1 C^H r`.
    pub fn apply(&self, r: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); r.len()];
        let Some(lu) = &self.a0_lu else {
            return out;
        };
        let dim = self.dim();
        let mut y = Mat::<C64>::zeros(dim, 1);
        for (j, col) in self.columns.iter().enumerate() {
            y[(j, 0)] = col.dot_global(r);
        }
        let z = lu.solve(&y);
        for (j, col) in self.columns.iter().enumerate() {
            col.axpy_global(z[(j, 0)], &mut out);
        }
        out
    }
}

/// Weighted global coarse columns of the selected modes of one subdomain,
/// ordered by eigenpair index.
pub fn weighted_columns_for_subdomain(
    local: &LocalSystem,
    harmonic: &HarmonicBasis,
    selection: &SpectralSelection,
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
) -> Vec<CoarseColumn> {
    let l = local.l;
    let chi = &pou.chi[l];
    let support = decomposition.subdomains[l].edges.clone();
    let n = local.n_local();
    let mut cols = Vec::with_capacity(selection.selected.len());
    for &i in &selection.selected {
        let mut values = vec![C64::new(0.0, 0.0); n];
        for (row, value) in values.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..harmonic.v.ncols() {
                acc += harmonic.v[(row, k)] * selection.vectors[(k, i)];
            }
            *value = chi[row] * acc;
        }
        cols.push(CoarseColumn {
            support: support.clone(),
            values,
        });
    }
    cols
}

/// Assemble the adaptive coarse space from per-subdomain selections, ordered
/// by (subdomain, eigenpair).
pub fn assemble_coarse(
    locals: &[LocalSystem],
    bases: &[HarmonicBasis],
    selections: &[SpectralSelection],
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
    a: &ComplexSparseMatrix,
) -> Result<CoarseSpace> {
    let mut columns = Vec::new();
    for ((local, basis), sel) in locals.iter().zip(bases).zip(selections) {
        columns.extend(weighted_columns_for_subdomain(
            local,
            basis,
            sel,
            decomposition,
            pou,
        ));
    }
    CoarseSpace::build(a, columns)
}
