//! Un-restarted (optionally weighted) GMRES.
//!
//! Arnoldi with modified Gram-Schmidt plus one reorthogonalization pass and
//! Givens rotations for the least-squares update. When a Hermitian positive
//! definite weight `M` is supplied, all inner products are taken in the
//! `M`-inner product and the residual is minimized in the `M`-norm; with no
//! weight the Euclidean norm is used, and the two code paths perform the
//! same arithmetic when `M` is the identity.

use super::sparse::ComplexSparseMatrix;
use crate::C64;

#[derive(Debug, Clone)]
pub struct GmresOptions {
    /// Relative residual reduction target.
    pub tol: f64,
    /// Maximum Krylov dimension (no restarts).
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
    /// Absolute residual norms, one entry per iteration plus the initial one.
    pub history: Vec<f64>,
}

struct Inner<'a> {
    weight: Option<&'a ComplexSparseMatrix>,
}

impl Inner<'_> {
    fn dot(&self, u: &[C64], v: &[C64]) -> C64 {
        match self.weight {
            None => v.iter().zip(u).map(|(a, b)| a.conj() * b).sum(),
            Some(m) => {
                let mu = m.matvec(u);
                v.iter().zip(&mu).map(|(a, b)| a.conj() * b).sum()
            }
        }
    }

    fn norm(&self, u: &[C64]) -> f64 {
        self.dot(u, u).re.max(0.0).sqrt()
    }
}

/// Solve `A x = b` with a zero initial guess, where `apply` realizes `A`.
pub fn gmres<F>(
    apply: F,
    b: &[C64],
    opts: &GmresOptions,
    weight: Option<&ComplexSparseMatrix>,
) -> GmresResult
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let inner = Inner { weight };

    let beta0 = inner.norm(b);
    let mut history = vec![beta0];
    if beta0 == 0.0 {
        return GmresResult {
            x: vec![C64::new(0.0, 0.0); n],
            iterations: 0,
            converged: true,
            history,
        };
    }

    let max_iter = opts.max_iter.min(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter + 1);
    basis.push(b.iter().map(|v| v / beta0).collect());

    // columns of the Hessenberg matrix after Givens rotations (upper
    // triangular part only) and the rotation coefficients
    let mut h_cols: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut cs: Vec<C64> = Vec::with_capacity(max_iter);
    let mut sn: Vec<f64> = Vec::with_capacity(max_iter);
    let mut g = vec![C64::new(0.0, 0.0); max_iter + 1];
    g[0] = C64::new(beta0, 0.0);

    let mut iterations = 0;
    let mut converged = false;

    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let w_scale = inner.norm(&w);

        // modified Gram-Schmidt with one reorthogonalization pass
        let mut h = vec![C64::new(0.0, 0.0); k + 2];
        for _pass in 0..2 {
            for (j, vj) in basis.iter().enumerate() {
                let proj = inner.dot(&w, vj);
                h[j] += proj;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= proj * vi;
                }
            }
        }
        let hk1 = inner.norm(&w);
        h[k + 1] = C64::new(hk1, 0.0);
        let happy = hk1 <= 1e-13 * w_scale.max(f64::MIN_POSITIVE);

        if !happy {
            basis.push(w.iter().map(|v| v / hk1).collect());
        }

        // previously computed rotations
        for j in 0..k {
            let (c, s) = (cs[j], sn[j]);
            let t = c.conj() * h[j] + s * h[j + 1];
            h[j + 1] = -s * h[j] + c * h[j + 1];
            h[j] = t;
        }
        // new rotation zeroing h[k+1] (which is real by construction)
        let (c, s) = {
            let a = h[k];
            let bb = hk1;
            let r = (a.norm_sqr() + bb * bb).sqrt();
            if r == 0.0 {
                (C64::new(1.0, 0.0), 0.0)
            } else {
                (a / r, bb / r)
            }
        };
        let t = c.conj() * h[k] + C64::new(s, 0.0) * h[k + 1];
        h[k] = t;
        h[k + 1] = C64::new(0.0, 0.0);
        cs.push(c);
        sn.push(s);

        let gk = g[k];
        g[k] = c.conj() * gk;
        g[k + 1] = C64::new(-s, 0.0) * gk;

        h_cols.push(h);
        iterations = k + 1;
        let res = if happy { 0.0 } else { g[k + 1].norm() };
        history.push(res);

        if res <= opts.tol * beta0 || happy {
            converged = true;
            break;
        }
    }

    // back substitution: solve the triangular system H y = g
    let m = iterations;
    let mut y = vec![C64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for j in (i + 1)..m {
            acc -= h_cols[j][i] * y[j];
        }
        let d = h_cols[i][i];
        y[i] = if d.norm() > 0.0 { acc / d } else { C64::new(0.0, 0.0) };
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for (j, yj) in y.iter().enumerate() {
        for (xi, vi) in x.iter_mut().zip(&basis[j]) {
            *xi += yj * vi;
        }
    }

    GmresResult {
        x,
        iterations,
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let b: Vec<C64> = (0..7).map(|i| c(i as f64 + 1.0, -0.5)).collect();
        let r = gmres(|v| v.to_vec(), &b, &GmresOptions::default(), None);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.history.len(), 2);
        for (xi, bi) in r.x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs() {
        let b = vec![c(0.0, 0.0); 4];
        let r = gmres(|v| v.to_vec(), &b, &GmresOptions::default(), None);
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.history, vec![0.0]);
    }

    #[test]
    fn diagonal_finite_termination() {
        // diag(1..5): Krylov dimension bound gives at most 5 iterations
        let d: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        let apply = |v: &[C64]| -> Vec<C64> {
            v.iter().zip(&d).map(|(x, s)| x * s).collect()
        };
        let b = vec![c(1.0, 0.0); 5];
        let opts = GmresOptions {
            tol: 1e-12,
            max_iter: 100,
        };
        let r = gmres(apply, &b, &opts, None);
        assert!(r.converged);
        assert!(r.iterations <= 5, "took {}", r.iterations);
        for (i, xi) in r.x.iter().enumerate() {
            assert!((xi - c(1.0 / d[i], 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn history_nonincreasing_and_relative_stop() {
        let n = 40;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut dense = vec![vec![c(0.0, 0.0); n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = if i == j {
                    c(4.0 + rng.gen::<f64>(), 1.0)
                } else {
                    c(0.3 * (rng.gen::<f64>() - 0.5), 0.3 * (rng.gen::<f64>() - 0.5))
                };
            }
        }
        let apply = |v: &[C64]| -> Vec<C64> {
            dense
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
                .collect()
        };
        let b: Vec<C64> = (0..n).map(|_| c(rng.gen(), rng.gen())).collect();
        let r = gmres(&apply, &b, &GmresOptions::default(), None);
        assert!(r.converged);
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
        assert!(r.history.last().unwrap() / r.history[0] <= 1e-6);
        assert_eq!(r.history.len(), r.iterations + 1);
    }

    #[test]
    fn weighted_with_identity_matches_standard_bitwise() {
        let n = 30;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut dense = vec![vec![c(0.0, 0.0); n]; n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = if i == j {
                    c(3.0 + rng.gen::<f64>(), 0.5)
                } else {
                    c(0.4 * (rng.gen::<f64>() - 0.5), 0.4 * (rng.gen::<f64>() - 0.5))
                };
            }
        }
        let apply = |v: &[C64]| -> Vec<C64> {
            dense
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
                .collect()
        };
        let b: Vec<C64> = (0..n).map(|_| c(rng.gen(), rng.gen())).collect();
        let id = ComplexSparseMatrix::identity(n);
        let plain = gmres(&apply, &b, &GmresOptions::default(), None);
        let weighted = gmres(&apply, &b, &GmresOptions::default(), Some(&id));
        assert_eq!(plain.history, weighted.history);
        assert_eq!(plain.x, weighted.x);
    }

    #[test]
    fn stagnation_reports_non_convergence() {
        // rotation-like operator that GMRES cannot resolve in few iterations
        let n = 50;
        let apply = |v: &[C64]| -> Vec<C64> {
            let mut out = vec![c(0.0, 0.0); n];
            for i in 0..n {
                out[(i + 1) % n] = v[i];
            }
            out
        };
        let mut b = vec![c(0.0, 0.0); n];
        b[0] = c(1.0, 0.0);
        let opts = GmresOptions {
            tol: 1e-12,
            max_iter: 10,
        };
        let r = gmres(apply, &b, &opts, None);
        assert!(!r.converged);
        assert_eq!(r.iterations, 10);
        assert_eq!(r.history.len(), 11);
    }

    #[test]
    fn arnoldi_basis_orthonormality_drift() {
        // run 100 iterations on a dense random operator and measure the
        // worst loss of orthonormality of the stored basis
        let n = 120;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let dense: Vec<Vec<C64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            c(2.0 + rng.gen::<f64>(), 1.0)
                        } else {
                            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                        }
                    })
                    .collect()
            })
            .collect();
        let apply = |v: &[C64]| -> Vec<C64> {
            dense
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, x)| a * x).sum())
                .collect()
        };
        let b: Vec<C64> = (0..n).map(|_| c(rng.gen(), rng.gen())).collect();
        let opts = GmresOptions {
            tol: 1e-30,
            max_iter: 100,
        };
        // reconstruct the basis by rerunning the same recurrence
        let r = gmres(&apply, &b, &opts, None);
        assert_eq!(r.iterations, 100);
        // drift check via re-orthogonality of residual-generating vectors:
        // rebuild Arnoldi here and compare
        let inner = |u: &[C64], v: &[C64]| -> C64 {
            v.iter().zip(u).map(|(a, b)| a.conj() * b).sum()
        };
        let norm = |u: &[C64]| -> f64 { inner(u, u).re.sqrt() };
        let beta = norm(&b);
        let mut basis: Vec<Vec<C64>> = vec![b.iter().map(|v| v / beta).collect()];
        for k in 0..100 {
            let mut w = apply(&basis[k]);
            for _ in 0..2 {
                for vj in &basis {
                    let p = inner(&w, vj);
                    for (wi, vi) in w.iter_mut().zip(vj) {
                        *wi -= p * vi;
                    }
                }
            }
            let nw = norm(&w);
            basis.push(w.iter().map(|v| v / nw).collect());
        }
        let mut drift = 0.0f64;
        for i in 0..basis.len() {
            for j in 0..=i {
                let d = inner(&basis[i], &basis[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                drift = drift.max((d - c(expect, 0.0)).norm());
            }
        }
        assert!(drift <= 1e-10, "orthonormality drift {drift}");
    }
}
