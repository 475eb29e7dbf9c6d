//! Local impedance systems on the subdomains and the discrete
//! Maxwell-harmonic basis.
//!
//! Each subdomain carries the form `a_l(v, w) = (curl v, curl w) -
//! (kappa^2 + i eps)(v, w) - i kappa <v_T, w_T>_{boundary}` with the
//! impedance term over the whole subdomain boundary. Lifting a tangential
//! trace datum on the interior interface through the factored local system
//! generates the Maxwell-harmonic space used by the coarse constructions.

use faer::Mat;

use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, ComplexSparseMatrix, Factorization};
use crate::mesh::{BoundaryTags, BoxMesh, LOCAL_FACES};
use crate::nedelec::{
    element_matrices, submesh_boundary_faces, CellGeometry, EdgeDofMap, ProblemParams,
};
use crate::C64;

/// Assembled and factored local impedance problem.
pub struct LocalSystem {
    pub l: usize,
    /// Global edge indices (sorted); position = local DOF index.
    pub edges: Vec<usize>,
    /// Local impedance matrix.
    pub a: ComplexSparseMatrix,
    pub factorization: Factorization,
    /// Local imp Gram (boundary term over the whole subdomain boundary).
    pub s_imp: ComplexSparseMatrix,
    /// Unweighted local mass matrix.
    pub m0: ComplexSparseMatrix,
    /// Unweighted tangential Gram over the whole subdomain boundary.
    pub t_bnd: ComplexSparseMatrix,
    /// Local DOF indices on the interior interface (sorted).
    pub gamma_edges: Vec<usize>,
    /// Tangential Gram over the interior interface faces only.
    pub trace_gram: ComplexSparseMatrix,
}

impl LocalSystem {
    pub fn n_local(&self) -> usize {
        self.edges.len()
    }

    /// Dimension of the tangential trace space on the interior interface.
    pub fn m_l(&self) -> usize {
        self.gamma_edges.len()
    }
}

/// Columns span the discrete Maxwell-harmonic space of one subdomain in
/// local DOF coordinates; `gram` caches `V^H S V`.
pub struct HarmonicBasis {
    pub v: Mat<C64>,
    pub gram: Mat<C64>,
}

pub fn assemble_local(
    mesh: &BoxMesh,
    tags: &BoundaryTags,
    dofmap: &EdgeDofMap,
    decomposition: &Decomposition,
    l: usize,
    params: &ProblemParams,
) -> Result<LocalSystem> {
    params.validate()?;
    let sub = &decomposition.subdomains[l];
    let edges = sub.edges.clone();
    let local_of = |g: usize| edges.binary_search(&g).expect("edge in subdomain");
    let n = edges.len();
    let kappa = params.kappa;
    let z_vol = C64::new(kappa * kappa, params.epsilon);

    let mut trip_a = Vec::new();
    let mut trip_k = Vec::new();
    let mut trip_m0 = Vec::new();
    let mut trip_t = Vec::new();
    let mut trip_tg = Vec::new();

    for &cell in &sub.cells {
        let geo = CellGeometry::from_mesh(mesh, cell)?;
        let em = element_matrices(&geo)?;
        let ce = &mesh.cell_edges[cell];
        let signs = &dofmap.cell_signs[cell];
        let eps_r = params.eps_r(cell);
        for i in 0..6 {
            let gi = local_of(ce[i]);
            for j in 0..6 {
                let gj = local_of(ce[j]);
                let s = signs[i] * signs[j];
                let k_ij = s * em.curl_curl[i][j];
                let m_ij = s * em.mass[i][j];
                trip_k.push((gi, gj, C64::new(k_ij, 0.0)));
                trip_m0.push((gi, gj, C64::new(m_ij, 0.0)));
                trip_a.push((gi, gj, C64::new(k_ij, 0.0) - z_vol * eps_r * m_ij));
            }
        }
    }

    let boundary = submesh_boundary_faces(mesh, &sub.cells);
    let mut gamma_edges: Vec<usize> = Vec::new();
    for &(face, cell, lf) in &boundary {
        let geo = CellGeometry::from_mesh(mesh, cell)?;
        let em = element_matrices(&geo)?;
        let ce = &mesh.cell_edges[cell];
        let signs = &dofmap.cell_signs[cell];
        let on_domain_boundary = tags.boundary_index(face).is_some();
        let w_imp = params.impedance_weight(cell);
        for i in 0..6 {
            let gi = local_of(ce[i]);
            for j in 0..6 {
                let gj = local_of(ce[j]);
                let s = signs[i] * signs[j];
                let t_ij = s * em.face_tangential[lf][i][j];
                trip_t.push((gi, gj, C64::new(t_ij, 0.0)));
                trip_a.push((gi, gj, C64::new(0.0, -kappa * w_imp * t_ij)));
                if !on_domain_boundary {
                    trip_tg.push((gi, gj, C64::new(t_ij, 0.0)));
                }
            }
        }
        if !on_domain_boundary {
            let [a, b, c] = LOCAL_FACES[lf];
            for &(u, v) in &[
                (mesh.cells[cell][a], mesh.cells[cell][b]),
                (mesh.cells[cell][a], mesh.cells[cell][c]),
                (mesh.cells[cell][b], mesh.cells[cell][c]),
            ] {
                let key = if u < v { [u, v] } else { [v, u] };
                let e = mesh.edges.binary_search(&key).expect("face edge exists");
                gamma_edges.push(local_of(e));
            }
        }
    }
    gamma_edges.sort_unstable();
    gamma_edges.dedup();

    let a = ComplexSparseMatrix::from_triplets(n, n, trip_a);
    let k = ComplexSparseMatrix::from_triplets(n, n, trip_k);
    let m0 = ComplexSparseMatrix::from_triplets(n, n, trip_m0);
    let t_bnd = ComplexSparseMatrix::from_triplets(n, n, trip_t);
    let trace_gram = ComplexSparseMatrix::from_triplets(n, n, trip_tg);
    let s_imp = k
        .add_scaled(C64::new(kappa * kappa, 0.0), &m0)
        .add_scaled(C64::new(kappa, 0.0), &t_bnd);

    let factorization = lu_factor(&a).map_err(|e| Error::Subdomain {
        subdomain: l,
        message: format!("local impedance matrix factorization failed: {e}"),
    })?;

    Ok(LocalSystem {
        l,
        edges,
        a,
        factorization,
        s_imp,
        m0,
        t_bnd,
        gamma_edges,
        trace_gram,
    })
}

/// Right-hand side of the lifting problem for a trace coefficient vector
/// `lambda` over `gamma_edges`: `b_e = <lambda_h, (psi_e)_T>` on the
/// interface faces.
pub fn lift_rhs(local: &LocalSystem, lambda: &[C64]) -> Vec<C64> {
    assert_eq!(lambda.len(), local.m_l());
    let n = local.n_local();
    let mut expanded = vec![C64::new(0.0, 0.0); n];
    for (j, &le) in local.gamma_edges.iter().enumerate() {
        expanded[le] = lambda[j];
    }
    local.trace_gram.matvec(&expanded)
}

/// Lift an impedance trace datum through the local solver.
pub fn harmonic_lift(local: &LocalSystem, lambda: &[C64]) -> Vec<C64> {
    local.factorization.solve(&lift_rhs(local, lambda))
}

/// Lift every unit trace vector; columns form the Maxwell-harmonic basis.
pub fn build_harmonic_basis(local: &LocalSystem) -> Result<HarmonicBasis> {
    let n = local.n_local();
    let m = local.m_l();
    if m == 0 {
        return Ok(HarmonicBasis {
            v: Mat::zeros(n, 0),
            gram: Mat::zeros(0, 0),
        });
    }
    // assemble the m sparse right-hand sides as a dense block
    let mut rhs = Mat::<C64>::zeros(n, m);
    for (j, &le) in local.gamma_edges.iter().enumerate() {
        let (cols, vals) = local.trace_gram.row(le);
        for (&r, &v) in cols.iter().zip(vals) {
            // trace_gram is symmetric: column le equals row le
            rhs[(r, j)] = v;
        }
    }
    let v = local.factorization.solve_mat(&rhs);
    let sv = sparse_times_dense(&local.s_imp, &v);
    let gram = v.adjoint() * &sv;
    // Hermitian positive definiteness of the Gram certifies independence
    if gram.llt(faer::Side::Lower).is_err() {
        return Err(Error::Subdomain {
            subdomain: local.l,
            message: "harmonic basis Gram is numerically rank deficient \
                      (redundant trace basis)"
                .into(),
        });
    }
    Ok(HarmonicBasis { v, gram })
}

/// `S * D` for sparse `S` and dense `D`.
pub fn sparse_times_dense(s: &ComplexSparseMatrix, d: &Mat<C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(s.nrows(), d.ncols());
    for r in 0..s.nrows() {
        let (cols, vals) = s.row(r);
        for j in 0..d.ncols() {
            let mut acc = C64::new(0.0, 0.0);
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * d[(c, j)];
            }
            out[(r, j)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_decomposition;
    use crate::mesh::{build_box_mesh, classify_boundary};
    use crate::nedelec::{assemble_system, SourceCase};
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn setup(
        n: usize,
        parts: usize,
        kappa: f64,
        epsilon: f64,
    ) -> (
        BoxMesh,
        BoundaryTags,
        EdgeDofMap,
        Decomposition,
        ProblemParams,
    ) {
        let mesh = build_box_mesh([0.0; 3], [1.0; 3], n).unwrap();
        let tags = classify_boundary(&mesh);
        let dofmap = EdgeDofMap::build(&mesh);
        let dec = build_decomposition(&mesh, parts, 1).unwrap();
        let params = ProblemParams::new(kappa, epsilon).unwrap();
        (mesh, tags, dofmap, dec, params)
    }

    #[test]
    fn single_part_equals_global_matrix() {
        let (mesh, tags, dofmap, dec, params) = setup(2, 1, 2.0, 1.0);
        let local = assemble_local(&mesh, &tags, &dofmap, &dec, 0, &params).unwrap();
        let sys = assemble_system(&mesh, &tags, &dofmap, &params, &SourceCase::Zero, 4).unwrap();
        assert_eq!(local.n_local(), sys.a.nrows());
        for r in 0..local.a.nrows() {
            let (cols, vals) = local.a.row(r);
            for (&cc, &v) in cols.iter().zip(vals) {
                assert!(
                    (v - sys.a.get(r, cc)).norm() <= 1e-12 * (1.0 + v.norm()),
                    "mismatch at ({r},{cc})"
                );
            }
        }
        // whole boundary is the domain boundary: no interface
        assert_eq!(local.m_l(), 0);
        let basis = build_harmonic_basis(&local).unwrap();
        assert_eq!(basis.v.ncols(), 0);
    }

    #[test]
    fn local_coercivity_and_imaginary_identity() {
        let (mesh, tags, dofmap, dec, params) = setup(4, 2, 2.0, 1.5);
        let local = assemble_local(&mesh, &tags, &dofmap, &dec, 3, &params).unwrap();
        let n = local.n_local();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let coer = params.epsilon / (6.0 * params.kappa * params.kappa);
        for _ in 0..200 {
            let v: Vec<C64> = (0..n)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let vav = local.a.quadratic_form(&v, &v);
            let vsv = local.s_imp.quadratic_form(&v, &v).re;
            assert!(vav.norm() >= coer * vsv * (1.0 - 1e-12));
            // Im(v^H A_l v) = -eps ||v||^2 - kappa ||v_T||^2 on the whole
            // subdomain boundary
            let m = local.m0.quadratic_form(&v, &v).re;
            let t = local.t_bnd.quadratic_form(&v, &v).re;
            let expect = -params.epsilon * m - params.kappa * t;
            assert!((vav.im - expect).abs() <= 1e-12 * (1.0 + vav.norm()));
        }
    }

    #[test]
    fn gamma_edge_count_matches_geometric_oracle() {
        // subdomain 0 of the n=4, parts=2, layers=1 decomposition covers
        // cubes [0,3)^3; its interior interface is the part of the planes
        // x,y,z = 3/4 clipped to the closure
        let (mesh, tags, dofmap, dec, params) = setup(4, 2, 2.0, 1.0);
        let local = assemble_local(&mesh, &tags, &dofmap, &dec, 0, &params).unwrap();
        let hi = 0.75;
        let tol = 1e-12;
        let mut oracle = 0usize;
        for e in 0..mesh.n_edges() {
            let [a, b] = mesh.edges[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let inside = |p: [f64; 3]| p.iter().all(|&x| x <= hi + tol);
            if !(inside(pa) && inside(pb)) {
                continue;
            }
            let on_plane =
                (0..3).any(|d| (pa[d] - hi).abs() < tol && (pb[d] - hi).abs() < tol);
            if on_plane {
                oracle += 1;
            }
        }
        assert_eq!(local.m_l(), oracle);
        assert!(local.m_l() > 0);
    }

    #[test]
    fn lift_solves_defining_equation() {
        let (mesh, tags, dofmap, dec, params) = setup(4, 2, 3.0, 2.0);
        let local = assemble_local(&mesh, &tags, &dofmap, &dec, 5, &params).unwrap();
        let m = local.m_l();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);

        // lambda = 0 lifts to zero
        let zero = harmonic_lift(&local, &vec![c(0.0, 0.0); m]);
        assert!(zero.iter().all(|v| v.norm() == 0.0));

        for _ in 0..10 {
            let lambda: Vec<C64> = (0..m)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let v = harmonic_lift(&local, &lambda);
            let b = lift_rhs(&local, &lambda);
            let av = local.a.matvec(&v);
            let bnorm: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let resid: f64 = av
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-9 * bnorm, "lift residual {resid} vs {bnorm}");
        }

        // linearity
        let l1: Vec<C64> = (0..m).map(|_| c(rng.gen(), rng.gen())).collect();
        let l2: Vec<C64> = (0..m).map(|_| c(rng.gen(), rng.gen())).collect();
        let alpha = c(0.7, -0.3);
        let combo: Vec<C64> = l1.iter().zip(&l2).map(|(a, b)| alpha * a + b).collect();
        let lift_combo = harmonic_lift(&local, &combo);
        let (lift1, lift2) = (harmonic_lift(&local, &l1), harmonic_lift(&local, &l2));
        let scale: f64 = lift_combo.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..lift_combo.len() {
            let expect = alpha * lift1[i] + lift2[i];
            assert!((lift_combo[i] - expect).norm() <= 1e-10 * (1.0 + scale));
        }
    }

    #[test]
    fn harmonic_basis_columns_and_determinism() {
        let (mesh, tags, dofmap, dec, params) = setup(4, 2, 2.0, 1.0);
        let local = assemble_local(&mesh, &tags, &dofmap, &dec, 2, &params).unwrap();
        let basis = build_harmonic_basis(&local).unwrap();
        // one column per trace DOF
        assert_eq!(basis.v.ncols(), local.m_l());
        // each column reproduces its unit impedance datum
        let m = local.m_l();
        for j in [0, m / 2, m - 1] {
            let mut lambda = vec![c(0.0, 0.0); m];
            lambda[j] = c(1.0, 0.0);
            let expect = harmonic_lift(&local, &lambda);
            for i in 0..local.n_local() {
                assert!((basis.v[(i, j)] - expect[i]).norm() < 1e-12);
            }
        }
        // repeated build is bitwise identical
        let again = build_harmonic_basis(&local).unwrap();
        for j in 0..m {
            for i in 0..local.n_local() {
                assert_eq!(basis.v[(i, j)], again.v[(i, j)]);
            }
        }
    }
}
