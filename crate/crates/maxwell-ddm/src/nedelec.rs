//! Lowest-order Nedelec edge elements on tetrahedra.
//!
//! The basis function of edge `e = (a, b)` (global vertex indices `a < b`)
//! is `|e| (lambda_a grad lambda_b - lambda_b grad lambda_a)`, so the degree
//! of freedom is the mean tangential component along the oriented edge,
//! `(1/|e|) integral_e u . tau ds`. With this choice the point-value
//! (quasi-interpolation) degree of freedom at the edge midpoint coincides
//! with the edge moment, and weighting by a partition-of-unity function is a
//! diagonal scaling of the coefficient vector.

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, ComplexSparseMatrix};
use crate::mesh::{BoundaryTags, BoxMesh, LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature;
use crate::C64;

/// Global edge-DOF numbering with orientation signs. For the lowest order
/// there is exactly one DOF per mesh edge and `dof_of_edge` is the identity.
#[derive(Debug, Clone)]
pub struct EdgeDofMap {
    pub n_dofs: usize,
    /// Orientation sign per (cell, local edge): +1 when the local edge
    /// direction (lower local index to higher) agrees with the global
    /// canonical direction (lower vertex index to higher).
    pub cell_signs: Vec<[f64; 6]>,
}

impl EdgeDofMap {
    pub fn build(mesh: &BoxMesh) -> Self {
        let cell_signs = mesh
            .cells
            .iter()
            .map(|tet| {
                let mut signs = [1.0f64; 6];
                for (i, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                    if tet[a] > tet[b] {
                        signs[i] = -1.0;
                    }
                }
                signs
            })
            .collect();
        EdgeDofMap {
            n_dofs: mesh.n_edges(),
            cell_signs,
        }
    }

    #[inline]
    pub fn dof_of_edge(&self, edge: usize) -> usize {
        edge
    }

    #[inline]
    pub fn sign(&self, cell: usize, local_edge: usize) -> f64 {
        self.cell_signs[cell][local_edge]
    }
}

/// Wave number, absorption and material parameters.
#[derive(Debug, Clone)]
pub struct ProblemParams {
    pub kappa: f64,
    pub epsilon: f64,
    /// Piecewise-constant complex relative permittivity per cell; `None`
    /// means one everywhere.
    pub rel_permittivity: Option<Vec<C64>>,
}

impl ProblemParams {
    pub fn new(kappa: f64, epsilon: f64) -> Result<Self> {
        let p = ProblemParams {
            kappa,
            epsilon,
            rel_permittivity: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::config("kappa must be positive"));
        }
        if !(0.0 <= self.epsilon && self.epsilon <= self.kappa * self.kappa) {
            return Err(Error::config(format!(
                "epsilon must satisfy 0 <= epsilon <= kappa^2, got {} with kappa^2 = {}",
                self.epsilon,
                self.kappa * self.kappa
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eps_r(&self, cell: usize) -> C64 {
        match &self.rel_permittivity {
            Some(v) => v[cell],
            None => C64::new(1.0, 0.0),
        }
    }

    /// Boundary impedance weight `sqrt(Re eps_r)` of the cell behind a face.
    #[inline]
    pub fn impedance_weight(&self, cell: usize) -> f64 {
        self.eps_r(cell).re.max(0.0).sqrt()
    }
}

/// Volume source and boundary impedance data.
pub enum SourceCase {
    Zero,
    Analytic {
        /// J(x)
        volume: Box<dyn Fn([f64; 3]) -> [C64; 3] + Sync>,
        /// g(x, n) with n the outward unit normal
        boundary: Box<dyn Fn([f64; 3], [f64; 3]) -> [C64; 3] + Sync>,
    },
    Dipole {
        location: [f64; 3],
        moment: [f64; 3],
    },
}

/// Per-cell geometry: barycentric gradients, volume, edge data.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub vertices: [[f64; 3]; 4],
    pub grads: [[f64; 3]; 4],
    pub volume: f64,
    pub edge_lengths: [f64; 6],
}

impl CellGeometry {
    pub fn new(vertices: [[f64; 3]; 4]) -> Result<Self> {
        let m = [
            [
                vertices[1][0] - vertices[0][0],
                vertices[2][0] - vertices[0][0],
                vertices[3][0] - vertices[0][0],
            ],
            [
                vertices[1][1] - vertices[0][1],
                vertices[2][1] - vertices[0][1],
                vertices[3][1] - vertices[0][1],
            ],
            [
                vertices[1][2] - vertices[0][2],
                vertices[2][2] - vertices[0][2],
                vertices[3][2] - vertices[0][2],
            ],
        ];
        let det = det3(&m);
        let mut scale = 0.0f64;
        for row in &m {
            for v in row {
                scale = scale.max(v.abs());
            }
        }
        if det.abs() <= 1e-14 * scale.powi(3).max(f64::MIN_POSITIVE) {
            return Err(Error::Assembly("degenerate tetrahedron".into()));
        }
        // rows of the inverse Jacobian are the gradients of lambda_1..3
        let inv = inv3(&m, det);
        let mut grads = [[0.0; 3]; 4];
        for i in 0..3 {
            grads[i + 1] = inv[i];
            for d in 0..3 {
                grads[0][d] -= inv[i][d];
            }
        }
        let mut edge_lengths = [0.0; 6];
        for (i, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            edge_lengths[i] = dist(&vertices[a], &vertices[b]);
        }
        Ok(CellGeometry {
            vertices,
            grads,
            volume: det / 6.0,
            edge_lengths,
        })
    }

    pub fn from_mesh(mesh: &BoxMesh, cell: usize) -> Result<Self> {
        CellGeometry::new(mesh.cell_vertices(cell))
    }

    /// Whitney basis value of local edge `i` at barycentric coordinates.
    pub fn basis_at(&self, i: usize, bary: &[f64; 4]) -> [f64; 3] {
        let (a, b) = LOCAL_EDGES[i];
        let len = self.edge_lengths[i];
        let (ga, gb) = (self.grads[a], self.grads[b]);
        [
            len * (bary[a] * gb[0] - bary[b] * ga[0]),
            len * (bary[a] * gb[1] - bary[b] * ga[1]),
            len * (bary[a] * gb[2] - bary[b] * ga[2]),
        ]
    }

    /// Constant curl of the basis function of local edge `i`.
    pub fn basis_curl(&self, i: usize) -> [f64; 3] {
        let (a, b) = LOCAL_EDGES[i];
        let c = cross(&self.grads[a], &self.grads[b]);
        [
            2.0 * self.edge_lengths[i] * c[0],
            2.0 * self.edge_lengths[i] * c[1],
            2.0 * self.edge_lengths[i] * c[2],
        ]
    }

    pub fn point(&self, bary: &[f64; 4]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for (l, p) in bary.iter().zip(&self.vertices) {
            for d in 0..3 {
                x[d] += l * p[d];
            }
        }
        x
    }

    fn face_area_normal(&self, f: usize) -> (f64, [f64; 3]) {
        let [i, j, k] = LOCAL_FACES[f];
        let (p0, p1, p2) = (self.vertices[i], self.vertices[j], self.vertices[k]);
        let c = cross(&sub(&p1, &p0), &sub(&p2, &p0));
        let area2 = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        let mut n = [c[0] / area2, c[1] / area2, c[2] / area2];
        // outward: away from the opposite vertex
        let opp = self.vertices[f];
        let to_opp = sub(&opp, &p0);
        if n[0] * to_opp[0] + n[1] * to_opp[1] + n[2] * to_opp[2] > 0.0 {
            n = [-n[0], -n[1], -n[2]];
        }
        (area2 / 2.0, n)
    }
}

/// Element matrices for the Whitney edge basis: curl-curl, mass and the
/// tangential boundary Gram of each of the four faces.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub curl_curl: [[f64; 6]; 6],
    pub mass: [[f64; 6]; 6],
    pub face_tangential: [[[f64; 6]; 6]; 4],
}

/// Closed-form element integrals (exact for the lowest-order basis).
pub fn element_matrices(geo: &CellGeometry) -> Result<ElementMatrices> {
    let v = geo.volume;
    if v <= 0.0 {
        return Err(Error::Assembly("cell volume must be positive".into()));
    }
    let mut curl_curl = [[0.0; 6]; 6];
    let mut mass = [[0.0; 6]; 6];
    let int_ll = |p: usize, q: usize| if p == q { v / 10.0 } else { v / 20.0 };
    for i in 0..6 {
        let ci = geo.basis_curl(i);
        let (ai, bi) = LOCAL_EDGES[i];
        for j in 0..6 {
            let cj = geo.basis_curl(j);
            curl_curl[i][j] = v * dot(&ci, &cj);
            let (aj, bj) = LOCAL_EDGES[j];
            let (gai, gbi) = (geo.grads[ai], geo.grads[bi]);
            let (gaj, gbj) = (geo.grads[aj], geo.grads[bj]);
            mass[i][j] = geo.edge_lengths[i]
                * geo.edge_lengths[j]
                * (int_ll(ai, aj) * dot(&gbi, &gbj) - int_ll(ai, bj) * dot(&gbi, &gaj)
                    - int_ll(bi, aj) * dot(&gai, &gbj)
                    + int_ll(bi, bj) * dot(&gai, &gaj));
        }
    }

    let mut face_tangential = [[[0.0; 6]; 6]; 4];
    for f in 0..4 {
        let (area, n) = geo.face_area_normal(f);
        // integral over the face of lambda_p lambda_q; zero if either vertex
        // is the one opposite the face
        let int_f = |p: usize, q: usize| -> f64 {
            if p == f || q == f {
                0.0
            } else if p == q {
                area / 6.0
            } else {
                area / 12.0
            }
        };
        // tangential part of the product of two constant vectors
        let tan = |u: &[f64; 3], w: &[f64; 3]| dot(u, w) - dot(u, &n) * dot(w, &n);
        for i in 0..6 {
            let (ai, bi) = LOCAL_EDGES[i];
            let (gai, gbi) = (geo.grads[ai], geo.grads[bi]);
            for j in 0..6 {
                let (aj, bj) = LOCAL_EDGES[j];
                let (gaj, gbj) = (geo.grads[aj], geo.grads[bj]);
                face_tangential[f][i][j] = geo.edge_lengths[i]
                    * geo.edge_lengths[j]
                    * (int_f(ai, aj) * tan(&gbi, &gbj) - int_f(ai, bj) * tan(&gbi, &gaj)
                        - int_f(bi, aj) * tan(&gai, &gbj)
                        + int_f(bi, bj) * tan(&gai, &gaj));
            }
        }
    }

    Ok(ElementMatrices {
        curl_curl,
        mass,
        face_tangential,
    })
}

/// Assembled global system and its constituent Gram matrices.
pub struct AssembledSystem {
    /// System matrix `A = K - (kappa^2 + i eps) M_w - i kappa T_w`.
    pub a: ComplexSparseMatrix,
    pub rhs: Vec<C64>,
    /// `S = K + kappa^2 M0 + kappa T` (Hermitian positive definite).
    pub s_imp: ComplexSparseMatrix,
    /// Unweighted mass matrix.
    pub m0: ComplexSparseMatrix,
    /// Unweighted boundary tangential Gram.
    pub t_bnd: ComplexSparseMatrix,
    /// Curl-curl Gram.
    pub k: ComplexSparseMatrix,
}

/// Assemble the global impedance system on the whole mesh.
///
/// `quad_degree` controls the volume/surface quadrature of analytic source
/// terms; their integrands are non-polynomial and the contract requires at
/// least degree 4.
pub fn assemble_system(
    mesh: &BoxMesh,
    tags: &BoundaryTags,
    dofmap: &EdgeDofMap,
    params: &ProblemParams,
    case: &SourceCase,
    quad_degree: usize,
) -> Result<AssembledSystem> {
    params.validate()?;
    if quad_degree < 4 {
        return Err(Error::config(format!(
            "quadrature degree {quad_degree} is below the degree-4 contract for source terms"
        )));
    }
    if let Some(eps_r) = &params.rel_permittivity {
        if eps_r.len() != mesh.n_cells() {
            return Err(Error::config("rel_permittivity must have one entry per cell"));
        }
    }

    let n = dofmap.n_dofs;
    let kappa = params.kappa;
    let z_vol = C64::new(kappa * kappa, params.epsilon);

    let mut trip_a = Vec::new();
    let mut trip_k = Vec::new();
    let mut trip_m0 = Vec::new();
    let mut trip_t = Vec::new();

    for cell in 0..mesh.n_cells() {
        let geo = CellGeometry::from_mesh(mesh, cell)?;
        let em = element_matrices(&geo)?;
        let edges = &mesh.cell_edges[cell];
        let signs = &dofmap.cell_signs[cell];
        let eps_r = params.eps_r(cell);
        for i in 0..6 {
            let gi = edges[i];
            for j in 0..6 {
                let gj = edges[j];
                let s = signs[i] * signs[j];
                let k_ij = s * em.curl_curl[i][j];
                let m_ij = s * em.mass[i][j];
                trip_k.push((gi, gj, C64::new(k_ij, 0.0)));
                trip_m0.push((gi, gj, C64::new(m_ij, 0.0)));
                trip_a.push((gi, gj, C64::new(k_ij, 0.0) - z_vol * eps_r * m_ij));
            }
        }
        // boundary faces of this cell
        for lf in 0..4 {
            let face = mesh.cell_faces[cell][lf];
            if tags.boundary_index(face).is_none() {
                continue;
            }
            let w_imp = params.impedance_weight(cell);
            for i in 0..6 {
                let gi = edges[i];
                for j in 0..6 {
                    let gj = edges[j];
                    let s = signs[i] * signs[j];
                    let t_ij = s * em.face_tangential[lf][i][j];
                    trip_t.push((gi, gj, C64::new(t_ij, 0.0)));
                    trip_a.push((gi, gj, C64::new(0.0, -kappa * w_imp * t_ij)));
                }
            }
        }
    }

    let a = ComplexSparseMatrix::from_triplets(n, n, trip_a);
    let k = ComplexSparseMatrix::from_triplets(n, n, trip_k);
    let m0 = ComplexSparseMatrix::from_triplets(n, n, trip_m0);
    let t_bnd = ComplexSparseMatrix::from_triplets(n, n, trip_t);
    let s_imp = k
        .add_scaled(C64::new(kappa * kappa, 0.0), &m0)
        .add_scaled(C64::new(kappa, 0.0), &t_bnd);

    // entrywise consistency of the decomposition (exact when eps_r == 1)
    if params.rel_permittivity.is_none() {
        let rebuilt = k
            .add_scaled(-z_vol, &m0)
            .add_scaled(C64::new(0.0, -kappa), &t_bnd);
        let mut worst = 0.0f64;
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - rebuilt.get(r, c)).norm());
            }
        }
        if worst > 1e-10 * a.max_abs().max(1.0) {
            return Err(Error::Assembly(format!(
                "system decomposition mismatch: {worst:.3e}"
            )));
        }
    }

    let rhs = assemble_rhs(mesh, tags, dofmap, case, quad_degree)?;

    Ok(AssembledSystem {
        a,
        rhs,
        s_imp,
        m0,
        t_bnd,
        k,
    })
}

fn assemble_rhs(
    mesh: &BoxMesh,
    tags: &BoundaryTags,
    dofmap: &EdgeDofMap,
    case: &SourceCase,
    quad_degree: usize,
) -> Result<Vec<C64>> {
    let mut rhs = vec![C64::new(0.0, 0.0); dofmap.n_dofs];
    match case {
        SourceCase::Zero => {}
        SourceCase::Analytic { volume, boundary } => {
            let tet_rule = quadrature::tet_rule(quad_degree);
            let tri_rule = quadrature::triangle_rule(quad_degree);
            for cell in 0..mesh.n_cells() {
                let geo = CellGeometry::from_mesh(mesh, cell)?;
                let edges = &mesh.cell_edges[cell];
                let signs = &dofmap.cell_signs[cell];
                for &(bary, w) in &tet_rule {
                    let x = geo.point(&bary);
                    let j = volume(x);
                    for i in 0..6 {
                        let psi = geo.basis_at(i, &bary);
                        let val =
                            j[0] * psi[0] + j[1] * psi[1] + j[2] * psi[2];
                        rhs[edges[i]] += signs[i] * geo.volume * w * val;
                    }
                }
            }
            for (bi, &face) in tags.boundary_faces.iter().enumerate() {
                let cell = tags.face_cells[bi];
                let normal = tags.face_normals[bi];
                let geo = CellGeometry::from_mesh(mesh, cell)?;
                let edges = &mesh.cell_edges[cell];
                let signs = &dofmap.cell_signs[cell];
                let lf = (0..4)
                    .find(|&lf| mesh.cell_faces[cell][lf] == face)
                    .expect("face belongs to cell");
                let [v0, v1, v2] = LOCAL_FACES[lf];
                let area = face_area(&geo, lf);
                for &(tb, w) in &tri_rule {
                    let mut bary = [0.0; 4];
                    bary[v0] = tb[0];
                    bary[v1] = tb[1];
                    bary[v2] = tb[2];
                    let x = geo.point(&bary);
                    let gval = boundary(x, normal);
                    for i in 0..6 {
                        let psi = geo.basis_at(i, &bary);
                        let pt = tangential(&psi, &normal);
                        let val = gval[0] * pt[0] + gval[1] * pt[1] + gval[2] * pt[2];
                        rhs[edges[i]] += signs[i] * area * w * val;
                    }
                }
            }
        }
        SourceCase::Dipole { location, moment } => {
            let (cell, bary) = mesh.locate_point(*location)?;
            let geo = CellGeometry::from_mesh(mesh, cell)?;
            let edges = &mesh.cell_edges[cell];
            let signs = &dofmap.cell_signs[cell];
            for i in 0..6 {
                let psi = geo.basis_at(i, &bary);
                let val = moment[0] * psi[0] + moment[1] * psi[1] + moment[2] * psi[2];
                rhs[edges[i]] += C64::new(0.0, signs[i] * val);
            }
        }
    }
    Ok(rhs)
}

fn face_area(geo: &CellGeometry, lf: usize) -> f64 {
    let [i, j, k] = LOCAL_FACES[lf];
    let c = cross(
        &sub(&geo.vertices[j], &geo.vertices[i]),
        &sub(&geo.vertices[k], &geo.vertices[i]),
    );
    0.5 * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

fn tangential(v: &[f64; 3], n: &[f64; 3]) -> [f64; 3] {
    let vn = dot(v, n);
    [v[0] - vn * n[0], v[1] - vn * n[1], v[2] - vn * n[2]]
}

/// Solve the assembled system directly (sparse LU).
pub fn solve_direct(system: &AssembledSystem) -> Result<Vec<C64>> {
    let f = lu_factor(&system.a)?;
    Ok(f.solve(&system.rhs))
}

/// Boundary handling of the local `imp` inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramBoundary {
    /// Integrate `kappa <v_T, w_T>` over the whole subset boundary.
    Full,
    /// Restrict the boundary term to the part interior to the global domain.
    InteriorOnly,
}

/// The `imp` Gram of a union of cells, over the edges of that union.
pub struct SubdomainGram {
    /// Global edge indices (sorted) carrying the rows/columns.
    pub edges: Vec<usize>,
    pub gram: ComplexSparseMatrix,
}

/// Faces on the boundary of a cell subset: `(face, owning cell, local face)`.
pub fn submesh_boundary_faces(mesh: &BoxMesh, cells: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut count: std::collections::HashMap<usize, (usize, usize, usize)> =
        std::collections::HashMap::new();
    for &c in cells {
        for lf in 0..4 {
            let f = mesh.cell_faces[c][lf];
            count
                .entry(f)
                .and_modify(|e| e.0 += 1)
                .or_insert((1, c, lf));
        }
    }
    let mut out: Vec<(usize, usize, usize)> = count
        .into_iter()
        .filter_map(|(f, (n, c, lf))| (n == 1).then_some((f, c, lf)))
        .collect();
    out.sort_unstable();
    out
}

/// Sorted global edges of a cell subset.
pub fn subset_edges(mesh: &BoxMesh, cells: &[usize]) -> Vec<usize> {
    let mut edges: Vec<usize> = cells
        .iter()
        .flat_map(|&c| mesh.cell_edges[c].iter().copied())
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Assemble the Hermitian Gram of `(., .)_{imp, kappa, G}` over a cell
/// subset `G`, in the local numbering given by [`subset_edges`].
pub fn assemble_local_gram(
    mesh: &BoxMesh,
    tags: &BoundaryTags,
    dofmap: &EdgeDofMap,
    cells: &[usize],
    kappa: f64,
    mode: GramBoundary,
) -> Result<SubdomainGram> {
    if cells.is_empty() {
        return Err(Error::config("empty cell subset"));
    }
    let edges = subset_edges(mesh, cells);
    let local_of = |g: usize| edges.binary_search(&g).expect("edge in subset");
    let m = edges.len();
    let mut trip = Vec::new();
    for &cell in cells {
        let geo = CellGeometry::from_mesh(mesh, cell)?;
        let em = element_matrices(&geo)?;
        let ce = &mesh.cell_edges[cell];
        let signs = &dofmap.cell_signs[cell];
        for i in 0..6 {
            let gi = local_of(ce[i]);
            for j in 0..6 {
                let gj = local_of(ce[j]);
                let s = signs[i] * signs[j];
                let val = s * (em.curl_curl[i][j] + kappa * kappa * em.mass[i][j]);
                trip.push((gi, gj, C64::new(val, 0.0)));
            }
        }
    }
    for (face, cell, lf) in submesh_boundary_faces(mesh, cells) {
        if mode == GramBoundary::InteriorOnly && tags.boundary_index(face).is_some() {
            continue;
        }
        let geo = CellGeometry::from_mesh(mesh, cell)?;
        let em = element_matrices(&geo)?;
        let ce = &mesh.cell_edges[cell];
        let signs = &dofmap.cell_signs[cell];
        for i in 0..6 {
            let gi = local_of(ce[i]);
            for j in 0..6 {
                let gj = local_of(ce[j]);
                let s = signs[i] * signs[j];
                trip.push((gi, gj, C64::new(kappa * s * em.face_tangential[lf][i][j], 0.0)));
            }
        }
    }
    Ok(SubdomainGram {
        edges,
        gram: ComplexSparseMatrix::from_triplets(m, m, trip),
    })
}

/// Diagonal weights of the quasi-interpolation of `w * v`: the entry of DOF
/// `e` is `w` evaluated at the edge midpoint.
pub fn quasi_interp_diagonal(mesh: &BoxMesh, w: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    (0..mesh.n_edges())
        .map(|e| w(mesh.edge_midpoint(e)))
        .collect()
}

/// Discrete L2 norm `(h sum_e |len_e v_e|^2)^(1/2)` over a region of edges
/// (`None` means all edges). The factor `len_e` converts the stored mean
/// tangential value into the Nedelec edge moment.
pub fn discrete_l2_norm(mesh: &BoxMesh, v: &[C64], region: Option<&[usize]>) -> f64 {
    let sum = |e: usize| -> f64 {
        let m = mesh.edge_length(e) * v[e].norm();
        m * m
    };
    let total: f64 = match region {
        None => (0..mesh.n_edges()).map(sum).sum(),
        Some(edges) => {
            assert!(!edges.is_empty(), "region must be nonempty");
            edges.iter().map(|&e| sum(e)).sum()
        }
    };
    (mesh.h * total).sqrt()
}

/// Interpolate an analytic field: DOF `e` is the mean tangential component
/// along the oriented edge, by 3-point Gauss quadrature.
pub fn interpolate_field(
    mesh: &BoxMesh,
    _dofmap: &EdgeDofMap,
    field: impl Fn([f64; 3]) -> [C64; 3],
) -> Vec<C64> {
    let rule = quadrature::segment_gauss3();
    (0..mesh.n_edges())
        .map(|e| {
            let [a, b] = mesh.edges[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let tau = mesh.edge_tangent(e);
            let mut acc = C64::new(0.0, 0.0);
            for &(t, w) in &rule {
                let x = [
                    pa[0] + t * (pb[0] - pa[0]),
                    pa[1] + t * (pb[1] - pa[1]),
                    pa[2] + t * (pb[2] - pa[2]),
                ];
                let u = field(x);
                acc += w * (u[0] * tau[0] + u[1] * tau[1] + u[2] * tau[2]);
            }
            acc
        })
        .collect()
}

/// Evaluate a finite element field at a point of a given cell.
pub fn eval_field(
    mesh: &BoxMesh,
    dofmap: &EdgeDofMap,
    coeffs: &[C64],
    cell: usize,
    bary: &[f64; 4],
) -> [C64; 3] {
    let geo = CellGeometry::from_mesh(mesh, cell).expect("valid cell");
    let mut out = [C64::new(0.0, 0.0); 3];
    for i in 0..6 {
        let g = mesh.cell_edges[cell][i];
        let c = coeffs[g] * dofmap.sign(cell, i);
        let psi = geo.basis_at(i, bary);
        for d in 0..3 {
            out[d] += c * psi[d];
        }
    }
    out
}

/// `sqrt(v^H S v)` for a Hermitian PSD matrix.
pub fn s_norm(s: &ComplexSparseMatrix, v: &[C64]) -> f64 {
    s.quadratic_form(v, v).re.max(0.0).sqrt()
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = sub(a, b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Rows of the inverse of `m` given its determinant.
fn inv3(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let c = |i: usize, j: usize| -> f64 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
        m[j1][i1] * m[j2][i2] - m[j1][i2] * m[j2][i1]
    };
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[i][j] = c(i, j) / det;
        }
    }
    inv
}
