//! Structured tetrahedral meshes of axis-aligned boxes.
//!
//! The box is split into `n^3` cubes and each cube into six tetrahedra
//! sharing the main diagonal (Freudenthal/Kuhn split). The same diagonal
//! direction is used in every cube, so meshes for `n` and `2n` are nested.
//! All entity tables are built by sorted deduplication, which makes repeated
//! builds bit-identical.

use crate::error::{Error, Result};

/// Local vertex pairs of the six edges of a tetrahedron.
pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local vertex triples of the four faces (face `i` is opposite vertex `i`).
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// The six permutations of `(0,1,2)` generating the Kuhn split, in a fixed
/// order so that cell numbering is deterministic.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

#[derive(Debug, Clone)]
pub struct BoxMesh {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    /// Cells per dimension.
    pub n: usize,
    /// Vertex coordinates, ordered lexicographically by grid index.
    pub vertices: Vec<[f64; 3]>,
    /// Tetrahedra as vertex index quadruples with positive volume.
    pub cells: Vec<[usize; 4]>,
    /// Unique edges `[a, b]` with `a < b`, lexicographically sorted.
    pub edges: Vec<[usize; 2]>,
    /// Unique faces as sorted vertex triples, lexicographically sorted.
    pub faces: Vec<[usize; 3]>,
    /// Mesh size: the maximum edge length.
    pub h: f64,
    /// Edge indices of every cell, aligned with [`LOCAL_EDGES`].
    pub cell_edges: Vec<[usize; 6]>,
    /// Face indices of every cell, aligned with [`LOCAL_FACES`].
    pub cell_faces: Vec<[usize; 4]>,
}

#[derive(Debug, Clone)]
pub struct BoundaryTags {
    /// Face indices lying on the boundary of the box.
    pub boundary_faces: Vec<usize>,
    /// Edge indices lying on the boundary (edges of boundary faces).
    pub boundary_edges: Vec<usize>,
    /// Outward unit normal per entry of `boundary_faces`.
    pub face_normals: Vec<[f64; 3]>,
    /// For each entry of `boundary_faces`, the unique adjacent cell.
    pub face_cells: Vec<usize>,
}

/// Build the structured mesh of the box `[lo, hi]` with `n` cells per
/// dimension (6 n^3 tetrahedra).
pub fn build_box_mesh(lo: [f64; 3], hi: [f64; 3], n: usize) -> Result<BoxMesh> {
    if n == 0 {
        return Err(Error::Mesh("n must be at least 1".into()));
    }
    for d in 0..3 {
        if !(hi[d] > lo[d]) {
            return Err(Error::Mesh(format!(
                "degenerate box: hi[{d}] = {} must exceed lo[{d}] = {}",
                hi[d], lo[d]
            )));
        }
    }

    let np = n + 1;
    let step = [
        (hi[0] - lo[0]) / n as f64,
        (hi[1] - lo[1]) / n as f64,
        (hi[2] - lo[2]) / n as f64,
    ];
    let vid = |i: usize, j: usize, k: usize| (i * np + j) * np + k;

    let mut vertices = Vec::with_capacity(np * np * np);
    for i in 0..np {
        for j in 0..np {
            for k in 0..np {
                vertices.push([
                    lo[0] + i as f64 * step[0],
                    lo[1] + j as f64 * step[1],
                    lo[2] + k as f64 * step[2],
                ]);
            }
        }
    }

    let mut cells = Vec::with_capacity(6 * n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for perm in &KUHN_PERMUTATIONS {
                    let mut corner = [i, j, k];
                    let mut tet = [vid(corner[0], corner[1], corner[2]); 4];
                    for (step_idx, &axis) in perm.iter().enumerate() {
                        corner[axis] += 1;
                        tet[step_idx + 1] = vid(corner[0], corner[1], corner[2]);
                    }
                    if permutation_parity(perm) {
                        tet.swap(2, 3);
                    }
                    cells.push(tet);
                }
            }
        }
    }

    // Deduplicated entity tables.
    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(cells.len() * 6);
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(cells.len() * 4);
    for tet in &cells {
        for &(a, b) in &LOCAL_EDGES {
            let (u, v) = (tet[a], tet[b]);
            edges.push(if u < v { [u, v] } else { [v, u] });
        }
        for f in &LOCAL_FACES {
            let mut tri = [tet[f[0]], tet[f[1]], tet[f[2]]];
            tri.sort_unstable();
            faces.push(tri);
        }
    }
    edges.sort_unstable();
    edges.dedup();
    faces.sort_unstable();
    faces.dedup();

    let cell_edges = cells
        .iter()
        .map(|tet| {
            let mut ids = [0usize; 6];
            for (e, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
                let (u, v) = (tet[a], tet[b]);
                let key = if u < v { [u, v] } else { [v, u] };
                ids[e] = edges.binary_search(&key).expect("edge in table");
            }
            ids
        })
        .collect();
    let cell_faces = cells
        .iter()
        .map(|tet| {
            let mut ids = [0usize; 4];
            for (i, f) in LOCAL_FACES.iter().enumerate() {
                let mut tri = [tet[f[0]], tet[f[1]], tet[f[2]]];
                tri.sort_unstable();
                ids[i] = faces.binary_search(&tri).expect("face in table");
            }
            ids
        })
        .collect();

    let h = edges
        .iter()
        .map(|&[a, b]| dist(&vertices[a], &vertices[b]))
        .fold(0.0f64, f64::max);

    Ok(BoxMesh {
        lo,
        hi,
        n,
        vertices,
        cells,
        edges,
        faces,
        h,
        cell_edges,
        cell_faces,
    })
}

fn permutation_parity(perm: &[usize; 3]) -> bool {
    let mut inversions = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 1
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl BoxMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Grid spacing per dimension (cube edge lengths).
    pub fn step(&self) -> [f64; 3] {
        [
            (self.hi[0] - self.lo[0]) / self.n as f64,
            (self.hi[1] - self.lo[1]) / self.n as f64,
            (self.hi[2] - self.lo[2]) / self.n as f64,
        ]
    }

    /// Cube grid index of a cell (cells `6c..6c+6` live in cube `c`).
    pub fn cell_cube(&self, cell: usize) -> [usize; 3] {
        let c = cell / 6;
        let k = c % self.n;
        let j = (c / self.n) % self.n;
        let i = c / (self.n * self.n);
        [i, j, k]
    }

    pub fn cell_vertices(&self, cell: usize) -> [[f64; 3]; 4] {
        let t = &self.cells[cell];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
            self.vertices[t[3]],
        ]
    }

    pub fn cell_volume(&self, cell: usize) -> f64 {
        let p = self.cell_vertices(cell);
        tet_volume(&p)
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        dist(&self.vertices[a], &self.vertices[b])
    }

    pub fn edge_midpoint(&self, edge: usize) -> [f64; 3] {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [
            0.5 * (pa[0] + pb[0]),
            0.5 * (pa[1] + pb[1]),
            0.5 * (pa[2] + pb[2]),
        ]
    }

    /// Unit tangent of an edge, oriented from the lower to the higher vertex
    /// index (the canonical DOF orientation).
    pub fn edge_tangent(&self, edge: usize) -> [f64; 3] {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let len = dist(&pa, &pb);
        [
            (pb[0] - pa[0]) / len,
            (pb[1] - pa[1]) / len,
            (pb[2] - pa[2]) / len,
        ]
    }

    /// Locate the cell containing `x` together with its barycentric
    /// coordinates. Ties on shared entities are broken by the lowest cell
    /// index. Points outside the closed box are rejected.
    pub fn locate_point(&self, x: [f64; 3]) -> Result<(usize, [f64; 4])> {
        let step = self.step();
        let tol = 1e-12 * self.h.max(1.0);
        for d in 0..3 {
            if x[d] < self.lo[d] - tol || x[d] > self.hi[d] + tol {
                return Err(Error::OutOfDomain { point: x });
            }
        }
        // Candidate cubes: every cube whose closed extent contains x.
        let mut cand: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for d in 0..3 {
            let u = (x[d] - self.lo[d]) / step[d];
            let lo = (u - 1.0 - 1e-9).ceil().max(0.0) as usize;
            let hi = (u + 1e-9).floor().min((self.n - 1) as f64) as usize;
            for i in lo..=hi.max(lo) {
                if i < self.n {
                    cand[d].push(i);
                }
            }
        }
        let mut best: Option<(usize, [f64; 4])> = None;
        for &i in &cand[0] {
            for &j in &cand[1] {
                for &k in &cand[2] {
                    let cube = (i * self.n + j) * self.n + k;
                    for cell in 6 * cube..6 * cube + 6 {
                        let bary = self.barycentric(cell, x);
                        let min = bary.iter().cloned().fold(f64::INFINITY, f64::min);
                        if min >= -1e-11 {
                            match best {
                                Some((c, _)) if c <= cell => {}
                                _ => best = Some((cell, clamp_bary(bary))),
                            }
                        }
                    }
                }
            }
        }
        best.ok_or(Error::OutOfDomain { point: x })
    }

    /// Barycentric coordinates of `x` with respect to a cell.
    pub fn barycentric(&self, cell: usize, x: [f64; 3]) -> [f64; 4] {
        let p = self.cell_vertices(cell);
        let m = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0], p[3][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1], p[3][1] - p[0][1]],
            [p[1][2] - p[0][2], p[2][2] - p[0][2], p[3][2] - p[0][2]],
        ];
        let r = [x[0] - p[0][0], x[1] - p[0][1], x[2] - p[0][2]];
        let b = solve3(&m, &r);
        [1.0 - b[0] - b[1] - b[2], b[0], b[1], b[2]]
    }
}

fn clamp_bary(mut b: [f64; 4]) -> [f64; 4] {
    for v in &mut b {
        *v = v.clamp(0.0, 1.0);
    }
    let s: f64 = b.iter().sum();
    for v in &mut b {
        *v /= s;
    }
    b
}

pub fn tet_volume(p: &[[f64; 3]; 4]) -> f64 {
    let a = sub(&p[1], &p[0]);
    let b = sub(&p[2], &p[0]);
    let c = sub(&p[3], &p[0]);
    det3(&[a, b, c]) / 6.0
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: &[[f64; 3]; 3], r: &[f64; 3]) -> [f64; 3] {
    let d = det3(m);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = *m;
        for row in 0..3 {
            mc[row][c] = r[row];
        }
        out[c] = det3(&mc) / d;
    }
    out
}

/// Classify boundary entities of a box mesh.
///
/// A face is a boundary face when all three vertices lie in a single facet
/// plane of the box; boundary edges are the edges of boundary faces. The
/// outward normal is the facet normal.
pub fn classify_boundary(mesh: &BoxMesh) -> BoundaryTags {
    let tol = 1e-12 * mesh.h.max(1.0);
    let planes: [(usize, f64, [f64; 3]); 6] = [
        (0, mesh.lo[0], [-1.0, 0.0, 0.0]),
        (0, mesh.hi[0], [1.0, 0.0, 0.0]),
        (1, mesh.lo[1], [0.0, -1.0, 0.0]),
        (1, mesh.hi[1], [0.0, 1.0, 0.0]),
        (2, mesh.lo[2], [0.0, 0.0, -1.0]),
        (2, mesh.hi[2], [0.0, 0.0, 1.0]),
    ];

    // face -> adjacent cell count and one adjacent cell
    let mut adj_count = vec![0u8; mesh.n_faces()];
    let mut adj_cell = vec![usize::MAX; mesh.n_faces()];
    for (c, faces) in mesh.cell_faces.iter().enumerate() {
        for &f in faces {
            adj_count[f] += 1;
            if adj_cell[f] == usize::MAX {
                adj_cell[f] = c;
            }
        }
    }

    let mut boundary_faces = Vec::new();
    let mut face_normals = Vec::new();
    let mut face_cells = Vec::new();
    let mut edge_flag = vec![false; mesh.n_edges()];

    for (f, tri) in mesh.faces.iter().enumerate() {
        for &(axis, value, normal) in &planes {
            let on_plane = tri
                .iter()
                .all(|&v| (mesh.vertices[v][axis] - value).abs() <= tol);
            if on_plane {
                debug_assert_eq!(adj_count[f], 1, "boundary face must have one cell");
                boundary_faces.push(f);
                face_normals.push(normal);
                face_cells.push(adj_cell[f]);
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let key = if tri[i] < tri[j] {
                            [tri[i], tri[j]]
                        } else {
                            [tri[j], tri[i]]
                        };
                        if let Ok(e) = mesh.edges.binary_search(&key) {
                            edge_flag[e] = true;
                        }
                    }
                }
                break;
            }
        }
    }

    let boundary_edges = edge_flag
        .iter()
        .enumerate()
        .filter_map(|(e, &b)| b.then_some(e))
        .collect();

    BoundaryTags {
        boundary_faces,
        boundary_edges,
        face_normals,
        face_cells,
    }
}

impl BoundaryTags {
    /// Boundary-face position (index into the tag tables) of a mesh face, if
    /// the face is on the boundary.
    pub fn boundary_index(&self, face: usize) -> Option<usize> {
        self.boundary_faces.binary_search(&face).ok()
    }
}

/// Write the mesh as a legacy ASCII VTK unstructured grid. Optional
/// cell-centered complex vector data is written as two vector fields.
pub fn write_vtk(
    mesh: &BoxMesh,
    path: &std::path::Path,
    cell_data: Option<(&str, &[[crate::C64; 3]])>,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "maxwell-ddm box mesh")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
    }
    writeln!(out, "CELLS {} {}", mesh.n_cells(), 5 * mesh.n_cells())?;
    for c in &mesh.cells {
        writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in 0..mesh.n_cells() {
        writeln!(out, "10")?;
    }
    if let Some((name, data)) = cell_data {
        writeln!(out, "CELL_DATA {}", mesh.n_cells())?;
        for (suffix, part) in [("re", 0), ("im", 1)] {
            writeln!(out, "VECTORS {name}_{suffix} double")?;
            for v in data {
                let c = |z: crate::C64| if part == 0 { z.re } else { z.im };
                writeln!(out, "{:.17e} {:.17e} {:.17e}", c(v[0]), c(v[1]), c(v[2]))?;
            }
        }
    }
    Ok(())
}
