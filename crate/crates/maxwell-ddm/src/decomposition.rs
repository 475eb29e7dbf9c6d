//! Overlapping box decomposition, neighbor sets, prolongation index maps and
//! the partition-of-unity edge weights.
//!
//! The box is first split into `parts_per_dim^3` non-overlapping cube blocks,
//! which are then extended by `overlap_layers` layers of cubes (clipped at
//! the domain boundary). Subdomain cell sets are unions of whole cells.

use crate::error::{Error, Result};
use crate::mesh::BoxMesh;
use crate::nedelec::subset_edges;
use crate::C64;

#[derive(Debug, Clone)]
pub struct Subdomain {
    /// Extended cube index range per dimension (`hi` exclusive).
    pub cube_lo: [usize; 3],
    pub cube_hi: [usize; 3],
    /// Cells of the subdomain (sorted).
    pub cells: Vec<usize>,
    /// Edges of the subdomain closure (sorted); this index list realizes the
    /// Boolean prolongation map.
    pub edges: Vec<usize>,
    /// Cells of the extended region: every cell touching the closure.
    pub halo_cells: Vec<usize>,
    /// Indices of subdomains with nonempty intersection (includes self).
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub parts_per_dim: usize,
    pub overlap_layers: usize,
    pub subdomains: Vec<Subdomain>,
    /// Maximal subdomain diameter.
    pub h_subdomain: f64,
}

/// Per-subdomain partition-of-unity weights at edge midpoints, aligned with
/// `Subdomain::edges`. The weights of each edge sum to one exactly.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub chi: Vec<Vec<f64>>,
}

pub fn build_decomposition(
    mesh: &BoxMesh,
    parts_per_dim: usize,
    overlap_layers: usize,
) -> Result<Decomposition> {
    if parts_per_dim == 0 || mesh.n % parts_per_dim != 0 {
        return Err(Error::config(format!(
            "parts_per_dim {} must divide the mesh resolution {}",
            parts_per_dim, mesh.n
        )));
    }
    if overlap_layers == 0 {
        return Err(Error::config("overlap_layers must be at least 1"));
    }
    let n = mesh.n;
    let block = n / parts_per_dim;

    // vertex -> cells adjacency for halo construction
    let mut vertex_cells: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for (c, tet) in mesh.cells.iter().enumerate() {
        for &v in tet {
            vertex_cells[v].push(c);
        }
    }

    let mut subdomains = Vec::with_capacity(parts_per_dim.pow(3));
    let mut h_subdomain = 0.0f64;
    let step = mesh.step();
    for bi in 0..parts_per_dim {
        for bj in 0..parts_per_dim {
            for bk in 0..parts_per_dim {
                let base_lo = [bi * block, bj * block, bk * block];
                let mut cube_lo = [0usize; 3];
                let mut cube_hi = [0usize; 3];
                for d in 0..3 {
                    cube_lo[d] = base_lo[d].saturating_sub(overlap_layers);
                    cube_hi[d] = (base_lo[d] + block + overlap_layers).min(n);
                }
                if parts_per_dim > 1 && (0..3).all(|d| cube_lo[d] == 0 && cube_hi[d] == n) {
                    eprintln!(
                        "warning: subdomain ({bi},{bj},{bk}) covers the whole domain \
                         (overlap_layers = {overlap_layers})"
                    );
                }
                let mut cells = Vec::new();
                for i in cube_lo[0]..cube_hi[0] {
                    for j in cube_lo[1]..cube_hi[1] {
                        for k in cube_lo[2]..cube_hi[2] {
                            let cube = (i * n + j) * n + k;
                            cells.extend(6 * cube..6 * cube + 6);
                        }
                    }
                }
                cells.sort_unstable();
                let edges = subset_edges(mesh, &cells);

                let mut halo: Vec<usize> = cells
                    .iter()
                    .flat_map(|&c| mesh.cells[c].iter().copied())
                    .flat_map(|v| vertex_cells[v].iter().copied())
                    .collect();
                halo.sort_unstable();
                halo.dedup();

                let diam = (0..3)
                    .map(|d| ((cube_hi[d] - cube_lo[d]) as f64 * step[d]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                h_subdomain = h_subdomain.max(diam);

                subdomains.push(Subdomain {
                    cube_lo,
                    cube_hi,
                    cells,
                    edges,
                    halo_cells: halo,
                    neighbors: Vec::new(),
                });
            }
        }
    }

    // covering check and neighbor sets via the cell -> subdomain map
    let mut cell_subs: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_cells()];
    for (l, sub) in subdomains.iter().enumerate() {
        for &c in &sub.cells {
            cell_subs[c].push(l);
        }
    }
    if let Some(c) = cell_subs.iter().position(|subs| subs.is_empty()) {
        return Err(Error::config(format!("cell {c} not covered by any subdomain")));
    }
    for l in 0..subdomains.len() {
        let mut nb: Vec<usize> = subdomains[l]
            .cells
            .iter()
            .flat_map(|&c| cell_subs[c].iter().copied())
            .collect();
        nb.sort_unstable();
        nb.dedup();
        subdomains[l].neighbors = nb;
    }

    Ok(Decomposition {
        parts_per_dim,
        overlap_layers,
        subdomains,
        h_subdomain,
    })
}

impl Decomposition {
    pub fn n_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// Restriction `R_l`: gather global DOF values onto subdomain edges.
    pub fn restrict(&self, l: usize, global: &[C64]) -> Vec<C64> {
        self.subdomains[l].edges.iter().map(|&e| global[e]).collect()
    }

    /// Prolongation `E_l` with accumulation: scatter-add local DOF values.
    pub fn extend_add(&self, l: usize, local: &[C64], global: &mut [C64]) {
        for (j, &e) in self.subdomains[l].edges.iter().enumerate() {
            global[e] += local[j];
        }
    }
}

/// Layer distance (in cube units) from a point to the internal boundary of a
/// subdomain, capped at the overlap width; infinite distances arise where
/// the subdomain boundary lies on the domain boundary.
fn layer_distance(mesh: &BoxMesh, sub: &Subdomain, overlap_layers: usize, x: [f64; 3]) -> f64 {
    let step = mesh.step();
    let mut w = f64::INFINITY;
    for d in 0..3 {
        let u = (x[d] - mesh.lo[d]) / step[d];
        let lo = sub.cube_lo[d] as f64;
        let hi = sub.cube_hi[d] as f64;
        if u < lo || u > hi {
            return 0.0;
        }
        if sub.cube_lo[d] > 0 {
            w = w.min(u - lo);
        }
        if sub.cube_hi[d] < mesh.n {
            w = w.min(hi - u);
        }
    }
    w.min(overlap_layers as f64).max(0.0)
}

/// Build the partition of unity from capped layer distances, normalized per
/// edge so the weights sum to one exactly.
pub fn build_pou(decomposition: &Decomposition, mesh: &BoxMesh) -> PartitionOfUnity {
    let n_edges = mesh.n_edges();
    // owners of each edge: (subdomain, local index)
    let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_edges];
    for (l, sub) in decomposition.subdomains.iter().enumerate() {
        for (j, &e) in sub.edges.iter().enumerate() {
            owners[e].push((l, j));
        }
    }
    let mut chi: Vec<Vec<f64>> = decomposition
        .subdomains
        .iter()
        .map(|s| vec![0.0; s.edges.len()])
        .collect();
    for e in 0..n_edges {
        let mid = mesh.edge_midpoint(e);
        let raw: Vec<f64> = owners[e]
            .iter()
            .map(|&(l, _)| {
                layer_distance(
                    mesh,
                    &decomposition.subdomains[l],
                    decomposition.overlap_layers,
                    mid,
                )
            })
            .collect();
        let total: f64 = raw.iter().sum();
        assert!(total > 0.0, "edge {e} has zero total partition-of-unity weight");
        // normalize, letting the last positive owner absorb the complement so
        // the ascending-order sum is exactly one
        let last_pos = raw.iter().rposition(|&w| w > 0.0).unwrap();
        let mut acc = 0.0f64;
        for (idx, (&(l, j), &w)) in owners[e].iter().zip(&raw).enumerate() {
            let val = if idx == last_pos {
                1.0 - acc
            } else {
                let v = w / total;
                acc += v;
                v
            };
            chi[l][j] = val;
        }
    }
    PartitionOfUnity { chi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit_cube(n: usize) -> BoxMesh {
        build_box_mesh([0.0; 3], [1.0; 3], n).unwrap()
    }

    #[test]
    fn eight_subdomains_of_three_cubed() {
        let mesh = unit_cube(4);
        let dec = build_decomposition(&mesh, 2, 1).unwrap();
        assert_eq!(dec.n_subdomains(), 8);
        for (l, sub) in dec.subdomains.iter().enumerate() {
            // each base 2^3 block extended by one layer, clipped: 3 cubes/dim
            for d in 0..3 {
                assert_eq!(sub.cube_hi[d] - sub.cube_lo[d], 3, "subdomain {l} dim {d}");
            }
            assert_eq!(sub.cells.len(), 6 * 27);
            // enumeration oracle
            let mut oracle: Vec<usize> = Vec::new();
            for i in sub.cube_lo[0]..sub.cube_hi[0] {
                for j in sub.cube_lo[1]..sub.cube_hi[1] {
                    for k in sub.cube_lo[2]..sub.cube_hi[2] {
                        let cube = (i * 4 + j) * 4 + k;
                        oracle.extend(6 * cube..6 * cube + 6);
                    }
                }
            }
            oracle.sort_unstable();
            assert_eq!(sub.cells, oracle);
        }
    }

    #[test]
    fn single_part_is_whole_domain() {
        let mesh = unit_cube(2);
        let dec = build_decomposition(&mesh, 1, 1).unwrap();
        assert_eq!(dec.n_subdomains(), 1);
        assert_eq!(dec.subdomains[0].cells.len(), mesh.n_cells());
        assert_eq!(dec.subdomains[0].neighbors, vec![0]);
    }

    #[test]
    fn covering_and_neighbor_bound() {
        // interior subdomains of a 4^3 decomposition have exactly 27 neighbors
        let mesh = unit_cube(8);
        let dec = build_decomposition(&mesh, 4, 1).unwrap();
        let mut covered = vec![false; mesh.n_cells()];
        for sub in &dec.subdomains {
            for &c in &sub.cells {
                covered[c] = true;
            }
        }
        assert!(covered.iter().all(|&b| b));
        let mut max_nb = 0;
        for (l, sub) in dec.subdomains.iter().enumerate() {
            max_nb = max_nb.max(sub.neighbors.len());
            // oracle: brute-force cell-set intersection
            let setl: std::collections::BTreeSet<usize> = sub.cells.iter().copied().collect();
            let oracle: Vec<usize> = dec
                .subdomains
                .iter()
                .enumerate()
                .filter_map(|(j, other)| {
                    other.cells.iter().any(|ce| setl.contains(ce)).then_some(j)
                })
                .collect();
            assert_eq!(sub.neighbors, oracle, "subdomain {l}");
        }
        assert_eq!(max_nb, 27);
    }

    #[test]
    fn rejects_bad_configs() {
        let mesh = unit_cube(4);
        assert!(build_decomposition(&mesh, 3, 1).is_err()); // 3 does not divide 4
        assert!(build_decomposition(&mesh, 2, 0).is_err()); // no overlap
    }

    #[test]
    fn pou_is_exact_partition() {
        for (n, parts, layers) in [(4, 2, 1), (6, 3, 1), (6, 2, 2)] {
            let mesh = unit_cube(n);
            let dec = build_decomposition(&mesh, parts, layers).unwrap();
            let pou = build_pou(&dec, &mesh);
            let mut sums = vec![0.0f64; mesh.n_edges()];
            for (l, sub) in dec.subdomains.iter().enumerate() {
                for (j, &e) in sub.edges.iter().enumerate() {
                    let w = pou.chi[l][j];
                    assert!((0.0..=1.0).contains(&w));
                    sums[e] += w;
                }
            }
            for (e, s) in sums.iter().enumerate() {
                assert_eq!(*s, 1.0, "edge {e} sum {s} (n={n} parts={parts})");
            }
        }
    }

    #[test]
    fn pou_one_where_single_owner() {
        let mesh = unit_cube(4);
        let dec = build_decomposition(&mesh, 2, 1).unwrap();
        let pou = build_pou(&dec, &mesh);
        // an edge deep in the corner of subdomain 0 is owned only by it
        let mut found = false;
        for (j, &e) in dec.subdomains[0].edges.iter().enumerate() {
            let owners = dec
                .subdomains
                .iter()
                .filter(|s| s.edges.binary_search(&e).is_ok())
                .count();
            if owners == 1 {
                assert_eq!(pou.chi[0][j], 1.0);
                found = true;
            }
        }
        assert!(found, "no single-owner edge found");
    }

    #[test]
    fn pou_symmetric_split_in_overlap() {
        let mesh = unit_cube(4);
        let dec = build_decomposition(&mesh, 2, 1).unwrap();
        let pou = build_pou(&dec, &mesh);
        // an edge on the x = 1/2 plane with low y, z is shared by exactly the
        // two x-neighboring subdomains at equal layer distance
        let e = (0..mesh.n_edges())
            .find(|&e| {
                let m = mesh.edge_midpoint(e);
                (m[0] - 0.5).abs() < 1e-12
                    && m[1] < 0.26
                    && m[2] < 0.26
                    && mesh.edge_tangent(e)[0].abs() < 1e-12
            })
            .expect("edge on the midplane");
        let positive: Vec<f64> = dec
            .subdomains
            .iter()
            .enumerate()
            .filter_map(|(l, s)| s.edges.binary_search(&e).ok().map(|j| pou.chi[l][j]))
            .filter(|&w| w > 0.0)
            .collect();
        assert_eq!(positive.len(), 2, "expected a clean two-way split");
        for w in positive {
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn restriction_prolongation_identities() {
        let mesh = unit_cube(4);
        let dec = build_decomposition(&mesh, 2, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let v: Vec<C64> = (0..mesh.n_edges())
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        for l in 0..dec.n_subdomains() {
            // R E = identity on subdomain DOFs
            let local = dec.restrict(l, &v);
            let mut global = vec![c(0.0, 0.0); mesh.n_edges()];
            dec.extend_add(l, &local, &mut global);
            let back = dec.restrict(l, &global);
            assert_eq!(back, local);
            // E R fixes DOFs inside, zeroes others
            for (e, g) in global.iter().enumerate() {
                if dec.subdomains[l].edges.binary_search(&e).is_ok() {
                    assert_eq!(*g, v[e]);
                } else {
                    assert_eq!(*g, c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn pou_exactness_matrix_free() {
        // sum_l E_l D_l R_l v = v to 1e-14
        for (parts, layers) in [(2usize, 1usize), (3, 1), (2, 2)] {
            let n = 6;
            let mesh = unit_cube(n);
            let dec = build_decomposition(&mesh, parts, layers).unwrap();
            let pou = build_pou(&dec, &mesh);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
            for _ in 0..10 {
                let v: Vec<C64> = (0..mesh.n_edges())
                    .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect();
                let mut out = vec![c(0.0, 0.0); mesh.n_edges()];
                for l in 0..dec.n_subdomains() {
                    let mut local = dec.restrict(l, &v);
                    for (x, &w) in local.iter_mut().zip(&pou.chi[l]) {
                        *x *= w;
                    }
                    dec.extend_add(l, &local, &mut out);
                }
                for (a, b) in out.iter().zip(&v) {
                    assert!((a - b).norm() <= 1e-14 * (1.0 + b.norm()));
                }
            }
        }
    }

    #[test]
    fn overlap_width_matches_layers() {
        let mesh = unit_cube(8);
        let layers = 2;
        let dec = build_decomposition(&mesh, 2, layers).unwrap();
        let cube_h = mesh.step()[0];
        // two x-adjacent subdomains: geometric overlap extent in x
        let a = &dec.subdomains[0];
        let b = dec
            .subdomains
            .iter()
            .find(|s| s.cube_lo[0] > 0 && s.cube_lo[1] == 0 && s.cube_lo[2] == 0)
            .unwrap();
        let overlap_lo = a.cube_lo[0].max(b.cube_lo[0]) as f64;
        let overlap_hi = a.cube_hi[0].min(b.cube_hi[0]) as f64;
        let width = (overlap_hi - overlap_lo) * cube_h;
        let delta = layers as f64 * cube_h;
        // width = 2 * delta for interior overlaps; delta within one h
        assert!((width - 2.0 * delta).abs() <= cube_h + 1e-14);
    }
}
