use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{check_watertight, edge_key, EdgeKey, TriMesh};
use crate::segment::{distortion, rings};

/// A mesh cut open into a topological disk. Faces keep their order and
/// corner order; vertices are split where seams pass.
#[derive(Debug, Clone)]
pub struct CutMesh {
    pub mesh: TriMesh,
    /// Original vertex index of every cut-mesh vertex.
    pub original_vertex: Vec<usize>,
    /// Original-mesh edges that were split, sorted.
    pub seam_edges: Vec<EdgeKey>,
}

impl CutMesh {
    /// Original vertices touched by a seam, sorted.
    pub fn seam_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.seam_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeamParams {
    /// Upper bound on distortion terminals joined into the cut.
    pub terminals: usize,
    /// Terminals are at least this many rings apart.
    pub exclusion_rings: usize,
    /// Minimum single-vertex distortion for a terminal.
    pub threshold: f64,
    /// How strongly paths prefer creases: edge cost is
    /// `length * exp(-crease_affinity * dihedral)`.
    pub crease_affinity: f64,
}

impl Default for SeamParams {
    fn default() -> Self {
        SeamParams { terminals: 16, exclusion_rings: 3, threshold: 0.002, crease_affinity: 4.0 }
    }
}

/// Cuts `mesh` into a disk with default parameters.
pub fn cut_seams(mesh: &TriMesh) -> Result<CutMesh> {
    cut_seams_with(mesh, &SeamParams::default(), &[])
}

/// Cuts `mesh` into a disk. Handles and extra boundary loops are removed
/// first; then distortion terminals (plus `extra_terminals`) are joined to
/// the cut by cheapest edge paths.
pub fn cut_seams_with(mesh: &TriMesh, params: &SeamParams, extra_terminals: &[usize]) -> Result<CutMesh> {
    mesh.require_manifold()?;
    let (_, components) = mesh.face_components();
    if components != 1 {
        return Err(Error::Disconnected { components });
    }
    let report = check_watertight(mesh);
    let loops = mesh.boundary_loops()?;

    let edges = mesh.edges();
    let cost = edge_costs(mesh, params.crease_affinity);
    let neighbors = adjacency(mesh);
    let mut cut = vec![false; edges.len()];
    let mut in_tree = vec![false; mesh.num_vertices()];

    let genus = (2 - report.euler_characteristic - loops.len() as i64) / 2;
    if genus > 0 {
        for e in topological_cut(mesh) {
            cut[e] = true;
            let [a, b] = edges.edge(e).v;
            in_tree[a] = true;
            in_tree[b] = true;
        }
    }
    for lp in &loops {
        if lp.iter().any(|&v| in_tree[v]) {
            for &v in lp {
                in_tree[v] = true;
            }
            continue;
        }
        if in_tree.iter().any(|&t| t) {
            connect(&neighbors, &cost, lp, &mut in_tree, &mut cut);
        }
        for &v in lp {
            in_tree[v] = true;
        }
    }

    let mut terminals = pick_terminals(mesh, params);
    for &t in extra_terminals {
        if !terminals.contains(&t) {
            terminals.push(t);
        }
    }
    for &t in &terminals {
        if in_tree[t] {
            continue;
        }
        if in_tree.iter().any(|&x| x) {
            connect(&neighbors, &cost, &[t], &mut in_tree, &mut cut);
        }
        in_tree[t] = true;
    }
    if loops.is_empty() {
        // A closed sphere needs a slit of at least two edges; a single edge
        // opens nothing because its end vertices stay whole.
        let mut tip = terminals.first().copied().unwrap_or(0);
        if let Some(e) = cut.iter().position(|&c| c) {
            tip = edges.edge(e).v[1];
        }
        in_tree[tip] = true;
        while cut.iter().filter(|&&c| c).count() < 2 {
            let &(u, e) = neighbors[tip]
                .iter()
                .filter(|&&(u, _)| !in_tree[u])
                .min_by(|a, b| cost[a.1].total_cmp(&cost[b.1]).then(a.0.cmp(&b.0)))
                .ok_or(Error::EmptyMesh)?;
            cut[e] = true;
            in_tree[u] = true;
            tip = u;
        }
    }
    if !cut.iter().any(|&c| c) && report.euler_characteristic == 1 && loops.len() == 1 {
        return Ok(CutMesh {
            mesh: mesh.clone(),
            original_vertex: (0..mesh.num_vertices()).collect(),
            seam_edges: Vec::new(),
        });
    }
    split_along(mesh, &cut)
}

/// Distortion terminals: vertices ranked by single-vertex distortion with a
/// ring exclusion zone around each pick.
fn pick_terminals(mesh: &TriMesh, params: &SeamParams) -> Vec<usize> {
    let d = distortion(mesh, 0).d;
    let mut order: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| d[v] >= params.threshold).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
    let neighbors = mesh.vertex_neighbors();
    let mut blocked = vec![false; mesh.num_vertices()];
    let mut seen = vec![0u32; mesh.num_vertices()];
    let mut out = Vec::new();
    for v in order {
        if out.len() == params.terminals {
            break;
        }
        if blocked[v] {
            continue;
        }
        out.push(v);
        for ring in rings(&neighbors, v, params.exclusion_rings.saturating_sub(1), &mut seen, out.len() as u32) {
            for u in ring {
                blocked[u] = true;
            }
        }
    }
    out
}

/// `(neighbour, edge id)` lists in ascending neighbour order.
fn adjacency(mesh: &TriMesh) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); mesh.num_vertices()];
    for (id, e) in mesh.edges().iter().enumerate() {
        adj[e.v[0]].push((e.v[1], id));
        adj[e.v[1]].push((e.v[0], id));
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Edge lengths discounted on creases so seams follow sharp features.
fn edge_costs(mesh: &TriMesh, affinity: f64) -> Vec<f64> {
    let normals: Vec<_> = (0..mesh.num_faces()).map(|f| mesh.face_cross(f).normalize()).collect();
    mesh.edges()
        .iter()
        .map(|e| {
            let len = (mesh.positions()[e.v[0]] - mesh.positions()[e.v[1]]).norm();
            let bend = if e.faces.len() == 2 {
                normals[e.faces[0].0].dot(&normals[e.faces[1].0]).clamp(-1.0, 1.0).acos()
            } else {
                0.0
            };
            let bend = if bend.is_finite() { bend } else { 0.0 };
            len * (-affinity * bend).exp()
        })
        .collect()
}

/// Cheapest path from any of `from` to a vertex already in the tree; marks
/// the path's edges as cut and its vertices as part of the tree.
fn connect(
    neighbors: &[Vec<(usize, usize)>],
    cost: &[f64],
    from: &[usize],
    in_tree: &mut [bool],
    cut: &mut [bool],
) {
    let n = neighbors.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in from {
        dist[s] = 0.0;
        heap.push(Reverse((OrdF64(0.0), s)));
    }
    let source: HashSet<usize> = from.iter().copied().collect();
    let mut hit = None;
    while let Some(Reverse((OrdF64(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if in_tree[v] && !source.contains(&v) {
            hit = Some(v);
            break;
        }
        for &(u, e) in &neighbors[v] {
            let nd = d + cost[e];
            if nd < dist[u] {
                dist[u] = nd;
                prev[u] = Some((v, e));
                heap.push(Reverse((OrdF64(nd), u)));
            }
        }
    }
    let mut v = match hit {
        Some(v) => v,
        None => return,
    };
    while let Some((p, e)) = prev[v] {
        cut[e] = true;
        in_tree[v] = true;
        v = p;
    }
    in_tree[v] = true;
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Edges outside a breadth-first dual spanning tree, with dangling branches
/// pruned: what remains cuts every handle.
fn topological_cut(mesh: &TriMesh) -> Vec<usize> {
    let edges = mesh.edges();
    let mut tree_edge = vec![false; edges.len()];
    let mut seen = vec![false; mesh.num_faces()];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(f) = queue.pop_front() {
        for k in 0..3 {
            let e = edges.face_edge(f, k);
            if let Some(g) = edges.edge(e).other_face(f) {
                if !seen[g] {
                    seen[g] = true;
                    tree_edge[e] = true;
                    queue.push_back(g);
                }
            }
        }
    }
    let mut keep: Vec<bool> = edges.iter().enumerate().map(|(i, e)| e.is_interior() && !tree_edge[i]).collect();
    let boundary: Vec<bool> = edges.iter().map(|e| e.is_boundary()).collect();
    let mut degree = vec![0usize; mesh.num_vertices()];
    for (i, e) in edges.iter().enumerate() {
        if keep[i] || boundary[i] {
            degree[e.v[0]] += 1;
            degree[e.v[1]] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| degree[v] == 1).collect();
    let adj = adjacency(mesh);
    while let Some(v) = stack.pop() {
        if degree[v] != 1 {
            continue;
        }
        if let Some(&(u, e)) = adj[v].iter().find(|&&(_, e)| keep[e]) {
            keep[e] = false;
            degree[v] -= 1;
            degree[u] -= 1;
            if degree[u] == 1 {
                stack.push(u);
            }
        }
    }
    (0..edges.len()).filter(|&e| keep[e]).collect()
}

/// Splits vertices along cut edges by merging face corners across every
/// uncut interior edge.
fn split_along(mesh: &TriMesh, cut: &[bool]) -> Result<CutMesh> {
    let edges = mesh.edges();
    let faces = mesh.faces();
    let mut parent: Vec<usize> = (0..faces.len() * 3).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let corner = |f: usize, v: usize| 3 * f + faces[f].iter().position(|&w| w == v).expect("vertex of face");
    for (id, e) in edges.iter().enumerate() {
        if cut[id] || !e.is_interior() {
            continue;
        }
        let (f, g) = (e.faces[0].0, e.faces[1].0);
        for v in e.v {
            let (a, b) = (find(&mut parent, corner(f, v)), find(&mut parent, corner(g, v)));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut new_id = vec![usize::MAX; parent.len()];
    let mut original_vertex = Vec::new();
    let mut positions = Vec::new();
    let mut new_faces = Vec::with_capacity(faces.len());
    for (f, face) in faces.iter().enumerate() {
        let mut nf = [0; 3];
        for k in 0..3 {
            let root = find(&mut parent, 3 * f + k);
            if new_id[root] == usize::MAX {
                new_id[root] = positions.len();
                positions.push(mesh.positions()[face[k]]);
                original_vertex.push(face[k]);
            }
            nf[k] = new_id[root];
        }
        new_faces.push(nf);
    }
    let out = TriMesh::new(positions, new_faces)?;
    let report = check_watertight(&out);
    let loops = out.boundary_loops()?;
    if report.euler_characteristic != 1 || loops.len() != 1 {
        return Err(Error::NotADisk { euler: report.euler_characteristic, boundary_loops: loops.len() });
    }
    let mut seam_edges: Vec<EdgeKey> =
        (0..edges.len()).filter(|&e| cut[e] && edges.edge(e).is_interior()).map(|e| {
            let [a, b] = edges.edge(e).v;
            edge_key(a, b)
        }).collect();
    seam_edges.sort_unstable();
    Ok(CutMesh { mesh: out, original_vertex, seam_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn is_disk(c: &CutMesh) {
        let r = check_watertight(&c.mesh);
        assert_eq!(r.euler_characteristic, 1);
        assert_eq!(c.mesh.boundary_loops().unwrap().len(), 1);
        assert_eq!(r.nonmanifold_edge_count, 0);
        assert_eq!(r.inconsistent_winding_pairs, 0);
    }

    #[test]
    fn plane_is_unchanged() {
        let g = primitives::grid_plane(4, 3, 4.0, 3.0);
        let c = cut_seams(&g).unwrap();
        assert_eq!(c.mesh, g);
        assert!(c.seam_edges.is_empty());
    }

    #[test]
    fn closed_shapes_become_disks() {
        for m in [
            primitives::unit_cube(),
            primitives::capped_cylinder(10.0, 20.0, 48, 8, 4),
            primitives::icosphere(15.0, 2),
            primitives::cone(10.0, 20.0, 32, 6, 3, true),
        ] {
            let c = cut_seams(&m).unwrap();
            is_disk(&c);
            assert_eq!(c.mesh.num_faces(), m.num_faces());
            assert!((c.mesh.surface_area() - m.surface_area()).abs() < 1e-9 * m.surface_area());
        }
    }

    #[test]
    fn annulus_gets_one_straight_seam() {
        let m = primitives::open_cylinder(5.0, 10.0, 32, 5);
        let c = cut_seams(&m).unwrap();
        is_disk(&c);
        assert_eq!(c.seam_edges.len(), 5);
    }

    #[test]
    fn torus_handles_are_cut() {
        // Square torus from a periodic grid.
        let (n, m) = (12, 8);
        let id = |i: usize, j: usize| (j % m) * n + i % n;
        let mut positions = Vec::new();
        for j in 0..m {
            for i in 0..n {
                let (u, v) = (std::f64::consts::TAU * i as f64 / n as f64, std::f64::consts::TAU * j as f64 / m as f64);
                let r = 5.0 + 2.0 * v.cos();
                positions.push(crate::Point3::new(r * u.cos(), r * u.sin(), 2.0 * v.sin()));
            }
        }
        let mut faces = Vec::new();
        for j in 0..m {
            for i in 0..n {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let t = TriMesh::new(positions, faces).unwrap();
        is_disk(&cut_seams(&t).unwrap());
    }

    #[test]
    fn disconnected_input_rejected() {
        let a = primitives::unit_cube();
        let n = a.num_vertices();
        let mut p = a.positions().to_vec();
        p.extend(a.positions().iter().map(|q| q + crate::Vector3::new(3.0, 0.0, 0.0)));
        let mut f = a.faces().to_vec();
        f.extend(a.faces().iter().map(|t| t.map(|v| v + n)));
        let m = TriMesh::new(p, f).unwrap();
        assert!(matches!(cut_seams(&m), Err(Error::Disconnected { components: 2 })));
    }
}
