//! Indexed triangle meshes.
//!
//! [`TriMesh`] is an immutable face list over a vertex array. Adjacency is
//! derived lazily into an [`EdgeMap`] the first time it is asked for; any
//! surgery (imprinting, extrusion, cutting) builds a new mesh instead of
//! patching one in place, so cached adjacency never goes stale.

mod bvh;
mod cotan;
mod io;
mod normals;
pub mod primitives;
mod validate;

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point3, Vector3};

pub use bvh::{FaceBvh, Hit};
pub use cotan::cotan_edge_weights;
pub use io::{export_mesh, load_mesh, ExportFormat, MeshFormat, STL_WELD_TOLERANCE};
pub use normals::{corner_angles, vertex_normals};
pub use validate::{check_watertight, WatertightReport};

/// Role of a face after texture synthesis.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaceTag {
    #[default]
    Untouched,
    TextureInterior,
    TextureWall,
}

/// Undirected edge key with `lo < hi`.
pub type EdgeKey = (usize, usize);

#[inline]
pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    positions: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    tags: Option<Vec<FaceTag>>,
    edges: OnceLock<EdgeMap>,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.positions == other.positions && self.faces == other.faces && self.tags() == other.tags()
    }
}

impl TriMesh {
    /// Builds a mesh, rejecting out-of-range indices, faces that repeat a
    /// vertex, and empty input. Manifoldness is not required here; it is
    /// reported by [`check_watertight`] and enforced by the operations that
    /// need it.
    pub fn new(positions: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() || positions.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange { face: fi, vertex: v, count: n });
                }
            }
            if f[0] == f[1] || f[0] == f[2] {
                return Err(Error::DegenerateFace { face: fi, vertex: f[0] });
            }
            if f[1] == f[2] {
                return Err(Error::DegenerateFace { face: fi, vertex: f[1] });
            }
        }
        Ok(Self::from_raw(positions, faces, None))
    }

    pub(crate) fn from_raw(
        positions: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        tags: Option<Vec<FaceTag>>,
    ) -> Self {
        debug_assert!(tags.as_ref().is_none_or(|t| t.len() == faces.len()));
        TriMesh { positions, faces, tags, edges: OnceLock::new() }
    }

    pub fn with_tags(mut self, tags: Vec<FaceTag>) -> Result<Self> {
        if tags.len() != self.faces.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tags for {} faces",
                tags.len(),
                self.faces.len()
            )));
        }
        self.tags = Some(tags);
        Ok(self)
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn has_tags(&self) -> bool {
        self.tags.is_some()
    }

    pub fn tag(&self, face: usize) -> FaceTag {
        self.tags.as_ref().map_or(FaceTag::Untouched, |t| t[face])
    }

    /// Per-face tags; untagged meshes report every face as untouched.
    pub fn tags(&self) -> Vec<FaceTag> {
        self.tags.clone().unwrap_or_else(|| vec![FaceTag::Untouched; self.faces.len()])
    }

    pub fn corner_positions(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face];
        [self.positions[a], self.positions[b], self.positions[c]]
    }

    /// Unnormalized face normal, `(b - a) x (c - a)`; its length is twice the area.
    pub fn face_cross(&self, face: usize) -> Vector3 {
        let [a, b, c] = self.corner_positions(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume (divergence theorem). Positive for a closed,
    /// outward-wound solid; meaningless for open shells.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let (p, q, r) = (self.positions[a].coords, self.positions[b].coords, self.positions[c].coords);
                p.dot(&q.cross(&r)) / 6.0
            })
            .sum()
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn edges(&self) -> &EdgeMap {
        self.edges.get_or_init(|| EdgeMap::build(&self.faces))
    }

    /// Faces incident to each vertex, in increasing face order.
    pub fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.positions.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                out[v].push(fi);
            }
        }
        out
    }

    /// One-ring vertex neighbours, sorted and deduplicated.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.positions.len()];
        for e in self.edges().iter() {
            out[e.v[0]].push(e.v[1]);
            out[e.v[1]].push(e.v[0]);
        }
        for n in &mut out {
            n.sort_unstable();
            n.dedup();
        }
        out
    }

    pub fn referenced_vertices(&self) -> Vec<bool> {
        let mut used = vec![false; self.positions.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        used
    }

    /// Vertices on at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.positions.len()];
        for e in self.edges().iter().filter(|e| e.is_boundary()) {
            b[e.v[0]] = true;
            b[e.v[1]] = true;
        }
        b
    }

    /// Edge-connected face components; returns `(component per face, count)`.
    pub fn face_components(&self) -> (Vec<usize>, usize) {
        let edges = self.edges();
        let mut comp = vec![usize::MAX; self.faces.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for seed in 0..self.faces.len() {
            if comp[seed] != usize::MAX {
                continue;
            }
            comp[seed] = count;
            stack.push(seed);
            while let Some(f) = stack.pop() {
                for k in 0..3 {
                    for &(g, _) in &edges.edge(edges.face_edge(f, k)).faces {
                        if comp[g] == usize::MAX {
                            comp[g] = count;
                            stack.push(g);
                        }
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// Ordered boundary loops. Each loop lists vertices in the direction the
    /// incident face traverses them, so the surface lies to the left.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>> {
        let edges = self.edges();
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut starts = Vec::new();
        for e in edges.iter().filter(|e| e.is_boundary()) {
            let (f, k) = e.faces[0];
            let a = self.faces[f][k as usize];
            let b = self.faces[f][(k as usize + 1) % 3];
            if next.insert(a, b).is_some() {
                return Err(Error::NonManifold(format!("vertex {a} has several outgoing boundary edges")));
            }
            starts.push(a);
        }
        starts.sort_unstable();
        let mut visited = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if visited.contains(&s) {
                continue;
            }
            let mut lp = vec![s];
            visited.insert(s);
            let mut cur = next[&s];
            while cur != s {
                if !visited.insert(cur) {
                    return Err(Error::NonManifold(format!("boundary loop through vertex {cur} is not simple")));
                }
                lp.push(cur);
                cur = *next
                    .get(&cur)
                    .ok_or_else(|| Error::NonManifold(format!("boundary chain stops at vertex {cur}")))?;
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Applies `f` to every position, keeping connectivity and tags.
    pub fn map_positions(&self, f: impl Fn(&Point3) -> Point3) -> TriMesh {
        TriMesh::from_raw(self.positions.iter().map(f).collect(), self.faces.clone(), self.tags.clone())
    }

    /// Reverses the winding of every face.
    pub fn flipped(&self) -> TriMesh {
        let faces = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        TriMesh::from_raw(self.positions.clone(), faces, self.tags.clone())
    }

    /// Drops unreferenced vertices, returning the old-to-new index map.
    pub fn compact(&self) -> (TriMesh, Vec<Option<usize>>) {
        let used = self.referenced_vertices();
        let mut remap = vec![None; self.positions.len()];
        let mut positions = Vec::new();
        for (i, p) in self.positions.iter().enumerate() {
            if used[i] {
                remap[i] = Some(positions.len());
                positions.push(*p);
            }
        }
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|v| remap[v].expect("referenced vertex")))
            .collect();
        (TriMesh::from_raw(positions, faces, self.tags.clone()), remap)
    }

    /// Keeps only the faces for which `keep` holds.
    pub fn filter_faces(&self, keep: impl Fn(usize) -> bool) -> TriMesh {
        let mut faces = Vec::new();
        let mut tags = Vec::new();
        for f in 0..self.faces.len() {
            if keep(f) {
                faces.push(self.faces[f]);
                tags.push(self.tag(f));
            }
        }
        let tags = self.tags.as_ref().map(|_| tags);
        TriMesh::from_raw(self.positions.clone(), faces, tags)
    }

    /// Errors unless every edge has at most two faces with opposite
    /// orientation.
    pub fn require_manifold(&self) -> Result<()> {
        for e in self.edges().iter() {
            if e.faces.len() > 2 {
                return Err(Error::NonManifold(format!("edge {:?} has {} faces", e.v, e.faces.len())));
            }
            if e.faces.len() == 2 && !e.consistently_wound(&self.faces) {
                return Err(Error::NonManifold(format!("faces around edge {:?} disagree on winding", e.v)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, `v[0] < v[1]`.
    pub v: [usize; 2],
    /// Incident `(face, local edge)`; local edge `k` runs from corner `k` to `k + 1`.
    pub faces: Vec<(usize, u8)>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.faces.len() == 1
    }

    pub fn is_interior(&self) -> bool {
        self.faces.len() == 2
    }

    /// Whether the two incident faces traverse this edge in opposite directions.
    pub fn consistently_wound(&self, faces: &[[usize; 3]]) -> bool {
        if self.faces.len() != 2 {
            return true;
        }
        let dir = |(f, k): (usize, u8)| faces[f][k as usize] == self.v[0];
        dir(self.faces[0]) != dir(self.faces[1])
    }

    pub fn other_face(&self, face: usize) -> Option<usize> {
        self.faces.iter().map(|&(f, _)| f).find(|&f| f != face)
    }
}

/// Undirected edges of a face list in sorted key order.
#[derive(Debug, Clone)]
pub struct EdgeMap {
    edges: Vec<Edge>,
    index: HashMap<EdgeKey, usize>,
    face_edges: Vec<[usize; 3]>,
}

impl EdgeMap {
    fn build(faces: &[[usize; 3]]) -> Self {
        let mut half: Vec<(EdgeKey, usize, u8)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                half.push((edge_key(f[k], f[(k + 1) % 3]), fi, k as u8));
            }
        }
        half.sort_unstable();
        let mut edges: Vec<Edge> = Vec::new();
        let mut index = HashMap::with_capacity(half.len() / 2 + 1);
        let mut face_edges = vec![[usize::MAX; 3]; faces.len()];
        for (key, f, k) in half {
            if edges.last().is_none_or(|e| (e.v[0], e.v[1]) != key) {
                index.insert(key, edges.len());
                edges.push(Edge { v: [key.0, key.1], faces: Vec::with_capacity(2) });
            }
            let id = edges.len() - 1;
            edges[id].faces.push((f, k));
            face_edges[f][k as usize] = id;
        }
        EdgeMap { edges, index, face_edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&edge_key(a, b)).copied()
    }

    /// Edge id of local edge `k` (corner `k` to corner `k + 1`) of `face`.
    pub fn face_edge(&self, face: usize, k: usize) -> usize {
        self.face_edges[face][k]
    }
}

#[cfg(test)]
mod tests {
    use super::primitives;
    use super::*;

    #[test]
    fn rejects_bad_faces() {
        let p = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        assert!(matches!(TriMesh::new(p.clone(), vec![[0, 1, 3]]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(TriMesh::new(p.clone(), vec![[0, 1, 1]]), Err(Error::DegenerateFace { .. })));
        assert!(matches!(TriMesh::new(p, vec![]), Err(Error::EmptyMesh)));
    }

    #[test]
    fn cube_edge_map() {
        let cube = primitives::unit_cube();
        let em = cube.edges();
        assert_eq!(em.len(), 18);
        assert!(em.iter().all(|e| e.is_interior() && e.consistently_wound(cube.faces())));
        assert_eq!(cube.face_components().1, 1);
        assert!(cube.boundary_loops().unwrap().is_empty());
        assert!((cube.signed_volume() - 1.0).abs() < 1e-12);
        assert!((cube.flipped().signed_volume() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_boundary_loop_is_ccw() {
        let grid = primitives::grid_plane(3, 2, 3.0, 2.0);
        let loops = grid.boundary_loops().unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 10);
        let area: f64 = loops[0]
            .iter()
            .zip(loops[0].iter().cycle().skip(1))
            .map(|(&a, &b)| {
                let (p, q) = (grid.positions()[a], grid.positions()[b]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
            / 2.0;
        assert!((area - 6.0).abs() < 1e-12);
    }
}
