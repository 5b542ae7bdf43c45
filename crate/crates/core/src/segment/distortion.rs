use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::mesh::{corner_angles, TriMesh};

/// Regional angle-deficit field, one value in `[0, 1]` per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionField {
    pub d: Vec<f64>,
    /// Ring radius the field was computed with.
    pub radius: usize,
}

impl DistortionField {
    /// Vertex with the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &v) in self.d.iter().enumerate() {
            if best.is_none_or(|b| v > self.d[b]) {
                best = Some(i);
            }
        }
        best
    }
}

/// Angle deficit per vertex: `2π - Σθ` inside, `π - Σθ` on the boundary.
/// Unreferenced vertices get 0.
pub fn angle_deficits(mesh: &TriMesh) -> Vec<f64> {
    let mut sum = vec![0.0; mesh.num_vertices()];
    for (f, a) in mesh.faces().iter().zip(corner_angles(mesh)) {
        for k in 0..3 {
            sum[f[k]] += a[k];
        }
    }
    let boundary = mesh.boundary_vertices();
    let used = mesh.referenced_vertices();
    (0..sum.len())
        .map(|v| match (used[v], boundary[v]) {
            (false, _) => 0.0,
            (true, true) => PI - sum[v],
            (true, false) => TAU - sum[v],
        })
        .collect()
}

/// Breadth-first rings around `v` up to `radius`; `rings[r]` holds the
/// vertices at exactly `r` steps.
pub(crate) fn rings(neighbors: &[Vec<usize>], v: usize, radius: usize, seen: &mut [u32], stamp: u32) -> Vec<Vec<usize>> {
    let mut out = vec![vec![v]];
    seen[v] = stamp;
    for _ in 0..radius {
        let mut next = Vec::new();
        for &u in out.last().expect("non-empty") {
            for &w in &neighbors[u] {
                if seen[w] != stamp {
                    seen[w] = stamp;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.push(next);
    }
    out
}

/// `D(i) = max over r in 0..=radius of (Σ deficit within r rings) / 2π`,
/// clamped to `[0, 1]`.
pub fn distortion(mesh: &TriMesh, radius: usize) -> DistortionField {
    distortion_with(mesh, radius, Exec::default())
}

pub fn distortion_with(mesh: &TriMesh, radius: usize, exec: Exec) -> DistortionField {
    let deficit = angle_deficits(mesh);
    let neighbors = mesh.vertex_neighbors();
    let used = mesh.referenced_vertices();
    let n = mesh.num_vertices();
    // Chunked so each worker reuses one visitation buffer.
    const CHUNK: usize = 256;
    let chunks = exec.map_range(n.div_ceil(CHUNK), |c| {
        let mut seen = vec![0u32; n];
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        (lo..hi)
            .map(|v| {
                if !used[v] {
                    return 0.0;
                }
                let mut acc = 0.0;
                let mut best = f64::NEG_INFINITY;
                for ring in rings(&neighbors, v, radius, &mut seen, (v - lo + 1) as u32) {
                    acc += ring.iter().map(|&u| deficit[u]).sum::<f64>();
                    best = best.max(acc);
                }
                (best / TAU).clamp(0.0, 1.0)
            })
            .collect::<Vec<_>>()
    });
    DistortionField { d: chunks.into_iter().flatten().collect(), radius }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn flat_interior_is_zero() {
        let g = primitives::grid_plane(12, 12, 6.0, 6.0);
        let b = g.boundary_vertices();
        let local = distortion(&g, 0);
        let wide = distortion(&g, 3);
        for (v, p) in g.positions().iter().enumerate() {
            if !b[v] {
                assert!(local.d[v].abs() < 1e-12);
            }
            // Farther than three rings from the plate corners.
            if (p.x - 3.0).abs() < 1.0 && (p.y - 3.0).abs() < 1.0 {
                assert!(wide.d[v].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cube_corner_quarter() {
        let c = primitives::unit_cube();
        let f = distortion(&c, 0);
        for d in &f.d {
            assert!((d - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_bonnet_on_icosphere() {
        let s = primitives::icosphere(2.0, 3);
        let total: f64 = angle_deficits(&s).iter().sum();
        assert!((total - 2.0 * TAU).abs() < 1e-9);
    }

    #[test]
    fn sequential_matches_parallel() {
        let s = primitives::capped_cylinder(5.0, 8.0, 24, 4, 3);
        assert_eq!(distortion_with(&s, 3, Exec::Sequential), distortion_with(&s, 3, Exec::Parallel));
    }
}
