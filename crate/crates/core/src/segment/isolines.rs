use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::mesh::TriMesh;
use crate::Point3;

/// One level-set curve. Points sit on mesh edges; closed curves repeat the
/// first point at the end. The high side (`phi > level`) lies to the left
/// when looking down the face normals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Isoline {
    pub level: f64,
    pub points: Vec<Point3>,
    /// Edge id crossed by each point (closing duplicate included).
    pub edges: Vec<usize>,
    /// Face traversed by each segment `points[i]..points[i + 1]`.
    pub faces: Vec<usize>,
    pub closed: bool,
}

impl Isoline {
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[inline]
fn high(phi: f64, level: f64) -> bool {
    phi > level
}

/// Traces `phi = level` across the mesh. Curves are ordered by their
/// smallest crossed edge id and closed curves start at that edge.
pub fn extract_isolines(mesh: &TriMesh, phi: &[f64], level: f64) -> Vec<Isoline> {
    let edges = mesh.edges();
    // Directed segment per face: from its high-to-low crossing to its
    // low-to-high crossing, walking the face counter-clockwise.
    let mut seg_from: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut has_incoming = vec![false; edges.len()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let (mut out_e, mut in_e) = (None, None);
        for k in 0..3 {
            let (a, b) = (face[k], face[(k + 1) % 3]);
            match (high(phi[a], level), high(phi[b], level)) {
                (true, false) => out_e = Some(edges.face_edge(f, k)),
                (false, true) => in_e = Some(edges.face_edge(f, k)),
                _ => {}
            }
        }
        if let (Some(s), Some(t)) = (out_e, in_e) {
            // A non-manifold fan can put two segments on one edge; keep the first.
            seg_from.entry(s).or_insert((f, t));
            has_incoming[t] = true;
        }
    }
    let point = |e: usize| {
        let [a, b] = edges.edge(e).v;
        let t = (level - phi[a]) / (phi[b] - phi[a]);
        let (pa, pb) = (mesh.positions()[a], mesh.positions()[b]);
        pa + (pb - pa) * t
    };
    let mut starts: Vec<usize> = seg_from.keys().copied().collect();
    starts.sort_unstable();
    // Open curves first claim their segments from a start without predecessor.
    starts.sort_by_key(|&e| has_incoming[e]);
    let mut used = vec![false; edges.len()];
    let mut out = Vec::new();
    for s in starts {
        if used[s] {
            continue;
        }
        let mut line = Isoline { level, points: vec![point(s)], edges: vec![s], faces: Vec::new(), closed: false };
        used[s] = true;
        let mut cur = s;
        while let Some(&(f, next)) = seg_from.get(&cur) {
            line.faces.push(f);
            line.points.push(point(next));
            line.edges.push(next);
            if next == s {
                line.closed = true;
                break;
            }
            if used[next] {
                break;
            }
            used[next] = true;
            cur = next;
        }
        if line.faces.is_empty() {
            continue;
        }
        if line.closed {
            // Exact closure despite interpolation round-off on the repeated edge.
            let first = line.points[0];
            *line.points.last_mut().expect("non-empty") = first;
        }
        out.push(line);
    }
    out.sort_by_key(|l| *l.edges.iter().min().expect("non-empty"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn strip_mid_level_is_straight() {
        let m = primitives::grid_plane(10, 3, 10.0, 3.0);
        let phi: Vec<f64> = m.positions().iter().map(|p| p.x / 10.0).collect();
        let lines = extract_isolines(&m, &phi, 0.55);
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert!(!l.closed);
        for p in &l.points {
            assert!((p.x - 5.5).abs() < 1e-12);
        }
        assert!((l.length() - 3.0).abs() < 1e-12);
        // High side (x > 5.5) on the left of the walking direction seen from +z: walk is -y.
        assert!(l.points.last().unwrap().y < l.points[0].y);
    }

    #[test]
    fn level_outside_range_is_empty() {
        let m = primitives::grid_plane(4, 4, 1.0, 1.0);
        let phi: Vec<f64> = m.positions().iter().map(|p| p.x).collect();
        assert!(extract_isolines(&m, &phi, 1.5).is_empty());
        assert!(extract_isolines(&m, &phi, -0.5).is_empty());
    }

    #[test]
    fn cylinder_ring_is_closed() {
        let m = primitives::capped_cylinder(3.0, 6.0, 64, 6, 2);
        let phi: Vec<f64> = m.positions().iter().map(|p| p.z / 6.0).collect();
        let lines = extract_isolines(&m, &phi, 0.42);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        assert_eq!(lines[0].points[0], *lines[0].points.last().unwrap());
    }
}
