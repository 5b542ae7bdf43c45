use serde::{Deserialize, Serialize};

use super::TriMesh;

/// Printability summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatertightReport {
    pub is_closed: bool,
    pub boundary_edge_count: usize,
    pub nonmanifold_edge_count: usize,
    pub inconsistent_winding_pairs: usize,
    /// `V - E + F` over referenced vertices.
    pub euler_characteristic: i64,
}

pub fn check_watertight(mesh: &TriMesh) -> WatertightReport {
    let edges = mesh.edges();
    let mut boundary = 0;
    let mut nonmanifold = 0;
    let mut inconsistent = 0;
    for e in edges.iter() {
        match e.faces.len() {
            1 => boundary += 1,
            2 => {
                if !e.consistently_wound(mesh.faces()) {
                    inconsistent += 1;
                }
            }
            _ => nonmanifold += 1,
        }
    }
    let v = mesh.referenced_vertices().iter().filter(|&&u| u).count() as i64;
    WatertightReport {
        is_closed: boundary == 0 && nonmanifold == 0 && inconsistent == 0,
        boundary_edge_count: boundary,
        nonmanifold_edge_count: nonmanifold,
        inconsistent_winding_pairs: inconsistent,
        euler_characteristic: v - edges.len() as i64 + mesh.num_faces() as i64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn cube_is_closed() {
        let r = check_watertight(&primitives::unit_cube());
        assert!(r.is_closed);
        assert_eq!(r.euler_characteristic, 2);
    }

    #[test]
    fn missing_triangle_exposes_three_edges() {
        let cube = primitives::unit_cube();
        let open = cube.filter_faces(|f| f != 4);
        let r = check_watertight(&open);
        assert_eq!(r.boundary_edge_count, 3);
        assert!(!r.is_closed);
    }

    #[test]
    fn flipped_face_gives_three_winding_defects() {
        let cube = primitives::unit_cube();
        let mut faces = cube.faces().to_vec();
        faces[7].swap(1, 2);
        let m = TriMesh::new(cube.positions().to_vec(), faces).unwrap();
        let r = check_watertight(&m);
        assert_eq!(r.inconsistent_winding_pairs, 3);
        assert!(!r.is_closed);
    }

    #[test]
    fn fin_is_nonmanifold() {
        let cube = primitives::unit_cube();
        let mut positions = cube.positions().to_vec();
        positions.push(crate::Point3::new(0.5, 0.5, 3.0));
        let mut faces = cube.faces().to_vec();
        let [a, b, _] = faces[0];
        faces.push([a, b, 8]);
        let r = check_watertight(&TriMesh::new(positions, faces).unwrap());
        assert_eq!(r.nonmanifold_edge_count, 1);
        assert_eq!(r.boundary_edge_count, 2);
    }
}
