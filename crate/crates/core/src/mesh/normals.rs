use super::TriMesh;
use crate::error::{Error, Result};
use crate::Vector3;

/// Interior angles of every face at corners 0, 1, 2.
pub fn corner_angles(mesh: &TriMesh) -> Vec<[f64; 3]> {
    (0..mesh.num_faces())
        .map(|f| {
            let p = mesh.corner_positions(f);
            let mut out = [0.0; 3];
            for k in 0..3 {
                let a = p[(k + 1) % 3] - p[k];
                let b = p[(k + 2) % 3] - p[k];
                out[k] = a.cross(&b).norm().atan2(a.dot(&b));
            }
            out
        })
        .collect()
}

/// Angle-weighted vertex normals.
///
/// Each incident face contributes its unit normal scaled by the corner angle
/// at the vertex. Splitting a face into coplanar pieces leaves the result
/// unchanged, which is what keeps normals stable across imprinting.
pub fn vertex_normals(mesh: &TriMesh) -> Result<Vec<Vector3>> {
    let angles = corner_angles(mesh);
    let mut acc = vec![Vector3::zeros(); mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let n = mesh.face_cross(f);
        let len = n.norm();
        if len == 0.0 || !len.is_finite() {
            continue;
        }
        let n = n / len;
        for k in 0..3 {
            acc[face[k]] += n * angles[f][k];
        }
    }
    let used = mesh.referenced_vertices();
    acc.into_iter()
        .enumerate()
        .map(|(v, n)| {
            let len = n.norm();
            if !used[v] || len < 1e-300 {
                Err(Error::DegenerateNormal { vertex: v })
            } else {
                Ok(n / len)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn flat_grid_points_up() {
        let g = primitives::grid_plane(4, 3, 2.0, 1.5);
        for n in vertex_normals(&g).unwrap() {
            assert!((n - Vector3::z()).norm() < 1e-15);
        }
    }

    #[test]
    fn cube_corner_is_octant_diagonal() {
        let c = primitives::unit_cube();
        let normals = vertex_normals(&c).unwrap();
        let center = Vector3::new(0.5, 0.5, 0.5);
        for (v, n) in normals.iter().enumerate() {
            let expect = (c.positions()[v].coords - center).map(f64::signum) / 3f64.sqrt();
            assert!((n - expect).norm() < 1e-12, "vertex {v}: {n:?}");
        }
    }

    #[test]
    fn icosphere_normals_are_radial() {
        let s = primitives::icosphere(3.0, 3);
        let normals = vertex_normals(&s).unwrap();
        for (p, n) in s.positions().iter().zip(&normals) {
            let cos = n.dot(&p.coords.normalize()).clamp(-1.0, 1.0);
            assert!(cos.acos().to_degrees() < 2.0);
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_area_fan_is_reported() {
        let p = vec![
            crate::Point3::origin(),
            crate::Point3::new(1.0, 0.0, 0.0),
            crate::Point3::new(2.0, 0.0, 0.0),
        ];
        let m = TriMesh::new(p, vec![[0, 1, 2]]).unwrap();
        assert!(matches!(vertex_normals(&m), Err(Error::DegenerateNormal { vertex: 0 })));
    }
}
