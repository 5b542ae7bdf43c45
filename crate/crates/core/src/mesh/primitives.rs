//! Procedural meshes used as fixtures, benchmarks and CLI demos.
//!
//! All closed shapes are wound counter-clockwise seen from outside.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::TriMesh;
use crate::Point3;

fn build(positions: Vec<Point3>, faces: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(positions, faces).expect("primitive generators emit valid meshes")
}

fn push_quad(faces: &mut Vec<[usize; 3]>, a: usize, b: usize, c: usize, d: usize) {
    faces.push([a, b, c]);
    faces.push([a, c, d]);
}

/// The 8-vertex, 12-triangle cube `[0, 1]^3`.
pub fn unit_cube() -> TriMesh {
    let positions = (0..8)
        .map(|i| {
            let (x, y) = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)][i % 4];
            Point3::new(x, y, if i < 4 { 0.0 } else { 1.0 })
        })
        .collect();
    let faces = vec![
        [0, 2, 1], [0, 3, 2], [4, 5, 6], [4, 6, 7], [0, 1, 5], [0, 5, 4],
        [1, 2, 6], [1, 6, 5], [2, 3, 7], [2, 7, 6], [3, 0, 4], [3, 4, 7],
    ];
    build(positions, faces)
}

/// Flat open grid on `z = 0` covering `[0, sx] x [0, sy]`, normal `+z`.
pub fn grid_plane(nx: usize, ny: usize, sx: f64, sy: f64) -> TriMesh {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Point3::new(sx * i as f64 / nx as f64, sy * j as f64 / ny as f64, 0.0));
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            push_quad(&mut faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    build(positions, faces)
}

/// Closed axis-aligned box centred on the origin with `div[k]` grid cells
/// along axis `k` on every face.
pub fn box_mesh(size: [f64; 3], div: [usize; 3]) -> TriMesh {
    let mut ids: HashMap<[usize; 3], usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |l: [usize; 3], positions: &mut Vec<Point3>| {
        *ids.entry(l).or_insert_with(|| {
            let c = |k: usize| size[k] * (l[k] as f64 / div[k] as f64 - 0.5);
            positions.push(Point3::new(c(0), c(1), c(2)));
            positions.len() - 1
        })
    };
    for axis in 0..3 {
        for positive in [false, true] {
            // (u, v, axis) right-handed for the positive side, swapped for the negative.
            let (mut u, mut v) = ((axis + 1) % 3, (axis + 2) % 3);
            if !positive {
                std::mem::swap(&mut u, &mut v);
            }
            let fixed = if positive { div[axis] } else { 0 };
            let lat = |i: usize, j: usize| {
                let mut l = [0; 3];
                l[axis] = fixed;
                l[u] = i;
                l[v] = j;
                l
            };
            for j in 0..div[v] {
                for i in 0..div[u] {
                    let a = vertex(lat(i, j), &mut positions);
                    let b = vertex(lat(i + 1, j), &mut positions);
                    let c = vertex(lat(i + 1, j + 1), &mut positions);
                    let d = vertex(lat(i, j + 1), &mut positions);
                    push_quad(&mut faces, a, b, c, d);
                }
            }
        }
    }
    build(positions, faces)
}

/// Cylinder side only, open at both ends (an annulus topologically).
pub fn open_cylinder(radius: f64, height: f64, segments: usize, rings: usize) -> TriMesh {
    let (positions, faces) = cylinder_side(radius, height, segments, rings);
    build(positions, faces)
}

fn cylinder_side(radius: f64, height: f64, n: usize, m: usize) -> (Vec<Point3>, Vec<[usize; 3]>) {
    let mut positions = Vec::with_capacity(n * (m + 1));
    for j in 0..=m {
        let z = height * j as f64 / m as f64;
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            positions.push(Point3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    let id = |i: usize, j: usize| j * n + i % n;
    let mut faces = Vec::with_capacity(2 * n * m);
    for j in 0..m {
        for i in 0..n {
            push_quad(&mut faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    (positions, faces)
}

/// Fills the disk bounded by `rim` (vertex ids, counter-clockwise around
/// `+z`) with `rings` concentric rings; `up` selects the facing direction.
fn cap(
    positions: &mut Vec<Point3>,
    faces: &mut Vec<[usize; 3]>,
    rim: &[usize],
    center: Point3,
    rings: usize,
    up: bool,
) {
    let n = rim.len();
    let mut outer: Vec<usize> = rim.to_vec();
    for r in 1..rings.max(1) {
        let s = 1.0 - r as f64 / rings as f64;
        let inner: Vec<usize> = rim
            .iter()
            .map(|&v| {
                let p = positions[v];
                positions.push(Point3::new(center.x + s * (p.x - center.x), center.y + s * (p.y - center.y), center.z));
                positions.len() - 1
            })
            .collect();
        for i in 0..n {
            let (a, b, c, d) = (outer[i], outer[(i + 1) % n], inner[(i + 1) % n], inner[i]);
            if up {
                push_quad(faces, a, b, c, d);
            } else {
                push_quad(faces, a, d, c, b);
            }
        }
        outer = inner;
    }
    positions.push(center);
    let c = positions.len() - 1;
    for i in 0..n {
        let (a, b) = (outer[i], outer[(i + 1) % n]);
        faces.push(if up { [a, b, c] } else { [b, a, c] });
    }
}

/// Closed cylinder standing on `z = 0`, axis `+z`.
pub fn capped_cylinder(radius: f64, height: f64, segments: usize, rings: usize, cap_rings: usize) -> TriMesh {
    let (mut positions, mut faces) = cylinder_side(radius, height, segments, rings);
    let bottom: Vec<usize> = (0..segments).collect();
    let top: Vec<usize> = (0..segments).map(|i| rings * segments + i).collect();
    cap(&mut positions, &mut faces, &top, Point3::new(0.0, 0.0, height), cap_rings, true);
    cap(&mut positions, &mut faces, &bottom, Point3::origin(), cap_rings, false);
    build(positions, faces)
}

/// Cone with base circle on `z = 0` and apex at `(0, 0, height)`. The base
/// is capped when `closed`.
pub fn cone(radius: f64, height: f64, segments: usize, rings: usize, cap_rings: usize, closed: bool) -> TriMesh {
    let n = segments;
    let mut positions = Vec::new();
    for j in 0..rings {
        let s = 1.0 - j as f64 / rings as f64;
        let z = height * j as f64 / rings as f64;
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            positions.push(Point3::new(radius * s * t.cos(), radius * s * t.sin(), z));
        }
    }
    positions.push(Point3::new(0.0, 0.0, height));
    let apex = positions.len() - 1;
    let id = |i: usize, j: usize| j * n + i % n;
    let mut faces = Vec::new();
    for j in 0..rings - 1 {
        for i in 0..n {
            push_quad(&mut faces, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    for i in 0..n {
        faces.push([id(i, rings - 1), id(i + 1, rings - 1), apex]);
    }
    if closed {
        let rim: Vec<usize> = (0..n).collect();
        cap(&mut positions, &mut faces, &rim, Point3::origin(), cap_rings, false);
    }
    build(positions, faces)
}

/// Subdivided icosahedron projected onto the sphere of `radius`.
pub fn icosphere(radius: f64, subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<Point3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point3::from(nalgebra::Vector3::new(x, y, z).normalize()))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, positions: &mut Vec<Point3>| {
            *mid.entry(super::edge_key(a, b)).or_insert_with(|| {
                let m = (positions[a].coords + positions[b].coords).normalize();
                positions.push(Point3::from(m));
                positions.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut positions);
            let bc = midpoint(b, c, &mut positions);
            let ca = midpoint(c, a, &mut positions);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    for p in &mut positions {
        *p = Point3::from(p.coords * radius);
    }
    build(positions, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::check_watertight;

    fn closed_with_positive_volume(m: &TriMesh) {
        let r = check_watertight(m);
        assert!(r.is_closed, "{r:?}");
        assert_eq!(r.euler_characteristic, 2);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn closed_primitives_are_outward_spheres() {
        closed_with_positive_volume(&unit_cube());
        closed_with_positive_volume(&box_mesh([30.0, 20.0, 3.0], [6, 4, 1]));
        closed_with_positive_volume(&capped_cylinder(5.0, 8.0, 24, 4, 3));
        closed_with_positive_volume(&cone(5.0, 8.0, 24, 4, 2, true));
        closed_with_positive_volume(&icosphere(2.0, 2));
    }

    #[test]
    fn volumes_match_analytic_shapes() {
        let b = box_mesh([30.0, 20.0, 3.0], [6, 4, 1]);
        assert!((b.signed_volume() - 1800.0).abs() < 1e-9);
        let n = 256;
        let c = capped_cylinder(5.0, 8.0, n, 2, 2);
        let polygon_area = 0.5 * n as f64 * 25.0 * (TAU / n as f64).sin();
        assert!((c.signed_volume() - polygon_area * 8.0).abs() < 1e-9);
    }

    #[test]
    fn open_shapes_have_expected_boundaries() {
        assert_eq!(open_cylinder(1.0, 1.0, 16, 3).boundary_loops().unwrap().len(), 2);
        assert_eq!(cone(1.0, 2.0, 16, 3, 1, false).boundary_loops().unwrap().len(), 1);
        assert_eq!(grid_plane(3, 3, 1.0, 1.0).boundary_loops().unwrap().len(), 1);
    }
}
