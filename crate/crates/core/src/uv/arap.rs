use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::chart::{signed_area, UvChart};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{check_watertight, TriMesh};
use crate::sparse::TripletBuilder;
use crate::{Point2, Vector2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArapParams {
    pub max_iterations: usize,
    /// Stop once the relative energy decrease falls below this.
    pub tolerance: f64,
    /// Floor for half-edge cotangent weights.
    pub min_weight: f64,
}

impl Default for ArapParams {
    fn default() -> Self {
        ArapParams { max_iterations: 100, tolerance: 1e-7, min_weight: 1e-8 }
    }
}

/// Convergence trace of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArapReport {
    /// Energy after the initial local step, then after every global step.
    pub energies: Vec<f64>,
    pub iterations: usize,
}

/// Local/global ARAP parameterization of a disk, scaled so UV area equals
/// surface area.
pub fn arap_parameterize(mesh: &TriMesh) -> Result<UvChart> {
    arap_with(mesh, &ArapParams::default(), Exec::default()).map(|(c, _)| c)
}

pub fn arap_with(mesh: &TriMesh, params: &ArapParams, exec: Exec) -> Result<(UvChart, ArapReport)> {
    let (uv, report) = arap_vertices(mesh, params, exec)?;
    let chart = UvChart::new(
        mesh.faces().iter().map(|f| f.map(|v| uv[v])).collect(),
        Vec::new(),
        mesh,
    )?;
    let flipped = chart.flipped_faces().len();
    if flipped > 0 {
        return Err(Error::FlippedTriangles { flipped });
    }
    Ok((chart, report))
}

/// Per-vertex UV of a disk mesh, without the flip check.
pub(crate) fn arap_vertices(mesh: &TriMesh, params: &ArapParams, exec: Exec) -> Result<(Vec<Point2>, ArapReport)> {
    mesh.require_manifold()?;
    let report = check_watertight(mesh);
    let loops = mesh.boundary_loops()?;
    if report.euler_characteristic != 1 || loops.len() != 1 {
        return Err(Error::NotADisk { euler: report.euler_characteristic, boundary_loops: loops.len() });
    }
    let frames = local_frames(mesh);
    let weights = half_edge_weights(mesh, params.min_weight);
    let mut uv = tutte(mesh, &loops[0])?;

    // Pin the first corner of face 0; the energy is translation invariant.
    let faces = mesh.faces();
    let pinned = faces[0][0];
    let n = mesh.num_vertices();
    let used = mesh.referenced_vertices();
    let mut index = vec![usize::MAX; n];
    let mut free = 0;
    for v in 0..n {
        if used[v] && v != pinned {
            index[v] = free;
            free += 1;
        }
    }
    let mut system = TripletBuilder::new(free);
    for (f, face) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (face[k], face[(k + 1) % 3]);
            let w = weights[f][k];
            match (index[a], index[b]) {
                (usize::MAX, usize::MAX) => {}
                (usize::MAX, j) | (j, usize::MAX) => system.add(j, j, w),
                (i, j) => system.add_edge(i, j, w),
            }
        }
    }
    let solver = system.factor()?;

    let mut rotations = local_step(mesh, &uv, &frames, &weights, exec);
    let mut energies = vec![energy(mesh, &uv, &frames, &weights, &rotations)];
    let mut iterations = 0;
    while iterations < params.max_iterations {
        iterations += 1;
        // Global step: Σ_half-edges w (u_a - u_b - R e_x) = 0 per vertex.
        let mut bx = vec![0.0; free];
        let mut by = vec![0.0; free];
        for (f, face) in faces.iter().enumerate() {
            let (c, s) = rotations[f];
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let w = weights[f][k];
                let e = frames[f][k] - frames[f][(k + 1) % 3];
                let r = Vector2::new(c * e.x - s * e.y, s * e.x + c * e.y) * w;
                if index[a] != usize::MAX {
                    bx[index[a]] += r.x;
                    by[index[a]] += r.y;
                    if index[b] == usize::MAX {
                        bx[index[a]] += w * uv[b].x;
                        by[index[a]] += w * uv[b].y;
                    }
                }
                if index[b] != usize::MAX {
                    bx[index[b]] -= r.x;
                    by[index[b]] -= r.y;
                    if index[a] == usize::MAX {
                        bx[index[b]] += w * uv[a].x;
                        by[index[b]] += w * uv[a].y;
                    }
                }
            }
        }
        let sol = solver.solve_columns(&[bx, by]);
        for v in 0..n {
            if index[v] != usize::MAX {
                uv[v] = Point2::new(sol[0][index[v]], sol[1][index[v]]);
            }
        }
        let e = energy(mesh, &uv, &frames, &weights, &rotations);
        let prev = *energies.last().expect("seeded");
        debug_assert!(e <= prev * (1.0 + 1e-9) + 1e-24, "ARAP energy rose from {prev} to {e}");
        energies.push(e);
        if prev <= f64::MIN_POSITIVE || (prev - e) / prev < params.tolerance {
            break;
        }
        rotations = local_step(mesh, &uv, &frames, &weights, exec);
    }

    // Area calibration.
    let uv_area: f64 = faces.iter().map(|f| signed_area(&f.map(|v| uv[v]))).sum();
    let scale = (mesh.surface_area() / uv_area).sqrt();
    if scale.is_finite() && scale > 0.0 {
        let origin = uv[pinned];
        for p in &mut uv {
            *p = origin + (*p - origin) * scale;
        }
    }
    Ok((uv, ArapReport { energies, iterations }))
}

/// Each triangle laid flat: corner 0 at the origin, corner 1 on +x.
fn local_frames(mesh: &TriMesh) -> Vec<[Vector2; 3]> {
    (0..mesh.num_faces())
        .map(|f| {
            let p = mesh.corner_positions(f);
            let e1 = p[1] - p[0];
            let e2 = p[2] - p[0];
            let l1 = e1.norm();
            let x = e1 / l1;
            let n = e1.cross(&e2);
            let y = n.cross(&e1).normalize();
            [Vector2::zeros(), Vector2::new(l1, 0.0), Vector2::new(e2.dot(&x), e2.dot(&y))]
        })
        .collect()
}

/// Half the cotangent of the angle opposite each local edge, floored.
fn half_edge_weights(mesh: &TriMesh, floor: f64) -> Vec<[f64; 3]> {
    (0..mesh.num_faces())
        .map(|f| {
            let p = mesh.corner_positions(f);
            let mut w = [0.0; 3];
            for k in 0..3 {
                let o = (k + 2) % 3;
                let a = p[k] - p[o];
                let b = p[(k + 1) % 3] - p[o];
                let cross = a.cross(&b).norm();
                let cot = if cross > 0.0 { a.dot(&b) / cross } else { 0.0 };
                w[k] = (0.5 * cot).max(floor);
            }
            w
        })
        .collect()
}

/// Best rotation per face as `(cos, sin)`.
fn local_step(
    mesh: &TriMesh,
    uv: &[Point2],
    frames: &[[Vector2; 3]],
    weights: &[[f64; 3]],
    exec: Exec,
) -> Vec<(f64, f64)> {
    let faces = mesh.faces();
    exec.map_range(faces.len(), |f| {
        let (mut dot, mut cross) = (0.0, 0.0);
        for k in 0..3 {
            let j = (k + 1) % 3;
            let eu = uv[faces[f][k]] - uv[faces[f][j]];
            let ex = frames[f][k] - frames[f][j];
            dot += weights[f][k] * eu.dot(&ex);
            cross += weights[f][k] * ex.perp(&eu);
        }
        let t = cross.atan2(dot);
        (t.cos(), t.sin())
    })
}

fn energy(mesh: &TriMesh, uv: &[Point2], frames: &[[Vector2; 3]], weights: &[[f64; 3]], rot: &[(f64, f64)]) -> f64 {
    let mut e = 0.0;
    for (f, face) in mesh.faces().iter().enumerate() {
        let (c, s) = rot[f];
        for k in 0..3 {
            let j = (k + 1) % 3;
            let eu = uv[face[k]] - uv[face[j]];
            let ex = frames[f][k] - frames[f][j];
            let r = Vector2::new(c * ex.x - s * ex.y, s * ex.x + c * ex.y);
            e += weights[f][k] * (eu - r).norm_squared();
        }
    }
    e
}

/// Uniform-weight Tutte embedding with the boundary on a circle of the
/// surface's area, spaced by arclength.
pub(crate) fn tutte(mesh: &TriMesh, boundary: &[usize]) -> Result<Vec<Point2>> {
    let n = mesh.num_vertices();
    let pos = mesh.positions();
    let mut uv = vec![Point2::origin(); n];
    let mut on_boundary = vec![false; n];
    let lens: Vec<f64> = (0..boundary.len())
        .map(|i| (pos[boundary[(i + 1) % boundary.len()]] - pos[boundary[i]]).norm())
        .collect();
    let total: f64 = lens.iter().sum();
    let radius = (mesh.surface_area() / std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for (i, &v) in boundary.iter().enumerate() {
        let t = TAU * acc / total;
        uv[v] = Point2::new(radius * t.cos(), radius * t.sin());
        on_boundary[v] = true;
        acc += lens[i];
    }
    let used = mesh.referenced_vertices();
    let mut index = vec![usize::MAX; n];
    let mut free = 0;
    for v in 0..n {
        if used[v] && !on_boundary[v] {
            index[v] = free;
            free += 1;
        }
    }
    if free == 0 {
        return Ok(uv);
    }
    let mut a = TripletBuilder::new(free);
    let mut bx = vec![0.0; free];
    let mut by = vec![0.0; free];
    for e in mesh.edges().iter() {
        let [i, j] = e.v;
        match (index[i], index[j]) {
            (usize::MAX, usize::MAX) => {}
            (usize::MAX, q) => {
                a.add(q, q, 1.0);
                bx[q] += uv[i].x;
                by[q] += uv[i].y;
            }
            (q, usize::MAX) => {
                a.add(q, q, 1.0);
                bx[q] += uv[j].x;
                by[q] += uv[j].y;
            }
            (p, q) => a.add_edge(p, q, 1.0),
        }
    }
    let sol = a.factor()?.solve_columns(&[bx, by]);
    for v in 0..n {
        if index[v] != usize::MAX {
            uv[v] = Point2::new(sol[0][index[v]], sol[1][index[v]]);
        }
    }
    Ok(uv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn flat_grid_reproduces_itself() {
        let g = primitives::grid_plane(8, 5, 16.0, 10.0);
        let (chart, report) = arap_with(&g, &ArapParams::default(), Exec::Sequential).unwrap();
        assert!(chart.max_distortion() < 1e-6, "{}", chart.max_distortion());
        // Edge lengths preserved means a rigid motion of the input.
        for (f, t) in chart.uv.iter().enumerate() {
            let p = g.corner_positions(f);
            for k in 0..3 {
                let l2 = (t[(k + 1) % 3] - t[k]).norm();
                let l3 = (p[(k + 1) % 3] - p[k]).norm();
                assert!((l2 - l3).abs() < 1e-6);
            }
        }
        for w in report.energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-24);
        }
    }

    #[test]
    fn closed_mesh_is_not_a_disk() {
        assert!(matches!(arap_parameterize(&primitives::unit_cube()), Err(Error::NotADisk { euler: 2, .. })));
    }

    #[test]
    fn tutte_is_flip_free() {
        let s = primitives::cone(10.0, 20.0, 24, 5, 1, false);
        let loops = s.boundary_loops().unwrap();
        let uv = tutte(&s, &loops[0]).unwrap();
        for f in s.faces() {
            assert!(signed_area(&f.map(|v| uv[v])) > 0.0);
        }
    }
}
