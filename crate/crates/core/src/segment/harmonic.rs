use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{cotan_edge_weights, TriMesh};
use crate::sparse::TripletBuilder;

/// Smallest conductance given to an edge. Keeps every connected component
/// positive definite while staying non-negative, so the maximum principle
/// holds.
pub const MIN_WEIGHT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicField {
    pub phi: Vec<f64>,
    pub constrained_one: Vec<usize>,
    pub constrained_zero: Vec<usize>,
}

/// Clamped cotangent weight per edge id.
pub fn laplacian_weights(mesh: &TriMesh) -> Vec<f64> {
    cotan_edge_weights(mesh).into_iter().map(|w| w.max(MIN_WEIGHT)).collect()
}

/// Solves `L phi = 0` with `phi = 1` on `v_one` and `phi = 0` on `v_zero`.
///
/// Constraints are eliminated exactly, so constrained values are reproduced
/// bit for bit. Unreferenced vertices get 0.
pub fn harmonic_field(mesh: &TriMesh, v_one: &[usize], v_zero: &[usize]) -> Result<HarmonicField> {
    harmonic_field_weighted(mesh, &laplacian_weights(mesh), v_one, v_zero)
}

pub(crate) fn harmonic_field_weighted(
    mesh: &TriMesh,
    weights: &[f64],
    v_one: &[usize],
    v_zero: &[usize],
) -> Result<HarmonicField> {
    if v_one.is_empty() || v_zero.is_empty() {
        return Err(Error::Harmonic("both constraint sets must be non-empty".into()));
    }
    let n = mesh.num_vertices();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &v in v_one {
        if v >= n {
            return Err(Error::Harmonic(format!("vertex {v} out of range")));
        }
        fixed[v] = Some(1.0);
    }
    for &v in v_zero {
        if v >= n {
            return Err(Error::Harmonic(format!("vertex {v} out of range")));
        }
        if fixed[v].is_some() {
            return Err(Error::Harmonic(format!("vertex {v} is constrained to both 0 and 1")));
        }
        fixed[v] = Some(0.0);
    }
    let used = mesh.referenced_vertices();
    check_components(mesh, &fixed)?;

    let mut index = vec![usize::MAX; n];
    let mut free = 0;
    for v in 0..n {
        if used[v] && fixed[v].is_none() {
            index[v] = free;
            free += 1;
        }
    }
    let mut phi: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    if free > 0 {
        let mut a = TripletBuilder::new(free);
        let mut b = vec![0.0; free];
        for (e, &w) in mesh.edges().iter().zip(weights) {
            let [i, j] = e.v;
            match (fixed[i], fixed[j]) {
                (None, None) => a.add_edge(index[i], index[j], w),
                (None, Some(x)) => {
                    a.add(index[i], index[i], w);
                    b[index[i]] += w * x;
                }
                (Some(x), None) => {
                    a.add(index[j], index[j], w);
                    b[index[j]] += w * x;
                }
                (Some(_), Some(_)) => {}
            }
        }
        let x = a.factor()?.solve(&b);
        for v in 0..n {
            if index[v] != usize::MAX {
                phi[v] = x[index[v]].clamp(0.0, 1.0);
            }
        }
    }
    Ok(HarmonicField { phi, constrained_one: v_one.to_vec(), constrained_zero: v_zero.to_vec() })
}

fn check_components(mesh: &TriMesh, fixed: &[Option<f64>]) -> Result<()> {
    let (comp, count) = mesh.face_components();
    let mut has = vec![false; count];
    for (f, face) in mesh.faces().iter().enumerate() {
        if face.iter().any(|&v| fixed[v].is_some()) {
            has[comp[f]] = true;
        }
    }
    if let Some(c) = has.iter().position(|h| !h) {
        return Err(Error::Harmonic(format!("connected component {c} has no constrained vertex")));
    }
    Ok(())
}

/// Per-face gradient magnitude of a piecewise-linear field.
pub fn gradient_magnitudes(mesh: &TriMesh, phi: &[f64]) -> Vec<f64> {
    (0..mesh.num_faces())
        .map(|f| {
            let [a, b, c] = mesh.faces()[f];
            let p = mesh.corner_positions(f);
            let n = mesh.face_cross(f);
            let area2 = n.norm();
            if area2 == 0.0 {
                return 0.0;
            }
            let n = n / area2;
            // grad = Σ phi_k (n × e_k) / 2A, e_k the edge opposite corner k.
            let g = n.cross(&(p[2] - p[1])) * phi[a] + n.cross(&(p[0] - p[2])) * phi[b] + n.cross(&(p[1] - p[0])) * phi[c];
            g.norm() / area2
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn strip() -> TriMesh {
        primitives::grid_plane(20, 3, 10.0, 1.5)
    }

    fn sides(m: &TriMesh, x: f64) -> Vec<usize> {
        (0..m.num_vertices()).filter(|&v| (m.positions()[v].x - x).abs() < 1e-12).collect()
    }

    #[test]
    fn strip_field_is_linear() {
        let m = strip();
        let h = harmonic_field(&m, &sides(&m, 0.0), &sides(&m, 10.0)).unwrap();
        for (p, v) in m.positions().iter().zip(&h.phi) {
            assert!((v - (1.0 - p.x / 10.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_of_linear_field() {
        let m = strip();
        let phi: Vec<f64> = m.positions().iter().map(|p| 0.3 * p.x - 0.4 * p.y).collect();
        for g in gradient_magnitudes(&m, &phi) {
            assert!((g - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_constraints_rejected() {
        let m = strip();
        assert!(harmonic_field(&m, &[0, 1], &[1]).is_err());
        assert!(harmonic_field(&m, &[], &[1]).is_err());
    }

    #[test]
    fn unconstrained_component_rejected() {
        let a = primitives::grid_plane(2, 2, 1.0, 1.0);
        let n = a.num_vertices();
        let mut positions = a.positions().to_vec();
        positions.extend(a.positions().iter().map(|p| p + crate::Vector3::new(5.0, 0.0, 0.0)));
        let mut faces = a.faces().to_vec();
        faces.extend(a.faces().iter().map(|f| f.map(|v| v + n)));
        let m = TriMesh::new(positions, faces).unwrap();
        assert!(matches!(harmonic_field(&m, &[0], &[1]), Err(Error::Harmonic(_))));
    }
}
