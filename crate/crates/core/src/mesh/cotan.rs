use super::TriMesh;

/// Cotangent weight `(cot a + cot b) / 2` per edge id, where `a` and `b` are
/// the angles opposite the edge. Boundary edges get the single term.
pub fn cotan_edge_weights(mesh: &TriMesh) -> Vec<f64> {
    let edges = mesh.edges();
    let mut w = vec![0.0; edges.len()];
    for f in 0..mesh.num_faces() {
        let p = mesh.corner_positions(f);
        for k in 0..3 {
            // Corner opposite local edge k is k + 2.
            let o = (k + 2) % 3;
            let a = p[k] - p[o];
            let b = p[(k + 1) % 3] - p[o];
            let cross = a.cross(&b).norm();
            let cot = if cross > 0.0 { a.dot(&b) / cross } else { 0.0 };
            w[edges.face_edge(f, k)] += 0.5 * cot;
        }
    }
    w
}
