use serde::{Deserialize, Serialize};

use super::distortion::{angle_deficits, distortion_with, rings, DistortionField};
use super::harmonic::{gradient_magnitudes, harmonic_field_weighted, laplacian_weights, HarmonicField, MIN_WEIGHT};
use super::isolines::{extract_isolines, Isoline};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{vertex_normals, FaceBvh, TriMesh};
use crate::Point3;

/// Tunables for region inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    /// Ring radius of the distortion field.
    pub radius: usize,
    /// Number of boundary candidates.
    pub candidates: usize,
    /// Distance falloff as a fraction of the bounding-box diagonal.
    pub lambda_fraction: f64,
    /// Minimum distortion for a vertex to be a candidate.
    pub threshold: f64,
    /// Candidates are at least this many rings apart.
    pub exclusion_rings: usize,
    /// Isoline levels tried, in order.
    pub levels: Vec<f64>,
    /// Edge conductance is scaled by `exp(-(1 - n_i . n_j) / crease_sigma)`.
    pub crease_sigma: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            radius: 3,
            candidates: 8,
            lambda_fraction: 0.1,
            threshold: 0.02,
            exclusion_rings: 2,
            levels: (1..=9).map(|k| k as f64 / 10.0).collect(),
            crease_sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRegion {
    /// Sorted face indices.
    pub faces: Vec<usize>,
    /// Cut curve bounding the region; empty for the whole-component fallback.
    pub boundary_loop: Vec<Point3>,
    /// Mean field gradient magnitude along the cut.
    pub score: f64,
}

/// Greedy top-`k` vertices by `D(i) / (1 + |cursor - v_i| / lambda)`, skipping
/// vertices below `threshold` and those closer than `exclusion_rings` rings
/// to an earlier pick. Ties go to the lower vertex index.
pub fn boundary_candidates(
    field: &DistortionField,
    mesh: &TriMesh,
    cursor: &Point3,
    k: usize,
    lambda: f64,
    threshold: f64,
    exclusion_rings: usize,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("candidate count must be at least 1".into()));
    }
    let used = mesh.referenced_vertices();
    let n_used = used.iter().filter(|&&u| u).count();
    if n_used < k {
        return Err(Error::InvalidArgument(format!("mesh has {n_used} vertices, fewer than {k} candidates")));
    }
    let mut order: Vec<(f64, usize)> = (0..mesh.num_vertices())
        .filter(|&v| used[v] && field.d[v] >= threshold)
        .map(|v| (field.d[v] / (1.0 + (mesh.positions()[v] - cursor).norm() / lambda), v))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let neighbors = mesh.vertex_neighbors();
    let mut blocked = vec![false; mesh.num_vertices()];
    let mut seen = vec![0u32; mesh.num_vertices()];
    let mut out = Vec::with_capacity(k);
    for (_, v) in order {
        if out.len() == k {
            break;
        }
        if blocked[v] {
            continue;
        }
        out.push(v);
        for ring in rings(&neighbors, v, exclusion_rings.saturating_sub(1), &mut seen, out.len() as u32) {
            for u in ring {
                blocked[u] = true;
            }
        }
    }
    Ok(out)
}

/// Region under `cursor`: distortion, boundary candidates, a harmonic field
/// pulled apart across each candidate, then the best-scoring isoline.
pub fn infer_region(mesh: &TriMesh, cursor: &Point3) -> Result<SegmentRegion> {
    infer_region_with(mesh, cursor, &SegmentParams::default(), Exec::default())
}

pub fn infer_region_with(mesh: &TriMesh, cursor: &Point3, params: &SegmentParams, exec: Exec) -> Result<SegmentRegion> {
    RegionIndex::new(mesh, params, exec)?.infer(mesh, cursor)
}

/// Cursor-independent state of region inference, built once per mesh so
/// repeated lookups (hovering) only pay for the field solve.
#[derive(Debug)]
pub struct RegionIndex {
    params: SegmentParams,
    exec: Exec,
    faces: usize,
    bvh: FaceBvh,
    comp: Vec<usize>,
    field: DistortionField,
    deficit: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    normals: Vec<crate::Vector3>,
    weights: Vec<f64>,
}

impl RegionIndex {
    pub fn new(mesh: &TriMesh, params: &SegmentParams, exec: Exec) -> Result<Self> {
        let normals = vertex_normals(mesh)?;
        // Conductance drops across creases so the field changes there rather
        // than spreading evenly from the point constraints.
        let weights: Vec<f64> = laplacian_weights(mesh)
            .into_iter()
            .zip(mesh.edges().iter())
            .map(|(w, e)| (w * (-(1.0 - normals[e.v[0]].dot(&normals[e.v[1]])) / params.crease_sigma).exp()).max(MIN_WEIGHT))
            .collect();
        Ok(RegionIndex {
            params: params.clone(),
            exec,
            faces: mesh.num_faces(),
            bvh: FaceBvh::new(mesh),
            comp: mesh.face_components().0,
            field: distortion_with(mesh, params.radius, exec),
            deficit: angle_deficits(mesh),
            neighbors: mesh.vertex_neighbors(),
            normals,
            weights,
        })
    }

    /// Region under `cursor`. `mesh` must be the one the index was built from.
    pub fn infer(&self, mesh: &TriMesh, cursor: &Point3) -> Result<SegmentRegion> {
        if mesh.num_faces() != self.faces {
            return Err(Error::InvalidArgument("region index belongs to another mesh".into()));
        }
        let params = &self.params;
        let seed = self.bvh.nearest(cursor).ok_or(Error::EmptyMesh)?.face;
        let fallback = || SegmentRegion {
            faces: (0..mesh.num_faces()).filter(|&f| self.comp[f] == self.comp[seed]).collect(),
            boundary_loop: Vec::new(),
            score: 0.0,
        };

        let lambda = params.lambda_fraction * mesh.bbox_diagonal();
        let k = params.candidates.min(mesh.num_vertices());
        let candidates = boundary_candidates(&self.field, mesh, cursor, k, lambda, params.threshold, params.exclusion_rings)?;
        let candidates = snap_to_crease(&self.neighbors, &self.deficit, &candidates, params.radius);
        let Some(harmonic) = self.candidate_field(mesh, &candidates, seed)? else {
            return Ok(fallback());
        };
        let Some((line, score)) = best_isoline(mesh, &harmonic, &params.levels, self.exec) else {
            return Ok(fallback());
        };
        // Every loop at the chosen level bounds the region, so a part capped
        // at both ends is cut at both.
        let level_lines = extract_isolines(mesh, &harmonic.phi, line.level);
        let cut: Vec<usize> = level_lines.iter().flat_map(|l| l.edges.iter().copied()).collect();
        let band: Vec<usize> = level_lines.iter().flat_map(|l| l.faces.iter().copied()).collect();
        let faces = snap_band(mesh, seed, &flood_region(mesh, seed, &cut), &band);
        Ok(SegmentRegion { faces, boundary_loop: line.points, score })
    }

    /// One vertex on each side of every candidate: the neighbour whose normal
    /// agrees most with the surface under the cursor goes to the 1 set, the one
    /// that agrees least to the 0 set.
    fn candidate_field(&self, mesh: &TriMesh, candidates: &[usize], seed: usize) -> Result<Option<HarmonicField>> {
        if candidates.is_empty() {
            return Ok(None);
        }
        let (normals, neighbors) = (&self.normals, &self.neighbors);
        let up = mesh.face_cross(seed).normalize();
        let mut side = vec![0u8; mesh.num_vertices()];
        let (mut v_one, mut v_zero) = (Vec::new(), Vec::new());
        for &c in candidates {
            let by_alignment = |v: &usize| normals[*v].dot(&up);
            let hi = neighbors[c].iter().copied().max_by(|a, b| by_alignment(a).total_cmp(&by_alignment(b)).then(b.cmp(a)));
            let lo = neighbors[c].iter().copied().min_by(|a, b| by_alignment(a).total_cmp(&by_alignment(b)).then(a.cmp(b)));
            let (Some(hi), Some(lo)) = (hi, lo) else { continue };
            if hi == lo || side[hi] == 2 || side[lo] == 1 {
                continue;
            }
            if side[hi] == 0 {
                side[hi] = 1;
                v_one.push(hi);
            }
            if side[lo] == 0 {
                side[lo] = 2;
                v_zero.push(lo);
            }
        }
        if v_one.is_empty() || v_zero.is_empty() {
            return Ok(None);
        }
        // The cursor's own face anchors its side of the field.
        for v in mesh.faces()[seed] {
            if side[v] == 0 {
                side[v] = 1;
                v_one.push(v);
            }
        }
        match harmonic_field_weighted(mesh, &self.weights, &v_one, &v_zero) {
            Ok(h) => Ok(Some(h)),
            // Several components and only one constrained: treat as flat.
            Err(Error::Harmonic(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// The regional field plateaus around a crease, so distance weighting alone
/// drifts candidates off it toward the cursor. Each candidate moves to the
/// vertex of largest own deficit within its ring radius, nearest ring first.
fn snap_to_crease(neighbors: &[Vec<usize>], deficit: &[f64], candidates: &[usize], radius: usize) -> Vec<usize> {
    let mut seen = vec![0u32; neighbors.len()];
    let mut out: Vec<usize> = Vec::with_capacity(candidates.len());
    for (i, &c) in candidates.iter().enumerate() {
        let mut best = c;
        for ring in rings(neighbors, c, radius, &mut seen, i as u32 + 1) {
            let mut ring = ring;
            ring.sort_unstable();
            for v in ring {
                if deficit[v] > deficit[best] {
                    best = v;
                }
            }
        }
        if !out.contains(&best) {
            out.push(best);
        }
    }
    out
}

/// Isoline with the largest length-weighted mean gradient magnitude.
fn best_isoline(mesh: &TriMesh, h: &HarmonicField, levels: &[f64], exec: Exec) -> Option<(Isoline, f64)> {
    let grad = gradient_magnitudes(mesh, &h.phi);
    let per_level = exec.map(levels, |&level| extract_isolines(mesh, &h.phi, level));
    let mut best: Option<(Isoline, f64)> = None;
    for line in per_level.into_iter().flatten() {
        let mut len = 0.0;
        let mut acc = 0.0;
        for (i, &f) in line.faces.iter().enumerate() {
            let l = (line.points[i + 1] - line.points[i]).norm();
            len += l;
            acc += l * grad[f];
        }
        if len <= 0.0 {
            continue;
        }
        let score = acc / len;
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((line, score));
        }
    }
    best
}

/// Moves each face the cut passes through to the side whose faces it
/// faces most alike, so a cut running beside a crease lands on it. The
/// result is the edge-connected part holding `seed`.
fn snap_band(mesh: &TriMesh, seed: usize, region: &[usize], band: &[usize]) -> Vec<usize> {
    let n = mesh.num_faces();
    let mut inside = vec![false; n];
    for &f in region {
        inside[f] = true;
    }
    let mut in_band = vec![false; n];
    for &f in band {
        in_band[f] = true;
    }
    let edges = mesh.edges();
    let neighbors = |f: usize| (0..3).filter_map(move |k| edges.edge(edges.face_edge(f, k)).other_face(f));
    let unit = |f: usize| mesh.face_cross(f).try_normalize(0.0).unwrap_or_else(crate::Vector3::zeros);
    let mut flip = Vec::new();
    for &f in band {
        let (mut same, mut other) = (crate::Vector3::zeros(), crate::Vector3::zeros());
        // Off-band faces within two steps through the band.
        let mut near: Vec<usize> = neighbors(f).collect();
        near.extend(neighbors(f).filter(|&g| in_band[g]).flat_map(neighbors));
        near.sort_unstable();
        near.dedup();
        for g in near.into_iter().filter(|&g| !in_band[g]) {
            if inside[g] {
                same += unit(g);
            } else {
                other += unit(g);
            }
        }
        let nf = unit(f);
        let (a, b) = (
            same.try_normalize(0.0).map_or(f64::NEG_INFINITY, |v| v.dot(&nf)),
            other.try_normalize(0.0).map_or(f64::NEG_INFINITY, |v| v.dot(&nf)),
        );
        if a != b {
            flip.push((f, a > b));
        }
    }
    for (f, to_inside) in flip {
        inside[f] = to_inside;
    }
    inside[seed] = true;
    connected_part(mesh, seed, &inside)
}

fn connected_part(mesh: &TriMesh, seed: usize, inside: &[bool]) -> Vec<usize> {
    let edges = mesh.edges();
    let mut seen = vec![false; mesh.num_faces()];
    seen[seed] = true;
    let mut stack = vec![seed];
    while let Some(f) = stack.pop() {
        for k in 0..3 {
            for &(g, _) in &edges.edge(edges.face_edge(f, k)).faces {
                if inside[g] && !seen[g] {
                    seen[g] = true;
                    stack.push(g);
                }
            }
        }
    }
    (0..mesh.num_faces()).filter(|&f| seen[f]).collect()
}

/// Faces reachable from `seed` without crossing any edge in `cut`.
pub(crate) fn flood_region(mesh: &TriMesh, seed: usize, cut: &[usize]) -> Vec<usize> {
    let edges = mesh.edges();
    let mut blocked = vec![false; edges.len()];
    for &e in cut {
        blocked[e] = true;
    }
    let mut inside = vec![false; mesh.num_faces()];
    inside[seed] = true;
    let mut stack = vec![seed];
    while let Some(f) = stack.pop() {
        for k in 0..3 {
            let e = edges.face_edge(f, k);
            if blocked[e] {
                continue;
            }
            for &(g, _) in &edges.edge(e).faces {
                if !inside[g] {
                    inside[g] = true;
                    stack.push(g);
                }
            }
        }
    }
    (0..mesh.num_faces()).filter(|&f| inside[f]).collect()
}
