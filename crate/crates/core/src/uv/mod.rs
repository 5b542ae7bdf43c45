//! Flattening a mesh into a single UV chart.

mod arap;
mod chart;
mod seams;

pub use arap::{arap_parameterize, arap_with, ArapParams, ArapReport};
pub use chart::{locate_in_chart, uv_to_3d, UvChart, BARY_TOLERANCE};
pub use seams::{cut_seams, cut_seams_with, CutMesh, SeamParams};
pub(crate) use chart::{barycentric, interpolate, signed_area};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::TriMesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamOptions {
    pub seams: SeamParams,
    pub arap: ArapParams,
    /// Extra seam terminals added, one per retry, while the chart has flips.
    pub max_refinements: usize,
}

impl Default for ParamOptions {
    fn default() -> Self {
        ParamOptions { seams: SeamParams::default(), arap: ArapParams::default(), max_refinements: 8 }
    }
}

/// Cut plus chart for a mesh, with the chart indexed by the mesh's faces.
#[derive(Debug, Clone)]
pub struct Parameterization {
    pub cut: CutMesh,
    pub chart: UvChart,
    pub report: ArapReport,
}

/// Cuts and flattens `mesh`. When the flattened chart folds over, the
/// flipped region is relieved by routing one more seam to its vertex
/// farthest from the existing cut, and the solve is repeated.
pub fn parametrize(mesh: &TriMesh, opts: &ParamOptions, exec: Exec) -> Result<Parameterization> {
    let mut extra: Vec<usize> = Vec::new();
    let mut last_err = None;
    for _ in 0..=opts.max_refinements {
        let cut = cut_seams_with(mesh, &opts.seams, &extra)?;
        match arap_with(&cut.mesh, &opts.arap, exec) {
            Ok((mut chart, report)) => {
                chart.seam_edges = cut.seam_edges.clone();
                return Ok(Parameterization { cut, chart, report });
            }
            Err(Error::FlippedTriangles { flipped }) => {
                last_err = Some(Error::FlippedTriangles { flipped });
                let Some(t) = relief_terminal(mesh, &cut, &opts.arap, exec)? else { break };
                if extra.contains(&t) {
                    break;
                }
                extra.push(t);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::FlippedTriangles { flipped: 0 }))
}

/// Vertex of a flipped face that lies farthest (in edge hops) from the cut.
fn relief_terminal(mesh: &TriMesh, cut: &CutMesh, arap: &ArapParams, exec: Exec) -> Result<Option<usize>> {
    let (uv, _) = arap::arap_vertices(&cut.mesh, arap, exec)?;
    let flipped: Vec<usize> = cut
        .mesh
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, f)| signed_area(&f.map(|v| uv[v])) <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if flipped.is_empty() {
        return Ok(None);
    }
    // Hop distance from seams and the original boundary.
    let neighbors = mesh.vertex_neighbors();
    let mut dist = vec![usize::MAX; mesh.num_vertices()];
    let mut queue = std::collections::VecDeque::new();
    let on_boundary = mesh.boundary_vertices();
    for v in cut.seam_vertices().into_iter().chain((0..mesh.num_vertices()).filter(|&v| on_boundary[v])) {
        if dist[v] == usize::MAX {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &neighbors[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let best = flipped
        .iter()
        .flat_map(|&f| mesh.faces()[f])
        .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)));
    Ok(best)
}
