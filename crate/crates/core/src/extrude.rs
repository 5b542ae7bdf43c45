//! Turning imprinted texture patches into relief: raised bumps, embossed
//! recesses, or holes cut through a shell.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{check_watertight, vertex_normals, FaceBvh, FaceTag, TriMesh};
use crate::synth::ImprintedMesh;
use crate::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrudeMode {
    Raised,
    Embossed,
    Cutout,
}

impl std::str::FromStr for ExtrudeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raised" => Ok(ExtrudeMode::Raised),
            "embossed" => Ok(ExtrudeMode::Embossed),
            "cutout" => Ok(ExtrudeMode::Cutout),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}, expected raised, embossed or cutout"))),
        }
    }
}

impl std::fmt::Display for ExtrudeMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExtrudeMode::Raised => "raised",
            ExtrudeMode::Embossed => "embossed",
            ExtrudeMode::Cutout => "cutout",
        })
    }
}

/// Two triangles per loop edge joining `base[i]` to `offset[i]`. With the
/// texture interior on the left of the base loop the walls face away from it.
pub fn wall_faces(base: &[usize], offset: &[usize]) -> Result<Vec<[usize; 3]>> {
    if base.len() != offset.len() {
        return Err(Error::InvalidArgument(format!(
            "wall loops differ in length: {} and {}",
            base.len(),
            offset.len()
        )));
    }
    let n = base.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let j = (i + 1) % n;
        out.push([base[i], base[j], offset[j]]);
        out.push([base[i], offset[j], offset[i]]);
    }
    Ok(out)
}

/// Wall strip between two corresponding 3D loops, as a mesh whose vertices
/// are the base loop followed by the offset loop.
pub fn wall_triangulation(base: &[Point3], offset: &[Point3]) -> Result<TriMesh> {
    let n = base.len();
    let ids: Vec<usize> = (0..n).collect();
    let off: Vec<usize> = (n..n + offset.len()).collect();
    let faces = wall_faces(&ids, &off)?;
    TriMesh::new(base.iter().chain(offset).copied().collect(), faces)
}

/// Applies `mode` to the texture-interior faces of `im`.
pub fn extrude_texture(im: &ImprintedMesh, mode: ExtrudeMode, depth: f64, exec: Exec) -> Result<TriMesh> {
    let mesh = &im.mesh;
    match mode {
        ExtrudeMode::Cutout => cutout(mesh),
        ExtrudeMode::Raised | ExtrudeMode::Embossed => {
            if !(depth > 0.0 && depth.is_finite()) {
                return Err(Error::InvalidArgument(format!("depth must be positive, got {depth}")));
            }
            let signed = if mode == ExtrudeMode::Raised { depth } else { -depth };
            offset_patches(im, signed, mode == ExtrudeMode::Embossed, exec)
        }
    }
}

/// Embossed relief whose floor sits `wall` below the opposite surface,
/// measured as the smallest thickness under the patch.
pub fn hollow(im: &ImprintedMesh, wall: f64, exec: Exec) -> Result<TriMesh> {
    let thickness = patch_thickness(im)?;
    let depth = thickness - wall;
    if depth <= 0.0 {
        return Err(Error::InvalidArgument(format!("wall {wall} is not thinner than the part ({thickness})")));
    }
    extrude_texture(im, ExtrudeMode::Embossed, depth, exec)
}

fn interior_vertices(mesh: &TriMesh) -> BTreeSet<usize> {
    (0..mesh.num_faces())
        .filter(|&f| mesh.tag(f) == FaceTag::TextureInterior)
        .flat_map(|f| mesh.faces()[f])
        .collect()
}

/// Smallest distance from a texture vertex inward to the rest of the part.
fn patch_thickness(im: &ImprintedMesh) -> Result<f64> {
    let mesh = &im.mesh;
    let normals = vertex_normals(mesh)?;
    let bvh = FaceBvh::over(mesh, (0..mesh.num_faces()).filter(|&f| mesh.tag(f) != FaceTag::TextureInterior));
    let around = mesh.vertex_faces();
    let mut best = f64::INFINITY;
    for v in interior_vertices(mesh) {
        let hit = bvh.ray(&mesh.positions()[v], &(-normals[v]), f64::INFINITY, |f| around[v].contains(&f));
        if let Some(h) = hit {
            best = best.min(h.t);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InvalidArgument("no opposite surface under the texture".into()))
    }
}

fn cutout(mesh: &TriMesh) -> Result<TriMesh> {
    if check_watertight(mesh).is_closed {
        return Err(Error::CutoutOnClosedSolid);
    }
    let kept = mesh.filter_faces(|f| mesh.tag(f) != FaceTag::TextureInterior);
    Ok(kept.compact().0)
}

fn offset_patches(im: &ImprintedMesh, depth: f64, check_inward: bool, exec: Exec) -> Result<TriMesh> {
    let mesh = &im.mesh;
    let normals = vertex_normals(mesh)?;
    let interior = interior_vertices(mesh);
    if interior.is_empty() {
        return Ok(mesh.clone());
    }
    if check_inward {
        guard_inward(mesh, &interior, &normals, depth.abs(), exec)?;
    }

    let mut positions = mesh.positions().to_vec();
    // Loop vertices split into a base copy kept by the surround and an
    // offset copy taken by the patch.
    let mut lifted: BTreeMap<usize, usize> = BTreeMap::new();
    for lp in &im.loops {
        for &v in &lp.vertices {
            lifted.entry(v).or_insert_with(|| {
                positions.push(mesh.positions()[v] + normals[v] * depth);
                positions.len() - 1
            });
        }
    }
    for &v in &interior {
        if !lifted.contains_key(&v) {
            positions[v] = mesh.positions()[v] + normals[v] * depth;
        }
    }
    let mut faces = Vec::with_capacity(mesh.num_faces());
    let mut tags = Vec::with_capacity(mesh.num_faces());
    for (f, face) in mesh.faces().iter().enumerate() {
        let tag = mesh.tag(f);
        if tag == FaceTag::TextureInterior {
            faces.push(face.map(|v| lifted.get(&v).copied().unwrap_or(v)));
        } else {
            faces.push(*face);
        }
        tags.push(tag);
    }
    let walls = exec.map(&im.loops, |lp| {
        let off: Vec<usize> = lp.vertices.iter().map(|v| lifted[v]).collect();
        wall_faces(&lp.vertices, &off)
    });
    for w in walls {
        for f in w? {
            faces.push(f);
            tags.push(FaceTag::TextureWall);
        }
    }
    TriMesh::new(positions, faces)?.with_tags(tags)
}

/// Rejects recesses whose floor would poke through the untouched surface.
fn guard_inward(
    mesh: &TriMesh,
    interior: &BTreeSet<usize>,
    normals: &[crate::Vector3],
    depth: f64,
    exec: Exec,
) -> Result<()> {
    let bvh = FaceBvh::over(mesh, (0..mesh.num_faces()).filter(|&f| mesh.tag(f) != FaceTag::TextureInterior));
    let around = mesh.vertex_faces();
    let verts: Vec<usize> = interior.iter().copied().collect();
    let hits = exec.map(&verts, |&v| {
        bvh.ray(&mesh.positions()[v], &(-normals[v]), depth, |f| around[v].contains(&f)).map(|_| v)
    });
    match hits.into_iter().flatten().next() {
        Some(vertex) => Err(Error::SelfIntersection { vertex }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocomplete::PlacementEvent;
    use crate::element::TextureElement;
    use crate::mesh::primitives;
    use crate::synth::imprint;
    use crate::uv::UvChart;
    use crate::{Point2, Vector2};

    /// Closed slab whose top face at z = 0 is charted by its x and y.
    fn plate() -> (TriMesh, UvChart) {
        let m = primitives::box_mesh([10.0, 10.0, 2.0], [5, 5, 1]).map_positions(|p| p - crate::Vector3::new(0.0, 0.0, 1.0));
        top_chart(m)
    }

    fn top_chart(m: TriMesh) -> (TriMesh, UvChart) {
        // Non-top faces get a far-away chart so nothing lands on them.
        let uv = (0..m.num_faces())
            .map(|f| {
                let c = m.corner_positions(f);
                let top = c.iter().all(|p| p.z > -1e-12);
                c.map(|p| if top { Point2::new(p.x, p.y) } else { Point2::new(p.x + 1e3, p.y + 1e3 * (1.0 + p.z)) })
            })
            .collect();
        let chart = UvChart::new(uv, Vec::new(), &m).unwrap();
        (m, chart)
    }

    fn square_on_plate() -> ImprintedMesh {
        let (m, chart) = plate();
        let sq = TextureElement::rect(1.0, 1.0);
        imprint(&m, &chart, &sq, &[PlacementEvent::new(Point2::new(0.3, -0.2), 0)], Exec::Sequential).unwrap()
    }

    #[test]
    fn wall_strip_of_a_square_prism() {
        let base: Vec<Point3> =
            [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)].iter().map(|&(x, y)| Point3::new(x, y, 0.0)).collect();
        let top: Vec<Point3> = base.iter().map(|p| p + crate::Vector3::z()).collect();
        let w = wall_triangulation(&base, &top).unwrap();
        assert_eq!(w.num_faces(), 8);
        assert!((w.surface_area() - 16.0).abs() < 1e-12);
        // Outward: the first wall faces -y.
        assert!(w.face_cross(0).y < 0.0);
        let hex: Vec<Point3> =
            (0..6).map(|k| Point3::new((k as f64).cos(), (k as f64).sin(), 0.0)).collect();
        assert_eq!(wall_triangulation(&hex, &hex.iter().map(|p| p + crate::Vector3::z()).collect::<Vec<_>>()).unwrap().num_faces(), 12);
        assert!(wall_triangulation(&base, &top[..3]).is_err());
    }

    #[test]
    fn raised_and_embossed_square_volume() {
        let im = square_on_plate();
        let v0 = im.mesh.signed_volume();
        let up = extrude_texture(&im, ExtrudeMode::Raised, 2.0, Exec::Sequential).unwrap();
        assert!(check_watertight(&up).is_closed);
        assert!((up.signed_volume() - v0 - 2.0).abs() < 1e-6);
        let down = extrude_texture(&im, ExtrudeMode::Embossed, 1.5, Exec::Sequential).unwrap();
        assert!(check_watertight(&down).is_closed);
        assert!((down.signed_volume() - v0 + 1.5).abs() < 1e-6);
    }

    #[test]
    fn emboss_through_the_part_is_rejected() {
        let im = square_on_plate();
        assert!(matches!(
            extrude_texture(&im, ExtrudeMode::Embossed, 2.5, Exec::Sequential),
            Err(Error::SelfIntersection { .. })
        ));
        // Two units thick, so a half unit wall leaves a 1.5 deep recess.
        let h = hollow(&im, 0.5, Exec::Sequential).unwrap();
        assert!((h.signed_volume() - im.mesh.signed_volume() + 1.5).abs() < 1e-6);
    }

    #[test]
    fn volume_change_shrinks_with_depth() {
        let im = square_on_plate();
        let v0 = im.mesh.signed_volume();
        let dv: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&d| extrude_texture(&im, ExtrudeMode::Raised, d, Exec::Sequential).unwrap().signed_volume() - v0)
            .collect();
        assert!(0.0 < dv[0] && dv[0] < dv[1] && dv[1] < dv[2]);
    }

    #[test]
    fn cutout_needs_a_shell() {
        let im = square_on_plate();
        assert!(matches!(extrude_texture(&im, ExtrudeMode::Cutout, 1.0, Exec::Sequential), Err(Error::CutoutOnClosedSolid)));
        let m = primitives::grid_plane(4, 4, 8.0, 8.0);
        let (m, chart) = top_chart(m);
        let c = TextureElement::circle(1.0, 64);
        let events = [Point2::new(2.0, 2.0), Point2::new(5.5, 5.0)].map(|a| PlacementEvent::new(a, 0));
        let im = imprint(&m, &chart, &c, &events, Exec::Sequential).unwrap();
        let out = extrude_texture(&im, ExtrudeMode::Cutout, 1.0, Exec::Sequential).unwrap();
        let r = check_watertight(&out);
        assert_eq!(r.nonmanifold_edge_count, 0);
        assert_eq!(out.boundary_loops().unwrap().len(), 3);
    }

    #[test]
    fn circles_on_a_cube_face() {
        let m = primitives::box_mesh([12.0, 12.0, 12.0], [4, 4, 4]).map_positions(|p| p - crate::Vector3::new(0.0, 0.0, 6.0));
        let (m, chart) = top_chart(m);
        let c = TextureElement::circle(1.0, 64);
        let events: Vec<_> = (-1..=1)
            .flat_map(|i| (-1..=1).map(move |j| Point2::origin() + Vector2::new(3.0 * i as f64 + 0.1, 3.0 * j as f64 + 0.2)))
            .map(|a| PlacementEvent::new(a, 0))
            .collect();
        let im = imprint(&m, &chart, &c, &events, Exec::Parallel).unwrap();
        let out = extrude_texture(&im, ExtrudeMode::Raised, 1.0, Exec::Parallel).unwrap();
        assert!(check_watertight(&out).is_closed);
        let dv = out.signed_volume() - m.signed_volume();
        let expect = 9.0 * std::f64::consts::PI;
        assert!((dv - expect).abs() / expect < 0.03, "{dv}");
    }
}
