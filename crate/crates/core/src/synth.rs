//! Imprinting element outlines into a mesh: every face whose chart
//! triangle meets a placed footprint is split into the part inside and the
//! part outside, both retriangulated on the original surface.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::autocomplete::PlacementEvent;
use crate::element::TextureElement;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom2d::{
    assemble_indices, cdt_with, clip_rings, nudge, intersect, segments_touch, CdtOptions, ClipOp, ClipVertex, Origin,
    Polygon2,
};
use crate::mesh::{edge_key, EdgeKey, FaceTag, TriMesh};
use crate::uv::{barycentric, interpolate, UvChart};
use crate::{Point2, Point3};

/// Footprints overlapping by at least this area are rejected.
pub const OVERLAP_AREA: f64 = 1e-9;

/// A closed loop of vertices separating a texture interior from the rest,
/// with the interior on its left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorLoop {
    /// Placement whose outline produced the loop.
    pub placement: usize,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ImprintedMesh {
    /// Tagged mesh; original vertices keep their indices.
    pub mesh: TriMesh,
    pub loops: Vec<InteriorLoop>,
    /// Chart of the new faces.
    pub chart: UvChart,
    pub warnings: Vec<String>,
}

/// Identity of a vertex produced while cutting, shared between the faces
/// that produce it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Mesh(usize),
    /// Outline edge `edge` of `ring` of placement `fp` crossing mesh edge `(a, b)`.
    Cross { a: usize, b: usize, fp: usize, ring: usize, edge: usize },
    /// Outline vertex strictly inside a face.
    Inner { fp: usize, ring: usize, index: usize },
}

impl Key {
    fn placement(self) -> Option<usize> {
        match self {
            Key::Mesh(_) => None,
            Key::Cross { fp, .. } | Key::Inner { fp, .. } => Some(fp),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PiecePoint {
    uv: Point2,
    key: Key,
    /// Position along local face edge `k` as `(k, t)`; corners sit on two edges.
    on: [Option<(usize, f64)>; 2],
}

#[derive(Debug, Clone)]
struct Piece {
    interior: bool,
    placement: Option<usize>,
    rings: Vec<Vec<PiecePoint>>,
}

#[derive(Debug, Clone)]
enum FaceCut {
    Untouched,
    Inside(usize),
    Split(Vec<Piece>),
}

/// Position of `p` along the segment `a -> b`.
fn param(a: &Point2, b: &Point2, p: &Point2) -> f64 {
    let d = b - a;
    (p - a).dot(&d) / d.norm_squared()
}

fn bounds(points: impl IntoIterator<Item = Point2>) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (lo, hi)
}

fn boxes_meet(a: &(Point2, Point2), b: &(Point2, Point2)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

/// Rejects placements whose footprints overlap or touch.
fn check_overlaps(footprints: &[Vec<Polygon2>]) -> Result<()> {
    let boxes: Vec<_> = footprints.iter().map(|f| bounds(f.iter().flat_map(|p| p.rings.iter().flatten().copied()))).collect();
    for i in 0..footprints.len() {
        for j in i + 1..footprints.len() {
            if !boxes_meet(&boxes[i], &boxes[j]) {
                continue;
            }
            let overlap: f64 = footprints[i]
                .iter()
                .flat_map(|a| footprints[j].iter().flat_map(move |b| intersect(a, b)))
                .map(|p| p.area())
                .sum();
            let touching = || {
                let edges = |f: &Vec<Polygon2>| -> Vec<(Point2, Point2)> {
                    f.iter()
                        .flat_map(|p| &p.rings)
                        .flat_map(|r| (0..r.len()).map(move |k| (r[k], r[(k + 1) % r.len()])))
                        .collect()
                };
                let (ea, eb) = (edges(&footprints[i]), edges(&footprints[j]));
                ea.iter().any(|(a, b)| eb.iter().any(|(c, d)| segments_touch(a, b, c, d)))
            };
            if overlap >= OVERLAP_AREA || touching() {
                return Err(Error::OverlappingPlacements { first: i, second: j });
            }
        }
    }
    Ok(())
}

struct Context<'a> {
    mesh: &'a TriMesh,
    chart: &'a UvChart,
    /// Current (possibly perturbed) rings of every footprint.
    rings: Vec<Vec<Vec<Point2>>>,
    boxes: Vec<(Point2, Point2)>,
}

impl Context<'_> {
    fn candidates(&self, f: usize) -> Vec<usize> {
        let b = bounds(self.chart.uv[f]);
        (0..self.rings.len()).filter(|&i| boxes_meet(&b, &self.boxes[i])).collect()
    }

    /// Splits one face, or reports the footprints that touch it degenerately.
    fn cut(&self, f: usize) -> std::result::Result<FaceCut, Vec<usize>> {
        let cands = self.candidates(f);
        if cands.is_empty() {
            return Ok(FaceCut::Untouched);
        }
        let tri = self.chart.uv[f];
        let subject = vec![tri.to_vec()];
        let mut clip = Vec::new();
        let mut owner = Vec::new();
        for &fp in &cands {
            for (r, ring) in self.rings[fp].iter().enumerate() {
                clip.push(ring.clone());
                owner.push((fp, r));
            }
        }
        let (inside, outside) = match (
            clip_rings(&subject, &clip, ClipOp::Intersection),
            clip_rings(&subject, &clip, ClipOp::Difference),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                let bad = cands
                    .into_iter()
                    .filter(|&fp| clip_rings(&subject, &self.rings[fp], ClipOp::Intersection).is_err())
                    .collect();
                return Err(bad);
            }
        };
        let crossed = inside.iter().chain(&outside).flatten().any(|v| matches!(v.origin, Origin::Cross { .. }));
        let only_subject = |rings: &Vec<Vec<ClipVertex>>| {
            !rings.is_empty() && rings.iter().flatten().all(|v| matches!(v.origin, Origin::Subject { .. }))
        };
        if !crossed {
            if inside.is_empty() {
                return Ok(FaceCut::Untouched);
            }
            if only_subject(&inside) && outside.is_empty() {
                let centroid = Point2::from((tri[0].coords + tri[1].coords + tri[2].coords) / 3.0);
                let fp = cands
                    .iter()
                    .copied()
                    .find(|&fp| self.rings[fp].iter().filter(|r| crate::geom2d::ring_contains(r, &centroid)).count() % 2 == 1)
                    .unwrap_or(cands[0]);
                return Ok(FaceCut::Inside(fp));
            }
        }
        let face = self.mesh.faces()[f];
        let point = |v: &ClipVertex| -> PiecePoint {
            match v.origin {
                Origin::Subject { index: k, .. } => PiecePoint {
                    uv: v.p,
                    key: Key::Mesh(face[k]),
                    on: [Some((k, 0.0)), Some(((k + 2) % 3, 1.0))],
                },
                Origin::Clip { ring, index } => {
                    let (fp, r) = owner[ring];
                    PiecePoint { uv: v.p, key: Key::Inner { fp, ring: r, index }, on: [None, None] }
                }
                Origin::Cross { s_edge: k, c_ring, c_edge, .. } => {
                    let (fp, r) = owner[c_ring];
                    let (a, b) = edge_key(face[k], face[(k + 1) % 3]);
                    PiecePoint {
                        uv: v.p,
                        key: Key::Cross { a, b, fp, ring: r, edge: c_edge },
                        on: [Some((k, param(&tri[k], &tri[(k + 1) % 3], &v.p))), None],
                    }
                }
            }
        };
        let mut pieces = Vec::new();
        for (traced, interior) in [(inside, true), (outside, false)] {
            let plain: Vec<Vec<Point2>> = traced.iter().map(|r| r.iter().map(|v| v.p).collect()).collect();
            for group in assemble_indices(&plain) {
                let rings: Vec<Vec<PiecePoint>> = group.iter().map(|&i| traced[i].iter().map(point).collect()).collect();
                let placement = rings.iter().flatten().find_map(|p| p.key.placement());
                pieces.push(Piece { interior, placement, rings });
            }
        }
        Ok(FaceCut::Split(pieces))
    }
}

/// Imprints every placement of `element` into `mesh` through `chart`.
pub fn imprint(
    mesh: &TriMesh,
    chart: &UvChart,
    element: &TextureElement,
    placements: &[PlacementEvent],
    exec: Exec,
) -> Result<ImprintedMesh> {
    if chart.num_faces() != mesh.num_faces() {
        return Err(Error::InvalidArgument("chart does not match mesh".into()));
    }
    if placements.is_empty() {
        return Ok(ImprintedMesh { mesh: mesh.clone(), loops: Vec::new(), chart: chart.clone(), warnings: Vec::new() });
    }
    let footprints: Vec<Vec<Polygon2>> =
        placements.iter().map(|p| element.footprint(p.anchor, p.rotation, p.scale)).collect();
    check_overlaps(&footprints)?;
    let original: Vec<Vec<Vec<Point2>>> =
        footprints.iter().map(|f| f.iter().flat_map(|p| p.rings.iter().cloned()).collect()).collect();

    let (clo, chi) = chart.bounds();
    let scale = [clo.x, clo.y, chi.x, chi.y]
        .into_iter()
        .chain(original.iter().flatten().flatten().flat_map(|p| [p.x, p.y]))
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let mut ctx = Context {
        mesh,
        chart,
        boxes: original.iter().map(|r| bounds(r.iter().flatten().copied())).collect(),
        rings: original.clone(),
    };
    let mut attempts = vec![0u32; original.len()];
    let mut cuts = None;
    for _ in 0..24 {
        let results = exec.map_range(mesh.num_faces(), |f| ctx.cut(f));
        let mut bad: Vec<usize> = results.iter().filter_map(|r| r.as_ref().err()).flatten().copied().collect();
        if bad.is_empty() {
            cuts = Some(results.into_iter().map(|r| r.expect("no degeneracy")).collect::<Vec<_>>());
            break;
        }
        bad.sort_unstable();
        bad.dedup();
        // Shift offending outlines a hair, the same way for every face.
        for fp in bad {
            attempts[fp] += 1;
            ctx.rings[fp] = nudge(&original[fp], attempts[fp], scale);
            ctx.boxes[fp] = bounds(ctx.rings[fp].iter().flatten().copied());
        }
    }
    let cuts = cuts.ok_or_else(|| Error::Triangulation("outline stays degenerate against the chart".into()))?;

    for fp in 0..placements.len() {
        let used = cuts.iter().any(|c| match c {
            FaceCut::Inside(p) => *p == fp,
            FaceCut::Split(pieces) => pieces.iter().any(|pc| pc.interior && pc.placement == Some(fp)),
            FaceCut::Untouched => false,
        });
        if !used {
            return Err(Error::PlacementOffChart { placement: fp });
        }
    }
    assemble_mesh(mesh, chart, cuts)
}

fn assemble_mesh(mesh: &TriMesh, chart: &UvChart, cuts: Vec<FaceCut>) -> Result<ImprintedMesh> {
    let faces = mesh.faces();
    // Every split point on every mesh edge, by canonical parameter from
    // the lower vertex index.
    let mut edge_points: HashMap<EdgeKey, BTreeMap<Key, f64>> = HashMap::new();
    for (f, cut) in cuts.iter().enumerate() {
        let FaceCut::Split(pieces) = cut else { continue };
        for p in pieces.iter().flat_map(|pc| pc.rings.iter().flatten()) {
            if let Key::Cross { a, b, .. } = p.key {
                let k = p.on[0].expect("crossing lies on an edge").0;
                let (ua, ub) = uv_of(chart, faces, f, k, a, b);
                edge_points.entry((a, b)).or_default().insert(p.key, param(&ua, &ub, &p.uv));
            }
        }
    }

    let mut positions = mesh.positions().to_vec();
    let mut ids: HashMap<Key, usize> = HashMap::new();
    let mut vertex_key: Vec<Key> = (0..positions.len()).map(Key::Mesh).collect();
    let mut out_faces = Vec::new();
    let mut out_tags = Vec::new();
    let mut out_uv = Vec::new();
    let mut warnings = Vec::new();

    for (f, cut) in cuts.into_iter().enumerate() {
        let face = faces[f];
        let tri = chart.uv[f];
        let base_tag = mesh.tag(f);
        let pieces = match cut {
            FaceCut::Untouched | FaceCut::Inside(_) => {
                let interior = matches!(cut, FaceCut::Inside(_));
                let placement = if let FaceCut::Inside(p) = cut { Some(p) } else { None };
                let ring = (0..3)
                    .map(|k| PiecePoint {
                        uv: tri[k],
                        key: Key::Mesh(face[k]),
                        on: [Some((k, 0.0)), Some(((k + 2) % 3, 1.0))],
                    })
                    .collect();
                vec![Piece { interior, placement, rings: vec![ring] }]
            }
            FaceCut::Split(pieces) => pieces,
        };
        // Points other faces put on this face's edges (seams only).
        let own: std::collections::HashSet<Key> = pieces.iter().flat_map(|p| p.rings.iter().flatten().map(|q| q.key)).collect();
        let mut extra: [Vec<PiecePoint>; 3] = Default::default();
        for k in 0..3 {
            let (a, b) = edge_key(face[k], face[(k + 1) % 3]);
            if let Some(points) = edge_points.get(&(a, b)) {
                for (&key, &t) in points {
                    if own.contains(&key) {
                        continue;
                    }
                    let t_local = if face[k] == a { t } else { 1.0 - t };
                    let uv = tri[k] + (tri[(k + 1) % 3] - tri[k]) * t_local;
                    extra[k].push(PiecePoint { uv, key, on: [Some((k, t_local)), None] });
                }
                extra[k].sort_by(|p, q| p.on[0].unwrap().1.total_cmp(&q.on[0].unwrap().1));
            }
        }
        let has_extra = extra.iter().any(|e| !e.is_empty());
        if has_extra {
            warnings.push(format!("outline split by a seam at face {f}"));
        }
        let simple = pieces.len() == 1 && pieces[0].rings.len() == 1 && pieces[0].rings[0].len() == 3 && !has_extra;
        for piece in pieces {
            let tag = if piece.interior { FaceTag::TextureInterior } else { base_tag };
            if simple {
                out_faces.push(face);
                out_tags.push(tag);
                out_uv.push(tri);
                continue;
            }
            let rings: Vec<Vec<PiecePoint>> = piece.rings.iter().map(|r| with_extras(r, &extra)).collect();
            let uv_rings: Vec<Vec<Point2>> = rings.iter().map(|r| r.iter().map(|p| p.uv).collect()).collect();
            let flat: Vec<&PiecePoint> = rings.iter().flatten().collect();
            let tris = triangulate(&uv_rings)?;
            for t in tris {
                let mut nf = [0usize; 3];
                let mut nuv = [Point2::origin(); 3];
                for c in 0..3 {
                    let p = flat[t[c]];
                    nuv[c] = p.uv;
                    nf[c] = match p.key {
                        Key::Mesh(v) => v,
                        key => *ids.entry(key).or_insert_with(|| {
                            positions.push(position(mesh, chart, f, p, &edge_points));
                            vertex_key.push(key);
                            positions.len() - 1
                        }),
                    };
                }
                out_faces.push(nf);
                out_tags.push(tag);
                out_uv.push(nuv);
            }
        }
    }
    let out = TriMesh::new(positions, out_faces)?.with_tags(out_tags)?;
    let seams = seam_edges(&out, &out_uv);
    let chart = UvChart::new(out_uv, seams, &out)?;
    let loops = interior_loops(&out)?
        .into_iter()
        .map(|vertices| {
            let placement = vertices.iter().find_map(|&v| vertex_key[v].placement()).unwrap_or(0);
            InteriorLoop { placement, vertices }
        })
        .collect();
    warnings.dedup();
    Ok(ImprintedMesh { mesh: out, loops, chart, warnings })
}

/// UVs of mesh vertices `a` and `b` as seen from face `f`.
fn uv_of(chart: &UvChart, faces: &[[usize; 3]], f: usize, k: usize, a: usize, b: usize) -> (Point2, Point2) {
    let (p, q) = (chart.uv[f][k], chart.uv[f][(k + 1) % 3]);
    if faces[f][k] == a {
        debug_assert_eq!(faces[f][(k + 1) % 3], b);
        (p, q)
    } else {
        (q, p)
    }
}

/// Surface position of a new point.
fn position(mesh: &TriMesh, chart: &UvChart, f: usize, p: &PiecePoint, edge_points: &HashMap<EdgeKey, BTreeMap<Key, f64>>) -> Point3 {
    match p.key {
        Key::Mesh(v) => mesh.positions()[v],
        Key::Cross { a, b, .. } => {
            // Shared by both faces of the edge, so computed from the edge alone.
            let t = edge_points[&(a, b)][&p.key];
            let (pa, pb) = (mesh.positions()[a], mesh.positions()[b]);
            pa + (pb - pa) * t
        }
        Key::Inner { .. } => interpolate(&mesh.corner_positions(f), barycentric(&chart.uv[f], &p.uv)),
    }
}

/// Inserts the seam points of each face edge between consecutive ring
/// points running along that edge.
fn with_extras(ring: &[PiecePoint], extra: &[Vec<PiecePoint>; 3]) -> Vec<PiecePoint> {
    if extra.iter().all(Vec::is_empty) {
        return ring.to_vec();
    }
    let mut out = Vec::with_capacity(ring.len());
    for i in 0..ring.len() {
        let (u, v) = (&ring[i], &ring[(i + 1) % ring.len()]);
        out.push(*u);
        for (ku, tu) in u.on.iter().flatten() {
            let Some((_, tv)) = v.on.iter().flatten().find(|(kv, _)| kv == ku) else { continue };
            let (lo, hi) = (tu.min(*tv), tu.max(*tv));
            let mut between: Vec<PiecePoint> =
                extra[*ku].iter().filter(|p| p.on[0].unwrap().1 > lo && p.on[0].unwrap().1 < hi).copied().collect();
            if tv < tu {
                between.reverse();
            }
            out.extend(between);
            break;
        }
    }
    out
}

/// Triangles over the flattened ring points, indices into the
/// concatenation of `rings`.
fn triangulate(rings: &[Vec<Point2>]) -> Result<Vec<[usize; 3]>> {
    let n: usize = rings.iter().map(Vec::len).sum();
    let expected = n + 2 * (rings.len() - 1) - 2;
    if rings.len() == 1 && n == 3 {
        return Ok(vec![[0, 1, 2]]);
    }
    let t = cdt_with(rings, &[], CdtOptions { keep_slivers: true })?;
    let mut back = vec![usize::MAX; t.points.len()];
    for (i, &o) in t.input_points.iter().enumerate() {
        if back[o] == usize::MAX {
            back[o] = i;
        }
    }
    if t.triangles.len() != expected || t.points.len() != n {
        return Err(Error::Triangulation(format!(
            "piece with {n} points gave {} triangles on {} points, expected {expected}",
            t.triangles.len(),
            t.points.len()
        )));
    }
    Ok(t.triangles.iter().map(|tri| tri.map(|i| back[i])).collect())
}

/// Edges whose two faces disagree on the UV of a shared vertex.
fn seam_edges(mesh: &TriMesh, uv: &[[Point2; 3]]) -> Vec<EdgeKey> {
    let faces = mesh.faces();
    let corner_uv = |f: usize, v: usize| uv[f][faces[f].iter().position(|&w| w == v).expect("vertex of face")];
    let mut out: Vec<EdgeKey> = mesh
        .edges()
        .iter()
        .filter(|e| e.faces.len() == 2)
        .filter(|e| {
            let (f, g) = (e.faces[0].0, e.faces[1].0);
            e.v.iter().any(|&v| corner_uv(f, v) != corner_uv(g, v))
        })
        .map(|e| (e.v[0], e.v[1]))
        .collect();
    out.sort_unstable();
    out
}

/// Loops of edges with a texture-interior face on exactly one side, walked
/// with the interior on the left.
pub fn interior_loops(mesh: &TriMesh) -> Result<Vec<Vec<usize>>> {
    let faces = mesh.faces();
    let interior = |f: usize| mesh.tag(f) == FaceTag::TextureInterior;
    let mut next: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in mesh.edges().iter() {
        let inside: Vec<_> = e.faces.iter().filter(|(f, _)| interior(*f)).collect();
        if inside.len() != 1 || (e.faces.len() == 2 && interior(e.faces[0].0) && interior(e.faces[1].0)) {
            continue;
        }
        let (f, k) = *inside[0];
        let (u, v) = (faces[f][k as usize], faces[f][(k as usize + 1) % 3]);
        next.entry(u).or_default().push(v);
    }
    let mut loops = Vec::new();
    while let Some((&start, _)) = next.iter().find(|(_, v)| !v.is_empty()) {
        let mut lp = vec![start];
        let mut cur = next.get_mut(&start).expect("present").remove(0);
        while cur != start {
            lp.push(cur);
            let Some(list) = next.get_mut(&cur).filter(|l| !l.is_empty()) else {
                return Err(Error::NonManifold(format!("texture boundary breaks off at vertex {cur}")));
            };
            cur = list.remove(0);
        }
        loops.push(lp);
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{check_watertight, primitives};
    use crate::uv::{parametrize, ParamOptions};
    use crate::Vector2;

    fn flat_chart(m: &TriMesh) -> UvChart {
        let uv = m.faces().iter().map(|f| f.map(|v| Point2::new(m.positions()[v].x, m.positions()[v].y))).collect();
        UvChart::new(uv, Vec::new(), m).unwrap()
    }

    fn at(x: f64, y: f64) -> PlacementEvent {
        PlacementEvent::new(Point2::new(x, y), 0)
    }

    #[test]
    fn square_on_four_triangle_patch() {
        let m = primitives::grid_plane(2, 1, 4.0, 2.0);
        let chart = flat_chart(&m);
        let sq = TextureElement::rect(1.0, 1.0);
        let im = imprint(&m, &chart, &sq, &[at(2.0, 1.0)], Exec::Sequential).unwrap();
        let interior: f64 = (0..im.mesh.num_faces())
            .filter(|&f| im.mesh.tag(f) == FaceTag::TextureInterior)
            .map(|f| im.mesh.face_area(f))
            .sum();
        assert!((interior - 1.0).abs() < 1e-9);
        assert!((im.mesh.surface_area() - 8.0).abs() < 1e-9);
        assert_eq!(im.loops.len(), 1);
    }

    #[test]
    fn element_inside_one_face() {
        let m = primitives::grid_plane(1, 1, 10.0, 10.0);
        let chart = flat_chart(&m);
        let c = TextureElement::circle(1.0, 64);
        let im = imprint(&m, &chart, &c, &[at(7.0, 3.0)], Exec::Sequential).unwrap();
        // One face untouched, the other split.
        assert_eq!(im.mesh.faces().iter().filter(|f| m.faces().contains(f)).count(), 1);
        assert_eq!(im.loops.len(), 1);
        assert_eq!(im.loops[0].vertices.len(), 64);
        assert!((im.mesh.surface_area() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_placement_list_is_identity() {
        let m = primitives::grid_plane(2, 2, 1.0, 1.0);
        let chart = flat_chart(&m);
        let im = imprint(&m, &chart, &TextureElement::rect(0.1, 0.1), &[], Exec::Sequential).unwrap();
        assert_eq!(im.mesh, m);
    }

    #[test]
    fn overlap_and_off_chart_rejected() {
        let m = primitives::grid_plane(2, 2, 4.0, 4.0);
        let chart = flat_chart(&m);
        let sq = TextureElement::rect(1.0, 1.0);
        assert!(matches!(
            imprint(&m, &chart, &sq, &[at(1.0, 1.0), at(1.5, 1.2)], Exec::Sequential),
            Err(Error::OverlappingPlacements { first: 0, second: 1 })
        ));
        assert!(matches!(
            imprint(&m, &chart, &sq, &[at(1.0, 1.0), at(2.0, 1.0)], Exec::Sequential),
            Err(Error::OverlappingPlacements { .. })
        ));
        assert!(matches!(
            imprint(&m, &chart, &sq, &[at(20.0, 1.0)], Exec::Sequential),
            Err(Error::PlacementOffChart { placement: 0 })
        ));
    }

    #[test]
    fn outline_on_grid_lines_is_perturbed() {
        // The square's edges run exactly along mesh edges.
        let m = primitives::grid_plane(4, 4, 4.0, 4.0);
        let chart = flat_chart(&m);
        let sq = TextureElement::rect(2.0, 2.0);
        let im = imprint(&m, &chart, &sq, &[at(2.0, 2.0)], Exec::Sequential).unwrap();
        let r = check_watertight(&im.mesh);
        assert_eq!(r.nonmanifold_edge_count, 0);
        assert_eq!(r.inconsistent_winding_pairs, 0);
        assert_eq!(im.mesh.boundary_loops().unwrap().len(), 1);
        assert!((im.mesh.surface_area() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_outline_on_grid_vertex() {
        // Centre on a mesh vertex: four outline vertices sit on mesh edges
        // and stay on them under any radial shrink.
        let m = primitives::grid_plane(4, 4, 8.0, 8.0);
        let chart = flat_chart(&m);
        let c = TextureElement::circle(1.0, 64);
        for a in [at(2.0, 2.0), at(5.5, 5.0)] {
            let im = imprint(&m, &chart, &c, &[a], Exec::Sequential).unwrap();
            let interior: f64 = (0..im.mesh.num_faces())
                .filter(|&f| im.mesh.tag(f) == FaceTag::TextureInterior)
                .map(|f| im.mesh.face_area(f))
                .sum();
            assert!((interior - c.area()).abs() < 1e-9, "{interior}");
            assert_eq!(im.loops.len(), 1);
            assert!((im.mesh.surface_area() - 64.0).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_cylinder_stays_watertight() {
        let m = primitives::capped_cylinder(10.0, 20.0, 48, 16, 6);
        let p = parametrize(&m, &ParamOptions::default(), Exec::Sequential).unwrap();
        let hit = crate::mesh::FaceBvh::new(&m).nearest(&Point3::new(10.0, 0.5, 10.0)).unwrap();
        let l = barycentric(&p.chart.uv[hit.face], &Point2::origin());
        let _ = l;
        // Chart point of the face centroid.
        let t = p.chart.uv[hit.face];
        let c = Point2::from((t[0].coords + t[1].coords + t[2].coords) / 3.0);
        let circle = TextureElement::circle(1.0, 64);
        let events: Vec<_> = (-1..=1)
            .flat_map(|i| (-1..=1).map(move |j| c + Vector2::new(3.0 * i as f64, 3.0 * j as f64)))
            .map(|a| PlacementEvent::new(a, 0))
            .collect();
        let im = imprint(&m, &p.chart, &circle, &events, Exec::Parallel).unwrap();
        assert!(check_watertight(&im.mesh).is_closed);
        assert!(((im.mesh.surface_area() - m.surface_area()) / m.surface_area()).abs() < 1e-6);
        assert_eq!(im.loops.len(), 9);
        let seq = imprint(&m, &p.chart, &circle, &events, Exec::Sequential).unwrap();
        assert_eq!(seq.mesh, im.mesh);
    }
}
