//! Constrained Delaunay triangulation of polygon rings.

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Triangulation};

use super::{orient2d, Polygon2};
use crate::error::{Error, Result};
use crate::Point2;

/// Triangles with less area than this are reported instead of emitted.
pub const SLIVER_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CdtOptions {
    /// Emit slivers too. Used where dropping a triangle would open the surface.
    pub keep_slivers: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Triangulation2 {
    pub points: Vec<Point2>,
    /// Counter-clockwise triangles covering the polygon.
    pub triangles: Vec<[usize; 3]>,
    /// Triangulation edges lying on input ring segments.
    pub constrained_edges: Vec<[usize; 2]>,
    /// Triangles dropped for being smaller than [`SLIVER_AREA`].
    pub slivers: Vec<[usize; 3]>,
    /// Output point of every input point: ring points in order, then extras.
    pub input_points: Vec<usize>,
}

impl Triangulation2 {
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * orient2d(&self.points[t[0]], &self.points[t[1]], &self.points[t[2]]))
            .sum()
    }
}

pub fn cdt(polygon: &Polygon2, extra: &[Point2]) -> Result<Triangulation2> {
    cdt_with(&polygon.rings, extra, CdtOptions::default())
}

/// Triangulates the even-odd interior of `rings`; `extra` points inside it
/// become vertices too.
pub fn cdt_with(rings: &[Vec<Point2>], extra: &[Point2], opts: CdtOptions) -> Result<Triangulation2> {
    let mut t: ConstrainedDelaunayTriangulation<spade::Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut input_points = Vec::new();
    let mut handles: Vec<Vec<FixedVertexHandle>> = Vec::with_capacity(rings.len());
    let insert = |t: &mut ConstrainedDelaunayTriangulation<_>, p: &Point2| {
        t.insert(spade::Point2::new(p.x, p.y))
            .map_err(|e| Error::Triangulation(format!("cannot insert ({}, {}): {e:?}", p.x, p.y)))
    };
    for ring in rings {
        let mut hs = Vec::with_capacity(ring.len());
        for p in ring {
            let h = insert(&mut t, p)?;
            input_points.push(h.index());
            hs.push(h);
        }
        handles.push(hs);
    }
    for p in extra {
        input_points.push(insert(&mut t, p)?.index());
    }
    for hs in &handles {
        for i in 0..hs.len() {
            let (a, b) = (hs[i], hs[(i + 1) % hs.len()]);
            if a == b {
                continue;
            }
            if !t.can_add_constraint(a, b) {
                return Err(Error::Triangulation("ring segments cross".into()));
            }
            t.add_constraint(a, b);
        }
    }

    let points: Vec<Point2> = t.vertices().map(|v| Point2::new(v.position().x, v.position().y)).collect();
    let mut out = Triangulation2 { points, input_points, ..Default::default() };
    // Even-odd depth by flooding from the hull: crossing a constraint flips
    // it. Centroid tests misjudge needle-thin hull triangles.
    let mut depth: Vec<Option<bool>> = vec![None; t.num_all_faces()];
    let mut queue = std::collections::VecDeque::new();
    for f in t.inner_faces() {
        for e in f.adjacent_edges() {
            if e.rev().face().is_outer() {
                let d = e.is_constraint_edge();
                let slot = &mut depth[f.fix().index()];
                if slot.is_none() {
                    *slot = Some(d);
                    queue.push_back(f.fix());
                }
            }
        }
    }
    while let Some(fh) = queue.pop_front() {
        let d = depth[fh.index()].expect("visited");
        for e in t.face(fh).adjacent_edges() {
            let Some(g) = e.rev().face().as_inner() else { continue };
            let slot = &mut depth[g.fix().index()];
            if slot.is_none() {
                *slot = Some(d ^ e.is_constraint_edge());
                queue.push_back(g.fix());
            }
        }
    }
    for f in t.inner_faces() {
        let tri = f.vertices().map(|v| v.fix().index());
        let [a, b, c] = tri.map(|i| out.points[i]);
        if depth[f.fix().index()] != Some(true) {
            continue;
        }
        if 0.5 * orient2d(&a, &b, &c) < SLIVER_AREA {
            out.slivers.push(tri);
            if !opts.keep_slivers {
                continue;
            }
        }
        out.triangles.push(tri);
    }
    out.triangles.sort_unstable();
    out.slivers.sort_unstable();
    for e in t.undirected_edges() {
        if e.is_constraint_edge() {
            let [a, b] = e.vertices().map(|v| v.fix().index());
            out.constrained_edges.push([a.min(b), a.max(b)]);
        }
    }
    out.constrained_edges.sort_unstable();
    Ok(out)
}
