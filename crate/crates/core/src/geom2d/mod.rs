//! Planar polygons: exact predicates, boolean clipping and constrained
//! Delaunay triangulation.

mod cdt;
mod clip;

pub use cdt::{cdt, cdt_with, CdtOptions, Triangulation2, SLIVER_AREA};
pub use clip::{difference, intersect, PERTURBATION};
pub(crate) use clip::{clip_rings, nudge, ClipOp, ClipVertex, Origin};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point2, Vector2};

/// Minimum spacing between consecutive ring points.
pub const MIN_SPACING: f64 = 1e-9;

/// Exact sign of the orientation of `c` relative to the line `a -> b`;
/// positive when counter-clockwise.
#[inline]
pub fn orient2d(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    robust::orient2d(
        robust::Coord { x: a.x, y: a.y },
        robust::Coord { x: b.x, y: b.y },
        robust::Coord { x: c.x, y: c.y },
    )
}

/// Twice the signed area of a ring (positive when counter-clockwise).
pub fn ring_area2(ring: &[Point2]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut a = 0.0;
    for i in 1..n - 1 {
        a += (ring[i] - o).perp(&(ring[i + 1] - o));
    }
    a
}

/// Even-odd crossing test of `p` against one ring. Points on the boundary
/// may land on either side.
pub fn ring_contains(ring: &[Point2], p: &Point2) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            // Sign of the crossing decided exactly.
            let o = orient2d(&a, &b, p);
            if (o > 0.0) == (b.y > a.y) {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// A polygon: one counter-clockwise outer ring and clockwise hole rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    pub rings: Vec<Vec<Point2>>,
}

impl Polygon2 {
    /// Builds a polygon, dropping near-duplicate consecutive points and
    /// fixing ring orientation. The first ring is the outer one.
    pub fn new(rings: Vec<Vec<Point2>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rings.len());
        for (i, ring) in rings.into_iter().enumerate() {
            let mut r = dedup_ring(ring);
            if r.len() < 3 {
                return Err(Error::InvalidPolygon(format!("ring {i} has fewer than 3 distinct points")));
            }
            let a = ring_area2(&r);
            if a == 0.0 {
                return Err(Error::InvalidPolygon(format!("ring {i} has zero area")));
            }
            if (i == 0) != (a > 0.0) {
                r.reverse();
            }
            out.push(r);
        }
        if out.is_empty() {
            return Err(Error::InvalidPolygon("no rings".into()));
        }
        Ok(Polygon2 { rings: out })
    }

    pub fn from_outer(points: Vec<Point2>) -> Result<Self> {
        Self::new(vec![points])
    }

    /// Axis-aligned rectangle.
    pub fn rect(lo: Point2, hi: Point2) -> Self {
        Polygon2 { rings: vec![vec![lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)]] }
    }

    /// Regular `n`-gon with vertices on the circle.
    pub fn regular(center: Point2, radius: f64, n: usize) -> Self {
        let ring = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                center + Vector2::new(t.cos(), t.sin()) * radius
            })
            .collect();
        Polygon2 { rings: vec![ring] }
    }

    pub fn outer(&self) -> &[Point2] {
        &self.rings[0]
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.rings[1..]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.rings.iter().map(|r| ring_area2(r)).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings
            .iter()
            .map(|r| (0..r.len()).map(|i| (r[(i + 1) % r.len()] - r[i]).norm()).sum::<f64>())
            .sum()
    }

    pub fn num_points(&self) -> usize {
        self.rings.iter().map(Vec::len).sum()
    }

    /// Even-odd containment over all rings.
    pub fn contains(&self, p: &Point2) -> bool {
        self.rings.iter().filter(|r| ring_contains(r, p)).count() % 2 == 1
    }

    /// Whether `p` lies exactly on a ring edge.
    pub fn on_boundary(&self, p: &Point2) -> bool {
        self.rings.iter().any(|r| {
            (0..r.len()).any(|i| {
                let (a, b) = (r[i], r[(i + 1) % r.len()]);
                orient2d(&a, &b, p) == 0.0 && on_segment(&a, &b, p)
            })
        })
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.rings.iter().flatten() {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let mut c = Vector2::zeros();
        let mut a = 0.0;
        for r in &self.rings {
            let n = r.len();
            for i in 0..n {
                let (p, q) = (r[i].coords, r[(i + 1) % n].coords);
                let w = p.perp(&q);
                a += w;
                c += (p + q) * w;
            }
        }
        Point2::from(c / (3.0 * a))
    }

    /// Applies a similarity: scale, then rotate, then translate.
    pub fn transformed(&self, scale: f64, rotation: f64, offset: Vector2) -> Self {
        let (s, c) = rotation.sin_cos();
        let rings = self
            .rings
            .iter()
            .map(|r| {
                r.iter()
                    .map(|p| Point2::new(scale * (c * p.x - s * p.y) + offset.x, scale * (s * p.x + c * p.y) + offset.y))
                    .collect()
            })
            .collect();
        Polygon2 { rings }
    }

    /// Whether any two ring edges cross or touch other than consecutive
    /// edges sharing their endpoint.
    pub fn self_intersects(&self) -> bool {
        let edges: Vec<(Point2, Point2, usize, usize)> = self
            .rings
            .iter()
            .enumerate()
            .flat_map(|(ri, r)| (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()], ri, i)))
            .collect();
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b, ra, ia) = edges[i];
                let (c, d, rb, ib) = edges[j];
                if ra == rb {
                    let n = self.rings[ra].len();
                    if (ia + 1) % n == ib || (ib + 1) % n == ia {
                        // Adjacent: only a fold back onto the shared edge counts.
                        let shared_is_b = (ia + 1) % n == ib;
                        let (p, q, r) = if shared_is_b { (a, b, d) } else { (c, d, b) };
                        if orient2d(&p, &q, &r) == 0.0 && (r - q).dot(&(p - q)) > 0.0 {
                            return true;
                        }
                        continue;
                    }
                }
                if segments_touch(&a, &b, &c, &d) {
                    return true;
                }
            }
        }
        false
    }
}

/// Closed-segment intersection test with exact predicates.
pub fn segments_touch(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    let o1 = orient2d(a, b, c);
    let o2 = orient2d(a, b, d);
    let o3 = orient2d(c, d, a);
    let o4 = orient2d(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// For `p` collinear with `a -> b`: whether it lies within the closed segment.
#[inline]
pub(crate) fn on_segment(a: &Point2, b: &Point2, p: &Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn dedup_ring(ring: Vec<Point2>) -> Vec<Point2> {
    let mut out: Vec<Point2> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last().is_none_or(|q| (p - q).norm() > MIN_SPACING) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= MIN_SPACING {
        out.pop();
    }
    out
}

/// Groups loose rings into polygons: counter-clockwise rings become outers,
/// clockwise rings are attached to the smallest outer that contains them.
pub fn assemble(rings: Vec<Vec<Point2>>) -> Vec<Polygon2> {
    assemble_indices(&rings)
        .into_iter()
        .map(|group| Polygon2 { rings: group.into_iter().map(|i| rings[i].clone()).collect() })
        .collect()
}

/// Like [`assemble`] but returns ring indices: each group is an outer ring
/// followed by its holes. Degenerate rings are dropped.
pub(crate) fn assemble_indices(rings: &[Vec<Point2>]) -> Vec<Vec<usize>> {
    let mut outers: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut holes = Vec::new();
    for (i, r) in rings.iter().enumerate() {
        if r.len() < 3 {
            continue;
        }
        let a = ring_area2(r);
        if a > 0.0 {
            outers.push((a, vec![i]));
        } else if a < 0.0 {
            holes.push(i);
        }
    }
    for h in holes {
        let probe = hole_probe(&rings[h]);
        let owner = outers
            .iter()
            .enumerate()
            .filter(|(_, (_, o))| ring_contains(&rings[o[0]], &probe))
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i);
        if let Some(i) = owner {
            outers[i].1.push(h);
        }
    }
    outers.into_iter().map(|(_, g)| g).collect()
}

/// A point just inside the area a clockwise ring encloses: the midpoint of
/// its longest edge nudged to the right of the traversal.
fn hole_probe(h: &[Point2]) -> Point2 {
    let n = h.len();
    let i = (0..n)
        .max_by(|&a, &b| (h[(a + 1) % n] - h[a]).norm().total_cmp(&(h[(b + 1) % n] - h[b]).norm()))
        .expect("non-empty");
    let (a, b) = (h[i], h[(i + 1) % n]);
    let d = b - a;
    let m = a + d * 0.5;
    m + Vector2::new(d.y, -d.x) * 1e-7
}
