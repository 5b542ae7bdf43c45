//! Greiner–Hormann boolean operations on multi-ring polygons.

use super::{assemble, on_segment, orient2d, ring_contains, Polygon2};
use crate::{Point2, Vector2};

/// Base offset applied to the clip polygon when inputs touch.
pub const PERTURBATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ClipOp {
    Intersection,
    Difference,
}

/// Where an output vertex came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Origin {
    Subject { ring: usize, index: usize },
    Clip { ring: usize, index: usize },
    /// Crossing of subject edge `index -> index + 1` with a clip edge.
    Cross { s_ring: usize, s_edge: usize, c_ring: usize, c_edge: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ClipVertex {
    pub p: Point2,
    pub origin: Origin,
}

pub(crate) type TracedRing = Vec<ClipVertex>;

/// A vertex of one input lies on an edge of the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Degenerate;

struct Lists {
    p: Vec<Point2>,
    origin: Vec<Origin>,
    next: Vec<usize>,
    prev: Vec<usize>,
    neighbor: Vec<usize>,
    crossing: Vec<bool>,
    entry: Vec<bool>,
    visited: Vec<bool>,
    /// First node of every ring, subject rings first.
    heads: Vec<usize>,
    /// Ring has at least one crossing.
    crossed: Vec<bool>,
}

struct Cross {
    p: Point2,
    s: (usize, usize),
    c: (usize, usize),
    alpha_s: f64,
    alpha_c: f64,
}

/// Intersection point of two properly crossing segments, computed from a
/// canonical ordering of the endpoints so the same pair of segments gives
/// the same bits whichever polygon they come from.
pub(crate) fn crossing_point(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> Point2 {
    fn key(p: &Point2) -> (f64, f64) {
        (p.x, p.y)
    }
    fn ordered<'x>(p: &'x Point2, q: &'x Point2) -> (&'x Point2, &'x Point2) {
        if key(p).partial_cmp(&key(q)) == Some(std::cmp::Ordering::Greater) {
            (q, p)
        } else {
            (p, q)
        }
    }
    let s1 = ordered(a, b);
    let s2 = ordered(c, d);
    let ((p1, q1), (p2, q2)) = if (key(s1.0), key(s1.1)) <= (key(s2.0), key(s2.1)) { (s1, s2) } else { (s2, s1) };
    let r = q1 - p1;
    let s = q2 - p2;
    let t = (p2 - p1).perp(&s) / r.perp(&s);
    let x = p1 + r * t;
    // Keep the point inside both segments' boxes despite rounding.
    let lo = p1.inf(q1).sup(&p2.inf(q2));
    let hi = p1.sup(q1).inf(&p2.sup(q2));
    Point2::new(x.x.clamp(lo.x.min(hi.x), hi.x.max(lo.x)), x.y.clamp(lo.y.min(hi.y), hi.y.max(lo.y)))
}

fn param(a: &Point2, b: &Point2, p: &Point2) -> f64 {
    let d = b - a;
    (p - a).dot(&d) / d.norm_squared()
}

fn bbox_overlap(a: &Point2, b: &Point2, c: &Point2, d: &Point2) -> bool {
    a.x.min(b.x) <= c.x.max(d.x) && c.x.min(d.x) <= a.x.max(b.x) && a.y.min(b.y) <= c.y.max(d.y) && c.y.min(d.y) <= a.y.max(b.y)
}

fn in_rings(rings: &[Vec<Point2>], p: &Point2) -> bool {
    rings.iter().filter(|r| ring_contains(r, p)).count() % 2 == 1
}

/// Boolean operation on ring sets. Rings must be simple with the usual
/// orientation (outer counter-clockwise, holes clockwise).
pub(crate) fn clip_rings(subject: &[Vec<Point2>], clip: &[Vec<Point2>], op: ClipOp) -> Result<Vec<TracedRing>, Degenerate> {
    let mut crosses: Vec<Cross> = Vec::new();
    for (si, sr) in subject.iter().enumerate() {
        for se in 0..sr.len() {
            let (a, b) = (sr[se], sr[(se + 1) % sr.len()]);
            for (ci, cr) in clip.iter().enumerate() {
                for ce in 0..cr.len() {
                    let (c, d) = (cr[ce], cr[(ce + 1) % cr.len()]);
                    if !bbox_overlap(&a, &b, &c, &d) {
                        continue;
                    }
                    let o1 = orient2d(&a, &b, &c);
                    let o2 = orient2d(&a, &b, &d);
                    let o3 = orient2d(&c, &d, &a);
                    let o4 = orient2d(&c, &d, &b);
                    if (o1 == 0.0 && on_segment(&a, &b, &c))
                        || (o2 == 0.0 && on_segment(&a, &b, &d))
                        || (o3 == 0.0 && on_segment(&c, &d, &a))
                        || (o4 == 0.0 && on_segment(&c, &d, &b))
                    {
                        return Err(Degenerate);
                    }
                    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                        let p = crossing_point(&a, &b, &c, &d);
                        crosses.push(Cross {
                            p,
                            s: (si, se),
                            c: (ci, ce),
                            alpha_s: param(&a, &b, &p),
                            alpha_c: param(&c, &d, &p),
                        });
                    }
                }
            }
        }
    }

    let mut l = Lists {
        p: Vec::new(),
        origin: Vec::new(),
        next: Vec::new(),
        prev: Vec::new(),
        neighbor: Vec::new(),
        crossing: Vec::new(),
        entry: Vec::new(),
        visited: Vec::new(),
        heads: Vec::new(),
        crossed: Vec::new(),
    };
    let mut cross_node = vec![[usize::MAX; 2]; crosses.len()];
    for (side, rings) in [subject, clip].into_iter().enumerate() {
        for (ri, ring) in rings.iter().enumerate() {
            let mut nodes = Vec::new();
            let mut any = false;
            for (i, &p) in ring.iter().enumerate() {
                let id = l.p.len();
                l.p.push(p);
                l.origin.push(if side == 0 { Origin::Subject { ring: ri, index: i } } else { Origin::Clip { ring: ri, index: i } });
                l.crossing.push(false);
                nodes.push(id);
                let mut on_edge: Vec<usize> = (0..crosses.len())
                    .filter(|&k| if side == 0 { crosses[k].s == (ri, i) } else { crosses[k].c == (ri, i) })
                    .collect();
                on_edge.sort_by(|&x, &y| {
                    let (ax, ay) = if side == 0 { (crosses[x].alpha_s, crosses[y].alpha_s) } else { (crosses[x].alpha_c, crosses[y].alpha_c) };
                    ax.total_cmp(&ay).then(x.cmp(&y))
                });
                for k in on_edge {
                    any = true;
                    let id = l.p.len();
                    let c = &crosses[k];
                    l.p.push(c.p);
                    l.origin.push(Origin::Cross { s_ring: c.s.0, s_edge: c.s.1, c_ring: c.c.0, c_edge: c.c.1 });
                    l.crossing.push(true);
                    cross_node[k][side] = id;
                    nodes.push(id);
                }
            }
            let n = l.next.len();
            l.next.resize(n + nodes.len(), 0);
            l.prev.resize(n + nodes.len(), 0);
            for (j, &id) in nodes.iter().enumerate() {
                l.next[id] = nodes[(j + 1) % nodes.len()];
                l.prev[id] = nodes[(j + nodes.len() - 1) % nodes.len()];
            }
            l.heads.push(nodes[0]);
            l.crossed.push(any);
        }
    }
    let total = l.p.len();
    l.neighbor = vec![usize::MAX; total];
    l.entry = vec![false; total];
    l.visited = vec![false; total];
    for [s, c] in &cross_node {
        l.neighbor[*s] = *c;
        l.neighbor[*c] = *s;
    }

    // Entry flags by walking each ring from its first (original) vertex.
    let n_subject = subject.len();
    for (h, &head) in l.heads.iter().enumerate() {
        let is_subject = h < n_subject;
        let other = if is_subject { clip } else { subject };
        let mut inside = in_rings(other, &l.p[head]);
        let mut cur = head;
        loop {
            if l.crossing[cur] {
                l.entry[cur] = !inside;
                inside = !inside;
            }
            cur = l.next[cur];
            if cur == head {
                break;
            }
        }
        if is_subject && op == ClipOp::Difference {
            let mut cur = head;
            loop {
                if l.crossing[cur] {
                    l.entry[cur] = !l.entry[cur];
                }
                cur = l.next[cur];
                if cur == head {
                    break;
                }
            }
        }
    }

    let mut out: Vec<TracedRing> = Vec::new();
    let vertex = |l: &Lists, id: usize| ClipVertex { p: l.p[id], origin: l.origin[id] };
    let budget = 2 * total + 8;
    for h in 0..n_subject {
        let head = l.heads[h];
        let mut start = head;
        loop {
            if l.crossing[start] && !l.visited[start] {
                let mut ring = vec![vertex(&l, start)];
                let forward_start = l.entry[start];
                l.visited[start] = true;
                l.visited[l.neighbor[start]] = true;
                let mut cur = start;
                let mut steps = 0;
                loop {
                    let forward = l.entry[cur];
                    loop {
                        cur = if forward { l.next[cur] } else { l.prev[cur] };
                        steps += 1;
                        if steps > budget {
                            return Err(Degenerate);
                        }
                        if l.crossing[cur] {
                            break;
                        }
                        ring.push(vertex(&l, cur));
                    }
                    if l.visited[cur] {
                        break;
                    }
                    ring.push(vertex(&l, cur));
                    l.visited[cur] = true;
                    l.visited[l.neighbor[cur]] = true;
                    cur = l.neighbor[cur];
                }
                if !forward_start {
                    // Subject edges keep their direction in both operations.
                    ring.reverse();
                }
                out.push(ring);
            }
            start = l.next[start];
            if start == head {
                break;
            }
        }
    }

    // Rings that never cross the other polygon are kept or dropped whole.
    for (h, &head) in l.heads.iter().enumerate() {
        if l.crossed[h] {
            continue;
        }
        let is_subject = h < n_subject;
        let (rings, other) = if is_subject { (subject, clip) } else { (clip, subject) };
        let ri = if is_subject { h } else { h - n_subject };
        let inside = in_rings(other, &rings[ri][0]);
        let keep = match (op, is_subject) {
            (ClipOp::Intersection, _) => inside,
            (ClipOp::Difference, true) => !inside,
            (ClipOp::Difference, false) => inside,
        };
        if !keep {
            continue;
        }
        let mut ring = Vec::with_capacity(rings[ri].len());
        let mut cur = head;
        loop {
            ring.push(vertex(&l, cur));
            cur = l.next[cur];
            if cur == head {
                break;
            }
        }
        if op == ClipOp::Difference && !is_subject {
            ring.reverse();
        }
        out.push(ring);
    }
    Ok(out)
}

/// Shifts `rings` off any coincidences for retry `attempt` (from 1). The
/// shift grows geometrically and turns by the golden angle each time, so
/// no symmetric layout can keep a vertex on a line across retries.
pub(crate) fn nudge(rings: &[Vec<Point2>], attempt: u32, scale: f64) -> Vec<Vec<Point2>> {
    let len = PERTURBATION * scale * 2f64.powi(attempt as i32 - 1);
    let angle = 0.5 + attempt as f64 * 2.399_963_229_728_653;
    let shift = Vector2::new(angle.cos(), angle.sin()) * len;
    rings.iter().map(|r| r.iter().map(|p| p + shift).collect()).collect()
}

fn run(a: &Polygon2, b: &Polygon2, op: ClipOp) -> Vec<Polygon2> {
    let scale = a
        .rings
        .iter()
        .chain(&b.rings)
        .flatten()
        .fold(1.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    for attempt in 0..24 {
        let clip = if attempt == 0 { b.rings.clone() } else { nudge(&b.rings, attempt, scale) };
        if let Ok(rings) = clip_rings(&a.rings, &clip, op) {
            let rings = rings
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|v| match v.origin {
                            // Perturbed clip vertices go back to where they were.
                            Origin::Clip { ring, index } => b.rings[ring][index],
                            _ => v.p,
                        })
                        .collect()
                })
                .collect();
            let mut out = assemble(rings);
            // Perturbed coincident boundaries map back onto each other.
            out.retain(|p| p.area() > super::SLIVER_AREA);
            return out;
        }
    }
    // Unreachable for valid input: the perturbation eventually separates
    // every vertex from every edge.
    Vec::new()
}

/// `a ∩ b` as disjoint polygons.
pub fn intersect(a: &Polygon2, b: &Polygon2) -> Vec<Polygon2> {
    run(a, b, ClipOp::Intersection)
}

/// `a ∖ b` as disjoint polygons, possibly with holes.
pub fn difference(a: &Polygon2, b: &Polygon2) -> Vec<Polygon2> {
    run(a, b, ClipOp::Difference)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(ps: &[Polygon2]) -> f64 {
        ps.iter().map(Polygon2::area).sum()
    }

    fn unit() -> Polygon2 {
        Polygon2::rect(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    #[test]
    fn shifted_squares() {
        let b = Polygon2::rect(Point2::new(0.5, 0.5), Point2::new(1.5, 1.5));
        let r = intersect(&unit(), &b);
        assert_eq!(r.len(), 1);
        assert!((area(&r) - 0.25).abs() < 1e-15);
        assert!((area(&difference(&unit(), &b)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn self_intersection_is_identity() {
        let a = Polygon2::regular(Point2::new(0.3, -0.2), 2.0, 17);
        let r = intersect(&a, &a);
        assert_eq!(r.len(), 1);
        assert!((area(&r) - a.area()).abs() < 1e-12);
        assert!(area(&difference(&a, &a)) < 1e-9);
    }

    #[test]
    fn hole_from_contained_clip() {
        let b = Polygon2::rect(Point2::new(0.25, 0.25), Point2::new(0.75, 0.75));
        let r = difference(&unit(), &b);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].rings.len(), 2);
        assert!((r[0].area() - 0.75).abs() < 1e-15);
        assert!(intersect(&b, &Polygon2::rect(Point2::new(5.0, 5.0), Point2::new(6.0, 6.0))).is_empty());
        let d = difference(&unit(), &Polygon2::rect(Point2::new(5.0, 5.0), Point2::new(6.0, 6.0)));
        assert_eq!(d, vec![unit()]);
    }

    #[test]
    fn split_into_two() {
        let bar = Polygon2::rect(Point2::new(0.4, -1.0), Point2::new(0.6, 2.0));
        let d = difference(&unit(), &bar);
        assert_eq!(d.len(), 2);
        assert!((area(&d) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn crossing_point_is_symmetric() {
        let (a, b) = (Point2::new(0.1, 0.3), Point2::new(2.7, 1.9));
        let (c, d) = (Point2::new(0.0, 2.2), Point2::new(1.9, -0.3));
        let p = crossing_point(&a, &b, &c, &d);
        assert_eq!(p, crossing_point(&d, &c, &b, &a));
        assert_eq!(p, crossing_point(&c, &d, &a, &b));
    }

    #[test]
    fn provenance_of_crossings() {
        let tri = vec![vec![Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), Point2::new(0.0, 4.0)]];
        let sq = vec![vec![Point2::new(1.0, -1.0), Point2::new(2.0, -1.0), Point2::new(2.0, 1.0), Point2::new(1.0, 1.0)]];
        let r = clip_rings(&tri, &sq, ClipOp::Intersection).unwrap();
        assert_eq!(r.len(), 1);
        let crosses = r[0].iter().filter(|v| matches!(v.origin, Origin::Cross { s_edge: 0, .. })).count();
        assert_eq!(crosses, 2);
        assert!(r[0].iter().any(|v| v.origin == Origin::Clip { ring: 0, index: 2 }));
    }
}
