//! Axis-aligned bounding volume hierarchy over a subset of mesh faces.

use super::TriMesh;
use crate::{Point3, Vector3};

const LEAF: usize = 4;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Point3,
    hi: Point3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb { lo: Point3::from([f64::INFINITY; 3]), hi: Point3::from([f64::NEG_INFINITY; 3]) }
    }

    fn grow(&mut self, p: &Point3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn dist2(&self, p: &Point3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            d += e * e;
        }
        d
    }

    /// Slab test; returns the entry parameter if the ray meets the box before `tmax`.
    fn ray_entry(&self, o: &Point3, inv: &Vector3, tmax: f64) -> Option<f64> {
        let (mut t0, mut t1) = (0.0f64, tmax);
        for k in 0..3 {
            let a = (self.lo[k] - o[k]) * inv[k];
            let b = (self.hi[k] - o[k]) * inv[k];
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray lies in the slab plane; keep it.
            if !a.is_nan() {
                t0 = t0.max(a);
            }
            if !b.is_nan() {
                t1 = t1.min(b);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: `start..start + count` into `order`; inner: children at `left` and `left + 1`.
    start: usize,
    count: usize,
    left: usize,
}

/// Ray and nearest-point queries against mesh triangles.
#[derive(Debug, Clone)]
pub struct FaceBvh {
    tris: Vec<[Point3; 3]>,
    ids: Vec<usize>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// A ray or nearest-point hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub face: usize,
    /// Ray parameter or squared distance depending on the query.
    pub t: f64,
    pub point: Point3,
}

impl FaceBvh {
    /// Tree over all faces.
    pub fn new(mesh: &TriMesh) -> Self {
        Self::over(mesh, 0..mesh.num_faces())
    }

    /// Tree over the given faces; hits report the original face index.
    pub fn over(mesh: &TriMesh, faces: impl IntoIterator<Item = usize>) -> Self {
        let ids: Vec<usize> = faces.into_iter().collect();
        let tris: Vec<[Point3; 3]> = ids.iter().map(|&f| mesh.corner_positions(f)).collect();
        let mut bvh = FaceBvh { order: (0..ids.len()).collect(), tris, ids, nodes: Vec::new() };
        if !bvh.ids.is_empty() {
            bvh.nodes.push(Node { bounds: Aabb::empty(), start: 0, count: bvh.ids.len(), left: 0 });
            bvh.split(0);
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn centroid(&self, i: usize) -> Point3 {
        let [a, b, c] = self.tris[i];
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    fn split(&mut self, node: usize) {
        let Node { start, count, .. } = self.nodes[node];
        let mut bounds = Aabb::empty();
        let mut cbox = Aabb::empty();
        for &i in &self.order[start..start + count] {
            for p in &self.tris[i] {
                bounds.grow(p);
            }
            cbox.grow(&self.centroid(i));
        }
        self.nodes[node].bounds = bounds;
        if count <= LEAF {
            return;
        }
        let ext = cbox.hi - cbox.lo;
        let axis = ext.imax();
        if ext[axis] <= 0.0 {
            return;
        }
        let mid = count / 2;
        let tris = &self.tris;
        let key = |i: &usize| {
            let [a, b, c] = tris[*i];
            a[axis] + b[axis] + c[axis]
        };
        self.order[start..start + count]
            .select_nth_unstable_by(mid, |x, y| key(x).total_cmp(&key(y)));
        let left = self.nodes.len();
        self.nodes[node].left = left;
        self.nodes[node].count = 0;
        self.nodes.push(Node { bounds: Aabb::empty(), start, count: mid, left: 0 });
        self.nodes.push(Node { bounds: Aabb::empty(), start: start + mid, count: count - mid, left: 0 });
        self.split(left);
        self.split(left + 1);
    }

    /// Closest hit along `origin + t * dir` for `t` in `[0, tmax]`, ignoring
    /// faces for which `skip` holds.
    pub fn ray(&self, origin: &Point3, dir: &Vector3, tmax: f64, skip: impl Fn(usize) -> bool) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|x| 1.0 / x);
        let mut best: Option<Hit> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let limit = best.map_or(tmax, |h| h.t);
            if node.bounds.ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            if node.count == 0 {
                stack.push(node.left);
                stack.push(node.left + 1);
                continue;
            }
            for &i in &self.order[node.start..node.start + node.count] {
                if skip(self.ids[i]) {
                    continue;
                }
                if let Some(t) = ray_triangle(origin, dir, &self.tris[i]) {
                    if t <= best.map_or(tmax, |h| h.t) {
                        best = Some(Hit { face: self.ids[i], t, point: origin + dir * t });
                    }
                }
            }
        }
        best
    }

    /// Nearest surface point; `t` holds the squared distance. Ties go to the
    /// lowest face index.
    pub fn nearest(&self, p: &Point3) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Hit> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.dist2(p) > best.map_or(f64::INFINITY, |h| h.t) {
                continue;
            }
            if node.count == 0 {
                stack.push(node.left);
                stack.push(node.left + 1);
                continue;
            }
            for &i in &self.order[node.start..node.start + node.count] {
                let q = closest_on_triangle(p, &self.tris[i]);
                let d = (q - p).norm_squared();
                let better = match best {
                    None => true,
                    Some(h) => d < h.t || (d == h.t && self.ids[i] < h.face),
                };
                if better {
                    best = Some(Hit { face: self.ids[i], t: d, point: q });
                }
            }
        }
        best
    }
}

/// Möller–Trumbore; returns `t >= 0` for hits including edges.
pub(crate) fn ray_triangle(o: &Point3, d: &Vector3, tri: &[Point3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    let scale = e1.norm() * e2.norm() * d.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - tri[0];
    let u = s.dot(&p) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some(t)
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub(crate) fn closest_on_triangle(p: &Point3, t: &[Point3; 3]) -> Point3 {
    let (a, b, c) = (t[0], t[1], t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn ray_through_cube_hits_near_face() {
        let cube = primitives::box_mesh([2.0, 2.0, 2.0], [3, 3, 3]);
        let bvh = FaceBvh::new(&cube);
        let hit = bvh.ray(&Point3::new(0.1, 0.2, 5.0), &-Vector3::z(), 100.0, |_| false).unwrap();
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert!(cube.face_cross(hit.face).z > 0.0);
        assert!(bvh.ray(&Point3::new(0.1, 0.2, 5.0), &Vector3::z(), 100.0, |_| false).is_none());
    }

    #[test]
    fn nearest_agrees_with_scan() {
        let s = primitives::icosphere(3.0, 2);
        let bvh = FaceBvh::new(&s);
        for k in 0..50 {
            let t = k as f64 * 0.37;
            let p = Point3::new(4.0 * t.cos(), 3.0 * t.sin(), (t * 1.3).sin() * 5.0);
            let hit = bvh.nearest(&p).unwrap();
            let scan = (0..s.num_faces())
                .map(|f| (closest_on_triangle(&p, &s.corner_positions(f)) - p).norm_squared())
                .fold(f64::INFINITY, f64::min);
            assert!((hit.t - scan).abs() < 1e-12);
        }
    }
}
