//! Completing a repetition pattern from a few demonstrated placements.

use serde::{Deserialize, Serialize};

use crate::element::TextureElement;
use crate::error::{Error, Result};
use crate::geom2d::{intersect, Polygon2};
use crate::{Point2, Vector2};

/// Share of a footprint that must fall inside the region.
pub const MIN_OVERLAP: f64 = 0.6;
/// Relative spacing error tolerated in extra demonstrations.
pub const SPACING_TOLERANCE: f64 = 0.15;
/// Rotation spread tolerated between demonstrations, radians.
pub const ROTATION_TOLERANCE: f64 = 0.1;
/// A third event this far off the first row (relative to its spacing) starts a grid.
pub const GRID_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementEvent {
    pub anchor: Point2,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seq: u32,
}

fn one() -> f64 {
    1.0
}

impl PlacementEvent {
    pub fn new(anchor: Point2, seq: u32) -> Self {
        PlacementEvent { anchor, rotation: 0.0, scale: 1.0, seq }
    }
}

/// A polyline with cumulative arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct CurvePath {
    points: Vec<Point2>,
    arclength: Vec<f64>,
}

impl TryFrom<Vec<Point2>> for CurvePath {
    type Error = Error;

    fn try_from(points: Vec<Point2>) -> Result<Self> {
        CurvePath::new(points)
    }
}

impl From<CurvePath> for Vec<Point2> {
    fn from(c: CurvePath) -> Self {
        c.points
    }
}

impl CurvePath {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("curve needs at least 2 points".into()));
        }
        let mut arclength = vec![0.0];
        for w in points.windows(2) {
            let d = (w[1] - w[0]).norm();
            if !(d > 1e-9) {
                return Err(Error::InvalidArgument("curve points closer than 1e-9".into()));
            }
            arclength.push(arclength.last().unwrap() + d);
        }
        Ok(CurvePath { points, arclength })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().expect("non-empty")
    }

    fn segment_at(&self, s: f64) -> (usize, f64) {
        let i = self.arclength.partition_point(|&a| a <= s).clamp(1, self.points.len() - 1) - 1;
        let len = self.arclength[i + 1] - self.arclength[i];
        (i, ((s - self.arclength[i]) / len).clamp(0.0, 1.0))
    }

    /// Point at arclength `s`.
    pub fn point_at(&self, s: f64) -> Point2 {
        let (i, f) = self.segment_at(s);
        self.points[i] + (self.points[i + 1] - self.points[i]) * f
    }

    fn segment_angle(&self, i: usize) -> f64 {
        let d = self.points[i + 1] - self.points[i];
        d.y.atan2(d.x)
    }

    /// Tangent angle at a vertex: bisector of the adjacent segments. End
    /// vertices extrapolate the turn of their neighbour.
    fn vertex_angle(&self, i: usize) -> f64 {
        let n = self.points.len();
        if n == 2 {
            return self.segment_angle(0);
        }
        if i == 0 {
            let (a, b) = (self.segment_angle(0), self.segment_angle(1));
            return a - 0.5 * wrap(b - a);
        }
        if i == n - 1 {
            let (a, b) = (self.segment_angle(n - 3), self.segment_angle(n - 2));
            return b + 0.5 * wrap(b - a);
        }
        let (a, b) = (self.segment_angle(i - 1), self.segment_angle(i));
        a + 0.5 * wrap(b - a)
    }

    /// Tangent angle at arclength `s`, interpolated between vertex
    /// bisectors so a finely sampled smooth curve gives its true tangent.
    pub fn tangent_at(&self, s: f64) -> f64 {
        let (i, f) = self.segment_at(s);
        let (a, b) = (self.vertex_angle(i), self.vertex_angle(i + 1));
        a + f * wrap(b - a)
    }

    /// Arclength of the point on the path closest to `p`; ties go to the
    /// earliest segment.
    pub fn project(&self, p: &Point2) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let d = b - a;
            let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            let dist = (a + d * t - p).norm_squared();
            if dist < best.0 {
                best = (dist, self.arclength[i] + t * (self.arclength[i + 1] - self.arclength[i]));
            }
        }
        best.1
    }
}

/// Angle folded into `(-pi, pi]`.
fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = a.rem_euclid(t);
    if r > std::f64::consts::PI {
        r - t
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Row { d1: Vector2 },
    Grid { d1: Vector2, d2: Vector2 },
    Curve { path: CurvePath, spacing: f64 },
}

/// User-adjustable pattern properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternParams {
    /// Spacing along the first direction, mm.
    pub density: f64,
    pub scale: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSuggestion {
    pub generator: Generator,
    /// Demonstrated events (in sequence order) followed by inferred ones.
    pub placements: Vec<PlacementEvent>,
    /// Number of leading demonstrated placements.
    pub demonstrated: usize,
    pub params: PatternParams,
}

impl PatternSuggestion {
    pub fn demonstrated(&self) -> &[PlacementEvent] {
        &self.placements[..self.demonstrated]
    }

    pub fn inferred(&self) -> &[PlacementEvent] {
        &self.placements[self.demonstrated..]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edit {
    Density { value: f64 },
    Scale { value: f64 },
    Rotation { value: f64 },
    MoveAnchor { seq: u32, to: Point2 },
}

/// Where placements may go and what they stamp. Without an element every
/// placement is a point and only its anchor must lie in the region.
#[derive(Debug, Clone, Copy)]
pub struct Layout<'a> {
    pub region: &'a [Polygon2],
    pub element: Option<&'a TextureElement>,
}

impl Layout<'_> {
    /// Whether a placement satisfies the overlap rule.
    pub fn admits(&self, anchor: Point2, rotation: f64, scale: f64) -> bool {
        match self.element {
            None => self.region.iter().any(|r| r.contains(&anchor) && !r.on_boundary(&anchor)),
            Some(e) => {
                let footprint = e.footprint(anchor, rotation, scale);
                let total: f64 = footprint.iter().map(Polygon2::area).sum();
                let inside: f64 = footprint
                    .iter()
                    .flat_map(|f| self.region.iter().map(move |r| (f, r)))
                    .filter(|(f, r)| boxes_overlap(f, r))
                    .flat_map(|(f, r)| intersect(f, r))
                    .map(|p| p.area())
                    .sum();
                inside >= MIN_OVERLAP * total
            }
        }
    }
}

fn boxes_overlap(a: &Polygon2, b: &Polygon2) -> bool {
    let (al, ah) = a.bounds();
    let (bl, bh) = b.bounds();
    al.x <= bh.x && bl.x <= ah.x && al.y <= bh.y && bl.y <= ah.y
}

fn sorted(events: &[PlacementEvent]) -> Vec<PlacementEvent> {
    let mut e = events.to_vec();
    e.sort_by_key(|e| e.seq);
    e
}

/// Infers a row or grid from the demonstrations. Returns `None` for fewer
/// than two events or an irregular demonstration.
pub fn infer_pattern(events: &[PlacementEvent], layout: &Layout) -> Option<PatternSuggestion> {
    let events = sorted(events);
    if events.len() < 2 {
        return None;
    }
    let a1 = events[0].anchor;
    let d1 = events[1].anchor - a1;
    let len1 = d1.norm();
    if !(len1 > 1e-9) {
        return None;
    }
    if events.iter().any(|e| wrap(e.rotation - events[0].rotation).abs() > ROTATION_TOLERANCE) {
        return None;
    }
    let mut d2: Option<Vector2> = None;
    for e in &events[2..] {
        let r = e.anchor - a1;
        match d2 {
            None => {
                let perp = d1.perp(&r).abs() / len1;
                if perp > GRID_THRESHOLD * len1 {
                    d2 = Some(r);
                    continue;
                }
                let t = r.dot(&d1) / (len1 * len1);
                if (t - t.round()).abs() > SPACING_TOLERANCE || t.round() == 0.0 {
                    return None;
                }
            }
            Some(d2v) => {
                let det = d1.perp(&d2v);
                let (k, m) = (r.perp(&d2v) / det, d1.perp(&r) / det);
                if (k - k.round()).abs() > SPACING_TOLERANCE || (m - m.round()).abs() > SPACING_TOLERANCE {
                    return None;
                }
            }
        }
    }
    let generator = match d2 {
        None => Generator::Row { d1 },
        Some(d2) => Generator::Grid { d1, d2 },
    };
    let params = PatternParams { density: len1, scale: events[0].scale, rotation: events[0].rotation };
    Some(generate(generator, events, params, layout))
}

/// Places copies along `path` at the demonstrated spacing, starting at the
/// path point nearest the first event and turning with the tangent.
pub fn complete_along_curve(events: &[PlacementEvent], path: &CurvePath, layout: &Layout) -> Result<PatternSuggestion> {
    let events = sorted(events);
    if events.len() < 2 {
        return Err(Error::InvalidArgument("curve completion needs two placements".into()));
    }
    let spacing = (events[1].anchor - events[0].anchor).norm();
    if spacing > path.length() || !(spacing > 1e-9) {
        return Err(Error::PathTooShort { length: path.length(), spacing });
    }
    let params = PatternParams { density: spacing, scale: events[0].scale, rotation: events[0].rotation };
    Ok(generate(Generator::Curve { path: path.clone(), spacing }, events, params, layout))
}

/// Applies an edit and regenerates the inferred placements.
pub fn adjust(s: &PatternSuggestion, edit: Edit, layout: &Layout) -> Result<PatternSuggestion> {
    let mut events = s.demonstrated().to_vec();
    let mut params = s.params;
    let mut generator = s.generator.clone();
    match edit {
        Edit::Density { value } => {
            if !(value > 0.0) {
                return Err(Error::InvalidArgument(format!("density must be positive, got {value}")));
            }
            let k = value / params.density;
            generator = match generator {
                Generator::Row { d1 } => Generator::Row { d1: d1 * k },
                Generator::Grid { d1, d2 } => Generator::Grid { d1: d1 * k, d2: d2 * k },
                Generator::Curve { path, .. } => Generator::Curve { path, spacing: value },
            };
            params.density = value;
        }
        Edit::Scale { value } => {
            if !(value > 0.0) {
                return Err(Error::InvalidArgument(format!("scale must be positive, got {value}")));
            }
            params.scale = value;
            for e in &mut events {
                e.scale = value;
            }
        }
        Edit::Rotation { value } => {
            let delta = value - params.rotation;
            params.rotation = value;
            for e in &mut events {
                e.rotation += delta;
            }
        }
        Edit::MoveAnchor { seq, to } => {
            let e = events
                .iter_mut()
                .find(|e| e.seq == seq)
                .ok_or_else(|| Error::InvalidArgument(format!("no demonstrated placement with seq {seq}")))?;
            e.anchor = to;
            return match &s.generator {
                Generator::Curve { path, .. } => complete_along_curve(&events, path, layout),
                _ => infer_pattern(&events, layout)
                    .ok_or_else(|| Error::InvalidArgument("moved placement breaks the pattern".into())),
            };
        }
    }
    Ok(generate(generator, events, params, layout))
}

/// Demonstrated events followed by every admissible generator slot not
/// already covered by a demonstration.
fn generate(generator: Generator, events: Vec<PlacementEvent>, params: PatternParams, layout: &Layout) -> PatternSuggestion {
    let a1 = events[0].anchor;
    let mut next_seq = events.iter().map(|e| e.seq).max().unwrap_or(0) + 1;
    let mut out = events.clone();
    let spacing = match &generator {
        Generator::Row { d1 } => d1.norm(),
        Generator::Grid { d1, d2 } => d1.norm().min(d2.norm()),
        Generator::Curve { spacing, .. } => *spacing,
    };
    let covered = |p: &Point2| events.iter().any(|e| (e.anchor - p).norm() < 0.5 * spacing);
    let mut push = |anchor: Point2, rotation: f64, out: &mut Vec<PlacementEvent>| {
        out.push(PlacementEvent { anchor, rotation, scale: params.scale, seq: next_seq });
        next_seq += 1;
    };
    match &generator {
        Generator::Row { d1 } => {
            let mut forward = Vec::new();
            for dir in [1i64, -1] {
                let mut k = if dir > 0 { 1 } else { -1 };
                loop {
                    let p = a1 + d1 * k as f64;
                    if !covered(&p) {
                        if !layout.admits(p, params.rotation, params.scale) {
                            break;
                        }
                        forward.push((k, p));
                    }
                    k += dir;
                    if k.unsigned_abs() > 1_000_000 {
                        break;
                    }
                }
            }
            forward.sort_by_key(|&(k, _)| k);
            for (_, p) in forward {
                push(p, params.rotation, &mut out);
            }
        }
        Generator::Grid { d1, d2 } => {
            for (k, m) in lattice_window(a1, *d1, *d2, layout) {
                let p = a1 + d1 * k as f64 + d2 * m as f64;
                if !covered(&p) && layout.admits(p, params.rotation, params.scale) {
                    push(p, params.rotation, &mut out);
                }
            }
        }
        Generator::Curve { path, spacing } => {
            let s0 = path.project(&a1);
            let t0 = path.tangent_at(s0);
            let mut k = 0usize;
            loop {
                let s = s0 + *spacing * k as f64;
                if s > path.length() + 1e-12 {
                    break;
                }
                let p = path.point_at(s);
                let rotation = params.rotation + wrap(path.tangent_at(s) - t0);
                if !covered(&p) && layout.admits(p, rotation, params.scale) {
                    push(p, rotation, &mut out);
                }
                k += 1;
            }
        }
    }
    PatternSuggestion { generator, demonstrated: events.len(), placements: out, params }
}

/// Lattice indices `(k, m)` whose anchors can reach the region, in
/// row-major order of `m` then `k`.
fn lattice_window(a1: Point2, d1: Vector2, d2: Vector2, layout: &Layout) -> Vec<(i64, i64)> {
    let reach = layout.element.map_or(0.0, |e| e.nominal_size);
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in layout.region {
        let (l, h) = r.bounds();
        lo = lo.inf(&l);
        hi = hi.sup(&h);
    }
    if lo.x > hi.x {
        return Vec::new();
    }
    let det = d1.perp(&d2);
    let (mut kmin, mut kmax, mut mmin, mut mmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for x in [lo.x - reach, hi.x + reach] {
        for y in [lo.y - reach, hi.y + reach] {
            let r = Point2::new(x, y) - a1;
            let (k, m) = (r.perp(&d2) / det, d1.perp(&r) / det);
            kmin = kmin.min(k);
            kmax = kmax.max(k);
            mmin = mmin.min(m);
            mmax = mmax.max(m);
        }
    }
    let (kmin, kmax, mmin, mmax) = (kmin.floor() as i64, kmax.ceil() as i64, mmin.floor() as i64, mmax.ceil() as i64);
    (mmin..=mmax).flat_map(|m| (kmin..=kmax).map(move |k| (k, m))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64, y: f64, seq: u32) -> PlacementEvent {
        PlacementEvent::new(Point2::new(x, y), seq)
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Polygon2> {
        vec![Polygon2::rect(Point2::new(x0, y0), Point2::new(x1, y1))]
    }

    fn anchors(s: &PatternSuggestion) -> Vec<(f64, f64)> {
        s.inferred().iter().map(|p| (p.anchor.x, p.anchor.y)).collect()
    }

    #[test]
    fn row_extrapolates() {
        let region = rect(-0.5, -0.5, 4.5, 0.5);
        let l = Layout { region: &region, element: None };
        let s = infer_pattern(&[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2)], &l).unwrap();
        assert_eq!(anchors(&s), vec![(2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]);
        assert_eq!(s.demonstrated(), &[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2)]);
    }

    #[test]
    fn grid_fills_lattice() {
        let region = rect(-0.5, -0.5, 4.5, 1.5);
        let l = Layout { region: &region, element: None };
        let s = infer_pattern(&[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2), ev(0.0, 1.0, 3)], &l).unwrap();
        assert!(matches!(s.generator, Generator::Grid { .. }));
        assert_eq!(s.inferred().len(), 7);
        assert_eq!(s.placements.len(), 10);
    }

    #[test]
    fn irregular_demo_declined() {
        let region = rect(-0.5, -0.5, 4.5, 0.5);
        let l = Layout { region: &region, element: None };
        assert!(infer_pattern(&[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2), ev(2.7, 0.0, 3)], &l).is_none());
        assert!(infer_pattern(&[ev(0.0, 0.0, 1)], &l).is_none());
        let mut turned = ev(1.0, 0.0, 2);
        turned.rotation = 0.3;
        assert!(infer_pattern(&[ev(0.0, 0.0, 1), turned], &l).is_none());
    }

    #[test]
    fn adjustments() {
        let region = rect(-0.5, -0.5, 4.5, 0.5);
        let l = Layout { region: &region, element: None };
        let s = infer_pattern(&[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2)], &l).unwrap();
        let dense = adjust(&s, Edit::Density { value: 0.5 }, &l).unwrap();
        assert_eq!(dense.placements.len(), 9);
        let back = adjust(&dense, Edit::Density { value: 1.0 }, &l).unwrap();
        assert_eq!(back, s);
        let big = adjust(&s, Edit::Scale { value: 2.0 }, &l).unwrap();
        assert!(big.placements.iter().all(|p| p.scale == 2.0));
        assert_eq!(anchors(&big), anchors(&s));
        let moved = adjust(&s, Edit::MoveAnchor { seq: 2, to: Point2::new(1.5, 0.0) }, &l).unwrap();
        let oracle = infer_pattern(&[ev(0.0, 0.0, 1), ev(1.5, 0.0, 2)], &l).unwrap();
        assert_eq!(moved, oracle);
        assert!(adjust(&s, Edit::Density { value: 0.0 }, &l).is_err());
    }

    #[test]
    fn footprint_overlap_rule() {
        let region = rect(0.0, 0.0, 10.0, 2.0);
        let square = TextureElement::rect(1.0, 1.0);
        let l = Layout { region: &region, element: Some(&square) };
        assert!(l.admits(Point2::new(0.5, 1.0), 0.0, 1.0));
        assert!(l.admits(Point2::new(0.1, 1.0), 0.0, 1.0));
        assert!(!l.admits(Point2::new(-0.1, 1.0), 0.0, 1.0));
    }

    #[test]
    fn semicircle_curve() {
        let r = 3.0;
        let n = 20000;
        let pts: Vec<Point2> = (0..=n)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let path = CurvePath::new(pts).unwrap();
        let region = rect(-10.0, -10.0, 10.0, 10.0);
        let l = Layout { region: &region, element: None };
        // Second event one unit of arclength along.
        let e2 = PlacementEvent::new(path.point_at(1.0), 2);
        let chord = (e2.anchor - Point2::new(r, 0.0)).norm();
        let s = complete_along_curve(&[ev(r, 0.0, 1), e2], &path, &l).unwrap();
        assert_eq!(s.placements.len(), ((std::f64::consts::PI * r) / chord).floor() as usize + 1);
        for p in s.inferred() {
            let t = p.anchor.y.atan2(p.anchor.x);
            assert!((p.rotation - t).abs() < 1e-6);
        }
        let short = CurvePath::new(vec![Point2::origin(), Point2::new(0.5, 0.0)]).unwrap();
        assert!(matches!(
            complete_along_curve(&[ev(0.0, 0.0, 1), ev(1.0, 0.0, 2)], &short, &l),
            Err(Error::PathTooShort { .. })
        ));
    }
}
