use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::Matrix3;
use svgtypes::{Length, LengthUnit, PointsParser, SimplePathSegment, SimplifyingPathParser, Transform, ViewBox};

use super::TextureElement;
use crate::error::{Error, Result};
use crate::Point2;

/// Maximum distance between a curve and its polyline, in mm.
pub const CHORD_DEVIATION: f64 = 0.05;
/// Floor on segments for a full circle or ellipse.
pub const MIN_CIRCLE_SEGMENTS: usize = 64;
/// Floor on segments for each Bézier piece (arcs arrive as quarter cubics).
pub const MIN_CURVE_SEGMENTS: usize = 16;

const SKIPPED: &[&str] = &["defs", "clipPath", "mask", "symbol", "pattern", "marker", "title", "desc", "metadata", "style"];

/// Parses an SVG document into a centred element using the default chord
/// deviation.
pub fn load_element(bytes: &[u8]) -> Result<TextureElement> {
    load_element_with(bytes, CHORD_DEVIATION)
}

pub fn load_element_with(bytes: &[u8], deviation: f64) -> Result<TextureElement> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Svg(format!("not UTF-8: {e}")))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Svg(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" {
        return Err(Error::Svg(format!("root element is <{}>, expected <svg>", root.tag_name().name())));
    }
    // User units are mm unless the root maps a viewBox onto an absolute width.
    let mut base = Matrix3::identity();
    if let (Some(vb), Some(w)) = (root.attribute("viewBox"), root.attribute("width")) {
        let vb = ViewBox::from_str(vb).map_err(|e| Error::Svg(format!("viewBox: {e}")))?;
        let w = Length::from_str(w).map_err(|e| Error::Svg(format!("width: {e}")))?;
        if let Some(mm) = absolute_mm(&w) {
            let s = mm / vb.w;
            base = Matrix3::new(s, 0.0, -vb.x * s, 0.0, s, -vb.y * s, 0.0, 0.0, 1.0);
        }
    }
    let mut rings = Vec::new();
    walk(root, base, deviation, &mut rings)?;
    if rings.is_empty() {
        return Err(Error::Svg("no closed shape".into()));
    }
    // SVG's y axis points down; the chart's points up.
    let rings = rings.into_iter().map(|r| r.into_iter().map(|p: Point2| Point2::new(p.x, -p.y)).collect()).collect();
    TextureElement::from_rings(rings)
}

fn absolute_mm(l: &Length) -> Option<f64> {
    let k = match l.unit {
        LengthUnit::Mm => 1.0,
        LengthUnit::Cm => 10.0,
        LengthUnit::In => 25.4,
        LengthUnit::Pt => 25.4 / 72.0,
        LengthUnit::Pc => 25.4 / 6.0,
        _ => return None,
    };
    Some(l.number * k)
}

fn attr(node: roxmltree::Node, name: &str) -> Result<f64> {
    match node.attribute(name) {
        None => Ok(0.0),
        Some(s) => {
            let l = Length::from_str(s).map_err(|e| Error::Svg(format!("{name}=\"{s}\": {e}")))?;
            Ok(absolute_mm(&l).unwrap_or(l.number))
        }
    }
}

fn matrix(t: &Transform) -> Matrix3<f64> {
    Matrix3::new(t.a, t.c, t.e, t.b, t.d, t.f, 0.0, 0.0, 1.0)
}

fn apply(m: &Matrix3<f64>, x: f64, y: f64) -> Point2 {
    Point2::new(m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)], m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)])
}

/// Largest stretch factor of the linear part.
fn max_stretch(m: &Matrix3<f64>) -> f64 {
    let l = m.fixed_view::<2, 2>(0, 0).into_owned();
    l.singular_values().max().max(1e-12)
}

fn walk(node: roxmltree::Node, parent: Matrix3<f64>, deviation: f64, out: &mut Vec<Vec<Point2>>) -> Result<()> {
    let mut m = parent;
    if let Some(t) = node.attribute("transform") {
        let t = Transform::from_str(t).map_err(|e| Error::Svg(format!("transform: {e}")))?;
        m *= matrix(&t);
    }
    let tol = deviation / max_stretch(&m);
    let local: Vec<Vec<(f64, f64)>> = match node.tag_name().name() {
        "path" => node.attribute("d").map(|d| path_rings(d, tol)).transpose()?.unwrap_or_default(),
        "rect" => rect(node, tol)?.into_iter().collect(),
        "circle" => {
            let r = attr(node, "r")?;
            ellipse(attr(node, "cx")?, attr(node, "cy")?, r, r, tol).into_iter().collect()
        }
        "ellipse" => ellipse(attr(node, "cx")?, attr(node, "cy")?, attr(node, "rx")?, attr(node, "ry")?, tol)
            .into_iter()
            .collect(),
        // A filled polyline closes like a polygon.
        "polygon" | "polyline" => vec![PointsParser::from(node.attribute("points").unwrap_or("")).collect()],
        _ => Vec::new(),
    };
    for ring in local {
        if ring.len() >= 3 {
            out.push(ring.into_iter().map(|(x, y)| apply(&m, x, y)).collect());
        }
    }
    for child in node.children().filter(|c| c.is_element()) {
        if !SKIPPED.contains(&child.tag_name().name()) {
            walk(child, m, deviation, out)?;
        }
    }
    Ok(())
}

fn circle_segments(radius: f64, tol: f64) -> usize {
    let by_deviation = if tol < radius { (PI / (1.0 - tol / radius).acos()).ceil() as usize } else { 3 };
    by_deviation.max(MIN_CIRCLE_SEGMENTS)
}

fn ellipse(cx: f64, cy: f64, rx: f64, ry: f64, tol: f64) -> Option<Vec<(f64, f64)>> {
    if rx <= 0.0 || ry <= 0.0 {
        return None;
    }
    let n = circle_segments(rx.max(ry), tol);
    Some(
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                (cx + rx * t.cos(), cy + ry * t.sin())
            })
            .collect(),
    )
}

fn rect(node: roxmltree::Node, tol: f64) -> Result<Option<Vec<(f64, f64)>>> {
    let (x, y, w, h) = (attr(node, "x")?, attr(node, "y")?, attr(node, "width")?, attr(node, "height")?);
    if w <= 0.0 || h <= 0.0 {
        return Ok(None);
    }
    let (mut rx, mut ry) = (attr(node, "rx")?, attr(node, "ry")?);
    if node.attribute("ry").is_none() {
        ry = rx;
    }
    if node.attribute("rx").is_none() {
        rx = ry;
    }
    let (rx, ry) = (rx.clamp(0.0, w / 2.0), ry.clamp(0.0, h / 2.0));
    if rx == 0.0 || ry == 0.0 {
        return Ok(Some(vec![(x, y), (x + w, y), (x + w, y + h), (x, y + h)]));
    }
    // Rounded corners: quarter ellipses at the four corners.
    let q = circle_segments(rx.max(ry), tol) / 4;
    let mut ring = Vec::new();
    let corners = [(x + w - rx, y + ry, -0.5), (x + w - rx, y + h - ry, 0.0), (x + rx, y + h - ry, 0.5), (x + rx, y + ry, 1.0)];
    for (cx, cy, start) in corners {
        for i in 0..=q {
            let t = PI * (start + 0.5 * i as f64 / q as f64);
            ring.push((cx + rx * t.cos(), cy + ry * t.sin()));
        }
    }
    Ok(Some(ring))
}

/// Closed subpaths of a path as polylines. Open subpaths are skipped.
fn path_rings(d: &str, tol: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut rings = Vec::new();
    let mut cur: Vec<(f64, f64)> = Vec::new();
    let mut closed = false;
    let finish = |cur: &mut Vec<(f64, f64)>, closed: bool, rings: &mut Vec<Vec<(f64, f64)>>| {
        let ring = std::mem::take(cur);
        if ring.len() < 3 {
            return;
        }
        let (f, l) = (ring[0], ring[ring.len() - 1]);
        let touches = (f.0 - l.0).hypot(f.1 - l.1) <= 1e-9;
        if closed || touches {
            rings.push(ring);
        }
    };
    for seg in SimplifyingPathParser::from(d) {
        let seg = seg.map_err(|e| Error::Svg(format!("path data: {e}")))?;
        let last = cur.last().copied().unwrap_or((0.0, 0.0));
        match seg {
            SimplePathSegment::MoveTo { x, y } => {
                finish(&mut cur, closed, &mut rings);
                closed = false;
                cur.push((x, y));
            }
            SimplePathSegment::LineTo { x, y } => cur.push((x, y)),
            SimplePathSegment::CurveTo { x1, y1, x2, y2, x, y } => {
                let p = [last, (x1, y1), (x2, y2), (x, y)];
                let m = second_difference(p[0], p[1], p[2]).max(second_difference(p[1], p[2], p[3]));
                let n = ((0.75 * m / tol).sqrt().ceil() as usize).max(MIN_CURVE_SEGMENTS);
                for i in 1..=n {
                    let t = i as f64 / n as f64;
                    let s = 1.0 - t;
                    let (a, b, c, e) = (s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t);
                    cur.push((
                        a * p[0].0 + b * p[1].0 + c * p[2].0 + e * p[3].0,
                        a * p[0].1 + b * p[1].1 + c * p[2].1 + e * p[3].1,
                    ));
                }
            }
            SimplePathSegment::Quadratic { x1, y1, x, y } => {
                let p = [last, (x1, y1), (x, y)];
                let n = ((second_difference(p[0], p[1], p[2]) / (4.0 * tol)).sqrt().ceil() as usize).max(MIN_CURVE_SEGMENTS);
                for i in 1..=n {
                    let t = i as f64 / n as f64;
                    let s = 1.0 - t;
                    let (a, b, c) = (s * s, 2.0 * s * t, t * t);
                    cur.push((a * p[0].0 + b * p[1].0 + c * p[2].0, a * p[0].1 + b * p[1].1 + c * p[2].1));
                }
            }
            SimplePathSegment::ClosePath => {
                closed = true;
                let start = cur.first().copied();
                finish(&mut cur, closed, &mut rings);
                closed = false;
                // A following segment without MoveTo starts at the closed subpath's start.
                if let Some(s) = start {
                    cur.push(s);
                }
            }
        }
    }
    finish(&mut cur, closed, &mut rings);
    Ok(rings)
}

fn second_difference(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (a.0 - 2.0 * b.0 + c.0).hypot(a.1 - 2.0 * b.1 + c.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn svg(body: &str) -> Vec<u8> {
        format!(r#"<svg xmlns="http://www.w3.org/2000/svg">{body}</svg>"#).into_bytes()
    }

    #[test]
    fn circle_is_a_64_gon() {
        let e = load_element(&svg(r#"<circle cx="5" cy="5" r="2"/>"#)).unwrap();
        assert_eq!(e.parts.len(), 1);
        assert_eq!(e.parts[0].rings[0].len(), 64);
        assert!((e.area() / (PI * 4.0) - 1.0).abs() < 0.005);
        assert!(e.parts[0].centroid().coords.norm() < 1e-9);
    }

    #[test]
    fn rect_is_exact() {
        let e = load_element(&svg(r#"<rect x="1" y="2" width="4" height="4"/>"#)).unwrap();
        assert_eq!(e.parts[0].rings[0].len(), 4);
        assert!((e.nominal_size - 32f64.sqrt()).abs() < 1e-12);
        assert!((e.area() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_has_a_hole() {
        let d = "M 0 -3 A 3 3 0 1 0 0 3 A 3 3 0 1 0 0 -3 Z M 0 -1 A 1 1 0 1 0 0 1 A 1 1 0 1 0 0 -1 Z";
        let e = load_element(&svg(&format!(r#"<path d="{d}"/>"#))).unwrap();
        assert_eq!(e.parts.len(), 1);
        assert_eq!(e.parts[0].rings.len(), 2);
        assert!((e.area() / (PI * 8.0) - 1.0).abs() < 0.005);
    }

    #[test]
    fn polyline_fills_like_polygon() {
        let line = load_element(br#"<svg xmlns="http://www.w3.org/2000/svg"><polyline points="0,0 4,0 4,3"/></svg>"#).unwrap();
        assert!((line.area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn transforms_and_units_apply() {
        let e = load_element(&svg(r#"<g transform="scale(2)"><rect width="1" height="3" transform="rotate(90)"/></g>"#)).unwrap();
        assert!((e.area() - 12.0).abs() < 1e-9);
        let doc = br#"<svg xmlns="http://www.w3.org/2000/svg" width="10mm" height="10mm" viewBox="0 0 100 100"><rect width="50" height="20"/></svg>"#;
        assert!((load_element(doc).unwrap().area() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn halving_deviation_barely_moves_area() {
        let d = r#"<path d="M0 0 C 10 -8 20 8 30 0 Q 15 30 0 0 Z"/>"#;
        let a = load_element_with(&svg(d), CHORD_DEVIATION).unwrap().area();
        let b = load_element_with(&svg(d), CHORD_DEVIATION / 2.0).unwrap().area();
        assert!(((a - b) / b).abs() < 0.005);
    }

    #[test]
    fn errors() {
        assert!(load_element(&svg(r#"<path d="M0 0 L 5 5"/>"#)).is_err());
        assert!(load_element(&svg(r#"<path d="M0 0 L 4 4 L 4 0 L 0 4 Z"/>"#)).is_err());
        assert!(load_element(b"not xml").is_err());
    }
}
