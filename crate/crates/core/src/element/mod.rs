//! Texture elements: the 2D outline stamped onto the surface, loaded from
//! a subset of SVG.

mod svg;

pub use svg::{load_element, load_element_with, CHORD_DEVIATION, MIN_CIRCLE_SEGMENTS, MIN_CURVE_SEGMENTS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::{assemble, ring_area2, Polygon2};
use crate::{Point2, Vector2};

/// A planar outline centred on its area centroid. Several disjoint parts
/// are allowed; each part may have holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureElement {
    pub parts: Vec<Polygon2>,
    /// Bounding-box diagonal in mm.
    pub nominal_size: f64,
}

impl TextureElement {
    /// Centres `parts` on their joint centroid.
    pub fn new(parts: Vec<Polygon2>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Svg("no closed shape".into()));
        }
        let area: f64 = parts.iter().map(Polygon2::area).sum();
        if !(area > 0.0) {
            return Err(Error::Svg("shape has no area".into()));
        }
        let c = parts.iter().map(|p| p.centroid().coords * p.area()).sum::<Vector2>() / area;
        let parts: Vec<Polygon2> = parts.iter().map(|p| p.transformed(1.0, 0.0, -c)).collect();
        let (mut lo, mut hi) = parts[0].bounds();
        for p in &parts[1..] {
            let (l, h) = p.bounds();
            lo = lo.inf(&l);
            hi = hi.sup(&h);
        }
        Ok(TextureElement { parts, nominal_size: (hi - lo).norm() })
    }

    /// Loose rings (any orientation) grouped into polygons by even-odd nesting.
    pub fn from_rings(rings: Vec<Vec<Point2>>) -> Result<Self> {
        let rings: Vec<Vec<Point2>> = rings
            .into_iter()
            .map(|r| Polygon2::from_outer(r).map(|p| p.rings.into_iter().next().expect("outer ring")))
            .collect::<Result<_>>()?;
        // Nesting depth decides the role; orientation follows from it.
        let oriented: Vec<Vec<Point2>> = rings
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let depth = rings
                    .iter()
                    .enumerate()
                    .filter(|&(j, o)| j != i && crate::geom2d::ring_contains(o, &r[0]))
                    .count();
                let mut r = r.clone();
                if (depth % 2 == 0) != (ring_area2(&r) > 0.0) {
                    r.reverse();
                }
                r
            })
            .collect();
        let parts = assemble(oriented);
        let el = Self::new(parts)?;
        if el.parts.iter().any(Polygon2::self_intersects) || parts_touch(&el.parts) {
            return Err(Error::Svg("outline intersects itself".into()));
        }
        Ok(el)
    }

    /// A regular `n`-gon approximating a circle.
    pub fn circle(radius: f64, n: usize) -> Self {
        Self::new(vec![Polygon2::regular(Point2::origin(), radius, n)]).expect("positive radius")
    }

    pub fn rect(width: f64, height: f64) -> Self {
        let h = Vector2::new(width, height) / 2.0;
        Self::new(vec![Polygon2::rect(Point2::from(-h), Point2::from(h))]).expect("positive size")
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(Polygon2::area).sum()
    }

    /// Every ring of every part.
    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point2>> {
        self.parts.iter().flat_map(|p| &p.rings)
    }

    /// The outline scaled, rotated and moved to `anchor`.
    pub fn footprint(&self, anchor: Point2, rotation: f64, scale: f64) -> Vec<Polygon2> {
        self.parts.iter().map(|p| p.transformed(scale, rotation, anchor.coords)).collect()
    }
}

fn parts_touch(parts: &[Polygon2]) -> bool {
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let all = Polygon2 { rings: parts[i].rings.iter().chain(&parts[j].rings).cloned().collect() };
            if all.self_intersects() {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_and_sized() {
        let e = TextureElement::new(vec![Polygon2::rect(Point2::new(10.0, 5.0), Point2::new(14.0, 9.0))]).unwrap();
        assert!(e.parts[0].centroid().coords.norm() < 1e-12);
        assert!((e.nominal_size - 32f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nested_rings_become_holes() {
        let ring = |r: f64| Polygon2::regular(Point2::new(3.0, 3.0), r, 32).rings.remove(0);
        let e = TextureElement::from_rings(vec![ring(1.0), ring(2.0), ring(0.5)]).unwrap();
        assert_eq!(e.parts.len(), 2);
        let outer = e.parts.iter().find(|p| p.rings.len() == 2).unwrap();
        assert!(outer.holes()[0].len() == 32);
        assert!(e.area() > 0.0);
    }
}
