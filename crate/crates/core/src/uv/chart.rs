use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom2d::orient2d;
use crate::mesh::{EdgeKey, TriMesh};
use crate::{Point2, Point3};

/// Barycentric slack accepted by [`UvChart::uv_to_3d`].
pub const BARY_TOLERANCE: f64 = 1e-9;

/// Per-face UV triangles in millimetres. Face `i` of the chart is face `i`
/// of the mesh it was computed for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UvChart {
    pub uv: Vec<[Point2; 3]>,
    /// Original-mesh edges that were split open, `(lo, hi)`.
    pub seam_edges: Vec<EdgeKey>,
    /// `|area_uv / area_3d - 1|` per face.
    pub area_distortion: Vec<f64>,
    #[serde(skip)]
    grid: OnceLock<Grid>,
}

impl PartialEq for UvChart {
    fn eq(&self, other: &Self) -> bool {
        self.uv == other.uv && self.seam_edges == other.seam_edges && self.area_distortion == other.area_distortion
    }
}

impl UvChart {
    pub fn new(uv: Vec<[Point2; 3]>, seam_edges: Vec<EdgeKey>, mesh: &TriMesh) -> Result<Self> {
        if uv.len() != mesh.num_faces() {
            return Err(Error::InvalidArgument(format!("{} uv triangles for {} faces", uv.len(), mesh.num_faces())));
        }
        let area_distortion = uv
            .iter()
            .enumerate()
            .map(|(f, t)| {
                let a3 = mesh.face_area(f);
                if a3 > 0.0 {
                    (signed_area(t) / a3 - 1.0).abs()
                } else {
                    0.0
                }
            })
            .collect();
        Ok(UvChart { uv, seam_edges, area_distortion, grid: OnceLock::new() })
    }

    pub fn num_faces(&self) -> usize {
        self.uv.len()
    }

    pub fn max_distortion(&self) -> f64 {
        self.area_distortion.iter().copied().fold(0.0, f64::max)
    }

    /// Relative error of total UV area against total surface area.
    pub fn total_area(&self) -> f64 {
        self.uv.iter().map(signed_area).sum()
    }

    pub fn flipped_faces(&self) -> Vec<usize> {
        (0..self.uv.len()).filter(|&f| orient2d(&self.uv[f][0], &self.uv[f][1], &self.uv[f][2]) <= 0.0).collect()
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in &self.uv {
            for p in t {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        (lo, hi)
    }

    /// Barycentric coordinates of `p` in the UV triangle of `face`.
    pub fn barycentric(&self, face: usize, p: &Point2) -> [f64; 3] {
        barycentric(&self.uv[face], p)
    }

    /// Maps a chart point inside `face` to the surface.
    pub fn uv_to_3d(&self, mesh: &TriMesh, face: usize, p: &Point2) -> Result<Point3> {
        let l = self.barycentric(face, p);
        if l.iter().any(|&x| !(-BARY_TOLERANCE..=1.0 + BARY_TOLERANCE).contains(&x)) {
            return Err(Error::OutsideFace { face, u: p.x, v: p.y });
        }
        Ok(interpolate(&mesh.corner_positions(face), l))
    }

    /// Lowest-index face whose UV triangle contains `p`, boundary included.
    pub fn locate(&self, p: &Point2) -> Option<usize> {
        let grid = self.grid.get_or_init(|| Grid::build(&self.uv));
        grid.candidates(p)?
            .iter()
            .copied()
            .find(|&f| contains(&self.uv[f], p))
    }
}

pub fn locate_in_chart(chart: &UvChart, p: &Point2) -> Option<usize> {
    chart.locate(p)
}

pub fn uv_to_3d(chart: &UvChart, mesh: &TriMesh, face: usize, p: &Point2) -> Result<Point3> {
    chart.uv_to_3d(mesh, face, p)
}

pub(crate) fn signed_area(t: &[Point2; 3]) -> f64 {
    0.5 * ((t[1] - t[0]).perp(&(t[2] - t[0])))
}

/// Inclusive containment with exact orientation tests; the triangle must be
/// counter-clockwise.
pub(crate) fn contains(t: &[Point2; 3], p: &Point2) -> bool {
    orient2d(&t[0], &t[1], p) >= 0.0 && orient2d(&t[1], &t[2], p) >= 0.0 && orient2d(&t[2], &t[0], p) >= 0.0
}

pub(crate) fn barycentric(t: &[Point2; 3], p: &Point2) -> [f64; 3] {
    let area = (t[1] - t[0]).perp(&(t[2] - t[0]));
    let l1 = (p - t[0]).perp(&(t[2] - t[0])) / area;
    let l2 = (t[1] - t[0]).perp(&(p - t[0])) / area;
    [1.0 - l1 - l2, l1, l2]
}

pub(crate) fn interpolate(p: &[Point3; 3], l: [f64; 3]) -> Point3 {
    // Exact at the corners: a unit weight reproduces the vertex bit for bit.
    for k in 0..3 {
        if l[k] == 1.0 {
            return p[k];
        }
    }
    // Offsets from one corner keep points of an axis-aligned face on its plane exactly.
    p[0] + (p[1] - p[0]) * l[1] + (p[2] - p[0]) * l[2]
}

/// Uniform bucket grid over face bounding boxes, face ids ascending per cell.
#[derive(Debug, Clone)]
struct Grid {
    lo: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Grid {
    fn build(uv: &[[Point2; 3]]) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for t in uv {
            for p in t {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        let ext = hi - lo;
        let n = (uv.len().max(1) as f64).sqrt().ceil();
        let cell = (ext.x.max(ext.y) / n).max(1e-9);
        let nx = ((ext.x / cell).floor() as usize + 1).min(4096);
        let ny = ((ext.y / cell).floor() as usize + 1).min(4096);
        let mut g = Grid { lo, cell, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for (f, t) in uv.iter().enumerate() {
            let (a, b) = (t[0].inf(&t[1]).inf(&t[2]), t[0].sup(&t[1]).sup(&t[2]));
            let (i0, j0) = g.cell_of(&a);
            let (i1, j1) = g.cell_of(&b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    g.cells[j * nx + i].push(f);
                }
            }
        }
        g
    }

    fn cell_of(&self, p: &Point2) -> (usize, usize) {
        let i = ((p.x - self.lo.x) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.lo.y) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn candidates(&self, p: &Point2) -> Option<&[usize]> {
        let eps = self.cell * 1e-9;
        if p.x < self.lo.x - eps || p.y < self.lo.y - eps {
            return None;
        }
        let (i, j) = self.cell_of(p);
        // A point on a cell border may belong to faces registered only in the
        // neighbouring cell, but face bounding boxes are inclusive and the
        // floor() mapping is monotone, so the containing face is always here.
        Some(&self.cells[j * self.nx + i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn square_chart() -> (TriMesh, UvChart) {
        let m = primitives::grid_plane(1, 1, 1.0, 1.0);
        let uv = (0..m.num_faces()).map(|f| m.corner_positions(f).map(|p| Point2::new(p.x, p.y))).collect();
        let c = UvChart::new(uv, Vec::new(), &m).unwrap();
        (m, c)
    }

    #[test]
    fn corner_and_centroid_map_exactly() {
        let (m, c) = square_chart();
        for f in 0..2 {
            let t = c.uv[f];
            let p = m.corner_positions(f);
            assert_eq!(c.uv_to_3d(&m, f, &t[0]).unwrap(), p[0]);
            let g = Point2::from((t[0].coords + t[1].coords + t[2].coords) / 3.0);
            let q = c.uv_to_3d(&m, f, &g).unwrap();
            assert!((q - Point3::from((p[0].coords + p[1].coords + p[2].coords) / 3.0)).norm() < 1e-15);
        }
        assert!(c.uv_to_3d(&m, 0, &Point2::new(-0.1, 0.5)).is_err());
    }

    #[test]
    fn diagonal_goes_to_lower_face() {
        let (_, c) = square_chart();
        assert_eq!(c.locate(&Point2::new(0.5, 0.5)), Some(0));
        assert_eq!(c.locate(&Point2::new(0.75, 0.25)), Some(0));
        assert_eq!(c.locate(&Point2::new(0.25, 0.75)), Some(1));
        assert_eq!(c.locate(&Point2::new(1.5, 0.5)), None);
    }

    #[test]
    fn serde_skips_grid() {
        let (_, c) = square_chart();
        c.locate(&Point2::new(0.1, 0.1));
        let s = serde_json::to_string(&c).unwrap();
        let back: UvChart = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
