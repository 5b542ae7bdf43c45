//! OBJ and STL reading and writing.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::TriMesh;
use crate::error::{Error, Result};
use crate::Point3;

/// Vertices of an STL closer than this (mm) are welded into one.
pub const STL_WELD_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    StlBinary,
    Obj,
}

pub fn load_mesh(bytes: &[u8], format: MeshFormat) -> Result<TriMesh> {
    match format {
        MeshFormat::Obj => parse_obj(bytes),
        MeshFormat::Stl => parse_stl(bytes),
    }
}

pub fn export_mesh(mesh: &TriMesh, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::StlBinary => write_stl(mesh),
        ExportFormat::Obj => write_obj(mesh).into_bytes(),
    }
}

fn parse_obj(bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("obj", e.to_string()))?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    let mut polygon = Vec::with_capacity(4);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let t = tok
                        .next()
                        .ok_or_else(|| Error::parse("obj", format!("line {}: vertex needs 3 coordinates", lineno + 1)))?;
                    *slot = t
                        .parse()
                        .map_err(|_| Error::parse("obj", format!("line {}: bad coordinate {t:?}", lineno + 1)))?;
                }
                positions.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                polygon.clear();
                for t in tok {
                    let idx = t.split('/').next().unwrap_or("");
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| Error::parse("obj", format!("line {}: bad face index {t:?}", lineno + 1)))?;
                    // 1-based; negative indices count back from the latest vertex.
                    let resolved = match i {
                        0 => None,
                        i if i > 0 => Some(i as usize - 1),
                        i => (positions.len() as i64 + i).try_into().ok(),
                    };
                    let v = resolved
                        .ok_or_else(|| Error::parse("obj", format!("line {}: face index {i} is invalid", lineno + 1)))?;
                    polygon.push(v);
                }
                match polygon.len() {
                    3 => faces.push([polygon[0], polygon[1], polygon[2]]),
                    4 => {
                        faces.push([polygon[0], polygon[1], polygon[2]]);
                        faces.push([polygon[0], polygon[2], polygon[3]]);
                    }
                    n => return Err(Error::UnsupportedPolygon { face: faces.len(), count: n }),
                }
            }
            _ => {}
        }
    }
    TriMesh::new(positions, faces)
}

fn parse_stl(bytes: &[u8]) -> Result<TriMesh> {
    let triangles = if is_binary_stl(bytes) {
        read_binary_stl(bytes)?
    } else if bytes.trim_ascii_start().starts_with(b"solid") {
        read_ascii_stl(bytes)?
    } else if bytes.len() >= 84 {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap());
        return Err(Error::parse(
            "stl",
            format!("header declares {n} triangles but the file holds {} bytes", bytes.len()),
        ));
    } else {
        return Err(Error::parse("stl", "file too short for a binary STL"));
    };
    if triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    weld(&triangles, STL_WELD_TOLERANCE)
}

fn is_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    n.checked_mul(50).and_then(|b| b.checked_add(84)) == Some(bytes.len())
}

fn read_binary_stl(bytes: &[u8]) -> Result<Vec<[Point3; 3]>> {
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let mut tris = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + t * 50 + 12;
        let v = |k: usize| {
            let o = base + k * 12;
            Point3::new(f32_at(o), f32_at(o + 4), f32_at(o + 8))
        };
        let tri = [v(0), v(1), v(2)];
        if tri.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::parse("stl", format!("triangle {t} has a non-finite coordinate")));
        }
        tris.push(tri);
    }
    Ok(tris)
}

fn read_ascii_stl(bytes: &[u8]) -> Result<Vec<[Point3; 3]>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("stl", e.to_string()))?;
    let mut verts = Vec::new();
    let mut tok = text.split_whitespace();
    while let Some(t) = tok.next() {
        if t == "vertex" {
            let mut c = [0.0; 3];
            for slot in &mut c {
                let s = tok.next().ok_or_else(|| Error::parse("stl", "truncated vertex record"))?;
                *slot = s.parse().map_err(|_| Error::parse("stl", format!("bad coordinate {s:?}")))?;
            }
            verts.push(Point3::new(c[0], c[1], c[2]));
        }
    }
    if verts.len() % 3 != 0 {
        return Err(Error::parse("stl", "vertex count is not a multiple of three"));
    }
    Ok(verts.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Merges vertices within `tol` (first occurrence wins) and drops triangles
/// that collapse.
fn weld(triangles: &[[Point3; 3]], tol: f64) -> Result<TriMesh> {
    let cell = |p: &Point3| {
        let q = |x: f64| (x / tol).floor() as i64;
        (q(p.x), q(p.y), q(p.z))
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut positions: Vec<Point3> = Vec::new();
    let mut faces = Vec::with_capacity(triangles.len());
    for tri in triangles {
        let mut f = [0usize; 3];
        for (k, p) in tri.iter().enumerate() {
            let (cx, cy, cz) = cell(p);
            let mut found: Option<usize> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else { continue };
                        for &i in bucket {
                            if (positions[i] - p).norm() <= tol && found.is_none_or(|j| i < j) {
                                found = Some(i);
                            }
                        }
                    }
                }
            }
            f[k] = found.unwrap_or_else(|| {
                positions.push(*p);
                grid.entry((cx, cy, cz)).or_default().push(positions.len() - 1);
                positions.len() - 1
            });
        }
        if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] {
            faces.push(f);
        }
    }
    TriMesh::new(positions, faces)
}

fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(mesh.num_vertices() * 40 + mesh.num_faces() * 24);
    let _ = writeln!(out, "# {} vertices, {} faces", mesh.num_vertices(), mesh.num_faces());
    for p in mesh.positions() {
        // `{}` on f64 prints the shortest string that parses back exactly.
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

fn write_stl(mesh: &TriMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + 50 * mesh.num_faces());
    let mut header = [b' '; 80];
    let title = b"tessera binary stl";
    header[..title.len()].copy_from_slice(title);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.num_faces() as u32).to_le_bytes());
    for f in 0..mesh.num_faces() {
        let n = mesh.face_cross(f);
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        for c in n.iter() {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        for p in mesh.corner_positions(f) {
            for c in p.coords.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    const CUBE_OBJ: &str = "\
v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5
f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

    #[test]
    fn cube_obj_loads() {
        let m = load_mesh(CUBE_OBJ.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), (8, 12));
        assert!(crate::mesh::check_watertight(&m).is_closed);
    }

    #[test]
    fn obj_quads_negative_indices_and_attributes() {
        let src = "v 0 0 0\nv 1 0 0\nvt 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf -4/1/1 -3/1/1 -2/1/1 -1/1/1\n";
        let m = load_mesh(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_errors() {
        let penta = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 2 0\nf 1 2 3 4 5\n";
        assert!(matches!(load_mesh(penta.as_bytes(), MeshFormat::Obj), Err(Error::UnsupportedPolygon { count: 5, .. })));
        assert!(matches!(load_mesh(b"v 0 0 x\n", MeshFormat::Obj), Err(Error::Parse { .. })));
        assert!(matches!(load_mesh(b"# nothing\n", MeshFormat::Obj), Err(Error::EmptyMesh)));
    }

    #[test]
    fn cube_stl_layout_and_weld() {
        let cube = load_mesh(CUBE_OBJ.as_bytes(), MeshFormat::Obj).unwrap();
        let stl = export_mesh(&cube, ExportFormat::StlBinary);
        assert_eq!(stl.len(), 84 + 12 * 50);
        assert_eq!(u32::from_le_bytes(stl[80..84].try_into().unwrap()), 12);
        let back = load_mesh(&stl, MeshFormat::Stl).unwrap();
        assert_eq!((back.num_vertices(), back.num_faces()), (8, 12));
        assert!(crate::mesh::check_watertight(&back).is_closed);
    }

    #[test]
    fn ascii_stl() {
        let src = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\nendloop\nendfacet\nendsolid t\n";
        let m = load_mesh(src.as_bytes(), MeshFormat::Stl).unwrap();
        assert_eq!((m.num_vertices(), m.num_faces()), (3, 1));
        assert!(load_mesh(b"garbage", MeshFormat::Stl).is_err());
    }

    #[test]
    fn obj_round_trip_is_exact() {
        let m = primitives::icosphere(7.3, 2);
        let back = load_mesh(&export_mesh(&m, ExportFormat::Obj), MeshFormat::Obj).unwrap();
        assert_eq!(back.positions(), m.positions());
        assert_eq!(back.faces(), m.faces());
    }
}
