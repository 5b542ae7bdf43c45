//! End-to-end driver: chart, demonstration, completion, imprint, relief.
//!
//! Both the command line and the HTTP service go through [`plan`] and
//! [`build`], so identical inputs give byte-identical meshes.

pub mod formats;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use formats::{ChartFile, DemoEvent, DemoFile, PlacementsFile, RegionFile};

use crate::autocomplete::{adjust, complete_along_curve, infer_pattern, CurvePath, Layout, PatternSuggestion, PlacementEvent};
use crate::element::TextureElement;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::extrude::{extrude_texture, ExtrudeMode};
use crate::geom2d::{assemble, intersect, Polygon2};
use crate::mesh::{check_watertight, FaceBvh, TriMesh, WatertightReport};
use crate::segment::{infer_region_with, SegmentParams};
use crate::uv::{parametrize, ParamOptions, Parameterization, UvChart};
use crate::{Point2, Point3, Vector2};

/// Every tunable of the pipeline; read from TOML, all fields optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub param: ParamOptions,
    pub segment: SegmentParams,
    /// Chord deviation used when flattening SVG curves, mm.
    pub svg_deviation: f64,
    pub exec: Exec,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            param: ParamOptions::default(),
            segment: SegmentParams::default(),
            svg_deviation: crate::element::CHORD_DEVIATION,
            exec: Exec::Parallel,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("config", e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Where the placements of a demonstration ended up.
#[derive(Debug, Clone)]
pub struct Plan {
    pub param: Parameterization,
    /// Chart polygons the pattern is confined to.
    pub region: Vec<Polygon2>,
    pub events: Vec<PlacementEvent>,
    pub suggestion: Option<PatternSuggestion>,
    pub placements: Vec<PlacementEvent>,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub mesh: TriMesh,
    pub report: WatertightReport,
    pub warnings: Vec<String>,
}

/// Flattens `mesh` and turns the demonstration into placements.
///
/// `region` restricts the pattern to those faces. Without it, the region
/// inferred around the demo's seed is used, if it names one. The demo's
/// window, when present, restricts the pattern further.
pub fn plan(
    mesh: &TriMesh,
    element: &TextureElement,
    demo: &DemoFile,
    region: Option<&[usize]>,
    config: &Config,
) -> Result<Plan> {
    let param = parametrize(mesh, &config.param, config.exec)?;
    let inferred = match (region, &demo.seed) {
        (None, Some(seed)) => Some(infer_region_with(mesh, seed, &config.segment, config.exec)?.faces),
        _ => None,
    };
    plan_with_chart(mesh, param, element, demo, region.or(inferred.as_deref()))
}

/// Like [`plan`] with a chart computed earlier for `mesh`.
pub fn plan_with_chart(
    mesh: &TriMesh,
    param: Parameterization,
    element: &TextureElement,
    demo: &DemoFile,
    region: Option<&[usize]>,
) -> Result<Plan> {
    let chart = &param.chart;
    let bvh = FaceBvh::new(mesh);
    let origin = match &demo.origin {
        Some(p) => surface_to_uv(mesh, chart, &bvh, p)?,
        None => Point2::origin(),
    };
    let events: Vec<PlacementEvent> = demo
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let anchor = match (e.anchor, e.point) {
                (Some(a), _) => origin + a.coords,
                (None, Some(p)) => surface_to_uv(mesh, chart, &bvh, &p)?,
                (None, None) => {
                    return Err(Error::format(formats::DEMO_FORMAT, format!("event {i} has no position")))
                }
            };
            Ok(PlacementEvent { anchor, rotation: e.rotation, scale: e.scale, seq: i as u32 })
        })
        .collect::<Result<_>>()?;

    let all: Vec<usize>;
    let faces = match region {
        Some(f) => {
            if let Some(&bad) = f.iter().find(|&&f| f >= mesh.num_faces()) {
                return Err(Error::InvalidArgument(format!("region face {bad} is out of range")));
            }
            f
        }
        None => {
            all = (0..mesh.num_faces()).collect();
            &all
        }
    };
    let mut polygons = region_polygons(chart, faces);
    if let Some([lo, hi]) = demo.window {
        let rect = Polygon2::rect(origin + lo.coords, origin + hi.coords);
        polygons = polygons.iter().flat_map(|p| intersect(p, &rect)).collect();
    }

    let layout = Layout { region: &polygons, element: Some(element) };
    let mut suggestion = if !demo.complete || events.len() < 2 {
        None
    } else if let Some(curve) = &demo.curve {
        let path = CurvePath::new(curve.iter().map(|p| origin + p.coords).collect())?;
        Some(complete_along_curve(&events, &path, &layout)?)
    } else {
        infer_pattern(&events, &layout)
    };
    if let Some(s) = &mut suggestion {
        for edit in &demo.edits {
            let edit = match *edit {
                crate::autocomplete::Edit::MoveAnchor { seq, to } => {
                    crate::autocomplete::Edit::MoveAnchor { seq, to: origin + to.coords }
                }
                e => e,
            };
            *s = adjust(s, edit, &layout)?;
        }
    }
    let placements = match &suggestion {
        Some(s) => s.placements.clone(),
        None => events.clone(),
    };
    Ok(Plan { param, region: polygons, events, suggestion, placements })
}

/// Imprints the planned placements and builds the relief.
pub fn build(
    mesh: &TriMesh,
    element: &TextureElement,
    plan: &Plan,
    mode: ExtrudeMode,
    depth: f64,
    exec: Exec,
) -> Result<Output> {
    let imprinted = crate::synth::imprint(mesh, &plan.param.chart, element, &plan.placements, exec)?;
    let out = extrude_texture(&imprinted, mode, depth, exec)?;
    let report = check_watertight(&out);
    Ok(Output { mesh: out, report, warnings: imprinted.warnings })
}

/// Chart position of the surface point nearest `p`.
pub fn surface_to_uv(mesh: &TriMesh, chart: &UvChart, bvh: &FaceBvh, p: &Point3) -> Result<Point2> {
    let hit = bvh.nearest(p).ok_or(Error::EmptyMesh)?;
    let l = barycentric3(&mesh.corner_positions(hit.face), &hit.point);
    let t = &chart.uv[hit.face];
    Ok(t[0] + (t[1] - t[0]) * l[1] + (t[2] - t[0]) * l[2])
}

fn barycentric3(t: &[Point3; 3], p: &Point3) -> [f64; 3] {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let d = p - t[0];
    let (a, b, c) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
    let (x, y) = (d.dot(&e1), d.dot(&e2));
    let det = a * c - b * b;
    if !(det.abs() > 0.0) {
        return [1.0, 0.0, 0.0];
    }
    let l1 = (c * x - b * y) / det;
    let l2 = (a * y - b * x) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Outline of the given faces in the chart, as polygons with holes.
///
/// Region boundaries and seams both become polygon edges. Where the region
/// touches itself at a single point, the boundary is split there.
pub fn region_polygons(chart: &UvChart, faces: &[usize]) -> Vec<Polygon2> {
    type Key = (u64, u64);
    let key = |p: &Point2| (p.x.to_bits(), p.y.to_bits());
    let mut half: HashSet<(Key, Key)> = HashSet::new();
    for &f in faces {
        let t = &chart.uv[f];
        for k in 0..3 {
            half.insert((key(&t[k]), key(&t[(k + 1) % 3])));
        }
    }
    let mut boundary: Vec<(Point2, Point2)> = Vec::new();
    let mut seen = HashSet::new();
    for &f in faces {
        let t = &chart.uv[f];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let e = (key(&a), key(&b));
            if !half.contains(&(e.1, e.0)) && seen.insert(e) {
                boundary.push((a, b));
            }
        }
    }
    let mut outgoing: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, (a, _)) in boundary.iter().enumerate() {
        outgoing.entry(key(a)).or_default().push(i);
    }
    let mut used = vec![false; boundary.len()];
    let mut rings = Vec::new();
    for start in 0..boundary.len() {
        if used[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut cur = start;
        loop {
            used[cur] = true;
            let (a, b) = boundary[cur];
            ring.push(a);
            // Of several ways on, take the one sweeping the least angle
            // clockwise from the way back: it stays in the current wedge.
            let back = a - b;
            let next = outgoing
                .get(&key(&b))
                .into_iter()
                .flatten()
                .copied()
                .filter(|&j| !used[j] || j == start)
                .min_by(|&i, &j| {
                    let ti = ccw_turn(&(boundary[i].1 - b), &back);
                    let tj = ccw_turn(&(boundary[j].1 - b), &back);
                    ti.total_cmp(&tj).then(i.cmp(&j))
                });
            match next {
                Some(j) if j == start => break,
                Some(j) => cur = j,
                None => break,
            }
        }
        rings.push(ring);
    }
    assemble(rings)
}

/// Counter-clockwise angle from `from` to `to`, in `(0, 2pi]`.
fn ccw_turn(from: &Vector2, to: &Vector2) -> f64 {
    let a = from.perp(to).atan2(from.dot(to));
    if a <= 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{box_mesh, grid_plane};
    use crate::mesh::{export_mesh, ExportFormat};

    fn grid_demo() -> DemoFile {
        let mut d = DemoFile::new(
            [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]
                .iter()
                .map(|a| DemoEvent { anchor: Some(Point2::new(a[0], a[1])), point: None, rotation: 0.0, scale: 1.0 })
                .collect(),
        );
        d.window = Some([Point2::new(-4.5, -4.5), Point2::new(4.5, 4.5)]);
        d
    }

    #[test]
    fn region_polygon_of_plane_is_its_outline() {
        let mesh = grid_plane(4, 3, 8.0, 6.0);
        let chart = UvChart::new(
            (0..mesh.num_faces())
                .map(|f| mesh.corner_positions(f).map(|p| Point2::new(p.x, p.y)))
                .collect(),
            Vec::new(),
            &mesh,
        )
        .unwrap();
        let all: Vec<usize> = (0..mesh.num_faces()).collect();
        let polys = region_polygons(&chart, &all);
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].rings.len(), 1);
        assert!((polys[0].area() - 48.0).abs() < 1e-9);

        // Everything but one interior quad leaves a hole.
        let quad_faces: Vec<usize> = (0..mesh.num_faces())
            .filter(|&f| {
                let c = mesh.corner_positions(f);
                let x = (c[0].x + c[1].x + c[2].x) / 3.0;
                let y = (c[0].y + c[1].y + c[2].y) / 3.0;
                !(2.0 < x && x < 4.0 && 2.0 < y && y < 4.0)
            })
            .collect();
        let polys = region_polygons(&chart, &quad_faces);
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].rings.len(), 2);
        assert!((polys[0].area() - 44.0).abs() < 1e-9);
    }

    #[test]
    fn pinched_region_splits_into_two_rings() {
        let mesh = grid_plane(2, 2, 2.0, 2.0);
        let chart = UvChart::new(
            (0..mesh.num_faces())
                .map(|f| mesh.corner_positions(f).map(|p| Point2::new(p.x, p.y)))
                .collect(),
            Vec::new(),
            &mesh,
        )
        .unwrap();
        let diagonal: Vec<usize> = (0..mesh.num_faces())
            .filter(|&f| {
                let c = mesh.corner_positions(f);
                let x = (c[0].x + c[1].x + c[2].x) / 3.0;
                let y = (c[0].y + c[1].y + c[2].y) / 3.0;
                (x < 1.0) == (y < 1.0)
            })
            .collect();
        let polys = region_polygons(&chart, &diagonal);
        assert_eq!(polys.len(), 2);
        assert!(polys.iter().all(|p| (p.area() - 1.0).abs() < 1e-12 && !p.self_intersects()));
    }

    #[test]
    fn grid_demo_on_plate_places_nine_and_stays_watertight() {
        let mesh = box_mesh([30.0, 30.0, 3.0], [6, 6, 1]);
        let element = TextureElement::circle(1.0, 64);
        let mut demo = grid_demo();
        demo.origin = Some(Point3::new(0.0, 0.0, 1.5));
        let config = Config::default();
        let p = plan(&mesh, &element, &demo, None, &config).unwrap();
        assert_eq!(p.placements.len(), 9);
        let out = build(&mesh, &element, &p, ExtrudeMode::Raised, 1.0, config.exec).unwrap();
        assert!(out.report.is_closed, "{:?}", out.report);
        let added = out.mesh.signed_volume() - mesh.signed_volume();
        let expect = 9.0 * element.area();
        assert!((added - expect).abs() < 0.03 * expect, "{added} vs {expect}");
    }

    #[test]
    fn sequential_and_parallel_agree_bytewise() {
        let mesh = box_mesh([20.0, 20.0, 20.0], [4, 4, 4]);
        let element = TextureElement::circle(1.0, 64);
        let mut demo = grid_demo();
        demo.origin = Some(Point3::new(0.0, 0.0, 10.0));
        let mut stl = Vec::new();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let config = Config { exec, ..Config::default() };
            let p = plan(&mesh, &element, &demo, None, &config).unwrap();
            let out = build(&mesh, &element, &p, ExtrudeMode::Embossed, 1.0, exec).unwrap();
            assert!(out.report.is_closed);
            stl.push(export_mesh(&out.mesh, ExportFormat::StlBinary));
        }
        assert_eq!(stl[0], stl[1]);
    }

    #[test]
    fn uncompleted_demo_keeps_events() {
        let mesh = box_mesh([30.0, 30.0, 3.0], [6, 6, 1]);
        let element = TextureElement::circle(1.0, 32);
        let mut demo = grid_demo();
        demo.origin = Some(Point3::new(0.0, 0.0, 1.5));
        demo.complete = false;
        let p = plan(&mesh, &element, &demo, None, &Config::default()).unwrap();
        assert!(p.suggestion.is_none());
        assert_eq!(p.placements.len(), 3);
    }

    #[test]
    fn seed_confines_pattern_to_its_region() {
        let mesh = crate::mesh::primitives::capped_cylinder(10.0, 20.0, 48, 16, 6);
        let element = TextureElement::circle(1.0, 32);
        let mut demo = DemoFile::new(
            [[0.0, 0.0], [3.0, 0.0]]
                .iter()
                .map(|a| DemoEvent { anchor: Some(Point2::new(a[0], a[1])), point: None, rotation: 0.0, scale: 1.0 })
                .collect(),
        );
        demo.origin = Some(Point3::new(0.0, 0.0, 20.0));
        let config = Config::default();
        let free = plan(&mesh, &element, &demo, None, &config).unwrap();
        demo.seed = Some(Point3::new(1.0, 1.0, 20.0));
        let capped = plan(&mesh, &element, &demo, None, &config).unwrap();
        // The row stops at the cap rim instead of running onto the side.
        assert!(capped.placements.len() < free.placements.len());
        assert!(capped.placements.iter().all(|p| (p.anchor - capped.events[0].anchor).norm() < 10.0));
    }

    #[test]
    fn config_toml_round_trip() {
        let c = Config { svg_deviation: 0.01, exec: Exec::Sequential, ..Config::default() };
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
        let partial = Config::from_toml("svg_deviation = 0.2\n[segment]\nradius = 2\n").unwrap();
        assert_eq!(partial.segment.radius, 2);
        assert_eq!(partial.param, ParamOptions::default());
        assert!(Config::from_toml("bogus = 1").is_err());
    }
}
