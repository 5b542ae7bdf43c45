//! Versioned JSON documents exchanged between pipeline steps.
//!
//! Every document carries `format` and `version` fields; readers reject
//! other kinds and newer versions.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::autocomplete::{Edit, PatternSuggestion, PlacementEvent};
use crate::error::{Error, Result};
use crate::mesh::EdgeKey;
use crate::uv::UvChart;
use crate::{Point2, Point3};

pub const CHART_FORMAT: &str = "tessera.chart";
pub const REGION_FORMAT: &str = "tessera.region";
pub const DEMO_FORMAT: &str = "tessera.demo";
pub const PLACEMENTS_FORMAT: &str = "tessera.placements";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn check_header(kind: &'static str, text: &str) -> Result<()> {
    let h: Header = serde_json::from_str(text).map_err(|e| Error::format(kind, e))?;
    if h.format != kind {
        return Err(Error::format(kind, format!("expected format {kind:?}, found {:?}", h.format)));
    }
    if h.version > VERSION {
        return Err(Error::format(kind, format!("version {} is newer than supported {VERSION}", h.version)));
    }
    Ok(())
}

fn read<T: DeserializeOwned>(kind: &'static str, text: &str) -> Result<T> {
    check_header(kind, text)?;
    serde_json::from_str(text).map_err(|e| Error::format(kind, e))
}

fn write<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Flattening of a mesh, face by face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartFile {
    pub format: String,
    pub version: u32,
    pub faces: usize,
    pub max_distortion: f64,
    pub mean_distortion: f64,
    pub seam_edges: Vec<EdgeKey>,
    /// UV of each face's three corners.
    pub uv: Vec<[Point2; 3]>,
}

impl ChartFile {
    pub fn new(chart: &UvChart) -> Self {
        let n = chart.area_distortion.len().max(1) as f64;
        ChartFile {
            format: CHART_FORMAT.into(),
            version: VERSION,
            faces: chart.num_faces(),
            max_distortion: chart.max_distortion(),
            mean_distortion: chart.area_distortion.iter().sum::<f64>() / n,
            seam_edges: chart.seam_edges.clone(),
            uv: chart.uv.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        write(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        read(CHART_FORMAT, text)
    }
}

/// Faces selected on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFile {
    pub format: String,
    pub version: u32,
    pub seed: Point3,
    /// Sorted face indices.
    pub faces: Vec<usize>,
    pub boundary_loop: Vec<Point3>,
    pub score: f64,
}

impl RegionFile {
    pub fn new(seed: Point3, region: &crate::segment::SegmentRegion) -> Self {
        RegionFile {
            format: REGION_FORMAT.into(),
            version: VERSION,
            seed,
            faces: region.faces.clone(),
            boundary_loop: region.boundary_loop.clone(),
            score: region.score,
        }
    }

    pub fn to_json(&self) -> String {
        write(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        read(REGION_FORMAT, text)
    }
}

/// One demonstrated placement. Exactly one of `anchor` (chart coordinates,
/// relative to the demo origin when one is given) and `point` (a 3D
/// surface point) is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoEvent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point3>,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// A scripted demonstration: placements, optional completion hints and
/// edits applied to the suggestion in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoFile {
    pub format: String,
    pub version: u32,
    /// Surface point whose chart position is the origin of relative anchors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Point3>,
    pub events: Vec<DemoEvent>,
    /// Surface point whose inferred region confines the pattern, used when
    /// no region is given explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Point3>,
    /// Chart rectangle `[min, max]` (relative to the origin) completion stays in.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[Point2; 2]>,
    /// Chart polyline (relative to the origin) for completion along a curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<Vec<Point2>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<Edit>,
    /// Whether to infer a pattern from the events; when false the events
    /// are placed as given.
    #[serde(default = "yes")]
    pub complete: bool,
}

impl DemoFile {
    pub fn new(events: Vec<DemoEvent>) -> Self {
        DemoFile {
            format: DEMO_FORMAT.into(),
            version: VERSION,
            origin: None,
            events,
            seed: None,
            window: None,
            curve: None,
            edits: Vec::new(),
            complete: true,
        }
    }

    pub fn to_json(&self) -> String {
        write(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let demo: DemoFile = read(DEMO_FORMAT, text)?;
        for (i, e) in demo.events.iter().enumerate() {
            if e.anchor.is_some() == e.point.is_some() {
                return Err(Error::format(DEMO_FORMAT, format!("event {i} needs exactly one of anchor and point")));
            }
        }
        Ok(demo)
    }
}

/// Final placements, with the suggestion they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementsFile {
    pub format: String,
    pub version: u32,
    pub placements: Vec<PlacementEvent>,
    pub suggestion: Option<PatternSuggestion>,
}

impl PlacementsFile {
    pub fn new(placements: Vec<PlacementEvent>, suggestion: Option<PatternSuggestion>) -> Self {
        PlacementsFile { format: PLACEMENTS_FORMAT.into(), version: VERSION, placements, suggestion }
    }

    pub fn to_json(&self) -> String {
        write(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_round_trip_and_header_checks() {
        let mut d = DemoFile::new(vec![
            DemoEvent { anchor: Some(Point2::new(0.0, 0.0)), point: None, rotation: 0.0, scale: 1.0 },
            DemoEvent { anchor: None, point: Some(Point3::new(1.0, 2.0, 3.0)), rotation: 0.5, scale: 2.0 },
        ]);
        d.edits.push(Edit::Density { value: 0.5 });
        d.window = Some([Point2::new(-1.0, -1.0), Point2::new(1.0, 1.0)]);
        let back = DemoFile::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);

        let wrong = d.to_json().replace(DEMO_FORMAT, REGION_FORMAT);
        assert!(matches!(DemoFile::from_json(&wrong), Err(Error::Format { .. })));
        let newer = d.to_json().replace("\"version\": 1", "\"version\": 7");
        assert!(DemoFile::from_json(&newer).is_err());
        assert!(DemoFile::from_json("not json").is_err());
    }

    #[test]
    fn event_needs_one_position() {
        let text = r#"{"format":"tessera.demo","version":1,"events":[{"rotation":1.0}]}"#;
        assert!(DemoFile::from_json(text).is_err());
        let text = r#"{"format":"tessera.demo","version":1,"events":[{"anchor":[1,2]}]}"#;
        let d = DemoFile::from_json(text).unwrap();
        assert!(d.complete);
        assert_eq!(d.events[0].scale, 1.0);
    }
}
