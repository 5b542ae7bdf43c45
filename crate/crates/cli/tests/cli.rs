use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tessera_core::mesh::primitives::{box_mesh, capped_cylinder, grid_plane, open_cylinder};
use tessera_core::mesh::{export_mesh, ExportFormat, TriMesh};
use tessera_core::pipeline::{ChartFile, DemoEvent, DemoFile, RegionFile};
use tessera_core::{Point2, Point3};

fn tessera(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tessera")).args(args).output().expect("run tessera")
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

fn save(dir: &Path, name: &str, mesh: &TriMesh) -> PathBuf {
    let path = dir.join(name);
    let format = if name.ends_with(".stl") { ExportFormat::StlBinary } else { ExportFormat::Obj };
    std::fs::write(&path, export_mesh(mesh, format)).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn demo(dir: &Path, anchors: &[[f64; 2]], origin: Point3) -> PathBuf {
    let mut d = DemoFile::new(
        anchors
            .iter()
            .map(|a| DemoEvent { anchor: Some(Point2::new(a[0], a[1])), point: None, rotation: 0.0, scale: 1.0 })
            .collect(),
    );
    d.origin = Some(origin);
    d.window = Some([Point2::new(-4.5, -4.5), Point2::new(4.5, 4.5)]);
    let path = dir.join("demo.json");
    std::fs::write(&path, d.to_json()).unwrap();
    path
}

fn circle(dir: &Path) -> PathBuf {
    let path = dir.join("circle.svg");
    std::fs::write(&path, r#"<svg xmlns="http://www.w3.org/2000/svg"><circle r="1"/></svg>"#).unwrap();
    path
}

#[test]
fn parametrize_cylinder_writes_chart() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = save(dir.path(), "cyl.obj", &open_cylinder(10.0, 20.0, 48, 8));
    let out = dir.path().join("chart.json");
    let o = tessera(&[p("parametrize"), p("--mesh"), &mesh, p("--out"), &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let chart = ChartFile::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(chart.faces, 48 * 8 * 2);
    assert!(chart.max_distortion < 0.01);
    assert!(stdout(&o).contains("max distortion"));
}

#[test]
fn segment_cap_and_bad_seed() {
    let dir = tempfile::tempdir().unwrap();
    let m = capped_cylinder(10.0, 20.0, 48, 16, 6);
    let mesh = save(dir.path(), "cyl.obj", &m);
    let out = dir.path().join("region.json");
    let o = tessera(&[p("segment"), p("--mesh"), &mesh, p("--seed"), p("2,3,20"), p("--out"), &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let region = RegionFile::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cap: Vec<usize> = (0..m.num_faces())
        .filter(|&f| m.corner_positions(f).iter().all(|q| (q.z - 20.0).abs() < 1e-9))
        .collect();
    assert_eq!(region.faces, cap);

    let o = tessera(&[p("segment"), p("--mesh"), &mesh, p("--seed"), p("2;3;20"), p("--out"), &out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn apply_suggest_only_overlap_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = save(dir.path(), "cube.obj", &box_mesh([20.0, 20.0, 20.0], [4, 4, 4]));
    let svg = circle(dir.path());
    let out = dir.path().join("out.stl");
    let origin = Point3::new(0.0, 0.0, 10.0);

    let d = demo(dir.path(), &[[0.0, 0.0], [3.0, 0.0]], origin);
    let o = tessera(&[p("apply"), p("--mesh"), &mesh, p("--element"), &svg, p("--demo"), &d, p("--suggest-only")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("tessera.placements"));
    assert!(stdout(&o).contains("\"kind\": \"row\""));
    assert!(!out.exists());

    let o = tessera(&[p("apply"), p("--mesh"), &mesh, p("--element"), &svg, p("--demo"), &d, p("--out"), &out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = tessera(&[p("check"), p("--mesh"), &out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("closed: true"));

    let d = demo(dir.path(), &[[0.0, 0.0], [0.5, 0.0]], origin);
    let o = tessera(&[p("apply"), p("--mesh"), &mesh, p("--element"), &svg, p("--demo"), &d, p("--out"), &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("overlap"), "{}", stderr(&o));
}

#[test]
fn check_open_shell_and_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let shell = save(dir.path(), "sheet.stl", &grid_plane(3, 3, 3.0, 3.0));
    let o = tessera(&[p("check"), p("--mesh"), &shell]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("boundary edges: 12"), "{}", stdout(&o));

    let junk = dir.path().join("junk.stl");
    std::fs::write(&junk, b"solid nope\n garbage").unwrap();
    assert_eq!(tessera(&[p("check"), p("--mesh"), &junk]).status.code(), Some(2));
    assert_eq!(tessera(&[p("check"), p("--mesh"), p("missing.stl")]).status.code(), Some(2));
    assert_eq!(tessera(&[p("frobnicate")]).status.code(), Some(2));
}

#[test]
fn config_file_and_execution_strategy_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = save(dir.path(), "cube.obj", &box_mesh([20.0, 20.0, 20.0], [4, 4, 4]));
    let svg = circle(dir.path());
    let d = demo(dir.path(), &[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], Point3::new(0.0, 0.0, 10.0));
    let seq = dir.path().join("seq.toml");
    std::fs::write(&seq, "exec = \"sequential\"\n").unwrap();
    let (a, b) = (dir.path().join("a.stl"), dir.path().join("b.stl"));
    let base = [p("apply"), p("--mesh"), &mesh, p("--element"), &svg, p("--demo"), &d, p("--mode"), p("embossed")];
    let o = tessera(&[&base[..], &[p("--out"), &a]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = tessera(&[&base[..], &[p("--config"), &seq, p("--out"), &b]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "nonsense = 3\n").unwrap();
    let o = tessera(&[&base[..], &[p("--config"), &bad, p("--out"), &b]].concat());
    assert_eq!(o.status.code(), Some(2));
}
