//! `tessera`: batch driver for texture imprinting.
//!
//! Exit codes: 0 on success, 1 when a produced or checked mesh fails
//! validation, 2 on bad usage or unreadable input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use tessera_core::element::load_element_with;
use tessera_core::extrude::ExtrudeMode;
use tessera_core::mesh::{check_watertight, export_mesh, load_mesh, ExportFormat, MeshFormat, TriMesh, WatertightReport};
use tessera_core::pipeline::{build, plan, ChartFile, Config, DemoFile, PlacementsFile, RegionFile};
use tessera_core::segment::infer_region_with;
use tessera_core::uv::parametrize;
use tessera_core::Point3;

#[derive(Debug, Parser)]
#[command(name = "tessera", version, about = "Imprint repeated 2D texture elements into printable meshes")]
struct Cli {
    /// TOML file overriding engine tunables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cut seams and flatten the mesh into a chart file.
    Parametrize {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infer the region around a surface point.
    Segment {
        #[arg(long)]
        mesh: PathBuf,
        /// Cursor position as "x,y,z".
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        seed: Point3,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete a demonstration, imprint it and write the textured mesh.
    Apply {
        #[arg(long)]
        mesh: PathBuf,
        /// SVG file with the texture element.
        #[arg(long)]
        element: PathBuf,
        #[arg(long)]
        demo: PathBuf,
        /// Region file restricting the pattern.
        #[arg(long)]
        region: Option<PathBuf>,
        #[arg(long, default_value = "raised")]
        mode: ExtrudeMode,
        /// Relief height or recess depth in mm.
        #[arg(long, default_value_t = 1.0)]
        depth: f64,
        /// Print the placements that would be imprinted and stop.
        #[arg(long)]
        suggest_only: bool,
        /// Output mesh; `.obj` writes OBJ, anything else binary STL.
        #[arg(long, required_unless_present = "suggest_only")]
        out: Option<PathBuf>,
    },
    /// Report whether a mesh is closed and consistently wound.
    Check {
        #[arg(long)]
        mesh: PathBuf,
    },
}

enum Failure {
    Input(anyhow::Error),
    /// The mesh was produced or read but is not printable.
    Invalid,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut xyz = [0.0f64; 3];
    for (v, p) in xyz.iter_mut().zip(&parts) {
        *v = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(Point3::new(xyz[0], xyz[1], xyz[2]))
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    String::from_utf8(read(path)?).map_err(|_| anyhow!("{} is not UTF-8", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_mesh(path: &Path) -> anyhow::Result<TriMesh> {
    let format = MeshFormat::from_path(path)
        .ok_or_else(|| anyhow!("{}: unknown mesh format, expected .obj or .stl", path.display()))?;
    load_mesh(&read(path)?, format).with_context(|| format!("loading {}", path.display()))
}

fn print_report(r: &WatertightReport) {
    println!(
        "closed: {}\nboundary edges: {}\nnon-manifold edges: {}\ninconsistent winding pairs: {}\neuler characteristic: {}",
        r.is_closed, r.boundary_edge_count, r.nonmanifold_edge_count, r.inconsistent_winding_pairs, r.euler_characteristic
    );
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(p) => Config::from_toml(&read_text(p)?)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Parametrize { mesh, out } => {
            let m = read_mesh(&mesh)?;
            let p = parametrize(&m, &config.param, config.exec)?;
            let file = ChartFile::new(&p.chart);
            write(&out, file.to_json().as_bytes())?;
            println!("max distortion: {:.6}", file.max_distortion);
            println!("mean distortion: {:.6}", file.mean_distortion);
            println!("seam edges: {}", file.seam_edges.len());
        }
        Command::Segment { mesh, seed, out } => {
            let m = read_mesh(&mesh)?;
            let region = infer_region_with(&m, &seed, &config.segment, config.exec)?;
            write(&out, RegionFile::new(seed, &region).to_json().as_bytes())?;
            println!("faces: {} of {}", region.faces.len(), m.num_faces());
            println!("score: {:.6}", region.score);
        }
        Command::Apply { mesh, element, demo, region, mode, depth, suggest_only, out } => {
            let m = read_mesh(&mesh)?;
            let e = load_element_with(&read(&element)?, config.svg_deviation)
                .with_context(|| format!("loading {}", element.display()))?;
            let d = DemoFile::from_json(&read_text(&demo)?)?;
            let faces = match &region {
                Some(p) => Some(RegionFile::from_json(&read_text(p)?)?.faces),
                None => None,
            };
            let plan = plan(&m, &e, &d, faces.as_deref(), &config)?;
            if suggest_only {
                print!("{}", PlacementsFile::new(plan.placements, plan.suggestion).to_json());
                return Ok(());
            }
            let output = build(&m, &e, &plan, mode, depth, config.exec)?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            if !output.report.is_closed {
                print_report(&output.report);
                return Err(Failure::Invalid);
            }
            let out = out.expect("clap requires --out without --suggest-only");
            let format = match out.extension().and_then(|s| s.to_str()) {
                Some(x) if x.eq_ignore_ascii_case("obj") => ExportFormat::Obj,
                _ => ExportFormat::StlBinary,
            };
            write(&out, &export_mesh(&output.mesh, format))?;
            println!("placements: {}", plan.placements.len());
            println!("faces: {}", output.mesh.num_faces());
            println!("volume change: {:.6}", output.mesh.signed_volume() - m.signed_volume());
        }
        Command::Check { mesh } => {
            let report = check_watertight(&read_mesh(&mesh)?);
            print_report(&report);
            if !report.is_closed {
                return Err(Failure::Invalid);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
