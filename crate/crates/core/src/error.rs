use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {format} input: {message}")]
    Parse { format: &'static str, message: String },

    #[error("face {face} has {count} corners; only triangles and quads are accepted")]
    UnsupportedPolygon { face: usize, count: usize },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("face {face} references vertex {vertex}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, vertex: usize, count: usize },

    #[error("face {face} repeats vertex {vertex}")]
    DegenerateFace { face: usize, vertex: usize },

    #[error("vertex {vertex} has a zero-area incident fan; its normal is undefined")]
    DegenerateNormal { vertex: usize },

    #[error("mesh is not manifold: {0}")]
    NonManifold(String),

    #[error("mesh has {components} connected components; expected one")]
    Disconnected { components: usize },

    #[error("mesh is not a topological disk (euler characteristic {euler}, {boundary_loops} boundary loops)")]
    NotADisk { euler: i64, boundary_loops: usize },

    #[error("parameterization left {flipped} flipped triangles")]
    FlippedTriangles { flipped: usize },

    #[error("sparse factorization failed: {0}")]
    Solver(String),

    #[error("point ({u}, {v}) is outside UV triangle of face {face}")]
    OutsideFace { face: usize, u: f64, v: f64 },

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("svg element: {0}")]
    Svg(String),

    #[error("harmonic field: {0}")]
    Harmonic(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("placements {first} and {second} overlap")]
    OverlappingPlacements { first: usize, second: usize },

    #[error("placement {placement} does not intersect the chart")]
    PlacementOffChart { placement: usize },

    #[error("curve path is {length} long, shorter than the demonstrated spacing {spacing}")]
    PathTooShort { length: f64, spacing: f64 },

    #[error("embossed offset of vertex {vertex} crosses the opposite surface")]
    SelfIntersection { vertex: usize },

    #[error("cutout would open a closed solid; import the part as an open shell instead")]
    CutoutOnClosedSolid,

    #[error("{kind} document: {message}")]
    Format { kind: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(format: &'static str, message: impl Into<String>) -> Self {
        Error::Parse { format, message: message.into() }
    }

    pub(crate) fn format(kind: &'static str, message: impl std::fmt::Display) -> Self {
        Error::Format { kind, message: message.to_string() }
    }
}
