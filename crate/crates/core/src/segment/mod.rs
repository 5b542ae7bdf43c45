//! Region inference under a cursor.

mod distortion;
mod harmonic;
mod isolines;
mod region;

pub use distortion::{angle_deficits, distortion, distortion_with, DistortionField};
pub use harmonic::{gradient_magnitudes, harmonic_field, laplacian_weights, HarmonicField, MIN_WEIGHT};
pub use isolines::{extract_isolines, Isoline};
pub use region::{boundary_candidates, infer_region, infer_region_with, RegionIndex, SegmentParams, SegmentRegion};
pub(crate) use distortion::rings;
