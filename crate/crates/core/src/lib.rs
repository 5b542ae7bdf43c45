//! Texture imprinting for 3D printing.
//!
//! A 2D element is placed a few times on a UV chart of a mesh, the
//! repetition is inferred and completed, the element outlines are
//! imprinted into the triangulation and the enclosed patches are
//! extruded, embossed or cut out, keeping the result watertight.

// `!(x > eps)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod autocomplete;
pub mod element;
pub mod exec;
pub mod extrude;
pub mod geom2d;
pub mod mesh;
pub mod pipeline;
pub mod segment;
pub mod sparse;
pub mod synth;
pub mod uv;

pub use error::{Error, Result};
pub use exec::Exec;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vector2 = nalgebra::Vector2<f64>;
