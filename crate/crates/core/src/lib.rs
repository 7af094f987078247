//! Surfacing of multiview 3D curve drawings.
//!
//! A curve drawing (a graph of 3D polyline fragments) is regularized by
//! [`reorg`], pairs and closed loops of fragments are lofted into smooth quad
//! patches by [`loft`], the patches become [`hypothesis`] surfaces, and
//! [`occlusion`] reasoning against calibrated views with edge maps keeps only
//! the patches whose predicted occlusions agree with the images. [`synth`]
//! fabricates ground-truthed scenes and [`eval`] scores results with
//! precision/recall. [`pipeline`] wires the stages together.

pub mod bvh;
pub mod curve_graph;
pub mod error;
pub mod eval;
pub mod geom;
pub mod hypothesis;
pub mod loft;
pub mod mesh;
pub mod occlusion;
pub mod pipeline;
pub mod reorg;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{Point2, Point3, Vec2, Vec3};
