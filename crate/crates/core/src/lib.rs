//! Metric simplicial complexes of constant curvature: construction, intrinsic
//! distances, link conditions, Ptolemy and inversion probes, and flatness.

pub mod complex;
pub mod curvature;
pub mod error;
pub mod flatness;
pub mod inversion;
pub mod links;
pub mod model_space;
pub mod numeric;
pub mod report;

pub use complex::generators::{ChartPoint, Generator, Procedural, Subject};
pub use complex::{build_complex, ComplexK, DistanceBound, Gluing, PointRef, ShapeClass, SimplexId, SimplexSpec};
pub use error::{Error, Result};
pub use model_space::{Curvature, ModelPoint};
