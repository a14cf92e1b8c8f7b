//! Numerical Finsler geometry on a single coordinate chart.
//!
//! Given a fundamental function `L(x, y)`, the crate evaluates the metric
//! tensor, the canonical spray and Barthel connection, the Cartan, Chern,
//! Hashiguchi and Berwald connections, and their covariant derivatives,
//! torsions and curvatures at points of the slit tangent bundle. All
//! differentiation goes through truncated Taylor jets ([`jets`]); the
//! [`conformance`] module checks the classical identities between these
//! objects at sampled points against an independent finite-difference oracle.
//!
//! Indices are 0-based in the API. Seed variables are ordered
//! `x1..xn, y1..yn`.

pub mod calculus;
pub mod conformance;
pub mod connections;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jets;
pub mod metric;
pub mod tensor;

pub use connections::{ConnectionName, ConnectionTriple};
pub use error::{Error, Result};
pub use geometry::PointGeometry;
pub use jets::{ChartPoint, Jet};
pub use metric::{build_metric, FinslerMetric, MetricSpec};
pub use tensor::{TensorField, TensorValue, Variance};
