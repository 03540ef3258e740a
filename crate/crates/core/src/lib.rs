//! Numerical differential geometry for conformal Morse germs.
//!
//! The crate evaluates, at a point of a coordinate chart, everything needed to
//! test whether a function germ has a conformal gradient and what that says
//! about curvature: jets of metric components and germs ([`jets`]), the
//! Levi-Civita tensors built from them ([`geometry`]), conformality checks and
//! curvature-from-germ formulas ([`germs`]), Poincaré–Hopf indices
//! ([`index`]) and the curvature probes ([`probes`]).

pub mod catalog;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod germs;
pub mod index;
pub mod jets;
pub mod probes;
pub mod sampling;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geometry::{MetricChart, Plane2, TangentVector};
pub use germs::{CmgTolerances, CmgVerdict, GermSpec, Model, Neighborhood};
pub use jets::{ChartPoint, TaylorScalar};
