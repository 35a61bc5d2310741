//! Computations with Lie algebroids given in local coordinates.
//!
//! The crate covers the structure identities of an algebroid, A-connections
//! and their torsion and curvature, the Levi-Civita connection of a fiber
//! metric, parallel transport and geodesics along A-paths, and a sampled
//! holonomy test deciding whether a connection preserves some fiber metric.

pub mod algebroid;
pub mod catalog;
pub mod connection;
pub mod domain;
pub mod error;
pub mod geodesics;
pub mod holonomy;
pub mod levi_civita;
pub mod linalg;
pub mod problem;
pub mod scalar_field;
pub mod tensor;
pub mod transport;

pub use algebroid::{LieAlgebroid, ValidationReport};
pub use connection::{AConnection, RiemannMetric, SectionField};
pub use domain::DomainBox;
pub use error::{Error, Result};
pub use problem::{Problem, ProblemConfig, Tolerances};
pub use scalar_field::{parse_expr, CoordPoint, Expr};
pub use transport::{APath, AlphaSection, TransportMap};
