//! Finite metric measure spaces, the box and Prokhorov distances,
//! observable invariants and finite approximations of pyramids.

pub mod budget;
pub mod construct;
pub mod distances;
pub mod error;
pub mod flag;
pub mod harness;
mod graph;
pub mod invariants;
pub mod maps;
pub mod measures;
pub mod pyramids;
pub mod space;
#[cfg(test)]
mod testutil;

pub use budget::{Budget, ISO_TOL, TOL};
pub use error::{MmError, Result};
pub use flag::{Certified, CertifiedInterval, Flag};
pub use space::{DistMatrix, ExtendedFiniteMmSpace, FiniteMmSpace, Metric, PointedSpace, WeightMode, WeightVector, WeightedMetric};
