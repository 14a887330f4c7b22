//! Data-driven elasticity.
//!
//! Boundary-value problems are posed as a distance minimization between a
//! material data set and the affine set of compatible and equilibrated
//! strain-stress fields. The [`relax`] module computes and checks the
//! relaxation of two-well data sets.

pub mod error;
pub mod exec;
pub mod tensor;
pub mod phase;
pub mod io;
pub mod data;
pub mod fem;
pub mod solver;
pub mod relax;
pub mod acceptance;

pub use error::{Error, Result};
pub use exec::Execution;
pub use phase::{field_sq_distance, field_sq_norm, local_sq_distance, local_sq_norm, LocalState, StateField};
pub use tensor::{ElasticityTensor, SymMatrix};
