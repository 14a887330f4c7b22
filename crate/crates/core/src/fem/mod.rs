//! P1 finite elements for the constraint set.

pub mod boundary;
pub mod linsolve;
pub mod mesh;
pub mod space;

pub use boundary::{BoundaryData, Dirichlet, Traction};
pub use linsolve::LinearSolver;
pub use mesh::{markers, BoundaryFacet, Mesh};
pub use space::{
    assemble, helmholtz_orthogonality_check, project_onto_e, residuals, solve_classical, DiscreteConstraintSpace,
    Projection, Residuals,
};

#[cfg(test)]
mod tests;
