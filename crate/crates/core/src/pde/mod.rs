//! Grid, fields, and the discrete elliptic operator with Dirichlet boundary.

mod field;
mod grid;
mod laplacian;
mod system;

pub use field::{max_state, ControlField, StateField};
pub use grid::Grid;
pub use laplacian::DirichletLaplacian;
pub use system::{ObjectiveSpec, PdeSystem, ProblemData};
