//! Optimal control of an elliptic PDE with random sources under three
//! readings of the state constraint: probabilistic (chance-constrained via
//! spherical-radial decomposition), almost-sure (finite-scenario checks),
//! and robust (semi-infinite programming over a compact parameter set).

pub mod cases;
pub mod chance;
pub mod error;
pub mod gaussian;
pub mod pde;
pub mod report;
pub mod robust;
pub mod srd;

pub use error::{CoreError, Result};
