//! Numerical toolkit for the spectral flow of paths of symmetric operators,
//! the Maslov index of Lagrangian paths, the gap metric between operators,
//! and linear Hamiltonian boundary value problems, together with seeded
//! generators and the property suites that exercise the identities tying
//! these invariants together.

pub mod config;
pub mod error;
pub mod gapmetric;
pub mod generate;
pub mod hamiltonian;
pub mod maslov;
pub mod numerics;
mod scan;
pub mod specflow;
pub mod suites;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use numerics::{QuadFormIndex, SymMatrix};
pub use specflow::{OperatorPath, SflOptions, SflReport};
