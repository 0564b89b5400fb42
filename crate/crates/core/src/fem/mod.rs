//! Mini-element spaces, quadrature, form assembly and the sparse direct solver.

pub mod assembly;
pub mod dofmap;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::*;
pub use dofmap::DofMap;
pub use solver::{solve_saddle, SparseLu, SparseSystem, Symbolic};
pub use sparse::{Csr, Triplets};
