//! Arbitrary Lagrangian–Eulerian finite elements for two-dimensional droplets
//! resting or sliding on a rigid wall.
//!
//! The wall is the x-axis. The liquid occupies a polygonal domain bounded by
//! the wetted part of the wall (`Gamma`) and the free surface (`Sigma`); the
//! two points where they meet are the contact points. Velocity uses the mini
//! element (P1 plus a cubic bubble), pressure is continuous P1, and the mesh
//! moves with the harmonic extension of the boundary velocity.
//!
//! Every step reports a discrete energy balance. Volume and gravity terms are
//! integrated exactly over the affine mesh motion; the surface-length and
//! wetting terms use the trapezoidal rule in time and their defects are
//! reported alongside the balance.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ale;
pub mod audit;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod geom;
pub mod mesh;
pub mod oracle;
pub mod physics;
pub mod quad1d;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use mesh::{BoundaryEdge, BoundaryFrame, BoundaryLabel, Mesh2D, MeshQuality};
pub use physics::{Params, State, StepReport, SurfaceField};
