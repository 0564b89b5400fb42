use crate::fem::DofMap;
use crate::geom::Vec2;
use crate::mesh::Mesh2D;
use alloc::vec::Vec;

/// Velocity, dynamic pressure and mesh velocity on a mesh at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub mesh: Mesh2D,
    /// Mini-element velocity coefficients (layout of [`DofMap`]).
    pub v: Vec<f64>,
    /// P1 dynamic pressure at the vertices.
    pub p: Vec<f64>,
    /// P1 mesh velocity at the vertices.
    pub w: Vec<Vec2>,
    pub t: f64,
}

impl State {
    pub fn at_rest(mesh: Mesh2D, t: f64) -> Self {
        let dm = DofMap::new(&mesh);
        let nv = mesh.vertices.len();
        State { v: alloc::vec![0.0; dm.n_velocity()], p: alloc::vec![0.0; nv], w: alloc::vec![Vec2::ZERO; nv], mesh, t }
    }

    pub fn dofmap(&self) -> DofMap {
        DofMap::new(&self.mesh)
    }

    /// Velocity at vertex `i`.
    pub fn vertex_velocity(&self, i: usize) -> Vec2 {
        let nn = self.mesh.vertices.len() + self.mesh.triangles.len();
        Vec2::new(self.v[i], self.v[nn + i])
    }
}

/// Per-step solver statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub newton_iters: usize,
    pub geometry_iters: usize,
    pub newton_residual: f64,
    pub geometry_displacement_delta: f64,
    pub dt_used: f64,
    pub retries: usize,
}
