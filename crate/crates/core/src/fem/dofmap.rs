use crate::mesh::{BoundaryLabel, Mesh2D};
use alloc::vec::Vec;

/// Degree-of-freedom numbering for the mini element.
///
/// Velocity nodes are the vertices followed by one bubble per triangle; the
/// velocity vector stores all x-components first, then all y-components.
/// Pressure dofs (one per vertex) follow the velocity block in the global
/// system. The Dirichlet set is the y-component at every wall vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub dirichlet: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh2D) -> Self {
        let nv = mesh.vertices.len();
        let nt = mesh.triangles.len();
        let mut wall = alloc::vec![false; nv];
        for e in &mesh.boundary_edges {
            if e.label == BoundaryLabel::Gamma {
                wall[e.a] = true;
                wall[e.b] = true;
            }
        }
        let nn = nv + nt;
        let dirichlet = (0..nv).filter(|&i| wall[i]).map(|i| nn + i).collect();
        DofMap { n_vertices: nv, n_triangles: nt, dirichlet }
    }

    /// Velocity nodes: vertices plus bubbles.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_vertices + self.n_triangles
    }

    #[inline]
    pub fn n_velocity(&self) -> usize {
        2 * self.n_nodes()
    }

    #[inline]
    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    #[inline]
    pub fn n_total(&self) -> usize {
        self.n_velocity() + self.n_pressure()
    }

    #[inline]
    pub fn vel(&self, comp: usize, node: usize) -> usize {
        comp * self.n_nodes() + node
    }

    #[inline]
    pub fn bubble(&self, tri: usize) -> usize {
        self.n_vertices + tri
    }

    /// Global index of pressure dof `i` in the coupled system.
    #[inline]
    pub fn pres(&self, i: usize) -> usize {
        self.n_velocity() + i
    }

    /// Local ordering [vx0 vx1 vx2 vxb vy0 vy1 vy2 vyb].
    pub fn element_velocity(&self, tri: usize, t: &[usize; 3]) -> [usize; 8] {
        let nodes = [t[0], t[1], t[2], self.bubble(tri)];
        let mut out = [0; 8];
        for c in 0..2 {
            for k in 0..4 {
                out[4 * c + k] = self.vel(c, nodes[k]);
            }
        }
        out
    }

    /// Local ordering: the 8 velocity dofs followed by [p0 p1 p2].
    pub fn element_dofs(&self, tri: usize, t: &[usize; 3]) -> [usize; 11] {
        let v = self.element_velocity(tri, t);
        let mut out = [0; 11];
        out[..8].copy_from_slice(&v);
        for k in 0..3 {
            out[8 + k] = self.pres(t[k]);
        }
        out
    }

    /// Zero the constrained components of a velocity vector.
    pub fn constrain(&self, v: &mut [f64]) {
        for &d in &self.dirichlet {
            v[d] = 0.0;
        }
    }
}
