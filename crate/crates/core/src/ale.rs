//! Mesh velocity, the affine ALE motion between two time levels, and the
//! space-conservation time quadratures.

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_p1_laplacian, potential};
use crate::fem::{Csr, DofMap, SparseLu, SparseSystem, Symbolic};
use crate::geom::{orient, Vec2};
use crate::mesh::{move_mesh, BoundaryLabel, Mesh2D};
use crate::quad1d::{self, GaussRule};
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_traits::Float;

/// Two configurations related by x^{n+1} = x^n + Δt·w.
#[derive(Debug, Clone)]
pub struct AleStep {
    pub mesh_prev: Mesh2D,
    pub mesh_next: Mesh2D,
    pub w: Vec<Vec2>,
    pub dt: f64,
}

impl AleStep {
    pub fn new(mesh_prev: Mesh2D, w: Vec<Vec2>, dt: f64) -> Result<Self> {
        let mesh_next = move_mesh(&mesh_prev, &w, dt)?;
        Ok(AleStep { mesh_prev, mesh_next, w, dt })
    }

    /// Pair two meshes with the same connectivity; w is recovered vertexwise.
    pub fn from_meshes(mesh_prev: Mesh2D, mesh_next: Mesh2D, dt: f64) -> Result<Self> {
        if mesh_prev.triangles != mesh_next.triangles || mesh_prev.vertices.len() != mesh_next.vertices.len() {
            return Err(Error::Input("ALE step needs two meshes with identical connectivity".into()));
        }
        let w = mesh_prev
            .vertices
            .iter()
            .zip(&mesh_next.vertices)
            .map(|(a, b)| (*b - *a) / dt)
            .collect();
        Ok(AleStep { mesh_prev, mesh_next, w, dt })
    }

    /// Largest |x^{n+1} − x^n − Δt·w| over the vertices.
    pub fn consistency(&self) -> f64 {
        self.mesh_prev
            .vertices
            .iter()
            .zip(&self.mesh_next.vertices)
            .zip(&self.w)
            .map(|((a, b), w)| (*b - *a - *w * self.dt).norm())
            .fold(0.0, f64::max)
    }
}

/// Harmonic extension with cached symbolic analysis of the P1 Laplacian.
#[derive(Debug, Clone, Default)]
pub struct HarmonicExtension {
    symbolic: Option<Arc<Symbolic>>,
}

impl HarmonicExtension {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solve −Δw = 0 componentwise with w = `boundary` at boundary vertices.
    /// Entries of `boundary` at interior vertices are ignored.
    pub fn extend(&mut self, mesh: &Mesh2D, boundary: &[Vec2]) -> Result<Vec<Vec2>> {
        let nv = mesh.vertices.len();
        let mask = mesh.boundary_mask();
        let lap = assemble_p1_laplacian(mesh);
        let sym = match &self.symbolic {
            Some(s) if s.matches(&lap) => s.clone(),
            _ => {
                let s = Arc::new(Symbolic::min_degree(&lap)?);
                self.symbolic = Some(s.clone());
                s
            }
        };
        let dofs: Vec<usize> = (0..nv).filter(|&i| mask[i]).collect();
        let mut out = alloc::vec![Vec2::ZERO; nv];
        let mut matrix: Option<Csr> = None;
        let mut lu: Option<SparseLu> = None;
        for c in 0..2 {
            let vals: Vec<f64> = dofs.iter().map(|&i| if c == 0 { boundary[i].x } else { boundary[i].y }).collect();
            let mut sys = SparseSystem::new(lap.clone(), alloc::vec![0.0; nv]);
            sys.apply_dirichlet(&dofs, &vals);
            if lu.is_none() {
                lu = Some(SparseLu::factor(sym.clone(), &sys.matrix)?);
                matrix = Some(sys.matrix.clone());
            }
            let (x, _) = lu.as_ref().unwrap().solve_refined(matrix.as_ref().unwrap(), &sys.rhs, 1e-13);
            for i in 0..nv {
                if c == 0 {
                    out[i].x = if mask[i] { boundary[i].x } else { x[i] };
                } else {
                    out[i].y = if mask[i] { boundary[i].y } else { x[i] };
                }
            }
        }
        Ok(out)
    }
}

/// Harmonic extension of a boundary velocity trace (P1, componentwise).
pub fn mesh_velocity(mesh: &Mesh2D, v_boundary: &[Vec2]) -> Result<Vec<Vec2>> {
    HarmonicExtension::new().extend(mesh, v_boundary)
}

/// Boundary trace of a mini-element velocity as a vertexwise array (zero in the interior).
pub fn boundary_trace(mesh: &Mesh2D, dofmap: &DofMap, v: &[f64]) -> Vec<Vec2> {
    let mask = mesh.boundary_mask();
    (0..mesh.vertices.len())
        .map(|i| if mask[i] { Vec2::new(v[dofmap.vel(0, i)], v[dofmap.vel(1, i)]) } else { Vec2::ZERO })
        .collect()
}

/// ∫_{tⁿ}^{tⁿ⁺¹} ∫_{Ω(t)} ψ div w dΩ dt for a P1 field ψ moving with the mesh.
///
/// On each triangle det J(t) is quadratic in t and det J · div w = tr(W adj J)
/// is linear, so the time integral is evaluated from its monomial
/// coefficients.
pub fn scl_volume_integral(step: &AleStep, psi: &[f64]) -> f64 {
    let mut total = 0.0;
    let dt = step.dt;
    for tri in &step.mesh_prev.triangles {
        let x: [Vec2; 3] = [0, 1, 2].map(|k| step.mesh_prev.vertices[tri[k]]);
        let w: [Vec2; 3] = [0, 1, 2].map(|k| step.w[tri[k]]);
        // J(t) = J0 + t·W with columns x1 − x0, x2 − x0.
        let j0 = [[x[1].x - x[0].x, x[2].x - x[0].x], [x[1].y - x[0].y, x[2].y - x[0].y]];
        let wj = [[w[1].x - w[0].x, w[2].x - w[0].x], [w[1].y - w[0].y, w[2].y - w[0].y]];
        // tr(W adj J) with adj [[a, b], [c, d]] = [[d, −b], [−c, a]].
        let tr_adj = |j: [[f64; 2]; 2]| wj[0][0] * j[1][1] - wj[0][1] * j[1][0] - wj[1][0] * j[0][1] + wj[1][1] * j[0][0];
        let c0 = tr_adj(j0);
        let c1 = tr_adj(wj);
        // ∫ ψ̂ over the reference triangle = (ψ0 + ψ1 + ψ2)/6.
        let mean = (psi[tri[0]] + psi[tri[1]] + psi[tri[2]]) / 6.0;
        total += mean * (c0 * dt + 0.5 * c1 * dt * dt);
    }
    total
}

/// ∫_Ω ψ for a P1 field.
pub fn p1_integral(mesh: &Mesh2D, psi: &[f64]) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let tri = mesh.triangles[t];
            mesh.triangle_area(t) * (psi[tri[0]] + psi[tri[1]] + psi[tri[2]]) / 3.0
        })
        .sum()
}

/// Signed trapezoidal-rule defect of the free-surface length law:
/// coeff · [ (Δt/2) Σ_e (tⁿ_e + tⁿ⁺¹_e)·(w_b − w_a) − (|Σⁿ⁺¹| − |Σⁿ|) ].
pub fn scl_surface_defect(step: &AleStep, coeff: f64) -> f64 {
    coeff * scl_surface_edge_defects(step).iter().sum::<f64>()
}

/// Unit-coefficient defect of each free-surface edge, in boundary order.
pub fn scl_surface_edge_defects(step: &AleStep) -> Vec<f64> {
    step.mesh_prev
        .boundary_edges
        .iter()
        .filter(|e| e.label == BoundaryLabel::Sigma)
        .map(|e| {
            let d0 = step.mesh_prev.vertices[e.b] - step.mesh_prev.vertices[e.a];
            let d1 = step.mesh_next.vertices[e.b] - step.mesh_next.vertices[e.a];
            let dw = step.w[e.b] - step.w[e.a];
            let (l0, l1) = (d0.norm(), d1.norm());
            0.5 * step.dt * (d0 / l0 + d1 / l1).dot(dw) - (l1 - l0)
        })
        .collect()
}

/// |scl_surface_defect| with unit coefficient.
pub fn scl_surface_residual(step: &AleStep) -> f64 {
    scl_surface_defect(step, 1.0).abs()
}

/// Signed trapezoidal-rule defect of the wetting-energy law at the contact
/// points: (Δt/2)(f_clⁿ + f_clⁿ⁺¹)(w) minus the exact change of
/// (Ca·Re)⁻¹ ∫_Γ cos θ_s, the latter by adaptive quadrature.
pub fn scl_contact_defect(step: &AleStep, theta_s: &dyn Fn(f64) -> f64, ca: f64, re: f64) -> f64 {
    let [l, r] = scl_contact_point_defects(step, theta_s, ca, re);
    l + r
}

/// The defect split into its [left, right] contact-point parts.
pub fn scl_contact_point_defects(step: &AleStep, theta_s: &dyn Fn(f64) -> f64, ca: f64, re: f64) -> [f64; 2] {
    let k = 1.0 / (ca * re);
    let mut out = [0.0; 2];
    for (side, &c) in step.mesh_prev.contact_vertices.iter().enumerate() {
        let m = if side == 0 { -1.0 } else { 1.0 };
        let x0 = step.mesh_prev.vertices[c].x;
        let x1 = step.mesh_next.vertices[c].x;
        let wx = step.w[c].x;
        let cn = 0.5 * step.dt * k * m * wx * (Float::cos(theta_s(x0)) + Float::cos(theta_s(x1)));
        out[side] = cn - k * m * quad1d::integrate(|x| Float::cos(theta_s(x)), x0, x1, 1e-14);
    }
    out
}

pub fn scl_contact_residual(step: &AleStep, theta_s: &dyn Fn(f64) -> f64, ca: f64, re: f64) -> f64 {
    scl_contact_defect(step, theta_s, ca, re).abs()
}

/// Exact ∫_{tⁿ}^{tⁿ⁺¹} ∮_{∂Ω(t)} Φ w·n dS dt over the affine motion.
pub fn scl_gravity_integral(step: &AleStep, inv_fr2: f64, alpha: f64) -> f64 {
    if inv_fr2 == 0.0 {
        return 0.0;
    }
    let rule = GaussRule::new(3);
    let mut total = 0.0;
    for e in &step.mesh_prev.boundary_edges {
        let (a0, b0) = (step.mesh_prev.vertices[e.a], step.mesh_prev.vertices[e.b]);
        let (wa, wb) = (step.w[e.a], step.w[e.b]);
        for (s, ws) in rule.unit() {
            let a = a0 + wa * (s * step.dt);
            let b = b0 + wb * (s * step.dt);
            let n = (b - a).rot_cw();
            for (r, wr) in rule.unit() {
                let x = a.lerp(b, r);
                let w = wa.lerp(wb, r);
                total += ws * wr * step.dt * potential(inv_fr2, alpha, x) * w.dot(n);
            }
        }
    }
    total
}

/// ∫_Ω Φ over a polygonal domain (exact: Φ is linear).
pub fn potential_energy(mesh: &Mesh2D, inv_fr2: f64, alpha: f64) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let p = mesh.triangle_points(t);
            0.5 * orient(p[0], p[1], p[2]) * potential(inv_fr2, alpha, (p[0] + p[1] + p[2]) / 3.0)
        })
        .sum()
}

/// Load vector G(φ) = ∫_{tⁿ}^{tⁿ⁺¹} ∫_{Σ(t)} Φ φ·n dS dt for the velocity
/// basis, exact over the affine motion. With φ = v and w = v on Σ this is
/// the exact change of potential energy.
pub fn gravity_load_integral(step: &AleStep, dofmap: &DofMap, inv_fr2: f64, alpha: f64) -> Vec<f64> {
    let mut g = alloc::vec![0.0; dofmap.n_velocity()];
    if inv_fr2 == 0.0 {
        return g;
    }
    let rule = GaussRule::new(3);
    for e in step.mesh_prev.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
        let (a0, b0) = (step.mesh_prev.vertices[e.a], step.mesh_prev.vertices[e.b]);
        let (wa, wb) = (step.w[e.a], step.w[e.b]);
        let mut acc = [[0.0; 2]; 2];
        for (s, ws) in rule.unit() {
            let a = a0 + wa * (s * step.dt);
            let b = b0 + wb * (s * step.dt);
            let n = (b - a).rot_cw();
            for (r, wr) in rule.unit() {
                let phi = potential(inv_fr2, alpha, a.lerp(b, r)) * ws * wr * step.dt;
                acc[0][0] += phi * (1.0 - r) * n.x;
                acc[0][1] += phi * (1.0 - r) * n.y;
                acc[1][0] += phi * r * n.x;
                acc[1][1] += phi * r * n.y;
            }
        }
        for c in 0..2 {
            g[dofmap.vel(c, e.a)] += acc[0][c];
            g[dofmap.vel(c, e.b)] += acc[1][c];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_initial_cap;

    #[test]
    fn single_triangle_affine_volume() {
        // det(I + tG) for G = [[1, 2], [−1, 0.5]]: 1 + 1.5t + 2.5t².
        let mesh = Mesh2D {
            vertices: alloc::vec![Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(0., 1.)],
            triangles: alloc::vec![[0, 1, 2]],
            boundary_edges: alloc::vec![
                crate::mesh::BoundaryEdge { a: 0, b: 1, label: BoundaryLabel::Gamma },
                crate::mesh::BoundaryEdge { a: 1, b: 2, label: BoundaryLabel::Sigma },
                crate::mesh::BoundaryEdge { a: 2, b: 0, label: BoundaryLabel::Sigma },
            ],
            contact_vertices: [0, 1],
        };
        let g = [[1.0, 2.0], [-1.0, 0.5]];
        let w: Vec<Vec2> = mesh
            .vertices
            .iter()
            .map(|p| Vec2::new(g[0][0] * p.x + g[0][1] * p.y, g[1][0] * p.x + g[1][1] * p.y))
            .collect();
        let dt = 0.1;
        let step = AleStep { mesh_next: mesh.clone(), mesh_prev: mesh, w, dt };
        let got = scl_volume_integral(&step, &[1.0, 1.0, 1.0]);
        let exact = 0.5 * (1.5 * dt + 2.5 * dt * dt);
        assert!((got - exact).abs() < 1e-16);
    }

    #[test]
    fn constant_and_linear_extensions() {
        let m = build_initial_cap(2.0, 0.25).unwrap();
        let w = mesh_velocity(&m, &alloc::vec![Vec2::new(1.0, 0.0); m.vertices.len()]).unwrap();
        assert!(w.iter().all(|w| (w.x - 1.0).abs() < 1e-12 && w.y.abs() < 1e-12));
        let zero = mesh_velocity(&m, &alloc::vec![Vec2::ZERO; m.vertices.len()]).unwrap();
        assert!(zero.iter().all(|w| *w == Vec2::ZERO));
        let lin: Vec<Vec2> = m.vertices.iter().map(|p| Vec2::new(p.x, 0.0)).collect();
        let w = mesh_velocity(&m, &lin).unwrap();
        for (p, w) in m.vertices.iter().zip(&w) {
            assert!((w.x - p.x).abs() < 1e-12);
        }
    }

    #[test]
    fn contact_defect_constant_angle_is_zero() {
        let m = build_initial_cap(2.0, 0.3).unwrap();
        let mut w = alloc::vec![Vec2::ZERO; m.vertices.len()];
        w[m.contact_vertices[1]] = Vec2::new(1.0, 0.0);
        let step = AleStep::new(m, w, 0.01).unwrap();
        let d = scl_contact_defect(&step, &|_| 2.0, 1.0, 1.0);
        assert!(d.abs() < 1e-14, "{d}");
    }

    #[test]
    fn translation_has_no_surface_defect() {
        let m = crate::mesh::structured_square(2);
        let w = alloc::vec![Vec2::new(0.7, 0.0); m.vertices.len()];
        let step = AleStep::new(m, w, 0.1).unwrap();
        assert!(scl_surface_residual(&step) < 1e-14);
        assert!(step.consistency() < 1e-16);
    }
}
