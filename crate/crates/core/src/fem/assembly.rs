//! Assembly of the bilinear, trilinear and linear forms of the scheme.
//!
//! Velocity matrices act on the velocity block numbered by [`DofMap`]
//! (x-components of all nodes, then y-components). Vector basis function
//! `4c + k` of a triangle is ψ_k e_c, with ψ_0..ψ_2 the barycentric
//! coordinates and ψ_3 the bubble.

use super::dofmap::DofMap;
use super::quadrature::{p1b_gradients, RefTables};
use super::sparse::{Csr, Triplets};
use crate::error::{Error, Result};
use crate::geom::{orient, Vec2};
use crate::mesh::{BoundaryLabel, Mesh2D};
use crate::quad1d::GaussRule;
use alloc::vec::Vec;
use num_traits::Float;

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    /// Twice the signed area (Jacobian determinant of the reference map).
    pub det: f64,
    pub grad_lambda: [[f64; 2]; 3],
}

pub fn element_geometry(p: [Vec2; 3]) -> ElementGeometry {
    let det = orient(p[0], p[1], p[2]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        g[i] = [(a.y - b.y) / det, (b.x - a.x) / det];
    }
    ElementGeometry { det, grad_lambda: g }
}

/// Local velocity coefficients [vx0..vxb, vy0..vyb] of triangle `t`.
pub fn local_velocity(dofmap: &DofMap, tri: usize, t: &[usize; 3], v: &[f64]) -> [f64; 8] {
    let d = dofmap.element_velocity(tri, t);
    let mut out = [0.0; 8];
    for k in 0..8 {
        out[k] = v[d[k]];
    }
    out
}

/// Reference mass matrix of the four scalar shape functions (area factor
/// `det` not included).
pub fn reference_mass(tab: &RefTables) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for (q, w) in tab.rule.weights.iter().enumerate() {
        let f = &tab.phi[q];
        for a in 0..4 {
            for b in 0..4 {
                m[a][b] += w * f[a] * f[b];
            }
        }
    }
    m
}

fn push_block(t: &mut Triplets, rows: &[usize], cols: &[usize], block: &[[f64; 8]; 8]) {
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            if block[a][b] != 0.0 {
                t.push(i, j, block[a][b]);
            }
        }
    }
}

/// m(φ, v) = ∫ φ·v.
pub fn assemble_mass(mesh: &Mesh2D, dofmap: &DofMap) -> Csr {
    let tab = RefTables::standard();
    let mref = reference_mass(&tab);
    let n = dofmap.n_velocity();
    let mut t = Triplets::new(n, n);
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = element_geometry(mesh.triangle_points(e));
        let dofs = dofmap.element_velocity(e, tri);
        let mut blk = [[0.0; 8]; 8];
        for c in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    blk[4 * c + a][4 * c + b] = g.det * mref[a][b];
                }
            }
        }
        push_block(&mut t, &dofs, &dofs, &blk);
    }
    t.to_csr()
}

/// Element viscous block: (1/Re) ∫ [δ_{ci cj} ∇ψ_i·∇ψ_j + ∂_{cj}ψ_i ∂_{ci}ψ_j].
pub fn element_viscous(tab: &RefTables, g: &ElementGeometry, inv_re: f64) -> [[f64; 8]; 8] {
    let mut blk = [[0.0; 8]; 8];
    for (q, w) in tab.rule.weights.iter().enumerate() {
        let gr = p1b_gradients(tab.lambda[q], &g.grad_lambda);
        let s = w * g.det * inv_re;
        for i in 0..8 {
            let (ci, ki) = (i / 4, i % 4);
            for j in 0..8 {
                let (cj, kj) = (j / 4, j % 4);
                let mut v = gr[ki][cj] * gr[kj][ci];
                if ci == cj {
                    v += gr[ki][0] * gr[kj][0] + gr[ki][1] * gr[kj][1];
                }
                blk[i][j] += s * v;
            }
        }
    }
    blk
}

/// a(φ, v) = ∫ ½ D(φ) : (1/Re) D(v) with D(v) = ∇v + ∇vᵀ.
pub fn assemble_viscous(mesh: &Mesh2D, dofmap: &DofMap, re: f64) -> Csr {
    let tab = RefTables::standard();
    let n = dofmap.n_velocity();
    let mut t = Triplets::new(n, n);
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = element_geometry(mesh.triangle_points(e));
        let dofs = dofmap.element_velocity(e, tri);
        push_block(&mut t, &dofs, &dofs, &element_viscous(&tab, &g, 1.0 / re));
    }
    t.to_csr()
}

/// Element block of b(φ, q) = ∫ q div φ: rows are the three pressure
/// functions, columns the eight velocity functions.
pub fn element_divergence(tab: &RefTables, g: &ElementGeometry) -> [[f64; 8]; 3] {
    let mut blk = [[0.0; 8]; 3];
    for (q, w) in tab.rule.weights.iter().enumerate() {
        let gr = p1b_gradients(tab.lambda[q], &g.grad_lambda);
        let l = tab.lambda[q];
        for k in 0..3 {
            for j in 0..8 {
                blk[k][j] += w * g.det * l[k] * gr[j % 4][j / 4];
            }
        }
    }
    blk
}

/// Pressure–divergence coupling B with B[i][j] = ∫ q_i div φ_j.
pub fn assemble_pressure_div(mesh: &Mesh2D, dofmap: &DofMap) -> Csr {
    let tab = RefTables::standard();
    let mut t = Triplets::new(dofmap.n_pressure(), dofmap.n_velocity());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = element_geometry(mesh.triangle_points(e));
        let dofs = dofmap.element_velocity(e, tri);
        let blk = element_divergence(&tab, &g);
        for k in 0..3 {
            for j in 0..8 {
                t.push(tri[k], dofs[j], blk[k][j]);
            }
        }
    }
    t.to_csr()
}

/// Values at one quadrature point of a P1-plus-bubble vector field and its gradient.
#[inline]
pub fn eval_local(phi: &[f64; 4], gr: &[[f64; 2]; 4], loc: &[f64; 8]) -> (Vec2, [[f64; 2]; 2]) {
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for c in 0..2 {
        for k in 0..4 {
            let a = loc[4 * c + k];
            val[c] += a * phi[k];
            grad[c][0] += a * gr[k][0];
            grad[c][1] += a * gr[k][1];
        }
    }
    (Vec2::new(val[0], val[1]), grad)
}

/// Stabilised convection ĉ(φ, v) = ½c(φ, v; u) − ½c(v, φ; u) + ½d(φ, v; w)
/// with c(φ, v; u) = ∫ ((u·∇)v)·φ, d(φ, v; w) = ∫ (φ·v) div w and
/// u = v_adv − w. Row index is the test function φ.
pub fn assemble_convection(mesh: &Mesh2D, dofmap: &DofMap, v_adv: &[f64], w: &[Vec2]) -> Csr {
    let tab = RefTables::standard();
    let n = dofmap.n_velocity();
    let mut t = Triplets::new(n, n);
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = element_geometry(mesh.triangle_points(e));
        let dofs = dofmap.element_velocity(e, tri);
        let va = local_velocity(dofmap, e, tri, v_adv);
        let wl = [w[tri[0]], w[tri[1]], w[tri[2]]];
        let mut div_w = 0.0;
        for k in 0..3 {
            div_w += wl[k].x * g.grad_lambda[k][0] + wl[k].y * g.grad_lambda[k][1];
        }
        let mut blk = [[0.0; 8]; 8];
        for (q, wq) in tab.rule.weights.iter().enumerate() {
            let l = tab.lambda[q];
            let phi = &tab.phi[q];
            let gr = p1b_gradients(l, &g.grad_lambda);
            let (vq, _) = eval_local(phi, &gr, &va);
            let wq_v = wl[0] * l[0] + wl[1] * l[1] + wl[2] * l[2];
            let u = vq - wq_v;
            let s = wq * g.det;
            let mut adv = [0.0; 4];
            for k in 0..4 {
                adv[k] = u.x * gr[k][0] + u.y * gr[k][1];
            }
            for c in 0..2 {
                for a in 0..4 {
                    for b in 0..4 {
                        blk[4 * c + a][4 * c + b] += s
                            * (0.5 * phi[a] * adv[b] - 0.5 * adv[a] * phi[b]
                                + 0.5 * phi[a] * phi[b] * div_w);
                    }
                }
            }
        }
        push_block(&mut t, &dofs, &dofs, &blk);
    }
    t.to_csr()
}

/// Edge quadrature used for every wall and free-surface integral.
pub fn edge_rule() -> GaussRule {
    GaussRule::new(5)
}

/// r(φ, v) = ∫_Γ ς φ·v on the tangential (x) components of the wall.
pub fn assemble_slip(mesh: &Mesh2D, dofmap: &DofMap, slip: &dyn Fn(f64) -> f64) -> Result<Csr> {
    let n = dofmap.n_velocity();
    let mut t = Triplets::new(n, n);
    let rule = edge_rule();
    for e in mesh.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Gamma) {
        let (a, b) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let l = (b - a).norm();
        let mut blk = [[0.0; 2]; 2];
        for (s, w) in rule.unit() {
            let x = a.x + s * (b.x - a.x);
            let sg = slip(x);
            if !(sg >= 0.0) {
                return Err(Error::param("slip", alloc::format!("slip coefficient {sg} at x = {x} is negative")));
            }
            let f = [1.0 - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    blk[i][j] += w * l * sg * f[i] * f[j];
                }
            }
        }
        let idx = [dofmap.vel(0, e.a), dofmap.vel(0, e.b)];
        for i in 0..2 {
            for j in 0..2 {
                t.push(idx[i], idx[j], blk[i][j]);
            }
        }
    }
    Ok(t.to_csr())
}

/// f_st(φ) = (Ca·Re)⁻¹ Σ_edges t_e·(φ(end) − φ(start)), the exact integral
/// of div_Σ φ over the polygonal free surface.
pub fn assemble_surface_tension(mesh: &Mesh2D, dofmap: &DofMap, ca: f64, re: f64) -> Vec<f64> {
    let mut f = alloc::vec![0.0; dofmap.n_velocity()];
    let k = 1.0 / (ca * re);
    for e in mesh.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
        let d = mesh.vertices[e.b] - mesh.vertices[e.a];
        let t = d / d.norm();
        for (c, tc) in [t.x, t.y].into_iter().enumerate() {
            f[dofmap.vel(c, e.b)] += k * tc;
            f[dofmap.vel(c, e.a)] -= k * tc;
        }
    }
    f
}

/// f_cl(φ) = Σ_contacts cos θ_s(x_cl)/(Ca·Re) · m_∂Γ·φ(x_cl), with
/// m_∂Γ = (−1, 0) on the left and (+1, 0) on the right.
pub fn assemble_contact_line(
    mesh: &Mesh2D,
    dofmap: &DofMap,
    theta_s: &dyn Fn(f64) -> f64,
    ca: f64,
    re: f64,
) -> Vec<f64> {
    let mut f = alloc::vec![0.0; dofmap.n_velocity()];
    for (side, &c) in mesh.contact_vertices.iter().enumerate() {
        let m = if side == 0 { -1.0 } else { 1.0 };
        let x = mesh.vertices[c].x;
        f[dofmap.vel(0, c)] += Float::cos(theta_s(x)) / (ca * re) * m;
    }
    f
}

/// Gravity potential Φ(x) = Bo·(−sin α·x + cos α·y), Bo = Fr⁻².
#[inline]
pub fn potential(inv_fr2: f64, alpha: f64, p: Vec2) -> f64 {
    inv_fr2 * (-Float::sin(alpha) * p.x + Float::cos(alpha) * p.y)
}

/// f_gs(φ) = ∫_Σ Φ φ·n, exact per edge (the integrand is quadratic).
pub fn assemble_gravity_boundary(mesh: &Mesh2D, dofmap: &DofMap, inv_fr2: f64, alpha: f64) -> Vec<f64> {
    let mut f = alloc::vec![0.0; dofmap.n_velocity()];
    if inv_fr2 == 0.0 {
        return f;
    }
    for e in mesh.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
        let (a, b) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        // Outward normal times edge length.
        let nl = (b - a).rot_cw();
        let (pa, pb) = (potential(inv_fr2, alpha, a), potential(inv_fr2, alpha, b));
        // ∫₀¹ Φ(s)(1−s) ds and ∫₀¹ Φ(s) s ds for linear Φ.
        let ia = pa / 3.0 + pb / 6.0;
        let ib = pa / 6.0 + pb / 3.0;
        for (c, nc) in [nl.x, nl.y].into_iter().enumerate() {
            f[dofmap.vel(c, e.a)] += ia * nc;
            f[dofmap.vel(c, e.b)] += ib * nc;
        }
    }
    f
}

/// P1 stiffness matrix ∫ ∇λ_i·∇λ_j on the vertices.
pub fn assemble_p1_laplacian(mesh: &Mesh2D) -> Csr {
    let n = mesh.vertices.len();
    let mut t = Triplets::new(n, n);
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = element_geometry(mesh.triangle_points(e));
        let area = 0.5 * g.det;
        for a in 0..3 {
            for b in 0..3 {
                let ga = g.grad_lambda[a];
                let gb = g.grad_lambda[b];
                t.push(tri[a], tri[b], area * (ga[0] * gb[0] + ga[1] * gb[1]));
            }
        }
    }
    t.to_csr()
}

/// Evaluate a P1-plus-bubble field on triangle `tri` at barycentric point `l`.
pub fn eval_p1b(dofmap: &DofMap, mesh: &Mesh2D, v: &[f64], tri: usize, l: [f64; 3]) -> Vec2 {
    let t = &mesh.triangles[tri];
    let loc = local_velocity(dofmap, tri, t, v);
    let phi = super::quadrature::p1b_values(l);
    let mut out = [0.0; 2];
    for c in 0..2 {
        for k in 0..4 {
            out[c] += loc[4 * c + k] * phi[k];
        }
    }
    Vec2::new(out[0], out[1])
}
