//! One time step of the fully discrete scheme.
//!
//! With u = v − w and all quantities on the unknown configuration
//! Ω^{n+1} = Ωⁿ + Δt·w unless marked otherwise, the momentum residual tested
//! with φ is
//!
//! ```text
//!   ½(m^{n+1} + mⁿ)(φ, v) − mⁿ(φ, vⁿ)
//!   + Δt [ ½c(φ, v; u) − ½c(v, φ; u) + a(φ, v) + r(φ, v) − b(φ, p) ]
//!   + (Δt/2)(f_stⁿ + f_st^{n+1})(φ) − (Δt/2)(f_clⁿ + f_cl^{n+1})(φ)
//!   + ∫_{tⁿ}^{t^{n+1}} ∫_{Σ(t)} Φ φ·n dS dt
//! ```
//!
//! and the continuity residual is Δt·b(v, q). The mass average comes from
//! integrating the ½d(φ, v; w) part of the stabilised convection exactly in
//! time, which turns m^{n+1} − ½∫d dt into ½(m^{n+1} + mⁿ).
//!
//! The geometry and the fluid unknowns are solved together: every iterate
//! takes one Newton update of (v, p) on the current geometry, then rebuilds w
//! as the harmonic extension of the new boundary velocity. The Jacobian
//! includes the derivative of f_st^{n+1} with respect to the free-surface
//! vertex positions, which restores fast convergence when capillary forces
//! dominate.

use crate::ale::{gravity_load_integral, AleStep, HarmonicExtension};
use crate::error::{Error, Result};
use crate::fem::assembly::{
    assemble_contact_line, assemble_surface_tension, element_divergence, element_geometry, element_viscous,
    eval_local, local_velocity, reference_mass,
};
use crate::fem::quadrature::{p1b_gradients, RefTables};
use crate::fem::solver::{norm, saddle_order};
use crate::fem::{Csr, DofMap, SparseLu, SparseSystem, Symbolic};
use crate::geom::Vec2;
use crate::mesh::{move_mesh, BoundaryLabel, Mesh2D};
use crate::physics::{Params, State, StepReport};
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// Nonlinear-solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative residual tolerance.
    pub tol_newton: f64,
    /// Largest vertex displacement between successive geometry iterates.
    pub tol_geom: f64,
    /// Total iterate budget (each iterate is one Newton update plus one geometry update).
    pub max_iters: usize,
    pub linear_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol_newton: 1e-9, tol_geom: 1e-8, max_iters: 30, linear_tol: 1e-10 }
    }
}

/// Sparsity pattern and element scatter table of the coupled system for one
/// mesh connectivity.
#[derive(Debug, Clone)]
struct Layout {
    triangles: Vec<[usize; 3]>,
    dofmap: DofMap,
    pattern: Csr,
    /// For each triangle, the value positions of its 11×11 element block.
    positions: Vec<[u32; 121]>,
    symbolic: Arc<Symbolic>,
}

impl Layout {
    fn new(mesh: &Mesh2D) -> Result<Self> {
        let dofmap = DofMap::new(mesh);
        let n = dofmap.n_total();
        let mut rows: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let d = dofmap.element_dofs(e, tri);
            for &i in &d {
                rows[i].extend_from_slice(&d);
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = Csr::from_pattern(n, &rows);
        let positions = mesh
            .triangles
            .iter()
            .enumerate()
            .map(|(e, tri)| {
                let d = dofmap.element_dofs(e, tri);
                let mut pos = [0u32; 121];
                for a in 0..11 {
                    for b in 0..11 {
                        pos[11 * a + b] = pattern.position(d[a], d[b]).unwrap() as u32;
                    }
                }
                pos
            })
            .collect();
        let symbolic = Arc::new(Symbolic::new(&pattern, saddle_order(&dofmap, &mesh.triangles))?);
        Ok(Layout { triangles: mesh.triangles.clone(), dofmap, pattern, positions, symbolic })
    }
}

/// Assembled Newton system at one iterate.
#[derive(Debug, Clone)]
pub struct StepAssembly {
    /// Jacobian with Dirichlet rows and columns eliminated; rhs = −residual.
    pub system: SparseSystem,
    /// Full nonlinear residual (constrained rows zeroed).
    pub residual: Vec<f64>,
    /// Norm of the data the residual is measured against.
    pub scale: f64,
}

impl StepAssembly {
    pub fn relative_residual(&self) -> f64 {
        norm(&self.residual) / self.scale
    }
}

struct Assembler {
    tables: RefTables,
    mref: [[f64; 4]; 4],
}

impl Assembler {
    fn new() -> Self {
        let tables = RefTables::standard();
        let mref = reference_mass(&tables);
        Assembler { tables, mref }
    }

    /// Residual and Jacobian at the iterate (v, p) on `mesh_new` = xⁿ + Δt·w.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        layout: &Layout,
        prev: &State,
        mesh_new: &Mesh2D,
        w: &[Vec2],
        v: &[f64],
        p: &[f64],
        params: &Params,
        dt: f64,
    ) -> Result<StepAssembly> {
        let dm = &layout.dofmap;
        let n = dm.n_total();
        let nvel = dm.n_velocity();
        let mut jac = layout.pattern.clone();
        let mut res = alloc::vec![0.0; n];
        let inv_re = 1.0 / params.re();
        let tab = &self.tables;
        let mut data = alloc::vec![0.0; nvel];

        for (e, tri) in mesh_new.triangles.iter().enumerate() {
            let g1 = element_geometry(mesh_new.triangle_points(e));
            let p0 = prev.mesh.triangle_points(e);
            let det0 = crate::geom::orient(p0[0], p0[1], p0[2]);
            if !(g1.det > 0.0) {
                return Err(Error::TangledMesh { triangle: e, area: 0.5 * g1.det });
            }
            let dofs = dm.element_dofs(e, tri);
            let vl = local_velocity(dm, e, tri, v);
            let vn = local_velocity(dm, e, tri, &prev.v);
            let pl = [p[tri[0]], p[tri[1]], p[tri[2]]];
            let wl = [w[tri[0]], w[tri[1]], w[tri[2]]];
            let mut jl = [[0.0; 11]; 11];
            let mut rl = [0.0; 11];
            let mut dl = [0.0; 8];

            // Transient: ½(det0 + det1)·M̂ v − det0·M̂ vⁿ.
            let avg = 0.5 * (det0 + g1.det);
            for c in 0..2 {
                for a in 0..4 {
                    for b in 0..4 {
                        let m = self.mref[a][b];
                        jl[4 * c + a][4 * c + b] += avg * m;
                        rl[4 * c + a] += avg * m * vl[4 * c + b];
                        dl[4 * c + a] += det0 * m * vn[4 * c + b];
                    }
                }
            }
            for i in 0..8 {
                rl[i] -= dl[i];
            }

            // Viscous.
            let kv = element_viscous(tab, &g1, inv_re);
            for i in 0..8 {
                for j in 0..8 {
                    jl[i][j] += dt * kv[i][j];
                    rl[i] += dt * kv[i][j] * vl[j];
                }
            }

            // Pressure and continuity.
            let bl = element_divergence(tab, &g1);
            for k in 0..3 {
                for j in 0..8 {
                    let b = dt * bl[k][j];
                    jl[j][8 + k] -= b;
                    jl[8 + k][j] += b;
                    rl[j] -= b * pl[k];
                    rl[8 + k] += b * vl[j];
                }
            }

            // Skew-symmetrised convection, Newton-linearised in v.
            for (q, wq) in tab.rule.weights.iter().enumerate() {
                let l = tab.lambda[q];
                let phi = &tab.phi[q];
                let gr = p1b_gradients(l, &g1.grad_lambda);
                let (vq, dv) = eval_local(phi, &gr, &vl);
                let u = vq - (wl[0] * l[0] + wl[1] * l[1] + wl[2] * l[2]);
                let s = 0.5 * dt * wq * g1.det;
                let mut adv = [0.0; 4];
                for k in 0..4 {
                    adv[k] = u.x * gr[k][0] + u.y * gr[k][1];
                }
                let uv = [u.x * dv[0][0] + u.y * dv[0][1], u.x * dv[1][0] + u.y * dv[1][1]];
                let vc = [vq.x, vq.y];
                for i in 0..8 {
                    let (ci, ki) = (i / 4, i % 4);
                    rl[i] += s * (phi[ki] * uv[ci] - adv[ki] * vc[ci]);
                    for j in 0..8 {
                        let (cj, kj) = (j / 4, j % 4);
                        let mut t = phi[kj] * phi[ki] * dv[ci][cj] - phi[kj] * gr[ki][cj] * vc[ci];
                        if ci == cj {
                            t += adv[kj] * phi[ki] - adv[ki] * phi[kj];
                        }
                        jl[i][j] += s * t;
                    }
                }
            }

            let pos = &layout.positions[e];
            for a in 0..11 {
                res[dofs[a]] += rl[a];
                for b in 0..11 {
                    jac.values[pos[11 * a + b] as usize] += jl[a][b];
                }
            }
            for c in 0..2 {
                for a in 0..4 {
                    data[dofs[4 * c + a]] += dl[4 * c + a];
                }
            }
        }

        // Wall friction (static wall).
        let rule = crate::fem::assembly::edge_rule();
        for e in mesh_new.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Gamma) {
            let (a, b) = (mesh_new.vertices[e.a], mesh_new.vertices[e.b]);
            let l = (b - a).norm();
            let mut blk = [[0.0; 2]; 2];
            for (s, wq) in rule.unit() {
                let x = a.x + s * (b.x - a.x);
                let sg = params.slip.eval(x);
                if !(sg >= 0.0) {
                    return Err(Error::param("slip", format!("slip coefficient {sg} at x = {x} is negative")));
                }
                let f = [1.0 - s, s];
                for i in 0..2 {
                    for j in 0..2 {
                        blk[i][j] += wq * l * sg * f[i] * f[j];
                    }
                }
            }
            let idx = [dm.vel(0, e.a), dm.vel(0, e.b)];
            for i in 0..2 {
                for j in 0..2 {
                    let k = jac.position(idx[i], idx[j]).expect("wall edge lies in one triangle");
                    jac.values[k] += dt * blk[i][j];
                    res[idx[i]] += dt * blk[i][j] * v[idx[j]];
                }
            }
        }

        // Surface tension (trapezoidal in time) and its shape derivative.
        let (ca, re) = (params.ca(), params.re());
        let fst0 = assemble_surface_tension(&prev.mesh, dm, ca, re);
        let fst1 = assemble_surface_tension(mesh_new, dm, ca, re);
        let kst = 1.0 / params.ca_re();
        for e in mesh_new.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
            let d = mesh_new.vertices[e.b] - mesh_new.vertices[e.a];
            let len = d.norm();
            let nrm = d.rot_cw() / len;
            let nn = [[nrm.x * nrm.x, nrm.x * nrm.y], [nrm.y * nrm.x, nrm.y * nrm.y]];
            let coef = 0.5 * dt * dt * kst / len;
            for (va, sa) in [(e.a, 1.0), (e.b, -1.0)] {
                for (vb, sb) in [(e.a, 1.0), (e.b, -1.0)] {
                    for c in 0..2 {
                        for c2 in 0..2 {
                            let k = jac.position(dm.vel(c, va), dm.vel(c2, vb)).expect("surface edge lies in one triangle");
                            jac.values[k] += coef * sa * sb * nn[c][c2];
                        }
                    }
                }
            }
        }
        // Contact line (trapezoidal in time).
        let th = params.theta_s.as_fn();
        let fcl0 = assemble_contact_line(&prev.mesh, dm, th, ca, re);
        let fcl1 = assemble_contact_line(mesh_new, dm, th, ca, re);
        // Gravity, exact in time over the affine motion.
        let step = AleStep { mesh_prev: prev.mesh.clone(), mesh_next: mesh_new.clone(), w: w.to_vec(), dt };
        let grav = gravity_load_integral(&step, dm, params.inv_fr2(), params.alpha);
        let mut forces = alloc::vec![0.0; nvel];
        for i in 0..nvel {
            let f = 0.5 * dt * (fst0[i] + fst1[i]) - 0.5 * dt * (fcl0[i] + fcl1[i]) + grav[i];
            res[i] += f;
            forces[i] = f;
        }

        for &d in &dm.dirichlet {
            res[d] = 0.0;
        }
        let scale = (norm(&data) + norm(&forces)).max(1e-300);
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let mut system = SparseSystem::new(jac, rhs);
        let zeros = alloc::vec![0.0; dm.dirichlet.len()];
        system.apply_dirichlet(&dm.dirichlet, &zeros);
        Ok(StepAssembly { system, residual: res, scale })
    }
}

/// Assemble the Newton system of one step at the iterate `guess`, whose mesh
/// must equal `state_n.mesh` moved by Δt·`guess.w`.
pub fn assemble_step_system(state_n: &State, guess: &State, params: &Params, dt: f64) -> Result<StepAssembly> {
    let layout = Layout::new(&state_n.mesh)?;
    Assembler::new().assemble(&layout, state_n, &guess.mesh, &guess.w, &guess.v, &guess.p, params, dt)
}

/// Time stepper with cached symbolic factorizations.
pub struct Stepper {
    pub settings: SolverSettings,
    layout: Option<Layout>,
    harmonic: HarmonicExtension,
    assembler: Assembler,
}

impl Default for Stepper {
    fn default() -> Self {
        Self::new(SolverSettings::default())
    }
}

impl Stepper {
    pub fn new(settings: SolverSettings) -> Self {
        Stepper { settings, layout: None, harmonic: HarmonicExtension::new(), assembler: Assembler::new() }
    }

    fn layout(&mut self, mesh: &Mesh2D) -> Result<&Layout> {
        let stale = match &self.layout {
            Some(l) => l.triangles != mesh.triangles,
            None => true,
        };
        if stale {
            self.layout = Some(Layout::new(mesh)?);
        }
        Ok(self.layout.as_ref().unwrap())
    }

    /// Advance `prev` by `dt`.
    pub fn step(&mut self, prev: &State, params: &Params, dt: f64) -> Result<(State, StepReport)> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        let settings = self.settings;
        self.layout(&prev.mesh)?;
        let fail = |reason: alloc::string::String| Error::StepFailure { t: prev.t, reason };
        let mut v = prev.v.clone();
        let mut p = prev.p.clone();
        let mut w = prev.w.clone();
        let mut mesh = match move_mesh(&prev.mesh, &w, dt) {
            Ok(m) => m,
            Err(_) => {
                w = alloc::vec![Vec2::ZERO; w.len()];
                prev.mesh.clone()
            }
        };
        let mut geom_delta = f64::INFINITY;
        let mut report = StepReport { dt_used: dt, ..Default::default() };
        let mut last_rel = f64::INFINITY;
        for k in 0..=settings.max_iters {
            let layout = self.layout.as_ref().unwrap();
            let asm = self.assembler.assemble(layout, prev, &mesh, &w, &v, &p, params, dt)?;
            let rel = asm.relative_residual();
            if !rel.is_finite() {
                return Err(fail(format!("residual is not finite after {k} iterations")));
            }
            report.newton_residual = rel;
            report.geometry_displacement_delta = geom_delta;
            if k > 0 && rel <= settings.tol_newton && geom_delta <= settings.tol_geom {
                report.newton_iters = k;
                report.geometry_iters = k;
                let state = State { mesh, v, p, w, t: prev.t + dt };
                return Ok((state, report));
            }
            if k == settings.max_iters {
                break;
            }
            if k > 4 && rel > 1e3 * last_rel.max(settings.tol_newton) {
                return Err(fail(format!("Newton iteration diverging (relative residual {rel:e})")));
            }
            last_rel = rel;
            let lu = SparseLu::factor(layout.symbolic.clone(), &asm.system.matrix)?;
            let (dx, lin) = lu.solve_refined(&asm.system.matrix, &asm.system.rhs, settings.linear_tol);
            if !(lin <= 1e-6) {
                return Err(fail(format!("linear solve stalled at relative residual {lin:e}")));
            }
            let dm = &layout.dofmap;
            let nvel = dm.n_velocity();
            for i in 0..nvel {
                v[i] += dx[i];
            }
            for i in 0..dm.n_pressure() {
                p[i] += dx[nvel + i];
            }
            let trace = crate::ale::boundary_trace(&mesh, dm, &v);
            let w_new = self.harmonic.extend(&mesh, &trace)?;
            geom_delta = w_new.iter().zip(&w).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max) * dt;
            w = w_new;
            mesh = move_mesh(&prev.mesh, &w, dt).map_err(|e| fail(format!("{e}")))?;
        }
        Err(fail(format!(
            "no convergence in {} iterations (relative residual {:e}, geometry change {:e})",
            settings.max_iters, report.newton_residual, report.geometry_displacement_delta
        )))
    }
}

/// Advance one step with default settings and fresh caches.
pub fn step(state_n: &State, params: &Params, dt: f64) -> Result<(State, StepReport)> {
    Stepper::default().step(state_n, params, dt)
}
