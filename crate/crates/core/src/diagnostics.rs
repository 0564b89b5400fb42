//! Energies, powers and the per-step discrete energy balance.

use crate::ale::{potential_energy, scl_contact_defect, scl_gravity_integral, scl_surface_defect, scl_volume_integral, AleStep};
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_mass, assemble_slip, assemble_viscous, potential};
use crate::fem::DofMap;
use crate::geom::Vec2;
use crate::mesh::{boundary_frame, contact_angles, measures, BoundaryLabel, Mesh2D};
use crate::physics::{Params, State};
use crate::quad1d;
use alloc::vec::Vec;
use num_traits::Float;

/// Kinetic, free-surface, wetting and potential energy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energies {
    pub e_k: f64,
    pub e_fs: f64,
    pub e_w: f64,
    pub e_p: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.e_k + self.e_fs + self.e_w + self.e_p
    }
}

/// Everything recorded for one time level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    pub t: f64,
    pub energies: Energies,
    pub p_v: f64,
    pub p_fr: f64,
    /// Discrete balance 𝓔: rates of change of the energies plus the powers.
    pub balance: f64,
    pub euler_diss: f64,
    pub vol_rel_err: f64,
    /// (left, right) contact angles.
    pub contact_angles: (f64, f64),
    pub v_cm: Vec2,
    /// |time-integrated div w − area change|.
    pub scl_vol: f64,
    /// Signed trapezoidal defect of the free-surface energy law (energy units).
    pub scl_surf: f64,
    /// Signed trapezoidal defect of the wetting energy law (energy units).
    pub scl_cl: f64,
    /// |exact gravity flux integral − potential energy change|.
    pub scl_grav: f64,
    /// The balance of this row straddles a remeshing.
    pub remeshed: bool,
}

impl EnergyReport {
    /// The balance predicted by the scheme: −euler_diss − (d_surf − d_cl)/Δt.
    pub fn predicted_balance(&self, dt: f64) -> f64 {
        -self.euler_diss - (self.scl_surf - self.scl_cl) / dt
    }
}

/// Wetting energy −(Ca·Re)⁻¹ ∫_Γ cos θ_s between the contact points.
pub fn wetting_energy(mesh: &Mesh2D, params: &Params) -> f64 {
    let xl = mesh.vertices[mesh.contact_vertices[0]].x;
    let xr = mesh.vertices[mesh.contact_vertices[1]].x;
    let th = params.theta_s.clone();
    -quad1d::integrate(move |x| Float::cos(th.eval(x)), xl, xr, 1e-14) / params.ca_re()
}

pub fn energies(state: &State, params: &Params) -> Energies {
    let dm = DofMap::new(&state.mesh);
    let m = assemble_mass(&state.mesh, &dm);
    let (_, ls, _) = measures(&state.mesh);
    Energies {
        e_k: 0.5 * m.bilinear(&state.v, &state.v),
        e_fs: ls / params.ca_re(),
        e_w: wetting_energy(&state.mesh, params),
        e_p: potential_energy(&state.mesh, params.inv_fr2(), params.alpha),
    }
}

/// Viscous and friction power (P_v, P_fr) with a static wall.
pub fn powers(state: &State, params: &Params) -> Result<(f64, f64)> {
    let dm = DofMap::new(&state.mesh);
    let a = assemble_viscous(&state.mesh, &dm, params.re());
    let r = assemble_slip(&state.mesh, &dm, params.slip.as_fn())?;
    Ok((a.bilinear(&state.v, &state.v), r.bilinear(&state.v, &state.v)))
}

/// 𝓔 from two energy snapshots and the end-of-step powers.
pub fn balance_from(prev: &Energies, next: &Energies, p_v: f64, p_fr: f64, dt: f64) -> f64 {
    (next.e_k - prev.e_k) / dt
        + p_v
        + (next.e_fs - prev.e_fs) / dt
        + (next.e_w - prev.e_w) / dt
        + p_fr
        + (next.e_p - prev.e_p) / dt
}

pub fn discrete_balance(state_n: &State, state_np1: &State, params: &Params, dt: f64) -> Result<f64> {
    let (p_v, p_fr) = powers(state_np1, params)?;
    Ok(balance_from(&energies(state_n, params), &energies(state_np1, params), p_v, p_fr, dt))
}

/// (1/Δt) ∫_{Ωⁿ} ½ |v^{n+1} − vⁿ|², with v^{n+1} pulled back coefficientwise.
pub fn euler_dissipation(state_n: &State, state_np1: &State, dt: f64) -> Result<f64> {
    if state_n.mesh.triangles != state_np1.mesh.triangles {
        return Err(Error::Input("Euler dissipation needs two states on the same connectivity".into()));
    }
    let dm = DofMap::new(&state_n.mesh);
    let m = assemble_mass(&state_n.mesh, &dm);
    let d: Vec<f64> = state_np1.v.iter().zip(&state_n.v).map(|(a, b)| a - b).collect();
    Ok(0.5 * m.bilinear(&d, &d) / dt)
}

/// v_cm = |Ω|⁻¹ ∮ x (v·n) dS, exact per edge.
pub fn center_of_mass_velocity(state: &State) -> Vec2 {
    let mesh = &state.mesh;
    let dm = DofMap::new(mesh);
    let (area, _, _) = measures(mesh);
    let vel = |i: usize| Vec2::new(state.v[dm.vel(0, i)], state.v[dm.vel(1, i)]);
    let g = 0.5 / Float::sqrt(3.0);
    let mut acc = Vec2::ZERO;
    for e in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let nl = (b - a).rot_cw();
        let (va, vb) = (vel(e.a), vel(e.b));
        for s in [0.5 - g, 0.5 + g] {
            let x = a.lerp(b, s);
            let vn = va.lerp(vb, s).dot(nl);
            acc += x * (0.5 * vn);
        }
    }
    acc / area
}

/// Volume-integral form of the centre-of-mass velocity, for cross-checks.
pub fn center_of_mass_velocity_volume(state: &State) -> Vec2 {
    let mesh = &state.mesh;
    let dm = DofMap::new(mesh);
    let tab = crate::fem::quadrature::RefTables::standard();
    let (area, _, _) = measures(mesh);
    let mut acc = Vec2::ZERO;
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(e);
        let det = crate::geom::orient(p[0], p[1], p[2]);
        for (q, w) in tab.rule.weights.iter().enumerate() {
            let v = crate::fem::assembly::eval_p1b(&dm, mesh, &state.v, e, tab.lambda[q]);
            acc += v * (w * det);
        }
        let _ = tri;
    }
    acc / area
}

pub fn volume_error(state: &State, v0: f64) -> f64 {
    (v0 - measures(&state.mesh).0).abs() / v0
}

/// Per-step space-conservation audit quantities (scl_vol, scl_surf, scl_cl, scl_grav).
pub fn scl_audit(step: &AleStep, params: &Params) -> (f64, f64, f64, f64) {
    let ones = alloc::vec![1.0; step.mesh_prev.vertices.len()];
    let a0 = measures(&step.mesh_prev).0;
    let a1 = measures(&step.mesh_next).0;
    let vol = (scl_volume_integral(step, &ones) - (a1 - a0)).abs();
    let surf = scl_surface_defect(step, 1.0 / params.ca_re());
    let cl = scl_contact_defect(step, params.theta_s.as_fn(), params.ca(), params.re());
    let (bo, al) = (params.inv_fr2(), params.alpha);
    let grav = (scl_gravity_integral(step, bo, al)
        - (potential_energy(&step.mesh_next, bo, al) - potential_energy(&step.mesh_prev, bo, al)))
        .abs();
    (vol, surf, cl, grav)
}

/// Report for the initial state of a run.
pub fn initial_report(state: &State, params: &Params) -> Result<EnergyReport> {
    let (p_v, p_fr) = powers(state, params)?;
    let frame = boundary_frame(&state.mesh)?;
    Ok(EnergyReport {
        t: state.t,
        energies: energies(state, params),
        p_v,
        p_fr,
        vol_rel_err: volume_error(state, params.v0),
        contact_angles: contact_angles(&state.mesh, &frame),
        v_cm: center_of_mass_velocity(state),
        ..Default::default()
    })
}

/// Report for an accepted step from `prev` (on the same connectivity as
/// `next`). `prev_energies` are the energies the balance is measured against;
/// they differ from those of `prev` only when `prev` is the output of a remesh.
pub fn step_report(
    prev: &State,
    prev_energies: &Energies,
    next: &State,
    params: &Params,
    dt: f64,
    remeshed: bool,
) -> Result<EnergyReport> {
    let step = AleStep::from_meshes(prev.mesh.clone(), next.mesh.clone(), dt)?;
    let e1 = energies(next, params);
    let (p_v, p_fr) = powers(next, params)?;
    let (scl_vol, scl_surf, scl_cl, scl_grav) = scl_audit(&step, params);
    let frame = boundary_frame(&next.mesh)?;
    Ok(EnergyReport {
        t: next.t,
        energies: e1,
        p_v,
        p_fr,
        balance: balance_from(prev_energies, &e1, p_v, p_fr, dt),
        euler_diss: euler_dissipation(prev, next, dt)?,
        vol_rel_err: volume_error(next, params.v0),
        contact_angles: contact_angles(&next.mesh, &frame),
        v_cm: center_of_mass_velocity(next),
        scl_vol,
        scl_surf,
        scl_cl,
        scl_grav,
        remeshed,
    })
}

/// Residuals (left side minus right side) of the semi-discrete energy-rate
/// identities for potential, wetting and free-surface energy, with the time
/// derivative replaced by a forward difference over the motion x + Δt·w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResiduals {
    pub potential: f64,
    pub wetting: f64,
    pub free_surface: f64,
}

/// `v` is a mini-element velocity on `mesh`, `w` an arbitrary P1 mesh
/// velocity (wall vertices must have w_y = 0 and v_y = 0).
pub fn rate_residuals(mesh: &Mesh2D, v: &[f64], w: &[Vec2], params: &Params, dt: f64) -> Result<RateResiduals> {
    let dm = DofMap::new(mesh);
    let moved = crate::mesh::move_mesh(mesh, w, dt)?;
    let (bo, al) = (params.inv_fr2(), params.alpha);
    let k = 1.0 / params.ca_re();
    let vel = |i: usize| Vec2::new(v[dm.vel(0, i)], v[dm.vel(1, i)]);
    let grad_phi = Vec2::new(-Float::sin(al), Float::cos(al)) * bo;

    // Potential: ∫ v·∇Φ = dE_p/dt − ∫ Φ div v + ∮ Φ (v − w)·n.
    let tab = crate::fem::quadrature::RefTables::standard();
    let mut lhs = 0.0;
    let mut phi_div = 0.0;
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let g = crate::fem::assembly::element_geometry(mesh.triangle_points(e));
        let loc = crate::fem::assembly::local_velocity(&dm, e, tri, v);
        let pts = mesh.triangle_points(e);
        for (q, wq) in tab.rule.weights.iter().enumerate() {
            let l = tab.lambda[q];
            let gr = crate::fem::quadrature::p1b_gradients(l, &g.grad_lambda);
            let (vq, dv) = crate::fem::assembly::eval_local(&tab.phi[q], &gr, &loc);
            let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2];
            lhs += wq * g.det * vq.dot(grad_phi);
            phi_div += wq * g.det * potential(bo, al, x) * (dv[0][0] + dv[1][1]);
        }
    }
    let mut flux = 0.0;
    let gq = 0.5 / Float::sqrt(3.0);
    for e in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[e.a], mesh.vertices[e.b]);
        let nl = (b - a).rot_cw();
        for s in [0.5 - gq, 0.5 + gq] {
            let rel = vel(e.a).lerp(vel(e.b), s) - w[e.a].lerp(w[e.b], s);
            flux += 0.5 * potential(bo, al, a.lerp(b, s)) * rel.dot(nl);
        }
    }
    let dep = (potential_energy(&moved, bo, al) - potential_energy(mesh, bo, al)) / dt;
    let potential_res = lhs - (dep - phi_div + flux);

    // Wetting: Σ_cl −cos θ_s k m·v = dE_w/dt + Σ_cl −cos θ_s k m·(v − w).
    let mut lhs = 0.0;
    let mut corr = 0.0;
    for (side, &c) in mesh.contact_vertices.iter().enumerate() {
        let m = if side == 0 { -1.0 } else { 1.0 };
        let cs = -Float::cos(params.theta_s.eval(mesh.vertices[c].x)) * k;
        lhs += cs * m * vel(c).x;
        corr += cs * m * (vel(c).x - w[c].x);
    }
    let dew = (wetting_energy(&moved, params) - wetting_energy(mesh, params)) / dt;
    let wetting_res = lhs - (dew + corr);

    // Free surface: ∫_Σ div_Σ v k = dE_fs/dt + ∫_Σ div_Σ(v − w) k.
    let mut lhs = 0.0;
    let mut corr = 0.0;
    for e in mesh.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
        let t = (mesh.vertices[e.b] - mesh.vertices[e.a]).normalized();
        lhs += k * t.dot(vel(e.b) - vel(e.a));
        corr += k * t.dot((vel(e.b) - w[e.b]) - (vel(e.a) - w[e.a]));
    }
    let defs = k * (measures(&moved).1 - measures(mesh).1) / dt;
    let surface_res = lhs - (defs + corr);

    Ok(RateResiduals { potential: potential_res, wetting: wetting_res, free_surface: surface_res })
}
