//! Remeshing when element quality degrades.

use super::{build_from_boundary, measures, mesh_quality, Mesh2D};
use crate::ale::{boundary_trace, HarmonicExtension};
use crate::error::{Error, Result};
use crate::fem::assembly::eval_p1b;
use crate::fem::DofMap;
use crate::geom::{orient, Vec2};
use crate::physics::State;
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

/// Thresholds on the worst edge ratio and aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptCriterion {
    pub max_edge_ratio: f64,
    pub max_aspect_ratio: f64,
}

impl Default for AdaptCriterion {
    fn default() -> Self {
        AdaptCriterion { max_edge_ratio: 3.0, max_aspect_ratio: 4.0 }
    }
}

impl AdaptCriterion {
    pub fn triggered(&self, mesh: &Mesh2D) -> bool {
        let q = mesh_quality(mesh);
        q.q_e > self.max_edge_ratio || q.q_a > self.max_aspect_ratio
    }
}

/// Points at uniform arc-length spacing along a polyline, end points kept.
/// Returns `n + 1` points.
pub fn resample_boundary(poly: &[Vec2], n: usize) -> Vec<Vec2> {
    let mut cum = alloc::vec![0.0; poly.len()];
    for i in 1..poly.len() {
        cum[i] = cum[i - 1] + (poly[i] - poly[i - 1]).norm();
    }
    let total = *cum.last().unwrap_or(&0.0);
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let s = total * k as f64 / n as f64;
        while seg + 2 < poly.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let r = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(poly[seg].lerp(poly[seg + 1], r));
    }
    out[0] = poly[0];
    out[n] = *poly.last().unwrap();
    out
}

/// Enclosed area of wall points (left to right) and surface points (right to
/// left, contacts excluded).
fn enclosed(gamma: &[Vec2], sigma: &[Vec2]) -> f64 {
    let mut poly = gamma.to_vec();
    poly.extend_from_slice(sigma);
    crate::geom::shoelace(&poly)
}

/// New boundary with uniform spacing close to `h` and the same enclosed area.
fn new_boundary(mesh: &Mesh2D, h: f64) -> Result<(Vec<Vec2>, Vec<Vec2>)> {
    let area = measures(mesh).0;
    let sig: Vec<Vec2> = mesh.sigma_chain().iter().map(|&i| mesh.vertices[i]).collect();
    let gam: Vec<Vec2> = mesh.gamma_chain().iter().map(|&i| mesh.vertices[i]).collect();
    let len = |p: &[Vec2]| p.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>();
    let ns = Float::ceil(len(&sig) / h).max(3.0) as usize;
    let ng = Float::ceil(len(&gam) / h).max(2.0) as usize;
    let mut sigma = resample_boundary(&sig, ns);
    let gamma = resample_boundary(&gam, ng);
    if sigma[0] != gam[gam.len() - 1] || sigma[ns] != gam[0] {
        return Err(Error::Adaptation("resampling moved a contact point".into()));
    }
    sigma.pop();
    sigma.remove(0);
    // Restore the area by a uniform normal shift of the free-surface interior.
    for _ in 0..4 {
        let defect = area - enclosed(&gamma, &sigma);
        let mut full = alloc::vec![gamma[gamma.len() - 1]];
        full.extend_from_slice(&sigma);
        full.push(gamma[0]);
        let l = len(&full);
        let shift = defect / l;
        let normals: Vec<Vec2> = (1..full.len() - 1)
            .map(|i| (full[i + 1] - full[i - 1]).rot_cw().normalized())
            .collect();
        for (p, n) in sigma.iter_mut().zip(normals) {
            *p += n * shift;
            p.y = p.y.max(0.0);
        }
    }
    Ok((gamma, sigma))
}

fn locate(mesh: &Mesh2D, p: Vec2) -> (usize, [f64; 3]) {
    let mut best = (0, [1.0, 0.0, 0.0]);
    let mut best_out = f64::INFINITY;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_points(t);
        let d = orient(a, b, c);
        let l = [orient(p, b, c) / d, orient(a, p, c) / d, orient(a, b, p) / d];
        let out = -l[0].min(l[1]).min(l[2]);
        if out < best_out {
            best_out = out;
            best = (t, l);
            if out <= 0.0 {
                break;
            }
        }
    }
    let (t, mut l) = best;
    if best_out > 0.0 {
        for x in &mut l {
            *x = x.max(0.0);
        }
        let s = l[0] + l[1] + l[2];
        for x in &mut l {
            *x /= s;
        }
    }
    (t, l)
}

/// Transfer velocity and pressure to a new mesh of the same domain.
///
/// Velocity is evaluated from the old P1-plus-bubble field at the new
/// vertices (bubbles start at zero); points just outside the old mesh use the
/// nearest element. Pressure is interpolated linearly. The mesh velocity is
/// recomputed as the harmonic extension of the new boundary velocity.
pub fn interpolate_state(old: &State, mesh: Mesh2D) -> Result<State> {
    let dm_old = DofMap::new(&old.mesh);
    let dm = DofMap::new(&mesh);
    let mut v = alloc::vec![0.0; dm.n_velocity()];
    let mut p = alloc::vec![0.0; mesh.vertices.len()];
    for (i, &x) in mesh.vertices.iter().enumerate() {
        let (t, l) = locate(&old.mesh, x);
        let u = eval_p1b(&dm_old, &old.mesh, &old.v, t, l);
        v[dm.vel(0, i)] = u.x;
        v[dm.vel(1, i)] = u.y;
        let tri = old.mesh.triangles[t];
        p[i] = l[0] * old.p[tri[0]] + l[1] * old.p[tri[1]] + l[2] * old.p[tri[2]];
    }
    dm.constrain(&mut v);
    let trace = boundary_trace(&mesh, &dm, &v);
    let w = HarmonicExtension::new().extend(&mesh, &trace)?;
    Ok(State { mesh, v, p, w, t: old.t })
}

/// Rebuild the mesh of `state` with target size `h` when `criterion` is
/// triggered; otherwise return the state unchanged. The flag tells which.
pub fn adapt_mesh(state: &State, h: f64, criterion: &AdaptCriterion) -> Result<(State, bool)> {
    if !criterion.triggered(&state.mesh) {
        return Ok((state.clone(), false));
    }
    let (gamma, sigma) = new_boundary(&state.mesh, h)?;
    let mesh = build_from_boundary(&gamma, &sigma, h).map_err(|e| Error::Adaptation(format!("{e}")))?;
    let (a0, a1) = (measures(&state.mesh).0, measures(&mesh).0);
    if (a1 - a0).abs() > 1e-3 * a0 {
        return Err(Error::Adaptation(format!("area changed from {a0} to {a1}")));
    }
    Ok((interpolate_state(state, mesh)?, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_initial_cap;

    fn sheared(state: &State, s: f64) -> State {
        let mut out = state.clone();
        for p in &mut out.mesh.vertices {
            p.x += s * p.y * p.y;
        }
        out
    }

    #[test]
    fn untouched_when_quality_is_fine() {
        let st = State::at_rest(build_initial_cap(2.0, 0.2).unwrap(), 0.0);
        let (out, done) = adapt_mesh(&st, 0.2, &AdaptCriterion::default()).unwrap();
        assert!(!done);
        assert_eq!(out, st);
    }

    #[test]
    fn remesh_restores_quality_area_and_constants() {
        let mut st = State::at_rest(build_initial_cap(2.0, 0.2).unwrap(), 1.5);
        for i in 0..st.mesh.vertices.len() {
            st.v[i] = 0.3;
            st.p[i] = -1.25;
        }
        let st = sheared(&st, 3.0);
        let crit = AdaptCriterion::default();
        assert!(crit.triggered(&st.mesh));
        let (out, done) = adapt_mesh(&st, 0.2, &crit).unwrap();
        assert!(done);
        out.mesh.validate().unwrap();
        let q = mesh_quality(&out.mesh);
        assert!(q.q_e <= 3.0 && q.q_a <= 4.0, "{q:?}");
        let (a0, a1) = (measures(&st.mesh).0, measures(&out.mesh).0);
        assert!((a1 - a0).abs() <= 1e-3 * a0, "{a0} {a1}");
        let odm = out.dofmap();
        for i in 0..out.mesh.vertices.len() {
            assert!((out.v[odm.vel(0, i)] - 0.3).abs() < 1e-13);
            assert!((out.p[i] + 1.25).abs() < 1e-13);
        }
        assert_eq!(out.t, 1.5);
        // Contact points keep their positions.
        for k in 0..2 {
            let a = st.mesh.vertices[st.mesh.contact_vertices[k]];
            let b = out.mesh.vertices[out.mesh.contact_vertices[k]];
            assert_eq!(a, b);
        }
    }

    #[test]
    fn resampling_is_uniform() {
        let poly = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 2.0)];
        let r = resample_boundary(&poly, 6);
        assert_eq!(r.len(), 7);
        for w in r.windows(2) {
            assert!(((w[1] - w[0]).norm() - 0.5).abs() < 1e-12);
        }
    }
}
