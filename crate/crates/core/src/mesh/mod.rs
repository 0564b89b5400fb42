//! Moving triangulations of the droplet domain.

mod adapt;
mod generate;

pub use adapt::{adapt_mesh, interpolate_state, resample_boundary, AdaptCriterion};
pub use generate::{build_from_boundary, delaunay};

use crate::error::{Error, Result};
use crate::geom::{orient, shoelace, Vec2};
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

/// Which part of the boundary an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryLabel {
    /// Liquid–gas free surface.
    Sigma,
    /// Wetted part of the wall (lies on y = 0).
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub label: BoundaryLabel,
}

/// Triangulated droplet domain.
///
/// `boundary_edges` is a counterclockwise closed loop that starts at the left
/// contact vertex, runs along the wall to the right contact vertex and
/// returns over the free surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub vertices: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// [left, right].
    pub contact_vertices: [usize; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub q_e: f64,
    pub q_a: f64,
}

/// Co-normals at one contact vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactConormals {
    pub vertex: usize,
    /// Unit tangent of the free surface pointing out of it at the contact point.
    pub sigma: Vec2,
    /// Unit tangent of the wall pointing out of the wetted region.
    pub gamma: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFrame {
    /// Outward unit normal of each boundary edge (same order as `boundary_edges`).
    pub edge_normals: Vec<Vec2>,
    /// Boundary vertices in loop order (the start vertex of each edge).
    pub boundary_vertices: Vec<usize>,
    /// Length-weighted average of the adjacent edge normals, renormalised.
    pub vertex_normals: Vec<Vec2>,
    /// [left, right].
    pub conormals: [ContactConormals; 2],
}

impl Mesh2D {
    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient(a, b, c)
    }

    /// Wall vertices from left to right contact.
    pub fn gamma_chain(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Gamma) {
            if out.is_empty() {
                out.push(e.a);
            }
            out.push(e.b);
        }
        out
    }

    /// Free-surface vertices from right to left contact.
    pub fn sigma_chain(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Sigma) {
            if out.is_empty() {
                out.push(e.a);
            }
            out.push(e.b);
        }
        out
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut m = alloc::vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            m[e.a] = true;
            m[e.b] = true;
        }
        m
    }

    pub fn gamma_mask(&self) -> Vec<bool> {
        let mut m = alloc::vec![false; self.vertices.len()];
        for e in self.boundary_edges.iter().filter(|e| e.label == BoundaryLabel::Gamma) {
            m[e.a] = true;
            m[e.b] = true;
        }
        m
    }

    /// The boundary loop as a polygon.
    pub fn boundary_polygon(&self) -> Vec<Vec2> {
        self.boundary_edges.iter().map(|e| self.vertices[e.a]).collect()
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Geometry(format!("triangle {t} references a missing vertex")));
            }
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(Error::TangledMesh { triangle: t, area: a });
            }
        }
        let be = &self.boundary_edges;
        if be.len() < 3 {
            return Err(Error::Geometry("boundary loop has fewer than three edges".into()));
        }
        for k in 0..be.len() {
            if be[k].b != be[(k + 1) % be.len()].a {
                return Err(Error::Geometry(format!("boundary loop broken after edge {k}")));
            }
        }
        let switches = (0..be.len())
            .filter(|&k| be[k].label != be[(k + 1) % be.len()].label)
            .count();
        if switches != 2 {
            return Err(Error::Geometry(format!(
                "Sigma and Gamma must each be connected ({switches} label switches)"
            )));
        }
        for e in be.iter().filter(|e| e.label == BoundaryLabel::Gamma) {
            for v in [e.a, e.b] {
                if self.vertices[v].y.abs() > 1e-12 {
                    return Err(Error::Geometry(format!("wall vertex {v} is off y = 0")));
                }
            }
        }
        let [l, r] = self.contact_vertices;
        for c in [l, r] {
            let ns = be.iter().filter(|e| e.label == BoundaryLabel::Sigma && (e.a == c || e.b == c)).count();
            let ng = be.iter().filter(|e| e.label == BoundaryLabel::Gamma && (e.a == c || e.b == c)).count();
            if ns != 1 || ng != 1 {
                return Err(Error::Geometry(format!("contact vertex {c} is not a Sigma/Gamma junction")));
            }
        }
        if self.vertices[l].x >= self.vertices[r].x {
            return Err(Error::Geometry("left contact vertex is not left of the right one".into()));
        }
        Ok(())
    }
}

/// Exact polygonal area and the lengths of Σ and Γ.
pub fn measures(mesh: &Mesh2D) -> (f64, f64, f64) {
    let area = (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum();
    let mut ls = 0.0;
    let mut lg = 0.0;
    for e in &mesh.boundary_edges {
        let l = (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
        match e.label {
            BoundaryLabel::Sigma => ls += l,
            BoundaryLabel::Gamma => lg += l,
        }
    }
    (area, ls, lg)
}

/// Shoelace area of the boundary loop.
pub fn boundary_area(mesh: &Mesh2D) -> f64 {
    shoelace(&mesh.boundary_polygon())
}

pub fn boundary_frame(mesh: &Mesh2D) -> Result<BoundaryFrame> {
    let be = &mesh.boundary_edges;
    let n = be.len();
    let mut edge_normals = Vec::with_capacity(n);
    let mut scaled = Vec::with_capacity(n);
    for (k, e) in be.iter().enumerate() {
        let d = mesh.vertices[e.b] - mesh.vertices[e.a];
        let l = d.norm();
        if !(l > 0.0) {
            return Err(Error::Geometry(format!("boundary edge {k} has zero length")));
        }
        scaled.push(d.rot_cw());
        edge_normals.push(d.rot_cw() / l);
    }
    let mut boundary_vertices = Vec::with_capacity(n);
    let mut vertex_normals = Vec::with_capacity(n);
    for k in 0..n {
        boundary_vertices.push(be[k].a);
        let s = scaled[k] + scaled[(k + n - 1) % n];
        vertex_normals.push(s.normalized());
    }
    let conormal = |c: usize| -> ContactConormals {
        let x = mesh.vertices[c];
        let mut sigma = Vec2::ZERO;
        let mut gamma = Vec2::ZERO;
        for e in be.iter().filter(|e| e.a == c || e.b == c) {
            let other = if e.a == c { e.b } else { e.a };
            let t = (x - mesh.vertices[other]).normalized();
            match e.label {
                BoundaryLabel::Sigma => sigma = t,
                BoundaryLabel::Gamma => gamma = t,
            }
        }
        ContactConormals { vertex: c, sigma, gamma }
    };
    let conormals = [conormal(mesh.contact_vertices[0]), conormal(mesh.contact_vertices[1])];
    Ok(BoundaryFrame { edge_normals, boundary_vertices, vertex_normals, conormals })
}

/// Dynamic contact angles (left, right), θ = arccos(m_∂Σ · m_∂Γ).
pub fn contact_angles(_mesh: &Mesh2D, frame: &BoundaryFrame) -> (f64, f64) {
    let ang = |c: &ContactConormals| Float::acos(c.sigma.dot(c.gamma).clamp(-1.0, 1.0));
    (ang(&frame.conormals[0]), ang(&frame.conormals[1]))
}

/// x ← x + Δt·w at every vertex. Wall vertices stay on y = 0.
pub fn move_mesh(mesh: &Mesh2D, w: &[Vec2], dt: f64) -> Result<Mesh2D> {
    if w.len() != mesh.vertices.len() {
        return Err(Error::Input(format!(
            "mesh velocity has {} entries for {} vertices",
            w.len(),
            mesh.vertices.len()
        )));
    }
    let gamma = mesh.gamma_mask();
    let mut out = mesh.clone();
    for (i, x) in out.vertices.iter_mut().enumerate() {
        *x += w[i] * dt;
        if gamma[i] {
            x.y = 0.0;
        }
    }
    for t in 0..out.triangles.len() {
        let a = out.triangle_area(t);
        if !(a > 0.0) {
            return Err(Error::TangledMesh { triangle: t, area: a });
        }
    }
    Ok(out)
}

/// Edge ratio and normalised aspect ratio h_max / (2√3 r) of one triangle.
pub fn triangle_quality(p: [Vec2; 3]) -> (f64, f64) {
    let l = [(p[1] - p[0]).norm(), (p[2] - p[1]).norm(), (p[0] - p[2]).norm()];
    let lmax = l[0].max(l[1]).max(l[2]);
    let lmin = l[0].min(l[1]).min(l[2]);
    let area = 0.5 * orient(p[0], p[1], p[2]).abs();
    let r = 2.0 * area / (l[0] + l[1] + l[2]);
    (lmax / lmin, lmax / (2.0 * Float::sqrt(3.0) * r))
}

pub fn mesh_quality(mesh: &Mesh2D) -> MeshQuality {
    let mut q = MeshQuality { q_e: 1.0, q_a: 1.0 };
    for t in 0..mesh.triangles.len() {
        let (e, a) = triangle_quality(mesh.triangle_points(t));
        q.q_e = q.q_e.max(e);
        q.q_a = q.q_a.max(a);
    }
    q
}

/// Circular cap of unit radius meeting the wall at angle `theta_s`.
///
/// The circle has centre (0, −cos θ_s); the contact points sit at
/// x = ±sin θ_s and the enclosed area tends to θ_s − sin θ_s cos θ_s.
pub fn build_initial_cap(theta_s: f64, h: f64) -> Result<Mesh2D> {
    if !(theta_s > 0.0 && theta_s < core::f64::consts::PI) {
        return Err(Error::param("theta_s", format!("{theta_s} is outside (0, pi)")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("{h} must be positive")));
    }
    let (s, c) = (Float::sin(theta_s), Float::cos(theta_s));
    let ng = Float::ceil(2.0 * s / h).max(2.0) as usize;
    let gamma: Vec<Vec2> =
        (0..=ng).map(|i| Vec2::new(-s + 2.0 * s * i as f64 / ng as f64, 0.0)).collect();
    let ns = Float::ceil(2.0 * theta_s / h).max(3.0) as usize;
    let phi_r = core::f64::consts::FRAC_PI_2 - theta_s;
    let centre = Vec2::new(0.0, -c);
    let sigma: Vec<Vec2> = (1..ns)
        .map(|i| {
            let phi = phi_r + 2.0 * theta_s * i as f64 / ns as f64;
            centre + Vec2::new(Float::cos(phi), Float::sin(phi))
        })
        .map(|p| Vec2::new(p.x, p.y.max(0.0)))
        .collect();
    build_from_boundary(&gamma, &sigma, h)
}

/// Unit square split into 2n² right triangles, with the bottom side as the
/// wall and the other three sides as free surface.
pub fn structured_square(n: usize) -> Mesh2D {
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut ring = Vec::new();
    for i in 0..n {
        ring.push((id(i, 0), BoundaryLabel::Gamma));
    }
    for j in 0..n {
        ring.push((id(n, j), BoundaryLabel::Sigma));
    }
    for i in (1..=n).rev() {
        ring.push((id(i, n), BoundaryLabel::Sigma));
    }
    for j in (1..=n).rev() {
        ring.push((id(0, j), BoundaryLabel::Sigma));
    }
    let m = ring.len();
    let boundary_edges =
        (0..m).map(|k| BoundaryEdge { a: ring[k].0, b: ring[(k + 1) % m].0, label: ring[k].1 }).collect();
    Mesh2D { vertices, triangles, boundary_edges, contact_vertices: [id(0, 0), id(n, 0)] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn unit_square() -> Mesh2D {
        Mesh2D {
            vertices: alloc::vec![
                Vec2::new(0., 0.),
                Vec2::new(1., 0.),
                Vec2::new(1., 1.),
                Vec2::new(0., 1.)
            ],
            triangles: alloc::vec![[0, 1, 2], [0, 2, 3]],
            boundary_edges: alloc::vec![
                BoundaryEdge { a: 0, b: 1, label: BoundaryLabel::Gamma },
                BoundaryEdge { a: 1, b: 2, label: BoundaryLabel::Sigma },
                BoundaryEdge { a: 2, b: 3, label: BoundaryLabel::Sigma },
                BoundaryEdge { a: 3, b: 0, label: BoundaryLabel::Sigma },
            ],
            contact_vertices: [0, 1],
        }
    }

    #[test]
    fn unit_square_measures() {
        let m = unit_square();
        m.validate().unwrap();
        assert_eq!(measures(&m), (1.0, 3.0, 1.0));
        assert_eq!(boundary_area(&m), 1.0);
    }

    #[test]
    fn quality_of_reference_shapes() {
        let eq = [Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(0.5, 0.75f64.sqrt())];
        let (e, a) = triangle_quality(eq);
        assert!((e - 1.0).abs() < 1e-15 && (a - 1.0).abs() < 1e-14);
        // Edges (1, 1, 1.9).
        let y = (1.0f64 - 0.95 * 0.95).sqrt();
        let t = [Vec2::new(0., 0.), Vec2::new(1.9, 0.), Vec2::new(0.95, y)];
        assert!((triangle_quality(t).0 - 1.9).abs() < 1e-14);
    }

    #[test]
    fn cap_area_and_contacts() {
        let m = build_initial_cap(3.0 * PI / 4.0, 0.1).unwrap();
        m.validate().unwrap();
        let (area, _, lg) = measures(&m);
        let exact = 3.0 * PI / 4.0 + 0.5;
        assert!((area - exact).abs() / exact < 0.02);
        assert!((lg - 2f64.sqrt()).abs() < 1e-12);
        assert!((area - boundary_area(&m)).abs() < 1e-12 * area);
        let q = mesh_quality(&m);
        assert!(q.q_e <= 3.0 && q.q_a <= 4.0, "{q:?}");
    }

    #[test]
    fn half_disc_frame() {
        let m = build_initial_cap(PI / 2.0, 0.2).unwrap();
        let (area, ls, _) = measures(&m);
        assert!((area - PI / 2.0).abs() < 0.02 * PI / 2.0);
        assert!((ls - PI).abs() < 0.01);
        let f = boundary_frame(&m).unwrap();
        assert_eq!(f.conormals[0].gamma, Vec2::new(-1.0, 0.0));
        assert_eq!(f.conormals[1].gamma, Vec2::new(1.0, 0.0));
        let (l, r) = contact_angles(&m, &f);
        assert!((l - PI / 2.0).abs() < 0.2 && (r - PI / 2.0).abs() < 0.2);
        for (k, e) in m.boundary_edges.iter().enumerate() {
            if e.label == BoundaryLabel::Gamma {
                assert_eq!(f.edge_normals[k], Vec2::new(0.0, -1.0));
            }
        }
    }

    #[test]
    fn rejects_bad_angle() {
        assert!(matches!(build_initial_cap(0.0, 0.1), Err(Error::InvalidParameter { .. })));
        assert!(matches!(build_initial_cap(PI, 0.1), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn translation_moves_every_vertex() {
        let m = unit_square();
        let w = alloc::vec![Vec2::new(1.0, 0.0); 4];
        let m2 = move_mesh(&m, &w, 0.1).unwrap();
        for (a, b) in m.vertices.iter().zip(&m2.vertices) {
            assert!((*b - *a - Vec2::new(0.1, 0.0)).norm() < 1e-15);
        }
        let same = move_mesh(&m, &alloc::vec![Vec2::ZERO; 4], 0.3).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn linear_field_area_change_matches_jacobian() {
        // w = (x, −y): det(I + dt·diag(1, −1)) = 1 − dt².
        let m = unit_square();
        let w: Vec<Vec2> = m.vertices.iter().map(|p| Vec2::new(p.x, -p.y)).collect();
        // Keep the wall row fixed in y (it already is: y = 0).
        let dt = 0.01;
        let m2 = move_mesh(&m, &w, dt).unwrap();
        assert!((measures(&m2).0 - (1.0 - dt * dt)).abs() < 1e-15);
    }

    #[test]
    fn tangling_is_reported() {
        let m = unit_square();
        let mut w = alloc::vec![Vec2::ZERO; 4];
        w[2] = Vec2::new(-30.0, -30.0);
        assert!(matches!(move_mesh(&m, &w, 1.0), Err(Error::TangledMesh { .. })));
    }
}
