//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use droplet_core::fem::DofMap;
use droplet_core::mesh::{build_initial_cap, Mesh2D};
use droplet_core::Vec2;
use rand::Rng;

fn fact(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// ∫_T λ0^a λ1^b λ2^c = 2|T| a! b! c! / (a + b + c + 2)!.
pub fn barycentric_moment(area: f64, e: [u32; 3]) -> f64 {
    2.0 * area * fact(e[0]) * fact(e[1]) * fact(e[2]) / fact(e[0] + e[1] + e[2] + 2)
}

/// Basis function k of the P1-plus-bubble element as (coefficient, exponents).
fn basis(k: usize) -> (f64, [u32; 3]) {
    match k {
        0 => (1.0, [1, 0, 0]),
        1 => (1.0, [0, 1, 0]),
        2 => (1.0, [0, 0, 1]),
        _ => (27.0, [1, 1, 1]),
    }
}

/// Gradients of the barycentric coordinates, from the edge vectors.
pub fn grad_lambda(p: [Vec2; 3]) -> ([Vec2; 3], f64) {
    let area = 0.5 * ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y));
    let g = |a: Vec2, b: Vec2| Vec2::new(-(b.y - a.y), b.x - a.x) / (2.0 * area);
    ([g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])], area)
}

/// Exact ∫ ½|v|² div w over the mesh for a mini-element v and a P1 w, by
/// expanding |v|² into barycentric monomials. Also returns the same sum with
/// |div w| as a magnitude scale.
pub fn half_kinetic_times_div(mesh: &Mesh2D, dm: &DofMap, v: &[f64], w: &[Vec2]) -> (f64, f64) {
    let (mut total, mut scale) = (0.0, 0.0);
    for (e, t) in mesh.triangles.iter().enumerate() {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let (g, area) = grad_lambda(p);
        let div: f64 = (0..3).map(|i| w[t[i]].dot(g[i])).sum();
        let node = |k: usize| if k < 3 { t[k] } else { dm.n_vertices + e };
        let mut sq = 0.0;
        for c in 0..2 {
            for k in 0..4 {
                for l in 0..4 {
                    let (ck, ek) = basis(k);
                    let (cl, el) = basis(l);
                    let ex = [ek[0] + el[0], ek[1] + el[1], ek[2] + el[2]];
                    let vk = v[dm.vel(c, node(k))];
                    let vl = v[dm.vel(c, node(l))];
                    sq += vk * vl * ck * cl * barycentric_moment(area, ex);
                }
            }
        }
        total += 0.5 * sq * div;
        scale += 0.5 * sq * div.abs();
    }
    (total, scale)
}

/// A cap mesh with randomly displaced interior vertices.
pub fn random_mesh(rng: &mut impl Rng) -> Mesh2D {
    let theta = rng.gen_range(0.8..2.7);
    let h = rng.gen_range(0.2..0.45);
    let base = build_initial_cap(theta, h).unwrap();
    let mask = base.boundary_mask();
    loop {
        let mut m = base.clone();
        for (i, p) in m.vertices.iter_mut().enumerate() {
            if !mask[i] {
                *p += Vec2::new(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)) * h;
            }
        }
        if m.validate().is_ok() {
            return m;
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_field(rng: &mut impl Rng, n: usize) -> Vec<Vec2> {
    (0..n).map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}
