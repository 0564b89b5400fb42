//! The mini element on its own: a manufactured Stokes problem and the
//! discrete inf-sup constant.

use droplet_core::fem::{
    assemble_pressure_div, assemble_viscous, element_geometry, eval_p1b, solve_saddle, DofMap, SparseSystem, Triplets,
};
use droplet_core::mesh::{structured_square, Mesh2D};
use droplet_core::Vec2;
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

// Stream function ψ = sin²(πx) sin²(πy), u = (ψ_y, −ψ_x), p = cos(πx) cos(πy).
fn exact_u(p: Vec2) -> Vec2 {
    let (sx, cx, sy, cy) = ((PI * p.x).sin(), (PI * p.x).cos(), (PI * p.y).sin(), (PI * p.y).cos());
    Vec2::new(2.0 * PI * sx * sx * sy * cy, -2.0 * PI * sy * sy * sx * cx)
}

fn exact_p(p: Vec2) -> f64 {
    (PI * p.x).cos() * (PI * p.y).cos()
}

// f = −Δu + ∇p (divergence-free u, unit viscosity).
fn forcing(p: Vec2) -> Vec2 {
    let (x, y) = (PI * p.x, PI * p.y);
    let pi3 = PI * PI * PI;
    // −Δ of 2π sin²x sin y cos y and of −2π sin²y sin x cos x.
    let lap1 = 2.0 * pi3 * ((2.0 * x).cos() * (2.0 * y).sin() - 2.0 * x.sin().powi(2) * (2.0 * y).sin());
    let lap2 = -2.0 * pi3 * ((2.0 * y).cos() * (2.0 * x).sin() - 2.0 * y.sin().powi(2) * (2.0 * x).sin());
    Vec2::new(-lap1 - PI * x.sin() * y.cos(), -lap2 - PI * x.cos() * y.sin())
}

// Seven-point degree-5 rule (barycentric points, weights summing to 1).
fn rule() -> Vec<([f64; 3], f64)> {
    let a = 0.059_715_871_789_769_82;
    let b = 0.470_142_064_105_115_1;
    let c = 0.797_426_985_353_087_3;
    let d = 0.101_286_507_323_456_3;
    let wa = 0.132_394_152_788_506_2;
    let wc = 0.125_939_180_544_827_2;
    vec![
        ([1.0 / 3.0; 3], 0.225),
        ([a, b, b], wa),
        ([b, a, b], wa),
        ([b, b, a], wa),
        ([c, d, d], wc),
        ([d, c, d], wc),
        ([d, d, c], wc),
    ]
}

fn bubble_values(l: [f64; 3]) -> [f64; 4] {
    [l[0], l[1], l[2], 27.0 * l[0] * l[1] * l[2]]
}

/// Velocity and pressure L² errors for the all-Dirichlet problem on an n×n grid.
fn solve(n: usize) -> (f64, f64) {
    let mesh = structured_square(n);
    let dm = DofMap::new(&mesh);
    let nvel = dm.n_velocity();
    let np = dm.n_pressure();
    let a = assemble_viscous(&mesh, &dm, 1.0);
    let b = assemble_pressure_div(&mesh, &dm);
    let mut t = Triplets::new(nvel + np, nvel + np);
    for i in 0..nvel {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            t.push(i, j, x);
        }
    }
    for k in 0..np {
        // Stored zero diagonal so the pressure pin has a slot.
        t.push(nvel + k, nvel + k, 0.0);
        let (c, v) = b.row(k);
        for (&j, &x) in c.iter().zip(v) {
            t.push(j, nvel + k, -x);
            t.push(nvel + k, j, -x);
        }
    }
    let mut rhs = vec![0.0; nvel + np];
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(e);
        let area = mesh.triangle_area(e);
        for (l, w) in rule() {
            let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2];
            let f = forcing(x);
            let phi = bubble_values(l);
            for k in 0..4 {
                let node = if k < 3 { tri[k] } else { dm.n_vertices + e };
                rhs[dm.vel(0, node)] += w * area * f.x * phi[k];
                rhs[dm.vel(1, node)] += w * area * f.y * phi[k];
            }
        }
    }
    let mut sys = SparseSystem::new(t.to_csr(), rhs);
    let boundary = mesh.boundary_mask();
    let mut dofs: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&i| boundary[i])
        .flat_map(|i| [dm.vel(0, i), dm.vel(1, i)])
        .collect();
    dofs.push(nvel); // pin pressure at vertex 0 (the corner (0, 0), exact value 1)
    let mut vals = vec![0.0; dofs.len()];
    *vals.last_mut().unwrap() = exact_p(mesh.vertices[0]);
    sys.apply_dirichlet(&dofs, &vals);
    let x = solve_saddle(&sys).unwrap();
    errors(&mesh, &dm, &x[..nvel], &x[nvel..])
}

/// L² errors of velocity and of pressure modulo constants.
fn errors(mesh: &Mesh2D, dm: &DofMap, v: &[f64], p: &[f64]) -> (f64, f64) {
    let mut eu = 0.0;
    let mut diffs = Vec::new();
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let pts = mesh.triangle_points(e);
        let area = mesh.triangle_area(e);
        for (l, w) in rule() {
            let x = pts[0] * l[0] + pts[1] * l[1] + pts[2] * l[2];
            let vh = eval_p1b(dm, mesh, v, e, l);
            let ph = l[0] * p[tri[0]] + l[1] * p[tri[1]] + l[2] * p[tri[2]];
            eu += w * area * (vh - exact_u(x)).norm2();
            diffs.push((w * area, ph - exact_p(x)));
        }
    }
    let mean: f64 = diffs.iter().map(|(w, d)| w * d).sum();
    let ep: f64 = diffs.iter().map(|(w, d)| w * (d - mean).powi(2)).sum();
    (eu.sqrt(), ep.sqrt())
}

#[test]
fn manufactured_solution_converges() {
    let (u8, p8) = solve(8);
    let (u16, p16) = solve(16);
    let (u32, p32) = solve(32);
    // |u| is about 2π here, and the viscous term dominates the forcing.
    assert!(u32 < 0.025, "velocity error {u32}");
    // Second order in velocity; the pressure converges like h^{3/2} on this
    // uniform grid.
    assert!(u8 / u16 > 3.5 && u16 / u32 > 3.5, "{u8} {u16} {u32}");
    assert!(p8 / p16 > 2.5 && p16 / p32 > 2.5, "{p8} {p16} {p32}");
}

/// β_h² is the smallest non-zero generalized eigenvalue of B A⁻¹ Bᵀ against
/// the pressure mass matrix, with all velocity dofs on the boundary fixed.
fn inf_sup(n: usize) -> f64 {
    let mesh = structured_square(n);
    let dm = DofMap::new(&mesh);
    let boundary = mesh.boundary_mask();
    let free: Vec<usize> = (0..dm.n_nodes())
        .filter(|&k| k >= dm.n_vertices || !boundary[k])
        .flat_map(|k| [dm.vel(0, k), dm.vel(1, k)])
        .collect();
    let a = assemble_viscous(&mesh, &dm, 1.0);
    let b = assemble_pressure_div(&mesh, &dm);
    let nf = free.len();
    let np = dm.n_pressure();
    let ad = DMatrix::from_fn(nf, nf, |i, j| a.get(free[i], free[j]));
    let bt = DMatrix::from_fn(nf, np, |i, k| b.get(k, free[i]));
    let s = bt.transpose() * ad.cholesky().unwrap().solve(&bt);
    let mut mp = DMatrix::<f64>::zeros(np, np);
    for e in 0..mesh.triangles.len() {
        let t = mesh.triangles[e];
        let area = element_geometry(mesh.triangle_points(e)).det / 2.0;
        for i in 0..3 {
            for j in 0..3 {
                mp[(t[i], t[j])] += area / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
    }
    let l = mp.cholesky().unwrap();
    let linv = l.l().try_inverse().unwrap();
    let c: DMatrix<f64> = &linv * s * linv.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    // ev[0] belongs to the constant pressure.
    assert!(ev[0].abs() < 1e-10);
    ev[1].sqrt()
}

#[test]
fn inf_sup_constant_is_bounded_below() {
    let b: Vec<f64> = [4, 8, 12].iter().map(|&n| inf_sup(n)).collect();
    assert!(b.iter().all(|&x| x > 0.2), "{b:?}");
    assert!(b[2] > 0.8 * b[0], "{b:?}");
}
