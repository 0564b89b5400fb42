//! Unstructured triangulation of a boundary polygon.

use super::{BoundaryEdge, BoundaryLabel, Mesh2D};
use crate::error::{Error, Result};
use crate::geom::{orient, point_segment_distance, Vec2};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

struct Tri {
    v: [usize; 3],
    centre: Vec2,
    r2: f64,
    alive: bool,
}

fn make_tri(pts: &[Vec2], v: [usize; 3]) -> Tri {
    let (a, b, c) = (pts[v[0]], pts[v[1]], pts[v[2]]);
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Tri { v, centre: Vec2::new(a.x + ux, a.y + uy), r2: ux * ux + uy * uy, alive: true }
}

/// Bowyer–Watson Delaunay triangulation of a point set. Triangles are
/// counterclockwise; cocircular ties are resolved by insertion order.
pub fn delaunay(points: &[Vec2]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let c = (lo + hi) * 0.5;
    let d = (hi.x - lo.x).max(hi.y - lo.y).max(1e-300) * 20.0;
    let mut pts = points.to_vec();
    pts.push(Vec2::new(c.x - 2.0 * d, c.y - d));
    pts.push(Vec2::new(c.x + 2.0 * d, c.y - d));
    pts.push(Vec2::new(c.x, c.y + 2.0 * d));
    let mut tris = alloc::vec![make_tri(&pts, [n, n + 1, n + 2])];
    let mut cavity: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for ip in 0..n {
        let p = pts[ip];
        cavity.clear();
        let mut seed = None;
        for (k, t) in tris.iter().enumerate() {
            if !t.alive {
                continue;
            }
            if (p - t.centre).norm2() < t.r2 * (1.0 - 1e-12) {
                cavity.push(k);
            }
            if seed.is_none() {
                let [a, b, cc] = t.v;
                let eps = -1e-13 * t.r2.max(1e-300);
                if orient(pts[a], pts[b], p) >= eps
                    && orient(pts[b], pts[cc], p) >= eps
                    && orient(pts[cc], pts[a], p) >= eps
                {
                    seed = Some(k);
                }
            }
        }
        let Some(seed) = seed else { continue };
        if !cavity.contains(&seed) {
            cavity.push(seed);
        }
        // Keep the component connected to the seed, then shrink until star-shaped.
        loop {
            let mut keep = alloc::vec![seed];
            let mut changed = true;
            while changed {
                changed = false;
                for &k in &cavity {
                    if keep.contains(&k) {
                        continue;
                    }
                    if keep.iter().any(|&j| shares_edge(&tris[j].v, &tris[k].v)) {
                        keep.push(k);
                        changed = true;
                    }
                }
            }
            cavity = keep;
            edges.clear();
            for &k in &cavity {
                let v = tris[k].v;
                for e in 0..3 {
                    let (a, b) = (v[e], v[(e + 1) % 3]);
                    let interior = cavity.iter().any(|&j| {
                        j != k && {
                            let w = tris[j].v;
                            (0..3).any(|f| w[f] == b && w[(f + 1) % 3] == a)
                        }
                    });
                    if !interior {
                        edges.push((a, b, k));
                    }
                }
            }
            let bad = edges
                .iter()
                .find(|&&(a, b, k)| k != seed && orient(pts[a], pts[b], p) <= 0.0)
                .map(|e| e.2);
            match bad {
                Some(k) => cavity.retain(|&j| j != k),
                None => break,
            }
        }
        for &k in &cavity {
            tris[k].alive = false;
        }
        for &(a, b, _) in &edges {
            if orient(pts[a], pts[b], p) > 0.0 {
                tris.push(make_tri(&pts, [a, b, ip]));
            }
        }
        if tris.len() > 4 * n + 64 {
            tris.retain(|t| t.alive);
        }
    }
    tris.into_iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect()
}

fn shares_edge(a: &[usize; 3], b: &[usize; 3]) -> bool {
    a.iter().filter(|v| b.contains(v)).count() == 2
}

fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

// Deterministic jitter in [−1, 1] from a lattice index.
fn jitter(i: i64, j: i64, k: u64) -> f64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ k.wrapping_mul(0x1656_67B1_9E37_79F9);
    z ^= z >> 31;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 29;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn edge_set(tris: &[[usize; 3]]) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for t in tris {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            s.insert((a.min(b), a.max(b)));
        }
    }
    s
}

/// Triangulate the domain bounded by the wall points `gamma` (left to right,
/// both contact points included, all with y = 0) and the free-surface points
/// `sigma` (right to left, contact points excluded), with target size `h`.
pub fn build_from_boundary(gamma: &[Vec2], sigma: &[Vec2], h: f64) -> Result<Mesh2D> {
    if gamma.len() < 2 || sigma.is_empty() {
        return Err(Error::Geometry("boundary needs at least two wall points and one surface point".into()));
    }
    if gamma.iter().any(|p| p.y != 0.0) {
        return Err(Error::Geometry("wall points must lie on y = 0".into()));
    }
    let mut boundary: Vec<(Vec2, BoundaryLabel)> = Vec::new();
    for p in &gamma[..gamma.len() - 1] {
        boundary.push((*p, BoundaryLabel::Gamma));
    }
    boundary.push((gamma[gamma.len() - 1], BoundaryLabel::Sigma));
    for p in sigma {
        boundary.push((*p, BoundaryLabel::Sigma));
    }
    let poly: Vec<Vec2> = boundary.iter().map(|b| b.0).collect();
    if crate::geom::shoelace(&poly) <= 0.0 {
        return Err(Error::Geometry("boundary loop is not counterclockwise".into()));
    }

    // Interior points on a jittered hexagonal lattice.
    let (mut lo, mut hi) = (poly[0], poly[0]);
    for p in &poly {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let dy = h * Float::sqrt(3.0) / 2.0;
    let mut interior = Vec::new();
    let nj = Float::ceil((hi.y - lo.y) / dy) as i64 + 1;
    let ni = Float::ceil((hi.x - lo.x) / h) as i64 + 2;
    for j in 0..=nj {
        for i in -1..=ni {
            let shift = if j % 2 == 0 { 0.0 } else { 0.5 * h };
            let p = Vec2::new(
                lo.x + i as f64 * h + shift + 0.05 * h * jitter(i, j, 1),
                lo.y + j as f64 * dy + 0.05 * h * jitter(i, j, 2),
            );
            if !point_in_polygon(p, &poly) {
                continue;
            }
            let nb = poly.len();
            let dmin = (0..nb)
                .map(|k| point_segment_distance(p, poly[k], poly[(k + 1) % nb]))
                .fold(f64::INFINITY, f64::min);
            if dmin >= 0.6 * h {
                interior.push(p);
            }
        }
    }

    // Triangulate, splitting boundary segments that Delaunay misses.
    let mut tris;
    let mut round = 0;
    loop {
        let nb = boundary.len();
        let mut pts: Vec<Vec2> = boundary.iter().map(|b| b.0).collect();
        pts.extend_from_slice(&interior);
        tris = delaunay(&pts);
        let es = edge_set(&tris);
        let missing: Vec<usize> = (0..nb)
            .filter(|&k| {
                let (a, b) = (k, (k + 1) % nb);
                !es.contains(&(a.min(b), a.max(b)))
            })
            .collect();
        if missing.is_empty() {
            break;
        }
        round += 1;
        if round > 12 {
            return Err(Error::Geometry(format!("{} boundary segments could not be recovered", missing.len())));
        }
        for &k in missing.iter().rev() {
            let a = boundary[k];
            let b = boundary[(k + 1) % nb];
            let label = a.1;
            boundary.insert(k + 1, ((a.0 + b.0) * 0.5, label));
        }
    }

    let nb = boundary.len();
    let poly: Vec<Vec2> = boundary.iter().map(|b| b.0).collect();
    let mut pts = poly.clone();
    pts.extend_from_slice(&interior);
    let keep_inside = |tris: Vec<[usize; 3]>, pts: &[Vec2]| -> Vec<[usize; 3]> {
        tris.into_iter()
            .filter(|t| {
                let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
                let scale = (b - a).norm2().max((c - a).norm2());
                orient(a, b, c) > 1e-10 * scale && point_in_polygon((a + b + c) * (1.0 / 3.0), &poly)
            })
            .collect()
    };
    tris = keep_inside(tris, &pts);

    // Laplacian smoothing of interior points, accepted only if the boundary survives.
    for _ in 0..4 {
        let mut sum = alloc::vec![Vec2::ZERO; pts.len()];
        let mut cnt = alloc::vec![0usize; pts.len()];
        for (a, b) in edge_set(&tris) {
            sum[a] += pts[b];
            sum[b] += pts[a];
            cnt[a] += 1;
            cnt[b] += 1;
        }
        let mut trial = pts.clone();
        for i in nb..pts.len() {
            if cnt[i] > 0 {
                trial[i] = sum[i] / cnt[i] as f64;
            }
        }
        let t2 = keep_inside(delaunay(&trial), &trial);
        let es = edge_set(&t2);
        let ok = (0..nb).all(|k| {
            let (a, b) = (k, (k + 1) % nb);
            es.contains(&(a.min(b), a.max(b)))
        });
        let used = {
            let mut u = alloc::vec![false; trial.len()];
            for t in &t2 {
                for &v in t {
                    u[v] = true;
                }
            }
            u.iter().all(|&x| x)
        };
        if ok && used {
            pts = trial;
            tris = t2;
        } else {
            break;
        }
    }

    // Drop interior points that ended up unused (never expected, but cheap).
    let mut used = alloc::vec![false; pts.len()];
    for t in &tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = alloc::vec![usize::MAX; pts.len()];
    let mut vertices = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        if used[i] || i < nb {
            remap[i] = vertices.len();
            vertices.push(*p);
        }
    }
    let triangles: Vec<[usize; 3]> =
        tris.iter().map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]]).collect();
    let boundary_edges: Vec<BoundaryEdge> = (0..nb)
        .map(|k| BoundaryEdge { a: k, b: (k + 1) % nb, label: boundary[k].1 })
        .collect();
    let right = boundary.iter().position(|b| b.1 == BoundaryLabel::Sigma).unwrap();
    let mesh = Mesh2D { vertices, triangles, boundary_edges, contact_vertices: [0, right] };
    mesh.validate()?;
    let (area, _, _) = super::measures(&mesh);
    let poly_area = crate::geom::shoelace(&poly);
    if (area - poly_area).abs() > 1e-9 * poly_area {
        return Err(Error::Geometry(format!(
            "triangulation covers area {area} but the boundary encloses {poly_area}"
        )));
    }
    Ok(mesh)
}
