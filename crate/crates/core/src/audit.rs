//! Randomised audit of the space-conservation identities over affine mesh
//! motions.

use crate::ale::{
    potential_energy, scl_contact_point_defects, scl_gravity_integral, scl_surface_edge_defects, scl_volume_integral,
    AleStep,
};
use crate::error::Result;
use crate::geom::Vec2;
use crate::mesh::{build_initial_cap, measures, Mesh2D};
use alloc::vec::Vec;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worst relative residuals over the sampled motions and the observed
/// convergence orders of the trapezoidal defects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SclAudit {
    pub cases: usize,
    /// max |∫∫ div w − ΔA| / A.
    pub volume: f64,
    /// max |∫∫ Φ w·n − ΔE_p| / (|E_pⁿ| + |E_pⁿ⁺¹|).
    pub gravity: f64,
    /// Smallest and largest log₂ ratio of the l1 norms of the per-edge
    /// surface-length defects under time-step halving.
    pub surface_order: (f64, f64),
    pub contact_order: (f64, f64),
}

/// Smooth mesh velocity with zero normal component on the wall: a rotation
/// about a random centre, an inflation and a quadratic shear, each scaled by
/// y where needed.
#[derive(Debug, Clone, Copy)]
struct Motion {
    centre: Vec2,
    omega: f64,
    inflate: f64,
    shift: f64,
    shear: f64,
}

impl Motion {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Motion {
            centre: Vec2::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.2..1.0)),
            omega: rng.gen_range(-1.0..1.0),
            inflate: rng.gen_range(-0.5..0.5),
            shift: rng.gen_range(-1.0..1.0),
            shear: rng.gen_range(-1.0..1.0),
        }
    }

    fn at(&self, p: Vec2) -> Vec2 {
        let r = p - self.centre;
        // The rotation's vertical part is damped by y so the wall stays fixed.
        Vec2::new(
            self.shift - self.omega * r.y + self.inflate * p.x + self.shear * p.y * p.y,
            p.y * (self.omega * r.x / (1.0 + p.y) + self.inflate),
        )
    }

    fn field(&self, mesh: &Mesh2D) -> Vec<Vec2> {
        mesh.vertices.iter().map(|&p| self.at(p)).collect()
    }
}

fn order(coarse: f64, fine: f64) -> f64 {
    Float::log2(coarse.abs() / fine.abs())
}

/// Run `cases` random motions from `seed`.
pub fn audit_scl(seed: u64, cases: usize) -> Result<SclAudit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SclAudit {
        cases,
        volume: 0.0,
        gravity: 0.0,
        surface_order: (f64::INFINITY, f64::NEG_INFINITY),
        contact_order: (f64::INFINITY, f64::NEG_INFINITY),
    };
    let widen = |r: &mut (f64, f64), v: f64| {
        r.0 = r.0.min(v);
        r.1 = r.1.max(v);
    };
    for _ in 0..cases {
        let theta = rng.gen_range(1.0..2.6);
        let h = rng.gen_range(0.2..0.4);
        let mesh = build_initial_cap(theta, h)?;
        let motion = Motion::random(&mut rng);
        let w = motion.field(&mesh);
        let dt = rng.gen_range(0.01..0.05);
        let bo = rng.gen_range(0.1..2.0);
        let alpha = rng.gen_range(0.0..1.2);

        let step = AleStep::new(mesh.clone(), w.clone(), dt)?;
        let ones = alloc::vec![1.0; mesh.vertices.len()];
        let (a0, a1) = (measures(&step.mesh_prev).0, measures(&step.mesh_next).0);
        out.volume = out.volume.max((scl_volume_integral(&step, &ones) - (a1 - a0)).abs() / a0);
        let (e0, e1) = (potential_energy(&step.mesh_prev, bo, alpha), potential_energy(&step.mesh_next, bo, alpha));
        let g = scl_gravity_integral(&step, bo, alpha);
        out.gravity = out.gravity.max((g - (e1 - e0)).abs() / (e0.abs() + e1.abs()));

        // Richardson pairs at a fixed coarse step so the defects sit in the
        // asymptotic range.
        let (dc, df) = (0.04, 0.02);
        let coarse = AleStep::new(mesh.clone(), w.clone(), dc)?;
        let fine = AleStep::new(mesh.clone(), w.clone(), df)?;
        // Per-edge defects can have either sign, so their sum may cancel to
        // below the asymptotic term; the order is read off their l1 norm.
        let l1 = |d: &[f64]| d.iter().map(|x| x.abs()).sum::<f64>();
        widen(&mut out.surface_order, order(l1(&scl_surface_edge_defects(&coarse)), l1(&scl_surface_edge_defects(&fine))));
        let th = |x: f64| 2.0 + 0.3 * Float::sin(2.0 * x + 0.4);
        widen(
            &mut out.contact_order,
            order(l1(&scl_contact_point_defects(&coarse, &th, 1.0, 1.0)), l1(&scl_contact_point_defects(&fine, &th, 1.0, 1.0))),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn motion_keeps_wall() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Motion::random(&mut rng);
        assert_eq!(m.at(Vec2::new(0.3, 0.0)).y, 0.0);
    }

    #[test]
    fn zero_motion_is_exact() {
        let mesh = build_initial_cap(2.0, 0.3).unwrap();
        let w = alloc::vec![Vec2::ZERO; mesh.vertices.len()];
        let step = AleStep::new(mesh.clone(), w, 0.1).unwrap();
        let ones = alloc::vec![1.0; mesh.vertices.len()];
        assert_eq!(scl_volume_integral(&step, &ones), 0.0);
        assert_eq!(scl_gravity_integral(&step, 1.0, 0.3), 0.0);
        assert!(scl_surface_edge_defects(&step).iter().all(|&d| d == 0.0));
        assert_eq!(scl_contact_point_defects(&step, &|x| 2.0 + x, 1.0, 1.0), [0.0, 0.0]);
    }

    #[test]
    fn small_audit() {
        let a = audit_scl(11, 5).unwrap();
        assert!(a.volume < 1e-12 && a.gravity < 1e-12, "{a:?}");
        assert!(a.surface_order.0 > 2.7 && a.surface_order.1 < 3.3, "{a:?}");
        assert!(a.contact_order.0 > 2.7 && a.contact_order.1 < 3.3, "{a:?}");
    }
}
