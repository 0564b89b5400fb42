//! Reference-triangle quadrature and the P1-plus-bubble basis.

use crate::quad1d::gauss_legendre;
use alloc::vec::Vec;

/// Quadrature on the reference triangle {ξ, η ≥ 0, ξ + η ≤ 1}; weights sum to 1/2.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) tensor Gauss rule with `n` points per direction.
    /// Exact for polynomials of total degree `2n − 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                points.push([u, v * (1.0 - u)]);
                weights.push(0.25 * w[i] * w[j] * (1.0 - u));
            }
        }
        TriangleRule { points, weights }
    }

    /// The rule used throughout assembly: exact to degree 8, which covers the
    /// bubble–bubble mass products and the cubic convection integrands.
    pub fn standard() -> Self {
        Self::collapsed(5)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Barycentric coordinates of reference point (ξ, η).
#[inline]
pub fn barycentric(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0] - p[1], p[0], p[1]]
}

/// The four scalar velocity shape functions: λ0, λ1, λ2 and the bubble 27λ0λ1λ2.
#[inline]
pub fn p1b_values(l: [f64; 3]) -> [f64; 4] {
    [l[0], l[1], l[2], 27.0 * l[0] * l[1] * l[2]]
}

/// Physical gradients of the P1-plus-bubble functions given the constant
/// gradients of the barycentric coordinates.
#[inline]
pub fn p1b_gradients(l: [f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 4] {
    let c = [l[1] * l[2], l[0] * l[2], l[0] * l[1]];
    let mut gb = [0.0; 2];
    for k in 0..2 {
        gb[k] = 27.0 * (c[0] * gl[0][k] + c[1] * gl[1][k] + c[2] * gl[2][k]);
    }
    [gl[0], gl[1], gl[2], gb]
}

/// Precomputed reference values at the quadrature points.
#[derive(Debug, Clone)]
pub struct RefTables {
    pub rule: TriangleRule,
    pub lambda: Vec<[f64; 3]>,
    pub phi: Vec<[f64; 4]>,
}

impl RefTables {
    pub fn new(rule: TriangleRule) -> Self {
        let lambda: Vec<_> = rule.points.iter().map(|&p| barycentric(p)).collect();
        let phi = lambda.iter().map(|&l| p1b_values(l)).collect();
        RefTables { rule, lambda, phi }
    }

    pub fn standard() -> Self {
        Self::new(TriangleRule::standard())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Exact moments on the reference triangle: ∫ ξ^a η^b = a! b! / (a + b + 2)!.
    fn moment(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn collapsed_rule_exact_to_degree_8() {
        let r = TriangleRule::standard();
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                let got: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                assert!((got - moment(a, b)).abs() < 1e-15, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn bubble_mass_moment() {
        // ∫ b² over the reference triangle = 729 · 2·2·2 / 8! = 81/560.
        let t = RefTables::standard();
        let got: f64 = t.phi.iter().zip(&t.rule.weights).map(|(p, w)| w * p[3] * p[3]).sum();
        assert!((got - 81.0 / 560.0).abs() < 1e-15);
    }
}
