//! One-dimensional Gauss–Legendre rules and adaptive integration.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

/// Gauss–Legendre nodes and weights on [−1, 1], computed by Newton's method
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = Float::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, d)
}

/// Fixed Gauss–Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        GaussRule { x, w }
    }

    /// Nodes and weights on [0, 1].
    pub fn unit(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().zip(&self.w).map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.x.iter().zip(&self.w) {
            s += w * f(c + r * x);
        }
        s * r
    }
}

/// Adaptive Gauss–Legendre integration of `f` over [a, b].
///
/// Globally adaptive: the panel with the largest error estimate (10-point
/// rule against the sum over its halves) is split until the summed estimate
/// drops below `tol·(1 + |I|)` or stops improving.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = GaussRule::new(10);
    let mut g = |x: f64| f(x);
    let mut heap = BinaryHeap::new();
    let panel = |a: f64, b: f64, g: &mut dyn FnMut(f64) -> f64| {
        let m = 0.5 * (a + b);
        let whole = rule.integrate(a, b, &mut |x| g(x));
        let halves = rule.integrate(a, m, &mut |x| g(x)) + rule.integrate(m, b, &mut |x| g(x));
        let floor = 8.0 * f64::EPSILON * halves.abs();
        Panel { err: ((halves - whole).abs() - floor).max(0.0), a, b, value: halves }
    };
    heap.push(panel(a, b, &mut g));
    let (mut total, mut err) = (heap.peek().unwrap().value, heap.peek().unwrap().err);
    for _ in 0..MAX_PANELS {
        if err <= tol * (1.0 + total.abs()) {
            break;
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            heap.push(Panel { err: 0.0, ..worst });
            err -= worst.err;
            continue;
        }
        let (l, r) = (panel(worst.a, m, &mut g), panel(m, worst.b, &mut g));
        total += l.value + r.value - worst.value;
        err += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum to shed the drift of the running updates.
    heap.iter().map(|p| p.value).sum()
}

const MAX_PANELS: usize = 20_000;

struct Panel {
    err: f64,
    a: f64,
    b: f64,
    value: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err.total_cmp(&o.err).is_eq()
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Panel {
    fn cmp(&self, o: &Self) -> core::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}
