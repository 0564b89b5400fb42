use crate::error::{Error, Result};
use alloc::format;
use alloc::sync::Arc;
use core::fmt;
use num_traits::Float;

/// A scalar property of the wall as a function of the abscissa x.
#[derive(Clone)]
pub struct SurfaceField(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl SurfaceField {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SurfaceField(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    pub fn as_fn(&self) -> &(dyn Fn(f64) -> f64 + Send + Sync) {
        &*self.0
    }
}

impl fmt::Debug for SurfaceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SurfaceField(f(0) = {})", self.eval(0.0))
    }
}

/// Dimensionless problem definition.
#[derive(Debug, Clone)]
pub struct Params {
    /// Laplace number.
    pub la: f64,
    /// Bond number.
    pub bo: f64,
    /// Wall inclination (radians); positive tilts the wall so that +x is downhill.
    pub alpha: f64,
    pub theta_s: SurfaceField,
    pub slip: SurfaceField,
    /// Target droplet area.
    pub v0: f64,
}

impl Params {
    pub fn new(la: f64, bo: f64, alpha: f64, theta_s: SurfaceField, slip: SurfaceField, v0: f64) -> Result<Self> {
        let p = Params { la, bo, alpha, theta_s, slip, v0 };
        p.validate_scalars()?;
        Ok(p)
    }

    pub fn re(&self) -> f64 {
        Float::sqrt(self.la)
    }

    pub fn ca(&self) -> f64 {
        1.0 / Float::sqrt(self.la)
    }

    /// Fr⁻² = Bo; zero switches gravity off.
    pub fn inv_fr2(&self) -> f64 {
        self.bo
    }

    pub fn ca_re(&self) -> f64 {
        self.ca() * self.re()
    }

    pub fn validate_scalars(&self) -> Result<()> {
        if !(self.la > 0.0 && self.la.is_finite()) {
            return Err(Error::param("la", format!("{} must be positive", self.la)));
        }
        if !(self.bo >= 0.0 && self.bo.is_finite()) {
            return Err(Error::param("bo", format!("{} must be non-negative", self.bo)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if !(self.v0 > 0.0) {
            return Err(Error::param("v0", format!("{} must be positive", self.v0)));
        }
        Ok(())
    }

    /// Check the scalar ranges and the field ranges at the given abscissae.
    pub fn validate(&self, samples: impl IntoIterator<Item = f64>) -> Result<()> {
        self.validate_scalars()?;
        for x in samples {
            let th = self.theta_s.eval(x);
            if !(th > 0.0 && th < core::f64::consts::PI) {
                return Err(Error::param("theta_s", format!("theta_s({x}) = {th} is outside (0, pi)")));
            }
            let s = self.slip.eval(x);
            if !(s >= 0.0) {
                return Err(Error::param("slip", format!("slip({x}) = {s} is negative")));
            }
        }
        Ok(())
    }
}

/// Dimensional inputs (SI units); `area` is the droplet cross-section.
#[derive(Debug, Clone, Copy)]
pub struct Dimensional {
    pub rho: f64,
    pub mu: f64,
    pub gamma: f64,
    pub g: f64,
    pub area: f64,
    pub theta_s: f64,
}

/// Characteristic scales of a nondimensionalisation.
#[derive(Debug, Clone, Copy)]
pub struct Scales {
    /// Radius of the circular cap with the given area and contact angle.
    pub length: f64,
    /// Capillary velocity sqrt(γ/(ρL)).
    pub velocity: f64,
    pub time: f64,
    pub pressure: f64,
}

/// Bond and Laplace numbers for given fluid properties and length scale.
pub fn groups(rho: f64, mu: f64, gamma: f64, g: f64, length: f64) -> Result<(f64, f64)> {
    for (name, v) in [("rho", rho), ("mu", mu), ("gamma", gamma), ("length", length)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("{v} must be positive")));
        }
    }
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::param("g", format!("{g} must be non-negative")));
    }
    Ok((rho * g * length * length / gamma, gamma * rho * length / (mu * mu)))
}

/// Dimensionless parameters of a homogeneous, horizontal, perfect-slip
/// problem; the caller may replace the fields and inclination afterwards.
pub fn nondimensionalize(d: &Dimensional) -> Result<(Params, Scales)> {
    if !(d.theta_s > 0.0 && d.theta_s < core::f64::consts::PI) {
        return Err(Error::param("theta_s", format!("{} is outside (0, pi)", d.theta_s)));
    }
    if !(d.area > 0.0) {
        return Err(Error::param("area", format!("{} must be positive", d.area)));
    }
    let shape = d.theta_s - Float::sin(d.theta_s) * Float::cos(d.theta_s);
    let length = Float::sqrt(d.area / shape);
    let (bo, la) = groups(d.rho, d.mu, d.gamma, d.g, length)?;
    let velocity = Float::sqrt(d.gamma / (d.rho * length));
    let scales = Scales {
        length,
        velocity,
        time: length / velocity,
        pressure: d.rho * velocity * velocity,
    };
    let params = Params::new(
        la,
        bo,
        0.0,
        SurfaceField::constant(d.theta_s),
        SurfaceField::constant(0.0),
        shape,
    )?;
    Ok((params, scales))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_like_groups() {
        let (bo, la) = groups(1000.0, 1e-3, 0.072, 9.81, 1.66e-3).unwrap();
        assert!((bo - 0.375_5).abs() < 1e-3, "{bo}");
        assert!((la - 119_520.0).abs() < 1.0, "{la}");
        let (bo4, la4) = groups(1000.0, 1e-3, 4.0 * 0.072, 9.81, 1.66e-3).unwrap();
        assert!((bo4 - bo / 4.0).abs() < 1e-15 && (la4 - 4.0 * la).abs() < 1e-9);
        let (b0, _) = groups(1000.0, 1e-3, 0.072, 0.0, 1.66e-3).unwrap();
        assert_eq!(b0, 0.0);
        assert!(groups(-1.0, 1e-3, 0.072, 9.81, 1.0).is_err());
    }

    #[test]
    fn length_scale_from_area() {
        let th = 3.0 * core::f64::consts::PI / 4.0;
        let shape = th - th.sin() * th.cos();
        let d = Dimensional { rho: 1000.0, mu: 1e-3, gamma: 0.072, g: 9.81, area: shape * 1.66e-3 * 1.66e-3, theta_s: th };
        let (p, s) = nondimensionalize(&d).unwrap();
        assert!((s.length - 1.66e-3).abs() < 1e-15);
        assert!((p.v0 - shape).abs() < 1e-15);
        assert!((p.re() * p.ca() - 1.0).abs() < 1e-15);
    }
}
