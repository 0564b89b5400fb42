//! Flat `key = value` run configuration. Numeric values may be constant
//! expressions such as `3*pi/4`.

use crate::expr::Expr;
use droplet_core::mesh::{build_initial_cap, measures};
use droplet_core::oracle::{young_laplace, yl_mesh};
use droplet_core::{Mesh2D, Params, SurfaceField};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Config problem, with the 1-based line it came from (0 when the problem is
/// not tied to a line, e.g. a missing key).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config: {}", self.msg)
        } else {
            write!(f, "config line {}: {}", self.line, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Shape the run starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialShape {
    /// Circular cap of unit radius at angle `v0_theta`.
    Cap,
    /// Analytic steady profile for `bo`, `v0_theta` and `volume`.
    YoungLaplace,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub la: f64,
    pub bo: f64,
    pub alpha: f64,
    pub theta_s_expr: String,
    pub slip_expr: String,
    /// Contact angle of the initial shape.
    pub v0_theta: f64,
    pub h: f64,
    pub dt: f64,
    pub t_final: f64,
    pub output_dir: PathBuf,
    /// Interface and VTK snapshots every this many steps (0: first and last only).
    pub snapshot_every: usize,
    pub seed: u64,
    pub initial: InitialShape,
    /// Initial area; defaults to that of the unit-radius cap.
    pub volume: Option<f64>,
    /// Pass threshold of `validate-yl`.
    pub yl_threshold: f64,
    /// Mesh quality check cadence in steps (0 disables remeshing).
    pub adapt_every: usize,
    /// The original text, copied into the output directory.
    pub source: String,
    theta_s: Expr,
    slip: Expr,
}

const KEYS: &[&str] = &[
    "la",
    "bo",
    "alpha",
    "theta_s_expr",
    "slip_expr",
    "v0_theta",
    "h",
    "dt",
    "t_final",
    "output_dir",
    "snapshot_every",
    "seed",
    "initial",
    "volume",
    "yl_threshold",
    "adapt_every",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { line: 0, msg: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: Vec<(&'static str, String, usize)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError { line, msg: format!("expected `key = value`, found `{body}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
                return Err(ConfigError { line, msg: format!("unknown key `{k}`") });
            };
            if entries.iter().any(|e| e.0 == key) {
                return Err(ConfigError { line, msg: format!("duplicate key `{k}`") });
            }
            entries.push((key, v.to_string(), line));
        }
        Self::from_entries(&entries, text)
    }

    /// Replace one key, as a sweep does.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError { line: 0, msg: format!("unknown key `{key}`") });
        }
        let mut out = String::new();
        for raw in self.source.lines() {
            let body = raw.split('#').next().unwrap();
            if body.split_once('=').is_some_and(|(k, _)| k.trim() == key) {
                continue;
            }
            out.push_str(raw);
            out.push('\n');
        }
        out.push_str(&format!("{key} = {value}\n"));
        Self::parse(&out)
    }

    fn from_entries(entries: &[(&'static str, String, usize)], source: &str) -> Result<Self, ConfigError> {
        let get = |k: &str| entries.iter().find(|e| e.0 == k);
        let required = |k: &str| get(k).ok_or_else(|| ConfigError { line: 0, msg: format!("missing key `{k}`") });
        let num = |k: &str, default: Option<f64>| -> Result<f64, ConfigError> {
            match (get(k), default) {
                (Some((_, v, line)), _) => match Expr::parse(v) {
                    Ok(e) if e.is_constant() => Ok(e.eval(0.0)),
                    _ if v == "inf" => Ok(f64::INFINITY),
                    _ => Err(ConfigError { line: *line, msg: format!("`{k}`: `{v}` is not a number") }),
                },
                (None, Some(d)) => Ok(d),
                (None, None) => Err(ConfigError { line: 0, msg: format!("missing key `{k}`") }),
            }
        };
        let count = |k: &str, default: u64| -> Result<u64, ConfigError> {
            match get(k) {
                Some((_, v, line)) => v
                    .parse::<u64>()
                    .map_err(|_| ConfigError { line: *line, msg: format!("`{k}`: `{v}` is not a nonnegative integer") }),
                None => Ok(default),
            }
        };
        let expr = |k: &str, default: Option<&str>| -> Result<(String, Expr), ConfigError> {
            let (text, line) = match get(k) {
                Some((_, v, line)) => (v.clone(), *line),
                None => match default {
                    Some(d) => (d.to_string(), 0),
                    None => return Err(required(k).unwrap_err()),
                },
            };
            let e = Expr::parse(&text).map_err(|e| ConfigError { line, msg: format!("`{k}`: {e}") })?;
            Ok((text, e))
        };
        let line_of = |k: &str| get(k).map_or(0, |e| e.2);

        let (theta_s_expr, theta_s) = expr("theta_s_expr", None)?;
        let (slip_expr, slip) = expr("slip_expr", Some("0"))?;
        let initial = match get("initial").map(|e| e.1.as_str()) {
            None | Some("cap") => InitialShape::Cap,
            Some("young_laplace") => InitialShape::YoungLaplace,
            Some(other) => {
                return Err(ConfigError {
                    line: line_of("initial"),
                    msg: format!("`initial`: expected `cap` or `young_laplace`, found `{other}`"),
                })
            }
        };
        let cfg = RunConfig {
            la: num("la", None)?,
            bo: num("bo", None)?,
            alpha: num("alpha", Some(0.0))?,
            theta_s_expr,
            slip_expr,
            v0_theta: num("v0_theta", None)?,
            h: num("h", None)?,
            dt: num("dt", None)?,
            t_final: num("t_final", None)?,
            output_dir: PathBuf::from(get("output_dir").map_or("out", |e| e.1.as_str())),
            snapshot_every: count("snapshot_every", 0)? as usize,
            seed: count("seed", 0)?,
            initial,
            volume: get("volume").map(|_| num("volume", None)).transpose()?,
            yl_threshold: num("yl_threshold", Some(0.05))?,
            adapt_every: count("adapt_every", 5)? as usize,
            source: source.to_string(),
            theta_s,
            slip,
        };

        let bad = |k: &str, msg: &str| Err(ConfigError { line: line_of(k), msg: format!("`{k}`: {msg}") });
        if !(cfg.v0_theta > 0.0 && cfg.v0_theta < std::f64::consts::PI) {
            return bad("v0_theta", "must lie in (0, pi)");
        }
        if !(cfg.h > 0.0 && cfg.h.is_finite()) {
            return bad("h", "must be positive");
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return bad("dt", "must be positive");
        }
        if !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
            return bad("t_final", "must be nonnegative");
        }
        if cfg.volume.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
            return bad("volume", "must be positive");
        }
        if cfg.yl_threshold.is_nan() || cfg.yl_threshold < 0.0 {
            return bad("yl_threshold", "must be nonnegative");
        }
        if cfg.initial == InitialShape::YoungLaplace && !(cfg.bo > 0.0) {
            return bad("bo", "the young_laplace initial shape needs bo > 0");
        }
        // Scalar ranges are the physics crate's business; report them on the
        // offending line.
        // Fields are checked at x = 0 here and on the actual wall in `setup`.
        let probe = Params::new(cfg.la, cfg.bo, cfg.alpha, cfg.theta_s_field(), cfg.slip_field(), 1.0)
            .and_then(|p| p.validate([0.0]));
        if let Err(droplet_core::Error::InvalidParameter { name, reason }) = probe {
            let key = match name {
                "theta_s" => "theta_s_expr",
                "slip" => "slip_expr",
                other => other,
            };
            return Err(ConfigError { line: line_of(key), msg: format!("`{key}`: {reason}") });
        }
        Ok(cfg)
    }

    pub fn theta_s_field(&self) -> SurfaceField {
        let e = Arc::new(self.theta_s.clone());
        SurfaceField::new(move |x| e.eval(x))
    }

    pub fn slip_field(&self) -> SurfaceField {
        let e = Arc::new(self.slip.clone());
        SurfaceField::new(move |x| e.eval(x))
    }

    /// θ_s when it does not depend on x.
    pub fn constant_theta_s(&self) -> Option<f64> {
        self.theta_s.is_constant().then(|| self.theta_s.eval(0.0))
    }

    /// Area of the initial shape before meshing.
    pub fn nominal_volume(&self) -> f64 {
        let t = self.v0_theta;
        self.volume.unwrap_or(t - t.sin() * t.cos())
    }

    /// Initial mesh and the physical parameters, with the target volume taken
    /// as the area of that mesh.
    pub fn setup(&self) -> droplet_core::Result<(Mesh2D, Params)> {
        let mesh = match self.initial {
            InitialShape::Cap => {
                let mut m = build_initial_cap(self.v0_theta, self.h)?;
                if let Some(v) = self.volume {
                    let s = (v / (self.v0_theta - self.v0_theta.sin() * self.v0_theta.cos())).sqrt();
                    m.vertices.iter_mut().for_each(|p| *p = *p * s);
                }
                m
            }
            InitialShape::YoungLaplace => yl_mesh(&young_laplace(self.bo, self.v0_theta, self.nominal_volume())?, self.h)?,
        };
        let v0 = measures(&mesh).0;
        let params = Params::new(self.la, self.bo, self.alpha, self.theta_s_field(), self.slip_field(), v0)?;
        let samples: Vec<f64> = mesh.vertices.iter().filter(|p| p.y == 0.0).map(|p| p.x).collect();
        params.validate(samples)?;
        Ok((mesh, params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# sessile drop
la = 1
bo = 0.2
theta_s_expr = 3*pi/4
v0_theta = 3*pi/4
h = 0.3
dt = 0.1
t_final = 1
";

    fn with(extra: &str) -> String {
        format!("{BASE}{extra}")
    }

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(&with("")).unwrap();
        assert_eq!(c.la, 1.0);
        assert_eq!(c.alpha, 0.0);
        assert_eq!(c.slip_expr, "0");
        assert_eq!(c.adapt_every, 5);
        assert_eq!(c.initial, InitialShape::Cap);
        assert_eq!(c.constant_theta_s(), Some(3.0 * std::f64::consts::PI / 4.0));
        assert!((c.nominal_volume() - 2.856_194_490_192_345).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let e = RunConfig::parse(&with("gravity = 1\n")).unwrap_err();
        assert_eq!(e.line, 9);
        assert!(e.msg.contains("`gravity`"), "{e}");
    }

    #[test]
    fn numeric_and_range_errors() {
        let e = RunConfig::parse(&with("").replace("v0_theta = 3*pi/4", "v0_theta = 3*x")).unwrap_err();
        assert_eq!(e.line, 5);
        let e = RunConfig::parse(&with("alpha = two\n")).unwrap_err();
        assert_eq!(e.line, 9);
        let e = RunConfig::parse(&with("").replace("la = 1", "la = -1")).unwrap_err();
        assert_eq!(e.line, 2);
        let e = RunConfig::parse(&with("").replace("theta_s_expr = 3*pi/4", "theta_s_expr = 4")).unwrap_err();
        assert_eq!(e.line, 4, "{e}");
        let e = RunConfig::parse(&with("").replace("h = 0.3\n", "")).unwrap_err();
        assert_eq!((e.line, e.msg.as_str()), (0, "missing key `h`"));
        assert!(RunConfig::parse(&with("la = 2\n")).unwrap_err().msg.contains("duplicate"));
        assert!(RunConfig::parse(&with("slip_expr = 1 +\n")).is_err());
    }

    #[test]
    fn override_replaces_a_key() {
        let c = RunConfig::parse(&with("")).unwrap().with_override("bo", "0.8").unwrap();
        assert_eq!(c.bo, 0.8);
        assert!(c.with_override("nope", "1").is_err());
    }

    #[test]
    fn setup_uses_mesh_area_as_target() {
        let c = RunConfig::parse(&with("")).unwrap();
        let (mesh, params) = c.setup().unwrap();
        assert_eq!(params.v0, measures(&mesh).0);
        let c = c.with_override("initial", "young_laplace").unwrap();
        let (mesh, params) = c.setup().unwrap();
        assert!((params.v0 - c.nominal_volume()).abs() < 0.05, "{}", params.v0);
        mesh.validate().unwrap();
    }
}
