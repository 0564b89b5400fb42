//! Subcommand implementations. Each returns data; `main` turns it into text
//! and exit codes.

use crate::config::{ConfigError, RunConfig};
use crate::output::{write_interface, write_polyline, write_vtk, EnergyWriter};
use droplet_core::audit::{audit_scl, SclAudit};
use droplet_core::diagnostics::EnergyReport;
use droplet_core::mesh::measures;
use droplet_core::oracle::{profile_distance, young_laplace};
use droplet_core::physics::{run, RunObserver, RunOptions, RunSummary, Stepper};
use droplet_core::{State, StepReport};
use serde_json::json;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Runs with final kinetic energy below this are reported as steady.
pub const STEADY_KINETIC_ENERGY: f64 = 1e-8;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(droplet_core::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Numerical(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<droplet_core::Error> for CliError {
    fn from(e: droplet_core::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Output directory, with `DROPLET_OUT` taking precedence over the config.
pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    match std::env::var_os("DROPLET_OUT") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg.output_dir.clone(),
    }
}

struct Recorder<'a> {
    dir: &'a Path,
    every: usize,
    energies: EnergyWriter,
    error: Option<io::Error>,
    /// Largest relative area change caused by a remesh.
    remesh_jump: f64,
}

impl Recorder<'_> {
    fn keep(&mut self, r: io::Result<()>) {
        if let Err(e) = r {
            self.error.get_or_insert(e);
        }
    }

    fn snapshot(&mut self, step: usize, state: &State) {
        let r = write_interface(&self.dir.join(format!("interface_{step}.csv")), &state.mesh)
            .and_then(|_| write_vtk(&self.dir.join(format!("snapshot_{step}.vtk")), state));
        self.keep(r);
    }
}

impl RunObserver for Recorder<'_> {
    fn on_start(&mut self, state: &State, report: &EnergyReport) {
        let r = self.energies.row(report);
        self.keep(r);
        self.snapshot(0, state);
    }

    fn on_step(&mut self, step: usize, state: &State, report: &EnergyReport, _solver: &StepReport) {
        let r = self.energies.row(report);
        self.keep(r);
        if self.every > 0 && step % self.every == 0 {
            self.snapshot(step, state);
        }
    }

    fn on_remesh(&mut self, before: &State, after: &State) {
        let (a, b) = (measures(&before.mesh).0, measures(&after.mesh).0);
        self.remesh_jump = self.remesh_jump.max((b - a).abs() / a);
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
    /// Target volume: the area of the initial mesh.
    pub v0: f64,
    pub remesh_volume_jump: f64,
}

impl RunOutcome {
    pub fn final_kinetic_energy(&self) -> f64 {
        self.summary.reports.last().map_or(0.0, |r| r.energies.e_k)
    }

    pub fn steady(&self) -> bool {
        self.final_kinetic_energy() <= STEADY_KINETIC_ENERGY
    }

    pub fn max_positive_balance(&self) -> f64 {
        self.summary.max_balance.max(0.0)
    }

    fn summary_json(&self, cfg: &RunConfig) -> serde_json::Map<String, serde_json::Value> {
        let s = &self.summary;
        let json = json!({
            "format": "droplet summary v1",
            "t_final": s.state.t,
            "t_target": cfg.t_final,
            "steps": s.steps,
            "steady": self.steady(),
            "final_kinetic_energy": self.final_kinetic_energy(),
            "max_positive_balance": self.max_positive_balance(),
            "vol_rel_err_max": s.max_vol_err,
            "remesh_count": s.remesh_count,
            "remesh_volume_jump_max": self.remesh_volume_jump,
            "retries": s.retries,
            "seed": cfg.seed,
            "failure": s.failure.as_ref().map(|e| e.to_string()),
        });
        match json {
            serde_json::Value::Object(m) => m,
            _ => unreachable!(),
        }
    }
}

fn write_summary(path: &Path, map: serde_json::Map<String, serde_json::Value>) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map)).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

fn simulate(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    let (mesh, params) = cfg.setup()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), &cfg.source)?;
    let mut rec = Recorder {
        dir,
        every: cfg.snapshot_every,
        energies: EnergyWriter::create(&dir.join("energies.csv"))?,
        error: None,
        remesh_jump: 0.0,
    };
    let mut opts = RunOptions::new(cfg.dt, cfg.t_final, cfg.h);
    opts.adapt_every = cfg.adapt_every;
    let summary = run(State::at_rest(mesh, 0.0), &params, &opts, &mut Stepper::default(), &mut rec)?;
    rec.snapshot(summary.steps, &summary.state);
    rec.energies.flush()?;
    if let Some(e) = rec.error.take() {
        return Err(e.into());
    }
    Ok(RunOutcome { dir: dir.to_path_buf(), summary, v0: params.v0, remesh_volume_jump: rec.remesh_jump })
}

/// `run`: simulate and write all artifacts into `dir`. A step failure is
/// reported in the outcome (and the summary file), not as an error.
pub fn cmd_run(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    let out = simulate(cfg, dir)?;
    write_summary(&dir.join("summary.json"), out.summary_json(cfg))?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct YlOutcome {
    pub run: RunOutcome,
    pub distance: f64,
    pub threshold: f64,
}

impl YlOutcome {
    pub fn pass(&self) -> bool {
        self.run.summary.failure.is_none() && self.distance <= self.threshold
    }
}

/// `validate-yl`: simulate, then compare the final free surface with the
/// analytic profile of the same area.
pub fn cmd_validate_yl(cfg: &RunConfig, dir: &Path) -> Result<YlOutcome, CliError> {
    let Some(theta) = cfg.constant_theta_s() else {
        return Err(ConfigError { line: 0, msg: "validate-yl needs a constant `theta_s_expr`".into() }.into());
    };
    if cfg.alpha != 0.0 || !(cfg.bo > 0.0) {
        return Err(ConfigError { line: 0, msg: "validate-yl needs `alpha = 0` and `bo > 0`".into() }.into());
    }
    let out = simulate(cfg, dir)?;
    let profile = young_laplace(cfg.bo, theta, out.v0)?;
    let state = &out.summary.state;
    let surface: Vec<_> = state.mesh.sigma_chain().iter().map(|&i| state.mesh.vertices[i]).collect();
    let distance = profile_distance(&surface, &profile)?;
    write_polyline(&dir.join("yl_profile.csv"), &profile.samples)?;
    let mut map = out.summary_json(cfg);
    map.insert("yl_distance".into(), json!(distance));
    map.insert("yl_threshold".into(), json!(cfg.yl_threshold));
    map.insert("yl_volume".into(), json!(profile.volume));
    write_summary(&dir.join("summary.json"), map)?;
    Ok(YlOutcome { run: out, distance, threshold: cfg.yl_threshold })
}

/// Bounds checked by `audit-scl`.
pub const AUDIT_EXACT_TOL: f64 = 1e-12;
pub const AUDIT_ORDER: (f64, f64) = (2.7, 3.3);

pub fn audit_passes(a: &SclAudit) -> bool {
    let within = |r: (f64, f64)| r.0 >= AUDIT_ORDER.0 && r.1 <= AUDIT_ORDER.1;
    a.volume <= AUDIT_EXACT_TOL && a.gravity <= AUDIT_EXACT_TOL && within(a.surface_order) && within(a.contact_order)
}

pub fn cmd_audit_scl(seed: u64, cases: usize) -> Result<SclAudit, CliError> {
    Ok(audit_scl(seed, cases)?)
}

/// `sweep`: one `run` (or `validate-yl`) per value, each in
/// `<dir>/<key>_<value>`.
pub fn cmd_sweep(
    cfg: &RunConfig,
    dir: &Path,
    key: &str,
    values: &[String],
    validate: bool,
) -> Result<Vec<SweepOutcome>, CliError> {
    // Check every override before running anything.
    let cfgs = values.iter().map(|v| cfg.with_override(key, v)).collect::<Result<Vec<_>, _>>()?;
    Ok(values
        .iter()
        .zip(cfgs)
        .map(|(v, c)| {
            let sub = dir.join(format!("{key}_{v}"));
            let r = if validate {
                cmd_validate_yl(&c, &sub).map(SweepItem::Yl)
            } else {
                cmd_run(&c, &sub).map(SweepItem::Run)
            };
            (v.clone(), r)
        })
        .collect())
}

/// One sweep value and how its run ended.
pub type SweepOutcome = (String, Result<SweepItem, CliError>);

#[derive(Debug, Clone)]
pub enum SweepItem {
    Run(RunOutcome),
    Yl(YlOutcome),
}
