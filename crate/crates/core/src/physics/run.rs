//! Time loop with step retries, periodic remeshing and per-step diagnostics.

use super::stepper::Stepper;
use super::{Params, State, StepReport};
use crate::diagnostics::{initial_report, step_report, Energies, EnergyReport};
use crate::error::{Error, Result};
use crate::mesh::{adapt_mesh, AdaptCriterion};
use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

/// Driver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Target element size used when remeshing.
    pub h: f64,
    /// Quality is checked after every `adapt_every` steps (0 disables remeshing).
    pub adapt_every: usize,
    pub criterion: AdaptCriterion,
    /// How many times a failed step is retried with a halved time step.
    pub max_retries: usize,
}

impl RunOptions {
    pub fn new(dt: f64, t_final: f64, h: f64) -> Self {
        RunOptions { dt, t_final, h, adapt_every: 5, criterion: AdaptCriterion::default(), max_retries: 3 }
    }

    /// Number of steps of size `dt` covering [0, t_final]; the last one is
    /// shortened when t_final is not a multiple of dt.
    pub fn steps(&self) -> usize {
        let n = self.t_final / self.dt;
        let r = Float::round(n);
        if (n - r).abs() < 1e-9 * n.max(1.0) { r as usize } else { Float::ceil(n) as usize }
    }
}

/// Hooks called by [`run`].
pub trait RunObserver {
    fn on_start(&mut self, _state: &State, _report: &EnergyReport) {}
    /// Called after every accepted step (including sub-steps of a retried step).
    fn on_step(&mut self, _step: usize, _state: &State, _report: &EnergyReport, _solver: &StepReport) {}
    fn on_remesh(&mut self, _before: &State, _after: &State) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl RunObserver for NoObserver {}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Last accepted state.
    pub state: State,
    /// Completed steps of the nominal size.
    pub steps: usize,
    pub remesh_count: usize,
    /// Accepted sub-steps taken after a failure.
    pub retries: usize,
    /// Largest balance over steps that are not remeshing steps.
    pub max_balance: f64,
    pub max_vol_err: f64,
    /// Energy report of the initial state followed by one per accepted (sub-)step.
    pub reports: Vec<EnergyReport>,
    pub solver: Vec<StepReport>,
    /// Error that stopped the run early, if any.
    pub failure: Option<Error>,
}

/// Advance one nominal step, halving the time step up to `max_retries` times
/// when the nonlinear solve fails.
fn advance(
    stepper: &mut Stepper,
    state: &State,
    params: &Params,
    dt: f64,
    max_retries: usize,
) -> Result<Vec<(State, StepReport)>> {
    let mut last_err = None;
    for level in 0..=max_retries {
        let parts = 1usize << level;
        let h = dt / parts as f64;
        let mut out = Vec::with_capacity(parts);
        let mut cur = state.clone();
        let mut ok = true;
        for _ in 0..parts {
            match stepper.step(&cur, params, h) {
                Ok((next, mut rep)) => {
                    rep.retries = level;
                    cur = next.clone();
                    out.push((next, rep));
                }
                Err(e) => {
                    last_err = Some(e);
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(out);
        }
    }
    Err(last_err.unwrap_or_else(|| Error::StepFailure { t: state.t, reason: "no attempt made".into() }))
}

/// Integrate from `initial` to `opts.t_final`.
pub fn run(
    initial: State,
    params: &Params,
    opts: &RunOptions,
    stepper: &mut Stepper,
    observer: &mut dyn RunObserver,
) -> Result<RunSummary> {
    if !(opts.dt > 0.0) {
        return Err(Error::param("dt", format!("{} must be positive", opts.dt)));
    }
    if !(opts.t_final >= 0.0) {
        return Err(Error::param("t_final", format!("{} must be non-negative", opts.t_final)));
    }
    params.validate_scalars()?;
    let first = initial_report(&initial, params)?;
    observer.on_start(&initial, &first);
    let mut summary = RunSummary {
        max_vol_err: first.vol_rel_err,
        state: initial,
        steps: 0,
        remesh_count: 0,
        retries: 0,
        max_balance: f64::NEG_INFINITY,
        reports: alloc::vec![first],
        solver: Vec::new(),
        failure: None,
    };
    let mut pending_remesh: Option<Energies> = None;
    let n = opts.steps();
    for k in 0..n {
        let dt = if k + 1 == n { opts.t_final - summary.state.t } else { opts.dt };
        let parts = match advance(stepper, &summary.state, params, dt, opts.max_retries) {
            Ok(p) => p,
            Err(e) => {
                summary.failure = Some(e);
                return Ok(summary);
            }
        };
        for (next, rep) in parts {
            let remeshed = pending_remesh.is_some();
            let prev_e = pending_remesh.take().unwrap_or(summary.reports.last().unwrap().energies);
            let report = match step_report(&summary.state, &prev_e, &next, params, rep.dt_used, remeshed) {
                Ok(r) => r,
                Err(e) => {
                    summary.failure = Some(e);
                    return Ok(summary);
                }
            };
            if rep.retries > 0 {
                summary.retries += 1;
            }
            if !remeshed {
                summary.max_balance = summary.max_balance.max(report.balance);
            }
            summary.max_vol_err = summary.max_vol_err.max(report.vol_rel_err);
            observer.on_step(k + 1, &next, &report, &rep);
            summary.reports.push(report);
            summary.solver.push(rep);
            summary.state = next;
        }
        summary.steps = k + 1;
        if opts.adapt_every > 0 && (k + 1) % opts.adapt_every == 0 && k + 1 < n {
            match adapt_mesh(&summary.state, opts.h, &opts.criterion) {
                Ok((after, true)) => {
                    observer.on_remesh(&summary.state, &after);
                    pending_remesh = Some(summary.reports.last().unwrap().energies);
                    summary.remesh_count += 1;
                    summary.state = after;
                }
                Ok((_, false)) => {}
                Err(e) => {
                    summary.failure = Some(e);
                    return Ok(summary);
                }
            }
        }
    }
    Ok(summary)
}
