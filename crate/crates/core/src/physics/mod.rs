//! Problem definition and the coupled time stepper.

mod params;
mod run;
mod state;
mod stepper;

pub use params::{groups, nondimensionalize, Dimensional, Params, Scales, SurfaceField};
pub use run::{run, NoObserver, RunObserver, RunOptions, RunSummary};
pub use state::{State, StepReport};
pub use stepper::{assemble_step_system, step, SolverSettings, StepAssembly, Stepper};
