//! Named experiments, run drivers, refinement studies and post-processing
//! (eigenvalues, directors, defects).

mod catalog;
mod convergence;
mod defects;
mod eigen;
mod run;

pub use catalog::{ExperimentSpec, InitialCondition, DIRECTOR_FLOOR};
pub use convergence::{
    convergence_order, l2_error, run_convergence_space, run_convergence_time, tracked_errors,
    ConvergenceReport, ConvergenceRow, SpaceStudy, TimeStudy,
};
pub use defects::{cell_charges, locate_charged_defects, locate_defects, ChargedDefect, Defect, DEFAULT_THRESHOLD};
pub use eigen::{director, director_field, lambda_max_field, largest_eigenvalue};
pub use run::{initial_state, run, simulate, Event, RunOutcome};
