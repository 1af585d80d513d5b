use log::{debug, info};

use super::ExperimentSpec;
use crate::fields::{project_initial, GridSpec, QTensorField, ScalarField};
use crate::linsolve::SolverConfig;
use crate::scheme::{step_in_place, SchemeState, StepReport};
use crate::Result;

/// What a driver callback sees after each time level.
pub enum Event<'a> {
    /// Time level 0, before any step.
    Initial(&'a SchemeState),
    Step(&'a SchemeState, &'a StepReport),
}

/// Projects the initial data of `spec` onto its grid.
pub fn initial_state(spec: &ExperimentSpec) -> Result<SchemeState> {
    spec.validate()?;
    let grid = GridSpec::with_intervals(spec.dim(), spec.n, spec.side)?;
    let dim = spec.dim();
    let init = spec.initial;
    let (q, r) = project_initial(&grid, &spec.params, |x| init.eval(dim, x))?;
    SchemeState::new(q, r, spec.params)
}

/// Runs `spec` to its final time, handing every level to `observe`.
pub fn simulate<F>(spec: &ExperimentSpec, cfg: &SolverConfig, mut observe: F) -> Result<SchemeState>
where
    F: FnMut(Event<'_>) -> Result<()>,
{
    cfg.validate()?;
    let mut state = initial_state(spec)?;
    info!(
        "{}: N={} h={} steps={} dt={} T={}",
        spec.name,
        state.q.grid().n_interior(),
        state.q.grid().h(),
        spec.steps,
        spec.params.dt,
        spec.t_final
    );
    observe(Event::Initial(&state))?;
    for _ in 0..spec.steps {
        let report = step_in_place(&mut state, cfg)?;
        debug!(
            "step {} E={:.12e} res={:.3e} cg={}",
            report.step, report.energy_after, report.dissipation_residual, report.solver_iterations
        );
        observe(Event::Step(&state, &report))?;
    }
    Ok(state)
}

/// Collected output of [`run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub final_state: SchemeState,
    pub initial_energy: f64,
    pub reports: Vec<StepReport>,
    /// `(time, Q, r)` at the snapped snapshot steps.
    pub snapshots: Vec<(f64, QTensorField, ScalarField)>,
}

impl RunOutcome {
    /// `E⁰, E¹, …`.
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy)
            .chain(self.reports.iter().map(|r| r.energy_after))
            .collect()
    }

    pub fn max_dissipation_residual(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.dissipation_residual.abs())
            .fold(0.0, f64::max)
    }
}

/// Runs `spec`, keeping every step report and the requested snapshots.
pub fn run(spec: &ExperimentSpec, cfg: &SolverConfig) -> Result<RunOutcome> {
    let wanted = spec.snapshot_steps();
    let mut reports = Vec::with_capacity(spec.steps);
    let mut snapshots = Vec::new();
    let mut initial_energy = 0.0;
    let final_state = simulate(spec, cfg, |ev| {
        let state = match ev {
            Event::Initial(s) => {
                initial_energy = s.energy();
                s
            }
            Event::Step(s, rep) => {
                reports.push(rep.clone());
                s
            }
        };
        for &(_, k) in wanted.iter().filter(|(_, k)| *k == state.step) {
            snapshots.push((k as f64 * spec.params.dt, state.q.clone(), state.r.clone()));
        }
        Ok(())
    })?;
    Ok(RunOutcome {
        final_state,
        initial_energy,
        reports,
        snapshots,
    })
}
