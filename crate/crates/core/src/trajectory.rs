//! Trajectory driver and the per-step record.

use serde::Serialize;

use crate::diagnostics::{energy, nl8_bound_with_neighborhoods};
use crate::dynamics::{
    compute_neighborhoods, detect_merge, step_with_neighborhoods, Neighborhood, OpinionState, StubbornnessAssignment,
};
use crate::error::{Error, Result};
use crate::profile::build_profile;
use crate::schedule::{RngStream, ScheduleSpec};

/// Steps a state forward under a schedule, one assignment per step.
pub struct Simulation<'a> {
    schedule: &'a ScheduleSpec,
    seed: u64,
    state: OpinionState,
}

/// What happened in one call to [`Simulation::advance`]. The simulation's
/// current state is the successor of `prev`.
pub struct Transition {
    pub prev: OpinionState,
    pub neighborhoods: Vec<Neighborhood>,
    pub alpha: StubbornnessAssignment,
}

impl<'a> Simulation<'a> {
    /// `seed` overrides the schedule's own seed (ensembles derive one per run).
    pub fn new(initial: OpinionState, schedule: &'a ScheduleSpec, seed: u64) -> Result<Self> {
        schedule.validate(initial.n())?;
        Ok(Simulation {
            schedule,
            seed,
            state: initial,
        })
    }

    pub fn state(&self) -> &OpinionState {
        &self.state
    }

    pub fn advance(&mut self) -> Result<Transition> {
        let n = self.state.n();
        let alpha = self
            .schedule
            .next_assignment(n, RngStream::new(self.seed, self.state.t()))?;
        let neighborhoods = compute_neighborhoods(&self.state);
        let next = step_with_neighborhoods(&self.state, &alpha, &neighborhoods);
        let prev = std::mem::replace(&mut self.state, next);
        Ok(Transition {
            prev,
            neighborhoods,
            alpha,
        })
    }
}

/// `true` when every agent's neighbor mean equals its own opinion, so that
/// every stubbornness assignment leaves the state unchanged.
pub fn is_universal_fixed_point(state: &OpinionState) -> bool {
    let all_open = StubbornnessAssignment::synchronous(state.n());
    step_with_neighborhoods(state, &all_open, &compute_neighborhoods(state)).same_opinions(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub state: OpinionState,
    /// Assignment applied to move from this step to the next; `None` on the last step.
    pub alpha: Option<StubbornnessAssignment>,
    pub edge_count: usize,
    pub component_count: usize,
    pub energy: f64,
    /// `Z(t) - Z(t+1)`; `None` on the last step.
    pub decrement: Option<f64>,
    pub nl8_bound: Option<f64>,
    /// Pairs that merged on arrival at this step.
    pub merges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub epsilon: f64,
    pub dim: usize,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn states(&self) -> impl Iterator<Item = &OpinionState> {
        self.steps.iter().map(|s| &s.state)
    }

    pub fn last_state(&self) -> &OpinionState {
        &self.steps.last().expect("trajectory has at least one step").state
    }

    pub fn horizon(&self) -> u64 {
        self.last_state().t()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub horizon: u64,
    pub seed: u64,
    /// Stop once the state is a fixed point of every assignment (after recording
    /// one confirming step).
    pub stop_on_termination: bool,
}

fn bare_record(state: OpinionState, merges: Vec<(usize, usize)>) -> StepRecord {
    let graph = build_profile(&state);
    StepRecord {
        edge_count: graph.edges().len(),
        component_count: graph.components().len(),
        energy: energy(&state),
        alpha: None,
        decrement: None,
        nl8_bound: None,
        merges,
        state,
    }
}

/// Runs a single trajectory and keeps every step.
pub fn simulate(initial: OpinionState, schedule: &ScheduleSpec, opts: RunOptions) -> Result<Trajectory> {
    if opts.horizon == 0 {
        return Err(Error::config("horizon", "horizon must be at least 1"));
    }
    let epsilon = initial.epsilon();
    let dim = initial.dim();
    let start = initial.t();
    let mut sim = Simulation::new(initial, schedule, opts.seed)?;
    let mut steps = Vec::new();
    let mut pending = bare_record(sim.state().clone(), Vec::new());
    let mut confirming = false;
    while sim.state().t() - start < opts.horizon {
        if opts.stop_on_termination && is_universal_fixed_point(sim.state()) {
            if confirming {
                break;
            }
            confirming = true;
        }
        let tr = sim.advance()?;
        let next = sim.state();
        pending.decrement = Some(pending.energy - energy(next));
        pending.nl8_bound = Some(nl8_bound_with_neighborhoods(&tr.prev, next, &tr.alpha, &tr.neighborhoods));
        pending.alpha = Some(tr.alpha);
        let merges = detect_merge(&tr.prev, next);
        let following = bare_record(next.clone(), merges);
        steps.push(std::mem::replace(&mut pending, following));
    }
    steps.push(pending);
    Ok(Trajectory { epsilon, dim, steps })
}
