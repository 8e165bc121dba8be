//! Stopping times along a trajectory.
//!
//! [`StoppingMonitor`] consumes states one at a time, so ensembles can be
//! analyzed without storing trajectories. Every "for all later t" statement it
//! reports is relative to the last observed step.

use serde::Serialize;

use crate::dynamics::{detect_merge, OpinionState};
use crate::profile::{build_profile, components_interact, max_component_diameter, ProfileGraph};
use crate::trajectory::Trajectory;

pub const DEFAULT_M_MAX: u32 = 16;
pub const M_MIN: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeEvent {
    pub t: u64,
    pub pair: (usize, usize),
}

/// Profile edges constant from `tau_hat` (= `tau_{eps/m}`) through `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FreezeVerdict {
    pub m: u32,
    pub tau_hat: u64,
    pub horizon: u64,
}

/// A step where the three interaction conditions disagreed:
/// (1) some component of G(t+1) is delta-nontrivial,
/// (2) some components of G(t) interact at t+1,
/// (3) some component of G(t+1) is eps/2-nontrivial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceViolation {
    pub t: u64,
    pub delta: f64,
    pub delta_nontrivial: bool,
    pub interaction: bool,
    pub half_eps_nontrivial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingReport {
    pub delta: f64,
    pub tau_delta: Option<u64>,
    /// `(m, tau_{eps/m})` for `m` in `4..=m_max`; `None` where not reached.
    pub tau_hat: Vec<(u32, Option<u64>)>,
    pub merge_times: Vec<MergeEvent>,
    pub freeze: Option<FreezeVerdict>,
    pub termination_time: Option<u64>,
    pub last_edge_change: u64,
    pub equivalence_checks: u64,
    pub equivalence_violations: Vec<EquivalenceViolation>,
    /// Number of `m` in `4..m_max` whose window `[tau_m, tau_{m+1})` contains an
    /// eps/m-nontrivial step (only windows opened within the horizon).
    pub a_set_size: usize,
    pub horizon: u64,
}

impl StoppingReport {
    pub fn tau_hat_for(&self, m: u32) -> Option<u64> {
        self.tau_hat.iter().find(|(k, _)| *k == m).and_then(|(_, t)| *t)
    }
}

struct Previous {
    state: OpinionState,
    graph: ProfileGraph,
    max_diameter: f64,
}

pub struct StoppingMonitor {
    epsilon: f64,
    delta: f64,
    m_max: u32,
    equivalence_deltas: Vec<f64>,
    record_merges: bool,
    tau_delta: Option<u64>,
    tau_hat: Vec<Option<u64>>,
    a_nonempty: Vec<bool>,
    merge_times: Vec<MergeEvent>,
    last_edge_change: u64,
    last_state_change: u64,
    equivalence_checks: u64,
    violations: Vec<EquivalenceViolation>,
    prev: Option<Previous>,
    last_t: Option<u64>,
}

impl StoppingMonitor {
    /// Tracks `tau_delta` plus `tau_{eps/m}` for `m` in `4..=m_max`. The
    /// interaction equivalences are checked for `delta` (when `delta <= eps/4`)
    /// and for every `eps/m`.
    pub fn new(epsilon: f64, delta: f64, m_max: u32) -> Self {
        let m_max = m_max.max(M_MIN);
        let mut equivalence_deltas: Vec<f64> = (M_MIN..=m_max).map(|m| epsilon / m as f64).collect();
        if delta <= epsilon / 4.0 && !equivalence_deltas.contains(&delta) {
            equivalence_deltas.push(delta);
        }
        StoppingMonitor {
            epsilon,
            delta,
            m_max,
            equivalence_deltas,
            record_merges: true,
            tau_delta: None,
            tau_hat: vec![None; (m_max - M_MIN + 1) as usize],
            a_nonempty: vec![false; (m_max - M_MIN) as usize],
            merge_times: Vec::new(),
            last_edge_change: 0,
            last_state_change: 0,
            equivalence_checks: 0,
            violations: Vec::new(),
            prev: None,
            last_t: None,
        }
    }

    /// Restricts the equivalence check to the given deltas (each must be `<= eps/4`).
    pub fn with_equivalence_deltas(mut self, deltas: Vec<f64>) -> Self {
        self.equivalence_deltas = deltas;
        self
    }

    /// Skips merge bookkeeping (ensembles only need counts of stopping times).
    pub fn without_merges(mut self) -> Self {
        self.record_merges = false;
        self
    }

    pub fn tau_delta(&self) -> Option<u64> {
        self.tau_delta
    }

    pub fn observe(&mut self, state: &OpinionState) {
        let graph = build_profile(state);
        self.observe_with_graph(state, graph);
    }

    pub fn observe_with_graph(&mut self, state: &OpinionState, graph: ProfileGraph) {
        let t = state.t();
        let max_diameter = max_component_diameter(&graph, state);

        if self.tau_delta.is_none() && max_diameter <= self.delta {
            self.tau_delta = Some(t);
        }
        for (k, slot) in self.tau_hat.iter_mut().enumerate() {
            let m = M_MIN + k as u32;
            if slot.is_none() && max_diameter <= self.epsilon / m as f64 {
                *slot = Some(t);
            }
        }
        for (k, open) in self.a_nonempty.iter_mut().enumerate() {
            let m = M_MIN + k as u32;
            let window_open = self.tau_hat[k].is_some() && self.tau_hat[k + 1].is_none();
            if window_open && max_diameter > self.epsilon / m as f64 {
                *open = true;
            }
        }

        if let Some(prev) = &self.prev {
            if graph.edges() != prev.graph.edges() {
                self.last_edge_change = t;
            }
            if !state.same_opinions(&prev.state) {
                self.last_state_change = t;
            }
            if self.record_merges {
                self.merge_times
                    .extend(detect_merge(&prev.state, state).into_iter().map(|pair| MergeEvent { t, pair }));
            }
            let interaction = components_interact(&prev.graph, &graph);
            let half_eps_nontrivial = max_diameter > self.epsilon / 2.0;
            for &delta in &self.equivalence_deltas {
                if prev.max_diameter > delta {
                    continue;
                }
                self.equivalence_checks += 1;
                let delta_nontrivial = max_diameter > delta;
                if !(delta_nontrivial == interaction && interaction == half_eps_nontrivial) {
                    self.violations.push(EquivalenceViolation {
                        t: prev.state.t(),
                        delta,
                        delta_nontrivial,
                        interaction,
                        half_eps_nontrivial,
                    });
                }
            }
        }

        self.last_t = Some(t);
        self.prev = Some(Previous {
            state: state.clone(),
            graph,
            max_diameter,
        });
    }

    pub fn report(&self) -> StoppingReport {
        let horizon = self.last_t.unwrap_or(0);
        let tau_hat: Vec<(u32, Option<u64>)> = self
            .tau_hat
            .iter()
            .enumerate()
            .map(|(k, t)| (M_MIN + k as u32, *t))
            .collect();
        let freeze = tau_hat.iter().find_map(|&(m, t)| {
            t.filter(|&t| t >= self.last_edge_change)
                .map(|t| FreezeVerdict { m, tau_hat: t, horizon })
        });
        let termination_time = (self.last_state_change < horizon).then_some(self.last_state_change);
        StoppingReport {
            delta: self.delta,
            tau_delta: self.tau_delta,
            tau_hat,
            merge_times: self.merge_times.clone(),
            freeze,
            termination_time,
            last_edge_change: self.last_edge_change,
            equivalence_checks: self.equivalence_checks,
            equivalence_violations: self.violations.clone(),
            a_set_size: self.a_nonempty.iter().filter(|&&b| b).count(),
            horizon,
        }
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }
}

/// Runs a monitor over a stored trajectory.
pub fn analyze_stopping(traj: &Trajectory, delta: f64, m_max: u32) -> StoppingReport {
    let mut monitor = StoppingMonitor::new(traj.epsilon, delta, m_max);
    for state in traj.states() {
        monitor.observe(state);
    }
    monitor.report()
}

/// First step at which every profile component is delta-trivial.
pub fn detect_tau_delta(traj: &Trajectory, delta: f64) -> Option<u64> {
    traj.states().find_map(|s| (max_component_diameter(&build_profile(s), s) <= delta).then_some(s.t()))
}

/// Smallest `M` in `4..=m_max` whose `tau_{eps/M}` starts a run of identical
/// edge sets lasting to the end of the trajectory.
pub fn detect_freeze(traj: &Trajectory, m_max: u32) -> Option<FreezeVerdict> {
    analyze_stopping(traj, traj.epsilon / M_MIN as f64, m_max).freeze
}

/// Steps where the interaction conditions are not pairwise equivalent, for a
/// given `delta <= eps/4`.
pub fn check_interaction_equivalences(traj: &Trajectory, delta: f64) -> Vec<EquivalenceViolation> {
    assert!(
        delta > 0.0 && delta <= traj.epsilon / 4.0,
        "equivalences require 0 < delta <= eps/4"
    );
    let mut monitor = StoppingMonitor::new(traj.epsilon, delta, M_MIN).with_equivalence_deltas(vec![delta]);
    for state in traj.states() {
        monitor.observe(state);
    }
    monitor.violations
}

/// First step from which the opinions never change again within the trajectory.
pub fn detect_termination(traj: &Trajectory) -> Option<u64> {
    let states: Vec<&OpinionState> = traj.states().collect();
    let last = states.last()?;
    let mut first = last.t();
    for pair in states.windows(2).rev() {
        if !pair[0].same_opinions(pair[1]) {
            break;
        }
        first = pair[0].t();
    }
    (first < last.t()).then_some(first)
}
