//! Energy, its per-step decrement bound, and the convergence quantities used
//! by the consensus and per-agent convergence criteria.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::{compute_neighborhoods, distance, squared_distance, Neighborhood, OpinionState, StubbornnessAssignment};

/// Absolute slack used on every floating-point inequality check.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// `Z = sum over ordered pairs (i, j) of min(|x_i - x_j|^2, eps^2)`, diagonal included.
pub fn energy(state: &OpinionState) -> f64 {
    let n = state.n();
    let cap = state.epsilon() * state.epsilon();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            z += squared_distance(state.opinion(i), state.opinion(j)).min(cap);
        }
    }
    z
}

/// Lower bound on `Z(t) - Z(t+1)`:
/// `4 * sum_i (1 + |N_i| * alpha_i / (1 - alpha_i) * 1{alpha_i < 1}) * |x_i(t) - x_i(t+1)|^2`,
/// with neighborhoods taken at `prev`.
pub fn nl8_decrement_bound(prev: &OpinionState, next: &OpinionState, alpha: &StubbornnessAssignment) -> f64 {
    let hoods = compute_neighborhoods(prev);
    nl8_bound_with_neighborhoods(prev, next, alpha, &hoods)
}

pub fn nl8_bound_with_neighborhoods(
    prev: &OpinionState,
    next: &OpinionState,
    alpha: &StubbornnessAssignment,
    hoods: &[Neighborhood],
) -> f64 {
    let mut total = 0.0;
    for (i, &a) in alpha.alphas().iter().enumerate() {
        // a == 1 leaves the agent in place: the summand is zero
        if a >= 1.0 {
            continue;
        }
        let weight = 1.0 + hoods[i].size() as f64 * a / (1.0 - a);
        total += weight * squared_distance(prev.opinion(i), next.opinion(i));
    }
    4.0 * total
}

/// One step's energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: u64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub decrement: f64,
    pub nl8_bound: f64,
}

impl EnergyRecord {
    pub fn new(prev: &OpinionState, next: &OpinionState, alpha: &StubbornnessAssignment) -> Self {
        let z = energy(prev);
        EnergyRecord {
            t: prev.t(),
            z,
            decrement: z - energy(next),
            nl8_bound: nl8_decrement_bound(prev, next, alpha),
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.decrement >= -INEQUALITY_SLACK
    }

    pub fn dominates_bound(&self) -> bool {
        self.decrement >= self.nl8_bound - INEQUALITY_SLACK
    }
}

/// `beta_t = max over (i, j) with alpha_i >= alpha_j of alpha_i - (alpha_i - alpha_j) / n`,
/// evaluated literally with `i = j` allowed, which makes it `max_i alpha_i`.
pub fn beta(alpha: &StubbornnessAssignment) -> f64 {
    beta_over(alpha, true).unwrap_or(0.0)
}

/// The same maximum restricted to `i != j`; `None` for a single agent.
pub fn beta_strict(alpha: &StubbornnessAssignment) -> Option<f64> {
    beta_over(alpha, false)
}

fn beta_over(alpha: &StubbornnessAssignment, allow_diagonal: bool) -> Option<f64> {
    let a = alpha.alphas();
    let n = a.len() as f64;
    let mut best: Option<f64> = None;
    for (i, &ai) in a.iter().enumerate() {
        for (j, &aj) in a.iter().enumerate() {
            if (i == j && !allow_diagonal) || ai < aj {
                continue;
            }
            let v = ai - (ai - aj) / n;
            best = Some(best.map_or(v, |b| b.max(v)));
        }
    }
    best
}

/// `d_t^i = max_{j in N_i} |x_i - x_j|`.
pub fn neighborhood_radius(state: &OpinionState, hood: &Neighborhood) -> f64 {
    let own = state.opinion(hood.agent);
    hood.members
        .iter()
        .map(|&j| distance(own, state.opinion(j)))
        .fold(0.0, f64::max)
}

/// Running sum of `(1 - alpha_i(t)) (1 - 1/|N_i(t)|) d_t^i` for one agent,
/// plus a window of its recent opinions for a Cauchy check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTracker {
    pub agent: usize,
    pub partial_sum: f64,
    pub last_increment: f64,
    pub steps: u64,
    window: VecDeque<Vec<f64>>,
    window_len: usize,
}

impl ConvergenceTracker {
    pub fn new(agent: usize, window_len: usize) -> Self {
        ConvergenceTracker {
            agent,
            partial_sum: 0.0,
            last_increment: 0.0,
            steps: 0,
            window: VecDeque::with_capacity(window_len),
            window_len: window_len.max(1),
        }
    }

    pub fn summand(state: &OpinionState, alpha: &StubbornnessAssignment, hood: &Neighborhood) -> f64 {
        let size = hood.size() as f64;
        (1.0 - alpha.alphas()[hood.agent]) * (1.0 - 1.0 / size) * neighborhood_radius(state, hood)
    }

    /// Adds step `state.t()`'s summand and records the agent's opinion.
    pub fn track(&mut self, state: &OpinionState, alpha: &StubbornnessAssignment, hoods: &[Neighborhood]) -> f64 {
        let inc = Self::summand(state, alpha, &hoods[self.agent]);
        self.partial_sum += inc;
        self.last_increment = inc;
        self.steps += 1;
        if self.window.len() == self.window_len {
            self.window.pop_front();
        }
        self.window.push_back(state.opinion(self.agent).to_vec());
        inc
    }

    /// Sum of consecutive displacements over the recorded window.
    pub fn window_displacement(&self) -> f64 {
        self.window
            .iter()
            .zip(self.window.iter().skip(1))
            .map(|(a, b)| distance(a, b))
            .sum()
    }

    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step;

    fn line(xs: &[f64], eps: f64) -> OpinionState {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        OpinionState::new(&rows, eps).unwrap()
    }

    fn alphas(a: &[f64]) -> StubbornnessAssignment {
        StubbornnessAssignment::new(a.to_vec()).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert!((energy(&line(&[0.0, 0.3], 0.5)) - 0.18).abs() < 1e-15);
        assert_eq!(energy(&line(&[0.4, 0.4, 0.4], 0.5)), 0.0);
        let eps = 0.25;
        assert_eq!(energy(&line(&[0.0, 10.0 * eps], eps)), 2.0 * eps * eps);
    }

    #[test]
    fn bound_is_zero_for_identity_step() {
        let s0 = line(&[0.0, 0.05, 0.3], 0.1);
        let a = alphas(&[1.0, 1.0, 1.0]);
        let s1 = step(&s0, &a).unwrap();
        let rec = EnergyRecord::new(&s0, &s1, &a);
        assert_eq!(rec.nl8_bound, 0.0);
        assert_eq!(rec.decrement, 0.0);
    }

    #[test]
    fn merging_example_is_tight() {
        let s0 = line(&[0.0, 0.5], 0.5);
        let a = alphas(&[0.0, 0.0]);
        let s1 = step(&s0, &a).unwrap();
        let rec = EnergyRecord::new(&s0, &s1, &a);
        assert_eq!(rec.z, 0.5);
        assert_eq!(energy(&s1), 0.0);
        assert_eq!(rec.nl8_bound, 0.5);
        assert_eq!(rec.decrement, 0.5);
        assert!(rec.dominates_bound());
    }

    #[test]
    fn three_agent_bound() {
        let s0 = line(&[0.0, 0.1, 0.2], 0.1);
        let a = alphas(&[0.5, 0.0, 1.0]);
        let s1 = step(&s0, &a).unwrap();
        let rec = EnergyRecord::new(&s0, &s1, &a);
        // 4 * (1 + 2 * 1) * 0.025^2, agent 2 does not move
        assert!((rec.nl8_bound - 0.0075).abs() < 1e-15);
        assert!((rec.decrement - 0.00875).abs() < 1e-15);
        assert!(rec.dominates_bound());
    }

    #[test]
    fn beta_readings() {
        assert_eq!(beta(&alphas(&[0.2, 0.6])), 0.6);
        assert_eq!(beta(&alphas(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(beta_strict(&alphas(&[1.0, 0.0])), Some(0.5));
        assert_eq!(beta(&alphas(&[1.0, 0.0])), 1.0);
        assert_eq!(beta_strict(&alphas(&[0.3])), None);
    }

    #[test]
    fn tracker_summands() {
        let eps = 0.4;
        let s = line(&[0.0, eps], eps);
        let hoods = compute_neighborhoods(&s);
        let mut tr = ConvergenceTracker::new(0, 4);
        let inc = tr.track(&s, &alphas(&[0.0, 0.0]), &hoods);
        assert_eq!(inc, eps / 2.0);
        let inc = tr.track(&s, &alphas(&[1.0, 0.0]), &hoods);
        assert_eq!(inc, 0.0);
        assert_eq!(tr.partial_sum, eps / 2.0);

        let isolated = line(&[0.0, 5.0], eps);
        let hoods = compute_neighborhoods(&isolated);
        assert_eq!(ConvergenceTracker::summand(&isolated, &alphas(&[0.0, 0.0]), &hoods[0]), 0.0);
    }
}
