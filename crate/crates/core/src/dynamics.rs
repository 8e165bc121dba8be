//! Opinion state and the mixed update rule.
//!
//! One step moves every agent to a convex combination of its own opinion and
//! the average opinion of its confidence neighborhood:
//!
//! ```text
//! x_i(t+1) = alpha_i x_i(t) + (1 - alpha_i) * mean{ x_j(t) : |x_i - x_j| <= eps }
//! ```
//!
//! Floating-point conventions are frozen so that merges and termination can
//! be detected with exact equality:
//!
//! * neighbor opinions are summed in ascending agent index, then divided by
//!   the neighborhood size;
//! * an agent whose neighbor mean equals its own opinion (always the case when
//!   its neighborhood is unanimous, in particular when it is isolated) keeps
//!   its opinion bit-for-bit;
//! * `alpha == 1` keeps the opinion and `alpha == 0` takes the mean, both
//!   without an intermediate blend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opinions of `n` agents in `R^d` at step `t`, with confidence bound `epsilon`.
///
/// Coordinates are stored row-major (`n * d` values). Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionState {
    t: u64,
    dim: usize,
    epsilon: f64,
    coords: Vec<f64>,
}

impl OpinionState {
    pub fn new(opinions: &[Vec<f64>], epsilon: f64) -> Result<Self> {
        let dim = opinions.first().map_or(0, Vec::len);
        if let Some(i) = opinions.iter().position(|p| p.len() != dim) {
            return Err(Error::config(
                format!("opinions[{i}]"),
                format!("expected {dim} coordinates, found {}", opinions[i].len()),
            ));
        }
        let coords = opinions.iter().flatten().copied().collect();
        Self::from_flat(0, dim, epsilon, coords)
    }

    pub fn from_flat(t: u64, dim: usize, epsilon: f64, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("d", "dimension must be at least 1"));
        }
        if coords.is_empty() {
            return Err(Error::config("n", "at least one agent is required"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::config(
                "opinions",
                format!("{} coordinates do not split into rows of {dim}", coords.len()),
            ));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::config("epsilon", format!("must be finite and > 0, got {epsilon}")));
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::config(
                format!("opinions[{}][{}]", k / dim, k % dim),
                "coordinate is not finite",
            ));
        }
        Ok(OpinionState { t, dim, epsilon, coords })
    }

    /// Same opinions, different step index.
    pub fn at_time(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn opinion(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn opinions(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.opinions().map(<[f64]>::to_vec).collect()
    }

    /// Exact coordinate-wise equality of two agents' opinions.
    pub fn same_opinion(&self, i: usize, j: usize) -> bool {
        self.opinion(i) == self.opinion(j)
    }

    /// Exact equality of the opinion vectors, ignoring `t`.
    pub fn same_opinions(&self, other: &OpinionState) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.opinion(i), self.opinion(j))
    }

    pub fn are_neighbors(&self, i: usize, j: usize) -> bool {
        self.distance(i, j) <= self.epsilon
    }

    /// Largest pairwise distance over all agents.
    pub fn diameter(&self) -> f64 {
        let n = self.n();
        let mut diam: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                diam = diam.max(self.distance(i, j));
            }
        }
        diam
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance. For `d = 1` this is exactly `|a - b|`.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Stubbornness degrees for one step and the derived open set
/// `U_t = { i : alpha_i < 1 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct StubbornnessAssignment {
    alphas: Vec<f64>,
    open_set: Vec<usize>,
}

impl StubbornnessAssignment {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if let Some(i) = alphas.iter().position(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config(
                format!("alphas[{i}]"),
                format!("stubbornness must lie in [0, 1], got {}", alphas[i]),
            ));
        }
        let open_set = alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a < 1.0)
            .map(|(i, _)| i)
            .collect();
        Ok(StubbornnessAssignment { alphas, open_set })
    }

    pub fn constant(n: usize, alpha: f64) -> Result<Self> {
        Self::new(vec![alpha; n])
    }

    /// Everyone open-minded: the synchronous model.
    pub fn synchronous(n: usize) -> Self {
        StubbornnessAssignment {
            alphas: vec![0.0; n],
            open_set: (0..n).collect(),
        }
    }

    /// Only `agent` updates, fully open-minded: the asynchronous model.
    pub fn single_open(n: usize, agent: usize) -> Self {
        let mut alphas = vec![1.0; n];
        alphas[agent] = 0.0;
        StubbornnessAssignment {
            alphas,
            open_set: vec![agent],
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn open_set(&self) -> &[usize] {
        &self.open_set
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn is_open(&self, i: usize) -> bool {
        self.alphas[i] < 1.0
    }
}

impl Serialize for StubbornnessAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.alphas.serialize(s)
    }
}

/// Members of `N_i(t)` in ascending order. Always contains `agent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub agent: usize,
    pub members: Vec<usize>,
}

impl Neighborhood {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }
}

pub fn compute_neighborhoods(state: &OpinionState) -> Vec<Neighborhood> {
    let n = state.n();
    (0..n)
        .map(|i| Neighborhood {
            agent: i,
            members: (0..n).filter(|&j| state.are_neighbors(i, j)).collect(),
        })
        .collect()
}

/// Writes the neighbor mean of `hood.agent` into `out`. Returns `true` when the
/// mean equals the agent's own opinion exactly.
fn neighbor_mean(state: &OpinionState, hood: &Neighborhood, out: &mut [f64]) -> bool {
    let own = state.opinion(hood.agent);
    if hood.members.iter().all(|&j| state.opinion(j) == own) {
        out.copy_from_slice(own);
        return true;
    }
    out.iter_mut().for_each(|c| *c = 0.0);
    for &j in &hood.members {
        for (acc, c) in out.iter_mut().zip(state.opinion(j)) {
            *acc += c;
        }
    }
    let count = hood.members.len() as f64;
    out.iter_mut().for_each(|c| *c /= count);
    out == own
}

fn blend(alpha: f64, own: f64, mean: f64) -> f64 {
    if alpha == 1.0 {
        own
    } else if alpha == 0.0 {
        mean
    } else {
        alpha * own + (1.0 - alpha) * mean
    }
}

fn check_len(state: &OpinionState, alpha: &StubbornnessAssignment) -> Result<()> {
    if alpha.len() != state.n() {
        return Err(Error::config(
            "alphas",
            format!("{} stubbornness values for {} agents", alpha.len(), state.n()),
        ));
    }
    Ok(())
}

/// One step of the mixed update. Pure: returns the state at `t + 1`.
pub fn step(state: &OpinionState, alpha: &StubbornnessAssignment) -> Result<OpinionState> {
    check_len(state, alpha)?;
    let hoods = compute_neighborhoods(state);
    Ok(step_with_neighborhoods(state, alpha, &hoods))
}

/// As [`step`], reusing neighborhoods already computed for `state`.
pub fn step_with_neighborhoods(
    state: &OpinionState,
    alpha: &StubbornnessAssignment,
    hoods: &[Neighborhood],
) -> OpinionState {
    let dim = state.dim();
    let mut coords = Vec::with_capacity(state.coords().len());
    let mut mean = vec![0.0; dim];
    for (hood, &a) in hoods.iter().zip(alpha.alphas()) {
        let own = state.opinion(hood.agent);
        if a == 1.0 || neighbor_mean(state, hood, &mut mean) {
            coords.extend_from_slice(own);
        } else {
            coords.extend(own.iter().zip(&mean).map(|(&o, &m)| blend(a, o, m)));
        }
    }
    OpinionState {
        t: state.t + 1,
        dim,
        epsilon: state.epsilon,
        coords,
    }
}

/// Row-stochastic update matrix `diag(alpha) + (I - diag(alpha)) A(t)` with
/// `A_ij = 1{j in N_i} / |N_i|`.
pub fn transition_matrix(state: &OpinionState, alpha: &StubbornnessAssignment) -> Result<Vec<Vec<f64>>> {
    check_len(state, alpha)?;
    let n = state.n();
    let hoods = compute_neighborhoods(state);
    let mut w = vec![vec![0.0; n]; n];
    for (i, hood) in hoods.iter().enumerate() {
        let a = alpha.alphas()[i];
        let share = (1.0 - a) / hood.size() as f64;
        for &j in &hood.members {
            w[i][j] = share;
        }
        w[i][i] += a;
    }
    Ok(w)
}

/// The update in matrix form, `x(t+1) = W(t) x(t)`. Agrees with [`step`] up to
/// rounding; kept as an independent cross-check.
pub fn step_matrix(state: &OpinionState, alpha: &StubbornnessAssignment) -> Result<OpinionState> {
    let w = transition_matrix(state, alpha)?;
    let dim = state.dim();
    let mut coords = Vec::with_capacity(state.coords().len());
    for row in &w {
        for k in 0..dim {
            coords.push(row.iter().enumerate().map(|(j, wij)| wij * state.opinion(j)[k]).sum());
        }
    }
    OpinionState::from_flat(state.t + 1, dim, state.epsilon, coords)
}

/// Pairs `(i, j)`, `i < j`, that hold the same opinion in `next` but did not in
/// `prev`.
pub fn detect_merge(prev: &OpinionState, next: &OpinionState) -> Vec<(usize, usize)> {
    assert_eq!(prev.n(), next.n(), "merge detection across different agent counts");
    let n = next.n();
    let mut merges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if next.same_opinion(i, j) && !prev.same_opinion(i, j) {
                merges.push((i, j));
            }
        }
    }
    merges
}
