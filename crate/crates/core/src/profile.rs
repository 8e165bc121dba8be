//! The profile graph: agents joined when their opinions are within `epsilon`.

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::dynamics::OpinionState;
use crate::error::{Error, Result};
use crate::hull::{hull_distance, HULL_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileGraph {
    n: usize,
    /// Sorted pairs `(i, j)` with `i < j`.
    edges: Vec<(usize, usize)>,
    /// Each component sorted ascending; components ordered by smallest member.
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

impl ProfileGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component_of(&self, agent: usize) -> usize {
        self.component_of[agent]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).is_ok()
    }
}

pub fn build_profile(state: &OpinionState) -> ProfileGraph {
    let n = state.n();
    let mut edges = Vec::new();
    let mut uf = UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if state.are_neighbors(i, j) {
                edges.push((i, j));
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    let mut component_of = vec![0; n];
    for i in 0..n {
        let root = labels[i];
        if root_slot[root] == usize::MAX {
            root_slot[root] = components.len();
            components.push(Vec::new());
        }
        component_of[i] = root_slot[root];
        components[root_slot[root]].push(i);
    }
    ProfileGraph {
        n,
        edges,
        components,
        component_of,
    }
}

/// Geometry of one component's opinions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSummary {
    pub component: usize,
    /// Largest pairwise distance, which is the diameter of the convex hull.
    pub diameter: f64,
    pub points: Vec<Vec<f64>>,
}

pub fn component_diameter(state: &OpinionState, members: &[usize]) -> f64 {
    let mut diam: f64 = 0.0;
    for (k, &i) in members.iter().enumerate() {
        for &j in &members[k + 1..] {
            diam = diam.max(state.distance(i, j));
        }
    }
    diam
}

pub fn hull_summaries(graph: &ProfileGraph, state: &OpinionState) -> Vec<HullSummary> {
    graph
        .components
        .iter()
        .enumerate()
        .map(|(c, members)| HullSummary {
            component: c,
            diameter: component_diameter(state, members),
            points: members.iter().map(|&i| state.opinion(i).to_vec()).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triviality {
    pub per_component: Vec<bool>,
    /// Every component is delta-trivial.
    pub all_components: bool,
    /// The whole vertex set is within `delta`.
    pub whole_set: bool,
}

/// Delta-triviality per component (diameter `<= delta`, inclusive).
pub fn is_delta_trivial(graph: &ProfileGraph, state: &OpinionState, delta: f64) -> Triviality {
    let per_component: Vec<bool> = graph
        .components
        .iter()
        .map(|c| component_diameter(state, c) <= delta)
        .collect();
    Triviality {
        all_components: per_component.iter().all(|&b| b),
        whole_set: state.diameter() <= delta,
        per_component,
    }
}

/// Largest component diameter; all components are delta-trivial iff this is `<= delta`.
pub fn max_component_diameter(graph: &ProfileGraph, state: &OpinionState) -> f64 {
    graph
        .components
        .iter()
        .map(|c| component_diameter(state, c))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationFailure {
    pub groups: (usize, usize),
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiameterFailure {
    pub group: usize,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumVerdict {
    pub holds: bool,
    /// Candidate partition (agent indices), taken from the profile components.
    pub groups: Vec<Vec<usize>>,
    pub separation_failures: Vec<SeparationFailure>,
    pub diameter_failures: Vec<DiameterFailure>,
}

/// Tests whether the profile components witness a delta-equilibrium: hulls
/// pairwise farther than `epsilon` apart, each of diameter at most `delta`.
///
/// Only the component partition is tried. In one dimension that candidate is
/// exact; in higher dimensions a `true` verdict is sound but a `false` one
/// does not rule out some other partition.
pub fn check_delta_equilibrium(state: &OpinionState, delta: f64) -> Result<EquilibriumVerdict> {
    let eps = state.epsilon();
    if !(delta > 0.0 && delta <= eps) {
        return Err(Error::Usage(format!("delta must lie in (0, epsilon], got {delta}")));
    }
    let graph = build_profile(state);
    let summaries = hull_summaries(&graph, state);
    let diameter_failures = summaries
        .iter()
        .filter(|h| h.diameter > delta)
        .map(|h| DiameterFailure {
            group: h.component,
            diameter: h.diameter,
        })
        .collect::<Vec<_>>();
    let threshold = if state.dim() == 1 { eps } else { eps + HULL_TOLERANCE };
    let mut separation_failures = Vec::new();
    for (gi, a) in summaries.iter().enumerate() {
        for (gj, b) in summaries.iter().enumerate().skip(gi + 1) {
            let pa: Vec<&[f64]> = a.points.iter().map(Vec::as_slice).collect();
            let pb: Vec<&[f64]> = b.points.iter().map(Vec::as_slice).collect();
            let d = hull_distance(&pa, &pb)?;
            if d <= threshold {
                separation_failures.push(SeparationFailure {
                    groups: (gi, gj),
                    distance: d,
                });
            }
        }
    }
    Ok(EquilibriumVerdict {
        holds: diameter_failures.is_empty() && separation_failures.is_empty(),
        groups: graph.components.clone(),
        separation_failures,
        diameter_failures,
    })
}

/// `true` if some edge of `next` joins agents in different components of `prev`.
pub fn components_interact(prev: &ProfileGraph, next: &ProfileGraph) -> bool {
    next.edges
        .iter()
        .any(|&(i, j)| prev.component_of(i) != prev.component_of(j))
}
