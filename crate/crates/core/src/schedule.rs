//! Stubbornness schedules: how `alpha(t)` is produced at every step.
//!
//! Random draws come from a ChaCha8 stream keyed by the schedule seed, with the
//! step index selecting the stream, so `(seed, t)` always reproduces the same
//! assignment regardless of how many other draws were made before it. Within a
//! step the draw order is fixed: first the open set, then one alpha per open
//! agent in ascending index (only for the interval policy).

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::StubbornnessAssignment;
use crate::error::{Error, Result};

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// A seeded, per-step random stream. The same `(seed, counter)` pair always
/// yields the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, counter: u64) -> Self {
        RngStream { seed, counter }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.counter);
        rng
    }
}

/// Derives an independent seed for trajectory `index` of an ensemble.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportElement {
    /// Zero-based agent indices forming this open set.
    pub agents: Vec<usize>,
    pub probability: f64,
}

/// Stubbornness given to agents inside the drawn open set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenAlphaPolicy {
    Constant(f64),
    /// Uniform on `[lo, hi]`, drawn independently per open agent per step.
    Interval { lo: f64, hi: f64 },
}

impl Default for OpenAlphaPolicy {
    fn default() -> Self {
        OpenAlphaPolicy::Constant(0.0)
    }
}

/// The i.i.d. open-set model: `U_t` is drawn from `support` by its
/// probabilities; `partition_indices` designates the members of the support
/// that partition the agent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportModel {
    pub support: Vec<SupportElement>,
    pub partition_indices: Vec<usize>,
    #[serde(default)]
    pub open_alpha: OpenAlphaPolicy,
}

/// Deterministic scripted stubbornness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Script {
    /// One explicit alpha row per step.
    Rows(Vec<Vec<f64>>),
    /// `alpha_i(t) = 1 - 2^{-t}` for every agent: open-mindedness that vanishes
    /// summably fast.
    Vanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Synchronous,
    Asynchronous,
    Scripted { script: Script },
    StochasticSupport(SupportModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    #[serde(default)]
    pub seed: u64,
}

/// The tightest constant `gamma` with `alpha_i(t) <= gamma` for every open agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaBound {
    Bounded(f64),
    /// Open-agent stubbornness approaches 1; no `gamma < 1` exists.
    Unbounded,
}

impl GammaBound {
    pub fn value(self) -> Option<f64> {
        match self {
            GammaBound::Bounded(g) => Some(g),
            GammaBound::Unbounded => None,
        }
    }
}

impl ScheduleSpec {
    pub fn synchronous() -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Synchronous,
            seed: 0,
        }
    }

    pub fn asynchronous(seed: u64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Asynchronous,
            seed,
        }
    }

    pub fn scripted(rows: Vec<Vec<f64>>) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Scripted {
                script: Script::Rows(rows),
            },
            seed: 0,
        }
    }

    pub fn vanishing() -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Scripted {
                script: Script::Vanishing,
            },
            seed: 0,
        }
    }

    pub fn stochastic(model: SupportModel, seed: u64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::StochasticSupport(model),
            seed,
        }
    }

    /// The asynchronous model written as a uniform singleton support.
    pub fn asynchronous_as_support(n: usize, seed: u64) -> Self {
        let p = 1.0 / n as f64;
        Self::stochastic(
            SupportModel {
                support: (0..n)
                    .map(|i| SupportElement {
                        agents: vec![i],
                        probability: p,
                    })
                    .collect(),
                partition_indices: (0..n).collect(),
                open_alpha: OpenAlphaPolicy::Constant(0.0),
            },
            seed,
        )
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScheduleSpec {
            kind: self.kind.clone(),
            seed,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self.kind, ScheduleKind::Asynchronous | ScheduleKind::StochasticSupport(_))
    }

    /// Checks the schedule against an agent count.
    pub fn validate(&self, n: usize) -> Result<()> {
        match &self.kind {
            ScheduleKind::Synchronous | ScheduleKind::Asynchronous => Ok(()),
            ScheduleKind::Scripted { script: Script::Vanishing } => Ok(()),
            ScheduleKind::Scripted { script: Script::Rows(rows) } => {
                for (t, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::config(
                            format!("schedule.script.rows[{t}]"),
                            format!("expected {n} values, found {}", row.len()),
                        ));
                    }
                    if let Some(i) = row.iter().position(|a| !(0.0..=1.0).contains(a)) {
                        return Err(Error::config(
                            format!("schedule.script.rows[{t}][{i}]"),
                            format!("stubbornness must lie in [0, 1], got {}", row[i]),
                        ));
                    }
                }
                Ok(())
            }
            ScheduleKind::StochasticSupport(model) => model.validate(n),
        }
    }

    /// The assignment for step `stream.counter`.
    pub fn next_assignment(&self, n: usize, stream: RngStream) -> Result<StubbornnessAssignment> {
        let t = stream.counter;
        match &self.kind {
            ScheduleKind::Synchronous => Ok(StubbornnessAssignment::synchronous(n)),
            ScheduleKind::Asynchronous => {
                let agent = stream.rng().random_range(0..n);
                Ok(StubbornnessAssignment::single_open(n, agent))
            }
            ScheduleKind::Scripted { script: Script::Rows(rows) } => {
                let row = rows.get(t as usize).ok_or_else(|| {
                    Error::config(
                        "schedule.script.rows",
                        format!("script has {} rows, step {t} requested", rows.len()),
                    )
                })?;
                if row.len() != n {
                    return Err(Error::config(
                        format!("schedule.script.rows[{t}]"),
                        format!("expected {n} values, found {}", row.len()),
                    ));
                }
                StubbornnessAssignment::new(row.clone())
            }
            ScheduleKind::Scripted { script: Script::Vanishing } => {
                StubbornnessAssignment::constant(n, vanishing_alpha(t))
            }
            ScheduleKind::StochasticSupport(model) => model.draw(n, stream),
        }
    }

    /// `min_j P(U_0 = K_j)` over the designated partition. The asynchronous
    /// model is the uniform singleton partition, giving `1/n`.
    pub fn min_partition_probability(&self, n: usize) -> Result<f64> {
        match &self.kind {
            ScheduleKind::StochasticSupport(model) => Ok(model.min_partition_probability()),
            ScheduleKind::Asynchronous => Ok(1.0 / n as f64),
            _ => Err(Error::Usage(
                "partition probabilities exist only for stochastic schedules".into(),
            )),
        }
    }

    pub fn gamma_bound(&self) -> GammaBound {
        match &self.kind {
            ScheduleKind::Synchronous | ScheduleKind::Asynchronous => GammaBound::Bounded(0.0),
            ScheduleKind::StochasticSupport(model) => GammaBound::Bounded(match model.open_alpha {
                OpenAlphaPolicy::Constant(a) => a,
                OpenAlphaPolicy::Interval { hi, .. } => hi,
            }),
            ScheduleKind::Scripted { script: Script::Vanishing } => GammaBound::Unbounded,
            ScheduleKind::Scripted { script: Script::Rows(rows) } => GammaBound::Bounded(
                rows.iter()
                    .flatten()
                    .copied()
                    .filter(|&a| a < 1.0)
                    .fold(0.0, f64::max),
            ),
        }
    }
}

/// `1 - 2^{-t}`; saturates at exactly 1 once `2^{-t}` drops below half an ulp.
pub fn vanishing_alpha(t: u64) -> f64 {
    1.0 - 0.5f64.powi(t.min(i32::MAX as u64) as i32)
}

impl SupportModel {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::config("schedule.support", "support is empty"));
        }
        let mut total = 0.0;
        for (k, el) in self.support.iter().enumerate() {
            if !(el.probability > 0.0 && el.probability <= 1.0) {
                return Err(Error::config(
                    format!("schedule.support[{k}].probability"),
                    format!("probability must lie in (0, 1], got {}", el.probability),
                ));
            }
            if let Some(pos) = el.agents.iter().position(|&i| i >= n) {
                return Err(Error::config(
                    format!("schedule.support[{k}].agents[{pos}]"),
                    format!("agent index {} out of range for n = {n}", el.agents[pos]),
                ));
            }
            total += el.probability;
        }
        if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::config(
                "schedule.support",
                format!("probabilities sum to {total}, expected 1"),
            ));
        }
        if self.partition_indices.is_empty() {
            return Err(Error::config("schedule.partition_indices", "no partition designated"));
        }
        let mut owner = vec![None; n];
        for (p, &k) in self.partition_indices.iter().enumerate() {
            let el = self.support.get(k).ok_or_else(|| {
                Error::config(
                    format!("schedule.partition_indices[{p}]"),
                    format!("support index {k} out of range"),
                )
            })?;
            for &i in &el.agents {
                if let Some(prev) = owner[i].replace(k) {
                    return Err(Error::config(
                        format!("schedule.partition_indices[{p}]"),
                        format!("partition not disjoint: agent {i} in support sets {prev} and {k}"),
                    ));
                }
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::config(
                "schedule.partition_indices",
                format!("partition does not cover agent {i}"),
            ));
        }
        match self.open_alpha {
            OpenAlphaPolicy::Constant(a) if !(0.0..1.0).contains(&a) => Err(Error::config(
                "schedule.open_alpha.constant",
                format!("open stubbornness must lie in [0, 1), got {a}"),
            )),
            OpenAlphaPolicy::Interval { lo, hi } if !(0.0 <= lo && lo <= hi && hi < 1.0) => Err(Error::config(
                "schedule.open_alpha.interval",
                format!("need 0 <= lo <= hi < 1, got [{lo}, {hi}]"),
            )),
            _ => Ok(()),
        }
    }

    pub fn min_partition_probability(&self) -> f64 {
        self.partition_indices
            .iter()
            .map(|&k| self.support[k].probability)
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the support element drawn for this stream. Equal probabilities
    /// use the integer sampler, so a uniform singleton support reproduces the
    /// asynchronous model's draws exactly.
    fn draw_index<R: Rng>(&self, rng: &mut R) -> usize {
        let first = self.support[0].probability;
        if self.support.iter().all(|el| el.probability == first) {
            rng.random_range(0..self.support.len())
        } else {
            let weights = WeightedIndex::new(self.support.iter().map(|el| el.probability))
                .expect("validated support probabilities");
            weights.sample(rng)
        }
    }

    fn draw(&self, n: usize, stream: RngStream) -> Result<StubbornnessAssignment> {
        let mut rng = stream.rng();
        let element = &self.support[self.draw_index(&mut rng)];
        let mut alphas = vec![1.0; n];
        let mut open: Vec<usize> = element.agents.clone();
        open.sort_unstable();
        open.dedup();
        for &i in &open {
            let a = alphas.get_mut(i).ok_or_else(|| {
                Error::config("schedule.support", format!("agent index {i} out of range for n = {n}"))
            })?;
            *a = match self.open_alpha {
                OpenAlphaPolicy::Constant(c) => c,
                OpenAlphaPolicy::Interval { lo, hi } if lo == hi => lo,
                OpenAlphaPolicy::Interval { lo, hi } => rng.random_range(lo..=hi),
            };
        }
        StubbornnessAssignment::new(alphas)
    }
}
