//! Monte Carlo ensembles of stopping times and the expected-stopping-time bounds.

use serde::Serialize;

use crate::dynamics::OpinionState;
use crate::error::{Error, Result};
use crate::schedule::{derive_seed, GammaBound, ScheduleSpec};
use crate::stopping::{FreezeVerdict, StoppingMonitor};
use crate::trajectory::Simulation;

fn check_bound_hypotheses(gamma: f64, min_partition_prob: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Hypothesis(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if !(min_partition_prob > 0.0 && min_partition_prob <= 1.0) {
        return Err(Error::Hypothesis(format!(
            "partition probability must lie in (0, 1], got {min_partition_prob}"
        )));
    }
    Ok(())
}

/// Upper bound on `E(tau_delta)`:
/// `n^10 / (8 (1 - gamma)^2 p_min) * (eps / delta)^2`.
pub fn co1_bound(n: usize, epsilon: f64, delta: f64, gamma: f64, min_partition_prob: f64) -> Result<f64> {
    check_bound_hypotheses(gamma, min_partition_prob)?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::Hypothesis(format!("delta must be positive, got {delta}")));
    }
    let ratio = epsilon / delta;
    Ok((n as f64).powi(10) / (8.0 * (1.0 - gamma).powi(2) * min_partition_prob) * ratio * ratio)
}

/// Upper bound on `E(|A|)`: `n^10 / (2 (1 - gamma)^2 p_min)`.
pub fn a_set_bound(n: usize, gamma: f64, min_partition_prob: f64) -> Result<f64> {
    check_bound_hypotheses(gamma, min_partition_prob)?;
    Ok((n as f64).powi(10) / (2.0 * (1.0 - gamma).powi(2) * min_partition_prob))
}

/// Inputs for one ensemble. `initial` produces the starting state of run `r`.
pub struct EnsembleSpec<'a> {
    pub schedule: &'a ScheduleSpec,
    pub epsilon: f64,
    pub delta: f64,
    pub m_max: u32,
    pub master_seed: u64,
    pub initial: &'a (dyn Fn(u64) -> Result<OpinionState> + Sync),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub run: u64,
    pub seed: u64,
    pub tau_delta: Option<u64>,
    pub tau_hat: Vec<(u32, Option<u64>)>,
    pub freeze: Option<FreezeVerdict>,
    pub equivalence_checks: u64,
    pub equivalence_violations: usize,
    pub a_set_size: usize,
    pub termination_time: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub runs: u64,
    pub horizon: u64,
    pub outcomes: Vec<RunOutcome>,
    pub mean_tau: Option<f64>,
    /// Standard error of `mean_tau`.
    pub std_error: Option<f64>,
    pub reached_fraction: f64,
    pub gamma: f64,
    pub min_partition_probability: f64,
    pub co1_bound: f64,
    pub a_set_bound: f64,
    /// Some run failed to reach `tau_delta` within the horizon.
    pub horizon_insufficient: bool,
}

impl EnsembleResult {
    pub fn tau_samples(&self) -> Vec<Option<u64>> {
        self.outcomes.iter().map(|o| o.tau_delta).collect()
    }

    /// Empirical mean over the bound; `None` if no run reached `tau_delta`.
    pub fn bound_ratio(&self) -> Option<f64> {
        self.mean_tau.map(|m| m / self.co1_bound)
    }
}

/// The horizon the bound suggests: ten times `co1_bound`, capped.
pub fn suggested_horizon(co1_bound: f64, cap: u64) -> u64 {
    let h = (co1_bound * 10.0).ceil();
    if h.is_finite() && h < cap as f64 {
        (h as u64).max(1)
    } else {
        cap
    }
}

fn run_one(spec: &EnsembleSpec<'_>, run: u64, horizon: u64) -> Result<RunOutcome> {
    let seed = derive_seed(spec.master_seed, run);
    let initial = (spec.initial)(run)?;
    let mut monitor = StoppingMonitor::new(spec.epsilon, spec.delta, spec.m_max).without_merges();
    let mut sim = Simulation::new(initial, spec.schedule, seed)?;
    monitor.observe(sim.state());
    for _ in 0..horizon {
        sim.advance()?;
        monitor.observe(sim.state());
    }
    let report = monitor.report();
    Ok(RunOutcome {
        run,
        seed,
        tau_delta: report.tau_delta,
        tau_hat: report.tau_hat,
        freeze: report.freeze,
        equivalence_checks: report.equivalence_checks,
        equivalence_violations: report.equivalence_violations.len(),
        a_set_size: report.a_set_size,
        termination_time: report.termination_time,
    })
}

#[cfg(feature = "parallel")]
fn run_all(spec: &EnsembleSpec<'_>, runs: u64, horizon: u64) -> Result<Vec<RunOutcome>> {
    use rayon::prelude::*;
    (0..runs).into_par_iter().map(|r| run_one(spec, r, horizon)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(spec: &EnsembleSpec<'_>, runs: u64, horizon: u64) -> Result<Vec<RunOutcome>> {
    (0..runs).map(|r| run_one(spec, r, horizon)).collect()
}

/// Runs `runs` independent trajectories for `horizon` steps each and
/// summarizes their `tau_delta`. Results are ordered by run index and do not
/// depend on thread scheduling.
pub fn run_ensemble(spec: &EnsembleSpec<'_>, runs: u64, horizon: u64) -> Result<EnsembleResult> {
    if !spec.schedule.is_stochastic() {
        return Err(Error::Usage(
            "ensembles need a stochastic schedule (asynchronous or stochastic_support)".into(),
        ));
    }
    if runs == 0 || horizon == 0 {
        return Err(Error::Usage("runs and horizon must be at least 1".into()));
    }
    let n = (spec.initial)(0)?.n();
    let gamma = match spec.schedule.gamma_bound() {
        GammaBound::Bounded(g) => g,
        GammaBound::Unbounded => return Err(Error::Hypothesis("schedule has no gamma < 1".into())),
    };
    let p_min = spec.schedule.min_partition_probability(n)?;
    let co1 = co1_bound(n, spec.epsilon, spec.delta, gamma, p_min)?;
    let a_bound = a_set_bound(n, gamma, p_min)?;

    let outcomes = run_all(spec, runs, horizon)?;
    let reached: Vec<f64> = outcomes.iter().filter_map(|o| o.tau_delta).map(|t| t as f64).collect();
    let (mean_tau, std_error) = if reached.is_empty() {
        (None, None)
    } else {
        let k = reached.len() as f64;
        let mean = reached.iter().sum::<f64>() / k;
        let se = if reached.len() > 1 {
            let var = reached.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        (Some(mean), Some(se))
    };
    Ok(EnsembleResult {
        runs,
        horizon,
        reached_fraction: reached.len() as f64 / runs as f64,
        horizon_insufficient: reached.len() as u64 != runs,
        outcomes,
        mean_tau,
        std_error,
        gamma,
        min_partition_probability: p_min,
        co1_bound: co1,
        a_set_bound: a_bound,
    })
}
