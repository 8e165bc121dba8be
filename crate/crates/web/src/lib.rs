//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns JSON strings so the page needs no bindings
//! beyond `wasm-bindgen`'s string passing.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use mhk::ensemble::{run_ensemble, EnsembleSpec};
use mhk::schedule::{OpenAlphaPolicy, ScheduleSpec, SupportElement, SupportModel};
use mhk::stopping::{analyze_stopping, DEFAULT_M_MAX};
use mhk::{simulate, OpinionState, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleChoice {
    Synchronous,
    Asynchronous,
    /// Two-block partition (first half / second half), each with probability 1/2.
    Halves,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateRequest {
    pub opinions: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub horizon: u64,
    pub schedule: ScheduleChoice,
    /// Upper end of the open agents' stubbornness interval `[0, alpha_hi]`.
    #[serde(default)]
    pub alpha_hi: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SimulateResponse {
    pub opinions: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub merges: Vec<(u64, usize, usize)>,
    pub tau_delta: Option<u64>,
    pub freeze_time: Option<u64>,
    pub termination_time: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EnsembleRequest {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_hi: f64,
    pub runs: u64,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct EnsembleResponse {
    pub tau: Vec<Option<u64>>,
    pub mean_tau: Option<f64>,
    pub std_error: Option<f64>,
    pub reached_fraction: f64,
    pub bound: f64,
    pub ratio: Option<f64>,
}

fn schedule_for(choice: ScheduleChoice, n: usize, alpha_hi: f64, seed: u64) -> Result<ScheduleSpec, String> {
    if !(0.0..1.0).contains(&alpha_hi) {
        return Err(format!("alpha_hi must lie in [0, 1), got {alpha_hi}"));
    }
    let open_alpha = if alpha_hi == 0.0 {
        OpenAlphaPolicy::Constant(0.0)
    } else {
        OpenAlphaPolicy::Interval { lo: 0.0, hi: alpha_hi }
    };
    Ok(match choice {
        ScheduleChoice::Synchronous => ScheduleSpec::synchronous(),
        ScheduleChoice::Asynchronous => ScheduleSpec::asynchronous(seed),
        ScheduleChoice::Halves => {
            if n < 2 {
                return Err("the two-block schedule needs at least two agents".into());
            }
            let half = n / 2;
            ScheduleSpec::stochastic(
                SupportModel {
                    support: vec![
                        SupportElement {
                            agents: (0..half).collect(),
                            probability: 0.5,
                        },
                        SupportElement {
                            agents: (half..n).collect(),
                            probability: 0.5,
                        },
                    ],
                    partition_indices: vec![0, 1],
                    open_alpha,
                },
                seed,
            )
        }
    })
}

fn uniform_opinions(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}

fn line(xs: &[f64], eps: f64) -> mhk::Result<OpinionState> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    OpinionState::new(&rows, eps)
}

pub fn simulate_json(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.horizon == 0 || req.horizon > 100_000 {
        return Err("horizon must lie in 1..=100000".into());
    }
    if !(req.delta > 0.0 && req.delta <= req.epsilon) {
        return Err(format!("delta must lie in (0, epsilon], got {}", req.delta));
    }
    let schedule = schedule_for(req.schedule, req.opinions.len(), req.alpha_hi, req.seed)?;
    let initial = line(&req.opinions, req.epsilon).map_err(|e| e.to_string())?;
    let traj = simulate(
        initial,
        &schedule,
        RunOptions {
            horizon: req.horizon,
            seed: req.seed,
            stop_on_termination: false,
        },
    )
    .map_err(|e| e.to_string())?;
    let report = analyze_stopping(&traj, req.delta, DEFAULT_M_MAX);
    let resp = SimulateResponse {
        opinions: traj.states().map(|s| s.coords().to_vec()).collect(),
        energy: traj.steps.iter().map(|r| r.energy).collect(),
        merges: report.merge_times.iter().map(|m| (m.t, m.pair.0, m.pair.1)).collect(),
        tau_delta: report.tau_delta,
        freeze_time: report.freeze.map(|f| f.tau_hat),
        termination_time: report.termination_time,
    };
    serde_json::to_string(&resp).map_err(|e| e.to_string())
}

pub fn ensemble_json(request: &str) -> Result<String, String> {
    let req: EnsembleRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.runs == 0 || req.runs > 2_000 || req.horizon == 0 || req.horizon > 100_000 {
        return Err("runs must lie in 1..=2000 and horizon in 1..=100000".into());
    }
    if req.lo.is_nan() || req.hi.is_nan() || req.lo > req.hi {
        return Err("need lo <= hi".into());
    }
    let schedule = schedule_for(ScheduleChoice::Halves, req.n, req.alpha_hi, req.seed)?;
    let (n, lo, hi, eps, seed) = (req.n, req.lo, req.hi, req.epsilon, req.seed);
    let init = move |r: u64| line(&uniform_opinions(n, lo, hi, seed.wrapping_add(r)), eps);
    let spec = EnsembleSpec {
        schedule: &schedule,
        epsilon: req.epsilon,
        delta: req.delta,
        m_max: DEFAULT_M_MAX,
        master_seed: req.seed,
        initial: &init,
    };
    let res = run_ensemble(&spec, req.runs, req.horizon).map_err(|e| e.to_string())?;
    let resp = EnsembleResponse {
        tau: res.tau_samples(),
        mean_tau: res.mean_tau,
        std_error: res.std_error,
        reached_fraction: res.reached_fraction,
        bound: res.co1_bound,
        ratio: res.bound_ratio(),
    };
    serde_json::to_string(&resp).map_err(|e| e.to_string())
}

/// Simulates one 1-d trajectory; see [`SimulateRequest`] for the input fields.
#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(request: &str) -> Result<String, JsError> {
    simulate_json(request).map_err(|e| JsError::new(&e))
}

/// Runs a two-block stochastic ensemble and returns the stopping-time samples.
#[wasm_bindgen(js_name = ensemble)]
pub fn ensemble_js(request: &str) -> Result<String, JsError> {
    ensemble_json(request).map_err(|e| JsError::new(&e))
}

/// Upper bound on the expected stopping time.
#[wasm_bindgen(js_name = stoppingTimeBound)]
pub fn stopping_time_bound(n: usize, epsilon: f64, delta: f64, gamma: f64, p_min: f64) -> Result<f64, JsError> {
    mhk::co1_bound(n, epsilon, delta, gamma, p_min).map_err(|e| JsError::new(&e.to_string()))
}
