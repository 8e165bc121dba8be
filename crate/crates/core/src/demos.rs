//! Built-in demonstrations of the model's qualitative behavior.

use std::fmt::Write as _;

use crate::diagnostics::{ConvergenceTracker, EnergyRecord};
use crate::dynamics::{detect_merge, step, OpinionState, StubbornnessAssignment};
use crate::error::{Error, Result};
use crate::schedule::ScheduleSpec;
use crate::stopping::detect_termination;
use crate::trajectory::{simulate, RunOptions};

pub const DEMO_NAMES: [&str; 4] = ["merge", "depart", "async-reduction", "no-termination"];

/// Initial chain for the vanishing-openness demo: the first step (alpha = 0)
/// does not yet produce consensus, so every later step keeps moving.
pub const NO_TERMINATION_START: [f64; 3] = [0.0, 0.7, 1.5];
/// Last step for which the vanishing-openness displacement is still resolved in
/// double precision for [`NO_TERMINATION_START`].
pub const NO_TERMINATION_HORIZON: u64 = 53;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutput {
    pub name: &'static str,
    pub text: String,
    /// The demonstrated property held.
    pub ok: bool,
}

fn fmt_state(s: &OpinionState) -> String {
    let rows: Vec<String> = s
        .opinions()
        .map(|p| {
            if p.len() == 1 {
                format!("{}", p[0])
            } else {
                format!("{p:?}")
            }
        })
        .collect();
    format!("({})", rows.join(", "))
}

fn line(xs: &[f64], eps: f64) -> Result<OpinionState> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    OpinionState::new(&rows, eps)
}

pub fn run_demo(name: &str) -> Result<DemoOutput> {
    match name {
        "merge" => merge(),
        "depart" => depart(),
        "async-reduction" => async_reduction(),
        "no-termination" => no_termination(),
        other => Err(Error::Usage(format!(
            "unknown demo `{other}` (available: {})",
            DEMO_NAMES.join(", ")
        ))),
    }
}

fn merge() -> Result<DemoOutput> {
    let eps = 0.5;
    let x0 = line(&[0.0, eps], eps)?;
    let alpha = StubbornnessAssignment::synchronous(2);
    let x1 = step(&x0, &alpha)?;
    let merges = detect_merge(&x0, &x1);
    let energy = EnergyRecord::new(&x0, &x1, &alpha);
    let mut text = String::new();
    writeln!(text, "epsilon = {eps}, alpha(0) = (0, 0)").unwrap();
    writeln!(text, "x(0) = {}", fmt_state(&x0)).unwrap();
    writeln!(text, "x(1) = {}", fmt_state(&x1)).unwrap();
    for (i, j) in &merges {
        writeln!(text, "merge at t=1: agents {} and {}", i + 1, j + 1).unwrap();
    }
    writeln!(
        text,
        "Z(0) = {}, Z(1) = {}, decrement bound = {}",
        energy.z,
        energy.z - energy.decrement,
        energy.nl8_bound
    )
    .unwrap();
    Ok(DemoOutput {
        name: "merge",
        ok: x1.coords() == [eps / 2.0, eps / 2.0] && merges == [(0, 1)],
        text,
    })
}

fn depart() -> Result<DemoOutput> {
    let x0 = line(&[0.0, 0.0, 1.0], 1.0)?;
    let x1 = step(&x0, &StubbornnessAssignment::new(vec![1.0, 0.0, 1.0])?)?;
    let mut text = String::new();
    writeln!(text, "epsilon = 1, alpha(0) = (1, 0, 1)").unwrap();
    writeln!(text, "x(0) = {}  agents 1 and 2 share an opinion", fmt_state(&x0)).unwrap();
    writeln!(text, "x(1) = {}  agents 1 and 2 have departed", fmt_state(&x1)).unwrap();
    Ok(DemoOutput {
        name: "depart",
        ok: x0.same_opinion(0, 1) && !x1.same_opinion(0, 1) && x1.coords() == [0.0, 1.0 / 3.0, 1.0],
        text,
    })
}

fn async_reduction() -> Result<DemoOutput> {
    let x0 = line(&[0.0, 0.08, 0.15, 0.21, 0.6], 0.1)?;
    let n = x0.n();
    let seed = 2024;
    let opts = RunOptions {
        horizon: 200,
        seed,
        stop_on_termination: false,
    };
    let asynchronous = simulate(x0.clone(), &ScheduleSpec::asynchronous(seed), opts)?;
    let support = simulate(x0, &ScheduleSpec::asynchronous_as_support(n, seed), opts)?;
    let identical = asynchronous
        .states()
        .zip(support.states())
        .all(|(a, b)| a.same_opinions(b));
    let mut text = String::new();
    writeln!(text, "asynchronous schedule vs uniform singleton support, seed {seed}, 200 steps").unwrap();
    writeln!(text, "final (asynchronous) = {}", fmt_state(asynchronous.last_state())).unwrap();
    writeln!(text, "final (support)      = {}", fmt_state(support.last_state())).unwrap();
    writeln!(text, "trajectories bitwise identical: {identical}").unwrap();
    Ok(DemoOutput {
        name: "async-reduction",
        ok: identical,
        text,
    })
}

fn no_termination() -> Result<DemoOutput> {
    let x0 = line(&NO_TERMINATION_START, 1.0)?;
    let traj = simulate(
        x0,
        &ScheduleSpec::vanishing(),
        RunOptions {
            horizon: NO_TERMINATION_HORIZON,
            seed: 0,
            stop_on_termination: false,
        },
    )?;
    let mut trackers: Vec<ConvergenceTracker> = (0..NO_TERMINATION_START.len())
        .map(|i| ConvergenceTracker::new(i, 2))
        .collect();
    for rec in &traj.steps {
        if let Some(alpha) = &rec.alpha {
            let hoods = crate::dynamics::compute_neighborhoods(&rec.state);
            for tr in &mut trackers {
                tr.track(&rec.state, alpha, &hoods);
            }
        }
    }
    let termination = detect_termination(&traj);
    let mut text = String::new();
    writeln!(text, "alpha_i(t) = 1 - 2^-t, epsilon = 1, {} steps", NO_TERMINATION_HORIZON).unwrap();
    writeln!(text, "x(0) = {}", fmt_state(&traj.steps[0].state)).unwrap();
    writeln!(text, "x({}) = {}", traj.horizon(), fmt_state(traj.last_state())).unwrap();
    for tr in &trackers {
        writeln!(
            text,
            "agent {}: partial sum {:.12}, last increment {:.3e}",
            tr.agent + 1,
            tr.partial_sum,
            tr.last_increment
        )
        .unwrap();
    }
    writeln!(
        text,
        "termination within horizon: {}",
        termination.map_or("none".to_string(), |t| format!("t = {t}"))
    )
    .unwrap();
    Ok(DemoOutput {
        name: "no-termination",
        ok: termination.is_none(),
        text,
    })
}
