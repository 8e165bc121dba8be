//! Re-derives every diagnostic of a stored trajectory and checks the
//! invariants the dynamics must satisfy.

use serde::Serialize;

use crate::diagnostics::{energy, nl8_decrement_bound, INEQUALITY_SLACK};
use crate::dynamics::{detect_merge, step};
use crate::error::Result;
use crate::stopping::{analyze_stopping, StoppingReport};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub t: u64,
    pub kind: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub steps: usize,
    /// Stored values that differ (bitwise) from recomputed ones.
    pub mismatches: Vec<Violation>,
    /// Broken invariants: energy increase, decrement below the lower bound,
    /// energy cap, hull containment, or a stored step that the update rule
    /// does not reproduce.
    pub violations: Vec<Violation>,
    pub max_energy: f64,
    pub min_slack: Option<f64>,
    pub stopping: StoppingReport,
}

impl AnalysisReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty()
    }
}

fn bits_differ(a: f64, b: f64) -> bool {
    a.to_bits() != b.to_bits()
}

pub fn analyze(traj: &Trajectory, delta: f64, m_max: u32) -> Result<AnalysisReport> {
    let mut mismatches = Vec::new();
    let mut violations = Vec::new();
    let mut max_energy: f64 = 0.0;
    let mut min_slack: Option<f64> = None;

    for (k, rec) in traj.steps.iter().enumerate() {
        let state = &rec.state;
        let t = state.t();
        let n = state.n() as f64;
        let z = energy(state);
        max_energy = max_energy.max(z);
        if bits_differ(z, rec.energy) {
            mismatches.push(Violation {
                t,
                kind: "energy",
                detail: format!("stored {} recomputed {z}", rec.energy),
            });
        }
        let cap = n * n * state.epsilon() * state.epsilon();
        if z < 0.0 || z > cap + INEQUALITY_SLACK {
            violations.push(Violation {
                t,
                kind: "energy_cap",
                detail: format!("Z = {z} outside [0, {cap}]"),
            });
        }

        let Some(next_rec) = traj.steps.get(k + 1) else {
            continue;
        };
        let next = &next_rec.state;

        let merges = detect_merge(state, next);
        if merges != next_rec.merges {
            mismatches.push(Violation {
                t: next.t(),
                kind: "merges",
                detail: format!("stored {:?} recomputed {merges:?}", next_rec.merges),
            });
        }

        for c in 0..state.dim() {
            let (lo, hi) = state
                .opinions()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[c]), hi.max(p[c])));
            if next.opinions().any(|p| p[c] < lo - INEQUALITY_SLACK || p[c] > hi + INEQUALITY_SLACK) {
                violations.push(Violation {
                    t,
                    kind: "hull_containment",
                    detail: format!("coordinate {c} left [{lo}, {hi}]"),
                });
            }
        }

        let Some(alpha) = &rec.alpha else {
            violations.push(Violation {
                t,
                kind: "missing_alpha",
                detail: "no assignment recorded before the last step".into(),
            });
            continue;
        };
        match step(state, alpha) {
            Ok(expected) if expected.same_opinions(next) => {}
            Ok(_) => violations.push(Violation {
                t,
                kind: "step",
                detail: "stored successor differs from the update rule".into(),
            }),
            Err(e) => violations.push(Violation {
                t,
                kind: "step",
                detail: e.to_string(),
            }),
        }

        let decrement = z - energy(next);
        let bound = nl8_decrement_bound(state, next, alpha);
        if rec.decrement.is_none_or(|d| bits_differ(d, decrement)) {
            mismatches.push(Violation {
                t,
                kind: "decrement",
                detail: format!("stored {:?} recomputed {decrement}", rec.decrement),
            });
        }
        if rec.nl8_bound.is_none_or(|b| bits_differ(b, bound)) {
            mismatches.push(Violation {
                t,
                kind: "nl8_bound",
                detail: format!("stored {:?} recomputed {bound}", rec.nl8_bound),
            });
        }
        if decrement < -INEQUALITY_SLACK {
            violations.push(Violation {
                t,
                kind: "energy_increase",
                detail: format!("Z rose by {}", -decrement),
            });
        }
        let slack = decrement - bound;
        min_slack = Some(min_slack.map_or(slack, |s: f64| s.min(slack)));
        if slack < -INEQUALITY_SLACK {
            violations.push(Violation {
                t,
                kind: "decrement_bound",
                detail: format!("decrement {decrement} below bound {bound}"),
            });
        }
    }

    Ok(AnalysisReport {
        steps: traj.steps.len(),
        mismatches,
        violations,
        max_energy,
        min_slack,
        stopping: analyze_stopping(traj, delta, m_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::OpinionState;
    use crate::schedule::ScheduleSpec;
    use crate::trajectory::{simulate, RunOptions};

    #[test]
    fn simulated_trajectory_is_clean() {
        let s = OpinionState::new(&[vec![0.0], vec![0.05], vec![0.12], vec![0.5]], 0.1).unwrap();
        let traj = simulate(
            s,
            &ScheduleSpec::asynchronous(4),
            RunOptions {
                horizon: 60,
                seed: 4,
                stop_on_termination: false,
            },
        )
        .unwrap();
        let report = analyze(&traj, 0.01, 16).unwrap();
        assert!(report.is_clean(), "{:?} {:?}", report.mismatches, report.violations);
    }

    #[test]
    fn tampered_trajectory_is_flagged() {
        let s = OpinionState::new(&[vec![0.0], vec![0.05]], 0.1).unwrap();
        let mut traj = simulate(
            s,
            &ScheduleSpec::synchronous(),
            RunOptions {
                horizon: 3,
                seed: 0,
                stop_on_termination: false,
            },
        )
        .unwrap();
        traj.steps[0].energy += 1e-3;
        traj.steps[1].state = OpinionState::new(&[vec![0.0], vec![0.07]], 0.1).unwrap().at_time(1);
        let report = analyze(&traj, 0.01, 16).unwrap();
        assert!(report.mismatches.iter().any(|v| v.kind == "energy"));
        assert!(report.violations.iter().any(|v| v.kind == "step"));
        assert!(report.violations.iter().any(|v| v.kind == "hull_containment"));
    }
}
