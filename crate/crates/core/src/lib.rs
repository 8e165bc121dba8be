//! Hegselmann-Krause bounded-confidence dynamics with stubborn agents:
//! simulation, profile analysis, energy diagnostics, stopping times and
//! Monte Carlo estimates of the expected stopping time.

pub mod analysis;
pub mod demos;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod export;
pub mod hull;
pub mod profile;
pub mod scenario;
pub mod schedule;
pub mod stopping;
pub mod trajectory;

#[cfg(feature = "cli")]
pub mod cli;

pub use dynamics::{step, OpinionState, StubbornnessAssignment};
pub use ensemble::{a_set_bound, co1_bound, run_ensemble, EnsembleResult, EnsembleSpec};
pub use error::{Error, Result};
pub use scenario::{load_scenario, ScenarioConfig};
pub use schedule::ScheduleSpec;
pub use stopping::{analyze_stopping, StoppingMonitor, StoppingReport};
pub use trajectory::{simulate, RunOptions, Trajectory};
