//! Batch harness for the constrained online learning algorithms: strict
//! JSON run configs, deterministic seeded runs, byte-exact CSV traces,
//! hindsight comparators, growth-rate fits, and seed/horizon sweeps that
//! fan out across cores (feature `parallel`, on by default) or run
//! sequentially without it.

pub mod config;
pub mod error;
pub mod ratefit;
pub mod report;
pub mod run;
pub mod sweep;
pub mod trace;

pub use config::{Algorithm, RunConfig, ScheduleOverrides};
pub use error::RunError;
pub use ratefit::{fit_rate, RateFit};
pub use run::{run_config, run_single, RunOutput};
pub use sweep::{rate_experiment, run_seeds, RatePoint};
pub use trace::{RunTrace, TraceFooter, TraceMeta, TraceRow};
