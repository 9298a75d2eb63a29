//! Seed and horizon sweeps.
//!
//! Each run owns its state, so seeds and checkpoint horizons fan out
//! freely. The data-parallel path rides rayon and is on by default behind
//! the `parallel` feature; the sequential path is the fallback and the
//! reference the benches compare against. Results come back in task order
//! either way, so downstream output is identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::RunError;
use crate::ratefit::positive_part;
use crate::run::run_single;
use crate::trace::{mean_trace, RunTrace};

/// One regret/violation sample per checkpoint horizon, averaged over the
/// config's seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub horizon: u64,
    /// `None` when any seed's comparator set came up empty.
    pub mean_cum_regret: Option<f64>,
    pub mean_cum_violation: f64,
}

/// Runs every seed of the config sequentially.
pub fn run_seeds_sequential(config: &RunConfig) -> Result<Vec<RunTrace>, RunError> {
    config.seeds.iter().map(|&s| run_single(config, s)).collect()
}

/// Runs every seed of the config on the rayon pool.
#[cfg(feature = "parallel")]
pub fn run_seeds_parallel(config: &RunConfig) -> Result<Vec<RunTrace>, RunError> {
    config.seeds.par_iter().map(|&s| run_single(config, s)).collect()
}

/// Feature-dispatched seed sweep.
pub fn run_seeds(config: &RunConfig) -> Result<Vec<RunTrace>, RunError> {
    #[cfg(feature = "parallel")]
    {
        run_seeds_parallel(config)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_seeds_sequential(config)
    }
}

fn rate_point_from(traces: &[RunTrace], horizon: u64) -> Result<RatePoint, RunError> {
    let mean = mean_trace(traces)?;
    Ok(RatePoint {
        horizon,
        mean_cum_regret: mean.footer.cum_regret,
        mean_cum_violation: mean.footer.cum_violation,
    })
}

/// Runs the config at each checkpoint horizon (fresh horizon-tuned
/// schedule per checkpoint), averaging final cumulative regret and
/// violation over the seeds. The flat (horizon, seed) task list is what
/// actually fans out in parallel.
pub fn rate_experiment(
    config: &RunConfig,
    checkpoints: &[u64],
) -> Result<Vec<RatePoint>, RunError> {
    config.validate()?;
    let mut tasks = Vec::new();
    for (i, &h) in checkpoints.iter().enumerate() {
        let mut c = config.clone();
        c.horizon = Some(h);
        c.out = None;
        c.validate()?;
        for &s in &config.seeds {
            tasks.push((i, c.clone(), s));
        }
    }

    #[cfg(feature = "parallel")]
    let results: Result<Vec<(usize, RunTrace)>, RunError> = tasks
        .par_iter()
        .map(|(i, c, s)| run_single(c, *s).map(|t| (*i, t)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<(usize, RunTrace)>, RunError> = tasks
        .iter()
        .map(|(i, c, s)| run_single(c, *s).map(|t| (*i, t)))
        .collect();
    let results = results?;

    let mut points = Vec::with_capacity(checkpoints.len());
    for (i, &h) in checkpoints.iter().enumerate() {
        let group: Vec<RunTrace> = results
            .iter()
            .filter(|(gi, _)| *gi == i)
            .map(|(_, t)| t.clone())
            .collect();
        points.push(rate_point_from(&group, h)?);
    }
    Ok(points)
}

/// Log-log samples for the regret fit: positive part, clamped at one.
pub fn regret_series(points: &[RatePoint]) -> Option<Vec<(f64, f64)>> {
    points
        .iter()
        .map(|p| p.mean_cum_regret.map(|r| (p.horizon as f64, positive_part(r))))
        .collect()
}

/// Log-log samples for the violation fit: positive part, clamped at one.
pub fn violation_series(points: &[RatePoint]) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|p| (p.horizon as f64, positive_part(p.mean_cum_violation)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algorithm;
    use rcb_core::environments::{DriftSpec, EnvKind, EnvSpec, PolicySpec, PolicyTableSpec};

    fn config(seeds: Vec<u64>) -> RunConfig {
        RunConfig {
            algorithm: Algorithm::Exp4r,
            environment: EnvSpec {
                kind: EnvKind::Drift(DriftSpec {
                    period: 7,
                    cheap_cost: 0.1,
                    dear_cost: 0.9,
                    hot_risk: 0.9,
                    cold_risk: 0.3,
                }),
                horizon: 400,
                arms: 2,
                beta: 0.6,
                policies: PolicyTableSpec {
                    explicit: vec![
                        PolicySpec::Uniform,
                        PolicySpec::Arm { index: 0 },
                        PolicySpec::Arm { index: 1 },
                    ],
                    seeded: None,
                },
            },
            horizon: None,
            seeds,
            overrides: Default::default(),
            out: None,
        }
    }

    #[test]
    fn sequential_and_parallel_sweeps_agree() {
        let c = config(vec![1, 2, 3, 4]);
        let seq = run_seeds_sequential(&c).unwrap();
        let dis = run_seeds(&c).unwrap();
        assert_eq!(seq, dis);
        #[cfg(feature = "parallel")]
        {
            let par = run_seeds_parallel(&c).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn rate_experiment_orders_checkpoints_and_averages_seeds() {
        let c = config(vec![1, 2]);
        let points = rate_experiment(&c, &[50, 100, 200]).unwrap();
        assert_eq!(points.len(), 3);
        assert_eq!(points[0].horizon, 50);
        assert_eq!(points[2].horizon, 200);
        // Mean across seeds must match a hand aggregation at one point.
        let mut c50 = c.clone();
        c50.horizon = Some(50);
        let traces = run_seeds_sequential(&c50).unwrap();
        let hand = (traces[0].footer.cum_violation + traces[1].footer.cum_violation) / 2.0;
        assert!((points[0].mean_cum_violation - hand).abs() < 1e-12);
    }
}
