//! Learner-environment loops for all four algorithms.
//!
//! Protocol ordering is part of the contract. Full information: propose
//! `x_t`, receive the round, record `l_t(x_t)` and `f_t(x_t)`, then update.
//! Bandits: receive the context, mix advice, sample, observe the pulled arm
//! only, then update. Comparator problems accumulate the environment's
//! ground-truth vectors, never the learner's estimates, and are solved once
//! at the end of the run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcb_core::comparator::{ConstraintMode, Hindsight, HindsightProblem};
use rcb_core::error::CoreError;
use rcb_core::exp4pr::{exp4pr_round, to_signed, Exp4prConfig};
use rcb_core::exp4r::{exp4r_round, schedule_for_horizon as exp4r_schedule, Exp4rState};
use rcb_core::mirror::{map_for, FeasibleSet, MirrorMapKind, OcpBounds};
use rcb_core::ocp::{
    omd_step, schedule_for_horizon as ocp_schedule, ConstrainedRound, ConvexOracle,
    PrimalDualState,
};

use crate::config::{Algorithm, RunConfig};
use crate::error::RunError;
use crate::trace::{mean_trace, RunTrace, TraceFooter, TraceMeta, TraceRow};

/// Everything a config run produces: one trace per seed plus their
/// columnwise mean.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub traces: Vec<RunTrace>,
    pub aggregate: RunTrace,
}

fn config_err(e: CoreError) -> RunError {
    RunError::Config(e.to_string())
}

/// Mid-run core errors mean the run state is corrupt, whatever their core
/// classification; surface them as invariant violations.
fn run_err(e: CoreError) -> RunError {
    RunError::Invariant(e.to_string())
}

/// Runs every seed (in parallel when built with the `parallel` feature),
/// aggregates, and writes trace files when an output directory is set.
pub fn run_config(config: &RunConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let traces = crate::sweep::run_seeds(config)?;
    let aggregate = mean_trace(&traces)?;
    if let Some(dir) = &config.out {
        for t in traces.iter().chain(std::iter::once(&aggregate)) {
            t.write_to_dir(dir)?;
        }
    }
    Ok(RunOutput { traces, aggregate })
}

/// One seeded run. The config must already have been validated.
pub fn run_single(config: &RunConfig, seed: u64) -> Result<RunTrace, RunError> {
    if config.horizon() == 0 {
        // A zero-length run: empty trace, zero metrics.
        return Ok(RunTrace {
            meta: TraceMeta {
                algorithm: config.algorithm,
                digest: config.digest(),
                horizon: 0,
                seed: Some(seed),
                warnings: Vec::new(),
            },
            rows: Vec::new(),
            footer: TraceFooter {
                comparator_value: Some(0.0),
                comparator_value_on_average: Some(0.0),
                cum_regret: Some(0.0),
                avg_regret: Some(0.0),
                cum_violation: 0.0,
                avg_violation: 0.0,
            },
        });
    }
    match config.algorithm {
        Algorithm::OcpEuclidean => run_ocp(config, seed, MirrorMapKind::Euclidean),
        Algorithm::OcpEntropy => run_ocp(config, seed, MirrorMapKind::NegativeEntropy),
        Algorithm::Exp4r => run_exp4r(config, seed),
        Algorithm::Exp4pr => run_exp4pr(config, seed),
    }
}

struct TraceBuilder {
    rows: Vec<TraceRow>,
    cum_cost: f64,
    cum_violation: f64,
}

impl TraceBuilder {
    fn new(horizon: u64) -> Self {
        TraceBuilder {
            rows: Vec::with_capacity(horizon as usize),
            cum_cost: 0.0,
            cum_violation: 0.0,
        }
    }

    fn push(&mut self, t: u64, action: f64, inst_cost: f64, inst_violation: f64, inst_risk: f64, lambda: f64) {
        self.cum_cost += inst_cost;
        self.cum_violation += inst_violation;
        self.rows.push(TraceRow {
            t,
            action,
            inst_cost,
            inst_risk,
            cum_cost: self.cum_cost,
            cum_violation: self.cum_violation,
            lambda,
        });
    }

    fn finish(
        self,
        meta: TraceMeta,
        strict: &HindsightProblem,
        relaxed: &HindsightProblem,
        horizon: u64,
    ) -> Result<RunTrace, RunError> {
        let comparator_value = match strict.best_feasible().map_err(run_err)? {
            Hindsight::Optimal { value, .. } => Some(value),
            Hindsight::Infeasible => None,
        };
        let comparator_value_on_average = match relaxed.best_feasible().map_err(run_err)? {
            Hindsight::Optimal { value, .. } => Some(value),
            Hindsight::Infeasible => None,
        };
        let t = horizon.max(1) as f64;
        let footer = TraceFooter {
            comparator_value,
            comparator_value_on_average,
            cum_regret: comparator_value.map(|v| self.cum_cost - v),
            avg_regret: comparator_value.map(|v| (self.cum_cost - v) / t),
            cum_violation: self.cum_violation,
            avg_violation: self.cum_violation / t,
        };
        Ok(RunTrace { meta, rows: self.rows, footer })
    }
}

fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

fn run_ocp(config: &RunConfig, seed: u64, kind: MirrorMapKind) -> Result<RunTrace, RunError> {
    let horizon = config.horizon();
    let env_spec = config.effective_environment();
    let mut env = env_spec.ocp_environment().map_err(config_err)?;
    let dim = env.dim();

    let (mu, delta, mut warnings) = match (config.overrides.mu, config.overrides.delta) {
        (Some(mu), Some(delta)) => (mu, delta, Vec::new()),
        (mu_over, delta_over) => {
            let bounds = OcpBounds::linear_on_simplex(kind, dim, 1.0).map_err(config_err)?;
            let sched = ocp_schedule(horizon, &bounds).map_err(config_err)?;
            (
                mu_over.unwrap_or(sched.mu),
                delta_over.unwrap_or(sched.delta),
                sched.warnings,
            )
        }
    };

    let set = FeasibleSet::simplex(dim);
    let map = map_for(kind);
    let mut state = PrimalDualState::init(&set, mu, delta).map_err(config_err)?;
    let mut strict = HindsightProblem::new(set.clone(), ConstraintMode::EveryRound);
    let mut relaxed = HindsightProblem::new(set.clone(), ConstraintMode::OnAverage);
    let mut builder = TraceBuilder::new(horizon);
    let mut prev: Option<Vec<f64>> = None;

    for t in 1..=horizon {
        let (loss, constraint) = env.next_round(prev.as_deref()).map_err(run_err)?;
        // All shipped environments are linear with unit-bounded data; the
        // schedule's magnitude bounds assume as much, so verify it here.
        for oracle in [&loss, &constraint] {
            if oracle.coeffs.iter().any(|c| c.abs() > 1.0 + 1e-12)
                || oracle.offset.abs() > 1.0 + 1e-12
            {
                return Err(RunError::Invariant(format!(
                    "round {t} exceeds the unit coefficient bound the schedule assumes"
                )));
            }
        }
        // Metrics at the decision proposed before the round was revealed.
        let inst_cost = loss.value(&state.x);
        let inst_con = constraint.value(&state.x);
        builder.push(t, argmax(&state.x) as f64, inst_cost, inst_con, inst_con, state.lambda);
        strict
            .add_round(&loss.coeffs, loss.offset, &constraint.coeffs, constraint.offset)
            .map_err(run_err)?;
        relaxed
            .add_round(&loss.coeffs, loss.offset, &constraint.coeffs, constraint.offset)
            .map_err(run_err)?;
        let round = ConstrainedRound { loss: &loss, constraint: &constraint };
        let x_now = state.x.clone();
        state = omd_step(map, &set, &state, &round).map_err(run_err)?;
        prev = Some(x_now);
    }

    let meta = TraceMeta {
        algorithm: config.algorithm,
        digest: config.digest(),
        horizon,
        seed: Some(seed),
        warnings: std::mem::take(&mut warnings),
    };
    builder.finish(meta, &strict, &relaxed, horizon)
}

fn run_exp4r(config: &RunConfig, seed: u64) -> Result<RunTrace, RunError> {
    let horizon = config.horizon();
    let env_spec = config.effective_environment();
    let beta = env_spec.beta;
    let mut stream = env_spec.bandit_stream().map_err(config_err)?;
    let policies = env_spec.policy_set().map_err(config_err)?;
    let n_experts = policies.n_experts();
    let arms = env_spec.arms;

    let (mu, delta, mut warnings) = match (config.overrides.mu, config.overrides.delta) {
        (Some(mu), Some(delta)) => (mu, delta, Vec::new()),
        (mu_over, delta_over) => {
            let sched = exp4r_schedule(horizon, arms, n_experts).map_err(config_err)?;
            (
                mu_over.unwrap_or(sched.mu),
                delta_over.unwrap_or(sched.delta),
                sched.warnings,
            )
        }
    };

    let mut state = Exp4rState::init(n_experts, mu, delta).map_err(config_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy_simplex = FeasibleSet::simplex(n_experts);
    let mut strict = HindsightProblem::new(policy_simplex.clone(), ConstraintMode::EveryRound);
    let mut relaxed = HindsightProblem::new(policy_simplex, ConstraintMode::OnAverage);
    let mut builder = TraceBuilder::new(horizon);

    for t in 1..=horizon {
        let round = stream.next_round().map_err(run_err)?;
        let advice = policies.advice(round.context());
        // Ground-truth per-expert cost and risk for the comparator.
        let y = advice.apply(round.truth_costs()).map_err(run_err)?;
        let z = advice.apply(round.truth_risks()).map_err(run_err)?;
        strict.add_round(&y, 0.0, &z, -beta).map_err(run_err)?;
        relaxed.add_round(&y, 0.0, &z, -beta).map_err(run_err)?;

        let (next, rec) = exp4r_round(&state, &advice, &round, &mut rng).map_err(run_err)?;
        builder.push(t, rec.action as f64, rec.cost, rec.risk - beta, rec.risk, rec.lambda);
        state = next;
    }

    let meta = TraceMeta {
        algorithm: config.algorithm,
        digest: config.digest(),
        horizon,
        seed: Some(seed),
        warnings: std::mem::take(&mut warnings),
    };
    builder.finish(meta, &strict, &relaxed, horizon)
}

fn run_exp4pr(config: &RunConfig, seed: u64) -> Result<RunTrace, RunError> {
    let horizon = config.horizon();
    let env_spec = config.effective_environment();
    let beta = env_spec.beta;
    let mut stream = env_spec.bandit_stream().map_err(config_err)?;
    let mut policies = env_spec.policy_set().map_err(config_err)?;
    let mut warnings = Vec::new();
    if policies.ensure_uniform() {
        warnings.push(
            "uniform policy added to the class; the high-probability bound assumes it".into(),
        );
    }
    let n_experts = policies.n_experts();
    let arms = env_spec.arms;

    let epsilon = config.overrides.epsilon.unwrap_or(1.0 / 3.0);
    let nu = config.overrides.nu.unwrap_or(0.05);
    let beta_signed = beta - 1.0;
    let pr_config = match (config.overrides.mu, config.overrides.kappa, config.overrides.delta) {
        // A fully explicit schedule skips the horizon-tuned constructor so
        // degenerate classes stay runnable for diagnostics.
        (Some(mu), Some(kappa), Some(delta)) => {
            Exp4prConfig::custom(mu, kappa, delta, epsilon, nu, beta_signed, arms)
                .map_err(config_err)?
        }
        (mu_over, kappa_over, delta_over) => {
            let tuned =
                Exp4prConfig::for_horizon(horizon, arms, n_experts, epsilon, nu, beta_signed)
                    .map_err(config_err)?;
            if mu_over.is_some() || kappa_over.is_some() || delta_over.is_some() {
                Exp4prConfig::custom(
                    mu_over.unwrap_or(tuned.mu),
                    kappa_over.unwrap_or(tuned.kappa),
                    delta_over.unwrap_or(tuned.delta),
                    epsilon,
                    nu,
                    beta_signed,
                    arms,
                )
                .map_err(config_err)?
            } else {
                tuned
            }
        }
    };
    warnings.extend(pr_config.warnings.iter().cloned());

    let mut state = Exp4rState::init(n_experts, pr_config.mu, pr_config.delta).map_err(config_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy_simplex = FeasibleSet::simplex(n_experts);
    let mut strict = HindsightProblem::new(policy_simplex.clone(), ConstraintMode::EveryRound);
    let mut relaxed = HindsightProblem::new(policy_simplex, ConstraintMode::OnAverage);
    let mut builder = TraceBuilder::new(horizon);

    for t in 1..=horizon {
        let round = stream.next_round().map_err(run_err)?;
        let advice = policies.advice(round.context());
        // Comparator stays in the original [0, 1] convention; the shift
        // cancels out of both regret and violation.
        let y = advice.apply(round.truth_costs()).map_err(run_err)?;
        let z = advice.apply(round.truth_risks()).map_err(run_err)?;
        strict.add_round(&y, 0.0, &z, -beta).map_err(run_err)?;
        relaxed.add_round(&y, 0.0, &z, -beta).map_err(run_err)?;

        let signed = to_signed(&round);
        let (next, rec) =
            exp4pr_round(&state, &advice, &signed, &pr_config, &mut rng).map_err(run_err)?;
        builder.push(t, rec.action as f64, rec.cost, rec.risk - beta, rec.risk, rec.lambda);
        state = next;
    }

    let meta = TraceMeta {
        algorithm: config.algorithm,
        digest: config.digest(),
        horizon,
        seed: Some(seed),
        warnings: std::mem::take(&mut warnings),
    };
    builder.finish(meta, &strict, &relaxed, horizon)
}
