//! Acceptance suite: every release gate in one target, one pass/fail line
//! per criterion (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The gates are property- and rate-based: estimator identities checked
//! exactly by enumeration, cross-implementation equivalences at 1e-12,
//! growth-rate slopes of cumulative regret and violation fitted across
//! horizon checkpoints, the dual-cap bound asserted on every round, the
//! impossibility demonstration against the on-average comparator, LP
//! against grid search, and byte-exact replay of seeded runs.

use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcb_core::comparator::{ConstraintMode, Hindsight, HindsightProblem};
use rcb_core::environments::{
    DriftSpec, EnvKind, EnvSpec, IidSpec, Marginal, PolicySpec, PolicyTableSpec, SeededPolicies,
};
use rcb_core::exp4r::{expert_estimates, importance_weighted, mix_experts, ExpertAdvice};
use rcb_core::mirror::{FeasibleSet, NegEntropyMap};
use rcb_core::ocp::{entropy_mw_step, omd_step, ConstrainedRound, LinearOracle, PrimalDualState};
use rcb_core::SimplexVector;

use rcb_harness::config::{Algorithm, RunConfig, ScheduleOverrides};
use rcb_harness::ratefit::fit_rate;
use rcb_harness::run::run_config;
use rcb_harness::sweep::{rate_experiment, regret_series, violation_series};

/// The heavy multi-run criteria serialize among themselves so their wall
/// clocks stay meaningful when the test binary runs tests in parallel.
static HEAVY: Mutex<()> = Mutex::new(());

const CHECKPOINTS: [u64; 3] = [1_000, 10_000, 100_000];

fn gate(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Feasible oblivious adversarial linear environment for the
/// full-information gates: i.i.d. Bernoulli costs, with the cheap
/// coordinate carrying risk above the budget so the dual has real work to
/// do. Risks ride bounded uniform marginals and the second coordinate
/// never exceeds the budget, which keeps the every-round comparator set
/// non-empty for any realized sequence.
fn ocp_linear_env() -> EnvSpec {
    EnvSpec {
        kind: EnvKind::Iid(IidSpec {
            seed: 7,
            cost_marginals: vec![
                Marginal::Bernoulli { p: 0.3 },
                Marginal::Bernoulli { p: 0.6 },
                Marginal::Bernoulli { p: 0.5 },
                Marginal::Bernoulli { p: 0.7 },
            ],
            risk_marginals: vec![
                Marginal::Uniform { lo: 0.4, hi: 0.8 },
                Marginal::Uniform { lo: 0.2, hi: 0.4 },
                Marginal::Uniform { lo: 0.3, hi: 0.7 },
                Marginal::Uniform { lo: 0.3, hi: 0.7 },
            ],
        }),
        horizon: 1_000,
        arms: 4,
        beta: 0.5,
        policies: PolicyTableSpec {
            explicit: vec![PolicySpec::Uniform],
            seeded: None,
        },
    }
}

/// Feasible drifting environment for the bandit gates: the cheap arm is
/// also the hot arm and rotates every 50 rounds; sixteen experts (uniform,
/// four constant-arm, eleven seeded context-lookups). Risk levels put the
/// uniform mixture exactly on the budget, so undisciplined cost-chasing
/// shows up as positive cumulative violation at every horizon.
fn drift_bandit_env() -> EnvSpec {
    EnvSpec {
        kind: EnvKind::Drift(DriftSpec {
            period: 50,
            cheap_cost: 0.0,
            dear_cost: 1.0,
            hot_risk: 1.0,
            cold_risk: 1.0 / 3.0,
        }),
        horizon: 1_000,
        arms: 4,
        beta: 0.5,
        policies: PolicyTableSpec {
            explicit: vec![
                PolicySpec::Uniform,
                PolicySpec::Arm { index: 0 },
                PolicySpec::Arm { index: 1 },
                PolicySpec::Arm { index: 2 },
                PolicySpec::Arm { index: 3 },
                // Context-aware chaser: always on the phase's cheap (hot) arm.
                PolicySpec::Lookup {
                    rows: vec![
                        vec![1.0, 0.0, 0.0, 0.0],
                        vec![0.0, 1.0, 0.0, 0.0],
                        vec![0.0, 0.0, 1.0, 0.0],
                        vec![0.0, 0.0, 0.0, 1.0],
                    ],
                },
                // Context-aware dodger: always one arm past the hot one.
                PolicySpec::Lookup {
                    rows: vec![
                        vec![0.0, 1.0, 0.0, 0.0],
                        vec![0.0, 0.0, 1.0, 0.0],
                        vec![0.0, 0.0, 0.0, 1.0],
                        vec![1.0, 0.0, 0.0, 0.0],
                    ],
                },
            ],
            seeded: Some(SeededPolicies { count: 9, contexts: 4, seed: 9 }),
        },
    }
}

fn bandit_seeds() -> Vec<u64> {
    (1..=20).collect()
}

fn config(algorithm: Algorithm, environment: EnvSpec, seeds: Vec<u64>) -> RunConfig {
    RunConfig {
        algorithm,
        environment,
        horizon: None,
        seeds,
        overrides: ScheduleOverrides::default(),
        out: None,
    }
}

// -------------------------------------------------------------------------
// 1. Estimator exactness
// -------------------------------------------------------------------------

#[test]
fn acceptance_01_estimator_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_bias: f64 = 0.0;
    let mut worst_moment: f64 = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(1..=8);
        let costs: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let risks: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let rows: Vec<SimplexVector> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
                SimplexVector::normalized(raw).unwrap()
            })
            .collect();
        let advice = ExpertAdvice::new(rows).unwrap();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let weights = SimplexVector::normalized(raw).unwrap();
        let p = mix_experts(&weights, &advice).unwrap();

        let y = advice.apply(&costs).unwrap();
        let z = advice.apply(&risks).unwrap();
        let mut e_chat = vec![0.0; k];
        let mut e_yhat = vec![0.0; n];
        let mut e_zhat = vec![0.0; n];
        let mut second_moment = 0.0;
        for arm in 0..k {
            let (chat, rhat) = importance_weighted(costs[arm], risks[arm], arm, &p).unwrap();
            let (yhat, zhat) = expert_estimates(&advice, &chat, &rhat).unwrap();
            for i in 0..k {
                e_chat[i] += p[arm] * chat[i];
            }
            let mut inner = 0.0;
            for j in 0..n {
                e_yhat[j] += p[arm] * yhat[j];
                e_zhat[j] += p[arm] * zhat[j];
                inner += weights[j] * yhat[j] * yhat[j];
            }
            second_moment += p[arm] * inner;
        }
        for i in 0..k {
            worst_bias = worst_bias.max((e_chat[i] - costs[i]).abs());
        }
        for j in 0..n {
            worst_bias = worst_bias.max((e_yhat[j] - y[j]).abs());
            worst_bias = worst_bias.max((e_zhat[j] - z[j]).abs());
        }
        worst_moment = worst_moment.max(second_moment - k as f64);
    }
    gate(
        "1 estimator-exactness",
        worst_bias <= 1e-12 && worst_moment <= 1e-12,
        &format!("worst bias {worst_bias:.2e}, worst second-moment slack {worst_moment:.2e}"),
    );
}

// -------------------------------------------------------------------------
// 2. Multiplicative-weights / mirror-descent equivalence
// -------------------------------------------------------------------------

#[test]
fn acceptance_02_mw_omd_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let map = NegEntropyMap;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..8);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.005..1.0)).collect();
        let x = SimplexVector::normalized(raw).unwrap();
        let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-25.0..25.0)).collect();
        let mu = rng.random_range(0.0005..1.0);

        let closed = entropy_mw_step(&x, &grad, mu);
        let state = PrimalDualState {
            x: x.as_slice().to_vec(),
            lambda: 0.0,
            mu,
            delta: 1.0,
            t: 0,
        };
        let loss = LinearOracle::new(grad, 0.0);
        let zero = LinearOracle::new(vec![0.0; n], 0.0);
        let round = ConstrainedRound { loss: &loss, constraint: &zero };
        let generic = omd_step(&map, &FeasibleSet::simplex(n), &state, &round).unwrap();
        for (a, b) in closed.as_slice().iter().zip(&generic.x) {
            worst = worst.max((a - b).abs());
        }
    }
    gate(
        "2 mw-omd-equivalence",
        worst <= 1e-12,
        &format!("worst coordinate gap {worst:.2e} over 1000 random triples"),
    );
}

// -------------------------------------------------------------------------
// 3. Full-information rate gates (both mirror maps)
// -------------------------------------------------------------------------

#[test]
fn acceptance_03_ocp_rates() {
    let _lock = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut detail = String::new();
    let mut pass = true;
    for algorithm in [Algorithm::OcpEuclidean, Algorithm::OcpEntropy] {
        let cfg = config(algorithm, ocp_linear_env(), vec![0]);
        let points = rate_experiment(&cfg, &CHECKPOINTS).unwrap();
        let regret = regret_series(&points).expect("comparator set is non-empty by construction");
        let violation = violation_series(&points);
        let regret_fit = fit_rate(&regret).unwrap();
        let violation_fit = fit_rate(&violation).unwrap();
        detail.push_str(&format!(
            "{}: regret slope {:.3}, violation slope {:.3}; ",
            algorithm.name(),
            regret_fit.slope,
            violation_fit.slope
        ));
        pass &= regret_fit.slope <= 0.60 && violation_fit.slope <= 0.85;
    }
    let elapsed = started.elapsed().as_secs_f64();
    detail.push_str(&format!("{elapsed:.1}s"));
    pass &= elapsed <= 30.0;
    gate("3 ocp-rates", pass, &detail);
}

// -------------------------------------------------------------------------
// 4. Bandit rate gates (EXP4.R, 20 seeds)
// -------------------------------------------------------------------------

#[test]
fn acceptance_04_exp4r_rates() {
    let _lock = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let cfg = config(Algorithm::Exp4r, drift_bandit_env(), bandit_seeds());
    let points = rate_experiment(&cfg, &CHECKPOINTS).unwrap();
    let regret = regret_series(&points).expect("drift environment is feasible by construction");
    let violation = violation_series(&points);
    let regret_fit = fit_rate(&regret).unwrap();
    let violation_fit = fit_rate(&violation).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let pass = regret_fit.slope <= 0.60 && violation_fit.slope <= 0.85 && elapsed <= 180.0;
    gate(
        "4 exp4r-rates",
        pass,
        &format!(
            "mean regret slope {:.3}, mean violation slope {:.3}, {:.1}s over 20 seeds",
            regret_fit.slope, violation_fit.slope, elapsed
        ),
    );
}

// -------------------------------------------------------------------------
// 5. Dual cap on every high-probability run
// -------------------------------------------------------------------------

#[test]
fn acceptance_05_exp4pr_dual_cap() {
    let _lock = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    // The in-loop guard aborts any round whose dual exceeds |beta|/(delta
    // mu), so completing these runs is itself the assertion; the trace
    // check below re-verifies the recorded dual column against the cap.
    let mut worst_margin = f64::NEG_INFINITY;
    let mut pass = true;
    for epsilon in [0.1, 0.4] {
        let mut cfg = config(Algorithm::Exp4pr, drift_bandit_env(), vec![1, 2, 3]);
        cfg.horizon = Some(100_000);
        cfg.overrides.epsilon = Some(epsilon);
        let out = match run_config(&cfg) {
            Ok(out) => out,
            Err(e) => {
                gate("5 exp4pr-dual-cap", false, &format!("run aborted: {e}"));
                return;
            }
        };
        // Recompute the cap exactly as the schedule does.
        let n_experts = 16; // uniform already present in the table
        let t = 100_000f64;
        let k = 4f64;
        let mu = ((n_experts as f64).ln() / ((3.0 * k + 4.0) * t)).sqrt();
        let delta = k * t.powf(0.5 - epsilon);
        let cap = 0.5 / (delta * mu);
        for trace in &out.traces {
            for row in &trace.rows {
                worst_margin = worst_margin.max(row.lambda - cap);
                if row.lambda > cap {
                    pass = false;
                }
            }
        }
    }
    gate(
        "5 exp4pr-dual-cap",
        pass,
        &format!("worst lambda-minus-cap margin {worst_margin:.3e} (must stay <= 0)"),
    );
}

// -------------------------------------------------------------------------
// 6. Trade-off direction of the exploration exponent
// -------------------------------------------------------------------------

#[test]
fn acceptance_06_exp4pr_tradeoff_direction() {
    let _lock = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let started = Instant::now();
    let mut results = Vec::new();
    for epsilon in [0.1, 0.4] {
        let mut cfg = config(Algorithm::Exp4pr, drift_bandit_env(), bandit_seeds());
        cfg.horizon = Some(100_000);
        cfg.overrides.epsilon = Some(epsilon);
        let out = run_config(&cfg).unwrap();
        let regret = out.aggregate.footer.cum_regret.expect("feasible environment");
        let violation = out.aggregate.footer.cum_violation;
        results.push((epsilon, regret, violation));
    }
    let (_, regret_low, violation_low) = results[0];
    let (_, regret_high, violation_high) = results[1];
    let pass = regret_low < regret_high && violation_high < violation_low;
    gate(
        "6 exp4pr-tradeoff",
        pass,
        &format!(
            "eps 0.1: regret {regret_low:.1}, violation {violation_low:.1}; \
             eps 0.4: regret {regret_high:.1}, violation {violation_high:.1}; {:.1}s",
            started.elapsed().as_secs_f64()
        ),
    );
}

// -------------------------------------------------------------------------
// 7. Impossibility demonstration
// -------------------------------------------------------------------------

#[test]
fn acceptance_07_impossibility_demonstration() {
    let _lock = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let prop1_env = EnvSpec {
        kind: EnvKind::Prop1,
        horizon: 100_000,
        arms: 2,
        beta: 0.5,
        policies: PolicyTableSpec {
            explicit: vec![PolicySpec::Uniform],
            seeded: None,
        },
    };
    let cfg = config(Algorithm::OcpEntropy, prop1_env, vec![0]);

    // (a) + (b) at the full horizon.
    let out = run_config(&cfg).unwrap();
    let trace = &out.traces[0];
    let t = trace.meta.horizon as f64;
    let avg_violation = trace.footer.avg_violation;
    let relaxed_value = trace
        .footer
        .comparator_value_on_average
        .expect("the on-average set contains the whole simplex here");
    let cum_cost = trace.rows.last().unwrap().cum_cost;
    let avg_regret_relaxed = (cum_cost - relaxed_value) / t;

    // (c) growth against the every-round comparator across checkpoints.
    let points = rate_experiment(&cfg, &CHECKPOINTS).unwrap();
    let regret = regret_series(&points).expect("every-round set is non-empty (first vertex)");
    let strict_fit = fit_rate(&regret).unwrap();

    let pass = avg_violation <= 0.05 && avg_regret_relaxed >= 0.02 && strict_fit.slope <= 0.60;
    gate(
        "7 impossibility-demo",
        pass,
        &format!(
            "avg violation {avg_violation:.4} (<= 0.05), regret vs on-average comparator \
             {avg_regret_relaxed:.4}/round (>= 0.02), strict-regret slope {:.3} (<= 0.60)",
            strict_fit.slope
        ),
    );
}

// -------------------------------------------------------------------------
// 8. Comparator correctness
// -------------------------------------------------------------------------

#[test]
fn acceptance_08_comparator_correctness() {
    // LP against a step-1e-3 grid on 100 random feasible instances.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let n = if rng.random_bool(0.5) { 2 } else { 3 };
        let mut problem = HindsightProblem::new(FeasibleSet::simplex(n), ConstraintMode::EveryRound);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let anchor = SimplexVector::normalized(raw).unwrap();
        let loss: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for _ in 0..rng.random_range(1..4) {
            let con: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let offset = -anchor.dot(&con) - rng.random_range(0.05..0.3);
            problem.add_round(&loss, 0.0, &con, offset).unwrap();
            rows.push((con, offset));
        }
        let Hindsight::Optimal { value, .. } = problem.best_feasible().unwrap() else {
            panic!("anchored instance must be feasible");
        };
        let per_round = value / problem.rounds() as f64;

        let feasible = |x: &[f64]| {
            rows.iter().all(|(c, o)| {
                c.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + o <= 1e-9
            })
        };
        let mut best = f64::INFINITY;
        let m = 1000usize;
        let step = 1e-3;
        if n == 2 {
            for i in 0..=m {
                let x = [i as f64 * step, 1.0 - i as f64 * step];
                if feasible(&x) {
                    best = best.min(loss.iter().zip(&x).map(|(c, v)| c * v).sum());
                }
            }
        } else {
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let x = [i as f64 * step, j as f64 * step, 1.0 - (i + j) as f64 * step];
                    if feasible(&x) {
                        best = best.min(loss.iter().zip(&x).map(|(c, v)| c * v).sum());
                    }
                }
            }
        }
        assert!(best.is_finite());
        // The exact LP can only sit at or below the grid optimum, and the
        // grid can only trail it by its own resolution.
        assert!(per_round <= best + 1e-9, "LP worse than a feasible grid point");
        worst_gap = worst_gap.max(best - per_round);
    }
    let grid_pass = worst_gap <= 2e-3;

    // Closed-form on-average optimum of the impossibility adversary's round
    // mix: -1 for qhat <= 1/2, else qhat - 1/2 - 1/(2 qhat).
    let mut formula_pass = true;
    let mut formula_detail = String::new();
    for qhat in [0.25, 0.5, 0.75, 1.0] {
        let t = 1000u64;
        let loss_two = [-1.0, 1.0];
        let con_two = [1.0, -1.0];
        let loss_one = [-1.0, 0.0];
        let con_one = [-1.0, -1.0];
        let mut problem = HindsightProblem::new(FeasibleSet::simplex(2), ConstraintMode::OnAverage);
        let two_rounds = (qhat * t as f64).round() as u64;
        for i in 0..t {
            if i < two_rounds {
                problem.add_round(&loss_two, 0.0, &con_two, 0.0).unwrap();
            } else {
                problem.add_round(&loss_one, 0.0, &con_one, 0.0).unwrap();
            }
        }
        let Hindsight::Optimal { value, .. } = problem.best_feasible().unwrap() else {
            panic!("on-average set contains the second vertex");
        };
        let per_round = value / t as f64;
        let expected = if qhat <= 0.5 {
            -1.0
        } else {
            qhat - 0.5 - 1.0 / (2.0 * qhat)
        };
        if (per_round - expected).abs() > 1e-6 {
            formula_pass = false;
        }
        formula_detail.push_str(&format!("qhat {qhat}: {per_round:.7} vs {expected:.7}; "));
    }

    gate(
        "8 comparator-correctness",
        grid_pass && formula_pass,
        &format!("grid gap {worst_gap:.2e}; {formula_detail}"),
    );
}

// -------------------------------------------------------------------------
// 9. Byte-exact replay
// -------------------------------------------------------------------------

#[test]
fn acceptance_09_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut detail = String::new();
    let cases: Vec<(&str, RunConfig)> = vec![
        ("exp4r", {
            let mut c = config(Algorithm::Exp4r, drift_bandit_env(), vec![5, 6]);
            c.horizon = Some(2_000);
            c
        }),
        ("exp4pr", {
            let mut c = config(Algorithm::Exp4pr, drift_bandit_env(), vec![5]);
            c.horizon = Some(2_000);
            c
        }),
        ("ocp-entropy", {
            let mut c = config(Algorithm::OcpEntropy, ocp_linear_env(), vec![0]);
            c.horizon = Some(2_000);
            c
        }),
    ];
    for (name, base) in cases {
        let mut first = base.clone();
        first.out = Some(tmp.path().join(format!("{name}-a")));
        let mut second = base.clone();
        second.out = Some(tmp.path().join(format!("{name}-b")));
        let out_a = run_config(&first).unwrap();
        let out_b = run_config(&second).unwrap();
        for (ta, tb) in out_a.traces.iter().zip(&out_b.traces) {
            let pa = first.out.as_ref().unwrap().join(format!("{}.csv", ta.file_stem()));
            let pb = second.out.as_ref().unwrap().join(format!("{}.csv", tb.file_stem()));
            let bytes_a = std::fs::read(&pa).unwrap();
            let bytes_b = std::fs::read(&pb).unwrap();
            if bytes_a != bytes_b {
                pass = false;
                detail.push_str(&format!("{name} seed {:?} diverged; ", ta.meta.seed));
            }
        }
        detail.push_str(&format!("{name} replayed byte-exact; "));
    }
    gate("9 determinism", pass, &detail);
}
