//! Command-line entry point.
//!
//! Subcommands: `run-ocp`, `run-exp4r`, `run-exp4pr`, `fit-rate`,
//! `comparator`, `report`. Exit codes: 0 on success, 2 on config
//! rejection, 3 on an invariant violation during a run, 1 on io trouble.

use std::path::PathBuf;
use std::process::ExitCode;

use rcb_core::comparator::{ConstraintMode, FeasibilityAudit, Hindsight, HindsightProblem};
use rcb_core::mirror::FeasibleSet;
use rcb_harness::config::{Algorithm, RunConfig};
use rcb_harness::error::RunError;
use rcb_harness::ratefit::fit_rate;
use rcb_harness::report::{report, write_gnuplot_data};
use rcb_harness::run::run_config;
use rcb_harness::trace::RunTrace;

const USAGE: &str = "\
usage: rcb <subcommand> [flags]

subcommands:
  run-ocp      --config <path> [run flags]   saddle-point mirror descent (euclidean or entropy config)
  run-exp4r    --config <path> [run flags]   EXP4.R bandit runs
  run-exp4pr   --config <path> [run flags]   EXP4.P.R bandit runs
  comparator   --config <path> [--horizon T] hindsight optimum and feasibility audit
  fit-rate     --series <csv>                log-log slope of a T,value series
  report       [--out <dir>] <trace.csv>...  summary table and gnuplot data

run flags:
  --seed <u64>          (repeatable; overrides the config's seed list)
  --horizon <T>         (overrides the config horizon)
  --out <dir>           (write trace CSVs and sidecars here)
  --epsilon <f>         (run-exp4pr only)
  --override-mu <f>  --override-delta <f>  --override-kappa <f>
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rcb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(args: &[String]) -> Result<(), RunError> {
    let Some(sub) = args.first() else {
        eprint!("{USAGE}");
        return Err(RunError::Config("missing subcommand".into()));
    };
    let rest = &args[1..];
    match sub.as_str() {
        "run-ocp" => cmd_run(rest, &[Algorithm::OcpEuclidean, Algorithm::OcpEntropy]),
        "run-exp4r" => cmd_run(rest, &[Algorithm::Exp4r]),
        "run-exp4pr" => cmd_run(rest, &[Algorithm::Exp4pr]),
        "fit-rate" => cmd_fit_rate(rest),
        "comparator" => cmd_comparator(rest),
        "report" => cmd_report(rest),
        "--help" | "-h" | "help" => {
            print!("{USAGE}");
            Ok(())
        }
        other => {
            eprint!("{USAGE}");
            Err(RunError::Config(format!("unknown subcommand `{other}`")))
        }
    }
}

struct Flags {
    config: Option<PathBuf>,
    series: Option<PathBuf>,
    out: Option<PathBuf>,
    seeds: Vec<u64>,
    horizon: Option<u64>,
    epsilon: Option<f64>,
    mu: Option<f64>,
    delta: Option<f64>,
    kappa: Option<f64>,
    positional: Vec<PathBuf>,
}

fn parse_flags(args: &[String]) -> Result<Flags, RunError> {
    let mut flags = Flags {
        config: None,
        series: None,
        out: None,
        seeds: Vec::new(),
        horizon: None,
        epsilon: None,
        mu: None,
        delta: None,
        kappa: None,
        positional: Vec::new(),
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut take = |name: &str| -> Result<String, RunError> {
            it.next()
                .cloned()
                .ok_or_else(|| RunError::Config(format!("flag {name} needs a value")))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(take("--config")?)),
            "--series" => flags.series = Some(PathBuf::from(take("--series")?)),
            "--out" => flags.out = Some(PathBuf::from(take("--out")?)),
            "--seed" => flags.seeds.push(parse_num(&take("--seed")?, "--seed")?),
            "--horizon" => flags.horizon = Some(parse_num(&take("--horizon")?, "--horizon")?),
            "--epsilon" => flags.epsilon = Some(parse_f64(&take("--epsilon")?, "--epsilon")?),
            "--override-mu" => flags.mu = Some(parse_f64(&take("--override-mu")?, "--override-mu")?),
            "--override-delta" => {
                flags.delta = Some(parse_f64(&take("--override-delta")?, "--override-delta")?)
            }
            "--override-kappa" => {
                flags.kappa = Some(parse_f64(&take("--override-kappa")?, "--override-kappa")?)
            }
            other if other.starts_with("--") => {
                return Err(RunError::Config(format!("unknown flag `{other}`")));
            }
            other => flags.positional.push(PathBuf::from(other)),
        }
    }
    Ok(flags)
}

fn parse_num(s: &str, name: &str) -> Result<u64, RunError> {
    s.parse()
        .map_err(|e| RunError::Config(format!("{name}: `{s}` is not an integer: {e}")))
}

fn parse_f64(s: &str, name: &str) -> Result<f64, RunError> {
    s.parse()
        .map_err(|e| RunError::Config(format!("{name}: `{s}` is not a number: {e}")))
}

fn load_config(flags: &Flags, allowed: &[Algorithm]) -> Result<RunConfig, RunError> {
    let Some(path) = &flags.config else {
        return Err(RunError::Config("--config <path> is required".into()));
    };
    let mut config = RunConfig::from_path(path)?;
    if !allowed.contains(&config.algorithm) {
        return Err(RunError::Config(format!(
            "config algorithm `{}` does not belong to this subcommand",
            config.algorithm.name()
        )));
    }
    if !flags.seeds.is_empty() {
        config.seeds = flags.seeds.clone();
    }
    if flags.horizon.is_some() {
        config.horizon = flags.horizon;
    }
    if flags.out.is_some() {
        config.out = flags.out.clone();
    }
    if flags.epsilon.is_some() {
        config.overrides.epsilon = flags.epsilon;
    }
    if flags.mu.is_some() {
        config.overrides.mu = flags.mu;
    }
    if flags.delta.is_some() {
        config.overrides.delta = flags.delta;
    }
    if flags.kappa.is_some() {
        config.overrides.kappa = flags.kappa;
    }
    Ok(config)
}

fn cmd_run(args: &[String], allowed: &[Algorithm]) -> Result<(), RunError> {
    let flags = parse_flags(args)?;
    let config = load_config(&flags, allowed)?;
    let output = run_config(&config)?;
    for w in output
        .traces
        .iter()
        .flat_map(|t| t.meta.warnings.iter())
        .collect::<std::collections::BTreeSet<_>>()
    {
        eprintln!("warning: {w}");
    }
    print!("{}", report(&output.traces)?);
    if let Some(dir) = &config.out {
        println!("traces written to {}", dir.display());
    }
    Ok(())
}

fn cmd_fit_rate(args: &[String]) -> Result<(), RunError> {
    let flags = parse_flags(args)?;
    let path = flags
        .series
        .or_else(|| flags.positional.first().cloned())
        .ok_or_else(|| RunError::Config("--series <csv> is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for line in text.lines() {
        let fields: Vec<&str> = line.split([',', ' ', '\t']).filter(|f| !f.is_empty()).collect();
        if fields.len() < 2 {
            continue;
        }
        // Skip non-numeric lines (headers).
        if let (Ok(t), Ok(v)) = (fields[0].parse::<f64>(), fields[1].parse::<f64>()) {
            points.push((t, v));
        }
    }
    let fit = fit_rate(&points)?;
    println!(
        "slope {:.6}  intercept {:.6}  r_squared {:.6}  ({} checkpoints)",
        fit.slope,
        fit.intercept,
        fit.r_squared,
        points.len()
    );
    Ok(())
}

fn cmd_comparator(args: &[String]) -> Result<(), RunError> {
    let flags = parse_flags(args)?;
    let config = load_config(
        &flags,
        &[
            Algorithm::OcpEuclidean,
            Algorithm::OcpEntropy,
            Algorithm::Exp4r,
            Algorithm::Exp4pr,
        ],
    )?;
    config.validate()?;
    let env = config.effective_environment();
    let horizon = config.horizon();
    let cfg_err = |e: rcb_core::CoreError| RunError::Config(e.to_string());

    let (mut strict, mut relaxed);
    if config.algorithm.is_bandit() {
        let mut stream = env.bandit_stream().map_err(cfg_err)?;
        let policies = env.policy_set().map_err(cfg_err)?;
        let base = FeasibleSet::simplex(policies.n_experts());
        strict = HindsightProblem::new(base.clone(), ConstraintMode::EveryRound);
        relaxed = HindsightProblem::new(base, ConstraintMode::OnAverage);
        for _ in 0..horizon {
            let round = stream.next_round().map_err(cfg_err)?;
            let advice = policies.advice(round.context());
            let y = advice.apply(round.truth_costs()).map_err(cfg_err)?;
            let z = advice.apply(round.truth_risks()).map_err(cfg_err)?;
            strict.add_round(&y, 0.0, &z, -env.beta).map_err(cfg_err)?;
            relaxed.add_round(&y, 0.0, &z, -env.beta).map_err(cfg_err)?;
        }
    } else {
        if matches!(env.kind, rcb_core::environments::EnvKind::Prop1) {
            return Err(RunError::Config(
                "the adaptive adversary's rounds depend on the learner; run `run-ocp` and read \
                 the comparator from its trace footer instead"
                    .into(),
            ));
        }
        let mut ocp_env = env.ocp_environment().map_err(cfg_err)?;
        let base = FeasibleSet::simplex(ocp_env.dim());
        strict = HindsightProblem::new(base.clone(), ConstraintMode::EveryRound);
        relaxed = HindsightProblem::new(base, ConstraintMode::OnAverage);
        for _ in 0..horizon {
            let (loss, con) = ocp_env.next_round(None).map_err(cfg_err)?;
            strict
                .add_round(&loss.coeffs, loss.offset, &con.coeffs, con.offset)
                .map_err(cfg_err)?;
            relaxed
                .add_round(&loss.coeffs, loss.offset, &con.coeffs, con.offset)
                .map_err(cfg_err)?;
        }
    }

    let run_err = |e: rcb_core::CoreError| RunError::Invariant(e.to_string());
    match strict.audit_feasibility().map_err(run_err)? {
        FeasibilityAudit::Feasible { witness } => {
            println!("every-round comparator set: non-empty, witness {witness:?}");
        }
        FeasibilityAudit::Infeasible => {
            println!("every-round comparator set: EMPTY (guarantee premises fail)");
        }
    }
    for (label, problem) in [("every-round", &strict), ("on-average", &relaxed)] {
        match problem.best_feasible().map_err(run_err)? {
            Hindsight::Optimal { point, value } => println!(
                "{label} optimum: value {value:.6} ({:.6}/round) at {point:?}",
                value / horizon.max(1) as f64
            ),
            Hindsight::Infeasible => println!("{label} optimum: undefined (empty set)"),
        }
    }
    Ok(())
}

fn cmd_report(args: &[String]) -> Result<(), RunError> {
    let flags = parse_flags(args)?;
    if flags.positional.is_empty() {
        return Err(RunError::Config("report needs at least one trace csv".into()));
    }
    let traces = flags
        .positional
        .iter()
        .map(|p| RunTrace::read_from_csv(p))
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", report(&traces)?);
    if let Some(dir) = &flags.out {
        let paths = write_gnuplot_data(&traces, dir)?;
        println!("gnuplot data: {} files in {}", paths.len(), dir.display());
    }
    Ok(())
}
