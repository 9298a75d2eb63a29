//! Round generators: the counterexample adversary for the on-average
//! comparator, stochastic and drifting bandit baselines, and scripted
//! replays. Every generated bandit spec guarantees a feasible mixed policy
//! so the algorithms' premises hold.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::exp4r::{BanditRound, ExpertAdvice};
use crate::ocp::LinearOracle;
use crate::simplex::SimplexVector;

// ---------------------------------------------------------------------------
// Impossibility adversary (full information, 2-coordinate simplex)
// ---------------------------------------------------------------------------

/// The adaptive two-phase adversary on the 2-simplex demonstrating that no
/// learner with vanishing average violation can match the on-average
/// comparator.
///
/// Loss/constraint pairs: phase one emits `l2(x) = -x0 + x1` with
/// `f2(x) = x0 - x1`, phase two emits `l1(x) = -x0` with
/// `f1(x) = -x0 - x1`. Phase one persists while the counter is fresh or the
/// running average of the learner's first coordinate exceeds 3/4; phase two
/// then runs for exactly as many steps as phase one lasted, and the cycle
/// restarts.
#[derive(Debug, Clone)]
pub struct ImpossibilityAdversary {
    phase_two: bool,
    counter: u64,
    remaining: u64,
    sum_first_coord: f64,
    decisions_seen: u64,
    phase_two_entries: u64,
}

impl ImpossibilityAdversary {
    pub fn new() -> Self {
        ImpossibilityAdversary {
            phase_two: false,
            counter: 0,
            remaining: 0,
            sum_first_coord: 0.0,
            decisions_seen: 0,
            phase_two_entries: 0,
        }
    }

    /// How many times phase two has been entered so far. For any learner
    /// that keeps its long-term violation non-positive this grows without
    /// bound.
    pub fn phase_two_entries(&self) -> u64 {
        self.phase_two_entries
    }

    /// Emits the round-`t` pair given the learner's previous decision
    /// (`None` on the first round). The running average folds in `x_prev`
    /// before the phase test.
    pub fn next_round(&mut self, x_prev: Option<&[f64]>) -> (LinearOracle, LinearOracle) {
        if let Some(x) = x_prev {
            self.sum_first_coord += x[0];
            self.decisions_seen += 1;
        }
        let loss_two = LinearOracle::new(vec![-1.0, 1.0], 0.0);
        let con_two = LinearOracle::new(vec![1.0, -1.0], 0.0);
        let loss_one = LinearOracle::new(vec![-1.0, 0.0], 0.0);
        let con_one = LinearOracle::new(vec![-1.0, -1.0], 0.0);

        if !self.phase_two {
            let avg_high = self.decisions_seen > 0
                && self.sum_first_coord / self.decisions_seen as f64 > 0.75;
            if self.counter == 0 || avg_high {
                self.counter += 1;
                return (loss_two, con_two);
            }
            self.phase_two = true;
            self.remaining = self.counter;
            self.phase_two_entries += 1;
        }
        self.remaining -= 1;
        if self.remaining == 0 {
            self.phase_two = false;
            self.counter = 0;
        }
        (loss_one, con_one)
    }
}

impl Default for ImpossibilityAdversary {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Environment specification (serde-facing)
// ---------------------------------------------------------------------------

/// Per-arm marginal distribution for the i.i.d. environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Marginal {
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
    Point { v: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<(), CoreError> {
        let ok = match *self {
            Marginal::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Marginal::Uniform { lo, hi } => (0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0,
            Marginal::Point { v } => (0.0..=1.0).contains(&v),
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::rejected(format!("marginal {self:?} leaves [0, 1]")))
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Marginal::Bernoulli { p } => p,
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Point { v } => v,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Marginal::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
            Marginal::Point { v } => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IidSpec {
    pub seed: u64,
    pub cost_marginals: Vec<Marginal>,
    pub risk_marginals: Vec<Marginal>,
}

/// Deterministic periodic swap of which arm is cheap (and hot): the cheap
/// arm index advances every `period` rounds, cycling through the arms. The
/// context id is the current phase, so lookup policies can specialize.
/// Feasibility by construction: the risk vector's mean is constant across
/// swaps, so the uniform mixture satisfies the threshold whenever that mean
/// does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub period: u64,
    #[serde(default = "default_cheap_cost")]
    pub cheap_cost: f64,
    #[serde(default = "default_dear_cost")]
    pub dear_cost: f64,
    #[serde(default = "default_hot_risk")]
    pub hot_risk: f64,
    #[serde(default = "default_cold_risk")]
    pub cold_risk: f64,
}

fn default_cheap_cost() -> f64 {
    0.0
}
fn default_dear_cost() -> f64 {
    1.0
}
fn default_hot_risk() -> f64 {
    1.0
}
fn default_cold_risk() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum EnvKind {
    /// The adaptive impossibility adversary (full information only).
    Prop1,
    Iid(IidSpec),
    Drift(DriftSpec),
    Scripted { path: PathBuf },
}

/// One fixed expert in the policy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PolicySpec {
    /// Uniform over arms regardless of context.
    Uniform,
    /// All mass on one arm regardless of context.
    Arm { index: usize },
    /// Lookup table indexed by `context % rows.len()`.
    Lookup { rows: Vec<Vec<f64>> },
}

/// Seeded block of random lookup policies appended to the explicit ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeededPolicies {
    pub count: usize,
    pub contexts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyTableSpec {
    #[serde(default)]
    pub explicit: Vec<PolicySpec>,
    #[serde(default)]
    pub seeded: Option<SeededPolicies>,
}

/// A complete environment description: round generator, horizon, arm
/// count, risk threshold, and the expert table the bandit algorithms mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub horizon: u64,
    pub arms: usize,
    pub beta: f64,
    #[serde(default)]
    pub policies: PolicyTableSpec,
}

// ---------------------------------------------------------------------------
// Materialized policy set
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Policy {
    Uniform,
    Arm(usize),
    Lookup(Vec<SimplexVector>),
}

/// Experts as functions from context ids to arm distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    experts: Vec<Policy>,
    arms: usize,
}

impl PolicySet {
    pub fn materialize(spec: &PolicyTableSpec, arms: usize) -> Result<Self, CoreError> {
        if arms == 0 {
            return Err(CoreError::rejected("need at least one arm"));
        }
        let mut experts = Vec::new();
        for p in &spec.explicit {
            experts.push(match p {
                PolicySpec::Uniform => Policy::Uniform,
                PolicySpec::Arm { index } => {
                    if *index >= arms {
                        return Err(CoreError::rejected(format!(
                            "constant policy pins arm {index}, only {arms} arms exist"
                        )));
                    }
                    Policy::Arm(*index)
                }
                PolicySpec::Lookup { rows } => {
                    if rows.is_empty() {
                        return Err(CoreError::rejected("lookup policy with no rows"));
                    }
                    let rows = rows
                        .iter()
                        .map(|r| {
                            if r.len() != arms {
                                return Err(CoreError::dims(format!(
                                    "lookup row has {} entries for {arms} arms",
                                    r.len()
                                )));
                            }
                            SimplexVector::new(r.clone())
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Policy::Lookup(rows)
                }
            });
        }
        if let Some(seeded) = &spec.seeded {
            if seeded.contexts == 0 {
                return Err(CoreError::rejected("seeded policies need at least one context"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seeded.seed);
            for _ in 0..seeded.count {
                let rows = (0..seeded.contexts)
                    .map(|_| {
                        let raw: Vec<f64> =
                            (0..arms).map(|_| rng.random_range(0.05..1.0)).collect();
                        SimplexVector::normalized(raw)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                experts.push(Policy::Lookup(rows));
            }
        }
        if experts.is_empty() {
            return Err(CoreError::rejected("policy table is empty"));
        }
        Ok(PolicySet { experts, arms })
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn n_arms(&self) -> usize {
        self.arms
    }

    pub fn has_uniform(&self) -> bool {
        self.experts.iter().any(|p| matches!(p, Policy::Uniform))
    }

    /// Appends the uniform policy if absent. Returns whether it was added.
    pub fn ensure_uniform(&mut self) -> bool {
        if self.has_uniform() {
            false
        } else {
            self.experts.push(Policy::Uniform);
            true
        }
    }

    /// The advice matrix for a context.
    pub fn advice(&self, context: u64) -> ExpertAdvice {
        let rows = self
            .experts
            .iter()
            .map(|p| match p {
                Policy::Uniform => SimplexVector::uniform(self.arms),
                Policy::Arm(a) => {
                    let mut w = vec![0.0; self.arms];
                    w[*a] = 1.0;
                    SimplexVector::new(w).expect("one-hot row is a valid distribution")
                }
                Policy::Lookup(rows) => rows[(context % rows.len() as u64) as usize].clone(),
            })
            .collect();
        ExpertAdvice::new(rows).expect("policy set is non-empty and dimension-checked")
    }
}

// ---------------------------------------------------------------------------
// Bandit round streams
// ---------------------------------------------------------------------------

/// Single-consumer stateful generator of bandit rounds. Streams are pure
/// functions of their spec, so rebuilding one replays it exactly.
pub trait BanditStream {
    fn next_round(&mut self) -> Result<BanditRound, CoreError>;
    fn n_arms(&self) -> usize;
    fn beta(&self) -> f64;
}

struct IidStream {
    spec: IidSpec,
    beta: f64,
    rng: ChaCha8Rng,
    t: u64,
}

impl BanditStream for IidStream {
    fn next_round(&mut self) -> Result<BanditRound, CoreError> {
        // Draw order (costs arm-by-arm, then risks) is part of the replay
        // contract.
        let costs: Vec<f64> = self
            .spec
            .cost_marginals
            .iter()
            .map(|m| m.sample(&mut self.rng))
            .collect();
        let risks: Vec<f64> = self
            .spec
            .risk_marginals
            .iter()
            .map(|m| m.sample(&mut self.rng))
            .collect();
        let round = BanditRound::new(0, costs, risks, self.beta)?;
        self.t += 1;
        Ok(round)
    }

    fn n_arms(&self) -> usize {
        self.spec.cost_marginals.len()
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

struct DriftStream {
    spec: DriftSpec,
    arms: usize,
    beta: f64,
    t: u64,
}

impl DriftStream {
    fn cheap_arm(&self, t: u64) -> usize {
        ((t / self.spec.period) % self.arms as u64) as usize
    }
}

impl BanditStream for DriftStream {
    fn next_round(&mut self) -> Result<BanditRound, CoreError> {
        let cheap = self.cheap_arm(self.t);
        let mut costs = vec![self.spec.dear_cost; self.arms];
        let mut risks = vec![self.spec.cold_risk; self.arms];
        costs[cheap] = self.spec.cheap_cost;
        risks[cheap] = self.spec.hot_risk;
        let round = BanditRound::new(cheap as u64, costs, risks, self.beta)?;
        self.t += 1;
        Ok(round)
    }

    fn n_arms(&self) -> usize {
        self.arms
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

/// On-disk schema for scripted rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedFile {
    pub arms: usize,
    pub beta: f64,
    pub rounds: Vec<ScriptedRound>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedRound {
    pub context: u64,
    pub costs: Vec<f64>,
    pub risks: Vec<f64>,
}

struct ScriptedStream {
    rounds: Vec<ScriptedRound>,
    beta: f64,
    arms: usize,
    idx: usize,
}

impl BanditStream for ScriptedStream {
    fn next_round(&mut self) -> Result<BanditRound, CoreError> {
        let Some(r) = self.rounds.get(self.idx) else {
            return Err(CoreError::rejected(format!(
                "scripted file exhausted after {} rounds",
                self.rounds.len()
            )));
        };
        self.idx += 1;
        BanditRound::new(r.context, r.costs.clone(), r.risks.clone(), self.beta)
    }

    fn n_arms(&self) -> usize {
        self.arms
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

pub fn load_scripted(path: &Path) -> Result<ScriptedFile, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::rejected(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CoreError::rejected(format!("malformed scripted file {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Full-information view
// ---------------------------------------------------------------------------

/// Full-information environments hand the learner a (loss, constraint)
/// oracle pair each round, possibly reacting to the learner's previous
/// decision.
pub trait OcpEnvironment {
    fn dim(&self) -> usize;
    fn next_round(&mut self, x_prev: Option<&[f64]>) -> Result<(LinearOracle, LinearOracle), CoreError>;
}

impl OcpEnvironment for ImpossibilityAdversary {
    fn dim(&self) -> usize {
        2
    }

    fn next_round(
        &mut self,
        x_prev: Option<&[f64]>,
    ) -> Result<(LinearOracle, LinearOracle), CoreError> {
        Ok(ImpossibilityAdversary::next_round(self, x_prev))
    }
}

/// Linear full-information view of an oblivious bandit stream: loss
/// `<c_t, x>`, constraint `<r_t, x> - beta <= 0` over the arm simplex.
pub struct LinearBanditView<S: BanditStream> {
    stream: S,
}

impl<S: BanditStream> OcpEnvironment for LinearBanditView<S> {
    fn dim(&self) -> usize {
        self.stream.n_arms()
    }

    fn next_round(
        &mut self,
        _x_prev: Option<&[f64]>,
    ) -> Result<(LinearOracle, LinearOracle), CoreError> {
        let round = self.stream.next_round()?;
        let beta = self.stream.beta();
        Ok((
            LinearOracle::new(round.truth_costs().to_vec(), 0.0),
            LinearOracle::new(round.truth_risks().to_vec(), -beta),
        ))
    }
}

// ---------------------------------------------------------------------------
// Spec validation and stream construction
// ---------------------------------------------------------------------------

impl EnvSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.horizon == 0 {
            return Err(CoreError::rejected("horizon must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(CoreError::rejected(format!(
                "beta = {} must lie in [0, 1]",
                self.beta
            )));
        }
        match &self.kind {
            EnvKind::Prop1 => {
                if self.arms != 2 {
                    return Err(CoreError::rejected(
                        "the impossibility adversary is defined on 2 coordinates",
                    ));
                }
                Ok(())
            }
            EnvKind::Iid(spec) => {
                if spec.cost_marginals.len() != self.arms || spec.risk_marginals.len() != self.arms
                {
                    return Err(CoreError::dims(format!(
                        "{} cost / {} risk marginals for {} arms",
                        spec.cost_marginals.len(),
                        spec.risk_marginals.len(),
                        self.arms
                    )));
                }
                for m in spec.cost_marginals.iter().chain(&spec.risk_marginals) {
                    m.validate()?;
                }
                // Assumption audit: some expert must satisfy the risk
                // budget in expectation, otherwise the comparator set is
                // empty by construction.
                let policies = self.policy_set()?;
                let means: Vec<f64> = spec.risk_marginals.iter().map(|m| m.mean()).collect();
                let advice = policies.advice(0);
                let expected = advice.apply(&means)?;
                if !expected.iter().any(|z| *z <= self.beta + 1e-12) {
                    return Err(CoreError::rejected(format!(
                        "no policy in the table meets the risk budget in expectation \
                         (best {:.4} > beta = {})",
                        expected.iter().cloned().fold(f64::INFINITY, f64::min),
                        self.beta
                    )));
                }
                Ok(())
            }
            EnvKind::Drift(spec) => {
                if spec.period == 0 {
                    return Err(CoreError::rejected("drift period must be at least 1"));
                }
                for v in [spec.cheap_cost, spec.dear_cost, spec.hot_risk, spec.cold_risk] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(CoreError::rejected(format!(
                            "drift level {v} leaves [0, 1]"
                        )));
                    }
                }
                let mean_risk = (spec.hot_risk + (self.arms as f64 - 1.0) * spec.cold_risk)
                    / self.arms as f64;
                if mean_risk > self.beta + 1e-12 {
                    return Err(CoreError::rejected(format!(
                        "drift risk mean {mean_risk:.4} exceeds beta = {}; the uniform \
                         witness fails",
                        self.beta
                    )));
                }
                Ok(())
            }
            EnvKind::Scripted { path } => {
                let file = load_scripted(path)?;
                if file.arms != self.arms {
                    return Err(CoreError::dims(format!(
                        "scripted file has {} arms, spec says {}",
                        file.arms, self.arms
                    )));
                }
                if file.beta != self.beta {
                    return Err(CoreError::rejected(format!(
                        "scripted file has beta = {}, spec says {}",
                        file.beta, self.beta
                    )));
                }
                if (file.rounds.len() as u64) < self.horizon {
                    return Err(CoreError::rejected(format!(
                        "scripted file has {} rounds, horizon is {}",
                        file.rounds.len(),
                        self.horizon
                    )));
                }
                for (i, r) in file.rounds.iter().enumerate() {
                    BanditRound::new(r.context, r.costs.clone(), r.risks.clone(), self.beta)
                        .map_err(|e| {
                            CoreError::rejected(format!("scripted round {i} invalid: {e}"))
                        })?;
                }
                Ok(())
            }
        }
    }

    pub fn policy_set(&self) -> Result<PolicySet, CoreError> {
        PolicySet::materialize(&self.policies, self.arms)
    }

    /// Fresh bandit stream. The impossibility adversary is full-information
    /// only and is rejected here.
    pub fn bandit_stream(&self) -> Result<Box<dyn BanditStream>, CoreError> {
        match &self.kind {
            EnvKind::Prop1 => Err(CoreError::rejected(
                "the impossibility adversary has no bandit form; use the full-information view",
            )),
            EnvKind::Iid(spec) => Ok(Box::new(IidStream {
                spec: spec.clone(),
                beta: self.beta,
                rng: ChaCha8Rng::seed_from_u64(spec.seed),
                t: 0,
            })),
            EnvKind::Drift(spec) => Ok(Box::new(DriftStream {
                spec: spec.clone(),
                arms: self.arms,
                beta: self.beta,
                t: 0,
            })),
            EnvKind::Scripted { path } => {
                let file = load_scripted(path)?;
                Ok(Box::new(ScriptedStream {
                    rounds: file.rounds,
                    beta: self.beta,
                    arms: self.arms,
                    idx: 0,
                }))
            }
        }
    }

    /// Fresh full-information environment: the adversary itself for
    /// `Prop1`, the linear view over the arm simplex for everything else.
    pub fn ocp_environment(&self) -> Result<Box<dyn OcpEnvironment>, CoreError> {
        match &self.kind {
            EnvKind::Prop1 => Ok(Box::new(ImpossibilityAdversary::new())),
            _ => {
                let stream = self.bandit_stream()?;
                Ok(Box::new(LinearBanditView { stream }))
            }
        }
    }
}

impl BanditStream for Box<dyn BanditStream> {
    fn next_round(&mut self) -> Result<BanditRound, CoreError> {
        (**self).next_round()
    }
    fn n_arms(&self) -> usize {
        (**self).n_arms()
    }
    fn beta(&self) -> f64 {
        (**self).beta()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::ConvexOracle;

    #[test]
    fn adversary_opens_with_the_second_pair() {
        let mut adv = ImpossibilityAdversary::new();
        let (loss, con) = adv.next_round(None);
        // l2 at the first vertex: -1; f2 there: +1 (violated).
        assert_eq!(loss.value(&[1.0, 0.0]), -1.0);
        assert_eq!(con.value(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn balanced_learner_sees_period_two() {
        // A learner pinned at (1/2, 1/2) keeps the running average at 1/2,
        // so phase one lasts one step and phase two one step, forever.
        let mut adv = ImpossibilityAdversary::new();
        let x = [0.5, 0.5];
        let mut pattern = Vec::new();
        let mut prev: Option<&[f64]> = None;
        for _ in 0..10 {
            let (loss, _) = adv.next_round(prev);
            pattern.push(loss.coeffs[1]); // 1.0 for l2, 0.0 for l1
            prev = Some(&x);
        }
        assert_eq!(pattern, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(adv.phase_two_entries(), 5);
    }

    #[test]
    fn greedy_learner_stretches_phase_one() {
        // A learner pinned at (1, 0) keeps the average above 3/4, so phase
        // one never ends and phase two is never entered.
        let mut adv = ImpossibilityAdversary::new();
        let x = [1.0, 0.0];
        let mut prev: Option<&[f64]> = None;
        for _ in 0..50 {
            let (loss, _) = adv.next_round(prev);
            assert_eq!(loss.coeffs, vec![-1.0, 1.0]);
            prev = Some(&x);
        }
        assert_eq!(adv.phase_two_entries(), 0);
    }

    fn drift_spec(period: u64) -> EnvSpec {
        EnvSpec {
            kind: EnvKind::Drift(DriftSpec {
                period,
                cheap_cost: 0.0,
                dear_cost: 1.0,
                hot_risk: 0.9,
                cold_risk: 0.3,
            }),
            horizon: 100,
            arms: 2,
            beta: 0.6,
            policies: PolicyTableSpec {
                explicit: vec![PolicySpec::Uniform],
                seeded: None,
            },
        }
    }

    #[test]
    fn drift_swaps_the_cheap_arm_each_period() {
        let spec = drift_spec(1);
        spec.validate().unwrap();
        let mut stream = spec.bandit_stream().unwrap();
        let r0 = stream.next_round().unwrap();
        let r1 = stream.next_round().unwrap();
        let r2 = stream.next_round().unwrap();
        assert_eq!(r0.truth_costs(), &[0.0, 1.0]);
        assert_eq!(r1.truth_costs(), &[1.0, 0.0]);
        assert_eq!(r2.truth_costs(), &[0.0, 1.0]);

        // Period of two: each pattern persists for two rounds.
        let spec = drift_spec(2);
        let mut stream = spec.bandit_stream().unwrap();
        let costs: Vec<Vec<f64>> = (0..4)
            .map(|_| stream.next_round().unwrap().truth_costs().to_vec())
            .collect();
        assert_eq!(costs[0], costs[1]);
        assert_eq!(costs[2], costs[3]);
        assert_ne!(costs[0], costs[2]);
    }

    #[test]
    fn drift_with_period_equal_to_horizon_is_constant() {
        let spec = drift_spec(100);
        let mut stream = spec.bandit_stream().unwrap();
        let first = stream.next_round().unwrap();
        for _ in 1..100 {
            let r = stream.next_round().unwrap();
            assert_eq!(r.truth_costs(), first.truth_costs());
            assert_eq!(r.truth_risks(), first.truth_risks());
        }
    }

    #[test]
    fn drift_uniform_risk_is_constant_across_swaps() {
        let spec = drift_spec(3);
        let mut stream = spec.bandit_stream().unwrap();
        let mut means = Vec::new();
        for _ in 0..12 {
            let r = stream.next_round().unwrap();
            let mean: f64 =
                r.truth_risks().iter().sum::<f64>() / r.truth_risks().len() as f64;
            means.push(mean);
        }
        for m in &means {
            assert!((m - means[0]).abs() < 1e-15);
        }
        assert!(means[0] <= 0.6);
    }

    #[test]
    fn drift_rejects_infeasible_risk_budget() {
        let mut spec = drift_spec(1);
        spec.beta = 0.5; // mean risk is 0.6 > 0.5
        assert!(spec.validate().is_err());
    }

    fn iid_spec(seed: u64) -> EnvSpec {
        EnvSpec {
            kind: EnvKind::Iid(IidSpec {
                seed,
                cost_marginals: vec![
                    Marginal::Bernoulli { p: 0.5 },
                    Marginal::Uniform { lo: 0.2, hi: 0.8 },
                ],
                risk_marginals: vec![
                    Marginal::Bernoulli { p: 0.7 },
                    Marginal::Point { v: 0.2 },
                ],
            }),
            horizon: 1000,
            arms: 2,
            beta: 0.5,
            policies: PolicyTableSpec {
                explicit: vec![PolicySpec::Uniform, PolicySpec::Arm { index: 1 }],
                seeded: None,
            },
        }
    }

    #[test]
    fn iid_stream_replays_exactly_and_hits_its_means() {
        let spec = iid_spec(7);
        spec.validate().unwrap();
        let mut a = spec.bandit_stream().unwrap();
        let mut b = spec.bandit_stream().unwrap();
        let mut sum0 = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let ra = a.next_round().unwrap();
            let rb = b.next_round().unwrap();
            assert_eq!(ra, rb);
            sum0 += ra.truth_costs()[0];
        }
        // Bernoulli(0.5) empirical mean within the 3-sigma envelope 0.006.
        assert!((sum0 / n as f64 - 0.5).abs() < 0.006);
    }

    #[test]
    fn iid_degenerate_marginals_freeze_the_rounds() {
        let spec = EnvSpec {
            kind: EnvKind::Iid(IidSpec {
                seed: 1,
                cost_marginals: vec![Marginal::Point { v: 0.3 }, Marginal::Point { v: 0.6 }],
                risk_marginals: vec![Marginal::Point { v: 0.1 }, Marginal::Point { v: 0.4 }],
            }),
            horizon: 10,
            arms: 2,
            beta: 0.5,
            policies: PolicyTableSpec {
                explicit: vec![PolicySpec::Uniform],
                seeded: None,
            },
        };
        spec.validate().unwrap();
        let mut stream = spec.bandit_stream().unwrap();
        let first = stream.next_round().unwrap();
        for _ in 0..9 {
            assert_eq!(stream.next_round().unwrap(), first);
        }
    }

    #[test]
    fn iid_rejects_tables_without_a_feasible_policy() {
        let mut spec = iid_spec(3);
        // Only the always-arm-0 policy, whose expected risk is 0.7 > 0.5.
        spec.policies = PolicyTableSpec {
            explicit: vec![PolicySpec::Arm { index: 0 }],
            seeded: None,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn policy_set_materializes_and_forces_uniform() {
        let spec = PolicyTableSpec {
            explicit: vec![PolicySpec::Arm { index: 0 }],
            seeded: Some(SeededPolicies { count: 3, contexts: 2, seed: 5 }),
        };
        let mut set = PolicySet::materialize(&spec, 3).unwrap();
        assert_eq!(set.n_experts(), 4);
        assert!(!set.has_uniform());
        assert!(set.ensure_uniform());
        assert!(!set.ensure_uniform());
        assert_eq!(set.n_experts(), 5);

        let advice = set.advice(0);
        assert_eq!(advice.n_experts(), 5);
        assert_eq!(advice.n_arms(), 3);
        // Lookup rows rotate with the context.
        let a0 = set.advice(0);
        let a1 = set.advice(1);
        let a2 = set.advice(2);
        assert_eq!(a0.row(1).as_slice(), a2.row(1).as_slice());
        assert_ne!(a0.row(1).as_slice(), a1.row(1).as_slice());
    }

    #[test]
    fn linear_view_exposes_the_bandit_truth() {
        let spec = drift_spec(1);
        let mut env = spec.ocp_environment().unwrap();
        assert_eq!(env.dim(), 2);
        let (loss, con) = env.next_round(None).unwrap();
        assert_eq!(loss.coeffs, vec![0.0, 1.0]);
        assert_eq!(con.coeffs, vec![0.9, 0.3]);
        assert_eq!(con.offset, -0.6);
    }

    #[test]
    fn scripted_round_trip() {
        let file = ScriptedFile {
            arms: 2,
            beta: 0.5,
            rounds: vec![
                ScriptedRound { context: 0, costs: vec![0.1, 0.9], risks: vec![0.3, 0.2] },
                ScriptedRound { context: 1, costs: vec![0.6, 0.2], risks: vec![0.8, 0.1] },
            ],
        };
        let dir = std::env::temp_dir().join("rcb-core-scripted-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rounds.json");
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();

        let spec = EnvSpec {
            kind: EnvKind::Scripted { path: path.clone() },
            horizon: 2,
            arms: 2,
            beta: 0.5,
            policies: PolicyTableSpec {
                explicit: vec![PolicySpec::Uniform],
                seeded: None,
            },
        };
        spec.validate().unwrap();
        let mut s1 = spec.bandit_stream().unwrap();
        let mut s2 = spec.bandit_stream().unwrap();
        for _ in 0..2 {
            assert_eq!(s1.next_round().unwrap(), s2.next_round().unwrap());
        }
        assert!(s1.next_round().is_err()); // exhausted

        // Horizon longer than the script is rejected up front.
        let spec_long = EnvSpec { horizon: 5, ..spec };
        assert!(spec_long.validate().is_err());
        std::fs::remove_file(&path).ok();
    }
}
