//! EXP4.R: expert-advice bandits under a long-term risk constraint.
//!
//! Per round: mix the experts' advice into an arm distribution, sample an
//! arm, observe only that arm's cost and risk, importance-weight the
//! observation into unbiased full-vector estimates, lift those to per-expert
//! estimates, then run a multiplicative-weights step on the expert weights
//! coupled with a gradient-ascent step on the dual variable that prices the
//! risk budget.
//!
//! State transitions depend only on `(s_t, a_t, c_t[a_t], r_t[a_t])`:
//! unobserved entries of the cost and risk vectors never reach the learner.
//! [`BanditRound`] keeps its vectors private and exposes a single-arm
//! [`BanditRound::observe`]; the full vectors are reserved for comparator
//! and reporting code via the loudly named truth accessors.

use rand::Rng;

use crate::error::CoreError;
use crate::ocp::entropy_mw_step;
use crate::simplex::{sample_categorical, SimplexVector};

/// N experts' advice for one context: row i is expert i's distribution over
/// the K arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertAdvice {
    rows: Vec<SimplexVector>,
    arms: usize,
}

impl ExpertAdvice {
    pub fn new(rows: Vec<SimplexVector>) -> Result<Self, CoreError> {
        let Some(first) = rows.first() else {
            return Err(CoreError::rejected("advice needs at least one expert"));
        };
        let arms = first.len();
        if rows.iter().any(|r| r.len() != arms) {
            return Err(CoreError::dims("advice rows have differing arm counts"));
        }
        Ok(ExpertAdvice { rows, arms })
    }

    pub fn n_experts(&self) -> usize {
        self.rows.len()
    }

    pub fn n_arms(&self) -> usize {
        self.arms
    }

    pub fn row(&self, i: usize) -> &SimplexVector {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SimplexVector] {
        &self.rows
    }

    /// Row-wise inner products: maps a per-arm vector to a per-expert one.
    pub fn apply(&self, per_arm: &[f64]) -> Result<Vec<f64>, CoreError> {
        if per_arm.len() != self.arms {
            return Err(CoreError::dims(format!(
                "per-arm vector has length {}, advice has {} arms",
                per_arm.len(),
                self.arms
            )));
        }
        Ok(self.rows.iter().map(|r| r.dot(per_arm)).collect())
    }
}

/// The pulled arm's feedback: the only environment data the learner sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub arm: usize,
    pub cost: f64,
    pub risk: f64,
}

/// One bandit round. Cost and risk vectors live in `[0, 1]^K`; the
/// threshold `beta` is fixed across a run. The vectors are private: the
/// learner goes through [`BanditRound::observe`].
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRound {
    context: u64,
    costs: Vec<f64>,
    risks: Vec<f64>,
    beta: f64,
}

impl BanditRound {
    pub fn new(context: u64, costs: Vec<f64>, risks: Vec<f64>, beta: f64) -> Result<Self, CoreError> {
        if costs.is_empty() || costs.len() != risks.len() {
            return Err(CoreError::dims(format!(
                "cost/risk vectors have lengths {}/{}",
                costs.len(),
                risks.len()
            )));
        }
        let in_unit = |v: &f64| v.is_finite() && (0.0..=1.0).contains(v);
        if !costs.iter().all(in_unit) || !risks.iter().all(in_unit) {
            return Err(CoreError::rejected("costs and risks must lie in [0, 1]"));
        }
        if !in_unit(&beta) {
            return Err(CoreError::rejected(format!("beta = {beta} must lie in [0, 1]")));
        }
        Ok(BanditRound { context, costs, risks, beta })
    }

    pub fn context(&self) -> u64 {
        self.context
    }

    pub fn n_arms(&self) -> usize {
        self.costs.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Reveals the pulled arm's cost and risk — bandit feedback.
    pub fn observe(&self, arm: usize) -> Result<Observation, CoreError> {
        if arm >= self.costs.len() {
            return Err(CoreError::rejected(format!(
                "arm {arm} out of range for {} arms",
                self.costs.len()
            )));
        }
        Ok(Observation { arm, cost: self.costs[arm], risk: self.risks[arm] })
    }

    /// Full cost vector. For comparator and reporting code only; algorithm
    /// code must stay on [`BanditRound::observe`].
    pub fn truth_costs(&self) -> &[f64] {
        &self.costs
    }

    /// Full risk vector. Same caveat as [`BanditRound::truth_costs`].
    pub fn truth_risks(&self) -> &[f64] {
        &self.risks
    }
}

/// Expert weights and dual variable with their schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp4rState {
    pub weights: SimplexVector,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub t: u64,
}

impl Exp4rState {
    /// Uniform weights and a zero dual.
    pub fn init(n_experts: usize, mu: f64, delta: f64) -> Result<Self, CoreError> {
        if n_experts == 0 {
            return Err(CoreError::rejected("need at least one expert"));
        }
        if !(mu.is_finite() && mu > 0.0) || !(delta.is_finite() && delta > 0.0) {
            return Err(CoreError::rejected(format!(
                "mu = {mu} and delta = {delta} must be positive"
            )));
        }
        Ok(Exp4rState {
            weights: SimplexVector::uniform(n_experts),
            lambda: 0.0,
            mu,
            delta,
            t: 0,
        })
    }
}

/// What a round leaves behind for the trace: the action, its realized cost
/// and risk (original `[0, 1]` convention), and the dual value the round
/// was played under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub action: usize,
    pub cost: f64,
    pub risk: f64,
    pub lambda: f64,
}

/// `p_t = sum_i w[i] pi_i(s_t)`: the weighted mixture of expert advice.
pub fn mix_experts(w: &SimplexVector, advice: &ExpertAdvice) -> Result<SimplexVector, CoreError> {
    if w.len() != advice.n_experts() {
        return Err(CoreError::dims(format!(
            "{} weights for {} experts",
            w.len(),
            advice.n_experts()
        )));
    }
    let mut mixed = vec![0.0; advice.n_arms()];
    for (wi, row) in w.as_slice().iter().zip(advice.rows()) {
        for (m, p) in mixed.iter_mut().zip(row.as_slice()) {
            *m += wi * p;
        }
    }
    SimplexVector::normalized(mixed)
}

/// Inverse-propensity estimates of the full cost and risk vectors from one
/// observed arm: `chat[i] = cost * 1(a = i) / p[a]`, same for risk.
///
/// `p[a] = 0` cannot happen for an arm actually sampled from `p`; seeing it
/// means the sampler and the mixture disagree, so it is reported as an
/// internal invariant violation rather than a rejected input.
pub fn importance_weighted(
    cost_obs: f64,
    risk_obs: f64,
    arm: usize,
    p: &SimplexVector,
) -> Result<(Vec<f64>, Vec<f64>), CoreError> {
    if arm >= p.len() {
        return Err(CoreError::dims(format!(
            "arm {arm} out of range for {} arms",
            p.len()
        )));
    }
    let pa = p[arm];
    if pa <= 0.0 {
        return Err(CoreError::invariant(format!(
            "sampled arm {arm} has zero propensity; sampler and mixture disagree"
        )));
    }
    let mut chat = vec![0.0; p.len()];
    let mut rhat = vec![0.0; p.len()];
    chat[arm] = cost_obs / pa;
    rhat[arm] = risk_obs / pa;
    Ok((chat, rhat))
}

/// Per-expert estimates: `yhat[j] = pi_j . chat`, `zhat[j] = pi_j . rhat`.
pub fn expert_estimates(
    advice: &ExpertAdvice,
    chat: &[f64],
    rhat: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), CoreError> {
    Ok((advice.apply(chat)?, advice.apply(rhat)?))
}

/// One EXP4.R update. Both pieces read the pre-step `(w_t, lambda_t)`:
///
/// ```text
/// w'[i]   prop. w[i] exp(-mu (yhat[i] + lambda zhat[i]))
/// lambda' = max(0, lambda + mu (w . zhat - beta - delta mu lambda))
/// ```
///
/// The weight update runs in log space (via [`entropy_mw_step`]) because
/// importance-weighted estimates scale like `1/p_t[a_t]`.
pub fn exp4r_update(
    state: &Exp4rState,
    yhat: &[f64],
    zhat: &[f64],
    beta: f64,
) -> Result<Exp4rState, CoreError> {
    let n = state.weights.len();
    if yhat.len() != n || zhat.len() != n {
        return Err(CoreError::dims(format!(
            "estimates have lengths {}/{} for {} experts",
            yhat.len(),
            zhat.len(),
            n
        )));
    }
    let combined: Vec<f64> = yhat
        .iter()
        .zip(zhat)
        .map(|(y, z)| y + state.lambda * z)
        .collect();
    let weights = entropy_mw_step(&state.weights, &combined, state.mu);

    let w_dot_z = state.weights.dot(zhat);
    let lambda = (state.lambda
        + state.mu * (w_dot_z - beta - state.delta * state.mu * state.lambda))
        .max(0.0);

    Ok(Exp4rState {
        weights,
        lambda,
        mu: state.mu,
        delta: state.delta,
        t: state.t + 1,
    })
}

/// Horizon-tuned schedule: `mu = sqrt(ln N / (T (K + 4)))`, `delta = 3K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp4rSchedule {
    pub mu: f64,
    pub delta: f64,
    pub warnings: Vec<String>,
}

/// Computes the schedule for a known horizon. A single-expert class gives
/// `mu = 0` and is rejected as degenerate. The guarantee's analysis wants
/// `T >= 18 ln N`; shorter horizons only warn.
pub fn schedule_for_horizon(
    horizon: u64,
    n_arms: usize,
    n_experts: usize,
) -> Result<Exp4rSchedule, CoreError> {
    if horizon == 0 || n_arms == 0 {
        return Err(CoreError::rejected("horizon and arm count must be at least 1"));
    }
    if n_experts <= 1 {
        return Err(CoreError::rejected(
            "policy class with a single expert is degenerate (mu = 0)",
        ));
    }
    let t = horizon as f64;
    let ln_n = (n_experts as f64).ln();
    let mu = (ln_n / (t * (n_arms as f64 + 4.0))).sqrt();
    let delta = 3.0 * n_arms as f64;
    let mut warnings = Vec::new();
    if t < 18.0 * ln_n {
        warnings.push(format!(
            "horizon T = {horizon} < 18 ln N = {:.3}: schedule analysis assumes a longer run",
            18.0 * ln_n
        ));
    }
    Ok(Exp4rSchedule { mu, delta, warnings })
}

/// One full EXP4.R round: mix, sample, observe the pulled arm only,
/// estimate, update. The returned record carries the pre-update dual value,
/// i.e. the one the round was played under.
pub fn exp4r_round<R: Rng + ?Sized>(
    state: &Exp4rState,
    advice: &ExpertAdvice,
    round: &BanditRound,
    rng: &mut R,
) -> Result<(Exp4rState, RoundRecord), CoreError> {
    if advice.n_arms() != round.n_arms() {
        return Err(CoreError::dims(format!(
            "advice covers {} arms, round has {}",
            advice.n_arms(),
            round.n_arms()
        )));
    }
    let p = mix_experts(&state.weights, advice)?;
    let arm = sample_categorical(&p, rng);
    let obs = round.observe(arm)?;
    let (chat, rhat) = importance_weighted(obs.cost, obs.risk, arm, &p)?;
    let (yhat, zhat) = expert_estimates(advice, &chat, &rhat)?;
    let record = RoundRecord {
        action: arm,
        cost: obs.cost,
        risk: obs.risk,
        lambda: state.lambda,
    };
    let next = exp4r_update(state, &yhat, &zhat, round.beta())?;
    Ok((next, record))
}
