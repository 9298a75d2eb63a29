//! EXP4.P.R: the high-probability variant of EXP4.R.
//!
//! Two changes against EXP4.R. First, costs, risks, and the threshold move
//! to the signed convention `[-1, 0]` (an order-preserving shift by -1 that
//! leaves every cost gap and every violation gap unchanged). Second, the
//! weight update subtracts a per-expert confidence bonus
//! `kappa * sum_k pi_i(s)[k] / p_t[k]` from the estimate exponent, which
//! buys concentration at the price of bias. The dual step is EXP4.R's
//! verbatim, and under `delta <= 1/mu^2` the dual variable provably never
//! exceeds `|beta| / (delta mu)`; that cap is asserted every round.

use rand::Rng;

use crate::error::CoreError;
use crate::exp4r::{
    expert_estimates, importance_weighted, mix_experts, BanditRound, Exp4rState, ExpertAdvice,
    Observation, RoundRecord,
};
use crate::simplex::{sample_categorical, SimplexVector};

/// Schedule and trade-off knobs for an EXP4.P.R run.
///
/// `epsilon` trades regret against violation: smaller values chase cost
/// harder, larger values enforce the risk budget harder. `nu` is the
/// failure probability of the high-probability guarantee. `lambda_max` is
/// the dual cap `|beta| / (delta mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Exp4prConfig {
    pub epsilon: f64,
    pub nu: f64,
    pub mu: f64,
    pub kappa: f64,
    pub delta: f64,
    pub beta_signed: f64,
    pub lambda_max: f64,
    pub warnings: Vec<String>,
}

impl Exp4prConfig {
    /// Horizon-tuned schedule:
    ///
    /// ```text
    /// mu    = sqrt(ln N / ((3K + 4) T))
    /// kappa = sqrt((1 + T^epsilon) ln(N / nu) / (T K))
    /// delta = K T^(1/2 - epsilon)
    /// ```
    ///
    /// `beta_signed` is the threshold already shifted into `[-1, 0]`.
    pub fn for_horizon(
        horizon: u64,
        n_arms: usize,
        n_experts: usize,
        epsilon: f64,
        nu: f64,
        beta_signed: f64,
    ) -> Result<Self, CoreError> {
        if horizon == 0 || n_arms == 0 {
            return Err(CoreError::rejected("horizon and arm count must be at least 1"));
        }
        if n_experts <= 1 {
            return Err(CoreError::rejected(
                "policy class with a single expert is degenerate (mu = 0)",
            ));
        }
        let t = horizon as f64;
        let k = n_arms as f64;
        let ln_n = (n_experts as f64).ln();
        if !(0.0 < epsilon && epsilon < 0.5) {
            return Err(CoreError::rejected(format!(
                "epsilon = {epsilon} must lie in the open interval (0, 1/2)"
            )));
        }
        if !(0.0 < nu && nu < 1.0) {
            return Err(CoreError::rejected(format!(
                "nu = {nu} must lie in the open interval (0, 1)"
            )));
        }
        let mu = (ln_n / ((3.0 * k + 4.0) * t)).sqrt();
        let kappa = ((1.0 + t.powf(epsilon)) * (n_experts as f64 / nu).ln() / (t * k)).sqrt();
        let delta = k * t.powf(0.5 - epsilon);
        Self::custom(mu, kappa, delta, epsilon, nu, beta_signed, n_arms)
    }

    /// Builds a config from explicit schedule values (override path),
    /// enforcing the same invariants as the horizon-tuned constructor.
    pub fn custom(
        mu: f64,
        kappa: f64,
        delta: f64,
        epsilon: f64,
        nu: f64,
        beta_signed: f64,
        n_arms: usize,
    ) -> Result<Self, CoreError> {
        if !(0.0 < epsilon && epsilon < 0.5) {
            return Err(CoreError::rejected(format!(
                "epsilon = {epsilon} must lie in the open interval (0, 1/2)"
            )));
        }
        if !(0.0 < nu && nu < 1.0) {
            return Err(CoreError::rejected(format!(
                "nu = {nu} must lie in the open interval (0, 1)"
            )));
        }
        if !(mu.is_finite() && mu > 0.0) || !(delta.is_finite() && delta > 0.0) {
            return Err(CoreError::rejected(format!(
                "mu = {mu} and delta = {delta} must be positive"
            )));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(CoreError::rejected(format!(
                "kappa = {kappa} must lie in (0, 1]; the horizon is too short for this schedule"
            )));
        }
        if !(-1.0..=0.0).contains(&beta_signed) {
            return Err(CoreError::rejected(format!(
                "signed threshold beta = {beta_signed} must lie in [-1, 0]"
            )));
        }
        // Precondition of the dual-cap bound.
        if delta > 1.0 / (mu * mu) {
            return Err(CoreError::rejected(format!(
                "delta = {delta} exceeds 1/mu^2 = {}; the dual cap is not guaranteed",
                1.0 / (mu * mu)
            )));
        }
        let lambda_max = beta_signed.abs() / (delta * mu);
        let mut warnings = Vec::new();
        let k = n_arms as f64;
        let denom = 2.0 / k - mu - kappa * mu;
        if denom <= 0.0 || delta < beta_signed.abs() / denom {
            warnings.push(format!(
                "delta = {delta} is below |beta|/(2/K - mu - kappa*mu); the guarantee's \
                 side condition needs a longer horizon"
            ));
        }
        Ok(Exp4prConfig {
            epsilon,
            nu,
            mu,
            kappa,
            delta,
            beta_signed,
            lambda_max,
            warnings,
        })
    }
}

/// A bandit round in the signed convention: costs and risks in `[-1, 0]^K`,
/// threshold in `[-1, 0]`. Same observation guard as [`BanditRound`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignedBanditRound {
    context: u64,
    costs: Vec<f64>,
    risks: Vec<f64>,
    beta: f64,
}

impl SignedBanditRound {
    pub fn new(
        context: u64,
        costs: Vec<f64>,
        risks: Vec<f64>,
        beta: f64,
    ) -> Result<Self, CoreError> {
        if costs.is_empty() || costs.len() != risks.len() {
            return Err(CoreError::dims(format!(
                "cost/risk vectors have lengths {}/{}",
                costs.len(),
                risks.len()
            )));
        }
        let in_range = |v: &f64| v.is_finite() && (-1.0..=0.0).contains(v);
        if !costs.iter().all(in_range) || !risks.iter().all(in_range) {
            return Err(CoreError::rejected("signed costs and risks must lie in [-1, 0]"));
        }
        if !in_range(&beta) {
            return Err(CoreError::rejected(format!(
                "signed beta = {beta} must lie in [-1, 0]"
            )));
        }
        Ok(SignedBanditRound { context, costs, risks, beta })
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

    pub fn observe(&self, arm: usize) -> Result<Observation, CoreError> {
        if arm >= self.costs.len() {
            return Err(CoreError::rejected(format!(
                "arm {arm} out of range for {} arms",
                self.costs.len()
            )));
        }
        Ok(Observation { arm, cost: self.costs[arm], risk: self.risks[arm] })
    }

    pub fn truth_costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn truth_risks(&self) -> &[f64] {
        &self.risks
    }
}

/// Shifts a `[0, 1]` round into the signed convention: `c - 1`, `r - 1`,
/// `beta - 1` componentwise. Arm orderings and every `risk - beta` gap are
/// preserved, so violation metrics agree between the two conventions.
pub fn to_signed(round: &BanditRound) -> SignedBanditRound {
    SignedBanditRound {
        context: round.context(),
        costs: round.truth_costs().iter().map(|c| c - 1.0).collect(),
        risks: round.truth_risks().iter().map(|r| r - 1.0).collect(),
        beta: round.beta() - 1.0,
    }
}

/// Per-expert confidence bonus: `bonus[i] = kappa * sum_k pi_i(s)[k] / p[k]`.
///
/// Requires `p[k] > 0` wherever any expert puts mass; forcing the uniform
/// policy into the class guarantees that. A starved arm under expert mass
/// indicates a malformed policy set and aborts with a diagnostic.
pub fn confidence_bonus(
    advice: &ExpertAdvice,
    p: &SimplexVector,
    kappa: f64,
) -> Result<Vec<f64>, CoreError> {
    if p.len() != advice.n_arms() {
        return Err(CoreError::dims(format!(
            "mixture over {} arms, advice has {}",
            p.len(),
            advice.n_arms()
        )));
    }
    let mut bonus = vec![0.0; advice.n_experts()];
    for (i, row) in advice.rows().iter().enumerate() {
        let mut sum = 0.0;
        for (k, &mass) in row.as_slice().iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if p[k] <= 0.0 {
                return Err(CoreError::invariant(format!(
                    "expert {i} puts mass on arm {k} but the mixture assigns it zero \
                     probability; is the uniform policy missing from the class?"
                )));
            }
            sum += mass / p[k];
        }
        bonus[i] = kappa * sum;
    }
    Ok(bonus)
}

/// One EXP4.P.R update. The weight exponent subtracts the bonus,
///
/// ```text
/// w'[i] prop. w[i] exp(-mu (yhat[i] + lambda zhat[i] - bonus[i]))
/// ```
///
/// and the dual step is EXP4.R's formula unchanged. Computed in log space
/// with max-subtraction; this is a deliberately separate implementation
/// from the EXP4.R weight step so the two can be checked against each
/// other at `bonus = 0`.
pub fn exp4pr_update(
    state: &Exp4rState,
    yhat: &[f64],
    zhat: &[f64],
    bonus: &[f64],
    beta: f64,
) -> Result<Exp4rState, CoreError> {
    let n = state.weights.len();
    if yhat.len() != n || zhat.len() != n || bonus.len() != n {
        return Err(CoreError::dims(format!(
            "estimates/bonus have lengths {}/{}/{} for {} experts",
            yhat.len(),
            zhat.len(),
            bonus.len(),
            n
        )));
    }
    let logs: Vec<f64> = state
        .weights
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &wi)| {
            wi.max(1e-300).ln() - state.mu * (yhat[i] + state.lambda * zhat[i] - bonus[i])
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights =
        SimplexVector::normalized(logs.iter().map(|&l| (l - m).exp()).collect())?;

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

/// One full EXP4.P.R round on a signed-convention round: mix, sample,
/// observe, estimate, bonus, update. The returned record shifts realized
/// cost and risk back into the original `[0, 1]` convention. Errors with an
/// invariant violation if the dual cap `lambda <= |beta|/(delta mu)` ever
/// breaks.
pub fn exp4pr_round<R: Rng + ?Sized>(
    state: &Exp4rState,
    advice: &ExpertAdvice,
    round: &SignedBanditRound,
    config: &Exp4prConfig,
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
    let bonus = confidence_bonus(advice, &p, config.kappa)?;
    let record = RoundRecord {
        action: arm,
        cost: obs.cost + 1.0,
        risk: obs.risk + 1.0,
        lambda: state.lambda,
    };
    let next = exp4pr_update(state, &yhat, &zhat, &bonus, round.beta())?;
    if next.lambda > config.lambda_max {
        return Err(CoreError::invariant(format!(
            "dual variable {} exceeded its cap {} at t = {}",
            next.lambda, config.lambda_max, state.t
        )));
    }
    Ok((next, record))
}
