//! Online convex programming with adversarial per-round constraints.
//!
//! Each round delivers a convex loss `l_t` and a convex constraint
//! `f_t(x) <= 0`. The learner folds the constraint into a composite loss
//!
//! ```text
//! L_t(x, lambda) = l_t(x) + lambda * f_t(x) - (delta*mu/2) * lambda^2
//! ```
//!
//! and runs mirror descent on `x` against `L_t(., lambda_t)` while running
//! projected gradient ascent on the dual scalar `lambda` against
//! `L_t(x_t, .)`. Both updates read the pre-step pair `(x_t, lambda_t)`:
//! the primal and dual moves are simultaneous no-regret procedures, not a
//! Gauss-Seidel sweep.

use crate::error::CoreError;
use crate::mirror::{bregman_project, FeasibleSet, MirrorMap, OcpBounds};
use crate::simplex::SimplexVector;

/// A convex function exposed through value and gradient oracles.
pub trait ConvexOracle {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
}

/// Affine function `coeffs . x + offset`. Every environment in this crate
/// emits losses and constraints of this form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOracle {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl LinearOracle {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        LinearOracle { coeffs, offset }
    }
}

impl ConvexOracle for LinearOracle {
    fn value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.offset
    }

    fn grad(&self, _x: &[f64]) -> Vec<f64> {
        self.coeffs.clone()
    }
}

/// One full-information round: a loss oracle and a constraint oracle.
pub struct ConstrainedRound<'a> {
    pub loss: &'a dyn ConvexOracle,
    pub constraint: &'a dyn ConvexOracle,
}

/// Primal decision, dual scalar, and the schedule they evolve under.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualState {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub t: u64,
}

impl PrimalDualState {
    /// Starts at the barycenter of the feasible set with a zero dual. The
    /// barycenter minimizes the worst-case Bregman distance to the
    /// comparator over both supported sets.
    pub fn init(set: &FeasibleSet, mu: f64, delta: f64) -> Result<Self, CoreError> {
        if !(mu.is_finite() && mu > 0.0) || !(delta.is_finite() && delta > 0.0) {
            return Err(CoreError::rejected(format!(
                "step size mu = {mu} and dual regularization delta = {delta} must be positive"
            )));
        }
        Ok(PrimalDualState {
            x: set.barycenter(),
            lambda: 0.0,
            mu,
            delta,
            t: 0,
        })
    }
}

/// `L_t(x, lambda) = l_t(x) + lambda f_t(x) - (delta mu / 2) lambda^2`.
pub fn composite_loss(
    round: &ConstrainedRound,
    x: &[f64],
    lambda: f64,
    mu: f64,
    delta: f64,
) -> f64 {
    round.loss.value(x) + lambda * round.constraint.value(x)
        - 0.5 * delta * mu * lambda * lambda
}

/// Gradient of the composite loss in `x`: `grad l_t(x) + lambda grad f_t(x)`.
pub fn primal_grad(round: &ConstrainedRound, x: &[f64], lambda: f64) -> Vec<f64> {
    let gl = round.loss.grad(x);
    let gf = round.constraint.grad(x);
    gl.iter().zip(gf).map(|(a, b)| a + lambda * b).collect()
}

/// Derivative of the composite loss in `lambda`: `f_t(x) - delta mu lambda`.
pub fn dual_grad(round: &ConstrainedRound, x: &[f64], lambda: f64, mu: f64, delta: f64) -> f64 {
    round.constraint.value(x) - delta * mu * lambda
}

/// One simultaneous saddle-point step.
///
/// Primal: `grad R(x~) = grad R(x_t) - mu * primal_grad`, then Bregman
/// projection onto the feasible set. Dual: `lambda' = max(0, lambda_t + mu *
/// dual_grad)`. Both sides evaluate at the old `(x_t, lambda_t)`.
pub fn omd_step(
    map: &dyn MirrorMap,
    set: &FeasibleSet,
    state: &PrimalDualState,
    round: &ConstrainedRound,
) -> Result<PrimalDualState, CoreError> {
    let g = primal_grad(round, &state.x, state.lambda);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::invariant(format!(
            "non-finite primal gradient at t = {}: {g:?}",
            state.t
        )));
    }
    let dual_point: Vec<f64> = map
        .grad(&state.x)
        .iter()
        .zip(&g)
        .map(|(r, gi)| r - state.mu * gi)
        .collect();
    let x_next = bregman_project(map, set, &map.grad_inv(&dual_point))?;

    let dg = dual_grad(round, &state.x, state.lambda, state.mu, state.delta);
    if !dg.is_finite() {
        return Err(CoreError::invariant(format!(
            "non-finite dual gradient at t = {}",
            state.t
        )));
    }
    let lambda_next = (state.lambda + state.mu * dg).max(0.0);

    Ok(PrimalDualState {
        x: x_next,
        lambda: lambda_next,
        mu: state.mu,
        delta: state.delta,
        t: state.t + 1,
    })
}

/// Closed-form multiplicative-weights step on the simplex:
/// `x'[i] = x[i] exp(-mu g[i]) / sum_j x[j] exp(-mu g[j])`,
/// computed in log space with max-subtraction so that importance-weighted
/// gradients (which scale like 1/p) cannot overflow the exponentials.
pub fn entropy_mw_step(x: &SimplexVector, grad: &[f64], mu: f64) -> SimplexVector {
    debug_assert_eq!(x.len(), grad.len());
    let logs: Vec<f64> = x
        .as_slice()
        .iter()
        .zip(grad)
        .map(|(&xi, &gi)| xi.max(1e-300).ln() - mu * gi)
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    SimplexVector::normalized(weights).expect("max-subtracted weights always carry mass")
}

/// Horizon-tuned schedule: `mu = sqrt(B / (T (D^2 + G^2/alpha)))` and
/// `delta = 2 G^2 / alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpSchedule {
    pub mu: f64,
    pub delta: f64,
    /// Soft diagnostics: conditions the guarantee's analysis assumes for
    /// large horizons but that a short run may not meet.
    pub warnings: Vec<String>,
}

/// Computes the schedule for a known horizon. The dual-regularization
/// inequality `delta >= delta^2 mu^2 + G^2/alpha` behind the guarantee
/// needs `T >= 4B`; shorter horizons get a warning, not an error.
pub fn schedule_for_horizon(horizon: u64, bounds: &OcpBounds) -> Result<OcpSchedule, CoreError> {
    if horizon == 0 {
        return Err(CoreError::rejected("horizon must be at least 1"));
    }
    let t = horizon as f64;
    let g2_over_alpha = bounds.g * bounds.g / bounds.alpha;
    let mu = (bounds.b / (t * (bounds.d * bounds.d + g2_over_alpha))).sqrt();
    let delta = 2.0 * g2_over_alpha;
    let mut warnings = Vec::new();
    if t < 4.0 * bounds.b {
        warnings.push(format!(
            "horizon T = {horizon} < 4B = {}: the dual-regularization inequality may not hold",
            4.0 * bounds.b
        ));
    }
    Ok(OcpSchedule { mu, delta, warnings })
}
