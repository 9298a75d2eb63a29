//! Mirror maps and Bregman geometry.
//!
//! A mirror map is a strongly convex regularizer `R` whose gradient carries
//! primal points into the dual space and back. The two instances used here
//! are the squared Euclidean norm (modulus 1 w.r.t. the l2 norm) and the
//! negative entropy (modulus 1 w.r.t. the l1 norm on the simplex, by
//! Pinsker's inequality). Dual norms pair accordingly: l2 with l2, l1 with
//! l-infinity.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Floor applied to coordinates before taking logarithms under the entropy
/// map. Perturbations at this scale sit far below every test tolerance
/// while keeping `ln` finite.
const ENTROPY_LOG_FLOOR: f64 = 1e-300;

/// Feasible decision sets with Bregman-projection support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibleSet {
    /// Probability simplex in `n` coordinates.
    Simplex { n: usize },
    /// Axis-aligned box `[lower, upper]^n`.
    Box { lower: f64, upper: f64, n: usize },
}

impl FeasibleSet {
    pub fn simplex(n: usize) -> Self {
        FeasibleSet::Simplex { n }
    }

    pub fn boxed(lower: f64, upper: f64, n: usize) -> Result<Self, CoreError> {
        if !(lower.is_finite() && upper.is_finite()) || lower > upper || n == 0 {
            return Err(CoreError::rejected(format!(
                "empty or malformed box [{lower}, {upper}]^{n}"
            )));
        }
        Ok(FeasibleSet::Box { lower, upper, n })
    }

    pub fn dim(&self) -> usize {
        match *self {
            FeasibleSet::Simplex { n } => n,
            FeasibleSet::Box { n, .. } => n,
        }
    }

    /// Membership test, consistent with projection output at 1e-9 slack.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match *self {
            FeasibleSet::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                x.iter().all(|&v| v >= -1e-9) && (sum - 1.0).abs() <= 1e-9
            }
            FeasibleSet::Box { lower, upper, .. } => {
                x.iter().all(|&v| v >= lower - 1e-9 && v <= upper + 1e-9)
            }
        }
    }

    /// Barycenter: uniform vector for the simplex, midpoint for the box.
    pub fn barycenter(&self) -> Vec<f64> {
        match *self {
            FeasibleSet::Simplex { n } => vec![1.0 / n as f64; n],
            FeasibleSet::Box { lower, upper, n } => vec![0.5 * (lower + upper); n],
        }
    }
}

/// Which of the two supported mirror maps a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorMapKind {
    Euclidean,
    NegativeEntropy,
}

/// A strongly convex regularizer with the operations mirror descent needs:
/// value, gradient, inverse gradient, and Bregman projection onto a
/// feasible set.
pub trait MirrorMap {
    /// Strong-convexity modulus with respect to the map's associated norm.
    fn strong_convexity(&self) -> f64;

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    /// Inverse of the gradient map: returns x with grad(x) = y.
    fn grad_inv(&self, y: &[f64]) -> Vec<f64>;

    /// Bregman projection of `y` onto `set`.
    fn project(&self, set: &FeasibleSet, y: &[f64]) -> Result<Vec<f64>, CoreError>;

    /// The norm the strong-convexity modulus refers to.
    fn norm(&self, x: &[f64]) -> f64;

    fn kind(&self) -> MirrorMapKind;
}

/// Bregman divergence `D_R(x, y) = R(x) - R(y) - <grad R(y), x - y>`.
///
/// Under the entropy map both arguments must have strictly positive
/// coordinates; a zero coordinate is rejected rather than clamped because a
/// divergence query is a measurement, not an update step.
pub fn bregman_divergence(map: &dyn MirrorMap, x: &[f64], y: &[f64]) -> Result<f64, CoreError> {
    if x.len() != y.len() {
        return Err(CoreError::dims(format!(
            "divergence arguments have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(CoreError::rejected("divergence arguments must be finite"));
    }
    if map.kind() == MirrorMapKind::NegativeEntropy
        && x.iter().chain(y.iter()).any(|&v| v <= 0.0)
    {
        return Err(CoreError::rejected(
            "entropy-map divergence requires strictly positive coordinates",
        ));
    }
    let gy = map.grad(y);
    let inner: f64 = gy.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).sum();
    Ok(map.value(x) - map.value(y) - inner)
}

/// Bregman projection of `y` onto `set` under `map`. Thin wrapper over the
/// map's own projection that front-loads the finiteness check.
pub fn bregman_project(
    map: &dyn MirrorMap,
    set: &FeasibleSet,
    y: &[f64],
) -> Result<Vec<f64>, CoreError> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::rejected("projection input must be finite"));
    }
    if y.len() != set.dim() {
        return Err(CoreError::dims(format!(
            "projection input has length {}, set dimension is {}",
            y.len(),
            set.dim()
        )));
    }
    map.project(set, y)
}

/// `R(x) = 0.5 ||x||_2^2`. Gradient is the identity, so mirror steps reduce
/// to plain (projected) gradient descent.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanMap;

impl MirrorMap for EuclideanMap {
    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn grad_inv(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }

    fn project(&self, set: &FeasibleSet, y: &[f64]) -> Result<Vec<f64>, CoreError> {
        match *set {
            FeasibleSet::Simplex { .. } => Ok(project_simplex_euclidean(y)),
            FeasibleSet::Box { lower, upper, .. } => {
                Ok(y.iter().map(|&v| v.clamp(lower, upper)).collect())
            }
        }
    }

    fn norm(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn kind(&self) -> MirrorMapKind {
        MirrorMapKind::Euclidean
    }
}

/// `R(x) = sum_i x_i ln x_i`. Its Bregman divergence on the simplex is the
/// KL divergence, and its simplex projection is plain l1 renormalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegEntropyMap;

impl MirrorMap for NegEntropyMap {
    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .map(|&v| {
                if v <= 0.0 {
                    0.0 // lim_{v -> 0+} v ln v
                } else {
                    v * v.ln()
                }
            })
            .sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| v.max(ENTROPY_LOG_FLOOR).ln() + 1.0).collect()
    }

    fn grad_inv(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| (v - 1.0).exp()).collect()
    }

    fn project(&self, set: &FeasibleSet, y: &[f64]) -> Result<Vec<f64>, CoreError> {
        match *set {
            // KL projection of a positive vector onto the simplex is exact
            // l1 renormalization.
            FeasibleSet::Simplex { .. } => {
                if y.iter().any(|&v| v < 0.0) {
                    return Err(CoreError::rejected(
                        "entropy-map projection requires non-negative input",
                    ));
                }
                let sum: f64 = y.iter().sum();
                if sum <= 0.0 {
                    return Err(CoreError::rejected(
                        "entropy-map projection input has zero mass",
                    ));
                }
                Ok(y.iter().map(|&v| v / sum).collect())
            }
            // KL projection onto a box separates per coordinate and reduces
            // to clamping.
            FeasibleSet::Box { lower, upper, .. } => {
                Ok(y.iter().map(|&v| v.clamp(lower, upper)).collect())
            }
        }
    }

    fn norm(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn kind(&self) -> MirrorMapKind {
        MirrorMapKind::NegativeEntropy
    }
}

/// Returns the mirror map instance for `kind`.
pub fn map_for(kind: MirrorMapKind) -> &'static dyn MirrorMap {
    match kind {
        MirrorMapKind::Euclidean => &EuclideanMap,
        MirrorMapKind::NegativeEntropy => &NegEntropyMap,
    }
}

/// Exact Euclidean projection onto the probability simplex via the
/// sort-based algorithm: sort descending, find the pivot index rho, shift
/// by the threshold, clip at zero. O(n log n).
pub fn project_simplex_euclidean(y: &[f64]) -> Vec<f64> {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Magnitude bounds a schedule needs: Bregman diameter `b`, decision norm
/// bound `x`, loss bound `f`, constraint bound `d`, dual-norm gradient
/// bound `g`, and the strong-convexity modulus `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcpBounds {
    pub b: f64,
    pub x: f64,
    pub f: f64,
    pub d: f64,
    pub g: f64,
    pub alpha: f64,
}

impl OcpBounds {
    pub fn new(b: f64, x: f64, f: f64, d: f64, g: f64, alpha: f64) -> Result<Self, CoreError> {
        let fields = [("b", b), ("x", x), ("f", f), ("d", d), ("g", g), ("alpha", alpha)];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(CoreError::rejected(format!(
                    "bound {name} = {v} must be strictly positive and finite"
                )));
            }
        }
        Ok(OcpBounds { b, x, f, d, g, alpha })
    }

    /// Bounds for linear losses/constraints with coefficients in
    /// `[-coeff_bound, coeff_bound]` over the simplex in `n` coordinates.
    ///
    /// The Bregman diameter is taken from the barycenter start: 0.5 times
    /// the squared l2 diameter for the Euclidean map, ln(n) for the entropy
    /// map (max KL against the uniform initializer).
    pub fn linear_on_simplex(
        kind: MirrorMapKind,
        n: usize,
        coeff_bound: f64,
    ) -> Result<Self, CoreError> {
        let (b, g, x) = match kind {
            MirrorMapKind::Euclidean => {
                (1.0, coeff_bound * (n as f64).sqrt(), 1.0)
            }
            MirrorMapKind::NegativeEntropy => (((n.max(2)) as f64).ln(), coeff_bound, 1.0),
        };
        OcpBounds::new(b, x, coeff_bound.max(1.0), coeff_bound.max(1.0), g, 1.0)
    }
}
