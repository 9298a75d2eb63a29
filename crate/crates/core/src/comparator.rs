//! Hindsight comparators.
//!
//! After a run, the comparator answers "what was the best fixed decision
//! that satisfied the constraints". Two flavors: the every-round set keeps
//! only decisions satisfying each individual constraint row, and the
//! on-average set keeps decisions whose averaged constraint is satisfied.
//! The every-round set is the meaningful target; the on-average one exists
//! as a diagnostic baseline that no algorithm can compete with in general.
//!
//! All paper-level instances are linear, so the argmin reduces to a tiny
//! LP over the base set. Rows are deduplicated with exact comparison
//! before solving, which keeps the LP small even for million-round runs
//! against adversaries that only ever emit a handful of distinct rows.
//! Ties in the argmin are broken toward the lexicographically smallest
//! point so golden tests see one canonical answer.

use crate::error::CoreError;
use crate::lp::{solve, LinearConstraint, LinearProgram, LpOutcome, Relation};
use crate::mirror::FeasibleSet;

/// Whether the feasible comparator set enforces every constraint row or
/// only their average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    EveryRound,
    OnAverage,
}

#[derive(Debug, Clone)]
struct DistinctRow {
    coeffs: Vec<f64>,
    offset: f64,
}

/// Accumulated hindsight optimization problem: summed linear objective and
/// per-round linear constraint rows `coeffs . x + offset <= 0`.
///
/// The every-round row set is kept small two ways: exact duplicates
/// collapse, and on a simplex base (where every coordinate is
/// non-negative) componentwise-dominated rows are dropped because the
/// dominating row already implies them. The on-average mode works off
/// exact running sums and is unaffected by pruning.
#[derive(Debug, Clone)]
pub struct HindsightProblem {
    base: FeasibleSet,
    mode: ConstraintMode,
    objective: Vec<f64>,
    objective_offset: f64,
    rows: Vec<DistinctRow>,
    constraint_sum: Vec<f64>,
    constraint_offset_sum: f64,
    rounds: u64,
}

/// Result of the hindsight argmin.
#[derive(Debug, Clone, PartialEq)]
pub enum Hindsight {
    /// Best feasible point and its summed objective value. An infeasible
    /// problem is not an error: it certifies that the comparator set is
    /// empty and the guarantee's premise fails.
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
}

/// Result of the feasibility audit.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityAudit {
    Feasible { witness: Vec<f64> },
    Infeasible,
}

impl HindsightProblem {
    pub fn new(base: FeasibleSet, mode: ConstraintMode) -> Self {
        let n = base.dim();
        HindsightProblem {
            base,
            mode,
            objective: vec![0.0; 0],
            objective_offset: 0.0,
            rows: Vec::new(),
            constraint_sum: vec![0.0; n],
            constraint_offset_sum: 0.0,
            rounds: 0,
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Number of retained (non-redundant) distinct constraint rows.
    pub fn distinct_rows(&self) -> usize {
        self.rows.len()
    }

    /// Folds one round into the problem: the loss `loss_coeffs . x +
    /// loss_offset` joins the summed objective; the constraint row is
    /// deduplicated exactly and, on a simplex base, dropped or promoted by
    /// componentwise dominance.
    pub fn add_round(
        &mut self,
        loss_coeffs: &[f64],
        loss_offset: f64,
        constraint_coeffs: &[f64],
        constraint_offset: f64,
    ) -> Result<(), CoreError> {
        let n = self.base.dim();
        if loss_coeffs.len() != n || constraint_coeffs.len() != n {
            return Err(CoreError::dims(format!(
                "round coefficients have lengths {}/{} for base dimension {n}",
                loss_coeffs.len(),
                constraint_coeffs.len()
            )));
        }
        if loss_coeffs
            .iter()
            .chain(constraint_coeffs.iter())
            .any(|v| !v.is_finite())
            || !loss_offset.is_finite()
            || !constraint_offset.is_finite()
        {
            return Err(CoreError::rejected("non-finite round coefficients"));
        }
        if self.objective.is_empty() {
            self.objective = vec![0.0; n];
        }
        for (o, c) in self.objective.iter_mut().zip(loss_coeffs) {
            *o += c;
        }
        self.objective_offset += loss_offset;
        for (s, c) in self.constraint_sum.iter_mut().zip(constraint_coeffs) {
            *s += c;
        }
        self.constraint_offset_sum += constraint_offset;
        self.rounds += 1;

        // Exact duplicate: nothing new to retain.
        if self
            .rows
            .iter()
            .any(|r| r.offset == constraint_offset && r.coeffs.as_slice() == constraint_coeffs)
        {
            return Ok(());
        }
        // On x >= 0 a row with componentwise-larger coefficients and offset
        // implies the smaller one, so only maximal rows need solving.
        let dominates = |a: &[f64], ao: f64, b: &[f64], bo: f64| {
            ao >= bo && a.iter().zip(b).all(|(x, y)| x >= y)
        };
        if matches!(self.base, FeasibleSet::Simplex { .. }) {
            if self.rows.iter().any(|r| {
                dominates(&r.coeffs, r.offset, constraint_coeffs, constraint_offset)
            }) {
                return Ok(());
            }
            self.rows.retain(|r| {
                !dominates(constraint_coeffs, constraint_offset, &r.coeffs, r.offset)
            });
        }
        self.rows.push(DistinctRow {
            coeffs: constraint_coeffs.to_vec(),
            offset: constraint_offset,
        });
        Ok(())
    }

    /// Constraint rows in LP form (`coeffs . x <= rhs`), honoring the mode.
    fn lp_rows(&self) -> Vec<(Vec<f64>, f64)> {
        match self.mode {
            ConstraintMode::EveryRound => self
                .rows
                .iter()
                .map(|r| (r.coeffs.clone(), -r.offset))
                .collect(),
            ConstraintMode::OnAverage => {
                if self.rounds == 0 {
                    return Vec::new();
                }
                let t = self.rounds as f64;
                let coeffs: Vec<f64> = self.constraint_sum.iter().map(|s| s / t).collect();
                vec![(coeffs, -(self.constraint_offset_sum / t))]
            }
        }
    }

    /// Assembles the LP over the base set. For the box base the structural
    /// variables are shifted by the lower corner so they are non-negative;
    /// `unshift` converts an LP point back.
    fn base_lp(&self, objective: Vec<f64>, extra: Vec<LinearConstraint>) -> (LinearProgram, Vec<f64>, f64) {
        let n = self.base.dim();
        let mut constraints = Vec::new();
        let mut shift = vec![0.0; n];
        let mut value_shift = 0.0;
        match self.base {
            FeasibleSet::Simplex { .. } => {
                constraints.push(LinearConstraint {
                    coeffs: vec![1.0; n],
                    rel: Relation::Eq,
                    rhs: 1.0,
                });
            }
            FeasibleSet::Box { lower, upper, .. } => {
                shift = vec![lower; n];
                value_shift = objective.iter().map(|c| c * lower).sum();
                for i in 0..n {
                    let mut coeffs = vec![0.0; n];
                    coeffs[i] = 1.0;
                    constraints.push(LinearConstraint {
                        coeffs,
                        rel: Relation::Le,
                        rhs: upper - lower,
                    });
                }
            }
        }
        for (coeffs, rhs) in self.lp_rows() {
            let row_shift: f64 = coeffs.iter().zip(&shift).map(|(a, s)| a * s).sum();
            constraints.push(LinearConstraint {
                coeffs,
                rel: Relation::Le,
                rhs: rhs - row_shift,
            });
        }
        for c in extra {
            let row_shift: f64 = c.coeffs.iter().zip(&shift).map(|(a, s)| a * s).sum();
            constraints.push(LinearConstraint {
                coeffs: c.coeffs,
                rel: c.rel,
                rhs: c.rhs - row_shift,
            });
        }
        (LinearProgram { objective, constraints }, shift, value_shift)
    }

    fn solve_shifted(
        &self,
        objective: Vec<f64>,
        extra: Vec<LinearConstraint>,
    ) -> Result<Option<(Vec<f64>, f64)>, CoreError> {
        let (lp, shift, value_shift) = self.base_lp(objective, extra);
        match solve(&lp)? {
            LpOutcome::Optimal { x, value } => {
                let point: Vec<f64> = x.iter().zip(&shift).map(|(v, s)| v + s).collect();
                Ok(Some((point, value + value_shift)))
            }
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(CoreError::invariant(
                "hindsight LP unbounded over a bounded base set",
            )),
        }
    }

    /// Best feasible point minimizing the summed objective, with ties
    /// broken lexicographically (coordinate 0 minimized first, then 1, and
    /// so on, all while pinned to the optimal value).
    pub fn best_feasible(&self) -> Result<Hindsight, CoreError> {
        let n = self.base.dim();
        let objective = if self.objective.is_empty() {
            vec![0.0; n]
        } else {
            self.objective.clone()
        };
        let Some((_, value)) = self.solve_shifted(objective.clone(), Vec::new())? else {
            return Ok(Hindsight::Infeasible);
        };

        // Lexicographic refinement: pin the objective, then minimize each
        // coordinate in turn. The pins carry a slack comfortably above the
        // solver's pivot tolerance so rounding cannot starve phase one.
        let mut extra = vec![LinearConstraint {
            coeffs: objective.clone(),
            rel: Relation::Le,
            rhs: value - self.objective_offset + 1e-7,
        }];
        let mut point = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let Some((p, vj)) = self.solve_shifted(e.clone(), extra.clone())? else {
                return Err(CoreError::invariant(
                    "lexicographic refinement lost feasibility",
                ));
            };
            point = p;
            extra.push(LinearConstraint { coeffs: e, rel: Relation::Le, rhs: vj + 1e-7 });
        }
        Ok(Hindsight::Optimal {
            point,
            value: value + self.objective_offset,
        })
    }

    /// Feasibility audit: a witness point satisfying every stacked row, or
    /// a certificate that none exists. Tries the barycenter first (the
    /// natural witness for symmetric constructions), then a phase-one LP.
    pub fn audit_feasibility(&self) -> Result<FeasibilityAudit, CoreError> {
        let n = self.base.dim();
        let bary = self.base.barycenter();
        let rows = self.lp_rows();
        if rows
            .iter()
            .all(|(coeffs, rhs)| coeffs.iter().zip(&bary).map(|(a, x)| a * x).sum::<f64>() <= rhs + 1e-12)
        {
            return Ok(FeasibilityAudit::Feasible { witness: bary });
        }
        match self.solve_shifted(vec![0.0; n], Vec::new())? {
            Some((point, _)) => Ok(FeasibilityAudit::Feasible { witness: point }),
            None => Ok(FeasibilityAudit::Infeasible),
        }
    }
}
