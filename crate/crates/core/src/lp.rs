//! Dense two-phase primal simplex solver for the tiny linear programs the
//! hindsight comparators produce (a handful of variables, a handful of
//! deduplicated rows).
//!
//! Variables are implicitly non-negative. Rows are `a . x <= b` or
//! `a . x = b`. Phase one minimizes the sum of artificial variables to find
//! a starting basis or certify infeasibility; phase two minimizes the real
//! objective. Entering columns follow Bland's rule (lowest eligible index)
//! and ratio ties leave the row whose basic variable has the lowest index,
//! which rules out cycling and makes every solve deterministic.

use crate::error::CoreError;

/// Pivot and reduced-cost tolerance. Instances here are well-scaled
/// (coefficients of order one), so a single absolute tolerance suffices.
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Minimize `objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// m rows by `cols` columns, kept fully dense.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    n_structural: usize,
    /// First artificial column index; columns from here on are banned in
    /// phase two.
    artificial_start: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Tableau, CoreError> {
        let n = lp.objective.len();
        for (i, c) in lp.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(CoreError::dims(format!(
                    "constraint {i} has {} coefficients for {} variables",
                    c.coeffs.len(),
                    n
                )));
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(CoreError::rejected("non-finite constraint data"));
            }
        }
        if lp.objective.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::rejected("non-finite objective"));
        }

        let m = lp.constraints.len();
        let n_slacks = lp
            .constraints
            .iter()
            .filter(|c| c.rel == Relation::Le)
            .count();

        // Lay out columns as [structural | slacks | artificials]; the
        // artificial block is sized after we know which rows need one.
        let slack_start = n;
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = vec![usize::MAX; m];
        let mut needs_artificial = Vec::new();

        let mut slack_idx = 0;
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![0.0; n + n_slacks];
            row[..n].copy_from_slice(&c.coeffs);
            let mut b = c.rhs;
            let mut slack_col = None;
            if c.rel == Relation::Le {
                let col = slack_start + slack_idx;
                slack_idx += 1;
                row[col] = 1.0;
                slack_col = Some(col);
            }
            if b < 0.0 {
                for v in &mut row {
                    *v = -*v;
                }
                b = -b;
                // A negated slack coefficient cannot serve as a basic
                // column.
                slack_col = None;
            }
            match slack_col {
                Some(col) => basis[i] = col,
                None => needs_artificial.push(i),
            }
            rows.push(row);
            rhs.push(b);
        }

        let artificial_start = n + n_slacks;
        let cols = artificial_start + needs_artificial.len();
        for row in &mut rows {
            row.resize(cols, 0.0);
        }
        for (j, &i) in needs_artificial.iter().enumerate() {
            rows[i][artificial_start + j] = 1.0;
            basis[i] = artificial_start + j;
        }

        Ok(Tableau {
            rows,
            rhs,
            basis,
            n_structural: n,
            artificial_start,
            cols,
        })
    }

    /// Reduced-cost row for objective `c` (zero-padded past the structural
    /// block unless `c` covers more), priced out against the current basis.
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let mut reduced: Vec<f64> = (0..self.cols)
            .map(|j| c.get(j).copied().unwrap_or(0.0))
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (rc, v) in reduced.iter_mut().zip(&self.rows[i]) {
                    *rc -= cb * v;
                }
            }
        }
        reduced
    }

    fn pivot(&mut self, r: usize, e: usize, reduced: &mut [f64]) {
        let piv = self.rows[r][e];
        for v in &mut self.rows[r] {
            *v /= piv;
        }
        self.rhs[r] /= piv;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e];
            if f != 0.0 {
                for j in 0..self.cols {
                    self.rows[i][j] -= f * self.rows[r][j];
                }
                self.rhs[i] -= f * self.rhs[r];
            }
        }
        let f = reduced[e];
        if f != 0.0 {
            for (rc, v) in reduced.iter_mut().zip(&self.rows[r]) {
                *rc -= f * v;
            }
        }
        self.basis[r] = e;
    }

    /// Bland-rule simplex iterations on the current tableau. `allowed`
    /// bounds the entering column range (used to exclude artificials in
    /// phase two). Returns false when the problem is unbounded.
    fn iterate(&mut self, reduced: &mut [f64], allowed: usize) -> Result<bool, CoreError> {
        let max_iters = 1000 + 200 * (self.cols + self.rows.len());
        for _ in 0..max_iters {
            // Entering: lowest index with a negative reduced cost.
            let Some(e) = (0..allowed).find(|&j| reduced[j] < -EPS) else {
                return Ok(true);
            };
            // Leaving: minimum ratio, ties to the lowest basic variable.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > EPS {
                    let ratio = self.rhs[i] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS
                                || ((ratio - lr).abs() <= EPS
                                    && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, e, reduced);
        }
        Err(CoreError::invariant(
            "simplex iteration cap exceeded; Bland's rule should have terminated",
        ))
    }

    fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_structural {
                x[b] = self.rhs[i];
            }
        }
        x
    }
}

/// Solves the program. Deterministic: identical inputs take identical
/// pivot sequences.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, CoreError> {
    let mut t = Tableau::build(lp)?;

    // Phase one: minimize the artificial sum.
    if t.artificial_start < t.cols {
        let mut phase1 = vec![0.0; t.cols];
        for c in &mut phase1[t.artificial_start..] {
            *c = 1.0;
        }
        let mut reduced = t.reduced_costs(&phase1);
        let bounded = t.iterate(&mut reduced, t.cols)?;
        debug_assert!(bounded, "phase-one objective is bounded below by zero");
        let infeas: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| b >= t.artificial_start)
            .map(|(_, &v)| v)
            .sum();
        if infeas > EPS {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive any zero-valued artificial out of the basis when a
        // non-artificial pivot exists; otherwise the row is redundant and
        // the artificial stays parked at zero.
        for i in 0..t.rows.len() {
            if t.basis[i] >= t.artificial_start {
                if let Some(e) = (0..t.artificial_start).find(|&j| t.rows[i][j].abs() > EPS) {
                    let mut dummy = vec![0.0; t.cols];
                    t.pivot(i, e, &mut dummy);
                }
            }
        }
    }

    // Phase two: the real objective, artificials banned.
    let mut reduced = t.reduced_costs(&lp.objective);
    let bounded = t.iterate(&mut reduced, t.artificial_start)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }
    let x = t.solution();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: &[f64], rhs: f64) -> LinearConstraint {
        LinearConstraint { coeffs: coeffs.to_vec(), rel: Relation::Le, rhs }
    }

    fn eq(coeffs: &[f64], rhs: f64) -> LinearConstraint {
        LinearConstraint { coeffs: coeffs.to_vec(), rel: Relation::Eq, rhs }
    }

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        match solve(lp).unwrap() {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn vertex_optimum_on_the_simplex() {
        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0)],
        };
        let (x, value) = optimal(&lp);
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn capped_vertex_moves_to_the_constraint() {
        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0), le(&[1.0, 0.0], 0.5)],
        };
        let (x, value) = optimal(&lp);
        assert!((x[0] - 0.5).abs() < 1e-9);
        assert!((x[1] - 0.5).abs() < 1e-9);
        assert!((value + 0.5).abs() < 1e-9);
    }

    #[test]
    fn contradictory_caps_are_infeasible() {
        // x0 <= 0.2 and x0 >= 0.8 on the simplex.
        let lp = LinearProgram {
            objective: vec![0.0, 0.0],
            constraints: vec![
                eq(&[1.0, 1.0], 1.0),
                le(&[1.0, 0.0], 0.2),
                le(&[-1.0, 0.0], -0.8),
            ],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn negative_rhs_rows_are_handled() {
        // x0 >= 0.3 written as -x0 <= -0.3.
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0), le(&[-1.0, 0.0], -0.3)],
        };
        let (x, value) = optimal(&lp);
        assert!((x[0] - 0.3).abs() < 1e-9);
        assert!((value - 0.3).abs() < 1e-9);
    }

    #[test]
    fn unbounded_direction_is_reported() {
        let lp = LinearProgram {
            objective: vec![-1.0],
            constraints: vec![],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // The classic tableau that cycles under the most-negative rule;
        // Bland's rule must reach the optimum value -1/20.
        let lp = LinearProgram {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            constraints: vec![
                le(&[0.25, -60.0, -0.04, 9.0], 0.0),
                le(&[0.5, -90.0, -0.02, 3.0], 0.0),
                le(&[0.0, 0.0, 1.0, 0.0], 1.0),
            ],
        };
        let (_, value) = optimal(&lp);
        assert!((value + 0.05).abs() < 1e-9, "value = {value}");
    }

    #[test]
    fn redundant_equality_rows_do_not_block() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0), eq(&[2.0, 2.0], 2.0)],
        };
        let (x, value) = optimal(&lp);
        assert!((value - 1.0).abs() < 1e-9);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_row_with_zero_rhs_is_feasible() {
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            constraints: vec![eq(&[1.0, 1.0], 1.0), le(&[0.0, 0.0], 0.0)],
        };
        let (x, _) = optimal(&lp);
        assert!((x[0]).abs() < 1e-9);
    }

    #[test]
    fn solves_are_deterministic() {
        let lp = LinearProgram {
            objective: vec![-1.0, -1.0, 0.0],
            constraints: vec![
                eq(&[1.0, 1.0, 1.0], 1.0),
                le(&[1.0, 0.0, 0.0], 0.4),
                le(&[0.0, 1.0, 0.0], 0.4),
            ],
        };
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a, b);
    }
}
