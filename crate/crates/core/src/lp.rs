//! Embedded linear-programming solver: a dense two-phase simplex.
//!
//! The pivot rule is Bland's rule (lowest eligible index enters; among tied
//! minimum ratios the row whose basic variable has the lowest index leaves),
//! which cannot cycle and makes every solve deterministic. No external
//! solver process is involved anywhere in the crate.
//!
//! Variables carry bounds `lo ≤ x ≤ hi` with `lo` finite (default `0`) and
//! `hi` possibly infinite; internally everything is shifted to the standard
//! form `u ≥ 0`, finite upper bounds become extra rows, and each constraint
//! row receives a slack or surplus column as needed.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    cmp: Cmp,
    rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

/// Whether the returned point is certified optimal or only feasible
/// (iteration cap reached before optimality).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal,
    IterationCapped,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub outcome: LpOutcome,
}

impl LinearProgram {
    /// A minimization problem over `n` variables, all initially `x ≥ 0`
    /// with zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            n,
            objective: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    /// `lo` must be finite; `hi` may be `f64::INFINITY`.
    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.lower[var] = lo;
        self.upper[var] = hi;
    }

    /// Add `Σ coeffs · x  cmp  rhs`. Duplicate variable indices merge.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(Row { coeffs, cmp, rhs });
    }

    fn validate(&self) -> Result<()> {
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() {
                return Err(Error::invalid(format!("variable {j}: lower bound must be finite")));
            }
            if hi < lo {
                return Err(Error::invalid(format!("variable {j}: empty bound interval")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::invalid(format!("row {i}: non-finite right-hand side")));
            }
            for &(j, c) in &row.coeffs {
                if j >= self.n {
                    return Err(Error::invalid(format!("row {i}: variable index {j} out of range")));
                }
                if !c.is_finite() {
                    return Err(Error::invalid(format!("row {i}: non-finite coefficient")));
                }
            }
        }
        for (j, c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::invalid(format!("objective {j}: non-finite coefficient")));
            }
        }
        Ok(())
    }

    /// Minimize the objective. `tol` is the optimality/feasibility
    /// tolerance on reduced costs and phase-1 residuals.
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<LpSolution> {
        self.validate()?;
        const PIVOT_EPS: f64 = 1e-11;

        // Shift to u = x − lo ≥ 0; finite upper bounds become rows.
        let n = self.n;
        let mut dense_rows: Vec<(Vec<f64>, Cmp, f64)> = Vec::new();
        for row in &self.rows {
            let mut dense = vec![0.0; n];
            let mut shift = 0.0;
            for &(j, c) in &row.coeffs {
                dense[j] += c;
            }
            for (j, d) in dense.iter().enumerate() {
                shift += d * self.lower[j];
            }
            dense_rows.push((dense, row.cmp, row.rhs - shift));
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut dense = vec![0.0; n];
                dense[j] = 1.0;
                dense_rows.push((dense, Cmp::Le, self.upper[j] - self.lower[j]));
            }
        }

        // Standard form with slacks, then artificials for every row.
        let m = dense_rows.len();
        let n_slack = dense_rows
            .iter()
            .filter(|(_, cmp, _)| !matches!(cmp, Cmp::Eq))
            .count();
        let art_start = n + n_slack;
        let ncols = art_start + m;
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut b: Vec<f64> = Vec::with_capacity(m);
        let mut slack_idx = n;
        for (i, (dense, cmp, rhs)) in dense_rows.into_iter().enumerate() {
            let mut row = vec![0.0; ncols];
            row[..n].copy_from_slice(&dense);
            match cmp {
                Cmp::Le => {
                    row[slack_idx] = 1.0;
                    slack_idx += 1;
                }
                Cmp::Ge => {
                    row[slack_idx] = -1.0;
                    slack_idx += 1;
                }
                Cmp::Eq => {}
            }
            let mut rhs = rhs;
            if rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            row[art_start + i] = 1.0;
            a.push(row);
            b.push(rhs);
        }
        let mut basis: Vec<usize> = (art_start..art_start + m).collect();

        // Phase 1: minimize the sum of artificials.
        let mut cost = vec![0.0; ncols];
        for c in cost.iter_mut().skip(art_start) {
            *c = 1.0;
        }
        let mut cost_rhs = 0.0;
        for i in 0..m {
            // Artificial i is basic with cost 1: eliminate it from the cost row.
            for j in 0..ncols {
                cost[j] -= a[i][j];
            }
            cost_rhs -= b[i];
        }
        let mut iters = 0usize;
        pivot_loop(
            &mut a, &mut b, &mut cost, &mut cost_rhs, &mut basis, ncols, tol, PIVOT_EPS,
            max_iter, &mut iters,
        )?;
        let phase1_obj = -cost_rhs;
        if phase1_obj > tol.max(1e-9) {
            return Err(Error::Solver(format!(
                "infeasible linear program (phase-1 residual {phase1_obj:.3e})"
            )));
        }

        // Drive leftover artificials out of the basis; drop redundant rows.
        let mut keep: Vec<bool> = vec![true; a.len()];
        for i in 0..a.len() {
            if basis[i] >= art_start {
                let piv = (0..art_start).find(|&j| a[i][j].abs() > PIVOT_EPS);
                match piv {
                    Some(j) => {
                        do_pivot(&mut a, &mut b, &mut cost, &mut cost_rhs, &mut basis, i, j);
                    }
                    None => keep[i] = false,
                }
            }
        }
        let mut kept_a = Vec::new();
        let mut kept_b = Vec::new();
        let mut kept_basis = Vec::new();
        for i in 0..a.len() {
            if keep[i] {
                let mut row = std::mem::take(&mut a[i]);
                row.truncate(art_start);
                kept_a.push(row);
                kept_b.push(b[i]);
                kept_basis.push(basis[i]);
            }
        }
        let mut a = kept_a;
        let mut b = kept_b;
        let mut basis = kept_basis;
        let ncols = art_start;

        // Phase 2: original objective on the shifted variables.
        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&self.objective);
        let mut cost_rhs = 0.0;
        for i in 0..a.len() {
            let cb = cost[basis[i]];
            if cb != 0.0 {
                for j in 0..ncols {
                    cost[j] -= cb * a[i][j];
                }
                cost_rhs -= cb * b[i];
            }
        }
        let capped = pivot_loop(
            &mut a, &mut b, &mut cost, &mut cost_rhs, &mut basis, ncols, tol, PIVOT_EPS,
            max_iter, &mut iters,
        )?;

        let mut u = vec![0.0; ncols];
        for (i, &bv) in basis.iter().enumerate() {
            u[bv] = b[i];
        }
        let mut x = Vec::with_capacity(n);
        for ((&lo, &hi), &uj) in self.lower.iter().zip(&self.upper).zip(&u) {
            // Basic values can carry −1e−16-scale noise; bounds are hard.
            x.push((lo + uj.max(0.0)).min(hi));
        }
        let objective = self
            .objective
            .iter()
            .zip(&x)
            .map(|(c, v)| c * v)
            .sum();
        Ok(LpSolution {
            x,
            objective,
            outcome: if capped { LpOutcome::IterationCapped } else { LpOutcome::Optimal },
        })
    }
}

/// Run Bland-rule pivots until optimal (returns `false`), the iteration cap
/// is hit (returns `true`), or unboundedness is proven (error).
#[allow(clippy::too_many_arguments)]
fn pivot_loop(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    cost: &mut [f64],
    cost_rhs: &mut f64,
    basis: &mut [usize],
    ncols: usize,
    tol: f64,
    pivot_eps: f64,
    max_iter: usize,
    iters: &mut usize,
) -> Result<bool> {
    loop {
        if *iters >= max_iter {
            return Ok(true);
        }
        *iters += 1;
        // Bland: lowest-index column with a negative reduced cost enters.
        let Some(enter) = (0..ncols).find(|&j| cost[j] < -tol) else {
            return Ok(false);
        };
        // Ratio test; ties resolved toward the lowest basic variable index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..a.len() {
            let coef = a[i][enter];
            if coef > pivot_eps {
                let ratio = b[i] / coef;
                let better = match leave {
                    None => true,
                    Some(cur) => {
                        ratio < best - 1e-12
                            || (ratio < best + 1e-12 && basis[i] < basis[cur])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::Solver("unbounded linear program".into()));
        };
        do_pivot_full(a, b, cost, cost_rhs, basis, leave, enter);
    }
}

fn do_pivot_full(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    cost: &mut [f64],
    cost_rhs: &mut f64,
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    let piv = a[row][col];
    for v in a[row].iter_mut() {
        *v /= piv;
    }
    b[row] /= piv;
    a[row][col] = 1.0; // cancel roundoff on the pivot itself
    for i in 0..a.len() {
        if i != row {
            let factor = a[i][col];
            if factor != 0.0 {
                for j in 0..a[i].len() {
                    a[i][j] -= factor * a[row][j];
                }
                a[i][col] = 0.0;
                b[i] -= factor * b[row];
                if b[i] < 0.0 && b[i] > -1e-12 {
                    b[i] = 0.0;
                }
            }
        }
    }
    let factor = cost[col];
    if factor != 0.0 {
        for j in 0..cost.len() {
            cost[j] -= factor * a[row][j];
        }
        cost[col] = 0.0;
        *cost_rhs -= factor * b[row];
    }
    basis[row] = col;
}

fn do_pivot(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    cost: &mut [f64],
    cost_rhs: &mut f64,
    basis: &mut [usize],
    row: usize,
    col: usize,
) {
    do_pivot_full(a, b, cost, cost_rhs, basis, row, col);
}
