//! A deliberately naive exact-rational two-phase simplex.
//!
//! Minimizes `c·x` subject to `Ax {≤,=,≥} b`, `x ≥ 0`, entirely in
//! `BigRational` arithmetic. Bland's rule guarantees termination, and
//! exact arithmetic removes every tolerance question: an optimum reported
//! here is the true optimum of the stated program. Dense tableau, no
//! cleverness — slowness is the price of trustworthiness.

use num::rational::BigRational;
use num::{BigInt, Signed, Zero};

use crate::OracleError;

pub type Rat = BigRational;

/// Exact rational from a numerator/denominator pair.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Exact rational from an integer.
/// Nearest `f64` to an exact rational, for comparing exact optima against
/// floating-point solver output.
pub fn to_f64(r: &Rat) -> f64 {
    use num::ToPrimitive;
    r.to_f64().expect("rational fits in f64")
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

/// `min c·x  s.t.  Ax {≤,=,≥} b,  x ≥ 0`, all data exact rationals.
pub struct ExactProgram {
    n: usize,
    objective: Vec<Rat>,
    rows: Vec<(Vec<Rat>, Cmp, Rat)>,
}

pub struct ExactSolution {
    pub x: Vec<Rat>,
    pub objective: Rat,
}

impl ExactProgram {
    pub fn new(num_vars: usize) -> Self {
        ExactProgram {
            n: num_vars,
            objective: vec![Rat::zero(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rat) {
        self.objective[var] = coeff;
    }

    /// Add a constraint from sparse coefficients (duplicates accumulate).
    pub fn add_row(&mut self, coeffs: &[(usize, Rat)], cmp: Cmp, rhs: Rat) {
        let mut dense = vec![Rat::zero(); self.n];
        for (j, c) in coeffs {
            dense[*j] += c.clone();
        }
        self.rows.push((dense, cmp, rhs));
    }

    pub fn solve(&self) -> Result<ExactSolution, OracleError> {
        // Normalize to b ≥ 0, then append one slack/surplus column per
        // inequality and one artificial column per row that lacks an
        // obvious basic variable (everything except `≤` rows).
        let m = self.rows.len();
        let mut normalized: Vec<(Vec<Rat>, Cmp, Rat)> = Vec::with_capacity(m);
        for (coeffs, cmp, rhs) in &self.rows {
            if rhs.is_negative() {
                let flipped = match cmp {
                    Cmp::Le => Cmp::Ge,
                    Cmp::Eq => Cmp::Eq,
                    Cmp::Ge => Cmp::Le,
                };
                normalized.push((
                    coeffs.iter().map(|c| -c.clone()).collect(),
                    flipped,
                    -rhs.clone(),
                ));
            } else {
                normalized.push((coeffs.clone(), *cmp, rhs.clone()));
            }
        }

        let n_slack = normalized
            .iter()
            .filter(|(_, cmp, _)| *cmp != Cmp::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, cmp, _)| *cmp != Cmp::Le)
            .count();
        let total = self.n + n_slack + n_art;

        // tableau[i] has `total` coefficients followed by the rhs.
        let mut tableau: Vec<Vec<Rat>> = Vec::with_capacity(m);
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut slack_at = self.n;
        let mut art_at = self.n + n_slack;
        for (coeffs, cmp, rhs) in &normalized {
            let mut row = vec![Rat::zero(); total + 1];
            row[..self.n].clone_from_slice(coeffs);
            row[total] = rhs.clone();
            match cmp {
                Cmp::Le => {
                    row[slack_at] = rat_int(1);
                    basis.push(slack_at);
                    slack_at += 1;
                }
                Cmp::Ge => {
                    row[slack_at] = rat_int(-1);
                    slack_at += 1;
                    row[art_at] = rat_int(1);
                    basis.push(art_at);
                    art_at += 1;
                }
                Cmp::Eq => {
                    row[art_at] = rat_int(1);
                    basis.push(art_at);
                    art_at += 1;
                }
            }
            tableau.push(row);
        }

        // Phase 1: minimize the sum of artificials.
        let art_start = self.n + n_slack;
        let mut cost = vec![Rat::zero(); total + 1];
        for c in cost.iter_mut().take(total).skip(art_start) {
            *c = rat_int(1);
        }
        for (i, &b) in basis.iter().enumerate() {
            if b >= art_start {
                let row = tableau[i].clone();
                for (c, a) in cost.iter_mut().zip(&row) {
                    *c -= a;
                }
            }
        }
        pivot_until_optimal(&mut tableau, &mut cost, &mut basis, total)?;
        // The cost row's rhs carries −(phase-1 objective).
        if cost[total].is_negative() {
            return Err(OracleError::Infeasible);
        }

        // Drive surviving artificials out of the basis, dropping rows
        // that turn out redundant.
        let mut i = 0;
        while i < tableau.len() {
            if basis[i] >= art_start {
                match (0..art_start).find(|&j| !tableau[i][j].is_zero()) {
                    Some(j) => pivot(&mut tableau, &mut cost, &mut basis, i, j, total),
                    None => {
                        tableau.remove(i);
                        basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        // Forbid artificials from re-entering.
        for row in &mut tableau {
            for c in row.iter_mut().take(total).skip(art_start) {
                *c = Rat::zero();
            }
        }

        // Phase 2: minimize the real objective.
        let mut cost = vec![Rat::zero(); total + 1];
        cost[..self.n].clone_from_slice(&self.objective);
        for (i, &b) in basis.iter().enumerate() {
            if b < self.n && !cost[b].is_zero() {
                let scale = cost[b].clone();
                let row = tableau[i].clone();
                for (c, a) in cost.iter_mut().zip(&row) {
                    *c -= &scale * a;
                }
            }
        }
        pivot_until_optimal(&mut tableau, &mut cost, &mut basis, total)?;

        let mut x = vec![Rat::zero(); self.n];
        for (i, &b) in basis.iter().enumerate() {
            if b < self.n {
                x[b] = tableau[i][total].clone();
            }
        }
        let objective = x
            .iter()
            .zip(&self.objective)
            .map(|(xi, ci)| xi * ci)
            .sum();
        Ok(ExactSolution { x, objective })
    }
}

/// Bland's rule: enter the lowest-index column with a negative reduced
/// cost; leave by exact minimum ratio, ties to the lowest basis index.
fn pivot_until_optimal(
    tableau: &mut [Vec<Rat>],
    cost: &mut [Rat],
    basis: &mut [usize],
    total: usize,
) -> Result<(), OracleError> {
    loop {
        let Some(enter) = (0..total).find(|&j| cost[j].is_negative()) else {
            return Ok(());
        };
        let mut leave: Option<(usize, Rat)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[total] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, best)) => {
                        ratio < *best || (ratio == *best && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave, _)) = leave else {
            return Err(OracleError::Unbounded);
        };
        pivot(tableau, cost, basis, leave, enter, total);
    }
}

fn pivot(
    tableau: &mut [Vec<Rat>],
    cost: &mut [Rat],
    basis: &mut [usize],
    row: usize,
    col: usize,
    total: usize,
) {
    let inv = tableau[row][col].recip();
    for c in tableau[row].iter_mut() {
        *c *= &inv;
    }
    let pivot_row = tableau[row].clone();
    for (i, r) in tableau.iter_mut().enumerate() {
        if i != row && !r[col].is_zero() {
            let scale = r[col].clone();
            for (c, p) in r.iter_mut().zip(&pivot_row) {
                *c -= &scale * p;
            }
        }
    }
    if !cost[col].is_zero() {
        let scale = cost[col].clone();
        for (c, p) in cost.iter_mut().zip(&pivot_row) {
            *c -= &scale * p;
        }
    }
    let _ = total;
    basis[row] = col;
}
