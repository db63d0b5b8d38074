//! First-principles defect computations in exact arithmetic.
//!
//! These share only the group element arithmetic with the main crate;
//! program construction and solving are written from scratch, with a
//! different linearization (equality splits `d = u − v` instead of
//! absolute-value bounds) so that agreement with the float solver is a
//! genuine two-route check.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use dayflow::{Element, GroupSpec};

use crate::exact::{rat, rat_int, Cmp, ExactProgram, Rat};
use crate::OracleError;

fn group_err(e: dayflow::Error) -> OracleError {
    OracleError::Invalid(e.to_string())
}

/// The exact minimax TV defect over means supported on `ball(radius)`:
///
/// ```text
/// min t  s.t.  μ ≥ 0, Σμ = 1, and for every generator s:
///              Σ_y |(s⊛μ − μ)(y)| ≤ t,
/// ```
///
/// with each absolute value split as `d_y = u_y − v_y`, `u, v ≥ 0`, and
/// the per-generator row `Σ(u + v) ≤ t`.
pub fn tv_optimum(spec: &Arc<GroupSpec>, radius: u32) -> Result<Rat, OracleError> {
    let ball = spec.ball(radius).map_err(group_err)?;
    let index: BTreeMap<&Element, usize> =
        ball.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let k = ball.len();
    let t = k;

    // Displacement coefficients per generator: y → Σ_{s·x=y} μ_x − [y∈B] μ_y.
    let mut blocks: Vec<BTreeMap<Element, Vec<(usize, i64)>>> = Vec::new();
    for s in spec.generators() {
        let mut per_point: BTreeMap<Element, Vec<(usize, i64)>> = BTreeMap::new();
        for (j, x) in ball.iter().enumerate() {
            let y = spec.multiply(s, x).map_err(group_err)?;
            per_point.entry(y).or_default().push((j, 1));
            per_point.entry(x.clone()).or_default().push((j, -1));
        }
        blocks.push(per_point);
    }
    let n_split: usize = blocks.iter().map(BTreeMap::len).sum();
    let mut lp = ExactProgram::new(k + 1 + 2 * n_split);
    lp.set_objective(t, rat_int(1));
    let mut split = k + 1;
    for per_point in &blocks {
        let mut budget: Vec<(usize, Rat)> = vec![(t, rat_int(-1))];
        for terms in per_point.values() {
            let mut row: Vec<(usize, Rat)> = terms
                .iter()
                .map(|&(j, c)| (j, rat_int(c)))
                .collect();
            row.push((split, rat_int(-1)));
            row.push((split + 1, rat_int(1)));
            lp.add_row(&row, Cmp::Eq, rat_int(0));
            budget.push((split, rat_int(1)));
            budget.push((split + 1, rat_int(1)));
            split += 2;
        }
        lp.add_row(&budget, Cmp::Le, rat_int(0));
    }
    let mass: Vec<(usize, Rat)> = (0..k).map(|j| (j, rat_int(1))).collect();
    lp.add_row(&mass, Cmp::Eq, rat_int(1));
    debug_assert_eq!(index.len(), k);
    Ok(lp.solve()?.objective)
}

/// `|sB Δ B| / |B|` by direct set counting — the TV defect of the uniform
/// mean on the ball `B`, computed without any measure machinery.
pub fn uniform_ball_tv_defect(
    spec: &Arc<GroupSpec>,
    radius: u32,
    s: &Element,
) -> Result<Rat, OracleError> {
    let ball: BTreeSet<Element> = spec.ball(radius).map_err(group_err)?.into_iter().collect();
    let shifted: BTreeSet<Element> = ball
        .iter()
        .map(|x| spec.multiply(s, x))
        .collect::<Result<_, _>>()
        .map_err(group_err)?;
    let sym_diff = ball.symmetric_difference(&shifted).count();
    Ok(rat(sym_diff as i64, ball.len() as i64))
}

/// Exact TV defect `‖s⊛μ − μ‖` of a rational measure given as
/// (element, weight) pairs — plain summation, no solver.
pub fn tv_defect_exact(
    spec: &Arc<GroupSpec>,
    mu: &[(Element, Rat)],
    s: &Element,
) -> Result<Rat, OracleError> {
    let mut acc: BTreeMap<Element, Rat> = BTreeMap::new();
    for (x, w) in mu {
        let y = spec.multiply(s, x).map_err(group_err)?;
        *acc.entry(y).or_default() += w;
        *acc.entry(x.clone()).or_default() -= w;
    }
    Ok(acc.values().map(num::Signed::abs).sum())
}
