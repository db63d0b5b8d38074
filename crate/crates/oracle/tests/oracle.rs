//! Self-tests for the oracle crate: the exact simplex against hand-solved
//! programs, and the defect oracles against closed forms that can be
//! checked by hand.

use dayflow::{shared, AffineAction, AffineMap, Domain, Element, GroupKind};
use dayflow_oracle::{
    day_simplex_search, rat, rat_int, tv_defect_exact, tv_optimum, uniform_ball_tv_defect,
    Cmp, ExactProgram, OracleError,
};

fn ints(v: &[i64]) -> Element {
    Element::Ints(v.to_vec())
}

#[test]
fn exact_simplex_solves_hand_checked_programs() {
    // min x + y  s.t.  x + 2y = 2, x ≥ 1/2  →  (1/2, 3/4), objective 5/4.
    let mut lp = ExactProgram::new(2);
    lp.set_objective(0, rat_int(1));
    lp.set_objective(1, rat_int(1));
    lp.add_row(&[(0, rat_int(1)), (1, rat_int(2))], Cmp::Eq, rat_int(2));
    lp.add_row(&[(0, rat_int(1))], Cmp::Ge, rat(1, 2));
    let sol = lp.solve().unwrap();
    assert_eq!(sol.objective, rat(5, 4));
    assert_eq!(sol.x, vec![rat(1, 2), rat(3, 4)]);

    // Degenerate instance known to cycle under naive pivoting; Bland's
    // rule must terminate at −1/20.
    let mut lp = ExactProgram::new(4);
    for (j, c) in [rat(-3, 4), rat_int(150), rat(-1, 50), rat_int(6)]
        .into_iter()
        .enumerate()
    {
        lp.set_objective(j, c);
    }
    lp.add_row(
        &[(0, rat(1, 4)), (1, rat_int(-60)), (2, rat(-1, 25)), (3, rat_int(9))],
        Cmp::Le,
        rat_int(0),
    );
    lp.add_row(
        &[(0, rat(1, 2)), (1, rat_int(-90)), (2, rat(-1, 50)), (3, rat_int(3))],
        Cmp::Le,
        rat_int(0),
    );
    lp.add_row(&[(2, rat_int(1))], Cmp::Le, rat_int(1));
    let sol = lp.solve().unwrap();
    assert_eq!(sol.objective, rat(-1, 20));
}

#[test]
fn exact_simplex_reports_infeasible_and_unbounded() {
    let mut lp = ExactProgram::new(1);
    lp.add_row(&[(0, rat_int(1))], Cmp::Le, rat_int(1));
    lp.add_row(&[(0, rat_int(1))], Cmp::Ge, rat_int(2));
    assert!(matches!(lp.solve(), Err(OracleError::Infeasible)));

    let mut lp = ExactProgram::new(2);
    lp.set_objective(0, rat_int(-1));
    lp.add_row(&[(1, rat_int(1))], Cmp::Le, rat_int(5));
    assert!(matches!(lp.solve(), Err(OracleError::Unbounded)));
}

#[test]
fn window_optimum_matches_closed_form_exactly() {
    // On the integers the uniform window is optimal: 2/(2r+1), exactly.
    let z = shared(GroupKind::Zd { d: 1 }).unwrap();
    for r in 0..=3 {
        let opt = tv_optimum(&z, r).unwrap();
        assert_eq!(opt, rat(2, 2 * r as i64 + 1), "radius {r}");
    }
}

#[test]
fn finite_and_inverse_free_optima() {
    let c5 = shared(GroupKind::FiniteCyclic { n: 5 }).unwrap();
    assert_eq!(tv_optimum(&c5, 2).unwrap(), rat_int(0));
    // On the nonnegative integers with generator +1 the uniform mean on
    // {0..3} is optimal: two boundary points of mass 1/4.
    let nat = shared(GroupKind::NatAdd).unwrap();
    assert_eq!(tv_optimum(&nat, 3).unwrap(), rat(1, 2));
}

#[test]
fn symmetric_difference_counter_matches_closed_forms() {
    let z = shared(GroupKind::Zd { d: 1 }).unwrap();
    for r in 0..=6 {
        let d = uniform_ball_tv_defect(&z, r, &ints(&[1])).unwrap();
        assert_eq!(d, rat(2, 2 * r as i64 + 1));
    }
    // Free group, radius 1: the shifted ball overlaps the ball in exactly
    // two elements (e and the generator), so |sB Δ B| = 6 over |B| = 5.
    let f2 = shared(GroupKind::FreeGroup { rank: 2 }).unwrap();
    let a = Element::Word(vec![1]);
    assert_eq!(uniform_ball_tv_defect(&f2, 1, &a).unwrap(), rat(6, 5));
}

#[test]
fn direct_defect_sum_agrees_with_counting() {
    let z = shared(GroupKind::Zd { d: 1 }).unwrap();
    let mu: Vec<(Element, dayflow_oracle::Rat)> = (-2..=2)
        .map(|x| (ints(&[x]), rat(1, 5)))
        .collect();
    let d = tv_defect_exact(&z, &mu, &ints(&[1])).unwrap();
    assert_eq!(d, rat(2, 5));
    assert_eq!(d, uniform_ball_tv_defect(&z, 2, &ints(&[1])).unwrap());
}

#[test]
fn simplex_search_finds_the_midpoint() {
    // Half-turn about the origin on the plane: the midpoint of x and its
    // image is fixed, so the certified minimum over two points is 0.
    let z = shared(GroupKind::Zd { d: 1 }).unwrap();
    let half_turn =
        AffineMap::new(vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0]).unwrap();
    let action = AffineAction::new(
        z,
        [(ints(&[1]), half_turn.clone()), (ints(&[-1]), half_turn)],
        Domain::Ball { center: vec![0.0, 0.0], radius: 4.0 },
    )
    .unwrap();
    let x = vec![2.0, 1.0];
    let sx = vec![-2.0, -1.0];
    let best = day_simplex_search(&[x.clone(), sx], &action, 1e-6).unwrap();
    assert!(best <= 1e-6, "best {best}");
    // A single point reports its own residual: ‖x − (−x)‖∞ = 4.
    let single = day_simplex_search(&[x], &action, 1e-9).unwrap();
    assert!((single - 4.0).abs() < 1e-9);
    assert!(day_simplex_search(&[], &action, 1e-6).is_err());
}
