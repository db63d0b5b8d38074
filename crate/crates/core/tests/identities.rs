//! Property tests for the algebraic identities the defect machinery rests
//! on: translation composition laws, the convolution/translation pairing
//! adjunction, orbit-average duality, and order relations between the
//! three defect notions.

mod common;

use std::sync::Arc;

use dayflow::action::{orbit_average, pullback_functional};
use dayflow::solver::max_defect;
use dayflow::testfn::{defect_blip, defect_weak};
use dayflow::{
    folner_uniform, shared, solve_invariant_mean, DefectKind, Element, GroupKind, GroupSpec,
    LipschitzBallSpec, MetricSource, MolecularMeasure, SolveConfig, TestFunction,
};
use proptest::prelude::*;

/// Kinds with inverses (translation by s needs s⁻¹ to move exceptions).
fn invertible_kinds() -> Vec<Arc<GroupSpec>> {
    common::example_kinds()
        .into_iter()
        .filter(|spec| spec.has_inverses())
        .collect()
}

fn pick(items: &[Element], idx: u32) -> &Element {
    &items[idx as usize % items.len()]
}

/// A measure with weights `count/1024`; when the counts come from
/// `cuts_to_counts` the weights sum to exactly 1.0 (every partial sum is a
/// multiple of 2⁻¹⁰ well inside the exact-integer range of f64).
fn dyadic_measure(
    spec: &Arc<GroupSpec>,
    points: &[Element],
    picks: &[u32],
    counts: &[u16],
) -> MolecularMeasure {
    // Cycle the picks so every count lands somewhere: the weights must
    // account for all 1024 quanta for the result to be an exact mean.
    let pairs = counts
        .iter()
        .zip(picks.iter().cycle())
        .map(|(&c, &i)| (pick(points, i).clone(), f64::from(c) / 1024.0));
    MolecularMeasure::from_weights(spec.clone(), pairs).expect("valid dyadic measure")
}

/// Turn sorted cut positions in `0..=1024` into counts summing to 1024.
fn cuts_to_counts(cuts: &[u16]) -> Vec<u16> {
    let mut sorted: Vec<u16> = cuts.iter().copied().map(|c| c.min(1024)).collect();
    sorted.sort_unstable();
    sorted.push(1024);
    let mut prev = 0;
    let mut counts = Vec::with_capacity(sorted.len());
    for c in sorted {
        counts.push(c - prev);
        prev = c;
    }
    counts
}

/// A test function valued in [-1, 1] with exceptions on ball points.
fn family_function(
    spec: &Arc<GroupSpec>,
    points: &[Element],
    picks: &[u32],
    values: &[i8],
) -> TestFunction {
    // Colliding picks keep their first value: `from_values` rejects
    // conflicting duplicates rather than silently choosing one.
    let mut pairs: std::collections::BTreeMap<Element, f64> = std::collections::BTreeMap::new();
    for (&i, &v) in picks.iter().zip(values) {
        pairs.entry(pick(points, i).clone()).or_insert(f64::from(v) / 127.0);
    }
    TestFunction::from_values(spec.clone(), 0.0, pairs).expect("valid test function")
}

fn same_function(a: &TestFunction, b: &TestFunction) -> bool {
    a.default_value() == b.default_value()
        && a.support().collect::<Vec<_>>() == b.support().collect::<Vec<_>>()
}

fn same_measure(a: &MolecularMeasure, b: &MolecularMeasure) -> bool {
    a.support().collect::<Vec<_>>() == b.support().collect::<Vec<_>>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Both translation compositions reverse the product: applying the
    /// `b`-translate and then the `a`-translate equals translating by
    /// `b·a`, on either side.
    #[test]
    fn translations_compose_with_reversed_products(
        kind_idx in 0usize..8,
        a_pick in 0u32..1000,
        b_pick in 0u32..1000,
        picks in prop::collection::vec(0u32..1000, 1..6),
        values in prop::collection::vec(-127i8..=127, 6),
    ) {
        let kinds = invertible_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let ball = spec.ball(2).unwrap();
        let f = family_function(spec, &ball, &picks, &values);
        let a = pick(&ball, a_pick);
        let b = pick(&ball, b_pick);
        let ba = spec.multiply(b, a).unwrap();

        let left_two_step = f.left_translate(b).unwrap().left_translate(a).unwrap();
        let left_one_step = f.left_translate(&ba).unwrap();
        prop_assert!(same_function(&left_two_step, &left_one_step));

        let right_two_step = f.right_translate(a).unwrap().right_translate(b).unwrap();
        let right_one_step = f.right_translate(&ba).unwrap();
        prop_assert!(same_function(&right_two_step, &right_one_step));
    }

    /// The pairing adjunction `⟨s⊛μ, f⟩ = ⟨μ, ₛf⟩` is bit-exact: both
    /// sides reduce to the same multiset of products, and summation is
    /// canonicalized.
    #[test]
    fn pairing_adjunction_is_bit_exact(
        kind_idx in 0usize..8,
        s_pick in 0u32..1000,
        mu_picks in prop::collection::vec(0u32..1000, 1..6),
        cuts in prop::collection::vec(0u16..=1024, 5),
        f_picks in prop::collection::vec(0u32..1000, 1..6),
        f_values in prop::collection::vec(-127i8..=127, 6),
    ) {
        let kinds = invertible_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let ball = spec.ball(2).unwrap();
        let counts = cuts_to_counts(&cuts);
        let mu = dyadic_measure(spec, &ball, &mu_picks, &counts);
        let f = family_function(spec, &ball, &f_picks, &f_values);
        let s = pick(&ball, s_pick);

        let lhs = mu.convolve_left(s).unwrap().evaluate(&f).unwrap();
        let rhs = mu.evaluate(&f.left_translate(s).unwrap()).unwrap();
        prop_assert_eq!(lhs.to_bits(), rhs.to_bits(),
            "⟨s⊛μ, f⟩ = {} but ⟨μ, ₛf⟩ = {}", lhs, rhs);
    }

    /// Convolution is exact bookkeeping: point masses move to the product,
    /// iterated convolution matches convolution by the product, and the
    /// total-variation norm and mean property survive bit-for-bit (left
    /// multiplication is injective, so no coefficients merge).
    #[test]
    fn convolution_moves_mass_exactly(
        kind_idx in 0usize..9,
        s_pick in 0u32..1000,
        t_pick in 0u32..1000,
        mu_picks in prop::collection::vec(0u32..1000, 1..6),
        cuts in prop::collection::vec(0u16..=1024, 5),
    ) {
        let kinds = common::example_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let ball = spec.ball(2).unwrap();
        let s = pick(&ball, s_pick);
        let t = pick(&ball, t_pick);

        let delta_t = MolecularMeasure::point_mass(spec.clone(), t.clone()).unwrap();
        let moved = delta_t.convolve_left(s).unwrap();
        let st = spec.multiply(s, t).unwrap();
        let expected = MolecularMeasure::point_mass(spec.clone(), st.clone()).unwrap();
        prop_assert!(same_measure(&moved, &expected));

        let counts = cuts_to_counts(&cuts);
        let mu = dyadic_measure(spec, &ball, &mu_picks, &counts);
        let iterated = mu.convolve_left(t).unwrap().convolve_left(s).unwrap();
        let direct = mu.convolve_left(&st).unwrap();
        prop_assert!(same_measure(&iterated, &direct));

        let shifted = mu.convolve_left(s).unwrap();
        prop_assert_eq!(shifted.tv_norm().to_bits(), mu.tv_norm().to_bits());
        prop_assert_eq!(shifted.total_mass().to_bits(), mu.total_mass().to_bits());
        prop_assert!(mu.is_mean(0.0), "dyadic construction yields an exact mean");
        prop_assert!(shifted.is_mean(0.0));
    }

    /// `|⟨s⊛μ − t⊛μ, f⟩| ≤ Σ|c_i| · |f(s·x_i) − f(t·x_i)|` up to rounding:
    /// pairings cannot expand faster than the measure's mass times the
    /// function's displacement along the two translates.
    #[test]
    fn pairing_differences_are_mass_bounded(
        kind_idx in 0usize..9,
        s_pick in 0u32..1000,
        t_pick in 0u32..1000,
        mu_picks in prop::collection::vec(0u32..1000, 1..6),
        cuts in prop::collection::vec(0u16..=1024, 5),
        f_picks in prop::collection::vec(0u32..1000, 1..6),
        f_values in prop::collection::vec(-127i8..=127, 6),
    ) {
        let kinds = common::example_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let ball = spec.ball(2).unwrap();
        let counts = cuts_to_counts(&cuts);
        let mu = dyadic_measure(spec, &ball, &mu_picks, &counts);
        let f = family_function(spec, &ball, &f_picks, &f_values);
        let s = pick(&ball, s_pick);
        let t = pick(&ball, t_pick);

        let lhs = (mu.convolve_left(s).unwrap().evaluate(&f).unwrap()
            - mu.convolve_left(t).unwrap().evaluate(&f).unwrap())
            .abs();
        let mut bound = 0.0;
        for (x, c) in mu.support() {
            let fs = f.value(&spec.multiply(s, x).unwrap());
            let ft = f.value(&spec.multiply(t, x).unwrap());
            bound += c.abs() * (fs - ft).abs();
        }
        prop_assert!(lhs <= bound + 1e-12, "difference {} exceeds bound {}", lhs, bound);
    }

    /// Orbit-average duality: pairing a functional with the averaged orbit
    /// point equals pairing the measure with the pulled-back test function.
    #[test]
    fn orbit_average_duality_holds_on_rotations(
        angle_steps in 1u32..12,
        offsets in prop::collection::vec(-4i64..=4, 1..6),
        cuts in prop::collection::vec(0u16..=1024, 5),
        xi in prop::collection::vec(-8i32..=8, 2),
    ) {
        let angle = f64::from(angle_steps) * std::f64::consts::PI / 6.0;
        let action = common::rotation_action(angle, [1.0, 0.0], 4.0);
        let spec = action.spec().clone();
        let points: Vec<Element> = offsets.iter().map(|&k| common::ints(&[k])).collect();
        let counts = cuts_to_counts(&cuts);
        let picks: Vec<u32> = (0..points.len() as u32).collect();
        let mu = dyadic_measure(&spec, &points, &picks, &counts);
        let xi: Vec<f64> = xi.iter().map(|&v| f64::from(v)).collect();
        let x0 = [2.0, 0.0];

        let averaged = orbit_average(&mu, &action, &x0).unwrap();
        let lhs: f64 = xi.iter().zip(&averaged).map(|(a, b)| a * b).sum();
        let pulled = pullback_functional(&xi, &action, &x0, 4).unwrap();
        let rhs = mu.evaluate(&pulled).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12,
            "⟨ξ, Φ̃(μ)⟩ = {} but ⟨μ, ξ∘Φ⟩ = {}", lhs, rhs);
    }

    /// The weak defect only grows as the family grows, and the
    /// bounded-Lipschitz ball built from a family dominates the weak
    /// defect over that family (each member lies in the ball).
    #[test]
    fn blip_dominates_weak_and_weak_is_monotone(
        kind_idx in 0usize..9,
        s_pick in 0u32..1000,
        mu_picks in prop::collection::vec(0u32..1000, 1..5),
        cuts in prop::collection::vec(0u16..=1024, 4),
        f_picks in prop::collection::vec(0u32..1000, 3),
        f_values in prop::collection::vec(-127i8..=127, 9),
    ) {
        let kinds = common::example_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let ball = spec.ball(1).unwrap();
        let counts = cuts_to_counts(&cuts);
        let mu = dyadic_measure(spec, &ball, &mu_picks, &counts);
        let s = pick(&ball, s_pick);
        let family: Vec<TestFunction> = f_values
            .chunks(3)
            .map(|chunk| family_function(spec, &ball, &f_picks, chunk))
            .collect();

        let over_prefix = defect_weak(&mu, s, &family[..1]).unwrap();
        let over_all = defect_weak(&mu, s, &family).unwrap();
        prop_assert!(over_prefix <= over_all + 1e-15);

        let ball_spec = LipschitzBallSpec::new(MetricSource::family(family.clone()).unwrap());
        let blip = defect_blip(&mu, s, &ball_spec).unwrap();
        prop_assert!(blip >= over_all - 1e-9,
            "blip {} under weak {}", blip, over_all);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// The optimized mean never does worse than the uniform window it
    /// starts from: LP optimum ≤ Følner defect at the same radius.
    #[test]
    fn lp_defect_never_exceeds_folner_defect(
        kind_idx in 0usize..9,
        radius in 0u32..=2,
    ) {
        let kinds = common::example_kinds();
        let spec = &kinds[kind_idx % kinds.len()];
        let folner = folner_uniform(spec, radius).unwrap();
        let folner_defect =
            max_defect(&folner, spec.generators(), &DefectKind::Tv).unwrap();
        let report =
            solve_invariant_mean(spec, &SolveConfig::new(radius, DefectKind::Tv)).unwrap();
        prop_assert!(report.max_defect <= folner_defect + 1e-9,
            "LP {} above window {} on {}", report.max_defect, folner_defect, spec);
    }
}

/// Translation needs inverses; the additive monoid of naturals reports
/// the unsupported operation instead of guessing.
#[test]
fn inverse_free_kind_rejects_translation() {
    let spec = shared(GroupKind::NatAdd).unwrap();
    let f = TestFunction::indicator(spec.clone(), common::ints(&[2])).unwrap();
    let err = f.left_translate(&common::ints(&[1])).unwrap_err();
    assert!(matches!(err, dayflow::Error::UnsupportedOperation(_)));
    let err = f.right_translate(&common::ints(&[1])).unwrap_err();
    assert!(matches!(err, dayflow::Error::UnsupportedOperation(_)));
}
