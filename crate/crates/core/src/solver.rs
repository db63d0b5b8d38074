//! The optimization core: means on a Cayley ball minimizing the worst
//! per-generator translation defect, Følner-style baselines, defect
//! profiles over radii, and convexification of candidate points.
//!
//! The headline operation is [`solve_invariant_mean`]: one linear program
//! over the mean's coefficients whose optimum is the smallest achievable
//! worst-case defect at the given support radius. Three defect notions are
//! supported (see [`DefectKind`]); each is linearized exactly:
//!
//! * **TV** — per-point absolute values split into auxiliary variables;
//! * **weak** — two rows per (generator, test function) pair;
//! * **bounded-Lipschitz** — the per-generator defect is itself an LP, so
//!   its *dual* is embedded: dual feasibility plus a cost row bound the
//!   defect by `t`, and strong duality makes the bound tight.
//!
//! The objective is the maximum over generators (not the sum): smallness
//! per element is what matters, and generator smallness controls every
//! word `w = s₁…s_k` through the convolution triangle inequality
//! `tv(w⊛μ − μ) ≤ Σᵢ tv(sᵢ⊛μ − μ)` (each factor acts by an isometry in
//! total variation). Per-word defects remain directly computable via
//! [`crate::testfn::displacement`] rather than being assumed.
//!
//! Optima are generally non-unique; the deterministic pivot rule makes the
//! returned mean reproducible, but only the defect *value* is contractual.
//! A strictly positive optimum is a certificate that no mean at this
//! radius does better — evidence (never proof) of non-amenability.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::action::AffineAction;
use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::measure::MolecularMeasure;
use crate::testfn::{
    defect_blip, defect_weak, displacement, LipschitzBallSpec, TestFunction, LP_MAX_PIVOTS,
    LP_TOLERANCE,
};

/// Which defect functional the solver minimizes.
#[derive(Clone, Debug)]
pub enum DefectKind {
    /// Total variation of the displacement `s⊛μ − μ`.
    Tv,
    /// Bounded-Lipschitz defect over the given test-function ball.
    Blip(LipschitzBallSpec),
    /// Weak defect against a fixed finite family.
    Weak(Vec<TestFunction>),
}

impl DefectKind {
    pub fn label(&self) -> &'static str {
        match self {
            DefectKind::Tv => "tv",
            DefectKind::Blip(_) => "blip",
            DefectKind::Weak(_) => "weak",
        }
    }
}

/// Configuration for [`solve_invariant_mean`].
#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Support radius: the mean lives on `ball(radius)`.
    pub radius: u32,
    pub kind: DefectKind,
    /// Optimality tolerance handed to the simplex.
    pub lp_tolerance: f64,
    /// Generators to control; `None` means all generators of the spec.
    pub generators: Option<Vec<Element>>,
    /// Pivot budget for the simplex.
    pub max_pivots: usize,
}

impl SolveConfig {
    pub fn new(radius: u32, kind: DefectKind) -> Self {
        SolveConfig {
            radius,
            kind,
            lp_tolerance: LP_TOLERANCE,
            generators: None,
            max_pivots: LP_MAX_PIVOTS,
        }
    }

    fn resolve_generators(&self, spec: &GroupSpec) -> Result<Vec<Element>> {
        if !(self.lp_tolerance.is_finite() && self.lp_tolerance > 0.0) {
            return Err(Error::invalid("LP tolerance must be positive"));
        }
        match &self.generators {
            None => Ok(spec.generators().to_vec()),
            Some(gens) => {
                if gens.is_empty() {
                    return Err(Error::invalid("generator subset must be nonempty"));
                }
                for g in gens {
                    if !spec.generators().contains(g) {
                        return Err(Error::invalid(
                            "generator subset contains a non-generator",
                        ));
                    }
                }
                Ok(gens.clone())
            }
        }
    }
}

/// How much trust the returned mean carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    /// Simplex-certified optimal, and the recomputed defect of the
    /// returned mean agrees with the LP objective.
    Optimal,
    /// The returned mean is feasible and its reported defect is its true
    /// defect, but optimality is not certified (the LP objective and the
    /// recomputed defect disagreed beyond tolerance).
    FeasibleSuboptimal,
    /// The pivot budget ran out; the mean is feasible, its defect is an
    /// upper bound on the optimum.
    CapHit,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::FeasibleSuboptimal => "feasible-suboptimal",
            LpStatus::CapHit => "cap-hit",
        })
    }
}

/// Result of a defect minimization.
#[derive(Clone, Debug)]
pub struct DefectReport {
    /// The minimizing mean.
    pub measure: MolecularMeasure,
    /// Defect of `measure` per controlled generator, recomputed from the
    /// mean itself (not read off the LP).
    pub generator_defects: Vec<(Element, f64)>,
    /// Maximum of `generator_defects`.
    pub max_defect: f64,
    pub radius: u32,
    pub wall: Duration,
    pub status: LpStatus,
}

/// The uniform mean on `ball(radius)` — the classical baseline that the
/// LP can only improve on.
pub fn folner_uniform(spec: &Arc<GroupSpec>, radius: u32) -> Result<MolecularMeasure> {
    let ball = spec.ball(radius)?;
    let w = 1.0 / ball.len() as f64;
    MolecularMeasure::from_weights(spec.clone(), ball.into_iter().map(|e| (e, w)))
}

/// The uniform mean on the box `{0..sides[0]−1} × … × {0..sides[d−1]−1}`
/// of a `d`-dimensional integer lattice. Boxes beat balls as Følner sets
/// on lattices: an `n×n` box has per-generator TV defect exactly `2/n`.
pub fn folner_box(spec: &Arc<GroupSpec>, sides: &[u64]) -> Result<MolecularMeasure> {
    let crate::group::GroupKind::Zd { d } = spec.kind() else {
        return Err(Error::unsupported(format!(
            "box means are defined on integer lattices, not {spec}"
        )));
    };
    if sides.len() != *d || sides.contains(&0) {
        return Err(Error::invalid(format!(
            "need {d} positive side lengths for this lattice"
        )));
    }
    let cells: u64 = sides.iter().try_fold(1u64, |acc, &s| acc.checked_mul(s)).ok_or_else(
        || Error::resource("box volume overflows"),
    )?;
    if cells as usize > spec.enumeration_cap() {
        return Err(Error::resource(format!(
            "box volume {cells} exceeds the enumeration cap ({})",
            spec.enumeration_cap()
        )));
    }
    let w = 1.0 / cells as f64;
    let mut pairs = Vec::with_capacity(cells as usize);
    let mut coords = vec![0u64; sides.len()];
    loop {
        pairs.push((
            Element::Ints(coords.iter().map(|&c| c as i64).collect()),
            w,
        ));
        let mut axis = 0;
        loop {
            if axis == sides.len() {
                return MolecularMeasure::from_weights(spec.clone(), pairs);
            }
            coords[axis] += 1;
            if coords[axis] < sides[axis] {
                break;
            }
            coords[axis] = 0;
            axis += 1;
        }
    }
}

/// The defect of `mu` against one generator, under the chosen notion.
pub fn generator_defect(mu: &MolecularMeasure, s: &Element, kind: &DefectKind) -> Result<f64> {
    match kind {
        DefectKind::Tv => Ok(displacement(mu, s)?.tv_norm()),
        DefectKind::Blip(ball) => defect_blip(mu, s, ball),
        DefectKind::Weak(family) => defect_weak(mu, s, family),
    }
}

/// The worst defect of `mu` across the given generators.
pub fn max_defect(
    mu: &MolecularMeasure,
    generators: &[Element],
    kind: &DefectKind,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in generators {
        worst = worst.max(generator_defect(mu, s, kind)?);
    }
    Ok(worst)
}

/// Find a mean supported on `ball(cfg.radius)` minimizing the worst
/// per-generator defect. The optimum can only improve on the uniform
/// ball mean (which is feasible), and is non-increasing in the radius
/// (larger balls contain smaller ones).
pub fn solve_invariant_mean(spec: &Arc<GroupSpec>, cfg: &SolveConfig) -> Result<DefectReport> {
    let start = Instant::now();
    let generators = cfg.resolve_generators(spec)?;
    let ball = spec.ball(cfg.radius)?;
    let index: BTreeMap<&Element, usize> =
        ball.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let k = ball.len();

    // Per generator: the displacement coefficient of μ at each union point
    // y is  d_y(μ) = Σ_{x: s·x = y} μ_x − [y ∈ ball]·μ_y  — linear in μ.
    let mut shifts: Vec<BTreeMap<Element, Vec<(usize, f64)>>> = Vec::new();
    for s in &generators {
        let mut per_point: BTreeMap<Element, Vec<(usize, f64)>> = BTreeMap::new();
        for (j, x) in ball.iter().enumerate() {
            per_point
                .entry(spec.multiply(s, x)?)
                .or_default()
                .push((j, 1.0));
            per_point.entry(x.clone()).or_default().push((j, -1.0));
        }
        shifts.push(per_point);
    }

    let lp = match &cfg.kind {
        DefectKind::Tv => build_tv_program(k, &shifts),
        DefectKind::Weak(family) => build_weak_program(spec, k, &ball, &generators, family)?,
        DefectKind::Blip(ball_spec) => build_blip_program(spec, k, ball_spec, &shifts)?,
    };
    let sol = lp.solve(cfg.lp_tolerance, cfg.max_pivots)?;

    let measure = MolecularMeasure::from_weights(
        spec.clone(),
        ball.iter().cloned().zip(sol.x[..k].iter().copied()),
    )?;
    debug_assert!(index.len() == k);
    let mut generator_defects = Vec::with_capacity(generators.len());
    let mut recomputed = 0.0f64;
    for s in &generators {
        let d = generator_defect(&measure, s, &cfg.kind)?;
        recomputed = recomputed.max(d);
        generator_defects.push((s.clone(), d));
    }
    let status = match sol.outcome {
        LpOutcome::IterationCapped => LpStatus::CapHit,
        LpOutcome::Optimal => {
            // Dual-route check: the defect recomputed from the returned
            // mean must reproduce the LP objective.
            if (recomputed - sol.objective).abs() <= (1e-7f64).max(10.0 * cfg.lp_tolerance) {
                LpStatus::Optimal
            } else {
                LpStatus::FeasibleSuboptimal
            }
        }
    };
    Ok(DefectReport {
        measure,
        generator_defects,
        max_defect: recomputed,
        radius: cfg.radius,
        wall: start.elapsed(),
        status,
    })
}

/// Variables: μ (k), t, then one absolute-value split per (generator,
/// union point). Rows: ±d_y ≤ a_y, Σ_y a_y ≤ t per generator, Σμ = 1.
fn build_tv_program(k: usize, shifts: &[BTreeMap<Element, Vec<(usize, f64)>>]) -> LinearProgram {
    let t = k;
    let n_aux: usize = shifts.iter().map(BTreeMap::len).sum();
    let mut lp = LinearProgram::new(k + 1 + n_aux);
    lp.set_objective(t, 1.0);
    let mut aux = k + 1;
    for per_point in shifts {
        let mut cost_row: Vec<(usize, f64)> = vec![(t, -1.0)];
        for terms in per_point.values() {
            let mut pos: Vec<(usize, f64)> = terms.clone();
            pos.push((aux, -1.0));
            lp.add_row(pos, Cmp::Le, 0.0);
            let mut neg: Vec<(usize, f64)> =
                terms.iter().map(|&(j, c)| (j, -c)).collect();
            neg.push((aux, -1.0));
            lp.add_row(neg, Cmp::Le, 0.0);
            cost_row.push((aux, 1.0));
            aux += 1;
        }
        lp.add_row(cost_row, Cmp::Le, 0.0);
    }
    lp.add_row((0..k).map(|j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
    lp
}

/// Variables: μ (k), t. Rows: ±⟨s⊛μ − μ, f⟩ ≤ t per (generator, function),
/// Σμ = 1. The pairing coefficient of μ_x is `f(s·x) − f(x)`.
fn build_weak_program(
    spec: &GroupSpec,
    k: usize,
    ball: &[Element],
    generators: &[Element],
    family: &[TestFunction],
) -> Result<LinearProgram> {
    for f in family {
        if f.spec().as_ref() != spec {
            return Err(Error::invalid(
                "test family and group live on different specs",
            ));
        }
    }
    let t = k;
    let mut lp = LinearProgram::new(k + 1);
    lp.set_objective(t, 1.0);
    for s in generators {
        for f in family {
            let mut row: Vec<(usize, f64)> = vec![(t, -1.0)];
            for (j, x) in ball.iter().enumerate() {
                let c = f.value(&spec.multiply(s, x)?) - f.value(x);
                if c != 0.0 {
                    row.push((j, c));
                }
            }
            lp.add_row(row.clone(), Cmp::Le, 0.0);
            let flipped: Vec<(usize, f64)> = row
                .into_iter()
                .map(|(j, c)| if j == t { (j, c) } else { (j, -c) })
                .collect();
            lp.add_row(flipped, Cmp::Le, 0.0);
        }
    }
    lp.add_row((0..k).map(|j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
    Ok(lp)
}

/// The bounded-Lipschitz defect of μ against one generator is itself a
/// maximization LP over test-function values, so embed its *dual*: with
/// multipliers p, q ≥ 0 for the box constraints `±f_y ≤ cap` and
/// w_{yz} ≥ 0 for each ordered Lipschitz pair `f_y − f_z ≤ L·ρ(y,z)`,
/// dual feasibility is the per-point stationarity equality
///
/// ```text
/// p_y − q_y + Σ_z (w_{yz} − w_{zy}) = d_y(μ),
/// ```
///
/// and the dual objective `cap·Σ(p+q) + Σ L·ρ·w` is an upper bound on the
/// defect that is tight at the dual optimum (strong duality). Bounding it
/// by `t` per generator therefore makes `min t` the minimax defect.
fn build_blip_program(
    spec: &GroupSpec,
    k: usize,
    ball_spec: &LipschitzBallSpec,
    shifts: &[BTreeMap<Element, Vec<(usize, f64)>>],
) -> Result<LinearProgram> {
    let t = k;
    struct GenBlock {
        points: Vec<Element>,
        /// (from, to, cost ρ·L) for each constrained ordered pair.
        pairs: Vec<(usize, usize, f64)>,
        var_p: usize,
        var_w: usize,
    }
    let mut blocks = Vec::with_capacity(shifts.len());
    let mut next = k + 1;
    for per_point in shifts {
        let points: Vec<Element> = per_point.keys().cloned().collect();
        let mut pairs = Vec::new();
        for (i, y) in points.iter().enumerate() {
            for (j, z) in points.iter().enumerate().skip(i + 1) {
                let Some(rho) = ball_spec.metric().distance(spec, y, z)? else {
                    continue;
                };
                let gap = ball_spec.lip_cap() * rho;
                if gap < 2.0 * ball_spec.sup_cap() {
                    pairs.push((i, j, gap));
                    pairs.push((j, i, gap));
                }
            }
        }
        let var_p = next; // p_y, q_y interleaved: 2 per point
        next += 2 * points.len();
        let var_w = next;
        next += pairs.len();
        blocks.push(GenBlock { points, pairs, var_p, var_w });
    }

    let mut lp = LinearProgram::new(next);
    lp.set_objective(t, 1.0);
    for (block, per_point) in blocks.iter().zip(shifts) {
        // Stationarity per union point.
        for (i, y) in block.points.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = vec![
                (block.var_p + 2 * i, 1.0),
                (block.var_p + 2 * i + 1, -1.0),
            ];
            for (w_idx, &(from, to, _)) in block.pairs.iter().enumerate() {
                if from == i {
                    row.push((block.var_w + w_idx, 1.0));
                } else if to == i {
                    row.push((block.var_w + w_idx, -1.0));
                }
            }
            for &(j, c) in &per_point[y] {
                row.push((j, -c));
            }
            lp.add_row(row, Cmp::Eq, 0.0);
        }
        // Dual objective bounded by t.
        let mut cost: Vec<(usize, f64)> = vec![(t, -1.0)];
        for i in 0..block.points.len() {
            cost.push((block.var_p + 2 * i, ball_spec.sup_cap()));
            cost.push((block.var_p + 2 * i + 1, ball_spec.sup_cap()));
        }
        for (w_idx, &(_, _, gap)) in block.pairs.iter().enumerate() {
            if gap != 0.0 {
                cost.push((block.var_w + w_idx, gap));
            }
        }
        lp.add_row(cost, Cmp::Le, 0.0);
    }
    lp.add_row((0..k).map(|j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
    Ok(lp)
}

/// One row of a defect profile.
#[derive(Clone, Debug)]
pub struct ProfileRow {
    pub radius: u32,
    /// Worst per-generator defect of the uniform ball mean.
    pub folner_defect: f64,
    /// Worst per-generator defect of the LP-optimal mean.
    pub lp_defect: f64,
    pub status: LpStatus,
    pub wall: Duration,
}

/// Defect profile over radii `0..=r_max`: the Følner baseline next to the
/// LP optimum. The LP column is non-increasing in the radius and never
/// exceeds the baseline.
pub fn defect_profile(
    spec: &Arc<GroupSpec>,
    r_max: u32,
    kind: &DefectKind,
) -> Result<Vec<ProfileRow>> {
    defect_profile_jobs(spec, r_max, kind, 1)
}

/// [`defect_profile`] with up to `jobs` radii evaluated concurrently.
/// Rows are independent, so the result does not depend on scheduling.
pub fn defect_profile_jobs(
    spec: &Arc<GroupSpec>,
    r_max: u32,
    kind: &DefectKind,
    jobs: usize,
) -> Result<Vec<ProfileRow>> {
    let jobs = jobs.max(1);
    let radii: Vec<u32> = (0..=r_max).collect();
    let row = |&r: &u32| -> Result<ProfileRow> {
        let start = Instant::now();
        let uniform = folner_uniform(spec, r)?;
        let folner = max_defect(&uniform, spec.generators(), kind)?;
        let report = solve_invariant_mean(spec, &SolveConfig::new(r, kind.clone()))?;
        Ok(ProfileRow {
            radius: r,
            folner_defect: folner,
            lp_defect: report.max_defect,
            status: report.status,
            wall: start.elapsed(),
        })
    };
    if jobs == 1 {
        return radii.iter().map(row).collect();
    }
    let mut out: Vec<Option<Result<ProfileRow>>> = Vec::new();
    out.resize_with(radii.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(radii.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= radii.len() {
                    break;
                }
                let result = row(&radii[i]);
                slots.lock().expect("row slot lock")[i] = Some(result);
            });
        }
    });
    out.into_iter()
        .map(|slot| slot.expect("every radius evaluated"))
        .collect()
}

/// Result of [`day_convexify`].
#[derive(Clone, Debug)]
pub struct DayReport {
    /// Convex weights over the input points.
    pub weights: Vec<f64>,
    /// The combined point `Σ λᵢ xᵢ`.
    pub point: Vec<f64>,
    /// `‖point − s ▷ point‖∞` per generator, recomputed from the point.
    pub residuals: Vec<(Element, f64)>,
    pub max_residual: f64,
}

/// Find the convex combination of the given points with the smallest
/// worst-case fixed-point residual `max_s ‖y − s▷y‖∞`.
///
/// Because the action is affine and the weights sum to one, the residual
/// is affine in the weights — `y − s▷y = Σᵢ λᵢ (xᵢ − s▷xᵢ)` — so this is
/// a linear program, and its optimum can only improve on the best single
/// input point. This is the convexification step that upgrades weakly
/// small defects to norm-small residuals; in finite dimension the
/// distinction collapses, which is what makes the desk-scale check
/// honest. Residuals are measured in the max norm to stay within linear
/// programming; the Euclidean residual is bounded by `√n` times the
/// reported one.
pub fn day_convexify(points: &[Vec<f64>], action: &AffineAction) -> Result<DayReport> {
    if points.is_empty() {
        return Err(Error::invalid("convexification needs at least one point"));
    }
    let n = action.dimension();
    for p in points {
        if p.len() != n {
            return Err(Error::invalid(format!(
                "point has dimension {}, action has dimension {n}",
                p.len()
            )));
        }
        if !action.domain().contains(p, 1e-9)? {
            return Err(Error::Precondition(
                "input point lies outside the declared domain".into(),
            ));
        }
    }
    let generators = action.spec().generators().to_vec();
    // v[i][s][j] = (xᵢ − s▷xᵢ)[j]
    let mut moves: Vec<Vec<Vec<f64>>> = Vec::with_capacity(points.len());
    for p in points {
        let mut per_gen = Vec::with_capacity(generators.len());
        for s in &generators {
            let sp = action.act_generator(s, p)?;
            per_gen.push(p.iter().zip(&sp).map(|(a, b)| a - b).collect());
        }
        moves.push(per_gen);
    }
    let m = points.len();
    let t = m;
    let mut lp = LinearProgram::new(m + 1);
    lp.set_objective(t, 1.0);
    for (si, _) in generators.iter().enumerate() {
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut row: Vec<(usize, f64)> = vec![(t, -1.0)];
                for (i, per_gen) in moves.iter().enumerate() {
                    let c = sign * per_gen[si][j];
                    if c != 0.0 {
                        row.push((i, c));
                    }
                }
                lp.add_row(row, Cmp::Le, 0.0);
            }
        }
    }
    lp.add_row((0..m).map(|i| (i, 1.0)).collect(), Cmp::Eq, 1.0);
    let sol = lp.solve(LP_TOLERANCE, LP_MAX_PIVOTS)?;
    if sol.outcome != LpOutcome::Optimal {
        return Err(Error::Solver(
            "convexification program hit its pivot budget".into(),
        ));
    }
    let weights = sol.x[..m].to_vec();
    let mut point = vec![0.0; n];
    for (w, p) in weights.iter().zip(points) {
        for (acc, v) in point.iter_mut().zip(p) {
            *acc += w * v;
        }
    }
    let mut residuals = Vec::with_capacity(generators.len());
    let mut max_residual = 0.0f64;
    for s in &generators {
        let sp = action.act_generator(s, &point)?;
        let r = point
            .iter()
            .zip(&sp)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_residual = max_residual.max(r);
        residuals.push((s.clone(), r));
    }
    Ok(DayReport { weights, point, residuals, max_residual })
}
