//! Affine actions of a finitely generated group (or semigroup) on a
//! bounded convex subset of `R^n`, and the route from means to approximate
//! fixed points.
//!
//! An action assigns an affine map `x ↦ A·x + b` to every generator;
//! words act by composition, rightmost letter first. The orbit map
//! `g ↦ g ▷ x0` extends linearly to molecular measures
//! ([`orbit_average`]), and for a mean `μ` the extension satisfies the
//! exact algebraic identity
//!
//! ```text
//! x − s ▷ x = orbit_average(μ − s⊛μ)       where x = orbit_average(μ),
//! ```
//!
//! so a mean with small translation defect lands on a point with small
//! fixed-point residual: `‖x − s▷x‖∞ ≤ (tv(μ − s⊛μ)/2) · diam∞(orbit)`.
//! [`afp_pipeline`] walks a sequence of means and records every quantity
//! in that chain so the inequality is checkable row by row.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec};
use crate::lp::{Cmp, LinearProgram};
use crate::measure::MolecularMeasure;
use crate::testfn::TestFunction;

/// Sampling points used for the load-time relation check.
const RELATION_SAMPLES: usize = 100;
/// Tolerance for the load-time relation check.
const RELATION_TOL: f64 = 1e-8;
/// Tolerance for the load-time inverse-pair check.
const INVERSE_TOL: f64 = 1e-10;
/// Slack used when testing domain membership.
const DOMAIN_TOL: f64 = 1e-9;

/// A dense affine map `x ↦ A·x + b` on `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if n == 0 {
            return Err(Error::invalid("affine maps need dimension at least one"));
        }
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(format!(
                "matrix must be {n}×{n} to match the offset vector"
            )));
        }
        if a.iter().flatten().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("affine map entries must be finite"));
        }
        Ok(AffineMap { a, b })
    }

    pub fn identity(n: usize) -> Self {
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        AffineMap { a, b: vec![0.0; n] }
    }

    pub fn dimension(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.b
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dimension();
        if x.len() != n {
            return Err(Error::invalid(format!(
                "point has dimension {}, action has dimension {n}",
                x.len()
            )));
        }
        Ok(self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, off)| row.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + off)
            .collect())
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        let n = self.dimension();
        let mut a = vec![vec![0.0; n]; n];
        for (row_out, self_row) in a.iter_mut().zip(&self.a) {
            for (k, &c) in self_row.iter().enumerate() {
                if c != 0.0 {
                    for (out, &v) in row_out.iter_mut().zip(&other.a[k]) {
                        *out += c * v;
                    }
                }
            }
        }
        let b = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(row, off)| {
                row.iter().zip(&other.b).map(|(c, v)| c * v).sum::<f64>() + off
            })
            .collect();
        AffineMap { a, b }
    }

    /// Whether `self ∘ other = id` to `tol`: `A·A′ = I` and `A·b′ + b = 0`.
    fn inverts(&self, other: &AffineMap, tol: f64) -> bool {
        let composed = self.compose(other);
        let id = AffineMap::identity(self.dimension());
        let mat_ok = composed
            .a
            .iter()
            .flatten()
            .zip(id.a.iter().flatten())
            .all(|(got, want)| (got - want).abs() <= tol);
        mat_ok && composed.b.iter().all(|v| v.abs() <= tol)
    }

    pub fn to_json(&self) -> Value {
        json!({ "A": self.a, "b": self.b })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("affine map JSON must be an object"))?;
        let a = obj
            .get("A")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid("affine map JSON missing matrix \"A\""))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::invalid("matrix rows must be arrays"))?
                    .iter()
                    .map(|c| {
                        c.as_f64()
                            .ok_or_else(|| Error::invalid("matrix entries must be numbers"))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let b = obj
            .get("b")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid("affine map JSON missing offset \"b\""))?
            .iter()
            .map(|c| {
                c.as_f64()
                    .ok_or_else(|| Error::invalid("offset entries must be numbers"))
            })
            .collect::<Result<Vec<f64>>>()?;
        AffineMap::new(a, b)
    }
}

/// The bounded convex set an action is declared to preserve.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box `lo ≤ x ≤ hi` coordinatewise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Convex hull of finitely many points.
    Hull { points: Vec<Vec<f64>> },
}

impl Domain {
    pub fn dimension(&self) -> Result<usize> {
        let n = match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
            Domain::Hull { points } => points.first().map_or(0, Vec::len),
        };
        match self {
            Domain::Ball { radius, .. } if !(radius.is_finite() && *radius >= 0.0) => {
                return Err(Error::invalid("ball radius must be finite and nonnegative"));
            }
            Domain::Box { lo, hi } if hi.len() != n || lo.iter().zip(hi).any(|(l, h)| l > h) => {
                return Err(Error::invalid("box bounds must satisfy lo ≤ hi"));
            }
            Domain::Hull { points }
                if points.is_empty() || points.iter().any(|p| p.len() != n) =>
            {
                return Err(Error::invalid(
                    "hull needs at least one point, all of one dimension",
                ));
            }
            _ => {}
        }
        if n == 0 {
            return Err(Error::invalid("domains need dimension at least one"));
        }
        Ok(n)
    }

    /// Membership test with slack `tol`. Hull membership solves a small
    /// feasibility program: minimize the coordinatewise mismatch of a
    /// convex combination; the point is inside iff the optimum is ≤ tol.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let n = self.dimension()?;
        if x.len() != n {
            return Err(Error::invalid(format!(
                "point has dimension {}, domain has dimension {n}",
                x.len()
            )));
        }
        match self {
            Domain::Ball { center, radius } => {
                let dist2: f64 = center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum();
                Ok(dist2.sqrt() <= radius + tol)
            }
            Domain::Box { lo, hi } => Ok(x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)),
            Domain::Hull { points } => {
                let m = points.len();
                // Variables: λ_0..λ_{m−1}, then slack pairs (u_i, v_i) per
                // coordinate with Σλ_j p_j[i] + u_i − v_i = x[i].
                let mut lp = LinearProgram::new(m + 2 * n);
                for i in 0..n {
                    lp.set_objective(m + 2 * i, 1.0);
                    lp.set_objective(m + 2 * i + 1, 1.0);
                    let mut row: Vec<(usize, f64)> =
                        points.iter().enumerate().map(|(j, p)| (j, p[i])).collect();
                    row.push((m + 2 * i, 1.0));
                    row.push((m + 2 * i + 1, -1.0));
                    lp.add_row(row, Cmp::Eq, x[i]);
                }
                lp.add_row((0..m).map(|j| (j, 1.0)).collect(), Cmp::Eq, 1.0);
                let sol = lp.solve(crate::testfn::LP_TOLERANCE, crate::testfn::LP_MAX_PIVOTS)?;
                Ok(sol.objective <= tol)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Domain::Ball { center, radius } => {
                json!({ "kind": "ball", "center": center, "radius": radius })
            }
            Domain::Box { lo, hi } => json!({ "kind": "box", "lo": lo, "hi": hi }),
            Domain::Hull { points } => json!({ "kind": "hull", "points": points }),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("domain JSON must be an object"))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::invalid("domain JSON missing string \"kind\""))?;
        let vec_field = |name: &str| -> Result<Vec<f64>> {
            obj.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::invalid(format!("domain missing array \"{name}\"")))?
                .iter()
                .map(|c| c.as_f64().ok_or_else(|| Error::invalid("coordinates must be numbers")))
                .collect()
        };
        let domain = match kind {
            "ball" => Domain::Ball {
                center: vec_field("center")?,
                radius: obj
                    .get("radius")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::invalid("ball domain missing numeric \"radius\""))?,
            },
            "box" => Domain::Box { lo: vec_field("lo")?, hi: vec_field("hi")? },
            "hull" => {
                let points = obj
                    .get("points")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::invalid("hull domain missing array \"points\""))?
                    .iter()
                    .map(|p| {
                        p.as_array()
                            .ok_or_else(|| Error::invalid("hull points must be arrays"))?
                            .iter()
                            .map(|c| {
                                c.as_f64().ok_or_else(|| {
                                    Error::invalid("coordinates must be numbers")
                                })
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()?;
                Domain::Hull { points }
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown domain kind \"{other}\" (expected ball, box, or hull)"
                )));
            }
        };
        domain.dimension()?;
        Ok(domain)
    }
}

/// An affine action: one affine map per generator, extended along words.
///
/// Construction validates what is decidable: every generator is assigned a
/// map of the right dimension, mutually inverse generators get mutually
/// inverse maps (to `1e−10`), and the defining relations of the group are
/// sampled at 100 random points (tolerance `1e−8`) — consistency on all of
/// `R^n` cannot be proven by sampling, but affine maps that agree on a
/// full-dimensional sample agree everywhere in practice.
#[derive(Clone, Debug)]
pub struct AffineAction {
    spec: Arc<GroupSpec>,
    dimension: usize,
    maps: BTreeMap<Element, AffineMap>,
    domain: Domain,
}

impl AffineAction {
    pub fn new(
        spec: Arc<GroupSpec>,
        maps: impl IntoIterator<Item = (Element, AffineMap)>,
        domain: Domain,
    ) -> Result<Self> {
        let dimension = domain.dimension()?;
        let mut table = BTreeMap::new();
        for (g, map) in maps {
            spec.validate_element(&g)?;
            if !spec.generators().contains(&g) {
                return Err(Error::invalid(
                    "actions are specified on generators only",
                ));
            }
            if map.dimension() != dimension {
                return Err(Error::invalid(format!(
                    "map for a generator has dimension {}, domain has {dimension}",
                    map.dimension()
                )));
            }
            if table.insert(g, map).is_some() {
                return Err(Error::invalid("duplicate generator assignment"));
            }
        }
        for g in spec.generators() {
            if !table.contains_key(g) {
                return Err(Error::invalid(format!(
                    "no affine map assigned to generator {}",
                    spec.element_key(g)?
                )));
            }
        }
        let action = AffineAction { spec, dimension, maps: table, domain };
        action.check_inverse_pairs()?;
        action.validate_relations(0, RELATION_SAMPLES, RELATION_TOL)?;
        Ok(action)
    }

    fn check_inverse_pairs(&self) -> Result<()> {
        if !self.spec.has_inverses() {
            return Ok(());
        }
        for g in self.spec.generators() {
            let g_inv = self.spec.invert(g)?;
            let Some(inv_map) = self.maps.get(&g_inv) else {
                continue; // inverse not itself a generator: nothing to pair
            };
            if !self.maps[g].inverts(inv_map, INVERSE_TOL) {
                return Err(Error::invalid(format!(
                    "maps for {} and {} are not mutually inverse",
                    self.spec.element_key(g)?,
                    self.spec.element_key(&g_inv)?,
                )));
            }
        }
        Ok(())
    }

    /// Sample every defining relation of the group at `samples` random
    /// points of `[−1, 1]^n`: a relation word must act as the identity.
    pub fn validate_relations(&self, seed: u64, samples: usize, tol: f64) -> Result<()> {
        let relations = self.spec.defining_relations();
        if relations.is_empty() {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for relation in &relations {
            for _ in 0..samples {
                let x: Vec<f64> =
                    (0..self.dimension).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let y = self.act_word(relation, &x)?;
                let err = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if err > tol {
                    return Err(Error::Precondition(format!(
                        "maps violate a defining relation of {} (error {err:.3e})",
                        self.spec
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn generator_map(&self, g: &Element) -> Result<&AffineMap> {
        self.maps
            .get(g)
            .ok_or_else(|| Error::invalid("element is not a generator of the action"))
    }

    /// `s ▷ x` for a single generator.
    pub fn act_generator(&self, s: &Element, x: &[f64]) -> Result<Vec<f64>> {
        self.generator_map(s)?.apply(x)
    }

    /// Act by a word of generators, rightmost letter first, so that
    /// `act([s, t], x) = s ▷ (t ▷ x)`.
    pub fn act_word(&self, word: &[Element], x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::invalid(format!(
                "point has dimension {}, action has dimension {}",
                x.len(),
                self.dimension
            )));
        }
        let mut point = x.to_vec();
        for s in word.iter().rev() {
            point = self.act_generator(s, &point)?;
        }
        Ok(point)
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut gens = serde_json::Map::new();
        for (g, map) in &self.maps {
            gens.insert(self.spec.element_key(g)?, map.to_json());
        }
        Ok(json!({
            "dimension": self.dimension,
            "generators": Value::Object(gens),
            "domain": self.domain.to_json(),
        }))
    }

    pub fn from_json(spec: Arc<GroupSpec>, v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::invalid("action JSON must be an object"))?;
        let dimension = obj
            .get("dimension")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::invalid("action JSON missing integer \"dimension\""))?;
        let gens = obj
            .get("generators")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::invalid("action JSON missing object \"generators\""))?;
        let mut maps = Vec::new();
        for (key, map_json) in gens {
            maps.push((spec.element_from_key(key)?, AffineMap::from_json(map_json)?));
        }
        let domain = Domain::from_json(
            obj.get("domain")
                .ok_or_else(|| Error::invalid("action JSON missing \"domain\""))?,
        )?;
        if domain.dimension()? != dimension as usize {
            return Err(Error::invalid("domain dimension disagrees with \"dimension\""));
        }
        AffineAction::new(spec, maps, domain)
    }
}

/// Resolve `g ▷ x0` for every element in `needed`, by breadth-first search
/// from the identity along left multiplication (so the point carried for
/// `g' = s·g` is `s ▷ (g ▷ x0)`). Stops once everything is found; errors
/// with a resource limit if the enumeration cap is exhausted first.
fn resolve_orbit_points(
    action: &AffineAction,
    x0: &[f64],
    needed: &BTreeSet<Element>,
) -> Result<BTreeMap<Element, Vec<f64>>> {
    let spec = action.spec();
    if x0.len() != action.dimension() {
        return Err(Error::invalid(format!(
            "base point has dimension {}, action has dimension {}",
            x0.len(),
            action.dimension()
        )));
    }
    let mut found: BTreeMap<Element, Vec<f64>> = BTreeMap::new();
    let mut missing = needed.len();
    let mut queue: VecDeque<Element> = VecDeque::new();
    let identity = spec.identity();
    found.insert(identity.clone(), x0.to_vec());
    if needed.contains(&identity) {
        missing -= 1;
    }
    queue.push_back(identity);
    while let Some(g) = queue.pop_front() {
        if missing == 0 {
            break;
        }
        let base = found[&g].clone();
        for s in spec.generators() {
            let moved = spec.multiply(s, &g)?;
            if found.contains_key(&moved) {
                continue;
            }
            if found.len() >= spec.enumeration_cap() {
                return Err(Error::resource(format!(
                    "orbit resolution exceeded the enumeration cap ({})",
                    spec.enumeration_cap()
                )));
            }
            let point = action.act_generator(s, &base)?;
            found.insert(moved.clone(), point);
            if needed.contains(&moved) {
                missing -= 1;
            }
            queue.push_back(moved);
        }
    }
    if missing > 0 {
        return Err(Error::Internal(
            "support element unreachable from the identity along generators".into(),
        ));
    }
    Ok(found)
}

/// The orbit map on a Cayley ball: `g ↦ g ▷ x0` for every `g` in
/// `ball(radius)`, in normal-form order.
pub fn orbit(
    action: &AffineAction,
    x0: &[f64],
    radius: u32,
) -> Result<BTreeMap<Element, Vec<f64>>> {
    let ball: BTreeSet<Element> = action.spec().ball(radius)?.into_iter().collect();
    let mut all = resolve_orbit_points(action, x0, &ball)?;
    all.retain(|e, _| ball.contains(e));
    Ok(all)
}

/// `max over w in ball(r) of ‖w ▷ x0‖∞`. Growth of this bound across
/// radii is the computable signal that the action has no bounded
/// invariant set containing the orbit.
pub fn orbit_bound(action: &AffineAction, x0: &[f64], radius: u32) -> Result<f64> {
    let points = orbit(action, x0, radius)?;
    Ok(points
        .values()
        .flat_map(|p| p.iter().map(|v| v.abs()))
        .fold(0.0, f64::max))
}

/// The linear extension of the orbit map to molecular measures:
/// `μ ↦ Σ cᵢ (sᵢ ▷ x0)`.
///
/// For a mean this is a convex combination of orbit points (hence stays in
/// the convex hull of the orbit); for total-mass-one signed measures it is
/// an affine combination and still satisfies the equivariance
/// `s ▷ orbit_average(μ) = orbit_average(s⊛μ)`, because affine maps
/// commute with affine combinations.
pub fn orbit_average(
    mu: &MolecularMeasure,
    action: &AffineAction,
    x0: &[f64],
) -> Result<Vec<f64>> {
    if mu.spec() != action.spec() {
        return Err(Error::invalid("measure and action live on different specs"));
    }
    let needed: BTreeSet<Element> = mu.support().map(|(e, _)| e.clone()).collect();
    let points = resolve_orbit_points(action, x0, &needed)?;
    let mut out = vec![0.0; action.dimension()];
    for (e, c) in mu.support() {
        for (acc, v) in out.iter_mut().zip(&points[e]) {
            *acc += c * v;
        }
    }
    Ok(out)
}

/// Materialize the test function `t ↦ ⟨xi, t ▷ x0⟩` on `ball(radius)`,
/// with default value `⟨xi, x0⟩` (the value at the identity). Every orbit
/// point must stay in the action's declared domain — escaping it violates
/// the boundedness hypothesis the construction rests on.
pub fn pullback_functional(
    xi: &[f64],
    action: &AffineAction,
    x0: &[f64],
    radius: u32,
) -> Result<TestFunction> {
    if xi.len() != action.dimension() {
        return Err(Error::invalid(format!(
            "functional has dimension {}, action has dimension {}",
            xi.len(),
            action.dimension()
        )));
    }
    let points = orbit(action, x0, radius)?;
    let pair = |p: &[f64]| xi.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    let mut values = Vec::with_capacity(points.len());
    for (e, p) in &points {
        if !action.domain().contains(p, DOMAIN_TOL)? {
            return Err(Error::Precondition(format!(
                "orbit escapes the declared domain at {}",
                action.spec().element_key(e)?
            )));
        }
        values.push((e.clone(), pair(p)));
    }
    TestFunction::from_values(action.spec().clone(), pair(x0), values)
}

/// One row of an approximate-fixed-point run: everything needed to check
/// the residual identity and the residual bound after the fact.
#[derive(Clone, Debug)]
pub struct AfpRow {
    /// Caller-supplied label for the mean (typically its support radius).
    pub radius: u32,
    /// `orbit_average` of the mean.
    pub point: Vec<f64>,
    /// Worst per-generator total-variation defect of the mean.
    pub tv_defect: f64,
    /// `‖x − s▷x‖∞` per generator.
    pub residuals: Vec<(Element, f64)>,
    /// Worst residual across generators.
    pub max_residual: f64,
    /// `max_s ‖(x − s▷x) − orbit_average(μ − s⊛μ)‖∞` — zero up to
    /// rounding, because the identity is algebraically exact.
    pub residual_identity_error: f64,
    /// `(tv_defect/2) · orbit_diameter`; `max_residual` never exceeds it.
    pub residual_bound: f64,
    /// `diam∞` of all orbit points the row touched.
    pub orbit_diameter: f64,
    /// Whether some touched orbit point left the declared domain
    /// (reported, not fatal: it flags a failed boundedness hypothesis).
    pub orbit_escaped: bool,
}

/// The full trace of an approximate-fixed-point run.
#[derive(Clone, Debug)]
pub struct AfpTrace {
    pub dimension: usize,
    pub rows: Vec<AfpRow>,
}

/// Push a sequence of labelled means through the orbit map and record, for
/// each, the fixed-point residuals with their exact-identity check and
/// their total-variation bound.
pub fn afp_pipeline(
    action: &AffineAction,
    x0: &[f64],
    means: &[(u32, MolecularMeasure)],
) -> Result<AfpTrace> {
    if !action.domain().contains(x0, DOMAIN_TOL)? {
        return Err(Error::Precondition(
            "base point lies outside the declared domain".into(),
        ));
    }
    let spec = action.spec().clone();
    let mut rows = Vec::with_capacity(means.len());
    for (radius, mu) in means {
        if mu.spec() != &spec {
            return Err(Error::invalid("mean and action live on different specs"));
        }
        if !mu.is_mean(1e-9) {
            return Err(Error::Precondition(format!(
                "input at radius {radius} is not a mean at tolerance 1e-9"
            )));
        }
        // Resolve orbit points for the support and all its one-step shifts.
        let mut needed: BTreeSet<Element> = mu.support().map(|(e, _)| e.clone()).collect();
        for s in spec.generators() {
            for (e, _) in mu.support() {
                needed.insert(spec.multiply(s, e)?);
            }
        }
        let points = resolve_orbit_points(action, x0, &needed)?;
        let touched: Vec<&Vec<f64>> = needed.iter().map(|e| &points[e]).collect();

        let x = orbit_average(mu, action, x0)?;
        let mut residuals = Vec::new();
        let mut tv_defect = 0.0f64;
        let mut identity_err = 0.0f64;
        for s in spec.generators() {
            let sx = action.act_generator(s, &x)?;
            let residual = sup_distance(&x, &sx);
            residuals.push((s.clone(), residual));
            let delta = crate::testfn::displacement(mu, s)?;
            tv_defect = tv_defect.max(delta.tv_norm());
            // x − s▷x = orbit_average(μ − s⊛μ) = −orbit_average(δ).
            let avg_delta = orbit_average(&delta, action, x0)?;
            let err = x
                .iter()
                .zip(&sx)
                .zip(&avg_delta)
                .map(|((xi, sxi), di)| ((xi - sxi) + di).abs())
                .fold(0.0, f64::max);
            identity_err = identity_err.max(err);
        }
        let max_residual = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        let orbit_diameter = diameter(&touched);
        let mut orbit_escaped = false;
        for p in &touched {
            if !action.domain().contains(p, DOMAIN_TOL)? {
                orbit_escaped = true;
                break;
            }
        }
        rows.push(AfpRow {
            radius: *radius,
            point: x,
            tv_defect,
            residuals,
            max_residual,
            residual_identity_error: identity_err,
            residual_bound: tv_defect / 2.0 * orbit_diameter,
            orbit_diameter,
            orbit_escaped,
        });
    }
    Ok(AfpTrace { dimension: action.dimension(), rows })
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn diameter(points: &[&Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(sup_distance(p, q));
        }
    }
    best
}

/// The canonical action of a finite group on its probability simplex:
/// coordinates are indexed by group elements in normal-form order, and a
/// generator acts by the permutation matrix of left multiplication. The
/// uniform mean maps to the barycenter, which is the fixed point.
pub fn canonical_action(spec: &Arc<GroupSpec>) -> Result<AffineAction> {
    if !spec.is_finite() {
        return Err(Error::unsupported(format!(
            "the canonical simplex action needs a finite group, not {spec}"
        )));
    }
    let elements = spec.all_elements()?;
    let n = elements.len();
    let index: BTreeMap<&Element, usize> =
        elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut maps = Vec::new();
    for s in spec.generators() {
        let mut a = vec![vec![0.0; n]; n];
        for (col, x) in elements.iter().enumerate() {
            let moved = spec.multiply(s, x)?;
            a[index[&moved]][col] = 1.0;
        }
        maps.push((s.clone(), AffineMap::new(a, vec![0.0; n])?));
    }
    let mut vertices = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        vertices.push(v);
    }
    AffineAction::new(spec.clone(), maps, Domain::Hull { points: vertices })
}
