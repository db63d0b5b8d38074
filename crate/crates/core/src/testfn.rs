//! Bounded test functions with finitely many non-default values, the
//! translate operators, and the per-generator defect functionals.
//!
//! A test function stores a default value plus a sparse map of exceptions,
//! so translating it is a support permutation and evaluating a measure
//! against it is a finite sum. Three defect notions for a measure `μ` and a
//! group element `s` are built on top, all reading the displacement
//! `s ⊛ μ − μ`:
//!
//! * **total variation** — the TV norm of the displacement (see
//!   [`crate::measure::MolecularMeasure::tv_norm`]);
//! * **weak** — the largest pairing against a fixed finite family of
//!   functions ([`defect_weak`]);
//! * **bounded-Lipschitz** — the supremum of the pairing over every
//!   function with `‖f‖∞ ≤ sup_cap` and `|f(x) − f(y)| ≤ lip_cap·ρ(x, y)`,
//!   computed exactly by a small linear program ([`defect_blip_witness`]).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Distance, Element, GroupSpec};
use crate::lp::{Cmp, LinearProgram, LpOutcome};
use crate::measure::MolecularMeasure;

/// Optimality/feasibility tolerance handed to the embedded simplex.
pub const LP_TOLERANCE: f64 = 1e-9;
/// Pivot budget for the embedded simplex; Bland's rule terminates long
/// before this on every problem size this crate produces.
pub const LP_MAX_PIVOTS: usize = 200_000;

/// A real-valued function on a group that equals `default` everywhere
/// except at finitely many stored points.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    spec: Arc<GroupSpec>,
    default: f64,
    values: BTreeMap<Element, f64>,
}

impl TestFunction {
    /// Build from a default value and (element, value) exceptions.
    /// Entries equal to the default are dropped; conflicting duplicates
    /// are rejected.
    pub fn from_values(
        spec: Arc<GroupSpec>,
        default: f64,
        pairs: impl IntoIterator<Item = (Element, f64)>,
    ) -> Result<Self> {
        if !default.is_finite() {
            return Err(Error::invalid("test function default must be finite"));
        }
        let mut values: BTreeMap<Element, f64> = BTreeMap::new();
        for (e, v) in pairs {
            if !v.is_finite() {
                return Err(Error::invalid("test function values must be finite"));
            }
            spec.validate_element(&e)?;
            if let Some(&old) = values.get(&e) {
                if old != v {
                    return Err(Error::invalid(format!(
                        "conflicting values {old} and {v} for the same element"
                    )));
                }
            }
            if v != default {
                values.insert(e, v);
            } else {
                values.remove(&e);
            }
        }
        Ok(TestFunction { spec, default, values })
    }

    /// The constant function `c`.
    pub fn constant(spec: Arc<GroupSpec>, c: f64) -> Result<Self> {
        TestFunction::from_values(spec, c, [])
    }

    /// The indicator of a single point: `1` at `at`, `0` elsewhere.
    pub fn indicator(spec: Arc<GroupSpec>, at: Element) -> Result<Self> {
        TestFunction::from_values(spec, 0.0, [(at, 1.0)])
    }

    pub fn value(&self, x: &Element) -> f64 {
        self.values.get(x).copied().unwrap_or(self.default)
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    /// `sup |f| = max(|default|, max over exceptions)`.
    pub fn sup_bound(&self) -> f64 {
        self.values
            .values()
            .map(|v| v.abs())
            .fold(self.default.abs(), f64::max)
    }

    /// The stored exceptions in normal-form order.
    pub fn support(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.values.iter().map(|(e, &v)| (e, v))
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    /// The left translate `(ₛf)(t) = f(s·t)`. Needs inverses: the stored
    /// exception at `x` moves to `s⁻¹·x`.
    pub fn left_translate(&self, s: &Element) -> Result<Self> {
        self.spec.validate_element(s)?;
        let s_inv = self.spec.invert(s)?;
        let mut values = BTreeMap::new();
        for (x, &v) in &self.values {
            values.insert(self.spec.multiply(&s_inv, x)?, v);
        }
        Ok(TestFunction { spec: self.spec.clone(), default: self.default, values })
    }

    /// The right translate `(fₛ)(t) = f(t·s)`; the exception at `x` moves
    /// to `x·s⁻¹`.
    pub fn right_translate(&self, s: &Element) -> Result<Self> {
        self.spec.validate_element(s)?;
        let s_inv = self.spec.invert(s)?;
        let mut values = BTreeMap::new();
        for (x, &v) in &self.values {
            values.insert(self.spec.multiply(x, &s_inv)?, v);
        }
        Ok(TestFunction { spec: self.spec.clone(), default: self.default, values })
    }

    /// JSON form: `{"default": d, "values": [{"element": …, "value": …}]}`
    /// with the values sorted by element normal form.
    pub fn to_json(&self) -> Result<Value> {
        let mut out = Vec::with_capacity(self.values.len());
        for (e, v) in &self.values {
            out.push(json!({
                "element": self.spec.element_to_json(e)?,
                "value": v,
            }));
        }
        Ok(json!({ "default": self.default, "values": out }))
    }

    pub fn from_json(spec: Arc<GroupSpec>, value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid("test function JSON must be an object"))?;
        // "values" is optional (a bare default is a constant function), so a
        // misspelled key would otherwise silently drop the whole support.
        if let Some(key) = obj.keys().find(|k| *k != "default" && *k != "values") {
            return Err(Error::invalid(format!(
                "unknown test function key {key:?}; expected \"default\" and optional \"values\""
            )));
        }
        let default = obj
            .get("default")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::invalid("test function JSON missing numeric \"default\""))?;
        let mut pairs = Vec::new();
        if let Some(values) = obj.get("values") {
            let arr = values
                .as_array()
                .ok_or_else(|| Error::invalid("test function \"values\" must be an array"))?;
            for entry in arr {
                let eobj = entry
                    .as_object()
                    .ok_or_else(|| Error::invalid("test function values must be objects"))?;
                let e = eobj
                    .get("element")
                    .ok_or_else(|| Error::invalid("test function value missing \"element\""))?;
                let v = eobj
                    .get("value")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::invalid("test function value missing numeric \"value\""))?;
                pairs.push((spec.element_from_json(e)?, v));
            }
        }
        TestFunction::from_values(spec, default, pairs)
    }
}

/// An explicitly tabulated pseudometric on finitely many points.
/// Symmetric storage; the diagonal is implicitly zero.
#[derive(Clone, Debug, Default)]
pub struct MetricTable {
    entries: BTreeMap<(Element, Element), f64>,
}

impl MetricTable {
    /// Build from `(x, y, distance)` triples. Distances must be finite and
    /// nonnegative, the diagonal must be zero, and a pair given in both
    /// orders must agree.
    pub fn from_pairs(
        spec: &GroupSpec,
        triples: impl IntoIterator<Item = (Element, Element, f64)>,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (x, y, d) in triples {
            spec.validate_element(&x)?;
            spec.validate_element(&y)?;
            if !d.is_finite() || d < 0.0 {
                return Err(Error::invalid("distances must be finite and nonnegative"));
            }
            if x == y {
                if d != 0.0 {
                    return Err(Error::invalid("a pseudometric is zero on the diagonal"));
                }
                continue;
            }
            let key = if x <= y { (x, y) } else { (y, x) };
            if let Some(&old) = entries.get(&key) {
                if old != d {
                    return Err(Error::invalid(format!(
                        "conflicting distances {old} and {d} for the same pair"
                    )));
                }
            }
            entries.insert(key, d);
        }
        Ok(MetricTable { entries })
    }

    /// Distance between two points, `None` if the pair is not tabulated.
    pub fn get(&self, x: &Element, y: &Element) -> Option<f64> {
        if x == y {
            return Some(0.0);
        }
        let key = if x <= y {
            (x.clone(), y.clone())
        } else {
            (y.clone(), x.clone())
        };
        self.entries.get(&key).copied()
    }
}

/// A finite family of test functions inducing the pseudometric
/// `ρ(x, y) = max_i |f_i(x) − f_i(y)|`. Every member must satisfy
/// `sup |f_i| ≤ 1`, so each `f_i` lies in the unit bounded-Lipschitz ball
/// of its own pseudometric — that containment is what makes the
/// bounded-Lipschitz defect dominate the weak defect against the family.
#[derive(Clone, Debug)]
pub struct FunctionFamily {
    functions: Vec<TestFunction>,
}

impl FunctionFamily {
    pub fn new(functions: Vec<TestFunction>) -> Result<Self> {
        if let Some(first) = functions.first() {
            for f in &functions {
                if f.spec() != first.spec() {
                    return Err(Error::invalid("family members live on different specs"));
                }
                let sup = f.sup_bound();
                if sup > 1.0 {
                    return Err(Error::Precondition(format!(
                        "family members must satisfy sup |f| ≤ 1, found {sup}"
                    )));
                }
            }
        }
        Ok(FunctionFamily { functions })
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    /// `ρ(x, y) = max_i |f_i(x) − f_i(y)|` (zero for the empty family).
    pub fn distance(&self, x: &Element, y: &Element) -> f64 {
        self.functions
            .iter()
            .map(|f| (f.value(x) - f.value(y)).abs())
            .fold(0.0, f64::max)
    }

    fn check_spec(&self, spec: &GroupSpec) -> Result<()> {
        if let Some(first) = self.functions.first() {
            if first.spec().as_ref() != spec {
                return Err(Error::invalid(
                    "function family and measure live on different specs",
                ));
            }
        }
        Ok(())
    }
}

/// Where the pseudometric for a bounded-Lipschitz ball comes from.
#[derive(Clone, Debug)]
pub enum MetricSource {
    /// The word metric of the generating set.
    WordMetric,
    /// The discrete metric scaled so the unit Lipschitz ball coincides with
    /// the sup-norm unit ball: `ρ(x, y) = 2` for `x ≠ y`. With unit caps
    /// the bounded-Lipschitz defect then equals `min(tv, 2)`.
    Discrete,
    /// An explicit table of pairwise distances.
    Table(MetricTable),
    /// The pseudometric induced by a family of functions bounded by one.
    Family(FunctionFamily),
}

impl MetricSource {
    /// Distance between two points; `None` means "unconstrained"
    /// (an infinite word-metric distance). A tabulated metric with a
    /// missing pair is an error — silence there would silently weaken
    /// the ball.
    pub fn distance(&self, spec: &GroupSpec, x: &Element, y: &Element) -> Result<Option<f64>> {
        match self {
            MetricSource::WordMetric => match spec.word_metric(x, y)? {
                Distance::Finite(d) => Ok(Some(d as f64)),
                Distance::Infinite => Ok(None),
            },
            MetricSource::Discrete => Ok(Some(if x == y { 0.0 } else { 2.0 })),
            MetricSource::Table(table) => match table.get(x, y) {
                Some(d) => Ok(Some(d)),
                // A miss means the support escaped the tabulated domain;
                // treating it as "unconstrained" would silently weaken
                // the ball, so it is a hard limit instead.
                None => Err(Error::resource(format!(
                    "support escapes the tabulated metric domain on {spec}"
                ))),
            },
            MetricSource::Family(family) => {
                family.check_spec(spec)?;
                Ok(Some(family.distance(x, y)))
            }
        }
    }
}

impl MetricSource {
    /// The lazily evaluated pseudometric `ρ(x, y) = max_i |f_i(x) − f_i(y)|`
    /// of a family with `sup |f_i| ≤ 1` (rejected otherwise).
    pub fn family(functions: Vec<TestFunction>) -> Result<MetricSource> {
        Ok(MetricSource::Family(FunctionFamily::new(functions)?))
    }
}

/// Materialize the pseudometric `ρ(x, y) = max_i |f_i(x) − f_i(y)|` of a
/// family with `sup |f_i| ≤ 1` as a table over the given points. The
/// result is symmetric, zero on the diagonal, and satisfies the triangle
/// inequality (each `|f_i(x) − f_i(y)|` does, and a pointwise maximum of
/// pseudometrics is one).
pub fn pseudometric_from_family(
    spec: &GroupSpec,
    functions: &[TestFunction],
    pts: &[Element],
) -> Result<MetricTable> {
    let family = FunctionFamily::new(functions.to_vec())?;
    family.check_spec(spec)?;
    let mut triples = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        for y in &pts[i + 1..] {
            triples.push((x.clone(), y.clone(), family.distance(x, y)));
        }
    }
    MetricTable::from_pairs(spec, triples)
}

/// The test-function ball for the bounded-Lipschitz defect: all `f` with
/// `‖f‖∞ ≤ sup_cap` and `|f(x) − f(y)| ≤ lip_cap · ρ(x, y)`.
#[derive(Clone, Debug)]
pub struct LipschitzBallSpec {
    metric: MetricSource,
    sup_cap: f64,
    lip_cap: f64,
}

impl LipschitzBallSpec {
    /// The unit ball: `sup_cap = lip_cap = 1`.
    pub fn new(metric: MetricSource) -> Self {
        LipschitzBallSpec { metric, sup_cap: 1.0, lip_cap: 1.0 }
    }

    pub fn with_caps(metric: MetricSource, sup_cap: f64, lip_cap: f64) -> Result<Self> {
        if !(sup_cap.is_finite() && sup_cap > 0.0 && lip_cap.is_finite() && lip_cap > 0.0) {
            return Err(Error::invalid("ball caps must be finite and positive"));
        }
        Ok(LipschitzBallSpec { metric, sup_cap, lip_cap })
    }

    pub fn metric(&self) -> &MetricSource {
        &self.metric
    }

    pub fn sup_cap(&self) -> f64 {
        self.sup_cap
    }

    pub fn lip_cap(&self) -> f64 {
        self.lip_cap
    }
}

/// The displacement `s ⊛ μ − μ` whose pairings all three defects read.
pub fn displacement(mu: &MolecularMeasure, s: &Element) -> Result<MolecularMeasure> {
    let shifted = mu.convolve_left(s)?;
    MolecularMeasure::combine(&[(1.0, &shifted), (-1.0, mu)])
}

/// Weak defect against a finite family: `max_i |⟨s ⊛ μ − μ, f_i⟩|`
/// (zero for the empty family).
pub fn defect_weak(mu: &MolecularMeasure, s: &Element, family: &[TestFunction]) -> Result<f64> {
    let delta = displacement(mu, s)?;
    let mut worst = 0.0f64;
    for f in family {
        worst = worst.max(delta.evaluate(f)?.abs());
    }
    Ok(worst)
}

/// Bounded-Lipschitz defect: `sup ⟨s ⊛ μ − μ, f⟩` over the ball.
pub fn defect_blip(mu: &MolecularMeasure, s: &Element, ball: &LipschitzBallSpec) -> Result<f64> {
    defect_blip_witness(mu, s, ball).map(|(v, _)| v)
}

/// Bounded-Lipschitz defect together with a maximizing test function.
///
/// The linear program optimizes only over values on the displacement's
/// support. That loses nothing: a feasible assignment on finitely many
/// points extends to the whole group without raising the Lipschitz
/// constant (McShane–Whitney extension) and clamping the extension at
/// `±sup_cap` preserves both caps, while the pairing reads only the
/// support. The returned witness stores the optimal values on those
/// points (default `0` elsewhere); pairing it with the displacement
/// reproduces the reported defect exactly.
pub fn defect_blip_witness(
    mu: &MolecularMeasure,
    s: &Element,
    ball: &LipschitzBallSpec,
) -> Result<(f64, TestFunction)> {
    let spec = mu.spec().clone();
    let delta = displacement(mu, s)?;
    let pts: Vec<(Element, f64)> = delta.support().map(|(e, c)| (e.clone(), c)).collect();
    if pts.is_empty() {
        return Ok((0.0, TestFunction::constant(spec, 0.0)?));
    }

    let k = pts.len();
    let mut lp = LinearProgram::new(k);
    for (j, (_, c)) in pts.iter().enumerate() {
        lp.set_bounds(j, -ball.sup_cap, ball.sup_cap);
        lp.set_objective(j, -c); // the simplex minimizes; we maximize ⟨δ, f⟩
    }
    for j in 0..k {
        for l in (j + 1)..k {
            let Some(d) = ball.metric.distance(&spec, &pts[j].0, &pts[l].0)? else {
                continue;
            };
            let gap = ball.lip_cap * d;
            if gap == 0.0 {
                lp.add_row(vec![(j, 1.0), (l, -1.0)], Cmp::Eq, 0.0);
            } else if gap < 2.0 * ball.sup_cap {
                // Wider gaps are implied by the box bounds; skip them.
                lp.add_row(vec![(j, 1.0), (l, -1.0)], Cmp::Le, gap);
                lp.add_row(vec![(l, 1.0), (j, -1.0)], Cmp::Le, gap);
            }
        }
    }
    let sol = lp.solve(LP_TOLERANCE, LP_MAX_PIVOTS)?;
    if sol.outcome != LpOutcome::Optimal {
        return Err(Error::Solver(
            "bounded-Lipschitz defect program hit its pivot budget".into(),
        ));
    }
    let value: f64 = pts.iter().zip(&sol.x).map(|((_, c), f)| c * f).sum();
    let witness = TestFunction::from_values(
        spec,
        0.0,
        pts.iter().zip(&sol.x).map(|((e, _), &f)| (e.clone(), f)),
    )?;
    // The ball is symmetric (f ↦ −f), so the true optimum is nonnegative;
    // clamp the last-digit noise that cancellation in δ can leave behind.
    Ok((value.max(0.0), witness))
}
