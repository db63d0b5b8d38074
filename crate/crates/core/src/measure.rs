//! Finitely supported signed measures ("molecular measures") on a group or
//! semigroup, with the convolution action by elements.
//!
//! A measure is a sparse map from normal forms to real coefficients; exact
//! zeros are never stored, so canonical forms are unique and structural
//! equality is meaningful. Convolution by an element permutes (or, in a
//! non-injective semigroup, merges) the support — coefficients are never
//! scaled — so means stay means exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::group::{Element, GroupSpec};
use crate::testfn::TestFunction;

#[derive(Clone, Debug, PartialEq)]
pub struct MolecularMeasure {
    spec: Arc<GroupSpec>,
    coeffs: BTreeMap<Element, f64>,
}

impl MolecularMeasure {
    /// The zero measure.
    pub fn zero(spec: Arc<GroupSpec>) -> Self {
        MolecularMeasure { spec, coeffs: BTreeMap::new() }
    }

    /// The point mass at `s`: evaluation at `s` as a functional.
    pub fn point_mass(spec: Arc<GroupSpec>, s: Element) -> Result<Self> {
        spec.validate_element(&s)?;
        let mut coeffs = BTreeMap::new();
        coeffs.insert(s, 1.0);
        Ok(MolecularMeasure { spec, coeffs })
    }

    /// Build from (element, weight) pairs; duplicate elements merge by
    /// addition, exact zeros are dropped, weights must be finite.
    pub fn from_weights(
        spec: Arc<GroupSpec>,
        pairs: impl IntoIterator<Item = (Element, f64)>,
    ) -> Result<Self> {
        let mut coeffs: BTreeMap<Element, f64> = BTreeMap::new();
        for (e, w) in pairs {
            if !w.is_finite() {
                return Err(Error::invalid("measure weights must be finite"));
            }
            spec.validate_element(&e)?;
            *coeffs.entry(e).or_insert(0.0) += w;
        }
        coeffs.retain(|_, w| *w != 0.0);
        Ok(MolecularMeasure { spec, coeffs })
    }

    /// Linear combination `Σ scale_i · μ_i`. All terms must live on the
    /// same spec.
    pub fn combine(terms: &[(f64, &MolecularMeasure)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::invalid("combine needs at least one term"));
        };
        let spec = first.spec.clone();
        let mut coeffs: BTreeMap<Element, f64> = BTreeMap::new();
        for (scale, m) in terms {
            if !scale.is_finite() {
                return Err(Error::invalid("combination scales must be finite"));
            }
            if m.spec != spec {
                return Err(Error::invalid(format!(
                    "cannot combine measures on {} and {}",
                    spec, m.spec
                )));
            }
            for (e, w) in &m.coeffs {
                *coeffs.entry(e.clone()).or_insert(0.0) += scale * w;
            }
        }
        coeffs.retain(|_, w| *w != 0.0);
        Ok(MolecularMeasure { spec, coeffs })
    }

    /// Pair the measure with a bounded test function: `Σ c_i f(s_i)`.
    pub fn evaluate(&self, f: &TestFunction) -> Result<f64> {
        if f.spec() != &self.spec {
            return Err(Error::invalid("measure and test function live on different specs"));
        }
        // Summation order is canonicalized (sorted by value) so that two
        // measures carrying the same multiset of terms — e.g. μ paired
        // with a translated function versus the translated measure paired
        // with the original — evaluate to bit-identical results no matter
        // how translation reorders the support.
        Ok(sum_canonical(
            self.coeffs.iter().map(|(e, w)| w * f.value(e)),
        ))
    }

    /// The convolution action `s ⊛ μ`: each point mass at `x` moves to
    /// `s·x` with its coefficient unchanged.
    pub fn convolve_left(&self, s: &Element) -> Result<Self> {
        self.spec.validate_element(s)?;
        let mut coeffs: BTreeMap<Element, f64> = BTreeMap::new();
        for (e, w) in &self.coeffs {
            let moved = self.spec.multiply(s, e)?;
            *coeffs.entry(moved).or_insert(0.0) += w;
        }
        coeffs.retain(|_, w| *w != 0.0);
        Ok(MolecularMeasure { spec: self.spec.clone(), coeffs })
    }

    /// The right-sided companion `μ ⊛ s`, moving mass from `x` to `x·s`.
    /// Provided for symmetry with [`MolecularMeasure::convolve_left`]; the
    /// defect machinery in this crate only uses the left action.
    pub fn convolve_right(&self, s: &Element) -> Result<Self> {
        self.spec.validate_element(s)?;
        let mut coeffs: BTreeMap<Element, f64> = BTreeMap::new();
        for (e, w) in &self.coeffs {
            let moved = self.spec.multiply(e, s)?;
            *coeffs.entry(moved).or_insert(0.0) += w;
        }
        coeffs.retain(|_, w| *w != 0.0);
        Ok(MolecularMeasure { spec: self.spec.clone(), coeffs })
    }

    /// Total-variation norm `Σ |c_i|` (so `tv_norm(δ_a − δ_b) = 2`).
    pub fn tv_norm(&self) -> f64 {
        sum_canonical(self.coeffs.values().map(|w| w.abs()))
    }

    /// Total mass `Σ c_i` — the pairing with the constant-one function.
    pub fn total_mass(&self) -> f64 {
        sum_canonical(self.coeffs.values().copied())
    }

    /// Whether the measure is a mean: coefficients nonnegative and total
    /// mass one, both up to `tol`.
    pub fn is_mean(&self, tol: f64) -> bool {
        let nonneg = self.coeffs.values().all(|&w| w >= -tol);
        nonneg && (self.total_mass() - 1.0).abs() <= tol
    }

    /// Coefficient at `e` (zero off the support).
    pub fn coeff(&self, e: &Element) -> f64 {
        self.coeffs.get(e).copied().unwrap_or(0.0)
    }

    /// Support iteration in normal-form order.
    pub fn support(&self) -> impl Iterator<Item = (&Element, f64)> {
        self.coeffs.iter().map(|(e, &w)| (e, w))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn spec(&self) -> &Arc<GroupSpec> {
        &self.spec
    }

    /// JSON form: an array of `{"element": …, "weight": …}` sorted by
    /// element normal form. `prune_below` optionally drops entries with
    /// `|weight| < threshold` from the serialization only — the in-memory
    /// measure is never pruned.
    pub fn to_json(&self, prune_below: Option<f64>) -> Result<Value> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (e, w) in &self.coeffs {
            if let Some(t) = prune_below {
                if w.abs() < t {
                    continue;
                }
            }
            out.push(json!({
                "element": self.spec.element_to_json(e)?,
                "weight": w,
            }));
        }
        Ok(Value::Array(out))
    }

    pub fn from_json(spec: Arc<GroupSpec>, value: &Value) -> Result<Self> {
        let arr = value
            .as_array()
            .ok_or_else(|| Error::invalid("measure JSON must be an array"))?;
        let mut pairs = Vec::with_capacity(arr.len());
        for entry in arr {
            let obj = entry
                .as_object()
                .ok_or_else(|| Error::invalid("measure entries must be objects"))?;
            let e = obj
                .get("element")
                .ok_or_else(|| Error::invalid("measure entry missing \"element\""))?;
            let w = obj
                .get("weight")
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::invalid("measure entry missing numeric \"weight\""))?;
            pairs.push((spec.element_from_json(e)?, w));
        }
        MolecularMeasure::from_weights(spec, pairs)
    }
}

/// Sum in a canonical order (sorted by value) so that any two term
/// multisets that are equal bit-for-bit — e.g. a measure's coefficients
/// before and after a convolution permutes its support — produce
/// bit-identical sums. Support ordering never leaks into numerics.
fn sum_canonical(terms: impl Iterator<Item = f64>) -> f64 {
    let mut terms: Vec<f64> = terms.collect();
    terms.sort_unstable_by(f64::total_cmp);
    // Fold from +0.0: the standard sum's -0.0 identity would let a
    // negative zero escape from empty or cancelling sums.
    terms.into_iter().fold(0.0, |acc, t| acc + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{shared, GroupKind};
    use crate::testfn::TestFunction;

    #[test]
    fn point_mass_evaluates_by_sampling() {
        let z = shared(GroupKind::Zd { d: 1 }).unwrap();
        let f = TestFunction::from_values(
            z.clone(),
            0.25,
            [(Element::Ints(vec![3]), 2.0), (Element::Ints(vec![-1]), -1.0)],
        )
        .unwrap();
        let d3 = MolecularMeasure::point_mass(z.clone(), Element::Ints(vec![3])).unwrap();
        assert_eq!(d3.evaluate(&f).unwrap(), 2.0);
        let d0 = MolecularMeasure::point_mass(z, Element::Ints(vec![0])).unwrap();
        assert_eq!(d0.evaluate(&f).unwrap(), 0.25);
    }

    #[test]
    fn convolution_moves_point_masses() {
        // 2 ⊛ δ(3) = δ(5) in the 6-element cyclic group.
        let c6 = shared(GroupKind::FiniteCyclic { n: 6 }).unwrap();
        let d3 = MolecularMeasure::point_mass(c6.clone(), Element::Ints(vec![3])).unwrap();
        let moved = d3.convolve_left(&Element::Ints(vec![2])).unwrap();
        let d5 = MolecularMeasure::point_mass(c6, Element::Ints(vec![5])).unwrap();
        assert_eq!(moved, d5);
    }

    #[test]
    fn convolution_is_associative_with_multiplication() {
        let f2 = shared(GroupKind::FreeGroup { rank: 2 }).unwrap();
        let ball = f2.ball(2).unwrap();
        let mu = MolecularMeasure::from_weights(
            f2.clone(),
            ball.iter().enumerate().map(|(i, e)| (e.clone(), 0.1 + i as f64)),
        )
        .unwrap();
        for s in f2.generators() {
            for t in f2.generators() {
                let st = f2.multiply(s, t).unwrap();
                let nested = mu.convolve_left(t).unwrap().convolve_left(s).unwrap();
                let direct = mu.convolve_left(&st).unwrap();
                assert_eq!(nested, direct);
            }
        }
    }

    #[test]
    fn tv_norm_of_point_mass_difference_is_two() {
        let z = shared(GroupKind::Zd { d: 1 }).unwrap();
        let da = MolecularMeasure::point_mass(z.clone(), Element::Ints(vec![0])).unwrap();
        let db = MolecularMeasure::point_mass(z, Element::Ints(vec![7])).unwrap();
        let diff = MolecularMeasure::combine(&[(1.0, &da), (-1.0, &db)]).unwrap();
        assert_eq!(diff.tv_norm(), 2.0);
        // Difference with itself cancels exactly and the zeros are dropped.
        let self_diff = MolecularMeasure::combine(&[(1.0, &da), (-1.0, &da)]).unwrap();
        assert!(self_diff.is_zero());
    }

    #[test]
    fn convolution_preserves_means_exactly() {
        let nat = shared(GroupKind::NatAdd).unwrap();
        let mu = MolecularMeasure::from_weights(
            nat.clone(),
            (0..4).map(|k| (Element::Ints(vec![k]), 0.25)),
        )
        .unwrap();
        assert!(mu.is_mean(0.0));
        let shifted = mu.convolve_left(&Element::Ints(vec![2])).unwrap();
        assert!(shifted.is_mean(0.0));
        assert_eq!(shifted.total_mass(), mu.total_mass());
    }

    #[test]
    fn combine_rejects_mismatched_specs() {
        let z = shared(GroupKind::Zd { d: 1 }).unwrap();
        let c6 = shared(GroupKind::FiniteCyclic { n: 6 }).unwrap();
        let a = MolecularMeasure::point_mass(z, Element::Ints(vec![0])).unwrap();
        let b = MolecularMeasure::point_mass(c6, Element::Ints(vec![0])).unwrap();
        assert!(matches!(
            MolecularMeasure::combine(&[(1.0, &a), (1.0, &b)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn json_round_trip_is_sorted_and_stable() {
        let f2 = shared(GroupKind::FreeGroup { rank: 2 }).unwrap();
        let mu = MolecularMeasure::from_weights(
            f2.clone(),
            [
                (Element::Word(vec![2, 1]), 0.5),
                (Element::Word(vec![]), 0.25),
                (Element::Word(vec![-1]), 0.25),
            ],
        )
        .unwrap();
        let v = mu.to_json(None).unwrap();
        let elems: Vec<String> = v
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["element"].as_str().unwrap().to_string())
            .collect();
        let mut sorted = elems.clone();
        sorted.sort();
        // BTreeMap order on words is length-free lexicographic on letters,
        // which here agrees with string order.
        assert_eq!(elems, sorted);
        let back = MolecularMeasure::from_json(f2, &v).unwrap();
        assert_eq!(back, mu);
        // Pruning is serialization-only.
        let pruned = mu.to_json(Some(0.3)).unwrap();
        assert_eq!(pruned.as_array().unwrap().len(), 1);
        assert_eq!(mu.support_len(), 3);
    }
}
