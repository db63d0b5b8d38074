//! Finitely generated groups and semigroups with exact normal forms.
//!
//! Every element is a canonical normal form over machine integers, so
//! equality, ordering and hashing are structural, and multiplication is
//! exact — no floating point enters this module. The supported kinds are
//! `Z^d`, finite cyclic groups, finite symmetric groups, free groups,
//! the discrete Heisenberg group, the lamplighter group, the additive
//! semigroup of naturals, and finite direct products of these.
//!
//! A [`GroupSpec`] pins the generator convention for its kind; Cayley balls
//! are enumerated by breadth-first search over that generator list, subject
//! to an enumeration cap (default 200 000 elements).

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Default cap on the number of elements any single enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: usize = 200_000;

/// Canonical element normal forms.
///
/// Which variant is legal depends on the [`GroupKind`]:
/// integer tuples for `Z^d` (length `d`), Heisenberg (length 3),
/// finite cyclic (length 1, value in `0..n`) and the additive naturals
/// (length 1, nonnegative); reduced words for free groups; permutation
/// tables for symmetric groups; a (lit-lamps, cursor) pair for the
/// lamplighter; a tuple of factor elements for direct products.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    /// Integer tuple.
    Ints(Vec<i64>),
    /// Reduced word; entry `k > 0` is generator `k`, `k < 0` its inverse.
    Word(Vec<i8>),
    /// Permutation table: `perm[i]` is the image of `i`.
    Perm(Vec<u8>),
    /// Lamplighter configuration: sorted lit-lamp positions plus cursor.
    Lamp { lamps: Vec<i64>, pos: i64 },
    /// One element per direct-product factor.
    Tuple(Vec<Element>),
}

/// Word-metric distance; unreachable targets (possible in semigroups) are
/// reported as infinite rather than as errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Finite(u64),
    Infinite,
}

impl Distance {
    /// The finite value, if any.
    pub fn finite(self) -> Option<u64> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

/// The family a group or semigroup belongs to, with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    /// Free abelian group of rank `d`, generators `±e_i`.
    Zd { d: usize },
    /// Integers mod `n`, generators `±1`.
    FiniteCyclic { n: u32 },
    /// Symmetric group on `n` letters, generators the adjacent
    /// transpositions `(i, i+1)`.
    Symmetric { n: u8 },
    /// Free group, generators the letters and their inverses.
    FreeGroup { rank: u8 },
    /// Discrete Heisenberg group: triples `(a, b, c)` with
    /// `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')`; generators `±x, ±y`
    /// with `x = (1,0,0)`, `y = (0,1,0)`.
    Heisenberg,
    /// Lamplighter group `Z/2 wr Z`: generators toggle-the-current-lamp and
    /// cursor shifts `±1`.
    Lamplighter,
    /// Additive semigroup of nonnegative integers, generator `+1`.
    /// Inverse-free: the only invertible element is the identity.
    NatAdd,
    /// Direct product; generators are the factor generators embedded with
    /// identities elsewhere.
    DirectProduct { factors: Vec<GroupKind> },
}

/// A group/semigroup kind together with its pinned generator list and the
/// enumeration cap used by ball BFS and word-metric searches.
///
/// Equality compares kinds only: two specs of the same kind are the same
/// structure regardless of their caps.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    kind: GroupKind,
    generators: Vec<Element>,
    has_inverses: bool,
    enumeration_cap: usize,
}

impl PartialEq for GroupSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for GroupSpec {}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", kind_label(&self.kind))
    }
}

fn kind_label(kind: &GroupKind) -> String {
    match kind {
        GroupKind::Zd { d } => format!("zd:{d}"),
        GroupKind::FiniteCyclic { n } => format!("finite_cyclic:{n}"),
        GroupKind::Symmetric { n } => format!("symmetric:{n}"),
        GroupKind::FreeGroup { rank } => format!("free_group:{rank}"),
        GroupKind::Heisenberg => "heisenberg".into(),
        GroupKind::Lamplighter => "lamplighter".into(),
        GroupKind::NatAdd => "nat_add".into(),
        GroupKind::DirectProduct { factors } => {
            let inner: Vec<String> = factors.iter().map(kind_label).collect();
            format!("direct_product({})", inner.join(","))
        }
    }
}

fn kind_has_inverses(kind: &GroupKind) -> bool {
    match kind {
        GroupKind::NatAdd => false,
        GroupKind::DirectProduct { factors } => factors.iter().all(kind_has_inverses),
        _ => true,
    }
}

fn add(a: i64, b: i64) -> Result<i64> {
    a.checked_add(b)
        .ok_or_else(|| Error::Internal("integer overflow in group arithmetic".into()))
}

fn mul(a: i64, b: i64) -> Result<i64> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Internal("integer overflow in group arithmetic".into()))
}

impl GroupSpec {
    /// Build a spec for `kind`, pinning its generator convention and the
    /// default enumeration cap.
    pub fn new(kind: GroupKind) -> Result<Self> {
        Self::validate_kind(&kind)?;
        let generators = Self::build_generators(&kind)?;
        let has_inverses = kind_has_inverses(&kind);
        Ok(GroupSpec {
            kind,
            generators,
            has_inverses,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Parse a spec from its JSON form, e.g. `{"kind": "free_group", "rank": 2}`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let kind: GroupKind = serde_json::from_value(value.clone())
            .map_err(|e| Error::invalid(format!("bad group spec: {e}")))?;
        Self::new(kind)
    }

    /// Serialize the spec's kind, e.g. `{"kind": "zd", "d": 2}`.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(&self.kind).expect("group kind serializes")
    }

    fn validate_kind(kind: &GroupKind) -> Result<()> {
        match kind {
            GroupKind::Zd { d } => {
                if *d == 0 || *d > 16 {
                    return Err(Error::invalid("zd rank must be in 1..=16"));
                }
            }
            GroupKind::FiniteCyclic { n } => {
                if *n == 0 {
                    return Err(Error::invalid("finite_cyclic modulus must be >= 1"));
                }
            }
            GroupKind::Symmetric { n } => {
                if *n == 0 || *n > 20 {
                    return Err(Error::invalid("symmetric degree must be in 1..=20"));
                }
            }
            GroupKind::FreeGroup { rank } => {
                if *rank == 0 || *rank > 26 {
                    return Err(Error::invalid("free_group rank must be in 1..=26"));
                }
            }
            GroupKind::Heisenberg | GroupKind::Lamplighter | GroupKind::NatAdd => {}
            GroupKind::DirectProduct { factors } => {
                if factors.is_empty() {
                    return Err(Error::invalid("direct_product needs at least one factor"));
                }
                for f in factors {
                    if matches!(f, GroupKind::DirectProduct { .. }) {
                        return Err(Error::invalid(
                            "direct_product factors must not be nested products",
                        ));
                    }
                    Self::validate_kind(f)?;
                }
            }
        }
        Ok(())
    }

    fn build_generators(kind: &GroupKind) -> Result<Vec<Element>> {
        let gens = match kind {
            GroupKind::Zd { d } => {
                let mut gens = Vec::with_capacity(2 * d);
                for i in 0..*d {
                    for sign in [1i64, -1] {
                        let mut v = vec![0i64; *d];
                        v[i] = sign;
                        gens.push(Element::Ints(v));
                    }
                }
                gens
            }
            GroupKind::FiniteCyclic { n } => {
                let n = i64::from(*n);
                let mut set = BTreeSet::new();
                set.insert(Element::Ints(vec![1 % n]));
                set.insert(Element::Ints(vec![(n - 1) % n]));
                set.into_iter().collect()
            }
            GroupKind::Symmetric { n } => {
                let n = *n as usize;
                let mut gens = Vec::new();
                for i in 0..n.saturating_sub(1) {
                    let mut p: Vec<u8> = (0..n as u8).collect();
                    p.swap(i, i + 1);
                    gens.push(Element::Perm(p));
                }
                gens
            }
            GroupKind::FreeGroup { rank } => {
                let mut gens = Vec::with_capacity(2 * *rank as usize);
                for k in 1..=*rank as i8 {
                    gens.push(Element::Word(vec![k]));
                    gens.push(Element::Word(vec![-k]));
                }
                gens
            }
            GroupKind::Heisenberg => vec![
                Element::Ints(vec![1, 0, 0]),
                Element::Ints(vec![-1, 0, 0]),
                Element::Ints(vec![0, 1, 0]),
                Element::Ints(vec![0, -1, 0]),
            ],
            GroupKind::Lamplighter => vec![
                Element::Lamp { lamps: vec![0], pos: 0 },
                Element::Lamp { lamps: vec![], pos: 1 },
                Element::Lamp { lamps: vec![], pos: -1 },
            ],
            GroupKind::NatAdd => vec![Element::Ints(vec![1])],
            GroupKind::DirectProduct { factors } => {
                let specs: Vec<GroupSpec> = factors
                    .iter()
                    .map(|f| GroupSpec::new(f.clone()))
                    .collect::<Result<_>>()?;
                let identities: Vec<Element> = specs.iter().map(|s| s.identity()).collect();
                let mut gens = Vec::new();
                for (i, fs) in specs.iter().enumerate() {
                    for g in fs.generators() {
                        let mut tuple = identities.clone();
                        tuple[i] = g.clone();
                        gens.push(Element::Tuple(tuple));
                    }
                }
                gens
            }
        };
        Ok(gens)
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    /// The pinned generator list. For kinds with inverses it is closed
    /// under inversion.
    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    /// Whether every element has an inverse (false only for `NatAdd` and
    /// products containing it).
    pub fn has_inverses(&self) -> bool {
        self.has_inverses
    }

    pub fn enumeration_cap(&self) -> usize {
        self.enumeration_cap
    }

    /// Override the enumeration cap (elements visited per enumeration).
    pub fn set_enumeration_cap(&mut self, cap: usize) {
        self.enumeration_cap = cap.max(1);
    }

    /// Whether the underlying group is finite (decided from the kind).
    pub fn is_finite(&self) -> bool {
        fn finite(kind: &GroupKind) -> bool {
            match kind {
                GroupKind::FiniteCyclic { .. } | GroupKind::Symmetric { .. } => true,
                GroupKind::Zd { .. }
                | GroupKind::FreeGroup { .. }
                | GroupKind::Heisenberg
                | GroupKind::Lamplighter
                | GroupKind::NatAdd => false,
                GroupKind::DirectProduct { factors } => factors.iter().all(finite),
            }
        }
        finite(&self.kind)
    }

    pub fn identity(&self) -> Element {
        match &self.kind {
            GroupKind::Zd { d } => Element::Ints(vec![0; *d]),
            GroupKind::FiniteCyclic { .. } | GroupKind::NatAdd => Element::Ints(vec![0]),
            GroupKind::Symmetric { n } => Element::Perm((0..*n).collect()),
            GroupKind::FreeGroup { .. } => Element::Word(Vec::new()),
            GroupKind::Heisenberg => Element::Ints(vec![0, 0, 0]),
            GroupKind::Lamplighter => Element::Lamp { lamps: Vec::new(), pos: 0 },
            GroupKind::DirectProduct { factors } => Element::Tuple(
                factors
                    .iter()
                    .map(|f| GroupSpec::new(f.clone()).expect("validated factor").identity())
                    .collect(),
            ),
        }
    }

    /// Check that `e` is a well-formed normal form for this kind.
    pub fn validate_element(&self, e: &Element) -> Result<()> {
        match (&self.kind, e) {
            (GroupKind::Zd { d }, Element::Ints(v)) => {
                if v.len() != *d {
                    return Err(Error::invalid(format!(
                        "zd:{d} element must have {d} coordinates, got {}",
                        v.len()
                    )));
                }
            }
            (GroupKind::FiniteCyclic { n }, Element::Ints(v)) => {
                if v.len() != 1 || v[0] < 0 || v[0] >= i64::from(*n) {
                    return Err(Error::invalid(format!(
                        "finite_cyclic:{n} element must be a single residue in 0..{n}"
                    )));
                }
            }
            (GroupKind::NatAdd, Element::Ints(v)) => {
                if v.len() != 1 || v[0] < 0 {
                    return Err(Error::invalid(
                        "nat_add element must be a single nonnegative integer",
                    ));
                }
            }
            (GroupKind::Heisenberg, Element::Ints(v)) => {
                if v.len() != 3 {
                    return Err(Error::invalid("heisenberg element must be a triple"));
                }
            }
            (GroupKind::Symmetric { n }, Element::Perm(p)) => {
                let n = *n as usize;
                if p.len() != n {
                    return Err(Error::invalid(format!(
                        "symmetric:{n} table must have length {n}"
                    )));
                }
                let mut seen = vec![false; n];
                for &img in p {
                    let i = img as usize;
                    if i >= n || seen[i] {
                        return Err(Error::invalid("permutation table is not a bijection"));
                    }
                    seen[i] = true;
                }
            }
            (GroupKind::FreeGroup { rank }, Element::Word(w)) => {
                let r = *rank as i8;
                for &l in w {
                    if l == 0 || l.abs() > r {
                        return Err(Error::invalid(format!(
                            "free word letter {l} outside rank {rank}"
                        )));
                    }
                }
                for pair in w.windows(2) {
                    if pair[0] == -pair[1] {
                        return Err(Error::invalid("free word is not reduced"));
                    }
                }
            }
            (GroupKind::Lamplighter, Element::Lamp { lamps, .. }) => {
                for pair in lamps.windows(2) {
                    if pair[0] >= pair[1] {
                        return Err(Error::invalid(
                            "lamp positions must be strictly increasing",
                        ));
                    }
                }
            }
            (GroupKind::DirectProduct { factors }, Element::Tuple(parts)) => {
                if parts.len() != factors.len() {
                    return Err(Error::invalid(format!(
                        "product element must have {} components, got {}",
                        factors.len(),
                        parts.len()
                    )));
                }
                for (f, p) in factors.iter().zip(parts) {
                    GroupSpec::new(f.clone())?.validate_element(p)?;
                }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "element variant does not match kind {}",
                    kind_label(&self.kind)
                )))
            }
        }
        Ok(())
    }

    /// Exact product `a · b`.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.validate_element(a)?;
        self.validate_element(b)?;
        self.multiply_unchecked(a, b)
    }

    fn multiply_unchecked(&self, a: &Element, b: &Element) -> Result<Element> {
        match (&self.kind, a, b) {
            (GroupKind::Zd { .. }, Element::Ints(x), Element::Ints(y)) => {
                let v: Result<Vec<i64>> =
                    x.iter().zip(y).map(|(&p, &q)| add(p, q)).collect();
                Ok(Element::Ints(v?))
            }
            (GroupKind::FiniteCyclic { n }, Element::Ints(x), Element::Ints(y)) => {
                let n = i64::from(*n);
                Ok(Element::Ints(vec![(x[0] + y[0]).rem_euclid(n)]))
            }
            (GroupKind::NatAdd, Element::Ints(x), Element::Ints(y)) => {
                Ok(Element::Ints(vec![add(x[0], y[0])?]))
            }
            (GroupKind::Heisenberg, Element::Ints(x), Element::Ints(y)) => {
                let c = add(add(x[2], y[2])?, mul(x[0], y[1])?)?;
                Ok(Element::Ints(vec![add(x[0], y[0])?, add(x[1], y[1])?, c]))
            }
            (GroupKind::Symmetric { .. }, Element::Perm(p), Element::Perm(q)) => {
                Ok(Element::Perm(q.iter().map(|&i| p[i as usize]).collect()))
            }
            (GroupKind::FreeGroup { .. }, Element::Word(u), Element::Word(v)) => {
                let mut w = u.clone();
                for &letter in v {
                    if w.last() == Some(&-letter) {
                        w.pop();
                    } else {
                        w.push(letter);
                    }
                }
                Ok(Element::Word(w))
            }
            (
                GroupKind::Lamplighter,
                Element::Lamp { lamps: la, pos: pa },
                Element::Lamp { lamps: lb, pos: pb },
            ) => {
                // (f, k)·(g, m) = (f xor shift_k(g), k + m)
                let mut set: BTreeSet<i64> = la.iter().copied().collect();
                for &l in lb {
                    let shifted = add(l, *pa)?;
                    if !set.insert(shifted) {
                        set.remove(&shifted);
                    }
                }
                Ok(Element::Lamp {
                    lamps: set.into_iter().collect(),
                    pos: add(*pa, *pb)?,
                })
            }
            (GroupKind::DirectProduct { factors }, Element::Tuple(xs), Element::Tuple(ys)) => {
                let mut parts = Vec::with_capacity(factors.len());
                for ((f, x), y) in factors.iter().zip(xs).zip(ys) {
                    parts.push(GroupSpec::new(f.clone())?.multiply_unchecked(x, y)?);
                }
                Ok(Element::Tuple(parts))
            }
            _ => Err(Error::invalid("element variants do not match the kind")),
        }
    }

    /// Exact inverse. Errors with `UnsupportedOperation` for non-invertible
    /// semigroup elements (`NatAdd` values other than the identity).
    pub fn invert(&self, a: &Element) -> Result<Element> {
        self.validate_element(a)?;
        match (&self.kind, a) {
            (GroupKind::Zd { .. }, Element::Ints(x)) => {
                Ok(Element::Ints(x.iter().map(|&v| -v).collect()))
            }
            (GroupKind::FiniteCyclic { n }, Element::Ints(x)) => {
                let n = i64::from(*n);
                Ok(Element::Ints(vec![(n - x[0]).rem_euclid(n)]))
            }
            (GroupKind::NatAdd, Element::Ints(x)) => {
                if x[0] == 0 {
                    Ok(Element::Ints(vec![0]))
                } else {
                    Err(Error::unsupported(
                        "nat_add has no inverses away from the identity",
                    ))
                }
            }
            (GroupKind::Heisenberg, Element::Ints(x)) => {
                let c = add(mul(x[0], x[1])?, -x[2])?;
                Ok(Element::Ints(vec![-x[0], -x[1], c]))
            }
            (GroupKind::Symmetric { .. }, Element::Perm(p)) => {
                let mut inv = vec![0u8; p.len()];
                for (i, &img) in p.iter().enumerate() {
                    inv[img as usize] = i as u8;
                }
                Ok(Element::Perm(inv))
            }
            (GroupKind::FreeGroup { .. }, Element::Word(w)) => {
                Ok(Element::Word(w.iter().rev().map(|&l| -l).collect()))
            }
            (GroupKind::Lamplighter, Element::Lamp { lamps, pos }) => {
                let mut shifted: Vec<i64> =
                    lamps.iter().map(|&l| add(l, -*pos)).collect::<Result<_>>()?;
                shifted.sort_unstable();
                Ok(Element::Lamp { lamps: shifted, pos: -pos })
            }
            (GroupKind::DirectProduct { factors }, Element::Tuple(xs)) => {
                let mut parts = Vec::with_capacity(factors.len());
                for (f, x) in factors.iter().zip(xs) {
                    parts.push(GroupSpec::new(f.clone())?.invert(x)?);
                }
                Ok(Element::Tuple(parts))
            }
            _ => Err(Error::invalid("element variant does not match the kind")),
        }
    }

    /// The Cayley ball of the given radius around the identity, sorted by
    /// normal form. Errors with `ResourceLimit` if the enumeration cap is
    /// exceeded.
    pub fn ball(&self, radius: u32) -> Result<Vec<Element>> {
        let mut visited: BTreeSet<Element> = BTreeSet::new();
        let identity = self.identity();
        visited.insert(identity.clone());
        let mut frontier = vec![identity];
        for _ in 0..radius {
            let mut next = Vec::new();
            for w in &frontier {
                for g in &self.generators {
                    let wg = self.multiply_unchecked(w, g)?;
                    if visited.insert(wg.clone()) {
                        if visited.len() > self.enumeration_cap {
                            return Err(Error::resource(format!(
                                "ball enumeration exceeded cap {} on {}",
                                self.enumeration_cap, self
                            )));
                        }
                        next.push(wg);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(visited.into_iter().collect())
    }

    /// Enumerate the whole group if it is finite; `UnsupportedOperation`
    /// for infinite kinds.
    pub fn all_elements(&self) -> Result<Vec<Element>> {
        if !self.is_finite() {
            return Err(Error::unsupported(format!(
                "{} is infinite; cannot enumerate all elements",
                self
            )));
        }
        let mut radius = 1;
        let mut prev = self.ball(0)?;
        loop {
            let cur = self.ball(radius)?;
            if cur.len() == prev.len() {
                return Ok(cur);
            }
            prev = cur;
            radius += 1;
        }
    }

    /// Word-metric distance: the minimal word length `w` over the generator
    /// list with `a·w = b`. For kinds with inverses this is the usual
    /// left-invariant word metric; for `NatAdd` unreachable targets give
    /// `Distance::Infinite`.
    pub fn word_metric(&self, a: &Element, b: &Element) -> Result<Distance> {
        self.validate_element(a)?;
        self.validate_element(b)?;
        match &self.kind {
            GroupKind::Zd { .. } => {
                let (Element::Ints(x), Element::Ints(y)) = (a, b) else { unreachable!() };
                let d: u64 = x.iter().zip(y).map(|(&p, &q)| p.abs_diff(q)).sum();
                Ok(Distance::Finite(d))
            }
            GroupKind::FiniteCyclic { n } => {
                let (Element::Ints(x), Element::Ints(y)) = (a, b) else { unreachable!() };
                let n = i64::from(*n);
                let k = (y[0] - x[0]).rem_euclid(n);
                Ok(Distance::Finite(k.min(n - k) as u64))
            }
            GroupKind::NatAdd => {
                let (Element::Ints(x), Element::Ints(y)) = (a, b) else { unreachable!() };
                if y[0] >= x[0] {
                    Ok(Distance::Finite((y[0] - x[0]) as u64))
                } else {
                    Ok(Distance::Infinite)
                }
            }
            GroupKind::FreeGroup { .. } => {
                let w = self.multiply_unchecked(&self.invert(a)?, b)?;
                let Element::Word(w) = w else { unreachable!() };
                Ok(Distance::Finite(w.len() as u64))
            }
            GroupKind::Symmetric { .. } => {
                // Word length over adjacent transpositions = inversion count.
                let w = self.multiply_unchecked(&self.invert(a)?, b)?;
                let Element::Perm(p) = w else { unreachable!() };
                let mut inv = 0u64;
                for i in 0..p.len() {
                    for j in i + 1..p.len() {
                        if p[i] > p[j] {
                            inv += 1;
                        }
                    }
                }
                Ok(Distance::Finite(inv))
            }
            GroupKind::DirectProduct { factors } => {
                let (Element::Tuple(xs), Element::Tuple(ys)) = (a, b) else { unreachable!() };
                let mut total = 0u64;
                for ((f, x), y) in factors.iter().zip(xs).zip(ys) {
                    let mut fs = GroupSpec::new(f.clone())?;
                    fs.set_enumeration_cap(self.enumeration_cap);
                    match fs.word_metric(x, y)? {
                        Distance::Finite(d) => total += d,
                        Distance::Infinite => return Ok(Distance::Infinite),
                    }
                }
                Ok(Distance::Finite(total))
            }
            GroupKind::Heisenberg | GroupKind::Lamplighter => {
                let target = self.multiply_unchecked(&self.invert(a)?, b)?;
                self.bfs_distance(&target)
            }
        }
    }

    /// Breadth-first distance from the identity to `target`.
    fn bfs_distance(&self, target: &Element) -> Result<Distance> {
        let identity = self.identity();
        if *target == identity {
            return Ok(Distance::Finite(0));
        }
        let mut visited: BTreeSet<Element> = BTreeSet::new();
        visited.insert(identity.clone());
        let mut frontier = vec![identity];
        let mut depth = 0u64;
        while !frontier.is_empty() {
            depth += 1;
            let mut next = Vec::new();
            for w in &frontier {
                for g in &self.generators {
                    let wg = self.multiply_unchecked(w, g)?;
                    if wg == *target {
                        return Ok(Distance::Finite(depth));
                    }
                    if visited.insert(wg.clone()) {
                        if visited.len() > self.enumeration_cap {
                            return Err(Error::resource(format!(
                                "word-metric search exceeded cap {} on {}",
                                self.enumeration_cap, self
                            )));
                        }
                        next.push(wg);
                    }
                }
            }
            frontier = next;
        }
        Ok(Distance::Infinite)
    }

    /// Defining relations as words over the generator list; each word
    /// multiplies out to the identity. Free kinds return an empty list.
    pub fn defining_relations(&self) -> Vec<Vec<Element>> {
        let gens = &self.generators;
        match &self.kind {
            GroupKind::Zd { d } => {
                // Commutators of the positive basis generators.
                let e = |i: usize| gens[2 * i].clone();
                let einv = |i: usize| gens[2 * i + 1].clone();
                let mut rels = Vec::new();
                for i in 0..*d {
                    for j in i + 1..*d {
                        rels.push(vec![e(i), e(j), einv(i), einv(j)]);
                    }
                }
                rels
            }
            GroupKind::FiniteCyclic { n } => {
                let plus = Element::Ints(vec![1 % i64::from(*n)]);
                vec![vec![plus; *n as usize]]
            }
            GroupKind::Symmetric { n } => {
                let n = *n as usize;
                let s = |i: usize| gens[i].clone();
                let mut rels = Vec::new();
                for i in 0..n.saturating_sub(1) {
                    rels.push(vec![s(i), s(i)]);
                }
                for i in 0..n.saturating_sub(2) {
                    rels.push(vec![s(i), s(i + 1), s(i), s(i + 1), s(i), s(i + 1)]);
                }
                for i in 0..n.saturating_sub(1) {
                    for j in i + 2..n - 1 {
                        rels.push(vec![s(i), s(j), s(i), s(j)]);
                    }
                }
                rels
            }
            GroupKind::FreeGroup { .. } | GroupKind::NatAdd => Vec::new(),
            GroupKind::Heisenberg => {
                let x = gens[0].clone();
                let xi = gens[1].clone();
                let y = gens[2].clone();
                let yi = gens[3].clone();
                // z = [x, y] is central: [x, z] = e and [y, z] = e.
                let z = [x.clone(), y.clone(), xi.clone(), yi.clone()];
                let zi = [y.clone(), x.clone(), yi.clone(), xi.clone()];
                let mut r1 = vec![x.clone()];
                r1.extend(z.iter().cloned());
                r1.push(xi.clone());
                r1.extend(zi.iter().cloned());
                let mut r2 = vec![y.clone()];
                r2.extend(z.iter().cloned());
                r2.push(yi.clone());
                r2.extend(zi.iter().cloned());
                vec![r1, r2]
            }
            GroupKind::Lamplighter => {
                let t = gens[0].clone();
                let a = gens[1].clone();
                let ai = gens[2].clone();
                // t is an involution; lamps at distinct positions commute.
                let shifted_t = [a.clone(), t.clone(), ai.clone()];
                let mut comm = vec![t.clone()];
                comm.extend(shifted_t.iter().cloned());
                comm.push(t.clone());
                comm.extend(shifted_t.iter().cloned());
                vec![vec![t.clone(), t.clone()], comm]
            }
            GroupKind::DirectProduct { factors } => {
                let specs: Vec<GroupSpec> = factors
                    .iter()
                    .map(|f| GroupSpec::new(f.clone()).expect("validated factor"))
                    .collect();
                let identities: Vec<Element> = specs.iter().map(|s| s.identity()).collect();
                let embed = |i: usize, e: &Element| {
                    let mut tuple = identities.clone();
                    tuple[i] = e.clone();
                    Element::Tuple(tuple)
                };
                let mut rels = Vec::new();
                for (i, fs) in specs.iter().enumerate() {
                    for rel in fs.defining_relations() {
                        rels.push(rel.iter().map(|e| embed(i, e)).collect());
                    }
                }
                // Generators of distinct factors commute.
                for i in 0..specs.len() {
                    for j in i + 1..specs.len() {
                        for gi in specs[i].generators() {
                            for gj in specs[j].generators() {
                                let a = embed(i, gi);
                                let b = embed(j, gj);
                                // Inverse-free factors: skip the commutator
                                // word (it is not expressible).
                                if let (Ok(gii), Ok(gji)) =
                                    (specs[i].invert(gi), specs[j].invert(gj))
                                {
                                    rels.push(vec![
                                        a.clone(),
                                        b.clone(),
                                        embed(i, &gii),
                                        embed(j, &gji),
                                    ]);
                                }
                            }
                        }
                    }
                }
                rels
            }
        }
    }

    /// JSON normal form of an element (arrays or strings, kind-directed).
    pub fn element_to_json(&self, e: &Element) -> Result<Value> {
        self.validate_element(e)?;
        Ok(match (&self.kind, e) {
            (GroupKind::FiniteCyclic { .. } | GroupKind::NatAdd, Element::Ints(v)) => {
                json!(v[0])
            }
            (_, Element::Ints(v)) => json!(v),
            (_, Element::Perm(p)) => json!(p),
            (_, Element::Word(w)) => Value::String(word_to_string(w)),
            (_, Element::Lamp { lamps, pos }) => json!([lamps, pos]),
            (GroupKind::DirectProduct { factors }, Element::Tuple(parts)) => {
                let mut out = Vec::with_capacity(parts.len());
                for (f, p) in factors.iter().zip(parts) {
                    out.push(GroupSpec::new(f.clone())?.element_to_json(p)?);
                }
                Value::Array(out)
            }
            _ => return Err(Error::invalid("element variant does not match the kind")),
        })
    }

    /// Parse an element from its JSON normal form.
    pub fn element_from_json(&self, value: &Value) -> Result<Element> {
        let parsed = match &self.kind {
            GroupKind::FiniteCyclic { .. } | GroupKind::NatAdd => {
                let v = value
                    .as_i64()
                    .ok_or_else(|| Error::invalid("expected an integer element"))?;
                Element::Ints(vec![v])
            }
            GroupKind::Zd { .. } | GroupKind::Heisenberg => {
                Element::Ints(parse_i64_array(value)?)
            }
            GroupKind::Symmetric { .. } => {
                let ints = parse_i64_array(value)?;
                let mut p = Vec::with_capacity(ints.len());
                for v in ints {
                    if !(0..=255).contains(&v) {
                        return Err(Error::invalid("permutation image out of range"));
                    }
                    p.push(v as u8);
                }
                Element::Perm(p)
            }
            GroupKind::FreeGroup { .. } => {
                let s = value
                    .as_str()
                    .ok_or_else(|| Error::invalid("expected a word string"))?;
                Element::Word(word_from_string(s)?)
            }
            GroupKind::Lamplighter => {
                let arr = value
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::invalid("expected [lamps, pos] pair"))?;
                let lamps = parse_i64_array(&arr[0])?;
                let pos = arr[1]
                    .as_i64()
                    .ok_or_else(|| Error::invalid("lamp cursor must be an integer"))?;
                Element::Lamp { lamps, pos }
            }
            GroupKind::DirectProduct { factors } => {
                let arr = value
                    .as_array()
                    .filter(|a| a.len() == factors.len())
                    .ok_or_else(|| {
                        Error::invalid(format!("expected a {}-tuple", factors.len()))
                    })?;
                let mut parts = Vec::with_capacity(factors.len());
                for (f, v) in factors.iter().zip(arr) {
                    parts.push(GroupSpec::new(f.clone())?.element_from_json(v)?);
                }
                Element::Tuple(parts)
            }
        };
        self.validate_element(&parsed)?;
        Ok(parsed)
    }

    /// Compact string key for an element, used in CSV headers and JSON
    /// object keys (free words stay bare strings; everything else is its
    /// compact JSON).
    pub fn element_key(&self, e: &Element) -> Result<String> {
        let v = self.element_to_json(e)?;
        Ok(match v {
            Value::String(s) => s,
            other => other.to_string(),
        })
    }

    /// Inverse of [`GroupSpec::element_key`].
    pub fn element_from_key(&self, key: &str) -> Result<Element> {
        if matches!(self.kind, GroupKind::FreeGroup { .. }) {
            return self.element_from_json(&Value::String(key.to_string()));
        }
        let v: Value = serde_json::from_str(key)
            .map_err(|e| Error::invalid(format!("bad element key {key:?}: {e}")))?;
        self.element_from_json(&v)
    }
}

/// Convenience constructor returning a shared spec.
pub fn shared(kind: GroupKind) -> Result<Arc<GroupSpec>> {
    GroupSpec::new(kind).map(Arc::new)
}

fn parse_i64_array(value: &Value) -> Result<Vec<i64>> {
    value
        .as_array()
        .ok_or_else(|| Error::invalid("expected an integer array"))?
        .iter()
        .map(|v| v.as_i64().ok_or_else(|| Error::invalid("expected an integer entry")))
        .collect()
}

fn word_to_string(w: &[i8]) -> String {
    w.iter()
        .map(|&l| {
            if l > 0 {
                (b'a' + (l as u8 - 1)) as char
            } else {
                (b'A' + ((-l) as u8 - 1)) as char
            }
        })
        .collect()
}

fn word_from_string(s: &str) -> Result<Vec<i8>> {
    let mut w = Vec::with_capacity(s.len());
    for c in s.chars() {
        let letter = match c {
            'a'..='z' => (c as u8 - b'a') as i8 + 1,
            'A'..='Z' => -((c as u8 - b'A') as i8 + 1),
            _ => return Err(Error::invalid(format!("bad word character {c:?}"))),
        };
        w.push(letter);
    }
    Ok(w)
}
