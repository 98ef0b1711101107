//! Exact domain types: multiplicities, Szmielew descriptions, canonical p.p.
//! formulas and index classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use serde::ser::{Serialize, Serializer};

use crate::arith::{factorize, is_prime, valuation};

/// A multiplicity: a natural number or ω (countably infinite).
///
/// The derived order puts every finite value below ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mult {
    Fin(u64),
    Omega,
}

impl Mult {
    pub const ZERO: Mult = Mult::Fin(0);
    pub const ONE: Mult = Mult::Fin(1);

    pub fn is_zero(self) -> bool {
        self == Mult::ZERO
    }

    pub fn is_omega(self) -> bool {
        self == Mult::Omega
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Mult::Fin(n) => Some(n),
            Mult::Omega => None,
        }
    }

    pub fn checked_add(self, other: Mult) -> Option<Mult> {
        match (self, other) {
            (Mult::Fin(a), Mult::Fin(b)) => a.checked_add(b).map(Mult::Fin),
            _ => Some(Mult::Omega),
        }
    }
}

impl Default for Mult {
    fn default() -> Self {
        Mult::ZERO
    }
}

/// Panics on u64 overflow of two finite multiplicities; use
/// [`Mult::checked_add`] on untrusted input.
impl Add for Mult {
    type Output = Mult;
    fn add(self, other: Mult) -> Mult {
        self.checked_add(other).expect("multiplicity overflow")
    }
}

impl fmt::Display for Mult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mult::Fin(n) => write!(f, "{n}"),
            Mult::Omega => f.write_str("w"),
        }
    }
}

impl Serialize for Mult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Mult::Fin(n) => s.serialize_u64(*n),
            Mult::Omega => s.serialize_str("w"),
        }
    }
}

/// `α_{p,n} = mult` for every `n > cutoff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct TailSpec {
    pub cutoff: u32,
    pub mult: Mult,
}

/// Shape applied uniformly to every prime that the description does not list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, serde::Serialize)]
pub struct PrimeTailShape {
    pub cyclic_pattern: BTreeMap<u32, Mult>,
    pub tf_mult: Mult,
    pub div_mult: Mult,
}

impl PrimeTailShape {
    pub fn is_empty(&self) -> bool {
        self.tf_mult.is_zero()
            && self.div_mult.is_zero()
            && self.cyclic_pattern.values().all(|m| m.is_zero())
    }

    /// The component this shape induces at any single unlisted prime.
    pub fn component(&self) -> PrimeComponent {
        PrimeComponent {
            cyclic: self.cyclic_pattern.clone(),
            tf: self.tf_mult,
            div: self.div_mult,
            tail: None,
        }
        .canonical()
    }
}

/// Everything a description says about one prime.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PrimeComponent {
    pub cyclic: BTreeMap<u32, Mult>,
    pub tf: Mult,
    pub div: Mult,
    pub tail: Option<TailSpec>,
}

impl PrimeComponent {
    pub fn is_empty(&self) -> bool {
        self.tail.is_none()
            && self.tf.is_zero()
            && self.div.is_zero()
            && self.cyclic.values().all(|m| m.is_zero())
    }

    /// `α_{p,n}` including the tail.
    pub fn alpha(&self, n: u32) -> Mult {
        if let Some(t) = self.tail {
            if n > t.cutoff {
                return t.mult;
            }
        }
        self.cyclic.get(&n).copied().unwrap_or_default()
    }

    /// Largest explicitly listed exponent (0 when none).
    pub fn max_listed_exponent(&self) -> u32 {
        self.cyclic.keys().next_back().copied().unwrap_or(0)
    }

    /// Drops zero entries and lowers the tail cutoff as far as the explicit
    /// entries allow. Does not change the group.
    pub fn canonical(mut self) -> PrimeComponent {
        self.cyclic.retain(|_, m| !m.is_zero());
        if let Some(t) = self.tail.as_mut() {
            while t.cutoff > 0 && self.cyclic.get(&t.cutoff) == Some(&t.mult) {
                self.cyclic.remove(&t.cutoff);
                t.cutoff -= 1;
            }
        }
        self
    }

    pub fn checked_sum(&self, other: &PrimeComponent) -> Option<PrimeComponent> {
        let mut out = PrimeComponent {
            tf: self.tf.checked_add(other.tf)?,
            div: self.div.checked_add(other.div)?,
            ..Default::default()
        };
        let tail_mult = match (self.tail, other.tail) {
            (None, None) => None,
            (Some(a), None) => Some(a.mult),
            (None, Some(b)) => Some(b.mult),
            (Some(a), Some(b)) => Some(a.mult.checked_add(b.mult)?),
        };
        let mut horizon = self.max_listed_exponent().max(other.max_listed_exponent());
        for t in [self.tail, other.tail].into_iter().flatten() {
            horizon = horizon.max(t.cutoff);
        }
        for n in 1..=horizon {
            let m = self.alpha(n).checked_add(other.alpha(n))?;
            if !m.is_zero() {
                out.cyclic.insert(n, m);
            }
        }
        out.tail = tail_mult.map(|mult| TailSpec {
            cutoff: horizon,
            mult,
        });
        Some(out.canonical())
    }
}

/// Symbolic abelian group given by Szmielew multiplicities.
///
/// `cyclic[(p, n)]` is `α_{p,n}`, `tf[p]` is `β_p`, `div[p]` is `γ_p` and
/// `q_mult` is `δ`. A prime is *listed* when it occurs as a key of any map
/// (even with multiplicity 0); `prime_tail` describes every unlisted prime.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SzmielewDescription {
    pub cyclic: BTreeMap<(u64, u32), Mult>,
    pub tf: BTreeMap<u64, Mult>,
    pub div: BTreeMap<u64, Mult>,
    pub q_mult: Mult,
    pub cyclic_tail: BTreeMap<u64, TailSpec>,
    pub prime_tail: Option<PrimeTailShape>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("exponent must be ≥ 1 (at prime {0})")]
    ZeroExponent(u64),
    #[error("cutoff below listed exponent: tail({prime}) has cutoff {cutoff} but Z({prime}^{exponent}) is listed")]
    CutoffBelowListed {
        prime: u64,
        cutoff: u32,
        exponent: u32,
    },
    #[error("tail multiplicity must be ≥ 1 (at prime {0})")]
    ZeroTailMult(u64),
    #[error("forall_p pattern exponent must be ≥ 1")]
    ZeroPatternExponent,
}

impl SzmielewDescription {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn with_cyclic(mut self, p: u64, n: u32, m: Mult) -> Self {
        let e = self.cyclic.entry((p, n)).or_default();
        *e = *e + m;
        self
    }

    pub fn with_tf(mut self, p: u64, m: Mult) -> Self {
        let e = self.tf.entry(p).or_default();
        *e = *e + m;
        self
    }

    pub fn with_div(mut self, p: u64, m: Mult) -> Self {
        let e = self.div.entry(p).or_default();
        *e = *e + m;
        self
    }

    pub fn with_q(mut self, m: Mult) -> Self {
        self.q_mult = self.q_mult + m;
        self
    }

    pub fn with_tail(mut self, p: u64, cutoff: u32, mult: Mult) -> Self {
        self.cyclic_tail.insert(p, TailSpec { cutoff, mult });
        self
    }

    pub fn with_prime_tail(mut self, shape: PrimeTailShape) -> Self {
        self.prime_tail = Some(shape);
        self
    }

    pub fn listed_primes(&self) -> BTreeSet<u64> {
        let mut s: BTreeSet<u64> = self.cyclic.keys().map(|&(p, _)| p).collect();
        s.extend(self.tf.keys());
        s.extend(self.div.keys());
        s.extend(self.cyclic_tail.keys());
        s
    }

    /// Whether `p` is described by the explicit maps rather than `prime_tail`.
    pub fn is_listed(&self, p: u64) -> bool {
        self.tf.contains_key(&p)
            || self.div.contains_key(&p)
            || self.cyclic_tail.contains_key(&p)
            || self.cyclic.range((p, 0)..=(p, u32::MAX)).next().is_some()
    }

    /// The explicit component of a listed prime, or the shape component.
    pub fn component(&self, p: u64) -> PrimeComponent {
        if !self.is_listed(p) {
            return self
                .prime_tail
                .as_ref()
                .map(PrimeTailShape::component)
                .unwrap_or_default();
        }
        PrimeComponent {
            cyclic: self
                .cyclic
                .range((p, 0)..=(p, u32::MAX))
                .map(|(&(_, n), &m)| (n, m))
                .collect(),
            tf: self.tf.get(&p).copied().unwrap_or_default(),
            div: self.div.get(&p).copied().unwrap_or_default(),
            tail: self.cyclic_tail.get(&p).copied(),
        }
    }

    /// Explicit components of all listed primes.
    pub fn components(&self) -> BTreeMap<u64, PrimeComponent> {
        self.listed_primes()
            .into_iter()
            .map(|p| (p, self.component(p)))
            .collect()
    }

    /// Rebuilds a description from per-prime components. A component that is
    /// empty is kept listed (as `tf[p] = 0`) only when a non-empty shape is
    /// present, since otherwise listing it has no effect.
    pub fn from_components(
        comps: BTreeMap<u64, PrimeComponent>,
        q_mult: Mult,
        prime_tail: Option<PrimeTailShape>,
    ) -> Self {
        let mut d = SzmielewDescription {
            q_mult,
            prime_tail,
            ..Default::default()
        };
        for (p, c) in comps {
            for (n, m) in c.cyclic {
                if !m.is_zero() {
                    d.cyclic.insert((p, n), m);
                }
            }
            if !c.tf.is_zero() {
                d.tf.insert(p, c.tf);
            }
            if !c.div.is_zero() {
                d.div.insert(p, c.div);
            }
            if let Some(t) = c.tail {
                d.cyclic_tail.insert(p, t);
            }
            if d.prime_tail.is_some() && !d.is_listed(p) {
                d.tf.insert(p, Mult::ZERO);
            }
        }
        d
    }

    /// Normal ordering: zero entries dropped, tails lowered, a listed prime
    /// identical to the shape made unlisted. Same group, unique presentation.
    pub fn canonicalize(&self) -> SzmielewDescription {
        let shape = self
            .prime_tail
            .as_ref()
            .filter(|s| !s.is_empty())
            .map(|s| PrimeTailShape {
                cyclic_pattern: s
                    .cyclic_pattern
                    .iter()
                    .filter(|(_, m)| !m.is_zero())
                    .map(|(&n, &m)| (n, m))
                    .collect(),
                ..s.clone()
            });
        let shape_comp = shape.as_ref().map(PrimeTailShape::component);
        let mut comps = BTreeMap::new();
        for (p, c) in self.components() {
            let c = c.canonical();
            match &shape_comp {
                Some(sc) if *sc == c => {}
                Some(_) => {
                    comps.insert(p, c);
                }
                None if c.is_empty() => {}
                None => {
                    comps.insert(p, c);
                }
            }
        }
        SzmielewDescription::from_components(comps, self.q_mult, shape)
    }

    /// `self ⊕ other`; `None` on multiplicity overflow.
    pub fn checked_direct_sum(&self, other: &SzmielewDescription) -> Option<SzmielewDescription> {
        let mut primes = self.listed_primes();
        primes.extend(other.listed_primes());
        let mut comps = BTreeMap::new();
        for p in primes {
            comps.insert(p, self.component(p).checked_sum(&other.component(p))?);
        }
        let shape = match (&self.prime_tail, &other.prime_tail) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                let mut pat = a.cyclic_pattern.clone();
                for (&n, &m) in &b.cyclic_pattern {
                    let e = pat.entry(n).or_default();
                    *e = e.checked_add(m)?;
                }
                Some(PrimeTailShape {
                    cyclic_pattern: pat,
                    tf_mult: a.tf_mult.checked_add(b.tf_mult)?,
                    div_mult: a.div_mult.checked_add(b.div_mult)?,
                })
            }
        };
        Some(
            SzmielewDescription::from_components(comps, self.q_mult.checked_add(other.q_mult)?, shape)
                .canonicalize(),
        )
    }

    pub fn direct_sum(&self, other: &SzmielewDescription) -> SzmielewDescription {
        self.checked_direct_sum(other).expect("multiplicity overflow")
    }

    /// Largest explicit exponent or tail cutoff (0 when there is none).
    pub fn max_exponent(&self) -> u32 {
        let a = self.cyclic.keys().map(|&(_, n)| n).max().unwrap_or(0);
        let b = self.cyclic_tail.values().map(|t| t.cutoff).max().unwrap_or(0);
        let c = self
            .prime_tail
            .as_ref()
            .and_then(|s| s.cyclic_pattern.keys().next_back().copied())
            .unwrap_or(0);
        a.max(b).max(c)
    }
}

/// Every violated invariant of `desc`; empty when the description is valid.
pub fn validate(desc: &SzmielewDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = BTreeSet::new();
    for p in desc.listed_primes() {
        if !is_prime(p) {
            bad.insert(p);
        }
    }
    out.extend(bad.into_iter().map(Violation::NotPrime));
    for &(p, n) in desc.cyclic.keys() {
        if n == 0 {
            out.push(Violation::ZeroExponent(p));
        }
    }
    for (&p, t) in &desc.cyclic_tail {
        if t.mult.is_zero() {
            out.push(Violation::ZeroTailMult(p));
        }
        if let Some((&(_, n), _)) = desc.cyclic.range((p, 0)..=(p, u32::MAX)).next_back() {
            if n > t.cutoff {
                out.push(Violation::CutoffBelowListed {
                    prime: p,
                    cutoff: t.cutoff,
                    exponent: n,
                });
            }
        }
    }
    if let Some(s) = &desc.prime_tail {
        if s.cyclic_pattern.contains_key(&0) {
            out.push(Violation::ZeroPatternExponent);
        }
    }
    out
}

/// A canonical p.p. atom: `m x = 0`, or `p^r | p^s x` with `s < r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Tor(u64),
    Div { p: u64, r: u32, s: u32 },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Tor(m) => write!(f, "tor({m})"),
            Atom::Div { p, r, s } => write!(f, "div({p},{r},{s})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AtomError {
    #[error("tor requires m ≥ 1")]
    TorZero,
    #[error("div({p},{r},{s}) requires s < r")]
    DivOrder { p: u64, r: u32, s: u32 },
    #[error("{0} is not prime")]
    NotPrime(u64),
}

impl Atom {
    pub fn validate(&self) -> Result<(), AtomError> {
        match *self {
            Atom::Tor(0) => Err(AtomError::TorZero),
            Atom::Tor(_) => Ok(()),
            Atom::Div { p, .. } if !is_prime(p) => Err(AtomError::NotPrime(p)),
            Atom::Div { p, r, s } if s >= r => Err(AtomError::DivOrder { p, r, s }),
            Atom::Div { .. } => Ok(()),
        }
    }
}

/// Conjunction of canonical atoms; the empty conjunction is the whole group.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PPFormula {
    pub atoms: Vec<Atom>,
}

impl PPFormula {
    pub fn top() -> Self {
        Self::default()
    }

    pub fn tor(m: u64) -> Self {
        PPFormula {
            atoms: vec![Atom::Tor(m)],
        }
    }

    pub fn div(p: u64, r: u32, s: u32) -> Self {
        PPFormula {
            atoms: vec![Atom::Div { p, r, s }],
        }
    }

    pub fn and(mut self, other: &PPFormula) -> Self {
        self.atoms.extend_from_slice(&other.atoms);
        self
    }

    /// Sorted, deduplicated atoms.
    pub fn canonicalize(&self) -> PPFormula {
        let mut atoms = self.atoms.clone();
        atoms.sort();
        atoms.dedup();
        PPFormula { atoms }
    }

    pub fn validate(&self) -> Result<(), AtomError> {
        self.atoms.iter().try_for_each(Atom::validate)
    }

    /// Primes the formula mentions: Div primes and prime divisors of Tor arguments.
    pub fn primes(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            match *a {
                Atom::Tor(m) => out.extend(factorize(m).into_keys()),
                Atom::Div { p, .. } => {
                    out.insert(p);
                }
            }
        }
        out
    }

    /// Largest `r` of a Div atom at `p` or `v_p(m)` of a Tor atom.
    pub fn reach(&self, p: u64) -> u32 {
        self.atoms
            .iter()
            .map(|a| match *a {
                Atom::Tor(m) => valuation(m, p),
                Atom::Div { p: q, r, .. } if q == p => r,
                Atom::Div { .. } => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for PPFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::dsl::write_formula(f, self)
    }
}

impl Serialize for PPFormula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A natural number ≥ 1 kept as its prime factorization.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Factored(BTreeMap<u64, u64>);

impl Factored {
    pub fn one() -> Self {
        Factored(BTreeMap::new())
    }

    pub fn prime_power(p: u64, e: u64) -> Self {
        let mut m = BTreeMap::new();
        if e > 0 {
            m.insert(p, e);
        }
        Factored(m)
    }

    pub fn from_u64(n: u64) -> Self {
        assert!(n >= 1, "factored values are ≥ 1");
        Factored(factorize(n))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &BTreeMap<u64, u64> {
        &self.0
    }

    pub fn exponent_of(&self, p: u64) -> u64 {
        self.0.get(&p).copied().unwrap_or(0)
    }

    pub fn pow(&self, k: u64) -> Factored {
        if k == 0 {
            return Factored::one();
        }
        Factored(self.0.iter().map(|(&p, &e)| (p, e * k)).collect())
    }

    pub fn value(&self) -> BigUint {
        self.0
            .iter()
            .fold(BigUint::from(1u32), |acc, (&p, &e)| {
                acc * BigUint::from(p).pow(e as u32)
            })
    }

    /// `Some(value)` when it fits in a u64.
    pub fn to_u64(&self) -> Option<u64> {
        self.0.iter().try_fold(1u64, |acc, (&p, &e)| {
            acc.checked_mul(p.checked_pow(u32::try_from(e).ok()?)?)
        })
    }

    /// `self / other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Factored) -> Option<Factored> {
        let mut out = self.0.clone();
        for (&p, &e) in &other.0 {
            let have = out.get(&p).copied().unwrap_or(0);
            if have < e {
                return None;
            }
            if have == e {
                out.remove(&p);
            } else {
                out.insert(p, have - e);
            }
        }
        Some(Factored(out))
    }

    /// Least common multiple.
    pub fn lcm(&self, other: &Factored) -> Factored {
        let mut out = self.0.clone();
        for (&p, &e) in &other.0 {
            let x = out.entry(p).or_insert(0);
            *x = (*x).max(e);
        }
        Factored(out)
    }
}

impl Mul for &Factored {
    type Output = Factored;
    fn mul(self, other: &Factored) -> Factored {
        let mut out = self.0.clone();
        for (&p, &e) in &other.0 {
            *out.entry(p).or_insert(0) += e;
        }
        Factored(out)
    }
}

impl fmt::Display for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Factored {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.to_u64() {
            Some(v) => s.serialize_u64(v),
            None => s.collect_str(&self.value()),
        }
    }
}

/// Index of one subgroup in another: an exact finite value or infinite.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexClass {
    Finite(Factored),
    Infinite,
}

impl IndexClass {
    pub fn one() -> Self {
        IndexClass::Finite(Factored::one())
    }

    pub fn prime_power(p: u64, e: u64) -> Self {
        IndexClass::Finite(Factored::prime_power(p, e))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, IndexClass::Infinite)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, IndexClass::Finite(f) if f.is_one())
    }

    pub fn finite(&self) -> Option<&Factored> {
        match self {
            IndexClass::Finite(f) => Some(f),
            IndexClass::Infinite => None,
        }
    }

    /// `p^(e·mult)`: infinite when `e > 0` and `mult = ω`.
    pub fn prime_power_times(p: u64, e: u64, mult: Mult) -> Self {
        match mult {
            _ if e == 0 => IndexClass::one(),
            Mult::Fin(k) => IndexClass::prime_power(p, e * k),
            Mult::Omega => IndexClass::Infinite,
        }
    }
}

impl Mul for &IndexClass {
    type Output = IndexClass;
    fn mul(self, other: &IndexClass) -> IndexClass {
        match (self, other) {
            (IndexClass::Finite(a), IndexClass::Finite(b)) => IndexClass::Finite(a * b),
            _ => IndexClass::Infinite,
        }
    }
}

impl Mul for IndexClass {
    type Output = IndexClass;
    fn mul(self, other: IndexClass) -> IndexClass {
        &self * &other
    }
}

impl fmt::Display for IndexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexClass::Finite(v) => write!(f, "{v}"),
            IndexClass::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for IndexClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            IndexClass::Finite(v) => v.serialize(s),
            IndexClass::Infinite => s.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mult_order_and_sum() {
        assert!(Mult::Fin(u64::MAX) < Mult::Omega);
        assert_eq!(Mult::Fin(2) + Mult::Fin(3), Mult::Fin(5));
        assert_eq!(Mult::Fin(2) + Mult::Omega, Mult::Omega);
        assert_eq!(Mult::Omega + Mult::Omega, Mult::Omega);
        assert_eq!(Mult::Fin(u64::MAX).checked_add(Mult::ONE), None);
    }

    #[test]
    fn validate_examples() {
        let ok = SzmielewDescription::new().with_cyclic(2, 3, Mult::Omega);
        assert!(validate(&ok).is_empty());

        let zero = SzmielewDescription::new().with_cyclic(2, 0, Mult::ONE);
        let v = validate(&zero);
        assert_eq!(v, vec![Violation::ZeroExponent(2)]);
        assert!(v[0].to_string().contains("exponent must be ≥ 1"));

        let cut = SzmielewDescription::new()
            .with_cyclic(2, 3, Mult::ONE)
            .with_tail(2, 1, Mult::ONE);
        let v = validate(&cut);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains("cutoff below listed exponent"));
    }

    #[test]
    fn validate_collects_everything() {
        let d = SzmielewDescription::new()
            .with_tf(4, Mult::ONE)
            .with_tail(3, 0, Mult::ZERO)
            .with_cyclic(5, 0, Mult::ONE);
        let v = validate(&d);
        assert!(v.contains(&Violation::NotPrime(4)));
        assert!(v.contains(&Violation::ZeroTailMult(3)));
        assert!(v.contains(&Violation::ZeroExponent(5)));
    }

    #[test]
    fn tail_cutoff_lowers() {
        let c = PrimeComponent {
            cyclic: BTreeMap::from([(1, Mult::ONE), (2, Mult::Fin(2)), (3, Mult::ONE)]),
            tail: Some(TailSpec {
                cutoff: 3,
                mult: Mult::ONE,
            }),
            ..Default::default()
        }
        .canonical();
        assert_eq!(c.tail.unwrap().cutoff, 2);
        assert_eq!(c.cyclic.len(), 2);
    }

    #[test]
    fn component_sum_merges_tails() {
        let a = PrimeComponent {
            tail: Some(TailSpec {
                cutoff: 0,
                mult: Mult::ONE,
            }),
            ..Default::default()
        };
        let b = PrimeComponent {
            cyclic: BTreeMap::from([(3, Mult::Omega)]),
            tail: Some(TailSpec {
                cutoff: 4,
                mult: Mult::Fin(2),
            }),
            ..Default::default()
        };
        let s = a.checked_sum(&b).unwrap();
        for n in 1..10 {
            assert_eq!(s.alpha(n), a.alpha(n) + b.alpha(n), "n = {n}");
        }
    }

    #[test]
    fn index_class_algebra() {
        let vals: Vec<IndexClass> = [1u64, 2, 4, 6, 9, 12]
            .iter()
            .map(|&n| IndexClass::Finite(Factored::from_u64(n)))
            .chain(std::iter::once(IndexClass::Infinite))
            .collect();
        for a in &vals {
            assert_eq!(a * &IndexClass::one(), a.clone());
            assert_eq!(a * &IndexClass::Infinite, IndexClass::Infinite);
            for b in &vals {
                assert_eq!(a * b, b * a);
                for c in &vals {
                    assert_eq!(&(a * b) * c, a * &(b * c));
                }
            }
        }
        let six = &IndexClass::Finite(Factored::from_u64(2)) * &IndexClass::Finite(Factored::from_u64(3));
        assert_eq!(six.finite().unwrap().to_u64(), Some(6));
    }

    #[test]
    fn factored_big_values() {
        let f = Factored::prime_power(2, 100);
        assert_eq!(f.to_u64(), None);
        assert_eq!(f.value(), BigUint::from(1u32) << 100);
        assert_eq!(
            serde_json::to_string(&IndexClass::Finite(f)).unwrap(),
            format!("\"{}\"", BigUint::from(1u32) << 100)
        );
        assert_eq!(serde_json::to_string(&IndexClass::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Mult::Omega).unwrap(), "\"w\"");
    }

    #[test]
    fn direct_sum_of_descriptions() {
        let a = SzmielewDescription::new().with_cyclic(2, 1, Mult::ONE);
        let b = SzmielewDescription::new().with_cyclic(2, 1, Mult::Fin(2)).with_q(Mult::ONE);
        let s = a.direct_sum(&b);
        assert_eq!(s.cyclic[&(2, 1)], Mult::Fin(3));
        assert_eq!(s.q_mult, Mult::ONE);
    }
}
