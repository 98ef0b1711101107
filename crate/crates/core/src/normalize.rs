//! Strict normal forms, Ulm / Eklof–Fischer style invariants and elementary
//! equivalence.
//!
//! Ulm indices follow `U(p,n;A) = |(p^n A)[p] / (p^{n+1} A)[p]|`, so a summand
//! `Z(p^k)` is counted at `n = k - 1`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::core::{IndexClass, Mult, PrimeComponent, SzmielewDescription};

/// Reduces `desc` to the strict Szmielew group with the same theory.
///
/// * `δ ∈ {0, ω}`;
/// * `δ = 0` once the rest has unbounded exponent or some `β_p`, `γ_p ≠ 0`;
/// * `β_p = γ_p = 0` at primes of unbounded length.
pub fn normalize(desc: &SzmielewDescription) -> SzmielewDescription {
    let d = desc.canonicalize();
    let mut comps = d.components();
    for c in comps.values_mut() {
        if c.tail.is_some() {
            c.tf = Mult::ZERO;
            c.div = Mult::ZERO;
        }
    }
    let rest_unbounded = d.prime_tail.is_some()
        || comps
            .values()
            .any(|c| c.tail.is_some() || !c.tf.is_zero() || !c.div.is_zero());
    let q = if rest_unbounded || d.q_mult.is_zero() {
        Mult::ZERO
    } else {
        Mult::Omega
    };
    SzmielewDescription::from_components(comps, q, d.prime_tail.clone()).canonicalize()
}

/// Whether `a` and `b` have the same first-order theory.
pub fn is_equivalent(a: &SzmielewDescription, b: &SzmielewDescription) -> bool {
    normalize(a) == normalize(b)
}

/// Invariants of one prime, as values `p^k` (or infinite).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeInvariants {
    /// `U(p,n)` for every `n` below `ulm_tail.0` whose value is not 1.
    pub ulm: BTreeMap<u32, IndexClass>,
    /// `(start, value)`: `U(p,n) = value` for every `n ≥ start`.
    pub ulm_tail: Option<(u32, IndexClass)>,
    pub d_lim: IndexClass,
    pub tf_lim: IndexClass,
    pub quotient_pa_infinite: bool,
    pub torsion_p_infinite: bool,
}

/// Invariants shared by every unlisted prime, as exponents of `p`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UnlistedInvariants {
    pub ulm_exponent: BTreeMap<u32, Mult>,
    pub d_lim_exponent: Mult,
    pub tf_lim_exponent: Mult,
    pub quotient_pa_infinite: bool,
    pub torsion_p_infinite: bool,
}

impl UnlistedInvariants {
    fn at(&self, p: u64) -> PrimeInvariants {
        PrimeInvariants {
            ulm: self
                .ulm_exponent
                .iter()
                .map(|(&n, &m)| (n, IndexClass::prime_power_times(p, 1, m)))
                .collect(),
            ulm_tail: None,
            d_lim: IndexClass::prime_power_times(p, 1, self.d_lim_exponent),
            tf_lim: IndexClass::prime_power_times(p, 1, self.tf_lim_exponent),
            quotient_pa_infinite: self.quotient_pa_infinite,
            torsion_p_infinite: self.torsion_p_infinite,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    /// Primes whose invariants differ from `unlisted`.
    pub primes: BTreeMap<u64, PrimeInvariants>,
    pub unlisted: UnlistedInvariants,
    pub bounded_exponent: bool,
    pub finite_group: bool,
}

impl InvariantReport {
    pub fn prime(&self, p: u64) -> PrimeInvariants {
        self.primes
            .get(&p)
            .cloned()
            .unwrap_or_else(|| self.unlisted.at(p))
    }

    /// `U(p, n; A)`.
    pub fn ulm(&self, p: u64, n: u32) -> IndexClass {
        let inv = self.prime(p);
        if let Some((start, v)) = &inv.ulm_tail {
            if n >= *start {
                return v.clone();
            }
        }
        inv.ulm.get(&n).cloned().unwrap_or_else(IndexClass::one)
    }

    pub fn d_lim(&self, p: u64) -> IndexClass {
        self.prime(p).d_lim
    }

    pub fn tf_lim(&self, p: u64) -> IndexClass {
        self.prime(p).tf_lim
    }
}

fn prime_invariants(p: u64, c: &PrimeComponent) -> PrimeInvariants {
    let some_alpha_omega = c.cyclic.values().any(|m| m.is_omega());
    let tailed = c.tail.is_some();
    let ulm = c
        .cyclic
        .iter()
        .filter(|(_, m)| !m.is_zero())
        .map(|(&k, &m)| (k - 1, IndexClass::prime_power_times(p, 1, m)))
        .collect();
    let ulm_tail = c
        .tail
        .map(|t| (t.cutoff, IndexClass::prime_power_times(p, 1, t.mult)));
    PrimeInvariants {
        ulm,
        ulm_tail,
        d_lim: if tailed {
            IndexClass::Infinite
        } else {
            IndexClass::prime_power_times(p, 1, c.div)
        },
        tf_lim: if tailed {
            IndexClass::Infinite
        } else {
            IndexClass::prime_power_times(p, 1, c.tf)
        },
        quotient_pa_infinite: c.tf.is_omega() || some_alpha_omega || tailed,
        torsion_p_infinite: c.div.is_omega() || some_alpha_omega || tailed,
    }
}

/// Structural facts about a description that several modules need.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Structure {
    pub has_torsion: bool,
    pub bounded_exponent: bool,
    pub finite_group: bool,
}

pub fn structure(desc: &SzmielewDescription) -> Structure {
    let d = desc.canonicalize();
    let comps = d.components();
    let shape = d.prime_tail.as_ref();
    let has_torsion = comps
        .values()
        .any(|c| c.tail.is_some() || !c.div.is_zero() || !c.cyclic.is_empty())
        || shape.is_some_and(|s| !s.div_mult.is_zero() || !s.cyclic_pattern.is_empty());
    let bounded_exponent = d.q_mult.is_zero()
        && shape.is_none()
        && comps
            .values()
            .all(|c| c.tail.is_none() && c.tf.is_zero() && c.div.is_zero());
    let finite_group =
        bounded_exponent && comps.values().all(|c| c.cyclic.values().all(|m| !m.is_omega()));
    Structure {
        has_torsion,
        bounded_exponent,
        finite_group,
    }
}

pub fn invariants(desc: &SzmielewDescription) -> InvariantReport {
    let d = desc.canonicalize();
    let unlisted = match &d.prime_tail {
        None => UnlistedInvariants::default(),
        Some(s) => {
            let c = s.component();
            let some_omega = c.cyclic.values().any(|m| m.is_omega());
            UnlistedInvariants {
                ulm_exponent: c.cyclic.iter().map(|(&k, &m)| (k - 1, m)).collect(),
                d_lim_exponent: c.div,
                tf_lim_exponent: c.tf,
                quotient_pa_infinite: c.tf.is_omega() || some_omega,
                torsion_p_infinite: c.div.is_omega() || some_omega,
            }
        }
    };
    let primes = d
        .components()
        .into_iter()
        .map(|(p, c)| (p, prime_invariants(p, &c)))
        .filter(|(p, inv)| *inv != unlisted.at(*p))
        .collect();
    let s = structure(&d);
    InvariantReport {
        primes,
        unlisted,
        bounded_exponent: s.bounded_exponent,
        finite_group: s.finite_group,
    }
}

/// A set of primes that may additionally contain every unlisted prime.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrimeSet {
    pub members: BTreeSet<u64>,
    /// Every prime not listed in the description also belongs to the set.
    pub all_unlisted: bool,
}

impl PrimeSet {
    pub fn is_infinite(&self) -> bool {
        self.all_unlisted
    }

    /// Cardinality when finite.
    pub fn len(&self) -> Option<usize> {
        (!self.all_unlisted).then_some(self.members.len())
    }

    pub fn is_empty(&self) -> bool {
        !self.all_unlisted && self.members.is_empty()
    }
}

/// The invariant sets of the dp-rank equation, read off the strict form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DerivedSets {
    /// Primes with `β_p = ω`.
    pub tf_inf: PrimeSet,
    /// Primes with `γ_p = ω`.
    pub d_inf: PrimeSet,
    /// `p -> {n : U(p,n) infinite}` for the finitely many explicit `n`.
    pub u_inf_at: BTreeMap<u64, BTreeSet<u32>>,
    /// Primes whose set `{n : U(p,n) infinite}` is infinite (an ω tail).
    pub u_inf_at_unbounded: BTreeSet<u64>,
    /// `{n : U(p,n) infinite}` at every unlisted prime.
    pub u_inf_at_unlisted: BTreeSet<u32>,
    /// Primes of unbounded length.
    pub u_inf: BTreeSet<u64>,
}

impl DerivedSets {
    /// Whether `U(p,n)` is infinite for infinitely many pairs `(p,n)`.
    pub fn infinitely_many_ulm_pairs(&self) -> bool {
        !self.u_inf_at_unbounded.is_empty() || !self.u_inf_at_unlisted.is_empty()
    }
}

pub fn derived_sets(desc: &SzmielewDescription) -> DerivedSets {
    let d = normalize(desc);
    let mut out = DerivedSets::default();
    if let Some(s) = &d.prime_tail {
        out.tf_inf.all_unlisted = s.tf_mult.is_omega();
        out.d_inf.all_unlisted = s.div_mult.is_omega();
        out.u_inf_at_unlisted = s
            .cyclic_pattern
            .iter()
            .filter(|(_, m)| m.is_omega())
            .map(|(&k, _)| k - 1)
            .collect();
    }
    for (p, c) in d.components() {
        if c.tf.is_omega() {
            out.tf_inf.members.insert(p);
        }
        if c.div.is_omega() {
            out.d_inf.members.insert(p);
        }
        let set: BTreeSet<u32> = c
            .cyclic
            .iter()
            .filter(|(_, m)| m.is_omega())
            .map(|(&k, _)| k - 1)
            .collect();
        if !set.is_empty() {
            out.u_inf_at.insert(p, set);
        }
        if let Some(t) = c.tail {
            out.u_inf.insert(p);
            if t.mult.is_omega() {
                out.u_inf_at_unbounded.insert(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_group;

    fn g(s: &str) -> SzmielewDescription {
        parse_group(s).unwrap()
    }

    #[test]
    fn invariants_examples() {
        let r = invariants(&g("Z(2^3)^w"));
        assert_eq!(r.ulm(2, 2), IndexClass::Infinite);
        for n in [0, 1, 3, 4, 10] {
            assert!(r.ulm(2, n).is_one(), "n = {n}");
        }
        let r = invariants(&g("Z_(2)^5"));
        assert_eq!(r.tf_lim(2), IndexClass::prime_power(2, 5));
        assert_eq!(r.tf_lim(2).finite().unwrap().to_u64(), Some(32));
        let r = invariants(&g("tail(2)"));
        assert_eq!(r.tf_lim(2), IndexClass::Infinite);
        assert_eq!(r.d_lim(2), IndexClass::Infinite);
        assert_eq!(derived_sets(&g("tail(2)")).u_inf, BTreeSet::from([2]));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&g("Q")), g("Q^w"));
        assert_eq!(normalize(&g("Z_(2) + Q^w")), g("Z_(2)"));
        assert_eq!(normalize(&g("tail(2) + Z_(2)^w + Z(2^inf)")), g("tail(2)"));
        assert_eq!(normalize(&g("Z(2^1) + Q^3")), g("Z(2^1) + Q^w"));
        assert_eq!(normalize(&g("0")), SzmielewDescription::trivial());
    }

    #[test]
    fn equivalence_examples() {
        assert!(is_equivalent(&g("Z(2^2)^w + Z(2^2)^5"), &g("Z(2^2)^w")));
        assert!(is_equivalent(&g("Q"), &g("Q^w")));
        assert!(!is_equivalent(&g("Z(2^1)"), &g("Z(3^1)")));
        assert!(!is_equivalent(&g("0"), &g("Q")));
        assert!(is_equivalent(&g("0"), &SzmielewDescription::trivial()));
    }

    #[test]
    fn derived_sets_examples() {
        let d = derived_sets(&g("Z_(2)^w + Z_(3)^w"));
        assert_eq!(d.tf_inf.members, BTreeSet::from([2, 3]));
        let d = derived_sets(&g("tail(2) + Z(2^inf)^w"));
        assert!(d.d_inf.is_empty());
        assert_eq!(d.u_inf, BTreeSet::from([2]));
        let d = derived_sets(&g("forall_p{Z(P^inf)^w}"));
        assert!(d.d_inf.is_infinite());
        let d = derived_sets(&g("Z(2^1)^w + Z(2^3)^w"));
        assert_eq!(d.u_inf_at[&2], BTreeSet::from([0, 2]));
    }

    #[test]
    fn unlisted_primes_in_report() {
        let r = invariants(&g("Z_(2) + forall_p{Z_(P)^w + Z(P^2)}"));
        assert_eq!(r.tf_lim(2), IndexClass::prime_power(2, 1));
        assert_eq!(r.tf_lim(7), IndexClass::Infinite);
        assert_eq!(r.ulm(7, 1), IndexClass::prime_power(7, 1));
        assert!(r.ulm(2, 1).is_one());
        assert!(r.prime(11).quotient_pa_infinite);
        assert!(!r.bounded_exponent);
    }

    #[test]
    fn normalize_preserves_invariants_on_examples() {
        for s in [
            "Q",
            "Z_(2) + Q^w",
            "tail(2) + Z_(2)^w + Z(2^inf)",
            "tail(3, w, cutoff=2) + Z(3^2)^w + Z(3^inf)^2 + Q",
            "Z_(3)^w + forall_p{Z_(P)^w} + Q",
        ] {
            let d = g(s);
            assert_eq!(invariants(&d), invariants(&normalize(&d)), "{s}");
            assert_eq!(normalize(&normalize(&d)), normalize(&d), "{s}");
        }
    }
}
