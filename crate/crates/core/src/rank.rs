//! Closed-form dp-rank of abelian groups, strongness, vc-density and the
//! named witness families that realize each contribution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::core::{PPFormula, SzmielewDescription};
use crate::oracle::{breadth_search, default_bound};
use crate::normalize::{derived_sets, normalize, structure, DerivedSets, PrimeSet};

/// Size of a largest subset of `set` whose elements are pairwise at least 2 apart.
pub fn gap_count(set: &BTreeSet<u32>) -> usize {
    let mut last: Option<u32> = None;
    let mut count = 0;
    for &x in set {
        if last.map_or(true, |l| x >= l + 2) {
            last = Some(x);
            count += 1;
        }
    }
    count
}

/// Greedy choice realizing [`gap_count`].
fn gap_subset(set: &BTreeSet<u32>) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for &x in set {
        if out.last().map_or(true, |&l| x >= l + 2) {
            out.push(x);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dp {
    Finite(u64),
    Infinite { strong: bool },
}

impl Dp {
    pub fn finite(self) -> Option<u64> {
        match self {
            Dp::Finite(k) => Some(k),
            Dp::Infinite { .. } => None,
        }
    }
}

impl Serialize for Dp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Dp::Finite(k) => s.serialize_u64(*k),
            Dp::Infinite { .. } => s.serialize_str("inf"),
        }
    }
}

/// Which formula of the dp-rank equation applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    FiniteGroup,
    TorsionFree,
    FiniteExponent,
    BoundedLengths,
    UnboundedLength,
}

impl Serialize for Case {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Case::FiniteGroup => s.serialize_str("finite-group"),
            Case::TorsionFree => s.serialize_u8(1),
            Case::FiniteExponent => s.serialize_u8(2),
            Case::BoundedLengths => s.serialize_u8(3),
            Case::UnboundedLength => s.serialize_u8(4),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Epsilons {
    /// Some prime of unbounded length.
    pub u: u8,
    /// Unbounded exponent.
    pub exp: u8,
    /// Some `β_p ≠ 0`.
    pub tf: u8,
    /// Some `γ_p ≠ 0`.
    pub d: u8,
}

/// `P1`: unbounded length; `P2`: bounded length with an infinite Ulm
/// invariant; `P3`: every other prime.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub p1: PrimeSet,
    pub p2: PrimeSet,
    pub p3: PrimeSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessFamily {
    pub source: &'static str,
    pub formulas: Vec<PPFormula>,
    /// Depth this family certifies on its own.
    pub certifies: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub strong: bool,
    pub finite_dp: bool,
    pub dp_minimal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankReport {
    pub dp: Dp,
    pub strong: bool,
    pub case: Option<Case>,
    pub epsilons: Epsilons,
    /// Value of the ε-equation (equal to `dp` when finite).
    pub epsilon_value: Option<u64>,
    pub partition: Partition,
    pub derived: DerivedSets,
    pub witness: Option<Vec<PPFormula>>,
    pub families: Vec<WitnessFamily>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InternalError {
    #[error("case equation gives {case} but the epsilon equation gives {epsilon}")]
    EpsilonMismatch { case: u64, epsilon: u64 },
    #[error("classification inconsistent: {0}")]
    Classification(&'static str),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VcError {
    #[error("vc-density is defined for m >= 1")]
    ZeroArity,
}

/// Facts about the infinitely many unlisted primes and the ω tails.
struct Finiteness {
    many_quotients: bool,
    many_torsion: bool,
    omega_tail: bool,
}

fn finiteness(strict: &SzmielewDescription, sets: &DerivedSets) -> Finiteness {
    let shape = strict.prime_tail.as_ref();
    let pattern_omega = shape.is_some_and(|s| s.cyclic_pattern.values().any(|m| m.is_omega()));
    Finiteness {
        many_quotients: pattern_omega || shape.is_some_and(|s| s.tf_mult.is_omega()),
        many_torsion: pattern_omega || shape.is_some_and(|s| s.div_mult.is_omega()),
        omega_tail: !sets.u_inf_at_unbounded.is_empty(),
    }
}

fn partition(strict: &SzmielewDescription, sets: &DerivedSets) -> Partition {
    let mut out = Partition::default();
    for p in strict.listed_primes() {
        if sets.u_inf.contains(&p) {
            out.p1.members.insert(p);
        } else if sets.u_inf_at.contains_key(&p) {
            out.p2.members.insert(p);
        } else {
            out.p3.members.insert(p);
        }
    }
    let unlisted_in_p2 = !sets.u_inf_at_unlisted.is_empty();
    out.p2.all_unlisted = unlisted_in_p2;
    out.p3.all_unlisted = !unlisted_in_p2;
    out
}

fn b(x: bool) -> u8 {
    u8::from(x)
}

pub fn classify(desc: &SzmielewDescription) -> Result<Classification, InternalError> {
    let strict = normalize(desc);
    let sets = derived_sets(&strict);
    let f = finiteness(&strict, &sets);
    let strong = !f.many_quotients && !f.omega_tail;
    let finite_dp = strong && !f.many_torsion;
    if finite_dp && !strong {
        return Err(InternalError::Classification("finite dp-rank without strongness"));
    }
    let dp_minimal = finite_dp && dp_value(&strict, &sets) == 1;
    Ok(Classification {
        strong,
        finite_dp,
        dp_minimal,
    })
}

/// Case equation on a strict description of finite dp-rank.
fn dp_value(strict: &SzmielewDescription, sets: &DerivedSets) -> u64 {
    case_and_value(strict, sets).1
}

fn case_and_value(strict: &SzmielewDescription, sets: &DerivedSets) -> (Case, u64) {
    let st = structure(strict);
    let gaps: u64 = sets.u_inf_at.values().map(|s| gap_count(s) as u64).sum();
    let tf = sets.tf_inf.members.len() as u64;
    let d = sets.d_inf.members.len() as u64;
    let u = sets.u_inf.len() as u64;
    if st.finite_group {
        (Case::FiniteGroup, 0)
    } else if !st.has_torsion {
        (Case::TorsionFree, tf.max(1))
    } else if st.bounded_exponent {
        (Case::FiniteExponent, gaps)
    } else if u == 0 {
        (Case::BoundedLengths, gaps + tf.max(d).max(1))
    } else {
        (Case::UnboundedLength, gaps + u + tf.max(d))
    }
}

fn epsilons(strict: &SzmielewDescription, sets: &DerivedSets) -> Epsilons {
    let shape = strict.prime_tail.as_ref();
    Epsilons {
        u: b(!sets.u_inf.is_empty()),
        exp: b(!structure(strict).bounded_exponent),
        tf: b(strict.tf.values().any(|m| !m.is_zero())
            || shape.is_some_and(|s| !s.tf_mult.is_zero())),
        d: b(strict.div.values().any(|m| !m.is_zero())
            || shape.is_some_and(|s| !s.div_mult.is_zero())),
    }
}

fn epsilon_value(e: Epsilons, sets: &DerivedSets) -> u64 {
    let gaps: u64 = sets.u_inf_at.values().map(|s| gap_count(s) as u64).sum();
    let tf = sets.tf_inf.members.len() as u64;
    let d = sets.d_inf.members.len() as u64;
    let u = sets.u_inf.len() as u64;
    let (eu, eexp, etf, ed) = (
        u64::from(e.u),
        u64::from(e.exp),
        u64::from(e.tf),
        u64::from(e.d),
    );
    gaps + u + (1 - eu.max(etf).max(ed)) * eexp + etf.max(ed) * (1 - eu).max(tf).max(d)
}

pub fn dp_rank(desc: &SzmielewDescription) -> Result<RankReport, InternalError> {
    let strict = normalize(desc);
    let sets = derived_sets(&strict);
    let f = finiteness(&strict, &sets);
    let eps = epsilons(&strict, &sets);
    let part = partition(&strict, &sets);
    let families = seed_witnesses(&strict);
    let strong = !f.many_quotients && !f.omega_tail;
    if f.many_quotients || f.many_torsion || f.omega_tail {
        return Ok(RankReport {
            dp: Dp::Infinite { strong },
            strong,
            case: None,
            epsilons: eps,
            epsilon_value: None,
            partition: part,
            derived: sets,
            witness: None,
            families,
        });
    }
    let (case, value) = case_and_value(&strict, &sets);
    let ev = epsilon_value(eps, &sets);
    if ev != value {
        return Err(InternalError::EpsilonMismatch {
            case: value,
            epsilon: ev,
        });
    }
    let witness = families
        .iter()
        .find(|w| w.certifies as u64 == value && value > 0)
        .map(|w| w.formulas.clone())
        .or_else(|| searched_witness(&strict, value));
    Ok(RankReport {
        dp: Dp::Finite(value),
        strong,
        case: Some(case),
        epsilons: eps,
        epsilon_value: Some(ev),
        partition: part,
        derived: sets,
        witness,
        families,
    })
}

/// Mixed shapes have no single named family; take the oracle's.
fn searched_witness(strict: &SzmielewDescription, value: u64) -> Option<Vec<PPFormula>> {
    if value == 0 {
        return None;
    }
    let r = breadth_search(strict, default_bound(strict), value as usize).ok()?;
    (r.depth as u64 == value).then_some(r.witness)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VcReport {
    /// `m -> vc(m)`.
    pub values: BTreeMap<u32, Dp>,
}

/// `vc(m) = m · dp` for each requested arity.
pub fn vc_density(desc: &SzmielewDescription, ms: &[u32]) -> Result<VcReport, VcError> {
    if ms.contains(&0) {
        return Err(VcError::ZeroArity);
    }
    let strict = normalize(desc);
    let sets = derived_sets(&strict);
    let f = finiteness(&strict, &sets);
    let dp = if f.many_quotients || f.many_torsion || f.omega_tail {
        Dp::Infinite {
            strong: !f.many_quotients && !f.omega_tail,
        }
    } else {
        Dp::Finite(dp_value(&strict, &sets))
    };
    let values = ms
        .iter()
        .map(|&m| {
            let v = match dp {
                Dp::Finite(k) => Dp::Finite(k * u64::from(m)),
                inf => inf,
            };
            (m, v)
        })
        .collect();
    Ok(VcReport { values })
}

/// Product of the primes in `set` other than `p`.
fn complement(set: &BTreeSet<u64>, p: u64) -> PPFormula {
    PPFormula::tor(set.iter().filter(|&&q| q != p).product())
}

/// The named families of the description's shape.
pub fn seed_witnesses(desc: &SzmielewDescription) -> Vec<WitnessFamily> {
    let strict = normalize(desc);
    let sets = derived_sets(&strict);
    let st = structure(&strict);
    let mut out = Vec::new();
    let tf = &sets.tf_inf;
    if !tf.members.is_empty() {
        out.push(WitnessFamily {
            source: "torsion-free",
            formulas: tf.members.iter().map(|&p| PPFormula::div(p, 1, 0)).collect(),
            certifies: tf.members.len(),
        });
    }
    let d = &sets.d_inf.members;
    if !d.is_empty() {
        out.push(WitnessFamily {
            source: "divisible",
            formulas: d.iter().map(|&p| complement(d, p)).collect(),
            certifies: d.len(),
        });
    }
    if !sets.u_inf_at.is_empty() {
        let mut formulas = Vec::new();
        for (&p, set) in &sets.u_inf_at {
            for (i, n) in gap_subset(set).into_iter().enumerate() {
                let k = n + 1;
                let i = i as u32 + 1;
                formulas.push(PPFormula::div(p, k, k - i));
            }
        }
        out.push(WitnessFamily {
            source: "ulm-gaps",
            certifies: formulas.len(),
            formulas,
        });
    }
    if !sets.u_inf.is_empty() {
        out.push(WitnessFamily {
            source: "unbounded-length",
            formulas: sets.u_inf.iter().map(|&p| PPFormula::div(p, 1, 0)).collect(),
            certifies: sets.u_inf.len(),
        });
        if sets.u_inf.len() > 1 {
            out.push(WitnessFamily {
                source: "unbounded-length-torsion",
                formulas: sets.u_inf.iter().map(|&p| complement(&sets.u_inf, p)).collect(),
                certifies: sets.u_inf.len(),
            });
        }
    }
    for &p in &sets.u_inf_at_unbounded {
        let cutoff = strict.cyclic_tail[&p].cutoff;
        let mut n = cutoff + 1;
        let mut formulas = Vec::new();
        for _ in 0..3 {
            formulas.push(PPFormula::div(p, 2 * n, n));
            n = 2 * n + 1;
        }
        out.push(WitnessFamily {
            source: "non-strong-tail",
            formulas,
            certifies: 3,
        });
    }
    if !st.finite_group {
        out.push(WitnessFamily {
            source: "baseline",
            formulas: vec![PPFormula::tor(1)],
            certifies: 1,
        });
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

    fn dp(s: &str) -> Dp {
        dp_rank(&g(s)).unwrap().dp
    }

    fn exhaustive_gap_count(set: &BTreeSet<u32>) -> usize {
        let v: Vec<u32> = set.iter().copied().collect();
        (0u32..1 << v.len())
            .filter(|mask| {
                let chosen: Vec<u32> = (0..v.len())
                    .filter(|&i| mask >> i & 1 == 1)
                    .map(|i| v[i])
                    .collect();
                chosen.windows(2).all(|w| w[1] >= w[0] + 2)
            })
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn gap_count_examples() {
        assert_eq!(gap_count(&BTreeSet::new()), 0);
        assert_eq!(gap_count(&BTreeSet::from([3])), 1);
        assert_eq!(gap_count(&BTreeSet::from([0, 1, 2])), 2);
    }

    #[test]
    fn gap_count_matches_exhaustive_search() {
        for mask in 0u32..1 << 12 {
            let set: BTreeSet<u32> = (0..12).filter(|i| mask >> i & 1 == 1).collect();
            assert_eq!(gap_count(&set), exhaustive_gap_count(&set), "{set:?}");
        }
    }

    #[test]
    fn dp_examples() {
        assert_eq!(dp("Q"), Dp::Finite(1));
        assert_eq!(dp("Z_(2)^w + Z_(3)^w"), Dp::Finite(2));
        assert_eq!(dp("Z(2^inf)^w + Z(3^inf)^w + Z(5^inf)^w"), Dp::Finite(3));
        assert_eq!(dp("Z(2^1)^w + Z(2^3)^w"), Dp::Finite(2));
        assert_eq!(dp("Z(2^1)^w + Z(2^2)^w"), Dp::Finite(1));
        assert_eq!(dp("tail(2) + Z(3^inf)^w"), Dp::Finite(2));
        assert_eq!(dp("tail(2)"), Dp::Finite(1));
        assert_eq!(dp("forall_p{Z(P^inf)^w}"), Dp::Infinite { strong: true });
        assert_eq!(dp("Z(2^3)^4 + Z(3^1)"), Dp::Finite(0));
        assert_eq!(dp("0"), Dp::Finite(0));
    }

    #[test]
    fn case_tags() {
        let case = |s: &str| dp_rank(&g(s)).unwrap().case;
        assert_eq!(case("Z(2^1)"), Some(Case::FiniteGroup));
        assert_eq!(case("Q"), Some(Case::TorsionFree));
        assert_eq!(case("Z(2^1)^w"), Some(Case::FiniteExponent));
        assert_eq!(case("Z(2^1)^w + Z_(3)"), Some(Case::BoundedLengths));
        assert_eq!(case("tail(2)"), Some(Case::UnboundedLength));
        assert_eq!(case("tail(2, w)"), None);
    }

    #[test]
    fn classify_examples() {
        assert!(!classify(&g("tail(2, mult=w)")).unwrap().strong);
        assert!(!classify(&g("forall_p{Z_(P)^w}")).unwrap().strong);
        let c = classify(&g("forall_p{Z(P^inf)^w}")).unwrap();
        assert!(c.strong && !c.finite_dp);
        assert!(classify(&g("Q")).unwrap().dp_minimal);
        assert!(!classify(&g("Z(2^1)")).unwrap().dp_minimal);
    }

    #[test]
    fn vc_examples() {
        let v = vc_density(&g("Q"), &[1]).unwrap();
        assert_eq!(v.values[&1], Dp::Finite(1));
        let v = vc_density(&g("Z_(2)^w + Z_(3)^w"), &[2]).unwrap();
        assert_eq!(v.values[&2], Dp::Finite(4));
        let v = vc_density(&g("forall_p{Z(P^inf)^w}"), &[1]).unwrap();
        assert!(matches!(v.values[&1], Dp::Infinite { .. }));
        assert_eq!(vc_density(&g("Q"), &[0]), Err(VcError::ZeroArity));
    }

    #[test]
    fn seed_examples() {
        let fam = |s: &str, src: &str| {
            seed_witnesses(&g(s))
                .into_iter()
                .find(|w| w.source == src)
                .map(|w| w.formulas.iter().map(|f| f.to_string()).collect::<Vec<_>>())
        };
        assert_eq!(
            fam("Z_(2)^w + Z_(3)^w", "torsion-free").unwrap(),
            ["div(2,1,0)", "div(3,1,0)"]
        );
        assert_eq!(
            fam("Z(2^inf)^w + Z(3^inf)^w", "divisible").unwrap(),
            ["tor(3)", "tor(2)"]
        );
        assert_eq!(
            fam("tail(2, mult=w)", "non-strong-tail").unwrap(),
            ["div(2,2,1)", "div(2,6,3)", "div(2,14,7)"]
        );
        assert_eq!(
            fam("Z(2^1)^w + Z(2^3)^w", "ulm-gaps").unwrap(),
            ["div(2,1,0)", "div(2,3,1)"]
        );
    }

    #[test]
    fn partition_sets() {
        let r = dp_rank(&g("tail(2) + Z(3^1)^w + Z(5^2)^3")).unwrap();
        assert_eq!(r.partition.p1.members, BTreeSet::from([2]));
        assert_eq!(r.partition.p2.members, BTreeSet::from([3]));
        assert_eq!(r.partition.p3.members, BTreeSet::from([5]));
        assert!(r.partition.p3.all_unlisted);
    }

    #[test]
    fn report_json_keys() {
        let v = serde_json::to_value(dp_rank(&g("Z_(2)^w + Z_(3)^w")).unwrap()).unwrap();
        assert_eq!(v["dp"], 2);
        assert_eq!(v["case"], 1);
        assert_eq!(v["epsilons"]["tf"], 1);
        let v = serde_json::to_value(dp_rank(&g("tail(2, w)")).unwrap()).unwrap();
        assert_eq!(v["dp"], "inf");
        assert_eq!(v["strong"], false);
    }
}
