//! Blockwise evaluation of pp formulas on Szmielew groups.
//!
//! A description is first *materialized*: tails are cut at a horizon so that
//! every atom acts uniformly on the remaining blocks, and primes of the
//! formulas are pulled out of `prime_tail` as explicit components. Every block
//! then carries one [`LocalSubgroup`]; within a block kind these form a chain.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::arith::valuation;
use crate::core::{Atom, Factored, IndexClass, Mult, PPFormula, SzmielewDescription};
use crate::dsl::render_group;

/// Where each tail is cut and which primes are explicit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Horizon {
    /// Tail at `p` keeps only blocks `n > tail_cut[p]` as a family.
    pub tail_cut: BTreeMap<u64, u32>,
    /// Primes with their own blocks; every other prime follows `prime_tail`.
    pub explicit: BTreeSet<u64>,
}

impl Horizon {
    /// Smallest horizon on which every formula in `formulas` is uniform.
    pub fn for_formulas<'a>(
        desc: &SzmielewDescription,
        formulas: impl IntoIterator<Item = &'a PPFormula>,
    ) -> Horizon {
        let formulas: Vec<&PPFormula> = formulas.into_iter().collect();
        let mut h = Horizon {
            explicit: desc.listed_primes(),
            ..Default::default()
        };
        for (&p, t) in &desc.cyclic_tail {
            let reach = formulas.iter().map(|f| f.reach(p)).max().unwrap_or(0);
            h.tail_cut.insert(p, t.cutoff.max(reach));
        }
        if desc.prime_tail.is_some() {
            for f in &formulas {
                h.explicit.extend(f.primes());
            }
        }
        h
    }

    pub fn join(&self, other: &Horizon) -> Horizon {
        let mut out = self.clone();
        for (&p, &t) in &other.tail_cut {
            let e = out.tail_cut.entry(p).or_insert(t);
            *e = (*e).max(t);
        }
        out.explicit.extend(other.explicit.iter().copied());
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    Cyclic { p: u64, n: u32 },
    /// Blocks `Z(p^n)` for every `n > above`.
    Tail { p: u64, above: u32 },
    TorsionFree { p: u64 },
    Prufer { p: u64 },
    Rational,
}

impl BlockKind {
    pub fn prime(&self) -> Option<u64> {
        match *self {
            BlockKind::Cyclic { p, .. }
            | BlockKind::Tail { p, .. }
            | BlockKind::TorsionFree { p }
            | BlockKind::Prufer { p } => Some(p),
            BlockKind::Rational => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    #[serde(flatten)]
    pub kind: BlockKind,
    pub mult: Mult,
}

/// The explicit block list of `desc` at `horizon`.
pub fn materialize(desc: &SzmielewDescription, horizon: &Horizon) -> Vec<Block> {
    let mut out = Vec::new();
    for &p in &horizon.explicit {
        let c = desc.component(p);
        for (&n, &m) in &c.cyclic {
            if !m.is_zero() {
                out.push(Block {
                    kind: BlockKind::Cyclic { p, n },
                    mult: m,
                });
            }
        }
        if let Some(t) = c.tail {
            let cut = horizon.tail_cut.get(&p).copied().unwrap_or(t.cutoff).max(t.cutoff);
            for n in t.cutoff + 1..=cut {
                out.push(Block {
                    kind: BlockKind::Cyclic { p, n },
                    mult: t.mult,
                });
            }
            out.push(Block {
                kind: BlockKind::Tail { p, above: cut },
                mult: t.mult,
            });
        }
        if !c.tf.is_zero() {
            out.push(Block {
                kind: BlockKind::TorsionFree { p },
                mult: c.tf,
            });
        }
        if !c.div.is_zero() {
            out.push(Block {
                kind: BlockKind::Prufer { p },
                mult: c.div,
            });
        }
    }
    if !desc.q_mult.is_zero() {
        out.push(Block {
            kind: BlockKind::Rational,
            mult: desc.q_mult,
        });
    }
    out
}

/// `b ∈ ℕ ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Fin(u32),
    Inf,
}

impl Serialize for Bound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Fin(b) => s.serialize_u32(*b),
            Bound::Inf => s.serialize_str("inf"),
        }
    }
}

/// Local subgroup of `Z_(p)`: `p^a Z_(p)` or zero. Ordered by inclusion, reversed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TfLocal {
    Depth(u32),
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalSubgroup {
    /// `p^depth Z(p^n)`.
    Cyclic { depth: u32 },
    /// At block `n`: depth `max(a, n - b)`.
    Tail { a: u32, b: Bound },
    TorsionFree { local: TfLocal },
    /// The `p^b`-torsion, or everything when `b = ∞`.
    Prufer { bound: Bound },
    Rational { whole: bool },
}

fn whole(kind: BlockKind) -> LocalSubgroup {
    match kind {
        BlockKind::Cyclic { .. } => LocalSubgroup::Cyclic { depth: 0 },
        BlockKind::Tail { .. } => LocalSubgroup::Tail { a: 0, b: Bound::Inf },
        BlockKind::TorsionFree { .. } => LocalSubgroup::TorsionFree {
            local: TfLocal::Depth(0),
        },
        BlockKind::Prufer { .. } => LocalSubgroup::Prufer { bound: Bound::Inf },
        BlockKind::Rational => LocalSubgroup::Rational { whole: true },
    }
}

fn zero(kind: BlockKind) -> LocalSubgroup {
    match kind {
        BlockKind::Cyclic { n, .. } => LocalSubgroup::Cyclic { depth: n },
        BlockKind::Tail { .. } => LocalSubgroup::Tail {
            a: 0,
            b: Bound::Fin(0),
        },
        BlockKind::TorsionFree { .. } => LocalSubgroup::TorsionFree {
            local: TfLocal::Zero,
        },
        BlockKind::Prufer { .. } => LocalSubgroup::Prufer {
            bound: Bound::Fin(0),
        },
        BlockKind::Rational => LocalSubgroup::Rational { whole: false },
    }
}

fn eval_atom(kind: BlockKind, atom: &Atom) -> LocalSubgroup {
    match (kind, *atom) {
        (BlockKind::Cyclic { p, n }, Atom::Div { p: q, r, s }) => {
            let depth = if q != p || n <= s {
                0
            } else if n <= r {
                n - s
            } else {
                r - s
            };
            LocalSubgroup::Cyclic { depth }
        }
        (BlockKind::Cyclic { p, n }, Atom::Tor(m)) => LocalSubgroup::Cyclic {
            depth: n.saturating_sub(valuation(m, p)),
        },
        (BlockKind::Tail { p, .. }, Atom::Div { p: q, r, s }) => LocalSubgroup::Tail {
            a: if q == p { r - s } else { 0 },
            b: Bound::Inf,
        },
        (BlockKind::Tail { p, .. }, Atom::Tor(m)) => LocalSubgroup::Tail {
            a: 0,
            b: Bound::Fin(valuation(m, p)),
        },
        (BlockKind::TorsionFree { p }, Atom::Div { p: q, r, s }) => LocalSubgroup::TorsionFree {
            local: TfLocal::Depth(if q == p { r - s } else { 0 }),
        },
        (BlockKind::TorsionFree { .. }, Atom::Tor(_)) => LocalSubgroup::TorsionFree {
            local: TfLocal::Zero,
        },
        (BlockKind::Prufer { .. }, Atom::Div { .. }) => LocalSubgroup::Prufer { bound: Bound::Inf },
        (BlockKind::Prufer { p }, Atom::Tor(m)) => LocalSubgroup::Prufer {
            bound: Bound::Fin(valuation(m, p)),
        },
        (BlockKind::Rational, Atom::Div { .. }) => LocalSubgroup::Rational { whole: true },
        (BlockKind::Rational, Atom::Tor(_)) => LocalSubgroup::Rational { whole: false },
    }
}

fn meet_local(x: LocalSubgroup, y: LocalSubgroup) -> LocalSubgroup {
    use LocalSubgroup::*;
    match (x, y) {
        (Cyclic { depth: a }, Cyclic { depth: b }) => Cyclic { depth: a.max(b) },
        (Tail { a: a1, b: b1 }, Tail { a: a2, b: b2 }) => Tail {
            a: a1.max(a2),
            b: b1.min(b2),
        },
        (TorsionFree { local: a }, TorsionFree { local: b }) => TorsionFree { local: a.max(b) },
        (Prufer { bound: a }, Prufer { bound: b }) => Prufer { bound: a.min(b) },
        (Rational { whole: a }, Rational { whole: b }) => Rational { whole: a && b },
        _ => unreachable!("block kinds differ"),
    }
}

/// A pp-definable subgroup, one local subgroup per materialized block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupProfile {
    desc: SzmielewDescription,
    horizon: Horizon,
    blocks: Vec<Block>,
    locals: Vec<LocalSubgroup>,
    /// Whether the subgroup is everything at each unlisted prime; `None`
    /// without `prime_tail`.
    residual: Option<bool>,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("profiles are over different groups")]
pub struct ProfileMismatch;

impl SubgroupProfile {
    pub fn whole(desc: &SzmielewDescription, horizon: &Horizon) -> Self {
        let desc = desc.canonicalize();
        let blocks = materialize(&desc, horizon);
        let locals = blocks.iter().map(|b| whole(b.kind)).collect();
        let residual = desc.prime_tail.as_ref().map(|_| true);
        SubgroupProfile {
            desc,
            horizon: horizon.clone(),
            blocks,
            locals,
            residual,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn locals(&self) -> &[LocalSubgroup] {
        &self.locals
    }

    pub fn residual(&self) -> Option<bool> {
        self.residual
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn desc(&self) -> &SzmielewDescription {
        &self.desc
    }

    /// Same subgroup on a finer horizon.
    pub fn refine(&self, horizon: &Horizon) -> SubgroupProfile {
        let horizon = self.horizon.join(horizon);
        if horizon == self.horizon {
            return self.clone();
        }
        let blocks = materialize(&self.desc, &horizon);
        let old: BTreeMap<BlockKind, LocalSubgroup> = self
            .blocks
            .iter()
            .map(|b| b.kind)
            .zip(self.locals.iter().copied())
            .collect();
        let tails: BTreeMap<u64, LocalSubgroup> = old
            .iter()
            .filter_map(|(k, l)| match k {
                BlockKind::Tail { p, .. } => Some((*p, *l)),
                _ => None,
            })
            .collect();
        let locals = blocks
            .iter()
            .map(|b| {
                if let Some(l) = old.get(&b.kind) {
                    return *l;
                }
                let p = b.kind.prime().expect("rational block is never new");
                match (b.kind, tails.get(&p)) {
                    (BlockKind::Cyclic { n, .. }, Some(&LocalSubgroup::Tail { a, b: bd })) => {
                        let d = match bd {
                            Bound::Inf => a,
                            Bound::Fin(b) => a.max(n.saturating_sub(b)),
                        };
                        LocalSubgroup::Cyclic { depth: d.min(n) }
                    }
                    (BlockKind::Tail { .. }, Some(&l)) => l,
                    (kind, _) => {
                        if self.residual == Some(true) {
                            whole(kind)
                        } else {
                            zero(kind)
                        }
                    }
                }
            })
            .collect();
        SubgroupProfile {
            desc: self.desc.clone(),
            horizon,
            blocks,
            locals,
            residual: self.residual,
        }
    }

    /// Order of the subgroup and its exponent (`None` when unbounded).
    pub fn stats(&self) -> (IndexClass, Option<Factored>) {
        profile_stats(self)
    }
}

pub fn eval_formula(desc: &SzmielewDescription, phi: &PPFormula) -> SubgroupProfile {
    let desc = desc.canonicalize();
    let horizon = Horizon::for_formulas(&desc, [phi]);
    eval_at(&desc, phi, &horizon)
}

/// Evaluates `phi` on a horizon at least as fine as the formula needs.
pub fn eval_at(desc: &SzmielewDescription, phi: &PPFormula, horizon: &Horizon) -> SubgroupProfile {
    let desc = desc.canonicalize();
    let horizon = horizon.join(&Horizon::for_formulas(&desc, [phi]));
    let mut h = SubgroupProfile::whole(&desc, &horizon);
    for (blk, local) in h.blocks.iter().zip(h.locals.iter_mut()) {
        for atom in &phi.atoms {
            *local = meet_local(*local, eval_atom(blk.kind, atom));
        }
    }
    if h.residual.is_some() {
        h.residual = Some(!phi.atoms.iter().any(|a| matches!(a, Atom::Tor(_))));
    }
    h
}

/// Evaluates every formula on one common horizon.
pub fn eval_all(desc: &SzmielewDescription, formulas: &[PPFormula]) -> Vec<SubgroupProfile> {
    let desc = desc.canonicalize();
    let horizon = Horizon::for_formulas(&desc, formulas);
    formulas.iter().map(|f| eval_at(&desc, f, &horizon)).collect()
}

fn common(
    h: &SubgroupProfile,
    k: &SubgroupProfile,
) -> Result<(SubgroupProfile, SubgroupProfile), ProfileMismatch> {
    if h.desc != k.desc {
        return Err(ProfileMismatch);
    }
    let horizon = h.horizon.join(&k.horizon);
    Ok((h.refine(&horizon), k.refine(&horizon)))
}

pub fn meet(h: &SubgroupProfile, k: &SubgroupProfile) -> Result<SubgroupProfile, ProfileMismatch> {
    let (mut h, k) = common(h, k)?;
    for (x, y) in h.locals.iter_mut().zip(&k.locals) {
        *x = meet_local(*x, *y);
    }
    h.residual = match (h.residual, k.residual) {
        (Some(a), Some(b)) => Some(a && b),
        _ => None,
    };
    Ok(h)
}

fn tail_depth(a: u32, b: Bound, n: u32) -> u32 {
    match b {
        Bound::Inf => a,
        Bound::Fin(b) => a.max(n.saturating_sub(b)),
    }
    .min(n)
}

/// Index of a tail family `m ⊆ h` over the blocks `n > above`.
fn tail_index(p: u64, above: u32, mult: Mult, h: (u32, Bound), m: (u32, Bound)) -> IndexClass {
    let ((ah, bh), (am, bm)) = (h, m);
    let end = match (bh, bm) {
        (Bound::Inf, Bound::Inf) if am > ah => return IndexClass::Infinite,
        (Bound::Inf, Bound::Inf) => above + 1,
        (Bound::Inf, Bound::Fin(_)) => return IndexClass::Infinite,
        (Bound::Fin(x), Bound::Fin(y)) if x > y => return IndexClass::Infinite,
        (Bound::Fin(_), Bound::Fin(y)) => above.max(am.max(ah) + y) + 1,
        (Bound::Fin(_), Bound::Inf) => unreachable!("meet lies inside the subgroup"),
    };
    let mut total = IndexClass::one();
    for n in above + 1..=end {
        let e = tail_depth(am, bm, n) - tail_depth(ah, bh, n);
        total = total * IndexClass::prime_power_times(p, u64::from(e), mult);
    }
    total
}

/// `[h : h ∩ k]`.
pub fn index_class(h: &SubgroupProfile, k: &SubgroupProfile) -> Result<IndexClass, ProfileMismatch> {
    let m = meet(h, k)?;
    let h = h.refine(&m.horizon);
    let mut total = IndexClass::one();
    for (blk, (x, y)) in m.blocks.iter().zip(h.locals.iter().zip(&m.locals)) {
        use LocalSubgroup::*;
        let p = blk.kind.prime().unwrap_or(0);
        let f = match (*x, *y) {
            (Cyclic { depth: a }, Cyclic { depth: b }) => {
                IndexClass::prime_power_times(p, u64::from(b - a), blk.mult)
            }
            (Tail { a: ah, b: bh }, Tail { a: am, b: bm }) => {
                let BlockKind::Tail { above, .. } = blk.kind else {
                    unreachable!()
                };
                tail_index(p, above, blk.mult, (ah, bh), (am, bm))
            }
            (TorsionFree { local: a }, TorsionFree { local: b }) => match (a, b) {
                (TfLocal::Depth(a), TfLocal::Depth(b)) => {
                    IndexClass::prime_power_times(p, u64::from(b - a), blk.mult)
                }
                (TfLocal::Depth(_), TfLocal::Zero) => IndexClass::Infinite,
                _ => IndexClass::one(),
            },
            (Prufer { bound: a }, Prufer { bound: b }) => match (a, b) {
                (Bound::Inf, Bound::Fin(_)) => IndexClass::Infinite,
                (Bound::Fin(a), Bound::Fin(b)) => {
                    IndexClass::prime_power_times(p, u64::from(a - b), blk.mult)
                }
                _ => IndexClass::one(),
            },
            (Rational { whole: a }, Rational { whole: b }) if a && !b => IndexClass::Infinite,
            _ => IndexClass::one(),
        };
        total = total * f;
    }
    if h.residual == Some(true) && m.residual == Some(false) {
        total = IndexClass::Infinite;
    }
    Ok(total)
}

/// Order of `h` and its exponent (`None` when unbounded).
pub fn profile_stats(h: &SubgroupProfile) -> (IndexClass, Option<Factored>) {
    let mut size = IndexClass::one();
    let mut exp = Some(Factored::one());
    let mut unbounded = false;
    for (blk, local) in h.blocks.iter().zip(&h.locals) {
        let p = blk.kind.prime().unwrap_or(0);
        let (s, e): (IndexClass, Option<u32>) = match (blk.kind, *local) {
            (BlockKind::Cyclic { n, .. }, LocalSubgroup::Cyclic { depth }) => (
                IndexClass::prime_power_times(p, u64::from(n - depth), blk.mult),
                Some(n - depth),
            ),
            (BlockKind::Tail { .. }, LocalSubgroup::Tail { b, .. }) => match b {
                Bound::Fin(0) => (IndexClass::one(), Some(0)),
                Bound::Fin(b) => (IndexClass::Infinite, Some(b)),
                Bound::Inf => (IndexClass::Infinite, None),
            },
            (_, LocalSubgroup::TorsionFree { local: TfLocal::Zero }) => (IndexClass::one(), Some(0)),
            (_, LocalSubgroup::TorsionFree { .. }) => (IndexClass::Infinite, None),
            (_, LocalSubgroup::Prufer { bound: Bound::Fin(b) }) => {
                (IndexClass::prime_power_times(p, u64::from(b), blk.mult), Some(b))
            }
            (_, LocalSubgroup::Prufer { bound: Bound::Inf }) => (IndexClass::Infinite, None),
            (_, LocalSubgroup::Rational { whole: false }) => (IndexClass::one(), Some(0)),
            (_, LocalSubgroup::Rational { whole: true }) => (IndexClass::Infinite, None),
            _ => unreachable!("local subgroup does not match its block"),
        };
        size = size * s;
        match e {
            None => unbounded = true,
            Some(e) => {
                if let Some(x) = &mut exp {
                    *x = x.lcm(&Factored::prime_power(p, u64::from(e)));
                }
            }
        }
    }
    let shape_nonzero = h.desc.prime_tail.as_ref().is_some_and(|s| !s.is_empty());
    if h.residual == Some(true) && shape_nonzero {
        size = IndexClass::Infinite;
        unbounded = true;
    }
    (size, if unbounded { None } else { exp })
}

#[derive(Serialize)]
struct BlockDump {
    block: String,
    mult: Mult,
    local: LocalSubgroup,
}

#[derive(Serialize)]
struct ProfileDump {
    group: String,
    blocks: Vec<BlockDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unlisted_primes_whole: Option<bool>,
    order: IndexClass,
    exponent: Option<Factored>,
}

fn block_name(kind: BlockKind) -> String {
    match kind {
        BlockKind::Cyclic { p, n } => format!("Z({p}^{n})"),
        BlockKind::Tail { p, above } => format!("Z({p}^n), n > {above}"),
        BlockKind::TorsionFree { p } => format!("Z_({p})"),
        BlockKind::Prufer { p } => format!("Z({p}^inf)"),
        BlockKind::Rational => "Q".to_string(),
    }
}

impl Serialize for SubgroupProfile {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let (order, exponent) = profile_stats(self);
        ProfileDump {
            group: render_group(&self.desc),
            blocks: self
                .blocks
                .iter()
                .zip(&self.locals)
                .map(|(b, l)| BlockDump {
                    block: block_name(b.kind),
                    mult: b.mult,
                    local: *l,
                })
                .collect(),
            unlisted_primes_whole: self.residual,
            order,
            exponent,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_formula, parse_group};

    fn g(s: &str) -> SzmielewDescription {
        parse_group(s).unwrap()
    }

    fn f(s: &str) -> PPFormula {
        parse_formula(s).unwrap()
    }

    fn ev(d: &str, phi: &str) -> SubgroupProfile {
        eval_formula(&g(d), &f(phi))
    }

    fn idx(d: &str, a: &str, b: &str) -> IndexClass {
        index_class(&ev(d, a), &ev(d, b)).unwrap()
    }

    #[test]
    fn atom_table_examples() {
        let h = ev("Z(2^5)", "div(2,3,1)");
        assert_eq!(h.locals(), [LocalSubgroup::Cyclic { depth: 2 }]);
        assert_eq!(h.stats().0, IndexClass::prime_power(2, 3));
        let h = ev("Z_(5)", "tor(6)");
        assert_eq!(h.locals(), [LocalSubgroup::TorsionFree { local: TfLocal::Zero }]);
        let h = ev("Z(2^inf)", "div(3,2,0)");
        assert_eq!(h.locals(), [LocalSubgroup::Prufer { bound: Bound::Inf }]);
    }

    #[test]
    fn meet_examples() {
        let d = g("Z(2^1)^w + Z(2^3)^w");
        let h = eval_formula(&d, &f("tor(2)"));
        let k = eval_formula(&d, &f("div(2,1,0)"));
        assert_eq!(meet(&h, &h).unwrap(), h);
        let w = eval_formula(&d, &PPFormula::top());
        assert_eq!(meet(&w, &k).unwrap(), k);
        assert_eq!(
            meet(&h, &k).unwrap().locals(),
            [LocalSubgroup::Cyclic { depth: 1 }, LocalSubgroup::Cyclic { depth: 2 }]
        );
        let other = eval_formula(&g("Z(2^1)"), &f("tor(2)"));
        assert_eq!(meet(&h, &other), Err(ProfileMismatch));
    }

    #[test]
    fn index_examples() {
        assert!(idx("Z(2^3)^w", "tor(4)", "tor(4)").is_one());
        assert_eq!(idx("Z_(2)^3", "top", "div(2,1,0)"), IndexClass::prime_power(2, 3));
        assert_eq!(idx("Z_(2)^w", "top", "div(2,1,0)"), IndexClass::Infinite);
        assert_eq!(idx("Q", "top", "tor(1)"), IndexClass::Infinite);
        assert_eq!(idx("Z(3^inf)^2", "top", "tor(9)"), IndexClass::Infinite);
        assert_eq!(idx("Z(3^inf)^2", "tor(27)", "tor(9)"), IndexClass::prime_power(3, 2));
    }

    #[test]
    fn stats_examples() {
        assert_eq!(ev("Q", "top").stats(), (IndexClass::Infinite, None));
        assert_eq!(
            ev("Z(2^inf)", "tor(4)").stats(),
            (IndexClass::prime_power(2, 2), Some(Factored::prime_power(2, 2)))
        );
        assert_eq!(ev("tail(2)", "div(2,1,0)").stats(), (IndexClass::Infinite, None));
        let (size, exp) = ev("tail(2)", "tor(4)").stats();
        assert_eq!(size, IndexClass::Infinite);
        assert_eq!(exp, Some(Factored::prime_power(2, 2)));
        assert_eq!(ev("tail(2)", "tor(3)").stats().0, IndexClass::one());
    }

    #[test]
    fn tail_indices() {
        // [tor(4) : tor(2)] on a tail: every block contributes a factor 2.
        assert_eq!(idx("tail(2)", "tor(4)", "tor(2)"), IndexClass::Infinite);
        assert_eq!(idx("tail(2)", "div(2,1,0)", "tor(2)"), IndexClass::Infinite);
        // tor(8) ∩ div(2,2,0): finitely many blocks differ
        assert_eq!(idx("tail(2)", "div(2,2,0)", "tor(8)"), IndexClass::Infinite);
        // blocks n = 1, 2 each differ by one step, three copies each
        assert_eq!(
            idx("tail(2, 3)", "div(2,3,1)", "div(2,2,0)"),
            IndexClass::prime_power(2, 6)
        );
        assert_eq!(
            idx("tail(2, 3)", "div(2,2,1)", "div(2,3,1)"),
            IndexClass::Infinite
        );
        assert_eq!(idx("tail(2, 3)", "div(2,4,3)", "div(2,4,2)"), IndexClass::Infinite);
    }

    #[test]
    fn tail_refinement_matches_direct_evaluation() {
        let d = g("tail(2, 2, cutoff=1)");
        let phi = f("tor(4) & div(2,1,0)");
        let h = eval_formula(&d, &phi);
        let mut horizon = h.horizon().clone();
        horizon.tail_cut.insert(2, 9);
        assert_eq!(h.refine(&horizon), eval_at(&d, &phi, &horizon));
    }

    #[test]
    fn prime_tail_materialization() {
        let d = g("forall_p{Z(P^1)}");
        let h = eval_formula(&d, &f("tor(5)"));
        assert_eq!(h.residual(), Some(false));
        assert_eq!(h.blocks().len(), 1);
        assert_eq!(h.stats().0, IndexClass::prime_power(5, 1));
        assert_eq!(idx("forall_p{Z(P^1)}", "top", "tor(5)"), IndexClass::Infinite);
        assert_eq!(
            idx("forall_p{Z(P^1)}", "top", "div(5,1,0)"),
            IndexClass::prime_power(5, 1)
        );
    }

    #[test]
    fn json_dump_has_blocks() {
        let v = serde_json::to_value(ev("Z(2^5) + Q", "div(2,3,1)")).unwrap();
        assert_eq!(v["blocks"][0]["local"]["depth"], 2);
        assert_eq!(v["order"], "inf");
    }
}
