//! Brute-force dp-rank: a finite pool of canonical formulas, the subgroup
//! index test for inp-patterns, and an exhaustive search for the deepest
//! family in the pool.
//!
//! This module never consults the closed form in `rank`.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::arith::first_prime_not_in;
use crate::core::{Atom, IndexClass, PPFormula, SzmielewDescription};
use crate::normalize::normalize;
use crate::ppeval::{
    eval_all, index_class, meet, Block, BlockKind, Bound, Horizon, LocalSubgroup, SubgroupProfile,
    TfLocal,
};

pub const DEFAULT_MAX_POOL: usize = 200_000;
const NODE_BUDGET: u64 = 200_000;
const BIG: u64 = 1 << 40;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("pool bound must be at least 1")]
    ZeroBound,
    #[error("maximum depth must be at least 1")]
    ZeroDepth,
    #[error("candidate pool has more than {cap} formulas (set SZK_MAX_POOL to raise the cap)")]
    PoolTooLarge { cap: usize },
    #[error("a torsion product in the pool does not fit in 64 bits")]
    Overflow,
    #[error("family must be non-empty")]
    EmptyFamily,
}

/// Pool cap from `SZK_MAX_POOL`, else [`DEFAULT_MAX_POOL`].
pub fn pool_cap() -> usize {
    std::env::var("SZK_MAX_POOL")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_POOL)
}

/// Suggested pool bound: largest explicit exponent of the strict form plus 2.
pub fn default_bound(desc: &SzmielewDescription) -> u32 {
    normalize(desc).max_exponent() + 2
}

fn pool_primes(strict: &SzmielewDescription) -> BTreeSet<u64> {
    let mut primes = strict.listed_primes();
    if strict.prime_tail.is_some() {
        primes.insert(first_prime_not_in(&primes));
    }
    primes
}

/// Exponent beyond which `tor(p^e)` no longer changes on `strict`.
fn saturation(strict: &SzmielewDescription, p: u64, b: u32) -> u32 {
    let c = strict.component(p);
    if c.tail.is_some() || !c.div.is_zero() {
        b
    } else {
        c.cyclic.keys().next_back().copied().unwrap_or(0).min(b)
    }
}

fn order_key(f: &PPFormula) -> (u32, u8, u64, u32) {
    match f.atoms.as_slice() {
        [Atom::Div { p, r, s }] => (*r, 0, *p, *s),
        [Atom::Tor(1)] => (u32::MAX, 2, 0, 0),
        [Atom::Tor(m)] => {
            let top = crate::arith::factorize(*m)
                .into_values()
                .max()
                .unwrap_or(0) as u32;
            (top, 1, *m, 0)
        }
        _ => (u32::MAX, 3, 0, 0),
    }
}

/// Every pool formula before deduplication, in search order.
pub fn raw_pool(desc: &SzmielewDescription, b: u32) -> Result<Vec<PPFormula>, OracleError> {
    if b == 0 {
        return Err(OracleError::ZeroBound);
    }
    let strict = normalize(desc);
    let primes: Vec<u64> = pool_primes(&strict).into_iter().collect();
    let cap = pool_cap();
    let mut out = Vec::new();
    let push = |f: PPFormula, out: &mut Vec<PPFormula>| {
        if out.len() >= cap {
            return Err(OracleError::PoolTooLarge { cap });
        }
        out.push(f);
        Ok(())
    };
    for &p in &primes {
        for r in 1..=b {
            for s in 0..r {
                push(PPFormula::div(p, r, s), &mut out)?;
            }
        }
    }
    // Torsion atoms: every product of prime powers, exponents capped where
    // larger ones act identically.
    let caps: Vec<u32> = primes
        .iter()
        .map(|&p| saturation(&strict, p, b))
        .collect();
    let mut seen = BTreeSet::new();
    for &p in &primes {
        for e in 1..=b {
            let m = p.checked_pow(e).ok_or(OracleError::Overflow)?;
            seen.insert(m);
            push(PPFormula::tor(m), &mut out)?;
        }
    }
    let mut exps = vec![0u32; primes.len()];
    loop {
        let nonzero = exps.iter().filter(|&&e| e > 0).count();
        if nonzero >= 2 {
            let mut m: u64 = 1;
            for (&p, &e) in primes.iter().zip(&exps) {
                let f = p.checked_pow(e).ok_or(OracleError::Overflow)?;
                m = m.checked_mul(f).ok_or(OracleError::Overflow)?;
            }
            if seen.insert(m) {
                push(PPFormula::tor(m), &mut out)?;
            }
        }
        let mut i = 0;
        while i < exps.len() {
            if exps[i] < caps[i] {
                exps[i] += 1;
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == exps.len() {
            break;
        }
    }
    push(PPFormula::tor(1), &mut out)?;
    out.sort_by_key(order_key);
    Ok(out)
}

type ProfileKey = (Vec<LocalSubgroup>, Option<bool>);

fn key(h: &SubgroupProfile) -> ProfileKey {
    (h.locals().to_vec(), h.residual())
}

/// The pool with one formula per distinct subgroup, first in search order.
pub fn candidate_pool(desc: &SzmielewDescription, b: u32) -> Result<Vec<PPFormula>, OracleError> {
    Ok(dedup(desc, raw_pool(desc, b)?).0)
}

fn dedup(
    desc: &SzmielewDescription,
    pool: Vec<PPFormula>,
) -> (Vec<PPFormula>, Vec<SubgroupProfile>) {
    let profiles = eval_all(desc, &pool);
    let mut seen = HashMap::new();
    let mut formulas = Vec::new();
    let mut kept = Vec::new();
    for (f, h) in pool.into_iter().zip(profiles) {
        if seen.insert(key(&h), ()).is_none() {
            formulas.push(f);
            kept.push(h);
        }
    }
    (formulas, kept)
}

/// Leave-one-out indices of a family.
#[derive(Clone, Debug, Serialize)]
pub struct InpVerdict {
    pub family: Vec<PPFormula>,
    pub valid: bool,
    /// Entry `i`: `[⋂_{j≠i} H_j : ⋂_j H_j]`.
    pub transcript: Vec<IndexClass>,
    pub profiles: Vec<SubgroupProfile>,
}

pub fn verify_inp(
    desc: &SzmielewDescription,
    family: &[PPFormula],
) -> Result<InpVerdict, OracleError> {
    if family.is_empty() {
        return Err(OracleError::EmptyFamily);
    }
    let desc = desc.canonicalize();
    let profiles = eval_all(&desc, family);
    let horizon = profiles[0].horizon().clone();
    let mut transcript = Vec::with_capacity(family.len());
    for i in 0..profiles.len() {
        let mut others = SubgroupProfile::whole(&desc, &horizon);
        for (j, h) in profiles.iter().enumerate() {
            if j != i {
                others = meet(&others, h).expect("same group");
            }
        }
        transcript.push(index_class(&others, &profiles[i]).expect("same group"));
    }
    Ok(InpVerdict {
        family: family.to_vec(),
        valid: transcript.iter().all(IndexClass::is_infinite),
        transcript,
        profiles,
    })
}

/// Maps each subgroup to coordinates in which intersection is the
/// coordinatewise maximum and the whole group is 0. A leave-one-out index is
/// infinite exactly when the left-out member is the strict maximum of some
/// coordinate.
fn coordinates(blocks: &[Block], profiles: &[SubgroupProfile]) -> Vec<Vec<u64>> {
    let mut cols: Vec<Vec<u64>> = Vec::new();
    for (bi, blk) in blocks.iter().enumerate() {
        let omega = blk.mult.is_omega();
        let local = |h: &SubgroupProfile| h.locals()[bi];
        match blk.kind {
            BlockKind::Cyclic { .. } => {
                if omega {
                    cols.push(
                        profiles
                            .iter()
                            .map(|h| match local(h) {
                                LocalSubgroup::Cyclic { depth } => u64::from(depth),
                                _ => unreachable!(),
                            })
                            .collect(),
                    );
                }
            }
            BlockKind::Tail { above, .. } => {
                let pairs: Vec<(u32, Bound)> = profiles
                    .iter()
                    .map(|h| match local(h) {
                        LocalSubgroup::Tail { a, b } => (a, b),
                        _ => unreachable!(),
                    })
                    .collect();
                let span = pairs
                    .iter()
                    .map(|&(a, b)| match b {
                        Bound::Fin(b) => a.max(b),
                        Bound::Inf => a,
                    })
                    .max()
                    .unwrap_or(0);
                if omega {
                    for n in above + 1..=above + 2 * span + 2 {
                        cols.push(
                            pairs
                                .iter()
                                .map(|&(a, b)| {
                                    let d = match b {
                                        Bound::Fin(b) => a.max(n.saturating_sub(b)),
                                        Bound::Inf => a,
                                    };
                                    u64::from(d.min(n))
                                })
                                .collect(),
                        );
                    }
                }
                cols.push(
                    pairs
                        .iter()
                        .map(|&(a, b)| match b {
                            Bound::Fin(b) => BIG - u64::from(b),
                            Bound::Inf => u64::from(a),
                        })
                        .collect(),
                );
            }
            BlockKind::TorsionFree { .. } => cols.push(
                profiles
                    .iter()
                    .map(|h| match (local(h), omega) {
                        (LocalSubgroup::TorsionFree { local: TfLocal::Zero }, true) => BIG,
                        (LocalSubgroup::TorsionFree { local: TfLocal::Zero }, false) => 1,
                        (LocalSubgroup::TorsionFree { local: TfLocal::Depth(a) }, true) => {
                            u64::from(a)
                        }
                        _ => 0,
                    })
                    .collect(),
            ),
            BlockKind::Prufer { .. } => cols.push(
                profiles
                    .iter()
                    .map(|h| match (local(h), omega) {
                        (LocalSubgroup::Prufer { bound: Bound::Fin(b) }, true) => {
                            BIG - u64::from(b)
                        }
                        (LocalSubgroup::Prufer { bound: Bound::Fin(_) }, false) => 1,
                        _ => 0,
                    })
                    .collect(),
            ),
            BlockKind::Rational => cols.push(
                profiles
                    .iter()
                    .map(|h| match local(h) {
                        LocalSubgroup::Rational { whole } => u64::from(!whole),
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
        }
    }
    let shape_nonempty = profiles
        .first()
        .and_then(|h| h.desc().prime_tail.as_ref())
        .is_some_and(|s| !s.is_empty());
    if shape_nonempty {
        cols.push(
            profiles
                .iter()
                .map(|h| u64::from(h.residual() == Some(false)))
                .collect(),
        );
    }
    // Transpose to one row per subgroup.
    (0..profiles.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

fn private_max(vs: &[&Vec<u64>], i: usize) -> bool {
    (0..vs[i].len()).any(|c| {
        let x = vs[i][c];
        x > 0 && vs.iter().enumerate().all(|(j, v)| j == i || v[c] < x)
    })
}

fn valid_rows(vs: &[&Vec<u64>]) -> bool {
    (0..vs.len()).all(|i| private_max(vs, i))
}

/// Maximum family size by assigning each member a private coordinate.
struct Search<'a> {
    rows: &'a [Vec<u64>],
    cols: Vec<usize>,
    /// Pareto-optimal candidates per entry of `cols`.
    cands: Vec<Vec<usize>>,
    limit: usize,
    best: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn compatible(&self, assigned: &[(usize, usize)], c: usize, x: usize) -> bool {
        let rx = &self.rows[x];
        assigned.iter().all(|&(c2, y)| {
            y != x && rx[c2] < self.rows[y][c2] && self.rows[y][c] < rx[c]
        })
    }

    fn run(&mut self, t: usize, assigned: &mut Vec<(usize, usize)>) {
        if assigned.len() > self.best.len() {
            self.best = assigned.clone();
        }
        if self.best.len() >= self.limit || t == self.cols.len() {
            return;
        }
        let open = (t..self.cols.len())
            .filter(|&u| {
                self.cands[u]
                    .iter()
                    .any(|&x| self.compatible(assigned, self.cols[u], x))
            })
            .count();
        if assigned.len() + open <= self.best.len() {
            return;
        }
        let c = self.cols[t];
        for k in 0..self.cands[t].len() {
            let x = self.cands[t][k];
            if self.compatible(assigned, c, x) {
                assigned.push((c, x));
                self.run(t + 1, assigned);
                assigned.pop();
                if self.best.len() >= self.limit {
                    return;
                }
            }
        }
        self.run(t + 1, assigned);
    }
}

fn max_family(rows: &[Vec<u64>], limit: usize) -> Vec<usize> {
    let width = rows.first().map_or(0, Vec::len);
    let mut seen_cols = BTreeSet::new();
    let mut cols = Vec::new();
    for c in 0..width {
        let col: Vec<u64> = rows.iter().map(|r| r[c]).collect();
        if col.iter().any(|&x| x > 0) && seen_cols.insert(col) {
            cols.push(c);
        }
    }
    let cands = cols
        .iter()
        .map(|&c| {
            let live: Vec<usize> = (0..rows.len()).filter(|&x| rows[x][c] > 0).collect();
            live.iter()
                .copied()
                .filter(|&x| {
                    !live.iter().any(|&y| {
                        y != x
                            && rows[y] != rows[x]
                            && rows[y][c] >= rows[x][c]
                            && cols.iter().all(|&c2| c2 == c || rows[y][c2] <= rows[x][c2])
                    })
                })
                .collect()
        })
        .collect();
    let mut s = Search {
        rows,
        cols,
        cands,
        limit,
        best: Vec::new(),
    };
    s.run(0, &mut Vec::new());
    let mut members: Vec<usize> = s.best.iter().map(|&(_, x)| x).collect();
    members.sort_unstable();
    members
}

/// First family of size `k` in pool order, or `None` when the node budget runs out.
fn first_family(rows: &[Vec<u64>], k: usize) -> Option<Vec<usize>> {
    fn go(
        rows: &[Vec<u64>],
        k: usize,
        prefix: &mut Vec<usize>,
        start: usize,
        nodes: &mut u64,
    ) -> Option<bool> {
        if prefix.len() == k {
            return Some(true);
        }
        *nodes += 1;
        if *nodes > NODE_BUDGET {
            return None;
        }
        let width = rows.first().map_or(0, Vec::len);
        let fmax: Vec<u64> = (0..width)
            .map(|c| prefix.iter().map(|&i| rows[i][c]).max().unwrap_or(0))
            .collect();
        let ok: Vec<usize> = (start..rows.len())
            .filter(|&y| {
                let mut vs: Vec<&Vec<u64>> = prefix.iter().map(|&i| &rows[i]).collect();
                vs.push(&rows[y]);
                valid_rows(&vs)
            })
            .collect();
        let open = (0..width)
            .filter(|&c| ok.iter().any(|&y| rows[y][c] > fmax[c]))
            .count();
        if prefix.len() + ok.len().min(open) < k {
            return Some(false);
        }
        for &y in &ok {
            prefix.push(y);
            match go(rows, k, prefix, y + 1, nodes) {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
            prefix.pop();
        }
        Some(false)
    }
    let mut prefix = Vec::new();
    let mut nodes = 0;
    match go(rows, k, &mut prefix, 0, &mut nodes) {
        Some(true) => Some(prefix),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BreadthResult {
    pub depth: usize,
    pub witness: Vec<PPFormula>,
    pub pool_bound: u32,
    pub max_depth: usize,
    /// The search ran to completion below `max_depth`, so no deeper family
    /// exists in the pool.
    pub exhausted: bool,
    pub pool_size: usize,
}

pub fn breadth_search(
    desc: &SzmielewDescription,
    b: u32,
    max_k: usize,
) -> Result<BreadthResult, OracleError> {
    let pool = raw_pool(desc, b)?;
    breadth_over(desc, pool, b, max_k)
}

/// Breadth search over an explicit formula pool.
pub fn breadth_over(
    desc: &SzmielewDescription,
    pool: Vec<PPFormula>,
    b: u32,
    max_k: usize,
) -> Result<BreadthResult, OracleError> {
    if max_k == 0 {
        return Err(OracleError::ZeroDepth);
    }
    let desc = desc.canonicalize();
    let (formulas, profiles) = dedup(&desc, pool);
    let pool_size = formulas.len();
    let blocks = profiles.first().map(|h| h.blocks().to_vec()).unwrap_or_default();
    let rows = coordinates(&blocks, &profiles);
    // Finite-index subgroups belong to no family.
    let live: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].iter().any(|&x| x > 0)).collect();
    let live_rows: Vec<Vec<u64>> = live.iter().map(|&i| rows[i].clone()).collect();
    let best = max_family(&live_rows, max_k);
    let depth = best.len();
    let chosen = if depth == 0 {
        Vec::new()
    } else {
        first_family(&live_rows, depth).unwrap_or(best)
    };
    let witness = chosen.iter().map(|&i| formulas[live[i]].clone()).collect();
    Ok(BreadthResult {
        depth,
        witness,
        pool_bound: b,
        max_depth: max_k,
        exhausted: depth < max_k,
        pool_size,
    })
}

/// Coordinate rows of `family`, exposed for cross-checking against [`verify_inp`].
pub fn coordinate_valid(desc: &SzmielewDescription, family: &[PPFormula]) -> bool {
    let desc = desc.canonicalize();
    let horizon = Horizon::for_formulas(&desc, family);
    let profiles: Vec<SubgroupProfile> = family
        .iter()
        .map(|f| crate::ppeval::eval_at(&desc, f, &horizon))
        .collect();
    let blocks = profiles.first().map(|h| h.blocks().to_vec()).unwrap_or_default();
    let rows = coordinates(&blocks, &profiles);
    let refs: Vec<&Vec<u64>> = rows.iter().collect();
    valid_rows(&refs)
}
