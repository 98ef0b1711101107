//! Shatter functions and VC dimension of coset families in concrete finite
//! abelian groups `Z(m_1) ⊕ … ⊕ Z(m_k)`, by exhaustive enumeration.

use std::collections::BTreeSet;

use bitvec::prelude::*;
use itertools::Itertools;
use thiserror::Error;

use crate::core::{Atom, PPFormula, SzmielewDescription};
use crate::normalize::structure;

pub const DEFAULT_MAX_ORDER: u64 = 1_000_000;
pub const DEFAULT_MAX_N: usize = 6;
pub const DEFAULT_MAX_SUBSETS: u128 = 50_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShatterError {
    #[error("cyclic orders must be at least 2, got {0}")]
    BadOrder(u64),
    #[error("group order exceeds the cap {cap}")]
    TooLarge { cap: u64 },
    #[error("n = {n} exceeds the cap {cap}")]
    NTooLarge { n: usize, cap: usize },
    #[error("{count} subsets to enumerate exceeds the cap {cap}")]
    TooManySubsets { count: u128, cap: u128 },
    #[error("group is infinite")]
    Infinite,
}

/// `Z(m_1) ⊕ … ⊕ Z(m_k)`; elements are numbered in mixed radix, first
/// coordinate least significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinAbGroup {
    orders: Vec<u64>,
    size: usize,
}

impl FinAbGroup {
    pub fn new(orders: Vec<u64>) -> Result<Self, ShatterError> {
        Self::with_cap(orders, DEFAULT_MAX_ORDER)
    }

    pub fn with_cap(orders: Vec<u64>, cap: u64) -> Result<Self, ShatterError> {
        let mut size: u64 = 1;
        for &m in &orders {
            if m < 2 {
                return Err(ShatterError::BadOrder(m));
            }
            size = size
                .checked_mul(m)
                .filter(|&s| s <= cap)
                .ok_or(ShatterError::TooLarge { cap })?;
        }
        Ok(FinAbGroup {
            orders,
            size: size as usize,
        })
    }

    /// The concrete group of a description with finitely many elements.
    pub fn from_desc(desc: &SzmielewDescription) -> Result<Self, ShatterError> {
        if !structure(desc).finite_group {
            return Err(ShatterError::Infinite);
        }
        let mut orders = Vec::new();
        for (&(p, n), m) in &desc.canonicalize().cyclic {
            let k = m.finite().ok_or(ShatterError::Infinite)?;
            let q = p.checked_pow(n).ok_or(ShatterError::TooLarge {
                cap: DEFAULT_MAX_ORDER,
            })?;
            orders.extend(std::iter::repeat(q).take(k as usize));
        }
        FinAbGroup::new(orders)
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn order(&self) -> usize {
        self.size
    }

    pub fn element(&self, mut i: usize) -> Vec<u64> {
        self.orders
            .iter()
            .map(|&m| {
                let x = i as u64 % m;
                i /= m as usize;
                x
            })
            .collect()
    }

    pub fn index(&self, x: &[u64]) -> usize {
        let mut i = 0usize;
        for (&xi, &m) in x.iter().zip(&self.orders).rev() {
            i = i * m as usize + (xi % m) as usize;
        }
        i
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.orders)
            .map(|((&x, &y), &m)| (x + y) % m)
            .collect()
    }

    pub fn scale(&self, k: u64, a: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(&self.orders)
            .map(|(&x, &m)| ((u128::from(k % m) * u128::from(x)) % u128::from(m)) as u64)
            .collect()
    }

    fn multiples(&self, k: u64) -> BitVec {
        let mut out = bitvec![0; self.size];
        for i in 0..self.size {
            let y = self.scale(k, &self.element(i));
            out.set(self.index(&y), true);
        }
        out
    }

    /// `φ(G)` by testing each element against each atom.
    pub fn subgroup(&self, phi: &PPFormula) -> BitVec {
        let mut out = bitvec![1; self.size];
        for atom in &phi.atoms {
            match *atom {
                Atom::Tor(m) => {
                    for i in 0..self.size {
                        if self.scale(m, &self.element(i)).iter().any(|&x| x != 0) {
                            out.set(i, false);
                        }
                    }
                }
                Atom::Div { p, r, s } => {
                    let pr = p.saturating_pow(r);
                    let ps = p.saturating_pow(s);
                    let image = self.multiples(pr);
                    for i in 0..self.size {
                        let y = self.scale(ps, &self.element(i));
                        if !image[self.index(&y)] {
                            out.set(i, false);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Subsets of a finite carrier `{0, …, size-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetFamily {
    pub size: usize,
    pub sets: Vec<BitVec>,
}

impl SetFamily {
    pub fn new(size: usize, sets: Vec<BitVec>) -> Self {
        assert!(sets.iter().all(|s| s.len() == size));
        SetFamily { size, sets }
    }
}

/// Every coset `a + φ(G)` of every formula, without repetition.
pub fn coset_family(g: &FinAbGroup, formulas: &[PPFormula]) -> SetFamily {
    let mut seen = BTreeSet::new();
    let mut sets = Vec::new();
    for phi in formulas {
        let h = g.subgroup(phi);
        let members: Vec<Vec<u64>> = h.iter_ones().map(|i| g.element(i)).collect();
        let mut covered = bitvec![0; g.order()];
        for a in 0..g.order() {
            if covered[a] {
                continue;
            }
            let x = g.element(a);
            let mut coset = bitvec![0; g.order()];
            for y in &members {
                coset.set(g.index(&g.add(&x, y)), true);
            }
            covered |= &coset;
            if seen.insert(coset.clone()) {
                sets.push(coset);
            }
        }
    }
    SetFamily::new(g.order(), sets)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// `π_S(n)`: the most distinct traces `C ∩ A` over `n`-subsets `A`.
pub fn shatter_function(s: &SetFamily, n: usize) -> Result<usize, ShatterError> {
    shatter_function_capped(s, n, DEFAULT_MAX_N, DEFAULT_MAX_SUBSETS)
}

pub fn shatter_function_capped(
    s: &SetFamily,
    n: usize,
    max_n: usize,
    max_subsets: u128,
) -> Result<usize, ShatterError> {
    if n > max_n {
        return Err(ShatterError::NTooLarge { n, cap: max_n });
    }
    if n > s.size {
        return Ok(0);
    }
    let count = binomial(s.size, n);
    if count > max_subsets {
        return Err(ShatterError::TooManySubsets {
            count,
            cap: max_subsets,
        });
    }
    let full = 1usize << n;
    let mut best = 0;
    for a in (0..s.size).combinations(n) {
        let traces: BTreeSet<u64> = s
            .sets
            .iter()
            .map(|c| {
                a.iter()
                    .enumerate()
                    .filter(|(_, &x)| c[x])
                    .fold(0u64, |m, (j, _)| m | 1 << j)
            })
            .collect();
        best = best.max(traces.len());
        if best == full {
            break;
        }
    }
    Ok(best)
}

/// Largest `n` with `π_S(n) = 2^n`.
pub fn vc_dim(s: &SetFamily) -> Result<usize, ShatterError> {
    if s.sets.is_empty() {
        return Ok(0);
    }
    let mut d = 0;
    for n in 1..=s.size {
        if shatter_function(s, n)? == 1 << n {
            d = n;
        } else {
            break;
        }
    }
    Ok(d)
}

/// CSV rows `n,pi,two_pow_n` for `n = 0..=max_n`.
pub fn shatter_csv(s: &SetFamily, max_n: usize) -> Result<String, ShatterError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "pi", "two_pow_n"]).expect("in-memory write");
    for n in 0..=max_n {
        let pi = shatter_function(s, n)?;
        w.write_record([n.to_string(), pi.to_string(), (1u64 << n).to_string()])
            .expect("in-memory write");
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_formula;

    fn f(s: &str) -> PPFormula {
        parse_formula(s).unwrap()
    }

    fn z(orders: &[u64]) -> FinAbGroup {
        FinAbGroup::new(orders.to_vec()).unwrap()
    }

    #[test]
    fn coset_examples() {
        let g = z(&[4, 4]);
        let fam = coset_family(&g, &[f("tor(1)")]);
        assert_eq!(fam.sets.len(), 16);
        assert!(fam.sets.iter().all(|s| s.count_ones() == 1));
        let fam = coset_family(&g, &[f("top")]);
        assert_eq!(fam.sets.len(), 1);
        assert_eq!(fam.sets[0].count_ones(), 16);
        let fam = coset_family(&z(&[8]), &[f("div(2,1,0)")]);
        assert_eq!(fam.sets.len(), 2);
        assert!(fam.sets.iter().all(|s| s.count_ones() == 4));
    }

    #[test]
    fn shatter_examples() {
        let g = z(&[4, 4]);
        // 2G ∩ G[2]... the subgroup 2G has index 4
        let fam = coset_family(&g, &[f("div(2,1,0)")]);
        assert_eq!(fam.sets.len(), 4);
        assert_eq!(shatter_function(&fam, 1).unwrap(), 2);
        assert_eq!(shatter_function(&fam, 2).unwrap(), 3);
        let whole = coset_family(&g, &[f("top")]);
        for n in 0..4 {
            assert_eq!(shatter_function(&whole, n).unwrap(), 1);
        }
        assert_eq!(vc_dim(&fam).unwrap(), 1);
        assert_eq!(vc_dim(&SetFamily::new(16, vec![])).unwrap(), 0);
    }

    #[test]
    fn power_set_is_shattered() {
        let sets = (0u32..16)
            .map(|m| (0..4).map(|i| m >> i & 1 == 1).collect::<BitVec>())
            .collect();
        assert_eq!(vc_dim(&SetFamily::new(4, sets)).unwrap(), 4);
    }

    #[test]
    fn subgroups_by_membership() {
        let g = z(&[2, 8]);
        assert_eq!(g.subgroup(&f("tor(2)")).count_ones(), 4);
        assert_eq!(g.subgroup(&f("div(2,1,0)")).count_ones(), 4);
        assert_eq!(g.subgroup(&f("div(2,3,1)")).count_ones(), 4);
        assert_eq!(g.subgroup(&f("div(3,1,0)")).count_ones(), 16);
        assert_eq!(g.subgroup(&f("tor(3)")).count_ones(), 1);
    }

    #[test]
    fn caps() {
        assert_eq!(FinAbGroup::new(vec![1]), Err(ShatterError::BadOrder(1)));
        assert!(matches!(
            FinAbGroup::new(vec![1000, 1000, 2]),
            Err(ShatterError::TooLarge { .. })
        ));
        let fam = coset_family(&z(&[4]), &[f("top")]);
        assert!(matches!(
            shatter_function(&fam, 7),
            Err(ShatterError::NTooLarge { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let fam = coset_family(&z(&[2]), &[f("tor(1)")]);
        let out = shatter_csv(&fam, 2).unwrap();
        assert_eq!(out, "n,pi,two_pow_n\n0,1,1\n1,2,2\n2,2,4\n");
    }
}
