//! Seeded random descriptions and formulas, and the closed-form versus
//! oracle differential run built on them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::core::{Mult, PPFormula, PrimeTailShape, SzmielewDescription};
use crate::dsl::{render_formula, render_group};
use crate::oracle::{breadth_search, default_bound, OracleError};
use crate::rank::{dp_rank, Dp, InternalError};

const PRIMES: [u64; 4] = [2, 3, 5, 7];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mult(rng: &mut impl Rng, omega: bool) -> Mult {
    let choices: &[Mult] = if omega {
        &[Mult::Fin(1), Mult::Fin(2), Mult::Omega]
    } else {
        &[Mult::Fin(1), Mult::Fin(2)]
    };
    *choices.choose(rng).expect("non-empty")
}

/// A description of finite dp-rank: primes at most 7, exponents at most 5,
/// multiplicities in {1, 2, ω}; tails and `prime_tail` get finite
/// multiplicities only.
pub fn random_finite_dp(rng: &mut impl Rng) -> SzmielewDescription {
    loop {
        let mut d = SzmielewDescription::new();
        let k = rng.gen_range(1..=3);
        let primes: Vec<u64> = PRIMES.choose_multiple(rng, k).copied().collect();
        for p in primes {
            let mut top = 0;
            let count = rng.gen_range(0..=3);
            let exps: Vec<u32> = (1..=5).collect::<Vec<_>>().choose_multiple(rng, count).copied().collect();
            for n in exps {
                top = top.max(n);
                d = d.with_cyclic(p, n, mult(rng, true));
            }
            if rng.gen_bool(0.2) {
                let cutoff = rng.gen_range(top..=5);
                d = d.with_tail(p, cutoff, mult(rng, false));
            }
            if rng.gen_bool(0.25) {
                d = d.with_tf(p, mult(rng, true));
            }
            if rng.gen_bool(0.25) {
                d = d.with_div(p, mult(rng, true));
            }
        }
        if rng.gen_bool(0.2) {
            d = d.with_q(mult(rng, true));
        }
        if rng.gen_bool(0.1) {
            let mut shape = PrimeTailShape::default();
            if rng.gen_bool(0.7) {
                shape.cyclic_pattern.insert(rng.gen_range(1..=2), Mult::Fin(1));
            }
            if rng.gen_bool(0.3) {
                shape.tf_mult = Mult::Fin(1);
            }
            if rng.gen_bool(0.3) {
                shape.div_mult = Mult::Fin(1);
            }
            d = d.with_prime_tail(shape);
        }
        let d = d.canonicalize();
        if d != SzmielewDescription::trivial() {
            return d;
        }
    }
}

/// Any valid description, including infinite dp-rank and `prime_tail` with ω.
pub fn random_any(rng: &mut impl Rng) -> SzmielewDescription {
    let mut d = random_finite_dp(rng);
    if rng.gen_bool(0.25) {
        let p = *PRIMES.choose(rng).expect("non-empty");
        let cutoff = d.component(p).max_listed_exponent().max(d.cyclic_tail.get(&p).map_or(0, |t| t.cutoff));
        d.cyclic_tail.insert(
            p,
            crate::core::TailSpec {
                cutoff,
                mult: Mult::Omega,
            },
        );
    }
    if rng.gen_bool(0.3) {
        let mut shape = d.prime_tail.clone().unwrap_or_default();
        match rng.gen_range(0..3) {
            0 => shape.tf_mult = Mult::Omega,
            1 => shape.div_mult = Mult::Omega,
            _ => {
                shape.cyclic_pattern.insert(rng.gen_range(1..=3), Mult::Omega);
            }
        }
        d = d.with_prime_tail(shape);
    }
    d.canonicalize()
}

/// A finite group `⊕ Z(p^n)^k` of order at most `max_order`.
pub fn random_finite_group(rng: &mut impl Rng, max_order: u64) -> SzmielewDescription {
    let mut d = SzmielewDescription::new();
    let mut order: u64 = 1;
    for _ in 0..rng.gen_range(1..=4) {
        let p = *PRIMES.choose(rng).expect("non-empty");
        let n = rng.gen_range(1..=4);
        let q = p.pow(n);
        if order * q > max_order {
            continue;
        }
        order *= q;
        let m = d.cyclic.get(&(p, n)).copied().unwrap_or(Mult::ZERO);
        d = d.with_cyclic(p, n, m + Mult::ONE);
    }
    if d.cyclic.is_empty() {
        d = d.with_cyclic(2, 1, Mult::ONE);
    }
    d.canonicalize()
}

/// A conjunction of one to three atoms over primes at most 7.
pub fn random_formula(rng: &mut impl Rng) -> PPFormula {
    let mut f = PPFormula::top();
    for _ in 0..rng.gen_range(1..=3) {
        let atom = if rng.gen_bool(0.5) {
            let mut m = 1u64;
            for &p in &PRIMES {
                if rng.gen_bool(0.4) {
                    m *= p.pow(rng.gen_range(1..=3));
                }
            }
            PPFormula::tor(m)
        } else {
            let p = *PRIMES.choose(rng).expect("non-empty");
            let r = rng.gen_range(1..=5);
            PPFormula::div(p, r, rng.gen_range(0..r))
        };
        f = f.and(&atom);
    }
    f
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzCase {
    pub group: String,
    pub dp: Dp,
    pub oracle_depth: usize,
    pub pool_bound: u32,
    pub witness: Vec<String>,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzReport {
    pub seed: u64,
    pub count: usize,
    pub disagreements: usize,
    pub cases: Vec<FuzzCase>,
}

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error(transparent)]
    Internal(#[from] InternalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Closed-form dp-rank against the oracle at the default pool bound.
pub fn differential(desc: &SzmielewDescription) -> Result<FuzzCase, FuzzError> {
    let report = dp_rank(desc)?;
    let k = report.dp.finite().unwrap_or(0) as usize;
    let b = default_bound(desc);
    let r = breadth_search(desc, b, k + 1)?;
    Ok(FuzzCase {
        group: render_group(desc),
        dp: report.dp,
        oracle_depth: r.depth,
        pool_bound: b,
        witness: r.witness.iter().map(render_formula).collect(),
        agree: report.dp == Dp::Finite(r.depth as u64),
    })
}

/// Runs [`differential`] on `count` finite-dp descriptions drawn from `seed`.
pub fn fuzz(count: usize, seed: u64, jobs: usize) -> Result<FuzzReport, FuzzError> {
    let mut r = rng(seed);
    let descs: Vec<SzmielewDescription> = (0..count).map(|_| random_finite_dp(&mut r)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let cases: Vec<FuzzCase> =
        pool.install(|| descs.par_iter().map(differential).collect::<Result<_, _>>())?;
    Ok(FuzzReport {
        seed,
        count,
        disagreements: cases.iter().filter(|c| !c.agree).count(),
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::validate;

    #[test]
    fn generated_descriptions_are_valid() {
        let mut r = rng(7);
        for _ in 0..300 {
            assert!(validate(&random_finite_dp(&mut r)).is_empty());
            assert!(validate(&random_any(&mut r)).is_empty());
            assert!(validate(&random_finite_group(&mut r, 10_000)).is_empty());
            assert!(random_formula(&mut r).validate().is_ok());
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a: Vec<_> = (0..20).map({
            let mut r = rng(3);
            move |_| random_finite_dp(&mut r)
        }).collect();
        let b: Vec<_> = (0..20).map({
            let mut r = rng(3);
            move |_| random_finite_dp(&mut r)
        }).collect();
        assert_eq!(a, b);
    }
}
