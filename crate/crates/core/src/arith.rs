//! Small number-theory helpers used across the crate.

use std::collections::BTreeMap;

pub fn is_prime(n: u64) -> bool {
    num_prime::nt_funcs::is_prime64(n)
}

/// Prime factorization as `prime -> exponent`. `factorize(1)` is empty.
pub fn factorize(n: u64) -> BTreeMap<u64, u64> {
    if n <= 1 {
        return BTreeMap::new();
    }
    num_prime::nt_funcs::factorize64(n)
        .into_iter()
        .map(|(p, e)| (p, e as u64))
        .collect()
}

/// p-adic valuation of `n` (n ≥ 1).
pub fn valuation(n: u64, p: u64) -> u32 {
    debug_assert!(n >= 1 && p >= 2);
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Smallest prime not contained in `taken`.
pub fn first_prime_not_in(taken: &std::collections::BTreeSet<u64>) -> u64 {
    let mut q = 2;
    loop {
        if is_prime(q) && !taken.contains(&q) {
            return q;
        }
        q += 1;
    }
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}
