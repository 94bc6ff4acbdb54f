//! Primes, trial-division factorization and smoothness predicates.
//!
//! All smoothness questions in this crate are relative to small prime bounds
//! (a few hundred), so trial division over a sieved table is complete: a
//! number either splits entirely over the table or leaves a cofactor that is
//! reported as-is.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// All primes up to `limit`, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

/// Sieve of Eratosthenes up to `limit` inclusive.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::Parameter(format!("sieve limit must be >= 2, got {limit}")));
    }
    let n = usize::try_from(limit)
        .map_err(|_| Error::Parameter(format!("sieve limit {limit} exceeds address space")))?;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i.saturating_mul(i);
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    Ok(PrimeTable { limit, primes })
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// The `i`-th prime, 1-based (`nth_prime(1) == Some(2)`).
    pub fn nth_prime(&self, i: usize) -> Option<u64> {
        i.checked_sub(1).and_then(|k| self.primes.get(k).copied())
    }

    /// Number of primes `<= x`; `None` when `x` lies beyond the sieve limit.
    pub fn prime_pi(&self, x: u64) -> Option<usize> {
        if x > self.limit {
            return None;
        }
        Some(self.primes.partition_point(|&p| p <= x))
    }

    /// The first `t` primes.
    pub fn first(&self, t: usize) -> Option<&[u64]> {
        self.primes.get(..t)
    }

    pub fn is_prime(&self, p: u64) -> bool {
        p <= self.limit && self.primes.binary_search(&p).is_ok()
    }

    /// Trial division of `|n|` over every prime in the table.
    pub fn factorize(&self, n: &BigInt) -> Result<Factorization> {
        if n.is_zero() {
            return Err(Error::Domain("cannot factor 0".into()));
        }
        Ok(self.factor_magnitude(n.magnitude(), self.limit))
    }

    /// The largest divisor of `|n|` composed of primes `<= bound`.
    pub fn smooth_part(&self, n: &BigInt, bound: u64) -> Result<BigUint> {
        self.check_bound(bound)?;
        if n.is_zero() {
            return Err(Error::Domain("smooth part of 0 is undefined".into()));
        }
        Ok(self.factor_magnitude(n.magnitude(), bound).smooth_value())
    }

    /// `P(n) <= bound`.
    pub fn is_smooth(&self, n: &BigInt, bound: u64) -> Result<bool> {
        self.check_bound(bound)?;
        if n.is_zero() {
            return Err(Error::Domain("smoothness of 0 is undefined".into()));
        }
        Ok(self.factor_magnitude(n.magnitude(), bound).cofactor.is_one())
    }

    /// If `n` splits completely over the table, its largest prime factor.
    pub fn smooth_largest_factor(&self, n: u128) -> Option<u64> {
        if n == 0 {
            return None;
        }
        let mut rest = n;
        let mut largest = 1;
        for &p in &self.primes {
            if rest == 1 {
                break;
            }
            let p128 = p as u128;
            if rest % p128 == 0 {
                largest = p;
                while rest % p128 == 0 {
                    rest /= p128;
                }
            }
        }
        (rest == 1).then_some(largest)
    }

    /// `P(Π_{n,len})` when every member of the window splits over the table.
    pub fn window_smooth_max(&self, n: u128, len: u32) -> Option<u64> {
        let mut best = 1;
        for i in 0..len as u128 {
            best = best.max(self.smooth_largest_factor(n.checked_add(i)?)?);
        }
        Some(best)
    }

    fn check_bound(&self, bound: u64) -> Result<()> {
        if !self.is_prime(bound) {
            return Err(Error::Parameter(format!(
                "smoothness bound {bound} must be a prime <= table limit {}",
                self.limit
            )));
        }
        Ok(())
    }

    fn factor_magnitude(&self, n: &BigUint, bound: u64) -> Factorization {
        if let Some(small) = n.to_u128() {
            return self.factor_u128(small, bound);
        }
        let mut rest = n.clone();
        let mut factors = Vec::new();
        for &p in self.primes.iter().take_while(|&&p| p <= bound) {
            let big_p = BigUint::from(p);
            let mut e = 0;
            loop {
                let (q, r) = rest.div_rem(&big_p);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                e += 1;
            }
            if e > 0 {
                factors.push((p, e));
            }
            if let Some(small) = rest.to_u128() {
                let tail = self.factor_u128_from(small, bound, p);
                factors.extend(tail.factors);
                return Factorization { factors, cofactor: tail.cofactor };
            }
        }
        Factorization { factors, cofactor: rest }
    }

    fn factor_u128(&self, n: u128, bound: u64) -> Factorization {
        self.factor_u128_from(n, bound, 1)
    }

    // Trial division by primes strictly greater than `after`.
    fn factor_u128_from(&self, n: u128, bound: u64, after: u64) -> Factorization {
        let mut rest = n;
        let mut factors = Vec::new();
        let start = self.primes.partition_point(|&p| p <= after);
        for &p in self.primes[start..].iter().take_while(|&&p| p <= bound) {
            if rest == 1 {
                break;
            }
            let p128 = p as u128;
            if rest % p128 != 0 {
                continue;
            }
            let mut e = 0;
            while rest % p128 == 0 {
                rest /= p128;
                e += 1;
            }
            factors.push((p, e));
        }
        Factorization { factors, cofactor: BigUint::from(rest) }
    }
}

/// `|n| = cofactor · ∏ p^e` with distinct ascending primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub factors: Vec<(u64, u32)>,
    pub cofactor: BigUint,
}

impl Factorization {
    pub fn smooth_value(&self) -> BigUint {
        self.factors
            .iter()
            .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e))
    }

    pub fn value(&self) -> BigUint {
        self.smooth_value() * &self.cofactor
    }

    pub fn largest_prime(&self) -> Option<u64> {
        self.factors.last().map(|&(p, _)| p)
    }
}

impl std::fmt::Display for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        if !self.cofactor.is_one() || parts.is_empty() {
            parts.push(format!("[{}]", self.cofactor));
        }
        f.write_str(&parts.join("*"))
    }
}

/// `P(n)`, with `P(0) = P(±1) = 1`.
pub fn largest_prime_factor(n: i64) -> u64 {
    largest_prime_factor_u64(n.unsigned_abs())
}

pub(crate) fn largest_prime_factor_u64(n: u64) -> u64 {
    if n <= 1 {
        return 1;
    }
    let mut rest = n;
    let mut largest = 1;
    for p in [2u64, 3] {
        if rest % p == 0 {
            largest = p;
            while rest % p == 0 {
                rest /= p;
            }
        }
    }
    // 6k ± 1 wheel
    let mut p = 5u64;
    while p.saturating_mul(p) <= rest {
        for q in [p, p + 2] {
            if rest % q == 0 {
                largest = q;
                while rest % q == 0 {
                    rest /= q;
                }
            }
        }
        p += 6;
    }
    if rest > 1 {
        largest = largest.max(rest);
    }
    largest
}

/// Splits `n = d · y²` with `d` squarefree, returning `(d, y)`.
pub fn squarefree_kernel(n: u64) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::Domain("squarefree decomposition of 0".into()));
    }
    let mut rest = n;
    let (mut d, mut y) = (1u64, 1u64);
    let mut take = |rest: &mut u64, p: u64| {
        let mut e = 0;
        while *rest % p == 0 {
            *rest /= p;
            e += 1;
        }
        if e % 2 == 1 {
            d *= p;
        }
        y *= p.pow(e / 2);
    };
    take(&mut rest, 2);
    let mut p = 3u64;
    while p.saturating_mul(p) <= rest {
        if rest % p == 0 {
            take(&mut rest, p);
        }
        p += 2;
    }
    if rest > 1 {
        d *= rest;
    }
    Ok((d, y))
}

/// `P(Π_{n,len})`: the largest prime factor over `n, n+1, …, n+len-1`.
pub fn window_largest_prime(n: u64, len: u64) -> u64 {
    (0..len)
        .map(|i| largest_prime_factor_u64(n + i))
        .max()
        .unwrap_or(1)
}

/// True if no square of a prime divides `n` (`n >= 1`).
pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && matches!(squarefree_kernel(n), Ok((_, 1)))
}

pub fn is_perfect_square(n: u64) -> bool {
    let r = n.isqrt();
    r * r == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(limit: u64) -> PrimeTable {
        sieve_primes(limit).unwrap()
    }

    #[test]
    fn sieve_small() {
        assert_eq!(table(10).primes(), &[2, 3, 5, 7]);
        assert!(sieve_primes(1).is_err());
        assert_eq!(table(2).primes(), &[2]);
    }

    #[test]
    fn nth_prime_and_pi() {
        let t = table(300);
        assert_eq!(t.nth_prime(47), Some(211));
        assert_eq!(t.nth_prime(56), Some(263));
        assert_eq!(t.nth_prime(0), None);
        assert_eq!(t.prime_pi(13), Some(6));
        assert_eq!(t.prime_pi(1), Some(0));
        assert_eq!(t.prime_pi(301), None);
    }

    #[test]
    fn pi_inverts_nth_prime() {
        let t = table(1000);
        for i in 1..=100 {
            assert_eq!(t.prime_pi(t.nth_prime(i).unwrap()), Some(i));
        }
    }

    #[test]
    fn factorize_examples() {
        let t = table(7);
        let f = t.factorize(&BigInt::from(720)).unwrap();
        assert_eq!(f.factors, vec![(2, 4), (3, 2), (5, 1)]);
        assert!(f.cofactor.is_one());

        // 4375 = 5^4 * 7, by hand: 4375 / 625 = 7
        let f = t.factorize(&BigInt::from(4375)).unwrap();
        assert_eq!(f.factors, vec![(5, 4), (7, 1)]);

        let f = t.factorize(&BigInt::from(-22)).unwrap();
        assert_eq!(f.factors, vec![(2, 1)]);
        assert_eq!(f.cofactor, BigUint::from(11u32));

        assert!(matches!(t.factorize(&BigInt::zero()), Err(Error::Domain(_))));
    }

    #[test]
    fn factorize_beyond_u128() {
        let t = table(100);
        let n = BigInt::from(2u32).pow(150) * BigInt::from(97u32) * BigInt::from(101u32);
        let f = t.factorize(&n).unwrap();
        assert_eq!(f.factors, vec![(2, 150), (97, 1)]);
        assert_eq!(f.cofactor, BigUint::from(101u32));
        assert_eq!(BigInt::from(f.value()), n);
    }

    #[test]
    fn largest_prime_factor_convention() {
        assert_eq!(largest_prime_factor(0), 1);
        assert_eq!(largest_prime_factor(1), 1);
        assert_eq!(largest_prime_factor(-1), 1);
        assert_eq!(largest_prime_factor(12), 3);
        assert_eq!(largest_prime_factor(-45), 5);
        assert_eq!(largest_prime_factor(226153980), 761);
        assert_eq!(largest_prime_factor(i64::MIN), 2);
    }

    #[test]
    fn smoothness() {
        let t = table(300);
        // 4374 = 2 * 3^7
        assert!(t.is_smooth(&BigInt::from(4374), 7).unwrap());
        assert_eq!(t.smooth_part(&BigInt::from(4374), 7).unwrap(), BigUint::from(4374u32));
        let n = BigInt::from(8 * 7 * 11);
        assert!(!t.is_smooth(&n, 5).unwrap());
        assert_eq!(t.smooth_part(&n, 5).unwrap(), BigUint::from(8u32));
        assert!(t.is_smooth(&BigInt::one(), 2).unwrap());
        assert_eq!(t.smooth_part(&BigInt::one(), 2).unwrap(), BigUint::one());
        assert!(t.is_smooth(&BigInt::zero(), 2).is_err());
        assert!(t.is_smooth(&BigInt::from(6), 4).is_err());
    }

    #[test]
    fn squarefree_examples() {
        assert_eq!(squarefree_kernel(12).unwrap(), (3, 2));
        assert_eq!(squarefree_kernel(30).unwrap(), (30, 1));
        assert_eq!(squarefree_kernel(360).unwrap(), (10, 6));
        assert_eq!(squarefree_kernel(1).unwrap(), (1, 1));
        assert!(squarefree_kernel(0).is_err());
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_largest_prime(318, 13), 163);
        assert_eq!(window_largest_prime(1330, 15), 223);
        assert_eq!(window_largest_prime(1, 1), 1);
    }

    #[test]
    fn window_matches_pointwise_max() {
        for n in 1..=10_000u64 {
            let mut running = 1;
            for len in 1..=20u64 {
                running = running.max(largest_prime_factor_u64(n + len - 1));
                assert_eq!(window_largest_prime(n, len), running, "n={n} len={len}");
            }
        }
    }

    #[test]
    fn window_smooth_max_agrees() {
        let t = table(263);
        assert_eq!(t.window_smooth_max(318, 13), Some(163));
        assert_eq!(t.window_smooth_max(1330, 15), Some(223));
        assert_eq!(t.window_smooth_max(269, 1), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn smooth_times_rough_is_n(n in 1i64..10_000_000_000, pi in 0usize..30) {
                let t = sieve_primes(200).unwrap();
                let bound = t.primes()[pi];
                let big = BigInt::from(n);
                let smooth = t.smooth_part(&big, bound).unwrap();
                let rough = big.magnitude() / &smooth;
                prop_assert!((big.magnitude() % &smooth).is_zero());
                for &p in t.primes().iter().take_while(|&&p| p <= bound) {
                    prop_assert!(!(&rough % p).is_zero());
                }
            }

            #[test]
            fn squarefree_split_reconstructs(n in 1u64..100_000_000) {
                let (d, y) = squarefree_kernel(n).unwrap();
                prop_assert_eq!(d * y * y, n);
                let (d2, y2) = squarefree_kernel(d).unwrap();
                prop_assert_eq!((d2, y2), (d, 1));
            }

            #[test]
            fn factorization_reconstructs(n in 1u128..u128::MAX) {
                let t = sieve_primes(100).unwrap();
                let f = t.factorize(&BigInt::from(n)).unwrap();
                prop_assert_eq!(f.value(), BigUint::from(n));
            }
        }
    }
}
