//! Evaluation of compact representations modulo an integer.
//!
//! Horner's scheme runs from the largest exponent down, so after each step
//! the running value is an algebraic integer `γ_i = γ_{i-1}^2·α_i`. A
//! denominator `c_i` that is invertible modulo `M` is inverted directly. For
//! a prime `p | gcd(c_i, M)` the evaluation modulo `p^e` starts at
//! `p^(e + V)` with `V = Σ v_p(c_i)`; each step divides exactly by
//! `p^(v_p(c_i))` and drops that much precision, ending at `p^e`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::CompactRep;
use crate::error::{Error, Result};
use crate::numeric::is_prime_u64;

/// Default cap on the extra p-adic digits spent on denominators.
pub const LIFT_BUDGET: u64 = 128;

/// `(x mod m, y mod m)` for `β = x + y√d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResiduePair {
    pub modulus: BigUint,
    pub x: BigUint,
    pub y: BigUint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Exact(u32),
    CapExceeded,
}

pub fn eval_mod(rep: &CompactRep, modulus: &BigUint) -> Result<ResiduePair> {
    eval_mod_with_budget(rep, modulus, LIFT_BUDGET)
}

pub fn eval_mod_with_budget(rep: &CompactRep, modulus: &BigUint, budget: u64) -> Result<ResiduePair> {
    if modulus < &BigUint::from(2u32) {
        return Err(Error::Parameter(format!("modulus must be >= 2, got {modulus}")));
    }
    let mut coprime = modulus.clone();
    let mut parts: Vec<(BigUint, BigUint, BigUint)> = Vec::new(); // (m_i, x, y)
    for p in shared_primes(rep, modulus)? {
        let big_p = BigUint::from(p);
        let mut e = 0u32;
        while (&coprime % &big_p).is_zero() {
            coprime /= &big_p;
            e += 1;
        }
        let (x, y) = eval_prime_power(rep, p, e, budget)?;
        parts.push((big_p.pow(e), x, y));
    }
    if !coprime.is_one() {
        let (x, y) = eval_coprime(rep, &coprime)?;
        parts.push((coprime, x, y));
    }
    let (x, y) = crt(&parts);
    Ok(ResiduePair { modulus: modulus.clone(), x, y })
}

/// `v_p` of one coordinate: probes `p^e` for `e = 8, 16, …` up to `cap`.
pub fn valuation(rep: &CompactRep, coord: Coordinate, p: u64, cap: u32, budget: u64) -> Result<Valuation> {
    if !is_prime_u64(p) {
        return Err(Error::Parameter(format!("{p} is not prime")));
    }
    let big_p = BigUint::from(p);
    let mut e = cap.min(8).max(1);
    loop {
        let r = eval_mod_with_budget(rep, &big_p.pow(e), budget)?;
        let mut v = match coord {
            Coordinate::X => r.x,
            Coordinate::Y => r.y,
        };
        if !v.is_zero() {
            let mut k = 0;
            while (&v % &big_p).is_zero() {
                v /= &big_p;
                k += 1;
            }
            return Ok(Valuation::Exact(k));
        }
        if e >= cap {
            return Ok(Valuation::CapExceeded);
        }
        e = (e * 2).min(cap);
    }
}

/// Primes dividing both the modulus and some denominator.
fn shared_primes(rep: &CompactRep, modulus: &BigUint) -> Result<Vec<u64>> {
    let mut shared = Vec::new();
    for t in rep.terms() {
        let c = t.c.magnitude();
        if c.is_one() {
            continue;
        }
        // reduce first: binary gcd on a wide modulus is slow
        let g = c.gcd(&(modulus % c));
        if g.is_one() {
            continue;
        }
        for p in split_primes(&g)? {
            if !shared.contains(&p) {
                shared.push(p);
            }
        }
    }
    shared.sort_unstable();
    Ok(shared)
}

/// Distinct primes of a common divisor of a denominator and the modulus.
/// Denominators are bounded by a small multiple of `d`, so trial division to
/// `2^20` followed by a primality test settles everything that arises.
fn split_primes(g: &BigUint) -> Result<Vec<u64>> {
    let mut rest = g
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("denominator gcd {g} too large to split")))?;
    let mut primes = Vec::new();
    let mut p = 2u64;
    while p < (1 << 20) && p.saturating_mul(p) <= rest {
        if rest % p == 0 {
            primes.push(p);
            while rest % p == 0 {
                rest /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        if !is_prime_u64(rest) {
            return Err(Error::Domain(format!("cannot split denominator factor {rest}")));
        }
        primes.push(rest);
    }
    Ok(primes)
}

fn to_residue(v: &BigInt, m: &BigUint) -> BigUint {
    v.mod_floor(&BigInt::from(m.clone())).to_biguint().expect("mod_floor is non-negative")
}

/// One Horner step numerator: `(x + y√d)^2·(a + b√d)` modulo `m`.
fn square_times(x: &BigUint, y: &BigUint, a: &BigUint, b: &BigUint, d: &BigUint, m: &BigUint) -> (BigUint, BigUint) {
    let sx = (x * x + d * (y * y % m)) % m;
    let sy = (x * y * 2u32) % m;
    let nx = (&sx * a + d * (&sy * b % m)) % m;
    let ny = (&sx * b + &sy * a) % m;
    (nx, ny)
}

fn eval_coprime(rep: &CompactRep, m: &BigUint) -> Result<(BigUint, BigUint)> {
    let d = BigUint::from(rep.d()) % m;
    let (mut x, mut y) = (BigUint::one() % m, BigUint::zero());
    for t in rep.terms().iter().rev() {
        let a = to_residue(&t.a, m);
        let b = to_residue(&t.b, m);
        let (nx, ny) = square_times(&x, &y, &a, &b, &d, m);
        let inv = (t.c.magnitude() % m)
            .modinv(m)
            .ok_or_else(|| Error::Domain(format!("denominator {} not invertible mod {m}", t.c)))?;
        x = nx * &inv % m;
        y = ny * &inv % m;
    }
    Ok((x, y))
}

fn eval_prime_power(rep: &CompactRep, p: u64, e: u32, budget: u64) -> Result<(BigUint, BigUint)> {
    let big_p = BigUint::from(p);
    let vals: Vec<u32> = rep
        .terms()
        .iter()
        .map(|t| {
            let mut c = t.c.magnitude().clone();
            let mut v = 0;
            while (&c % &big_p).is_zero() {
                c /= &big_p;
                v += 1;
            }
            v
        })
        .collect();
    let extra: u64 = vals.iter().map(|&v| u64::from(v)).sum();
    if extra > budget {
        return Err(Error::Escalate { prime: p, needed: extra, budget });
    }
    let mut prec = e + extra as u32;
    let mut m = big_p.pow(prec);
    let d = BigUint::from(rep.d());
    let (mut x, mut y) = (BigUint::one() % &m, BigUint::zero());
    for (t, &v) in rep.terms().iter().zip(&vals).rev() {
        let a = to_residue(&t.a, &m);
        let b = to_residue(&t.b, &m);
        let (mut nx, mut ny) = square_times(&x, &y, &a, &b, &(&d % &m), &m);
        let mut unit_part = t.c.magnitude().clone();
        if v > 0 {
            let pv = big_p.pow(v);
            if !(&nx % &pv).is_zero() || !(&ny % &pv).is_zero() {
                return Err(Error::Domain("partial product is not integral".into()));
            }
            nx /= &pv;
            ny /= &pv;
            unit_part /= &pv;
            prec -= v;
            m = big_p.pow(prec);
        }
        let inv = (unit_part % &m).modinv(&m).expect("p-free part is invertible mod p^k");
        x = nx * &inv % &m;
        y = ny * &inv % &m;
    }
    debug_assert_eq!(prec, e);
    Ok((x, y))
}

/// Chinese remaindering over pairwise coprime moduli.
fn crt(parts: &[(BigUint, BigUint, BigUint)]) -> (BigUint, BigUint) {
    let mut modulus = BigUint::one();
    let (mut x, mut y) = (BigUint::zero(), BigUint::zero());
    for (m, px, py) in parts {
        // combine (x mod modulus) with (px mod m)
        let inv = (&modulus % m).modinv(m).unwrap_or_else(BigUint::zero);
        let lift = |cur: &BigUint, target: &BigUint| {
            let cur_m = cur % m;
            let diff = (target + m - cur_m) % m;
            cur + &modulus * ((diff * &inv) % m)
        };
        x = lift(&x, px);
        y = lift(&y, py);
        modulus *= m;
    }
    (x, y)
}
