use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{Signed, ToPrimitive, Zero};

/// Natural log of a nonzero magnitude, valid far beyond `f64` range.
pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    debug_assert!(!n.is_zero());
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn ln_bigint_abs(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

/// `ln(|a| + |b|·√d)` without cancellation.
fn ln_same_sign(a: &BigInt, b: &BigInt, d: u64) -> f64 {
    let half_ln_d = 0.5 * (d as f64).ln();
    match (a.is_zero(), b.is_zero()) {
        (true, true) => f64::NEG_INFINITY,
        (false, true) => ln_bigint_abs(a),
        (true, false) => ln_bigint_abs(b) + half_ln_d,
        (false, false) => {
            let la = ln_bigint_abs(a);
            let lb = ln_bigint_abs(b) + half_ln_d;
            let (hi, lo) = if la >= lb { (la, lb) } else { (lb, la) };
            hi + (lo - hi).exp().ln_1p()
        }
    }
}

/// `ln|(a + b√d)/c|` for nonzero values, computed through the conjugate
/// when `a` and `b` have opposite signs.
pub(crate) fn ln_quadratic(a: &BigInt, b: &BigInt, c: &BigInt, d: u64) -> f64 {
    let same = a.sign() == Sign::NoSign
        || b.sign() == Sign::NoSign
        || a.is_negative() == b.is_negative();
    let ln_c = ln_bigint_abs(c);
    if same {
        ln_same_sign(a, b, d) - ln_c
    } else {
        let norm: BigInt = a * a - BigInt::from(d) * b * b;
        ln_bigint_abs(&norm) - ln_same_sign(a, b, d) - ln_c
    }
}

/// `ln(x + y√d)` for positive `x`, `y`.
pub(crate) fn ln_unit(x: &BigUint, y: &BigUint, d: u64) -> f64 {
    ln_same_sign(&BigInt::from(x.clone()), &BigInt::from(y.clone()), d)
}

/// Sign of `a + b√d` (`d` not a square).
pub(crate) fn quadratic_sign(a: &BigInt, b: &BigInt, d: u64) -> Sign {
    match (a.sign(), b.sign()) {
        (Sign::NoSign, s) | (s, Sign::NoSign) => s,
        (sa, sb) if sa == sb => sa,
        (sa, _) => {
            let a2 = a * a;
            let db2 = BigInt::from(d) * b * b;
            if a2 > db2 {
                sa
            } else {
                -sa
            }
        }
    }
}

pub(crate) fn floor_sqrt(n: u64) -> u64 {
    n.isqrt()
}

/// Deterministic Miller–Rabin for 64-bit inputs.
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let odd = (n - 1) >> s;
    'outer: for a in BASES {
        let mut x = powmod(a, odd);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}
