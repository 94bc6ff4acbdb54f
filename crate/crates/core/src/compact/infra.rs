//! Infrastructure of the principal cycle of `O = Z[√d]`.
//!
//! An ideal is the Z-module `[q, p + √d]` with `q | p^2 - d`. One
//! continued-fraction step maps `b` to `b' = ((p' + √d)/q)·b`, so walking the
//! cycle while multiplying those factors together keeps an exact relative
//! generator. Distances are tracked in `f64` only to steer the walk.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::numeric::{ln_quadratic, quadratic_sign};

/// `(a + b√d)/c` with `c > 0`, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct QuadElem {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

impl QuadElem {
    pub fn one() -> Self {
        QuadElem { a: BigInt::one(), b: BigInt::zero(), c: BigInt::one() }
    }

    /// Multiply by `(p + √d)/q`; `q` may be negative.
    pub fn mul_step(&mut self, p: &BigInt, q: &BigInt, d: &BigInt) {
        let a = &self.a * p + d * &self.b;
        let b = &self.a + &self.b * p;
        *self = QuadElem { a, b, c: &self.c * q }.normalized();
    }

    pub fn div_int(&mut self, g: &BigInt) {
        self.c *= g;
        *self = std::mem::replace(self, QuadElem::one()).normalized();
    }

    pub fn normalized(mut self) -> QuadElem {
        if self.c.is_negative() {
            self.a = -self.a;
            self.b = -self.b;
            self.c = -self.c;
        }
        let g = self.a.gcd(&self.b).gcd(&self.c);
        if !g.is_one() && !g.is_zero() {
            self.a /= &g;
            self.b /= &g;
            self.c /= &g;
        }
        self
    }

    /// Replace by its negative if the value is negative.
    pub fn make_positive(&mut self, d: u64) {
        if quadratic_sign(&self.a, &self.b, d) == Sign::Minus {
            self.a = -std::mem::take(&mut self.a);
            self.b = -std::mem::take(&mut self.b);
        }
    }

    pub fn ln_abs(&self, d: u64) -> f64 {
        ln_quadratic(&self.a, &self.b, &self.c, d)
    }
}

/// `[q, p + √d]`; `q` is kept signed during reduction and is positive once
/// the ideal is reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Ideal {
    pub q: BigInt,
    pub p: BigInt,
}

pub(crate) struct Infra {
    pub d: u64,
    pub big_d: BigInt,
    s: BigInt,
    frac: f64,
}

/// An ideal together with its generator relative to some fixed ideal and an
/// approximate distance.
#[derive(Debug, Clone)]
pub(crate) struct Walker {
    pub ideal: Ideal,
    pub gen: QuadElem,
    pub dist: f64,
}

impl Infra {
    pub fn new(d: u64) -> Self {
        let s = d.isqrt();
        let r = (d - s * s) as f64;
        Infra {
            d,
            big_d: BigInt::from(d),
            s: BigInt::from(s),
            frac: r / (s as f64 + (d as f64).sqrt()),
        }
    }

    /// `O` itself, as the reduced ideal `[1, s + √d]`.
    pub fn unit_ideal(&self) -> Ideal {
        Ideal { q: BigInt::one(), p: self.s.clone() }
    }

    pub fn is_unit_ideal(&self, i: &Ideal) -> bool {
        i.q.is_one()
    }

    pub fn is_reduced(&self, i: &Ideal) -> bool {
        i.q.is_positive()
            && i.p.is_positive()
            && i.p <= self.s
            && i.q > &self.s - &i.p
            && i.q <= &self.s + &i.p
    }

    /// `ln|p + √d|` without cancellation: `p + s` is exact.
    fn ln_surd(&self, p: &BigInt) -> f64 {
        let base = (p + &self.s).to_f64().unwrap_or(f64::INFINITY);
        (base + self.frac).abs().ln()
    }

    fn floor_quotient(&self, i: &Ideal) -> BigInt {
        let num = &i.p + &self.s;
        if i.q.is_positive() {
            num.div_floor(&i.q)
        } else {
            -(num.div_floor(&(-&i.q))) - 1
        }
    }

    /// One forward continued-fraction step: `b' = ((p' + √d)/q)·b`.
    pub fn forward(&self, w: &mut Walker) {
        let a = self.floor_quotient(&w.ideal);
        let p_next = &a * &w.ideal.q - &w.ideal.p;
        let q_next = (&self.big_d - &p_next * &p_next) / &w.ideal.q;
        w.dist += self.ln_surd(&p_next) - w.ideal.q.abs().to_f64().unwrap_or(f64::INFINITY).ln();
        w.gen.mul_step(&p_next, &w.ideal.q, &self.big_d);
        w.ideal = Ideal { q: q_next, p: p_next };
    }

    /// One backward step along the reduced cycle: `b_prev = ((√d - p)/q)·b`.
    pub fn backward(&self, w: &mut Walker) {
        debug_assert!(self.is_reduced(&w.ideal));
        let q_prev = (&self.big_d - &w.ideal.p * &w.ideal.p) / &w.ideal.q;
        let a_prev = (&w.ideal.p + &self.s).div_floor(&q_prev);
        let p_prev = &a_prev * &q_prev - &w.ideal.p;
        let neg_p = -&w.ideal.p;
        w.dist += self.ln_surd(&neg_p) - w.ideal.q.to_f64().unwrap_or(f64::INFINITY).ln();
        w.gen.mul_step(&neg_p, &w.ideal.q, &self.big_d);
        w.ideal = Ideal { q: q_prev, p: p_prev };
    }

    /// Distance increment of the next forward step from a reduced ideal.
    fn peek_forward(&self, i: &Ideal) -> f64 {
        let a = self.floor_quotient(i);
        let p_next = &a * &i.q - &i.p;
        self.ln_surd(&p_next) - i.q.to_f64().unwrap_or(f64::INFINITY).ln()
    }

    fn peek_backward(&self, i: &Ideal) -> f64 {
        self.ln_surd(&(-&i.p)) - i.q.to_f64().unwrap_or(f64::INFINITY).ln()
    }

    /// Steps forward until the ideal is reduced.
    pub fn reduce(&self, w: &mut Walker) {
        while !self.is_reduced(&w.ideal) {
            self.forward(w);
        }
    }

    /// Moves along the reduced cycle to the ideal whose distance is closest
    /// to `target`.
    pub fn walk_to(&self, w: &mut Walker, target: f64) {
        debug_assert!(self.is_reduced(&w.ideal));
        loop {
            let next = w.dist + self.peek_forward(&w.ideal);
            if next <= target || (next - target) < (target - w.dist) {
                self.forward(w);
            } else {
                break;
            }
        }
        loop {
            let prev = w.dist + self.peek_backward(&w.ideal);
            if w.dist > target && (target - prev) < (w.dist - target) {
                self.backward(w);
            } else {
                break;
            }
        }
    }

    /// `b^2 = (g)·[q3, p3 + √d]`; returns `(g, [q3, p3 + √d])`.
    pub fn square(&self, i: &Ideal) -> (BigInt, Ideal) {
        let two_p = &i.p * 2;
        let eg = i.q.extended_gcd(&two_p);
        let (g, u, v) = (eg.gcd, eg.x, eg.y);
        let q3 = (&i.q / &g).pow(2);
        let num = &u * &i.q * &i.p + &v * (&i.p * &i.p + &self.big_d);
        debug_assert!((&num % &g).is_zero());
        let p3 = (num / &g).mod_floor(&q3);
        debug_assert!(((&p3 * &p3 - &self.big_d) % &q3).is_zero());
        (g, Ideal { q: q3, p: p3 })
    }

}
