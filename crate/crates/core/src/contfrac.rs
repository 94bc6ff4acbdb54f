//! Continued fractions of quadratic surds.
//!
//! The surd `(P + √d)/Q` is stepped with the usual integer recurrence
//! `a = ⌊(P + ⌊√d⌋)/Q⌋`, `P' = aQ - P`, `Q' = (d - P'^2)/Q`, which keeps
//! `Q | d - P^2` at every step and never touches floating point. Everything
//! here works for non-square `d < 2^62`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numeric::floor_sqrt;

pub(crate) const MAX_D: u64 = 1 << 62;

pub(crate) fn check_nonsquare(d: u64) -> Result<u64> {
    if d < 2 || d >= MAX_D {
        return Err(Error::Domain(format!("d = {d} outside supported range 2..2^62")));
    }
    let s = floor_sqrt(d);
    if s * s == d {
        return Err(Error::Domain(format!("d = {d} is a perfect square")));
    }
    Ok(s)
}

/// One complete quotient `(p + √d)/q` with partial quotient `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfState {
    pub p: u64,
    pub q: u64,
    pub a: u64,
    pub index: usize,
}

/// Iterator over the complete quotients of `(p0 + √d)/q0`.
///
/// Only starting points that are already reduced (or `√d` itself) are
/// accepted, so every `p` and `q` stays below `2√d`.
#[derive(Debug, Clone)]
pub struct SurdSteps {
    d: u64,
    s: u64,
    state: CfState,
}

impl SurdSteps {
    pub fn sqrt(d: u64) -> Result<Self> {
        let s = check_nonsquare(d)?;
        Ok(SurdSteps { d, s, state: CfState { p: 0, q: 1, a: s, index: 0 } })
    }

    fn from_reduced(d: u64, s: u64, p: u64, q: u64) -> Self {
        SurdSteps { d, s, state: CfState { p, q, a: (p + s) / q, index: 0 } }
    }

    pub fn current(&self) -> CfState {
        self.state
    }

    /// Advance one step and return the new state.
    pub fn step(&mut self) -> CfState {
        let CfState { p, q, a, index } = self.state;
        let p_next = a * q - p;
        let q_next = (self.d - p_next * p_next) / q;
        debug_assert_eq!((self.d - p_next * p_next) % q, 0);
        self.state = CfState { p: p_next, q: q_next, a: (p_next + self.s) / q_next, index: index + 1 };
        self.state
    }
}

/// `√d = [a0; period]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfExpansion {
    pub a0: u64,
    pub period: Vec<u64>,
}

pub fn cf_expand_sqrt(d: u64) -> Result<CfExpansion> {
    let mut steps = SurdSteps::sqrt(d)?;
    let a0 = steps.current().a;
    let mut period = Vec::new();
    loop {
        let st = steps.step();
        period.push(st.a);
        if st.q == 1 {
            break;
        }
    }
    Ok(CfExpansion { a0, period })
}

/// A convergent `p/q` of `√d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
    pub index: usize,
}

/// The convergents of `√d`, in order.
#[derive(Debug, Clone)]
pub struct Convergents {
    steps: SurdSteps,
    prev: (BigUint, BigUint),
    cur: (BigUint, BigUint),
    started: bool,
}

impl Convergents {
    pub fn of_sqrt(d: u64) -> Result<Self> {
        let steps = SurdSteps::sqrt(d)?;
        Ok(Convergents {
            steps,
            prev: (BigUint::zero(), BigUint::one()),
            cur: (BigUint::one(), BigUint::zero()),
            started: false,
        })
    }
}

impl Iterator for Convergents {
    type Item = Convergent;

    fn next(&mut self) -> Option<Convergent> {
        let st = if self.started { self.steps.step() } else { self.steps.current() };
        self.started = true;
        let a = BigUint::from(st.a);
        let p = &a * &self.cur.0 + &self.prev.0;
        let q = &a * &self.cur.1 + &self.prev.1;
        self.prev = std::mem::replace(&mut self.cur, (p.clone(), q.clone()));
        Some(Convergent { p, q, index: st.index })
    }
}

/// Minimal positive solution of `x^2 - d·y^2 = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PellFundamental {
    pub d: u64,
    pub x1: BigUint,
    pub y1: BigUint,
}

/// Walks the convergents of `√d` until the first `p^2 - d·q^2 = 1`; this is
/// the end of the period, or of the doubled period when its length is odd.
pub fn fundamental_solution(d: u64) -> Result<PellFundamental> {
    let big_d = BigUint::from(d);
    for c in Convergents::of_sqrt(d)? {
        if &c.p * &c.p == &big_d * &c.q * &c.q + 1u32 {
            return Ok(PellFundamental { d, x1: c.p, y1: c.q });
        }
    }
    unreachable!("convergent iterator is infinite")
}

/// Outcome of a bounded convergent scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentScan {
    pub solution: Option<(BigUint, BigUint)>,
    pub scanned: usize,
}

/// Scans convergents `p/q` of `√d` with `q <= bound` for the first solution
/// of `p^2 - d·q^2 = 1`. Every Pell solution is a convergent, so an empty
/// result certifies that no solution has `y <= bound`.
pub fn scan_solution_below(d: u64, bound: &BigUint) -> Result<ConvergentScan> {
    let big_d = BigUint::from(d);
    let mut scanned = 0;
    for c in Convergents::of_sqrt(d)? {
        if &c.q > bound {
            break;
        }
        scanned += 1;
        if &c.p * &c.p == &big_d * &c.q * &c.q + 1u32 {
            return Ok(ConvergentScan { solution: Some((c.p, c.q)), scanned });
        }
    }
    Ok(ConvergentScan { solution: None, scanned })
}

pub fn find_solution_below(d: u64, bound: &BigUint) -> Result<Option<(BigUint, BigUint)>> {
    Ok(scan_solution_below(d, bound)?.solution)
}

/// A regulator value with its absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regulator {
    pub value: f64,
    pub error_bound: f64,
    /// Norm of the fundamental unit of the maximal order, when known.
    pub unit_norm: Option<i8>,
}

pub const DEFAULT_PRECISION: f64 = 1e-10;

/// Regulator of `Q(√d)` from one period of the reduced principal cycle of
/// the maximal order: `R = Σ ln θ_i` over the complete quotients `θ_i`.
///
/// Terms are accumulated with compensated summation. The error bound
/// charges each term `4.5e-16 + 2.5e-16·ln θ_i` (rounding of `√d`, the
/// quotient and the logarithm), plus one rounding of the total.
pub fn regulator_cf(d: u64, precision: f64) -> Result<Regulator> {
    if precision.is_nan() || precision <= 0.0 {
        return Err(Error::Parameter(format!("precision must be positive, got {precision}")));
    }
    let s = check_nonsquare(d)?;
    let (p0, q0) = if d % 4 == 1 { (if s % 2 == 1 { s } else { s - 1 }, 2) } else { (s, 1) };
    // √d = s + r/(s + √d) keeps full relative precision for large d.
    let r = (d - s * s) as f64;
    let frac = r / (s as f64 + (d as f64).sqrt());

    let mut steps = SurdSteps::from_reduced(d, s, p0, q0);
    let (mut sum, mut comp, mut bound) = (0.0f64, 0.0f64, 0.0f64);
    let mut len = 0usize;
    loop {
        let st = steps.step();
        len += 1;
        let theta = ((st.p + s) as f64 + frac) / st.q as f64;
        let term = theta.ln();
        bound += 4.5e-16 + 2.5e-16 * term;
        // Kahan
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if st.p == p0 && st.q == q0 {
            break;
        }
    }
    bound += f64::EPSILON * sum;
    if bound > precision {
        return Err(Error::Parameter(format!(
            "requested precision {precision:e} below the f64 error budget {bound:e} for d = {d}"
        )));
    }
    let unit_norm = if len % 2 == 0 { 1 } else { -1 };
    Ok(Regulator { value: sum, error_bound: bound, unit_norm: Some(unit_norm) })
}

/// Source of regulators. Implementations may return any positive multiple
/// `m·R_d` of the true regulator; callers must not assume `m = 1`.
pub trait RegulatorProvider: Send + Sync {
    fn regulator(&self, d: u64) -> Result<Regulator>;
}

/// Exact backend: one period of the continued fraction. Always `m = 1`.
#[derive(Debug, Clone, Copy)]
pub struct CfRegulator {
    pub precision: f64,
}

impl Default for CfRegulator {
    fn default() -> Self {
        CfRegulator { precision: DEFAULT_PRECISION }
    }
}

impl RegulatorProvider for CfRegulator {
    fn regulator(&self, d: u64) -> Result<Regulator> {
        regulator_cf(d, self.precision)
    }
}

/// Wraps a provider and multiplies its output by a fixed factor, the way an
/// index-calculus backend may silently return `m·R_d`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledRegulator<P> {
    pub inner: P,
    pub multiple: u32,
}

impl<P: RegulatorProvider> RegulatorProvider for ScaledRegulator<P> {
    fn regulator(&self, d: u64) -> Result<Regulator> {
        let r = self.inner.regulator(d)?;
        let m = f64::from(self.multiple);
        Ok(Regulator {
            value: r.value * m,
            error_bound: r.error_bound * m,
            unit_norm: if self.multiple % 2 == 0 { Some(1) } else { r.unit_norm },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ln_unit;

    fn sqfree_upto(n: u64) -> impl Iterator<Item = u64> {
        (2..=n).filter(|&d| crate::arith::is_squarefree(d))
    }

    /// Ascending-y brute force: smallest y with 1 + d·y^2 a perfect square.
    fn brute_fundamental(d: u64) -> (u128, u128) {
        let mut y: u128 = 1;
        loop {
            let v = 1 + d as u128 * y * y;
            let x = v.isqrt();
            if x * x == v {
                return (x, y);
            }
            y += 1;
        }
    }

    #[test]
    fn expansions() {
        assert_eq!(cf_expand_sqrt(2).unwrap(), CfExpansion { a0: 1, period: vec![2] });
        assert_eq!(cf_expand_sqrt(3).unwrap(), CfExpansion { a0: 1, period: vec![1, 2] });
        assert!(matches!(cf_expand_sqrt(4), Err(Error::Domain(_))));
        assert!(cf_expand_sqrt(1).is_err());
        assert_eq!(cf_expand_sqrt(61).unwrap().period.len(), 11);
    }

    #[test]
    fn state_invariants() {
        for d in [2u64, 7, 13, 61, 94, 1_000_003] {
            let s = floor_sqrt(d);
            let mut steps = SurdSteps::sqrt(d).unwrap();
            for _ in 0..200 {
                let st = steps.step();
                assert!(st.q > 0 && st.p <= s);
                assert_eq!((d - st.p * st.p) % st.q, 0);
            }
        }
    }

    #[test]
    fn fundamental_examples() {
        let f = fundamental_solution(2).unwrap();
        assert_eq!((f.x1, f.y1), (3u32.into(), 2u32.into()));
        let f = fundamental_solution(5).unwrap();
        assert_eq!((f.x1, f.y1), (9u32.into(), 4u32.into()));
        let f = fundamental_solution(61).unwrap();
        assert_eq!((f.x1.clone(), f.y1.clone()), (1766319049u64.into(), 226153980u64.into()));
        assert_eq!(&f.x1 * &f.x1, BigUint::from(61u32) * &f.y1 * &f.y1 + 1u32);
    }

    #[test]
    fn fundamental_matches_brute_small() {
        // the full d <= 200 sweep lives in the acceptance suite
        for d in sqfree_upto(60) {
            let f = fundamental_solution(d).unwrap();
            let (x, y) = brute_fundamental(d);
            assert_eq!((f.x1, f.y1), (x.into(), y.into()), "d={d}");
        }
    }

    #[test]
    fn regulator_examples() {
        let r = regulator_cf(2, 1e-9).unwrap();
        assert!((r.value - 0.881_373_587_0).abs() < 1e-9);
        assert_eq!(r.unit_norm, Some(-1));
        let r = regulator_cf(5, 1e-10).unwrap();
        assert!((r.value - 0.481_211_825_1).abs() < 1e-9);
        let r = regulator_cf(3, 1e-10).unwrap();
        assert!((r.value - 1.316_957_896_9).abs() < 1e-9);
        assert_eq!(r.unit_norm, Some(1));
        assert!(regulator_cf(3, 0.0).is_err());
        assert!(regulator_cf(3, -1.0).is_err());
    }

    #[test]
    fn regulator_reproduces_fundamental() {
        for d in sqfree_upto(200) {
            let r = regulator_cf(d, 1e-10).unwrap();
            let f = fundamental_solution(d).unwrap();
            let ln_pell = ln_unit(&f.x1, &f.y1, d);
            // Pell solution is ε, ε^2, ε^3 or ε^6
            let ratio = ln_pell / r.value;
            let k = ratio.round();
            assert!([1.0, 2.0, 3.0, 6.0].contains(&k), "d={d} ratio={ratio}");
            assert!((ratio - k).abs() < 1e-8, "d={d} ratio={ratio}");
            assert!(((r.value * k).exp() / ln_pell.exp() - 1.0).abs() < 1e-8 || ln_pell > 700.0);
        }
    }

    #[test]
    fn scan_examples() {
        assert_eq!(
            find_solution_below(2, &BigUint::from(10u32)).unwrap(),
            Some((3u32.into(), 2u32.into()))
        );
        assert_eq!(find_solution_below(2, &BigUint::one()).unwrap(), None);
        assert_eq!(find_solution_below(61, &BigUint::from(1_000_000u32)).unwrap(), None);
    }

    #[test]
    fn scan_brackets_fundamental() {
        for d in sqfree_upto(200) {
            let f = fundamental_solution(d).unwrap();
            assert_eq!(find_solution_below(d, &f.y1).unwrap(), Some((f.x1.clone(), f.y1.clone())));
            assert_eq!(find_solution_below(d, &(&f.y1 - 1u32)).unwrap(), None, "d={d}");
        }
    }

    #[test]
    fn convergents_are_unimodular() {
        for d in sqfree_upto(200) {
            let mut prev: Option<Convergent> = None;
            for c in Convergents::of_sqrt(d).unwrap().take(60) {
                if let Some(pr) = &prev {
                    let lhs = num_bigint::BigInt::from(c.p.clone()) * num_bigint::BigInt::from(pr.q.clone());
                    let rhs = num_bigint::BigInt::from(pr.p.clone()) * num_bigint::BigInt::from(c.q.clone());
                    let det = lhs - rhs;
                    assert!(det == 1.into() || det == (-1).into(), "d={d}");
                    assert!(c.q > pr.q || (c.index == 1 && c.q == pr.q));
                }
                prev = Some(c);
            }
        }
    }

    #[test]
    fn scaled_provider() {
        let p = ScaledRegulator { inner: CfRegulator::default(), multiple: 3 };
        let r = p.regulator(2).unwrap();
        assert!((r.value - 3.0 * 0.881_373_587_019_543).abs() < 1e-9);
    }
}
