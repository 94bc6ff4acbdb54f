//! Compact representations of units of `Z[√d]`.
//!
//! A unit `β` of log-height `L` is stored as `β = ∏_{j=0}^{k-1} α_j^(2^j)`
//! with `α_j = (a_j + b_j√d)/c_j`. The terms come out of a doubling walk on
//! the principal cycle: at level `i` the walk sits on a reduced ideal
//! `b_i = γ_i·O` at distance close to `L/2^(k-1-i)`, and
//! `b_{i} = α·b_{i-1}^2` defines the next factor. Every partial product
//! `γ_i` is an algebraic integer, which is what makes exact and modular
//! evaluation cheap.

mod infra;
mod modular;

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::contfrac::check_nonsquare;
use crate::error::{Error, Result};
use crate::numeric::ln_quadratic;

use infra::{Infra, QuadElem, Walker};

pub use modular::{eval_mod, eval_mod_with_budget, valuation, Coordinate, ResiduePair, Valuation, LIFT_BUDGET};

/// Default refusal cutoff for [`CompactRep::eval_exact`], in decimal digits.
pub const EXACT_DIGIT_CUTOFF: u64 = 1_000_000;

/// Denominator bound: every `c_j` is below this multiple of `d`. Each `c_j`
/// divides the squared norm of a reduced ideal, which is below `4d`.
pub const DENOM_BOUND_FACTOR: u64 = 4;

/// Numerator bound: every `|a_j|`, `|b_j|` is at most this multiple of `d^2`.
/// A term is `c_j` times a quotient of neighbouring distances, and one cycle
/// step can span up to `ln(2√d)`, so numerators are not linear in `d`.
pub const COEFF_BOUND_FACTOR: u64 = 16;

/// How many cycle steps either side of the final ideal are searched for `O`.
const LANDING_WINDOW: usize = 6;

/// One factor `(a + b√d)/c` of a compact representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

/// `∏ terms[j]^(2^j)`, a unit of `Z[√d]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompactRep {
    d: u64,
    terms: Vec<Term>,
}

impl CompactRep {
    /// The representation of 1.
    pub fn identity(d: u64) -> Self {
        CompactRep { d, terms: Vec::new() }
    }

    /// Assembles a representation from raw terms, checking only that every
    /// denominator is positive.
    pub fn from_terms(d: u64, terms: Vec<Term>) -> Result<Self> {
        check_nonsquare(d)?;
        if terms.iter().any(|t| !t.c.is_positive()) {
            return Err(Error::Domain("term denominators must be positive".into()));
        }
        Ok(CompactRep { d, terms })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn k_terms(&self) -> usize {
        self.terms.len()
    }

    /// `ln|β| = Σ 2^j ln|α_j|`.
    pub fn log_height(&self) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, t)| 2f64.powi(j as i32) * ln_quadratic(&t.a, &t.b, &t.c, self.d))
            .sum()
    }

    /// Norm of the represented unit. Only the exponent-1 term can carry a sign.
    pub fn norm_sign(&self) -> i8 {
        match self.terms.first() {
            None => 1,
            Some(t) => {
                let n = &t.a * &t.a - BigInt::from(self.d) * &t.b * &t.b;
                if n.is_negative() {
                    -1
                } else {
                    1
                }
            }
        }
    }

    /// Decimal digits of the larger coordinate, estimated from the height.
    pub fn estimated_digits(&self) -> u64 {
        (self.log_height().max(0.0) / std::f64::consts::LN_10).ceil() as u64 + 1
    }

    /// Bound on the number of terms for a unit of log-height `log_height`.
    pub fn max_terms_for(log_height: f64) -> usize {
        levels_for(log_height) + 1
    }

    /// Checks the committed size bounds: `k_terms <= ⌈log2 max(L, 1)⌉ + 1`,
    /// `c_j < DENOM_BOUND_FACTOR · d` and `|a_j|, |b_j| <= COEFF_BOUND_FACTOR · d^2`.
    pub fn check_size_bounds(&self) -> Result<()> {
        let max_terms = Self::max_terms_for(self.log_height());
        if self.terms.len() > max_terms {
            return Err(Error::Construction(format!(
                "{} terms exceeds bound {max_terms}",
                self.terms.len()
            )));
        }
        let d = BigInt::from(self.d);
        let denom_bound = (&d * DENOM_BOUND_FACTOR).max(BigInt::from(2));
        let bound = &d * &d * COEFF_BOUND_FACTOR;
        for (j, t) in self.terms.iter().enumerate() {
            if t.a.abs() > bound || t.b.abs() > bound || t.c >= denom_bound {
                return Err(Error::Construction(format!(
                    "term {j} ({}, {}, {}) exceeds coefficient bounds ({bound}, {denom_bound})",
                    t.a, t.b, t.c
                )));
            }
        }
        Ok(())
    }

    /// Exact `(x, y)` with `β = x + y√d`, refusing above `cutoff_digits`.
    pub fn eval_exact_with_cutoff(&self, cutoff_digits: u64) -> Result<(BigUint, BigUint)> {
        let digits = self.estimated_digits();
        if digits > cutoff_digits {
            return Err(Error::EvalRefused { digits, cutoff: cutoff_digits });
        }
        let big_d = BigInt::from(self.d);
        let (mut x, mut y) = (BigInt::one(), BigInt::zero());
        for t in self.terms.iter().rev() {
            let sx: BigInt = &x * &x + &big_d * &y * &y;
            let sy: BigInt = &x * &y * 2;
            let nx = &sx * &t.a + &big_d * &sy * &t.b;
            let ny = &sx * &t.b + &sy * &t.a;
            let (qx, rx) = nx.div_rem(&t.c);
            let (qy, ry) = ny.div_rem(&t.c);
            if !rx.is_zero() || !ry.is_zero() {
                return Err(Error::Domain("partial product is not integral".into()));
            }
            x = qx;
            y = qy;
        }
        match (x.to_biguint(), y.to_biguint()) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::Domain("represented value is not a unit above 1".into())),
        }
    }

    pub fn eval_exact(&self) -> Result<(BigUint, BigUint)> {
        self.eval_exact_with_cutoff(EXACT_DIGIT_CUTOFF)
    }

    /// Line record `d;k_terms;a_1,b_1,c_1;...` (terms in ascending exponent).
    pub fn to_record(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CompactRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.d, self.terms.len())?;
        for t in &self.terms {
            write!(f, ";{},{},{}", t.a, t.b, t.c)?;
        }
        Ok(())
    }
}

impl FromStr for CompactRep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Domain(format!("malformed compact record ({why}): {s}"));
        let mut fields = s.trim().split(';');
        let d: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("d"))?;
        let k: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| bad("k_terms"))?;
        let terms = fields
            .map(|f| {
                let parts: Vec<&str> = f.split(',').collect();
                match parts.as_slice() {
                    [a, b, c] => Ok(Term {
                        a: a.parse().map_err(|_| bad("a"))?,
                        b: b.parse().map_err(|_| bad("b"))?,
                        c: c.parse().map_err(|_| bad("c"))?,
                    }),
                    _ => Err(bad("term")),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if terms.len() != k {
            return Err(bad("term count"));
        }
        CompactRep::from_terms(d, terms)
    }
}

fn levels_for(log_height: f64) -> usize {
    if log_height <= 1.0 {
        0
    } else {
        log_height.log2().ceil() as usize
    }
}

/// Default acceptance window between the requested log-height and the one
/// actually reached.
pub fn default_tolerance(log_target: f64) -> f64 {
    1e-6 * log_target.max(1.0)
}

/// Compact representation of the unit of `Z[√d]` whose logarithm is the
/// closest to `log_target`; fails unless that logarithm is within
/// [`default_tolerance`] of the target.
pub fn build_compact(d: u64, log_target: f64) -> Result<CompactRep> {
    build_compact_with_tolerance(d, log_target, default_tolerance(log_target))
}

pub fn build_compact_with_tolerance(d: u64, log_target: f64, tolerance: f64) -> Result<CompactRep> {
    check_nonsquare(d)?;
    if !log_target.is_finite() || log_target <= 0.0 {
        return Err(Error::Construction(format!("log target must be positive, got {log_target}")));
    }
    let infra = Infra::new(d);
    let levels = levels_for(log_target);
    let target_at = |i: usize| log_target / 2f64.powi((levels - i) as i32);

    // level 0: walk from O
    let mut w = Walker { ideal: infra.unit_ideal(), gen: QuadElem::one(), dist: 0.0 };
    infra.walk_to(&mut w, target_at(0));
    let mut gen = w.gen;
    gen.make_positive(d);
    let mut dist = gen.ln_abs(d);
    let mut ideal = w.ideal;
    let mut factors = vec![gen];

    for i in 1..=levels {
        let (g, sq) = infra.square(&ideal);
        let mut w = Walker {
            ideal: sq,
            gen: QuadElem::one(),
            dist: 2.0 * dist - g.to_f64().unwrap_or(f64::INFINITY).ln(),
        };
        infra.reduce(&mut w);
        infra.walk_to(&mut w, target_at(i));
        if i == levels {
            land_on_unit_ideal(&infra, &mut w, log_target)?;
        }
        let mut alpha = w.gen;
        alpha.div_int(&g);
        alpha.make_positive(d);
        dist = 2.0 * dist + alpha.ln_abs(d);
        ideal = w.ideal;
        factors.push(alpha);
    }
    if levels == 0 && !infra.is_unit_ideal(&ideal) {
        let mut w = Walker { ideal, gen: factors.pop().unwrap(), dist };
        land_on_unit_ideal(&infra, &mut w, log_target)?;
        w.gen.make_positive(d);
        dist = w.gen.ln_abs(d);
        factors.push(w.gen);
    }

    if (dist - log_target).abs() > tolerance {
        return Err(Error::Construction(format!(
            "nearest unit of Z[√{d}] has log-height {dist}, target {log_target} (tolerance {tolerance:e})"
        )));
    }
    let terms = factors
        .into_iter()
        .rev()
        .map(|e| Term { a: e.a, b: e.b, c: e.c })
        .collect();
    let rep = CompactRep { d, terms };
    rep.check_size_bounds()?;
    Ok(rep)
}

/// Final adjustment: among the cycle neighbours of the current ideal, move
/// to a copy of `O` whose distance is closest to `target`.
fn land_on_unit_ideal(infra: &Infra, w: &mut Walker, target: f64) -> Result<()> {
    let mut best: Option<Walker> = infra.is_unit_ideal(&w.ideal).then(|| w.clone());
    let mut fwd = w.clone();
    let mut back = w.clone();
    for _ in 0..LANDING_WINDOW {
        infra.forward(&mut fwd);
        infra.backward(&mut back);
        for cand in [&fwd, &back] {
            if infra.is_unit_ideal(&cand.ideal)
                && best.as_ref().is_none_or(|b| (cand.dist - target).abs() < (b.dist - target).abs())
            {
                best = Some(cand.clone());
            }
        }
    }
    match best {
        Some(b) => {
            *w = b;
            Ok(())
        }
        None => Err(Error::Construction(format!(
            "no unit of Z[√{}] near log-height {target}",
            infra.d
        ))),
    }
}

/// `rep^n`, rebuilt through the infrastructure at log-height `n·L` so the
/// size bounds hold for every power.
pub fn power_compact(rep: &CompactRep, n: u64) -> Result<CompactRep> {
    match n {
        0 => Ok(CompactRep::identity(rep.d)),
        1 => Ok(rep.clone()),
        _ => {
            if rep.terms.is_empty() {
                return Ok(rep.clone());
            }
            build_compact(rep.d, n as f64 * rep.log_height())
        }
    }
}

/// Compact representation of the solution `x + y√d` given exactly.
pub fn compact_from_solution(d: u64, x: &BigUint, y: &BigUint) -> Result<CompactRep> {
    build_compact(d, crate::numeric::ln_unit(x, y, d))
}
