//! Smooth solutions of a single Pell equation `x^2 - d·y^2 = 1`.
//!
//! Solutions are `x_n + y_n√d = β^n` for the base unit `β` obtained from a
//! regulator provider. Only the indices `n <= index_bound(t)` can carry a
//! smooth `y_n`. Each `y_n` is examined through its compact representation:
//! p-adic valuations give the candidate smooth part `z`, which is accepted
//! only if its logarithm matches `ln y_n` and `z ≡ y_n` modulo a few control
//! primes. Accepted `y_n` are then known exactly, and `x_n` follows as an
//! integer square root.
//!
//! The provider may return a multiple of the true regulator. Because
//! `y_1 | y_n`, a smooth `y_1` divides the smooth part of the base `y`, so a
//! convergent scan up to that smooth part either finds a smaller solution or
//! proves none with smooth `y` was skipped.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::arith::{Factorization, PrimeTable};
use crate::compact::{
    build_compact_with_tolerance, compact_from_solution, default_tolerance, eval_mod_with_budget,
    power_compact, valuation, CompactRep, Coordinate, ResiduePair, Valuation, LIFT_BUDGET,
};
use crate::contfrac::{check_nonsquare, scan_solution_below, RegulatorProvider};
use crate::error::{Error, Result};
use crate::numeric::ln_unit;

/// Upper limit on a probed p-adic valuation.
pub const VALUATION_CAP: u32 = 1 << 16;

/// Slack allowed between `ln z` and `ln y_n`. A rough cofactor is at least
/// 3, i.e. contributes more than `ln 3 > 1`.
const LOG_MATCH_SLACK: f64 = 0.5;

/// Largest index whose `y_n` can be `p_t`-smooth: `max((p_t + 1)/2, 12)`.
pub fn index_bound(t: usize, table: &PrimeTable) -> Result<u64> {
    let p = table.nth_prime(t).ok_or_else(|| {
        Error::Parameter(format!("prime table up to {} does not reach p_{t}", table.limit()))
    })?;
    Ok(((p + 1) / 2).max(12))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothSolution {
    pub d: u64,
    pub index: u64,
    pub x: BigUint,
    pub y: BigUint,
    pub y_factorization: Factorization,
    pub x_factorization: Option<Factorization>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertStatus {
    Unconditional,
    RecomputedFromSmaller,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certification {
    pub status: CertStatus,
    pub z_used: BigUint,
    pub convergents_scanned: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmoothReport {
    pub d: u64,
    pub t: usize,
    pub solutions: Vec<SmoothSolution>,
    pub certification: Certification,
}

/// Three primes just below `2^62` used to cross-check reconstructions.
pub fn control_primes() -> &'static [u64; 3] {
    static PRIMES: OnceLock<[u64; 3]> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = [0u64; 3];
        let mut c = (1u64 << 62) - 1;
        for slot in out.iter_mut() {
            while !crate::numeric::is_prime_u64(c) {
                c -= 2;
            }
            *slot = c;
            c -= 2;
        }
        out
    })
}

/// Base unit `β` of norm `+1` whose log-height is the smallest of
/// `e·R`, `e ∈ {1, 2, 3, 6}`, that lands on a unit of `Z[√d]`.
pub fn base_from_provider(d: u64, provider: &dyn RegulatorProvider) -> Result<CompactRep> {
    let reg = provider.regulator(d)?;
    if !(reg.value.is_finite() && reg.value > 0.0) {
        return Err(Error::Provider(format!("non-positive regulator {} for d = {d}", reg.value)));
    }
    for e in [1.0, 2.0, 3.0, 6.0] {
        let target = e * reg.value;
        let tol = default_tolerance(target).max(4.0 * e * reg.error_bound);
        match build_compact_with_tolerance(d, target, tol) {
            Ok(rep) if rep.norm_sign() == 1 => return Ok(rep),
            Ok(_) | Err(Error::Construction(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Provider(format!(
        "no unit of Z[√{d}] at small multiples of the provided regulator {}",
        reg.value
    )))
}

/// All `n <= index_bound(t)` with `p_t`-smooth `y_n` (and `x_n` when
/// `require_x_smooth`), certified by the convergent guard.
pub fn smooth_solutions(
    d: u64,
    t: usize,
    require_x_smooth: bool,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
) -> Result<SmoothReport> {
    check_nonsquare(d)?;
    let bound = index_bound(t, table)?;
    let primes = table.first(t).expect("index_bound checked the table");
    let base = base_from_provider(d, provider)?;

    let scan = scan_indices(&base, bound, primes, require_x_smooth, table)?;
    let cert = grh_guard(d, &base, &scan.z_max)?;
    let solutions = match cert.status {
        CertStatus::Unconditional => scan.solutions,
        CertStatus::RecomputedFromSmaller => {
            let (x1, y1) = scan_solution_below(d, &scan.z_max)?
                .solution
                .expect("guard reported a smaller solution");
            let base = compact_from_solution(d, &x1, &y1)?;
            scan_indices(&base, bound, primes, require_x_smooth, table)?.solutions
        }
    };
    for s in &solutions {
        verify_solution(s)?;
    }
    Ok(SmoothReport { d, t, solutions, certification: cert })
}

/// Scans convergents up to `z` for a solution smaller than `base`.
pub fn grh_guard(d: u64, base: &CompactRep, z: &BigUint) -> Result<Certification> {
    let scan = scan_solution_below(d, z)?;
    let status = match &scan.solution {
        Some((x, y)) if ln_unit(x, y, d) < base.log_height() - LOG_MATCH_SLACK => {
            CertStatus::RecomputedFromSmaller
        }
        _ => CertStatus::Unconditional,
    };
    Ok(Certification { status, z_used: z.clone(), convergents_scanned: scan.scanned })
}

struct IndexScan {
    solutions: Vec<SmoothSolution>,
    z_max: BigUint,
}

fn scan_indices(
    base: &CompactRep,
    bound: u64,
    primes: &[u64],
    require_x_smooth: bool,
    table: &PrimeTable,
) -> Result<IndexScan> {
    let d = base.d();
    let p_t = *primes.last().expect("t >= 1");
    let mut solutions = Vec::new();
    let mut z_max = BigUint::one();
    // y_a | y_{ab}: a rough y_a rules out every multiple of a.
    let mut rough = vec![false; bound as usize + 1];
    for n in 1..=bound {
        if rough[n as usize] {
            continue;
        }
        let rep = power_compact(base, n)?;
        let (z, smooth) = smooth_part_of_y(&rep, primes)?;
        if z > z_max {
            z_max = z.clone();
        }
        let Some(y_fact) = smooth else {
            for k in (n..=bound).step_by(n as usize) {
                rough[k as usize] = true;
            }
            continue;
        };
        let x = (BigUint::one() + BigUint::from(d) * &z * &z).sqrt();
        let x_fact = if require_x_smooth {
            let f = table.factorize(&BigInt::from(x.clone()))?;
            if !f.cofactor.is_one() || f.largest_prime().is_some_and(|p| p > p_t) {
                continue;
            }
            Some(f)
        } else {
            None
        };
        let sol = SmoothSolution { d, index: n, x, y: z, y_factorization: y_fact, x_factorization: x_fact };
        check_against_rep(&sol, &rep)?;
        solutions.push(sol);
    }
    Ok(IndexScan { solutions, z_max })
}

/// Smooth part `z` of `y` for the unit `rep`, and the factorization of `y`
/// when `y = z`.
fn smooth_part_of_y(rep: &CompactRep, primes: &[u64]) -> Result<(BigUint, Option<Factorization>)> {
    let d = rep.d();
    let big_l = rep.log_height();
    // y = (β - β^-1)/(2√d)
    let ln_y = big_l + (-(-2.0 * big_l).exp()).ln_1p() - std::f64::consts::LN_2 - 0.5 * (d as f64).ln();

    let probe_exp = 8u32;
    let modulus: BigUint = primes.iter().map(|&p| BigUint::from(p).pow(probe_exp)).product();
    let residues = eval_escalating(rep, &modulus)?;
    let mut factors = Vec::new();
    let mut ln_z = 0.0;
    for &p in primes {
        let big_p = BigUint::from(p);
        let mut r = &residues.y % big_p.pow(probe_exp);
        let v = if r.is_zero() {
            let cap = ((ln_y / (p as f64).ln()).floor().max(0.0) as u32 + 1).min(VALUATION_CAP);
            match valuation_escalating(rep, p, cap)? {
                Valuation::Exact(v) => v,
                Valuation::CapExceeded => return Err(Error::CapExceeded { prime: p, cap }),
            }
        } else {
            let mut v = 0;
            while (&r % &big_p).is_zero() {
                r /= &big_p;
                v += 1;
            }
            v
        };
        if v > 0 {
            factors.push((p, v));
            ln_z += v as f64 * (p as f64).ln();
        }
    }
    let smooth = Factorization { factors, cofactor: BigUint::one() };
    let z = smooth.smooth_value();
    if (ln_z - ln_y).abs() > LOG_MATCH_SLACK {
        return Ok((z, None));
    }
    for &q in control_primes() {
        let r = eval_escalating(rep, &BigUint::from(q))?;
        if r.y != &z % q {
            return Ok((z, None));
        }
    }
    Ok((z, Some(smooth)))
}

/// Cross-checks an exact solution against the compact representation of
/// the same unit.
fn check_against_rep(sol: &SmoothSolution, rep: &CompactRep) -> Result<()> {
    for &q in control_primes() {
        let r = eval_escalating(rep, &BigUint::from(q))?;
        if r.x != &sol.x % q || r.y != &sol.y % q {
            return Err(Error::Integrity(format!(
                "solution index {} of d = {} disagrees with its compact representation mod {q}",
                sol.index, sol.d
            )));
        }
    }
    Ok(())
}

fn verify_solution(s: &SmoothSolution) -> Result<()> {
    let lhs = &s.x * &s.x;
    let rhs = BigUint::from(s.d) * &s.y * &s.y + 1u32;
    if lhs != rhs || s.y_factorization.value() != s.y {
        return Err(Error::Integrity(format!(
            "({}, {}) is not a solution for d = {}",
            s.x, s.y, s.d
        )));
    }
    Ok(())
}

fn eval_escalating(rep: &CompactRep, modulus: &BigUint) -> Result<ResiduePair> {
    let mut budget = LIFT_BUDGET;
    loop {
        match eval_mod_with_budget(rep, modulus, budget) {
            Err(Error::Escalate { needed, .. }) if needed > budget => budget = needed,
            other => return other,
        }
    }
}

fn valuation_escalating(rep: &CompactRep, p: u64, cap: u32) -> Result<Valuation> {
    let mut budget = LIFT_BUDGET;
    loop {
        match valuation(rep, Coordinate::Y, p, cap, budget) {
            Err(Error::Escalate { needed, .. }) if needed > budget => budget = needed,
            other => return other,
        }
    }
}
