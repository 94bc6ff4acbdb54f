use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use super::params::{DCursor, SearchParams};
use super::{SmoothWindowRecord, Source};
use crate::arith::PrimeTable;
use crate::contfrac::RegulatorProvider;
use crate::error::{Error, Result};
use crate::pell::smooth_solutions;

/// Equations handed to the worker pool at a time.
pub(crate) const BATCH: usize = 1024;

/// `P(Π_{n,len})` if every member splits over `primes`.
fn window_max_over(primes: &[u64], n: u128, len: u32) -> Option<u64> {
    let mut best = 1;
    for i in 0..u128::from(len) {
        let mut rest = n.checked_add(i)?;
        for &p in primes {
            if rest == 1 {
                break;
            }
            let q = u128::from(p);
            if rest % q == 0 {
                best = best.max(p);
                while rest % q == 0 {
                    rest /= q;
                }
            }
        }
        if rest != 1 {
            return None;
        }
    }
    Some(best)
}

/// All pairs `(z, z+1)` of `p_t`-smooth integers, from the equations
/// `x^2 - d·y^2 = 1` with `d` a product of the first `t` primes and
/// `x = 2z + 1`.
pub fn lehmer_search(
    t: usize,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
) -> Result<Vec<SmoothWindowRecord>> {
    if t == 0 {
        return Err(Error::Parameter("t must be at least 1".into()));
    }
    if t > 20 {
        return Err(Error::Parameter(format!("t = {t} gives too many coefficients for the pair search")));
    }
    let primes = table
        .first(t)
        .ok_or_else(|| Error::Parameter(format!("prime table up to {} does not reach p_{t}", table.limit())))?;
    let ds: Vec<u128> = (1u32..1 << t)
        .map(|mask| {
            primes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| u128::from(p))
                .product()
        })
        .collect();
    let results: Vec<Result<Vec<SmoothWindowRecord>>> = ds
        .par_iter()
        .map(|&d| {
            let d64 = coefficient_u64(d)?;
            let report = smooth_solutions(d64, t, false, provider, table)?;
            let mut out = Vec::new();
            for s in report.solutions {
                if (&s.x % 2u32).is_one() {
                    let z: BigUint = (&s.x - 1u32) / 2u32;
                    let Some(z) = z.to_u128().filter(|&z| z >= 1) else { continue };
                    if let Some(p_max) = window_max_over(primes, z, 2) {
                        out.push(SmoothWindowRecord {
                            n: z,
                            length: 2,
                            p_max,
                            source: Source::Lehmer,
                            d: Some(d),
                            index: Some(s.index),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut collector = Collector::new(table);
    for r in results {
        for rec in r? {
            collector.insert(rec)?;
        }
    }
    Ok(collector.into_sorted())
}

fn coefficient_u64(d: u128) -> Result<u64> {
    u64::try_from(d)
        .ok()
        .filter(|&d| d < crate::contfrac::MAX_D)
        .ok_or_else(|| Error::Domain(format!("coefficient {d} outside the supported range below 2^62")))
}

/// Windows produced by the single equation `X^2 - D·Y^2 = 1`: every smooth
/// solution `X` and pair start `i` give the candidate `n = X - 1 - i`, kept
/// when `P(Π_{n,m}) <= p_t`.
pub fn process_equation(
    d: u128,
    params: &SearchParams,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
) -> Result<Vec<SmoothWindowRecord>> {
    let d64 = coefficient_u64(d)?;
    let primes = table.first(params.t).expect("params were derived from this table");
    let report = smooth_solutions(d64, params.t, true, provider, table)?;
    let mut out = Vec::new();
    for s in report.solutions {
        for &i in &params.pair_starts {
            let offset = BigUint::from(i + 1);
            if s.x <= offset {
                continue;
            }
            let n = &s.x - offset;
            match n.to_u128() {
                Some(n) => {
                    if let Some(p_max) = window_max_over(primes, n, params.m) {
                        out.push(SmoothWindowRecord {
                            n,
                            length: params.m,
                            p_max,
                            source: Source::BauerBennett,
                            d: Some(d),
                            index: Some(s.index),
                        });
                    }
                }
                None => {
                    let p_t = params.p_t();
                    let smooth = (0..params.m).all(|j| {
                        table.is_smooth(&BigInt::from(&n + j), p_t).unwrap_or(false)
                    });
                    if smooth {
                        return Err(Error::Integrity(format!(
                            "window at n = {n} from D = {d} is smooth but exceeds the record range"
                        )));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Serial sink for records: re-verifies each one and drops repeats of a
/// `(n, length)` key, keeping the first arrival.
pub struct Collector<'a> {
    table: &'a PrimeTable,
    seen: HashSet<(u128, u32)>,
    records: Vec<SmoothWindowRecord>,
}

impl<'a> Collector<'a> {
    pub fn new(table: &'a PrimeTable) -> Self {
        Collector { table, seen: HashSet::new(), records: Vec::new() }
    }

    /// Registers a key that is already persisted.
    pub fn mark_seen(&mut self, key: (u128, u32)) {
        self.seen.insert(key);
    }

    /// `Ok(true)` if the record is new.
    pub fn insert(&mut self, rec: SmoothWindowRecord) -> Result<bool> {
        rec.verify(self.table)?;
        if !self.seen.insert(rec.key()) {
            return Ok(false);
        }
        self.records.push(rec);
        Ok(true)
    }

    /// Records accepted since the last call.
    pub fn drain(&mut self) -> Vec<SmoothWindowRecord> {
        std::mem::take(&mut self.records)
    }

    pub fn into_sorted(mut self) -> Vec<SmoothWindowRecord> {
        self.records.sort();
        self.records
    }
}

/// Runs equations in parallel, returning per-equation results in order.
pub(crate) fn process_batch(
    ds: &[u128],
    params: &SearchParams,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
) -> Vec<Result<Vec<SmoothWindowRecord>>> {
    ds.par_iter().map(|&d| process_equation(d, params, provider, table)).collect()
}

/// All windows of length `m` with `P(Π_{n,m}) <= p_t`, from every equation
/// after `resume` (or all of them). The first failing equation aborts the run.
pub fn bb_search(
    params: &SearchParams,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
    resume: Option<&DCursor>,
) -> Result<Vec<SmoothWindowRecord>> {
    let mut iter = params.enumerate(resume)?;
    let mut collector = Collector::new(table);
    loop {
        let ds: Vec<u128> = iter.by_ref().take(BATCH).map(|(d, _)| d).collect();
        if ds.is_empty() {
            break;
        }
        for (d, r) in ds.iter().zip(process_batch(&ds, params, provider, table)) {
            for rec in r.map_err(|e| Error::Integrity(format!("equation D = {d} failed: {e}")))? {
                collector.insert(rec)?;
            }
        }
    }
    Ok(collector.into_sorted())
}
