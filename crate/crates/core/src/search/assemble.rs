use std::fmt;

use super::{bb_search, derive_params, largest_prime_sieve, lehmer_search, longest_windows, SmoothWindowRecord};
use crate::arith::PrimeTable;
use crate::contfrac::RegulatorProvider;
use crate::error::{Error, Result};

/// The complete record set of a search for windows of length `m` whose
/// largest prime is at most `p_t`. It settles `k`-smoothness for every
/// `k < p_{t+1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Campaign {
    pub m: u32,
    pub t: usize,
    pub next_prime: u64,
    pub records: Vec<SmoothWindowRecord>,
    pub complete: bool,
}

impl Campaign {
    pub fn new(
        m: u32,
        t: usize,
        table: &PrimeTable,
        records: Vec<SmoothWindowRecord>,
        complete: bool,
    ) -> Result<Self> {
        let next_prime = table
            .nth_prime(t + 1)
            .ok_or_else(|| Error::Parameter(format!("prime table does not reach p_{}", t + 1)))?;
        Ok(Campaign { m, t, next_prime, records, complete })
    }

    /// Windows of length 1 with no prime at all: only `n = 1`.
    pub fn trivial(table: &PrimeTable) -> Result<Self> {
        let one = SmoothWindowRecord {
            n: 1,
            length: 1,
            p_max: 1,
            source: super::Source::BruteForce,
            d: None,
            index: None,
        };
        Campaign::new(1, 0, table, vec![one], true)
    }

    pub fn covers(&self, k: u64) -> bool {
        self.complete && k < self.next_prime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FValue {
    Exact(u32),
    Interval { lower: u32, upper: Option<u32> },
}

impl fmt::Display for FValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FValue::Exact(v) => write!(f, "{v}"),
            FValue::Interval { lower, upper: Some(u) } => write!(f, "[{lower}, {u}]"),
            FValue::Interval { lower, upper: None } => write!(f, "[{lower}, inf)"),
        }
    }
}

/// Bounds on `f(k)`: a `k`-smooth window of length `ℓ` starting above `k`
/// gives `f(k) >= ℓ + 1`; a covering campaign for length `m` without such a
/// window gives `f(k) <= m`. Each `k` is decided on its own evidence.
pub fn assemble_f(k: u64, campaigns: &[Campaign], witnesses: &[SmoothWindowRecord]) -> Result<FValue> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let hit = |r: &SmoothWindowRecord| r.n > u128::from(k) && r.p_max <= k;
    let mut lower = 1;
    let mut best: Option<&SmoothWindowRecord> = None;
    for r in witnesses.iter().chain(campaigns.iter().flat_map(|c| &c.records)) {
        if hit(r) && r.length + 1 > lower {
            lower = r.length + 1;
            best = Some(r);
        }
    }
    let upper = campaigns
        .iter()
        .filter(|c| c.covers(k) && !c.records.iter().any(hit))
        .map(|c| c.m)
        .min();
    if let Some(u) = upper {
        if lower > u {
            let w = best.expect("lower bound above 1 has a witness");
            return Err(Error::Integrity(format!(
                "witness {w} contradicts the completed campaign for length {u} at k = {k}"
            )));
        }
        if lower == u {
            return Ok(FValue::Exact(u));
        }
    }
    Ok(FValue::Interval { lower, upper })
}

/// Windowed campaigns small enough to run in full on a desktop.
pub const DESK_CAMPAIGNS: &[(u32, usize)] = &[(3, 2), (4, 6), (5, 9), (6, 12)];

/// Upper-bound evidence for small `k`: the trivial length-1 campaign, the
/// pair search over 2-smooth integers and the windowed campaigns `which`.
pub fn small_campaigns(
    which: &[(u32, usize)],
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
) -> Result<Vec<Campaign>> {
    let mut out = vec![Campaign::trivial(table)?];
    out.push(Campaign::new(2, 1, table, lehmer_search(1, provider, table)?, true)?);
    for &(m, t) in which {
        let params = derive_params(m, t, table)?;
        out.push(Campaign::new(m, t, table, bb_search(&params, provider, table, None)?, true)?);
    }
    Ok(out)
}

/// The longest smooth window above `k` for each `k <= k_max`, from a sieve
/// up to `max_n`.
pub fn brute_witnesses(max_n: u64, k_max: u64) -> Result<Vec<SmoothWindowRecord>> {
    let lpf = largest_prime_sieve(max_n)?;
    Ok(longest_windows(&lpf, k_max).into_iter().flatten().collect())
}

/// Known values of `f(k)`, as inclusive ranges of `k`.
const KNOWN_F: &[(u64, u64, u32)] = &[
    (1, 1, 1),
    (2, 2, 2),
    (3, 4, 3),
    (5, 12, 4),
    (13, 40, 6),
    (41, 46, 7),
    (47, 58, 8),
    (59, 60, 9),
    (61, 113, 14),
    (114, 114, 13),
    (115, 150, 12),
    (151, 178, 14),
    (179, 222, 14),
    (223, 268, 16),
];

pub const KNOWN_F_MAX_K: u64 = 268;

pub fn known_f(k: u64) -> Option<u32> {
    KNOWN_F.iter().find(|&&(lo, hi, _)| lo <= k && k <= hi).map(|&(_, _, f)| f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_primes;
    use crate::search::Source;

    fn rec(n: u128, length: u32, p_max: u64) -> SmoothWindowRecord {
        SmoothWindowRecord { n, length, p_max, source: Source::BruteForce, d: None, index: None }
    }

    #[test]
    fn campaign_and_witness_cases() {
        let tb = sieve_primes(1000).unwrap();
        // a completed (14, 47) campaign whose only windows lie at or below k
        let c14 = Campaign::new(14, 47, &tb, vec![rec(100, 14, 199)], true).unwrap();
        let w318 = rec(318, 13, 163);
        assert_eq!(assemble_f(200, &[c14.clone()], &[w318.clone()]).unwrap(), FValue::Exact(14));
        let c16 = Campaign::new(16, 56, &tb, vec![], true).unwrap();
        let w1330 = rec(1330, 15, 223);
        assert_eq!(assemble_f(250, &[c16], &[w1330]).unwrap(), FValue::Exact(16));
        // k beyond coverage: only the lower bound remains
        assert_eq!(
            assemble_f(250, &[c14.clone()], &[w318.clone()]).unwrap(),
            FValue::Interval { lower: 14, upper: None }
        );
        // no campaign at all
        assert_eq!(assemble_f(200, &[], &[]).unwrap(), FValue::Interval { lower: 1, upper: None });
        // a witness longer than the campaign window contradicts it
        let long = rec(500, 14, 199);
        assert!(matches!(assemble_f(200, &[c14], &[long]), Err(Error::Integrity(_))));
    }

    #[test]
    fn small_k() {
        let tb = sieve_primes(1000).unwrap();
        let trivial = Campaign::trivial(&tb).unwrap();
        assert_eq!(assemble_f(1, &[trivial.clone()], &[]).unwrap(), FValue::Exact(1));
        assert!(!trivial.covers(2));
        // f(5) = 4: the (4, 6) search finds nothing above 5 that is 5-smooth
        let c = Campaign::new(4, 6, &tb, vec![rec(2, 4, 5), rec(5, 4, 7)], true).unwrap();
        assert_eq!(assemble_f(5, &[c], &[rec(8, 3, 5)]).unwrap(), FValue::Exact(4));
    }

    #[test]
    fn incomplete_campaign_gives_no_bound() {
        let tb = sieve_primes(1000).unwrap();
        let c = Campaign::new(4, 6, &tb, vec![], false).unwrap();
        assert_eq!(assemble_f(5, &[c], &[rec(8, 3, 5)]).unwrap(), FValue::Interval { lower: 4, upper: None });
    }

    #[test]
    fn known_table_shape() {
        assert_eq!(known_f(1), Some(1));
        assert_eq!(known_f(40), Some(6));
        assert_eq!(known_f(113), Some(14));
        assert_eq!(known_f(114), Some(13));
        assert_eq!(known_f(KNOWN_F_MAX_K), Some(16));
        assert_eq!(known_f(KNOWN_F_MAX_K + 1), None);
        for k in 1..=KNOWN_F_MAX_K {
            assert!(known_f(k).is_some(), "gap at {k}");
        }
    }
}
