//! Campaign drivers: Lehmer's pair search, the windowed search over Pell
//! coefficients, brute-force oracles, record stores with checkpoints, and the
//! assembly of `f(k)` from evidence.

mod assemble;
mod brute;
mod drivers;
mod params;
mod store;

use std::fmt;
use std::str::FromStr;

pub use assemble::{
    assemble_f, brute_witnesses, known_f, small_campaigns, Campaign, FValue, DESK_CAMPAIGNS, KNOWN_F_MAX_K,
};
pub use brute::{brute_force_windows, largest_prime_sieve, longest_windows};
pub use drivers::{bb_search, lehmer_search, process_equation, Collector};
pub use params::{count_equations, derive_params, pair_starts, DCursor, DIter, SearchParams};
pub use store::{
    read_store, run_campaign, CampaignOptions, CampaignSummary, Checkpoint, RecordStore,
    DEFAULT_CHECKPOINT_EVERY,
};

use crate::arith::{window_largest_prime, PrimeTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Lehmer,
    BauerBennett,
    BruteForce,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Lehmer => "lehmer",
            Source::BauerBennett => "bauer_bennett",
            Source::BruteForce => "brute_force",
        }
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lehmer" => Ok(Source::Lehmer),
            "bauer_bennett" => Ok(Source::BauerBennett),
            "brute_force" => Ok(Source::BruteForce),
            _ => Err(Error::Domain(format!("unknown record source {s:?}"))),
        }
    }
}

/// A window `n, n+1, …, n+length-1` with `P(Π) = p_max`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmoothWindowRecord {
    pub n: u128,
    pub length: u32,
    pub p_max: u64,
    pub source: Source,
    /// Pell coefficient and solution index that produced the window.
    pub d: Option<u128>,
    pub index: Option<u64>,
}

impl SmoothWindowRecord {
    /// Recomputes `P(Π_{n,length})` and compares it with `p_max`.
    pub fn verify(&self, table: &PrimeTable) -> Result<()> {
        let fail = |why: String| Error::Integrity(format!("record {self} rejected: {why}"));
        if self.n == 0 || self.length == 0 {
            return Err(fail("empty window or n = 0".into()));
        }
        let actual = match table.window_smooth_max(self.n, self.length) {
            Some(p) => p,
            // rough windows are only factored where trial division is cheap
            None if self.n + u128::from(self.length) < 1 << 40 => {
                window_largest_prime(self.n as u64, u64::from(self.length))
            }
            None => return Err(fail("window does not split over the prime table".into())),
        };
        if actual != self.p_max {
            return Err(fail(format!("largest prime is {actual}")));
        }
        Ok(())
    }

    pub fn key(&self) -> (u128, u32) {
        (self.n, self.length)
    }
}

impl fmt::Display for SmoothWindowRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "WINDOW {} {} {} {} {} {}",
            self.n,
            self.length,
            self.p_max,
            self.source.as_str(),
            self.d.unwrap_or(0),
            self.index.unwrap_or(0)
        )
    }
}

impl FromStr for SmoothWindowRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("malformed record line {line:?}"));
        let f: Vec<&str> = line.split(' ').collect();
        let [tag, n, length, p_max, source, d, index] = f.as_slice() else {
            return Err(bad());
        };
        if *tag != "WINDOW" {
            return Err(bad());
        }
        let d: u128 = d.parse().map_err(|_| bad())?;
        let index: u64 = index.parse().map_err(|_| bad())?;
        Ok(SmoothWindowRecord {
            n: n.parse().map_err(|_| bad())?,
            length: length.parse().map_err(|_| bad())?,
            p_max: p_max.parse().map_err(|_| bad())?,
            source: source.parse()?,
            d: (d != 0).then_some(d),
            index: (index != 0).then_some(index),
        })
    }
}
