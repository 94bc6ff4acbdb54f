use super::{SmoothWindowRecord, Source};
use crate::error::{Error, Result};

/// Largest memory the sieve may take, in entries.
const SIEVE_MAX: u64 = 1 << 31;

/// `lpf[n] = P(n)` for `n <= limit`, with `lpf[0] = lpf[1] = 1`.
pub fn largest_prime_sieve(limit: u64) -> Result<Vec<u32>> {
    if limit >= SIEVE_MAX {
        return Err(Error::Parameter(format!("sieve limit {limit} too large")));
    }
    let n = limit as usize;
    let mut lpf = vec![1u32; n + 1];
    for p in 2..=n {
        if lpf[p] == 1 {
            for m in (p..=n).step_by(p) {
                lpf[m] = p as u32;
            }
        }
    }
    Ok(lpf)
}

fn record(n: usize, length: usize, lpf: &[u32]) -> SmoothWindowRecord {
    SmoothWindowRecord {
        n: n as u128,
        length: length as u32,
        p_max: u64::from(*lpf[n..n + length].iter().max().expect("non-empty window")),
        source: Source::BruteForce,
        d: None,
        index: None,
    }
}

/// Every `n` with `k < n <= max_n` whose window of `min_len` integers is
/// `k`-smooth.
pub fn brute_force_windows(k: u64, max_n: u64, min_len: u32) -> Result<Vec<SmoothWindowRecord>> {
    if min_len == 0 {
        return Err(Error::Parameter("window length must be positive".into()));
    }
    let lpf = largest_prime_sieve(max_n + u64::from(min_len))?;
    let len = min_len as usize;
    let mut out = Vec::new();
    // run = number of consecutive smooth integers ending at the current one
    let mut run = 0usize;
    for (x, &p) in lpf.iter().enumerate().skip(1) {
        run = if u64::from(p) <= k { run + 1 } else { 0 };
        if run >= len {
            let n = x + 1 - len;
            if n as u64 > k && n as u64 <= max_n {
                out.push(record(n, len, &lpf));
            }
        }
    }
    Ok(out)
}

/// For each `k` in `1..=k_max`, the longest `k`-smooth run of integers
/// starting above `k` inside the sieve, as a record (absent if none).
pub fn longest_windows(lpf: &[u32], k_max: u64) -> Vec<Option<SmoothWindowRecord>> {
    (1..=k_max)
        .map(|k| {
            let first = k as usize + 1;
            let mut best: Option<(usize, usize)> = None;
            let mut start = first;
            for x in first..lpf.len() {
                if u64::from(lpf[x]) > k {
                    start = x + 1;
                } else if best.is_none_or(|(_, l)| x + 1 - start > l) {
                    best = Some((start, x + 1 - start));
                }
            }
            best.map(|(n, l)| record(n, l, lpf))
        })
        .collect()
}
