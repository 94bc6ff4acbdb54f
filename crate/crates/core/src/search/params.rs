//! Parameters of the windowed search and the enumeration of its Pell
//! coefficients.
//!
//! For a window of length `m` the indices `i ≡ 0, 1 (mod 4)` with
//! `i + 2 <= m - 1` start disjoint pairs `(i, i + 2)`. The first `t0 = π(m-1)`
//! primes may divide several members of the window; each of the remaining
//! `t - t0` primes divides at most one, so some pair product
//! `(n+i)(n+i+2) = D·y^2` has `D` built from any of the small primes and at
//! most `N` of the large ones.

use std::fmt;

use crate::arith::PrimeTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchParams {
    pub m: u32,
    pub t: usize,
    pub t0: usize,
    pub pair_starts: Vec<u32>,
    /// Most large primes allowed in one coefficient.
    pub n_upper: usize,
    /// Number of coefficients `D > 1`.
    pub count: u128,
    lower: Vec<u64>,
    upper: Vec<u64>,
}

/// `⌊m/4⌋ + ⌊(m+1)/4⌋` starts `i ≡ 0, 1 (mod 4)` with `i + 2 <= m - 1`.
pub fn pair_starts(m: u32) -> Vec<u32> {
    (0..m.saturating_sub(2)).filter(|i| i % 4 < 2).collect()
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc = C(n, i) before the update
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn derive_params(m: u32, t: usize, table: &PrimeTable) -> Result<SearchParams> {
    if m < 3 {
        return Err(Error::Parameter(format!("window length m = {m} must be at least 3")));
    }
    let t0 = table
        .prime_pi(u64::from(m) - 1)
        .ok_or_else(|| Error::Parameter(format!("prime table too small for m = {m}")))?;
    if t <= t0 {
        return Err(Error::Parameter(format!("t = {t} must exceed π(m - 1) = {t0}")));
    }
    let primes = table
        .first(t)
        .ok_or_else(|| Error::Parameter(format!("prime table up to {} does not reach p_{t}", table.limit())))?;
    let starts = pair_starts(m);
    let n_upper = (t - t0) / starts.len();
    let overflow = || Error::Parameter(format!("equation count for (m, t) = ({m}, {t}) overflows"));
    let mut sum: u128 = 0;
    for j in 0..=n_upper {
        sum = sum.checked_add(binomial(t - t0, j).ok_or_else(overflow)?).ok_or_else(overflow)?;
    }
    let count = 1u128
        .checked_shl(t0 as u32)
        .and_then(|p| p.checked_mul(sum))
        .ok_or_else(overflow)?
        - 1;
    Ok(SearchParams {
        m,
        t,
        t0,
        pair_starts: starts,
        n_upper,
        count,
        lower: primes[..t0].to_vec(),
        upper: primes[t0..].to_vec(),
    })
}

pub fn count_equations(m: u32, t: usize, table: &PrimeTable) -> Result<u128> {
    Ok(derive_params(m, t, table)?.count)
}

impl SearchParams {
    pub fn p_t(&self) -> u64 {
        *self.upper.last().expect("t > t0")
    }

    pub fn cursor_at(&self, position: u128) -> Result<DCursor> {
        if position > self.count {
            return Err(Error::Resume(format!(
                "cursor position {position} beyond the {} equations of (m, t) = ({}, {})",
                self.count, self.m, self.t
            )));
        }
        let lower_size = 1u128 << self.t0;
        // raw index 0 is D = 1, which is skipped
        let raw = position + 1;
        let mut block = raw / lower_size;
        let lower_mask = (raw % lower_size) as u64;
        let u = self.upper.len();
        let mut j = 0;
        loop {
            let layer = binomial(u, j).expect("fits: bounded by count");
            if block < layer || j > self.n_upper {
                break;
            }
            block -= layer;
            j += 1;
        }
        let upper_selection = if j > self.n_upper { Vec::new() } else { unrank_combination(u, j, block) };
        Ok(DCursor { position, lower_mask, upper_selection })
    }

    /// `D` for a cursor that is not at the end.
    pub fn coefficient(&self, c: &DCursor) -> u128 {
        let mut d: u128 = 1;
        for (i, &p) in self.lower.iter().enumerate() {
            if c.lower_mask >> i & 1 == 1 {
                d *= p as u128;
            }
        }
        for &k in &c.upper_selection {
            d *= self.upper[k] as u128;
        }
        d
    }

    /// Coefficients from `from` onwards, each paired with the cursor at
    /// which to resume after it.
    pub fn enumerate(&self, from: Option<&DCursor>) -> Result<DIter<'_>> {
        let cursor = match from {
            None => self.cursor_at(0)?,
            Some(c) => {
                let fresh = self.cursor_at(c.position)?;
                if &fresh != c {
                    return Err(Error::Resume(format!("cursor {c} is inconsistent with its position")));
                }
                fresh
            }
        };
        Ok(DIter { params: self, cursor })
    }

    fn advance(&self, c: &mut DCursor) {
        c.position += 1;
        c.lower_mask += 1;
        if c.lower_mask < 1 << self.t0 {
            return;
        }
        c.lower_mask = 0;
        let u = self.upper.len();
        if !next_combination(&mut c.upper_selection, u) {
            let j = c.upper_selection.len() + 1;
            c.upper_selection = if j > self.n_upper || j > u { Vec::new() } else { (0..j).collect() };
        }
    }
}

/// Lexicographic rank `r` among the `j`-subsets of `0..u`.
fn unrank_combination(u: usize, j: usize, mut r: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(j);
    let mut next = 0;
    for slot in 0..j {
        loop {
            let rest = binomial(u - next - 1, j - slot - 1).expect("bounded");
            if r < rest {
                break;
            }
            r -= rest;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

fn next_combination(c: &mut [usize], u: usize) -> bool {
    let j = c.len();
    for i in (0..j).rev() {
        if c[i] < u - j + i {
            c[i] += 1;
            for k in i + 1..j {
                c[k] = c[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Position in the coefficient enumeration: the lower primes chosen by
/// `lower_mask` (bit `i` for the `i`-th prime), the large primes by the
/// indices in `upper_selection`. Lower masks run fastest; selections go by
/// size, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DCursor {
    pub position: u128,
    pub lower_mask: u64,
    pub upper_selection: Vec<usize>,
}

impl fmt::Display for DCursor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} mask={:#b} upper={:?}", self.position, self.lower_mask, self.upper_selection)
    }
}

pub struct DIter<'a> {
    params: &'a SearchParams,
    cursor: DCursor,
}

impl Iterator for DIter<'_> {
    type Item = (u128, DCursor);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor.position >= self.params.count {
            return None;
        }
        let d = self.params.coefficient(&self.cursor);
        self.params.advance(&mut self.cursor);
        Some((d, self.cursor.clone()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.params.count - self.cursor.position).unwrap_or(usize::MAX);
        (left, Some(left))
    }
}
