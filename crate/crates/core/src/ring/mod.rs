//! Chain arithmetic on a ring of boxes.
//!
//! A ring holds `m` integer box values `b_0 .. b_{m-1}` with `b_{m-1}`
//! adjacent to `b_0`. A chain is a run of `l` consecutive boxes starting at
//! some index and wrapping around. Filtering asks whether a chain, or every
//! prefix of a chain, stays within a quota derived from a [`ThresholdSpec`].
//!
//! Quotas are exact rationals and comparisons are done without floating
//! point, so a chain whose sum lands exactly on its quota is always viable.

mod exhaustive;
mod quota;
mod threshold;

pub(crate) use exhaustive::even_split;
pub use exhaustive::{verify_theorems_exhaustive, TheoremReport, TheoremViolation, ENUMERATION_LIMIT};
pub use quota::QuotaTable;
pub use threshold::{Direction, ThresholdMode, ThresholdSpec};

use crate::error::{Error, Result};

/// Resolves a possibly wrapped index onto the ring.
#[inline]
pub fn ring_index(i: usize, m: usize) -> usize {
    i % m
}

/// The box values for one (object, query) pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxSequence {
    values: Vec<i64>,
}

impl BoxSequence {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBoxes);
        }
        Ok(BoxSequence { values })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// Box at a cyclic index.
    #[inline]
    pub fn get(&self, i: usize) -> i64 {
        self.values[ring_index(i, self.values.len())]
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().sum()
    }

    /// The sequence rotated left by `k`, so that the new box 0 is old box `k`.
    pub fn rotated(&self, k: usize) -> BoxSequence {
        let m = self.m();
        BoxSequence {
            values: (0..m).map(|i| self.get(i + k)).collect(),
        }
    }
}

impl TryFrom<Vec<i64>> for BoxSequence {
    type Error = Error;

    fn try_from(values: Vec<i64>) -> Result<Self> {
        BoxSequence::new(values)
    }
}

/// `l` consecutive boxes starting at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    pub start: usize,
    pub len: usize,
}

impl Chain {
    pub fn new(start: usize, len: usize, m: usize) -> Result<Self> {
        if len == 0 || len > m {
            return Err(Error::InvalidChain { len, m });
        }
        Ok(Chain {
            start: ring_index(start, m),
            len,
        })
    }

    /// The `l'`-prefix: the first `l'` boxes of this chain.
    pub fn prefix(&self, len: usize) -> Chain {
        debug_assert!(len >= 1 && len <= self.len);
        Chain {
            start: self.start,
            len,
        }
    }

    /// The `l'`-suffix: the last `l'` boxes of this chain.
    pub fn suffix(&self, len: usize, m: usize) -> Chain {
        debug_assert!(len >= 1 && len <= self.len);
        Chain {
            start: ring_index(self.start + self.len - len, m),
            len,
        }
    }

    pub fn is_complete(&self, m: usize) -> bool {
        self.len == m
    }
}

fn check_chain(b: &BoxSequence, c: Chain) -> Result<()> {
    if c.len == 0 || c.len > b.m() {
        return Err(Error::InvalidChain { len: c.len, m: b.m() });
    }
    Ok(())
}

/// Sum of the boxes covered by `c`.
pub fn chain_sum(b: &BoxSequence, c: Chain) -> Result<i64> {
    check_chain(b, c)?;
    Ok((c.start..c.start + c.len).map(|j| b.get(j)).sum())
}

/// Quota for chain `c` on a ring of `m` boxes.
pub fn chain_quota(spec: &ThresholdSpec, c: Chain, m: usize) -> num_rational::Ratio<i64> {
    spec.quota(c.start, c.len, m)
}

/// Whether `c` satisfies its quota. Ties count as viable.
pub fn is_viable(b: &BoxSequence, spec: &ThresholdSpec, c: Chain) -> Result<bool> {
    let sum = chain_sum(b, c)?;
    Ok(spec.admits(sum, c.start, c.len, b.m()))
}

/// Outcome of an incremental prefix-viability check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefixCheck {
    Viable,
    /// The shortest non-viable prefix has this length.
    FailsAt(usize),
}

impl PrefixCheck {
    pub fn is_viable(self) -> bool {
        matches!(self, PrefixCheck::Viable)
    }
}

/// Checks the prefixes of the chain at `start` of lengths `1..=l` in order
/// and stops at the first one that misses its quota.
pub fn is_prefix_viable(
    b: &BoxSequence,
    spec: &ThresholdSpec,
    start: usize,
    l: usize,
) -> Result<PrefixCheck> {
    let m = b.m();
    Chain::new(start, l, m)?;
    let mut sum = 0;
    for len in 1..=l {
        sum += b.get(start + len - 1);
        if !spec.admits(sum, ring_index(start, m), len, m) {
            return Ok(PrefixCheck::FailsAt(len));
        }
    }
    Ok(PrefixCheck::Viable)
}

/// All starts whose chain of length `l` is prefix-viable, ascending.
///
/// A failure at prefix length `l'` from start `i` rules out every start in
/// `i .. i + l'` (concatenating a viable chain in front of any of them would
/// otherwise produce a viable `l'`-prefix), so those starts are skipped.
pub fn find_prefix_viable_starts(b: &BoxSequence, spec: &ThresholdSpec, l: usize) -> Result<Vec<usize>> {
    let m = b.m();
    Chain::new(0, l, m)?;
    let mut starts = Vec::new();
    let mut i = 0;
    while i < m {
        match is_prefix_viable(b, spec, i, l)? {
            PrefixCheck::Viable => {
                starts.push(i);
                i += 1;
            }
            PrefixCheck::FailsAt(len) => i += len,
        }
    }
    Ok(starts)
}

/// Single-box filter: some box meets its own quota.
pub fn pigeonhole_candidate(b: &BoxSequence, spec: &ThresholdSpec) -> Result<bool> {
    Ok(!find_prefix_viable_starts(b, spec, 1)?.is_empty())
}

/// Whether every prefix (`prefix = true`) or every suffix of the chain at
/// `start` with length `l` is viable (`viable = true`) or non-viable.
pub fn chain_has_property(
    b: &BoxSequence,
    spec: &ThresholdSpec,
    start: usize,
    l: usize,
    prefix: bool,
    viable: bool,
) -> Result<bool> {
    let m = b.m();
    let c = Chain::new(start, l, m)?;
    for len in 1..=l {
        let part = if prefix { c.prefix(len) } else { c.suffix(len, m) };
        if is_viable(b, spec, part)? != viable {
            return Ok(false);
        }
    }
    Ok(true)
}
