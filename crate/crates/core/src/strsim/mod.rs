//! Edit distance search with pivotal q-gram prefixes.
//!
//! Each string's grams are ranked by a global order; the first `kappa * tau + 1`
//! form its prefix and `tau + 1` position-disjoint prefix grams are its pivots.
//! Box `i` is a lower bound on the edit distance from pivot `i` to nearby
//! substrings of the other string, taken from symbol-presence signatures.

mod index;

pub use index::{StringIndex, StringInstance};

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};

/// Ranks grams by increasing frequency, then by bytes.
#[derive(Clone, Debug, Default)]
pub enum GramOrder {
    /// Occurrence counts over the data; unseen grams count as zero.
    Frequency(HashMap<Vec<u8>, u64>),
    /// Plain byte order.
    #[default]
    Lexicographic,
}

impl GramOrder {
    /// Counts every gram occurrence of length `kappa` in `strings`.
    pub fn from_data<S: AsRef<[u8]>>(strings: &[S], kappa: usize) -> Self {
        let mut freq: HashMap<Vec<u8>, u64> = HashMap::new();
        for s in strings {
            let s = s.as_ref();
            if s.len() >= kappa {
                for g in s.windows(kappa) {
                    *freq.entry(g.to_vec()).or_insert(0) += 1;
                }
            }
        }
        GramOrder::Frequency(freq)
    }

    pub fn frequency(&self, gram: &[u8]) -> u64 {
        match self {
            GramOrder::Frequency(f) => f.get(gram).copied().unwrap_or(0),
            GramOrder::Lexicographic => 0,
        }
    }
}

/// A gram occurrence: bytes, start position and global frequency.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionalGram<'a> {
    pub gram: &'a [u8],
    pub pos: usize,
    pub freq: u64,
}

impl PositionalGram<'_> {
    /// Global order ignoring position.
    pub fn key_cmp(&self, other: &PositionalGram<'_>) -> Ordering {
        (self.freq, self.gram).cmp(&(other.freq, other.gram))
    }

    fn full_cmp(&self, other: &PositionalGram<'_>) -> Ordering {
        self.key_cmp(other).then(self.pos.cmp(&other.pos))
    }
}

/// Every gram of `s`, sorted by global order and then position.
pub fn sorted_grams<'a>(s: &'a [u8], kappa: usize, order: &GramOrder) -> Vec<PositionalGram<'a>> {
    if kappa == 0 || s.len() < kappa {
        return Vec::new();
    }
    let mut grams: Vec<PositionalGram<'a>> = s
        .windows(kappa)
        .enumerate()
        .map(|(pos, gram)| PositionalGram {
            gram,
            pos,
            freq: order.frequency(gram),
        })
        .collect();
    grams.sort_by(|a, b| a.full_cmp(b));
    grams
}

/// Prefix length `kappa * tau + 1`.
pub fn prefix_size(kappa: usize, tau: usize) -> usize {
    kappa * tau + 1
}

/// The first `kappa * tau + 1` grams in global order, or `None` when `s` has
/// fewer grams than that.
pub fn extract_prefix_grams<'a>(
    s: &'a [u8],
    kappa: usize,
    tau: usize,
    order: &GramOrder,
) -> Option<Vec<PositionalGram<'a>>> {
    let mut grams = sorted_grams(s, kappa, order);
    let p = prefix_size(kappa, tau);
    if grams.len() < p {
        return None;
    }
    grams.truncate(p);
    Some(grams)
}

/// `tau + 1` position-disjoint grams from a prefix, sorted by position.
///
/// Grams are taken greedily in global order. If that leaves fewer than
/// `tau + 1`, the selection falls back to leftmost-first by position, which
/// always succeeds on a full prefix.
pub fn select_pivotal<'a>(
    prefix: &[PositionalGram<'a>],
    kappa: usize,
    tau: usize,
) -> Result<Vec<PositionalGram<'a>>> {
    let want = tau + 1;
    let disjoint = |chosen: &[PositionalGram<'_>], p: usize| chosen.iter().all(|c| c.pos + kappa <= p || p + kappa <= c.pos);
    let mut chosen: Vec<PositionalGram<'a>> = Vec::with_capacity(want);
    for g in prefix {
        if chosen.len() == want {
            break;
        }
        if disjoint(&chosen, g.pos) {
            chosen.push(g.clone());
        }
    }
    if chosen.len() < want {
        let mut by_pos: Vec<&PositionalGram<'a>> = prefix.iter().collect();
        by_pos.sort_by_key(|g| g.pos);
        chosen.clear();
        for g in by_pos {
            if chosen.len() == want {
                break;
            }
            if chosen.last().is_none_or(|c| c.pos + kappa <= g.pos) {
                chosen.push(g.clone());
            }
        }
    }
    if chosen.len() < want {
        return Err(Error::Invariant(format!(
            "prefix of {} grams holds fewer than {want} disjoint grams",
            prefix.len()
        )));
    }
    chosen.sort_by_key(|g| g.pos);
    Ok(chosen)
}

/// Symbol-presence signature: bit `(byte * 157) mod 128` for every byte.
pub fn signature(s: &[u8]) -> u128 {
    s.iter().fold(0u128, |acc, &b| acc | 1u128 << ((b as u32 * 157) % 128))
}

/// Signatures of every `kappa`-window of `s`, by start position.
pub fn window_signatures(s: &[u8], kappa: usize) -> Vec<u128> {
    if kappa == 0 || s.len() < kappa {
        return Vec::new();
    }
    s.windows(kappa).map(signature).collect()
}

/// Lower bound on the edit distance from `pivot` (starting at `pos` in its
/// own string) to any substring of `other` within `tau` positions.
///
/// Windows of length `min(kappa, range)` inside
/// `[max(0, pos - tau), min(pos + kappa - 1 + tau, |other| - 1)]` are compared
/// by signature. An exact window gives 0; otherwise the bound is
/// `max(1, ceil(H / 2))` for the smallest signature distance `H`.
pub fn box_lower_bound(pivot: &[u8], pos: usize, other: &[u8], tau: usize) -> i64 {
    box_lower_bound_with(pivot, pos, other, tau, None)
}

pub(crate) fn box_lower_bound_with(
    pivot: &[u8],
    pos: usize,
    other: &[u8],
    tau: usize,
    other_sigs: Option<&[u128]>,
) -> i64 {
    let kappa = pivot.len();
    if other.is_empty() || kappa == 0 {
        return 0;
    }
    let lo = pos.saturating_sub(tau);
    let hi = (pos + kappa - 1 + tau).min(other.len() - 1);
    if lo > hi {
        return 0;
    }
    let w = kappa.min(hi - lo + 1);
    let ps = signature(pivot);
    let mut best = u32::MAX;
    for u in lo..=hi + 1 - w {
        let win = &other[u..u + w];
        if w == kappa && win == pivot {
            return 0;
        }
        let ws = match other_sigs {
            Some(sigs) if w == kappa => sigs[u],
            _ => signature(win),
        };
        best = best.min((ps ^ ws).count_ones());
    }
    i64::from(best.div_ceil(2).max(1))
}

/// Unbanded edit distance.
pub fn edit_distance(x: &[u8], q: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=q.len()).collect();
    let mut cur = vec![0; q.len() + 1];
    for i in 1..=x.len() {
        cur[0] = i;
        for j in 1..=q.len() {
            let sub = prev[j - 1] + usize::from(x[i - 1] != q[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[q.len()]
}

/// Whether `ed(x, q) <= tau`, by a band of width `2 tau + 1` with early exit.
pub fn verify_edit_distance(x: &[u8], q: &[u8], tau: usize) -> bool {
    if x.len().abs_diff(q.len()) > tau {
        return false;
    }
    let inf = tau + 1;
    let n = q.len();
    let mut prev = vec![inf; n + 1];
    let mut cur = vec![inf; n + 1];
    for (j, v) in prev.iter_mut().enumerate().take(tau.min(n) + 1) {
        *v = j;
    }
    for i in 1..=x.len() {
        let lo = i.saturating_sub(tau);
        let hi = (i + tau).min(n);
        if lo > 0 {
            cur[lo - 1] = inf;
        }
        let mut row_min = inf;
        for j in lo..=hi {
            let v = if j == 0 {
                i
            } else {
                let sub = prev[j - 1] + usize::from(x[i - 1] != q[j - 1]);
                let del = prev[j] + 1;
                let ins = cur[j - 1] + 1;
                sub.min(del).min(ins)
            };
            cur[j] = v.min(inf);
            row_min = row_min.min(cur[j]);
        }
        if hi < n {
            cur[hi + 1] = inf;
        }
        if row_min > tau {
            return false;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n] <= tau
}

/// Recommended gram length: 3 for `tau = 1`, else 2.
pub fn default_kappa(tau: usize) -> usize {
    if tau == 1 {
        3
    } else {
        2
    }
}

/// Recommended chain length `min(3, tau + 1)`.
pub fn default_chain(tau: usize) -> usize {
    (tau + 1).min(3)
}
