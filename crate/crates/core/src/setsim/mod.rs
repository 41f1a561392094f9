//! Set similarity search over token sets with class-partitioned prefixes.
//!
//! Tokens are ranked by a global order and the universe is split into
//! `m - 1` classes. Box `i >= 1` counts the shared class-`i` tokens of the
//! two prefixes; box 0 counts shared tokens in one of the suffixes.

mod index;

pub use index::{pair_boxes, SetIndex, SetInstance, SetThreshold};

use std::collections::HashMap;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::ring::{Direction, ThresholdSpec};

/// Token bytes to dense IDs. ID order is the global order: increasing
/// document frequency, ties by first appearance.
#[derive(Clone, Debug, Default)]
pub struct TokenDictionary {
    ids: HashMap<Vec<u8>, u32>,
    tokens: Vec<Vec<u8>>,
    freq: Vec<u64>,
}

impl TokenDictionary {
    pub fn build<R, T>(records: &[R]) -> Self
    where
        R: AsRef<[T]>,
        T: AsRef<[u8]>,
    {
        let mut first: HashMap<&[u8], (u64, usize)> = HashMap::new();
        let mut order: Vec<&[u8]> = Vec::new();
        for r in records {
            let mut seen: Vec<&[u8]> = r.as_ref().iter().map(|t| t.as_ref()).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                first
                    .entry(t)
                    .and_modify(|e| e.0 += 1)
                    .or_insert_with(|| {
                        order.push(t);
                        (1, order.len() - 1)
                    });
            }
        }
        let mut ranked: Vec<(&[u8], u64, usize)> = first.into_iter().map(|(t, (f, i))| (t, f, i)).collect();
        ranked.sort_by_key(|&(_, f, i)| (f, i));
        let mut dict = TokenDictionary::default();
        for (t, f, _) in ranked {
            dict.push(t.to_vec(), f);
        }
        dict
    }

    /// A dictionary whose global order is exactly `tokens`, with unit frequencies.
    pub fn from_ordered<T: AsRef<[u8]>>(tokens: &[T]) -> Result<Self> {
        let mut dict = TokenDictionary::default();
        for t in tokens {
            if dict.ids.contains_key(t.as_ref()) {
                return Err(Error::param("duplicate token in explicit order"));
            }
            dict.push(t.as_ref().to_vec(), 1);
        }
        Ok(dict)
    }

    fn push(&mut self, t: Vec<u8>, f: u64) {
        self.ids.insert(t.clone(), self.tokens.len() as u32);
        self.tokens.push(t);
        self.freq.push(f);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &[u8]) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &[u8] {
        &self.tokens[id as usize]
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.freq[id as usize]
    }

    /// Sorted, deduplicated IDs of a record. Tokens outside the dictionary
    /// get IDs from `len()` upward in byte order, after every known token.
    pub fn encode<T: AsRef<[u8]>>(&self, record: &[T]) -> Vec<u32> {
        let mut known = Vec::with_capacity(record.len());
        let mut unknown: Vec<&[u8]> = Vec::new();
        for t in record {
            match self.id(t.as_ref()) {
                Some(id) => known.push(id),
                None => unknown.push(t.as_ref()),
            }
        }
        known.sort_unstable();
        known.dedup();
        unknown.sort_unstable();
        unknown.dedup();
        let base = self.len() as u32;
        known.extend((0..unknown.len() as u32).map(|k| base + k));
        known
    }
}

/// Token ID to class in `1 ..= m - 1`. IDs past the mapped range fall in the
/// last class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    m: usize,
    classes: Vec<u16>,
}

impl ClassMap {
    pub fn from_classes(classes: Vec<u16>, m: usize) -> Result<Self> {
        check_m(m)?;
        if let Some(&c) = classes.iter().find(|&&c| c == 0 || c as usize >= m) {
            return Err(Error::param(format!("class {c} outside 1..={}", m - 1)));
        }
        Ok(ClassMap { m, classes })
    }

    /// Contiguous ranges of the global order with near-equal total frequency.
    pub fn balanced(dict: &TokenDictionary, m: usize) -> Result<Self> {
        check_m(m)?;
        let k = (m - 1) as u128;
        let total: u128 = dict.freq.iter().map(|&f| u128::from(f)).sum();
        let mut classes = Vec::with_capacity(dict.len());
        let mut acc: u128 = 0;
        for &f in &dict.freq {
            // Class by the midpoint of this token's mass.
            let mid = 2 * acc + u128::from(f);
            let c = if total == 0 { 0 } else { (mid * k / (2 * total)).min(k - 1) };
            classes.push(c as u16 + 1);
            acc += u128::from(f);
        }
        Ok(ClassMap { m, classes })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn class(&self, id: u32) -> usize {
        self.classes
            .get(id as usize)
            .map_or(self.m - 1, |&c| c as usize)
    }
}

fn check_m(m: usize) -> Result<()> {
    if !(2..=u16::MAX as usize).contains(&m) {
        return Err(Error::param(format!("set search needs m in 2..={}, got {m}", u16::MAX)));
    }
    Ok(())
}

/// Parses a Jaccard threshold written as a decimal (`0.8`) or a fraction
/// (`4/5`) into an exact rational in `(0, 1]`.
pub fn parse_jaccard(s: &str) -> Result<Ratio<i64>> {
    let s = s.trim();
    let bad = || Error::param(format!("invalid Jaccard threshold {s:?}"));
    let r = if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ratio::new(n, d)
    } else {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 15 || (int.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !digits(int) || !digits(frac) {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let den = 10i64.pow(frac.len() as u32);
        Ratio::new(int.checked_mul(den).ok_or_else(bad)? + frac_v, den)
    };
    if r <= Ratio::from_integer(0) || r > Ratio::from_integer(1) {
        return Err(Error::param(format!("Jaccard threshold {s} outside (0, 1]")));
    }
    Ok(r)
}

/// Smallest overlap that reaches Jaccard `tau`: `ceil((|x| + |q|) tau / (1 + tau))`.
pub fn overlap_threshold(x_len: usize, q_len: usize, tau: Ratio<i64>) -> i64 {
    let num = i128::from(*tau.numer());
    let den = i128::from(*tau.denom());
    let total = (x_len + q_len) as i128;
    div_ceil(total * num, num + den) as i64
}

/// Smallest overlap with `|x|` that any query passing the length filter can
/// require: `ceil(tau |x|)`.
pub fn local_overlap_bound(len: usize, tau: Ratio<i64>) -> i64 {
    let num = i128::from(*tau.numer());
    let den = i128::from(*tau.denom());
    div_ceil(len as i128 * num, den) as i64
}

fn div_ceil(a: i128, b: i128) -> i128 {
    (a + b - 1).div_euclid(b)
}

/// Prefix increments of a record: `inc[j]` is the smallest prefix length `p`
/// with `sum_k max(0, cnt(p, k) - k + 1) = j`.
pub(crate) fn increments(classes: impl Iterator<Item = usize>, m: usize) -> Vec<u32> {
    let mut cnt = vec![0usize; m];
    let mut inc = vec![0u32];
    for (p, c) in classes.enumerate() {
        cnt[c] += 1;
        if cnt[c] >= c {
            inc.push(p as u32 + 1);
        }
    }
    inc
}

/// A record's prefix for one overlap threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixView {
    /// Prefix length `p`.
    pub len: usize,
    /// Class-`k` tokens in the prefix, indexed by `k` (entry 0 unused).
    pub counts: Vec<usize>,
    /// True when no prefix satisfies the defining equation, so the whole
    /// record is used.
    pub degenerate: bool,
}

pub(crate) fn prefix_len(inc: &[u32], size: usize, tau: i64) -> Option<(usize, bool)> {
    if tau > size as i64 || tau <= 0 {
        return None;
    }
    let target = size - tau as usize + 1;
    match inc.get(target) {
        Some(&p) => Some((p as usize, false)),
        None => Some((size, true)),
    }
}

/// Prefix of a sorted record for overlap threshold `tau`.
pub fn compute_prefix(record: &[u32], tau: i64, classes: &ClassMap) -> Result<PrefixView> {
    if tau <= 0 {
        return Err(Error::param("overlap threshold must be positive"));
    }
    let m = classes.m();
    let inc = increments(record.iter().map(|&t| classes.class(t)), m);
    let (len, degenerate) =
        prefix_len(&inc, record.len(), tau).ok_or_else(|| Error::param("overlap threshold exceeds record size"))?;
    let mut counts = vec![0usize; m];
    for &t in &record[..len] {
        counts[classes.class(t)] += 1;
    }
    Ok(PrefixView {
        len,
        counts,
        degenerate,
    })
}

/// Per-box integer thresholds from the side whose suffix feeds box 0.
///
/// `t_0 = size - p + 1`, and `t_i = i` when the prefix holds at least `i`
/// class-`i` tokens, else one more than it holds. These sum to
/// `tau + m - 1`; for a degenerate prefix the sum is larger and class
/// thresholds are lowered from the last class down until it matches.
pub(crate) fn threshold_values(view: &PrefixView, size: usize, tau: i64) -> Result<Vec<i64>> {
    let m = view.counts.len();
    let mut t = Vec::with_capacity(m);
    t.push((size - view.len) as i64 + 1);
    for i in 1..m {
        t.push(if view.counts[i] >= i { i as i64 } else { view.counts[i] as i64 + 1 });
    }
    let want = tau + m as i64 - 1;
    let mut excess = t.iter().sum::<i64>() - want;
    if excess != 0 && !view.degenerate {
        return Err(Error::Invariant(format!(
            "thresholds sum to {} instead of {want}",
            want + excess
        )));
    }
    for ti in t[1..].iter_mut().rev() {
        let cut = excess.min(*ti - 1).max(0);
        *ti -= cut;
        excess -= cut;
    }
    if excess != 0 {
        return Err(Error::Invariant("cannot lower thresholds to the required sum".into()));
    }
    Ok(t)
}

pub fn query_thresholds(view: &PrefixView, size: usize, tau: i64) -> Result<ThresholdSpec> {
    Ok(ThresholdSpec::integer_reduction(
        threshold_values(view, size, tau)?,
        Direction::AtLeast,
    ))
}

/// Sorted-merge overlap of two ascending ID lists.
pub fn overlap(x: &[u32], q: &[u32]) -> usize {
    let (mut i, mut j, mut o) = (0, 0, 0);
    while i < x.len() && j < q.len() {
        match x[i].cmp(&q[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                o += 1;
                i += 1;
                j += 1;
            }
        }
    }
    o
}

/// Whether the overlap reaches `need`, stopping once it cannot.
pub fn overlap_at_least(x: &[u32], q: &[u32], need: usize) -> bool {
    let (mut i, mut j, mut o) = (0, 0, 0);
    while i < x.len() && j < q.len() {
        if o + (x.len() - i).min(q.len() - j) < need {
            return false;
        }
        match x[i].cmp(&q[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                o += 1;
                i += 1;
                j += 1;
            }
        }
    }
    o >= need
}
