use std::collections::HashMap;
use std::time::Instant;

use num_rational::Ratio;

use super::{
    increments, local_overlap_bound, overlap, overlap_at_least, overlap_threshold, prefix_len, threshold_values,
    ClassMap, PrefixView, TokenDictionary,
};
use crate::error::{Error, Result};
use crate::framework::FilterInstance;
use crate::ring::{BoxSequence, Direction, PrefixCheck, QuotaTable, ThresholdSpec};
use crate::stats::{QueryOutput, QueryStats};

/// The similarity predicate an index is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetThreshold {
    /// `|x ∩ q| / |x ∪ q| >= tau`. Two empty sets match.
    Jaccard(Ratio<i64>),
    /// `|x ∩ q| >= t` with `t >= 1`.
    Overlap(i64),
}

impl SetThreshold {
    /// Overlap needed by the pair, or `None` when the sizes alone rule it out.
    pub fn pair_overlap(&self, x_len: usize, q_len: usize) -> Option<i64> {
        match *self {
            SetThreshold::Jaccard(t) => {
                let num = i128::from(*t.numer());
                let den = i128::from(*t.denom());
                let (x, q) = (x_len as i128, q_len as i128);
                if q * num > x * den || x * num > q * den {
                    return None;
                }
                Some(overlap_threshold(x_len, q_len, t))
            }
            SetThreshold::Overlap(t) => (x_len as i64 >= t && q_len as i64 >= t).then_some(t),
        }
    }

    /// Lowest overlap any partner can require of a record of this size.
    fn local_bound(&self, len: usize) -> i64 {
        match *self {
            SetThreshold::Jaccard(t) => local_overlap_bound(len, t),
            SetThreshold::Overlap(t) => t,
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            SetThreshold::Jaccard(t) if t > Ratio::from_integer(0) && t <= Ratio::from_integer(1) => Ok(()),
            SetThreshold::Overlap(t) if t >= 1 => Ok(()),
            _ => Err(Error::param(format!("invalid set threshold {self:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
struct Record {
    tokens: Vec<u32>,
    inc: Vec<u32>,
}

/// Inverted lists over each record's prefix at its lowest possible overlap
/// bound, plus the encoded records.
#[derive(Clone, Debug)]
pub struct SetIndex {
    dict: TokenDictionary,
    classes: ClassMap,
    threshold: SetThreshold,
    records: Vec<Record>,
    /// Token ID to (object ID, rank of the token within the object).
    lists: Vec<Vec<(u32, u32)>>,
    empties: Vec<u32>,
}

const SUFFIX_BOX: i64 = i64::MAX / 4;

impl SetIndex {
    /// Builds a frequency-ordered dictionary and frequency-balanced classes
    /// from the data, then the index.
    pub fn build<R, T>(records: &[R], m: usize, threshold: SetThreshold) -> Result<Self>
    where
        R: AsRef<[T]>,
        T: AsRef<[u8]>,
    {
        let dict = TokenDictionary::build(records);
        let classes = ClassMap::balanced(&dict, m)?;
        let encoded = records.iter().map(|r| dict.encode(r.as_ref())).collect();
        SetIndex::build_with(dict, classes, encoded, threshold)
    }

    /// Builds over records already encoded with `dict` (sorted, distinct IDs).
    pub fn build_with(
        dict: TokenDictionary,
        classes: ClassMap,
        encoded: Vec<Vec<u32>>,
        threshold: SetThreshold,
    ) -> Result<Self> {
        threshold.check()?;
        if encoded.len() > u32::MAX as usize {
            return Err(Error::param("too many objects"));
        }
        let m = classes.m();
        let mut lists: Vec<Vec<(u32, u32)>> = vec![Vec::new(); dict.len()];
        let mut empties = Vec::new();
        let mut records = Vec::with_capacity(encoded.len());
        for (id, tokens) in encoded.into_iter().enumerate() {
            if tokens.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param(format!("record {id} is not sorted and distinct")));
            }
            let inc = increments(tokens.iter().map(|&t| classes.class(t)), m);
            if tokens.is_empty() {
                empties.push(id as u32);
            } else if let Some((p, _)) = prefix_len(&inc, tokens.len(), threshold.local_bound(tokens.len())) {
                for (rank, &t) in tokens[..p].iter().enumerate() {
                    if let Some(list) = lists.get_mut(t as usize) {
                        list.push((id as u32, rank as u32));
                    }
                }
            }
            records.push(Record { tokens, inc });
        }
        Ok(SetIndex {
            dict,
            classes,
            threshold,
            records,
            lists,
            empties,
        })
    }

    pub fn dictionary(&self) -> &TokenDictionary {
        &self.dict
    }

    pub fn classes(&self) -> &ClassMap {
        &self.classes
    }

    pub fn threshold(&self) -> SetThreshold {
        self.threshold
    }

    pub fn m(&self) -> usize {
        self.classes.m()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, id: u32) -> &[u32] {
        &self.records[id as usize].tokens
    }

    pub fn encode<T: AsRef<[u8]>>(&self, q: &[T]) -> Vec<u32> {
        self.dict.encode(q)
    }

    /// Linear scan over encoded records.
    pub fn scan(&self, q: &[u32]) -> Vec<u32> {
        (0..self.records.len() as u32)
            .filter(|&id| {
                let x = self.record(id);
                self.threshold
                    .pair_overlap(x.len(), q.len())
                    .is_some_and(|t| overlap(x, q) as i64 >= t)
            })
            .collect()
    }

    fn view(&self, tokens: &[u32], p: usize, degenerate: bool) -> PrefixView {
        let mut counts = vec![0usize; self.m()];
        for &t in &tokens[..p] {
            counts[self.classes.class(t)] += 1;
        }
        PrefixView {
            len: p,
            counts,
            degenerate,
        }
    }

    /// Searches with a sorted, distinct, encoded query using chains of length `l`.
    pub fn query(&self, q: &[u32], l: usize) -> Result<QueryOutput> {
        let m = self.m();
        if l == 0 || l > m {
            return Err(Error::InvalidChain { len: l, m });
        }
        if q.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("query is not sorted and distinct"));
        }
        let mut stats = QueryStats::default();
        if q.is_empty() {
            let results = match self.threshold {
                SetThreshold::Jaccard(_) => self.empties.clone(),
                SetThreshold::Overlap(_) => Vec::new(),
            };
            stats.candidates = results.len() as u64;
            stats.verifications = results.len() as u64;
            stats.results = results.len() as u64;
            return Ok(QueryOutput {
                candidates: results.clone(),
                results,
                stats,
            });
        }

        let t0 = Instant::now();
        let q_inc = increments(q.iter().map(|&t| self.classes.class(t)), m);
        let mut hits: Vec<(u32, u32, u32)> = Vec::new();
        if let Some((probe_len, _)) = prefix_len(&q_inc, q.len(), self.threshold.local_bound(q.len())) {
            for (rank_q, &t) in q[..probe_len].iter().enumerate() {
                let Some(list) = self.lists.get(t as usize) else {
                    continue;
                };
                stats.probes += 1;
                for &(id, rank_x) in list {
                    let x_len = self.records[id as usize].tokens.len();
                    if self.threshold.pair_overlap(x_len, q.len()).is_some() {
                        hits.push((id, rank_x, rank_q as u32));
                    }
                }
            }
        }
        hits.sort_unstable();
        let probe_time = t0.elapsed();

        let tc = Instant::now();
        let mut q_tables: HashMap<i64, (usize, bool, Option<QuotaTable>)> = HashMap::new();
        let mut candidates = Vec::new();
        let mut b = vec![0i64; m];
        let mut g = 0;
        while g < hits.len() {
            let id = hits[g].0;
            let mut h = g;
            while h < hits.len() && hits[h].0 == id {
                h += 1;
            }
            let group = &hits[g..h];
            g = h;

            let x = &self.records[id as usize];
            let tau = self
                .threshold
                .pair_overlap(x.tokens.len(), q.len())
                .ok_or_else(|| Error::Invariant("hit failed the length filter".into()))?;
            let (px, x_deg) = prefix_len(&x.inc, x.tokens.len(), tau)
                .ok_or_else(|| Error::Invariant("pair overlap exceeds record size".into()))?;
            let entry = match q_tables.get(&tau) {
                Some(e) => e.clone(),
                None => {
                    let (pq, q_deg) = prefix_len(&q_inc, q.len(), tau)
                        .ok_or_else(|| Error::Invariant("pair overlap exceeds query size".into()))?;
                    let e = (pq, q_deg, None);
                    q_tables.insert(tau, e.clone());
                    e
                }
            };
            let (pq, q_deg, _) = entry;

            b.iter_mut().for_each(|v| *v = 0);
            for &(_, rank_x, rank_q) in group {
                if (rank_x as usize) < px && (rank_q as usize) < pq {
                    b[self.classes.class(x.tokens[rank_x as usize])] += 1;
                }
            }

            // Thresholds come from the side whose suffix feeds box 0, so that
            // box 0 alone can never meet its threshold.
            let x_suffix = x.tokens[px - 1] < q[pq - 1];
            let table = if x_suffix {
                let view = self.view(&x.tokens, px, x_deg);
                let t = threshold_values(&view, x.tokens.len(), tau)?;
                QuotaTable::compile(&ThresholdSpec::integer_reduction(t, Direction::AtLeast), m, l)?
            } else {
                let slot = q_tables.get_mut(&tau).expect("inserted above");
                if slot.2.is_none() {
                    let view = self.view(q, pq, q_deg);
                    let t = threshold_values(&view, q.len(), tau)?;
                    slot.2 = Some(QuotaTable::compile(
                        &ThresholdSpec::integer_reduction(t, Direction::AtLeast),
                        m,
                        l,
                    )?);
                }
                slot.2.clone().expect("set above")
            };

            let mut skip_to = 0;
            let mut seeded = false;
            for i in 1..m {
                if !table.admits(b[i], i, 1) {
                    continue;
                }
                stats.viable_boxes += 1;
                seeded = true;
                if i < skip_to {
                    continue;
                }
                // Reaching box 0 sends the object straight to verification.
                let (check, evaluated) = table.check_prefixes(i, l, |j| if j == 0 { SUFFIX_BOX } else { b[j] });
                stats.box_checks += evaluated as u64;
                match check {
                    PrefixCheck::Viable => {
                        candidates.push(id);
                        break;
                    }
                    PrefixCheck::FailsAt(len) => skip_to = i + len,
                }
            }
            if seeded {
                stats.pigeonhole_candidates += 1;
            }
        }
        let check_time = tc.elapsed();

        let tv = Instant::now();
        let results: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&id| {
                let x = self.record(id);
                let need = self.threshold.pair_overlap(x.len(), q.len()).unwrap_or(i64::MAX);
                overlap_at_least(x, q, need as usize)
            })
            .collect();
        QueryStats::add_time(&mut stats.probe_ns, probe_time);
        QueryStats::add_time(&mut stats.check_ns, check_time);
        QueryStats::add_time(&mut stats.verify_ns, tv.elapsed());
        stats.candidates = candidates.len() as u64;
        stats.verifications = candidates.len() as u64;
        stats.results = results.len() as u64;
        Ok(QueryOutput {
            results,
            candidates,
            stats,
        })
    }

    /// Encodes raw query tokens and searches.
    pub fn query_tokens<T: AsRef<[u8]>>(&self, q: &[T], l: usize) -> Result<QueryOutput> {
        self.query(&self.encode(q), l)
    }
}

/// Exact boxes of a pair for overlap threshold `tau`, box 0 included, and
/// the thresholds of the side whose suffix feeds box 0.
///
/// `tau` must lie in `1 ..= min(|x|, |q|)`.
pub fn pair_boxes(x: &[u32], q: &[u32], tau: i64, classes: &ClassMap) -> Result<(BoxSequence, ThresholdSpec)> {
    if tau < 1 || tau > x.len().min(q.len()) as i64 {
        return Err(Error::param(format!("overlap threshold {tau} outside 1..=min(|x|, |q|)")));
    }
    let m = classes.m();
    let side = |r: &[u32]| -> PrefixView {
        let inc = increments(r.iter().map(|&t| classes.class(t)), m);
        let (p, deg) = prefix_len(&inc, r.len(), tau).unwrap_or((r.len(), true));
        let mut counts = vec![0usize; m];
        for &t in &r[..p] {
            counts[classes.class(t)] += 1;
        }
        PrefixView {
            len: p,
            counts,
            degenerate: deg,
        }
    };
    let (vx, vq) = (side(x), side(q));
    let last = |r: &[u32], p: usize| if p == 0 { None } else { Some(r[p - 1]) };
    let x_suffix = last(x, vx.len) < last(q, vq.len);
    let mut b = vec![0i64; m];
    let qp = &q[..vq.len];
    for &t in &x[..vx.len] {
        if qp.binary_search(&t).is_ok() {
            b[classes.class(t)] += 1;
        }
    }
    b[0] = if x_suffix {
        overlap(&x[vx.len..], q) as i64
    } else {
        overlap(x, &q[vq.len..]) as i64
    };
    let t = if x_suffix {
        threshold_values(&vx, x.len(), tau)?
    } else {
        threshold_values(&vq, q.len(), tau)?
    };
    Ok((
        BoxSequence::new(b)?,
        ThresholdSpec::integer_reduction(t, Direction::AtLeast),
    ))
}

/// Overlap search as a filtering instance over encoded records, with
/// `D(tau) = tau` and exact boxes.
#[derive(Clone, Debug)]
pub struct SetInstance {
    pub classes: ClassMap,
}

impl FilterInstance for SetInstance {
    type Object = Vec<u32>;
    type Features = Vec<u32>;

    fn featurize(&self, o: &Vec<u32>) -> Result<Vec<u32>> {
        let mut v = o.clone();
        v.sort_unstable();
        v.dedup();
        Ok(v)
    }

    fn box_count(&self, _q: &Vec<u32>, _tau: i64) -> usize {
        self.classes.m()
    }

    fn box_value(&self, x: &Vec<u32>, q: &Vec<u32>, tau: i64, i: usize) -> i64 {
        let tau = tau.clamp(1, x.len().min(q.len()).max(1) as i64);
        pair_boxes(x, q, tau, &self.classes)
            .map(|(b, _)| b.values()[i])
            .unwrap_or(0)
    }

    fn bound(&self, tau: i64) -> i64 {
        tau
    }

    fn direction(&self) -> Direction {
        Direction::AtLeast
    }

    fn thresholds(&self, q: &Vec<u32>, tau: i64, m: usize) -> Result<ThresholdSpec> {
        if tau < 1 || tau > q.len() as i64 || m != self.classes.m() {
            return Err(Error::param("overlap threshold outside the query size"));
        }
        let inc = increments(q.iter().map(|&t| self.classes.class(t)), m);
        let (p, deg) = prefix_len(&inc, q.len(), tau).expect("checked above");
        let mut counts = vec![0usize; m];
        for &t in &q[..p] {
            counts[self.classes.class(t)] += 1;
        }
        let view = PrefixView {
            len: p,
            counts,
            degenerate: deg,
        };
        Ok(ThresholdSpec::integer_reduction(
            threshold_values(&view, q.len(), tau)?,
            Direction::AtLeast,
        ))
    }
}
