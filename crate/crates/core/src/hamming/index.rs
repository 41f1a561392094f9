use std::collections::HashMap;
use std::time::Instant;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{allocate_thresholds, BinaryVector, PartLayout};
use crate::error::{Error, Result};
use crate::ring::{BoxSequence, Direction, PrefixCheck, QuotaTable, ThresholdSpec};
use crate::stats::{QueryOutput, QueryStats};

/// Parameters of one Hamming query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingQuery {
    pub tau: i64,
    pub chain: usize,
    pub spec: ThresholdSpec,
}

impl HammingQuery {
    /// Even integer-reduction allocation over `m` parts.
    pub fn new(tau: i64, chain: usize, m: usize) -> Result<Self> {
        Ok(HammingQuery {
            tau,
            chain,
            spec: allocate_thresholds(tau, m)?,
        })
    }

    /// Uniform quota `l * tau / m`.
    pub fn fixed(tau: i64, chain: usize) -> Self {
        HammingQuery {
            tau,
            chain,
            spec: ThresholdSpec::fixed(Ratio::from_integer(tau), Direction::AtMost),
        }
    }

    pub fn with_spec(tau: i64, chain: usize, spec: ThresholdSpec) -> Self {
        HammingQuery { tau, chain, spec }
    }
}

/// Per-part exact-match maps over part values, plus the packed data.
#[derive(Clone, Debug)]
pub struct HammingIndex {
    layout: PartLayout,
    perm: Option<Vec<usize>>,
    vectors: Vec<BinaryVector>,
    parts: Vec<u64>,
    maps: Vec<HashMap<u64, Vec<u32>>>,
}

const UNSEEN: u32 = 0;
const CANDIDATE: u32 = u32::MAX;

impl HammingIndex {
    /// Builds the index. With `permutation_seed` set, dimensions of data and
    /// queries are shuffled by a seeded permutation before partitioning.
    pub fn build(data: Vec<BinaryVector>, layout: PartLayout, permutation_seed: Option<u64>) -> Result<Self> {
        let m = layout.m();
        if let Some(w) = layout.widths().into_iter().find(|&w| w > 64) {
            return Err(Error::param(format!("part width {w} exceeds 64 bits")));
        }
        for v in &data {
            if v.d() != layout.d() {
                return Err(Error::DimensionMismatch {
                    expected: layout.d(),
                    actual: v.d(),
                });
            }
        }
        if data.len() > u32::MAX as usize - 1 {
            return Err(Error::param("too many objects"));
        }
        let perm = permutation_seed.map(|seed| {
            let mut p: Vec<usize> = (0..layout.d()).collect();
            p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            p
        });
        let vectors: Vec<BinaryVector> = match &perm {
            Some(p) => data.iter().map(|v| v.permuted(p)).collect(),
            None => data,
        };
        let mut parts = Vec::with_capacity(vectors.len() * m);
        let mut maps = vec![HashMap::new(); m];
        for (id, v) in vectors.iter().enumerate() {
            for (i, map) in maps.iter_mut().enumerate() {
                let r = layout.part(i);
                let key = v.bits_range(r.start, r.len());
                parts.push(key);
                map.entry(key).or_insert_with(Vec::new).push(id as u32);
            }
        }
        Ok(HammingIndex {
            layout,
            perm,
            vectors,
            parts,
            maps,
        })
    }

    pub fn layout(&self) -> &PartLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The map for part `i`, from part value to ascending object IDs.
    pub fn part_map(&self, i: usize) -> &HashMap<u64, Vec<u32>> {
        &self.maps[i]
    }

    fn prepare(&self, q: &BinaryVector) -> Result<BinaryVector> {
        if q.d() != self.layout.d() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.d(),
                actual: q.d(),
            });
        }
        Ok(match &self.perm {
            Some(p) => q.permuted(p),
            None => q.clone(),
        })
    }

    fn query_parts(&self, q: &BinaryVector) -> Vec<u64> {
        (0..self.layout.m())
            .map(|i| {
                let r = self.layout.part(i);
                q.bits_range(r.start, r.len())
            })
            .collect()
    }

    /// Box values of object `id` against `q`.
    pub fn boxes(&self, id: u32, q: &BinaryVector) -> Result<BoxSequence> {
        let q = self.prepare(q)?;
        let qp = self.query_parts(&q);
        let m = self.layout.m();
        let xp = &self.parts[id as usize * m..(id as usize + 1) * m];
        BoxSequence::new(xp.iter().zip(&qp).map(|(a, b)| (a ^ b).count_ones() as i64).collect())
    }

    /// Linear scan: every object within distance `tau`.
    pub fn scan(&self, q: &BinaryVector, tau: i64) -> Result<Vec<u32>> {
        let q = self.prepare(q)?;
        Ok((0..self.vectors.len() as u32)
            .filter(|&id| i64::from(self.vectors[id as usize].distance(&q)) <= tau)
            .collect())
    }

    pub fn query(&self, q: &BinaryVector, params: &HammingQuery) -> Result<QueryOutput> {
        let m = self.layout.m();
        if params.chain == 0 || params.chain > m {
            return Err(Error::InvalidChain { len: params.chain, m });
        }
        if params.spec.direction != Direction::AtMost {
            return Err(Error::param("Hamming thresholds must use the at-most direction"));
        }
        if params.spec.intended_bound(m) < Ratio::from_integer(params.tau) {
            return Err(Error::param(format!(
                "thresholds cover a bound of {} but tau is {}",
                params.spec.intended_bound(m),
                params.tau
            )));
        }
        let q = self.prepare(q)?;
        let qp = self.query_parts(&q);
        let table = QuotaTable::compile(&params.spec, m, params.chain)?;
        let l = params.chain;
        let mut stats = QueryStats::default();
        let mut state = vec![UNSEEN; self.vectors.len()];
        let mut candidates = Vec::new();
        let mut hit_objects = 0u64;

        let t0 = Instant::now();
        let mut check_time = std::time::Duration::ZERO;
        for i in 0..m {
            let radius = table.bound(i, 1);
            if radius < 0 {
                continue;
            }
            let width = self.layout.width(i);
            let radius = (radius as usize).min(width);
            let map = &self.maps[i];
            let mut hits: Vec<u32> = Vec::new();
            let ball = ball_size(width, radius);
            if ball > map.len() as u128 {
                for (&key, ids) in map {
                    stats.probes += 1;
                    if ((key ^ qp[i]).count_ones() as usize) <= radius {
                        hits.extend_from_slice(ids);
                    }
                }
            } else {
                stats.ball_size += ball as u64;
                for_each_in_ball(qp[i], width, radius, &mut |key| {
                    stats.probes += 1;
                    if let Some(ids) = map.get(&key) {
                        hits.extend_from_slice(ids);
                    }
                });
            }
            stats.viable_boxes += hits.len() as u64;

            let tc = Instant::now();
            for id in hits {
                let s = &mut state[id as usize];
                if *s == UNSEEN {
                    hit_objects += 1;
                }
                if *s == CANDIDATE || (*s != UNSEEN && i < *s as usize) {
                    continue;
                }
                let xp = &self.parts[id as usize * m..(id as usize + 1) * m];
                let (check, evaluated) = table.check_prefixes(i, l, |j| (xp[j] ^ qp[j]).count_ones() as i64);
                stats.box_checks += evaluated as u64;
                match check {
                    PrefixCheck::Viable => {
                        *s = CANDIDATE;
                        candidates.push(id);
                    }
                    // Starts i .. i + len - 1 are all ruled out; later parts
                    // are visited in ascending order, so keep the upper end.
                    PrefixCheck::FailsAt(len) => *s = (i + len).min(m) as u32,
                }
            }
            check_time += tc.elapsed();
        }
        let step_time = t0.elapsed();
        QueryStats::add_time(&mut stats.check_ns, check_time);
        QueryStats::add_time(&mut stats.probe_ns, step_time.saturating_sub(check_time));
        stats.pigeonhole_candidates = hit_objects;

        let tv = Instant::now();
        candidates.sort_unstable();
        let results: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&id| i64::from(self.vectors[id as usize].distance(&q)) <= params.tau)
            .collect();
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
}

/// Number of `width`-bit values within distance `radius`.
fn ball_size(width: usize, radius: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=radius {
        total = total.saturating_add(c);
        c = c.saturating_mul((width - k) as u128) / (k as u128 + 1);
    }
    total
}

/// Visits every value within `radius` bit flips of `center`, by flip count.
fn for_each_in_ball(center: u64, width: usize, radius: usize, f: &mut impl FnMut(u64)) {
    fn flips(value: u64, from: usize, width: usize, left: usize, f: &mut impl FnMut(u64)) {
        if left == 0 {
            f(value);
            return;
        }
        for p in from..=width - left {
            flips(value ^ (1u64 << p), p + 1, width, left - 1, f);
        }
    }
    for k in 0..=radius {
        flips(center, 0, width, k, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamming::partition_dims;

    fn table_data() -> Vec<BinaryVector> {
        ["1111101110", "0001011110", "0101100110", "1101101100"]
            .iter()
            .map(|s| BinaryVector::parse(s).unwrap())
            .collect()
    }

    fn query_vec() -> BinaryVector {
        BinaryVector::parse("0010010011").unwrap()
    }

    fn index() -> HammingIndex {
        HammingIndex::build(table_data(), partition_dims(10, 5).unwrap(), None).unwrap()
    }

    #[test]
    fn part_zero_map() {
        let idx = index();
        let map = idx.part_map(0);
        assert_eq!(map[&0b00], vec![1]);
        assert_eq!(map[&0b01], vec![2]);
        assert_eq!(map[&0b11], vec![0, 3]);
        assert_eq!(map.len(), 3);
    }

    #[test]
    fn table_boxes() {
        let idx = index();
        let q = query_vec();
        let b: Vec<Vec<i64>> = (0..4).map(|id| idx.boxes(id, &q).unwrap().values().to_vec()).collect();
        assert_eq!(b[0], vec![2, 1, 2, 2, 1]);
        assert_eq!(b[1], vec![0, 2, 0, 2, 1]);
        assert_eq!(b[2], vec![1, 2, 2, 1, 1]);
        assert_eq!(b[3], vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn pigeonhole_and_pigeonring_candidates() {
        let idx = index();
        let q = query_vec();
        let ones = ThresholdSpec::variable(vec![Ratio::from_integer(1); 5], Direction::AtMost);
        let ph = idx.query(&q, &HammingQuery::with_spec(5, 1, ones)).unwrap();
        assert_eq!(ph.candidates, vec![0, 1, 2]);
        assert_eq!(ph.results, vec![1]);
        let ring = idx.query(&q, &HammingQuery::fixed(5, 2)).unwrap();
        assert_eq!(ring.candidates, vec![1, 2]);
        assert_eq!(ring.results, vec![1]);
        assert_eq!(ring.stats.pigeonhole_candidates, 3);
    }

    #[test]
    fn threshold_variants_filter() {
        let idx = index();
        let q = query_vec();
        let t = [1, 2, 0, 1, 1].map(Ratio::from_integer).to_vec();
        let var = idx
            .query(&q, &HammingQuery::with_spec(5, 2, ThresholdSpec::variable(t, Direction::AtMost)))
            .unwrap();
        assert!(!var.candidates.contains(&0));
        let ir = idx.query(&q, &HammingQuery::new(5, 2, 5).unwrap()).unwrap();
        assert!(!ir.candidates.contains(&2));
        assert_eq!(ir.results, vec![1]);
    }

    #[test]
    fn exact_duplicates_at_zero() {
        let mut data = table_data();
        data.push(query_vec());
        data.push(query_vec());
        let idx = HammingIndex::build(data, partition_dims(10, 5).unwrap(), None).unwrap();
        let out = idx.query(&query_vec(), &HammingQuery::new(0, 3, 5).unwrap()).unwrap();
        assert_eq!(out.results, vec![4, 5]);
    }

    #[test]
    fn empty_dataset() {
        let idx = HammingIndex::build(Vec::new(), partition_dims(10, 5).unwrap(), None).unwrap();
        assert!(idx.part_map(0).is_empty());
        let out = idx.query(&query_vec(), &HammingQuery::new(5, 2, 5).unwrap()).unwrap();
        assert!(out.results.is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            HammingIndex::build(vec![BinaryVector::parse("101").unwrap()], partition_dims(10, 5).unwrap(), None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(HammingIndex::build(Vec::new(), partition_dims(130, 2).unwrap(), None).is_err());
        let idx = index();
        assert!(idx.query(&query_vec(), &HammingQuery::new(5, 6, 5).unwrap()).is_err());
        assert!(idx.query(&BinaryVector::parse("01").unwrap(), &HammingQuery::fixed(5, 1)).is_err());
        let weak = ThresholdSpec::fixed(Ratio::from_integer(3), Direction::AtMost);
        assert!(idx.query(&query_vec(), &HammingQuery::with_spec(5, 1, weak)).is_err());
    }

    #[test]
    fn ball_sizes_and_enumeration() {
        assert_eq!(ball_size(4, 0), 1);
        assert_eq!(ball_size(4, 2), 11);
        assert_eq!(ball_size(64, 64), u128::from(u64::MAX) + 1);
        let mut seen = Vec::new();
        for_each_in_ball(0b1010, 4, 2, &mut |v| seen.push(v));
        assert_eq!(seen.len(), 11);
        assert_eq!(seen[0], 0b1010);
        let mut sorted = seen.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 11);
        assert!(seen.iter().all(|v| (v ^ 0b1010u64).count_ones() <= 2));
    }

    #[test]
    fn permutation_preserves_results() {
        let idx = HammingIndex::build(table_data(), partition_dims(10, 5).unwrap(), Some(7)).unwrap();
        for tau in 0..=10 {
            let out = idx.query(&query_vec(), &HammingQuery::new(tau, 2, 5).unwrap()).unwrap();
            assert_eq!(out.results, idx.scan(&query_vec(), tau).unwrap());
        }
    }
}
