use std::cmp::Ordering;
use std::collections::HashMap;
use std::time::Instant;

use num_rational::Ratio;

use super::{
    box_lower_bound_with, extract_prefix_grams, prefix_size, select_pivotal, sorted_grams, verify_edit_distance,
    window_signatures, GramOrder, PositionalGram,
};
use crate::error::{Error, Result};
use crate::framework::FilterInstance;
use crate::ring::{Direction, PrefixCheck, QuotaTable, ThresholdSpec};
use crate::stats::{QueryOutput, QueryStats};

#[derive(Clone, Debug)]
struct Prefixed {
    /// Pivot start positions, ascending.
    pivots: Vec<u32>,
    /// Frequency and start position of the last prefix gram.
    last: (u64, u32),
}

#[derive(Clone, Debug, Default)]
struct Bucket {
    /// Pivot gram to (object, pivot index, position).
    pivots: HashMap<Vec<u8>, Vec<(u32, u16, u32)>>,
    /// Prefix gram, including every gram tied with the last one, to (object, position).
    prefix: HashMap<Vec<u8>, Vec<(u32, u32)>>,
    objects: Vec<Option<Prefixed>>,
    /// Strings with too few grams for a prefix; always verified.
    short: Vec<u32>,
}

/// Per-threshold pivot and prefix maps for every `tau <= tau_max`.
#[derive(Clone, Debug)]
pub struct StringIndex {
    kappa: usize,
    tau_max: usize,
    order: GramOrder,
    strings: Vec<Vec<u8>>,
    sigs: Vec<Vec<u128>>,
    buckets: Vec<Bucket>,
}

impl StringIndex {
    /// Builds with a gram order by increasing frequency over the data.
    pub fn build(strings: Vec<Vec<u8>>, kappa: usize, tau_max: usize) -> Result<Self> {
        let order = GramOrder::from_data(&strings, kappa);
        StringIndex::build_with_order(strings, kappa, tau_max, order)
    }

    pub fn build_with_order(strings: Vec<Vec<u8>>, kappa: usize, tau_max: usize, order: GramOrder) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::param("gram length must be at least 1"));
        }
        if tau_max >= u16::MAX as usize {
            return Err(Error::param("tau_max too large"));
        }
        if strings.len() > u32::MAX as usize {
            return Err(Error::param("too many objects"));
        }
        let sigs = strings.iter().map(|s| window_signatures(s, kappa)).collect();
        let mut buckets = Vec::with_capacity(tau_max + 1);
        for tau in 0..=tau_max {
            let mut b = Bucket::default();
            for (id, s) in strings.iter().enumerate() {
                let id = id as u32;
                let grams = sorted_grams(s, kappa, &order);
                let p = prefix_size(kappa, tau);
                if grams.len() < p {
                    b.short.push(id);
                    b.objects.push(None);
                    continue;
                }
                let piv = select_pivotal(&grams[..p], kappa, tau)?;
                for (j, g) in piv.iter().enumerate() {
                    b.pivots
                        .entry(g.gram.to_vec())
                        .or_default()
                        .push((id, j as u16, g.pos as u32));
                }
                let last = &grams[p - 1];
                for g in grams.iter().take_while(|g| g.key_cmp(last) != Ordering::Greater) {
                    b.prefix.entry(g.gram.to_vec()).or_default().push((id, g.pos as u32));
                }
                b.objects.push(Some(Prefixed {
                    pivots: piv.iter().map(|g| g.pos as u32).collect(),
                    last: (last.freq, last.pos as u32),
                }));
            }
            buckets.push(b);
        }
        Ok(StringIndex {
            kappa,
            tau_max,
            order,
            strings,
            sigs,
            buckets,
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn string(&self, id: u32) -> &[u8] {
        &self.strings[id as usize]
    }

    pub fn scan(&self, q: &[u8], tau: usize) -> Vec<u32> {
        (0..self.strings.len() as u32)
            .filter(|&id| verify_edit_distance(self.string(id), q, tau))
            .collect()
    }

    /// Global-order comparison of object `id`'s last prefix gram with `g`.
    fn last_cmp(&self, id: u32, last: (u64, u32), g: &PositionalGram<'_>) -> Ordering {
        let pos = last.1 as usize;
        let gram = &self.strings[id as usize][pos..pos + self.kappa];
        (last.0, gram).cmp(&(g.freq, g.gram))
    }

    fn length_ok(&self, id: u32, q: &[u8], tau: usize) -> bool {
        self.strings[id as usize].len().abs_diff(q.len()) <= tau
    }

    pub fn query(&self, q: &[u8], tau: usize, l: usize) -> Result<QueryOutput> {
        if tau > self.tau_max {
            return Err(Error::param(format!(
                "tau {tau} exceeds the index maximum {}",
                self.tau_max
            )));
        }
        let m = tau + 1;
        if l == 0 || l > m {
            return Err(Error::InvalidChain { len: l, m });
        }
        let bucket = &self.buckets[tau];
        let kappa = self.kappa;
        let mut stats = QueryStats::default();
        let mut candidates: Vec<u32> = Vec::new();

        let t0 = Instant::now();
        let grams = sorted_grams(q, kappa, &self.order);
        let p = prefix_size(kappa, tau);
        if grams.len() < p {
            // Too short for a prefix: verify everything that passes the length filter.
            candidates.extend((0..self.strings.len() as u32).filter(|&id| self.length_ok(id, q, tau)));
            QueryStats::add_time(&mut stats.probe_ns, t0.elapsed());
            return Ok(self.verify(q, tau, candidates, stats));
        }
        let prefix = &grams[..p];
        let q_last = &prefix[p - 1];
        let q_piv = select_pivotal(prefix, kappa, tau)?;

        // (object, pivot index); the side is implied by the object's last gram.
        let mut seeds: Vec<(u32, u16)> = Vec::new();
        for g in prefix {
            let Some(list) = bucket.pivots.get(g.gram) else {
                continue;
            };
            stats.probes += 1;
            for &(id, j, pos) in list {
                if (pos as usize).abs_diff(g.pos) > tau || !self.length_ok(id, q, tau) {
                    continue;
                }
                let last = bucket.objects[id as usize].as_ref().expect("indexed").last;
                if self.last_cmp(id, last, q_last) == Ordering::Less {
                    seeds.push((id, j));
                }
            }
        }
        for (j, g) in q_piv.iter().enumerate() {
            let Some(list) = bucket.prefix.get(g.gram) else {
                continue;
            };
            stats.probes += 1;
            for &(id, pos) in list {
                if (pos as usize).abs_diff(g.pos) > tau || !self.length_ok(id, q, tau) {
                    continue;
                }
                let last = bucket.objects[id as usize].as_ref().expect("indexed").last;
                if self.last_cmp(id, last, q_last) != Ordering::Less {
                    seeds.push((id, j as u16));
                }
            }
        }
        seeds.sort_unstable();
        seeds.dedup();
        stats.viable_boxes = seeds.len() as u64;
        let probe_time = t0.elapsed();

        let tc = Instant::now();
        let spec = ThresholdSpec::fixed(Ratio::from_integer(tau as i64), Direction::AtMost);
        let table = QuotaTable::compile(&spec, m, l)?;
        let q_sigs = window_signatures(q, kappa);
        let mut cache: Vec<Option<i64>> = vec![None; m];
        let mut g = 0;
        while g < seeds.len() {
            let id = seeds[g].0;
            let mut h = g;
            while h < seeds.len() && seeds[h].0 == id {
                h += 1;
            }
            let group = &seeds[g..h];
            g = h;
            stats.pigeonhole_candidates += 1;

            let obj = bucket.objects[id as usize].as_ref().expect("indexed");
            let x = &self.strings[id as usize];
            let x_side = self.last_cmp(id, obj.last, q_last) == Ordering::Less;
            cache.iter_mut().for_each(|c| *c = None);
            let mut box_at = |j: usize| -> i64 {
                if let Some(v) = cache[j] {
                    return v;
                }
                let v = if x_side {
                    let pos = obj.pivots[j] as usize;
                    box_lower_bound_with(&x[pos..pos + kappa], pos, q, tau, Some(&q_sigs))
                } else {
                    let pos = q_piv[j].pos;
                    box_lower_bound_with(q_piv[j].gram, pos, x, tau, Some(&self.sigs[id as usize]))
                };
                cache[j] = Some(v);
                v
            };
            let mut skip_to = 0;
            for &(_, j) in group {
                let j = j as usize;
                if j < skip_to {
                    continue;
                }
                let (check, evaluated) = table.check_prefixes(j, l, &mut box_at);
                stats.box_checks += evaluated as u64;
                match check {
                    PrefixCheck::Viable => {
                        candidates.push(id);
                        break;
                    }
                    PrefixCheck::FailsAt(len) => skip_to = j + len,
                }
            }
        }
        candidates.extend(bucket.short.iter().copied().filter(|&id| self.length_ok(id, q, tau)));
        candidates.sort_unstable();
        QueryStats::add_time(&mut stats.probe_ns, probe_time);
        QueryStats::add_time(&mut stats.check_ns, tc.elapsed());
        Ok(self.verify(q, tau, candidates, stats))
    }

    fn verify(&self, q: &[u8], tau: usize, candidates: Vec<u32>, mut stats: QueryStats) -> QueryOutput {
        let tv = Instant::now();
        let results: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&id| verify_edit_distance(self.string(id), q, tau))
            .collect();
        QueryStats::add_time(&mut stats.verify_ns, tv.elapsed());
        stats.candidates = candidates.len() as u64;
        stats.verifications = candidates.len() as u64;
        stats.results = results.len() as u64;
        QueryOutput {
            results,
            candidates,
            stats,
        }
    }
}

/// Edit distance as a filtering instance: `m = tau + 1` signature lower
/// bounds on the probing side's pivots, `D(tau) = tau`.
#[derive(Clone, Debug)]
pub struct StringInstance {
    pub kappa: usize,
    pub order: GramOrder,
}

impl FilterInstance for StringInstance {
    type Object = Vec<u8>;
    type Features = Vec<u8>;

    fn featurize(&self, o: &Vec<u8>) -> Result<Vec<u8>> {
        Ok(o.clone())
    }

    fn box_count(&self, _q: &Vec<u8>, tau: i64) -> usize {
        tau.max(0) as usize + 1
    }

    fn box_value(&self, x: &Vec<u8>, q: &Vec<u8>, tau: i64, i: usize) -> i64 {
        let tau = tau.max(0) as usize;
        let (Some(px), Some(pq)) = (
            extract_prefix_grams(x, self.kappa, tau, &self.order),
            extract_prefix_grams(q, self.kappa, tau, &self.order),
        ) else {
            return 0;
        };
        let x_side = px[px.len() - 1].key_cmp(&pq[pq.len() - 1]) == Ordering::Less;
        let (prefix, other) = if x_side { (&px, q) } else { (&pq, x) };
        match select_pivotal(prefix, self.kappa, tau) {
            Ok(piv) => box_lower_bound_with(piv[i].gram, piv[i].pos, other, tau, None),
            Err(_) => 0,
        }
    }

    fn bound(&self, tau: i64) -> i64 {
        tau
    }

    fn direction(&self) -> Direction {
        Direction::AtMost
    }

    fn thresholds(&self, _q: &Vec<u8>, tau: i64, _m: usize) -> Result<ThresholdSpec> {
        Ok(ThresholdSpec::fixed(Ratio::from_integer(tau), Direction::AtMost))
    }
}
