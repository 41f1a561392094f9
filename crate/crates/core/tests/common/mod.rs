#![allow(dead_code)]

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pigeonring::hamming::{partition_dims, BinaryVector, HammingIndex, HammingQuery};
use pigeonring::ring::{Direction, ThresholdSpec};
use pigeonring::setsim::{SetIndex, SetThreshold};
use pigeonring::strsim::StringIndex;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut impl Rng, d: usize) -> BinaryVector {
    let bits: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.5)).collect();
    BinaryVector::from_bits(&bits)
}

/// Flips `k` distinct random dimensions.
pub fn flip(rng: &mut impl Rng, v: &BinaryVector, k: usize) -> BinaryVector {
    let mut out = v.clone();
    let mut dims: Vec<usize> = (0..v.d()).collect();
    dims.shuffle(rng);
    for &i in dims.iter().take(k) {
        out.set(i, !out.get(i));
    }
    out
}

/// Random split of `total` into `m` integers, possibly negative.
pub fn random_split(rng: &mut impl Rng, total: i64, m: usize) -> Vec<i64> {
    let mut t = vec![0i64; m];
    let mut left = total;
    for x in t.iter_mut().take(m - 1) {
        let v = rng.gen_range(-1..=3).min(left.max(-1) + 1);
        *x = v;
        left -= v;
    }
    t[m - 1] = left;
    t.shuffle(rng);
    t
}

pub struct HammingCase {
    pub index: HammingIndex,
    pub queries: Vec<BinaryVector>,
    pub tau: i64,
    pub spec: ThresholdSpec,
    pub m: usize,
}

impl HammingCase {
    pub fn query(&self, l: usize) -> HammingQuery {
        HammingQuery::with_spec(self.tau, l, self.spec.clone())
    }
}

pub fn hamming_case(seed: u64) -> HammingCase {
    let mut r = rng(seed);
    let d: usize = r.gen_range(8..=96);
    let m = r.gen_range(d.div_ceil(64)..=d.min(7));
    let tau = r.gen_range(0..=(d as i64 / 3));
    let n = r.gen_range(20..200);
    let centers: Vec<BinaryVector> = (0..4).map(|_| random_vector(&mut r, d)).collect();
    let data: Vec<BinaryVector> = (0..n)
        .map(|_| {
            let c = &centers[r.gen_range(0..centers.len())];
            let k = r.gen_range(0..=(2 * tau as usize + 2).min(d));
            flip(&mut r, c, k)
        })
        .collect();
    let queries = (0..10)
        .map(|_| {
            let c = &data[r.gen_range(0..data.len())];
            let k = r.gen_range(0..=(tau as usize + 1).min(d));
            flip(&mut r, c, k)
        })
        .collect();
    let spec = match r.gen_range(0..3) {
        0 => ThresholdSpec::fixed(Ratio::from_integer(tau), Direction::AtMost),
        1 => {
            let den = r.gen_range(1..=3);
            let t = random_split(&mut r, tau * den, m).into_iter().map(|v| Ratio::new(v, den)).collect();
            ThresholdSpec::variable(t, Direction::AtMost)
        }
        _ => ThresholdSpec::integer_reduction(random_split(&mut r, tau - m as i64 + 1, m), Direction::AtMost),
    };
    let perm = r.gen_bool(0.5).then(|| r.gen());
    let index = HammingIndex::build(data, partition_dims(d, m).unwrap(), perm).unwrap();
    HammingCase {
        index,
        queries,
        tau,
        spec,
        m,
    }
}

pub struct SetCase {
    pub index: SetIndex,
    pub queries: Vec<Vec<String>>,
    pub m: usize,
}

fn zipf_token(rng: &mut impl Rng, vocab: usize) -> String {
    let u: f64 = rng.gen();
    let k = ((vocab as f64).powf(u) - 1.0) as usize;
    format!("t{}", k.min(vocab - 1))
}

pub fn set_case(seed: u64) -> SetCase {
    let mut r = rng(seed);
    let vocab = r.gen_range(5..60);
    let n = r.gen_range(10..150);
    let records: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let len = r.gen_range(0..14);
            (0..len).map(|_| zipf_token(&mut r, vocab)).collect()
        })
        .collect();
    let m = r.gen_range(2..=6);
    let threshold = if r.gen_bool(0.7) {
        let choices = [Ratio::new(1, 5), Ratio::new(1, 3), Ratio::new(1, 2), Ratio::new(3, 5), Ratio::new(3, 4), Ratio::new(9, 10), Ratio::from_integer(1)];
        SetThreshold::Jaccard(*choices.choose(&mut r).unwrap())
    } else {
        SetThreshold::Overlap(r.gen_range(1..=6))
    };
    let queries = (0..10)
        .map(|_| {
            let mut q = records[r.gen_range(0..records.len())].clone();
            for _ in 0..r.gen_range(0..3) {
                if !q.is_empty() && r.gen_bool(0.5) {
                    let i = r.gen_range(0..q.len());
                    q.remove(i);
                } else if r.gen_bool(0.2) {
                    q.push(format!("unknown{}", r.gen_range(0..3)));
                } else {
                    q.push(zipf_token(&mut r, vocab));
                }
            }
            q
        })
        .collect();
    SetCase {
        index: SetIndex::build(&records, m, threshold).unwrap(),
        queries,
        m,
    }
}

pub fn mutate(rng: &mut impl Rng, s: &[u8], edits: usize, alphabet: &[u8]) -> Vec<u8> {
    let mut out = s.to_vec();
    for _ in 0..edits {
        let c = *alphabet.choose(rng).unwrap();
        match rng.gen_range(0..3) {
            0 if !out.is_empty() => {
                let i = rng.gen_range(0..out.len());
                out[i] = c;
            }
            1 if !out.is_empty() => {
                let i = rng.gen_range(0..out.len());
                out.remove(i);
            }
            _ => {
                let i = rng.gen_range(0..=out.len());
                out.insert(i, c);
            }
        }
    }
    out
}

pub struct StringCase {
    pub index: StringIndex,
    pub queries: Vec<Vec<u8>>,
    pub tau: usize,
}

pub fn string_case(seed: u64) -> StringCase {
    let mut r = rng(seed);
    let alphabet: &[u8] = [&b"ab"[..], b"abcd", b"abcdefghij"][r.gen_range(0..3)];
    let tau = r.gen_range(0..=4);
    let kappa = r.gen_range(1..=3);
    let n = r.gen_range(10..120);
    let seeds: Vec<Vec<u8>> = (0..5)
        .map(|_| (0..r.gen_range(0..24)).map(|_| *alphabet.choose(&mut r).unwrap()).collect())
        .collect();
    let strings: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let s = &seeds[r.gen_range(0..seeds.len())];
            let k = r.gen_range(0..=2 * tau + 1);
            mutate(&mut r, s, k, alphabet)
        })
        .collect();
    let queries = (0..10)
        .map(|_| {
            let s = &strings[r.gen_range(0..strings.len())];
            let k = r.gen_range(0..=tau + 1);
            mutate(&mut r, s, k, alphabet)
        })
        .collect();
    StringCase {
        index: StringIndex::build(strings, kappa, tau).unwrap(),
        queries,
        tau,
    }
}

/// Runs every chain length on every query and compares with the scan.
/// Returns the first mismatch.
pub fn hamming_matches_scan(c: &HammingCase) -> Result<(), String> {
    for (qi, q) in c.queries.iter().enumerate() {
        let want = c.index.scan(q, c.tau).unwrap();
        let mut prev: Option<Vec<u32>> = None;
        for l in 1..=c.m {
            let out = c.index.query(q, &c.query(l)).map_err(|e| e.to_string())?;
            check_output(&out.results, &out.candidates, &want, prev.as_deref(), qi, l)?;
            prev = Some(out.candidates);
        }
    }
    Ok(())
}

pub fn set_matches_scan(c: &SetCase) -> Result<(), String> {
    for (qi, q) in c.queries.iter().enumerate() {
        let enc = c.index.encode(q);
        let want = c.index.scan(&enc);
        let mut prev: Option<Vec<u32>> = None;
        for l in 1..=c.m {
            let out = c.index.query(&enc, l).map_err(|e| e.to_string())?;
            check_output(&out.results, &out.candidates, &want, prev.as_deref(), qi, l)?;
            prev = Some(out.candidates);
        }
    }
    Ok(())
}

pub fn string_matches_scan(c: &StringCase) -> Result<(), String> {
    for (qi, q) in c.queries.iter().enumerate() {
        let want = c.index.scan(q, c.tau);
        let mut prev: Option<Vec<u32>> = None;
        for l in 1..=c.tau + 1 {
            let out = c.index.query(q, c.tau, l).map_err(|e| e.to_string())?;
            check_output(&out.results, &out.candidates, &want, prev.as_deref(), qi, l)?;
            prev = Some(out.candidates);
        }
    }
    Ok(())
}

fn check_output(results: &[u32], cands: &[u32], want: &[u32], prev: Option<&[u32]>, qi: usize, l: usize) -> Result<(), String> {
    if results != want {
        return Err(format!("query {qi} l={l}: got {results:?}, scan {want:?}"));
    }
    if !results.iter().all(|r| cands.binary_search(r).is_ok()) {
        return Err(format!("query {qi} l={l}: result outside candidates"));
    }
    if let Some(p) = prev {
        if !cands.iter().all(|c| p.binary_search(c).is_ok()) {
            return Err(format!("query {qi} l={l}: candidates not a subset of l-1"));
        }
    }
    Ok(())
}
