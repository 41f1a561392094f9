//! Candidate probability of the chain filter for i.i.d. integer boxes.
//!
//! Box values follow one pmf on `0..=omega`. Quotas are `l * tau / m` and a
//! partial sum `s` over `j` boxes is viable when `m * s <= j * tau`.
//! Computations are generic over `f64` and exact `BigRational`.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ring::{find_prefix_viable_starts, BoxSequence, Direction, QuotaTable, ThresholdSpec};

/// Exact arithmetic for the recurrences.
pub type Exact = BigRational;

/// Number type the recurrences run in.
pub trait Probability:
    Clone + fmt::Debug + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_ratio(r: &BigRational) -> Self;
    fn from_count(n: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn div(&self, other: &Self) -> Self;
}

impl Probability for f64 {
    fn from_ratio(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

impl Probability for BigRational {
    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
}

/// Probability mass function of one box over `0..=omega`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscretePdf {
    mass: Vec<BigRational>,
}

impl DiscretePdf {
    pub fn new(mass: Vec<BigRational>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::param("pmf needs at least one value"));
        }
        if mass.iter().any(|p| p < &BigRational::zero()) {
            return Err(Error::param("pmf entries must be non-negative"));
        }
        let total: BigRational = mass.iter().fold(BigRational::zero(), |a, b| a + b);
        let err = (total - BigRational::one()).abs();
        if err > BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000_000u64)) {
            return Err(Error::param("pmf entries must sum to 1"));
        }
        Ok(DiscretePdf { mass })
    }

    pub fn uniform(omega: usize) -> Self {
        let p = BigRational::new(BigInt::from(1), BigInt::from(omega + 1));
        DiscretePdf {
            mass: vec![p; omega + 1],
        }
    }

    /// Distance distribution of one `width`-bit part between independent
    /// uniform random vectors.
    pub fn binomial(width: usize) -> Self {
        let den = BigInt::from(1) << width;
        let mut c = BigInt::from(1);
        let mut mass = Vec::with_capacity(width + 1);
        for k in 0..=width {
            mass.push(BigRational::new(c.clone(), den.clone()));
            c = c * BigInt::from(width - k) / BigInt::from(k + 1);
        }
        DiscretePdf { mass }
    }

    pub fn point(v: usize) -> Self {
        let mut mass = vec![BigRational::zero(); v + 1];
        mass[v] = BigRational::one();
        DiscretePdf { mass }
    }

    pub fn omega(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self) -> &[BigRational] {
        &self.mass
    }

    fn masses<T: Probability>(&self) -> Vec<T> {
        self.mass.iter().map(T::from_ratio).collect()
    }
}

impl FromStr for DiscretePdf {
    type Err = Error;

    /// `uniform:W`, `binomial:W`, `point:V`, or comma-separated masses
    /// written as decimals or fractions.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let arg = |rest: &str| -> Result<usize> {
            rest.trim()
                .parse()
                .map_err(|_| Error::param(format!("invalid pmf argument in {s:?}")))
        };
        if let Some(rest) = s.strip_prefix("uniform:") {
            return Ok(DiscretePdf::uniform(arg(rest)?));
        }
        if let Some(rest) = s.strip_prefix("binomial:") {
            return Ok(DiscretePdf::binomial(arg(rest)?));
        }
        if let Some(rest) = s.strip_prefix("point:") {
            return Ok(DiscretePdf::point(arg(rest)?));
        }
        let mass = s.split(',').map(parse_exact).collect::<Result<Vec<_>>>()?;
        DiscretePdf::new(mass)
    }
}

fn parse_exact(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::param(format!("invalid probability {s:?}"));
    if s.contains('/') {
        return BigRational::from_str(s).map_err(|_| bad());
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if (int.is_empty() && frac.is_empty()) || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = BigInt::from_str(&digits).map_err(|_| bad())?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(num, den))
}

/// Box count, threshold and chain length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisParams {
    pub m: usize,
    pub tau: i64,
    pub l: usize,
}

impl AnalysisParams {
    pub fn new(m: usize, tau: i64, l: usize) -> Result<Self> {
        if m == 0 || l == 0 || l > m {
            return Err(Error::InvalidChain { len: l, m });
        }
        Ok(AnalysisParams { m, tau, l })
    }

    /// Whether a partial sum over `j` boxes is within its quota.
    #[inline]
    fn within(&self, s: usize, j: usize) -> bool {
        (self.m as i128) * (s as i128) <= (j as i128) * i128::from(self.tau)
    }
}

/// Distribution of the partial sum over `j` boxes, restricted to chains
/// whose every prefix is viable. Index `s` holds the mass at sum `s`.
pub fn prefix_viable_mass<T: Probability>(p: &DiscretePdf, params: &AnalysisParams, j: usize) -> Vec<T> {
    let mass: Vec<T> = p.masses();
    prefix_viable_mass_with(&mass, params, j)
}

fn prefix_viable_mass_with<T: Probability>(mass: &[T], params: &AnalysisParams, j: usize) -> Vec<T> {
    (1..=j).fold(vec![T::one()], |f, step| step_viable(&f, mass, params, step))
}

/// Probability that a chain is a word of length `i`: its `(i-1)`-prefix is
/// prefix-viable and its total exceeds the quota for `i` boxes.
pub fn word_prob<T: Probability>(p: &DiscretePdf, params: &AnalysisParams, i: usize) -> T {
    let mass: Vec<T> = p.masses();
    word_probs_with(&mass, params, i).pop().unwrap_or_else(T::zero)
}

/// `Pr(w^1) .. Pr(w^k)`.
fn word_probs_with<T: Probability>(mass: &[T], params: &AnalysisParams, k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(k);
    let mut f = vec![T::one()];
    for i in 1..=k {
        let mut w = T::zero();
        for (s, fs) in f.iter().enumerate() {
            for (v, pv) in mass.iter().enumerate() {
                if !params.within(s + v, i) {
                    w = w + fs.clone() * pv.clone();
                }
            }
        }
        out.push(w);
        f = step_viable(&f, mass, params, i);
    }
    out
}

fn step_viable<T: Probability>(f: &[T], mass: &[T], params: &AnalysisParams, step: usize) -> Vec<T> {
    let omega = mass.len() - 1;
    let mut next = vec![T::zero(); f.len() + omega];
    for (s, fs) in f.iter().enumerate() {
        if fs.is_zero() {
            continue;
        }
        for (v, pv) in mass.iter().enumerate() {
            if params.within(s + v, step) {
                next[s + v] = next[s + v].clone() + fs.clone() * pv.clone();
            }
        }
    }
    while next.len() > 1 && next.last().is_some_and(|x| x.is_zero()) {
        next.pop();
    }
    next
}

/// `M(0) .. M(m)` from word probabilities `Pr(w^1) .. Pr(w^l)`.
fn target_chain_probs<T: Probability>(words: &[T], m: usize, l: usize) -> Vec<T> {
    let mut mv = vec![T::one()];
    for x in 1..=m {
        let mut acc = T::zero();
        for i in 1..=x.min(l) {
            acc = acc + mv[x - i].clone() * words[i - 1].clone();
        }
        mv.push(acc);
    }
    mv
}

/// `N(1) .. N(m)`, index 0 unused.
fn no_candidate_probs<T: Probability>(words: &[T], mv: &[T], m: usize, l: usize) -> Vec<T> {
    let mut nv = vec![T::zero()];
    for x in 1..=m {
        let mut acc = mv[x].clone();
        if x > 1 {
            for i in 2..=x.min(l) {
                acc = acc + mv[x - i].clone() * T::from_count(i as u64 - 1) * words[i - 1].clone();
            }
        }
        nv.push(acc);
    }
    nv
}

/// `M(x)`: probability that a chain of `x` boxes is a target chain.
pub fn target_chain_prob<T: Probability>(p: &DiscretePdf, params: &AnalysisParams, x: usize) -> T {
    let mass: Vec<T> = p.masses();
    let words = word_probs_with(&mass, params, params.l);
    target_chain_probs(&words, x, params.l).pop().unwrap_or_else(T::one)
}

/// `(N(m), Pr(CAND_l))`.
pub fn no_candidate_prob<T: Probability>(p: &DiscretePdf, params: &AnalysisParams) -> (T, T) {
    let mass: Vec<T> = p.masses();
    let words = word_probs_with(&mass, params, params.l);
    let mv = target_chain_probs(&words, params.m, params.l);
    let n = no_candidate_probs(&words, &mv, params.m, params.l)[params.m].clone();
    (n.clone(), T::one() - n)
}

/// `P(sum of m boxes <= tau)` by repeated convolution.
pub fn result_prob<T: Probability>(p: &DiscretePdf, m: usize, tau: i64) -> T {
    if tau < 0 {
        return T::zero();
    }
    let mass: Vec<T> = p.masses();
    let cap = tau as usize;
    let mut dist = vec![T::one()];
    for _ in 0..m {
        let len = (dist.len() + mass.len() - 1).min(cap + 1);
        let mut next = vec![T::zero(); len];
        for (s, ds) in dist.iter().enumerate() {
            for (v, pv) in mass.iter().enumerate() {
                if s + v < len {
                    next[s + v] = next[s + v].clone() + ds.clone() * pv.clone();
                }
            }
        }
        dist = next;
    }
    dist.into_iter().fold(T::zero(), |a, b| a + b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport<T> {
    pub params: AnalysisParams,
    /// `Pr(w^1) .. Pr(w^l)`.
    pub word_probs: Vec<T>,
    /// `M(0) .. M(m)`.
    pub target: Vec<T>,
    /// `N(1) .. N(m)`.
    pub no_candidate: Vec<T>,
    pub candidate: T,
    pub result: T,
}

impl<T: Probability> AnalysisReport<T> {
    /// `Pr(CAND_l) / Pr(RES)`, or `None` when no object can be a result.
    pub fn ratio(&self) -> Option<T> {
        (!self.result.is_zero()).then(|| self.candidate.div(&self.result))
    }

    /// `(Pr(CAND_l) - Pr(RES)) / Pr(RES)`: false positives per result.
    pub fn false_positive_ratio(&self) -> Option<T> {
        (!self.result.is_zero()).then(|| (self.candidate.clone() - self.result.clone()).div(&self.result))
    }
}

pub fn analyze<T: Probability>(p: &DiscretePdf, params: &AnalysisParams) -> AnalysisReport<T> {
    let mass: Vec<T> = p.masses();
    let words = word_probs_with(&mass, params, params.l);
    let target = target_chain_probs(&words, params.m, params.l);
    let mut nv = no_candidate_probs(&words, &target, params.m, params.l);
    let candidate = T::one() - nv[params.m].clone();
    nv.remove(0);
    AnalysisReport {
        params: *params,
        word_probs: words,
        target,
        no_candidate: nv,
        candidate,
        result: result_prob(p, params.m, params.tau),
    }
}

/// `Pr(CAND_l)` for every `l` in `1..=m`, sharing the word probabilities.
pub fn candidate_curve<T: Probability>(p: &DiscretePdf, m: usize, tau: i64) -> Result<Vec<T>> {
    let params = AnalysisParams::new(m, tau, m)?;
    let mass: Vec<T> = p.masses();
    let words = word_probs_with(&mass, &params, m);
    Ok((1..=m)
        .map(|l| {
            let mv = target_chain_probs(&words, m, l);
            T::one() - no_candidate_probs(&words, &mv, m, l)[m].clone()
        })
        .collect())
}

/// `(l, Pr(CAND_l) / Pr(RES))` for each requested `l`. Empty when
/// `Pr(RES) = 0`.
pub fn ratio_curve<T: Probability>(p: &DiscretePdf, m: usize, tau: i64, ls: &[usize]) -> Result<Vec<(usize, T)>> {
    if let Some(&bad) = ls.iter().find(|&&l| l == 0 || l > m) {
        return Err(Error::InvalidChain { len: bad, m });
    }
    let res: T = result_prob(p, m, tau);
    if res.is_zero() {
        return Ok(Vec::new());
    }
    let cand = candidate_curve::<T>(p, m, tau)?;
    Ok(ls.iter().map(|&l| (l, cand[l - 1].div(&res))).collect())
}

/// Candidate probability by enumerating all `(omega + 1)^m` box sequences
/// and running the ring filter on each.
pub fn exhaustive_candidate_prob<T: Probability>(p: &DiscretePdf, params: &AnalysisParams) -> Result<T> {
    let base = p.omega() as u128 + 1;
    let size = (0..params.m).try_fold(1u128, |a, _| a.checked_mul(base));
    match size {
        Some(s) if s <= crate::ring::ENUMERATION_LIMIT => {}
        Some(s) => {
            return Err(Error::ScaleGuard {
                size: s,
                limit: crate::ring::ENUMERATION_LIMIT,
            })
        }
        None => {
            return Err(Error::ScaleGuard {
                size: u128::MAX,
                limit: crate::ring::ENUMERATION_LIMIT,
            })
        }
    }
    let mass: Vec<T> = p.masses();
    let spec = ThresholdSpec::fixed(Ratio::from_integer(params.tau), Direction::AtMost);
    let omega = p.omega() as i64;
    let mut values = vec![0i64; params.m];
    let mut total = T::zero();
    loop {
        let b = BoxSequence::new(values.clone())?;
        if !find_prefix_viable_starts(&b, &spec, params.l)?.is_empty() {
            let w = values
                .iter()
                .fold(T::one(), |acc, &v| acc * mass[v as usize].clone());
            total = total + w;
        }
        let mut k = 0;
        while k < values.len() && values[k] == omega {
            values[k] = 0;
            k += 1;
        }
        if k == values.len() {
            break;
        }
        values[k] += 1;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub candidate: f64,
    pub candidate_se: f64,
    pub result: f64,
    pub result_se: f64,
}

/// Samples rings of `m` i.i.d. boxes. Partition `k` draws from a ChaCha
/// stream `k` under `seed`, so the estimate depends only on the seed and the
/// partition count; partitions run on separate threads.
pub fn monte_carlo(
    p: &DiscretePdf,
    params: &AnalysisParams,
    samples: u64,
    seed: u64,
    partitions: usize,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::param("samples must be at least 1"));
    }
    let partitions = partitions.clamp(1, samples.min(1024) as usize);
    let weights: Vec<f64> = p.mass.iter().map(<f64 as Probability>::from_ratio).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::param(format!("pmf: {e}")))?;
    let spec = ThresholdSpec::fixed(Ratio::from_integer(params.tau), Direction::AtMost);
    let table = QuotaTable::compile(&spec, params.m, params.l)?;
    let per = samples / partitions as u64;
    let extra = samples % partitions as u64;

    let counts: Vec<(u64, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..partitions)
            .map(|k| {
                let n = per + u64::from((k as u64) < extra);
                let dist = &dist;
                let table = &table;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let mut b = vec![0i64; params.m];
                    let (mut cand, mut res) = (0u64, 0u64);
                    for _ in 0..n {
                        for v in b.iter_mut() {
                            *v = dist.sample(&mut rng) as i64;
                        }
                        if table.first_prefix_viable_start(params.l, |j| b[j]).is_some() {
                            cand += 1;
                        }
                        if b.iter().sum::<i64>() <= params.tau {
                            res += 1;
                        }
                    }
                    (cand, res)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler thread")).collect()
    });
    let (cand, res) = counts.iter().fold((0, 0), |a, c| (a.0 + c.0, a.1 + c.1));
    let n = samples as f64;
    let est = |c: u64| {
        let ph = c as f64 / n;
        (ph, (ph * (1.0 - ph) / n).sqrt())
    };
    let (c, cse) = est(cand);
    let (r, rse) = est(res);
    Ok(MonteCarloEstimate {
        samples,
        candidate: c,
        candidate_se: cse,
        result: r,
        result_se: rse,
    })
}
