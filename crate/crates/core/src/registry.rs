//! Named threshold strategies and search engines, looked up at run time.

use std::time::{Duration, Instant};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hamming::{self, BinaryVector, HammingIndex, HammingQuery};
use crate::io;
use crate::ring::{Direction, ThresholdSpec};
use crate::setsim::{SetIndex, SetThreshold};
use crate::stats::QueryOutput;
use crate::strsim::{self, StringIndex};

/// Turns a threshold, a box count and optional explicit per-box values into
/// a [`ThresholdSpec`].
pub trait ThresholdStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn build(
        &self,
        tau: i64,
        m: usize,
        explicit: Option<&[Ratio<i64>]>,
        direction: Direction,
    ) -> Result<ThresholdSpec>;
}

struct Fixed;
struct Variable;
struct IntegerReduction;

fn check_len(explicit: &[Ratio<i64>], m: usize) -> Result<()> {
    if explicit.len() != m {
        return Err(Error::ThresholdMismatch(format!(
            "{} thresholds for {m} boxes",
            explicit.len()
        )));
    }
    Ok(())
}

impl ThresholdStrategy for Fixed {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn build(&self, tau: i64, _m: usize, explicit: Option<&[Ratio<i64>]>, direction: Direction) -> Result<ThresholdSpec> {
        if explicit.is_some() {
            return Err(Error::param("fixed quotas take no per-box thresholds"));
        }
        Ok(ThresholdSpec::fixed(Ratio::from_integer(tau), direction))
    }
}

impl ThresholdStrategy for Variable {
    fn name(&self) -> &'static str {
        "variable"
    }

    /// Without explicit values, every box gets `tau / m`.
    fn build(&self, tau: i64, m: usize, explicit: Option<&[Ratio<i64>]>, direction: Direction) -> Result<ThresholdSpec> {
        if m == 0 {
            return Err(Error::EmptyBoxes);
        }
        let t = match explicit {
            Some(t) => {
                check_len(t, m)?;
                t.to_vec()
            }
            None => vec![Ratio::new(tau, m as i64); m],
        };
        Ok(ThresholdSpec::variable(t, direction))
    }
}

impl ThresholdStrategy for IntegerReduction {
    fn name(&self) -> &'static str {
        "intred"
    }

    /// Without explicit values, `tau - m + 1` (at most) or `tau + m - 1` (at
    /// least) is split evenly.
    fn build(&self, tau: i64, m: usize, explicit: Option<&[Ratio<i64>]>, direction: Direction) -> Result<ThresholdSpec> {
        if m == 0 {
            return Err(Error::EmptyBoxes);
        }
        let t = match explicit {
            Some(t) => {
                check_len(t, m)?;
                t.iter()
                    .map(|r| {
                        r.is_integer()
                            .then(|| r.to_integer())
                            .ok_or_else(|| Error::param("integer-reduction thresholds must be integers"))
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            None => {
                let total = match direction {
                    Direction::AtMost => tau - m as i64 + 1,
                    Direction::AtLeast => tau + m as i64 - 1,
                };
                crate::ring::even_split(total, m)
            }
        };
        Ok(ThresholdSpec::integer_reduction(t, direction))
    }
}

pub struct StrategyRegistry {
    entries: Vec<Box<dyn ThresholdStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { entries: Vec::new() }
    }

    /// `fixed`, `variable` and `intred`.
    pub fn builtin() -> Self {
        let mut r = StrategyRegistry::empty();
        r.register(Box::new(Fixed));
        r.register(Box::new(Variable));
        r.register(Box::new(IntegerReduction));
        r
    }

    /// Adds a strategy, replacing any with the same name.
    pub fn register(&mut self, s: Box<dyn ThresholdStrategy>) {
        self.entries.retain(|e| e.name() != s.name());
        self.entries.push(s);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ThresholdStrategy> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "threshold mode",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        StrategyRegistry::builtin()
    }
}

/// Run options shared by all engines. Unset fields take engine defaults.
#[derive(Clone, Debug, Default)]
pub struct EngineConfig {
    /// Distance threshold (Hamming, edit distance) or overlap threshold (sets).
    pub tau: Option<i64>,
    pub jaccard: Option<Ratio<i64>>,
    /// Box count `m`.
    pub parts: Option<usize>,
    pub mode: Option<String>,
    pub thresholds: Option<Vec<Ratio<i64>>>,
    /// Dimension permutation seed (Hamming only).
    pub seed: Option<u64>,
    /// Gram length (strings only).
    pub kappa: Option<usize>,
}

/// An index built over a data file together with its parsed queries.
pub trait PreparedSearch: Send + Sync {
    fn m(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn query_count(&self) -> usize;
    /// Recommended chain length.
    fn default_chain(&self) -> usize;
    fn build_time(&self) -> Duration;
    fn query(&self, qi: usize, chain: usize) -> Result<QueryOutput>;
    /// Linear-scan answer, for checking.
    fn scan(&self, qi: usize) -> Result<Vec<u32>>;
}

pub trait SearchEngine: Send + Sync {
    fn name(&self) -> &'static str;
    fn prepare(
        &self,
        data: &[u8],
        queries: &[u8],
        cfg: &EngineConfig,
        strategies: &StrategyRegistry,
    ) -> Result<Box<dyn PreparedSearch>>;
}

fn require_tau(cfg: &EngineConfig) -> Result<i64> {
    let tau = cfg.tau.ok_or_else(|| Error::param("--tau is required"))?;
    if tau < 0 {
        return Err(Error::param("tau must be non-negative"));
    }
    Ok(tau)
}

fn only_mode(cfg: &EngineConfig, engine: &str, mode: &str) -> Result<()> {
    match cfg.mode.as_deref() {
        Some(m) if m != mode => Err(Error::param(format!("{engine} search supports only --mode {mode}"))),
        _ => Ok(()),
    }
}

fn reject(cond: bool, what: &str, engine: &str) -> Result<()> {
    if cond {
        return Err(Error::param(format!("{what} does not apply to {engine} search")));
    }
    Ok(())
}

struct HammingEngine;

struct PreparedHamming {
    index: HammingIndex,
    queries: Vec<BinaryVector>,
    tau: i64,
    spec: ThresholdSpec,
    build: Duration,
}

impl SearchEngine for HammingEngine {
    fn name(&self) -> &'static str {
        "hamming"
    }

    fn prepare(
        &self,
        data: &[u8],
        queries: &[u8],
        cfg: &EngineConfig,
        strategies: &StrategyRegistry,
    ) -> Result<Box<dyn PreparedSearch>> {
        reject(cfg.jaccard.is_some(), "--jaccard", "Hamming")?;
        reject(cfg.kappa.is_some(), "--kappa", "Hamming")?;
        let tau = require_tau(cfg)?;
        let strategy = strategies.get(cfg.mode.as_deref().unwrap_or("fixed"))?;
        let data = io::parse_vectors(data)?;
        let queries = io::parse_vectors(queries)?;
        let d = data.first().or(queries.first()).map_or(0, |v| v.d());
        if d == 0 {
            return Err(Error::param("no vectors to infer the dimension from"));
        }
        if let Some(q) = queries.first() {
            if !data.is_empty() && q.d() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: q.d(),
                });
            }
        }
        io::check_dimensions(&queries, d)?;
        let m = cfg.parts.unwrap_or_else(|| hamming::default_parts(d));
        let spec = strategy.build(tau, m, cfg.thresholds.as_deref(), Direction::AtMost)?;
        let t0 = Instant::now();
        let layout = hamming::partition_dims(d, m)?;
        let index = HammingIndex::build(data, layout, cfg.seed)?;
        Ok(Box::new(PreparedHamming {
            index,
            queries,
            tau,
            spec,
            build: t0.elapsed(),
        }))
    }
}

impl PreparedSearch for PreparedHamming {
    fn m(&self) -> usize {
        self.index.layout().m()
    }
    fn len(&self) -> usize {
        self.index.len()
    }
    fn query_count(&self) -> usize {
        self.queries.len()
    }
    fn default_chain(&self) -> usize {
        5.min(self.m())
    }
    fn build_time(&self) -> Duration {
        self.build
    }
    fn query(&self, qi: usize, chain: usize) -> Result<QueryOutput> {
        let params = HammingQuery::with_spec(self.tau, chain, self.spec.clone());
        self.index.query(&self.queries[qi], &params)
    }
    fn scan(&self, qi: usize) -> Result<Vec<u32>> {
        self.index.scan(&self.queries[qi], self.tau)
    }
}

struct SetEngine;

struct PreparedSet {
    index: SetIndex,
    queries: Vec<Vec<u32>>,
    build: Duration,
}

pub const DEFAULT_SET_PARTS: usize = 5;

impl SearchEngine for SetEngine {
    fn name(&self) -> &'static str {
        "set"
    }

    fn prepare(
        &self,
        data: &[u8],
        queries: &[u8],
        cfg: &EngineConfig,
        _strategies: &StrategyRegistry,
    ) -> Result<Box<dyn PreparedSearch>> {
        only_mode(cfg, "set", "intred")?;
        reject(cfg.thresholds.is_some(), "--thresholds", "set")?;
        reject(cfg.kappa.is_some(), "--kappa", "set")?;
        reject(cfg.seed.is_some(), "--seed", "set")?;
        let threshold = match (cfg.tau, cfg.jaccard) {
            (Some(_), Some(_)) => return Err(Error::param("give either --tau or --jaccard, not both")),
            (Some(t), None) => SetThreshold::Overlap(t),
            (None, Some(j)) => SetThreshold::Jaccard(j),
            (None, None) => return Err(Error::param("--jaccard or --tau is required")),
        };
        let m = cfg.parts.unwrap_or(DEFAULT_SET_PARTS);
        let records = io::parse_sets(data);
        let queries = io::parse_sets(queries);
        let t0 = Instant::now();
        let index = SetIndex::build(&records, m, threshold)?;
        let build = t0.elapsed();
        let queries = queries.iter().map(|q| index.encode(q)).collect();
        Ok(Box::new(PreparedSet { index, queries, build }))
    }
}

impl PreparedSearch for PreparedSet {
    fn m(&self) -> usize {
        self.index.m()
    }
    fn len(&self) -> usize {
        self.index.len()
    }
    fn query_count(&self) -> usize {
        self.queries.len()
    }
    fn default_chain(&self) -> usize {
        2.min(self.m())
    }
    fn build_time(&self) -> Duration {
        self.build
    }
    fn query(&self, qi: usize, chain: usize) -> Result<QueryOutput> {
        self.index.query(&self.queries[qi], chain)
    }
    fn scan(&self, qi: usize) -> Result<Vec<u32>> {
        Ok(self.index.scan(&self.queries[qi]))
    }
}

struct StringEngine;

struct PreparedString {
    index: StringIndex,
    queries: Vec<Vec<u8>>,
    tau: usize,
    build: Duration,
}

impl SearchEngine for StringEngine {
    fn name(&self) -> &'static str {
        "string"
    }

    fn prepare(
        &self,
        data: &[u8],
        queries: &[u8],
        cfg: &EngineConfig,
        _strategies: &StrategyRegistry,
    ) -> Result<Box<dyn PreparedSearch>> {
        only_mode(cfg, "string", "fixed")?;
        reject(cfg.thresholds.is_some(), "--thresholds", "string")?;
        reject(cfg.jaccard.is_some(), "--jaccard", "string")?;
        reject(cfg.seed.is_some(), "--seed", "string")?;
        let tau = require_tau(cfg)? as usize;
        if let Some(m) = cfg.parts {
            if m != tau + 1 {
                return Err(Error::param(format!("string search uses tau + 1 = {} boxes", tau + 1)));
            }
        }
        let kappa = cfg.kappa.unwrap_or_else(|| strsim::default_kappa(tau));
        let strings = io::parse_strings(data);
        let queries = io::parse_strings(queries);
        let t0 = Instant::now();
        let index = StringIndex::build(strings, kappa, tau)?;
        Ok(Box::new(PreparedString {
            index,
            queries,
            tau,
            build: t0.elapsed(),
        }))
    }
}

impl PreparedSearch for PreparedString {
    fn m(&self) -> usize {
        self.tau + 1
    }
    fn len(&self) -> usize {
        self.index.len()
    }
    fn query_count(&self) -> usize {
        self.queries.len()
    }
    fn default_chain(&self) -> usize {
        strsim::default_chain(self.tau)
    }
    fn build_time(&self) -> Duration {
        self.build
    }
    fn query(&self, qi: usize, chain: usize) -> Result<QueryOutput> {
        self.index.query(&self.queries[qi], self.tau, chain)
    }
    fn scan(&self, qi: usize) -> Result<Vec<u32>> {
        Ok(self.index.scan(&self.queries[qi], self.tau))
    }
}

pub struct EngineRegistry {
    entries: Vec<Box<dyn SearchEngine>>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        EngineRegistry { entries: Vec::new() }
    }

    /// `hamming`, `set` and `string`.
    pub fn builtin() -> Self {
        let mut r = EngineRegistry::empty();
        r.register(Box::new(HammingEngine));
        r.register(Box::new(SetEngine));
        r.register(Box::new(StringEngine));
        r
    }

    pub fn register(&mut self, e: Box<dyn SearchEngine>) {
        self.entries.retain(|x| x.name() != e.name());
        self.entries.push(e);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SearchEngine> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| e.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "engine",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for EngineRegistry {
    fn default() -> Self {
        EngineRegistry::builtin()
    }
}

/// Parses `t0,t1,...` where each entry is an integer, decimal or `a/b`.
pub fn parse_thresholds(s: &str) -> Result<Vec<Ratio<i64>>> {
    s.split(',').map(|t| parse_ratio(t.trim())).collect()
}

fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::param(format!("invalid threshold {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 12 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: i64 = digits.parse().map_err(|_| bad())?;
    let r = Ratio::new(n, 10i64.pow(frac.len() as u32));
    Ok(if neg { -r } else { r })
}
