//! Hamming distance search over fixed-width binary vectors.
//!
//! Dimensions are split into `m` contiguous parts; box `i` is the Hamming
//! distance over part `i`, so the boxes sum to the full distance.

mod index;
mod vector;

pub use index::{HammingIndex, HammingQuery};
pub use vector::BinaryVector;

use std::ops::Range;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::framework::FilterInstance;
use crate::ring::{Direction, ThresholdSpec};

/// Contiguous, near-equal-width partition of `d` dimensions into `m` parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartLayout {
    d: usize,
    bounds: Vec<usize>,
}

impl PartLayout {
    pub fn m(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn part(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1]
    }

    pub fn width(&self, i: usize) -> usize {
        self.bounds[i + 1] - self.bounds[i]
    }

    pub fn widths(&self) -> Vec<usize> {
        (0..self.m()).map(|i| self.width(i)).collect()
    }
}

/// Splits `d` dimensions into `m` contiguous parts whose widths differ by at
/// most one; the first `d mod m` parts get the extra dimension.
pub fn partition_dims(d: usize, m: usize) -> Result<PartLayout> {
    if m == 0 {
        return Err(Error::param("part count must be at least 1"));
    }
    if m > d {
        return Err(Error::param(format!("{m} parts exceed {d} dimensions")));
    }
    let base = d / m;
    let extra = d % m;
    let mut bounds = Vec::with_capacity(m + 1);
    bounds.push(0);
    for i in 0..m {
        let w = base + usize::from(i < extra);
        bounds.push(bounds[i] + w);
    }
    Ok(PartLayout { d, bounds })
}

/// Default part count: one part per 16 dimensions, at least one.
pub fn default_parts(d: usize) -> usize {
    (d / 16).max(1)
}

/// Integer-reduction thresholds with `sum(T) = tau - m + 1`, split evenly.
///
/// When `tau < m - 1` some entries are negative; such boxes can never be
/// viable on their own and are never probed.
pub fn allocate_thresholds(tau: i64, m: usize) -> Result<ThresholdSpec> {
    if m == 0 {
        return Err(Error::param("part count must be at least 1"));
    }
    if tau < 0 {
        return Err(Error::param("tau must be non-negative"));
    }
    let t = crate::ring::even_split(tau - m as i64 + 1, m);
    Ok(ThresholdSpec::integer_reduction(t, Direction::AtMost))
}

/// Hamming distance between `x` and `q` restricted to part `i`.
pub fn part_distance(x: &BinaryVector, q: &BinaryVector, layout: &PartLayout, i: usize) -> u32 {
    let r = layout.part(i);
    (x.bits_range(r.start, r.len()) ^ q.bits_range(r.start, r.len())).count_ones()
}

/// Hamming distance as a filtering instance: one box per part, `D(tau) = tau`,
/// fixed quotas.
#[derive(Clone, Debug)]
pub struct HammingInstance {
    pub layout: PartLayout,
}

impl FilterInstance for HammingInstance {
    type Object = BinaryVector;
    type Features = BinaryVector;

    fn featurize(&self, o: &BinaryVector) -> Result<BinaryVector> {
        if o.d() != self.layout.d() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.d(),
                actual: o.d(),
            });
        }
        Ok(o.clone())
    }

    fn box_count(&self, _q: &BinaryVector, _tau: i64) -> usize {
        self.layout.m()
    }

    fn box_value(&self, x: &BinaryVector, q: &BinaryVector, _tau: i64, i: usize) -> i64 {
        i64::from(part_distance(x, q, &self.layout, i))
    }

    fn bound(&self, tau: i64) -> i64 {
        tau
    }

    fn direction(&self) -> Direction {
        Direction::AtMost
    }

    fn thresholds(&self, _q: &BinaryVector, tau: i64, _m: usize) -> Result<ThresholdSpec> {
        Ok(ThresholdSpec::fixed(Ratio::from_integer(tau), Direction::AtMost))
    }
}
