//! Exhaustive checks of the ring existence theorems over small integer boxes.

use num_rational::Ratio;
use serde::Serialize;

use super::{chain_has_property, find_prefix_viable_starts, is_viable, BoxSequence, Chain, Direction, ThresholdSpec};
use crate::error::{Error, Result};

/// Largest number of box sequences the oracle will enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// Total within bound but no viable chain of some length.
    BasicForm,
    /// Total within bound but no prefix-viable chain of some length.
    PrefixViable,
    /// Total within bound but no suffix-viable chain of some length.
    SuffixViable,
    /// Total over bound but no prefix-non-viable chain of some length.
    PrefixNonViable,
    /// Total over bound but no suffix-non-viable chain of some length.
    SuffixNonViable,
    /// Total within bound but integer-reduction thresholds admit no prefix-viable chain.
    IntegerReduction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremViolation {
    pub boxes: Vec<i64>,
    pub length: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub m: usize,
    pub n: i64,
    pub omega: i64,
    pub sequences: u64,
    pub within_bound: u64,
    pub over_bound: u64,
    pub chain_checks: u64,
    pub violations: Vec<TheoremViolation>,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Even split of `total` over `m` integers, larger entries first.
pub(crate) fn even_split(total: i64, m: usize) -> Vec<i64> {
    let mi = m as i64;
    let base = total.div_euclid(mi);
    let extra = total.rem_euclid(mi) as usize;
    (0..m).map(|i| base + i64::from(i < extra)).collect()
}

fn exists(b: &BoxSequence, spec: &ThresholdSpec, l: usize, prefix: bool, viable: bool) -> Result<bool> {
    for s in 0..b.m() {
        if chain_has_property(b, spec, s, l, prefix, viable)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Enumerates every `B` in `[0, omega]^m` and checks, for every chain length:
/// when `sum(B) <= n`, a viable chain, a prefix-viable chain, a suffix-viable
/// chain, and a prefix-viable chain under integer-reduction thresholds exist;
/// when `sum(B) > n`, prefix-non-viable and suffix-non-viable chains exist.
pub fn verify_theorems_exhaustive(m: usize, n: i64, omega: i64) -> Result<TheoremReport> {
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if omega < 0 {
        return Err(Error::param("omega must be non-negative"));
    }
    let base = omega as u128 + 1;
    let size = (0..m).try_fold(1u128, |acc, _| acc.checked_mul(base));
    let size = match size {
        Some(s) if s <= ENUMERATION_LIMIT => s,
        Some(s) => return Err(Error::ScaleGuard { size: s, limit: ENUMERATION_LIMIT }),
        None => return Err(Error::ScaleGuard { size: u128::MAX, limit: ENUMERATION_LIMIT }),
    };

    let fixed = ThresholdSpec::fixed(Ratio::from_integer(n), Direction::AtMost);
    let reduced = ThresholdSpec::integer_reduction(even_split(n - m as i64 + 1, m), Direction::AtMost);

    let mut report = TheoremReport {
        m,
        n,
        omega,
        sequences: 0,
        within_bound: 0,
        over_bound: 0,
        chain_checks: 0,
        violations: Vec::new(),
    };
    let mut values = vec![0i64; m];
    for _ in 0..size {
        let b = BoxSequence::new(values.clone())?;
        report.sequences += 1;
        let within = b.sum() <= n;
        if within {
            report.within_bound += 1;
        } else {
            report.over_bound += 1;
        }
        for l in 1..=m {
            let mut fail = |kind| {
                report.violations.push(TheoremViolation {
                    boxes: values.clone(),
                    length: l,
                    kind,
                })
            };
            if within {
                let basic = (0..m).try_fold(false, |found, s| {
                    Ok::<_, Error>(found || is_viable(&b, &fixed, Chain::new(s, l, m)?)?)
                })?;
                if !basic {
                    fail(ViolationKind::BasicForm);
                }
                if !exists(&b, &fixed, l, true, true)? {
                    fail(ViolationKind::PrefixViable);
                }
                if !exists(&b, &fixed, l, false, true)? {
                    fail(ViolationKind::SuffixViable);
                }
                if find_prefix_viable_starts(&b, &reduced, l)?.is_empty() {
                    fail(ViolationKind::IntegerReduction);
                }
            } else {
                if !exists(&b, &fixed, l, true, false)? {
                    fail(ViolationKind::PrefixNonViable);
                }
                if !exists(&b, &fixed, l, false, false)? {
                    fail(ViolationKind::SuffixNonViable);
                }
            }
            report.chain_checks += 1;
        }
        // odometer increment
        for v in values.iter_mut() {
            if *v < omega {
                *v += 1;
                break;
            }
            *v = 0;
        }
    }
    Ok(report)
}
