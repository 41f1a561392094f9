use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::ring_index;
use crate::error::{Error, Result};

/// Which side of the quota a viable chain must fall on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Distance-like: `sum <= quota`.
    AtMost,
    /// Similarity-like: `sum >= quota`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Every chain of length `l` gets `l * n / m`.
    FixedQuota(Ratio<i64>),
    /// Per-box thresholds; a chain gets the sum of its boxes' thresholds.
    Variable(Vec<Ratio<i64>>),
    /// Per-box integer thresholds with the integer-reduction correction
    /// `l - 1` (at most) or `1 - l` (at least).
    IntegerReduction(Vec<i64>),
}

/// How chain quotas are derived for one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdSpec {
    pub mode: ThresholdMode,
    pub direction: Direction,
}

impl ThresholdSpec {
    pub fn fixed(n: Ratio<i64>, direction: Direction) -> Self {
        ThresholdSpec {
            mode: ThresholdMode::FixedQuota(n),
            direction,
        }
    }

    pub fn variable(t: Vec<Ratio<i64>>, direction: Direction) -> Self {
        ThresholdSpec {
            mode: ThresholdMode::Variable(t),
            direction,
        }
    }

    pub fn integer_reduction(t: Vec<i64>, direction: Direction) -> Self {
        ThresholdSpec {
            mode: ThresholdMode::IntegerReduction(t),
            direction,
        }
    }

    /// Number of boxes this spec is tied to, if any.
    pub fn box_count(&self) -> Option<usize> {
        match &self.mode {
            ThresholdMode::FixedQuota(_) => None,
            ThresholdMode::Variable(t) => Some(t.len()),
            ThresholdMode::IntegerReduction(t) => Some(t.len()),
        }
    }

    pub fn check_ring(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::EmptyBoxes);
        }
        match self.box_count() {
            Some(k) if k != m => Err(Error::ThresholdMismatch(format!(
                "{k} thresholds for {m} boxes"
            ))),
            _ => Ok(()),
        }
    }

    /// The bound `n` on the box total that this spec is sound for.
    ///
    /// Variable allocation needs `sum(T) = n`; integer reduction needs
    /// `sum(T) = n - m + 1` (at most) or `n + m - 1` (at least).
    pub fn intended_bound(&self, m: usize) -> Ratio<i64> {
        let m = m as i64;
        match &self.mode {
            ThresholdMode::FixedQuota(n) => *n,
            ThresholdMode::Variable(t) => t.iter().fold(Ratio::zero(), |a, b| a + b),
            ThresholdMode::IntegerReduction(t) => {
                let s: i64 = t.iter().sum();
                match self.direction {
                    Direction::AtMost => Ratio::from_integer(s + m - 1),
                    Direction::AtLeast => Ratio::from_integer(s - m + 1),
                }
            }
        }
    }

    /// Quota of the chain starting at `start` with `len` boxes.
    pub fn quota(&self, start: usize, len: usize, m: usize) -> Ratio<i64> {
        match &self.mode {
            ThresholdMode::FixedQuota(n) => n * Ratio::new(len as i64, m as i64),
            ThresholdMode::Variable(t) => (start..start + len)
                .map(|j| t[ring_index(j, m)])
                .fold(Ratio::zero(), |a, b| a + b),
            ThresholdMode::IntegerReduction(t) => {
                let s: i64 = (start..start + len).map(|j| t[ring_index(j, m)]).sum();
                let len = len as i64;
                match self.direction {
                    Direction::AtMost => Ratio::from_integer(len - 1 + s),
                    Direction::AtLeast => Ratio::from_integer(1 - len + s),
                }
            }
        }
    }

    /// Whether a chain sum satisfies the quota of chain `(start, len)`.
    pub fn admits(&self, sum: i64, start: usize, len: usize, m: usize) -> bool {
        let ord = match &self.mode {
            // Cross-multiplied: sum * m * den vs len * num.
            ThresholdMode::FixedQuota(n) => {
                let lhs = sum as i128 * m as i128 * *n.denom() as i128;
                let rhs = len as i128 * *n.numer() as i128;
                lhs.cmp(&rhs)
            }
            _ => Ratio::from_integer(sum).cmp(&self.quota(start, len, m)),
        };
        match self.direction {
            Direction::AtMost => ord.is_le(),
            Direction::AtLeast => ord.is_ge(),
        }
    }

    /// Rotates per-box thresholds left by `k`, matching [`super::BoxSequence::rotated`].
    pub fn rotated(&self, k: usize) -> ThresholdSpec {
        let mode = match &self.mode {
            ThresholdMode::FixedQuota(n) => ThresholdMode::FixedQuota(*n),
            ThresholdMode::Variable(t) => {
                let m = t.len();
                ThresholdMode::Variable((0..m).map(|i| t[ring_index(i + k, m)]).collect())
            }
            ThresholdMode::IntegerReduction(t) => {
                let m = t.len();
                ThresholdMode::IntegerReduction((0..m).map(|i| t[ring_index(i + k, m)]).collect())
            }
        };
        ThresholdSpec {
            mode,
            direction: self.direction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intended_bounds() {
        let ir = ThresholdSpec::integer_reduction(vec![1, 0, 0, 0, 0], Direction::AtMost);
        assert_eq!(ir.intended_bound(5), Ratio::from_integer(5));
        let ge = ThresholdSpec::integer_reduction(vec![4, 1, 2, 2, 4], Direction::AtLeast);
        assert_eq!(ge.intended_bound(5), Ratio::from_integer(9));
        let var = ThresholdSpec::variable(vec![Ratio::new(5, 2), Ratio::new(5, 2)], Direction::AtMost);
        assert_eq!(var.intended_bound(2), Ratio::from_integer(5));
    }

    #[test]
    fn fractional_fixed_quota_is_exact() {
        // l * n / m = 2 * 2 / 3 = 4/3: sum 1 fits, sum 2 does not.
        let spec = ThresholdSpec::fixed(Ratio::from_integer(2), Direction::AtMost);
        assert!(spec.admits(1, 0, 2, 3));
        assert!(!spec.admits(2, 0, 2, 3));
        // 3 * 2 / 3 = 2 exactly.
        assert!(spec.admits(2, 0, 3, 3));
    }

    #[test]
    fn at_least_direction() {
        let spec = ThresholdSpec::integer_reduction(vec![4, 1, 2, 2, 4], Direction::AtLeast);
        // b_2 = 2 >= t_2 = 2.
        assert!(spec.admits(2, 2, 1, 5));
        // b_2 + b_3 = 2 < 1 - 2 + 2 + 2 = 3.
        assert!(!spec.admits(2, 2, 2, 5));
    }

    #[test]
    fn ring_mismatch_detected() {
        let ir = ThresholdSpec::integer_reduction(vec![0, 0], Direction::AtMost);
        assert!(ir.check_ring(3).is_err());
        assert!(ir.check_ring(2).is_ok());
    }
}
