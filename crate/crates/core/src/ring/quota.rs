use super::{ring_index, Direction, PrefixCheck, ThresholdSpec};
use crate::error::Result;

/// Integer chain bounds precomputed from a [`ThresholdSpec`] for one query.
///
/// Box values are integers, so `sum <= q` is the same as `sum <= floor(q)`
/// and `sum >= q` the same as `sum >= ceil(q)`. Search loops use this table
/// instead of rational arithmetic.
#[derive(Clone, Debug)]
pub struct QuotaTable {
    m: usize,
    max_len: usize,
    direction: Direction,
    bounds: Vec<i64>,
}

impl QuotaTable {
    pub fn compile(spec: &ThresholdSpec, m: usize, max_len: usize) -> Result<Self> {
        spec.check_ring(m)?;
        let max_len = max_len.clamp(1, m);
        let mut bounds = Vec::with_capacity(m * max_len);
        for start in 0..m {
            for len in 1..=max_len {
                let q = spec.quota(start, len, m);
                let b = match spec.direction {
                    Direction::AtMost => q.floor().to_integer(),
                    Direction::AtLeast => q.ceil().to_integer(),
                };
                bounds.push(b);
            }
        }
        Ok(QuotaTable {
            m,
            max_len,
            direction: spec.direction,
            bounds,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Integer bound for the chain `(start, len)`.
    #[inline]
    pub fn bound(&self, start: usize, len: usize) -> i64 {
        self.bounds[ring_index(start, self.m) * self.max_len + len - 1]
    }

    #[inline]
    pub fn admits(&self, sum: i64, start: usize, len: usize) -> bool {
        let b = self.bound(start, len);
        match self.direction {
            Direction::AtMost => sum <= b,
            Direction::AtLeast => sum >= b,
        }
    }

    /// Incremental prefix check of the chain at `start` up to `l` boxes.
    ///
    /// `box_at(j)` is called with ring indices in chain order. Returns the
    /// outcome and the number of boxes evaluated.
    pub fn check_prefixes(
        &self,
        start: usize,
        l: usize,
        mut box_at: impl FnMut(usize) -> i64,
    ) -> (PrefixCheck, usize) {
        let mut sum = 0;
        for len in 1..=l {
            sum += box_at(ring_index(start + len - 1, self.m));
            if !self.admits(sum, start, len) {
                return (PrefixCheck::FailsAt(len), len);
            }
        }
        (PrefixCheck::Viable, l)
    }

    /// Smallest start whose chain of length `l` is prefix-viable, scanning
    /// with the skip rule.
    pub fn first_prefix_viable_start(&self, l: usize, mut box_at: impl FnMut(usize) -> i64) -> Option<usize> {
        let mut i = 0;
        while i < self.m {
            match self.check_prefixes(i, l, &mut box_at).0 {
                PrefixCheck::Viable => return Some(i),
                PrefixCheck::FailsAt(len) => i += len,
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{is_prefix_viable, BoxSequence, ThresholdMode};
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn spec_strategy(m: usize) -> impl Strategy<Value = ThresholdSpec> {
        let dir = prop_oneof![Just(Direction::AtMost), Just(Direction::AtLeast)];
        let mode = prop_oneof![
            (0i64..40, 1i64..7).prop_map(|(n, d)| ThresholdMode::FixedQuota(Ratio::new(n, d))),
            prop::collection::vec((-3i64..8, 1i64..4), m)
                .prop_map(|t| ThresholdMode::Variable(t.into_iter().map(|(n, d)| Ratio::new(n, d)).collect())),
            prop::collection::vec(-2i64..6, m).prop_map(ThresholdMode::IntegerReduction),
        ];
        (mode, dir).prop_map(|(mode, direction)| ThresholdSpec { mode, direction })
    }

    proptest! {
        #[test]
        fn table_agrees_with_exact_check(
            (values, spec, start, l) in (1usize..8).prop_flat_map(|m| (
                prop::collection::vec(-2i64..6, m),
                spec_strategy(m),
                0..m,
                1..=m,
            ))
        ) {
            let m = values.len();
            let b = BoxSequence::new(values).unwrap();
            let table = QuotaTable::compile(&spec, m, m).unwrap();
            let exact = is_prefix_viable(&b, &spec, start, l).unwrap();
            let (fast, _) = table.check_prefixes(start, l, |j| b.get(j));
            prop_assert_eq!(exact, fast);
        }
    }
}
