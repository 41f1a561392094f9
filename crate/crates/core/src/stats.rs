//! Per-query counters for the two-step candidate generation.

use std::time::Duration;

use serde::Serialize;

/// Counters for one query. Field order is the serialized order.
///
/// `probes` and `ball_size` measure index lookups, `box_checks` counts box
/// values evaluated while checking chains, `viable_boxes` counts
/// (object, box) hits from the index, and `pigeonhole_candidates` is the
/// number of distinct objects with at least one viable box, i.e. the
/// candidate count a plain single-box filter would have produced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub probes: u64,
    pub ball_size: u64,
    pub viable_boxes: u64,
    pub box_checks: u64,
    pub pigeonhole_candidates: u64,
    pub candidates: u64,
    pub verifications: u64,
    pub results: u64,
    pub probe_ns: u64,
    pub check_ns: u64,
    pub verify_ns: u64,
}

impl QueryStats {
    pub fn add_time(slot: &mut u64, d: Duration) {
        *slot += d.as_nanos() as u64;
    }

    /// Same counters with all timings zeroed, for byte-stable comparisons.
    pub fn without_timings(&self) -> QueryStats {
        QueryStats {
            probe_ns: 0,
            check_ns: 0,
            verify_ns: 0,
            ..self.clone()
        }
    }
}

/// What a query produced: verified results, the candidates that were sent to
/// verification, and counters. IDs are ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueryOutput {
    pub results: Vec<u32>,
    pub candidates: Vec<u32>,
    pub stats: QueryStats,
}
