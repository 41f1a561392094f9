mod common;

use common::*;

#[test]
fn hamming_index_equals_scan() {
    for seed in 0..50 {
        if let Err(e) = hamming_matches_scan(&hamming_case(seed)) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn set_index_equals_scan() {
    for seed in 0..50 {
        if let Err(e) = set_matches_scan(&set_case(seed)) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn string_index_equals_scan() {
    for seed in 0..50 {
        if let Err(e) = string_matches_scan(&string_case(seed)) {
            panic!("seed {seed}: {e}");
        }
    }
}
