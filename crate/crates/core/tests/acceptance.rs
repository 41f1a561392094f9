//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::Rng;

use common::*;
use pigeonring::analysis::{self, AnalysisParams, DiscretePdf, Exact, Probability};
use pigeonring::hamming::{partition_dims, BinaryVector, HammingIndex, HammingQuery};
use pigeonring::ring::{find_prefix_viable_starts, verify_theorems_exhaustive, Direction, ThresholdSpec};
use pigeonring::setsim::{pair_boxes, ClassMap, SetIndex, SetThreshold, TokenDictionary};
use pigeonring::strsim::{GramOrder, StringIndex};

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn criterion(id: usize, name: &'static str, limit: Duration, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let t0 = Instant::now();
    let r = f();
    let elapsed = t0.elapsed();
    let (mut pass, mut detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > limit {
        pass = false;
        detail = format!("{detail}; over time limit {limit:?}");
    }
    Outcome {
        id,
        name,
        pass,
        detail,
        elapsed,
        limit,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden() -> Result<String, String> {
    let data: Vec<BinaryVector> = ["1111101110", "0001011110", "0101100110", "1101101100"]
        .iter()
        .map(|s| BinaryVector::parse(s).unwrap())
        .collect();
    let q = BinaryVector::parse("0010010011").unwrap();
    let idx = HammingIndex::build(data, partition_dims(10, 5).unwrap(), None).map_err(|e| e.to_string())?;
    let run = |p: HammingQuery| idx.query(&q, &p).map_err(|e| e.to_string());

    let ones = ThresholdSpec::variable(vec![Ratio::from_integer(1); 5], Direction::AtMost);
    let hole = run(HammingQuery::with_spec(5, 1, ones))?;
    ensure(hole.candidates == [0, 1, 2], || format!("pigeonhole candidates {:?}", hole.candidates))?;
    let ring = run(HammingQuery::fixed(5, 2))?;
    ensure(ring.candidates == [1, 2], || format!("ring candidates {:?}", ring.candidates))?;
    ensure(ring.results == [1], || format!("results {:?}", ring.results))?;

    let var = ThresholdSpec::variable([1, 2, 0, 1, 1].map(Ratio::from_integer).to_vec(), Direction::AtMost);
    let v = run(HammingQuery::with_spec(5, 2, var))?;
    ensure(!v.candidates.contains(&0) && v.results == [1], || format!("variable thresholds {:?}", v.candidates))?;
    let ir = ThresholdSpec::integer_reduction(vec![1, 0, 0, 0, 0], Direction::AtMost);
    let i = run(HammingQuery::with_spec(5, 2, ir))?;
    ensure(!i.candidates.contains(&2) && i.results == [1], || format!("integer reduction {:?}", i.candidates))?;

    let toks: Vec<String> = ('A'..='P').map(String::from).collect();
    let dict = TokenDictionary::from_ordered(&toks).map_err(|e| e.to_string())?;
    let classes: Vec<u16> = ('A'..='P')
        .map(|c| match c {
            'A' | 'B' => 1,
            'C' | 'D' => 2,
            'E' | 'F' => 3,
            _ => 4,
        })
        .collect();
    let classes = ClassMap::from_classes(classes, 5).map_err(|e| e.to_string())?;
    let enc = |s: &str| dict.encode(&s.split_whitespace().collect::<Vec<_>>());
    let x = enc("A C D E G H I J K L M N");
    let y = enc("B C D F G H I L M N O P");
    let (b, t) = pair_boxes(&x, &y, 9, &classes).map_err(|e| e.to_string())?;
    ensure(b.values() == [3, 0, 2, 0, 3], || format!("set boxes {:?}", b.values()))?;
    ensure(
        t == ThresholdSpec::integer_reduction(vec![4, 1, 2, 2, 4], Direction::AtLeast),
        || format!("set thresholds {t:?}"),
    )?;
    let one = find_prefix_viable_starts(&b, &t, 1).map_err(|e| e.to_string())?;
    let two = find_prefix_viable_starts(&b, &t, 2).map_err(|e| e.to_string())?;
    ensure(!one.is_empty() && two.is_empty(), || format!("set chains l=1 {one:?}, l=2 {two:?}"))?;
    let sidx = SetIndex::build_with(dict.clone(), classes, vec![x], SetThreshold::Overlap(9)).map_err(|e| e.to_string())?;
    let s1 = sidx.query(&y, 1).map_err(|e| e.to_string())?;
    let s2 = sidx.query(&y, 2).map_err(|e| e.to_string())?;
    ensure(s1.candidates == [0] && s2.candidates.is_empty(), || "set index candidates".into())?;

    let st = StringIndex::build_with_order(vec![b"llabcdefkk".to_vec()], 2, 2, GramOrder::Lexicographic)
        .map_err(|e| e.to_string())?;
    let a = st.query(b"llabghijkk", 2, 1).map_err(|e| e.to_string())?;
    let c = st.query(b"llabghijkk", 2, 2).map_err(|e| e.to_string())?;
    ensure(a.candidates == [0] && c.candidates.is_empty(), || {
        format!("string candidates l=1 {:?}, l=2 {:?}", a.candidates, c.candidates)
    })?;
    Ok("hamming, variable, integer-reduction, set and string examples exact".into())
}

fn theorems() -> Result<String, String> {
    let mut runs = 0;
    let mut sequences = 0u64;
    for omega in 1..=3i64 {
        for m in 1..=8usize {
            if (omega as u128).pow(m as u32) > 1_000_000 {
                continue;
            }
            for n in -1..=(m as i64 * omega + 1) {
                let r = verify_theorems_exhaustive(m, n, omega).map_err(|e| e.to_string())?;
                ensure(r.holds(), || format!("m={m} n={n} omega={omega}: {:?}", r.violations.first()))?;
                runs += 1;
                sequences += r.sequences;
            }
        }
    }
    Ok(format!("0 violations over {runs} (m, n, omega) settings, {sequences} sequences"))
}

fn scan_equivalence() -> Result<String, String> {
    let mut results = [0usize; 3];
    for seed in 0..50 {
        let h = hamming_case(1000 + seed);
        hamming_matches_scan(&h).map_err(|e| format!("hamming seed {seed}: {e}"))?;
        results[0] += h.queries.iter().map(|q| h.index.scan(q, h.tau).unwrap().len()).sum::<usize>();
        let s = set_case(1000 + seed);
        set_matches_scan(&s).map_err(|e| format!("set seed {seed}: {e}"))?;
        results[1] += s.queries.iter().map(|q| s.index.scan(&s.index.encode(q)).len()).sum::<usize>();
        let t = string_case(1000 + seed);
        string_matches_scan(&t).map_err(|e| format!("string seed {seed}: {e}"))?;
        results[2] += t.queries.iter().map(|q| t.index.scan(q, t.tau).len()).sum::<usize>();
    }
    ensure(results.iter().all(|&r| r > 0), || format!("degenerate instances, result totals {results:?}"))?;
    Ok(format!("50 instances per problem, all chain lengths; result totals {results:?}"))
}

fn analysis_correctness() -> Result<String, String> {
    let mut checked = 0;
    for omega in 1..=3 {
        let pmfs = [
            DiscretePdf::uniform(omega),
            DiscretePdf::binomial(omega),
        ];
        for p in &pmfs {
            for m in 1..=6 {
                for tau in 0..=(m * omega) as i64 {
                    let full = analysis::analyze::<f64>(p, &AnalysisParams::new(m, tau, m).unwrap());
                    ensure((full.candidate - full.result).abs() <= 1e-12, || {
                        format!("Pr(CAND_m) != Pr(RES) at omega={omega} m={m} tau={tau}")
                    })?;
                    for l in 1..=m {
                        let pr = AnalysisParams::new(m, tau, l).unwrap();
                        let rec = analysis::no_candidate_prob::<f64>(p, &pr).1;
                        let ex = analysis::exhaustive_candidate_prob::<Exact>(p, &pr).map_err(|e| e.to_string())?;
                        ensure((rec - ex.to_f64()).abs() <= 1e-9, || format!("{pr:?}: {rec} vs {}", ex.to_f64()))?;
                        checked += 1;
                    }
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (p, m, tau, l) in [
        (DiscretePdf::uniform(3), 6, 7, 3),
        (DiscretePdf::binomial(4), 4, 5, 2),
        (DiscretePdf::uniform(16), 16, 64, 4),
    ] {
        let pr = AnalysisParams::new(m, tau, l).unwrap();
        let want = analysis::analyze::<f64>(&p, &pr);
        let mc = analysis::monte_carlo(&p, &pr, 1_000_000, 20240611, 8).map_err(|e| e.to_string())?;
        for (est, se, exact) in [
            (mc.candidate, mc.candidate_se, want.candidate),
            (mc.result, mc.result_se, want.result),
        ] {
            let z = if se > 0.0 { (est - exact).abs() / se } else { (est - exact).abs() * f64::INFINITY };
            ensure(z <= 4.0 || (est - exact).abs() < 1e-12, || format!("{pr:?}: Monte Carlo {est} vs {exact} ({z:.2} sigma)"))?;
            if z.is_finite() {
                worst = worst.max(z);
            }
        }
    }
    Ok(format!("{checked} recurrence/enumeration checks; Monte Carlo worst {worst:.2} sigma"))
}

fn ratio_trend() -> Result<String, String> {
    let m = 16;
    let mut swept = 0;
    for p in [DiscretePdf::uniform(16), DiscretePdf::binomial(16)] {
        for tau in (8..=128).step_by(8) {
            let ls: Vec<usize> = (1..=m).collect();
            let curve = analysis::ratio_curve::<Exact>(&p, m, tau, &ls).map_err(|e| e.to_string())?;
            ensure(curve.len() == m, || format!("tau={tau}: Pr(RES) = 0"))?;
            ensure(curve.windows(2).all(|w| w[0].1 >= w[1].1), || format!("tau={tau}: ratio increases"))?;
            ensure(curve[m - 1].1 == Exact::from_count(1), || format!("tau={tau}: ratio at l=m is {:?}", curve[m - 1].1))?;
            swept += 1;
        }
    }
    Ok(format!("{swept} exact curves, m=16, non-increasing in l and exactly 1 at l=m"))
}

fn candidate_reduction() -> Result<String, String> {
    let (n, d, m, tau, nq) = (100_000, 64, 4, 8i64, 100);
    let mut r = rng(6);
    let mut data: Vec<BinaryVector> = (0..n).map(|_| random_vector(&mut r, d)).collect();
    // A quarter of the queries get planted neighbours.
    let queries: Vec<BinaryVector> = (0..nq).map(|_| random_vector(&mut r, d)).collect();
    for q in queries.iter().take(nq / 4) {
        for _ in 0..3 {
            let k = r.gen_range(0..=tau as usize + 4);
            data.push(flip(&mut r, q, k));
        }
    }
    let idx = HammingIndex::build(data, partition_dims(d, m).unwrap(), None).map_err(|e| e.to_string())?;
    let l = 5.min(m);
    let (mut strict, mut ring_total, mut hole_total) = (0, 0u64, 0u64);
    for (qi, q) in queries.iter().enumerate() {
        let ring = idx.query(q, &HammingQuery::fixed(tau, l)).map_err(|e| e.to_string())?;
        let hole = idx.query(q, &HammingQuery::fixed(tau, 1)).map_err(|e| e.to_string())?;
        let (rc, hc) = (ring.candidates.len() as u64, hole.candidates.len() as u64);
        ensure(rc <= hc, || format!("query {qi}: {rc} ring candidates > {hc} pigeonhole"))?;
        ensure(ring.results == hole.results, || format!("query {qi}: results differ"))?;
        ensure(ring.stats.pigeonhole_candidates == hc, || format!("query {qi}: pigeonhole count mismatch"))?;
        strict += usize::from(rc < hc);
        ring_total += rc;
        hole_total += hc;
    }
    ensure(strict * 10 >= nq * 9, || format!("strictly fewer on only {strict}/{nq} queries"))?;
    Ok(format!(
        "N={n} d={d} m={m} tau={tau} l={l}: fewer on {strict}/{nq} queries, never more; {ring_total} vs {hole_total} candidates"
    ))
}

#[test]
fn acceptance() {
    let outcomes = [
        criterion(1, "golden examples", Duration::from_secs(1), golden),
        criterion(2, "theorem oracle", Duration::from_secs(60), theorems),
        criterion(3, "scan equivalence", Duration::from_secs(300), scan_equivalence),
        criterion(4, "analysis correctness", Duration::from_secs(120), analysis_correctness),
        criterion(5, "ratio curve trend", Duration::from_secs(120), ratio_trend),
        criterion(6, "candidate reduction", Duration::from_secs(300), candidate_reduction),
    ];
    for o in &outcomes {
        println!(
            "criterion {} {}: {} ({:.2?} of {:?}) {}",
            o.id,
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed,
            o.limit,
            o.detail
        );
    }
    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
