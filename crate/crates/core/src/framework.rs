//! Filtering instances: a featurizer, per-box evaluators and a bound
//! function, plus checkers for completeness and tightness on small universes.

use crate::error::Result;
use crate::ring::{find_prefix_viable_starts, BoxSequence, Direction, ThresholdSpec};

pub trait FilterInstance {
    type Object: ?Sized;
    type Features;

    fn featurize(&self, o: &Self::Object) -> Result<Self::Features>;

    /// Number of boxes for this query and threshold.
    fn box_count(&self, q: &Self::Features, tau: i64) -> usize;

    fn box_value(&self, x: &Self::Features, q: &Self::Features, tau: i64, i: usize) -> i64;

    /// The bound `D(tau)` on the box total.
    fn bound(&self, tau: i64) -> i64;

    fn direction(&self) -> Direction;

    fn thresholds(&self, q: &Self::Features, tau: i64, m: usize) -> Result<ThresholdSpec>;
}

pub fn evaluate_boxes<I: FilterInstance>(inst: &I, x: &I::Object, q: &I::Object, tau: i64) -> Result<BoxSequence> {
    let xf = inst.featurize(x)?;
    let qf = inst.featurize(q)?;
    let m = inst.box_count(&qf, tau);
    BoxSequence::new((0..m).map(|i| inst.box_value(&xf, &qf, tau, i)).collect())
}

/// Whether `x` survives the chain filter of length `l` for query `q`.
pub fn is_candidate<I: FilterInstance>(inst: &I, x: &I::Object, q: &I::Object, tau: i64, l: usize) -> Result<bool> {
    let b = evaluate_boxes(inst, x, q, tau)?;
    let qf = inst.featurize(q)?;
    let spec = inst.thresholds(&qf, tau, b.m())?;
    Ok(!find_prefix_viable_starts(&b, &spec, l)?.is_empty())
}

/// A finite object set with its reference selection function.
pub struct ToyUniverse<'a, O> {
    pub objects: Vec<O>,
    pub f: Box<dyn Fn(&O, &O) -> i64 + 'a>,
}

impl<'a, O> ToyUniverse<'a, O> {
    pub fn new(objects: Vec<O>, f: impl Fn(&O, &O) -> i64 + 'a) -> Self {
        ToyUniverse {
            objects,
            f: Box::new(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameworkViolation {
    /// The box total of one pair is on the wrong side of `D(f)`.
    Bound { x: usize, q: usize, f: i64, sum: i64, bound: i64 },
    /// A pair with a better `f` is ordered against a pair with a worse `f`.
    Order { better: (usize, usize), worse: (usize, usize) },
}

struct PairRecord {
    x: usize,
    q: usize,
    /// Sign-normalized so that smaller is better.
    f: i64,
    sum: i64,
    bound: i64,
}

fn pair_records<I: FilterInstance>(inst: &I, universe: &ToyUniverse<'_, I::Object>, tau: i64) -> Result<Vec<PairRecord>>
where
    I::Object: Sized,
{
    let feats = universe
        .objects
        .iter()
        .map(|o| inst.featurize(o))
        .collect::<Result<Vec<_>>>()?;
    let sign = match inst.direction() {
        Direction::AtMost => 1,
        Direction::AtLeast => -1,
    };
    let mut out = Vec::with_capacity(feats.len() * feats.len());
    for (qi, qf) in feats.iter().enumerate() {
        let m = inst.box_count(qf, tau);
        for (xi, xf) in feats.iter().enumerate() {
            let f = (universe.f)(&universe.objects[xi], &universe.objects[qi]);
            let sum: i64 = (0..m).map(|i| inst.box_value(xf, qf, tau, i)).sum();
            out.push(PairRecord {
                x: xi,
                q: qi,
                f: sign * f,
                sum: sign * sum,
                bound: sign * inst.bound(f),
            });
        }
    }
    out.sort_by_key(|r| r.f);
    Ok(out)
}

/// Walks pairs in order of `f` and reports, for each pair, the best-scoring
/// earlier pair with a strictly smaller `f` under `key`, if `bad` holds.
fn order_scan(
    recs: &[PairRecord],
    key: impl Fn(&PairRecord) -> i64,
    bad: impl Fn(i64, &PairRecord) -> bool,
) -> Vec<FrameworkViolation> {
    let mut out = Vec::new();
    let mut best: Option<(i64, usize)> = None;
    let mut g = 0;
    while g < recs.len() {
        let mut h = g;
        while h < recs.len() && recs[h].f == recs[g].f {
            h += 1;
        }
        if let Some((v, j)) = best {
            for r in &recs[g..h] {
                if bad(v, r) {
                    out.push(FrameworkViolation::Order {
                        better: (recs[j].x, recs[j].q),
                        worse: (r.x, r.q),
                    });
                }
            }
        }
        for (j, r) in recs.iter().enumerate().take(h).skip(g) {
            if best.is_none_or(|(v, _)| key(r) > v) {
                best = Some((key(r), j));
            }
        }
        g = h;
    }
    out
}

/// Checks, over all ordered pairs of the universe, that every box total is
/// bounded by `D(f)` and that no pair with a smaller `f` has a box total
/// exceeding `D` of a pair with a larger `f` (reversed for at-least
/// instances). An empty result means the instance is complete here.
pub fn check_completeness<I: FilterInstance>(
    inst: &I,
    universe: &ToyUniverse<'_, I::Object>,
    tau: i64,
) -> Result<Vec<FrameworkViolation>>
where
    I::Object: Sized,
{
    let recs = pair_records(inst, universe, tau)?;
    let sign = match inst.direction() {
        Direction::AtMost => 1,
        Direction::AtLeast => -1,
    };
    let mut out: Vec<FrameworkViolation> = recs
        .iter()
        .filter(|r| r.sum > r.bound)
        .map(|r| FrameworkViolation::Bound {
            x: r.x,
            q: r.q,
            f: sign * r.f,
            sum: sign * r.sum,
            bound: sign * r.bound,
        })
        .collect();
    out.extend(order_scan(&recs, |r| r.sum, |best_sum, r| best_sum > r.bound));
    Ok(out)
}

/// Checks that no pair with a smaller `f` has `D(f)` reaching the box total
/// of a pair with a larger `f`. Together with completeness, an empty result
/// means the box total decides the selection exactly on this universe.
pub fn check_tightness<I: FilterInstance>(
    inst: &I,
    universe: &ToyUniverse<'_, I::Object>,
    tau: i64,
) -> Result<Vec<FrameworkViolation>>
where
    I::Object: Sized,
{
    let recs = pair_records(inst, universe, tau)?;
    Ok(order_scan(&recs, |r| r.bound, |best_bound, r| best_bound >= r.sum))
}

/// An instance assembled from closures over a cloneable object type.
pub struct ClosureInstance<O> {
    pub m: usize,
    pub direction: Direction,
    #[allow(clippy::type_complexity)]
    pub box_fn: Box<dyn Fn(&O, &O, usize) -> i64 + Send + Sync>,
    pub bound_fn: Box<dyn Fn(i64) -> i64 + Send + Sync>,
    pub threshold_fn: Box<dyn Fn(i64, usize) -> ThresholdSpec + Send + Sync>,
}

impl<O: Clone> FilterInstance for ClosureInstance<O> {
    type Object = O;
    type Features = O;

    fn featurize(&self, o: &O) -> Result<O> {
        Ok(o.clone())
    }

    fn box_count(&self, _q: &O, _tau: i64) -> usize {
        self.m
    }

    fn box_value(&self, x: &O, q: &O, _tau: i64, i: usize) -> i64 {
        (self.box_fn)(x, q, i)
    }

    fn bound(&self, tau: i64) -> i64 {
        (self.bound_fn)(tau)
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn thresholds(&self, _q: &O, tau: i64, m: usize) -> Result<ThresholdSpec> {
        Ok((self.threshold_fn)(tau, m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn fixed(tau: i64, _m: usize) -> ThresholdSpec {
        ThresholdSpec::fixed(Ratio::from_integer(tau), Direction::AtMost)
    }

    fn nibbles() -> Vec<u8> {
        (0..16).collect()
    }

    fn hamming_instance() -> ClosureInstance<u8> {
        ClosureInstance {
            m: 2,
            direction: Direction::AtMost,
            box_fn: Box::new(|x, q, i| (((x ^ q) >> (2 * i)) & 3).count_ones() as i64),
            bound_fn: Box::new(|t| t),
            threshold_fn: Box::new(fixed),
        }
    }

    fn popcount_universe<'a>() -> ToyUniverse<'a, u8> {
        ToyUniverse::new(nibbles(), |x: &u8, q: &u8| (x ^ q).count_ones() as i64)
    }

    #[test]
    fn hamming_is_complete_and_tight() {
        let inst = hamming_instance();
        let u = popcount_universe();
        assert!(check_completeness(&inst, &u, 2).unwrap().is_empty());
        assert!(check_tightness(&inst, &u, 2).unwrap().is_empty());
    }

    #[test]
    fn overshooting_box_is_incomplete() {
        let inst = ClosureInstance {
            m: 1,
            direction: Direction::AtMost,
            box_fn: Box::new(|x: &u8, q: &u8, _| (x ^ q).count_ones() as i64 + 1),
            bound_fn: Box::new(|t| t),
            threshold_fn: Box::new(fixed),
        };
        let v = check_completeness(&inst, &popcount_universe(), 1).unwrap();
        assert!(matches!(v.first(), Some(FrameworkViolation::Bound { .. })));
    }

    #[test]
    fn trivial_instance_is_complete() {
        let inst = ClosureInstance {
            m: 1,
            direction: Direction::AtMost,
            box_fn: Box::new(|_: &u8, _: &u8, _| -1),
            bound_fn: Box::new(|_| 0),
            threshold_fn: Box::new(fixed),
        };
        assert!(check_completeness(&inst, &popcount_universe(), 0).unwrap().is_empty());
        assert!(!check_tightness(&inst, &popcount_universe(), 0).unwrap().is_empty());
    }

    #[test]
    fn constant_selection_is_vacuously_tight() {
        let u = ToyUniverse::new(nibbles(), |_: &u8, _: &u8| 3);
        let inst = ClosureInstance {
            m: 1,
            direction: Direction::AtMost,
            box_fn: Box::new(|_: &u8, _: &u8, _| 0),
            bound_fn: Box::new(|t| t),
            threshold_fn: Box::new(fixed),
        };
        assert!(check_tightness(&inst, &u, 3).unwrap().is_empty());
    }

    #[test]
    fn candidates_from_instance() {
        let inst = hamming_instance();
        // boxes (0, 1): chain of length 2 sums to 1 <= 2.
        assert!(is_candidate(&inst, &0b0100, &0, 2, 2).unwrap());
        // boxes (2, 2) at tau 2: no box within 1.
        assert!(!is_candidate(&inst, &0b1111, &0, 2, 1).unwrap());
        let b = evaluate_boxes(&inst, &5, &5, 0).unwrap();
        assert_eq!(b.values(), &[0, 0]);
    }
}
