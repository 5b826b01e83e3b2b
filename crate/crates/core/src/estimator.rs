//! Collinearity counting with domain multiplicity, and a search for the
//! smallest window length that forces `k` collinear marked points.
//!
//! Here a "collinear `k`-set" is `k` distinct marked domain points whose
//! images lie on one line; coinciding images count with multiplicity, and
//! a set whose images all coincide is collinear by convention (any line
//! through the single image works, reported as `line: None`).

use crate::collinear::KWitness;
use crate::lattice::{
    primitive_direction, CanonicalLine, LatticeError, LatticeInt, LatticePoint, LineKey,
};
use crate::maps::{DomainSet, LipschitzMap, MapError, Window};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("codomain dimension must be at least 1")]
    BadDimension,
    #[error("density must lie in (0, 1]")]
    BadDensity,
    #[error("length cap must be at least 1")]
    BadLimit,
    #[error("squared gap bound must be positive")]
    BadGapBound,
    #[error("marked point {0:?} outside the map window")]
    OutsideWindow(Vec<i64>),
}

/// One distinct image with its domain multiplicity and the marked domain
/// points mapping to it (ascending).
struct ImageBucket<'a> {
    image: &'a LatticePoint,
    domains: Vec<&'a Vec<i64>>,
}

fn collect_images<'a>(
    f: &'a LipschitzMap,
    a: &'a DomainSet,
) -> Result<Vec<ImageBucket<'a>>, EstimatorError> {
    let mut by_image: BTreeMap<&LatticePoint, Vec<&Vec<i64>>> = BTreeMap::new();
    for z in a {
        let x = f
            .eval(z)
            .ok_or_else(|| EstimatorError::OutsideWindow(z.clone()))?;
        by_image.entry(x).or_default().push(z);
    }
    Ok(by_image
        .into_iter()
        .map(|(image, domains)| ImageBucket { image, domains })
        .collect())
}

struct ScanHit<T> {
    base: usize,
    dir: Option<Vec<T>>,
    count: u64,
}

/// Scans every line through pairs of distinct images, summing domain
/// multiplicities.  `threshold: Some(k)` returns the first line reaching
/// `k`; `None` returns the maximum.  Iteration order (images ascending,
/// directions ascending per base) makes the result deterministic.
fn scan_lines<T: LatticeInt>(
    images: &[(Vec<T>, u64)],
    threshold: Option<u64>,
) -> Option<ScanHit<T>> {
    if images.is_empty() {
        return None;
    }
    if images.len() == 1 {
        let count = images[0].1;
        if threshold.is_some_and(|k| count < k) {
            return None;
        }
        return Some(ScanHit {
            base: 0,
            dir: None,
            count,
        });
    }
    let mut best: Option<ScanHit<T>> = None;
    for base in 0..images.len() {
        let mut sums: BTreeMap<Vec<T>, u64> = BTreeMap::new();
        for (other, (coords, mult)) in images.iter().enumerate() {
            if other == base {
                continue;
            }
            let delta: Vec<T> = coords
                .iter()
                .zip(&images[base].0)
                .map(|(a, b)| a.clone() - b.clone())
                .collect();
            let dir = primitive_direction(&delta).expect("distinct images");
            *sums.entry(dir).or_insert(0) += mult;
        }
        for (dir, sum) in sums {
            let count = images[base].1 + sum;
            if let Some(k) = threshold {
                if count >= k {
                    return Some(ScanHit {
                        base,
                        dir: Some(dir),
                        count,
                    });
                }
            } else if best.as_ref().is_none_or(|b| count > b.count) {
                best = Some(ScanHit {
                    base,
                    dir: Some(dir),
                    count,
                });
            }
        }
    }
    if threshold.is_some() {
        None
    } else {
        best
    }
}

const SMALL_LIMIT: i64 = 1 << 62;

fn try_small(buckets: &[ImageBucket<'_>]) -> Option<Vec<(Vec<i128>, u64)>> {
    buckets
        .iter()
        .map(|b| {
            let coords = b.image.to_i64s()?;
            if coords.iter().any(|c| c.abs() >= SMALL_LIMIT) {
                return None;
            }
            Some((
                coords.into_iter().map(i128::from).collect(),
                b.domains.len() as u64,
            ))
        })
        .collect()
}

fn big_images(buckets: &[ImageBucket<'_>]) -> Vec<(Vec<BigInt>, u64)> {
    buckets
        .iter()
        .map(|b| (b.image.coords().to_vec(), b.domains.len() as u64))
        .collect()
}

fn hit_line<T: LatticeInt>(images: &[(Vec<T>, u64)], hit: &ScanHit<T>) -> Option<CanonicalLine> {
    hit.dir.as_ref().map(|dir| {
        CanonicalLine::from_key(
            LineKey::from_point_dir(&images[hit.base].0, dir.clone()).to_bigint(),
        )
    })
}

fn run_scan(
    buckets: &[ImageBucket<'_>],
    threshold: Option<u64>,
) -> (Option<CanonicalLine>, Option<u64>, Option<LineKey<BigInt>>) {
    // returns (line, count, key of the line for membership tests)
    if let Some(small) = try_small(buckets) {
        if let Some(hit) = scan_lines(&small, threshold) {
            let line = hit_line(&small, &hit);
            let key = line.as_ref().map(|l| l.key());
            return (line, Some(hit.count), key);
        }
        return (None, None, None);
    }
    let big = big_images(buckets);
    if let Some(hit) = scan_lines(&big, threshold) {
        let line = hit_line(&big, &hit);
        let key = line.as_ref().map(|l| l.key());
        return (line, Some(hit.count), key);
    }
    (None, None, None)
}

/// Maximum, over all lines, of the number of marked domain points whose
/// image lies on the line (`line: None` when fewer than two distinct
/// images exist).  Empty marked set gives zero.
pub fn max_domain_collinear(
    f: &LipschitzMap,
    a: &DomainSet,
) -> Result<(u64, Option<CanonicalLine>), EstimatorError> {
    let buckets = collect_images(f, a)?;
    let (line, count, _) = run_scan(&buckets, None);
    Ok((count.unwrap_or(0), line))
}

/// Result of checking that no line carries `k` marked domain points.
#[derive(Clone, Debug)]
pub struct NoKReport {
    pub k: usize,
    /// True when every line carries fewer than `k` marked domain points.
    pub ok: bool,
    /// A violating selection when `ok` is false.
    pub witness: Option<KWitness>,
}

/// Verifies that no `k` marked domain points have collinear images,
/// stopping at the first violating line.
pub fn verify_no_k_collinear(
    f: &LipschitzMap,
    a: &DomainSet,
    k: usize,
) -> Result<NoKReport, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::InvalidK);
    }
    let buckets = collect_images(f, a)?;
    let (line, count, key) = run_scan(&buckets, Some(k as u64));
    let Some(count) = count else {
        return Ok(NoKReport {
            k,
            ok: true,
            witness: None,
        });
    };
    // gather all domain points on the hit line, ascending
    let mut domain_points: Vec<Vec<i64>> = Vec::new();
    let mut image_count = 0usize;
    for b in &buckets {
        let on_line = match &key {
            Some(key) => key.contains(b.image.coords()),
            // single distinct image: everything coincides with it
            None => true,
        };
        if on_line {
            image_count += 1;
            domain_points.extend(b.domains.iter().map(|z| (*z).clone()));
        }
    }
    domain_points.sort_unstable();
    domain_points.truncate(k);
    Ok(NoKReport {
        k,
        ok: false,
        witness: Some(KWitness {
            domain_points,
            line,
            image_count,
            domain_count: count as usize,
        }),
    })
}

/// Wraps a sequence `u_1, ..., u_L` in Z^d as a map on the window `[1, L]`
/// together with the fully marked domain.
pub fn sequence_map(
    points: &[Vec<i64>],
    m_sq: BigRational,
) -> Result<(LipschitzMap, DomainSet), EstimatorError> {
    if points.is_empty() || points[0].is_empty() {
        return Err(EstimatorError::BadDimension);
    }
    let d = points[0].len();
    let window = Window::new(vec![1], vec![points.len() as i64])?;
    let values: Vec<LatticePoint> = points.iter().map(|p| LatticePoint::from_i64s(p)).collect();
    let f = LipschitzMap::new(window, d - 1, m_sq, values)?;
    let a: DomainSet = (1..=points.len() as i64).map(|i| vec![i]).collect();
    Ok((f, a))
}

/// A sequence-and-marking pair at length `l` with no `k` collinear marked
/// points.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub l: u64,
    /// The full sequence `u_1, ..., u_L`.
    pub points: Vec<Vec<i64>>,
    /// Marked indices, ascending, 1-based.
    pub marked: Vec<i64>,
    /// Its maximum domain-collinear count (below `k`).
    pub max_count: u64,
}

#[derive(Clone, Debug)]
pub struct LevelOutcome {
    pub l: u64,
    /// Marked points demanded at this length: `min(floor(delta * l) + 1, l)`.
    pub required: u64,
    /// Whether every step sequence was enumerated (only feasible for short
    /// fully marked windows).
    pub exhaustive: bool,
    /// Best (lowest) collinear count seen at this length.
    pub best_count: u64,
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub k: usize,
    pub m_sq: u64,
    pub d: usize,
    pub delta: BigRational,
    pub levels: Vec<LevelOutcome>,
    /// Smallest length at which the search found no counterexample; a
    /// lower estimate of the forcing length.
    pub l_lower: u64,
    /// True when counterexamples persisted up to the length cap.
    pub capped: bool,
}

/// Integer steps with squared norm at most `m_sq`.
fn step_vectors(d: usize, m_sq: u64) -> Vec<Vec<i64>> {
    let r = (m_sq as f64).sqrt() as i64 + 1;
    let r = (0..=r).rev().find(|v| (v * v) as u64 <= m_sq).unwrap_or(0);
    let mut out = Vec::new();
    let mut cur = vec![-r; d];
    loop {
        let norm: u64 = cur.iter().map(|c| (c * c) as u64).sum();
        if norm <= m_sq {
            out.push(cur.clone());
        }
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < r {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -r;
                }
                break;
            }
        }
    }
}

fn accumulate(steps: &[Vec<i64>], d: usize) -> Vec<Vec<i64>> {
    let mut points = Vec::with_capacity(steps.len() + 1);
    let mut cur = vec![0i64; d];
    points.push(cur.clone());
    for s in steps {
        for (c, inc) in cur.iter_mut().zip(s) {
            *c += inc;
        }
        points.push(cur.clone());
    }
    points
}

fn required_marks(l: u64, delta: &BigRational) -> u64 {
    let floor = (delta * BigRational::from_integer(BigInt::from(l)))
        .floor()
        .to_integer()
        .to_u64()
        .unwrap_or(l);
    (floor + 1).min(l)
}

fn eval_instance(
    points: &[Vec<i64>],
    marked: &[i64],
    m_sq: u64,
    k: usize,
) -> Result<(bool, u64), EstimatorError> {
    let (f, _) = sequence_map(points, BigRational::from_integer(BigInt::from(m_sq.max(1))))?;
    let a: DomainSet = marked.iter().map(|&i| vec![i]).collect();
    let report = verify_no_k_collinear(&f, &a, k)?;
    if report.ok {
        let (count, _) = max_domain_collinear(&f, &a)?;
        Ok((true, count))
    } else {
        Ok((
            false,
            report.witness.expect("violation").domain_count as u64,
        ))
    }
}

const EXHAUSTIVE_CAP: u128 = 1 << 20;
const CLIMB_RESTARTS: usize = 8;
const CLIMB_ITERS: usize = 400;

fn search_level(
    l: u64,
    k: usize,
    m_sq: u64,
    d: usize,
    delta: &BigRational,
    seed: u64,
) -> Result<LevelOutcome, EstimatorError> {
    let required = required_marks(l, delta);
    let steps = step_vectors(d, m_sq);
    let gaps = (l - 1) as usize;
    let space = (steps.len() as u128).checked_pow(gaps as u32);
    let exhaustive =
        required == l && space.is_some_and(|s| s <= EXHAUSTIVE_CAP) && !steps.is_empty();
    let all_marked: Vec<i64> = (1..=l as i64).collect();

    let mut best_count = u64::MAX;
    let mut counterexample = None;

    if exhaustive {
        let mut choice = vec![0usize; gaps];
        'outer: loop {
            let seq: Vec<Vec<i64>> = choice.iter().map(|&i| steps[i].clone()).collect();
            let points = accumulate(&seq, d);
            let (ok, count) = eval_instance(&points, &all_marked, m_sq, k)?;
            if count < best_count {
                best_count = count;
            }
            if ok {
                counterexample = Some(Counterexample {
                    l,
                    points,
                    marked: all_marked.clone(),
                    max_count: count,
                });
                break;
            }
            let mut i = gaps;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                choice[i] += 1;
                if choice[i] < steps.len() {
                    break;
                }
                choice[i] = 0;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ l.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        'restarts: for _ in 0..CLIMB_RESTARTS {
            let mut seq: Vec<Vec<i64>> = (0..gaps)
                .map(|_| steps[rng.random_range(0..steps.len())].clone())
                .collect();
            let mut marked: Vec<i64> = if required == l {
                all_marked.clone()
            } else {
                let mut m: Vec<i64> = sample(&mut rng, l as usize, required as usize)
                    .into_iter()
                    .map(|i| i as i64 + 1)
                    .collect();
                m.sort_unstable();
                m
            };
            let mut points = accumulate(&seq, d);
            let (mut ok, mut count) = eval_instance(&points, &marked, m_sq, k)?;
            for _ in 0..CLIMB_ITERS {
                if ok {
                    best_count = best_count.min(count);
                    counterexample = Some(Counterexample {
                        l,
                        points,
                        marked,
                        max_count: count,
                    });
                    break 'restarts;
                }
                // mutate: reroll one step, or move one mark when possible
                let mut cand_seq = seq.clone();
                let mut cand_marked = marked.clone();
                let mutate_mark = required < l && gaps > 0 && rng.random_range(0..2u8) == 0;
                if mutate_mark || gaps == 0 {
                    let from = rng.random_range(0..cand_marked.len());
                    let unmarked: Vec<i64> = (1..=l as i64)
                        .filter(|i| cand_marked.binary_search(i).is_err())
                        .collect();
                    if !unmarked.is_empty() {
                        cand_marked.remove(from);
                        cand_marked.push(unmarked[rng.random_range(0..unmarked.len())]);
                        cand_marked.sort_unstable();
                    }
                } else {
                    let at = rng.random_range(0..gaps);
                    cand_seq[at] = steps[rng.random_range(0..steps.len())].clone();
                }
                let cand_points = accumulate(&cand_seq, d);
                let (cand_ok, cand_count) = eval_instance(&cand_points, &cand_marked, m_sq, k)?;
                if cand_ok || cand_count <= count {
                    seq = cand_seq;
                    marked = cand_marked;
                    points = cand_points;
                    ok = cand_ok;
                    count = cand_count;
                }
            }
            best_count = best_count.min(count);
        }
    }

    if let Some(c) = &counterexample {
        best_count = best_count.min(c.max_count);
    }
    if best_count == u64::MAX {
        best_count = 0;
    }
    Ok(LevelOutcome {
        l,
        required,
        exhaustive,
        best_count,
        counterexample,
    })
}

/// Searches lengths `1, 2, ...` for sequence instances in Z^d with squared
/// step bound `m_sq` and marked density above `delta` that avoid `k`
/// collinear marked points; stops at the first length where the search
/// fails, reporting that length as the estimate.
pub fn estimate_l_lower(
    k: usize,
    m_sq: u64,
    d: usize,
    delta: &BigRational,
    l_max: u64,
    seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    if k == 0 {
        return Err(EstimatorError::InvalidK);
    }
    if d == 0 {
        return Err(EstimatorError::BadDimension);
    }
    if !delta.is_positive() || delta > &BigRational::one() {
        return Err(EstimatorError::BadDensity);
    }
    if l_max == 0 {
        return Err(EstimatorError::BadLimit);
    }
    let mut levels = Vec::new();
    for l in 1..=l_max {
        let outcome = search_level(l, k, m_sq, d, delta, seed)?;
        let found = outcome.counterexample.is_some();
        levels.push(outcome);
        if !found {
            return Ok(EstimateReport {
                k,
                m_sq,
                d,
                delta: delta.clone(),
                levels,
                l_lower: l,
                capped: false,
            });
        }
    }
    Ok(EstimateReport {
        k,
        m_sq,
        d,
        delta: delta.clone(),
        levels,
        l_lower: l_max + 1,
        capped: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ratio, ratio_int};
    use crate::maps::gen_walk;
    use proptest::prelude::*;

    fn zig(points: &[(i64, i64)]) -> (LipschitzMap, DomainSet) {
        let pts: Vec<Vec<i64>> = points.iter().map(|&(a, b)| vec![a, b]).collect();
        sequence_map(&pts, ratio_int(2)).unwrap()
    }

    #[test]
    fn counts_with_multiplicity() {
        // images: (0,0) x2, (1,0), (2,0), (0,1); horizontal line carries 4
        let (f, a) = zig(&[(0, 0), (1, 0), (0, 0), (2, 0), (0, 1)]);
        let (count, line) = max_domain_collinear(&f, &a).unwrap();
        assert_eq!(count, 4);
        let line = line.unwrap();
        for x in [[0, 0], [1, 0], [2, 0]] {
            assert!(line.contains(&LatticePoint::from_i64s(&x)).unwrap());
        }
        let report = verify_no_k_collinear(&f, &a, 4).unwrap();
        assert!(!report.ok);
        let w = report.witness.unwrap();
        assert_eq!(w.domain_count, 4);
        assert_eq!(w.image_count, 3);
        assert_eq!(w.domain_points.len(), 4);
        assert!(verify_no_k_collinear(&f, &a, 5).unwrap().ok);
    }

    #[test]
    fn single_image_counts_as_collinear() {
        let (f, a) = zig(&[(3, 4), (3, 4), (3, 4)]);
        let (count, line) = max_domain_collinear(&f, &a).unwrap();
        assert_eq!(count, 3);
        assert!(line.is_none());
        let report = verify_no_k_collinear(&f, &a, 3).unwrap();
        assert!(!report.ok);
        let w = report.witness.unwrap();
        assert!(w.line.is_none());
        assert_eq!(w.domain_points, vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn empty_marking() {
        let (f, _) = zig(&[(0, 0), (1, 1)]);
        let a = DomainSet::new();
        assert_eq!(max_domain_collinear(&f, &a).unwrap().0, 0);
        assert!(verify_no_k_collinear(&f, &a, 1).unwrap().ok);
    }

    #[test]
    fn walk_has_five_collinear() {
        let walk = gen_walk(2000, 7).unwrap();
        let pts: Vec<Vec<i64>> = walk.points().iter().map(|p| p.to_vec()).collect();
        let (f, a) = sequence_map(&pts, ratio_int(1)).unwrap();
        let report = verify_no_k_collinear(&f, &a, 5).unwrap();
        assert!(!report.ok, "a long unit walk always repeats a line");
        assert!(report.witness.unwrap().domain_count >= 5);
    }

    #[test]
    fn step_vector_sets() {
        let s = step_vectors(2, 1);
        assert_eq!(s.len(), 5); // 0, +-e1, +-e2
        assert!(s.contains(&vec![0, 0]));
        assert!(s.contains(&vec![-1, 0]));
        assert_eq!(step_vectors(2, 2).len(), 9);
        assert_eq!(step_vectors(1, 4).len(), 5); // -2..=2
        assert_eq!(step_vectors(3, 0), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn required_marks_rounding() {
        let third = ratio(1, 3);
        assert_eq!(required_marks(3, &third), 2); // floor(1) + 1
        assert_eq!(required_marks(2, &third), 1);
        assert_eq!(required_marks(6, &ratio_int(1)), 6); // capped at l
    }

    #[test]
    fn estimate_small_k() {
        // k = 1: a single marked point is already collinear, so no length
        // admits a counterexample
        let rep = estimate_l_lower(1, 1, 2, &ratio(1, 2), 8, 3).unwrap();
        assert_eq!(rep.l_lower, 1);
        assert!(!rep.capped);
        assert!(rep.levels[0].counterexample.is_none());

        // k = 2, full density: only l = 1 avoids two marked points
        let rep = estimate_l_lower(2, 1, 2, &ratio_int(1), 8, 3).unwrap();
        assert_eq!(rep.l_lower, 2);
        assert_eq!(rep.levels.len(), 2);
        assert!(rep.levels[0].counterexample.is_some());
        assert!(rep.levels[1].exhaustive);
    }

    #[test]
    fn estimate_k3_full_density_plane() {
        // with all points marked and unit steps, length 2 avoids three
        // collinear, length 3 cannot: u1, u2, u3 with at most two distinct
        // image values... a generic L-shape breaks collinearity, so the
        // search must find counterexamples until pigeonholes kick in.
        let rep = estimate_l_lower(3, 1, 2, &ratio_int(1), 6, 5).unwrap();
        assert!(rep.l_lower >= 4, "an L-shaped 3-step path is not collinear");
        for level in &rep.levels {
            if let Some(c) = &level.counterexample {
                assert_eq!(c.points.len() as u64, level.l);
                assert!(c.max_count < 3);
                // re-verify the counterexample exactly
                let (f, _) = sequence_map(&c.points, ratio_int(1)).unwrap();
                let a: DomainSet = c.marked.iter().map(|&i| vec![i]).collect();
                assert!(verify_no_k_collinear(&f, &a, 3).unwrap().ok);
            }
        }
    }

    #[test]
    fn estimate_is_deterministic() {
        let a = estimate_l_lower(4, 1, 2, &ratio(1, 2), 10, 42).unwrap();
        let b = estimate_l_lower(4, 1, 2, &ratio(1, 2), 10, 42).unwrap();
        assert_eq!(a.l_lower, b.l_lower);
        let ca: Vec<_> = a
            .levels
            .iter()
            .filter_map(|l| l.counterexample.as_ref().map(|c| c.points.clone()))
            .collect();
        let cb: Vec<_> = b
            .levels
            .iter()
            .filter_map(|l| l.counterexample.as_ref().map(|c| c.points.clone()))
            .collect();
        assert_eq!(ca, cb);
    }

    #[test]
    fn estimate_rejects_bad_inputs() {
        assert!(matches!(
            estimate_l_lower(0, 1, 2, &ratio(1, 2), 4, 0),
            Err(EstimatorError::InvalidK)
        ));
        assert!(matches!(
            estimate_l_lower(3, 1, 0, &ratio(1, 2), 4, 0),
            Err(EstimatorError::BadDimension)
        ));
        assert!(matches!(
            estimate_l_lower(3, 1, 2, &ratio_int(2), 4, 0),
            Err(EstimatorError::BadDensity)
        ));
        assert!(matches!(
            estimate_l_lower(3, 1, 2, &ratio(1, 2), 0, 0),
            Err(EstimatorError::BadLimit)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn scan_matches_brute_force(
            pts in prop::collection::vec((0i64..6, 0i64..6), 1..9)
        ) {
            let raw: Vec<Vec<i64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let (f, a) = sequence_map(&raw, ratio_int(100)).unwrap();
            let (count, _) = max_domain_collinear(&f, &a).unwrap();
            // brute force: try all pairs of distinct images plus the
            // single-image fallback
            let mut images: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
            for p in &raw {
                *images.entry(p.clone()).or_insert(0) += 1;
            }
            let imgs: Vec<(Vec<i64>, u64)> = images.into_iter().collect();
            let mut best = 0u64;
            if imgs.len() == 1 {
                best = imgs[0].1;
            }
            for i in 0..imgs.len() {
                for j in (i + 1)..imgs.len() {
                    let mut total = 0u64;
                    for (p, m) in &imgs {
                        // p on line through imgs[i], imgs[j]?
                        let (x1, y1) = (imgs[i].0[0], imgs[i].0[1]);
                        let (x2, y2) = (imgs[j].0[0], imgs[j].0[1]);
                        let (dx, dy) = (x2 - x1, y2 - y1);
                        if (p[0] - x1) * dy == (p[1] - y1) * dx {
                            total += m;
                        }
                    }
                    best = best.max(total);
                }
            }
            prop_assert_eq!(count, best);
        }

        #[test]
        fn verify_consistent_with_max(
            pts in prop::collection::vec((0i64..5, 0i64..5), 1..8),
            k in 1usize..6,
        ) {
            let raw: Vec<Vec<i64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let (f, a) = sequence_map(&raw, ratio_int(100)).unwrap();
            let (count, _) = max_domain_collinear(&f, &a).unwrap();
            let report = verify_no_k_collinear(&f, &a, k).unwrap();
            prop_assert_eq!(report.ok, count < k as u64);
            if let Some(w) = report.witness {
                prop_assert!(w.domain_count as u64 >= k as u64);
                prop_assert_eq!(w.domain_points.len(), k);
            }
        }
    }
}
