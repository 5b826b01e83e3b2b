//! Maximal collinear subsets of finite lattice sets.
//!
//! Counting is over *distinct* points: duplicated inputs collapse before
//! any line is considered.  Both engines return the size of the largest
//! collinear subset together with the canonical line achieving it, and they
//! agree exactly, including tie-breaks (the lexicographically least
//! canonical record among maximal lines wins).
//!
//! Coordinates below 2^62 in absolute value run on machine integers; larger
//! inputs fall back to arbitrary precision transparently.

use crate::lattice::{CanonicalLine, LatticeError, LatticeInt, LatticePoint, LineKey};
use crate::maps::{DomainSet, LipschitzMap};
use num_bigint::BigInt;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CollinearError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("marked point {0:?} outside the map window")]
    OutsideWindow(Vec<i64>),
}

/// Size of the largest collinear subset and the line realizing it.
/// `line` is `None` exactly when the count is below 2.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CollinearResult {
    pub count: usize,
    pub line: Option<CanonicalLine>,
}

fn check_dims(points: &[LatticePoint]) -> Result<usize, LatticeError> {
    let Some(first) = points.first() else {
        return Ok(0);
    };
    let d = first.dim();
    for p in points {
        if p.dim() != d {
            return Err(LatticeError::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
    }
    Ok(d)
}

const SMALL_LIMIT: i128 = 1 << 62;

fn try_small(points: &[&LatticePoint]) -> Option<Vec<Vec<i128>>> {
    points
        .iter()
        .map(|p| {
            p.coords()
                .iter()
                .map(|c| {
                    let v = i128::try_from(c).ok()?;
                    (v.abs() < SMALL_LIMIT).then_some(v)
                })
                .collect()
        })
        .collect()
}

fn to_big(points: &[&LatticePoint]) -> Vec<Vec<BigInt>> {
    points.iter().map(|p| p.coords().to_vec()).collect()
}

/// Prefer higher count, then the lexicographically least line record.
fn better<T: LatticeInt>(
    a: (usize, Option<LineKey<T>>),
    b: (usize, Option<LineKey<T>>),
) -> (usize, Option<LineKey<T>>) {
    match a.0.cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => match (&a.1, &b.1) {
            (Some(ka), Some(kb)) => {
                if ka <= kb {
                    a
                } else {
                    b
                }
            }
            (Some(_), None) => a,
            _ => b,
        },
    }
}

/// O(n^2) distinct lines from all pairs, then O(n) incidence counting per
/// line.  The reference engine.
fn naive_impl<T: LatticeInt + Send + Sync>(pts: &[Vec<T>]) -> (usize, Option<LineKey<T>>) {
    let n = pts.len();
    if n <= 2 {
        let key = (n == 2).then(|| LineKey::from_pair(&pts[0], &pts[1]).expect("distinct"));
        return (n, key);
    }
    let mut lines: BTreeSet<LineKey<T>> = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            lines.insert(LineKey::from_pair(&pts[i], &pts[j]).expect("points are distinct"));
        }
    }
    let lines: Vec<LineKey<T>> = lines.into_iter().collect();
    lines
        .into_par_iter()
        .map(|key| {
            let count = pts.iter().filter(|p| key.contains(p)).count();
            (count, Some(key))
        })
        .reduce(|| (0, None), better)
}

/// O(n^2) total: for each base point, bucket the other points by primitive
/// direction; a bucket of size s means s + 1 collinear points.
fn hash_impl<T: LatticeInt + Send + Sync>(pts: &[Vec<T>]) -> (usize, Option<LineKey<T>>) {
    let n = pts.len();
    if n <= 2 {
        let key = (n == 2).then(|| LineKey::from_pair(&pts[0], &pts[1]).expect("distinct"));
        return (n, key);
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut buckets: HashMap<Vec<T>, usize> = HashMap::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let delta: Vec<T> = pts[j]
                    .iter()
                    .zip(&pts[i])
                    .map(|(a, b)| a.clone() - b.clone())
                    .collect();
                let dir = crate::lattice::primitive_direction(&delta).expect("distinct points");
                *buckets.entry(dir).or_insert(0) += 1;
            }
            let local_max = buckets.values().copied().max().unwrap_or(0);
            let mut best_key: Option<LineKey<T>> = None;
            for (dir, &count) in &buckets {
                if count == local_max {
                    let key = LineKey::from_point_dir(&pts[i], dir.clone());
                    best_key = match best_key {
                        None => Some(key),
                        Some(k) => Some(if key < k { key } else { k }),
                    };
                }
            }
            (local_max + 1, best_key)
        })
        .reduce(|| (0, None), better)
}

fn dedupe(points: &[LatticePoint]) -> Vec<&LatticePoint> {
    let set: BTreeSet<&LatticePoint> = points.iter().collect();
    set.into_iter().collect()
}

/// A counting backend over points with coordinates of type `T`.
type EngineFn<T> = fn(&[Vec<T>]) -> (usize, Option<LineKey<T>>);

fn run_engine(
    points: &[LatticePoint],
    engine: EngineFn<i128>,
    engine_big: EngineFn<BigInt>,
) -> Result<CollinearResult, LatticeError> {
    check_dims(points)?;
    let distinct = dedupe(points);
    let (count, key) = match try_small(&distinct) {
        Some(small) => {
            let (count, key) = engine(&small);
            (count, key.map(|k| k.to_bigint()))
        }
        None => engine_big(&to_big(&distinct)),
    };
    Ok(CollinearResult {
        count,
        line: key.map(CanonicalLine::from_key),
    })
}

/// Reference engine: enumerate every line spanned by a pair, count
/// incidences per line.
pub fn max_collinear_naive(points: &[LatticePoint]) -> Result<CollinearResult, LatticeError> {
    run_engine(points, naive_impl::<i128>, naive_impl::<BigInt>)
}

/// Direction-hashing engine; exact same results as the reference engine.
pub fn max_collinear_hash(points: &[LatticePoint]) -> Result<CollinearResult, LatticeError> {
    run_engine(points, hash_impl::<i128>, hash_impl::<BigInt>)
}

/// A k-point selection from a marked set whose images are k distinct
/// collinear points.
#[derive(Clone, Debug)]
pub struct KWitness {
    /// The k selected domain points, ascending.
    pub domain_points: Vec<Vec<i64>>,
    /// The common image line (`None` only for k = 1).
    pub line: Option<CanonicalLine>,
    /// Distinct image points of the marked set on that line.
    pub image_count: usize,
    /// Marked domain points (with multiplicity) mapping onto that line.
    pub domain_count: usize,
}

/// Searches the image of the marked set for a line carrying at least `k`
/// distinct image points and returns the lexicographically least selection
/// of `k` marked domain points realizing one.  Quadratic in the number of
/// distinct image points.
pub fn find_k_collinear(
    f: &LipschitzMap,
    a: &DomainSet,
    k: usize,
) -> Result<Option<KWitness>, CollinearError> {
    if k == 0 {
        return Err(CollinearError::InvalidK);
    }
    let mut by_image: BTreeMap<&LatticePoint, Vec<&Vec<i64>>> = BTreeMap::new();
    for p in a {
        let img = f
            .eval(p)
            .ok_or_else(|| CollinearError::OutsideWindow(p.clone()))?;
        by_image.entry(img).or_default().push(p);
    }
    if k == 1 {
        return Ok(a.iter().next().map(|p| KWitness {
            domain_points: vec![p.clone()],
            line: None,
            image_count: 1,
            domain_count: by_image[f.eval(p).expect("checked")].len(),
        }));
    }
    let images: Vec<&LatticePoint> = by_image.keys().copied().collect();
    if images.len() < k {
        return Ok(None);
    }

    // all candidate lines carrying at least k distinct images, via
    // per-base direction buckets
    let mut candidates: BTreeSet<LineKey<BigInt>> = BTreeSet::new();
    for i in 0..images.len() {
        let mut buckets: HashMap<Vec<BigInt>, usize> = HashMap::new();
        for j in 0..images.len() {
            if j == i {
                continue;
            }
            let delta = images[j].delta(images[i])?;
            let dir = crate::lattice::primitive_direction(&delta).expect("distinct images");
            *buckets.entry(dir).or_insert(0) += 1;
        }
        for (dir, count) in buckets {
            if count + 1 >= k {
                candidates.insert(LineKey::from_point_dir(images[i].coords(), dir));
            }
        }
    }

    let mut best: Option<KWitness> = None;
    for key in candidates {
        let mut image_count = 0usize;
        let mut domain_count = 0usize;
        let mut selection: Vec<Vec<i64>> = Vec::new();
        let mut used_images: BTreeSet<&LatticePoint> = BTreeSet::new();
        let mut on_line: Vec<(&Vec<i64>, &LatticePoint)> = Vec::new();
        for (img, doms) in &by_image {
            if key.contains(img.coords()) {
                image_count += 1;
                domain_count += doms.len();
                for p in doms {
                    on_line.push((p, img));
                }
            }
        }
        if image_count < k {
            continue;
        }
        on_line.sort_by(|a, b| a.0.cmp(b.0));
        for (p, img) in on_line {
            if selection.len() == k {
                break;
            }
            if used_images.insert(img) {
                selection.push((*p).clone());
            }
        }
        debug_assert_eq!(selection.len(), k);
        let witness = KWitness {
            domain_points: selection,
            line: Some(CanonicalLine::from_key(key)),
            image_count,
            domain_count,
        };
        best = Some(match best {
            None => witness,
            Some(b) => {
                if witness.domain_points < b.domain_points {
                    witness
                } else {
                    b
                }
            }
        });
    }
    Ok(best)
}
