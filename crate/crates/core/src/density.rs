//! Window densities of finite lattice sets.
//!
//! The density of a window with corner `N` and side parameter `L` is the
//! number of marked points in the *closed* box `prod_i [N_i, N_i + L]`
//! divided by `L^d`.  The closed box holds `(L+1)^d` lattice points, so
//! values above 1 are legitimate and are reported verbatim.

use crate::maps::DomainSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("window side parameter must be at least 1")]
    ZeroWindow,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bounding box too large for the profile scan: {0} cells")]
    TooLarge(u128),
}

/// Best window found for one side parameter: the count, the corner
/// realizing it (lexicographically least among maximizers), and the exact
/// density value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensityReport {
    pub l: u32,
    pub corner: Vec<i64>,
    pub count: u64,
    pub value: BigRational,
}

fn density_value(count: u64, l: u32, d: usize) -> BigRational {
    let num = BigInt::from(count);
    let den = BigInt::from(l).pow(d as u32);
    BigRational::new(num, den)
}

/// Exact density of one window.
pub fn window_density(a: &DomainSet, corner: &[i64], l: u32) -> Result<BigRational, DensityError> {
    if l == 0 {
        return Err(DensityError::ZeroWindow);
    }
    let d = corner.len();
    let mut count = 0u64;
    for p in a {
        if p.len() != d {
            return Err(DensityError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        if p.iter()
            .zip(corner)
            .all(|(c, n)| *n <= *c && *c <= n + l as i64)
        {
            count += 1;
        }
    }
    Ok(density_value(count, l, d))
}

const MAX_PROFILE_CELLS: u128 = 1 << 24;

/// d-dimensional inclusion-exclusion counter over the bounding box of a set.
struct PrefixSums {
    lo: Vec<i64>,
    hi: Vec<i64>,
    extents: Vec<usize>,
    cum: Vec<u32>,
}

impl PrefixSums {
    fn build(a: &DomainSet) -> Result<Self, DensityError> {
        let first = a.iter().next().expect("nonempty");
        let d = first.len();
        let mut lo = first.clone();
        let mut hi = first.clone();
        for p in a {
            if p.len() != d {
                return Err(DensityError::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let mut cells: u128 = 1;
        for i in 0..d {
            cells = cells.saturating_mul((hi[i] - lo[i] + 1) as u128);
        }
        if cells > MAX_PROFILE_CELLS {
            return Err(DensityError::TooLarge(cells));
        }
        let extents: Vec<usize> = (0..d).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
        let mut cum = vec![0u32; cells as usize];
        let index = |p: &[i64]| -> usize {
            let mut idx = 0usize;
            for i in 0..p.len() {
                idx = idx * extents[i] + (p[i] - lo[i]) as usize;
            }
            idx
        };
        for p in a {
            cum[index(p)] += 1;
        }
        // cumulative sum along each axis in turn
        let total = cells as usize;
        for axis in 0..d {
            let stride: usize = extents[axis + 1..].iter().product();
            let span = extents[axis];
            for base in 0..total {
                let pos = (base / stride) % span;
                if pos > 0 {
                    cum[base] += cum[base - stride];
                }
            }
        }
        Ok(Self {
            lo,
            hi,
            extents,
            cum,
        })
    }

    /// Count of marked points with coordinates `<= q` componentwise;
    /// `q_i` may be `lo_i - 1` (contributing zero) up to `hi_i`.
    fn cum_at(&self, q: &[i64]) -> i64 {
        let mut idx = 0usize;
        for (i, &qi) in q.iter().enumerate() {
            if qi < self.lo[i] {
                return 0;
            }
            let c = qi.min(self.hi[i]);
            idx = idx * self.extents[i] + (c - self.lo[i]) as usize;
        }
        self.cum[idx] as i64
    }

    /// Marked points in the closed box `[lo, hi]`.
    fn box_count(&self, blo: &[i64], bhi: &[i64]) -> u64 {
        let d = blo.len();
        let mut total: i64 = 0;
        let mut q = vec![0i64; d];
        for mask in 0..(1usize << d) {
            let mut bits = 0;
            for i in 0..d {
                if mask & (1 << i) != 0 {
                    q[i] = blo[i] - 1;
                    bits += 1;
                } else {
                    q[i] = bhi[i];
                }
            }
            let term = self.cum_at(&q);
            total += if bits % 2 == 0 { term } else { -term };
        }
        debug_assert!(total >= 0);
        total as u64
    }
}

/// For each side parameter, the supremum of window densities over all
/// corners (a maximizing window can always be slid so its corner lies in
/// the bounding box, which is what the scan covers).  Reports are in the
/// input order of `l_list`; an empty set yields zero values.
pub fn banach_density_estimate(
    a: &DomainSet,
    l_list: &[u32],
) -> Result<Vec<DensityReport>, DensityError> {
    if l_list.contains(&0) {
        return Err(DensityError::ZeroWindow);
    }
    if a.is_empty() {
        return Ok(l_list
            .iter()
            .map(|&l| DensityReport {
                l,
                corner: Vec::new(),
                count: 0,
                value: BigRational::zero(),
            })
            .collect());
    }
    let d = a.iter().next().expect("nonempty").len();
    let sums = PrefixSums::build(a)?;
    let mut out = Vec::with_capacity(l_list.len());
    for &l in l_list {
        let mut best_count: u64 = 0;
        let mut best_corner: Vec<i64> = sums.lo.clone();
        let mut corner = sums.lo.clone();
        let mut bhi = vec![0i64; d];
        'corners: loop {
            for i in 0..d {
                bhi[i] = corner[i] + l as i64;
            }
            let count = sums.box_count(&corner, &bhi);
            if count > best_count {
                best_count = count;
                best_corner = corner.clone();
            }
            // lexicographic odometer over the bounding box
            for i in (0..d).rev() {
                if corner[i] < sums.hi[i] {
                    corner[i] += 1;
                    corner[i + 1..].copy_from_slice(&sums.lo[i + 1..]);
                    continue 'corners;
                }
            }
            break;
        }
        out.push(DensityReport {
            l,
            corner: best_corner,
            count: best_count,
            value: density_value(best_count, l, d),
        });
    }
    Ok(out)
}
