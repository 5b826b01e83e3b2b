//! Lattice points, canonical lines, and floors of rational segments.
//!
//! A line through two distinct lattice points is stored canonically as a
//! primitive direction (gcd 1, first nonzero entry positive) together with
//! the vector of 2x2 minors `anchor[(i,j)] = p_i*dir_j - p_j*dir_i` taken
//! over index pairs `i < j`.  Two point pairs span the same line exactly
//! when their canonical records are equal, which makes the record usable as
//! a hash/ordering key.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coincident points do not determine a line")]
    DegenerateLine,
}

/// A point of Z^d with arbitrary-precision coordinates.
///
/// Ordering is lexicographic on coordinates; `Display` prints coordinates
/// separated by single spaces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LatticePoint {
    coords: Vec<BigInt>,
}

impl LatticePoint {
    pub fn new(coords: Vec<BigInt>) -> Self {
        assert!(!coords.is_empty(), "lattice points need dimension >= 1");
        Self { coords }
    }

    pub fn from_i64s(coords: &[i64]) -> Self {
        Self::new(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<BigInt> {
        self.coords
    }

    pub fn to_i64s(&self) -> Option<Vec<i64>> {
        self.coords.iter().map(|c| i64::try_from(c).ok()).collect()
    }

    /// Coordinatewise translation by an integer vector of equal dimension.
    pub fn translate(&self, shift: &[BigInt]) -> Result<Self, LatticeError> {
        if shift.len() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: shift.len(),
            });
        }
        Ok(Self::new(
            self.coords.iter().zip(shift).map(|(a, b)| a + b).collect(),
        ))
    }

    pub(crate) fn delta(&self, other: &Self) -> Result<Vec<BigInt>, LatticeError> {
        if self.dim() != other.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect())
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A point of Q^d; coordinates are kept reduced by the rational type.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RationalPoint {
    coords: Vec<BigRational>,
}

impl RationalPoint {
    pub fn new(coords: Vec<BigRational>) -> Self {
        assert!(!coords.is_empty(), "rational points need dimension >= 1");
        Self { coords }
    }

    pub fn from_lattice(p: &LatticePoint) -> Self {
        Self::new(
            p.coords()
                .iter()
                .map(|c| BigRational::from_integer(c.clone()))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    /// Coordinatewise floor.
    pub fn floor(&self) -> LatticePoint {
        LatticePoint::new(self.coords.iter().map(|c| c.floor().to_integer()).collect())
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}/{}", c.numer(), c.denom())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Generic exact kernels, instantiated at BigInt and (for the hot search
// paths) at i128.  Inputs on the i128 path are pre-checked to |c| < 2^62 so
// products of two differences cannot overflow.

pub(crate) trait LatticeInt: Integer + Signed + Clone + Ord + Hash {
    fn to_bigint(&self) -> BigInt;
}

impl LatticeInt for BigInt {
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

impl LatticeInt for i128 {
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

/// True when the 2x2 minors of the pair (u, v) all vanish, i.e. rank <= 1.
pub(crate) fn minors_vanish<T: LatticeInt>(u: &[T], v: &[T]) -> bool {
    debug_assert_eq!(u.len(), v.len());
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            if u[i].clone() * v[j].clone() != u[j].clone() * v[i].clone() {
                return false;
            }
        }
    }
    true
}

/// Divides by the gcd and flips signs so the first nonzero entry is
/// positive.  Returns `None` for the zero vector.
pub(crate) fn primitive_direction<T: LatticeInt>(delta: &[T]) -> Option<Vec<T>> {
    let mut g = T::zero();
    for c in delta {
        g = g.gcd(c);
    }
    if g.is_zero() {
        return None;
    }
    let mut dir: Vec<T> = delta.iter().map(|c| c.clone() / g.clone()).collect();
    let first = dir.iter().find(|c| !c.is_zero()).expect("nonzero vector");
    if first.is_negative() {
        for c in &mut dir {
            *c = T::zero() - c.clone();
        }
    }
    Some(dir)
}

/// Canonical line record over any coordinate type; used internally so the
/// search engines can stay on machine integers.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub(crate) struct LineKey<T> {
    pub dir: Vec<T>,
    pub anchor: Vec<T>,
}

impl<T: LatticeInt> LineKey<T> {
    /// Line through two distinct points; `None` when they coincide.
    pub fn from_pair(p: &[T], q: &[T]) -> Option<Self> {
        let delta: Vec<T> = q
            .iter()
            .zip(p)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        let dir = primitive_direction(&delta)?;
        Some(Self::from_point_dir(p, dir))
    }

    pub fn from_point_dir(p: &[T], dir: Vec<T>) -> Self {
        let d = p.len();
        let mut anchor = Vec::with_capacity(d * (d - 1) / 2);
        for i in 0..d {
            for j in (i + 1)..d {
                anchor.push(p[i].clone() * dir[j].clone() - p[j].clone() * dir[i].clone());
            }
        }
        Self { dir, anchor }
    }

    /// Membership test: x lies on the line iff its minor vector against the
    /// direction reproduces the anchor.
    pub fn contains(&self, x: &[T]) -> bool {
        let d = self.dir.len();
        debug_assert_eq!(x.len(), d);
        let mut idx = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                if x[i].clone() * self.dir[j].clone() - x[j].clone() * self.dir[i].clone()
                    != self.anchor[idx]
                {
                    return false;
                }
                idx += 1;
            }
        }
        true
    }

    pub fn to_bigint(&self) -> LineKey<BigInt> {
        LineKey {
            dir: self.dir.iter().map(LatticeInt::to_bigint).collect(),
            anchor: self.anchor.iter().map(LatticeInt::to_bigint).collect(),
        }
    }
}

// ---------------------------------------------------------------------------

/// Canonical representation of a lattice line: a primitive direction plus
/// the 2x2 minor vector of any point on the line against that direction.
/// Equal records identify equal lines, so the type doubles as a set/map key.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonicalLine {
    direction: Vec<BigInt>,
    anchor: Vec<BigInt>,
}

impl CanonicalLine {
    pub(crate) fn from_key(key: LineKey<BigInt>) -> Self {
        Self {
            direction: key.dir,
            anchor: key.anchor,
        }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[BigInt] {
        &self.direction
    }

    /// Minor vector `p_i*dir_j - p_j*dir_i` over pairs `i < j` in
    /// lexicographic order; identical for every point `p` on the line.
    pub fn anchor(&self) -> &[BigInt] {
        &self.anchor
    }

    pub fn contains(&self, x: &LatticePoint) -> Result<bool, LatticeError> {
        if x.dim() != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        let key = LineKey {
            dir: self.direction.clone(),
            anchor: self.anchor.clone(),
        };
        Ok(key.contains(x.coords()))
    }

    pub(crate) fn key(&self) -> LineKey<BigInt> {
        LineKey {
            dir: self.direction.clone(),
            anchor: self.anchor.clone(),
        }
    }
}

impl fmt::Display for CanonicalLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "direction")?;
        for c in &self.direction {
            write!(f, " {c}")?;
        }
        write!(f, " anchor")?;
        for c in &self.anchor {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

/// Exact test: do three points (with multiplicity) lie on one line?
/// Coincident points are degenerately collinear.
pub fn collinear3(
    p: &LatticePoint,
    q: &LatticePoint,
    r: &LatticePoint,
) -> Result<bool, LatticeError> {
    let u = p.delta(q)?;
    let v = p.delta(r)?;
    Ok(minors_vanish(&u, &v))
}

/// Canonical line through two distinct points.
pub fn canonical_line(p: &LatticePoint, q: &LatticePoint) -> Result<CanonicalLine, LatticeError> {
    if p.dim() != q.dim() {
        return Err(LatticeError::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    match LineKey::from_pair(p.coords(), q.coords()) {
        Some(key) => Ok(CanonicalLine::from_key(key)),
        None => Err(LatticeError::DegenerateLine),
    }
}

// ---------------------------------------------------------------------------

/// The coordinatewise floor of the straight segment between two rational
/// points: `t -> floor((1-t)*start + t*end)` for `t` in `[0, 1]`.
///
/// `m_sq` is the squared Euclidean distance between the floors of the two
/// endpoints (the squared length attributed to the segment).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralizedSegment {
    start: RationalPoint,
    end: RationalPoint,
    m_sq: BigInt,
}

impl GeneralizedSegment {
    pub fn new(start: RationalPoint, end: RationalPoint) -> Result<Self, LatticeError> {
        if start.dim() != end.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: start.dim(),
                got: end.dim(),
            });
        }
        let m_sq = end
            .floor()
            .delta(&start.floor())
            .expect("dims checked")
            .iter()
            .map(|c| c * c)
            .sum();
        Ok(Self { start, end, m_sq })
    }

    pub fn from_lattice(p: &LatticePoint, q: &LatticePoint) -> Result<Self, LatticeError> {
        Self::new(
            RationalPoint::from_lattice(p),
            RationalPoint::from_lattice(q),
        )
    }

    pub fn start(&self) -> &RationalPoint {
        &self.start
    }

    pub fn end(&self) -> &RationalPoint {
        &self.end
    }

    pub fn dim(&self) -> usize {
        self.start.dim()
    }

    /// Squared distance between the endpoint floors.
    pub fn m_sq(&self) -> &BigInt {
        &self.m_sq
    }

    pub fn floor_start(&self) -> LatticePoint {
        self.start.floor()
    }

    pub fn floor_end(&self) -> LatticePoint {
        self.end.floor()
    }

    /// Exact value at rational parameter `t`.
    pub fn eval_floor(&self, t: &BigRational) -> LatticePoint {
        let one = BigRational::from_integer(BigInt::from(1));
        let s = &one - t;
        LatticePoint::new(
            self.start
                .coords()
                .iter()
                .zip(self.end.coords())
                .map(|(a, b)| (a * &s + b * t).floor().to_integer())
                .collect(),
        )
    }
}

/// Piecewise-constant structure of a segment's floor: sorted breakpoints
/// `0 = t_0 < ... < t_n = 1`, the exact value at each breakpoint, and the
/// constant value on each open interval between consecutive breakpoints.
#[derive(Clone, Debug)]
pub struct SegmentProfile {
    pub breaks: Vec<BigRational>,
    pub break_values: Vec<LatticePoint>,
    pub interval_values: Vec<LatticePoint>,
}

/// Full breakpoint analysis of the floor of a segment.
pub fn segment_profile(seg: &GeneralizedSegment) -> SegmentProfile {
    let zero = BigRational::zero();
    let one = BigRational::from_integer(BigInt::from(1));
    let mut breaks: BTreeSet<BigRational> = BTreeSet::new();
    breaks.insert(zero.clone());
    breaks.insert(one.clone());
    for (a, b) in seg.start.coords().iter().zip(seg.end.coords()) {
        let delta = b - a;
        if delta.is_zero() {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut n = lo.ceil().to_integer();
        let n_hi = hi.floor().to_integer();
        while n <= n_hi {
            let t = (BigRational::from_integer(n.clone()) - a) / &delta;
            if t > zero && t < one {
                breaks.insert(t);
            }
            n += 1;
        }
    }
    let breaks: Vec<BigRational> = breaks.into_iter().collect();
    let break_values: Vec<LatticePoint> = breaks.iter().map(|t| seg.eval_floor(t)).collect();
    let two = BigRational::from_integer(BigInt::from(2));
    let interval_values: Vec<LatticePoint> = breaks
        .windows(2)
        .map(|w| seg.eval_floor(&((&w[0] + &w[1]) / &two)))
        .collect();
    SegmentProfile {
        breaks,
        break_values,
        interval_values,
    }
}

/// Every lattice point attained by the floor of the segment, in traversal
/// order, without duplicates.  Each coordinate of the floor is monotone in
/// `t`, so deduplicating consecutive values already deduplicates globally.
pub fn segment_points(seg: &GeneralizedSegment) -> Vec<LatticePoint> {
    let profile = segment_profile(seg);
    let mut out: Vec<LatticePoint> = Vec::new();
    for i in 0..profile.breaks.len() {
        for candidate in [
            Some(&profile.break_values[i]),
            profile.interval_values.get(i),
        ]
        .into_iter()
        .flatten()
        {
            if out.last() != Some(candidate) {
                out.push(candidate.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ratio, ratio_int};
    use proptest::prelude::*;

    fn pt(coords: &[i64]) -> LatticePoint {
        LatticePoint::from_i64s(coords)
    }

    #[test]
    fn collinear3_basics() {
        assert!(collinear3(&pt(&[0, 0]), &pt(&[1, 2]), &pt(&[2, 4])).unwrap());
        assert!(!collinear3(&pt(&[0, 0]), &pt(&[1, 2]), &pt(&[2, 5])).unwrap());
        // coincident points are degenerately collinear
        assert!(collinear3(&pt(&[3, 1]), &pt(&[3, 1]), &pt(&[9, 9])).unwrap());
        assert!(collinear3(&pt(&[0, 0, 0]), &pt(&[1, 1, 1]), &pt(&[5, 5, 5])).unwrap());
        assert!(!collinear3(&pt(&[0, 0, 0]), &pt(&[1, 1, 1]), &pt(&[2, 2, 3])).unwrap());
        assert_eq!(
            collinear3(&pt(&[0, 0]), &pt(&[1, 1, 1]), &pt(&[2, 2])),
            Err(LatticeError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn canonical_line_matches_worked_example() {
        let line = canonical_line(&pt(&[2, 3]), &pt(&[4, 7])).unwrap();
        assert_eq!(line.direction(), &[BigInt::from(1), BigInt::from(2)]);
        assert_eq!(line.anchor(), &[BigInt::from(1)]);
        // symmetric in the argument order
        let rev = canonical_line(&pt(&[4, 7]), &pt(&[2, 3])).unwrap();
        assert_eq!(line, rev);
        // any third point on the line produces the same record
        let other = canonical_line(&pt(&[6, 11]), &pt(&[2, 3])).unwrap();
        assert_eq!(line, other);
        assert!(line.contains(&pt(&[3, 5])).unwrap());
        assert!(!line.contains(&pt(&[3, 6])).unwrap());
    }

    #[test]
    fn canonical_line_axis_case() {
        let line = canonical_line(&pt(&[0, 0, 0]), &pt(&[0, 0, 2])).unwrap();
        assert_eq!(
            line.direction(),
            &[BigInt::from(0), BigInt::from(0), BigInt::from(1)]
        );
        assert!(line.anchor().iter().all(|c| c.is_zero()));
    }

    #[test]
    fn canonical_line_degenerate() {
        assert_eq!(
            canonical_line(&pt(&[5, 5]), &pt(&[5, 5])),
            Err(LatticeError::DegenerateLine)
        );
    }

    #[test]
    fn direction_sign_normalization() {
        let a = canonical_line(&pt(&[0, 5]), &pt(&[2, 1])).unwrap();
        let b = canonical_line(&pt(&[2, 1]), &pt(&[0, 5])).unwrap();
        assert_eq!(a, b);
        assert!(a.direction()[0] > BigInt::from(0));
        let vert = canonical_line(&pt(&[3, 9]), &pt(&[3, 2])).unwrap();
        assert_eq!(vert.direction(), &[BigInt::from(0), BigInt::from(1)]);
    }

    #[test]
    fn segment_points_integer_endpoints() {
        let seg = GeneralizedSegment::from_lattice(&pt(&[0, 0]), &pt(&[2, 1])).unwrap();
        assert_eq!(seg.m_sq(), &BigInt::from(5));
        let pts = segment_points(&seg);
        assert_eq!(pts, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[2, 1])]);

        let seg = GeneralizedSegment::from_lattice(&pt(&[0, 0]), &pt(&[3, 0])).unwrap();
        assert_eq!(
            segment_points(&seg),
            vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[2, 0]), pt(&[3, 0])]
        );
    }

    #[test]
    fn segment_points_rational_endpoints() {
        let start = RationalPoint::new(vec![ratio(1, 2), ratio_int(0)]);
        let end = RationalPoint::new(vec![ratio(5, 2), ratio_int(1)]);
        let seg = GeneralizedSegment::new(start, end).unwrap();
        // floors of endpoints: (0,0) and (2,1)
        assert_eq!(seg.floor_start(), pt(&[0, 0]));
        assert_eq!(seg.floor_end(), pt(&[2, 1]));
        assert_eq!(seg.m_sq(), &BigInt::from(5));
        let pts = segment_points(&seg);
        assert_eq!(pts.first().unwrap(), &pt(&[0, 0]));
        assert_eq!(pts.last().unwrap(), &pt(&[2, 1]));
        for w in pts.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn degenerate_segment_is_single_point() {
        let p = RationalPoint::new(vec![ratio(7, 3), ratio(1, 2)]);
        let seg = GeneralizedSegment::new(p.clone(), p).unwrap();
        assert_eq!(seg.m_sq(), &BigInt::from(0));
        assert_eq!(segment_points(&seg), vec![pt(&[2, 0])]);
    }

    proptest! {
        #[test]
        fn segment_points_props(
            xs in prop::collection::vec(-40i64..40, 2..4),
            nums in prop::collection::vec(-200i64..200, 2..4),
        ) {
            let d = xs.len().min(nums.len());
            let start = RationalPoint::new(
                xs[..d].iter().map(|&v| ratio_int(v)).collect());
            let end = RationalPoint::new(
                nums[..d].iter().map(|&n| ratio(n, 7)).collect());
            let seg = GeneralizedSegment::new(start, end).unwrap();
            let pts = segment_points(&seg);
            prop_assert_eq!(pts.first().unwrap(), &seg.floor_start());
            prop_assert_eq!(pts.last().unwrap(), &seg.floor_end());
            // per-coordinate monotonicity in the direction of travel
            for j in 0..d {
                let sign = (seg.end().coords()[j].clone()
                    - &seg.start().coords()[j]).numer().sign();
                for w in pts.windows(2) {
                    let step = &w[1].coords()[j] - &w[0].coords()[j];
                    match sign {
                        num_bigint::Sign::Plus => prop_assert!(step >= BigInt::from(0)),
                        num_bigint::Sign::Minus => prop_assert!(step <= BigInt::from(0)),
                        num_bigint::Sign::NoSign => prop_assert!(step.is_zero()),
                    }
                }
            }
            // no duplicates anywhere
            let set: std::collections::HashSet<_> = pts.iter().collect();
            prop_assert_eq!(set.len(), pts.len());
        }

        #[test]
        fn canonical_line_key_is_pair_invariant(
            px in -50i64..50, py in -50i64..50,
            dx in -9i64..9, dy in -9i64..9,
            s in 1i64..5, t in -5i64..-1,
        ) {
            prop_assume!(dx != 0 || dy != 0);
            let p = pt(&[px, py]);
            let q = pt(&[px + s * dx, py + s * dy]);
            let r = pt(&[px + t * dx, py + t * dy]);
            let a = canonical_line(&p, &q).unwrap();
            let b = canonical_line(&q, &r).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.contains(&r).unwrap());
            // a genuinely off-line point is rejected
            let off = pt(&[px + dx - dy * 91, py + dy + dx * 91]);
            prop_assert!(!a.contains(&off).unwrap());
        }

        #[test]
        fn collinear3_shift_invariance(
            coords in prop::collection::vec(-30i64..30, 6),
            shift in prop::collection::vec(-100i64..100, 2),
        ) {
            let p = pt(&coords[0..2]);
            let q = pt(&coords[2..4]);
            let r = pt(&coords[4..6]);
            let base = collinear3(&p, &q, &r).unwrap();
            let sh: Vec<BigInt> = shift.iter().map(|&v| BigInt::from(v)).collect();
            let shifted = collinear3(
                &p.translate(&sh).unwrap(),
                &q.translate(&sh).unwrap(),
                &r.translate(&sh).unwrap(),
            ).unwrap();
            prop_assert_eq!(base, shifted);
        }
    }
}
