//! Tabulated Lipschitz maps on integer boxes, and the constructions that
//! produce them: graph embeddings, bounded-gap paths, codimension
//! projections, rescaling, and collision-free gluing of instance families.
//!
//! A map stores its squared Lipschitz constant `M^2` as an exact rational;
//! constants like `sqrt(1 + Mg^2)` arising from graph embeddings are
//! irrational, so the square is the canonical exact representation.

use crate::exact::{perfect_sqrt_ratio, sum_of_sqrts_le};
use crate::lattice::{minors_vanish, LatticeError, LatticePoint, RationalPoint};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// Domain subsets are sets of window points with machine-sized coordinates.
pub type DomainSet = BTreeSet<Vec<i64>>;

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("window bounds malformed: {0}")]
    BadWindow(String),
    #[error("window too large: {0} points")]
    WindowTooLarge(u128),
    #[error("value table has {got} entries, window has {want}")]
    WrongTableSize { want: usize, got: usize },
    #[error("value at {at:?} has dimension {got}, expected {want}")]
    WrongValueDim {
        at: Vec<i64>,
        want: usize,
        got: usize,
    },
    #[error("squared Lipschitz constant must be positive")]
    NonPositiveConstant,
    #[error("table violates the stated Lipschitz bound between {x:?} and {y:?}")]
    NotLipschitz { x: Vec<i64>, y: Vec<i64> },
    #[error("point {0:?} outside the map window")]
    OutsideWindow(Vec<i64>),
    #[error("instance family is empty")]
    EmptyFamily,
    #[error("family blocks inconsistent: {0}")]
    InconsistentFamily(String),
    #[error("gluing requires squared Lipschitz constant >= 1 for unit filler steps")]
    GlueNeedsUnitSteps,
    #[error("gluing is implemented for one-dimensional domains only")]
    GlueNeedsDimOne,
    #[error("average gap bound violated: sum of gap lengths exceeds count * bound")]
    GapBoundViolated,
    #[error("rescaling requires the squared Lipschitz constant to be a rational square")]
    IrrationalScale,
    #[error("gluing failed to find a collision-free image shift within budget")]
    GlueBudgetExhausted,
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]` in Z^d, iterated in
/// lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Window {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

const MAX_WINDOW_VOLUME: u128 = 1 << 28;

impl Window {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self, MapError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(MapError::BadWindow(format!(
                "need matching nonempty bounds, got {} lower / {} upper",
                lo.len(),
                hi.len()
            )));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if l > h {
                return Err(MapError::BadWindow(format!("empty extent [{l}, {h}]")));
            }
        }
        let w = Self { lo, hi };
        let vol = w.volume_u128();
        if vol > MAX_WINDOW_VOLUME {
            return Err(MapError::WindowTooLarge(vol));
        }
        Ok(w)
    }

    /// Cube `[lo, hi]^d`.
    pub fn cube(d: usize, lo: i64, hi: i64) -> Result<Self, MapError> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    fn volume_u128(&self) -> u128 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .product()
    }

    pub fn volume(&self) -> usize {
        self.volume_u128() as usize
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| l <= c && c <= h)
    }

    /// Lexicographic rank of a window point.
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let mut idx: usize = 0;
        for (i, &xi) in x.iter().enumerate() {
            let extent = (self.hi[i] - self.lo[i] + 1) as usize;
            idx = idx * extent + (xi - self.lo[i]) as usize;
        }
        Some(idx)
    }

    pub fn point_at(&self, mut idx: usize) -> Vec<i64> {
        let d = self.dim();
        let mut out = vec![0i64; d];
        for i in (0..d).rev() {
            let extent = (self.hi[i] - self.lo[i] + 1) as usize;
            out[i] = self.lo[i] + (idx % extent) as i64;
            idx /= extent;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.volume()).map(|i| self.point_at(i))
    }
}

/// A total map `f: window -> Z^(d+h)` tabulated in lexicographic order,
/// together with its claimed squared Lipschitz constant.
///
/// Construction checks shape only; whether the table actually satisfies the
/// bound is the job of [`LipschitzMap::validate_lipschitz`], so that invalid
/// tables can be loaded and reported on.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LipschitzMap {
    window: Window,
    h: usize,
    m_sq: BigRational,
    values: Vec<LatticePoint>,
}

impl LipschitzMap {
    pub fn new(
        window: Window,
        h: usize,
        m_sq: BigRational,
        values: Vec<LatticePoint>,
    ) -> Result<Self, MapError> {
        if !m_sq.is_positive() {
            return Err(MapError::NonPositiveConstant);
        }
        if values.len() != window.volume() {
            return Err(MapError::WrongTableSize {
                want: window.volume(),
                got: values.len(),
            });
        }
        let want = window.dim() + h;
        for (i, v) in values.iter().enumerate() {
            if v.dim() != want {
                return Err(MapError::WrongValueDim {
                    at: window.point_at(i),
                    want,
                    got: v.dim(),
                });
            }
        }
        Ok(Self {
            window,
            h,
            m_sq,
            values,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn d(&self) -> usize {
        self.window.dim()
    }

    /// Codomain dimension minus domain dimension.
    pub fn h(&self) -> usize {
        self.h
    }

    pub fn codim_dim(&self) -> usize {
        self.d() + self.h
    }

    pub fn m_sq(&self) -> &BigRational {
        &self.m_sq
    }

    pub fn values(&self) -> &[LatticePoint] {
        &self.values
    }

    pub fn eval(&self, x: &[i64]) -> Option<&LatticePoint> {
        self.window.index_of(x).map(|i| &self.values[i])
    }

    pub fn eval_or_err(&self, x: &[i64]) -> Result<&LatticePoint, MapError> {
        self.eval(x)
            .ok_or_else(|| MapError::OutsideWindow(x.to_vec()))
    }

    /// Checks the stored table against the stored constant.
    ///
    /// `Neighbors` checks unit steps only and certifies the global constant
    /// `M * sqrt(d)` (reported as its square).  `AllPairs` checks
    /// `|f(x)-f(y)|^2 <= M^2 |x-y|^2` for every pair and certifies `M`
    /// itself.  The first violation in scan order is reported.
    pub fn validate_lipschitz(&self, mode: ValidationMode) -> LipschitzReport {
        let violation = match mode {
            ValidationMode::Neighbors => self.first_neighbor_violation(),
            ValidationMode::AllPairs => self.first_pair_violation(),
        };
        let certified_m_sq = match (&violation, mode) {
            (Some(_), _) => None,
            (None, ValidationMode::Neighbors) => {
                Some(&self.m_sq * BigRational::from_integer(BigInt::from(self.d() as i64)))
            }
            (None, ValidationMode::AllPairs) => Some(self.m_sq.clone()),
        };
        LipschitzReport {
            mode,
            valid: violation.is_none(),
            violation,
            certified_m_sq,
        }
    }

    fn first_neighbor_violation(&self) -> Option<LipschitzViolation> {
        for (i, x) in self.window.iter().enumerate() {
            for axis in 0..self.d() {
                let mut y = x.clone();
                y[axis] += 1;
                let Some(j) = self.window.index_of(&y) else {
                    continue;
                };
                let lhs = dist_sq(&self.values[i], &self.values[j]);
                if BigRational::from_integer(lhs.clone()) > self.m_sq {
                    return Some(LipschitzViolation {
                        x,
                        y,
                        image_dist_sq: lhs,
                        allowed_sq: self.m_sq.clone(),
                    });
                }
            }
        }
        None
    }

    fn first_pair_violation(&self) -> Option<LipschitzViolation> {
        let pts: Vec<Vec<i64>> = self.window.iter().collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let dom: i64 = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let lhs = dist_sq(&self.values[i], &self.values[j]);
                let rhs = &self.m_sq * BigRational::from_integer(BigInt::from(dom));
                if BigRational::from_integer(lhs.clone()) > rhs {
                    return Some(LipschitzViolation {
                        x: pts[i].clone(),
                        y: pts[j].clone(),
                        image_dist_sq: lhs,
                        allowed_sq: rhs,
                    });
                }
            }
        }
        None
    }
}

fn dist_sq(a: &LatticePoint, b: &LatticePoint) -> BigInt {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(p, q)| {
            let d = p - q;
            &d * &d
        })
        .sum()
}

pub(crate) fn norm_sq_vec(v: &[BigInt]) -> BigInt {
    v.iter().map(|c| c * c).sum()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ValidationMode {
    Neighbors,
    AllPairs,
}

impl std::fmt::Display for ValidationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidationMode::Neighbors => write!(f, "neighbors"),
            ValidationMode::AllPairs => write!(f, "all-pairs"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LipschitzViolation {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub image_dist_sq: BigInt,
    pub allowed_sq: BigRational,
}

#[derive(Clone, Debug)]
pub struct LipschitzReport {
    pub mode: ValidationMode,
    pub valid: bool,
    pub violation: Option<LipschitzViolation>,
    /// Squared constant certified by the passed check (`M^2 * d` for the
    /// neighbor mode, `M^2` for all pairs); `None` when invalid.
    pub certified_m_sq: Option<BigRational>,
}

/// Embeds a tabulated scalar function `g: window -> Z` as the graph map
/// `x -> (x, g(x))`.  Requires `g` to satisfy the stated neighbor bound
/// `|g(x)-g(y)|^2 <= mg_sq` on unit steps; the embedded map then carries
/// squared constant `1 + mg_sq`.
pub fn graph_embed(
    window: Window,
    g_values: &[BigInt],
    mg_sq: BigRational,
) -> Result<LipschitzMap, MapError> {
    if g_values.len() != window.volume() {
        return Err(MapError::WrongTableSize {
            want: window.volume(),
            got: g_values.len(),
        });
    }
    if mg_sq.is_negative() {
        return Err(MapError::NonPositiveConstant);
    }
    for (i, x) in window.iter().enumerate() {
        for axis in 0..window.dim() {
            let mut y = x.clone();
            y[axis] += 1;
            let Some(j) = window.index_of(&y) else {
                continue;
            };
            let d = &g_values[i] - &g_values[j];
            if BigRational::from_integer(&d * &d) > mg_sq {
                return Err(MapError::NotLipschitz { x, y });
            }
        }
    }
    let values: Vec<LatticePoint> = window
        .iter()
        .zip(g_values)
        .map(|(x, g)| {
            let mut coords: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
            coords.push(g.clone());
            LatticePoint::new(coords)
        })
        .collect();
    let m_sq = BigRational::one() + mg_sq;
    LipschitzMap::new(window, 1, m_sq, values)
}

/// Drops all codomain coordinates past index `d`, reducing a map into
/// Z^(d+h) to one into Z^(d+1).  The Lipschitz constant can only shrink, so
/// the stored square is kept.
pub fn project_codim(f: &LipschitzMap) -> Result<(LipschitzMap, ProjectionRecord), MapError> {
    let d = f.d();
    let keep = d + 1;
    if f.h() <= 1 {
        return Ok((
            f.clone(),
            ProjectionRecord {
                dropped: Vec::new(),
            },
        ));
    }
    let dropped: Vec<usize> = (keep..f.codim_dim()).collect();
    let values: Vec<LatticePoint> = f
        .values
        .iter()
        .map(|v| LatticePoint::new(v.coords()[..keep].to_vec()))
        .collect();
    let out = LipschitzMap::new(f.window.clone(), 1, f.m_sq.clone(), values)?;
    Ok((out, ProjectionRecord { dropped }))
}

#[derive(Clone, Debug)]
pub struct ProjectionRecord {
    /// Codomain coordinate indices that were removed.
    pub dropped: Vec<usize>,
}

/// Pointwise rescaling `x -> (f(floor(r*x) + z) - f(z)) / (M*r)` of a map
/// around a basepoint `z`.  Exact only when `M^2` is a rational square.
pub fn rescale_map(
    f: &LipschitzMap,
    r: u32,
    z: &[i64],
    x: &RationalPoint,
) -> Result<RationalPoint, MapError> {
    if r == 0 {
        return Err(MapError::BadWindow("scale factor must be positive".into()));
    }
    let m = perfect_sqrt_ratio(f.m_sq()).ok_or(MapError::IrrationalScale)?;
    if x.dim() != f.d() {
        return Err(LatticeError::DimensionMismatch {
            expected: f.d(),
            got: x.dim(),
        }
        .into());
    }
    let fz = f.eval_or_err(z)?.clone();
    let r_big = BigRational::from_integer(BigInt::from(r));
    let mut arg = vec![0i64; f.d()];
    for (i, c) in x.coords().iter().enumerate() {
        let scaled = (c * &r_big).floor().to_integer();
        let shifted = &scaled + BigInt::from(z[i]);
        arg[i] =
            i64::try_from(&shifted).map_err(|_| MapError::OutsideWindow(vec![i64::MAX; f.d()]))?;
    }
    let fx = f.eval_or_err(&arg)?;
    let denom = m * r_big;
    Ok(RationalPoint::new(
        fx.coords()
            .iter()
            .zip(fz.coords())
            .map(|(a, b)| BigRational::from_integer(a - b) / &denom)
            .collect(),
    ))
}

// ---------------------------------------------------------------------------
// Bounded-gap sequences and their path maps.

/// An ordered list of plane points whose average consecutive gap length
/// (Euclidean) is certified at construction to be at most `m_avg`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GapSequence {
    points: Vec<[i64; 2]>,
    m_avg: BigRational,
}

impl GapSequence {
    pub fn new(points: Vec<[i64; 2]>, m_avg: BigRational) -> Result<Self, MapError> {
        if points.is_empty() {
            return Err(MapError::InconsistentFamily("empty gap sequence".into()));
        }
        if !m_avg.is_positive() {
            return Err(MapError::NonPositiveConstant);
        }
        let gaps: Vec<BigRational> = points
            .windows(2)
            .map(|w| {
                let dx = BigInt::from(w[1][0] - w[0][0]);
                let dy = BigInt::from(w[1][1] - w[0][1]);
                BigRational::from_integer(&dx * &dx + &dy * &dy)
            })
            .collect();
        let count = gaps.len().max(1);
        let bound = &m_avg * BigRational::from_integer(BigInt::from(count as i64));
        if !sum_of_sqrts_le(&gaps, &bound) {
            return Err(MapError::GapBoundViolated);
        }
        Ok(Self { points, m_avg })
    }

    pub fn points(&self) -> &[[i64; 2]] {
        &self.points
    }

    pub fn m_avg(&self) -> &BigRational {
        &self.m_avg
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_l1(&self) -> i64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).abs() + (w[1][1] - w[0][1]).abs())
            .sum()
    }
}

/// A path map produced from a gap sequence: `map` is 1-Lipschitz on
/// `[1, total]`, `positions[i]` is the domain point carrying the i-th input
/// point, and `marks` is the set of those positions.
#[derive(Clone, Debug)]
pub struct PathInstance {
    pub map: LipschitzMap,
    pub positions: Vec<i64>,
    pub marks: DomainSet,
}

/// Threads a unit-speed staircase through the sequence: position 1 carries
/// the first point, and each gap is traversed first along the x axis then
/// along the y axis, one unit per domain step.  The marked positions occupy
/// an interval of length `1 + sum of l1 gaps`, so their density reflects
/// the average gap length.
pub fn sequence_to_path(seq: &GapSequence) -> Result<PathInstance, MapError> {
    let total = 1 + seq.total_l1();
    let window = Window::new(vec![1], vec![total])?;
    let mut values: Vec<LatticePoint> = Vec::with_capacity(total as usize);
    let mut positions: Vec<i64> = Vec::with_capacity(seq.len());
    let mut cur = seq.points()[0];
    values.push(LatticePoint::from_i64s(&cur));
    positions.push(1);
    for w in seq.points().windows(2) {
        let target = w[1];
        while cur[0] != target[0] {
            cur[0] += (target[0] - cur[0]).signum();
            values.push(LatticePoint::from_i64s(&cur));
        }
        while cur[1] != target[1] {
            cur[1] += (target[1] - cur[1]).signum();
            values.push(LatticePoint::from_i64s(&cur));
        }
        positions.push(values.len() as i64);
    }
    debug_assert_eq!(values.len() as i64, total);
    let map = LipschitzMap::new(window, 1, BigRational::one(), values)?;
    let marks: DomainSet = positions.iter().map(|&p| vec![p]).collect();
    Ok(PathInstance {
        map,
        positions,
        marks,
    })
}

// ---------------------------------------------------------------------------
// Instance families and gluing.

/// One block of an instance family: a map on `[1, L]` plus a marked subset
/// of its window.
#[derive(Clone, Debug)]
pub struct InstanceBlock {
    pub map: LipschitzMap,
    pub set: DomainSet,
}

/// A finite list of one-dimensional blocks sharing `h` and `M^2`, ready to
/// be glued into a single instance.
#[derive(Clone, Debug)]
pub struct InstanceFamily {
    blocks: Vec<InstanceBlock>,
}

impl InstanceFamily {
    pub fn new(blocks: Vec<InstanceBlock>) -> Result<Self, MapError> {
        if blocks.is_empty() {
            return Err(MapError::EmptyFamily);
        }
        let h = blocks[0].map.h();
        let m_sq = blocks[0].map.m_sq().clone();
        for (i, b) in blocks.iter().enumerate() {
            if b.map.d() != 1 {
                return Err(MapError::GlueNeedsDimOne);
            }
            if b.map.h() != h {
                return Err(MapError::InconsistentFamily(format!(
                    "block {i} has h = {}, expected {h}",
                    b.map.h()
                )));
            }
            if b.map.m_sq() != &m_sq {
                return Err(MapError::InconsistentFamily(format!(
                    "block {i} has a different Lipschitz constant"
                )));
            }
            if b.map.window().lo() != [1] {
                return Err(MapError::InconsistentFamily(format!(
                    "block {i} window must start at 1"
                )));
            }
            for p in &b.set {
                if !b.map.window().contains(p) {
                    return Err(MapError::OutsideWindow(p.clone()));
                }
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[InstanceBlock] {
        &self.blocks
    }
}

/// Domain and image shift applied to one block during gluing.
#[derive(Clone, Debug)]
pub struct GlueOffset {
    pub domain_shift: i64,
    pub image_shift: Vec<BigInt>,
}

/// Result of gluing: a single map on `[1, end]`, the union of the shifted
/// marked sets, the shift applied to each block, and the shifted image of
/// each block window (kept for line audits).
#[derive(Clone, Debug)]
pub struct GluedInstance {
    pub map: LipschitzMap,
    pub set: DomainSet,
    pub offsets: Vec<GlueOffset>,
    pub block_images: Vec<Vec<LatticePoint>>,
}

/// Lines are audited on the shifted block images: for every line through
/// at least two image points, all incident image points must come from a
/// single block, except for at most one extra point from one other block.
/// Points are counted as sets: a block visiting the same image point twice
/// still contributes one incidence.
pub fn glue_audit(block_images: &[Vec<LatticePoint>]) -> bool {
    use crate::lattice::LineKey;
    use std::collections::HashMap;
    let mut tagged: Vec<(usize, Vec<BigInt>)> = Vec::new();
    for (b, img) in block_images.iter().enumerate() {
        let distinct: BTreeSet<Vec<BigInt>> = img.iter().map(|p| p.coords().to_vec()).collect();
        for p in distinct {
            tagged.push((b, p));
        }
    }
    let mut incidence: HashMap<LineKey<BigInt>, BTreeSet<usize>> = HashMap::new();
    for i in 0..tagged.len() {
        for j in (i + 1)..tagged.len() {
            if tagged[i].1 == tagged[j].1 {
                continue;
            }
            if let Some(key) = LineKey::from_pair(&tagged[i].1, &tagged[j].1) {
                let entry = incidence.entry(key).or_default();
                entry.insert(i);
                entry.insert(j);
            }
        }
    }
    for members in incidence.values() {
        let mut per_block: HashMap<usize, usize> = HashMap::new();
        for &i in members {
            *per_block.entry(tagged[i].0).or_insert(0) += 1;
        }
        if per_block.len() <= 1 {
            continue;
        }
        let mut counts: Vec<usize> = per_block.values().copied().collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        if counts[1] > 1 || counts.len() > 2 {
            return false;
        }
    }
    true
}

/// Glues the blocks left to right.  Block images are shifted by vectors
/// chosen (seeded, with exact verification) so that no line through two
/// points of the already-placed image meets the incoming block's image;
/// blocks are separated in the domain by a staircase filler long enough to
/// keep the map 1-step Lipschitz.
pub fn glue_instances(family: &InstanceFamily, seed: u64) -> Result<GluedInstance, MapError> {
    let h = family.blocks()[0].map.h();
    let m_sq = family.blocks()[0].map.m_sq().clone();
    if m_sq < BigRational::one() {
        return Err(MapError::GlueNeedsUnitSteps);
    }
    let codim = 1 + h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut values: Vec<LatticePoint> = Vec::new();
    let mut set: DomainSet = DomainSet::new();
    let mut offsets: Vec<GlueOffset> = Vec::new();
    let mut block_images: Vec<Vec<LatticePoint>> = Vec::new();

    for (bi, block) in family.blocks().iter().enumerate() {
        let image_shift: Vec<BigInt> = if bi == 0 {
            vec![BigInt::zero(); codim]
        } else {
            choose_image_shift(&block_images, &block.map, &mut rng)?
        };
        let shifted_image: Vec<LatticePoint> = block
            .map
            .values()
            .iter()
            .map(|v| v.translate(&image_shift).expect("codim checked"))
            .collect();

        if bi == 0 {
            values.extend(shifted_image.iter().cloned());
            offsets.push(GlueOffset {
                domain_shift: 0,
                image_shift,
            });
        } else {
            let prev_img = values.last().expect("previous block nonempty").clone();
            let next_img = shifted_image[0].clone();
            let dist_l1: BigInt = prev_img
                .coords()
                .iter()
                .zip(next_img.coords())
                .map(|(a, b)| (a - b).abs())
                .sum();
            let gap = i64::try_from(&dist_l1).expect("desk-scale shifts").max(1);
            // staircase filler: walk coordinate by coordinate, one unit per
            // step, padding with stationary steps if the gap exceeds the
            // distance (it never does here, but keep the filler total)
            let mut cursor = prev_img.into_coords();
            let mut filler: Vec<LatticePoint> = Vec::new();
            for axis in 0..codim {
                while cursor[axis] != next_img.coords()[axis] {
                    let step = if cursor[axis] < next_img.coords()[axis] {
                        1
                    } else {
                        -1
                    };
                    cursor[axis] += step;
                    filler.push(LatticePoint::new(cursor.clone()));
                }
            }
            while (filler.len() as i64) < gap {
                let last = filler
                    .last()
                    .cloned()
                    .unwrap_or_else(|| LatticePoint::new(cursor.clone()));
                filler.push(last);
            }
            // the final filler step lands exactly on the block's first value
            debug_assert_eq!(filler.last(), Some(&next_img));
            filler.pop();
            let domain_shift = values.len() as i64 + filler.len() as i64;
            values.extend(filler);
            values.extend(shifted_image.iter().cloned());
            offsets.push(GlueOffset {
                domain_shift,
                image_shift,
            });
        }

        let domain_shift = offsets[bi].domain_shift;
        for p in &block.set {
            set.insert(vec![p[0] + domain_shift]);
        }
        block_images.push(shifted_image);
    }

    let window = Window::new(vec![1], vec![values.len() as i64])?;
    let map = LipschitzMap::new(window, h, m_sq, values)?;
    debug_assert!(glue_audit(&block_images));
    Ok(GluedInstance {
        map,
        set,
        offsets,
        block_images,
    })
}

/// Seeded search for an image shift that keeps the incoming block's image
/// off every line through two already-placed image points.  Verification
/// is exact; the search widens its sampling box until it succeeds.
fn choose_image_shift(
    placed: &[Vec<LatticePoint>],
    incoming: &LipschitzMap,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<BigInt>, MapError> {
    let codim = incoming.codim_dim();
    let placed_pts: Vec<&LatticePoint> = placed.iter().flatten().collect();
    let mut radius: i64 = 64;
    for _attempt in 0..64 {
        let shift: Vec<BigInt> = (0..codim)
            .map(|_| BigInt::from(rng.random_range(-radius..=radius)))
            .collect();
        if shift_avoids_lines(&placed_pts, incoming.values(), &shift) {
            return Ok(shift);
        }
        radius = radius.saturating_mul(2);
    }
    Err(MapError::GlueBudgetExhausted)
}

fn shift_avoids_lines(
    placed: &[&LatticePoint],
    incoming: &[LatticePoint],
    shift: &[BigInt],
) -> bool {
    let shifted: Vec<LatticePoint> = incoming
        .iter()
        .map(|v| v.translate(shift).expect("dims match"))
        .collect();
    for i in 0..placed.len() {
        for j in (i + 1)..placed.len() {
            if placed[i] == placed[j] {
                continue;
            }
            let u = placed[j].delta(placed[i]).expect("dims match");
            for z in &shifted {
                let v = z.delta(placed[i]).expect("dims match");
                if minors_vanish(&u, &v) {
                    return false;
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Seeded generators.

/// Height function with unit steps in every axis direction (the value
/// parity follows the coordinate-sum parity, which keeps the constraint
/// system consistent), embedded as its graph.  Squared constant: 2.
pub fn gen_surface(window: Window, seed: u64) -> Result<LipschitzMap, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<BigInt> = Vec::with_capacity(window.volume());
    for (idx, x) in window.iter().enumerate() {
        let mut candidates: Option<(i64, i64)> = None; // (lo, hi) of allowed values
        for axis in 0..window.dim() {
            let mut y = x.clone();
            y[axis] -= 1;
            if let Some(j) = window.index_of(&y) {
                let v = i64::try_from(&g[j]).expect("surface heights stay small");
                let (lo, hi) = (v - 1, v + 1);
                candidates = Some(match candidates {
                    None => (lo, hi),
                    Some((a, b)) => (a.max(lo), b.min(hi)),
                });
            }
        }
        let value = match candidates {
            None => 0,
            Some((lo, hi)) => {
                // lo and hi differ by 0 or 2; both share the parity opposite
                // to every constraining neighbor, so both are valid choices.
                debug_assert!(lo <= hi);
                if lo == hi || rng.random_bool(0.5) {
                    lo
                } else {
                    hi
                }
            }
        };
        let _ = idx;
        g.push(BigInt::from(value));
    }
    graph_embed(window, &g, BigRational::one())
}

/// The graph of the linear form `x -> slopes . x`; squared constant
/// `1 + |slopes|^2`.
pub fn gen_tilted(window: Window, slopes: &[i64]) -> Result<LipschitzMap, MapError> {
    if slopes.len() != window.dim() {
        return Err(MapError::BadWindow(format!(
            "{} slopes for a {}-dimensional window",
            slopes.len(),
            window.dim()
        )));
    }
    let g: Vec<BigInt> = window
        .iter()
        .map(|x| BigInt::from(x.iter().zip(slopes).map(|(a, s)| a * s).sum::<i64>()))
        .collect();
    let mg_sq = BigRational::from_integer(BigInt::from(slopes.iter().map(|s| s * s).sum::<i64>()));
    graph_embed(window, &g, mg_sq)
}

/// The graph of the zero function; squared constant 1.
pub fn gen_flat(window: Window) -> Result<LipschitzMap, MapError> {
    let g = vec![BigInt::zero(); window.volume()];
    graph_embed(window, &g, BigRational::zero())
}

/// Plane walk with steps from {0, +-e1, +-e2}, one per tick; its average
/// gap is at most 1 by construction.
pub fn gen_walk(len: usize, seed: u64) -> Result<GapSequence, MapError> {
    assert!(len >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<[i64; 2]> = Vec::with_capacity(len);
    let mut cur = [0i64, 0i64];
    pts.push(cur);
    for _ in 1..len {
        match rng.random_range(0..5u8) {
            0 => cur[0] += 1,
            1 => cur[0] -= 1,
            2 => cur[1] += 1,
            3 => cur[1] -= 1,
            _ => {}
        }
        pts.push(cur);
    }
    GapSequence::new(pts, BigRational::one())
}

/// Plane sequence with axis-aligned jumps whose total length is kept under
/// `count * m_avg`, so the average-gap certificate holds by construction.
/// Jumps are drawn from `{1, ..., 2*m_avg - 1}` (mean `m_avg`) while budget
/// remains, so the points stay spread out instead of piling up.
pub fn gen_gap_sequence(
    len: usize,
    m_avg: &BigRational,
    seed: u64,
) -> Result<GapSequence, MapError> {
    assert!(len >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = (len - 1) as i64;
    let mut budget = (m_avg * BigRational::from_integer(BigInt::from(gaps)))
        .floor()
        .to_integer();
    let per_gap_cap = (i64::try_from(
        &(m_avg * BigRational::from_integer(BigInt::from(2)))
            .ceil()
            .to_integer(),
    )
    .unwrap_or(i64::MAX)
        - 1)
    .max(1);
    let mut pts: Vec<[i64; 2]> = Vec::with_capacity(len);
    let mut cur = [0i64, 0i64];
    pts.push(cur);
    for _ in 1..len {
        let cap = i64::try_from(&budget).unwrap_or(i64::MAX).min(per_gap_cap);
        let step = if cap <= 0 {
            0
        } else {
            rng.random_range(1..=cap)
        };
        budget -= BigInt::from(step);
        match rng.random_range(0..4u8) {
            0 => cur[0] += step,
            1 => cur[0] -= step,
            2 => cur[1] += step,
            _ => cur[1] -= step,
        }
        pts.push(cur);
    }
    GapSequence::new(pts, m_avg.clone())
}

/// Uniform Bernoulli subset of a window: each point kept independently
/// with probability `num/den`.
pub fn gen_subset(window: &Window, num: u32, den: u32, seed: u64) -> DomainSet {
    assert!(den > 0 && num <= den);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DomainSet::new();
    for p in window.iter() {
        if rng.random_ratio(num, den) {
            out.insert(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ratio, ratio_int};

    #[test]
    fn window_indexing_round_trip() {
        let w = Window::new(vec![-1, 2], vec![1, 4]).unwrap();
        assert_eq!(w.volume(), 9);
        let pts: Vec<Vec<i64>> = w.iter().collect();
        assert_eq!(pts[0], vec![-1, 2]);
        assert_eq!(pts[1], vec![-1, 3]);
        assert_eq!(pts[8], vec![1, 4]);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(w.index_of(p), Some(i));
            assert_eq!(&w.point_at(i), p);
        }
        assert_eq!(w.index_of(&[2, 2]), None);
        assert!(Window::new(vec![0], vec![-1]).is_err());
    }

    #[test]
    fn graph_embed_matches_example() {
        let w = Window::cube(2, 0, 3).unwrap();
        let g: Vec<BigInt> = w.iter().map(|x| BigInt::from(x[0])).collect();
        let f = graph_embed(w, &g, ratio_int(1)).unwrap();
        assert_eq!(f.m_sq(), &ratio_int(2));
        assert_eq!(f.h(), 1);
        assert_eq!(
            f.eval(&[1, 2]).unwrap(),
            &LatticePoint::from_i64s(&[1, 2, 1])
        );
    }

    #[test]
    fn graph_embed_rejects_steep_tables() {
        let w = Window::new(vec![0], vec![10]).unwrap();
        let g: Vec<BigInt> = (0..=10).map(|n| BigInt::from(n * n)).collect();
        // squares have neighbor gaps up to 19, far above the stated bound
        assert!(matches!(
            graph_embed(w, &g, ratio_int(3)),
            Err(MapError::NotLipschitz { .. })
        ));
    }

    #[test]
    fn validate_reports_first_violation() {
        let w = Window::new(vec![0], vec![10]).unwrap();
        let values: Vec<LatticePoint> = (0..=10)
            .map(|n| LatticePoint::from_i64s(&[n, n * n]))
            .collect();
        let f = LipschitzMap::new(w, 1, ratio_int(4), values).unwrap();
        let report = f.validate_lipschitz(ValidationMode::Neighbors);
        assert!(!report.valid);
        let v = report.violation.unwrap();
        assert_eq!((v.x.as_slice(), v.y.as_slice()), (&[1][..], &[2][..]));
        assert_eq!(v.image_dist_sq, BigInt::from(10));

        let flat = gen_flat(Window::cube(2, 0, 4).unwrap()).unwrap();
        let report = flat.validate_lipschitz(ValidationMode::Neighbors);
        assert!(report.valid);
        assert_eq!(report.certified_m_sq, Some(ratio_int(2)));
        let report = flat.validate_lipschitz(ValidationMode::AllPairs);
        assert!(report.valid);
        assert_eq!(report.certified_m_sq, Some(ratio_int(1)));
    }

    #[test]
    fn sequence_to_path_matches_example() {
        let seq = GapSequence::new(vec![[0, 0], [2, 1]], ratio_int(3)).unwrap();
        let path = sequence_to_path(&seq).unwrap();
        assert_eq!(path.positions, vec![1, 4]);
        assert_eq!(path.map.window().hi(), &[4]);
        let imgs: Vec<Vec<i64>> = (1..=4)
            .map(|n| path.map.eval(&[n]).unwrap().to_i64s().unwrap())
            .collect();
        assert_eq!(imgs, vec![vec![0, 0], vec![1, 0], vec![2, 0], vec![2, 1]]);
        assert!(path.map.validate_lipschitz(ValidationMode::Neighbors).valid);
    }

    #[test]
    fn gap_sequence_certification() {
        // two gaps of length 5 against average bound 2: 10 > 4 rejected
        let bad = GapSequence::new(vec![[0, 0], [5, 0], [10, 0]], ratio_int(2));
        assert!(matches!(bad, Err(MapError::GapBoundViolated)));
        // diagonal gaps: sqrt(2) + sqrt(2) <= 3 holds
        let ok = GapSequence::new(vec![[0, 0], [1, 1], [2, 2]], ratio(3, 2));
        assert!(ok.is_ok());
        let tight = GapSequence::new(vec![[0, 0], [1, 1], [2, 2]], ratio(14, 10));
        assert!(tight.is_err()); // 2*sqrt(2) = 2.828 > 2.8
    }

    #[test]
    fn rescale_matches_example() {
        let w = Window::new(vec![0], vec![10]).unwrap();
        let g = vec![BigInt::zero(); 11];
        let f = graph_embed(w, &g, ratio_int(0)).unwrap();
        let x = RationalPoint::new(vec![ratio(1, 2)]);
        let v = rescale_map(&f, 10, &[0], &x).unwrap();
        assert_eq!(v.coords(), &[ratio(1, 2), ratio_int(0)]);
    }

    #[test]
    fn project_codim_drops_trailing_coordinates() {
        let w = Window::new(vec![0], vec![3]).unwrap();
        let values: Vec<LatticePoint> = (0..=3)
            .map(|n| LatticePoint::from_i64s(&[n, n, 7 * n]))
            .collect();
        let f = LipschitzMap::new(w, 2, ratio_int(51), values).unwrap();
        let (p, record) = project_codim(&f).unwrap();
        assert_eq!(p.h(), 1);
        assert_eq!(record.dropped, vec![2]);
        assert_eq!(p.eval(&[2]).unwrap(), &LatticePoint::from_i64s(&[2, 2]));
    }

    #[test]
    fn surface_generator_is_valid_and_seed_deterministic() {
        let w = Window::cube(2, 0, 12).unwrap();
        let a = gen_surface(w.clone(), 7).unwrap();
        let b = gen_surface(w, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.validate_lipschitz(ValidationMode::Neighbors).valid);
        assert_eq!(a.m_sq(), &ratio_int(2));
        // unit steps everywhere: neighbor image distances are exactly 2
        let w3 = Window::cube(3, 0, 4).unwrap();
        let c = gen_surface(w3, 99).unwrap();
        assert!(c.validate_lipschitz(ValidationMode::Neighbors).valid);
    }

    #[test]
    fn glue_three_blocks_and_audit() {
        let mk = |seed: u64, l: i64| {
            let w = Window::new(vec![1], vec![l]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cur = [0i64, 0i64];
            let mut vals = vec![LatticePoint::from_i64s(&cur)];
            for _ in 1..l {
                match rng.random_range(0..4u8) {
                    0 => cur[0] += 1,
                    1 => cur[0] -= 1,
                    2 => cur[1] += 1,
                    _ => cur[1] -= 1,
                }
                vals.push(LatticePoint::from_i64s(&cur));
            }
            let map = LipschitzMap::new(w, 1, ratio_int(1), vals).unwrap();
            let set: DomainSet = (1..=l).map(|n| vec![n]).collect();
            InstanceBlock { map, set }
        };
        let family = InstanceFamily::new(vec![mk(1, 4), mk(2, 3), mk(3, 5)]).unwrap();
        let glued = glue_instances(&family, 42).unwrap();
        assert!(glue_audit(&glued.block_images));
        assert!(
            glued
                .map
                .validate_lipschitz(ValidationMode::Neighbors)
                .valid
        );
        assert_eq!(glued.offsets.len(), 3);
        assert_eq!(glued.offsets[0].domain_shift, 0);
        // every marked point still carries its block's (shifted) value
        let first_block = &family.blocks()[0];
        for p in &first_block.set {
            let moved = vec![p[0] + glued.offsets[0].domain_shift];
            assert_eq!(
                glued.map.eval(&moved).unwrap(),
                first_block.map.eval(p).unwrap()
            );
        }
        let last_block = &family.blocks()[2];
        let shift = &glued.offsets[2];
        for p in &last_block.set {
            let moved = vec![p[0] + shift.domain_shift];
            let expect = last_block
                .map
                .eval(p)
                .unwrap()
                .translate(&shift.image_shift)
                .unwrap();
            assert_eq!(glued.map.eval(&moved).unwrap(), &expect);
        }
    }

    #[test]
    fn glue_audit_rejects_planted_collinearity() {
        let line_pts = |xs: &[i64]| {
            xs.iter()
                .map(|&x| LatticePoint::from_i64s(&[x, 2 * x]))
                .collect::<Vec<_>>()
        };
        // three blocks contributing 2 + 1 + 1 points of one line
        let bad = vec![line_pts(&[0, 1]), line_pts(&[5]), line_pts(&[9])];
        assert!(!glue_audit(&bad));
        // 2 + 1 across two blocks is within the allowance
        let ok = vec![line_pts(&[0, 1]), line_pts(&[5])];
        assert!(glue_audit(&ok));
    }

    #[test]
    fn walk_generator_is_deterministic() {
        let a = gen_walk(500, 3).unwrap();
        let b = gen_walk(500, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        let c = gen_walk(500, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subset_generator_respects_window() {
        let w = Window::cube(2, 0, 9).unwrap();
        let s = gen_subset(&w, 1, 2, 11);
        assert!(!s.is_empty() && s.len() < 100);
        assert!(s.iter().all(|p| w.contains(p)));
        assert_eq!(s, gen_subset(&w, 1, 2, 11));
    }
}
