//! Discrete cylinder neighborhoods of segments and the three witness
//! conditions a segment must satisfy against a map, a marked set, and a
//! direction.
//!
//! For a segment with squared floor-length `m^2` and thickness parameter
//! `epsilon`, the cylinder is the set of lattice points within Euclidean
//! distance `epsilon * m` of some point of the segment's floor path.  A
//! segment *witnesses* direction `w` at thickness `epsilon` and density
//! `delta` when
//!
//! - (direction) the normalized image displacement lies within `epsilon`
//!   of the normalized `w`,
//! - (deviation) the image of every path point stays strictly within
//!   `epsilon * M * m` of the straight interpolation between the endpoint
//!   images, and
//! - (density) the marked set fills more than a `delta` fraction of the
//!   cylinder.
//!
//! All three are decided exactly: square roots are eliminated by comparing
//! signed squares, and the "for all t" in the deviation condition reduces
//! to finitely many rational evaluations via the piecewise structure of the
//! floor path (strict checks at breakpoints, closure checks at interval
//! ends, using convexity of the quadratic deviation on each piece).

use crate::exact::sq_signed;
use crate::lattice::{
    segment_points, segment_profile, GeneralizedSegment, LatticeError, LatticePoint,
};
use crate::maps::{norm_sq_vec, DomainSet, LipschitzMap};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CylinderError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("delta must be positive")]
    NonPositiveDelta,
    #[error("witness direction must be nonzero")]
    ZeroDirection,
    #[error("cylinder too thin: epsilon^2 * m^2 = {got} but must exceed 196 * d = {need}")]
    TooThin { got: BigRational, need: BigInt },
    #[error("segment or cylinder leaves the map window near {0:?}")]
    OutsideWindow(Vec<i64>),
    #[error("segment endpoints have equal images; direction undefined")]
    DegenerateSlope,
    #[error("cylinder coordinates exceed the machine range")]
    CoordinatesTooLarge,
}

/// Thickness, density threshold, and target direction for a witness check.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WitnessParams {
    epsilon: BigRational,
    delta: BigRational,
    w: Vec<BigRational>,
}

impl WitnessParams {
    pub fn new(
        epsilon: BigRational,
        delta: BigRational,
        w: Vec<BigRational>,
    ) -> Result<Self, CylinderError> {
        if !epsilon.is_positive() {
            return Err(CylinderError::NonPositiveEpsilon);
        }
        if !delta.is_positive() {
            return Err(CylinderError::NonPositiveDelta);
        }
        if w.iter().all(|c| c.is_zero()) {
            return Err(CylinderError::ZeroDirection);
        }
        Ok(Self { epsilon, delta, w })
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn w(&self) -> &[BigRational] {
        &self.w
    }
}

/// Materialized cylinder: the floor path of the segment and every lattice
/// point within squared distance `epsilon^2 * m^2` of it, sorted.
#[derive(Clone, Debug)]
pub struct CylinderZ {
    segment: GeneralizedSegment,
    epsilon: BigRational,
    radius_sq: BigRational,
    path: Vec<Vec<i64>>,
    points: Vec<Vec<i64>>,
}

impl CylinderZ {
    pub fn segment(&self) -> &GeneralizedSegment {
        &self.segment
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn radius_sq(&self) -> &BigRational {
        &self.radius_sq
    }

    pub fn path(&self) -> &[Vec<i64>] {
        &self.path
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        self.points
            .binary_search_by(|p| p.as_slice().cmp(q))
            .is_ok()
    }
}

fn dist_sq_i64(a: &[i64], b: &[i64]) -> i128 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y) as i128;
            d * d
        })
        .sum()
}

/// `n <= r` for integer n and rational r (r nonnegative).
fn int_le_ratio(n: i128, r: &BigRational) -> bool {
    BigInt::from(n) * r.denom() <= *r.numer()
}

/// Builds the cylinder around a segment.  Requires the thickness gate
/// `epsilon^2 * m^2 > 196 * d`, which also guarantees the radius covers
/// every rounding effect the floor path introduces.
pub fn build_cylinder(
    seg: &GeneralizedSegment,
    epsilon: &BigRational,
) -> Result<CylinderZ, CylinderError> {
    if !epsilon.is_positive() {
        return Err(CylinderError::NonPositiveEpsilon);
    }
    let d = seg.dim();
    let m_sq = BigRational::from_integer(seg.m_sq().clone());
    let radius_sq = epsilon * epsilon * &m_sq;
    let need = BigInt::from(196) * BigInt::from(d as i64);
    if radius_sq <= BigRational::from_integer(need.clone()) {
        return Err(CylinderError::TooThin {
            got: radius_sq,
            need,
        });
    }
    let path: Vec<Vec<i64>> = segment_points(seg)
        .iter()
        .map(|p| p.to_i64s().ok_or(CylinderError::CoordinatesTooLarge))
        .collect::<Result<_, _>>()?;

    // ball radius bound: floor(sqrt(radius_sq)) fits comfortably in i64
    let bound_int = radius_sq.floor().to_integer().sqrt();
    let bound = i64::try_from(&bound_int).map_err(|_| CylinderError::CoordinatesTooLarge)?;
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![-bound; d];
    'outer: loop {
        let norm: i128 = cur.iter().map(|&c| (c as i128) * (c as i128)).sum();
        if int_le_ratio(norm, &radius_sq) {
            offsets.push(cur.clone());
        }
        for i in (0..d).rev() {
            if cur[i] < bound {
                cur[i] += 1;
                cur[i + 1..].fill(-bound);
                continue 'outer;
            }
        }
        break;
    }

    // union of balls with cheap suppression of points already covered by
    // the previous path point, then a global sort+dedup
    let mut points: Vec<Vec<i64>> = Vec::with_capacity(offsets.len() + path.len() * 8);
    for (i, center) in path.iter().enumerate() {
        for o in &offsets {
            let q: Vec<i64> = center.iter().zip(o).map(|(c, v)| c + v).collect();
            if i > 0 && int_le_ratio(dist_sq_i64(&q, &path[i - 1]), &radius_sq) {
                continue;
            }
            points.push(q);
        }
    }
    points.sort_unstable();
    points.dedup();

    Ok(CylinderZ {
        segment: seg.clone(),
        epsilon: epsilon.clone(),
        radius_sq,
        path,
        points,
    })
}

/// Image displacement `f(path end) - f(path start)`; the direction whose
/// normalization the witness conditions compare against `w`.
pub fn mean_slope(
    f: &LipschitzMap,
    seg: &GeneralizedSegment,
) -> Result<Vec<BigInt>, CylinderError> {
    let p0 = seg
        .floor_start()
        .to_i64s()
        .ok_or(CylinderError::CoordinatesTooLarge)?;
    let p1 = seg
        .floor_end()
        .to_i64s()
        .ok_or(CylinderError::CoordinatesTooLarge)?;
    let f0 = f
        .eval(&p0)
        .ok_or_else(|| CylinderError::OutsideWindow(p0.clone()))?;
    let f1 = f
        .eval(&p1)
        .ok_or_else(|| CylinderError::OutsideWindow(p1.clone()))?;
    let delta = f1.delta(f0)?;
    if delta.iter().all(|c| c.is_zero()) {
        return Err(CylinderError::DegenerateSlope);
    }
    Ok(delta)
}

/// Direction condition: exact margin of `cos angle > 1 - epsilon^2/2` in
/// signed-square form; positive margin means pass.
#[derive(Clone, Debug)]
pub struct DirectionCheck {
    pub pass: bool,
    pub margin: BigRational,
    pub displacement: Vec<BigInt>,
}

/// Deviation condition: worst squared deviation from the straight
/// interpolation, the parameter attaining it, and the squared bound.
#[derive(Clone, Debug)]
pub struct DeviationCheck {
    pub pass: bool,
    pub worst_t: BigRational,
    pub worst_sq: BigRational,
    pub bound_sq: BigRational,
    pub margin: BigRational,
}

/// Density condition: marked points strictly above a `delta` fraction of
/// the cylinder.
#[derive(Clone, Debug)]
pub struct DensityCheck {
    pub pass: bool,
    pub cylinder_size: u64,
    pub marked_in_cylinder: u64,
    pub ratio: BigRational,
    pub threshold: BigRational,
}

/// The three go/no-go conditions on a candidate segment.  Reports label
/// them z-i (direction alignment), z-ii (bounded deviation), and z-iii
/// (marked density in the cylinder).
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub direction: DirectionCheck,
    pub deviation: DeviationCheck,
    pub density: DensityCheck,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.direction.pass && self.deviation.pass && self.density.pass
    }
}

fn direction_check(
    delta: &[BigInt],
    w: &[BigRational],
    epsilon: &BigRational,
) -> Result<DirectionCheck, CylinderError> {
    if delta.len() != w.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: delta.len(),
            got: w.len(),
        }
        .into());
    }
    // |delta/|delta| - w/|w|| < eps  <=>  (delta.w)/(|delta||w|) > 1 - eps^2/2
    // <=>  c*|c| > tau*|tau| * |delta|^2 |w|^2   with c = delta.w
    let c: BigRational = delta
        .iter()
        .zip(w)
        .map(|(a, b)| BigRational::from_integer(a.clone()) * b)
        .sum();
    let q = BigRational::from_integer(norm_sq_vec(delta))
        * w.iter().map(|x| x * x).sum::<BigRational>();
    let tau = BigRational::one() - epsilon * epsilon / BigRational::from_integer(BigInt::from(2));
    let margin = sq_signed(&c) - sq_signed(&tau) * q;
    Ok(DirectionCheck {
        pass: margin.is_positive(),
        margin,
        displacement: delta.to_vec(),
    })
}

fn deviation_check(
    f: &LipschitzMap,
    seg: &GeneralizedSegment,
    epsilon: &BigRational,
) -> Result<DeviationCheck, CylinderError> {
    let profile = segment_profile(seg);
    let eval_image = |p: &LatticePoint| -> Result<Vec<BigRational>, CylinderError> {
        let small = p.to_i64s().ok_or(CylinderError::CoordinatesTooLarge)?;
        let v = f.eval(&small).ok_or(CylinderError::OutsideWindow(small))?;
        Ok(v.coords()
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect())
    };
    let f0 = eval_image(profile.break_values.first().expect("nonempty profile"))?;
    let f1 = eval_image(profile.break_values.last().expect("nonempty profile"))?;
    let m_sq = BigRational::from_integer(seg.m_sq().clone());
    let bound_sq = epsilon * epsilon * f.m_sq() * &m_sq;

    // squared deviation of image point fv against the interpolation at t
    let dev_sq = |fv: &[BigRational], t: &BigRational| -> BigRational {
        let one_minus = BigRational::one() - t;
        fv.iter()
            .zip(f0.iter().zip(&f1))
            .map(|(v, (a, b))| {
                let lin = a * &one_minus + b * t;
                let d = v - lin;
                &d * &d
            })
            .sum()
    };

    let affine_endpoints_differ = f0 != f1;
    let mut pass = true;
    let mut worst_sq = BigRational::zero();
    let mut worst_t = BigRational::zero();
    let mut note = |t: &BigRational, sq: BigRational, strict: bool| {
        let ok = if strict {
            sq < bound_sq
        } else {
            sq <= bound_sq
        };
        if !ok {
            pass = false;
        }
        if sq > worst_sq {
            worst_sq = sq;
            worst_t = t.clone();
        }
    };

    for (i, t) in profile.breaks.iter().enumerate() {
        let fv = eval_image(&profile.break_values[i])?;
        note(t, dev_sq(&fv, t), true);
    }
    for (i, v) in profile.interval_values.iter().enumerate() {
        let fv = eval_image(v)?;
        let (a, b) = (&profile.breaks[i], &profile.breaks[i + 1]);
        if affine_endpoints_differ {
            // strictly convex on the piece: interior supremum is controlled
            // by the closure endpoints, non-strictly
            note(a, dev_sq(&fv, a), false);
            note(b, dev_sq(&fv, b), false);
        } else {
            note(a, dev_sq(&fv, a), true);
        }
    }
    let margin = &bound_sq - &worst_sq;
    Ok(DeviationCheck {
        pass,
        worst_t,
        worst_sq,
        bound_sq,
        margin,
    })
}

fn density_check(a: &DomainSet, cyl: &CylinderZ, delta: &BigRational) -> DensityCheck {
    let size = cyl.len() as u64;
    let marked = if a.len() <= cyl.len() {
        a.iter().filter(|p| cyl.contains(p)).count() as u64
    } else {
        cyl.points().iter().filter(|p| a.contains(*p)).count() as u64
    };
    let ratio = BigRational::new(BigInt::from(marked), BigInt::from(size.max(1)));
    DensityCheck {
        pass: ratio > *delta,
        cylinder_size: size,
        marked_in_cylinder: marked,
        ratio,
        threshold: delta.clone(),
    }
}

/// Evaluates all three witness conditions for one segment.  The cylinder
/// must lie inside the map window.
pub fn check_conditions(
    f: &LipschitzMap,
    a: &DomainSet,
    seg: &GeneralizedSegment,
    params: &WitnessParams,
) -> Result<ConditionReport, CylinderError> {
    if seg.dim() != f.d() {
        return Err(LatticeError::DimensionMismatch {
            expected: f.d(),
            got: seg.dim(),
        }
        .into());
    }
    let cyl = build_cylinder(seg, params.epsilon())?;
    for p in cyl.points() {
        if !f.window().contains(p) {
            return Err(CylinderError::OutsideWindow(p.clone()));
        }
    }
    let delta = mean_slope(f, seg)?;
    let direction = direction_check(&delta, params.w(), params.epsilon())?;
    let deviation = deviation_check(f, seg, params.epsilon())?;
    let density = density_check(a, &cyl, params.delta());
    Ok(ConditionReport {
        direction,
        deviation,
        density,
    })
}

/// A successful scan result: the segment plus its full report.
#[derive(Clone, Debug)]
pub struct WitnessHit {
    pub segment: GeneralizedSegment,
    pub report: ConditionReport,
}

/// Work limits for a witness scan, in units of candidate segments at the
/// successive filter stages.
#[derive(Clone, Copy, Debug)]
pub struct ScanBudget {
    pub max_candidates: u64,
    pub max_deviation_checks: u64,
    pub max_full_checks: u64,
}

impl Default for ScanBudget {
    fn default() -> Self {
        Self {
            max_candidates: 16384,
            max_deviation_checks: 1024,
            max_full_checks: 256,
        }
    }
}

/// Scans integer-endpoint segments for one that witnesses `params`,
/// coarse grids first, cheap conditions first.  Deterministic for a fixed
/// seed; returns the first hit in scan order or `None` when the budget is
/// exhausted.
pub fn scan_for_witness(
    f: &LipschitzMap,
    a: &DomainSet,
    params: &WitnessParams,
    budget: ScanBudget,
    seed: u64,
) -> Result<Option<WitnessHit>, CylinderError> {
    let d = f.d();
    if params.w().len() != f.codim_dim() {
        return Err(LatticeError::DimensionMismatch {
            expected: f.codim_dim(),
            got: params.w().len(),
        }
        .into());
    }
    let w = f.window();
    let mut candidates_left = budget.max_candidates;
    let mut deviation_left = budget.max_deviation_checks;
    let mut full_left = budget.max_full_checks;
    let eps = params.epsilon();
    let need: BigRational = BigRational::from_integer(BigInt::from(196) * BigInt::from(d as i64));

    let max_extent: i64 = (0..d).map(|i| w.hi()[i] - w.lo()[i]).max().unwrap_or(0);
    let mut steps: Vec<i64> = Vec::new();
    let mut s = (max_extent / 3).max(1);
    while s >= 1 {
        steps.push(s);
        if s == 1 {
            break;
        }
        s /= 2;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for step in steps {
        // anchor grid, jittered per level by the seed
        let mut anchors: Vec<Vec<i64>> = Vec::new();
        let offset: Vec<i64> = (0..d).map(|_| rng.random_range(0..step)).collect();
        let mut cur: Vec<i64> = (0..d)
            .map(|i| w.lo()[i] + offset[i].min((w.hi()[i] - w.lo()[i]).max(0)))
            .collect();
        'grid: loop {
            anchors.push(cur.clone());
            for i in (0..d).rev() {
                if cur[i] + step <= w.hi()[i] {
                    cur[i] += step;
                    for j in (i + 1)..d {
                        cur[j] = w.lo()[j] + offset[j].min((w.hi()[j] - w.lo()[j]).max(0));
                    }
                    continue 'grid;
                }
            }
            break;
        }

        for pi in 0..anchors.len() {
            for qi in (pi + 1)..anchors.len() {
                if candidates_left == 0 {
                    return Ok(None);
                }
                candidates_left -= 1;
                let p = &anchors[pi];
                let q = &anchors[qi];
                let m_sq: i128 = dist_sq_i64(p, q);
                if m_sq == 0 {
                    continue;
                }
                // thickness gate
                let radius_sq = eps * eps * BigRational::from_integer(BigInt::from(m_sq));
                if radius_sq <= need {
                    continue;
                }
                // the whole cylinder must fit in the window
                let reach = match i64::try_from(&radius_sq.floor().to_integer().sqrt()) {
                    Ok(v) => v + 1,
                    Err(_) => continue,
                };
                let fits = (0..d).all(|i| {
                    p[i].min(q[i]) - reach >= w.lo()[i] && p[i].max(q[i]) + reach <= w.hi()[i]
                });
                if !fits {
                    continue;
                }
                // cheap direction filter
                let f0 = f.eval(p).expect("inside window");
                let f1 = f.eval(q).expect("inside window");
                let delta = match f1.delta(f0) {
                    Ok(v) if !v.iter().all(|c| c.is_zero()) => v,
                    _ => continue,
                };
                let dir = direction_check(&delta, params.w(), eps)?;
                if !dir.pass {
                    continue;
                }
                let seg = GeneralizedSegment::from_lattice(
                    &LatticePoint::from_i64s(p),
                    &LatticePoint::from_i64s(q),
                )?;
                if deviation_left == 0 {
                    return Ok(None);
                }
                deviation_left -= 1;
                let dev = deviation_check(f, &seg, eps)?;
                if !dev.pass {
                    continue;
                }
                if full_left == 0 {
                    return Ok(None);
                }
                full_left -= 1;
                let report = check_conditions(f, a, &seg, params)?;
                if report.all_pass() {
                    return Ok(Some(WitnessHit {
                        segment: seg,
                        report,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// All sign-pattern directions `{-1,0,1}^dim \ {0}` in lexicographic order.
pub fn direction_grid(dim: usize) -> Vec<Vec<BigRational>> {
    let mut out = Vec::new();
    let mut cur = vec![-1i64; dim];
    'outer: loop {
        if cur.iter().any(|&c| c != 0) {
            out.push(
                cur.iter()
                    .map(|&c| BigRational::from_integer(BigInt::from(c)))
                    .collect(),
            );
        }
        for i in (0..dim).rev() {
            if cur[i] < 1 {
                cur[i] += 1;
                cur[i + 1..].fill(-1);
                continue 'outer;
            }
        }
        break;
    }
    out
}

/// Runs the witness scan over the sign-pattern direction grid followed by
/// any externally supplied directions; the first direction (in that order)
/// producing a hit wins.  The per-direction budget and seed are shared.
pub fn scan_for_witness_grid(
    f: &LipschitzMap,
    a: &DomainSet,
    epsilon: &BigRational,
    delta: &BigRational,
    extra_ws: &[Vec<BigRational>],
    budget: ScanBudget,
    seed: u64,
) -> Result<Option<(WitnessParams, WitnessHit)>, CylinderError> {
    let mut dirs = direction_grid(f.codim_dim());
    dirs.extend(extra_ws.iter().cloned());
    for wv in dirs {
        let params = match WitnessParams::new(epsilon.clone(), delta.clone(), wv) {
            Ok(p) => p,
            Err(CylinderError::ZeroDirection) => continue,
            Err(e) => return Err(e),
        };
        if let Some(hit) = scan_for_witness(f, a, &params, budget, seed)? {
            return Ok(Some((params, hit)));
        }
    }
    Ok(None)
}
