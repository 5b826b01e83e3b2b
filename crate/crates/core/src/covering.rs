//! Covering the image of a cylinder by parallel lattice lines.
//!
//! The chain: simultaneous rational approximation of the witness direction
//! (smallest denominator `b <= N^d` with per-coordinate error within
//! `1/(bN)`), the integer direction `s` built from the certificate, the
//! rational projection transverse to `s` whose fibers are the lines of the
//! family, and the pigeonhole extraction of a heavily loaded line.
//!
//! The approximation search demands strict inequality (so exact ties are
//! pushed to a finer denominator), while certificate verification accepts
//! the closed bound; both are exact rational comparisons.

use crate::cylinder::{
    build_cylinder, scan_for_witness, ConditionReport, CylinderError, CylinderZ, ScanBudget,
    WitnessParams,
};
use crate::exact::round_nearest;
use crate::lattice::{
    canonical_line, collinear3, CanonicalLine, GeneralizedSegment, LatticeError, LatticePoint,
};
use crate::maps::{DomainSet, LipschitzMap};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoveringError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Cylinder(#[from] CylinderError),
    #[error("approximation needs at least one target component")]
    EmptyTarget,
    #[error("resolution must be at least 1")]
    BadResolution,
    #[error("denominator search space N^d = {0} too large")]
    ResolutionTooLarge(u128),
    #[error("no denominator up to N^d met the strict bound (degenerate target)")]
    ApproximationExhausted,
    #[error("projection direction must be transverse (nonzero lead coordinate)")]
    NonTransverse,
    #[error("point {0:?} outside the map window")]
    OutsideWindow(Vec<i64>),
    #[error("k must be at least 1")]
    InvalidK,
}

/// Simultaneous approximation `u_l ~ a_l / b` with denominator `b <= N^d`
/// and per-coordinate error within `1/(bN)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DirichletCertificate {
    pub u: Vec<BigRational>,
    pub n: u64,
    pub b: u64,
    pub a: Vec<BigInt>,
}

impl DirichletCertificate {
    /// Largest per-coordinate error `|u_l - a_l/b|`.
    pub fn err_max(&self) -> BigRational {
        let b = BigRational::from_integer(BigInt::from(self.b));
        self.u
            .iter()
            .zip(&self.a)
            .map(|(u, a)| (u - BigRational::from_integer(a.clone()) / &b).abs())
            .max()
            .expect("nonempty target")
    }

    /// The closed bound `1/(bN)`.
    pub fn bound(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.b) * BigInt::from(self.n))
    }

    /// Exact validity per the closed bound, including the denominator cap.
    pub fn verify(&self) -> bool {
        if self.b == 0 || self.n == 0 || self.u.len() != self.a.len() || self.u.is_empty() {
            return false;
        }
        let cap = (self.n as u128).checked_pow(self.u.len() as u32);
        match cap {
            Some(c) if (self.b as u128) <= c => {}
            _ => return false,
        }
        self.err_max() <= self.bound()
    }
}

const MAX_DENOMINATOR_SCAN: u128 = 1 << 40;

/// Finds the smallest denominator `b` such that every component of `u` is
/// strictly within `1/(bN)` of `a_l/b` for the nearest integers `a_l`.
pub fn dirichlet_approx(u: &[BigRational], n: u64) -> Result<DirichletCertificate, CoveringError> {
    if u.is_empty() {
        return Err(CoveringError::EmptyTarget);
    }
    if n == 0 {
        return Err(CoveringError::BadResolution);
    }
    let cap = (n as u128)
        .checked_pow(u.len() as u32)
        .filter(|&c| c <= MAX_DENOMINATOR_SCAN)
        .ok_or_else(|| {
            CoveringError::ResolutionTooLarge((n as u128).saturating_pow(u.len() as u32))
        })?;
    let n_big = BigInt::from(n);
    for b in 1..=cap {
        let b_u64 = b as u64;
        let b_big = BigInt::from(b_u64);
        let mut a: Vec<BigInt> = Vec::with_capacity(u.len());
        let mut ok = true;
        for ul in u {
            let (p, q) = (ul.numer(), ul.denom());
            let al = round_nearest(&(p * &b_big), q);
            // |u - a/b| < 1/(bN)  <=>  |p b - a q| N < q
            let lhs = (p * &b_big - &al * q).abs() * &n_big;
            if lhs >= *q {
                ok = false;
                break;
            }
            a.push(al);
        }
        if ok {
            return Ok(DirichletCertificate {
                u: u.to_vec(),
                n,
                b: b_u64,
                a,
            });
        }
    }
    Err(CoveringError::ApproximationExhausted)
}

/// Projection along `s` onto the coordinates other than `lead`:
/// `x_j - (x_lead / s_lead) * s_j`.  Constant on every line of direction
/// `s`, and it maps points whose lead coordinates agree modulo `s_lead`
/// into a common coset of Z^(dim-1).
pub fn projection_p(
    s: &[BigRational],
    x: &[BigRational],
) -> Result<Vec<BigRational>, CoveringError> {
    projection_p_lead(s, x, 0)
}

pub fn projection_p_lead(
    s: &[BigRational],
    x: &[BigRational],
    lead: usize,
) -> Result<Vec<BigRational>, CoveringError> {
    if s.len() != x.len() {
        return Err(LatticeError::DimensionMismatch {
            expected: s.len(),
            got: x.len(),
        }
        .into());
    }
    if lead >= s.len() || s[lead].is_zero() {
        return Err(CoveringError::NonTransverse);
    }
    let scale = &x[lead] / &s[lead];
    Ok((0..s.len())
        .filter(|&j| j != lead)
        .map(|j| &x[j] - &scale * &s[j])
        .collect())
}

fn to_ratios(v: &[BigInt]) -> Vec<BigRational> {
    v.iter()
        .map(|c| BigRational::from_integer(c.clone()))
        .collect()
}

/// The family of parallel lines with direction `s` through the image of a
/// cylinder, each paired with its projection trace.  Distinct lines have
/// distinct traces, so the family size is also the trace count.
#[derive(Clone, Debug)]
pub struct LineFamily {
    s: Vec<BigInt>,
    lead: usize,
    entries: BTreeMap<CanonicalLine, Vec<BigRational>>,
}

impl LineFamily {
    pub fn s(&self) -> &[BigInt] {
        &self.s
    }

    pub fn lead(&self) -> usize {
        self.lead
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lines(&self) -> impl Iterator<Item = &CanonicalLine> {
        self.entries.keys()
    }

    pub fn traces(&self) -> impl Iterator<Item = &Vec<BigRational>> {
        self.entries.values()
    }

    pub fn contains_line(&self, line: &CanonicalLine) -> bool {
        self.entries.contains_key(line)
    }

    /// Every trace lies in one of the `|s_lead|` translated copies of
    /// Z^(dim-1) obtained by projecting the lead-axis points `l * e_lead`,
    /// `0 <= l < |s_lead|`.
    pub fn traces_in_lattice_union(&self) -> bool {
        let b = self.s[self.lead].abs();
        if b.is_zero() {
            return false;
        }
        let s_rat = to_ratios(&self.s);
        'traces: for trace in self.entries.values() {
            let mut l = BigInt::zero();
            while l < b {
                // offset of the l-th copy: projection of l * e_lead
                let mut point = vec![BigRational::zero(); self.s.len()];
                point[self.lead] = BigRational::from_integer(l.clone());
                let offset =
                    projection_p_lead(&s_rat, &point, self.lead).expect("lead is transverse");
                if trace.iter().zip(&offset).all(|(t, o)| (t - o).is_integer()) {
                    continue 'traces;
                }
                l += 1;
            }
            return false;
        }
        true
    }
}

fn line_through(x: &LatticePoint, s: &[BigInt]) -> Result<CanonicalLine, CoveringError> {
    let shifted = x.translate(s)?;
    Ok(canonical_line(x, &shifted)?)
}

/// Builds the family over `f(cylinder)` with integer direction `s`; `lead`
/// is the coordinate whose component of `s` is nonzero (the denominator
/// coordinate in the pipeline).
pub fn build_line_family(
    f: &LipschitzMap,
    cyl: &CylinderZ,
    s: &[BigInt],
    lead: usize,
) -> Result<LineFamily, CoveringError> {
    if s.len() != f.codim_dim() {
        return Err(LatticeError::DimensionMismatch {
            expected: f.codim_dim(),
            got: s.len(),
        }
        .into());
    }
    if lead >= s.len() || s[lead].is_zero() {
        return Err(CoveringError::NonTransverse);
    }
    let s_rat = to_ratios(s);
    let mut entries: BTreeMap<CanonicalLine, Vec<BigRational>> = BTreeMap::new();
    for z in cyl.points() {
        let x = f
            .eval(z)
            .ok_or_else(|| CoveringError::OutsideWindow(z.clone()))?;
        let line = line_through(x, s)?;
        let trace = projection_p_lead(&s_rat, &to_ratios(x.coords()), lead)?;
        if let Some(existing) = entries.get(&line) {
            debug_assert_eq!(existing, &trace, "one line, two traces");
        } else {
            entries.insert(line, trace);
        }
    }
    let family = LineFamily {
        s: s.to_vec(),
        lead,
        entries,
    };
    debug_assert_eq!(
        family.entries.values().collect::<BTreeSet<_>>().len(),
        family.len(),
        "traces must be distinct per line"
    );
    Ok(family)
}

/// Outcome of bucketing the marked cylinder points by their image line.
#[derive(Clone, Debug)]
pub struct ExtractionReport {
    /// Bucket sizes, descending.
    pub bucket_sizes: Vec<usize>,
    pub marked_in_cylinder: u64,
    pub selection: Option<LineExtraction>,
}

/// A line whose bucket reached `k`, with the first `k` marked domain
/// points mapping onto it.
#[derive(Clone, Debug)]
pub struct LineExtraction {
    pub line: CanonicalLine,
    pub domain_points: Vec<Vec<i64>>,
    pub bucket_size: usize,
}

/// Buckets `marked ∩ cylinder` by image line and extracts the first `k`
/// domain points of the largest bucket (ties: least line record).
pub fn extract_line(
    f: &LipschitzMap,
    a: &DomainSet,
    cyl: &CylinderZ,
    family: &LineFamily,
    k: usize,
) -> Result<ExtractionReport, CoveringError> {
    if k == 0 {
        return Err(CoveringError::InvalidK);
    }
    let mut buckets: BTreeMap<CanonicalLine, Vec<Vec<i64>>> = BTreeMap::new();
    let mut marked: u64 = 0;
    let mut handle = |z: &Vec<i64>| -> Result<(), CoveringError> {
        let x = f
            .eval(z)
            .ok_or_else(|| CoveringError::OutsideWindow(z.clone()))?;
        let line = line_through(x, family.s())?;
        debug_assert!(family.contains_line(&line));
        buckets.entry(line).or_default().push(z.clone());
        Ok(())
    };
    if a.len() <= cyl.len() {
        for z in a {
            if cyl.contains(z) {
                marked += 1;
                handle(z)?;
            }
        }
    } else {
        for z in cyl.points() {
            if a.contains(z) {
                marked += 1;
                handle(z)?;
            }
        }
    }
    let mut best: Option<(&CanonicalLine, usize)> = None;
    for (line, members) in &buckets {
        if best.is_none_or(|(_, n)| members.len() > n) {
            best = Some((line, members.len()));
        }
    }
    let mut bucket_sizes: Vec<usize> = buckets.values().map(Vec::len).collect();
    bucket_sizes.sort_unstable_by(|x, y| y.cmp(x));
    let selection = best.and_then(|(line, size)| {
        (size >= k).then(|| LineExtraction {
            line: line.clone(),
            domain_points: buckets[line][..k].to_vec(),
            bucket_size: size,
        })
    });
    Ok(ExtractionReport {
        bucket_sizes,
        marked_in_cylinder: marked,
        selection,
    })
}

// ---------------------------------------------------------------------------
// End-to-end pipeline.

/// Where an unsuccessful attempt stopped.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PipelineStage {
    Approximation,
    WitnessScan,
    Extraction,
}

impl std::fmt::Display for PipelineStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineStage::Approximation => write!(f, "approximation"),
            PipelineStage::WitnessScan => write!(f, "witness-scan"),
            PipelineStage::Extraction => write!(f, "extraction"),
        }
    }
}

/// Diagnostics for one direction that did not produce a verified line.
#[derive(Clone, Debug)]
pub struct AttemptRecord {
    pub w: Vec<BigRational>,
    pub stage: PipelineStage,
    pub certificate: Option<DirichletCertificate>,
    pub epsilon: Option<BigRational>,
    pub segment: Option<GeneralizedSegment>,
    pub family_size: Option<usize>,
    pub marked_in_cylinder: Option<u64>,
    pub bucket_max: Option<usize>,
    pub detail: String,
}

/// A fully verified pipeline success.
#[derive(Clone, Debug)]
pub struct PipelineSuccess {
    pub w: Vec<BigRational>,
    pub lead: usize,
    pub certificate: DirichletCertificate,
    pub epsilon: BigRational,
    pub segment: GeneralizedSegment,
    pub conditions: ConditionReport,
    pub s: Vec<BigInt>,
    pub family_size: usize,
    pub marked_in_cylinder: u64,
    pub bucket_sizes: Vec<usize>,
    pub extraction: LineExtraction,
    /// Exact re-check: every selected image point lies on the line and all
    /// triples pass the collinearity test.
    pub verified: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub success: Option<PipelineSuccess>,
    pub attempts: Vec<AttemptRecord>,
}

fn lead_index(w: &[BigRational]) -> usize {
    let mut best = 0;
    for (i, c) in w.iter().enumerate() {
        if c.abs() > w[best].abs() {
            best = i;
        }
    }
    best
}

/// Runs approximation, witness scan, covering, and extraction for each
/// direction in the sign grid (then `extra_ws`), returning the first
/// direction that yields `k` marked points on one image line, re-verified
/// exactly.  Failures are recorded per direction with the stage reached.
#[allow(clippy::too_many_arguments)]
pub fn full_pipeline(
    f: &LipschitzMap,
    a: &DomainSet,
    k: usize,
    n: u64,
    delta: &BigRational,
    extra_ws: &[Vec<BigRational>],
    budget: ScanBudget,
    seed: u64,
) -> Result<PipelineRun, CoveringError> {
    if k == 0 {
        return Err(CoveringError::InvalidK);
    }
    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut directions = crate::cylinder::direction_grid(f.codim_dim());
    directions.extend(extra_ws.iter().cloned());

    for w in directions {
        if w.iter().all(|c| c.is_zero()) {
            continue;
        }
        let lead = lead_index(&w);
        let u: Vec<BigRational> = (0..w.len())
            .filter(|&j| j != lead)
            .map(|j| &w[j] / &w[lead])
            .collect();
        let certificate = match dirichlet_approx(&u, n) {
            Ok(c) => c,
            Err(e) => {
                attempts.push(AttemptRecord {
                    w,
                    stage: PipelineStage::Approximation,
                    certificate: None,
                    epsilon: None,
                    segment: None,
                    family_size: None,
                    marked_in_cylinder: None,
                    bucket_max: None,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let epsilon =
            BigRational::new(BigInt::one(), BigInt::from(certificate.b) * BigInt::from(n));
        let params = WitnessParams::new(epsilon.clone(), delta.clone(), w.clone())
            .expect("positive epsilon/delta, nonzero direction");
        let hit = scan_for_witness(f, a, &params, budget, seed)?;
        let Some(hit) = hit else {
            attempts.push(AttemptRecord {
                w,
                stage: PipelineStage::WitnessScan,
                certificate: Some(certificate),
                epsilon: Some(epsilon),
                segment: None,
                family_size: None,
                marked_in_cylinder: None,
                bucket_max: None,
                detail: if a.is_empty() {
                    // marked > delta * |cylinder| can never hold
                    "z-iii unsatisfiable".into()
                } else {
                    "no segment passed all three conditions within budget".into()
                },
            });
            continue;
        };

        // integer direction from the certificate: b at the lead coordinate,
        // the numerators elsewhere
        let mut s = vec![BigInt::zero(); w.len()];
        s[lead] = BigInt::from(certificate.b);
        for (ai, j) in certificate
            .a
            .iter()
            .zip((0..w.len()).filter(|&j| j != lead))
        {
            s[j] = ai.clone();
        }
        let cyl = build_cylinder(&hit.segment, &epsilon)?;
        let family = build_line_family(f, &cyl, &s, lead)?;
        let report = extract_line(f, a, &cyl, &family, k)?;
        let bucket_max = report.bucket_sizes.first().copied();
        match report.selection {
            Some(extraction) => {
                let images: Vec<&LatticePoint> = extraction
                    .domain_points
                    .iter()
                    .map(|z| f.eval(z).expect("bucketed inside window"))
                    .collect();
                let mut verified = images
                    .iter()
                    .all(|x| extraction.line.contains(x).unwrap_or(false));
                for t in images.windows(3) {
                    verified = verified && collinear3(t[0], t[1], t[2])?;
                }
                return Ok(PipelineRun {
                    success: Some(PipelineSuccess {
                        w,
                        lead,
                        certificate,
                        epsilon,
                        segment: hit.segment,
                        conditions: hit.report,
                        s,
                        family_size: family.len(),
                        marked_in_cylinder: report.marked_in_cylinder,
                        bucket_sizes: report.bucket_sizes,
                        extraction,
                        verified,
                    }),
                    attempts,
                });
            }
            None => {
                attempts.push(AttemptRecord {
                    w,
                    stage: PipelineStage::Extraction,
                    certificate: Some(certificate),
                    epsilon: Some(epsilon),
                    segment: Some(hit.segment),
                    family_size: Some(family.len()),
                    marked_in_cylinder: Some(report.marked_in_cylinder),
                    bucket_max,
                    detail: format!(
                        "largest bucket {} of {} lines, needed {k}",
                        bucket_max.unwrap_or(0),
                        family.len()
                    ),
                });
            }
        }
    }
    Ok(PipelineRun {
        success: None,
        attempts,
    })
}
