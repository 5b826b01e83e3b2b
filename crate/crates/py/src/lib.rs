//! Python bindings for the exact collinearity toolkit.
//!
//! The module mirrors the core crate's vocabulary: lattice points are
//! lists of Python ints, rationals are `fractions.Fraction` values (never
//! floats), marked sets are lists of machine-range points, and lines are
//! `(direction, anchor)` pairs of integer lists.  Every operation is exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use collinear_core::collinear::{find_k_collinear, max_collinear_hash, max_collinear_naive};
use collinear_core::covering::{dirichlet_approx, full_pipeline, projection_p_lead};
use collinear_core::cylinder::ScanBudget;
use collinear_core::density::{banach_density_estimate, window_density};
use collinear_core::estimator::{estimate_l_lower, verify_no_k_collinear};
use collinear_core::io::{parse_map, write_map};
use collinear_core::lattice::{
    canonical_line, collinear3, segment_points, CanonicalLine, GeneralizedSegment, LatticePoint,
    RationalPoint,
};
use collinear_core::maps::{
    gen_flat, gen_subset, gen_surface, gen_tilted, sequence_to_path, DomainSet, GapSequence,
    LipschitzMap as CoreMap, ValidationMode, Window,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type PyLine = (Vec<BigInt>, Vec<BigInt>);
/// `(l, density, count, corner)` row of a density profile.
type ProfileRow = (u32, BigRational, u64, Vec<i64>);
/// `(domain_points, line, image_count, domain_count)` collinearity witness.
type WitnessTuple = (Vec<Vec<i64>>, Option<PyLine>, usize, usize);
/// `(w, s, line, domain_points, verified)` covering-pipeline success.
type PipelineTuple = (Vec<BigRational>, Vec<BigInt>, PyLine, Vec<Vec<i64>>, bool);
/// `(l, required, best_count, exhaustive, has_counterexample)` length level.
type LevelRow = (u64, u64, u64, bool, bool);

fn line_tuple(line: &CanonicalLine) -> PyLine {
    (line.direction().to_vec(), line.anchor().to_vec())
}

fn to_lattice(points: &[Vec<BigInt>]) -> Vec<LatticePoint> {
    points
        .iter()
        .map(|p| LatticePoint::new(p.clone()))
        .collect()
}

fn to_set(points: Vec<Vec<i64>>) -> DomainSet {
    points.into_iter().collect()
}

/// True when the three points lie on one lattice line (computed from the
/// 2x2 minors of the two difference vectors; any dimension).
#[pyfunction]
#[pyo3(name = "collinear3")]
fn collinear3_py(p: Vec<BigInt>, q: Vec<BigInt>, r: Vec<BigInt>) -> PyResult<bool> {
    collinear3(
        &LatticePoint::new(p),
        &LatticePoint::new(q),
        &LatticePoint::new(r),
    )
    .map_err(value_err)
}

/// Canonical `(direction, anchor)` record of the line through two distinct
/// points: primitive direction with positive first nonzero entry, plus the
/// translation-identifying cross minors.
#[pyfunction]
#[pyo3(name = "canonical_line")]
fn canonical_line_py(p: Vec<BigInt>, q: Vec<BigInt>) -> PyResult<PyLine> {
    let line = canonical_line(&LatticePoint::new(p), &LatticePoint::new(q)).map_err(value_err)?;
    Ok(line_tuple(&line))
}

/// The floor path of the straight segment between two rational endpoints:
/// one lattice point per parameter breakpoint, duplicates removed.
#[pyfunction]
fn segment_points_py(start: Vec<BigRational>, end: Vec<BigRational>) -> PyResult<Vec<Vec<BigInt>>> {
    let seg = GeneralizedSegment::new(RationalPoint::new(start), RationalPoint::new(end))
        .map_err(value_err)?;
    Ok(segment_points(&seg)
        .into_iter()
        .map(|p| p.into_coords())
        .collect())
}

/// Maximum number of distinct input points on one common line, plus the
/// witnessing line when the count is at least 2.  `engine` is `"naive"`
/// (all pairwise lines) or `"hash"` (direction buckets); both are exact.
#[pyfunction]
#[pyo3(signature = (points, engine = "hash"))]
fn max_collinear(points: Vec<Vec<BigInt>>, engine: &str) -> PyResult<(usize, Option<PyLine>)> {
    let pts = to_lattice(&points);
    let result = match engine {
        "naive" => max_collinear_naive(&pts),
        "hash" => max_collinear_hash(&pts),
        other => return Err(value_err(format!("unknown engine {other:?}"))),
    }
    .map_err(value_err)?;
    Ok((result.count, result.line.as_ref().map(line_tuple)))
}

/// Simultaneous rational approximation `(b, a, err, bound)`: the smallest
/// denominator `b` with `|u_l - a_l/b| * n < 1/b` for every coordinate;
/// `b <= n^d`, and the certificate bound `1/(b*n)` is reported alongside
/// the exact worst error.
#[pyfunction]
#[pyo3(name = "dirichlet_approx")]
fn dirichlet_approx_py(
    u: Vec<BigRational>,
    n: u64,
) -> PyResult<(u64, Vec<BigInt>, BigRational, BigRational)> {
    let cert = dirichlet_approx(&u, n).map_err(value_err)?;
    let err = cert.err_max();
    let bound = cert.bound();
    Ok((cert.b, cert.a, err, bound))
}

/// Projection transverse to `s` (coordinates other than `lead`):
/// `x_j - (x_lead / s_lead) * s_j`.  Constant on lines of direction `s`.
#[pyfunction]
#[pyo3(signature = (s, x, lead = 0))]
fn project_transverse(
    s: Vec<BigRational>,
    x: Vec<BigRational>,
    lead: usize,
) -> PyResult<Vec<BigRational>> {
    projection_p_lead(&s, &x, lead).map_err(value_err)
}

/// Exact density of the closed box `[corner, corner + l]^d`: marked count
/// divided by `l^d`.
#[pyfunction]
#[pyo3(name = "window_density")]
fn window_density_py(points: Vec<Vec<i64>>, corner: Vec<i64>, l: u32) -> PyResult<BigRational> {
    window_density(&to_set(points), &corner, l).map_err(value_err)
}

/// Sup of window densities per side length: a list of
/// `(l, density, count, corner)` rows, one per requested side.
#[pyfunction]
fn banach_profile(points: Vec<Vec<i64>>, sides: Vec<u32>) -> PyResult<Vec<ProfileRow>> {
    let reports = banach_density_estimate(&to_set(points), &sides).map_err(value_err)?;
    Ok(reports
        .into_iter()
        .map(|r| (r.l, r.value, r.count, r.corner))
        .collect())
}

/// A tabulated map `window -> Z^(d+h)` with an exact squared Lipschitz
/// constant, the central object of every search.
#[pyclass(name = "LipschitzMap")]
struct PyMap {
    inner: CoreMap,
}

#[pymethods]
impl PyMap {
    /// Parses the plain-text map table format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_map(text).map_err(value_err)?,
        })
    }

    /// The map table as text (header, then one row per window point).
    fn text(&self) -> String {
        write_map(&self.inner)
    }

    fn d(&self) -> usize {
        self.inner.d()
    }

    fn h(&self) -> usize {
        self.inner.h()
    }

    fn m_sq(&self) -> BigRational {
        self.inner.m_sq().clone()
    }

    fn window(&self) -> (Vec<i64>, Vec<i64>) {
        let w = self.inner.window();
        (w.lo().to_vec(), w.hi().to_vec())
    }

    /// Image of one window point.
    fn eval(&self, x: Vec<i64>) -> PyResult<Vec<BigInt>> {
        self.inner
            .eval_or_err(&x)
            .map(|p| p.coords().to_vec())
            .map_err(value_err)
    }

    /// Checks the stored Lipschitz bound (unit steps by default, every
    /// pair when `all_pairs` is set).
    #[pyo3(signature = (all_pairs = false))]
    fn validate(&self, all_pairs: bool) -> bool {
        let mode = if all_pairs {
            ValidationMode::AllPairs
        } else {
            ValidationMode::Neighbors
        };
        self.inner.validate_lipschitz(mode).valid
    }

    fn __repr__(&self) -> String {
        let w = self.inner.window();
        format!(
            "LipschitzMap(d={}, h={}, m_sq={}, window={:?}..{:?})",
            self.inner.d(),
            self.inner.h(),
            self.inner.m_sq(),
            w.lo(),
            w.hi()
        )
    }
}

/// Random unit-step height surface over the cube `[lo, hi]^d`, embedded as
/// its graph (squared constant 2).
#[pyfunction]
#[pyo3(name = "gen_surface")]
fn gen_surface_py(d: usize, lo: i64, hi: i64, seed: u64) -> PyResult<PyMap> {
    let window = Window::cube(d, lo, hi).map_err(value_err)?;
    Ok(PyMap {
        inner: gen_surface(window, seed).map_err(value_err)?,
    })
}

/// Graph of the integer linear form with the given slopes.
#[pyfunction]
#[pyo3(name = "gen_tilted")]
fn gen_tilted_py(lo: i64, hi: i64, slopes: Vec<i64>) -> PyResult<PyMap> {
    let window = Window::cube(slopes.len(), lo, hi).map_err(value_err)?;
    Ok(PyMap {
        inner: gen_tilted(window, &slopes).map_err(value_err)?,
    })
}

/// Graph of the zero function over the cube `[lo, hi]^d`.
#[pyfunction]
#[pyo3(name = "gen_flat")]
fn gen_flat_py(d: usize, lo: i64, hi: i64) -> PyResult<PyMap> {
    let window = Window::cube(d, lo, hi).map_err(value_err)?;
    Ok(PyMap {
        inner: gen_flat(window).map_err(value_err)?,
    })
}

/// Seeded marked subset of the cube `[lo, hi]^d` with marked fraction
/// `num/den`.
#[pyfunction]
#[pyo3(name = "gen_subset")]
fn gen_subset_py(
    d: usize,
    lo: i64,
    hi: i64,
    num: u32,
    den: u32,
    seed: u64,
) -> PyResult<Vec<Vec<i64>>> {
    let window = Window::cube(d, lo, hi).map_err(value_err)?;
    if den == 0 || num > den {
        return Err(value_err("marked fraction must lie in [0, 1]"));
    }
    Ok(gen_subset(&window, num, den, seed).into_iter().collect())
}

/// Turns a plane sequence with average-jump bound `m_avg` into a path
/// instance: `(map, marks)` with domain `[1, total]` and one marked
/// position per distinct sequence point.
#[pyfunction]
#[pyo3(name = "sequence_to_path")]
fn sequence_to_path_py(
    points: Vec<(i64, i64)>,
    m_avg: BigRational,
) -> PyResult<(PyMap, Vec<Vec<i64>>)> {
    let pts: Vec<[i64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
    let seq = GapSequence::new(pts, m_avg).map_err(value_err)?;
    let path = sequence_to_path(&seq).map_err(value_err)?;
    Ok((PyMap { inner: path.map }, path.marks.into_iter().collect()))
}

/// Witness of `k` marked points with collinear images:
/// `(domain_points, line, image_count, domain_count)`, or `None` when no
/// line of the image carries `k` distinct marked images.  The selection is
/// the lexicographically least one.
#[pyfunction]
#[pyo3(name = "find_k_collinear")]
fn find_k_collinear_py(
    map: &PyMap,
    marks: Vec<Vec<i64>>,
    k: usize,
) -> PyResult<Option<WitnessTuple>> {
    let witness = find_k_collinear(&map.inner, &to_set(marks), k).map_err(value_err)?;
    Ok(witness.map(|w| {
        (
            w.domain_points,
            w.line.as_ref().map(line_tuple),
            w.image_count,
            w.domain_count,
        )
    }))
}

/// Re-verifies that no image line carries `k` distinct marked images:
/// `(ok, witness_or_none)` where a witness is reported as in
/// `find_k_collinear`.
#[pyfunction]
#[pyo3(name = "verify_no_k_collinear")]
fn verify_no_k_collinear_py(
    map: &PyMap,
    marks: Vec<Vec<i64>>,
    k: usize,
) -> PyResult<(bool, Option<WitnessTuple>)> {
    let report = verify_no_k_collinear(&map.inner, &to_set(marks), k).map_err(value_err)?;
    Ok((
        report.ok,
        report.witness.map(|w| {
            (
                w.domain_points,
                w.line.as_ref().map(line_tuple),
                w.image_count,
                w.domain_count,
            )
        }),
    ))
}

/// Runs the full covering pipeline (approximate direction ratios, scan for
/// a witness segment, cover the cylinder by parallel lines, extract the
/// largest bucket) and returns
/// `(w, s, line, domain_points, verified)` for the first direction that
/// yields `k` marked points on one image line, or `None`.
#[pyfunction]
#[pyo3(name = "cover_pipeline", signature = (map, marks, k, n, delta, seed = 0))]
fn cover_pipeline_py(
    map: &PyMap,
    marks: Vec<Vec<i64>>,
    k: usize,
    n: u64,
    delta: BigRational,
    seed: u64,
) -> PyResult<Option<PipelineTuple>> {
    let run = full_pipeline(
        &map.inner,
        &to_set(marks),
        k,
        n,
        &delta,
        &[],
        ScanBudget::default(),
        seed,
    )
    .map_err(value_err)?;
    Ok(run.success.map(|s| {
        (
            s.w,
            s.s,
            line_tuple(&s.extraction.line),
            s.extraction.domain_points,
            s.verified,
        )
    }))
}

/// Lower estimate of the forcing length: the first window length at which
/// the counterexample search (exhaustive when tiny, else seeded
/// hill-climbing) comes up empty.  Returns `(l_lower_or_none, levels)`
/// with one `(l, required, best_count, exhaustive, has_counterexample)`
/// row per length tried.
#[pyfunction]
#[pyo3(name = "estimate_l_lower", signature = (k, m_sq, d, delta, l_max, seed = 0))]
fn estimate_l_lower_py(
    k: usize,
    m_sq: u64,
    d: usize,
    delta: BigRational,
    l_max: u64,
    seed: u64,
) -> PyResult<(Option<u64>, Vec<LevelRow>)> {
    let report = estimate_l_lower(k, m_sq, d, &delta, l_max, seed).map_err(value_err)?;
    let levels = report
        .levels
        .iter()
        .map(|lv| {
            (
                lv.l,
                lv.required,
                lv.best_count,
                lv.exhaustive,
                lv.counterexample.is_some(),
            )
        })
        .collect();
    let l_lower = (!report.capped).then_some(report.l_lower);
    Ok((l_lower, levels))
}

#[pymodule]
fn collinear_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMap>()?;
    m.add_function(wrap_pyfunction!(collinear3_py, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_line_py, m)?)?;
    m.add_function(wrap_pyfunction!(segment_points_py, m)?)?;
    m.add_function(wrap_pyfunction!(max_collinear, m)?)?;
    m.add_function(wrap_pyfunction!(dirichlet_approx_py, m)?)?;
    m.add_function(wrap_pyfunction!(project_transverse, m)?)?;
    m.add_function(wrap_pyfunction!(window_density_py, m)?)?;
    m.add_function(wrap_pyfunction!(banach_profile, m)?)?;
    m.add_function(wrap_pyfunction!(gen_surface_py, m)?)?;
    m.add_function(wrap_pyfunction!(gen_tilted_py, m)?)?;
    m.add_function(wrap_pyfunction!(gen_flat_py, m)?)?;
    m.add_function(wrap_pyfunction!(gen_subset_py, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_to_path_py, m)?)?;
    m.add_function(wrap_pyfunction!(find_k_collinear_py, m)?)?;
    m.add_function(wrap_pyfunction!(verify_no_k_collinear_py, m)?)?;
    m.add_function(wrap_pyfunction!(cover_pipeline_py, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_l_lower_py, m)?)?;
    Ok(())
}
