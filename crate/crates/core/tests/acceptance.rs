//! Acceptance gate: ten end-to-end criteria, each printed as a single
//! pass/fail line (run with `--nocapture` to see them on success).
//!
//! Every numeric claim below is checked in exact arithmetic; sizes and
//! seeds are fixed so the suite is deterministic.

use collinear_core::collinear::{max_collinear_hash, max_collinear_naive};
use collinear_core::covering::{
    build_line_family, dirichlet_approx, extract_line, full_pipeline, projection_p, PipelineStage,
};
use collinear_core::cylinder::{build_cylinder, ScanBudget};
use collinear_core::density::banach_density_estimate;
use collinear_core::estimator::{sequence_map, verify_no_k_collinear};
use collinear_core::maps::{
    gen_gap_sequence, gen_surface, gen_tilted, gen_walk, glue_audit, glue_instances,
    sequence_to_path, DomainSet, InstanceBlock, InstanceFamily, ValidationMode,
};
use collinear_core::{collinear3, GeneralizedSegment, LatticePoint, LipschitzMap, Window};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn report(name: &str, outcome: Result<String, String>) {
    match outcome {
        Ok(detail) => println!("[PASS] {name}: {detail}"),
        Err(detail) => {
            println!("[FAIL] {name}: {detail}");
            panic!("{name}: {detail}");
        }
    }
}

// -------------------------------------------------------------------------
// 1. The hashed and naive maximal-collinear engines agree exactly.

#[test]
fn acceptance_01_oracle_equivalence() {
    report(
        "01 oracle-equivalence",
        (|| {
            let start = Instant::now();
            let mut sets = 0usize;
            for d in [2usize, 3, 4] {
                for trial in 0..100u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(1_000 * d as u64 + trial);
                    let n = rng.random_range(2..=200);
                    let points: Vec<LatticePoint> = (0..n)
                        .map(|_| {
                            let coords: Vec<i64> =
                                (0..d).map(|_| rng.random_range(-30..=30)).collect();
                            LatticePoint::from_i64s(&coords)
                        })
                        .collect();
                    let naive = max_collinear_naive(&points).map_err(|e| e.to_string())?;
                    let hash = max_collinear_hash(&points).map_err(|e| e.to_string())?;
                    if naive != hash {
                        return Err(format!(
                            "engines disagree on dim {d} trial {trial}: naive {:?} vs hash {:?}",
                            naive, hash
                        ));
                    }
                    sets += 1;
                }
            }
            let elapsed = start.elapsed();
            if elapsed.as_secs() >= 30 {
                return Err(format!("runtime budget exceeded: {elapsed:?} >= 30s"));
            }
            Ok(format!(
                "{sets} point sets across dims 2/3/4, counts and witness lines equal ({elapsed:?})"
            ))
        })(),
    );
}

// -------------------------------------------------------------------------
// 2. Every simultaneous-approximation certificate is exact.

#[test]
fn acceptance_02_dirichlet_certificates() {
    report(
        "02 dirichlet-certificates",
        (|| {
            let start = Instant::now();
            let mut checked = 0usize;
            for d in 1usize..=3 {
                for trial in 0..1000u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(20_000 * d as u64 + trial);
                    let n: u64 = rng.random_range(2..=10);
                    let u: Vec<BigRational> = (0..d)
                        .map(|_| {
                            let q = rng.random_range(1..=50i64);
                            let p = rng.random_range(-3 * q..=3 * q);
                            ratio(p, q)
                        })
                        .collect();
                    let cert = dirichlet_approx(&u, n).map_err(|e| e.to_string())?;
                    let cap = (n as u128).pow(d as u32);
                    if (cert.b as u128) > cap {
                        return Err(format!("b = {} exceeds N^d = {cap}", cert.b));
                    }
                    if cert.err_max() > cert.bound() {
                        return Err(format!(
                            "error {} above bound {} for u = {u:?}, N = {n}",
                            cert.err_max(),
                            cert.bound()
                        ));
                    }
                    if !cert.verify() {
                        return Err(format!("certificate failed self-check for u = {u:?}"));
                    }
                    checked += 1;
                }
            }
            let elapsed = start.elapsed();
            if elapsed.as_secs() >= 10 {
                return Err(format!("runtime budget exceeded: {elapsed:?} >= 10s"));
            }
            Ok(format!(
                "{checked} certificates (d = 1..3, N = 2..10), all exact ({elapsed:?})"
            ))
        })(),
    );
}

// -------------------------------------------------------------------------
// 3. Projections of points with congruent lead coordinates differ by an
//    integer vector.

#[test]
fn acceptance_03_projection_integrality() {
    report(
        "03 projection-integrality",
        (|| {
            let mut checked = 0usize;
            for trial in 0..1000u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(30_000 + trial);
                let d = rng.random_range(2..=3usize); // codomain dim = d + 1
                let b = rng.random_range(1..=6i64);
                let mut s: Vec<BigRational> = vec![BigRational::from_integer(BigInt::from(b))];
                for _ in 0..d {
                    s.push(ratio(rng.random_range(-5..=5), 1));
                }
                let x: Vec<BigRational> = (0..=d)
                    .map(|_| ratio(rng.random_range(-100..=100), 1))
                    .collect();
                let mut y = x.clone();
                let t = rng.random_range(-10..=10i64);
                y[0] = &x[0] + ratio(t * b, 1);
                for item in y.iter_mut().skip(1) {
                    *item += ratio(rng.random_range(-50..=50), 1);
                }
                let px = projection_p(&s, &x).map_err(|e| e.to_string())?;
                let py = projection_p(&s, &y).map_err(|e| e.to_string())?;
                for (a, c) in px.iter().zip(&py) {
                    if !(a - c).is_integer() {
                        return Err(format!(
                            "non-integer projection difference {} at trial {trial}",
                            a - c
                        ));
                    }
                }
                checked += 1;
            }
            Ok(format!(
                "{checked} random (s, x, y) triples with congruent lead coordinates"
            ))
        })(),
    );
}

// -------------------------------------------------------------------------
// Shared geometry for the covering criteria: a window wide enough to hold
// a quarter-thickness cylinder around a mostly horizontal segment.

fn covering_window() -> Window {
    Window::new(vec![-60, -40], vec![90, 40]).unwrap()
}

fn covering_segment(rng: &mut ChaCha8Rng) -> GeneralizedSegment {
    let p = LatticePoint::from_i64s(&[rng.random_range(-32..=-28), rng.random_range(-6..=6)]);
    let q = LatticePoint::from_i64s(&[rng.random_range(56..=62), rng.random_range(-6..=6)]);
    GeneralizedSegment::from_lattice(&p, &q).unwrap()
}

fn covering_map(window: Window, rng: &mut ChaCha8Rng, seed: u64) -> LipschitzMap {
    if seed.is_multiple_of(2) {
        gen_surface(window, seed).unwrap()
    } else {
        let slopes = [rng.random_range(-2..=2), rng.random_range(-2..=2)];
        gen_tilted(window, &slopes).unwrap()
    }
}

// 4. The line family covers the cylinder image: membership for every
//    point, uniqueness on a sample, and all traces inside the integral
//    translate union.

#[test]
fn acceptance_04_covering_completeness() {
    report(
        "04 covering-completeness",
        (|| {
            let eps = ratio(1, 4);
            for seed in 0..50u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(40_000 + seed);
                let window = covering_window();
                let f = covering_map(window, &mut rng, seed);
                let seg = covering_segment(&mut rng);
                let cyl = build_cylinder(&seg, &eps).map_err(|e| e.to_string())?;
                let s = vec![
                    BigInt::from(rng.random_range(1..=3i64)),
                    BigInt::from(rng.random_range(-2..=2i64)),
                    BigInt::from(rng.random_range(-2..=2i64)),
                ];
                let family = build_line_family(&f, &cyl, &s, 0).map_err(|e| e.to_string())?;
                // membership: every image point's line is in the family
                for z in cyl.points() {
                    let x = f.eval(z).ok_or("cylinder point escaped the window")?;
                    let shifted = x.translate(&s).map_err(|e| e.to_string())?;
                    let line =
                        collinear_core::canonical_line(x, &shifted).map_err(|e| e.to_string())?;
                    if !family.contains_line(&line) {
                        return Err(format!("image of {z:?} not covered, seed {seed}"));
                    }
                }
                // uniqueness on a sample: exactly one family line contains the
                // image (parallel distinct lines are disjoint; verify directly)
                for z in cyl.points().iter().step_by(cyl.len() / 20 + 1) {
                    let x = f.eval(z).unwrap();
                    let n = family
                        .lines()
                        .filter(|l| l.contains(x).unwrap_or(false))
                        .count();
                    if n != 1 {
                        return Err(format!(
                            "image of {z:?} lies on {n} family lines, seed {seed}"
                        ));
                    }
                }
                if !family.traces_in_lattice_union() {
                    return Err(format!("trace escaped the lattice union, seed {seed}"));
                }
            }
            Ok(
                "50 instances: full membership, sampled uniqueness, all traces in the \
            translate union"
                    .into(),
            )
        })(),
    );
}

// -------------------------------------------------------------------------
// 5. Whenever the marked cylinder population exceeds k times the family
//    size, extraction returns k points with exactly collinear images.

#[test]
fn acceptance_05_pigeonhole_extraction() {
    report(
        "05 pigeonhole-extraction",
        (|| {
            let eps = ratio(1, 4);
            for seed in 0..100u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(50_000 + seed);
                let window = covering_window();
                let slopes = [rng.random_range(-2..=2i64), rng.random_range(-2..=2i64)];
                let f = gen_tilted(window.clone(), &slopes).unwrap();
                let seg = covering_segment(&mut rng);
                let cyl = build_cylinder(&seg, &eps).map_err(|e| e.to_string())?;
                // rows of the window map into common lines of direction
                // (1, 0, slope_x): the bucket sizes are genuinely pigeonholed
                let s = vec![BigInt::one(), BigInt::zero(), BigInt::from(slopes[0])];
                let family = build_line_family(&f, &cyl, &s, 0).map_err(|e| e.to_string())?;
                let a: DomainSet = window.iter().collect();
                let k = rng.random_range(3..=8usize);
                let marked = cyl.points().iter().filter(|z| a.contains(*z)).count();
                if marked <= k * family.len() {
                    return Err(format!(
                        "precondition violated at seed {seed}: {marked} marked vs k|E| = {}",
                        k * family.len()
                    ));
                }
                let rep = extract_line(&f, &a, &cyl, &family, k).map_err(|e| e.to_string())?;
                let hit = rep
                    .selection
                    .ok_or(format!("extraction failed at seed {seed}"))?;
                if hit.domain_points.len() != k {
                    return Err(format!(
                        "expected {k} points, got {}",
                        hit.domain_points.len()
                    ));
                }
                let images: Vec<&LatticePoint> = hit
                    .domain_points
                    .iter()
                    .map(|z| f.eval(z).unwrap())
                    .collect();
                for i in 0..images.len() {
                    for j in (i + 1)..images.len() {
                        for l in (j + 1)..images.len() {
                            if !collinear3(images[i], images[j], images[l])
                                .map_err(|e| e.to_string())?
                            {
                                return Err(format!("non-collinear triple at seed {seed}"));
                            }
                        }
                    }
                }
            }
            Ok(
                "100 instances: extraction returned k points, all image triples exactly \
            collinear"
                    .into(),
            )
        })(),
    );
}

// -------------------------------------------------------------------------
// 6. Cylinder cardinality scales like eps^(d-1) * m^d, bounded below.

#[test]
fn acceptance_06_cylinder_scaling() {
    report(
        "06 cylinder-scaling",
        (|| {
            let start = Instant::now();
            // min over instances of |K| / (eps^(d-1) m^d), compared in squares
            let mut min_sq: Option<BigRational> = None; // ratio^2
            let mut instances = 0usize;
            let mut run = |p: &[i64], q: &[i64], eps: &BigRational| -> Result<(), String> {
                let d = p.len();
                let seg = GeneralizedSegment::from_lattice(
                    &LatticePoint::from_i64s(p),
                    &LatticePoint::from_i64s(q),
                )
                .map_err(|e| e.to_string())?;
                let cyl = build_cylinder(&seg, eps).map_err(|e| e.to_string())?;
                let m_sq = BigRational::from_integer(seg.m_sq().clone());
                let denom_sq = eps.pow(2 * (d as i32 - 1)) * m_sq.pow(d as i32);
                let ratio_sq =
                    BigRational::from_integer(BigInt::from(cyl.len() as u64).pow(2)) / denom_sq;
                if min_sq.as_ref().is_none_or(|m| &ratio_sq < m) {
                    min_sq = Some(ratio_sq);
                }
                instances += 1;
                Ok(())
            };
            // planar segments at three thicknesses
            for seed in 0..30u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(60_000 + seed);
                let eps = [ratio(1, 4), ratio(1, 3), ratio(1, 2)][(seed % 3) as usize].clone();
                let p = [rng.random_range(-30..=30), rng.random_range(-30..=30)];
                let dx =
                    rng.random_range(60..=100) * if rng.random_range(0..2) == 0 { 1 } else { -1 };
                let dy =
                    rng.random_range(60..=100) * if rng.random_range(0..2) == 0 { 1 } else { -1 };
                run(&p, &[p[0] + dx, p[1] + dy], &eps)?;
            }
            // spatial segments near the thickness gate
            for seed in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(61_000 + seed);
                let eps = ratio(1, 2);
                let p = [
                    rng.random_range(-20..=20),
                    rng.random_range(-20..=20),
                    rng.random_range(-20..=20),
                ];
                let q = [
                    p[0] + rng.random_range(30..=45),
                    p[1] + rng.random_range(30..=45),
                    p[2] - rng.random_range(30..=45),
                ];
                run(&p, &q, &eps)?;
            }
            let min_sq = min_sq.ok_or("no instances ran")?;
            let floor_sq = ratio(1, 100); // 0.1^2
            if min_sq <= floor_sq {
                return Err(format!("min ratio^2 = {min_sq} not above 1/100"));
            }
            let elapsed = start.elapsed();
            if elapsed.as_secs() >= 60 {
                return Err(format!("runtime budget exceeded: {elapsed:?} >= 60s"));
            }
            Ok(format!(
                "{instances} segments (d = 2, 3): min ratio^2 = {min_sq} > 1/100 ({elapsed:?})"
            ))
        })(),
    );
}

// -------------------------------------------------------------------------
// 7. Long unit walks in the plane always show at least 5 collinear points.

#[test]
fn acceptance_07_walk_collinearity() {
    report(
        "07 walk-collinearity",
        (|| {
            let mut extensions = 0usize;
            for seed in 0..20u64 {
                let mut found = {
                    let walk = gen_walk(10_000, seed).unwrap();
                    let pts: Vec<Vec<i64>> = walk.points().iter().map(|p| p.to_vec()).collect();
                    let (f, a) =
                        sequence_map(&pts, BigRational::one()).map_err(|e| e.to_string())?;
                    !verify_no_k_collinear(&f, &a, 5)
                        .map_err(|e| e.to_string())?
                        .ok
                };
                if !found {
                    // one permitted extension to 10x the length
                    extensions += 1;
                    let walk = gen_walk(100_000, seed).unwrap();
                    let pts: Vec<Vec<i64>> = walk.points().iter().map(|p| p.to_vec()).collect();
                    let (f, a) =
                        sequence_map(&pts, BigRational::one()).map_err(|e| e.to_string())?;
                    found = !verify_no_k_collinear(&f, &a, 5)
                        .map_err(|e| e.to_string())?
                        .ok;
                }
                if !found {
                    return Err(format!("walk seed {seed} has no 5 collinear points"));
                }
            }
            Ok(format!(
                "20 walks of length 10^4: all carry >= 5 collinear points ({extensions} extended)"
            ))
        })(),
    );
}

// -------------------------------------------------------------------------
// 8. Path lifting is faithful and the marked positions stay dense.

#[test]
fn acceptance_08_path_reduction() {
    report(
        "08 path-reduction",
        (|| {
            let l_list = [4u32, 8, 16, 32];
            for trial in 0..200u64 {
                let len = 60 + (trial as usize % 200);
                let m_avg = [ratio(2, 1), ratio(3, 1), ratio(5, 2), ratio(4, 1)]
                    [(trial % 4) as usize]
                    .clone();
                let seq =
                    gen_gap_sequence(len, &m_avg, 80_000 + trial).map_err(|e| e.to_string())?;
                let path = sequence_to_path(&seq).map_err(|e| e.to_string())?;
                // exact round trip: the map carries position a_i to u_i
                for (i, pos) in path.positions.iter().enumerate() {
                    let got = path.map.eval(&[*pos]).ok_or("position outside window")?;
                    let want = LatticePoint::from_i64s(&seq.points()[i]);
                    if *got != want {
                        return Err(format!(
                            "f(a_{i}) = {got} but u_{i} = {want} at trial {trial}"
                        ));
                    }
                }
                // density of the marks: at least 1/M_avg - 2/L at every scale
                let reports =
                    banach_density_estimate(&path.marks, &l_list).map_err(|e| e.to_string())?;
                for rep in &reports {
                    let bound = m_avg.recip()
                        - ratio(2, 1) / BigRational::from_integer(BigInt::from(rep.l));
                    if rep.value < bound {
                        return Err(format!(
                            "density {} below {} at L = {} (trial {trial}, M_avg = {m_avg})",
                            rep.value, bound, rep.l
                        ));
                    }
                }
            }
            Ok(
                "200 sequences: exact f(a_i) = u_i and marked density >= 1/M_avg - 2/L \
            at L = 4, 8, 16, 32"
                    .into(),
            )
        })(),
    );
}

// -------------------------------------------------------------------------
// 9. Glued families never let a line pick up more than one point outside
//    its home block.

#[test]
fn acceptance_09_gluing_audit() {
    report(
        "09 gluing-audit",
        (|| {
            for seed in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(90_000 + seed);
                let blocks: Vec<InstanceBlock> = (0..3)
                    .map(|b| {
                        let len = rng.random_range(20..=45);
                        let walk = gen_walk(len, seed * 10 + b).unwrap();
                        let path = sequence_to_path(&walk).unwrap();
                        InstanceBlock {
                            map: path.map,
                            set: path.marks,
                        }
                    })
                    .collect();
                let family = InstanceFamily::new(blocks).map_err(|e| e.to_string())?;
                let glued = glue_instances(&family, seed).map_err(|e| e.to_string())?;
                if !glue_audit(&glued.block_images) {
                    return Err(format!("audit failed at seed {seed}"));
                }
                // the glued map must stay 1-step Lipschitz
                let report = glued.map.validate_lipschitz(ValidationMode::Neighbors);
                if !report.valid {
                    return Err(format!("glued map not Lipschitz at seed {seed}"));
                }
            }
            Ok("20 three-block families: audit passed, glued maps stay Lipschitz".into())
        })(),
    );
}

// -------------------------------------------------------------------------
// 10. The end-to-end pipeline is self-verifying on lifted walks.

#[test]
fn acceptance_10_pipeline_self_verifying() {
    report(
        "10 pipeline-self-verifying",
        (|| {
            let start = Instant::now();
            let budget = ScanBudget {
                max_candidates: 8192,
                max_deviation_checks: 256,
                max_full_checks: 64,
            };
            let delta = ratio(1, 4);
            let mut successes = 0usize;
            let mut failures = 0usize;
            for seed in 0..20u64 {
                let walk = gen_walk(3_000, 100_000 + seed).unwrap();
                let path = sequence_to_path(&walk).unwrap();
                let run = full_pipeline(&path.map, &path.marks, 4, 8, &delta, &[], budget, seed)
                    .map_err(|e| e.to_string())?;
                match run.success {
                    Some(s) => {
                        if !s.verified {
                            return Err(format!("unverified success at seed {seed}"));
                        }
                        // independent re-check of the extracted points
                        let images: Vec<LatticePoint> = s
                            .extraction
                            .domain_points
                            .iter()
                            .map(|z| path.map.eval(z).unwrap().clone())
                            .collect();
                        for i in 0..images.len() {
                            for j in (i + 1)..images.len() {
                                for l in (j + 1)..images.len() {
                                    if !collinear3(&images[i], &images[j], &images[l])
                                        .map_err(|e| e.to_string())?
                                    {
                                        return Err(format!(
                                            "retracted collinearity at seed {seed}"
                                        ));
                                    }
                                }
                            }
                        }
                        if !s.certificate.verify() {
                            return Err(format!("invalid certificate at seed {seed}"));
                        }
                        successes += 1;
                    }
                    None => {
                        if run.attempts.is_empty() {
                            return Err(format!("failure with no staged attempts, seed {seed}"));
                        }
                        for att in &run.attempts {
                            let staffed = match att.stage {
                                PipelineStage::Approximation => !att.detail.is_empty(),
                                PipelineStage::WitnessScan => att.certificate.is_some(),
                                PipelineStage::Extraction => {
                                    att.certificate.is_some()
                                        && att.segment.is_some()
                                        && att.family_size.is_some()
                                        && att.bucket_max.is_some()
                                }
                            };
                            if !staffed {
                                return Err(format!(
                                    "attempt at stage {} missing measured quantities, seed {seed}",
                                    att.stage
                                ));
                            }
                        }
                        failures += 1;
                    }
                }
            }
            if successes == 0 {
                return Err("no seed produced a verified success".into());
            }
            let elapsed = start.elapsed();
            Ok(format!(
                "20 lifted walks: {successes} verified successes, {failures} staged failures, \
             zero unverified ({elapsed:?})"
            ))
        })(),
    );
}
