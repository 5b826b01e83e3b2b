//! `collinear-lab`: exact experiments on collinear points in Lipschitz
//! images of dense lattice sets.
//!
//! Every subcommand reads and writes the plain-text formats of the core
//! crate, keeps all arithmetic exact (rationals are written `num/den`),
//! and draws any randomness from the explicit `--seed` flag, so identical
//! invocations produce byte-identical output.
//!
//! Exit status: 0 when the requested answer or witness was found, 1 when a
//! search ran out without finding one, 2 on malformed flags or files (with
//! a single-line reason on stderr).

use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use collinear_core::collinear::{max_collinear_hash, max_collinear_naive};
use collinear_core::covering::{dirichlet_approx, full_pipeline, CoveringError, PipelineStage};
use collinear_core::cylinder::{
    check_conditions, scan_for_witness, scan_for_witness_grid, ConditionReport, ScanBudget,
    WitnessParams,
};
use collinear_core::density::banach_density_estimate;
use collinear_core::estimator::{estimate_l_lower, sequence_map};
use collinear_core::exact::{format_ratio, parse_ratio};
use collinear_core::io::{
    parse_domain_set, parse_manifest, parse_map, parse_point_list, write_domain_set, write_map,
};
use collinear_core::lattice::{CanonicalLine, GeneralizedSegment, LatticePoint, RationalPoint};
use collinear_core::maps::{
    gen_flat, gen_gap_sequence, gen_subset, gen_surface, gen_tilted, gen_walk, glue_audit,
    glue_instances, sequence_to_path, DomainSet, GapSequence, InstanceBlock, InstanceFamily,
    LipschitzMap, ValidationMode, Window,
};

#[derive(Parser)]
#[command(
    name = "collinear-lab",
    version,
    about = "Exact collinearity experiments on lattice maps",
    disable_help_subcommand = true
)]
struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: COLLINEAR_LAB_THREADS, else 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Report format: labelled plain text or tab-separated rows.
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    format: Format,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Tsv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a map table, walk, gap sequence, or marked set.
    Gen(GenArgs),
    /// Maximum collinear points of a point list, two exact engines.
    Collinear(CollinearArgs),
    /// Sup window densities of a marked set over given side lengths.
    Density(DensityArgs),
    /// Check or scan the segment conditions z-i, z-ii, z-iii.
    Cylinder(CylinderArgs),
    /// Simultaneous rational approximation certificate.
    Dirichlet(DirichletArgs),
    /// Full covering pipeline: approximate, scan, cover, extract k points.
    Cover(CoverArgs),
    /// Lower estimate of the forcing length for k collinear image points.
    EstimateL(EstimateArgs),
    /// Glue a manifest of path blocks into one instance.
    Glue(GlueArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    /// What to generate.
    #[arg(long, value_enum)]
    kind: GenKind,

    /// Domain dimension (surface, tilted, flat, subset).
    #[arg(long, default_value_t = 2)]
    d: usize,

    /// Codomain codimension (surface only; others are fixed at 1).
    #[arg(long, default_value_t = 1)]
    h: usize,

    /// Cube window `lo..hi`, applied to every axis.
    #[arg(long, default_value = "-8..8", allow_hyphen_values = true)]
    window: String,

    /// Slope per axis (tilted); repeat the flag, defaults to all ones.
    #[arg(long, allow_negative_numbers = true)]
    slope: Vec<i64>,

    /// Sequence length (walk, gaps).
    #[arg(long, default_value_t = 64)]
    len: usize,

    /// Average-gap bound as `num/den` (gaps).
    #[arg(long, default_value = "2")]
    m_avg: String,

    /// Marked fraction as `num/den` (subset).
    #[arg(long, default_value = "1/2")]
    density: String,

    /// Which artifact of a walk or gap sequence to print.
    #[arg(long, value_enum)]
    part: Option<GenPart>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    /// Random unit-step height surface, embedded as its graph.
    Surface,
    /// Graph of an integer linear form.
    Tilted,
    /// Graph of the zero function.
    Flat,
    /// Unit-jump plane walk as a gap sequence.
    Walk,
    /// Plane sequence with average jump length at most `m-avg`.
    Gaps,
    /// Seeded marked subset of the window.
    Subset,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenPart {
    /// The path map table (domain `[1, len]`).
    Map,
    /// The marked set of path positions.
    Set,
    /// The raw two-column sequence points.
    Points,
}

#[derive(clap::Args)]
struct CollinearArgs {
    /// Point-list file; `-` reads stdin.
    #[arg(long, conflicts_with = "gen_cloud")]
    input: Option<PathBuf>,

    /// Generate this many seeded random points instead of reading a file.
    #[arg(long)]
    gen_cloud: Option<usize>,

    /// Dimension of the generated cloud.
    #[arg(long, default_value_t = 2)]
    d: usize,

    /// Coordinate bound of the generated cloud.
    #[arg(long, default_value_t = 12)]
    bound: i64,

    /// Report a witness of exactly k points (exit 1 if none exists).
    #[arg(long)]
    k: Option<usize>,

    /// Counting engine; both are exact and always agree.
    #[arg(long, value_enum, default_value_t = Engine::Hash)]
    engine: Engine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    /// All pairwise lines, each checked against every point.
    Naive,
    /// Primitive-direction buckets per base point.
    Hash,
}

#[derive(clap::Args)]
struct DensityArgs {
    /// Marked-set file (point list).
    #[arg(long)]
    input: PathBuf,

    /// Window side lengths, comma separated.
    #[arg(long, default_value = "2,4,8,16")]
    l: String,
}

#[derive(clap::Args)]
struct CylinderArgs {
    #[command(subcommand)]
    action: CylinderAction,
}

#[derive(Subcommand)]
enum CylinderAction {
    /// Evaluate z-i, z-ii, z-iii for one given segment.
    Check(CheckArgs),
    /// Search integer-endpoint segments for one passing all conditions.
    Scan(ScanArgs),
}

#[derive(clap::Args)]
struct CheckArgs {
    /// Map table file.
    #[arg(long)]
    map: PathBuf,

    /// Marked-set file.
    #[arg(long)]
    set: PathBuf,

    /// Deviation scale, `num/den` in (0, 1).
    #[arg(long)]
    epsilon: String,

    /// Density threshold, `num/den` in (0, 1].
    #[arg(long)]
    delta: String,

    /// Image direction, comma-separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    w: String,

    /// Segment start, comma-separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    start: String,

    /// Segment end, comma-separated rationals.
    #[arg(long, allow_hyphen_values = true)]
    end: String,
}

#[derive(clap::Args)]
struct ScanArgs {
    /// Map table file.
    #[arg(long)]
    map: PathBuf,

    /// Marked-set file.
    #[arg(long)]
    set: PathBuf,

    /// Deviation scale, `num/den` in (0, 1).
    #[arg(long)]
    epsilon: String,

    /// Density threshold, `num/den` in (0, 1].
    #[arg(long)]
    delta: String,

    /// Image direction; omit to scan the whole sign grid.
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,

    /// Candidate segments examined before giving up.
    #[arg(long, default_value_t = 16384)]
    max_candidates: u64,

    /// Candidates allowed past the cheap direction filter.
    #[arg(long, default_value_t = 1024)]
    max_deviation_checks: u64,

    /// Candidates allowed a full three-condition evaluation.
    #[arg(long, default_value_t = 256)]
    max_full_checks: u64,
}

#[derive(clap::Args)]
struct DirichletArgs {
    /// Target ratio as `num/den`; repeat the flag per coordinate.
    #[arg(long, required = true, allow_hyphen_values = true)]
    u: Vec<String>,

    /// Resolution: the denominator may reach n^d, each error 1/(b*n).
    #[arg(long)]
    n: u64,
}

#[derive(clap::Args)]
struct CoverArgs {
    /// Map table file.
    #[arg(long)]
    map: PathBuf,

    /// Marked-set file.
    #[arg(long)]
    set: PathBuf,

    /// Points to place on one image line.
    #[arg(long)]
    k: usize,

    /// Approximation resolution for the direction ratios.
    #[arg(long)]
    n: u64,

    /// Density threshold for the witness scan.
    #[arg(long, default_value = "1/4")]
    delta: String,

    /// Extra image directions after the sign grid; repeat the flag.
    #[arg(long, allow_hyphen_values = true)]
    w: Vec<String>,

    /// Candidate segments examined per direction.
    #[arg(long, default_value_t = 16384)]
    max_candidates: u64,

    /// Candidates allowed past the cheap direction filter.
    #[arg(long, default_value_t = 1024)]
    max_deviation_checks: u64,

    /// Candidates allowed a full three-condition evaluation.
    #[arg(long, default_value_t = 256)]
    max_full_checks: u64,
}

#[derive(clap::Args)]
struct EstimateArgs {
    /// Collinear points demanded of every admissible instance.
    #[arg(long)]
    k: usize,

    /// Image dimension of the step sequences.
    #[arg(long, default_value_t = 1)]
    d: usize,

    /// Marked density threshold, `num/den` in (0, 1].
    #[arg(long, default_value = "1/2")]
    delta: String,

    /// Squared step bound (the exact form of the Lipschitz constant).
    #[arg(long, default_value_t = 1)]
    m_sq: u64,

    /// Largest window length to try.
    #[arg(long, default_value_t = 8)]
    l_max: u64,

    /// Write the best counterexample as `<stem>.map` and `<stem>.pts`.
    #[arg(long)]
    archive: Option<PathBuf>,
}

#[derive(clap::Args)]
struct GlueArgs {
    /// Manifest file: one `map-path set-path` pair per line, relative to
    /// the manifest's directory.
    #[arg(long)]
    manifest: PathBuf,

    /// Write the glued map table here.
    #[arg(long)]
    emit_map: Option<PathBuf>,

    /// Write the glued marked set here.
    #[arg(long)]
    emit_set: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Die quietly when the read end of a pipe closes (`... | head`)
    // instead of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let text = e.to_string();
                eprintln!("{}", text.lines().next().unwrap_or("bad arguments"));
                return ExitCode::from(2);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    init_threads(cli.threads)?;
    match &cli.cmd {
        Cmd::Gen(args) => cmd_gen(args, cli.seed),
        Cmd::Collinear(args) => cmd_collinear(args, cli.seed, cli.format),
        Cmd::Density(args) => cmd_density(args, cli.format),
        Cmd::Cylinder(args) => match &args.action {
            CylinderAction::Check(c) => cmd_cylinder_check(c, cli.format),
            CylinderAction::Scan(s) => cmd_cylinder_scan(s, cli.seed, cli.format),
        },
        Cmd::Dirichlet(args) => cmd_dirichlet(args, cli.format),
        Cmd::Cover(args) => cmd_cover(args, cli.seed, cli.format),
        Cmd::EstimateL(args) => cmd_estimate(args, cli.seed, cli.format),
        Cmd::Glue(args) => cmd_glue(args, cli.seed, cli.format),
    }
}

fn init_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("COLLINEAR_LAB_THREADS") {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("COLLINEAR_LAB_THREADS is not a thread count: {s:?}"))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err("--threads must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared parsing and formatting.

fn read_text(path: &Path) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("stdin: {e}"))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_map(path: &Path) -> Result<LipschitzMap, String> {
    parse_map(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_set(path: &Path) -> Result<DomainSet, String> {
    parse_domain_set(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn ratio_arg(s: &str, flag: &str) -> Result<BigRational, String> {
    parse_ratio(s).map_err(|e| format!("--{flag}: {e}"))
}

fn ratio_list(s: &str, flag: &str) -> Result<Vec<BigRational>, String> {
    s.split(',').map(|t| ratio_arg(t.trim(), flag)).collect()
}

fn window_arg(text: &str, d: usize) -> Result<Window, String> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| format!("--window: expected lo..hi, got {text:?}"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("--window: bad lower bound {lo:?}"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("--window: bad upper bound {hi:?}"))?;
    Window::cube(d, lo, hi).map_err(|e| format!("--window: {e}"))
}

fn sep(format: Format) -> &'static str {
    match format {
        Format::Plain => " ",
        Format::Tsv => "\t",
    }
}

fn emit(format: Format, tokens: &[String]) {
    println!("{}", tokens.join(sep(format)));
}

fn toks(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

/// Compact rational: integer when the denominator is 1, else `num/den`.
fn show_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format_ratio(r)
    }
}

fn show_ratio_vec(v: &[BigRational]) -> String {
    v.iter().map(show_ratio).collect::<Vec<_>>().join(",")
}

fn show_bigints(v: &[BigInt]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn show_i64s(v: &[i64]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn pass_fail(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn point_text(p: &RationalPoint) -> String {
    show_ratio_vec(p.coords())
}

fn line_rows(line: &CanonicalLine, format: Format) {
    emit(
        format,
        &[
            "line".into(),
            "direction".into(),
            show_bigints(line.direction()),
            "anchor".into(),
            show_bigints(line.anchor()),
        ],
    );
}

fn condition_rows(rep: &ConditionReport, format: Format) {
    emit(
        format,
        &[
            "z-i".into(),
            pass_fail(rep.direction.pass).into(),
            "margin".into(),
            format_ratio(&rep.direction.margin),
        ],
    );
    emit(
        format,
        &[
            "z-ii".into(),
            pass_fail(rep.deviation.pass).into(),
            "worst-sq".into(),
            format_ratio(&rep.deviation.worst_sq),
            "bound-sq".into(),
            format_ratio(&rep.deviation.bound_sq),
            "margin".into(),
            format_ratio(&rep.deviation.margin),
        ],
    );
    emit(
        format,
        &[
            "z-iii".into(),
            pass_fail(rep.density.pass).into(),
            "marked".into(),
            rep.density.marked_in_cylinder.to_string(),
            "size".into(),
            rep.density.cylinder_size.to_string(),
            "ratio".into(),
            format_ratio(&rep.density.ratio),
            "threshold".into(),
            format_ratio(&rep.density.threshold),
        ],
    );
}

// ---------------------------------------------------------------------------
// gen

fn cmd_gen(args: &GenArgs, seed: u64) -> Result<u8, String> {
    let is_sequence = matches!(args.kind, GenKind::Walk | GenKind::Gaps);
    if args.part.is_some() && !is_sequence {
        return Err("--part applies to the walk and gaps kinds only".into());
    }
    if args.h != 1 && !matches!(args.kind, GenKind::Surface) {
        return Err("--h other than 1 is supported by the surface kind only".into());
    }
    match args.kind {
        GenKind::Surface => {
            let window = window_arg(&args.window, args.d)?;
            let map = gen_stacked_surface(window, args.h, seed)?;
            print!("{}", write_map(&map));
        }
        GenKind::Tilted => {
            let window = window_arg(&args.window, args.d)?;
            let slopes = if args.slope.is_empty() {
                vec![1; args.d]
            } else {
                args.slope.clone()
            };
            let map = gen_tilted(window, &slopes).map_err(|e| e.to_string())?;
            print!("{}", write_map(&map));
        }
        GenKind::Flat => {
            let window = window_arg(&args.window, args.d)?;
            let map = gen_flat(window).map_err(|e| e.to_string())?;
            print!("{}", write_map(&map));
        }
        GenKind::Walk => {
            let seq = gen_walk(args.len, seed).map_err(|e| e.to_string())?;
            print_sequence(&seq, args.part.unwrap_or(GenPart::Map))?;
        }
        GenKind::Gaps => {
            let m_avg = ratio_arg(&args.m_avg, "m-avg")?;
            let seq = gen_gap_sequence(args.len, &m_avg, seed).map_err(|e| e.to_string())?;
            print_sequence(&seq, args.part.unwrap_or(GenPart::Map))?;
        }
        GenKind::Subset => {
            let window = window_arg(&args.window, args.d)?;
            let frac = ratio_arg(&args.density, "density")?;
            let num = u32::try_from(frac.numer()).map_err(|_| "--density: numerator range")?;
            let den = u32::try_from(frac.denom()).map_err(|_| "--density: denominator range")?;
            if den == 0 || num > den {
                return Err("--density must lie in [0, 1]".into());
            }
            let set = gen_subset(&window, num, den, seed);
            print!("{}", write_domain_set(&set));
        }
    }
    Ok(0)
}

/// Stacks `h` independent unit-step height tables over one window into a
/// single graph map `x -> (x, g_1(x), ..., g_h(x))`; each table moves by at
/// most 1 per unit step, so the squared constant is `1 + h`.
fn gen_stacked_surface(window: Window, h: usize, seed: u64) -> Result<LipschitzMap, String> {
    if h == 0 {
        return Err("--h must be at least 1".into());
    }
    if h == 1 {
        return gen_surface(window, seed).map_err(|e| e.to_string());
    }
    let d = window.dim();
    let mut tables: Vec<Vec<BigInt>> = Vec::with_capacity(h);
    for i in 0..h {
        let layer =
            gen_surface(window.clone(), seed.wrapping_add(i as u64)).map_err(|e| e.to_string())?;
        tables.push(
            layer
                .values()
                .iter()
                .map(|v| v.coords()[d].clone())
                .collect(),
        );
    }
    let values: Vec<LatticePoint> = window
        .iter()
        .enumerate()
        .map(|(idx, x)| {
            let mut coords: Vec<BigInt> = x.iter().map(|&c| BigInt::from(c)).collect();
            for table in &tables {
                coords.push(table[idx].clone());
            }
            LatticePoint::new(coords)
        })
        .collect();
    let m_sq = BigRational::from_integer(BigInt::from(1 + h as i64));
    LipschitzMap::new(window, h, m_sq, values).map_err(|e| e.to_string())
}

fn print_sequence(seq: &GapSequence, part: GenPart) -> Result<(), String> {
    match part {
        GenPart::Points => {
            for [x, y] in seq.points() {
                println!("{x} {y}");
            }
        }
        GenPart::Map => {
            let path = sequence_to_path(seq).map_err(|e| e.to_string())?;
            print!("{}", write_map(&path.map));
        }
        GenPart::Set => {
            let path = sequence_to_path(seq).map_err(|e| e.to_string())?;
            print!("{}", write_domain_set(&path.marks));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// collinear

fn cmd_collinear(args: &CollinearArgs, seed: u64, format: Format) -> Result<u8, String> {
    let points: Vec<LatticePoint> = match (&args.input, args.gen_cloud) {
        (Some(path), None) => {
            parse_point_list(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, Some(count)) => gen_cloud(count, args.d, args.bound, seed)?,
        _ => return Err("need exactly one of --input or --gen-cloud".into()),
    };
    let result = match args.engine {
        Engine::Naive => max_collinear_naive(&points),
        Engine::Hash => max_collinear_hash(&points),
    }
    .map_err(|e| e.to_string())?;

    let take = match args.k {
        None => result.count,
        Some(0) => return Err("--k must be at least 1".into()),
        Some(k) if k <= result.count => k,
        Some(_) => {
            emit(format, &toks(&["k", "none"]));
            emit(format, &["max".into(), result.count.to_string()]);
            return Ok(1);
        }
    };

    emit(format, &["k".into(), take.to_string()]);
    let witness: Vec<&LatticePoint> = match &result.line {
        Some(line) => {
            let mut on_line: Vec<&LatticePoint> = Vec::new();
            let distinct: std::collections::BTreeSet<&LatticePoint> = points.iter().collect();
            for p in distinct {
                if line.contains(p).map_err(|e| e.to_string())? {
                    on_line.push(p);
                }
            }
            on_line.truncate(take);
            on_line
        }
        None => {
            let distinct: std::collections::BTreeSet<&LatticePoint> = points.iter().collect();
            distinct.into_iter().take(take).collect()
        }
    };
    for p in &witness {
        emit(format, &["point".into(), show_bigints(p.coords())]);
    }
    match (&result.line, take >= 2) {
        (Some(line), true) => line_rows(line, format),
        _ => emit(format, &toks(&["line", "none"])),
    }
    Ok(0)
}

fn gen_cloud(count: usize, d: usize, bound: i64, seed: u64) -> Result<Vec<LatticePoint>, String> {
    if d == 0 {
        return Err("--d must be at least 1".into());
    }
    if bound < 0 {
        return Err("--bound must be nonnegative".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let coords: Vec<i64> = (0..d).map(|_| rng.random_range(-bound..=bound)).collect();
            LatticePoint::from_i64s(&coords)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// density

fn cmd_density(args: &DensityArgs, format: Format) -> Result<u8, String> {
    let set = load_set(&args.input)?;
    let mut sides: Vec<u32> = Vec::new();
    for tok in args.l.split(',') {
        sides.push(
            tok.trim()
                .parse()
                .map_err(|_| format!("--l: not a side length: {tok:?}"))?,
        );
    }
    let reports = banach_density_estimate(&set, &sides).map_err(|e| e.to_string())?;
    for r in &reports {
        let corner = if r.corner.is_empty() {
            "-".to_string()
        } else {
            show_i64s(&r.corner)
        };
        match format {
            Format::Plain => println!(
                "L {} density {} count {} corner {corner}",
                r.l,
                format_ratio(&r.value),
                r.count
            ),
            Format::Tsv => println!("{}\t{}\t{}\t{corner}", r.l, format_ratio(&r.value), r.count),
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// cylinder

fn cmd_cylinder_check(args: &CheckArgs, format: Format) -> Result<u8, String> {
    let f = load_map(&args.map)?;
    let a = load_set(&args.set)?;
    let params = WitnessParams::new(
        ratio_arg(&args.epsilon, "epsilon")?,
        ratio_arg(&args.delta, "delta")?,
        ratio_list(&args.w, "w")?,
    )
    .map_err(|e| e.to_string())?;
    let start = RationalPoint::new(ratio_list(&args.start, "start")?);
    let end = RationalPoint::new(ratio_list(&args.end, "end")?);
    let seg = GeneralizedSegment::new(start, end).map_err(|e| e.to_string())?;
    let report = check_conditions(&f, &a, &seg, &params).map_err(|e| e.to_string())?;
    condition_rows(&report, format);
    let ok = report.all_pass();
    emit(format, &["result".into(), pass_fail(ok).into()]);
    Ok(u8::from(!ok))
}

fn cmd_cylinder_scan(args: &ScanArgs, seed: u64, format: Format) -> Result<u8, String> {
    let f = load_map(&args.map)?;
    let a = load_set(&args.set)?;
    let epsilon = ratio_arg(&args.epsilon, "epsilon")?;
    let delta = ratio_arg(&args.delta, "delta")?;
    let budget = ScanBudget {
        max_candidates: args.max_candidates,
        max_deviation_checks: args.max_deviation_checks,
        max_full_checks: args.max_full_checks,
    };
    let found = match &args.w {
        Some(w) => {
            let params = WitnessParams::new(epsilon, delta, ratio_list(w, "w")?)
                .map_err(|e| e.to_string())?;
            scan_for_witness(&f, &a, &params, budget, seed)
                .map_err(|e| e.to_string())?
                .map(|hit| (params.w().to_vec(), hit))
        }
        None => scan_for_witness_grid(&f, &a, &epsilon, &delta, &[], budget, seed)
            .map_err(|e| e.to_string())?
            .map(|(params, hit)| (params.w().to_vec(), hit)),
    };
    match found {
        Some((w, hit)) => {
            emit(format, &["w".into(), show_ratio_vec(&w)]);
            emit(
                format,
                &[
                    "segment".into(),
                    point_text(hit.segment.start()),
                    "->".into(),
                    point_text(hit.segment.end()),
                ],
            );
            condition_rows(&hit.report, format);
            emit(format, &toks(&["result", "pass"]));
            Ok(0)
        }
        None => {
            emit(format, &toks(&["witness", "none"]));
            Ok(1)
        }
    }
}

// ---------------------------------------------------------------------------
// dirichlet

fn cmd_dirichlet(args: &DirichletArgs, format: Format) -> Result<u8, String> {
    let mut u: Vec<BigRational> = Vec::with_capacity(args.u.len());
    for s in &args.u {
        u.push(ratio_arg(s, "u")?);
    }
    match dirichlet_approx(&u, args.n) {
        Ok(cert) => {
            let a = cert
                .a
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",");
            let err = format_ratio(&cert.err_max());
            let bound = format_ratio(&cert.bound());
            match format {
                Format::Plain => println!("b={} a={a} err={err} bound={bound}", cert.b),
                Format::Tsv => println!("{}\t{}\t{err}\t{bound}", cert.b, a.replace(',', " ")),
            }
            Ok(0)
        }
        Err(CoveringError::ApproximationExhausted) => {
            emit(format, &toks(&["certificate", "none"]));
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}

// ---------------------------------------------------------------------------
// cover

fn cmd_cover(args: &CoverArgs, seed: u64, format: Format) -> Result<u8, String> {
    let f = load_map(&args.map)?;
    let a = load_set(&args.set)?;
    let delta = ratio_arg(&args.delta, "delta")?;
    let mut extra: Vec<Vec<BigRational>> = Vec::with_capacity(args.w.len());
    for s in &args.w {
        extra.push(ratio_list(s, "w")?);
    }
    let budget = ScanBudget {
        max_candidates: args.max_candidates,
        max_deviation_checks: args.max_deviation_checks,
        max_full_checks: args.max_full_checks,
    };
    let run = full_pipeline(&f, &a, args.k, args.n, &delta, &extra, budget, seed)
        .map_err(|e| e.to_string())?;
    match run.success {
        Some(s) => {
            emit(format, &["w".into(), show_ratio_vec(&s.w)]);
            emit(format, &["lead".into(), s.lead.to_string()]);
            emit(format, &["b".into(), s.certificate.b.to_string()]);
            emit(
                format,
                &[
                    "a".into(),
                    s.certificate
                        .a
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                ],
            );
            emit(format, &["epsilon".into(), format_ratio(&s.epsilon)]);
            emit(
                format,
                &[
                    "segment".into(),
                    point_text(s.segment.start()),
                    "->".into(),
                    point_text(s.segment.end()),
                ],
            );
            condition_rows(&s.conditions, format);
            emit(format, &["s".into(), show_bigints(&s.s)]);
            emit(format, &["family".into(), s.family_size.to_string()]);
            emit(format, &["marked".into(), s.marked_in_cylinder.to_string()]);
            emit(
                format,
                &[
                    "bucket-max".into(),
                    s.bucket_sizes.first().copied().unwrap_or(0).to_string(),
                ],
            );
            line_rows(&s.extraction.line, format);
            for z in &s.extraction.domain_points {
                let img = f.eval(z).expect("extracted points lie inside the window");
                emit(
                    format,
                    &[
                        "point".into(),
                        show_i64s(z),
                        "->".into(),
                        show_bigints(img.coords()),
                    ],
                );
            }
            emit(format, &["verified".into(), yes_no(s.verified).into()]);
            Ok(u8::from(!s.verified))
        }
        None => {
            for rec in &run.attempts {
                let msg = match rec.stage {
                    PipelineStage::WitnessScan => format!("witness: none ({})", rec.detail),
                    _ => rec.detail.clone(),
                };
                emit(
                    format,
                    &[
                        "attempt".into(),
                        format!("w={}", show_ratio_vec(&rec.w)),
                        format!("stage={}", rec.stage),
                        msg,
                    ],
                );
            }
            emit(format, &toks(&["result", "none"]));
            Ok(1)
        }
    }
}

// ---------------------------------------------------------------------------
// estimate-l

fn cmd_estimate(args: &EstimateArgs, seed: u64, format: Format) -> Result<u8, String> {
    let delta = ratio_arg(&args.delta, "delta")?;
    let report = estimate_l_lower(args.k, args.m_sq, args.d, &delta, args.l_max, seed)
        .map_err(|e| e.to_string())?;
    for level in &report.levels {
        emit(
            format,
            &[
                "L".into(),
                level.l.to_string(),
                "required".into(),
                level.required.to_string(),
                "best".into(),
                level.best_count.to_string(),
                "exhaustive".into(),
                yes_no(level.exhaustive).into(),
                "counterexample".into(),
                yes_no(level.counterexample.is_some()).into(),
            ],
        );
    }
    if let Some(stem) = &args.archive {
        archive_witness(&report, stem, seed, args.l_max, format)?;
    }
    if report.capped {
        emit(format, &toks(&["l-lower", "none"]));
        Ok(1)
    } else {
        emit(format, &["l-lower".into(), report.l_lower.to_string()]);
        Ok(0)
    }
}

/// Writes the deepest counterexample as a map table plus marked-set file,
/// each headed by a one-line provenance comment (seed, budget, date).
fn archive_witness(
    report: &collinear_core::estimator::EstimateReport,
    stem: &Path,
    seed: u64,
    l_max: u64,
    format: Format,
) -> Result<(), String> {
    let Some(ce) = report
        .levels
        .iter()
        .rev()
        .find_map(|lv| lv.counterexample.as_ref())
    else {
        emit(format, &toks(&["archive", "none"]));
        return Ok(());
    };
    let m_sq = BigRational::from_integer(BigInt::from(report.m_sq));
    let (map, _) = sequence_map(&ce.points, m_sq).map_err(|e| e.to_string())?;
    let mut marks = DomainSet::new();
    for &i in &ce.marked {
        marks.insert(vec![i]);
    }
    let epoch = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let header = format!("# seed {seed} l-max {l_max} date {epoch}\n");
    let map_path = stem.with_extension("map");
    let set_path = stem.with_extension("pts");
    std::fs::write(&map_path, format!("{header}{}", write_map(&map)))
        .map_err(|e| format!("{}: {e}", map_path.display()))?;
    std::fs::write(&set_path, format!("{header}{}", write_domain_set(&marks)))
        .map_err(|e| format!("{}: {e}", set_path.display()))?;
    emit(
        format,
        &[
            "archive".into(),
            map_path.display().to_string(),
            set_path.display().to_string(),
        ],
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// glue

fn cmd_glue(args: &GlueArgs, seed: u64, format: Format) -> Result<u8, String> {
    let text = read_text(&args.manifest)?;
    let entries = parse_manifest(&text).map_err(|e| format!("{}: {e}", args.manifest.display()))?;
    if entries.is_empty() {
        return Err(format!(
            "{}: manifest lists no blocks",
            args.manifest.display()
        ));
    }
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let mut blocks = Vec::with_capacity(entries.len());
    for (map_path, set_path) in &entries {
        blocks.push(InstanceBlock {
            map: load_map(&base.join(map_path))?,
            set: load_set(&base.join(set_path))?,
        });
    }
    let family = InstanceFamily::new(blocks).map_err(|e| e.to_string())?;
    let glued = glue_instances(&family, seed).map_err(|e| e.to_string())?;

    emit(format, &["blocks".into(), entries.len().to_string()]);
    let w = glued.map.window();
    emit(
        format,
        &[
            "window".into(),
            w.lo()[0].to_string(),
            w.hi()[0].to_string(),
        ],
    );
    emit(format, &["marked".into(), glued.set.len().to_string()]);
    for (i, off) in glued.offsets.iter().enumerate() {
        emit(
            format,
            &[
                "block".into(),
                (i + 1).to_string(),
                "domain-shift".into(),
                off.domain_shift.to_string(),
                "image-shift".into(),
                show_bigints(&off.image_shift),
            ],
        );
    }
    let audit = glue_audit(&glued.block_images);
    emit(format, &["audit".into(), pass_fail(audit).into()]);
    let lip = glued.map.validate_lipschitz(ValidationMode::Neighbors);
    emit(
        format,
        &[
            "lipschitz".into(),
            if lip.valid { "valid" } else { "invalid" }.into(),
        ],
    );
    if let Some(path) = &args.emit_map {
        std::fs::write(path, write_map(&glued.map))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.emit_set {
        std::fs::write(path, write_domain_set(&glued.set))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(u8::from(!(audit && lip.valid)))
}
