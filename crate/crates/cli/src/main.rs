//! `ict`: generate, inspect and check irreducible Cartesian tensor
//! decompositions and equivariant bases.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use ict_core::artifact::{
    decomposition_meta, hom_meta, verify_container, write_decomposition, write_hom, ContainerVerifyOptions,
};
use ict_core::bench::{bench_rank, log_linear_fit, oracle_baseline, BenchRecord};
use ict_core::group_paths_by_terminal;
use ict_core::specparse::parse_space_spec_with_warnings;
use ict_core::store::{self, ContainerWriter, ObjectKind};
use ict_core::{end_dimension, hom_dimension, render_space_spec, Basis, Error, Group, SpaceSpec, StoreError, Weight};
use nalgebra::DMatrix;
use serde::Serialize;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const MAX_RANK: usize = 9;
const RENDER_PIXEL_CAP: usize = 4096 * 4096;

const EXIT_VERIFY: u8 = 1;
const EXIT_CORRUPT: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ict",
    version,
    about = "Irreducible Cartesian tensor decompositions and equivariant bases"
)]
struct Cli {
    /// o3, so3 or su2.
    #[arg(long, global = true, default_value = "o3")]
    group: Group,

    /// cartesian or spherical; cartesian by default except for su2.
    #[arg(long, global = true)]
    basis: Option<Basis>,

    /// Worker threads, 0 for all cores. ICT_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the path matrices (and optionally dense projectors) of a space.
    Decompose(DecomposeArgs),
    /// Write a basis of equivariant maps between two spaces.
    Basis(BasisArgs),
    /// Check a container file.
    Verify(VerifyArgs),
    /// Dimensions, multiplicities and paths of a space.
    Info(InfoArgs),
    /// Time full decompositions rank by rank.
    Bench(BenchArgs),
    /// Write one stored matrix as a PGM heatmap.
    Render(RenderArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("space_source").required(true).args(["rank", "space"])))]
struct SpaceArgs {
    /// Cartesian rank n, i.e. the space R3^n.
    #[arg(long)]
    rank: Option<usize>,

    /// Space in the text grammar, e.g. "(2x2x2)-+(1x3)-".
    #[arg(long)]
    space: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Keep only these terminal weights, e.g. 0,2 or 1/2.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<String>>,

    /// Also store every projector as a dense matrix.
    #[arg(long)]
    materialize: bool,

    /// Container file to write
    #[arg(long)]
    out: PathBuf,

    /// Allow ranks above 9.
    #[arg(long)]
    force: bool,

    /// Print a JSON summary instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("form").args(["factored", "dense"])))]
struct BasisArgs {
    /// Domain space
    #[arg(long = "in")]
    input: String,

    /// Codomain space
    #[arg(long = "out-space")]
    out_space: String,

    /// Path matrices and zero mixing matrices (default).
    #[arg(long)]
    factored: bool,

    /// Every basis element as a dense matrix.
    #[arg(long)]
    dense: bool,

    /// Container file to write
    #[arg(long)]
    out: PathBuf,

    /// Print a JSON summary instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Container file
    file: PathBuf,

    /// Random group elements for the equivariance checks.
    #[arg(long, default_value_t = 20)]
    samples: usize,

    /// Compare with the brute-force commutant when the sizes allow it.
    #[arg(long)]
    oracle: bool,

    /// Override every tolerance.
    #[arg(long = "tol")]
    tol: Option<f64>,
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Also report the dimension of maps into this space.
    #[arg(long = "out-space")]
    out_space: Option<String>,

    /// Print JSON
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Largest rank to time
    #[arg(long = "max-rank")]
    max_rank: usize,

    /// Smallest rank to time
    #[arg(long = "min-rank", default_value_t = 1)]
    min_rank: usize,

    /// Rank for the brute-force solver timing; 0 skips it.
    #[arg(long = "oracle-rank", default_value_t = 4)]
    oracle_rank: usize,

    /// One JSON object per line, then a summary line
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Container file
    file: PathBuf,

    /// Name of the stored object, e.g. pm.t0.2+.q1
    #[arg(long)]
    object: String,

    /// Render P Pᵀ instead of a stored path matrix P.
    #[arg(long)]
    projector: bool,

    /// PGM file to write
    #[arg(long)]
    out: PathBuf,
}

/// Error plus the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Store(StoreError::Io { .. }) => EXIT_USAGE,
            Error::Store(_) => EXIT_CORRUPT,
            Error::Consistency(_) => EXIT_VERIFY,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let threads = match std::env::var("ICT_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("ICT_THREADS must be a non-negative integer, got `{v}`")))?,
        Err(_) => cli.threads,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    let basis = cli.basis.unwrap_or_else(|| Basis::default_for(cli.group));
    basis.check(cli.group)?;
    let ctx = Ctx {
        group: cli.group,
        basis,
    };
    match cli.command {
        Command::Decompose(a) => decompose(&ctx, a),
        Command::Basis(a) => basis_cmd(&ctx, a),
        Command::Verify(a) => verify(a),
        Command::Info(a) => info(&ctx, a),
        Command::Bench(a) => bench(a),
        Command::Render(a) => render(a),
    }
}

struct Ctx {
    group: Group,
    basis: Basis,
}

fn parse_spec(text: &str, group: Group) -> Result<SpaceSpec, Failure> {
    let (spec, warnings) = parse_space_spec_with_warnings(text, group)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(spec)
}

fn space_from(args: &SpaceArgs, group: Group) -> Result<SpaceSpec, Failure> {
    match (&args.rank, &args.space) {
        (Some(n), None) => Ok(SpaceSpec::natural_power(group, *n)?),
        (None, Some(s)) => parse_spec(s, group),
        _ => Err(usage("give exactly one of --rank and --space")),
    }
}

fn parse_weight(s: &str) -> Result<Weight, Failure> {
    let bad = || usage(format!("invalid weight `{s}`"));
    let s = s.trim();
    match s.strip_suffix("/2") {
        Some(num) => num.parse::<u32>().map(Weight::from_doubled).map_err(|_| bad()),
        None => s.parse::<u32>().map(Weight::integer).map_err(|_| bad()),
    }
}

fn print_json<T: Serialize>(v: &T) {
    out!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn gib(bytes: f64) -> String {
    format!("{:.2} GiB", bytes / f64::from(1u32 << 30))
}

#[derive(Serialize)]
struct DecomposeOutput {
    space_spec: String,
    group: Group,
    basis: Basis,
    out: PathBuf,
    counts: Vec<ict_core::artifact::DecompCount>,
    seconds: f64,
}

fn decompose(ctx: &Ctx, a: DecomposeArgs) -> CliResult {
    let spec = space_from(&a.space, ctx.group)?;
    let rank = spec.terms().iter().map(|t| t.rank()).max().unwrap_or(0);
    if rank > MAX_RANK && !a.force {
        let elem = if ctx.group == Group::SU2 { 16.0 } else { 8.0 };
        let bytes: f64 = spec.terms().iter().map(|t| (t.dim() as f64).powi(2) * elem).sum();
        return Err(usage(format!(
            "rank {rank} exceeds {MAX_RANK}: the path matrices alone take about {}; pass --force to continue",
            gib(bytes)
        )));
    }
    let filter = a
        .weights
        .as_ref()
        .map(|ws| ws.iter().map(|w| parse_weight(w)).collect::<Result<BTreeSet<_>, _>>())
        .transpose()?;
    let start = Instant::now();
    let mut writer = ContainerWriter::create(&a.out, decomposition_meta(&spec, ctx.basis))?;
    let counts = write_decomposition(&mut writer, &spec, ctx.basis, filter.as_ref(), a.materialize)?;
    writer.finish()?;
    let seconds = start.elapsed().as_secs_f64();
    if a.json {
        print_json(&DecomposeOutput {
            space_spec: render_space_spec(&spec),
            group: ctx.group,
            basis: ctx.basis,
            out: a.out,
            counts,
            seconds,
        });
    } else {
        out!(
            "space {}  ({}, {} basis)",
            render_space_spec(&spec),
            ctx.group,
            ctx.basis
        );
        for c in &counts {
            out!("  term {}  weight {:<5} x{}", c.term, c.irrep.to_string(), c.count);
        }
        let total: usize = counts.iter().map(|c| c.count).sum();
        let what = if a.materialize {
            "path matrices and dense projectors"
        } else {
            "path matrices"
        };
        out!("{total} {what} written to {} in {seconds:.3} s", a.out.display());
    }
    Ok(0)
}

fn basis_cmd(ctx: &Ctx, a: BasisArgs) -> CliResult {
    let vin = parse_spec(&a.input, ctx.group)?;
    let vout = parse_spec(&a.out_space, ctx.group)?;
    let start = Instant::now();
    let mut writer = ContainerWriter::create(&a.out, hom_meta(&vin, &vout, ctx.basis))?;
    let summary = write_hom(&mut writer, &vin, &vout, ctx.basis, a.dense)?;
    writer.finish()?;
    let seconds = start.elapsed().as_secs_f64();
    if a.json {
        print_json(&summary);
    } else {
        out!(
            "hom dimension {}  ({} -> {})",
            summary.hom_dimension,
            render_space_spec(&vin),
            render_space_spec(&vout)
        );
        for s in &summary.mix_shapes {
            out!("  weight {:<5} mix {}x{}", s.irrep.to_string(), s.rows, s.cols);
        }
        let form = if a.dense { "dense elements" } else { "factored" };
        out!("{form} written to {} in {seconds:.3} s", a.out.display());
    }
    Ok(0)
}

#[derive(Serialize)]
struct CorruptionReport {
    file: PathBuf,
    passed: bool,
    error: String,
}

fn verify(a: VerifyArgs) -> CliResult {
    let container = match store::load(&a.file) {
        Ok(c) => c,
        Err(Error::Store(e @ StoreError::Io { .. })) => return Err(Error::Store(e).into()),
        Err(e) => {
            print_json(&CorruptionReport {
                file: a.file,
                passed: false,
                error: e.to_string(),
            });
            return Ok(EXIT_CORRUPT);
        }
    };
    let opts = ContainerVerifyOptions {
        samples: a.samples,
        tolerance: a.tol,
        oracle: a.oracle,
        ..ContainerVerifyOptions::default()
    };
    let report = match verify_container(&container, &opts) {
        Ok(r) => r,
        Err(e @ Error::Store(_)) => {
            print_json(&CorruptionReport {
                file: a.file,
                passed: false,
                error: e.to_string(),
            });
            return Ok(EXIT_CORRUPT);
        }
        Err(e) => return Err(e.into()),
    };
    print_json(&report);
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

#[derive(Serialize)]
struct Multiplicity {
    weight: Weight,
    parity: ict_core::Parity,
    count: usize,
}

#[derive(Serialize)]
struct TermInfo {
    index: usize,
    factors: Vec<Weight>,
    parity: ict_core::Parity,
    rank: usize,
    dim: usize,
    n_paths: usize,
    multiplicities: Vec<Multiplicity>,
    paths: Vec<String>,
}

#[derive(Serialize)]
struct InfoOutput {
    space_spec: String,
    group: Group,
    dim: usize,
    n_paths: usize,
    terms: Vec<TermInfo>,
    end_dimension: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_space_spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hom_dimension: Option<u64>,
}

fn info(ctx: &Ctx, a: InfoArgs) -> CliResult {
    let spec = space_from(&a.space, ctx.group)?;
    let all = spec.paths();
    let terms: Vec<TermInfo> = spec
        .terms()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let paths: Vec<_> = all.iter().filter(|p| p.term_index == i).cloned().collect();
            let multiplicities = group_paths_by_terminal(&paths)
                .into_iter()
                .map(|(irrep, ps)| Multiplicity {
                    weight: irrep.l,
                    parity: irrep.p,
                    count: ps.len(),
                })
                .collect();
            TermInfo {
                index: i,
                factors: t.factors.clone(),
                parity: t.parity,
                rank: t.rank(),
                dim: t.dim(),
                n_paths: paths.len(),
                multiplicities,
                paths: paths.iter().map(ToString::to_string).collect(),
            }
        })
        .collect();
    let end = match spec.natural_rank() {
        Some(n) if ctx.group != Group::SU2 => end_dimension(n),
        _ => hom_dimension(&spec, &spec)?,
    };
    let out_space = a.out_space.as_ref().map(|s| parse_spec(s, ctx.group)).transpose()?;
    let hom = out_space.as_ref().map(|o| hom_dimension(&spec, o)).transpose()?;
    let out = InfoOutput {
        space_spec: render_space_spec(&spec),
        group: ctx.group,
        dim: spec.dim(),
        n_paths: all.len(),
        terms,
        end_dimension: end,
        out_space_spec: out_space.as_ref().map(render_space_spec),
        hom_dimension: hom,
    };
    if a.json {
        print_json(&out);
        return Ok(0);
    }
    out!("space {}  group {}  dim {}", out.space_spec, out.group, out.dim);
    for t in &out.terms {
        out!("term {}: rank {}, dim {}, {} paths", t.index, t.rank, t.dim, t.n_paths);
        let ms: Vec<String> = t
            .multiplicities
            .iter()
            .map(|m| format!("{}{}:{}", m.weight, m.parity, m.count))
            .collect();
        out!("  multiplicities {}", ms.join(" "));
        for p in &t.paths {
            out!("  {p}");
        }
    }
    out!("end dimension {}", out.end_dimension);
    if let (Some(o), Some(h)) = (&out.out_space_spec, out.hom_dimension) {
        out!("hom dimension to {o}: {h}");
    }
    Ok(0)
}

#[derive(Serialize)]
struct BenchRow<'a> {
    rank: usize,
    seconds: f64,
    n_paths: usize,
    peak_bytes_estimate: u64,
    threads: usize,
    host: &'a str,
}

#[derive(Serialize)]
struct BenchSummary {
    fit_ranks: Vec<usize>,
    slope: Option<f64>,
    r_squared: Option<f64>,
    oracle_rank: Option<usize>,
    oracle_seconds: Option<f64>,
    oracle_dimension: Option<usize>,
}

fn bench(a: BenchArgs) -> CliResult {
    if a.max_rank > MAX_RANK {
        return Err(usage(format!("--max-rank is limited to {MAX_RANK}")));
    }
    if a.min_rank == 0 || a.min_rank > a.max_rank {
        return Err(usage("need 1 <= --min-rank <= --max-rank"));
    }
    let mut records: Vec<BenchRecord> = Vec::new();
    let stdout = std::io::stdout();
    if !a.json {
        out!(
            "{:>4} {:>12} {:>8} {:>14} {:>7}",
            "rank",
            "seconds",
            "paths",
            "peak bytes",
            "ratio"
        );
    }
    for rank in a.min_rank..=a.max_rank {
        let r = bench_rank(rank)?;
        let mut out = stdout.lock();
        if a.json {
            let row = BenchRow {
                rank: r.rank,
                seconds: r.wall_seconds,
                n_paths: r.n_paths,
                peak_bytes_estimate: r.peak_bytes_estimate,
                threads: r.threads,
                host: &r.host,
            };
            let _ = writeln!(out, "{}", serde_json::to_string(&row).expect("row serializes"));
        } else {
            let ratio = records
                .last()
                .map_or(String::new(), |p| format!("{:.2}", r.wall_seconds / p.wall_seconds));
            let _ = writeln!(
                out,
                "{:>4} {:>12.6} {:>8} {:>14} {:>7}",
                r.rank, r.wall_seconds, r.n_paths, r.peak_bytes_estimate, ratio
            );
        }
        let _ = out.flush();
        records.push(r);
    }
    let fit_from = if a.max_rank >= 6 { 5 } else { 2 };
    let fit_set: Vec<BenchRecord> = records.iter().filter(|r| r.rank >= fit_from).cloned().collect();
    let fit = log_linear_fit(&fit_set);
    let oracle = (a.oracle_rank > 0)
        .then(|| oracle_baseline(a.oracle_rank))
        .transpose()?;
    let summary = BenchSummary {
        fit_ranks: fit_set.iter().map(|r| r.rank).collect(),
        slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
        oracle_rank: oracle.map(|_| a.oracle_rank),
        oracle_seconds: oracle.map(|o| o.0),
        oracle_dimension: oracle.map(|o| o.1),
    };
    if a.json {
        out!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    } else {
        if let Some(f) = fit {
            out!(
                "log-time fit over ranks {:?}: slope {:.3} per rank, R^2 {:.3}",
                summary.fit_ranks,
                f.slope,
                f.r_squared
            );
        }
        if let Some((s, d)) = oracle {
            out!(
                "brute-force commutant at rank {}: {s:.3} s, dimension {d}",
                a.oracle_rank
            );
        }
        if let Some(h) = records.first() {
            out!("host {}, {} threads", h.host, h.threads);
        }
    }
    Ok(0)
}

/// Linear map of `[-max|v|, max|v|]` onto `[0, 255]` with zero at 128.
fn pgm(m: &DMatrix<f64>) -> Vec<u8> {
    let (r, c) = m.shape();
    let peak = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out = format!("P5\n{c} {r}\n255\n").into_bytes();
    out.reserve(r * c);
    for i in 0..r {
        for j in 0..c {
            let px = if peak > 0.0 {
                (128.0 + 128.0 * m[(i, j)] / peak).round().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            out.push(px);
        }
    }
    out
}

fn render(a: RenderArgs) -> CliResult {
    let container = store::load(&a.file)?;
    let obj = container.get(&a.object).ok_or_else(|| {
        let names: Vec<&str> = container.objects.iter().map(|o| o.name.as_str()).take(8).collect();
        usage(format!(
            "no object `{}`; objects include {}",
            a.object,
            names.join(", ")
        ))
    })?;
    let (r, c) = obj.data.shape();
    let (r, c) = if a.projector { (r, r) } else { (r, c) };
    if r.saturating_mul(c) > RENDER_PIXEL_CAP {
        return Err(usage(format!("{r}x{c} image exceeds the {RENDER_PIXEL_CAP}-pixel cap")));
    }
    let m = obj.data.real();
    let m = if a.projector {
        if obj.kind != ObjectKind::PathMatrix {
            return Err(usage("--projector needs a path matrix object"));
        }
        &m * m.transpose()
    } else {
        m
    };
    write_file(&a.out, &pgm(&m))?;
    out!("{}x{} image written to {}", c, r, a.out.display());
    Ok(0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| {
        Failure::from(Error::Store(StoreError::Io {
            path: path.to_path_buf(),
            source: e,
        }))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_mapping() {
        let m = DMatrix::from_row_slice(1, 3, &[-2.0, 0.0, 2.0]);
        let img = pgm(&m);
        assert!(img.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(&img[img.len() - 3..], &[0, 128, 255]);
        let z = pgm(&DMatrix::zeros(2, 2));
        assert_eq!(&z[z.len() - 4..], &[128; 4]);
    }

    #[test]
    fn weights() {
        assert_eq!(parse_weight("3").ok(), Some(Weight::integer(3)));
        assert_eq!(parse_weight("1/2").ok(), Some(Weight::from_doubled(1)));
        assert!(parse_weight("x").is_err());
    }
}
