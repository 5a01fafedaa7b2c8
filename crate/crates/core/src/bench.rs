//! Timing of full decompositions, rank by rank.

use std::time::Instant;

use serde::Serialize;

use crate::cg::clear_cache;
use crate::error::Result;
use crate::group::Group;
use crate::oracle::{commutant_nullspace, OracleOptions};
use crate::pathmat::{map_term_path_matrices, Basis};
use crate::scheme::SpaceSpec;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub rank: usize,
    pub wall_seconds: f64,
    pub n_paths: usize,
    pub threads: usize,
    pub host: String,
    pub peak_bytes_estimate: u64,
}

pub fn host_fingerprint() -> String {
    let name = std::fs::read_to_string("/proc/sys/kernel/hostname")
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|_| "unknown".into());
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{name}/{}-{}/{cpus}cpu", std::env::consts::OS, std::env::consts::ARCH)
}

/// Rough upper bound on live memory while streaming: a couple of path
/// matrices per worker plus their contraction buffers.
pub fn peak_bytes_estimate(rank: usize, threads: usize) -> u64 {
    let dim = 3u64.pow(rank as u32);
    let widest = 2 * rank as u64 + 1;
    3 * 8 * dim * widest * threads.max(1) as u64
}

/// Builds every path matrix of the Cartesian rank-`rank` space from a cold
/// coefficient cache, dropping each one as soon as it is finished.
pub fn time_decomposition(rank: usize) -> Result<(f64, usize)> {
    let spec = SpaceSpec::natural_power(Group::O3, rank)?;
    clear_cache();
    let t = Instant::now();
    let cols = map_term_path_matrices(&spec, 0, Basis::Cartesian, None, |pm| Ok(pm.matrix.ncols()))?;
    let secs = t.elapsed().as_secs_f64();
    let total: usize = cols.iter().sum();
    if total != spec.dim() {
        return Err(crate::error::Error::Consistency(format!(
            "path matrices cover {total} of {} dimensions",
            spec.dim()
        )));
    }
    Ok((secs.max(f64::MIN_POSITIVE), cols.len()))
}

/// Median of three runs up to rank 6, a single run above.
pub fn bench_rank(rank: usize) -> Result<BenchRecord> {
    let runs = if rank <= 6 { 3 } else { 1 };
    let mut times = Vec::with_capacity(runs);
    let mut n_paths = 0;
    for _ in 0..runs {
        let (s, n) = time_decomposition(rank)?;
        times.push(s);
        n_paths = n;
    }
    times.sort_by(f64::total_cmp);
    let threads = rayon::current_num_threads();
    Ok(BenchRecord {
        rank,
        wall_seconds: times[runs / 2],
        n_paths,
        threads,
        host: host_fingerprint(),
        peak_bytes_estimate: peak_bytes_estimate(rank, threads),
    })
}

pub fn run_decomposition_bench(max_rank: usize) -> Result<Vec<BenchRecord>> {
    if max_rank > 9 {
        return Err(crate::error::Error::arg("benchmarks stop at rank 9"));
    }
    (1..=max_rank).map(bench_rank).collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(rank, ln seconds)`.
pub fn log_linear_fit(records: &[BenchRecord]) -> Option<LogFit> {
    if records.len() < 2 {
        return None;
    }
    let n = records.len() as f64;
    let xs: Vec<f64> = records.iter().map(|r| r.rank as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.wall_seconds.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Seconds the brute-force commutant solver needs for End of rank `n`.
pub fn oracle_baseline(rank: usize) -> Result<(f64, usize)> {
    let spec = SpaceSpec::natural_power(Group::O3, rank)?;
    let t = Instant::now();
    let c = commutant_nullspace(&spec, &spec, &OracleOptions::new(Group::O3))?;
    Ok((t.elapsed().as_secs_f64(), c.basis.len()))
}
