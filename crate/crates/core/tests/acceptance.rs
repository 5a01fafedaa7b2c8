//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any fail.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ict_core::artifact::{decomposition_meta, hom_meta, write_decomposition, write_hom};
use ict_core::bench::{bench_rank, log_linear_fit};
use ict_core::equimap::{basis_commutator_residual, hom_basis_with, HomOptions};
use ict_core::linalg::max_abs;
use ict_core::oracle::{
    classical_rank2_projectors, commutant_nullspace, compare_spans, path_count_recursive, OracleOptions,
};
use ict_core::pathmat::space_path_matrices;
use ict_core::store::{self, ContainerWriter, ObjectKind, StoredObject};
use ict_core::{
    apply_map, end_basis, end_dimension, enumerate_paths, factored_map, hom_basis, hom_dimension, multiplicity,
    parse_space_spec, rep_matrix, Basis, Group, GroupElement, Parity, PathMatrix, SpaceSpec, Term, Weight,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rank(n: usize) -> SpaceSpec {
    SpaceSpec::natural_power(Group::O3, n).unwrap()
}

fn w(l: u32) -> Weight {
    Weight::integer(l)
}

fn path_matrices(spec: &SpaceSpec) -> Result<Vec<PathMatrix>, String> {
    space_path_matrices(spec, Basis::default_for(spec.group()), None).map_err(e2s)
}

/// Columns of every path matrix side by side.
fn stack(pms: &[PathMatrix]) -> DMatrix<f64> {
    let refs: Vec<&DMatrix<f64>> = pms.iter().map(|p| &p.matrix).collect();
    ict_core::linalg::hstack(&refs)
}

/// `max_{i<j} max |H_i H_j|` with `H_i H_j = P_i (P_iᵀ P_j) P_jᵀ`, and
/// `max |Σ H − I|` from the stacked columns.
fn partition_and_annihilation(pms: &[PathMatrix]) -> (f64, f64) {
    use rayon::prelude::*;
    let d = stack(pms);
    let n = d.nrows();
    let part = max_abs(&(&d * d.transpose() - DMatrix::<f64>::identity(n, n)));
    let ann = (0..pms.len())
        .into_par_iter()
        .map(|i| {
            let pi = &pms[i].matrix;
            let mut worst: f64 = 0.0;
            for pj in &pms[i + 1..] {
                let g = pi.transpose() * &pj.matrix;
                let left = pi * g;
                worst = worst.max(max_abs(&(left * pj.matrix.transpose())));
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    (part, ann)
}

/// `max |ρ(g) H − H ρ(g)|` over the projectors of one term, complex-safe.
fn projector_commutator<T: ict_core::group::RepScalar>(rho: &DMatrix<T>, pms: &[PathMatrix]) -> f64 {
    pms.iter()
        .map(|pm| {
            let p = pm.to_scalar::<T>();
            let a = rho * &p;
            let c = rho.transpose() * &p;
            max_abs(&(a * p.transpose() - &p * c.transpose()))
        })
        .fold(0.0, f64::max)
}

fn c1_golden() -> Outcome {
    let t = Instant::now();
    let s = rank(2);
    let mut objs: Vec<StoredObject> = Vec::new();
    write_decomposition(&mut objs, &s, Basis::Cartesian, None, true).map_err(e2s)?;
    let projs: Vec<DMatrix<f64>> = objs
        .iter()
        .filter(|o| o.kind == ObjectKind::ProjectorDense)
        .map(|o| o.data.real())
        .collect();
    let gold = classical_rank2_projectors();
    ensure(projs.len() == 3, format!("{} projectors", projs.len()))?;
    let err = projs
        .iter()
        .zip(&gold)
        .map(|(a, b)| max_abs(&(a - b)))
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    ensure(err < 1e-12, format!("max entry error {err:.2e}"))?;
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok(format!("max entry error {err:.1e}"))
}

fn c2_partition() -> Outcome {
    let t = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    for n in 2..=6 {
        let pms = path_matrices(&rank(n))?;
        let (p, a) = partition_and_annihilation(&pms);
        ensure(p < 1e-10, format!("rank {n}: |ΣH - I| = {p:.2e}"))?;
        ensure(a < 1e-10, format!("rank {n}: |H_i H_j| = {a:.2e}"))?;
        worst = (worst.0.max(p), worst.1.max(a));
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.1} s"))?;
    Ok(format!("partition {:.1e}, annihilation {:.1e}", worst.0, worst.1))
}

fn c3_equivariance() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gs = GroupElement::random_batch(Group::O3, &mut rng, 20);
    let inversions = gs.iter().filter(|g| g.det_sign() < 0.0).count();
    ensure(inversions >= 5, format!("only {inversions} samples with inversion"))?;
    let (mut wp, mut wb) = (0.0f64, 0.0f64);
    let mut elements = 0;
    for n in 2..=5 {
        let s = rank(n);
        let pms = path_matrices(&s)?;
        let basis = hom_basis(&s, &s).map_err(e2s)?;
        elements += basis.len();
        for g in &gs {
            let rho = rep_matrix::<f64>(&s, g, Basis::Cartesian).map_err(e2s)?;
            wp = wp.max(projector_commutator(&rho, &pms));
            wb = wb.max(basis_commutator_residual::<f64>(&s, &s, &basis, g).map_err(e2s)?);
        }
    }
    ensure(wp < 1e-9, format!("projector commutator {wp:.2e}"))?;
    ensure(wb < 1e-9, format!("basis commutator {wb:.2e}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 300.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "projectors {wp:.1e}, {elements} basis elements {wb:.1e}, {inversions}/20 with inversion"
    ))
}

fn c4_multiplicity() -> Outcome {
    let t = Instant::now();
    for n in 1..=9usize {
        let mut total: u64 = 0;
        for l in 0..=n as u32 {
            let f = multiplicity(n, w(l));
            let r = path_count_recursive(n, w(l), Group::O3);
            ensure(f == r, format!("N({n};{l}) formula {f}, recursion {r}"))?;
            total += (2 * u64::from(l) + 1) * f;
        }
        ensure(total == 3u64.pow(n as u32), format!("rank {n}: Σ(2l+1)N = {total}"))?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.3} s"))?;
    Ok("n ≤ 9, all l".into())
}

fn c5_end_dimension() -> Outcome {
    ensure(
        end_dimension(5) == 603,
        format!("end_dimension(5) = {}", end_dimension(5)),
    )?;
    let mut counts = Vec::new();
    for n in 1..=5 {
        let b = end_basis(n, Group::O3).map_err(e2s)?;
        ensure(
            b.len() as u64 == end_dimension(n),
            format!("rank {n}: {} elements, formula {}", b.len(), end_dimension(n)),
        )?;
        counts.push(b.len());
    }
    Ok(format!("counts {counts:?}"))
}

fn worked_example() -> (SpaceSpec, SpaceSpec) {
    (
        parse_space_spec("(2x2x2)-+(1x3)-", Group::O3).unwrap(),
        parse_space_spec("(3x4)-", Group::O3).unwrap(),
    )
}

fn c6_worked_example() -> Outcome {
    let t = Instant::now();
    let (vin, vout) = worked_example();
    let counts: Vec<usize> = vin
        .terms()
        .iter()
        .chain(vout.terms())
        .map(|t| enumerate_paths(t).len())
        .collect();
    ensure(counts == vec![19, 3, 7], format!("path counts {counts:?}"))?;
    let basis = hom_basis(&vin, &vout).map_err(e2s)?;
    let weights: BTreeSet<Weight> = basis.iter().map(|e| e.irrep.l).collect();
    ensure(
        !weights.contains(&w(0)) && !weights.contains(&w(7)),
        "weights 0 or 7 present",
    )?;
    let hd = hom_dimension(&vin, &vout).map_err(e2s)?;
    ensure(
        hd == 21 && basis.len() == 21,
        format!("hom dimension {hd}, basis {}", basis.len()),
    )?;
    let mut c = commutant_nullspace(&vin, &vout, &OracleOptions::new(Group::O3)).map_err(e2s)?;
    ensure(c.basis.len() == 21, format!("oracle nullity {}", c.basis.len()))?;
    let ours: Vec<DMatrix<Complex64>> = basis
        .iter()
        .map(|e| e.dense().map(|v| Complex64::new(v, 0.0)))
        .collect();
    let angle = compare_spans(&mut c, &ours);
    ensure(angle < 1e-7, format!("principal angle {angle:.2e}"))?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "paths 19/3/7, dimension 21 = oracle nullity, max angle {angle:.1e}"
    ))
}

fn c7_parity_barrier() -> Outcome {
    for a in 1..=6 {
        for b in 1..=6 {
            let d = hom_dimension(&rank(a), &rank(b)).map_err(e2s)?;
            if (a + b) % 2 == 1 {
                ensure(d == 0, format!("hom(R3^{a}, R3^{b}) = {d}"))?;
            } else {
                ensure(d > 0, format!("hom(R3^{a}, R3^{b}) = 0"))?;
            }
        }
    }
    let c = commutant_nullspace(&rank(2), &rank(3), &OracleOptions::new(Group::O3)).map_err(e2s)?;
    ensure(c.basis.is_empty(), format!("oracle nullity {}", c.basis.len()))?;
    Ok("opposite parities give 0 for ranks ≤ 6; oracle nullity 0 on 2→3".into())
}

fn gram_residual(ms: &[DMatrix<f64>]) -> (f64, f64) {
    let mut off: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for i in 0..ms.len() {
        norm = norm.max((ms[i].norm() - 1.0).abs());
        for j in 0..i {
            off = off.max(ms[i].dot(&ms[j]).abs());
        }
    }
    (off, norm)
}

fn c8_frobenius() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    let mut sets: Vec<(String, Vec<DMatrix<f64>>)> = Vec::new();
    for n in 1..=4 {
        let b = end_basis(n, Group::O3).map_err(e2s)?;
        sets.push((format!("End rank {n}"), b.iter().map(|e| e.dense()).collect()));
    }
    let (vin, vout) = worked_example();
    let b = hom_basis(&vin, &vout).map_err(e2s)?;
    sets.push(("worked example".into(), b.iter().map(|e| e.dense()).collect()));
    for (name, ms) in &sets {
        let (off, norm) = gram_residual(ms);
        ensure(off < 1e-10, format!("{name}: |<B_i,B_j>| = {off:.2e}"))?;
        ensure(norm < 1e-10, format!("{name}: |‖B‖ - 1| = {norm:.2e}"))?;
        worst = (worst.0.max(off), worst.1.max(norm));
    }
    Ok(format!("off-diagonal {:.1e}, norm {:.1e}", worst.0, worst.1))
}

fn c9_columns() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=7 {
        for basis in [Basis::Cartesian, Basis::Spherical] {
            let pms = space_path_matrices(&rank(n), basis, None).map_err(e2s)?;
            let d = stack(&pms);
            let k = d.ncols();
            let r = max_abs(&(d.transpose() * &d - DMatrix::<f64>::identity(k, k)));
            ensure(r < 1e-11, format!("rank {n} {basis}: {r:.2e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!(
        "max |PᵢᵀPⱼ - δᵢⱼI| = {worst:.1e} (both bases, {:.1} s)",
        t.elapsed().as_secs_f64()
    ))
}

fn c10_su2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gs = GroupElement::random_batch(Group::SU2, &mut rng, 20);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for n in 1..=8 {
        let s = SpaceSpec::natural_power(Group::SU2, n).map_err(e2s)?;
        let pms = path_matrices(&s)?;
        let cols: usize = pms.iter().map(|p| p.matrix.ncols()).sum();
        ensure(cols == 1 << n, format!("n = {n}: path dimensions sum to {cols}"))?;
        let (p, a) = partition_and_annihilation(&pms);
        let mut e: f64 = 0.0;
        for g in &gs {
            let rho = rep_matrix::<Complex64>(&s, g, Basis::Spherical).map_err(e2s)?;
            e = e.max(projector_commutator(&rho, &pms));
        }
        ensure(
            p < 1e-9 && a < 1e-9 && e < 1e-9,
            format!("n = {n}: {p:.1e} {a:.1e} {e:.1e}"),
        )?;
        worst = (worst.0.max(p), worst.1.max(a), worst.2.max(e));
    }
    Ok(format!(
        "partition {:.1e}, annihilation {:.1e}, equivariance {:.1e}",
        worst.0, worst.1, worst.2
    ))
}

fn c11_performance() -> Outcome {
    let mut records = Vec::new();
    for n in 5..=9 {
        records.push(bench_rank(n).map_err(e2s)?);
    }
    let secs = |n: usize| records.iter().find(|r| r.rank == n).unwrap().wall_seconds;
    ensure(secs(6) <= 60.0, format!("rank 6 took {:.1} s", secs(6)))?;
    ensure(secs(8) <= 600.0, format!("rank 8 took {:.1} s", secs(8)))?;
    ensure(secs(9) <= 7200.0, format!("rank 9 took {:.1} s", secs(9)))?;
    let fit = log_linear_fit(&records[..4]).ok_or("fit failed")?;
    ensure(fit.slope > 0.0, format!("slope {:.3}", fit.slope))?;
    ensure(fit.r_squared > 0.8, format!("R² {:.3}", fit.r_squared))?;
    Ok(format!(
        "rank 6 {:.3} s, rank 8 {:.3} s, rank 9 {:.2} s; ranks 5-8 slope {:.2}, R² {:.3} ({} threads)",
        secs(6),
        secs(8),
        secs(9),
        fit.slope,
        fit.r_squared,
        records[0].threads
    ))
}

fn generate(threads: usize) -> Result<(Vec<u8>, Vec<u8>), String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(e2s)?;
    pool.install(|| {
        let s = rank(5);
        let mut a = Vec::new();
        write_decomposition(&mut a, &s, Basis::Cartesian, None, true).map_err(e2s)?;
        let a = store::to_bytes(&decomposition_meta(&s, Basis::Cartesian), &a).map_err(e2s)?;
        let (vin, vout) = worked_example();
        let mut b = Vec::new();
        write_hom(&mut b, &vin, &vout, Basis::Cartesian, true).map_err(e2s)?;
        let b = store::to_bytes(&hom_meta(&vin, &vout, Basis::Cartesian), &b).map_err(e2s)?;
        Ok((a, b))
    })
}

fn c12_determinism() -> Outcome {
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let reference = generate(1)?;
    for t in [4, max] {
        let again = generate(t)?;
        ensure(
            again.0 == reference.0,
            format!("decomposition bytes differ with {t} threads"),
        )?;
        ensure(again.1 == reference.1, format!("basis bytes differ with {t} threads"))?;
    }
    let dir = tempfile::tempdir().map_err(e2s)?;
    let file = dir.path().join("r5.ictb");
    let s = rank(5);
    let mut writer = ContainerWriter::create(&file, decomposition_meta(&s, Basis::Cartesian)).map_err(e2s)?;
    write_decomposition(&mut writer, &s, Basis::Cartesian, None, true).map_err(e2s)?;
    writer.finish().map_err(e2s)?;
    let on_disk = std::fs::read(&file).map_err(e2s)?;
    ensure(on_disk == reference.0, "streamed file differs from in-memory bytes")?;
    let loaded = store::load(&file).map_err(e2s)?;
    let again = store::to_bytes(&loaded.meta, &loaded.objects).map_err(e2s)?;
    ensure(again == on_disk, "load/save is not bit-identical")?;
    Ok(format!(
        "{} + {} bytes identical for 1, 4 and {max} (all) threads; load/save bit-identical",
        reference.0.len(),
        reference.1.len()
    ))
}

fn random_spec(rng: &mut ChaCha8Rng) -> SpaceSpec {
    loop {
        let n_terms = rng.random_range(1..=2);
        let terms: Vec<Term> = (0..n_terms)
            .map(|_| {
                let k = rng.random_range(1..=3);
                let fs = (0..k).map(|_| w(rng.random_range(0..=3))).collect();
                let p = if rng.random::<bool>() {
                    Parity::Odd
                } else {
                    Parity::Even
                };
                Term::new(fs, p)
            })
            .collect();
        let s = SpaceSpec::new(Group::O3, terms).unwrap();
        if s.dim() <= 500 {
            return s;
        }
    }
}

fn c13_factored_dense() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut coeffs = 0;
    while done < 50 {
        let vin = random_spec(&mut rng);
        let vout = random_spec(&mut rng);
        if hom_dimension(&vin, &vout).map_err(e2s)? == 0 {
            continue;
        }
        let basis = hom_basis_with(&vin, &vout, &HomOptions::new(Basis::Cartesian)).map_err(e2s)?;
        let mut f = factored_map(&vin, &vout, Basis::Cartesian).map_err(e2s)?;
        let vals: Vec<f64> = (0..f.n_coefficients()).map(|_| rng.sample(StandardNormal)).collect();
        f.set_mix_flat(&vals).map_err(e2s)?;
        let mut dense = DMatrix::<f64>::zeros(vout.dim(), vin.dim());
        for (e, c) in basis.iter().zip(f.basis_coefficients()) {
            dense += e.dense() * c;
        }
        let v = DVector::from_fn(vin.dim(), |_, _| rng.sample(StandardNormal));
        let err = (apply_map(&f, &v).map_err(e2s)? - &dense * &v).norm() / v.norm();
        ensure(
            err < 1e-10,
            format!("{} -> {}: relative error {err:.2e}", vin.dim(), vout.dim()),
        )?;
        worst = worst.max(err);
        coeffs += vals.len();
        done += 1;
    }
    Ok(format!("50 triples, {coeffs} coefficients, max |Δ|/|v| = {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("rank-2 golden equality", c1_golden),
        ("partition and annihilation, ranks 2-6", c2_partition),
        (
            "equivariance of projectors and basis elements, ranks 2-5",
            c3_equivariance,
        ),
        ("multiplicity formula vs recursion", c4_multiplicity),
        ("End dimensions and the count 603", c5_end_dimension),
        ("worked Hom example", c6_worked_example),
        ("parity barrier", c7_parity_barrier),
        ("Frobenius orthonormality", c8_frobenius),
        ("path matrix column orthonormality through rank 7", c9_columns),
        ("SU(2) spinor products n <= 8", c10_su2),
        ("performance trend", c11_performance),
        ("round trip and thread determinism", c12_determinism),
        ("factored and dense maps agree", c13_factored_dense),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
