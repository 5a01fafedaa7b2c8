//! Orthogonal decompositions into irreducible components and their verification.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cg::Weight;
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, Parity, RepScalar};
use crate::linalg::max_abs;
use crate::pathmat::{apply_rep, map_term_path_matrices, rep_matrix, Basis, PathMatrix};
use crate::scheme::{Irrep, SpaceSpec};

/// Total number of dense entries `decompose` will materialize.
pub const DENSE_ENTRY_CAP: usize = 1 << 28;

/// `H = P̂ P̂ᵀ` for one path, kept factored unless materialized.
#[derive(Debug, Clone)]
pub struct Projector {
    pub term_index: usize,
    pub weight: Weight,
    /// 1-based position among the term's paths with the same terminal irrep.
    pub q: usize,
    pub parity: Parity,
    pub path_matrix: PathMatrix,
    pub dense: Option<DMatrix<f64>>,
}

impl Projector {
    pub fn from_path_matrix(pm: PathMatrix, q: usize) -> Self {
        Projector {
            term_index: pm.path.term_index,
            weight: pm.terminal(),
            q,
            parity: pm.path.parity,
            path_matrix: pm,
            dense: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.path_matrix.matrix.nrows()
    }

    pub fn irrep(&self) -> Irrep {
        Irrep {
            l: self.weight,
            p: self.parity,
        }
    }

    /// The dense matrix, computed on the fly when not materialized.
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.dense {
            Some(h) => h.clone(),
            None => {
                let p = &self.path_matrix.matrix;
                p * p.transpose()
            }
        }
    }

    pub fn materialize(&mut self) {
        if self.dense.is_none() {
            self.dense = Some(self.matrix());
        }
    }

    pub fn apply<T: RepScalar>(&self, v: &DMatrix<T>) -> DMatrix<T> {
        match &self.dense {
            Some(h) => h.map(T::from_real) * v,
            None => {
                let p = self.path_matrix.to_scalar::<T>();
                &p * (p.transpose() * v)
            }
        }
    }
}

/// One projector per path of every term, grouped by term.
pub fn decompose(
    spec: &SpaceSpec,
    weight_filter: Option<&BTreeSet<Weight>>,
    materialize: bool,
    basis: Basis,
) -> Result<Vec<Vec<Projector>>> {
    basis.check(spec.group())?;
    if materialize {
        let entries: usize = spec
            .terms()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let n = spec
                    .paths()
                    .iter()
                    .filter(|p| p.term_index == i)
                    .filter(|p| weight_filter.is_none_or(|f| f.contains(&p.terminal())))
                    .count();
                n.saturating_mul(t.dim().saturating_mul(t.dim()))
            })
            .fold(0usize, usize::saturating_add);
        if entries > DENSE_ENTRY_CAP {
            return Err(Error::Size(format!(
                "materializing would store {entries} entries (cap {DENSE_ENTRY_CAP}); \
                 use the factored form"
            )));
        }
    }
    let mut out = Vec::with_capacity(spec.terms().len());
    for t in 0..spec.terms().len() {
        let mats = map_term_path_matrices(spec, t, basis, weight_filter, Ok)?;
        let mut seen: BTreeMap<Irrep, usize> = BTreeMap::new();
        let mut projs: Vec<Projector> = mats
            .into_iter()
            .map(|pm| {
                let q = seen.entry(pm.path.terminal_irrep()).or_insert(0);
                *q += 1;
                Projector::from_path_matrix(pm, *q)
            })
            .collect();
        if materialize {
            projs.par_iter_mut().for_each(Projector::materialize);
        }
        out.push(projs);
    }
    Ok(out)
}

/// `H v` computed as `P̂ (P̂ᵀ v)` (or densely when materialized).
pub fn apply_projection<T: RepScalar>(proj: &Projector, v: &DVector<T>) -> Result<DVector<T>> {
    if v.len() != proj.dim() {
        return Err(Error::arg(format!(
            "vector has length {}, term has dimension {}",
            v.len(),
            proj.dim()
        )));
    }
    let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    Ok(DVector::from_column_slice(proj.apply(&m).as_slice()))
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Replaces the rank-dependent base tolerance.
    pub tolerance: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 20,
            seed: 0x1c7_5eed,
            tolerance: None,
        }
    }
}

/// Base residual tolerance for a term with `rank` factors: 1e-10 through
/// rank 6, one decade looser per rank above.
pub fn base_tolerance(rank: usize) -> f64 {
    1e-10 * 10f64.powi(rank.saturating_sub(6) as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub residual: f64,
    pub tolerance: f64,
    pub method: &'static str,
    pub passed: bool,
}

impl Check {
    pub(crate) fn new(residual: f64, tolerance: f64, method: &'static str) -> Self {
        Check {
            residual,
            tolerance,
            method,
            passed: residual.is_finite() && residual < tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub term_index: usize,
    pub rank: usize,
    pub dim: usize,
    pub projectors: usize,
    /// `None` when the projectors do not cover the whole term (weight filter).
    pub partition_of_identity: Option<Check>,
    pub annihilation: Check,
    pub idempotence: Check,
    pub symmetry: Check,
    pub trace: Check,
    pub equivariance: Check,
    pub parity: Option<Check>,
    pub numerical_rank: Option<bool>,
    pub samples: usize,
    pub passed: bool,
}

const EXACT_DIM: usize = 243;
const DENSE_PARTITION_DIM: usize = 2187;
const EIGEN_DIM: usize = 81;

/// Checks the defining properties of an orthogonal decomposition of one term.
pub fn verify_decomposition(spec: &SpaceSpec, projs: &[Projector], opts: &VerifyOptions) -> Result<VerifyReport> {
    let Some(first) = projs.first() else {
        return Err(Error::arg("no projectors to verify"));
    };
    let t = first.term_index;
    if projs.iter().any(|p| p.term_index != t) {
        return Err(Error::arg("projectors come from different terms"));
    }
    let term = spec
        .terms()
        .get(t)
        .ok_or_else(|| Error::arg(format!("space has no term {t}")))?;
    let dim = term.dim();
    if projs.iter().any(|p| p.dim() != dim) {
        return Err(Error::arg("projector dimension does not match the term"));
    }
    let rank = term.rank();
    let base = opts.tolerance.unwrap_or_else(|| base_tolerance(rank));
    let all_dense = projs.iter().all(|p| p.dense.is_some());
    let exact = all_dense || dim <= EXACT_DIM;
    let hs: Option<Vec<DMatrix<f64>>> = exact.then(|| projs.par_iter().map(Projector::matrix).collect());

    let pairs: Vec<(usize, usize)> = (0..projs.len())
        .flat_map(|i| (i + 1..projs.len()).map(move |j| (i, j)))
        .collect();
    let annihilation = match &hs {
        Some(hs) => Check::new(
            pairs
                .par_iter()
                .map(|&(i, j)| max_abs(&(&hs[i] * &hs[j])).max(max_abs(&(&hs[j] * &hs[i]))))
                .reduce(|| 0.0, f64::max),
            base,
            "dense",
        ),
        None => Check::new(
            pairs
                .par_iter()
                .map(|&(i, j)| {
                    let a = &projs[i].path_matrix.matrix;
                    let b = &projs[j].path_matrix.matrix;
                    (a.transpose() * b).norm()
                })
                .reduce(|| 0.0, f64::max),
            base,
            "bound",
        ),
    };

    let idempotence = match &hs {
        Some(hs) => Check::new(
            hs.par_iter().map(|h| max_abs(&(h * h - h))).reduce(|| 0.0, f64::max),
            base.max(1e-9),
            "dense",
        ),
        None => Check::new(
            projs
                .par_iter()
                .map(|p| {
                    let m = &p.path_matrix.matrix;
                    let n = m.ncols();
                    (m.transpose() * m - DMatrix::identity(n, n)).norm()
                })
                .reduce(|| 0.0, f64::max),
            base.max(1e-9),
            "bound",
        ),
    };

    let symmetry = match &hs {
        Some(hs) => Check::new(
            hs.iter().map(|h| max_abs(&(h - h.transpose()))).fold(0.0, f64::max),
            1e-12,
            "dense",
        ),
        None => Check::new(0.0, 1e-12, "structural"),
    };

    let trace = Check::new(
        projs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let tr = match &hs {
                    Some(hs) => hs[k].trace(),
                    None => p.path_matrix.matrix.norm_squared(),
                };
                (tr - p.weight.dim() as f64).abs()
            })
            .fold(0.0, f64::max),
        1e-8,
        if hs.is_some() { "dense" } else { "frobenius" },
    );

    let covered: usize = projs.iter().map(|p| p.weight.dim()).sum();
    let partition_of_identity = (covered == dim).then(|| {
        let part_tol = if rank <= 6 { base } else { base.max(1e-8) };
        if let Some(hs) = &hs {
            let mut sum = DMatrix::<f64>::identity(dim, dim) * -1.0;
            for h in hs {
                sum += h;
            }
            Check::new(max_abs(&sum), part_tol, "dense")
        } else if dim <= DENSE_PARTITION_DIM {
            let d = stacked(projs);
            let resid = &d * d.transpose() - DMatrix::identity(dim, dim);
            Check::new(max_abs(&resid), part_tol, "dense")
        } else {
            let d = stacked(projs);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc01);
            let cols: Vec<usize> = (0..64).map(|_| rng.random_range(0..dim)).collect();
            let e = DMatrix::from_fn(dim, cols.len(), |r, c| if r == cols[c] { 1.0 } else { 0.0 });
            let resid = &d * (d.transpose() * &e) - e;
            Check::new(max_abs(&resid), part_tol, "spot")
        }
    });

    let (equivariance, parity) = match spec.group() {
        Group::SU2 => (equivariance::<Complex64>(spec, projs, hs.as_deref(), opts, base)?, None),
        g => {
            let eq = equivariance::<f64>(spec, projs, hs.as_deref(), opts, base)?;
            let parity = if g.has_parity() {
                let inv = VerifyOptions {
                    samples: 1,
                    ..opts.clone()
                };
                Some(commutator::<f64>(
                    spec,
                    projs,
                    hs.as_deref(),
                    &[GroupElement::inversion()],
                    &inv,
                    base.max(1e-10),
                )?)
            } else {
                None
            };
            (eq, parity)
        }
    };

    let numerical_rank = (dim <= EIGEN_DIM).then(|| {
        projs.iter().enumerate().all(|(k, p)| {
            let h = match &hs {
                Some(hs) => hs[k].clone(),
                None => p.matrix(),
            };
            let sym = (&h + h.transpose()) * 0.5;
            let n = sym.symmetric_eigenvalues().iter().filter(|&&v| v > 0.5).count();
            n == p.weight.dim()
        })
    });

    let passed = annihilation.passed
        && idempotence.passed
        && symmetry.passed
        && trace.passed
        && equivariance.passed
        && partition_of_identity.as_ref().is_none_or(|c| c.passed)
        && parity.as_ref().is_none_or(|c| c.passed)
        && numerical_rank.unwrap_or(true);
    Ok(VerifyReport {
        term_index: t,
        rank,
        dim,
        projectors: projs.len(),
        partition_of_identity,
        annihilation,
        idempotence,
        symmetry,
        trace,
        equivariance,
        parity,
        numerical_rank,
        samples: opts.samples,
        passed,
    })
}

fn stacked(projs: &[Projector]) -> DMatrix<f64> {
    let refs: Vec<&DMatrix<f64>> = projs.iter().map(|p| &p.path_matrix.matrix).collect();
    crate::linalg::hstack(&refs)
}

/// A single-term space holding just the term of `projs`.
fn term_space(spec: &SpaceSpec, t: usize) -> Result<SpaceSpec> {
    SpaceSpec::new(spec.group(), vec![spec.terms()[t].clone()])
}

fn equivariance<T: RepScalar>(
    spec: &SpaceSpec,
    projs: &[Projector],
    hs: Option<&[DMatrix<f64>]>,
    opts: &VerifyOptions,
    base: f64,
) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gs = GroupElement::random_batch(spec.group(), &mut rng, opts.samples);
    commutator::<T>(spec, projs, hs, &gs, opts, base.max(1e-9))
}

fn commutator<T: RepScalar>(
    spec: &SpaceSpec,
    projs: &[Projector],
    hs: Option<&[DMatrix<f64>]>,
    gs: &[GroupElement],
    opts: &VerifyOptions,
    tol: f64,
) -> Result<Check> {
    let t = projs[0].term_index;
    let basis = projs[0].path_matrix.basis;
    let space = term_space(spec, t)?;
    let dim = space.dim();
    if let Some(hs) = hs {
        let hs: Vec<DMatrix<T>> = hs.iter().map(|h| h.map(T::from_real)).collect();
        let mut worst = 0.0f64;
        for g in gs {
            let rho = rep_matrix::<T>(&space, g, basis)?;
            let r = hs
                .par_iter()
                .map(|h| max_abs(&(h * &rho - &rho * h)))
                .reduce(|| 0.0, f64::max);
            worst = worst.max(r);
        }
        return Ok(Check::new(worst, tol, "dense"));
    }
    // Matrix-free on a handful of random vectors.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x7ec);
    let x = DMatrix::<T>::from_fn(dim, 10, |_, _| T::from_real(rng.sample(StandardNormal)));
    let mut worst = 0.0f64;
    for g in gs {
        let rx = apply_rep::<T>(&space, g, basis, &x)?;
        let r = projs
            .par_iter()
            .map(|p| {
                let lhs = p.apply(&rx);
                let rhs = apply_rep::<T>(&space, g, basis, &p.apply(&x))?;
                Ok(max_abs(&(lhs - rhs)))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        worst = worst.max(r);
    }
    Ok(Check::new(worst, tol, "matrix-free"))
}
