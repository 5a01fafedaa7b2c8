//! Brute-force references that share no code path with the CG construction:
//! the commutant of sampled group elements solved by SVD, the textbook
//! rank-2 projectors, and path counting by recursion.
//!
//! Representations here come from exponentiating angular-momentum generators
//! in the `|l m>` basis, then changing to the working basis.

use std::collections::HashMap;

use nalgebra::{DMatrix, Rotation3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cg::{complex_to_real_basis, Weight};
use crate::error::{Error, Result};
use crate::group::{cartesian_to_spherical, Group, GroupElement};
use crate::linalg::{kron_all, max_abs};
use crate::pathmat::Basis;
use crate::scheme::{same_group, SpaceSpec};

type C = Complex64;

/// Default cap on `dim(vin)·dim(vout)`.
pub const DEFAULT_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub samples: usize,
    pub seed: u64,
    pub cap: usize,
    pub basis: Basis,
}

impl OracleOptions {
    pub fn new(group: Group) -> Self {
        OracleOptions {
            samples: 8,
            seed: 0x0ac1e,
            cap: DEFAULT_CAP,
            basis: Basis::default_for(group),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OracleReport {
    pub computed_dimension: usize,
    /// Radians, in `[0, π/2]`. Filled by [`compare_spans`].
    pub principal_angles: Vec<f64>,
    /// Commutator residual of the returned basis on fresh samples.
    pub residual_norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Commutant {
    /// Frobenius-orthonormal `dim(vout) × dim(vin)` matrices in the working basis.
    pub basis: Vec<DMatrix<C>>,
    pub report: OracleReport,
}

/// Ladder-operator generators `(Jx, Jy, Jz)` in ascending `m` order.
fn generators(l: Weight) -> [DMatrix<C>; 3] {
    let n = l.dim();
    let j = l.value();
    let mut jp = DMatrix::<C>::zeros(n, n);
    for k in 0..n - 1 {
        let m = -j + k as f64;
        jp[(k + 1, k)] = C::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * C::new(0.5, 0.0);
    let jy = (&jp - &jm) * C::new(0.0, -0.5);
    let jz = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |k, _| C::new(-j + k as f64, 0.0)));
    [jx, jy, jz]
}

/// `θ n` with `D(g) = exp(-i θ n·J)`.
fn rotation_vector(g: &GroupElement) -> [f64; 3] {
    match g {
        GroupElement::Orthogonal(_) => {
            let r = g.rotation().unwrap();
            let v = Rotation3::from_matrix_unchecked(r).scaled_axis();
            [v.x, v.y, v.z]
        }
        GroupElement::Unitary(u) => {
            let c = (u[(0, 0)] + u[(1, 1)]).re / 2.0;
            let a00 = C::i() * (u[(0, 0)] - c);
            let a01 = C::i() * u[(0, 1)];
            let s = [a01.re, a01.im, -a00.re];
            let sn = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
            if sn < 1e-300 {
                return [0.0; 3];
            }
            let theta = 2.0 * sn.atan2(c);
            [theta * s[0] / sn, theta * s[1] / sn, theta * s[2] / sn]
        }
    }
}

fn d_complex(l: Weight, v: &[f64; 3]) -> DMatrix<C> {
    let [jx, jy, jz] = generators(l);
    let h = jx * C::new(v[0], 0.0) + jy * C::new(v[1], 0.0) + jz * C::new(v[2], 0.0);
    (h * C::new(0.0, -1.0)).exp()
}

/// Change of basis `W` with `D_work = W D_complex Wᴴ` for one factor.
fn working_map(group: Group, basis: Basis, l: Weight) -> Result<DMatrix<C>> {
    if group == Group::SU2 {
        return Ok(DMatrix::identity(l.dim(), l.dim()));
    }
    let ubar = complex_to_real_basis(l)?.map(|z| z.conj());
    if basis == Basis::Cartesian && l == Weight::integer(1) {
        let b = cartesian_to_spherical();
        let bt = DMatrix::from_fn(3, 3, |i, j| C::new(b[(j, i)], 0.0));
        return Ok(bt * ubar);
    }
    Ok(ubar)
}

struct TermData {
    dim: usize,
    factors: Vec<Weight>,
    /// Doubled total `m` of every row in the `|l m>` product basis.
    total_m: Vec<i64>,
    parity_sign: f64,
    w: DMatrix<C>,
}

fn term_data(spec: &SpaceSpec, basis: Basis) -> Result<Vec<TermData>> {
    spec.terms()
        .iter()
        .map(|t| {
            let dim = t.dim();
            let total_m = (0..dim)
                .map(|r| {
                    let mut rest = r;
                    let mut m = 0i64;
                    for f in &t.factors {
                        let d = f.dim();
                        m += 2 * (rest % d) as i64 - f.doubled() as i64;
                        rest /= d;
                    }
                    m
                })
                .collect();
            let ws = t
                .factors
                .iter()
                .map(|&f| working_map(spec.group(), basis, f))
                .collect::<Result<Vec<_>>>()?;
            Ok(TermData {
                dim,
                factors: t.factors.clone(),
                total_m,
                parity_sign: t.parity.sign(),
                w: kron_all(&ws),
            })
        })
        .collect()
}

/// Complex-basis term representation with parity applied.
fn term_rep(t: &TermData, g: &GroupElement, group: Group, cache: &mut HashMap<u32, DMatrix<C>>) -> DMatrix<C> {
    let v = rotation_vector(g);
    let fs: Vec<DMatrix<C>> = t
        .factors
        .iter()
        .map(|f| cache.entry(f.doubled()).or_insert_with(|| d_complex(*f, &v)).clone())
        .collect();
    let chi = if group.has_parity() && g.det_sign() < 0.0 {
        t.parity_sign
    } else {
        1.0
    };
    kron_all(&fs) * C::new(chi, 0.0)
}

/// Working-basis representation of a whole space, for residual checks.
pub fn oracle_rep(spec: &SpaceSpec, g: &GroupElement, basis: Basis) -> Result<DMatrix<C>> {
    basis.check(spec.group())?;
    let terms = term_data(spec, basis)?;
    let mut cache = HashMap::new();
    let n = spec.dim();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for t in &terms {
        let d = &t.w * term_rep(t, g, spec.group(), &mut cache) * t.w.adjoint();
        out.view_mut((off, off), (t.dim, t.dim)).copy_from(&d);
        off += t.dim;
    }
    Ok(out)
}

const NULL_REL: f64 = 1e-8;
const MIN_GAP: f64 = 1e4;

/// Orthonormal basis of `{M : ρ_out(g) M = M ρ_in(g)}` over sampled `g`.
pub fn commutant_nullspace(vin: &SpaceSpec, vout: &SpaceSpec, opts: &OracleOptions) -> Result<Commutant> {
    same_group(vin, vout)?;
    let group = vin.group();
    opts.basis.check(group)?;
    if opts.samples < 8 {
        return Err(Error::arg("the oracle needs at least 8 samples"));
    }
    let size = vin.dim().saturating_mul(vout.dim());
    if size > opts.cap {
        return Err(Error::Size(format!(
            "dim(vin)·dim(vout) = {size} exceeds the oracle cap {}",
            opts.cap
        )));
    }
    let tin = term_data(vin, opts.basis)?;
    let tout = term_data(vout, opts.basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let gs = GroupElement::random_batch(group, &mut rng, opts.samples);

    let mut in_cache: Vec<HashMap<u32, DMatrix<C>>> = vec![HashMap::new(); gs.len()];
    let mut out_cache: Vec<HashMap<u32, DMatrix<C>>> = vec![HashMap::new(); gs.len()];
    let mut basis = Vec::new();
    let (mut row_off, mut col_off);
    row_off = 0;
    for to in &tout {
        col_off = 0;
        for ti in &tin {
            // Unknowns with equal total m; everything else is forced to zero by
            // rotations about the z axis.
            let support: Vec<(usize, usize)> = (0..to.dim)
                .flat_map(|a| (0..ti.dim).map(move |b| (a, b)))
                .filter(|&(a, b)| to.total_m[a] == ti.total_m[b])
                .collect();
            if !support.is_empty() {
                let mut null = DMatrix::<C>::identity(support.len(), support.len());
                for (k, g) in gs.iter().enumerate() {
                    if null.ncols() == 0 {
                        break;
                    }
                    let a = term_rep(to, g, group, &mut out_cache[k]);
                    let b = term_rep(ti, g, group, &mut in_cache[k]);
                    let t = DMatrix::from_fn(support.len(), support.len(), |r, c| {
                        let (ra, rb) = support[r];
                        let (ca, cb) = support[c];
                        a[(ra, ca)] * b[(rb, cb)].conj()
                    });
                    let kmat = (t - DMatrix::identity(support.len(), support.len())) * &null;
                    null = &null * nullspace(kmat)?;
                }
                for c in 0..null.ncols() {
                    let mut x = DMatrix::<C>::zeros(to.dim, ti.dim);
                    for (r, &(a, b)) in support.iter().enumerate() {
                        x[(a, b)] = null[(r, c)];
                    }
                    let m = &to.w * x * ti.w.adjoint();
                    let mut full = DMatrix::<C>::zeros(vout.dim(), vin.dim());
                    full.view_mut((row_off, col_off), (to.dim, ti.dim)).copy_from(&m);
                    basis.push(full);
                }
            }
            col_off += ti.dim;
        }
        row_off += to.dim;
    }

    let mut check_rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let residual_norms = GroupElement::random_batch(group, &mut check_rng, 4)
        .iter()
        .map(|g| {
            let ro = oracle_rep(vout, g, opts.basis)?;
            let ri = oracle_rep(vin, g, opts.basis)?;
            Ok(basis.iter().map(|m| max_abs(&(&ro * m - m * &ri))).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Commutant {
        report: OracleReport {
            computed_dimension: basis.len(),
            principal_angles: Vec::new(),
            residual_norms,
        },
        basis,
    })
}

/// Right null vectors (`σ < 1e-8 σ_max`) of `k`, as orthonormal columns.
fn nullspace(k: DMatrix<C>) -> Result<DMatrix<C>> {
    let n = k.ncols();
    let k = if k.nrows() < n {
        // Pad so the SVD returns a full set of right vectors.
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, k.nrows()).copy_from(&k);
        p
    } else {
        k
    };
    let svd = k.svd(false, true);
    let s = &svd.singular_values;
    let vt = svd.v_t.ok_or_else(|| Error::Oracle("SVD did not converge".into()))?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax < 1e-13 {
        return Ok(DMatrix::identity(n, n));
    }
    let cut = NULL_REL * smax;
    let null_idx: Vec<usize> = (0..n).filter(|&i| s[i] < cut).collect();
    let kept_min = (0..n)
        .filter(|&i| s[i] >= cut)
        .map(|i| s[i])
        .fold(f64::INFINITY, f64::min);
    let null_max = null_idx.iter().map(|&i| s[i]).fold(0.0, f64::max);
    if !null_idx.is_empty() && null_max > 0.0 && kept_min / null_max < MIN_GAP {
        return Err(Error::Oracle(format!(
            "no clear spectral gap: kept {kept_min:.3e}, discarded {null_max:.3e}"
        )));
    }
    let mut out = DMatrix::zeros(n, null_idx.len());
    for (c, &i) in null_idx.iter().enumerate() {
        out.set_column(c, &vt.row(i).adjoint());
    }
    Ok(out)
}

fn orthonormal_columns(ms: &[DMatrix<C>]) -> DMatrix<C> {
    let len = ms.first().map_or(0, |m| m.len());
    let mut a = DMatrix::<C>::zeros(len, ms.len());
    for (c, m) in ms.iter().enumerate() {
        a.set_column(c, &nalgebra::DVector::from_column_slice(m.as_slice()));
    }
    if ms.is_empty() {
        return a;
    }
    a.qr().q()
}

/// Principal angles between the spans of two matrix families, largest last.
/// Families of different size are compared within the larger span.
pub fn principal_angles(a: &[DMatrix<C>], b: &[DMatrix<C>]) -> Vec<f64> {
    let (big, small) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return Vec::new();
    }
    let q1 = orthonormal_columns(big);
    let q2 = orthonormal_columns(small);
    let r = &q2 - &q1 * (q1.adjoint() * &q2);
    let mut angles: Vec<f64> = r.singular_values().iter().map(|s| s.clamp(0.0, 1.0).asin()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    angles
}

/// Fills `report.principal_angles` against `other` and returns the largest angle.
/// Different dimensions count as a right angle.
pub fn compare_spans(commutant: &mut Commutant, other: &[DMatrix<C>]) -> f64 {
    let angles = principal_angles(&commutant.basis, other);
    let worst = if commutant.basis.len() != other.len() {
        std::f64::consts::FRAC_PI_2
    } else {
        angles.last().copied().unwrap_or(0.0)
    };
    commutant.report.principal_angles = angles;
    worst
}

/// Trace, antisymmetric and symmetric-traceless projectors on `R^3 ⊗ R^3`,
/// row `(i, j)` at `3i + j`.
pub fn classical_rank2_projectors() -> [DMatrix<f64>; 3] {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let build =
        |f: &dyn Fn(usize, usize, usize, usize) -> f64| DMatrix::from_fn(9, 9, |r, c| f(r / 3, r % 3, c / 3, c % 3));
    let h0 = build(&|i, j, k, l| d(i, j) * d(k, l) / 3.0);
    let h1 = build(&|i, j, k, l| 0.5 * (d(i, k) * d(j, l) - d(i, l) * d(j, k)));
    let h2 = build(&|i, j, k, l| 0.5 * (d(i, k) * d(j, l) + d(i, l) * d(j, k)) - d(i, j) * d(k, l) / 3.0);
    [h0, h1, h2]
}

/// Number of scheme paths of length `n` from weight 0 to `l`, by the
/// branching recursion over the natural representation.
pub fn path_count_recursive(n: usize, l: Weight, group: Group) -> u64 {
    let step = group.natural_weight();
    let mut counts: HashMap<u32, u64> = HashMap::from([(0, 1)]);
    for _ in 0..n {
        let mut next: HashMap<u32, u64> = HashMap::new();
        for (&d, &c) in &counts {
            for w in Weight::coupled(Weight::from_doubled(d), step) {
                *next.entry(w.doubled()).or_insert(0) += c;
            }
        }
        counts = next;
    }
    counts.get(&l.doubled()).copied().unwrap_or(0)
}
