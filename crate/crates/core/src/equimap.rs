//! Orthonormal bases of equivariant maps between spaces, and the factored
//! (mixing-matrix) form of a general equivariant map.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::Check;
use crate::error::{Error, Result};
use crate::group::{GroupElement, RepScalar};
use crate::linalg::max_abs;
use crate::pathmat::{apply_rep, space_path_matrices, Basis, PathMatrix};
use crate::scheme::{end_dimension, hom_dimension, same_group, Irrep, Path, SpaceSpec};

/// Default cap on the total number of dense entries a basis may materialize.
pub const DENSE_ENTRY_CAP: usize = 1 << 28;

#[derive(Debug, Clone)]
pub enum ElementRepr {
    Factored,
    Dense(DMatrix<f64>),
}

/// `P̂_out P̂_inᵀ / sqrt(2l+1)`, placed in the block of its two terms.
#[derive(Debug, Clone)]
pub struct BasisElement {
    pub irrep: Irrep,
    pub out_q: usize,
    pub in_q: usize,
    pub out: Arc<PathMatrix>,
    pub input: Arc<PathMatrix>,
    pub out_offset: usize,
    pub in_offset: usize,
    pub shape: (usize, usize),
    pub repr: ElementRepr,
    pub frobenius_normalized: bool,
}

impl BasisElement {
    pub fn out_path(&self) -> &Path {
        &self.out.path
    }

    pub fn in_path(&self) -> &Path {
        &self.input.path
    }

    fn scale(&self) -> f64 {
        if self.frobenius_normalized {
            1.0 / (self.irrep.l.dim() as f64).sqrt()
        } else {
            1.0
        }
    }

    /// The nonzero block `P̂_out P̂_inᵀ` (scaled).
    pub fn block(&self) -> DMatrix<f64> {
        &self.out.matrix * self.input.matrix.transpose() * self.scale()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        if let ElementRepr::Dense(m) = &self.repr {
            return m.clone();
        }
        let mut m = DMatrix::zeros(self.shape.0, self.shape.1);
        let b = self.block();
        m.view_mut((self.out_offset, self.in_offset), b.shape()).copy_from(&b);
        m
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.shape.0);
        let x = v.rows(self.in_offset, self.input.matrix.nrows());
        let y = &self.out.matrix * (self.input.matrix.transpose() * x) * self.scale();
        out.rows_mut(self.out_offset, y.len()).copy_from(&y);
        out
    }

    /// `⟨self, M⟩_F` without densifying.
    pub fn inner_with(&self, m: &DMatrix<f64>) -> f64 {
        let (r, c) = (self.out.matrix.nrows(), self.input.matrix.nrows());
        let block = m.view((self.out_offset, self.in_offset), (r, c));
        let t = block * &self.input.matrix;
        self.out.matrix.dot(&t) * self.scale()
    }

    /// `⟨self, other⟩_F` from the factors.
    pub fn frobenius_inner(&self, other: &BasisElement) -> f64 {
        if self.out_offset != other.out_offset
            || self.in_offset != other.in_offset
            || self.out.matrix.nrows() != other.out.matrix.nrows()
            || self.input.matrix.nrows() != other.input.matrix.nrows()
        {
            return 0.0;
        }
        let a = self.out.matrix.transpose() * &other.out.matrix;
        let b = self.input.matrix.transpose() * &other.input.matrix;
        a.dot(&b) * self.scale() * other.scale()
    }
}

#[derive(Debug, Clone)]
pub struct HomOptions {
    pub basis: Basis,
    pub dense: bool,
    pub cap: usize,
}

impl HomOptions {
    pub fn new(basis: Basis) -> Self {
        HomOptions {
            basis,
            dense: false,
            cap: DENSE_ENTRY_CAP,
        }
    }
}

struct Stacks {
    /// Per irrep: `(term offset, q, path matrix)` in enumeration order.
    groups: BTreeMap<Irrep, Vec<(usize, usize, Arc<PathMatrix>)>>,
}

fn stacks(spec: &SpaceSpec, basis: Basis) -> Result<Stacks> {
    stacks_from(spec, space_path_matrices(spec, basis, None)?)
}

/// Groups path matrices by terminal irrep, ordered by term and then by the
/// order given. Checks that each matrix fits its term.
fn stacks_from(spec: &SpaceSpec, pms: Vec<PathMatrix>) -> Result<Stacks> {
    let offsets = spec.offsets();
    let mut pms = pms;
    pms.sort_by_key(|pm| pm.path.term_index);
    let mut groups: BTreeMap<Irrep, Vec<(usize, usize, Arc<PathMatrix>)>> = BTreeMap::new();
    let mut q: BTreeMap<(usize, Irrep), usize> = BTreeMap::new();
    for pm in pms {
        let t = pm.path.term_index;
        let term = spec
            .terms()
            .get(t)
            .ok_or_else(|| Error::arg(format!("path {} refers to missing term {t}", pm.path)))?;
        pm.path.check_against(term)?;
        if pm.matrix.shape() != (term.dim(), pm.terminal().dim()) {
            return Err(Error::arg(format!(
                "path matrix for {} has shape {:?}",
                pm.path,
                pm.matrix.shape()
            )));
        }
        let key = pm.path.terminal_irrep();
        let n = q.entry((t, key)).or_insert(0);
        *n += 1;
        groups.entry(key).or_default().push((offsets[t], *n, Arc::new(pm)));
    }
    Ok(Stacks { groups })
}

fn pair_stacks(sout: &Stacks, sin: &Stacks, shape: (usize, usize)) -> Vec<BasisElement> {
    let mut out = Vec::new();
    for (irrep, outs) in &sout.groups {
        let Some(ins) = sin.groups.get(irrep) else { continue };
        for (oo, oq, po) in outs {
            for (io, iq, pi) in ins {
                out.push(BasisElement {
                    irrep: *irrep,
                    out_q: *oq,
                    in_q: *iq,
                    out: Arc::clone(po),
                    input: Arc::clone(pi),
                    out_offset: *oo,
                    in_offset: *io,
                    shape,
                    repr: ElementRepr::Factored,
                    frobenius_normalized: true,
                });
            }
        }
    }
    out
}

/// Basis elements from path matrices that were computed (or loaded) elsewhere.
pub fn basis_from_path_matrices(
    vin: &SpaceSpec,
    vout: &SpaceSpec,
    in_pms: Vec<PathMatrix>,
    out_pms: Vec<PathMatrix>,
) -> Result<Vec<BasisElement>> {
    same_group(vin, vout)?;
    let sin = stacks_from(vin, in_pms)?;
    let sout = stacks_from(vout, out_pms)?;
    Ok(pair_stacks(&sout, &sin, (vout.dim(), vin.dim())))
}

/// Orthonormal basis of equivariant maps `vin -> vout`, sorted by
/// `(l, p, out term, out q, in term, in q)`.
///
/// With `opts.dense` set, elements are materialized unless the total number of
/// entries would exceed `opts.cap`, in which case they stay factored.
pub fn hom_basis_with(vin: &SpaceSpec, vout: &SpaceSpec, opts: &HomOptions) -> Result<Vec<BasisElement>> {
    same_group(vin, vout)?;
    opts.basis.check(vin.group())?;
    let sin = stacks(vin, opts.basis)?;
    let sout = if vin == vout {
        None
    } else {
        Some(stacks(vout, opts.basis)?)
    };
    let sout = sout.as_ref().unwrap_or(&sin);
    let shape = (vout.dim(), vin.dim());
    let mut out = pair_stacks(sout, &sin, shape);
    // Enumeration order already sorts by term then q inside each irrep.
    if opts.dense && out.len().saturating_mul(shape.0.saturating_mul(shape.1)) <= opts.cap {
        out.par_iter_mut().for_each(|e| {
            e.repr = ElementRepr::Dense(e.dense());
        });
    }
    Ok(out)
}

pub fn hom_basis(vin: &SpaceSpec, vout: &SpaceSpec) -> Result<Vec<BasisElement>> {
    hom_basis_with(
        vin,
        vout,
        &HomOptions::new(crate::pathmat::Basis::default_for(vin.group())),
    )
}

/// Basis of the commutant of rank-`n` tensors of the natural representation.
pub fn end_basis(n: usize, group: crate::group::Group) -> Result<Vec<BasisElement>> {
    let s = SpaceSpec::natural_power(group, n)?;
    let b = hom_basis(&s, &s)?;
    if group != crate::group::Group::SU2 && b.len() as u64 != end_dimension(n) {
        return Err(Error::Consistency(format!(
            "{} basis elements, expected {}",
            b.len(),
            end_dimension(n)
        )));
    }
    Ok(b)
}

/// Path-matrix stacks and one mixing matrix per shared irrep.
#[derive(Debug, Clone)]
pub struct MapBlock {
    pub irrep: Irrep,
    pub out_stack: Vec<Arc<PathMatrix>>,
    pub out_offsets: Vec<usize>,
    pub in_stack: Vec<Arc<PathMatrix>>,
    pub in_offsets: Vec<usize>,
    pub mix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct FactoredEquivariantMap {
    pub in_dim: usize,
    pub out_dim: usize,
    pub blocks: Vec<MapBlock>,
}

impl FactoredEquivariantMap {
    pub fn n_coefficients(&self) -> usize {
        self.blocks.iter().map(|b| b.mix.len()).sum()
    }

    pub fn mix_mut(&mut self, irrep: Irrep) -> Option<&mut DMatrix<f64>> {
        self.blocks.iter_mut().find(|b| b.irrep == irrep).map(|b| &mut b.mix)
    }

    /// Fills the mixing matrices row-major, block by block: the same order as
    /// the elements of [`hom_basis`].
    pub fn set_mix_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.n_coefficients() {
            return Err(Error::arg(format!(
                "{} values for {} coefficients",
                values.len(),
                self.n_coefficients()
            )));
        }
        let mut at = 0;
        for b in &mut self.blocks {
            let (r, c) = b.mix.shape();
            b.mix = DMatrix::from_row_slice(r, c, &values[at..at + r * c]);
            at += r * c;
        }
        Ok(())
    }

    /// Coefficients on the normalized basis elements that reproduce this map.
    pub fn basis_coefficients(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| {
                let s = (b.irrep.l.dim() as f64).sqrt();
                b.mix.transpose().iter().map(move |v| v * s).collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.out_dim, self.in_dim);
        for b in &self.blocks {
            for (o, (po, oo)) in b.out_stack.iter().zip(&b.out_offsets).enumerate() {
                for (i, (pi, io)) in b.in_stack.iter().zip(&b.in_offsets).enumerate() {
                    let c = b.mix[(o, i)];
                    if c == 0.0 {
                        continue;
                    }
                    let blk = &po.matrix * pi.matrix.transpose() * c;
                    let mut v = m.view_mut((*oo, *io), blk.shape());
                    v += blk;
                }
            }
        }
        m
    }
}

/// Factored map skeleton with all mixing matrices zero.
pub fn factored_map(vin: &SpaceSpec, vout: &SpaceSpec, basis: Basis) -> Result<FactoredEquivariantMap> {
    same_group(vin, vout)?;
    basis.check(vin.group())?;
    let sin = stacks(vin, basis)?;
    let sout = stacks(vout, basis)?;
    let mut blocks = Vec::new();
    for (irrep, outs) in &sout.groups {
        let Some(ins) = sin.groups.get(irrep) else { continue };
        blocks.push(MapBlock {
            irrep: *irrep,
            out_stack: outs.iter().map(|(_, _, p)| Arc::clone(p)).collect(),
            out_offsets: outs.iter().map(|(o, _, _)| *o).collect(),
            in_stack: ins.iter().map(|(_, _, p)| Arc::clone(p)).collect(),
            in_offsets: ins.iter().map(|(o, _, _)| *o).collect(),
            mix: DMatrix::zeros(outs.len(), ins.len()),
        });
    }
    Ok(FactoredEquivariantMap {
        in_dim: vin.dim(),
        out_dim: vout.dim(),
        blocks,
    })
}

/// `Σ_(l,p) P̂_out (mix ⊗ I) P̂_inᵀ v`.
pub fn apply_map(fmap: &FactoredEquivariantMap, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != fmap.in_dim {
        return Err(Error::arg(format!(
            "vector has length {}, input space has dimension {}",
            v.len(),
            fmap.in_dim
        )));
    }
    let mut out = DVector::zeros(fmap.out_dim);
    for b in &fmap.blocks {
        let d = b.irrep.l.dim();
        // Spherical components of the input, one column per input path.
        let mut y = DMatrix::zeros(d, b.in_stack.len());
        for (i, (p, off)) in b.in_stack.iter().zip(&b.in_offsets).enumerate() {
            let x = v.rows(*off, p.matrix.nrows());
            y.set_column(i, &(p.matrix.transpose() * x));
        }
        let z = y * b.mix.transpose();
        for (o, (p, off)) in b.out_stack.iter().zip(&b.out_offsets).enumerate() {
            let r = &p.matrix * z.column(o);
            let mut dst = out.rows_mut(*off, r.len());
            dst += r;
        }
    }
    Ok(out)
}

/// Orthogonal projection of `m` onto the span of a normalized basis.
pub fn project_to_equivariant(m: &DMatrix<f64>, basis: &[BasisElement]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if basis.iter().any(|b| !b.frobenius_normalized) {
        return Err(Error::arg("projection needs a Frobenius-normalized basis"));
    }
    if let Some(b) = basis.first() {
        if m.shape() != b.shape {
            return Err(Error::arg(format!(
                "matrix is {:?}, basis elements are {:?}",
                m.shape(),
                b.shape
            )));
        }
    }
    let coeffs: Vec<f64> = basis.par_iter().map(|b| b.inner_with(m)).collect();
    let mut proj = DMatrix::zeros(m.nrows(), m.ncols());
    for (b, c) in basis.iter().zip(&coeffs) {
        let blk = b.block() * *c;
        let mut v = proj.view_mut((b.out_offset, b.in_offset), blk.shape());
        v += blk;
    }
    Ok((coeffs, proj))
}

/// `max_k ‖ρ_out(g) B_k − B_k ρ_in(g)‖_max`, computed from the factors as
/// `[ρP_o, −P_o] [P_i, ρᵀP_i]ᵀ`.
pub fn basis_commutator_residual<T: RepScalar>(
    vin: &SpaceSpec,
    vout: &SpaceSpec,
    basis: &[BasisElement],
    g: &GroupElement,
) -> Result<f64> {
    let Some(first) = basis.first() else { return Ok(0.0) };
    let b = first.out.basis;
    // Per path matrix: ρ P embedded in the full space, restricted to the term rows.
    let rho_times = |spec: &SpaceSpec, pm: &PathMatrix, off: usize, transpose: bool| -> Result<DMatrix<T>> {
        let mut x = DMatrix::<T>::zeros(spec.dim(), pm.matrix.ncols());
        x.rows_mut(off, pm.matrix.nrows()).copy_from(&pm.to_scalar::<T>());
        let y = if transpose {
            // ρᵀ P = conj(ρᴴ conj(P)) and ρᴴ = ρ(g⁻¹)
            apply_rep::<T>(spec, &g.inverse(), b, &x.map(|v| v.conjugate()))?.map(|v| v.conjugate())
        } else {
            apply_rep::<T>(spec, g, b, &x)?
        };
        Ok(y.rows(off, pm.matrix.nrows()).into_owned())
    };
    let mut cache_out: BTreeMap<(usize, usize), DMatrix<T>> = BTreeMap::new();
    let mut cache_in: BTreeMap<(usize, usize), DMatrix<T>> = BTreeMap::new();
    for e in basis {
        let ko = (e.out_offset, Arc::as_ptr(&e.out) as usize);
        if let Entry::Vacant(slot) = cache_out.entry(ko) {
            slot.insert(rho_times(vout, &e.out, e.out_offset, false)?);
        }
        let ki = (e.in_offset, Arc::as_ptr(&e.input) as usize);
        if let Entry::Vacant(slot) = cache_in.entry(ki) {
            slot.insert(rho_times(vin, &e.input, e.in_offset, true)?);
        }
    }
    let worst = basis
        .par_iter()
        .map(|e| {
            let a = &cache_out[&(e.out_offset, Arc::as_ptr(&e.out) as usize)];
            let c = &cache_in[&(e.in_offset, Arc::as_ptr(&e.input) as usize)];
            let po = e.out.to_scalar::<T>();
            let pi = e.input.to_scalar::<T>();
            // Off-block entries of the commutator vanish because ρ is block diagonal.
            let diff = a * pi.transpose() - &po * c.transpose();
            max_abs(&diff) * e.scale()
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct HomVerifyOptions {
    pub samples: usize,
    pub seed: u64,
    /// Replaces every default tolerance.
    pub tolerance: Option<f64>,
    pub oracle: bool,
}

impl Default for HomVerifyOptions {
    fn default() -> Self {
        HomVerifyOptions {
            samples: 20,
            seed: 0xba515,
            tolerance: None,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub computed_dimension: Option<usize>,
    pub max_principal_angle: Option<f64>,
    pub tolerance: f64,
    /// Why the comparison was not run.
    pub skipped: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomReport {
    pub hom_dimension: u64,
    pub elements: usize,
    pub count_matches: bool,
    pub path_orthonormality: Check,
    pub frobenius_orthonormality: Check,
    pub equivariance: Check,
    pub oracle: Option<OracleCheck>,
    pub samples: usize,
    pub passed: bool,
}

/// Distinct path matrices on one side, with their term offsets.
fn distinct_sides(basis: &[BasisElement], out: bool) -> (Vec<(usize, Arc<PathMatrix>)>, Vec<usize>) {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut list = Vec::new();
    let mut which = Vec::with_capacity(basis.len());
    for e in basis {
        let (pm, off) = if out {
            (&e.out, e.out_offset)
        } else {
            (&e.input, e.in_offset)
        };
        let key = Arc::as_ptr(pm) as usize;
        let id = *ids.entry(key).or_insert_with(|| {
            list.push((off, Arc::clone(pm)));
            list.len() - 1
        });
        which.push(id);
    }
    (list, which)
}

/// `P_aᵀ P_b` for every pair of path matrices in the same term.
fn path_grams(list: &[(usize, Arc<PathMatrix>)]) -> Vec<Vec<Option<DMatrix<f64>>>> {
    (0..list.len())
        .into_par_iter()
        .map(|a| {
            (0..list.len())
                .map(|b| {
                    let (oa, pa) = &list[a];
                    let (ob, pb) = &list[b];
                    (oa == ob && pa.matrix.nrows() == pb.matrix.nrows()).then(|| pa.matrix.transpose() * &pb.matrix)
                })
                .collect()
        })
        .collect()
}

/// `max |P_aᵀ P_b − δ_ab I|` over path matrices of the same term.
pub fn path_orthonormality_residual(pms: &[&PathMatrix]) -> f64 {
    (0..pms.len())
        .into_par_iter()
        .map(|a| {
            let mut worst: f64 = 0.0;
            for b in a..pms.len() {
                if pms[a].path.term_index != pms[b].path.term_index || pms[a].matrix.nrows() != pms[b].matrix.nrows() {
                    continue;
                }
                let mut g = pms[a].matrix.transpose() * &pms[b].matrix;
                if a == b {
                    for k in 0..g.nrows() {
                        g[(k, k)] -= 1.0;
                    }
                }
                worst = worst.max(max_abs(&g));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Count, orthonormality and equivariance of a basis, plus an optional
/// comparison with the brute-force commutant.
pub fn verify_hom_basis(
    vin: &SpaceSpec,
    vout: &SpaceSpec,
    basis: &[BasisElement],
    opts: &HomVerifyOptions,
) -> Result<HomReport> {
    same_group(vin, vout)?;
    let group = vin.group();
    let expected = hom_dimension(vin, vout)?;
    let max_rank = vin
        .terms()
        .iter()
        .chain(vout.terms())
        .map(|t| t.rank())
        .max()
        .unwrap_or(1);
    let path_tol = opts
        .tolerance
        .unwrap_or_else(|| crate::decomp::base_tolerance(max_rank));
    let frob_tol = opts.tolerance.unwrap_or(1e-10);
    let equi_tol = opts.tolerance.unwrap_or(1e-9);

    let (outs, out_id) = distinct_sides(basis, true);
    let (ins, in_id) = distinct_sides(basis, false);
    let mut pms: Vec<&PathMatrix> = outs.iter().map(|(_, p)| &**p).collect();
    let path_resid = path_orthonormality_residual(&pms);
    pms = ins.iter().map(|(_, p)| &**p).collect();
    let path_resid = path_resid.max(path_orthonormality_residual(&pms));

    let gout = path_grams(&outs);
    let gin = path_grams(&ins);
    let frob = (0..basis.len())
        .into_par_iter()
        .map(|i| {
            let mut worst: f64 = 0.0;
            for j in 0..=i {
                let (Some(a), Some(b)) = (&gout[out_id[i]][out_id[j]], &gin[in_id[i]][in_id[j]]) else {
                    continue;
                };
                let v = a.dot(b) * basis[i].scale() * basis[j].scale();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let gs = GroupElement::random_batch(group, &mut rng, opts.samples);
    let mut equi: f64 = 0.0;
    for g in &gs {
        let r = if group == crate::group::Group::SU2 {
            basis_commutator_residual::<num_complex::Complex64>(vin, vout, basis, g)?
        } else {
            basis_commutator_residual::<f64>(vin, vout, basis, g)?
        };
        equi = equi.max(r);
    }

    let oracle = opts.oracle.then(|| {
        let tol = 1e-7;
        if vin.dim() * vout.dim() > crate::oracle::DEFAULT_CAP {
            return Ok(OracleCheck {
                computed_dimension: None,
                max_principal_angle: None,
                tolerance: tol,
                skipped: Some(format!(
                    "dim(in)*dim(out) = {} exceeds the oracle cap {}",
                    vin.dim() * vout.dim(),
                    crate::oracle::DEFAULT_CAP
                )),
                passed: true,
            });
        }
        let oopts = crate::oracle::OracleOptions {
            basis: basis.first().map_or(Basis::default_for(group), |e| e.out.basis),
            ..crate::oracle::OracleOptions::new(group)
        };
        let mut c = crate::oracle::commutant_nullspace(vin, vout, &oopts)?;
        let ours: Vec<DMatrix<num_complex::Complex64>> = basis
            .iter()
            .map(|e| e.dense().map(|v| num_complex::Complex64::new(v, 0.0)))
            .collect();
        let angle = crate::oracle::compare_spans(&mut c, &ours);
        Ok::<_, Error>(OracleCheck {
            computed_dimension: Some(c.basis.len()),
            max_principal_angle: Some(angle),
            tolerance: tol,
            skipped: None,
            passed: c.basis.len() == basis.len() && angle < tol,
        })
    });
    let oracle = oracle.transpose()?;

    let count_matches = basis.len() as u64 == expected;
    let path_orthonormality = Check::new(path_resid, path_tol, "gram");
    let frobenius_orthonormality = Check::new(frob, frob_tol, "gram");
    let equivariance = Check::new(equi, equi_tol, "factored");
    let passed = count_matches
        && path_orthonormality.passed
        && frobenius_orthonormality.passed
        && equivariance.passed
        && oracle.as_ref().is_none_or(|o| o.passed);
    Ok(HomReport {
        hom_dimension: expected,
        elements: basis.len(),
        count_matches,
        path_orthonormality,
        frobenius_orthonormality,
        equivariance,
        oracle,
        samples: gs.len(),
        passed,
    })
}
