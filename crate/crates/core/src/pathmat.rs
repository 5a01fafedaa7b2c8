//! Path matrices, Wigner-D matrices and representation matrices of spaces.
//!
//! Row layout: the factor coupled last is the most significant index and the
//! first factor varies fastest.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cg::{cg_complex, cg_real, CgTensor, Weight};
use crate::error::{Error, Result};
use crate::group::{Group, GroupElement, Parity, RepScalar, CARTESIAN_TO_SPHERICAL_INDEX};
use crate::linalg::{kron_all, kron_apply};
use crate::scheme::{Path, SpaceSpec, Step, Term};

/// Coordinates used for weight-1 factors of O(3)/SO(3) spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Cartesian,
    Spherical,
}

impl Basis {
    pub fn default_for(group: Group) -> Basis {
        match group {
            Group::SU2 => Basis::Spherical,
            Group::O3 | Group::SO3 => Basis::Cartesian,
        }
    }

    pub fn check(self, group: Group) -> Result<()> {
        if self == Basis::Cartesian && group == Group::SU2 {
            return Err(Error::arg("the Cartesian basis is not available for su2"));
        }
        Ok(())
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Cartesian => "cartesian",
            Basis::Spherical => "spherical",
        })
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartesian" => Ok(Basis::Cartesian),
            "spherical" => Ok(Basis::Spherical),
            other => Err(Error::arg(format!("unknown basis `{other}`"))),
        }
    }
}

/// Isometric embedding of one weight-`l` component into a term.
///
/// Entries are real for every group (the SU(2) coefficients are real in the
/// standard basis); [`PathMatrix::to_scalar`] lifts them to the group's field.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub path: Path,
    pub group: Group,
    pub basis: Basis,
    pub matrix: DMatrix<f64>,
    pub col_norm_applied: bool,
}

impl PathMatrix {
    pub fn terminal(&self) -> Weight {
        self.path.terminal()
    }

    pub fn is_complex(&self) -> bool {
        self.group == Group::SU2
    }

    pub fn to_scalar<T: RepScalar>(&self) -> DMatrix<T> {
        self.matrix.map(T::from_real)
    }
}

fn coupling(group: Group, bridge: Weight, prev: Weight, result: Weight) -> Result<Arc<CgTensor>> {
    match group {
        Group::O3 | Group::SO3 => cg_real(bridge, prev, result),
        Group::SU2 => cg_complex(bridge, prev, result),
    }
}

/// One step of the walk: `P'[(i1, i2), i3] = Σ_j P[i2, j] C[i1, j, i3]`.
fn contract(p: &DMatrix<f64>, c: &CgTensor) -> DMatrix<f64> {
    let (db, dp, dr) = c.shape();
    assert_eq!(p.ncols(), dp);
    let rows = p.nrows();
    let mut out = DMatrix::zeros(db * rows, dr);
    for i1 in 0..db {
        let slab = c.slab(i1);
        if slab.iter().all(|&v| v == 0.0) {
            continue;
        }
        out.rows_mut(i1 * rows, rows).gemm(1.0, p, &slab, 0.0);
    }
    out
}

fn normalize_columns(m: &mut DMatrix<f64>, path: &Path) -> Result<()> {
    let norms: Vec<f64> = m.column_iter().map(|c| c.norm()).collect();
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = norms.iter().cloned().fold(0.0, f64::max);
    if hi - lo > 1e-8 || lo == 0.0 {
        return Err(Error::Consistency(format!(
            "column norms of path {path} spread over [{lo}, {hi}]"
        )));
    }
    for (mut c, n) in m.column_iter_mut().zip(norms) {
        c /= n;
    }
    Ok(())
}

/// For each Cartesian row, the spherical row it is read from.
fn cartesian_rows(term: &Term) -> Vec<usize> {
    let dim = term.dim();
    (0..dim)
        .map(|r| {
            let mut rest = r;
            let mut stride = 1;
            let mut out = 0;
            for w in &term.factors {
                let d = w.dim();
                let digit = rest % d;
                rest /= d;
                let digit = if *w == Weight::integer(1) {
                    CARTESIAN_TO_SPHERICAL_INDEX[digit]
                } else {
                    digit
                };
                out += digit * stride;
                stride *= d;
            }
            out
        })
        .collect()
}

fn finish(
    mut m: DMatrix<f64>,
    path: Path,
    term: &Term,
    group: Group,
    basis: Basis,
    perm: Option<&[usize]>,
) -> Result<PathMatrix> {
    normalize_columns(&mut m, &path)?;
    if basis == Basis::Cartesian {
        let rows: Vec<usize> = match perm {
            Some(p) => p.to_vec(),
            None => cartesian_rows(term),
        };
        m = m.select_rows(rows.iter());
    }
    Ok(PathMatrix {
        path,
        group,
        basis,
        matrix: m,
        col_norm_applied: true,
    })
}

/// Builds the normalized path matrix of `path` over `term`.
pub fn build_path_matrix(path: &Path, term: &Term, group: Group, basis: Basis) -> Result<PathMatrix> {
    basis.check(group)?;
    path.check_against(term)?;
    let mut m = if path.steps.len() == term.rank() {
        DMatrix::from_element(1, 1, 1.0)
    } else {
        DMatrix::identity(path.start.dim(), path.start.dim())
    };
    let mut prev = path.start;
    for s in &path.steps {
        m = contract(&m, &*coupling(group, s.bridge, prev, s.result)?);
        prev = s.result;
    }
    finish(m, path.clone(), term, group, basis, None)
}

/// Walks the coupling tree of one term and hands every finished path matrix to
/// `f`, in enumeration order. Shared prefixes are contracted once. When
/// `filter` is given, only terminal weights in it are produced.
pub fn map_term_path_matrices<R, F>(
    spec: &SpaceSpec,
    term_index: usize,
    basis: Basis,
    filter: Option<&BTreeSet<Weight>>,
    f: F,
) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(PathMatrix) -> Result<R> + Sync,
{
    let group = spec.group();
    basis.check(group)?;
    let term = spec
        .terms()
        .get(term_index)
        .ok_or_else(|| Error::arg(format!("no term {term_index}")))?;
    let perm = (basis == Basis::Cartesian).then(|| cartesian_rows(term));
    let ctx = Walk {
        term,
        term_index,
        group,
        basis,
        filter,
        perm: perm.as_deref(),
        f: &f,
    };
    let start = term.factors[0];
    ctx.node(DMatrix::identity(start.dim(), start.dim()), start, &[])
}

struct Walk<'a, F> {
    term: &'a Term,
    term_index: usize,
    group: Group,
    basis: Basis,
    filter: Option<&'a BTreeSet<Weight>>,
    perm: Option<&'a [usize]>,
    f: &'a F,
}

impl<F, R> Walk<'_, F>
where
    R: Send,
    F: Fn(PathMatrix) -> Result<R> + Sync,
{
    fn node(&self, m: DMatrix<f64>, prev: Weight, steps: &[Step]) -> Result<Vec<R>> {
        let depth = steps.len();
        let bridges = &self.term.factors[1..];
        if depth == bridges.len() {
            if self.filter.is_some_and(|set| !set.contains(&prev)) {
                return Ok(Vec::new());
            }
            let path = Path {
                term_index: self.term_index,
                start: self.term.factors[0],
                steps: steps.to_vec(),
                parity: self.term.parity,
            };
            let pm = finish(m, path, self.term, self.group, self.basis, self.perm)?;
            return Ok(vec![(self.f)(pm)?]);
        }
        let bridge = bridges[depth];
        let last = depth + 1 == bridges.len();
        let children: Vec<Weight> = Weight::coupled(prev, bridge)
            .filter(|w| !last || self.filter.is_none_or(|set| set.contains(w)))
            .collect();
        let results: Vec<Result<Vec<R>>> = children
            .par_iter()
            .map(|&result| {
                let next = contract(&m, &*coupling(self.group, bridge, prev, result)?);
                let mut steps = steps.to_vec();
                steps.push(Step { bridge, result });
                self.node(next, result, &steps)
            })
            .collect();
        drop(m);
        let mut out = Vec::new();
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// All path matrices of every term of `spec`, term by term in enumeration order.
pub fn space_path_matrices(
    spec: &SpaceSpec,
    basis: Basis,
    filter: Option<&BTreeSet<Weight>>,
) -> Result<Vec<PathMatrix>> {
    let mut out = Vec::new();
    for t in 0..spec.terms().len() {
        out.extend(map_term_path_matrices(spec, t, basis, filter, Ok)?);
    }
    Ok(out)
}

/// `D^l` for `l = 0, 1/2, 1, …` up to `lmax`, without parity. Entry `k` holds
/// doubled weight `k`; entries of the wrong integrality are `None`.
pub(crate) fn wigner_ladder<T: RepScalar>(lmax: Weight, g: &GroupElement) -> Result<Vec<Option<DMatrix<T>>>> {
    let (group_step, natural) = match g {
        GroupElement::Orthogonal(_) => (2u32, Weight::integer(1)),
        GroupElement::Unitary(_) => (1u32, Weight::from_doubled(1)),
    };
    if !lmax.doubled().is_multiple_of(group_step) {
        return Err(Error::arg(format!(
            "weight {lmax} is not a representation of this group"
        )));
    }
    let n = g.natural::<T>(false)?;
    let mut out: Vec<Option<DMatrix<T>>> = vec![None; lmax.doubled() as usize + 1];
    out[0] = Some(DMatrix::from_element(1, 1, T::one()));
    let mut d = group_step;
    while d <= lmax.doubled() {
        let l = Weight::from_doubled(d);
        let prev = Weight::from_doubled(d - group_step);
        let c: DMatrix<T> = match g {
            GroupElement::Orthogonal(_) => cg_real(natural, prev, l)?,
            GroupElement::Unitary(_) => cg_complex(natural, prev, l)?,
        }
        .flattened()
        .map(T::from_real);
        let inner = n.kronecker(out[prev.doubled() as usize].as_ref().unwrap());
        out[d as usize] = Some(c.transpose() * inner * c);
        d += group_step;
    }
    Ok(out)
}

/// Wigner-D matrix of weight `l` with parity `p` in the real spherical basis
/// (standard basis for SU(2)), obtained from the maximal path of
/// `(natural)^{⊗2l}` one coupling at a time.
pub fn wigner_d<T: RepScalar>(l: Weight, g: &GroupElement, p: Parity) -> Result<DMatrix<T>> {
    let ladder = wigner_ladder::<T>(l, g)?;
    let chi = p.character(g.det_sign());
    let d = ladder[l.doubled() as usize].clone().unwrap();
    Ok(d * T::from_real(chi))
}

/// Per-factor representation matrices of one term, fastest factor first, and
/// the term's parity character.
pub(crate) struct TermRep<T> {
    pub factors: Vec<DMatrix<T>>,
    pub chi: f64,
}

pub(crate) fn term_reps<T: RepScalar>(spec: &SpaceSpec, g: &GroupElement, basis: Basis) -> Result<Vec<TermRep<T>>> {
    basis.check(spec.group())?;
    if !g.group_compatible(spec.group()) {
        return Err(Error::arg(format!("group element does not belong to {}", spec.group())));
    }
    let lmax = spec
        .terms()
        .iter()
        .flat_map(|t| t.factors.iter().copied())
        .max()
        .unwrap_or(Weight::ZERO);
    let ladder = wigner_ladder::<T>(lmax, g)?;
    let cart = match g {
        GroupElement::Orthogonal(_) if basis == Basis::Cartesian => Some(g.natural::<T>(true)?),
        _ => None,
    };
    Ok(spec
        .terms()
        .iter()
        .map(|t| TermRep {
            factors: t
                .factors
                .iter()
                .map(|w| match &cart {
                    Some(r) if *w == Weight::integer(1) => r.clone(),
                    _ => ladder[w.doubled() as usize].clone().unwrap(),
                })
                .collect(),
            chi: if spec.group().has_parity() {
                t.parity.character(g.det_sign())
            } else {
                1.0
            },
        })
        .collect())
}

/// Dense block-diagonal representation matrix of `spec`.
pub fn rep_matrix<T: RepScalar>(spec: &SpaceSpec, g: &GroupElement, basis: Basis) -> Result<DMatrix<T>> {
    let reps = term_reps::<T>(spec, g, basis)?;
    let n = spec.dim();
    let mut out = DMatrix::zeros(n, n);
    for (rep, off) in reps.iter().zip(spec.offsets()) {
        let block = kron_all(&rep.factors) * T::from_real(rep.chi);
        let d = block.nrows();
        out.view_mut((off, off), (d, d)).copy_from(&block);
    }
    Ok(out)
}

/// `ρ(g) x` without forming `ρ(g)`.
pub fn apply_rep<T: RepScalar>(spec: &SpaceSpec, g: &GroupElement, basis: Basis, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    if x.nrows() != spec.dim() {
        return Err(Error::arg(format!(
            "operand has {} rows, space has dimension {}",
            x.nrows(),
            spec.dim()
        )));
    }
    let reps = term_reps::<T>(spec, g, basis)?;
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for ((rep, off), t) in reps.iter().zip(spec.offsets()).zip(spec.terms()) {
        let d = t.dim();
        let block = kron_apply(&rep.factors, &x.rows(off, d).into_owned()) * T::from_real(rep.chi);
        out.rows_mut(off, d).copy_from(&block);
    }
    Ok(out)
}
