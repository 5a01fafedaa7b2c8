//! Turning decompositions and bases into container objects, and checking
//! containers read back from disk.
//!
//! Object names: `pm.t{term}.{l}{p}.q{q}` for path matrices, `proj.…` for the
//! dense projector of the same path, `in.`/`out.` prefixes for the two sides
//! of a basis file, `mix.{l}{p}` for mixing-matrix skeletons and
//! `elem.{l}{p}.o{term}.{q}.i{term}.{q}` for dense basis elements.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cg::Weight;
use crate::decomp::{verify_decomposition, Check, Projector, VerifyOptions, VerifyReport, DENSE_ENTRY_CAP};
use crate::equimap::{
    basis_from_path_matrices, hom_basis_with, path_orthonormality_residual, verify_hom_basis, BasisElement,
    ElementRepr, HomOptions, HomReport, HomVerifyOptions, OracleCheck,
};
use crate::error::{Error, Result, StoreError};
use crate::group::Group;
use crate::linalg::max_abs;
use crate::pathmat::{map_term_path_matrices, Basis, PathMatrix};
use crate::scheme::{group_paths_by_terminal, hom_dimension, Irrep, SpaceSpec};
use crate::specparse::{parse_space_spec, render_space_spec};
use crate::store::{Container, ContainerWriter, Data, Metadata, ObjectKind, PathRecord, StoredObject};

pub trait ObjectSink {
    fn push(&mut self, obj: &StoredObject) -> Result<()>;
}

impl ObjectSink for Vec<StoredObject> {
    fn push(&mut self, obj: &StoredObject) -> Result<()> {
        Vec::push(self, obj.clone());
        Ok(())
    }
}

impl ObjectSink for ContainerWriter {
    fn push(&mut self, obj: &StoredObject) -> Result<()> {
        ContainerWriter::push(self, obj)
    }
}

fn irrep_tag(i: Irrep) -> String {
    format!("{}{}", i.l, i.p)
}

pub fn path_matrix_name(prefix: &str, pm: &PathMatrix, q: usize) -> String {
    format!(
        "{prefix}pm.t{}.{}.q{q}",
        pm.path.term_index,
        irrep_tag(pm.path.terminal_irrep())
    )
}

pub fn decomposition_meta(spec: &SpaceSpec, basis: Basis) -> Metadata {
    Metadata {
        group: spec.group(),
        space_spec: render_space_spec(spec),
        out_space_spec: None,
        basis,
    }
}

/// Number of dense entries a materialized decomposition would hold.
pub fn materialized_entries(spec: &SpaceSpec, filter: Option<&BTreeSet<Weight>>) -> usize {
    spec.paths()
        .iter()
        .filter(|p| filter.is_none_or(|f| f.contains(&p.terminal())))
        .map(|p| {
            let d = spec.terms()[p.term_index].dim();
            d.saturating_mul(d)
        })
        .fold(0, usize::saturating_add)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompCount {
    pub term: usize,
    pub irrep: Irrep,
    pub count: usize,
}

/// Streams path matrices (and dense projectors when `materialize`) in
/// `(term, l, p, q)` order. Only one terminal weight of one term is held in
/// memory at a time.
pub fn write_decomposition<S: ObjectSink>(
    sink: &mut S,
    spec: &SpaceSpec,
    basis: Basis,
    filter: Option<&BTreeSet<Weight>>,
    materialize: bool,
) -> Result<Vec<DecompCount>> {
    basis.check(spec.group())?;
    if materialize {
        let entries = materialized_entries(spec, filter);
        if entries > DENSE_ENTRY_CAP {
            return Err(Error::Size(format!(
                "materializing would store {entries} entries (cap {DENSE_ENTRY_CAP}); drop --materialize"
            )));
        }
    }
    let mut counts = Vec::new();
    for (t, term) in spec.terms().iter().enumerate() {
        let weights: BTreeSet<Weight> = spec
            .paths()
            .iter()
            .filter(|p| p.term_index == t)
            .map(|p| p.terminal())
            .filter(|w| filter.is_none_or(|f| f.contains(w)))
            .collect();
        for w in weights {
            let only = BTreeSet::from([w]);
            let pms = map_term_path_matrices(spec, t, basis, Some(&only), Ok)?;
            let irrep = Irrep { l: w, p: term.parity };
            for (k, pm) in pms.iter().enumerate() {
                let q = k + 1;
                sink.push(&StoredObject::path_matrix(path_matrix_name("", pm, q), pm))?;
                if materialize {
                    let h = &pm.matrix * pm.matrix.transpose();
                    sink.push(&StoredObject {
                        path: Some(PathRecord::from(&pm.path)),
                        irrep: Some(irrep),
                        ..StoredObject::new(
                            format!("proj.t{t}.{}.q{q}", irrep_tag(irrep)),
                            ObjectKind::ProjectorDense,
                            Data::for_group(h, spec.group()),
                        )
                    })?;
                }
            }
            counts.push(DecompCount {
                term: t,
                irrep,
                count: pms.len(),
            });
        }
    }
    Ok(counts)
}

pub fn hom_meta(vin: &SpaceSpec, vout: &SpaceSpec, basis: Basis) -> Metadata {
    Metadata {
        group: vin.group(),
        space_spec: render_space_spec(vin),
        out_space_spec: Some(render_space_spec(vout)),
        basis,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixShape {
    pub irrep: Irrep,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomSummary {
    pub hom_dimension: u64,
    pub mix_shapes: Vec<MixShape>,
    pub dense: bool,
}

/// Mixing-matrix shapes `#out × #in` per shared terminal irrep.
pub fn mix_shapes(vin: &SpaceSpec, vout: &SpaceSpec) -> Vec<MixShape> {
    let gin = group_paths_by_terminal(&vin.paths());
    let gout = group_paths_by_terminal(&vout.paths());
    gout.iter()
        .filter_map(|(irrep, outs)| {
            gin.get(irrep).map(|ins| MixShape {
                irrep: *irrep,
                rows: outs.len(),
                cols: ins.len(),
            })
        })
        .collect()
}

/// Path matrices of both spaces, then either the zero mixing matrices
/// (factored) or every dense basis element.
pub fn write_hom<S: ObjectSink>(
    sink: &mut S,
    vin: &SpaceSpec,
    vout: &SpaceSpec,
    basis: Basis,
    dense: bool,
) -> Result<HomSummary> {
    let dimension = hom_dimension(vin, vout)?;
    let shapes = mix_shapes(vin, vout);
    if dense {
        let entries = (dimension as usize).saturating_mul(vin.dim().saturating_mul(vout.dim()));
        if entries > DENSE_ENTRY_CAP {
            return Err(Error::Size(format!(
                "{dimension} dense elements of {}x{} exceed the cap of {DENSE_ENTRY_CAP} entries; \
                 use --factored to store path matrices and mixing shapes instead",
                vout.dim(),
                vin.dim()
            )));
        }
    }
    let elements = hom_basis_with(vin, vout, &HomOptions::new(basis))?;
    write_sides(sink, &elements, vin.group())?;
    if dense {
        for e in &elements {
            let name = format!(
                "elem.{}.o{}.{}.i{}.{}",
                irrep_tag(e.irrep),
                e.out_path().term_index,
                e.out_q,
                e.in_path().term_index,
                e.in_q
            );
            sink.push(&StoredObject {
                path: Some(PathRecord::from(e.out_path())),
                in_path: Some(PathRecord::from(e.in_path())),
                irrep: Some(e.irrep),
                ..StoredObject::new(name, ObjectKind::BasisElement, Data::for_group(e.dense(), vin.group()))
            })?;
        }
    } else {
        for s in &shapes {
            sink.push(&StoredObject {
                irrep: Some(s.irrep),
                ..StoredObject::new(
                    format!("mix.{}", irrep_tag(s.irrep)),
                    ObjectKind::MixShape,
                    Data::for_group(DMatrix::zeros(s.rows, s.cols), vin.group()),
                )
            })?;
        }
    }
    Ok(HomSummary {
        hom_dimension: dimension,
        mix_shapes: shapes,
        dense,
    })
}

/// Every distinct path matrix used by `elements`, `in.` side first, each in
/// `(term, l, p, q)` order.
fn write_sides<S: ObjectSink>(sink: &mut S, elements: &[BasisElement], group: Group) -> Result<()> {
    for (prefix, out) in [("in.", false), ("out.", true)] {
        let mut seen: BTreeMap<(usize, Irrep, usize), &PathMatrix> = BTreeMap::new();
        for e in elements {
            let (pm, q) = if out { (&*e.out, e.out_q) } else { (&*e.input, e.in_q) };
            seen.entry((pm.path.term_index, e.irrep, q)).or_insert(pm);
        }
        for ((_, _, q), pm) in seen {
            let mut obj = StoredObject::path_matrix(path_matrix_name(prefix, pm, q), pm);
            obj.space = Some(prefix.trim_end_matches('.').to_string());
            debug_assert_eq!(obj.data.dtype(), crate::store::Dtype::for_group(group));
            sink.push(&obj)?;
        }
    }
    Ok(())
}

/// A container read back into typed form.
#[derive(Debug, Clone)]
pub enum Contents {
    Decomposition {
        spec: SpaceSpec,
        /// Projectors per term, with dense matrices attached when stored.
        projectors: Vec<Vec<Projector>>,
    },
    Hom {
        vin: SpaceSpec,
        vout: SpaceSpec,
        elements: Vec<BasisElement>,
        /// Stored dense elements, in basis order.
        dense: Vec<DMatrix<f64>>,
        mix: Vec<MixShape>,
    },
}

fn semantic(object: &str, reason: impl Into<String>) -> Error {
    StoreError::Layout {
        object: object.to_string(),
        reason: reason.into(),
    }
    .into()
}

fn parse_meta(text: &str, group: Group) -> Result<SpaceSpec> {
    parse_space_spec(text, group).map_err(|e| StoreError::Header(format!("space spec `{text}`: {e}")).into())
}

pub fn interpret(c: &Container) -> Result<Contents> {
    let group = c.meta.group;
    let basis = c.meta.basis;
    let spec = parse_meta(&c.meta.space_spec, group)?;
    let to_pm = |o: &StoredObject| -> Result<PathMatrix> {
        if o.data.max_imag() != 0.0 {
            return Err(semantic(&o.name, "path matrix has imaginary entries"));
        }
        o.to_path_matrix(group, basis).map_err(|e| semantic(&o.name, e))
    };
    match &c.meta.out_space_spec {
        None => {
            let mut projectors: Vec<Vec<Projector>> = vec![Vec::new(); spec.terms().len()];
            let mut by_path: BTreeMap<String, (usize, usize)> = BTreeMap::new();
            let mut q: BTreeMap<(usize, Irrep), usize> = BTreeMap::new();
            for o in &c.objects {
                match o.kind {
                    ObjectKind::PathMatrix => {
                        let pm = to_pm(o)?;
                        let t = pm.path.term_index;
                        let term = spec
                            .terms()
                            .get(t)
                            .ok_or_else(|| semantic(&o.name, format!("no term {t}")))?;
                        pm.path
                            .check_against(term)
                            .map_err(|e| semantic(&o.name, e.to_string()))?;
                        if pm.matrix.nrows() != term.dim() {
                            return Err(semantic(&o.name, "row count does not match the term"));
                        }
                        let n = q.entry((t, pm.path.terminal_irrep())).or_insert(0);
                        *n += 1;
                        by_path.insert(format!("{:?}", o.path), (t, projectors[t].len()));
                        projectors[t].push(Projector::from_path_matrix(pm, *n));
                    }
                    ObjectKind::ProjectorDense => {
                        let &(t, k) = by_path
                            .get(&format!("{:?}", o.path))
                            .ok_or_else(|| semantic(&o.name, "projector without a path matrix"))?;
                        let h = o.data.real();
                        if h.nrows() != projectors[t][k].dim() {
                            return Err(semantic(&o.name, "projector size does not match the term"));
                        }
                        projectors[t][k].dense = Some(h);
                    }
                    _ => return Err(semantic(&o.name, "unexpected object in a decomposition container")),
                }
            }
            Ok(Contents::Decomposition { spec, projectors })
        }
        Some(out_text) => {
            let vout = parse_meta(out_text, group)?;
            let (mut pin, mut pout, mut dense, mut mix) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for o in &c.objects {
                match (o.kind, o.space.as_deref()) {
                    (ObjectKind::PathMatrix, Some("in")) => pin.push(to_pm(o)?),
                    (ObjectKind::PathMatrix, Some("out")) => pout.push(to_pm(o)?),
                    (ObjectKind::BasisElement, _) => dense.push(o.data.real()),
                    (ObjectKind::MixShape, _) => {
                        let (rows, cols) = o.data.shape();
                        mix.push(MixShape {
                            irrep: o.irrep.ok_or_else(|| semantic(&o.name, "mix matrix without irrep"))?,
                            rows,
                            cols,
                        });
                    }
                    _ => return Err(semantic(&o.name, "unexpected object in a basis container")),
                }
            }
            let elements =
                basis_from_path_matrices(&spec, &vout, pin, pout).map_err(|e| semantic("<paths>", e.to_string()))?;
            Ok(Contents::Hom {
                vin: spec,
                vout,
                elements,
                dense,
                mix,
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContainerVerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub oracle: bool,
}

impl Default for ContainerVerifyOptions {
    fn default() -> Self {
        ContainerVerifyOptions {
            samples: 20,
            seed: VerifyOptions::default().seed,
            tolerance: None,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContainerReport {
    pub kind: &'static str,
    pub space_spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_space_spec: Option<String>,
    pub group: Group,
    pub basis: Basis,
    pub objects: usize,
    /// Decomposition files: one report per term with stored paths.
    pub terms: Vec<VerifyReport>,
    pub path_orthonormality: Option<Check>,
    /// Basis files.
    pub hom: Option<HomReport>,
    pub mix_shapes_match: Option<bool>,
    pub dense_agreement: Option<Check>,
    pub oracle: Option<OracleCheck>,
    pub passed: bool,
}

pub fn verify_container(c: &Container, opts: &ContainerVerifyOptions) -> Result<ContainerReport> {
    let mut report = ContainerReport {
        kind: "decomposition",
        space_spec: c.meta.space_spec.clone(),
        out_space_spec: c.meta.out_space_spec.clone(),
        group: c.meta.group,
        basis: c.meta.basis,
        objects: c.objects.len(),
        terms: Vec::new(),
        path_orthonormality: None,
        hom: None,
        mix_shapes_match: None,
        dense_agreement: None,
        oracle: None,
        passed: false,
    };
    match interpret(c)? {
        Contents::Decomposition { spec, projectors } => {
            let vopts = VerifyOptions {
                samples: opts.samples,
                seed: opts.seed,
                tolerance: opts.tolerance,
            };
            for projs in projectors.iter().filter(|p| !p.is_empty()) {
                report.terms.push(verify_decomposition(&spec, projs, &vopts)?);
            }
            let pms: Vec<&PathMatrix> = projectors.iter().flatten().map(|p| &p.path_matrix).collect();
            let max_rank = spec.terms().iter().map(|t| t.rank()).max().unwrap_or(1);
            let tol = opts
                .tolerance
                .unwrap_or_else(|| crate::decomp::base_tolerance(max_rank));
            report.path_orthonormality = Some(Check::new(path_orthonormality_residual(&pms), tol, "gram"));
            let complete = projectors
                .iter()
                .zip(spec.terms())
                .all(|(p, t)| p.iter().map(|x| x.weight.dim()).sum::<usize>() == t.dim());
            if opts.oracle {
                report.oracle = Some(if !complete {
                    OracleCheck {
                        computed_dimension: None,
                        max_principal_angle: None,
                        tolerance: 1e-7,
                        skipped: Some("container does not hold every path".into()),
                        passed: true,
                    }
                } else {
                    let all: Vec<PathMatrix> = projectors.iter().flatten().map(|p| p.path_matrix.clone()).collect();
                    let elements = basis_from_path_matrices(&spec, &spec, all.clone(), all)?;
                    let hopts = HomVerifyOptions {
                        samples: 1,
                        seed: opts.seed,
                        tolerance: None,
                        oracle: true,
                    };
                    verify_hom_basis(&spec, &spec, &elements, &hopts)?
                        .oracle
                        .expect("oracle requested")
                });
            }
            report.passed = !report.terms.is_empty() || c.objects.is_empty();
            report.passed &= report.terms.iter().all(|r| r.passed)
                && report.path_orthonormality.as_ref().is_none_or(|c| c.passed)
                && report.oracle.as_ref().is_none_or(|o| o.passed);
        }
        Contents::Hom {
            vin,
            vout,
            elements,
            dense,
            mix,
        } => {
            report.kind = "hom_basis";
            let hopts = HomVerifyOptions {
                samples: opts.samples,
                seed: opts.seed,
                tolerance: opts.tolerance,
                oracle: opts.oracle,
            };
            let hom = verify_hom_basis(&vin, &vout, &elements, &hopts)?;
            if !dense.is_empty() || mix.is_empty() && elements.is_empty() {
                let resid = if dense.len() == elements.len() {
                    dense
                        .iter()
                        .zip(&elements)
                        .map(|(d, e)| {
                            let r = match &e.repr {
                                ElementRepr::Dense(m) => m.clone(),
                                ElementRepr::Factored => e.dense(),
                            };
                            if d.shape() == r.shape() {
                                max_abs(&(d - r))
                            } else {
                                f64::INFINITY
                            }
                        })
                        .fold(0.0, f64::max)
                } else {
                    f64::INFINITY
                };
                report.dense_agreement = Some(Check::new(resid, opts.tolerance.unwrap_or(1e-12), "dense"));
            }
            if !mix.is_empty() || dense.is_empty() {
                let want = mix_shapes(&vin, &vout);
                let same = want.len() == mix.len()
                    && want
                        .iter()
                        .zip(&mix)
                        .all(|(a, b)| a.irrep == b.irrep && a.rows == b.rows && a.cols == b.cols);
                report.mix_shapes_match = Some(same);
            }
            report.oracle = hom.oracle.clone();
            report.passed = hom.passed
                && report.dense_agreement.as_ref().is_none_or(|c| c.passed)
                && report.mix_shapes_match.unwrap_or(true);
            report.hom = Some(hom);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{from_bytes, to_bytes};

    fn decomp_bytes(spec: &SpaceSpec, materialize: bool) -> Vec<u8> {
        let mut objs = Vec::new();
        write_decomposition(&mut objs, spec, Basis::Cartesian, None, materialize).unwrap();
        to_bytes(&decomposition_meta(spec, Basis::Cartesian), &objs).unwrap()
    }

    #[test]
    fn rank2_materialized_layout() {
        let s = SpaceSpec::natural_power(Group::O3, 2).unwrap();
        let c = from_bytes(&decomp_bytes(&s, true)).unwrap();
        let names: Vec<&str> = c.objects.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "pm.t0.0+.q1",
                "proj.t0.0+.q1",
                "pm.t0.1+.q1",
                "proj.t0.1+.q1",
                "pm.t0.2+.q1",
                "proj.t0.2+.q1"
            ]
        );
        let opts = ContainerVerifyOptions {
            oracle: true,
            ..Default::default()
        };
        let r = verify_container(&c, &opts).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.oracle.unwrap().computed_dimension, Some(3));
    }

    #[test]
    fn tampered_projector_fails_verification() {
        let s = SpaceSpec::natural_power(Group::O3, 2).unwrap();
        let mut c = from_bytes(&decomp_bytes(&s, true)).unwrap();
        if let Data::F64(m) = &mut c.objects[1].data {
            m[(0, 0)] += 1e-6;
        }
        assert!(!verify_container(&c, &ContainerVerifyOptions::default()).unwrap().passed);
    }

    #[test]
    fn weight_filter_skips_partition() {
        let s = SpaceSpec::natural_power(Group::O3, 3).unwrap();
        let mut objs = Vec::new();
        let f = BTreeSet::from([Weight::integer(1)]);
        let counts = write_decomposition(&mut objs, &s, Basis::Cartesian, Some(&f), false).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[0].count, 3);
        let c = from_bytes(&to_bytes(&decomposition_meta(&s, Basis::Cartesian), &objs).unwrap()).unwrap();
        let r = verify_container(&c, &ContainerVerifyOptions::default()).unwrap();
        assert!(r.passed);
        assert!(r.terms[0].partition_of_identity.is_none());
    }

    #[test]
    fn hom_files_verify() {
        let vin = parse_space_spec("(2x2x2)-+(1x3)-", Group::O3).unwrap();
        let vout = parse_space_spec("(3x4)-", Group::O3).unwrap();
        for dense in [false, true] {
            let mut objs = Vec::new();
            let sum = write_hom(&mut objs, &vin, &vout, Basis::Cartesian, dense).unwrap();
            assert_eq!(sum.hom_dimension, 21);
            let bytes = to_bytes(&hom_meta(&vin, &vout, Basis::Cartesian), &objs).unwrap();
            let c = from_bytes(&bytes).unwrap();
            let opts = ContainerVerifyOptions {
                samples: 4,
                ..Default::default()
            };
            let r = verify_container(&c, &opts).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.dense_agreement.is_some(), dense);
            assert_eq!(r.mix_shapes_match.is_some(), !dense);
        }
    }

    #[test]
    fn empty_hom_file() {
        let vin = SpaceSpec::natural_power(Group::O3, 3).unwrap();
        let vout = SpaceSpec::natural_power(Group::O3, 2).unwrap();
        let mut objs = Vec::new();
        let sum = write_hom(&mut objs, &vin, &vout, Basis::Cartesian, false).unwrap();
        assert_eq!(sum.hom_dimension, 0);
        assert!(objs.is_empty());
        let c = from_bytes(&to_bytes(&hom_meta(&vin, &vout, Basis::Cartesian), &objs).unwrap()).unwrap();
        assert!(verify_container(&c, &ContainerVerifyOptions::default()).unwrap().passed);
    }

    #[test]
    fn su2_decomposition_file() {
        let s = SpaceSpec::natural_power(Group::SU2, 4).unwrap();
        let mut objs = Vec::new();
        write_decomposition(&mut objs, &s, Basis::Spherical, None, true).unwrap();
        let bytes = to_bytes(&decomposition_meta(&s, Basis::Spherical), &objs).unwrap();
        let r = verify_container(&from_bytes(&bytes).unwrap(), &ContainerVerifyOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
