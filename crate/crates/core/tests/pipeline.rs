//! End-to-end: build, write, read back, verify.

use std::collections::BTreeSet;

use ict_core::artifact::{
    decomposition_meta, hom_meta, interpret, verify_container, write_decomposition, write_hom, ContainerVerifyOptions,
    Contents,
};
use ict_core::store::{self, ContainerWriter};
use ict_core::{
    decompose, parse_space_spec, render_space_spec, verify_decomposition, Basis, Error, Group, SpaceSpec, StoreError,
    Weight,
};

fn write_file(
    dir: &tempfile::TempDir,
    name: &str,
    spec: &SpaceSpec,
    basis: Basis,
    materialize: bool,
) -> std::path::PathBuf {
    let file = dir.path().join(name);
    let mut w = ContainerWriter::create(&file, decomposition_meta(spec, basis)).unwrap();
    write_decomposition(&mut w, spec, basis, None, materialize).unwrap();
    w.finish().unwrap();
    file
}

#[test]
fn rank4_file_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let s = SpaceSpec::natural_power(Group::O3, 4).unwrap();
    let file = write_file(&dir, "r4.ictb", &s, Basis::Cartesian, false);
    let c = store::load(&file).unwrap();
    assert_eq!(c.objects.len(), 19);
    let opts = ContainerVerifyOptions {
        oracle: true,
        ..Default::default()
    };
    let r = verify_container(&c, &opts).unwrap();
    assert!(r.passed, "{r:#?}");
    let t = &r.terms[0];
    for check in [
        &t.annihilation,
        &t.idempotence,
        t.partition_of_identity.as_ref().unwrap(),
    ] {
        assert!(check.residual < 1e-10);
    }
    assert_eq!(r.oracle.unwrap().computed_dimension, Some(91));
}

#[test]
fn loaded_projectors_match_fresh_ones() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_space_spec("(1x2)+ + (1)-", Group::O3).unwrap();
    let file = write_file(&dir, "mixed.ictb", &s, Basis::Spherical, true);
    let Contents::Decomposition { spec, projectors } = interpret(&store::load(&file).unwrap()).unwrap() else {
        panic!("expected a decomposition");
    };
    assert_eq!(spec, s);
    let fresh = decompose(&s, None, true, Basis::Spherical).unwrap();
    for (a, b) in projectors.iter().flatten().zip(fresh.iter().flatten()) {
        assert_eq!(a.path_matrix.path, b.path_matrix.path);
        assert_eq!(a.q, b.q);
        assert_eq!(a.dense, b.dense);
        assert_eq!(a.path_matrix.matrix, b.path_matrix.matrix);
    }
    for projs in &projectors {
        assert!(verify_decomposition(&spec, projs, &Default::default()).unwrap().passed);
    }
}

#[test]
fn weight_filter_round_trip() {
    let s = SpaceSpec::natural_power(Group::O3, 4).unwrap();
    let f: BTreeSet<Weight> = [Weight::integer(0), Weight::integer(4)].into();
    let mut objs = Vec::new();
    let counts = write_decomposition(&mut objs, &s, Basis::Cartesian, Some(&f), false).unwrap();
    assert_eq!(counts.iter().map(|c| c.count).collect::<Vec<_>>(), vec![3, 1]);
    let bytes = store::to_bytes(&decomposition_meta(&s, Basis::Cartesian), &objs).unwrap();
    let r = verify_container(&store::from_bytes(&bytes).unwrap(), &Default::default()).unwrap();
    assert!(r.passed);
}

#[test]
fn su2_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_space_spec("(1/2x1/2x1/2)+(3/2)", Group::SU2).unwrap();
    assert_eq!(render_space_spec(&s), "(1/2x1/2x1/2)+(3/2)");
    let file = write_file(&dir, "su2.ictb", &s, Basis::Spherical, true);
    let r = verify_container(&store::load(&file).unwrap(), &Default::default()).unwrap();
    assert!(r.passed, "{r:#?}");
    assert_eq!(r.terms.len(), 2);
}

#[test]
fn hom_file_with_oracle() {
    let vin = parse_space_spec("(1x2)-", Group::O3).unwrap();
    let vout = parse_space_spec("(2)- + (1x1)+", Group::O3).unwrap();
    let mut objs = Vec::new();
    let sum = write_hom(&mut objs, &vin, &vout, Basis::Cartesian, true).unwrap();
    let bytes = store::to_bytes(&hom_meta(&vin, &vout, Basis::Cartesian), &objs).unwrap();
    let opts = ContainerVerifyOptions {
        oracle: true,
        ..Default::default()
    };
    let r = verify_container(&store::from_bytes(&bytes).unwrap(), &opts).unwrap();
    assert!(r.passed, "{r:#?}");
    assert_eq!(r.oracle.unwrap().computed_dimension, Some(sum.hom_dimension as usize));
}

#[test]
fn corrupt_bytes_are_reported_by_object() {
    let s = SpaceSpec::natural_power(Group::O3, 3).unwrap();
    let mut objs = Vec::new();
    write_decomposition(&mut objs, &s, Basis::Cartesian, None, false).unwrap();
    let mut bytes = store::to_bytes(&decomposition_meta(&s, Basis::Cartesian), &objs).unwrap();
    let n = bytes.len();
    bytes[n - 1] ^= 0x80;
    match store::from_bytes(&bytes) {
        Err(Error::Store(StoreError::Crc { object, .. })) => assert_eq!(object, objs.last().unwrap().name),
        other => panic!("{other:?}"),
    }
}
