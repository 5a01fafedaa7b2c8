//! Orthogonal irreducible Cartesian tensor decompositions and bases of
//! equivariant linear maps for O(3), SO(3) and SU(2).
//!
//! Everything is built from exact Clebsch–Gordan coefficients chained along
//! the paths of a coupling scheme. The [`oracle`] module solves the same
//! problems by brute force for cross-checking.

pub mod artifact;
pub mod bench;
pub mod cg;
pub mod decomp;
pub mod equimap;
pub mod error;
pub mod group;
pub mod linalg;
pub mod oracle;
pub mod pathmat;
pub mod scheme;
pub mod specparse;
pub mod store;

pub use cg::{cg_complex, cg_real, complex_to_real_basis, wigner3j, CgTensor, ExactRadical, Weight};
pub use decomp::{apply_projection, decompose, verify_decomposition, Projector, VerifyReport};
pub use equimap::{
    apply_map, end_basis, factored_map, hom_basis, project_to_equivariant, BasisElement, FactoredEquivariantMap,
};
pub use error::{Error, ParseError, Result, StoreError};
pub use group::{Group, GroupElement, Parity};
pub use pathmat::{build_path_matrix, rep_matrix, wigner_d, Basis, PathMatrix};
pub use scheme::{
    end_dimension, enumerate_paths, group_paths_by_terminal, hom_dimension, multiplicity, Irrep, Path, SpaceSpec, Step,
    Term,
};
pub use specparse::{parse_space_spec, render_space_spec};
