//! Symmetry groups, parities and concrete group elements.

use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    O3,
    SO3,
    SU2,
}

impl Group {
    pub fn has_parity(self) -> bool {
        matches!(self, Group::O3)
    }

    /// Whether half-integer weights are representations of this group.
    pub fn allows_half_integer(self) -> bool {
        matches!(self, Group::SU2)
    }

    /// Weight of the natural representation: 1 for the rotation groups, 1/2 for SU(2).
    pub fn natural_weight(self) -> crate::Weight {
        match self {
            Group::O3 | Group::SO3 => crate::Weight::integer(1),
            Group::SU2 => crate::Weight::from_doubled(1),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::O3 => "o3",
            Group::SO3 => "so3",
            Group::SU2 => "su2",
        })
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "o3" => Ok(Group::O3),
            "so3" => Ok(Group::SO3),
            "su2" => Ok(Group::SU2),
            other => Err(Error::arg(format!("unknown group `{other}`"))),
        }
    }
}

/// Behaviour under spatial inversion. Ordered so that `Odd` (-1) sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "-")]
    Odd,
    #[serde(rename = "+")]
    Even,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    /// Parity of `(R^3)^{⊗n}`, i.e. `(-1)^n`.
    pub fn of_rank(n: usize) -> Parity {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Character of the inversion class: `p` when `det = -1`, 1 otherwise.
    pub fn character(self, det: f64) -> f64 {
        if det < 0.0 {
            self.sign()
        } else {
            1.0
        }
    }
}

impl std::ops::Mul for Parity {
    type Output = Parity;

    fn mul(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "+",
            Parity::Odd => "-",
        })
    }
}

/// Maps Cartesian `(x, y, z)` onto the real spherical `m = (-1, 0, 1)` order `(y, z, x)`.
pub fn cartesian_to_spherical() -> Matrix3<f64> {
    Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
}

/// Spherical row index of each Cartesian axis under [`cartesian_to_spherical`].
pub(crate) const CARTESIAN_TO_SPHERICAL_INDEX: [usize; 3] = [2, 0, 1];

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    /// An element of O(3) in the Cartesian basis.
    Orthogonal(Matrix3<f64>),
    /// An element of SU(2) acting on the weight-1/2 space in ascending `m` order.
    Unitary(Matrix2<Complex64>),
}

impl GroupElement {
    pub fn orthogonal(q: Matrix3<f64>) -> Result<Self> {
        let resid = (q.transpose() * q - Matrix3::identity()).abs().max();
        if resid > 1e-12 {
            return Err(Error::arg(format!("matrix is not orthogonal (residual {resid:.3e})")));
        }
        Ok(GroupElement::Orthogonal(q))
    }

    pub fn unitary(u: Matrix2<Complex64>) -> Result<Self> {
        let resid = (u.adjoint() * u - Matrix2::identity()).map(|z| z.norm()).max();
        let det = u.determinant();
        if resid > 1e-12 || (det - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::arg("matrix is not special unitary"));
        }
        Ok(GroupElement::Unitary(u))
    }

    pub fn identity(group: Group) -> Self {
        match group {
            Group::O3 | Group::SO3 => GroupElement::Orthogonal(Matrix3::identity()),
            Group::SU2 => GroupElement::Unitary(Matrix2::identity()),
        }
    }

    pub fn inversion() -> Self {
        GroupElement::Orthogonal(-Matrix3::identity())
    }

    /// Haar-random element. For O(3), `with_inversion` composes in the inversion.
    pub fn random<R: Rng + ?Sized>(group: Group, rng: &mut R, with_inversion: bool) -> Self {
        match group {
            Group::O3 | Group::SO3 => {
                let r = random_rotation(rng);
                if with_inversion && group == Group::O3 {
                    GroupElement::Orthogonal(-r)
                } else {
                    GroupElement::Orthogonal(r)
                }
            }
            Group::SU2 => {
                let mut q = [0.0f64; 4];
                for x in &mut q {
                    *x = rng.sample(StandardNormal);
                }
                let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                let a = Complex64::new(q[0] / n, q[1] / n);
                let b = Complex64::new(q[2] / n, q[3] / n);
                GroupElement::Unitary(Matrix2::new(a, b, -b.conj(), a.conj()))
            }
        }
    }

    /// `count` random elements; in O(3) every second one includes the inversion.
    pub fn random_batch<R: Rng + ?Sized>(group: Group, rng: &mut R, count: usize) -> Vec<Self> {
        (0..count)
            .map(|i| GroupElement::random(group, rng, i % 2 == 1))
            .collect()
    }

    pub fn group_compatible(&self, group: Group) -> bool {
        match (self, group) {
            (GroupElement::Orthogonal(_), Group::O3) => true,
            (GroupElement::Orthogonal(q), Group::SO3) => q.determinant() > 0.0,
            (GroupElement::Unitary(_), Group::SU2) => true,
            _ => false,
        }
    }

    /// `det(Q)` for O(3) elements, +1 for SU(2).
    pub fn det_sign(&self) -> f64 {
        match self {
            GroupElement::Orthogonal(q) => q.determinant().signum(),
            GroupElement::Unitary(_) => 1.0,
        }
    }

    /// The proper rotation `det(Q)·Q`.
    pub fn rotation(&self) -> Option<Matrix3<f64>> {
        match self {
            GroupElement::Orthogonal(q) => Some(q * self.det_sign()),
            GroupElement::Unitary(_) => None,
        }
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::Orthogonal(a), GroupElement::Orthogonal(b)) => Ok(GroupElement::Orthogonal(a * b)),
            (GroupElement::Unitary(a), GroupElement::Unitary(b)) => Ok(GroupElement::Unitary(a * b)),
            _ => Err(Error::arg("cannot compose elements of different groups")),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        match self {
            GroupElement::Orthogonal(q) => GroupElement::Orthogonal(q.transpose()),
            GroupElement::Unitary(u) => GroupElement::Unitary(u.adjoint()),
        }
    }

    /// Representation matrix of the natural factor in the working basis:
    /// `B R Bᵀ` (spherical) or `R` (Cartesian) for rotations, `U` for SU(2).
    /// Parity is not applied here.
    pub(crate) fn natural<T: RepScalar>(&self, cartesian: bool) -> Result<DMatrix<T>> {
        match self {
            GroupElement::Orthogonal(_) => {
                let r = self.rotation().expect("orthogonal element");
                let m = if cartesian {
                    r
                } else {
                    let b = cartesian_to_spherical();
                    b * r * b.transpose()
                };
                Ok(DMatrix::from_fn(3, 3, |i, j| T::from_real(m[(i, j)])))
            }
            GroupElement::Unitary(u) => {
                if !T::IS_COMPLEX {
                    return Err(Error::arg("SU(2) elements need a complex scalar field"));
                }
                Ok(DMatrix::from_fn(2, 2, |i, j| T::from_c64(u[(i, j)])))
            }
        }
    }
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let g = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if g.determinant().abs() < 1e-6 {
            continue;
        }
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for k in 0..3 {
            if r[(k, k)] < 0.0 {
                q.column_mut(k).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        return q;
    }
}

/// Scalar field of representation matrices: `f64` for the rotation groups,
/// `Complex64` for SU(2).
pub trait RepScalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const IS_COMPLEX: bool;

    /// Imaginary parts are dropped for real fields.
    fn from_c64(z: Complex64) -> Self;

    fn to_c64(self) -> Complex64;
}

impl RepScalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_c64(z: Complex64) -> Self {
        z.re
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl RepScalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_c64(z: Complex64) -> Self {
        z
    }

    fn to_c64(self) -> Complex64 {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_rotations_are_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..50 {
            let g = GroupElement::random(Group::O3, &mut rng, i % 2 == 0);
            let GroupElement::Orthogonal(q) = &g else {
                unreachable!()
            };
            assert!((q.transpose() * q - Matrix3::identity()).abs().max() < 1e-12);
            let expected = if i % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(g.det_sign(), expected);
            assert!((g.rotation().unwrap().determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_su2_is_special_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let GroupElement::Unitary(u) = GroupElement::random(Group::SU2, &mut rng, false) else {
                unreachable!()
            };
            assert!(GroupElement::unitary(u).is_ok());
        }
    }

    #[test]
    fn parity_algebra() {
        assert_eq!(Parity::Odd * Parity::Odd, Parity::Even);
        assert_eq!(Parity::of_rank(3), Parity::Odd);
        assert_eq!(Parity::Odd.character(-1.0), -1.0);
        assert_eq!(Parity::Odd.character(1.0), 1.0);
        assert!(Parity::Odd < Parity::Even);
    }

    #[test]
    fn so3_rejects_reflections() {
        assert!(!GroupElement::inversion().group_compatible(Group::SO3));
        assert!(GroupElement::inversion().group_compatible(Group::O3));
    }
}
