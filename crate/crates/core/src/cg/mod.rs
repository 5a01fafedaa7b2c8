//! Clebsch–Gordan tensors, exact 3j symbols and the real spherical basis.

mod radical;
mod real;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub(crate) use radical::triangle;
pub use radical::{wigner3j, ExactRadical};
pub use real::{cg_real, complex_to_real_basis};

/// An irrep weight `l`, stored doubled so that `l` may be a half-integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Weight(u32);

impl Weight {
    pub const ZERO: Weight = Weight(0);

    pub const fn from_doubled(doubled: u32) -> Self {
        Weight(doubled)
    }

    pub const fn integer(l: u32) -> Self {
        Weight(2 * l)
    }

    pub const fn doubled(self) -> u32 {
        self.0
    }

    /// Dimension `2l + 1` of the irrep.
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    pub const fn is_integer(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// `l` for integer weights.
    pub fn as_integer(self) -> Option<u32> {
        self.is_integer().then_some(self.0 / 2)
    }

    /// Doubled projections `2m` in ascending order.
    pub fn projections(self) -> impl Iterator<Item = i64> + Clone {
        let d = i64::from(self.0);
        (0..=d).map(move |k| 2 * k - d)
    }

    /// Weights `|a - b|, |a - b| + 1, ..., a + b`.
    pub fn coupled(a: Weight, b: Weight) -> impl Iterator<Item = Weight> {
        let lo = a.0.abs_diff(b.0);
        let hi = a.0 + b.0;
        (lo..=hi).step_by(2).map(Weight)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.as_integer() {
            Some(l) => s.serialize_u32(l),
            None => s.serialize_f64(self.value()),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let doubled = 2.0 * v;
        if !(0.0..=1e6).contains(&doubled) || doubled.fract() != 0.0 {
            return Err(serde::de::Error::custom(format!("invalid weight {v}")));
        }
        Ok(Weight(doubled as u32))
    }
}

/// Whether CG entries are expressed in the complex (|l m>) or real spherical basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CgField {
    Complex,
    Real,
}

/// `C^{l1 l2 lo}` as a dense `(2l1+1) × (2l2+1) × (2lo+1)` array, row-major.
///
/// Values are real in both fields: the complex-basis coefficients of SU(2)
/// are real numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct CgTensor {
    pub l1: Weight,
    pub l2: Weight,
    pub lo: Weight,
    pub field: CgField,
    data: Vec<f64>,
}

impl CgTensor {
    pub(crate) fn from_data(l1: Weight, l2: Weight, lo: Weight, field: CgField, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), l1.dim() * l2.dim() * lo.dim());
        CgTensor {
            l1,
            l2,
            lo,
            field,
            data,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.l1.dim(), self.l2.dim(), self.lo.dim())
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        let (_, d2, d3) = self.shape();
        self.data[(a * d2 + b) * d3 + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The `(2l2+1) × (2lo+1)` matrix at fixed first index.
    pub fn slab(&self, a: usize) -> DMatrix<f64> {
        let (_, d2, d3) = self.shape();
        let start = a * d2 * d3;
        DMatrix::from_row_slice(d2, d3, &self.data[start..start + d2 * d3])
    }

    /// Flattened `(2l1+1)(2l2+1) × (2lo+1)` matrix, first index most significant.
    pub fn flattened(&self) -> DMatrix<f64> {
        let (d1, d2, d3) = self.shape();
        DMatrix::from_row_slice(d1 * d2, d3, &self.data)
    }
}

/// Complex-basis CG tensor (Condon–Shortley phases), ascending `m` on every axis.
pub fn cg_complex(l1: Weight, l2: Weight, lo: Weight) -> Result<Arc<CgTensor>> {
    cached(CgField::Complex, l1, l2, lo, || compute_complex(l1, l2, lo))
}

fn compute_complex(l1: Weight, l2: Weight, lo: Weight) -> Result<CgTensor> {
    if !triangle(l1, l2, lo) {
        return Err(Error::Domain(format!("({l1}, {l2}) cannot couple to {lo}")));
    }
    let two_lo_plus_one = num_rational::BigRational::from_integer((lo.doubled() + 1).into());
    let (d1, d2, d3) = (l1.dim(), l2.dim(), lo.dim());
    let mut data = vec![0.0; d1 * d2 * d3];
    for (a, dm1) in l1.projections().enumerate() {
        for (b, dm2) in l2.projections().enumerate() {
            let dmo = dm1 + dm2;
            if dmo.abs() > i64::from(lo.doubled()) {
                continue;
            }
            let c = ((dmo + i64::from(lo.doubled())) / 2) as usize;
            let r = wigner3j(l1, l2, lo, dm1, dm2, -dmo)?.mul_sqrt(&two_lo_plus_one);
            let phase = (i64::from(l1.doubled()) - i64::from(l2.doubled()) + dmo) / 2;
            let r = if phase.rem_euclid(2) == 0 { r } else { r.neg() };
            data[(a * d2 + b) * d3 + c] = r.to_f64();
        }
    }
    Ok(CgTensor::from_data(l1, l2, lo, CgField::Complex, data))
}

type CacheKey = (CgField, u32, u32, u32);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<CgTensor>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<CgTensor>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached(
    field: CgField,
    l1: Weight,
    l2: Weight,
    lo: Weight,
    compute: impl FnOnce() -> Result<CgTensor>,
) -> Result<Arc<CgTensor>> {
    let key = (field, l1.doubled(), l2.doubled(), lo.doubled());
    if let Some(t) = cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(Arc::clone(t));
    }
    // Computed outside the lock; concurrent writers produce identical tensors.
    let t = Arc::new(compute()?);
    let mut map = cache().write().unwrap_or_else(|e| e.into_inner());
    Ok(Arc::clone(map.entry(key).or_insert(t)))
}

/// Drops every memoized tensor (used for cold-cache timings).
pub fn clear_cache() {
    cache().write().unwrap_or_else(|e| e.into_inner()).clear();
}


#[cfg(test)]
mod tests {
    use super::*;

    fn w(l: u32) -> Weight {
        Weight::integer(l)
    }

    #[test]
    fn weight_basics() {
        let h = Weight::from_doubled(3);
        assert_eq!(h.to_string(), "3/2");
        assert_eq!(h.dim(), 4);
        assert!(!h.is_integer());
        assert_eq!(w(2).to_string(), "2");
        assert_eq!(h.projections().collect::<Vec<_>>(), vec![-3, -1, 1, 3]);
        let c: Vec<_> = Weight::coupled(w(1), w(3)).collect();
        assert_eq!(c, vec![w(2), w(3), w(4)]);
        assert_eq!(serde_json::to_string(&h).unwrap(), "1.5");
        assert_eq!(serde_json::to_string(&w(4)).unwrap(), "4");
        assert_eq!(serde_json::from_str::<Weight>("1.5").unwrap(), h);
        assert!(serde_json::from_str::<Weight>("0.25").is_err());
    }

    #[test]
    fn matches_lowering_operator_construction() {
        let weights: Vec<Weight> = (0..=8).map(Weight::from_doubled).collect();
        for &a in &weights {
            for &b in &weights {
                for lo in Weight::coupled(a, b) {
                    let ours = cg_complex(a, b, lo).unwrap().flattened();
                    let theirs = oracle::cg_by_lowering(a, b, lo);
                    let diff = (&ours - &theirs).abs().max();
                    assert!(diff < 1e-12, "({a},{b},{lo}) differs by {diff}");
                }
            }
        }
    }

    #[test]
    fn spin_half_singlet() {
        let h = Weight::from_doubled(1);
        let t = cg_complex(h, h, Weight::ZERO).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(t.shape(), (2, 2, 1));
        assert_eq!(t.get(0, 0, 0), 0.0);
        assert_eq!(t.get(1, 1, 0), 0.0);
        assert!((t.get(0, 1, 0).abs() - s).abs() < 1e-15);
        assert!((t.get(0, 1, 0) + t.get(1, 0, 0)).abs() < 1e-15);
    }

    #[test]
    fn scalar_coupling_is_identity() {
        let t = cg_complex(w(1), w(0), w(1)).unwrap();
        assert_eq!(t.flattened(), DMatrix::identity(3, 3));
        for l in 0..5 {
            let t = cg_complex(w(0), w(l), w(l)).unwrap();
            assert_eq!(t.flattened(), DMatrix::identity(w(l).dim(), w(l).dim()));
        }
    }

    #[test]
    fn selection_rule() {
        let t = cg_complex(w(2), w(1), w(2)).unwrap();
        for a in 0..5 {
            for b in 0..3 {
                for c in 0..5 {
                    if (a as i64 - 2) + (b as i64 - 1) != c as i64 - 2 {
                        assert_eq!(t.get(a, b, c), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn triangle_violation_is_domain_error() {
        assert!(matches!(cg_complex(w(2), w(0), w(1)), Err(Error::Domain(_))));
        assert!(matches!(
            cg_complex(w(1), Weight::from_doubled(1), w(1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn columns_orthonormal_across_output_weights() {
        for l1 in 0..=4 {
            for l2 in 0..=4 {
                let blocks: Vec<DMatrix<f64>> = Weight::coupled(w(l1), w(l2))
                    .map(|lo| cg_complex(w(l1), w(l2), lo).unwrap().flattened())
                    .collect();
                let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
                let mut all = DMatrix::zeros(w(l1).dim() * w(l2).dim(), cols);
                let mut at = 0;
                for b in &blocks {
                    all.columns_mut(at, b.ncols()).copy_from(b);
                    at += b.ncols();
                }
                let gram = all.transpose() * &all;
                let err = (gram - DMatrix::identity(cols, cols)).abs().max();
                assert!(err < 1e-12, "({l1},{l2}): {err}");
            }
        }
    }

    #[test]
    fn cache_returns_same_tensor() {
        let a = cg_complex(w(3), w(2), w(4)).unwrap();
        let b = cg_complex(w(3), w(2), w(4)).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
