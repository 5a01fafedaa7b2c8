//! Small dense helpers shared by the construction and verification code.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, Matrix, RawStorage};

/// Applies `F_last ⊗ … ⊗ F_first` to every column of `x` without forming the
/// Kronecker product. `factors[0]` acts on the fastest-varying index.
pub fn kron_apply<T: ComplexField + Copy>(factors: &[DMatrix<T>], x: &DMatrix<T>) -> DMatrix<T> {
    let dim: usize = factors.iter().map(|f| f.nrows()).product();
    assert_eq!(dim, x.nrows(), "operand has the wrong number of rows");
    let mut cur = x.clone();
    let mut next = DMatrix::<T>::zeros(dim, x.ncols());
    let mut stride = 1;
    for f in factors {
        let d = f.nrows();
        if is_identity(f) {
            stride *= d;
            continue;
        }
        let block = d * stride;
        let outer = dim / block;
        for c in 0..x.ncols() {
            let src = cur.column(c);
            let mut dst = next.column_mut(c);
            for o in 0..outer {
                let base = o * block;
                for a in 0..d {
                    for i in 0..stride {
                        let mut acc = T::zero();
                        for b in 0..d {
                            acc += f[(a, b)] * src[base + b * stride + i];
                        }
                        dst[base + a * stride + i] = acc;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        stride *= d;
    }
    cur
}

fn is_identity<T: ComplexField + Copy>(f: &DMatrix<T>) -> bool {
    f.is_square()
        && f.iter().enumerate().all(|(k, &v)| {
            let (i, j) = (k % f.nrows(), k / f.nrows());
            if i == j {
                v == T::one()
            } else {
                v == T::zero()
            }
        })
}

/// Dense `F_last ⊗ … ⊗ F_first`.
pub fn kron_all<T: ComplexField + Copy>(factors: &[DMatrix<T>]) -> DMatrix<T> {
    let mut acc = DMatrix::from_element(1, 1, T::one());
    for f in factors {
        acc = f.kronecker(&acc);
    }
    acc
}

/// Largest entry modulus.
pub fn max_abs<T, S>(m: &Matrix<T, Dyn, Dyn, S>) -> f64
where
    T: ComplexField<RealField = f64>,
    S: RawStorage<T, Dyn, Dyn>,
{
    m.iter().map(|v| v.clone().modulus()).fold(0.0, f64::max)
}

pub fn max_abs_vec<T: ComplexField<RealField = f64>>(v: &DVector<T>) -> f64 {
    v.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// `max |MᴴM - I|`.
pub fn orthonormality_residual<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    let g = m.adjoint() * m;
    let n = g.nrows();
    max_abs(&(g - DMatrix::identity(n, n)))
}

/// Horizontal concatenation.
pub fn hstack<T: ComplexField + Copy>(blocks: &[&DMatrix<T>]) -> DMatrix<T> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

pub fn frobenius_inner<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.dotc(b)
}
