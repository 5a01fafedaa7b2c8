use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{cached, cg_complex, CgField, CgTensor, Weight};
use crate::error::{Error, Result};

/// Unitary `U_l` taking complex harmonics `Y_l^m` to real harmonics `Y_{lm}`.
/// Rows are real `m`, columns complex `m`, both ascending.
pub fn complex_to_real_basis(l: Weight) -> Result<DMatrix<Complex64>> {
    let Some(l) = l.as_integer() else {
        return Err(Error::Domain(format!("weight {l} has no real form")));
    };
    let l = l as i64;
    let n = (2 * l + 1) as usize;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let idx = |m: i64| (m + l) as usize;
    let mut u = DMatrix::zeros(n, n);
    for m in -l..=l {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        match m.signum() {
            -1 => {
                u[(idx(m), idx(m))] = Complex64::new(0.0, s);
                u[(idx(m), idx(-m))] = Complex64::new(0.0, -sign * s);
            }
            0 => u[(idx(0), idx(0))] = Complex64::new(1.0, 0.0),
            _ => {
                u[(idx(m), idx(-m))] = Complex64::new(s, 0.0);
                u[(idx(m), idx(m))] = Complex64::new(sign * s, 0.0);
            }
        }
    }
    Ok(u)
}

/// Real-basis CG tensor for integer weights.
pub fn cg_real(l1: Weight, l2: Weight, lo: Weight) -> Result<Arc<CgTensor>> {
    cached(CgField::Real, l1, l2, lo, || compute_real(l1, l2, lo))
}

fn compute_real(l1: Weight, l2: Weight, lo: Weight) -> Result<CgTensor> {
    let c = cg_complex(l1, l2, lo)?;
    let u1 = complex_to_real_basis(l1)?;
    let u2 = complex_to_real_basis(l2)?;
    let uo = complex_to_real_basis(lo)?;
    let (d1, d2, d3) = c.shape();

    // The i^{l1+l2-lo} phase makes the conjugated tensor real.
    let k = ((l1.doubled() + l2.doubled() - lo.doubled()) / 2) % 4;
    let phase = Complex64::i().powu(k);

    // Contract one axis at a time: T1[a, m2, mo] = Σ_{m1} conj(U1[a, m1]) C[m1, m2, mo], ...
    let mut t1 = vec![Complex64::default(); d1 * d2 * d3];
    for a in 0..d1 {
        for m1 in 0..d1 {
            let u = u1[(a, m1)].conj();
            if u == Complex64::default() {
                continue;
            }
            for m2 in 0..d2 {
                for mo in 0..d3 {
                    t1[(a * d2 + m2) * d3 + mo] += u * c.get(m1, m2, mo);
                }
            }
        }
    }
    let mut t2 = vec![Complex64::default(); d1 * d2 * d3];
    for a in 0..d1 {
        for b in 0..d2 {
            for m2 in 0..d2 {
                let u = u2[(b, m2)].conj();
                if u == Complex64::default() {
                    continue;
                }
                for mo in 0..d3 {
                    t2[(a * d2 + b) * d3 + mo] += u * t1[(a * d2 + m2) * d3 + mo];
                }
            }
        }
    }
    let mut data = vec![0.0; d1 * d2 * d3];
    let mut residue = 0.0f64;
    for a in 0..d1 {
        for b in 0..d2 {
            let row = (a * d2 + b) * d3;
            for r in 0..d3 {
                let mut z = Complex64::default();
                for mo in 0..d3 {
                    z += uo[(r, mo)] * t2[row + mo];
                }
                z *= phase;
                residue = residue.max(z.im.abs());
                data[row + r] = z.re;
            }
        }
    }
    if residue >= 1e-12 {
        return Err(Error::Consistency(format!(
            "real CG ({l1}, {l2}, {lo}) has imaginary residue {residue:.3e}"
        )));
    }
    Ok(CgTensor::from_data(l1, l2, lo, CgField::Real, data))
}
