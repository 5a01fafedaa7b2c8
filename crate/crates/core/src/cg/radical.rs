//! Exact Wigner-3j symbols as signed square roots of rationals.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Weight;
use crate::error::{Error, Result};

/// `sign · sqrt(radicand)` with an exact rational radicand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactRadical {
    sign: i8,
    radicand: BigRational,
}

impl ExactRadical {
    pub fn zero() -> Self {
        ExactRadical {
            sign: 0,
            radicand: BigRational::zero(),
        }
    }

    pub fn new(sign: i8, radicand: BigRational) -> Self {
        assert!(!radicand.is_negative(), "negative radicand");
        if sign == 0 || radicand.is_zero() {
            return Self::zero();
        }
        ExactRadical {
            sign: sign.signum(),
            radicand,
        }
    }

    /// The radical `s` with `s = q` for a rational `q`, i.e. `sign(q)·sqrt(q²)`.
    pub fn from_rational(q: &BigRational) -> Self {
        let sign = match q.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        Self::new(sign, q * q)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn radicand(&self) -> &BigRational {
        &self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn neg(&self) -> Self {
        ExactRadical {
            sign: -self.sign,
            radicand: self.radicand.clone(),
        }
    }

    /// Multiply by `sqrt(q)` for a non-negative rational `q`.
    pub fn mul_sqrt(&self, q: &BigRational) -> Self {
        Self::new(self.sign, &self.radicand * q)
    }

    /// Nearest binary64. The integer square root carries 64+ significant bits,
    /// so the conversion to `f64` is the only rounding.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let p = self.radicand.numer().magnitude();
        let q = self.radicand.denom().magnitude();
        // Pick s so that p·4^s / q has at least 130 bits.
        let bits = p.bits() as i64 - q.bits() as i64;
        let s = ((130 - bits) / 2 + 1).max(0) as u64;
        let scaled: BigUint = (p << (2 * s)) / q;
        let r = scaled.sqrt();
        let v = biguint_to_f64(&r) * 2f64.powi(-(s as i32));
        f64::from(self.sign) * v
    }
}

fn biguint_to_f64(x: &BigUint) -> f64 {
    // Keep 64 leading bits plus a sticky bit so that the final rounding is correct.
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().unwrap() as f64;
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    let mut m = top.to_u64().unwrap();
    let rest = x - (&top << shift);
    if !rest.is_zero() {
        m |= 1;
    }
    (m as f64) * 2f64.powi(shift as i32)
}

impl fmt::Display for ExactRadical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}sqrt({})", if s < 0 { "-" } else { "" }, self.radicand),
        }
    }
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Checks that a doubled projection `dm` is admissible for weight `j`.
fn check_projection(j: Weight, dm: i64) -> Result<()> {
    let dj = i64::from(j.doubled());
    if dm.abs() > dj || (dj - dm) % 2 != 0 {
        return Err(Error::arg(format!(
            "m = {} is not a projection of j = {j}",
            fmt_doubled(dm)
        )));
    }
    Ok(())
}

pub(crate) fn fmt_doubled(d: i64) -> String {
    if d % 2 == 0 {
        format!("{}", d / 2)
    } else {
        format!("{d}/2")
    }
}

pub(crate) fn triangle(a: Weight, b: Weight, c: Weight) -> bool {
    let (a, b, c) = (a.doubled(), b.doubled(), c.doubled());
    a.abs_diff(b) <= c && c <= a + b && (a + b + c) % 2 == 0
}

/// Wigner-3j symbol `(j1 j2 j3; m1 m2 m3)` with projections given doubled.
pub fn wigner3j(j1: Weight, j2: Weight, j3: Weight, dm1: i64, dm2: i64, dm3: i64) -> Result<ExactRadical> {
    check_projection(j1, dm1)?;
    check_projection(j2, dm2)?;
    check_projection(j3, dm3)?;
    if dm1 + dm2 + dm3 != 0 || !triangle(j1, j2, j3) {
        return Ok(ExactRadical::zero());
    }
    let (a, b, c) = (
        i64::from(j1.doubled()),
        i64::from(j2.doubled()),
        i64::from(j3.doubled()),
    );
    // Everything below is an integer combination of halves.
    let h = |x: i64| {
        debug_assert!(x % 2 == 0);
        x / 2
    };
    let kmin = 0.max(h(b - c - dm1)).max(h(a - c + dm2));
    let kmax = h(a + b - c).min(h(a - dm1)).min(h(b + dm2));

    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(h(c - b + dm1) + k)
            * factorial(h(c - a - dm2) + k)
            * factorial(h(a + b - c) - k)
            * factorial(h(a - dm1) - k)
            * factorial(h(b + dm2) - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(ExactRadical::zero());
    }

    let triangle_coeff = BigRational::new(
        factorial(h(a + b - c)) * factorial(h(a - b + c)) * factorial(h(-a + b + c)),
        factorial(h(a + b + c) + 1),
    );
    let projections = factorial(h(a + dm1))
        * factorial(h(a - dm1))
        * factorial(h(b + dm2))
        * factorial(h(b - dm2))
        * factorial(h(c + dm3))
        * factorial(h(c - dm3));
    let radicand = triangle_coeff * BigRational::from_integer(projections);

    let phase = h(a - b - dm3);
    let s = ExactRadical::from_rational(&sum).mul_sqrt(&radicand);
    Ok(if phase % 2 == 0 { s } else { s.neg() })
}
