//! Coefficient rings.
//!
//! `Ring` is what series and polynomial arithmetic needs; `Scalar` adds
//! division and a magnitude, which residues and root finding need.
//! Exact rationals and complex doubles are the two scalars used throughout.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Q = BigRational;
pub type C = Complex64;

/// Exact rational from a numerator/denominator pair.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Nearest rational with denominator `2^52`-ish, exact for dyadic doubles.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).unwrap_or_else(Q::zero)
}

pub trait Ring:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(x: &Q) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&qi(n))
    }

    /// `self^e` for rational `e`, when it exists in the ring.
    /// The default only knows that `1^e = 1`.
    fn rational_pow(&self, e: &Q) -> Option<Self> {
        if self.is_one() {
            Some(Self::one())
        } else if e.is_integer() && !e.is_negative() {
            let k = e.to_integer().to_u32()?;
            let mut acc = Self::one();
            for _ in 0..k {
                acc = acc * self.clone();
            }
            Some(acc)
        } else {
            None
        }
    }
}

pub trait Scalar: Ring + Div<Output = Self> {
    /// True when arithmetic is exact, so zero tests need no tolerance.
    const EXACT: bool;

    fn magnitude(&self) -> f64;
    fn to_complex(&self) -> C;
    /// Exact value, for exact scalars only.
    fn to_rational(&self) -> Option<Q>;
}

impl Ring for Q {
    fn from_rational(x: &Q) -> Self {
        x.clone()
    }

    fn rational_pow(&self, e: &Q) -> Option<Self> {
        if self.is_one() {
            return Some(Q::one());
        }
        if !e.is_integer() {
            return None;
        }
        let k = e.to_integer().to_i32()?;
        if k < 0 && self.is_zero() {
            return None;
        }
        Some(num_traits::pow::Pow::pow(self, k))
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn magnitude(&self) -> f64 {
        q_to_f64(&self.abs())
    }

    fn to_complex(&self) -> C {
        C::new(q_to_f64(self), 0.0)
    }

    fn to_rational(&self) -> Option<Q> {
        Some(self.clone())
    }
}

impl Ring for C {
    fn from_rational(x: &Q) -> Self {
        C::new(q_to_f64(x), 0.0)
    }

    fn rational_pow(&self, e: &Q) -> Option<Self> {
        if e.is_integer() {
            let k = e.to_integer().to_i32()?;
            return Some(self.powi(k));
        }
        if self.is_zero() {
            return None;
        }
        Some(self.powf(q_to_f64(e)))
    }
}

impl Scalar for C {
    const EXACT: bool = false;

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex(&self) -> C {
        *self
    }

    fn to_rational(&self) -> Option<Q> {
        None
    }
}

impl Ring for f64 {
    fn from_rational(x: &Q) -> Self {
        q_to_f64(x)
    }

    fn rational_pow(&self, e: &Q) -> Option<Self> {
        if e.is_integer() {
            return Some(self.powi(e.to_integer().to_i32()?));
        }
        if *self <= 0.0 {
            return None;
        }
        Some(self.powf(q_to_f64(e)))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn to_complex(&self) -> C {
        C::new(*self, 0.0)
    }

    fn to_rational(&self) -> Option<Q> {
        None
    }
}

/// Generalized binomial coefficient `binom(x, r) = x(x-1)...(x-r+1)/r!`.
pub fn binom_q(x: &Q, r: u32) -> Q {
    let mut acc = Q::one();
    for j in 0..r {
        acc = acc * (x - qi(j as i64)) / qi(j as i64 + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom_q(&qi(5), 2), qi(10));
        assert_eq!(binom_q(&qi(2), 3), qi(0));
        // (1/2)(-1/2)/2 = -1/8
        assert_eq!(binom_q(&q(1, 2), 2), q(-1, 8));
        assert_eq!(binom_q(&q(-3, 2), 0), qi(1));
    }

    #[test]
    fn rational_powers() {
        assert_eq!(qi(2).rational_pow(&qi(-2)), Some(q(1, 4)));
        assert_eq!(qi(2).rational_pow(&q(1, 2)), None);
        assert_eq!(qi(1).rational_pow(&q(1, 3)), Some(qi(1)));
        let z = C::new(0.0, 4.0).rational_pow(&q(1, 2)).unwrap();
        assert!((z * z - C::new(0.0, 4.0)).norm() < 1e-14);
    }
}
