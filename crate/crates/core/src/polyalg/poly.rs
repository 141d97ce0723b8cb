//! Dense univariate polynomials over a `Ring`.

use super::scalar::{Ring, Scalar, Q};
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients indexed by degree; trailing zeros are always trimmed.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<R> {
    coeffs: Vec<R>,
}

impl<R: Ring> Polynomial<R> {
    pub fn new(mut coeffs: Vec<R>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: vec![] }
    }

    pub fn one() -> Self {
        Self::constant(R::one())
    }

    pub fn constant(c: R) -> Self {
        Self::new(vec![c])
    }

    /// `z`
    pub fn x() -> Self {
        Self::monomial(R::one(), 1)
    }

    pub fn monomial(c: R, deg: usize) -> Self {
        let mut v = vec![R::zero(); deg + 1];
        v[deg] = c;
        Self::new(v)
    }

    /// `prod (z - r)^k` over `(r, k)` pairs.
    pub fn from_roots(roots: &[(R, usize)]) -> Self {
        let mut p = Self::one();
        for (r, k) in roots {
            let lin = Self::new(vec![-r.clone(), R::one()]);
            for _ in 0..*k {
                p = &p * &lin;
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    /// Coefficient of `z^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> R {
        self.coeffs.get(i).cloned().unwrap_or_else(R::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> R {
        self.coeffs.last().cloned().unwrap_or_else(R::zero)
    }

    pub fn eval(&self, z: &R) -> R {
        let mut acc = R::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * z.clone() + c.clone();
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * R::from_i64(i as i64))
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, c: &R) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// `p(z + c)`, i.e. the Taylor coefficients of `p` at `c`.
    pub fn shift(&self, c: &R) -> Self {
        // repeated synthetic division
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let t = a[j + 1].clone() * c.clone();
                a[j] = a[j].clone() + t;
            }
        }
        Self::new(a)
    }

    /// `p(q(z))`
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * inner) + &Self::constant(c.clone());
        }
        acc
    }

    pub fn map<T: Ring>(&self, f: impl Fn(&R) -> T) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }
}

impl<S: Scalar> Polynomial<S> {
    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Self {
        let mut v = vec![S::zero()];
        for (i, c) in self.coeffs.iter().enumerate() {
            v.push(c.clone() / S::from_i64(i as i64 + 1));
        }
        Self::new(v)
    }

    /// Euclidean division. Panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.lead();
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut qv = vec![S::zero(); r.len() - dd];
        for k in (0..qv.len()).rev() {
            let c = r[k + dd].clone() / lead.clone();
            for (j, dj) in d.coeffs.iter().enumerate() {
                let t = c.clone() * dj.clone();
                r[k + j] = r[k + j].clone() - t;
            }
            // force exact cancellation of the leading term in floating mode
            r[k + dd] = S::zero();
            qv[k] = c;
        }
        r.truncate(dd);
        (Self::new(qv), Self::new(r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    pub fn monic(&self) -> Self {
        let l = self.lead();
        self.scale(&(S::one() / l))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }
}

impl Polynomial<Q> {
    /// Monic gcd over the rationals.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Yun's square-free decomposition: `p = lead * prod f_k^k`, returning the
    /// monic `f_k` for `k = 1, 2, ...` (possibly constant).
    pub fn squarefree_parts(&self) -> Vec<Self> {
        let mut out = vec![];
        if self.degree().unwrap_or(0) == 0 {
            return out;
        }
        let d = self.derivative();
        let a0 = self.gcd(&d);
        let mut b = self.div_rem(&a0).0;
        let c = d.div_rem(&a0).0;
        let mut dd = &c - &b.derivative();
        loop {
            let a = b.gcd(&dd);
            out.push(a.clone());
            b = b.div_rem(&a).0;
            if b.degree().unwrap_or(0) == 0 {
                break;
            }
            let cc = dd.div_rem(&a).0;
            dd = &cc - &b.derivative();
        }
        out
    }
}

impl<R: Ring> Add for &Polynomial<R> {
    type Output = Polynomial<R>;
    fn add(self, o: &Polynomial<R>) -> Polynomial<R> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl<R: Ring> Sub for &Polynomial<R> {
    type Output = Polynomial<R>;
    fn sub(self, o: &Polynomial<R>) -> Polynomial<R> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl<R: Ring> Mul for &Polynomial<R> {
    type Output = Polynomial<R>;
    fn mul(self, o: &Polynomial<R>) -> Polynomial<R> {
        if self.is_zero() || o.is_zero() {
            return Polynomial::zero();
        }
        let mut v = vec![R::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].clone() + a.clone() * b.clone();
            }
        }
        Polynomial::new(v)
    }
}

impl<R: Ring> Neg for &Polynomial<R> {
    type Output = Polynomial<R>;
    fn neg(self) -> Polynomial<R> {
        Polynomial::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

impl<R: Ring> Zero for Polynomial<R> {
    fn zero() -> Self {
        Polynomial::zero()
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl<R: Ring> Add for Polynomial<R> {
    type Output = Polynomial<R>;
    fn add(self, o: Self) -> Self {
        &self + &o
    }
}

impl<R: Ring> Sub for Polynomial<R> {
    type Output = Polynomial<R>;
    fn sub(self, o: Self) -> Self {
        &self - &o
    }
}

impl<R: Ring> Neg for Polynomial<R> {
    type Output = Polynomial<R>;
    fn neg(self) -> Self {
        -&self
    }
}

impl<R: Ring> One for Polynomial<R> {
    fn one() -> Self {
        Polynomial::one()
    }
}

impl<R: Ring> Mul for Polynomial<R> {
    type Output = Polynomial<R>;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl<R: Ring + fmt::Display> fmt::Display for Polynomial<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{i}")?,
            }
        }
        Ok(())
    }
}

/// Exact rational polynomial from integer coefficients (low degree first).
pub fn qpoly(c: &[i64]) -> Polynomial<Q> {
    Polynomial::new(c.iter().map(|&x| super::scalar::qi(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::super::scalar::{q, qi};
    use super::*;

    #[test]
    fn arithmetic_and_division() {
        let p = qpoly(&[-1, 0, 1]);
        let (qq, r) = p.div_rem(&qpoly(&[-1, 1]));
        assert_eq!(qq, qpoly(&[1, 1]));
        assert!(r.is_zero());
        assert_eq!(p.derivative(), qpoly(&[0, 2]));
        assert_eq!(p.eval(&qi(3)), qi(8));
    }

    #[test]
    fn shift_gives_taylor_coefficients() {
        // z^3 at z = 2 + w: 8 + 12w + 6w^2 + w^3
        let p = qpoly(&[0, 0, 0, 1]);
        assert_eq!(p.shift(&qi(2)), qpoly(&[8, 12, 6, 1]));
    }

    #[test]
    fn integral_inverts_derivative() {
        let p = qpoly(&[3, -4, 0, 5]);
        assert_eq!(p.derivative().integral(), &p - &qpoly(&[3]));
    }

    #[test]
    fn gcd_and_squarefree() {
        // (z-1)^3 (z+2)
        let p = Polynomial::from_roots(&[(qi(1), 3), (qi(-2), 1)]);
        let parts = p.squarefree_parts();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], qpoly(&[2, 1]));
        assert_eq!(parts[1], qpoly(&[1]));
        assert_eq!(parts[2], qpoly(&[-1, 1]));
        let g = p.gcd(&p.derivative());
        assert_eq!(g, Polynomial::from_roots(&[(qi(1), 2)]));
    }

    #[test]
    fn compose_matches_eval() {
        let p = Polynomial::new(vec![q(1, 2), qi(0), qi(3)]);
        let inner = qpoly(&[1, 1]);
        assert_eq!(p.compose(&inner), p.shift(&qi(1)));
    }
}
