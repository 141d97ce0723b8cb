//! Truncated Laurent series in `z`, expanded about `z = infinity`.
//!
//! A series stores the coefficients of `z^k` for `lo <= k <= hi`. When
//! `trunc = Some(t)` every degree below `t` is unknown; products and powers
//! track how far down the result is still reliable.

use super::scalar::{binom_q, Ring, Q};
use super::PolyError;
use num_traits::{ToPrimitive, Zero};

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<R> {
    lo: i64,
    coeffs: Vec<R>,
    trunc: Option<i64>,
}

impl<R: Ring> LaurentSeries<R> {
    /// Exact Laurent polynomial from `(degree, coefficient)` terms.
    pub fn from_terms(terms: &[(i64, R)]) -> Self {
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![R::zero(); (hi - lo + 1) as usize];
        for (k, c) in terms {
            let i = (k - lo) as usize;
            coeffs[i] = coeffs[i].clone() + c.clone();
        }
        Self { lo, coeffs, trunc: None }.normalized()
    }

    pub fn zero() -> Self {
        Self { lo: 0, coeffs: vec![], trunc: None }
    }

    pub fn monomial(c: R, k: i64) -> Self {
        Self::from_terms(&[(k, c)])
    }

    fn normalized(mut self) -> Self {
        if let Some(t) = self.trunc {
            if self.lo < t {
                let drop = ((t - self.lo) as usize).min(self.coeffs.len());
                self.coeffs.drain(..drop);
                self.lo = t;
            }
        }
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead_zeros = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead_zeros == self.coeffs.len() {
            self.coeffs.clear();
            self.lo = self.trunc.unwrap_or(0);
        } else {
            self.coeffs.drain(..lead_zeros);
            self.lo += lead_zeros as i64;
        }
        self
    }

    pub fn trunc(&self) -> Option<i64> {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest degree with a nonzero coefficient.
    pub fn max_deg(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.lo + self.coeffs.len() as i64 - 1)
        }
    }

    pub fn min_deg(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    pub fn is_known(&self, k: i64) -> bool {
        self.trunc.is_none_or(|t| k >= t)
    }

    /// Coefficient of `z^k`. Panics when `k` lies below the truncation order.
    pub fn coeff(&self, k: i64) -> R {
        assert!(self.is_known(k), "coefficient z^{k} lies below truncation order {:?}", self.trunc);
        if k < self.lo {
            return R::zero();
        }
        self.coeffs.get((k - self.lo) as usize).cloned().unwrap_or_else(R::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &R)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(i, c)| (self.lo + i as i64, c))
    }

    /// Drop everything below degree `order` and mark it unknown.
    pub fn truncate(&self, order: i64) -> Self {
        let t = self.trunc.map_or(order, |t| t.max(order));
        Self { lo: self.lo, coeffs: self.coeffs.clone(), trunc: Some(t) }.normalized()
    }

    pub fn add(&self, o: &Self) -> Self {
        let trunc = match (self.trunc, o.trunc) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        let mut terms: Vec<(i64, R)> = self.terms().map(|(k, c)| (k, c.clone())).collect();
        terms.extend(o.terms().map(|(k, c)| (k, c.clone())));
        let mut s = Self::from_terms(&terms);
        s.trunc = trunc;
        s.normalized()
    }

    pub fn neg(&self) -> Self {
        Self { lo: self.lo, coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(), trunc: self.trunc }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &R) -> Self {
        Self { lo: self.lo, coeffs: self.coeffs.iter().map(|a| a.clone() * c.clone()).collect(), trunc: self.trunc }
            .normalized()
    }

    pub fn mul(&self, o: &Self) -> Self {
        // unknown tail of one factor pollutes the product below tail + top(other)
        let floor_of = |a: &Self, b: &Self| a.trunc.map(|t| t + b.max_deg().unwrap_or(i64::MIN / 4)).unwrap_or(i64::MIN);
        let floor = floor_of(self, o).max(floor_of(o, self));
        let trunc = if self.trunc.is_none() && o.trunc.is_none() { None } else { Some(floor) };
        if self.is_zero() || o.is_zero() {
            let mut z = Self::zero();
            z.trunc = trunc;
            return z.normalized();
        }
        let lo = self.lo + o.lo;
        let mut coeffs = vec![R::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if let Some(t) = trunc {
                    if lo + ((i + j) as i64) < t {
                        continue;
                    }
                }
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { lo, coeffs, trunc }.normalized()
    }

    /// Projection onto non-negative powers of `z`.
    pub fn positive_part(&self) -> Result<Self, PolyError> {
        if !self.is_known(0) {
            return Err(PolyError::WindowTooSmall { needed: 0, available: self.trunc.unwrap_or(0) });
        }
        let terms: Vec<(i64, R)> = self.terms().filter(|(k, _)| *k >= 0).map(|(k, c)| (k, c.clone())).collect();
        Ok(Self::from_terms(&terms))
    }

    pub fn d_dz(&self) -> Self {
        let terms: Vec<(i64, R)> =
            self.terms().filter(|(k, _)| *k != 0).map(|(k, c)| (k - 1, c.clone() * R::from_i64(k))).collect();
        let mut s = Self::from_terms(&terms);
        s.trunc = self.trunc.map(|t| t - 1);
        s.normalized()
    }

    /// Apply `f` to every coefficient (used for derivatives in other variables).
    pub fn map_coeffs(&self, f: impl Fn(&R) -> R) -> Self {
        Self { lo: self.lo, coeffs: self.coeffs.iter().map(f).collect(), trunc: self.trunc }.normalized()
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self { lo: self.lo + k, coeffs: self.coeffs.clone(), trunc: self.trunc.map(|t| t + k) }
    }
}

/// `L^e` truncated below degree `order`, expanded as `c^e z^(d e) sum_r binom(e, r) X^r`
/// with `L = c z^d (1 + X)`. Needs `d e` to be an integer and `c^e` to exist.
pub fn laurent_power<R: Ring>(l: &LaurentSeries<R>, e: &Q, order: i64) -> Result<LaurentSeries<R>, PolyError> {
    let d = l.max_deg().ok_or(PolyError::UndefinedBranch("zero series".into()))?;
    let c = l.coeff(d);
    let de = e * Q::from_integer(d.into());
    if !de.is_integer() {
        return Err(PolyError::UndefinedBranch(format!("degree {d} times exponent {e} is not an integer")));
    }
    let n = de.to_integer().to_i64().ok_or(PolyError::UndefinedBranch("exponent overflow".into()))?;
    let ce = c.rational_pow(e).ok_or_else(|| PolyError::UndefinedBranch(format!("no power {e} of leading coefficient")))?;
    let cinv = c.rational_pow(&Q::from_integer((-1).into())).ok_or_else(|| PolyError::UndefinedBranch("leading coefficient not invertible".into()))?;
    if let Some(t) = l.trunc() {
        let avail = n + t - d;
        if order < avail {
            return Err(PolyError::WindowTooSmall { needed: order, available: avail });
        }
    }
    // X = L / (c z^d) - 1, purely negative powers
    let x = l.scale(&cinv).shift(-d).sub(&LaurentSeries::monomial(R::one(), 0)).truncate(order - n);
    let rmax = (n - order).max(0) as u32;
    let mut acc = LaurentSeries::monomial(R::one(), 0).truncate(order - n);
    let mut xr = LaurentSeries::monomial(R::one(), 0);
    for r in 1..=rmax {
        xr = xr.mul(&x).truncate(order - n);
        if xr.is_zero() {
            break;
        }
        let b = binom_q(e, r);
        if !b.is_zero() {
            acc = acc.add(&xr.scale(&R::from_rational(&b)));
        }
    }
    Ok(acc.scale(&ce).shift(n).truncate(order))
}
