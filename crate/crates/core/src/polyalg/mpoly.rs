//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Only what the symbolic checks need: ring arithmetic, partial derivatives,
//! substitution and evaluation. Variables are plain indices.

use super::scalar::{q_to_f64, qi, Ring, Q};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent vector with trailing zeros trimmed.
type Mono = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct MPoly {
    terms: BTreeMap<Mono, Q>,
}

fn trim(mut m: Mono) -> Mono {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)).collect()
}

impl MPoly {
    pub fn constant(c: Q) -> Self {
        let mut p = MPoly::default();
        p.add_term(vec![], c);
        p
    }

    pub fn var(i: usize) -> Self {
        let mut m = vec![0; i + 1];
        m[i] = 1;
        let mut p = MPoly::default();
        p.add_term(m, Q::one());
        p
    }

    /// `c * prod x_i^e_i`
    pub fn term(c: Q, exps: &[u32]) -> Self {
        let mut p = MPoly::default();
        p.add_term(exps.to_vec(), c);
        p
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        let m = trim(m);
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Q)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> Q {
        self.terms.get(&trim(exps.to_vec())).cloned().unwrap_or_else(Q::zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut p = MPoly::default();
        for (m, a) in &self.terms {
            p.add_term(m.clone(), a * c);
        }
        p
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(MPoly::one(), |acc, _| &acc * self)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    /// Largest variable index that occurs, plus one.
    pub fn n_vars(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }

    /// Degree in variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|m| m.get(i).copied().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn diff(&self, i: usize) -> Self {
        let mut p = MPoly::default();
        for (m, c) in &self.terms {
            let e = m.get(i).copied().unwrap_or(0);
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2[i] -= 1;
            p.add_term(m2, c * qi(e as i64));
        }
        p
    }

    /// Replace every variable `i` by `subs[i]` (variables past the end stay).
    pub fn substitute(&self, subs: &[MPoly]) -> Self {
        let mut out = MPoly::default();
        for (m, c) in &self.terms {
            let mut t = MPoly::constant(c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let base = subs.get(i).cloned().unwrap_or_else(|| MPoly::var(i));
                t = &t * &base.pow(e);
            }
            out = &out + &t;
        }
        out
    }

    pub fn eval_q(&self, x: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| q_to_f64(c) * m.iter().enumerate().map(|(i, &e)| x[i].powi(e as i32)).product::<f64>())
            .sum()
    }

    /// True when every monomial has the same weighted degree `sum w_i e_i`.
    pub fn weighted_degree(&self, w: &[Q]) -> Option<Q> {
        let mut deg: Option<Q> = None;
        for m in self.terms.keys() {
            let d: Q = m.iter().enumerate().map(|(i, &e)| &w[i] * qi(e as i64)).fold(Q::zero(), |a, b| a + b);
            match &deg {
                None => deg = Some(d),
                Some(d0) if *d0 != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn display_with(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = vec![];
        for (m, c) in self.terms.iter().rev() {
            let mut s = String::new();
            let vars: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    let n = names.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{i}"));
                    if e == 1 {
                        n
                    } else {
                        format!("{n}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() || !c.is_one() {
                s.push_str(&format!("{c}"));
                if !vars.is_empty() {
                    s.push('*');
                }
            }
            s.push_str(&vars.join("*"));
            parts.push(s);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}

impl Add for &MPoly {
    type Output = MPoly;
    fn add(self, o: &MPoly) -> MPoly {
        let mut p = self.clone();
        for (m, c) in &o.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }
}

impl Sub for &MPoly {
    type Output = MPoly;
    fn sub(self, o: &MPoly) -> MPoly {
        let mut p = self.clone();
        for (m, c) in &o.terms {
            p.add_term(m.clone(), -c.clone());
        }
        p
    }
}

impl Mul for &MPoly {
    type Output = MPoly;
    fn mul(self, o: &MPoly) -> MPoly {
        let mut p = MPoly::default();
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                p.add_term(mono_mul(a, b), ca * cb);
            }
        }
        p
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&qi(-1))
    }
}

impl Add for MPoly {
    type Output = MPoly;
    fn add(self, o: MPoly) -> MPoly {
        &self + &o
    }
}

impl Sub for MPoly {
    type Output = MPoly;
    fn sub(self, o: MPoly) -> MPoly {
        &self - &o
    }
}

impl Mul for MPoly {
    type Output = MPoly;
    fn mul(self, o: MPoly) -> MPoly {
        &self * &o
    }
}

impl Neg for MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        -&self
    }
}

impl Zero for MPoly {
    fn zero() -> Self {
        MPoly::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for MPoly {
    fn one() -> Self {
        MPoly::constant(Q::one())
    }
}

impl Ring for MPoly {
    fn from_rational(x: &Q) -> Self {
        MPoly::constant(x.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::super::scalar::q;
    use super::*;

    #[test]
    fn expand_and_cancel() {
        let x = MPoly::var(0);
        let y = MPoly::var(1);
        let s = &x + &y;
        let d = &x - &y;
        let lhs = &s * &d;
        let rhs = &x.pow(2) - &y.pow(2);
        assert_eq!(lhs, rhs);
        assert!((&lhs - &rhs).is_zero());
    }

    #[test]
    fn derivative_and_substitution() {
        let x = MPoly::var(0);
        let y = MPoly::var(1);
        let p = &(&x.pow(3) * &y) + &MPoly::constant(q(1, 2));
        assert_eq!(p.diff(0), (&x.pow(2) * &y).scale(&qi(3)));
        // y -> x + 1
        let sub = p.substitute(&[x.clone(), &x + &MPoly::one()]);
        assert_eq!(sub.eval_q(&[qi(2)]), qi(8 * 3) + q(1, 2));
    }

    #[test]
    fn weighted_homogeneity() {
        let x = MPoly::var(0);
        let y = MPoly::var(1);
        let p = &x.pow(2) + &y;
        assert_eq!(p.weighted_degree(&[qi(1), qi(2)]), Some(qi(2)));
        assert_eq!(p.weighted_degree(&[qi(1), qi(1)]), None);
    }
}
