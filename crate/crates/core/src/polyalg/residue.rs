//! Residues of rational functions `num/den`.

use super::poly::Polynomial;
use super::scalar::Scalar;
use super::PolyError;

/// Relative size below which a floating Taylor coefficient of `den` counts as
/// vanished when checking the declared pole order.
pub const POLE_ORDER_TOL: f64 = 1e-6;

/// Coefficient of `(z - pole)^-1` in `num/den`, where `den` vanishes to order
/// `mult` at `pole`.
pub fn residue_at_point<S: Scalar>(
    num: &Polynomial<S>,
    den: &Polynomial<S>,
    pole: &S,
    mult: usize,
) -> Result<S, PolyError> {
    residue_at_point_tol(num, den, pole, mult, POLE_ORDER_TOL)
}

pub fn residue_at_point_tol<S: Scalar>(
    num: &Polynomial<S>,
    den: &Polynomial<S>,
    pole: &S,
    mult: usize,
    tol: f64,
) -> Result<S, PolyError> {
    let d = den.shift(pole);
    let n = num.shift(pole);
    let scale = d.max_abs_coeff();
    let degenerate = || PolyError::DegeneratePole {
        mult,
        detail: format!("taylor coefficients of denominator: {:?}", &d.coeffs()[..d.coeffs().len().min(mult + 1)]),
    };
    for j in 0..mult {
        let c = d.coeff(j);
        let vanished = if S::EXACT { c.is_zero() } else { c.magnitude() <= tol * scale };
        if !vanished {
            return Err(degenerate());
        }
    }
    let d0 = d.coeff(mult);
    let nonzero = if S::EXACT { !d0.is_zero() } else { d0.magnitude() > tol * scale };
    if !nonzero {
        return Err(degenerate());
    }
    // series division n(w) / (w^mult * dd(w)); want [w^(mult-1)] n/dd
    let dd: Vec<S> = (0..mult).map(|j| d.coeff(mult + j)).collect();
    let mut quo: Vec<S> = Vec::with_capacity(mult);
    for k in 0..mult {
        let mut acc = n.coeff(k);
        for j in 1..=k {
            acc = acc - dd[j].clone() * quo[k - j].clone();
        }
        quo.push(acc / dd[0].clone());
    }
    Ok(quo.pop().unwrap_or_else(S::zero))
}

/// Sum of all finite residues of `num/den`, read off the expansion at
/// infinity. This is the sign convention under which `<1,1> = 1/p''` on A_1.
pub fn residue_at_infinity<S: Scalar>(num: &Polynomial<S>, den: &Polynomial<S>) -> Result<S, PolyError> {
    let dd = den.degree().ok_or(PolyError::NonDecaying { num_deg: num.degree(), den_deg: None })?;
    if let Some(nd) = num.degree() {
        if dd < nd + 1 {
            return Err(PolyError::NonDecaying { num_deg: Some(nd), den_deg: Some(dd) });
        }
    }
    if dd == 0 {
        return Ok(S::zero());
    }
    Ok(num.coeff(dd - 1) / den.lead())
}

/// Sum of finite residues for any `num/den`: the polynomial part of the
/// quotient carries no finite residue, so reduce first.
pub fn finite_residue_sum<S: Scalar>(num: &Polynomial<S>, den: &Polynomial<S>) -> Result<S, PolyError> {
    residue_at_infinity(&num.rem(den), den)
}

#[cfg(test)]
mod tests {
    use super::super::poly::qpoly;
    use super::super::scalar::{q, qi, C, Q};
    use super::*;

    #[test]
    fn simple_pole() {
        let r = residue_at_point(&qpoly(&[1]), &qpoly(&[0, 2]), &qi(0), 1).unwrap();
        assert_eq!(r, q(1, 2));
        assert_eq!(residue_at_infinity(&qpoly(&[1]), &qpoly(&[0, 2])).unwrap(), q(1, 2));
    }

    #[test]
    fn triple_pole_without_residue() {
        let r = residue_at_point(&qpoly(&[1]), &qpoly(&[0, 0, 0, 4]), &qi(0), 3).unwrap();
        assert_eq!(r, qi(0));
    }

    #[test]
    fn wrong_order_is_rejected() {
        let den = qpoly(&[0, 0, 1]);
        assert!(residue_at_point(&qpoly(&[1]), &den, &qi(0), 1).is_err());
        assert!(residue_at_point(&qpoly(&[1]), &den, &qi(0), 3).is_err());
    }

    /// Independent oracle: residue of 1/(4(z-1)^2(z+2)) at 1 is the derivative
    /// of 1/(4(z+2)) at 1, i.e. -1/(4*9).
    #[test]
    fn double_pole_against_derivative_oracle() {
        let den = Polynomial::from_roots(&[(qi(1), 2), (qi(-2), 1)]).scale(&qi(4));
        let r = residue_at_point(&qpoly(&[1]), &den, &qi(1), 2).unwrap();
        assert_eq!(r, q(-1, 36));
        let r2 = residue_at_point(&qpoly(&[1]), &den, &qi(-2), 1).unwrap();
        assert_eq!(r + r2, qi(0));
    }

    #[test]
    fn infinity_equals_sum_of_points_z_over_z3_plus_1() {
        let num = qpoly(&[0, 1]);
        let den = qpoly(&[1, 0, 0, 1]);
        assert_eq!(residue_at_infinity(&num, &den).unwrap(), qi(0));
        let numc = num.map(|x| C::new(super::super::scalar::q_to_f64(x), 0.0));
        let denc = den.map(|x| C::new(super::super::scalar::q_to_f64(x), 0.0));
        let mut s = C::new(0.0, 0.0);
        for k in 0..3 {
            let th = std::f64::consts::PI * (2 * k + 1) as f64 / 3.0;
            let r = C::new(th.cos(), th.sin());
            s += residue_at_point(&numc, &denc, &r, 1).unwrap();
        }
        assert!(s.norm() < 1e-14);
    }

    #[test]
    fn non_decaying_rejected() {
        let e = residue_at_infinity::<Q>(&qpoly(&[0, 1]), &qpoly(&[1, 1]));
        assert!(matches!(e, Err(PolyError::NonDecaying { .. })));
        assert_eq!(finite_residue_sum(&qpoly(&[0, 1]), &qpoly(&[1, 1])).unwrap(), qi(-1));
    }
}
