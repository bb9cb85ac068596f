use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Zero};

use super::{derivative_radius, Nodes, XiBasis, XiPolynomial};
use crate::annulus::{Endomorphism, LaurentElement, Space};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::PadicScalar;

/// The twisted Taylor series `sum_k d^[k](z) xi^(k)` truncated at order `order`.
#[derive(Clone, Debug)]
pub struct TaylorExpansion {
    pub base: LaurentElement,
    pub endo: Endomorphism,
    pub order: usize,
    pub derivatives: Vec<LaurentElement>,
}

// T(x g)_k = sigma^k(x) T(g)_k + T(g)_{k-1}
fn mul_x(t: &[LaurentElement], nodes: &Nodes, space: Space) -> Vec<LaurentElement> {
    (0..t.len())
        .map(|k| {
            let head = &t[k] * &nodes.sigma_x(space, k);
            if k == 0 {
                head
            } else {
                &head + &t[k - 1]
            }
        })
        .collect()
}

// inverse of mul_x: Y_k = (T_k - Y_{k-1}) / sigma^k(x)
fn div_x(t: &[LaurentElement], nodes: &Nodes) -> Result<Vec<LaurentElement>> {
    let mut out: Vec<LaurentElement> = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        let rhs = if k == 0 { t[0].clone() } else { &t[k] - &out[k - 1] };
        out.push(rhs.div_linear(&nodes.q[k], &nodes.h[k])?);
    }
    Ok(out)
}

/// `(d^[0](z), ..., d^[order](z))` through the recurrence
/// `d^[k](x^(n+1)) = sigma^k(x) d^[k](x^n) + d^[k-1](x^n)`, run upward for
/// the nonnegative part of `z` and downward (dividing by `sigma^k(x)`) for
/// the negative part.
pub fn taylor_vector(endo: &Endomorphism, z: &LaurentElement, order: usize) -> Result<Vec<LaurentElement>> {
    let space = endo.space();
    space.same_as(&z.space())?;
    let nodes = Nodes::new(endo, order);
    let zero = LaurentElement::zero(space);
    let mut pos = vec![zero.clone(); order + 1];
    if let Some(top) = z.max_exponent().filter(|&m| m >= 0) {
        for n in (0..=top).rev() {
            pos = mul_x(&pos, &nodes, space);
            pos[0] = &pos[0] + &LaurentElement::constant(space, z.coeff(n));
        }
    }
    let mut neg = vec![zero; order + 1];
    if let Some(bottom) = z.min_exponent().filter(|&m| m < 0) {
        for m in (1..=-bottom).rev() {
            neg[0] = &neg[0] + &LaurentElement::constant(space, z.coeff(-m));
            neg = div_x(&neg, &nodes)?;
        }
    }
    let radius = derivative_radius(&space);
    Ok(pos
        .iter()
        .zip(&neg)
        .enumerate()
        .map(|(k, (a, b))| (a + b).with_tail(z.tail().mul(radius.powi(-(k as i64)))))
        .collect())
}

/// `d^[k](z)`.
pub fn std_apply(k: usize, z: &LaurentElement, endo: &Endomorphism) -> Result<LaurentElement> {
    Ok(taylor_vector(endo, z, k)?.pop().unwrap())
}

/// Coefficients `c_0, ..., c_k` with `d^[k] o z = sum_j c_j d^[j]`, built from
/// `d^[k] o x = sigma^k(x) d^[k] + d^[k-1]` by induction on the exponents of
/// `z`, and from `d^[j] o x^(-1) = sigma^j(x)^(-1) (d^[j] - d^[j-1] o x^(-1))`
/// for negative exponents.
pub fn commute_past(k: usize, z: &LaurentElement, endo: &Endomorphism) -> Result<Vec<LaurentElement>> {
    let space = endo.space();
    space.same_as(&z.space())?;
    let nodes = Nodes::new(endo, k);
    let zero = LaurentElement::zero(space);
    // V o x has coefficients V_j sigma^j(x) + V_{j+1}
    let right_x = |v: &[LaurentElement]| -> Vec<LaurentElement> {
        (0..=k)
            .map(|j| {
                let head = &v[j] * &nodes.sigma_x(space, j);
                if j < k {
                    &head + &v[j + 1]
                } else {
                    head
                }
            })
            .collect()
    };
    // W = V o x^(-1) solves W_j sigma^j(x) + W_{j+1} = V_j from the top
    let right_x_inv = |v: &[LaurentElement]| -> Result<Vec<LaurentElement>> {
        let mut w = vec![zero.clone(); k + 1];
        for j in (0..=k).rev() {
            let rhs = if j < k { &v[j] - &w[j + 1] } else { v[j].clone() };
            w[j] = rhs.div_linear(&nodes.q[j], &nodes.h[j])?;
        }
        Ok(w)
    };
    let mut pos = vec![zero.clone(); k + 1];
    if let Some(top) = z.max_exponent().filter(|&m| m >= 0) {
        for n in (0..=top).rev() {
            pos = right_x(&pos);
            pos[k] = &pos[k] + &LaurentElement::constant(space, z.coeff(n));
        }
    }
    let mut neg = vec![zero.clone(); k + 1];
    if let Some(bottom) = z.min_exponent().filter(|&m| m < 0) {
        for m in (1..=-bottom).rev() {
            neg[k] = &neg[k] + &LaurentElement::constant(space, z.coeff(-m));
            neg = right_x_inv(&neg)?;
        }
    }
    let tail = z.tail();
    if !tail.is_zero() && !endo.is_contractive() {
        return Err(Error::NotContractive);
    }
    let radius = derivative_radius(&space);
    // an omitted part E contributes sigma^j(d^[k-j](E)) to c_j
    Ok(pos
        .iter()
        .zip(&neg)
        .enumerate()
        .map(|(j, (a, b))| (a + b).with_tail(tail.mul(radius.powi(-((k - j) as i64)))))
        .collect())
}

/// Generalized binomial coefficients `binom(n, j)` for `j = 0..=jmax`.
fn binomials(n: i64, jmax: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    for j in 0..jmax {
        let next = &out[j] * BigInt::from(n - j as i64) / BigInt::from(j as i64 + 1);
        out.push(next);
    }
    out
}

/// Reference path for the twisted Taylor series: substitute `x -> x + xi` in
/// `z`, expand in powers of `xi`, and rewrite in the divided basis of `endo`.
pub fn taylor_expand(z: &LaurentElement, endo: &Endomorphism, order: usize) -> Result<TaylorExpansion> {
    let space = endo.space();
    space.same_as(&z.space())?;
    let ctx = space.ctx;
    let radius = derivative_radius(&space);
    let rho = endo.x_radius();
    let polynomial = z.min_exponent().is_none_or(|m| m >= 0) && z.tail().is_zero();
    let (degree, truncated) = if polynomial {
        (z.max_exponent().unwrap_or(0).max(0) as usize, false)
    } else {
        (order + extra_degree(ctx.precision, rho, radius), !rho.is_zero())
    };
    let work = Space {
        window: (space.window.0 - degree as i64, space.window.1 + degree as i64),
        ..space
    };
    let mut monomial = vec![LaurentElement::zero(work); degree + 1];
    for (n, a) in z.coeffs() {
        for (j, b) in binomials(n, degree).into_iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let c = a * &PadicScalar::from_bigint(ctx, b);
            monomial[j].add_term(n - j as i64, c);
        }
    }
    let work_endo = Endomorphism::new(endo.q().clone(), endo.h().clone(), work)?;
    let poly = XiPolynomial::new(work, monomial, XiBasis::Monomial, rho.max(LogNorm::Zero))
        .map(|p| p.to_divided_unchecked(&work_endo))?;
    let znorm = z.gauss_norm();
    let mut derivatives = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut d = poly.coeffs().get(k).map_or(LaurentElement::zero(space), |c| c.rehome(space));
        d = d.with_tail(z.tail().mul(radius.powi(-(k as i64))));
        if truncated {
            let exp = (degree + 1 - k) as i64;
            d = d.with_tail(znorm.mul(radius.powi(-(k as i64))).mul(rho.div(radius).powi(exp)));
        }
        derivatives.push(d);
    }
    Ok(TaylorExpansion { base: z.clone(), endo: endo.clone(), order, derivatives })
}

// smallest e with (rho / radius)^e <= p^-N, capped
fn extra_degree(precision: i64, rho: LogNorm, radius: LogNorm) -> usize {
    let (Some(a), Some(b)) = (rho.log(), radius.log()) else {
        return 0;
    };
    let gap: Rational64 = b - a;
    let e = (Rational64::from_integer(precision) / gap).ceil().to_integer();
    e.clamp(0, 4 * precision) as usize
}

impl Space {
    pub(crate) fn same_as(&self, other: &Space) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape("element and endomorphism live on different spaces".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::AnnulusParams;
    use crate::padic::PadicContext;
    use crate::qcomb::qbinom;

    fn space() -> Space {
        let ctx = PadicContext::new(5, 40).unwrap();
        let params = AnnulusParams::annulus(0.into(), (-1).into()).unwrap();
        Space::new(ctx, params, (-40, 40)).unwrap()
    }

    #[test]
    fn q_binomial_action() {
        let s = space();
        let c = s.ctx;
        let q = c.int(26);
        let sigma = Endomorphism::new(q.clone(), c.zero(), s).unwrap();
        for n in 0..=8i64 {
            let z = LaurentElement::monomial(s, n, c.one());
            let t = taylor_vector(&sigma, &z, 10).unwrap();
            for k in 0..=10usize {
                let expect = LaurentElement::monomial(s, n - k as i64, qbinom(n as u64, k as u64, &q));
                let expect = if k as i64 > n { LaurentElement::zero(s) } else { expect };
                assert_eq!(t[k], expect, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn fast_path_matches_substitution() {
        let s = space();
        let c = s.ctx;
        let sigma = Endomorphism::new(c.int(26), c.int(25), s).unwrap();
        let z = LaurentElement::from_terms(s, [(3, c.int(2)), (-2, c.int(7)), (-5, c.int(5))], LogNorm::Zero);
        let fast = taylor_vector(&sigma, &z, 12).unwrap();
        let slow = taylor_expand(&z, &sigma, 12).unwrap();
        for k in 0..=12 {
            let tol = fast[k].tail().max(slow.derivatives[k].tail());
            assert!(fast[k].eq_within(&slow.derivatives[k], tol), "k={k}");
        }
    }

    #[test]
    fn inverse_power_with_identity() {
        let s = space();
        let c = s.ctx;
        let id = Endomorphism::identity(s);
        let z = LaurentElement::monomial(s, -1, c.one());
        let t = taylor_vector(&id, &z, 6).unwrap();
        for (k, d) in t.iter().enumerate() {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            assert_eq!(d, &LaurentElement::monomial(s, -1 - k as i64, c.int(sign)));
        }
    }

    #[test]
    fn base_commutation() {
        let s = space();
        let c = s.ctx;
        let sigma = Endomorphism::new(c.int(26), c.zero(), s).unwrap();
        let x = LaurentElement::x(s);
        let one = commute_past(1, &x, &sigma).unwrap();
        assert_eq!(one[0], LaurentElement::one(s));
        assert_eq!(&one[1], sigma.sigma_x());
        let two = commute_past(2, &x, &sigma).unwrap();
        assert!(two[0].is_zero());
        assert_eq!(two[1], LaurentElement::one(s));
        assert_eq!(two[2], LaurentElement::monomial(s, 1, c.int(676)));
        let unit = commute_past(3, &LaurentElement::one(s), &sigma).unwrap();
        assert!(unit[..3].iter().all(LaurentElement::is_zero));
        assert_eq!(unit[3], LaurentElement::one(s));
    }
}
