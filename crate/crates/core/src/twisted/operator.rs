use super::{check_level, commute_past, derivative_radius, taylor_vector, Nodes};
use crate::annulus::{Endomorphism, LaurentElement};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::PadicScalar;
use crate::qcomb::{qbinom_table, qfact};

/// A truncated operator `sum_{k <= K} z_k d^[k]` of level `eta`. The tail
/// bounds the level-`eta` norm of everything beyond order `K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedOperator {
    endo: Endomorphism,
    level: LogNorm,
    coeffs: Vec<LaurentElement>,
    tail: LogNorm,
    max_order: usize,
}

impl TwistedOperator {
    /// Coefficients above `max_order` are folded into the tail.
    pub fn new(
        endo: Endomorphism,
        level: LogNorm,
        coeffs: Vec<LaurentElement>,
        tail: LogNorm,
        max_order: usize,
    ) -> Result<Self> {
        check_level(&endo, level)?;
        let space = endo.space();
        if coeffs.iter().any(|c| c.space() != space) {
            return Err(Error::Shape("operator coefficients live on another space".into()));
        }
        let mut op = TwistedOperator { endo, level, coeffs: Vec::new(), tail, max_order };
        for (k, c) in coeffs.into_iter().enumerate() {
            op.push_term(k, c);
        }
        op.trim();
        Ok(op)
    }

    pub fn zero(endo: Endomorphism, level: LogNorm, max_order: usize) -> Result<Self> {
        Self::new(endo, level, Vec::new(), LogNorm::Zero, max_order)
    }

    pub fn identity(endo: Endomorphism, level: LogNorm, max_order: usize) -> Result<Self> {
        let one = LaurentElement::one(endo.space());
        Self::new(endo, level, vec![one], LogNorm::Zero, max_order)
    }

    /// `d^[k]`.
    pub fn divided_power(k: usize, endo: Endomorphism, level: LogNorm, max_order: usize) -> Result<Self> {
        let space = endo.space();
        let mut coeffs = vec![LaurentElement::zero(space); k + 1];
        coeffs[k] = LaurentElement::one(space);
        Self::new(endo, level, coeffs, LogNorm::Zero, max_order)
    }

    /// Multiplication by `z`, an operator of order 0.
    pub fn multiplication(z: LaurentElement, endo: Endomorphism, level: LogNorm, max_order: usize) -> Result<Self> {
        Self::new(endo, level, vec![z], LogNorm::Zero, max_order)
    }

    fn push_term(&mut self, k: usize, c: LaurentElement) {
        if k > self.max_order {
            self.tail = self.tail.max(c.gauss_norm().div(self.level.powi(k as i64)));
            return;
        }
        let space = self.endo.space();
        if self.coeffs.len() <= k {
            self.coeffs.resize(k + 1, LaurentElement::zero(space));
        }
        self.coeffs[k] = &self.coeffs[k] + &c;
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(LaurentElement::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn endo(&self) -> &Endomorphism {
        &self.endo
    }

    pub fn level(&self) -> LogNorm {
        self.level
    }

    pub fn coeffs(&self) -> &[LaurentElement] {
        &self.coeffs
    }

    /// `z_k`, zero beyond the stored terms.
    pub fn coeff(&self, k: usize) -> LaurentElement {
        self.coeffs.get(k).cloned().unwrap_or_else(|| LaurentElement::zero(self.endo.space()))
    }

    pub fn tail(&self) -> LogNorm {
        self.tail
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Highest order with a stored coefficient.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_exact(&self) -> bool {
        self.tail.is_zero() && self.coeffs.iter().all(LaurentElement::is_exact)
    }

    pub fn with_tail(mut self, tail: LogNorm) -> Self {
        self.tail = self.tail.max(tail);
        self
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if !self.endo.same_map(&other.endo) {
            return Err(Error::PlanMismatch("operators are attached to different endomorphisms".into()));
        }
        if self.level != other.level {
            return Err(Error::PlanMismatch(format!("levels {} and {} differ", self.level, other.level)));
        }
        Ok(())
    }

    /// `sup_k |z_k| / eta^k`, combined with the tail.
    pub fn norm(&self) -> LogNorm {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.gauss_norm().div(self.level.powi(k as i64)))
            .fold(self.tail, LogNorm::max)
    }

    /// Level-`eta` norm of the visible coefficient differences; tails are not included.
    pub fn distance(&self, other: &Self) -> LogNorm {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| self.coeff(k).distance(&other.coeff(k)).div(self.level.powi(k as i64)))
            .fold(LogNorm::Zero, LogNorm::max)
    }

    /// `sum_k z_k d^[k](z)`.
    pub fn apply(&self, z: &LaurentElement) -> Result<LaurentElement> {
        let Some(top) = self.order() else {
            let zero = LaurentElement::zero(self.endo.space());
            return Ok(zero.with_tail(self.truncation_bound(z)));
        };
        self.apply_taylor(z, &taylor_vector(&self.endo, z, top)?)
    }

    /// [`apply`](Self::apply) with `derivs = taylor_vector(endo, z, k)` already computed for some `k >= order`.
    pub fn apply_taylor(&self, z: &LaurentElement, derivs: &[LaurentElement]) -> Result<LaurentElement> {
        let space = self.endo.space();
        space.same_as(&z.space())?;
        if derivs.len() < self.coeffs.len() {
            return Err(Error::Shape(format!("{} derivatives for an operator of order {:?}", derivs.len(), self.order())));
        }
        let mut out = LaurentElement::zero(space);
        for (c, d) in self.coeffs.iter().zip(derivs) {
            if !c.is_zero() {
                out = &out + &(c * d);
            }
        }
        Ok(out.with_tail(self.truncation_bound(z)))
    }

    // omitted terms w_k d^[k] with |w_k| <= t eta^k and k > K send z to at most t |z| (eta/R)^(K+1)
    fn truncation_bound(&self, z: &LaurentElement) -> LogNorm {
        if self.tail.is_zero() {
            return LogNorm::Zero;
        }
        let ratio = self.level.div(derivative_radius(&self.endo.space()));
        self.tail.mul(z.gauss_norm()).mul(ratio.powi(self.max_order as i64 + 1))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| &self.coeff(k) + &other.coeff(k)).collect();
        let tail = self.tail.max(other.tail);
        Self::new(self.endo.clone(), self.level, coeffs, tail, self.max_order.max(other.max_order))
    }

    /// `z o self`, multiplying every coefficient on the left.
    pub fn left_mul(&self, z: &LaurentElement) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = z * c;
        }
        out.tail = self.tail.mul(z.gauss_norm());
        out.trim();
        out
    }

    /// `self o other`, truncated at the larger of the two orders.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let max_order = self.max_order.max(other.max_order);
        let space = self.endo.space();
        let top = self.coeffs.len() + other.coeffs.len();
        let binom = qbinom_table(top, self.endo.q());
        let mut out = vec![LaurentElement::zero(space); max_order + 1];
        let mut overflow = LogNorm::Zero;
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (l, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                // a d^[j] o b d^[l] = sum_i a c_i (i+l l)_q d^[i+l]
                let crossed = commute_past(j, b, &self.endo)?;
                for (i, c) in crossed.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let term = (a * c).scale(&binom[i + l][l]);
                    if i + l > max_order {
                        overflow = overflow.max(term.gauss_norm().div(self.level.powi((i + l) as i64)));
                    } else {
                        out[i + l] = &out[i + l] + &term;
                    }
                }
            }
        }
        let tail = self
            .tail
            .mul(other.norm())
            .max(self.norm().mul(other.tail))
            .max(overflow);
        Self::new(self.endo.clone(), self.level, out, tail, max_order)
    }

    /// `xi . sum z_k d^[k] = sum (z_(k+1) - z_k (x - sigma^k(x))) d^[k]`.
    pub fn xi_action(&self) -> Self {
        let space = self.endo.space();
        let n = self.coeffs.len();
        let nodes = Nodes::new(&self.endo, n);
        let coeffs: Vec<LaurentElement> = (0..n)
            .map(|k| &self.coeff(k + 1) - &(&self.coeffs[k] * &nodes.gaps[k]))
            .collect();
        let mut out = TwistedOperator {
            endo: self.endo.clone(),
            level: self.level,
            coeffs,
            tail: self.tail.mul(self.level),
            max_order: self.max_order,
        };
        if out.coeffs.is_empty() {
            out.coeffs.push(LaurentElement::zero(space));
        }
        out.trim();
        out
    }
}

/// The image `(k)_q! d^[k]` of the `k`-th Weyl power.
#[derive(Clone, Debug)]
pub struct WeylPower {
    pub operator: TwistedOperator,
    pub factorial: PadicScalar,
    /// false when `(k)_q!` is not a unit, so the Weyl power loses information
    pub unit: bool,
}

pub fn weyl_to_divided(k: usize, endo: &Endomorphism, level: LogNorm, max_order: usize) -> Result<WeylPower> {
    let space = endo.space();
    let factorial = qfact(k as u64, endo.q());
    let mut coeffs = vec![LaurentElement::zero(space); k + 1];
    coeffs[k] = LaurentElement::constant(space, factorial.clone());
    let operator = TwistedOperator::new(endo.clone(), level, coeffs, LogNorm::Zero, max_order.max(k))?;
    let unit = factorial.is_unit();
    Ok(WeylPower { operator, factorial, unit })
}

/// `d o z = d(z) + sigma(z) d` for the twisted derivation `d = d^[1]`.
pub fn weyl_commutation(z: &LaurentElement, endo: &Endomorphism, level: LogNorm, max_order: usize) -> Result<TwistedOperator> {
    let d = taylor_vector(endo, z, 1)?.pop().unwrap();
    let shifted = endo.apply(z)?;
    TwistedOperator::new(endo.clone(), level, vec![d, shifted], LogNorm::Zero, max_order.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{AnnulusParams, Space};
    use crate::padic::PadicContext;
    use crate::qcomb::qint;

    fn space() -> Space {
        let ctx = PadicContext::new(5, 40).unwrap();
        let params = AnnulusParams::annulus(0.into(), (-1).into()).unwrap();
        Space::new(ctx, params, (-40, 40)).unwrap()
    }

    fn eta() -> LogNorm {
        LogNorm::from_log_int(-2)
    }

    fn sigma(s: Space) -> Endomorphism {
        Endomorphism::new(s.ctx.int(26), s.ctx.zero(), s).unwrap()
    }

    fn mono(s: Space, n: i64) -> LaurentElement {
        LaurentElement::monomial(s, n, s.ctx.one())
    }

    #[test]
    fn first_derivative_of_square() {
        let s = space();
        let e = sigma(s);
        let d = TwistedOperator::divided_power(1, e.clone(), eta(), 10).unwrap();
        let out = d.apply(&mono(s, 2)).unwrap();
        assert_eq!(out, LaurentElement::monomial(s, 1, s.ctx.int(27)));
        let xd = d.left_mul(&mono(s, 1));
        assert_eq!(xd.apply(&mono(s, 1)).unwrap(), mono(s, 1));
    }

    #[test]
    fn composition_of_first_derivatives() {
        let s = space();
        let e = sigma(s);
        let d = TwistedOperator::divided_power(1, e.clone(), eta(), 10).unwrap();
        let dd = d.compose(&d).unwrap();
        assert_eq!(dd.coeffs().len(), 3);
        assert!(dd.coeffs()[..2].iter().all(LaurentElement::is_zero));
        assert_eq!(dd.coeffs()[2], LaurentElement::constant(s, qint(2, e.q())));
        let one = TwistedOperator::identity(e.clone(), eta(), 10).unwrap();
        assert!(one.compose(&dd).unwrap().distance(&dd).is_zero());
        assert!(dd.compose(&one).unwrap().distance(&dd).is_zero());
    }

    #[test]
    fn composition_acts_as_nested_application() {
        let s = space();
        let e = Endomorphism::new(s.ctx.int(26), s.ctx.int(25), s).unwrap();
        let xd = TwistedOperator::divided_power(1, e.clone(), eta(), 10).unwrap().left_mul(&mono(s, 1));
        let phi = xd.add(&TwistedOperator::divided_power(2, e.clone(), eta(), 10).unwrap().left_mul(&mono(s, -1))).unwrap();
        let both = phi.compose(&xd).unwrap();
        for n in -3..=4 {
            let z = mono(s, n);
            let lhs = both.apply(&z).unwrap();
            let rhs = phi.apply(&xd.apply(&z).unwrap()).unwrap();
            assert!(lhs.eq_at_precision(&rhs), "n = {n}");
        }
    }

    #[test]
    fn norm_of_reference_operator() {
        let s = space();
        let e = sigma(s);
        let x = mono(s, 1);
        let five = LaurentElement::constant(s, s.ctx.int(5));
        let op = TwistedOperator::new(e, eta(), vec![LaurentElement::zero(s), x, five], LogNorm::Zero, 10).unwrap();
        // max{r eta^-1, p^-1 eta^-2} = max{p^2, p^3}
        assert_eq!(op.norm(), LogNorm::from_log_int(3));
    }

    #[test]
    fn xi_shifts_coefficients() {
        let s = space();
        let e = sigma(s);
        let d = TwistedOperator::divided_power(1, e.clone(), eta(), 10).unwrap();
        let xi_d = d.xi_action();
        assert_eq!(xi_d.coeff(0), LaurentElement::one(s));
        assert_eq!(xi_d.coeff(1), LaurentElement::monomial(s, 1, s.ctx.int(25)));
        let one = TwistedOperator::identity(e, eta(), 10).unwrap();
        assert!(one.xi_action().coeffs().is_empty());
    }

    #[test]
    fn weyl_images() {
        let s = space();
        let e = sigma(s);
        let w = weyl_to_divided(3, &e, eta(), 10).unwrap();
        let q = e.q();
        let expected = &(&s.ctx.one() + q) * &(&(&s.ctx.one() + q) + &(q * q));
        assert_eq!(w.factorial, expected);
        assert!(w.unit);
        // (5)_q is divisible by 5 when q = 1 mod 5
        assert!(!weyl_to_divided(5, &e, eta(), 10).unwrap().unit);
        let c = weyl_commutation(&mono(s, 2), &e, eta(), 10).unwrap();
        assert_eq!(c.coeff(0), LaurentElement::monomial(s, 1, s.ctx.int(27)));
        assert_eq!(c.coeff(1), LaurentElement::monomial(s, 2, s.ctx.int(676)));
    }

    #[test]
    fn truncation_moves_mass_to_tail() {
        let s = space();
        let e = sigma(s);
        let d = TwistedOperator::divided_power(3, e.clone(), eta(), 2).unwrap();
        assert!(d.coeffs().is_empty());
        assert_eq!(d.tail(), LogNorm::from_log_int(6));
        let out = d.apply(&mono(s, 5)).unwrap();
        assert!(out.coeffs().next().is_none());
        assert!(!out.tail().is_zero());
    }
}
