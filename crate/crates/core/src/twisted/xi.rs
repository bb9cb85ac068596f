use super::{check_level, Nodes};
use crate::annulus::{Endomorphism, LaurentElement, Space};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum XiBasis {
    /// powers `xi^n`
    Monomial,
    /// divided monomials `xi^(n)` of the stored endomorphism
    Divided(Endomorphism),
}

/// A polynomial in `xi` with coefficients in the annulus algebra, viewed in
/// the ring of functions on `|xi| <= eta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XiPolynomial {
    space: Space,
    coeffs: Vec<LaurentElement>,
    basis: XiBasis,
    level: LogNorm,
}

impl XiPolynomial {
    pub fn new(space: Space, coeffs: Vec<LaurentElement>, basis: XiBasis, level: LogNorm) -> Result<Self> {
        if coeffs.iter().any(|c| c.space() != space) {
            return Err(Error::Shape("coefficients live on different spaces".into()));
        }
        if let XiBasis::Divided(endo) = &basis {
            if endo.space() != space {
                return Err(Error::Shape("endomorphism lives on another space".into()));
            }
            check_level(endo, level)?;
        }
        let mut out = XiPolynomial { space, coeffs, basis, level };
        out.trim();
        Ok(out)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(LaurentElement::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coeffs(&self) -> &[LaurentElement] {
        &self.coeffs
    }

    pub fn basis(&self) -> &XiBasis {
        &self.basis
    }

    pub fn level(&self) -> LogNorm {
        self.level
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// `max_n |c_n| eta^n`.
    pub fn eta_norm(&self) -> LogNorm {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c.gauss_norm().mul(self.level.powi(n as i64)))
            .fold(LogNorm::Zero, LogNorm::max)
    }

    /// Coefficientwise equality at working precision, in the same basis.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = LaurentElement::zero(self.space);
        (0..n).all(|i| {
            let a = self.coeffs.get(i).unwrap_or(&zero);
            let b = other.coeffs.get(i).unwrap_or(&zero);
            a.eq_at_precision(b)
        })
    }

    /// Rewrites a monomial-basis polynomial in the divided basis of `sigma`.
    pub fn to_divided(&self, sigma: &Endomorphism) -> Result<Self> {
        match &self.basis {
            XiBasis::Divided(e) if e.same_map(sigma) => return Ok(self.clone()),
            XiBasis::Divided(_) => return self.to_monomial().to_divided(sigma),
            XiBasis::Monomial => {}
        }
        let converted = self.to_divided_unchecked(sigma);
        XiPolynomial::new(self.space, converted.coeffs, XiBasis::Divided(sigma.clone()), self.level)
    }

    /// The basis change alone, without checking the level against `sigma`.
    pub(crate) fn to_divided_unchecked(&self, sigma: &Endomorphism) -> Self {
        let n = self.coeffs.len();
        let nodes = Nodes::new(sigma, n);
        // Horner in xi, using xi * xi^(m) = xi^(m+1) - (x - sigma^m(x)) xi^(m)
        let mut acc: Vec<LaurentElement> = Vec::with_capacity(n);
        for c in self.coeffs.iter().rev() {
            let mut next = vec![LaurentElement::zero(self.space); acc.len() + 1];
            for (m, a) in acc.iter().enumerate() {
                next[m + 1] = &next[m + 1] + a;
                next[m] = &next[m] - &(&nodes.gaps[m] * a);
            }
            next[0] = &next[0] + c;
            acc = next;
        }
        let mut out = XiPolynomial { space: self.space, coeffs: acc, basis: XiBasis::Divided(sigma.clone()), level: self.level };
        out.trim();
        out
    }

    /// Rewrites in the monomial basis; the identity on monomial-basis input.
    pub fn to_monomial(&self) -> Self {
        let XiBasis::Divided(sigma) = &self.basis else {
            return self.clone();
        };
        let n = self.coeffs.len();
        let nodes = Nodes::new(sigma, n);
        // nested form d_0 + (xi + g_0)(d_1 + (xi + g_1)(d_2 + ...))
        let mut acc: Vec<LaurentElement> = Vec::new();
        for (m, d) in self.coeffs.iter().enumerate().rev() {
            let mut next = vec![LaurentElement::zero(self.space); acc.len() + 1];
            for (j, a) in acc.iter().enumerate() {
                next[j + 1] = &next[j + 1] + a;
                next[j] = &next[j] + &(&nodes.gaps[m] * a);
            }
            next[0] = &next[0] + d;
            acc = next;
        }
        let mut out = XiPolynomial { space: self.space, coeffs: acc, basis: XiBasis::Monomial, level: self.level };
        out.trim();
        out
    }
}

/// `xi^(n) = prod_{i<n} (xi + x - sigma^i(x))` in the monomial basis.
pub fn xi_expand(n: usize, sigma: &Endomorphism, level: LogNorm) -> Result<XiPolynomial> {
    let space = sigma.space();
    let mut coeffs = vec![LaurentElement::zero(space); n + 1];
    coeffs[n] = LaurentElement::one(space);
    let divided = XiPolynomial::new(space, coeffs, XiBasis::Divided(sigma.clone()), level)?;
    Ok(divided.to_monomial())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::AnnulusParams;
    use crate::padic::PadicContext;

    fn space() -> Space {
        let ctx = PadicContext::new(5, 40).unwrap();
        let params = AnnulusParams::annulus(0.into(), (-1).into()).unwrap();
        Space::new(ctx, params, (-40, 40)).unwrap()
    }

    fn eta() -> LogNorm {
        LogNorm::from_log_int(-2)
    }

    #[test]
    fn expansions_of_small_orders() {
        let s = space();
        let c = s.ctx;
        let sigma = Endomorphism::new(c.int(26), c.zero(), s).unwrap();
        let one = xi_expand(0, &sigma, eta()).unwrap();
        assert_eq!(one.coeffs(), &[LaurentElement::one(s)]);
        let xi = xi_expand(1, &sigma, eta()).unwrap();
        assert_eq!(xi.coeffs(), &[LaurentElement::zero(s), LaurentElement::one(s)]);
        let two = xi_expand(2, &sigma, eta()).unwrap();
        let gap = LaurentElement::monomial(s, 1, c.int(-25));
        assert_eq!(two.coeffs(), &[LaurentElement::zero(s), gap, LaurentElement::one(s)]);
        let id = Endomorphism::identity(s);
        let plain = xi_expand(2, &id, eta()).unwrap();
        assert_eq!(plain.coeffs().len(), 3);
        assert!(plain.coeffs()[1].is_zero());
    }

    #[test]
    fn square_in_divided_basis() {
        let s = space();
        let c = s.ctx;
        let sigma = Endomorphism::new(c.int(26), c.zero(), s).unwrap();
        let sq = XiPolynomial::new(
            s,
            vec![LaurentElement::zero(s), LaurentElement::zero(s), LaurentElement::one(s)],
            XiBasis::Monomial,
            eta(),
        )
        .unwrap();
        let d = sq.to_divided(&sigma).unwrap();
        assert_eq!(d.coeffs()[1], LaurentElement::monomial(s, 1, c.int(25)));
        assert_eq!(d.coeffs()[2], LaurentElement::one(s));
        assert!(d.to_monomial().eq_at_precision(&sq));
        assert_eq!(d.eta_norm(), sq.eta_norm());
    }
}
