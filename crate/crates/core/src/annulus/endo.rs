use super::{LaurentElement, Space};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::{NormValue, PadicScalar};
use crate::qcomb::qint;

/// Outcome of checking whether `x -> qx + h` defines an endomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibilityReport {
    /// `|q| <= 1`
    pub q_bounded: bool,
    /// `|h| <= r`
    pub h_bounded: bool,
    /// `|q| >= r1/r` or `|h| >= r1`
    pub inner_circle_ok: bool,
    /// `q` a unit with `|q| = |1/q| = 1` and `|h| <= r`
    pub bijective: bool,
    pub violations: Vec<String>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.q_bounded && self.h_bounded && self.inner_circle_ok
    }
}

pub fn endo_validate(q: &PadicScalar, h: &PadicScalar, space: &Space) -> AdmissibilityReport {
    let params = space.params;
    let (r, r1) = (params.r(), params.r1());
    let qn = q.norm();
    let hn = h.norm();
    // lower bounds need the exact norm; an upper bound proves nothing
    let exact = |v: &PadicScalar| match v.padic_norm() {
        NormValue::Exact(n) => n,
        NormValue::AtMost(_) => LogNorm::Zero,
    };
    let q_bounded = qn <= LogNorm::ONE;
    let h_bounded = hn <= r;
    let inner_circle_ok = params.is_disk() || exact(q) >= r1.div(r) || exact(h) >= r1;
    let bijective = q.is_unit() && h_bounded;
    let mut violations = Vec::new();
    if !q_bounded {
        violations.push(format!("|q| = {qn} exceeds 1"));
    }
    if !h_bounded {
        violations.push(format!("|h| = {hn} exceeds r = {r}"));
    }
    if !inner_circle_ok {
        violations.push(format!("neither |q| >= r1/r = {} nor |h| >= r1 = {r1}", r1.div(r)));
    }
    AdmissibilityReport { q_bounded, h_bounded, inner_circle_ok, bijective, violations }
}

/// The two comparisons behind `eta >= rho(sigma)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaAdmissibility {
    /// `|1 - q| <= eta / r`
    pub q_ok: bool,
    /// `|h| <= eta`
    pub h_ok: bool,
    /// `eta >= x_radius`
    pub radius_ok: bool,
}

impl EtaAdmissibility {
    pub fn holds(&self) -> bool {
        self.q_ok && self.h_ok
    }
}

/// An admissible endomorphism `x -> qx + h` of the annulus algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endomorphism {
    q: PadicScalar,
    h: PadicScalar,
    space: Space,
    x_radius: LogNorm,
    sigma_x: LaurentElement,
    sigma_x_inv: Option<LaurentElement>,
    contractive: bool,
}

impl Endomorphism {
    pub fn new(q: PadicScalar, h: PadicScalar, space: Space) -> Result<Self> {
        if q.ctx() != space.ctx || h.ctx() != space.ctx {
            return Err(Error::ContextMismatch("endomorphism parameters".into()));
        }
        let report = endo_validate(&q, &h, &space);
        if !report.admissible() {
            return Err(Error::Inadmissible(report.violations.join("; ")));
        }
        Ok(Self::build(q, h, space))
    }

    pub fn identity(space: Space) -> Self {
        Self::build(space.ctx.one(), space.ctx.zero(), space)
    }

    fn build(q: PadicScalar, h: PadicScalar, space: Space) -> Self {
        let x_radius = (&space.ctx.one() - &q).norm().mul(space.params.r()).max(h.norm());
        let sigma_x = LaurentElement::from_terms(space, [(1, q.clone()), (0, h.clone())], LogNorm::Zero);
        let span = (space.window.1 - space.window.0) as usize;
        let sigma_x_inv = if space.params.is_disk() { None } else { sigma_x.invert(span).ok() };
        let contractive = sigma_x.gauss_norm() <= space.params.r()
            && (space.params.is_disk()
                || sigma_x_inv
                    .as_ref()
                    .is_some_and(|inv| inv.gauss_norm() <= space.params.r1().recip().unwrap()));
        Endomorphism { q, h, space, x_radius, sigma_x, sigma_x_inv, contractive }
    }

    pub fn q(&self) -> &PadicScalar {
        &self.q
    }

    pub fn h(&self) -> &PadicScalar {
        &self.h
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// `rho(sigma) = |x - sigma(x)| = max{|1 - q| r, |h|}`.
    pub fn x_radius(&self) -> LogNorm {
        self.x_radius
    }

    pub fn is_contractive(&self) -> bool {
        self.contractive
    }

    pub fn is_identity(&self) -> bool {
        self.q.is_one() && self.h.is_exact_zero()
    }

    /// Same map at working precision on the same space.
    pub fn same_map(&self, other: &Endomorphism) -> bool {
        self.space == other.space
            && self.q.eq_at_precision(&other.q)
            && self.h.eq_at_precision(&other.h)
    }

    /// `sigma(x) = qx + h`.
    pub fn sigma_x(&self) -> &LaurentElement {
        &self.sigma_x
    }

    pub fn sigma_x_inverse(&self) -> Option<&LaurentElement> {
        self.sigma_x_inv.as_ref()
    }

    pub fn eta_admissible(&self, eta: LogNorm) -> EtaAdmissibility {
        let r = self.space.params.r();
        let one_minus_q = (&self.space.ctx.one() - &self.q).norm();
        EtaAdmissibility {
            q_ok: one_minus_q <= eta.div(r),
            h_ok: self.h.norm() <= eta,
            radius_ok: self.x_radius <= eta,
        }
    }

    /// `sigma^n(x) = q^n x + (n)_q h`.
    pub fn iterate(&self, n: u64) -> Endomorphism {
        if n == 1 {
            return self.clone();
        }
        Self::build(self.q.pow(n), &qint(n, &self.q) * &self.h, self.space)
    }

    /// Substitutes `qx + h` for `x`.
    pub fn apply(&self, f: &LaurentElement) -> Result<LaurentElement> {
        self.space.same(&f.space());
        let space = self.space;
        if !f.tail().is_zero() && !self.contractive {
            return Err(Error::NotContractive);
        }
        let mut pos = LaurentElement::zero(space);
        if let Some(top) = f.max_exponent().filter(|&m| m >= 0) {
            for n in (0..=top).rev() {
                pos = &(&pos * &self.sigma_x) + &LaurentElement::constant(space, f.coeff(n));
            }
        }
        let mut neg = LaurentElement::zero(space);
        if let Some(bottom) = f.min_exponent().filter(|&m| m < 0) {
            let y = self.sigma_x_inv.as_ref().ok_or_else(|| {
                Error::NotAUnit(format!("sigma(x) = {} has no certified inverse", self.sigma_x))
            })?;
            for m in (1..=-bottom).rev() {
                neg = &(&neg + &LaurentElement::constant(space, f.coeff(-m))) * y;
            }
        }
        Ok((&pos + &neg).with_tail(f.tail()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractivityReport {
    pub checked: usize,
    /// `(witness, |f|, |sigma(f)|)` for every failure
    pub violations: Vec<(String, LogNorm, LogNorm)>,
}

impl ContractivityReport {
    pub fn contractive(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares `|sigma(f)|` with `|f|` on monomials `x^n`, `|n| <= max_abs`, and on the samples.
pub fn contractivity_check(sigma: &Endomorphism, max_abs: i64, samples: &[LaurentElement]) -> ContractivityReport {
    let space = sigma.space;
    let mut checked = 0;
    let mut violations = Vec::new();
    let monomials = (-max_abs..=max_abs)
        .filter(|n| space.contains(*n))
        .map(|n| LaurentElement::monomial(space, n, space.ctx.one()));
    for f in monomials.chain(samples.iter().cloned()) {
        checked += 1;
        let before = f.gauss_norm();
        match sigma.apply(&f) {
            Ok(img) if img.gauss_norm() <= before => {}
            Ok(img) => violations.push((f.to_text(), before, img.gauss_norm())),
            Err(e) => violations.push((format!("{f}: {e}"), before, LogNorm::Zero)),
        }
    }
    ContractivityReport { checked, violations }
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

    fn reference(s: Space) -> Endomorphism {
        Endomorphism::new(s.ctx.int(26), s.ctx.int(25), s).unwrap()
    }

    #[test]
    fn validation_examples() {
        let s = space();
        let c = s.ctx;
        let id = endo_validate(&c.one(), &c.zero(), &s);
        assert!(id.admissible() && id.bijective);
        let rf = endo_validate(&c.int(26), &c.int(25), &s);
        assert!(rf.admissible() && rf.bijective);
        let contracting = endo_validate(&c.int(5), &c.zero(), &s);
        assert!(contracting.admissible() && !contracting.bijective);
        let bad = endo_validate(&c.int(25), &c.zero(), &s);
        assert!(!bad.admissible());
        assert_eq!(bad.violations.len(), 1);
        assert!(Endomorphism::new(c.int(25), c.zero(), s).is_err());
    }

    #[test]
    fn radius_and_eta() {
        let s = space();
        let c = s.ctx;
        assert_eq!(Endomorphism::identity(s).x_radius(), LogNorm::Zero);
        let sigma = reference(s);
        assert_eq!(sigma.x_radius(), LogNorm::from_log_int(-2));
        let shift = Endomorphism::new(c.one(), c.int(25), s).unwrap();
        assert_eq!(shift.x_radius(), LogNorm::from_log_int(-2));
        assert!(sigma.eta_admissible(LogNorm::from_log_int(-2)).holds());
        let e3 = sigma.eta_admissible(LogNorm::from_log_int(-3));
        assert!(!e3.holds() && !e3.h_ok);
        assert!(Endomorphism::identity(s).eta_admissible(LogNorm::Zero).holds());
    }

    #[test]
    fn iterates() {
        let s = space();
        let c = s.ctx;
        let sigma = reference(s);
        let id = sigma.iterate(0);
        assert!(id.is_identity());
        let two = sigma.iterate(2);
        assert_eq!(two.q(), &c.int(26 * 26));
        assert_eq!(two.h(), &c.int(27 * 25));
        let shift = Endomorphism::new(c.one(), c.int(25), s).unwrap();
        assert_eq!(shift.iterate(3).h(), &c.int(75));
        let composed = sigma.apply(sigma.sigma_x()).unwrap();
        assert_eq!(&composed, two.sigma_x());
    }

    #[test]
    fn apply_on_powers() {
        let s = space();
        let c = s.ctx;
        let sigma = reference(s);
        let x2 = LaurentElement::monomial(s, 2, c.one());
        let img = sigma.apply(&x2).unwrap();
        let expect = LaurentElement::from_terms(
            s,
            [(2, c.int(676)), (1, c.int(2 * 26 * 25)), (0, c.int(625))],
            LogNorm::Zero,
        );
        assert_eq!(img, expect);
        let xinv = LaurentElement::monomial(s, -1, c.one());
        let img = sigma.apply(&xinv).unwrap();
        assert!(img.coeff(-1).eq_at_precision(&c.int(26).inv().unwrap()));
        let prod = &img * sigma.sigma_x();
        assert!(prod.eq_within(&LaurentElement::one(s), prod.tail()));
        assert!(sigma.is_contractive());
    }

    #[test]
    fn reference_map_is_contractive_on_monomials() {
        let s = space();
        let report = contractivity_check(&reference(s), 20, &[]);
        assert_eq!(report.checked, 41);
        assert!(report.contractive(), "{:?}", report.violations);
    }
}
