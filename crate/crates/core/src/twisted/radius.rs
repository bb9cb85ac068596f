use num_rational::Rational64;

use super::{check_level, derivative_radius, taylor_vector};
use crate::annulus::{Endomorphism, LaurentElement};
use crate::error::Result;
use crate::lognorm::{LogNorm, Radius};

/// Order-`K` evidence for `liminf |d^[k](z)|^(-1/k)`. Nothing below the
/// computed orders is claimed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RadiusCertificate {
    pub order: usize,
    /// `|d^[k](z)|` for `k = 0..=K`
    pub norms: Vec<LogNorm>,
    /// minimum of `|d^[k](z)|^(-1/k)` over `1 <= k <= K`
    pub estimate: Radius,
    pub witness: Option<usize>,
    /// the same minimum restricted to `ceil(K/2) <= k <= K`, closer to the liminf
    pub tail_estimate: Radius,
    pub tail_witness: Option<usize>,
}

fn root(norm: LogNorm, k: usize) -> Radius {
    match norm {
        LogNorm::Zero => Radius::Infinite,
        n => Radius::Finite(n.pow_ratio(Rational64::new(-1, k as i64))),
    }
}

fn min_over(norms: &[LogNorm], range: std::ops::RangeInclusive<usize>) -> (Radius, Option<usize>) {
    let mut best = (Radius::Infinite, None);
    for k in range.filter(|&k| k >= 1 && k < norms.len()) {
        let r = root(norms[k], k);
        if r < best.0 {
            best = (r, Some(k));
        }
    }
    best
}

pub fn radius_estimate(z: &LaurentElement, endo: &Endomorphism, order: usize) -> Result<RadiusCertificate> {
    let norms: Vec<LogNorm> = taylor_vector(endo, z, order)?.iter().map(LaurentElement::gauss_norm).collect();
    let (estimate, witness) = min_over(&norms, 1..=order);
    let (tail_estimate, tail_witness) = min_over(&norms, order.div_ceil(2).max(1)..=order);
    Ok(RadiusCertificate { order, norms, estimate, witness, tail_estimate, tail_witness })
}

/// Evidence up to order `K` that `|d^[k](z)| eta^k` tends to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaConvergenceReport {
    pub level: LogNorm,
    pub order: usize,
    /// `|d^[k](z)| eta^k` for `k = 0..=K`
    pub values: Vec<LogNorm>,
    /// first index from which `values` is non-increasing
    pub monotone_from: usize,
    /// the running maximum of the later values drops strictly below `values[0]`, or reaches zero
    pub decays: bool,
    /// orders where `|d^[k](z)| <= |z| / R^k` fails
    pub bound_violations: Vec<usize>,
}

impl EtaConvergenceReport {
    pub fn bound_holds(&self) -> bool {
        self.bound_violations.is_empty()
    }
}

pub fn eta_convergent_check(z: &LaurentElement, endo: &Endomorphism, eta: LogNorm, order: usize) -> Result<EtaConvergenceReport> {
    check_level(endo, eta)?;
    let derivs = taylor_vector(endo, z, order)?;
    let radius = derivative_radius(&endo.space());
    let znorm = z.gauss_norm();
    let norms: Vec<LogNorm> = derivs.iter().map(LaurentElement::gauss_norm).collect();
    let values: Vec<LogNorm> = norms.iter().enumerate().map(|(k, n)| n.mul(eta.powi(k as i64))).collect();
    let bound_violations = norms
        .iter()
        .enumerate()
        .filter(|(k, n)| **n > znorm.div(radius.powi(*k as i64)))
        .map(|(k, _)| k)
        .collect();
    let mut monotone_from = values.len() - 1;
    while monotone_from > 0 && values[monotone_from - 1] >= values[monotone_from] {
        monotone_from -= 1;
    }
    let later = values.iter().skip(order.div_ceil(2).max(1)).copied().fold(LogNorm::Zero, LogNorm::max);
    let decays = values.last().is_some_and(LogNorm::is_zero) || later < values[0];
    Ok(EtaConvergenceReport { level: eta, order, values, monotone_from, decays, bound_violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annulus::{AnnulusParams, Space};
    use crate::padic::PadicContext;

    fn space() -> Space {
        let ctx = PadicContext::new(5, 40).unwrap();
        let params = AnnulusParams::annulus(0.into(), (-1).into()).unwrap();
        Space::new(ctx, params, (-40, 40)).unwrap()
    }

    #[test]
    fn constants_and_polynomials_have_infinite_radius() {
        let s = space();
        let id = Endomorphism::identity(s);
        let c = LaurentElement::constant(s, s.ctx.int(7));
        assert_eq!(radius_estimate(&c, &id, 10).unwrap().estimate, Radius::Infinite);
        let poly = LaurentElement::from_terms(s, [(0, s.ctx.int(1)), (3, s.ctx.int(4))], LogNorm::Zero);
        let cert = radius_estimate(&poly, &id, 10).unwrap();
        assert_eq!(cert.tail_estimate, Radius::Infinite);
        assert!(matches!(cert.estimate, Radius::Finite(_)));
    }

    #[test]
    fn inverse_of_x() {
        let s = space();
        let id = Endomorphism::identity(s);
        let z = LaurentElement::monomial(s, -1, s.ctx.one());
        let cert = radius_estimate(&z, &id, 12).unwrap();
        for (k, n) in cert.norms.iter().enumerate() {
            assert_eq!(*n, LogNorm::from_log_int(1 + k as i64));
        }
        // r1^((1+k)/k) is smallest at k = 1 and tends to r1
        assert_eq!(cert.estimate, Radius::Finite(LogNorm::from_log_int(-2)));
        assert_eq!(cert.witness, Some(1));
        assert_eq!(cert.tail_estimate, Radius::Finite(LogNorm::from_log(Rational64::new(-7, 6))));
        let report = eta_convergent_check(&z, &id, LogNorm::from_log_int(-2), 12).unwrap();
        assert!(report.decays);
        assert_eq!(report.monotone_from, 0);
        assert!(report.bound_holds());
        assert_eq!(report.values[3], LogNorm::from_log_int(-2));
    }

    #[test]
    fn x_decays_immediately() {
        let s = space();
        let e = Endomorphism::new(s.ctx.int(26), s.ctx.int(25), s).unwrap();
        let report = eta_convergent_check(&LaurentElement::x(s), &e, LogNorm::from_log_int(-2), 5).unwrap();
        assert!(report.decays);
        assert_eq!(report.values[2], LogNorm::Zero);
    }
}
