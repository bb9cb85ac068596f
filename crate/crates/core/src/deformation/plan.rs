use crate::annulus::{Endomorphism, LaurentElement};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::twisted::{check_level, xi_expand, Nodes, TwistedOperator};

/// Change of divided basis from a source endomorphism `tau` to a target
/// `sigma`: row `n` holds the coordinates of `xi^(n)_tau` in the basis
/// `xi^(m)_sigma`, `m <= n`.
#[derive(Clone, Debug)]
pub struct DeformationPlan {
    pub source: Endomorphism,
    pub target: Endomorphism,
    pub level: LogNorm,
    pub order: usize,
    pub matrix: Vec<Vec<LaurentElement>>,
}

/// Builds the plan for `tau -> sigma` by expanding `xi^(n)_tau` in powers of
/// `xi` and rewriting in the divided basis of `sigma`.
pub fn basis_change_matrix(sigma: &Endomorphism, tau: &Endomorphism, eta: LogNorm, order: usize) -> Result<DeformationPlan> {
    if sigma.space() != tau.space() {
        return Err(Error::PlanMismatch("endomorphisms live on different spaces".into()));
    }
    check_level(sigma, eta)?;
    check_level(tau, eta)?;
    let space = sigma.space();
    let mut matrix = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let row = xi_expand(n, tau, eta)?.to_divided(sigma)?;
        let mut entries: Vec<LaurentElement> = row.coeffs().to_vec();
        entries.resize(n + 1, LaurentElement::zero(space));
        matrix.push(entries);
    }
    Ok(DeformationPlan { source: tau.clone(), target: sigma.clone(), level: eta, order, matrix })
}

impl DeformationPlan {
    /// `max(rho(sigma), rho(tau))`, which bounds every `|sigma^i(x) - tau^j(x)|`.
    pub fn drift(&self) -> LogNorm {
        self.source.x_radius().max(self.target.x_radius())
    }

    /// Entries `(n, m)` whose norm exceeds `eta^(n-m)`; empty for a valid plan.
    pub fn isometry_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (n, row) in self.matrix.iter().enumerate() {
            for (m, c) in row.iter().enumerate() {
                let bad = if m == n { !c.eq_at_precision(&LaurentElement::one(c.space())) } else { c.gauss_norm() > self.level.powi((n - m) as i64) };
                if bad {
                    out.push((n, m));
                }
            }
        }
        out
    }

    /// The same plan read backwards, `sigma -> tau`.
    pub fn reverse(&self) -> Result<DeformationPlan> {
        basis_change_matrix(&self.source, &self.target, self.level, self.order)
    }
}

/// Rewrites `phi = sum z_n d_tau^[n]` over the target: the new coefficients
/// `w_m` are the values of the same linear form on `xi^(m)_sigma`, solved
/// from `z_n = sum_m C_(n,m) w_m`.
pub fn deform_operator(phi: &TwistedOperator, plan: &DeformationPlan) -> Result<TwistedOperator> {
    if !phi.endo().same_map(&plan.source) {
        return Err(Error::PlanMismatch("operator is not attached to the plan's source".into()));
    }
    if phi.level() != plan.level {
        return Err(Error::PlanMismatch(format!("operator level {} differs from plan level {}", phi.level(), plan.level)));
    }
    if phi.order().is_some_and(|d| d > plan.order) {
        return Err(Error::PlanMismatch(format!("operator order exceeds the plan order {}", plan.order)));
    }
    let k = plan.order;
    let mut w: Vec<LaurentElement> = Vec::with_capacity(k + 1);
    for n in 0..=k {
        let mut acc = phi.coeff(n);
        for (m, wm) in w.iter().enumerate() {
            let c = &plan.matrix[n][m];
            if !c.is_zero() && !wm.is_zero() {
                acc = &acc - &(c * wm);
            }
        }
        w.push(acc);
    }
    // w_n = sum_m D_(n,m) z_m with |D_(n,m)| <= drift^(n-m), so orders above K
    // carry at most |z_m| drift^(K+1-m) / eta^(K+1)
    let eta = plan.level;
    let drift = plan.drift();
    let beyond = phi
        .coeffs()
        .iter()
        .enumerate()
        .map(|(m, z)| z.gauss_norm().mul(drift.powi((k + 1 - m) as i64)))
        .fold(LogNorm::Zero, LogNorm::max)
        .div(eta.powi(k as i64 + 1));
    // with a nonzero input tail, only orders up to the input truncation stay trustworthy
    let max_order = if phi.tail().is_zero() { k } else { k.min(phi.max_order()) };
    TwistedOperator::new(plan.target.clone(), eta, w, phi.tail().max(beyond), max_order)
}

/// `d_sigma = sum_(k>=1) prod_(i=1)^(k-1) (sigma(x) - tau^i(x)) d_tau^[k]`,
/// truncated at order `K`, as an operator over `tau`.
pub fn deform_order1_closed(sigma: &Endomorphism, tau: &Endomorphism, eta: LogNorm, order: usize) -> Result<TwistedOperator> {
    if sigma.space() != tau.space() {
        return Err(Error::PlanMismatch("endomorphisms live on different spaces".into()));
    }
    check_level(sigma, eta)?;
    let space = tau.space();
    let nodes = Nodes::new(tau, order);
    let mut coeffs = vec![LaurentElement::zero(space)];
    let mut prod = LaurentElement::one(space);
    for k in 1..=order {
        if k >= 2 {
            let factor = sigma.sigma_x() - &nodes.sigma_x(space, k - 1);
            prod = &prod * &factor;
        }
        coeffs.push(prod.clone());
    }
    // every product from order K+1 on contains sigma(x) - tau(x) and K-1 factors of norm <= drift
    let first = (sigma.sigma_x() - tau.sigma_x()).gauss_norm();
    let drift = sigma.x_radius().max(tau.x_radius());
    let tail = if order == 0 {
        LogNorm::ONE.div(eta)
    } else {
        first.mul(drift.powi(order as i64 - 1)).div(eta.powi(order as i64 + 1))
    };
    TwistedOperator::new(tau.clone(), eta, coeffs, tail, order)
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

    fn eta() -> LogNorm {
        LogNorm::from_log_int(-2)
    }

    #[test]
    fn identity_plan() {
        let s = space();
        let sigma = Endomorphism::new(s.ctx.int(26), s.ctx.zero(), s).unwrap();
        let plan = basis_change_matrix(&sigma, &sigma, eta(), 6).unwrap();
        for (n, row) in plan.matrix.iter().enumerate() {
            for (m, c) in row.iter().enumerate() {
                if n == m {
                    assert_eq!(c, &LaurentElement::one(s));
                } else {
                    assert!(c.is_zero());
                }
            }
        }
    }

    #[test]
    fn second_row_from_identity() {
        let s = space();
        let sigma = Endomorphism::new(s.ctx.int(26), s.ctx.zero(), s).unwrap();
        let plan = basis_change_matrix(&sigma, &Endomorphism::identity(s), eta(), 4).unwrap();
        assert_eq!(plan.matrix[1], vec![LaurentElement::zero(s), LaurentElement::one(s)]);
        assert_eq!(plan.matrix[2][1], LaurentElement::monomial(s, 1, s.ctx.int(25)));
        assert!(plan.isometry_violations().is_empty());
    }

    #[test]
    fn derivation_of_sigma_over_identity() {
        let s = space();
        let c = s.ctx;
        let sigma = Endomorphism::new(c.int(26), c.zero(), s).unwrap();
        let id = Endomorphism::identity(s);
        let plan = basis_change_matrix(&id, &sigma, eta(), 8).unwrap();
        let d = TwistedOperator::divided_power(1, sigma.clone(), eta(), 8).unwrap();
        let deformed = deform_operator(&d, &plan).unwrap();
        let closed = deform_order1_closed(&sigma, &id, eta(), 8).unwrap();
        for k in 1..=8 {
            let expect = LaurentElement::monomial(s, 1, c.int(25)).pow(k as u32 - 1);
            assert_eq!(deformed.coeff(k), expect, "k = {k}");
        }
        assert!(deformed.distance(&closed).is_zero());
        assert_eq!(deformed.norm(), d.norm());
    }

    #[test]
    fn collapsing_product() {
        let s = space();
        let sigma = Endomorphism::new(s.ctx.int(26), s.ctx.int(25), s).unwrap();
        let op = deform_order1_closed(&sigma, &sigma, eta(), 6).unwrap();
        assert_eq!(op.coeffs().len(), 2);
        assert!(op.tail().is_zero());
    }
}
