//! Divided-power twisted differential operators `d^[k]` attached to an
//! endomorphism `sigma`, the divided monomials `xi^(n)`, twisted Taylor
//! expansions and radius-of-convergence certificates.
//!
//! Conventions: `xi^(n) = prod_{i<n} (xi + x - sigma^i(x))`, and `d^[k](z)` is
//! the coefficient of `xi^(k)` in the expansion of `z(x + xi)`, i.e. the
//! divided difference of `z` at the nodes `x, sigma(x), ..., sigma^k(x)`.
//! With these, `d^[k] o x = sigma^k(x) d^[k] + d^[k-1]` and
//! `d^[k](x^n) = (n k)_q x^(n-k)` when `sigma(x) = qx`.

mod derivatives;
mod operator;
mod radius;
mod xi;

pub use derivatives::{commute_past, std_apply, taylor_expand, taylor_vector, TaylorExpansion};
pub use operator::{weyl_commutation, weyl_to_divided, TwistedOperator, WeylPower};
pub use radius::{eta_convergent_check, radius_estimate, EtaConvergenceReport, RadiusCertificate};
pub use xi::{xi_expand, XiBasis, XiPolynomial};

use crate::annulus::{Endomorphism, LaurentElement, Space};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::PadicScalar;

/// `sigma^i(x) = q_i x + h_i` and the gaps `x - sigma^i(x)` for `i <= n`.
#[derive(Clone, Debug)]
pub(crate) struct Nodes {
    pub q: Vec<PadicScalar>,
    pub h: Vec<PadicScalar>,
    pub gaps: Vec<LaurentElement>,
}

impl Nodes {
    pub fn new(endo: &Endomorphism, n: usize) -> Self {
        let space = endo.space();
        let ctx = space.ctx;
        let mut q = vec![ctx.one()];
        let mut h = vec![ctx.zero()];
        for i in 0..n {
            h.push(&h[i] + &(&q[i] * endo.h()));
            q.push(&q[i] * endo.q());
        }
        let gaps = q
            .iter()
            .zip(&h)
            .map(|(qi, hi)| {
                LaurentElement::from_terms(space, [(1, &ctx.one() - qi), (0, -hi)], LogNorm::Zero)
            })
            .collect();
        Nodes { q, h, gaps }
    }

    pub fn sigma_x(&self, space: Space, i: usize) -> LaurentElement {
        LaurentElement::from_terms(space, [(1, self.q[i].clone()), (0, self.h[i].clone())], LogNorm::Zero)
    }
}

/// Radius `R` with `|d^[k](z)| <= |z| / R^k`: the inner radius of an annulus, the radius of a disk.
pub(crate) fn derivative_radius(space: &Space) -> LogNorm {
    match space.params.inner_log {
        Some(r1) => LogNorm::Finite(r1),
        None => space.params.r(),
    }
}

/// Checks that `eta` is a usable level for operators attached to `endo`:
/// `eta >= rho(sigma)` through the two comparisons, and the algebra is
/// `eta`-convergent (`eta < r1`, or `eta <= r` on a disk).
pub fn check_level(endo: &Endomorphism, eta: LogNorm) -> Result<()> {
    let adm = endo.eta_admissible(eta);
    if !adm.holds() {
        let mut why = Vec::new();
        if !adm.q_ok {
            why.push("|1 - q| > eta / r");
        }
        if !adm.h_ok {
            why.push("|h| > eta");
        }
        return Err(Error::LevelNotAdmissible { level: eta, reason: why.join(", ") });
    }
    let space = endo.space();
    let convergent = match space.params.inner_log {
        Some(r1) => eta < LogNorm::Finite(r1),
        None => eta <= space.params.r(),
    };
    if !convergent {
        return Err(Error::LevelNotAdmissible {
            level: eta,
            reason: "the annulus algebra is not convergent at this level".into(),
        });
    }
    if eta.is_zero() {
        return Err(Error::LevelNotAdmissible { level: eta, reason: "level must be positive".into() });
    }
    Ok(())
}
