use num_bigint::BigInt;
use num_rational::Rational64;

use super::module::{
    mat_add, mat_distance, mat_identity, mat_mul, mat_norm, mat_scale, mat_sub, vec_norm, ConnectionModule,
    Matrix, SigmaModule,
};
use crate::annulus::{Endomorphism, LaurentElement};
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::{legendre, PadicScalar};
use crate::qcomb::qints_nonzero_upto;
use crate::twisted::{check_level, derivative_radius, std_apply, TwistedOperator};

fn untwisted(m: &ConnectionModule) -> Result<()> {
    if m.endo().is_identity() {
        Ok(())
    } else {
        Err(Error::Inadmissible("the connection must be attached to the identity".into()))
    }
}

fn mat_derivative(a: &Matrix, id: &Endomorphism) -> Result<Matrix> {
    a.iter().map(|row| row.iter().map(|c| std_apply(1, c, id)).collect()).collect()
}

/// `A_0 = 1`, `A_1 = G`, `A_(k+1) = d(A_k) + G A_k`: the matrices of `d_M^k`.
pub fn connection_power_matrices(m: &ConnectionModule, order: usize) -> Result<Vec<Matrix>> {
    untwisted(m)?;
    let space = m.space();
    let g = m.matrix();
    let mut out = vec![mat_identity(space, m.rank())];
    for k in 0..order {
        let next = mat_add(&mat_derivative(&out[k], m.endo())?, &mat_mul(g, &out[k]));
        out.push(next);
    }
    Ok(out)
}

fn factorial(k: usize) -> BigInt {
    (1..=k as u64).fold(BigInt::from(1), |acc, i| acc * i)
}

/// `|1/k!| = p^(v_p(k!))`.
fn inverse_factorial_norm(p: u32, k: usize) -> LogNorm {
    LogNorm::from_log_int(legendre(p, k as i64))
}

/// `p^(1/(p-1))`, the worst growth rate of `|1/k!|`.
fn factorial_rate(p: u32) -> LogNorm {
    LogNorm::from_log(Rational64::new(1, p as i64 - 1))
}

/// Default working level below `eta`: `eta p^(-1/2)`.
pub fn default_eta_prime(eta: LogNorm) -> LogNorm {
    eta.mul(LogNorm::from_log(Rational64::new(-1, 2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailBound {
    /// from `|A_k| <= g^k` with `g = max(1/R, |G|)`
    APriori,
    /// from the decay certificate, assuming it persists past order `K`
    Extrapolated,
}

/// Decay evidence `|A_k / k!| eta'^k` up to order `K`, and the tail bound it supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayCertificate {
    pub eta_prime: LogNorm,
    pub order: usize,
    pub values: Vec<LogNorm>,
    pub decays: bool,
    pub tail: LogNorm,
    pub tail_bound: TailBound,
}

fn decays(values: &[LogNorm]) -> bool {
    let order = values.len() - 1;
    let later = values.iter().skip(order.div_ceil(2).max(1)).copied().fold(LogNorm::Zero, LogNorm::max);
    values.last().is_some_and(LogNorm::is_zero) || later < values[0]
}

// sup_(k>K) rate^k |1/k!| given |M_k| <= g^k
fn a_priori_tail(p: u32, step: LogNorm, order: usize) -> Option<LogNorm> {
    let rate = factorial_rate(p);
    let lambda = step.mul(rate);
    (lambda < LogNorm::ONE).then(|| lambda.powi(order as i64 + 1).div(rate))
}

fn certificate(m: &ConnectionModule, powers: &[Matrix], rho: LogNorm, eta_prime: LogNorm) -> DecayCertificate {
    let p = m.space().ctx.p;
    let order = powers.len() - 1;
    let norms: Vec<LogNorm> = powers
        .iter()
        .enumerate()
        .map(|(k, a)| mat_norm(a).mul(inverse_factorial_norm(p, k)))
        .collect();
    let values: Vec<LogNorm> = norms.iter().enumerate().map(|(k, n)| n.mul(eta_prime.powi(k as i64))).collect();
    let ok = decays(&values);
    let g = mat_norm(m.matrix()).max(derivative_radius(&m.space()).recip().unwrap());
    let (tail, tail_bound) = match a_priori_tail(p, rho.mul(g), order) {
        Some(t) => (t, TailBound::APriori),
        None if rho < eta_prime && !eta_prime.is_zero() => {
            let envelope = values.iter().skip(order.div_ceil(2)).copied().fold(LogNorm::Zero, LogNorm::max);
            (envelope.mul(rho.div(eta_prime).powi(order as i64 + 1)), TailBound::Extrapolated)
        }
        None => (LogNorm::ONE, TailBound::Extrapolated),
    };
    DecayCertificate { eta_prime, order, values, decays: ok, tail, tail_bound }
}

fn preconditions(m: &ConnectionModule, sigma: &Endomorphism, order: usize) -> Result<()> {
    untwisted(m)?;
    if sigma.space() != m.space() {
        return Err(Error::Shape("connection and endomorphism live on different spaces".into()));
    }
    check_level(sigma, m.level())?;
    let report = qints_nonzero_upto(sigma.q(), order as u64);
    if let Some(n) = report.first_failure {
        return Err(Error::NotConvergentAtOrderK { order, reason: format!("(n)_q vanishes at precision for n = {n}") });
    }
    let ctx = m.space().ctx;
    let lost = legendre(ctx.p, order as i64);
    if lost >= ctx.precision {
        return Err(Error::PrecisionExhausted(format!("{order}! has valuation {lost}, precision is {}", ctx.precision)));
    }
    Ok(())
}

/// `sum_(k<=K) c^(k - shift) A_k / k!` over `k >= shift`, with `c = sigma(x) - x`.
fn exp_series(powers: &[Matrix], gap: &LaurentElement, shift: usize) -> Result<Matrix> {
    let space = gap.space();
    let ctx = space.ctx;
    let m = powers[0].len();
    let mut acc = vec![vec![LaurentElement::zero(space); m]; m];
    let mut c_pow = LaurentElement::one(space);
    for (k, a) in powers.iter().enumerate().skip(shift) {
        if k > shift {
            c_pow = &c_pow * gap;
        }
        if c_pow.is_zero() {
            break;
        }
        let inv = ctx.one().div(&PadicScalar::from_bigint(ctx, factorial(k)))?;
        acc = mat_add(&acc, &mat_scale(&c_pow.scale(&inv), a));
    }
    Ok(acc)
}

/// The confluence `sigma_M = sum_k (sigma(x) - x)^k / k! d_M^k` truncated at
/// order `K`, together with the decay certificate at `eta'`.
pub fn confluence_transform_certified(
    m: &ConnectionModule,
    sigma: &Endomorphism,
    eta_prime: Option<LogNorm>,
    order: usize,
) -> Result<(SigmaModule, DecayCertificate)> {
    preconditions(m, sigma, order)?;
    let eta_prime = eta_prime.unwrap_or_else(|| default_eta_prime(m.level()));
    if eta_prime >= m.level() {
        return Err(Error::Config(format!("working level {eta_prime} must lie below {}", m.level())));
    }
    let powers = connection_power_matrices(m, order)?;
    let cert = certificate(m, &powers, sigma.x_radius(), eta_prime);
    if !cert.decays {
        return Err(Error::NotConvergentAtOrderK { order, reason: format!("|A_k/k!| eta'^k does not decay at eta' = {eta_prime}") });
    }
    if cert.tail >= LogNorm::ONE {
        return Err(Error::NotConvergentAtOrderK { order, reason: "no tail bound below 1 for the truncated series".into() });
    }
    let gap = sigma.sigma_x() - &LaurentElement::x(m.space());
    let s = exp_series(&powers, &gap, 0)?;
    let module = SigmaModule::new(s, sigma.clone(), m.level(), order, cert.tail)?;
    Ok((module, cert))
}

pub fn confluence_transform(m: &ConnectionModule, sigma: &Endomorphism, order: usize) -> Result<SigmaModule> {
    confluence_transform_certified(m, sigma, None, order).map(|(s, _)| s)
}

/// `D = sum_(k>=1) (sigma(x) - x)^(k-1) A_k / k!`, the twisted derivation of
/// the deformed module, and a bound on its dropped terms.
pub fn deformed_derivation(m: &ConnectionModule, sigma: &Endomorphism, order: usize, s_tail: LogNorm) -> Result<(Matrix, LogNorm)> {
    let powers = connection_power_matrices(m, order)?;
    let gap = sigma.sigma_x() - &LaurentElement::x(m.space());
    let d = exp_series(&powers, &gap, 1)?;
    let rho = sigma.x_radius();
    let tail = if rho.is_zero() { LogNorm::Zero } else { s_tail.div(rho) };
    Ok((d, tail))
}

/// `sigma_M = q^(x d_M) = sum_k log(q)^k / k! (x d_M)^k` for `sigma(x) = qx`.
pub fn log_derivative_form(m: &ConnectionModule, sigma: &Endomorphism, order: usize) -> Result<SigmaModule> {
    untwisted(m)?;
    if !sigma.h().is_exact_zero() {
        return Err(Error::Inadmissible("the logarithmic form needs sigma(x) = qx".into()));
    }
    preconditions(m, sigma, order)?;
    let space = m.space();
    let ctx = space.ctx;
    let log_q = sigma.q().log().map_err(|e| match e {
        Error::LogDivergent(s) => Error::LogDivergent(s),
        other => Error::LogDivergent(other.to_string()),
    })?;
    let x = LaurentElement::x(space);
    let xg = mat_scale(&x, m.matrix());
    let mut b = mat_identity(space, m.rank());
    let mut acc = b.clone();
    let mut coeff = ctx.one();
    for k in 1..=order {
        let xd: Matrix = mat_derivative(&b, m.endo())?.iter().map(|row| row.iter().map(|c| &x * c).collect()).collect();
        b = mat_add(&xd, &mat_mul(&xg, &b));
        coeff = (&coeff * &log_q).div(&ctx.int(k as i64))?;
        acc = mat_add(&acc, &b.iter().map(|row| row.iter().map(|c| c.scale(&coeff)).collect()).collect());
    }
    // |(x d_M)^k| <= max(1, r |G|)^k
    let g = mat_norm(&xg).max(LogNorm::ONE);
    let tail = a_priori_tail(ctx.p, log_q.norm().mul(g), order).ok_or_else(|| Error::NotConvergentAtOrderK {
        order,
        reason: "log(q) max(1, r|G|) p^(1/(p-1)) is not below 1".into(),
    })?;
    SigmaModule::new(acc, sigma.clone(), m.level(), order, tail)
}

/// `x - sigma(x)` is a certified unit.
pub fn strong_predicate(sigma: &Endomorphism) -> bool {
    let gap = &LaurentElement::x(sigma.space()) - sigma.sigma_x();
    gap.dominant_monomial().is_some()
}

/// `1 - (x - sigma(x)) d^[1]`.
pub fn strong_map(sigma: &Endomorphism, level: LogNorm, max_order: usize) -> Result<TwistedOperator> {
    let space = sigma.space();
    let gap = sigma.sigma_x() - &LaurentElement::x(space);
    TwistedOperator::new(sigma.clone(), level, vec![LaurentElement::one(space), gap], LogNorm::Zero, max_order.max(1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    /// visible part of `S - 1 - (sigma(x) - x) D`
    pub identity_distance: LogNorm,
    pub tolerance: LogNorm,
    pub semilinear_checked: usize,
    pub semilinear_failures: usize,
}

impl StructureReport {
    pub fn identity_holds(&self) -> bool {
        self.identity_distance <= self.tolerance
    }

    pub fn passed(&self) -> bool {
        self.identity_holds() && self.semilinear_failures == 0
    }
}

fn entry_tails(a: &Matrix) -> LogNorm {
    a.iter().flatten().map(LaurentElement::tail).fold(LogNorm::Zero, LogNorm::max)
}

/// Checks `S - 1 = (sigma(x) - x) D` and `sigma_M(z v) = sigma(z) sigma_M(v)` on the samples.
pub fn sigma_structure_identity_check(
    m: &ConnectionModule,
    s: &SigmaModule,
    samples: &[(LaurentElement, Vec<LaurentElement>)],
) -> Result<StructureReport> {
    let sigma = s.endo();
    let (d, d_tail) = deformed_derivation(m, sigma, s.order(), s.tail())?;
    let gap = sigma.sigma_x() - &LaurentElement::x(m.space());
    let lhs = mat_sub(s.matrix(), &mat_identity(m.space(), m.rank()));
    let rhs = mat_scale(&gap, &d);
    let identity_distance = mat_distance(&lhs, &rhs);
    let tolerance = s.tail().max(d_tail.mul(gap.gauss_norm())).max(entry_tails(&lhs)).max(entry_tails(&rhs));
    let mut semilinear_failures = 0;
    for (z, v) in samples {
        let zv: Vec<LaurentElement> = v.iter().map(|c| z * c).collect();
        let left = s.apply(&zv)?;
        let sz = sigma.apply(z)?;
        let right: Vec<LaurentElement> = s.apply(v)?.iter().map(|c| &sz * c).collect();
        let tol = vec_tails(&left).max(vec_tails(&right));
        if left.iter().zip(&right).any(|(a, b)| !a.eq_within(b, tol)) {
            semilinear_failures += 1;
        }
    }
    Ok(StructureReport { identity_distance, tolerance, semilinear_checked: samples.len(), semilinear_failures })
}

fn vec_tails(v: &[LaurentElement]) -> LogNorm {
    v.iter().map(LaurentElement::tail).fold(LogNorm::Zero, LogNorm::max)
}

fn visible_norm(v: &[LaurentElement]) -> LogNorm {
    v.iter().map(|c| c.distance(&LaurentElement::zero(c.space()))).fold(LogNorm::Zero, LogNorm::max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct H0Report {
    /// samples with `|d_M v| <= tol`
    pub horizontal: usize,
    pub horizontal_passed: usize,
    /// sigma-fixed samples checked in the converse direction (only when `x` is strong)
    pub fixed_checked: usize,
    pub fixed_passed: usize,
    pub failures: Vec<String>,
}

impl H0Report {
    /// No sample was horizontal, so nothing was compared.
    pub fn vacuous(&self) -> bool {
        self.horizontal == 0 && self.fixed_checked == 0
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Horizontal samples must be fixed by `sigma_M`; when `x` is strong,
/// `sigma_M`-fixed samples must be horizontal.
pub fn h_complex_sample_check(
    m: &ConnectionModule,
    s: &SigmaModule,
    horizontal: &[Vec<LaurentElement>],
    fixed: &[Vec<LaurentElement>],
    tol: LogNorm,
) -> Result<H0Report> {
    let sigma = s.endo();
    let rho = sigma.x_radius();
    let mut report = H0Report { horizontal: 0, horizontal_passed: 0, fixed_checked: 0, fixed_passed: 0, failures: Vec::new() };
    for v in horizontal {
        let dv = m.derivative(v)?;
        if vec_norm(&dv) > tol {
            continue;
        }
        report.horizontal += 1;
        let diff: Vec<LaurentElement> = s.apply(v)?.iter().zip(v).map(|(a, b)| a - b).collect();
        // sigma_M v - v = sum_(k>=1) c^k/k! d_M^(k-1)(d_M v), each term at most rho |d_M v|
        let allowed = rho.mul(tol).max(vec_tails(&diff));
        if visible_norm(&diff) <= allowed {
            report.horizontal_passed += 1;
        } else {
            report.failures.push(format!("horizontal sample not fixed: |sigma_M v - v| = {}", visible_norm(&diff)));
        }
    }
    if strong_predicate(sigma) {
        let gap = sigma.sigma_x() - &LaurentElement::x(m.space());
        let gap_inv_norm = gap.invert(1)?.gauss_norm();
        for v in fixed {
            let diff: Vec<LaurentElement> = s.apply(v)?.iter().zip(v).map(|(a, b)| a - b).collect();
            if visible_norm(&diff) > tol {
                continue;
            }
            let moved = visible_norm(&diff).max(vec_tails(&diff));
            report.fixed_checked += 1;
            // sigma_M v - v = c D(v) and |D(v)| = |d_M v| when the series contracts
            let dv = m.derivative(v)?;
            if visible_norm(&dv) <= gap_inv_norm.mul(moved) {
                report.fixed_passed += 1;
            } else {
                report.failures.push(format!("fixed sample not horizontal: |d_M v| = {}", visible_norm(&dv)));
            }
        }
    }
    Ok(report)
}
