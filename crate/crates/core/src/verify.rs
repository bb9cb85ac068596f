//! Seeded verification suites, one per acceptance criterion.
//!
//! Every suite draws from its own ChaCha stream derived from the config seed
//! and the suite name, so a suite's report does not depend on which other
//! suites ran or in which order.

use num_bigint::BigInt;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::annulus::{Endomorphism, LaurentElement, Space};
use crate::config::Config;
use crate::deformation::{
    basis_change_matrix, confluence_transform_certified, deform_operator, deform_order1_closed, h_complex_sample_check,
    log_derivative_form, sigma_structure_identity_check, ConnectionModule, SigmaModule, TailBound,
};
use crate::error::{Error, Result};
use crate::io;
use crate::lognorm::LogNorm;
use crate::padic::{small_int, PadicContext, PadicScalar};
use crate::qcomb::{qbinom, qbinom_norm_bound, qbinom_table};
use crate::twisted::{derivative_radius, taylor_expand, taylor_vector, std_apply, TwistedOperator, XiBasis, XiPolynomial};

/// Suite names with the criterion each one drives.
pub const SUITES: [(&str, u32); 12] = [
    ("pascal", 1),
    ("divided-power", 2),
    ("schauder", 3),
    ("annulus-bound", 4),
    ("deformation", 5),
    ("confluence-exp", 6),
    ("confluence-power", 7),
    ("structure", 8),
    ("operator-algebra", 9),
    ("radius-admissibility", 10),
    ("log-derivative", 11),
    ("roundtrip", 12),
];

const MAX_LISTED: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: u32,
    pub checks: usize,
    pub failed: usize,
    /// the first few failure messages
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str, criterion: u32) -> Self {
        SuiteReport { suite: suite.into(), criterion, checks: 0, failed: 0, failures: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checks > 0
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED {
                self.failures.push(what());
            }
        }
    }

    fn ok<T>(&mut self, r: Result<T>, what: impl FnOnce() -> String) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, || format!("{}: {e}", what()));
                None
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub p: u32,
    pub precision: i64,
    #[serde(rename = "order_K")]
    pub order: usize,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("seed {}  p {}  N {}  K {}\n", self.seed, self.p, self.precision, self.order);
        for s in &self.suites {
            let verdict = if s.passed() { "PASS" } else { "FAIL" };
            out += &format!("[{:>2}] {:<22} {verdict}  checks {}  failed {}\n", s.criterion, s.suite, s.checks, s.failed);
            for n in &s.notes {
                out += &format!("       note: {n}\n");
            }
            for f in &s.failures {
                out += &format!("       fail: {f}\n");
            }
        }
        let passed = self.suites.iter().filter(|s| s.passed()).count();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        out += &format!("overall: {verdict} ({passed}/{} suites)\n", self.suites.len());
        out
    }
}

pub fn is_suite(name: &str) -> bool {
    name == "all" || SUITES.iter().any(|(n, _)| *n == name)
}

/// Runs one suite, or all of them concurrently for `"all"`.
pub fn run(cfg: &Config, name: &str) -> Result<VerifyReport> {
    if !is_suite(name) {
        return Err(Error::Config(format!("unknown suite {name:?}")));
    }
    cfg.validate()?;
    let env = Env::new(cfg)?;
    let selected: Vec<(&str, u32)> = SUITES.iter().copied().filter(|(n, _)| name == "all" || *n == name).collect();
    let suites = std::thread::scope(|scope| {
        let handles: Vec<_> = selected.iter().map(|&(n, c)| { let env = &env; scope.spawn(move || run_one(env, n, c)) }).collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    });
    Ok(VerifyReport { seed: cfg.seed, p: cfg.p, precision: cfg.precision, order: cfg.order, suites })
}

fn run_one(env: &Env, name: &str, criterion: u32) -> SuiteReport {
    let mut report = SuiteReport::new(name, criterion);
    let mut rng = env.rng(name);
    match name {
        "pascal" => pascal(env, &mut rng, &mut report),
        "divided-power" => divided_power(env, &mut rng, &mut report),
        "schauder" => schauder(env, &mut rng, &mut report),
        "annulus-bound" => annulus_bound(env, &mut rng, &mut report),
        "deformation" => deformation(env, &mut rng, &mut report),
        "confluence-exp" => {
            confluence_exp(env, &mut report);
        }
        "confluence-power" => {
            confluence_power(env, &mut report);
        }
        "structure" => structure(env, &mut rng, &mut report),
        "operator-algebra" => operator_algebra(env, &mut rng, &mut report),
        "radius-admissibility" => radius_admissibility(env, &mut report),
        "log-derivative" => log_derivative(env, &mut rng, &mut report),
        "roundtrip" => roundtrip(env, &mut rng, &mut report),
        _ => unreachable!("suite names are checked before dispatch"),
    }
    report
}

struct Env {
    seed: u64,
    cfg: Config,
    space: Space,
    ctx: PadicContext,
    eta: LogNorm,
    eta_prime: LogNorm,
    order: usize,
}

impl Env {
    fn new(cfg: &Config) -> Result<Self> {
        let space = cfg.space()?;
        Ok(Env {
            seed: cfg.seed,
            cfg: cfg.clone(),
            space,
            ctx: space.ctx,
            eta: cfg.eta()?,
            eta_prime: cfg.eta_prime()?,
            order: cfg.order,
        })
    }

    fn rng(&self, name: &str) -> ChaCha8Rng {
        // FNV-1a of the suite name
        let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }

    fn p(&self) -> i64 {
        self.ctx.p as i64
    }

    fn int(&self, n: i64) -> PadicScalar {
        self.ctx.int(n)
    }

    /// `1 + p^k`
    fn one_plus_p(&self, k: i64) -> PadicScalar {
        &self.ctx.one() + &self.ctx.p_power(k)
    }

    fn endo(&self, q: PadicScalar, h: PadicScalar) -> Result<Endomorphism> {
        if q.is_one() && h.is_exact_zero() {
            return Ok(Endomorphism::identity(self.space));
        }
        Endomorphism::new(q, h, self.space)
    }

    /// `(1 + p^2) x`
    fn sigma_q(&self) -> Result<Endomorphism> {
        self.endo(self.one_plus_p(2), self.ctx.zero())
    }

    /// `(1 + p^2) x + p^2`
    fn sigma_qh(&self) -> Result<Endomorphism> {
        self.endo(self.one_plus_p(2), self.ctx.p_power(2))
    }

    /// `x + p^2`
    fn shift(&self) -> Result<Endomorphism> {
        self.endo(self.ctx.one(), self.ctx.p_power(2))
    }

    /// `(1 + p^3) x`
    fn sigma_q3(&self) -> Result<Endomorphism> {
        self.endo(self.one_plus_p(3), self.ctx.zero())
    }

    fn x_pow(&self, n: i64) -> LaurentElement {
        LaurentElement::monomial(self.space, n, self.ctx.one())
    }

    fn clamp(&self, lo: i64, hi: i64) -> (i64, i64) {
        (lo.max(self.space.window.0), hi.min(self.space.window.1))
    }

    fn rank_one(&self, g: LaurentElement) -> Result<ConnectionModule> {
        ConnectionModule::untwisted(vec![vec![g]], self.space, self.eta)
    }
}

fn scalar(env: &Env, rng: &mut ChaCha8Rng, max_val: i64) -> PadicScalar {
    let bound = env.p().pow(3);
    let mut u = rng.gen_range(-bound..=bound);
    while u == 0 {
        u = rng.gen_range(-bound..=bound);
    }
    &env.int(u) * &env.ctx.p_power(rng.gen_range(0..=max_val))
}

/// An exact Laurent polynomial with exponents in `[lo, hi]` (clamped to the window).
fn laurent(env: &Env, rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> LaurentElement {
    let (lo, hi) = env.clamp(lo, hi);
    let mut z = LaurentElement::zero(env.space);
    for n in lo..=hi {
        if rng.gen_bool(0.5) {
            z.add_term(n, scalar(env, rng, 2));
        }
    }
    if z.is_zero() {
        z.add_term(rng.gen_range(lo..=hi), scalar(env, rng, 2));
    }
    z
}

fn operator(env: &Env, rng: &mut ChaCha8Rng, endo: &Endomorphism, max_deg: usize) -> Result<TwistedOperator> {
    let deg = rng.gen_range(0..=max_deg);
    let coeffs = (0..=deg).map(|_| laurent(env, rng, -3, 3)).collect();
    TwistedOperator::new(endo.clone(), env.eta, coeffs, LogNorm::Zero, env.order)
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * (n - i) / (i + 1))
}

fn pascal(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let ctx = env.ctx;
    let mut qs = vec![ctx.one()];
    for _ in 0..20 {
        qs.push(scalar(env, rng, 3));
    }
    for q in &qs {
        let table = qbinom_table(12, q);
        let zero = ctx.zero();
        for n in 0..=12u64 {
            for k in 0..=n {
                let b = qbinom(n, k, q);
                r.check(b == table[n as usize][k as usize], || format!("table and qbinom differ at ({n} {k}), q = {q}"));
                r.check(b.norm() <= qbinom_norm_bound(n, k, q.norm()), || format!("norm bound fails at ({n} {k}), q = {q}"));
                if n == 0 {
                    continue;
                }
                let left = if k == 0 { zero.clone() } else { qbinom(n - 1, k - 1, q) };
                let right = qbinom(n - 1, k, q);
                // the mirrored identity (n k) = q^(n-k) (n-1 k-1) + (n-1 k)
                let mirrored = &(&q.pow(n - k) * &left) + &right;
                let direct = &left + &(&q.pow(k) * &right);
                r.check(b == direct && b == mirrored, || format!("Pascal identity fails at ({n} {k}), q = {q}"));
            }
            for k in n + 1..=n + 2 {
                r.check(qbinom(n, k, q).is_exact_zero(), || format!("({n} {k}) is not zero"));
            }
        }
    }
    let one = ctx.one();
    for n in 0..=12u64 {
        for k in 0..=n {
            let b = qbinom(n, k, &one);
            r.check(b == PadicScalar::from_bigint(ctx, binomial(n, k)), || format!("q = 1 degeneration fails at ({n} {k})"));
        }
    }
}

fn divided_power(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let mut qs = vec![env.one_plus_p(2), env.one_plus_p(1), env.one_plus_p(3)];
    for _ in 0..2 {
        // q = 1 + p^2 u with u a random unit
        let u = scalar(env, rng, 0);
        qs.push(&env.ctx.one() + &(&u * &env.ctx.p_power(2)));
    }
    for q in qs {
        let Some(endo) = r.ok(env.endo(q.clone(), env.ctx.zero()), || format!("sigma(x) = {q} x")) else {
            continue;
        };
        for n in 0..=12i64 {
            let xn = env.x_pow(n);
            let Some(reference) = r.ok(taylor_expand(&xn, &endo, n as usize), || format!("Taylor expansion of x^{n}")) else {
                continue;
            };
            for k in 0..=n as usize {
                let Some(d) = r.ok(std_apply(k, &xn, &endo), || format!("d^[{k}](x^{n})")) else {
                    continue;
                };
                let closed = LaurentElement::monomial(env.space, n - k as i64, qbinom(n as u64, k as u64, &q));
                r.check(d.eq_at_precision(&closed), || format!("d^[{k}](x^{n}) = {d}, expected {closed}, q = {q}"));
                let via = &reference.derivatives[k];
                r.check(d.eq_at_precision(via), || format!("d^[{k}](x^{n}) disagrees with the substitution route, q = {q}"));
            }
        }
    }
}

fn schauder(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let endos: Vec<Endomorphism> = [env.sigma_qh(), env.sigma_q3()].into_iter().filter_map(|e| r.ok(e, || "endomorphism".into())).collect();
    for i in 0..100 {
        let sigma = &endos[i % endos.len()];
        let deg = rng.gen_range(0..=20);
        let coeffs = (0..=deg).map(|_| laurent(env, rng, -4, 4)).collect();
        let Some(poly) = r.ok(XiPolynomial::new(env.space, coeffs, XiBasis::Monomial, env.eta), || "xi-polynomial".into()) else {
            continue;
        };
        let Some(div) = r.ok(poly.to_divided(sigma), || format!("divided form of sample {i}")) else {
            continue;
        };
        let back = div.to_monomial();
        r.check(back.eq_at_precision(&poly), || format!("sample {i}: monomial -> divided -> monomial is not the identity"));
        r.check(div.eta_norm() == poly.eta_norm(), || format!("sample {i}: eta-norm {} became {}", poly.eta_norm(), div.eta_norm()));
        // orthogonality: the norm is the max over the divided coefficients
        let ortho = div
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, c)| c.gauss_norm().mul(env.eta.powi(m as i64)))
            .fold(LogNorm::Zero, LogNorm::max);
        r.check(ortho == poly.eta_norm(), || format!("sample {i}: divided coefficients give {ortho}, expected {}", poly.eta_norm()));
    }
}

fn annulus_bound(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let radius = derivative_radius(&env.space);
    let endos: Vec<Endomorphism> = [Ok(Endomorphism::identity(env.space)), env.sigma_qh(), env.shift()]
        .into_iter()
        .filter_map(|e| r.ok(e, || "endomorphism".into()))
        .collect();
    for i in 0..100 {
        let endo = &endos[i % endos.len()];
        let z = laurent(env, rng, -12, 12);
        let Some(derivs) = r.ok(taylor_vector(endo, &z, env.order), || format!("derivatives of sample {i}")) else {
            continue;
        };
        let zn = z.gauss_norm();
        for (k, d) in derivs.iter().enumerate() {
            let bound = zn.div(radius.powi(k as i64));
            r.check(d.gauss_norm() <= bound, || format!("sample {i}, k = {k}: |d^[k] z| = {} exceeds {bound}", d.gauss_norm()));
        }
    }
}

fn deformation(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let id = Endomorphism::identity(env.space);
    let (Some(sq), Some(sqh), Some(shift), Some(sq3)) = (
        r.ok(env.sigma_q(), || "sigma_q".into()),
        r.ok(env.sigma_qh(), || "sigma_qh".into()),
        r.ok(env.shift(), || "shift".into()),
        r.ok(env.sigma_q3(), || "sigma_q3".into()),
    ) else {
        return;
    };
    let k = env.order;
    // (a) order one, closed form against the triangular solve
    for (sigma, tau) in [(&sq, &id), (&shift, &id), (&sqh, &sq3)] {
        let Some(plan) = r.ok(basis_change_matrix(tau, sigma, env.eta, k), || "plan".into()) else {
            continue;
        };
        r.check(plan.isometry_violations().is_empty(), || "plan entries exceed eta^(n-m)".into());
        let d = TwistedOperator::divided_power(1, sigma.clone(), env.eta, k);
        let closed = deform_order1_closed(sigma, tau, env.eta, k);
        let (Some(d), Some(closed)) = (r.ok(d, || "d^[1]".into()), r.ok(closed, || "closed form".into())) else {
            continue;
        };
        let Some(solved) = r.ok(deform_operator(&d, &plan), || "deformed d^[1]".into()) else {
            continue;
        };
        for j in 0..=k {
            r.check(solved.coeff(j).eq_at_precision(&closed.coeff(j)), || format!("order-one coefficient {j} differs"));
        }
    }
    // (b) round trips and (c) equal action on monomials
    let pairs = [(&sqh, &id), (&sq, &sq3), (&sqh, &shift)];
    let mut plans = Vec::new();
    for (sigma, tau) in pairs {
        let fwd = r.ok(basis_change_matrix(tau, sigma, env.eta, k), || "forward plan".into());
        let back = fwd.as_ref().and_then(|f| r.ok(f.reverse(), || "reverse plan".into()));
        if let (Some(f), Some(b)) = (fwd, back) {
            plans.push((f, b));
        }
    }
    if plans.is_empty() {
        return;
    }
    // Taylor vectors of the test monomials, shared by all operators on a plan
    let monomials: Vec<i64> = (-10..=10).filter(|&n| env.space.contains(n)).collect();
    let mut taylor = Vec::new();
    for (fwd, _) in &plans {
        let mut sides = [Vec::new(), Vec::new()];
        for (side, endo) in sides.iter_mut().zip([&fwd.source, &fwd.target]) {
            for &n in &monomials {
                side.push(r.ok(taylor_vector(endo, &env.x_pow(n), k), || format!("taylor vector of x^{n}")));
            }
        }
        taylor.push(sides);
    }
    for i in 0..50 {
        let (fwd, back) = &plans[i % plans.len()];
        let [src, dst] = &taylor[i % plans.len()];
        let Some(phi) = r.ok(operator(env, rng, &fwd.source, 15), || format!("operator {i}")) else {
            continue;
        };
        let Some(moved) = r.ok(deform_operator(&phi, fwd), || format!("operator {i} forward")) else {
            continue;
        };
        let Some(home) = r.ok(deform_operator(&moved, back), || format!("operator {i} back")) else {
            continue;
        };
        let gap = home.distance(&phi);
        r.check(gap <= home.tail(), || format!("operator {i}: round trip moved by {gap}, tail {}", home.tail()));
        for (j, &n) in monomials.iter().enumerate() {
            let (Some(ts), Some(td)) = (&src[j], &dst[j]) else {
                continue;
            };
            let xn = env.x_pow(n);
            let (Some(a), Some(b)) = (r.ok(phi.apply_taylor(&xn, ts), || "apply".into()), r.ok(moved.apply_taylor(&xn, td), || "apply".into())) else {
                continue;
            };
            let tol = a.tail().max(b.tail());
            r.check(a.eq_within(&b, tol), || format!("operator {i} on x^{n}: actions differ by {} > {tol}", a.distance(&b)));
        }
    }
}

/// `sum_(k<=K) c^k gap^k / k!` term by term.
fn exp_terms(env: &Env, c: &PadicScalar, gap: &LaurentElement) -> Result<Vec<LaurentElement>> {
    let ctx = env.ctx;
    let mut out = Vec::with_capacity(env.order + 1);
    let mut pw = LaurentElement::one(env.space);
    let mut fact = BigInt::from(1);
    for k in 0..=env.order {
        if k > 0 {
            pw = &pw * &gap.scale(c);
            fact *= k;
        }
        let inv = PadicScalar::from_ratio(ctx, &BigInt::from(1), &fact)?;
        out.push(pw.scale(&inv));
    }
    Ok(out)
}

fn confluence_exp(env: &Env, r: &mut SuiteReport) -> Vec<(ConnectionModule, SigmaModule)> {
    let mut produced = Vec::new();
    let p = env.p();
    let c = env.ctx.p_power(1);
    for sigma in [env.sigma_qh(), env.sigma_q()] {
        let Some(sigma) = r.ok(sigma, || "endomorphism".into()) else {
            continue;
        };
        let Some(m) = r.ok(env.rank_one(LaurentElement::constant(env.space, c.clone())), || "connection".into()) else {
            continue;
        };
        let Some((s, cert)) = r.ok(confluence_transform_certified(&m, &sigma, Some(env.eta_prime), env.order), || "transform".into()) else {
            continue;
        };
        r.check(cert.decays, || "decay certificate does not decay".into());
        let gap = sigma.sigma_x() - &LaurentElement::x(env.space);
        let Some(terms) = r.ok(exp_terms(env, &c, &gap), || "oracle terms".into()) else {
            continue;
        };
        let oracle = terms.iter().fold(LaurentElement::zero(env.space), |acc, t| &acc + t);
        let got = &s.matrix()[0][0];
        r.check(got.eq_at_precision(&oracle), || format!("multiplier differs from the exponential series by {}", got.distance(&oracle)));
        // valuation of the k-th term and of the remainder after k terms: at least 2k - k/(p-1)
        let mut partial = LaurentElement::zero(env.space);
        for (k, t) in terms.iter().enumerate() {
            let k = k as i64;
            let bound = LogNorm::from_log(Rational64::new(-(2 * k * (p - 1) - k), p - 1));
            r.check(t.gauss_norm() <= bound, || format!("term {k} has norm {} above {bound}", t.gauss_norm()));
            let rest = got - &partial;
            let visible = rest.distance(&LaurentElement::zero(env.space));
            r.check(visible <= bound, || format!("remainder after {k} terms has norm {visible} above {bound}"));
            partial = &partial + t;
        }
        produced.push((m, s));
    }
    produced
}

fn power_oracle(env: &Env, a: i64, sigma: &Endomorphism) -> Result<(LaurentElement, LogNorm)> {
    let ctx = env.ctx;
    let (q, h) = (sigma.q(), sigma.h());
    let qinv = q.inv()?;
    let jmax = if a >= 0 { a } else { env.order as i64 }.min(-env.space.window.0);
    let mut out = LaurentElement::zero(env.space);
    let mut binom = BigInt::from(1);
    for j in 0..=jmax {
        if j > 0 {
            binom = binom * (a - j + 1) / j;
        }
        let qa = if a - j >= 0 { q.pow((a - j) as u64) } else { qinv.pow((j - a) as u64) };
        let c = &(&PadicScalar::from_bigint(ctx, binom.clone()) * &qa) * &h.pow(j as u64);
        out.add_term(-j, c);
    }
    // omitted terms have norm at most (|h| / r1)^(jmax+1)
    let tail = if a >= 0 {
        LogNorm::Zero
    } else {
        h.norm().div(derivative_radius(&env.space)).powi(jmax + 1)
    };
    Ok((out, tail))
}

fn confluence_power(env: &Env, r: &mut SuiteReport) -> Vec<(ConnectionModule, SigmaModule)> {
    let mut produced = Vec::new();
    let sigmas: Vec<Endomorphism> = [env.sigma_qh(), env.sigma_q()].into_iter().filter_map(|e| r.ok(e, || "endomorphism".into())).collect();
    for sigma in &sigmas {
        for a in -3..=5i64 {
            let g = LaurentElement::monomial(env.space, -1, env.int(a));
            let Some(m) = r.ok(env.rank_one(g), || "connection".into()) else {
                continue;
            };
            let Some((s, cert)) = r.ok(confluence_transform_certified(&m, sigma, Some(env.eta_prime), env.order), || format!("transform for a = {a}"))
            else {
                continue;
            };
            if cert.tail_bound != TailBound::APriori {
                r.notes.push(format!("a = {a}: tail bound is extrapolated"));
            }
            let Some((oracle, oracle_tail)) = r.ok(power_oracle(env, a, sigma), || "binomial oracle".into()) else {
                continue;
            };
            let got = &s.matrix()[0][0];
            let tol = s.tail().max(oracle_tail).max(got.tail());
            r.check(got.eq_within(&oracle, tol), || format!("a = {a}: multiplier differs from (q + h/x)^a by {} > {tol}", got.distance(&oracle)));
            produced.push((m, s));
        }
    }
    produced
}

fn samples(env: &Env, rng: &mut ChaCha8Rng, rank: usize, count: usize) -> Vec<(LaurentElement, Vec<LaurentElement>)> {
    (0..count)
        .map(|_| (laurent(env, rng, -2, 2), (0..rank).map(|_| laurent(env, rng, -2, 2)).collect()))
        .collect()
}

fn structure(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let mut scratch = SuiteReport::new("scratch", 0);
    let mut modules = confluence_exp(env, &mut scratch);
    modules.extend(confluence_power(env, &mut scratch));
    if scratch.failed > 0 {
        r.notes.push(format!("{} upstream confluence checks failed", scratch.failed));
    }
    let Some(sigma) = r.ok(env.sigma_qh(), || "endomorphism".into()) else {
        return;
    };
    let mut random = 0;
    while random < 10 {
        random += 1;
        let matrix = (0..2).map(|_| (0..2).map(|_| laurent(env, rng, 0, 2)).collect()).collect();
        let Some(m) = r.ok(ConnectionModule::untwisted(matrix, env.space, env.eta), || "random connection".into()) else {
            continue;
        };
        let Some((s, cert)) = r.ok(confluence_transform_certified(&m, &sigma, Some(env.eta_prime), env.order), || format!("random connection {random}")) else {
            continue;
        };
        r.check(cert.decays, || format!("random connection {random}: certificate does not decay"));
        modules.push((m, s));
    }
    for (i, (m, s)) in modules.iter().enumerate() {
        let smp = samples(env, rng, m.rank(), 3);
        let Some(rep) = r.ok(sigma_structure_identity_check(m, s, &smp), || format!("module {i}")) else {
            continue;
        };
        r.check(rep.identity_holds(), || format!("module {i}: S - 1 - (sigma(x) - x) D = {} > {}", rep.identity_distance, rep.tolerance));
        r.check(rep.semilinear_failures == 0, || format!("module {i}: {} semilinearity failures", rep.semilinear_failures));
    }
    // a nilpotent connection has the horizontal section (1, 0)
    let zero = LaurentElement::zero(env.space);
    let one = LaurentElement::one(env.space);
    let nil = vec![vec![zero.clone(), one.clone()], vec![zero.clone(), zero.clone()]];
    if let Some(m) = r.ok(ConnectionModule::untwisted(nil, env.space, env.eta), || "nilpotent connection".into()) {
        if let Some((s, _)) = r.ok(confluence_transform_certified(&m, &sigma, Some(env.eta_prime), env.order), || "nilpotent transform".into()) {
            let tol = env.ctx.p_power(env.ctx.precision).norm();
            let horizontal = vec![vec![one.clone(), zero.clone()], vec![one, LaurentElement::x(env.space)]];
            if let Some(rep) = r.ok(h_complex_sample_check(&m, &s, &horizontal, &[], tol), || "H0 samples".into()) {
                r.check(rep.passed() && rep.horizontal == 1, || format!("H0 sample check: {:?}", rep.failures));
            }
        }
    }
}

/// Operator tail together with the coefficient tails, weighted like the norm.
fn slack(op: &TwistedOperator) -> LogNorm {
    op.coeffs().iter().enumerate().fold(op.tail(), |acc, (k, c)| acc.max(c.tail().div(op.level().powi(k as i64))))
}

fn operator_algebra(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let endos: Vec<Endomorphism> = [env.sigma_qh(), env.sigma_q(), env.shift()].into_iter().filter_map(|e| r.ok(e, || "endomorphism".into())).collect();
    for i in 0..50 {
        let endo = &endos[i % endos.len()];
        let ops: Vec<TwistedOperator> = (0..3).filter_map(|_| r.ok(operator(env, rng, endo, 6), || "operator".into())).collect();
        let [a, b, c] = &ops[..] else {
            continue;
        };
        let (Some(ab), Some(bc)) = (r.ok(a.compose(b), || "a o b".into()), r.ok(b.compose(c), || "b o c".into())) else {
            continue;
        };
        let (Some(left), Some(right)) = (r.ok(ab.compose(c), || "(a o b) o c".into()), r.ok(a.compose(&bc), || "a o (b o c)".into())) else {
            continue;
        };
        let tol = slack(&left).max(slack(&right));
        let gap = left.distance(&right);
        r.check(gap <= tol, || format!("triple {i}: associativity fails by {gap} > {tol}"));
        for (x, y, xy) in [(a, b, &ab), (b, c, &bc)] {
            r.check(xy.norm() <= x.norm().mul(y.norm()), || {
                format!("triple {i}: |phi o psi| = {} exceeds {}", xy.norm(), x.norm().mul(y.norm()))
            });
        }
    }
    for endo in &endos {
        for total in 0..=12usize {
            for l in 0..=total {
                let k = total - l;
                let d = |j| TwistedOperator::divided_power(j, endo.clone(), env.eta, env.order);
                let (Some(dk), Some(dl), Some(dt)) = (r.ok(d(k), || "d^[k]".into()), r.ok(d(l), || "d^[l]".into()), r.ok(d(total), || "d^[k+l]".into())) else {
                    continue;
                };
                let Some(prod) = r.ok(dk.compose(&dl), || "d^[k] o d^[l]".into()) else {
                    continue;
                };
                let coeff = LaurentElement::constant(env.space, qbinom(total as u64, l as u64, endo.q()));
                let expect = dt.left_mul(&coeff);
                r.check(prod.is_exact() && prod.distance(&expect).is_zero() && prod.order() == expect.order(), || {
                    format!("d^[{k}] o d^[{l}] is not ({total} {l})_q d^[{total}]")
                });
            }
        }
    }
}

fn radius_admissibility(env: &Env, r: &mut SuiteReport) {
    let ctx = env.ctx;
    let pp = |k| ctx.p_power(k);
    let qs = vec![
        ctx.one(),
        env.one_plus_p(1),
        env.one_plus_p(2),
        env.one_plus_p(3),
        &ctx.one() + &(&env.int(2) * &pp(2)),
        &ctx.one() - &pp(2),
        env.int(2),
        pp(1),
    ];
    let hs = vec![ctx.zero(), pp(1), pp(2), pp(3), ctx.one()];
    let etas: Vec<LogNorm> = [(0, 1), (-1, 2), (-1, 1), (-3, 2), (-2, 1), (-5, 2), (-3, 1)]
        .iter()
        .map(|&(a, b)| LogNorm::from_log(Rational64::new(a, b)))
        .collect();
    let r_norm = env.space.params.r();
    let mut built = 0;
    for q in &qs {
        for h in &hs {
            let Ok(sigma) = env.endo(q.clone(), h.clone()) else {
                continue;
            };
            built += 1;
            let one_minus_q = (&ctx.one() - q).norm();
            let rho = one_minus_q.mul(r_norm).max(h.norm());
            r.check(sigma.x_radius() == rho, || format!("rho(q = {q}, h = {h}) = {}, expected {rho}", sigma.x_radius()));
            let moved = (&LaurentElement::x(env.space) - sigma.sigma_x()).gauss_norm();
            r.check(moved == rho, || format!("|x - sigma(x)| = {moved}, expected {rho}"));
            for n in 1..=10u64 {
                let it = sigma.iterate(n);
                let direct = (&LaurentElement::x(env.space) - it.sigma_x()).gauss_norm();
                r.check(it.x_radius() <= rho && direct == it.x_radius(), || {
                    format!("rho(sigma^{n}) = {} against rho(sigma) = {rho}, q = {q}, h = {h}", it.x_radius())
                });
            }
            for &eta in &etas {
                let rep = sigma.eta_admissible(eta);
                let q_ok = one_minus_q <= eta.div(r_norm);
                let h_ok = h.norm() <= eta;
                r.check(rep.q_ok == q_ok && rep.h_ok == h_ok, || format!("eta_admissible disagrees at q = {q}, h = {h}, eta = {eta}"));
                r.check(rep.radius_ok == (rho <= eta) && rep.holds() == rep.radius_ok, || {
                    format!("eta >= rho is not equivalent to the two comparisons at q = {q}, h = {h}, eta = {eta}")
                });
            }
        }
    }
    r.notes.push(format!("{built} admissible endomorphisms on the grid"));
}

fn log_derivative(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    let Some(sigma) = r.ok(env.sigma_q(), || "endomorphism".into()) else {
        return;
    };
    let q = sigma.q().clone();
    let mut gs: Vec<(String, LaurentElement)> = vec![
        ("0".into(), LaurentElement::zero(env.space)),
        ("p".into(), LaurentElement::constant(env.space, env.ctx.p_power(1))),
    ];
    for a in -3..=5 {
        gs.push((format!("{a}/x"), LaurentElement::monomial(env.space, -1, env.int(a))));
    }
    for i in 0..3 {
        gs.push((format!("random {i}"), laurent(env, rng, -1, 2)));
    }
    for (label, g) in gs {
        let Some(m) = r.ok(env.rank_one(g.clone()), || label.clone()) else {
            continue;
        };
        let (Some(log_form), Some((conf, _))) = (
            r.ok(log_derivative_form(&m, &sigma, env.order), || format!("log form for G = {label}")),
            r.ok(confluence_transform_certified(&m, &sigma, Some(env.eta_prime), env.order), || format!("transform for G = {label}")),
        ) else {
            continue;
        };
        let (a, b) = (&log_form.matrix()[0][0], &conf.matrix()[0][0]);
        let tol = log_form.tail().max(conf.tail()).max(a.tail()).max(b.tail());
        r.check(a.eq_within(b, tol), || format!("G = {label}: the two forms differ by {} > {tol}", a.distance(b)));
        if g.support_len() == 1 && g.min_exponent() == Some(-1) {
            // x^a is a solution, so the multiplier is q^a
            let a_int = small_int(&g.coeff(-1)).unwrap_or(0);
            let Some(qa) = r.ok(q.powi(a_int), || "q^a".into()) else {
                continue;
            };
            let expect = LaurentElement::constant(env.space, qa);
            r.check(a.eq_within(&expect, tol), || format!("G = {label}: multiplier is not q^a"));
        }
    }
}

fn roundtrip(env: &Env, rng: &mut ChaCha8Rng, r: &mut SuiteReport) {
    fn same_text<T: Serialize + serde::de::DeserializeOwned>(doc: &T) -> Result<(T, bool)> {
        let text = io::to_json(doc);
        let back: T = serde_json::from_str(&text)?;
        let again = io::to_json(&back);
        Ok((back, again == text))
    }
    let space = env.space;
    let cfg_back: Option<Config> = r.ok(serde_json::from_str(&env.cfg.to_json()).map_err(Error::from), || "config".into());
    r.check(cfg_back.as_ref() == Some(&env.cfg), || "config does not round trip".into());

    let mut series = Vec::new();
    for i in 0..20 {
        let mut z = laurent(env, rng, -6, 6);
        if i % 2 == 1 {
            // approximate coefficients and a tail
            let u = scalar(env, rng, 0);
            if let Ok(inv) = u.inv() {
                z.add_term(rng.gen_range(-3..=3), inv);
            }
            z = z.with_tail(LogNorm::from_log(Rational64::new(-rng.gen_range(10..30), rng.gen_range(1..4))));
        }
        series.push(z);
    }
    for (i, z) in series.iter().enumerate() {
        let Some((doc, stable)) = r.ok(same_text(&io::series_to_doc(z)), || format!("series {i}")) else {
            continue;
        };
        let back = r.ok(io::series_from_doc(&doc, space), || format!("series {i}"));
        r.check(stable && back.as_ref() == Some(z), || format!("series {i} does not round trip"));
    }

    let mut operators = Vec::new();
    if let (Ok(sigma), Ok(sq)) = (env.sigma_qh(), env.sigma_q()) {
        for _ in 0..5 {
            if let Some(op) = r.ok(operator(env, rng, &sigma, 6), || "operator".into()) {
                operators.push(op);
            }
        }
        if let Some(plan) = r.ok(basis_change_matrix(&sq, &sigma, env.eta, env.order), || "plan".into()) {
            let deformed = deform_operator(&operators[0], &plan);
            if let Some(op) = r.ok(deformed, || "deformed operator".into()) {
                operators.push(op);
            }
        }
        if let Some(op) = r.ok(crate::deformation::strong_map(&sigma, env.eta, env.order), || "strong map".into()) {
            operators.push(op);
        }
        for (i, op) in operators.iter().enumerate() {
            let doc = r.ok(io::operator_to_doc(op), || format!("operator {i}"));
            let Some((doc, stable)) = doc.and_then(|d| r.ok(same_text(&d), || format!("operator {i}"))) else {
                continue;
            };
            let back = r.ok(io::operator_from_doc(&doc, space), || format!("operator {i}"));
            r.check(stable && back.as_ref() == Some(op), || format!("operator {i} does not round trip"));
        }
        for i in 0..6 {
            let coeffs = (0..=rng.gen_range(0..6)).map(|_| laurent(env, rng, -3, 3)).collect();
            let Some(mut poly) = r.ok(XiPolynomial::new(space, coeffs, XiBasis::Monomial, env.eta), || "xi-polynomial".into()) else {
                continue;
            };
            if i % 2 == 1 {
                match r.ok(poly.to_divided(&sigma), || "divided form".into()) {
                    Some(d) => poly = d,
                    None => continue,
                }
            }
            let doc = r.ok(io::xi_to_doc(&poly), || format!("xi {i}"));
            let Some((doc, stable)) = doc.and_then(|d| r.ok(same_text(&d), || format!("xi {i}"))) else {
                continue;
            };
            let back = r.ok(io::xi_from_doc(&doc, space), || format!("xi {i}"));
            r.check(stable && back.as_ref() == Some(&poly), || format!("xi-polynomial {i} does not round trip"));
        }
        for i in 0..4 {
            let rank = 1 + i % 2;
            let matrix = (0..rank).map(|_| (0..rank).map(|_| laurent(env, rng, -1, 2)).collect()).collect();
            let Some(m) = r.ok(ConnectionModule::untwisted(matrix, space, env.eta), || "connection".into()) else {
                continue;
            };
            let doc = r.ok(io::connection_to_doc(&m), || format!("connection {i}"));
            if let Some((doc, stable)) = doc.and_then(|d| r.ok(same_text(&d), || format!("connection {i}"))) {
                let back = r.ok(io::connection_from_doc(&doc, space), || format!("connection {i}"));
                r.check(stable && back.as_ref() == Some(&m), || format!("connection {i} does not round trip"));
            }
            let Some((s, _)) = r.ok(confluence_transform_certified(&m, &sigma, Some(env.eta_prime), env.order), || format!("sigma-module {i}")) else {
                continue;
            };
            let doc = r.ok(io::sigma_module_to_doc(&s), || format!("sigma-module {i}"));
            if let Some((doc, stable)) = doc.and_then(|d| r.ok(same_text(&d), || format!("sigma-module {i}"))) {
                let back = r.ok(io::sigma_module_from_doc(&doc, space), || format!("sigma-module {i}"));
                r.check(stable && back.as_ref() == Some(&s), || format!("sigma-module {i} does not round trip"));
            }
        }
    }
}
