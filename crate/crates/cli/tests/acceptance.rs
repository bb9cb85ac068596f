//! Acceptance run on the reference configuration: one PASS/FAIL line per
//! criterion. Each line combines the matching `twisted verify` suite with a
//! spot check computed here from exact rationals.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::Value;

use twisted_core::annulus::{Endomorphism, LaurentElement, Space};
use twisted_core::config::Config;
use twisted_core::deformation::{confluence_transform, deform_order1_closed, log_derivative_form, ConnectionModule};
use twisted_core::qcomb::qbinom;
use twisted_core::twisted::{std_apply, TwistedOperator, XiBasis, XiPolynomial};
use twisted_core::{LogNorm, PadicScalar};

/// The full `verify all` run must finish within this budget.
const RUNTIME_BUDGET: Duration = Duration::from_secs(60);
/// Truncation order of the spot checks (the reference K).
const ORDER: usize = 30;
/// Largest n of the exact q-binomial spot checks.
const N_MAX: u64 = 12;

struct Ctx {
    s: Space,
    eta: LogNorm,
    report: Value,
    elapsed: Duration,
    exit: Option<i32>,
}

type Check = Result<String, String>;

fn suite(ctx: &Ctx, criterion: u64) -> Check {
    let entry = ctx.report["suites"]
        .as_array()
        .and_then(|a| a.iter().find(|s| s["criterion"].as_u64() == Some(criterion)))
        .ok_or_else(|| format!("no suite for criterion {criterion}"))?;
    let (checks, failed) = (entry["checks"].as_u64().unwrap_or(0), entry["failed"].as_u64().unwrap_or(u64::MAX));
    let name = entry["suite"].as_str().unwrap_or("?");
    if checks == 0 || failed != 0 {
        let first = entry["failures"].get(0).and_then(Value::as_str).unwrap_or("no checks ran");
        return Err(format!("suite {name}: {failed} of {checks} failed ({first})"));
    }
    Ok(format!("suite {name}: {checks} checks"))
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn padic(s: Space, r: &BigRational) -> PadicScalar {
    PadicScalar::from_ratio(s.ctx, r.numer(), r.denom()).unwrap()
}

fn x_pow(s: Space, n: i64) -> LaurentElement {
    LaurentElement::monomial(s, n, s.ctx.one())
}

fn endo(s: Space, q: i64, h: i64) -> Endomorphism {
    Endomorphism::new(s.ctx.int(q), s.ctx.int(h), s).unwrap()
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

/// `prod (1 - q^(n-i)) / (1 - q^(i+1))`, the product form of the Gaussian binomial;
/// `prod (n-i) / (i+1)` at `q = 1`.
fn gaussian_product(n: u64, k: u64, q: i64) -> BigRational {
    let qr = rat(q);
    (0..k).fold(BigRational::one(), |acc, i| {
        if q == 1 {
            return acc * rat((n - i) as i64) / rat(i as i64 + 1);
        }
        let top = BigRational::one() - qr.pow((n - i) as i32);
        let bottom = BigRational::one() - qr.pow((i + 1) as i32);
        acc * top / bottom
    })
}

/// Polynomial in x with rational coefficients, truncated at degree `ORDER`.
fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); (a.len() + b.len() - 1).min(ORDER + 1)];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j < out.len() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn criterion_1(ctx: &Ctx) -> Check {
    let s = ctx.s;
    for q in [7i64, -3, 26, 1] {
        for n in 0..=N_MAX {
            for k in 0..=n {
                let want = PadicScalar::from_bigint(s.ctx, gaussian_product(n, k, q).to_integer());
                ensure(qbinom(n, k, &s.ctx.int(q)) == want, || format!("({n} {k})_{q} differs from the product formula"))?;
            }
        }
    }
    ensure(qbinom(4, 2, &s.ctx.one()) == s.ctx.int(6), || "(4 2)_1 != 6".into())?;
    Ok("product formula exact for q in {7, -3, 26, 1}, n <= 12".into())
}

fn criterion_2(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let q = 26;
    let sigma = endo(s, q, 0);
    for n in 0..=N_MAX {
        for k in 0..=n {
            let d = std_apply(k as usize, &x_pow(s, n as i64), &sigma).map_err(|e| e.to_string())?;
            let want = LaurentElement::monomial(s, (n - k) as i64, padic(s, &gaussian_product(n, k, q)));
            ensure(d == want, || format!("d^[{k}] x^{n} = {d}"))?;
        }
    }
    Ok("d^[k] x^n = (n k)_q x^(n-k) exactly, q = 26".into())
}

fn criterion_3(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let sigma = endo(s, 26, 0);
    let one = LaurentElement::one(s);
    let sq = XiPolynomial::new(s, vec![LaurentElement::zero(s), LaurentElement::zero(s), one.clone()], XiBasis::Monomial, ctx.eta)
        .map_err(|e| e.to_string())?;
    let d = sq.to_divided(&sigma).map_err(|e| e.to_string())?;
    // xi^2 = xi^(2) + (q - 1) x xi^(1)
    let want = [LaurentElement::zero(s), LaurentElement::monomial(s, 1, s.ctx.int(25)), one];
    ensure(d.coeffs() == want, || format!("xi^2 in the divided basis: {:?}", d.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>()))?;
    ensure(d.eta_norm() == sq.eta_norm(), || "eta-norm changed".into())?;
    Ok("xi^2 = xi^(2) + (q-1)x xi^(1), equal eta-norms".into())
}

fn criterion_4(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let r1 = s.params.r1();
    let z = x_pow(s, -1);
    for k in 0..=ORDER {
        let d = std_apply(k, &z, &Endomorphism::identity(s)).map_err(|e| e.to_string())?;
        // the bound is attained: |d^[k] x^-1| = r1^(-1-k)
        ensure(d.gauss_norm() == r1.powi(-1 - k as i64), || format!("|d^[{k}] x^-1| = {}", d.gauss_norm()))?;
    }
    Ok("bound attained by x^-1 for k <= 30".into())
}

fn criterion_5(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let h = 25;
    let closed = deform_order1_closed(&endo(s, 1, h), &Endomorphism::identity(s), ctx.eta, ORDER).map_err(|e| e.to_string())?;
    let mut c = BigInt::one();
    for k in 1..=ORDER {
        if k > 1 {
            c *= h;
        }
        let want = LaurentElement::constant(s, PadicScalar::from_bigint(s.ctx, c.clone()));
        ensure(closed.coeff(k) == want, || format!("coefficient {k} is not h^{}", k - 1))?;
    }
    Ok("shift by p^2: coefficients h^(k-1) exactly".into())
}

fn criterion_6(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let (q, h, c) = (26, 25, 5);
    let m = ConnectionModule::untwisted(vec![vec![LaurentElement::constant(s, s.ctx.int(c))]], s, ctx.eta).map_err(|e| e.to_string())?;
    let out = confluence_transform(&m, &endo(s, q, h), ORDER).map_err(|e| e.to_string())?;
    // sum_k (c((q-1)x + h))^k / k!
    let base = vec![rat(c * h), rat(c * (q - 1))];
    let (mut pw, mut fact) = (vec![BigRational::one()], BigRational::one());
    let mut total = vec![BigRational::zero(); ORDER + 1];
    for k in 0..=ORDER {
        if k > 0 {
            pw = poly_mul(&pw, &base);
            fact *= rat(k as i64);
        }
        for (i, a) in pw.iter().enumerate() {
            total[i] += a / &fact;
        }
    }
    let want = LaurentElement::from_terms(s, total.iter().enumerate().map(|(i, a)| (i as i64, padic(s, a))), LogNorm::Zero);
    let got = &out.matrix()[0][0];
    ensure(got.eq_within(&want, out.tail().max(got.tail())), || format!("differs by {} > {}", got.distance(&want), out.tail()))?;
    Ok(format!("exp series to tail {}", out.tail()))
}

fn criterion_7(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let (q, h) = (26, 25);
    for a in [2i64, -1] {
        let g = LaurentElement::monomial(s, -1, s.ctx.int(a));
        let m = ConnectionModule::untwisted(vec![vec![g]], s, ctx.eta).map_err(|e| e.to_string())?;
        let out = confluence_transform(&m, &endo(s, q, h), ORDER).map_err(|e| e.to_string())?;
        // (q + h/x)^2 = q^2 + 2qh/x + h^2/x^2; (q + h/x)^-1 = sum (-h)^j q^(-1-j) x^-j
        let want = if a == 2 {
            LaurentElement::from_terms(s, [(0, s.ctx.int(q * q)), (-1, s.ctx.int(2 * q * h)), (-2, s.ctx.int(h * h))], LogNorm::Zero)
        } else {
            let terms = (0..=ORDER as i64).map(|j| (-j, padic(s, &(rat(-h).pow(j as i32) / rat(q).pow(1 + j as i32)))));
            LaurentElement::from_terms(s, terms, LogNorm::Zero)
        };
        let got = &out.matrix()[0][0];
        let tol = out.tail().max(got.tail()).max(LogNorm::from_log_int(-2 * (ORDER as i64 + 1)));
        ensure(got.eq_within(&want, tol), || format!("a = {a}: differs by {}", got.distance(&want)))?;
    }
    Ok("(q + h/x)^a for a = 2, -1 from the binomial series".into())
}

fn criterion_8(ctx: &Ctx) -> Check {
    let s = ctx.s;
    // nilpotent G: S = 1 + (sigma(x) - x) G exactly
    let g = vec![vec![LaurentElement::zero(s), LaurentElement::one(s)], vec![LaurentElement::zero(s), LaurentElement::zero(s)]];
    let m = ConnectionModule::untwisted(g, s, ctx.eta).map_err(|e| e.to_string())?;
    let out = confluence_transform(&m, &endo(s, 26, 25), ORDER).map_err(|e| e.to_string())?;
    let gap = LaurentElement::from_terms(s, [(1, s.ctx.int(25)), (0, s.ctx.int(25))], LogNorm::Zero);
    let want = [[LaurentElement::one(s), gap], [LaurentElement::zero(s), LaurentElement::one(s)]];
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            ensure(&out.matrix()[i][j] == w, || format!("S[{i}][{j}] = {}", out.matrix()[i][j]))?;
        }
    }
    Ok("nilpotent rank 2: S = 1 + (sigma(x) - x) G exactly".into())
}

fn criterion_9(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let sigma = endo(s, 26, 25);
    let d = |k| TwistedOperator::divided_power(k, sigma.clone(), ctx.eta, ORDER).unwrap();
    for (k, l) in [(1, 1), (2, 3), (5, 7)] {
        let prod = d(k).compose(&d(l)).map_err(|e| e.to_string())?;
        let c = padic(s, &gaussian_product((k + l) as u64, l as u64, 26));
        let want = d(k + l).left_mul(&LaurentElement::constant(s, c));
        ensure(prod == want, || format!("d^[{k}] o d^[{l}] differs"))?;
    }
    Ok("d^[k] o d^[l] = (k+l l)_q d^[k+l] exactly".into())
}

fn criterion_10(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let sigma = endo(s, 26, 25);
    ensure(sigma.x_radius() == LogNorm::from_log_int(-2), || format!("rho = {}", sigma.x_radius()))?;
    for n in 1..=10 {
        // sigma^n(x) - x = (q^n - 1) x + (n)_q h has norm p^-2 |n| for n < 25
        let it = sigma.iterate(n);
        let want = LogNorm::from_log_int(if n % 5 == 0 { -3 } else { -2 });
        ensure(it.x_radius() == want && want <= sigma.x_radius(), || format!("rho(sigma^{n}) = {}", it.x_radius()))?;
    }
    ensure(sigma.eta_admissible(LogNorm::from_log_int(-2)).holds(), || "not admissible at p^-2".into())?;
    ensure(!sigma.eta_admissible(LogNorm::from_log_int(-3)).holds(), || "admissible at p^-3".into())?;
    Ok("rho(sigma^n) for q = 1 + p^2, h = p^2, n <= 10".into())
}

fn criterion_11(ctx: &Ctx) -> Check {
    let s = ctx.s;
    let sigma = endo(s, 26, 0);
    let m = ConnectionModule::untwisted(vec![vec![LaurentElement::monomial(s, -1, s.ctx.int(3))]], s, ctx.eta).map_err(|e| e.to_string())?;
    let out = log_derivative_form(&m, &sigma, ORDER).map_err(|e| e.to_string())?;
    let want = LaurentElement::constant(s, s.ctx.int(26 * 26 * 26));
    let got = &out.matrix()[0][0];
    ensure(got.eq_within(&want, out.tail().max(got.tail())), || format!("q^3 differs by {}", got.distance(&want)))?;
    Ok(format!("G = 3/x gives q^3 to tail {}", out.tail()))
}

fn criterion_12(ctx: &Ctx) -> Check {
    ensure(ctx.exit == Some(0), || format!("verify all exited with {:?}", ctx.exit))?;
    ensure(ctx.elapsed <= RUNTIME_BUDGET, || format!("verify all took {:.1?}, budget {RUNTIME_BUDGET:?}", ctx.elapsed))?;
    Ok(format!("verify all exit 0 in {:.1?}", ctx.elapsed))
}

const CRITERIA: [(&str, fn(&Ctx) -> Check); 12] = [
    ("quantum Pascal", criterion_1),
    ("divided-power oracle", criterion_2),
    ("Schauder isometry", criterion_3),
    ("annulus derivative bound", criterion_4),
    ("deformation", criterion_5),
    ("confluence exponential", criterion_6),
    ("confluence power function", criterion_7),
    ("structure identity", criterion_8),
    ("operator algebra", criterion_9),
    ("radius and admissibility", criterion_10),
    ("log-derivative agreement", criterion_11),
    ("CLI round trip", criterion_12),
];

fn main() -> ExitCode {
    let cfg = Config::default();
    let start = Instant::now();
    let run = Command::new(env!("CARGO_BIN_EXE_twisted")).args(["--format", "json", "verify", "all"]).output().expect("twisted runs");
    let elapsed = start.elapsed();
    let report: Value = serde_json::from_slice(&run.stdout).unwrap_or(Value::Null);
    let ctx = Ctx { s: cfg.space().unwrap(), eta: cfg.eta().unwrap(), report, elapsed, exit: run.status.code() };

    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let n = i as u64 + 1;
        let outcome = suite(&ctx, n).and_then(|a| check(&ctx).map(|b| format!("{a}; {b}")));
        match outcome {
            Ok(detail) => println!("criterion {n:>2} {name:<27} PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name:<27} FAIL  {why}");
            }
        }
    }
    println!("acceptance: {}/12 criteria pass", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
