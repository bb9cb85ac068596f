//! p-adic scalars at a fixed absolute working precision.
//!
//! A scalar is one of
//! - an exact integer (kept exact while `|n| < p^(2N)`),
//! - an approximation `p^v * u + O(p^a)` with `u` a unit known modulo `p^(a-v)`,
//! - `O(p^a)`, a value indistinguishable from zero at the surviving precision.
//!
//! Arithmetic propagates the absolute precision `a`; it never claims digits it
//! does not have, and approximations are capped at the working precision `N`.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lognorm::LogNorm;

/// Prime and absolute precision shared by every scalar of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PadicContext {
    pub p: u32,
    pub precision: i64,
}

impl PadicContext {
    pub fn new(p: u32, precision: i64) -> Result<Self> {
        if p < 2 || !is_prime(p) {
            return Err(Error::Config(format!("{p} is not a prime")));
        }
        if precision < 1 {
            return Err(Error::Config(format!("precision {precision} must be positive")));
        }
        Ok(PadicContext { p, precision })
    }

    pub fn zero(self) -> PadicScalar {
        PadicScalar::from_int(self, 0)
    }

    pub fn one(self) -> PadicScalar {
        PadicScalar::from_int(self, 1)
    }

    pub fn int(self, n: i64) -> PadicScalar {
        PadicScalar::from_int(self, n)
    }

    /// `p^k` as a scalar; negative `k` gives the approximation of `1/p^-k`.
    pub fn p_power(self, k: i64) -> PadicScalar {
        if k >= 0 {
            PadicScalar::from_bigint(self, pow_p(self.p, k))
        } else {
            PadicScalar::build(self, k, BigInt::one(), Some(self.precision))
        }
    }

    pub fn parse(self, text: &str) -> Result<PadicScalar> {
        PadicScalar::parse(self, text)
    }
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

thread_local! {
    // powers of the most recent prime, indexed by exponent
    static POWERS: RefCell<(u32, Vec<BigInt>)> = const { RefCell::new((0, Vec::new())) };
}

/// `p^k` for `k >= 0`, memoized per thread.
pub fn pow_p(p: u32, k: i64) -> BigInt {
    with_pow_p(p, k, BigInt::clone)
}

fn with_pow_p<T>(p: u32, k: i64, f: impl FnOnce(&BigInt) -> T) -> T {
    assert!(k >= 0, "negative exponent {k}");
    if k > 512 {
        return f(&BigInt::from(p).pow(k as u32));
    }
    POWERS.with(|cache| {
        let mut cache = cache.borrow_mut();
        let (prime, powers) = &mut *cache;
        if *prime != p {
            *prime = p;
            powers.clear();
        }
        while powers.len() <= k as usize {
            let next = powers.last().map_or_else(BigInt::one, |last| last * p);
            powers.push(next);
        }
        f(&powers[k as usize])
    })
}

fn divisible(p: u32, n: &BigInt) -> bool {
    let p = p as u64;
    let r = n.iter_u32_digits().rev().fold(0u64, |r, d| ((r << 32) | d as u64) % p);
    r == 0
}

// `acc += u * p^k`
fn shift_add(p: u32, acc: &mut BigInt, u: &BigInt, k: i64) {
    if k == 0 {
        *acc += u;
    } else {
        with_pow_p(p, k, |m| *acc += u * m);
    }
}

/// Splits a nonzero integer as `p^v * u` with `p` not dividing `u`.
pub fn split_p(p: u32, n: &BigInt) -> (i64, BigInt) {
    debug_assert!(!n.is_zero());
    let mut v = 0;
    let mut u = n.clone();
    while divisible(p, &u) {
        u /= p;
        v += 1;
    }
    (v, u)
}

/// `u mod p^k` in `[0, p^k)`, skipping the division when `u` is already close.
fn reduce(p: u32, k: i64, u: BigInt) -> BigInt {
    with_pow_p(p, k, |m| {
        if u.is_negative() {
            let w = u + m;
            if w.is_negative() {
                w.mod_floor(m)
            } else {
                w
            }
        } else if &u < m {
            u
        } else {
            let w = u - m;
            if &w < m {
                w
            } else {
                w.mod_floor(m)
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Exact(BigInt),
    Approx { val: i64, unit: BigInt, abs: i64 },
    Fuzzy { abs: i64 },
}

/// Zero test outcome: zero is only claimed for exact zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroStatus {
    Nonzero,
    Zero,
    BelowPrecision,
}

/// Result of [`PadicScalar::padic_norm`]: exact, or only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormValue {
    Exact(LogNorm),
    AtMost(LogNorm),
}

impl NormValue {
    pub fn bound(self) -> LogNorm {
        match self {
            NormValue::Exact(n) | NormValue::AtMost(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    ctx: PadicContext,
    repr: Repr,
}

// Arithmetic view: exact zero, known leading term, or pure error term.
enum Form<'a> {
    Zero,
    Known { val: i64, unit: std::borrow::Cow<'a, BigInt>, abs: Option<i64> },
    Fuzzy(i64),
}

impl PadicScalar {
    pub fn from_int(ctx: PadicContext, n: i64) -> Self {
        Self::from_bigint(ctx, BigInt::from(n))
    }

    pub fn from_bigint(ctx: PadicContext, n: BigInt) -> Self {
        Self::normalize_exact(ctx, n)
    }

    /// The p-adic approximation of `num/den`; any nonzero denominator is allowed.
    pub fn from_ratio(ctx: PadicContext, num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(ctx.zero());
        }
        let (q, r) = num.div_rem(den);
        if r.is_zero() {
            return Ok(Self::from_bigint(ctx, q));
        }
        let (vn, un) = split_p(ctx.p, num);
        let (vd, ud) = split_p(ctx.p, den);
        let val = vn - vd;
        let rel = ctx.precision - val;
        if rel <= 0 {
            return Ok(Self::fuzzy(ctx, ctx.precision));
        }
        let m = pow_p(ctx.p, rel);
        let inv = ud.mod_floor(&m).modinv(&m).expect("unit denominator");
        Ok(Self::build(ctx, val, un * inv, Some(ctx.precision)))
    }

    /// `O(p^abs)`.
    pub fn fuzzy(ctx: PadicContext, abs: i64) -> Self {
        PadicScalar { ctx, repr: Repr::Fuzzy { abs: abs.min(ctx.precision) } }
    }

    pub fn ctx(&self) -> PadicContext {
        self.ctx
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact(_))
    }

    pub fn as_exact_int(&self) -> Option<&BigInt> {
        match &self.repr {
            Repr::Exact(n) => Some(n),
            _ => None,
        }
    }

    /// Surviving absolute precision; `None` for exact values.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Exact(_) => None,
            Repr::Approx { abs, .. } | Repr::Fuzzy { abs } => Some(*abs),
        }
    }

    pub fn zero_status(&self) -> ZeroStatus {
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => ZeroStatus::Zero,
            Repr::Fuzzy { .. } => ZeroStatus::BelowPrecision,
            _ => ZeroStatus::Nonzero,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.zero_status() == ZeroStatus::Zero
    }

    /// True for exact zeros and for values lost below precision.
    pub fn is_negligible(&self) -> bool {
        self.zero_status() != ZeroStatus::Nonzero
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.repr, Repr::Exact(n) if n.is_one())
    }

    /// Valuation of a value that is known to be nonzero.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => None,
            Repr::Exact(n) => Some(split_p(self.ctx.p, n).0),
            Repr::Approx { val, .. } => Some(*val),
            Repr::Fuzzy { .. } => None,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Some(0)
    }

    pub fn padic_norm(&self) -> NormValue {
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => NormValue::Exact(LogNorm::Zero),
            Repr::Fuzzy { abs } => NormValue::AtMost(LogNorm::from_valuation(*abs)),
            _ => NormValue::Exact(LogNorm::from_valuation(self.valuation().unwrap())),
        }
    }

    /// Upper bound on the norm; exact unless the value is below precision.
    pub fn norm(&self) -> LogNorm {
        self.padic_norm().bound()
    }

    /// `a == b` up to the precision both sides carry.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        (self - other).is_negligible()
    }

    pub fn inv(&self) -> Result<Self> {
        let ctx = self.ctx;
        let n_prec = ctx.precision;
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => Err(Error::DivisionByZero),
            Repr::Exact(n) if n.abs().is_one() => Ok(self.clone()),
            Repr::Exact(n) => {
                let (v, u) = split_p(ctx.p, n);
                Ok(Self::inv_unit(ctx, -v, &u, n_prec))
            }
            Repr::Approx { val, unit, abs } => {
                Ok(Self::inv_unit(ctx, -val, unit, (abs - 2 * val).min(n_prec)))
            }
            Repr::Fuzzy { abs } => Err(Error::PrecisionExhausted(format!(
                "cannot invert O({}^{abs})",
                ctx.p
            ))),
        }
    }

    fn inv_unit(ctx: PadicContext, val: i64, unit: &BigInt, abs: i64) -> Self {
        let rel = abs - val;
        if rel <= 0 {
            return Self::fuzzy(ctx, abs);
        }
        let m = pow_p(ctx.p, rel);
        let inv = unit.mod_floor(&m).modinv(&m).expect("unit is invertible");
        Self::build(ctx, val, inv, Some(abs))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if let (Repr::Exact(a), Repr::Exact(b)) = (&self.repr, &other.repr) {
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            let (q, r) = a.div_rem(b);
            if r.is_zero() {
                return Ok(Self::from_bigint(self.ctx, q));
            }
        }
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = self.ctx.one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn powi(&self, k: i64) -> Result<Self> {
        if k >= 0 {
            Ok(self.pow(k as u64))
        } else {
            Ok(self.inv()?.pow(k.unsigned_abs()))
        }
    }

    /// `log(1 + t) = sum (-1)^(k+1) t^k / k`, for `|t| < p^(-1/(p-1))`.
    pub fn log(&self) -> Result<Self> {
        let ctx = self.ctx;
        let t = self - &ctx.one();
        if t.is_exact_zero() {
            return Ok(ctx.zero());
        }
        let vt = match t.valuation() {
            Some(v) => v,
            None => return Ok(Self::fuzzy(ctx, t.absolute_precision().unwrap_or(ctx.precision))),
        };
        // v(t) > 1/(p-1) for integer valuations
        if vt < 1 || (ctx.p == 2 && vt < 2) {
            return Err(Error::LogDivergent(format!(
                "|q - 1| = {} is not below p^(-1/(p-1))",
                LogNorm::from_valuation(vt)
            )));
        }
        let mut sum = ctx.zero();
        let mut power = ctx.one();
        let mut k: i64 = 1;
        loop {
            power = &power * &t;
            let term = power.div(&ctx.int(k))?;
            sum = if k % 2 == 1 { &sum + &term } else { &sum - &term };
            k += 1;
            // k*v(t) - log_p(k) is nondecreasing, so this bounds every later term
            if k * vt - ilog(ctx.p, k) >= ctx.precision {
                break;
            }
        }
        let cutoff = k * vt - ilog(ctx.p, k);
        Ok(sum.with_precision_cap(cutoff))
    }

    /// `exp(t)` for `|t| < p^(-1/(p-1))`.
    pub fn exp(&self) -> Result<Self> {
        let ctx = self.ctx;
        if self.is_exact_zero() {
            return Ok(ctx.one());
        }
        let vt = match self.valuation() {
            Some(v) => v,
            None => return Ok(&ctx.one() + self),
        };
        if vt < 1 || (ctx.p == 2 && vt < 2) {
            return Err(Error::PrecisionExhausted(format!(
                "exponential of an element of valuation {vt} does not converge"
            )));
        }
        let mut sum = ctx.one();
        let mut term = ctx.one();
        let mut k: i64 = 1;
        loop {
            term = (&term * self).div(&ctx.int(k))?;
            sum = &sum + &term;
            k += 1;
            if k * vt - legendre(ctx.p, k) >= ctx.precision {
                break;
            }
        }
        Ok(sum.with_precision_cap(k * vt - legendre(ctx.p, k)))
    }

    /// Forgets every digit at or beyond `p^abs`.
    pub fn with_precision_cap(&self, abs: i64) -> Self {
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => self.clone(),
            Repr::Exact(n) => Self::build(self.ctx, 0, n.clone(), Some(abs)),
            Repr::Approx { val, unit, abs: a } => {
                Self::build(self.ctx, *val, unit.clone(), Some(abs.min(*a)))
            }
            Repr::Fuzzy { abs: a } => Self::fuzzy(self.ctx, abs.min(*a)),
        }
    }

    // exact integers stay exact below p^(2N); larger ones keep N digits
    fn normalize_exact(ctx: PadicContext, n: BigInt) -> Self {
        if with_pow_p(ctx.p, 2 * ctx.precision, |m| n.magnitude() >= m.magnitude()) {
            return Self::build(ctx, 0, n, Some(ctx.precision));
        }
        PadicScalar { ctx, repr: Repr::Exact(n) }
    }

    // `p^val * num` known modulo `p^abs`, or exactly when `abs` is `None`.
    fn build(ctx: PadicContext, val: i64, num: BigInt, abs: Option<i64>) -> Self {
        let Some(abs) = abs else {
            assert!(val >= 0, "exact values are integers");
            return Self::normalize_exact(ctx, num * pow_p(ctx.p, val));
        };
        let abs = abs.min(ctx.precision);
        if num.is_zero() {
            return Self::fuzzy(ctx, abs);
        }
        let (k, u) = split_p(ctx.p, &num);
        let val = val + k;
        if val >= abs {
            return Self::fuzzy(ctx, abs);
        }
        let unit = reduce(ctx.p, abs - val, u);
        PadicScalar { ctx, repr: Repr::Approx { val, unit, abs } }
    }

    fn form(&self) -> Form<'_> {
        use std::borrow::Cow;
        match &self.repr {
            Repr::Exact(n) if n.is_zero() => Form::Zero,
            Repr::Exact(n) => {
                let (val, u) = split_p(self.ctx.p, n);
                Form::Known { val, unit: Cow::Owned(u), abs: None }
            }
            Repr::Approx { val, unit, abs } => {
                Form::Known { val: *val, unit: Cow::Borrowed(unit), abs: Some(*abs) }
            }
            Repr::Fuzzy { abs } => Form::Fuzzy(*abs),
        }
    }

    fn check_ctx(&self, other: &Self) {
        assert_eq!(self.ctx, other.ctx, "scalars from different contexts");
    }

    fn add_impl(&self, other: &Self) -> Self {
        self.check_ctx(other);
        let ctx = self.ctx;
        if let (Repr::Exact(a), Repr::Exact(b)) = (&self.repr, &other.repr) {
            return Self::normalize_exact(ctx, a + b);
        }
        match (self.form(), other.form()) {
            (Form::Zero, _) => other.clone(),
            (_, Form::Zero) => self.clone(),
            (Form::Fuzzy(a), Form::Fuzzy(b)) => Self::fuzzy(ctx, a.min(b)),
            (Form::Fuzzy(a), Form::Known { val, unit, abs })
            | (Form::Known { val, unit, abs }, Form::Fuzzy(a)) => {
                let abs = abs.map_or(a, |b| b.min(a));
                Self::build(ctx, val, unit.into_owned(), Some(abs))
            }
            (
                Form::Known { val: v1, unit: u1, abs: a1 },
                Form::Known { val: v2, unit: u2, abs: a2 },
            ) => {
                let abs = match (a1, a2) {
                    (Some(x), Some(y)) => x.min(y),
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => unreachable!(),
                };
                let m = v1.min(v2);
                let mut num = BigInt::zero();
                // terms at or beyond the precision only cost precision
                if v1 < abs {
                    shift_add(ctx.p, &mut num, u1.as_ref(), v1 - m);
                }
                if v2 < abs {
                    shift_add(ctx.p, &mut num, u2.as_ref(), v2 - m);
                }
                Self::build(ctx, m, num, Some(abs))
            }
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.check_ctx(other);
        let ctx = self.ctx;
        if let (Repr::Exact(a), Repr::Exact(b)) = (&self.repr, &other.repr) {
            return Self::normalize_exact(ctx, a * b);
        }
        match (self.form(), other.form()) {
            (Form::Zero, _) | (_, Form::Zero) => ctx.zero(),
            (Form::Fuzzy(a), Form::Fuzzy(b)) => Self::fuzzy(ctx, a + b),
            (Form::Fuzzy(a), Form::Known { val, .. }) | (Form::Known { val, .. }, Form::Fuzzy(a)) => {
                Self::fuzzy(ctx, a + val)
            }
            (
                Form::Known { val: v1, unit: u1, abs: a1 },
                Form::Known { val: v2, unit: u2, abs: a2 },
            ) => {
                let bound_from_1 = a1.map(|a| a + v2);
                let bound_from_2 = a2.map(|a| a + v1);
                let abs = match (bound_from_1, bound_from_2) {
                    (Some(x), Some(y)) => x.min(y),
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => unreachable!(),
                };
                Self::build(ctx, v1 + v2, u1.as_ref() * u2.as_ref(), Some(abs))
            }
        }
    }

    /// Text form; see [`PadicScalar::parse`].
    pub fn to_text(&self) -> String {
        let p = self.ctx.p;
        match &self.repr {
            Repr::Exact(n) => n.to_string(),
            Repr::Approx { val, unit, abs } if *val >= 0 => {
                format!("{} + O({p}^{abs})", unit * pow_p(p, *val))
            }
            Repr::Approx { val, unit, abs } => format!("{unit}/{p}^{} + O({p}^{abs})", -val),
            Repr::Fuzzy { abs } => format!("O({p}^{abs})"),
        }
    }

    /// Parses `n`, `a/b` (with `b` prime to p), `n + O(p^a)`, `u/p^k + O(p^a)` or `O(p^a)`.
    pub fn parse(ctx: PadicContext, text: &str) -> Result<Self> {
        let bad = || Error::Parse { what: "p-adic scalar", text: text.to_string() };
        let t = text.trim();
        let (main, big_o) = match t.find("O(") {
            Some(i) => {
                let head = t[..i].trim_end();
                let head = if head.is_empty() {
                    ""
                } else {
                    head.strip_suffix('+').ok_or_else(bad)?.trim_end()
                };
                let inner = t[i + 2..].strip_suffix(')').ok_or_else(bad)?;
                (head, Some(parse_prime_power(ctx, inner).ok_or_else(bad)?))
            }
            None => (t, None),
        };
        let Some(abs) = big_o else {
            return match main.split_once('/') {
                None => Ok(Self::from_bigint(ctx, main.parse::<BigInt>().map_err(|_| bad())?)),
                Some((a, b)) => {
                    let a: BigInt = a.trim().parse().map_err(|_| bad())?;
                    let b: BigInt = b.trim().parse().map_err(|_| bad())?;
                    if b.is_zero() {
                        return Err(bad());
                    }
                    if (&b % BigInt::from(ctx.p)).is_zero() {
                        return Err(Error::NonUnitDenominator(b.to_string()));
                    }
                    Self::from_ratio(ctx, &a, &b)
                }
            };
        };
        if abs > ctx.precision {
            return Err(Error::ContextMismatch(format!(
                "{text:?} claims precision beyond {}",
                ctx.precision
            )));
        }
        if main.is_empty() {
            return Ok(Self::fuzzy(ctx, abs));
        }
        let (num, val) = match main.split_once('/') {
            None => (main.parse::<BigInt>().map_err(|_| bad())?, 0),
            Some((a, b)) => {
                let k = parse_prime_power(ctx, b.trim()).ok_or_else(bad)?;
                (a.trim().parse::<BigInt>().map_err(|_| bad())?, -k)
            }
        };
        let out = Self::build(ctx, val, num, Some(abs));
        if out.to_text() != t {
            // only canonical forms are accepted, so documents round-trip bit-exactly
            return Err(bad());
        }
        Ok(out)
    }
}

fn parse_prime_power(ctx: PadicContext, s: &str) -> Option<i64> {
    let (base, exp) = s.split_once('^')?;
    if base.trim().parse::<u32>().ok()? != ctx.p {
        return None;
    }
    exp.trim().parse().ok()
}

/// `floor(log_p k)` for `k >= 1`.
pub fn ilog(p: u32, k: i64) -> i64 {
    let mut e = 0;
    let mut m = k;
    while m >= p as i64 {
        m /= p as i64;
        e += 1;
    }
    e
}

/// `v_p(k!)`.
pub fn legendre(p: u32, k: i64) -> i64 {
    let mut s = 0;
    let mut m = k;
    while m > 0 {
        m /= p as i64;
        s += m;
    }
    s
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for &PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: &PadicScalar) -> PadicScalar {
        self.add_impl(rhs)
    }
}

impl Sub for &PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: &PadicScalar) -> PadicScalar {
        self.add_impl(&-rhs)
    }
}

impl Mul for &PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: &PadicScalar) -> PadicScalar {
        self.mul_impl(rhs)
    }
}

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        match &self.repr {
            Repr::Exact(n) => PadicScalar { ctx: self.ctx, repr: Repr::Exact(-n) },
            Repr::Approx { val, unit, abs } => {
                PadicScalar::build(self.ctx, *val, -unit, Some(*abs))
            }
            Repr::Fuzzy { .. } => self.clone(),
        }
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        -&self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: &PadicScalar) -> PadicScalar {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Exact value as an `i64`, when it is a small exact integer.
pub fn small_int(s: &PadicScalar) -> Option<i64> {
    s.as_exact_int().and_then(|n| n.to_i64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> PadicContext {
        PadicContext::new(5, 40).unwrap()
    }

    #[test]
    fn norms_of_small_values() {
        let c = ctx();
        assert_eq!(c.int(5).padic_norm(), NormValue::Exact(LogNorm::from_log_int(-1)));
        assert_eq!(c.zero().padic_norm(), NormValue::Exact(LogNorm::Zero));
        assert_eq!(c.int(26).padic_norm(), NormValue::Exact(LogNorm::ONE));
        assert_eq!(
            PadicScalar::fuzzy(c, 40).padic_norm(),
            NormValue::AtMost(LogNorm::from_log_int(-40))
        );
    }

    #[test]
    fn inverse_of_unit_and_of_p() {
        let c = ctx();
        let three = c.int(3);
        let inv = three.inv().unwrap();
        assert!((&inv * &three).eq_at_precision(&c.one()));
        assert_eq!((&inv * &three).absolute_precision(), Some(40));
        let ip = c.int(5).inv().unwrap();
        assert_eq!(ip.valuation(), Some(-1));
        assert_eq!(ip.to_text(), "1/5^1 + O(5^40)");
        // 1/p known mod p^40, times p gives 1 mod p^41 capped at 40
        assert!((&ip * &c.int(5)).eq_at_precision(&c.one()));
    }

    #[test]
    fn precision_shrinks_under_division_by_p() {
        let c = ctx();
        let x = c.int(7).with_precision_cap(40);
        let y = x.div(&c.int(25)).unwrap();
        assert_eq!(y.valuation(), Some(-2));
        assert_eq!(y.absolute_precision(), Some(38));
    }

    #[test]
    fn exact_zero_versus_lost_precision() {
        let c = ctx();
        let a = c.int(1).with_precision_cap(10);
        let d = &a - &c.one();
        assert_eq!(d.zero_status(), ZeroStatus::BelowPrecision);
        assert_eq!((&c.one() - &c.one()).zero_status(), ZeroStatus::Zero);
        assert!(PadicScalar::fuzzy(c, 3).inv().is_err());
        assert_eq!(c.zero().inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn big_integers_demote_to_approximations() {
        let c = ctx();
        let q = c.int(26);
        let big = q.pow(40);
        assert!(!big.is_exact());
        assert_eq!(big.absolute_precision(), Some(40));
        let direct = PadicScalar::from_bigint(c, BigInt::from(26).pow(40));
        assert!(big.eq_at_precision(&direct));
    }

    #[test]
    fn text_forms_round_trip() {
        let c = ctx();
        for s in ["0", "-17", "3/7", "O(5^12)", "1/5^3 + O(5^40)", "250 + O(5^9)"] {
            let v = c.parse(s).unwrap();
            assert_eq!(c.parse(&v.to_text()).unwrap(), v, "{s}");
        }
        assert!(matches!(c.parse("1/5"), Err(Error::NonUnitDenominator(_))));
        assert!(c.parse("x").is_err());
        assert!(c.parse("1 + O(7^3)").is_err());
    }

    #[test]
    fn log_and_exp_are_inverse() {
        let c = ctx();
        let q = c.int(26);
        let l = q.log().unwrap();
        assert_eq!(l.valuation(), Some(2));
        assert!(l.exp().unwrap().eq_at_precision(&q));
        assert!(c.int(7).log().is_err());
    }

    fn arb_scalar() -> impl Strategy<Value = PadicScalar> {
        (any::<i64>(), 1i64..1000, 0i64..3).prop_map(|(a, b, shift)| {
            let c = ctx();
            let den = BigInt::from(b) * pow_p(5, shift);
            PadicScalar::from_ratio(c, &BigInt::from(a), &den).unwrap()
        })
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(a in arb_scalar(), b in arb_scalar()) {
            let prod = &a * &b;
            if !prod.is_negligible() {
                prop_assert_eq!(prod.norm(), a.norm().mul(b.norm()));
            }
        }

        #[test]
        fn norm_is_ultrametric(a in arb_scalar(), b in arb_scalar()) {
            let s = &a + &b;
            prop_assert!(s.norm() <= a.norm().max(b.norm()));
        }

        #[test]
        fn ring_axioms_at_precision(a in arb_scalar(), b in arb_scalar(), c in arb_scalar()) {
            prop_assert!((&(&a + &b) * &c).eq_at_precision(&(&(&a * &c) + &(&b * &c))));
            prop_assert!((&(&a - &b) + &b).eq_at_precision(&a));
        }

        #[test]
        fn text_round_trip(a in arb_scalar()) {
            prop_assert_eq!(PadicScalar::parse(ctx(), &a.to_text()).unwrap(), a);
        }
    }
}
