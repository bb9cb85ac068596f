use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;

use super::Space;
use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::PadicScalar;

/// A windowed Laurent expansion `sum a_n x^n` plus a bound on the Gauss norm
/// of everything that was not kept.
///
/// Exact zeros are never stored. Coefficients that fell below precision are
/// kept as `O(p^a)` so that their norm bound survives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentElement {
    space: Space,
    coeffs: BTreeMap<i64, PadicScalar>,
    tail: LogNorm,
}

impl LaurentElement {
    pub fn zero(space: Space) -> Self {
        LaurentElement { space, coeffs: BTreeMap::new(), tail: LogNorm::Zero }
    }

    pub fn constant(space: Space, c: PadicScalar) -> Self {
        Self::monomial(space, 0, c)
    }

    pub fn one(space: Space) -> Self {
        Self::constant(space, space.ctx.one())
    }

    pub fn x(space: Space) -> Self {
        Self::monomial(space, 1, space.ctx.one())
    }

    /// `c x^n`; folded into the tail when `n` lies outside the window.
    pub fn monomial(space: Space, n: i64, c: PadicScalar) -> Self {
        let mut out = Self::zero(space);
        out.add_term(n, c);
        out
    }

    /// Builds an element from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms(space: Space, terms: impl IntoIterator<Item = (i64, PadicScalar)>, tail: LogNorm) -> Self {
        let mut out = Self::zero(space);
        for (n, c) in terms {
            out.add_term(n, c);
        }
        out.tail = out.tail.max(tail);
        out
    }

    /// Like [`LaurentElement::from_terms`] but rejects exponents outside the window.
    pub fn try_from_terms(space: Space, terms: impl IntoIterator<Item = (i64, PadicScalar)>, tail: LogNorm) -> Result<Self> {
        let mut out = Self::zero(space);
        for (n, c) in terms {
            space.check_window(n)?;
            if c.ctx() != space.ctx {
                return Err(Error::ContextMismatch(format!("coefficient of x^{n}")));
            }
            out.add_term(n, c);
        }
        out.tail = tail;
        Ok(out)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn tail(&self) -> LogNorm {
        self.tail
    }

    pub fn with_tail(mut self, tail: LogNorm) -> Self {
        self.tail = self.tail.max(tail);
        self
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &PadicScalar)> + '_ {
        self.coeffs.iter().map(|(n, c)| (*n, c))
    }

    pub fn coeff(&self, n: i64) -> PadicScalar {
        self.coeffs.get(&n).cloned().unwrap_or_else(|| self.space.ctx.zero())
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// No stored terms and no tail.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.tail.is_zero()
    }

    /// Zero tail and every coefficient known to the working precision or exactly.
    pub fn is_exact(&self) -> bool {
        self.tail.is_zero() && self.coeffs.values().all(|c| !c.is_negligible())
    }

    pub fn add_term(&mut self, n: i64, c: PadicScalar) {
        if c.is_exact_zero() {
            return;
        }
        if !self.space.contains(n) {
            let w = c.norm().mul(self.space.weight(n));
            self.tail = self.tail.max(w);
            return;
        }
        let entry = match self.coeffs.remove(&n) {
            Some(old) => &old + &c,
            None => c,
        };
        if !entry.is_exact_zero() {
            self.coeffs.insert(n, entry);
        }
    }

    /// `max(|a_n| w(n), tail)`: exact for exact elements, an upper bound otherwise.
    pub fn gauss_norm(&self) -> LogNorm {
        self.coeffs
            .iter()
            .map(|(n, c)| c.norm().mul(self.space.weight(*n)))
            .fold(self.tail, LogNorm::max)
    }

    /// Sup norm on the circle `|x| = p^rho_log`, bounded by the tail.
    pub fn circle_norm(&self, rho_log: Rational64) -> LogNorm {
        self.coeffs
            .iter()
            .map(|(n, c)| c.norm().mul(LogNorm::Finite(rho_log * Rational64::from_integer(*n))))
            .fold(self.tail, LogNorm::max)
    }

    /// Largest weighted norm of a coefficient difference that is visible at
    /// working precision; tails are not included.
    pub fn distance(&self, other: &Self) -> LogNorm {
        self.space.same(&other.space);
        (self - other)
            .coeffs
            .iter()
            .filter(|(_, c)| !c.is_negligible())
            .map(|(n, c)| c.norm().mul(self.space.weight(*n)))
            .fold(LogNorm::Zero, LogNorm::max)
    }

    /// Equal up to terms of weighted norm at most `tol`, ignoring digits lost to precision.
    pub fn eq_within(&self, other: &Self, tol: LogNorm) -> bool {
        self.distance(other) <= tol
    }

    /// Equal at working precision.
    pub fn eq_at_precision(&self, other: &Self) -> bool {
        self.distance(other).is_zero()
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        if c.is_exact_zero() {
            return Self::zero(self.space);
        }
        let mut out = Self::zero(self.space);
        for (n, a) in &self.coeffs {
            out.add_term(*n, a * c);
        }
        out.tail = self.tail.mul(c.norm());
        out
    }

    /// Multiplication by `c x^k`.
    pub fn mul_monomial(&self, k: i64, c: &PadicScalar) -> Self {
        let mut out = Self::zero(self.space);
        for (n, a) in &self.coeffs {
            out.add_term(n + k, a * c);
        }
        out.tail = out.tail.max(self.tail.mul(c.norm()).mul(self.space.weight(k)));
        out
    }

    /// The same terms seen on another window of the same annulus.
    pub fn rehome(&self, space: Space) -> Self {
        assert_eq!(self.space.params, space.params);
        assert_eq!(self.space.ctx, space.ctx);
        let mut out = Self::zero(space);
        for (n, a) in &self.coeffs {
            out.add_term(*n, a.clone());
        }
        out.tail = out.tail.max(self.tail);
        out
    }

    fn mul_impl(&self, other: &Self) -> Self {
        self.space.same(&other.space);
        let space = self.space;
        let (lo, hi) = space.window;
        let mut acc: Vec<Option<PadicScalar>> = vec![None; (hi - lo + 1) as usize];
        let mut overflow = LogNorm::Zero;
        let norms: Vec<LogNorm> = other.coeffs.values().map(PadicScalar::norm).collect();
        for (i, a) in &self.coeffs {
            let mut a_norm = None;
            for ((j, b), b_norm) in other.coeffs.iter().zip(&norms) {
                let n = i + j;
                if n < lo || n > hi {
                    let a_norm = *a_norm.get_or_insert_with(|| a.norm());
                    overflow = overflow.max(a_norm.mul(*b_norm).mul(space.weight(n)));
                    continue;
                }
                let t = a * b;
                let slot = &mut acc[(n - lo) as usize];
                *slot = Some(match slot.take() {
                    Some(s) => &s + &t,
                    None => t,
                });
            }
        }
        let mut coeffs = BTreeMap::new();
        for (idx, c) in acc.into_iter().enumerate() {
            if let Some(c) = c {
                if !c.is_exact_zero() {
                    coeffs.insert(lo + idx as i64, c);
                }
            }
        }
        let tail = if self.tail.is_zero() && other.tail.is_zero() {
            LogNorm::Zero
        } else {
            self.gauss_norm().mul(other.tail).max(other.gauss_norm().mul(self.tail))
        };
        LaurentElement { space, coeffs, tail: tail.max(overflow) }
    }

    fn add_impl(&self, other: &Self, negate: bool) -> Self {
        self.space.same(&other.space);
        let mut out = self.clone();
        for (n, b) in &other.coeffs {
            out.add_term(*n, if negate { -b } else { b.clone() });
        }
        out.tail = self.tail.max(other.tail);
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.space);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Index `n0` of a strictly dominant monomial and the dominance ratio
    /// `lambda < 1`: every other term, and the uncertain part, is smaller than
    /// `a_{n0} x^{n0}` by at least the factor `lambda` on both boundary circles.
    pub fn dominant_monomial(&self) -> Option<(i64, LogNorm)> {
        let (n0, a) = self
            .coeffs
            .iter()
            .filter(|(_, c)| !c.is_negligible())
            .max_by_key(|(n, c)| c.norm().mul(self.space.weight(**n)))?;
        if self.space.params.is_disk() && *n0 != 0 {
            return None;
        }
        let a_norm = a.norm();
        let mut lambda = LogNorm::Zero;
        for (n, c) in &self.coeffs {
            if n == n0 {
                continue;
            }
            let rel = c.norm().div(a_norm).mul(self.space.weight(n - n0));
            lambda = lambda.max(rel);
        }
        let err = self.tail.mul(self.space.weight(-n0)).div(a_norm);
        lambda = lambda.max(err);
        (lambda < LogNorm::ONE).then_some((*n0, lambda))
    }

    /// Inverse by a geometric series around the dominant monomial, truncated
    /// after `k` correction terms, with a certified tail.
    pub fn invert(&self, k: usize) -> Result<Self> {
        let (n0, _) = self
            .dominant_monomial()
            .ok_or_else(|| Error::NotAUnit(format!("no strictly dominant monomial in {self}")))?;
        let space = self.space;
        let a = self.coeffs[&n0].clone();
        let a_inv = a.inv()?;
        // f = a x^n0 (1 + u), with u split into its stored part and uncertain part
        let work = Space { window: (space.window.0 + n0, space.window.1 + n0), ..space };
        let mut u = LaurentElement::zero(work);
        let mut u_err = self.tail.mul(space.weight(-n0)).div(a.norm());
        for (n, c) in &self.coeffs {
            if *n == n0 {
                continue;
            }
            let t = c * &a_inv;
            if t.is_negligible() {
                u_err = u_err.max(t.norm().mul(space.weight(n - n0)));
            } else {
                u.add_term(n - n0, t);
            }
        }
        let lambda_s = u.gauss_norm();
        let one = LaurentElement::one(work);
        let mut s = one.clone();
        for _ in 0..k {
            s = &one - &(&u * &s);
        }
        let series_err = lambda_s.powi(k as i64 + 1).max(u_err).max(s.tail);
        let mut out = LaurentElement::zero(space);
        for (n, c) in &s.coeffs {
            out.add_term(n - n0, c * &a_inv);
        }
        out.tail = out.tail.max(series_err.mul(a_inv.norm()).mul(space.weight(-n0)));
        Ok(out)
    }

    /// `self / (a x + b)`, when one of the two terms strictly dominates on
    /// both boundary circles. Runs the division recurrence across the window
    /// and certifies what is left at the far end.
    pub fn div_linear(&self, a: &PadicScalar, b: &PadicScalar) -> Result<Self> {
        let space = self.space;
        let (lo, hi) = space.window;
        let params = space.params;
        let mut out = Self::zero(space);
        let x_dominant = !params.is_disk() && !a.is_negligible() && b.norm() < a.norm().mul(params.r1());
        let c_dominant = !b.is_negligible() && a.norm().mul(params.r()) < b.norm();
        if x_dominant {
            // (a x + b) Y = R, solved from the top: a Y_m = R_{m+1} - b Y_{m+1}
            let inv_norm = a.norm().mul(params.r1()).recip().unwrap();
            let a_inv = a.inv()?;
            let Some(top) = self.max_exponent() else {
                out.tail = self.tail.mul(inv_norm);
                return Ok(out);
            };
            let mut next = space.ctx.zero();
            for m in (lo..top).rev() {
                let y = &(&self.coeff(m + 1) - &(b * &next)) * &a_inv;
                out.add_term(m, y.clone());
                next = y;
            }
            let residual = &self.coeff(lo) - &(b * &next);
            let rest = residual.norm().mul(space.weight(lo));
            out.tail = out.tail.max(self.tail.max(rest).mul(inv_norm));
            Ok(out)
        } else if c_dominant {
            // solved from the bottom: b Y_m = R_m - a Y_{m-1}
            let inv_norm = b.norm().recip().unwrap();
            let b_inv = b.inv()?;
            let Some(bottom) = self.min_exponent() else {
                out.tail = self.tail.mul(inv_norm);
                return Ok(out);
            };
            let mut prev = space.ctx.zero();
            for m in bottom..=hi {
                let y = &(&self.coeff(m) - &(a * &prev)) * &b_inv;
                out.add_term(m, y.clone());
                prev = y;
            }
            let rest = (a * &prev).norm().mul(space.weight(hi + 1));
            out.tail = out.tail.max(self.tail.max(rest).mul(inv_norm));
            Ok(out)
        } else {
            Err(Error::NotAUnit(format!("({a})*x + ({b}) has no strictly dominant term")))
        }
    }

    /// Text rendering, highest exponent first.
    pub fn to_text(&self) -> String {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(n, c)| match n {
                0 => format!("({c})"),
                1 => format!("({c})*x"),
                _ => format!("({c})*x^{n}"),
            })
            .collect();
        if parts.is_empty() {
            parts.push("0".into());
        }
        let mut s = parts.join(" + ");
        if !self.tail.is_zero() {
            s.push_str(&format!(" + [tail <= {}]", self.tail));
        }
        s
    }
}

impl fmt::Display for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for &LaurentElement {
    type Output = LaurentElement;
    fn add(self, rhs: &LaurentElement) -> LaurentElement {
        self.add_impl(rhs, false)
    }
}

impl Sub for &LaurentElement {
    type Output = LaurentElement;
    fn sub(self, rhs: &LaurentElement) -> LaurentElement {
        self.add_impl(rhs, true)
    }
}

impl Mul for &LaurentElement {
    type Output = LaurentElement;
    fn mul(self, rhs: &LaurentElement) -> LaurentElement {
        self.mul_impl(rhs)
    }
}

impl Neg for &LaurentElement {
    type Output = LaurentElement;
    fn neg(self) -> LaurentElement {
        LaurentElement {
            space: self.space,
            coeffs: self.coeffs.iter().map(|(n, c)| (*n, -c)).collect(),
            tail: self.tail,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentElement {
            type Output = LaurentElement;
            fn $m(self, rhs: LaurentElement) -> LaurentElement {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentElement> for LaurentElement {
            type Output = LaurentElement;
            fn $m(self, rhs: &LaurentElement) -> LaurentElement {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
