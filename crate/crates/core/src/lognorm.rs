//! Exact ultrametric magnitudes on a rational logarithmic scale.
//!
//! A [`LogNorm`] is either the zero magnitude or `p^e` for a rational `e`.
//! Every norm, radius and bound in the crate lives here, so comparisons are
//! exact rational comparisons and never touch floating point.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// `Zero` sorts below every finite magnitude; `Finite(e)` stands for `p^e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogNorm {
    Zero,
    Finite(Rational64),
}

impl LogNorm {
    pub const ONE: LogNorm = LogNorm::Finite(Rational64::new_raw(0, 1));

    pub fn from_log(e: Rational64) -> Self {
        LogNorm::Finite(e)
    }

    pub fn from_log_int(e: i64) -> Self {
        LogNorm::Finite(Rational64::from_integer(e))
    }

    /// Magnitude `p^(-v)` of an element of valuation `v`.
    pub fn from_valuation(v: i64) -> Self {
        LogNorm::Finite(Rational64::from_integer(-v))
    }

    pub fn log(&self) -> Option<Rational64> {
        match self {
            LogNorm::Zero => None,
            LogNorm::Finite(e) => Some(*e),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, LogNorm::Zero)
    }

    pub fn mul(self, other: LogNorm) -> LogNorm {
        match (self, other) {
            (LogNorm::Finite(a), LogNorm::Finite(b)) => LogNorm::Finite(a + b),
            _ => LogNorm::Zero,
        }
    }

    /// `self / other`; dividing by the zero magnitude is a caller bug.
    pub fn div(self, other: LogNorm) -> LogNorm {
        match (self, other) {
            (_, LogNorm::Zero) => panic!("division by the zero magnitude"),
            (LogNorm::Zero, _) => LogNorm::Zero,
            (LogNorm::Finite(a), LogNorm::Finite(b)) => LogNorm::Finite(a - b),
        }
    }

    pub fn recip(self) -> Option<LogNorm> {
        match self {
            LogNorm::Zero => None,
            LogNorm::Finite(a) => Some(LogNorm::Finite(-a)),
        }
    }

    pub fn powi(self, k: i64) -> LogNorm {
        match self {
            LogNorm::Zero if k > 0 => LogNorm::Zero,
            LogNorm::Zero if k == 0 => LogNorm::ONE,
            LogNorm::Zero => panic!("negative power of the zero magnitude"),
            LogNorm::Finite(a) => LogNorm::Finite(a * Rational64::from_integer(k)),
        }
    }

    pub fn pow_ratio(self, r: Rational64) -> LogNorm {
        match self {
            LogNorm::Zero if r.is_positive() => LogNorm::Zero,
            LogNorm::Zero if r.is_zero() => LogNorm::ONE,
            LogNorm::Zero => panic!("negative power of the zero magnitude"),
            LogNorm::Finite(a) => LogNorm::Finite(a * r),
        }
    }

    /// Text form used in documents: the rational exponent, or `null` handled by callers.
    pub fn to_log_text(&self) -> Option<String> {
        self.log().map(rational_text)
    }

    pub fn parse_log(text: &str) -> Result<LogNorm> {
        parse_rational(text).map(LogNorm::Finite)
    }
}

impl fmt::Display for LogNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogNorm::Zero => write!(f, "0"),
            LogNorm::Finite(e) if e.is_integer() => write!(f, "p^{}", e.numer()),
            LogNorm::Finite(e) => write!(f, "p^({}/{})", e.numer(), e.denom()),
        }
    }
}

pub fn rational_text(r: Rational64) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(text: &str) -> Result<Rational64> {
    let t = text.trim();
    Rational64::from_str(t).map_err(|_| Error::Parse {
        what: "rational",
        text: text.to_string(),
    })
}

/// Radius of convergence: possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Radius {
    Finite(LogNorm),
    Infinite,
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Radius::Infinite => write!(f, "+infinity"),
            Radius::Finite(n) => write!(f, "{n}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_puts_zero_first() {
        let a = LogNorm::from_log_int(-3);
        let b = LogNorm::from_log_int(2);
        assert!(LogNorm::Zero < a);
        assert!(a < b);
        assert_eq!(a.max(b), b);
        assert_eq!(a.mul(b), LogNorm::from_log_int(-1));
        assert_eq!(LogNorm::Zero.mul(b), LogNorm::Zero);
    }

    #[test]
    fn rational_powers() {
        let r1 = LogNorm::from_log_int(-1);
        let v = r1.pow_ratio(Rational64::new(3, 2));
        assert_eq!(v, LogNorm::from_log(Rational64::new(-3, 2)));
        assert_eq!(v.to_log_text().unwrap(), "-3/2");
        assert_eq!(LogNorm::parse_log("-3/2").unwrap(), v);
    }

    #[test]
    fn radius_order() {
        assert!(Radius::Finite(LogNorm::from_log_int(100)) < Radius::Infinite);
    }
}
