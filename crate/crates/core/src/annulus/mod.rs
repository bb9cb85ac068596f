//! The algebra of analytic functions on a closed annulus `r1 <= |x| <= r`
//! (or a closed disk `|x| <= r`), windowed Laurent expansions and
//! endomorphisms `x -> qx + h`.

mod endo;
mod laurent;

pub use endo::{contractivity_check, endo_validate, AdmissibilityReport, ContractivityReport, Endomorphism, EtaAdmissibility};
pub use laurent::LaurentElement;

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::lognorm::LogNorm;
use crate::padic::PadicContext;

/// Radii as exponents of p: `r = p^outer_log`, `r1 = p^inner_log`; a disk has no inner radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AnnulusParams {
    pub outer_log: Rational64,
    pub inner_log: Option<Rational64>,
}

impl AnnulusParams {
    pub fn annulus(outer_log: Rational64, inner_log: Rational64) -> Result<Self> {
        if inner_log > outer_log {
            return Err(Error::Config(format!(
                "inner radius p^{inner_log} exceeds outer radius p^{outer_log}"
            )));
        }
        Ok(AnnulusParams { outer_log, inner_log: Some(inner_log) })
    }

    pub fn disk(outer_log: Rational64) -> Self {
        AnnulusParams { outer_log, inner_log: None }
    }

    pub fn r(&self) -> LogNorm {
        LogNorm::Finite(self.outer_log)
    }

    /// Inner radius; the zero magnitude for a disk.
    pub fn r1(&self) -> LogNorm {
        self.inner_log.map_or(LogNorm::Zero, LogNorm::Finite)
    }

    pub fn is_disk(&self) -> bool {
        self.inner_log.is_none()
    }

    /// Gauss norm of `x^n`: `r^n` for `n >= 0`, `r1^n` for `n < 0`.
    pub fn weight(&self, n: i64) -> LogNorm {
        let base = if n >= 0 {
            self.outer_log
        } else {
            self.inner_log.expect("negative exponent on a disk")
        };
        LogNorm::Finite(base * Rational64::from_integer(n))
    }
}

/// Everything an element needs to know about where it lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    pub ctx: PadicContext,
    pub params: AnnulusParams,
    pub window: (i64, i64),
}

impl Space {
    pub fn new(ctx: PadicContext, params: AnnulusParams, window: (i64, i64)) -> Result<Self> {
        if window.0 > window.1 {
            return Err(Error::Config(format!("empty window [{}, {}]", window.0, window.1)));
        }
        if params.is_disk() && window.0 < 0 {
            return Err(Error::Config("a disk window cannot contain negative exponents".into()));
        }
        if window.0 > 0 || window.1 < 0 {
            return Err(Error::Config("the window must contain the exponent 0".into()));
        }
        Ok(Space { ctx, params, window })
    }

    pub fn contains(&self, n: i64) -> bool {
        self.window.0 <= n && n <= self.window.1
    }

    pub fn weight(&self, n: i64) -> LogNorm {
        self.params.weight(n)
    }

    pub fn check_window(&self, n: i64) -> Result<()> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(Error::OutsideWindow { exponent: n, min: self.window.0, max: self.window.1 })
        }
    }

    pub(crate) fn same(&self, other: &Space) {
        assert_eq!(self, other, "elements live on different spaces");
    }
}
