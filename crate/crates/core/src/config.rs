//! Run configuration: the prime, the precision, the annulus, the window and the levels.

use std::path::Path;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::annulus::{AnnulusParams, Space};
use crate::error::{Error, Result};
use crate::lognorm::{parse_rational, LogNorm};
use crate::padic::{is_prime, PadicContext};

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Rationals are kept as `"a/b"` text so that files never carry floating point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub p: u32,
    pub precision: i64,
    pub r_log: String,
    /// absent for a disk
    #[serde(default)]
    pub r1_log: Option<String>,
    pub window: (i64, i64),
    #[serde(rename = "order_K")]
    pub order: usize,
    pub eta_log: String,
    #[serde(default)]
    pub eta_prime_log: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for Config {
    /// `p = 5`, `N = 40`, `r = 1`, `r1 = 1/p`, `eta = p^-2`, `K = 30`, window `[-40, 40]`.
    fn default() -> Self {
        Config {
            p: 5,
            precision: 40,
            r_log: "0".into(),
            r1_log: Some("-1".into()),
            window: (-40, 40),
            order: 30,
            eta_log: "-2".into(),
            eta_prime_log: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hard errors for unusable values; the returned strings are advisory.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !is_prime(self.p) || self.p > 97 {
            return Err(Error::Config(format!("p = {} must be a prime at most 97", self.p)));
        }
        if self.precision < 8 {
            return Err(Error::Config(format!("precision {} is below the minimum 8", self.precision)));
        }
        let space = self.space()?;
        let eta = self.eta()?;
        let eta_prime = self.eta_prime()?;
        if eta_prime >= eta {
            return Err(Error::Config("eta_prime must lie below eta".into()));
        }
        let limit = match space.params.inner_log {
            Some(r1) => eta < LogNorm::Finite(r1),
            None => eta <= space.params.r(),
        };
        if !limit {
            return Err(Error::Config(format!("eta = {eta} is not below the inner radius")));
        }
        let mut notes = Vec::new();
        let k = self.order as i64;
        if self.window.1 < k || (!space.params.is_disk() && self.window.0 > -k) {
            notes.push(format!("window [{}, {}] does not contain [-{k}, {k}]", self.window.0, self.window.1));
        }
        Ok(notes)
    }

    /// Digits carried beyond `precision`, so that a coefficient anywhere in the
    /// window keeps `precision` digits relative to the weight of its monomial.
    pub fn guard_digits(&self) -> Result<i64> {
        let params = self.params()?;
        let log_weight = |n: i64| {
            if n < 0 && params.is_disk() {
                return 0;
            }
            params.weight(n).log().map_or(0, |l| l.ceil().to_integer().max(0))
        };
        Ok(log_weight(self.window.0).max(log_weight(self.window.1)))
    }

    /// Context at `precision + guard_digits`.
    pub fn ctx(&self) -> Result<PadicContext> {
        PadicContext::new(self.p, self.precision + self.guard_digits()?)
    }

    pub fn params(&self) -> Result<AnnulusParams> {
        let r = parse_rational(&self.r_log)?;
        match &self.r1_log {
            Some(t) => AnnulusParams::annulus(r, parse_rational(t)?),
            None => Ok(AnnulusParams::disk(r)),
        }
    }

    pub fn space(&self) -> Result<Space> {
        Space::new(self.ctx()?, self.params()?, self.window)
    }

    pub fn eta(&self) -> Result<LogNorm> {
        LogNorm::parse_log(&self.eta_log)
    }

    /// `eta p^(-1/2)` unless configured.
    pub fn eta_prime(&self) -> Result<LogNorm> {
        match &self.eta_prime_log {
            Some(t) => LogNorm::parse_log(t),
            None => Ok(self.eta()?.mul(LogNorm::from_log(Rational64::new(-1, 2)))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let cfg = Config::default();
        assert!(cfg.validate().unwrap().is_empty());
        assert_eq!(cfg.guard_digits().unwrap(), 40);
        assert_eq!(cfg.ctx().unwrap().precision, 80);
        let back: Config = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = Config { p: 6, ..Config::default() };
        assert!(bad.validate().is_err());
        let low = Config { precision: 4, ..Config::default() };
        assert!(low.validate().is_err());
        let wide = Config { eta_log: "-1".into(), ..Config::default() };
        assert!(wide.validate().is_err());
        let narrow = Config { window: (-10, 10), ..Config::default() };
        assert_eq!(narrow.validate().unwrap().len(), 1);
    }
}
