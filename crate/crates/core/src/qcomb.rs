//! Quantum integers, factorials and binomials.

use crate::lognorm::LogNorm;
use crate::padic::PadicScalar;

/// `(n)_q = 1 + q + ... + q^(n-1)`.
pub fn qint(n: u64, q: &PadicScalar) -> PadicScalar {
    let ctx = q.ctx();
    let mut acc = ctx.zero();
    let mut pw = ctx.one();
    for _ in 0..n {
        acc = &acc + &pw;
        pw = &pw * q;
    }
    acc
}

/// `(n)_q! = (1)_q (2)_q ... (n)_q`.
pub fn qfact(n: u64, q: &PadicScalar) -> PadicScalar {
    let ctx = q.ctx();
    let mut acc = ctx.one();
    let mut int = ctx.zero();
    let mut pw = ctx.one();
    for _ in 0..n {
        int = &int + &pw;
        pw = &pw * q;
        acc = &acc * &int;
    }
    acc
}

/// Rows `0..=n_max` of the q-Pascal triangle; row `n` has entries for `k = 0..=n`.
pub fn qbinom_table(n_max: usize, q: &PadicScalar) -> Vec<Vec<PadicScalar>> {
    let ctx = q.ctx();
    let mut qpow = vec![ctx.one()];
    for k in 1..=n_max {
        qpow.push(&qpow[k - 1] * q);
    }
    let mut rows: Vec<Vec<PadicScalar>> = vec![vec![ctx.one()]];
    for n in 1..=n_max {
        let prev = &rows[n - 1];
        let mut row = Vec::with_capacity(n + 1);
        row.push(ctx.one());
        for k in 1..=n {
            // (n k) = (n-1 k-1) + q^k (n-1 k), with (n-1 n) = 0
            let left = &prev[k - 1];
            row.push(match prev.get(k) {
                Some(right) => left + &(&qpow[k] * right),
                None => left.clone(),
            });
        }
        rows.push(row);
    }
    rows
}

/// `(n k)_q`, zero when `k > n`.
pub fn qbinom(n: u64, k: u64, q: &PadicScalar) -> PadicScalar {
    if k > n {
        return q.ctx().zero();
    }
    let k = k.min(n - k) as usize;
    // Pascal recurrence restricted to the columns 0..=k
    let ctx = q.ctx();
    let mut qpow = vec![ctx.one()];
    for j in 1..=k.max(n as usize - k) {
        qpow.push(&qpow[j - 1] * q);
    }
    let col = binom_column(n as usize, k, &qpow);
    col.into_iter().nth(k).unwrap()
}

fn binom_column(n: usize, k: usize, qpow: &[PadicScalar]) -> Vec<PadicScalar> {
    let ctx = qpow[0].ctx();
    let mut row = vec![ctx.zero(); k + 1];
    row[0] = ctx.one();
    for m in 1..=n {
        for j in (1..=k.min(m)).rev() {
            let carried = &qpow[j] * &row[j];
            row[j] = &row[j - 1] + &carried;
        }
    }
    row
}

/// `max{1, |q|^(k(n-1))}`, an upper bound for `|(n k)_q|`.
pub fn qbinom_norm_bound(n: u64, k: u64, qnorm: LogNorm) -> LogNorm {
    if k == 0 || n == 0 {
        return LogNorm::ONE;
    }
    let e = (k as i64) * (n as i64 - 1);
    qnorm.powi(e).max(LogNorm::ONE)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QIntReport {
    pub bound: u64,
    pub first_failure: Option<u64>,
}

impl QIntReport {
    pub fn all_units(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks that `(n)_q` is a unit for `1 <= n <= bound`.
pub fn qints_invertible_upto(q: &PadicScalar, bound: u64) -> QIntReport {
    let first_failure = first_failing_qint(q, bound, |v| v.is_unit());
    QIntReport { bound, first_failure }
}

/// Checks that `(n)_q` is nonzero at working precision for `1 <= n <= bound`.
pub fn qints_nonzero_upto(q: &PadicScalar, bound: u64) -> QIntReport {
    let first_failure = first_failing_qint(q, bound, |v| !v.is_negligible());
    QIntReport { bound, first_failure }
}

fn first_failing_qint(q: &PadicScalar, bound: u64, ok: impl Fn(&PadicScalar) -> bool) -> Option<u64> {
    let ctx = q.ctx();
    let mut acc = ctx.zero();
    let mut pw = ctx.one();
    for n in 1..=bound {
        acc = &acc + &pw;
        pw = &pw * q;
        if !ok(&acc) {
            return Some(n);
        }
    }
    None
}
